use std::fmt::Write as _;
use std::fs;

use anyhow::Context as _;
use mixedreg_core::catalog::check_assumptions;
use mixedreg_core::export::meshfield_string;
use mixedreg_core::fracsobolev::{chain_rule_check, product_check, ProductExponents, TrigField};
use mixedreg_core::kkt::{history_csv, objective, project_controls, reduced_gradient, robinson_check, solve_kkt};
use mixedreg_core::regularity::STUDY_FIELDS;
use mixedreg_core::{
    build_mesh, exponents, gagliardo, refinement_study, ControlPair, FEField, FieldRole, FracNormReport, Mesh, Model,
    ProblemSpec, ScalarExpr,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::summary::{Check, Status, Summary, SUMMARY_FILE};
use crate::{ChainRuleArgs, Command, Failure, FracNormArgs, GradientArgs, ProductRuleArgs, RobinsonArgs, StateArgs, SweepArgs};

const FD_STEPS: [f64; 4] = [1e-3, 1e-4, 1e-5, 1e-6];

pub struct Context {
    pub cfg: RunConfig,
    pub summary: Summary,
    pub rng: ChaCha8Rng,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Self {
        let summary = Summary {
            command: cfg.command.to_string(),
            status: Status::Pass,
            exit_code: 0,
            seed: cfg.seed,
            config: cfg.config.as_ref().map(|p| p.display().to_string()),
            levels: [*cfg.levels.start(), *cfg.levels.end()],
            checks: Vec::new(),
            artifacts: Vec::new(),
            error: None,
        };
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Self { cfg, summary, rng }
    }

    fn write(&mut self, name: &str, contents: &str) -> anyhow::Result<()> {
        let dir = &self.cfg.out_dir;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.summary.artifacts.push(name.to_string());
        Ok(())
    }

    pub(crate) fn finish(&mut self) -> anyhow::Result<()> {
        let text = serde_json::to_string_pretty(&self.summary)? + "\n";
        let dir = &self.cfg.out_dir;
        fs::create_dir_all(dir)?;
        fs::write(dir.join(SUMMARY_FILE), text)?;
        Ok(())
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, value: Option<f64>, threshold: Option<f64>, detail: Option<String>) {
        self.summary.checks.push(Check { name: name.into(), passed, value, threshold, detail });
    }

    fn check_le(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.check(name, value <= threshold, Some(value), Some(threshold), None);
    }

    fn check_ge(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.check(name, value >= threshold, Some(value), Some(threshold), None);
    }

    fn single_level(&self) -> anyhow::Result<usize> {
        let l = &self.cfg.levels;
        if l.start() != l.end() {
            return Err(Failure::Config(format!("{} takes a single level, got {}..{}", self.cfg.command, l.start(), l.end())).into());
        }
        Ok(*l.start())
    }

    fn model(&self, spec: &ProblemSpec, level: usize) -> anyhow::Result<Model> {
        Ok(Model::new(spec.clone(), level)?.with_newton_tol(self.cfg.newton_tol)?)
    }

    fn random_field(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.rng.gen_range(-1.0..1.0)).collect()
    }
}

pub fn dispatch(cmd: &Command, ctx: &mut Context) -> anyhow::Result<()> {
    match cmd {
        Command::Check { samples } => check(ctx, *samples),
        Command::SolveState(a) => solve_state(ctx, a),
        Command::GradientCheck(a) => gradient_check(ctx, a),
        Command::SolveKkt => solve_kkt_cmd(ctx),
        Command::Robinson(a) => robinson(ctx, a),
        Command::FracNorm(a) => frac_norm(ctx, a),
        Command::ChainRule(a) => chain_rule(ctx, a),
        Command::ProductRule(a) => product_rule(ctx, a),
        Command::Regularity { expect_divergence } => regularity(ctx, *expect_divergence),
        Command::Exponents { n, p, q } => exponents_cmd(ctx, *n, *p, *q),
    }
}

fn expr(arg: &str, src: &str) -> anyhow::Result<ScalarExpr> {
    ScalarExpr::parse(src).map_err(|e| Failure::Config(format!("--{arg}: {e}")).into())
}

/// Nodal interpolant of `e(x, 0)`.
fn interpolate(mesh: &Mesh, role: FieldRole, e: &ScalarExpr) -> anyhow::Result<FEField> {
    let pts = match role {
        FieldRole::Domain => mesh.vertices().to_vec(),
        FieldRole::Boundary => mesh.boundary_points(),
    };
    let values = pts.iter().map(|&x| e.eval(x, 0.0)).collect::<mixedreg_core::Result<Vec<f64>>>()?;
    Ok(match role {
        FieldRole::Domain => FEField::domain(values),
        FieldRole::Boundary => FEField::boundary(values),
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Up to twelve decimals, trailing zeros dropped.
fn short(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

fn json<T: Serialize>(v: &T) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

// ---- check ------------------------------------------------------------------

fn check(ctx: &mut Context, samples: usize) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let report = check_assumptions(&spec, samples)?;
    ctx.write("assumptions.json", &json(&report)?)?;
    for c in &report.checks {
        let detail = c.witness.as_ref().map(|w| format!("witness x=({}, {}) value={} observed={}", w.x[0], w.x[1], w.value, w.observed));
        ctx.check(format!("assumption.{}", c.id), c.passed, None, None, detail);
    }
    let failed: Vec<&str> = report.failures().map(|c| c.id).collect();
    if !failed.is_empty() {
        for c in report.failures() {
            eprintln!("violated {}: {}", c.id, c.description);
            if let Some(w) = &c.witness {
                eprintln!("  witness x = ({}, {}), value = {}, observed = {}", w.x[0], w.x[1], w.value, w.observed);
            }
        }
        return Err(Failure::Config(format!("assumptions violated: {}", failed.join(", "))).into());
    }
    println!("all {} assumption checks passed", report.checks.len());
    Ok(())
}

// ---- exponents --------------------------------------------------------------

fn exponents_cmd(ctx: &mut Context, n: Option<f64>, p: Option<f64>, q: Option<f64>) -> anyhow::Result<()> {
    let (n, p, q) = match (n, p, q) {
        (Some(n), Some(p), Some(q)) => (n, p, q),
        _ => {
            let spec = ctx.cfg.load_spec()?;
            (n.unwrap_or(spec.dimension), p.unwrap_or(spec.p), q.unwrap_or(spec.q))
        }
    };
    let t = exponents(n, p, q)?;
    println!("r={}, s={}, slack={}", short(t.r), short(t.s), short(t.conjugacy_slack));
    ctx.write("exponents.json", &json(&t)?)?;
    ctx.write(
        "exponents.csv",
        &format!("N,p,q,r,s,slack\n{:e},{:e},{:e},{:e},{:e},{:e}\n", t.n, t.p, t.q, t.r, t.s, t.conjugacy_slack),
    )?;
    ctx.check("conjugacy_slack_positive", t.conjugacy_slack > 0.0, Some(t.conjugacy_slack), Some(0.0), None);
    Ok(())
}

// ---- solve-state ------------------------------------------------------------

#[derive(Serialize)]
struct StateRow {
    level: usize,
    h: f64,
    dofs: usize,
    newton_iterations: usize,
    final_residual: f64,
    c_infinity_ratio: f64,
    l2_error: Option<f64>,
    max_error: Option<f64>,
    residual_history: Vec<f64>,
}

fn solve_state(ctx: &mut Context, a: &StateArgs) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let (ue, ve) = (expr("u", &a.u)?, expr("v", &a.v)?);
    let exact = a.exact.as_deref().map(|s| expr("exact", s)).transpose()?;
    let mut rows = Vec::new();
    let mut last = None;
    for level in ctx.cfg.levels.clone() {
        let m = ctx.model(&spec, level)?;
        let u = interpolate(m.mesh(), FieldRole::Domain, &ue)?;
        let v = interpolate(m.mesh(), FieldRole::Boundary, &ve)?;
        let rep = m.solve_state(&u, &v, None)?;
        let (l2_error, max_error) = match &exact {
            Some(e) => {
                let space = m.space();
                let yq = space.at_quadrature(&rep.state.values);
                let mut sq = Vec::with_capacity(yq.len());
                for (&x, y) in space.quadrature_points().iter().zip(&yq) {
                    sq.push((y - e.eval(x, 0.0)?).powi(2));
                }
                let mut max: f64 = 0.0;
                for (&x, y) in m.mesh().vertices().iter().zip(&rep.state.values) {
                    max = max.max((y - e.eval(x, 0.0)?).abs());
                }
                (Some(space.integrate(&sq).sqrt()), Some(max))
            }
            None => (None, None),
        };
        rows.push(StateRow {
            level,
            h: m.mesh().mesh_size(),
            dofs: m.space().n(),
            newton_iterations: rep.newton_iterations,
            final_residual: rep.final_residual,
            c_infinity_ratio: rep.c_infinity_ratio,
            l2_error,
            max_error,
            residual_history: rep.residual_history.clone(),
        });
        last = Some((m, rep.state));
    }
    let mut csv = String::from("level,h,dofs,newton_iterations,final_residual,c_infinity_ratio");
    if exact.is_some() {
        csv += ",l2_error,max_error";
    }
    csv.push('\n');
    for r in &rows {
        write!(csv, "{},{:e},{},{},{:e},{:e}", r.level, r.h, r.dofs, r.newton_iterations, r.final_residual, r.c_infinity_ratio)?;
        if let (Some(a), Some(b)) = (r.l2_error, r.max_error) {
            write!(csv, ",{a:e},{b:e}")?;
        }
        csv.push('\n');
    }
    ctx.write("state_levels.csv", &csv)?;
    ctx.write("state_report.json", &json(&rows)?)?;
    if let Some((m, y)) = &last {
        ctx.write("state.meshfield", &meshfield_string(m.mesh(), y)?)?;
    }
    let newton = rows.iter().map(|r| r.newton_iterations).max().unwrap_or(0);
    ctx.check_le("newton_iterations", newton as f64, a.max_newton as f64);
    if exact.is_some() && rows.len() >= 2 {
        let (f, l) = (&rows[0], &rows[rows.len() - 1]);
        let rate = |ea: f64, eb: f64| (ea / eb).ln() / (f.h / l.h).ln();
        let (o2, om) = (rate(f.l2_error.unwrap(), l.l2_error.unwrap()), rate(f.max_error.unwrap(), l.max_error.unwrap()));
        println!("observed orders: L2 {o2:.3}, max {om:.3}");
        ctx.check_ge("l2_order", o2, a.min_order);
        ctx.check_ge("max_order", om, a.min_order);
    }
    Ok(())
}

// ---- gradient-check ---------------------------------------------------------

fn gradient_check(ctx: &mut Context, a: &GradientArgs) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let m = ctx.model(&spec, ctx.single_level()?)?;
    let u = interpolate(m.mesh(), FieldRole::Domain, &expr("u", &a.u)?)?;
    let v = interpolate(m.mesh(), FieldRole::Boundary, &expr("v", &a.v)?)?;
    let g = reduced_gradient(&m, &u, &v)?;
    let j = |uu: &FEField, vv: &FEField| -> anyhow::Result<f64> {
        let y = m.solve_state(uu, vv, Some(&g.y.values))?.state;
        Ok(objective(&m, &y, uu, vv)?)
    };
    let shift = |f: &FEField, d: &FEField, s: f64| FEField {
        role: f.role,
        values: f.values.iter().zip(&d.values).map(|(a, b)| a + s * b).collect(),
    };
    let mut csv = String::from("direction,step,fd,adjoint,rel_error\n");
    let mut worst: f64 = 0.0;
    for d in 0..a.directions {
        let ut = FEField::domain(ctx.random_field(u.len()));
        let vt = FEField::boundary(ctx.random_field(v.len()));
        let exact = g.pair(&m, &ut, &vt);
        let mut best = f64::INFINITY;
        for t in FD_STEPS {
            let fd = (j(&shift(&u, &ut, t), &shift(&v, &vt, t))? - j(&shift(&u, &ut, -t), &shift(&v, &vt, -t))?) / (2.0 * t);
            let rel = (fd - exact).abs() / exact.abs();
            writeln!(csv, "{d},{t:e},{fd:e},{exact:e},{rel:e}")?;
            best = best.min(rel);
        }
        worst = worst.max(best);
    }
    ctx.write("gradient_check.csv", &csv)?;
    println!("objective {:e}, worst best-step relative error {worst:e}", g.objective);
    ctx.check_le("gradient_fd_agreement", worst, a.tol);
    Ok(())
}

// ---- solve-kkt --------------------------------------------------------------

fn solve_kkt_cmd(ctx: &mut Context) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let m = ctx.model(&spec, ctx.single_level()?)?;
    let sol = solve_kkt(&m, &ControlPair::zeros(&m), &ctx.cfg.kkt_options())?;
    let (r, s) = (&sol.report, &sol.state);
    ctx.write("kkt_report.json", &(r.to_json() + "\n"))?;
    ctx.write("kkt_history.csv", &history_csv(&sol.history))?;
    let fields = [&s.y, &s.u, &s.phi, &s.psi1, &s.v, &s.psi2];
    for (name, f) in STUDY_FIELDS.iter().zip(fields) {
        ctx.write(&format!("{name}.meshfield"), &meshfield_string(m.mesh(), f)?)?;
    }
    let tol = ctx.cfg.kkt_tol;
    for (name, v) in [
        ("stationarity_u", r.stationarity_u),
        ("stationarity_v", r.stationarity_v),
        ("complementarity_u", r.complementarity_u),
        ("complementarity_v", r.complementarity_v),
        ("feasibility_u", r.feasibility_u),
        ("feasibility_v", r.feasibility_v),
        ("state_residual", r.state_residual),
        ("adjoint_residual", r.adjoint_residual),
    ] {
        ctx.check_le(format!("residual.{name}"), v, tol);
    }
    let p = project_controls(&m, &s.y, &s.phi)?;
    let gap = max_abs_diff(&p.u.values, &s.u.values).max(max_abs_diff(&p.v.values, &s.v.values));
    ctx.check_le("projection_fixed_point", gap, 10.0 * tol);
    println!(
        "objective {:e}, {} iterations, max residual {:e}, active nodes {} (domain) {} (boundary)",
        r.objective,
        r.iterations,
        r.max_residual(),
        r.active_domain_count,
        r.active_boundary_count
    );
    if !r.converged {
        return Err(Failure::Solver(format!(
            "optimality system not solved after {} iterations, max residual {:e}",
            r.iterations,
            r.max_residual()
        ))
        .into());
    }
    Ok(())
}

// ---- robinson ---------------------------------------------------------------

fn robinson(ctx: &mut Context, a: &RobinsonArgs) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let m = ctx.model(&spec, ctx.single_level()?)?;
    let z = ControlPair {
        u: interpolate(m.mesh(), FieldRole::Domain, &expr("u", &a.u)?)?,
        v: interpolate(m.mesh(), FieldRole::Boundary, &expr("v", &a.v)?)?,
    };
    let mut csv = String::from("target,residual\n");
    let mut worst: f64 = 0.0;
    for i in 0..a.targets {
        let z0 = ControlPair {
            u: FEField::domain(ctx.random_field(z.u.len())),
            v: FEField::boundary(ctx.random_field(z.v.len())),
        };
        let r = robinson_check(&m, &z, &z0)?;
        writeln!(csv, "{i},{r:e}")?;
        worst = worst.max(r);
    }
    ctx.write("robinson.csv", &csv)?;
    println!("largest residual over {} targets: {worst:e}", a.targets);
    ctx.check_le("robinson_residual", worst, a.tol);
    Ok(())
}

// ---- frac-norm --------------------------------------------------------------

fn frac_norm(ctx: &mut Context, a: &FracNormArgs) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let e = expr("field", &a.field)?;
    let mut reports: Vec<FracNormReport> = Vec::new();
    let mut finest = None;
    for level in ctx.cfg.levels.clone() {
        let mesh = build_mesh(spec.preset, level)?;
        let v = interpolate(&mesh, FieldRole::Boundary, &e)?;
        reports.push(gagliardo(&mesh, &v, a.tau, a.k)?);
        finest = Some((mesh, v));
    }
    let mut csv = String::from(FracNormReport::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv += &r.csv_row();
        csv.push('\n');
    }
    ctx.write("frac_norm.csv", &csv)?;
    ctx.write("frac_norm.json", &json(&reports)?)?;
    let last = reports.last().expect("nonempty level range");
    ctx.check("seminorm_finite", reports.iter().all(|r| r.seminorm_i.is_finite()), Some(last.seminorm_i), None, None);
    if let Some((mesh, v)) = finest {
        let s = ctx.rng.gen_range(0.5..3.0);
        let scaled = gagliardo(&mesh, &v.map(|x| s * x), a.tau, a.k)?.seminorm_i;
        let expected = s.powf(a.k) * last.seminorm_i;
        let rel = if expected == 0.0 { scaled.abs() } else { (scaled - expected).abs() / expected };
        ctx.check_le("homogeneity", rel, 1e-12);
    }
    if let Some(reference) = a.reference {
        let rel = (last.seminorm_i - reference).abs() / reference.abs();
        ctx.check_le("reference_agreement", rel, a.rel_tol);
    }
    println!("seminorm at level {}: {:e}", last.quadrature_level, last.seminorm_i);
    Ok(())
}

// ---- chain-rule / product-rule ----------------------------------------------

/// Evaluate `measure` for every sample on every level, write the CSVs and add
/// the finiteness and refinement-stability checks.
fn sweep(
    ctx: &mut Context,
    name: &str,
    s: &SweepArgs,
    draws: usize,
    measure: impl Fn(&Mesh, &[FEField]) -> anyhow::Result<(f64, f64, f64)>,
) -> anyhow::Result<()> {
    if s.fields == 0 || !(s.amplitude > 0.0) {
        return Err(Failure::Config("--fields and --amplitude must be positive".into()).into());
    }
    let spec = ctx.cfg.load_spec()?;
    // Drawn once so that every level sees the same functions.
    let samples: Vec<Vec<TrigField>> = (0..s.fields)
        .map(|_| (0..draws).map(|_| TrigField::sample(&mut ctx.rng, s.amplitude)).collect())
        .collect();
    let mut csv = String::from("level,sample,lhs,rhs,ratio\n");
    let mut maxima = Vec::new();
    let mut finite = true;
    for level in ctx.cfg.levels.clone() {
        let mesh = build_mesh(spec.preset, level)?;
        let mut worst: f64 = 0.0;
        for (i, fs) in samples.iter().enumerate() {
            let fields: Vec<FEField> = fs.iter().map(|f| f.on_boundary(&mesh)).collect();
            let (lhs, rhs, ratio) = measure(&mesh, &fields)?;
            writeln!(csv, "{level},{i},{lhs:e},{rhs:e},{ratio:e}")?;
            finite &= ratio.is_finite();
            worst = worst.max(ratio);
        }
        maxima.push((level, worst));
    }
    ctx.write(&format!("{name}.csv"), &csv)?;
    let mut levels_csv = String::from("level,max_ratio\n");
    for (l, r) in &maxima {
        writeln!(levels_csv, "{l},{r:e}")?;
    }
    ctx.write(&format!("{name}_levels.csv"), &levels_csv)?;
    ctx.check("ratios_finite", finite, None, None, None);
    if let [.., (_, a), (_, b)] = maxima.as_slice() {
        ctx.check_le("max_ratio_stability", (b / a - 1.0).abs(), s.stability);
    }
    for (l, r) in &maxima {
        println!("level {l}: largest ratio {r:e}");
    }
    Ok(())
}

fn chain_rule(ctx: &mut Context, a: &ChainRuleArgs) -> anyhow::Result<()> {
    let outer = expr("a", &a.a)?;
    let (tau, k) = (a.tau, a.k);
    sweep(ctx, "chain_rule", &a.sweep, 1, |mesh, f| {
        let r = chain_rule_check(mesh, &outer, &f[0], tau, k)?;
        Ok((r.lhs, r.rhs_sans_c, r.ratio))
    })
}

fn product_rule(ctx: &mut Context, a: &ProductRuleArgs) -> anyhow::Result<()> {
    let e = ProductExponents { tau: a.tau, tau1: a.tau1, tau2: a.tau2, k: a.k, k1: a.k1, k2: a.k2 };
    e.validate()?;
    sweep(ctx, "product_rule", &a.sweep, 2, |mesh, f| {
        let r = product_check(mesh, &f[0], &f[1], &e)?;
        Ok((r.lhs, r.rhs_sans_c, r.ratio))
    })
}

// ---- regularity -------------------------------------------------------------

fn regularity(ctx: &mut Context, expect_divergence: bool) -> anyhow::Result<()> {
    let spec = ctx.cfg.load_spec()?;
    let st = refinement_study(&spec, ctx.cfg.levels.clone(), &ctx.cfg.kkt_options())?;
    ctx.write("regularity.csv", &st.csv())?;
    let mut solves = String::from("level,iterations,converged,max_residual,active_domain,active_boundary\n");
    for s in &st.solves {
        writeln!(
            solves,
            "{},{},{},{:e},{},{}",
            s.level, s.iterations, s.converged, s.max_residual, s.active_domain, s.active_boundary
        )?;
    }
    ctx.write("regularity_solves.csv", &solves)?;
    let mut ladder = String::from("field,level,k,seminorm\n");
    for r in &st.reports {
        for row in &r.rows {
            for (k, i) in &row.ladder {
                writeln!(ladder, "{},{},{k},{i:e}", r.field, row.level)?;
            }
        }
    }
    ctx.write("regularity_ladder.csv", &ladder)?;
    ctx.write("regularity.json", &json(&st)?)?;
    if let Some(f) = &st.failure {
        return Err(Failure::Solver(f.clone()).into());
    }
    for r in &st.reports {
        println!("{:>5}: lip growth {:?}, stabilized {}, diverging {}", r.field, r.growth, r.stabilized, r.diverging);
    }
    if expect_divergence {
        let growth = st.reports.iter().filter_map(|r| r.growth).fold(0.0, f64::max);
        ctx.check("divergence_detected", st.any_diverging(), Some(growth), Some(mixedreg_core::regularity::DIVERGENCE_RATIO), None);
        return Ok(());
    }
    for r in &st.reports {
        let change = match r.rows.as_slice() {
            [.., a, b] if a.lip.max(b.lip) > 0.0 => (b.lip - a.lip).abs() / a.lip.max(b.lip),
            _ => 0.0,
        };
        ctx.check(
            format!("stabilized.{}", r.field),
            r.stabilized,
            Some(change),
            Some(mixedreg_core::regularity::STABLE_CHANGE),
            None,
        );
    }
    let active = st.solves.iter().map(|s| s.active_domain + s.active_boundary).min().unwrap_or(0);
    ctx.check_ge("active_region", active as f64, 1.0);
    Ok(())
}
