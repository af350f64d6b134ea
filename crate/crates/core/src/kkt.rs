//! Objective, reduced gradient, constraint maps, multipliers, projection
//! formulas, KKT residuals and a damped fixed-point solver.

use serde::Serialize;

use crate::catalog::{robinson_coefficient, Direction, ProblemSpec};
use crate::error::{Error, Result};
use crate::fem::{bicgstab, max_abs, FEField, FieldRole};
use crate::pde::{exponents, ExponentTable, Model};

pub const DEFAULT_KKT_TOL: f64 = 1e-7;
pub const DEFAULT_DAMPING: f64 = 0.5;
/// Floor for the automatic damping reduction.
pub const MIN_DAMPING: f64 = 1.0 / 1024.0;
pub const DEFAULT_STEP_TOL: f64 = 1e-9;
pub const ACTIVE_TOL_BASE: f64 = 1e-8;

/// Domain and boundary controls.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlPair {
    pub u: FEField,
    pub v: FEField,
}

impl ControlPair {
    pub fn zeros(model: &Model) -> Self {
        Self {
            u: FEField::constant(model.mesh(), FieldRole::Domain, 0.0),
            v: FEField::constant(model.mesh(), FieldRole::Boundary, 0.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct KKTState {
    pub y: FEField,
    pub u: FEField,
    pub phi: FEField,
    pub psi1: FEField,
    pub v: FEField,
    pub psi2: FEField,
    pub active_domain: Vec<bool>,
    pub active_boundary: Vec<bool>,
}

impl KKTState {
    pub fn controls(&self) -> ControlPair {
        ControlPair { u: self.u.clone(), v: self.v.clone() }
    }
}

/// Max-norm residuals of the optimality system.
#[derive(Clone, Debug, Serialize)]
pub struct KKTReport {
    pub objective: f64,
    pub stationarity_u: f64,
    pub stationarity_v: f64,
    pub complementarity_u: f64,
    pub complementarity_v: f64,
    pub feasibility_u: f64,
    pub feasibility_v: f64,
    pub state_residual: f64,
    pub adjoint_residual: f64,
    pub exponents: ExponentTable,
    pub iterations: usize,
    pub converged: bool,
    pub kkt_tol: f64,
    pub active_tol: f64,
    pub active_domain_count: usize,
    pub active_boundary_count: usize,
}

impl KKTReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.stationarity_u,
            self.stationarity_v,
            self.complementarity_u,
            self.complementarity_v,
            self.feasibility_u,
            self.feasibility_v,
            self.state_residual,
            self.adjoint_residual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    /// Flat key-value JSON document.
    pub fn to_json(&self) -> String {
        let mut map = serde_json::Map::new();
        let v = serde_json::to_value(self).expect("report serializes");
        for (k, val) in v.as_object().expect("object") {
            if let Some(inner) = val.as_object() {
                for (ik, iv) in inner {
                    map.insert(format!("{k}.{ik}"), iv.clone());
                }
            } else {
                map.insert(k.clone(), val.clone());
            }
        }
        serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("json")
    }
}

/// One row of the iteration log.
#[derive(Clone, Debug, Serialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub obj: f64,
    pub stat_u: f64,
    pub stat_v: f64,
    pub comp_u: f64,
    pub comp_v: f64,
    pub feas_u: f64,
    pub feas_v: f64,
}

pub const HISTORY_HEADER: &str = "iter,obj,stat_u,stat_v,comp_u,comp_v,feas_u,feas_v";

pub fn history_csv(rows: &[HistoryRow]) -> String {
    let mut s = String::from(HISTORY_HEADER);
    s.push('\n');
    for r in rows {
        s += &format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.iter, r.obj, r.stat_u, r.stat_v, r.comp_u, r.comp_v, r.feas_u, r.feas_v
        );
    }
    s
}

#[derive(Clone, Debug)]
pub struct KktOptions {
    pub damping: f64,
    pub max_iter: usize,
    pub kkt_tol: f64,
    pub step_tol: f64,
    /// Base of the scaled active-set tolerance.
    pub active_tol: f64,
}

impl Default for KktOptions {
    fn default() -> Self {
        Self {
            damping: DEFAULT_DAMPING,
            max_iter: 500,
            kkt_tol: DEFAULT_KKT_TOL,
            step_tol: DEFAULT_STEP_TOL,
            active_tol: ACTIVE_TOL_BASE,
        }
    }
}

/// `∫_Ω L + Δ₁-potential(u) + ∫_Γ ℓ + Δ₂-potential(v)` by quadrature.
pub fn objective(model: &Model, y: &FEField, u: &FEField, v: &FEField) -> Result<f64> {
    let spec = model.spec();
    let space = model.space();
    y.check(model.mesh(), FieldRole::Domain)?;
    u.check(model.mesh(), FieldRole::Domain)?;
    v.check(model.mesh(), FieldRole::Boundary)?;
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let lq = model.eval_domain_q(&spec.cost_domain, &y.values)?;
    let uq = space.at_quadrature(&u.values);
    let dom: Vec<f64> = lq.iter().zip(&uq).map(|(l, &t)| l + d1.potential(t)).collect();
    let yb = space.restrict_boundary(&y.values);
    let lb = model.eval_boundary_q(&spec.cost_boundary, &yb)?;
    let vq = space.at_boundary_quadrature(&v.values);
    let bnd: Vec<f64> = lb.iter().zip(&vq).map(|(l, &t)| l + d2.potential(t)).collect();
    Ok(space.integrate(&dom) + space.integrate_boundary(&bnd))
}

/// Reduced objective and its gradient at a control pair.
#[derive(Clone, Debug)]
pub struct GradientEvaluation {
    pub objective: f64,
    pub y: FEField,
    pub phi: FEField,
    /// Representative with respect to the discrete `L²(Ω)` pairing.
    pub gu: FEField,
    /// Representative with respect to the discrete `L²(Γ)` pairing.
    pub gv: FEField,
}

impl GradientEvaluation {
    /// `⟨gu, ũ⟩_Ω + ⟨gv, ṽ⟩_Γ` with the mass-matrix pairings.
    pub fn pair(&self, model: &Model, ut: &FEField, vt: &FEField) -> f64 {
        let s = model.space();
        s.mass().bilinear(&self.gu.values, &ut.values) + s.boundary_mass().bilinear(&self.gv.values, &vt.values)
    }
}

/// Adjoint-based gradient of the discrete reduced objective.
pub fn reduced_gradient(model: &Model, u: &FEField, v: &FEField) -> Result<GradientEvaluation> {
    let spec = model.spec();
    let space = model.space();
    let y = model.solve_state(u, v, None)?.state;
    let load = cost_load(model, &y.values)?;
    let phi = model.solve_adjoint_load(&y, &load)?;
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let du: Vec<f64> = space.at_quadrature(&u.values).into_iter().map(|t| d1.eval(t)).collect();
    let ru = crate::fem::solve_linear(space.mass(), &space.load(&du))?;
    let dv: Vec<f64> = space.at_boundary_quadrature(&v.values).into_iter().map(|t| d2.eval(t)).collect();
    let rv_dom = space.boundary_load(&dv);
    let rv = crate::fem::solve_linear(space.boundary_mass(), &space.restrict_boundary(&rv_dom))?;
    let gphi = space.restrict_boundary(&phi);
    let gu = phi.iter().zip(&ru).map(|(a, b)| a + b).collect();
    let gv = gphi.iter().zip(&rv).map(|(a, b)| a + b).collect();
    let objective = objective(model, &y, u, v)?;
    Ok(GradientEvaluation { objective, y, phi: FEField::domain(phi), gu: FEField::domain(gu), gv: FEField::boundary(gv) })
}

/// Exact quadrature load of `L'_y` and `ℓ'_y`.
fn cost_load(model: &Model, y: &[f64]) -> Result<Vec<f64>> {
    let space = model.space();
    let lq = model.eval_domain_q(&model.derived.l_y, y)?;
    let lb = model.eval_boundary_q(&model.derived.ell_y, &space.restrict_boundary(y))?;
    let mut load = space.load(&lq);
    let bl = space.boundary_load(&lb);
    load.iter_mut().zip(&bl).for_each(|(a, b)| *a += b);
    Ok(load)
}

/// Nodal bounds `H₁(-g₁(·, y))` and `H₂(-g₂(·, γy))`.
pub fn control_bounds(model: &Model, y: &FEField) -> Result<(Vec<f64>, Vec<f64>)> {
    let spec = model.spec();
    let g1 = model.eval_nodal(&spec.g1, &y.values)?;
    let yb = model.space().restrict_boundary(&y.values);
    let g2 = model.eval_nodal_boundary(&spec.g2, &yb)?;
    let b1 = g1.iter().map(|g| spec.zeta1.inverse(-g)).collect::<Result<_>>()?;
    let b2 = g2.iter().map(|g| spec.zeta2.inverse(-g)).collect::<Result<_>>()?;
    Ok((b1, b2))
}

/// `G₁ = u - H₁(-g₁(·, y))`, `G₂ = v - H₂(-g₂(·, y))`.
pub fn constraint_values(model: &Model, y: &FEField, u: &FEField, v: &FEField) -> Result<(FEField, FEField)> {
    u.check(model.mesh(), FieldRole::Domain)?;
    v.check(model.mesh(), FieldRole::Boundary)?;
    let (b1, b2) = control_bounds(model, y)?;
    Ok((
        FEField::domain(u.values.iter().zip(&b1).map(|(a, b)| a - b).collect()),
        FEField::boundary(v.values.iter().zip(&b2).map(|(a, b)| a - b).collect()),
    ))
}

/// Nodal mixed-constraint values `ζ₁(u) + g₁(·, y)` and `ζ₂(v) + g₂(·, y)`.
fn mixed_values(model: &Model, y: &FEField, u: &FEField, v: &FEField) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let spec = model.spec();
    let g1 = model.eval_nodal(&spec.g1, &y.values)?;
    let yb = model.space().restrict_boundary(&y.values);
    let g2 = model.eval_nodal_boundary(&spec.g2, &yb)?;
    let scale = max_abs(&g1).max(max_abs(&g2)).max(1.0);
    let c1 = u.values.iter().zip(&g1).map(|(&t, g)| Ok(spec.zeta1.eval(t)? + g)).collect::<Result<_>>()?;
    let c2 = v.values.iter().zip(&g2).map(|(&t, g)| Ok(spec.zeta2.eval(t)? + g)).collect::<Result<_>>()?;
    Ok((c1, c2, scale))
}

/// Active masks and the scaled tolerance used to build them.
pub fn active_sets(
    model: &Model,
    y: &FEField,
    u: &FEField,
    v: &FEField,
    base_tol: f64,
) -> Result<(Vec<bool>, Vec<bool>, f64)> {
    let (c1, c2, scale) = mixed_values(model, y, u, v)?;
    let tol = base_tol * scale;
    Ok((
        c1.iter().map(|c| c.abs() <= tol).collect(),
        c2.iter().map(|c| c.abs() <= tol).collect(),
        tol,
    ))
}

/// Multipliers from the adjoint state on the active sets; zero elsewhere.
pub struct Multipliers {
    pub psi1: FEField,
    pub psi2: FEField,
    pub active_domain: Vec<bool>,
    pub active_boundary: Vec<bool>,
    pub active_tol: f64,
}

pub fn multipliers_from_phi(
    model: &Model,
    y: &FEField,
    u: &FEField,
    v: &FEField,
    phi: &FEField,
    base_tol: f64,
) -> Result<Multipliers> {
    let (ad, ab, tol) = active_sets(model, y, u, v, base_tol)?;
    let (psi1, psi2) = multipliers_on(model, y, u, v, phi, &ad, &ab)?;
    Ok(Multipliers { psi1, psi2, active_domain: ad, active_boundary: ab, active_tol: tol })
}

fn multipliers_on(
    model: &Model,
    y: &FEField,
    u: &FEField,
    v: &FEField,
    phi: &FEField,
    ad: &[bool],
    ab: &[bool],
) -> Result<(FEField, FEField)> {
    let spec = model.spec();
    let (b1, b2) = control_bounds(model, y)?;
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let gphi = model.space().restrict_boundary(&phi.values);
    let mut psi1 = vec![0.0; u.len()];
    for i in 0..u.len() {
        if ad[i] {
            psi1[i] = -(phi.values[i] + d1.eval(b1[i])) / spec.zeta1.derivative(u.values[i])?;
        }
    }
    let mut psi2 = vec![0.0; v.len()];
    for i in 0..v.len() {
        if ab[i] {
            psi2[i] = -(gphi[i] + d2.eval(b2[i])) / spec.zeta2.derivative(v.values[i])?;
        }
    }
    Ok((FEField::domain(psi1), FEField::boundary(psi2)))
}

fn require_increasing(spec: &ProblemSpec) -> Result<()> {
    let case = (spec.zeta1.direction, spec.zeta2.direction);
    if case != (Direction::Increasing, Direction::Increasing) {
        return Err(Error::Precondition(format!(
            "only strictly increasing zeta1, zeta2 are solved; got ({:?}, {:?})",
            case.0, case.1
        )));
    }
    Ok(())
}

/// `u = min(Δ₁⁻¹(-φ), H₁(-g₁))`, `v = min(Δ₂⁻¹(-γφ), H₂(-g₂))`, nodal.
pub fn project_controls(model: &Model, y: &FEField, phi: &FEField) -> Result<ControlPair> {
    Ok(project_with_masks(model, y, phi)?.0)
}

/// Projection plus the nodes where the bound is attained.
fn project_with_masks(model: &Model, y: &FEField, phi: &FEField) -> Result<(ControlPair, Vec<bool>, Vec<bool>)> {
    let spec = model.spec();
    require_increasing(spec)?;
    let (b1, b2) = control_bounds(model, y)?;
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let gphi = model.space().restrict_boundary(&phi.values);
    let w1: Vec<f64> = phi.values.iter().map(|&p| d1.inverse(-p)).collect();
    let w2: Vec<f64> = gphi.iter().map(|&p| d2.inverse(-p)).collect();
    let u = w1.iter().zip(&b1).map(|(&w, &b)| project(w, b)).collect();
    let v = w2.iter().zip(&b2).map(|(&w, &b)| project(w, b)).collect();
    let m1 = w1.iter().zip(&b1).map(|(w, b)| w >= b).collect();
    let m2 = w2.iter().zip(&b2).map(|(w, b)| w >= b).collect();
    Ok((ControlPair { u: FEField::domain(u), v: FEField::boundary(v) }, m1, m2))
}

/// `proj_(-∞,0](ω - b) + b`.
pub fn project(omega: f64, b: f64) -> f64 {
    (omega - b).min(0.0) + b
}

/// Residuals of the optimality system at a state.
pub fn kkt_residual(model: &Model, state: &KKTState, kkt_tol: f64) -> Result<KKTReport> {
    let spec = model.spec();
    let space = model.space();
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let (u, v, y, phi) = (&state.u.values, &state.v.values, &state.y.values, &state.phi.values);
    let gphi = space.restrict_boundary(phi);
    let mut stat_u: f64 = 0.0;
    for i in 0..u.len() {
        let r = d1.eval(u[i]) + phi[i] + spec.zeta1.derivative(u[i])? * state.psi1.values[i];
        stat_u = stat_u.max(r.abs());
    }
    let mut stat_v: f64 = 0.0;
    for i in 0..v.len() {
        let r = d2.eval(v[i]) + gphi[i] + spec.zeta2.derivative(v[i])? * state.psi2.values[i];
        stat_v = stat_v.max(r.abs());
    }
    let (c1, c2, scale) = mixed_values(model, &state.y, &state.u, &state.v)?;
    let comp_u = c1.iter().zip(&state.psi1.values).fold(0.0f64, |m, (c, p)| m.max((c * p).abs()));
    let comp_v = c2.iter().zip(&state.psi2.values).fold(0.0f64, |m, (c, p)| m.max((c * p).abs()));
    let (g1, g2) = constraint_values(model, &state.y, &state.u, &state.v)?;
    let feas_u = g1.values.iter().fold(0.0f64, |m, g| m.max(*g));
    let feas_v = g2.values.iter().fold(0.0f64, |m, g| m.max(*g));
    let load = model.control_load(u, v);
    let state_residual = max_abs(&model.state_residual(y, &load)?);
    let adjoint_residual = max_abs(&adjoint_residual_vector(model, state)?);
    let objective = objective(model, &state.y, &state.u, &state.v)?;
    let mut report = KKTReport {
        objective,
        stationarity_u: stat_u,
        stationarity_v: stat_v,
        complementarity_u: comp_u,
        complementarity_v: comp_v,
        feasibility_u: feas_u,
        feasibility_v: feas_v,
        state_residual,
        adjoint_residual,
        exponents: exponents(spec.dimension, spec.p, spec.q)?,
        iterations: 0,
        converged: false,
        kkt_tol,
        active_tol: ACTIVE_TOL_BASE * scale,
        active_domain_count: state.active_domain.iter().filter(|&&a| a).count(),
        active_boundary_count: state.active_boundary.iter().filter(|&&a| a).count(),
    };
    report.converged = report.max_residual() <= kkt_tol;
    Ok(report)
}

/// `(A + M_{f'}) φ - ∫L'_y - ∫ℓ'_y - M(g'_{1y} ψ₁) - B(g'_{2y} ψ₂)`.
fn adjoint_residual_vector(model: &Model, state: &KKTState) -> Result<Vec<f64>> {
    let space = model.space();
    let y = &state.y.values;
    let jac = model.linearized_operator(y)?;
    let mut r = jac.mul_vec(&state.phi.values);
    let load = cost_load(model, y)?;
    let g1y = model.eval_nodal(&model.derived.g1_y, y)?;
    let g2y = model.eval_nodal_boundary(&model.derived.g2_y, &space.restrict_boundary(y))?;
    let m1: Vec<f64> = g1y.iter().zip(&state.psi1.values).map(|(a, b)| a * b).collect();
    let m2: Vec<f64> = g2y.iter().zip(&state.psi2.values).map(|(a, b)| a * b).collect();
    let extra = model.control_load(&m1, &m2);
    for i in 0..r.len() {
        r[i] -= load[i] + extra[i];
    }
    Ok(r)
}

/// Adjoint solve with the multipliers eliminated on the active sets:
/// on active nodes `ψ = -(φ + Δ(b)) / ζ'(u)` is substituted into the
/// adjoint equation, which makes the system nonsymmetric.
fn coupled_adjoint(
    model: &Model,
    y: &FEField,
    u: &FEField,
    v: &FEField,
    active_domain: &[bool],
    active_boundary: &[bool],
    warm: Option<&[f64]>,
) -> Result<Vec<f64>> {
    let spec = model.spec();
    let space = model.space();
    let (b1, b2) = control_bounds(model, y)?;
    let (d1, d2) = (spec.delta(1), spec.delta(2));
    let g1y = model.eval_nodal(&model.derived.g1_y, &y.values)?;
    let yb = space.restrict_boundary(&y.values);
    let g2y = model.eval_nodal_boundary(&model.derived.g2_y, &yb)?;
    let n = space.n();
    let mut c1 = vec![0.0; n];
    let mut r1 = vec![0.0; n];
    for i in 0..n {
        if active_domain[i] {
            let k = g1y[i] / spec.zeta1.derivative(u.values[i])?;
            c1[i] = k;
            r1[i] = -k * d1.eval(b1[i]);
        }
    }
    let nb = v.len();
    let mut c2 = vec![0.0; nb];
    let mut r2 = vec![0.0; nb];
    for i in 0..nb {
        if active_boundary[i] {
            let k = g2y[i] / spec.zeta2.derivative(v.values[i])?;
            c2[i] = k;
            r2[i] = -k * d2.eval(b2[i]);
        }
    }
    let mut load = cost_load(model, &y.values)?;
    let extra = model.control_load(&r1, &r2);
    load.iter_mut().zip(&extra).for_each(|(a, b)| *a += b);
    let jac = model.linearized_operator(&y.values)?;
    let op = jac
        .add_scaled(&space.mass().scale_columns(&c1), 1.0)
        .add_scaled(&space.boundary_mass_domain().scale_columns(&space.extend_boundary(&c2)), 1.0);
    if c1.iter().all(|&c| c == 0.0) && c2.iter().all(|&c| c == 0.0) {
        return Ok(crate::fem::cg(&op, &load, warm)?.x);
    }
    Ok(bicgstab(&op, &load, warm)?.x)
}

/// Full KKT state (state, adjoint, multipliers) at given controls.
pub fn evaluate_state(
    model: &Model,
    controls: &ControlPair,
    warm_y: Option<&[f64]>,
    warm_phi: Option<&[f64]>,
    base_tol: f64,
) -> Result<KKTState> {
    evaluate_masked(model, controls, warm_y, warm_phi, base_tol, None)
}

/// As [`evaluate_state`], optionally with prescribed active sets.
fn evaluate_masked(
    model: &Model,
    controls: &ControlPair,
    warm_y: Option<&[f64]>,
    warm_phi: Option<&[f64]>,
    base_tol: f64,
    masks: Option<(&[bool], &[bool])>,
) -> Result<KKTState> {
    let (u, v) = (&controls.u, &controls.v);
    let y = model.solve_state(u, v, warm_y)?.state;
    let (ad, ab) = match masks {
        Some((a, b)) => (a.to_vec(), b.to_vec()),
        None => {
            let (a, b, _) = active_sets(model, &y, u, v, base_tol)?;
            (a, b)
        }
    };
    let phi = FEField::domain(coupled_adjoint(model, &y, u, v, &ad, &ab, warm_phi)?);
    let (psi1, psi2) = multipliers_on(model, &y, u, v, &phi, &ad, &ab)?;
    Ok(KKTState { y, u: u.clone(), phi, psi1, v: v.clone(), psi2, active_domain: ad, active_boundary: ab })
}

#[derive(Clone, Debug)]
pub struct KktSolution {
    pub state: KKTState,
    pub report: KKTReport,
    pub history: Vec<HistoryRow>,
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Damped fixed-point iteration on the optimality system and projection
/// formulas. Inside the loop the active sets are the nodes where the last
/// projection attained the bound; the final report uses the tolerance test.
/// Convergence is not guaranteed; the report says whether it was reached.
pub fn solve_kkt(model: &Model, initial: &ControlPair, options: &KktOptions) -> Result<KktSolution> {
    let spec = model.spec();
    require_increasing(spec)?;
    if !(options.damping > 0.0 && options.damping <= 1.0) {
        return Err(Error::Precondition(format!("damping must lie in (0, 1], got {}", options.damping)));
    }
    initial.u.check(model.mesh(), FieldRole::Domain)?;
    initial.v.check(model.mesh(), FieldRole::Boundary)?;
    let mut theta = options.damping;
    let mut last_gap = f64::INFINITY;
    let mut controls = initial.clone();
    let mut history = Vec::new();
    let mut warm_y: Option<Vec<f64>> = None;
    let mut warm_phi: Option<Vec<f64>> = None;
    let mut masks: Option<(Vec<bool>, Vec<bool>)> = None;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let m = masks.as_ref().map(|(a, b)| (a.as_slice(), b.as_slice()));
        let state = evaluate_masked(model, &controls, warm_y.as_deref(), warm_phi.as_deref(), options.active_tol, m)?;
        let report = kkt_residual(model, &state, options.kkt_tol)?;
        history.push(HistoryRow {
            iter: iterations,
            obj: report.objective,
            stat_u: report.stationarity_u,
            stat_v: report.stationarity_v,
            comp_u: report.complementarity_u,
            comp_v: report.complementarity_v,
            feas_u: report.feasibility_u,
            feas_v: report.feasibility_v,
        });
        if report.max_residual() <= 1e-2 * options.kkt_tol {
            break;
        }
        let (next, m1, m2) = project_with_masks(model, &state.y, &state.phi)?;
        masks = Some((m1, m2));
        // Fixed-point gap; halve the damping whenever it grows.
        let gap = max_diff(&next.u.values, &controls.u.values).max(max_diff(&next.v.values, &controls.v.values));
        if gap > last_gap && theta > MIN_DAMPING {
            theta = (0.5 * theta).max(MIN_DAMPING);
        }
        last_gap = gap;
        let mix = |old: &mut FEField, new: &FEField| {
            for (o, n) in old.values.iter_mut().zip(&new.values) {
                *o += theta * (n - *o);
            }
        };
        mix(&mut controls.u, &next.u);
        mix(&mut controls.v, &next.v);
        warm_y = Some(state.y.values);
        warm_phi = Some(state.phi.values);
        if gap <= options.step_tol {
            break;
        }
    }
    let state = evaluate_state(model, &controls, warm_y.as_deref(), warm_phi.as_deref(), options.active_tol)?;
    let mut report = kkt_residual(model, &state, options.kkt_tol)?;
    report.iterations = iterations;
    Ok(KktSolution { state, report, history })
}

/// Constructive check of Robinson's condition: builds `(ũ, ṽ)` with
/// `G'(z)(ũ, ṽ) = z₀` from one auxiliary solve and returns the max-norm
/// mismatch after an independent linearized solve.
pub fn robinson_check(model: &Model, z: &ControlPair, z0: &ControlPair) -> Result<f64> {
    let spec = model.spec();
    let space = model.space();
    z0.u.check(model.mesh(), FieldRole::Domain)?;
    z0.v.check(model.mesh(), FieldRole::Boundary)?;
    let y = model.solve_state(&z.u, &z.v, None)?.state;
    let g1 = model.eval_nodal(&spec.g1, &y.values)?;
    let g1y = model.eval_nodal(&model.derived.g1_y, &y.values)?;
    let yb = space.restrict_boundary(&y.values);
    let g2 = model.eval_nodal_boundary(&spec.g2, &yb)?;
    let g2y = model.eval_nodal_boundary(&model.derived.g2_y, &yb)?;
    let c1: Vec<f64> = g1y.iter().zip(&g1).map(|(&a, &g)| robinson_coefficient(&spec.zeta1, a, g)).collect::<Result<_>>()?;
    let c2: Vec<f64> = g2y.iter().zip(&g2).map(|(&a, &g)| robinson_coefficient(&spec.zeta2, a, g)).collect::<Result<_>>()?;
    let jac = model.linearized_operator(&y.values)?;
    let op = jac
        .add_scaled(&space.mass().scale_columns(&c1), 1.0)
        .add_scaled(&space.boundary_mass_domain().scale_columns(&space.extend_boundary(&c2)), 1.0);
    let rhs = model.control_load(&z0.u.values, &z0.v.values);
    let w = if op.is_symmetric(0.0) {
        crate::fem::cg(&op, &rhs, None)?.x
    } else {
        bicgstab(&op, &rhs, None)?.x
    };
    let wb = space.restrict_boundary(&w);
    let ut = FEField::domain(z0.u.values.iter().zip(&c1).zip(&w).map(|((a, c), w)| a - c * w).collect());
    let vt = FEField::boundary(z0.v.values.iter().zip(&c2).zip(&wb).map(|((a, c), w)| a - c * w).collect());
    let sw = model.solve_linearized(&y, &ut, &vt)?;
    let swb = space.restrict_boundary(&sw.values);
    let mut worst: f64 = 0.0;
    for i in 0..ut.len() {
        let h = spec.zeta1.inverse_derivative(-g1[i])?;
        worst = worst.max((ut.values[i] + h * g1y[i] * sw.values[i] - z0.u.values[i]).abs());
    }
    for i in 0..vt.len() {
        let h = spec.zeta2.inverse_derivative(-g2[i])?;
        worst = worst.max((vt.values[i] + h * g2y[i] * swb[i] - z0.v.values[i]).abs());
    }
    Ok(worst)
}
