use serde::Serialize;

use super::problem::ProblemSpec;
use super::expr::Wrt;
use super::monotone::MonotoneScalar;
use crate::error::{Error, Result};
use crate::fem::{boundary_quadrature_points, domain_quadrature_points};
use crate::geometry::build_mesh;

/// Mesh level whose quadrature points serve as spatial samples.
const SAMPLE_LEVEL: usize = 2;
const EQ_TOL: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct Witness {
    pub x: [f64; 2],
    /// Scalar argument (`y` or `t`) at the failure, when relevant.
    pub value: f64,
    /// Observed quantity that violated the check.
    pub observed: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionCheck {
    pub id: &'static str,
    pub description: &'static str,
    pub passed: bool,
    pub witness: Option<Witness>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssumptionReport {
    pub sample_box: f64,
    pub samples: usize,
    pub checks: Vec<AssumptionCheck>,
}

impl AssumptionReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AssumptionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn get(&self, id: &str) -> Option<&AssumptionCheck> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Radical inverse in base `b` of `k`.
fn radical_inverse(mut k: usize, b: usize) -> f64 {
    let mut inv = 1.0 / b as f64;
    let mut out = 0.0;
    while k > 0 {
        out += (k % b) as f64 * inv;
        k /= b;
        inv /= b as f64;
    }
    out
}

/// Deterministic low-discrepancy grid on `[-m, m]`, endpoints and 0 included.
pub fn sample_grid(m: f64, count: usize) -> Vec<f64> {
    let mut out = vec![0.0, -m, m];
    out.extend((1..count.saturating_sub(2)).map(|k| -m + 2.0 * m * radical_inverse(k, 2)));
    out
}

struct Scan {
    id: &'static str,
    description: &'static str,
    witness: Option<Witness>,
}

impl Scan {
    fn new(id: &'static str, description: &'static str) -> Self {
        Self { id, description, witness: None }
    }

    /// `ok` is evaluated only until the first failure.
    fn probe(&mut self, x: [f64; 2], value: f64, ok: impl FnOnce() -> Result<(bool, f64)>) {
        if self.witness.is_some() {
            return;
        }
        match ok() {
            Ok((true, _)) => {}
            Ok((false, observed)) => self.witness = Some(Witness { x, value, observed }),
            Err(_) => self.witness = Some(Witness { x, value, observed: f64::NAN }),
        }
    }

    fn finish(self) -> AssumptionCheck {
        AssumptionCheck {
            id: self.id,
            description: self.description,
            passed: self.witness.is_none(),
            witness: self.witness,
        }
    }

    fn fail_with(mut self, observed: f64) -> AssumptionCheck {
        self.witness = Some(Witness { x: [f64::NAN; 2], value: f64::NAN, observed });
        self.finish()
    }
}

/// Sample-based verification of the standing assumptions on `[-M, M]`.
pub fn check_assumptions(spec: &ProblemSpec, sample_count: usize) -> Result<AssumptionReport> {
    if sample_count < 100 {
        return Err(Error::Precondition(format!(
            "sample_count must be at least 100, got {sample_count}"
        )));
    }
    let mesh = build_mesh(spec.preset, SAMPLE_LEVEL)?;
    let xs = domain_quadrature_points(&mesh);
    let xb = boundary_quadrature_points(&mesh);
    let m = spec.sample_box;
    let ys = sample_grid(m, sample_count);
    // Pairs (x, y): every x with y = 0, then the grid cycling through x.
    let pairs = |points: &[[f64; 2]]| -> Vec<([f64; 2], f64)> {
        let mut out: Vec<_> = points.iter().map(|&x| (x, 0.0)).collect();
        out.extend(ys.iter().enumerate().map(|(k, &y)| (points[(k * 7919) % points.len()], y)));
        out
    };
    let dom = pairs(&xs);
    let bnd = pairs(&xb);
    let n = spec.dimension;
    let mut checks = Vec::new();

    let mut s = Scan::new("exponents", "p > N/2, q > N-1, p >= 2, q >= 2");
    let (p, q) = (spec.p, spec.q);
    if !(p > n / 2.0 && q > n - 1.0 && p >= 2.0 && q >= 2.0) {
        s.witness = Some(Witness { x: [p, q], value: n, observed: f64::NAN });
    }
    checks.push(s.finish());
    let s = Scan::new("weights", "lambda1, lambda2, mu1, mu2 > 0");
    let w = [spec.lambda1, spec.lambda2, spec.mu1, spec.mu2];
    checks.push(match w.iter().copied().find(|&v| !(v > 0.0)) {
        Some(bad) => s.fail_with(bad),
        None => s.finish(),
    });

    let mut ell = Scan::new("ellipticity", "min eigenvalue of (a_ij) > 0");
    let mut nonneg = Scan::new("a0_nonnegative", "a0 >= 0");
    let mut positive_somewhere = false;
    for &x in &xs {
        ell.probe(x, 0.0, || {
            let e = min_eigenvalue(
                spec.a11.eval(x, 0.0)?,
                spec.a12.eval(x, 0.0)?,
                spec.a22.eval(x, 0.0)?,
            );
            Ok((e > 0.0, e))
        });
        nonneg.probe(x, 0.0, || {
            let a = spec.a0.eval(x, 0.0)?;
            positive_somewhere |= a > 0.0;
            Ok((a >= 0.0, a))
        });
    }
    checks.push(ell.finish());
    checks.push(nonneg.finish());
    let s = Scan::new("a0_positive_somewhere", "a0 > 0 on some sample");
    checks.push(if positive_somewhere { s.finish() } else { s.fail_with(0.0) });

    let mut l = Scan::new("L_nonnegative", "L(x, y) >= 0");
    for &(x, y) in &dom {
        l.probe(x, y, || ok_ge(spec.cost_domain.eval(x, y)?, 0.0));
    }
    checks.push(l.finish());
    let mut l = Scan::new("ell_nonnegative", "ell(x, y) >= 0");
    for &(x, y) in &bnd {
        l.probe(x, y, || ok_ge(spec.cost_boundary.eval(x, y)?, 0.0));
    }
    checks.push(l.finish());

    let fy = spec.reaction.derivative(Wrt::Value);
    let mut zero = Scan::new("f_zero", "f(x, 0) = 0");
    let mut mono = Scan::new("f_monotone", "f'_y(x, y) >= 0");
    for &(x, y) in &dom {
        if y == 0.0 {
            zero.probe(x, 0.0, || ok_zero(spec.reaction.eval(x, 0.0)?));
        }
        mono.probe(x, y, || ok_ge(fy.eval(x, y)?, 0.0));
    }
    checks.push(zero.finish());
    checks.push(mono.finish());

    for (id, desc, g, points) in [
        ("g1_zero", "g1(x, 0) = 0", &spec.g1, &xs),
        ("g2_zero", "g2(x, 0) = 0", &spec.g2, &xb),
    ] {
        let mut s = Scan::new(id, desc);
        for &x in points.iter() {
            s.probe(x, 0.0, || ok_zero(g.eval(x, 0.0)?));
        }
        checks.push(s.finish());
    }

    for (ids, zeta) in [
        (["zeta1_zero", "zeta1_slope"], &spec.zeta1),
        (["zeta2_zero", "zeta2_slope"], &spec.zeta2),
    ] {
        let mut s = Scan::new(ids[0], "zeta(0) = 0");
        s.probe([0.0; 2], 0.0, || ok_zero(zeta.eval(0.0)?));
        checks.push(s.finish());
        let mut s = Scan::new(ids[1], "|zeta'| >= rho with the declared direction");
        for &t in &ys {
            s.probe([0.0; 2], t, || {
                let d = zeta.derivative(t)?;
                Ok((zeta.direction.sign() * d >= zeta.rho * (1.0 - EQ_TOL), d))
            });
        }
        checks.push(s.finish());
    }

    let g1y = spec.g1.derivative(Wrt::Value);
    let g2y = spec.g2.derivative(Wrt::Value);
    let mut s = Scan::new(
        "robinson_domain",
        "f'_y + g1'_y / zeta1'(H1(-g1)) >= 0",
    );
    for &(x, y) in &dom {
        s.probe(x, y, || {
            let c = robinson_coefficient(&spec.zeta1, g1y.eval(x, y)?, spec.g1.eval(x, y)?)?;
            ok_ge(fy.eval(x, y)? + c, 0.0)
        });
    }
    checks.push(s.finish());
    let mut s = Scan::new("robinson_boundary", "g2'_y / zeta2'(H2(-g2)) >= 0");
    for &(x, y) in &bnd {
        s.probe(x, y, || {
            ok_ge(robinson_coefficient(&spec.zeta2, g2y.eval(x, y)?, spec.g2.eval(x, y)?)?, 0.0)
        });
    }
    checks.push(s.finish());

    Ok(AssumptionReport { sample_box: m, samples: sample_count, checks })
}

/// `g'_y / ζ'(H(-g))`.
pub fn robinson_coefficient(zeta: &MonotoneScalar, gy: f64, g: f64) -> Result<f64> {
    Ok(gy / zeta.derivative(zeta.inverse(-g)?)?)
}

fn min_eigenvalue(a11: f64, a12: f64, a22: f64) -> f64 {
    let mean = 0.5 * (a11 + a22);
    let half = 0.5 * (a11 - a22);
    mean - half.hypot(a12)
}

fn ok_ge(v: f64, bound: f64) -> Result<(bool, f64)> {
    Ok((v >= bound - EQ_TOL * v.abs().max(1.0), v))
}

fn ok_zero(v: f64) -> Result<(bool, f64)> {
    Ok((v.abs() <= EQ_TOL, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(pde_f: &str, g1: &str, zeta1: &str) -> ProblemSpec {
        let text = format!(
            r#"
[domain]
preset = "disk"
[exponents]
p = 2.0
q = 2.0
[cost]
lambda1 = 1.0
lambda2 = 1.0
mu1 = 1.0
mu2 = 1.0
L = "0"
ell = "0"
[pde]
a11 = "1"
a22 = "1"
a0 = "1"
f = "{pde_f}"
[constraints]
g1 = "{g1}"
g2 = "y"
zeta1 = "{zeta1}"
zeta2 = "t"
rho1 = 1.0
rho2 = 1.0
"#
        );
        ProblemSpec::from_toml_str(&text).unwrap()
    }

    #[test]
    fn offset_constraint_flags_g1_zero() {
        let r = check_assumptions(&spec("y", "y - 10", "t"), 500).unwrap();
        let c = r.get("g1_zero").unwrap();
        assert!(!c.passed);
        assert_eq!(c.witness.as_ref().unwrap().observed, -10.0);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn exponential_constraint_passes() {
        let r = check_assumptions(&spec("y^3", "exp(y) - 1", "t"), 1000).unwrap();
        assert!(r.all_passed(), "{:?}", r.failures().collect::<Vec<_>>());
    }

    #[test]
    fn sign_changing_zeta_fails_slope() {
        let r = check_assumptions(&spec("y", "y", "t - 2*t^3"), 500).unwrap();
        assert!(!r.get("zeta1_slope").unwrap().passed);
    }

    #[test]
    fn grid_contains_edges() {
        let g = sample_grid(10.0, 100);
        assert_eq!(g.len(), 100);
        assert!(g.contains(&0.0) && g.contains(&-10.0) && g.contains(&10.0));
        assert!(g.iter().all(|v| v.abs() <= 10.0));
    }

    #[test]
    fn rejects_tiny_sample() {
        assert!(check_assumptions(&spec("y", "y", "t"), 10).is_err());
    }
}
