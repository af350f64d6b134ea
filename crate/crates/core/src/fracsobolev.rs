//! Gagliardo seminorms and fractional Sobolev norms on the boundary curve,
//! plus measured-constant probes for the superposition and product
//! estimates in `W^{τ,k}(Γ)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{ScalarExpr, Wrt};
use crate::error::{Error, Result};
use crate::fem::{FEField, FieldRole};
use crate::geometry::Mesh;

/// Dyadic refinement levels toward the shared vertex of adjacent edges.
pub const DYADIC_LEVELS: usize = 4;

/// Exponents of the embedding ladder; each uses `τ = 1 - 1/k`.
pub const LADDER: [f64; 4] = [2.0, 4.0, 8.0, 16.0];

const GAUSS2: [(f64, f64); 2] = [(0.211_324_865_405_187_1, 0.5), (0.788_675_134_594_812_9, 0.5)];
const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FracNormReport {
    pub tau: f64,
    pub k: f64,
    #[serde(rename = "seminorm_I")]
    pub seminorm_i: f64,
    /// `‖v‖_{L^k(Γ)}`.
    pub lk_norm: f64,
    /// `(‖v‖_{L^k}^k + I_{τ,k}(v))^{1/k}`.
    pub full_norm: f64,
    pub quadrature_level: usize,
}

impl FracNormReport {
    pub const CSV_HEADER: &'static str = "tau,k,level,seminorm,norm";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{},{:.12e},{:.12e}",
            self.tau, self.k, self.quadrature_level, self.seminorm_i, self.full_norm
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum PairOrder {
    /// Every ordered pair of edges.
    Ordered,
    /// Unordered pairs, off-diagonal terms doubled.
    #[cfg_attr(not(test), allow(dead_code))]
    Symmetrized,
}

struct Edge {
    a: [f64; 2],
    b: [f64; 2],
    va: f64,
    vb: f64,
    len: f64,
}

impl Edge {
    fn at(&self, s: f64) -> ([f64; 2], f64) {
        (
            [self.a[0] + s * (self.b[0] - self.a[0]), self.a[1] + s * (self.b[1] - self.a[1])],
            self.va + s * (self.vb - self.va),
        )
    }

    fn reversed(&self) -> Edge {
        Edge { a: self.b, b: self.a, va: self.vb, vb: self.va, len: self.len }
    }
}

fn check_exponents(tau: f64, k: f64) -> Result<()> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::Precondition(format!("tau must lie in (0, 1), got {tau}")));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::Precondition(format!("k must be >= 1, got {k}")));
    }
    Ok(())
}

fn edges(mesh: &Mesh, v: &FEField) -> Result<Vec<Edge>> {
    v.check(mesh, FieldRole::Boundary)?;
    let pts = mesh.boundary_points();
    let nb = pts.len();
    Ok((0..nb)
        .map(|j| {
            let n = (j + 1) % nb;
            Edge {
                a: pts[j],
                b: pts[n],
                va: v.values[j],
                vb: v.values[n],
                len: mesh.boundary_edges()[j].length,
            }
        })
        .collect())
}

fn kernel(x: [f64; 2], vx: f64, y: [f64; 2], vy: f64, k: f64, beta: f64) -> f64 {
    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
    (vx - vy).abs().powf(k) / d.powf(beta)
}

/// `∫_e ∫_e` for a straight edge: `|v(s) - v(t)| = |m||s - t|`, so the
/// integrand is `|m|^k |s - t|^α` with `α = k(1 - τ) - 1 > -1`.
fn self_pair(e: &Edge, tau: f64, k: f64) -> f64 {
    let slope = (e.vb - e.va).abs() / e.len;
    if slope == 0.0 {
        return 0.0;
    }
    let alpha = k * (1.0 - tau) - 1.0;
    2.0 * slope.powf(k) * e.len.powf(alpha + 2.0) / ((alpha + 1.0) * (alpha + 2.0))
}

/// Both edges start at the shared vertex; squares are split dyadically
/// toward the origin of `[0,1]²`.
fn adjacent_pair(e: &Edge, f: &Edge, k: f64, beta: f64) -> f64 {
    let square = |s0: f64, t0: f64, side: f64| {
        let mut acc = 0.0;
        for &(gs, ws) in &GAUSS3 {
            let (x, vx) = e.at(s0 + side * gs);
            for &(gt, wt) in &GAUSS3 {
                let (y, vy) = f.at(t0 + side * gt);
                acc += ws * wt * kernel(x, vx, y, vy, k, beta);
            }
        }
        acc * side * side
    };
    let mut total = 0.0;
    let mut side = 1.0;
    for _ in 0..DYADIC_LEVELS {
        let half = 0.5 * side;
        total += square(half, 0.0, half) + square(0.0, half, half) + square(half, half, half);
        side = half;
    }
    total += square(0.0, 0.0, side);
    total * e.len * f.len
}

fn far_pair(e: &Edge, f: &Edge, k: f64, beta: f64) -> f64 {
    let mut acc = 0.0;
    for &(gs, ws) in &GAUSS2 {
        let (x, vx) = e.at(gs);
        for &(gt, wt) in &GAUSS2 {
            let (y, vy) = f.at(gt);
            acc += ws * wt * kernel(x, vx, y, vy, k, beta);
        }
    }
    acc * e.len * f.len
}

fn pair(es: &[Edge], i: usize, j: usize, tau: f64, k: f64) -> f64 {
    let nb = es.len();
    let beta = 1.0 + tau * k;
    if i == j {
        self_pair(&es[i], tau, k)
    } else if j == (i + 1) % nb {
        // shared vertex: end of i, start of j
        adjacent_pair(&es[i].reversed(), &es[j], k, beta)
    } else if i == (j + 1) % nb {
        adjacent_pair(&es[i], &es[j].reversed(), k, beta)
    } else {
        far_pair(&es[i], &es[j], k, beta)
    }
}

pub(crate) fn seminorm(mesh: &Mesh, v: &FEField, tau: f64, k: f64, order: PairOrder) -> Result<f64> {
    check_exponents(tau, k)?;
    let es = edges(mesh, v)?;
    let nb = es.len();
    let rows: Vec<f64> = (0..nb)
        .into_par_iter()
        .map(|i| match order {
            PairOrder::Ordered => (0..nb).map(|j| pair(&es, i, j, tau, k)).sum(),
            PairOrder::Symmetrized => {
                pair(&es, i, i, tau, k) + (i + 1..nb).map(|j| 2.0 * pair(&es, i, j, tau, k)).sum::<f64>()
            }
        })
        .collect();
    let total: f64 = rows.iter().sum();
    if !total.is_finite() {
        return Err(Error::Precondition(format!(
            "Gagliardo integral is not finite for tau={tau}, k={k}"
        )));
    }
    Ok(total)
}

/// `‖v‖_{L^k(Γ)}` of the P1 trace, 3-point Gauss per edge.
pub fn boundary_lk_norm(mesh: &Mesh, v: &FEField, k: f64) -> Result<f64> {
    if !(k >= 1.0) {
        return Err(Error::Precondition(format!("k must be >= 1, got {k}")));
    }
    let es = edges(mesh, v)?;
    let s: f64 = es
        .iter()
        .map(|e| GAUSS3.iter().map(|&(g, w)| w * e.at(g).1.abs().powf(k)).sum::<f64>() * e.len)
        .sum();
    Ok(s.powf(1.0 / k))
}

/// Gagliardo seminorm `I_{τ,k}(v)` and the full `W^{τ,k}(Γ)` norm.
pub fn gagliardo(mesh: &Mesh, v: &FEField, tau: f64, k: f64) -> Result<FracNormReport> {
    let seminorm_i = seminorm(mesh, v, tau, k, PairOrder::Ordered)?;
    let lk_norm = boundary_lk_norm(mesh, v, k)?;
    Ok(FracNormReport {
        tau,
        k,
        seminorm_i,
        lk_norm,
        full_norm: (lk_norm.powf(k) + seminorm_i).powf(1.0 / k),
        quadrature_level: mesh.refinement_level(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ChainRuleReport {
    pub lhs: f64,
    pub rhs_sans_c: f64,
    pub ratio: f64,
    /// Sampled `sup |∂_t a|` over boundary points and `t` in `range`.
    pub lipschitz_t: f64,
    /// Sampled `sup |∇_x a|` over the same set.
    pub lipschitz_x: f64,
    pub range: [f64; 2],
}

/// Measure the superposition estimate for `a(x, v(x))`.
///
/// `lhs = ‖a(·,v)‖`, `rhs = ‖v‖ + ‖a(·,0)‖_{L^k} + 1`, both in `W^{τ,k}(Γ)`.
pub fn chain_rule_check(mesh: &Mesh, a: &ScalarExpr, v: &FEField, tau: f64, k: f64) -> Result<ChainRuleReport> {
    v.check(mesh, FieldRole::Boundary)?;
    let pts = mesh.boundary_points();
    let composed = FEField::boundary(
        pts.iter().zip(&v.values).map(|(&x, &t)| a.eval(x, t)).collect::<Result<_>>()?,
    );
    let at_zero = FEField::boundary(pts.iter().map(|&x| a.eval(x, 0.0)).collect::<Result<_>>()?);
    let lhs = gagliardo(mesh, &composed, tau, k)?.full_norm;
    let rhs_sans_c = gagliardo(mesh, v, tau, k)?.full_norm + boundary_lk_norm(mesh, &at_zero, k)? + 1.0;

    let lo = v.values.iter().copied().fold(f64::INFINITY, f64::min).min(0.0);
    let hi = v.values.iter().copied().fold(f64::NEG_INFINITY, f64::max).max(0.0);
    let (dt, dx1, dx2) = (a.derivative(Wrt::Value), a.derivative(Wrt::X1), a.derivative(Wrt::X2));
    let (mut lip_t, mut lip_x) = (0.0f64, 0.0f64);
    for &x in &pts {
        for i in 0..=32 {
            let t = lo + (hi - lo) * i as f64 / 32.0;
            lip_t = lip_t.max(dt.eval(x, t)?.abs());
            lip_x = lip_x.max(dx1.eval(x, t)?.hypot(dx2.eval(x, t)?));
        }
    }
    Ok(ChainRuleReport {
        lhs,
        rhs_sans_c,
        ratio: lhs / rhs_sans_c,
        lipschitz_t: lip_t,
        lipschitz_x: lip_x,
        range: [lo, hi],
    })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ProductExponents {
    pub tau: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
}

impl ProductExponents {
    pub fn validate(&self) -> Result<()> {
        for (name, t) in [("tau", self.tau), ("tau1", self.tau1), ("tau2", self.tau2)] {
            if !(t > 0.0 && t < 1.0) {
                return Err(Error::Precondition(format!("{name} must lie in (0, 1), got {t}")));
            }
        }
        for (name, k) in [("k", self.k), ("k1", self.k1), ("k2", self.k2)] {
            if !(k >= 1.0) {
                return Err(Error::Precondition(format!("{name} must be >= 1, got {k}")));
            }
        }
        let gap = 1.0 / self.k - 1.0 / self.k1 - 1.0 / self.k2;
        if gap.abs() > 1e-12 {
            return Err(Error::Precondition(format!("1/k - 1/k1 - 1/k2 = {gap:e}, must vanish")));
        }
        if !(self.tau < self.tau1.min(self.tau2)) {
            return Err(Error::Precondition(format!(
                "tau = {} must be below min(tau1, tau2) = {}",
                self.tau,
                self.tau1.min(self.tau2)
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProductReport {
    pub lhs: f64,
    pub rhs_sans_c: f64,
    pub ratio: f64,
}

/// Measure `‖v₁v₂‖_{W^{τ,k}} / (‖v₁‖_{W^{τ₁,k₁}} ‖v₂‖_{W^{τ₂,k₂}})`.
pub fn product_check(mesh: &Mesh, v1: &FEField, v2: &FEField, e: &ProductExponents) -> Result<ProductReport> {
    e.validate()?;
    v1.check(mesh, FieldRole::Boundary)?;
    v2.check(mesh, FieldRole::Boundary)?;
    let prod = FEField::boundary(v1.values.iter().zip(&v2.values).map(|(a, b)| a * b).collect());
    let lhs = gagliardo(mesh, &prod, e.tau, e.k)?.full_norm;
    let rhs_sans_c = gagliardo(mesh, v1, e.tau1, e.k1)?.full_norm * gagliardo(mesh, v2, e.tau2, e.k2)?.full_norm;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs_sans_c };
    Ok(ProductReport { lhs, rhs_sans_c, ratio })
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderLadder {
    pub level: usize,
    pub perimeter: f64,
    /// `(k, I_{1-1/k,k}(v))` for every `k` in [`LADDER`].
    pub entries: Vec<(f64, f64)>,
}

impl HolderLadder {
    /// `I / |Γ|²`, the mean of `q^k` for the difference quotient `q`.
    pub fn normalized(&self) -> Vec<f64> {
        let area = self.perimeter * self.perimeter;
        self.entries.iter().map(|&(_, i)| i / area).collect()
    }

    /// `(I / |Γ|²)^{1/k}`, which tends to the Lipschitz constant as `k` grows.
    pub fn mean_quotients(&self) -> Vec<f64> {
        self.normalized().iter().zip(&self.entries).map(|(n, &(k, _))| n.powf(1.0 / k)).collect()
    }
}

/// Seminorms `I_{1-1/k,k}(v)` along the ladder `k ∈ {2, 4, 8, 16}`.
pub fn holder_embedding_probe(mesh: &Mesh, v: &FEField) -> Result<HolderLadder> {
    let entries = LADDER
        .iter()
        .map(|&k| Ok((k, seminorm(mesh, v, 1.0 - 1.0 / k, k, PairOrder::Ordered)?)))
        .collect::<Result<_>>()?;
    Ok(HolderLadder { level: mesh.refinement_level(), perimeter: mesh.perimeter(), entries })
}

/// Random trigonometric polynomial in the curve parameter.
///
/// The draw depends only on `rng`, not on the mesh, so the same seed yields
/// interpolants of one smooth function on every level. `max |v| = amplitude·s`
/// with `s` drawn from `[0.2, 1]`.
#[derive(Clone, Debug)]
pub struct TrigField {
    coeffs: Vec<(f64, f64)>,
    offset: f64,
    scale: f64,
}

impl TrigField {
    pub const MODES: usize = 4;

    pub fn sample<R: Rng>(rng: &mut R, amplitude: f64) -> Self {
        let offset = rng.gen_range(-1.0..1.0);
        let coeffs: Vec<(f64, f64)> = (0..Self::MODES)
            .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let s = rng.gen_range(0.2..1.0);
        let mut f = TrigField { coeffs, offset, scale: 1.0 };
        let peak = (0..4096)
            .map(|i| f.eval(std::f64::consts::TAU * i as f64 / 4096.0).abs())
            .fold(0.0, f64::max);
        f.scale = if peak > 0.0 { amplitude * s / peak } else { 0.0 };
        f
    }

    pub fn eval(&self, theta: f64) -> f64 {
        let s: f64 = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| {
                let m = (j + 1) as f64;
                a * (m * theta).cos() + b * (m * theta).sin()
            })
            .sum();
        self.scale * (self.offset + s)
    }

    pub fn on_boundary(&self, mesh: &Mesh) -> FEField {
        FEField::boundary(mesh.boundary_params().iter().map(|&t| self.eval(t)).collect())
    }
}
