//! Control-to-state map, its linearization, adjoint solves and the exponent table.

use serde::Serialize;

use crate::catalog::{ProblemSpec, ScalarExpr, Wrt};
use crate::error::{Error, Result};
use crate::fem::{cg, norm2, FEField, FemSpace, FieldRole, SparseOperator};
use crate::geometry::{build_mesh, Mesh};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 50;
const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 30;

/// Derivative trees needed by the solvers.
#[derive(Clone, Debug)]
pub(crate) struct Derived {
    pub f_y: ScalarExpr,
    pub l_y: ScalarExpr,
    pub ell_y: ScalarExpr,
    pub g1_y: ScalarExpr,
    pub g2_y: ScalarExpr,
}

/// Problem data bound to one discretization level.
#[derive(Clone, Debug)]
pub struct Model {
    spec: ProblemSpec,
    space: FemSpace,
    operator: SparseOperator,
    pub(crate) derived: Derived,
    qpts: Vec<[f64; 2]>,
    bqpts: Vec<[f64; 2]>,
    newton_tol: f64,
}

#[derive(Clone, Debug)]
pub struct StateSolveReport {
    pub state: FEField,
    pub newton_iterations: usize,
    pub final_residual: f64,
    /// `(‖y‖_H1 + ‖y‖_∞) / (‖u‖_Lp + ‖v‖_Lq)`, zero for zero data.
    pub c_infinity_ratio: f64,
    pub residual_history: Vec<f64>,
}

impl Model {
    pub fn new(spec: ProblemSpec, level: usize) -> Result<Self> {
        let mesh = build_mesh(spec.preset, level)?;
        Self::from_space(spec, FemSpace::new(mesh))
    }

    pub fn from_space(spec: ProblemSpec, space: FemSpace) -> Result<Self> {
        let operator = space.assemble_operator(&spec, true)?;
        let derived = Derived {
            f_y: spec.reaction.derivative(Wrt::Value),
            l_y: spec.cost_domain.derivative(Wrt::Value),
            ell_y: spec.cost_boundary.derivative(Wrt::Value),
            g1_y: spec.g1.derivative(Wrt::Value),
            g2_y: spec.g2.derivative(Wrt::Value),
        };
        let qpts = space.quadrature_points();
        let bqpts = space.boundary_quadrature_points();
        Ok(Self { spec, space, operator, derived, qpts, bqpts, newton_tol: NEWTON_TOL })
    }

    /// Relative Newton tolerance, scaled by `1 + ‖load‖`.
    pub fn with_newton_tol(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::Precondition(format!("Newton tolerance must be positive, got {tol}")));
        }
        self.newton_tol = tol;
        Ok(self)
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn space(&self) -> &FemSpace {
        &self.space
    }

    pub fn mesh(&self) -> &Mesh {
        self.space.mesh()
    }

    /// Galerkin matrix of `A` (with natural boundary condition).
    pub fn operator(&self) -> &SparseOperator {
        &self.operator
    }

    /// Evaluate `e(x_q, y_h(x_q))` at the interior quadrature points.
    pub(crate) fn eval_domain_q(&self, e: &ScalarExpr, y: &[f64]) -> Result<Vec<f64>> {
        let yq = self.space.at_quadrature(y);
        self.qpts.iter().zip(&yq).map(|(&x, &v)| e.eval(x, v)).collect()
    }

    /// Evaluate `e(x_q, y_h(x_q))` at the boundary quadrature points.
    pub(crate) fn eval_boundary_q(&self, e: &ScalarExpr, y_loop: &[f64]) -> Result<Vec<f64>> {
        let yq = self.space.at_boundary_quadrature(y_loop);
        self.bqpts.iter().zip(&yq).map(|(&x, &v)| e.eval(x, v)).collect()
    }

    /// Nodal evaluation `e(x_i, y_i)` at domain vertices.
    pub(crate) fn eval_nodal(&self, e: &ScalarExpr, y: &[f64]) -> Result<Vec<f64>> {
        self.mesh().vertices().iter().zip(y).map(|(&x, &v)| e.eval(x, v)).collect()
    }

    /// Nodal evaluation at boundary vertices (loop order).
    pub(crate) fn eval_nodal_boundary(&self, e: &ScalarExpr, y_loop: &[f64]) -> Result<Vec<f64>> {
        let pts = self.mesh().boundary_points();
        pts.iter().zip(y_loop).map(|(&x, &v)| e.eval(x, v)).collect()
    }

    /// `M u + B v` in domain indices.
    pub fn control_load(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut b = self.space.mass().mul_vec(u);
        let bv = self.space.boundary_mass_domain().mul_vec(&self.space.extend_boundary(v));
        b.iter_mut().zip(&bv).for_each(|(a, c)| *a += c);
        b
    }

    /// `A + M_{f'_y(·, y)}`.
    pub fn linearized_operator(&self, y: &[f64]) -> Result<SparseOperator> {
        let fq = self.eval_domain_q(&self.derived.f_y, y)?;
        Ok(self.operator.add_scaled(&self.space.weighted_mass(&fq), 1.0))
    }

    /// Discrete state residual `A y + ∫ f(·, y) φ - M u - B v`.
    pub fn state_residual(&self, y: &[f64], load: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.operator.mul_vec(y);
        let fq = self.eval_domain_q(&self.spec.reaction, y)?;
        let fl = self.space.load(&fq);
        for i in 0..r.len() {
            r[i] += fl[i] - load[i];
        }
        Ok(r)
    }

    /// Damped Newton for the state equation.
    pub fn solve_state(&self, u: &FEField, v: &FEField, warm: Option<&[f64]>) -> Result<StateSolveReport> {
        u.check(self.mesh(), FieldRole::Domain)?;
        v.check(self.mesh(), FieldRole::Boundary)?;
        let load = self.control_load(&u.values, &v.values);
        let tol = self.newton_tol * (1.0 + norm2(&load));
        let mut y = warm.map_or_else(|| vec![0.0; self.space.n()], <[f64]>::to_vec);
        let mut r = self.state_residual(&y, &load)?;
        let mut rn = norm2(&r);
        let mut history = vec![rn];
        let mut iterations = 0;
        while rn > tol {
            if iterations == NEWTON_MAX_ITER {
                return Err(Error::NonlinearSolve { history });
            }
            iterations += 1;
            let jac = self.linearized_operator(&y)?;
            let step = cg(&jac, &r, None)?.x;
            let mut t = 1.0;
            let mut accepted = None;
            for _ in 0..=MAX_HALVINGS {
                let trial: Vec<f64> = y.iter().zip(&step).map(|(a, d)| a - t * d).collect();
                if let Ok(rt) = self.state_residual(&trial, &load) {
                    let n = norm2(&rt);
                    if n <= (1.0 - ARMIJO * t) * rn {
                        accepted = Some((trial, rt, n));
                        break;
                    }
                }
                t *= 0.5;
            }
            match accepted {
                Some((ny, nr, n)) => {
                    y = ny;
                    r = nr;
                    rn = n;
                    history.push(rn);
                }
                None => {
                    // No decrease along the Newton direction: stagnation.
                    if rn <= tol * 1e3 {
                        break;
                    }
                    return Err(Error::NonlinearSolve { history });
                }
            }
        }
        let state = FEField::domain(y);
        let c_infinity_ratio = self.c_infinity_ratio(&state, u, v)?;
        Ok(StateSolveReport {
            state,
            newton_iterations: iterations,
            final_residual: rn,
            c_infinity_ratio,
            residual_history: history,
        })
    }

    fn c_infinity_ratio(&self, y: &FEField, u: &FEField, v: &FEField) -> Result<f64> {
        let den = self.space.lp_norm(u, self.spec.p)? + self.space.lp_norm(v, self.spec.q)?;
        if den == 0.0 {
            return Ok(0.0);
        }
        let ymax = y.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok((self.space.h1_norm(&y.values) + ymax) / den)
    }

    /// `w` with `A w + f'_y(·, y) w = ũ`, `∂_ν w = ṽ`.
    pub fn solve_linearized(&self, y: &FEField, ut: &FEField, vt: &FEField) -> Result<FEField> {
        y.check(self.mesh(), FieldRole::Domain)?;
        ut.check(self.mesh(), FieldRole::Domain)?;
        vt.check(self.mesh(), FieldRole::Boundary)?;
        let jac = self.linearized_operator(&y.values)?;
        let b = self.control_load(&ut.values, &vt.values);
        Ok(FEField::domain(cg(&jac, &b, None)?.x))
    }

    /// Adjoint solve with nodal right-hand sides paired through the mass
    /// matrices: `(A* + M_{f'}) φ = M r_Ω + B r_Γ`.
    pub fn solve_adjoint(&self, y: &FEField, rhs_domain: &FEField, rhs_boundary: &FEField) -> Result<FEField> {
        y.check(self.mesh(), FieldRole::Domain)?;
        rhs_domain.check(self.mesh(), FieldRole::Domain)?;
        rhs_boundary.check(self.mesh(), FieldRole::Boundary)?;
        let load = self.control_load(&rhs_domain.values, &rhs_boundary.values);
        self.solve_adjoint_load(y, &load).map(FEField::domain)
    }

    /// Adjoint solve with an assembled load vector.
    pub fn solve_adjoint_load(&self, y: &FEField, load: &[f64]) -> Result<Vec<f64>> {
        let jac = self.linearized_operator(&y.values)?;
        // Symmetric coefficients make A* = A.
        debug_assert!(jac.is_symmetric(1e-10 * jac.values().iter().fold(1.0f64, |m, v| m.max(v.abs()))));
        Ok(cg(&jac, load, None)?.x)
    }
}

/// The integrability exponents `r`, `s` of the linearized state and adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentTable {
    #[serde(rename = "N")]
    pub n: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub s: f64,
    pub conjugacy_slack: f64,
}

pub fn exponents(n: f64, p: f64, q: f64) -> Result<ExponentTable> {
    if !(n >= 2.0 && p > n / 2.0 && q > n - 1.0 && p >= 2.0 && q >= 2.0) {
        return Err(Error::Precondition(format!(
            "exponents violate p > N/2, q > N-1, p, q >= 2, N >= 2: N={n}, p={p}, q={q}"
        )));
    }
    let boundary_r = n * q / (n - 1.0);
    let r = if p < n { (p * n / (n - p)).min(boundary_r) } else { boundary_r };
    let boundary_s = n * q / ((n - 1.0) * (q - 1.0));
    let gap = 1.0 - 1.0 / p - 1.0 / n;
    let s = if gap > 0.0 { (1.0 / gap).min(boundary_s) } else { boundary_s };
    Ok(ExponentTable { n, p, q, r, s, conjugacy_slack: 1.0 - 1.0 / r - 1.0 / s })
}
