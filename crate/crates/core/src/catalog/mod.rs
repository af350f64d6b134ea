//! Scalar functions of the problem, their inverses, and the assumption checker.

mod assumptions;
mod expr;
mod monotone;
mod parse;
mod problem;

pub use assumptions::{
    check_assumptions, robinson_coefficient, sample_grid, AssumptionCheck, AssumptionReport, Witness,
};
pub use expr::{ScalarExpr, Wrt};
pub use monotone::{invert_monotone, Delta, Direction, MonotoneScalar};
pub use problem::ProblemSpec;

/// `Δᵢ⁻¹(target)` for `i ∈ {1, 2}`.
pub fn delta_inverse(i: usize, spec: &ProblemSpec, target: f64) -> crate::Result<f64> {
    if i != 1 && i != 2 {
        return Err(crate::Error::Bounds(format!("delta index must be 1 or 2, got {i}")));
    }
    Ok(spec.delta(i).inverse(target))
}
