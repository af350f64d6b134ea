//! Piecewise-linear finite elements on triangle meshes.

mod solve;
mod space;
mod sparse;

pub use solve::{bicgstab, cg, solve_linear, LinearSolution, LINEAR_TOL};
pub use space::{
    barycentric_gradients, boundary_quadrature_points, domain_quadrature_points, element_stiffness,
    trace, FEField, FemSpace, FieldRole, EDGE_RULE, TRI_RULE,
};
pub use sparse::{Pattern, SparseOperator};
pub(crate) use sparse::{max_abs, norm2};

/// Galerkin matrix of the elliptic operator on `space`.
pub fn assemble_operator(
    space: &FemSpace,
    spec: &crate::catalog::ProblemSpec,
) -> crate::Result<SparseOperator> {
    space.assemble_operator(spec, true)
}

/// Boundary mass matrix in boundary-loop indices.
pub fn assemble_boundary_mass(space: &FemSpace) -> SparseOperator {
    space.boundary_mass().clone()
}
