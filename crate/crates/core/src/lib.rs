//! Finite-element solver and verification toolkit for semilinear elliptic
//! optimal control with mixed pointwise control-state constraints in the
//! domain and on the boundary.

mod error;

pub mod catalog;
pub mod export;
pub mod fem;
pub mod fracsobolev;
pub mod geometry;
pub mod kkt;
pub mod pde;
pub mod presets;
pub mod regularity;

pub use catalog::{
    check_assumptions, delta_inverse, invert_monotone, AssumptionReport, Delta, Direction,
    MonotoneScalar, ProblemSpec, ScalarExpr, Wrt,
};
pub use error::{Error, Result};
pub use fem::{FEField, FemSpace, FieldRole, SparseOperator};
pub use fracsobolev::{gagliardo, FracNormReport};
pub use geometry::{build_disk_mesh, build_mesh, refine, DomainPreset, Mesh};
pub use kkt::{ControlPair, KKTReport, KKTState, KktOptions, KktSolution};
pub use regularity::{refinement_study, RefinementStudy, RegularityReport};
pub use pde::{exponents, ExponentTable, Model, StateSolveReport};
