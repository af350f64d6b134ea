//! Benchmarks live in `benches/`; this helper builds their shared inputs.

use mixedreg_core::presets::spec_with;
use mixedreg_core::{FEField, FieldRole, Model};

/// Default problem at `level` with smooth controls.
pub fn smooth_inputs(level: usize) -> (Model, FEField, FEField) {
    let model = Model::new(spec_with(&[]), level).expect("default problem is admissible");
    let u = FEField::interpolate(model.mesh(), FieldRole::Domain, |[x, y]| 0.5 + x - y * y);
    let v = FEField::interpolate(model.mesh(), FieldRole::Boundary, |[x, y]| x * y);
    (model, u, v)
}
