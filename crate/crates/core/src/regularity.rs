//! Lipschitz and Hölder estimates of computed fields under mesh refinement.

use std::collections::HashMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::ProblemSpec;
use crate::error::{Error, Result};
use crate::fem::{barycentric_gradients, trace, FEField, FieldRole};
use crate::fracsobolev::holder_embedding_probe;
use crate::geometry::{distance, Mesh};
use crate::kkt::{solve_kkt, ControlPair, KktOptions};
use crate::pde::Model;

/// Relative change below which the last two Lipschitz estimates count as stable.
pub const STABLE_CHANGE: f64 = 0.10;
/// Growth factor of the Lipschitz estimate between the last two levels that
/// marks a field as diverging.
pub const DIVERGENCE_RATIO: f64 = 1.5;
pub const HOLDER_EXPONENTS: [f64; 3] = [0.5, 0.9, 1.0];

fn check(mesh: &Mesh, field: &FEField) -> Result<()> {
    field.check(mesh, field.role)
}

fn triangle_gradients(mesh: &Mesh, values: &[f64]) -> Vec<[f64; 2]> {
    let v = mesh.vertices();
    mesh.triangles()
        .iter()
        .map(|t| {
            let (g, _) = barycentric_gradients([v[t[0]], v[t[1]], v[t[2]]]);
            let mut d = [0.0; 2];
            for i in 0..3 {
                d[0] += values[t[i]] * g[i][0];
                d[1] += values[t[i]] * g[i][1];
            }
            d
        })
        .collect()
}

fn points(mesh: &Mesh, role: FieldRole) -> Vec<[f64; 2]> {
    match role {
        FieldRole::Domain => mesh.vertices().to_vec(),
        FieldRole::Boundary => mesh.boundary_points(),
    }
}

/// Domain fields: largest P1 gradient. Boundary fields: largest difference
/// quotient over all pairs of boundary vertices (chordal distance).
pub fn lipschitz_estimate(mesh: &Mesh, field: &FEField) -> Result<f64> {
    check(mesh, field)?;
    Ok(match field.role {
        FieldRole::Domain => triangle_gradients(mesh, &field.values)
            .iter()
            .map(|g| g[0].hypot(g[1]))
            .fold(0.0, f64::max),
        FieldRole::Boundary => pair_quotients(&mesh.boundary_points(), &field.values, 0.0, &[1.0])[0],
    })
}

/// `max |v_i - v_j| / |x_i - x_j|^γ` over pairs with distance at least `min_dist`,
/// one entry per `γ`.
fn pair_quotients(pts: &[[f64; 2]], v: &[f64], min_dist: f64, gammas: &[f64]) -> Vec<f64> {
    let rows: Vec<Vec<f64>> = (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut best = vec![0.0f64; gammas.len()];
            for j in i + 1..pts.len() {
                let d = distance(pts[i], pts[j]);
                if d < min_dist || d == 0.0 {
                    continue;
                }
                let diff = (v[i] - v[j]).abs();
                if diff == 0.0 {
                    continue;
                }
                for (b, &g) in best.iter_mut().zip(gammas) {
                    let den = if g == 1.0 { d } else if g == 0.5 { d.sqrt() } else { d.powf(g) };
                    *b = b.max(diff / den);
                }
            }
            best
        })
        .collect();
    rows.into_iter().fold(vec![0.0; gammas.len()], |mut acc, r| {
        for (a, b) in acc.iter_mut().zip(r) {
            *a = a.max(b);
        }
        acc
    })
}

/// Hölder quotients for [`HOLDER_EXPONENTS`], pairs closer than the mesh size
/// are skipped.
pub fn holder_estimates(mesh: &Mesh, field: &FEField) -> Result<[f64; 3]> {
    check(mesh, field)?;
    let q = pair_quotients(&points(mesh, field.role), &field.values, mesh.mesh_size(), &HOLDER_EXPONENTS);
    Ok([q[0], q[1], q[2]])
}

/// Discrete second derivative: gradient jumps across interior edges divided by
/// the distance of the neighbouring centroids (domain), or
/// `|v_{i+1} - 2v_i + v_{i-1}| / h²` along the loop (boundary).
pub fn max_second_difference(mesh: &Mesh, field: &FEField) -> Result<f64> {
    check(mesh, field)?;
    match field.role {
        FieldRole::Domain => {
            let grads = triangle_gradients(mesh, &field.values);
            let v = mesh.vertices();
            let centroid = |t: &[usize; 3]| {
                [(v[t[0]][0] + v[t[1]][0] + v[t[2]][0]) / 3.0, (v[t[0]][1] + v[t[1]][1] + v[t[2]][1]) / 3.0]
            };
            let mut owner: HashMap<(usize, usize), usize> = HashMap::new();
            let mut worst: f64 = 0.0;
            for (ti, t) in mesh.triangles().iter().enumerate() {
                for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                    let key = (a.min(b), a.max(b));
                    if let Some(&tj) = owner.get(&key) {
                        let (gi, gj) = (grads[ti], grads[tj]);
                        let jump = (gi[0] - gj[0]).hypot(gi[1] - gj[1]);
                        let d = distance(centroid(t), centroid(&mesh.triangles()[tj]));
                        worst = worst.max(jump / d);
                    } else {
                        owner.insert(key, ti);
                    }
                }
            }
            Ok(worst)
        }
        FieldRole::Boundary => {
            let pts = mesh.boundary_points();
            let n = pts.len();
            let mut worst: f64 = 0.0;
            for i in 0..n {
                let (p, q) = ((i + n - 1) % n, (i + 1) % n);
                let h = 0.5 * (distance(pts[p], pts[i]) + distance(pts[i], pts[q]));
                worst = worst.max((field.values[q] - 2.0 * field.values[i] + field.values[p]).abs() / (h * h));
            }
            Ok(worst)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityRow {
    pub level: usize,
    pub h: f64,
    pub lip: f64,
    pub holder05: f64,
    pub holder09: f64,
    pub holder10: f64,
    pub second_difference: f64,
    /// Embedding ladder of the boundary trace, `(k, I_{1-1/k,k})`.
    pub ladder: Vec<(f64, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RegularityReport {
    pub field: String,
    pub rows: Vec<RegularityRow>,
    pub stabilized: bool,
    pub diverging: bool,
    /// Last-to-previous Lipschitz ratio, if two levels exist.
    pub growth: Option<f64>,
}

impl RegularityReport {
    pub const CSV_HEADER: &'static str = "field,level,h,lip,holder05,holder09";

    pub fn new(field: &str, rows: Vec<RegularityRow>) -> Self {
        let (stabilized, diverging, growth) = match rows.as_slice() {
            [.., a, b] => {
                let scale = a.lip.max(b.lip);
                let stable = scale == 0.0 || (b.lip - a.lip).abs() < STABLE_CHANGE * scale;
                let growth = if a.lip > 0.0 { b.lip / a.lip } else if b.lip > 0.0 { f64::INFINITY } else { 1.0 };
                (stable, growth >= DIVERGENCE_RATIO, Some(growth))
            }
            _ => (false, false, None),
        };
        Self { field: field.to_string(), rows, stabilized, diverging, growth }
    }

    pub fn csv_rows(&self) -> Vec<String> {
        self.rows
            .iter()
            .map(|r| {
                format!(
                    "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
                    self.field, r.level, r.h, r.lip, r.holder05, r.holder09
                )
            })
            .collect()
    }
}

/// One row of estimates for `field` on `mesh`.
pub fn regularity_row(mesh: &Mesh, field: &FEField) -> Result<RegularityRow> {
    let [holder05, holder09, holder10] = holder_estimates(mesh, field)?;
    let tr = match field.role {
        FieldRole::Domain => trace(mesh, field)?,
        FieldRole::Boundary => field.clone(),
    };
    Ok(RegularityRow {
        level: mesh.refinement_level(),
        h: mesh.mesh_size(),
        lip: lipschitz_estimate(mesh, field)?,
        holder05,
        holder09,
        holder10,
        second_difference: max_second_difference(mesh, field)?,
        ladder: holder_embedding_probe(mesh, &tr)?.entries,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelSolve {
    pub level: usize,
    pub iterations: usize,
    pub converged: bool,
    pub max_residual: f64,
    pub active_domain: usize,
    pub active_boundary: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RefinementStudy {
    pub solves: Vec<LevelSolve>,
    pub reports: Vec<RegularityReport>,
    /// Set when a level failed; the reports then cover the levels before it.
    pub failure: Option<String>,
}

impl RefinementStudy {
    pub fn all_stabilized(&self) -> bool {
        self.failure.is_none() && self.reports.iter().all(|r| r.stabilized)
    }

    pub fn any_diverging(&self) -> bool {
        self.reports.iter().any(|r| r.diverging)
    }

    pub fn report(&self, field: &str) -> Option<&RegularityReport> {
        self.reports.iter().find(|r| r.field == field)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(RegularityReport::CSV_HEADER);
        out.push('\n');
        for r in &self.reports {
            for line in r.csv_rows() {
                out.push_str(&line);
                out.push('\n');
            }
        }
        out
    }
}

pub const STUDY_FIELDS: [&str; 6] = ["y", "u", "phi", "psi1", "v", "psi2"];

/// Solve the optimality system on each level (warm-started by prolongation)
/// and estimate the regularity of `ȳ, ū, φ̄, ψ₁, v̄, ψ₂`.
pub fn refinement_study(spec: &ProblemSpec, levels: RangeInclusive<usize>, options: &KktOptions) -> Result<RefinementStudy> {
    if levels.is_empty() {
        return Err(Error::Precondition("empty level range".into()));
    }
    let mut solves = Vec::new();
    let mut rows: Vec<Vec<RegularityRow>> = vec![Vec::new(); STUDY_FIELDS.len()];
    let mut failure = None;
    let mut previous: Option<ControlPair> = None;
    for level in levels {
        let model = Model::new(spec.clone(), level)?;
        let initial = match &previous {
            Some(c) if level > 0 => ControlPair {
                u: FEField::domain(model.mesh().prolongate(&c.u.values)?),
                v: FEField::boundary(model.mesh().prolongate_boundary(&c.v.values)?),
            },
            _ => ControlPair::zeros(&model),
        };
        let sol = match solve_kkt(&model, &initial, options) {
            Ok(s) => s,
            Err(e) => {
                failure = Some(format!("level {level}: {e}"));
                break;
            }
        };
        let r = &sol.report;
        solves.push(LevelSolve {
            level,
            iterations: r.iterations,
            converged: r.converged,
            max_residual: r.max_residual(),
            active_domain: r.active_domain_count,
            active_boundary: r.active_boundary_count,
        });
        if !r.converged {
            failure = Some(format!("level {level}: not converged, max residual {:e}", r.max_residual()));
            break;
        }
        let s = &sol.state;
        let fields = [&s.y, &s.u, &s.phi, &s.psi1, &s.v, &s.psi2];
        let new_rows: Vec<RegularityRow> = fields
            .par_iter()
            .map(|f| regularity_row(model.mesh(), f))
            .collect::<Result<_>>()?;
        for (acc, row) in rows.iter_mut().zip(new_rows) {
            acc.push(row);
        }
        previous = Some(ControlPair { u: s.u.clone(), v: s.v.clone() });
    }
    let reports = STUDY_FIELDS.iter().zip(rows).map(|(name, r)| RegularityReport::new(name, r)).collect();
    Ok(RefinementStudy { solves, reports, failure })
}
