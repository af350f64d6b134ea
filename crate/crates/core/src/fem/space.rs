use std::sync::Arc;

use super::sparse::{Pattern, SparseOperator};
use crate::catalog::ProblemSpec;
use crate::error::{Error, Result};
use crate::geometry::Mesh;

/// Barycentric coordinates of the 3-point interior rule (weights area/3).
pub const TRI_RULE: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Edge parameters of the 2-point Gauss rule (weights length/2).
pub const EDGE_RULE: [f64; 2] = [
    0.5 - 0.288_675_134_594_812_9, // 1/(2√3)
    0.5 + 0.288_675_134_594_812_9,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    Domain,
    Boundary,
}

/// P1 nodal field: one value per mesh vertex or per boundary vertex (loop order).
#[derive(Clone, Debug, PartialEq)]
pub struct FEField {
    pub role: FieldRole,
    pub values: Vec<f64>,
}

impl FEField {
    pub fn domain(values: Vec<f64>) -> Self {
        Self { role: FieldRole::Domain, values }
    }

    pub fn boundary(values: Vec<f64>) -> Self {
        Self { role: FieldRole::Boundary, values }
    }

    pub fn constant(mesh: &Mesh, role: FieldRole, c: f64) -> Self {
        let n = match role {
            FieldRole::Domain => mesh.vertex_count(),
            FieldRole::Boundary => mesh.boundary_count(),
        };
        Self { role, values: vec![c; n] }
    }

    /// Nodal interpolant of `f(x)`.
    pub fn interpolate(mesh: &Mesh, role: FieldRole, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = match role {
            FieldRole::Domain => mesh.vertices().iter().map(|&x| f(x)).collect(),
            FieldRole::Boundary => mesh.boundary_points().into_iter().map(f).collect(),
        };
        Self { role, values }
    }

    /// Check role-consistent length and finiteness.
    pub fn check(&self, mesh: &Mesh, role: FieldRole) -> Result<()> {
        if self.role != role {
            return Err(Error::Domain(format!("expected a {role:?} field, got {:?}", self.role)));
        }
        let n = match role {
            FieldRole::Domain => mesh.vertex_count(),
            FieldRole::Boundary => mesh.boundary_count(),
        };
        if self.values.len() != n {
            return Err(Error::Domain(format!(
                "{role:?} field has {} values, mesh needs {n}",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite value at index {i}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { role: self.role, values: self.values.iter().map(|&v| f(v)).collect() }
    }
}

/// Restriction of a domain field to the boundary loop.
pub fn trace(mesh: &Mesh, field: &FEField) -> Result<FEField> {
    field.check(mesh, FieldRole::Domain)?;
    Ok(FEField::boundary(mesh.boundary().iter().map(|&v| field.values[v]).collect()))
}

/// Spatial location of every interior quadrature point, triangle-major.
pub fn domain_quadrature_points(mesh: &Mesh) -> Vec<[f64; 2]> {
    let v = mesh.vertices();
    mesh.triangles()
        .iter()
        .flat_map(|t| TRI_RULE.iter().map(move |b| combine(v, t, b)))
        .collect()
}

/// Spatial location of every boundary quadrature point, edge-major.
pub fn boundary_quadrature_points(mesh: &Mesh) -> Vec<[f64; 2]> {
    let v = mesh.vertices();
    mesh.boundary_edges()
        .iter()
        .flat_map(|e| {
            let (a, b) = (v[e.vertices[0]], v[e.vertices[1]]);
            EDGE_RULE.map(|s| [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])])
        })
        .collect()
}

fn combine(v: &[[f64; 2]], t: &[usize; 3], b: &[f64; 3]) -> [f64; 2] {
    [
        b[0] * v[t[0]][0] + b[1] * v[t[1]][0] + b[2] * v[t[2]][0],
        b[0] * v[t[0]][1] + b[1] * v[t[1]][1] + b[2] * v[t[2]][1],
    ]
}

/// Gradients of the barycentric coordinates and the area of a triangle.
pub fn barycentric_gradients(p: [[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let g = [
        [(p[1][1] - p[2][1]) / det, (p[2][0] - p[1][0]) / det],
        [(p[2][1] - p[0][1]) / det, (p[0][0] - p[2][0]) / det],
        [(p[0][1] - p[1][1]) / det, (p[1][0] - p[0][0]) / det],
    ];
    (g, 0.5 * det)
}

/// Element stiffness `∫ (a ∇φ_j)·∇φ_i` with `a = [a11, a12, a22]` constant.
pub fn element_stiffness(p: [[f64; 2]; 3], a: [f64; 3]) -> [[f64; 3]; 3] {
    let (g, area) = barycentric_gradients(p);
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let ag = [a[0] * g[j][0] + a[1] * g[j][1], a[1] * g[j][0] + a[2] * g[j][1]];
            k[i][j] = area * (ag[0] * g[i][0] + ag[1] * g[i][1]);
            k[j][i] = k[i][j];
        }
    }
    k
}

/// Precomputed geometry, sparsity and base matrices of the P1 space.
#[derive(Clone, Debug)]
pub struct FemSpace {
    mesh: Mesh,
    grads: Vec<[[f64; 2]; 3]>,
    areas: Vec<f64>,
    pattern: Arc<Pattern>,
    tri_slots: Vec<[usize; 9]>,
    edge_slots: Vec<[usize; 4]>,
    edge_bslots: Vec<[usize; 2]>,
    mass: SparseOperator,
    laplace: SparseOperator,
    boundary_mass_dom: SparseOperator,
    boundary_mass: SparseOperator,
}

impl FemSpace {
    pub fn new(mesh: Mesh) -> Self {
        let n = mesh.vertex_count();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for t in mesh.triangles() {
            for &a in t {
                rows[a].extend_from_slice(t);
            }
        }
        let pattern = Arc::new(Pattern::from_rows(rows));
        let v = mesh.vertices();
        let mut grads = Vec::with_capacity(mesh.triangles().len());
        let mut areas = Vec::with_capacity(mesh.triangles().len());
        let mut tri_slots = Vec::with_capacity(mesh.triangles().len());
        for t in mesh.triangles() {
            let (g, area) = barycentric_gradients([v[t[0]], v[t[1]], v[t[2]]]);
            grads.push(g);
            areas.push(area);
            let mut s = [0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    s[3 * i + j] = pattern.slot(t[i], t[j]).expect("triangle entry");
                }
            }
            tri_slots.push(s);
        }
        let mut edge_slots = Vec::new();
        let mut edge_bslots = Vec::new();
        for e in mesh.boundary_edges() {
            let [a, b] = e.vertices;
            edge_slots.push([
                pattern.slot(a, a).unwrap(),
                pattern.slot(a, b).unwrap(),
                pattern.slot(b, a).unwrap(),
                pattern.slot(b, b).unwrap(),
            ]);
            edge_bslots.push([mesh.boundary_slot(a).unwrap(), mesh.boundary_slot(b).unwrap()]);
        }
        let mut space = Self {
            mesh,
            grads,
            areas,
            pattern: pattern.clone(),
            tri_slots,
            edge_slots,
            edge_bslots,
            mass: SparseOperator::zeros(pattern.clone()),
            laplace: SparseOperator::zeros(pattern.clone()),
            boundary_mass_dom: SparseOperator::zeros(pattern),
            boundary_mass: SparseOperator::from_triplets(0, &[]),
        };
        let ones_q = vec![1.0; 3 * space.areas.len()];
        space.mass = space.weighted_mass(&ones_q);
        space.laplace = space.stiffness_constant([1.0, 0.0, 1.0]);
        let ones_e = vec![1.0; 2 * space.edge_slots.len()];
        space.boundary_mass_dom = space.boundary_weighted_mass(&ones_e);
        let mut trip = Vec::new();
        for (e, edge) in space.mesh.boundary_edges().iter().enumerate() {
            let [a, b] = space.edge_bslots[e];
            let h = edge.length;
            trip.extend([(a, a, h / 3.0), (a, b, h / 6.0), (b, a, h / 6.0), (b, b, h / 3.0)]);
        }
        space.boundary_mass = SparseOperator::from_triplets(space.mesh.boundary_count(), &trip);
        space
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn n(&self) -> usize {
        self.mesh.vertex_count()
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    /// Consistent domain mass matrix.
    pub fn mass(&self) -> &SparseOperator {
        &self.mass
    }

    /// Stiffness matrix of the plain Laplacian.
    pub fn laplace(&self) -> &SparseOperator {
        &self.laplace
    }

    /// Boundary mass matrix indexed by boundary loop position.
    pub fn boundary_mass(&self) -> &SparseOperator {
        &self.boundary_mass
    }

    /// Boundary mass matrix embedded in domain indices.
    pub fn boundary_mass_domain(&self) -> &SparseOperator {
        &self.boundary_mass_dom
    }

    pub fn triangle_count(&self) -> usize {
        self.areas.len()
    }

    pub fn quadrature_points(&self) -> Vec<[f64; 2]> {
        domain_quadrature_points(&self.mesh)
    }

    pub fn boundary_quadrature_points(&self) -> Vec<[f64; 2]> {
        boundary_quadrature_points(&self.mesh)
    }

    /// Values of a nodal domain field at the interior quadrature points.
    pub fn at_quadrature(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.n(), "domain field length");
        self.mesh
            .triangles()
            .iter()
            .flat_map(|t| {
                TRI_RULE.map(|b| b[0] * nodal[t[0]] + b[1] * nodal[t[1]] + b[2] * nodal[t[2]])
            })
            .collect()
    }

    /// Values of a boundary-loop field at the boundary quadrature points.
    pub fn at_boundary_quadrature(&self, loop_values: &[f64]) -> Vec<f64> {
        assert_eq!(loop_values.len(), self.mesh.boundary_count(), "boundary field length");
        self.edge_bslots
            .iter()
            .flat_map(|&[a, b]| {
                EDGE_RULE.map(|s| (1.0 - s) * loop_values[a] + s * loop_values[b])
            })
            .collect()
    }

    /// Interior quadrature weights, aligned with [`Self::at_quadrature`].
    pub fn quadrature_weights(&self) -> Vec<f64> {
        self.areas.iter().flat_map(|&a| [a / 3.0; 3]).collect()
    }

    pub fn boundary_quadrature_weights(&self) -> Vec<f64> {
        self.mesh.boundary_edges().iter().flat_map(|e| [e.length / 2.0; 2]).collect()
    }

    pub fn integrate(&self, q: &[f64]) -> f64 {
        self.quadrature_weights().iter().zip(q).map(|(w, v)| w * v).sum()
    }

    pub fn integrate_boundary(&self, q: &[f64]) -> f64 {
        self.boundary_quadrature_weights().iter().zip(q).map(|(w, v)| w * v).sum()
    }

    /// Load vector `∫ F φ_i` from values of `F` at the interior quadrature points.
    pub fn load(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), 3 * self.areas.len(), "quadrature vector length");
        let mut out = vec![0.0; self.n()];
        for (k, t) in self.mesh.triangles().iter().enumerate() {
            let w = self.areas[k] / 3.0;
            for (m, b) in TRI_RULE.iter().enumerate() {
                let f = w * q[3 * k + m];
                for i in 0..3 {
                    out[t[i]] += f * b[i];
                }
            }
        }
        out
    }

    /// Boundary load `∫_Γ G φ_i` in domain indices.
    pub fn boundary_load(&self, q: &[f64]) -> Vec<f64> {
        assert_eq!(q.len(), 2 * self.edge_slots.len(), "boundary quadrature length");
        let mut out = vec![0.0; self.n()];
        for (e, edge) in self.mesh.boundary_edges().iter().enumerate() {
            let [a, b] = edge.vertices;
            let w = edge.length / 2.0;
            for (m, s) in EDGE_RULE.iter().enumerate() {
                out[a] += w * q[2 * e + m] * (1.0 - s);
                out[b] += w * q[2 * e + m] * s;
            }
        }
        out
    }

    /// Mass matrix weighted by a coefficient given at interior quadrature points.
    pub fn weighted_mass(&self, q: &[f64]) -> SparseOperator {
        assert_eq!(q.len(), 3 * self.areas.len(), "quadrature vector length");
        let mut m = SparseOperator::zeros(self.pattern.clone());
        let vals = m.values_mut();
        for (k, slots) in self.tri_slots.iter().enumerate() {
            let w = self.areas[k] / 3.0;
            for (r, b) in TRI_RULE.iter().enumerate() {
                let c = w * q[3 * k + r];
                for i in 0..3 {
                    for j in 0..3 {
                        vals[slots[3 * i + j]] += c * (b[i] * b[j]);
                    }
                }
            }
        }
        m
    }

    /// Boundary mass weighted by a coefficient at boundary quadrature points,
    /// in domain indices.
    pub fn boundary_weighted_mass(&self, q: &[f64]) -> SparseOperator {
        assert_eq!(q.len(), 2 * self.edge_slots.len(), "boundary quadrature length");
        let mut m = SparseOperator::zeros(self.pattern.clone());
        let vals = m.values_mut();
        for (e, edge) in self.mesh.boundary_edges().iter().enumerate() {
            let w = edge.length / 2.0;
            let s4 = self.edge_slots[e];
            for (r, s) in EDGE_RULE.iter().enumerate() {
                let c = w * q[2 * e + r];
                let phi = [1.0 - s, *s];
                vals[s4[0]] += c * phi[0] * phi[0];
                vals[s4[1]] += c * phi[0] * phi[1];
                vals[s4[2]] += c * phi[1] * phi[0];
                vals[s4[3]] += c * phi[1] * phi[1];
            }
        }
        m
    }

    fn stiffness_constant(&self, a: [f64; 3]) -> SparseOperator {
        let mut m = SparseOperator::zeros(self.pattern.clone());
        let vals = m.values_mut();
        for (k, slots) in self.tri_slots.iter().enumerate() {
            let ke = self.local_stiffness(k, a);
            for i in 0..3 {
                for j in 0..3 {
                    vals[slots[3 * i + j]] += ke[i][j];
                }
            }
        }
        m
    }

    fn local_stiffness(&self, k: usize, a: [f64; 3]) -> [[f64; 3]; 3] {
        let g = &self.grads[k];
        let area = self.areas[k];
        let mut ke = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in i..3 {
                let ag = [a[0] * g[j][0] + a[1] * g[j][1], a[1] * g[j][0] + a[2] * g[j][1]];
                ke[i][j] = area * (ag[0] * g[i][0] + ag[1] * g[i][1]);
                ke[j][i] = ke[i][j];
            }
        }
        ke
    }

    /// Galerkin matrix of `∫ a∇y·∇w + a0 y w`. With `diffusion = false` only
    /// the reaction block is assembled.
    pub fn assemble_operator(&self, spec: &ProblemSpec, diffusion: bool) -> Result<SparseOperator> {
        let points = self.quadrature_points();
        let eval = |e: &crate::catalog::ScalarExpr, x: [f64; 2]| -> Result<f64> {
            e.eval(x, 0.0).map_err(|err| Error::Assembly {
                location: format!("point ({:.6}, {:.6})", x[0], x[1]),
                reason: err.to_string(),
            })
        };
        let mut a0q = Vec::with_capacity(points.len());
        for &x in &points {
            a0q.push(eval(&spec.a0, x)?);
        }
        let mut op = self.weighted_mass(&a0q);
        if !diffusion {
            return Ok(op);
        }
        let vals = op.values_mut();
        for (k, slots) in self.tri_slots.iter().enumerate() {
            for r in 0..3 {
                let x = points[3 * k + r];
                let a = [eval(&spec.a11, x)?, eval(&spec.a12, x)?, eval(&spec.a22, x)?];
                let mean = 0.5 * (a[0] + a[2]);
                let min_eig = mean - (0.5 * (a[0] - a[2])).hypot(a[1]);
                if !(min_eig > 0.0) {
                    return Err(Error::Assembly {
                        location: format!("triangle {k}, point ({:.6}, {:.6})", x[0], x[1]),
                        reason: format!("ellipticity violated, smallest eigenvalue {min_eig}"),
                    });
                }
                // Each point carries a third of the element integral.
                let ke = self.local_stiffness(k, a);
                for i in 0..3 {
                    for j in 0..3 {
                        vals[slots[3 * i + j]] += ke[i][j] / 3.0;
                    }
                }
            }
        }
        Ok(op)
    }

    /// Scatter a boundary-loop vector into domain indices.
    pub fn extend_boundary(&self, loop_values: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (k, &v) in self.mesh.boundary().iter().enumerate() {
            out[v] = loop_values[k];
        }
        out
    }

    /// Gather domain-indexed values on the boundary loop.
    pub fn restrict_boundary(&self, domain_values: &[f64]) -> Vec<f64> {
        self.mesh.boundary().iter().map(|&v| domain_values[v]).collect()
    }

    /// `(∫ |v|^p)^(1/p)` by quadrature of the P1 interpolant.
    pub fn lp_norm(&self, field: &FEField, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Precondition(format!("norm exponent must be >= 1, got {p}")));
        }
        field.check(&self.mesh, field.role)?;
        let (q, w) = match field.role {
            FieldRole::Domain => (self.at_quadrature(&field.values), self.quadrature_weights()),
            FieldRole::Boundary => (
                self.at_boundary_quadrature(&field.values),
                self.boundary_quadrature_weights(),
            ),
        };
        let s: f64 = q.iter().zip(&w).map(|(v, w)| w * v.abs().powf(p)).sum();
        Ok(s.powf(1.0 / p))
    }

    /// `(‖∇v‖² + ‖v‖²)^(1/2)` for a domain field.
    pub fn h1_norm(&self, nodal: &[f64]) -> f64 {
        (self.laplace.quad_form(nodal) + self.mass.quad_form(nodal)).max(0.0).sqrt()
    }

    /// Per-triangle gradient of a nodal field.
    pub fn gradients(&self, nodal: &[f64]) -> Vec<[f64; 2]> {
        self.mesh
            .triangles()
            .iter()
            .zip(&self.grads)
            .map(|(t, g)| {
                let mut d = [0.0; 2];
                for i in 0..3 {
                    d[0] += nodal[t[i]] * g[i][0];
                    d[1] += nodal[t[i]] * g[i][1];
                }
                d
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_disk_mesh, build_mesh, DomainPreset};

    #[test]
    fn reference_triangle_stiffness() {
        let k = element_stiffness([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [1.0, 0.0, 1.0]);
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((k[i][j] - expected[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_mass_rows_match_weights() {
        for preset in [DomainPreset::Disk, DomainPreset::Ellipse] {
            let mesh = build_mesh(preset, 3).unwrap();
            let space = FemSpace::new(mesh);
            let rows = space.boundary_mass().row_sums();
            for (r, w) in rows.iter().zip(space.mesh().boundary_weights()) {
                assert!((r - w).abs() < 1e-12);
            }
            let ones = vec![1.0; rows.len()];
            let per = space.mesh().perimeter();
            assert!((space.boundary_mass().quad_form(&ones) - per).abs() < 1e-12);
            assert!((rows.iter().sum::<f64>() - per).abs() < 1e-12);
        }
    }

    #[test]
    fn trace_of_x1_is_cosine() {
        let mesh = build_disk_mesh(3).unwrap();
        let f = FEField::interpolate(&mesh, FieldRole::Domain, |x| x[0]);
        let tr = trace(&mesh, &f).unwrap();
        for (v, t) in tr.values.iter().zip(mesh.boundary_params()) {
            assert!((v - t.cos()).abs() < 1e-14);
        }
        let c = trace(&mesh, &FEField::constant(&mesh, FieldRole::Domain, 2.5)).unwrap();
        assert!(c.values.iter().all(|&v| v == 2.5));
        assert!(trace(&mesh, &tr).is_err());
    }

    #[test]
    fn lp_norm_examples() {
        let mesh = build_disk_mesh(4).unwrap();
        let space = FemSpace::new(mesh.clone());
        let c = FEField::constant(&mesh, FieldRole::Domain, -3.0);
        assert!((space.lp_norm(&c, 2.0).unwrap() - 3.0 * mesh.area().sqrt()).abs() < 1e-12);
        let z = FEField::constant(&mesh, FieldRole::Domain, 0.0);
        assert_eq!(space.lp_norm(&z, 3.0).unwrap(), 0.0);
        let fine = FemSpace::new(build_disk_mesh(6).unwrap());
        let x1 = FEField::interpolate(fine.mesh(), FieldRole::Domain, |x| x[0]);
        let target = (std::f64::consts::PI / 4.0).sqrt();
        assert!((fine.lp_norm(&x1, 2.0).unwrap() - target).abs() < 1e-3);
    }

    #[test]
    fn lp_norm_matches_mass_form() {
        let space = FemSpace::new(build_disk_mesh(3).unwrap());
        let v: Vec<f64> = (0..space.n()).map(|i| ((i * 37 % 11) as f64 - 5.0) * 0.3).collect();
        let n2 = space.lp_norm(&FEField::domain(v.clone()), 2.0).unwrap();
        assert!((n2 * n2 - space.mass().quad_form(&v)).abs() < 1e-12);
    }

    #[test]
    fn mass_only_operator_is_mass() {
        let spec = crate::presets::spec_with(&[("a0", "1")]);
        let space = FemSpace::new(build_disk_mesh(2).unwrap());
        let op = space.assemble_operator(&spec, false).unwrap();
        let diff = op.add_scaled(space.mass(), -1.0);
        assert!(diff.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn constants_in_kernel_without_reaction() {
        let spec = crate::presets::spec_with(&[("a0", "0"), ("a11", "2 + x1^2"), ("a12", "0.3*x2"), ("a22", "1")]);
        let space = FemSpace::new(build_disk_mesh(3).unwrap());
        let op = space.assemble_operator(&spec, true).unwrap();
        let r = op.mul_vec(&vec![1.0; space.n()]);
        assert!(r.iter().all(|v| v.abs() < 1e-12));
        assert!(op.is_symmetric(0.0));
    }

    #[test]
    fn ellipticity_failure_is_located() {
        let spec = crate::presets::spec_with(&[("a11", "x1")]);
        let space = FemSpace::new(build_disk_mesh(1).unwrap());
        match space.assemble_operator(&spec, true) {
            Err(Error::Assembly { location, .. }) => assert!(location.contains("triangle")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mass_system_solves_to_one() {
        let space = FemSpace::new(build_disk_mesh(3).unwrap());
        let b = space.mass().mul_vec(&vec![1.0; space.n()]);
        let x = super::super::solve_linear(space.mass(), &b).unwrap();
        assert!(x.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }
}
