//! Triangulations of smooth convex 2-D domains with a parametrised boundary.
//!
//! Meshes are produced by uniform red refinement of an octagonal seed. Every
//! new boundary vertex is placed on the analytic curve (not on the chord), so
//! the polygonal boundary converges at second order.

use std::collections::HashMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported refinement level (8 * 4^10 triangles).
pub const MAX_LEVEL: usize = 10;

const SEED_BOUNDARY_EDGES: usize = 8;

/// Smooth domain presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainPreset {
    /// Unit disk.
    Disk,
    /// Ellipse with semi-axes 1.5 and 1.0.
    Ellipse,
}

impl DomainPreset {
    pub fn semi_axes(self) -> (f64, f64) {
        match self {
            DomainPreset::Disk => (1.0, 1.0),
            DomainPreset::Ellipse => (1.5, 1.0),
        }
    }

    /// Point on the boundary curve at parameter `t`.
    pub fn curve_point(self, t: f64) -> [f64; 2] {
        let (a, b) = self.semi_axes();
        [a * t.cos(), b * t.sin()]
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainPreset::Disk => "disk",
            DomainPreset::Ellipse => "ellipse",
        }
    }
}

impl std::str::FromStr for DomainPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "disk" => Ok(DomainPreset::Disk),
            "ellipse" => Ok(DomainPreset::Ellipse),
            other => Err(Error::Config(format!("unknown domain preset `{other}`"))),
        }
    }
}

/// One edge of the boundary loop, oriented counter-clockwise.
#[derive(Clone, Debug)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    /// Unit outward normal.
    pub normal: [f64; 2],
    pub length: f64,
}

/// Conforming triangulation with an explicit boundary loop.
#[derive(Clone, Debug)]
pub struct Mesh {
    preset: DomainPreset,
    level: usize,
    vertices: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
    boundary_params: Vec<f64>,
    boundary_edges: Vec<BoundaryEdge>,
    boundary_weights: Vec<f64>,
    boundary_slot: Vec<Option<usize>>,
    /// Parent edge of every vertex created by the last refinement, indexed
    /// from `coarse_vertex_count`.
    parents: Vec<[usize; 2]>,
    coarse_vertex_count: usize,
}

/// Build the unit-disk mesh at the given refinement level.
pub fn build_disk_mesh(level: usize) -> Result<Mesh> {
    build_mesh(DomainPreset::Disk, level)
}

/// Build a mesh of `preset` at the given refinement level.
pub fn build_mesh(preset: DomainPreset, level: usize) -> Result<Mesh> {
    if level > MAX_LEVEL {
        return Err(Error::Bounds(format!(
            "refinement level {level} exceeds maximum {MAX_LEVEL}"
        )));
    }
    let mut mesh = Mesh::seed(preset);
    for _ in 0..level {
        mesh = mesh.refine();
    }
    Ok(mesh)
}

/// Uniform refinement; see [`Mesh::refine`].
pub fn refine(mesh: &Mesh) -> Mesh {
    mesh.refine()
}

/// Chordal distance between two boundary vertices (global vertex indices).
pub fn boundary_geodesic_gap(mesh: &Mesh, i: usize, j: usize) -> Result<f64> {
    for v in [i, j] {
        if mesh.boundary_slot(v).is_none() {
            return Err(Error::Domain(format!("vertex {v} is not on the boundary")));
        }
    }
    if i == j {
        return Ok(0.0);
    }
    Ok(distance(mesh.vertices[i], mesh.vertices[j]))
}

pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl Mesh {
    fn seed(preset: DomainPreset) -> Mesh {
        let n = SEED_BOUNDARY_EDGES;
        let mut vertices = vec![[0.0, 0.0]];
        let mut params = Vec::with_capacity(n);
        for k in 0..n {
            let t = 2.0 * PI * k as f64 / n as f64;
            params.push(t);
            vertices.push(preset.curve_point(t));
        }
        let triangles = (0..n).map(|k| [0, 1 + k, 1 + (k + 1) % n]).collect();
        let boundary = (1..=n).collect();
        Mesh::assemble(preset, 0, vertices, triangles, boundary, params, Vec::new(), n + 1)
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        preset: DomainPreset,
        level: usize,
        vertices: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<usize>,
        boundary_params: Vec<f64>,
        parents: Vec<[usize; 2]>,
        coarse_vertex_count: usize,
    ) -> Mesh {
        let nb = boundary.len();
        let boundary_edges: Vec<BoundaryEdge> = (0..nb)
            .map(|k| {
                let (a, b) = (boundary[k], boundary[(k + 1) % nb]);
                let (p, q) = (vertices[a], vertices[b]);
                let length = distance(p, q);
                let normal = [(q[1] - p[1]) / length, -(q[0] - p[0]) / length];
                BoundaryEdge { vertices: [a, b], normal, length }
            })
            .collect();
        let boundary_weights = (0..nb)
            .map(|k| 0.5 * (boundary_edges[(k + nb - 1) % nb].length + boundary_edges[k].length))
            .collect();
        let mut boundary_slot = vec![None; vertices.len()];
        for (k, &v) in boundary.iter().enumerate() {
            boundary_slot[v] = Some(k);
        }
        Mesh {
            preset,
            level,
            vertices,
            triangles,
            boundary,
            boundary_params,
            boundary_edges,
            boundary_weights,
            boundary_slot,
            parents,
            coarse_vertex_count,
        }
    }

    /// Split every triangle into four; boundary midpoints are moved onto the
    /// analytic curve at the parameter midpoint.
    pub fn refine(&self) -> Mesh {
        let nb = self.boundary.len();
        let mut vertices = self.vertices.clone();
        let mut parents = Vec::new();
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();

        // Boundary midpoints first so the new loop is easy to assemble.
        let mut new_boundary = Vec::with_capacity(2 * nb);
        let mut new_params = Vec::with_capacity(2 * nb);
        for k in 0..nb {
            let (a, b) = (self.boundary[k], self.boundary[(k + 1) % nb]);
            let t0 = self.boundary_params[k];
            let mut t1 = self.boundary_params[(k + 1) % nb];
            if t1 <= t0 {
                t1 += 2.0 * PI;
            }
            let tm = 0.5 * (t0 + t1);
            let m = vertices.len();
            vertices.push(self.preset.curve_point(tm));
            parents.push([a, b]);
            midpoints.insert((a.min(b), a.max(b)), m);
            new_boundary.extend([a, m]);
            new_params.extend([t0, tm]);
        }

        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 2]>| -> usize {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                parents.push([a, b]);
                vertices.len() - 1
            })
        };

        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[a, b, c] in &self.triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            triangles.push([a, ab, ca]);
            triangles.push([ab, b, bc]);
            triangles.push([ca, bc, c]);
            triangles.push([ab, bc, ca]);
        }

        Mesh::assemble(
            self.preset,
            self.level + 1,
            vertices,
            triangles,
            new_boundary,
            new_params,
            parents,
            self.vertices.len(),
        )
    }

    pub fn preset(&self) -> DomainPreset {
        self.preset
    }

    pub fn refinement_level(&self) -> usize {
        self.level
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Boundary vertices in counter-clockwise loop order.
    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary_edges
    }

    /// Trapezoidal arc-length weight of each boundary vertex, loop order.
    pub fn boundary_weights(&self) -> &[f64] {
        &self.boundary_weights
    }

    /// Curve parameter of each boundary vertex, loop order.
    pub fn boundary_params(&self) -> &[f64] {
        &self.boundary_params
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.len()
    }

    /// Position of `vertex` in the boundary loop, if it lies on the boundary.
    pub fn boundary_slot(&self, vertex: usize) -> Option<usize> {
        self.boundary_slot.get(vertex).copied().flatten()
    }

    pub fn boundary_points(&self) -> Vec<[f64; 2]> {
        self.boundary.iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn perimeter(&self) -> f64 {
        self.boundary_edges.iter().map(|e| e.length).sum()
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|&[a, b, c]| [(a, b), (b, c), (c, a)])
            .map(|(a, b)| distance(self.vertices[a], self.vertices[b]))
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of a field on the parent mesh onto this mesh.
    pub fn prolongate(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        if coarse.len() != self.coarse_vertex_count || self.level == 0 {
            return Err(Error::Domain(format!(
                "expected {} coarse values, got {}",
                self.coarse_vertex_count,
                coarse.len()
            )));
        }
        let mut fine = coarse.to_vec();
        fine.extend(self.parents.iter().map(|&[a, b]| 0.5 * (coarse[a] + coarse[b])));
        Ok(fine)
    }

    /// Prolongation of a boundary-loop field from the parent mesh.
    pub fn prolongate_boundary(&self, coarse: &[f64]) -> Result<Vec<f64>> {
        let n = coarse.len();
        if 2 * n != self.boundary.len() || self.level == 0 {
            return Err(Error::Domain(format!(
                "expected {} coarse boundary values, got {n}",
                self.boundary.len() / 2
            )));
        }
        Ok((0..n)
            .flat_map(|k| [coarse[k], 0.5 * (coarse[k] + coarse[(k + 1) % n])])
            .collect())
    }

    /// Check the structural invariants; returns a description of the first
    /// violation found.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Domain(msg));
        for t in 0..self.triangles.len() {
            if self.triangle_area(t) <= 0.0 {
                return fail(format!("triangle {t} has non-positive area"));
            }
        }
        let mut edge_use: HashMap<(usize, usize), usize> = HashMap::new();
        for &[a, b, c] in &self.triangles {
            for (p, q) in [(a, b), (b, c), (c, a)] {
                *edge_use.entry((p.min(q), p.max(q))).or_default() += 1;
            }
        }
        let mut boundary_edges = 0;
        for (&(p, q), &count) in &edge_use {
            match count {
                2 => {}
                1 => {
                    boundary_edges += 1;
                    let (sp, sq) = match (self.boundary_slot(p), self.boundary_slot(q)) {
                        (Some(sp), Some(sq)) => (sp, sq),
                        _ => return fail(format!("edge ({p},{q}) is unshared but off the boundary")),
                    };
                    let nb = self.boundary.len();
                    if (sp + 1) % nb != sq && (sq + 1) % nb != sp {
                        return fail(format!("edge ({p},{q}) is not a loop edge"));
                    }
                }
                _ => return fail(format!("edge ({p},{q}) used {count} times")),
            }
        }
        if boundary_edges != self.boundary.len() {
            return fail("boundary loop does not cover the unshared edges".into());
        }
        for (k, e) in self.boundary_edges.iter().enumerate() {
            let norm = e.normal[0].hypot(e.normal[1]);
            if (norm - 1.0).abs() > 1e-12 {
                return fail(format!("normal {k} has length {norm}"));
            }
            let (p, q) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
            let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
            if e.normal[0] * mid[0] + e.normal[1] * mid[1] <= 0.0 {
                return fail(format!("normal {k} points inward"));
            }
        }
        let total: f64 = self.boundary_weights.iter().sum();
        if (total - self.perimeter()).abs() > 1e-12 {
            return fail("boundary weights do not sum to the perimeter".into());
        }
        Ok(())
    }
}
