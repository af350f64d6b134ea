//! MESHFIELD v1 text format: a header line, the vertex count, then
//! `x y value` per vertex with 17 significant digits.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::fem::{FEField, FieldRole};
use crate::geometry::Mesh;

pub const MESHFIELD_HEADER: &str = "MESHFIELD v1";

/// Boundary fields are written at the boundary vertices in loop order.
pub fn write_meshfield<W: Write>(mesh: &Mesh, field: &FEField, mut out: W) -> Result<()> {
    field.check(mesh, field.role)?;
    let pts = match field.role {
        FieldRole::Domain => mesh.vertices().to_vec(),
        FieldRole::Boundary => mesh.boundary_points(),
    };
    let mut text = format!("{MESHFIELD_HEADER}\n{}\n", pts.len());
    for (p, v) in pts.iter().zip(&field.values) {
        text.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", p[0], p[1], v));
    }
    Ok(out.write_all(text.as_bytes())?)
}

pub fn meshfield_string(mesh: &Mesh, field: &FEField) -> Result<String> {
    let mut buf = Vec::new();
    write_meshfield(mesh, field, &mut buf)?;
    Ok(String::from_utf8(buf).expect("ascii output"))
}

/// Parsed MESHFIELD contents: vertex coordinates and values.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshFieldData {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
}

pub fn read_meshfield<R: BufRead>(input: R) -> Result<MeshFieldData> {
    let parse_err = |line: usize, msg: String| Error::Parse { field: format!("MESHFIELD line {line}"), message: msg };
    let mut lines = input.lines().enumerate();
    let mut next = || -> Result<Option<(usize, String)>> {
        match lines.next() {
            None => Ok(None),
            Some((i, l)) => Ok(Some((i + 1, l?))),
        }
    };
    match next()? {
        Some((_, h)) if h.trim_end() == MESHFIELD_HEADER => {}
        Some((n, h)) => return Err(parse_err(n, format!("expected `{MESHFIELD_HEADER}`, found `{h}`"))),
        None => return Err(parse_err(1, "empty input".into())),
    }
    let (n_line, count) = match next()? {
        Some((n, c)) => (n, c.trim().parse::<usize>().map_err(|e| parse_err(n, e.to_string()))?),
        None => return Err(parse_err(2, "missing vertex count".into())),
    };
    let mut points = Vec::with_capacity(count);
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        let Some((n, l)) = next()? else {
            return Err(parse_err(n_line + points.len() + 1, format!("expected {count} vertex lines")));
        };
        let nums: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|e| parse_err(n, format!("`{t}`: {e}"))))
            .collect::<Result<_>>()?;
        if nums.len() != 3 {
            return Err(parse_err(n, format!("expected 3 numbers, found {}", nums.len())));
        }
        points.push([nums[0], nums[1]]);
        values.push(nums[2]);
    }
    Ok(MeshFieldData { points, values })
}
