//! Artifact formats: grid-function CSV, PGM heatmaps with a range sidecar.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{Domain, GridFunction};

/// Decimal scientific notation with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

fn header(dim: usize, column: &str) -> Vec<String> {
    let mut h: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    h.push(column.to_string());
    h
}

/// CSV with columns `x1[,x2],<column>`, one row per node in node order.
pub fn grid_csv_string(u: &GridFunction, column: &str) -> Result<String> {
    let domain = u.domain();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(domain.dim(), column))?;
    for (i, v) in u.values().iter().enumerate() {
        let mut row: Vec<String> = domain.coords(i).iter().map(|&c| fmt17(c)).collect();
        row.push(fmt17(*v));
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Parse(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn write_grid_csv(u: &GridFunction, path: &Path, column: &str) -> Result<()> {
    write_text(path, &grid_csv_string(u, column)?)
}

/// Reads a grid-function CSV onto `domain`; rows must list the domain's
/// nodes in order with matching coordinates.
pub fn read_grid_csv(path: &Path, domain: &Arc<Domain>) -> Result<GridFunction> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_grid_csv(&text, domain)
}

pub fn parse_grid_csv(text: &str, domain: &Arc<Domain>) -> Result<GridFunction> {
    let dim = domain.dim();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let head = reader.headers()?.clone();
    let expected: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
    if head.len() != dim + 1 || head.iter().take(dim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::ShapeMismatch(format!(
            "header {:?} does not match a {dim}-dimensional grid",
            head.iter().collect::<Vec<_>>()
        )));
    }
    let tol = 1e-9 * domain.h();
    let mut values = Vec::with_capacity(domain.node_count());
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        if row >= domain.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "more rows than the {} grid nodes",
                domain.node_count()
            )));
        }
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("row {}: bad number {s:?}", row + 2)))
        };
        let coords = domain.coords(row);
        for k in 0..dim {
            let c = parse(&record[k])?;
            if (c - coords[k]).abs() > tol {
                return Err(Error::ShapeMismatch(format!(
                    "row {} coordinate x{} = {c} but node {row} sits at {}",
                    row + 2,
                    k + 1,
                    coords[k]
                )));
            }
        }
        values.push(parse(&record[dim])?);
    }
    if values.len() != domain.node_count() {
        return Err(Error::ShapeMismatch(format!(
            "{} rows for {} grid nodes",
            values.len(),
            domain.node_count()
        )));
    }
    GridFunction::new(domain.clone(), values)
}

/// Binary PGM of a 2D grid function over its bounding lattice (row 0 is the
/// top, largest `x2`); lattice points outside the node set are black.
/// Returns the `(min, max)` used for the linear gray map.
pub fn pgm_bytes(u: &GridFunction) -> Result<(Vec<u8>, f64, f64)> {
    let domain = u.domain();
    if domain.dim() != 2 {
        return Err(Error::ShapeMismatch("heatmaps need a 2D grid".into()));
    }
    let half = domain.lattice_half();
    let side = domain.lattice_side();
    let (lo, hi) = u
        .values()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    for row in 0..side as i32 {
        let i2 = half - row;
        for col in 0..side as i32 {
            let i1 = col - half;
            let gray = match domain.node_at([i1, i2]) {
                Some(n) if span > 0.0 => (((u.value(n) - lo) / span) * 255.0).round() as u8,
                Some(_) => 128,
                None => 0,
            };
            out.push(gray);
        }
    }
    Ok((out, lo, hi))
}

/// Writes `path` (PGM) and `path` + `.range` holding `min=` and `max=`.
pub fn write_pgm(u: &GridFunction, path: &Path) -> Result<()> {
    let (bytes, lo, hi) = pgm_bytes(u)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;
    let mut sidecar = PathBuf::from(path);
    sidecar.as_mut_os_string().push(".range");
    write_text(&sidecar, &format!("min={}\nmax={}\n", fmt17(lo), fmt17(hi)))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
