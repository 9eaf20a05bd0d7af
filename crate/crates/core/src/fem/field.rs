//! Plain-text nodal field files: a `field q` header then one value per line.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

pub fn field_to_text(v: &DVector<f64>) -> String {
    let mut s = String::with_capacity(24 * v.len() + 16);
    let _ = writeln!(s, "field {}", v.len());
    for x in v.iter() {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

pub fn field_from_text(text: &str) -> Result<DVector<f64>> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty field file"))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("field") {
        return Err(Error::parse(1, "expected `field <count>` header"));
    }
    let q: usize = parts
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::parse(1, "missing or invalid value count"))?;
    let mut values = Vec::with_capacity(q);
    for (i, line) in lines {
        let x: f64 = line
            .trim()
            .parse()
            .map_err(|_| Error::parse(i + 1, format!("invalid number `{}`", line.trim())))?;
        if !x.is_finite() {
            return Err(Error::parse(i + 1, "non-finite value"));
        }
        values.push(x);
    }
    if values.len() != q {
        return Err(Error::DimensionMismatch {
            expected: q,
            found: values.len(),
            context: "field file values",
        });
    }
    Ok(DVector::from_vec(values))
}

pub fn write_field(path: &Path, v: &DVector<f64>) -> Result<()> {
    std::fs::write(path, field_to_text(v))?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<DVector<f64>> {
    field_from_text(&std::fs::read_to_string(path)?)
}
