//! Byte-exact output formats: `%.17g` numbers, canonical JSON, CSV files and
//! binary PGM/PPM images.

use std::fmt::Write as _;
use std::path::Path;

use ifslab_core::geometry::{point_from_slice, Bounds, Point};
use serde_json::Value;

use crate::error::CliError;

/// C `printf("%.17g")`: 17 significant digits, trailing zeros removed,
/// exponent form when the decimal exponent is below -4 or at least 17.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{x:.*}", (16 - exp) as usize)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// JSON value for a float; non-finite values become the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| Value::String(fmt_g17(x)), Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn point_json(p: &Point, dim: usize) -> Value {
    nums(&p[..dim])
}

/// Two-space indented JSON with sorted keys and `%.17g` floats, ending in a
/// newline.
pub fn canonical_json(v: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, v, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, v: &Value, indent: usize) {
    let pad = |out: &mut String, n: usize| out.extend(std::iter::repeat_n(' ', n));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_i64(), n.as_u64()) {
            (Some(i), _) => write!(out, "{i}").unwrap(),
            (_, Some(u)) => write!(out, "{u}").unwrap(),
            _ => out.push_str(&fmt_g17(n.as_f64().expect("finite float"))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string escapes")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            // short scalar arrays stay on one line
            if items.len() <= 8 && items.iter().all(|x| !x.is_array() && !x.is_object()) {
                out.push('[');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(out, x, indent);
                }
                out.push(']');
                return;
            }
            out.push_str("[\n");
            for (i, x) in items.iter().enumerate() {
                pad(out, indent + 2);
                write_value(out, x, indent + 2);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(out, indent + 2);
                out.push_str(&serde_json::to_string(k).expect("string escapes"));
                out.push_str(": ");
                write_value(out, &map[*k], indent + 2);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(out, indent);
            out.push('}');
        }
    }
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn header(first: &[&str], dim: usize) -> String {
    let mut cols: Vec<&str> = first.to_vec();
    cols.extend(&AXES[..dim]);
    cols.join(",") + "\n"
}

fn row(out: &mut String, lead: &[String], p: &[f64]) {
    let mut fields: Vec<String> = lead.to_vec();
    fields.extend(p.iter().map(|v| fmt_g17(*v)));
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// Point CSV: header `x[,y[,z]]`, one point per row.
pub fn points_csv(points: &[Point], dim: usize) -> String {
    let mut out = header(&[], dim);
    for p in points {
        row(&mut out, &[], &p[..dim]);
    }
    out
}

/// Measure CSV: header `weight,x[,y[,z]]`.
pub fn measure_csv(atoms: &[Point], weights: &[f64], dim: usize) -> String {
    let mut out = header(&["weight"], dim);
    for (p, w) in atoms.iter().zip(weights) {
        row(&mut out, &[fmt_g17(*w)], &p[..dim]);
    }
    out
}

/// Plan CSV: header `source,target,mass` with 0-based atom indices.
pub fn plan_csv(entries: &[(usize, usize, f64)]) -> String {
    let mut out = String::from("source,target,mass\n");
    for (i, j, f) in entries {
        writeln!(out, "{i},{j},{}", fmt_g17(*f)).unwrap();
    }
    out
}

/// Orbit CSV: header `index,x[,y[,z]]`.
pub fn orbit_csv(indices: &[usize], points: &[Point], dim: usize) -> String {
    let mut out = header(&["index"], dim);
    for (k, p) in indices.iter().zip(points) {
        row(&mut out, &[k.to_string()], &p[..dim]);
    }
    out
}

/// Numeric rows of a CSV file. A first line that does not parse as numbers
/// is taken as the header; blank lines are skipped.
fn read_rows(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(r) => rows.push(r),
            Err(_) if i == 0 => {}
            Err(e) => {
                return Err(CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)));
            }
        }
    }
    Ok(rows)
}

fn check_width(path: &Path, rows: &[Vec<f64>], width: usize) -> Result<(), CliError> {
    if rows.is_empty() {
        return Err(CliError::Validation(format!("{}: no data rows", path.display())));
    }
    if let Some(r) = rows.iter().position(|r| r.len() != width) {
        return Err(CliError::Validation(format!(
            "{}: data row {} has {} columns, expected {width}",
            path.display(),
            r + 1,
            rows[r].len()
        )));
    }
    Ok(())
}

pub fn read_points_csv(path: &Path, dim: usize) -> Result<Vec<Point>, CliError> {
    let rows = read_rows(path)?;
    check_width(path, &rows, dim)?;
    Ok(rows.iter().map(|r| point_from_slice(r)).collect())
}

pub fn read_measure_csv(path: &Path, dim: usize) -> Result<(Vec<Point>, Vec<f64>), CliError> {
    let rows = read_rows(path)?;
    check_width(path, &rows, dim + 1)?;
    Ok(rows.iter().map(|r| (point_from_slice(&r[1..]), r[0])).unzip())
}

/// Square matrix of transition probabilities, one row per line.
pub fn read_matrix_csv(path: &Path) -> Result<Vec<Vec<f64>>, CliError> {
    let rows = read_rows(path)?;
    let n = rows.len();
    check_width(path, &rows, n)?;
    Ok(rows)
}

/// Pixel of `p` under floor mapping of `bbox` onto a `width × height`
/// raster with the y axis pointing up. One-dimensional points fill their
/// whole column, so `None` stands for every row.
fn pixel(p: &Point, dim: usize, bbox: &Bounds, width: usize, height: usize) -> Option<(usize, Option<usize>)> {
    let cell = |v: f64, lo: f64, hi: f64, n: usize| -> Option<usize> {
        if !(v >= lo && v <= hi) {
            return None;
        }
        if hi <= lo {
            return Some(n / 2);
        }
        Some((((v - lo) / (hi - lo) * n as f64).floor() as usize).min(n - 1))
    };
    let col = cell(p[0], bbox.lo[0], bbox.hi[0], width)?;
    if dim == 1 {
        return Some((col, None));
    }
    let r = cell(p[1], bbox.lo[1], bbox.hi[1], height)?;
    Some((col, Some(height - 1 - r)))
}

/// Binary PGM (P5): black where at least one point lands, white elsewhere.
/// Three-dimensional points are projected onto `(x, y)`.
pub fn pgm(points: &[Point], dim: usize, bbox: &Bounds, width: usize, height: usize) -> Vec<u8> {
    let mut pixels = vec![255u8; width * height];
    for p in points {
        match pixel(p, dim, bbox, width, height) {
            Some((c, Some(r))) => pixels[r * width + c] = 0,
            Some((c, None)) => (0..height).for_each(|r| pixels[r * width + c] = 0),
            None => {}
        }
    }
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}

pub const PALETTE: [[u8; 3]; 8] = [
    [31, 119, 180],
    [214, 39, 40],
    [44, 160, 44],
    [255, 127, 14],
    [148, 103, 189],
    [140, 86, 75],
    [227, 119, 194],
    [23, 190, 207],
];

/// Binary PPM (P6) coloured by `labels[i]` (a 1-based map index; 0 draws
/// black). Later points overwrite earlier ones.
pub fn ppm(points: &[Point], labels: &[usize], dim: usize, bbox: &Bounds, width: usize, height: usize) -> Vec<u8> {
    let mut pixels = vec![255u8; width * height * 3];
    for (p, &label) in points.iter().zip(labels) {
        let color = if label == 0 { [0, 0, 0] } else { PALETTE[(label - 1) % PALETTE.len()] };
        let mut paint = |r: usize, c: usize| pixels[(r * width + c) * 3..][..3].copy_from_slice(&color);
        match pixel(p, dim, bbox, width, height) {
            Some((c, Some(r))) => paint(r, c),
            Some((c, None)) => (0..height).for_each(|r| paint(r, c)),
            None => {}
        }
    }
    let mut out = format!("P6\n{width} {height}\n255\n").into_bytes();
    out.extend(pixels);
    out
}
