//! IFS spec files (schema version 1). Validation is done by hand on the
//! parsed JSON tree so every error carries the JSON pointer of the offending
//! value.

use std::path::Path;

use ifslab_core::geometry::{Bounds, Metric};
use ifslab_core::mapkit::{Builtin, ExprMap, IFSystem, MapSpec};
use ifslab_core::exprdsl::Expression;
use serde_json::{Map, Value};
use thiserror::Error;

pub const SCHEMA_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum SpecError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid JSON at line {line}, column {column}: {message}")]
    Json { line: usize, column: usize, message: String },
    #[error("{pointer}: {message}")]
    Schema { pointer: String, message: String },
}

fn schema(pointer: &str, message: impl Into<String>) -> SpecError {
    SpecError::Schema {
        pointer: if pointer.is_empty() { "/".into() } else { pointer.into() },
        message: message.into(),
    }
}

/// Reads and validates a spec file.
pub fn load_ifs(path: &Path) -> Result<IFSystem, SpecError> {
    let text = std::fs::read_to_string(path).map_err(|source| SpecError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ifs(&text)
}

pub fn parse_ifs(text: &str) -> Result<IFSystem, SpecError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| SpecError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    from_value(&doc)
}

fn object<'a>(v: &'a Value, ptr: &str, allowed: &[&str]) -> Result<&'a Map<String, Value>, SpecError> {
    let obj = v.as_object().ok_or_else(|| schema(ptr, "expected an object"))?;
    if let Some(k) = obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(schema(&format!("{ptr}/{k}"), format!("unknown key (allowed: {})", allowed.join(", "))));
    }
    Ok(obj)
}

fn field<'a>(obj: &'a Map<String, Value>, ptr: &str, key: &str) -> Result<&'a Value, SpecError> {
    obj.get(key).ok_or_else(|| schema(ptr, format!("missing required key \"{key}\"")))
}

fn number(v: &Value, ptr: &str) -> Result<f64, SpecError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| schema(ptr, format!("expected a finite number, got {v}")))
}

fn array<'a>(v: &'a Value, ptr: &str, len: Option<usize>) -> Result<&'a [Value], SpecError> {
    let a = v.as_array().ok_or_else(|| schema(ptr, "expected an array"))?;
    if let Some(n) = len {
        if a.len() != n {
            return Err(schema(ptr, format!("expected {n} entries, got {}", a.len())));
        }
    }
    Ok(a)
}

fn numbers(v: &Value, ptr: &str, len: Option<usize>) -> Result<Vec<f64>, SpecError> {
    array(v, ptr, len)?
        .iter()
        .enumerate()
        .map(|(i, x)| number(x, &format!("{ptr}/{i}")))
        .collect()
}

pub fn from_value(doc: &Value) -> Result<IFSystem, SpecError> {
    let root = object(doc, "", &["version", "name", "description", "space", "maps", "weights"])?;
    if let Some(v) = root.get("version") {
        if v.as_u64() != Some(SCHEMA_VERSION) {
            return Err(schema("/version", format!("unsupported schema version {v} (expected {SCHEMA_VERSION})")));
        }
    }
    for key in ["name", "description"] {
        if let Some(v) = root.get(key) {
            if !v.is_string() {
                return Err(schema(&format!("/{key}"), "expected a string"));
            }
        }
    }

    let space = object(field(root, "", "space")?, "/space", &["dim", "bounds", "variant"])?;
    let dim = field(space, "/space", "dim")?
        .as_u64()
        .filter(|d| (1..=3).contains(d))
        .ok_or_else(|| schema("/space/dim", "expected 1, 2 or 3"))? as usize;
    let bounds = array(field(space, "/space", "bounds")?, "/space/bounds", Some(dim))?;
    let mut lo = Vec::with_capacity(dim);
    let mut hi = Vec::with_capacity(dim);
    for (i, b) in bounds.iter().enumerate() {
        let ptr = format!("/space/bounds/{i}");
        let pair = numbers(b, &ptr, Some(2))?;
        if !(pair[0] < pair[1]) {
            return Err(schema(&ptr, format!("lower bound {} must be below upper bound {}", pair[0], pair[1])));
        }
        lo.push(pair[0]);
        hi.push(pair[1]);
    }
    let metric = match space.get("variant").map(|v| v.as_str()) {
        None | Some(Some("euclidean")) => Metric::Euclidean,
        Some(Some("circle")) => {
            if dim != 1 || lo[0] != 0.0 || hi[0] != 1.0 {
                return Err(schema("/space/variant", "the circle variant needs dim 1 and bounds [[0, 1]]"));
            }
            Metric::Circle
        }
        Some(_) => return Err(schema("/space/variant", "expected \"euclidean\" or \"circle\"")),
    };

    let maps_json = array(field(root, "", "maps")?, "/maps", None)?;
    if maps_json.is_empty() {
        return Err(schema("/maps", "at least one map is required"));
    }
    let maps = maps_json
        .iter()
        .enumerate()
        .map(|(i, m)| parse_map(m, &format!("/maps/{i}"), dim))
        .collect::<Result<Vec<_>, _>>()?;

    let weights = match root.get("weights") {
        None => None,
        Some(v) => {
            let w = numbers(v, "/weights", Some(maps.len()))?;
            if let Some(i) = w.iter().position(|x| *x <= 0.0) {
                return Err(schema(&format!("/weights/{i}"), format!("weight {} must be strictly positive", w[i])));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(schema("/weights", format!("weights sum {s}, expected 1")));
            }
            Some(w)
        }
    };

    IFSystem::build(maps, weights, Bounds::new(&lo, &hi), metric).map_err(|e| schema("", e.to_string()))
}

fn parse_map(v: &Value, ptr: &str, dim: usize) -> Result<MapSpec, SpecError> {
    let kind = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| schema(&format!("{ptr}/type"), "expected \"affine\", \"expr\" or \"builtin\""))?;
    match kind {
        "affine" => {
            let obj = object(v, ptr, &["type", "matrix", "offset"])?;
            let mptr = format!("{ptr}/matrix");
            let rows = array(field(obj, ptr, "matrix")?, &mptr, Some(dim))?;
            let mut matrix = Vec::with_capacity(dim * dim);
            for (i, row) in rows.iter().enumerate() {
                matrix.extend(numbers(row, &format!("{mptr}/{i}"), Some(dim))?);
            }
            let offset = match obj.get("offset") {
                Some(o) => numbers(o, &format!("{ptr}/offset"), Some(dim))?,
                None => vec![0.0; dim],
            };
            MapSpec::affine(&matrix, &offset).map_err(|e| schema(ptr, e.to_string()))
        }
        "expr" => {
            let obj = object(v, ptr, &["type", "exprs"])?;
            let eptr = format!("{ptr}/exprs");
            let items = array(field(obj, ptr, "exprs")?, &eptr, Some(dim))?;
            let vars = &ifslab_core::exprdsl::VARIABLES[..dim];
            let mut coords = Vec::with_capacity(dim);
            for (i, item) in items.iter().enumerate() {
                let cptr = format!("{eptr}/{i}");
                let src = item.as_str().ok_or_else(|| schema(&cptr, "expected an expression string"))?;
                coords.push(Expression::parse_with_vars(src, vars).map_err(|e| schema(&cptr, e.to_string()))?);
            }
            ExprMap::new(coords).map(MapSpec::Expr).map_err(|e| schema(&eptr, e.to_string()))
        }
        "builtin" => {
            let obj = object(v, ptr, &["type", "name", "params"])?;
            let name = field(obj, ptr, "name")?
                .as_str()
                .ok_or_else(|| schema(&format!("{ptr}/name"), "expected a string"))?;
            let pptr = format!("{ptr}/params");
            let empty = Map::new();
            let params = match obj.get("params") {
                Some(p) => p.as_object().ok_or_else(|| schema(&pptr, "expected an object"))?,
                None => &empty,
            };
            match name {
                "circle-rotation" => {
                    object(&Value::Object(params.clone()), &pptr, &["r"])?;
                    if dim != 1 {
                        return Err(schema(ptr, "circle-rotation acts on a one-dimensional space"));
                    }
                    let r = number(field(params, &pptr, "r")?, &format!("{pptr}/r"))?;
                    Ok(MapSpec::circle_rotation(r))
                }
                "identity" => {
                    object(&Value::Object(params.clone()), &pptr, &[])?;
                    Ok(MapSpec::Builtin(Builtin::Identity { dim }))
                }
                other => Err(schema(
                    &format!("{ptr}/name"),
                    format!("unknown builtin \"{other}\" (known: circle-rotation, identity)"),
                )),
            }
        }
        other => Err(schema(
            &format!("{ptr}/type"),
            format!("unknown map type \"{other}\" (expected affine, expr or builtin)"),
        )),
    }
}
