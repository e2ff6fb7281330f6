//! `.gf.json` exchange documents.
//!
//! ```json
//! {
//!   "id": "GEO0001",
//!   "free_points": [{"name": "A", "x": "10", "y": "10"}],
//!   "steps": [{"op": "midpoint", "args": ["A", "B"], "out": ["M"]}],
//!   "conjecture": {"predicate": "midpoint", "args": ["M", "A", "B"]}
//! }
//! ```
//!
//! Coordinates are written as strings so they survive untouched; plain JSON
//! numbers are accepted on input.

use serde::Serialize;
use serde_json::Value;

use super::model::{
    Conjecture, Construction, Coord, FreePoint, GeoProblem, Name, ObjectKind, Predicate,
    ProblemId, Scope, Step, StepOp,
};
use super::GeoError;

#[derive(Serialize)]
struct DocOut<'a> {
    id: &'a str,
    free_points: Vec<PointOut<'a>>,
    steps: Vec<StepOut<'a>>,
    conjecture: ConjOut<'a>,
}

#[derive(Serialize)]
struct PointOut<'a> {
    name: &'a str,
    x: &'a str,
    y: &'a str,
}

#[derive(Serialize)]
struct StepOut<'a> {
    op: &'a str,
    args: Vec<&'a str>,
    out: [&'a str; 1],
}

#[derive(Serialize)]
struct ConjOut<'a> {
    predicate: &'a str,
    args: Vec<&'a str>,
}

fn doc(p: &GeoProblem) -> DocOut<'_> {
    DocOut {
        id: p.id.as_str(),
        free_points: p
            .construction
            .free_points
            .iter()
            .map(|fp| PointOut { name: fp.name.as_str(), x: fp.x.as_str(), y: fp.y.as_str() })
            .collect(),
        steps: p
            .construction
            .steps
            .iter()
            .map(|s| StepOut {
                op: s.op.exchange_name(),
                args: s.args.iter().map(Name::as_str).collect(),
                out: [s.out.as_str()],
            })
            .collect(),
        conjecture: ConjOut {
            predicate: p.conjecture.predicate.name(),
            args: p.conjecture.args.iter().map(Name::as_str).collect(),
        },
    }
}

pub fn write_exchange(p: &GeoProblem) -> Value {
    serde_json::to_value(doc(p)).expect("exchange document serializes")
}

/// Pretty-printed document with a trailing newline; key order is fixed.
pub fn write_exchange_string(p: &GeoProblem) -> String {
    let mut s = serde_json::to_string_pretty(&doc(p)).expect("exchange document serializes");
    s.push('\n');
    s
}

pub fn read_exchange_str(text: &str) -> Result<GeoProblem, GeoError> {
    let v: Value = serde_json::from_str(text)
        .map_err(|e| GeoError::schema("$", format!("not valid JSON: {e}")))?;
    read_exchange(&v)
}

pub fn read_exchange(doc: &Value) -> Result<GeoProblem, GeoError> {
    let obj = doc.as_object().ok_or_else(|| GeoError::schema("$", "expected an object"))?;
    let field = |key: &str| obj.get(key).ok_or_else(|| GeoError::schema(key, "missing field"));

    let id = str_at(field("id")?, "id")?;
    let id = ProblemId::new(id).map_err(|e| GeoError::schema("id", e.to_string()))?;
    let mut scope = Scope::default();

    let mut free_points = Vec::new();
    for (i, fp) in array_at(field("free_points")?, "free_points")?.iter().enumerate() {
        let path = format!("free_points[{i}]");
        let o = fp.as_object().ok_or_else(|| GeoError::schema(&path, "expected an object"))?;
        let name = name_at(o.get("name"), &format!("{path}.name"))?;
        let x = coord_at(o.get("x"), &format!("{path}.x"))?;
        let y = coord_at(o.get("y"), &format!("{path}.y"))?;
        scope.define(&name, ObjectKind::Point, None)?;
        free_points.push(FreePoint { name, x, y });
    }

    let mut steps = Vec::new();
    for (i, st) in array_at(field("steps")?, "steps")?.iter().enumerate() {
        let path = format!("steps[{i}]");
        let o = st.as_object().ok_or_else(|| GeoError::schema(&path, "expected an object"))?;
        let op_path = format!("{path}.op");
        let op_name = str_at(o.get("op").ok_or_else(|| GeoError::schema(&op_path, "missing field"))?, &op_path)?;
        let op = StepOp::from_exchange_name(op_name)
            .ok_or_else(|| GeoError::schema(&op_path, format!("unknown operation `{op_name}`")))?;
        let args = names_at(o.get("args"), &format!("{path}.args"))?;
        let outs = names_at(o.get("out"), &format!("{path}.out"))?;
        if outs.len() != 1 {
            return Err(GeoError::Arity {
                what: format!("{} results", op.exchange_name()),
                expected: 1,
                found: outs.len(),
                pos: None,
            });
        }
        scope.check_step(op, &args, None)?;
        let out = outs.into_iter().next().expect("one output");
        scope.define(&out, op.result_kind(), None)?;
        steps.push(Step { op, args, out });
    }

    let conj = field("conjecture")?
        .as_object()
        .ok_or_else(|| GeoError::schema("conjecture", "expected an object"))?;
    let pred_path = "conjecture.predicate";
    let pred_name = str_at(conj.get("predicate").ok_or_else(|| GeoError::schema(pred_path, "missing field"))?, pred_path)?;
    let predicate = Predicate::from_name(pred_name)
        .ok_or_else(|| GeoError::schema(pred_path, format!("unknown predicate `{pred_name}`")))?;
    let conjecture = Conjecture { predicate, args: names_at(conj.get("args"), "conjecture.args")? };
    scope.check_conjecture(&conjecture, None)?;

    if free_points.is_empty() {
        return Err(GeoError::NoFreePoints);
    }
    Ok(GeoProblem { id, construction: Construction { free_points, steps }, conjecture })
}

fn str_at<'a>(v: &'a Value, path: &str) -> Result<&'a str, GeoError> {
    v.as_str().ok_or_else(|| GeoError::schema(path, "expected a string"))
}

fn array_at<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, GeoError> {
    v.as_array().ok_or_else(|| GeoError::schema(path, "expected an array"))
}

fn name_at(v: Option<&Value>, path: &str) -> Result<Name, GeoError> {
    let v = v.ok_or_else(|| GeoError::schema(path, "missing field"))?;
    Name::new(str_at(v, path)?).map_err(|e| GeoError::schema(path, e.to_string()))
}

fn names_at(v: Option<&Value>, path: &str) -> Result<Vec<Name>, GeoError> {
    let v = v.ok_or_else(|| GeoError::schema(path, "missing field"))?;
    array_at(v, path)?
        .iter()
        .enumerate()
        .map(|(i, n)| name_at(Some(n), &format!("{path}[{i}]")))
        .collect()
}

fn coord_at(v: Option<&Value>, path: &str) -> Result<Coord, GeoError> {
    let v = v.ok_or_else(|| GeoError::schema(path, "missing field"))?;
    let s = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        _ => return Err(GeoError::schema(path, "expected a decimal string or number")),
    };
    Coord::new(s).map_err(|e| GeoError::schema(path, e.to_string()))
}
