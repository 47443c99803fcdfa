//! JSON forms of strategies. Complex numbers are `[re, im]` pairs and
//! matrices are flat row-major lists of them.
//!
//! Strategy: `{"dims": [d_1, ...], "state": [[re, im], ...],
//! "measurements": [[[matrix per outcome] per question] per player]}`.
//! Schmidt strategy: `{"c": [c_0, ...], "measurements": ...}`.

use num_complex::Complex64;
use serde_json::{json, Value};

use super::{CMatrix, PureState, QuantumStrategy, SchmidtStrategySpec};
use crate::error::{Error, Result};

fn complex(v: &Value) -> Result<Complex64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
            _ => Err(Error::Parse(format!("complex entries must be numbers, got {v}"))),
        },
        _ => match v.as_f64() {
            Some(re) => Ok(Complex64::new(re, 0.0)),
            None => Err(Error::Parse(format!("expected [re, im], got {v}"))),
        },
    }
}

fn complex_list(v: &Value) -> Result<Vec<Complex64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected a list of complex numbers".into()))?
        .iter()
        .map(complex)
        .collect()
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let entries = complex_list(v)?;
    let d = (entries.len() as f64).sqrt().round() as usize;
    if d * d != entries.len() || d == 0 {
        return Err(Error::Parse(format!("matrix with {} entries is not square", entries.len())));
    }
    Ok(CMatrix::from_row_slice(d, d, &entries))
}

pub fn matrix_to_json(m: &CMatrix) -> Value {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            out.push(json!([z.re, z.im]));
        }
    }
    Value::Array(out)
}

fn measurements_from_json(v: &Value) -> Result<Vec<Vec<Vec<CMatrix>>>> {
    let arr = |v: &Value, what: &str| -> Result<Vec<Value>> {
        v.as_array().cloned().ok_or_else(|| Error::Parse(format!("{what} must be an array")))
    };
    arr(v, "measurements")?
        .iter()
        .map(|player| {
            arr(player, "player measurements")?
                .iter()
                .map(|q| arr(q, "measurement")?.iter().map(matrix_from_json).collect())
                .collect()
        })
        .collect()
}

fn measurements_to_json(ms: &[Vec<Vec<CMatrix>>]) -> Value {
    Value::Array(
        ms.iter()
            .map(|p| Value::Array(p.iter().map(|q| Value::Array(q.iter().map(matrix_to_json).collect())).collect()))
            .collect(),
    )
}

fn field<'a>(v: &'a Value, name: &str) -> Result<&'a Value> {
    v.get(name).ok_or_else(|| Error::Parse(format!("missing field \"{name}\"")))
}

pub fn strategy_from_json(v: &Value) -> Result<QuantumStrategy> {
    let dims = field(v, "dims")?
        .as_array()
        .ok_or_else(|| Error::Parse("\"dims\" must be an array".into()))?
        .iter()
        .map(|d| d.as_u64().map(|d| d as usize).ok_or_else(|| Error::Parse("dimensions must be integers".into())))
        .collect::<Result<Vec<_>>>()?;
    let state = PureState::new(dims, complex_list(field(v, "state")?)?)?;
    QuantumStrategy::new(state, measurements_from_json(field(v, "measurements")?)?)
}

pub fn strategy_to_json(s: &QuantumStrategy) -> Value {
    json!({
        "dims": s.state.local_dims(),
        "state": s.state.amplitudes().iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>(),
        "measurements": measurements_to_json(&s.measurements),
    })
}

pub fn schmidt_spec_from_json(v: &Value) -> Result<SchmidtStrategySpec> {
    let c = field(v, "c")?
        .as_array()
        .ok_or_else(|| Error::Parse("\"c\" must be an array".into()))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| Error::Parse("Schmidt coefficients must be numbers".into())))
        .collect::<Result<Vec<_>>>()?;
    SchmidtStrategySpec::new(c, measurements_from_json(field(v, "measurements")?)?)
}

pub fn schmidt_spec_to_json(s: &SchmidtStrategySpec) -> Value {
    json!({"c": s.c, "measurements": measurements_to_json(&s.measurements)})
}
