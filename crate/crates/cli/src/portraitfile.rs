//! JSON portrait sweep specifications:
//! `{"m1": {"base": 1.2, "step": 0.02, "count": 75}, "m2": {...}, "m3": 4.0,
//!   "x": [-0.2, 0.0, 0.1]}`.

use dp_peakon::classify::{GridAxis, PortraitSpec};
use serde_json::Value;

pub fn parse(text: &str) -> Result<PortraitSpec, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "the portrait spec must be a JSON object".to_string())?;
    for key in obj.keys() {
        if !["m1", "m2", "m3", "x"].contains(&key.as_str()) {
            return Err(format!("unknown field \"{key}\""));
        }
    }
    let m1 = axis(obj, "m1")?;
    let m2 = axis(obj, "m2")?;
    let m3 = number(obj.get("m3"), "m3")?;
    let x_val = obj
        .get("x")
        .ok_or_else(|| "missing field \"x\"".to_string())?;
    let arr = x_val
        .as_array()
        .filter(|a| a.len() == 3)
        .ok_or_else(|| "field \"x\": must be an array of three numbers".to_string())?;
    let mut x = [0.0; 3];
    for (i, item) in arr.iter().enumerate() {
        x[i] = item
            .as_f64()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("field \"x\": entry {} is not a finite number", i + 1))?;
    }
    Ok(PortraitSpec { m1, m2, m3, x })
}

fn axis(obj: &serde_json::Map<String, Value>, key: &str) -> Result<GridAxis, String> {
    let v = obj
        .get(key)
        .ok_or_else(|| format!("missing field \"{key}\""))?;
    let sub = v
        .as_object()
        .ok_or_else(|| format!("field \"{key}\": must be an object with base, step, count"))?;
    for k in sub.keys() {
        if !["base", "step", "count"].contains(&k.as_str()) {
            return Err(format!("field \"{key}\": unknown field \"{k}\""));
        }
    }
    let base = number(sub.get("base"), &format!("{key}.base"))?;
    let step = number(sub.get("step"), &format!("{key}.step"))?;
    let count = sub
        .get("count")
        .and_then(|c| c.as_u64())
        .ok_or_else(|| format!("field \"{key}.count\": must be a nonnegative integer"))?
        as usize;
    Ok(GridAxis { base, step, count })
}

fn number(v: Option<&Value>, name: &str) -> Result<f64, String> {
    v.and_then(|v| v.as_f64())
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("field \"{name}\": must be a finite number"))
}
