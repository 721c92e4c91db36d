//! JSON state files: `{"x": [...], "m": [...], "t": 0}`.
//!
//! Parsing is strict so that a typo fails loudly with the offending field
//! named. The canonical serialization (sorted keys, 17 significant digits)
//! round-trips bit-faithfully.

use dp_peakon::PeakonState;
use serde_json::Value;

#[derive(Clone, Debug)]
pub struct StateFile {
    pub state: PeakonState,
    pub t: f64,
}

pub fn parse(text: &str) -> Result<StateFile, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| "the state must be a JSON object".to_string())?;
    for key in obj.keys() {
        if key != "x" && key != "m" && key != "t" {
            return Err(format!("unknown field \"{key}\""));
        }
    }
    let x = number_array(obj, "x")?;
    let m = number_array(obj, "m")?;
    let t = match obj.get("t") {
        None => 0.0,
        Some(v) => v
            .as_f64()
            .filter(|t| t.is_finite())
            .ok_or_else(|| "field \"t\": must be a finite number".to_string())?,
    };
    if x.is_empty() {
        return Err("field \"x\": needs at least one position".into());
    }
    if x.len() != m.len() {
        return Err(format!(
            "fields \"x\" and \"m\" have different lengths ({} vs {})",
            x.len(),
            m.len()
        ));
    }
    if x.windows(2).any(|w| w[0] >= w[1]) {
        return Err("field \"x\": positions must be strictly increasing".into());
    }
    if let Some(i) = m.iter().position(|&v| v == 0.0) {
        return Err(format!("field \"m\": entry {} is zero", i + 1));
    }
    let state = PeakonState::new(x, m).map_err(|e| e.to_string())?;
    Ok(StateFile { state, t })
}

fn number_array(obj: &serde_json::Map<String, Value>, key: &str) -> Result<Vec<f64>, String> {
    let v = obj
        .get(key)
        .ok_or_else(|| format!("missing field \"{key}\""))?;
    let arr = v
        .as_array()
        .ok_or_else(|| format!("field \"{key}\": must be an array of numbers"))?;
    let mut out = Vec::with_capacity(arr.len());
    for (i, item) in arr.iter().enumerate() {
        let f = item
            .as_f64()
            .filter(|f| f.is_finite())
            .ok_or_else(|| format!("field \"{key}\": entry {} is not a finite number", i + 1))?;
        out.push(f);
    }
    Ok(out)
}

pub fn canonical(sf: &StateFile) -> String {
    let join = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    format!(
        "{{\"m\":[{}],\"t\":{:.16e},\"x\":[{}]}}\n",
        join(&sf.state.m),
        sf.t,
        join(&sf.state.x)
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_plain_state() {
        let sf = parse(r#"{"x": [-1.0, 0.0, 1.0], "m": [1.0, -2.0, 3.0]}"#).unwrap();
        assert_eq!(sf.state.x, vec![-1.0, 0.0, 1.0]);
        assert_eq!(sf.state.m, vec![1.0, -2.0, 3.0]);
        assert_eq!(sf.t, 0.0);

        let sf = parse(r#"{"x": [0], "m": [2], "t": 1.5}"#).unwrap();
        assert_eq!(sf.t, 1.5);
    }

    #[test]
    fn rejections_name_the_offending_field() {
        let cases = [
            (r#"{"x": [1.0, 0.0], "m": [1.0, 1.0]}"#, "\"x\""),
            (r#"{"x": [0.0, 1.0], "m": [1.0]}"#, "\"x\" and \"m\""),
            (r#"{"x": [0.0], "m": [0.0]}"#, "\"m\""),
            (r#"{"x": [0.0], "m": [1.0], "mass": 2}"#, "\"mass\""),
            (r#"{"x": "zero", "m": [1.0]}"#, "\"x\""),
            (r#"{"m": [1.0]}"#, "\"x\""),
            (r#"{"x": [0.0], "m": [1.0], "t": "soon"}"#, "\"t\""),
            (r#"{"x": [null], "m": [1.0]}"#, "\"x\""),
        ];
        for (text, needle) in cases {
            let err = parse(text).unwrap_err();
            assert!(err.contains(needle), "{text} gave: {err}");
        }
        assert!(parse("[1, 2]").is_err());
        assert!(parse("{").unwrap_err().contains("invalid JSON"));
    }

    #[test]
    fn canonical_form_round_trips_bitwise() {
        let sf = parse(r#"{"t": 0.25, "m": [1.0, -0.3333333333333333], "x": [-0.1, 2.0]}"#).unwrap();
        let canon = canonical(&sf);
        let reparsed = parse(&canon).unwrap();
        assert_eq!(reparsed.state.x, sf.state.x);
        assert_eq!(reparsed.state.m, sf.state.m);
        assert_eq!(reparsed.t, sf.t);
        assert_eq!(canonical(&reparsed), canon);
        assert!(canon.ends_with('\n'));
        let keys: Vec<usize> = ["\"m\"", "\"t\"", "\"x\""]
            .iter()
            .map(|k| canon.find(k).unwrap())
            .collect();
        assert!(keys[0] < keys[1] && keys[1] < keys[2]);
    }
}
