//! Text and JSON rendering of command results.

use std::io::{self, Write};

use serde_json::Value;

pub fn print(v: &Value, json: bool) {
    let body = if json {
        format!("{}\n", serde_json::to_string_pretty(v).expect("values serialize"))
    } else {
        text(v)
    };
    // A closed pipe (`| head`) is not an error worth reporting.
    if let Err(e) = io::stdout().lock().write_all(body.as_bytes()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("circdyn: {e}");
        }
    }
}

/// `key  value` lines for an object, one level deep; nested values are shown
/// as compact JSON.
pub fn text(v: &Value) -> String {
    let Value::Object(map) = v else {
        return format!("{}\n", scalar(v));
    };
    let width = map.keys().map(|k| k.chars().count()).max().unwrap_or(0);
    let mut s = String::new();
    for (k, v) in map {
        s.push_str(&format!("{k:<width$}  {}\n", scalar(v)));
    }
    s
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn aligns_keys() {
        let s = text(&json!({"a": 1.5, "long": "x", "none": null}));
        assert_eq!(s, "a     1.5\nlong  x\nnone  -\n");
    }
}
