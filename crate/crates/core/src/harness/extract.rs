use serde_json::Value;

use crate::evaluation::{Prediction, Status};
use crate::fol::parse;

/// `(formula, description)` from a JSON object with a string `formula` field.
fn answer_object(text: &str) -> Option<(String, String)> {
    let v: Value = serde_json::from_str(text).ok()?;
    let formula = v.get("formula")?.as_str()?.to_string();
    let description = v
        .get("description")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    Some((formula, description))
}

/// Trims code-fence and quoting debris around a candidate line.
fn strip(line: &str) -> &str {
    line.trim().trim_matches('`').trim()
}

/// Pulls the answer out of a raw response: the last line holding a complete
/// JSON object with a `formula` field, or the whole response when it is one
/// such object. Empty input is `Missing`; no usable object, or a formula that
/// does not parse, is `ParseError`.
pub fn extract_formula(instance_id: &str, model: &str, raw: &str) -> Prediction {
    let mut p = Prediction::missing(instance_id, model);
    p.raw_text = raw.to_string();
    if raw.trim().is_empty() {
        return p;
    }
    p.status = Status::ParseError;
    let found = raw
        .lines()
        .rev()
        .find_map(|l| answer_object(strip(l)))
        .or_else(|| answer_object(strip(raw)));
    let Some((text, description)) = found else {
        return p;
    };
    p.description = description;
    if let Ok(f) = parse(&text) {
        p.formula = Some(f);
        p.status = Status::Ok;
    }
    p
}
