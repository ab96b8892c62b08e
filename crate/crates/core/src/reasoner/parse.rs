use serde_json::Value;

use super::{Decomposition, IntentResult, ReasonerError, Step};
use crate::registry::Candidate;

fn malformed(msg: impl Into<String>) -> ReasonerError {
    ReasonerError::MalformedReasonerOutput(msg.into())
}

/// Slice of the first balanced `{...}` in `text`, honouring JSON string
/// quoting so braces inside strings do not count.
pub fn extract_first_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

fn object(text: &str) -> Result<serde_json::Map<String, Value>, ReasonerError> {
    let raw = extract_first_object(text).ok_or_else(|| malformed("no JSON object found"))?;
    match serde_json::from_str::<Value>(raw) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(malformed("not an object")),
        Err(e) => Err(malformed(format!("invalid JSON: {e}"))),
    }
}

fn string_field(map: &serde_json::Map<String, Value>, key: &str) -> Result<String, ReasonerError> {
    match map.get(key) {
        Some(Value::String(s)) => Ok(s.clone()),
        Some(_) => Err(malformed(format!("field `{key}` is not a string"))),
        None => Err(malformed(format!("missing field `{key}`"))),
    }
}

fn array_field<'a>(map: &'a serde_json::Map<String, Value>, key: &str) -> Result<&'a Vec<Value>, ReasonerError> {
    match map.get(key) {
        Some(Value::Array(a)) if !a.is_empty() => Ok(a),
        Some(Value::Array(_)) => Err(malformed(format!("`{key}` is empty"))),
        Some(_) => Err(malformed(format!("field `{key}` is not a list"))),
        None => Err(malformed(format!("missing field `{key}`"))),
    }
}

fn step_of(v: &Value, what: &str) -> Result<(serde_json::Map<String, Value>, Step), ReasonerError> {
    let Value::Object(m) = v else {
        return Err(malformed(format!("{what} is not an object")));
    };
    let step = Step::new(string_field(m, "robot")?, string_field(m, "command")?);
    Ok((m.clone(), step))
}

/// Parses a reply of the shape
/// `{"intent":…,"task":…,"candidates":[{"robot":…,"command":…,"confidence":…}]}`.
/// Prose around the object is ignored; confidences are clamped into `[0, 1]`.
pub fn parse_reasoner_output(text: &str) -> Result<IntentResult, ReasonerError> {
    let map = object(text)?;
    let intent_label = string_field(&map, "intent")?;
    let task_description = string_field(&map, "task")?;
    let candidates = array_field(&map, "candidates")?
        .iter()
        .map(|c| {
            let (m, step) = step_of(c, "candidate")?;
            let confidence = m
                .get("confidence")
                .and_then(Value::as_f64)
                .ok_or_else(|| malformed("candidate confidence missing or not a number"))?;
            Ok(Candidate::new(step.robot_id, step.command_id, confidence.clamp(0.0, 1.0)))
        })
        .collect::<Result<Vec<_>, ReasonerError>>()?;
    Ok(IntentResult {
        intent_label,
        task_description,
        candidates,
    })
}

/// Parses `{"subcommands":[{"robot":…,"command":…}],"rationale":…}`. An empty
/// list is accepted here; emptiness is judged after schema validation.
pub fn parse_decomposition_output(text: &str) -> Result<Decomposition, ReasonerError> {
    let map = object(text)?;
    let subcommands = match map.get("subcommands") {
        Some(Value::Array(a)) => a
            .iter()
            .map(|v| step_of(v, "subcommand").map(|(_, s)| s))
            .collect::<Result<Vec<_>, _>>()?,
        _ => return Err(malformed("missing field `subcommands`")),
    };
    let rationale = match map.get("rationale") {
        Some(Value::String(s)) => s.clone(),
        _ => String::new(),
    };
    Ok(Decomposition { subcommands, rationale })
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXACT: &str = r#"{"intent":"select left item","task":"Select item positioned to the left","candidates":[{"robot":"ur3","command":"manipulator_select_left_item","confidence":1.0}]}"#;

    #[test]
    fn exact_object() {
        let r = parse_reasoner_output(EXACT).unwrap();
        assert_eq!(r.intent_label, "select left item");
        assert_eq!(r.candidates, vec![Candidate::new("ur3", "manipulator_select_left_item", 1.0)]);
        assert_eq!(r.to_json(), EXACT);
    }

    #[test]
    fn embedded_in_prose() {
        let text = format!("Sure! Here is the answer: {EXACT}\nHope that helps {{not json}}");
        assert_eq!(parse_reasoner_output(&text).unwrap(), parse_reasoner_output(EXACT).unwrap());
    }

    #[test]
    fn braces_inside_strings() {
        let text = r#"x {"intent":"a } b","task":"\"{\"","candidates":[{"robot":"r","command":"c","confidence":0.5}]} y"#;
        let r = parse_reasoner_output(text).unwrap();
        assert_eq!(r.intent_label, "a } b");
        assert_eq!(r.task_description, "\"{\"");
    }

    #[test]
    fn missing_or_empty_candidates() {
        assert!(matches!(parse_reasoner_output(r#"{"intent":"x"}"#), Err(ReasonerError::MalformedReasonerOutput(_))));
        assert!(parse_reasoner_output(r#"{"intent":"x","task":"y","candidates":[]}"#).is_err());
        assert!(parse_reasoner_output("no object here").is_err());
        assert!(parse_reasoner_output("{unbalanced").is_err());
        assert!(parse_reasoner_output(r#"{"intent":"x","task":"y","candidates":[{"robot":"r","command":"c"}]}"#).is_err());
    }

    #[test]
    fn confidence_clamped() {
        let r = parse_reasoner_output(
            r#"{"intent":"x","task":"y","candidates":[{"robot":"r","command":"a","confidence":1.7},{"robot":"r","command":"b","confidence":-2}]}"#,
        )
        .unwrap();
        assert_eq!(r.candidates[0].confidence, 1.0);
        assert_eq!(r.candidates[1].confidence, 0.0);
    }

    #[test]
    fn decomposition() {
        let d = parse_decomposition_output(
            r#"plan: {"subcommands":[{"robot":"ur3","command":"manipulator_close_gripper"},{"robot":"ur3","command":"fly"}],"rationale":"hold it"}"#,
        )
        .unwrap();
        assert_eq!(d.subcommands.len(), 2);
        assert_eq!(d.rationale, "hold it");
        assert!(parse_decomposition_output(r#"{"rationale":"x"}"#).is_err());
    }
}
