use serde::Serialize;

use super::{EpitaxialStack, StackError};

/// Parses and validates a stack document.
pub fn parse_stack(document: &str) -> Result<EpitaxialStack, StackError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let stack: EpitaxialStack = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        StackError::Schema { path, line: inner.line(), column: inner.column(), message: strip_position(&inner) }
    })?;
    stack.validate()?;
    Ok(stack)
}

fn strip_position(e: &serde_json::Error) -> String {
    let s = e.to_string();
    match s.rfind(" at line ") {
        Some(i) => s[..i].to_string(),
        None => s,
    }
}

/// Canonical form: two-space indentation, declared key order, trailing newline.
pub fn serialize_stack(stack: &EpitaxialStack) -> String {
    let mut buf = Vec::new();
    let fmt = serde_json::ser::PrettyFormatter::with_indent(b"  ");
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
    stack.serialize(&mut ser).expect("stack serializes");
    let mut s = String::from_utf8(buf).expect("utf-8");
    s.push('\n');
    s
}
