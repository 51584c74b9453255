//! Serialization helpers shared by the report writers: fixed-precision float
//! formatting, minimal JSON building and CSV assembly.
//!
//! All numeric output uses 17 significant digits with a '.' decimal
//! separator so that identical inputs produce byte-identical artifacts on
//! every platform.

/// Canonical float formatting: 17 significant digits, scientific notation.
/// NaN renders as `nan` (CSV); JSON writers must use [`json_number`].
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{:.16e}", x)
    }
}

/// JSON value for a float: 17-significant-digit number, or `null` when the
/// value is undefined (NaN/infinite).
pub fn json_number(x: f64) -> String {
    if x.is_finite() {
        format!("{:.16e}", x)
    } else {
        "null".to_string()
    }
}

/// JSON string literal with the required escapes.
pub fn json_string(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Order-preserving JSON object builder.
#[derive(Default)]
pub struct JsonObject {
    fields: Vec<(String, String)>,
}

impl JsonObject {
    pub fn new() -> JsonObject {
        JsonObject::default()
    }

    pub fn raw(&mut self, key: &str, value: impl Into<String>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    pub fn number(&mut self, key: &str, value: f64) -> &mut Self {
        self.raw(key, json_number(value))
    }

    pub fn integer(&mut self, key: &str, value: u64) -> &mut Self {
        self.raw(key, value.to_string())
    }

    pub fn boolean(&mut self, key: &str, value: bool) -> &mut Self {
        self.raw(key, if value { "true" } else { "false" })
    }

    pub fn string(&mut self, key: &str, value: &str) -> &mut Self {
        self.raw(key, json_string(value))
    }

    pub fn finish(&self) -> String {
        let parts: Vec<String> = self
            .fields
            .iter()
            .map(|(k, v)| format!("{}:{}", json_string(k), v))
            .collect();
        format!("{{{}}}", parts.join(","))
    }
}

pub fn json_array(items: impl IntoIterator<Item = String>) -> String {
    let parts: Vec<String> = items.into_iter().collect();
    format!("[{}]", parts.join(","))
}

/// Assemble CSV lines with LF endings and a mandatory header.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_is_stable() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(f64::NAN), "nan");
        assert_eq!(json_number(f64::NAN), "null");
        assert_eq!(json_number(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn json_object_preserves_order() {
        let mut o = JsonObject::new();
        o.number("b", 1.0).boolean("a", true).string("s", "x\"y");
        assert_eq!(
            o.finish(),
            "{\"b\":1.0000000000000000e0,\"a\":true,\"s\":\"x\\\"y\"}"
        );
    }

    #[test]
    fn csv_uses_lf_and_header() {
        let s = csv(&["a", "b"], [vec!["1".into(), "2".into()]]);
        assert_eq!(s, "a,b\n1,2\n");
        assert!(!s.contains('\r'));
    }
}
