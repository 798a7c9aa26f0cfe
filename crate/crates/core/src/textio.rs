//! Plain-text output helpers shared by tables, caches and summaries.

use std::fmt::Write as _;

/// Decimal with 17 significant digits; round-trips every `f64`.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

/// Ordered `key = value` summary document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    entries: Vec<(String, String)>,
}

impl Summary {
    pub fn new() -> Summary {
        Summary::default()
    }

    pub fn text(&mut self, key: &str, value: impl Into<String>) -> &mut Summary {
        self.entries.push((key.to_string(), value.into()));
        self
    }

    pub fn num(&mut self, key: &str, value: f64) -> &mut Summary {
        self.text(key, fmt17(value))
    }

    pub fn int(&mut self, key: &str, value: i64) -> &mut Summary {
        self.text(key, value.to_string())
    }

    pub fn list(&mut self, key: &str, values: &[f64]) -> &mut Summary {
        let v: Vec<String> = values.iter().map(|&x| fmt17(x)).collect();
        self.text(key, v.join(","))
    }

    /// Predicted and measured values with their relative error.
    pub fn compare(&mut self, key: &str, predicted: f64, measured: f64) -> &mut Summary {
        self.num(&format!("{key}.predicted"), predicted);
        self.num(&format!("{key}.measured"), measured);
        let rel = if predicted != 0.0 {
            (measured - predicted).abs() / predicted.abs()
        } else {
            (measured - predicted).abs()
        };
        self.num(&format!("{key}.rel_error"), rel)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn parse(text: &str) -> Summary {
        let entries = text
            .lines()
            .filter(|l| !l.trim_start().starts_with('#'))
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
            .collect();
        Summary { entries }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt17(1.0), "1.0000000000000000e0");
        assert_eq!(fmt17(std::f64::consts::PI), "3.1415926535897931e0");
    }

    #[test]
    fn summary_roundtrip() {
        let mut s = Summary::new();
        s.num("a", 0.1).text("name", "circle").compare("c", 2.0, 2.01);
        let back = Summary::parse(&s.render());
        assert_eq!(back, s);
        assert_eq!(back.get("name"), Some("circle"));
    }

    proptest! {
        #[test]
        fn fmt17_roundtrips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt17(v);
            prop_assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
