//! Acceptance thresholds, read from the checked-in `thresholds.toml`.

use std::collections::BTreeMap;

const BUILTIN: &str = include_str!("../thresholds.toml");

/// Flat `section.key -> value` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Thresholds(BTreeMap<String, f64>);

impl Thresholds {
    pub fn builtin() -> Self {
        Self::parse(BUILTIN).expect("thresholds.toml is valid")
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.to_string())?;
        let mut out = BTreeMap::new();
        for (section, body) in table {
            let body = body.as_table().ok_or_else(|| format!("`{section}` is not a table"))?;
            for (key, value) in body {
                let v = match value {
                    toml::Value::Float(f) => *f,
                    toml::Value::Integer(i) => *i as f64,
                    _ => return Err(format!("`{section}.{key}` is not a number")),
                };
                out.insert(format!("{section}.{key}"), v);
            }
        }
        Ok(Thresholds(out))
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.0.get(key).copied()
    }

    /// Panics on a name missing from the table; every caller uses a literal key.
    pub fn value(&self, key: &str) -> f64 {
        self.get(key).unwrap_or_else(|| panic!("no threshold `{key}`"))
    }

    pub fn with_overrides(mut self, overrides: &BTreeMap<String, f64>) -> Self {
        for (k, v) in overrides {
            if self.0.contains_key(k) {
                self.0.insert(k.clone(), *v);
            }
        }
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_parses() {
        let t = Thresholds::builtin();
        assert_eq!(t.value("hankel.laplace"), 1e-6);
        assert_eq!(t.value("budget.verify_seconds"), 600.0);
    }
}
