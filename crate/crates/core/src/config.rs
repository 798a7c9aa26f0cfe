//! Model configuration documents.
//!
//! A model is described by a TOML document with the sections `spacetime`,
//! `lapse`, `shift` and `bundle` (see `models/README.md` in the repository
//! for the full schema). Unknown keys are rejected. Numeric fields accept
//! either a number or a constant expression such as `"2*pi"`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{Expr, ExprError};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot parse model config: {0}")]
    Parse(String),
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    Version { found: u32 },
    #[error("field `{field}`: {source}")]
    Expr {
        field: String,
        #[source]
        source: ExprError,
    },
    #[error("field `{field}`: {reason}")]
    Invalid { field: String, reason: String },
}

/// A number, or an expression string evaluated later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Expr(String),
}

impl Quantity {
    pub fn source(&self) -> String {
        match self {
            Quantity::Number(v) => format!("{v:?}"),
            Quantity::Expr(s) => s.clone(),
        }
    }

    /// Evaluates as a constant (no variables allowed).
    pub fn constant(&self, field: &str) -> Result<f64, ConfigError> {
        match self {
            Quantity::Number(v) => Ok(*v),
            Quantity::Expr(s) => {
                let e = Expr::parse(s, &[]).map_err(|source| ConfigError::Expr {
                    field: field.to_string(),
                    source,
                })?;
                Ok(e.constant_value().expect("no variables were allowed"))
            }
        }
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Quantity::Number(v)
    }
}

impl From<&str> for Quantity {
    fn from(s: &str) -> Self {
        Quantity::Expr(s.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CauchyKind {
    Circle,
    Torus,
    Sphere,
    Ellipsoid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpacetimeSection {
    pub dimension: u32,
    pub cauchy: CauchyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lengths: Option<Vec<Quantity>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semi_axes: Option<Vec<Quantity>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LapseSection {
    pub expr: Quantity,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShiftSection {
    /// Circle: the single shift component.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<Quantity>,
    /// Torus: one component per cycle.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Quantity>>,
    /// Sphere/ellipsoid: rigid rotation rate about the z axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rotation: Option<Quantity>,
}

fn default_rank() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BundleSection {
    #[serde(default = "default_rank")]
    pub rank: u32,
    /// Flat-bundle twist angles, one per fundamental cycle, in [0, 1).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub twist: Vec<f64>,
    /// Constant gauge potential components, one per fundamental cycle.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub potential: Vec<f64>,
}

impl Default for BundleSection {
    fn default() -> Self {
        BundleSection {
            rank: default_rank(),
            twist: Vec::new(),
            potential: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub spacetime: SpacetimeSection,
    pub lapse: LapseSection,
    #[serde(default)]
    pub shift: ShiftSection,
    #[serde(default)]
    pub bundle: BundleSection,
}

impl ModelConfig {
    pub fn from_toml(text: &str) -> Result<ModelConfig, ConfigError> {
        let cfg: ModelConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_string()))?;
        if cfg.version != SCHEMA_VERSION {
            return Err(ConfigError::Version { found: cfg.version });
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model config always serializes")
    }

    /// Ultrastatic or shifted circle with constant coefficients.
    pub fn circle(length: f64, lapse: f64, shift: f64, twist: f64) -> ModelConfig {
        ModelConfig {
            version: SCHEMA_VERSION,
            name: None,
            spacetime: SpacetimeSection {
                dimension: 2,
                cauchy: CauchyKind::Circle,
                length: Some(Quantity::Number(length)),
                lengths: None,
                radius: None,
                semi_axes: None,
            },
            lapse: LapseSection {
                expr: Quantity::Number(lapse),
            },
            shift: ShiftSection {
                expr: Some(Quantity::Number(shift)),
                ..ShiftSection::default()
            },
            bundle: BundleSection {
                twist: vec![twist],
                ..BundleSection::default()
            },
        }
    }

    /// Circle with closed-form lapse and shift expressions in `x`.
    pub fn circle_expr(length: f64, lapse: &str, shift: &str, twist: f64) -> ModelConfig {
        let mut cfg = ModelConfig::circle(length, 1.0, 0.0, twist);
        cfg.lapse.expr = Quantity::from(lapse);
        cfg.shift.expr = Some(Quantity::from(shift));
        cfg
    }

    pub fn torus(lengths: [f64; 2], lapse: f64, shift: [f64; 2], twist: [f64; 2]) -> ModelConfig {
        ModelConfig {
            version: SCHEMA_VERSION,
            name: None,
            spacetime: SpacetimeSection {
                dimension: 3,
                cauchy: CauchyKind::Torus,
                length: None,
                lengths: Some(lengths.iter().map(|&l| Quantity::Number(l)).collect()),
                radius: None,
                semi_axes: None,
            },
            lapse: LapseSection {
                expr: Quantity::Number(lapse),
            },
            shift: ShiftSection {
                components: Some(shift.iter().map(|&a| Quantity::Number(a)).collect()),
                ..ShiftSection::default()
            },
            bundle: BundleSection {
                twist: twist.to_vec(),
                ..BundleSection::default()
            },
        }
    }

    pub fn sphere(radius: f64, lapse: f64, rotation: f64) -> ModelConfig {
        ModelConfig {
            version: SCHEMA_VERSION,
            name: None,
            spacetime: SpacetimeSection {
                dimension: 3,
                cauchy: CauchyKind::Sphere,
                length: None,
                lengths: None,
                radius: Some(Quantity::Number(radius)),
                semi_axes: None,
            },
            lapse: LapseSection {
                expr: Quantity::Number(lapse),
            },
            shift: ShiftSection {
                rotation: Some(Quantity::Number(rotation)),
                ..ShiftSection::default()
            },
            bundle: BundleSection::default(),
        }
    }

    pub fn ellipsoid(semi_axes: [f64; 3], lapse: f64, rotation: f64) -> ModelConfig {
        let mut cfg = ModelConfig::sphere(1.0, lapse, rotation);
        cfg.spacetime.cauchy = CauchyKind::Ellipsoid;
        cfg.spacetime.radius = None;
        cfg.spacetime.semi_axes = Some(semi_axes.iter().map(|&a| Quantity::Number(a)).collect());
        cfg
    }

    pub fn with_name(mut self, name: &str) -> ModelConfig {
        self.name = Some(name.to_string());
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHIFTED: &str = r#"
version = 1
name = "shifted circle"

[spacetime]
dimension = 2
cauchy = "circle"
length = "2*pi"

[lapse]
expr = 1

[shift]
expr = "0.5"

[bundle]
rank = 2
twist = [0.0]
"#;

    #[test]
    fn parses_document_with_expression_numbers() {
        let cfg = ModelConfig::from_toml(SHIFTED).unwrap();
        assert_eq!(cfg.spacetime.cauchy, CauchyKind::Circle);
        let len = cfg.spacetime.length.as_ref().unwrap().constant("length").unwrap();
        assert!((len - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(cfg.lapse.expr.constant("lapse").unwrap(), 1.0);
        assert_eq!(cfg.bundle.rank, 2);
    }

    #[test]
    fn rejects_unknown_keys_and_versions() {
        let bad = SHIFTED.replace("rank = 2", "rank = 2\nspin = 1");
        assert!(matches!(
            ModelConfig::from_toml(&bad),
            Err(ConfigError::Parse(_))
        ));
        let bad = SHIFTED.replace("version = 1", "version = 7");
        assert!(matches!(
            ModelConfig::from_toml(&bad),
            Err(ConfigError::Version { found: 7 })
        ));
        let bad = SHIFTED.replace("[lapse]\nexpr = 1\n", "");
        assert!(ModelConfig::from_toml(&bad).is_err());
    }

    #[test]
    fn canonical_serialization_roundtrips() {
        let cfg = ModelConfig::from_toml(SHIFTED).unwrap();
        let text = cfg.to_toml();
        let again = ModelConfig::from_toml(&text).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(text, again.to_toml());
    }
}
