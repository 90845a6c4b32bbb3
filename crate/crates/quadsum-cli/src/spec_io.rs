//! JSON form of operator specifications.
//!
//! An operator file is `{"field": "Q" | "Fp:<p>", "op": <tree>}` with all
//! scalars in text form. Parsing and serialization are exact: parse →
//! serialize → parse is the identity on parsed values.

use std::collections::BTreeMap;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use quadsum_core::operator::{Band, JordanBlock, JordanPattern, OperatorSpec};
use quadsum_core::scalar::{FieldSpec, Scalar};
use quadsum_core::vector::FinVector;

/// Parses `"Q"` or `"Fp:<p>"`.
pub fn parse_field(text: &str) -> Result<FieldSpec> {
    let text = text.trim();
    if text == "Q" {
        return Ok(FieldSpec::Rationals);
    }
    if let Some(p) = text.strip_prefix("Fp:") {
        let p: u64 = p
            .parse()
            .with_context(|| format!("bad prime in {text:?}"))?;
        return FieldSpec::PrimeField(p)
            .validate()
            .map_err(|e| anyhow!("{e}"));
    }
    bail!("unknown field {text:?} (expected \"Q\" or \"Fp:<p>\")")
}

/// The JSON tree of an operator specification. Scalars are strings in the
/// field's text form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpNode {
    Shift,
    Scalar {
        value: String,
    },
    Diagonal {
        entries: Vec<String>,
        periodic: bool,
    },
    JordanBlocks {
        pattern: PatternNode,
    },
    BandedPeriodic {
        bands: Vec<BandNode>,
    },
    FinitePatch {
        base: Box<OpNode>,
        /// column -> sparse vector entries
        patches: BTreeMap<String, Vec<(usize, String)>>,
    },
    Sum {
        terms: Vec<OpNode>,
    },
    Compose {
        factors: Vec<OpNode>,
    },
    Scale {
        factor: String,
        inner: Box<OpNode>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum PatternNode {
    Cycle {
        blocks: Vec<BlockNode>,
    },
    Arithmetic {
        start_size: usize,
        step: usize,
        eigenvalue: String,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockNode {
    pub size: usize,
    pub eigenvalue: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandNode {
    pub offset: i64,
    pub coeffs: Vec<String>,
}

/// A whole operator file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpFile {
    pub field: String,
    pub op: OpNode,
}

fn scalar(field: FieldSpec, text: &str) -> Result<Scalar> {
    field
        .parse_scalar(text)
        .map_err(|e| anyhow!("scalar {text:?}: {e}"))
}

impl OpNode {
    /// Denotes the core specification over `field`.
    pub fn to_spec(&self, field: FieldSpec) -> Result<OperatorSpec> {
        Ok(match self {
            OpNode::Shift => OperatorSpec::Shift,
            OpNode::Scalar { value } => OperatorSpec::Scalar {
                value: scalar(field, value)?,
            },
            OpNode::Diagonal { entries, periodic } => OperatorSpec::Diagonal {
                entries: entries
                    .iter()
                    .map(|s| scalar(field, s))
                    .collect::<Result<_>>()?,
                periodic: *periodic,
            },
            OpNode::JordanBlocks { pattern } => OperatorSpec::JordanBlocks {
                pattern: match pattern {
                    PatternNode::Cycle { blocks } => JordanPattern::Cycle {
                        blocks: blocks
                            .iter()
                            .map(|b| {
                                Ok(JordanBlock {
                                    size: b.size,
                                    eigenvalue: scalar(field, &b.eigenvalue)?,
                                })
                            })
                            .collect::<Result<_>>()?,
                    },
                    PatternNode::Arithmetic {
                        start_size,
                        step,
                        eigenvalue,
                    } => JordanPattern::Arithmetic {
                        start_size: *start_size,
                        step: *step,
                        eigenvalue: scalar(field, eigenvalue)?,
                    },
                },
            },
            OpNode::BandedPeriodic { bands } => OperatorSpec::BandedPeriodic {
                bands: bands
                    .iter()
                    .map(|b| {
                        Ok(Band {
                            offset: b.offset as isize,
                            coeffs: b
                                .coeffs
                                .iter()
                                .map(|s| scalar(field, s))
                                .collect::<Result<_>>()?,
                        })
                    })
                    .collect::<Result<_>>()?,
            },
            OpNode::FinitePatch { base, patches } => {
                let mut parsed = BTreeMap::new();
                for (col, entries) in patches {
                    let col: usize = col
                        .parse()
                        .with_context(|| format!("bad patch column {col:?}"))?;
                    let entries = entries
                        .iter()
                        .map(|(i, s)| Ok((*i, scalar(field, s)?)))
                        .collect::<Result<Vec<_>>>()?;
                    parsed.insert(col, entries);
                }
                OperatorSpec::FinitePatch {
                    base: Box::new(base.to_spec(field)?),
                    patches: parsed,
                }
            }
            OpNode::Sum { terms } => OperatorSpec::Sum {
                terms: terms
                    .iter()
                    .map(|t| t.to_spec(field))
                    .collect::<Result<_>>()?,
            },
            OpNode::Compose { factors } => OperatorSpec::Compose {
                factors: factors
                    .iter()
                    .map(|t| t.to_spec(field))
                    .collect::<Result<_>>()?,
            },
            OpNode::Scale { factor, inner } => OperatorSpec::Scale {
                factor: scalar(field, factor)?,
                inner: Box::new(inner.to_spec(field)?),
            },
        })
    }

    /// Canonical JSON tree of a core specification.
    pub fn from_spec(spec: &OperatorSpec) -> OpNode {
        match spec {
            OperatorSpec::Shift => OpNode::Shift,
            OperatorSpec::Scalar { value } => OpNode::Scalar {
                value: value.to_string(),
            },
            OperatorSpec::Diagonal { entries, periodic } => OpNode::Diagonal {
                entries: entries.iter().map(|s| s.to_string()).collect(),
                periodic: *periodic,
            },
            OperatorSpec::JordanBlocks { pattern } => OpNode::JordanBlocks {
                pattern: match pattern {
                    JordanPattern::Cycle { blocks } => PatternNode::Cycle {
                        blocks: blocks
                            .iter()
                            .map(|b| BlockNode {
                                size: b.size,
                                eigenvalue: b.eigenvalue.to_string(),
                            })
                            .collect(),
                    },
                    JordanPattern::Arithmetic {
                        start_size,
                        step,
                        eigenvalue,
                    } => PatternNode::Arithmetic {
                        start_size: *start_size,
                        step: *step,
                        eigenvalue: eigenvalue.to_string(),
                    },
                },
            },
            OperatorSpec::BandedPeriodic { bands } => OpNode::BandedPeriodic {
                bands: bands
                    .iter()
                    .map(|b| BandNode {
                        offset: b.offset as i64,
                        coeffs: b.coeffs.iter().map(|s| s.to_string()).collect(),
                    })
                    .collect(),
            },
            OperatorSpec::FinitePatch { base, patches } => OpNode::FinitePatch {
                base: Box::new(OpNode::from_spec(base)),
                patches: patches
                    .iter()
                    .map(|(col, entries)| {
                        (
                            col.to_string(),
                            entries.iter().map(|(i, s)| (*i, s.to_string())).collect(),
                        )
                    })
                    .collect(),
            },
            OperatorSpec::Sum { terms } => OpNode::Sum {
                terms: terms.iter().map(OpNode::from_spec).collect(),
            },
            OperatorSpec::Compose { factors } => OpNode::Compose {
                factors: factors.iter().map(OpNode::from_spec).collect(),
            },
            OperatorSpec::Scale { factor, inner } => OpNode::Scale {
                factor: factor.to_string(),
                inner: Box::new(OpNode::from_spec(inner)),
            },
        }
    }
}

impl OpFile {
    pub fn parse(text: &str) -> Result<(FieldSpec, OperatorSpec, OpFile)> {
        let file: OpFile = serde_json::from_str(text).context("operator spec JSON")?;
        let field = parse_field(&file.field)?;
        let spec = file.op.to_spec(field)?;
        Ok((field, spec, file))
    }

    pub fn render(field: FieldSpec, spec: &OperatorSpec, pretty: bool) -> String {
        let file = OpFile {
            field: field.to_string(),
            op: OpNode::from_spec(spec),
        };
        if pretty {
            serde_json::to_string_pretty(&file).expect("serializable")
        } else {
            serde_json::to_string(&file).expect("serializable")
        }
    }
}

/// Sparse vector as ordered `[index, coefficient]` pairs.
pub fn vector_to_pairs(v: &FinVector) -> Vec<(usize, String)> {
    v.iter().map(|(i, c)| (i, c.to_string())).collect()
}

pub fn pairs_to_vector(field: FieldSpec, pairs: &[(usize, String)]) -> Result<FinVector> {
    let mut v = FinVector::zero(field);
    for (i, s) in pairs {
        let c = scalar(field, s)?;
        let cur = v.coeff(*i);
        v.set(*i, &cur + &c);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity_on_parsed_values() {
        let text = r#"{
            "field": "Q",
            "op": {"kind": "finite_patch",
                   "base": {"kind": "sum", "terms": [
                        {"kind": "shift"},
                        {"kind": "scale", "factor": "-1/2",
                         "inner": {"kind": "diagonal", "entries": ["1", "0"], "periodic": true}}]},
                   "patches": {"0": [[0, "3/4"], [2, "-2"]]}}
        }"#;
        let (field, spec, _) = OpFile::parse(text).unwrap();
        let rendered = OpFile::render(field, &spec, false);
        let (field2, spec2, _) = OpFile::parse(&rendered).unwrap();
        assert_eq!(field, field2);
        assert_eq!(spec, spec2);
        // And rendering is a fixed point.
        assert_eq!(rendered, OpFile::render(field2, &spec2, false));
    }

    #[test]
    fn prime_field_scalars_round_trip() {
        let text = r#"{"field":"Fp:5","op":{"kind":"scalar","value":"7"}}"#;
        let (field, spec, _) = OpFile::parse(text).unwrap();
        assert_eq!(field, FieldSpec::PrimeField(5));
        let rendered = OpFile::render(field, &spec, false);
        assert!(rendered.contains("2 mod 5"));
        let (_, spec2, _) = OpFile::parse(&rendered).unwrap();
        assert_eq!(spec, spec2);
    }

    #[test]
    fn rejects_unknown_kinds_and_fields() {
        assert!(OpFile::parse(r#"{"field":"Q","op":{"kind":"mystery"}}"#).is_err());
        assert!(OpFile::parse(r#"{"field":"R","op":{"kind":"shift"}}"#).is_err());
        assert!(OpFile::parse(r#"{"field":"Fp:6","op":{"kind":"shift"}}"#).is_err());
    }

    #[test]
    fn jordan_pattern_forms() {
        let text = r#"{"field":"Q","op":{"kind":"jordan_blocks",
            "pattern":{"mode":"arithmetic","start_size":1,"step":1,"eigenvalue":"0"}}}"#;
        let (field, spec, _) = OpFile::parse(text).unwrap();
        let op = spec.build(field).unwrap();
        assert!(op.column(0).is_zero());
    }
}
