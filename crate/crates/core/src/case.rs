//! Patient records and their fixed-order numeric projection.
//!
//! A [`Case`] carries the 13 clinical attributes of the Cleveland schema plus
//! an optional diagnosis. Attribute order is frozen by [`ATTRIBUTE_NAMES`];
//! every weight vector and similarity computation in the crate indexes
//! against it.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{FieldError, ValidationErrors};

/// Number of input attributes.
pub const NUM_ATTRIBUTES: usize = 13;

/// Canonical attribute names in feature-vector order.
pub const ATTRIBUTE_NAMES: [&str; NUM_ATTRIBUTES] = [
    "age", "sex", "cp", "trestbps", "chol", "fbs", "restecg", "thalach", "exang", "oldpeak",
    "slope", "ca", "thal",
];

/// Name of the output column.
pub const TARGET_NAME: &str = "target";

/// Index of `oldpeak`, the only real-valued attribute.
pub const OLDPEAK_INDEX: usize = 9;

/// Diagnosis label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Target {
    Absent,
    Present,
}

impl Target {
    pub fn as_u8(self) -> u8 {
        match self {
            Target::Absent => 0,
            Target::Present => 1,
        }
    }

    pub fn is_present(self) -> bool {
        self == Target::Present
    }
}

impl From<Target> for u8 {
    fn from(t: Target) -> u8 {
        t.as_u8()
    }
}

impl TryFrom<u8> for Target {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            0 => Ok(Target::Absent),
            1 => Ok(Target::Present),
            other => Err(format!("target must be 0 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// How strictly categorical domains are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    Strict,
    /// Accepts out-of-domain integer codes for `ca` and `thal`, recording a
    /// warning for each. The public 1025-row file has `ca = 4` and `thal = 0`.
    #[default]
    Lenient,
}

/// One patient record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Case {
    pub age: i32,
    /// 0 = female, 1 = male.
    pub sex: i32,
    /// Chest pain type: 0 typical angina, 1 atypical angina, 2 non-anginal, 3 asymptomatic.
    pub cp: i32,
    /// Resting blood pressure (mmHg).
    pub trestbps: i32,
    /// Serum cholesterol (mg/dl).
    pub chol: i32,
    pub fbs: i32,
    pub restecg: i32,
    /// Maximum heart rate achieved.
    pub thalach: i32,
    pub exang: i32,
    /// ST depression induced by exercise relative to rest.
    pub oldpeak: f64,
    pub slope: i32,
    pub ca: i32,
    pub thal: i32,
    pub target: Option<Target>,
}

/// A validation finding that did not reject the case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationWarning {
    pub field: String,
    pub value: String,
    pub message: String,
}

impl fmt::Display for ValidationWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}: {}", self.field, self.value, self.message)
    }
}

/// A case accepted by [`validate_case`], with any lenient-mode warnings.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub case: Case,
    pub warnings: Vec<ValidationWarning>,
}

/// Documented domain for each categorical attribute.
fn categorical_domain(field: &str) -> Option<&'static [i32]> {
    Some(match field {
        "sex" | "fbs" | "exang" => &[0, 1],
        "cp" => &[0, 1, 2, 3],
        "restecg" | "slope" => &[0, 1, 2],
        "ca" => &[0, 1, 2, 3],
        "thal" => &[1, 2, 3],
        _ => return None,
    })
}

fn relaxed_in_lenient(field: &str) -> bool {
    matches!(field, "ca" | "thal")
}

/// Parses and validates a record given as field name to textual value.
///
/// Field names must be canonical (see [`ATTRIBUTE_NAMES`] and
/// [`TARGET_NAME`]); alias resolution is the CSV reader's job. All problems
/// are collected rather than stopping at the first one.
pub fn validate_case(
    raw: &HashMap<String, String>,
    mode: ValidationMode,
) -> Result<Validated, ValidationErrors> {
    let mut errors = Vec::new();
    let mut warnings = Vec::new();
    let mut ints = [0i32; NUM_ATTRIBUTES];
    let mut oldpeak = 0.0;

    for (i, &name) in ATTRIBUTE_NAMES.iter().enumerate() {
        let Some(text) = raw.get(name).map(|s| s.trim()) else {
            errors.push(FieldError::Missing { field: name.to_string() });
            continue;
        };
        if text.is_empty() {
            errors.push(FieldError::Missing { field: name.to_string() });
            continue;
        }
        if i == OLDPEAK_INDEX {
            match text.parse::<f64>() {
                Ok(v) if !v.is_finite() => errors.push(FieldError::NotNumeric {
                    field: name.to_string(),
                    value: text.to_string(),
                }),
                Ok(v) if v < 0.0 => errors.push(FieldError::Negative {
                    field: name.to_string(),
                    value: text.to_string(),
                }),
                Ok(v) => oldpeak = v,
                Err(_) => errors.push(FieldError::NotNumeric {
                    field: name.to_string(),
                    value: text.to_string(),
                }),
            }
            continue;
        }
        let value = match text.parse::<i32>() {
            Ok(v) => v,
            Err(_) => {
                errors.push(FieldError::NotNumeric {
                    field: name.to_string(),
                    value: text.to_string(),
                });
                continue;
            }
        };
        if let Some(domain) = categorical_domain(name) {
            if !domain.contains(&value) {
                if mode == ValidationMode::Lenient && relaxed_in_lenient(name) {
                    warnings.push(ValidationWarning {
                        field: name.to_string(),
                        value: text.to_string(),
                        message: format!("outside documented domain {domain:?}"),
                    });
                } else {
                    errors.push(FieldError::OutOfDomain {
                        field: name.to_string(),
                        value: text.to_string(),
                        allowed: domain.to_vec(),
                    });
                    continue;
                }
            }
        }
        ints[i] = value;
    }

    let target = match raw.get(TARGET_NAME).map(|s| s.trim()) {
        None | Some("") => None,
        Some(text) => match text.parse::<u8>().ok().and_then(|v| Target::try_from(v).ok()) {
            Some(t) => Some(t),
            None => {
                let parsed_int = text.parse::<i64>().is_ok();
                errors.push(if parsed_int {
                    FieldError::OutOfDomain {
                        field: TARGET_NAME.to_string(),
                        value: text.to_string(),
                        allowed: vec![0, 1],
                    }
                } else {
                    FieldError::NotNumeric {
                        field: TARGET_NAME.to_string(),
                        value: text.to_string(),
                    }
                });
                None
            }
        },
    };

    if !errors.is_empty() {
        return Err(ValidationErrors(errors));
    }

    let case = Case {
        age: ints[0],
        sex: ints[1],
        cp: ints[2],
        trestbps: ints[3],
        chol: ints[4],
        fbs: ints[5],
        restecg: ints[6],
        thalach: ints[7],
        exang: ints[8],
        oldpeak,
        slope: ints[10],
        ca: ints[11],
        thal: ints[12],
        target,
    };
    Ok(Validated { case, warnings })
}

impl Case {
    /// Builds a case from a 13-value vector without domain checks.
    ///
    /// Every component except `oldpeak` must be an integer that fits in
    /// `i32`; `oldpeak` must be finite and non-negative.
    pub fn from_features(
        features: &FeatureVector,
        target: Option<Target>,
    ) -> Result<Case, ValidationErrors> {
        let mut errors = Vec::new();
        let mut ints = [0i32; NUM_ATTRIBUTES];
        for (i, &x) in features.0.iter().enumerate() {
            if i == OLDPEAK_INDEX {
                if !x.is_finite() || x < 0.0 {
                    errors.push(FieldError::Negative {
                        field: ATTRIBUTE_NAMES[i].to_string(),
                        value: x.to_string(),
                    });
                }
                continue;
            }
            if x.fract() != 0.0 || !x.is_finite() || x.abs() > i32::MAX as f64 {
                errors.push(FieldError::NotNumeric {
                    field: ATTRIBUTE_NAMES[i].to_string(),
                    value: x.to_string(),
                });
            } else {
                ints[i] = x as i32;
            }
        }
        if !errors.is_empty() {
            return Err(ValidationErrors(errors));
        }
        Ok(Case {
            age: ints[0],
            sex: ints[1],
            cp: ints[2],
            trestbps: ints[3],
            chol: ints[4],
            fbs: ints[5],
            restecg: ints[6],
            thalach: ints[7],
            exang: ints[8],
            oldpeak: features.0[OLDPEAK_INDEX],
            slope: ints[10],
            ca: ints[11],
            thal: ints[12],
            target,
        })
    }

    /// Projects the 13 input attributes in canonical order. The target is
    /// never part of the vector.
    pub fn to_feature_vector(&self) -> FeatureVector {
        FeatureVector([
            self.age as f64,
            self.sex as f64,
            self.cp as f64,
            self.trestbps as f64,
            self.chol as f64,
            self.fbs as f64,
            self.restecg as f64,
            self.thalach as f64,
            self.exang as f64,
            self.oldpeak,
            self.slope as f64,
            self.ca as f64,
            self.thal as f64,
        ])
    }

    /// Textual values keyed by canonical name; the inverse of [`validate_case`].
    pub fn to_fields(&self) -> Vec<(&'static str, String)> {
        let v = self.to_feature_vector();
        let mut out: Vec<(&'static str, String)> = ATTRIBUTE_NAMES
            .iter()
            .enumerate()
            .map(|(i, &name)| {
                let text = if i == OLDPEAK_INDEX {
                    format_real(v.0[i])
                } else {
                    (v.0[i] as i64).to_string()
                };
                (name, text)
            })
            .collect();
        if let Some(t) = self.target {
            out.push((TARGET_NAME, t.to_string()));
        }
        out
    }

    pub fn is_male(&self) -> bool {
        self.sex == 1
    }

    pub fn with_target(mut self, target: Target) -> Case {
        self.target = Some(target);
        self
    }
}

/// Shortest round-tripping decimal, always with a fractional part.
pub(crate) fn format_real(x: f64) -> String {
    format!("{x:?}")
}

/// The 13 attribute values of a case, in [`ATTRIBUTE_NAMES`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; NUM_ATTRIBUTES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, i: usize) -> f64 {
        self.0[i]
    }
}

impl From<[f64; NUM_ATTRIBUTES]> for FeatureVector {
    fn from(v: [f64; NUM_ATTRIBUTES]) -> Self {
        FeatureVector(v)
    }
}

impl TryFrom<&[f64]> for FeatureVector {
    type Error = usize;

    /// Fails with the offending length when it is not 13.
    fn try_from(v: &[f64]) -> Result<Self, Self::Error> {
        <[f64; NUM_ATTRIBUTES]>::try_from(v).map(FeatureVector).map_err(|_| v.len())
    }
}
