//! Min-max scaling fitted on training cases.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::case::{FeatureVector, ATTRIBUTE_NAMES, NUM_ATTRIBUTES};
use crate::dataset::CaseBase;
use crate::error::{Error, Result};

/// Per-attribute extrema of the training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationParams {
    min: [f64; NUM_ATTRIBUTES],
    max: [f64; NUM_ATTRIBUTES],
}

impl NormalizationParams {
    /// Column-wise extrema over the given vectors.
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a FeatureVector>) -> Result<Self> {
        let mut min = [f64::INFINITY; NUM_ATTRIBUTES];
        let mut max = [f64::NEG_INFINITY; NUM_ATTRIBUTES];
        let mut seen = false;
        for v in vectors {
            seen = true;
            for i in 0..NUM_ATTRIBUTES {
                min[i] = min[i].min(v.0[i]);
                max[i] = max[i].max(v.0[i]);
            }
        }
        if !seen {
            return Err(Error::Empty("cannot fit normalization on an empty training set"));
        }
        Ok(Self { min, max })
    }

    pub fn from_extrema(min: [f64; NUM_ATTRIBUTES], max: [f64; NUM_ATTRIBUTES]) -> Result<Self> {
        for i in 0..NUM_ATTRIBUTES {
            if !min[i].is_finite() || !max[i].is_finite() || max[i] < min[i] {
                return Err(Error::InvalidParams(format!(
                    "{}: min {} / max {}",
                    ATTRIBUTE_NAMES[i], min[i], max[i]
                )));
            }
        }
        Ok(Self { min, max })
    }

    pub fn min(&self, i: usize) -> f64 {
        self.min[i]
    }

    pub fn max(&self, i: usize) -> f64 {
        self.max[i]
    }

    pub fn range(&self, i: usize) -> f64 {
        self.max[i] - self.min[i]
    }

    /// Zero-range attribute.
    pub fn is_degenerate(&self, i: usize) -> bool {
        self.range(i) == 0.0
    }

    /// Scales each component to `(x - min) / range`. Values outside the fitted
    /// extrema are left outside `[0, 1]`.
    ///
    /// A degenerate attribute is shifted by `min` without dividing, so every
    /// fitted value maps to 0 while a differing query value stays nonzero and
    /// fails the exact-match test in similarity.
    pub fn normalize(&self, v: &FeatureVector) -> FeatureVector {
        let mut out = [0.0; NUM_ATTRIBUTES];
        for (i, o) in out.iter_mut().enumerate() {
            let r = self.range(i);
            let shifted = v.0[i] - self.min[i];
            *o = if r == 0.0 { shifted } else { shifted / r };
        }
        FeatureVector(out)
    }

    /// Writes the JSON sidecar (attribute name to min/max/range).
    pub fn write_json<W: Write>(&self, sink: W) -> Result<()> {
        serde_json::to_writer_pretty(sink, &self.to_sidecar())?;
        Ok(())
    }

    pub fn read_json<R: Read>(source: R) -> Result<Self> {
        let entries: Vec<SidecarEntry> = serde_json::from_reader(source)?;
        Self::from_sidecar(&entries)
    }

    fn to_sidecar(self) -> Vec<SidecarEntry> {
        (0..NUM_ATTRIBUTES)
            .map(|i| SidecarEntry {
                attribute: ATTRIBUTE_NAMES[i].to_string(),
                min: self.min[i],
                max: self.max[i],
                range: self.range(i),
                degenerate: self.is_degenerate(i),
            })
            .collect()
    }

    fn from_sidecar(entries: &[SidecarEntry]) -> Result<Self> {
        if entries.len() != NUM_ATTRIBUTES {
            return Err(Error::Malformed(format!(
                "normalization sidecar has {} attributes, expected {NUM_ATTRIBUTES}",
                entries.len()
            )));
        }
        let mut min = [0.0; NUM_ATTRIBUTES];
        let mut max = [0.0; NUM_ATTRIBUTES];
        for (i, e) in entries.iter().enumerate() {
            if e.attribute != ATTRIBUTE_NAMES[i] {
                return Err(Error::Malformed(format!(
                    "sidecar attribute {i} is `{}`, expected `{}`",
                    e.attribute, ATTRIBUTE_NAMES[i]
                )));
            }
            min[i] = e.min;
            max[i] = e.max;
        }
        Self::from_extrema(min, max)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct SidecarEntry {
    attribute: String,
    min: f64,
    max: f64,
    range: f64,
    degenerate: bool,
}

/// Fits extrema on the raw feature vectors of a case base.
pub fn fit_minmax(train: &CaseBase) -> Result<NormalizationParams> {
    let vectors: Vec<FeatureVector> = train.cases().map(|c| c.to_feature_vector()).collect();
    NormalizationParams::fit(&vectors)
}

pub fn normalize(v: &FeatureVector, p: &NormalizationParams) -> FeatureVector {
    p.normalize(v)
}
