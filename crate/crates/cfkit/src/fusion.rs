//! Content fusion: per-target weights over the basis fonts and the weighted
//! combination of their content features.
//!
//! Distances from the target profile to each basis profile are normalized by
//! their mean before the tempered softmax, so one temperature default works
//! across datasets of different absolute feature scales. The font-level
//! weight vector is computed once per target and reused for every character.

use crate::cluster::FontContentProfile;
use crate::error::{Error, Result};
use crate::model::ContentFeature;

pub const DEFAULT_TAU: f64 = 0.3;

/// Convex fusion weights of one target font over the basis fonts.
#[derive(Debug, Clone)]
pub struct FusionWeights {
    pub target_font: String,
    pub weights: Vec<f64>,
    pub tau: f64,
}

impl FusionWeights {
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &w) in self.weights.iter().enumerate() {
            if w > self.weights[best] {
                best = i;
            }
        }
        best
    }

    /// One-hot weights selecting a single basis font (the retrieval limit).
    pub fn one_hot(target_font: impl Into<String>, m: usize, index: usize) -> Self {
        let mut weights = vec![0.0; m];
        weights[index] = 1.0;
        FusionWeights {
            target_font: target_font.into(),
            weights,
            tau: 0.0,
        }
    }
}

/// Distances normalized by their mean; all-zero rows pass through unchanged
/// (the softmax then yields uniform weights).
pub fn normalize_distances(d: &[f64]) -> Vec<f64> {
    let mean: f64 = d.iter().sum::<f64>() / d.len() as f64;
    if mean <= 0.0 {
        return d.to_vec();
    }
    d.iter().map(|&x| x / mean).collect()
}

/// softmax(-d / tau) over already-normalized distances.
pub fn weights_from_normalized(d_norm: &[f64], tau: f64) -> Result<Vec<f64>> {
    if d_norm.is_empty() {
        return Err(Error::invalid("basis", "empty basis set"));
    }
    if tau <= 0.0 {
        return Err(Error::invalid("tau", "temperature must be > 0"));
    }
    Ok(crate::cluster::softmax(
        &d_norm.iter().map(|&x| -x / tau).collect::<Vec<f64>>(),
    ))
}

/// Weights of one target font over the basis profiles.
pub fn fusion_weights(
    target: &FontContentProfile,
    basis: &[FontContentProfile],
    tau: f64,
) -> Result<FusionWeights> {
    if basis.is_empty() {
        return Err(Error::invalid("basis", "empty basis set"));
    }
    for b in basis {
        if b.values.len() != target.values.len() {
            return Err(Error::DimMismatch {
                what: "profile",
                expected: target.values.len(),
                found: b.values.len(),
            });
        }
    }
    let distances: Vec<f64> = basis.iter().map(|b| target.l1_distance(b)).collect();
    let weights = weights_from_normalized(&normalize_distances(&distances), tau)?;
    Ok(FusionWeights {
        target_font: target.font_id.clone(),
        weights,
        tau,
    })
}

/// Elementwise convex combination of the basis content features.
pub fn fuse_content(weights: &FusionWeights, basis_features: &[ContentFeature]) -> Result<ContentFeature> {
    if basis_features.len() != weights.weights.len() {
        return Err(Error::DimMismatch {
            what: "basis features",
            expected: weights.weights.len(),
            found: basis_features.len(),
        });
    }
    let dim = basis_features
        .first()
        .ok_or_else(|| Error::invalid("basis", "empty basis set"))?
        .values
        .len();
    let mut out = vec![0.0; dim];
    for (w, feat) in weights.weights.iter().zip(basis_features) {
        if feat.values.len() != dim {
            return Err(Error::DimMismatch {
                what: "content feature",
                expected: dim,
                found: feat.values.len(),
            });
        }
        for (o, v) in out.iter_mut().zip(&feat.values) {
            *o += w * v;
        }
    }
    Ok(ContentFeature::new(out)
        .tagged(weights.target_font.clone(), basis_features[0].char_id.clone()))
}

/// Shannon entropy of a weight vector (natural log; 0 log 0 = 0).
pub fn entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|&&w| w > 0.0)
        .map(|&w| w * w.ln())
        .sum::<f64>()
}

/// One row of the fusion weight report.
#[derive(Debug, Clone)]
pub struct WeightReportRow {
    pub font_id: String,
    pub weights: Vec<f64>,
    pub entropy: f64,
    pub argmax: usize,
}

/// Weight vectors plus dispersion statistics for every target font.
pub fn weight_report(
    targets: &[FontContentProfile],
    basis: &[FontContentProfile],
    tau: f64,
) -> Result<Vec<WeightReportRow>> {
    targets
        .iter()
        .map(|t| {
            let w = fusion_weights(t, basis, tau)?;
            Ok(WeightReportRow {
                font_id: t.font_id.clone(),
                entropy: entropy(&w.weights),
                argmax: w.argmax(),
                weights: w.weights,
            })
        })
        .collect()
}
