//! Loss measurement for the two supported task kinds, plus the loss
//! change rate that drives update/retrain decisions.

use crate::error::{Error, Result};

/// Losses of the current model on the reference window (`lm`) and the
/// incoming window (`ln`), with the derived change rate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossPair {
    pub lm: f64,
    pub ln: f64,
    pub lc: f64,
}

impl LossPair {
    pub fn new(lm: f64, ln: f64) -> Result<Self> {
        let lc = loss_change_rate(lm, ln)?;
        Ok(Self { lm, ln, lc })
    }
}

/// Root mean square error between predictions and targets.
pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let sum_sq: f64 = pred
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let r = p - t;
            r * r
        })
        .sum();
    Ok((sum_sq / pred.len() as f64).sqrt())
}

/// Perceptron criterion: the summed margin violations
/// `max(0, -y * (w.x + b))` over a labelled batch. Points classified
/// correctly with positive margin contribute nothing.
///
/// `features` is row-major with one row per label and width `w.len()`.
pub fn perceptron_loss(w: &[f64], b: f64, features: &[f64], labels: &[f64]) -> Result<f64> {
    let width = w.len();
    if width == 0 || features.len() != labels.len() * width {
        return Err(Error::FeatureWidth {
            got: if labels.is_empty() {
                features.len()
            } else {
                features.len() / labels.len()
            },
            expected: width,
        });
    }
    let mut total = 0.0;
    for (row, &label) in features.chunks_exact(width).zip(labels) {
        if label != -1.0 && label != 1.0 {
            return Err(Error::BadLabel(label));
        }
        let activation: f64 = row.iter().zip(w).map(|(&x, &wi)| x * wi).sum::<f64>() + b;
        total += (-label * activation).max(0.0);
    }
    Ok(total)
}

/// Relative change of loss between the reference and incoming windows.
///
/// `|ln - lm| / lm` when the reference loss is positive. A perfect model
/// that stays perfect has rate 0; a perfect model that degrades at all
/// has infinite rate, which downstream always reads as retrain.
pub fn loss_change_rate(lm: f64, ln: f64) -> Result<f64> {
    if lm < 0.0 {
        return Err(Error::NegativeLoss(lm));
    }
    if ln < 0.0 {
        return Err(Error::NegativeLoss(ln));
    }
    if lm == 0.0 {
        return Ok(if ln == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok(((ln - lm) / lm).abs())
}
