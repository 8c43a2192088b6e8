//! Margin perceptron for binary targets, with standardized features and
//! mistake-driven updates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{signed_labels, Predictor, Snapshot, SnapshotParams, Standardizer, TaskKind, SNAPSHOT_VERSION};
use crate::error::{Error, Result};
use crate::loss::perceptron_loss;
use crate::types::{AttributeKind, Batch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerceptronConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 20,
            seed: 0,
        }
    }
}

impl PerceptronConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct PerceptronClassifier {
    config: PerceptronConfig,
    schema_fingerprint: String,
    standardizer: Standardizer,
    weights: Vec<f64>,
    intercept: f64,
    /// True when the fitting batch held a single class; the model then
    /// predicts that class everywhere.
    degenerate: bool,
}

/// Fit a fresh perceptron on `batch`. The 0/1 target column is mapped to
/// -1/+1 labels internally; a single-class batch yields a constant
/// predictor flagged as degenerate rather than an error.
pub fn perceptron_fit(batch: &Batch, config: PerceptronConfig) -> Result<PerceptronClassifier> {
    config.validate()?;
    check_classification_batch(batch)?;
    let (features, width) = batch.feature_rows();
    let labels = signed_labels(&batch.targets());
    let standardizer = Standardizer::fit(&features, width);
    let fingerprint = batch.schema().fingerprint().to_string();

    if let Some(class) = single_class(&labels) {
        return Ok(PerceptronClassifier {
            config,
            schema_fingerprint: fingerprint,
            standardizer,
            weights: vec![0.0; width],
            intercept: class,
            degenerate: true,
        });
    }

    let z = standardizer.transform(&features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: Vec<f64> = (0..width).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut intercept = 0.0;
    train(&config, &z, width, &labels, &mut weights, &mut intercept);

    Ok(PerceptronClassifier {
        config,
        schema_fingerprint: fingerprint,
        standardizer,
        weights,
        intercept,
        degenerate: false,
    })
}

fn check_classification_batch(batch: &Batch) -> Result<()> {
    if batch.schema().target().kind != AttributeKind::TargetBinary {
        return Err(Error::Schema(
            "classification requires a binary target column".into(),
        ));
    }
    if batch.n_rows() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: batch.n_rows(),
        });
    }
    Ok(())
}

fn single_class(labels: &[f64]) -> Option<f64> {
    let first = labels[0];
    labels.iter().all(|&l| l == first).then_some(first)
}

/// Mistake-driven updates: on every violated margin the weights move by
/// `rate * label * features`. Stops early after a clean epoch.
fn train(
    config: &PerceptronConfig,
    z: &[f64],
    width: usize,
    labels: &[f64],
    weights: &mut [f64],
    intercept: &mut f64,
) {
    for _ in 0..config.epochs {
        let mut mistakes = 0usize;
        for (row, &label) in z.chunks_exact(width).zip(labels) {
            let activation: f64 =
                row.iter().zip(weights.iter()).map(|(&v, &w)| v * w).sum::<f64>() + *intercept;
            if label * activation <= 0.0 {
                for (w, &v) in weights.iter_mut().zip(row) {
                    *w += config.learning_rate * label * v;
                }
                *intercept += config.learning_rate * label;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            break;
        }
    }
}

impl PerceptronClassifier {
    pub(crate) fn from_parts(
        config: PerceptronConfig,
        schema_fingerprint: String,
        standardizer: Standardizer,
        weights: Vec<f64>,
        intercept: f64,
        degenerate: bool,
    ) -> Self {
        Self {
            config,
            schema_fingerprint,
            standardizer,
            weights,
            intercept,
            degenerate,
        }
    }

    /// True when the fitting batch contained only one class.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Hard labels in -1/+1 obtained by thresholding margins at zero.
    pub fn predict_labels(&self, features: &[f64]) -> Result<Vec<f64>> {
        Ok(self
            .predict(features)?
            .into_iter()
            .map(|m| if m > 0.0 { 1.0 } else { -1.0 })
            .collect())
    }

    fn check_batch_schema(&self, batch: &Batch) -> Result<()> {
        if batch.schema().fingerprint() != self.schema_fingerprint {
            return Err(Error::ModelSchemaMismatch);
        }
        Ok(())
    }
}

impl Predictor for PerceptronClassifier {
    fn task(&self) -> TaskKind {
        TaskKind::Classification
    }

    fn fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(perceptron_fit(batch, self.config.clone())?))
    }

    fn warm_fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>> {
        self.check_batch_schema(batch)?;
        check_classification_batch(batch)?;
        let (features, width) = batch.feature_rows();
        let labels = signed_labels(&batch.targets());
        let z = self.standardizer.transform(&features);
        let mut weights = self.weights.clone();
        let mut intercept = self.intercept;
        train(&self.config, &z, width, &labels, &mut weights, &mut intercept);
        Ok(Box::new(PerceptronClassifier {
            config: self.config.clone(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            standardizer: self.standardizer.clone(),
            weights,
            intercept,
            degenerate: false,
        }))
    }

    /// Raw margins `w.z + b`; threshold at zero for labels, keep raw for
    /// ranking metrics.
    fn predict(&self, features: &[f64]) -> Result<Vec<f64>> {
        let width = self.weights.len();
        if width == 0 || features.len() % width != 0 {
            return Err(Error::FeatureWidth {
                got: features.len(),
                expected: width,
            });
        }
        let z = self.standardizer.transform(features);
        Ok(z.chunks_exact(width)
            .map(|row| {
                row.iter()
                    .zip(&self.weights)
                    .map(|(&v, &w)| v * w)
                    .sum::<f64>()
                    + self.intercept
            })
            .collect())
    }

    fn loss_on(&self, batch: &Batch) -> Result<f64> {
        self.check_batch_schema(batch)?;
        let (features, _) = batch.feature_rows();
        let z = self.standardizer.transform(&features);
        let labels = signed_labels(&batch.targets());
        perceptron_loss(&self.weights, self.intercept, &z, &labels)
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            schema_fingerprint: self.schema_fingerprint.clone(),
            params: SnapshotParams::Classification {
                config: self.config.clone(),
                means: self.standardizer.means.clone(),
                stds: self.standardizer.stds.clone(),
                weights: self.weights.clone(),
                intercept: self.intercept,
                degenerate: self.degenerate,
            },
        }
    }

    fn clone_box(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}
