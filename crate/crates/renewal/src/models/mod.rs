//! Pluggable predictors: the interface the renewal policy drives, plus a
//! ridge-regularized linear regressor and a margin perceptron standing in
//! for heavier task-specific models.
//!
//! Predictors are immutable after fitting: `fit` and `warm_fit` return new
//! values instead of mutating shared state, which keeps retain decisions
//! trivially idempotent and lets pipelines share models across threads.

mod linear;
mod perceptron;

pub use linear::{linreg_fit, LinearRegressor, RegressionConfig};
pub use perceptron::{perceptron_fit, PerceptronClassifier, PerceptronConfig};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AttributeKind, Batch, Schema};

/// What a predictor predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Regression,
    Classification,
}

impl TaskKind {
    /// Task implied by a schema's target kind.
    pub fn for_schema(schema: &Schema) -> TaskKind {
        match schema.target().kind {
            AttributeKind::TargetBinary => TaskKind::Classification,
            _ => TaskKind::Regression,
        }
    }
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TaskKind::Regression => f.write_str("regression"),
            TaskKind::Classification => f.write_str("classification"),
        }
    }
}

/// A trained prediction model the renewal policy can evaluate, refresh,
/// and replace.
pub trait Predictor: Send + Sync {
    fn task(&self) -> TaskKind;

    /// Fit from scratch on `batch`: parameters and feature statistics are
    /// re-initialized before training. Configuration carries over.
    fn fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>>;

    /// Continue training from the current parameters on `batch`, keeping
    /// the feature statistics frozen at the original fit.
    fn warm_fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>>;

    /// Raw scores for row-major `features` (width = training width):
    /// predicted values for regression, signed margins for classification.
    fn predict(&self, features: &[f64]) -> Result<Vec<f64>>;

    /// Loss of this model on a batch: RMSE for regression, summed margin
    /// violations for classification.
    fn loss_on(&self, batch: &Batch) -> Result<f64>;

    /// Versioned parameter blob sufficient to rebuild this predictor.
    fn snapshot(&self) -> Snapshot;

    fn clone_box(&self) -> Box<dyn Predictor>;
}

impl Clone for Box<dyn Predictor> {
    fn clone(&self) -> Self {
        self.clone_box()
    }
}

/// Frozen per-feature standardization statistics, estimated once at fit
/// time and reused for every later transform so warm starts stay in the
/// same parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(features: &[f64], width: usize) -> Self {
        let rows = features.len() / width;
        let mut means = vec![0.0; width];
        for row in features.chunks_exact(width) {
            for (m, &v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= rows as f64;
        }
        let mut stds = vec![0.0; width];
        for row in features.chunks_exact(width) {
            for ((s, &v), &m) in stds.iter_mut().zip(row).zip(&means) {
                let d = v - m;
                *s += d * d;
            }
        }
        for s in &mut stds {
            *s = (*s / rows as f64).sqrt();
            // Constant columns stay centered at zero.
            if *s == 0.0 {
                *s = 1.0;
            }
        }
        Self { means, stds }
    }

    pub fn width(&self) -> usize {
        self.means.len()
    }

    pub fn transform(&self, features: &[f64]) -> Vec<f64> {
        let width = self.width();
        let mut out = Vec::with_capacity(features.len());
        for row in features.chunks_exact(width) {
            for ((&v, &m), &s) in row.iter().zip(&self.means).zip(&self.stds) {
                out.push((v - m) / s);
            }
        }
        out
    }
}

/// Versioned, JSON-serializable parameter blob for a predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub version: u32,
    pub schema_fingerprint: String,
    #[serde(flatten)]
    pub params: SnapshotParams,
}

pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum SnapshotParams {
    Regression {
        config: RegressionConfig,
        means: Vec<f64>,
        stds: Vec<f64>,
        weights: Vec<f64>,
        intercept: f64,
    },
    Classification {
        config: PerceptronConfig,
        means: Vec<f64>,
        stds: Vec<f64>,
        weights: Vec<f64>,
        intercept: f64,
        degenerate: bool,
    },
}

impl Snapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("snapshot serialization is total")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }
}

/// Rebuild a predictor from a snapshot taken under `schema`. Rejects
/// blobs written under a different schema or format version.
pub fn restore(snapshot: &Snapshot, schema: &Schema) -> Result<Box<dyn Predictor>> {
    if snapshot.version != SNAPSHOT_VERSION {
        return Err(Error::SnapshotVersion(snapshot.version));
    }
    if snapshot.schema_fingerprint != schema.fingerprint() {
        return Err(Error::SnapshotSchemaMismatch);
    }
    let feature_width = schema.width() - 1;
    match &snapshot.params {
        SnapshotParams::Regression {
            config,
            means,
            stds,
            weights,
            intercept,
        } => {
            if weights.len() != feature_width || means.len() != feature_width {
                return Err(Error::SnapshotSchemaMismatch);
            }
            Ok(Box::new(LinearRegressor::from_parts(
                config.clone(),
                snapshot.schema_fingerprint.clone(),
                Standardizer {
                    means: means.clone(),
                    stds: stds.clone(),
                },
                weights.clone(),
                *intercept,
            )))
        }
        SnapshotParams::Classification {
            config,
            means,
            stds,
            weights,
            intercept,
            degenerate,
        } => {
            if weights.len() != feature_width || means.len() != feature_width {
                return Err(Error::SnapshotSchemaMismatch);
            }
            Ok(Box::new(PerceptronClassifier::from_parts(
                config.clone(),
                snapshot.schema_fingerprint.clone(),
                Standardizer {
                    means: means.clone(),
                    stds: stds.clone(),
                },
                weights.clone(),
                *intercept,
                *degenerate,
            )))
        }
    }
}

/// Map a 0/1 target column onto the -1/+1 labels the perceptron works in.
pub(crate) fn signed_labels(targets: &[f64]) -> Vec<f64> {
    targets.iter().map(|&t| 2.0 * t - 1.0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{AttributeDef, Batch};
    use std::sync::Arc;

    fn regression_schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                AttributeDef::new("x", AttributeKind::Numeric),
                AttributeDef::new("y", AttributeKind::TargetNumeric),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn task_kind_follows_the_target() {
        let schema = regression_schema();
        assert_eq!(TaskKind::for_schema(&schema), TaskKind::Regression);
        let cls = Schema::new(vec![
            AttributeDef::new("x", AttributeKind::Numeric),
            AttributeDef::new("fault", AttributeKind::TargetBinary),
        ])
        .unwrap();
        assert_eq!(TaskKind::for_schema(&cls), TaskKind::Classification);
    }

    #[test]
    fn standardizer_centers_and_scales() {
        let features = [1.0, 10.0, 3.0, 30.0];
        let std = Standardizer::fit(&features, 2);
        let z = std.transform(&features);
        assert!((z[0] + 1.0).abs() < 1e-12);
        assert!((z[2] - 1.0).abs() < 1e-12);
        // Constant column handling.
        let flat = [5.0, 5.0, 5.0];
        let std = Standardizer::fit(&flat, 1);
        assert_eq!(std.transform(&flat), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn restore_rejects_wrong_schema_and_version() {
        let schema = regression_schema();
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 2.0 * i as f64]).collect();
        let batch = Batch::from_rows(Arc::clone(&schema), &rows).unwrap();
        let model = linreg_fit(&batch, RegressionConfig::default()).unwrap();
        let mut snapshot = model.snapshot();

        let other = Schema::new(vec![
            AttributeDef::new("other", AttributeKind::Numeric),
            AttributeDef::new("y", AttributeKind::TargetNumeric),
        ])
        .unwrap();
        assert!(matches!(
            restore(&snapshot, &other),
            Err(Error::SnapshotSchemaMismatch)
        ));

        snapshot.version = 99;
        assert!(matches!(
            restore(&snapshot, &schema),
            Err(Error::SnapshotVersion(99))
        ));
    }

    #[test]
    fn snapshot_json_round_trip_is_exact() {
        let schema = regression_schema();
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|i| vec![i as f64 / 3.0, 2.0 * i as f64 + 0.37])
            .collect();
        let batch = Batch::from_rows(Arc::clone(&schema), &rows).unwrap();
        let model = linreg_fit(&batch, RegressionConfig::default()).unwrap();
        let snapshot = model.snapshot();
        let parsed = Snapshot::from_json(&snapshot.to_json()).unwrap();
        assert_eq!(parsed, snapshot);

        let restored = restore(&parsed, &schema).unwrap();
        let probe = [0.123456789, -7.5, 42.0];
        let a = model.predict(&probe).unwrap();
        let b = restored.predict(&probe).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
