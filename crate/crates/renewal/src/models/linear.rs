//! Ridge-regularized linear regressor trained by full-batch gradient
//! descent over standardized features.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Predictor, Snapshot, SnapshotParams, Standardizer, TaskKind, SNAPSHOT_VERSION};
use crate::error::{Error, Result};
use crate::loss::rmse;
use crate::types::{AttributeKind, Batch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    /// Ridge weight on the squared norm of the weights (the intercept is
    /// not penalized).
    pub ridge: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        Self {
            ridge: 1e-3,
            learning_rate: 0.1,
            epochs: 300,
            seed: 0,
        }
    }
}

impl RegressionConfig {
    fn validate(&self) -> Result<()> {
        if !(self.ridge.is_finite() && self.ridge >= 0.0) {
            return Err(Error::Config(format!(
                "ridge weight must be non-negative, got {}",
                self.ridge
            )));
        }
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
pub struct LinearRegressor {
    config: RegressionConfig,
    schema_fingerprint: String,
    standardizer: Standardizer,
    weights: Vec<f64>,
    intercept: f64,
    objective_trace: Vec<f64>,
}

/// Fit a fresh regressor on `batch` by minimizing the regularized squared
/// error with full-batch gradient descent.
pub fn linreg_fit(batch: &Batch, config: RegressionConfig) -> Result<LinearRegressor> {
    config.validate()?;
    check_regression_batch(batch)?;
    let (features, width) = batch.feature_rows();
    let targets = batch.targets();
    check_degeneracy(&features, width, &targets)?;

    let standardizer = Standardizer::fit(&features, width);
    let z = standardizer.transform(&features);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut weights: Vec<f64> = (0..width).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut intercept = 0.0;
    let trace = descend(&config, &z, width, &targets, &mut weights, &mut intercept)?;

    Ok(LinearRegressor {
        config,
        schema_fingerprint: batch.schema().fingerprint().to_string(),
        standardizer,
        weights,
        intercept,
        objective_trace: trace,
    })
}

fn check_regression_batch(batch: &Batch) -> Result<()> {
    if batch.schema().target().kind != AttributeKind::TargetNumeric {
        return Err(Error::Schema(
            "regression requires a numeric target column".into(),
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

fn check_degeneracy(features: &[f64], width: usize, targets: &[f64]) -> Result<()> {
    let mut rows = features.chunks_exact(width);
    let first = rows.next().expect("checked non-empty");
    if rows.all(|r| r == first) && targets.iter().any(|&t| t != targets[0]) {
        return Err(Error::DegenerateTraining(
            "all feature rows are identical but targets conflict".into(),
        ));
    }
    Ok(())
}

fn descend(
    config: &RegressionConfig,
    z: &[f64],
    width: usize,
    targets: &[f64],
    weights: &mut [f64],
    intercept: &mut f64,
) -> Result<Vec<f64>> {
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let (grad_w, grad_b) = ridge_gradient(weights, *intercept, z, width, targets, config.ridge);
        for (w, g) in weights.iter_mut().zip(&grad_w) {
            *w -= config.learning_rate * g;
        }
        *intercept -= config.learning_rate * grad_b;
        let objective = ridge_objective(weights, *intercept, z, width, targets, config.ridge);
        if !objective.is_finite() {
            return Err(Error::TrainingDiverged);
        }
        trace.push(objective);
    }
    Ok(trace)
}

/// Mean squared error plus the ridge penalty, over standardized features.
pub(crate) fn ridge_objective(
    weights: &[f64],
    intercept: f64,
    z: &[f64],
    width: usize,
    targets: &[f64],
    ridge: f64,
) -> f64 {
    let n = targets.len() as f64;
    let mut sum_sq = 0.0;
    for (row, &y) in z.chunks_exact(width).zip(targets) {
        let pred: f64 = row.iter().zip(weights).map(|(&v, &w)| v * w).sum::<f64>() + intercept;
        let r = pred - y;
        sum_sq += r * r;
    }
    let penalty: f64 = weights.iter().map(|w| w * w).sum();
    sum_sq / n + ridge * penalty
}

pub(crate) fn ridge_gradient(
    weights: &[f64],
    intercept: f64,
    z: &[f64],
    width: usize,
    targets: &[f64],
    ridge: f64,
) -> (Vec<f64>, f64) {
    let n = targets.len() as f64;
    let mut grad_w = vec![0.0; width];
    let mut grad_b = 0.0;
    for (row, &y) in z.chunks_exact(width).zip(targets) {
        let pred: f64 = row.iter().zip(weights).map(|(&v, &w)| v * w).sum::<f64>() + intercept;
        let r = pred - y;
        for (g, &v) in grad_w.iter_mut().zip(row) {
            *g += r * v;
        }
        grad_b += r;
    }
    for (g, &w) in grad_w.iter_mut().zip(weights) {
        *g = 2.0 * *g / n + 2.0 * ridge * w;
    }
    (grad_w, 2.0 * grad_b / n)
}

impl LinearRegressor {
    pub(crate) fn from_parts(
        config: RegressionConfig,
        schema_fingerprint: String,
        standardizer: Standardizer,
        weights: Vec<f64>,
        intercept: f64,
    ) -> Self {
        Self {
            config,
            schema_fingerprint,
            standardizer,
            weights,
            intercept,
            objective_trace: Vec::new(),
        }
    }

    /// Coefficients mapped back to the original (unstandardized) feature
    /// space: `(weights, intercept)`.
    pub fn coefficients(&self) -> (Vec<f64>, f64) {
        let mut weights = Vec::with_capacity(self.weights.len());
        let mut intercept = self.intercept;
        for ((&w, &m), &s) in self
            .weights
            .iter()
            .zip(&self.standardizer.means)
            .zip(&self.standardizer.stds)
        {
            let orig = w / s;
            weights.push(orig);
            intercept -= orig * m;
        }
        (weights, intercept)
    }

    /// Per-epoch objective values from the most recent fit.
    pub fn objective_trace(&self) -> &[f64] {
        &self.objective_trace
    }

    /// Final training objective of the most recent fit.
    pub fn training_loss(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }

    fn check_batch_schema(&self, batch: &Batch) -> Result<()> {
        if batch.schema().fingerprint() != self.schema_fingerprint {
            return Err(Error::ModelSchemaMismatch);
        }
        Ok(())
    }
}

impl Predictor for LinearRegressor {
    fn task(&self) -> TaskKind {
        TaskKind::Regression
    }

    fn fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>> {
        Ok(Box::new(linreg_fit(batch, self.config.clone())?))
    }

    fn warm_fit(&self, batch: &Batch) -> Result<Box<dyn Predictor>> {
        self.check_batch_schema(batch)?;
        check_regression_batch(batch)?;
        let (features, width) = batch.feature_rows();
        let targets = batch.targets();
        check_degeneracy(&features, width, &targets)?;

        let z = self.standardizer.transform(&features);
        let mut weights = self.weights.clone();
        let mut intercept = self.intercept;
        let trace = descend(&self.config, &z, width, &targets, &mut weights, &mut intercept)?;
        Ok(Box::new(LinearRegressor {
            config: self.config.clone(),
            schema_fingerprint: self.schema_fingerprint.clone(),
            standardizer: self.standardizer.clone(),
            weights,
            intercept,
            objective_trace: trace,
        }))
    }

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
        let predictions = self.predict(&features)?;
        rmse(&predictions, &batch.targets())
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot {
            version: SNAPSHOT_VERSION,
            schema_fingerprint: self.schema_fingerprint.clone(),
            params: SnapshotParams::Regression {
                config: self.config.clone(),
                means: self.standardizer.means.clone(),
                stds: self.standardizer.stds.clone(),
                weights: self.weights.clone(),
                intercept: self.intercept,
            },
        }
    }

    fn clone_box(&self) -> Box<dyn Predictor> {
        Box::new(self.clone())
    }
}
