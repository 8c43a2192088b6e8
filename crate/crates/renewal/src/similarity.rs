//! Batch-to-batch similarity: a counting match rate for binary columns,
//! absolute Pearson correlation for numeric columns, and a delta-weighted
//! aggregate over the whole schema.
//!
//! All functions here are pure over immutable inputs. When the two windows
//! have different lengths they are aligned by truncating the longer one to
//! its most recent rows, matching the recency bias of drift watching.

use std::io::Write;

use crate::error::{Error, Result};
use crate::types::Batch;

/// Per-attribute similarity plus the delta-weighted aggregate.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityReport {
    pub per_attribute: Vec<AttributeSimilarity>,
    /// Delta-weighted mean of the used per-attribute similarities.
    pub aggregate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeSimilarity {
    pub name: String,
    pub similarity: f64,
    /// False when the attribute's delta is 0 and it was excluded from the
    /// aggregate.
    pub used: bool,
}

impl SimilarityReport {
    /// One CSV row per attribute plus a final aggregate row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "name,sim,used")?;
        for attr in &self.per_attribute {
            writeln!(w, "{},{},{}", attr.name, attr.similarity, attr.used)?;
        }
        writeln!(w, "aggregate,{},true", self.aggregate)?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Match rate of two equal-length binary vectors: the count of positions
/// where both are 0 plus the count where both are 1, over the length.
pub fn binary_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(Error::TooFewValues { needed: 1, got: 0 });
    }
    let mut matches = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        for v in [x, y] {
            if v != 0.0 && v != 1.0 {
                return Err(Error::NonBinaryEntry { value: v });
            }
        }
        if x == y {
            matches += 1;
        }
    }
    Ok(matches as f64 / a.len() as f64)
}

/// Absolute Pearson correlation of two equal-length numeric vectors.
///
/// Degenerate variance is resolved by the data, not by NaN: two constant
/// and equal vectors are perfectly similar (1.0); one constant vector, or
/// two constant but unequal ones, carry no measurable correlation (0.0).
pub fn numeric_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewValues {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cross = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let dx = x - mean_a;
        let dy = y - mean_b;
        cross += dx * dy;
        var_a += dx * dx;
        var_b += dy * dy;
    }
    if var_a == 0.0 || var_b == 0.0 {
        // Both constant: equal means identical data, unequal means none.
        if var_a == 0.0 && var_b == 0.0 && a[0] == b[0] {
            return Ok(1.0);
        }
        return Ok(0.0);
    }
    Ok((cross / (var_a * var_b).sqrt()).abs().min(1.0))
}

/// Whole-batch similarity between a reference window and an incoming one.
///
/// Each non-target attribute is compared with the measure its kind calls
/// for; deltas weight aggregation only, never selection. Windows of
/// unequal length are truncated to the most recent common length first.
pub fn batch_similarity(prev: &Batch, next: &Batch) -> Result<SimilarityReport> {
    if prev.schema() != next.schema() {
        return Err(Error::SchemaMismatch);
    }
    let aligned = prev.n_rows().min(next.n_rows());
    let schema = prev.schema();

    let mut per_attribute = Vec::new();
    let mut weighted = 0.0;
    let mut total_weight = 0.0;
    for idx in schema.feature_indices() {
        let attr = &schema.attributes()[idx];
        let a: Vec<f64> = prev.column_tail(idx, aligned).collect();
        let b: Vec<f64> = next.column_tail(idx, aligned).collect();
        let similarity = if attr.kind.is_binary_valued() {
            binary_similarity(&a, &b)?
        } else {
            numeric_similarity(&a, &b).map_err(|e| match e {
                Error::TooFewValues { .. } => Error::WindowTooShort {
                    name: attr.name.clone(),
                    rows: aligned,
                },
                other => other,
            })?
        };
        let used = attr.delta > 0.0;
        if used {
            weighted += attr.delta * similarity;
            total_weight += attr.delta;
        }
        per_attribute.push(AttributeSimilarity {
            name: attr.name.clone(),
            similarity,
            used,
        });
    }
    if total_weight == 0.0 {
        return Err(Error::AllWeightsZero);
    }
    Ok(SimilarityReport {
        per_attribute,
        aggregate: weighted / total_weight,
    })
}
