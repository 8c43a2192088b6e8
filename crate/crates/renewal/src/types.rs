//! Domain types shared by every stage of the pipeline: attribute schemas,
//! validated batches, decision thresholds, and the renewal flag.
//!
//! A [`Batch`] is the unit every other module operates on: a fixed-schema
//! window of rows where one column is the prediction target. Batches are
//! immutable after construction and safe to share across threads.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Value kind of a stream attribute.
///
/// The stream model distinguishes binary-coded columns from real-valued
/// ones because they use different similarity measures, and designates
/// exactly one column per schema as the prediction target.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    /// Feature column holding only 0 or 1.
    Binary,
    /// Real-valued feature column.
    Numeric,
    /// Real-valued prediction target (regression streams).
    TargetNumeric,
    /// Binary prediction target (classification streams).
    TargetBinary,
}

impl AttributeKind {
    pub fn is_target(self) -> bool {
        matches!(self, Self::TargetNumeric | Self::TargetBinary)
    }

    /// Whether values in this column must be exactly 0 or 1.
    pub fn is_binary_valued(self) -> bool {
        matches!(self, Self::Binary | Self::TargetBinary)
    }
}

/// One column of a stream: a name, a value kind, and an inclusion weight.
///
/// The weight (`delta`) only scales the attribute's share of the aggregate
/// similarity; a weight of 0 excludes it from aggregation entirely but
/// never from per-attribute computation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeDef {
    pub name: String,
    pub kind: AttributeKind,
    pub delta: f64,
}

impl AttributeDef {
    /// New attribute with the default inclusion weight of 1.
    pub fn new(name: impl Into<String>, kind: AttributeKind) -> Self {
        Self {
            name: name.into(),
            kind,
            delta: 1.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }
}

/// Ordered attribute layout shared by every batch of a stream.
///
/// Invariants, enforced at construction and on deserialization:
/// - attribute names are unique,
/// - exactly one attribute is the target,
/// - every delta lies in `[0, 1]`,
/// - at least one non-target attribute has delta > 0.
#[derive(Clone, Debug)]
pub struct Schema {
    attributes: Vec<AttributeDef>,
    target_index: usize,
    fingerprint: String,
}

impl Schema {
    pub fn new(attributes: Vec<AttributeDef>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Schema("schema has no attributes".into()));
        }
        let mut names = HashSet::new();
        for attr in &attributes {
            if !names.insert(attr.name.as_str()) {
                return Err(Error::Schema(format!(
                    "duplicate attribute name '{}'",
                    attr.name
                )));
            }
            if !attr.delta.is_finite() || !(0.0..=1.0).contains(&attr.delta) {
                return Err(Error::Schema(format!(
                    "attribute '{}' has delta {} outside [0, 1]",
                    attr.name, attr.delta
                )));
            }
        }
        let targets: Vec<usize> = attributes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.kind.is_target())
            .map(|(i, _)| i)
            .collect();
        let target_index = match targets.as_slice() {
            [single] => *single,
            [] => return Err(Error::Schema("schema has no target attribute".into())),
            _ => {
                return Err(Error::Schema(format!(
                    "schema has {} target attributes, expected exactly one",
                    targets.len()
                )))
            }
        };
        if !attributes
            .iter()
            .any(|a| !a.kind.is_target() && a.delta > 0.0)
        {
            return Err(Error::Schema(
                "at least one non-target attribute must have delta > 0".into(),
            ));
        }
        let fingerprint = fingerprint_of(&attributes);
        Ok(Self {
            attributes,
            target_index,
            fingerprint,
        })
    }

    /// Build a schema from a CSV header row plus a sidecar map of
    /// per-attribute definitions. Column order comes from the header.
    pub fn from_sidecar(header: &[String], sidecar: &SchemaSidecar) -> Result<Self> {
        let mut attributes = Vec::with_capacity(header.len());
        for name in header {
            let entry = sidecar
                .entries
                .get(name)
                .ok_or_else(|| Error::MissingSidecarEntry { name: name.clone() })?;
            attributes.push(AttributeDef {
                name: name.clone(),
                kind: entry.kind,
                delta: entry.delta,
            });
        }
        Self::new(attributes)
    }

    pub fn attributes(&self) -> &[AttributeDef] {
        &self.attributes
    }

    /// Number of attributes (columns), including the target.
    pub fn width(&self) -> usize {
        self.attributes.len()
    }

    pub fn target_index(&self) -> usize {
        self.target_index
    }

    pub fn target(&self) -> &AttributeDef {
        &self.attributes[self.target_index]
    }

    /// Indices of all non-target attributes, in schema order.
    pub fn feature_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.attributes.len()).filter(move |&i| i != self.target_index)
    }

    /// Stable content hash used to pair models with the schema they were
    /// fitted under.
    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.attributes == other.attributes
    }
}

impl Serialize for Schema {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.attributes.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Schema {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let attributes = Vec::<AttributeDef>::deserialize(deserializer)?;
        Schema::new(attributes).map_err(D::Error::custom)
    }
}

fn fingerprint_of(attributes: &[AttributeDef]) -> String {
    let canonical = serde_json::to_string(attributes).expect("attribute serialization is total");
    let digest = Sha256::digest(canonical.as_bytes());
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Sidecar file contents: attribute name -> kind and delta.
///
/// Serialized as a JSON object so it can sit next to a CSV file; the CSV
/// header supplies the column order.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemaSidecar {
    pub entries: std::collections::BTreeMap<String, SidecarEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SidecarEntry {
    pub kind: AttributeKind,
    #[serde(default = "default_delta")]
    pub delta: f64,
}

fn default_delta() -> f64 {
    1.0
}

impl SchemaSidecar {
    pub fn from_schema(schema: &Schema) -> Self {
        let entries = schema
            .attributes()
            .iter()
            .map(|a| {
                (
                    a.name.clone(),
                    SidecarEntry {
                        kind: a.kind,
                        delta: a.delta,
                    },
                )
            })
            .collect();
        Self { entries }
    }
}

/// A fixed-schema window of rows: the unit of similarity, loss, and
/// renewal decisions. Row order is preserved from the input; values are
/// stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    schema: Arc<Schema>,
    values: Vec<f64>,
    n_rows: usize,
    timestamps: Option<Vec<f64>>,
}

impl Batch {
    /// Validate a row matrix against a schema and build a batch.
    ///
    /// Rejects empty input, rows of the wrong width, non-finite values,
    /// and values other than 0/1 in binary columns. Row `i` of the input
    /// becomes row `i` of the batch.
    pub fn from_rows(schema: Arc<Schema>, rows: &[Vec<f64>]) -> Result<Self> {
        let width = schema.width();
        let mut values = Vec::with_capacity(rows.len() * width);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::RowWidth {
                    row: i,
                    got: row.len(),
                    expected: width,
                });
            }
            values.extend_from_slice(row);
        }
        Self::from_flat(schema, values)
    }

    /// Build a batch from row-major flat storage (length must be a
    /// multiple of the schema width).
    pub fn from_flat(schema: Arc<Schema>, values: Vec<f64>) -> Result<Self> {
        let width = schema.width();
        if values.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if values.len() % width != 0 {
            return Err(Error::RowWidth {
                row: values.len() / width,
                got: values.len() % width,
                expected: width,
            });
        }
        let n_rows = values.len() / width;
        for (pos, &value) in values.iter().enumerate() {
            let (row, col) = (pos / width, pos % width);
            let attr = &schema.attributes()[col];
            if !value.is_finite() {
                return Err(Error::NonFiniteValue {
                    name: attr.name.clone(),
                    row,
                });
            }
            if attr.kind.is_binary_valued() && value != 0.0 && value != 1.0 {
                return Err(Error::NonBinaryValue {
                    name: attr.name.clone(),
                    row,
                    value,
                });
            }
        }
        Ok(Self {
            schema,
            values,
            n_rows,
            timestamps: None,
        })
    }

    /// Attach optional per-row timestamps. They are metadata only and
    /// never enter any computation; they must be non-decreasing.
    pub fn with_timestamps(mut self, timestamps: Vec<f64>) -> Result<Self> {
        if timestamps.len() != self.n_rows {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: self.n_rows,
            });
        }
        for i in 1..timestamps.len() {
            if timestamps[i] < timestamps[i - 1] {
                return Err(Error::TimestampOrder { row: i });
            }
        }
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn width(&self) -> usize {
        self.schema.width()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.width();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.width())
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width() + col]
    }

    /// Values of column `col`, oldest row first.
    pub fn column(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        let w = self.width();
        self.values.iter().skip(col).step_by(w).copied()
    }

    /// The most recent `k` values of column `col`.
    pub fn column_tail(&self, col: usize, k: usize) -> impl Iterator<Item = f64> + '_ {
        let skip = self.n_rows - k;
        self.column(col).skip(skip)
    }

    /// Non-target columns flattened row-major, plus the feature width.
    pub fn feature_rows(&self) -> (Vec<f64>, usize) {
        let feature_width = self.width() - 1;
        let mut features = Vec::with_capacity(self.n_rows * feature_width);
        let target = self.schema.target_index();
        for row in self.rows() {
            for (col, &v) in row.iter().enumerate() {
                if col != target {
                    features.push(v);
                }
            }
        }
        (features, feature_width)
    }

    /// The target column, oldest row first.
    pub fn targets(&self) -> Vec<f64> {
        self.column(self.schema.target_index()).collect()
    }

    pub fn timestamps(&self) -> Option<&[f64]> {
        self.timestamps.as_deref()
    }

    /// Concatenate two batches of the same schema, `self` first.
    pub fn concat(&self, other: &Batch) -> Result<Batch> {
        if self.schema.as_ref() != other.schema.as_ref() {
            return Err(Error::SchemaMismatch);
        }
        let mut values = Vec::with_capacity(self.values.len() + other.values.len());
        values.extend_from_slice(&self.values);
        values.extend_from_slice(&other.values);
        Batch::from_flat(Arc::clone(&self.schema), values)
    }
}

/// Decision thresholds for the renewal policy.
///
/// `similarity` is the gate below which loss change is consulted;
/// `lc_low`/`lc_high` split the loss-change axis into retain / update /
/// retrain bands; `min_rows` is the number of rows a pending window must
/// accumulate before any decision fires.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub similarity: f64,
    pub lc_low: f64,
    pub lc_high: f64,
    pub min_rows: usize,
}

impl Thresholds {
    pub fn new(similarity: f64, lc_low: f64, lc_high: f64, min_rows: usize) -> Result<Self> {
        if !similarity.is_finite() || !(similarity > 0.0 && similarity < 1.0) {
            return Err(Error::InvalidThresholds(format!(
                "similarity threshold must lie in (0, 1), got {similarity}"
            )));
        }
        if !lc_low.is_finite() || lc_low <= 0.0 {
            return Err(Error::InvalidThresholds(format!(
                "lower loss-change bound must be positive, got {lc_low}"
            )));
        }
        if !lc_high.is_finite() || lc_high <= lc_low {
            return Err(Error::InvalidThresholds(format!(
                "upper loss-change bound must exceed the lower bound, got {lc_high} <= {lc_low}"
            )));
        }
        if min_rows == 0 {
            return Err(Error::InvalidThresholds(
                "minimum row count must be at least 1".into(),
            ));
        }
        Ok(Self {
            similarity,
            lc_low,
            lc_high,
            min_rows,
        })
    }
}

impl Default for Thresholds {
    /// Tuned defaults: similarity 0.5, loss-change band 0.3/0.9, 10000
    /// rows per decision window.
    fn default() -> Self {
        Self {
            similarity: 0.5,
            lc_low: 0.3,
            lc_high: 0.9,
            min_rows: 10_000,
        }
    }
}

impl<'de> Deserialize<'de> for Thresholds {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            similarity: f64,
            lc_low: f64,
            lc_high: f64,
            min_rows: usize,
        }
        let raw = Raw::deserialize(deserializer)?;
        Thresholds::new(raw.similarity, raw.lc_low, raw.lc_high, raw.min_rows)
            .map_err(D::Error::custom)
    }
}

/// Three-valued renewal decision. The numeric codes are part of the
/// output contract: 0 retain, 1 update, 2 retrain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenewalFlag {
    Retain,
    Update,
    Retrain,
}

impl RenewalFlag {
    pub fn code(self) -> u8 {
        match self {
            Self::Retain => 0,
            Self::Update => 1,
            Self::Retrain => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Self::Retain),
            1 => Some(Self::Update),
            2 => Some(Self::Retrain),
            _ => None,
        }
    }
}

impl fmt::Display for RenewalFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Self::Retain => "retain",
            Self::Update => "update",
            Self::Retrain => "retrain",
        };
        f.write_str(name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_column_schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                AttributeDef::new("flag", AttributeKind::Binary),
                AttributeDef::new("yield", AttributeKind::TargetNumeric),
            ])
            .unwrap(),
        )
    }

    #[test]
    fn valid_batch_passes_validation() {
        let schema = two_column_schema();
        let batch = Batch::from_rows(schema, &[vec![1.0, 3.5], vec![0.0, 4.0]]).unwrap();
        assert_eq!(batch.n_rows(), 2);
        assert_eq!(batch.row(0), &[1.0, 3.5]);
        assert_eq!(batch.row(1), &[0.0, 4.0]);
    }

    #[test]
    fn non_binary_value_is_rejected() {
        let schema = two_column_schema();
        let err = Batch::from_rows(schema, &[vec![0.5, 3.5]]).unwrap_err();
        assert!(matches!(err, Error::NonBinaryValue { value, .. } if value == 0.5));
    }

    #[test]
    fn empty_input_is_rejected() {
        let schema = two_column_schema();
        assert!(matches!(
            Batch::from_rows(schema, &[]),
            Err(Error::EmptyBatch)
        ));
    }

    #[test]
    fn row_width_mismatch_is_rejected() {
        let schema = two_column_schema();
        let err = Batch::from_rows(schema, &[vec![1.0, 2.0, 3.0]]).unwrap_err();
        assert!(matches!(
            err,
            Error::RowWidth {
                row: 0,
                got: 3,
                expected: 2
            }
        ));
    }

    #[test]
    fn non_finite_values_are_rejected() {
        let schema = two_column_schema();
        let err = Batch::from_rows(schema, &[vec![1.0, f64::NAN]]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteValue { row: 0, .. }));
    }

    #[test]
    fn batch_preserves_row_order() {
        let schema = two_column_schema();
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![(i % 2) as f64, i as f64]).collect();
        let batch = Batch::from_rows(schema, &rows).unwrap();
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(batch.row(i), row.as_slice());
        }
    }

    #[test]
    fn schema_requires_exactly_one_target() {
        let no_target = Schema::new(vec![AttributeDef::new("a", AttributeKind::Numeric)]);
        assert!(no_target.is_err());
        let two_targets = Schema::new(vec![
            AttributeDef::new("a", AttributeKind::TargetNumeric),
            AttributeDef::new("b", AttributeKind::TargetBinary),
        ]);
        assert!(two_targets.is_err());
    }

    #[test]
    fn schema_rejects_duplicate_names_and_bad_deltas() {
        let dup = Schema::new(vec![
            AttributeDef::new("a", AttributeKind::Numeric),
            AttributeDef::new("a", AttributeKind::TargetNumeric),
        ]);
        assert!(dup.is_err());
        let bad_delta = Schema::new(vec![
            AttributeDef::new("a", AttributeKind::Numeric).with_delta(1.5),
            AttributeDef::new("y", AttributeKind::TargetNumeric),
        ]);
        assert!(bad_delta.is_err());
    }

    #[test]
    fn schema_requires_a_usable_feature() {
        let all_masked = Schema::new(vec![
            AttributeDef::new("a", AttributeKind::Numeric).with_delta(0.0),
            AttributeDef::new("y", AttributeKind::TargetNumeric),
        ]);
        assert!(all_masked.is_err());
    }

    #[test]
    fn timestamps_must_be_monotone() {
        let schema = two_column_schema();
        let batch = Batch::from_rows(schema, &[vec![1.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(batch.clone().with_timestamps(vec![1.0, 1.0]).is_ok());
        assert!(matches!(
            batch.with_timestamps(vec![2.0, 1.0]),
            Err(Error::TimestampOrder { row: 1 })
        ));
    }

    #[test]
    fn sidecar_round_trip_preserves_schema() {
        let schema = Schema::new(vec![
            AttributeDef::new("pressure", AttributeKind::Numeric).with_delta(0.5),
            AttributeDef::new("valve", AttributeKind::Binary),
            AttributeDef::new("yield", AttributeKind::TargetNumeric),
        ])
        .unwrap();
        let sidecar = SchemaSidecar::from_schema(&schema);
        let json = serde_json::to_string(&sidecar).unwrap();
        let parsed: SchemaSidecar = serde_json::from_str(&json).unwrap();
        let header: Vec<String> = schema
            .attributes()
            .iter()
            .map(|a| a.name.clone())
            .collect();
        let rebuilt = Schema::from_sidecar(&header, &parsed).unwrap();
        assert_eq!(rebuilt, schema);
        assert_eq!(rebuilt.fingerprint(), schema.fingerprint());
    }

    #[test]
    fn sidecar_missing_column_names_the_offender() {
        let sidecar = SchemaSidecar::default();
        let err = Schema::from_sidecar(&["pressure".to_string()], &sidecar).unwrap_err();
        assert!(matches!(err, Error::MissingSidecarEntry { name } if name == "pressure"));
    }

    #[test]
    fn thresholds_validate_bounds() {
        assert!(Thresholds::new(0.5, 0.3, 0.9, 10).is_ok());
        assert!(Thresholds::new(0.0, 0.3, 0.9, 10).is_err());
        assert!(Thresholds::new(1.0, 0.3, 0.9, 10).is_err());
        assert!(Thresholds::new(0.5, 0.9, 0.3, 10).is_err());
        assert!(Thresholds::new(0.5, 0.3, 0.9, 0).is_err());
        assert!(Thresholds::new(0.5, -0.1, 0.9, 10).is_err());
    }

    #[test]
    fn flag_codes_are_stable() {
        assert_eq!(RenewalFlag::Retain.code(), 0);
        assert_eq!(RenewalFlag::Update.code(), 1);
        assert_eq!(RenewalFlag::Retrain.code(), 2);
        for code in 0..3 {
            assert_eq!(RenewalFlag::from_code(code).unwrap().code(), code);
        }
        assert!(RenewalFlag::from_code(3).is_none());
    }

    #[test]
    fn concat_appends_rows_in_order() {
        let schema = two_column_schema();
        let a = Batch::from_rows(Arc::clone(&schema), &[vec![1.0, 1.0]]).unwrap();
        let b = Batch::from_rows(schema, &[vec![0.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let joined = a.concat(&b).unwrap();
        assert_eq!(joined.n_rows(), 3);
        assert_eq!(joined.row(0), &[1.0, 1.0]);
        assert_eq!(joined.row(2), &[1.0, 3.0]);
    }

    #[test]
    fn column_tail_yields_most_recent_rows() {
        let schema = two_column_schema();
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![0.0, i as f64]).collect();
        let batch = Batch::from_rows(schema, &rows).unwrap();
        let tail: Vec<f64> = batch.column_tail(1, 2).collect();
        assert_eq!(tail, vec![3.0, 4.0]);
    }
}
