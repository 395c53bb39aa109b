//! Deal records, CSV ingestion and feature encoding.
//!
//! A [`DealRecord`] carries six raw pricing features plus the price target and
//! the client group used for leakage-free splitting. Models never see raw
//! records; they consume the 8-column encoding produced by
//! [`encode_features`] (or a reduced [`FeatureSet`] for ablations).

mod generator;
mod summary;

pub use generator::{
    generate_synthetic, generate_with_groups, AdditivePricing, GeneratorSpec, GroupStructure,
    LatentPricing, Moments, MultiplicativePricing, TechShares, TechValues,
};
pub use summary::{summarize, ColumnSummary, DatasetSummary};

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Canonical header of the deal CSV format.
pub const CSV_HEADER: [&str; 11] = [
    "record_id",
    "client_group",
    "industry",
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_stack",
    "price",
    "provenance",
];

/// Canonical encoded column order.
pub const FEATURE_NAMES: [&str; 8] = [
    "client_revenue",
    "est_duration_weeks",
    "pain_severity_score",
    "integration_complexity",
    "phase",
    "tech_no_code",
    "tech_low_code",
    "tech_custom",
];

pub const PAIN_RANGE: (i64, i64) = (1, 5);
pub const COMPLEXITY_RANGE: (i64, i64) = (1, 5);
pub const PHASE_RANGE: (i64, i64) = (1, 4);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("{field} = {value} is outside the valid range [{min}, {max}]")]
    OutOfRange {
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("{field} must be a positive finite number, got {value}")]
    NotPositive { field: &'static str, value: f64 },
    #[error("unknown tech_stack {0:?}; valid values are no_code, low_code, custom")]
    UnknownTechStack(String),
    #[error("unknown provenance {0:?}; valid values are real, synthetic")]
    UnknownProvenance(String),
    #[error("unknown feature {0:?}; valid raw features are client_revenue, est_duration_weeks, pain_severity_score, integration_complexity, phase, tech_stack")]
    UnknownFeature(String),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: {source}")]
    Row { row: usize, source: FeatureError },
    #[error("row {row}: cannot parse {column} value {value:?}")]
    Parse {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("duplicate record_id {0:?}")]
    DuplicateId(String),
    #[error("client_group {0:?} is shared by real and synthetic records")]
    MixedProvenanceGroup(String),
    #[error("dataset is empty")]
    Empty,
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TechStack {
    NoCode,
    LowCode,
    Custom,
}

impl TechStack {
    pub const ALL: [TechStack; 3] = [TechStack::NoCode, TechStack::LowCode, TechStack::Custom];

    pub fn as_str(self) -> &'static str {
        match self {
            TechStack::NoCode => "no_code",
            TechStack::LowCode => "low_code",
            TechStack::Custom => "custom",
        }
    }

    /// Position of this value inside the one-hot block.
    pub fn index(self) -> usize {
        match self {
            TechStack::NoCode => 0,
            TechStack::LowCode => 1,
            TechStack::Custom => 2,
        }
    }
}

impl FromStr for TechStack {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_code" => Ok(TechStack::NoCode),
            "low_code" => Ok(TechStack::LowCode),
            "custom" => Ok(TechStack::Custom),
            other => Err(FeatureError::UnknownTechStack(other.to_string())),
        }
    }
}

impl fmt::Display for TechStack {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Real,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Real => "real",
            Provenance::Synthetic => "synthetic",
        }
    }
}

impl FromStr for Provenance {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "real" => Ok(Provenance::Real),
            "synthetic" => Ok(Provenance::Synthetic),
            other => Err(FeatureError::UnknownProvenance(other.to_string())),
        }
    }
}

/// The six model inputs before encoding.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawFeatures {
    pub client_revenue: f64,
    pub est_duration_weeks: u32,
    pub pain_severity_score: u8,
    pub integration_complexity: u8,
    pub phase: u8,
    pub tech_stack: TechStack,
}

fn check_range(field: &'static str, value: i64, (min, max): (i64, i64)) -> Result<(), FeatureError> {
    if value < min || value > max {
        return Err(FeatureError::OutOfRange {
            field,
            value: value as f64,
            min: min as f64,
            max: max as f64,
        });
    }
    Ok(())
}

impl RawFeatures {
    pub fn validate(&self) -> Result<(), FeatureError> {
        if !(self.client_revenue.is_finite() && self.client_revenue > 0.0) {
            return Err(FeatureError::NotPositive {
                field: "client_revenue",
                value: self.client_revenue,
            });
        }
        if self.est_duration_weeks < 1 {
            return Err(FeatureError::OutOfRange {
                field: "est_duration_weeks",
                value: 0.0,
                min: 1.0,
                max: f64::INFINITY,
            });
        }
        check_range("pain_severity_score", self.pain_severity_score.into(), PAIN_RANGE)?;
        check_range(
            "integration_complexity",
            self.integration_complexity.into(),
            COMPLEXITY_RANGE,
        )?;
        check_range("phase", self.phase.into(), PHASE_RANGE)?;
        Ok(())
    }

    /// Numeric value of one raw feature; tech_stack maps to its one-hot index.
    pub fn get(&self, feature: RawFeature) -> f64 {
        match feature {
            RawFeature::ClientRevenue => self.client_revenue,
            RawFeature::EstDurationWeeks => self.est_duration_weeks as f64,
            RawFeature::PainSeverityScore => self.pain_severity_score as f64,
            RawFeature::IntegrationComplexity => self.integration_complexity as f64,
            RawFeature::Phase => self.phase as f64,
            RawFeature::TechStack => self.tech_stack.index() as f64,
        }
    }
}

/// One training example.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DealRecord {
    pub record_id: String,
    pub client_group: String,
    pub industry: String,
    pub client_revenue: f64,
    pub est_duration_weeks: u32,
    pub pain_severity_score: u8,
    pub integration_complexity: u8,
    pub phase: u8,
    pub tech_stack: TechStack,
    pub price: f64,
    pub provenance: Provenance,
}

impl DealRecord {
    pub fn features(&self) -> RawFeatures {
        RawFeatures {
            client_revenue: self.client_revenue,
            est_duration_weeks: self.est_duration_weeks,
            pain_severity_score: self.pain_severity_score,
            integration_complexity: self.integration_complexity,
            phase: self.phase,
            tech_stack: self.tech_stack,
        }
    }

    pub fn validate(&self) -> Result<(), FeatureError> {
        self.features().validate()?;
        if !(self.price.is_finite() && self.price > 0.0) {
            return Err(FeatureError::NotPositive {
                field: "price",
                value: self.price,
            });
        }
        Ok(())
    }
}

/// The 8-column encoded model input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: [f64; 8],
}

impl FeatureVector {
    pub fn names() -> &'static [&'static str; 8] {
        &FEATURE_NAMES
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Validate and encode raw features in canonical column order.
///
/// Numeric features pass through unscaled; tech_stack becomes a one-hot block.
pub fn encode_features(raw: &RawFeatures) -> Result<FeatureVector, FeatureError> {
    raw.validate()?;
    let mut values = [0.0; 8];
    values[0] = raw.client_revenue;
    values[1] = raw.est_duration_weeks as f64;
    values[2] = raw.pain_severity_score as f64;
    values[3] = raw.integration_complexity as f64;
    values[4] = raw.phase as f64;
    values[5 + raw.tech_stack.index()] = 1.0;
    Ok(FeatureVector { values })
}

/// The raw (pre-encoding) features, in canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RawFeature {
    ClientRevenue,
    EstDurationWeeks,
    PainSeverityScore,
    IntegrationComplexity,
    Phase,
    TechStack,
}

impl RawFeature {
    pub const ALL: [RawFeature; 6] = [
        RawFeature::ClientRevenue,
        RawFeature::EstDurationWeeks,
        RawFeature::PainSeverityScore,
        RawFeature::IntegrationComplexity,
        RawFeature::Phase,
        RawFeature::TechStack,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RawFeature::ClientRevenue => "client_revenue",
            RawFeature::EstDurationWeeks => "est_duration_weeks",
            RawFeature::PainSeverityScore => "pain_severity_score",
            RawFeature::IntegrationComplexity => "integration_complexity",
            RawFeature::Phase => "phase",
            RawFeature::TechStack => "tech_stack",
        }
    }

    /// Encoded column positions owned by this raw feature.
    pub fn columns(self) -> &'static [usize] {
        match self {
            RawFeature::ClientRevenue => &[0],
            RawFeature::EstDurationWeeks => &[1],
            RawFeature::PainSeverityScore => &[2],
            RawFeature::IntegrationComplexity => &[3],
            RawFeature::Phase => &[4],
            RawFeature::TechStack => &[5, 6, 7],
        }
    }
}

impl FromStr for RawFeature {
    type Err = FeatureError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RawFeature::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

impl fmt::Display for RawFeature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A subset of encoded columns, used to train ablated models.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSet {
    columns: Vec<usize>,
}

impl Default for FeatureSet {
    fn default() -> Self {
        FeatureSet {
            columns: (0..FEATURE_NAMES.len()).collect(),
        }
    }
}

impl FeatureSet {
    pub fn full() -> Self {
        Self::default()
    }

    /// All columns except those owned by `feature`.
    pub fn without(feature: RawFeature) -> Self {
        let dropped = feature.columns();
        FeatureSet {
            columns: (0..FEATURE_NAMES.len())
                .filter(|c| !dropped.contains(c))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.columns
            .iter()
            .map(|&c| FEATURE_NAMES[c].to_string())
            .collect()
    }

    pub fn project(&self, full: &FeatureVector) -> Vec<f64> {
        self.columns.iter().map(|&c| full.values[c]).collect()
    }
}

/// Ordered collection of deal records with unique ids.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<DealRecord>,
}

impl Dataset {
    pub fn new(records: Vec<DealRecord>) -> Result<Self, DatasetError> {
        for (i, r) in records.iter().enumerate() {
            r.validate()
                .map_err(|source| DatasetError::Row { row: i + 1, source })?;
        }
        check_unique_ids(&records)?;
        check_provenance_groups(&records)?;
        Ok(Dataset { records })
    }

    pub fn records(&self) -> &[DealRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn targets(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.price).collect()
    }

    pub fn target_mean(&self) -> Option<f64> {
        if self.records.is_empty() {
            return None;
        }
        Some(self.records.iter().map(|r| r.price).sum::<f64>() / self.records.len() as f64)
    }

    pub fn groups(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.client_group.as_str()).collect()
    }

    pub fn distinct_groups(&self) -> usize {
        self.records
            .iter()
            .map(|r| r.client_group.as_str())
            .collect::<HashSet<_>>()
            .len()
    }

    /// Encoded design matrix restricted to `features`.
    pub fn design_matrix(&self, features: &FeatureSet) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| {
                let full = encode_features(&r.features()).expect("records are validated on construction");
                features.project(&full)
            })
            .collect()
    }

    /// Records at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Concatenate two datasets, re-checking id uniqueness and provenance groups.
    pub fn concat(&self, other: &Dataset) -> Result<Dataset, DatasetError> {
        let mut records = self.records.clone();
        records.extend(other.records.iter().cloned());
        Dataset::new(records)
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        check_header(&header)?;
        let mut records = Vec::new();
        for (i, row) in rdr.records().enumerate() {
            let row_no = i + 1;
            let row = row?;
            let record = parse_row(&row, row_no)?;
            record
                .validate()
                .map_err(|source| DatasetError::Row { row: row_no, source })?;
            records.push(record);
        }
        check_unique_ids(&records)?;
        check_provenance_groups(&records)?;
        Ok(Dataset { records })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let file = std::fs::File::create(path)?;
        self.write_csv(file)
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut wtr = csv::WriterBuilder::new().from_writer(writer);
        wtr.write_record(CSV_HEADER)?;
        for r in &self.records {
            wtr.write_record([
                r.record_id.clone(),
                r.client_group.clone(),
                r.industry.clone(),
                format_number(r.client_revenue),
                r.est_duration_weeks.to_string(),
                r.pain_severity_score.to_string(),
                r.integration_complexity.to_string(),
                r.phase.to_string(),
                r.tech_stack.as_str().to_string(),
                format_number(r.price),
                r.provenance.as_str().to_string(),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Shortest representation that parses back to the same f64.
fn format_number(x: f64) -> String {
    format!("{x:?}").trim_end_matches(".0").to_string()
}

fn check_header(header: &csv::StringRecord) -> Result<(), DatasetError> {
    let got: Vec<&str> = header.iter().collect();
    for name in &got {
        if !CSV_HEADER.contains(name) {
            return Err(DatasetError::Schema(format!("unknown column {name:?}")));
        }
    }
    for name in CSV_HEADER {
        if !got.contains(&name) {
            return Err(DatasetError::Schema(format!("missing column {name:?}")));
        }
    }
    if got != CSV_HEADER {
        return Err(DatasetError::Schema(format!(
            "columns out of order; expected {}",
            CSV_HEADER.join(",")
        )));
    }
    Ok(())
}

fn parse_row(row: &csv::StringRecord, row_no: usize) -> Result<DealRecord, DatasetError> {
    let field = |i: usize| row.get(i).unwrap_or("").trim();
    fn num<T: FromStr>(s: &str, row: usize, column: &'static str) -> Result<T, DatasetError> {
        s.parse().map_err(|_| DatasetError::Parse {
            row,
            column,
            value: s.to_string(),
        })
    }
    // Integer scores are parsed wide so that out-of-range values report as
    // range errors rather than parse failures.
    let small = |i: usize, column: &'static str, range: (i64, i64)| -> Result<u8, DatasetError> {
        let v: i64 = num(field(i), row_no, column)?;
        check_range(column, v, range).map_err(|source| DatasetError::Row { row: row_no, source })?;
        Ok(v as u8)
    };
    let weeks: i64 = num(field(4), row_no, "est_duration_weeks")?;
    check_range("est_duration_weeks", weeks, (1, u32::MAX as i64))
        .map_err(|source| DatasetError::Row { row: row_no, source })?;
    Ok(DealRecord {
        record_id: field(0).to_string(),
        client_group: field(1).to_string(),
        industry: field(2).to_string(),
        client_revenue: num(field(3), row_no, "client_revenue")?,
        est_duration_weeks: weeks as u32,
        pain_severity_score: small(5, "pain_severity_score", PAIN_RANGE)?,
        integration_complexity: small(6, "integration_complexity", COMPLEXITY_RANGE)?,
        phase: small(7, "phase", PHASE_RANGE)?,
        tech_stack: field(8)
            .parse()
            .map_err(|source| DatasetError::Row { row: row_no, source })?,
        price: num(field(9), row_no, "price")?,
        provenance: field(10)
            .parse()
            .map_err(|source| DatasetError::Row { row: row_no, source })?,
    })
}

fn check_unique_ids(records: &[DealRecord]) -> Result<(), DatasetError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.record_id.as_str()) {
            return Err(DatasetError::DuplicateId(r.record_id.clone()));
        }
    }
    Ok(())
}

fn check_provenance_groups(records: &[DealRecord]) -> Result<(), DatasetError> {
    let mut owner: HashMap<&str, Provenance> = HashMap::new();
    for r in records {
        match owner.get(r.client_group.as_str()) {
            Some(&p) if p != r.provenance => {
                return Err(DatasetError::MixedProvenanceGroup(r.client_group.clone()))
            }
            _ => {
                owner.insert(r.client_group.as_str(), r.provenance);
            }
        }
    }
    Ok(())
}
