//! Pinned datasets, seeds and the reference pricing model.
//!
//! Everything here is deterministic: the same call returns the same records
//! and the same trees on every run and platform.

use crate::dataset::{generate_synthetic, generate_with_groups, Dataset, DatasetError, GeneratorSpec, Provenance};
use crate::gbdt::{fit_named, GbdtError, GbdtModel, Hyperparameters};
use crate::splits::{group_kfold, group_shuffle_split, FoldPlan, SplitError, SplitPlan};

pub const DEFAULT_N: usize = 70;
pub const TEST_FRACTION: f64 = 0.2;
pub const CV_FOLDS: usize = 3;
/// Split seed for [`default_dataset`].
pub const DEFAULT_SPLIT_SEED: u64 = 42;
/// Split seed giving exactly 56 / 14 on [`layout_fixture`].
pub const FIXTURE_SPLIT_SEED: u64 = 42;

/// Group sizes of the 40 real records: a 3-phase client, a 4-phase client,
/// fifteen 2-phase clients and three single-project clients.
pub const REAL_GROUP_SIZES: [u8; 20] = [3, 4, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 1, 1, 1];

/// The default synthetic dataset (70 records).
pub fn default_dataset() -> Dataset {
    generate_synthetic(&GeneratorSpec::default(), DEFAULT_N).expect("default spec is valid")
}

pub fn default_split(dataset: &Dataset) -> Result<SplitPlan, SplitError> {
    group_shuffle_split(dataset, TEST_FRACTION, DEFAULT_SPLIT_SEED)
}

/// Folds over the training partition of `split`, indexed within it.
pub fn training_folds(dataset: &Dataset, split: &SplitPlan, k: usize) -> Result<FoldPlan, SplitError> {
    group_kfold(&dataset.subset(&split.train_indices), k)
}

/// 70 records laid out like the reference data: 40 real records across 20
/// client groups (client-02 .. client-21) and 30 synthetic single-record
/// groups (client-22 .. client-51).
pub fn layout_fixture() -> Result<Dataset, DatasetError> {
    let real = GeneratorSpec {
        provenance: Provenance::Real,
        record_prefix: "real".into(),
        first_group_number: 2,
        seed: 2024,
        ..GeneratorSpec::default()
    };
    let synthetic = GeneratorSpec {
        provenance: Provenance::Synthetic,
        record_prefix: "syn".into(),
        first_group_number: 22,
        seed: 2025,
        ..GeneratorSpec::default()
    };
    let real = generate_with_groups(&real, &REAL_GROUP_SIZES)?;
    let synthetic = generate_with_groups(&synthetic, &[1; 30])?;
    real.concat(&synthetic)
}

/// Default-hyperparameter GBDT fitted on the training side of the default split.
pub fn pinned_model() -> Result<GbdtModel, GbdtError> {
    let ds = default_dataset();
    let split = default_split(&ds).expect("default dataset has many groups");
    let train = ds.subset(&split.train_indices);
    fit_named(
        &train.design_matrix(&crate::dataset::FeatureSet::full()),
        &train.targets(),
        &Hyperparameters::default(),
        crate::dataset::FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}
