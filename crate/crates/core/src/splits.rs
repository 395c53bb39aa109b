//! Group-aware train/test splits and k-fold plans.
//!
//! Every record of a client group lands on the same side of every partition,
//! so multi-phase clients can never leak between training and evaluation.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum SplitError {
    #[error("cannot split one group: the dataset has {0} distinct client group(s)")]
    TooFewGroups(usize),
    #[error("test_fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("k = {k} exceeds the number of distinct groups ({groups})")]
    KTooLarge { k: usize, groups: usize },
    #[error("index {index} out of range for a dataset of {len} records")]
    IndexOutOfRange { index: usize, len: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub test_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    /// Held-out indices per fold, each sorted ascending.
    pub folds: Vec<Vec<usize>>,
}

impl FoldPlan {
    pub fn sizes(&self) -> Vec<usize> {
        self.folds.iter().map(Vec::len).collect()
    }

    /// Complement of fold `i` over `n` records.
    pub fn train_indices(&self, i: usize, n: usize) -> Vec<usize> {
        let held: BTreeSet<usize> = self.folds[i].iter().copied().collect();
        (0..n).filter(|j| !held.contains(j)).collect()
    }
}

/// Anything that partitions dataset indices into disjoint blocks.
pub trait Partition {
    fn blocks(&self) -> Vec<&[usize]>;
}

impl Partition for SplitPlan {
    fn blocks(&self) -> Vec<&[usize]> {
        vec![&self.train_indices, &self.test_indices]
    }
}

impl Partition for FoldPlan {
    fn blocks(&self) -> Vec<&[usize]> {
        self.folds.iter().map(Vec::as_slice).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub ok: bool,
    /// Groups found in more than one block, sorted.
    pub offending_groups: Vec<String>,
}

/// Groups in order of first appearance, with their member indices.
fn group_members(dataset: &Dataset) -> Vec<(String, Vec<usize>)> {
    let mut order: Vec<(String, Vec<usize>)> = Vec::new();
    let mut pos: HashMap<&str, usize> = HashMap::new();
    for (i, r) in dataset.records().iter().enumerate() {
        match pos.get(r.client_group.as_str()) {
            Some(&p) => order[p].1.push(i),
            None => {
                pos.insert(r.client_group.as_str(), order.len());
                order.push((r.client_group.clone(), vec![i]));
            }
        }
    }
    order
}

/// Seeded group shuffle split.
///
/// Shuffled groups are moved to the test side until the test count reaches
/// `⌈test_fraction · N⌉`; a group that would overshoot is still taken when
/// the overshoot does not exceed the remaining shortfall, otherwise filling
/// stops. Both sides always receive at least one group.
pub fn group_shuffle_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<SplitPlan, SplitError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(SplitError::BadFraction(test_fraction));
    }
    let mut groups = group_members(dataset);
    if groups.len() < 2 {
        return Err(SplitError::TooFewGroups(groups.len()));
    }
    let n = dataset.len();
    // 0.2 * 70 is 14.000000000000002 in floating point
    let target = ((test_fraction * n as f64) - 1e-9).ceil().max(1.0) as usize;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let mut taken = 0usize;
    let mut count = 0usize;
    for (_, members) in &groups {
        if count >= target || taken + 1 == groups.len() {
            break;
        }
        let next = count + members.len();
        if next <= target || taken == 0 {
            taken += 1;
            count = next;
        } else {
            if next - target <= target - count {
                taken += 1;
            }
            break;
        }
    }

    let mut test: Vec<usize> = groups[..taken].iter().flat_map(|(_, m)| m.iter().copied()).collect();
    let mut train: Vec<usize> = groups[taken..].iter().flat_map(|(_, m)| m.iter().copied()).collect();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitPlan {
        train_indices: train,
        test_indices: test,
        seed,
        test_fraction,
    })
}

/// Deterministic size-balanced group k-fold.
///
/// Groups are taken largest first (ties by first appearance) and each goes to
/// the currently smallest fold (ties by lowest fold index).
pub fn group_kfold(dataset: &Dataset, k: usize) -> Result<FoldPlan, SplitError> {
    if k < 2 {
        return Err(SplitError::KTooSmall(k));
    }
    let mut groups = group_members(dataset);
    if k > groups.len() {
        return Err(SplitError::KTooLarge {
            k,
            groups: groups.len(),
        });
    }
    groups.sort_by_key(|(_, m)| std::cmp::Reverse(m.len()));
    let mut folds: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (_, members) in groups {
        let smallest = (0..k).min_by_key(|&f| folds[f].len()).expect("k >= 2");
        folds[smallest].extend(members);
    }
    folds.iter_mut().for_each(|f| f.sort_unstable());
    Ok(FoldPlan { k, folds })
}

pub fn verify_no_leakage(
    plan: &impl Partition,
    dataset: &Dataset,
) -> Result<LeakageReport, SplitError> {
    let records = dataset.records();
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut offending = BTreeSet::new();
    for (b, block) in plan.blocks().into_iter().enumerate() {
        for &i in block {
            let r = records.get(i).ok_or(SplitError::IndexOutOfRange {
                index: i,
                len: records.len(),
            })?;
            match seen.get(r.client_group.as_str()) {
                Some(&prev) if prev != b => {
                    offending.insert(r.client_group.clone());
                }
                Some(_) => {}
                None => {
                    seen.insert(r.client_group.as_str(), b);
                }
            }
        }
    }
    Ok(LeakageReport {
        ok: offending.is_empty(),
        offending_groups: offending.into_iter().collect(),
    })
}
