//! Correlation-length holdout split.
//!
//! All examples whose xi is in the holdout list are withheld from training
//! and divided — group-atomically, so no original image straddles the
//! boundary — into calibration and test halves by a seeded shuffle.
//! Everything else is proper-training data.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::DatasetManifest;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Which correlation lengths to withhold, and the shuffle seed for the
/// calibration/test division.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub holdout_xi: Vec<f64>,
    pub split_seed: u64,
}

impl SplitSpec {
    /// Default holdout: the upper half of the config's xi list (largest
    /// correlation lengths), rounded up.
    pub fn default_for(xi_list: &[f64], split_seed: u64) -> Self {
        let mut sorted = xi_list.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted.dedup();
        let keep = sorted.len() / 2;
        SplitSpec { holdout_xi: sorted.split_off(keep), split_seed }
    }
}

/// Index sets into `manifest.examples`. Disjoint; union is everything.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSets {
    pub proper_train: Vec<usize>,
    pub calibration: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits the manifest's examples by correlation-length holdout.
///
/// Holdout groups are shuffled with `split_seed`; the first half becomes
/// calibration, the rest test (calibration gets the extra group when odd).
/// Errors when the holdout matches nothing (empty calibration or test) or
/// matches everything (empty proper-training set).
pub fn split_examples(manifest: &DatasetManifest, spec: &SplitSpec) -> Result<SplitSets> {
    let is_holdout = |xi: f64| spec.holdout_xi.iter().any(|&h| h == xi);

    let mut proper_train = Vec::new();
    let mut holdout_groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, e) in manifest.examples.iter().enumerate() {
        if is_holdout(e.xi) {
            holdout_groups.entry(e.group_index).or_default().push(i);
        } else {
            proper_train.push(i);
        }
    }

    if proper_train.is_empty() {
        return Err(Error::invalid_param(
            "holdout_xi",
            "holdout covers every correlation length; nothing left to train on",
        ));
    }
    if holdout_groups.len() < 2 {
        return Err(Error::invalid_param(
            "holdout_xi",
            format!(
                "holdout matches {} group(s); need at least 2 to form calibration and test sets",
                holdout_groups.len()
            ),
        ));
    }

    let mut group_ids: Vec<u64> = holdout_groups.keys().copied().collect();
    let mut rng = rng_from_seed(spec.split_seed);
    group_ids.shuffle(&mut rng);
    let n_cal = group_ids.len().div_ceil(2);

    let mut calibration = Vec::new();
    let mut test = Vec::new();
    for (rank, gid) in group_ids.iter().enumerate() {
        let bucket = if rank < n_cal { &mut calibration } else { &mut test };
        bucket.extend(&holdout_groups[gid]);
    }
    calibration.sort_unstable();
    test.sort_unstable();

    debug_assert_eq!(
        proper_train.len() + calibration.len() + test.len(),
        manifest.examples.len()
    );
    Ok(SplitSets { proper_train, calibration, test })
}
