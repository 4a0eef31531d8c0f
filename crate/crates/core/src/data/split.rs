use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, FeatureSetName};
use crate::error::{Error, Result};

/// Sizes of the held-out splits. Defaults reproduce the published protocol:
/// 715 non-wildfire and 1,000 wildfire rows in both validation and test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub nominal_per_holdout: usize,
    pub wildfire_per_holdout: usize,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            nominal_per_holdout: 715,
            wildfire_per_holdout: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitBundle {
    /// Non-wildfire rows only.
    pub train: FeatureMatrix,
    pub validation: FeatureMatrix,
    pub test: FeatureMatrix,
    pub seed: u64,
    /// Row ids of wildfire rows excluded by down-sampling.
    pub dropped_wildfire: Vec<usize>,
}

/// Row-id lists plus seed; enough to reproduce a split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub feature_set: Option<FeatureSetName>,
    pub train_ids: Vec<usize>,
    pub validation_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub dropped_wildfire_ids: Vec<usize>,
}

impl SplitBundle {
    pub fn manifest(&self) -> SplitManifest {
        SplitManifest {
            seed: self.seed,
            feature_set: self.train.feature_set,
            train_ids: self.train.row_ids.clone(),
            validation_ids: self.validation.row_ids.clone(),
            test_ids: self.test.row_ids.clone(),
            dropped_wildfire_ids: self.dropped_wildfire.clone(),
        }
    }
}

/// Partition a labelled matrix into nominal-only train and mixed
/// validation/test splits.
///
/// Non-wildfire rows are shuffled; `nominal_per_holdout` go to test, the
/// same number to validation and the rest to train. Wildfire rows are
/// shuffled, halved (test gets the smaller half) and each half is
/// down-sampled uniformly to `wildfire_per_holdout`. Every split keeps the
/// input row order.
pub fn split(matrix: &FeatureMatrix, plan: SplitPlan, seed: u64) -> Result<SplitBundle> {
    let mut nominal: Vec<usize> = Vec::new();
    let mut wildfire: Vec<usize> = Vec::new();
    for (pos, &label) in matrix.labels.iter().enumerate() {
        match label {
            0 => nominal.push(pos),
            1 => wildfire.push(pos),
            other => {
                return Err(Error::Domain(format!(
                    "non-binary label {other} at row {pos}"
                )));
            }
        }
    }
    let need_nominal = 2 * plan.nominal_per_holdout;
    let need_wildfire = 2 * plan.wildfire_per_holdout;
    if nominal.len() < need_nominal || wildfire.len() < need_wildfire {
        return Err(Error::Config(format!(
            "split needs at least {need_nominal} non-wildfire and {need_wildfire} wildfire rows, \
             table has {} and {}",
            nominal.len(),
            wildfire.len()
        )));
    }
    if nominal.len() == need_nominal {
        return Err(Error::Config(format!(
            "all {} non-wildfire rows are consumed by validation/test; train would be empty",
            nominal.len()
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nominal.shuffle(&mut rng);
    wildfire.shuffle(&mut rng);

    let h = plan.nominal_per_holdout;
    let mut test: Vec<usize> = nominal[..h].to_vec();
    let mut validation: Vec<usize> = nominal[h..2 * h].to_vec();
    let mut train: Vec<usize> = nominal[2 * h..].to_vec();

    let (test_pool, val_pool) = wildfire.split_at(wildfire.len() / 2);
    let mut dropped = Vec::new();
    for (pool, dest) in [(test_pool, &mut test), (val_pool, &mut validation)] {
        let keep = index::sample(&mut rng, pool.len(), plan.wildfire_per_holdout);
        let mut kept = vec![false; pool.len()];
        for k in keep.iter() {
            kept[k] = true;
        }
        for (i, &pos) in pool.iter().enumerate() {
            if kept[i] {
                dest.push(pos);
            } else {
                dropped.push(matrix.row_ids[pos]);
            }
        }
    }

    train.sort_unstable();
    validation.sort_unstable();
    test.sort_unstable();
    dropped.sort_unstable();

    Ok(SplitBundle {
        train: matrix.take_rows(&train),
        validation: matrix.take_rows(&validation),
        test: matrix.take_rows(&test),
        seed,
        dropped_wildfire: dropped,
    })
}
