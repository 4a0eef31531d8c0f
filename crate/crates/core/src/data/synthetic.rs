//! Bundled stand-in for the published dataset.
//!
//! Nominal rows are a correlated Gaussian (low-rank factor model plus
//! independent noise) centred at 0.5 and clipped to [0, 1]. Wildfire rows
//! are drawn the same way and then shifted by `shift_sigmas` standard
//! deviations per feature along a fixed random sign pattern.

use chrono::{Days, NaiveDate};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Record, RecordTable, Region, SplitPlan, DATASET1_COLUMNS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub nominal_rows: usize,
    pub anomalous_rows: usize,
    pub latent_factors: usize,
    pub noise_sd: f64,
    pub shift_sigmas: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            nominal_rows: 3_900,
            anomalous_rows: 120,
            latent_factors: 4,
            noise_sd: 0.03,
            shift_sigmas: 3.0,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    /// Holdout sizes for the default generator: 450 nominal + 50 anomalous
    /// rows per holdout split, i.e. 10% anomalies in test.
    pub fn split_plan(&self) -> SplitPlan {
        SplitPlan {
            nominal_per_holdout: 450,
            wildfire_per_holdout: 50,
        }
    }
}

struct FactorModel {
    loadings: Vec<Vec<f64>>,
    sigma: Vec<f64>,
    shift_sign: Vec<f64>,
}

impl FactorModel {
    fn new(cfg: &SyntheticConfig, dims: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut loadings = Vec::with_capacity(dims);
        let mut sigma = Vec::with_capacity(dims);
        let mut shift_sign = Vec::with_capacity(dims);
        for _ in 0..dims {
            let s: f64 = rng.random_range(0.10..0.16);
            let shared = (s * s - cfg.noise_sd * cfg.noise_sd).max(0.0).sqrt();
            let mut dir: Vec<f64> = (0..cfg.latent_factors)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-12);
            dir.iter_mut().for_each(|v| *v *= shared / norm);
            loadings.push(dir);
            sigma.push(s);
            shift_sign.push(if rng.random_bool(0.5) { 1.0 } else { -1.0 });
        }
        Self {
            loadings,
            sigma,
            shift_sign,
        }
    }

    fn sample(&self, cfg: &SyntheticConfig, anomalous: bool, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let z: Vec<f64> = (0..cfg.latent_factors)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        self.loadings
            .iter()
            .enumerate()
            .map(|(f, load)| {
                let eps: f64 = rng.sample(StandardNormal);
                let mut v =
                    0.5 + load.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>() + cfg.noise_sd * eps;
                if anomalous {
                    v += cfg.shift_sigmas * self.sigma[f] * self.shift_sign[f];
                }
                v.clamp(0.0, 1.0)
            })
            .collect()
    }
}

/// Generate a labelled table with the 28 Dataset 1 columns.
pub fn generate(cfg: &SyntheticConfig) -> RecordTable {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dims = DATASET1_COLUMNS.len();
    let model = FactorModel::new(cfg, dims, &mut rng);

    let total = cfg.nominal_rows + cfg.anomalous_rows;
    let mut is_fire = vec![false; total];
    for i in index::sample(&mut rng, total, cfg.anomalous_rows).iter() {
        is_fire[i] = true;
    }

    let start = NaiveDate::from_ymd_opt(2005, 1, 1).unwrap();
    let rows = is_fire
        .iter()
        .enumerate()
        .map(|(i, &fire)| {
            let features = model.sample(cfg, fire, &mut rng);
            let fire_area = if fire {
                rng.random_range(1.0..5000.0)
            } else {
                0.0
            };
            Record {
                date: start + Days::new((i / Region::ALL.len()) as u64),
                region: Region::ALL[i % Region::ALL.len()],
                features,
                fire_area,
                fire_label: Some(u8::from(fire)),
            }
        })
        .collect();

    let mut table = RecordTable::new(
        DATASET1_COLUMNS.iter().map(|s| s.to_string()).collect(),
        rows,
    )
    .expect("generator emits consistent rows");
    table.sort_by_region_date();
    table
}
