//! Sample ingestion, filtering, subsampling, splitting, normalization, and
//! holdout-scenario construction.
//!
//! A dataset is a flat list of [`LinkSample`]s: one measured link with its
//! path profile and a group label naming the drive test it came from.
//! Everything downstream (training splits, holdout scenarios, subsampling
//! strata) is derived deterministically from explicit seeds.

mod io;
mod synth;

pub use io::{
    parse_samples, read_feature_table, write_feature_table, write_samples, SampleFormat,
};
pub use synth::{gen_synthetic, gen_synthetic_with, LabelLaw, SynthConfig};

use crate::error::{Error, Result};
use crate::features::{extract_features, select_config, FeatureConfig};
use crate::matrix::Matrix;
use crate::profile::PathProfile;
use crate::seeds::derive_seed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

/// One measured link: a path profile, the measured loss, and the drive-test
/// group it belongs to. `noise_floor_db` is the path loss at which the
/// received signal would hit the measurement noise floor; samples without it
/// are treated as filtered upstream.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkSample {
    pub profile: PathProfile,
    pub measured_path_loss_db: f64,
    pub group: String,
    pub noise_floor_db: Option<f64>,
}

impl LinkSample {
    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        if !self.measured_path_loss_db.is_finite() {
            return Err(Error::InvalidProfile(format!(
                "non-finite path loss {}",
                self.measured_path_loss_db
            )));
        }
        if self.group.is_empty() {
            return Err(Error::InvalidProfile("empty group label".into()));
        }
        if let Some(floor) = self.noise_floor_db {
            if !floor.is_finite() {
                return Err(Error::InvalidProfile(format!("non-finite noise floor {floor}")));
            }
        }
        Ok(())
    }
}

/// Per-feature standardization fitted on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply_row(&self, row: &mut [f64]) -> Result<()> {
        if row.len() != self.dim() {
            return Err(Error::Shape(format!(
                "normalizer is {}-dimensional, row has {}",
                self.dim(),
                row.len()
            )));
        }
        for ((x, m), s) in row.iter_mut().zip(&self.mean).zip(&self.sd) {
            *x = (*x - m) / s;
        }
        Ok(())
    }

    pub fn apply_in_place(&self, m: &mut Matrix) -> Result<()> {
        for r in 0..m.rows() {
            self.apply_row(m.row_mut(r))?;
        }
        Ok(())
    }
}

/// Column means and population SDs of the training matrix. Constant columns
/// are refused: a feature that never varies cannot be standardized and
/// signals degenerate data (for example an all-line-of-sight set).
pub fn fit_normalizer(train: &Matrix) -> Result<Normalizer> {
    if train.rows() < 2 {
        return Err(Error::Degenerate(format!(
            "normalizer needs at least 2 rows, got {}",
            train.rows()
        )));
    }
    let mut mean = Vec::with_capacity(train.cols());
    let mut sd = Vec::with_capacity(train.cols());
    for c in 0..train.cols() {
        let m = train.col_mean(c);
        let s = train.col_std(c);
        if s == 0.0 {
            return Err(Error::Degenerate(format!(
                "feature f{} is constant on the fitting rows",
                c + 1
            )));
        }
        mean.push(m);
        sd.push(s);
    }
    Ok(Normalizer { mean, sd })
}

/// One holdout scenario. An empty `test_groups` set designates the
/// no-holdout scenario, whose test data comes from an external set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub train_groups: BTreeSet<String>,
    pub test_groups: BTreeSet<String>,
}

impl Scenario {
    pub fn is_external_test(&self) -> bool {
        self.test_groups.is_empty()
    }
}

/// One leave-one-out scenario per group, named after the held-out group,
/// followed by a `no-holdout` scenario training on everything.
pub fn build_scenarios(groups: &[String]) -> Result<Vec<Scenario>> {
    if groups.len() < 2 {
        return Err(Error::Config(format!(
            "need at least 2 groups for holdout scenarios, got {}",
            groups.len()
        )));
    }
    let all: BTreeSet<String> = groups.iter().cloned().collect();
    if all.len() != groups.len() {
        return Err(Error::Config("duplicate group label".into()));
    }
    let mut scenarios: Vec<Scenario> = groups
        .iter()
        .map(|g| {
            let mut train = all.clone();
            train.remove(g);
            Scenario {
                name: g.clone(),
                train_groups: train,
                test_groups: BTreeSet::from([g.clone()]),
            }
        })
        .collect();
    scenarios.push(Scenario {
        name: "no-holdout".into(),
        train_groups: all,
        test_groups: BTreeSet::new(),
    });
    Ok(scenarios)
}

/// Drops samples whose headroom above the noise floor is at most
/// `margin_db`. Samples without a recorded floor pass through.
pub fn filter_noise(samples: Vec<LinkSample>, margin_db: f64) -> Result<Vec<LinkSample>> {
    if !(margin_db >= 0.0) {
        return Err(Error::Domain(format!(
            "noise margin must be non-negative, got {margin_db}"
        )));
    }
    Ok(samples
        .into_iter()
        .filter(|s| match s.noise_floor_db {
            Some(floor) => floor - s.measured_path_loss_db > margin_db,
            None => true,
        })
        .collect())
}

/// Uniform without-replacement subsampling to at most `per_stratum` samples
/// per `(group, frequency)` stratum. Strata already at or under the quota
/// are kept whole. Output preserves the input order; selection within each
/// stratum runs on its own seed-derived stream, so adding a stratum never
/// perturbs the others.
pub fn subsample(
    samples: Vec<LinkSample>,
    per_stratum: usize,
    seed: u64,
) -> Result<Vec<LinkSample>> {
    if per_stratum < 1 {
        return Err(Error::Domain("per_stratum must be at least 1".into()));
    }
    let mut strata: BTreeMap<(String, u64), Vec<usize>> = BTreeMap::new();
    for (i, s) in samples.iter().enumerate() {
        strata
            .entry((s.group.clone(), s.profile.frequency_mhz.to_bits()))
            .or_default()
            .push(i);
    }
    let mut keep: Vec<usize> = Vec::new();
    for ((group, freq_bits), members) in &strata {
        if members.len() <= per_stratum {
            keep.extend_from_slice(members);
            continue;
        }
        let label = format!("subsample/{group}/{freq_bits}");
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(seed, &label, 0));
        let mut pool = members.clone();
        for i in 0..per_stratum {
            let j = rng.gen_range(i..pool.len());
            pool.swap(i, j);
        }
        keep.extend_from_slice(&pool[..per_stratum]);
    }
    keep.sort_unstable();
    let mut keep_iter = keep.into_iter().peekable();
    Ok(samples
        .into_iter()
        .enumerate()
        .filter_map(|(i, s)| {
            if keep_iter.peek() == Some(&i) {
                keep_iter.next();
                Some(s)
            } else {
                None
            }
        })
        .collect())
}

/// Random index partition into train and validation sides. The train side
/// gets `round(n * train_fraction)` indices, clamped so neither side is
/// empty; both sides come back sorted.
pub fn split_indices(
    n: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::Degenerate(format!("cannot split {n} samples")));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Domain(format!(
            "train fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let k = ((n as f64 * train_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let mut train: Vec<usize> = order[..k].to_vec();
    let mut val: Vec<usize> = order[k..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    Ok((train, val))
}

/// [`split_indices`] applied to a sample list.
pub fn split<T: Clone>(items: &[T], train_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    let (ti, vi) = split_indices(items.len(), train_fraction, seed)?;
    let pick = |idx: &[usize]| idx.iter().map(|&i| items[i].clone()).collect();
    Ok((pick(&ti), pick(&vi)))
}

/// Extracted features of a sample list: group labels, the full 8-column
/// feature matrix, and measured labels, row-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    pub groups: Vec<String>,
    pub features: Matrix,
    pub labels: Vec<f64>,
}

impl FeatureTable {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Input matrix for a model consuming the leading `config` features.
    pub fn inputs(&self, config: FeatureConfig) -> Result<Matrix> {
        self.features.left_cols(config.len())
    }

    /// F2 column: horizontal link distances in meters.
    pub fn distances_m(&self) -> Vec<f64> {
        (0..self.features.rows()).map(|r| self.features.row(r)[1]).collect()
    }

    /// F1 column: carrier frequencies in MHz.
    pub fn frequencies_mhz(&self) -> Vec<f64> {
        (0..self.features.rows()).map(|r| self.features.row(r)[0]).collect()
    }

    /// Rows whose group is in the given set.
    pub fn filter_groups(&self, groups: &BTreeSet<String>) -> FeatureTable {
        let idx: Vec<usize> = self
            .groups
            .iter()
            .enumerate()
            .filter(|(_, g)| groups.contains(*g))
            .map(|(i, _)| i)
            .collect();
        FeatureTable {
            groups: idx.iter().map(|&i| self.groups[i].clone()).collect(),
            features: self.features.select_rows(&idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn group_set(&self) -> BTreeSet<String> {
        self.groups.iter().cloned().collect()
    }
}

/// Extracts all eight features per sample into a [`FeatureTable`].
pub fn extract_table(samples: &[LinkSample], radius_m: f64) -> Result<FeatureTable> {
    let mut groups = Vec::with_capacity(samples.len());
    let mut rows = Vec::with_capacity(samples.len());
    let mut labels = Vec::with_capacity(samples.len());
    for s in samples {
        let fv = extract_features(&s.profile, radius_m)?;
        groups.push(s.group.clone());
        rows.push(select_config(&fv, FeatureConfig::Eight));
        labels.push(s.measured_path_loss_db);
    }
    Ok(FeatureTable {
        groups,
        features: Matrix::from_rows(&rows)?,
        labels,
    })
}
