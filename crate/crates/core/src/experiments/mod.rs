//! Statistical protocols over trained models: repeated holdout runs,
//! stepwise feature ablation, long repeat studies with best-k selection.
//!
//! Every run is reproducible from a base seed: run `i` splits with seed
//! `base_seed + i` and trains with a seed derived from `(base_seed, "init",
//! i)`, so splits and initializations vary independently, and the same run
//! index gets the same split in every feature configuration (paired
//! comparisons). Runs execute in parallel; records are collected in run
//! order regardless of scheduling, so aggregate outputs are byte-stable.

use crate::dataset::{split_indices, FeatureTable, Scenario};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::matrix::Matrix;
use crate::metrics::rmse;
use crate::nn::{forward, train, ForwardMode, MlpConfig, TrainConfig};
use crate::seeds::derive_seed;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::time::Instant;

/// One train/evaluate cycle. `seed` is the run's split seed; wall time is
/// observability only and never serialized, so reports stay byte-stable.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub scenario: String,
    pub feature_config: FeatureConfig,
    pub seed: u64,
    pub val_rmse: f64,
    pub test_rmse: f64,
    pub epochs: usize,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub median: f64,
}

impl MetricSummary {
    /// Population statistics, so a single run reports zero spread. Sums run
    /// over the sorted values, making the result independent of input
    /// order: any subset selection yielding the same multiset yields
    /// bit-identical statistics.
    fn from_values(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let mean = sorted.iter().sum::<f64>() / n;
        let var = sorted.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let mid = sorted.len() / 2;
        let median = if sorted.len() % 2 == 1 {
            sorted[mid]
        } else {
            0.5 * (sorted[mid - 1] + sorted[mid])
        };
        MetricSummary {
            mean,
            sd: var.sqrt(),
            min: sorted[0],
            max: *sorted.last().unwrap(),
            median,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub n_runs: usize,
    pub val_rmse: MetricSummary,
    pub test_rmse: MetricSummary,
}

pub fn run_stats(records: &[RunRecord]) -> Result<RunStats> {
    if records.is_empty() {
        return Err(Error::Degenerate("no runs to aggregate".into()));
    }
    let val: Vec<f64> = records.iter().map(|r| r.val_rmse).collect();
    let test: Vec<f64> = records.iter().map(|r| r.test_rmse).collect();
    Ok(RunStats {
        n_runs: records.len(),
        val_rmse: MetricSummary::from_values(&val),
        test_rmse: MetricSummary::from_values(&test),
    })
}

/// Everything one scenario run needs beyond the data itself: run count,
/// seeding, network shape, and the training recipe. The seed inside
/// `train` is ignored; per-run seeds are derived from `base_seed`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunPlan {
    pub n_runs: usize,
    pub base_seed: u64,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub dropout_rate: f64,
    pub train: TrainConfig,
}

impl Default for RunPlan {
    fn default() -> Self {
        RunPlan {
            n_runs: 20,
            base_seed: 0,
            hidden_layers: crate::nn::HIDDEN_LAYERS,
            hidden_width: crate::nn::HIDDEN_WIDTH,
            dropout_rate: crate::nn::DEFAULT_DROPOUT,
            train: TrainConfig::default(),
        }
    }
}

impl RunPlan {
    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::Config("n_runs must be at least 1".into()));
        }
        self.mlp_config(8).validate()?;
        self.train.validate()
    }

    fn mlp_config(&self, input_dim: usize) -> MlpConfig {
        MlpConfig {
            input_dim,
            hidden_layers: self.hidden_layers,
            hidden_width: self.hidden_width,
            dropout_rate: self.dropout_rate,
        }
    }
}

fn gather(table: &FeatureTable, idx: &[usize], config: FeatureConfig) -> Result<(Matrix, Vec<f64>)> {
    let x = table.features.select_rows(idx).left_cols(config.len())?;
    let y = idx.iter().map(|&i| table.labels[i]).collect();
    Ok((x, y))
}

fn scenario_rows(table: &FeatureTable, scenario: &Scenario) -> Result<(Vec<usize>, Vec<usize>)> {
    let present = table.group_set();
    for g in scenario.train_groups.iter().chain(&scenario.test_groups) {
        if !present.contains(g) {
            return Err(Error::Config(format!(
                "scenario {} references group {g} absent from the data",
                scenario.name
            )));
        }
    }
    let mut train_pool = Vec::new();
    let mut test = Vec::new();
    for (i, g) in table.groups.iter().enumerate() {
        if scenario.train_groups.contains(g) {
            train_pool.push(i);
        } else if scenario.test_groups.contains(g) {
            test.push(i);
        }
    }
    Ok((train_pool, test))
}

fn one_run(
    table: &FeatureTable,
    scenario: &Scenario,
    config: FeatureConfig,
    plan: &RunPlan,
    pool: &[usize],
    test_x: &Matrix,
    test_y: &[f64],
    run_index: u64,
) -> Result<RunRecord> {
    let started = Instant::now();
    let split_seed = plan.base_seed + run_index;
    let (tr, va) = split_indices(pool.len(), plan.train.train_fraction, split_seed)?;
    let tr_rows: Vec<usize> = tr.iter().map(|&i| pool[i]).collect();
    let va_rows: Vec<usize> = va.iter().map(|&i| pool[i]).collect();
    let (xt, yt) = gather(table, &tr_rows, config)?;
    let (xv, yv) = gather(table, &va_rows, config)?;
    let mlp = plan.mlp_config(config.len());
    let train_cfg = TrainConfig {
        seed: derive_seed(plan.base_seed, "init", run_index),
        ..plan.train
    };
    let (model, history) = train(&xt, &yt, &xv, &yv, &mlp, &train_cfg)?;
    let val_rmse = history.val_mse[history.best_epoch].sqrt();
    // The single place test rows are consulted: scoring the final model.
    let pred = forward(&model, test_x, ForwardMode::Infer)?;
    let test_rmse = rmse(&pred, test_y)?;
    Ok(RunRecord {
        scenario: scenario.name.clone(),
        feature_config: config,
        seed: split_seed,
        val_rmse,
        test_rmse,
        epochs: history.epochs_run,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Trains and scores `plan.n_runs` independent models on one scenario.
/// Scenarios with no held-out group (`is_external_test`) score against
/// `external_test`, which must then be provided.
pub fn run_scenario(
    table: &FeatureTable,
    scenario: &Scenario,
    config: FeatureConfig,
    plan: &RunPlan,
    external_test: Option<&FeatureTable>,
) -> Result<(Vec<RunRecord>, RunStats)> {
    plan.validate()?;
    let (pool, test_rows) = scenario_rows(table, scenario)?;
    let (test_x, test_y) = if scenario.is_external_test() {
        let ext = external_test.ok_or_else(|| {
            Error::Config(format!(
                "scenario {} has no held-out group and needs an external test set",
                scenario.name
            ))
        })?;
        let all: Vec<usize> = (0..ext.len()).collect();
        gather(ext, &all, config)?
    } else {
        gather(table, &test_rows, config)?
    };
    if test_y.is_empty() {
        return Err(Error::Degenerate(format!(
            "scenario {} has an empty test set",
            scenario.name
        )));
    }
    let records: Vec<RunRecord> = (0..plan.n_runs as u64)
        .into_par_iter()
        .map(|i| one_run(table, scenario, config, plan, &pool, &test_x, &test_y, i))
        .collect::<Result<Vec<_>>>()?;
    let stats = run_stats(&records)?;
    Ok((records, stats))
}

/// One scenario-by-configuration grid plus a cross-scenario mean row,
/// with split seeds shared across configurations at equal run index.
#[derive(Debug, Clone, PartialEq)]
pub struct AblationTable {
    pub configs: Vec<FeatureConfig>,
    pub scenarios: Vec<String>,
    /// `grid[s][c]` is the stats for scenario `s` under config `c`.
    pub grid: Vec<Vec<RunStats>>,
    /// Per-config column averages of the scenario means and sds.
    pub mean_row: Vec<MeanCell>,
    pub records: Vec<RunRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanCell {
    pub val_mean: f64,
    pub val_sd: f64,
    pub test_mean: f64,
    pub test_sd: f64,
}

pub fn ablation_study(
    table: &FeatureTable,
    scenarios: &[Scenario],
    configs: &[FeatureConfig],
    plan: &RunPlan,
    external_test: Option<&FeatureTable>,
) -> Result<AblationTable> {
    if scenarios.is_empty() || configs.is_empty() {
        return Err(Error::Config("ablation needs at least one scenario and one configuration".into()));
    }
    let mut grid = Vec::with_capacity(scenarios.len());
    let mut records = Vec::new();
    for scenario in scenarios {
        let mut row = Vec::with_capacity(configs.len());
        for &config in configs {
            let (recs, stats) = run_scenario(table, scenario, config, plan, external_test)?;
            records.extend(recs);
            row.push(stats);
        }
        grid.push(row);
    }
    let n = scenarios.len() as f64;
    let mean_row = (0..configs.len())
        .map(|c| MeanCell {
            val_mean: grid.iter().map(|row| row[c].val_rmse.mean).sum::<f64>() / n,
            val_sd: grid.iter().map(|row| row[c].val_rmse.sd).sum::<f64>() / n,
            test_mean: grid.iter().map(|row| row[c].test_rmse.mean).sum::<f64>() / n,
            test_sd: grid.iter().map(|row| row[c].test_rmse.sd).sum::<f64>() / n,
        })
        .collect();
    Ok(AblationTable {
        configs: configs.to_vec(),
        scenarios: scenarios.iter().map(|s| s.name.clone()).collect(),
        grid,
        mean_row,
        records,
    })
}

/// The `k` records with the smallest validation RMSE; ties break toward
/// the lower seed. Test RMSE plays no part in the ordering.
pub fn select_best_k(records: &[RunRecord], k: usize) -> Result<Vec<RunRecord>> {
    if k == 0 || k > records.len() {
        return Err(Error::Config(format!(
            "cannot select best {k} of {} runs",
            records.len()
        )));
    }
    let mut sorted = records.to_vec();
    sorted.sort_by(|a, b| {
        a.val_rmse
            .total_cmp(&b.val_rmse)
            .then_with(|| a.seed.cmp(&b.seed))
    });
    sorted.truncate(k);
    Ok(sorted)
}

/// Long repeated-run study on one scenario: full-population statistics plus
/// the statistics of the best `k` runs selected by validation RMSE alone.
#[derive(Debug, Clone, PartialEq)]
pub struct RepeatStudy {
    pub records: Vec<RunRecord>,
    pub all: RunStats,
    pub best_k: RunStats,
    pub k: usize,
}

pub fn repeat_study(
    table: &FeatureTable,
    scenario: &Scenario,
    config: FeatureConfig,
    plan: &RunPlan,
    k: usize,
    external_test: Option<&FeatureTable>,
) -> Result<RepeatStudy> {
    let (records, all) = run_scenario(table, scenario, config, plan, external_test)?;
    let best = select_best_k(&records, k)?;
    let best_k = run_stats(&best)?;
    Ok(RepeatStudy { records, all, best_k, k })
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// `runs.csv`: one row per run, in run order. No timestamps, so re-running
/// with the same seeds reproduces the file byte for byte.
pub fn write_runs_csv<W: Write>(records: &[RunRecord], mut w: W) -> Result<()> {
    writeln!(w, "scenario,features,seed,val_rmse,test_rmse,epochs")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.scenario,
            r.feature_config.len(),
            r.seed,
            fmt(r.val_rmse),
            fmt(r.test_rmse),
            r.epochs
        )?;
    }
    Ok(())
}

/// `stats.csv` for one scenario's runs: the classic summary-table rows
/// (min/max/median/mean/sd), one column per metric, plus a best-k mean row
/// when a selection was made.
pub fn write_stats_csv<W: Write>(study: &RepeatStudy, mut w: W) -> Result<()> {
    writeln!(w, "row,val_rmse,test_rmse")?;
    let a = &study.all;
    for (name, v, t) in [
        ("min", a.val_rmse.min, a.test_rmse.min),
        ("max", a.val_rmse.max, a.test_rmse.max),
        ("median", a.val_rmse.median, a.test_rmse.median),
        ("mean", a.val_rmse.mean, a.test_rmse.mean),
        ("sd", a.val_rmse.sd, a.test_rmse.sd),
    ] {
        writeln!(w, "{name},{},{}", fmt(v), fmt(t))?;
    }
    writeln!(
        w,
        "mean_best_{},{},{}",
        study.k,
        fmt(study.best_k.val_rmse.mean),
        fmt(study.best_k.test_rmse.mean)
    )?;
    Ok(())
}

/// `ablation.csv`: one row per scenario and configuration, then one `mean`
/// row per configuration averaging the scenario columns.
pub fn write_ablation_csv<W: Write>(table: &AblationTable, mut w: W) -> Result<()> {
    writeln!(w, "scenario,features,n_runs,val_mean,val_sd,test_mean,test_sd")?;
    for (s, row) in table.scenarios.iter().zip(&table.grid) {
        for (config, stats) in table.configs.iter().zip(row) {
            writeln!(
                w,
                "{s},{},{},{},{},{},{}",
                config.len(),
                stats.n_runs,
                fmt(stats.val_rmse.mean),
                fmt(stats.val_rmse.sd),
                fmt(stats.test_rmse.mean),
                fmt(stats.test_rmse.sd)
            )?;
        }
    }
    for (config, cell) in table.configs.iter().zip(&table.mean_row) {
        writeln!(
            w,
            "mean,{},,{},{},{},{}",
            config.len(),
            fmt(cell.val_mean),
            fmt(cell.val_sd),
            fmt(cell.test_mean),
            fmt(cell.test_sd)
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{build_scenarios, extract_table, gen_synthetic_with, SynthConfig};
    use crate::MEAN_EARTH_RADIUS_M;

    fn small_table(n: usize, seed: u64, noise: f64) -> FeatureTable {
        let samples = gen_synthetic_with(&SynthConfig {
            n,
            seed,
            noise_sd_db: noise,
            n_groups: 3,
            ..SynthConfig::default()
        })
        .unwrap();
        extract_table(&samples, MEAN_EARTH_RADIUS_M).unwrap()
    }

    fn quick_plan(n_runs: usize, base_seed: u64) -> RunPlan {
        RunPlan {
            n_runs,
            base_seed,
            hidden_width: 16,
            dropout_rate: 0.0,
            train: TrainConfig {
                batch_size: 64,
                max_epochs: 12,
                patience: 11,
                ..TrainConfig::default()
            },
            ..RunPlan::default()
        }
    }

    /// A scenario holding out the last group of a 3-group table.
    fn holdout(table: &FeatureTable) -> Scenario {
        let groups: Vec<String> = table.group_set().into_iter().collect();
        build_scenarios(&groups)
            .unwrap()
            .into_iter()
            .find(|s| s.test_groups.contains("area-3"))
            .unwrap()
    }

    #[test]
    fn single_run_stats_degenerate_to_the_value() {
        let table = small_table(400, 1, 1.0);
        let scenario = holdout(&table);
        let (records, stats) =
            run_scenario(&table, &scenario, FeatureConfig::Eight, &quick_plan(1, 10), None)
                .unwrap();
        assert_eq!(records.len(), 1);
        assert_eq!(stats.n_runs, 1);
        assert_eq!(stats.test_rmse.mean, records[0].test_rmse);
        assert_eq!(stats.test_rmse.sd, 0.0);
        assert_eq!(stats.test_rmse.min, stats.test_rmse.max);
        assert_eq!(stats.val_rmse.median, records[0].val_rmse);
        assert!(records[0].test_rmse >= 0.0 && records[0].val_rmse >= 0.0);
    }

    #[test]
    fn reruns_reproduce_records_and_csv_bytes() {
        let table = small_table(400, 2, 1.0);
        let scenario = holdout(&table);
        let plan = quick_plan(3, 77);
        let (r1, s1) = run_scenario(&table, &scenario, FeatureConfig::Four, &plan, None).unwrap();
        let (r2, s2) = run_scenario(&table, &scenario, FeatureConfig::Four, &plan, None).unwrap();
        assert_eq!(s1, s2);
        let strip = |rs: &[RunRecord]| {
            rs.iter()
                .map(|r| (r.seed, r.val_rmse, r.test_rmse, r.epochs))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&r1), strip(&r2));
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_runs_csv(&r1, &mut a).unwrap();
        write_runs_csv(&r2, &mut b).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("scenario,features,seed,val_rmse,test_rmse,epochs\n"));
        assert_eq!(text.lines().count(), 4);
        // A different base seed changes outcomes.
        let other = quick_plan(3, 78);
        let (r3, _) = run_scenario(&table, &scenario, FeatureConfig::Four, &other, None).unwrap();
        assert_ne!(strip(&r1), strip(&r3));
    }

    #[test]
    fn split_seeds_are_paired_across_configs() {
        let table = small_table(400, 3, 1.0);
        let scenario = holdout(&table);
        let plan = quick_plan(2, 500);
        let ablation = ablation_study(
            &table,
            &[scenario],
            &[FeatureConfig::Four, FeatureConfig::Eight],
            &plan,
            None,
        )
        .unwrap();
        let four: Vec<u64> = ablation
            .records
            .iter()
            .filter(|r| r.feature_config == FeatureConfig::Four)
            .map(|r| r.seed)
            .collect();
        let eight: Vec<u64> = ablation
            .records
            .iter()
            .filter(|r| r.feature_config == FeatureConfig::Eight)
            .map(|r| r.seed)
            .collect();
        assert_eq!(four, eight);
        assert_eq!(four, vec![500, 501]);
    }

    #[test]
    fn test_rows_only_touch_final_scoring() {
        // Corrupting the held-out group's labels must leave training
        // untouched: identical validation curves, different test scores.
        let table = small_table(400, 4, 1.0);
        let scenario = holdout(&table);
        let plan = quick_plan(2, 9);
        let (clean, _) = run_scenario(&table, &scenario, FeatureConfig::Six, &plan, None).unwrap();
        let mut poisoned = table.clone();
        for (i, g) in poisoned.groups.iter().enumerate() {
            if scenario.test_groups.contains(g) {
                poisoned.labels[i] += 40.0;
            }
        }
        let (dirty, _) = run_scenario(&poisoned, &scenario, FeatureConfig::Six, &plan, None).unwrap();
        for (c, d) in clean.iter().zip(&dirty) {
            assert_eq!(c.val_rmse, d.val_rmse);
            assert_eq!(c.epochs, d.epochs);
            assert_ne!(c.test_rmse, d.test_rmse);
        }
    }

    #[test]
    fn missing_group_is_a_configuration_error() {
        let table = small_table(200, 5, 1.0);
        let mut scenario = holdout(&table);
        scenario.test_groups.insert("area-99".into());
        let err = run_scenario(&table, &scenario, FeatureConfig::Eight, &quick_plan(1, 1), None)
            .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn external_scenario_requires_external_table() {
        let table = small_table(300, 6, 1.0);
        let groups: Vec<String> = table.group_set().into_iter().collect();
        let no_holdout = build_scenarios(&groups)
            .unwrap()
            .into_iter()
            .find(|s| s.is_external_test())
            .unwrap();
        let plan = quick_plan(1, 3);
        assert!(run_scenario(&table, &no_holdout, FeatureConfig::Eight, &plan, None).is_err());
        let external = small_table(150, 7, 1.0);
        let (records, _) =
            run_scenario(&table, &no_holdout, FeatureConfig::Eight, &plan, Some(&external))
                .unwrap();
        assert_eq!(records.len(), 1);
    }

    fn record(seed: u64, val: f64, test: f64) -> RunRecord {
        RunRecord {
            scenario: "s".into(),
            feature_config: FeatureConfig::Eight,
            seed,
            val_rmse: val,
            test_rmse: test,
            epochs: 1,
            wall_time_s: 0.0,
        }
    }

    #[test]
    fn best_k_selects_on_validation_only() {
        // Validation and test deliberately anti-correlated: selection must
        // follow validation and ignore the tempting test column.
        let records = vec![
            record(1, 3.0, 0.1),
            record(2, 1.0, 9.0),
            record(3, 2.0, 5.0),
        ];
        let best = select_best_k(&records, 2).unwrap();
        assert_eq!(best[0].seed, 2);
        assert_eq!(best[1].seed, 3);
    }

    #[test]
    fn best_k_ties_break_toward_lower_seed() {
        let records = vec![record(9, 1.5, 0.0), record(4, 1.5, 0.0), record(7, 1.5, 0.0)];
        let best = select_best_k(&records, 2).unwrap();
        assert_eq!(best[0].seed, 4);
        assert_eq!(best[1].seed, 7);
    }

    #[test]
    fn best_k_degenerate_and_out_of_range() {
        let records = vec![record(1, 2.0, 1.0), record(2, 1.0, 2.0)];
        let all = select_best_k(&records, 2).unwrap();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].seed, 2);
        assert!(select_best_k(&records, 0).is_err());
        assert!(select_best_k(&records, 3).is_err());
    }

    #[test]
    fn repeat_study_with_k_equal_n_matches_all_stats() {
        let table = small_table(300, 8, 1.0);
        let scenario = holdout(&table);
        let study = repeat_study(
            &table,
            &scenario,
            FeatureConfig::Eight,
            &quick_plan(3, 40),
            3,
            None,
        )
        .unwrap();
        assert_eq!(study.all, study.best_k);
        let mut buf = Vec::new();
        write_stats_csv(&study, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("row,val_rmse,test_rmse\n"));
        for row in ["min,", "max,", "median,", "mean,", "sd,", "mean_best_3,"] {
            assert!(text.lines().any(|l| l.starts_with(row)), "missing row {row}");
        }
    }

    #[test]
    fn summary_orders_min_median_max() {
        let s = MetricSummary::from_values(&[4.0, 1.0, 3.0, 2.0]);
        assert_eq!(s.min, 1.0);
        assert_eq!(s.max, 4.0);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.mean, 2.5);
        let odd = MetricSummary::from_values(&[5.0, 1.0, 3.0]);
        assert_eq!(odd.median, 3.0);
        assert!(s.min <= s.median && s.median <= s.max && s.sd >= 0.0);
    }

    #[test]
    fn ablation_grid_shape_and_mean_row() {
        let table = small_table(450, 9, 1.0);
        let groups: Vec<String> = table.group_set().into_iter().collect();
        let scenarios: Vec<Scenario> = build_scenarios(&groups)
            .unwrap()
            .into_iter()
            .filter(|s| !s.is_external_test())
            .take(2)
            .collect();
        let configs = [FeatureConfig::Four, FeatureConfig::Six];
        let plan = quick_plan(2, 123);
        let ablation = ablation_study(&table, &scenarios, &configs, &plan, None).unwrap();
        assert_eq!(ablation.grid.len(), 2);
        assert_eq!(ablation.grid[0].len(), 2);
        assert_eq!(ablation.records.len(), 8);
        for (c, cell) in ablation.mean_row.iter().enumerate() {
            let expect_mean =
                (ablation.grid[0][c].test_rmse.mean + ablation.grid[1][c].test_rmse.mean) / 2.0;
            assert!((cell.test_mean - expect_mean).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        write_ablation_csv(&ablation, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("scenario,features,n_runs,val_mean,val_sd,test_mean,test_sd\n"));
        // 4 grid rows + 2 mean rows + header.
        assert_eq!(text.lines().count(), 7);
        assert_eq!(text.lines().filter(|l| l.starts_with("mean,")).count(), 2);
    }

    #[test]
    fn repeated_runs_on_learnable_data_are_stable() {
        // Twenty independent runs on a noiseless task, scored on a
        // same-distribution external slice so the spread isolates split and
        // initialization variance. A minority of runs stall on optimization
        // plateaus — that spread is the reason best-k selection exists — so
        // the stability claim is about the runs validation actually picks:
        // the best half must agree within 0.3 dB and beat the full pool.
        let full = small_table(1500, 11, 0.0);
        let mut order: Vec<usize> = (0..full.len()).collect();
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(5);
        for i in (1..order.len()).rev() {
            order.swap(i, rand::Rng::gen_range(&mut rng, 0..=i));
        }
        let take = |idx: &[usize]| FeatureTable {
            groups: idx.iter().map(|&i| full.groups[i].clone()).collect(),
            features: full.features.select_rows(idx),
            labels: idx.iter().map(|&i| full.labels[i]).collect(),
        };
        let table = take(&order[..1100]);
        let external = take(&order[1100..]);
        let groups: Vec<String> = table.group_set().into_iter().collect();
        let scenario = build_scenarios(&groups)
            .unwrap()
            .into_iter()
            .find(|s| s.is_external_test())
            .unwrap();
        let plan = RunPlan {
            n_runs: 20,
            base_seed: 900,
            hidden_width: 32,
            dropout_rate: 0.0,
            train: TrainConfig {
                batch_size: 32,
                learning_rate: 0.003,
                max_epochs: 600,
                patience: 200,
                ..TrainConfig::default()
            },
            ..RunPlan::default()
        };
        let (records, stats) =
            run_scenario(&table, &scenario, FeatureConfig::Eight, &plan, Some(&external)).unwrap();
        let detail = || {
            records
                .iter()
                .map(|r| (r.val_rmse, r.test_rmse, r.epochs))
                .collect::<Vec<_>>()
        };
        let best = run_stats(&select_best_k(&records, 10).unwrap()).unwrap();
        assert!(
            best.test_rmse.sd < 0.3,
            "best-10 test RMSE sd {} (mean {}) runs {:?}",
            best.test_rmse.sd,
            best.test_rmse.mean,
            detail()
        );
        assert!(
            best.test_rmse.mean <= stats.test_rmse.mean,
            "best-10 mean {} vs all-run mean {} runs {:?}",
            best.test_rmse.mean,
            stats.test_rmse.mean,
            detail()
        );
        // Converse check on the same records: the k runs validation ranks
        // worst must not outperform the k it ranks best.
        let mut by_val = records.clone();
        by_val.sort_by(|a, b| a.val_rmse.total_cmp(&b.val_rmse));
        let worst = run_stats(&by_val[10..]).unwrap();
        assert!(best.test_rmse.mean <= worst.test_rmse.mean);
    }
}
