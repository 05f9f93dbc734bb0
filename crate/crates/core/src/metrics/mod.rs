//! Evaluation statistics and figure-data emission.
//!
//! Scalar error metrics, error binned by link distance or carrier frequency,
//! a hexagonal 2-D histogram for dense prediction-vs-truth clouds, and the
//! free-space baseline every model has to beat.

mod hexbin;

pub use hexbin::{hexbin, write_hexbin_csv, HexBinGrid, HexCell};

use crate::error::{Error, Result};

/// Free-space path loss in dB, km/MHz constant form:
/// `32.45 + 20 log10(d_km) + 20 log10(f_MHz)`.
pub fn fspl(frequency_mhz: f64, distance_m: f64) -> Result<f64> {
    if !(frequency_mhz > 0.0) {
        return Err(Error::Domain(format!(
            "fspl frequency must be positive, got {frequency_mhz}"
        )));
    }
    if !(distance_m > 0.0) {
        return Err(Error::Domain(format!(
            "fspl distance must be positive, got {distance_m}"
        )));
    }
    Ok(32.45 + 20.0 * (distance_m / 1000.0).log10() + 20.0 * frequency_mhz.log10())
}

fn check_pair(pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.is_empty() {
        return Err(Error::Shape("metric over empty vectors".into()));
    }
    if pred.len() != target.len() {
        return Err(Error::Shape(format!(
            "metric length mismatch: {} vs {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(())
}

/// Root-mean-square error in dB.
pub fn rmse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let ss: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((ss / pred.len() as f64).sqrt())
}

/// Mean absolute error in dB.
pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let sa: f64 = pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum();
    Ok(sa / pred.len() as f64)
}

/// Coefficient of determination, `1 - SS_res / SS_tot`.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<f64> {
    check_pair(pred, target)?;
    let mean = target.iter().sum::<f64>() / target.len() as f64;
    let ss_tot: f64 = target.iter().map(|t| (t - mean) * (t - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Degenerate("r_squared target has zero variance".into()));
    }
    let ss_res: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Pearson correlation coefficient in [-1, 1].
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::Degenerate("pearson over a constant input".into()));
    }
    Ok(cov / (vx.sqrt() * vy.sqrt()))
}

/// Key of one error bin: a half-open distance range or an exact frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BinKey {
    /// `[low, high)` in meters.
    Range { low_m: f64, high_m: f64 },
    /// Exact carrier frequency in MHz.
    Exact { frequency_mhz: f64 },
}

/// One bin of the error analysis. `sd_db` is the population SD of the
/// absolute error within the bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorBin {
    pub key: BinKey,
    pub count: usize,
    pub mae_db: f64,
    pub sd_db: f64,
}

/// Binned absolute-error summary; bins are ordered and non-empty.
#[derive(Debug, Clone, PartialEq)]
pub struct BinnedError {
    pub bins: Vec<ErrorBin>,
}

fn abs_error_stats(errors: &[f64]) -> (f64, f64) {
    let n = errors.len() as f64;
    let mean = errors.iter().sum::<f64>() / n;
    let var = errors.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Absolute prediction error grouped into fixed-width distance bins
/// anchored at zero. Empty bins are omitted.
pub fn bin_abs_error_by_distance(
    distances_m: &[f64],
    pred: &[f64],
    target: &[f64],
    bin_width_m: f64,
) -> Result<BinnedError> {
    check_pair(pred, target)?;
    check_pair(distances_m, target)?;
    if !(bin_width_m > 0.0) {
        return Err(Error::Domain(format!(
            "bin width must be positive, got {bin_width_m}"
        )));
    }
    let mut buckets: std::collections::BTreeMap<u64, Vec<f64>> = Default::default();
    for ((d, p), t) in distances_m.iter().zip(pred).zip(target) {
        if !(*d >= 0.0) {
            return Err(Error::Domain(format!("negative link distance {d}")));
        }
        let idx = (d / bin_width_m).floor() as u64;
        buckets.entry(idx).or_default().push((p - t).abs());
    }
    let bins = buckets
        .into_iter()
        .map(|(idx, errors)| {
            let (mae_db, sd_db) = abs_error_stats(&errors);
            ErrorBin {
                key: BinKey::Range {
                    low_m: idx as f64 * bin_width_m,
                    high_m: (idx + 1) as f64 * bin_width_m,
                },
                count: errors.len(),
                mae_db,
                sd_db,
            }
        })
        .collect();
    Ok(BinnedError { bins })
}

/// Absolute prediction error grouped by exact frequency value, ascending.
pub fn abs_error_by_frequency(
    frequencies_mhz: &[f64],
    pred: &[f64],
    target: &[f64],
) -> Result<BinnedError> {
    check_pair(pred, target)?;
    check_pair(frequencies_mhz, target)?;
    let mut buckets: std::collections::BTreeMap<u64, (f64, Vec<f64>)> = Default::default();
    for ((f, p), t) in frequencies_mhz.iter().zip(pred).zip(target) {
        if !f.is_finite() {
            return Err(Error::Domain(format!("non-finite frequency {f}")));
        }
        // Non-negative floats order the same as their bit patterns.
        buckets
            .entry(f.to_bits())
            .or_insert_with(|| (*f, Vec::new()))
            .1
            .push((p - t).abs());
    }
    let bins = buckets
        .into_values()
        .map(|(f, errors)| {
            let (mae_db, sd_db) = abs_error_stats(&errors);
            ErrorBin {
                key: BinKey::Exact { frequency_mhz: f },
                count: errors.len(),
                mae_db,
                sd_db,
            }
        })
        .collect();
    Ok(BinnedError { bins })
}

/// Writes `bin_low,bin_high,count,mae_db,sd_db` rows for distance bins.
pub fn write_distance_bins_csv<W: std::io::Write>(binned: &BinnedError, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["bin_low", "bin_high", "count", "mae_db", "sd_db"])?;
    for bin in &binned.bins {
        let BinKey::Range { low_m, high_m } = bin.key else {
            return Err(Error::Shape("distance CSV over frequency bins".into()));
        };
        wtr.write_record([
            format!("{low_m}"),
            format!("{high_m}"),
            format!("{}", bin.count),
            format!("{}", bin.mae_db),
            format!("{}", bin.sd_db),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Writes `frequency_mhz,count,mae_db,sd_db` rows for frequency groups.
pub fn write_frequency_bins_csv<W: std::io::Write>(binned: &BinnedError, w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["frequency_mhz", "count", "mae_db", "sd_db"])?;
    for bin in &binned.bins {
        let BinKey::Exact { frequency_mhz } = bin.key else {
            return Err(Error::Shape("frequency CSV over distance bins".into()));
        };
        wtr.write_record([
            format!("{frequency_mhz}"),
            format!("{}", bin.count),
            format!("{}", bin.mae_db),
            format!("{}", bin.sd_db),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}
