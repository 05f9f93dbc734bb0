//! The eight scalar obstruction features of a link.
//!
//! All features derive from the intersection of the direct path with the
//! curvature-corrected surface profile. Depths and distances (F3-F8) are
//! measured along the slant of the direct path; F2 is the horizontal
//! Tx-to-Rx distance. Every feature is invariant under reversing the link
//! direction.
//!
//! The endpoint samples carry the antennas and are never counted as
//! obstructed. When an endpoint's stored clearance is negative while its
//! neighbor starts a block, the block edge clamps to the endpoint.

use crate::error::{Error, Result};
use crate::profile::{clearance_profile, ClearanceProfile, PathProfile};
use serde::{Deserialize, Serialize};

/// A maximal contiguous obstructed interval along the direct path.
///
/// Bounds are slant distances from the transmitter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub start_slant_m: f64,
    pub end_slant_m: f64,
}

impl Block {
    pub fn depth_m(&self) -> f64 {
        self.end_slant_m - self.start_slant_m
    }
}

/// Which leading subset of the eight features a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureConfig {
    Four,
    Six,
    Eight,
}

impl FeatureConfig {
    pub fn len(self) -> usize {
        match self {
            FeatureConfig::Four => 4,
            FeatureConfig::Six => 6,
            FeatureConfig::Eight => 8,
        }
    }

    pub const ALL: [FeatureConfig; 3] = [FeatureConfig::Four, FeatureConfig::Six, FeatureConfig::Eight];
}

impl TryFrom<usize> for FeatureConfig {
    type Error = Error;

    fn try_from(n: usize) -> Result<Self> {
        match n {
            4 => Ok(FeatureConfig::Four),
            6 => Ok(FeatureConfig::Six),
            8 => Ok(FeatureConfig::Eight),
            other => Err(Error::Config(format!(
                "feature config must be 4, 6 or 8, got {other}"
            ))),
        }
    }
}

impl std::fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.len())
    }
}

/// The eight scalar features of one link.
///
/// When the link is unobstructed (`f5 == 0`): F3, F4, F6 are zero and F7, F8
/// both equal the slant length of the link (the nearest obstruction lies
/// beyond the receiver).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// F1: carrier frequency, MHz.
    pub f1_frequency_mhz: f64,
    /// F2: horizontal Tx-to-Rx distance, meters.
    pub f2_distance_m: f64,
    /// F3: total obstruction depth along the slant path, meters.
    pub f3_total_depth_m: f64,
    /// F4: slant distance from the first block onset to the last block offset, meters.
    pub f4_first_last_span_m: f64,
    /// F5: number of contiguous blocks (integer count carried as a real).
    pub f5_block_count: f64,
    /// F6: average block depth, meters (`f3 / f5`, zero when unobstructed).
    pub f6_avg_block_depth_m: f64,
    /// F7: smaller of (Tx to first onset, Rx to last offset) slant distances, meters.
    pub f7_min_edge_dist_m: f64,
    /// F8: larger of the same pair, meters.
    pub f8_max_edge_dist_m: f64,
}

impl FeatureVector {
    pub fn to_array(self) -> [f64; 8] {
        [
            self.f1_frequency_mhz,
            self.f2_distance_m,
            self.f3_total_depth_m,
            self.f4_first_last_span_m,
            self.f5_block_count,
            self.f6_avg_block_depth_m,
            self.f7_min_edge_dist_m,
            self.f8_max_edge_dist_m,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            f1_frequency_mhz: a[0],
            f2_distance_m: a[1],
            f3_total_depth_m: a[2],
            f4_first_last_span_m: a[3],
            f5_block_count: a[4],
            f6_avg_block_depth_m: a[5],
            f7_min_edge_dist_m: a[6],
            f8_max_edge_dist_m: a[7],
        }
    }
}

/// F1..Fk in fixed order for the chosen configuration.
pub fn select_config(fv: &FeatureVector, config: FeatureConfig) -> Vec<f64> {
    fv.to_array()[..config.len()].to_vec()
}

/// Where the linear clearance between two samples crosses zero going
/// downward (`c_prev >= 0 > c_cur`). A negative `c_prev` only occurs at an
/// exempt endpoint; the edge then clamps to that sample.
fn onset_crossing(x_prev: f64, x_cur: f64, c_prev: f64, c_cur: f64) -> f64 {
    if !c_prev.is_finite() || c_prev <= 0.0 {
        return x_prev;
    }
    x_prev + (x_cur - x_prev) * (c_prev / (c_prev - c_cur))
}

/// Upward zero crossing (`c_cur < 0 <= c_next`), clamped to the exempt
/// endpoint when the neighbor is itself below the line.
fn offset_crossing(x_cur: f64, x_next: f64, c_cur: f64, c_next: f64) -> f64 {
    if !c_next.is_finite() || c_next < 0.0 {
        return x_next;
    }
    x_cur + (x_next - x_cur) * (c_cur / (c_cur - c_next))
}

/// Maximal runs of negative clearance, with sub-sample edges located by
/// linear interpolation of the zero crossing and converted to slant
/// distances. Blocks are disjoint and ordered by start.
pub fn detect_blocks(cp: &ClearanceProfile) -> Vec<Block> {
    let n = cp.len();
    if n < 3 {
        return Vec::new();
    }
    let c = &cp.clearance_m;
    let mut blocks = Vec::new();
    let mut run_start: Option<usize> = None;
    // Interior samples only: indices 0 and n-1 host the antennas.
    for i in 1..n - 1 {
        let obstructed = c[i] < 0.0;
        match (obstructed, run_start) {
            (true, None) => run_start = Some(i),
            (false, Some(s)) => {
                blocks.push(interpolated_block(cp, s, i - 1));
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = run_start {
        blocks.push(interpolated_block(cp, s, n - 2));
    }
    debug_assert!(blocks.windows(2).all(|w| w[0].end_slant_m <= w[1].start_slant_m));
    blocks
}

fn interpolated_block(cp: &ClearanceProfile, first: usize, last: usize) -> Block {
    let x = &cp.x_m;
    let c = &cp.clearance_m;
    let start = onset_crossing(x[first - 1], x[first], c[first - 1], c[first]);
    let end = offset_crossing(x[last], x[last + 1], c[last], c[last + 1]);
    Block {
        start_slant_m: start * cp.slant_factor,
        end_slant_m: end * cp.slant_factor,
    }
}

/// The eight features of Table-style order F1..F8 for one link.
pub fn extract_features(profile: &PathProfile, radius: f64) -> Result<FeatureVector> {
    let cp = clearance_profile(profile, radius)?;
    let blocks = detect_blocks(&cp);
    Ok(features_from_blocks(profile, &cp, &blocks))
}

fn features_from_blocks(
    profile: &PathProfile,
    cp: &ClearanceProfile,
    blocks: &[Block],
) -> FeatureVector {
    let slant_len = cp.slant_length_m();
    let f1 = profile.frequency_mhz;
    let f2 = cp.total_distance_m();
    if blocks.is_empty() {
        return FeatureVector {
            f1_frequency_mhz: f1,
            f2_distance_m: f2,
            f3_total_depth_m: 0.0,
            f4_first_last_span_m: 0.0,
            f5_block_count: 0.0,
            f6_avg_block_depth_m: 0.0,
            f7_min_edge_dist_m: slant_len,
            f8_max_edge_dist_m: slant_len,
        };
    }
    let total_depth: f64 = blocks.iter().map(Block::depth_m).sum();
    let first = blocks.first().expect("non-empty");
    let last = blocks.last().expect("non-empty");
    let tx_to_first = first.start_slant_m;
    let rx_to_last = slant_len - last.end_slant_m;
    FeatureVector {
        f1_frequency_mhz: f1,
        f2_distance_m: f2,
        f3_total_depth_m: total_depth,
        f4_first_last_span_m: last.end_slant_m - first.start_slant_m,
        f5_block_count: blocks.len() as f64,
        f6_avg_block_depth_m: total_depth / blocks.len() as f64,
        f7_min_edge_dist_m: tx_to_first.min(rx_to_last),
        f8_max_edge_dist_m: tx_to_first.max(rx_to_last),
    }
}

/// Brute-force total obstructed slant length from a fine resampling of the
/// clearance function.
///
/// The surface is linearly interpolated at `refine` subdivisions per coarse
/// interval, the chord and curvature terms are evaluated directly, and the
/// obstructed length is accumulated from fine intervals whose midpoint
/// clearance is negative. This path shares no code with [`detect_blocks`]
/// and serves as ground truth for convergence tests.
pub fn oracle_total_depth(profile: &PathProfile, radius: f64, refine: usize) -> Result<f64> {
    Ok(oracle_scan(profile, radius, refine)?.total_depth_m)
}

/// Number of obstructed runs seen by the same fine resampling as
/// [`oracle_total_depth`].
pub fn oracle_block_count(profile: &PathProfile, radius: f64, refine: usize) -> Result<usize> {
    Ok(oracle_scan(profile, radius, refine)?.block_count)
}

struct OracleScan {
    total_depth_m: f64,
    block_count: usize,
}

fn oracle_scan(profile: &PathProfile, radius: f64, refine: usize) -> Result<OracleScan> {
    profile.validate()?;
    if refine < 1 {
        return Err(Error::Domain(format!("refine must be >= 1, got {refine}")));
    }
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let n = profile.len();
    let d = profile.total_distance_m();
    let spacing = profile.spacing_m;
    let h_tx = profile.tx_height_asl_m();
    let h_rx = profile.rx_height_asl_m();
    let slant_factor = (1.0 + ((h_rx - h_tx) / d).powi(2)).sqrt();
    let fine_dx = spacing / refine as f64;

    let mut total = 0.0;
    let mut count = 0usize;
    let mut in_block = false;
    for coarse in 0..n - 1 {
        let (s0, s1) = (profile.dsm_m[coarse], profile.dsm_m[coarse + 1]);
        for sub in 0..refine {
            // Midpoint of the fine interval, in [0, spacing) offsets.
            let frac = (sub as f64 + 0.5) / refine as f64;
            let x = (coarse as f64 + frac) * spacing;
            let line = h_tx + (h_rx - h_tx) * (x / d);
            let surface = s0 + (s1 - s0) * frac + x * (d - x) / (2.0 * radius);
            if line - surface < 0.0 {
                total += fine_dx;
                if !in_block {
                    count += 1;
                    in_block = true;
                }
            } else {
                in_block = false;
            }
        }
    }
    Ok(OracleScan {
        total_depth_m: total * slant_factor,
        block_count: count,
    })
}
