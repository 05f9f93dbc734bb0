//! Direct-path geometry over a sampled terrain/surface profile.
//!
//! A link is described by regularly spaced surface (DSM) and terrain (DTM)
//! heights along the transmitter-to-receiver cut, plus the antenna heights
//! above ground at each end. The direct path is the straight chord between
//! the two antennas; Earth curvature is accounted for by raising every
//! surface sample by `x (d - x) / (2 R)` relative to that chord, which is
//! equivalent to bulging the Earth under a straight ray.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Mean Earth radius in meters.
pub const MEAN_EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Sampled heights along a Tx-to-Rx cut plus the link parameters.
///
/// Heights in `dsm_m` / `dtm_m` are above sea level; antenna heights are
/// above ground and are converted to absolute heights using the terrain
/// height at the corresponding endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathProfile {
    /// Horizontal distance between consecutive samples, meters.
    pub spacing_m: f64,
    /// Surface heights (terrain plus clutter), meters above sea level.
    pub dsm_m: Vec<f64>,
    /// Bare-earth terrain heights, meters above sea level.
    pub dtm_m: Vec<f64>,
    /// Transmitter antenna height above ground, meters.
    pub tx_height_agl_m: f64,
    /// Receiver antenna height above ground, meters.
    pub rx_height_agl_m: f64,
    pub frequency_mhz: f64,
}

impl PathProfile {
    /// Validates every structural invariant, returning the profile on success.
    pub fn new(
        spacing_m: f64,
        dsm_m: Vec<f64>,
        dtm_m: Vec<f64>,
        tx_height_agl_m: f64,
        rx_height_agl_m: f64,
        frequency_mhz: f64,
    ) -> Result<Self> {
        let p = Self {
            spacing_m,
            dsm_m,
            dtm_m,
            tx_height_agl_m,
            rx_height_agl_m,
            frequency_mhz,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_m.is_finite() && self.spacing_m > 0.0) {
            return Err(Error::InvalidProfile(format!(
                "spacing_m must be positive, got {}",
                self.spacing_m
            )));
        }
        if self.dsm_m.len() != self.dtm_m.len() {
            return Err(Error::InvalidProfile(format!(
                "dsm_m has {} samples but dtm_m has {}",
                self.dsm_m.len(),
                self.dtm_m.len()
            )));
        }
        if self.dsm_m.len() < 2 {
            return Err(Error::InvalidProfile(format!(
                "profile needs at least 2 samples, got {}",
                self.dsm_m.len()
            )));
        }
        for (i, (&s, &t)) in self.dsm_m.iter().zip(&self.dtm_m).enumerate() {
            if !s.is_finite() || !t.is_finite() {
                return Err(Error::InvalidProfile(format!(
                    "non-finite height at sample {i}"
                )));
            }
            if s < t {
                return Err(Error::InvalidProfile(format!(
                    "dsm_m[{i}] = {s} is below dtm_m[{i}] = {t}"
                )));
            }
        }
        for (name, v) in [
            ("tx_height_agl_m", self.tx_height_agl_m),
            ("rx_height_agl_m", self.rx_height_agl_m),
            ("frequency_mhz", self.frequency_mhz),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.dsm_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dsm_m.is_empty()
    }

    /// Total horizontal Tx-to-Rx distance, meters.
    pub fn total_distance_m(&self) -> f64 {
        self.spacing_m * (self.len() - 1) as f64
    }

    /// Absolute transmitter antenna height (terrain at the Tx end plus AGL height).
    pub fn tx_height_asl_m(&self) -> f64 {
        self.dtm_m[0] + self.tx_height_agl_m
    }

    /// Absolute receiver antenna height (terrain at the Rx end plus AGL height).
    pub fn rx_height_asl_m(&self) -> f64 {
        self.dtm_m[self.len() - 1] + self.rx_height_agl_m
    }

    /// The same link viewed from the receiver end.
    pub fn reversed(&self) -> Self {
        let mut dsm = self.dsm_m.clone();
        let mut dtm = self.dtm_m.clone();
        dsm.reverse();
        dtm.reverse();
        Self {
            spacing_m: self.spacing_m,
            dsm_m: dsm,
            dtm_m: dtm,
            tx_height_agl_m: self.rx_height_agl_m,
            rx_height_agl_m: self.tx_height_agl_m,
            frequency_mhz: self.frequency_mhz,
        }
    }
}

/// Clearance of the direct path above the curvature-corrected surface.
///
/// `clearance_m[i]` is the height of the direct path above the corrected DSM
/// at `x_m[i]`; negative values mean the path is obstructed there. The first
/// and last samples carry the antennas and are exempt from obstruction
/// detection regardless of their stored clearance value.
#[derive(Debug, Clone, PartialEq)]
pub struct ClearanceProfile {
    /// Horizontal offsets from the transmitter, meters. Starts at 0, ends at `d`.
    pub x_m: Vec<f64>,
    /// Direct-path height minus corrected DSM height, meters.
    pub clearance_m: Vec<f64>,
    /// Ratio of slant path length to horizontal length, `>= 1`.
    pub slant_factor: f64,
}

impl ClearanceProfile {
    pub fn len(&self) -> usize {
        self.x_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_m.is_empty()
    }

    /// Horizontal Tx-to-Rx distance, meters.
    pub fn total_distance_m(&self) -> f64 {
        *self.x_m.last().expect("non-empty profile")
    }

    /// Length of the direct path measured along its slant, meters.
    pub fn slant_length_m(&self) -> f64 {
        self.total_distance_m() * self.slant_factor
    }

    pub fn spacing_m(&self) -> f64 {
        self.total_distance_m() / (self.len() - 1) as f64
    }
}

/// Height added to an obstruction at horizontal offset `x` on a link of
/// length `d` to account for Earth curvature relative to the straight chord.
///
/// Zero at both endpoints, maximal mid-link. `radius` may be `f64::INFINITY`
/// to disable the correction.
pub fn curvature_drop(x: f64, d: f64, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    if !(0.0..=d).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [0, {d}]")));
    }
    Ok(x * (d - x) / (2.0 * radius))
}

/// Heights of the direct path (the straight Tx-to-Rx chord) at each sample.
pub fn direct_path_heights(profile: &PathProfile) -> Result<Vec<f64>> {
    profile.validate()?;
    let n = profile.len();
    let d = profile.total_distance_m();
    let h_tx = profile.tx_height_asl_m();
    let h_rx = profile.rx_height_asl_m();
    Ok((0..n)
        .map(|i| {
            let t = (i as f64 * profile.spacing_m) / d;
            h_tx + (h_rx - h_tx) * t
        })
        .collect())
}

/// Clearance of the direct path over the curvature-corrected surface at each
/// sample, plus the slant factor of the chord.
pub fn clearance_profile(profile: &PathProfile, radius: f64) -> Result<ClearanceProfile> {
    let line = direct_path_heights(profile)?;
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("radius must be positive, got {radius}")));
    }
    let d = profile.total_distance_m();
    let n = profile.len();
    let mut x_m = Vec::with_capacity(n);
    let mut clearance_m = Vec::with_capacity(n);
    for i in 0..n {
        let x = i as f64 * profile.spacing_m;
        let drop = x * (d - x) / (2.0 * radius);
        x_m.push(x);
        clearance_m.push(line[i] - (profile.dsm_m[i] + drop));
    }
    // Pin the exact endpoint offset so x_m[last] == d regardless of rounding.
    x_m[n - 1] = d;

    let rise = profile.rx_height_asl_m() - profile.tx_height_asl_m();
    let slant_factor = (1.0 + (rise / d).powi(2)).sqrt();
    Ok(ClearanceProfile {
        x_m,
        clearance_m,
        slant_factor,
    })
}
