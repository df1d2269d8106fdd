use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::echo::{bistatic_range, RadarConfig};
use crate::error::{Error, Result};

/// Radial velocity between consecutive pulses, taken as half the rate of
/// change of the bistatic path length. Length is one less than the track.
pub fn radial_velocity(track: &[Vector3<f64>], cfg: &RadarConfig) -> Vec<f64> {
    let pri = cfg.pri();
    track
        .windows(2)
        .map(|w| (bistatic_range(&w[1], cfg) - bistatic_range(&w[0], cfg)) / (2.0 * pri))
        .collect()
}

/// Cumulative bulk phase with f_d = −2 v_r / λ.
///
/// `phase[0] = 0` and `phase[m] = Σ_{i<m} 2π f_d[i] T_PRI`, so sample `m`
/// carries the phase accumulated over the first `m` inter-pulse intervals.
pub fn bulk_phase(radial_velocity: &[f64], wavelength: f64, pri: f64) -> Vec<f64> {
    let mut acc = 0.0;
    radial_velocity
        .iter()
        .map(|&v| {
            let here = acc;
            acc += 2.0 * PI * (-2.0 * v / wavelength) * pri;
            here
        })
        .collect()
}

/// `x[m] · exp(−j φ[m])`.
pub fn compensate(x: &[Complex64], phase: &[f64]) -> Result<Vec<Complex64>> {
    if x.len() != phase.len() {
        return Err(Error::invalid(format!(
            "signal has {} samples but phase has {}",
            x.len(),
            phase.len()
        )));
    }
    Ok(x.iter()
        .zip(phase)
        .map(|(v, &p)| v * Complex64::from_polar(1.0, -p))
        .collect())
}
