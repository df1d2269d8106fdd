//! Bistatic FMCW beat-signal synthesis.

use std::f64::consts::PI;
use std::fmt;

use nalgebra::Vector3;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kinematics::{ActivityParams, BodyModel, Trajectory};
use crate::matrix::ComplexMatrix;
use crate::rng::GaussianStream;
use crate::{par, SPEED_OF_LIGHT};

// floor() of products like 10 MHz * 40 us must not lose a sample to rounding.
const COUNT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct RadarConfig {
    /// Chirp start frequency f_c, Hz.
    pub carrier_frequency: f64,
    pub bandwidth: f64,
    /// Chirp duration T_p, s.
    pub pulse_duration: f64,
    pub sampling_frequency: f64,
    pub prf: f64,
    pub tx_position: Vector3<f64>,
    pub rx_position: Vector3<f64>,
    pub antenna_gain_dbi: f64,
    pub antenna_isolation_db: f64,
    /// Signal-to-noise ratio in dB; `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub duration: f64,
    /// Adds the static TX→RX leakage tone.
    pub direct_coupling: bool,
}

impl RadarConfig {
    /// 77 GHz free-space preset.
    pub fn free_space() -> Self {
        Self {
            carrier_frequency: 77e9,
            bandwidth: 4e9,
            pulse_duration: 40e-6,
            sampling_frequency: 10e6,
            prf: 5000.0,
            tx_position: Vector3::new(0.4, -0.1, 1.5),
            rx_position: Vector3::new(0.4, 0.1, 1.5),
            antenna_gain_dbi: 6.0,
            antenna_isolation_db: 10.0,
            snr_db: 30.0,
            duration: 4.0,
            direct_coupling: true,
        }
    }

    /// 2 GHz through-the-wall preset.
    pub fn through_wall() -> Self {
        Self {
            carrier_frequency: 2e9,
            bandwidth: 1e9,
            prf: 128.0,
            ..Self::free_space()
        }
    }

    pub fn chirp_rate(&self) -> f64 {
        self.bandwidth / self.pulse_duration
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// N_ADC, fast-time samples per pulse.
    pub fn adc_samples(&self) -> usize {
        (self.sampling_frequency * self.pulse_duration + COUNT_EPS).floor() as usize
    }

    /// M, number of pulses.
    pub fn pulses(&self) -> usize {
        (self.duration * self.prf + COUNT_EPS).floor() as usize
    }

    pub fn sample_interval(&self) -> f64 {
        1.0 / self.sampling_frequency
    }

    pub fn pri(&self) -> f64 {
        1.0 / self.prf
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("pulse_duration", self.pulse_duration),
            ("sampling_frequency", self.sampling_frequency),
            ("prf", self.prf),
            ("duration", self.duration),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if self.adc_samples() < 2 {
            return Err(Error::invalid(format!(
                "sampling_frequency * pulse_duration must give at least 2 samples, got {}",
                self.adc_samples()
            )));
        }
        if self.prf * self.pulse_duration > 1.0 + COUNT_EPS {
            return Err(Error::invalid(format!(
                "prf * pulse_duration must not exceed 1, got {}",
                self.prf * self.pulse_duration
            )));
        }
        if self.pulses() == 0 {
            return Err(Error::invalid("duration * prf gives zero pulses"));
        }
        for (name, p) in [("tx_position", &self.tx_position), ("rx_position", &self.rx_position)] {
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite")));
            }
        }
        for (name, v) in [
            ("antenna_gain", self.antenna_gain_dbi),
            ("antenna_isolation", self.antenna_isolation_db),
        ] {
            if !v.is_finite() {
                return Err(Error::invalid(format!("{name} must be finite, got {v}")));
            }
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::invalid(format!("snr must be a number of dB, got {}", self.snr_db)));
        }
        Ok(())
    }
}

/// Axis-aligned dielectric slab.
#[derive(Debug, Clone, PartialEq)]
pub struct WallConfig {
    pub center: Vector3<f64>,
    /// (thickness along x, width along y, height along z), m.
    pub dimensions: Vector3<f64>,
    pub epsilon_r: f64,
    pub loss_tangent: f64,
}

impl WallConfig {
    pub fn through_wall() -> Self {
        Self {
            center: Vector3::new(1.0, 0.0, 1.25),
            dimensions: Vector3::new(0.24, 5.0, 2.5),
            epsilon_r: 6.0,
            loss_tangent: 0.03,
        }
    }

    pub fn thickness(&self) -> f64 {
        self.dimensions.x
    }

    pub fn validate(&self) -> Result<()> {
        if !self.center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("wall center must be finite"));
        }
        if !self.dimensions.iter().all(|d| d.is_finite() && *d > 0.0) {
            return Err(Error::invalid(format!(
                "wall dimensions must be positive, got {:?}",
                self.dimensions.as_slice()
            )));
        }
        if !(self.epsilon_r >= 1.0 && self.epsilon_r.is_finite()) {
            return Err(Error::invalid(format!("epsilon_r must be >= 1, got {}", self.epsilon_r)));
        }
        if !(self.loss_tangent >= 0.0 && self.loss_tangent.is_finite()) {
            return Err(Error::invalid(format!(
                "loss_tangent must be >= 0, got {}",
                self.loss_tangent
            )));
        }
        Ok(())
    }

    /// Attenuation constant α = π f_c √ε_r tanδ / c, Np/m.
    pub fn attenuation_constant(&self, carrier_frequency: f64) -> f64 {
        PI * carrier_frequency * self.epsilon_r.sqrt() * self.loss_tangent / SPEED_OF_LIGHT
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let half = self.dimensions / 2.0;
        (0..3).all(|k| (p[k] - self.center[k]).abs() < half[k])
    }

    /// Whether the segment `a`→`b` passes through the slab.
    pub fn intersects_segment(&self, a: &Vector3<f64>, b: &Vector3<f64>) -> bool {
        let half = self.dimensions / 2.0;
        let lo = self.center - half;
        let hi = self.center + half;
        let d = b - a;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for k in 0..3 {
            if d[k].abs() < 1e-15 {
                if a[k] <= lo[k] || a[k] >= hi[k] {
                    return false;
                }
            } else {
                let (mut ta, mut tb) = ((lo[k] - a[k]) / d[k], (hi[k] - a[k]) / d[k]);
                if ta > tb {
                    std::mem::swap(&mut ta, &mut tb);
                }
                t0 = t0.max(ta);
                t1 = t1.min(tb);
                if t0 >= t1 {
                    return false;
                }
            }
        }
        true
    }
}

/// Transmitted phase 2π f_c t̂ + π K t̂² within one chirp.
pub fn tx_phase(t_hat: f64, cfg: &RadarConfig) -> Result<f64> {
    if !(0.0..=cfg.pulse_duration).contains(&t_hat) {
        return Err(Error::invalid(format!(
            "fast time {t_hat} s is outside the pulse [0, {}] s",
            cfg.pulse_duration
        )));
    }
    Ok(2.0 * PI * cfg.carrier_frequency * t_hat + PI * cfg.chirp_rate() * t_hat * t_hat)
}

/// TX→p→RX path length.
pub fn bistatic_range(p: &Vector3<f64>, cfg: &RadarConfig) -> f64 {
    (p - cfg.tx_position).norm() + (p - cfg.rx_position).norm()
}

/// Received amplitude of a point scatterer from the bistatic radar equation,
/// attenuated by `crossings` passes through `wall`.
pub fn scatterer_amplitude(
    rcs: f64,
    r_tx: f64,
    r_rx: f64,
    cfg: &RadarConfig,
    wall: Option<&WallConfig>,
    crossings: u32,
) -> Result<f64> {
    if !(r_tx > 0.0 && r_rx > 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "scatterer at zero range (R_tx = {r_tx}, R_rx = {r_rx})"
        )));
    }
    let gain = 10f64.powf(cfg.antenna_gain_dbi / 10.0);
    let lambda = cfg.wavelength();
    let free = (gain * gain * lambda * lambda * rcs).sqrt() / ((4.0 * PI).powf(1.5) * r_tx * r_rx);
    let loss = match wall {
        Some(w) if crossings > 0 => {
            (-w.attenuation_constant(cfg.carrier_frequency) * w.thickness() * crossings as f64).exp()
        }
        _ => 1.0,
    };
    Ok(free * loss)
}

/// Excess one-way delay of `crossings` normal-incidence passes through the slab.
pub fn wall_extra_delay(wall: &WallConfig, crossings: u32) -> f64 {
    crossings as f64 * (wall.epsilon_r.sqrt() - 1.0) * wall.thickness() / SPEED_OF_LIGHT
}

/// Residual video phase π K τ² dropped by the beat-signal approximation.
pub fn residual_video_phase(tau: f64, cfg: &RadarConfig) -> f64 {
    PI * cfg.chirp_rate() * tau * tau
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryWarning {
    BehindRadar { scatterer: usize, time: f64 },
    InsideWall { scatterer: usize, time: f64 },
}

impl fmt::Display for GeometryWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryWarning::BehindRadar { scatterer, time } => {
                write!(f, "scatterer {} is behind the radar plane at t = {time:.4} s", scatterer + 1)
            }
            GeometryWarning::InsideWall { scatterer, time } => {
                write!(f, "scatterer {} is inside the wall at t = {time:.4} s", scatterer + 1)
            }
        }
    }
}

/// N_ADC × M beat-signal matrix with its axis steps.
#[derive(Debug, Clone)]
pub struct RawData {
    pub samples: ComplexMatrix,
    /// T_s, s.
    pub fast_time_step: f64,
    /// T_PRI, s.
    pub slow_time_step: f64,
    /// σ_n², zero when noiseless.
    pub noise_power: f64,
    /// First occurrence of each kind of geometry problem.
    pub warnings: Vec<GeometryWarning>,
}

impl RawData {
    pub fn steps(&self) -> (f64, f64) {
        (self.fast_time_step, self.slow_time_step)
    }
}

/// One echo path: amplitude and delay at a pulse.
#[derive(Debug, Clone, Copy)]
struct Path {
    amplitude: f64,
    delay: f64,
}

fn paths_at(
    positions: &[Vector3<f64>],
    rcs: &[f64],
    cfg: &RadarConfig,
    wall: Option<&WallConfig>,
) -> Result<Vec<Path>> {
    positions
        .iter()
        .zip(rcs)
        .map(|(p, &sigma)| {
            let r_tx = (p - cfg.tx_position).norm();
            let r_rx = (p - cfg.rx_position).norm();
            let crossings = wall.map_or(0, |w| {
                w.intersects_segment(&cfg.tx_position, p) as u32
                    + w.intersects_segment(p, &cfg.rx_position) as u32
            });
            let extra = wall.map_or(0.0, |w| wall_extra_delay(w, crossings));
            Ok(Path {
                amplitude: scatterer_amplitude(sigma, r_tx, r_rx, cfg, wall, crossings)?,
                delay: (r_tx + r_rx) / SPEED_OF_LIGHT + extra,
            })
        })
        .collect()
}

// Re-anchors the phasor recursion every this many samples.
const RESYNC: usize = 32;

/// Adds A·exp(−j2π(f_c τ + K τ n T_s)) to `column`.
fn add_tone(column: &mut [Complex64], path: Path, cfg: &RadarConfig) {
    let step_phase = -2.0 * PI * cfg.chirp_rate() * path.delay * cfg.sample_interval();
    let start_phase = -2.0 * PI * cfg.carrier_frequency * path.delay;
    let step = Complex64::from_polar(1.0, step_phase);
    for (block, chunk) in column.chunks_mut(RESYNC).enumerate() {
        let n0 = (block * RESYNC) as f64;
        let mut z = Complex64::from_polar(path.amplitude, start_phase + step_phase * n0);
        for v in chunk {
            *v += z;
            z *= step;
        }
    }
}

/// Clean and noisy synthesis from sampled scatterer tracks.
pub fn synthesize_trajectory(
    traj: &Trajectory,
    cfg: &RadarConfig,
    wall: Option<&WallConfig>,
    seed: u64,
) -> Result<RawData> {
    cfg.validate()?;
    if let Some(w) = wall {
        w.validate()?;
    }
    traj.check_finite()?;
    let rows = cfg.adc_samples();
    let cols = traj.pulses();
    if cols == 0 {
        return Err(Error::invalid("trajectory has no pulses"));
    }

    let mut warnings = Vec::new();
    let radar_x = cfg.tx_position.x.max(cfg.rx_position.x);
    'behind: for (m, row) in traj.positions.iter().enumerate() {
        for (i, p) in row.iter().enumerate() {
            if p.x <= radar_x {
                warnings.push(GeometryWarning::BehindRadar { scatterer: i, time: traj.times[m] });
                break 'behind;
            }
        }
    }
    if let Some(w) = wall {
        'inside: for (m, row) in traj.positions.iter().enumerate() {
            for (i, p) in row.iter().enumerate() {
                if w.contains(p) {
                    warnings.push(GeometryWarning::InsideWall { scatterer: i, time: traj.times[m] });
                    break 'inside;
                }
            }
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }

    let paths: Vec<Vec<Path>> = par::map_slice(&traj.positions, |row| paths_at(row, &traj.rcs, cfg, wall))
        .into_iter()
        .collect::<Result<_>>()?;

    let coupling = if cfg.direct_coupling {
        let peak = paths
            .iter()
            .flatten()
            .map(|p| p.amplitude)
            .fold(0.0, f64::max);
        (peak > 0.0).then(|| Path {
            amplitude: peak * 10f64.powf(cfg.antenna_isolation_db / 20.0),
            delay: (cfg.tx_position - cfg.rx_position).norm() / SPEED_OF_LIGHT,
        })
    } else {
        None
    };

    let mut samples = ComplexMatrix::zeros(rows, cols);
    par::for_each_chunk_mut(samples.as_mut_slice(), rows, |m, column| {
        for &p in &paths[m] {
            add_tone(column, p, cfg);
        }
        if let Some(p) = coupling {
            add_tone(column, p, cfg);
        }
    });
    if !samples.is_finite() {
        return Err(Error::NonFinite("synthesized beat signal".into()));
    }

    let noise_power = if cfg.snr_db == f64::INFINITY {
        0.0
    } else {
        let clean = samples.mean_power();
        let reference = if clean > 0.0 { clean } else { 1.0 };
        reference / 10f64.powf(cfg.snr_db / 10.0)
    };
    if noise_power > 0.0 {
        let sigma = (noise_power / 2.0).sqrt();
        par::for_each_chunk_mut(samples.as_mut_slice(), rows, |m, column| {
            let mut rng = GaussianStream::new(seed, m as u64);
            for v in column {
                let (re, im) = rng.normal_pair();
                *v += Complex64::new(sigma * re, sigma * im);
            }
        });
    }

    Ok(RawData {
        samples,
        fast_time_step: cfg.sample_interval(),
        slow_time_step: cfg.pri(),
        noise_power,
        warnings,
    })
}

/// Simulates `params` on `body` for `cfg.duration` seconds.
pub fn synthesize(
    body: &BodyModel,
    params: &ActivityParams,
    cfg: &RadarConfig,
    wall: Option<&WallConfig>,
    seed: u64,
) -> Result<RawData> {
    cfg.validate()?;
    params.validate(Some(cfg.duration))?;
    let traj = Trajectory::from_body(body, params, cfg.prf, cfg.pulses())?;
    synthesize_trajectory(&traj, cfg, wall, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Activity;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn short(mut cfg: RadarConfig, pulses: usize) -> RadarConfig {
        cfg.duration = pulses as f64 / cfg.prf;
        cfg
    }

    #[test]
    fn preset_counts() {
        let fs = RadarConfig::free_space();
        assert_eq!(fs.adc_samples(), 400);
        assert_eq!(fs.pulses(), 20_000);
        assert_relative_eq!(fs.chirp_rate(), 1e14);
        let tw = RadarConfig::through_wall();
        assert_eq!(tw.pulses(), 512);
        assert_relative_eq!(tw.chirp_rate(), 2.5e13);
        fs.validate().unwrap();
        tw.validate().unwrap();
    }

    #[test]
    fn config_invariants() {
        let mut c = RadarConfig::free_space();
        c.prf = 30_000.0;
        assert!(c.validate().is_err());
        let mut c = RadarConfig::free_space();
        c.sampling_frequency = 1e4;
        assert!(c.validate().is_err());
        let mut c = RadarConfig::free_space();
        c.bandwidth = 0.0;
        assert!(c.validate().is_err());
        let mut w = WallConfig::through_wall();
        w.epsilon_r = 0.5;
        assert!(w.validate().is_err());
    }

    #[test]
    fn tx_phase_values() {
        let cfg = RadarConfig::free_space();
        assert_eq!(tx_phase(0.0, &cfg).unwrap(), 0.0);
        let tp = cfg.pulse_duration;
        let expected = 2.0 * PI * cfg.carrier_frequency * tp + PI * cfg.bandwidth * tp;
        assert_relative_eq!(tx_phase(tp, &cfg).unwrap(), expected, max_relative = 1e-12);
        let h = 1e-12;
        let slope = (tx_phase(h, &cfg).unwrap() - tx_phase(0.0, &cfg).unwrap()) / h;
        assert_relative_eq!(slope, 2.0 * PI * cfg.carrier_frequency, max_relative = 1e-6);
        assert!(matches!(tx_phase(-1e-9, &cfg), Err(Error::InvalidParameter(_))));
        assert!(tx_phase(tp * 1.01, &cfg).is_err());
    }

    #[test]
    fn bistatic_range_values() {
        let cfg = RadarConfig::free_space();
        assert_relative_eq!(bistatic_range(&cfg.tx_position, &cfg), 0.2, epsilon = 1e-12);
        let p = Vector3::new(2.0, 0.0, 1.5);
        let oracle = 2.0 * (1.6f64.powi(2) + 0.1f64.powi(2)).sqrt();
        assert_relative_eq!(bistatic_range(&p, &cfg), oracle, epsilon = 1e-12);
        assert_relative_eq!(bistatic_range(&p, &cfg), 3.20624, epsilon = 1e-5);
        let mut swapped = cfg.clone();
        std::mem::swap(&mut swapped.tx_position, &mut swapped.rx_position);
        let q = Vector3::new(3.0, 0.7, 0.2);
        assert_eq!(bistatic_range(&q, &cfg), bistatic_range(&q, &swapped));
    }

    #[test]
    fn amplitude_scaling_laws() {
        let cfg = RadarConfig::free_space();
        let a = scatterer_amplitude(1.0, 2.0, 3.0, &cfg, None, 0).unwrap();
        assert_relative_eq!(
            scatterer_amplitude(1.0, 4.0, 6.0, &cfg, None, 0).unwrap(),
            a / 4.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            scatterer_amplitude(4.0, 2.0, 3.0, &cfg, None, 0).unwrap(),
            2.0 * a,
            max_relative = 1e-12
        );
        assert!(matches!(
            scatterer_amplitude(1.0, 0.0, 3.0, &cfg, None, 0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn wall_attenuation_and_delay() {
        let cfg = RadarConfig::through_wall();
        let wall = WallConfig::through_wall();
        let alpha_oracle = PI * 2e9 * 6f64.sqrt() * 0.03 / SPEED_OF_LIGHT;
        assert_relative_eq!(wall.attenuation_constant(2e9), alpha_oracle, max_relative = 1e-12);
        assert!((alpha_oracle - 1.54).abs() < 0.005);
        let free = scatterer_amplitude(1.0, 2.0, 2.0, &cfg, Some(&wall), 0).unwrap();
        let through = scatterer_amplitude(1.0, 2.0, 2.0, &cfg, Some(&wall), 2).unwrap();
        let factor = (-2.0 * alpha_oracle * 0.24).exp();
        assert_relative_eq!(through / free, factor, max_relative = 1e-12);
        assert!((factor - 0.48).abs() < 0.005);

        assert_eq!(wall_extra_delay(&wall, 0), 0.0);
        let one = wall_extra_delay(&wall, 1);
        assert_relative_eq!(one, (6f64.sqrt() - 1.0) * 0.24 / SPEED_OF_LIGHT, max_relative = 1e-12);
        assert_relative_eq!(one, 1.159e-9, max_relative = 2e-3);
        assert_eq!(wall_extra_delay(&wall, 2), 2.0 * one);
    }

    #[test]
    fn segment_slab_crossing() {
        let wall = WallConfig::through_wall();
        let radar = Vector3::new(0.4, -0.1, 1.5);
        assert!(wall.intersects_segment(&radar, &Vector3::new(2.0, 0.0, 1.2)));
        assert!(!wall.intersects_segment(&radar, &Vector3::new(0.7, 0.0, 1.2)));
        // passes over the top of the wall
        assert!(!wall.intersects_segment(&radar, &Vector3::new(2.0, 0.0, 6.0)));
        assert!(wall.contains(&Vector3::new(1.0, 0.0, 1.0)));
        assert!(!wall.contains(&Vector3::new(1.2, 0.0, 1.0)));
    }

    fn single_point(cfg: &RadarConfig, p: Vector3<f64>) -> Trajectory {
        Trajectory::stationary(&[(p, 1.0)], cfg.prf, cfg.pulses())
    }

    #[test]
    fn static_point_gives_single_tone() {
        let mut cfg = short(RadarConfig::free_space(), 4);
        cfg.snr_db = f64::INFINITY;
        cfg.direct_coupling = false;
        let p = Vector3::new(2.0, 0.0, 1.5);
        let raw = synthesize_trajectory(&single_point(&cfg, p), &cfg, None, 1).unwrap();
        let tau = bistatic_range(&p, &cfg) / SPEED_OF_LIGHT;
        let amp = scatterer_amplitude(1.0, 1.6031, 1.6031, &cfg, None, 0).unwrap();
        for m in 0..4 {
            for n in [0usize, 1, 57, 399] {
                let phase = -2.0 * PI * (cfg.carrier_frequency * tau + cfg.chirp_rate() * tau * n as f64 / cfg.sampling_frequency);
                let expected = Complex64::from_polar(1.0, phase);
                let got = raw.samples.get(n, m);
                assert_relative_eq!(got.norm(), amp, max_relative = 1e-4);
                assert!((got / got.norm() - expected).norm() < 1e-9, "n={n} m={m}");
            }
            assert_eq!(raw.samples.column(m), raw.samples.column(0));
        }
        assert_eq!(raw.noise_power, 0.0);
    }

    #[test]
    fn empty_scene_is_unit_reference_noise() {
        let cfg = short(RadarConfig::through_wall(), 64);
        let traj = Trajectory::stationary(&[], cfg.prf, cfg.pulses());
        let raw = synthesize_trajectory(&traj, &cfg, None, 9).unwrap();
        let sigma2 = 10f64.powf(-3.0);
        assert_relative_eq!(raw.noise_power, sigma2, max_relative = 1e-12);
        let measured = raw.samples.mean_power();
        assert!((measured / sigma2 - 1.0).abs() < 0.02, "{measured}");
    }

    #[test]
    fn measured_snr_matches_setting() {
        let mut cfg = short(RadarConfig::through_wall(), 128);
        cfg.direct_coupling = true;
        let body = BodyModel::reference();
        let params = ActivityParams::defaults(Activity::S2, 1.8);
        let traj = Trajectory::from_body(&body, &params, cfg.prf, cfg.pulses()).unwrap();
        let mut clean_cfg = cfg.clone();
        clean_cfg.snr_db = f64::INFINITY;
        let clean = synthesize_trajectory(&traj, &clean_cfg, None, 3).unwrap();
        let noisy = synthesize_trajectory(&traj, &cfg, None, 3).unwrap();
        let signal = clean.samples.mean_power();
        let noise: f64 = noisy
            .samples
            .as_slice()
            .iter()
            .zip(clean.samples.as_slice())
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            / clean.samples.as_slice().len() as f64;
        let snr = 10.0 * (signal / noise).log10();
        assert!((snr - 30.0).abs() < 0.5, "snr {snr}");
    }

    #[test]
    fn same_seed_same_bits() {
        let cfg = short(RadarConfig::through_wall(), 32);
        let body = BodyModel::reference();
        let params = ActivityParams::defaults(Activity::S8, 1.8);
        let a = synthesize(&body, &params, &cfg, None, 42).unwrap();
        let b = synthesize(&body, &params, &cfg, None, 42).unwrap();
        assert_eq!(a.samples, b.samples);
        let c = synthesize(&body, &params, &cfg, None, 43).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn warns_for_target_behind_radar_and_in_wall() {
        let cfg = short(RadarConfig::through_wall(), 4);
        let wall = WallConfig::through_wall();
        let traj = Trajectory::stationary(
            &[(Vector3::new(0.0, 0.0, 1.0), 1.0), (Vector3::new(1.0, 0.0, 1.0), 1.0)],
            cfg.prf,
            4,
        );
        let raw = synthesize_trajectory(&traj, &cfg, Some(&wall), 0).unwrap();
        assert!(matches!(raw.warnings[0], GeometryWarning::BehindRadar { scatterer: 0, .. }));
        assert!(matches!(raw.warnings[1], GeometryWarning::InsideWall { scatterer: 1, .. }));
    }

    #[test]
    fn nan_track_is_fatal() {
        let cfg = short(RadarConfig::through_wall(), 4);
        let traj = Trajectory::stationary(&[(Vector3::new(f64::NAN, 0.0, 1.0), 1.0)], cfg.prf, 4);
        assert!(matches!(
            synthesize_trajectory(&traj, &cfg, None, 0),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn residual_video_phase_small_at_nominal_positions() {
        let body = BodyModel::reference();
        for cfg in [RadarConfig::free_space(), RadarConfig::through_wall()] {
            for a in Activity::ALL {
                let params = ActivityParams::defaults(a, 1.8);
                let torso = crate::kinematics::torso_position(&body, &params, 0.0);
                let tau = bistatic_range(&torso, &cfg) / SPEED_OF_LIGHT;
                let rvp = residual_video_phase(tau, &cfg);
                assert!(rvp < 2.0 * PI * 1e-2, "{a}: {rvp}");
            }
        }
    }

    proptest! {
        #[test]
        fn loss_tangent_monotone(t1 in 0.0f64..0.1, dt in 1e-4f64..0.1, r in 1.0f64..6.0) {
            let cfg = RadarConfig::through_wall();
            let mut w = WallConfig::through_wall();
            w.loss_tangent = t1;
            let a = scatterer_amplitude(0.5, r, r, &cfg, Some(&w), 2).unwrap();
            w.loss_tangent = t1 + dt;
            let b = scatterer_amplitude(0.5, r, r, &cfg, Some(&w), 2).unwrap();
            prop_assert!(b < a);
        }
    }
}
