use std::collections::BTreeMap;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::doppler::{bulk_phase, compensate, radial_velocity};
use super::entropy::entropy;
use super::range::{gate_bins, range_step, RangeTransform, Rtm};
use super::savgol::SavitzkyGolay;
use super::tfr::{fsst_with_threshold, stft, Dtm, DtmVariant, Transform, FSST_THRESHOLD};
use crate::echo::RadarConfig;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::par;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessingConfig {
    pub nfft: usize,
    pub savgol_order: usize,
    pub savgol_frame: usize,
    pub window_fraction: f64,
    pub overlap_fraction: f64,
    /// Relative magnitude below which FSST drops STFT cells.
    pub fsst_threshold: f64,
    /// `[near, far]` in metres on the RTM range axis; `None` sums every bin.
    pub range_gate: Option<(f64, f64)>,
}

impl Default for ProcessingConfig {
    fn default() -> Self {
        Self {
            nfft: 1024,
            savgol_order: 5,
            savgol_frame: 11,
            window_fraction: 0.10,
            overlap_fraction: 0.90,
            fsst_threshold: FSST_THRESHOLD,
            range_gate: None,
        }
    }
}

/// Everything derived from one raw matrix.
#[derive(Debug, Clone)]
pub struct Processed {
    pub rtm: Rtm,
    /// Aggregated slow-time signal before compensation and denoising.
    pub slow_time: Vec<Complex64>,
    pub bulk_phase: Vec<f64>,
    /// Requested variants in [`DtmVariant::ALL`] order.
    pub dtms: Vec<Dtm>,
    /// Entropy in nats keyed by `rtm` or the variant tag; `None` for an all-zero map.
    pub entropies: BTreeMap<String, Option<f64>>,
}

impl Processed {
    /// Panics if `variant` was not requested.
    pub fn dtm(&self, variant: DtmVariant) -> &Dtm {
        self.dtms
            .iter()
            .find(|d| d.variant == variant)
            .unwrap_or_else(|| panic!("variant {variant} was not computed"))
    }
}

fn map_entropy(map: &RealMatrix) -> Result<Option<f64>> {
    match entropy(map) {
        Ok(h) => Ok(Some(h)),
        Err(Error::UndefinedEntropy) => Ok(None),
        Err(e) => Err(e),
    }
}

/// MTI, range FFT and range aggregation in one pass over the pulses.
fn range_stage(
    raw: &ComplexMatrix,
    cfg: &RadarConfig,
    proc: &ProcessingConfig,
) -> Result<(Rtm, Vec<Complex64>)> {
    if raw.cols() < 2 {
        return Err(Error::invalid(format!("MTI needs at least 2 pulses, got {}", raw.cols())));
    }
    let transform = RangeTransform::new(proc.nfft, raw.rows())?;
    let step = range_step(cfg, proc.nfft);
    let (lo, hi) = gate_bins(proc.range_gate, step, proc.nfft)?;
    let half = proc.nfft / 2;
    let cols = raw.cols() - 1;
    let mut magnitude = RealMatrix::zeros(half, cols);
    let mut x = vec![Complex64::new(0.0, 0.0); cols];
    par::for_each_chunk_with(magnitude.as_mut_slice(), half, &mut x, |m, col, out| {
        let diff: Vec<Complex64> = raw
            .column(m + 1)
            .iter()
            .zip(raw.column(m))
            .map(|(b, a)| b - a)
            .collect();
        let mut spectrum = vec![Complex64::new(0.0, 0.0); proc.nfft];
        transform.column(&diff, &mut spectrum);
        for (o, s) in col.iter_mut().zip(&spectrum) {
            *o = s.norm();
        }
        *out = spectrum[lo..hi].iter().sum();
    });
    let rtm = Rtm {
        magnitude,
        range_step: step,
        time_step: cfg.pri(),
    };
    Ok((rtm, x))
}

/// Raw matrix to RTM, eight DTMs and their entropies.
///
/// `torso_track` holds the torso position at every pulse and drives the
/// bulk-Doppler compensation.
pub fn process(
    raw: &ComplexMatrix,
    cfg: &RadarConfig,
    torso_track: &[Vector3<f64>],
    proc: &ProcessingConfig,
) -> Result<Processed> {
    process_variants(raw, cfg, torso_track, proc, &DtmVariant::ALL)
}

/// As [`process`] but only computes the listed DTM variants.
pub fn process_variants(
    raw: &ComplexMatrix,
    cfg: &RadarConfig,
    torso_track: &[Vector3<f64>],
    proc: &ProcessingConfig,
    variants: &[DtmVariant],
) -> Result<Processed> {
    if torso_track.len() != raw.cols() {
        return Err(Error::invalid(format!(
            "torso track has {} samples for {} pulses",
            torso_track.len(),
            raw.cols()
        )));
    }
    let (rtm, x) = range_stage(raw, cfg, proc).map_err(|e| e.in_stage("range"))?;
    if x.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFinite("aggregated slow-time signal".into()).in_stage("range"));
    }

    let phase = bulk_phase(&radial_velocity(torso_track, cfg), cfg.wavelength(), cfg.pri());
    let comp = compensate(&x, &phase).map_err(|e| e.in_stage("compensation"))?;
    let sg = SavitzkyGolay::new(proc.savgol_order, proc.savgol_frame).map_err(|e| e.in_stage("denoise"))?;
    let wanted = |denoised: bool, compensated: bool| {
        variants.iter().any(|v| v.denoised == denoised && v.compensated == compensated)
    };
    let smooth = |s: &[Complex64], needed: bool| -> Result<Vec<Complex64>> {
        if needed {
            sg.filter(s).map_err(|e| e.in_stage("denoise"))
        } else {
            Ok(Vec::new())
        }
    };
    let signals = [
        (false, false, x.clone()),
        (false, true, comp.clone()),
        (true, false, smooth(&x, wanted(true, false))?),
        (true, true, smooth(&comp, wanted(true, true))?),
    ];

    let mut dtms = Vec::with_capacity(variants.len());
    for transform in [Transform::Stft, Transform::Fsst] {
        for (denoised, compensated, signal) in &signals {
            let variant = DtmVariant {
                transform,
                denoised: *denoised,
                compensated: *compensated,
            };
            if !variants.contains(&variant) {
                continue;
            }
            let mut d = match transform {
                Transform::Stft => stft(signal, cfg.pri(), proc.window_fraction, proc.overlap_fraction),
                Transform::Fsst => fsst_with_threshold(
                    signal,
                    cfg.pri(),
                    proc.window_fraction,
                    proc.overlap_fraction,
                    proc.fsst_threshold,
                ),
            }
            .map_err(|e| e.in_stage("time-frequency"))?;
            d.variant = variant;
            dtms.push(d);
        }
    }

    let mut entropies = BTreeMap::new();
    entropies.insert("rtm".to_string(), map_entropy(&rtm.magnitude)?);
    for d in &dtms {
        entropies.insert(d.variant.tag(), map_entropy(&d.power)?);
    }
    Ok(Processed {
        rtm,
        slow_time: x,
        bulk_phase: phase,
        dtms,
        entropies,
    })
}
