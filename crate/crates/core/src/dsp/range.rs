use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::echo::RadarConfig;
use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, RealMatrix};
use crate::{par, SPEED_OF_LIGHT};

/// Two-pulse canceller along slow time: `out[n, m] = raw[n, m+1] - raw[n, m]`.
pub fn mti(raw: &ComplexMatrix) -> Result<ComplexMatrix> {
    if raw.cols() < 2 {
        return Err(Error::invalid(format!(
            "MTI needs at least 2 pulses, got {}",
            raw.cols()
        )));
    }
    let rows = raw.rows();
    let mut out = ComplexMatrix::zeros(rows, raw.cols() - 1);
    par::for_each_chunk_mut(out.as_mut_slice(), rows, |m, col| {
        for ((o, b), a) in col.iter_mut().zip(raw.column(m + 1)).zip(raw.column(m)) {
            *o = b - a;
        }
    });
    Ok(out)
}

/// Range-time map: |S[k, m]| for `k < N_FFT / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rtm {
    pub magnitude: RealMatrix,
    /// Metres per range bin.
    pub range_step: f64,
    /// Seconds per column.
    pub time_step: f64,
}

/// Metres per FFT bin, c f_s / (2 K N_FFT).
pub fn range_step(cfg: &RadarConfig, nfft: usize) -> f64 {
    SPEED_OF_LIGHT * cfg.sampling_frequency / (2.0 * cfg.chirp_rate() * nfft as f64)
}

/// Fast-time transform of zero-padded columns.
///
/// The de-chirped tone of a target at delay τ is exp(−j2πKτ n T_s), a
/// negative frequency, so the transform uses the exp(+j2πnk/N) kernel to put
/// the target at bin K τ N / f_s. No normalisation is applied, which gives
/// Σ_k |S[k]|² = N · Σ_n |s[n]|².
#[derive(Clone)]
pub struct RangeTransform {
    nfft: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl RangeTransform {
    pub fn new(nfft: usize, adc_samples: usize) -> Result<Self> {
        if !nfft.is_power_of_two() {
            return Err(Error::invalid(format!("N_FFT must be a power of two, got {nfft}")));
        }
        if nfft < adc_samples {
            return Err(Error::invalid(format!(
                "N_FFT ({nfft}) must be at least N_ADC ({adc_samples})"
            )));
        }
        let fft = FftPlanner::new().plan_fft(nfft, FftDirection::Inverse);
        Ok(Self { nfft, fft })
    }

    pub fn nfft(&self) -> usize {
        self.nfft
    }

    /// Transforms `input` into `out` (length N_FFT).
    pub fn column(&self, input: &[Complex64], out: &mut [Complex64]) {
        out[..input.len()].copy_from_slice(input);
        out[input.len()..].fill(Complex64::new(0.0, 0.0));
        self.fft.process(out);
    }
}

/// Full complex spectrum `S` (N_FFT rows) of every column of `x`.
pub fn range_spectrum(x: &ComplexMatrix, nfft: usize) -> Result<ComplexMatrix> {
    let transform = RangeTransform::new(nfft, x.rows())?;
    let mut out = ComplexMatrix::zeros(nfft, x.cols());
    par::for_each_chunk_mut(out.as_mut_slice(), nfft, |m, col| {
        transform.column(x.column(m), col);
    });
    Ok(out)
}

/// Range FFT of MTI output; returns the RTM and the complex spectrum.
pub fn range_fft(x: &ComplexMatrix, nfft: usize, cfg: &RadarConfig) -> Result<(Rtm, ComplexMatrix)> {
    let spectrum = range_spectrum(x, nfft)?;
    let half = nfft / 2;
    let mut magnitude = RealMatrix::zeros(half, x.cols());
    par::for_each_chunk_mut(magnitude.as_mut_slice(), half, |m, col| {
        for (o, s) in col.iter_mut().zip(spectrum.column(m)) {
            *o = s.norm();
        }
    });
    let rtm = Rtm {
        magnitude,
        range_step: range_step(cfg, nfft),
        time_step: cfg.pri(),
    };
    Ok((rtm, spectrum))
}

/// Bins `[lo, hi)` summed into the slow-time signal.
pub fn gate_bins(gate: Option<(f64, f64)>, range_step: f64, nfft: usize) -> Result<(usize, usize)> {
    let half = nfft / 2;
    match gate {
        None => Ok((0, half)),
        Some((near, far)) => {
            if !(near >= 0.0 && far > near) {
                return Err(Error::invalid(format!(
                    "range gate must satisfy 0 <= near < far, got [{near}, {far}]"
                )));
            }
            let lo = ((near / range_step).floor() as usize).min(half);
            let hi = ((far / range_step).ceil() as usize + 1).min(half);
            if lo >= hi {
                return Err(Error::invalid(format!(
                    "range gate [{near}, {far}] m is beyond the last range bin"
                )));
            }
            Ok((lo, hi))
        }
    }
}

/// Coherent sum over range bins `bins` of every column of `S`.
pub fn aggregate(spectrum: &ComplexMatrix, bins: (usize, usize)) -> Result<Vec<Complex64>> {
    if spectrum.rows() == 0 || spectrum.cols() == 0 {
        return Err(Error::invalid("cannot aggregate an empty matrix"));
    }
    let (lo, hi) = bins;
    if lo >= hi || hi > spectrum.rows() {
        return Err(Error::invalid(format!(
            "bin range [{lo}, {hi}) does not fit {} rows",
            spectrum.rows()
        )));
    }
    Ok(spectrum.columns().map(|c| c[lo..hi].iter().sum()).collect())
}
