use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::RealMatrix;
use crate::par;

/// Smallest usable analysis window, samples.
pub const MIN_WINDOW: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Stft,
    Fsst,
}

/// Which of the eight Doppler-time maps a [`Dtm`] is.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DtmVariant {
    pub transform: Transform,
    pub denoised: bool,
    pub compensated: bool,
}

impl DtmVariant {
    pub const ALL: [DtmVariant; 8] = {
        let mut all = [DtmVariant {
            transform: Transform::Stft,
            denoised: false,
            compensated: false,
        }; 8];
        let mut i = 0;
        while i < 8 {
            all[i] = DtmVariant {
                transform: if i < 4 { Transform::Stft } else { Transform::Fsst },
                denoised: i & 2 != 0,
                compensated: i & 1 != 0,
            };
            i += 1;
        }
        all
    };

    /// Compensated, denoised STFT.
    pub const DEFAULT: DtmVariant = DtmVariant {
        transform: Transform::Stft,
        denoised: true,
        compensated: true,
    };

    /// `stft_denoised_comp` style name.
    pub fn tag(&self) -> String {
        format!(
            "{}_{}_{}",
            match self.transform {
                Transform::Stft => "stft",
                Transform::Fsst => "fsst",
            },
            if self.denoised { "denoised" } else { "raw" },
            if self.compensated { "comp" } else { "uncomp" },
        )
    }
}

impl fmt::Display for DtmVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl FromStr for DtmVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DtmVariant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown DTM variant '{s}'")))
    }
}

impl Serialize for DtmVariant {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for DtmVariant {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Window length, hop and frame count for a signal of `len` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Framing {
    pub window: usize,
    pub hop: usize,
    pub frames: usize,
}

impl Framing {
    pub fn new(len: usize, window_fraction: f64, overlap_fraction: f64) -> Result<Self> {
        if !(window_fraction > 0.0 && window_fraction <= 1.0) {
            return Err(Error::invalid(format!(
                "window fraction must be in (0, 1], got {window_fraction}"
            )));
        }
        if !(0.0..1.0).contains(&overlap_fraction) {
            return Err(Error::invalid(format!(
                "overlap fraction must be in [0, 1), got {overlap_fraction}"
            )));
        }
        let window = (window_fraction * len as f64).round() as usize;
        if window < MIN_WINDOW {
            return Err(Error::invalid(format!(
                "window of {window} samples is shorter than {MIN_WINDOW}"
            )));
        }
        if len < window {
            return Err(Error::invalid(format!(
                "signal of {len} samples is shorter than one window ({window})"
            )));
        }
        let hop = (window - (overlap_fraction * window as f64).round() as usize).max(1);
        Ok(Self {
            window,
            hop,
            frames: (len - window) / hop + 1,
        })
    }
}

/// Doppler-time map. Rows run from the most negative to the most positive
/// Doppler frequency with DC at [`Dtm::dc_row`]; columns are frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Dtm {
    pub power: RealMatrix,
    pub variant: DtmVariant,
    /// Hz per row.
    pub doppler_step: f64,
    /// Seconds between frames.
    pub time_step: f64,
    /// Time of the centre of frame 0, s.
    pub time_origin: f64,
}

impl Dtm {
    pub fn dc_row(&self) -> usize {
        (self.power.rows() - 1) / 2
    }

    pub fn doppler(&self, row: usize) -> f64 {
        (row as f64 - self.dc_row() as f64) * self.doppler_step
    }

    pub fn time(&self, frame: usize) -> f64 {
        self.time_origin + frame as f64 * self.time_step
    }

    /// Doppler frequency of the strongest row in `frame`.
    pub fn ridge(&self, frame: usize) -> f64 {
        self.doppler(self.power.argmax_in_column(frame))
    }
}

/// Periodic Hann window and its derivative with respect to the sample index.
fn hann(n: usize) -> (Vec<f64>, Vec<f64>) {
    let w = 2.0 * PI / n as f64;
    (0..n)
        .map(|i| {
            let a = w * i as f64;
            (0.5 - 0.5 * a.cos(), 0.5 * w * a.sin())
        })
        .unzip()
}

fn row_of(bin: usize, n: usize) -> usize {
    (bin + (n - 1) / 2) % n
}

struct Spectra {
    /// Window-weighted spectra per frame.
    plain: Vec<Vec<Complex64>>,
    /// Derivative-window spectra per frame (FSST only).
    derivative: Vec<Vec<Complex64>>,
}

fn spectra(x: &[Complex64], framing: Framing, with_derivative: bool) -> Spectra {
    let n = framing.window;
    let fft = FftPlanner::new().plan_fft_forward(n);
    let (g, dg) = hann(n);
    let transform = |l: usize, w: &[f64]| {
        let start = l * framing.hop;
        let mut buf: Vec<Complex64> = x[start..start + n].iter().zip(w).map(|(v, g)| v * *g).collect();
        fft.process(&mut buf);
        buf
    };
    let plain = par::map_range(framing.frames, |l| transform(l, &g));
    let derivative = if with_derivative {
        par::map_range(framing.frames, |l| transform(l, &dg))
    } else {
        Vec::new()
    };
    Spectra {
        plain,
        derivative,
    }
}

fn assemble(framing: Framing, columns: Vec<Vec<f64>>, variant: DtmVariant, sample_interval: f64) -> Dtm {
    let n = framing.window;
    let data = columns.into_iter().flatten().collect();
    Dtm {
        power: RealMatrix::from_columns(n, framing.frames, data).expect("frame columns have window length"),
        variant,
        doppler_step: 1.0 / (n as f64 * sample_interval),
        time_step: framing.hop as f64 * sample_interval,
        time_origin: (n as f64 / 2.0) * sample_interval,
    }
}

fn check_finite(x: &[Complex64]) -> Result<()> {
    if x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite("slow-time signal".into()))
    }
}

/// Spectrogram |X|² with a periodic Hann window as long as the FFT.
pub fn stft(x: &[Complex64], sample_interval: f64, window_fraction: f64, overlap_fraction: f64) -> Result<Dtm> {
    check_finite(x)?;
    let framing = Framing::new(x.len(), window_fraction, overlap_fraction)?;
    let s = spectra(x, framing, false);
    let n = framing.window;
    let columns = s
        .plain
        .iter()
        .map(|spec| {
            let mut col = vec![0.0; n];
            for (k, v) in spec.iter().enumerate() {
                col[row_of(k, n)] = v.norm_sqr();
            }
            col
        })
        .collect();
    let variant = DtmVariant {
        transform: Transform::Stft,
        denoised: false,
        compensated: false,
    };
    Ok(assemble(framing, columns, variant, sample_interval))
}

/// Relative magnitude below which STFT cells are not reassigned.
pub const FSST_THRESHOLD: f64 = 1e-6;

/// Synchrosqueezed STFT with the default threshold.
pub fn fsst(x: &[Complex64], sample_interval: f64, window_fraction: f64, overlap_fraction: f64) -> Result<Dtm> {
    fsst_with_threshold(x, sample_interval, window_fraction, overlap_fraction, FSST_THRESHOLD)
}

/// Synchrosqueezed STFT: the energy |X|² of every cell with
/// |X| > `threshold` · max|X| moves to the bin nearest its instantaneous
/// frequency ω − Im(X_{g'} / X_g). Cells at or below the threshold are dropped.
pub fn fsst_with_threshold(
    x: &[Complex64],
    sample_interval: f64,
    window_fraction: f64,
    overlap_fraction: f64,
    threshold: f64,
) -> Result<Dtm> {
    if !(threshold.is_finite() && (0.0..1.0).contains(&threshold)) {
        return Err(Error::invalid(format!("FSST threshold must be in [0, 1), got {threshold}")));
    }
    check_finite(x)?;
    let framing = Framing::new(x.len(), window_fraction, overlap_fraction)?;
    let s = spectra(x, framing, true);
    let n = framing.window;
    let peak = s
        .plain
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    let gamma = threshold * peak;
    let per_rad = n as f64 / (2.0 * PI);
    let columns = s
        .plain
        .iter()
        .zip(&s.derivative)
        .map(|(xg, xd)| {
            let mut col = vec![0.0; n];
            for (k, (a, b)) in xg.iter().zip(xd).enumerate() {
                if a.norm() <= gamma || peak == 0.0 {
                    continue;
                }
                let shift = (b / a).im * per_rad;
                let target = (k as f64 - shift).round().rem_euclid(n as f64) as usize % n;
                col[row_of(target, n)] += a.norm_sqr();
            }
            col
        })
        .collect();
    let variant = DtmVariant {
        transform: Transform::Fsst,
        denoised: false,
        compensated: false,
    };
    Ok(assemble(framing, columns, variant, sample_interval))
}
