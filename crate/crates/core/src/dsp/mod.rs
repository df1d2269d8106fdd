//! Range and Doppler processing of raw beat-signal matrices.

mod doppler;
mod entropy;
mod pipeline;
mod range;
mod savgol;
mod tfr;

pub use doppler::{bulk_phase, compensate, radial_velocity};
pub use entropy::{entropy, entropy_of};
pub use pipeline::{process, process_variants, ProcessingConfig, Processed};
pub use range::{aggregate, gate_bins, mti, range_fft, range_spectrum, range_step, RangeTransform, Rtm};
pub use savgol::{savgol, SavitzkyGolay};
pub use tfr::{fsst, fsst_with_threshold, stft, Dtm, DtmVariant, Framing, Transform, FSST_THRESHOLD, MIN_WINDOW};
