//! FFT global-filter block with a hand-written backward pass, and the
//! label-smoothing cross-entropy.
//!
//! Tensors are `H × W × D` and stored with index `(h * W + w) * D + d`. The
//! 2-D transforms run over `H × W` independently for each channel and use
//! unitary scaling (`1/√(HW)` each way), so the identity filter is an exact
//! round trip and `‖y‖₂ ≤ max|K| · ‖x‖₂`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;
use crate::rng::GaussianStream;

/// Probabilities below this are clamped before taking the logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Shape {
    pub h: usize,
    pub w: usize,
    pub d: usize,
}

impl Shape {
    pub fn new(h: usize, w: usize, d: usize) -> Result<Self> {
        if h == 0 || w == 0 || d == 0 {
            return Err(Error::invalid(format!("empty shape {h}x{w}x{d}")));
        }
        if !h.is_multiple_of(2) || !w.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "spatial dimensions must be even, got {h}x{w}"
            )));
        }
        Ok(Self { h, w, d })
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.d
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, h: usize, w: usize, d: usize) -> usize {
        (h * self.w + w) * self.d + d
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub shape: Shape,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(shape: Shape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::invalid(format!(
                "feature map needs {} values, got {}",
                shape.len(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature map".into()));
        }
        Ok(Self { shape, data })
    }

    pub fn random(shape: Shape, rng: &mut GaussianStream) -> Self {
        let data = (0..shape.len()).map(|_| rng.standard_normal()).collect();
        Self { shape, data }
    }
}

/// Learnable complex filter with the shape of the spectrum it multiplies.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFilter {
    pub shape: Shape,
    pub weights: Vec<Complex64>,
}

impl GlobalFilter {
    pub fn constant(shape: Shape, value: Complex64) -> Self {
        Self {
            shape,
            weights: vec![value; shape.len()],
        }
    }

    /// Near-identity initialisation `1 + N(0, σ²) + j N(0, σ²)`.
    pub fn init(shape: Shape, sigma: f64, seed: u64) -> Self {
        let mut rng = GaussianStream::new(seed, 0);
        let weights = (0..shape.len())
            .map(|_| {
                let (a, b) = rng.normal_pair();
                Complex64::new(1.0 + sigma * a, sigma * b)
            })
            .collect();
        Self { shape, weights }
    }

    /// From an `H × W × D × 2` real array of (re, im) pairs.
    pub fn from_real(shape: Shape, values: &[f64]) -> Result<Self> {
        if values.len() != 2 * shape.len() {
            return Err(Error::invalid(format!(
                "filter needs {} reals, got {}",
                2 * shape.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("filter weights".into()));
        }
        let weights = values.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect();
        Ok(Self { shape, weights })
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.weights.iter().flat_map(|k| [k.re, k.im]).collect()
    }

    pub fn max_gain(&self) -> f64 {
        self.weights.iter().map(|k| k.norm()).fold(0.0, f64::max)
    }
}

struct Plans {
    shape: Shape,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Plans {
    fn new(shape: Shape) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            shape,
            row_fwd: planner.plan_fft_forward(shape.w),
            row_inv: planner.plan_fft_inverse(shape.w),
            col_fwd: planner.plan_fft_forward(shape.h),
            col_inv: planner.plan_fft_inverse(shape.h),
        }
    }

    /// Unitary 2-D transform of one `H × W` plane stored row-major.
    fn plane(&self, plane: &mut [Complex64], inverse: bool) {
        let Shape { h, w, .. } = self.shape;
        let (rows, cols) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        rows.process(plane);
        let mut column = vec![Complex64::new(0.0, 0.0); h];
        for c in 0..w {
            for r in 0..h {
                column[r] = plane[r * w + c];
            }
            cols.process(&mut column);
            for r in 0..h {
                plane[r * w + c] = column[r];
            }
        }
        let scale = 1.0 / ((h * w) as f64).sqrt();
        plane.iter_mut().for_each(|v| *v *= scale);
    }

    fn channel(&self, data: &[Complex64], d: usize) -> Vec<Complex64> {
        let s = self.shape;
        (0..s.h * s.w).map(|i| data[i * s.d + d]).collect()
    }

    /// Applies `f(channel, plane)` to every channel and reassembles the tensor.
    fn per_channel<F>(&self, f: F) -> Vec<Complex64>
    where
        F: Fn(usize) -> Vec<Complex64> + Sync + Send,
    {
        let s = self.shape;
        let planes = par::map_range(s.d, f);
        let mut out = vec![Complex64::new(0.0, 0.0); s.len()];
        for (d, plane) in planes.into_iter().enumerate() {
            for (i, v) in plane.into_iter().enumerate() {
                out[i * s.d + d] = v;
            }
        }
        out
    }

    fn fft2(&self, data: &[Complex64], inverse: bool) -> Vec<Complex64> {
        self.per_channel(|d| {
            let mut plane = self.channel(data, d);
            self.plane(&mut plane, inverse);
            plane
        })
    }
}

fn check_shapes(x: Shape, k: Shape) -> Result<()> {
    if x != k {
        return Err(Error::invalid(format!(
            "feature map {}x{}x{} does not match filter {}x{}x{}",
            x.h, x.w, x.d, k.h, k.w, k.d
        )));
    }
    Ok(())
}

fn complexify(x: &[f64]) -> Vec<Complex64> {
    x.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// `iFFT2(K ⊙ FFT2(x))` before the real part is taken.
pub fn forward_complex(x: &FeatureMap, k: &GlobalFilter) -> Result<Vec<Complex64>> {
    check_shapes(x.shape, k.shape)?;
    let plans = Plans::new(x.shape);
    let mut spectrum = plans.fft2(&complexify(&x.data), false);
    for (s, w) in spectrum.iter_mut().zip(&k.weights) {
        *s *= w;
    }
    Ok(plans.fft2(&spectrum, true))
}

/// `Re(iFFT2(K ⊙ FFT2(x)))`.
pub fn forward(x: &FeatureMap, k: &GlobalFilter) -> Result<FeatureMap> {
    let z = forward_complex(x, k)?;
    Ok(FeatureMap {
        shape: x.shape,
        data: z.into_iter().map(|v| v.re).collect(),
    })
}

/// Real gradients of the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub x: FeatureMap,
    /// `H × W × D × 2`, (re, im) per weight.
    pub k: Vec<f64>,
}

/// Backward pass for an upstream gradient `grad` of the same shape as the output.
///
/// With G = FFT2(grad): ∂L/∂x = Re(iFFT2(conj(K) ⊙ G)) and ∂L/∂K = G ⊙ conj(FFT2(x)),
/// the latter split into derivatives with respect to Re K and Im K.
pub fn backward(x: &FeatureMap, k: &GlobalFilter, grad: &FeatureMap) -> Result<Gradients> {
    check_shapes(x.shape, k.shape)?;
    check_shapes(grad.shape, k.shape)?;
    let plans = Plans::new(x.shape);
    let xs = plans.fft2(&complexify(&x.data), false);
    let gs = plans.fft2(&complexify(&grad.data), false);
    let grad_k = gs
        .iter()
        .zip(&xs)
        .flat_map(|(g, x)| {
            let v = g * x.conj();
            [v.re, v.im]
        })
        .collect();
    let filtered: Vec<Complex64> = gs.iter().zip(&k.weights).map(|(g, w)| w.conj() * g).collect();
    let gx = plans.fft2(&filtered, true);
    Ok(Gradients {
        x: FeatureMap {
            shape: x.shape,
            data: gx.into_iter().map(|v| v.re).collect(),
        },
        k: grad_k,
    })
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`, zero when both are zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let inf = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let diff = a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let scale = inf(a).max(inf(b));
    if scale == 0.0 {
        0.0
    } else {
        diff / scale
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheck {
    pub shape: Shape,
    pub error_x: f64,
    pub error_k: f64,
}

/// Compares [`backward`] with central differences of `L = Σ grad · forward(x, K)`.
pub fn gradient_check(shape: Shape, step: f64, seed: u64) -> Result<GradCheck> {
    let mut rng = GaussianStream::new(seed, 1);
    let x = FeatureMap::random(shape, &mut rng);
    let g = FeatureMap::random(shape, &mut rng);
    let k = GlobalFilter::init(shape, 0.5, seed ^ 0x5eed);
    let loss = |x: &FeatureMap, k: &GlobalFilter| -> Result<f64> {
        Ok(forward(x, k)?.data.iter().zip(&g.data).map(|(a, b)| a * b).sum())
    };
    let analytic = backward(&x, &k, &g)?;

    let mut numeric_x = vec![0.0; shape.len()];
    for (i, slot) in numeric_x.iter_mut().enumerate() {
        let mut plus = x.clone();
        plus.data[i] += step;
        let mut minus = x.clone();
        minus.data[i] -= step;
        *slot = (loss(&plus, &k)? - loss(&minus, &k)?) / (2.0 * step);
    }
    let base = k.to_real();
    let mut numeric_k = vec![0.0; base.len()];
    for (i, slot) in numeric_k.iter_mut().enumerate() {
        let mut plus = base.clone();
        plus[i] += step;
        let mut minus = base.clone();
        minus[i] -= step;
        let kp = GlobalFilter::from_real(shape, &plus)?;
        let km = GlobalFilter::from_real(shape, &minus)?;
        *slot = (loss(&x, &kp)? - loss(&x, &km)?) / (2.0 * step);
    }
    Ok(GradCheck {
        shape,
        error_x: relative_error(&analytic.x.data, &numeric_x),
        error_k: relative_error(&analytic.k, &numeric_k),
    })
}

/// Runs [`gradient_check`] on `count` random shapes with H, W ∈ {2, 4, 8} and D ∈ {1, 3}.
pub fn gradient_check_suite(count: usize, step: f64, seed: u64) -> Result<Vec<GradCheck>> {
    let mut rng = GaussianStream::new(seed, 0);
    let dims = [2, 4, 8];
    (0..count)
        .map(|i| {
            let shape = Shape::new(dims[rng.below(3)], dims[rng.below(3)], [1, 3][rng.below(2)])?;
            gradient_check(shape, step, seed.wrapping_add(i as u64 + 1))
        })
        .collect()
}

/// `y' = y (1 − ζ) + ζ / K` for a one-hot `y` at `class`.
pub fn smoothed_labels(classes: usize, class: usize, zeta: f64) -> Result<Vec<f64>> {
    if class >= classes {
        return Err(Error::invalid(format!("class {class} out of {classes}")));
    }
    if !(0.0..1.0).contains(&zeta) {
        return Err(Error::invalid(format!("smoothing factor must be in [0, 1), got {zeta}")));
    }
    let floor = zeta / classes as f64;
    Ok((0..classes)
        .map(|k| if k == class { 1.0 - zeta + floor } else { floor })
        .collect())
}

/// Label-smoothing cross-entropy `−Σ y'_k ln p_k` against a one-hot label.
pub fn label_smoothing_loss(p: &[f64], onehot: &[f64], zeta: f64) -> Result<f64> {
    if p.len() != onehot.len() || p.is_empty() {
        return Err(Error::invalid(format!(
            "{} probabilities for {} labels",
            p.len(),
            onehot.len()
        )));
    }
    let hot: Vec<usize> = (0..onehot.len()).filter(|&k| onehot[k] == 1.0).collect();
    if hot.len() != 1 || onehot.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::invalid("label must be one-hot"));
    }
    if p.iter().any(|&v| !(v.is_finite() && v >= 0.0)) {
        return Err(Error::invalid("probabilities must be finite and non-negative"));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!("probabilities sum to {total}, not 1")));
    }
    let y = smoothed_labels(p.len(), hot[0], zeta)?;
    Ok(-y
        .iter()
        .zip(p)
        .map(|(y, p)| y * p.max(PROB_FLOOR).ln())
        .sum::<f64>())
}
