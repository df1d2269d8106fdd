use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Least-squares polynomial smoother of order `order` over `frame` points.
#[derive(Debug, Clone)]
pub struct SavitzkyGolay {
    frame: usize,
    /// `frame × frame` projection onto polynomials of degree ≤ order; row `r`
    /// gives the fitted value at offset `r` of a window.
    projection: DMatrix<f64>,
}

impl SavitzkyGolay {
    pub fn new(order: usize, frame: usize) -> Result<Self> {
        if frame.is_multiple_of(2) {
            return Err(Error::invalid(format!("frame length must be odd, got {frame}")));
        }
        if frame <= order {
            return Err(Error::invalid(format!(
                "frame length {frame} must exceed the polynomial order {order}"
            )));
        }
        let half = (frame / 2) as f64;
        // scaled offsets keep the Vandermonde system well conditioned
        let vander = DMatrix::from_fn(frame, order + 1, |r, c| {
            let u = if half > 0.0 { (r as f64 - half) / half } else { 0.0 };
            u.powi(c as i32)
        });
        let pinv = vander
            .clone()
            .pseudo_inverse(1e-12)
            .map_err(|e| Error::invalid(format!("Savitzky-Golay design failed: {e}")))?;
        Ok(Self {
            frame,
            projection: vander * pinv,
        })
    }

    pub fn frame(&self) -> usize {
        self.frame
    }

    /// Convolution weights for the centre of the window.
    pub fn central_coefficients(&self) -> Vec<f64> {
        self.projection.row(self.frame / 2).iter().copied().collect()
    }

    fn apply_row(&self, row: usize, window: &[Complex64]) -> Complex64 {
        self.projection
            .row(row)
            .iter()
            .zip(window)
            .map(|(w, v)| v * *w)
            .sum()
    }

    /// Smooths real and imaginary parts with the same real weights.
    pub fn filter(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let f = self.frame;
        if x.len() < f {
            return Err(Error::invalid(format!(
                "signal of {} samples is shorter than the frame length {f}",
                x.len()
            )));
        }
        let half = f / 2;
        let n = x.len();
        let mut out = Vec::with_capacity(n);
        for r in 0..half {
            out.push(self.apply_row(r, &x[..f]));
        }
        for c in half..n - half {
            out.push(self.apply_row(half, &x[c - half..c + half + 1]));
        }
        for r in half + 1..f {
            out.push(self.apply_row(r, &x[n - f..]));
        }
        Ok(out)
    }
}

pub fn savgol(x: &[Complex64], order: usize, frame: usize) -> Result<Vec<Complex64>> {
    SavitzkyGolay::new(order, frame)?.filter(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reproduces_polynomials() {
        let x: Vec<Complex64> = (0..40)
            .map(|m| {
                let t = m as f64 * 0.1;
                Complex64::new(1.0 - 2.0 * t + 0.5 * t.powi(3) - 0.1 * t.powi(5), 3.0 * t.powi(4))
            })
            .collect();
        let y = savgol(&x, 5, 11).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn order_zero_is_moving_average() {
        let sg = SavitzkyGolay::new(0, 3).unwrap();
        for c in sg.central_coefficients() {
            assert_relative_eq!(c, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn known_quadratic_coefficients() {
        // classic 5-point quadratic smoother: (-3, 12, 17, 12, -3) / 35
        let c = SavitzkyGolay::new(2, 5).unwrap().central_coefficients();
        for (a, b) in c.iter().zip([-3.0, 12.0, 17.0, 12.0, -3.0]) {
            assert_relative_eq!(*a, b / 35.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn impulse_gives_central_row() {
        let sg = SavitzkyGolay::new(5, 11).unwrap();
        let mut x = vec![Complex64::new(0.0, 0.0); 31];
        x[15] = Complex64::new(1.0, 0.0);
        let y = sg.filter(&x).unwrap();
        let c = sg.central_coefficients();
        for j in 0..11 {
            // symmetric kernel, so correlation and convolution agree
            assert_relative_eq!(y[10 + j].re, c[10 - j], epsilon = 1e-13);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(SavitzkyGolay::new(2, 10), Err(Error::InvalidParameter(_))));
        assert!(SavitzkyGolay::new(5, 5).is_err());
        assert!(savgol(&[Complex64::new(1.0, 0.0); 4], 1, 5).is_err());
    }

    proptest! {
        #[test]
        fn commutes_with_complex_scaling(
            re in proptest::collection::vec(-2.0f64..2.0, 11..30),
            cr in -2.0f64..2.0, ci in -2.0f64..2.0,
        ) {
            let x: Vec<Complex64> = re.iter().enumerate().map(|(i, &r)| Complex64::new(r, (i as f64).sin())).collect();
            let c = Complex64::new(cr, ci);
            let scaled: Vec<Complex64> = x.iter().map(|v| c * v).collect();
            let a = savgol(&scaled, 5, 11).unwrap();
            let b = savgol(&x, 5, 11).unwrap();
            for (p, q) in a.iter().zip(&b) {
                prop_assert!((p - c * q).norm() < 1e-10);
            }
        }
    }
}
