//! Dense matrices used throughout the processing chain, plus the `RHS1`
//! (complex) and `RHM1` (real) binary interchange formats.
//!
//! Storage is column-major: one column is one pulse (raw data) or one time
//! frame (maps), which is the axis every stage parallelizes over.
//!
//! File layout, all little-endian:
//!
//! ```text
//! RHS1: b"RHS1" | rows u32 | cols u32 | row_step f64 | col_step f64 | rows*cols*(re f32, im f32)
//! RHM1: b"RHM1" | rows u32 | cols u32 | row_step f64 | col_step f64 | rows*cols*f32
//! ```
//!
//! Values are written row-major. For raw data the steps are `T_s` and `T_PRI`.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const COMPLEX_MAGIC: [u8; 4] = *b"RHS1";
pub const REAL_MAGIC: [u8; 4] = *b"RHM1";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    /// Builds from column-major data.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, v: Complex64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn column(&self, col: usize) -> &[Complex64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [Complex64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[Complex64]> {
        self.data.chunks(self.rows.max(1))
    }

    /// Column-major backing slice.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Sum of |v|² over all entries.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.energy() / self.data.len() as f64
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RealMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl RealMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Builds from column-major data.
    pub fn from_columns(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::invalid(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.rows + row]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[col * self.rows + row] = v;
    }

    pub fn column(&self, col: usize) -> &[f64] {
        &self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn column_mut(&mut self, col: usize) -> &mut [f64] {
        &mut self.data[col * self.rows..(col + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Row index of the largest value in `col` (first on ties).
    pub fn argmax_in_column(&self, col: usize) -> usize {
        argmax(self.column(col))
    }
}

pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn write_header(
    w: &mut impl Write,
    magic: [u8; 4],
    rows: usize,
    cols: usize,
    steps: (f64, f64),
) -> std::io::Result<()> {
    w.write_all(&magic)?;
    w.write_all(&(rows as u32).to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    w.write_all(&steps.0.to_le_bytes())?;
    w.write_all(&steps.1.to_le_bytes())
}

/// Encodes a complex matrix as `RHS1`.
pub fn encode_complex(m: &ComplexMatrix, steps: (f64, f64)) -> Result<Vec<u8>> {
    check_dims(m.rows, m.cols)?;
    let mut out = Vec::with_capacity(HEADER_LEN + m.rows * m.cols * 8);
    write_header(&mut out, COMPLEX_MAGIC, m.rows, m.cols, steps).expect("vec write");
    for r in 0..m.rows {
        for c in 0..m.cols {
            let v = m.get(r, c);
            out.extend_from_slice(&(v.re as f32).to_le_bytes());
            out.extend_from_slice(&(v.im as f32).to_le_bytes());
        }
    }
    Ok(out)
}

/// Encodes a real matrix as `RHM1`.
pub fn encode_real(m: &RealMatrix, steps: (f64, f64)) -> Result<Vec<u8>> {
    check_dims(m.rows, m.cols)?;
    let mut out = Vec::with_capacity(HEADER_LEN + m.rows * m.cols * 4);
    write_header(&mut out, REAL_MAGIC, m.rows, m.cols, steps).expect("vec write");
    for r in 0..m.rows {
        for c in 0..m.cols {
            out.extend_from_slice(&(m.get(r, c) as f32).to_le_bytes());
        }
    }
    Ok(out)
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(Error::Format(format!("{rows}x{cols} exceeds u32 dimensions")));
    }
    Ok(())
}

/// A decoded `RHS1` or `RHM1` file.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixFile {
    Complex {
        matrix: ComplexMatrix,
        steps: (f64, f64),
    },
    Real {
        matrix: RealMatrix,
        steps: (f64, f64),
    },
}

impl MatrixFile {
    pub fn magic(&self) -> &'static str {
        match self {
            MatrixFile::Complex { .. } => "RHS1",
            MatrixFile::Real { .. } => "RHM1",
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match self {
            MatrixFile::Complex { matrix, .. } => (matrix.rows(), matrix.cols()),
            MatrixFile::Real { matrix, .. } => (matrix.rows(), matrix.cols()),
        }
    }

    pub fn steps(&self) -> (f64, f64) {
        match self {
            MatrixFile::Complex { steps, .. } | MatrixFile::Real { steps, .. } => *steps,
        }
    }
}

/// Decodes either format, dispatching on the magic bytes.
pub fn decode(mut r: impl Read) -> Result<MatrixFile> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)
        .map_err(|e| Error::Format(format!("truncated header: {e}")))?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let steps = (
        f64::from_le_bytes(header[12..20].try_into().unwrap()),
        f64::from_le_bytes(header[20..28].try_into().unwrap()),
    );
    let per_value = match magic {
        COMPLEX_MAGIC => 8,
        REAL_MAGIC => 4,
        other => {
            return Err(Error::Format(format!(
                "unknown magic {:?}",
                String::from_utf8_lossy(&other)
            )))
        }
    };
    let mut body = vec![0u8; rows * cols * per_value];
    r.read_exact(&mut body)
        .map_err(|e| Error::Format(format!("truncated body for {rows}x{cols}: {e}")))?;
    let f32_at = |i: usize| f32::from_le_bytes(body[i..i + 4].try_into().unwrap()) as f64;

    if magic == COMPLEX_MAGIC {
        let mut m = ComplexMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                let off = (r * cols + c) * 8;
                m.set(r, c, Complex64::new(f32_at(off), f32_at(off + 4)));
            }
        }
        Ok(MatrixFile::Complex { matrix: m, steps })
    } else {
        let mut m = RealMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f32_at((r * cols + c) * 4));
            }
        }
        Ok(MatrixFile::Real { matrix: m, steps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn header_is_bit_exact() {
        let m = ComplexMatrix::from_fn(2, 3, |r, c| Complex64::new(r as f64, c as f64));
        let bytes = encode_complex(&m, (1e-7, 2e-4)).unwrap();
        assert_eq!(&bytes[0..4], b"RHS1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(f64::from_le_bytes(bytes[12..20].try_into().unwrap()), 1e-7);
        assert_eq!(f64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2e-4);
        assert_eq!(bytes.len(), 28 + 6 * 8);
        // row-major: second value is (row 0, col 1) = 0 + 1j
        let re = f32::from_le_bytes(bytes[36..40].try_into().unwrap());
        let im = f32::from_le_bytes(bytes[40..44].try_into().unwrap());
        assert_eq!((re, im), (0.0, 1.0));
    }

    #[test]
    fn rejects_unknown_magic_and_truncation() {
        let mut bytes = encode_real(&RealMatrix::zeros(2, 2), (1.0, 1.0)).unwrap();
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes[..]), Err(Error::Format(_))));
    }

    proptest! {
        #[test]
        fn complex_round_trip_is_f32_exact(
            rows in 1usize..6, cols in 1usize..6,
            seed in any::<u32>(),
        ) {
            let m = ComplexMatrix::from_fn(rows, cols, |r, c| {
                let v = (seed as f64 + 1.0) * (r as f64 + 0.5) - c as f64;
                Complex64::new((v as f32) as f64, (-v as f32) as f64)
            });
            let bytes = encode_complex(&m, (0.5, 0.25)).unwrap();
            match decode(&bytes[..]).unwrap() {
                MatrixFile::Complex { matrix, steps } => {
                    prop_assert_eq!(matrix, m);
                    prop_assert_eq!(steps, (0.5, 0.25));
                }
                _ => prop_assert!(false),
            }
        }

        #[test]
        fn real_round_trip_is_f32_exact(rows in 1usize..6, cols in 1usize..6, k in -1e3f32..1e3) {
            let mut m = RealMatrix::zeros(rows, cols);
            for r in 0..rows { for c in 0..cols { m.set(r, c, (k * (r + 2 * c) as f32) as f64); } }
            let bytes = encode_real(&m, (3.0, 4.0)).unwrap();
            prop_assert_eq!(decode(&bytes[..]).unwrap(), MatrixFile::Real { matrix: m, steps: (3.0, 4.0) });
        }
    }
}
