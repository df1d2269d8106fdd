use crate::error::{Error, Result};
use crate::matrix::RealMatrix;

/// Shannon entropy in nats of non-negative values normalised to unit sum.
pub fn entropy_of(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("entropy needs finite non-negative values"));
    }
    let total: f64 = values.iter().sum();
    if total <= 0.0 {
        return Err(Error::UndefinedEntropy);
    }
    Ok(-values
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| {
            let p = v / total;
            p * p.ln()
        })
        .sum::<f64>())
}

pub fn entropy(map: &RealMatrix) -> Result<f64> {
    entropy_of(map.as_slice())
}
