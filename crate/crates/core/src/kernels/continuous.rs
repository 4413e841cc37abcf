use crate::error::{Error, Result};

/// ARD squared-exponential kernel `∏ exp(-(x_i - x'_i)² / (2 θ_i²))`.
pub fn rbf_ard(x: &[f64], x2: &[f64], lengthscales: &[f64]) -> Result<f64> {
    if x.len() != x2.len() || x.len() != lengthscales.len() {
        return Err(Error::Dimension(format!(
            "rbf_ard: inputs of length {} and {} with {} lengthscales",
            x.len(),
            x2.len(),
            lengthscales.len()
        )));
    }
    if let Some(t) = lengthscales.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive lengthscale {t}")));
    }
    Ok(rbf_ard_unchecked(x, x2, lengthscales))
}

#[inline]
pub(crate) fn rbf_ard_unchecked(x: &[f64], x2: &[f64], lengthscales: &[f64]) -> f64 {
    let s: f64 = x
        .iter()
        .zip(x2)
        .zip(lengthscales)
        .map(|((a, b), t)| (a - b) * (a - b) / (2.0 * t * t))
        .sum();
    (-s).exp()
}
