//! Encoding-based categorical kernels: one-hot, multiplicative and LVGP.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn check_level(z: usize, levels: usize) -> Result<()> {
    if z == 0 || z > levels {
        Err(Error::InvalidLevel { level: z, levels })
    } else {
        Ok(())
    }
}

/// One-hot vector of level `z` (1-based).
pub fn one_hot_encode(z: usize, levels: usize) -> Vec<f64> {
    (1..=levels).map(|i| f64::from(u8::from(i == z))).collect()
}

/// RBF on one-hot encodings in closed form: 1 on the diagonal and
/// `exp(-(θ_z⁻² + θ_z'⁻²)/2)` elsewhere.
pub fn one_hot_corr(z: usize, z2: usize, theta: &[f64]) -> Result<f64> {
    check_level(z, theta.len())?;
    check_level(z2, theta.len())?;
    if let Some(t) = theta.iter().find(|t| !(**t > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive one-hot lengthscale {t}")));
    }
    Ok(if z == z2 {
        1.0
    } else {
        let (a, b) = (theta[z - 1], theta[z2 - 1]);
        (-0.5 * (1.0 / (a * a) + 1.0 / (b * b))).exp()
    })
}

pub fn one_hot_matrix(theta: &[f64]) -> Result<DMatrix<f64>> {
    let c = theta.len();
    let mut t = DMatrix::identity(c, c);
    for i in 1..=c {
        for j in 1..i {
            let v = one_hot_corr(i, j, theta)?;
            t[(i - 1, j - 1)] = v;
            t[(j - 1, i - 1)] = v;
        }
    }
    Ok(t)
}

/// `1` on the diagonal and `exp(-θ_z - θ_z')` elsewhere.
pub fn multiplicative_corr(z: usize, z2: usize, theta: &[f64]) -> Result<f64> {
    check_level(z, theta.len())?;
    check_level(z2, theta.len())?;
    if let Some(t) = theta.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative multiplicative parameter {t}")));
    }
    Ok(if z == z2 {
        1.0
    } else {
        (-theta[z - 1] - theta[z2 - 1]).exp()
    })
}

pub fn multiplicative_matrix(theta: &[f64]) -> Result<DMatrix<f64>> {
    let c = theta.len();
    let mut t = DMatrix::identity(c, c);
    for i in 1..=c {
        for j in 1..i {
            let v = multiplicative_corr(i, j, theta)?;
            t[(i - 1, j - 1)] = v;
            t[(j - 1, i - 1)] = v;
        }
    }
    Ok(t)
}

/// Multiplicative parameters reproducing the one-hot kernel:
/// `θ_mult = 1 / (2 θ_onehot²)`.
pub fn one_hot_to_multiplicative(theta: &[f64]) -> Vec<f64> {
    theta.iter().map(|t| 0.5 / (t * t)).collect()
}

pub fn lvgp_param_count(levels: usize, latent_dim: usize) -> usize {
    latent_dim * levels - latent_dim * (latent_dim + 1) / 2
}

pub const LVGP_BOUND: f64 = 3.0;

/// Latent embedding `Φ` (C × q): row 1 is zero, row `i ≤ q` has its
/// coordinates `i..q` zeroed, later rows are free. Parameters fill the free
/// entries row by row.
pub fn lvgp_embed(params: &[f64], levels: usize, latent_dim: usize) -> Result<DMatrix<f64>> {
    if !(latent_dim >= 1 && latent_dim < levels) {
        return Err(Error::InvalidParameter(format!(
            "LVGP needs 1 ≤ q < C, got q = {latent_dim}, C = {levels}"
        )));
    }
    let expected = lvgp_param_count(levels, latent_dim);
    if params.len() != expected {
        return Err(Error::Dimension(format!(
            "LVGP with C = {levels}, q = {latent_dim} expects {expected} parameters, got {}",
            params.len()
        )));
    }
    if let Some(p) = params.iter().find(|p| !(p.abs() <= LVGP_BOUND)) {
        return Err(Error::InvalidParameter(format!("latent coordinate {p} outside [-3, 3]")));
    }
    let mut phi = DMatrix::zeros(levels, latent_dim);
    let mut it = params.iter();
    for i in 1..levels {
        for k in 0..i.min(latent_dim) {
            phi[(i, k)] = *it.next().expect("length checked");
        }
    }
    Ok(phi)
}

/// `exp(-‖φ(z) - φ(z')‖²)` for every pair of latent rows.
pub fn latent_gram(phi: &DMatrix<f64>) -> DMatrix<f64> {
    let c = phi.nrows();
    DMatrix::from_fn(c, c, |i, j| {
        let d2: f64 = (0..phi.ncols()).map(|k| (phi[(i, k)] - phi[(j, k)]).powi(2)).sum();
        (-d2).exp()
    })
}
