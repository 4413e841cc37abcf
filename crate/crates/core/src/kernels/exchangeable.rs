//! Compound symmetry and its complete-graph diffusion special case.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// `v` on the diagonal, `c` elsewhere. Valid iff `v > 0` and
/// `c / v ∈ (-1/(C-1), 1)`.
pub fn cs_matrix(v: f64, c: f64, levels: usize) -> Result<DMatrix<f64>> {
    if !(v > 0.0) {
        return Err(Error::InvalidParameter(format!("CS variance v = {v} must be > 0")));
    }
    let ratio = c / v;
    if !(ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "CS ratio c/v = {ratio} violates upper bound 1"
        )));
    }
    if levels > 1 {
        let lower = -1.0 / (levels - 1) as f64;
        if !(ratio > lower) {
            return Err(Error::InvalidParameter(format!(
                "CS ratio c/v = {ratio} violates lower bound -1/(C-1) = {lower}"
            )));
        }
    }
    Ok(cs_unchecked(v, c, levels))
}

pub(crate) fn cs_unchecked(v: f64, c: f64, levels: usize) -> DMatrix<f64> {
    DMatrix::from_fn(levels, levels, |i, j| if i == j { v } else { c })
}

/// `(v, c)` of the diffusion kernel on the complete graph with `C` vertices.
pub fn diffusion_cs_params(beta: f64, levels: usize) -> (f64, f64) {
    let c = levels as f64;
    let e = (-beta * c).exp();
    ((1.0 + (c - 1.0) * e) / c, (1.0 - e) / c)
}

pub fn diffusion_corr(beta: f64, levels: usize) -> Result<DMatrix<f64>> {
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("diffusion beta = {beta} must be > 0")));
    }
    let (v, c) = diffusion_cs_params(beta, levels);
    Ok(cs_unchecked(v, c, levels))
}
