//! Exponential hypersphere reparameterizations (EHH and FE).

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::hypersphere::{angle_count, hypersphere_lower};
use crate::error::{Error, Result};

/// Lower bound `ε` of the off-diagonal entries.
pub const EXP_EPSILON: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpMode {
    Ehh,
    Fe,
}

pub fn ehh_fe_param_count(levels: usize, mode: ExpMode) -> usize {
    angle_count(levels)
        + match mode {
            ExpMode::Ehh => 0,
            ExpMode::Fe => levels,
        }
}

/// Builds `T_zz' = exp(-τ_zz - τ_z'z' - 2 τ_zz')` for `z ≠ z'` with unit
/// diagonal, where `τ_zz' = log(ε)/2 · ((LLᵀ)_zz' - 1)` from a positive-only
/// homoscedastic hypersphere factor `L`. FE takes the `C` diagonal
/// parameters `τ_zz ≥ 0` first, followed by the angles; EHH fixes them to 0.
pub fn ehh_fe_matrix(params: &[f64], levels: usize, mode: ExpMode, eps: f64) -> Result<DMatrix<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("tolerance eps = {eps} outside (0, 1)")));
    }
    let expected = ehh_fe_param_count(levels, mode);
    if params.len() != expected {
        return Err(Error::Dimension(format!(
            "{mode:?} with {levels} levels expects {expected} parameters, got {}",
            params.len()
        )));
    }
    let (diag, angles) = match mode {
        ExpMode::Ehh => (&[][..], params),
        ExpMode::Fe => params.split_at(levels),
    };
    if let Some(d) = diag.iter().find(|d| !(**d >= 0.0)) {
        return Err(Error::InvalidParameter(format!("negative FE diagonal parameter {d}")));
    }
    if let Some(a) = angles.iter().find(|a| !(**a > 0.0 && **a < FRAC_PI_2)) {
        return Err(Error::InvalidParameter(format!("EHH/FE angle {a} outside (0, pi/2)")));
    }
    let l = hypersphere_lower(angles, levels, false, false)?;
    let r = &l * l.transpose();
    let half_log = eps.ln() / 2.0;
    let tau_diag = |i: usize| if diag.is_empty() { 0.0 } else { diag[i] };
    Ok(DMatrix::from_fn(levels, levels, |i, j| {
        if i == j {
            1.0
        } else {
            let tau = half_log * (r[(i, j)] - 1.0);
            (-tau_diag(i) - tau_diag(j) - 2.0 * tau).exp()
        }
    }))
}
