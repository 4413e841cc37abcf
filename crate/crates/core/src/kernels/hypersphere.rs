//! Hypersphere (spherical-coordinate) parameterization of Cholesky factors.
//!
//! Parameter layout: for the heteroscedastic variant the `C` radii come first,
//! followed by the angles row by row, `θ(2,1), θ(3,1), θ(3,2), θ(4,1), …`.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub fn angle_count(levels: usize) -> usize {
    levels * levels.saturating_sub(1) / 2
}

pub fn hypersphere_param_count(levels: usize, heteroscedastic: bool) -> usize {
    angle_count(levels) + if heteroscedastic { levels } else { 0 }
}

/// Number of free angles of the rank-`rank` variant: row `i` keeps
/// `min(i - 1, rank - 1)` angles.
pub fn lowrank_param_count(levels: usize, rank: usize) -> usize {
    (1..=levels).map(|i| (i - 1).min(rank - 1)).sum()
}

fn check_angle(a: f64, upper: f64) -> Result<()> {
    if a > 0.0 && a < upper {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "hypersphere angle {a} outside (0, {upper})"
        )))
    }
}

/// Lower-triangular factor `L` whose row `i` is the point of angles
/// `θ(i,1..i-1)` on the sphere of radius `θ(i,0)` (1 when homoscedastic).
pub fn hypersphere_lower(
    params: &[f64],
    levels: usize,
    heteroscedastic: bool,
    allow_negative: bool,
) -> Result<DMatrix<f64>> {
    let expected = hypersphere_param_count(levels, heteroscedastic);
    if params.len() != expected {
        return Err(Error::Dimension(format!(
            "hypersphere with {levels} levels expects {expected} parameters, got {}",
            params.len()
        )));
    }
    let (radii, angles) = if heteroscedastic {
        params.split_at(levels)
    } else {
        (&[][..], params)
    };
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0)) {
        return Err(Error::InvalidParameter(format!("nonpositive radius {r}")));
    }
    let upper = if allow_negative { PI } else { FRAC_PI_2 };
    for &a in angles {
        check_angle(a, upper)?;
    }
    let mut l = DMatrix::zeros(levels, levels);
    let mut offset = 0;
    for i in 0..levels {
        let radius = if heteroscedastic { radii[i] } else { 1.0 };
        let row = &angles[offset..offset + i];
        offset += i;
        fill_sphere_row(&mut l, i, row, radius, i + 1);
    }
    Ok(l)
}

/// Writes the spherical point for `row_angles` into row `i`, columns
/// `0..width`. The last column carries the product of all sines.
fn fill_sphere_row(m: &mut DMatrix<f64>, i: usize, row_angles: &[f64], radius: f64, width: usize) {
    let mut sin_prod = radius;
    for (j, &a) in row_angles.iter().enumerate() {
        m[(i, j)] = sin_prod * a.cos();
        // Keeps optimized builds from fusing this with the cos above into a
        // `sincos` call, whose last bit can differ and change fits.
        sin_prod *= std::hint::black_box(a).sin();
    }
    if row_angles.len() < width {
        m[(i, row_angles.len())] = sin_prod;
    }
}

/// `C × rank` factor `U` of a rank-deficient homoscedastic correlation
/// `T = U Uᵀ`: angles beyond column `rank` of the full factor are fixed to 0,
/// which zeroes the remaining columns.
pub fn lowrank_hypersphere(params: &[f64], levels: usize, rank: usize) -> Result<DMatrix<f64>> {
    if !(rank > 1 && rank < levels) {
        return Err(Error::InvalidParameter(format!(
            "low-rank hypersphere needs 1 < q < C, got q = {rank}, C = {levels}"
        )));
    }
    let expected = lowrank_param_count(levels, rank);
    if params.len() != expected {
        return Err(Error::Dimension(format!(
            "rank-{rank} hypersphere with {levels} levels expects {expected} parameters, got {}",
            params.len()
        )));
    }
    for &a in params {
        check_angle(a, FRAC_PI_2)?;
    }
    let mut u = DMatrix::zeros(levels, rank);
    let mut offset = 0;
    for i in 0..levels {
        let k = i.min(rank - 1);
        fill_sphere_row(&mut u, i, &params[offset..offset + k], 1.0, rank);
        offset += k;
    }
    Ok(u)
}
