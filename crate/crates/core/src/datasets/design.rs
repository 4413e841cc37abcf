//! Sliced Latin hypercube designs.

use rand::Rng as _;

use crate::rng::{permutation, seeded, Rng};

/// Sliced Latin hypercube on `[0, 1]^dim`.
///
/// Returns `points_per_slice * n_slices` rows, slice `s` occupying rows
/// `s * points_per_slice .. (s + 1) * points_per_slice`. Each coordinate of
/// the full design has exactly one point per fine bin of width `1/N`, and
/// each slice has exactly one point per coarse bin of width
/// `1/points_per_slice`.
pub fn slhd(points_per_slice: usize, n_slices: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = seeded(seed);
    slhd_with(&mut rng, points_per_slice, n_slices, dim)
}

pub(crate) fn slhd_with(rng: &mut Rng, m: usize, t: usize, dim: usize) -> Vec<Vec<f64>> {
    assert!(m >= 1 && t >= 1 && dim >= 1, "slhd needs positive sizes");
    let n = m * t;
    let mut design = vec![vec![0.0; dim]; n];
    for d in 0..dim {
        // coarse[s][i]: coarse bin of point i in slice s
        let coarse: Vec<Vec<usize>> = (0..t).map(|_| permutation(rng, m)).collect();
        // The t points (one per slice) in coarse bin k share the fine bins
        // k*t .. (k+1)*t in random order.
        let fine: Vec<Vec<usize>> = (0..m).map(|_| permutation(rng, t)).collect();
        let mut next_in_bin = vec![0usize; m];
        for s in 0..t {
            for i in 0..m {
                let k = coarse[s][i];
                let slot = fine[k][next_in_bin[k]];
                next_in_bin[k] += 1;
                let bin = k * t + slot;
                let u: f64 = rng.random();
                design[s * m + i][d] = (bin as f64 + u) / n as f64;
            }
        }
    }
    design
}

/// Bin index of `u ∈ [0,1]` on a grid of `bins` equal cells.
pub fn bin_of(u: f64, bins: usize) -> usize {
    ((u * bins as f64).floor() as usize).min(bins - 1)
}
