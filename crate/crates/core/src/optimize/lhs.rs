use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::{permutation, seeded};

/// Number of point-exchange trials used to improve the maximin criterion.
pub const EXCHANGE_ITERATIONS: usize = 200;

/// Smallest Euclidean distance between two rows, or +∞ for fewer than two.
pub fn min_pairwise_distance(points: &[Vec<f64>]) -> f64 {
    closest_pair(points).map_or(f64::INFINITY, |(_, _, d)| d.sqrt())
}

fn closest_pair(points: &[Vec<f64>]) -> Option<(usize, usize, f64)> {
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum();
            if best.is_none_or(|(_, _, b)| d < b) {
                best = Some((i, j, d));
            }
        }
    }
    best
}

/// Latin hypercube of `n` points in the box, improved for the maximin
/// criterion by exchanging coordinates between rows.
///
/// An exchange swaps one coordinate between a point of the closest pair and
/// a random other point, so every bin keeps exactly one point. It is kept
/// only when the minimum distance strictly increases.
pub fn maximin_lhs(
    n: usize,
    d: usize,
    lower: &[f64],
    upper: &[f64],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    build(n, d, lower, upper, seed, EXCHANGE_ITERATIONS)
}

/// The starting design of [`maximin_lhs`] for the same seed, before any
/// exchange.
pub fn latin_hypercube(
    n: usize,
    d: usize,
    lower: &[f64],
    upper: &[f64],
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    build(n, d, lower, upper, seed, 0)
}

fn build(
    n: usize,
    d: usize,
    lower: &[f64],
    upper: &[f64],
    seed: u64,
    exchanges: usize,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 || lower.len() != d || upper.len() != d {
        return Err(Error::Dimension(format!(
            "maximin_lhs: n = {n}, d = {d}, bounds of length {} and {}",
            lower.len(),
            upper.len()
        )));
    }
    for i in 0..d {
        if !(lower[i] < upper[i]) {
            return Err(Error::InvalidParameter(format!(
                "degenerate box in dimension {i}: [{}, {}]",
                lower[i], upper[i]
            )));
        }
    }
    let mut rng = seeded(seed);
    // unit cube first, scaled at the end so distances weigh dimensions equally
    let mut unit = vec![vec![0.0; d]; n];
    for j in 0..d {
        let perm = permutation(&mut rng, n);
        for i in 0..n {
            let u: f64 = rng.random();
            unit[i][j] = (perm[i] as f64 + u) / n as f64;
        }
    }
    if n > 2 && d > 0 {
        let (mut a, mut b, mut best) = closest_pair(&unit).expect("n > 2");
        for _ in 0..exchanges {
            let i = if rng.random::<bool>() { a } else { b };
            let mut k = rng.random_range(0..n - 1);
            if k >= i {
                k += 1;
            }
            let j = rng.random_range(0..d);
            swap_coord(&mut unit, i, k, j);
            let (na, nb, nd) = closest_pair(&unit).expect("n > 2");
            if nd > best {
                (a, b, best) = (na, nb, nd);
            } else {
                swap_coord(&mut unit, i, k, j);
            }
        }
    }
    Ok(unit
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .map(|(j, u)| (lower[j] + u * (upper[j] - lower[j])).clamp(lower[j], upper[j]))
                .collect()
        })
        .collect())
}

fn swap_coord(points: &mut [Vec<f64>], a: usize, b: usize, j: usize) {
    let t = points[a][j];
    points[a][j] = points[b][j];
    points[b][j] = t;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::design::bin_of;

    #[test]
    fn single_point() {
        let p = maximin_lhs(1, 3, &[0.0; 3], &[1.0; 3], 0).unwrap();
        assert_eq!(p.len(), 1);
    }

    #[test]
    fn quartiles_in_one_dimension() {
        for seed in 0..20 {
            let p = maximin_lhs(4, 1, &[0.0], &[1.0], seed).unwrap();
            let mut bins: Vec<usize> = p.iter().map(|r| bin_of(r[0], 4)).collect();
            bins.sort_unstable();
            assert_eq!(bins, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn latin_in_scaled_box() {
        let lo = [-3.0, 10.0];
        let hi = [3.0, 20.0];
        let p = maximin_lhs(12, 2, &lo, &hi, 9).unwrap();
        for j in 0..2 {
            let mut bins: Vec<usize> = p
                .iter()
                .map(|r| bin_of((r[j] - lo[j]) / (hi[j] - lo[j]), 12))
                .collect();
            bins.sort_unstable();
            assert_eq!(bins, (0..12).collect::<Vec<_>>());
        }
    }

    #[test]
    fn exchange_never_worsens() {
        for seed in 0..100 {
            let before = latin_hypercube(10, 3, &[0.0; 3], &[1.0; 3], seed).unwrap();
            let after = maximin_lhs(10, 3, &[0.0; 3], &[1.0; 3], seed).unwrap();
            assert!(min_pairwise_distance(&after) >= min_pairwise_distance(&before));
        }
    }

    #[test]
    fn degenerate_box() {
        assert!(maximin_lhs(3, 1, &[1.0], &[1.0], 0).is_err());
        assert!(maximin_lhs(0, 1, &[0.0], &[1.0], 0).is_err());
    }
}
