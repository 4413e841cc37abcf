//! Group inference for categorical levels.
//!
//! Levels are embedded either by their target mean and standard deviation
//! (MSD) or by the pseudo-distance of a fitted proxy kernel, clustered by
//! average-linkage agglomeration, and the number of groups is chosen by the
//! silhouette score over `2..=C-1`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{CorrelationMatrix, GroupPartition};

/// `(μ_c, σ_c)` per level, in output units.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEmbedding {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl LevelEmbedding {
    pub fn levels(&self) -> usize {
        self.mean.len()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.mean.iter().zip(&self.std).map(|(m, s)| vec![*m, *s]).collect()
    }

    pub fn distances(&self) -> LevelDistanceMatrix {
        LevelDistanceMatrix::euclidean(&self.points())
    }
}

/// Symmetric, nonnegative, zero-diagonal level distances.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelDistanceMatrix(pub DMatrix<f64>);

impl LevelDistanceMatrix {
    pub fn new(d: DMatrix<f64>) -> Result<Self> {
        let c = d.nrows();
        if d.ncols() != c {
            return Err(Error::Dimension(format!("{}×{} distance matrix", c, d.ncols())));
        }
        for i in 0..c {
            if d[(i, i)] != 0.0 {
                return Err(Error::InvalidParameter(format!("nonzero diagonal at level {}", i + 1)));
            }
            for j in 0..i {
                if !(d[(i, j)] >= 0.0) || d[(i, j)] != d[(j, i)] {
                    return Err(Error::InvalidParameter(format!(
                        "distance between levels {} and {} is negative or asymmetric",
                        j + 1,
                        i + 1
                    )));
                }
            }
        }
        Ok(Self(d))
    }

    pub fn euclidean(points: &[Vec<f64>]) -> Self {
        let c = points.len();
        Self(DMatrix::from_fn(c, c, |i, j| {
            points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        }))
    }

    pub fn levels(&self) -> usize {
        self.0.nrows()
    }

    fn d(&self, a: usize, b: usize) -> f64 {
        self.0[(a, b)]
    }
}

/// Per-level mean and population standard deviation of `y`.
pub fn target_msd(z: &[usize], y: &[f64], levels: usize) -> Result<LevelEmbedding> {
    if z.len() != y.len() {
        return Err(Error::Dimension(format!("{} levels for {} targets", z.len(), y.len())));
    }
    let mut sum = vec![0.0; levels];
    let mut count = vec![0usize; levels];
    for (&l, &v) in z.iter().zip(y) {
        if l == 0 || l > levels {
            return Err(Error::InvalidLevel { level: l, levels });
        }
        sum[l - 1] += v;
        count[l - 1] += 1;
    }
    if let Some(missing) = count.iter().position(|&c| c == 0) {
        return Err(Error::MissingLevel(missing + 1));
    }
    let mean: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| s / c as f64).collect();
    let mut sq = vec![0.0; levels];
    for (&l, &v) in z.iter().zip(y) {
        sq[l - 1] += (v - mean[l - 1]).powi(2);
    }
    let std = sq.iter().zip(&count).map(|(s, &c)| (s / c as f64).sqrt()).collect();
    Ok(LevelEmbedding { mean, std })
}

/// `d(z, z') = sqrt(T_zz + T_z'z' - 2 T_zz')`.
pub fn kernel_distance(t: &CorrelationMatrix) -> Result<LevelDistanceMatrix> {
    let c = t.levels();
    let mut d = DMatrix::zeros(c, c);
    for i in 0..c {
        for j in 0..i {
            let r = t.0[(i, i)] + t.0[(j, j)] - 2.0 * t.0[(i, j)];
            if r < -1e-12 {
                return Err(Error::InvalidParameter(format!(
                    "negative squared distance {r} between levels {} and {}",
                    j + 1,
                    i + 1
                )));
            }
            let v = r.max(0.0).sqrt();
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    Ok(LevelDistanceMatrix(d))
}

fn average_distance(d: &LevelDistanceMatrix, a: &[usize], b: &[usize]) -> f64 {
    let s: f64 = a.iter().flat_map(|&i| b.iter().map(move |&j| d.d(i, j))).sum();
    s / (a.len() * b.len()) as f64
}

/// Average-linkage agglomeration down to `q` clusters.
///
/// Equal linkages are resolved by merging the pair whose smallest members
/// are lexicographically first.
pub fn agglomerative(d: &LevelDistanceMatrix, q: usize) -> Result<GroupPartition> {
    let c = d.levels();
    if q < 1 || q > c {
        return Err(Error::InvalidParameter(format!("cannot form {q} groups from {c} levels")));
    }
    // clusters stay sorted by their smallest member
    let mut clusters: Vec<Vec<usize>> = (0..c).map(|i| vec![i]).collect();
    while clusters.len() > q {
        let mut best = (f64::INFINITY, 0, 1);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let l = average_distance(d, &clusters[a], &clusters[b]);
                if l < best.0 {
                    best = (l, a, b);
                }
            }
        }
        let (_, a, b) = best;
        let merged = clusters.remove(b);
        clusters[a].extend(merged);
        clusters[a].sort_unstable();
    }
    to_partition(&clusters, c)
}

fn to_partition(clusters: &[Vec<usize>], c: usize) -> Result<GroupPartition> {
    GroupPartition::new(
        clusters.iter().map(|g| g.iter().map(|i| i + 1).collect()).collect(),
        c,
    )
}

/// Silhouette of one level. Singletons score 0.
fn point_silhouette(d: &LevelDistanceMatrix, groups: &[Vec<usize>], g: usize, z: usize) -> f64 {
    let own = &groups[g];
    if own.len() == 1 {
        return 0.0;
    }
    let a = own.iter().filter(|&&o| o != z).map(|&o| d.d(z, o)).sum::<f64>() / (own.len() - 1) as f64;
    let b = groups
        .iter()
        .enumerate()
        .filter(|(h, _)| *h != g)
        .map(|(_, other)| other.iter().map(|&o| d.d(z, o)).sum::<f64>() / other.len() as f64)
        .fold(f64::INFINITY, f64::min);
    let m = a.max(b);
    if m > 0.0 {
        (b - a) / m
    } else {
        0.0
    }
}

/// Mean over clusters of the mean silhouette of their members. Defined for
/// `2 ≤ γ ≤ C - 1` groups.
pub fn silhouette(d: &LevelDistanceMatrix, partition: &GroupPartition) -> Result<f64> {
    let c = d.levels();
    let q = partition.n_groups();
    if partition.levels() != c {
        return Err(Error::Dimension(format!(
            "partition of {} levels for a {c}-level distance matrix",
            partition.levels()
        )));
    }
    if q < 2 || q + 1 > c {
        return Err(Error::InvalidParameter(format!(
            "silhouette needs between 2 and C-1 = {} groups, got {q}",
            c.saturating_sub(1)
        )));
    }
    let groups: Vec<Vec<usize>> = partition
        .groups()
        .iter()
        .map(|g| g.iter().map(|l| l - 1).collect())
        .collect();
    let total: f64 = groups
        .iter()
        .enumerate()
        .map(|(g, members)| {
            members.iter().map(|&z| point_silhouette(d, &groups, g, z)).sum::<f64>() / members.len() as f64
        })
        .sum();
    Ok(total / q as f64)
}

/// Outcome of the automatic choice of the group count.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSelection {
    pub partition: GroupPartition,
    pub n_groups: usize,
    /// `(Q, silhouette)` for every candidate Q.
    pub scores: Vec<(usize, f64)>,
}

/// Clusters for every `Q` in `2..=C-1` and keeps the best silhouette;
/// ties go to the smallest `Q`.
pub fn select_groups(d: &LevelDistanceMatrix) -> Result<GroupSelection> {
    let c = d.levels();
    if c < 3 {
        return Err(Error::InvalidParameter(format!(
            "automatic group selection needs at least 3 levels (got {c}); use CS for a single \
             group or a hypersphere kernel for one group per level"
        )));
    }
    let mut best: Option<(f64, GroupPartition, usize)> = None;
    let mut scores = Vec::new();
    for q in 2..c {
        let p = agglomerative(d, q)?;
        let s = silhouette(d, &p)?;
        scores.push((q, s));
        if best.as_ref().is_none_or(|(b, _, _)| s > *b) {
            best = Some((s, p, q));
        }
    }
    let (_, partition, n_groups) = best.expect("at least one candidate");
    Ok(GroupSelection {
        partition,
        n_groups,
        scores,
    })
}

/// MSD pipeline on one categorical column.
pub fn msd_groups(z: &[usize], y: &[f64], levels: usize) -> Result<GroupSelection> {
    select_groups(&target_msd(z, y, levels)?.distances())
}

/// Groups from the rows of a fitted LVGP latent embedding.
pub fn groups_from_lvgp(phi: &DMatrix<f64>) -> Result<GroupSelection> {
    let points: Vec<Vec<f64>> = phi.row_iter().map(|r| r.iter().copied().collect()).collect();
    select_groups(&LevelDistanceMatrix::euclidean(&points))
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings of different lengths");
    let n = a.len();
    let choose2 = |k: usize| (k * k.saturating_sub(1)) as f64 / 2.0;
    let mut table = std::collections::HashMap::<(usize, usize), usize>::new();
    let mut ra = std::collections::HashMap::<usize, usize>::new();
    let mut rb = std::collections::HashMap::<usize, usize>::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *ra.entry(x).or_default() += 1;
        *rb.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&k| choose2(k)).sum();
    let sa: f64 = ra.values().map(|&k| choose2(k)).sum();
    let sb: f64 = rb.values().map(|&k| choose2(k)).sum();
    let expected = sa * sb / choose2(n);
    let max = 0.5 * (sa + sb);
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests;
