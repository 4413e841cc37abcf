//! Nested (group / generalized compound symmetry) covariance matrices.

use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::exchangeable::cs_unchecked;
use super::hypersphere::{hypersphere_lower, hypersphere_param_count};
use super::{ANGLE_MARGIN, RADIUS_BOUNDS, VARIANCE_BOUNDS};
use crate::error::{Error, Result};
use crate::linalg::{helmert_basis, is_symmetric, min_eigenvalue, Cholesky};

/// Partition of levels `1..=C` into disjoint non-empty groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupPartition {
    groups: Vec<Vec<usize>>,
}

impl GroupPartition {
    pub fn new(groups: Vec<Vec<usize>>, levels: usize) -> Result<Self> {
        if groups.is_empty() || groups.iter().any(Vec::is_empty) {
            return Err(Error::InvalidParameter("partition has an empty group".into()));
        }
        let mut seen = vec![false; levels];
        for &l in groups.iter().flatten() {
            if l == 0 || l > levels {
                return Err(Error::InvalidLevel { level: l, levels });
            }
            if std::mem::replace(&mut seen[l - 1], true) {
                return Err(Error::InvalidParameter(format!("level {l} in two groups")));
            }
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidParameter(format!(
                "level {} not covered by the partition",
                missing + 1
            )));
        }
        Ok(Self { groups })
    }

    /// Builds a partition from 0-based cluster labels of levels `1..=C`.
    /// Groups are ordered by their smallest level.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut slot = std::collections::HashMap::new();
        for (i, &lab) in labels.iter().enumerate() {
            let g = *slot.entry(lab).or_insert_with(|| {
                groups.push(Vec::new());
                groups.len() - 1
            });
            groups[g].push(i + 1);
        }
        Self { groups }
    }

    pub fn singletons(levels: usize) -> Self {
        Self::from_labels(&(0..levels).collect::<Vec<_>>())
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn levels(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.groups.iter().map(Vec::len).collect()
    }

    /// `(group, position within group)` of every level, 0-based.
    pub fn membership(&self) -> Vec<(usize, usize)> {
        let mut m = vec![(0, 0); self.levels()];
        for (g, members) in self.groups.iter().enumerate() {
            for (p, &l) in members.iter().enumerate() {
                m[l - 1] = (g, p);
            }
        }
        m
    }

    /// Group label of every level (0-based), for partition comparisons.
    pub fn labels(&self) -> Vec<usize> {
        self.membership().into_iter().map(|(g, _)| g).collect()
    }

    /// Canonical form: sorted groups ordered by smallest member.
    pub fn canonical(&self) -> Self {
        let mut groups = self.groups.clone();
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.sort();
        Self { groups }
    }
}

/// Structure of the between-group matrix `B*` or of the within-group
/// generators.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BlockKind {
    #[serde(rename = "CS")]
    Cs,
    Ho,
    He,
}

impl std::str::FromStr for BlockKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "CS" | "cs" => Ok(BlockKind::Cs),
            "Ho" | "ho" => Ok(BlockKind::Ho),
            "He" | "he" => Ok(BlockKind::He),
            _ => Err(Error::Config(format!("unknown block kind '{s}'"))),
        }
    }
}

/// Parameter layout of a nested kernel: the between block first, then one
/// block per group. Singleton groups have an empty centered part and carry no
/// within parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct NestedLayout {
    pub between: Range<usize>,
    pub within: Vec<Range<usize>>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl NestedLayout {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }
}

fn push_hypersphere_bounds(lower: &mut Vec<f64>, upper: &mut Vec<f64>, size: usize, hetero: bool) {
    if hetero {
        lower.extend(std::iter::repeat_n(RADIUS_BOUNDS.0, size));
        upper.extend(std::iter::repeat_n(RADIUS_BOUNDS.1, size));
    }
    let n_angles = hypersphere_param_count(size, false);
    lower.extend(std::iter::repeat_n(ANGLE_MARGIN, n_angles));
    upper.extend(std::iter::repeat_n(PI - ANGLE_MARGIN, n_angles));
}

/// CS ratio bounds `c/v ∈ (-1/(C-1), 1)` shrunk by the angle margin.
pub(crate) fn cs_ratio_bounds(levels: usize) -> (f64, f64) {
    let lo = if levels > 1 {
        -1.0 / (levels - 1) as f64 + ANGLE_MARGIN
    } else {
        0.0
    };
    (lo, 1.0 - ANGLE_MARGIN)
}

fn push_block_bounds(lower: &mut Vec<f64>, upper: &mut Vec<f64>, kind: BlockKind, size: usize, within: bool) {
    match (kind, within) {
        (BlockKind::Cs, false) => {
            let (rlo, rhi) = cs_ratio_bounds(size);
            lower.extend([VARIANCE_BOUNDS.0, rlo]);
            upper.extend([VARIANCE_BOUNDS.1, rhi]);
        }
        (BlockKind::Cs, true) => {
            lower.push(VARIANCE_BOUNDS.0);
            upper.push(VARIANCE_BOUNDS.1);
        }
        (BlockKind::Ho, _) => push_hypersphere_bounds(lower, upper, size, false),
        (BlockKind::He, _) => push_hypersphere_bounds(lower, upper, size, true),
    }
}

/// Layout and box bounds of a nested kernel's parameter vector.
pub fn nested_param_pack(between: BlockKind, within: BlockKind, partition: &GroupPartition) -> NestedLayout {
    let (mut lower, mut upper) = (Vec::new(), Vec::new());
    push_block_bounds(&mut lower, &mut upper, between, partition.n_groups(), false);
    let between_range = 0..lower.len();
    let mut within_ranges = Vec::with_capacity(partition.n_groups());
    for &n in &partition.sizes() {
        let start = lower.len();
        if n > 1 {
            push_block_bounds(&mut lower, &mut upper, within, n, true);
        }
        within_ranges.push(start..lower.len());
    }
    NestedLayout {
        between: between_range,
        within: within_ranges,
        lower,
        upper,
    }
}

pub fn nested_param_count(between: BlockKind, within: BlockKind, partition: &GroupPartition) -> usize {
    nested_param_pack(between, within, partition).len()
}

fn between_matrix(kind: BlockKind, p: &[f64], gamma: usize) -> Result<DMatrix<f64>> {
    Ok(match kind {
        BlockKind::Cs => {
            let (v, r) = (p[0], p[1]);
            let (lo, hi) = cs_ratio_bounds(gamma);
            if !(v > 0.0) || !(r >= lo - ANGLE_MARGIN && r < hi + ANGLE_MARGIN) {
                return Err(Error::InvalidParameter(format!(
                    "between CS parameters (v = {v}, c/v = {r}) invalid"
                )));
            }
            cs_unchecked(v, r * v, gamma)
        }
        BlockKind::Ho | BlockKind::He => {
            let l = hypersphere_lower(p, gamma, kind == BlockKind::He, true)?;
            &l * l.transpose()
        }
    })
}

fn within_matrix(kind: BlockKind, p: &[f64], n: usize, basis: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Ok(DMatrix::zeros(0, 0));
    }
    Ok(match kind {
        BlockKind::Cs => {
            if !(p[0] >= 0.0) {
                return Err(Error::InvalidParameter(format!("within variance {} < 0", p[0])));
            }
            DMatrix::identity(n - 1, n - 1) * p[0]
        }
        BlockKind::Ho | BlockKind::He => {
            let l = hypersphere_lower(p, n, kind == BlockKind::He, true)?;
            let g = &l * l.transpose();
            basis.transpose() * g * basis
        }
    })
}

/// Assembles `T` from the between-group matrix `B*` and the centered
/// within-group matrices `M_l` (sizes `n_l - 1`), using the Helmert basis for
/// `A_l`. Entries are indexed by level, not by block order.
pub fn nested_matrix(b_star: &DMatrix<f64>, m: &[DMatrix<f64>], partition: &GroupPartition) -> Result<DMatrix<f64>> {
    let gamma = partition.n_groups();
    if b_star.nrows() != gamma || b_star.ncols() != gamma || m.len() != gamma {
        return Err(Error::Dimension(format!(
            "nested kernel with {gamma} groups got B* of {}×{} and {} within matrices",
            b_star.nrows(),
            b_star.ncols(),
            m.len()
        )));
    }
    if !is_symmetric(b_star, 1e-12) || Cholesky::factor(b_star, 0.0).is_none() {
        return Err(Error::InvalidParameter("B* is not symmetric positive definite".into()));
    }
    for (ml, &n) in m.iter().zip(&partition.sizes()) {
        if ml.nrows() != n - 1 || ml.ncols() != n - 1 {
            return Err(Error::Dimension(format!(
                "within matrix of size {}×{} for a group of {n} levels",
                ml.nrows(),
                ml.ncols()
            )));
        }
        if !is_symmetric(ml, 1e-12) || min_eigenvalue(ml) < -1e-10 {
            return Err(Error::InvalidParameter("within matrix is not symmetric PSD".into()));
        }
    }
    Ok(assemble(b_star, m, partition))
}

fn assemble(b_star: &DMatrix<f64>, m: &[DMatrix<f64>], partition: &GroupPartition) -> DMatrix<f64> {
    let centered: Vec<DMatrix<f64>> = m
        .iter()
        .zip(&partition.sizes())
        .map(|(ml, &n)| {
            if n < 2 {
                DMatrix::zeros(n, n)
            } else {
                let a = helmert_basis(n);
                &a * ml * a.transpose()
            }
        })
        .collect();
    let member = partition.membership();
    let c = member.len();
    DMatrix::from_fn(c, c, |i, j| {
        let ((gi, pi), (gj, pj)) = (member[i], member[j]);
        let base = b_star[(gi, gj)];
        if gi == gj {
            base + centered[gi][(pi, pj)]
        } else {
            base
        }
    })
}

/// Builds a nested covariance from its packed parameter vector.
pub fn nested_from_params(
    params: &[f64],
    between: BlockKind,
    within: BlockKind,
    partition: &GroupPartition,
) -> Result<DMatrix<f64>> {
    let layout = nested_param_pack(between, within, partition);
    if params.len() != layout.len() {
        return Err(Error::Dimension(format!(
            "nested kernel expects {} parameters, got {}",
            layout.len(),
            params.len()
        )));
    }
    let b_star = between_matrix(between, &params[layout.between.clone()], partition.n_groups())?;
    let m = layout
        .within
        .iter()
        .zip(&partition.sizes())
        .map(|(r, &n)| within_matrix(within, &params[r.clone()], n, &helmert_basis(n)))
        .collect::<Result<Vec<_>>>()?;
    Ok(assemble(&b_star, &m, partition))
}

/// Which validity condition failed first.
#[derive(Clone, Debug, PartialEq)]
pub enum GcsFailure {
    WithinNotPsd { group: usize, eigenvalue: f64 },
    CenteredWithinNotPsd { group: usize, eigenvalue: f64 },
    BlockMeansNotPd { eigenvalue: f64 },
    BetweenBlockNotConstant { groups: (usize, usize) },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GcsReport {
    pub valid: bool,
    pub failure: Option<GcsFailure>,
    /// Block-mean matrix `T̃`.
    pub block_means: DMatrix<f64>,
}

const PSD_TOL: f64 = -1e-10;

fn sub_block(t: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| t[(rows[i] - 1, cols[j] - 1)])
}

/// Checks the block conditions: each `W_l` PSD, each `W_l` minus its mean
/// PSD, and the block-mean matrix `T̃` positive definite. Off-diagonal blocks
/// must be constant.
pub fn validate_gcs(t: &DMatrix<f64>, partition: &GroupPartition) -> GcsReport {
    let groups = partition.groups();
    let gamma = groups.len();
    let mut means = DMatrix::zeros(gamma, gamma);
    let mut failure = None;
    for a in 0..gamma {
        for b in 0..gamma {
            let block = sub_block(t, &groups[a], &groups[b]);
            means[(a, b)] = block.mean();
            if a != b && failure.is_none() {
                let spread = block.max() - block.min();
                if spread > 1e-10 * block.amax().max(1.0) {
                    failure = Some(GcsFailure::BetweenBlockNotConstant { groups: (a, b) });
                }
            }
        }
    }
    for (l, g) in groups.iter().enumerate() {
        let w = sub_block(t, g, g);
        let eig = min_eigenvalue(&w);
        if eig < PSD_TOL {
            failure.get_or_insert(GcsFailure::WithinNotPsd { group: l, eigenvalue: eig });
            break;
        }
        let centered = w.add_scalar(-means[(l, l)]);
        let eig = min_eigenvalue(&centered);
        if eig < PSD_TOL {
            failure.get_or_insert(GcsFailure::CenteredWithinNotPsd { group: l, eigenvalue: eig });
            break;
        }
    }
    if failure.is_none() && Cholesky::factor(&means, 0.0).is_none() {
        failure = Some(GcsFailure::BlockMeansNotPd {
            eigenvalue: min_eigenvalue(&means),
        });
    }
    GcsReport {
        valid: failure.is_none(),
        failure,
        block_means: means,
    }
}
