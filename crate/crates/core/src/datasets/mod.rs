//! Analytic benchmark datasets, designs, scaling and level merging.

pub mod design;
mod functions;

use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::seeded;

pub use design::{bin_of, slhd};
pub use functions::{goldstein_constraint, TestFunction, BEAM_INERTIA};

/// Continuous inputs, 1-based categorical levels and outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixedDataset {
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<usize>>,
    pub y: Vec<f64>,
    pub level_counts: Vec<usize>,
    continuous_dim: usize,
}

impl MixedDataset {
    pub fn new(
        x: Vec<Vec<f64>>,
        z: Vec<Vec<usize>>,
        y: Vec<f64>,
        continuous_dim: usize,
        level_counts: Vec<usize>,
    ) -> Result<Self> {
        let n = y.len();
        if x.len() != n || z.len() != n {
            return Err(Error::Dimension(format!(
                "row counts differ: x {}, z {}, y {}",
                x.len(),
                z.len(),
                n
            )));
        }
        if let Some(&c) = level_counts.iter().find(|&&c| c < 2) {
            return Err(Error::InvalidParameter(format!(
                "categorical variable with {c} levels (need at least 2)"
            )));
        }
        for row in &x {
            if row.len() != continuous_dim {
                return Err(Error::Dimension(format!(
                    "continuous row of length {} (expected {continuous_dim})",
                    row.len()
                )));
            }
        }
        for row in &z {
            if row.len() != level_counts.len() {
                return Err(Error::Dimension(format!(
                    "categorical row of length {} (expected {})",
                    row.len(),
                    level_counts.len()
                )));
            }
            for (&level, &levels) in row.iter().zip(&level_counts) {
                if level == 0 || level > levels {
                    return Err(Error::InvalidLevel { level, levels });
                }
            }
        }
        Ok(Self {
            x,
            z,
            y,
            level_counts,
            continuous_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn continuous_dim(&self) -> usize {
        self.continuous_dim
    }

    pub fn categorical_dim(&self) -> usize {
        self.level_counts.len()
    }

    /// Column `j` of the level matrix.
    pub fn z_column(&self, j: usize) -> Vec<usize> {
        self.z.iter().map(|row| row[j]).collect()
    }

    /// Same rows with every categorical column removed.
    pub fn without_categoricals(&self) -> Self {
        Self {
            x: self.x.clone(),
            z: vec![Vec::new(); self.len()],
            y: self.y.clone(),
            level_counts: Vec::new(),
            continuous_dim: self.continuous_dim,
        }
    }

    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let header: Vec<String> = (1..=self.continuous_dim)
            .map(|i| format!("x{i}"))
            .chain((1..=self.categorical_dim()).map(|j| format!("z{j}")))
            .chain(std::iter::once("y".to_string()))
            .collect();
        w.write_record(&header)?;
        for i in 0..self.len() {
            let record: Vec<String> = self.x[i]
                .iter()
                .map(|v| format!("{v:?}"))
                .chain(self.z[i].iter().map(|v| v.to_string()))
                .chain(std::iter::once(format!("{:?}", self.y[i])))
                .collect();
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }

    /// Reads a dataset CSV. When `level_counts` is `None` each variable gets
    /// `max(observed level, 2)` levels.
    pub fn read_csv<R: std::io::Read>(reader: R, level_counts: Option<Vec<usize>>) -> Result<Self> {
        Self::read_table(reader, level_counts, true)
    }

    /// Like [`read_csv`](Self::read_csv) but the `y` column may be absent,
    /// in which case targets are set to zero.
    pub fn read_inputs_csv<R: std::io::Read>(reader: R, level_counts: Option<Vec<usize>>) -> Result<Self> {
        Self::read_table(reader, level_counts, false)
    }

    fn read_table<R: std::io::Read>(reader: R, level_counts: Option<Vec<usize>>, need_y: bool) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let mut x_cols = Vec::new();
        let mut z_cols = Vec::new();
        let mut y_col = None;
        for (i, h) in headers.iter().enumerate() {
            let h = h.trim();
            if h == "y" {
                y_col = Some(i);
            } else if let Some(k) = h.strip_prefix('x').and_then(|s| s.parse::<usize>().ok()) {
                x_cols.push((k, i));
            } else if let Some(k) = h.strip_prefix('z').and_then(|s| s.parse::<usize>().ok()) {
                z_cols.push((k, i));
            } else {
                return Err(Error::Config(format!("unexpected CSV column '{h}'")));
            }
        }
        if need_y && y_col.is_none() {
            return Err(Error::Config("CSV has no 'y' column".into()));
        }
        x_cols.sort_unstable();
        z_cols.sort_unstable();
        let (mut x, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
        let parse_f = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad number '{s}': {e}")))
        };
        for record in r.records() {
            let record = record?;
            x.push(
                x_cols
                    .iter()
                    .map(|&(_, i)| parse_f(&record[i]))
                    .collect::<Result<Vec<_>>>()?,
            );
            z.push(
                z_cols
                    .iter()
                    .map(|&(_, i)| {
                        record[i]
                            .trim()
                            .parse::<usize>()
                            .map_err(|e| Error::Config(format!("bad level '{}': {e}", &record[i])))
                    })
                    .collect::<Result<Vec<_>>>()?,
            );
            y.push(match y_col {
                Some(i) => parse_f(&record[i])?,
                None => 0.0,
            });
        }
        let levels = level_counts.unwrap_or_else(|| {
            (0..z_cols.len())
                .map(|j| z.iter().map(|row: &Vec<usize>| row[j]).max().unwrap_or(0).max(2))
                .collect()
        });
        Self::new(x, z, y, x_cols.len(), levels)
    }

    pub fn load_csv(path: impl AsRef<Path>, level_counts: Option<Vec<usize>>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, level_counts)
    }
}

/// Dataset identifiers; the `*2` variants fuse the two categorical variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetName {
    F1,
    F2,
    BeamBending,
    Borehole,
    Borehole2,
    Otl,
    Otl2,
    Piston,
    Piston2,
    Goldstein,
}

impl DatasetName {
    pub const ALL: [DatasetName; 10] = [
        DatasetName::F1,
        DatasetName::F2,
        DatasetName::BeamBending,
        DatasetName::Borehole,
        DatasetName::Borehole2,
        DatasetName::Otl,
        DatasetName::Otl2,
        DatasetName::Piston,
        DatasetName::Piston2,
        DatasetName::Goldstein,
    ];

    pub fn function(self) -> TestFunction {
        match self {
            DatasetName::F1 => TestFunction::F1,
            DatasetName::F2 => TestFunction::F2,
            DatasetName::BeamBending => TestFunction::BeamBending,
            DatasetName::Borehole | DatasetName::Borehole2 => TestFunction::Borehole,
            DatasetName::Otl | DatasetName::Otl2 => TestFunction::Otl,
            DatasetName::Piston | DatasetName::Piston2 => TestFunction::Piston,
            DatasetName::Goldstein => TestFunction::Goldstein,
        }
    }

    pub fn is_merged(self) -> bool {
        matches!(
            self,
            DatasetName::Borehole2 | DatasetName::Otl2 | DatasetName::Piston2
        )
    }

    /// The fused variant of a two-variable dataset.
    pub fn merged_variant(self) -> Option<DatasetName> {
        match self {
            DatasetName::Borehole | DatasetName::Borehole2 => Some(DatasetName::Borehole2),
            DatasetName::Otl | DatasetName::Otl2 => Some(DatasetName::Otl2),
            DatasetName::Piston | DatasetName::Piston2 => Some(DatasetName::Piston2),
            _ => None,
        }
    }

    pub fn id(self) -> &'static str {
        match self {
            DatasetName::F1 => "f1",
            DatasetName::F2 => "f2",
            DatasetName::BeamBending => "beam_bending",
            DatasetName::Borehole => "borehole",
            DatasetName::Borehole2 => "borehole2",
            DatasetName::Otl => "otl",
            DatasetName::Otl2 => "otl2",
            DatasetName::Piston => "piston",
            DatasetName::Piston2 => "piston2",
            DatasetName::Goldstein => "goldstein",
        }
    }

    /// Allowed samples per level (tuple) for training designs.
    pub fn allowed_sizes(self) -> &'static [usize] {
        match self.function() {
            TestFunction::Otl | TestFunction::Piston => &[3, 6, 9],
            _ => &[3, 6, 9, 12, 15],
        }
    }

    /// Base seed of the replicate sequence; replicate `k` uses `base + k`.
    /// Merged variants share the base seed so they reuse the same designs.
    pub fn base_seed(self) -> u64 {
        SEED_MANIFEST
            .iter()
            .find(|(f, _)| *f == self.function())
            .map(|(_, s)| *s)
            .expect("every function has a base seed")
    }

    /// Level groups of the (single) categorical variable, when known.
    pub fn true_groups(self) -> Option<Vec<Vec<usize>>> {
        self.function().true_groups()
    }
}

impl std::fmt::Display for DatasetName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        DatasetName::ALL
            .into_iter()
            .find(|d| d.id().replace('_', "") == key)
            .ok_or_else(|| Error::Config(format!("unknown dataset '{s}'")))
    }
}

/// Base seeds per test function. Test sets use `base + TEST_SEED_OFFSET`.
pub const SEED_MANIFEST: [(TestFunction, u64); 7] = [
    (TestFunction::F1, 1_000),
    (TestFunction::F2, 2_000),
    (TestFunction::BeamBending, 3_000),
    (TestFunction::Borehole, 4_000),
    (TestFunction::Otl, 5_000),
    (TestFunction::Piston, 6_000),
    (TestFunction::Goldstein, 7_000),
];

pub const TEST_SEED_OFFSET: u64 = 900_000;

const GOLDSTEIN_MAX_ATTEMPTS: usize = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: DatasetName,
    pub samples_per_level: usize,
    pub seed: u64,
    pub merged: bool,
}

impl DatasetSpec {
    pub fn new(name: DatasetName, samples_per_level: usize, seed: u64) -> Self {
        Self {
            name,
            samples_per_level,
            seed,
            merged: name.is_merged(),
        }
    }

    /// Spec of replicate `k` under the seed manifest.
    pub fn replicate(name: DatasetName, samples_per_level: usize, k: u64) -> Self {
        Self::new(name, samples_per_level, name.base_seed() + k)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.name.allowed_sizes().contains(&self.samples_per_level) {
            return Err(Error::InvalidParameter(format!(
                "{} samples per level not allowed for {} (allowed {:?})",
                self.samples_per_level,
                self.name,
                self.name.allowed_sizes()
            )));
        }
        if self.merged && self.name.merged_variant().is_none() {
            return Err(Error::InvalidParameter(format!(
                "{} has a single categorical variable and cannot be merged",
                self.name
            )));
        }
        Ok(())
    }

    /// Dataset actually produced, accounting for the `merged` flag.
    pub fn effective_name(&self) -> DatasetName {
        if self.merged {
            self.name.merged_variant().unwrap_or(self.name)
        } else {
            self.name
        }
    }
}

/// Enumerates level tuples in lexicographic order, first variable major.
fn level_tuples(counts: &[usize]) -> Vec<Vec<usize>> {
    let mut tuples = vec![Vec::new()];
    for &c in counts {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (1..=c).map(move |l| {
                    let mut t = t.clone();
                    t.push(l);
                    t
                })
            })
            .collect();
    }
    tuples
}

fn map_to_box(u: &[f64], bounds: &[(f64, f64)]) -> Vec<f64> {
    u.iter()
        .zip(bounds)
        .map(|(&u, &(lo, hi))| (lo + u * (hi - lo)).clamp(lo, hi))
        .collect()
}

/// Per-level-tuple sliced design with `counts[k]` points for tuple `k`.
fn stratified_design(
    f: TestFunction,
    counts: &[usize],
    seed: u64,
) -> Result<MixedDataset> {
    let bounds = f.bounds();
    let level_counts = f.level_counts();
    let tuples = level_tuples(&level_counts);
    debug_assert_eq!(tuples.len(), counts.len());
    let mut rng = seeded(seed);
    let dim = bounds.len();
    let equal = counts.windows(2).all(|w| w[0] == w[1]);
    let blocks: Vec<Vec<Vec<f64>>> = if equal {
        let m = counts[0];
        let design = design::slhd_with(&mut rng, m, counts.len(), dim);
        design.chunks(m).map(<[Vec<f64>]>::to_vec).collect()
    } else {
        counts
            .iter()
            .map(|&m| design::slhd_with(&mut rng, m, 1, dim))
            .collect()
    };
    let (mut x, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for (tuple, block) in tuples.iter().zip(blocks) {
        for u in block {
            let xi = map_to_box(&u, &bounds);
            y.push(f.eval(&xi, tuple)?);
            x.push(xi);
            z.push(tuple.clone());
        }
    }
    MixedDataset::new(x, z, y, dim, level_counts)
}

/// Goldstein design by uniform rejection on the constraint `g ≤ 0`.
pub fn goldstein_sample(n_per_level: usize, seed: u64) -> Result<MixedDataset> {
    let f = TestFunction::Goldstein;
    let bounds = f.bounds();
    let mut rng = seeded(seed);
    let (mut x, mut z, mut y) = (Vec::new(), Vec::new(), Vec::new());
    for level in 1..=9 {
        let mut accepted = 0;
        let mut attempts = 0;
        while accepted < n_per_level {
            if attempts >= GOLDSTEIN_MAX_ATTEMPTS {
                return Err(Error::SamplingStall { level, attempts });
            }
            attempts += 1;
            let u: [f64; 2] = [rng.random(), rng.random()];
            let p = map_to_box(&u, &bounds);
            if goldstein_constraint(p[0], p[1], level) <= 0.0 {
                y.push(f.eval(&p, &[level])?);
                x.push(p);
                z.push(vec![level]);
                accepted += 1;
            }
        }
    }
    MixedDataset::new(x, z, y, 2, vec![9])
}

/// Training and test sets for one replicate. The test set depends only on
/// the dataset (reserved seed) and is shared by every replicate and size.
pub fn generate_replicate(spec: &DatasetSpec) -> Result<(MixedDataset, MixedDataset)> {
    spec.validate()?;
    let f = spec.name.function();
    let tuples = f.level_counts().iter().product::<usize>();
    let train = match f {
        TestFunction::Goldstein => goldstein_sample(spec.samples_per_level, spec.seed)?,
        _ => stratified_design(f, &vec![spec.samples_per_level; tuples], spec.seed)?,
    };
    let test = test_set(spec.name)?;
    if spec.merged {
        Ok((merge_categoricals(&train)?, merge_categoricals(&test)?))
    } else {
        Ok((train, test))
    }
}

/// Fixed test set of a dataset, spread as evenly as possible over level
/// tuples (the first `N mod T` tuples get one extra point).
pub fn test_set(name: DatasetName) -> Result<MixedDataset> {
    let f = name.function();
    let tuples = f.level_counts().iter().product::<usize>();
    let n = f.test_size();
    let counts: Vec<usize> = (0..tuples)
        .map(|k| n / tuples + usize::from(k < n % tuples))
        .collect();
    stratified_design(f, &counts, name.base_seed() + TEST_SEED_OFFSET)
}

/// Fuses all categorical variables into one with `∏ C_j` levels, using the
/// lexicographic index with the first variable major.
pub fn merge_categoricals(d: &MixedDataset) -> Result<MixedDataset> {
    if d.categorical_dim() < 2 {
        return Err(Error::InvalidParameter(
            "merging needs at least two categorical variables".into(),
        ));
    }
    let total = d.level_counts.iter().product();
    let z = d
        .z
        .iter()
        .map(|row| vec![merge_index(row, &d.level_counts)])
        .collect();
    MixedDataset::new(d.x.clone(), z, d.y.clone(), d.continuous_dim, vec![total])
}

pub fn merge_index(levels: &[usize], counts: &[usize]) -> usize {
    levels
        .iter()
        .zip(counts)
        .fold(0, |acc, (&l, &c)| acc * c + (l - 1))
        + 1
}

/// Inverse of [`merge_index`].
pub fn split_index(merged: usize, counts: &[usize]) -> Vec<usize> {
    let mut rem = merged - 1;
    let mut out = vec![0; counts.len()];
    for (slot, &c) in out.iter_mut().zip(counts).rev() {
        *slot = rem % c + 1;
        rem /= c;
    }
    out
}

/// Column means and population standard deviations of the training set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub x_mean: Vec<f64>,
    pub x_std: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Scaler {
    pub fn fit(train: &MixedDataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::InvalidParameter("cannot standardize an empty dataset".into()));
        }
        let mut x_mean = Vec::new();
        let mut x_std = Vec::new();
        for j in 0..train.continuous_dim() {
            let (m, s) = mean_std(train.x.iter().map(|r| r[j]));
            if !(s > 1e-300) {
                return Err(Error::ConstantColumn(format!("x{}", j + 1)));
            }
            x_mean.push(m);
            x_std.push(s);
        }
        let (y_mean, y_std) = mean_std(train.y.iter().copied());
        if !(y_std > 1e-300) {
            return Err(Error::ConstantColumn("y".into()));
        }
        Ok(Self {
            x_mean,
            x_std,
            y_mean,
            y_std,
        })
    }

    pub fn transform(&self, d: &MixedDataset) -> MixedDataset {
        let mut out = d.clone();
        for row in &mut out.x {
            for ((v, m), s) in row.iter_mut().zip(&self.x_mean).zip(&self.x_std) {
                *v = (*v - m) / s;
            }
        }
        for v in &mut out.y {
            *v = (*v - self.y_mean) / self.y_std;
        }
        out
    }

    pub fn transform_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.x_mean)
            .zip(&self.x_std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    /// Maps standardized outputs back to original units.
    pub fn inverse_y(&self, y: &[f64]) -> Vec<f64> {
        y.iter().map(|v| v * self.y_std + self.y_mean).collect()
    }
}

/// Standardizes `train` to zero mean and unit (population) variance and
/// applies the same transform to `test`.
pub fn standardize(
    train: &MixedDataset,
    test: &MixedDataset,
) -> Result<(MixedDataset, MixedDataset, Scaler)> {
    let scaler = Scaler::fit(train)?;
    Ok((scaler.transform(train), scaler.transform(test), scaler))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn replicate_sizes_match_tables() {
        let (tr, te) = generate_replicate(&DatasetSpec::new(DatasetName::F2, 3, 0)).unwrap();
        assert_eq!((tr.len(), te.len()), (30, 1000));
        let (tr, te) = generate_replicate(&DatasetSpec::new(DatasetName::Borehole, 3, 0)).unwrap();
        assert_eq!((tr.len(), te.len()), (36, 1008));
        assert_eq!(tr.level_counts, vec![3, 4]);
        let spec = DatasetSpec {
            merged: true,
            ..DatasetSpec::new(DatasetName::Otl, 3, 0)
        };
        let (tr, te) = generate_replicate(&spec).unwrap();
        assert_eq!(tr.level_counts, vec![24]);
        assert_eq!((tr.len(), te.len()), (72, 1008));
        let (tr, te) = generate_replicate(&DatasetSpec::new(DatasetName::F1, 6, 0)).unwrap();
        assert_eq!((tr.len(), te.len()), (78, 1001));
        let (tr, te) = generate_replicate(&DatasetSpec::new(DatasetName::Piston2, 3, 0)).unwrap();
        assert_eq!((tr.len(), te.len(), tr.level_counts[0]), (45, 1005, 15));
        let (_, te) = generate_replicate(&DatasetSpec::new(DatasetName::BeamBending, 3, 0)).unwrap();
        assert_eq!(te.len(), 1000);
    }

    #[test]
    fn same_samples_per_level() {
        let (tr, _) = generate_replicate(&DatasetSpec::new(DatasetName::F1, 3, 5)).unwrap();
        for level in 1..=13 {
            assert_eq!(tr.z.iter().filter(|r| r[0] == level).count(), 3);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(DatasetSpec::new(DatasetName::Otl, 12, 0).validate().is_err());
        let bad = DatasetSpec {
            merged: true,
            ..DatasetSpec::new(DatasetName::F1, 3, 0)
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn replicates_are_pure_functions_of_seed() {
        let a = generate_replicate(&DatasetSpec::new(DatasetName::F2, 6, 3)).unwrap();
        let b = generate_replicate(&DatasetSpec::new(DatasetName::F2, 6, 3)).unwrap();
        let c = generate_replicate(&DatasetSpec::new(DatasetName::F2, 6, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn goldstein_points_feasible() {
        let d = goldstein_sample(3, 0).unwrap();
        assert_eq!(d.len(), 27);
        for (x, z) in d.x.iter().zip(&d.z) {
            assert!(goldstein_constraint(x[0], x[1], z[0]) <= 0.0);
        }
    }

    #[test]
    fn merge_index_examples() {
        assert_eq!(merge_index(&[1, 1], &[3, 4]), 1);
        assert_eq!(merge_index(&[3, 4], &[3, 4]), 12);
        assert_eq!(merge_index(&[2, 3], &[3, 4]), 7);
        for m in 1..=12 {
            assert_eq!(merge_index(&split_index(m, &[3, 4]), &[3, 4]), m);
        }
        let single = MixedDataset::new(vec![vec![]; 2], vec![vec![1], vec![2]], vec![0.0, 1.0], 0, vec![2]).unwrap();
        assert!(merge_categoricals(&single).is_err());
    }

    #[test]
    fn standardize_column() {
        let d = MixedDataset::new(
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![vec![]; 3],
            vec![1.0, 2.0, 3.0],
            1,
            vec![],
        )
        .unwrap();
        let test = MixedDataset::new(vec![vec![4.0]], vec![vec![]], vec![4.0], 1, vec![]).unwrap();
        let (tr, te, scaler) = standardize(&d, &test).unwrap();
        let expected = 1.5f64.sqrt();
        assert_relative_eq!(tr.x[0][0], -expected, epsilon = 1e-12);
        assert_relative_eq!(tr.x[1][0], 0.0, epsilon = 1e-12);
        assert_relative_eq!(tr.x[2][0], expected, epsilon = 1e-12);
        assert_relative_eq!(te.x[0][0], 2.0 * expected, epsilon = 1e-12);
        assert_relative_eq!(scaler.inverse_y(&tr.y)[2], 3.0, epsilon = 1e-12);
        let (again, _, _) = standardize(&tr, &tr).unwrap();
        for (a, b) in again.x.iter().zip(&tr.x) {
            assert_relative_eq!(a[0], b[0], epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_column_rejected() {
        let d = MixedDataset::new(vec![vec![1.0]; 3], vec![vec![]; 3], vec![1.0, 2.0, 3.0], 1, vec![]).unwrap();
        assert!(matches!(Scaler::fit(&d), Err(Error::ConstantColumn(_))));
    }

    #[test]
    fn csv_round_trip() {
        let (tr, _) = generate_replicate(&DatasetSpec::new(DatasetName::Borehole, 3, 1)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let header = String::from_utf8(buf.clone()).unwrap();
        assert!(header.starts_with("x1,x2,x3,x4,x5,x6,z1,z2,y\n"));
        let back = MixedDataset::read_csv(&buf[..], Some(vec![3, 4])).unwrap();
        assert_eq!(back, tr);
    }

    #[test]
    fn dataset_names_parse() {
        assert_eq!("f2".parse::<DatasetName>().unwrap(), DatasetName::F2);
        assert_eq!("beam_bending".parse::<DatasetName>().unwrap(), DatasetName::BeamBending);
        assert_eq!("OTL2".parse::<DatasetName>().unwrap(), DatasetName::Otl2);
        assert!("nope".parse::<DatasetName>().is_err());
    }
}
