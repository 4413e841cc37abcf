//! Benchmarked kernel identifiers and the fit pipeline behind each.

use std::fmt;
use std::str::FromStr;

use crate::datasets::{MixedDataset, Scaler};
use crate::error::{Error, Result};
use crate::gp::{fit, FitOptions, KernelConfig, TrainedGP};
use crate::grouping::{groups_from_lvgp, msd_groups};
use crate::kernels::{BlockKind, CategoricalKernelSpec, Family, GroupPartition};
use crate::timing::timed;

/// Rank of the LVGP embedding, also used as the proxy for `_LV` groups.
pub const LVGP_RANK: usize = 2;

/// Where a nested kernel gets its level groups from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupSource {
    /// The known groups of the test problem.
    True,
    /// Target mean/std clustering.
    Msd,
    /// Clustering of a fitted LVGP embedding.
    Lvgp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    /// Continuous inputs only.
    NoCat,
    Single { family: Family, q: Option<usize> },
    Nested { between: BlockKind, within: BlockKind, source: GroupSource },
}

fn block_name(b: BlockKind) -> &'static str {
    match b {
        BlockKind::Cs => "CS",
        BlockKind::Ho => "Ho",
        BlockKind::He => "He",
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Method::NoCat => f.write_str("no_cat"),
            Method::Single { family, q } => {
                let name = match family {
                    Family::OneHot => "one_hot",
                    Family::Cs => "CS",
                    Family::Diffusion => "Diffusion",
                    Family::Lvgp => "LVGP",
                    Family::Ho => "Ho",
                    Family::HoNc => "Ho_NC",
                    Family::He => "He",
                    Family::HeNc => "He_NC",
                    Family::HoLowRank => return write!(f, "Ho_{}", q.unwrap_or(2)),
                    Family::Ehh => "EHH",
                    Family::Fe => "FE",
                    Family::Multiplicative => "Multiplicative",
                    Family::Nested => "Nested",
                };
                f.write_str(name)
            }
            Method::Nested { between, within, source } => {
                write!(f, "Nested_{}_{}", block_name(between), block_name(within))?;
                match source {
                    GroupSource::True => Ok(()),
                    GroupSource::Msd => f.write_str("_MSD"),
                    GroupSource::Lvgp => f.write_str("_LV"),
                }
            }
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let single = |family| Ok(Method::Single { family, q: None });
        match s {
            "no_cat" => return Ok(Method::NoCat),
            "one_hot" => return single(Family::OneHot),
            "CS" => return single(Family::Cs),
            "Diffusion" => return single(Family::Diffusion),
            "Multiplicative" => return single(Family::Multiplicative),
            "LVGP" => {
                return Ok(Method::Single {
                    family: Family::Lvgp,
                    q: Some(LVGP_RANK),
                })
            }
            "Ho" => return single(Family::Ho),
            "Ho_NC" => return single(Family::HoNc),
            "He" => return single(Family::He),
            "He_NC" => return single(Family::HeNc),
            "EHH" => return single(Family::Ehh),
            "FE" => return single(Family::Fe),
            _ => {}
        }
        if let Some(q) = s.strip_prefix("Ho_").and_then(|q| q.parse::<usize>().ok()) {
            if q >= 2 {
                return Ok(Method::Single {
                    family: Family::HoLowRank,
                    q: Some(q),
                });
            }
        }
        if let Some(rest) = s.strip_prefix("Nested_") {
            let parts: Vec<&str> = rest.split('_').collect();
            let source = match parts.get(2) {
                None => Some(GroupSource::True),
                Some(&"MSD") => Some(GroupSource::Msd),
                Some(&"LV") => Some(GroupSource::Lvgp),
                _ => None,
            };
            if let (2 | 3, Some(source)) = (parts.len(), source) {
                let block = |p: &str| match p {
                    "CS" => Some(BlockKind::Cs),
                    "Ho" => Some(BlockKind::Ho),
                    "He" => Some(BlockKind::He),
                    _ => None,
                };
                if let (Some(between), Some(within)) = (block(parts[0]), block(parts[1])) {
                    return Ok(Method::Nested { between, within, source });
                }
            }
        }
        Err(Error::Config(format!("unknown method '{s}'")))
    }
}

/// Every method identifier the harness knows, single kernels first.
pub fn all_methods() -> Vec<Method> {
    let mut ids: Vec<String> = [
        "no_cat", "one_hot", "CS", "Ho", "Ho_NC", "He", "He_NC", "Ho_2", "Ho_3", "EHH", "FE",
        "Multiplicative", "Diffusion", "LVGP",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for src in ["", "_MSD", "_LV"] {
        for (b, w) in [("CS", "CS"), ("Ho", "CS"), ("CS", "He"), ("He", "He")] {
            ids.push(format!("Nested_{b}_{w}{src}"));
        }
    }
    ids.iter().map(|s| s.parse().expect("known id")).collect()
}

/// Why a method cannot run on a dataset, or `None` if it can.
pub fn inapplicable_reason(method: Method, level_counts: &[usize], has_true_groups: bool) -> Option<String> {
    match method {
        Method::NoCat => None,
        Method::Single { family, q } => {
            let q = q?;
            let min_q = if family == Family::HoLowRank { 2 } else { 1 };
            level_counts
                .iter()
                .find(|&&c| q < min_q || q >= c)
                .map(|c| format!("rank {q} needs more than {q} levels, a variable has {c}"))
        }
        Method::Nested { source, .. } => match source {
            GroupSource::True if level_counts.len() != 1 || !has_true_groups => {
                Some("no known level groups".into())
            }
            GroupSource::Msd | GroupSource::Lvgp => level_counts
                .iter()
                .find(|&&c| c < 3)
                .map(|c| format!("group inference needs 3 levels, a variable has {c}")),
            _ => None,
        },
    }
}

/// A fitted method together with the cost of preparing it.
#[derive(Clone, Debug)]
pub struct MethodFit {
    /// Trained on standardized data, with the scaler attached.
    pub model: TrainedGP,
    /// CPU seconds spent inferring groups (not part of the fit time).
    pub group_seconds: f64,
    /// Partition used per categorical variable by nested methods.
    pub partitions: Vec<GroupPartition>,
}

impl MethodFit {
    pub fn fit_seconds(&self) -> f64 {
        self.model.diagnostics.fit_seconds
    }

    /// Predictions for raw test inputs, in raw output units.
    pub fn predict(&self, test: &MixedDataset) -> Result<Vec<f64>> {
        if self.model.config.categorical.is_empty() && test.categorical_dim() > 0 {
            self.model.predict_original(&test.without_categoricals())
        } else {
            self.model.predict_original(test)
        }
    }
}

fn single_config(train: &MixedDataset, family: Family, q: Option<usize>) -> Result<KernelConfig> {
    let specs = train
        .level_counts
        .iter()
        .map(|&c| match q {
            Some(q) => CategoricalKernelSpec::with_rank(family, c, q),
            None => CategoricalKernelSpec::new(family, c),
        })
        .collect::<Result<_>>()?;
    Ok(KernelConfig::new(train.continuous_dim(), specs))
}

/// Standardizes `train`, infers groups when needed and fits `method`.
///
/// `true_groups` is only consulted by nested methods with known groups.
pub fn fit_method(
    method: Method,
    train: &MixedDataset,
    true_groups: Option<&[Vec<usize>]>,
    options: &FitOptions,
) -> Result<MethodFit> {
    if let Some(reason) = inapplicable_reason(method, &train.level_counts, true_groups.is_some()) {
        return Err(Error::Unsupported(format!("{method}: {reason}")));
    }
    let scaler = Scaler::fit(train)?;
    let train_s = scaler.transform(train);
    let mut group_seconds = 0.0;
    let mut partitions = Vec::new();
    let (data, config) = match method {
        Method::NoCat => {
            let data = train_s.without_categoricals();
            let config = KernelConfig::new(data.continuous_dim(), Vec::new());
            (data, config)
        }
        Method::Single { family, q } => {
            let config = single_config(&train_s, family, q)?;
            (train_s, config)
        }
        Method::Nested { between, within, source } => {
            let (found, secs) = timed(|| infer_partitions(source, &train_s, true_groups, options));
            group_seconds = secs;
            partitions = found?;
            let specs = partitions
                .iter()
                .map(|p| CategoricalKernelSpec::nested(p.clone(), between, within))
                .collect::<Result<_>>()?;
            let config = KernelConfig::new(train_s.continuous_dim(), specs);
            (train_s, config)
        }
    };
    let model = fit(&data, &config, options)?.with_scaler(scaler);
    Ok(MethodFit {
        model,
        group_seconds,
        partitions,
    })
}

fn infer_partitions(
    source: GroupSource,
    train: &MixedDataset,
    true_groups: Option<&[Vec<usize>]>,
    options: &FitOptions,
) -> Result<Vec<GroupPartition>> {
    match source {
        GroupSource::True => {
            let groups = true_groups.expect("checked by inapplicable_reason");
            Ok(vec![GroupPartition::new(groups.to_vec(), train.level_counts[0])?])
        }
        GroupSource::Msd => (0..train.categorical_dim())
            .map(|j| Ok(msd_groups(&train.z_column(j), &train.y, train.level_counts[j])?.partition))
            .collect(),
        GroupSource::Lvgp => {
            let config = single_config(train, Family::Lvgp, Some(LVGP_RANK))?;
            let proxy = fit(train, &config, options)?;
            config
                .categorical
                .iter()
                .zip(&proxy.params.categorical)
                .map(|(spec, p)| {
                    let phi = spec.latent_embedding(p).expect("LVGP spec")?;
                    Ok(groups_from_lvgp(&phi)?.partition)
                })
                .collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::{generate_replicate, DatasetName, DatasetSpec};
    use crate::optimize::OptSettings;

    #[test]
    fn ids_roundtrip() {
        for m in all_methods() {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert_eq!(all_methods().len(), 26);
        assert_eq!("Ho_3".parse::<Method>().unwrap().to_string(), "Ho_3");
        for bad in ["Ho_1", "Nested_CS", "Nested_CS_He_XX", "Nested_Foo_He", "rbf"] {
            assert!(bad.parse::<Method>().is_err(), "{bad}");
        }
    }

    #[test]
    fn applicability() {
        let m = |s: &str| s.parse::<Method>().unwrap();
        assert!(inapplicable_reason(m("Nested_He_He"), &[3, 4], false).is_some());
        assert!(inapplicable_reason(m("Nested_He_He"), &[13], true).is_none());
        assert!(inapplicable_reason(m("Nested_He_He_MSD"), &[3, 4], false).is_none());
        assert!(inapplicable_reason(m("Ho_3"), &[3, 4], false).is_some());
        assert!(inapplicable_reason(m("Ho_2"), &[3, 4], false).is_none());
        assert!(inapplicable_reason(m("CS"), &[2], false).is_none());
    }

    #[test]
    fn nested_msd_pipeline_runs() {
        let (train, test) = generate_replicate(&DatasetSpec::replicate(DatasetName::F2, 3, 0)).unwrap();
        let opts = FitOptions::new(OptSettings::short().with_restarts(2), 0);
        let m: Method = "Nested_CS_CS_MSD".parse().unwrap();
        let fitted = fit_method(m, &train, None, &opts).unwrap();
        assert_eq!(fitted.partitions.len(), 1);
        let q = fitted.partitions[0].n_groups();
        assert!((2..10).contains(&q));
        let pred = fitted.predict(&test).unwrap();
        assert_eq!(pred.len(), test.len());
        assert!(pred.iter().all(|v| v.is_finite()));
        let nc = fit_method(Method::NoCat, &train, None, &opts).unwrap();
        assert_eq!(nc.predict(&test).unwrap().len(), test.len());
    }
}
