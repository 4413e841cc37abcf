//! Continuous and categorical kernels.
//!
//! Every categorical family maps a bounded parameter vector to a `C × C`
//! matrix `T` with `k(z, z') = T[z, z']`. [`CategoricalKernelSpec`] names a
//! family with its structural constants and exposes the parameter count, box
//! bounds and the builder used by the likelihood.

mod continuous;
mod encoding;
mod exchangeable;
mod exponential;
mod hypersphere;
mod nested;

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use continuous::rbf_ard;
pub use encoding::{
    latent_gram, lvgp_embed, lvgp_param_count, multiplicative_corr, multiplicative_matrix,
    one_hot_corr, one_hot_encode, one_hot_matrix, one_hot_to_multiplicative, LVGP_BOUND,
};
pub use exchangeable::{cs_matrix, diffusion_corr, diffusion_cs_params};
pub use exponential::{ehh_fe_matrix, ehh_fe_param_count, ExpMode, EXP_EPSILON};
pub use hypersphere::{
    angle_count, hypersphere_lower, hypersphere_param_count, lowrank_hypersphere,
    lowrank_param_count,
};
pub use nested::{
    nested_from_params, nested_matrix, nested_param_count, nested_param_pack, validate_gcs,
    BlockKind, GcsFailure, GcsReport, GroupPartition, NestedLayout,
};

/// Closed angle boxes are `[ANGLE_MARGIN, bound - ANGLE_MARGIN]`.
pub const ANGLE_MARGIN: f64 = 1e-6;
/// Heteroscedastic radii.
pub const RADIUS_BOUNDS: (f64, f64) = (1e-3, 10.0);
/// CS variance, nested within variance.
pub const VARIANCE_BOUNDS: (f64, f64) = (1e-3, 10.0);
pub const ONE_HOT_BOUNDS: (f64, f64) = (0.1, 10.0);
pub const MULTIPLICATIVE_BOUNDS: (f64, f64) = (0.0, 10.0);
pub const DIFFUSION_BOUNDS: (f64, f64) = (1e-3, 10.0);
pub const FE_DIAGONAL_BOUNDS: (f64, f64) = (0.0, 10.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    OneHot,
    #[serde(rename = "CS")]
    Cs,
    Diffusion,
    #[serde(rename = "LVGP")]
    Lvgp,
    Ho,
    #[serde(rename = "Ho_NC")]
    HoNc,
    He,
    #[serde(rename = "He_NC")]
    HeNc,
    HoLowRank,
    #[serde(rename = "EHH")]
    Ehh,
    #[serde(rename = "FE")]
    Fe,
    Multiplicative,
    Nested,
}

impl Family {
    /// Families whose `T` has a unit diagonal by construction.
    pub fn is_correlation(self) -> bool {
        matches!(
            self,
            Family::OneHot
                | Family::Lvgp
                | Family::Ho
                | Family::HoNc
                | Family::HoLowRank
                | Family::Ehh
                | Family::Fe
                | Family::Multiplicative
        )
    }
}

/// A categorical kernel: family plus structural constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoricalKernelSpec {
    pub family: Family,
    pub levels: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<GroupPartition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub between: Option<BlockKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub within: Option<BlockKind>,
}

impl CategoricalKernelSpec {
    pub fn new(family: Family, levels: usize) -> Result<Self> {
        Self {
            family,
            levels,
            q: None,
            partition: None,
            between: None,
            within: None,
        }
        .validated()
    }

    pub fn with_rank(family: Family, levels: usize, q: usize) -> Result<Self> {
        Self {
            family,
            levels,
            q: Some(q),
            partition: None,
            between: None,
            within: None,
        }
        .validated()
    }

    pub fn nested(partition: GroupPartition, between: BlockKind, within: BlockKind) -> Result<Self> {
        Self {
            family: Family::Nested,
            levels: partition.levels(),
            q: None,
            partition: Some(partition),
            between: Some(between),
            within: Some(within),
        }
        .validated()
    }

    fn validated(self) -> Result<Self> {
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels < 1 {
            return Err(Error::InvalidParameter("categorical kernel with no levels".into()));
        }
        let needs_q = matches!(self.family, Family::Lvgp | Family::HoLowRank);
        match (needs_q, self.q) {
            (true, None) => {
                return Err(Error::InvalidParameter(format!("{:?} needs a rank q", self.family)))
            }
            (false, Some(_)) => {
                return Err(Error::InvalidParameter(format!("{:?} takes no rank q", self.family)))
            }
            (true, Some(q)) => {
                let min_q = if self.family == Family::HoLowRank { 2 } else { 1 };
                if q < min_q || q >= self.levels {
                    return Err(Error::InvalidParameter(format!(
                        "rank q = {q} invalid for {:?} with {} levels",
                        self.family, self.levels
                    )));
                }
            }
            _ => {}
        }
        let is_nested = self.family == Family::Nested;
        let has_nested_fields =
            self.partition.is_some() || self.between.is_some() || self.within.is_some();
        if is_nested {
            let (Some(p), Some(_), Some(_)) = (&self.partition, self.between, self.within) else {
                return Err(Error::InvalidParameter(
                    "nested kernel needs partition, between and within".into(),
                ));
            };
            GroupPartition::new(p.groups().to_vec(), self.levels)?;
        } else if has_nested_fields {
            return Err(Error::InvalidParameter(format!(
                "{:?} takes no partition/between/within",
                self.family
            )));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        param_count(self)
    }

    /// Box bounds of the parameter vector.
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let c = self.levels;
        let rep = |n: usize, (lo, hi): (f64, f64)| (vec![lo; n], vec![hi; n]);
        let angles = |n: usize, upper: f64| rep(n, (ANGLE_MARGIN, upper - ANGLE_MARGIN));
        let concat = |a: (Vec<f64>, Vec<f64>), b: (Vec<f64>, Vec<f64>)| {
            ([a.0, b.0].concat(), [a.1, b.1].concat())
        };
        match self.family {
            Family::OneHot => rep(c, ONE_HOT_BOUNDS),
            Family::Multiplicative => rep(c, MULTIPLICATIVE_BOUNDS),
            Family::Cs => {
                let (rlo, rhi) = nested::cs_ratio_bounds(c);
                (vec![VARIANCE_BOUNDS.0, rlo], vec![VARIANCE_BOUNDS.1, rhi])
            }
            Family::Diffusion => rep(1, DIFFUSION_BOUNDS),
            Family::Lvgp => rep(self.param_count(), (-LVGP_BOUND, LVGP_BOUND)),
            Family::Ho => angles(angle_count(c), FRAC_PI_2),
            Family::HoNc => angles(angle_count(c), PI),
            Family::He => concat(rep(c, RADIUS_BOUNDS), angles(angle_count(c), FRAC_PI_2)),
            Family::HeNc => concat(rep(c, RADIUS_BOUNDS), angles(angle_count(c), PI)),
            Family::HoLowRank => angles(self.param_count(), FRAC_PI_2),
            Family::Ehh => angles(angle_count(c), FRAC_PI_2),
            Family::Fe => concat(rep(c, FE_DIAGONAL_BOUNDS), angles(angle_count(c), FRAC_PI_2)),
            Family::Nested => {
                let layout = nested_param_pack(
                    self.between.expect("validated"),
                    self.within.expect("validated"),
                    self.partition.as_ref().expect("validated"),
                );
                (layout.lower, layout.upper)
            }
        }
    }

    /// Builds the `C × C` matrix `T` from a parameter vector.
    pub fn matrix(&self, params: &[f64]) -> Result<CorrelationMatrix> {
        if params.len() != self.param_count() {
            return Err(Error::Dimension(format!(
                "{:?} with {} levels expects {} parameters, got {}",
                self.family,
                self.levels,
                self.param_count(),
                params.len()
            )));
        }
        let c = self.levels;
        let outer = |l: DMatrix<f64>| &l * l.transpose();
        let t = match self.family {
            Family::OneHot => one_hot_matrix(params)?,
            Family::Multiplicative => multiplicative_matrix(params)?,
            Family::Cs => {
                let (v, r) = (params[0], params[1]);
                cs_matrix(v, r * v, c)?
            }
            Family::Diffusion => diffusion_corr(params[0], c)?,
            Family::Lvgp => latent_gram(&lvgp_embed(params, c, self.q.expect("validated"))?),
            Family::Ho => outer(hypersphere_lower(params, c, false, false)?),
            Family::HoNc => outer(hypersphere_lower(params, c, false, true)?),
            Family::He => outer(hypersphere_lower(params, c, true, false)?),
            Family::HeNc => outer(hypersphere_lower(params, c, true, true)?),
            Family::HoLowRank => outer(lowrank_hypersphere(params, c, self.q.expect("validated"))?),
            Family::Ehh => ehh_fe_matrix(params, c, ExpMode::Ehh, EXP_EPSILON)?,
            Family::Fe => ehh_fe_matrix(params, c, ExpMode::Fe, EXP_EPSILON)?,
            Family::Nested => nested_from_params(
                params,
                self.between.expect("validated"),
                self.within.expect("validated"),
                self.partition.as_ref().expect("validated"),
            )?,
        };
        Ok(CorrelationMatrix(t))
    }

    /// Latent embedding of an LVGP kernel, `None` for other families.
    pub fn latent_embedding(&self, params: &[f64]) -> Option<Result<DMatrix<f64>>> {
        (self.family == Family::Lvgp)
            .then(|| lvgp_embed(params, self.levels, self.q.expect("validated")))
    }
}

/// Number of free parameters of a categorical kernel.
pub fn param_count(spec: &CategoricalKernelSpec) -> usize {
    let c = spec.levels;
    match spec.family {
        Family::OneHot | Family::Multiplicative => c,
        Family::Cs => 2,
        Family::Diffusion => 1,
        Family::Lvgp => lvgp_param_count(c, spec.q.unwrap_or(1)),
        Family::Ho | Family::HoNc => hypersphere_param_count(c, false),
        Family::He | Family::HeNc => hypersphere_param_count(c, true),
        Family::HoLowRank => lowrank_param_count(c, spec.q.unwrap_or(2)),
        Family::Ehh => ehh_fe_param_count(c, ExpMode::Ehh),
        Family::Fe => ehh_fe_param_count(c, ExpMode::Fe),
        Family::Nested => match (&spec.partition, spec.between, spec.within) {
            (Some(p), Some(b), Some(w)) => nested_param_count(b, w, p),
            _ => 0,
        },
    }
}

/// Parameter values together with their box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamVector {
    pub fn new(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if values.len() != lower.len() || values.len() != upper.len() {
            return Err(Error::Dimension("parameter vector and bounds differ in length".into()));
        }
        for (i, ((v, lo), hi)) in values.iter().zip(&lower).zip(&upper).enumerate() {
            if !(lo <= v && v <= hi) {
                return Err(Error::InvalidParameter(format!(
                    "parameter {i} = {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(Self { values, lower, upper })
    }

    pub fn for_spec(spec: &CategoricalKernelSpec, values: Vec<f64>) -> Result<Self> {
        let (lower, upper) = spec.bounds();
        Self::new(values, lower, upper)
    }
}

/// Level covariance matrix `T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix(pub DMatrix<f64>);

impl CorrelationMatrix {
    pub fn levels(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, z: usize, z2: usize) -> f64 {
        self.0[(z - 1, z2 - 1)]
    }

    pub fn has_unit_diagonal(&self, tol: f64) -> bool {
        self.0.diagonal().iter().all(|d| (d - 1.0).abs() <= tol)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        crate::linalg::min_eigenvalue(&self.0)
    }

    /// Writes the matrix as headerless CSV, one row per level.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.levels() {
            let row: Vec<String> = self.0.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }
}

/// Product of per-variable categorical factors `∏_i T⁽ⁱ⁾[z_i, z'_i]`.
pub fn product_kernel(factors: &[CorrelationMatrix], z: &[usize], z2: &[usize]) -> Result<f64> {
    if factors.len() != z.len() || z.len() != z2.len() {
        return Err(Error::Dimension(format!(
            "{} categorical factors for level tuples of length {} and {}",
            factors.len(),
            z.len(),
            z2.len()
        )));
    }
    let mut k = 1.0;
    for ((t, &a), &b) in factors.iter().zip(z).zip(z2) {
        for l in [a, b] {
            if l == 0 || l > t.levels() {
                return Err(Error::InvalidLevel {
                    level: l,
                    levels: t.levels(),
                });
            }
        }
        k *= t.get(a, b);
    }
    Ok(k)
}

/// Mixed kernel: continuous ARD RBF times the categorical product.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedKernel {
    pub lengthscales: Vec<f64>,
    pub factors: Vec<CorrelationMatrix>,
}

impl MixedKernel {
    pub fn eval(&self, x: &[f64], z: &[usize], x2: &[f64], z2: &[usize]) -> Result<f64> {
        Ok(rbf_ard(x, x2, &self.lengthscales)? * product_kernel(&self.factors, z, z2)?)
    }
}
