//! Gaussian-process regression on mixed inputs.
//!
//! The kernel is `k(w, w') = exp(-½ Σ (x_i - x'_i)² / θ_i²) · ∏_j T_j[z_j, z'_j]`
//! with a constant mean and a global variance, both profiled out of the
//! likelihood in closed form. The optimized vector is laid out as
//! `[lengthscales][categorical params, one block per variable][log10 η²]`.
//!
//! Everything here works in the units of the data it is given; the bench
//! pipeline standardizes before fitting and maps predictions back with the
//! [`Scaler`].

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::datasets::{MixedDataset, Scaler};
use crate::error::{Error, Result};
use crate::kernels::CategoricalKernelSpec;
use crate::linalg::Cholesky;
use crate::optimize::{multistart, MultistartResult, OptSettings};
use crate::timing::timed;

pub const LOG10_NUGGET_BOUNDS: (f64, f64) = (-8.0, -4.0);
/// Diagonal jitters tried in order when `K + η²I` does not factor.
pub const JITTERS: [f64; 4] = [0.0, 1e-10, 1e-8, 1e-6];
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Continuous dimension plus one categorical kernel per categorical input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelConfig {
    pub continuous_dim: usize,
    #[serde(default)]
    pub categorical: Vec<CategoricalKernelSpec>,
}

impl KernelConfig {
    pub fn new(continuous_dim: usize, categorical: Vec<CategoricalKernelSpec>) -> Self {
        Self {
            continuous_dim,
            categorical,
        }
    }

    pub fn n_params(&self) -> usize {
        self.continuous_dim + self.categorical_params() + 1
    }

    pub fn categorical_params(&self) -> usize {
        self.categorical.iter().map(|s| s.param_count()).sum()
    }

    pub fn check_data(&self, data: &MixedDataset) -> Result<()> {
        if data.continuous_dim() != self.continuous_dim {
            return Err(Error::Dimension(format!(
                "data has {} continuous inputs, kernel expects {}",
                data.continuous_dim(),
                self.continuous_dim
            )));
        }
        if data.categorical_dim() != self.categorical.len() {
            return Err(Error::Dimension(format!(
                "data has {} categorical inputs, kernel expects {}",
                data.categorical_dim(),
                self.categorical.len()
            )));
        }
        for (j, (spec, &c)) in self.categorical.iter().zip(&data.level_counts).enumerate() {
            spec.validate()?;
            if spec.levels != c {
                return Err(Error::Dimension(format!(
                    "categorical input {} has {c} levels, kernel expects {}",
                    j + 1,
                    spec.levels
                )));
            }
        }
        Ok(())
    }

    /// Splits a full parameter vector into its three blocks.
    pub fn split<'a>(&self, params: &'a [f64]) -> Result<(&'a [f64], Vec<&'a [f64]>, f64)> {
        if params.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "expected {} parameters, got {}",
                self.n_params(),
                params.len()
            )));
        }
        let (ls, rest) = params.split_at(self.continuous_dim);
        let mut cats = Vec::with_capacity(self.categorical.len());
        let mut rest = rest;
        for spec in &self.categorical {
            let (p, r) = rest.split_at(spec.param_count());
            cats.push(p);
            rest = r;
        }
        Ok((ls, cats, rest[0]))
    }

    /// Optimization box for the training set `train`.
    pub fn bounds(&self, train: &MixedDataset) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_data(train)?;
        let (mut lower, mut upper) = lengthscale_bounds(&train.x, self.continuous_dim);
        for spec in &self.categorical {
            let (lo, hi) = spec.bounds();
            lower.extend(lo);
            upper.extend(hi);
        }
        lower.push(LOG10_NUGGET_BOUNDS.0);
        upper.push(LOG10_NUGGET_BOUNDS.1);
        Ok((lower, upper))
    }
}

/// Per-coordinate lengthscale box: half the smallest nonzero gap between two
/// points, twice the largest.
pub fn lengthscale_bounds(x: &[Vec<f64>], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut lower = Vec::with_capacity(dim);
    let mut upper = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut col: Vec<f64> = x.iter().map(|r| r[j]).collect();
        col.sort_by(f64::total_cmp);
        let max = col.last().copied().unwrap_or(0.0) - col.first().copied().unwrap_or(0.0);
        let min_gap = col
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 0.0)
            .fold(f64::INFINITY, f64::min);
        if max > 0.0 {
            lower.push(0.5 * min_gap);
            upper.push(2.0 * max);
        } else {
            // a single distinct value carries no lengthscale information
            lower.push(1e-3);
            upper.push(1.0);
        }
    }
    (lower, upper)
}

/// Training-set quantities reused by every likelihood evaluation.
pub struct Likelihood<'a> {
    config: &'a KernelConfig,
    y: &'a [f64],
    n: usize,
    /// Squared coordinate differences, `[dim][pair]` over pairs `i > j`.
    sq: Vec<Vec<f64>>,
    /// Zero-based level pairs, `[variable][pair]`.
    levels: Vec<Vec<(usize, usize)>>,
    /// Zero-based levels, `[variable][row]`.
    row_levels: Vec<Vec<usize>>,
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(|i| (0..i).map(move |j| (i, j)))
}

/// Closed-form mean, variance and likelihood for a factored matrix `A`.
#[derive(Clone, Debug)]
pub struct Profile {
    pub chol: Cholesky,
    pub jitter: f64,
    pub mean: f64,
    pub variance: f64,
    /// `A⁻¹ (y - m̂ 1)`.
    pub alpha: Vec<f64>,
    pub nll: f64,
}

/// Profiles mean and variance out of the Gaussian likelihood of `y` with
/// correlation `A`. `None` when `A` does not factor even with jitter.
pub fn profile(a: &DMatrix<f64>, y: &[f64]) -> Option<Profile> {
    let n = y.len();
    let (chol, jitter) = Cholesky::factor_escalating(a, &JITTERS)?;
    let ainv_1 = chol.solve(&vec![1.0; n]);
    let ainv_y = chol.solve(y);
    let mean = ainv_y.iter().sum::<f64>() / ainv_1.iter().sum::<f64>();
    let alpha: Vec<f64> = ainv_y.iter().zip(&ainv_1).map(|(a, b)| a - mean * b).collect();
    let quad: f64 = y.iter().zip(&alpha).map(|(yi, ai)| (yi - mean) * ai).sum();
    let variance = (quad / n as f64).max(VARIANCE_FLOOR);
    let nf = n as f64;
    let nll = 0.5 * nf * (2.0 * std::f64::consts::PI * variance).ln() + 0.5 * chol.log_det() + 0.5 * nf;
    (nll.is_finite() && mean.is_finite()).then_some(Profile {
        chol,
        jitter,
        mean,
        variance,
        alpha,
        nll,
    })
}

impl<'a> Likelihood<'a> {
    pub fn new(train: &'a MixedDataset, config: &'a KernelConfig) -> Result<Self> {
        config.check_data(train)?;
        if train.is_empty() {
            return Err(Error::InvalidParameter("empty training set".into()));
        }
        let n = train.len();
        let sq = (0..config.continuous_dim)
            .map(|d| pairs(n).map(|(i, j)| (train.x[i][d] - train.x[j][d]).powi(2)).collect())
            .collect();
        let levels = (0..config.categorical.len())
            .map(|v| pairs(n).map(|(i, j)| (train.z[i][v] - 1, train.z[j][v] - 1)).collect())
            .collect();
        let row_levels = (0..config.categorical.len())
            .map(|v| train.z.iter().map(|r| r[v] - 1).collect())
            .collect();
        Ok(Self {
            config,
            y: &train.y,
            n,
            sq,
            levels,
            row_levels,
        })
    }

    /// `K + η²I` with only the lower triangle filled.
    fn lower_matrix(&self, params: &[f64]) -> Result<DMatrix<f64>> {
        let (ls, cats, log_nugget) = self.config.split(params)?;
        if let Some(t) = ls.iter().find(|t| !(**t > 0.0)) {
            return Err(Error::InvalidParameter(format!("nonpositive lengthscale {t}")));
        }
        let inv: Vec<f64> = ls.iter().map(|t| 0.5 / (t * t)).collect();
        let ts = self
            .config
            .categorical
            .iter()
            .zip(&cats)
            .map(|(spec, p)| spec.matrix(p).map(|t| t.0))
            .collect::<Result<Vec<_>>>()?;
        let nugget = 10f64.powf(log_nugget);
        let mut a = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let mut diag = 1.0;
            for (lv, t) in self.row_levels.iter().zip(&ts) {
                diag *= t[(lv[i], lv[i])];
            }
            a[(i, i)] = diag + nugget;
        }
        for (p, (i, j)) in pairs(self.n).enumerate() {
            let s: f64 = self.sq.iter().zip(&inv).map(|(sq, w)| sq[p] * w).sum();
            let mut k = (-s).exp();
            for (lv, t) in self.levels.iter().zip(&ts) {
                let (a, b) = lv[p];
                k *= t[(a, b)];
            }
            a[(i, j)] = k;
        }
        Ok(a)
    }

    /// Profile at `params`, or `None` when the matrix is invalid or does not
    /// factor.
    pub fn profile(&self, params: &[f64]) -> Option<Profile> {
        let a = self.lower_matrix(params).ok()?;
        profile(&a, self.y)
    }

    /// Negative log marginal likelihood, +∞ where it cannot be evaluated.
    pub fn nll(&self, params: &[f64]) -> f64 {
        self.profile(params).map_or(f64::INFINITY, |p| p.nll)
    }
}

/// Correlation matrix `K` (no nugget) of the training inputs.
pub fn gram(train: &MixedDataset, config: &KernelConfig, params: &[f64]) -> Result<DMatrix<f64>> {
    cross_gram(train, train, config, params)
}

/// `K(a, b)` with rows indexed by `a`.
pub fn cross_gram(
    a: &MixedDataset,
    b: &MixedDataset,
    config: &KernelConfig,
    params: &[f64],
) -> Result<DMatrix<f64>> {
    config.check_data(a)?;
    config.check_data(b)?;
    let (ls, cats, _) = config.split(params)?;
    let ts = config
        .categorical
        .iter()
        .zip(&cats)
        .map(|(spec, p)| spec.matrix(p))
        .collect::<Result<Vec<_>>>()?;
    let kernel = crate::kernels::MixedKernel {
        lengthscales: ls.to_vec(),
        factors: ts,
    };
    let mut k = DMatrix::zeros(a.len(), b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            k[(i, j)] = kernel.eval(&a.x[i], &a.z[i], &b.x[j], &b.z[j])?;
        }
    }
    Ok(k)
}

/// Negative log marginal likelihood with mean and variance profiled out;
/// +∞ when `K + η²I` cannot be factored.
pub fn neg_log_marginal_likelihood(
    train: &MixedDataset,
    config: &KernelConfig,
    params: &[f64],
) -> Result<f64> {
    config.split(params)?;
    Ok(Likelihood::new(train, config)?.nll(params))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub lengthscales: Vec<f64>,
    pub categorical: Vec<Vec<f64>>,
    pub log10_nugget: f64,
}

impl FittedParams {
    pub fn from_vector(config: &KernelConfig, params: &[f64]) -> Result<Self> {
        let (ls, cats, nug) = config.split(params)?;
        Ok(Self {
            lengthscales: ls.to_vec(),
            categorical: cats.into_iter().map(<[f64]>::to_vec).collect(),
            log10_nugget: nug,
        })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = self.lengthscales.clone();
        for c in &self.categorical {
            v.extend_from_slice(c);
        }
        v.push(self.log10_nugget);
        v
    }

    pub fn nugget(&self) -> f64 {
        10f64.powf(self.log10_nugget)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Thread CPU seconds spent in the multistart.
    pub fit_seconds: f64,
    pub n_restarts: usize,
    pub n_failed: usize,
    pub best_restart: usize,
    pub total_evals: usize,
    pub restart_nll: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub settings: OptSettings,
    pub seed: u64,
}

impl FitOptions {
    pub fn new(settings: OptSettings, seed: u64) -> Self {
        Self { settings, seed }
    }
}

/// A fitted model: parameters, training data and the factorization used for
/// prediction. Immutable once built.
#[derive(Clone, Debug)]
pub struct TrainedGP {
    pub config: KernelConfig,
    pub params: FittedParams,
    pub train: MixedDataset,
    pub scaler: Option<Scaler>,
    pub mean: f64,
    pub variance: f64,
    pub nll: f64,
    pub jitter: f64,
    pub diagnostics: FitDiagnostics,
    chol: Cholesky,
    alpha: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    config: KernelConfig,
    params: FittedParams,
    train: MixedDataset,
    scaler: Option<Scaler>,
    diagnostics: FitDiagnostics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorPrediction {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
    pub covariance: Option<DMatrix<f64>>,
}

/// Fits by multistart minimization of the profiled NLL.
pub fn fit(train: &MixedDataset, config: &KernelConfig, options: &FitOptions) -> Result<TrainedGP> {
    let (lower, upper) = config.bounds(train)?;
    let lik = Likelihood::new(train, config)?;
    let (result, secs) = timed(|| {
        multistart(|p: &[f64]| lik.nll(p), &lower, &upper, &options.settings, options.seed)
    });
    let result: MultistartResult = result?;
    let diagnostics = FitDiagnostics {
        fit_seconds: secs,
        n_restarts: result.restarts.len(),
        n_failed: result.n_failed,
        best_restart: result.best_index,
        total_evals: result.total_evals(),
        restart_nll: result.restarts.iter().map(|r| r.f_best).collect(),
    };
    let mut gp = TrainedGP::from_params(train, config, &result.best.x_best)?;
    gp.diagnostics = diagnostics;
    Ok(gp)
}

impl TrainedGP {
    /// Builds a model at fixed parameters without optimizing.
    pub fn from_params(train: &MixedDataset, config: &KernelConfig, params: &[f64]) -> Result<Self> {
        let lik = Likelihood::new(train, config)?;
        let fitted = FittedParams::from_vector(config, params)?;
        let p = lik.profile(params).ok_or(Error::NotPositiveDefinite)?;
        Ok(Self {
            config: config.clone(),
            params: fitted,
            train: train.clone(),
            scaler: None,
            mean: p.mean,
            variance: p.variance,
            nll: p.nll,
            jitter: p.jitter,
            diagnostics: FitDiagnostics::default(),
            chol: p.chol,
            alpha: p.alpha,
        })
    }

    pub fn with_scaler(mut self, scaler: Scaler) -> Self {
        self.scaler = Some(scaler);
        self
    }

    pub fn param_vector(&self) -> Vec<f64> {
        self.params.to_vector()
    }

    /// Lower Cholesky factor of `K + (η² + jitter) I`.
    pub fn cholesky(&self) -> DMatrix<f64> {
        self.chol.to_matrix()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn posterior(&self, test: &MixedDataset, want_cov: bool) -> Result<PosteriorPrediction> {
        let params = self.param_vector();
        let k_star = cross_gram(test, &self.train, &self.config, &params)?;
        let k_ss = if want_cov {
            Some(gram(test, &self.config, &params)?)
        } else {
            let diag: Vec<f64> = (0..test.len())
                .map(|i| {
                    self.config
                        .categorical
                        .iter()
                        .zip(&self.params.categorical)
                        .zip(&test.z[i])
                        .map(|((spec, p), &z)| spec.matrix(p).map(|t| t.get(z, z)))
                        .product::<Result<f64>>()
                })
                .collect::<Result<_>>()?;
            Some(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag)))
        };
        Ok(posterior_from_parts(
            &self.chol,
            &self.alpha,
            self.mean,
            self.variance,
            &k_star,
            k_ss.as_ref(),
            want_cov,
        ))
    }

    /// Posterior mean only.
    pub fn predict(&self, test: &MixedDataset) -> Result<Vec<f64>> {
        let params = self.param_vector();
        let k_star = cross_gram(test, &self.train, &self.config, &params)?;
        Ok((0..test.len())
            .map(|i| self.mean + k_star.row(i).iter().zip(&self.alpha).map(|(k, a)| k * a).sum::<f64>())
            .collect())
    }

    /// Posterior mean for raw inputs, in raw output units when the model
    /// carries a scaler.
    pub fn predict_original(&self, test: &MixedDataset) -> Result<Vec<f64>> {
        match &self.scaler {
            Some(s) => Ok(s.inverse_y(&self.predict(&s.transform(test))?)),
            None => self.predict(test),
        }
    }

    /// Posterior mean and variance for raw inputs, in raw output units when
    /// the model carries a scaler.
    pub fn posterior_original(&self, test: &MixedDataset) -> Result<PosteriorPrediction> {
        let Some(s) = &self.scaler else {
            return self.posterior(test, false);
        };
        let mut post = self.posterior(&s.transform(test), false)?;
        post.mean = s.inverse_y(&post.mean);
        let scale = s.y_std * s.y_std;
        post.variance.iter_mut().for_each(|v| *v *= scale);
        Ok(post)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = ModelFile {
            config: self.config.clone(),
            params: self.params.clone(),
            train: self.train.clone(),
            scaler: self.scaler.clone(),
            diagnostics: self.diagnostics.clone(),
        };
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(f, &file)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: ModelFile = serde_json::from_reader(f)?;
        let mut gp = Self::from_params(&file.train, &file.config, &file.params.to_vector())?;
        gp.scaler = file.scaler;
        gp.diagnostics = file.diagnostics;
        Ok(gp)
    }
}

/// Posterior from a factored training matrix.
///
/// `k_star` is test × train; `k_ss` the prior test correlation (its diagonal
/// is enough when `want_cov` is false). Variances are clamped at zero.
pub fn posterior_from_parts(
    chol: &Cholesky,
    alpha: &[f64],
    mean: f64,
    variance: f64,
    k_star: &DMatrix<f64>,
    k_ss: Option<&DMatrix<f64>>,
    want_cov: bool,
) -> PosteriorPrediction {
    let m = k_star.nrows();
    let n = k_star.ncols();
    let mut v = DMatrix::zeros(n, m);
    let mut mu = Vec::with_capacity(m);
    for i in 0..m {
        let row: Vec<f64> = k_star.row(i).iter().copied().collect();
        mu.push(mean + row.iter().zip(alpha).map(|(k, a)| k * a).sum::<f64>());
        let mut col = row;
        chol.forward(&mut col);
        v.set_column(i, &nalgebra::DVector::from_vec(col));
    }
    let prior = |i: usize, j: usize| k_ss.map_or(1.0, |k| k[(i, j)]);
    let var: Vec<f64> = (0..m)
        .map(|i| (variance * (prior(i, i) - v.column(i).norm_squared())).max(0.0))
        .collect();
    let covariance = want_cov.then(|| {
        let vtv = v.transpose() * &v;
        let mut c = DMatrix::from_fn(m, m, |i, j| variance * (prior(i, j) - vtv[(i, j)]));
        for i in 0..m {
            c[(i, i)] = var[i];
        }
        c
    });
    PosteriorPrediction {
        mean: mu,
        variance: var,
        covariance,
    }
}
