//! Accuracy metric, performance profiles, Wilcoxon test and Pareto front.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Number of points of the τ grid `1/100, 2/100, …, 1`.
pub const TAU_STEPS: usize = 100;

/// `sqrt(Σ (y - ŷ)² / Σ (y - ȳ)²)`.
pub fn rrmse(y_true: &[f64], y_pred: &[f64]) -> Result<f64> {
    if y_true.len() != y_pred.len() || y_true.is_empty() {
        return Err(Error::Dimension(format!(
            "rrmse on {} targets and {} predictions",
            y_true.len(),
            y_pred.len()
        )));
    }
    let mean = y_true.iter().sum::<f64>() / y_true.len() as f64;
    let den: f64 = y_true.iter().map(|y| (y - mean).powi(2)).sum();
    if !(den > 0.0) {
        return Err(Error::ConstantColumn("test targets".into()));
    }
    let num: f64 = y_true.iter().zip(y_pred).map(|(y, p)| (y - p).powi(2)).sum();
    Ok((num / den).sqrt())
}

/// Rank `⌈τ n⌉` (1-based), robust to `τ n` landing a hair above an integer.
fn quantile_rank(tau: f64, n: usize) -> usize {
    let x = tau * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.max(1.0) { r } else { x.ceil() };
    (k as usize).clamp(1, n)
}

/// The `⌈τ·n⌉`-th smallest value; +∞ entries take part in the ordering.
pub fn dataset_quantile(scores: &[f64], tau: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::InvalidParameter("quantile of an empty set".into()));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("quantile level {tau} outside (0, 1]")));
    }
    let mut s = scores.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s[quantile_rank(tau, s.len()) - 1])
}

/// One entry of the score tensor `s[i, j, k]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub method: String,
    pub dataset: String,
    pub experiment: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerformanceProfile {
    pub method: String,
    /// Grid `k / 100`, `k = 1..=100`.
    pub tau: Vec<f64>,
    pub p: Vec<f64>,
    /// Trapezoid area over `[0, 1]` with `p(0) = 0`.
    pub auc: f64,
}

pub fn tau_grid() -> Vec<f64> {
    (1..=TAU_STEPS).map(|k| k as f64 / TAU_STEPS as f64).collect()
}

fn trapezoid_auc(p: &[f64]) -> f64 {
    let h = 1.0 / p.len() as f64;
    let mut prev = 0.0;
    let mut area = 0.0;
    for &v in p {
        area += 0.5 * h * (prev + v);
        prev = v;
    }
    area
}

/// Profiles `p_i(τ) = |{(j,k) ∈ J_i : s_ijk ≤ q_{j,τ}}| / |J_i|` on the τ
/// grid, sorted by AUC (descending, ties by method name).
///
/// Infinite scores mark pairs that were not evaluated: they are excluded
/// from both `I_j` and `J_i`. A method with no finite score gets `p ≡ 0`.
pub fn performance_profiles(scores: &[Score]) -> Vec<PerformanceProfile> {
    let mut per_dataset: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut methods: BTreeMap<&str, Vec<(&str, f64)>> = BTreeMap::new();
    for s in scores {
        methods.entry(&s.method).or_default();
        if s.value.is_finite() {
            per_dataset.entry(&s.dataset).or_default().push(s.value);
            methods.get_mut(s.method.as_str()).unwrap().push((&s.dataset, s.value));
        }
    }
    // q[j][k-1] = ⌈k|I_j|/100⌉-th smallest finite score of dataset j
    let quantiles: BTreeMap<&str, Vec<f64>> = per_dataset
        .into_iter()
        .map(|(j, mut v)| {
            v.sort_by(f64::total_cmp);
            let n = v.len();
            let q = (1..=TAU_STEPS)
                .map(|k| v[(k * n).div_ceil(TAU_STEPS).max(1) - 1])
                .collect();
            (j, q)
        })
        .collect();
    let tau = tau_grid();
    let mut out: Vec<PerformanceProfile> = methods
        .into_iter()
        .map(|(m, entries)| {
            let p: Vec<f64> = (0..TAU_STEPS)
                .map(|k| {
                    if entries.is_empty() {
                        return 0.0;
                    }
                    let hits = entries.iter().filter(|(j, v)| *v <= quantiles[j][k]).count();
                    hits as f64 / entries.len() as f64
                })
                .collect();
            PerformanceProfile {
                method: m.to_string(),
                tau: tau.clone(),
                auc: trapezoid_auc(&p),
                p,
            }
        })
        .collect();
    out.sort_by(|a, b| b.auc.total_cmp(&a.auc).then_with(|| a.method.cmp(&b.method)));
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `P(W⁺ ≤ observed)` under the null: small when `a` tends to be below `b`.
    pub p_value: f64,
    /// Sum of the ranks of positive differences `a - b`.
    pub statistic: f64,
    /// Number of nonzero differences.
    pub n: usize,
    pub exact: bool,
    /// Every difference was zero; `p_value` is then 1.
    pub all_ties: bool,
}

/// Largest sample handled by the exact null distribution.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// One-sided Wilcoxon signed-rank test of "a < b" on paired samples.
///
/// Zero differences are dropped, tied magnitudes get average ranks. The null
/// distribution is exact for up to 25 nonzero differences (computed on
/// doubled ranks so that half ranks stay integral) and normal with
/// continuity and tie corrections beyond.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    if a.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "Wilcoxon test needs at least 5 pairs, got {}",
            a.len()
        )));
    }
    let mut d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            statistic: 0.0,
            n: 0,
            exact: true,
            all_ties: true,
        });
    }
    d.sort_by(|x, y| x.abs().total_cmp(&y.abs()));
    // doubled average ranks
    let mut ranks2 = vec![0usize; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        // ranks i+1..=j+1 average to (i+j+2)/2
        for r in &mut ranks2[i..=j] {
            *r = i + j + 2;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let w2: usize = d.iter().zip(&ranks2).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let statistic = w2 as f64 / 2.0;
    if n <= WILCOXON_EXACT_MAX {
        // counts[s] = number of sign assignments with doubled W⁺ = s
        let total: usize = ranks2.iter().sum();
        let mut counts = vec![0f64; total + 1];
        counts[0] = 1.0;
        for &r in &ranks2 {
            for s in (r..=total).rev() {
                counts[s] += counts[s - r];
            }
        }
        let below: f64 = counts[..=w2].iter().sum();
        return Ok(WilcoxonResult {
            p_value: below / 2f64.powi(n as i32),
            statistic,
            n,
            exact: true,
            all_ties: false,
        });
    }
    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
    let z = (statistic + 0.5 - mean) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(WilcoxonResult {
        p_value: normal.cdf(z),
        statistic,
        n,
        exact: false,
        all_ties: false,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub method: String,
    pub auc_time: f64,
    pub auc_rrmse: f64,
    pub is_front: bool,
}

/// Nondominated points when both AUCs are to be maximized.
pub fn pareto_points(points: &[(String, f64, f64)]) -> Vec<ParetoPoint> {
    points
        .iter()
        .map(|(m, t, r)| {
            let dominated = points.iter().any(|(_, t2, r2)| {
                t2 >= t && r2 >= r && (t2 > t || r2 > r)
            });
            ParetoPoint {
                method: m.clone(),
                auc_time: *t,
                auc_rrmse: *r,
                is_front: !dominated,
            }
        })
        .collect()
}
