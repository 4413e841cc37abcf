//! Analytic test functions with their input boxes and categorical surrogates.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The analytic functions behind every dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TestFunction {
    F1,
    F2,
    BeamBending,
    Borehole,
    Otl,
    Piston,
    Goldstein,
}

/// Moment of inertia of each of the twelve beam cross-sections.
pub const BEAM_INERTIA: [f64; 12] = [
    0.0833, 0.139, 0.380, 0.0796, 0.133, 0.363, 0.0859, 0.136, 0.360, 0.0922, 0.138, 0.369,
];

const OTL_RF: [f64; 4] = [0.5, 1.2, 2.1, 2.9];
const OTL_BETA: [f64; 6] = [50.0, 100.0, 150.0, 200.0, 250.0, 300.0];

// (x3, x4) and constraint constants (c1, c2) for Goldstein levels 1..=9.
const GOLDSTEIN_X34: [(f64, f64); 9] = [
    (20.0, 20.0),
    (20.0, 50.0),
    (20.0, 80.0),
    (50.0, 20.0),
    (50.0, 50.0),
    (50.0, 80.0),
    (80.0, 20.0),
    (80.0, 50.0),
    (80.0, 80.0),
];
pub(crate) const GOLDSTEIN_C: [(f64, f64); 9] = [
    (2.0, 0.5),
    (2.0, -1.0),
    (2.0, -2.0),
    (-2.0, 0.5),
    (-2.0, -1.0),
    (-2.0, -2.0),
    (1.0, 0.5),
    (1.0, -1.0),
    (1.0, -2.0),
];

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

impl TestFunction {
    /// Box of the continuous inputs, in natural units.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        match self {
            TestFunction::F1 | TestFunction::F2 => vec![(0.0, 1.0)],
            TestFunction::BeamBending => vec![(10.0, 20.0), (1.0, 2.0)],
            // r, T_u, H_u, T_l, L, K_w
            TestFunction::Borehole => vec![
                (100.0, 50000.0),
                (63070.0, 115000.0),
                (990.0, 1110.0),
                (63.1, 116.0),
                (1120.0, 1680.0),
                (9855.0, 12045.0),
            ],
            // R_b1, R_b2, R_c1, R_c2
            TestFunction::Otl => vec![(50.0, 150.0), (25.0, 70.0), (1.2, 2.5), (0.25, 1.2)],
            // M, S, V_0, T_a, T_0
            TestFunction::Piston => vec![
                (30.0, 60.0),
                (0.005, 0.02),
                (0.002, 0.01),
                (290.0, 296.0),
                (340.0, 360.0),
            ],
            // The constraint g only has feasible points on [0, 100]².
            TestFunction::Goldstein => vec![(0.0, 100.0), (0.0, 100.0)],
        }
    }

    pub fn level_counts(self) -> Vec<usize> {
        self.level_values().iter().map(Vec::len).collect()
    }

    /// Continuous surrogate value of each level, per categorical variable.
    /// Purely nominal variables (f1, f2, Goldstein) list their level indices.
    pub fn level_values(self) -> Vec<Vec<f64>> {
        match self {
            TestFunction::F1 => vec![(1..=13).map(f64::from).collect()],
            TestFunction::F2 => vec![(1..=10).map(f64::from).collect()],
            TestFunction::BeamBending => vec![BEAM_INERTIA.to_vec()],
            // r_w, H_l
            TestFunction::Borehole => vec![linspace(0.05, 0.15, 3), linspace(700.0, 820.0, 4)],
            // R_f, beta
            TestFunction::Otl => vec![OTL_RF.to_vec(), OTL_BETA.to_vec()],
            // P_0, k
            TestFunction::Piston => vec![linspace(90000.0, 110000.0, 3), linspace(1000.0, 5000.0, 5)],
            TestFunction::Goldstein => vec![(1..=9).map(f64::from).collect()],
        }
    }

    /// Known level groups (1-based), when the problem has them.
    pub fn true_groups(self) -> Option<Vec<Vec<usize>>> {
        match self {
            TestFunction::F1 => Some(vec![(1..=9).collect(), (10..=13).collect()]),
            TestFunction::F2 => Some(vec![(1..=4).collect(), (5..=7).collect(), (8..=10).collect()]),
            TestFunction::BeamBending => Some(vec![
                vec![1, 4, 7, 10],
                vec![2, 5, 8, 11],
                vec![3, 6, 9, 12],
            ]),
            _ => None,
        }
    }

    pub fn test_size(self) -> usize {
        match self {
            TestFunction::F1 => 1001,
            TestFunction::F2 | TestFunction::BeamBending => 1000,
            TestFunction::Borehole | TestFunction::Otl => 1008,
            TestFunction::Piston => 1005,
            TestFunction::Goldstein => 999,
        }
    }

    /// Evaluates the function at continuous inputs `x` (natural units) and
    /// 1-based levels `z`.
    pub fn eval(self, x: &[f64], z: &[usize]) -> Result<f64> {
        let bounds = self.bounds();
        if x.len() != bounds.len() {
            return Err(Error::Dimension(format!(
                "{self:?} expects {} continuous inputs, got {}",
                bounds.len(),
                x.len()
            )));
        }
        for (i, (&xi, &(lo, hi))) in x.iter().zip(&bounds).enumerate() {
            let slack = 1e-12 * (hi - lo).abs().max(1.0);
            if !(xi >= lo - slack && xi <= hi + slack) {
                return Err(Error::OutOfDomain(format!(
                    "{self:?} input {i} = {xi} outside [{lo}, {hi}]"
                )));
            }
        }
        let values = self.level_values();
        if z.len() != values.len() {
            return Err(Error::Dimension(format!(
                "{self:?} expects {} categorical inputs, got {}",
                values.len(),
                z.len()
            )));
        }
        let mut cat = Vec::with_capacity(z.len());
        for (&zi, vals) in z.iter().zip(&values) {
            if zi == 0 || zi > vals.len() {
                return Err(Error::InvalidLevel {
                    level: zi,
                    levels: vals.len(),
                });
            }
            cat.push(vals[zi - 1]);
        }
        Ok(match self {
            TestFunction::F1 => f1(x[0], z[0]),
            TestFunction::F2 => f2(x[0], z[0]),
            TestFunction::BeamBending => beam_bending(x[0], x[1], cat[0]),
            TestFunction::Borehole => borehole(x[0], cat[0], x[1], x[2], x[3], cat[1], x[4], x[5]),
            TestFunction::Otl => otl(x[0], x[1], cat[0], x[2], x[3], cat[1]),
            TestFunction::Piston => piston(x[0], x[1], x[2], cat[1], cat[0], x[3], x[4]),
            TestFunction::Goldstein => {
                let (x3, x4) = GOLDSTEIN_X34[z[0] - 1];
                goldstein(x[0], x[1], x3, x4)
            }
        })
    }
}

fn f1(x: f64, z: usize) -> f64 {
    let zf = z as f64;
    let shift = if z > 9 { 0.4 + zf / 15.0 } else { 0.0 };
    (7.0 * PI * x / 2.0 + shift - zf / 20.0).cos()
}

fn f2(x: f64, z: usize) -> f64 {
    let zf = z as f64;
    match z {
        1..=4 => x + 0.01 * (x - 0.5).powi(2) * zf / 10.0,
        5..=7 => 0.9 * (2.0 * PI * (x + (zf - 4.0) * zf / 20.0)).cos() * (-x).exp(),
        _ => -0.7 * (2.0 * PI * (x + (zf - 7.0) * zf / 20.0)).cos() * (-x).exp(),
    }
}

fn beam_bending(l: f64, s: f64, inertia: f64) -> f64 {
    l.powi(3) / (3.0 * s * s * inertia)
}

#[allow(clippy::too_many_arguments)]
fn borehole(r: f64, rw: f64, tu: f64, hu: f64, tl: f64, hl: f64, l: f64, kw: f64) -> f64 {
    let log_ratio = (r / rw).ln();
    2.0 * PI * tu * (hu - hl) / (log_ratio * (1.0 + 2.0 * l * tu / (log_ratio * rw * rw * kw) + tu / tl))
}

fn otl(rb1: f64, rb2: f64, rf: f64, rc1: f64, rc2: f64, beta: f64) -> f64 {
    let vb1 = 12.0 * rb2 / (rb1 + rb2);
    let b = beta * (rc2 + 9.0);
    let denom = b + rf;
    (vb1 + 0.74) * b / denom + 11.35 * rf / denom + 0.74 * rf * b / (rc1 * denom)
}

#[allow(clippy::too_many_arguments)]
fn piston(m: f64, s: f64, v0: f64, k: f64, p0: f64, ta: f64, t0: f64) -> f64 {
    let a = p0 * s + 19.62 * m - k * v0 / s;
    let pvt = p0 * v0 * ta / t0;
    let v = s / (2.0 * k) * ((a * a + 4.0 * k * pvt).sqrt() - a);
    2.0 * PI * (1.0 / m * (k + s * s * pvt / (v * v))).sqrt()
}

fn goldstein(x1: f64, x2: f64, x3: f64, x4: f64) -> f64 {
    53.3108 + 0.184901 * x1 - 5.02914 * x1.powi(3) * 1e-6 + 7.72522 * x1.powi(4) * 1e-8
        - 0.0870775 * x2
        - 0.106959 * x3
        + 7.98772 * x3.powi(3) * 1e-6
        + 0.00242482 * x4
        + 1.32851 * x4.powi(3) * 1e-6
        - 0.00146393 * x1 * x2
        - 0.00301588 * x1 * x3
        - 0.00272291 * x1 * x4
        + 0.0017004 * x2 * x3
        + 0.0038428 * x2 * x4
        - 0.000198969 * x3 * x4
        + 1.86025 * x1 * x2 * x3 * 1e-5
        - 1.88719 * x1 * x2 * x4 * 1e-6
        + 2.50923 * x1 * x3 * x4 * 1e-5
        - 5.62199 * x2 * x3 * x4 * 1e-5
}

/// Goldstein design constraint; a point is feasible for `level` when `g ≤ 0`.
pub fn goldstein_constraint(x1: f64, x2: f64, level: usize) -> f64 {
    let (c1, c2) = GOLDSTEIN_C[level - 1];
    c1 * (x1 / 10.0).sin().powi(3) + c2 * (x2 / 10.0).cos().powi(2)
}
