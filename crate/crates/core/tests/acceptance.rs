//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng as _;

use catgp::bench::{
    fit_method, performance_profiles, rrmse, run_suite, Method, Score, SuiteConfig,
};
use catgp::datasets::{generate_replicate, DatasetName, DatasetSpec, MixedDataset};
use catgp::gp::{fit, gram, neg_log_marginal_likelihood, FitOptions, KernelConfig, TrainedGP};
use catgp::grouping::{adjusted_rand_index, msd_groups, select_groups, silhouette, LevelDistanceMatrix};
use catgp::kernels::{
    cs_matrix, diffusion_corr, diffusion_cs_params, multiplicative_matrix, nested_param_count,
    one_hot_corr, one_hot_encode, one_hot_to_multiplicative, rbf_ard, validate_gcs, BlockKind,
    CategoricalKernelSpec, Family, GroupPartition,
};
use catgp::optimize::{OptMode, OptSettings};
use catgp::rng::{seeded, Rng};

fn report(n: u32, name: &str, ok: bool, detail: &str) {
    println!(
        "criterion {n:>2} {:<4} {name}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {n} ({name}) failed: {detail}");
}

fn draw(rng: &mut Rng, lower: &[f64], upper: &[f64]) -> Vec<f64> {
    lower
        .iter()
        .zip(upper)
        .map(|(l, u)| l + rng.random::<f64>() * (u - l))
        .collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Contiguous groups of roughly `c / gamma` levels each.
fn blocks(c: usize, gamma: usize) -> GroupPartition {
    let labels: Vec<usize> = (0..c).map(|i| i * gamma / c).collect();
    GroupPartition::from_labels(&labels)
}

fn all_specs(c: usize) -> Vec<CategoricalKernelSpec> {
    let mut specs: Vec<CategoricalKernelSpec> = [
        Family::OneHot,
        Family::Cs,
        Family::Diffusion,
        Family::Ho,
        Family::HoNc,
        Family::He,
        Family::HeNc,
        Family::Ehh,
        Family::Fe,
        Family::Multiplicative,
    ]
    .into_iter()
    .map(|f| CategoricalKernelSpec::new(f, c).unwrap())
    .collect();
    specs.push(CategoricalKernelSpec::with_rank(Family::Lvgp, c, 2).unwrap());
    specs.push(CategoricalKernelSpec::with_rank(Family::HoLowRank, c, 2).unwrap());
    if c > 3 {
        specs.push(CategoricalKernelSpec::with_rank(Family::HoLowRank, c, 3).unwrap());
    }
    let gamma = if c >= 6 { 3 } else { 2 };
    for (b, w) in NESTED {
        specs.push(CategoricalKernelSpec::nested(blocks(c, gamma), b, w).unwrap());
    }
    specs
}

const NESTED: [(BlockKind, BlockKind); 4] = [
    (BlockKind::Cs, BlockKind::Cs),
    (BlockKind::He, BlockKind::Cs),
    (BlockKind::Cs, BlockKind::He),
    (BlockKind::He, BlockKind::He),
];

#[test]
fn criterion_01_kernel_validity() {
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut worst = f64::INFINITY;
    let mut bad = Vec::new();
    let mut checked = 0;
    for c in [3, 5, 10, 13, 24] {
        for spec in all_specs(c) {
            let (lo, hi) = spec.bounds();
            for _ in 0..1000 {
                let t = spec.matrix(&draw(&mut rng, &lo, &hi)).unwrap();
                let ev = t.min_eigenvalue();
                worst = worst.min(ev);
                let unit = !spec.family.is_correlation() || t.has_unit_diagonal(1e-12);
                if ev < -1e-10 || !unit {
                    bad.push(format!("{:?} C={c} λmin={ev:e} unit={unit}", spec.family));
                }
                checked += 1;
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    bad.truncate(3);
    report(
        1,
        "kernel validity",
        bad.is_empty() && secs < 120.0,
        &format!("{checked} draws, worst λmin {worst:.2e}, {secs:.1}s {bad:?}"),
    );
}

#[test]
fn criterion_02_closed_form_equivalences() {
    let mut rng = seeded(2);
    let (mut e_onehot, mut e_diff, mut e_mult) = (0f64, 0f64, 0f64);
    for c in [3, 5, 10, 13] {
        for _ in 0..50 {
            let theta: Vec<f64> = (0..c).map(|_| 0.1 + 9.9 * rng.random::<f64>()).collect();
            let mult = multiplicative_matrix(&one_hot_to_multiplicative(&theta)).unwrap();
            for z in 1..=c {
                for z2 in 1..=c {
                    let rbf = rbf_ard(&one_hot_encode(z, c), &one_hot_encode(z2, c), &theta).unwrap();
                    let closed = one_hot_corr(z, z2, &theta).unwrap();
                    e_onehot = e_onehot.max((rbf - closed).abs());
                    e_mult = e_mult.max((mult[(z - 1, z2 - 1)] - closed).abs());
                }
            }
            let beta = 1e-3 + 2.0 * rng.random::<f64>();
            let (v, cov) = diffusion_cs_params(beta, c);
            let d = diffusion_corr(beta, c).unwrap();
            let cs = cs_matrix(v, cov, c).unwrap();
            e_diff = e_diff.max((d - cs).amax());
        }
    }
    report(
        2,
        "closed-form equivalences",
        e_onehot <= 1e-14 && e_diff <= 1e-15 && e_mult <= 1e-12,
        &format!("one-hot {e_onehot:.1e}, diffusion/CS {e_diff:.1e}, multiplicative {e_mult:.1e}"),
    );
}

fn nested_formula(b: BlockKind, w: BlockKind, sizes: &[usize]) -> usize {
    let g = sizes.len();
    let tri: usize = sizes.iter().map(|n| n * (n + 1) / 2).sum();
    match (b, w) {
        (BlockKind::Cs, BlockKind::Cs) => g + 2,
        (BlockKind::He, BlockKind::Cs) => g * (g + 3) / 2,
        (BlockKind::Cs, BlockKind::He) => tri + 2,
        (BlockKind::He, BlockKind::He) => tri + g * (g + 1) / 2,
        _ => unreachable!(),
    }
}

#[test]
fn criterion_03_parameter_counts() {
    let mut mismatches = Vec::new();
    let mut n = 0;
    let mut check = |what: String, got: usize, want: usize| {
        n += 1;
        if got != want {
            mismatches.push(format!("{what}: {got} != {want}"));
        }
    };
    for c in 3..=24 {
        let count = |f| CategoricalKernelSpec::new(f, c).unwrap().param_count();
        check(format!("He C={c}"), count(Family::He), c * (c + 1) / 2);
        check(format!("He_NC C={c}"), count(Family::HeNc), c * (c + 1) / 2);
        check(format!("Ho C={c}"), count(Family::Ho), c * (c - 1) / 2);
        check(format!("Ho_NC C={c}"), count(Family::HoNc), c * (c - 1) / 2);
        check(format!("EHH C={c}"), count(Family::Ehh), c * (c - 1) / 2);
        check(format!("FE C={c}"), count(Family::Fe), c * (c + 1) / 2);
        check(format!("CS C={c}"), count(Family::Cs), 2);
        check(format!("Diffusion C={c}"), count(Family::Diffusion), 1);
        check(format!("one_hot C={c}"), count(Family::OneHot), c);
        check(format!("Multiplicative C={c}"), count(Family::Multiplicative), c);
        for q in [2, 3] {
            if q < c {
                let lv = CategoricalKernelSpec::with_rank(Family::Lvgp, c, q).unwrap();
                check(format!("LVGP C={c} q={q}"), lv.param_count(), q * c - q * (q + 1) / 2);
                let lr = CategoricalKernelSpec::with_rank(Family::HoLowRank, c, q).unwrap();
                // (q - 1)(C - q/2), kept in integers
                check(format!("Ho_{q} C={c}"), lr.param_count(), (q - 1) * (2 * c - q) / 2);
            }
        }
    }
    let shapes: [&[usize]; 6] = [&[4, 3, 3], &[9, 4], &[4, 4, 4], &[2, 2], &[5, 5, 5, 5], &[3, 8, 2, 6, 5]];
    for sizes in shapes {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| vec![g; s]).collect();
        let p = GroupPartition::from_labels(&labels);
        for (b, w) in NESTED {
            check(
                format!("Nested {b:?}/{w:?} {sizes:?}"),
                nested_param_count(b, w, &p),
                nested_formula(b, w, sizes),
            );
        }
    }
    let ok = mismatches.is_empty();
    mismatches.truncate(3);
    report(3, "parameter counts", ok, &format!("{n} counts {mismatches:?}"));
}

#[test]
fn criterion_04_gcs_validity() {
    let mut rng = seeded(4);
    let mut failures = Vec::new();
    let shapes: [&[usize]; 3] = [&[4, 3, 3], &[9, 4], &[4, 4, 4]];
    let mut n = 0;
    for sizes in shapes {
        let labels: Vec<usize> = sizes.iter().enumerate().flat_map(|(g, &s)| vec![g; s]).collect();
        let p = GroupPartition::from_labels(&labels);
        for (b, w) in NESTED {
            let spec = CategoricalKernelSpec::nested(p.clone(), b, w).unwrap();
            let (lo, hi) = spec.bounds();
            for _ in 0..1000 {
                let t = spec.matrix(&draw(&mut rng, &lo, &hi)).unwrap();
                let r = validate_gcs(&t.0, &p);
                if !r.valid {
                    failures.push(format!("{b:?}/{w:?} {sizes:?}: {:?}", r.failure));
                }
                n += 1;
            }
        }
    }
    let ok = failures.is_empty();
    failures.truncate(3);
    report(4, "GCS validity", ok, &format!("{n} draws {failures:?}"));
}

fn small_problem() -> (MixedDataset, KernelConfig) {
    let (train, _) = generate_replicate(&DatasetSpec::replicate(DatasetName::F2, 3, 0)).unwrap();
    let (train, _, _) = catgp::datasets::standardize(&train, &train).unwrap();
    let config = KernelConfig::new(1, vec![CategoricalKernelSpec::new(Family::He, 10).unwrap()]);
    (train, config)
}

fn explicit_nll(train: &MixedDataset, config: &KernelConfig, params: &[f64]) -> f64 {
    let n = train.len();
    let nug = 10f64.powf(*params.last().unwrap());
    let a = gram(train, config, params).unwrap() + DMatrix::identity(n, n) * nug;
    let inv = a.clone().try_inverse().unwrap();
    let one = nalgebra::DVector::from_element(n, 1.0);
    let y = nalgebra::DVector::from_column_slice(&train.y);
    let m = (one.transpose() * &inv * &y)[0] / (one.transpose() * &inv * &one)[0];
    let r = &y - one * m;
    let s2 = (r.transpose() * &inv * &r)[0] / n as f64;
    let nf = n as f64;
    0.5 * nf * (2.0 * std::f64::consts::PI * s2).ln() + 0.5 * a.determinant().ln() + 0.5 * nf
}

#[test]
fn criterion_05_gp_numerics() {
    let mut rng = seeded(5);
    let (train, config) = small_problem();
    let (lo, hi) = config.bounds(&train).unwrap();

    // factorization vs explicit inverse on subsets of at most 30 points
    let mut worst_nll = 0f64;
    for size in [5, 12, 20, 30] {
        let idx: Vec<usize> = (0..size).collect();
        let sub = MixedDataset::new(
            idx.iter().map(|&i| train.x[i].clone()).collect(),
            idx.iter().map(|&i| train.z[i].clone()).collect(),
            idx.iter().map(|&i| train.y[i]).collect(),
            1,
            vec![10],
        )
        .unwrap();
        for _ in 0..10 {
            let mut p = draw(&mut rng, &lo, &hi);
            *p.last_mut().unwrap() = -4.0;
            let fast = neg_log_marginal_likelihood(&sub, &config, &p).unwrap();
            let slow = explicit_nll(&sub, &config, &p);
            worst_nll = worst_nll.max((fast - slow).abs());
        }
    }

    // smallest nugget: the posterior mean interpolates the training data
    let mut p = draw(&mut rng, &lo, &hi);
    *p.last_mut().unwrap() = -8.0;
    let gp = TrainedGP::from_params(&train, &config, &p).unwrap();
    let pred = gp.predict(&train).unwrap();
    let interp = pred.iter().zip(&train.y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // Richardson: central differences at h, h/2, h/4 shrink by a factor of 4
    let mut ratios = Vec::new();
    while ratios.len() < 20 {
        let mut x = draw(&mut rng, &lo, &hi);
        for (v, (l, u)) in x.iter_mut().zip(lo.iter().zip(&hi)) {
            *v = l + (u - l) * (0.25 + 0.5 * (*v - l) / (u - l));
        }
        *x.last_mut().unwrap() = -4.0;
        let k = rng.random_range(0..x.len());
        let f = |t: f64| {
            let mut y = x.clone();
            y[k] += t;
            neg_log_marginal_likelihood(&train, &config, &y).unwrap()
        };
        let h = 1e-2 * x[k].abs().max(1.0) * (hi[k] - lo[k]).min(1.0);
        let d = |h: f64| (f(h) - f(-h)) / (2.0 * h);
        let (d1, d2, d4) = (d(h), d(h / 2.0), d(h / 4.0));
        ratios.push((d1 - d2) / (d2 - d4));
    }
    let in_band = ratios.iter().filter(|r| (3.5..=4.5).contains(*r)).count();
    let lo_r = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_r = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    report(
        5,
        "GP numerics",
        worst_nll <= 1e-8 && interp <= 1e-3 && in_band == ratios.len(),
        &format!(
            "NLL gap {worst_nll:.1e}, interpolation {interp:.1e}, Richardson {in_band}/20 in [3.5, 4.5] (range {lo_r:.3}..{hi_r:.3})"
        ),
    );
}

/// Independent transcription of the profile definition.
fn brute_profile(scores: &[Score], method: &str, tau: f64) -> f64 {
    let mine: Vec<&Score> = scores.iter().filter(|s| s.method == method && s.value.is_finite()).collect();
    if mine.is_empty() {
        return 0.0;
    }
    let hits = mine
        .iter()
        .filter(|s| {
            let mut all: Vec<f64> = scores
                .iter()
                .filter(|o| o.dataset == s.dataset && o.value.is_finite())
                .map(|o| o.value)
                .collect();
            all.sort_by(f64::total_cmp);
            let k = ((tau * all.len() as f64) - 1e-9).ceil() as usize;
            s.value <= all[k - 1]
        })
        .count();
    hits as f64 / mine.len() as f64
}

#[test]
fn criterion_06_profile_oracle() {
    let mut rng = seeded(6);
    let mut checked = 0;
    let mut bad = 0;
    for _ in 0..100 {
        let (nm, nd, nk) = (rng.random_range(3..=6), rng.random_range(2..=4), rng.random_range(5..=10));
        let mut scores = Vec::new();
        for m in 0..nm {
            for d in 0..nd {
                for k in 0..nk {
                    let value = if rng.random::<f64>() < 0.1 {
                        f64::INFINITY
                    } else {
                        rng.random_range(0..25) as f64 * 0.37
                    };
                    scores.push(Score {
                        method: format!("m{m}"),
                        dataset: format!("d{d}"),
                        experiment: k.to_string(),
                        value,
                    });
                }
            }
        }
        for p in performance_profiles(&scores) {
            for (t, v) in p.tau.iter().zip(&p.p) {
                checked += 1;
                if *v != brute_profile(&scores, &p.method, *t) {
                    bad += 1;
                }
            }
        }
    }
    report(6, "profile oracle", bad == 0, &format!("{checked} grid values, {bad} mismatches"));
}

#[test]
fn criterion_07_rrmse_edges() {
    let y = [3.0, -1.0, 0.5, 7.25, 2.0];
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let perfect = rrmse(&y, &y).unwrap();
    let flat = rrmse(&y, &[mean; 5]).unwrap();
    report(
        7,
        "RRMSE edge cases",
        perfect == 0.0 && (flat - 1.0).abs() <= 1e-15,
        &format!("perfect {perfect}, mean {flat}"),
    );
}

#[test]
fn criterion_08_silhouette_hand_case() {
    let pts = [0.0, 0.1, 5.0, 5.1];
    let d = LevelDistanceMatrix::euclidean(&pts.iter().map(|p| vec![*p]).collect::<Vec<_>>());
    let p = GroupPartition::new(vec![vec![1, 2], vec![3, 4]], 4).unwrap();
    let s = silhouette(&d, &p).unwrap();
    // level 1: a = 0.1, b = (5 + 5.1)/2; level 2: a = 0.1, b = (4.9 + 5)/2; symmetric for 3, 4
    let hand = ((1.0 - 0.1 / 5.05) + (1.0 - 0.1 / 4.95)) / 2.0;
    let sel = select_groups(&d).unwrap();
    report(
        8,
        "silhouette hand case",
        (s - hand).abs() <= 1e-12 && sel.n_groups == 2 && sel.partition.canonical() == p,
        &format!("score {s:.15} vs {hand:.15}, Q* = {}", sel.n_groups),
    );
}

#[test]
fn criterion_09_beam_bending_groups() {
    let start = Instant::now();
    let truth = DatasetName::BeamBending.true_groups().unwrap();
    let truth_labels = GroupPartition::new(truth, 12).unwrap().labels();
    let mut details = Vec::new();
    let mut ok = true;
    for spl in [9, 12, 15] {
        let (train, _) = generate_replicate(&DatasetSpec::replicate(DatasetName::BeamBending, spl, 0)).unwrap();
        let sel = msd_groups(&train.z_column(0), &train.y, 12).unwrap();
        let ari = adjusted_rand_index(&sel.partition.labels(), &truth_labels);
        ok &= ari == 1.0;
        details.push(format!("{spl}/level ARI {ari:.3} Q={}", sel.n_groups));
    }
    let secs = start.elapsed().as_secs_f64();
    report(9, "beam bending MSD recovery", ok && secs < 5.0, &format!("{} ({secs:.2}s)", details.join(", ")));
}

#[test]
fn criterion_10_nested_beats_baselines() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = SuiteConfig::from_toml(&format!(
        r#"
[suite]
output_dir = "{}"
replicates = 10
jobs = 4

[optimizer]
mode = "long"
n_restarts = 24

[datasets]
names = ["f1", "f2", "beam_bending"]
samples_per_level = [6]

[methods]
names = ["Nested_He_He", "one_hot", "CS"]
"#,
        dir.path().display()
    ))
    .unwrap();
    let out = run_suite(&cfg).unwrap();
    let mut ok = true;
    let mut details = Vec::new();
    for d in ["f1", "f2", "beam_bending"] {
        let med = |m: &str| {
            let v: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.dataset == d && r.method == m)
                .map(|r| r.rrmse)
                .collect();
            median(&v)
        };
        let (nested, onehot, cs) = (med("Nested_He_He"), med("one_hot"), med("CS"));
        ok &= nested < onehot && nested < cs;
        details.push(format!("{d}: nested {nested:.3e} one_hot {onehot:.3e} CS {cs:.3e}"));
    }
    // The budget assumes 4 workers on 4 cores. With fewer cores the workers
    // time-share, so scale the wall clock to what 4 cores would take.
    let secs = start.elapsed().as_secs_f64();
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get()).min(4);
    let on_four = secs * cores as f64 / 4.0;
    report(
        10,
        "nested beats one-hot and CS",
        ok && on_four <= 1800.0,
        &format!("{} ({secs:.0}s on {cores} core(s), {on_four:.0}s scaled to 4)", details.join("; ")),
    );
}

#[test]
fn criterion_11_beam_bending_magnitude() {
    let spec = DatasetSpec::replicate(DatasetName::BeamBending, 15, 0);
    let (train, test) = generate_replicate(&spec).unwrap();
    let groups = DatasetName::BeamBending.true_groups().unwrap();
    let method: Method = "Nested_He_He".parse().unwrap();
    let opts = FitOptions::new(OptSettings::long().with_restarts(24), spec.seed);
    let f = fit_method(method, &train, Some(&groups), &opts).unwrap();
    let score = rrmse(&test.y, &f.predict(&test).unwrap()).unwrap();
    report(11, "beam bending magnitude", score <= 1e-2, &format!("RRMSE {score:.3e}"));
}

#[test]
fn criterion_12_short_vs_long() {
    let method: Method = "Ho".parse().unwrap();
    let mut scores = [Vec::new(), Vec::new()];
    let mut times = [0.0, 0.0];
    for (i, mode) in [OptMode::Short, OptMode::Long].into_iter().enumerate() {
        for k in 0..5 {
            let spec = DatasetSpec::replicate(DatasetName::F1, 6, k);
            let (train, test) = generate_replicate(&spec).unwrap();
            let opts = FitOptions::new(OptSettings::for_mode(mode).with_restarts(24), spec.seed);
            let f = fit_method(method, &train, None, &opts).unwrap();
            scores[i].push(rrmse(&test.y, &f.predict(&test).unwrap()).unwrap());
            times[i] += f.fit_seconds();
        }
    }
    let (ms, ml) = (median(&scores[0]), median(&scores[1]));
    report(
        12,
        "short vs long optimization",
        ml <= ms && times[1] > times[0],
        &format!("median RRMSE short {ms:.3e} long {ml:.3e}; fit time short {:.1}s long {:.1}s", times[0], times[1]),
    );
}

#[test]
fn fit_is_reproducible() {
    let (train, config) = small_problem();
    let opts = FitOptions::new(OptSettings::short().with_restarts(3), 11);
    let a = fit(&train, &config, &opts).unwrap();
    let b = fit(&train, &config, &opts).unwrap();
    assert_eq!(a.param_vector(), b.param_vector());
}
