use nalgebra::DMatrix;
use proptest::prelude::*;

use catgp::bench::{performance_profiles, Score};
use catgp::grouping::{kernel_distance, msd_groups, select_groups, LevelDistanceMatrix};
use catgp::kernels::{BlockKind, CategoricalKernelSpec, Family, GroupPartition};

const FAMILIES: [Family; 10] = [
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
];

/// A kernel spec for `c` levels plus a point of its parameter box given by
/// fractions in [0, 1].
fn spec_and_params(c: usize, pick: usize, u: &[f64]) -> (CategoricalKernelSpec, Vec<f64>) {
    let spec = match pick % 13 {
        i if i < 10 => CategoricalKernelSpec::new(FAMILIES[i], c).unwrap(),
        10 => CategoricalKernelSpec::with_rank(Family::Lvgp, c, 2).unwrap(),
        11 => CategoricalKernelSpec::with_rank(Family::HoLowRank, c, 2).unwrap(),
        _ => {
            let labels: Vec<usize> = (0..c).map(|i| i * 2 / c).collect();
            CategoricalKernelSpec::nested(GroupPartition::from_labels(&labels), BlockKind::He, BlockKind::He)
                .unwrap()
        }
    };
    let (lo, hi) = spec.bounds();
    let p = lo
        .iter()
        .zip(&hi)
        .enumerate()
        .map(|(i, (l, h))| l + (h - l) * u[i % u.len()])
        .collect();
    (spec, p)
}

fn distance_matrix(c: usize, raw: &[f64]) -> LevelDistanceMatrix {
    let pts: Vec<Vec<f64>> = (0..c).map(|i| vec![raw[2 * i], raw[2 * i + 1]]).collect();
    LevelDistanceMatrix::euclidean(&pts)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn kernels_are_symmetric_psd(
        c in 3usize..12,
        pick in 0usize..13,
        u in prop::collection::vec(0.0f64..1.0, 1..40),
    ) {
        let (spec, p) = spec_and_params(c, pick, &u);
        let t = spec.matrix(&p).unwrap();
        prop_assert!((&t.0 - t.0.transpose()).amax() <= 1e-12);
        prop_assert!(t.min_eigenvalue() >= -1e-10);
        if spec.family.is_correlation() {
            prop_assert!(t.has_unit_diagonal(1e-12));
        }
    }

    #[test]
    fn kernel_distance_is_a_pseudo_metric(
        c in 3usize..10,
        pick in 0usize..13,
        u in prop::collection::vec(0.0f64..1.0, 1..40),
    ) {
        let (spec, p) = spec_and_params(c, pick, &u);
        let d = kernel_distance(&spec.matrix(&p).unwrap()).unwrap();
        for i in 0..c {
            prop_assert_eq!(d.0[(i, i)], 0.0);
            for j in 0..c {
                prop_assert!(d.0[(i, j)] >= 0.0);
                prop_assert_eq!(d.0[(i, j)], d.0[(j, i)]);
                for k in 0..c {
                    prop_assert!(d.0[(i, k)] <= d.0[(i, j)] + d.0[(j, k)] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn grouping_follows_relabeling(
        raw in prop::collection::vec(-5.0f64..5.0, 24),
        perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let c = 12;
        let d = distance_matrix(c, &raw);
        // level perm[i] of the relabeled problem is level i of the original
        let mut moved = DMatrix::zeros(c, c);
        for i in 0..c {
            for j in 0..c {
                moved[(perm[i], perm[j])] = d.0[(i, j)];
            }
        }
        let a = select_groups(&d).unwrap();
        let b = select_groups(&LevelDistanceMatrix::new(moved).unwrap()).unwrap();
        prop_assert_eq!(a.n_groups, b.n_groups);
        let mapped: Vec<Vec<usize>> = a
            .partition
            .groups()
            .iter()
            .map(|g| g.iter().map(|&l| perm[l - 1] + 1).collect())
            .collect();
        prop_assert_eq!(GroupPartition::new(mapped, c).unwrap().canonical(), b.partition.canonical());
    }

    #[test]
    fn msd_groups_ignore_affine_output_changes(
        y in prop::collection::vec(-10.0f64..10.0, 30),
        scale in prop_oneof![0.01f64..100.0, -100.0f64..-0.01],
        shift in -1e3f64..1e3,
    ) {
        let z: Vec<usize> = (0..30).map(|i| i % 6 + 1).collect();
        let moved: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        let a = msd_groups(&z, &y, 6).unwrap();
        let b = msd_groups(&z, &moved, 6).unwrap();
        prop_assert_eq!(a.partition.canonical(), b.partition.canonical());
    }

    #[test]
    fn profiles_are_monotone_and_bounded(
        values in prop::collection::vec(prop_oneof![9 => 0.0f64..10.0, 1 => Just(f64::INFINITY)], 24),
    ) {
        let scores: Vec<Score> = values
            .iter()
            .enumerate()
            .map(|(i, &value)| Score {
                method: format!("m{}", i % 3),
                dataset: format!("d{}", (i / 3) % 2),
                experiment: (i / 6).to_string(),
                value,
            })
            .collect();
        for p in performance_profiles(&scores) {
            prop_assert_eq!(p.tau.len(), 100);
            prop_assert!(p.p.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(p.p.iter().all(|v| (0.0..=1.0).contains(v)));
            prop_assert!((0.0..=1.0).contains(&p.auc));
        }
    }
}
