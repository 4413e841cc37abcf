use super::*;
use crate::datasets::{generate_replicate, DatasetName, DatasetSpec};
use crate::kernels::cs_matrix;
use approx::assert_relative_eq;

fn line(points: &[f64]) -> LevelDistanceMatrix {
    LevelDistanceMatrix::euclidean(&points.iter().map(|p| vec![*p]).collect::<Vec<_>>())
}

fn groups(p: &GroupPartition) -> Vec<Vec<usize>> {
    p.canonical().groups().to_vec()
}

#[test]
fn msd_examples() {
    let e = target_msd(&[1, 1, 1, 2, 2, 3], &[1.0, 1.0, 1.0, 0.0, 2.0, 5.0], 3).unwrap();
    assert_eq!(e.mean, vec![1.0, 1.0, 5.0]);
    assert_eq!(e.std, vec![0.0, 1.0, 0.0]);
    let err = target_msd(&[1, 3], &[0.0, 1.0], 3).unwrap_err();
    assert!(matches!(err, Error::MissingLevel(2)));
}

#[test]
fn kernel_distance_examples() {
    let d = kernel_distance(&CorrelationMatrix(DMatrix::identity(3, 3))).unwrap();
    assert_relative_eq!(d.0[(0, 1)], 2f64.sqrt(), epsilon = 1e-15);
    let d = kernel_distance(&CorrelationMatrix(DMatrix::from_element(3, 3, 1.0))).unwrap();
    assert!(d.0.iter().all(|v| *v == 0.0));
    let d = kernel_distance(&CorrelationMatrix(cs_matrix(1.0, 0.5, 3).unwrap())).unwrap();
    assert_relative_eq!(d.0[(2, 0)], 1.0, epsilon = 1e-15);
    let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
    assert!(kernel_distance(&CorrelationMatrix(bad)).is_err());
}

#[test]
fn agglomerative_examples() {
    let d = line(&[0.0, 0.1, 5.0, 5.1]);
    assert_eq!(groups(&agglomerative(&d, 4).unwrap()), vec![vec![1], vec![2], vec![3], vec![4]]);
    assert_eq!(groups(&agglomerative(&d, 1).unwrap()), vec![vec![1, 2, 3, 4]]);
    assert_eq!(groups(&agglomerative(&d, 2).unwrap()), vec![vec![1, 2], vec![3, 4]]);
    assert!(agglomerative(&d, 0).is_err());
    assert!(agglomerative(&d, 5).is_err());
}

#[test]
fn ties_merge_lexicographically() {
    // all distances equal: merges go (1,2), then ({1,2},3), ...
    let c = 4;
    let d = LevelDistanceMatrix(DMatrix::from_fn(c, c, |i, j| if i == j { 0.0 } else { 1.0 }));
    assert_eq!(groups(&agglomerative(&d, 3).unwrap()), vec![vec![1, 2], vec![3], vec![4]]);
    assert_eq!(groups(&agglomerative(&d, 2).unwrap()), vec![vec![1, 2, 3], vec![4]]);
}

#[test]
fn silhouette_four_point_line() {
    let d = line(&[0.0, 0.1, 5.0, 5.1]);
    let p = GroupPartition::new(vec![vec![1, 2], vec![3, 4]], 4).unwrap();
    let s = silhouette(&d, &p).unwrap();
    let hand = (4.95 / 5.05 + 4.85 / 4.95) / 2.0;
    assert!((s - hand).abs() <= 1e-12);
    let split = GroupPartition::new(vec![vec![1, 3], vec![2, 4]], 4).unwrap();
    assert!(silhouette(&d, &split).unwrap() < s);
    let sel = select_groups(&d).unwrap();
    assert_eq!(sel.n_groups, 2);
    assert_eq!(sel.partition.canonical(), p);
}

#[test]
fn silhouette_separated_pairs() {
    let mut d = DMatrix::from_element(4, 4, 10.0);
    for (i, j) in [(0, 1), (2, 3)] {
        d[(i, j)] = 0.1;
        d[(j, i)] = 0.1;
    }
    for i in 0..4 {
        d[(i, i)] = 0.0;
    }
    let d = LevelDistanceMatrix::new(d).unwrap();
    let p = GroupPartition::new(vec![vec![1, 2], vec![3, 4]], 4).unwrap();
    assert_relative_eq!(silhouette(&d, &p).unwrap(), 0.99, epsilon = 1e-12);
}

#[test]
fn equal_distances_never_score_positive() {
    let c = 6;
    let d = LevelDistanceMatrix(DMatrix::from_fn(c, c, |i, j| if i == j { 0.0 } else { 2.0 }));
    for labels in [[0, 0, 0, 1, 1, 1], [0, 1, 0, 1, 0, 1], [0, 0, 0, 0, 0, 1], [0, 0, 1, 1, 2, 2]] {
        let p = GroupPartition::from_labels(&labels);
        assert!(silhouette(&d, &p).unwrap() <= 0.0);
    }
}

#[test]
fn silhouette_range_checked() {
    let d = line(&[0.0, 1.0, 2.0]);
    assert!(silhouette(&d, &GroupPartition::singletons(3)).is_err());
    assert!(silhouette(&d, &GroupPartition::new(vec![vec![1, 2, 3]], 3).unwrap()).is_err());
    assert!(select_groups(&line(&[0.0, 1.0])).is_err());
}

#[test]
fn three_triples() {
    let pts = [0.0, 0.1, 0.2, 10.0, 10.1, 10.2, 20.0, 20.1, 20.2];
    // shuffle level order so that the groups are not contiguous
    let order = [4, 0, 8, 1, 5, 2, 7, 3, 6];
    let d = line(&order.iter().map(|&i| pts[i]).collect::<Vec<_>>());
    let sel = select_groups(&d).unwrap();
    assert_eq!(sel.n_groups, 3);
    let truth: Vec<usize> = order.iter().map(|&i| i / 3).collect();
    assert_eq!(adjusted_rand_index(&sel.partition.labels(), &truth), 1.0);
    assert_eq!(sel.scores.len(), 7);
}

#[test]
fn forced_range_and_lvgp() {
    let d = LevelDistanceMatrix::euclidean(&[vec![1.0, 1.0], vec![1.0, 1.0], vec![9.0, 3.0]]);
    let sel = select_groups(&d).unwrap();
    assert_eq!(groups(&sel.partition), vec![vec![1, 2], vec![3]]);
    let phi = DMatrix::from_column_slice(3, 1, &[0.0, 1.0, 10.0]);
    let sel = groups_from_lvgp(&phi).unwrap();
    assert_eq!(groups(&sel.partition), vec![vec![1, 2], vec![3]]);
}

#[test]
fn identical_latent_rows_stay_together() {
    let phi = DMatrix::from_row_slice(5, 2, &[0.0, 0.0, 1.0, 0.5, 1.0, 0.5, -1.0, 2.0, 3.0, 0.0]);
    let points: Vec<Vec<f64>> = phi.row_iter().map(|r| r.iter().copied().collect()).collect();
    let d = LevelDistanceMatrix::euclidean(&points);
    for q in 1..=4 {
        let labels = agglomerative(&d, q).unwrap().labels();
        assert_eq!(labels[1], labels[2]);
    }
}

#[test]
fn msd_affine_invariance() {
    let z = [1, 1, 2, 2, 3, 3, 4, 4, 5, 5];
    let y = [0.0, 0.2, 0.1, 0.3, 5.0, 5.4, 5.1, 5.2, 9.0, 9.9];
    let base = msd_groups(&z, &y, 5).unwrap();
    let y2: Vec<f64> = y.iter().map(|v| -3.0 * v + 7.0).collect();
    let other = msd_groups(&z, &y2, 5).unwrap();
    assert_eq!(base.partition.canonical(), other.partition.canonical());
}

#[test]
fn ari_basics() {
    assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[5, 5, 2, 2]), 1.0);
    assert!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]) < 0.0);
}

#[test]
fn beam_bending_light_group_is_found() {
    // the lightest-filled shapes have the smallest and least dispersed outputs
    let (train, _) = generate_replicate(&DatasetSpec::replicate(DatasetName::BeamBending, 9, 0)).unwrap();
    let sel = msd_groups(&train.z_column(0), &train.y, 12).unwrap();
    assert!(sel.partition.canonical().groups().contains(&vec![3, 6, 9, 12]));
}
