#![allow(dead_code)]

use brule_core::evanescence::{Configuration, Landmark, Lepd, MapModel};
use brule_core::gaussian::GaussianBelief;
use brule_core::robot::Pose;
use nalgebra::{Matrix3, Vector3};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn initial_cov() -> Matrix3<f64> {
    let h = 3f64.to_radians();
    Matrix3::from_diagonal(&Vector3::new(0.25, 0.25, h * h))
}

pub fn belief_at(x: f64, y: f64) -> GaussianBelief {
    GaussianBelief::new(Pose::new(x, y, 0.0), initial_cov())
}

pub fn map_of(points: &[(f64, f64)]) -> MapModel {
    MapModel::new(
        points
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| Landmark::new(format!("l{i}"), x, y))
            .collect(),
    )
    .unwrap()
}

pub fn random_map(n: usize, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> MapModel {
    let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.random_range(lo..hi), rng.random_range(lo..hi))).collect();
    map_of(&points)
}

pub fn random_partition(n: usize, max_size: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut groups = Vec::new();
    let mut rest = &order[..];
    while !rest.is_empty() {
        let k = rng.random_range(1..=max_size.min(rest.len()));
        groups.push(rest[..k].to_vec());
        rest = &rest[k..];
    }
    groups
}

/// kind 0 independent, 1 mutex, 2 grouped latent, 3 explicit table.
pub fn random_lepd(n: usize, kind: usize, rng: &mut ChaCha8Rng) -> Lepd {
    match kind % 4 {
        0 => Lepd::independent((0..n).map(|_| rng.random_range(0.05..0.95)).collect()).unwrap(),
        1 => {
            let groups = random_partition(n, 3, rng);
            let weights = groups
                .iter()
                .map(|g| {
                    let w: Vec<f64> = g.iter().map(|_| rng.random_range(0.1..1.0)).collect();
                    let t: f64 = w.iter().sum();
                    w.into_iter().map(|x| x / t).collect()
                })
                .collect();
            Lepd::mutex(n, groups, weights).unwrap()
        }
        2 => {
            let groups = random_partition(n, 4, rng);
            Lepd::latent_groups(n, groups, rng.random_range(0.0..0.6), rng.random_range(0.1..0.9)).unwrap()
        }
        _ => {
            let rows = rng.random_range(1..=6usize).min(1 << n);
            let mut masks: Vec<u64> = (0..1u64 << n).collect();
            masks.shuffle(rng);
            let w: Vec<f64> = (0..rows).map(|_| rng.random_range(0.05..1.0)).collect();
            let t: f64 = w.iter().sum();
            let table = masks[..rows]
                .iter()
                .zip(&w)
                .map(|(&m, &p)| (Configuration::from_mask(n, m), p / t))
                .collect();
            Lepd::explicit(n, table).unwrap()
        }
    }
}

pub fn max_abs(m: &Matrix3<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

pub fn min_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.symmetric_eigenvalues().min()
}
