#![allow(dead_code)]

use faer::c64;
use faer::Mat;
use spinbath::hilbert::{thermal_initial_state, InitialMixture, MemoryBudget, Spin};
use spinbath::model::{mhz, SystemSpec};

pub const ETA1: f64 = 0.54;

/// Single-mode instance at the N = 1 trace parameters.
pub fn n1_spec(cutoff: usize) -> SystemSpec {
    SystemSpec {
        n_ions: 1,
        cutoff,
        omega1: mhz(0.724),
        eta1: ETA1,
        rabi: mhz(0.73),
        omega_z: 0.0,
        spin_ion: 1,
    }
}

pub fn n2_spec(cutoff: usize) -> SystemSpec {
    SystemSpec {
        n_ions: 2,
        cutoff,
        omega1: mhz(0.707),
        eta1: ETA1,
        rabi: mhz(0.95),
        omega_z: 0.0,
        spin_ion: 1,
    }
}

pub fn n3_spec(cutoff: usize) -> SystemSpec {
    SystemSpec {
        n_ions: 3,
        cutoff,
        omega1: mhz(0.707),
        eta1: ETA1,
        rabi: mhz(1.28),
        omega_z: 0.0,
        spin_ion: 1,
    }
}

pub const N1_NBAR: [f64; 1] = [0.8];
pub const N2_NBAR: [f64; 2] = [0.3, 1.0];
pub const N3_NBAR: [f64; 3] = [0.6, 1.1, 0.9];

pub fn thermal(spec: &SystemSpec, nbar: &[f64]) -> InitialMixture {
    let space = spec.space(MemoryBudget::unlimited()).unwrap();
    thermal_initial_state(&space, nbar, Spin::Down, 0.0).unwrap()
}

fn mat_mul(a: &Mat<c64>, b: &Mat<c64>) -> Mat<c64> {
    let n = a.nrows();
    Mat::from_fn(n, b.ncols(), |i, j| {
        (0..a.ncols()).fold(c64::new(0.0, 0.0), |acc, k| acc + a[(i, k)] * b[(k, j)])
    })
}

/// `exp(-i H t)` by scaling and squaring of a Taylor series, with plain
/// triple-loop products.
pub fn propagator(h: &Mat<c64>, t: f64) -> Mat<c64> {
    let n = h.nrows();
    let norm = (0..n)
        .map(|i| (0..n).map(|j| h[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
        * t.abs();
    let mut s = 0;
    while norm / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let scale = t / 2f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| h[(i, j)] * c64::new(0.0, -scale));
    let mut term = Mat::from_fn(n, n, |i, j| {
        if i == j {
            c64::new(1.0, 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let mut sum = term.clone();
    for k in 1..=24 {
        term = mat_mul(&term, &a);
        let inv = 1.0 / k as f64;
        term = Mat::from_fn(n, n, |i, j| term[(i, j)] * inv);
        sum = Mat::from_fn(n, n, |i, j| sum[(i, j)] + term[(i, j)]);
    }
    for _ in 0..s {
        sum = mat_mul(&sum, &sum);
    }
    sum
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / x.len() as f64).sqrt()
}
