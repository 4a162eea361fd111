//! Shared generators and independent reference implementations.
#![allow(dead_code)]

use std::collections::HashMap;
use std::f64::consts::PI;

use mtasa_core::model::{
    AnalysisPeriod, AssessmentConfig, QuerySequence, RotationVariableSet, TimeSeriesDataset,
    WeightVector,
};
use mtasa_core::spectral::Complex64;
use rand::Rng;

pub fn names(prefix: &str, count: usize) -> Vec<String> {
    (0..count).map(|i| format!("{prefix}{i}")).collect()
}

pub fn uniform_values<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Row-major `N × M` series shifted right by `d`: `out[t] = src[(t − d) mod N]`.
pub fn shift_right(src: &[f64], timesteps: usize, variables: usize, d: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for t in 0..timesteps {
        let from = (t + timesteps - d % timesteps) % timesteps;
        out[t * variables..(t + 1) * variables]
            .copy_from_slice(&src[from * variables..(from + 1) * variables]);
    }
    out
}

pub fn column(values: &[f64], variables: usize, var: usize) -> Vec<f64> {
    values.iter().skip(var).step_by(variables).copied().collect()
}

pub fn dataset(instances: Vec<Vec<f64>>, timesteps: usize, variables: usize) -> TimeSeriesDataset {
    let ids = names("inst", instances.len());
    TimeSeriesDataset::new(instances.concat(), timesteps, ids, names("v", variables)).unwrap()
}

pub fn query(values: Vec<f64>, timesteps: usize, variables: usize) -> QuerySequence {
    QuerySequence::new(values, timesteps, names("v", variables)).unwrap()
}

pub fn full_config(timesteps: usize, weights: Vec<f64>, rotation: Vec<usize>) -> AssessmentConfig {
    let m = weights.len();
    AssessmentConfig::new(
        names("v", m),
        WeightVector::new(weights).unwrap(),
        AnalysisPeriod::full(timesteps),
        RotationVariableSet::new(rotation).unwrap(),
    )
}

pub fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|m| {
            x.iter()
                .enumerate()
                .map(|(k, &v)| v * Complex64::from_polar(1.0, -2.0 * PI * (m * k % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

/// `y[n] = Σ_k x[k]·h[(n − k) mod N]`.
pub fn direct_convolution(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|i| (0..n).map(|k| x[k] * h[(i + n - k) % n]).sum())
        .collect()
}

/// `r[c] = Σ_k x[k]·h[(k + c) mod N]`.
pub fn direct_cross_correlation(x: &[f64], h: &[f64]) -> Vec<f64> {
    let n = x.len();
    (0..n)
        .map(|c| (0..n).map(|k| x[k] * h[(k + c) % n]).sum())
        .collect()
}

/// `z[c] = Σ_n q[n]·t[(n + c) mod N]`, evaluated for every `c`.
pub fn exhaustive_z(q: &[f64], t: &[f64]) -> Vec<f64> {
    direct_cross_correlation(q, t)
}

/// Memoized top-down DTW, written straight from the recurrence.
pub fn dtw_memo(a: &[f64], b: &[f64]) -> f64 {
    fn go(a: &[f64], b: &[f64], i: usize, j: usize, memo: &mut HashMap<(usize, usize), f64>) -> f64 {
        if i == a.len() && j == b.len() {
            return 0.0;
        }
        if i == a.len() || j == b.len() {
            return f64::INFINITY;
        }
        if let Some(&v) = memo.get(&(i, j)) {
            return v;
        }
        let down = go(a, b, i + 1, j, memo);
        let right = go(a, b, i, j + 1, memo);
        let diag = go(a, b, i + 1, j + 1, memo);
        let v = (a[i] - b[j]).abs() + down.min(right).min(diag);
        memo.insert((i, j), v);
        v
    }
    go(a, b, 0, 0, &mut HashMap::new())
}
