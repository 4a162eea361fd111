//! Per-variable distances to the query, min-max normalized and weighted.

use crate::model::{
    AnalysisPeriod, AssessmentConfig, DissimilarityMatrix, DistanceKind, InstanceView,
    QuerySequence,
};
use crate::spectral::{RealSignal, SpectralError};

/// `sqrt(Σ (q[i] − t[i])²)`.
pub fn euclidean_distance(query: &RealSignal, instance: &RealSignal) -> Result<f64, SpectralError> {
    if query.len() != instance.len() {
        return Err(SpectralError::LengthMismatch {
            left: query.len(),
            right: instance.len(),
        });
    }
    Ok(euclidean(query.samples(), instance.samples()))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Unconstrained DTW with absolute-difference cost.
///
/// Evaluates `DTW(i, j) = |a[i] − b[j]| + min(DTW(i, j+1), DTW(i+1, j), DTW(i+1, j+1))`
/// from the sequence ends backwards, keeping two rows. Accumulation order
/// matches the suffix recursion term for term. Empty input yields `+∞`.
pub fn dtw_distance(query: &RealSignal, instance: &RealSignal) -> f64 {
    dtw(query.samples(), instance.samples())
}

pub(crate) fn dtw(a: &[f64], b: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return f64::INFINITY;
    }
    // next[j] holds DTW(i + 1, j); index m is the past-the-end column.
    let mut next = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    next[m] = 0.0;
    for i in (0..n).rev() {
        cur[m] = f64::INFINITY;
        for j in (0..m).rev() {
            let best = cur[j + 1].min(next[j]).min(next[j + 1]);
            cur[j] = (a[i] - b[j]).abs() + best;
        }
        std::mem::swap(&mut cur, &mut next);
        next[m] = f64::INFINITY;
    }
    next[0]
}

fn column_over_period(series: InstanceView<'_>, var: usize, period: &AnalysisPeriod, out: &mut Vec<f64>) {
    out.clear();
    out.extend(period.indices().iter().map(|&t| series.get(t, var)));
}

/// Raw distances of one instance to the query, one per variable.
pub fn instance_distances(
    instance: InstanceView<'_>,
    query: &QuerySequence,
    period: &AnalysisPeriod,
    kind: DistanceKind,
    out: &mut [f64],
) {
    let q = query.view();
    let mut qcol = Vec::with_capacity(period.len());
    let mut tcol = Vec::with_capacity(period.len());
    for (var, slot) in out.iter_mut().enumerate() {
        column_over_period(q, var, period, &mut qcol);
        column_over_period(instance, var, period, &mut tcol);
        *slot = match kind {
            DistanceKind::Euclidean => euclidean(&qcol, &tcol),
            DistanceKind::Dtw => dtw(&qcol, &tcol),
        };
    }
}

/// Min-max normalizes each column over valid rows and scales by its weight.
///
/// `raw` is `K × M` row-major; invalid rows are ignored and stay invalid.
/// A column whose valid distances are all equal normalizes to zero.
pub fn normalize_and_weight(raw: &[f64], valid: &[bool], weights: &[f64]) -> DissimilarityMatrix {
    let m = weights.len();
    let k = valid.len();
    assert_eq!(raw.len(), k * m);
    let mut values = vec![f64::NAN; k * m];
    for (var, &w) in weights.iter().enumerate() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for row in (0..k).filter(|&r| valid[r]) {
            let d = raw[row * m + var];
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let span = hi - lo;
        for row in (0..k).filter(|&r| valid[r]) {
            let normalized = if span > 0.0 {
                (raw[row * m + var] - lo) / span
            } else {
                0.0
            };
            values[row * m + var] = normalized * w;
        }
    }
    DissimilarityMatrix::new(values, valid.to_vec(), m)
}

/// Distances of every valid instance of the (already rotated) dataset.
pub fn build_dissimilarity_matrix(
    rotated: &crate::model::TimeSeriesDataset,
    valid: &[bool],
    query: &QuerySequence,
    config: &AssessmentConfig,
) -> DissimilarityMatrix {
    let m = rotated.variables();
    let mut raw = vec![f64::NAN; rotated.instances() * m];
    for (k, row) in raw.chunks_mut(m).enumerate() {
        if valid[k] {
            instance_distances(
                rotated.instance(k),
                query,
                &config.analysis_period,
                config.distance_kind,
                row,
            );
        }
    }
    normalize_and_weight(&raw, valid, config.weights.as_slice())
}
