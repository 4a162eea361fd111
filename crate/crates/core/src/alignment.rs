//! Rotation coefficients between the query and each instance, and the
//! rotated dataset.
//!
//! A coefficient `c` aligns an instance `t` with the query `q` when
//! `t[(n + c) mod N] ≈ q[n]`, i.e. it maximizes
//! `z[c] = Σ_n q[n]·t[(n + c) mod N]` over the summed rotation variables.
//! An instance built as the query shifted right by `d`
//! (`t[n] = q[(n − d) mod N]`) therefore has coefficient `d`.

use std::f64::consts::PI;

use rustfft::num_complex::Complex64;

use crate::model::{
    AnalysisPeriod, AssessmentConfig, FeatureTransform, InstanceView, QuerySequence,
    RotationVariableSet, TimeSeriesDataset,
};
use crate::spectral::{self, dft_samples, dominant_coefficient, idft, RealSignal, SpectralError, Spectrum};

/// Which branch produced a coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlignmentPath {
    CrossCorrelation,
    DftShifting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RotationCoefficient {
    pub value: usize,
    pub path: AlignmentPath,
}

/// One unit of rotation work: an instance and the shared query.
#[derive(Debug, Clone, Copy)]
pub struct RotationTask<'a> {
    pub instance_index: usize,
    pub instance: InstanceView<'a>,
    pub query: &'a QuerySequence,
}

/// Outcome of the phase-difference estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftEstimate {
    Aligned(RotationCoefficient),
    /// Dominant bins differ (or disambiguation is too costly); use cross-correlation.
    Fallback,
}

/// Feature spectrum of the rotation variables of one series.
///
/// With a `period`, samples outside it are zeroed but kept at their
/// original positions so the signal stays length `N`. Per-variable spectra
/// are summed. DWT features are the DFT of the interleaved Haar
/// coefficients, so both transforms feed the same correlation machinery.
pub fn aggregate_rotation_spectrum(
    series: InstanceView<'_>,
    variables: &RotationVariableSet,
    period: Option<&AnalysisPeriod>,
    transform: FeatureTransform,
) -> Spectrum {
    let n = series.timesteps();
    let mut total = Spectrum::zeros(n);
    let mut signal = vec![0.0; n];
    for &var in variables.indices() {
        match period {
            Some(p) => {
                signal.iter_mut().for_each(|s| *s = 0.0);
                for &t in p.indices() {
                    signal[t] = series.get(t, var);
                }
            }
            None => {
                for (t, s) in signal.iter_mut().enumerate() {
                    *s = series.get(t, var);
                }
            }
        }
        let spectrum = match transform {
            FeatureTransform::Dft => dft_samples(&signal),
            FeatureTransform::Dwt => {
                let packed = spectral::dwt(&RealSignal::from(signal.as_slice()));
                dft_samples(&interleave_haar(packed.samples()))
            }
        };
        total += &spectrum;
    }
    total
}

/// `[a0, d0, a1, d1, ...]` from packed `[a.., d..]`. A shift by `2s`
/// timesteps is then a circular shift by `2s` of the interleaved sequence,
/// so correlation lags stay in timesteps.
fn interleave_haar(packed: &[f64]) -> Vec<f64> {
    let n = packed.len();
    let approx = n.div_ceil(2);
    let mut out = Vec::with_capacity(n);
    for i in 0..approx {
        out.push(packed[i]);
        if approx + i < n {
            out.push(packed[approx + i]);
        }
    }
    out
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `(N − argmax Re(idft(conj(Y)·X))) mod N`, with `X` the query features and
/// `Y` the instance features.
pub fn rotation_coefficient_xcorr(
    query: &Spectrum,
    instance: &Spectrum,
) -> Result<RotationCoefficient, SpectralError> {
    let n = query.len();
    let correlation = idft(&instance.conj_mul(query)?);
    let lag = argmax(correlation.samples());
    Ok(RotationCoefficient {
        value: (n - lag) % n,
        path: AlignmentPath::CrossCorrelation,
    })
}

/// `z[c]` evaluated from the spectra in `O(N)`.
fn correlation_at(query: &Spectrum, instance: &Spectrum, coefficient: usize) -> f64 {
    let n = query.len();
    let lag = (n - coefficient % n) % n;
    let mut acc = 0.0;
    for (m, (x, y)) in query
        .coefficients()
        .iter()
        .zip(instance.coefficients())
        .enumerate()
    {
        let ang = 2.0 * PI * ((m * lag) % n) as f64 / n as f64;
        acc += (y.conj() * x * Complex64::new(ang.cos(), ang.sin())).re;
    }
    acc / n as f64
}

/// Shift estimate from the phase difference of the dominant coefficient.
///
/// When both spectra peak at the same bin `b`, a shift `d` shows up as the
/// phase difference `θ = 2πbd/N (mod 2π)`, giving `d = round(θN/(2πb)) mod N`.
/// For `b > 1` the phase only pins `d` modulo `N/b`, so each of the `b`
/// branches `θ + 2πj` is scored by its correlation and the best one wins
/// (first branch on ties). Bins above `⌈log2 N⌉` fall back, since scoring
/// that many branches costs more than the full correlation.
pub fn rotation_coefficient_shift_theorem(
    query: &Spectrum,
    instance: &Spectrum,
) -> Result<ShiftEstimate, SpectralError> {
    if query.len() != instance.len() {
        return Err(SpectralError::LengthMismatch {
            left: query.len(),
            right: instance.len(),
        });
    }
    let n = query.len();
    let dq = dominant_coefficient(query);
    let di = dominant_coefficient(instance);
    if dq.index != di.index {
        return Ok(ShiftEstimate::Fallback);
    }
    let bin = dq.index;
    let max_branches = (usize::BITS - (n - 1).leading_zeros()).max(1) as usize;
    if bin > max_branches {
        return Ok(ShiftEstimate::Fallback);
    }

    let theta = dq.phase - di.phase;
    let branch = |j: usize| -> usize {
        let shift = (theta + 2.0 * PI * j as f64) * n as f64 / (2.0 * PI * bin as f64);
        (shift.round() as i64).rem_euclid(n as i64) as usize
    };

    let mut best = branch(0);
    if bin > 1 {
        let mut best_score = correlation_at(query, instance, best);
        for j in 1..bin {
            let candidate = branch(j);
            let score = correlation_at(query, instance, candidate);
            if score > best_score {
                best = candidate;
                best_score = score;
            }
        }
    }
    Ok(ShiftEstimate::Aligned(RotationCoefficient {
        value: best,
        path: AlignmentPath::DftShifting,
    }))
}

/// Rotation coefficient given precomputed query features.
pub fn coefficient_from_query_spectrum(
    query_features: &Spectrum,
    instance: InstanceView<'_>,
    config: &AssessmentConfig,
) -> RotationCoefficient {
    let n = instance.timesteps();
    let instance_features = aggregate_rotation_spectrum(
        instance,
        &config.rotation_variables,
        None,
        config.feature_transform,
    );
    let fast_path = config.analysis_period.is_full(n)
        && config.feature_transform == FeatureTransform::Dft;
    if fast_path {
        if let Ok(ShiftEstimate::Aligned(c)) =
            rotation_coefficient_shift_theorem(query_features, &instance_features)
        {
            return c;
        }
    }
    rotation_coefficient_xcorr(query_features, &instance_features)
        .expect("query and instance share the series length")
}

/// Query features for a config: period-restricted in subsequence mode.
pub fn query_spectrum(query: &QuerySequence, config: &AssessmentConfig) -> Spectrum {
    let period = (!config.analysis_period.is_full(query.timesteps()))
        .then_some(&config.analysis_period);
    aggregate_rotation_spectrum(
        query.view(),
        &config.rotation_variables,
        period,
        config.feature_transform,
    )
}

/// Full rotation-coefficient computation for one task.
///
/// Subsequence mode (`|P| < N`) always cross-correlates. Full-sequence DFT
/// mode tries the phase-difference estimate first.
pub fn compute_rotation_coef(task: &RotationTask<'_>, config: &AssessmentConfig) -> RotationCoefficient {
    let features = query_spectrum(task.query, config);
    coefficient_from_query_spectrum(&features, task.instance, config)
}

/// Writes `dst[t, v] = src[(t + rotation) mod N, v]`.
pub fn rotate_instance_into(src: InstanceView<'_>, rotation: usize, dst: &mut [f64]) {
    let n = src.timesteps();
    let m = src.variables();
    let data = src.as_slice();
    for t in 0..n {
        let from = (t + rotation) % n;
        dst[t * m..(t + 1) * m].copy_from_slice(&data[from * m..(from + 1) * m]);
    }
}

/// Circularly shifts every variable of instance `k` by `rotation_array[k]`.
/// Instances without a coefficient are copied unchanged.
pub fn rotate_dataset(dataset: &TimeSeriesDataset, rotation_array: &[Option<usize>]) -> TimeSeriesDataset {
    assert_eq!(rotation_array.len(), dataset.instances());
    let stride = dataset.timesteps() * dataset.variables();
    let mut values = dataset.values().to_vec();
    for (k, rotation) in rotation_array.iter().enumerate() {
        if let Some(r) = rotation {
            rotate_instance_into(dataset.instance(k), *r, &mut values[k * stride..(k + 1) * stride]);
        }
    }
    dataset.with_values(values)
}
