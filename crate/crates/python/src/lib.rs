//! Python bindings: datasets, queries, configs, the pipeline and the
//! spectral/distance primitives.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use mtasa_core::alignment;
use mtasa_core::dissimilarity;
use mtasa_core::engine;
use mtasa_core::io::{self as mio, IoError};
use mtasa_core::model::{
    self, AnalysisPeriod, AssessmentConfig, DistanceKind, FeatureTransform, Filtering,
    RotationVariableSet, SimilarityEntry, WeightVector, WorkerCount,
};
use mtasa_core::spectral::{self, Complex64, RealSignal, Spectrum};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_error(e: IoError) -> PyErr {
    match e {
        IoError::Io { .. } | IoError::Csv { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Flattens `values[instance][timestep][variable]` after checking it is rectangular.
fn flatten_dataset(values: &[Vec<Vec<f64>>]) -> Result<(Vec<f64>, usize, usize), String> {
    let timesteps = values.first().map_or(0, Vec::len);
    let variables = values.first().and_then(|i| i.first()).map_or(0, Vec::len);
    let mut flat = Vec::with_capacity(values.len() * timesteps * variables);
    for (k, instance) in values.iter().enumerate() {
        if instance.len() != timesteps {
            return Err(format!("instance {k} has {} timesteps, expected {timesteps}", instance.len()));
        }
        for (t, row) in instance.iter().enumerate() {
            if row.len() != variables {
                return Err(format!("instance {k}, timestep {t} has {} values, expected {variables}", row.len()));
            }
            flat.extend_from_slice(row);
        }
    }
    Ok((flat, timesteps, variables))
}

fn flatten_matrix(values: &[Vec<f64>]) -> Result<(Vec<f64>, usize), String> {
    let variables = values.first().map_or(0, Vec::len);
    if let Some(t) = values.iter().position(|row| row.len() != variables) {
        return Err(format!("timestep {t} has {} values, expected {variables}", values[t].len()));
    }
    Ok((values.concat(), values.len()))
}

/// `K × N × M` dataset. Missing cells are `nan`.
#[pyclass(name = "Dataset", module = "mtasa", frozen)]
struct PyDataset {
    inner: model::TimeSeriesDataset,
}

#[pymethods]
impl PyDataset {
    #[new]
    fn new(values: Vec<Vec<Vec<f64>>>, instance_ids: Vec<String>, variable_names: Vec<String>) -> PyResult<Self> {
        let (flat, timesteps, variables) = flatten_dataset(&values).map_err(value_error)?;
        if variables != variable_names.len() && !values.is_empty() {
            return Err(value_error(format!(
                "{variables} values per timestep but {} variable names",
                variable_names.len()
            )));
        }
        model::TimeSeriesDataset::new(flat, timesteps, instance_ids, variable_names)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[staticmethod]
    fn from_csv(path: &str, variable_names: Vec<String>) -> PyResult<Self> {
        mio::load_dataset(path, &variable_names)
            .map(|inner| Self { inner })
            .map_err(io_error)
    }

    #[getter]
    fn shape(&self) -> (usize, usize, usize) {
        (self.inner.instances(), self.inner.timesteps(), self.inner.variables())
    }

    #[getter]
    fn instance_ids(&self) -> Vec<String> {
        self.inner.instance_ids().to_vec()
    }

    #[getter]
    fn variable_names(&self) -> Vec<String> {
        self.inner.variable_names().to_vec()
    }

    /// Indices of fully observed instances.
    fn valid_instances(&self) -> Vec<usize> {
        model::get_valid_instances(&self.inner).indices
    }

    fn __repr__(&self) -> String {
        let (k, n, m) = self.shape();
        format!("Dataset(K={k}, N={n}, M={m})")
    }
}

/// `N × M` query sequence without missing cells.
#[pyclass(name = "Query", module = "mtasa", frozen)]
struct PyQuery {
    inner: model::QuerySequence,
}

#[pymethods]
impl PyQuery {
    #[new]
    fn new(values: Vec<Vec<f64>>, variable_names: Vec<String>) -> PyResult<Self> {
        let (flat, timesteps) = flatten_matrix(&values).map_err(value_error)?;
        model::QuerySequence::new(flat, timesteps, variable_names)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[staticmethod]
    fn from_csv(path: &str, variable_names: Vec<String>) -> PyResult<Self> {
        mio::load_query(path, &variable_names)
            .map(|inner| Self { inner })
            .map_err(io_error)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.timesteps(), self.inner.variables())
    }
}

/// Assessment parameters. `analysis_period=None` means the whole series and
/// `rotation_variables=None` means every measurement variable.
#[pyclass(name = "Config", module = "mtasa", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyConfig {
    measurement_vars: Vec<String>,
    weights: WeightVector,
    analysis_period: Option<AnalysisPeriod>,
    rotation_variables: RotationVariableSet,
    rotation_mode: bool,
    distance_kind: DistanceKind,
    feature_transform: FeatureTransform,
    filtering: Filtering,
    worker_count: WorkerCount,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (
        measurement_vars,
        weights,
        analysis_period=None,
        rotation_variables=None,
        rotation_mode=true,
        distance="euclidean",
        transform="dft",
        absolute_threshold=None,
        top_k=None,
        workers=None,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        measurement_vars: Vec<String>,
        weights: Vec<f64>,
        analysis_period: Option<Vec<usize>>,
        rotation_variables: Option<Vec<String>>,
        rotation_mode: bool,
        distance: &str,
        transform: &str,
        absolute_threshold: Option<f64>,
        top_k: Option<usize>,
        workers: Option<usize>,
    ) -> PyResult<Self> {
        let weights = WeightVector::new(weights).map_err(value_error)?;
        let analysis_period = analysis_period
            .map(AnalysisPeriod::new)
            .transpose()
            .map_err(value_error)?;
        let rotation_names = rotation_variables.unwrap_or_else(|| measurement_vars.clone());
        let rotation = rotation_names
            .iter()
            .map(|name| {
                measurement_vars
                    .iter()
                    .position(|v| v == name)
                    .ok_or_else(|| value_error(format!("unknown rotation variable `{name}`")))
            })
            .collect::<PyResult<Vec<_>>>()?;
        let rotation_variables = RotationVariableSet::new(rotation).map_err(value_error)?;
        let distance_kind = match distance {
            "euclidean" => DistanceKind::Euclidean,
            "dtw" => DistanceKind::Dtw,
            other => return Err(value_error(format!("unknown distance `{other}`"))),
        };
        let feature_transform = match transform {
            "dft" => FeatureTransform::Dft,
            "dwt" => FeatureTransform::Dwt,
            other => return Err(value_error(format!("unknown transform `{other}`"))),
        };
        let filtering = match (absolute_threshold, top_k) {
            (Some(_), Some(_)) => {
                return Err(value_error("absolute_threshold and top_k are mutually exclusive"))
            }
            (Some(t), None) => Filtering::Absolute(t),
            (None, Some(k)) => Filtering::Relative(k),
            (None, None) => Filtering::None,
        };
        let worker_count = match workers {
            Some(n) => WorkerCount::fixed(n).map_err(value_error)?,
            None => WorkerCount::Auto,
        };
        Ok(Self {
            measurement_vars,
            weights,
            analysis_period,
            rotation_variables,
            rotation_mode,
            distance_kind,
            feature_transform,
            filtering,
            worker_count,
        })
    }
}

impl PyConfig {
    fn build(&self, timesteps: usize) -> AssessmentConfig {
        let period = self
            .analysis_period
            .clone()
            .unwrap_or_else(|| AnalysisPeriod::full(timesteps));
        let mut config = AssessmentConfig::new(
            self.measurement_vars.clone(),
            self.weights.clone(),
            period,
            self.rotation_variables.clone(),
        );
        config.rotation_mode = self.rotation_mode;
        config.distance_kind = self.distance_kind;
        config.feature_transform = self.feature_transform;
        config.filtering = self.filtering;
        config.worker_count = self.worker_count;
        config
    }
}

/// Output of [`assess`]: the similarity index matrix plus diagnostics.
#[pyclass(name = "Assessment", module = "mtasa", frozen)]
struct PyAssessment {
    inner: engine::Assessment,
}

#[pymethods]
impl PyAssessment {
    #[getter]
    fn instance_ids(&self) -> Vec<String> {
        self.inner.index.instance_ids.clone()
    }

    /// Rotation per instance; `None` for instances with missing data.
    #[getter]
    fn rotation_array(&self) -> Vec<Option<usize>> {
        self.inner.index.rotation_array.clone()
    }

    /// Similarity per instance; `None` when filtered or missing.
    #[getter]
    fn similarity_array(&self) -> Vec<Option<f64>> {
        self.inner.index.similarity_array.iter().map(|s| s.value()).collect()
    }

    #[getter]
    fn raw_distance(&self) -> Vec<Option<f64>> {
        self.inner.raw_combined.clone()
    }

    /// `ok`, `filtered` or `missing_data` per instance.
    #[getter]
    fn status(&self) -> Vec<&'static str> {
        self.inner
            .index
            .similarity_array
            .iter()
            .map(|s| match s {
                SimilarityEntry::Value(_) => "ok",
                SimilarityEntry::Filtered => "filtered",
                SimilarityEntry::Missing => "missing_data",
            })
            .collect()
    }

    /// Dissimilarity rows; `None` for excluded instances.
    #[getter]
    fn dissimilarity(&self) -> Vec<Option<Vec<f64>>> {
        let d = &self.inner.dissimilarity;
        (0..d.instances()).map(|k| d.row(k).map(<[f64]>::to_vec)).collect()
    }

    #[getter]
    fn valid_count(&self) -> usize {
        self.inner.valid_count
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner.warnings.clone()
    }

    fn write_csv(&self, path: &str) -> PyResult<()> {
        mio::write_results(&self.inner.index, &self.inner.raw_combined, path).map_err(io_error)
    }

    fn __len__(&self) -> usize {
        self.inner.index.len()
    }
}

/// Runs the full pipeline. Releases the GIL while computing.
#[pyfunction]
fn assess(py: Python<'_>, dataset: &PyDataset, query: &PyQuery, config: &PyConfig) -> PyResult<PyAssessment> {
    let cfg = config.build(dataset.inner.timesteps());
    let (d, q) = (&dataset.inner, &query.inner);
    py.detach(|| engine::run_pipeline(d, q, &cfg))
        .map(|inner| PyAssessment { inner })
        .map_err(value_error)
}

#[pyfunction]
fn dft(signal: Vec<f64>) -> Vec<Complex64> {
    spectral::dft_samples(&signal).coefficients().to_vec()
}

/// Real part of the inverse transform.
#[pyfunction]
fn idft(spectrum: Vec<Complex64>) -> Vec<f64> {
    spectral::idft(&Spectrum::new(spectrum)).into_samples()
}

#[pyfunction]
fn circular_cross_correlation(h: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    spectral::circular_cross_correlation(&h.into(), &x.into())
        .map(RealSignal::into_samples)
        .map_err(value_error)
}

#[pyfunction]
fn circular_convolution(h: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
    spectral::circular_convolution(&h.into(), &x.into())
        .map(RealSignal::into_samples)
        .map_err(value_error)
}

#[pyfunction]
fn haar_dwt(signal: Vec<f64>) -> Vec<f64> {
    spectral::dwt(&signal.into()).into_samples()
}

#[pyfunction]
fn euclidean_distance(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    dissimilarity::euclidean_distance(&a.into(), &b.into()).map_err(value_error)
}

#[pyfunction]
fn dtw_distance(a: Vec<f64>, b: Vec<f64>) -> f64 {
    dissimilarity::dtw_distance(&a.into(), &b.into())
}

/// Rotation aligning `instance` to `query` and the branch that produced it
/// (`"dft_shifting"` or `"cross_correlation"`).
#[pyfunction]
#[pyo3(signature = (query, instance, fast_path=true))]
fn rotation_coefficient(query: Vec<f64>, instance: Vec<f64>, fast_path: bool) -> PyResult<(usize, &'static str)> {
    if query.len() < 2 {
        return Err(value_error("signals need at least two samples"));
    }
    let x = spectral::dft_samples(&query);
    let y = spectral::dft_samples(&instance);
    if fast_path {
        if let alignment::ShiftEstimate::Aligned(c) =
            alignment::rotation_coefficient_shift_theorem(&x, &y).map_err(value_error)?
        {
            return Ok((c.value, "dft_shifting"));
        }
    }
    let c = alignment::rotation_coefficient_xcorr(&x, &y).map_err(value_error)?;
    Ok((c.value, "cross_correlation"))
}

#[pymodule]
fn mtasa(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataset>()?;
    m.add_class::<PyQuery>()?;
    m.add_class::<PyConfig>()?;
    m.add_class::<PyAssessment>()?;
    m.add_function(wrap_pyfunction!(assess, m)?)?;
    m.add_function(wrap_pyfunction!(dft, m)?)?;
    m.add_function(wrap_pyfunction!(idft, m)?)?;
    m.add_function(wrap_pyfunction!(circular_cross_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(circular_convolution, m)?)?;
    m.add_function(wrap_pyfunction!(haar_dwt, m)?)?;
    m.add_function(wrap_pyfunction!(euclidean_distance, m)?)?;
    m.add_function(wrap_pyfunction!(dtw_distance, m)?)?;
    m.add_function(wrap_pyfunction!(rotation_coefficient, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_checks_shape() {
        let ok = vec![vec![vec![1.0, 2.0], vec![3.0, 4.0]]];
        assert_eq!(flatten_dataset(&ok).unwrap(), (vec![1.0, 2.0, 3.0, 4.0], 2, 2));
        let ragged = vec![vec![vec![1.0, 2.0], vec![3.0]]];
        assert!(flatten_dataset(&ragged).is_err());
        let uneven = vec![vec![vec![1.0]], vec![vec![1.0], vec![2.0]]];
        assert!(flatten_dataset(&uneven).is_err());
        assert_eq!(flatten_matrix(&[vec![1.0], vec![2.0]]).unwrap(), (vec![1.0, 2.0], 2));
    }
}
