//! Core data types for a similarity assessment and their validation.
//!
//! A dataset holds `K` instances of `N` timesteps over `M` variables, stored
//! row-major as `[instance][timestep][variable]`. Missing cells are `NaN`.
//! Every type here is immutable once built, so the engine can share them
//! across workers without copying.

use std::collections::HashSet;
use std::num::NonZeroUsize;

use crate::error::ValidationError;

/// Absolute tolerance on the sum of a weight vector.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

/// Read-only `N × M` window onto one multivariate series.
#[derive(Debug, Clone, Copy)]
pub struct InstanceView<'a> {
    data: &'a [f64],
    timesteps: usize,
    variables: usize,
}

impl<'a> InstanceView<'a> {
    pub fn new(data: &'a [f64], timesteps: usize, variables: usize) -> Self {
        assert_eq!(data.len(), timesteps * variables, "view shape mismatch");
        Self {
            data,
            timesteps,
            variables,
        }
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    #[inline]
    pub fn get(&self, t: usize, var: usize) -> f64 {
        self.data[t * self.variables + var]
    }

    /// Samples of one variable in time order.
    pub fn column(&self, var: usize) -> impl Iterator<Item = f64> + '_ {
        (0..self.timesteps).map(move |t| self.get(t, var))
    }

    pub fn column_vec(&self, var: usize) -> Vec<f64> {
        self.column(var).collect()
    }

    pub fn missing_cells(&self) -> usize {
        self.data.iter().filter(|v| v.is_nan()).count()
    }

    pub fn is_complete(&self) -> bool {
        !self.data.iter().any(|v| v.is_nan())
    }

    pub fn as_slice(&self) -> &'a [f64] {
        self.data
    }
}

/// `K × N × M` collection of multivariate series with a `NaN` missing mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesDataset {
    values: Vec<f64>,
    timesteps: usize,
    variables: usize,
    instance_ids: Vec<String>,
    variable_names: Vec<String>,
}

impl TimeSeriesDataset {
    /// Builds a dataset from row-major `[instance][timestep][variable]` values.
    pub fn new(
        values: Vec<f64>,
        timesteps: usize,
        instance_ids: Vec<String>,
        variable_names: Vec<String>,
    ) -> Result<Self, ValidationError> {
        let instances = instance_ids.len();
        let variables = variable_names.len();
        if instances == 0 {
            return Err(ValidationError::InvalidDataset(
                "dataset has no instances".into(),
            ));
        }
        if timesteps < 2 {
            return Err(ValidationError::InvalidDataset(format!(
                "series length must be at least 2, got {timesteps}"
            )));
        }
        if variables == 0 {
            return Err(ValidationError::InvalidDataset(
                "dataset has no variables".into(),
            ));
        }
        if values.len() != instances * timesteps * variables {
            return Err(ValidationError::DimensionMismatch(format!(
                "{} values for {instances} × {timesteps} × {variables} dataset",
                values.len()
            )));
        }
        let mut seen = HashSet::with_capacity(instances);
        for id in &instance_ids {
            if !seen.insert(id.as_str()) {
                return Err(ValidationError::InvalidDataset(format!(
                    "duplicate instance id `{id}`"
                )));
            }
        }
        check_unique_names(&variable_names)?;
        Ok(Self {
            values,
            timesteps,
            variables,
            instance_ids,
            variable_names,
        })
    }

    pub fn instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn instance_ids(&self) -> &[String] {
        &self.instance_ids
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize, t: usize, var: usize) -> f64 {
        self.values[(k * self.timesteps + t) * self.variables + var]
    }

    pub fn is_missing(&self, k: usize, t: usize, var: usize) -> bool {
        self.value(k, t, var).is_nan()
    }

    pub fn instance(&self, k: usize) -> InstanceView<'_> {
        let stride = self.timesteps * self.variables;
        InstanceView::new(
            &self.values[k * stride..(k + 1) * stride],
            self.timesteps,
            self.variables,
        )
    }

    /// Same shape and ids with new values. Used to publish a rotated copy.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            values,
            timesteps: self.timesteps,
            variables: self.variables,
            instance_ids: self.instance_ids.clone(),
            variable_names: self.variable_names.clone(),
        }
    }
}

fn check_unique_names(names: &[String]) -> Result<(), ValidationError> {
    let mut seen = HashSet::with_capacity(names.len());
    for name in names {
        if !seen.insert(name.as_str()) {
            return Err(ValidationError::InvalidDataset(format!(
                "duplicate variable name `{name}`"
            )));
        }
    }
    Ok(())
}

/// Reference series every dataset instance is compared against.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySequence {
    values: Vec<f64>,
    timesteps: usize,
    variable_names: Vec<String>,
}

impl QuerySequence {
    /// Builds a query from row-major `[timestep][variable]` values; rejects missing cells.
    pub fn new(
        values: Vec<f64>,
        timesteps: usize,
        variable_names: Vec<String>,
    ) -> Result<Self, ValidationError> {
        let variables = variable_names.len();
        if variables == 0 || timesteps == 0 {
            return Err(ValidationError::DimensionMismatch(
                "query must have at least one timestep and one variable".into(),
            ));
        }
        if values.len() != timesteps * variables {
            return Err(ValidationError::DimensionMismatch(format!(
                "{} values for {timesteps} × {variables} query",
                values.len()
            )));
        }
        let missing = values.iter().filter(|v| v.is_nan()).count();
        if missing > 0 {
            return Err(ValidationError::QueryMissingCells(missing));
        }
        check_unique_names(&variable_names)?;
        Ok(Self {
            values,
            timesteps,
            variable_names,
        })
    }

    pub fn timesteps(&self) -> usize {
        self.timesteps
    }

    pub fn variables(&self) -> usize {
        self.variable_names.len()
    }

    pub fn variable_names(&self) -> &[String] {
        &self.variable_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn view(&self) -> InstanceView<'_> {
        InstanceView::new(&self.values, self.timesteps, self.variables())
    }
}

/// Per-variable importance weights. Each lies in `[0, 1]` and they sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self, ValidationError> {
        for (index, &value) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&value) {
                return Err(ValidationError::WeightRange { index, value });
            }
        }
        let sum: f64 = weights.iter().sum();
        if weights.is_empty() || (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(ValidationError::WeightSum { sum });
        }
        Ok(Self(weights))
    }

    /// Equal weights `1/M`.
    pub fn uniform(count: usize) -> Self {
        assert!(count > 0);
        Self(vec![1.0 / count as f64; count])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Strictly increasing time indices over which distances are evaluated.
///
/// The upper bound depends on the series length and is checked by
/// [`validate_inputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnalysisPeriod(Vec<usize>);

impl AnalysisPeriod {
    pub fn new(indices: Vec<usize>) -> Result<Self, ValidationError> {
        if indices.is_empty() {
            return Err(ValidationError::EmptyPeriod);
        }
        if let Some(w) = indices.windows(2).find(|w| w[1] <= w[0]) {
            return Err(ValidationError::PeriodNotIncreasing(w[1]));
        }
        Ok(Self(indices))
    }

    /// Every index `0..timesteps`.
    pub fn full(timesteps: usize) -> Self {
        Self((0..timesteps).collect())
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether the period covers the whole series (full-sequence matching).
    pub fn is_full(&self, timesteps: usize) -> bool {
        self.0.len() == timesteps
    }
}

/// Variables whose spectra drive alignment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotationVariableSet(Vec<usize>);

impl RotationVariableSet {
    pub fn new(indices: Vec<usize>) -> Result<Self, ValidationError> {
        if indices.is_empty() {
            return Err(ValidationError::EmptyRotationVariables);
        }
        let mut seen = HashSet::with_capacity(indices.len());
        for &i in &indices {
            if !seen.insert(i) {
                return Err(ValidationError::DuplicateRotationVariable(i));
            }
        }
        Ok(Self(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceKind {
    #[default]
    Euclidean,
    Dtw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FeatureTransform {
    #[default]
    Dft,
    Dwt,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Filtering {
    #[default]
    None,
    /// Drop similarities strictly below the threshold.
    Absolute(f64),
    /// Keep the `k` most similar instances.
    Relative(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WorkerCount {
    /// One worker per logical core.
    #[default]
    Auto,
    Fixed(NonZeroUsize),
}

impl WorkerCount {
    pub fn fixed(n: usize) -> Result<Self, ValidationError> {
        NonZeroUsize::new(n)
            .map(Self::Fixed)
            .ok_or(ValidationError::ZeroWorkers)
    }

    pub fn resolve(self) -> usize {
        match self {
            Self::Auto => std::thread::available_parallelism()
                .map(NonZeroUsize::get)
                .unwrap_or(1),
            Self::Fixed(n) => n.get(),
        }
    }
}

/// Everything that parameterizes one assessment run.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentConfig {
    pub measurement_vars: Vec<String>,
    pub weights: WeightVector,
    pub analysis_period: AnalysisPeriod,
    pub rotation_variables: RotationVariableSet,
    pub rotation_mode: bool,
    pub distance_kind: DistanceKind,
    pub feature_transform: FeatureTransform,
    pub filtering: Filtering,
    pub worker_count: WorkerCount,
}

impl AssessmentConfig {
    /// Config with rotation on, Euclidean distance, DFT features, no filtering.
    pub fn new(
        measurement_vars: Vec<String>,
        weights: WeightVector,
        analysis_period: AnalysisPeriod,
        rotation_variables: RotationVariableSet,
    ) -> Self {
        Self {
            measurement_vars,
            weights,
            analysis_period,
            rotation_variables,
            rotation_mode: true,
            distance_kind: DistanceKind::Euclidean,
            feature_transform: FeatureTransform::Dft,
            filtering: Filtering::None,
            worker_count: WorkerCount::Auto,
        }
    }
}

/// Inputs that passed [`validate_inputs`].
#[derive(Debug, Clone, Copy)]
pub struct ValidatedInputs<'a> {
    pub dataset: &'a TimeSeriesDataset,
    pub query: &'a QuerySequence,
    pub config: &'a AssessmentConfig,
    /// The analysis period spans the whole series.
    pub full_sequence: bool,
}

/// Checks every cross-type invariant. Returns the first violation found.
pub fn validate_inputs<'a>(
    dataset: &'a TimeSeriesDataset,
    query: &'a QuerySequence,
    config: &'a AssessmentConfig,
) -> Result<ValidatedInputs<'a>, ValidationError> {
    let timesteps = dataset.timesteps();
    let variables = dataset.variables();

    // Types enforce these at construction; re-checked because fields are public.
    let weights = WeightVector::new(config.weights.as_slice().to_vec())?;
    if weights.len() != variables {
        return Err(ValidationError::WeightCount {
            expected: variables,
            got: weights.len(),
        });
    }
    if query.timesteps() != timesteps {
        return Err(ValidationError::DimensionMismatch(format!(
            "query has {} timesteps, dataset has {timesteps}",
            query.timesteps()
        )));
    }
    if query.variable_names() != dataset.variable_names() {
        return Err(ValidationError::DimensionMismatch(format!(
            "query variables {:?} differ from dataset variables {:?}",
            query.variable_names(),
            dataset.variable_names()
        )));
    }
    if config.measurement_vars.as_slice() != dataset.variable_names() {
        return Err(ValidationError::DimensionMismatch(format!(
            "measurement variables {:?} differ from dataset variables {:?}",
            config.measurement_vars,
            dataset.variable_names()
        )));
    }
    let missing = query.view().missing_cells();
    if missing > 0 {
        return Err(ValidationError::QueryMissingCells(missing));
    }

    let period = AnalysisPeriod::new(config.analysis_period.indices().to_vec())?;
    if let Some(&index) = period.indices().iter().find(|&&i| i >= timesteps) {
        return Err(ValidationError::PeriodOutOfRange {
            index,
            len: timesteps,
        });
    }

    let rotation = RotationVariableSet::new(config.rotation_variables.indices().to_vec())?;
    if let Some(&index) = rotation.indices().iter().find(|&&i| i >= variables) {
        return Err(ValidationError::RotationVariableOutOfRange {
            index,
            count: variables,
        });
    }

    match config.filtering {
        Filtering::Absolute(t) if !(0.0..=1.0).contains(&t) => {
            return Err(ValidationError::InvalidFiltering(format!(
                "absolute threshold {t} lies outside [0, 1]"
            )));
        }
        Filtering::Relative(0) => {
            return Err(ValidationError::InvalidFiltering(
                "top-k must be positive".into(),
            ));
        }
        Filtering::Relative(k) if k > dataset.instances() => {
            return Err(ValidationError::InvalidFiltering(format!(
                "top-k {k} exceeds the {} dataset instances",
                dataset.instances()
            )));
        }
        _ => {}
    }

    Ok(ValidatedInputs {
        dataset,
        query,
        config,
        full_sequence: period.is_full(timesteps),
    })
}

/// Fully observed instances of a dataset.
#[derive(Debug, Clone)]
pub struct ValidInstances<'a> {
    pub dataset: &'a TimeSeriesDataset,
    pub indices: Vec<usize>,
}

impl ValidInstances<'_> {
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.dataset.instances()];
        for &k in &self.indices {
            mask[k] = true;
        }
        mask
    }
}

/// Indices of instances without a single missing cell.
pub fn get_valid_instances(dataset: &TimeSeriesDataset) -> ValidInstances<'_> {
    let indices = (0..dataset.instances())
        .filter(|&k| dataset.instance(k).is_complete())
        .collect();
    ValidInstances { dataset, indices }
}

/// `K × M` weighted min-max normalized distances. Rows of excluded
/// instances are invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    values: Vec<f64>,
    valid: Vec<bool>,
    variables: usize,
}

impl DissimilarityMatrix {
    pub fn new(values: Vec<f64>, valid: Vec<bool>, variables: usize) -> Self {
        assert_eq!(values.len(), valid.len() * variables);
        Self {
            values,
            valid,
            variables,
        }
    }

    pub fn instances(&self) -> usize {
        self.valid.len()
    }

    pub fn variables(&self) -> usize {
        self.variables
    }

    pub fn is_valid(&self, k: usize) -> bool {
        self.valid[k]
    }

    pub fn get(&self, k: usize, var: usize) -> Option<f64> {
        self.row(k).map(|r| r[var])
    }

    pub fn row(&self, k: usize) -> Option<&[f64]> {
        self.valid[k].then(|| &self.values[k * self.variables..(k + 1) * self.variables])
    }
}

/// Second-row entry of the similarity index matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimilarityEntry {
    Value(f64),
    /// Removed by absolute or relative filtering.
    Filtered,
    /// Instance had missing data and was never assessed.
    Missing,
}

impl SimilarityEntry {
    pub fn value(self) -> Option<f64> {
        match self {
            Self::Value(v) => Some(v),
            _ => None,
        }
    }
}

/// Rotation array and similarity array, one column per input instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityIndexMatrix {
    pub rotation_array: Vec<Option<usize>>,
    pub similarity_array: Vec<SimilarityEntry>,
    pub instance_ids: Vec<String>,
}

impl SimilarityIndexMatrix {
    pub fn len(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instance_ids.is_empty()
    }

    /// Checks rotation bounds against the series length and similarity bounds.
    pub fn satisfies_invariants(&self, timesteps: usize) -> bool {
        self.rotation_array.len() == self.len()
            && self.similarity_array.len() == self.len()
            && self.rotation_array.iter().flatten().all(|&r| r < timesteps)
            && self
                .similarity_array
                .iter()
                .filter_map(|s| s.value())
                .all(|s| (0.0..=1.0).contains(&s))
    }
}
