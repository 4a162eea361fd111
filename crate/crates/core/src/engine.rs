//! Deterministic parallel execution of an assessment.
//!
//! Each stage maps over the valid instance indices, split into contiguous
//! chunks, one per worker. Workers only read shared immutable inputs and
//! return their chunk's results; the collector stitches chunks back in
//! index order. Stages are separated by a join, so the rotated dataset is
//! complete before any distance is computed. Nothing depends on the number
//! of workers or on completion order, so outputs are bit-identical for any
//! worker count.

use std::borrow::Cow;
use std::ops::Range;
use std::thread;

use crate::alignment::{self, AlignmentPath};
use crate::dissimilarity;
use crate::error::ValidationError;
use crate::model::{
    get_valid_instances, validate_inputs, AssessmentConfig, DissimilarityMatrix, QuerySequence,
    SimilarityEntry, SimilarityIndexMatrix, TimeSeriesDataset,
};
use crate::simindex;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Rotation,
    RotateApply,
    Dissimilarity,
}

/// Work split for one stage: `chunks` index into `tasks`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PipelineStagePlan {
    pub stage: Stage,
    pub tasks: Vec<usize>,
    pub chunks: Vec<Range<usize>>,
    pub worker_count: usize,
}

impl PipelineStagePlan {
    pub fn chunk_sizes(&self) -> Vec<usize> {
        self.chunks.iter().map(|c| c.len()).collect()
    }
}

/// Splits `tasks` into at most `worker_count` contiguous near-equal chunks.
/// The first `len % workers` chunks get one extra task; empty chunks are
/// not emitted.
pub fn partition_tasks(stage: Stage, tasks: Vec<usize>, worker_count: usize) -> PipelineStagePlan {
    assert!(worker_count >= 1, "worker_count must be positive");
    let len = tasks.len();
    let base = len / worker_count;
    let extra = len % worker_count;
    let mut chunks = Vec::with_capacity(worker_count.min(len));
    let mut start = 0;
    for w in 0..worker_count {
        let size = base + usize::from(w < extra);
        if size == 0 {
            break;
        }
        chunks.push(start..start + size);
        start += size;
    }
    PipelineStagePlan {
        stage,
        tasks,
        chunks,
        worker_count,
    }
}

/// Runs `work` on each chunk of task indices and concatenates results in
/// task order.
fn map_chunks<T, F>(plan: &PipelineStagePlan, work: F) -> Vec<T>
where
    T: Send,
    F: Fn(&[usize]) -> Vec<T> + Sync,
{
    if plan.chunks.len() <= 1 {
        return work(&plan.tasks);
    }
    let work = &work;
    thread::scope(|scope| {
        let handles: Vec<_> = plan
            .chunks
            .iter()
            .map(|range| {
                let tasks = &plan.tasks[range.clone()];
                scope.spawn(move || work(tasks))
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("pipeline worker panicked"))
            .collect()
    })
}

/// How many coefficients came from each alignment branch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PathCounts {
    pub dft_shifting: usize,
    pub cross_correlation: usize,
}

/// Everything a pipeline run produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub index: SimilarityIndexMatrix,
    /// Combined weighted distance per instance before complementing.
    pub raw_combined: Vec<Option<f64>>,
    pub dissimilarity: DissimilarityMatrix,
    pub valid_count: usize,
    pub paths: PathCounts,
    pub warnings: Vec<String>,
}

/// Validate, filter, align, rotate, measure, combine and filter.
pub fn run_pipeline(
    dataset: &TimeSeriesDataset,
    query: &QuerySequence,
    config: &AssessmentConfig,
) -> Result<Assessment, ValidationError> {
    let inputs = validate_inputs(dataset, query, config)?;
    let workers = config.worker_count.resolve();
    let k = dataset.instances();
    let stride = dataset.timesteps() * dataset.variables();
    let mut warnings = Vec::new();

    let valid = get_valid_instances(dataset);
    let mask = valid.mask();
    let valid_count = valid.indices.len();
    if valid.is_empty() {
        warnings.push("no fully observed instances; every result is missing_data".to_string());
    }

    // Rotation coefficients.
    let mut rotation_array: Vec<Option<usize>> = vec![None; k];
    let mut paths = PathCounts::default();
    let rotated: Cow<'_, TimeSeriesDataset> = if config.rotation_mode {
        let features = alignment::query_spectrum(inputs.query, config);
        let plan = partition_tasks(Stage::Rotation, valid.indices.clone(), workers);
        let coefficients = map_chunks(&plan, |tasks| {
            tasks
                .iter()
                .map(|&i| alignment::coefficient_from_query_spectrum(&features, dataset.instance(i), config))
                .collect()
        });
        for (&i, c) in valid.indices.iter().zip(&coefficients) {
            rotation_array[i] = Some(c.value);
            match c.path {
                AlignmentPath::DftShifting => paths.dft_shifting += 1,
                AlignmentPath::CrossCorrelation => paths.cross_correlation += 1,
            }
        }

        let plan = partition_tasks(Stage::RotateApply, valid.indices.clone(), workers);
        let rotations = &rotation_array;
        let blocks: Vec<Vec<f64>> = map_chunks(&plan, |tasks| {
            tasks
                .iter()
                .map(|&i| {
                    let mut buf = vec![0.0; stride];
                    let r = rotations[i].expect("valid instance has a coefficient");
                    alignment::rotate_instance_into(dataset.instance(i), r, &mut buf);
                    buf
                })
                .collect()
        });
        let mut values = dataset.values().to_vec();
        for (&i, block) in valid.indices.iter().zip(blocks) {
            values[i * stride..(i + 1) * stride].copy_from_slice(&block);
        }
        Cow::Owned(dataset.with_values(values))
    } else {
        for &i in &valid.indices {
            rotation_array[i] = Some(0);
        }
        Cow::Borrowed(dataset)
    };

    // Raw distances, then per-column normalization on the collector.
    let m = dataset.variables();
    let plan = partition_tasks(Stage::Dissimilarity, valid.indices.clone(), workers);
    let rotated_ref: &TimeSeriesDataset = &rotated;
    let rows: Vec<Vec<f64>> = map_chunks(&plan, |tasks| {
        tasks
            .iter()
            .map(|&i| {
                let mut row = vec![0.0; m];
                dissimilarity::instance_distances(
                    rotated_ref.instance(i),
                    inputs.query,
                    &config.analysis_period,
                    config.distance_kind,
                    &mut row,
                );
                row
            })
            .collect()
    });
    let mut raw = vec![f64::NAN; k * m];
    for (&i, row) in valid.indices.iter().zip(&rows) {
        raw[i * m..(i + 1) * m].copy_from_slice(row);
    }
    let dissimilarity = dissimilarity::normalize_and_weight(&raw, &mask, config.weights.as_slice());

    let raw_combined = simindex::combine_distances(&dissimilarity);
    let similarity = simindex::to_similarity(&raw_combined);
    let filtered = simindex::apply_filtering(&similarity, config.filtering);
    warnings.extend(filtered.warning);
    let index = simindex::assemble(rotation_array, filtered.similarity, dataset.instance_ids().to_vec())
        .expect("arrays are built with one entry per instance");

    debug_assert!(index.satisfies_invariants(dataset.timesteps()));
    debug_assert!(index
        .similarity_array
        .iter()
        .zip(&mask)
        .all(|(s, &ok)| ok || *s == SimilarityEntry::Missing));

    Ok(Assessment {
        index,
        raw_combined,
        dissimilarity,
        valid_count,
        paths,
        warnings,
    })
}
