//! Similarity array construction, filtering and assembly.

use crate::model::{DissimilarityMatrix, Filtering, SimilarityEntry, SimilarityIndexMatrix};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("length mismatch: {rotations} rotations, {similarities} similarities, {ids} ids")]
pub struct AssembleError {
    pub rotations: usize,
    pub similarities: usize,
    pub ids: usize,
}

/// Row sums of the dissimilarity matrix; `None` for invalid rows.
pub fn combine_distances(dissimilarity: &DissimilarityMatrix) -> Vec<Option<f64>> {
    (0..dissimilarity.instances())
        .map(|k| dissimilarity.row(k).map(|row| row.iter().sum()))
        .collect()
}

/// `1 − raw`, clamped to `[0, 1]` against weight-sum rounding.
pub fn to_similarity(raw_index: &[Option<f64>]) -> Vec<SimilarityEntry> {
    raw_index
        .iter()
        .map(|r| match r {
            Some(v) => SimilarityEntry::Value((1.0 - v).clamp(0.0, 1.0)),
            None => SimilarityEntry::Missing,
        })
        .collect()
}

/// Result of filtering, with any warning raised along the way.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub similarity: Vec<SimilarityEntry>,
    pub warning: Option<String>,
}

pub fn apply_filtering(similarity: &[SimilarityEntry], filtering: Filtering) -> Filtered {
    match filtering {
        Filtering::None => Filtered {
            similarity: similarity.to_vec(),
            warning: None,
        },
        Filtering::Absolute(threshold) => Filtered {
            similarity: similarity
                .iter()
                .map(|&s| match s {
                    SimilarityEntry::Value(v) if v < threshold => SimilarityEntry::Filtered,
                    other => other,
                })
                .collect(),
            warning: None,
        },
        Filtering::Relative(k) => {
            let mut ranked: Vec<(usize, f64)> = similarity
                .iter()
                .enumerate()
                .filter_map(|(i, s)| s.value().map(|v| (i, v)))
                .collect();
            let warning = (k > ranked.len()).then(|| {
                format!(
                    "top-k {k} exceeds the {} valid instances; keeping all of them",
                    ranked.len()
                )
            });
            // Stable sort keeps the smaller index first among equal similarities.
            ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
            let mut out: Vec<SimilarityEntry> = similarity
                .iter()
                .map(|&s| match s {
                    SimilarityEntry::Value(_) => SimilarityEntry::Filtered,
                    other => other,
                })
                .collect();
            for &(i, v) in ranked.iter().take(k) {
                out[i] = SimilarityEntry::Value(v);
            }
            Filtered {
                similarity: out,
                warning,
            }
        }
    }
}

pub fn assemble(
    rotation_array: Vec<Option<usize>>,
    similarity_array: Vec<SimilarityEntry>,
    instance_ids: Vec<String>,
) -> Result<SimilarityIndexMatrix, AssembleError> {
    if rotation_array.len() != similarity_array.len() || similarity_array.len() != instance_ids.len() {
        return Err(AssembleError {
            rotations: rotation_array.len(),
            similarities: similarity_array.len(),
            ids: instance_ids.len(),
        });
    }
    Ok(SimilarityIndexMatrix {
        rotation_array,
        similarity_array,
        instance_ids,
    })
}
