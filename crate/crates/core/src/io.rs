//! Long-format CSV ingestion, result files and the flat config format.
//!
//! Input files have the header `instance_id,time_index,<var1>,...,<varM>`.
//! An empty field or the literal `NA` marks a missing value. Results are
//! written one row per input instance, in input order.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::error::ValidationError;
use crate::model::{QuerySequence, SimilarityEntry, SimilarityIndexMatrix, TimeSeriesDataset};

pub const RESULTS_HEADER: [&str; 5] = ["instance_id", "rotation", "similarity", "raw_distance", "status"];

/// Significant digits used for every real printed to a result file.
pub const SIGNIFICANT_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{0}: file has no data rows")]
    Empty(String),
    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: unknown variable column `{name}`")]
    UnknownVariable { path: String, name: String },
    #[error("{path}, record {record}: {message}")]
    Parse {
        path: String,
        record: u64,
        message: String,
    },
    #[error("{path}: duplicate row for instance `{id}` at time index {time}")]
    DuplicateRow { path: String, id: String, time: usize },
    #[error("{path}: ragged time axes, series length is {expected} but instances {ids:?} end earlier")]
    RaggedTimeAxis {
        path: String,
        expected: usize,
        ids: Vec<String>,
    },
    #[error("{path}: query file must hold exactly one instance, found {count}")]
    MultipleInstances { path: String, count: usize },
    #[error("{path}: query has {count} missing cells")]
    QueryMissingCells { path: String, count: usize },
    #[error("{path}: {source}")]
    Invalid {
        path: String,
        #[source]
        source: ValidationError,
    },
    #[error("{path}, line {line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },
}

fn io_err(path: &str) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_string(),
        source,
    }
}

fn csv_err(path: &str) -> impl FnOnce(csv::Error) -> IoError + '_ {
    move |source| IoError::Csv {
        path: path.to_string(),
        source,
    }
}

fn parse_value(field: &str) -> Option<f64> {
    let f = field.trim();
    if f.is_empty() || f == "NA" {
        return Some(f64::NAN);
    }
    f.parse().ok()
}

/// Parsed long-format table before it becomes a dataset or a query.
struct LongTable {
    ids: Vec<String>,
    timesteps: usize,
    values: Vec<f64>,
}

fn read_long_format<R: Read>(reader: R, variable_names: &[String], path: &str) -> Result<LongTable, IoError> {
    let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = csv.headers().map_err(csv_err(path))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.trim() == name);
    let id_col = column("instance_id").ok_or_else(|| IoError::MissingColumn {
        path: path.into(),
        column: "instance_id".into(),
    })?;
    let time_col = column("time_index").ok_or_else(|| IoError::MissingColumn {
        path: path.into(),
        column: "time_index".into(),
    })?;
    let var_cols = variable_names
        .iter()
        .map(|name| {
            column(name).ok_or_else(|| IoError::UnknownVariable {
                path: path.into(),
                name: name.clone(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let m = var_cols.len();

    let mut ids: Vec<String> = Vec::new();
    let mut slot: HashMap<String, usize> = HashMap::new();
    let mut rows: Vec<HashMap<usize, Vec<f64>>> = Vec::new();
    for (record_no, record) in csv.records().enumerate() {
        let record = record.map_err(csv_err(path))?;
        let record_no = record_no as u64 + 1;
        let parse_error = |message: String| IoError::Parse {
            path: path.into(),
            record: record_no,
            message,
        };
        let id = record.get(id_col).unwrap_or_default().trim().to_string();
        if id.is_empty() {
            return Err(parse_error("empty instance_id".into()));
        }
        let time_field = record.get(time_col).unwrap_or_default().trim();
        let time: usize = time_field
            .parse()
            .map_err(|_| parse_error(format!("invalid time_index `{time_field}`")))?;
        let mut row = Vec::with_capacity(m);
        for (&col, name) in var_cols.iter().zip(variable_names) {
            let field = record.get(col).unwrap_or_default();
            row.push(
                parse_value(field)
                    .ok_or_else(|| parse_error(format!("invalid value `{field}` for `{name}`")))?,
            );
        }
        let index = *slot.entry(id.clone()).or_insert_with(|| {
            ids.push(id.clone());
            rows.push(HashMap::new());
            ids.len() - 1
        });
        if rows[index].insert(time, row).is_some() {
            return Err(IoError::DuplicateRow {
                path: path.into(),
                id,
                time,
            });
        }
    }
    if ids.is_empty() {
        return Err(IoError::Empty(path.into()));
    }

    let ends: Vec<usize> = rows
        .iter()
        .map(|r| r.keys().max().copied().unwrap_or(0) + 1)
        .collect();
    let timesteps = *ends.iter().max().unwrap_or(&0);
    let ragged: Vec<String> = ids
        .iter()
        .zip(&ends)
        .filter(|(_, &e)| e != timesteps)
        .map(|(id, _)| id.clone())
        .collect();
    if !ragged.is_empty() {
        return Err(IoError::RaggedTimeAxis {
            path: path.into(),
            expected: timesteps,
            ids: ragged,
        });
    }

    let mut values = vec![f64::NAN; ids.len() * timesteps * m];
    for (k, instance_rows) in rows.iter().enumerate() {
        for (&t, row) in instance_rows {
            let start = (k * timesteps + t) * m;
            values[start..start + m].copy_from_slice(row);
        }
    }
    Ok(LongTable {
        ids,
        timesteps,
        values,
    })
}

/// Reads a dataset from any long-format source. `label` names it in errors.
pub fn parse_dataset<R: Read>(reader: R, variable_names: &[String], label: &str) -> Result<TimeSeriesDataset, IoError> {
    let table = read_long_format(reader, variable_names, label)?;
    TimeSeriesDataset::new(table.values, table.timesteps, table.ids, variable_names.to_vec()).map_err(
        |source| IoError::Invalid {
            path: label.into(),
            source,
        },
    )
}

pub fn load_dataset(path: impl AsRef<Path>, variable_names: &[String]) -> Result<TimeSeriesDataset, IoError> {
    let label = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(io_err(&label))?;
    parse_dataset(BufReader::new(file), variable_names, &label)
}

pub fn parse_query<R: Read>(reader: R, variable_names: &[String], label: &str) -> Result<QuerySequence, IoError> {
    let table = read_long_format(reader, variable_names, label)?;
    if table.ids.len() != 1 {
        return Err(IoError::MultipleInstances {
            path: label.into(),
            count: table.ids.len(),
        });
    }
    let missing = table.values.iter().filter(|v| v.is_nan()).count();
    if missing > 0 {
        return Err(IoError::QueryMissingCells {
            path: label.into(),
            count: missing,
        });
    }
    QuerySequence::new(table.values, table.timesteps, variable_names.to_vec()).map_err(|source| {
        IoError::Invalid {
            path: label.into(),
            source,
        }
    })
}

pub fn load_query(path: impl AsRef<Path>, variable_names: &[String]) -> Result<QuerySequence, IoError> {
    let label = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(io_err(&label))?;
    parse_query(BufReader::new(file), variable_names, &label)
}

/// Formats like C's `%.12g`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let precision = SIGNIFICANT_DIGITS - 1;
    let sci = format!("{x:.precision$e}");
    let (mantissa, exponent) = sci.split_once('e').expect("exponent in scientific format");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    if exponent < -5 || exponent >= SIGNIFICANT_DIGITS as i32 {
        format!("{}e{exponent}", trim_zeros(mantissa))
    } else {
        let decimals = (precision as i32 - exponent) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn write_results_to<W: Write>(
    writer: W,
    matrix: &SimilarityIndexMatrix,
    raw_combined: &[Option<f64>],
) -> Result<(), csv::Error> {
    let mut csv = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    csv.write_record(RESULTS_HEADER)?;
    for (k, id) in matrix.instance_ids.iter().enumerate() {
        let rotation = matrix.rotation_array[k].map(|r| r.to_string()).unwrap_or_default();
        let (similarity, raw, status) = match matrix.similarity_array[k] {
            SimilarityEntry::Value(s) => (
                format_real(s),
                raw_combined.get(k).copied().flatten().map(format_real).unwrap_or_default(),
                "ok",
            ),
            SimilarityEntry::Filtered => (String::new(), String::new(), "filtered"),
            SimilarityEntry::Missing => (String::new(), String::new(), "missing_data"),
        };
        csv.write_record([id.as_str(), &rotation, &similarity, &raw, status])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_results(
    matrix: &SimilarityIndexMatrix,
    raw_combined: &[Option<f64>],
    path: impl AsRef<Path>,
) -> Result<(), IoError> {
    let label = path.as_ref().display().to_string();
    let file = File::create(path.as_ref()).map_err(io_err(&label))?;
    write_results_to(BufWriter::new(file), matrix, raw_combined).map_err(csv_err(&label))
}

/// Reads a result file back into a matrix and its raw combined distances.
pub fn parse_results<R: Read>(reader: R, label: &str) -> Result<(SimilarityIndexMatrix, Vec<Option<f64>>), IoError> {
    let mut csv = csv::Reader::from_reader(reader);
    let headers = csv.headers().map_err(csv_err(label))?.clone();
    if headers.iter().ne(RESULTS_HEADER) {
        return Err(IoError::Parse {
            path: label.into(),
            record: 0,
            message: format!("unexpected header {headers:?}"),
        });
    }
    let mut ids = Vec::new();
    let mut rotations = Vec::new();
    let mut similarities = Vec::new();
    let mut raws = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record.map_err(csv_err(label))?;
        let bad = |message: String| IoError::Parse {
            path: label.into(),
            record: i as u64 + 1,
            message,
        };
        let real = |field: &str| -> Result<Option<f64>, IoError> {
            if field.is_empty() {
                Ok(None)
            } else {
                field.parse().map(Some).map_err(|_| bad(format!("invalid number `{field}`")))
            }
        };
        ids.push(record[0].to_string());
        rotations.push(if record[1].is_empty() {
            None
        } else {
            Some(record[1].parse().map_err(|_| bad(format!("invalid rotation `{}`", &record[1])))?)
        });
        let similarity = real(&record[2])?;
        raws.push(real(&record[3])?);
        similarities.push(match (&record[4], similarity) {
            ("ok", Some(s)) => SimilarityEntry::Value(s),
            ("filtered", None) => SimilarityEntry::Filtered,
            ("missing_data", None) => SimilarityEntry::Missing,
            (status, _) => return Err(bad(format!("inconsistent status `{status}`"))),
        });
    }
    Ok((
        SimilarityIndexMatrix {
            rotation_array: rotations,
            similarity_array: similarities,
            instance_ids: ids,
        },
        raws,
    ))
}

pub fn load_results(path: impl AsRef<Path>) -> Result<(SimilarityIndexMatrix, Vec<Option<f64>>), IoError> {
    let label = path.as_ref().display().to_string();
    let file = File::open(path.as_ref()).map_err(io_err(&label))?;
    parse_results(BufReader::new(file), &label)
}

/// `key = value` lines; `#` starts a comment. Later keys override earlier ones.
pub fn parse_config_text(text: &str, label: &str) -> Result<Vec<(String, String)>, IoError> {
    let mut entries = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or_default().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| IoError::Config {
            path: label.into(),
            line: i + 1,
            message: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        if key.is_empty() {
            return Err(IoError::Config {
                path: label.into(),
                line: i + 1,
                message: "empty key".into(),
            });
        }
        entries.push((key.to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

pub fn load_config_file(path: impl AsRef<Path>) -> Result<Vec<(String, String)>, IoError> {
    let label = path.as_ref().display().to_string();
    let text = std::fs::read_to_string(path.as_ref()).map_err(io_err(&label))?;
    parse_config_text(&text, &label)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    const FULL: &str = "instance_id,time_index,prec,tmean\n\
        a,0,1.0,10\na,1,2.0,11\na,2,3.0,12\n\
        b,0,4.0,13\nb,1,5.0,14\nb,2,6.0,15\n";

    #[test]
    fn populated_dataset() {
        let d = parse_dataset(FULL.as_bytes(), &vars(&["prec", "tmean"]), "mem").unwrap();
        assert_eq!((d.instances(), d.timesteps(), d.variables()), (2, 3, 2));
        assert_eq!(d.value(1, 2, 1), 15.0);
        assert!(!d.values().iter().any(|v| v.is_nan()));
        assert_eq!(d.instance_ids(), &["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn column_subset_and_order_follow_request() {
        let d = parse_dataset(FULL.as_bytes(), &vars(&["tmean"]), "mem").unwrap();
        assert_eq!(d.variables(), 1);
        assert_eq!(d.value(0, 0, 0), 10.0);
    }

    #[test]
    fn na_and_absent_rows_are_missing() {
        let text = "instance_id,time_index,x\nb,0,1\nb,1,NA\nb,2,\na,2,3\na,0,4\n";
        let d = parse_dataset(text.as_bytes(), &vars(&["x"]), "mem").unwrap();
        assert_eq!(d.instance_ids(), &["b".to_string(), "a".to_string()]);
        assert!(d.is_missing(0, 1, 0) && d.is_missing(0, 2, 0));
        assert!(d.is_missing(1, 1, 0));
        assert_eq!(d.value(1, 2, 0), 3.0);
        assert_eq!(crate::model::get_valid_instances(&d).indices, Vec::<usize>::new());
    }

    #[test]
    fn ragged_axis_is_rejected() {
        let text = "instance_id,time_index,x\nA,0,1\nA,1,1\nA,2,1\nB,0,1\nB,1,1\nB,2,1\nB,3,1\n";
        match parse_dataset(text.as_bytes(), &vars(&["x"]), "mem") {
            Err(IoError::RaggedTimeAxis { expected, ids, .. }) => {
                assert_eq!(expected, 4);
                assert_eq!(ids, vec!["A".to_string()]);
            }
            other => panic!("expected ragged error, got {other:?}"),
        }
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_dataset(FULL.as_bytes(), &vars(&["wind"]), "mem"),
            Err(IoError::UnknownVariable { .. })
        ));
        assert!(matches!(
            parse_dataset("instance_id,time_index,x\n".as_bytes(), &vars(&["x"]), "mem"),
            Err(IoError::Empty(_))
        ));
        assert!(matches!(
            parse_dataset("".as_bytes(), &vars(&["x"]), "mem"),
            Err(IoError::MissingColumn { .. })
        ));
        assert!(matches!(
            parse_dataset("instance_id,time_index,x\na,0,1\na,0,2\n".as_bytes(), &vars(&["x"]), "mem"),
            Err(IoError::DuplicateRow { .. })
        ));
        assert!(matches!(
            parse_dataset("instance_id,time_index,x\na,zero,1\n".as_bytes(), &vars(&["x"]), "mem"),
            Err(IoError::Parse { .. })
        ));
    }

    #[test]
    fn query_loading() {
        let text = "instance_id,time_index,x,y\nq,0,1,2\nq,1,3,4\n";
        let q = parse_query(text.as_bytes(), &vars(&["x", "y"]), "mem").unwrap();
        assert_eq!(q.values(), &[1.0, 2.0, 3.0, 4.0]);

        let text = "instance_id,time_index,x\nq,0,1\nq,1,NA\n";
        assert!(matches!(
            parse_query(text.as_bytes(), &vars(&["x"]), "mem"),
            Err(IoError::QueryMissingCells { count: 1, .. })
        ));
        assert!(matches!(
            parse_query(FULL.as_bytes(), &vars(&["prec"]), "mem"),
            Err(IoError::MultipleInstances { count: 2, .. })
        ));
    }

    #[test]
    fn real_formatting() {
        assert_eq!(format_real(0.0), "0");
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.65), "0.65");
        assert_eq!(format_real(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_real(2.0 / 3.0), "0.666666666667");
        assert_eq!(format_real(1e-7), "1e-7");
        assert_eq!(format_real(123456.789), "123456.789");
        assert_eq!(format_real(0.99999999999999), "1");
    }

    fn sample_matrix() -> (SimilarityIndexMatrix, Vec<Option<f64>>) {
        (
            SimilarityIndexMatrix {
                rotation_array: vec![Some(3), Some(0), None],
                similarity_array: vec![
                    SimilarityEntry::Value(1.0 / 3.0),
                    SimilarityEntry::Filtered,
                    SimilarityEntry::Missing,
                ],
                instance_ids: vec!["a".into(), "b,c".into(), "d".into()],
            },
            vec![Some(2.0 / 3.0), Some(0.9), None],
        )
    }

    #[test]
    fn result_file_layout() {
        let (m, raw) = sample_matrix();
        let mut out = Vec::new();
        write_results_to(&mut out, &m, &raw).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(
            text,
            "instance_id,rotation,similarity,raw_distance,status\n\
             a,3,0.333333333333,0.666666666667,ok\n\
             \"b,c\",0,,,filtered\n\
             d,,,,missing_data\n"
        );
    }

    #[test]
    fn result_round_trip() {
        let (m, raw) = sample_matrix();
        let mut out = Vec::new();
        write_results_to(&mut out, &m, &raw).unwrap();
        let (back, back_raw) = parse_results(out.as_slice(), "mem").unwrap();
        assert_eq!(back.instance_ids, m.instance_ids);
        assert_eq!(back.rotation_array, m.rotation_array);
        assert_eq!(back.similarity_array[0], SimilarityEntry::Value(0.333333333333));
        assert_eq!(back_raw, vec![Some(0.666666666667), None, None]);
        let mut again = Vec::new();
        write_results_to(&mut again, &back, &back_raw).unwrap();
        assert_eq!(again, out);
    }

    #[test]
    fn config_text() {
        let entries = parse_config_text("# comment\nweights = 0.5,0.5\n\nrotation_mode=false # trailing\n", "cfg").unwrap();
        assert_eq!(
            entries,
            vec![
                ("weights".to_string(), "0.5,0.5".to_string()),
                ("rotation_mode".to_string(), "false".to_string())
            ]
        );
        assert!(matches!(parse_config_text("oops\n", "cfg"), Err(IoError::Config { line: 1, .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn printed_reals_reparse_to_a_fixed_point(x in -1e6f64..1e6) {
                let s = format_real(x);
                let y: f64 = s.parse().unwrap();
                prop_assert_eq!(format_real(y), s);
                prop_assert!((x - y).abs() <= 1e-11 * x.abs().max(1e-300));
            }
        }
    }
}
