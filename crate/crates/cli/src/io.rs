//! CSV readers and writers.
//!
//! All inputs are UTF-8, comma-delimited, with a header row. Lines starting
//! with `#` are skipped. Errors carry the file path and line number.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use csv::StringRecord;
use neuron_margins_core::dataset::{
    validate_row, ActivationRow, ActivationTable, AnnotationTable, DatasetBundle, LabelEntry,
    NeuronLabelMap,
};
use neuron_margins_core::margins::{Ensemble, MarginRow, MarginTable, ThresholdSpec};
use neuron_margins_core::rate::Rate;

use crate::error::{IoError, IoResult};

struct Table {
    path: PathBuf,
    header: StringRecord,
    records: Vec<(u64, StringRecord)>,
}

impl Table {
    fn parse_err(&self, line: u64, message: impl Into<String>) -> IoError {
        IoError::Parse {
            path: self.path.clone(),
            line,
            message: message.into(),
        }
    }

    fn invalid(&self, line: u64, source: neuron_margins_core::Error) -> IoError {
        IoError::Invalid {
            path: self.path.clone(),
            line: Some(line),
            source,
        }
    }

    fn expect_header(&self, expected: &[&str]) -> IoResult<()> {
        let found: Vec<&str> = self.header.iter().map(str::trim).collect();
        if found != expected {
            return Err(IoError::Schema {
                path: self.path.clone(),
                message: format!(
                    "expected header {:?}, found {:?}",
                    expected.join(","),
                    found.join(",")
                ),
            });
        }
        Ok(())
    }

    fn number<T: std::str::FromStr>(&self, line: u64, column: &str, cell: &str) -> IoResult<T> {
        cell.trim()
            .parse()
            .map_err(|_| self.parse_err(line, format!("{column}: cannot parse {cell:?}")))
    }
}

fn read_table(path: &Path) -> IoResult<Table> {
    let text = fs::read(path).map_err(|source| IoError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_slice());
    let csv_err = |e: csv::Error| IoError::Parse {
        path: path.to_path_buf(),
        line: e.position().map_or(0, |p| p.line()),
        message: e.to_string(),
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    let mut records = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        records.push((line, record));
    }
    Ok(Table {
        path: path.to_path_buf(),
        header,
        records,
    })
}

fn write_file(path: &Path, contents: &[u8]) -> IoResult<()> {
    fs::write(path, contents).map_err(|source| IoError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header).expect("writing to memory");
    for row in rows {
        w.write_record(&row).expect("writing to memory");
    }
    w.into_inner().expect("writing to memory")
}

fn write_csv(
    path: &Path,
    header: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> IoResult<()> {
    write_file(path, &csv_bytes(header, rows))
}

fn strings(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|s| s.to_string()).collect()
}

/// Reads `image_id,n0,...`; the dataset is named after the path.
pub fn load_activations(path: &Path) -> IoResult<ActivationTable> {
    let t = read_table(path)?;
    if t.header.get(0).map(str::trim) != Some("image_id") {
        return Err(IoError::Schema {
            path: t.path.clone(),
            message: "first header cell must be image_id".into(),
        });
    }
    let neuron_count = t.header.len() - 1;
    if neuron_count == 0 {
        return Err(IoError::Schema {
            path: t.path.clone(),
            message: "no neuron columns".into(),
        });
    }
    let mut rows = Vec::with_capacity(t.records.len());
    let mut seen = BTreeSet::new();
    for (line, rec) in &t.records {
        let image_id = rec[0].trim().to_string();
        let activations = rec
            .iter()
            .skip(1)
            .enumerate()
            .map(|(i, cell)| t.number(*line, &format!("neuron {i}"), cell))
            .collect::<IoResult<Vec<f64>>>()?;
        let row = ActivationRow {
            image_id,
            activations,
        };
        validate_row(&row, neuron_count).map_err(|e| t.invalid(*line, e))?;
        if !seen.insert(row.image_id.clone()) {
            return Err(t.invalid(
                *line,
                neuron_margins_core::Error::DuplicateImage(row.image_id),
            ));
        }
        rows.push(row);
    }
    ActivationTable::new(path.display().to_string(), neuron_count, rows).map_err(|source| {
        IoError::Invalid {
            path: t.path.clone(),
            line: None,
            source,
        }
    })
}

pub fn write_activations(path: &Path, table: &ActivationTable) -> IoResult<()> {
    let mut header = vec!["image_id".to_string()];
    header.extend((0..table.neuron_count()).map(|n| format!("n{n}")));
    let rows = table.rows().iter().map(|r| {
        let mut cells = vec![r.image_id.clone()];
        cells.extend(r.activations.iter().map(|v| v.to_string()));
        cells
    });
    write_csv(path, &header, rows)
}

/// Reads `image_id,concept`, one tag per row; tags are normalized.
pub fn load_annotations(path: &Path) -> IoResult<AnnotationTable> {
    let t = read_table(path)?;
    t.expect_header(&["image_id", "concept"])?;
    let mut table = AnnotationTable::new();
    for (line, rec) in &t.records {
        table
            .insert(rec[0].trim(), &rec[1])
            .map_err(|e| t.invalid(*line, e))?;
    }
    Ok(table)
}

pub fn write_annotations(path: &Path, table: &AnnotationTable) -> IoResult<()> {
    let rows = table.iter().flat_map(|(id, tags)| {
        tags.iter()
            .map(move |tag| vec![id.to_string(), tag.clone()])
    });
    write_csv(path, &strings(&["image_id", "concept"]), rows)
}

/// Reads `neuron,rank,concept,coverage_score`. An empty file is an empty map.
pub fn load_label_map(path: &Path) -> IoResult<NeuronLabelMap> {
    let t = read_table(path)?;
    if t.header.is_empty() || (t.header.len() == 1 && t.header[0].trim().is_empty()) {
        return Ok(NeuronLabelMap::default());
    }
    t.expect_header(&["neuron", "rank", "concept", "coverage_score"])?;
    let mut entries = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        entries.push(LabelEntry {
            neuron: t.number(*line, "neuron", &rec[0])?,
            rank: t.number(*line, "rank", &rec[1])?,
            concept: rec[2].to_string(),
            coverage_score: t.number(*line, "coverage_score", &rec[3])?,
        });
    }
    NeuronLabelMap::new(entries).map_err(|source| IoError::Invalid {
        path: t.path.clone(),
        line: None,
        source,
    })
}

pub fn write_label_map(path: &Path, map: &NeuronLabelMap) -> IoResult<()> {
    let rows = map.entries().iter().map(|e| {
        vec![
            e.neuron.to_string(),
            e.rank.to_string(),
            e.concept.clone(),
            e.coverage_score.to_string(),
        ]
    });
    write_csv(
        path,
        &strings(&["neuron", "rank", "concept", "coverage_score"]),
        rows,
    )
}

pub fn load_bundle(activations: &Path, annotations: &Path) -> IoResult<DatasetBundle> {
    let acts = load_activations(activations)?;
    let anns = load_annotations(annotations)?;
    DatasetBundle::new(acts, anns).map_err(|source| IoError::Invalid {
        path: annotations.to_path_buf(),
        line: None,
        source,
    })
}

fn margin_header(thresholds: &ThresholdSpec) -> Vec<String> {
    let mut h = strings(&["concept", "neurons", "target_n", "nontarget_n", "tla_gt0"]);
    h.extend(
        thresholds
            .fractions()
            .iter()
            .map(|&f| format!("non_tla_{}", ThresholdSpec::label(f))),
    );
    h
}

fn opt(n: Option<u64>) -> String {
    n.map(|n| n.to_string()).unwrap_or_default()
}

pub fn margins_csv(table: &MarginTable) -> Vec<u8> {
    let rows = table.rows.iter().map(|r| {
        let mut cells = vec![
            r.ensemble.concept().to_string(),
            r.ensemble.neuron_key(),
            opt(r.target_n),
            opt(r.nontarget_n),
            r.tla.to_string(),
        ];
        cells.extend(r.non_tla.iter().map(Rate::to_string));
        cells
    });
    csv_bytes(&margin_header(&table.thresholds), rows)
}

pub fn write_margins(path: &Path, table: &MarginTable) -> IoResult<()> {
    write_file(path, &margins_csv(table))
}

/// Reads a margin table written by [`write_margins`] (or transcribed in the
/// same layout). Threshold fractions come from the `non_tla_gt*` columns;
/// `tla_min` and `top_k` are not stored and must be supplied.
pub fn load_margins(path: &Path, tla_min: f64, top_k: usize) -> IoResult<MarginTable> {
    let t = read_table(path)?;
    let schema = |message: String| IoError::Schema {
        path: t.path.clone(),
        message,
    };
    let header: Vec<&str> = t.header.iter().map(str::trim).collect();
    if header.len() < 6
        || header[..5] != ["concept", "neurons", "target_n", "nontarget_n", "tla_gt0"]
    {
        return Err(schema(format!("unexpected header {:?}", header.join(","))));
    }
    let fractions = header[5..]
        .iter()
        .map(|h| {
            h.strip_prefix("non_tla_gt")
                .and_then(|p| p.parse::<f64>().ok())
                .map(|p| p / 100.0)
                .ok_or_else(|| schema(format!("unexpected column {h:?}")))
        })
        .collect::<IoResult<Vec<f64>>>()?;
    let spec = ThresholdSpec::new(fractions).map_err(|source| IoError::Invalid {
        path: t.path.clone(),
        line: None,
        source,
    })?;
    let count = |line: u64, column: &str, cell: &str| -> IoResult<Option<u64>> {
        if cell.trim().is_empty() {
            Ok(None)
        } else {
            t.number(line, column, cell).map(Some)
        }
    };
    let rate = |line: u64, cell: &str| Rate::from_percent_str(cell).map_err(|e| t.invalid(line, e));
    let mut rows = Vec::with_capacity(t.records.len());
    for (line, rec) in &t.records {
        let neurons = rec[1]
            .split('+')
            .map(|n| t.number::<usize>(*line, "neurons", n))
            .collect::<IoResult<Vec<_>>>()?;
        let ensemble = Ensemble::new(
            neuron_margins_core::dataset::normalize_tag(&rec[0]),
            neurons,
        )
        .map_err(|e| t.invalid(*line, e))?;
        rows.push(MarginRow {
            ensemble,
            target_n: count(*line, "target_n", &rec[2])?,
            nontarget_n: count(*line, "nontarget_n", &rec[3])?,
            tla: rate(*line, &rec[4])?,
            non_tla: rec
                .iter()
                .skip(5)
                .map(|c| rate(*line, c))
                .collect::<IoResult<_>>()?,
        });
    }
    MarginTable::new(spec, tla_min, top_k, rows).map_err(|source| IoError::Invalid {
        path: t.path.clone(),
        line: None,
        source,
    })
}

/// One row of a `concept,google,ade20k` file: calibration and evaluation
/// Non-TLA percentages of a confirmed concept.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub concept: String,
    pub calib: f64,
    pub eval: f64,
}

pub const PAIRS_HEADER: [&str; 3] = ["concept", "google", "ade20k"];

pub fn load_pairs(path: &Path) -> IoResult<Vec<PairRow>> {
    let t = read_table(path)?;
    t.expect_header(&PAIRS_HEADER)?;
    t.records
        .iter()
        .map(|(line, rec)| {
            Ok(PairRow {
                concept: rec[0].trim().to_string(),
                calib: t.number(*line, "google", &rec[1])?,
                eval: t.number(*line, "ade20k", &rec[2])?,
            })
        })
        .collect()
}

pub fn pairs_csv(rows: &[PairRow]) -> Vec<u8> {
    let rows = rows
        .iter()
        .map(|r| vec![r.concept.clone(), r.calib.to_string(), r.eval.to_string()]);
    csv_bytes(&strings(&PAIRS_HEADER), rows)
}

/// Two samples read from a `group,value` file.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupedSamples {
    pub first_name: String,
    pub first: Vec<f64>,
    pub second_name: String,
    pub second: Vec<f64>,
}

/// Reads `group,value` with exactly two groups. The first sample is
/// `first_group` when given, else the group that appears first.
pub fn load_groups(path: &Path, first_group: Option<&str>) -> IoResult<GroupedSamples> {
    let t = read_table(path)?;
    t.expect_header(&["group", "value"])?;
    let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
    for (line, rec) in &t.records {
        let name = rec[0].trim();
        let value: f64 = t.number(*line, "value", &rec[1])?;
        if value.is_nan() {
            return Err(t.parse_err(*line, "value is NaN"));
        }
        match groups.iter_mut().find(|(g, _)| g == name) {
            Some((_, v)) => v.push(value),
            None => groups.push((name.to_string(), vec![value])),
        }
    }
    if groups.len() != 2 {
        return Err(IoError::Schema {
            path: t.path.clone(),
            message: format!("expected exactly two groups, found {}", groups.len()),
        });
    }
    if let Some(first) = first_group {
        match groups.iter().position(|(g, _)| g == first) {
            Some(1) => groups.swap(0, 1),
            Some(_) => {}
            None => {
                return Err(IoError::Schema {
                    path: t.path.clone(),
                    message: format!("group {first:?} not found"),
                })
            }
        }
    }
    let (second_name, second) = groups.pop().expect("two groups");
    let (first_name, first) = groups.pop().expect("two groups");
    Ok(GroupedSamples {
        first_name,
        first,
        second_name,
        second,
    })
}
