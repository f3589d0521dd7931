//! Dataset files.
//!
//! JSON (canonical): `{"a": 2, "b": 1, "X": [[..], ..], "Y": [[..], ..]}`.
//! Floats are written in shortest round-trip form, so save then load is
//! bit-exact.
//!
//! CSV: a header `x1,..,xa,y1,..,yb`, optionally preceded by a sidecar line
//! `# a=<a>`. The input dimension comes from an explicit argument, then the
//! sidecar, then the header names.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use lipreg_core::{LabeledDataset, Points};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("empty dataset")]
    Empty,
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV line {line}: {reason}")]
    CsvRow { line: u64, reason: String },
    #[error("CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error(transparent)]
    Dataset(lipreg_core::Error),
}

impl From<lipreg_core::Error> for IoError {
    fn from(e: lipreg_core::Error) -> Self {
        match e {
            lipreg_core::Error::EmptyDataset => IoError::Empty,
            e => IoError::Dataset(e),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl Format {
    /// `.csv` files are CSV, everything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetFile {
    a: usize,
    b: usize,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
    #[serde(rename = "Y")]
    y: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct PointsFile {
    a: Option<usize>,
    #[serde(rename = "X")]
    x: Vec<Vec<f64>>,
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| IoError::Io {
            path: dir.to_owned(),
            source,
        })?;
    }
    let mut f = fs::File::create(path).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })?;
    f.write_all(text.as_bytes()).map_err(|source| IoError::Io {
        path: path.to_owned(),
        source,
    })
}

fn rows_to_points(rows: &[Vec<f64>], dim: usize, what: &str) -> Result<Points, IoError> {
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
        return Err(IoError::Format(format!(
            "{what} row {i} has {} values, expected {dim}",
            r.len()
        )));
    }
    Ok(Points::from_rows_with_dim(dim, rows)?)
}

fn rows_of(points: &Points) -> Vec<Vec<f64>> {
    points.rows().map(<[f64]>::to_vec).collect()
}

pub fn parse_json(text: &str) -> Result<LabeledDataset, IoError> {
    if text.trim().is_empty() {
        return Err(IoError::Empty);
    }
    let file: DatasetFile = serde_json::from_str(text)?;
    if file.x.is_empty() && file.y.is_empty() {
        return Err(IoError::Empty);
    }
    if file.x.len() != file.y.len() {
        return Err(IoError::Format(format!(
            "{} inputs but {} labels",
            file.x.len(),
            file.y.len()
        )));
    }
    let x = rows_to_points(&file.x, file.a, "X")?;
    let y = rows_to_points(&file.y, file.b, "Y")?;
    Ok(LabeledDataset::new(x, y)?)
}

fn file_of(dataset: &LabeledDataset) -> DatasetFile {
    DatasetFile {
        a: dataset.input_dim(),
        b: dataset.label_dim(),
        x: rows_of(dataset.inputs()),
        y: rows_of(dataset.labels()),
    }
}

pub fn to_json(dataset: &LabeledDataset) -> String {
    serde_json::to_string(&file_of(dataset)).expect("finite floats serialize")
}

/// The JSON file layout as a value, for embedding in larger documents.
pub fn to_value(dataset: &LabeledDataset) -> serde_json::Value {
    serde_json::to_value(file_of(dataset)).expect("finite floats serialize")
}

/// Splits off a leading `# a=<n>` line.
fn sidecar(text: &str) -> Result<(Option<usize>, &str), IoError> {
    let Some(rest) = text.trim_start().strip_prefix('#') else {
        return Ok((None, text));
    };
    let (line, body) = rest.split_once('\n').unwrap_or((rest, ""));
    let mut a = None;
    for part in line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|p| !p.is_empty())
    {
        if let Some(v) = part.strip_prefix("a=") {
            a = Some(v.parse().map_err(|_| IoError::CsvRow {
                line: 1,
                reason: format!("bad sidecar value `{v}`"),
            })?);
        }
    }
    Ok((a, body))
}

fn header_input_dim(header: &csv::StringRecord) -> Option<usize> {
    let xs = header
        .iter()
        .take_while(|h| h.trim().starts_with('x'))
        .count();
    let ys = header
        .iter()
        .skip(xs)
        .filter(|h| h.trim().starts_with('y'))
        .count();
    (xs > 0 && xs + ys == header.len()).then_some(xs)
}

pub fn parse_csv(text: &str, input_dim: Option<usize>) -> Result<LabeledDataset, IoError> {
    let (side, body) = sidecar(text)?;
    let offset = if side.is_some() { 1 } else { 0 };
    if body.trim().is_empty() {
        return Err(IoError::Empty);
    }
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(body.as_bytes());
    let header = reader.headers()?.clone();
    let width = header.len();
    let a = input_dim
        .or(side)
        .or_else(|| header_input_dim(&header))
        .ok_or_else(|| {
            IoError::Format(
                "cannot tell the input dimension: pass it or add a `# a=<n>` line".into(),
            )
        })?;
    if a == 0 || a >= width {
        return Err(IoError::Format(format!(
            "input dimension {a} does not fit {width} columns"
        )));
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line()) + offset;
        if record.len() != width {
            return Err(IoError::CsvRow {
                line,
                reason: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let mut values = Vec::with_capacity(width);
        for field in record.iter() {
            values.push(field.parse::<f64>().map_err(|_| IoError::CsvRow {
                line,
                reason: format!("not a number: `{field}`"),
            })?);
        }
        ys.push(values.split_off(a));
        xs.push(values);
    }
    if xs.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(LabeledDataset::new(
        rows_to_points(&xs, a, "X")?,
        rows_to_points(&ys, width - a, "Y")?,
    )?)
}

pub fn to_csv(dataset: &LabeledDataset) -> String {
    let (a, b) = (dataset.input_dim(), dataset.label_dim());
    let mut out = format!("# a={a}\n");
    let header: Vec<String> = (1..=a)
        .map(|i| format!("x{i}"))
        .chain((1..=b).map(|j| format!("y{j}")))
        .collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..dataset.len() {
        let row: Vec<String> = dataset
            .input(i)
            .iter()
            .chain(dataset.label(i))
            .map(|v| v.to_string())
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn load_dataset(
    path: &Path,
    format: Format,
    input_dim: Option<usize>,
) -> Result<LabeledDataset, IoError> {
    let text = read_text(path)?;
    match format {
        Format::Json => parse_json(&text),
        Format::Csv => parse_csv(&text, input_dim),
    }
}

pub fn save_dataset(path: &Path, dataset: &LabeledDataset, format: Format) -> Result<(), IoError> {
    let text = match format {
        Format::Json => to_json(dataset),
        Format::Csv => to_csv(dataset),
    };
    write_text(path, &text)
}

/// Inline points: rows separated by `;`, coordinates by `,`.
pub fn parse_inline_points(text: &str) -> Result<Points, IoError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .filter(|r| !r.trim().is_empty())
        .map(|r| {
            r.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| IoError::Format(format!("not a number: `{}`", v.trim())))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let dim = rows.first().map(Vec::len).ok_or(IoError::Empty)?;
    rows_to_points(&rows, dim, "query")
}

/// Prediction rows from a report with a `predictions` array, or the labels of
/// a dataset file.
pub fn load_predictions(
    path: &Path,
    format: Format,
    input_dim: Option<usize>,
) -> Result<Points, IoError> {
    if format == Format::Csv {
        return Ok(load_dataset(path, format, input_dim)?.into_parts().1);
    }
    let text = read_text(path)?;
    if text.trim().is_empty() {
        return Err(IoError::Empty);
    }
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let rows = value
        .get("predictions")
        .or_else(|| value.get("Y"))
        .cloned()
        .ok_or_else(|| {
            IoError::Format("expected a `predictions` array or a dataset with `Y`".into())
        })?;
    let rows: Vec<Vec<f64>> = serde_json::from_value(rows)?;
    let dim = rows.first().map(Vec::len).ok_or(IoError::Empty)?;
    rows_to_points(&rows, dim, "predictions")
}

/// Query points: the inputs of a dataset file, or a JSON object with only
/// `X` (and optionally `a`).
pub fn load_points(
    path: &Path,
    format: Format,
    input_dim: Option<usize>,
) -> Result<Points, IoError> {
    let text = read_text(path)?;
    match format {
        Format::Csv => Ok(parse_csv(&text, input_dim)?.into_parts().0),
        Format::Json => {
            if text.trim().is_empty() {
                return Err(IoError::Empty);
            }
            let file: PointsFile = serde_json::from_str(&text)?;
            let dim = file
                .a
                .or_else(|| file.x.first().map(Vec::len))
                .ok_or(IoError::Empty)?;
            if file.x.is_empty() {
                return Err(IoError::Empty);
            }
            rows_to_points(&file.x, dim, "X")
        }
    }
}
