//! CSV readers and writers for RGB traces, pulse signals and ground truth.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;

use super::CliError;
use crate::signal::RgbSignal;

fn open_reader(path: &Path) -> Result<csv::Reader<File>, CliError> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.eq_ignore_ascii_case(name))
}

/// Reads the named columns of a headed CSV file as floating-point values.
///
/// The first column must be `frame_index`. A header row made of numbers is
/// reported as missing.
pub fn read_columns(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = open_reader(path)?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        .clone();
    let first = headers.get(0).unwrap_or_default();
    if first.parse::<f64>().is_ok() || headers.is_empty() {
        return Err(CliError::Input(format!(
            "{}: line 1: missing header, expected frame_index,{}",
            path.display(),
            columns.join(",")
        )));
    }
    if !first.eq_ignore_ascii_case("frame_index") {
        return Err(CliError::Input(format!(
            "{}: line 1: first column must be frame_index, found {first:?}",
            path.display()
        )));
    }
    let idx: Vec<usize> = columns
        .iter()
        .map(|c| {
            header_index(&headers, c).ok_or_else(|| {
                CliError::Input(format!("{}: line 1: missing column {c:?}", path.display()))
            })
        })
        .collect::<Result<_, _>>()?;

    let mut out = vec![Vec::new(); columns.len()];
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            CliError::Input(format!("{}: line {line}: {e}", path.display()))
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        for (col, &i) in out.iter_mut().zip(&idx) {
            let field = record.get(i).unwrap_or_default();
            let value: f64 = field.parse().map_err(|_| {
                CliError::Input(format!(
                    "{}: line {line}: cannot parse {field:?} in column {:?}",
                    path.display(),
                    &headers[i]
                ))
            })?;
            if !value.is_finite() {
                return Err(CliError::Input(format!(
                    "{}: line {line}: non-finite value in column {:?}",
                    path.display(),
                    &headers[i]
                )));
            }
            col.push(value);
        }
    }
    if out[0].is_empty() {
        return Err(CliError::Input(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Reads a `frame_index,R,G,B` file.
pub fn read_rgb(path: &Path, sample_rate_hz: f64) -> Result<RgbSignal, CliError> {
    let cols = read_columns(path, &["R", "G", "B"])?;
    let n = cols[0].len();
    let samples = Array2::from_shape_fn((n, 3), |(i, c)| cols[c][i]);
    Ok(RgbSignal::new(samples, sample_rate_hz)?)
}

/// Reads a single named column, e.g. `rppg` or `ppg`.
pub fn read_series(path: &Path, column: &str) -> Result<Vec<f64>, CliError> {
    Ok(read_columns(path, &[column])?.remove(0))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `frame_index` followed by one column per named series.
pub fn write_columns(path: &Path, names: &[&str], columns: &[&[f64]]) -> Result<(), CliError> {
    let n = columns.first().map_or(0, |c| c.len());
    let mut w = create(path)?;
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    writeln!(w, "frame_index,{}", names.join(",")).map_err(io)?;
    for i in 0..n {
        write!(w, "{i}").map_err(io)?;
        for col in columns {
            write!(w, ",{}", fmt_f64(col[i])).map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn write_rgb(path: &Path, x: &RgbSignal) -> Result<(), CliError> {
    let cols: Vec<Vec<f64>> = (0..3).map(|c| x.channel(c).to_vec()).collect();
    write_columns(path, &["R", "G", "B"], &[&cols[0], &cols[1], &cols[2]])
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// CSV files directly inside `dir`, sorted by file name.
pub fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
        .collect();
    files.sort();
    Ok(files)
}

/// Path with `suffix` appended to the full file name.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// Path in the same directory with the extension replaced by `ext`.
pub fn with_stem_suffix(path: &Path, suffix: &str, ext: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    path.with_file_name(format!("{stem}{suffix}.{ext}"))
}
