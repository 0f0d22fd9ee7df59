// Copyright 2026 The chromy-sampling Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


//! File formats.
//!
//! * Population CSV: header `unit_id,prob` or `unit_id,size`.
//! * Sample CSV: header `unit_id`, one selected unit per row.
//! * Values CSV: header `unit_id,value`.
//! * Matrix CSV: header `unit_id,<id_1>,...,<id_N>`, one row per unit.
//!
//! Numbers are kept as strings until the arithmetic mode is known, so that
//! decimals such as `0.1` stay exact in rational mode.

use crate::error::{CliError, Result};
use chromy_core::{JointProbabilityMatrix, Provenance, Scalar};
use std::collections::HashMap;
use std::fs::File;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Prob,
    Size,
}

#[derive(Debug, Clone)]
pub struct PopulationFile {
    pub ids: Vec<String>,
    pub column: Column,
    pub values: Vec<String>,
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::Validation(format!("{}: {:?}", path.display(), other)),
    }
}

fn headers(path: &Path, reader: &mut csv::Reader<File>) -> Result<Vec<String>> {
    Ok(reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(str::to_string)
        .collect())
}

fn records(path: &Path, reader: csv::Reader<File>) -> Result<Vec<csv::StringRecord>> {
    reader
        .into_records()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| csv_error(path, e))
}

fn check_unique(path: &Path, ids: &[String]) -> Result<()> {
    let mut seen = HashMap::with_capacity(ids.len());
    for (row, id) in ids.iter().enumerate() {
        if let Some(first) = seen.insert(id.as_str(), row) {
            return Err(CliError::Validation(format!(
                "{}: unit id {id:?} appears in rows {} and {}",
                path.display(),
                first + 1,
                row + 1
            )));
        }
    }
    Ok(())
}

pub fn read_population(path: &Path) -> Result<PopulationFile> {
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    let column = match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
        ["unit_id", "prob"] => Column::Prob,
        ["unit_id", "size"] => Column::Size,
        _ => {
            return Err(CliError::Validation(format!(
                "{}: expected header unit_id,prob or unit_id,size, got {}",
                path.display(),
                header.join(",")
            )))
        }
    };
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for record in records(path, reader)? {
        ids.push(record[0].to_string());
        values.push(record[1].to_string());
    }
    if ids.is_empty() {
        return Err(CliError::Validation(format!("{}: no units", path.display())));
    }
    check_unique(path, &ids)?;
    Ok(PopulationFile { ids, column, values })
}

pub fn read_sample(path: &Path) -> Result<Vec<String>> {
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header != ["unit_id"] {
        return Err(CliError::Validation(format!(
            "{}: expected header unit_id, got {}",
            path.display(),
            header.join(",")
        )));
    }
    let ids: Vec<String> = records(path, reader)?.iter().map(|r| r[0].to_string()).collect();
    check_unique(path, &ids)?;
    Ok(ids)
}

pub fn read_values<T: Scalar>(path: &Path) -> Result<HashMap<String, T>> {
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header != ["unit_id", "value"] {
        return Err(CliError::Validation(format!(
            "{}: expected header unit_id,value, got {}",
            path.display(),
            header.join(",")
        )));
    }
    let mut out = HashMap::new();
    for r in records(path, reader)? {
        let v = T::parse_str(&r[1]).map_err(chromy_core::Error::from)?;
        if out.insert(r[0].to_string(), v).is_some() {
            return Err(CliError::Validation(format!("{}: duplicate unit id {:?}", path.display(), &r[0])));
        }
    }
    Ok(out)
}

pub fn read_matrix<T: Scalar>(path: &Path) -> Result<(Vec<String>, JointProbabilityMatrix<T>)> {
    let mut reader = open(path)?;
    let header = headers(path, &mut reader)?;
    if header.first().map(String::as_str) != Some("unit_id") {
        return Err(CliError::Validation(format!("{}: first column must be unit_id", path.display())));
    }
    let ids = header[1..].to_vec();
    check_unique(path, &ids)?;
    let rows = records(path, reader)?;
    if rows.len() != ids.len() {
        return Err(CliError::Validation(format!(
            "{}: {} columns but {} rows",
            path.display(),
            ids.len(),
            rows.len()
        )));
    }
    let mut values = Vec::with_capacity(ids.len() * ids.len());
    for (k, row) in rows.iter().enumerate() {
        if &row[0] != ids[k].as_str() || row.len() != ids.len() + 1 {
            return Err(CliError::Validation(format!(
                "{}: row {} must start with {:?} and have {} entries",
                path.display(),
                k + 1,
                ids[k],
                ids.len() + 1
            )));
        }
        for cell in row.iter().skip(1) {
            values.push(T::parse_str(cell).map_err(chromy_core::Error::from)?);
        }
    }
    let matrix = JointProbabilityMatrix::from_values(ids.len(), values, Provenance::Imported)?;
    Ok((ids, matrix))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// Writes to `path`, or to stdout when absent.
pub fn emit(path: Option<&Path>, contents: &[u8]) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, contents),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(contents)
                .and_then(|_| lock.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

/// `<output>.json`, next to the main output.
pub fn sidecar_path(output: &Path) -> std::path::PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".json");
    name.into()
}

pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::Validation(format!("csv output: {e}"));
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer
        .into_inner()
        .map_err(|e| CliError::Validation(format!("csv output: {e}")))
}

pub fn json_bytes<S: serde::Serialize>(value: &S) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Validation(format!("json output: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chromy_core::Exact;
    use std::fs;
    use tempfile::TempDir;

    fn file(dir: &TempDir, body: &str) -> std::path::PathBuf {
        let p = dir.path().join("in.csv");
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn population_header_selects_column() {
        let dir = TempDir::new().unwrap();
        let p = read_population(&file(&dir, "unit_id,size\nx,3\ny,4\n")).unwrap();
        assert_eq!(p.column, Column::Size);
        assert_eq!(p.ids, ["x", "y"]);
        assert_eq!(p.values, ["3", "4"]);
        assert!(matches!(
            read_population(&file(&dir, "id,prob\nx,1\n")),
            Err(CliError::Validation(_))
        ));
        assert!(matches!(
            read_population(&file(&dir, "unit_id,prob\nx,0.5\nx,0.5\n")),
            Err(CliError::Validation(_))
        ));
    }

    #[test]
    fn matrix_round_trips_through_csv() {
        let dir = TempDir::new().unwrap();
        let ids = vec!["unit_id".to_string(), "a".into(), "b".into()];
        let bytes = csv_bytes(
            &ids,
            [
                vec!["a".into(), "1/2".into(), "0".into()],
                vec!["b".into(), "0".into(), "1/2".into()],
            ],
        )
        .unwrap();
        let path = dir.path().join("m.csv");
        write_atomic(&path, &bytes).unwrap();
        let (names, m) = read_matrix::<Exact>(&path).unwrap();
        assert_eq!(names, ["a", "b"]);
        assert_eq!(m.get(1, 1), &Exact::new(1.into(), 2.into()));
        assert_eq!(m.provenance(), Provenance::Imported);
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        let dir = TempDir::new().unwrap();
        let p = file(&dir, "unit_id,a,b\na,0.5,0\n");
        assert!(matches!(read_matrix::<f64>(&p), Err(CliError::Validation(_))));
    }

    #[test]
    fn sidecar_appends_json() {
        assert_eq!(sidecar_path(Path::new("out/s.csv")), Path::new("out/s.csv.json"));
    }
}
