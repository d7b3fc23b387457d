//! CSV matrices, label files and atomic output.

use std::fs;
use std::io::Write;
use std::path::Path;

use drtk::{DataMatrix, LabelPartition};
use sha2::{Digest, Sha256};

use crate::failure::{CliResult, Failure};

/// A parsed matrix file.
#[derive(Debug, Clone)]
pub struct Table {
    pub data: DataMatrix,
    /// Present when the header names a trailing `label` column.
    pub labels: Option<LabelPartition>,
    pub digest: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn read_bytes(path: &Path) -> CliResult<Vec<u8>> {
    fs::read(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
}

fn records(path: &Path, bytes: &[u8]) -> CliResult<Vec<(u64, Vec<String>)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        out.push((line, rec.iter().map(str::to_string).collect()));
    }
    Ok(out)
}

fn is_header(fields: &[String]) -> bool {
    fields.iter().any(|f| f.parse::<f64>().is_err())
}

fn parse_label(path: &Path, line: u64, col: usize, s: &str) -> CliResult<i64> {
    s.parse::<i64>().map_err(|_| {
        Failure::input(format!(
            "{}: line {line}, column {col}: label '{s}' is not an integer",
            path.display()
        ))
    })
}

/// Reads a numeric CSV. The first row is a header when any of its fields is
/// not a number; a header ending in `label` marks an integer label column.
pub fn read_table(path: &Path) -> CliResult<Table> {
    let bytes = read_bytes(path)?;
    let digest = sha256_hex(&bytes);
    let mut rows = records(path, &bytes)?;
    if rows.is_empty() {
        return Err(Failure::input(format!("{}: no data rows", path.display())));
    }
    let mut has_label = false;
    if is_header(&rows[0].1) {
        let (_, header) = rows.remove(0);
        has_label = header
            .last()
            .is_some_and(|h| h.eq_ignore_ascii_case("label"));
        if rows.is_empty() {
            return Err(Failure::input(format!(
                "{}: header but no data rows",
                path.display()
            )));
        }
    }
    let width = rows[0].1.len();
    let cols = if has_label { width - 1 } else { width };
    if cols == 0 {
        return Err(Failure::input(format!(
            "{}: no feature columns",
            path.display()
        )));
    }
    let mut values = Vec::with_capacity(rows.len() * cols);
    let mut raw_labels = Vec::new();
    for (line, fields) in &rows {
        if fields.len() != width {
            return Err(Failure::input(format!(
                "{}: line {line}: expected {width} fields, found {}",
                path.display(),
                fields.len()
            )));
        }
        for (c, f) in fields[..cols].iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| {
                Failure::input(format!(
                    "{}: line {line}, column {}: '{f}' is not a number",
                    path.display(),
                    c + 1
                ))
            })?;
            if !v.is_finite() {
                return Err(Failure::input(format!(
                    "{}: line {line}, column {}: non-finite value",
                    path.display(),
                    c + 1
                )));
            }
            values.push(v);
        }
        if has_label {
            raw_labels.push(parse_label(path, *line, width, &fields[cols])?);
        }
    }
    let data = DataMatrix::new(rows.len(), cols, values)
        .map_err(|e| Failure::from(e).context(path.display()))?;
    let labels = if has_label {
        Some(
            LabelPartition::from_raw_labels(&raw_labels)
                .map_err(|e| Failure::from(e).context(path.display()))?,
        )
    } else {
        None
    };
    Ok(Table {
        data,
        labels,
        digest,
    })
}

/// Reads a one-column label file, with or without a header.
pub fn read_labels(path: &Path) -> CliResult<(LabelPartition, String)> {
    let bytes = read_bytes(path)?;
    let digest = sha256_hex(&bytes);
    let mut rows = records(path, &bytes)?;
    if rows
        .first()
        .is_some_and(|(_, f)| f.len() == 1 && f[0].parse::<i64>().is_err())
    {
        rows.remove(0);
    }
    if rows.is_empty() {
        return Err(Failure::input(format!("{}: no labels", path.display())));
    }
    let mut raw = Vec::with_capacity(rows.len());
    for (line, fields) in &rows {
        if fields.len() != 1 {
            return Err(Failure::input(format!(
                "{}: line {line}: expected one label per line, found {} fields",
                path.display(),
                fields.len()
            )));
        }
        raw.push(parse_label(path, *line, 1, &fields[0])?);
    }
    let p = LabelPartition::from_raw_labels(&raw)
        .map_err(|e| Failure::from(e).context(path.display()))?;
    Ok((p, digest))
}

/// CSV text of a matrix with a `prefix1..prefixD` header and an optional
/// trailing label column.
pub fn matrix_csv(m: &DataMatrix, labels: Option<&LabelPartition>, prefix: &str) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (1..=m.cols()).map(|c| format!("{prefix}{c}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in m.row_iter().enumerate() {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        if let Some(p) = labels {
            fields.push(p.class_of(i).to_string());
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail =
        |e: std::io::Error| Failure::Internal(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(contents).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_and_labels_detected() {
        let f = file("a,b,label\n1,2,7\n3,4,9\n5,6,7\n");
        let t = read_table(f.path()).unwrap();
        assert_eq!((t.data.rows(), t.data.cols()), (3, 2));
        let p = t.labels.unwrap();
        assert_eq!(p.class_count(), 2);
        assert_eq!(p.class_of(0), p.class_of(2));
    }

    #[test]
    fn headerless_numbers() {
        let f = file("1,2\n3,4\n");
        let t = read_table(f.path()).unwrap();
        assert_eq!(t.data.values(), &[1.0, 2.0, 3.0, 4.0]);
        assert!(t.labels.is_none());
    }

    #[test]
    fn bad_cell_reports_position() {
        let f = file("1,2\n3,x\n");
        let e = read_table(f.path()).unwrap_err();
        assert_eq!(e.code(), 2);
        assert!(e.to_string().contains("line 2, column 2"), "{e}");
    }

    #[test]
    fn ragged_row_rejected() {
        let f = file("1,2\n3\n");
        let e = read_table(f.path()).unwrap_err();
        assert!(e.to_string().contains("line 2"), "{e}");
    }

    #[test]
    fn round_trip() {
        let m = DataMatrix::from_rows(&[[0.1, -2.5e-7], [3.0, 1e300]]).unwrap();
        let p = LabelPartition::from_assignments(vec![1, 0]).unwrap();
        let f = file(&matrix_csv(&m, Some(&p), "x"));
        let t = read_table(f.path()).unwrap();
        assert_eq!(t.data, m);
        let q = t.labels.unwrap();
        assert_ne!(q.class_of(0), q.class_of(1));
    }

    #[test]
    fn label_file_with_header() {
        let f = file("label\n3\n3\n5\n");
        let (p, _) = read_labels(f.path()).unwrap();
        assert_eq!(p.assignments(), &[0, 0, 1]);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
    }
}
