//! Matrices as comma-separated text.
//!
//! One matrix row per line. Lines starting with `#` are metadata and are
//! skipped on input. An empty field is a missing entry. With `header` set the
//! first non-comment line is a header and is ignored.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;

use piot_core::{Coupling, Matrix};

use crate::error::{CliError, Result};

/// Parsed matrix text: values (missing entries as 0) and the missing positions.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedMatrix {
    pub values: Matrix,
    pub missing: BTreeSet<(usize, usize)>,
}

impl MaskedMatrix {
    pub fn into_coupling(self) -> piot_core::Result<Coupling> {
        if self.missing.is_empty() {
            Coupling::new(self.values)
        } else {
            Coupling::with_missing(self.values, self.missing)
        }
    }
}

pub fn parse_matrix(reader: impl Read, header: bool, path: &Path) -> Result<MaskedMatrix> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(header)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut missing = BTreeSet::new();
    let parse_err = |line: u64, msg: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let r = rows.len();
        let mut row = Vec::with_capacity(record.len());
        for (c, field) in record.iter().enumerate() {
            if field.is_empty() {
                missing.insert((r, c));
                row.push(0.0);
            } else {
                let v: f64 = field
                    .parse()
                    .map_err(|_| parse_err(line, format!("field {} is not a number: {field:?}", c + 1)))?;
                if !v.is_finite() {
                    return Err(parse_err(line, format!("field {} is not finite", c + 1)));
                }
                row.push(v);
            }
        }
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(0, "no matrix rows".into()));
    }
    let values = Matrix::from_rows(&rows).map_err(|e| parse_err(0, e.to_string()))?;
    Ok(MaskedMatrix { values, missing })
}

pub fn read_matrix(path: &Path, header: bool) -> Result<MaskedMatrix> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(file, header, path)
}

/// Reads a coupling, rejecting missing entries unless `allow_missing`.
pub fn read_coupling(path: &Path, header: bool, allow_missing: bool) -> Result<Coupling> {
    let m = read_matrix(path, header)?;
    if !allow_missing && !m.missing.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!(
                "{} missing entries where a complete matrix is required",
                m.missing.len()
            ),
        });
    }
    Ok(m.into_coupling()?)
}

/// A vector stored as one row or one column.
pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let m = read_matrix(path, false)?;
    if !m.missing.is_empty() {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: "vector has missing entries".into(),
        });
    }
    let (r, c) = m.values.dim();
    if r != 1 && c != 1 {
        return Err(CliError::Parse {
            path: path.to_path_buf(),
            line: 0,
            msg: format!("expected a single row or column, found {r}x{c}"),
        });
    }
    Ok(m.values.into_vec())
}

pub fn write_metadata(w: &mut impl Write, meta: &[String]) -> io::Result<()> {
    for line in meta {
        writeln!(w, "# {line}")?;
    }
    Ok(())
}

/// Writes `m` after `meta` comment lines; entries in `missing` are left empty.
pub fn write_matrix(
    w: &mut impl Write,
    m: &Matrix,
    missing: &BTreeSet<(usize, usize)>,
    meta: &[String],
) -> io::Result<()> {
    write_metadata(w, meta)?;
    let mut out = csv::Writer::from_writer(w);
    for i in 0..m.rows() {
        let fields: Vec<String> = (0..m.cols())
            .map(|j| {
                if missing.contains(&(i, j)) {
                    String::new()
                } else {
                    m[(i, j)].to_string()
                }
            })
            .collect();
        out.write_record(&fields)?;
    }
    out.flush()
}

pub fn write_matrix_file(path: &Path, m: &Matrix, meta: &[String]) -> Result<()> {
    let mut f = io::BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    write_matrix(&mut f, m, &BTreeSet::new(), meta).map_err(|e| CliError::io(path, e))?;
    f.flush().map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, header: bool) -> Result<MaskedMatrix> {
        parse_matrix(text.as_bytes(), header, Path::new("test.csv"))
    }

    #[test]
    fn comments_header_and_missing() {
        let m = parse("# source: x\na,b\n1, 2\n,4\n", true).unwrap();
        assert_eq!(m.values.dim(), (2, 2));
        assert_eq!(m.values[(0, 1)], 2.0);
        assert_eq!(m.missing.iter().copied().collect::<Vec<_>>(), [(1, 0)]);
    }

    #[test]
    fn malformed_input_reports_line() {
        match parse("1,2\n3,x\n", false) {
            Err(CliError::Parse { line, msg, .. }) => {
                assert_eq!(line, 2);
                assert!(msg.contains("not a number"));
            }
            other => panic!("{other:?}"),
        }
        match parse("1,2\n3\n", false) {
            Err(CliError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse("", false).is_err());
        assert!(parse("1,inf\n", false).is_err());
    }

    #[test]
    fn write_then_read_round_trips() {
        let m = Matrix::from_rows(&[[0.1, 1.0 / 3.0], [2.5e-17, 7.0]]).unwrap();
        let missing: BTreeSet<_> = [(1, 1)].into_iter().collect();
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, &missing, &["piot test".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# piot test\n"));
        let back = parse_matrix(buf.as_slice(), false, Path::new("x")).unwrap();
        assert_eq!(back.missing, missing);
        assert_eq!(back.values[(0, 1)], 1.0 / 3.0);
        assert_eq!(back.values[(1, 0)], 2.5e-17);
    }
}
