//! Sample traces: one flattened kernel per line, CSV or JSON lines.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use piot_core::ChainOutput;
use serde_json::json;

use crate::config::TraceFormat;
use crate::csvio::write_metadata;
use crate::error::{CliError, Result};

/// Writes every recorded sample of every component, in component order.
pub fn write_trace(
    w: &mut impl Write,
    outputs: &[ChainOutput],
    format: TraceFormat,
    meta: &[String],
) -> std::io::Result<()> {
    let Some(first) = outputs.iter().find_map(|o| o.samples.first()) else {
        return write_metadata(w, meta);
    };
    let (m, n) = first.matrix().dim();
    match format {
        TraceFormat::Csv => {
            write_metadata(w, meta)?;
            let mut out = csv::Writer::from_writer(w);
            let mut header = vec!["component".to_string(), "sample".to_string()];
            header.extend((0..m).flat_map(|i| (0..n).map(move |j| format!("k_{}_{}", i + 1, j + 1))));
            out.write_record(&header)?;
            for (c, o) in outputs.iter().enumerate() {
                for (s, k) in o.samples.iter().enumerate() {
                    let mut row = vec![c.to_string(), s.to_string()];
                    row.extend(k.matrix().as_slice().iter().map(f64::to_string));
                    out.write_record(&row)?;
                }
            }
            out.flush()
        }
        TraceFormat::Jsonl => {
            for line in meta {
                writeln!(w, "{}", json!({ "meta": line }))?;
            }
            for (c, o) in outputs.iter().enumerate() {
                for (s, k) in o.samples.iter().enumerate() {
                    let rows: Vec<&[f64]> = (0..m).map(|i| k.matrix().row(i)).collect();
                    writeln!(w, "{}", json!({ "component": c, "sample": s, "kernel": rows }))?;
                }
            }
            Ok(())
        }
    }
}

pub fn write_trace_file(path: &Path, outputs: &[ChainOutput], format: TraceFormat, meta: &[String]) -> Result<()> {
    let mut f = BufWriter::new(File::create(path).map_err(|e| CliError::io(path, e))?);
    write_trace(&mut f, outputs, format, meta).map_err(|e| CliError::io(path, e))?;
    f.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_json_file(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use piot_core::Kernel;

    fn output() -> ChainOutput {
        ChainOutput {
            samples: vec![
                Kernel::from_rows(&[[0.5, 0.25], [0.125, 1.0]]).unwrap(),
                Kernel::from_rows(&[[0.1, 0.2], [0.3, 0.4]]).unwrap(),
            ],
            acceptance_rate: 0.5,
            trace_row_sums: vec![],
            burn_in_trace: vec![],
            seed_used: 1,
            stream: 0,
            lambda: 1.0,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &[output(), output()], TraceFormat::Csv, &["piot test".into()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# piot test");
        assert_eq!(lines[1], "component,sample,k_1_1,k_1_2,k_2_1,k_2_2");
        assert_eq!(lines[2], "0,0,0.5,0.25,0.125,1");
        assert_eq!(lines.len(), 6);
        assert!(lines[5].starts_with("1,1,0.1,"));
    }

    #[test]
    fn jsonl_records_parse() {
        let mut buf = Vec::new();
        write_trace(&mut buf, &[output()], TraceFormat::Jsonl, &[]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let rec: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert_eq!(rec["sample"], 1);
        assert_eq!(rec["kernel"][1][0], 0.3);
    }
}
