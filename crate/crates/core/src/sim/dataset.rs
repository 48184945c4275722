//! Dataset CSV (`k,x1..xn,wp1..wpm,zp1..zpp`, one row per time step, the
//! last row carrying only the final state) and the optional
//! `<stem>.truth.json` ground-truth sidecar.

use std::fs::File;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;

use super::{GroundTruth, NoisyDataset};
use crate::error::{Error, Result};

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("truth.json")
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("{kind:?}"),
        },
    }
}

/// Writes the measured data, plus the sidecar when ground truth is present.
pub fn write_dataset(ds: &NoisyDataset, path: &Path) -> Result<()> {
    let (n, samples) = ds.states.shape();
    let (m, p) = (ds.inputs.nrows(), ds.outputs.nrows());
    if ds.inputs.ncols() + 1 != samples || ds.outputs.ncols() + 1 != samples {
        return Err(Error::Dimension("inputs/outputs must have one column fewer than states".into()));
    }

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(file);
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    header.extend((1..=m).map(|i| format!("wp{i}")));
    header.extend((1..=p).map(|i| format!("zp{i}")));
    w.write_record(&header).map_err(|e| csv_err(path, e))?;

    for k in 0..samples {
        let mut row = vec![k.to_string()];
        row.extend(ds.states.column(k).iter().map(|v| v.to_string()));
        if k + 1 < samples {
            row.extend(ds.inputs.column(k).iter().map(|v| v.to_string()));
            row.extend(ds.outputs.column(k).iter().map(|v| v.to_string()));
        } else {
            row.extend(std::iter::repeat_n(String::new(), m + p));
        }
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    let side = sidecar_path(path);
    match &ds.truth {
        Some(truth) => {
            let json = serde_json::to_string_pretty(truth).map_err(|source| Error::Json {
                path: side.clone(),
                source,
            })?;
            std::fs::write(&side, json).map_err(|e| Error::io(&side, e))?;
        }
        None => {
            if side.exists() {
                std::fs::remove_file(&side).map_err(|e| Error::io(&side, e))?;
            }
        }
    }
    Ok(())
}

fn count_prefixed(header: &[String], prefix: &str, start: usize) -> usize {
    header[start..]
        .iter()
        .take_while(|h| {
            h.strip_prefix(prefix)
                .is_some_and(|rest| !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()))
        })
        .count()
}

/// Reads a dataset CSV and, if present next to it, its ground-truth sidecar.
pub fn read_dataset(path: &Path) -> Result<NoisyDataset> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(file);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if header.first().map(String::as_str) != Some("k") {
        return Err(parse_err(1, "header must start with `k`".into()));
    }
    let n = count_prefixed(&header, "x", 1);
    let m = count_prefixed(&header, "wp", 1 + n);
    let p = count_prefixed(&header, "zp", 1 + n + m);
    if n == 0 || 1 + n + m + p != header.len() {
        return Err(parse_err(1, format!("unrecognised header {header:?}")));
    }

    let mut states: Vec<f64> = Vec::new();
    let mut inputs: Vec<f64> = Vec::new();
    let mut outputs: Vec<f64> = Vec::new();
    let mut final_seen = false;
    let mut rows = 0usize;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != header.len() {
            return Err(parse_err(
                line,
                format!("expected {} columns, found {}", header.len(), rec.len()),
            ));
        }
        if final_seen {
            return Err(parse_err(line, "row after the final (state-only) row".into()));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(line, format!("column {}: {e}", header[i])))
        };
        let k: usize = rec[0]
            .trim()
            .parse()
            .map_err(|e| parse_err(line, format!("column k: {e}")))?;
        if k != rows {
            return Err(parse_err(line, format!("expected k = {rows}, found {k}")));
        }
        for i in 1..=n {
            states.push(num(i)?);
        }
        let io_empty = (1 + n..header.len()).all(|i| rec[i].trim().is_empty());
        if io_empty && m + p > 0 {
            final_seen = true;
        } else {
            for i in 1 + n..1 + n + m {
                inputs.push(num(i)?);
            }
            for i in 1 + n + m..header.len() {
                outputs.push(num(i)?);
            }
        }
        rows += 1;
    }
    if rows < 2 || (m + p > 0 && !final_seen) {
        return Err(parse_err(
            rows as u64 + 1,
            "dataset needs at least two rows and a final state-only row".into(),
        ));
    }

    let states = DMatrix::from_column_slice(n, rows, &states);
    let inputs = DMatrix::from_column_slice(m, rows - 1, &inputs);
    let outputs = DMatrix::from_column_slice(p, rows - 1, &outputs);

    let side = sidecar_path(path);
    let truth = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        Some(serde_json::from_str::<GroundTruth>(&text).map_err(|source| Error::Json { path: side, source })?)
    } else {
        None
    };

    Ok(NoisyDataset {
        states,
        inputs,
        outputs,
        truth,
    })
}
