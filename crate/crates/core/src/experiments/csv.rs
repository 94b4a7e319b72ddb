//! CSV persistence. Floats are written with 17 significant digits, so parsing
//! a file back reproduces every value bit for bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{ExperimentError, TraceRecord};
use crate::dynamics::SwarmState;
use crate::metrics::MetricSeries;

pub const METRICS_HEADER: [&str; 4] = ["t", "phi", "d_theta", "weak_connected"];
pub const STATES_HEADER: [&str; 5] = ["t", "agent", "x1", "x2", "theta"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, ExperimentError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| ExperimentError::io(parent, e))?;
    }
    let f = File::create(path).map_err(|e| ExperimentError::io(path, e))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(f)))
}

fn csv_err(path: &Path, e: csv::Error) -> ExperimentError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => ExperimentError::io(path, io),
        other => ExperimentError::Csv {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<(), ExperimentError> {
    let mut inner = w.into_inner().map_err(|e| ExperimentError::io(path, e.into_error()))?;
    inner.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn write_metrics(series: &MetricSeries, path: &Path) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(METRICS_HEADER).map_err(|e| csv_err(path, e))?;
    for i in 0..series.len() {
        w.write_record([
            series.t[i].to_string(),
            fmt_f64(series.phi[i]),
            fmt_f64(series.d_theta[i]),
            u8::from(series.weak_connected[i]).to_string(),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

fn reader(path: &Path, header: &[&str]) -> Result<csv::Reader<File>, ExperimentError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let got = r.headers().map_err(|e| csv_err(path, e))?;
    if got.iter().ne(header.iter().copied()) {
        return Err(ExperimentError::Csv {
            path: path.to_path_buf(),
            message: format!("expected header {}, got {}", header.join(","), got.iter().collect::<Vec<_>>().join(",")),
        });
    }
    Ok(r)
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize) -> Result<T, ExperimentError> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| ExperimentError::Csv {
            path: path.to_path_buf(),
            message: format!("bad field {i} in row {:?}", rec.position().map(|p| p.line())),
        })
}

pub fn read_metrics(path: &Path) -> Result<MetricSeries, ExperimentError> {
    let mut r = reader(path, &METRICS_HEADER)?;
    let mut s = MetricSeries::default();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        s.t.push(field(path, &rec, 0)?);
        s.phi.push(field(path, &rec, 1)?);
        s.d_theta.push(field(path, &rec, 2)?);
        s.weak_connected.push(field::<u8>(path, &rec, 3)? != 0);
    }
    Ok(s)
}

pub fn write_states(states: &[SwarmState], path: &Path) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(STATES_HEADER).map_err(|e| csv_err(path, e))?;
    for s in states {
        for (i, (p, th)) in s.positions.iter().zip(&s.headings).enumerate() {
            w.write_record([s.t.to_string(), i.to_string(), fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(*th)])
                .map_err(|e| csv_err(path, e))?;
        }
    }
    finish(path, w)
}

pub fn read_states(path: &Path) -> Result<Vec<SwarmState>, ExperimentError> {
    let mut r = reader(path, &STATES_HEADER)?;
    let mut out: Vec<SwarmState> = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let t: usize = field(path, &rec, 0)?;
        let p = [field(path, &rec, 2)?, field(path, &rec, 3)?];
        let th = field(path, &rec, 4)?;
        match out.last_mut() {
            Some(s) if s.t == t => {
                s.positions.push(p);
                s.headings.push(th);
            }
            _ => out.push(SwarmState {
                t,
                positions: vec![p],
                headings: vec![th],
            }),
        }
    }
    Ok(out)
}

/// Per-seed summary, written after every seed has finished.
pub fn write_index(records: &[TraceRecord], with_states: bool, path: &Path) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(["seed", "metrics", "states", "samples", "in_target_at_horizon"])
        .map_err(|e| csv_err(path, e))?;
    let mut sorted: Vec<&TraceRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.seed);
    for r in sorted {
        let states = if with_states {
            format!("states_seed{}.csv", r.seed)
        } else {
            String::new()
        };
        let target = r.in_target_at_horizon.map_or(String::new(), |b| u8::from(b).to_string());
        w.write_record([
            r.seed.to_string(),
            format!("metrics_seed{}.csv", r.seed),
            states,
            r.metrics.len().to_string(),
            target,
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

/// Generic numeric table with a header row.
pub fn write_table(header: &[String], rows: &[Vec<f64>], int_first: bool, path: &Path) -> Result<(), ExperimentError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let rec: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(i, &x)| if i == 0 && int_first { (x as u64).to_string() } else { fmt_f64(x) })
            .collect();
        w.write_record(&rec).map_err(|e| csv_err(path, e))?;
    }
    finish(path, w)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        for x in [0.1, 1.0 / 3.0, -2.5e-300, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }
}
