//! Parameter sweeps and their CSV form.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Linear,
    Log,
}

/// Evenly spaced grid in the chosen scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub scale: Scale,
}

impl Grid {
    pub fn new(start: f64, stop: f64, points: usize, scale: Scale) -> Result<Self> {
        if points < 2 {
            return Err(Error::domain("points", format!("need at least 2, got {points}")));
        }
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(Error::domain(
                "start",
                format!("need start < stop, got {start} and {stop}"),
            ));
        }
        if scale == Scale::Log && start <= 0.0 {
            return Err(Error::domain("start", "log scale needs positive endpoints"));
        }
        Ok(Self {
            start,
            stop,
            points,
            scale,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.points - 1;
        (0..self.points)
            .map(|i| {
                if i == n {
                    return self.stop;
                }
                let t = i as f64 / n as f64;
                match self.scale {
                    Scale::Linear => self.start + (self.stop - self.start) * t,
                    Scale::Log => self.start * (self.stop / self.start).powf(t),
                }
            })
            .collect()
    }
}

/// A table of numbers with a provenance line.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub version: String,
    pub config_hash: String,
    /// Column names with units, e.g. `L [1/E]`.
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Evaluates `row` at every grid value on `jobs` threads. Rows come back in
/// grid order; the first failing grid point (in grid order) is reported.
pub fn evaluate_rows<F>(values: &[f64], jobs: usize, row: F) -> Result<Vec<Vec<f64>>>
where
    F: Fn(f64) -> Result<Vec<f64>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<f64>>> = pool.install(|| values.par_iter().map(|&x| row(x)).collect());
    results.into_iter().collect()
}

fn format_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header_line(version: &str, hash: &str) -> String {
    format!("# udw-delocal v{version}, config hash {hash}")
}

/// Writes the provenance line, the header and one record per row, CRLF
/// terminated.
pub fn write_csv<W: Write>(result: &SweepResult, out: W) -> std::io::Result<()> {
    let mut out = out;
    write!(out, "{}\r\n", header_line(&result.version, &result.config_hash))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(&result.columns)?;
    for row in &result.rows {
        w.write_record(row.iter().map(|&x| format_value(x)))?;
    }
    w.flush()
}

pub fn to_csv_string(result: &SweepResult) -> String {
    let mut buf = Vec::new();
    write_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut writer = std::io::BufWriter::new(file);
    write_csv(result, &mut writer).map_err(io_err)?;
    writer.flush().map_err(io_err)
}

pub fn parse_csv(text: &str) -> Result<SweepResult> {
    let bad = |msg: &str| Error::Config(format!("csv: {msg}"));
    let (first, rest) = text.split_once('\n').ok_or_else(|| bad("missing provenance line"))?;
    let first = first.trim_end_matches('\r');
    let meta = first
        .strip_prefix("# udw-delocal v")
        .ok_or_else(|| bad("provenance line must start with `# udw-delocal v`"))?;
    let (version, hash) = meta
        .split_once(", config hash ")
        .ok_or_else(|| bad("provenance line lacks the config hash"))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(rest.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| bad(&e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| bad(&e.to_string()))?;
        let row = record
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(&format!("not a number: `{s}`"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != columns.len() {
            return Err(bad("ragged row"));
        }
        rows.push(row);
    }
    Ok(SweepResult {
        version: version.to_string(),
        config_hash: hash.to_string(),
        columns,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SweepResult {
        SweepResult {
            version: VERSION.to_string(),
            config_hash: "ab12".into(),
            columns: vec!["L [1/E]".into(), "spont_rate [E]".into()],
            rows: vec![
                vec![1.0, 0.1 + 0.2],
                vec![std::f64::consts::PI, -1.234_567_890_123_456_7e-300],
                vec![f64::MAX, f64::MIN_POSITIVE],
            ],
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let r = sample();
        let text = to_csv_string(&r);
        assert!(text.starts_with("# udw-delocal v0.1.0, config hash ab12\r\n"));
        assert_eq!(parse_csv(&text).unwrap(), r);
    }

    #[test]
    fn header_only() {
        let r = SweepResult {
            rows: vec![],
            ..sample()
        };
        let text = to_csv_string(&r);
        assert_eq!(text.lines().count(), 2);
        assert_eq!(parse_csv(&text).unwrap(), r);
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_value(0.1), "1.0000000000000001e-1");
        assert_eq!(format_value(2.0), "2.0000000000000000e0");
    }

    #[test]
    fn emit_reports_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("no/such/dir/out.csv");
        match emit_csv(&sample(), &missing) {
            Err(Error::Io { path, .. }) => assert!(path.contains("out.csv")),
            other => panic!("{other:?}"),
        }
        let ok = dir.path().join("out.csv");
        emit_csv(&sample(), &ok).unwrap();
        let back = parse_csv(&std::fs::read_to_string(ok).unwrap()).unwrap();
        assert_eq!(back, sample());
    }

    #[test]
    fn grid_validation_and_values() {
        assert!(Grid::new(1.0, 1.0, 5, Scale::Linear).is_err());
        assert!(Grid::new(0.0, 1.0, 5, Scale::Log).is_err());
        assert!(Grid::new(0.0, 1.0, 1, Scale::Linear).is_err());
        let g = Grid::new(1e2, 1e4, 3, Scale::Log).unwrap().values();
        assert_eq!(g.len(), 3);
        assert_eq!(g[0], 1e2);
        assert!((g[1] - 1e3).abs() < 1e-9);
        assert_eq!(g[2], 1e4);
    }

    #[test]
    fn row_order_independent_of_jobs() {
        let values: Vec<f64> = (0..64).map(f64::from).collect();
        let f = |x: f64| Ok(vec![x, (x * 0.37).sin()]);
        let one = evaluate_rows(&values, 1, f).unwrap();
        let many = evaluate_rows(&values, 8, f).unwrap();
        assert_eq!(one, many);
    }

    #[test]
    fn first_failure_in_grid_order() {
        let values: Vec<f64> = (0..32).map(f64::from).collect();
        let f = |x: f64| {
            if x >= 5.0 {
                Err(Error::Config(format!("bad {x}")))
            } else {
                Ok(vec![x])
            }
        };
        match evaluate_rows(&values, 8, f) {
            Err(Error::Config(m)) => assert_eq!(m, "bad 5"),
            other => panic!("{other:?}"),
        }
    }
}
