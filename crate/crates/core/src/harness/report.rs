use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::ReplicationResult;
use super::generator::GeneratorKind;
use super::stats::SlopeFit;
use crate::error::{Error, Result};

/// Aggregates over the `M` replications at one sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportRow {
    pub n: u64,
    pub reps: usize,
    /// Grand average `RQ_{M,N}`.
    pub mean: f64,
    pub std: f64,
    /// Mean wall time of one replication.
    pub time_s: f64,
    /// `std × time_s`.
    pub efficiency: f64,
    pub invalid_paths: u64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub generator: GeneratorKind,
    pub model: String,
    pub reps: usize,
    pub rows: Vec<ReportRow>,
    /// `None` when fewer than three sizes have a positive std.
    pub fit: Option<SlopeFit>,
    pub replications: Vec<ReplicationResult>,
}

impl ConvergenceReport {
    pub fn row(&self, n: u64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.n == n)
    }

    /// `θ_N^m` for `m = 0..M`.
    pub fn estimates(&self, n: u64) -> Vec<f64> {
        let mut v: Vec<&ReplicationResult> = self.replications.iter().filter(|r| r.n == n).collect();
        v.sort_by_key(|r| r.replication);
        v.into_iter().map(|r| r.estimate).collect()
    }

    /// Bitwise equality of everything except wall-clock timings.
    pub fn same_estimates(&self, other: &ConvergenceReport) -> bool {
        let rows = self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.n == b.n
                    && a.reps == b.reps
                    && a.invalid_paths == b.invalid_paths
                    && a.mean.to_bits() == b.mean.to_bits()
                    && a.std.to_bits() == b.std.to_bits()
            });
        let reps = self.replications.len() == other.replications.len()
            && self.replications.iter().zip(&other.replications).all(|(a, b)| {
                a.replication == b.replication
                    && a.n == b.n
                    && a.invalid_paths == b.invalid_paths
                    && a.estimate.to_bits() == b.estimate.to_bits()
            });
        let fit = match (&self.fit, &other.fit) {
            (Some(a), Some(b)) => a.slope.to_bits() == b.slope.to_bits() && a.residual.to_bits() == b.residual.to_bits(),
            (None, None) => true,
            _ => false,
        };
        self.generator == other.generator && self.model == other.model && rows && reps && fit
    }
}

/// One line of the main report CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub generator: String,
    pub model: String,
    #[serde(rename = "N")]
    pub n: u64,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean: f64,
    pub std: f64,
    pub time_s: f64,
    pub efficiency: f64,
}

/// One line of the summary CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRecord {
    pub generator: String,
    pub model: String,
    pub slope: Option<f64>,
    pub residual: Option<f64>,
}

#[derive(Serialize)]
struct RowOut<'a> {
    generator: &'a str,
    model: &'a str,
    #[serde(rename = "N")]
    n: u64,
    #[serde(rename = "M")]
    m: usize,
    mean: String,
    std: String,
    time_s: String,
    efficiency: String,
}

#[derive(Serialize)]
struct SummaryOut<'a> {
    generator: &'a str,
    model: &'a str,
    slope: String,
    residual: String,
}

/// 12 significant digits.
fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// `report.csv` → `report_summary.csv`, next to it.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}_summary.{}", ext.to_string_lossy()),
        None => format!("{stem}_summary"),
    };
    path.with_file_name(name)
}

fn csv_writer(path: &Path, header: &[&str]) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(w)
}

/// Writes one row per (generator, N) to `path`, and the fitted slopes to
/// [`summary_path`]`(path)`.
pub fn write_report(reports: &[ConvergenceReport], path: &Path) -> Result<()> {
    let csv_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Csv { path: p, source }
    };
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| Error::Io { path: p, source }
    };

    let mut w = csv_writer(path, &["generator", "model", "N", "M", "mean", "std", "time_s", "efficiency"])?;
    for r in reports {
        for row in &r.rows {
            w.serialize(RowOut {
                generator: r.generator.name(),
                model: &r.model,
                n: row.n,
                m: row.reps,
                mean: sig12(row.mean),
                std: sig12(row.std),
                time_s: sig12(row.time_s),
                efficiency: sig12(row.efficiency),
            })
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(io_err(path))?;

    let spath = summary_path(path);
    let mut w = csv_writer(&spath, &["generator", "model", "slope", "residual"])?;
    for r in reports {
        let (slope, residual) = match r.fit {
            Some(f) => (sig12(f.slope), sig12(f.residual)),
            None => (String::new(), String::new()),
        };
        w.serialize(SummaryOut {
            generator: r.generator.name(),
            model: &r.model,
            slope,
            residual,
        })
        .map_err(csv_err(&spath))?;
    }
    w.flush().map_err(io_err(&spath))?;
    Ok(())
}

fn read_records<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut rdr = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            r.map_err(|e| Error::Parse {
                line: i + 2,
                message: format!("{}: {e}", path.display()),
            })
        })
        .collect()
}

/// Reads a file written by [`write_report`].
pub fn read_report(path: &Path) -> Result<Vec<ReportRecord>> {
    read_records(path)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRecord>> {
    read_records(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> ConvergenceReport {
        let rows = vec![
            ReportRow {
                n: 1024,
                reps: 3,
                mean: 0.123_456_789_012_345_6,
                std: 1.0 / 3.0,
                time_s: 2.5e-4,
                efficiency: 1.0 / 3.0 * 2.5e-4,
                invalid_paths: 0,
            },
            ReportRow {
                n: 2048,
                reps: 3,
                mean: -7.654_321e10,
                std: 0.0,
                time_s: 5e-4,
                efficiency: 0.0,
                invalid_paths: 0,
            },
        ];
        ConvergenceReport {
            generator: GeneratorKind::SobolGray,
            model: "libor".into(),
            reps: 3,
            rows,
            fit: Some(SlopeFit {
                slope: -0.912_345_678_901_23,
                intercept: 1.0,
                residual: 0.01,
                points: 2,
            }),
            replications: vec![],
        }
    }

    fn close12(a: f64, b: f64) -> bool {
        a == b || (a - b).abs() <= 5e-12 * a.abs().max(b.abs())
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.csv");
        let r = report();
        write_report(std::slice::from_ref(&r), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("generator,model,N,M,mean,std,time_s,efficiency\n"));
        let back = read_report(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (rec, row) in back.iter().zip(&r.rows) {
            assert_eq!(rec.generator, "sobol-gray");
            assert_eq!(rec.model, "libor");
            assert_eq!(rec.n, row.n);
            assert_eq!(rec.m, 3);
            assert!(close12(rec.mean, row.mean), "{} {}", rec.mean, row.mean);
            assert!(close12(rec.std, row.std));
            assert!(close12(rec.time_s, row.time_s));
            assert!(close12(rec.efficiency, row.efficiency));
        }
        let summary = read_summary(&dir.path().join("report_summary.csv")).unwrap();
        assert_eq!(summary.len(), 1);
        assert!(close12(summary[0].slope.unwrap(), -0.912_345_678_901_23));
    }

    #[test]
    fn empty_grid_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        let mut r = report();
        r.rows.clear();
        r.fit = None;
        write_report(&[r], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "generator,model,N,M,mean,std,time_s,efficiency\n");
        let summary = read_summary(&dir.path().join("empty_summary.csv")).unwrap();
        assert_eq!(summary[0].slope, None);
    }

    #[test]
    fn io_errors_name_the_path() {
        let err = write_report(&[report()], Path::new("/nonexistent-dir/x.csv")).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/x.csv"), "{err}");
    }

    #[test]
    fn summary_names() {
        assert_eq!(summary_path(Path::new("out/report.csv")), Path::new("out/report_summary.csv"));
        assert_eq!(summary_path(Path::new("r")), Path::new("r_summary"));
    }
}
