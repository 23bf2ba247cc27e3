//! CSV and JSON-lines writers.

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use super::{SweepPoint, SweepResult, ENV_OUT_DIR};
use crate::dynamics::CoolingTrajectory;
use crate::error::Result;
use crate::model::Level;
use crate::spectra::Spectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryRow {
    pub t: f64,
    pub nbar: f64,
    pub pop_g: f64,
    pub pop_d: f64,
    pub pop_r: f64,
    pub pop_e: f64,
    pub tail: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub nss_numeric: Option<f64>,
    pub nss_analytic: f64,
    pub w_numeric: Option<f64>,
    pub w_resolvent: Option<f64>,
    pub w_closed_form: Option<f64>,
    pub status: String,
    pub provenance: String,
}

impl From<&SweepPoint> for SweepRow {
    fn from(p: &SweepPoint) -> Self {
        Self {
            axis_value: p.axis_value,
            nss_numeric: p.nss_numeric,
            nss_analytic: p.nss_analytic,
            w_numeric: p.w_numeric,
            w_resolvent: p.w_resolvent,
            w_closed_form: p.w_closed_form,
            status: p.status.clone(),
            provenance: p.provenance.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumRow {
    pub delta_r: f64,
    pub absorption: f64,
}

pub fn trajectory_rows(t: &CoolingTrajectory) -> Vec<TrajectoryRow> {
    let pop = |l: Level, k: usize| t.pops[l.index()][k];
    (0..t.len())
        .map(|k| TrajectoryRow {
            t: t.times[k],
            nbar: t.nbar[k],
            pop_g: pop(Level::G, k),
            pop_d: pop(Level::D, k),
            pop_r: pop(Level::R, k),
            pop_e: pop(Level::E, k),
            tail: t.truncation_tail[k],
        })
        .collect()
}

pub fn sweep_rows(s: &SweepResult) -> Vec<SweepRow> {
    s.points.iter().map(SweepRow::from).collect()
}

pub fn spectrum_rows(s: &Spectrum) -> Vec<SpectrumRow> {
    s.detunings
        .iter()
        .zip(&s.absorption)
        .map(|(&delta_r, &absorption)| SpectrumRow { delta_r, absorption })
        .collect()
}

/// Writes rows as CSV with a header row.
pub fn write_csv<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write, R: Serialize>(mut out: W, rows: &[R]) -> Result<()> {
    for r in rows {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Output directory from the environment, defaulting to the working
/// directory.
pub fn out_dir() -> PathBuf {
    std::env::var_os(ENV_OUT_DIR).map_or_else(|| PathBuf::from("."), PathBuf::from)
}

/// Writes `<stem>.csv`, and `<stem>.jsonl` when `jsonl` is set, into
/// [`out_dir`]. Returns the paths written.
pub fn save<R: Serialize>(stem: &str, rows: &[R], jsonl: bool) -> Result<Vec<PathBuf>> {
    let dir = out_dir();
    std::fs::create_dir_all(&dir)?;
    let csv_path = dir.join(format!("{stem}.csv"));
    write_csv(std::io::BufWriter::new(std::fs::File::create(&csv_path)?), rows)?;
    let mut paths = vec![csv_path];
    if jsonl {
        let p = dir.join(format!("{stem}.jsonl"));
        write_jsonl(std::io::BufWriter::new(std::fs::File::create(&p)?), rows)?;
        paths.push(p);
    }
    Ok(paths)
}
