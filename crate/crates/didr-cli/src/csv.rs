//! CSV emission and parsing. Numbers are written with Rust's shortest
//! round-trip float formatting (up to 17 significant digits), so
//! `parse(emit(x))` reproduces every value exactly. Comma-separated,
//! header row, newline-terminated.

use didr_core::ctrw::EnsembleStats;
use didr_core::dde::{EpidemicState, Trajectory};
use didr_core::metrics::TrajectoryMetrics;
use didr_core::sir::SteadyState;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: {value:?} is not a number")]
    BadNumber { line: usize, value: String },
    #[error("missing header row")]
    MissingHeader,
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> io::Result<()> {
    write_trajectory_decimated(path, traj, 1)
}

/// Write every `stride`-th recorded row (always including the last).
pub fn write_trajectory_decimated(path: &Path, traj: &Trajectory, stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    let last = traj.len() - 1;
    let mut out = String::with_capacity(traj.len() / stride * 64 + 80);
    out.push_str("t,S,I,R\n");
    for k in (0..traj.len()).step_by(stride) {
        let state = &traj.states()[k];
        writeln!(
            out,
            "{},{},{},{}",
            traj.times()[k],
            state.s,
            state.i,
            state.r
        )
        .unwrap();
    }
    if !last.is_multiple_of(stride) {
        let state = &traj.states()[last];
        writeln!(
            out,
            "{},{},{},{}",
            traj.times()[last],
            state.s,
            state.i,
            state.r
        )
        .unwrap();
    }
    fs::write(path, out)
}

/// Parse a trajectory CSV back into (times, states).
pub fn parse_trajectory(text: &str) -> Result<(Vec<f64>, Vec<EpidemicState>), CsvError> {
    let mut lines = text.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CsvError::MissingHeader);
    };
    if header != "t,S,I,R" {
        return Err(CsvError::MissingHeader);
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(CsvError::FieldCount {
                line: idx + 1,
                expected: 4,
                found: fields.len(),
            });
        }
        let mut v = [0.0f64; 4];
        for (j, f) in fields.iter().enumerate() {
            v[j] = f.parse().map_err(|_| CsvError::BadNumber {
                line: idx + 1,
                value: (*f).to_string(),
            })?;
        }
        times.push(v[0]);
        states.push(EpidemicState::new(v[1], v[2], v[3]));
    }
    Ok((times, states))
}

pub fn write_metrics(path: &Path, rows: &[(f64, TrajectoryMetrics)]) -> io::Result<()> {
    let mut out = String::new();
    out.push_str("param_value,peak_value,peak_time,local_maxima_count,sustain_duration\n");
    for (value, m) in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            value, m.peak_value, m.peak_time, m.local_maxima_count, m.sustain_duration
        )
        .unwrap();
    }
    fs::write(path, out)
}

pub fn write_steady(path: &Path, rows: &[SteadyState], endemic_exists: bool) -> io::Result<()> {
    let mut out = String::new();
    out.push_str("kind,S_star,I_star,R_star,endemic_exists\n");
    for ss in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            ss.kind.name(),
            ss.s_star,
            ss.i_star,
            ss.r_star,
            endemic_exists
        )
        .unwrap();
    }
    fs::write(path, out)
}

pub fn write_ensemble(path: &Path, stats: &EnsembleStats) -> io::Result<()> {
    let mut out = String::with_capacity(stats.times.len() * 96 + 64);
    out.push_str("t,S_mean,I_mean,R_mean,S_se,I_se,R_se\n");
    for k in 0..stats.times.len() {
        let m = &stats.mean[k];
        let e = &stats.stderr[k];
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            stats.times[k], m.s, m.i, m.r, e.s, e.i, e.r
        )
        .unwrap();
    }
    fs::write(path, out)
}

/// Side-by-side mean-field trajectory and ensemble mean on the ensemble's
/// time grid.
pub fn write_comparison(
    path: &Path,
    times: &[f64],
    dde: &[EpidemicState],
    stats: &EnsembleStats,
) -> io::Result<()> {
    let mut out = String::with_capacity(times.len() * 96 + 64);
    out.push_str("t,S_dde,I_dde,R_dde,S_mean,I_mean,R_mean\n");
    for k in 0..times.len() {
        let d = &dde[k];
        let m = &stats.mean[k];
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            times[k], d.s, d.i, d.r, m.s, m.i, m.r
        )
        .unwrap();
    }
    fs::write(path, out)
}

/// Table of the distribution functions: t, phi, psi, rho.
pub fn write_dexp_table(path: &Path, rows: &[(f64, f64, f64, f64)]) -> io::Result<()> {
    let mut out = String::with_capacity(rows.len() * 64 + 16);
    out.push_str("t,phi,psi,rho\n");
    for (t, phi, psi, rho) in rows {
        writeln!(out, "{},{},{},{}", t, phi, psi, rho).unwrap();
    }
    fs::write(path, out)
}
