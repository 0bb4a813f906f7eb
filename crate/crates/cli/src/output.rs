use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use execopt::{SolverReport, Strategy};
use serde::Serialize;

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

pub fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// Serializes `rows` with a header row taken from the field names.
pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct ProfileRow {
    i: usize,
    t_mid: f64,
    v_i: f64,
    volume_i: f64,
}

pub fn write_profile(path: &Path, s: &Strategy) -> Result<()> {
    let dt = s.grid.dt();
    let rows: Vec<ProfileRow> = s
        .rates
        .iter()
        .enumerate()
        .map(|(i, &v)| ProfileRow {
            i,
            t_mid: s.grid.midpoint(i),
            v_i: v,
            volume_i: v * dt,
        })
        .collect();
    write_rows(path, &rows)
}

#[derive(Serialize)]
struct StartRow {
    start_id: usize,
    converged: bool,
    cost: f64,
    stationarity: Option<f64>,
    iterations: usize,
}

pub fn write_starts(path: &Path, starts: &[SolverReport]) -> Result<()> {
    let rows: Vec<StartRow> = starts
        .iter()
        .enumerate()
        .map(|(start_id, r)| StartRow {
            start_id,
            converged: r.converged(),
            cost: r.cost,
            stationarity: r.metadata.stationarity,
            iterations: r.metadata.iterations,
        })
        .collect();
    write_rows(path, &rows)
}
