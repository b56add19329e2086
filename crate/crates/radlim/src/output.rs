//! Result persistence: CSV series, binary state snapshots, config hashing.
//!
//! Every CSV starts with a `# config_hash=<hex>` comment line followed by a
//! header row; floats are printed with 17 significant digits so reruns are
//! byte-comparable. Snapshots are flat little-endian binary blocks with a
//! JSON sidecar (format documented in `book/src/formats.md`).

use crate::diagnostics::{EnergyRecord, EntropyRecord};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::kinetic::StepReport;
use sha2::{Digest, Sha256};
use std::io::{BufWriter, Read, Write};
use std::path::Path;

/// Magic bytes of the snapshot format, version 1.
pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RLSNAP01";

/// Full 17-significant-digit float formatting used in all CSV output.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn config_hash(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push_str(&format!("{b:02x}"));
    }
    s
}

/// Line-oriented CSV writer with the hash comment and header.
pub struct CsvWriter {
    out: BufWriter<std::fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, hash: &str, header: &[&str]) -> Result<Self> {
        let file = std::fs::File::create(path)?;
        let mut out = BufWriter::new(file);
        writeln!(out, "# config_hash={hash}")?;
        writeln!(out, "{}", header.join(","))?;
        Ok(Self { out })
    }

    pub fn write_row(&mut self, values: &[f64]) -> Result<()> {
        let row: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(self.out, "{}", row.join(","))?;
        Ok(())
    }

    pub fn write_mixed_row(&mut self, values: &[String]) -> Result<()> {
        writeln!(self.out, "{}", values.join(","))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub const ENERGY_HEADER: &[&str] = &[
    "time",
    "energy_T5",
    "energy_psi2",
    "dissipation_grad",
    "dissipation_relax",
    "boundary_psi_out",
    "boundary_t_robin",
    "residual",
];

pub const ENTROPY_HEADER: &[&str] = &[
    "time",
    "H",
    "H_T_part",
    "H_psi_part",
    "error_L4_4",
    "error_L2_2",
];

pub const STEPS_HEADER: &[&str] = &["time", "dt_used", "newton_iters_max", "clamped_cells"];

pub fn energy_row(r: &EnergyRecord, residual: f64) -> Vec<f64> {
    vec![
        r.time,
        r.energy_t5,
        r.energy_psi2,
        r.dissipation_grad,
        r.dissipation_relax,
        r.boundary_psi_out,
        r.boundary_t_robin,
        residual,
    ]
}

pub fn entropy_row(r: &EntropyRecord) -> Vec<f64> {
    vec![
        r.time,
        r.h,
        r.h_t_part,
        r.h_psi_part,
        r.error_l4_4,
        r.error_l2_2,
    ]
}

pub fn steps_row(time: f64, r: &StepReport) -> Vec<String> {
    vec![
        fmt_f64(time),
        fmt_f64(r.dt_used),
        r.newton_iters_max.to_string(),
        r.clamped_cells.to_string(),
    ]
}

/// In-memory form of a snapshot.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub grid: SpatialGrid,
    pub time: f64,
    pub temperature: Vec<f64>,
    /// Per-(cell, ordinate) intensity; empty for limit-solver snapshots.
    pub intensity: Vec<f64>,
    pub n_ord: usize,
}

/// Writes the binary block and a JSON sidecar describing it.
pub fn write_snapshot(path: &Path, snap: &Snapshot, hash: &str) -> Result<()> {
    let grid = &snap.grid;
    let mut buf: Vec<u8> = Vec::new();
    buf.extend_from_slice(SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for a in 0..3 {
        buf.extend_from_slice(&(grid.cells()[a] as u32).to_le_bytes());
    }
    for a in 0..3 {
        buf.extend_from_slice(&grid.extent()[a].to_le_bytes());
    }
    for a in 0..3 {
        buf.push(grid.periodic()[a] as u8);
    }
    buf.push(0); // padding
    buf.extend_from_slice(&(snap.n_ord as u32).to_le_bytes());
    buf.extend_from_slice(&snap.time.to_le_bytes());
    for &v in &snap.temperature {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for &v in &snap.intensity {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, &buf)?;

    let sidecar = serde_json::json!({
        "format": "RLSNAP01",
        "kind": if snap.n_ord == 0 { "limit" } else { "kinetic" },
        "time": snap.time,
        "dim": grid.dim(),
        "cells": grid.cells()[..grid.dim()].to_vec(),
        "extent": grid.extent()[..grid.dim()].to_vec(),
        "periodic": grid.periodic()[..grid.dim()].to_vec(),
        "n_ordinates": snap.n_ord,
        "config_hash": hash,
    });
    let json_path = path.with_extension("json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&sidecar).unwrap())?;
    Ok(())
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut file = std::fs::File::open(path)?;
    let mut buf = Vec::new();
    file.read_to_end(&mut buf)?;
    let mut off = 0usize;
    let take = |off: &mut usize, n: usize| -> Result<&[u8]> {
        if *off + n > buf.len() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::UnexpectedEof,
                "snapshot truncated",
            )));
        }
        let s = &buf[*off..*off + n];
        *off += n;
        Ok(s)
    };
    let magic = take(&mut off, 8)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::Config(format!(
            "{} is not a snapshot file",
            path.display()
        )));
    }
    let dim = u32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap()) as usize;
    let mut cells = [0usize; 3];
    for c in &mut cells {
        *c = u32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap()) as usize;
    }
    let mut extent = [0f64; 3];
    for e in &mut extent {
        *e = f64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap());
    }
    let mut periodic = [false; 3];
    for p in &mut periodic {
        *p = take(&mut off, 1)?[0] != 0;
    }
    let _pad = take(&mut off, 1)?;
    let n_ord = u32::from_le_bytes(take(&mut off, 4)?.try_into().unwrap()) as usize;
    let time = f64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap());

    let grid = SpatialGrid::new(
        dim,
        &cells[..dim],
        &extent[..dim],
        &periodic[..dim],
    )?;
    let n_cells = grid.n_cells();
    let mut temperature = Vec::with_capacity(n_cells);
    for _ in 0..n_cells {
        temperature.push(f64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap()));
    }
    let mut intensity = Vec::with_capacity(n_cells * n_ord);
    for _ in 0..n_cells * n_ord {
        intensity.push(f64::from_le_bytes(take(&mut off, 8)?.try_into().unwrap()));
    }
    Ok(Snapshot {
        grid,
        time,
        temperature,
        intensity,
        n_ord,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        let back: f64 = s.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);
    }

    #[test]
    fn config_hash_is_stable() {
        let h1 = config_hash("abc");
        let h2 = config_hash("abc");
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 64);
        assert_ne!(h1, config_hash("abd"));
    }

    #[test]
    fn csv_carries_hash_comment_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("energy.csv");
        let mut w = CsvWriter::create(&path, "deadbeef", ENERGY_HEADER).unwrap();
        w.write_row(&[0.0; 8]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "# config_hash=deadbeef");
        assert!(lines.next().unwrap().starts_with("time,energy_T5,"));
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snap_0.bin");
        let grid = make_grid(1, &[4], &[1.0], &[true]).unwrap();
        let snap = Snapshot {
            grid: grid.clone(),
            time: 0.125,
            temperature: vec![1.0, 2.0, 3.0, std::f64::consts::E],
            intensity: (0..8).map(|i| i as f64 * 0.5).collect(),
            n_ord: 2,
        };
        write_snapshot(&path, &snap, "cafe").unwrap();
        let back = read_snapshot(&path).unwrap();
        assert_eq!(back.grid, grid);
        assert_eq!(back.time, snap.time);
        assert_eq!(back.temperature, snap.temperature);
        assert_eq!(back.intensity, snap.intensity);
        assert_eq!(back.n_ord, 2);
        assert!(path.with_extension("json").exists());
    }

    #[test]
    fn read_rejects_non_snapshot_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.bin");
        std::fs::write(&path, b"not a snapshot").unwrap();
        assert!(read_snapshot(&path).is_err());
    }
}
