//! File formats: binary field snapshots, trajectory manifests, shift tables
//! and reduced-mesh lists.
//!
//! Snapshot files carry a fixed header (magic `TROM`, version, dim, cells per
//! axis) followed by the cell averages as little-endian f64 in row-major
//! order. Grid geometry (origin, extent) travels in the text manifests next
//! to the snapshots, not in the binary header.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fv::Trajectory;
use crate::grid::{CartesianGrid, Field};
use crate::sampling::ParamGrid;
use crate::shifts::{CalibrationMode, ShiftTable};

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"TROM";
pub const SNAPSHOT_VERSION: u32 = 1;

pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    w.write_all(&(grid.dim() as u32).to_le_bytes())?;
    w.write_all(&(grid.cells_per_axis() as u32).to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a snapshot and validates its header against the expected grid.
pub fn read_field(path: &Path, grid: &CartesianGrid) -> Result<Field> {
    let show = path.display().to_string();
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::invalid_file(&show, "bad magic"));
    }
    let mut word = [0u8; 4];
    r.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != SNAPSHOT_VERSION {
        return Err(Error::invalid_file(&show, format!("unsupported version {version}")));
    }
    r.read_exact(&mut word)?;
    let dim = u32::from_le_bytes(word) as usize;
    r.read_exact(&mut word)?;
    let n_x = u32::from_le_bytes(word) as usize;
    if dim != grid.dim() || n_x != grid.cells_per_axis() {
        return Err(Error::invalid_file(
            &show,
            format!(
                "grid mismatch: file has dim {dim}, n_x {n_x}; expected dim {}, n_x {}",
                grid.dim(),
                grid.cells_per_axis()
            ),
        ));
    }
    let n = grid.n_cells();
    let mut values = Vec::with_capacity(n);
    let mut buf = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    if r.read(&mut buf)? != 0 {
        return Err(Error::invalid_file(&show, "trailing bytes after cell data"));
    }
    Field::new(*grid, values)
}

fn parse_kv(text: &str, path: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid_file(path, format!("expected key = value, got '{line}'")))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str, path: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| Error::invalid_file(path, format!("missing key '{key}'")))
}

/// Persists a trajectory as one snapshot file per record time plus a
/// `manifest.txt` with the run metadata.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, mu: f64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let grid = traj
        .entries
        .first()
        .map(|(_, f)| *f.grid())
        .ok_or_else(|| Error::config("cannot persist an empty trajectory".to_string()))?;
    let mut manifest = String::new();
    manifest.push_str(&format!("mu = {mu:.17e}\n"));
    manifest.push_str(&format!("dt = {:.17e}\n", traj.meta.dt));
    manifest.push_str(&format!("steps = {}\n", traj.meta.steps));
    manifest.push_str(&format!("cfl_compliant = {}\n", traj.meta.cfl_compliant));
    manifest.push_str(&format!("dim = {}\n", grid.dim()));
    manifest.push_str(&format!("n_x = {}\n", grid.cells_per_axis()));
    manifest.push_str(&format!("origin = {:.17e} {:.17e}\n", grid.origin()[0], grid.origin()[1]));
    manifest.push_str(&format!("extent = {:.17e}\n", grid.extent()));
    let times: Vec<String> = traj.entries.iter().map(|(t, _)| format!("{t:.17e}")).collect();
    manifest.push_str(&format!("times = {}\n", times.join(",")));
    for (k, (_, field)) in traj.entries.iter().enumerate() {
        write_field(&dir.join(format!("step_{k:05}.snap")), field)?;
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

/// Shift table as text: header with the reference sample and mode, then one
/// `t mu c_1 [c_2]` row per sample.
pub fn write_shift_table(path: &Path, table: &ShiftTable, pg: &ParamGrid, dim: usize) -> Result<()> {
    let mut s = String::new();
    let (zt, zm) = pg.sample(table.z_ref());
    s.push_str(&format!("mode = {}\n", table.mode().as_str()));
    s.push_str(&format!("z_ref_index = {}\n", table.z_ref()));
    s.push_str(&format!("z_ref = {zt:.17e} {zm:.17e}\n"));
    s.push_str(&format!("additivity_defect = {:.17e}\n", table.max_additivity_defect()));
    s.push_str(&format!("degenerate = {}\n", table.degenerate_count()));
    for j in 0..table.n_samples() {
        let (t, mu) = pg.sample(j);
        let c = table.shift_to_ref(j);
        if dim == 1 {
            s.push_str(&format!("{t:.17e} {mu:.17e} {:.17e}\n", c[0]));
        } else {
            s.push_str(&format!("{t:.17e} {mu:.17e} {:.17e} {:.17e}\n", c[0], c[1]));
        }
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_shift_table(path: &Path, pg: &ParamGrid, dim: usize) -> Result<ShiftTable> {
    let show = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut header = Vec::new();
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line.contains('=') {
            header.push(line.to_string());
        } else {
            rows.push(line.to_string());
        }
    }
    let header_kv = parse_kv(&header.join("\n"), &show)?;
    let mode = CalibrationMode::parse(lookup(&header_kv, "mode", &show)?)?;
    let z_ref: usize = lookup(&header_kv, "z_ref_index", &show)?
        .parse()
        .map_err(|_| Error::invalid_file(&show, "bad z_ref_index"))?;
    if rows.len() != pg.n_samples() {
        return Err(Error::invalid_file(
            &show,
            format!("expected {} sample rows, found {}", pg.n_samples(), rows.len()),
        ));
    }
    let mut shifts = Vec::with_capacity(rows.len());
    for row in &rows {
        let cells: Vec<f64> = row
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|_| Error::invalid_file(&show, format!("bad number in '{row}'"))))
            .collect::<Result<_>>()?;
        if cells.len() != 2 + dim {
            return Err(Error::invalid_file(&show, format!("expected {} columns, got {}", 2 + dim, cells.len())));
        }
        shifts.push([cells[2], if dim == 2 { cells[3] } else { 0.0 }]);
    }
    ShiftTable::from_values(z_ref, shifts, mode)
}

/// Reduced-mesh list: header (size, reference sample, source hash of the
/// residual matrix) plus one cell id per line.
pub fn write_reduced_mesh(path: &Path, ids: &[usize], z_ref: usize, source_hash: &str) -> Result<()> {
    let mut s = String::new();
    s.push_str(&format!("n = {}\n", ids.len()));
    s.push_str(&format!("z_ref_index = {z_ref}\n"));
    s.push_str(&format!("source_hash = {source_hash}\n"));
    for id in ids {
        s.push_str(&format!("{id}\n"));
    }
    std::fs::write(path, s)?;
    Ok(())
}

pub fn read_reduced_mesh(path: &Path) -> Result<Vec<usize>> {
    let show = path.display().to_string();
    let text = std::fs::read_to_string(path)?;
    let mut n: Option<usize> = None;
    let mut ids = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some((k, v)) = line.split_once('=') {
            if k.trim() == "n" {
                n = Some(v.trim().parse().map_err(|_| Error::invalid_file(&show, "bad n"))?);
            }
            continue;
        }
        ids.push(line.parse::<usize>().map_err(|_| Error::invalid_file(&show, format!("bad cell id '{line}'")))?);
    }
    if let Some(n) = n {
        if n != ids.len() {
            return Err(Error::invalid_file(&show, format!("header says {n} ids, found {}", ids.len())));
        }
    }
    Ok(ids)
}

/// Writes the offline snapshot set: one snapshot per parameter sample plus a
/// manifest listing the sample coordinates.
pub fn write_snapshot_set(dir: &Path, pg: &ParamGrid, fields: &[&Field]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let grid = fields
        .first()
        .map(|f| *f.grid())
        .ok_or_else(|| Error::config("empty snapshot set".to_string()))?;
    let mut manifest = String::new();
    manifest.push_str(&format!("n_samples = {}\n", fields.len()));
    manifest.push_str(&format!("n_t = {}\n", pg.n_t()));
    manifest.push_str(&format!("n_mu = {}\n", pg.n_mu()));
    manifest.push_str(&format!("dim = {}\n", grid.dim()));
    manifest.push_str(&format!("n_x = {}\n", grid.cells_per_axis()));
    manifest.push_str(&format!("origin = {:.17e} {:.17e}\n", grid.origin()[0], grid.origin()[1]));
    manifest.push_str(&format!("extent = {:.17e}\n", grid.extent()));
    for (j, field) in fields.iter().enumerate() {
        let (t, mu) = pg.sample(j);
        manifest.push_str(&format!("sample_{j:04} = {t:.17e} {mu:.17e}\n"));
        write_field(&dir.join(format!("sample_{j:04}.snap")), field)?;
    }
    std::fs::write(dir.join("manifest.txt"), manifest)?;
    Ok(())
}

pub fn read_snapshot_set(dir: &Path, pg: &ParamGrid, grid: &CartesianGrid) -> Result<Vec<Field>> {
    (0..pg.n_samples())
        .map(|j| read_field(&dir.join(format!("sample_{j:04}.snap")), grid))
        .collect()
}
