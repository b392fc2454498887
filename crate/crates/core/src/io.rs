//! Run-directory output: manifests, CSV series, result JSON and the raw
//! field container.
//!
//! All numeric text output is decimal, locale-independent and carries 17
//! significant digits, enough to round-trip any f64 exactly. CSV files
//! are written in one fixed order so that re-running a configuration in
//! sequential mode reproduces them byte for byte.
//!
//! Field container layout (little endian): `n1 n2 n3` as u64, `L1 L2 L3`
//! as f64, then `n1·n2·n3` complex samples as interleaved f64 pairs in
//! row-major order.

use crate::error::{Error, Result};
use crate::grid_spectral::{Field, Grid};
use crate::groundstate::{GammaCurve, GroundStateResult, SolverConfig};
use rustfft::num_complex::Complex64;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

/// Formats an f64 with 17 significant digits, e.g. `-1.2500000000000000e-2`.
pub fn float17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Serializes a boolean as the CSV literals `true`/`false`.
fn bool_str(b: bool) -> &'static str {
    if b {
        "true"
    } else {
        "false"
    }
}

/// Writes the run manifest; one per run directory.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config_echo: &serde_json::Value,
    grid: &Grid,
    wall_clock_seconds: f64,
    outputs: &[&str],
    seed: u64,
) -> Result<PathBuf> {
    let manifest = serde_json::json!({
        "command": command,
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "config": config_echo,
        "grid": {
            "points": grid.points(),
            "half_lengths": grid.half_lengths(),
            "spacing": grid.spacing(),
            "cell_volume": grid.cell_volume(),
        },
        "wall_clock_seconds": wall_clock_seconds,
        "outputs": outputs,
        "seed": seed,
    });
    let path = dir.join("manifest.json");
    let mut f = BufWriter::new(std::fs::File::create(&path)?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    Ok(path)
}

/// Writes the iteration series `iteration,E,Q,residual,mass`.
pub fn write_iteration_csv(dir: &Path, result: &GroundStateResult) -> Result<PathBuf> {
    let path = dir.join("iterations.csv");
    let mut f = BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "iteration,E,Q,residual,mass")?;
    for row in &result.history {
        writeln!(
            f,
            "{},{},{},{},{}",
            row.iteration,
            float17(row.energy),
            float17(row.virial),
            float17(row.residual),
            float17(row.mass)
        )?;
    }
    Ok(path)
}

/// Writes the γ-curve `c,gamma,beta,anisotropy,converged` with the
/// threshold recorded in the header comment line.
pub fn write_gamma_csv(dir: &Path, curve: &GammaCurve) -> Result<PathBuf> {
    let path = dir.join("gamma.csv");
    let mut f = BufWriter::new(std::fs::File::create(&path)?);
    writeln!(f, "# threshold = {}", float17(curve.threshold))?;
    writeln!(f, "c,gamma,beta,anisotropy,converged")?;
    for row in &curve.rows {
        writeln!(
            f,
            "{},{},{},{},{}",
            float17(row.mass),
            float17(row.gamma_estimate),
            float17(row.beta),
            float17(row.anisotropy),
            bool_str(row.converged)
        )?;
    }
    Ok(path)
}

/// Writes the final-state summary JSON for one ground-state run.
pub fn write_result_json(dir: &Path, result: &GroundStateResult) -> Result<PathBuf> {
    let report = &result.report;
    let json = format!(
        "{{\n  \"converged\": {},\n  \"iterations\": {},\n  \"gamma_estimate\": {},\n  \
         \"beta\": {},\n  \"beta_rayleigh\": {},\n  \"residual\": {},\n  \"q_residual\": {},\n  \
         \"anisotropy\": {},\n  \"pohozaev\": {{\"stationarity\": {}, \"multiplier\": {}, \"virial\": {}}},\n  \
         \"report\": {}\n}}\n",
        bool_str(result.converged),
        result.iterations,
        float17(result.gamma_estimate),
        float17(result.beta),
        float17(result.beta_rayleigh),
        float17(result.residual),
        float17(report.q),
        float17(result.anisotropy),
        float17(result.pohozaev_stationarity()),
        float17(result.pohozaev_multiplier()),
        float17(report.q),
        report.to_json()
    );
    let path = dir.join("result.json");
    std::fs::write(&path, json)?;
    Ok(path)
}

/// Writes a field in the raw binary container.
pub fn write_field(path: &Path, field: &Field) -> Result<()> {
    let grid = field.grid();
    let mut f = BufWriter::new(std::fs::File::create(path)?);
    for n in grid.points() {
        f.write_all(&(n as u64).to_le_bytes())?;
    }
    for l in grid.half_lengths() {
        f.write_all(&l.to_le_bytes())?;
    }
    for v in field.values() {
        f.write_all(&v.re.to_le_bytes())?;
        f.write_all(&v.im.to_le_bytes())?;
    }
    Ok(())
}

/// Reads a field written by [`write_field`].
pub fn read_field(path: &Path) -> Result<Field> {
    let mut f = BufReader::new(std::fs::File::open(path)?);
    let mut u64buf = [0u8; 8];
    let mut n = [0usize; 3];
    for slot in &mut n {
        f.read_exact(&mut u64buf)?;
        *slot = u64::from_le_bytes(u64buf) as usize;
    }
    let mut half = [0f64; 3];
    for slot in &mut half {
        f.read_exact(&mut u64buf)?;
        *slot = f64::from_le_bytes(u64buf);
    }
    let grid = Grid::new(n, half)?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        f.read_exact(&mut u64buf)?;
        let re = f64::from_le_bytes(u64buf);
        f.read_exact(&mut u64buf)?;
        let im = f64::from_le_bytes(u64buf);
        values.push(Complex64::new(re, im));
    }
    Field::from_values(&grid, values)
}

/// Creates `root/name` (and parents), erroring if the directory already
/// holds a manifest from an earlier run.
pub fn create_run_dir(root: &Path, name: &str) -> Result<PathBuf> {
    let dir = root.join(name);
    std::fs::create_dir_all(&dir)?;
    if dir.join("manifest.json").exists() {
        return Err(Error::Domain(format!(
            "run directory {} already contains a manifest",
            dir.display()
        )));
    }
    Ok(dir)
}

/// Echoes a solver configuration as JSON for the manifest.
pub fn config_echo(config: &SolverConfig) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(config)?)
}

/// Round-trips a grid reference for IO call sites.
pub fn grid_of(config: &SolverConfig) -> Result<Arc<Grid>> {
    Grid::new(config.grid_points, config.grid_half_lengths)
}
