//! Executes a manifest and writes its outputs.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lzqcl::io::{self, Job, RunManifest, SweepResult};
use lzqcl::probes::{
    self, count_grid_maxima, landscape_scan, r_metric, CellOutcome, SeedRegion,
};
use lzqcl::{optimize, ControlField};

/// Files written so far; removed again unless the run completes.
#[derive(Default)]
pub struct Outputs {
    written: Vec<PathBuf>,
    created_dir: Option<PathBuf>,
    committed: bool,
}

impl Outputs {
    pub fn ensure_dir(&mut self, dir: &Path) -> Result<()> {
        if !dir.exists() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            self.created_dir.get_or_insert_with(|| dir.to_path_buf());
        }
        Ok(())
    }

    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
        if let Some(dir) = &self.created_dir {
            let _ = fs::remove_dir(dir);
        }
    }
}

fn parent_dir(path: &Path) -> &Path {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    }
}

pub fn echo_manifest(manifest: &RunManifest) {
    eprintln!("# effective configuration");
    for line in manifest.to_toml().lines() {
        eprintln!("#   {line}");
    }
}

/// Grid table at `out`; returns the stdout summary.
pub fn scan(manifest: &RunManifest, out: &Path) -> Result<String> {
    let Job::Scan {
        t_ratio,
        half_width,
        resolution,
    } = manifest.job
    else {
        unreachable!("scan called with a non-scan manifest");
    };
    let params = manifest.params;
    let grid = landscape_scan(params.duration_for_ratio(t_ratio), half_width, resolution, &params)?;
    let maxima = count_grid_maxima(&grid);

    let mut outputs = Outputs::default();
    outputs.ensure_dir(parent_dir(out))?;
    outputs.record(out.to_path_buf());
    io::write_table(&grid, out)?;
    outputs.commit();

    let mut summary = format!("grid: {}\nmaxima: {}\n", out.display(), maxima.len());
    for m in &maxima {
        summary.push_str(&format!("  a1={:+.6} a2={:+.6} J={:.12}\n", m.a1, m.a2, m.value));
    }
    summary.push_str(&format!("max J on grid: {:.12}\n", grid.max_value()));
    Ok(summary)
}

pub fn optimize_seed(manifest: &RunManifest) -> Result<ControlField> {
    let Job::Optimize {
        t_ratio,
        n_ts,
        amplitude,
        seed_index,
        zero_seed,
    } = manifest.job
    else {
        unreachable!("optimize_seed called with a non-optimize manifest");
    };
    let duration = manifest.params.duration_for_ratio(t_ratio);
    if zero_seed {
        return Ok(ControlField::zeros(n_ts, duration)?);
    }
    let region = SeedRegion::new(amplitude, n_ts, duration)?;
    let mut rng = io::derive_stream(manifest.master_seed, 0, seed_index);
    Ok(probes::random_seed(&region, &mut rng))
}

/// Trajectory file at `out`; returns the stdout summary.
pub fn optimize_run(manifest: &RunManifest, out: &Path) -> Result<String> {
    let seed = optimize_seed(manifest)?;
    let traj = optimize(&seed, &manifest.params, &manifest.optimizer)?;

    let mut outputs = Outputs::default();
    outputs.ensure_dir(parent_dir(out))?;
    outputs.record(out.to_path_buf());
    io::write_trajectory(&traj, Some(manifest), out)?;
    outputs.commit();

    Ok(format!(
        "trajectory: {}\ntermination: {}\niterations: {}\nJ: {:.15}\nR: {:.12}\n",
        out.display(),
        traj.termination(),
        traj.n_steps(),
        traj.final_objective(),
        r_metric(&traj),
    ))
}

pub fn sweep_table_path(dir: &Path) -> PathBuf {
    dir.join("sweep.csv")
}

pub fn histogram_path(dir: &Path, cell: u64) -> PathBuf {
    dir.join(format!("cell{cell:03}_histogram.csv"))
}

pub fn pairs_path(dir: &Path, cell: u64) -> PathBuf {
    dir.join(format!("cell{cell:03}_pairs.csv"))
}

/// Sweep tables (and the manifest) under `dir`; returns the stdout summary.
pub fn sweep(manifest: &RunManifest, dir: &Path) -> Result<String> {
    let spec = manifest
        .sweep_spec()
        .expect("sweep called with a non-sweep manifest");
    let outcomes: Vec<CellOutcome> = probes::sweep_with_progress(&spec, |o, total| {
        eprintln!(
            "[{}/{}] t_ratio={} n_ts={} {}={:.6} qualified={} unconverged={}",
            o.cell.index + 1,
            total,
            o.cell.t_ratio,
            o.cell.n_ts,
            o.row.statistic,
            o.row.value,
            o.row.n_qualified,
            o.row.n_unconverged,
        );
    })?;

    let mut outputs = Outputs::default();
    outputs.ensure_dir(dir)?;
    let manifest_path = dir.join("manifest.toml");
    outputs.record(manifest_path.clone());
    manifest.write(&manifest_path)?;
    for o in &outcomes {
        if let Some(stats) = &o.distances {
            let hist = histogram_path(dir, o.cell.index);
            outputs.record(hist.clone());
            io::write_table(stats, &hist)?;
            let pairs = pairs_path(dir, o.cell.index);
            outputs.record(pairs.clone());
            io::write_pair_distances(stats, &pairs)?;
        }
    }
    let result = SweepResult {
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    };
    let table = sweep_table_path(dir);
    outputs.record(table.clone());
    io::write_table(&result, &table)?;
    outputs.commit();

    let mut summary = format!("sweep: {}\n", table.display());
    summary.push_str("t_ratio,n_ts,statistic,value,n_qualified,n_unconverged,n_seeds\n");
    for r in &result.rows {
        summary.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t_ratio, r.n_ts, r.statistic, r.value, r.n_qualified, r.n_unconverged, r.n_seeds
        ));
    }
    Ok(summary)
}

/// Reads a manifest file, or the manifest embedded in a trajectory file.
pub fn load_manifest(path: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.starts_with('#') {
        let header = io::read_trajectory_header(path)?;
        return header
            .manifest
            .with_context(|| format!("{} carries no manifest", path.display()));
    }
    RunManifest::from_toml(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Reruns `manifest`, writing into `dir` under the default file names.
pub fn replay(manifest: &RunManifest, dir: &Path) -> Result<String> {
    match manifest.job {
        Job::Scan { .. } => scan(manifest, &dir.join("scan.csv")),
        Job::Optimize { .. } => optimize_run(manifest, &dir.join("trajectory.csv")),
        Job::Sweep { .. } => sweep(manifest, dir),
    }
}
