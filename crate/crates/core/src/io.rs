//! Random streams, run manifests and the CSV and trajectory file formats.
//!
//! Floats are written as `{:.16e}`, 17 significant digits, which
//! round-trips every `f64` exactly. Files are written to a temporary
//! sibling and renamed into place, so a failed write never leaves a
//! truncated table behind.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{OptimizationTrajectory, OptimizerConfig, Termination};
use crate::probes::{DistanceStats, Experiment, HistogramBin, LandscapeGrid, SweepSpec};
use crate::su2::{ControlField, SystemParams};

/// Independent stream for seed `seed_index` of cell `cell_index`.
///
/// The three indices are packed little-endian into the ChaCha20 key, so
/// distinct tuples select distinct keys and the stream starts at block 0.
pub fn derive_stream(master_seed: u64, cell_index: u64, seed_index: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&master_seed.to_le_bytes());
    key[8..16].copy_from_slice(&cell_index.to_le_bytes());
    key[16..24].copy_from_slice(&seed_index.to_le_bytes());
    ChaCha20Rng::from_seed(key)
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// What a run was asked to do.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Job {
    Scan {
        t_ratio: f64,
        half_width: f64,
        resolution: usize,
    },
    Optimize {
        t_ratio: f64,
        n_ts: usize,
        amplitude: f64,
        /// Seed index within the master stream; ignored for a zero seed.
        seed_index: u64,
        zero_seed: bool,
    },
    Sweep {
        experiment: Experiment,
        t_ratios: Vec<f64>,
        nts_list: Vec<usize>,
        amplitude: f64,
        n_seeds: usize,
        threshold: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// RFC 3339 wall-clock time of the run. Left out of trajectory headers
    /// so that reruns produce identical files.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub master_seed: u64,
    pub params: SystemParams,
    pub optimizer: OptimizerConfig,
    pub job: Job,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest fields are TOML-representable")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| w.write_all(self.to_toml().as_bytes()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            reason: e.to_string(),
        })
    }

    /// The sweep this manifest describes, if it is a sweep manifest.
    pub fn sweep_spec(&self) -> Option<SweepSpec> {
        match &self.job {
            Job::Sweep {
                experiment,
                t_ratios,
                nts_list,
                amplitude,
                n_seeds,
                threshold,
            } => Some(SweepSpec {
                experiment: *experiment,
                t_ratios: t_ratios.clone(),
                nts_list: nts_list.clone(),
                amplitude: *amplitude,
                n_seeds: *n_seeds,
                master_seed: self.master_seed,
                threshold: *threshold,
                params: self.params,
                config: self.optimizer.clone(),
            }),
            _ => None,
        }
    }
}

/// One aggregate per `(T/T_min, N_ts)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub t_ratio: f64,
    pub n_ts: usize,
    pub statistic: String,
    /// NaN when too few runs qualified to define the statistic.
    pub value: f64,
    pub n_qualified: usize,
    pub n_unconverged: usize,
    pub n_seeds: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

/// Anything that serializes as a CSV table with a one-line header.
pub trait CsvTable {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Box<dyn Iterator<Item = Vec<String>> + '_>;
}

impl CsvTable for SweepResult {
    fn header(&self) -> Vec<String> {
        SWEEP_HEADER.iter().map(|s| s.to_string()).collect()
    }

    fn rows(&self) -> Box<dyn Iterator<Item = Vec<String>> + '_> {
        Box::new(self.rows.iter().map(|r| {
            vec![
                format_float(r.t_ratio),
                r.n_ts.to_string(),
                r.statistic.clone(),
                format_float(r.value),
                r.n_qualified.to_string(),
                r.n_unconverged.to_string(),
                r.n_seeds.to_string(),
            ]
        }))
    }
}

/// The histogram of a distance experiment.
impl CsvTable for DistanceStats {
    fn header(&self) -> Vec<String> {
        HISTOGRAM_HEADER.iter().map(|s| s.to_string()).collect()
    }

    fn rows(&self) -> Box<dyn Iterator<Item = Vec<String>> + '_> {
        Box::new(self.histogram.iter().map(|b| {
            vec![format_float(b.low), format_float(b.high), b.count.to_string()]
        }))
    }
}

/// Long form, one `(a1, a2, J)` row per grid point, `a1` outermost.
impl CsvTable for LandscapeGrid {
    fn header(&self) -> Vec<String> {
        GRID_HEADER.iter().map(|s| s.to_string()).collect()
    }

    fn rows(&self) -> Box<dyn Iterator<Item = Vec<String>> + '_> {
        let n2 = self.a2_axis().len();
        Box::new(self.values().iter().enumerate().map(move |(idx, &v)| {
            vec![
                format_float(self.a1_axis()[idx / n2]),
                format_float(self.a2_axis()[idx % n2]),
                format_float(v),
            ]
        }))
    }
}

const SWEEP_HEADER: [&str; 7] = [
    "t_ratio",
    "n_ts",
    "statistic",
    "value",
    "n_qualified",
    "n_unconverged",
    "n_seeds",
];
const HISTOGRAM_HEADER: [&str; 3] = ["bin_low", "bin_high", "count"];
const GRID_HEADER: [&str; 3] = ["a1", "a2", "J"];

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn csv_to_io(e: csv::Error) -> std::io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => std::io::Error::new(std::io::ErrorKind::Other, format!("{other:?}")),
    }
}

/// Writes through a temporary file in the destination directory and
/// renames it over `path` only once everything was written.
fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut tempfile::NamedTempFile>) -> std::io::Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| Error::io(path, e))?;
    {
        let mut w = BufWriter::new(&mut tmp);
        body(&mut w).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

pub fn write_table<T: CsvTable + ?Sized>(table: &T, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv_writer(w);
        csv.write_record(table.header()).map_err(csv_to_io)?;
        for row in table.rows() {
            csv.write_record(row).map_err(csv_to_io)?;
        }
        csv.flush()
    })
}

/// Pair distances of a distance experiment, one per line.
pub fn write_pair_distances(stats: &DistanceStats, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "distance")?;
        for d in &stats.pair_distances {
            writeln!(w, "{}", format_float(*d))?;
        }
        Ok(())
    })
}

fn parse_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        reason: reason.into(),
    }
}

/// Reads a CSV table, checking its header; yields `(line number, record)`.
fn read_records(path: &Path, expected: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(file);
    let header = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if header.iter().ne(expected.iter().copied()) {
        return Err(parse_error(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        out.push((line, record));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(path: &Path, line: usize, record: &csv::StringRecord, idx: usize) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let raw = record
        .get(idx)
        .ok_or_else(|| parse_error(path, line, format!("missing column {idx}")))?;
    raw.parse()
        .map_err(|e| parse_error(path, line, format!("bad value `{raw}`: {e}")))
}

pub fn read_sweep(path: &Path) -> Result<SweepResult> {
    let rows = read_records(path, &SWEEP_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(SweepRow {
                t_ratio: field(path, line, &r, 0)?,
                n_ts: field(path, line, &r, 1)?,
                statistic: field(path, line, &r, 2)?,
                value: field(path, line, &r, 3)?,
                n_qualified: field(path, line, &r, 4)?,
                n_unconverged: field(path, line, &r, 5)?,
                n_seeds: field(path, line, &r, 6)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(SweepResult { rows })
}

pub fn read_histogram(path: &Path) -> Result<Vec<HistogramBin>> {
    read_records(path, &HISTOGRAM_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            Ok(HistogramBin {
                low: field(path, line, &r, 0)?,
                high: field(path, line, &r, 1)?,
                count: field(path, line, &r, 2)?,
            })
        })
        .collect()
}

/// Reads a long-form grid table back into a grid. Axes are recovered from
/// the row order, so the file must be one written by [`write_table`].
pub fn read_grid(path: &Path, duration: f64, params: SystemParams) -> Result<LandscapeGrid> {
    let records = read_records(path, &GRID_HEADER)?;
    let mut a1_axis: Vec<f64> = Vec::new();
    let mut a2_axis: Vec<f64> = Vec::new();
    let mut values = Vec::with_capacity(records.len());
    for (line, r) in &records {
        let a1: f64 = field(path, *line, r, 0)?;
        let a2: f64 = field(path, *line, r, 1)?;
        if a1_axis.last() != Some(&a1) {
            a1_axis.push(a1);
        }
        if a1_axis.len() == 1 {
            a2_axis.push(a2);
        }
        values.push(field(path, *line, r, 2)?);
    }
    LandscapeGrid::from_parts(a1_axis, a2_axis, values, duration, params)
        .map_err(|e| parse_error(path, 0, e.to_string()))
}

/// Header block of a trajectory file, stored as `# `-prefixed TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryHeader {
    pub duration: f64,
    pub n_ts: usize,
    pub n_iterates: usize,
    pub termination: Termination,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<RunManifest>,
}

/// One record per iterate: index, J, `‖∇J‖∞`, then the amplitudes.
pub fn write_trajectory(
    traj: &OptimizationTrajectory,
    manifest: Option<&RunManifest>,
    path: &Path,
) -> Result<()> {
    let seed = traj.seed();
    let header = TrajectoryHeader {
        duration: seed.duration(),
        n_ts: seed.n_slots(),
        n_iterates: traj.iterates().len(),
        termination: traj.termination(),
        manifest: manifest.cloned().map(|m| RunManifest {
            timestamp: None,
            ..m
        }),
    };
    let header_toml = toml::to_string(&header).expect("header fields are TOML-representable");
    write_atomic(path, |w| {
        for line in header_toml.lines() {
            writeln!(w, "# {line}")?;
        }
        let mut csv = csv_writer(w);
        let mut columns = vec!["iterate".to_string(), "J".to_string(), "grad_norm_inf".to_string()];
        columns.extend((0..seed.n_slots()).map(|k| format!("eps_{k}")));
        csv.write_record(&columns).map_err(csv_to_io)?;
        for (s, ((field, j), g)) in traj
            .iterates()
            .iter()
            .zip(traj.objectives())
            .zip(traj.grad_norms())
            .enumerate()
        {
            let mut record = Vec::with_capacity(3 + field.n_slots());
            record.push(s.to_string());
            record.push(format_float(*j));
            record.push(format_float(*g));
            record.extend(field.amplitudes().iter().map(|a| format_float(*a)));
            csv.write_record(&record).map_err(csv_to_io)?;
        }
        csv.flush()
    })
}

/// Reads only the header block of a trajectory file.
pub fn read_trajectory_header(path: &Path) -> Result<TrajectoryHeader> {
    use std::io::BufRead;
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header_text = String::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let Some(rest) = line.strip_prefix('#') else {
            break;
        };
        header_text.push_str(rest.strip_prefix(' ').unwrap_or(rest));
        header_text.push('\n');
    }
    toml::from_str(&header_text).map_err(|e| parse_error(path, 1, e.to_string()))
}

pub fn read_trajectory(path: &Path) -> Result<(OptimizationTrajectory, TrajectoryHeader)> {
    let header = read_trajectory_header(path)?;

    let mut expected = vec!["iterate".to_string(), "J".to_string(), "grad_norm_inf".to_string()];
    expected.extend((0..header.n_ts).map(|k| format!("eps_{k}")));
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    let records = read_records(path, &expected)?;
    if records.len() != header.n_iterates {
        return Err(parse_error(
            path,
            0,
            format!("header announces {} iterates, found {}", header.n_iterates, records.len()),
        ));
    }

    let mut iterates = Vec::with_capacity(records.len());
    let mut objectives = Vec::with_capacity(records.len());
    let mut grad_norms = Vec::with_capacity(records.len());
    for (s, (line, r)) in records.iter().enumerate() {
        let index: usize = field(path, *line, r, 0)?;
        if index != s {
            return Err(parse_error(path, *line, format!("expected iterate {s}, found {index}")));
        }
        objectives.push(field(path, *line, r, 1)?);
        grad_norms.push(field(path, *line, r, 2)?);
        let amps = (0..header.n_ts)
            .map(|k| field(path, *line, r, 3 + k))
            .collect::<Result<Vec<f64>>>()?;
        iterates.push(
            ControlField::new(amps, header.duration).map_err(|e| parse_error(path, *line, e.to_string()))?,
        );
    }
    let traj = OptimizationTrajectory::new(iterates, objectives, grad_norms, header.termination)
        .map_err(|e| parse_error(path, 0, e.to_string()))?;
    Ok((traj, header))
}

#[cfg(test)]
mod tests {
    use super::*;

    use std::f64::consts::PI;

    use proptest::prelude::*;
    use rand::{Rng, RngCore};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use crate::grape::optimize;
    use crate::probes::{self, landscape_scan};

    fn draws(mut rng: ChaCha20Rng, n: usize) -> Vec<u64> {
        (0..n).map(|_| rng.next_u64()).collect()
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        assert_eq!(draws(derive_stream(5, 2, 9), 1000), draws(derive_stream(5, 2, 9), 1000));
        assert_ne!(draws(derive_stream(0, 0, 1), 1000), draws(derive_stream(0, 1, 0), 1000));
        assert_ne!(draws(derive_stream(1, 0, 0), 1000), draws(derive_stream(0, 0, 1), 1000));
    }

    #[test]
    fn pooled_draws_pass_chi_square() {
        let mut counts = [0u64; 100];
        let mut total = 0u64;
        for seed in 0..1000 {
            let mut rng = derive_stream(2024, seed % 7, seed);
            for _ in 0..1000 {
                let u: f64 = rng.gen();
                counts[((u * 100.0) as usize).min(99)] += 1;
                total += 1;
            }
        }
        let expected = total as f64 / 100.0;
        let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        let p = 1.0 - ChiSquared::new(99.0).unwrap().cdf(stat);
        assert!(p > 0.001, "chi-square {stat}, p = {p}");
    }

    fn sample_manifest() -> RunManifest {
        RunManifest {
            tool_version: "0.1.0".into(),
            timestamp: Some("2026-01-01T00:00:00Z".into()),
            master_seed: 17,
            params: SystemParams::new(1.5).unwrap(),
            optimizer: OptimizerConfig::default(),
            job: Job::Sweep {
                experiment: Experiment::Trapping,
                t_ratios: vec![1.0, 2.0],
                nts_list: vec![10, 30],
                amplitude: 50.0,
                n_seeds: 200,
                threshold: 0.99,
            },
        }
    }

    #[test]
    fn manifest_toml_round_trip() {
        let m = sample_manifest();
        let back = RunManifest::from_toml(&m.to_toml()).unwrap();
        assert_eq!(back, m);
        let spec = back.sweep_spec().unwrap();
        assert_eq!(spec.master_seed, 17);
        assert_eq!(spec.nts_list, vec![10, 30]);
        let scan = RunManifest {
            job: Job::Scan {
                t_ratio: 1.2,
                half_width: 2.0,
                resolution: 401,
            },
            ..m
        };
        assert!(scan.sweep_spec().is_none());
        assert_eq!(RunManifest::from_toml(&scan.to_toml()).unwrap(), scan);
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        write_table(&SweepResult::default(), &path).unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "t_ratio,n_ts,statistic,value,n_qualified,n_unconverged,n_seeds\n");
        assert_eq!(read_sweep(&path).unwrap(), SweepResult::default());
    }

    #[test]
    fn sweep_rows_round_trip_bit_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        let result = SweepResult {
            rows: vec![
                SweepRow {
                    t_ratio: 0.1 + 0.2,
                    n_ts: 100,
                    statistic: "mean_r".into(),
                    value: PI.exp(),
                    n_qualified: 7,
                    n_unconverged: 1,
                    n_seeds: 8,
                },
                SweepRow {
                    t_ratio: 1e-300,
                    n_ts: 1,
                    statistic: "mean_distance".into(),
                    value: f64::NAN,
                    n_qualified: 1,
                    n_unconverged: 0,
                    n_seeds: 1,
                },
            ],
        };
        write_table(&result, &path).unwrap();
        let back = read_sweep(&path).unwrap();
        assert_eq!(back.rows[0], result.rows[0]);
        assert_eq!(back.rows[1].t_ratio.to_bits(), result.rows[1].t_ratio.to_bits());
        assert!(back.rows[1].value.is_nan());
    }

    #[test]
    fn histogram_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("hist.csv");
        let fields: Vec<ControlField> = (0..6)
            .map(|i| ControlField::new(vec![i as f64 * 0.37, -(i as f64).sqrt()], 1.0).unwrap())
            .collect();
        let stats = probes::distance_stats(&fields).unwrap();
        write_table(&stats, &path).unwrap();
        assert_eq!(read_histogram(&path).unwrap(), stats.histogram);
        let pairs = dir.path().join("pairs.csv");
        write_pair_distances(&stats, &pairs).unwrap();
        assert_eq!(fs::read_to_string(&pairs).unwrap().lines().count(), 1 + 15);
    }

    #[test]
    fn grid_round_trip_and_row_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.csv");
        let params = SystemParams::default();
        let grid = landscape_scan(1.2 * PI, 2.0, 401, &params).unwrap();
        write_table(&grid, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1 + 160_801);
        assert!(!text.contains('\r'));
        assert_eq!(read_grid(&path, grid.duration(), params).unwrap(), grid);
    }

    #[test]
    fn write_errors_name_the_path() {
        let path = Path::new("/nonexistent-dir/for/sure/table.csv");
        let err = write_table(&SweepResult::default(), path).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/for/sure/table.csv"), "{err}");
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let params = SystemParams::default();
        let seed = ControlField::new(vec![0.4, -0.8, 0.1, 0.9, -0.2], 0.8 * PI).unwrap();
        let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
        let manifest = sample_manifest();
        write_trajectory(&traj, Some(&manifest), &path).unwrap();
        let (back, header) = read_trajectory(&path).unwrap();
        assert_eq!(back, traj);
        assert_eq!(header.manifest.as_ref().map(|m| &m.job), Some(&manifest.job));
        assert_eq!(header.manifest.unwrap().timestamp, None);
        assert_eq!(*back.objectives().last().unwrap(), traj.final_objective());
        assert!((probes::path_length(&back) - probes::path_length(&traj)).abs() < 1e-12);
    }

    #[test]
    fn single_iterate_trajectory_has_one_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let params = SystemParams::default();
        let traj = optimize(&ControlField::zeros(4, params.t_min()).unwrap(), &params, &OptimizerConfig::default()).unwrap();
        write_trajectory(&traj, None, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let data: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
        assert_eq!(data.len(), 1);
        let (back, header) = read_trajectory(&path).unwrap();
        assert_eq!(header.termination, Termination::FidelityReached);
        assert_eq!(back.n_steps(), 0);
    }

    #[test]
    fn truncated_trajectory_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let params = SystemParams::default();
        let seed = ControlField::new(vec![0.5, 0.1], 0.9 * PI).unwrap();
        let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
        write_trajectory(&traj, None, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(text.lines().count() - 1).map(|l| format!("{l}\n")).collect();
        fs::write(&path, cut).unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::Parse { .. })));
    }

    proptest! {
        #[test]
        fn floats_round_trip_through_text(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            prop_assume!(x.is_finite());
            let back: f64 = format_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
