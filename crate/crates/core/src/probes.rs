//! Landscape diagnostics: two-slot grid scans, random seeding, distances
//! between optimized fields, trapping statistics and the path-straightness
//! ratio R.
//!
//! Integrals over time use the left Riemann sum on the field's own slots,
//! which is exact for piecewise-constant fields. Lengths along and across
//! optimization paths use the time-averaged RMS norm
//! `sqrt((1/T)·∫ δε(t)² dt)`, so that a straight path has R = 1.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grape::{self, OptimizationTrajectory, OptimizerConfig, Termination};
use crate::io::{derive_stream, SweepResult, SweepRow};
use crate::su2::{objective_two_slot, ControlField, SystemParams};

/// Final fidelity a run must reach to count as having found a global maximum.
pub const GLOBAL_MAXIMUM_THRESHOLD: f64 = 0.99;

/// Euclidean lengths below this are treated as a zero-length path.
const DEGENERATE_LENGTH: f64 = 1e-12;

const MIN_HISTOGRAM_BINS: usize = 10;
const MAX_HISTOGRAM_BINS: usize = 10_000;

/// Uniform box `[-A, A]^N_ts` from which seeds are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRegion {
    amplitude: f64,
    n_ts: usize,
    duration: f64,
}

impl SeedRegion {
    pub fn new(amplitude: f64, n_ts: usize, duration: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude > 0.0) {
            return Err(Error::invalid(
                "amplitude",
                format!("must be finite and > 0, got {amplitude}"),
            ));
        }
        if n_ts == 0 {
            return Err(Error::invalid("n_ts", "must be positive"));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(
                "duration",
                format!("must be finite and > 0, got {duration}"),
            ));
        }
        Ok(Self {
            amplitude,
            n_ts,
            duration,
        })
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn n_ts(&self) -> usize {
        self.n_ts
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }
}

/// Draws every amplitude i.i.d. uniform on `[-A, A]`.
pub fn random_seed<R: Rng + ?Sized>(region: &SeedRegion, rng: &mut R) -> ControlField {
    let a = region.amplitude;
    let amplitudes = (0..region.n_ts).map(|_| rng.gen_range(-a..=a)).collect();
    ControlField::new(amplitudes, region.duration).expect("seed region invariants hold")
}

/// Seeds `0..n_seeds` of one sweep cell, each from its own derived stream.
pub fn cell_seeds(
    region: &SeedRegion,
    master_seed: u64,
    cell_index: u64,
    n_seeds: usize,
) -> Vec<ControlField> {
    (0..n_seeds as u64)
        .map(|i| random_seed(region, &mut derive_stream(master_seed, cell_index, i)))
        .collect()
}

/// `D = (1/T)·∫|f(t) − g(t)| dt`, the mean absolute slot difference.
pub fn field_distance(f: &ControlField, g: &ControlField) -> Result<f64> {
    check_same_grid(f, g)?;
    Ok(mean_abs_difference(f.amplitudes(), g.amplitudes()))
}

fn mean_abs_difference(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

fn check_same_grid(f: &ControlField, g: &ControlField) -> Result<()> {
    if f.same_grid(g) {
        Ok(())
    } else {
        Err(Error::FieldMismatch(format!(
            "{} slots over T={} vs {} slots over T={}",
            f.n_slots(),
            f.duration(),
            g.n_slots(),
            g.duration()
        )))
    }
}

/// Time-averaged RMS distance `sqrt((1/N)·Σ (a_k − b_k)²)`.
pub fn rms_distance(a: &[f64], b: &[f64]) -> f64 {
    let sum_sq = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
    (sum_sq / a.len() as f64).sqrt()
}

/// Length of the optimization path: sum of RMS norms of successive steps.
pub fn path_length(traj: &OptimizationTrajectory) -> f64 {
    traj.iterates()
        .windows(2)
        .map(|w| rms_distance(w[1].amplitudes(), w[0].amplitudes()))
        .sum()
}

/// RMS distance from the seed to the final iterate.
pub fn euclidean_length(traj: &OptimizationTrajectory) -> f64 {
    rms_distance(traj.final_field().amplitudes(), traj.seed().amplitudes())
}

/// `R = path length / straight-line length`; exactly 1 for a path that
/// never left its seed.
pub fn r_metric(traj: &OptimizationTrajectory) -> f64 {
    r_from_lengths(path_length(traj), euclidean_length(traj))
}

pub fn r_from_lengths(path: f64, straight: f64) -> f64 {
    if straight < DEGENERATE_LENGTH {
        1.0
    } else {
        path / straight
    }
}

/// `J(a1, a2)` sampled on a uniform square grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    a1_axis: Vec<f64>,
    a2_axis: Vec<f64>,
    /// Row-major: `values[i * a2_axis.len() + j]` is `J(a1_axis[i], a2_axis[j])`.
    values: Vec<f64>,
    duration: f64,
    params: SystemParams,
}

impl LandscapeGrid {
    pub fn from_parts(
        a1_axis: Vec<f64>,
        a2_axis: Vec<f64>,
        values: Vec<f64>,
        duration: f64,
        params: SystemParams,
    ) -> Result<Self> {
        if values.len() != a1_axis.len() * a2_axis.len() {
            return Err(Error::invalid(
                "values",
                format!(
                    "{} values for a {}×{} grid",
                    values.len(),
                    a1_axis.len(),
                    a2_axis.len()
                ),
            ));
        }
        Ok(Self {
            a1_axis,
            a2_axis,
            values,
            duration,
            params,
        })
    }

    pub fn a1_axis(&self) -> &[f64] {
        &self.a1_axis
    }

    pub fn a2_axis(&self) -> &[f64] {
        &self.a2_axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.a2_axis.len() + j]
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

fn uniform_axis(half_width: f64, resolution: usize) -> Vec<f64> {
    let step = 2.0 * half_width / (resolution - 1) as f64;
    (0..resolution)
        .map(|i| {
            if i == resolution - 1 {
                half_width
            } else {
                -half_width + step * i as f64
            }
        })
        .collect()
}

/// Evaluates the two-slot objective on `[-w, w]²` with `resolution` points per axis.
pub fn landscape_scan(
    duration: f64,
    half_width: f64,
    resolution: usize,
    params: &SystemParams,
) -> Result<LandscapeGrid> {
    if resolution < 2 {
        return Err(Error::invalid(
            "resolution",
            format!("needs at least 2 points per axis, got {resolution}"),
        ));
    }
    if !(half_width.is_finite() && half_width > 0.0) {
        return Err(Error::invalid(
            "half_width",
            format!("must be finite and > 0, got {half_width}"),
        ));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(
            "duration",
            format!("must be finite and > 0, got {duration}"),
        ));
    }
    let axis = uniform_axis(half_width, resolution);
    let values = axis
        .par_iter()
        .flat_map_iter(|&a1| {
            axis.iter()
                .map(move |&a2| objective_two_slot(a1, a2, duration, params))
        })
        .collect();
    LandscapeGrid::from_parts(axis.clone(), axis, values, duration, *params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMaximum {
    pub i: usize,
    pub j: usize,
    pub a1: f64,
    pub a2: f64,
    pub value: f64,
}

/// Interior grid points strictly greater than all 8 neighbours.
pub fn count_grid_maxima(grid: &LandscapeGrid) -> Vec<GridMaximum> {
    let (n1, n2) = (grid.a1_axis.len(), grid.a2_axis.len());
    let mut maxima = Vec::new();
    if n1 < 3 || n2 < 3 {
        return maxima;
    }
    for i in 1..n1 - 1 {
        for j in 1..n2 - 1 {
            let centre = grid.value(i, j);
            let strict = (i - 1..=i + 1)
                .flat_map(|p| (j - 1..=j + 1).map(move |q| (p, q)))
                .filter(|&(p, q)| (p, q) != (i, j))
                .all(|(p, q)| centre > grid.value(p, q));
            if strict {
                maxima.push(GridMaximum {
                    i,
                    j,
                    a1: grid.a1_axis[i],
                    a2: grid.a2_axis[j],
                    value: centre,
                });
            }
        }
    }
    maxima
}

/// Reduced record of one optimization run. The path length is accumulated
/// while the optimizer runs, so no iterates are kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub seed: ControlField,
    pub final_field: ControlField,
    pub final_objective: f64,
    pub termination: Termination,
    pub n_steps: usize,
    pub path_length: f64,
    pub euclidean_length: f64,
}

impl RunSummary {
    pub fn r(&self) -> f64 {
        r_from_lengths(self.path_length, self.euclidean_length)
    }

    /// Whether the run enters distance and R statistics: it must have
    /// converged and, when full transfer is possible (T ≥ T_min), reached
    /// a global maximum.
    pub fn qualifies(&self, params: &SystemParams) -> bool {
        self.termination.is_converged()
            && (self.seed.duration() < params.t_min()
                || self.final_objective >= GLOBAL_MAXIMUM_THRESHOLD)
    }
}

/// Optimizes one seed, keeping only its summary.
pub fn run_seed(
    seed: &ControlField,
    params: &SystemParams,
    config: &OptimizerConfig,
) -> Result<RunSummary> {
    let mut previous: Option<Vec<f64>> = None;
    let mut path = 0.0;
    let outcome = grape::ascend(seed, params, config, |amps, _, _| {
        if let Some(prev) = previous.as_mut() {
            path += rms_distance(amps, prev);
            prev.copy_from_slice(amps);
        } else {
            previous = Some(amps.to_vec());
        }
    })?;
    let straight = rms_distance(outcome.final_field.amplitudes(), seed.amplitudes());
    Ok(RunSummary {
        seed: seed.clone(),
        final_field: outcome.final_field,
        final_objective: outcome.final_objective,
        termination: outcome.termination,
        n_steps: outcome.n_steps,
        path_length: path,
        euclidean_length: straight,
    })
}

/// Runs every seed (possibly in parallel); output order follows `seeds`.
pub fn run_seeds(
    seeds: &[ControlField],
    params: &SystemParams,
    config: &OptimizerConfig,
) -> Result<Vec<RunSummary>> {
    config.validate()?;
    grape::check_common_grid(seeds)?;
    seeds
        .par_iter()
        .map(|seed| run_seed(seed, params, config))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceStats {
    /// Distances over all unordered pairs `(i, j)`, `i < j`, in index order.
    pub pair_distances: Vec<f64>,
    pub mean: f64,
    pub histogram: Vec<HistogramBin>,
    /// Number of optimized fields that entered the pairs.
    pub n_fields: usize,
}

impl DistanceStats {
    /// Fewer than two fields qualified: there is no pair to measure.
    pub fn insufficient(n_fields: usize) -> Self {
        Self {
            pair_distances: Vec::new(),
            mean: f64::NAN,
            histogram: Vec::new(),
            n_fields,
        }
    }

    pub fn is_sufficient(&self) -> bool {
        !self.pair_distances.is_empty()
    }
}

/// All-pairs distances between `fields` with a Freedman–Diaconis histogram.
pub fn distance_stats(fields: &[ControlField]) -> Result<DistanceStats> {
    if fields.len() < 2 {
        return Ok(DistanceStats::insufficient(fields.len()));
    }
    let mut pair_distances = Vec::with_capacity(fields.len() * (fields.len() - 1) / 2);
    for (i, f) in fields.iter().enumerate() {
        for g in &fields[i + 1..] {
            pair_distances.push(field_distance(f, g)?);
        }
    }
    let mean = pair_distances.iter().sum::<f64>() / pair_distances.len() as f64;
    let histogram = histogram(&pair_distances);
    Ok(DistanceStats {
        pair_distances,
        mean,
        histogram,
        n_fields: fields.len(),
    })
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Freedman–Diaconis binning with at least ten bins.
pub fn histogram(data: &[f64]) -> Vec<HistogramBin> {
    if data.is_empty() {
        return Vec::new();
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let low = sorted[0];
    let mut high = sorted[sorted.len() - 1];
    if high <= low {
        high = low + 1.0;
    }
    let iqr = quantile(&sorted, 0.75) - quantile(&sorted, 0.25);
    let fd_width = 2.0 * iqr / (sorted.len() as f64).cbrt();
    let n_bins = if fd_width > 0.0 {
        ((high - low) / fd_width).ceil() as usize
    } else {
        MIN_HISTOGRAM_BINS
    }
    .clamp(MIN_HISTOGRAM_BINS, MAX_HISTOGRAM_BINS);
    let width = (high - low) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &x in &sorted {
        let idx = (((x - low) / width) as usize).min(n_bins - 1);
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(k, count)| HistogramBin {
            low: low + width * k as f64,
            high: if k + 1 == n_bins {
                high
            } else {
                low + width * (k + 1) as f64
            },
            count,
        })
        .collect()
}

/// Splits fields by the sign of their inner product with the first field;
/// ties go to the first cluster.
pub fn cluster_by_sign(fields: &[ControlField]) -> (Vec<ControlField>, Vec<ControlField>) {
    let Some(reference) = fields.first() else {
        return (Vec::new(), Vec::new());
    };
    fields.iter().cloned().partition(|f| {
        let dot: f64 = f
            .amplitudes()
            .iter()
            .zip(reference.amplitudes())
            .map(|(a, b)| a * b)
            .sum();
        dot >= 0.0
    })
}

/// Slot-wise mean of a non-empty set of fields on a common grid.
pub fn centroid(fields: &[ControlField]) -> Option<ControlField> {
    let first = fields.first()?;
    let mut sum = vec![0.0; first.n_slots()];
    for f in fields {
        for (s, a) in sum.iter_mut().zip(f.amplitudes()) {
            *s += a;
        }
    }
    let n = fields.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    ControlField::new(sum, first.duration()).ok()
}

/// Where a batch of seeds comes from: a master seed and the cell it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSource {
    pub master_seed: u64,
    pub cell_index: u64,
}

/// Distance statistics of the qualifying optimized fields of a batch.
pub fn distances_of_runs(runs: &[RunSummary], params: &SystemParams) -> Result<DistanceStats> {
    let fields: Vec<ControlField> = runs
        .iter()
        .filter(|r| r.qualifies(params))
        .map(|r| r.final_field.clone())
        .collect();
    distance_stats(&fields)
}

/// Optimizes `n_seeds` fresh seeds and measures the distances between the
/// optimized fields that qualify.
pub fn distance_experiment(
    region: &SeedRegion,
    params: &SystemParams,
    config: &OptimizerConfig,
    n_seeds: usize,
    source: SeedSource,
) -> Result<DistanceStats> {
    if n_seeds < 2 {
        return Err(Error::invalid("n_seeds", "a distance experiment needs at least 2 seeds"));
    }
    let seeds = cell_seeds(region, source.master_seed, source.cell_index, n_seeds);
    let runs = run_seeds(&seeds, params, config)?;
    distances_of_runs(&runs, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapStats {
    pub n_trapped: usize,
    pub n_converged: usize,
    /// Runs that hit the iteration cap; neither trapped nor successful.
    pub n_unconverged: usize,
}

impl TrapStats {
    pub fn from_runs(runs: &[RunSummary], threshold: f64) -> Self {
        let mut stats = TrapStats {
            n_trapped: 0,
            n_converged: 0,
            n_unconverged: 0,
        };
        for run in runs {
            if !run.termination.is_converged() {
                stats.n_unconverged += 1;
            } else {
                stats.n_converged += 1;
                if run.final_objective < threshold {
                    stats.n_trapped += 1;
                }
            }
        }
        stats
    }

    /// Fraction of converged runs that ended below the threshold; `None`
    /// when no run converged.
    pub fn probability(&self) -> Option<f64> {
        (self.n_converged > 0).then(|| self.n_trapped as f64 / self.n_converged as f64)
    }
}

pub fn trapping_probability(
    region: &SeedRegion,
    params: &SystemParams,
    config: &OptimizerConfig,
    n_seeds: usize,
    threshold: f64,
    source: SeedSource,
) -> Result<TrapStats> {
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "must be positive"));
    }
    let seeds = cell_seeds(region, source.master_seed, source.cell_index, n_seeds);
    let runs = run_seeds(&seeds, params, config)?;
    Ok(TrapStats::from_runs(&runs, threshold))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RStats {
    pub r_values: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl RStats {
    pub fn from_runs(runs: &[RunSummary], params: &SystemParams) -> Self {
        let r_values: Vec<f64> = runs
            .iter()
            .filter(|r| r.qualifies(params))
            .map(RunSummary::r)
            .collect();
        Self::from_values(r_values)
    }

    pub fn from_values(r_values: Vec<f64>) -> Self {
        if r_values.is_empty() {
            return Self {
                r_values,
                mean: f64::NAN,
                std: f64::NAN,
            };
        }
        let n = r_values.len() as f64;
        let mean = r_values.iter().sum::<f64>() / n;
        let var = r_values.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n;
        Self {
            r_values,
            mean,
            std: var.sqrt(),
        }
    }
}

pub fn r_experiment(
    region: &SeedRegion,
    params: &SystemParams,
    config: &OptimizerConfig,
    n_seeds: usize,
    source: SeedSource,
) -> Result<RStats> {
    if n_seeds == 0 {
        return Err(Error::invalid("n_seeds", "must be positive"));
    }
    let seeds = cell_seeds(region, source.master_seed, source.cell_index, n_seeds);
    let runs = run_seeds(&seeds, params, config)?;
    Ok(RStats::from_runs(&runs, params))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "distance")]
    MeanDistance,
    #[serde(rename = "traps")]
    Trapping,
    #[serde(rename = "rmetric")]
    MeanR,
}

impl Experiment {
    pub fn statistic_name(self) -> &'static str {
        match self {
            Experiment::MeanDistance => "mean_distance",
            Experiment::Trapping => "trapping_probability",
            Experiment::MeanR => "mean_r",
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Experiment::MeanDistance => "distance",
            Experiment::Trapping => "traps",
            Experiment::MeanR => "rmetric",
        }
    }

    /// Half-width of the seed box used for this experiment by default.
    pub fn default_amplitude(self) -> f64 {
        match self {
            Experiment::Trapping => 50.0,
            Experiment::MeanDistance | Experiment::MeanR => 1.0,
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "distance" => Ok(Experiment::MeanDistance),
            "traps" => Ok(Experiment::Trapping),
            "rmetric" => Ok(Experiment::MeanR),
            other => Err(format!(
                "unknown experiment `{other}` (expected distance, traps or rmetric)"
            )),
        }
    }
}

/// A grid of `(T/T_min, N_ts)` cells sharing one experiment and seed box.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub experiment: Experiment,
    pub t_ratios: Vec<f64>,
    pub nts_list: Vec<usize>,
    pub amplitude: f64,
    pub n_seeds: usize,
    pub master_seed: u64,
    pub threshold: f64,
    pub params: SystemParams,
    pub config: OptimizerConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.t_ratios.is_empty() {
            return Err(Error::invalid("t_ratios", "needs at least one value"));
        }
        if let Some(r) = self.t_ratios.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(Error::invalid("t_ratios", format!("must be finite and > 0, got {r}")));
        }
        if self.nts_list.is_empty() {
            return Err(Error::invalid("nts_list", "needs at least one value"));
        }
        if self.nts_list.contains(&0) {
            return Err(Error::invalid("nts_list", "slot counts must be positive"));
        }
        if self.n_seeds == 0 {
            return Err(Error::invalid("n_seeds", "must be positive"));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::invalid(
                "amplitude",
                format!("must be finite and > 0, got {}", self.amplitude),
            ));
        }
        self.config.validate()
    }

    /// Cells in row-major order over `(t_ratio, n_ts)`; the position is the
    /// cell index used for seed derivation.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::with_capacity(self.t_ratios.len() * self.nts_list.len());
        for &t_ratio in &self.t_ratios {
            for &n_ts in &self.nts_list {
                let index = cells.len() as u64;
                cells.push(SweepCell {
                    index,
                    t_ratio,
                    n_ts,
                });
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub index: u64,
    pub t_ratio: f64,
    pub n_ts: usize,
}

/// Everything one sweep cell produced.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub cell: SweepCell,
    pub row: SweepRow,
    /// Present for distance sweeps.
    pub distances: Option<DistanceStats>,
}

/// Runs one cell of a sweep.
pub fn run_cell(spec: &SweepSpec, cell: SweepCell) -> Result<CellOutcome> {
    let duration = spec.params.duration_for_ratio(cell.t_ratio);
    let region = SeedRegion::new(spec.amplitude, cell.n_ts, duration)?;
    let seeds = cell_seeds(&region, spec.master_seed, cell.index, spec.n_seeds);
    let runs = run_seeds(&seeds, &spec.params, &spec.config)?;
    let n_unconverged = runs.iter().filter(|r| !r.termination.is_converged()).count();
    let n_qualified = runs.iter().filter(|r| r.qualifies(&spec.params)).count();
    let mut distances = None;
    let (value, n_qualified) = match spec.experiment {
        Experiment::MeanDistance => {
            let stats = distances_of_runs(&runs, &spec.params)?;
            let mean = stats.mean;
            distances = Some(stats);
            (mean, n_qualified)
        }
        Experiment::MeanR => (RStats::from_runs(&runs, &spec.params).mean, n_qualified),
        Experiment::Trapping => {
            let traps = TrapStats::from_runs(&runs, spec.threshold);
            (
                traps.probability().unwrap_or(f64::NAN),
                traps.n_converged - traps.n_trapped,
            )
        }
    };
    Ok(CellOutcome {
        cell,
        row: SweepRow {
            t_ratio: cell.t_ratio,
            n_ts: cell.n_ts,
            statistic: spec.experiment.statistic_name().to_string(),
            value,
            n_qualified,
            n_unconverged,
            n_seeds: spec.n_seeds,
        },
        distances,
    })
}

/// Runs every cell in index order, reporting each finished cell to `progress`.
pub fn sweep_with_progress<F>(spec: &SweepSpec, mut progress: F) -> Result<Vec<CellOutcome>>
where
    F: FnMut(&CellOutcome, usize),
{
    spec.validate()?;
    let cells = spec.cells();
    let total = cells.len();
    let mut outcomes = Vec::with_capacity(total);
    for cell in cells {
        let outcome = run_cell(spec, cell)?;
        progress(&outcome, total);
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// One row per `(T/T_min, N_ts)` cell.
pub fn sweep(spec: &SweepSpec) -> Result<SweepResult> {
    let outcomes = sweep_with_progress(spec, |_, _| {})?;
    Ok(SweepResult {
        rows: outcomes.into_iter().map(|o| o.row).collect(),
    })
}
