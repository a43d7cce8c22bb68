//! Exact fidelity gradient and a pure steepest-ascent optimizer.
//!
//! The gradient uses the usual forward/backward sweep over slot
//! propagators, with the exact ε-derivative of each slot exponential. The
//! optimizer follows `ε ← ε + η·∇J` with a backtracking (Armijo) line
//! search that restarts from `initial_step` on every iteration, so paths
//! are those of plain gradient flow sampled at the accepted steps.

use std::fmt;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::su2::{self, ControlField, SystemParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub max_iterations: usize,
    /// Stop once `‖∇J‖∞` falls below this.
    pub grad_tolerance: f64,
    /// Stop once `J ≥ 1 − success_delta`.
    pub success_delta: f64,
    /// First trial step of every line search.
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub min_step: f64,
    /// Sufficient-increase constant `c` of the Armijo test
    /// `J(ε + η∇J) ≥ J(ε) + c·η·‖∇J‖²`. With `c = 1/2` no step is accepted
    /// past the maximum of the local quadratic model along the gradient.
    pub armijo_c: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            grad_tolerance: 1e-8,
            success_delta: 1e-6,
            initial_step: 1000.0,
            backtrack_factor: 0.5,
            min_step: 1e-14,
            armijo_c: 0.5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations", "must be positive"));
        }
        positive("grad_tolerance", self.grad_tolerance)?;
        positive("success_delta", self.success_delta)?;
        positive("initial_step", self.initial_step)?;
        positive("min_step", self.min_step)?;
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(Error::invalid(
                "backtrack_factor",
                format!("must lie in (0, 1), got {}", self.backtrack_factor),
            ));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::invalid(
                "armijo_c",
                format!("must lie in (0, 1), got {}", self.armijo_c),
            ));
        }
        if self.min_step >= self.initial_step {
            return Err(Error::invalid(
                "min_step",
                format!(
                    "must be below initial_step ({} >= {})",
                    self.min_step, self.initial_step
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Termination {
    GradientConverged,
    FidelityReached,
    MaxIterations,
    /// No step of at least `min_step` increased J.
    StepUnderflow,
}

impl Termination {
    /// Anything but running out of iterations counts as converged.
    pub fn is_converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientConverged => "GradientConverged",
            Termination::FidelityReached => "FidelityReached",
            Termination::MaxIterations => "MaxIterations",
            Termination::StepUnderflow => "StepUnderflow",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Termination {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "GradientConverged" => Ok(Termination::GradientConverged),
            "FidelityReached" => Ok(Termination::FidelityReached),
            "MaxIterations" => Ok(Termination::MaxIterations),
            "StepUnderflow" => Ok(Termination::StepUnderflow),
            other => Err(format!("unknown termination `{other}`")),
        }
    }
}

/// Every accepted iterate of one optimization run; iterate 0 is the seed.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizationTrajectory {
    iterates: Vec<ControlField>,
    objectives: Vec<f64>,
    grad_norms: Vec<f64>,
    termination: Termination,
}

impl OptimizationTrajectory {
    pub fn new(
        iterates: Vec<ControlField>,
        objectives: Vec<f64>,
        grad_norms: Vec<f64>,
        termination: Termination,
    ) -> Result<Self> {
        if iterates.is_empty() {
            return Err(Error::invalid("iterates", "a trajectory holds at least the seed"));
        }
        if iterates.len() != objectives.len() || iterates.len() != grad_norms.len() {
            return Err(Error::invalid(
                "iterates",
                format!(
                    "length mismatch: {} iterates, {} objectives, {} gradient norms",
                    iterates.len(),
                    objectives.len(),
                    grad_norms.len()
                ),
            ));
        }
        if let Some(bad) = iterates.iter().find(|f| !f.same_grid(&iterates[0])) {
            return Err(Error::FieldMismatch(format!(
                "iterate with {} slots over T={} in a trajectory of {} slots over T={}",
                bad.n_slots(),
                bad.duration(),
                iterates[0].n_slots(),
                iterates[0].duration()
            )));
        }
        Ok(Self {
            iterates,
            objectives,
            grad_norms,
            termination,
        })
    }

    pub fn iterates(&self) -> &[ControlField] {
        &self.iterates
    }

    pub fn objectives(&self) -> &[f64] {
        &self.objectives
    }

    pub fn grad_norms(&self) -> &[f64] {
        &self.grad_norms
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn seed(&self) -> &ControlField {
        &self.iterates[0]
    }

    pub fn final_field(&self) -> &ControlField {
        self.iterates.last().expect("trajectory is never empty")
    }

    pub fn final_objective(&self) -> f64 {
        *self.objectives.last().expect("trajectory is never empty")
    }

    pub fn final_grad_norm(&self) -> f64 {
        *self.grad_norms.last().expect("trajectory is never empty")
    }

    /// Number of accepted steps.
    pub fn n_steps(&self) -> usize {
        self.iterates.len() - 1
    }
}

/// Fidelity and its exact gradient in one forward/backward sweep.
pub fn value_and_gradient(field: &ControlField, params: &SystemParams) -> (f64, Vec<f64>) {
    let dt = field.dt();
    let n = field.n_slots();
    let mut steps = Vec::with_capacity(n);
    // kets[k] = U_{k-1} ⋯ U_0 |0⟩
    let mut kets = Vec::with_capacity(n + 1);
    let mut ket = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    kets.push(ket);
    for &eps in field.amplitudes() {
        let (u, du) = su2::step_propagator_with_derivative(eps, dt, params);
        ket = u.apply(ket);
        kets.push(ket);
        steps.push((u, du));
    }
    let amplitude = ket[1];
    let value = su2::clamp_fidelity(amplitude.norm_sqr());
    let weight = amplitude.conj();

    let mut grad = vec![0.0; n];
    // bra = ⟨1| U_{N-1} ⋯ U_{k+1}
    let mut bra = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    for k in (0..n).rev() {
        let (u, du) = &steps[k];
        let d_ket = du.apply(kets[k]);
        let d_amp = bra[0] * d_ket[0] + bra[1] * d_ket[1];
        grad[k] = 2.0 * (weight * d_amp).re;
        bra = u.apply_left(bra);
    }
    (value, grad)
}

/// `∂J/∂ε_k` for every slot.
pub fn gradient(field: &ControlField, params: &SystemParams) -> Vec<f64> {
    value_and_gradient(field, params).1
}

pub fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Outcome of [`ascend`]: the final point and why the run stopped.
#[derive(Debug, Clone, PartialEq)]
pub struct AscentOutcome {
    pub final_field: ControlField,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    pub termination: Termination,
    pub n_steps: usize,
}

/// Runs steepest ascent from `seed`, handing every accepted iterate
/// (seed first) to `visit` as `(amplitudes, J, ‖∇J‖∞)`.
///
/// [`optimize`] stores the visited iterates; the experiment drivers instead
/// reduce them on the fly so large batches stay within memory.
pub fn ascend<F>(
    seed: &ControlField,
    params: &SystemParams,
    config: &OptimizerConfig,
    mut visit: F,
) -> Result<AscentOutcome>
where
    F: FnMut(&[f64], f64, f64),
{
    config.validate()?;
    let mut current = seed.clone();
    let (mut value, mut grad) = value_and_gradient(&current, params);
    let mut grad_norm = max_norm(&grad);
    visit(current.amplitudes(), value, grad_norm);

    let mut n_steps = 0;
    let termination = loop {
        if value >= 1.0 - config.success_delta {
            break Termination::FidelityReached;
        }
        if grad_norm < config.grad_tolerance {
            break Termination::GradientConverged;
        }
        if n_steps >= config.max_iterations {
            break Termination::MaxIterations;
        }

        let slope = grad.iter().map(|g| g * g).sum::<f64>();
        let mut step = config.initial_step;
        let mut accepted = None;
        while step >= config.min_step {
            let trial: Vec<f64> = current
                .amplitudes()
                .iter()
                .zip(&grad)
                .map(|(x, g)| x + step * g)
                .collect();
            let trial = current.with_amplitudes(trial);
            let trial_value = su2::fidelity(&trial, params);
            if trial_value > value && trial_value >= value + config.armijo_c * step * slope {
                accepted = Some(trial);
                break;
            }
            step *= config.backtrack_factor;
        }
        let Some(next) = accepted else {
            break Termination::StepUnderflow;
        };

        current = next;
        let (next_value, next_grad) = value_and_gradient(&current, params);
        value = next_value;
        grad = next_grad;
        grad_norm = max_norm(&grad);
        n_steps += 1;
        visit(current.amplitudes(), value, grad_norm);
    };

    Ok(AscentOutcome {
        final_field: current,
        final_objective: value,
        final_grad_norm: grad_norm,
        termination,
        n_steps,
    })
}

/// Optimizes one seed and records the whole trajectory.
pub fn optimize(
    seed: &ControlField,
    params: &SystemParams,
    config: &OptimizerConfig,
) -> Result<OptimizationTrajectory> {
    let mut iterates = Vec::new();
    let mut objectives = Vec::new();
    let mut grad_norms = Vec::new();
    let outcome = ascend(seed, params, config, |amps, j, g| {
        iterates.push(seed.with_amplitudes(amps.to_vec()));
        objectives.push(j);
        grad_norms.push(g);
    })?;
    OptimizationTrajectory::new(iterates, objectives, grad_norms, outcome.termination)
}

/// Optimizes every seed independently; output order follows input order.
pub fn optimize_batch(
    seeds: &[ControlField],
    params: &SystemParams,
    config: &OptimizerConfig,
) -> Result<Vec<OptimizationTrajectory>> {
    config.validate()?;
    check_common_grid(seeds)?;
    seeds
        .par_iter()
        .map(|seed| optimize(seed, params, config))
        .collect()
}

pub(crate) fn check_common_grid(seeds: &[ControlField]) -> Result<()> {
    if let Some(first) = seeds.first() {
        if let Some(bad) = seeds.iter().find(|s| !s.same_grid(first)) {
            return Err(Error::FieldMismatch(format!(
                "batch mixes {} slots over T={} with {} slots over T={}",
                first.n_slots(),
                first.duration(),
                bad.n_slots(),
                bad.duration()
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> SystemParams {
        SystemParams::new(1.0).unwrap()
    }

    fn random_field(rng: &mut impl Rng, n: usize, duration: f64, amp: f64) -> ControlField {
        ControlField::new((0..n).map(|_| rng.gen_range(-amp..=amp)).collect(), duration).unwrap()
    }

    #[test]
    fn zero_field_is_stationary() {
        let params = unit();
        for &(n, ratio) in &[(1, 0.3), (2, 1.0), (17, 2.5), (100, 0.7)] {
            let field = ControlField::zeros(n, params.duration_for_ratio(ratio)).unwrap();
            assert!(max_norm(&gradient(&field, &params)) < 1e-10);
        }
    }

    #[test]
    fn value_matches_fidelity_bitwise() {
        let params = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let field = random_field(&mut rng, 13, 2.2, 2.0);
            let (value, _) = value_and_gradient(&field, &params);
            assert_eq!(value, su2::fidelity(&field, &params));
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            backtrack_factor: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            min_step: 2000.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            max_iterations: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn seed_at_speed_limit_stops_immediately() {
        let params = unit();
        let seed = ControlField::zeros(100, params.t_min()).unwrap();
        let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
        assert_eq!(traj.n_steps(), 0);
        assert_eq!(traj.termination(), Termination::FidelityReached);
        assert!((traj.final_objective() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_slot_run_above_speed_limit_reaches_a_global_maximum() {
        let params = unit();
        let seed = ControlField::new(vec![0.3, 0.2], 1.2 * params.t_min()).unwrap();
        let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
        assert!(traj.final_objective() >= 0.99, "J = {}", traj.final_objective());
        assert!(traj.termination().is_converged());
        let end = traj.final_field().amplitudes();
        // the two maxima sit on the anti-diagonal a2 = -a1
        assert!((end[0] + end[1]).abs() < 1e-3, "{end:?}");
    }

    #[test]
    fn swap_symmetric_seed_stays_on_the_diagonal() {
        // J(a1, a2) = J(a2, a1) keeps a seed with a1 = a2 on the diagonal,
        // where the only stationary point above the speed limit is a saddle.
        let params = unit();
        let seed = ControlField::new(vec![0.3, 0.3], 1.2 * params.t_min()).unwrap();
        let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
        let end = traj.final_field().amplitudes();
        assert!((end[0] - end[1]).abs() < 1e-9);
        assert!(traj.final_objective() < 0.99);
    }

    #[test]
    fn objectives_never_decrease() {
        let params = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let config = OptimizerConfig {
            max_iterations: 2_000,
            ..Default::default()
        };
        for &ratio in &[0.5, 1.3, 3.0] {
            let seed = random_field(&mut rng, 12, params.duration_for_ratio(ratio), 1.0);
            let traj = optimize(&seed, &params, &config).unwrap();
            assert!(traj.objectives().windows(2).all(|w| w[1] >= w[0]));
            assert_eq!(traj.iterates().len(), traj.grad_norms().len());
        }
    }

    #[test]
    fn gradient_converged_runs_end_below_tolerance() {
        let params = unit();
        let config = OptimizerConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let seed = random_field(&mut rng, 20, 0.7 * params.t_min(), 1.0);
        let traj = optimize(&seed, &params, &config).unwrap();
        assert_eq!(traj.termination(), Termination::GradientConverged);
        assert!(traj.final_grad_norm() < config.grad_tolerance);
    }

    #[test]
    fn max_iterations_is_reported() {
        let params = unit();
        let config = OptimizerConfig {
            max_iterations: 3,
            ..Default::default()
        };
        let seed = ControlField::new(vec![0.8, -0.1, 0.5], 0.6 * params.t_min()).unwrap();
        let traj = optimize(&seed, &params, &config).unwrap();
        assert_eq!(traj.termination(), Termination::MaxIterations);
        assert_eq!(traj.n_steps(), 3);
    }

    #[test]
    fn batch_preserves_order_and_handles_empty() {
        let params = unit();
        let config = OptimizerConfig::default();
        assert!(optimize_batch(&[], &params, &config).unwrap().is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let seeds: Vec<_> = (0..6).map(|_| random_field(&mut rng, 4, 2.0, 1.0)).collect();
        let batch = optimize_batch(&seeds, &params, &config).unwrap();
        for (seed, traj) in seeds.iter().zip(&batch) {
            assert_eq!(traj, &optimize(seed, &params, &config).unwrap());
        }
    }

    #[test]
    fn batch_rejects_mixed_grids() {
        let seeds = vec![
            ControlField::zeros(3, 1.0).unwrap(),
            ControlField::zeros(4, 1.0).unwrap(),
        ];
        let err = optimize_batch(&seeds, &unit(), &OptimizerConfig::default());
        assert!(matches!(err, Err(Error::FieldMismatch(_))));
    }

    #[test]
    fn trajectory_constructor_checks_lengths() {
        let f = ControlField::zeros(2, 1.0).unwrap();
        assert!(OptimizationTrajectory::new(vec![f.clone()], vec![0.1, 0.2], vec![0.0], Termination::MaxIterations).is_err());
        assert!(OptimizationTrajectory::new(vec![], vec![], vec![], Termination::MaxIterations).is_err());
        assert!(OptimizationTrajectory::new(vec![f], vec![0.1], vec![0.0], Termination::MaxIterations).is_ok());
    }
    #[test]
    fn gradient_matches_finite_differences_on_sixteen_slots() {
        let params = unit();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let t = 1.3 * params.t_min();
        let h = 1e-5;
        for _ in 0..100 {
            let field = random_field(&mut rng, 16, t, 1.0);
            let g = gradient(&field, &params);
            for k in 0..16 {
                let at = |d: f64| {
                    let mut a = field.amplitudes().to_vec();
                    a[k] += d;
                    su2::fidelity(&ControlField::new(a, t).unwrap(), &params)
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                let rel = (g[k] - fd).abs() / g[k].abs().max(fd.abs()).max(1e-6);
                assert!(rel < 1e-6, "slot {k}: {} vs {fd}", g[k]);
            }
        }
    }

    #[test]
    fn gradient_vanishes_at_full_transfer() {
        let params = unit();
        let seed = ControlField::new(vec![0.2, -0.1, 0.4, 0.0, -0.3, 0.1], 1.4 * params.t_min())
            .unwrap()
            .refined(10)
            .unwrap();
        let config = OptimizerConfig {
            success_delta: 1e-14,
            ..Default::default()
        };
        let traj = optimize(&seed, &params, &config).unwrap();
        assert!(traj.final_objective() > 1.0 - 1e-12);
        assert!(max_norm(&gradient(traj.final_field(), &params)) < 1e-8);
    }

    #[test]
    fn two_slots_below_speed_limit_find_the_grid_maximizer() {
        let params = unit();
        let t = 0.7 * params.t_min();
        let (mut best, mut arg) = (f64::NEG_INFINITY, (0.0, 0.0));
        for i in 0..401 {
            for j in 0..401 {
                let (a1, a2) = (-1.0 + i as f64 / 200.0, -1.0 + j as f64 / 200.0);
                let v = su2::objective_two_slot(a1, a2, t, &params);
                if v > best {
                    best = v;
                    arg = (a1, a2);
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let seed = random_field(&mut rng, 2, t, 1.0);
            let traj = optimize(&seed, &params, &OptimizerConfig::default()).unwrap();
            // With two slots a gradient of 1e-8 is worth less than one ulp of
            // J, so the line search may run out of representable progress first.
            assert!(
                matches!(traj.termination(), Termination::GradientConverged | Termination::StepUnderflow),
                "{}",
                traj.termination()
            );
            let end = traj.final_field().amplitudes();
            assert!((end[0] - arg.0).abs() < 1e-3 && (end[1] - arg.1).abs() < 1e-3, "{end:?} vs {arg:?}");
            assert!(traj.final_objective() >= best - 1e-12);
        }
    }
}
