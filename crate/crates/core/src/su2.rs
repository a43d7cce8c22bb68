//! Exact piecewise-constant dynamics of the Landau-Zener Hamiltonian
//! `H(ε) = (Δ/2)·σx + ε·σz` and the |0⟩ → |1⟩ transfer fidelity.
//!
//! Every slot propagator is evaluated with the SU(2) closed form
//! `exp(-i·H·dt) = cos(Ω·dt)·I - i·(sin(Ω·dt)/Ω)·H`, `Ω = sqrt((Δ/2)² + ε²)`.
//! Since `Δ > 0`, `Ω ≥ Δ/2` and the expression never degenerates.
//!
//! Slot 0 of a [`ControlField`] is the earliest time slot; products are
//! applied right to left, `U_T = U_{N-1} ⋯ U_1 · U_0`.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Round-off tolerated outside `[0, 1]` before a fidelity is treated as a bug.
const FIDELITY_ROUNDOFF: f64 = 1e-12;

/// Physical parameters of the two-level system (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    gap: f64,
}

impl SystemParams {
    pub fn new(gap: f64) -> Result<Self> {
        if !(gap.is_finite() && gap > 0.0) {
            return Err(Error::invalid("gap", format!("must be finite and > 0, got {gap}")));
        }
        Ok(Self { gap })
    }

    /// The energy gap Δ.
    pub fn gap(&self) -> f64 {
        self.gap
    }

    /// Quantum speed limit `π/Δ`: the shortest duration admitting full transfer.
    pub fn t_min(&self) -> f64 {
        PI / self.gap
    }

    /// Duration `ratio · T_min`.
    pub fn duration_for_ratio(&self, ratio: f64) -> f64 {
        ratio * self.t_min()
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { gap: 1.0 }
    }
}

/// A piecewise-constant control field: `N_ts` amplitudes spread evenly over
/// a total duration `T`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlField {
    amplitudes: Vec<f64>,
    duration: f64,
}

impl ControlField {
    pub fn new(amplitudes: Vec<f64>, duration: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "a control field needs at least one slot"));
        }
        if let Some(bad) = amplitudes.iter().find(|a| !a.is_finite()) {
            return Err(Error::invalid("amplitudes", format!("non-finite amplitude {bad}")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(
                "duration",
                format!("must be finite and > 0, got {duration}"),
            ));
        }
        Ok(Self {
            amplitudes,
            duration,
        })
    }

    /// The zero field with `n_slots` slots.
    pub fn zeros(n_slots: usize, duration: f64) -> Result<Self> {
        Self::new(vec![0.0; n_slots], duration)
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn n_slots(&self) -> usize {
        self.amplitudes.len()
    }

    /// Width of one slot, `T / N_ts`.
    pub fn dt(&self) -> f64 {
        self.duration / self.amplitudes.len() as f64
    }

    pub fn into_amplitudes(self) -> Vec<f64> {
        self.amplitudes
    }

    /// Same duration and slot count, different amplitudes. Used by the
    /// optimizer, which never changes the discretization.
    pub(crate) fn with_amplitudes(&self, amplitudes: Vec<f64>) -> Self {
        debug_assert_eq!(amplitudes.len(), self.amplitudes.len());
        Self {
            amplitudes,
            duration: self.duration,
        }
    }

    pub fn negated(&self) -> Self {
        self.with_amplitudes(self.amplitudes.iter().map(|a| -a).collect())
    }

    /// The field played backwards in time.
    pub fn reversed(&self) -> Self {
        self.with_amplitudes(self.amplitudes.iter().rev().copied().collect())
    }

    /// Splits every slot into `factor` equal sub-slots carrying the same value.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be positive"));
        }
        let amplitudes = self
            .amplitudes
            .iter()
            .flat_map(|&a| std::iter::repeat(a).take(factor))
            .collect();
        Ok(Self {
            amplitudes,
            duration: self.duration,
        })
    }

    pub fn same_grid(&self, other: &ControlField) -> bool {
        self.n_slots() == other.n_slots() && self.duration == other.duration
    }
}

/// A 2×2 complex matrix, row-major. Propagators produced by this module
/// are unitary to round-off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary2(pub [[Complex64; 2]; 2]);

impl Unitary2 {
    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Unitary2([[one, zero], [zero, one]])
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.0[row][col]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Unitary2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn transpose(&self) -> Self {
        let m = &self.0;
        Unitary2([[m[0][0], m[1][0]], [m[0][1], m[1][1]]])
    }

    pub fn det(&self) -> Complex64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Unitary2) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }

    /// `‖U†U − I‖∞` taken entrywise.
    pub fn unitarity_error(&self) -> f64 {
        (self.dagger() * *self).max_abs_diff(&Unitary2::identity())
    }

    /// Applies the matrix to a column vector.
    pub fn apply(&self, ket: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            m[0][0] * ket[0] + m[0][1] * ket[1],
            m[1][0] * ket[0] + m[1][1] * ket[1],
        ]
    }

    /// Row vector times matrix.
    pub fn apply_left(&self, bra: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [
            bra[0] * m[0][0] + bra[1] * m[1][0],
            bra[0] * m[0][1] + bra[1] * m[1][1],
        ]
    }
}

impl Mul for Unitary2 {
    type Output = Unitary2;

    fn mul(self, rhs: Unitary2) -> Unitary2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Unitary2(out)
    }
}

/// `H(ε) = (Δ/2)·σx + ε·σz`. The matrix is real symmetric.
pub fn hamiltonian(eps: f64, params: &SystemParams) -> [[f64; 2]; 2] {
    let half_gap = 0.5 * params.gap;
    [[eps, half_gap], [half_gap, -eps]]
}

/// Slot propagator `exp(-i·H(ε)·dt)`.
pub fn step_propagator(eps: f64, dt: f64, params: &SystemParams) -> Unitary2 {
    let half_gap = 0.5 * params.gap;
    let (_, cos, s) = rotation_terms(eps, dt, half_gap);
    closed_form(eps, half_gap, cos, s)
}

/// `(Ω, cos(Ω·dt), sin(Ω·dt)/Ω)` for one slot.
#[inline]
fn rotation_terms(eps: f64, dt: f64, half_gap: f64) -> (f64, f64, f64) {
    let omega = half_gap.hypot(eps);
    let (sin, cos) = (omega * dt).sin_cos();
    (omega, cos, sin / omega)
}

#[inline]
fn closed_form(eps: f64, half_gap: f64, cos: f64, s: f64) -> Unitary2 {
    Unitary2([
        [Complex64::new(cos, -s * eps), Complex64::new(0.0, -s * half_gap)],
        [Complex64::new(0.0, -s * half_gap), Complex64::new(cos, s * eps)],
    ])
}

/// Slot propagator together with its exact derivative with respect to ε.
pub(crate) fn step_propagator_with_derivative(
    eps: f64,
    dt: f64,
    params: &SystemParams,
) -> (Unitary2, Unitary2) {
    let half_gap = 0.5 * params.gap;
    let (omega, cos, s) = rotation_terms(eps, dt, half_gap);
    // d/dε of cos(Ω dt) and of sin(Ω dt)/Ω, using dΩ/dε = ε/Ω.
    let dc = -dt * s * eps;
    let ds = (dt * cos - s) * eps / (omega * omega);
    let u = closed_form(eps, half_gap, cos, s);
    let diag = ds * eps + s;
    let du = Unitary2([
        [Complex64::new(dc, -diag), Complex64::new(0.0, -ds * half_gap)],
        [Complex64::new(0.0, -ds * half_gap), Complex64::new(dc, diag)],
    ]);
    (u, du)
}

/// Full propagator `U_T` of a piecewise-constant field.
pub fn total_propagator(field: &ControlField, params: &SystemParams) -> Unitary2 {
    let dt = field.dt();
    field
        .amplitudes()
        .iter()
        .fold(Unitary2::identity(), |acc, &eps| {
            step_propagator(eps, dt, params) * acc
        })
}

/// Propagates |0⟩ through the field and returns `⟨1|U_T|0⟩`.
pub(crate) fn transfer_amplitude(field: &ControlField, params: &SystemParams) -> Complex64 {
    let dt = field.dt();
    let ket = field.amplitudes().iter().fold(
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        |ket, &eps| step_propagator(eps, dt, params).apply(ket),
    );
    ket[1]
}

/// Clamps a transfer probability into `[0, 1]`.
///
/// Panics if the raw value leaves the interval by more than round-off, which
/// would mean the propagation lost unitarity.
pub(crate) fn clamp_fidelity(raw: f64) -> f64 {
    assert!(
        raw > -FIDELITY_ROUNDOFF && raw < 1.0 + FIDELITY_ROUNDOFF,
        "transfer probability {raw} outside [0, 1] beyond round-off"
    );
    raw.clamp(0.0, 1.0)
}

/// Transfer fidelity `J = |⟨1|U_T|0⟩|²`.
pub fn fidelity(field: &ControlField, params: &SystemParams) -> f64 {
    clamp_fidelity(transfer_amplitude(field, params).norm_sqr())
}

/// Two-slot objective `J(a1, a2, T)`: `a1` acts during the first half.
pub fn objective_two_slot(a1: f64, a2: f64, duration: f64, params: &SystemParams) -> f64 {
    let dt = 0.5 * duration;
    let ket = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
    let ket = step_propagator(a1, dt, params).apply(ket);
    let ket = step_propagator(a2, dt, params).apply(ket);
    clamp_fidelity(ket[1].norm_sqr())
}
