//! Double-double reference evaluation of the transfer fidelity, used as a
//! finite-difference oracle whose rounding noise sits far below the
//! tolerances under test.

#![allow(dead_code)]

use twofloat::TwoFloat;

#[derive(Clone, Copy)]
struct C {
    re: TwoFloat,
    im: TwoFloat,
}

impl C {
    fn new(re: TwoFloat, im: TwoFloat) -> Self {
        Self { re, im }
    }

    fn mul(self, o: C) -> C {
        C::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }

    fn add(self, o: C) -> C {
        C::new(self.re + o.re, self.im + o.im)
    }

    fn norm_sqr(self) -> TwoFloat {
        self.re * self.re + self.im * self.im
    }
}

/// `|⟨1|U_T|0⟩|²` with every slot exponential and product in double-double.
pub fn fidelity_dd(amps: &[TwoFloat], duration: TwoFloat, gap: f64) -> TwoFloat {
    let zero = TwoFloat::from(0.0);
    let half_gap = TwoFloat::from(gap) / 2.0;
    let dt = duration / amps.len() as f64;
    // state (c0, c1), starting in |0⟩
    let mut c0 = C::new(TwoFloat::from(1.0), zero);
    let mut c1 = C::new(zero, zero);
    for &eps in amps {
        let omega = (half_gap * half_gap + eps * eps).sqrt();
        let cos = (omega * dt).cos();
        let s = (omega * dt).sin() / omega;
        // U = cos·I − i·s·H with H = [[ε, Δ/2], [Δ/2, −ε]]
        let u00 = C::new(cos, -(s * eps));
        let u01 = C::new(zero, -(s * half_gap));
        let u11 = C::new(cos, s * eps);
        let n0 = u00.mul(c0).add(u01.mul(c1));
        let n1 = u01.mul(c0).add(u11.mul(c1));
        c0 = n0;
        c1 = n1;
    }
    c1.norm_sqr()
}

/// Central difference `(J(ε + h·e_k) − J(ε − h·e_k)) / 2h` in double-double.
pub fn central_difference(amps: &[f64], duration: f64, gap: f64, k: usize, h: f64) -> f64 {
    let base: Vec<TwoFloat> = amps.iter().map(|&a| TwoFloat::from(a)).collect();
    let at = |d: f64| {
        let mut a = base.clone();
        a[k] += d;
        fidelity_dd(&a, TwoFloat::from(duration), gap)
    };
    ((at(h) - at(-h)) / (2.0 * h)).hi()
}

/// Componentwise relative error of an analytic gradient against the oracle.
pub fn worst_relative_error(grad: &[f64], amps: &[f64], duration: f64, gap: f64, h: f64) -> f64 {
    grad.iter()
        .enumerate()
        .map(|(k, &g)| {
            let fd = central_difference(amps, duration, gap, k, h);
            (g - fd).abs() / g.abs().max(fd.abs())
        })
        .fold(0.0, f64::max)
}
