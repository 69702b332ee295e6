//! Fourth-order exponential time differencing (ETDRK4) for diagonal linear
//! operators.
//!
//! The state is a flat vector of spectral (or characteristic) coefficients,
//! each with its own linear rate `λ`. For `du/dt = λ u + N(u)` one step is
//!
//! ```text
//! a = e^{hλ/2} u + Q N(u)
//! b = e^{hλ/2} u + Q N(a)
//! c = e^{hλ/2} a + Q (2 N(b) - N(u))
//! u⁺ = e^{hλ} u + f₁ N(u) + 2 f₂ (N(a) + N(b)) + f₃ N(c)
//! ```
//!
//! The φ-function coefficients `Q, f₁, f₂, f₃` are evaluated as means over a
//! circle of unit radius around `hλ`, which avoids the cancellation in the
//! direct formulas at small `|hλ|`. With `λ = 0` the scheme is exactly the
//! classical RK4.

use super::C64;
use crate::error::{Error, Result};

const CONTOUR_POINTS: usize = 64;

/// Precomputed per-coefficient factors for a fixed step `h`.
#[derive(Clone, Debug)]
pub struct EtdCoefficients {
    h: f64,
    e: Vec<C64>,
    e_half: Vec<C64>,
    q: Vec<C64>,
    f1: Vec<C64>,
    f2: Vec<C64>,
    f3: Vec<C64>,
}

impl EtdCoefficients {
    pub fn new(h: f64, rates: &[C64]) -> Self {
        let roots: Vec<C64> = (0..CONTOUR_POINTS)
            .map(|m| {
                let angle = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / CONTOUR_POINTS as f64;
                C64::from_polar(1.0, angle)
            })
            .collect();
        let len = rates.len();
        let mut out = EtdCoefficients {
            h,
            e: Vec::with_capacity(len),
            e_half: Vec::with_capacity(len),
            q: Vec::with_capacity(len),
            f1: Vec::with_capacity(len),
            f2: Vec::with_capacity(len),
            f3: Vec::with_capacity(len),
        };
        let inv_m = 1.0 / CONTOUR_POINTS as f64;
        for &lam in rates {
            let z = lam * h;
            out.e.push(z.exp());
            out.e_half.push((z * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = (C64::default(), C64::default(), C64::default(), C64::default());
            for &r in &roots {
                let w = z + r;
                let ew = w.exp();
                let w2 = w * w;
                let w3 = w2 * w;
                q += ((w * 0.5).exp() - 1.0) / w;
                f1 += (-4.0 - w + ew * (4.0 - 3.0 * w + w2)) / w3;
                f2 += (2.0 + w + ew * (w - 2.0)) / w3;
                f3 += (-4.0 - 3.0 * w - w2 + ew * (4.0 - w)) / w3;
            }
            out.q.push(q * (h * inv_m));
            out.f1.push(f1 * (h * inv_m));
            out.f2.push(f2 * (h * inv_m));
            out.f3.push(f3 * (h * inv_m));
        }
        out
    }

    pub fn step_size(&self) -> f64 {
        self.h
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    /// Exact propagator `e^{hλ}` for each coefficient.
    pub fn propagator(&self) -> &[C64] {
        &self.e
    }
}

/// ETDRK4 stepper with reusable scratch storage.
#[derive(Clone, Debug)]
pub struct Etdrk4 {
    coef: EtdCoefficients,
    nu: Vec<C64>,
    a: Vec<C64>,
    na: Vec<C64>,
    b: Vec<C64>,
    nb: Vec<C64>,
    c: Vec<C64>,
    nc: Vec<C64>,
}

impl Etdrk4 {
    pub fn new(h: f64, rates: &[C64]) -> Self {
        let coef = EtdCoefficients::new(h, rates);
        let n = coef.len();
        let z = vec![C64::default(); n];
        Etdrk4 { coef, nu: z.clone(), a: z.clone(), na: z.clone(), b: z.clone(), nb: z.clone(), c: z.clone(), nc: z }
    }

    pub fn coefficients(&self) -> &EtdCoefficients {
        &self.coef
    }

    /// Advances `state` by one step. `nonlinear(u, out)` must overwrite `out`
    /// with `N(u)`; it may fail, which aborts the step without touching
    /// `state`.
    pub fn step<F>(&mut self, state: &mut [C64], mut nonlinear: F) -> Result<()>
    where
        F: FnMut(&[C64], &mut [C64]) -> Result<()>,
    {
        assert_eq!(state.len(), self.coef.len(), "state length does not match the linear operator");
        let cf = &self.coef;
        nonlinear(state, &mut self.nu)?;
        for i in 0..state.len() {
            self.a[i] = cf.e_half[i] * state[i] + cf.q[i] * self.nu[i];
        }
        nonlinear(&self.a, &mut self.na)?;
        for i in 0..state.len() {
            self.b[i] = cf.e_half[i] * state[i] + cf.q[i] * self.na[i];
        }
        nonlinear(&self.b, &mut self.nb)?;
        for i in 0..state.len() {
            self.c[i] = cf.e_half[i] * self.a[i] + cf.q[i] * (2.0 * self.nb[i] - self.nu[i]);
        }
        nonlinear(&self.c, &mut self.nc)?;
        let mut finite = true;
        for i in 0..state.len() {
            let next = cf.e[i] * state[i]
                + cf.f1[i] * self.nu[i]
                + 2.0 * cf.f2[i] * (self.na[i] + self.nb[i])
                + cf.f3[i] * self.nc[i];
            finite &= next.re.is_finite() && next.im.is_finite();
            self.c[i] = next;
        }
        if !finite {
            return Err(Error::NonFinite { context: "ETDRK4 step".into(), time: f64::NAN });
        }
        state.copy_from_slice(&self.c);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn zero_rate_reduces_to_rk4_weights() {
        let c = EtdCoefficients::new(0.1, &[C64::new(0.0, 0.0)]);
        assert_abs_diff_eq!(c.q[0].re, 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(c.f1[0].re, 0.1 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.f2[0].re, 0.1 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c.f3[0].re, 0.1 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn contour_matches_direct_formula_for_large_argument() {
        let lam = C64::new(0.0, 37.0);
        let h = 0.5;
        let c = EtdCoefficients::new(h, &[lam]);
        let z = lam * h;
        let f1 = h * (-4.0 - z + z.exp() * (4.0 - 3.0 * z + z * z)) / (z * z * z);
        let q = h * ((z * 0.5).exp() - 1.0) / z;
        assert!((c.f1[0] - f1).norm() <= 1e-13);
        assert!((c.q[0] - q).norm() <= 1e-13);
    }

    #[test]
    fn linear_problem_is_exact() {
        let rates = [C64::new(0.0, 3.0), C64::new(-1.0, 0.5)];
        let mut s = Etdrk4::new(0.3, &rates);
        let mut u = [C64::new(1.0, 0.0), C64::new(0.5, -0.2)];
        let u0 = u;
        for _ in 0..10 {
            s.step(&mut u, |_, out| {
                out.fill(C64::default());
                Ok(())
            })
            .unwrap();
        }
        for (i, lam) in rates.iter().enumerate() {
            let exact = u0[i] * (lam * 3.0).exp();
            assert!((u[i] - exact).norm() <= 1e-13);
        }
    }

    #[test]
    fn fourth_order_on_stiff_scalar_ode() {
        // u' = λu - u²/2 against a fine-step reference.
        fn run(h: f64) -> C64 {
            let lam = C64::new(-5.0, 20.0);
            let mut s = Etdrk4::new(h, &[lam]);
            let mut u = [C64::new(1.0, 0.0)];
            let steps = (1.0 / h).round() as usize;
            for _ in 0..steps {
                s.step(&mut u, |v, out| {
                    out[0] = -v[0] * v[0] * 0.5;
                    Ok(())
                })
                .unwrap();
            }
            u[0]
        }
        let reference = run(1.0 / 2560.0);
        let e1 = (run(1.0 / 40.0) - reference).norm();
        let e2 = (run(1.0 / 80.0) - reference).norm();
        let order = (e1 / e2).log2();
        assert!(order > 3.7 && order < 4.5, "observed order {order}");
    }

    #[test]
    fn nonfinite_result_is_reported() {
        let mut s = Etdrk4::new(0.1, &[C64::new(0.0, 0.0)]);
        let mut u = [C64::new(1.0, 0.0)];
        let err = s.step(&mut u, |_, out| {
            out[0] = C64::new(f64::INFINITY, 0.0);
            Ok(())
        });
        assert!(err.is_err());
        assert_eq!(u[0], C64::new(1.0, 0.0));
    }
}
