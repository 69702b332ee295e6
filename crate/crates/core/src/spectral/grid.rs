use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::C64;
use crate::error::{Error, Result};

/// Uniform periodic grid on `[0, length)` together with its FFT plans.
///
/// Cloning is cheap: the wavenumber table and the plans are shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridData>,
}

struct GridData {
    length: f64,
    n: usize,
    spacing: f64,
    wavenumbers: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Builds a periodic grid of `n` points on a box of length `length`.
///
/// `n` must be even and at least 8.
pub fn make_grid(length: f64, n: usize) -> Result<Grid> {
    Grid::new(length, n)
}

impl Grid {
    pub fn new(length: f64, n: usize) -> Result<Self> {
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("length must be positive, got {length}")));
        }
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!("n must be even and >= 8, got {n}")));
        }
        let dk = 2.0 * PI / length;
        let wavenumbers = (0..n)
            .map(|j| {
                let signed = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                signed * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        Ok(Grid {
            inner: Arc::new(GridData {
                length,
                n,
                spacing: length / n as f64,
                wavenumbers,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            }),
        })
    }

    pub fn length(&self) -> f64 {
        self.inner.length
    }

    pub fn n(&self) -> usize {
        self.inner.n
    }

    pub fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    /// Wavenumbers in standard FFT order; the Nyquist entry carries the
    /// negative sign (`-n/2 * 2π/L`).
    pub fn wavenumbers(&self) -> &[f64] {
        &self.inner.wavenumbers
    }

    /// Grid coordinates `x_j = j * spacing`.
    pub fn points(&self) -> Vec<f64> {
        (0..self.n()).map(|j| j as f64 * self.spacing()).collect()
    }

    pub fn center(&self) -> f64 {
        0.5 * self.length()
    }

    /// Largest resolved wavenumber magnitude, `π n / L`.
    pub fn k_nyquist(&self) -> f64 {
        PI * self.n() as f64 / self.length()
    }

    /// Modes with `|j| > 2/3 * n/2` are removed by [`dealias`](super::dealias).
    pub fn is_dealiased_mode(&self, j: usize) -> bool {
        let n = self.n();
        let signed = if j < n / 2 { j } else { n - j };
        3 * signed > n
    }

    /// Largest wavenumber kept by the 2/3 rule.
    pub fn k_dealias(&self) -> f64 {
        let jmax = (0..self.n() / 2 + 1).filter(|&j| !self.is_dealiased_mode(j)).max().unwrap_or(0);
        jmax as f64 * 2.0 * PI / self.length()
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.n() / 2
    }

    /// Wraps `x` into `[-L/2, L/2)`.
    pub fn wrap_centered(&self, x: f64) -> f64 {
        let l = self.length();
        (x + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    /// Unnormalized forward transform, in place.
    pub(crate) fn forward(&self, buf: &mut [C64]) {
        self.inner.forward.process(buf);
    }

    /// Inverse transform including the `1/n` factor, in place.
    pub(crate) fn inverse(&self, buf: &mut [C64]) {
        self.inner.inverse.process(buf);
        let scale = 1.0 / self.n() as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
    }

    /// Same box and resolution (plans are not compared).
    pub fn same_shape(&self, other: &Grid) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || (self.n() == other.n() && self.length() == other.length())
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.same_shape(other)
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("length", &self.length())
            .field("n", &self.n())
            .field("spacing", &self.spacing())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn small_grid_wavenumbers() {
        let g = make_grid(2.0 * PI, 8).unwrap();
        assert_abs_diff_eq!(g.spacing(), PI / 4.0, epsilon = 1e-15);
        let expected = [0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0];
        for (k, e) in g.wavenumbers().iter().zip(expected) {
            assert_abs_diff_eq!(*k, e, epsilon = 1e-14);
        }
    }

    #[test]
    fn default_box_spacing() {
        let g = make_grid(40.0 * PI, 512).unwrap();
        assert_abs_diff_eq!(g.spacing(), 40.0 * PI / 512.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.spacing() * g.n() as f64, g.length(), epsilon = 1e-12);
    }

    #[test]
    fn antisymmetric_table() {
        let g = make_grid(7.3, 64).unwrap();
        let k = g.wavenumbers();
        for j in 1..32 {
            assert_eq!(k[j], -k[64 - j]);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(make_grid(-1.0, 8).is_err());
        assert!(make_grid(0.0, 8).is_err());
        assert!(make_grid(1.0, 9).is_err());
        assert!(make_grid(1.0, 6).is_err());
        assert!(make_grid(f64::NAN, 16).is_err());
    }

    #[test]
    fn two_thirds_rule_on_eight_points() {
        let g = make_grid(2.0 * PI, 8).unwrap();
        let removed: Vec<usize> = (0..8).filter(|&j| g.is_dealiased_mode(j)).collect();
        assert_eq!(removed, vec![3, 4, 5]);
        assert_abs_diff_eq!(g.k_dealias(), 2.0, epsilon = 1e-14);
    }
}
