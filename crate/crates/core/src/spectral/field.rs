use std::ops::{Add, Mul, Neg, Sub};

use super::{Grid, C64};
use crate::error::{Error, Result};

/// Real grid function.
#[derive(Clone, Debug, PartialEq)]
pub struct RealField {
    grid: Grid,
    values: Vec<f64>,
}

/// Fourier coefficients `c_j = Σ_m f_m e^{-i k_j x_m}` (unnormalized forward
/// transform). The inverse carries the `1/n`, so `to_values ∘ to_modes` is
/// the identity and `Σ f_m² = (1/n) Σ |c_j|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeCoeffs {
    grid: Grid,
    coeffs: Vec<C64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub linf: f64,
    pub mean: f64,
}

/// Zero-mean antiderivative plus the mean that had to be discarded.
#[derive(Clone, Debug)]
pub struct Antiderivative {
    pub field: RealField,
    pub integrand_mean: f64,
}

impl Antiderivative {
    pub fn mean_exceeds(&self, tol: f64) -> bool {
        self.integrand_mean.abs() > tol
    }
}

impl RealField {
    /// Wraps sample values; rejects non-finite entries and length mismatch.
    pub fn new(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::InvalidArgument(format!("expected {} samples, got {}", grid.n(), values.len())));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context: "field samples".into(), time: f64::NAN });
        }
        Ok(RealField { grid: grid.clone(), values })
    }

    pub(crate) fn from_vec_unchecked(grid: &Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n());
        RealField { grid: grid.clone(), values }
    }

    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        let h = grid.spacing();
        let values = (0..grid.n()).map(|j| f(j as f64 * h)).collect();
        RealField { grid: grid.clone(), values }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: &Grid, c: f64) -> Self {
        RealField { grid: grid.clone(), values: vec![c; grid.n()] }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealField {
        RealField { grid: self.grid.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_map(&self, other: &RealField, f: impl Fn(f64, f64) -> f64) -> RealField {
        assert!(self.grid.same_shape(&other.grid), "fields live on different grids");
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        RealField { grid: self.grid.clone(), values }
    }

    pub fn scale(&self, a: f64) -> RealField {
        self.map(|v| a * v)
    }

    /// Pointwise (aliased) product.
    pub fn product(&self, other: &RealField) -> RealField {
        self.zip_map(other, |a, b| a * b)
    }

    pub fn powi(&self, p: i32) -> RealField {
        self.map(|v| v.powi(p))
    }

    /// `self + a * other`
    pub fn axpy(&self, a: f64, other: &RealField) -> RealField {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn to_modes(&self) -> ModeCoeffs {
        let mut coeffs: Vec<C64> = self.values.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.grid.forward(&mut coeffs);
        ModeCoeffs { grid: self.grid.clone(), coeffs }
    }

    pub fn norms(&self) -> Norms {
        norms(self)
    }

    /// Quadrature `h Σ f_j`.
    pub fn integral(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// Evaluates the trigonometric interpolant at an arbitrary `x` (periodic).
    pub fn eval_at(&self, x: f64) -> f64 {
        self.to_modes().eval_at(x)
    }
}

impl ModeCoeffs {
    pub fn new(grid: &Grid, coeffs: Vec<C64>) -> Result<Self> {
        if coeffs.len() != grid.n() {
            return Err(Error::InvalidArgument(format!("expected {} coefficients, got {}", grid.n(), coeffs.len())));
        }
        Ok(ModeCoeffs { grid: grid.clone(), coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.coeffs
    }

    /// Inverse transform; the imaginary part (roundoff for conjugate-symmetric
    /// input) is discarded.
    pub fn to_values(&self) -> RealField {
        let mut buf = self.coeffs.clone();
        self.grid.inverse(&mut buf);
        RealField { grid: self.grid.clone(), values: buf.into_iter().map(|c| c.re).collect() }
    }

    /// Largest violation of `c_j = conj(c_{n-j})`.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.coeffs.len();
        let mut worst = self.coeffs[0].im.abs();
        for j in 1..n {
            worst = worst.max((self.coeffs[j] - self.coeffs[n - j].conj()).norm());
        }
        worst
    }

    pub fn eval_at(&self, x: f64) -> f64 {
        let n = self.grid.n();
        let k = self.grid.wavenumbers();
        let mut acc = self.coeffs[0].re;
        for j in 1..n / 2 {
            let phase = C64::from_polar(1.0, k[j] * x);
            acc += 2.0 * (self.coeffs[j] * phase).re;
        }
        // Nyquist mode evaluated as a cosine so real samples stay real.
        acc += self.coeffs[n / 2].re * (k[n / 2] * x).cos();
        acc / n as f64
    }
}

/// Multiplies spectral coefficients by `(i k)^order`, zeroing the Nyquist mode
/// for odd orders.
pub(crate) fn deriv_in_place(grid: &Grid, coeffs: &mut [C64], order: u32) {
    let k = grid.wavenumbers();
    for (j, c) in coeffs.iter_mut().enumerate() {
        if order % 2 == 1 && grid.is_nyquist(j) {
            *c = C64::new(0.0, 0.0);
        } else {
            *c *= ik_pow(k[j], order);
        }
    }
}

pub(crate) fn ik_pow(k: f64, order: u32) -> C64 {
    let mag = k.powi(order as i32);
    match order % 4 {
        0 => C64::new(mag, 0.0),
        1 => C64::new(0.0, mag),
        2 => C64::new(-mag, 0.0),
        _ => C64::new(0.0, -mag),
    }
}

pub(crate) fn dealias_in_place(grid: &Grid, coeffs: &mut [C64]) {
    for (j, c) in coeffs.iter_mut().enumerate() {
        if grid.is_dealiased_mode(j) {
            *c = C64::new(0.0, 0.0);
        }
    }
}

/// Spectral derivative of the given order (`order >= 1`).
pub fn deriv(f: &RealField, order: u32) -> RealField {
    assert!(order >= 1, "derivative order must be at least 1");
    let mut m = f.to_modes();
    deriv_in_place(&f.grid, &mut m.coeffs, order);
    m.to_values()
}

/// Antiderivative in the zero-mean gauge. The mean of `f` cannot be integrated
/// on a periodic box; it is dropped and reported.
pub fn antideriv_zero_mean(f: &RealField) -> Antiderivative {
    let mut m = f.to_modes();
    let n = f.grid.n();
    let integrand_mean = m.coeffs[0].re / n as f64;
    let k = f.grid.wavenumbers();
    for j in 0..n {
        if j == 0 || f.grid.is_nyquist(j) {
            m.coeffs[j] = C64::new(0.0, 0.0);
        } else {
            m.coeffs[j] /= C64::new(0.0, k[j]);
        }
    }
    Antiderivative { field: m.to_values(), integrand_mean }
}

/// Zeros every mode with `|k_j| > (2/3) k_max`.
pub fn dealias(m: &ModeCoeffs) -> ModeCoeffs {
    let mut out = m.clone();
    dealias_in_place(&m.grid, &mut out.coeffs);
    out
}

/// `l2 = sqrt(h Σ f²)`, `linf = max |f|`, `mean = Σ f / n`.
pub fn norms(f: &RealField) -> Norms {
    let h = f.grid.spacing();
    let mut sq = 0.0;
    let mut linf: f64 = 0.0;
    let mut sum = 0.0;
    for &v in &f.values {
        sq += v * v;
        linf = linf.max(v.abs());
        sum += v;
    }
    Norms { l2: (h * sq).sqrt(), linf, mean: sum / f.values.len() as f64 }
}

/// Product of two fields with both factors and the result truncated by the
/// 2/3 rule.
pub fn dealiased_product(a: &RealField, b: &RealField) -> RealField {
    let at = dealias(&a.to_modes()).to_values();
    let bt = dealias(&b.to_modes()).to_values();
    dealias(&at.product(&bt).to_modes()).to_values()
}

macro_rules! field_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&RealField> for &RealField {
            type Output = RealField;
            fn $method(self, rhs: &RealField) -> RealField {
                self.zip_map(rhs, |a, b| a $op b)
            }
        }
        impl $trait<RealField> for RealField {
            type Output = RealField;
            fn $method(self, rhs: RealField) -> RealField {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&RealField> for RealField {
            type Output = RealField;
            fn $method(self, rhs: &RealField) -> RealField {
                (&self).$method(rhs)
            }
        }
        impl $trait<RealField> for &RealField {
            type Output = RealField;
            fn $method(self, rhs: RealField) -> RealField {
                self.$method(&rhs)
            }
        }
    };
}

field_binop!(Add, add, +);
field_binop!(Sub, sub, -);

impl Mul<f64> for &RealField {
    type Output = RealField;
    fn mul(self, a: f64) -> RealField {
        self.scale(a)
    }
}

impl Mul<f64> for RealField {
    type Output = RealField;
    fn mul(self, a: f64) -> RealField {
        self.scale(a)
    }
}

impl Mul<&RealField> for f64 {
    type Output = RealField;
    fn mul(self, f: &RealField) -> RealField {
        f.scale(self)
    }
}

impl Mul<RealField> for f64 {
    type Output = RealField;
    fn mul(self, f: RealField) -> RealField {
        f.scale(self)
    }
}

impl Neg for &RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.scale(-1.0)
    }
}

impl Neg for RealField {
    type Output = RealField;
    fn neg(self) -> RealField {
        self.scale(-1.0)
    }
}
