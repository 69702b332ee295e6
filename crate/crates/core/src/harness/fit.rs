use serde::Serialize;

use crate::error::{Error, Result};

/// Least-squares line through `(ln x, ln y)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
}

/// Fits `ln norm = slope · ln ε + intercept`. Needs at least three points
/// with positive `ε` and norm.
pub fn fit_order(pairs: &[(f64, f64)]) -> Result<OrderFit> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("order fit needs at least 3 points, got {}", pairs.len())));
    }
    if let Some(&(x, y)) = pairs.iter().find(|&&(x, y)| !(x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(Error::InvalidArgument(format!("order fit needs positive finite data, got ({x}, {y})")));
    }
    let n = pairs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("order fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let stderr = (ssr / (n - 2.0) / sxx).sqrt();
    Ok(OrderFit { slope, intercept, stderr })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const EPS: [f64; 4] = [0.1, 0.05, 0.025, 0.0125];

    #[test]
    fn exact_square_law() {
        let pairs: Vec<_> = EPS.iter().map(|&e| (e, e * e)).collect();
        let f = fit_order(&pairs).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!(f.stderr < 1e-12);
    }

    #[test]
    fn prefactor_lands_in_intercept() {
        let pairs: Vec<_> = EPS.iter().map(|&e| (e, 5.0 * e.powi(3))).collect();
        let f = fit_order(&pairs).unwrap();
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept - 5f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_order(&[(0.1, 1.0), (0.2, 2.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.2, 0.0), (0.3, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (-0.2, 1.0), (0.3, 1.0)]).is_err());
        assert!(fit_order(&[(0.1, 1.0), (0.1, 2.0), (0.1, 3.0)]).is_err());
    }

    #[test]
    fn scatter_gives_positive_stderr() {
        let f = fit_order(&[(0.1, 0.01), (0.05, 0.003), (0.025, 0.0006)]).unwrap();
        assert!(f.stderr > 0.0);
    }

    proptest! {
        #[test]
        fn recovers_power_laws(p in -2.0f64..5.0, c in 0.01f64..100.0) {
            let pairs: Vec<_> = EPS.iter().map(|&e| (e, c * e.powf(p))).collect();
            let f = fit_order(&pairs).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-10);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
        }

        #[test]
        fn invariant_under_reordering(ys in proptest::collection::vec(1e-6f64..1.0, 4)) {
            let pairs: Vec<_> = EPS.iter().copied().zip(ys).collect();
            let mut rev = pairs.clone();
            rev.reverse();
            let (a, b) = (fit_order(&pairs).unwrap(), fit_order(&rev).unwrap());
            prop_assert!((a.slope - b.slope).abs() < 1e-12);
        }
    }
}
