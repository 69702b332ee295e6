//! Fourth-order central differences in time over stored snapshots.

use crate::error::{Error, Result};
use crate::spectral::RealField;

/// Snapshots needed on each side of a differenced time.
pub const HALF_WIDTH: usize = 2;

/// `(f[i-2] - 8 f[i-1] + 8 f[i+1] - f[i+2]) / (12 dt)`.
///
/// `at(j)` returns snapshot `j`; `i` must satisfy `2 <= i < len - 2`.
pub fn central_diff4<'a, F>(at: F, len: usize, i: usize, dt: f64) -> Result<RealField>
where
    F: Fn(usize) -> &'a RealField,
{
    if i < HALF_WIDTH || i + HALF_WIDTH >= len {
        return Err(Error::Trajectory(format!(
            "time difference at index {i} needs two snapshots on each side (have {len})"
        )));
    }
    let c = 1.0 / (12.0 * dt);
    let (m2, m1, p1, p2) = (at(i - 2), at(i - 1), at(i + 1), at(i + 2));
    let vals = m2
        .values()
        .iter()
        .zip(m1.values())
        .zip(p1.values())
        .zip(p2.values())
        .map(|(((a, b), d), e)| c * ((a - e) + 8.0 * (d - b)))
        .collect();
    Ok(RealField::from_vec_unchecked(m2.grid(), vals))
}

/// Indices at which [`central_diff4`] is defined.
pub fn interior(len: usize) -> std::ops::Range<usize> {
    if len < 2 * HALF_WIDTH + 1 {
        0..0
    } else {
        HALF_WIDTH..len - HALF_WIDTH
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::make_grid;

    #[test]
    fn exact_for_quartic_in_time() {
        let g = make_grid(1.0, 8).unwrap();
        let dt = 0.1;
        let snaps: Vec<RealField> = (0..7).map(|j| RealField::constant(&g, (j as f64 * dt).powi(4))).collect();
        for i in interior(snaps.len()) {
            let d = central_diff4(|j| &snaps[j], snaps.len(), i, dt).unwrap();
            let t = i as f64 * dt;
            assert!((d.values()[0] - 4.0 * t.powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn edges_are_rejected() {
        let g = make_grid(1.0, 8).unwrap();
        let snaps = vec![RealField::zeros(&g); 5];
        assert!(central_diff4(|j| &snaps[j], 5, 1, 0.1).is_err());
        assert!(central_diff4(|j| &snaps[j], 5, 2, 0.1).is_ok());
        assert_eq!(interior(4), 0..0);
    }
}
