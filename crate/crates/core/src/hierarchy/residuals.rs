use std::collections::BTreeMap;
use std::fmt;

use super::{CorrectionSet, CorrectionTrajectory};
use crate::error::Result;
use crate::spectral::{dealiased_product as prod, deriv, RealField};
use crate::timefd::{central_diff4, interior};

/// Order-matching equations of the hierarchy, grouped by source equation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EquationLabel {
    Mass1,
    Mass2,
    Mass3,
    Velocity1,
    Velocity2,
    Velocity3,
    Velocity4,
    Temperature1,
    Temperature2,
    Temperature3,
    Poisson1,
    Poisson2,
    Poisson3,
}

impl EquationLabel {
    pub const ALL: [EquationLabel; 13] = [
        EquationLabel::Mass1,
        EquationLabel::Mass2,
        EquationLabel::Mass3,
        EquationLabel::Velocity1,
        EquationLabel::Velocity2,
        EquationLabel::Velocity3,
        EquationLabel::Velocity4,
        EquationLabel::Temperature1,
        EquationLabel::Temperature2,
        EquationLabel::Temperature3,
        EquationLabel::Poisson1,
        EquationLabel::Poisson2,
        EquationLabel::Poisson3,
    ];

    /// `true` for the identities that hold with `U₀ = ρ₁ = θ₁ = φ₀`.
    pub fn is_leading(self) -> bool {
        use EquationLabel::*;
        matches!(self, Mass1 | Velocity1 | Temperature1 | Poisson1)
    }

    fn needs_time_derivative(self) -> bool {
        use EquationLabel::*;
        !matches!(self, Mass1 | Velocity1 | Temperature1 | Poisson1 | Poisson2 | Poisson3)
    }

    pub fn name(self) -> &'static str {
        use EquationLabel::*;
        match self {
            Mass1 => "mass1",
            Mass2 => "mass2",
            Mass3 => "mass3",
            Velocity1 => "velocity1",
            Velocity2 => "velocity2",
            Velocity3 => "velocity3",
            Velocity4 => "velocity4",
            Temperature1 => "temperature1",
            Temperature2 => "temperature2",
            Temperature3 => "temperature3",
            Poisson1 => "poisson1",
            Poisson2 => "poisson2",
            Poisson3 => "poisson3",
        }
    }
}

impl fmt::Display for EquationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Time derivatives of the evolved fields at one snapshot.
struct Rates {
    rho1: RealField,
    rho2: RealField,
    u0: RealField,
    u1: RealField,
    u2: RealField,
    theta1: RealField,
    theta2: RealField,
}

fn d(f: &RealField) -> RealField {
    deriv(f, 1)
}

fn residual(label: EquationLabel, c: &CorrectionSet, r: Option<&Rates>) -> RealField {
    use EquationLabel::*;
    let rates = || r.expect("time derivative required");
    match label {
        Mass1 => d(&c.u0) - d(&c.rho1),
        Mass2 => &rates().rho1 - &d(&c.rho2) + d(&prod(&c.rho1, &c.u0)) + d(&c.u1),
        Mass3 => &rates().rho2 - &d(&c.rho3) + d(&(prod(&c.rho2, &c.u0) + prod(&c.rho1, &c.u1))) + d(&c.u2),
        Velocity1 => d(&c.phi0) - d(&c.u0),
        Velocity2 => &rates().u0 - &d(&c.u1) + prod(&c.u0, &d(&c.u0)) + d(&c.phi1),
        Velocity3 => {
            &rates().u1 - &d(&c.u2)
                + prod(&c.u0, &d(&c.u1))
                + prod(&c.u1, &d(&c.u0))
                + d(&c.rho1)
                + d(&c.theta1) * (2.0 / 3.0)
                + d(&c.phi2)
        }
        Velocity4 => {
            let dr1 = d(&c.rho1);
            &rates().u2 - &d(&c.u3)
                + prod(&c.u0, &d(&c.u2))
                + prod(&c.u1, &d(&c.u1))
                + prod(&c.u2, &d(&c.u0))
                + d(&c.rho2)
                - prod(&c.rho1, &dr1)
                + prod(&c.theta1, &dr1) * (2.0 / 3.0)
                + d(&c.theta2) * (2.0 / 3.0)
                + d(&c.phi3)
        }
        Temperature1 => d(&c.u0) - d(&c.theta1),
        Temperature2 => {
            &rates().theta1 - &d(&c.theta2)
                + prod(&c.u0, &d(&c.theta1))
                + prod(&c.theta1, &d(&c.u0)) * (2.0 / 3.0)
                + d(&c.u1)
        }
        Temperature3 => {
            &rates().theta2 - &d(&c.theta3)
                + prod(&c.u0, &d(&c.theta2))
                + prod(&c.u1, &d(&c.theta1))
                + prod(&c.theta2, &d(&c.u0)) * (2.0 / 3.0)
                + prod(&c.theta1, &d(&c.u1)) * (2.0 / 3.0)
                + d(&c.u2)
        }
        Poisson1 => &c.phi0 - &c.rho1,
        Poisson2 => deriv(&c.phi0, 2) * -1.0 + &c.phi1 - &c.rho2,
        Poisson3 => deriv(&c.phi1, 2) * -1.0 + &c.phi2 - &c.rho3,
    }
}

/// Largest L² residual over the stored times for each order-matching
/// equation.
///
/// Equations without a time derivative are evaluated at every snapshot; the
/// others at the interior snapshots where a fourth-order central difference
/// exists. Trajectories shorter than five snapshots report only the former.
pub fn hierarchy_residuals(traj: &CorrectionTrajectory) -> Result<BTreeMap<EquationLabel, f64>> {
    let mut out: BTreeMap<EquationLabel, f64> = EquationLabel::ALL.iter().map(|&l| (l, 0.0)).collect();
    let sets = &traj.sets;
    let len = sets.len();
    for c in sets {
        for label in EquationLabel::ALL.iter().filter(|l| !l.needs_time_derivative()) {
            let v = residual(*label, c, None).norms().l2;
            out.entry(*label).and_modify(|m| *m = m.max(v));
        }
    }
    for i in interior(len) {
        let fd = |pick: fn(&CorrectionSet) -> &RealField| central_diff4(|j| pick(&sets[j]), len, i, traj.dt);
        let rates = Rates {
            rho1: fd(|s| &s.rho1)?,
            rho2: fd(|s| &s.rho2)?,
            u0: fd(|s| &s.u0)?,
            u1: fd(|s| &s.u1)?,
            u2: fd(|s| &s.u2)?,
            theta1: fd(|s| &s.theta1)?,
            theta2: fd(|s| &s.theta2)?,
        };
        for label in EquationLabel::ALL.iter().filter(|l| l.needs_time_derivative()) {
            let v = residual(*label, &sets[i], Some(&rates)).norms().l2;
            out.entry(*label).and_modify(|m| *m = m.max(v));
        }
    }
    Ok(out)
}
