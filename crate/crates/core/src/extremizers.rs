//! Möbius conformal factors u_a(x) = (1−|a|²)/|x−a|² and the functions built
//! from them that turn the sharp inequalities into equalities.

use crate::error::{Error, Result};
use crate::sphere_spectral::{FunctionSpec, SpecBody};

/// u_a for a point a in the open unit ball of R^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalFactor {
    pub n: usize,
    pub a: Vec<f64>,
}

impl ConformalFactor {
    /// `a` holds one component (a point on the polar axis) or n+1.
    pub fn new(n: usize, a: Vec<f64>) -> Result<Self> {
        let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(norm < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|a| = {norm} is not inside the unit ball"
            )));
        }
        // validates dimension and axis restrictions
        FunctionSpec::new(
            n,
            SpecBody::ConformalFamily {
                a: a.clone(),
                power: None,
            },
        )?;
        Ok(Self { n, a })
    }

    pub fn on_axis(n: usize, t: f64) -> Result<Self> {
        Self::new(n, vec![t])
    }

    pub fn value(&self, theta: f64, phi: f64) -> f64 {
        self.log_spec().eval(theta, phi).expect("validated").exp()
    }

    /// ω_a = ln u_a, so that e^{nω_a} is the Jacobian of the Möbius map.
    pub fn log_spec(&self) -> FunctionSpec {
        FunctionSpec {
            n: self.n,
            body: SpecBody::ConformalFamily {
                a: self.a.clone(),
                power: None,
            },
        }
    }

    /// u_a^{(n−2γ)/2}.
    pub fn power_spec(&self, gamma: f64) -> Result<FunctionSpec> {
        let half = self.n as f64 / 2.0;
        if !(gamma > 0.0 && gamma < half) {
            return Err(Error::OrderOutOfRange {
                n: self.n,
                gamma,
                range: format!("(0, {half})"),
            });
        }
        FunctionSpec::new(
            self.n,
            SpecBody::ConformalFamily {
                a: self.a.clone(),
                power: Some(half - gamma),
            },
        )
    }
}

/// ω_a = ln u_a for a = t·e_{n+1}, a zonal function.
pub fn conformal_weight(n: usize, t: f64) -> Result<FunctionSpec> {
    Ok(ConformalFactor::on_axis(n, t)?.log_spec())
}

/// f_a = u_a^{(n−2γ)/2} for a = t·e_{n+1}.
pub fn fractional_extremizer(n: usize, gamma: f64, t: f64) -> Result<FunctionSpec> {
    ConformalFactor::on_axis(n, t)?.power_spec(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_spectral::{build_grid, sphere_area, Layout, SphereGrid};
    use approx::assert_relative_eq;

    #[test]
    fn origin_gives_trivial_functions() {
        let w = conformal_weight(2, 0.0).unwrap();
        assert_eq!(w.eval(0.3, 0.1).unwrap(), 0.0);
        let f = fractional_extremizer(4, 1.5, 0.0).unwrap();
        assert_eq!(f.eval(2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn jacobian_normalisation() {
        for (n, t, band) in [(2usize, 0.5, 64usize), (4, 0.3, 64), (3, 0.6, 96)] {
            let g = build_grid(n, band).unwrap();
            let w = conformal_weight(n, t).unwrap().sample(&g).unwrap();
            let jac: Vec<f64> = w.iter().map(|v| (n as f64 * v).exp()).collect();
            assert_relative_eq!(g.integrate(&jac).unwrap(), sphere_area(n), max_relative = 1e-9);
        }
    }

    #[test]
    fn off_axis_point_on_s2() {
        let f = ConformalFactor::new(2, vec![0.3, -0.2, 0.4]).unwrap();
        let g = SphereGrid::new(2, 64, Layout::Full).unwrap();
        let jac = g.sample(|t, p| f.value(t, p).powi(2));
        assert_relative_eq!(
            g.integrate(&jac).unwrap(),
            4.0 * std::f64::consts::PI,
            max_relative = 1e-9
        );
        assert!(g.sample(|t, p| f.value(t, p)).iter().all(|u| *u > 0.0));
    }

    #[test]
    fn parameter_errors() {
        assert!(conformal_weight(2, 1.0).is_err());
        assert!(ConformalFactor::new(4, vec![0.1, 0.0, 0.0, 0.0, 0.2]).is_err());
        assert!(fractional_extremizer(2, 1.0, 0.3).is_err());
        assert!(fractional_extremizer(4, 0.0, 0.3).is_err());
    }
}
