//! Spectral multipliers of the fractional conformal operators P_{2γ} on Sⁿ,
//! Q-curvatures and sharp Sobolev constants.
//!
//! P_{2γ} acts on degree-l harmonics by Γ(l+n/2+γ)/Γ(l+n/2−γ), which comes
//! from B = √(Δ + ((n−1)/2)²) having eigenvalue l + (n−1)/2.

use crate::error::{Error, Result};
use crate::specfun::gamma_ratio;
use crate::sphere_spectral::{sphere_area, HarmonicCoefficients};

fn check_order(n: usize, gamma: f64, closed: bool) -> Result<()> {
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    let half = n as f64 / 2.0;
    if gamma > 0.0 && (gamma < half || (closed && gamma == half)) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange {
            n,
            gamma,
            range: if closed {
                format!("(0, {half}]")
            } else {
                format!("(0, {half})")
            },
        })
    }
}

/// Eigenvalue of P_{2γ} on degree-l harmonics of Sⁿ.
///
/// The critical order γ = n/2 is admitted: the multiplier is still finite
/// there and vanishes where 1/Γ(l+n/2−γ) does.
pub fn multiplier_p2gamma(n: usize, gamma: f64, l: usize) -> Result<f64> {
    check_order(n, gamma, true)?;
    let x = l as f64 + n as f64 / 2.0;
    let lower = x - gamma;
    if lower <= 0.0 && (lower - lower.round()).abs() < 1e-12 {
        return Ok(0.0);
    }
    gamma_ratio(x, gamma)
}

/// Per-degree coefficient of ∫(|Δω|² + 2|∇ω|²) on S⁴, equal to
/// l(l+1)(l+2)(l+3).
pub fn paneitz_energy_multiplier(l: usize) -> f64 {
    let lam = (l * (l + 3)) as f64;
    lam * lam + 2.0 * lam
}

/// Table of μ_l for l = 0..=L.
#[derive(Debug, Clone)]
pub struct SpectralMultiplier {
    pub n: usize,
    pub gamma: f64,
    pub eigenvalues: Vec<f64>,
}

impl SpectralMultiplier {
    pub fn new(n: usize, gamma: f64, band_limit: usize) -> Result<Self> {
        let eigenvalues = (0..=band_limit)
            .map(|l| multiplier_p2gamma(n, gamma, l))
            .collect::<Result<_>>()?;
        Ok(Self { n, gamma, eigenvalues })
    }

    pub fn band_limit(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// Σ μ_l c², i.e. ∫ f P_{2γ} f.
    pub fn energy(&self, c: &HarmonicCoefficients) -> Result<f64> {
        self.check(c)?;
        Ok(c.quadratic_form(|l| self.eigenvalues[l]))
    }

    fn check(&self, c: &HarmonicCoefficients) -> Result<()> {
        if c.n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "coefficients on S{} vs operator on S{}",
                c.n, self.n
            )));
        }
        if c.band_limit > self.band_limit() {
            return Err(Error::BandLimit {
                requested: c.band_limit,
                available: self.band_limit(),
            });
        }
        Ok(())
    }
}

/// Coefficient-wise action of the multiplier.
pub fn apply_operator(c: &HarmonicCoefficients, m: &SpectralMultiplier) -> Result<HarmonicCoefficients> {
    m.check(c)?;
    Ok(c.scale_by_degree(|l| m.eigenvalues[l]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpConstant {
    pub n: usize,
    pub gamma: f64,
    /// Y_γ(Sⁿ) = Γ(n/2+γ)/Γ(n/2−γ)·|Sⁿ|^{2γ/n}.
    pub y: f64,
    /// Q_{2γ} = (2/(n−2γ))·Γ(n/2+γ)/Γ(n/2−γ).
    pub q_curvature: f64,
    /// Critical exponent 2n/(n−2γ).
    pub exponent: f64,
}

pub fn sharp_constants(n: usize, gamma: f64) -> Result<SharpConstant> {
    check_order(n, gamma, false)?;
    let nf = n as f64;
    let mu0 = gamma_ratio(nf / 2.0, gamma)?;
    Ok(SharpConstant {
        n,
        gamma,
        y: mu0 * sphere_area(n).powf(2.0 * gamma / nf),
        q_curvature: 2.0 / (nf - 2.0 * gamma) * mu0,
        exponent: 2.0 * nf / (nf - 2.0 * gamma),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_spectral::{build_grid, random_band_limited, synthesize, Layout};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn integer_order_examples() {
        assert_relative_eq!(multiplier_p2gamma(2, 1.0, 1).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            multiplier_p2gamma(4, 2.0 - 1e-15, 1).unwrap(),
            24.0,
            max_relative = 1e-12
        );
        let g = 0.37;
        let want = crate::specfun::gamma_ratio(1.0, g).unwrap();
        assert_relative_eq!(multiplier_p2gamma(2, g, 0).unwrap(), want, max_relative = 1e-15);
    }

    #[test]
    fn conformal_laplacian_factorisation() {
        for n in 2..=4 {
            let c = (n * (n - 2)) as f64 / 4.0;
            for l in 0..=128 {
                let want = l as f64 * (l as f64 + n as f64 - 1.0) + c;
                let got = multiplier_p2gamma(n, 1.0, l).unwrap();
                if want == 0.0 {
                    assert!(got.abs() < 1e-14);
                } else {
                    assert_relative_eq!(got, want, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn paneitz_limit() {
        assert_eq!(paneitz_energy_multiplier(0), 0.0);
        assert_eq!(paneitz_energy_multiplier(1), 24.0);
        assert_eq!(paneitz_energy_multiplier(2), 120.0);
        for l in 1..=64 {
            let got = multiplier_p2gamma(4, 2.0 - 1e-6, l).unwrap();
            let lf = l as f64;
            assert_eq!(paneitz_energy_multiplier(l), lf * (lf + 1.0) * (lf + 2.0) * (lf + 3.0));
            assert_relative_eq!(got, paneitz_energy_multiplier(l), max_relative = 1e-4);
        }
    }

    #[test]
    fn monotone_positive_and_leading_symbol() {
        for (n, g) in [(2, 0.3), (2, 0.95), (3, 1.2), (4, 1.5), (4, 1.99)] {
            let m = SpectralMultiplier::new(n, g, 256).unwrap();
            assert!(m.eigenvalues.iter().all(|v| *v > 0.0));
            assert!(m.eigenvalues.windows(2).all(|w| w[1] > w[0]));
            let ratio = m.eigenvalues[256] / 256f64.powf(2.0 * g);
            assert!((ratio - 1.0).abs() < 0.05, "n={n} g={g}: {ratio}");
        }
    }

    #[test]
    fn order_range_is_enforced() {
        assert_eq!(multiplier_p2gamma(2, 1.0, 0).unwrap(), 0.0);
        assert!(matches!(
            multiplier_p2gamma(2, 1.2, 0),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(multiplier_p2gamma(4, 0.0, 3).is_err());
        assert!(matches!(
            SpectralMultiplier::new(2, 1.5, 4),
            Err(Error::OrderOutOfRange { .. })
        ));
        assert!(sharp_constants(4, 2.0).is_err());
        assert!(matches!(
            multiplier_p2gamma(5, 1.0, 0),
            Err(Error::UnsupportedDimension(5))
        ));
    }

    #[test]
    fn apply_examples() {
        let m = SpectralMultiplier::new(4, 1.3, 8).unwrap();
        let zero = HarmonicCoefficients::zeros(4, 8, Layout::Zonal);
        assert!(apply_operator(&zero, &m).unwrap().values.iter().all(|v| *v == 0.0));
        let mut one = HarmonicCoefficients::zeros(4, 8, Layout::Zonal);
        one.set(0, 0, 1.0);
        let out = apply_operator(&one, &m).unwrap();
        assert_relative_eq!(
            out.values[0],
            crate::specfun::gamma_ratio(2.0, 1.3).unwrap(),
            max_relative = 1e-15
        );

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = random_band_limited(2, 32, Layout::Full, &mut rng).unwrap();
        let p2 = apply_operator(&c, &SpectralMultiplier::new(2, 1.0, 32).unwrap()).unwrap();
        for (idx, (a, b)) in c.values.iter().zip(&p2.values).enumerate() {
            let lap = crate::sphere_spectral::laplacian_eigenvalue(2, c.degree_at(idx));
            assert!((a * lap - b).abs() <= 1e-12 * b.abs().max(1e-12));
        }

        let wrong = HarmonicCoefficients::zeros(2, 8, Layout::Full);
        assert!(matches!(apply_operator(&wrong, &m), Err(Error::DimensionMismatch(_))));
        let too_big = HarmonicCoefficients::zeros(4, 9, Layout::Zonal);
        assert!(matches!(apply_operator(&too_big, &m), Err(Error::BandLimit { .. })));
    }

    #[test]
    fn sharp_constant_examples() {
        let s = sharp_constants(2, 0.5).unwrap();
        assert_relative_eq!(s.y, PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(s.exponent, 4.0, max_relative = 1e-15);
        let s = sharp_constants(4, 1.0).unwrap();
        assert_relative_eq!(s.y, 2.0 * (8.0 * PI * PI / 3.0).sqrt(), max_relative = 1e-14);
        // Γ(1−γ) blows up: Q → 1 while (1−γ)Q and Y vanish
        let g = 1.0 - 1e-9;
        let s = sharp_constants(2, g).unwrap();
        assert_relative_eq!(s.q_curvature, 1.0, max_relative = 1e-6);
        assert!((1.0 - g) * s.q_curvature < 1e-8);
        assert!(s.y < 1e-7);
    }

    #[test]
    fn sharp_constant_identity() {
        for n in [2usize, 4] {
            for k in 1..=50 {
                let g = n as f64 / 2.0 * k as f64 / 51.0;
                let s = sharp_constants(n, g).unwrap();
                let rebuilt = (n as f64 - 2.0 * g) / 2.0 * s.q_curvature * sphere_area(n).powf(2.0 * g / n as f64);
                assert_relative_eq!(s.y, rebuilt, max_relative = 1e-12);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn quadratic_form_is_symmetric(seed in 0u64..10_000, g in 0.05f64..0.95) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_band_limited(2, 12, Layout::Full, &mut rng).unwrap();
            let h = random_band_limited(2, 12, Layout::Full, &mut rng).unwrap();
            let m = SpectralMultiplier::new(2, g, 12).unwrap();
            let grid = build_grid(2, 24).unwrap();
            let pf = synthesize(&apply_operator(&f, &m).unwrap(), &grid).unwrap();
            let ph = synthesize(&apply_operator(&h, &m).unwrap(), &grid).unwrap();
            let fv = synthesize(&f, &grid).unwrap();
            let hv = synthesize(&h, &grid).unwrap();
            let a = grid.integrate(&hv.iter().zip(&pf).map(|(x, y)| x * y).collect::<Vec<_>>()).unwrap();
            let b = grid.integrate(&fv.iter().zip(&ph).map(|(x, y)| x * y).collect::<Vec<_>>()).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(b.abs()).max(1.0));
        }
    }
}
