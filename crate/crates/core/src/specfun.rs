//! Log-Gamma, Gamma ratios and the scattering renormalisation constant.
//!
//! Everything here is double precision. `log_gamma` combines a Taylor series
//! around 1 and 2 (so the zeros of ln Γ keep full relative accuracy) with an
//! downward shift from moderate arguments and the Stirling series beyond. `gamma_ratio` never forms the two
//! Gamma values separately: it shifts both arguments up with an exact product
//! and evaluates the asymptotic difference of log-Gammas, which keeps the
//! relative error near machine precision even for large arguments.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Shift target for the Stirling series.
const STIRLING_MIN: f64 = 12.0;
/// Arguments this close to a nonpositive integer are treated as poles.
const POLE_TOL: f64 = 1e-12;
/// Largest upward shift `gamma_ratio` performs with an explicit product.
const MAX_SHIFT: f64 = 1.0e6;

/// ζ(k) for k = 2..=60, used in the Taylor series of ln Γ(1+z).
const ZETA: [f64; 59] = [
    1.6449340668482264365,
    1.2020569031595942854,
    1.0823232337111381915,
    1.0369277551433699263,
    1.0173430619844491397,
    1.0083492773819228268,
    1.0040773561979443394,
    1.0020083928260822144,
    1.0009945751278180853,
    1.0004941886041194646,
    1.0002460865533080483,
    1.0001227133475784891,
    1.0000612481350587048,
    1.0000305882363070205,
    1.0000152822594086519,
    1.0000076371976378998,
    1.0000038172932649998,
    1.0000019082127165539,
    1.0000009539620338728,
    1.0000004769329867878,
    1.0000002384505027277,
    1.0000001192199259653,
    1.0000000596081890513,
    1.0000000298035035147,
    1.0000000149015548284,
    1.0000000074507117898,
    1.0000000037253340248,
    1.0000000018626597235,
    1.0000000009313274324,
    1.0000000004656629065,
    1.0000000002328311834,
    1.0000000001164155017,
    1.0000000000582077209,
    1.0000000000291038504,
    1.0000000000145519219,
    1.0000000000072759598,
    1.0000000000036379795,
    1.0000000000018189897,
    1.0000000000009094948,
    1.0000000000004547474,
    1.0000000000002273737,
    1.0000000000001136868,
    1.0000000000000568434,
    1.0000000000000284217,
    1.0000000000000142109,
    1.0000000000000071054,
    1.0000000000000035527,
    1.0000000000000017764,
    1.0000000000000008882,
    1.0000000000000004441,
    1.000000000000000222,
    1.000000000000000111,
    1.0000000000000000555,
    1.0000000000000000278,
    1.0000000000000000139,
    1.0000000000000000069,
    1.0000000000000000035,
    1.0000000000000000017,
    1.0000000000000000009,
];

/// B_{2k} / (2k (2k-1)) for k = 1..=8.
const STIRLING_COEFFS: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360_360.0,
    1.0 / 156.0,
    -3617.0 / 122_400.0,
];

/// ln Γ(1+z) for |z| <= 1/2.
fn log_gamma_1p(z: f64) -> f64 {
    // Horner from the top: sum_{k>=2} (-1)^k ζ(k) z^k / k
    let mut acc = 0.0;
    for (i, zeta) in ZETA.iter().enumerate().rev() {
        let k = (i + 2) as f64;
        let sign = if (i + 2) % 2 == 0 { 1.0 } else { -1.0 };
        acc = acc * z + sign * zeta / k;
    }
    z * (-EULER_GAMMA + z * acc)
}

fn stirling_tail(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut acc = 0.0;
    for c in STIRLING_COEFFS.iter().rev() {
        acc = acc * inv2 + c;
    }
    acc * inv
}

/// Natural logarithm of Γ(x) for x > 0.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            function: "log_gamma",
            value: x,
        });
    }
    if x < 0.5 {
        return Ok(log_gamma_1p(x) - x.ln());
    }
    if x < 1.5 {
        return Ok(log_gamma_1p(x - 1.0));
    }
    if x < 2.5 {
        let z = x - 2.0;
        return Ok(z.ln_1p() + log_gamma_1p(z));
    }
    if x < STIRLING_MIN {
        // shift down into the Taylor window; the product has at most 10 factors
        let mut y = x;
        let mut prod = 1.0;
        while y >= 2.5 {
            y -= 1.0;
            prod *= y;
        }
        let z = y - 2.0;
        return Ok(z.ln_1p() + log_gamma_1p(z) + prod.ln());
    }
    Ok(log_gamma_stirling(x))
}

fn log_gamma_stirling(x: f64) -> f64 {
    (x - 0.5) * x.ln() - x + HALF_LN_2PI + stirling_tail(x)
}

fn near_pole(z: f64) -> bool {
    z <= POLE_TOL && (z - z.round()).abs() < POLE_TOL
}

/// ln Γ(x+g) - ln Γ(x-g) for min(x+g, x-g) >= STIRLING_MIN, without cancellation.
fn log_ratio_asymptotic(x: f64, g: f64) -> f64 {
    let a = x + g;
    let b = x - g;
    let ln_quot = (2.0 * g / b).ln_1p();
    (x - 0.5) * ln_quot + g * (a.ln() + b.ln()) - 2.0 * g + stirling_tail(a) - stirling_tail(b)
}

/// Γ(x+γ) / Γ(x−γ), with the correct sign for negative arguments.
///
/// Fails with [`Error::Pole`] when either argument is within 1e-12 of a
/// nonpositive integer.
pub fn gamma_ratio(x: f64, gamma: f64) -> Result<f64> {
    if !x.is_finite() || !gamma.is_finite() {
        return Err(Error::Domain {
            function: "gamma_ratio",
            value: if x.is_finite() { gamma } else { x },
        });
    }
    let a = x + gamma;
    let b = x - gamma;
    for arg in [a, b] {
        if near_pole(arg) {
            return Err(Error::Pole {
                function: "gamma_ratio",
                argument: arg,
            });
        }
    }
    if gamma == 0.0 {
        return Ok(1.0);
    }
    let lowest = a.min(b);
    if lowest >= STIRLING_MIN {
        return Ok(log_ratio_asymptotic(x, gamma).exp());
    }
    if lowest < -50.0 && a.max(b) < 0.5 {
        // reflection: Γ(a)/Γ(b) = sin(πb)/sin(πa) · Γ(1-b)/Γ(1-a)
        let sines = (PI * b).sin() / (PI * a).sin();
        return Ok(sines * gamma_ratio(1.0 - x, gamma)?);
    }
    let shift = (STIRLING_MIN - lowest).ceil();
    if shift > MAX_SHIFT {
        return Err(Error::Domain {
            function: "gamma_ratio",
            value: x,
        });
    }
    // Γ(a)/Γ(b) = Γ(a+k)/Γ(b+k) · Π_{j<k} (b+j)/(a+j)
    let steps = shift as usize;
    let mut prod = 1.0;
    for j in 0..steps {
        let j = j as f64;
        prod *= (b + j) / (a + j);
    }
    Ok(log_ratio_asymptotic(x + shift, gamma).exp() * prod)
}

/// d_γ = 2^{2γ} Γ(γ)/Γ(−γ), the factor relating the scattering operator to P_{2γ}.
pub fn d_gamma(gamma: f64) -> Result<f64> {
    let ratio = gamma_ratio(0.0, gamma).map_err(|e| match e {
        Error::Pole { .. } => Error::Pole {
            function: "d_gamma",
            argument: gamma,
        },
        other => other,
    })?;
    Ok(4f64.powf(gamma) * ratio)
}

/// Γ(x+γ)/Γ(x−γ) together with its arguments.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GammaRatio {
    pub x: f64,
    pub gamma: f64,
    pub value: f64,
}

impl GammaRatio {
    pub fn new(x: f64, gamma: f64) -> Result<Self> {
        Ok(Self {
            x,
            gamma,
            value: gamma_ratio(x, gamma)?,
        })
    }
}

/// The renormalisation constant d_γ for γ in (0,2) \ {1}.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RenormConstant {
    pub gamma: f64,
    pub d_gamma: f64,
}

impl RenormConstant {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::OrderOutOfRange {
                n: 0,
                gamma,
                range: "(0, 2) \\ {1}".into(),
            });
        }
        Ok(Self {
            gamma,
            d_gamma: d_gamma(gamma)?,
        })
    }

    /// Positive factor in front of the extension energy:
    /// −d_γ/(2γ) on (0,1) and d_γ/(8γ(γ−1)) on (1,2).
    pub fn energy_factor(&self) -> f64 {
        let g = self.gamma;
        if g < 1.0 {
            -self.d_gamma / (2.0 * g)
        } else {
            self.d_gamma / (8.0 * g * (g - 1.0))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values from a 40-digit evaluation (mpmath.loggamma).
    const LOG_GAMMA_REF: [(f64, f64); 12] = [
        (0.001, 6.907_178_885_383_853_7),
        (0.5, 0.572_364_942_924_700_09),
        (0.999, 0.000_578_038_532_891_379_72),
        (1.001, -0.000_576_393_598_283_369_54),
        (1.5, -0.120_782_237_635_245_22),
        (1.999, -0.000_422_461_800_692_153_78),
        (2.001, 0.000_423_106_734_800_163_63),
        (2.5, 0.284_682_870_472_919_16),
        (7.3, 7.147_892_523_022_249),
        (10.3, 13.482_036_786_138_357),
        (123.456, 469.605_547_129_929_47),
        (10000.0, 82_099.717_496_442_377),
    ];

    #[test]
    fn log_gamma_reference_values() {
        for (x, want) in LOG_GAMMA_REF {
            let got = log_gamma(x).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-13);
        }
    }

    #[test]
    fn log_gamma_trivial_points() {
        assert!(log_gamma(1.0).unwrap().abs() < 1e-16);
        assert!(log_gamma(2.0).unwrap().abs() < 1e-16);
        assert_relative_eq!(log_gamma(0.5).unwrap(), PI.sqrt().ln(), max_relative = 1e-14);
        assert_relative_eq!(log_gamma(5.0).unwrap(), 24f64.ln(), max_relative = 1e-14);
    }

    #[test]
    fn log_gamma_rejects_nonpositive() {
        assert!(matches!(log_gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(log_gamma(-2.5), Err(Error::Domain { .. })));
        assert!(log_gamma(f64::NAN).is_err());
    }

    #[test]
    fn log_gamma_matches_recurrence_across_branches() {
        let mut x = 0.01;
        while x < 40.0 {
            let lhs = log_gamma(x + 1.0).unwrap();
            let rhs = log_gamma(x).unwrap() + x.ln();
            assert!(
                (lhs - rhs).abs() <= 2e-15 * lhs.abs().max(1.0),
                "x = {x}: {lhs} vs {rhs}"
            );
            x += 0.0731;
        }
    }

    // Reference ratios from mpmath at 40 digits, several with negative arguments.
    #[test]
    fn gamma_ratio_reference_values() {
        let cases = [
            (1.5, 1.0, 0.75),
            (3.0, 2.0, 24.0),
            (-0.3, 0.45, -1.286_736_514_305_628_6),
            (-2.7, 0.6, -10.549_406_613_902_286),
            (0.2, 1.3, 0.091_224_352_861_260_272),
            (-5.25, 1.1, 91.086_326_774_197_583),
            (40.5, 1.7, 279_638.992_942_811_26),
            (300.25, 0.35, 54.166_591_276_847_473),
            (0.7, -0.4, 3.144_548_869_294_775_9),
        ];
        for (x, g, want) in cases {
            let got = gamma_ratio(x, g).unwrap();
            assert_relative_eq!(got, want, max_relative = 1e-13);
        }
        assert_eq!(gamma_ratio(2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn gamma_ratio_falling_factorial_for_integer_order() {
        for k in 0..=3u32 {
            let g = k as f64;
            for x in [g + 0.5, g + 1.0, g + 7.25, g + 60.0] {
                let want: f64 = (1..=2 * k).map(|j| x - g + (2 * k - j) as f64).product();
                let got = gamma_ratio(x, g).unwrap();
                assert_relative_eq!(got, want, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_ratio_poles() {
        assert!(matches!(gamma_ratio(0.0, 1.0), Err(Error::Pole { .. })));
        assert!(matches!(gamma_ratio(-1.0, 1.0), Err(Error::Pole { .. })));
        assert!(matches!(gamma_ratio(1.5, 2.5), Err(Error::Pole { .. })));
        assert!(matches!(gamma_ratio(1.0, 1.0 + 1e-14), Err(Error::Pole { .. })));
        assert!(gamma_ratio(1.0, 1.0 - 1e-9).is_ok());
    }

    #[test]
    fn d_gamma_values_and_signs() {
        assert_relative_eq!(d_gamma(0.5).unwrap(), -1.0, max_relative = 1e-14);
        assert_relative_eq!(d_gamma(1.5).unwrap(), 3.0, max_relative = 1e-14);
        assert_relative_eq!(d_gamma(0.25).unwrap(), -1.046_049_620_053_101_6, max_relative = 1e-13);
        assert_relative_eq!(d_gamma(1.6).unwrap(), 3.553_664_767_491_054_6, max_relative = 1e-13);
        for g in [0.0, 1.0, 2.0] {
            assert!(matches!(d_gamma(g), Err(Error::Pole { .. })));
        }
    }

    #[test]
    fn renorm_energy_factor_is_positive() {
        for i in 1..200 {
            let g = i as f64 / 100.0;
            if (g - 1.0).abs() < 1e-9 {
                continue;
            }
            let c = RenormConstant::new(g).unwrap();
            assert!(c.energy_factor() > 0.0, "gamma = {g}");
            assert_eq!(c.d_gamma < 0.0, g < 1.0);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn reciprocity(x in 0.5f64..80.0, g in 0.0f64..2.0) {
                prop_assume!(x - g > 1e-6);
                let p = gamma_ratio(x, g).unwrap() * gamma_ratio(x, -g).unwrap();
                prop_assert!((p - 1.0).abs() < 1e-12);
            }

            #[test]
            fn recurrence(x in 0.5f64..50.0, g in 0.001f64..1.999) {
                prop_assume!((x - g).abs() > 1e-3 && (x - g).fract().abs() > 1e-6);
                let q = gamma_ratio(x + 1.0, g).unwrap() / gamma_ratio(x, g).unwrap();
                let want = (x + g) / (x - g);
                prop_assert!((q / want - 1.0).abs() < 1e-12, "q={q} want={want}");
            }
        }
    }
}
