//! The acceptance suite: ten criteria, each a list of named checks with the
//! observed value, its limit and a verdict.
//!
//! Tolerance limits are multiplied by `AcceptanceConfig::tol_scale`;
//! structural checks (orderings, signs, counts) are not. A few checks are
//! known to fail for reasons of substance rather than numerics; they are
//! listed in `EXPECTED_FAILURES` and still reported as failures.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapted_defining_function::{
    boundary_expansion_fit, boundary_limits, verify_lemma_bounds, DefiningFunctionSolution, RadialGrid, DEFAULT_DELTA,
};
use crate::branson_continuation::{b0_parts, b1_report, b1_solution, extrapolate_limit, sweep, ExtensionProfile};
use crate::conformal_operators::{multiplier_p2gamma, paneitz_energy_multiplier, sharp_constants};
use crate::error::Result;
use crate::extremizers::{conformal_weight, fractional_extremizer, ConformalFactor};
use crate::inequality_functionals::{
    branson_rewrite_gap, classical_sobolev_deficit, dirichlet_energy_s2, onofri_deficit_s2, paneitz_energy,
    paneitz_onofri_deficit_s4, sobolev_deficit, Resolution,
};
use crate::specfun::{gamma_ratio, RenormConstant};
use crate::sphere_spectral::{random_band_limited, sphere_area, FunctionSpec, Layout, SphereGrid};

/// Checks that fail at any resolution. Each has a written analysis in the
/// project notes; the suite reports them as failures all the same.
pub const EXPECTED_FAILURES: [&str; 3] = [
    "terminal_gap n=2 s=1.6",
    "rho_two_gamma_coefficient",
    "b1_matches_paneitz_energy gamma=1.99",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceConfig {
    /// Multiplies every tolerance; 0.01 tightens the suite 100×.
    pub tol_scale: f64,
    pub band_limit: usize,
    pub seed: u64,
}

impl Default for AcceptanceConfig {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            band_limit: Resolution::default().band_limit,
            seed: 20240607,
        }
    }
}

impl AcceptanceConfig {
    fn res(&self) -> Resolution {
        Resolution::new(self.band_limit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// Largest acceptable `value`, already scaled.
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            passed: value <= limit,
        }
    }

    /// `value` is the size of the violation; 0 means the property holds.
    fn holds(name: impl Into<String>, ok: bool, violation: f64) -> Self {
        Self {
            name: name.into(),
            value: if ok {
                0.0
            } else {
                violation.abs().max(f64::MIN_POSITIVE)
            },
            limit: 0.0,
            passed: ok,
        }
    }

    pub fn expected_failure(&self) -> bool {
        EXPECTED_FAILURES.contains(&self.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    /// Whether the outcome depends on the band limit.
    pub resolution_sensitive: bool,
    pub passed: bool,
    pub checks: Vec<Check>,
    /// Set when the criterion could not be evaluated at all.
    pub error: Option<String>,
    pub seconds: f64,
}

impl CriterionResult {
    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// One line: id, verdict, title and the failing checks.
    pub fn summary_line(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let mut line = format!(
            "criterion {:>2} {verdict} {} ({} checks, {:.2}s)",
            self.id,
            self.title,
            self.checks.len(),
            self.seconds
        );
        if let Some(e) = &self.error {
            line.push_str(&format!(" error: {e}"));
        }
        let failed: Vec<String> = self
            .failures()
            .map(|c| {
                let tag = if c.expected_failure() { " [expected]" } else { "" };
                format!("{} = {:.3e} > {:.3e}{tag}", c.name, c.value, c.limit)
            })
            .collect();
        if !failed.is_empty() {
            line.push_str(&format!(" failing: {}", failed.join("; ")));
        }
        line
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceReport {
    pub config: AcceptanceConfig,
    pub criteria: Vec<CriterionResult>,
}

impl AcceptanceReport {
    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// True when every failing check is one of `EXPECTED_FAILURES` and no
    /// criterion errored.
    pub fn only_expected_failures(&self) -> bool {
        self.criteria
            .iter()
            .all(|c| c.error.is_none() && c.failures().all(Check::expected_failure))
    }
}

pub const CRITERIA: [(u8, &str, bool); 10] = [
    (1, "spectral anchor", false),
    (2, "sharp-constant identity", false),
    (3, "sobolev nonnegativity", true),
    (4, "extremizer saturation", true),
    (5, "onofri continuation on S2", true),
    (6, "defining-function ODE", false),
    (7, "boundary expansion", false),
    (8, "paneitz continuation on S4", true),
    (9, "rewrite equivalence", true),
    (10, "gamma-ratio identities", false),
];

/// Runs one criterion; `id` outside 1..=10 gives None.
pub fn run_criterion(id: u8, cfg: &AcceptanceConfig) -> Option<CriterionResult> {
    let &(_, title, sensitive) = CRITERIA.iter().find(|c| c.0 == id)?;
    let start = Instant::now();
    let outcome = match id {
        1 => spectral_anchor(cfg),
        2 => sharp_constant_identity(cfg),
        3 => sobolev_nonnegativity(cfg),
        4 => extremizer_saturation(cfg),
        5 => onofri_continuation(cfg),
        6 => ode_suite(cfg),
        7 => expansion(cfg),
        8 => paneitz_continuation(cfg),
        9 => rewrite_equivalence(cfg),
        _ => gamma_ratio_identities(cfg),
    };
    let (checks, error) = match outcome {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let passed = error.is_none() && checks.iter().all(|c| c.passed);
    Some(CriterionResult {
        id,
        title: title.into(),
        resolution_sensitive: sensitive,
        passed,
        checks,
        error,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// All criteria, evaluated concurrently and reported in id order.
pub fn run_all(cfg: &AcceptanceConfig) -> AcceptanceReport {
    let criteria = CRITERIA
        .par_iter()
        .map(|c| run_criterion(c.0, cfg).expect("listed id"))
        .collect();
    AcceptanceReport { config: *cfg, criteria }
}

fn rel(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

fn spectral_anchor(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [2usize, 3, 4] {
        let mut worst: f64 = 0.0;
        for l in 0..=128usize {
            let want = (l * (l + n - 1)) as f64 + (n * (n - 2)) as f64 / 4.0;
            let got = multiplier_p2gamma(n, 1.0, l)?;
            worst = worst.max((got - want).abs() / want.abs().max(1.0));
        }
        checks.push(Check::at_most(
            format!("conformal_laplacian n={n}"),
            worst,
            1e-12 * cfg.tol_scale,
        ));
    }
    let mut worst: f64 = 0.0;
    for l in 0..=64usize {
        let want = paneitz_energy_multiplier(l);
        let got = multiplier_p2gamma(4, 2.0 - 1e-6, l)?;
        worst = worst.max((got - want).abs() / want.max(1.0));
    }
    checks.push(Check::at_most("paneitz_limit", worst, 1e-4 * cfg.tol_scale));
    Ok(checks)
}

fn sharp_constant_identity(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for n in [2usize, 4] {
        let half = n as f64 / 2.0;
        let mut worst: f64 = 0.0;
        for i in 1..=50 {
            let gamma = half * i as f64 / 51.0;
            let c = sharp_constants(n, gamma)?;
            let other = (half - gamma) * c.q_curvature * sphere_area(n).powf(gamma / half);
            worst = worst.max(rel(other, c.y));
        }
        checks.push(Check::at_most(
            format!("y_equals_scaled_q n={n}"),
            worst,
            1e-12 * cfg.tol_scale,
        ));
    }
    Ok(checks)
}

fn sobolev_nonnegativity(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let res = cfg.res();
    let band = (cfg.band_limit / 4).max(2);
    let cases = [(2usize, 0.25), (2, 0.5), (2, 0.75), (4, 1.25), (4, 1.5), (4, 1.75)];
    cases
        .par_iter()
        .enumerate()
        .map(|(k, &(n, gamma))| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(k as u64));
            let layout = if n == 2 { Layout::Full } else { Layout::Zonal };
            // worst of −deficit/energy over the sample
            let mut worst = f64::NEG_INFINITY;
            for _ in 0..200 {
                let f = FunctionSpec::from_coefficients(random_band_limited(n, band, layout, &mut rng)?)?;
                let r = sobolev_deficit(&f, n, gamma, &res)?;
                worst = worst.max(-r.deficit / r.lhs.abs().max(f64::MIN_POSITIVE));
            }
            Ok(Check::at_most(
                format!("deficit_nonnegative n={n} gamma={gamma}"),
                worst,
                1e-8 * cfg.tol_scale,
            ))
        })
        .collect()
}

fn extremizer_saturation(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let res = cfg.res();
    let tol = 1e-5 * cfg.tol_scale;
    let ts = [-0.5, -0.25, 0.0, 0.25, 0.5];
    let mut checks = Vec::new();
    for (n, gammas) in [(2usize, [0.25, 0.5, 0.75]), (4, [1.25, 1.5, 1.75])] {
        let mut worst: f64 = 0.0;
        for g in gammas {
            for t in ts {
                worst = worst.max(
                    sobolev_deficit(&fractional_extremizer(n, g, t)?, n, g, &res)?
                        .relative()
                        .abs(),
                );
            }
        }
        checks.push(Check::at_most(format!("fractional_extremizers n={n}"), worst, tol));
    }
    let mut worst: f64 = 0.0;
    for t in ts {
        worst = worst.max(onofri_deficit_s2(&conformal_weight(2, t)?, &res)?.relative().abs());
    }
    // an off-axis point on S²
    let off = ConformalFactor::new(2, vec![0.3, -0.2, 0.25])?.log_spec();
    worst = worst.max(onofri_deficit_s2(&off, &res)?.relative().abs());
    let off = ConformalFactor::new(2, vec![0.3, -0.2, 0.25])?.power_spec(0.5)?;
    checks.push(Check::at_most("onofri_extremizers n=2", worst, tol));
    checks.push(Check::at_most(
        "fractional_extremizer_off_axis n=2",
        sobolev_deficit(&off, 2, 0.5, &res)?.relative().abs(),
        tol,
    ));
    let mut worst: f64 = 0.0;
    for t in ts {
        worst = worst.max(
            paneitz_onofri_deficit_s4(&conformal_weight(4, t)?, &res)?
                .relative()
                .abs(),
        );
    }
    checks.push(Check::at_most("onofri_extremizers n=4", worst, tol));
    Ok(checks)
}

fn onofri_continuation(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let res = cfg.res();
    let omega = FunctionSpec::zonal_formula(2, vec![0.0, 0.3])?;
    let recs = sweep(2, &omega, &[0.9, 0.99, 0.999], &res)?;
    let target = recs[0].target_a;
    let errs: Vec<f64> = recs.iter().map(|r| (r.a - target).abs()).collect();
    let mut checks = vec![Check::holds(
        "a0_error_decreasing",
        errs.windows(2).all(|w| w[1] < w[0]),
        errs.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max),
    )];
    let lim = extrapolate_limit(&recs)?;
    checks.push(Check::at_most(
        "a0_extrapolated_limit",
        rel(lim.a_limit, target),
        1e-3 * cfg.tol_scale,
    ));
    let energy = dirichlet_energy_s2(&omega, &res)?;
    let b0 = recs[2].b;
    checks.push(Check::at_most(
        "b0_matches_dirichlet_energy gamma=0.999",
        rel(b0, energy),
        1e-2 * cfg.tol_scale,
    ));
    let parts = b0_parts(0.999, &ExtensionProfile::new(omega), &res)?;
    checks.push(Check::at_most(
        "b0_radial_factor gamma=0.999",
        (parts.radial_factor - 1.0).abs(),
        1e-2 * cfg.tol_scale,
    ));
    for r in &recs {
        checks.push(Check::holds(
            format!("a0_le_b0 gamma={}", r.gamma),
            r.chain_holds(),
            r.gap(),
        ));
    }
    Ok(checks)
}

const ODE_CASES: [(usize, f64); 5] = [(4, 3.6), (4, 3.8), (4, 3.9), (4, 3.95), (2, 1.6)];

fn ode_suite(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let tol = 2e-2 * cfg.tol_scale;
    let per_case: Vec<Result<(Vec<Check>, Option<f64>)>> = ODE_CASES
        .par_iter()
        .map(|&(n, s)| {
            let tag = format!("n={n} s={s}");
            let nf = n as f64;
            let sol = DefiningFunctionSolution::compute(n, s, &RadialGrid::graded(600, 600, DEFAULT_DELTA)?)?
                .fill_curvature()?;
            let lim = boundary_limits(&sol)?;
            let bounds = verify_lemma_bounds(&sol)?;
            let mut checks = vec![
                Check::at_most(format!("f_at_origin {tag}"), sol.f[0].abs(), 0.0),
                Check::at_most(format!("terminal_gap {tag}"), lim.terminal_gap, 1e-3 * cfg.tol_scale),
            ];
            let unit = bounds.get("one_plus_rf_in_unit_interval").expect("always reported");
            checks.push(Check::holds(
                format!("one_plus_rf_in_unit_interval {tag}"),
                !unit.violated,
                unit.margin,
            ));
            if s >= (nf + 1.0) / 2.0 {
                let sw = bounds.get("sandwich_rho0_rhostar_rhoL").expect("always reported");
                checks.push(Check::holds(format!("sandwich {tag}"), !sw.violated, sw.margin));
            }
            let mut constant = None;
            if s > (nf + 3.0) / 2.0 {
                checks.push(Check::at_most(
                    format!("second_derivative_limit {tag}"),
                    rel(lim.second_derivative, lim.second_derivative_limit),
                    tol,
                ));
                checks.push(Check::at_most(format!("j_limit {tag}"), rel(lim.j, lim.j_limit), tol));
                checks.push(Check::at_most(
                    format!("p_rr_limit {tag}"),
                    rel(lim.p_rr, lim.p_rr_limit),
                    tol,
                ));
                checks.push(Check::at_most(
                    format!("p_tt_limit {tag}"),
                    rel(lim.p_tt, lim.p_tt_limit),
                    tol,
                ));
                constant = bounds.get("one_plus_rf_over_rho0_limit").and_then(|c| c.constant);
            }
            Ok((checks, constant))
        })
        .collect();
    let mut checks = Vec::new();
    let mut constants = Vec::new();
    for case in per_case {
        let (c, k) = case?;
        checks.extend(c);
        constants.extend(k);
    }
    let (lo, hi) = constants
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    checks.push(Check::at_most("boundary_constant_spread", hi / lo, 5.0));
    Ok(checks)
}

fn expansion(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let sol = DefiningFunctionSolution::compute(4, 3.6, &RadialGrid::with_total(1 << 14, DEFAULT_DELTA)?)?;
    let fit = boundary_expansion_fit(&sol)?;
    Ok(vec![
        Check::at_most("rho_sq_coefficient", fit.rho_sq_rel_error(), 1e-2 * cfg.tol_scale),
        Check::at_most(
            "rho_two_gamma_coefficient",
            fit.rho_two_gamma_rel_error(),
            5e-2 * cfg.tol_scale,
        ),
    ])
}

fn paneitz_continuation(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let res = cfg.res();
    let omega = FunctionSpec::zonal_formula(4, vec![0.0, 0.2])?;
    let gammas = [1.8, 1.9, 1.99];
    let recs = sweep(4, &omega, &gammas, &res)?;
    let mut checks: Vec<Check> = recs
        .iter()
        .map(|r| Check::holds(format!("a1_le_b1 gamma={}", r.gamma), r.chain_holds(), r.gap()))
        .collect();
    let lim = extrapolate_limit(&recs)?;
    checks.push(Check::at_most(
        "a1_extrapolated_limit",
        rel(lim.a_limit, recs[0].target_a),
        1e-2 * cfg.tol_scale,
    ));
    let energy = paneitz_energy(&omega, &res)?;
    checks.push(Check::at_most(
        "b1_matches_paneitz_energy gamma=1.99",
        rel(recs[2].b, energy),
        2e-2 * cfg.tol_scale,
    ));
    let profile = ExtensionProfile::new(omega);
    let reports: Vec<Result<f64>> = gammas
        .par_iter()
        .map(|&g| Ok(b1_report(g, &profile, &b1_solution(g)?, &res)?.curvature_constant))
        .collect();
    let constants = reports.into_iter().collect::<Result<Vec<f64>>>()?;
    let (lo, hi) = constants
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &c| (a.min(c), b.max(c)));
    checks.push(Check::at_most("curvature_constant_spread", hi / lo, 2.0));
    Ok(checks)
}

fn rewrite_equivalence(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let res = cfg.res();
    let band = (cfg.band_limit / 4).max(2);
    let mut checks = Vec::new();
    for n in [3usize, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (n as u64 * 0x9e37));
        let half = (n as f64 - 2.0) / 2.0;
        let grid = SphereGrid::new(n, 160, Layout::Zonal)?;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let omega = FunctionSpec::from_coefficients(random_band_limited(n, band, Layout::Zonal, &mut rng)?)?;
            let gap = branson_rewrite_gap(&omega, n, &res)?;
            // f = e^{(n−2)ω/2}, taken through the classical Sobolev deficit
            let f: Vec<f64> = omega.sample(&grid)?.iter().map(|w| (half * w).exp()).collect();
            let classical = classical_sobolev_deficit(&FunctionSpec::from_samples(&grid, f)?, n, &res)?;
            worst = worst.max(rel(classical.deficit / (half * half), gap.deficit));
        }
        checks.push(Check::at_most(
            format!("rewrite_matches_classical n={n}"),
            worst,
            1e-8 * cfg.tol_scale,
        ));
    }
    Ok(checks)
}

fn gamma_ratio_identities(cfg: &AcceptanceConfig) -> Result<Vec<Check>> {
    let tol = 1e-12 * cfg.tol_scale;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst_recip: f64 = 0.0;
    let mut worst_recur: f64 = 0.0;
    for _ in 0..1000 {
        let x: f64 = rng.gen_range(0.5..50.0);
        let g: f64 = rng.gen_range(0.0..2.0);
        if g == 0.0 {
            continue;
        }
        worst_recip = worst_recip.max((gamma_ratio(x, g)? * gamma_ratio(x, -g)? - 1.0).abs());
        let e = rel(gamma_ratio(x + 1.0, g)? / gamma_ratio(x, g)?, (x + g) / (x - g));
        worst_recur = worst_recur.max(e);
    }
    let mut sign = 0usize;
    for i in 1..=100 {
        let g = 2.0 * i as f64 / 101.0;
        if (g - 1.0).abs() < 1e-9 {
            continue;
        }
        let c = RenormConstant::new(g)?;
        let ok = if g < 1.0 { c.d_gamma < 0.0 } else { c.d_gamma > 0.0 };
        sign += usize::from(!(ok && c.energy_factor() > 0.0));
    }
    Ok(vec![
        Check::at_most("reciprocity", worst_recip, tol),
        Check::at_most("recurrence", worst_recur, tol),
        Check::at_most("d_gamma_sign_violations", sign as f64, 0.0),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cheap_criteria_pass() {
        let cfg = AcceptanceConfig::default();
        for id in [1, 2, 10] {
            let r = run_criterion(id, &cfg).unwrap();
            assert!(r.passed, "{}", r.summary_line());
        }
        assert!(run_criterion(11, &cfg).is_none());
    }

    #[test]
    fn tightening_is_monotone() {
        let loose = run_criterion(2, &AcceptanceConfig::default()).unwrap();
        let tight = run_criterion(
            2,
            &AcceptanceConfig {
                tol_scale: 1e-6,
                ..Default::default()
            },
        )
        .unwrap();
        for (a, b) in loose.checks.iter().zip(&tight.checks) {
            assert_eq!(a.value, b.value);
            assert!(b.limit < a.limit);
        }
    }

    #[test]
    fn expected_failures_are_tagged() {
        let c = Check::at_most("rho_two_gamma_coefficient", 1.5, 0.05);
        assert!(!c.passed && c.expected_failure());
        assert!(!Check::at_most("anything", 1.0, 0.5).expected_failure());
        assert!(!Check::at_most("nan", f64::NAN, 1.0).passed);
    }
}
