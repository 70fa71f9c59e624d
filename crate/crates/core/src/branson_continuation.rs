//! Upper bounds B₀, B₁ built from an explicit extension of ω into the ball,
//! and the γ-sweeps that carry the sharp Sobolev inequalities to their
//! logarithmic limits.
//!
//! Integrals over the ball are tensor products of a radial rule on [1/3, 1)
//! (the extension vanishes inside r = 1/3) with the oversampled angular grid
//! of `Resolution`. The radial rule ends in a Gauss–Jacobi panel carrying the
//! (1−r)^α boundary weight of each integrand.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adapted_defining_function::{DefiningFunctionSolution, RadialGrid};
use crate::error::{Error, Result};
use crate::inequality_functionals::{
    dirichlet_energy_s2, onofri_limit_target, paneitz_energy, paneitz_limit_target, Resolution, A0, A1,
};
use crate::quadrature::{gauss_jacobi, gauss_legendre};
use crate::specfun::log_gamma;
use crate::sphere_spectral::{laplacian_eigenvalue, synthesize, zonal_profile, FunctionSpec, Layout, SphereGrid};

/// Where the extension starts to be nonzero, and where it reaches ω.
pub const CUTOFF_START: f64 = 1.0 / 3.0;
pub const CUTOFF_END: f64 = 2.0 / 3.0;

fn mollifier(x: f64) -> [f64; 3] {
    // e^{−1/x} and its first two derivatives
    if x <= 0.0 {
        return [0.0; 3];
    }
    let e = (-1.0 / x).exp();
    let x2 = x * x;
    [e, e / x2, e * (1.0 - 2.0 * x) / (x2 * x2)]
}

/// Smooth step ψ(x) = f(x)/(f(x)+f(1−x)) with f = e^{−1/x}, and ψ', ψ''.
fn smooth_step(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0; 3];
    }
    if x >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let [u, u1, u2] = mollifier(x);
    let [v, v1, v2] = mollifier(1.0 - x);
    let (v1, v2) = (-v1, v2);
    let s = u + v;
    let s1 = u1 + v1;
    let s2 = u2 + v2;
    let num1 = u1 * s - u * s1;
    let d1 = num1 / (s * s);
    let d2 = (u2 * s - u * s2) / (s * s) - 2.0 * s1 * num1 / (s * s * s);
    [u / s, d1, d2]
}

/// Ω(r, θ) = χ(r) ω(θ), with χ a C^∞ step from 0 on [0, 1/3] to 1 on [2/3, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct ExtensionProfile {
    pub omega: FunctionSpec,
}

impl ExtensionProfile {
    pub fn new(omega: FunctionSpec) -> Self {
        Self { omega }
    }

    /// χ(r), χ'(r), χ''(r).
    pub fn chi(r: f64) -> [f64; 3] {
        let scale = 1.0 / (CUTOFF_END - CUTOFF_START);
        let [p, p1, p2] = smooth_step((r - CUTOFF_START) * scale);
        [p, p1 * scale, p2 * scale * scale]
    }

    pub fn extension(&self, r: f64, theta: f64, phi: f64) -> Result<f64> {
        Ok(Self::chi(r)[0] * self.omega.eval(theta, phi)?)
    }
}

/// Σ wᵢ g(rᵢ) ≈ ∫_{1/3}^{1} g(r) dr for g with a (1−r)^α factor at r = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// 1 − r, kept exactly because the nodes crowd against r = 1.
    pub gaps: Vec<f64>,
    /// Index of the first node at or beyond r = 2/3.
    pub outer_start: usize,
}

/// Gauss–Legendre panels on [1/3, 2/3], geometric panels toward 1 and a
/// final Gauss–Jacobi panel of width (1/3)·2^{−levels}.
pub fn radial_rule(alpha: f64, points: usize, levels: usize) -> Result<RadialRule> {
    let gl = gauss_legendre(points)?;
    let gj = gauss_jacobi(points, alpha, 0.0)?;
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    let mut gaps = Vec::new();
    // panels given by their distances from r = 1
    let mut push_panel = |far: f64, near: f64| {
        let (mid, half) = ((far + near) / 2.0, (far - near) / 2.0);
        for (x, w) in gl.nodes.iter().zip(&gl.weights) {
            let gap = mid - half * x;
            gaps.push(gap);
            weights.push(half * w);
        }
    };
    let inner_panels = 4;
    for k in 0..inner_panels {
        let a = CUTOFF_START + (CUTOFF_END - CUTOFF_START) * k as f64 / inner_panels as f64;
        let b = CUTOFF_START + (CUTOFF_END - CUTOFF_START) * (k + 1) as f64 / inner_panels as f64;
        push_panel(1.0 - a, 1.0 - b);
    }
    let mut gap = 1.0 - CUTOFF_END;
    for _ in 0..levels {
        push_panel(gap, gap / 2.0);
        gap /= 2.0;
    }
    let outer_start = gl.nodes.len() * inner_panels;
    // ∫_{1−h}^{1} g = (h/2)^{α+1} ∫ (1−x)^α [g/(1−r)^α] dx, 1 − r = h(1−x)/2
    let h = gap;
    for (x, w) in gj.nodes.iter().zip(&gj.weights) {
        let dist = h * (1.0 - x) / 2.0;
        gaps.push(dist);
        weights.push((h / 2.0).powf(alpha + 1.0) * w / dist.powf(alpha));
    }
    nodes.extend(gaps.iter().map(|g| 1.0 - g));
    Ok(RadialRule {
        nodes,
        weights,
        gaps,
        outer_start,
    })
}

const RADIAL_POINTS: usize = 24;
const RADIAL_LEVELS: usize = 16;

/// Angular data of ω on the quadrature grid.
struct AngularData {
    grid: SphereGrid,
    weights: Vec<f64>,
    omega: Vec<f64>,
    /// Δ₊ω with the nonnegative Laplacian of the unit sphere.
    laplacian: Vec<f64>,
}

fn angular_data(omega: &FunctionSpec, res: &Resolution) -> Result<AngularData> {
    let grid = res.quadrature_grid(omega)?;
    let coeffs = omega.coefficients(res.spectral_band(omega))?;
    let n = omega.n;
    let lap = coeffs.scale_by_degree(|l| laplacian_eigenvalue(n, l));
    let weights = grid.weights();
    let laplacian = synthesize(&lap, &grid)?;
    let omega_vals = omega.sample(&grid)?;
    Ok(AngularData {
        grid,
        weights,
        omega: omega_vals,
        laplacian,
    })
}

/// (eˣ − 1)/x, continuous at 0.
fn phi1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 + x / 2.0
    } else {
        x.exp_m1() / x
    }
}

impl AngularData {
    /// ∫ e^{cω} ω² and ∫ e^{cω} |∇ω|², the latter by parts as ∫ ω φ₁(cω) Δ₊ω.
    fn weighted_moments(&self, c: f64) -> (f64, f64) {
        let mut sq = 0.0;
        let mut grad = 0.0;
        for i in 0..self.omega.len() {
            let w = self.omega[i];
            sq += self.weights[i] * (c * w).exp() * w * w;
            grad += self.weights[i] * w * phi1(c * w) * self.laplacian[i];
        }
        (sq, grad)
    }
}

fn check_order(gamma: f64, lo: f64, hi: f64, what: &str) -> Result<()> {
    if !(gamma > lo && gamma < hi) {
        return Err(Error::OrderOutOfRange {
            n: if hi <= 1.0 { 2 } else { 4 },
            gamma,
            range: format!("{what} needs γ in ({lo}, {hi})"),
        });
    }
    Ok(())
}

/// Γ(γ)/Γ(2−γ)·2^{2γ−1}(1−γ).
fn b0_prefactor(gamma: f64) -> Result<f64> {
    Ok((log_gamma(gamma)? - log_gamma(2.0 - gamma)?).exp() * (2.0 * gamma - 1.0).exp2() * (1.0 - gamma))
}

/// 2ρ_L^{2−2γ}/(1−r²), from r and gap = 1 − r.
fn b0_radial_weight(r: f64, gap: f64, gamma: f64) -> f64 {
    let one_minus_sq = gap * (1.0 + r);
    let rho_l = one_minus_sq / (1.0 + r * r);
    2.0 * rho_l.powf(2.0 - 2.0 * gamma) / one_minus_sq
}

/// The two radial pieces of B₀ and the pieces of the outer one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B0Parts {
    /// Contribution of 1/3 ≤ r ≤ 2/3, O(1−γ).
    pub inner: f64,
    /// Contribution of 2/3 ≤ r < 1, carrying the limit.
    pub outer: f64,
    /// 2(1−γ)∫_{2/3}^1 2ρ_L^{2(1−γ)}/(1−r²) dr, which tends to 1.
    pub radial_factor: f64,
    /// ∫_{S²} e^{2(1−γ)ω}|∇ω|².
    pub angular: f64,
    /// Change when the radial rule is refined.
    pub error_estimate: f64,
}

impl B0Parts {
    pub fn total(&self) -> f64 {
        self.inner + self.outer
    }
}

fn b0_with_rule(
    gamma: f64,
    data: &AngularData,
    rule: &RadialRule,
    ratio: Option<&[f64]>,
) -> Result<(f64, f64, f64, f64)> {
    let c0 = b0_prefactor(gamma)?;
    let mut inner = 0.0;
    let mut radial = 0.0;
    let (_, angular) = data.weighted_moments(2.0 * (1.0 - gamma));
    for (k, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        // (ρ*/ρ_L)^{2−2γ} in the adapted variant
        let adapt = ratio.map_or(1.0, |q| q[k].powf(2.0 - 2.0 * gamma));
        let weight = w * b0_radial_weight(r, rule.gaps[k], gamma) * adapt;
        if k >= rule.outer_start {
            radial += weight;
            continue;
        }
        let [chi, dchi, _] = ExtensionProfile::chi(r);
        if chi == 0.0 && dchi == 0.0 {
            continue;
        }
        let (sq, grad) = data.weighted_moments(2.0 * (1.0 - gamma) * chi);
        inner += weight * (r * r * dchi * dchi * sq + chi * chi * grad);
    }
    let outer = radial * angular;
    Ok((
        c0 * inner,
        c0 * outer,
        2.0 * (1.0 - gamma) * radial_unweighted(gamma, rule)?,
        angular,
    ))
}

fn radial_unweighted(gamma: f64, rule: &RadialRule) -> Result<f64> {
    Ok((rule.outer_start..rule.nodes.len())
        .map(|k| rule.weights[k] * b0_radial_weight(rule.nodes[k], rule.gaps[k], gamma))
        .sum())
}

/// B₀(γ) split into its radial pieces.
pub fn b0_parts(gamma: f64, profile: &ExtensionProfile, res: &Resolution) -> Result<B0Parts> {
    check_order(gamma, 0.0, 1.0, "B0")?;
    if profile.omega.n != 2 {
        return Err(Error::DimensionMismatch(format!(
            "B0 lives on S², got S^{}",
            profile.omega.n
        )));
    }
    let data = angular_data(&profile.omega, res)?;
    let alpha = 1.0 - 2.0 * gamma;
    let fine = radial_rule(alpha, RADIAL_POINTS, RADIAL_LEVELS)?;
    let coarse = radial_rule(alpha, RADIAL_POINTS / 2, RADIAL_LEVELS)?;
    let (inner, outer, radial_factor, angular) = b0_with_rule(gamma, &data, &fine, None)?;
    let (ci, co, _, _) = b0_with_rule(gamma, &data, &coarse, None)?;
    Ok(B0Parts {
        inner,
        outer,
        radial_factor,
        angular,
        error_estimate: ((inner + outer) - (ci + co)).abs(),
    })
}

/// Γ(γ)/Γ(2−γ)·2^{2γ−1}(1−γ)·∫_{B³} e^{2(1−γ)Ω}|∇̃Ω|²_{g_L} ρ_L^{1−2γ} dvol_{g_L}.
#[allow(non_snake_case)]
pub fn B0(gamma: f64, profile: &ExtensionProfile, res: &Resolution) -> Result<f64> {
    Ok(b0_parts(gamma, profile, res)?.total())
}

/// 2(1−γ)∫_{2/3}^1 2ρ_L^{2(1−γ)}/(1−r²) dr.
pub fn b0_radial_factor(gamma: f64) -> Result<f64> {
    check_order(gamma, 0.0, 1.0, "b0_radial_factor")?;
    let rule = radial_rule(1.0 - 2.0 * gamma, RADIAL_POINTS, RADIAL_LEVELS)?;
    Ok(2.0 * (1.0 - gamma) * radial_unweighted(gamma, &rule)?)
}

/// Radial nodes of B₀'s rule, for solving the defining function there.
pub fn b0_radial_grid(gamma: f64) -> Result<RadialGrid> {
    check_order(gamma, 0.0, 1.0, "B0")?;
    RadialGrid::from_gaps(radial_rule(1.0 - 2.0 * gamma, RADIAL_POINTS, RADIAL_LEVELS)?.gaps)
}

/// B₀ with the (ρ*/ρ_L)^{2−2γ} factor kept, i.e. before the sandwich ρ* ≤ ρ_L
/// is used. `sol` must be the n = 2, s = 1+γ solution on `b0_radial_grid(γ)`.
pub fn b0_adapted(
    gamma: f64,
    profile: &ExtensionProfile,
    sol: &DefiningFunctionSolution,
    res: &Resolution,
) -> Result<f64> {
    check_order(gamma, 0.5, 1.0, "the adapted B0")?;
    let rule = radial_rule(1.0 - 2.0 * gamma, RADIAL_POINTS, RADIAL_LEVELS)?;
    check_solution(sol, 2, 1.0 + gamma, &rule.nodes)?;
    let ratio: Vec<f64> = rule
        .nodes
        .iter()
        .zip(&sol.rho_star)
        .zip(&rule.gaps)
        .map(|((&r, &rs), &gap)| rs * (1.0 + r * r) / (gap * (1.0 + r)))
        .collect();
    let data = angular_data(&profile.omega, res)?;
    // the outer part no longer factorizes, so integrate it node by node
    let c0 = b0_prefactor(gamma)?;
    let (_, angular) = data.weighted_moments(2.0 * (1.0 - gamma));
    let (inner, _, _, _) = b0_with_rule(gamma, &data, &rule, Some(&ratio))?;
    let outer: f64 = (rule.outer_start..rule.nodes.len())
        .map(|k| {
            rule.weights[k] * b0_radial_weight(rule.nodes[k], rule.gaps[k], gamma) * ratio[k].powf(2.0 - 2.0 * gamma)
        })
        .sum();
    Ok(inner + c0 * outer * angular)
}

fn check_solution(sol: &DefiningFunctionSolution, n: usize, s: f64, nodes: &[f64]) -> Result<()> {
    if sol.n != n || (sol.s - s).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "defining function solved for (n, s) = ({}, {}), need ({n}, {s})",
            sol.n, sol.s
        )));
    }
    if sol.r_grid.len() != nodes.len() || sol.r_grid.iter().zip(nodes).any(|(a, b)| a != b) {
        return Err(Error::InvalidParameter(
            "defining function is not on the quadrature nodes".into(),
        ));
    }
    if sol.p_tt.len() != nodes.len() {
        return Err(Error::InvalidParameter(
            "defining function is not fully computed".into(),
        ));
    }
    Ok(())
}

/// 2^{2γ−3}Γ(γ)/Γ(3−γ)·(2−γ).
fn b1_prefactor(gamma: f64) -> Result<f64> {
    Ok((log_gamma(gamma)? - log_gamma(3.0 - gamma)?).exp() * (2.0 * gamma - 3.0).exp2() * (2.0 - gamma))
}

/// Lower end of the admissible order window for B₁.
pub const B1_MIN_ORDER: f64 = 1.75;

/// Radial nodes of B₁'s rule, for solving the defining function there.
pub fn b1_radial_grid(gamma: f64) -> Result<RadialGrid> {
    check_order(gamma, B1_MIN_ORDER, 2.0, "B1")?;
    RadialGrid::from_gaps(radial_rule(3.0 - 2.0 * gamma, RADIAL_POINTS, RADIAL_LEVELS)?.gaps)
}

/// Solve the n = 4, s = 2+γ defining function on B₁'s radial nodes.
pub fn b1_solution(gamma: f64) -> Result<DefiningFunctionSolution> {
    DefiningFunctionSolution::compute(4, 2.0 + gamma, &b1_radial_grid(gamma)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct B1Report {
    pub value: f64,
    /// Contribution of 1/3 ≤ r ≤ 2/3.
    pub inner: f64,
    /// Contribution of 2/3 ≤ r < 1.
    pub outer: f64,
    /// Smallest value of the integrand's bracket over all quadrature nodes.
    pub min_bracket: f64,
    /// max over r ∈ [2/3, 1) of |(n+m₁−1)e^{2T}J/r² − 4P_θθ/r⁴ − (8(2−γ)/(γ−1)+2)|/ρ₀.
    pub curvature_constant: f64,
    pub error_estimate: f64,
}

struct ZonalAngular {
    weights: Vec<f64>,
    omega: Vec<f64>,
    grad_sq: Vec<f64>,
    laplacian: Vec<f64>,
}

fn zonal_angular(omega: &FunctionSpec, res: &Resolution) -> Result<ZonalAngular> {
    if omega.n != 4 || omega.layout() != Layout::Zonal {
        return Err(Error::DimensionMismatch("B1 needs a zonal function on S⁴".into()));
    }
    let data = angular_data(omega, res)?;
    let coeffs = omega.coefficients(res.spectral_band(omega))?;
    let (_, slopes) = zonal_profile(&coeffs, &data.grid.colat_nodes)?;
    Ok(ZonalAngular {
        weights: data.weights,
        omega: data.omega,
        grad_sq: slopes.iter().map(|d| d * d).collect(),
        laplacian: data.laplacian,
    })
}

fn b1_with_rule(
    gamma: f64,
    ang: &ZonalAngular,
    rule: &RadialRule,
    sol: &DefiningFunctionSolution,
) -> Result<(f64, f64, f64)> {
    let nf = 4.0;
    let m1 = 3.0 - 2.0 * gamma;
    let c = 2.0 - gamma;
    let dim = nf + m1 - 1.0;
    let mut inner = 0.0;
    let mut outer = 0.0;
    let mut min_bracket = f64::INFINITY;
    for (k, (&r, &w)) in rule.nodes.iter().zip(&rule.weights).enumerate() {
        let [chi, dchi, ddchi] = ExtensionProfile::chi(r);
        if chi == 0.0 && dchi == 0.0 {
            continue;
        }
        let rho0 = rule.gaps[k] * (1.0 + r) / 2.0;
        let (f, tl, j, p_rr, p_tt) = (sol.f[k], sol.log_t[k], sol.j[k], sol.p_rr[k], sol.p_tt[k]);
        let conf = (2.0 * tl).exp();
        let radial = w * (2.0 * c * tl).exp() * rho0.powf(m1) * r.powi(4);
        let r2 = r * r;
        let mut sum = 0.0;
        for i in 0..ang.omega.len() {
            let om = ang.omega[i];
            let d_r = dchi * om;
            let grad_ang = chi * chi * ang.grad_sq[i];
            let grad0 = d_r * d_r + grad_ang / r2;
            // weighted positive Laplacian in the flat metric, minus the T-drift
            let lap = -(ddchi + nf * dchi / r) * om + chi * ang.laplacian[i] / r2 + m1 * r / rho0 * d_r - dim * f * d_r;
            let first = lap - c * grad0;
            let bracket =
                first * first + dim * conf * j * grad0 - 4.0 * (p_rr * d_r * d_r + p_tt * grad_ang / (r2 * r2));
            min_bracket = min_bracket.min(bracket);
            sum += ang.weights[i] * (2.0 * c * chi * om).exp() * bracket;
        }
        if k < rule.outer_start {
            inner += radial * sum;
        } else {
            outer += radial * sum;
        }
    }
    let c1 = b1_prefactor(gamma)?;
    Ok((c1 * inner, c1 * outer, min_bracket))
}

/// B₁(γ) with the integrand built from the adapted defining function.
///
/// `sol` must come from `b1_solution(γ)` (n = 4, s = 2+γ on B₁'s nodes).
#[allow(non_snake_case)]
pub fn B1(gamma: f64, profile: &ExtensionProfile, sol: &DefiningFunctionSolution, res: &Resolution) -> Result<f64> {
    Ok(b1_report(gamma, profile, sol, res)?.value)
}

pub fn b1_report(
    gamma: f64,
    profile: &ExtensionProfile,
    sol: &DefiningFunctionSolution,
    res: &Resolution,
) -> Result<B1Report> {
    check_order(gamma, B1_MIN_ORDER, 2.0, "B1")?;
    let rule = radial_rule(3.0 - 2.0 * gamma, RADIAL_POINTS, RADIAL_LEVELS)?;
    check_solution(sol, 4, 2.0 + gamma, &rule.nodes)?;
    let ang = zonal_angular(&profile.omega, res)?;
    let (inner, outer, min_bracket) = b1_with_rule(gamma, &ang, &rule, sol)?;
    let value = inner + outer;
    // same integrand with the radial rule's node count halved; needs its own solve
    let coarse = radial_rule(3.0 - 2.0 * gamma, RADIAL_POINTS / 2, RADIAL_LEVELS)?;
    let coarse_sol = DefiningFunctionSolution::compute(4, 2.0 + gamma, &RadialGrid::from_gaps(coarse.gaps.clone())?)?;
    let (ci, co, _) = b1_with_rule(gamma, &ang, &coarse, &coarse_sol)?;
    let coarse_value = ci + co;
    Ok(B1Report {
        value,
        inner,
        outer,
        min_bracket,
        curvature_constant: curvature_constant(gamma, sol, &rule)?,
        error_estimate: (value - coarse_value).abs(),
    })
}

fn curvature_constant(gamma: f64, sol: &DefiningFunctionSolution, rule: &RadialRule) -> Result<f64> {
    let dim = 4.0 + (3.0 - 2.0 * gamma) - 1.0;
    let limit = 8.0 * (2.0 - gamma) / (gamma - 1.0) + 2.0;
    Ok((rule.outer_start..sol.r_grid.len())
        .map(|k| {
            let r = sol.r_grid[k];
            let rho0 = rule.gaps[k] * (1.0 + r) / 2.0;
            let r2 = r * r;
            let comb = dim * (2.0 * sol.log_t[k]).exp() * sol.j[k] / r2 - 4.0 * sol.p_tt[k] / (r2 * r2);
            (comb - limit).abs() / rho0
        })
        .fold(0.0, f64::max))
}

/// One point of a γ-sweep: A and B with the limits they approach.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContinuationRecord {
    pub n: usize,
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
    /// Logarithmic limit of A.
    pub target_a: f64,
    /// Energy limit of B.
    pub target_b: f64,
}

impl ContinuationRecord {
    pub fn gap(&self) -> f64 {
        self.b - self.a
    }

    /// A ≤ B up to 1e−6·max(1, |B|).
    pub fn chain_holds(&self) -> bool {
        self.a <= self.b + 1e-6 * self.b.abs().max(1.0)
    }

    pub const CSV_HEADER: [&'static str; 6] = ["gamma", "A", "B", "targetA", "targetB", "gap"];

    pub fn csv_values(&self) -> [f64; 6] {
        [self.gamma, self.a, self.b, self.target_a, self.target_b, self.gap()]
    }
}

/// A and B along increasing γ: (A₀, B₀) on S², (A₁, B₁) on S⁴.
/// Points are evaluated in parallel and returned in input order.
pub fn sweep(n: usize, omega: &FunctionSpec, gammas: &[f64], res: &Resolution) -> Result<Vec<ContinuationRecord>> {
    if omega.n != n {
        return Err(Error::DimensionMismatch(format!(
            "sweep on S^{n} given a function on S^{}",
            omega.n
        )));
    }
    if gammas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("orders must increase strictly".into()));
    }
    let (lo, hi) = match n {
        2 => (0.0, 1.0),
        4 => (B1_MIN_ORDER, 2.0),
        _ => return Err(Error::UnsupportedDimension(n)),
    };
    for &g in gammas {
        check_order(g, lo, hi, "sweep")?;
    }
    let (target_a, target_b) = if n == 2 {
        (onofri_limit_target(omega, res)?, dirichlet_energy_s2(omega, res)?)
    } else {
        (paneitz_limit_target(omega, res)?, paneitz_energy(omega, res)?)
    };
    let profile = ExtensionProfile::new(omega.clone());
    gammas
        .par_iter()
        .map(|&gamma| {
            let (a, b) = if n == 2 {
                (A0(gamma, omega, res)?, B0(gamma, &profile, res)?)
            } else {
                let sol = b1_solution(gamma)?;
                (A1(gamma, omega, res)?, B1(gamma, &profile, &sol, res)?)
            };
            Ok(ContinuationRecord {
                n,
                gamma,
                a,
                b,
                target_a,
                target_b,
            })
        })
        .collect()
}

/// Linear fits A ≈ A∞ + k_A(n/2−γ) and B ≈ B∞ + k_B(n/2−γ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub a_limit: f64,
    pub a_rate: f64,
    pub a_residual: f64,
    pub b_limit: f64,
    pub b_rate: f64,
    pub b_residual: f64,
}

fn line_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 1e-30 * (1.0 + mx * mx) {
        return Err(Error::DegenerateFit("all orders coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (intercept + slope * a - b).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok((intercept, slope, rms))
}

pub fn extrapolate_limit(records: &[ContinuationRecord]) -> Result<LimitEstimate> {
    if records.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least 3 records, got {}",
            records.len()
        )));
    }
    let n = records[0].n;
    if records.iter().any(|r| r.n != n) {
        return Err(Error::DimensionMismatch("records from different spheres".into()));
    }
    let x: Vec<f64> = records.iter().map(|r| n as f64 / 2.0 - r.gamma).collect();
    let a: Vec<f64> = records.iter().map(|r| r.a).collect();
    let b: Vec<f64> = records.iter().map(|r| r.b).collect();
    let (a_limit, a_rate, a_residual) = line_fit(&x, &a)?;
    let (b_limit, b_rate, b_residual) = line_fit(&x, &b)?;
    Ok(LimitEstimate {
        a_limit,
        a_rate,
        a_residual,
        b_limit,
        b_rate,
        b_residual,
    })
}
