//! Radial profile of the adapted defining function ρ* on hyperbolic space.
//!
//! With t = ρ*/ρ₀ and T = ln t, F = T' solves
//!
//! F' + (n−s)F² + ((2s−n−1)r/ρ₀ + n/r)F + (2s−n−1)/ρ₀ = 0,  F(0) = 0,
//!
//! which is singular at both ends. We start from a two-term series at
//! r = 1e−3 and integrate with an adaptive Dormand–Prince 5(4) pair in the
//! logit variable w = ln(r/(1−r)); the equation is non-stiff there because
//! the 1/ρ₀ terms pick up a factor r(1−r). Beyond r = 1/2 the unknown is
//! G = (1+rF)/ρ₀ instead, which stays O(1) up to the boundary, so J and the
//! Schouten tensor never divide a small difference by ρ₀. F(1) = −1 is
//! checked afterwards.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{d_gamma, gamma_ratio};

/// Radius where the series start hands over to the integrator.
pub const SERIES_START: f64 = 1e-3;
/// Default distance 1 − r_max of the last grid node from the boundary.
pub const DEFAULT_DELTA: f64 = 1e-6;
/// Radius where graded grids switch from ln r to ln(1−r) spacing.
pub const GRID_SWITCH: f64 = 2.0 / 3.0;
/// Radius where the integrator switches from F to G = (1+rF)/ρ₀.
const G_SWITCH: f64 = 0.5;
const ODE_TOL: f64 = 1e-13;
const MAX_STEPS: usize = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormDefiners {
    pub r: f64,
    /// Geodesic normal defining function 2(1−r)/(1+r).
    pub rho: f64,
    /// Lee's defining function (1−r²)/(1+r²).
    pub rho_l: f64,
    /// Flat defining function (1−r²)/2.
    pub rho_0: f64,
}

pub fn closed_form_definers(r: f64) -> Result<ClosedFormDefiners> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::Domain {
            function: "closed_form_definers",
            value: r,
        });
    }
    Ok(definers_from_gap(r, 1.0 - r))
}

fn definers_from_gap(r: f64, gap: f64) -> ClosedFormDefiners {
    let one_minus_sq = gap * (1.0 + r);
    ClosedFormDefiners {
        r,
        rho: 2.0 * gap / (1.0 + r),
        rho_l: one_minus_sq / (1.0 + r * r),
        rho_0: one_minus_sq / 2.0,
    }
}

/// ρ₀ from r and gap = 1 − r.
fn rho_0(r: f64, gap: f64) -> f64 {
    gap * (1.0 + r) / 2.0
}

/// Increasing radii in [0, 1) with their distances to the boundary, which
/// are kept separately because 1 − r loses digits as r → 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    pub nodes: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl RadialGrid {
    /// r = 0, then `inner` nodes uniform in ln r on [1e−3, 2/3], then `outer`
    /// nodes uniform in ln(1−r) on (2/3, 1−δ].
    pub fn graded(inner: usize, outer: usize, delta: f64) -> Result<Self> {
        if inner < 2 || outer < 1 {
            return Err(Error::InvalidParameter(
                "graded grid needs inner ≥ 2 and outer ≥ 1".into(),
            ));
        }
        if !(delta > 0.0 && delta < 1.0 - GRID_SWITCH) {
            return Err(Error::InvalidParameter(format!("delta = {delta} must lie in (0, 1/3)")));
        }
        let mut nodes = Vec::with_capacity(inner + outer + 1);
        nodes.push(0.0);
        let (a, b) = (SERIES_START.ln(), GRID_SWITCH.ln());
        for i in 0..inner {
            nodes.push((a + (b - a) * i as f64 / (inner - 1) as f64).exp());
        }
        let mut gaps: Vec<f64> = nodes.iter().map(|r| 1.0 - r).collect();
        let (c, d) = ((1.0 - GRID_SWITCH).ln(), delta.ln());
        for i in 1..=outer {
            let gap = (c + (d - c) * i as f64 / outer as f64).exp();
            nodes.push(1.0 - gap);
            gaps.push(gap);
        }
        Ok(Self { nodes, gaps })
    }

    /// Graded grid with `total` nodes split evenly between the two parts.
    pub fn with_total(total: usize, delta: f64) -> Result<Self> {
        let rest = total.saturating_sub(1);
        Self::graded(rest / 2, rest - rest / 2, delta)
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("empty radial grid".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || nodes[0] < 0.0 || !(nodes[nodes.len() - 1] < 1.0) {
            return Err(Error::InvalidParameter(
                "radial nodes must increase within [0, 1)".into(),
            ));
        }
        let gaps = nodes.iter().map(|r| 1.0 - r).collect();
        Ok(Self { nodes, gaps })
    }

    /// Grid given by decreasing distances 1 − r ∈ (0, 1].
    pub fn from_gaps(gaps: Vec<f64>) -> Result<Self> {
        if gaps.is_empty() {
            return Err(Error::InvalidParameter("empty radial grid".into()));
        }
        if gaps.windows(2).any(|w| !(w[1] < w[0])) || !(gaps[0] <= 1.0) || !(gaps[gaps.len() - 1] > 0.0) {
            return Err(Error::InvalidParameter("gaps 1 − r must decrease within (0, 1]".into()));
        }
        let nodes: Vec<f64> = gaps.iter().map(|g| 1.0 - g).collect();
        if nodes.windows(2).any(|w| !(w[1] > w[0])) || !(nodes[nodes.len() - 1] < 1.0) {
            return Err(Error::InvalidParameter("gaps are too close to resolve in r".into()));
        }
        Ok(Self { nodes, gaps })
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }
}

/// The equation's parameters and right-hand side.
#[derive(Debug, Clone, Copy)]
struct RadialOde {
    n: f64,
    s: f64,
    /// 2s − n − 1
    k: f64,
}

impl RadialOde {
    fn new(n: usize, s: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        let nf = n as f64;
        if !(s > (nf + 1.0) / 2.0 && s < nf) {
            return Err(Error::InvalidParameter(format!(
                "s = {s} outside ((n+1)/2, n) = ({}, {nf})",
                (nf + 1.0) / 2.0
            )));
        }
        Ok(Self {
            n: nf,
            s,
            k: 2.0 * s - nf - 1.0,
        })
    }

    /// F'(r) with G = (1+rF)/ρ₀ supplied.
    fn slope(&self, r: f64, f: f64, g: f64) -> f64 {
        if r == 0.0 {
            return self.c1();
        }
        -(self.n - self.s) * f * f - self.n * f / r - self.k * g
    }

    /// dG/dw, from G' = [(1−n)F − (n−s)rF² + (1−k)rG]/ρ₀ and F = (Gρ₀−1)/r.
    fn g_logit_slope(&self, w: f64, g: f64) -> f64 {
        let r = logistic(w);
        let gap = logistic(-w);
        let f = (g * rho_0(r, gap) - 1.0) / r;
        let num = (1.0 - self.n) * f - (self.n - self.s) * r * f * f + (1.0 - self.k) * r * g;
        2.0 * r * num / (1.0 + r)
    }

    /// dF/dw with w = ln(r/(1−r)), written with r(1−r)/ρ₀ = 2r/(1+r).
    fn logit_slope(&self, w: f64, f: f64) -> f64 {
        let r = logistic(w);
        let one_minus = logistic(-w);
        let jac = r * one_minus;
        -(self.n - self.s) * f * f * jac - self.n * f * one_minus - self.k * (1.0 + r * f) * 2.0 * r / (1.0 + r)
    }

    fn c1(&self) -> f64 {
        -2.0 * self.k / (self.n + 1.0)
    }

    fn c3(&self) -> f64 {
        let c1 = self.c1();
        -((self.n - self.s) * c1 * c1 + 2.0 * self.k * c1 + 2.0 * self.k) / (self.n + 3.0)
    }

    /// F ≈ c1 r + c3 r³ near the origin.
    fn series(&self, r: f64) -> f64 {
        r * (self.c1() + self.c3() * r * r)
    }
}

fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

fn logit(r: f64) -> f64 {
    (r / (1.0 - r)).ln()
}

/// Adaptive Dormand–Prince 5(4) for a scalar equation, stepping exactly to `x1`.
fn dopri_to<F: Fn(f64, f64) -> f64>(rhs: &F, x0: f64, y0: f64, x1: f64, h: &mut f64, steps: &mut usize) -> Result<f64> {
    const C2: f64 = 1.0 / 5.0;
    const C3: f64 = 3.0 / 10.0;
    const C4: f64 = 4.0 / 5.0;
    const C5: f64 = 8.0 / 9.0;
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // differences between the 5th and embedded 4th order weights
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let mut x = x0;
    let mut y = y0;
    while x < x1 {
        *steps += 1;
        if *steps > MAX_STEPS {
            return Err(Error::NonConvergence(
                "defining-function ODE exceeded the step budget".into(),
            ));
        }
        let last = x + *h >= x1;
        let hh = if last { x1 - x } else { *h };
        let k1 = rhs(x, y);
        let k2 = rhs(x + C2 * hh, y + hh * A21 * k1);
        let k3 = rhs(x + C3 * hh, y + hh * (A31 * k1 + A32 * k2));
        let k4 = rhs(x + C4 * hh, y + hh * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = rhs(x + C5 * hh, y + hh * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = rhs(x + hh, y + hh * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y_new = y + hh * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        let k7 = rhs(x + hh, y_new);
        let err = hh * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = ODE_TOL * (1.0 + y.abs().max(y_new.abs()));
        let ratio = err.abs() / scale;
        if !y_new.is_finite() {
            return Err(Error::NonConvergence(
                "defining-function ODE produced a non-finite value".into(),
            ));
        }
        if ratio <= 1.0 {
            x = if last { x1 } else { x + hh };
            y = y_new;
        }
        let factor = if ratio == 0.0 {
            5.0
        } else {
            (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
        };
        if !last || ratio > 1.0 {
            *h = hh * factor;
        }
        if *h < 1e-14 {
            return Err(Error::NonConvergence(
                "defining-function ODE step size underflow".into(),
            ));
        }
    }
    Ok(y)
}

/// Radial profiles on an r-grid for fixed (n, s).
///
/// `log_t` is T = ln(ρ*/ρ₀), `f` is F = T', `g` is G = (1+rF)/ρ₀ and `df`
/// is F' = T'' taken from the equation itself. Fields after `df` are empty
/// until `reconstruct` and `fill_curvature` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefiningFunctionSolution {
    pub n: usize,
    pub s: f64,
    pub r_grid: Vec<f64>,
    /// 1 − r at each node.
    pub gaps: Vec<f64>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub df: Vec<f64>,
    pub log_t: Vec<f64>,
    pub t: Vec<f64>,
    pub rho_star: Vec<f64>,
    pub j: Vec<f64>,
    pub p_rr: Vec<f64>,
    pub p_tt: Vec<f64>,
}

/// Solve for F at every node of `grid`.
pub fn solve_f(n: usize, s: f64, grid: &RadialGrid) -> Result<DefiningFunctionSolution> {
    let ode = RadialOde::new(n, s)?;
    let rhs_f = |w: f64, f: f64| ode.logit_slope(w, f);
    let rhs_g = |w: f64, g: f64| ode.g_logit_slope(w, g);
    let m = grid.nodes.len();
    let mut f = Vec::with_capacity(m);
    let mut g = Vec::with_capacity(m);
    let mut w = logit(SERIES_START);
    let mut y = ode.series(SERIES_START);
    let mut on_g = false;
    let mut h = 1e-3;
    let mut steps = 0;
    for (&r, &gap) in grid.nodes.iter().zip(&grid.gaps) {
        let rho0 = rho_0(r, gap);
        if r <= SERIES_START {
            let v = ode.series(r);
            f.push(v);
            g.push((1.0 + r * v) / rho0);
            continue;
        }
        if r <= G_SWITCH {
            let target = logit(r);
            y = dopri_to(&rhs_f, w, y, target, &mut h, &mut steps)?;
            w = target;
            f.push(y);
            g.push((1.0 + r * y) / rho0);
            continue;
        }
        if !on_g {
            let target = logit(G_SWITCH);
            y = dopri_to(&rhs_f, w, y, target, &mut h, &mut steps)?;
            w = target;
            y = (1.0 + G_SWITCH * y) / rho_0(G_SWITCH, 1.0 - G_SWITCH);
            on_g = true;
        }
        let target = (r / gap).ln();
        y = dopri_to(&rhs_g, w, y, target, &mut h, &mut steps)?;
        w = target;
        g.push(y);
        f.push((y * rho0 - 1.0) / r);
    }
    let df = (0..m).map(|i| ode.slope(grid.nodes[i], f[i], g[i])).collect();
    Ok(DefiningFunctionSolution {
        n,
        s,
        r_grid: grid.nodes.clone(),
        gaps: grid.gaps.clone(),
        f,
        g,
        df,
        log_t: Vec::new(),
        t: Vec::new(),
        rho_star: Vec::new(),
        j: Vec::new(),
        p_rr: Vec::new(),
        p_tt: Vec::new(),
    })
}

/// Fill T = −∫_r^1 F, t = e^T and ρ* = ρ₀t.
///
/// Consecutive nodes are joined by the two-point Hermite rule, which uses F'
/// from the equation; the stretch (r_max, 1) uses F(r_max)δ + F'(r_max)δ²/2.
pub fn reconstruct(mut sol: DefiningFunctionSolution) -> Result<DefiningFunctionSolution> {
    let m = sol.r_grid.len();
    for len in [sol.f.len(), sol.g.len(), sol.df.len(), sol.gaps.len()] {
        if len != m {
            return Err(Error::ShapeMismatch {
                expected: m,
                actual: len,
            });
        }
    }
    let mut log_t = vec![0.0; m];
    let delta = sol.gaps[m - 1];
    let mut acc = -(sol.f[m - 1] * delta + sol.df[m - 1] * delta * delta / 2.0);
    log_t[m - 1] = acc;
    for i in (0..m - 1).rev() {
        let h = if sol.r_grid[i + 1] <= G_SWITCH {
            sol.r_grid[i + 1] - sol.r_grid[i]
        } else {
            sol.gaps[i] - sol.gaps[i + 1]
        };
        let panel = h / 2.0 * (sol.f[i] + sol.f[i + 1]) + h * h / 12.0 * (sol.df[i] - sol.df[i + 1]);
        acc -= panel;
        log_t[i] = acc;
    }
    if log_t.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonConvergence(
            "reconstruction of T produced non-finite values".into(),
        ));
    }
    sol.t = log_t.iter().map(|v| v.exp()).collect();
    sol.rho_star = (0..m).map(|i| rho_0(sol.r_grid[i], sol.gaps[i]) * sol.t[i]).collect();
    sol.log_t = log_t;
    Ok(sol)
}

fn require_reconstructed(sol: &DefiningFunctionSolution) -> Result<()> {
    if sol.log_t.len() != sol.r_grid.len() {
        return Err(Error::InvalidParameter(
            "solution has no T profile; run reconstruct first".into(),
        ));
    }
    Ok(())
}

/// J = e^{−2T}(2(1+rF)/ρ₀ − F²).
pub fn curvature_j(sol: &DefiningFunctionSolution) -> Result<Vec<f64>> {
    require_reconstructed(sol)?;
    Ok((0..sol.r_grid.len())
        .map(|i| (-2.0 * sol.log_t[i]).exp() * (2.0 * sol.g[i] - sol.f[i] * sol.f[i]))
        .collect())
}

/// Ricci components of g* = e^{2T}(dr² + r²dθ²) and the scalar curvature.
struct RicciAt {
    rr: f64,
    /// θθ component divided by r² (finite at r = 0).
    tt_over_r2: f64,
    scalar: f64,
}

fn ricci_at(sol: &DefiningFunctionSolution, i: usize) -> RicciAt {
    let nf = sol.n as f64;
    let (r, f, df, tl) = (sol.r_grid[i], sol.f[i], sol.df[i], sol.log_t[i]);
    // F/r → F'(0) at the origin
    let f_over_r = if r == 0.0 { df } else { f / r };
    let lap_t = -df - nf * f_over_r;
    let rr = -(nf - 1.0) * (df - f * f) + (lap_t - (nf - 1.0) * f * f);
    let tt_over_r2 = -(nf - 1.0) * f_over_r + (lap_t - (nf - 1.0) * f * f);
    let scalar = (-2.0 * tl).exp() * (rr + nf * tt_over_r2);
    RicciAt { rr, tt_over_r2, scalar }
}

/// Schouten components ([P]_rr, [P]_θθ) of g*; the θθ entry is the
/// coordinate component for normal coordinates on the unit sphere, and
/// [P]_rθ vanishes identically.
pub fn schouten_components(sol: &DefiningFunctionSolution) -> Result<(Vec<f64>, Vec<f64>)> {
    require_reconstructed(sol)?;
    let nf = sol.n as f64;
    let mut p_rr = Vec::with_capacity(sol.r_grid.len());
    let mut p_tt = Vec::with_capacity(sol.r_grid.len());
    for i in 0..sol.r_grid.len() {
        let ric = ricci_at(sol, i);
        let r = sol.r_grid[i];
        let conf = (2.0 * sol.log_t[i]).exp();
        p_rr.push((ric.rr - ric.scalar * conf / (2.0 * nf)) / (nf - 1.0));
        p_tt.push(r * r * (ric.tt_over_r2 - ric.scalar * conf / (2.0 * nf)) / (nf - 1.0));
    }
    Ok((p_rr, p_tt))
}

/// Scalar curvature R of g* at every node.
pub fn scalar_curvature(sol: &DefiningFunctionSolution) -> Result<Vec<f64>> {
    require_reconstructed(sol)?;
    Ok((0..sol.r_grid.len()).map(|i| ricci_at(sol, i).scalar).collect())
}

impl DefiningFunctionSolution {
    /// Solve, reconstruct and fill J and the Schouten components.
    pub fn compute(n: usize, s: f64, grid: &RadialGrid) -> Result<Self> {
        let sol = reconstruct(solve_f(n, s, grid)?)?;
        sol.fill_curvature()
    }

    pub fn fill_curvature(mut self) -> Result<Self> {
        self.j = curvature_j(&self)?;
        let (p_rr, p_tt) = schouten_components(&self)?;
        self.p_rr = p_rr;
        self.p_tt = p_tt;
        Ok(self)
    }

    pub fn gamma(&self) -> f64 {
        self.s - self.n as f64 / 2.0
    }

    pub fn rho_0(&self, i: usize) -> f64 {
        rho_0(self.r_grid[i], self.gaps[i])
    }

    /// 1 + F, without cancellation near the boundary.
    pub fn one_plus_f(&self, i: usize) -> f64 {
        if self.r_grid[i] <= G_SWITCH {
            1.0 + self.f[i]
        } else {
            (self.g[i] * self.rho_0(i) - self.gaps[i]) / self.r_grid[i]
        }
    }

    /// 2s − n − 2.
    fn gap(&self) -> f64 {
        2.0 * self.s - self.n as f64 - 2.0
    }

    pub const CSV_HEADER: [&'static str; 11] = [
        "r", "F", "T", "t", "rho_star", "rho", "rho_L", "rho_0", "J", "P_rr", "P_tt",
    ];

    pub fn csv_rows(&self) -> Result<Vec<[f64; 11]>> {
        if self.p_tt.len() != self.r_grid.len() {
            return Err(Error::InvalidParameter("solution is not fully computed".into()));
        }
        (0..self.r_grid.len())
            .map(|i| {
                let d = definers_from_gap(self.r_grid[i], self.gaps[i]);
                Ok([
                    self.r_grid[i],
                    self.f[i],
                    self.log_t[i],
                    self.t[i],
                    self.rho_star[i],
                    d.rho,
                    d.rho_l,
                    d.rho_0,
                    self.j[i],
                    self.p_rr[i],
                    self.p_tt[i],
                ])
            })
            .collect()
    }
}

/// Interior nodes where the grid is uniform in ln r or in ln(1−r), with the
/// stretched coordinate's Jacobian dr/du.
fn stretched_stencils(r: &[f64], gaps: &[f64]) -> Vec<(usize, f64, f64)> {
    let coord = |x: f64, gap: f64| {
        if x <= GRID_SWITCH {
            (x.ln(), x, 0u8)
        } else {
            (-gap.ln(), gap, 1u8)
        }
    };
    let mut out = Vec::new();
    for i in 3..r.len().saturating_sub(3) {
        if r[i - 3] <= 0.0 {
            continue;
        }
        let pts: Vec<(f64, f64, u8)> = (i - 3..=i + 3).map(|j| coord(r[j], gaps[j])).collect();
        if pts.iter().any(|p| p.2 != pts[0].2) {
            continue;
        }
        let du = pts[4].0 - pts[3].0;
        let uniform = pts
            .windows(2)
            .all(|w| ((w[1].0 - w[0].0) - du).abs() <= 1e-9 * du.abs());
        if uniform && du > 0.0 {
            out.push((i, du, pts[3].1));
        }
    }
    out
}

const FD7: [f64; 7] = [
    -1.0 / 60.0,
    3.0 / 20.0,
    -3.0 / 4.0,
    0.0,
    3.0 / 4.0,
    -3.0 / 20.0,
    1.0 / 60.0,
];

fn fd_derivative(values: &[f64], i: usize, du: f64) -> f64 {
    FD7.iter().enumerate().map(|(j, c)| c * values[i + j - 3]).sum::<f64>() / du
}

/// Largest |dF/du − (dr/du)·F'(r)| over interior nodes, where u is ln r or
/// −ln(1−r) and dF/du is a 7-point difference: the equation's residual in
/// the coordinate the grid is uniform in.
pub fn ode_residual(sol: &DefiningFunctionSolution) -> f64 {
    stretched_stencils(&sol.r_grid, &sol.gaps)
        .into_iter()
        .map(|(i, du, jac)| (fd_derivative(&sol.f, i, du) - jac * sol.df[i]).abs())
        .fold(0.0, f64::max)
}

/// Same check for the second-order equation satisfied by T, with T' and T''
/// both taken from differences of the reconstructed T.
pub fn t_equation_residual(sol: &DefiningFunctionSolution) -> Result<f64> {
    require_reconstructed(sol)?;
    let ode = RadialOde::new(sol.n, sol.s)?;
    // dT/du by differences, compared against (dr/du)F, plus F' residual
    let mut worst: f64 = 0.0;
    for (i, du, jac) in stretched_stencils(&sol.r_grid, &sol.gaps) {
        let slope = fd_derivative(&sol.log_t, i, du) / jac;
        let r = sol.r_grid[i];
        let f_fd = slope;
        let resid_first = jac * (f_fd - sol.f[i]);
        let g_fd = sol.g[i] + r * (f_fd - sol.f[i]) / sol.rho_0(i);
        let resid_second = jac * (sol.df[i] - ode.slope(r, f_fd, g_fd));
        worst = worst.max(resid_first.abs()).max(resid_second.abs());
    }
    Ok(worst)
}

/// One bound from the uniform-estimate lemmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    /// Whether (n, s) satisfies the lemma's hypothesis.
    pub applicable: bool,
    /// Worst signed margin over the grid (negative means violated).
    pub margin: f64,
    /// Smallest constant making the estimate hold on the grid.
    pub constant: Option<f64>,
    pub violated: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub n: usize,
    pub s: f64,
    pub checks: Vec<BoundCheck>,
    /// Largest relative increase of ρ₀^{−(2s−n−1)} rⁿ t^{n−s} F between neighbours.
    pub phi_monotone_violation: f64,
}

impl BoundReport {
    pub fn get(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn any_violation(&self) -> bool {
        self.checks.iter().any(|c| c.applicable && c.violated) || self.phi_monotone_violation > PHI_TOL
    }
}

/// Absolute slack for the sandwich ρ₀ ≤ ρ* ≤ ρ_L, compared in log form.
/// Near r = 1 the true upper margin is O(ρ₀³), below the accuracy of T.
pub const SANDWICH_TOL: f64 = 1e-10;
pub const PHI_TOL: f64 = 1e-9;
/// Radii from which the lemma constants are fitted.
pub const FIT_FROM: f64 = 1.0 / 3.0;

fn max_ratio<I: Iterator<Item = (f64, f64)>>(pairs: I) -> f64 {
    // max of |dev|/scale over pairs (dev, scale)
    pairs.map(|(d, s)| d.abs() / s).fold(0.0, f64::max)
}

/// Margins and fitted constants for the uniform estimates along the grid.
pub fn verify_lemma_bounds(sol: &DefiningFunctionSolution) -> Result<BoundReport> {
    require_reconstructed(sol)?;
    let nf = sol.n as f64;
    let s = sol.s;
    let gap = sol.gap();
    let k = 2.0 * s - nf - 1.0;
    let m = sol.r_grid.len();
    let j = if sol.j.len() == m {
        sol.j.clone()
    } else {
        curvature_j(sol)?
    };
    let (p_rr, p_tt) = if sol.p_tt.len() == m {
        (sol.p_rr.clone(), sol.p_tt.clone())
    } else {
        schouten_components(sol)?
    };
    let scalar = scalar_curvature(sol)?;

    let boundary_regime = sol.n >= 4 && s > (nf + 3.0) / 2.0;
    let mut checks = Vec::new();

    // 0 < 1 + rF ≤ 1
    let q: Vec<f64> = (0..m).map(|i| sol.g[i] * sol.rho_0(i)).collect();
    let margin = q.iter().map(|v| v.min(1.0 - v)).fold(f64::INFINITY, f64::min);
    let strict = q.iter().all(|v| *v > 0.0);
    checks.push(BoundCheck {
        name: "one_plus_rf_in_unit_interval".into(),
        applicable: sol.n >= 4 && s > nf / 2.0 + 1.0,
        margin,
        constant: None,
        violated: !(strict && margin >= 0.0),
    });

    // ρ₀ ≤ ρ* ≤ ρ_L ⇔ 0 ≤ T ≤ −ln(1−ρ₀)
    let margin = (0..m)
        .map(|i| sol.log_t[i].min(-(-sol.rho_0(i)).ln_1p() - sol.log_t[i]))
        .fold(f64::INFINITY, f64::min);
    checks.push(BoundCheck {
        name: "sandwich_rho0_rhostar_rhoL".into(),
        applicable: s >= (nf + 1.0) / 2.0,
        margin,
        constant: None,
        violated: margin < -SANDWICH_TOL,
    });

    let window: Vec<usize> = (0..m).filter(|&i| sol.r_grid[i] >= FIT_FROM).collect();
    let rho0 = |i: usize| sol.rho_0(i);

    // 0 ≤ (1+rF)/ρ₀ ≤ C/(2s−n−2)
    let lower = window.iter().map(|&i| sol.g[i]).fold(f64::INFINITY, f64::min);
    let c = window.iter().map(|&i| sol.g[i] * gap).fold(0.0, f64::max);
    checks.push(BoundCheck {
        name: "one_plus_rf_over_rho0".into(),
        applicable: sol.n >= 4 && s > nf / 2.0 + 1.0,
        margin: lower,
        constant: Some(c),
        violated: lower < 0.0,
    });

    let near = |name: &str, dev: &dyn Fn(usize) -> f64, scale: &dyn Fn(usize) -> f64| BoundCheck {
        name: name.into(),
        applicable: boundary_regime,
        margin: 0.0,
        constant: Some(max_ratio(window.iter().map(|&i| (dev(i), scale(i))))),
        violated: false,
    };
    let slow = gap - 1.0; // 2s − n − 3
    let mid = (s - 1.0) / gap;
    checks.push(near("one_plus_rf_over_rho0_limit", &|i| sol.g[i] - mid, &|i| {
        rho0(i) / slow
    }));
    let t2 = -(nf + 1.0 - s) / gap;
    checks.push(near("second_derivative_limit", &|i| sol.df[i] - t2, &|i| {
        rho0(i) / slow
    }));
    checks.push(near("one_plus_f", &|i| sol.one_plus_f(i), &|i| rho0(i)));
    checks.push(near("log_t", &|i| sol.log_t[i], &|i| rho0(i)));
    checks.push(near("t_minus_one", &|i| sol.log_t[i].exp_m1(), &|i| rho0(i)));
    checks.push(near("j_limit", &|i| j[i] - nf / gap, &|i| rho0(i) / slow));
    checks.push(near("p_rr_limit", &|i| p_rr[i] - nf / (2.0 * gap), &|i| rho0(i) / slow));
    checks.push(near("p_tt_limit", &|i| p_tt[i] - 0.5, &|i| rho0(i) / slow));
    checks.push(near(
        "scalar_curvature_limit",
        &|i| scalar[i] - nf * nf * (2.0 * s - nf - 1.0) / gap,
        &|i| rho0(i) / slow,
    ));

    // ρ₀^{−k} rⁿ t^{n−s} F is non-increasing
    let phi: Vec<f64> = (0..m)
        .map(|i| {
            let r = sol.r_grid[i];
            rho0(i).powf(-k) * r.powf(nf) * sol.t[i].powf(nf - s) * sol.f[i]
        })
        .collect();
    let phi_monotone_violation = phi
        .windows(2)
        .map(|w| (w[1] - w[0]) / w[0].abs().max(w[1].abs()).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);

    Ok(BoundReport {
        n: sol.n,
        s,
        checks,
        phi_monotone_violation,
    })
}

/// Values at r_max next to their boundary limits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLimits {
    pub r_max: f64,
    pub terminal_gap: f64,
    pub log_t_at_end: f64,
    pub t_slope: f64,
    pub t_slope_difference: f64,
    pub second_derivative: f64,
    pub second_derivative_difference: f64,
    pub second_derivative_limit: f64,
    pub j: f64,
    pub j_limit: f64,
    pub p_rr: f64,
    pub p_rr_limit: f64,
    pub p_tt: f64,
    pub p_tt_limit: f64,
    pub scalar_curvature: f64,
    pub scalar_curvature_limit: f64,
}

pub fn boundary_limits(sol: &DefiningFunctionSolution) -> Result<BoundaryLimits> {
    require_reconstructed(sol)?;
    let m = sol.r_grid.len();
    if m < 3 {
        return Err(Error::InvalidParameter(
            "boundary limits need at least three nodes".into(),
        ));
    }
    let nf = sol.n as f64;
    let gap = sol.gap();
    let j = if sol.j.len() == m {
        sol.j.clone()
    } else {
        curvature_j(sol)?
    };
    let (p_rr, p_tt) = if sol.p_tt.len() == m {
        (sol.p_rr.clone(), sol.p_tt.clone())
    } else {
        schouten_components(sol)?
    };
    let r = &sol.r_grid;
    let gaps = &sol.gaps;
    let e = m - 1;
    let slope = |v: &[f64], a: usize, b: usize| (v[b] - v[a]) / (gaps[a] - gaps[b]);
    let second = {
        let d1 = slope(&sol.log_t, e - 1, e);
        let d0 = slope(&sol.log_t, e - 2, e - 1);
        2.0 * (d1 - d0) / (gaps[e - 2] - gaps[e])
    };
    Ok(BoundaryLimits {
        r_max: r[e],
        terminal_gap: sol.one_plus_f(e).abs(),
        log_t_at_end: sol.log_t[e],
        t_slope: sol.t[e] * sol.f[e],
        t_slope_difference: slope(&sol.t, e - 1, e),
        second_derivative: sol.df[e],
        second_derivative_difference: second,
        second_derivative_limit: -(nf + 1.0 - sol.s) / gap,
        j: j[e],
        j_limit: nf / gap,
        p_rr: p_rr[e],
        p_rr_limit: nf / (2.0 * gap),
        p_tt: p_tt[e],
        p_tt_limit: 0.5,
        scalar_curvature: ricci_at(sol, e).scalar,
        scalar_curvature_limit: nf * nf * (2.0 * sol.s - nf - 1.0) / gap,
    })
}

/// Least-squares fit of ρ*/ρ ≈ c₀ + c₂ρ² + c_γ ρ^{2γ} near the boundary.
///
/// The design also carries ρ⁴ and ρ^{2γ+2}, the orders of the first
/// remainders; without them the ρ^{2γ} coefficient is biased by tens of
/// percent at any usable window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub leading: f64,
    pub rho_sq: f64,
    pub rho_sq_expected: f64,
    pub rho_two_gamma: f64,
    /// (1/d_γ)Γ(n/2+γ)/Γ(n/2−γ).
    pub rho_two_gamma_expected: f64,
    /// The same scattering coefficient divided by n − s: what it becomes
    /// after taking the (n−s)-th root of v* = ρ*^{n−s}.
    pub rho_two_gamma_from_eigenfunction: f64,
    pub points: usize,
    pub rms_residual: f64,
}

impl ExpansionFit {
    pub fn rho_sq_rel_error(&self) -> f64 {
        ((self.rho_sq - self.rho_sq_expected) / self.rho_sq_expected).abs()
    }

    pub fn rho_two_gamma_rel_error(&self) -> f64 {
        ((self.rho_two_gamma - self.rho_two_gamma_expected) / self.rho_two_gamma_expected).abs()
    }

    pub fn rho_two_gamma_eigenfunction_rel_error(&self) -> f64 {
        ((self.rho_two_gamma - self.rho_two_gamma_from_eigenfunction) / self.rho_two_gamma_from_eigenfunction).abs()
    }
}

/// Upper end of the ρ window used by `boundary_expansion_fit`.
pub const FIT_WINDOW: f64 = 0.1;

pub fn boundary_expansion_fit(sol: &DefiningFunctionSolution) -> Result<ExpansionFit> {
    require_reconstructed(sol)?;
    let nf = sol.n as f64;
    let gamma = sol.gamma();
    if sol.n < 4 || !(sol.s > nf / 2.0 + 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the boundary expansion needs n ≥ 4 and s > n/2 + 1 (n = {}, s = {})",
            sol.n, sol.s
        )));
    }
    let exponents = [0.0, 2.0, 2.0 * gamma, 4.0, 2.0 * gamma + 2.0];
    for i in 1..exponents.len() {
        for j in 0..i {
            if (exponents[i] - exponents[j]).abs() < 0.05 {
                return Err(Error::DegenerateFit(format!(
                    "exponents {} and {} nearly collide",
                    exponents[j], exponents[i]
                )));
            }
        }
    }
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (i, &r) in sol.r_grid.iter().enumerate() {
        let rho = 2.0 * sol.gaps[i] / (1.0 + r);
        if rho <= FIT_WINDOW && rho > 0.0 {
            rows.push(exponents.iter().map(|&e| rho.powf(e)).collect::<Vec<_>>());
            rhs.push(sol.rho_star[i] / rho);
        }
    }
    if rows.len() < 4 * exponents.len() {
        return Err(Error::DegenerateFit(format!(
            "only {} nodes inside the fit window",
            rows.len()
        )));
    }
    let coef = least_squares(&rows, &rhs)?;
    let rms = (rows
        .iter()
        .zip(&rhs)
        .map(|(row, y)| (row.iter().zip(&coef).map(|(a, c)| a * c).sum::<f64>() - y).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    let scattering = gamma_ratio(nf / 2.0, gamma)? / d_gamma(gamma)?;
    Ok(ExpansionFit {
        leading: coef[0],
        rho_sq: coef[1],
        rho_sq_expected: -nf / (4.0 * sol.gap()),
        rho_two_gamma: coef[2],
        rho_two_gamma_expected: scattering,
        rho_two_gamma_from_eigenfunction: scattering / (nf - sol.s),
        points: rows.len(),
        rms_residual: rms,
    })
}

/// Least squares through Householder QR on column-scaled data.
#[allow(clippy::needless_range_loop)]
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Result<Vec<f64>> {
    let m = rows.len();
    let k = rows.first().map_or(0, Vec::len);
    if m < k || k == 0 {
        return Err(Error::DegenerateFit(format!("{m} rows for {k} unknowns")));
    }
    let mut scale = vec![0.0f64; k];
    for row in rows {
        for c in 0..k {
            scale[c] = scale[c].max(row[c].abs());
        }
    }
    if scale.contains(&0.0) {
        return Err(Error::DegenerateFit("zero column in the design matrix".into()));
    }
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| row.iter().zip(&scale).map(|(x, s)| x / s).collect())
        .collect();
    let mut b = rhs.to_vec();
    for c in 0..k {
        let norm = (c..m).map(|i| a[i][c] * a[i][c]).sum::<f64>().sqrt();
        let alpha = if a[c][c] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (c..m).map(|i| a[i][c]).collect();
        v[0] -= alpha;
        let vnorm_sq: f64 = v.iter().map(|x| x * x).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        for cc in c..k {
            let dot: f64 = (c..m).map(|i| v[i - c] * a[i][cc]).sum();
            for i in c..m {
                a[i][cc] -= 2.0 * dot / vnorm_sq * v[i - c];
            }
        }
        let dot: f64 = (c..m).map(|i| v[i - c] * b[i]).sum();
        for i in c..m {
            b[i] -= 2.0 * dot / vnorm_sq * v[i - c];
        }
    }
    if (0..k).any(|c| a[c][c].abs() < 1e-13) {
        return Err(Error::DegenerateFit("fit columns are numerically collinear".into()));
    }
    let mut x = vec![0.0; k];
    for c in (0..k).rev() {
        let tail: f64 = (c + 1..k).map(|cc| a[c][cc] * x[cc]).sum();
        x[c] = (b[c] - tail) / a[c][c];
    }
    Ok(x.iter().zip(&scale).map(|(v, s)| v / s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn closed_forms() {
        let d = closed_form_definers(0.0).unwrap();
        assert_eq!((d.rho, d.rho_l, d.rho_0), (2.0, 1.0, 0.5));
        let d = closed_form_definers(0.5).unwrap();
        assert_relative_eq!(d.rho, 2.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(d.rho_l, 3.0 / 5.0, max_relative = 1e-15);
        assert_relative_eq!(d.rho_0, 3.0 / 8.0, max_relative = 1e-15);
        let x = 1e-7;
        let d = closed_form_definers(1.0 - x).unwrap();
        for v in [d.rho, d.rho_l, d.rho_0] {
            assert_relative_eq!(v / x, 1.0, max_relative = 1e-6);
        }
        for k in 0..100 {
            let d = closed_form_definers(k as f64 / 100.0).unwrap();
            assert!(d.rho_0 <= d.rho_l && d.rho_l <= d.rho);
        }
        assert!(closed_form_definers(1.0).is_err());
        assert!(closed_form_definers(-0.1).is_err());
    }

    #[test]
    fn series_coefficients() {
        let ode = RadialOde::new(4, 3.6).unwrap();
        assert_relative_eq!(ode.c1(), -0.88, max_relative = 1e-15);
        assert_relative_eq!(ode.c3(), -0.11968, max_relative = 1e-13);
    }

    #[test]
    fn s_range() {
        let g = RadialGrid::graded(10, 10, 1e-3).unwrap();
        assert!(solve_f(4, 2.5, &g).is_err());
        assert!(solve_f(4, 4.0, &g).is_err());
        assert!(solve_f(4, 3.0, &g).is_ok());
    }

    // scipy Radau at rtol 1e-13 from a series start at r = 1e-4
    const ORACLE: [(usize, f64, [f64; 5]); 4] = [
        (
            4,
            3.6,
            [
                -0.08811977492354345,
                -0.4552321951045349,
                -0.8818468682084314,
                -0.9882542840601236,
                -0.9999988333313214,
            ],
        ),
        (
            4,
            3.95,
            [
                -0.11587678481638969,
                -0.5637799485270428,
                -0.9347239087727728,
                -0.9943486496210563,
                -0.9999994473670926,
            ],
        ),
        (
            2,
            1.6,
            [
                -0.013404557911720906,
                -0.07729760763759297,
                -0.24873557962125328,
                -0.4911737617137179,
                -0.9176096163594137,
            ],
        ),
        (
            3,
            2.5,
            [
                -0.05018840354801056,
                -0.27671787185898894,
                -0.6949412834609584,
                -0.9388242736332061,
                -0.999980157542333,
            ],
        ),
    ];

    #[test]
    fn matches_independent_stiff_solver() {
        let grid = RadialGrid::from_nodes(vec![0.0, 0.1, 0.5, 0.9, 0.99, 0.999999]).unwrap();
        for (n, s, want) in ORACLE {
            let sol = solve_f(n, s, &grid).unwrap();
            assert_eq!(sol.f[0], 0.0);
            for (got, want) in sol.f[1..].iter().zip(want) {
                assert!((got - want).abs() < 1e-10, "n={n} s={s}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn initial_slope() {
        let sol = solve_f(4, 3.8, &RadialGrid::from_nodes(vec![0.0, 1e-4]).unwrap()).unwrap();
        assert_relative_eq!(sol.df[0], -2.0 * (2.0 * 3.8 - 5.0) / 5.0, max_relative = 1e-15);
        assert_relative_eq!(sol.f[1] / 1e-4, sol.df[0], max_relative = 1e-6);
    }

    fn full(n: usize, s: f64, delta: f64) -> DefiningFunctionSolution {
        DefiningFunctionSolution::compute(n, s, &RadialGrid::graded(600, 600, delta).unwrap()).unwrap()
    }

    #[test]
    fn residuals_are_small() {
        for (n, s) in [(4, 3.6), (4, 3.95), (2, 1.6), (3, 2.5)] {
            let sol = full(n, s, DEFAULT_DELTA);
            let r = ode_residual(&sol);
            assert!(r < 1e-8, "n={n} s={s}: residual {r}");
            let rt = t_equation_residual(&sol).unwrap();
            assert!(rt < 1e-8, "n={n} s={s}: T residual {rt}");
        }
    }

    #[test]
    fn origin_values() {
        let sol = full(4, 3.8, DEFAULT_DELTA);
        assert_eq!(sol.f[0], 0.0);
        assert!(sol.t[0] > 0.0);
        assert_relative_eq!(sol.j[0], 4.0 * (-2.0 * sol.log_t[0]).exp(), max_relative = 1e-14);
    }

    #[test]
    fn boundary_limits_for_n4() {
        for s in [3.6, 3.8, 3.9, 3.95] {
            let sol = full(4, s, DEFAULT_DELTA);
            let b = boundary_limits(&sol).unwrap();
            assert!(b.terminal_gap < 1e-3);
            assert!(b.log_t_at_end.abs() < 1e-5);
            assert_relative_eq!(b.t_slope, -1.0, max_relative = 1e-3);
            assert_relative_eq!(b.t_slope_difference, -1.0, max_relative = 1e-3);
            assert_relative_eq!(b.second_derivative, b.second_derivative_limit, max_relative = 2e-2);
            assert_relative_eq!(b.j, b.j_limit, max_relative = 2e-2);
            assert_relative_eq!(b.p_rr, b.p_rr_limit, max_relative = 2e-2);
            assert_relative_eq!(b.p_tt, b.p_tt_limit, max_relative = 2e-2);
            assert_relative_eq!(b.scalar_curvature, b.scalar_curvature_limit, max_relative = 2e-2);
        }
    }

    fn deviations(b: &BoundaryLimits) -> [f64; 8] {
        [
            b.terminal_gap,
            b.log_t_at_end,
            b.t_slope + 1.0,
            b.second_derivative - b.second_derivative_limit,
            b.p_rr - b.p_rr_limit,
            b.j - b.j_limit,
            b.p_tt - b.p_tt_limit,
            b.scalar_curvature - b.scalar_curvature_limit,
        ]
    }

    #[test]
    fn boundary_error_is_at_least_first_order() {
        for s in [3.6, 3.8, 3.95] {
            let a = deviations(&boundary_limits(&full(4, s, 1e-3)).unwrap());
            let b = deviations(&boundary_limits(&full(4, s, 5e-4)).unwrap());
            let ratios: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x / y).collect();
            // F, T, t' and P_rr are linear in ρ; T'' approaches 2 from below
            for &q in &ratios[..3] {
                assert!((q - 2.0).abs() < 0.05, "s={s}: {ratios:?}");
            }
            for &q in &ratios[3..5] {
                assert!(q > 1.6 && q < 2.1, "s={s}: {ratios:?}");
            }
            // J and R decay like ρ^{2γ−2}, P_θθ like ρ²
            for &q in &ratios[5..] {
                assert!(q > 2.0, "s={s}: {ratios:?}");
            }
        }
    }

    #[test]
    fn lemma_bounds_hold() {
        for s in [3.5, 3.6, 3.8, 3.9, 3.95] {
            let sol = full(4, s, DEFAULT_DELTA);
            let rep = verify_lemma_bounds(&sol).unwrap();
            assert!(!rep.any_violation(), "s={s}: {rep:?}");
        }
    }

    #[test]
    fn reconstruct_requires_shapes() {
        let mut sol = solve_f(4, 3.8, &RadialGrid::graded(10, 10, 1e-3).unwrap()).unwrap();
        sol.f.pop();
        assert!(reconstruct(sol).is_err());
        let sol = solve_f(4, 3.8, &RadialGrid::graded(10, 10, 1e-3).unwrap()).unwrap();
        assert!(curvature_j(&sol).is_err());
    }

    #[test]
    fn least_squares_recovers_exact_model() {
        let rows: Vec<Vec<f64>> = (1..50)
            .map(|i| {
                let x = i as f64 / 500.0;
                vec![1.0, x * x, x.powf(3.2)]
            })
            .collect();
        let rhs: Vec<f64> = rows.iter().map(|r| 1.0 - 0.8 * r[1] + 0.47 * r[2]).collect();
        let c = least_squares(&rows, &rhs).unwrap();
        assert_relative_eq!(c[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(c[1], -0.8, max_relative = 1e-8);
        assert_relative_eq!(c[2], 0.47, max_relative = 1e-8);
    }

    #[test]
    fn expansion_fit() {
        let sol = DefiningFunctionSolution::compute(4, 3.6, &RadialGrid::graded(1500, 1500, 1e-6).unwrap()).unwrap();
        let fit = boundary_expansion_fit(&sol).unwrap();
        assert!((fit.leading - 1.0).abs() < 1e-9);
        assert!(fit.rho_sq_rel_error() < 1e-5, "{fit:?}");
        assert_relative_eq!(fit.rho_two_gamma_expected, 0.47154822178540057537, max_relative = 1e-13);
        assert!(fit.rho_two_gamma_eigenfunction_rel_error() < 1e-3, "{fit:?}");
        let low = DefiningFunctionSolution::compute(2, 1.6, &RadialGrid::graded(50, 50, 1e-6).unwrap()).unwrap();
        assert!(boundary_expansion_fit(&low).is_err());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn bounds_hold_across_admissible_orders(n in 2usize..=5, frac in 0.02f64..0.98) {
            let nf = n as f64;
            let s = (nf + 1.0) / 2.0 + frac * (nf - 1.0) / 2.0;
            let sol = DefiningFunctionSolution::compute(n, s, &RadialGrid::graded(80, 80, 1e-5).unwrap()).unwrap();
            prop_assert_eq!(sol.f[0], 0.0);
            // F is negative and 1+rF stays in (0, 1]
            for i in 1..sol.f.len() {
                prop_assert!(sol.f[i] < 0.0);
                let q = sol.g[i] * sol.rho_0(i);
                prop_assert!(q > 0.0 && q <= 1.0 + 1e-12, "1+rF = {} at r = {}", q, sol.r_grid[i]);
            }
            let rep = verify_lemma_bounds(&sol).unwrap();
            let sw = rep.get("sandwich_rho0_rhostar_rhoL").unwrap();
            prop_assert!(!sw.violated, "{:?}", sw);
        }

        #[test]
        fn g_and_f_agree_where_both_are_accurate(frac in 0.05f64..0.95) {
            let s = 3.5 + 0.5 * frac;
            let sol = solve_f(4, s, &RadialGrid::graded(60, 60, 1e-4).unwrap()).unwrap();
            for i in 0..sol.r_grid.len() {
                if sol.gaps[i] > 0.1 {
                    let direct = (1.0 + sol.r_grid[i] * sol.f[i]) / sol.rho_0(i);
                    prop_assert!((direct - sol.g[i]).abs() <= 1e-9 * sol.g[i].abs().max(1.0));
                }
            }
        }
    }
}
