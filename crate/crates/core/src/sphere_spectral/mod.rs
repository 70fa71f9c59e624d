//! Quadrature grids and harmonic transforms on Sⁿ.
//!
//! S² carries the full real spherical-harmonic transform. S³ and S⁴ (and S²
//! when asked) use zonal expansions in orthonormal Gegenbauer polynomials.
//! All bases are orthonormal against the unnormalised surface measure, and
//! the Laplacian is the positive one, with spectrum l(l+n−1).

mod function_spec;

pub use function_spec::{parse_builtin, random_band_limited, FunctionSpec, SpecBody};

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{gauss_jacobi, JacobiRecurrence};
use crate::specfun::log_gamma;

pub const MAX_BAND_LIMIT: usize = 512;

/// Surface area of the unit sphere Sⁿ ⊂ R^{n+1}.
pub fn sphere_area(n: usize) -> f64 {
    let h = (n as f64 + 1.0) / 2.0;
    2.0 * (h * PI.ln() - log_gamma(h).expect("positive argument")).exp()
}

/// Eigenvalue of the positive Laplacian on degree-l harmonics of Sⁿ.
pub fn laplacian_eigenvalue(n: usize, l: usize) -> f64 {
    let l = l as f64;
    l * (l + n as f64 - 1.0)
}

fn check_dimension(n: usize) -> Result<()> {
    if (2..=4).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// Full (θ, φ) layout on S², or colatitude-only layout on any Sⁿ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Full,
    Zonal,
}

#[derive(Debug, Clone)]
pub struct SphereGrid {
    pub n: usize,
    pub band_limit: usize,
    pub layout: Layout,
    /// Colatitudes θ_i, increasing.
    pub colat_nodes: Vec<f64>,
    /// cos θ_i, matching `colat_nodes`.
    pub cos_nodes: Vec<f64>,
    /// Ring weights; they include sin^{n−1}θ and the measure of S^{n−1},
    /// so Σ colat_weights = |Sⁿ|.
    pub colat_weights: Vec<f64>,
    /// Equispaced longitudes (empty for zonal layouts).
    pub lon_nodes: Vec<f64>,
    pub exactness_degree: usize,
}

/// Standard grid: full layout on S², zonal on S³ and S⁴.
pub fn build_grid(n: usize, band_limit: usize) -> Result<SphereGrid> {
    let layout = if n == 2 { Layout::Full } else { Layout::Zonal };
    SphereGrid::new(n, band_limit, layout)
}

pub fn build_zonal_grid(n: usize, band_limit: usize) -> Result<SphereGrid> {
    SphereGrid::new(n, band_limit, Layout::Zonal)
}

impl SphereGrid {
    pub fn new(n: usize, band_limit: usize, layout: Layout) -> Result<Self> {
        check_dimension(n)?;
        if layout == Layout::Full && n != 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        if !(1..=MAX_BAND_LIMIT).contains(&band_limit) {
            return Err(Error::BandLimit {
                requested: band_limit,
                available: MAX_BAND_LIMIT,
            });
        }
        let alpha = (n as f64 - 2.0) / 2.0;
        let rule = gauss_jacobi(band_limit + 1, alpha, alpha)?;
        let ring_area = sphere_area(n - 1);
        // nodes come sorted in x; reverse so θ increases
        let cos_nodes: Vec<f64> = rule.nodes.iter().rev().copied().collect();
        let colat_weights: Vec<f64> = rule.weights.iter().rev().map(|w| w * ring_area).collect();
        let colat_nodes = cos_nodes.iter().map(|x| x.acos()).collect();
        let lon_nodes = match layout {
            Layout::Full => {
                let m = 2 * band_limit + 1;
                (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect()
            }
            Layout::Zonal => Vec::new(),
        };
        Ok(Self {
            n,
            band_limit,
            layout,
            colat_nodes,
            cos_nodes,
            colat_weights,
            lon_nodes,
            exactness_degree: 2 * band_limit + 1,
        })
    }

    pub fn rings(&self) -> usize {
        self.colat_nodes.len()
    }

    /// Samples per ring: the longitude count, or 1 for zonal layouts.
    pub fn ring_len(&self) -> usize {
        self.lon_nodes.len().max(1)
    }

    pub fn len(&self) -> usize {
        self.rings() * self.ring_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// (θ, φ) of sample k; φ = 0 on zonal layouts.
    pub fn point(&self, k: usize) -> (f64, f64) {
        let per = self.ring_len();
        let phi = if self.lon_nodes.is_empty() {
            0.0
        } else {
            self.lon_nodes[k % per]
        };
        (self.colat_nodes[k / per], phi)
    }

    /// Per-sample quadrature weights in sample order.
    pub fn weights(&self) -> Vec<f64> {
        let per = self.ring_len();
        let mut out = Vec::with_capacity(self.len());
        for &w in &self.colat_weights {
            out.extend(std::iter::repeat_n(w / per as f64, per));
        }
        out
    }

    /// Evaluate `f(θ, φ)` at every sample.
    pub fn sample<F: FnMut(f64, f64) -> f64>(&self, mut f: F) -> Vec<f64> {
        (0..self.len())
            .map(|k| {
                let (t, p) = self.point(k);
                f(t, p)
            })
            .collect()
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        self.check_samples(values)?;
        let per = self.ring_len();
        Ok(values
            .chunks(per)
            .zip(&self.colat_weights)
            .map(|(ring, w)| w * ring.iter().sum::<f64>() / per as f64)
            .sum())
    }

    /// Average ⨍ of the samples over Sⁿ.
    pub fn average(&self, values: &[f64]) -> Result<f64> {
        Ok(self.integrate(values)? / sphere_area(self.n))
    }

    fn check_samples(&self, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        Ok(())
    }
}

/// Coefficients in the orthonormal harmonic basis.
///
/// Full tables on S² store degree l, order m (−l ≤ m ≤ l) at index l²+l+m,
/// with real harmonics √2 N P_l^m cos mφ for m > 0 and √2 N P_l^{|m|} sin |m|φ
/// for m < 0. Zonal sequences store degree l at index l.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCoefficients {
    pub n: usize,
    pub band_limit: usize,
    pub kind: Layout,
    pub values: Vec<f64>,
}

impl HarmonicCoefficients {
    pub fn zeros(n: usize, band_limit: usize, kind: Layout) -> Self {
        let len = match kind {
            Layout::Full => (band_limit + 1) * (band_limit + 1),
            Layout::Zonal => band_limit + 1,
        };
        Self {
            n,
            band_limit,
            kind,
            values: vec![0.0; len],
        }
    }

    /// Wrap a coefficient vector, inferring the band limit from its length.
    pub fn from_values(n: usize, kind: Layout, values: Vec<f64>) -> Result<Self> {
        check_dimension(n)?;
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty coefficient list".into()));
        }
        let band_limit = match kind {
            Layout::Zonal => values.len() - 1,
            Layout::Full => {
                if n != 2 {
                    return Err(Error::UnsupportedDimension(n));
                }
                let root = (values.len() as f64).sqrt().round() as usize;
                if root * root != values.len() {
                    return Err(Error::InvalidParameter(format!(
                        "full S² table needs a square length, got {}",
                        values.len()
                    )));
                }
                root - 1
            }
        };
        Ok(Self {
            n,
            band_limit,
            kind,
            values,
        })
    }

    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m) as usize
    }

    /// Degree of the coefficient stored at `idx`.
    pub fn degree_at(&self, idx: usize) -> usize {
        match self.kind {
            Layout::Zonal => idx,
            Layout::Full => (idx as f64).sqrt().floor() as usize,
        }
    }

    pub fn get(&self, l: usize, m: i64) -> f64 {
        match self.kind {
            Layout::Zonal if m == 0 => self.values.get(l).copied().unwrap_or(0.0),
            Layout::Zonal => 0.0,
            Layout::Full => {
                if l > self.band_limit || m.unsigned_abs() as usize > l {
                    0.0
                } else {
                    self.values[Self::index(l, m)]
                }
            }
        }
    }

    pub fn set(&mut self, l: usize, m: i64, value: f64) {
        let idx = match self.kind {
            Layout::Zonal => {
                assert_eq!(m, 0, "zonal tables only carry m = 0");
                l
            }
            Layout::Full => Self::index(l, m),
        };
        self.values[idx] = value;
    }

    /// Multiply each coefficient by `f(l)`.
    pub fn scale_by_degree<F: Fn(usize) -> f64>(&self, f: F) -> Self {
        let mut out = self.clone();
        for (idx, v) in out.values.iter_mut().enumerate() {
            *v *= f(self.degree_at(idx));
        }
        out
    }

    /// Σ f(l)·c², the quadratic form of a degree-diagonal operator.
    pub fn quadratic_form<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(idx, c)| f(self.degree_at(idx)) * c * c)
            .sum()
    }

    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.kind != other.kind || self.n != other.n {
            return Err(Error::DimensionMismatch(format!(
                "{:?} on S{} vs {:?} on S{}",
                self.kind, self.n, other.kind, other.n
            )));
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum())
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|c| c * c).sum()
    }

    /// Same function, band limit truncated or zero-padded to `band_limit`.
    pub fn with_band_limit(&self, band_limit: usize) -> Self {
        let mut out = Self::zeros(self.n, band_limit, self.kind);
        let keep = out.values.len().min(self.values.len());
        out.values[..keep].copy_from_slice(&self.values[..keep]);
        out
    }

    /// Constant term as a function value: c₀ / √|Sⁿ| is the mean.
    pub fn mean(&self) -> f64 {
        self.values[0] / sphere_area(self.n).sqrt()
    }

    /// Value at (θ, φ); O(L²) per point on full tables.
    pub fn evaluate(&self, theta: f64, phi: f64) -> f64 {
        match self.kind {
            Layout::Zonal => self.evaluate_zonal(theta).0,
            Layout::Full => {
                let table = LegendreTable::new(self.band_limit, theta);
                let mut acc = 0.0;
                for l in 0..=self.band_limit {
                    acc += self.values[Self::index(l, 0)] * table.get(l, 0);
                    for m in 1..=l {
                        let p = SQRT_2 * table.get(l, m);
                        let (s, c) = (m as f64 * phi).sin_cos();
                        acc += p
                            * (self.values[Self::index(l, m as i64)] * c
                                + self.values[Self::index(l, -(m as i64))] * s);
                    }
                }
                acc
            }
        }
    }

    /// Value and θ-derivative of a zonal expansion at colatitude θ.
    pub fn evaluate_zonal(&self, theta: f64) -> (f64, f64) {
        let basis = ZonalBasis::new(self.n, self.band_limit);
        let (vals, slopes) = basis.values_and_slopes(theta);
        let mut v = 0.0;
        let mut d = 0.0;
        for ((c, p), dp) in self.values.iter().zip(&vals).zip(&slopes) {
            v += c * p;
            d += c * dp;
        }
        (v, d)
    }
}

/// Values and θ-derivatives of a zonal expansion at many colatitudes.
pub fn zonal_profile(coeffs: &HarmonicCoefficients, thetas: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if coeffs.kind != Layout::Zonal {
        return Err(Error::DimensionMismatch("zonal profile of a full S² table".into()));
    }
    let basis = ZonalBasis::new(coeffs.n, coeffs.band_limit);
    let mut vals = Vec::with_capacity(thetas.len());
    let mut slopes = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let (z, dz) = basis.values_and_slopes(t);
        vals.push(coeffs.values.iter().zip(&z).map(|(c, v)| c * v).sum());
        slopes.push(coeffs.values.iter().zip(&dz).map(|(c, v)| c * v).sum());
    }
    Ok((vals, slopes))
}

/// Orthonormal zonal harmonics Z_l(θ) = q_l(cos θ)/√|S^{n−1}| on Sⁿ.
#[derive(Debug, Clone)]
pub struct ZonalBasis {
    pub n: usize,
    pub band_limit: usize,
    rec: JacobiRecurrence,
    scale: f64,
}

impl ZonalBasis {
    pub fn new(n: usize, band_limit: usize) -> Self {
        let alpha = (n as f64 - 2.0) / 2.0;
        let rec = JacobiRecurrence::new(alpha, alpha, band_limit).expect("alpha > -1");
        Self {
            n,
            band_limit,
            rec,
            scale: 1.0 / sphere_area(n - 1).sqrt(),
        }
    }

    pub fn values(&self, theta: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.band_limit + 1];
        self.rec.eval_into(theta.cos(), &mut out);
        out.iter_mut().for_each(|v| *v *= self.scale);
        out
    }

    /// Values Z_l(θ) and derivatives dZ_l/dθ.
    pub fn values_and_slopes(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let len = self.band_limit + 1;
        let mut val = vec![0.0; len];
        let mut der = vec![0.0; len];
        let (s, c) = theta.sin_cos();
        self.rec.eval_with_derivative(c, &mut val, &mut der);
        for (v, d) in val.iter_mut().zip(der.iter_mut()) {
            *v *= self.scale;
            *d *= -s * self.scale;
        }
        (val, der)
    }
}

/// Normalised associated Legendre values P̃_l^m(cos θ), 0 ≤ m ≤ l ≤ L,
/// scaled so that 2π ∫ (P̃_l^m)² d(cos θ) = 1. No Condon–Shortley phase.
struct LegendreTable {
    values: Vec<f64>,
}

impl LegendreTable {
    fn new(band_limit: usize, theta: f64) -> Self {
        let (s, x) = theta.sin_cos();
        let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let mut values = vec![0.0; (band_limit + 1) * (band_limit + 2) / 2];
        let mut pmm = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=band_limit {
            if m > 0 {
                let mf = m as f64;
                pmm *= ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s;
            }
            values[tri(m, m)] = pmm;
            if m < band_limit {
                values[tri(m + 1, m)] = (2.0 * m as f64 + 3.0).sqrt() * x * pmm;
            }
            for l in (m + 2)..=band_limit {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
                values[tri(l, m)] = a * (x * values[tri(l - 1, m)] - b * values[tri(l - 2, m)]);
            }
        }
        Self { values }
    }

    fn get(&self, l: usize, m: usize) -> f64 {
        self.values[l * (l + 1) / 2 + m]
    }
}

fn trig_table(grid: &SphereGrid) -> (Vec<f64>, Vec<f64>) {
    let nlon = grid.lon_nodes.len();
    let mut cos_t = vec![0.0; (grid.band_limit + 1) * nlon];
    let mut sin_t = vec![0.0; (grid.band_limit + 1) * nlon];
    for m in 0..=grid.band_limit {
        for (j, phi) in grid.lon_nodes.iter().enumerate() {
            let (s, c) = (m as f64 * phi).sin_cos();
            cos_t[m * nlon + j] = c;
            sin_t[m * nlon + j] = s;
        }
    }
    (cos_t, sin_t)
}

/// Project grid samples onto the harmonic basis up to the grid's band limit.
pub fn analyze(samples: &[f64], grid: &SphereGrid) -> Result<HarmonicCoefficients> {
    grid.check_samples(samples)?;
    let band = grid.band_limit;
    let mut out = HarmonicCoefficients::zeros(grid.n, band, grid.layout);
    match grid.layout {
        Layout::Zonal => {
            let basis = ZonalBasis::new(grid.n, band);
            for ((theta, w), f) in grid.colat_nodes.iter().zip(&grid.colat_weights).zip(samples) {
                for (c, z) in out.values.iter_mut().zip(basis.values(*theta)) {
                    *c += w * f * z;
                }
            }
        }
        Layout::Full => {
            let nlon = grid.lon_nodes.len();
            let (cos_t, sin_t) = trig_table(grid);
            let mut a = vec![0.0; band + 1];
            let mut b = vec![0.0; band + 1];
            for (i, ring) in samples.chunks(nlon).enumerate() {
                for m in 0..=band {
                    let row = m * nlon..(m + 1) * nlon;
                    a[m] = ring.iter().zip(&cos_t[row.clone()]).map(|(f, c)| f * c).sum();
                    b[m] = ring.iter().zip(&sin_t[row]).map(|(f, s)| f * s).sum();
                }
                let w = grid.colat_weights[i] / nlon as f64;
                let table = LegendreTable::new(band, grid.colat_nodes[i]);
                for l in 0..=band {
                    out.values[HarmonicCoefficients::index(l, 0)] += w * table.get(l, 0) * a[0];
                    for m in 1..=l {
                        let p = w * SQRT_2 * table.get(l, m);
                        out.values[HarmonicCoefficients::index(l, m as i64)] += p * a[m];
                        out.values[HarmonicCoefficients::index(l, -(m as i64))] += p * b[m];
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Evaluate an expansion on a grid whose band limit covers it.
pub fn synthesize(coeffs: &HarmonicCoefficients, grid: &SphereGrid) -> Result<Vec<f64>> {
    if coeffs.band_limit > grid.band_limit {
        return Err(Error::BandLimit {
            requested: coeffs.band_limit,
            available: grid.band_limit,
        });
    }
    synthesize_any(coeffs, grid)
}

/// Evaluate an expansion on any compatible grid, regardless of band limits.
pub(crate) fn synthesize_any(coeffs: &HarmonicCoefficients, grid: &SphereGrid) -> Result<Vec<f64>> {
    if coeffs.n != grid.n {
        return Err(Error::DimensionMismatch(format!(
            "coefficients on S{} vs grid on S{}",
            coeffs.n, grid.n
        )));
    }
    let band = coeffs.band_limit;
    match (coeffs.kind, grid.layout) {
        (Layout::Zonal, _) => {
            let basis = ZonalBasis::new(grid.n, band);
            let per = grid.ring_len();
            let mut out = Vec::with_capacity(grid.len());
            for theta in &grid.colat_nodes {
                let v: f64 = coeffs.values.iter().zip(basis.values(*theta)).map(|(c, z)| c * z).sum();
                out.extend(std::iter::repeat_n(v, per));
            }
            Ok(out)
        }
        (Layout::Full, Layout::Zonal) => Err(Error::DimensionMismatch(
            "full S² coefficients cannot be sampled on a zonal grid".into(),
        )),
        (Layout::Full, Layout::Full) => {
            let nlon = grid.lon_nodes.len();
            let mut out = vec![0.0; grid.len()];
            let mut a = vec![0.0; band + 1];
            let mut b = vec![0.0; band + 1];
            for (i, ring) in out.chunks_mut(nlon).enumerate() {
                let table = LegendreTable::new(band, grid.colat_nodes[i]);
                a.iter_mut().for_each(|v| *v = 0.0);
                b.iter_mut().for_each(|v| *v = 0.0);
                for l in 0..=band {
                    a[0] += coeffs.values[HarmonicCoefficients::index(l, 0)] * table.get(l, 0);
                    for m in 1..=l {
                        let p = SQRT_2 * table.get(l, m);
                        a[m] += p * coeffs.values[HarmonicCoefficients::index(l, m as i64)];
                        b[m] += p * coeffs.values[HarmonicCoefficients::index(l, -(m as i64))];
                    }
                }
                for (j, phi) in grid.lon_nodes.iter().enumerate() {
                    let mut v = a[0];
                    for m in 1..=band {
                        let (s, c) = (m as f64 * phi).sin_cos();
                        v += a[m] * c + b[m] * s;
                    }
                    ring[j] = v;
                }
            }
            Ok(out)
        }
    }
}
