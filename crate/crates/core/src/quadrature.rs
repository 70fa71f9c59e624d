//! Gauss–Jacobi quadrature and the orthonormal Jacobi recurrence.
//!
//! Nodes are the eigenvalues of the symmetric Jacobi matrix (implicit QL,
//! O(N²) without eigenvectors), polished by Newton steps on the orthonormal
//! polynomial. Weights are Christoffel numbers 1/Σ q_k(x_i)², which avoids
//! any Gamma-function normalisation at large N.

use crate::error::{Error, Result};
use crate::specfun::log_gamma;

/// Three-term recurrence for polynomials orthonormal against
/// (1−x)^α (1+x)^β on [−1, 1].
#[derive(Debug, Clone)]
pub struct JacobiRecurrence {
    pub alpha: f64,
    pub beta: f64,
    /// Diagonal coefficients a_k, k = 0..len.
    diag: Vec<f64>,
    /// Off-diagonal sqrt(b_k), k = 0..len (entry 0 unused).
    off: Vec<f64>,
    /// Value of the constant orthonormal polynomial, 1/sqrt(μ₀).
    q0: f64,
}

impl JacobiRecurrence {
    /// Recurrence able to evaluate degrees 0..=max_degree.
    pub fn new(alpha: f64, beta: f64, max_degree: usize) -> Result<Self> {
        if !(alpha > -1.0 && beta > -1.0) {
            return Err(Error::InvalidParameter(format!(
                "Jacobi exponents must exceed -1 (alpha = {alpha}, beta = {beta})"
            )));
        }
        let len = max_degree + 2;
        let ab = alpha + beta;
        let mut diag = Vec::with_capacity(len);
        let mut off = Vec::with_capacity(len);
        for k in 0..len {
            let kf = k as f64;
            let a = if k == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let t = 2.0 * kf + ab;
                (beta * beta - alpha * alpha) / (t * (t + 2.0))
            };
            diag.push(a);
            let b = match k {
                0 => 0.0,
                1 => 4.0 * (1.0 + alpha) * (1.0 + beta) / ((2.0 + ab).powi(2) * (3.0 + ab)),
                _ => {
                    let t = 2.0 * kf + ab;
                    4.0 * kf * (kf + alpha) * (kf + beta) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0))
                }
            };
            off.push(b.sqrt());
        }
        let ln_mu0 = (ab + 1.0) * std::f64::consts::LN_2 + log_gamma(alpha + 1.0)? + log_gamma(beta + 1.0)?
            - log_gamma(ab + 2.0)?;
        Ok(Self {
            alpha,
            beta,
            diag,
            off,
            q0: (-0.5 * ln_mu0).exp(),
        })
    }

    pub fn max_degree(&self) -> usize {
        self.diag.len() - 2
    }

    /// ∫ (1−x)^α (1+x)^β dx over [−1, 1].
    pub fn total_mass(&self) -> f64 {
        1.0 / (self.q0 * self.q0)
    }

    /// Fill `out[k] = q_k(x)` for k = 0..out.len().
    pub fn eval_into(&self, x: f64, out: &mut [f64]) {
        debug_assert!(out.len() <= self.max_degree() + 1);
        if out.is_empty() {
            return;
        }
        out[0] = self.q0;
        if out.len() > 1 {
            out[1] = (x - self.diag[0]) * self.q0 / self.off[1];
        }
        for k in 1..out.len().saturating_sub(1) {
            out[k + 1] = ((x - self.diag[k]) * out[k] - self.off[k] * out[k - 1]) / self.off[k + 1];
        }
    }

    /// Fill values and x-derivatives of q_0..q_{len-1}.
    pub fn eval_with_derivative(&self, x: f64, val: &mut [f64], der: &mut [f64]) {
        let len = val.len();
        debug_assert_eq!(len, der.len());
        if len == 0 {
            return;
        }
        val[0] = self.q0;
        der[0] = 0.0;
        if len > 1 {
            val[1] = (x - self.diag[0]) * self.q0 / self.off[1];
            der[1] = self.q0 / self.off[1];
        }
        for k in 1..len.saturating_sub(1) {
            val[k + 1] = ((x - self.diag[k]) * val[k] - self.off[k] * val[k - 1]) / self.off[k + 1];
            der[k + 1] = (val[k] + (x - self.diag[k]) * der[k] - self.off[k] * der[k - 1]) / self.off[k + 1];
        }
    }

    /// q_N(x) and q_N'(x) for a single degree N.
    fn value_and_slope(&self, x: f64, degree: usize) -> (f64, f64) {
        let (mut p_prev, mut p) = (0.0, self.q0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for k in 0..degree {
            let p_next = ((x - self.diag[k]) * p - self.off[k] * p_prev) / self.off[k + 1];
            let d_next = (p + (x - self.diag[k]) * d - self.off[k] * d_prev) / self.off[k + 1];
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d)
    }
}

/// A quadrature rule on [−1, 1]: Σ w_i f(x_i) ≈ ∫ (1−x)^α (1+x)^β f(x) dx.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// N-point Gauss–Jacobi rule for the weight (1−x)^α (1+x)^β.
pub fn gauss_jacobi(points: usize, alpha: f64, beta: f64) -> Result<GaussRule> {
    if points == 0 {
        return Err(Error::InvalidParameter("quadrature needs at least one node".into()));
    }
    let rec = JacobiRecurrence::new(alpha, beta, points)?;
    let mut diag: Vec<f64> = rec.diag[..points].to_vec();
    let mut sub: Vec<f64> = (0..points)
        .map(|i| if i + 1 < points { rec.off[i + 1] } else { 0.0 })
        .collect();
    tridiagonal_eigenvalues(&mut diag, &mut sub)?;
    diag.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut nodes = diag;
    for x in nodes.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = rec.value_and_slope(*x, points);
            if dp == 0.0 {
                break;
            }
            let step = p / dp;
            let next = (*x - step).clamp(-1.0, 1.0);
            let done = (next - *x).abs() <= 1e-17;
            *x = next;
            if done {
                break;
            }
        }
    }

    let mut buf = vec![0.0; points];
    let weights = nodes
        .iter()
        .map(|&x| {
            rec.eval_into(x, &mut buf);
            1.0 / buf.iter().map(|q| q * q).sum::<f64>()
        })
        .collect();
    Ok(GaussRule { nodes, weights })
}

pub fn gauss_legendre(points: usize) -> Result<GaussRule> {
    gauss_jacobi(points, 0.0, 0.0)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL.
///
/// `diag` is overwritten with the (unsorted) eigenvalues; `sub[i]` couples
/// rows i and i+1 and is destroyed.
fn tridiagonal_eigenvalues(diag: &mut [f64], sub: &mut [f64]) -> Result<()> {
    let n = diag.len();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = diag[m].abs() + diag[m + 1].abs();
                if sub[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 100 {
                return Err(Error::NonConvergence(
                    "tridiagonal QL iteration did not converge".into(),
                ));
            }
            let mut g = (diag[l + 1] - diag[l]) / (2.0 * sub[l]);
            let mut r = g.hypot(1.0);
            g = diag[m] - diag[l] + sub[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * sub[i];
                let b = c * sub[i];
                r = f.hypot(g);
                sub[i + 1] = r;
                if r == 0.0 {
                    diag[i + 1] -= p;
                    sub[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = diag[i + 1] - p;
                r = (diag[i] - g) * s + 2.0 * c * b;
                p = s * r;
                diag[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            diag[l] -= p;
            sub[l] = g;
            sub[m] = 0.0;
        }
    }
    Ok(())
}

/// Beta-function moment ∫_{−1}^{1} x^k (1−x²)^α dx, used as an exactness oracle.
pub fn symmetric_moment(k: usize, alpha: f64) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    // substitute t = x²: B((k+1)/2, α+1)
    let a = (k as f64 + 1.0) / 2.0;
    let b = alpha + 1.0;
    Ok((log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?).exp())
}
