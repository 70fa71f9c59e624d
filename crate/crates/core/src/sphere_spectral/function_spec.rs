//! Declarative descriptions of test functions on Sⁿ.
//!
//! JSON form: `{"tag": "...", "n": ..., "payload": {...}}` with tags
//! `zonal-formula`, `coefficient-list`, `grid-samples`, `conformal-family`.

use std::io::{Read, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{analyze, check_dimension, synthesize_any, HarmonicCoefficients, Layout, SphereGrid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct FunctionSpec {
    pub n: usize,
    pub body: SpecBody,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpecBody {
    /// ω(θ) = Σ_k c_k cos^k θ.
    ZonalFormula {
        cos_powers: Vec<f64>,
    },
    CoefficientList(HarmonicCoefficients),
    /// Samples on the layout `SphereGrid::new(n, band_limit, layout)`.
    GridSamples {
        layout: Layout,
        band_limit: usize,
        values: Vec<f64>,
    },
    /// ln u_a, or u_a^power when a power is given, with
    /// u_a(x) = (1−|a|²)/|x−a|² for a in the open unit ball of R^{n+1}.
    ConformalFamily {
        a: Vec<f64>,
        power: Option<f64>,
    },
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    tag: String,
    n: usize,
    #[serde(default)]
    payload: Value,
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn float_list(v: &Value, field: &'static str) -> Result<Vec<f64>> {
    let arr = v.get(field).ok_or(Error::MissingField(field))?;
    match arr {
        Value::Array(items) => items
            .iter()
            .map(|x| x.as_f64().ok_or_else(|| bad(format!("`{field}` must hold numbers"))))
            .collect(),
        _ => Err(bad(format!("`{field}` must be an array"))),
    }
}

fn layout_field(v: &Value, field: &str, n: usize) -> Result<Layout> {
    match v.get(field) {
        None => Ok(if n == 2 { Layout::Full } else { Layout::Zonal }),
        Some(x) => serde_json::from_value(x.clone()).map_err(|e| bad(format!("`{field}`: {e}"))),
    }
}

impl TryFrom<RawSpec> for FunctionSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        let n = raw.n;
        let p = &raw.payload;
        let body = match raw.tag.as_str() {
            "zonal-formula" => SpecBody::ZonalFormula {
                cos_powers: float_list(p, "cos_powers")?,
            },
            "coefficient-list" => {
                let kind = layout_field(p, "kind", n)?;
                SpecBody::CoefficientList(HarmonicCoefficients::from_values(n, kind, float_list(p, "values")?)?)
            }
            "grid-samples" => {
                let layout = layout_field(p, "layout", n)?;
                let values = float_list(p, "values")?;
                let band_limit = band_from_sample_count(layout, values.len())?;
                SpecBody::GridSamples {
                    layout,
                    band_limit,
                    values,
                }
            }
            "conformal-family" => {
                let a = match p.get("a").ok_or(Error::MissingField("a"))? {
                    Value::Number(t) => vec![t.as_f64().unwrap_or(f64::NAN)],
                    _ => float_list(p, "a")?,
                };
                let power = match p.get("power") {
                    None | Some(Value::Null) => None,
                    Some(x) => Some(x.as_f64().ok_or_else(|| bad("`power` must be a number"))?),
                };
                SpecBody::ConformalFamily { a, power }
            }
            other => return Err(bad(format!("unknown function tag `{other}`"))),
        };
        FunctionSpec::new(n, body)
    }
}

impl From<FunctionSpec> for RawSpec {
    fn from(spec: FunctionSpec) -> Self {
        let (tag, payload) = match spec.body {
            SpecBody::ZonalFormula { cos_powers } => ("zonal-formula", json!({ "cos_powers": cos_powers })),
            SpecBody::CoefficientList(c) => ("coefficient-list", json!({ "kind": c.kind, "values": c.values })),
            SpecBody::GridSamples { layout, values, .. } => {
                ("grid-samples", json!({ "layout": layout, "values": values }))
            }
            SpecBody::ConformalFamily { a, power } => ("conformal-family", json!({ "a": a, "power": power })),
        };
        RawSpec {
            tag: tag.to_string(),
            n: spec.n,
            payload,
        }
    }
}

fn band_from_sample_count(layout: Layout, count: usize) -> Result<usize> {
    let band = match layout {
        Layout::Zonal => count.checked_sub(1),
        Layout::Full => {
            // (L+1)(2L+1) = 2L² + 3L + 1
            let l = ((-3.0 + (1.0 + 8.0 * count as f64).sqrt()) / 4.0).round() as usize;
            ((l + 1) * (2 * l + 1) == count).then_some(l)
        }
    };
    match band {
        Some(l) if l >= 1 => Ok(l),
        _ => Err(Error::InvalidParameter(format!(
            "{count} samples do not match any {layout:?} grid layout"
        ))),
    }
}

impl FunctionSpec {
    pub fn new(n: usize, body: SpecBody) -> Result<Self> {
        check_dimension(n)?;
        let spec = Self { n, body };
        match &spec.body {
            SpecBody::ZonalFormula { cos_powers } if cos_powers.is_empty() => {
                return Err(Error::InvalidParameter("empty zonal formula".into()))
            }
            SpecBody::CoefficientList(c) if c.n != n => {
                return Err(Error::DimensionMismatch(format!(
                    "coefficients on S{} in a spec for S{n}",
                    c.n
                )))
            }
            SpecBody::GridSamples { layout, .. }
            | SpecBody::CoefficientList(HarmonicCoefficients { kind: layout, .. })
                if *layout == Layout::Full && n != 2 =>
            {
                return Err(Error::UnsupportedDimension(n))
            }
            SpecBody::ConformalFamily { a, power } => {
                let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(norm < 1.0) {
                    return Err(Error::InvalidParameter(format!("|a| = {norm} must be below 1")));
                }
                if a.len() != 1 && a.len() != n + 1 {
                    return Err(Error::InvalidParameter(format!(
                        "a needs 1 (polar axis) or {} components",
                        n + 1
                    )));
                }
                if n != 2 && !spec.is_zonal() {
                    return Err(Error::InvalidParameter(
                        "off-axis conformal factors are only supported on S²".into(),
                    ));
                }
                if power.is_some_and(|p| !p.is_finite()) {
                    return Err(Error::InvalidParameter("non-finite power".into()));
                }
            }
            _ => {}
        }
        Ok(spec)
    }

    pub fn zonal_formula(n: usize, cos_powers: Vec<f64>) -> Result<Self> {
        Self::new(n, SpecBody::ZonalFormula { cos_powers })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Self::zonal_formula(n, vec![c])
    }

    pub fn from_coefficients(c: HarmonicCoefficients) -> Result<Self> {
        Self::new(c.n, SpecBody::CoefficientList(c))
    }

    pub fn from_samples(grid: &SphereGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Self::new(
            grid.n,
            SpecBody::GridSamples {
                layout: grid.layout,
                band_limit: grid.band_limit,
                values,
            },
        )
    }

    /// Conformal family member for a = t·e_{n+1} on the polar axis.
    pub fn conformal_axis(n: usize, t: f64, power: Option<f64>) -> Result<Self> {
        Self::new(n, SpecBody::ConformalFamily { a: vec![t], power })
    }

    pub fn is_zonal(&self) -> bool {
        match &self.body {
            SpecBody::ZonalFormula { .. } => true,
            SpecBody::CoefficientList(c) => c.kind == Layout::Zonal,
            SpecBody::GridSamples { layout, .. } => *layout == Layout::Zonal,
            SpecBody::ConformalFamily { a, .. } => a.len() == 1 || a[..a.len() - 1].iter().all(|x| *x == 0.0),
        }
    }

    pub fn layout(&self) -> Layout {
        if self.is_zonal() {
            Layout::Zonal
        } else {
            Layout::Full
        }
    }

    /// Exact band limit when the function is a finite harmonic expansion.
    pub fn exact_band_limit(&self) -> Option<usize> {
        match &self.body {
            SpecBody::ZonalFormula { cos_powers } => Some(cos_powers.len() - 1),
            SpecBody::CoefficientList(c) => Some(c.band_limit),
            SpecBody::GridSamples { band_limit, .. } => Some(*band_limit),
            SpecBody::ConformalFamily { a, .. } => a.iter().all(|x| *x == 0.0).then_some(0),
        }
    }

    /// Distance of the family parameter from the origin (0 for other specs).
    pub fn family_radius(&self) -> f64 {
        match &self.body {
            SpecBody::ConformalFamily { a, .. } => a.iter().map(|x| x * x).sum::<f64>().sqrt(),
            _ => 0.0,
        }
    }

    /// Band limit for spectral work: the exact limit when there is one,
    /// otherwise `base` grown by 1/(1−|a|) to follow the peak of u_a.
    pub fn working_band(&self, base: usize) -> usize {
        match self.exact_band_limit() {
            Some(l) => l.max(1),
            None => {
                let grown = (base as f64 / 2.0 / (1.0 - self.family_radius())).ceil() as usize;
                base.max(grown).min(super::MAX_BAND_LIMIT)
            }
        }
    }

    /// Short label for reports.
    pub fn describe(&self) -> String {
        match &self.body {
            SpecBody::ZonalFormula { cos_powers } => format!("zonal-formula{cos_powers:?}"),
            SpecBody::CoefficientList(c) => format!("coefficient-list(L={})", c.band_limit),
            SpecBody::GridSamples { band_limit, .. } => format!("grid-samples(L={band_limit})"),
            SpecBody::ConformalFamily { a, power: None } => format!("conformal-weight(a={a:?})"),
            SpecBody::ConformalFamily { a, power: Some(p) } => format!("conformal-power(a={a:?},p={p})"),
        }
    }

    /// Pointwise value; for coefficient and sample specs this sums the expansion.
    pub fn eval(&self, theta: f64, phi: f64) -> Result<f64> {
        match &self.body {
            SpecBody::ZonalFormula { cos_powers } => {
                let x = theta.cos();
                Ok(cos_powers.iter().rev().fold(0.0, |acc, c| acc * x + c))
            }
            SpecBody::CoefficientList(c) => Ok(c.evaluate(theta, phi)),
            SpecBody::GridSamples { .. } => Ok(self.own_coefficients()?.evaluate(theta, phi)),
            SpecBody::ConformalFamily { a, power } => {
                let (st, ct) = theta.sin_cos();
                let x = [st * phi.cos(), st * phi.sin(), ct];
                let (a_sq, dist_sq) = if a.len() == 1 {
                    (a[0] * a[0], 1.0 - 2.0 * a[0] * ct + a[0] * a[0])
                } else {
                    // S² only: a has three components
                    let d: f64 = a.iter().zip(&x).map(|(ai, xi)| (xi - ai).powi(2)).sum();
                    (a.iter().map(|v| v * v).sum(), d)
                };
                let ln_u = (-a_sq).ln_1p() - dist_sq.ln();
                Ok(match power {
                    None => ln_u,
                    Some(p) => (p * ln_u).exp(),
                })
            }
        }
    }

    fn own_coefficients(&self) -> Result<HarmonicCoefficients> {
        match &self.body {
            SpecBody::GridSamples {
                layout,
                band_limit,
                values,
            } => analyze(values, &SphereGrid::new(self.n, *band_limit, *layout)?),
            SpecBody::CoefficientList(c) => Ok(c.clone()),
            _ => unreachable!("only expansion-backed specs"),
        }
    }

    /// Values at every sample of `grid`.
    pub fn sample(&self, grid: &SphereGrid) -> Result<Vec<f64>> {
        if grid.n != self.n {
            return Err(Error::DimensionMismatch(format!(
                "function on S{} sampled on a grid for S{}",
                self.n, grid.n
            )));
        }
        if grid.layout == Layout::Zonal && !self.is_zonal() {
            return Err(Error::DimensionMismatch("non-zonal function on a zonal grid".into()));
        }
        match &self.body {
            SpecBody::CoefficientList(c) => synthesize_any(c, grid),
            SpecBody::GridSamples {
                layout,
                band_limit,
                values,
            } if *layout == grid.layout && *band_limit == grid.band_limit => Ok(values.clone()),
            SpecBody::GridSamples { .. } => synthesize_any(&self.own_coefficients()?, grid),
            _ => {
                if self.is_zonal() {
                    let per = grid.ring_len();
                    let mut out = Vec::with_capacity(grid.len());
                    for &t in &grid.colat_nodes {
                        let v = self.eval(t, 0.0)?;
                        out.extend(std::iter::repeat_n(v, per));
                    }
                    Ok(out)
                } else {
                    (0..grid.len())
                        .map(|k| {
                            let (t, p) = grid.point(k);
                            self.eval(t, p)
                        })
                        .collect()
                }
            }
        }
    }

    /// Harmonic coefficients up to `band_limit` (exact projection for
    /// band-limited inputs, truncated expansion otherwise).
    pub fn coefficients(&self, band_limit: usize) -> Result<HarmonicCoefficients> {
        match &self.body {
            SpecBody::CoefficientList(c) => Ok(c.with_band_limit(band_limit)),
            SpecBody::GridSamples { .. } => Ok(self.own_coefficients()?.with_band_limit(band_limit)),
            _ => {
                let grid = SphereGrid::new(self.n, band_limit.max(1), self.layout())?;
                let c = analyze(&self.sample(&grid)?, &grid)?;
                Ok(c.with_band_limit(band_limit))
            }
        }
    }

    /// Parse a builtin name or a JSON document.
    pub fn parse(text: &str, n: Option<usize>) -> Result<Self> {
        let trimmed = text.trim_start();
        if trimmed.starts_with('{') {
            let spec: Self = serde_json::from_str(trimmed)?;
            if let Some(n) = n {
                if n != spec.n {
                    return Err(Error::DimensionMismatch(format!("spec is on S{} but n = {n}", spec.n)));
                }
            }
            return Ok(spec);
        }
        parse_builtin(text, n)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Samples as CSV with columns theta,[phi,]value on a standard grid.
    pub fn write_samples_csv<W: Write>(&self, grid: &SphereGrid, writer: W) -> Result<()> {
        let values = self.sample(grid)?;
        let mut w = csv::Writer::from_writer(writer);
        let full = grid.layout == Layout::Full;
        if full {
            w.write_record(["theta", "phi", "value"])?;
        } else {
            w.write_record(["theta", "value"])?;
        }
        for (k, v) in values.iter().enumerate() {
            let (t, p) = grid.point(k);
            let mut row = vec![format!("{t:.16e}")];
            if full {
                row.push(format!("{p:.16e}"));
            }
            row.push(format!("{v:.16e}"));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read grid samples written in the layout of `write_samples_csv`.
    pub fn read_samples_csv<R: Read>(n: usize, reader: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let headers = r.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h.trim() == name);
        let theta_col = col("theta").ok_or(Error::MissingField("theta"))?;
        let value_col = col("value").ok_or(Error::MissingField("value"))?;
        let phi_col = col("phi");
        let mut thetas = Vec::new();
        let mut values = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let num = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| bad(format!("bad number in CSV row {:?}", rec.position())))
            };
            thetas.push(num(theta_col)?);
            values.push(num(value_col)?);
        }
        let layout = if phi_col.is_some() { Layout::Full } else { Layout::Zonal };
        let band_limit = band_from_sample_count(layout, values.len())?;
        let grid = SphereGrid::new(n, band_limit, layout)?;
        for (k, t) in thetas.iter().enumerate() {
            if (t - grid.point(k).0).abs() > 1e-9 {
                return Err(Error::InvalidParameter(format!(
                    "sample {k} at theta = {t} is not on the standard grid"
                )));
            }
        }
        Self::from_samples(&grid, values)
    }
}

/// Random expansion with uniform coefficients damped like 1/(1+l).
pub fn random_band_limited<R: Rng>(
    n: usize,
    band_limit: usize,
    layout: Layout,
    rng: &mut R,
) -> Result<HarmonicCoefficients> {
    check_dimension(n)?;
    if layout == Layout::Full && n != 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let mut c = HarmonicCoefficients::zeros(n, band_limit, layout);
    for idx in 0..c.values.len() {
        let l = c.degree_at(idx) as f64;
        c.values[idx] = rng.gen_range(-1.0..1.0) / (1.0 + l);
    }
    Ok(c)
}

fn split_terms(expr: &str) -> Vec<String> {
    let mut terms = Vec::new();
    let mut cur = String::new();
    let mut prev: Option<char> = None;
    for ch in expr.chars().filter(|c| !c.is_whitespace()) {
        let is_sign = ch == '+' || ch == '-';
        let glued = matches!(prev, None | Some('^') | Some('*') | Some('e') | Some('E'));
        if is_sign && !glued {
            terms.push(std::mem::take(&mut cur));
        }
        if ch != '+' || glued {
            cur.push(ch);
        }
        prev = Some(ch);
    }
    terms.push(cur);
    terms.into_iter().filter(|t| !t.is_empty() && t != "+").collect()
}

fn parse_number(s: &str) -> Result<f64> {
    s.parse().map_err(|_| bad(format!("`{s}` is not a number")))
}

/// `c`, `c*cos`, `c*cos^k`, `cos^k`, `-cos` joined by + and −.
fn parse_zonal_expr(expr: &str) -> Result<Vec<f64>> {
    let mut powers = vec![0.0];
    for term in split_terms(expr) {
        let (coef, k) = match term.find("cos") {
            None => (parse_number(&term)?, 0),
            Some(pos) => {
                let head = term[..pos].trim_end_matches('*');
                let coef = match head {
                    "" | "+" => 1.0,
                    "-" => -1.0,
                    h => parse_number(h)?,
                };
                let tail = &term[pos + 3..];
                let k = match tail.strip_prefix('^') {
                    Some(p) => p.parse::<usize>().map_err(|_| bad(format!("bad power in `{term}`")))?,
                    None if tail.is_empty() => 1,
                    None => return Err(bad(format!("cannot parse term `{term}`"))),
                };
                (coef, k)
            }
        };
        if powers.len() <= k {
            powers.resize(k + 1, 0.0);
        }
        powers[k] += coef;
    }
    Ok(powers)
}

fn key_values(rest: &str) -> Result<Vec<(&str, &str)>> {
    rest.split(':')
        .filter(|s| !s.is_empty())
        .map(|kv| {
            kv.split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{kv}`")))
        })
        .collect()
}

/// Builtin names: `zonal:<expr>`, `constant:<c>`, `conformal:n=<n>:a=<t>`,
/// `extremizer:n=<n>:gamma=<g>:a=<t>`. An explicit `n=` must agree with `n`.
pub fn parse_builtin(text: &str, n: Option<usize>) -> Result<FunctionSpec> {
    let (kind, rest) = text
        .trim()
        .split_once(':')
        .ok_or_else(|| bad(format!("unknown function `{text}`")))?;
    let pick_n = |given: Option<usize>| -> Result<usize> {
        match (given, n) {
            (Some(a), Some(b)) if a != b => Err(Error::DimensionMismatch(format!("`{text}` is on S{a} but n = {b}"))),
            (Some(a), _) | (None, Some(a)) => Ok(a),
            (None, None) => Err(Error::MissingField("n")),
        }
    };
    match kind {
        "zonal" => FunctionSpec::zonal_formula(pick_n(None)?, parse_zonal_expr(rest)?),
        "constant" => FunctionSpec::constant(pick_n(None)?, parse_number(rest)?),
        "conformal" | "extremizer" => {
            let mut dim = None;
            let mut gamma = None;
            let mut a = None;
            for (k, v) in key_values(rest)? {
                match k {
                    "n" => dim = Some(v.parse().map_err(|_| bad(format!("bad n `{v}`")))?),
                    "gamma" => gamma = Some(parse_number(v)?),
                    "a" => a = Some(parse_number(v)?),
                    other => return Err(bad(format!("unknown key `{other}`"))),
                }
            }
            let dim = pick_n(dim)?;
            let t = a.ok_or(Error::MissingField("a"))?;
            if kind == "conformal" {
                crate::extremizers::conformal_weight(dim, t)
            } else {
                crate::extremizers::fractional_extremizer(dim, gamma.ok_or(Error::MissingField("gamma"))?, t)
            }
        }
        _ => Err(bad(format!("unknown function kind `{kind}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn zonal_expressions() {
        assert_eq!(parse_zonal_expr("0.3*cos").unwrap(), vec![0.0, 0.3]);
        assert_eq!(parse_zonal_expr("1 - 2*cos^2 + cos").unwrap(), vec![1.0, 1.0, -2.0]);
        assert_eq!(parse_zonal_expr("-cos^3").unwrap(), vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(parse_zonal_expr("1e-1*cos").unwrap(), vec![0.0, 0.1]);
        assert!(parse_zonal_expr("0.3*sin").is_err());
    }

    #[test]
    fn json_roundtrip_every_tag() {
        let g = SphereGrid::new(2, 3, Layout::Full).unwrap();
        let specs = vec![
            FunctionSpec::zonal_formula(4, vec![0.0, 0.2]).unwrap(),
            FunctionSpec::from_coefficients(
                HarmonicCoefficients::from_values(3, Layout::Zonal, vec![1.0, 2.0]).unwrap(),
            )
            .unwrap(),
            FunctionSpec::from_samples(&g, g.sample(|t, p| t.cos() * p.sin())).unwrap(),
            FunctionSpec::conformal_axis(2, 0.4, Some(0.5)).unwrap(),
            FunctionSpec::new(
                2,
                SpecBody::ConformalFamily {
                    a: vec![0.1, 0.2, 0.3],
                    power: None,
                },
            )
            .unwrap(),
        ];
        for spec in specs {
            let text = spec.to_json().unwrap();
            let back: FunctionSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(spec, back);
        }
    }

    #[test]
    fn json_shape_errors() {
        assert!(FunctionSpec::parse(r#"{"tag":"nope","n":2,"payload":{}}"#, None).is_err());
        assert!(FunctionSpec::parse(r#"{"tag":"zonal-formula","n":2,"payload":{}}"#, None).is_err());
        assert!(FunctionSpec::parse(r#"{"tag":"grid-samples","n":2,"payload":{"values":[1,2,3,4]}}"#, None).is_err());
        assert!(FunctionSpec::parse(r#"{"tag":"conformal-family","n":4,"payload":{"a":1.2}}"#, None).is_err());
        assert!(FunctionSpec::parse(r#"{"tag":"zonal-formula","n":3,"payload":{"cos_powers":[1]}}"#, Some(2)).is_err());
    }

    #[test]
    fn grid_samples_reproduce_function_elsewhere() {
        let g = SphereGrid::new(2, 6, Layout::Full).unwrap();
        let f = |t: f64, p: f64| t.cos().powi(3) + t.sin() * p.cos();
        let spec = FunctionSpec::from_samples(&g, g.sample(f)).unwrap();
        assert_relative_eq!(spec.eval(0.4, 2.2).unwrap(), f(0.4, 2.2), epsilon = 1e-13);
        let big = SphereGrid::new(2, 11, Layout::Full).unwrap();
        let resampled = spec.sample(&big).unwrap();
        for (k, v) in resampled.iter().enumerate() {
            let (t, p) = big.point(k);
            assert!((v - f(t, p)).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_roundtrip() {
        for (n, layout) in [(2, Layout::Full), (4, Layout::Zonal)] {
            let g = SphereGrid::new(n, 5, layout).unwrap();
            let spec = FunctionSpec::zonal_formula(n, vec![0.5, -0.25, 1.0]).unwrap();
            let mut buf = Vec::new();
            spec.write_samples_csv(&g, &mut buf).unwrap();
            let back = FunctionSpec::read_samples_csv(n, buf.as_slice()).unwrap();
            assert_relative_eq!(
                back.eval(1.3, 0.0).unwrap(),
                spec.eval(1.3, 0.0).unwrap(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn builtins_resolve_dimension() {
        let s = parse_builtin("zonal:0.3*cos", Some(2)).unwrap();
        assert_eq!(s.n, 2);
        assert!(parse_builtin("zonal:0.3*cos", None).is_err());
        let c = parse_builtin("conformal:n=4:a=0.3", None).unwrap();
        assert_eq!(c.n, 4);
        assert!(parse_builtin("conformal:n=4:a=0.3", Some(2)).is_err());
        let e = parse_builtin("extremizer:n=2:gamma=0.5:a=0.4", None).unwrap();
        assert!(matches!(e.body, SpecBody::ConformalFamily { power: Some(p), .. } if (p - 0.5).abs() < 1e-15));
        assert!(parse_builtin("bogus:1", Some(2)).is_err());
    }

    #[test]
    fn working_band_grows_with_family_radius() {
        let s = FunctionSpec::conformal_axis(2, 0.7, None).unwrap();
        assert_eq!(s.working_band(32), 54);
        let z = FunctionSpec::zonal_formula(2, vec![0.0, 0.3]).unwrap();
        assert_eq!(z.working_band(32), 1);
    }
}
