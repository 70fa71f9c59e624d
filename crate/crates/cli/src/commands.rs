//! One function per subcommand. Each writes its table and returns the list
//! of failed invariant checks, empty when everything held.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use fracgjms::acceptance::{run_criterion, AcceptanceConfig, AcceptanceReport, CRITERIA};
use fracgjms::adapted_defining_function::{verify_lemma_bounds, DefiningFunctionSolution, RadialGrid, DEFAULT_DELTA};
use fracgjms::branson_continuation::{sweep, ContinuationRecord};
use fracgjms::conformal_operators::{multiplier_p2gamma, paneitz_energy_multiplier};
use fracgjms::inequality_functionals::{
    onofri_deficit_s2, paneitz_onofri_deficit_s4, sobolev_deficit, DeficitReport, Resolution,
};
use fracgjms::sphere_spectral::{laplacian_eigenvalue, FunctionSpec};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    parse_gammas, required, ContinuationArgs, DefiningArgs, FileConfig, Format, GammaSource, OnofriArgs, SobolevArgs,
    SpectrumArgs, VerifyArgs,
};
use crate::error::CliError;

pub type Failures = Vec<String>;

const DEFAULT_POINTS: usize = 2001;
const DEFAULT_DEFICIT_TOL: f64 = 1e-8;

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_csv<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// A builtin name, an inline JSON spec, or a path to a .json or .csv file.
pub fn load_function(text: &str, n: usize) -> Result<FunctionSpec, CliError> {
    let path = Path::new(text);
    if path.is_file() {
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            return Ok(FunctionSpec::read_samples_csv(n, File::open(path)?)?);
        }
        return Ok(FunctionSpec::parse(&std::fs::read_to_string(path)?, Some(n))?);
    }
    Ok(FunctionSpec::parse(text, Some(n))?)
}

fn resolution(flag: Option<usize>, file: &FileConfig) -> Resolution {
    flag.or(file.l).map_or_else(Resolution::default, Resolution::new)
}

pub fn spectrum<W: Write>(a: &SpectrumArgs, file: &FileConfig, format: Format, out: W) -> Result<Failures, CliError> {
    let n = required(a.n, file.n, "n")?;
    let gamma = required(a.gamma, file.gamma, "gamma")?;
    let big_l = required(a.l, file.l, "L")?;
    #[derive(Serialize)]
    struct Row {
        l: usize,
        mu_l: f64,
        laplacian_eig: f64,
        paneitz_energy: f64,
    }
    let rows = (0..=big_l)
        .map(|l| {
            Ok(Row {
                l,
                mu_l: multiplier_p2gamma(n, gamma, l)?,
                laplacian_eig: laplacian_eigenvalue(n, l),
                paneitz_energy: paneitz_energy_multiplier(l),
            })
        })
        .collect::<Result<Vec<_>, fracgjms::Error>>()?;
    let failures = rows
        .iter()
        .filter(|r| !(r.mu_l >= 0.0 && r.mu_l.is_finite()))
        .map(|r| format!("mu_{} = {} is not a nonnegative number", r.l, r.mu_l))
        .collect();
    match format {
        Format::Json => write_json(out, &rows)?,
        Format::Csv => write_csv(
            out,
            &["l", "mu_l", "laplacian_eig", "paneitz_energy"],
            &rows
                .iter()
                .map(|r| {
                    vec![
                        r.l.to_string(),
                        num(r.mu_l),
                        num(r.laplacian_eig),
                        num(r.paneitz_energy),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    }
    Ok(failures)
}

fn emit_deficit<W: Write>(report: &DeficitReport, tol: f64, format: Format, out: W) -> Result<Failures, CliError> {
    match format {
        Format::Json => write_json(out, report)?,
        Format::Csv => write_csv(out, &DeficitReport::CSV_HEADER, &[report.csv_row()])?,
    }
    if report.deficit < -tol * report.scale {
        return Ok(vec![format!(
            "{} deficit {:e} is below −{tol:e}·{:e}",
            report.name, report.deficit, report.scale
        )]);
    }
    Ok(Vec::new())
}

pub fn sobolev<W: Write>(a: &SobolevArgs, file: &FileConfig, format: Format, out: W) -> Result<Failures, CliError> {
    let n = required(a.n, file.n, "n")?;
    let gamma = required(a.gamma, file.gamma, "gamma")?;
    let f = load_function(&required(a.f.clone(), file.f.clone(), "f")?, n)?;
    let tol = a.tol.or(file.tol).unwrap_or(DEFAULT_DEFICIT_TOL);
    let report = sobolev_deficit(&f, n, gamma, &resolution(a.l, file))?;
    emit_deficit(&report, tol, format, out)
}

pub fn onofri<W: Write>(a: &OnofriArgs, file: &FileConfig, format: Format, out: W) -> Result<Failures, CliError> {
    let n = required(a.n, file.n, "n")?;
    let omega = load_function(&required(a.omega.clone(), file.omega_text(), "omega")?, n)?;
    let tol = a.tol.or(file.tol).unwrap_or(DEFAULT_DEFICIT_TOL);
    let res = resolution(a.l, file);
    let report = match n {
        2 => onofri_deficit_s2(&omega, &res)?,
        4 => paneitz_onofri_deficit_s4(&omega, &res)?,
        _ => return Err(CliError::Config(format!("onofri needs n = 2 or n = 4, got {n}"))),
    };
    emit_deficit(&report, tol, format, out)
}

pub fn defining<W: Write>(a: &DefiningArgs, file: &FileConfig, format: Format, out: W) -> Result<Failures, CliError> {
    let n = required(a.n, file.n, "n")?;
    let s = match (a.s, a.gamma) {
        (Some(s), _) => s,
        (None, Some(g)) => n as f64 / 2.0 + g,
        (None, None) => match (file.s, file.gamma) {
            (Some(s), _) => s,
            (None, Some(g)) => n as f64 / 2.0 + g,
            (None, None) => return Err(CliError::Config("--s or --gamma is required".into())),
        },
    };
    let points = a.points.or(file.points).unwrap_or(DEFAULT_POINTS);
    let delta = a.delta.or(file.delta).unwrap_or(DEFAULT_DELTA);
    let grid = RadialGrid::with_total(points, delta)?;
    let sol = DefiningFunctionSolution::compute(n, s, &grid)?.fill_curvature()?;
    let bounds = verify_lemma_bounds(&sol)?;
    if let Some(path) = a.bounds.as_ref().or(file.bounds.as_ref()) {
        write_json(File::create(path)?, &bounds)?;
    }
    let rows = sol.csv_rows()?;
    match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                columns: [&'static str; 11],
                rows: &'a [[f64; 11]],
                bounds: &'a fracgjms::adapted_defining_function::BoundReport,
            }
            write_json(
                out,
                &Doc {
                    columns: DefiningFunctionSolution::CSV_HEADER,
                    rows: &rows,
                    bounds: &bounds,
                },
            )?
        }
        Format::Csv => write_csv(
            out,
            &DefiningFunctionSolution::CSV_HEADER,
            &rows
                .iter()
                .map(|r| r.iter().map(|&x| num(x)).collect())
                .collect::<Vec<_>>(),
        )?,
    }
    Ok(bounds
        .checks
        .iter()
        .filter(|c| c.applicable && c.violated)
        .map(|c| format!("bound `{}` violated (margin {:e})", c.name, c.margin))
        .chain(
            (bounds.phi_monotone_violation > fracgjms::adapted_defining_function::PHI_TOL)
                .then(|| format!("monotone quantity increases by {:e}", bounds.phi_monotone_violation)),
        )
        .collect())
}

pub fn continuation<W: Write>(
    a: &ContinuationArgs,
    file: &FileConfig,
    format: Format,
    out: W,
) -> Result<Failures, CliError> {
    let n = required(a.n, file.n, "n")?;
    let omega = load_function(&required(a.omega.clone(), file.omega_text(), "omega")?, n)?;
    let gammas = match (&a.gammas, &file.gammas) {
        (Some(t), _) | (None, Some(GammaSource::Text(t))) => parse_gammas(t, n)?,
        (None, Some(GammaSource::List(v))) => {
            parse_gammas(&v.iter().map(|g| g.to_string()).collect::<Vec<_>>().join(","), n)?
        }
        (None, None) => return Err(CliError::Config("--gammas is required".into())),
    };
    let records = sweep(n, &omega, &gammas, &resolution(a.l, file))?;
    match format {
        Format::Json => write_json(out, &records)?,
        Format::Csv => write_csv(
            out,
            &ContinuationRecord::CSV_HEADER,
            &records
                .iter()
                .map(|r| r.csv_values().iter().map(|&x| num(x)).collect())
                .collect::<Vec<_>>(),
        )?,
    }
    Ok(records
        .iter()
        .filter(|r| !r.chain_holds())
        .map(|r| format!("A > B at gamma = {}: A = {:e}, B = {:e}", r.gamma, r.a, r.b))
        .collect())
}

pub fn verify_all<W: Write>(a: &VerifyArgs, file: &FileConfig, format: Format, out: W) -> Result<Failures, CliError> {
    let defaults = AcceptanceConfig::default();
    let cfg = AcceptanceConfig {
        tol_scale: a.tol.or(file.tol).unwrap_or(defaults.tol_scale),
        band_limit: a.l.or(file.l).unwrap_or(defaults.band_limit),
        seed: a.seed.or(file.seed).unwrap_or(defaults.seed),
    };
    if !(cfg.tol_scale > 0.0 && cfg.tol_scale.is_finite()) {
        return Err(CliError::Config(format!(
            "--tol must be positive, got {}",
            cfg.tol_scale
        )));
    }
    if cfg.band_limit == 0 {
        return Err(CliError::Config("--L must be positive".into()));
    }
    let ids: Vec<u8> = match a.criteria.clone().or_else(|| file.criteria.clone()) {
        Some(ids) => ids,
        None => CRITERIA.iter().map(|c| c.0).collect(),
    };
    if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|c| c.0 == **id)) {
        return Err(CliError::Config(format!("unknown criterion {bad}")));
    }
    let criteria = ids
        .par_iter()
        .map(|&id| run_criterion(id, &cfg).expect("checked id"))
        .collect();
    let report = AcceptanceReport { config: cfg, criteria };
    let mut failures = Vec::new();
    for c in &report.criteria {
        eprintln!("{}", c.summary_line());
        if let Some(e) = &c.error {
            failures.push(format!("criterion {} could not run: {e}", c.id));
        }
        for k in c.failures() {
            let mut note = String::new();
            if k.expected_failure() {
                note.push_str(" [documented as unattainable]");
            }
            if c.resolution_sensitive && cfg.band_limit < defaults.band_limit {
                note.push_str(" [resolution-sensitive]");
            }
            failures.push(format!(
                "criterion {}: {} = {:e} exceeds {:e}{note}",
                c.id, k.name, k.value, k.limit
            ));
        }
    }
    match format {
        Format::Json => write_json(out, &report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .criteria
                .iter()
                .flat_map(|c| {
                    c.checks.iter().map(move |k| {
                        vec![
                            c.id.to_string(),
                            k.name.clone(),
                            num(k.value),
                            num(k.limit),
                            k.passed.to_string(),
                            k.expected_failure().to_string(),
                        ]
                    })
                })
                .collect();
            write_csv(
                out,
                &["criterion", "check", "value", "limit", "passed", "expected_failure"],
                &rows,
            )?
        }
    }
    Ok(failures)
}
