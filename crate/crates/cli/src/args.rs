//! Flags, the JSON config file, and how the two are merged.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "fracgjms",
    version,
    about = "Fractional GJMS operators, sharp inequalities and dimensional continuation on spheres"
)]
pub struct Cli {
    /// JSON file whose keys mirror the long flags; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Write the table here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum)]
    pub out: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues of P_2γ next to the Laplacian and Paneitz energy per degree.
    Spectrum(SpectrumArgs),
    /// Sharp fractional Sobolev deficit of a function.
    Sobolev(SobolevArgs),
    /// Onofri deficit on S² or its Paneitz analogue on S⁴.
    Onofri(OnofriArgs),
    /// Adapted defining function on hyperbolic space.
    Defining(DefiningArgs),
    /// A and B along a sequence of orders approaching n/2.
    Continuation(ContinuationArgs),
    /// Run the acceptance suite.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Args)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Largest degree.
    #[arg(long = "L")]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SobolevArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Builtin name, JSON FunctionSpec, or a path to a .json/.csv file.
    #[arg(long)]
    pub f: Option<String>,
    /// Base band limit for functions that are not band-limited.
    #[arg(long = "L")]
    pub l: Option<usize>,
    /// Accepted negative deficit, relative to the deficit's scale.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OnofriArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DefiningArgs {
    #[arg(long)]
    pub n: Option<usize>,
    /// s in ((n+1)/2, n); alternatively give --gamma and s = n/2 + γ.
    #[arg(long, conflicts_with = "gamma")]
    pub s: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Number of radial nodes.
    #[arg(long)]
    pub points: Option<usize>,
    /// Distance of the last node from r = 1.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Also write the bound report as JSON to this path.
    #[arg(long)]
    pub bounds: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContinuationArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub omega: Option<String>,
    /// Comma-separated list, or start:end:count[:geometric].
    #[arg(long, allow_hyphen_values = true)]
    pub gammas: Option<String>,
    #[arg(long = "L")]
    pub l: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Multiplier on every tolerance (0.01 tightens 100×).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only these criteria (comma-separated ids).
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<u8>>,
}

/// Orders given in a config file: a list of numbers or the flag syntax.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GammaSource {
    List(Vec<f64>),
    Text(String),
}

/// Contents of `--config`. Every key is optional and named like its flag.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub s: Option<f64>,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub f: Option<String>,
    pub omega: Option<serde_json::Value>,
    pub gammas: Option<GammaSource>,
    pub points: Option<usize>,
    pub delta: Option<f64>,
    pub bounds: Option<PathBuf>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub criteria: Option<Vec<u8>>,
    pub out: Option<Format>,
    pub output: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// `omega` may be a string (builtin or path) or an inline FunctionSpec object.
    pub fn omega_text(&self) -> Option<String> {
        self.omega.as_ref().map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }
}

/// First of flag and config value, else an error naming the flag.
pub fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, CliError> {
    flag.or(file)
        .ok_or_else(|| CliError::Config(format!("--{name} is required")))
}

/// Parses `a,b,c` or `start:end:count[:geometric]`. Geometric spacing is
/// applied to the distance n/2 − γ, so the points crowd toward the
/// critical order.
pub fn parse_gammas(text: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let bad = |msg: String| CliError::Config(format!("--gammas `{text}`: {msg}"));
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| bad(format!("`{s}` is not a number")))
    };
    let parts: Vec<&str> = text.split(':').collect();
    let gammas = match parts.len() {
        1 => text.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        3 | 4 => {
            let (a, b) = (num(parts[0])?, num(parts[1])?);
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| bad("count must be a positive integer".into()))?;
            let geometric = match parts.get(3).map(|s| s.trim()) {
                None | Some("linear") => false,
                Some("geometric") => true,
                Some(other) => return Err(bad(format!("unknown spacing `{other}`"))),
            };
            if count < 2 {
                return Err(bad("count must be at least 2".into()));
            }
            let t = |i: usize| i as f64 / (count - 1) as f64;
            if geometric {
                let half = n as f64 / 2.0;
                let (da, db) = (half - a, half - b);
                if !(da > 0.0 && db > 0.0) {
                    return Err(bad(format!("geometric spacing needs both ends below n/2 = {half}")));
                }
                (0..count).map(|i| half - da * (db / da).powf(t(i))).collect()
            } else {
                (0..count).map(|i| a + (b - a) * t(i)).collect()
            }
        }
        _ => return Err(bad("expected a list or start:end:count[:geometric]".into())),
    };
    if gammas.is_empty() || gammas.iter().any(|g| !g.is_finite()) {
        return Err(bad("no usable orders".into()));
    }
    if gammas.windows(2).any(|w| w[1] <= w[0] || w[1].is_nan()) {
        return Err(bad("orders must increase strictly".into()));
    }
    Ok(gammas)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_lists() {
        assert_eq!(parse_gammas("0.9,0.99", 2).unwrap(), vec![0.9, 0.99]);
        let lin = parse_gammas("0.5:0.9:5", 2).unwrap();
        assert_eq!(lin.len(), 5);
        assert!((lin[1] - 0.6).abs() < 1e-15);
        let geo = parse_gammas("0.9:0.999:6:geometric", 2).unwrap();
        assert_eq!(geo.len(), 6);
        assert!((geo[0] - 0.9).abs() < 1e-15 && (geo[5] - 0.999).abs() < 1e-14);
        // distances to 1 are 0.1, 0.0398, 0.0158, ...
        assert!(((1.0 - geo[1]) / (1.0 - geo[0]) - 10f64.powf(-0.4)).abs() < 1e-12);
    }

    #[test]
    fn bad_gamma_lists() {
        for t in [
            "",
            "a,b",
            "0.9:0.8:3",
            "0.9:1.1:3:geometric",
            "0.1:0.2:1",
            "0.1:0.2:3:cubic",
            "1:2:3:4:5",
        ] {
            assert!(parse_gammas(t, 2).is_err(), "{t}");
        }
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(serde_json::from_str::<FileConfig>(r#"{"n": 2, "bogus": 1}"#).is_err());
        let c: FileConfig =
            serde_json::from_str(r#"{"n": 4, "L": 16, "gammas": [1.8, 1.9], "omega": {"n": 4}}"#).unwrap();
        assert_eq!(c.l, Some(16));
        assert!(matches!(c.gammas, Some(GammaSource::List(_))));
        assert_eq!(c.omega_text().unwrap(), r#"{"n":4}"#);
    }
}
