use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Core(#[from] fracgjms::Error),
}

impl CliError {
    /// 2 for bad input or I/O, 3 when a numerical method did not converge.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(fracgjms::Error::NonConvergence("x".into())).exit_code(),
            3
        );
        assert_eq!(
            CliError::Core(fracgjms::Error::DegenerateFit("x".into())).exit_code(),
            3
        );
        assert_eq!(CliError::Core(fracgjms::Error::ZeroFunction).exit_code(), 2);
    }
}
