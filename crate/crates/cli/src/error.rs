use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] qnd_core::Error),
}

impl CliError {
    /// Wraps a core error raised while validating configuration values.
    pub fn config(e: qnd_core::Error) -> Self {
        Self::Config(e.to_string())
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| Self::Io { path, source }
    }

    /// 1 for I/O, 2 for configuration, 3 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        use qnd_core::Error as E;
        match self {
            Self::Io { .. } => 1,
            Self::Config(_) => 2,
            Self::Core(e) => match e {
                E::Io(_) | E::Csv(_) => 1,
                E::InvalidDimension { .. }
                | E::TruncationTooSmall { .. }
                | E::InvalidParameter(_)
                | E::Cfl { .. } => 2,
                _ => 3,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(
            CliError::Core(qnd_core::Error::Cfl { cfl: 0.9 }).exit_code(),
            2
        );
        assert_eq!(
            CliError::Core(qnd_core::Error::Tolerance("drift".into())).exit_code(),
            3
        );
        assert_eq!(
            CliError::Core(qnd_core::Error::Domain("edge".into())).exit_code(),
            3
        );
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(CliError::io("a.json")(io).exit_code(), 1);
    }
}
