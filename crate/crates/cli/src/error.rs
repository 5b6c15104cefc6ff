use thiserror::Error;

pub type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(#[from] spinbath::Error),
}

impl CliError {
    /// 2 for configuration, 3 for resources, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use spinbath::ErrorKind;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Model(e) => match e.kind() {
                ErrorKind::Config => 2,
                ErrorKind::Resource => 3,
                ErrorKind::Numerical => 4,
            },
        }
    }

    /// Short machine-readable category.
    pub fn reason(&self) -> &'static str {
        match self.exit_code() {
            2 => "config",
            3 => "resource",
            _ => "numerical",
        }
    }
}
