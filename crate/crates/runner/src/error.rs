use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(String),
    Data(String),
    Core(bnp_core::Error),
}

impl RunError {
    pub fn io(path: &Path, e: impl fmt::Display) -> Self {
        RunError::Io(format!("{}: {e}", path.display()))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Config(_) => "config",
            RunError::Io(_) => "io",
            RunError::Data(_) => "data",
            RunError::Core(_) => "numerical",
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) | RunError::Io(m) | RunError::Data(m) => f.write_str(m),
            RunError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<bnp_core::Error> for RunError {
    fn from(e: bnp_core::Error) -> Self {
        RunError::Core(e)
    }
}
