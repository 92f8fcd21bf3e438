//! Exit codes: 0 success, 1 usage, 2 data error, 3 plug-in error.

use std::fmt;

use lyricist_entropy::Error;

pub const SUCCESS: u8 = 0;
pub const USAGE: u8 = 1;
pub const DATA: u8 = 2;
pub const PLUGIN: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Plugin(String),
    Lib(Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => USAGE,
            CliError::Data(_) => DATA,
            CliError::Plugin(_) => PLUGIN,
            CliError::Lib(e) if e.is_plugin() => PLUGIN,
            CliError::Lib(Error::InvalidParams(_)) => USAGE,
            CliError::Lib(_) => DATA,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Plugin(m) => f.write_str(m),
            CliError::Lib(e) => write!(f, "{e}"),
        }
    }
}
