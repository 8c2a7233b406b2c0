use penner_core::geomlab::GeomError;
use penner_core::lamsolve::LamError;
use penner_core::limits::LimitsError;
use penner_core::plumbing::PlumbingError;
use penner_core::surface::SurfaceError;
use penner_core::transfer::TransferError;
use penner_core::twistsys::TwistError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("[config] {0}")]
    Config(String),
    #[error("[input] {path}: {msg}")]
    Input { path: String, msg: String },
    #[error("[io] {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("[json] {0}")]
    Json(#[from] serde_json::Error),
    #[error("[plumbing] {0}")]
    Plumbing(#[from] PlumbingError),
    #[error("[twistsys] {0}")]
    Twist(#[from] TwistError),
    #[error("[transfer] {0}")]
    Transfer(#[from] TransferError),
    #[error("[limits] {0}")]
    Limits(#[from] LimitsError),
    #[error("[surface] {0}")]
    Surface(#[from] SurfaceError),
    #[error("[lamsolve] {0}")]
    Lam(#[from] LamError),
    #[error("[geomlab] {0}")]
    Geom(#[from] GeomError),
}

impl CliError {
    /// 2 for bad invocations and unreadable inputs, 1 for everything downstream.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input { .. } => 2,
            _ => 1,
        }
    }
}
