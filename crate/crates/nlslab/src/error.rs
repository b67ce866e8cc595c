use thiserror::Error;

/// Errors surfaced by the laboratory. The CLI maps these onto exit codes:
/// validation failures -> 2, certificate failures -> 3, runtime aborts -> 4.
#[derive(Error, Debug)]
pub enum NlsError {
    #[error("grid error: {0}")]
    Grid(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("non-finite field")]
    NonFinite,

    #[error("grid mismatch between fields")]
    GridMismatch,

    #[error("not intercritical in d={dim}: p={p}, s_c={sc}")]
    NotIntercritical { dim: u32, p: f64, sc: f64 },

    #[error("ground-state iteration not converged after {iters} iterations (last residual {residual:.3e})")]
    NotConverged { iters: usize, residual: f64 },

    #[error("trivial fixed point: iterate collapsed to zero")]
    TrivialFixedPoint,

    #[error("certificate failure: {0}")]
    Certificate(String),

    #[error("spectral structure violated: {0}")]
    SpectralStructure(String),

    #[error("coercivity violated: ratio {0:.3e} < 0")]
    CoercivityViolated(f64),

    #[error("modulation fit diverged after {0} iterations")]
    ModulationDiverged(usize),

    #[error("monotonicity violated: alpha changes sign inside the fit window")]
    SignChange,

    #[error("degenerate regression abscissae")]
    DegenerateRegression,

    #[error("exit not reached by t_max = {t_max}")]
    ExitNotReached { t_max: f64 },

    #[error("monitor overflow: {kind} drift {value:.3e} at t = {t}")]
    MonitorAbort { kind: String, value: f64, t: f64 },

    #[error("snapshot format error: {0}")]
    Snapshot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NlsError>;

impl NlsError {
    /// Process exit code for the CLI: 2 validation, 3 certificate, 4 runtime abort.
    pub fn exit_code(&self) -> i32 {
        use NlsError::*;
        match self {
            Grid(_) | Validation(_) | NotIntercritical { .. } | Snapshot(_) => 2,
            Certificate(_) | SpectralStructure(_) | CoercivityViolated(_) | NotConverged { .. }
            | TrivialFixedPoint => 3,
            _ => 4,
        }
    }
}
