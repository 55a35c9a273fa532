use std::fmt;

/// Why a run stopped before the final time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Ok,
    PlateTouchesBoundary,
    LagrangianDegenerate,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Ok => "ok",
            Verdict::PlateTouchesBoundary => "plate_touches_boundary",
            Verdict::LagrangianDegenerate => "lagrangian_degenerate",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum FpsiError {
    #[error("configuration error: `{key}`: {constraint}")]
    Config { key: String, constraint: String },

    #[error("mesh incompatibility: {0}")]
    MeshIncompatible(String),

    #[error("point ({x}, {y}) outside {domain}")]
    Domain { domain: &'static str, x: f64, y: f64 },

    #[error("degenerate geometry ({cause}) at ({x}, {y}): {detail}")]
    Degeneracy {
        cause: Verdict,
        x: f64,
        y: f64,
        detail: String,
    },

    #[error("coupling violation: {0}")]
    CouplingViolation(String),

    #[error("linear solver failure: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl FpsiError {
    pub fn config(key: impl Into<String>, constraint: impl Into<String>) -> Self {
        FpsiError::Config {
            key: key.into(),
            constraint: constraint.into(),
        }
    }

    pub fn degenerate(cause: Verdict, p: [f64; 2], detail: impl Into<String>) -> Self {
        FpsiError::Degeneracy {
            cause,
            x: p[0],
            y: p[1],
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, FpsiError>;
