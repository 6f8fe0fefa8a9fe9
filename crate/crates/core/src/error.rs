use std::fmt;

use crate::feedback::ControlDecision;
use crate::infconv::EnvelopeResult;

/// Which optimization stage of the feedback missed its accuracy budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Envelope,
    ControlSelection,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Envelope => f.write_str("envelope"),
            Stage::ControlSelection => f.write_str("control-selection"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The certified envelope gap did not reach its target within the evaluation budget.
    /// The best bracket found so far is carried along for best-effort use.
    #[error("envelope budget exceeded: certified gap {achieved:e} > target {target:e}")]
    EnvelopeBudget {
        target: f64,
        achieved: f64,
        best: Box<EnvelopeResult>,
    },

    #[error("control selection budget exceeded: eta {achieved:e} > target {target:e}")]
    ControlBudget {
        target: f64,
        achieved: f64,
        best: Box<ControlDecision>,
    },

    #[error("{stage} stage failed: {source}")]
    Feedback {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("infeasible certificate: constraint `{constraint}` forces a nonpositive bound ({detail})")]
    Infeasible { constraint: String, detail: String },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn infeasible(constraint: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Infeasible {
            constraint: constraint.into(),
            detail: detail.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
