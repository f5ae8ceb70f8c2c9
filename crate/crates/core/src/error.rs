use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A computation would exceed its configured work or event budget.
    #[error("resource budget exceeded: {what} needs {required}, budget is {budget}")]
    Budget { what: String, required: u64, budget: u64 },

    /// Event-driven simulation stopped mid-run. `partial` holds the generation
    /// counts reached when the budget ran out.
    #[error("event budget of {budget} exhausted at time {time} after {births} births")]
    EventBudget {
        budget: u64,
        births: u64,
        time: f64,
        partial: Vec<u64>,
    },

    #[error("covariance factorization failed at pivot {index}: grid points u[{i}]={ui} and u[{j}]={uj} are too close (relative pivot {pivot:e})")]
    Conditioning {
        index: usize,
        i: usize,
        j: usize,
        ui: f64,
        uj: f64,
        pivot: f64,
    },

    #[error("need at least {required} samples, got {got}")]
    TooFewSamples { required: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for the budget family of errors.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Budget { .. } | Error::EventBudget { .. })
    }
}
