use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (non-positive gap,
    /// coincident particles, malformed parameters).
    #[error("domain error: {0}")]
    Domain(String),

    /// A force level no pair distance can produce.
    #[error("no solution: {0}")]
    NoSolution(String),

    /// Shooting could not bracket `x_N(x2) = L`.
    #[error("no fixed point with x1 = 0, xN = L: bracket scan ended at [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("value {value} outside tabulated range [{min}, {max}]")]
    Range { value: f64, min: f64, max: f64 },

    #[error("field flagged non-increasing but F({x_hi}) > F({x_lo})")]
    NotMonotone { x_lo: f64, x_hi: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("no convergence after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        last: Vec<f64>,
    },

    /// The integrator halved its step to the floor and still could not keep
    /// the chain ordered or the energy non-increasing.
    #[error("stiffness: step underflow at t = {time} (dt = {dt:e}, min gap {min_gap:e})")]
    Stiffness {
        time: f64,
        dt: f64,
        min_gap: f64,
        positions: Vec<f64>,
        velocities: Vec<f64>,
    },

    #[error("search cap exceeded: last N tested = {last_n}")]
    SearchCap { last_n: usize },

    /// A failure inside a sweep, tagged with the chain length it occurred at.
    #[error("at N = {n}: {source}")]
    AtN {
        n: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Wraps an error with the chain length it occurred at.
    pub fn at_n(n: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtN { n, source: Box::new(e) }
    }

    /// The innermost error, with sweep tags stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtN { source, .. } => source.root(),
            e => e,
        }
    }
}
