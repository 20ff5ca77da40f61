use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("divergent PSD at DC (flicker spectrum evaluated at ω = 0)")]
    DivergentPsdAtDc,

    #[error("ω = {omega:.6e} rad/s is outside the tabulated PSD range [{min:.6e}, {max:.6e}]")]
    OutOfTableRange { omega: f64, min: f64, max: f64 },

    #[error("transfer function is divergent at DC (ξ = 0)")]
    DivergentAtDc,

    #[error("non-integrable at DC: flicker spectrum requires xi_min > 0")]
    NonIntegrableAtDc,

    #[error("non-removable singularity of the transfer function at ξ = {xi}")]
    NonRemovableSingularity { xi: f64 },

    #[error(
        "quadrature did not reach rel_tol {rel_tol:.1e}: estimate {estimate:.6e} ± {error:.3e}, \
         worst subinterval [{worst_a:.6e}, {worst_b:.6e}]"
    )]
    QuadratureNotConverged {
        rel_tol: f64,
        estimate: f64,
        error: f64,
        worst_a: f64,
        worst_b: f64,
    },

    #[error(
        "under-resolved grid: ω = {omega:.6e} rad/s has only {samples_per_period:.2} samples per period \
         (need ≥ {required})"
    )]
    Aliasing {
        omega: f64,
        samples_per_period: f64,
        required: usize,
    },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("table error: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
