use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tolerance {epsilon:e} unreachable within rank cap {rank_cap}; achieved residual {residual:e}")]
    ToleranceUnreachable {
        epsilon: f64,
        rank_cap: usize,
        residual: f64,
    },

    /// A leaf or Schur-complement block failed to factorize.
    #[error("numerically singular block of size {size} at diagonal offset {offset}")]
    NumericalSingularity { offset: usize, size: usize },

    #[error("matrix is not positive definite; factorization failed")]
    FactorizationFailure,

    #[error("all {0} SNP columns are monomorphic; nothing to test")]
    EmptyDesign(usize),

    #[error("phenotype has zero variance")]
    DegeneratePhenotype,

    #[error("heritability is unidentifiable: GSM has no off-diagonal signal")]
    UnidentifiableHeritability,

    #[error("design matrix is rank deficient")]
    SingularDesign,

    #[error("insufficient degrees of freedom: n = {n} with {params} fixed effects")]
    InsufficientDof { n: usize, params: usize },

    #[error("invalid variance {0}")]
    InvalidVariance(f64),

    #[error("AUC undefined: {0}")]
    UndefinedAuc(&'static str),

    #[error("SNP {snp_id}: {source}")]
    Snp {
        snp_id: String,
        #[source]
        source: Box<Error>,
    },
}

/// Coarse failure classes, used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Dimension,
    Numerical,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::InvalidInput(_)
            | Error::EmptyDesign(_)
            | Error::DegeneratePhenotype
            | Error::UndefinedAuc(_) => ErrorClass::Input,
            Error::DimensionMismatch(_) | Error::InsufficientDof { .. } => ErrorClass::Dimension,
            Error::ToleranceUnreachable { .. }
            | Error::NumericalSingularity { .. }
            | Error::FactorizationFailure
            | Error::UnidentifiableHeritability
            | Error::SingularDesign
            | Error::InvalidVariance(_) => ErrorClass::Numerical,
            Error::Snp { source, .. } => source.class(),
        }
    }

    pub(crate) fn with_snp(self, snp_id: &str) -> Error {
        Error::Snp {
            snp_id: snp_id.to_string(),
            source: Box::new(self),
        }
    }
}
