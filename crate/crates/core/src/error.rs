use thiserror::Error;

pub type Result<T> = std::result::Result<T, EppError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EppError {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    Shape {
        op: &'static str,
        expected: String,
        found: String,
    },

    #[error("index out of range: {0}")]
    Range(String),

    #[error("matrix is singular or too ill-conditioned (reciprocal condition {rcond:e})")]
    Singular { rcond: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("pole: {0}")]
    Pole(String),

    #[error("odd channel count: EPP transformation does not exist (N = {channels})")]
    EppNotExistent { channels: usize },

    #[error("B not complex-orthogonal (max |B^T B - I| = {defect:e})")]
    NotComplexOrthogonal { defect: f64 },

    #[error("degenerate B: Re B is singular, B + B* cannot be inverted")]
    DegenerateB,

    #[error("singular Wronskian W[u,u*] at r = {r} (reciprocal condition {rcond:e})")]
    SingularWronskian { r: f64, rcond: f64 },

    #[error("integration accuracy not met at r = {r}: step error estimate {estimate:e} > {limit:e}")]
    Accuracy { r: f64, estimate: f64, limit: f64 },

    #[error("asymptotic matching failed: {0}")]
    Matching(String),

    #[error("configuration error: {0}")]
    Config(String),
}

impl EppError {
    /// True for errors caused by the requested transformation itself rather
    /// than by numerics: these map to the configuration exit code.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            EppError::EppNotExistent { .. }
                | EppError::NotComplexOrthogonal { .. }
                | EppError::DegenerateB
                | EppError::Domain(_)
                | EppError::Config(_)
                | EppError::Shape { .. }
                | EppError::Range(_)
        )
    }
}
