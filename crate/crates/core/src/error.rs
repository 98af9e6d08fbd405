use thiserror::Error;

/// Machine-readable category of a model validation failure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelErrorCode {
    /// Document structure is wrong: missing fields, wrong shapes.
    Schema,
    /// A Hamiltonian or interaction matrix is not Hermitian.
    NotHermitian,
    /// A channel refers to a level or control component that does not exist.
    BadIndex,
    /// A physical parameter is out of range (nonpositive rate, repeated energy, ...).
    Physics,
}

impl ModelErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelErrorCode::Schema => "SCHEMA_INVALID",
            ModelErrorCode::NotHermitian => "NOT_HERMITIAN",
            ModelErrorCode::BadIndex => "BAD_INDEX",
            ModelErrorCode::Physics => "PHYSICS_INVALID",
        }
    }
}

/// A model validation failure naming the offending field.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} at `{field}`: {message}", code.as_str())]
pub struct ModelError {
    pub code: ModelErrorCode,
    pub field: String,
    pub message: String,
}

impl ModelError {
    pub fn new(code: ModelErrorCode, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self { code, field: field.into(), message: message.into() }
    }

    /// Prefix the field path, e.g. `gamma` becomes `model.gamma`.
    pub fn within(mut self, parent: &str) -> Self {
        self.field = if self.field.is_empty() { parent.to_string() } else { format!("{parent}.{}", self.field) };
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite entries in {0}")]
    NonFinite(&'static str),
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
