use alloc::string::String;

/// Errors raised by the discretization and solver layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("{kind} id {id} out of range (count {count})")]
    OutOfRange {
        kind: &'static str,
        id: usize,
        count: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("non-positive weight {value} at element {element}")]
    NonPositiveWeight { element: usize, value: f64 },
    #[error("singular interior block on element {element}")]
    SingularInteriorBlock { element: usize },
    #[error("singular matrix: {0}")]
    SingularMatrix(String),
    #[error("linear solve failed: {0}")]
    SolveFailed(String),
    #[error("step {step} (t = {time}): {source}")]
    Step {
        step: usize,
        time: f64,
        #[source]
        source: alloc::boxed::Box<Error>,
    },
    #[error("empty region: {0}")]
    EmptyRegion(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
