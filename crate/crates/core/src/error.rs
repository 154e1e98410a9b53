use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// A missing `(age, year)` cell of a surface grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub age: u32,
    pub year: i32,
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(age {}, year {})", self.age, self.year)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },

    #[error("line {line}: rate must be strictly positive and finite, got {value}")]
    NonPositiveRate { line: u64, value: f64 },

    #[error("line {line}: duplicate cell {cell}")]
    DuplicateCell { line: u64, cell: Cell },

    #[error("incomplete grid: {missing_count} missing cell(s), first: {}", format_cells(.missing))]
    IncompleteGrid {
        missing_count: u64,
        missing: Vec<Cell>,
    },

    #[error("line {line}: annuity must be strictly positive, got {value}")]
    NonPositiveAnnuity { line: u64, value: f64 },

    #[error("line {line}: duplicate id {id:?}")]
    DuplicateId { line: u64, id: String },

    #[error("cohort diagonal leaves the surface at {cell}")]
    OutOfSurface { cell: Cell },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerically degenerate: {0}")]
    Degenerate(String),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_cells(cells: &[Cell]) -> String {
    cells
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
