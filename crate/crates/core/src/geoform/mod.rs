//! Canonical problem representation and the dialect filters around it.
//!
//! A [`GeoProblem`] is a construction (free points plus derived steps) and a
//! single conjecture over its points. It can be read from the GCLC-like
//! construction language or the `.gf.json` exchange document, and emitted to
//! the construction language, the exchange document, or a GeoGebra command
//! script.

mod emit;
mod exchange;
mod model;
mod parser;

use thiserror::Error;

pub use emit::{emit_gclc, emit_ggb_script};
pub use exchange::{read_exchange, read_exchange_str, write_exchange, write_exchange_string};
pub use model::{
    Conjecture, Construction, Coord, FreePoint, GeoProblem, Name, ObjectKind, Pos, Predicate,
    ProblemId, Step, StepOp,
};
pub use parser::{parse_gclc, parse_gclc_bytes, parse_gclc_with_id, DEFAULT_PROBLEM_ID};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GeoError {
    #[error("{pos}: unexpected character {found:?}")]
    Lex { pos: Pos, found: String },
    #[error("{pos}: expected {expected}, found {found}")]
    Syntax { pos: Pos, expected: String, found: String },
    #[error("{}undefined name `{name}`", at(.pos))]
    UndefinedName { name: String, pos: Option<Pos> },
    #[error("{}`{name}` is already defined", at(.pos))]
    Redefinition { name: String, pos: Option<Pos> },
    #[error("{}`{what}` takes {expected} arguments, found {found}", at(.pos))]
    Arity {
        what: String,
        expected: usize,
        found: usize,
        pos: Option<Pos>,
    },
    #[error("{}`{name}` is a {found}, expected a {expected}", at(.pos))]
    KindMismatch {
        name: String,
        expected: ObjectKind,
        found: ObjectKind,
        pos: Option<Pos>,
    },
    #[error("missing conjecture block `prove {{ ... }}`")]
    MissingConjecture,
    #[error("construction has no free point")]
    NoFreePoints,
    #[error("invalid identifier {0:?}")]
    InvalidName(String),
    #[error("invalid decimal coordinate {0:?}")]
    InvalidCoordinate(String),
    #[error("invalid problem id {0:?} (expected GEO followed by four digits)")]
    InvalidId(String),
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

fn at(pos: &Option<Pos>) -> String {
    pos.map(|p| format!("{p}: ")).unwrap_or_default()
}

impl GeoError {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        GeoError::Schema { path: path.into(), message: message.into() }
    }

    /// Source position, when the error came from the text parser.
    pub fn pos(&self) -> Option<Pos> {
        match self {
            GeoError::Lex { pos, .. } | GeoError::Syntax { pos, .. } => Some(*pos),
            GeoError::UndefinedName { pos, .. }
            | GeoError::Redefinition { pos, .. }
            | GeoError::Arity { pos, .. }
            | GeoError::KindMismatch { pos, .. } => *pos,
            _ => None,
        }
    }
}

/// Input dialects a prover may consume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dialect {
    Gclc,
    Exchange,
    Ggb,
}

impl Dialect {
    pub fn default_extension(self) -> &'static str {
        match self {
            Dialect::Gclc => "gcl",
            Dialect::Exchange => "gf.json",
            Dialect::Ggb => "ggb",
        }
    }

    pub fn emit(self, p: &GeoProblem) -> String {
        match self {
            Dialect::Gclc => emit_gclc(p),
            Dialect::Exchange => write_exchange_string(p),
            Dialect::Ggb => emit_ggb_script(p),
        }
    }
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gclc" => Ok(Dialect::Gclc),
            "exchange" => Ok(Dialect::Exchange),
            "ggb" => Ok(Dialect::Ggb),
            other => Err(format!("unknown dialect `{other}` (expected gclc, exchange or ggb)")),
        }
    }
}
