//! Error types shared across the crate.
//!
//! Contract violations (a caller handed in data that breaks a documented
//! precondition, e.g. a query that is not simply moded) are kept distinct
//! from ordinary negative results such as "these atoms do not unify", which
//! are reported as `None`/verdict values, never as errors.

use thiserror::Error;

/// A documented precondition of an operation was violated by the caller.
///
/// These errors always indicate misuse, not a property of the program
/// under analysis: e.g. asking for an input-consuming unifier of an atom
/// that is not simply moded, or passing two atoms that share variables to
/// an operation that requires them renamed apart.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ContractError {
    /// The query violates the simply-moded shape requirements.
    #[error("query is not simply moded: {0}")]
    QueryNotSimplyModed(String),
    /// The clause violates the simply-moded shape requirements.
    #[error("clause is not simply moded: {0}")]
    ClauseNotSimplyModed(String),
    /// An operation that requires a simply-moded program was given one
    /// that is not.
    #[error("program is not simply moded: {0}")]
    ProgramNotSimplyModed(String),
    /// Two terms or atoms that must not share variables do share some.
    #[error("operands must be renamed apart but share variables: {0}")]
    NotRenamedApart(String),
    /// A level mapping or model file referred to something the program
    /// does not define.
    #[error("{0}")]
    Invalid(String),
}

/// Failure while running or analysing derivations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    /// A precondition violation surfaced inside the engine.
    #[error(transparent)]
    Contract(#[from] ContractError),
    /// A comparison atom was selected whose ground numeral argument lies
    /// outside the materialized fact-table range, so failure would be an
    /// artifact of the bound rather than a real negative answer.
    #[error("comparison argument {arg} of {atom} is outside the materialized range {lo}..={hi}")]
    ComparisonOutOfRange {
        /// Rendering of the offending atom.
        atom: String,
        /// Rendering of the out-of-range argument.
        arg: String,
        /// Low end of the materialized range.
        lo: i64,
        /// High end of the materialized range.
        hi: i64,
    },
}
