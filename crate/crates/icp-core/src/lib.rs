//! A toolkit for moded logic programs executed under dynamic scheduling.
//!
//! The crate implements resolution in which the selected atom's input
//! arguments are never instantiated by the unifier (*input-consuming*
//! steps), together with the static analyses, the fixpoint semantics, and
//! the termination checks that make that execution model predictable.
//!
//! * [`term`], [`subst`], [`mode`] — first-order terms, substitutions with
//!   occur-check unification, and atoms whose argument positions are split
//!   into inputs and outputs by a mode declaration.
//! * [`simply_local`] — simply-moded shape checking, the decomposition of
//!   substitutions into head-input and per-body-atom layers, and the
//!   two-part construction of input-consuming unifiers.
//! * [`frontend`] — parser and pretty-printer for `.icp` program files
//!   (clauses plus `mode`, `delay`, and `level` declarations) and queries.
//! * [`analysis`] — static checks: simply-modedness, input-consistency,
//!   simple delay declarations, the head-shape conditions under which
//!   delay-respecting and input-consuming execution coincide, and the
//!   predicate dependency graph.
//! * [`engine`] — derivation enumeration and derivation-tree construction
//!   under selectable scheduling rules, with deadlock detection, traces,
//!   and success/partial answer collection.
//! * [`semantics`] — the bottom-up consequence operator restricted to
//!   simply-local instantiations, bounded model computation for complete
//!   and partial derivations, and witness search used to cross-validate
//!   the engine.
//! * [`termination`] — moded level mappings, the acceptability check that
//!   certifies input termination at desk scale, the canonical node-count
//!   mapping, and an empirical termination probe.
//! * [`bench`] — a small harness that reproduces classification tables
//!   (simply-moded / input-consistent / delay-equivalence verdicts) over a
//!   bundled corpus.
//!
//! All values are immutable after construction and all operations are pure
//! functions; the only mutable helper is the explicit fresh-variable
//! counter [`term::VarGen`], which callers thread through a run.

pub mod analysis;
pub mod bench;
pub mod engine;
pub mod error;
pub mod frontend;
pub mod mode;
pub mod semantics;
pub mod simply_local;
pub mod subst;
pub mod term;
pub mod termination;

pub use error::{ContractError, EngineError};
pub use mode::{Clause, ModedAtom, Moding, Query};
pub use subst::Subst;
pub use term::{Functor, Term, VarGen, VarId};
