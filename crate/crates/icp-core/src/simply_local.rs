//! Simply-local substitutions and the structured unifier for
//! input-consuming resolution.
//!
//! A substitution is *simply local* with respect to a clause when it
//! factors into one stage per program point: stage 0 binds only the
//! clause head's input variables, stage `i` binds only the output
//! variables of body atom `i`, and each stage draws the variables in its
//! images either from the instantiated input terms of its own atom or
//! from brand-new variables never seen before. For a query the head
//! stage is forced empty. This factoring captures "data flows strictly
//! from inputs to outputs, one atom at a time".
//!
//! Because clauses and queries here are simply moded, the factoring is
//! unique when it exists: each stage must be the restriction of the
//! whole substitution to that stage's variables. [`check_simply_local_clause`]
//! and [`check_simply_local_query`] recover it or report the first
//! obstruction, naming the offending variable so callers can decide
//! whether a renaming would repair it.
//!
//! [`decompose_simply_local_mgu`] builds the unifier used by
//! input-consuming resolution steps directly in factored form: a head
//! part that instantiates nothing of the selected atom's inputs, and an
//! atom part that only writes the selected atom's output variables.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::ContractError;
use crate::mode::{Clause, ModedAtom, Query};
use crate::subst::{match_term_seqs, Subst};
use crate::term::{Term, VarId};

/// The staged factoring of a simply-local substitution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplyLocalWitness {
    /// One substitution per stage: index 0 binds head input variables
    /// (always empty for queries), index `i >= 1` binds the output
    /// variables of body atom `i`. Composing them in order yields the
    /// original substitution.
    pub stages: Vec<Subst>,
    /// The variables each stage introduces fresh — variables in its
    /// images that do not come from the stage's instantiated inputs.
    pub fresh: Vec<BTreeSet<VarId>>,
}

/// Why a substitution fails to be simply local.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SimplyLocalViolation {
    /// The substitution binds a variable that no stage may bind.
    DomainOutside {
        /// The variable bound outside every stage's domain.
        var: VarId,
    },
    /// A stage's image uses a variable that neither flows in through
    /// the stage's instantiated inputs nor qualifies as fresh.
    RangeNotAllowed {
        /// Stage index: 0 for the head stage, `i` for body atom `i`.
        stage: usize,
        /// The offending variable.
        var: VarId,
    },
    /// The stage restrictions do not compose back to the substitution.
    CompositionMismatch,
}

impl fmt::Display for SimplyLocalViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplyLocalViolation::DomainOutside { var } => {
                write!(f, "binds {} which no stage may bind", Term::var(*var))
            }
            SimplyLocalViolation::RangeNotAllowed { stage, var } => write!(
                f,
                "stage {stage} image uses {} which neither flows in through inputs nor is fresh",
                Term::var(*var)
            ),
            SimplyLocalViolation::CompositionMismatch => {
                f.write_str("stage restrictions do not compose back to the substitution")
            }
        }
    }
}

/// Checks whether `theta` is simply local with respect to `clause`,
/// returning the staged factoring.
///
/// # Examples
///
/// ```
/// use icp_core::simply_local::check_simply_local_clause;
/// use icp_core::{Clause, ModedAtom, Moding, Subst, Term};
///
/// // append([H|Xs],Ys,[H|Zs]) :- append(Xs,Ys,Zs).  mode append(in,in,out)
/// let m = [Moding::In, Moding::In, Moding::Out];
/// let (h, xs, ys, zs) = (Term::var(0), Term::var(1), Term::var(2), Term::var(3));
/// let clause = Clause::new(
///     ModedAtom::new(
///         "append".into(),
///         vec![Term::cons(h.clone(), xs.clone()), ys.clone(), Term::cons(h, zs.clone())],
///         m,
///     ),
///     vec![ModedAtom::new("append".into(), vec![xs, ys, zs], m)],
/// );
/// // {H/V, Xs/[], Ys/[W], Zs/[W]} — W reaches stage 1 through Ys.
/// let theta = Subst::from_bindings([
///     (0, Term::var(10)),
///     (1, Term::nil()),
///     (2, Term::list([Term::var(11)])),
///     (3, Term::list([Term::var(11)])),
/// ]);
/// let w = check_simply_local_clause(&theta, &clause).unwrap();
/// assert_eq!(w.stages.len(), 2);
/// assert!(w.fresh[1].is_empty());
/// ```
pub fn check_simply_local_clause(
    theta: &Subst,
    clause: &Clause,
) -> Result<SimplyLocalWitness, SimplyLocalViolation> {
    let mut domains = vec![clause.head.input_vars()];
    let mut inputs = vec![Vec::new()];
    for atom in &clause.body {
        domains.push(atom.output_vars());
        inputs.push(atom.inputs().into_iter().cloned().collect());
    }
    check_stages(theta, &clause.var_set(), &domains, &inputs)
}

/// Checks whether `theta` is simply local with respect to `query`: the
/// clause-side conditions with an empty head stage, so query input
/// variables can never be bound.
pub fn check_simply_local_query(
    theta: &Subst,
    query: &Query,
) -> Result<SimplyLocalWitness, SimplyLocalViolation> {
    let mut domains = vec![BTreeSet::new()];
    let mut inputs = vec![Vec::new()];
    for atom in &query.atoms {
        domains.push(atom.output_vars());
        inputs.push(atom.inputs().into_iter().cloned().collect());
    }
    check_stages(theta, &query.var_set(), &domains, &inputs)
}

/// Shared staged check. `scope` is the variable set of the clause or
/// query — images may reuse those variables only by flowing in through
/// instantiated inputs, never as "fresh".
fn check_stages(
    theta: &Subst,
    scope: &BTreeSet<VarId>,
    stage_domains: &[BTreeSet<VarId>],
    stage_inputs: &[Vec<Term>],
) -> Result<SimplyLocalWitness, SimplyLocalViolation> {
    let all_domains: BTreeSet<VarId> =
        stage_domains.iter().flat_map(|d| d.iter().copied()).collect();
    if let Some(var) = theta.domain().difference(&all_domains).next() {
        return Err(SimplyLocalViolation::DomainOutside { var: *var });
    }

    let mut stages = Vec::with_capacity(stage_domains.len());
    let mut fresh = Vec::with_capacity(stage_domains.len());
    let mut prefix = Subst::empty();
    let mut earlier_fresh: BTreeSet<VarId> = BTreeSet::new();
    for (i, dom) in stage_domains.iter().enumerate() {
        let sigma = theta.restricted(dom);
        let allowed: BTreeSet<VarId> = prefix
            .apply_all(&stage_inputs[i])
            .iter()
            .flat_map(Term::var_set)
            .collect();
        let mut introduced = BTreeSet::new();
        for var in sigma.range_vars() {
            if allowed.contains(&var) {
                continue;
            }
            if scope.contains(&var) || earlier_fresh.contains(&var) {
                return Err(SimplyLocalViolation::RangeNotAllowed { stage: i, var });
            }
            introduced.insert(var);
        }
        earlier_fresh.extend(introduced.iter().copied());
        prefix = prefix.compose(&sigma);
        stages.push(sigma);
        fresh.push(introduced);
    }

    if &prefix != theta {
        return Err(SimplyLocalViolation::CompositionMismatch);
    }
    Ok(SimplyLocalWitness { stages, fresh })
}

/// Builds the unifier of a selected atom and a clause head in factored
/// form, for an input-consuming resolution step.
///
/// Returns `Ok(None)` when no input-consuming unifier exists: the
/// predicates differ, or the atom's input terms are not an instance of
/// the head's input terms. Otherwise returns `(head_part, atom_part)`:
/// `head_part` matches the head's inputs onto the atom's inputs (binding
/// only clause variables), and `atom_part` writes the instantiated head
/// outputs into the atom's output variables (binding only atom
/// variables). Their composition is an idempotent most general unifier
/// that leaves the atom's input arguments untouched.
///
/// The selected atom must be simply moded as a one-atom query, and must
/// share no variables with the head.
///
/// # Examples
///
/// ```
/// use icp_core::simply_local::decompose_simply_local_mgu;
/// use icp_core::{ModedAtom, Moding, Term};
///
/// let m = [Moding::In, Moding::In, Moding::Out];
/// // append([a,b], X, Y) against head append([H|Xs], Ys, [H|Zs]).
/// let atom = ModedAtom::new(
///     "append".into(),
///     vec![
///         Term::list([Term::constant("a"), Term::constant("b")]),
///         Term::var(0),
///         Term::var(1),
///     ],
///     m,
/// );
/// let head = ModedAtom::new(
///     "append".into(),
///     vec![
///         Term::cons(Term::var(10), Term::var(11)),
///         Term::var(12),
///         Term::cons(Term::var(10), Term::var(13)),
///     ],
///     m,
/// );
/// let (head_part, atom_part) = decompose_simply_local_mgu(&atom, &head)
///     .unwrap()
///     .unwrap();
/// let mgu = head_part.compose(&atom_part);
/// assert_eq!(mgu.apply_all(&atom.args), mgu.apply_all(&head.args));
///
/// // append(X, [a], Y): the head's compound input never matches a variable.
/// let free = ModedAtom::new(
///     "append".into(),
///     vec![Term::var(0), Term::list([Term::constant("a")]), Term::var(1)],
///     m,
/// );
/// assert!(decompose_simply_local_mgu(&free, &head).unwrap().is_none());
/// ```
pub fn decompose_simply_local_mgu(
    atom: &ModedAtom,
    head: &ModedAtom,
) -> Result<Option<(Subst, Subst)>, ContractError> {
    Query::new(vec![atom.clone()])
        .check_simply_moded()
        .map_err(ContractError::QueryNotSimplyModed)?;
    if !atom.var_set().is_disjoint(&head.var_set()) {
        return Err(ContractError::NotRenamedApart(format!(
            "selected atom {atom} shares variables with clause head {head}"
        )));
    }
    if atom.key() != head.key() {
        return Ok(None);
    }

    let head_inputs: Vec<Term> = head.inputs().into_iter().cloned().collect();
    let atom_inputs: Vec<Term> = atom.inputs().into_iter().cloned().collect();
    let head_part = match match_term_seqs(&head_inputs, &atom_inputs) {
        Some(s) => s,
        None => return Ok(None),
    };

    let mut bindings = Vec::new();
    for (t, u) in atom.outputs().iter().zip(head.outputs()) {
        let v = match t {
            Term::Var(v) => *v,
            Term::App(..) => unreachable!("outputs of a simply moded atom are variables"),
        };
        bindings.push((v, head_part.apply(u)));
    }
    Ok(Some((head_part, Subst::from_bindings(bindings))))
}
