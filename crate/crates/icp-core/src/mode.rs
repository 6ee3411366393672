//! Moded atoms, clauses, queries, and the simply-moded contract.
//!
//! Every predicate argument position is moded input or output. An atom
//! carries its predicate's moding alongside the argument terms, so input
//! and output positions can be split without consulting a table.
//!
//! A clause or query is *simply moded* when every body-atom output
//! position holds a variable, those variables are all distinct, and none
//! of them occurs earlier — not in the head's input positions and not in
//! the input positions of the same or any preceding body atom. Outputs
//! are thus always "still to be computed" at the moment their atom is
//! selected, which is what the resolution engine and fixpoint semantics
//! here rely on.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::error::ContractError;
use crate::subst::Subst;
use crate::term::{dedup_keep_order, Functor, Term, VarGen, VarId, VarNames};

/// Direction of one argument position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Moding {
    /// The caller supplies this argument.
    In,
    /// The callee produces this argument.
    Out,
}

impl fmt::Display for Moding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Moding::In => "in",
            Moding::Out => "out",
        })
    }
}

/// An atom `p(t1, ..., tn)` together with the moding of `p`.
///
/// # Examples
///
/// ```
/// use icp_core::{ModedAtom, Moding, Term};
///
/// let a = ModedAtom::new(
///     "append".into(),
///     vec![Term::nil(), Term::var(0), Term::var(1)],
///     [Moding::In, Moding::In, Moding::Out],
/// );
/// assert_eq!(a.inputs().len(), 2);
/// assert_eq!(a.outputs(), vec![&Term::var(1)]);
/// ```
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModedAtom {
    /// Predicate symbol.
    pub pred: Functor,
    /// Argument terms, one per position.
    pub args: Vec<Term>,
    /// Moding of each position, shared across all atoms of the predicate.
    pub mode: Arc<[Moding]>,
}

impl ModedAtom {
    /// Creates an atom. The moding must cover every argument position.
    pub fn new(pred: Functor, args: Vec<Term>, mode: impl Into<Arc<[Moding]>>) -> Self {
        let mode = mode.into();
        assert_eq!(
            args.len(),
            mode.len(),
            "atom {pred}/{} built with {}-position moding",
            args.len(),
            mode.len()
        );
        ModedAtom { pred, args, mode }
    }

    /// Number of argument positions.
    pub fn arity(&self) -> usize {
        self.args.len()
    }

    /// The predicate identity: name and arity.
    pub fn key(&self) -> (Functor, usize) {
        (self.pred.clone(), self.arity())
    }

    /// The terms in input positions, in position order.
    pub fn inputs(&self) -> Vec<&Term> {
        self.select(Moding::In)
    }

    /// The terms in output positions, in position order.
    pub fn outputs(&self) -> Vec<&Term> {
        self.select(Moding::Out)
    }

    fn select(&self, which: Moding) -> Vec<&Term> {
        self.args
            .iter()
            .zip(self.mode.iter())
            .filter(|(_, m)| **m == which)
            .map(|(t, _)| t)
            .collect()
    }

    /// Indices of the input positions.
    pub fn input_positions(&self) -> Vec<usize> {
        self.positions(Moding::In)
    }

    /// Indices of the output positions.
    pub fn output_positions(&self) -> Vec<usize> {
        self.positions(Moding::Out)
    }

    fn positions(&self, which: Moding) -> Vec<usize> {
        self.mode
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == which)
            .map(|(i, _)| i)
            .collect()
    }

    /// Variables occurring in input positions.
    pub fn input_vars(&self) -> BTreeSet<VarId> {
        var_set_of(self.inputs())
    }

    /// Variables occurring in output positions.
    pub fn output_vars(&self) -> BTreeSet<VarId> {
        var_set_of(self.outputs())
    }

    /// All variables of the atom, in first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut occ = Vec::new();
        for t in &self.args {
            t.collect_vars(&mut occ);
        }
        dedup_keep_order(occ)
    }

    /// The set of all variables of the atom.
    pub fn var_set(&self) -> BTreeSet<VarId> {
        self.vars().into_iter().collect()
    }

    /// True if every argument is ground.
    pub fn is_ground(&self) -> bool {
        self.args.iter().all(Term::is_ground)
    }

    /// The atom with a substitution applied to its arguments.
    pub fn apply(&self, s: &Subst) -> ModedAtom {
        ModedAtom {
            pred: self.pred.clone(),
            args: s.apply_all(&self.args),
            mode: Arc::clone(&self.mode),
        }
    }

    /// Renders the atom using the given variable names.
    pub fn display<'a>(&'a self, names: &'a VarNames) -> AtomDisplay<'a> {
        AtomDisplay { atom: self, names: Some(names) }
    }
}

impl fmt::Display for ModedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self, None)
    }
}

impl fmt::Debug for ModedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self, None)
    }
}

/// Display adaptor pairing an atom with a variable-name table.
pub struct AtomDisplay<'a> {
    atom: &'a ModedAtom,
    names: Option<&'a VarNames>,
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_atom(f, self.atom, self.names)
    }
}

fn write_atom(f: &mut fmt::Formatter<'_>, a: &ModedAtom, names: Option<&VarNames>) -> fmt::Result {
    write!(f, "{}", a.pred)?;
    if !a.args.is_empty() {
        f.write_str("(")?;
        for (i, t) in a.args.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match names {
                Some(n) => write!(f, "{}", t.display(n))?,
                None => write!(f, "{t}")?,
            }
        }
        f.write_str(")")?;
    }
    Ok(())
}

fn var_set_of(terms: Vec<&Term>) -> BTreeSet<VarId> {
    let mut out = BTreeSet::new();
    for t in terms {
        out.extend(t.var_set());
    }
    out
}

/// A program clause `head :- body`, a fact when the body is empty.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Clause {
    /// Head atom.
    pub head: ModedAtom,
    /// Body atoms in source order.
    pub body: Vec<ModedAtom>,
}

impl Clause {
    /// Creates a clause.
    pub fn new(head: ModedAtom, body: Vec<ModedAtom>) -> Self {
        Clause { head, body }
    }

    /// True if the clause has no body.
    pub fn is_unit(&self) -> bool {
        self.body.is_empty()
    }

    /// All variables of the clause (head first), in first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut occ = Vec::new();
        for t in &self.head.args {
            t.collect_vars(&mut occ);
        }
        for b in &self.body {
            for t in &b.args {
                t.collect_vars(&mut occ);
            }
        }
        dedup_keep_order(occ)
    }

    /// The set of all variables of the clause.
    pub fn var_set(&self) -> BTreeSet<VarId> {
        self.vars().into_iter().collect()
    }

    /// The clause with a substitution applied throughout.
    pub fn apply(&self, s: &Subst) -> Clause {
        Clause {
            head: self.head.apply(s),
            body: self.body.iter().map(|b| b.apply(s)).collect(),
        }
    }

    /// A copy of the clause with every variable replaced by a fresh one
    /// from `gen`, so it shares no variables with anything `gen` avoids.
    pub fn rename_apart(&self, gen: &mut VarGen) -> Clause {
        let renaming = Subst::from_bindings(
            self.vars().into_iter().map(|v| (v, Term::var(gen.fresh()))),
        );
        self.apply(&renaming)
    }

    /// Checks the simply-moded conditions, describing the first
    /// violation found.
    pub fn check_simply_moded(&self) -> Result<(), String> {
        check_body_simply_moded(&self.head.input_vars(), &self.body)
    }
}

/// A query: a sequence of atoms to resolve.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Query {
    /// Atoms in goal order; empty means success.
    pub atoms: Vec<ModedAtom>,
}

impl Query {
    /// Creates a query from atoms.
    pub fn new(atoms: Vec<ModedAtom>) -> Self {
        Query { atoms }
    }

    /// The empty (already solved) query.
    pub fn empty() -> Self {
        Query::default()
    }

    /// True if nothing is left to resolve.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// All variables of the query, in first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut occ = Vec::new();
        for a in &self.atoms {
            for t in &a.args {
                t.collect_vars(&mut occ);
            }
        }
        dedup_keep_order(occ)
    }

    /// The set of all variables of the query.
    pub fn var_set(&self) -> BTreeSet<VarId> {
        self.vars().into_iter().collect()
    }

    /// The query with a substitution applied throughout.
    pub fn apply(&self, s: &Subst) -> Query {
        Query { atoms: self.atoms.iter().map(|a| a.apply(s)).collect() }
    }

    /// Checks the simply-moded conditions for a query: as for a clause,
    /// with no head input positions.
    pub fn check_simply_moded(&self) -> Result<(), String> {
        check_body_simply_moded(&BTreeSet::new(), &self.atoms)
    }

    /// A comparison key for the query instantiated by `s`: equal keys
    /// exactly when the two instances are variants of each other
    /// (consistent renaming of all variables).
    pub fn instance_key(&self, s: &Subst) -> Vec<Term> {
        let wrapped: Vec<Term> = self
            .atoms
            .iter()
            .map(|a| Term::App(a.pred.clone(), s.apply_all(&a.args)))
            .collect();
        crate::term::canonical_key(&wrapped, &BTreeSet::new())
    }

    /// Renders the query using the given variable names; the empty
    /// query prints as `<>`.
    pub fn display<'a>(&'a self, names: &'a VarNames) -> QueryDisplay<'a> {
        QueryDisplay { query: self, names }
    }
}

/// Display adaptor pairing a query with a variable-name table.
pub struct QueryDisplay<'a> {
    query: &'a Query,
    names: &'a VarNames,
}

impl fmt::Display for QueryDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.query.atoms.is_empty() {
            return f.write_str("<>");
        }
        for (i, a) in self.query.atoms.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{}", a.display(self.names))?;
        }
        Ok(())
    }
}

/// The shared simply-moded condition over an atom sequence: every output
/// position holds a variable, all such variables are pairwise distinct,
/// and none occurs among `prior_input_vars` or in the input positions of
/// its own or any earlier atom.
fn check_body_simply_moded(
    prior_input_vars: &BTreeSet<VarId>,
    atoms: &[ModedAtom],
) -> Result<(), String> {
    let mut seen_outputs: BTreeSet<VarId> = BTreeSet::new();
    let mut seen_inputs: BTreeSet<VarId> = prior_input_vars.clone();
    for (i, atom) in atoms.iter().enumerate() {
        seen_inputs.extend(atom.input_vars());
        for t in atom.outputs() {
            let v = match t {
                Term::Var(v) => *v,
                _ => {
                    return Err(format!(
                        "atom {} ({atom}) has non-variable term {t} in an output position",
                        i + 1
                    ));
                }
            };
            if !seen_outputs.insert(v) {
                return Err(format!(
                    "atom {} ({atom}) repeats output variable {} used by an earlier output position",
                    i + 1,
                    Term::var(v)
                ));
            }
            if prior_input_vars.contains(&v) {
                return Err(format!(
                    "atom {} ({atom}) has output variable {} that also occurs in a head input position",
                    i + 1,
                    Term::var(v)
                ));
            }
            if seen_inputs.contains(&v) {
                return Err(format!(
                    "atom {} ({atom}) has output variable {} that already occurs in an input position at or before it",
                    i + 1,
                    Term::var(v)
                ));
            }
        }
    }
    Ok(())
}

/// Verifies that every clause of a program is simply moded.
pub fn ensure_program_simply_moded(clauses: &[Clause]) -> Result<(), ContractError> {
    for (i, c) in clauses.iter().enumerate() {
        if let Err(why) = c.check_simply_moded() {
            return Err(ContractError::ClauseNotSimplyModed(format!(
                "clause {} ({} :- ...): {why}",
                i + 1,
                c.head
            )));
        }
    }
    Ok(())
}

/// Verifies that a query is simply moded.
pub fn ensure_query_simply_moded(query: &Query) -> Result<(), ContractError> {
    query
        .check_simply_moded()
        .map_err(ContractError::QueryNotSimplyModed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mode(ms: &[Moding]) -> Arc<[Moding]> {
        Arc::from(ms)
    }

    fn append_atom(a: Term, b: Term, c: Term) -> ModedAtom {
        ModedAtom::new(
            "append".into(),
            vec![a, b, c],
            mode(&[Moding::In, Moding::In, Moding::Out]),
        )
    }

    /// append([], Ys, Ys). append([H|Xs], Ys, [H|Zs]) :- append(Xs, Ys, Zs).
    fn append_clauses() -> Vec<Clause> {
        let base = Clause::new(append_atom(Term::nil(), Term::var(0), Term::var(0)), vec![]);
        let rec = Clause::new(
            append_atom(
                Term::cons(Term::var(1), Term::var(2)),
                Term::var(3),
                Term::cons(Term::var(1), Term::var(4)),
            ),
            vec![append_atom(Term::var(2), Term::var(3), Term::var(4))],
        );
        vec![base, rec]
    }

    #[test]
    fn append_is_simply_moded() {
        assert!(ensure_program_simply_moded(&append_clauses()).is_ok());
    }

    #[test]
    fn output_sharing_head_input_is_rejected() {
        // p(X) :- q(Y, X), r(X).   modes p(in), q(in,out), r(in)
        let p = ModedAtom::new("p".into(), vec![Term::var(0)], mode(&[Moding::In]));
        let q = ModedAtom::new(
            "q".into(),
            vec![Term::var(1), Term::var(0)],
            mode(&[Moding::In, Moding::Out]),
        );
        let r = ModedAtom::new("r".into(), vec![Term::var(0)], mode(&[Moding::In]));
        let c = Clause::new(p, vec![q, r]);
        let why = c.check_simply_moded().unwrap_err();
        assert!(why.contains("head input"), "unexpected witness: {why}");
    }

    #[test]
    fn nonvariable_output_is_rejected() {
        let q = Query::new(vec![append_atom(Term::var(0), Term::var(1), Term::nil())]);
        let why = q.check_simply_moded().unwrap_err();
        assert!(why.contains("non-variable"), "unexpected witness: {why}");
    }

    #[test]
    fn output_cannot_feed_its_own_inputs() {
        // q(X, X) with q(in, out): the output variable already occurs in
        // an input position of the same atom.
        let q = ModedAtom::new(
            "q".into(),
            vec![Term::var(0), Term::var(0)],
            mode(&[Moding::In, Moding::Out]),
        );
        assert!(Query::new(vec![q]).check_simply_moded().is_err());
    }

    #[test]
    fn outputs_may_feed_later_inputs() {
        // append(Xs, Ys, Zs), append(Zs, Ws, Vs) — Zs produced then consumed.
        let q = Query::new(vec![
            append_atom(Term::var(0), Term::var(1), Term::var(2)),
            append_atom(Term::var(2), Term::var(3), Term::var(4)),
        ]);
        assert!(q.check_simply_moded().is_ok());
        // Swapped, the later atom's output was already consumed: not simply moded.
        let bad = Query::new(vec![
            append_atom(Term::var(2), Term::var(3), Term::var(4)),
            append_atom(Term::var(0), Term::var(1), Term::var(2)),
        ]);
        assert!(bad.check_simply_moded().is_err());
    }

    #[test]
    fn unit_clauses_are_simply_moded() {
        let c = Clause::new(
            append_atom(
                Term::cons(Term::var(0), Term::var(0)),
                Term::var(1),
                Term::cons(Term::constant("a"), Term::nil()),
            ),
            vec![],
        );
        assert!(c.check_simply_moded().is_ok());
    }

    #[test]
    fn rename_apart_is_fresh_and_structural() {
        let c = &append_clauses()[1];
        let mut gen = VarGen::starting_at(100);
        let r = c.rename_apart(&mut gen);
        assert!(r.var_set().iter().all(|v| *v >= 100));
        assert_eq!(r.body.len(), 1);
        // Shape is preserved: hooking the renamed copy back up by
        // unification must still be possible.
        assert!(crate::subst::mgu_term_seqs(&c.head.args, &r.head.args).is_some());
    }

    #[test]
    fn atom_displays_with_names() {
        let a = append_atom(Term::nil(), Term::var(0), Term::var(0));
        let names: VarNames = [(0, "Ys".to_string())].into_iter().collect();
        assert_eq!(a.display(&names).to_string(), "append([],Ys,Ys)");
        assert_eq!(a.to_string(), "append([],_G0,_G0)");
    }
}
