//! Termination analysis for input-consuming derivations.
//!
//! A program is certified by *simple acceptability*: for every clause,
//! the level of the instantiated head must strictly exceed the level of
//! each mutually recursive body atom, measured after the preceding body
//! atoms have been resolved against a model of the program.  Together
//! with simple modedness this guarantees that every input-consuming
//! derivation of the program is finite, no matter how the scheduler
//! interleaves the query's atoms.
//!
//! Levels come from a [`LevelMapping`]:
//!
//! - [`LevelMapping::Declared`] evaluates the program's `:- level`
//!   directives (linear combinations of argument norms); atoms of
//!   predicates without a directive sit at level zero.
//! - [`LevelMapping::Canonical`] measures an atom by the size of the
//!   committed local derivation tree grown from the atom with its
//!   output positions blanked out.  It needs no annotations, but it is
//!   only defined where that tree is finite, so the checked
//!   constructor [`LevelMapping::canonical_checked`] first hunts for a
//!   derivation that outruns the depth bound and refuses on evidence.
//!
//! Because queries may leave inputs partially instantiated, both the
//! acceptability check and the evidence probe quantify over a bounded,
//! deterministic sample of input instantiations ([`SampleBounds`])
//! drawn shallowest-first from the program's term universe.

use std::collections::BTreeSet;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::DependencyGraph;
use crate::engine::{derive, Bounds, SelectionRule};
use crate::error::{ContractError, EngineError};
use crate::frontend::Program;
use crate::mode::{ensure_program_simply_moded, ModedAtom, Moding, Query};
use crate::semantics::{clause_prefix_substitutions, pool_vars, universe_terms, Interpretation};
use crate::subst::Subst;
use crate::term::{canonical_key, Term, VarGen, VarNames};

/// Why a termination check could not be completed or failed outright.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TerminationError {
    /// The derivation engine rejected a probe query.
    #[error(transparent)]
    Engine(#[from] EngineError),
    /// The program or a constructed query broke the moding contract.
    #[error(transparent)]
    Contract(#[from] ContractError),
    /// A canonical level was requested for an atom whose committed
    /// derivation tree outgrows the depth bound.
    #[error("no finite level for {atom}: its committed derivation reaches the depth bound")]
    UnboundedLevel { atom: String },
    /// The evidence probe found a derivation that looks infinite.
    #[error("termination evidence against the program: {0}")]
    Evidence(String),
}

/// How deep and how wide the deterministic input sampling goes.
///
/// Sampled inputs are tuples over the term universe of the program's
/// function symbols up to `universe_depth`, extended with `pool` fresh
/// variables standing for unknown inputs.  Tuples are enumerated
/// shallowest-first and truncated at `per_pred_cap` per predicate (or
/// per clause, for acceptability obligations).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleBounds {
    /// Maximum depth of universe terms used as inputs.
    pub universe_depth: usize,
    /// Number of fresh variables added to the universe.
    pub pool: usize,
    /// Cap on sampled input tuples per predicate or clause.
    pub per_pred_cap: usize,
}

impl SampleBounds {
    /// Bundles the three sampling bounds.
    pub fn new(universe_depth: usize, pool: usize, per_pred_cap: usize) -> Self {
        SampleBounds { universe_depth, pool, per_pred_cap }
    }
}

/// Assigns every atom a natural-number level.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelMapping {
    /// Evaluate the program's `:- level` directives; undeclared
    /// predicates sit at level zero.
    Declared,
    /// Count the nodes of the committed local derivation tree grown
    /// from the atom with fresh output positions, exploring at most
    /// `tree_depth` resolution steps.
    Canonical {
        /// Depth bound on the measuring derivation.
        tree_depth: usize,
    },
}

impl LevelMapping {
    /// The canonical mapping, guarded by an evidence probe.
    ///
    /// Runs [`probe_termination`] with the same depth bound first; if
    /// any sampled derivation outruns the bound the canonical levels
    /// would be partial, so the constructor refuses with
    /// [`TerminationError::Evidence`] instead of handing out a mapping
    /// that errors later.
    pub fn canonical_checked(
        program: &Program,
        tree_depth: usize,
        sample: SampleBounds,
    ) -> Result<LevelMapping, TerminationError> {
        match probe_termination(program, sample, tree_depth)? {
            Some(evidence) => Err(TerminationError::Evidence(evidence)),
            None => Ok(LevelMapping::Canonical { tree_depth }),
        }
    }
}

/// The level of one atom under a mapping.
///
/// Declared levels always exist (they default to zero); canonical
/// levels exist only when the committed measuring derivation stays
/// within its depth bound.
///
/// # Examples
///
/// ```
/// use icp_core::frontend::parse_program;
/// use icp_core::termination::{atom_level, LevelMapping};
///
/// let program = parse_program(
///     ":- mode append(in,in,out).\n\
///      :- level append(Xs,_,_) is len(Xs).\n\
///      append([],Ys,Ys).\n\
///      append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
///     "append",
/// )
/// .unwrap();
/// let atom = program.clauses[1].head.clone();
/// assert_eq!(atom_level(&program, &LevelMapping::Declared, &atom), Ok(1));
/// ```
pub fn atom_level(
    program: &Program,
    mapping: &LevelMapping,
    atom: &ModedAtom,
) -> Result<u64, TerminationError> {
    match mapping {
        LevelMapping::Declared => Ok(program
            .level_for(&atom.key())
            .map(|decl| decl.expr.eval(&atom.args))
            .unwrap_or(0)),
        LevelMapping::Canonical { tree_depth } => {
            let mut gen = VarGen::new();
            gen.avoid_all(atom.var_set());
            let args = atom
                .args
                .iter()
                .zip(atom.mode.iter())
                .map(|(t, m)| match m {
                    Moding::In => t.clone(),
                    Moding::Out => Term::var(gen.fresh()),
                })
                .collect();
            let probe = ModedAtom::new(atom.pred.clone(), args, Arc::clone(&atom.mode));
            let query = Query::new(vec![probe]);
            let tree = derive(
                program,
                &query,
                SelectionRule::Lic,
                Bounds::depth(*tree_depth),
                0,
            )?;
            if tree.truncated {
                return Err(TerminationError::UnboundedLevel { atom: atom.to_string() });
            }
            Ok(tree.lnodes() as u64)
        }
    }
}

/// Deterministically enumerates up to `cap` tuples of length `k` over
/// `universe`, ordered by ascending total term depth and otherwise by
/// the universe's own order.
pub fn stratified_tuples(universe: &[Term], k: usize, cap: usize) -> Vec<Vec<Term>> {
    if k == 0 {
        return if cap == 0 { Vec::new() } else { vec![Vec::new()] };
    }
    if universe.is_empty() || cap == 0 {
        return Vec::new();
    }
    let max_depth = universe.iter().map(Term::depth).max().unwrap_or(0);
    let mut by_depth: Vec<Vec<&Term>> = vec![Vec::new(); max_depth + 1];
    for t in universe {
        by_depth[t.depth()].push(t);
    }
    let mut out = Vec::new();
    let mut stack = Vec::with_capacity(k);
    for total in 0..=max_depth * k {
        if !fill_stratum(&mut out, &mut stack, &by_depth, k, total, cap) {
            break;
        }
    }
    out
}

/// Pushes every tuple of `remaining` terms whose depths sum to exactly
/// `budget`; returns false once `cap` tuples have been collected.
fn fill_stratum(
    out: &mut Vec<Vec<Term>>,
    stack: &mut Vec<Term>,
    by_depth: &[Vec<&Term>],
    remaining: usize,
    budget: usize,
    cap: usize,
) -> bool {
    if remaining == 0 {
        if budget == 0 {
            out.push(stack.clone());
            if out.len() >= cap {
                return false;
            }
        }
        return true;
    }
    let max_depth = by_depth.len() - 1;
    for d in 0..=budget.min(max_depth) {
        if budget - d > (remaining - 1) * max_depth {
            continue;
        }
        for t in &by_depth[d] {
            stack.push((*t).clone());
            let keep_going = fill_stratum(out, stack, by_depth, remaining - 1, budget - d, cap);
            stack.pop();
            if !keep_going {
                return false;
            }
        }
    }
    true
}

/// A deterministic battery of simply-moded one-atom queries.
///
/// For every predicate with a mode declaration, input positions are
/// filled from [`stratified_tuples`] over the bounded universe (plus
/// `sample.pool` fresh variables) and output positions get fresh,
/// pairwise distinct variables.  At most `sample.per_pred_cap` queries
/// are produced per predicate, in a fixed order.
pub fn sample_queries(program: &Program, sample: SampleBounds) -> Vec<Query> {
    let pool = pool_vars(program, sample.pool);
    let universe = universe_terms(program, sample.universe_depth, &pool);
    let mut out = Vec::new();
    for ((pred, _arity), mode) in &program.modes {
        let in_count = mode.iter().filter(|m| **m == Moding::In).count();
        for tuple in stratified_tuples(&universe, in_count, sample.per_pred_cap) {
            let mut gen = VarGen::new();
            gen.avoid_all(pool.iter().copied());
            for t in &tuple {
                gen.avoid_term(t);
            }
            let mut inputs = tuple.into_iter();
            let args = mode
                .iter()
                .map(|m| match m {
                    Moding::In => inputs.next().expect("one universe term per input position"),
                    Moding::Out => Term::var(gen.fresh()),
                })
                .collect();
            out.push(Query::new(vec![ModedAtom::new(pred.clone(), args, Arc::clone(mode))]));
        }
    }
    out
}

/// Hunts for evidence that the program admits an infinite
/// input-consuming derivation.
///
/// Every sampled query is run under unrestricted input-consuming
/// scheduling with the given depth bound; the first query whose tree
/// is cut off by the bound is reported.  `Ok(None)` means every
/// sampled derivation finished — a bounded check, not a proof.
///
/// # Examples
///
/// ```
/// use icp_core::frontend::parse_program;
/// use icp_core::termination::{probe_termination, SampleBounds};
///
/// let looping = parse_program(":- mode p(out).\np(X) :- p(X).\n", "loop").unwrap();
/// let evidence = probe_termination(&looping, SampleBounds::new(1, 1, 8), 16).unwrap();
/// assert!(evidence.is_some());
/// ```
pub fn probe_termination(
    program: &Program,
    sample: SampleBounds,
    derivation_depth: usize,
) -> Result<Option<String>, EngineError> {
    let names = VarNames::new();
    for query in sample_queries(program, sample) {
        let tree = derive(
            program,
            &query,
            SelectionRule::IcAny,
            Bounds::depth(derivation_depth),
            0,
        )?;
        if tree.truncated {
            return Ok(Some(format!(
                "a derivation of {} reaches depth {} without finishing",
                query.display(&names),
                derivation_depth
            )));
        }
    }
    Ok(None)
}

/// Outcome of a simple-acceptability check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AcceptabilityReport {
    /// True if every checked obligation had a strictly decreasing level.
    pub accepted: bool,
    /// Number of distinct head/body instance pairs compared.
    pub obligations_checked: usize,
    /// The first non-decreasing pair, if any.
    pub counterexample: Option<String>,
}

/// Checks simple acceptability of a program with respect to a level
/// mapping and a model.
///
/// For every clause `H :- B1,...,Bn` and every `Bk` mutually recursive
/// with `H`, the check instantiates the head's input variables from
/// the sampled universe, resolves `B1,...,Bk-1` against `model` in
/// every locality-respecting way, and requires the level of the
/// instantiated head to strictly exceed the level of the instantiated
/// `Bk`.  Duplicate head/body pairs (up to renaming) are counted once.
///
/// The result is a bounded certificate: `accepted` covers exactly the
/// `obligations_checked` pairs that the sample reaches.
///
/// # Examples
///
/// ```
/// use icp_core::frontend::parse_program;
/// use icp_core::semantics::{compute_partial_model, AtomMode, FixpointBounds};
/// use icp_core::termination::{check_simply_acceptable, LevelMapping, SampleBounds};
///
/// let program = parse_program(
///     ":- mode append(in,in,out).\n\
///      :- level append(Xs,_,_) is len(Xs).\n\
///      append([],Ys,Ys).\n\
///      append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
///     "append",
/// )
/// .unwrap();
/// let model = compute_partial_model(
///     &program,
///     FixpointBounds::new(5, 3, 1),
///     AtomMode::Symbolic,
/// )
/// .unwrap();
/// let report = check_simply_acceptable(
///     &program,
///     &LevelMapping::Declared,
///     &model,
///     SampleBounds::new(2, 1, 32),
/// )
/// .unwrap();
/// assert!(report.accepted);
/// assert!(report.obligations_checked > 0);
/// ```
pub fn check_simply_acceptable(
    program: &Program,
    mapping: &LevelMapping,
    model: &Interpretation,
    sample: SampleBounds,
) -> Result<AcceptabilityReport, TerminationError> {
    ensure_program_simply_moded(&program.clauses)?;
    let graph = DependencyGraph::build(program);
    let pool = pool_vars(program, sample.pool);
    let universe = universe_terms(program, sample.universe_depth, &pool);
    let empty = BTreeSet::new();
    let mut checked = 0usize;
    let mut seen = BTreeSet::new();
    for (ci, clause) in program.clauses.iter().enumerate() {
        let head_key = clause.head.key();
        let recursive: Vec<usize> = (0..clause.body.len())
            .filter(|k| graph.equivalent(&head_key, &clause.body[*k].key()))
            .collect();
        if recursive.is_empty() {
            continue;
        }
        let head_inputs: Vec<_> = clause.head.input_vars().into_iter().collect();
        let presets: Vec<Subst> = stratified_tuples(&universe, head_inputs.len(), sample.per_pred_cap)
            .into_iter()
            .map(|tuple| Subst::from_bindings(head_inputs.iter().copied().zip(tuple)))
            .collect();
        for k in recursive {
            for preset in &presets {
                for theta in clause_prefix_substitutions(clause, preset, k, model)? {
                    let head = clause.head.apply(&theta);
                    let body = clause.body[k].apply(&theta);
                    let pair_key = canonical_key(
                        &[
                            Term::App(head.pred.clone(), head.args.clone()),
                            Term::App(body.pred.clone(), body.args.clone()),
                        ],
                        &empty,
                    );
                    if !seen.insert(pair_key) {
                        continue;
                    }
                    let head_level = atom_level(program, mapping, &head)?;
                    let body_level = atom_level(program, mapping, &body)?;
                    checked += 1;
                    if head_level <= body_level {
                        return Ok(AcceptabilityReport {
                            accepted: false,
                            obligations_checked: checked,
                            counterexample: Some(format!(
                                "clause {}: level {} of {} does not exceed level {} of {}",
                                program.clause_id(ci),
                                head_level,
                                head,
                                body_level,
                                body,
                            )),
                        });
                    }
                }
            }
        }
    }
    Ok(AcceptabilityReport { accepted: true, obligations_checked: checked, counterexample: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use crate::semantics::{compute_partial_model, AtomMode, FixpointBounds};

    const APPEND_WITH_LEVEL: &str = ":- mode append(in,in,out).\n\
         :- level append(Xs,_,_) is len(Xs).\n\
         append([],Ys,Ys).\n\
         append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n";

    const LOOP: &str = ":- mode p(out).\np(X) :- p(X).\n";

    fn append_program() -> Program {
        parse_program(APPEND_WITH_LEVEL, "append").unwrap()
    }

    fn atom_of(program: &Program, text: &str) -> ModedAtom {
        crate::frontend::parse_query(text, program).unwrap().query.atoms[0].clone()
    }

    #[test]
    fn declared_levels_evaluate_norms_and_default_to_zero() {
        let program = append_program();
        let atom = atom_of(&program, "append([a,b],[c],X)");
        assert_eq!(atom_level(&program, &LevelMapping::Declared, &atom), Ok(2));
        let open = atom_of(&program, "append([a|Y],[c],X)");
        assert_eq!(atom_level(&program, &LevelMapping::Declared, &open), Ok(1));

        let plain = parse_program(
            ":- mode append(in,in,out).\nappend([],Ys,Ys).\n",
            "plain",
        )
        .unwrap();
        let atom = atom_of(&plain, "append([a,b],[c],X)");
        assert_eq!(atom_level(&plain, &LevelMapping::Declared, &atom), Ok(0));
    }

    #[test]
    fn canonical_levels_count_committed_tree_nodes() {
        let program = append_program();
        let mapping = LevelMapping::Canonical { tree_depth: 16 };
        let two = atom_of(&program, "append([a,b],[c],X)");
        assert_eq!(atom_level(&program, &mapping, &two), Ok(4));
        let nil = atom_of(&program, "append([],[],X)");
        assert_eq!(atom_level(&program, &mapping, &nil), Ok(2));
        // Outputs are blanked before measuring, so an already-answered
        // atom gets the same level as its unanswered form.
        let answered = atom_of(&program, "append([a],[],[a])");
        assert_eq!(atom_level(&program, &mapping, &answered), Ok(3));
    }

    #[test]
    fn append_is_accepted_by_both_mappings() {
        let program = append_program();
        let model =
            compute_partial_model(&program, FixpointBounds::new(5, 3, 1), AtomMode::Symbolic)
                .unwrap();
        let sample = SampleBounds::new(2, 1, 32);
        for mapping in [LevelMapping::Declared, LevelMapping::Canonical { tree_depth: 32 }] {
            let report = check_simply_acceptable(&program, &mapping, &model, sample).unwrap();
            assert!(report.accepted, "append rejected by {mapping:?}");
            assert!(report.obligations_checked > 0);
            assert_eq!(report.counterexample, None);
        }
    }

    #[test]
    fn a_looping_clause_is_rejected_by_every_route() {
        let program = parse_program(LOOP, "loop").unwrap();
        let model =
            compute_partial_model(&program, FixpointBounds::new(3, 2, 1), AtomMode::Symbolic)
                .unwrap();
        let sample = SampleBounds::new(1, 1, 8);

        // Declared levels default to zero, so the head never exceeds
        // the recursive body atom.
        let report =
            check_simply_acceptable(&program, &LevelMapping::Declared, &model, sample).unwrap();
        assert!(!report.accepted);
        let message = report.counterexample.unwrap();
        assert!(message.contains("does not exceed"), "unexpected message: {message}");

        // The unguarded canonical mapping cannot measure the looping
        // atom at all.
        let unchecked = LevelMapping::Canonical { tree_depth: 8 };
        match check_simply_acceptable(&program, &unchecked, &model, sample) {
            Err(TerminationError::UnboundedLevel { atom }) => {
                assert!(atom.starts_with("p("), "unexpected atom: {atom}")
            }
            other => panic!("expected an unbounded level, got {other:?}"),
        }

        // The guarded constructor refuses up front.
        match LevelMapping::canonical_checked(&program, 8, sample) {
            Err(TerminationError::Evidence(e)) => {
                assert!(e.contains("reaches depth 8"), "unexpected evidence: {e}")
            }
            other => panic!("expected evidence, got {other:?}"),
        }
    }

    #[test]
    fn the_probe_is_clean_on_append_and_loud_on_the_loop() {
        let program = append_program();
        let sample = SampleBounds::new(1, 1, 16);
        assert_eq!(probe_termination(&program, sample, 32).unwrap(), None);

        let looping = parse_program(LOOP, "loop").unwrap();
        let evidence = probe_termination(&looping, sample, 16).unwrap();
        let evidence = evidence.expect("the loop should be caught");
        assert!(evidence.contains("reaches depth 16"), "unexpected evidence: {evidence}");
    }

    #[test]
    fn stratified_tuples_go_shallowest_first_and_respect_the_cap() {
        let program = append_program();
        let pool = pool_vars(&program, 1);
        let universe = universe_terms(&program, 1, &pool);
        let tuples = stratified_tuples(&universe, 2, 5);
        assert_eq!(tuples.len(), 5);
        // Depth-zero pairs come first, in the universe's own order
        // (variables sort before applications).
        let v = Term::var(pool[0]);
        let nil = Term::nil();
        assert_eq!(tuples[0], vec![v.clone(), v.clone()]);
        assert_eq!(tuples[1], vec![v.clone(), nil.clone()]);
        assert_eq!(tuples[2], vec![nil.clone(), v.clone()]);
        assert_eq!(tuples[3], vec![nil.clone(), nil.clone()]);
        // The fifth tuple opens the next stratum: total depth one.
        assert_eq!(tuples[4][0], v);
        assert_eq!(tuples[4][1].depth(), 1);

        assert_eq!(stratified_tuples(&universe, 0, 4), vec![Vec::<Term>::new()]);
        assert!(stratified_tuples(&universe, 2, 0).is_empty());
        let all = stratified_tuples(&universe, 1, usize::MAX);
        assert_eq!(all.len(), universe.len());
    }

    #[test]
    fn sampled_queries_are_simply_moded_and_capped() {
        let program = append_program();
        let queries = sample_queries(&program, SampleBounds::new(1, 1, 7));
        assert_eq!(queries.len(), 7);
        for q in &queries {
            q.check_simply_moded().expect("sampled queries must be simply moded");
            assert_eq!(q.atoms.len(), 1);
        }
        // Determinism: the same bounds give the same battery.
        let again = sample_queries(&program, SampleBounds::new(1, 1, 7));
        assert_eq!(queries, again);
    }
}
