//! Static classification of moded programs.
//!
//! Four checks, each purely syntactic:
//!
//! * [`check_simply_moded`] — body outputs are distinct variables that
//!   never occur earlier (see [`crate::mode`]).
//! * [`check_input_consistent`] — every clause-head input term is a
//!   variable or a flat term, and the head's input family is jointly
//!   linear, so unifying a head with any atom can never instantiate the
//!   atom's inputs more than one constructor deep.
//! * [`check_simple_delays`] — every delay condition is `nonvar` and
//!   guards an input position, so selectability depends only on input
//!   instantiation and survives further instantiation.
//! * [`check_selection_equivalence`] — on top of the first three: free
//!   (unguarded) head input positions hold bare variables and guarded
//!   positions hold flat non-variable terms. Under these conditions a
//!   delay-respecting scheduler and an input-consuming one can take
//!   exactly the same resolution steps.
//!
//! [`DependencyGraph`] captures which predicates a predicate's clauses
//! refer to, with reflexive-transitive reachability and the mutual
//! dependency relation used to spot (mutually) recursive calls.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{DelayCondition, Program};
use crate::mode::Moding;
use crate::term::{family_is_linear, Functor};

/// Outcome of one syntactic check.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    /// True if the property holds for the whole program.
    pub holds: bool,
    /// The first violation found, when it does not.
    pub witness: Option<String>,
}

impl Verdict {
    fn yes() -> Self {
        Verdict { holds: true, witness: None }
    }

    fn no(witness: String) -> Self {
        Verdict { holds: false, witness: Some(witness) }
    }
}

/// Checks every clause for the simply-moded conditions.
pub fn check_simply_moded(program: &Program) -> Verdict {
    for (i, c) in program.clauses.iter().enumerate() {
        if let Err(why) = c.check_simply_moded() {
            return Verdict::no(format!("clause {} ({}): {why}", i + 1, c.head));
        }
    }
    Verdict::yes()
}

/// Checks that each clause head is input consistent: input terms are
/// variables or flat, and no variable occurs twice across the head's
/// input positions.
pub fn check_input_consistent(program: &Program) -> Verdict {
    for (i, c) in program.clauses.iter().enumerate() {
        let inputs = c.head.inputs();
        for t in &inputs {
            if !(t.is_var() || t.is_flat()) {
                return Verdict::no(format!(
                    "clause {} ({}): head input term {t} is neither a variable nor flat",
                    i + 1,
                    c.head
                ));
            }
        }
        if !family_is_linear(inputs.iter().copied()) {
            return Verdict::no(format!(
                "clause {} ({}): a variable occurs twice across the head's input positions",
                i + 1,
                c.head
            ));
        }
    }
    Verdict::yes()
}

/// What the program's delay declarations look like to a scheduler.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayReport {
    /// True if every condition is `nonvar` on an input position.
    pub simple: bool,
    /// The first offending condition, when not simple.
    pub witness: Option<String>,
    /// Per predicate, the guarded argument positions (0-based).
    pub controlled: BTreeMap<(Functor, usize), BTreeSet<usize>>,
}

/// Checks that the delay declarations are simple: each condition is
/// `nonvar` and guards an input position. Predicates without a delay
/// declaration are always selectable and impose no conditions.
pub fn check_simple_delays(program: &Program) -> DelayReport {
    let mut simple = true;
    let mut witness = None;
    let mut controlled: BTreeMap<(Functor, usize), BTreeSet<usize>> = BTreeMap::new();
    for d in &program.delays {
        let key = (d.pred.clone(), d.arity);
        let mode = program
            .mode_for(&key)
            .expect("parser requires a mode for every delayed predicate");
        for (pos, cond) in &d.conditions {
            if *cond != DelayCondition::Nonvar {
                simple = false;
                witness.get_or_insert_with(|| {
                    format!("{}/{}: position {} requires {cond}, not nonvar", d.pred, d.arity, pos + 1)
                });
                continue;
            }
            if mode[*pos] != Moding::In {
                simple = false;
                witness.get_or_insert_with(|| {
                    format!(
                        "{}/{}: position {} is guarded but is an output position",
                        d.pred,
                        d.arity,
                        pos + 1
                    )
                });
                continue;
            }
            controlled.entry(key.clone()).or_default().insert(*pos);
        }
    }
    DelayReport { simple, witness, controlled }
}

/// Whether delay-respecting and input-consuming selection provably take
/// the same steps on this program.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionEquivalenceReport {
    /// True when the prerequisite checks (simply moded, input
    /// consistent, simple delays) all pass; the two position conditions
    /// are only meaningful then.
    pub applicable: bool,
    /// Every clause head carries a bare variable in each input position
    /// that no delay condition guards.
    pub free_positions_hold_variables: bool,
    /// Every clause head carries a flat non-variable term in each
    /// guarded input position.
    pub controlled_positions_hold_flat_terms: bool,
    /// Why the check is inapplicable, or the first position violation.
    pub witness: Option<String>,
}

impl SelectionEquivalenceReport {
    /// True when the check applies and both position conditions hold.
    pub fn holds(&self) -> bool {
        self.applicable
            && self.free_positions_hold_variables
            && self.controlled_positions_hold_flat_terms
    }
}

/// Checks the head-shape conditions under which a delay-respecting
/// scheduler selects an atom exactly when an input-consuming step
/// exists for it: guarded input positions commit to one constructor
/// (flat, non-variable), all other input positions stay unconstrained
/// (bare variables).
pub fn check_selection_equivalence(program: &Program) -> SelectionEquivalenceReport {
    let sm = check_simply_moded(program);
    let ic = check_input_consistent(program);
    let delays = check_simple_delays(program);
    let prerequisite_failure = if !sm.holds {
        Some(format!("not simply moded: {}", sm.witness.unwrap_or_default()))
    } else if !ic.holds {
        Some(format!("not input consistent: {}", ic.witness.unwrap_or_default()))
    } else if !delays.simple {
        Some(format!("delays not simple: {}", delays.witness.clone().unwrap_or_default()))
    } else {
        None
    };
    if let Some(why) = prerequisite_failure {
        return SelectionEquivalenceReport {
            applicable: false,
            free_positions_hold_variables: false,
            controlled_positions_hold_flat_terms: false,
            witness: Some(why),
        };
    }

    let empty = BTreeSet::new();
    let mut free_ok = true;
    let mut controlled_ok = true;
    let mut witness = None;
    for (i, c) in program.clauses.iter().enumerate() {
        let guarded = delays.controlled.get(&c.head.key()).unwrap_or(&empty);
        for pos in c.head.input_positions() {
            let t = &c.head.args[pos];
            if guarded.contains(&pos) {
                if t.is_var() || !t.is_flat() {
                    controlled_ok = false;
                    witness.get_or_insert_with(|| {
                        format!(
                            "clause {} ({}): guarded input position {} holds {t}, not a flat non-variable term",
                            i + 1,
                            c.head,
                            pos + 1
                        )
                    });
                }
            } else if !t.is_var() {
                free_ok = false;
                witness.get_or_insert_with(|| {
                    format!(
                        "clause {} ({}): unguarded input position {} holds {t}, not a variable",
                        i + 1,
                        c.head,
                        pos + 1
                    )
                });
            }
        }
    }
    SelectionEquivalenceReport {
        applicable: true,
        free_positions_hold_variables: free_ok,
        controlled_positions_hold_flat_terms: controlled_ok,
        witness,
    }
}

/// Which predicates each predicate's clauses refer to, with
/// reachability closed reflexively and transitively.
///
/// Nodes are the program's defined predicates plus every referenced but
/// undefined predicate (a *sink*, e.g. a comparison used before its
/// fact table is materialized).
#[derive(Debug, Clone)]
pub struct DependencyGraph {
    nodes: Vec<(Functor, usize)>,
    index: BTreeMap<(Functor, usize), usize>,
    defined: Vec<bool>,
    refers: Vec<BTreeSet<usize>>,
    depends: Vec<BTreeSet<usize>>,
}

impl DependencyGraph {
    /// Builds the graph from a program's clauses.
    pub fn build(program: &Program) -> Self {
        let mut nodes: Vec<(Functor, usize)> = Vec::new();
        let mut index = BTreeMap::new();
        let mut add = |key: (Functor, usize), nodes: &mut Vec<(Functor, usize)>| -> usize {
            if let Some(i) = index.get(&key) {
                return *i;
            }
            let i = nodes.len();
            nodes.push(key.clone());
            index.insert(key, i);
            i
        };
        let defined_keys = program.defined_predicates();
        for key in &defined_keys {
            add(key.clone(), &mut nodes);
        }
        let mut refers: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); nodes.len()];
        for c in &program.clauses {
            let h = add(c.head.key(), &mut nodes);
            for b in &c.body {
                let t = add(b.key(), &mut nodes);
                refers.resize(nodes.len(), BTreeSet::new());
                refers[h].insert(t);
            }
        }
        refers.resize(nodes.len(), BTreeSet::new());
        let defined: Vec<bool> = nodes.iter().map(|k| defined_keys.contains(k)).collect();

        // Reflexive-transitive closure by saturation; the graphs here
        // are a handful of nodes.
        let mut depends: Vec<BTreeSet<usize>> = (0..nodes.len())
            .map(|i| {
                let mut s = refers[i].clone();
                s.insert(i);
                s
            })
            .collect();
        loop {
            let mut changed = false;
            for i in 0..depends.len() {
                let reachable: BTreeSet<usize> = depends[i]
                    .iter()
                    .flat_map(|j| depends[*j].iter().copied())
                    .collect();
                for j in reachable {
                    changed |= depends[i].insert(j);
                }
            }
            if !changed {
                break;
            }
        }
        DependencyGraph { nodes, index, defined, refers, depends }
    }

    /// All nodes: defined predicates and sinks.
    pub fn nodes(&self) -> &[(Functor, usize)] {
        &self.nodes
    }

    /// True if the predicate has at least one clause.
    pub fn is_defined(&self, key: &(Functor, usize)) -> bool {
        self.index.get(key).is_some_and(|i| self.defined[*i])
    }

    /// True if some clause of `p` has a body atom of `q`.
    pub fn refers_to(&self, p: &(Functor, usize), q: &(Functor, usize)) -> bool {
        match (self.index.get(p), self.index.get(q)) {
            (Some(i), Some(j)) => self.refers[*i].contains(j),
            _ => false,
        }
    }

    /// True if `p` reaches `q` through zero or more references.
    pub fn depends_on(&self, p: &(Functor, usize), q: &(Functor, usize)) -> bool {
        match (self.index.get(p), self.index.get(q)) {
            (Some(i), Some(j)) => self.depends[*i].contains(j),
            _ => false,
        }
    }

    /// True if `p` and `q` depend on each other (every predicate is
    /// equivalent to itself).
    pub fn equivalent(&self, p: &(Functor, usize), q: &(Functor, usize)) -> bool {
        self.depends_on(p, q) && self.depends_on(q, p)
    }

    /// Number of *defined* predicates reachable from `p`, itself
    /// included when defined. Sinks score 0; equivalent predicates
    /// score equally; strict dependency strictly increases the score.
    pub fn dependency_count(&self, p: &(Functor, usize)) -> usize {
        match self.index.get(p) {
            Some(i) => self.depends[*i].iter().filter(|j| self.defined[**j]).count(),
            None => 0,
        }
    }
}

/// True if the clause's own head predicate is among the predicates some
/// body atom's predicate mutually depends on — the body atom "calls
/// back into" the head's recursive cluster.
pub fn calls_back_into_head(graph: &DependencyGraph, head: &(Functor, usize), body: &(Functor, usize)) -> bool {
    graph.equivalent(head, body)
}
