//! Bounded resolution under dynamic scheduling.
//!
//! [`derive`] explores a derivation tree depth-first under one of five
//! selection rules and hard [`Bounds`], recording every node. Two rule
//! families exist:
//!
//! * *Input-consuming* rules ([`SelectionRule::IcAny`],
//!   [`SelectionRule::Lic`]) resolve an atom only when its input
//!   arguments are already an instance of the clause head's — the step
//!   never instantiates the selected atom's inputs. A query whose atoms
//!   all lack such a step *deadlocks*; input-consuming rules never
//!   report plain failure.
//! * *Delay-respecting* rules ([`SelectionRule::DelayAny`],
//!   [`SelectionRule::DelayLeftmost`], and the unconditional
//!   [`SelectionRule::Leftmost`]) use ordinary unification but select
//!   an atom only once its delay declaration is satisfied. Here a
//!   selectable atom with no unifying clause is a failure, while a
//!   query with no selectable atom deadlocks.
//!
//! Every derivation is bounded by a maximum depth and a node budget
//! (fuel); paths cut short are marked [`Status::DepthCut`] and the tree
//! is flagged truncated, so "no answers" can never silently mean "ran
//! out of budget". The tree records, per node, the composed answer
//! substitution restricted to the initial query's variables, so both
//! final answers and the partial answers accumulated along every prefix
//! can be read off directly.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::EngineError;
use crate::frontend::Program;
use crate::mode::{ensure_program_simply_moded, ensure_query_simply_moded, Query};
use crate::simply_local::decompose_simply_local_mgu;
use crate::subst::{mgu_term_seqs, Subst};
use crate::term::{VarGen, VarId, VarNames};

/// How the next atom and clause are chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectionRule {
    /// Branch over every atom and clause with an input-consuming step.
    IcAny,
    /// Commit to the leftmost atom that has at least one
    /// input-consuming step, branching over its clauses.
    Lic,
    /// Branch over every delay-selectable atom and unifying clause.
    DelayAny,
    /// Commit to the leftmost delay-selectable atom, branching over its
    /// unifying clauses.
    DelayLeftmost,
    /// Always select the first atom, ignoring delay declarations.
    Leftmost,
}

impl fmt::Display for SelectionRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SelectionRule::IcAny => "ic-any",
            SelectionRule::Lic => "lic",
            SelectionRule::DelayAny => "delay-any",
            SelectionRule::DelayLeftmost => "delay-leftmost",
            SelectionRule::Leftmost => "leftmost",
        })
    }
}

/// Which family of tree a derivation produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeKind {
    /// All input-consuming steps of all atoms.
    Ic,
    /// Leftmost atom with an input-consuming step.
    Lic,
    /// Delay-respecting (or unconditional leftmost) selection.
    Delay,
}

impl TreeKind {
    /// The tree family a selection rule produces.
    pub fn of_rule(rule: SelectionRule) -> TreeKind {
        match rule {
            SelectionRule::IcAny => TreeKind::Ic,
            SelectionRule::Lic => TreeKind::Lic,
            SelectionRule::DelayAny | SelectionRule::DelayLeftmost | SelectionRule::Leftmost => {
                TreeKind::Delay
            }
        }
    }
}

impl fmt::Display for TreeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TreeKind::Ic => "ic",
            TreeKind::Lic => "lic",
            TreeKind::Delay => "delay",
        })
    }
}

/// Hard limits on a derivation: maximum tree depth and total node
/// budget. Exceeding either truncates the tree rather than erroring.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    /// Maximum derivation depth (root is depth 0).
    pub depth: usize,
    /// Maximum number of tree nodes; the root is always created.
    pub fuel: usize,
}

impl Bounds {
    /// Bounds with the given depth and a generous default node budget.
    pub fn depth(depth: usize) -> Self {
        Bounds { depth, fuel: 100_000 }
    }
}

/// Terminal label of a tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// The query became empty.
    Success,
    /// No atom was selectable (or, for input-consuming rules, no step
    /// existed anywhere).
    Deadlock,
    /// A selectable atom had no unifying clause.
    Failure,
    /// A bound stopped exploration on this path.
    DepthCut,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Success => "Success",
            Status::Deadlock => "Deadlock",
            Status::Failure => "Failure",
            Status::DepthCut => "DepthCut",
        })
    }
}

/// The resolution step that created a node.
#[derive(Debug, Clone)]
pub struct Step {
    /// Index of the selected atom in the parent's query.
    pub atom: usize,
    /// Global index of the program clause used.
    pub clause: usize,
    /// The step's most general unifier (unrestricted).
    pub mgu: Subst,
}

/// One node of a derivation tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    /// The query at this node.
    pub query: Query,
    /// Distance from the root.
    pub depth: usize,
    /// Composed answer substitution from the root, restricted to the
    /// initial query's variables.
    pub cas: Subst,
    /// The step that created this node; `None` for the root.
    pub via: Option<Step>,
    /// Parent node index; `None` for the root.
    pub parent: Option<usize>,
    /// Child node indices in selection order.
    pub children: Vec<usize>,
    /// Terminal label; `None` for expanded interior nodes.
    pub status: Option<Status>,
}

/// A fully explored (up to bounds) derivation tree.
#[derive(Debug, Clone)]
pub struct DerivationTree {
    /// The tree family.
    pub kind: TreeKind,
    /// The rule that built it.
    pub rule: SelectionRule,
    /// The initial query.
    pub query: Query,
    /// All nodes in depth-first creation order; index 0 is the root.
    pub nodes: Vec<TreeNode>,
    /// True if depth or fuel cut any path short.
    pub truncated: bool,
}

impl DerivationTree {
    /// Total number of nodes.
    pub fn lnodes(&self) -> usize {
        self.nodes.len()
    }

    /// Indices of success leaves, in derivation order.
    pub fn success_nodes(&self) -> Vec<usize> {
        self.with_status(Status::Success)
    }

    /// Indices of nodes carrying the given terminal status.
    pub fn with_status(&self, status: Status) -> Vec<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.status == Some(status))
            .map(|(i, _)| i)
            .collect()
    }

    /// Computed answer substitutions of all success leaves, in
    /// derivation order (not deduplicated).
    pub fn answers(&self) -> Vec<Subst> {
        self.success_nodes()
            .into_iter()
            .map(|i| self.nodes[i].cas.clone())
            .collect()
    }

    /// Partial answers: the composed substitution at every node of the
    /// tree, deduplicated up to variance of the instantiated initial
    /// query, in first-encountered order.
    pub fn partial_answers(&self) -> Vec<Subst> {
        let mut seen = BTreeSet::new();
        let mut out = Vec::new();
        for n in &self.nodes {
            if seen.insert(self.query.instance_key(&n.cas)) {
                out.push(n.cas.clone());
            }
        }
        out
    }

    /// Node indices from the root to `node`, inclusive.
    pub fn path(&self, node: usize) -> Vec<usize> {
        let mut rev = vec![node];
        let mut cur = node;
        while let Some(p) = self.nodes[cur].parent {
            rev.push(p);
            cur = p;
        }
        rev.reverse();
        rev
    }

    /// Renders the whole derivation, one line per node
    /// (`depth | selected atom | clause | mgu | resolvent`) plus a
    /// `depth | ! status | answer` line per terminal node. Line order
    /// is depth-first derivation order, so the text is stable for a
    /// given program, query, rule, and bounds.
    pub fn trace(&self, program: &Program, names: &VarNames) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            match &node.via {
                None => {
                    out.push_str(&format!("0 | - | - | - | {}\n", node.query.display(names)));
                }
                Some(step) => {
                    let parent = &self.nodes[node.parent.expect("non-root has a parent")];
                    let selected = parent.query.atoms[step.atom].display(names);
                    out.push_str(&format!(
                        "{} | {} | {} | {} | {}\n",
                        node.depth,
                        selected,
                        program.clause_id(step.clause),
                        step.mgu.display(names),
                        node.query.display(names),
                    ));
                }
            }
            if let Some(status) = node.status {
                out.push_str(&format!(
                    "{} | ! {} | {}\n",
                    node.depth,
                    status,
                    node.cas.display(names)
                ));
            }
        }
        out
    }
}

/// One applicable resolution step, before it becomes a node.
struct PendingStep {
    atom: usize,
    clause: usize,
    mgu: Subst,
    resolvent: Query,
}

/// What a node's query offers: a terminal verdict or applicable steps.
enum StepSet {
    Terminal(Status),
    Steps(Vec<PendingStep>),
}

struct Engine<'a> {
    program: &'a Program,
    rule: SelectionRule,
    bounds: Bounds,
    gen: VarGen,
    initial_vars: BTreeSet<VarId>,
    nodes: Vec<TreeNode>,
    truncated: bool,
}

/// Runs a bounded derivation of `query` against `program` under the
/// given selection rule.
///
/// Both the program and the query must be simply moded. `first_fresh_var`
/// must lie above every variable of the program and the query (use the
/// `next_var` of the parsed query); clause copies are renamed from
/// there.
///
/// # Examples
///
/// ```
/// use icp_core::engine::{derive, Bounds, SelectionRule};
/// use icp_core::frontend::{parse_program, parse_query};
///
/// let src = ":- mode append(in,in,out).\n\
///            append([],Ys,Ys).\n\
///            append([H|Xs],Ys,[H|Zs]) :- append(Xs,Ys,Zs).\n";
/// let program = parse_program(src, "append").unwrap();
/// let q = parse_query("append([a,b],X,Y)", &program).unwrap();
/// let tree = derive(
///     &program,
///     &q.query,
///     SelectionRule::Lic,
///     Bounds::depth(5),
///     q.next_var,
/// )
/// .unwrap();
/// assert_eq!(tree.success_nodes().len(), 1);
/// assert_eq!(tree.lnodes(), 4);
/// ```
pub fn derive(
    program: &Program,
    query: &Query,
    rule: SelectionRule,
    bounds: Bounds,
    first_fresh_var: VarId,
) -> Result<DerivationTree, EngineError> {
    ensure_program_simply_moded(&program.clauses)?;
    ensure_query_simply_moded(query)?;
    let mut gen = VarGen::starting_at(first_fresh_var);
    gen.avoid_all(query.vars());
    for c in &program.clauses {
        gen.avoid_all(c.vars());
    }

    let mut engine = Engine {
        program,
        rule,
        bounds,
        gen,
        initial_vars: query.var_set(),
        nodes: Vec::new(),
        truncated: false,
    };
    engine.nodes.push(TreeNode {
        query: query.clone(),
        depth: 0,
        cas: Subst::empty(),
        via: None,
        parent: None,
        children: Vec::new(),
        status: None,
    });
    engine.expand(0)?;
    Ok(DerivationTree {
        kind: TreeKind::of_rule(rule),
        rule,
        query: query.clone(),
        nodes: engine.nodes,
        truncated: engine.truncated,
    })
}

impl Engine<'_> {
    fn expand(&mut self, idx: usize) -> Result<(), EngineError> {
        let query = self.nodes[idx].query.clone();
        if query.is_empty() {
            self.nodes[idx].status = Some(Status::Success);
            return Ok(());
        }
        if self.nodes[idx].depth >= self.bounds.depth {
            self.nodes[idx].status = Some(Status::DepthCut);
            self.truncated = true;
            return Ok(());
        }
        match self.steps_for(&query)? {
            StepSet::Terminal(status) => {
                self.nodes[idx].status = Some(status);
            }
            StepSet::Steps(steps) => {
                for step in steps {
                    if self.nodes.len() >= self.bounds.fuel.max(1) {
                        self.nodes[idx].status = Some(Status::DepthCut);
                        self.truncated = true;
                        break;
                    }
                    let cas = self.nodes[idx]
                        .cas
                        .compose(&step.mgu)
                        .restricted(&self.initial_vars);
                    let child = TreeNode {
                        query: step.resolvent,
                        depth: self.nodes[idx].depth + 1,
                        cas,
                        via: Some(Step { atom: step.atom, clause: step.clause, mgu: step.mgu }),
                        parent: Some(idx),
                        children: Vec::new(),
                        status: None,
                    };
                    let child_idx = self.nodes.len();
                    self.nodes.push(child);
                    self.nodes[idx].children.push(child_idx);
                    self.expand(child_idx)?;
                }
            }
        }
        Ok(())
    }

    fn steps_for(&mut self, query: &Query) -> Result<StepSet, EngineError> {
        match self.rule {
            SelectionRule::IcAny => {
                let mut steps = Vec::new();
                for i in 0..query.atoms.len() {
                    steps.extend(self.ic_steps(query, i)?);
                }
                if steps.is_empty() {
                    Ok(StepSet::Terminal(Status::Deadlock))
                } else {
                    Ok(StepSet::Steps(steps))
                }
            }
            SelectionRule::Lic => {
                for i in 0..query.atoms.len() {
                    let steps = self.ic_steps(query, i)?;
                    if !steps.is_empty() {
                        return Ok(StepSet::Steps(steps));
                    }
                }
                Ok(StepSet::Terminal(Status::Deadlock))
            }
            SelectionRule::DelayAny => {
                let selectable: Vec<usize> = (0..query.atoms.len())
                    .filter(|i| self.selectable(&query.atoms[*i]))
                    .collect();
                if selectable.is_empty() {
                    return Ok(StepSet::Terminal(Status::Deadlock));
                }
                let mut steps = Vec::new();
                for i in selectable {
                    steps.extend(self.plain_steps(query, i)?);
                }
                if steps.is_empty() {
                    Ok(StepSet::Terminal(Status::Failure))
                } else {
                    Ok(StepSet::Steps(steps))
                }
            }
            SelectionRule::DelayLeftmost => {
                let i = match (0..query.atoms.len()).find(|i| self.selectable(&query.atoms[*i])) {
                    Some(i) => i,
                    None => return Ok(StepSet::Terminal(Status::Deadlock)),
                };
                let steps = self.plain_steps(query, i)?;
                if steps.is_empty() {
                    Ok(StepSet::Terminal(Status::Failure))
                } else {
                    Ok(StepSet::Steps(steps))
                }
            }
            SelectionRule::Leftmost => {
                let steps = self.plain_steps(query, 0)?;
                if steps.is_empty() {
                    Ok(StepSet::Terminal(Status::Failure))
                } else {
                    Ok(StepSet::Steps(steps))
                }
            }
        }
    }

    fn selectable(&self, atom: &crate::mode::ModedAtom) -> bool {
        match self.program.delay_for(&atom.key()) {
            Some(decl) => decl.satisfied_by(atom),
            None => true,
        }
    }

    /// Errors out when a materialized comparison is consulted with a
    /// numeral its fact table cannot cover.
    fn range_check(&self, atom: &crate::mode::ModedAtom) -> Result<(), EngineError> {
        if !self.program.is_materialized_comparison(&atom.key()) {
            return Ok(());
        }
        let (lo, hi) = self.program.materialized.expect("materialized range");
        for arg in &atom.args {
            if let Some(n) = arg.as_int() {
                if n < lo || n > hi {
                    return Err(EngineError::ComparisonOutOfRange {
                        atom: atom.to_string(),
                        arg: arg.to_string(),
                        lo,
                        hi,
                    });
                }
            }
        }
        Ok(())
    }

    fn ic_steps(&mut self, query: &Query, i: usize) -> Result<Vec<PendingStep>, EngineError> {
        let atom = &query.atoms[i];
        self.range_check(atom)?;
        let mut steps = Vec::new();
        for (clause_idx, clause) in self.program.clauses.iter().enumerate() {
            if clause.head.key() != atom.key() {
                continue;
            }
            let renamed = clause.rename_apart(&mut self.gen);
            if let Some((head_part, atom_part)) = decompose_simply_local_mgu(atom, &renamed.head)? {
                let mgu = head_part.compose(&atom_part);
                steps.push(PendingStep {
                    atom: i,
                    clause: clause_idx,
                    resolvent: resolvent(query, i, &renamed, &mgu),
                    mgu,
                });
            }
        }
        Ok(steps)
    }

    fn plain_steps(&mut self, query: &Query, i: usize) -> Result<Vec<PendingStep>, EngineError> {
        let atom = &query.atoms[i];
        self.range_check(atom)?;
        let mut steps = Vec::new();
        for (clause_idx, clause) in self.program.clauses.iter().enumerate() {
            if clause.head.key() != atom.key() {
                continue;
            }
            let renamed = clause.rename_apart(&mut self.gen);
            if let Some(mgu) = mgu_term_seqs(&atom.args, &renamed.head.args) {
                steps.push(PendingStep {
                    atom: i,
                    clause: clause_idx,
                    resolvent: resolvent(query, i, &renamed, &mgu),
                    mgu,
                });
            }
        }
        Ok(steps)
    }
}

/// The resolvent of `query` with `clause` on atom `i`: the selected
/// atom replaced by the clause body, everything instantiated.
fn resolvent(query: &Query, i: usize, clause: &crate::mode::Clause, mgu: &Subst) -> Query {
    let mut atoms = Vec::with_capacity(query.atoms.len() - 1 + clause.body.len());
    atoms.extend(query.atoms[..i].iter().map(|a| a.apply(mgu)));
    atoms.extend(clause.body.iter().map(|a| a.apply(mgu)));
    atoms.extend(query.atoms[i + 1..].iter().map(|a| a.apply(mgu)));
    Query::new(atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ContractError;
    use crate::frontend::{parse_program, parse_query};
    use crate::term::canonical_key;

    const APPEND: &str = "\
:- mode append(in,in,out).
:- delay append(Xs,_,_) until nonvar(Xs).
append([],Ys,Ys).
append([H|Xs],Ys,[H|Zs]) :- append(Xs,Ys,Zs).
";

    fn tree(src: &str, query: &str, rule: SelectionRule, bounds: Bounds) -> DerivationTree {
        let program = parse_program(src, "test").unwrap();
        let q = parse_query(query, &program).unwrap();
        derive(&program, &q.query, rule, bounds, q.next_var).unwrap()
    }

    #[test]
    fn bounded_input_run_finds_the_one_answer() {
        let t = tree(APPEND, "append([a,b],X,Y)", SelectionRule::IcAny, Bounds::depth(5));
        assert!(!t.truncated);
        let answers = t.answers();
        assert_eq!(answers.len(), 1);
        // The answer instance is append([a,b],X,[a,b|X]) up to renaming.
        let got = t.query.instance_key(&answers[0]);
        let program = parse_program(APPEND, "append").unwrap();
        let expected = parse_query("append([a,b],X,[a,b|X])", &program).unwrap();
        let want = expected.query.instance_key(&Subst::empty());
        assert_eq!(got, want);
    }

    #[test]
    fn committed_rule_builds_a_four_node_chain() {
        let t = tree(APPEND, "append([a,b],X,Y)", SelectionRule::Lic, Bounds::depth(8));
        assert_eq!(t.lnodes(), 4);
        assert_eq!(t.success_nodes().len(), 1);
        assert!(!t.truncated);
        // One child per node along the chain.
        assert!(t.nodes[..3].iter().all(|n| n.children.len() == 1));
    }

    #[test]
    fn unfed_input_deadlocks_at_the_root() {
        for rule in [SelectionRule::IcAny, SelectionRule::Lic, SelectionRule::DelayLeftmost] {
            let t = tree(APPEND, "append(Xs,[a],Ys)", rule, Bounds::depth(8));
            assert_eq!(t.lnodes(), 1, "{rule}");
            assert_eq!(t.nodes[0].status, Some(Status::Deadlock), "{rule}");
            assert!(t.answers().is_empty(), "{rule}");
            assert!(!t.truncated, "{rule}");
        }
    }

    #[test]
    fn unconditional_leftmost_enumerates_and_truncates() {
        let t = tree(APPEND, "append(Xs,[a],Ys)", SelectionRule::Leftmost, Bounds::depth(3));
        // Plain resolution guesses Xs: [], [_], [_,_], ... so both
        // answers up to the bound appear and the tree is truncated.
        assert!(t.truncated);
        assert!(!t.answers().is_empty());
        assert!(!t.with_status(Status::DepthCut).is_empty());
    }

    #[test]
    fn failure_is_reported_only_by_delay_rules() {
        let src = ":- mode p(in).\np(b).\n";
        let program = parse_program(src, "p").unwrap();
        let q = parse_query("p(a)", &program).unwrap();
        for (rule, status) in [
            (SelectionRule::Leftmost, Status::Failure),
            (SelectionRule::DelayAny, Status::Failure),
            (SelectionRule::DelayLeftmost, Status::Failure),
            (SelectionRule::IcAny, Status::Deadlock),
            (SelectionRule::Lic, Status::Deadlock),
        ] {
            let t = derive(&program, &q.query, rule, Bounds::depth(3), q.next_var).unwrap();
            assert_eq!(t.nodes[0].status, Some(status), "{rule}");
        }
    }

    #[test]
    fn fuel_exhaustion_truncates() {
        let t = tree(
            APPEND,
            "append([a,b,c,d],X,Y)",
            SelectionRule::Lic,
            Bounds { depth: 32, fuel: 3 },
        );
        assert_eq!(t.lnodes(), 3);
        assert!(t.truncated);
        assert!(t.answers().is_empty());
    }

    #[test]
    fn partial_answers_collect_every_prefix() {
        let t = tree(APPEND, "append([a,b],X,Y)", SelectionRule::IcAny, Bounds::depth(5));
        let partials = t.partial_answers();
        // Y free, then Y=[a|_], Y=[a,b|_], Y=[a,b|X]: four distinct
        // instances up to variance.
        assert_eq!(partials.len(), 4);
        assert!(partials[0].is_empty());
    }

    #[test]
    fn answers_bind_no_non_output_query_variables() {
        let t = tree(APPEND, "append([a],X,Y)", SelectionRule::IcAny, Bounds::depth(5));
        for answer in t.answers() {
            assert!(answer.get(t.query.atoms[0].args[1].vars()[0]).is_none());
        }
    }

    #[test]
    fn out_of_range_comparison_is_an_error() {
        let src = ":- mode =<(in,in).\n:- mode p(in).\np(X) :- =<(X,1).\n";
        let mut program = parse_program(src, "p").unwrap();
        program.materialize_comparisons(0, 4).unwrap();
        let q = parse_query("p(9)", &program).unwrap();
        let err = derive(&program, &q.query, SelectionRule::Lic, Bounds::depth(4), q.next_var)
            .unwrap_err();
        assert!(matches!(err, EngineError::ComparisonOutOfRange { .. }));
        // In-range numerals resolve against the table.
        let ok = parse_query("p(0)", &program).unwrap();
        let t = derive(&program, &ok.query, SelectionRule::Lic, Bounds::depth(4), ok.next_var)
            .unwrap();
        assert_eq!(t.answers().len(), 1);
    }

    #[test]
    fn non_numeral_comparison_arguments_fail_quietly() {
        let src = ":- mode =<(in,in).\n";
        let mut program = parse_program(src, "cmp").unwrap();
        program.materialize_comparisons(0, 2).unwrap();
        let q = parse_query("=<([],0)", &program).unwrap();
        let t = derive(&program, &q.query, SelectionRule::IcAny, Bounds::depth(2), q.next_var)
            .unwrap();
        assert_eq!(t.nodes[0].status, Some(Status::Deadlock));
    }

    #[test]
    fn non_simply_moded_queries_are_rejected() {
        let program = parse_program(APPEND, "append").unwrap();
        let q = parse_query("append(X,Y,[a])", &program).unwrap();
        let err = derive(&program, &q.query, SelectionRule::IcAny, Bounds::depth(2), q.next_var)
            .unwrap_err();
        assert!(matches!(
            err,
            EngineError::Contract(ContractError::QueryNotSimplyModed(_))
        ));
    }

    #[test]
    fn trace_is_stable_and_complete() {
        let program = parse_program(APPEND, "append").unwrap();
        let q = parse_query("append([a],X,Y)", &program).unwrap();
        let t = derive(&program, &q.query, SelectionRule::Lic, Bounds::depth(5), q.next_var)
            .unwrap();
        let trace = t.trace(&program, &q.var_names);
        let again = derive(&program, &q.query, SelectionRule::Lic, Bounds::depth(5), q.next_var)
            .unwrap()
            .trace(&program, &q.var_names);
        assert_eq!(trace, again);
        assert!(trace.starts_with("0 | - | - | - | append([a],X,Y)\n"));
        assert!(trace.contains("append/3#2"));
        assert!(trace.contains("! Success"));
        assert_eq!(trace.lines().count(), t.lnodes() + t.nodes.iter().filter(|n| n.status.is_some()).count());
    }

    #[test]
    fn input_consuming_steps_never_touch_inputs() {
        let t = tree(APPEND, "append([a,b,c],X,Y)", SelectionRule::IcAny, Bounds::depth(8));
        for node in &t.nodes {
            if let (Some(step), Some(parent)) = (&node.via, node.parent) {
                let selected = &t.nodes[parent].query.atoms[step.atom];
                for input in selected.inputs() {
                    assert_eq!(&step.mgu.apply(input), input);
                }
            }
        }
    }

    #[test]
    fn canonical_keys_identify_variant_answers() {
        let t1 = tree(APPEND, "append([a],Q,R)", SelectionRule::Lic, Bounds::depth(5));
        let t2 = tree(APPEND, "append([a],Xs,Ys)", SelectionRule::Lic, Bounds::depth(5));
        let k1 = t1.query.instance_key(&t1.answers()[0]);
        let k2 = t2.query.instance_key(&t2.answers()[0]);
        assert_eq!(k1, k2);
        let fixed = BTreeSet::new();
        assert_eq!(canonical_key(&k1, &fixed), k1);
    }
}
