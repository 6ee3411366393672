//! Simply-local models of moded programs, stored as schematic atoms.
//!
//! An [`Interpretation`] is a set of [`SchemAtom`]s. Each stored atom's
//! variables carry one of two kinds: an [`VarKind::Any`] variable stands
//! for an arbitrary term (whose own variables are fresh), while a
//! [`VarKind::Frozen`] variable stands for a single fresh variable —
//! distinct from the atom's other frozen variables and never occurring
//! inside the terms its Any variables take. So
//! `append([X0|X1],X2,[X0|F0])` covers every atom whose third argument
//! ends in a variable that appears nowhere else in the atom.
//!
//! [`consequence_step`] fires every clause over the stored atoms: each
//! body atom is matched against a stored schema, the accumulated
//! substitution is validated as simply local for the clause, and the
//! instantiated head is stored back (canonically renumbered, pruned at
//! the configured term depth). [`compute_model`] grows the least such
//! set from nothing — the atoms with successful bounded derivations —
//! while [`compute_partial_model`] first seeds every declared predicate
//! with an unresolved-call atom (inputs Any, outputs Frozen), so the
//! result also covers computations that stop early with calls still
//! pending.
//!
//! Both computations run either symbolically or by ground enumeration
//! over a bounded term universe ([`AtomMode`]); agreement between the
//! two serves as a cross-check in the test suite. [`query_witnesses`]
//! reads answers to a whole query off an interpretation, and
//! [`validate_model`] checks a given interpretation against a program.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use itertools::Itertools;

use crate::error::ContractError;
use crate::frontend::{parse_query, ParseError, Program};
use crate::mode::{
    ensure_program_simply_moded, ensure_query_simply_moded, Clause, ModedAtom, Moding, Query,
};
use crate::simply_local::{
    check_simply_local_clause, check_simply_local_query, SimplyLocalViolation,
};
use crate::subst::Subst;
use crate::term::{canonical_key, Functor, Term, VarGen, VarId, VarNames};

// ---------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------

/// Resource limits for a fixpoint computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixpointBounds {
    /// Maximum number of consequence steps to apply.
    pub max_iterations: usize,
    /// Derived atoms with an argument deeper than this are dropped
    /// (and the result is marked pruned).
    pub term_depth: usize,
    /// Number of distinct pool variables the ground enumeration may
    /// use inside enumerated terms. Ignored in symbolic mode.
    pub fresh_pool: usize,
}

impl FixpointBounds {
    /// Bundles the three limits.
    pub fn new(max_iterations: usize, term_depth: usize, fresh_pool: usize) -> Self {
        FixpointBounds { max_iterations, term_depth, fresh_pool }
    }
}

/// How an interpretation represents and derives atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AtomMode {
    /// Schematic atoms with Any/Frozen variables.
    Symbolic,
    /// Instance-by-instance enumeration over a bounded term universe;
    /// every stored variable is frozen, so the set is closed under
    /// injective renaming and nothing else.
    GroundEnumeration,
}

impl fmt::Display for AtomMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AtomMode::Symbolic => "symbolic",
            AtomMode::GroundEnumeration => "ground",
        })
    }
}

/// The two kinds of variable a stored atom distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarKind {
    /// Stands for an arbitrary term whose variables are fresh.
    Any,
    /// Stands for one fresh variable: distinct from the images of the
    /// atom's other frozen variables, and absent from its Any images.
    Frozen,
}

// ---------------------------------------------------------------------
// Schematic atoms
// ---------------------------------------------------------------------

/// An atom schema: an atom whose variables are canonically numbered
/// `0..k` in first-occurrence order, each classified as Any or Frozen.
///
/// # Examples
///
/// ```
/// use icp_core::frontend::parse_program;
/// use icp_core::semantics::{compute_model, AtomMode, FixpointBounds};
///
/// let p = parse_program(
///     ":- mode append(in,in,out).\nappend([],Ys,Ys).\nappend([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).",
///     "append",
/// )
/// .unwrap();
/// let m = compute_model(&p, FixpointBounds::new(4, 2, 0), AtomMode::Symbolic).unwrap();
/// let shown: Vec<String> = m.atoms.iter().map(|a| a.to_string()).collect();
/// assert!(shown.contains(&"append([],X0,X0)".to_string()));
/// assert!(shown.contains(&"append([X0],X1,[X0|X1])".to_string()));
/// ```
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SchemAtom {
    /// The underlying atom; its variable identifiers are `0..kinds.len()`.
    pub atom: ModedAtom,
    /// Kind of each canonical variable.
    pub kinds: Vec<VarKind>,
}

impl SchemAtom {
    /// The predicate identity: name and arity.
    pub fn key(&self) -> (Functor, usize) {
        self.atom.key()
    }

    /// Number of distinct variables in the schema.
    pub fn var_count(&self) -> usize {
        self.kinds.len()
    }

    /// Display names: Any variables as `X0,X1,…`, frozen ones as `F0,F1,…`.
    fn names(&self) -> VarNames {
        let mut names = BTreeMap::new();
        let (mut any, mut frozen) = (0usize, 0usize);
        for (i, kind) in self.kinds.iter().enumerate() {
            let name = match kind {
                VarKind::Any => {
                    any += 1;
                    format!("X{}", any - 1)
                }
                VarKind::Frozen => {
                    frozen += 1;
                    format!("F{}", frozen - 1)
                }
            };
            names.insert(i as VarId, name);
        }
        names
    }

    /// Deepest argument of the schema (variables count as depth zero).
    fn arg_depth(&self) -> usize {
        self.atom.args.iter().map(Term::depth).max().unwrap_or(0)
    }
}

impl fmt::Display for SchemAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = self.names();
        write!(f, "{}", self.atom.display(&names))
    }
}

impl fmt::Debug for SchemAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Renumbers the variables of `args` to `0..k` in first-occurrence
/// order, classifying each through `kind_of`.
fn canonicalize_atom(
    pred: Functor,
    args: Vec<Term>,
    mode: Arc<[Moding]>,
    kind_of: &mut dyn FnMut(VarId) -> VarKind,
) -> SchemAtom {
    fn renumber(
        t: &Term,
        map: &mut BTreeMap<VarId, VarId>,
        kinds: &mut Vec<VarKind>,
        kind_of: &mut dyn FnMut(VarId) -> VarKind,
    ) -> Term {
        match t {
            Term::Var(v) => match map.get(v) {
                Some(id) => Term::Var(*id),
                None => {
                    let id = kinds.len() as VarId;
                    kinds.push(kind_of(*v));
                    map.insert(*v, id);
                    Term::Var(id)
                }
            },
            Term::App(f, sub) => Term::App(
                f.clone(),
                sub.iter().map(|s| renumber(s, map, kinds, kind_of)).collect(),
            ),
        }
    }

    let mut map = BTreeMap::new();
    let mut kinds = Vec::new();
    let new_args: Vec<Term> =
        args.iter().map(|t| renumber(t, &mut map, &mut kinds, kind_of)).collect();
    SchemAtom { atom: ModedAtom::new(pred, new_args, mode), kinds }
}

// ---------------------------------------------------------------------
// Interpretations
// ---------------------------------------------------------------------

/// A set of schematic atoms together with how it was produced.
#[derive(Clone, PartialEq, Eq)]
pub struct Interpretation {
    /// The stored atom schemas.
    pub atoms: BTreeSet<SchemAtom>,
    /// True if the set was seeded with an unresolved-call atom per
    /// predicate (a partial model) rather than grown from the empty
    /// set (a success model).
    pub seeded: bool,
    /// The bounds the computation ran under.
    pub bounds: FixpointBounds,
    /// Representation mode.
    pub mode: AtomMode,
    /// True if the final consequence step added nothing, i.e. the set
    /// is a fixpoint within the depth bound.
    pub fixpoint: bool,
    /// True if some derived atom was dropped for exceeding the depth
    /// bound.
    pub pruned: bool,
}

impl Interpretation {
    /// Number of stored atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// True if nothing is stored.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Checks whether `atom` is an instance of some stored schema,
    /// treating the atom's own variables as fixed. On success returns
    /// the witness assignment for the matched schema's canonical
    /// variables (unconstrained Any variables are omitted).
    ///
    /// # Examples
    ///
    /// ```
    /// use icp_core::frontend::{parse_program, parse_query};
    /// use icp_core::semantics::{compute_model, AtomMode, FixpointBounds};
    ///
    /// let p = parse_program(
    ///     ":- mode append(in,in,out).\nappend([],Ys,Ys).\nappend([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).",
    ///     "append",
    /// )
    /// .unwrap();
    /// let m = compute_model(&p, FixpointBounds::new(4, 2, 0), AtomMode::Symbolic).unwrap();
    /// let yes = parse_query("append([a],[b],[a,b])", &p).unwrap();
    /// let no = parse_query("append([a],[b],[b,a])", &p).unwrap();
    /// assert!(m.member(&yes.query.atoms[0]).is_some());
    /// assert!(m.member(&no.query.atoms[0]).is_none());
    /// ```
    pub fn member(&self, atom: &ModedAtom) -> Option<Subst> {
        let mut gen = VarGen::new();
        for t in &atom.args {
            gen.avoid_term(t);
        }
        for s in &self.atoms {
            gen.avoid(s.var_count() as VarId);
        }
        let mut m = Matcher::new(gen);
        for v in atom.var_set() {
            m.register(v, MKind::Rigid);
        }
        let candidates: Vec<&SchemAtom> =
            self.atoms.iter().filter(|s| s.key() == atom.key()).collect();
        for schema in candidates {
            let snap = m.snapshot();
            let (inst, fresh_ids) = m.instantiate(schema);
            let mut ok = true;
            for (a, b) in atom.args.iter().zip(inst.iter()) {
                if !m.unify(a, b) {
                    ok = false;
                    break;
                }
            }
            if ok && m.group_checks() {
                let witness = Subst::from_bindings(fresh_ids.iter().enumerate().filter_map(
                    |(i, id)| {
                        let image = m.resolve(&Term::var(*id));
                        (image != Term::var(*id)).then_some((i as VarId, image))
                    },
                ));
                return Some(witness);
            }
            m.rollback(snap);
        }
        None
    }

    /// Serializes the interpretation: `#`-prefixed header lines for the
    /// bounds and flags, then one canonical atom per line, sorted.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "# bounds: iters={} depth={} pool={}",
            self.bounds.max_iterations, self.bounds.term_depth, self.bounds.fresh_pool
        );
        let _ = writeln!(out, "# fixpoint: {}", self.fixpoint);
        let _ = writeln!(out, "# seeded: {}", self.seeded);
        let _ = writeln!(out, "# mode: {}", self.mode);
        let _ = writeln!(out, "# pruned: {}", self.pruned);
        let mut lines: Vec<String> = self.atoms.iter().map(|a| a.to_string()).collect();
        lines.sort();
        for line in lines {
            let _ = writeln!(out, "{line}");
        }
        out
    }

    /// Enumerates every instance of the stored atoms whose Any
    /// variables take terms from `universe`, keeping those whose
    /// arguments stay within the depth bound, as canonical keys (one
    /// wrapped term per atom, variables renumbered by first
    /// occurrence). Frozen variables become fresh distinct variables.
    pub fn instance_keys(&self, universe: &[Term]) -> BTreeSet<Term> {
        let mut gen = VarGen::new();
        for t in universe {
            gen.avoid_term(t);
        }
        for s in &self.atoms {
            gen.avoid(s.var_count() as VarId);
        }
        let base = gen.peek();
        let empty = BTreeSet::new();

        let mut out = BTreeSet::new();
        for schema in &self.atoms {
            let budgets = var_depth_budgets(&schema.atom.args, self.bounds.term_depth);
            let any_vars: Vec<VarId> = (0..schema.var_count() as VarId)
                .filter(|v| schema.kinds[*v as usize] == VarKind::Any)
                .collect();
            let frozen_bindings: Vec<(VarId, Term)> = (0..schema.var_count() as VarId)
                .filter(|v| schema.kinds[*v as usize] == VarKind::Frozen)
                .enumerate()
                .map(|(j, v)| (v, Term::var(base + j as VarId)))
                .collect();

            let pools: Vec<Vec<&Term>> = any_vars
                .iter()
                .map(|v| {
                    let budget = budgets.get(v).copied().unwrap_or(self.bounds.term_depth);
                    universe.iter().filter(|t| t.depth() <= budget).collect()
                })
                .collect();
            if pools.iter().any(Vec::is_empty) {
                continue;
            }

            let mut push = |assignment: &[(VarId, Term)]| {
                let sub = Subst::from_bindings(
                    frozen_bindings.iter().cloned().chain(assignment.iter().cloned()),
                );
                let args = sub.apply_all(&schema.atom.args);
                if args.iter().map(Term::depth).max().unwrap_or(0) <= self.bounds.term_depth {
                    let wrapped = Term::App(schema.atom.pred.clone(), args);
                    let mut key = canonical_key(&[wrapped], &empty);
                    out.insert(key.pop().expect("one wrapped term in, one key out"));
                }
            };

            if any_vars.is_empty() {
                push(&[]);
            } else {
                for combo in pools.iter().map(|p| p.iter()).multi_cartesian_product() {
                    let assignment: Vec<(VarId, Term)> = any_vars
                        .iter()
                        .zip(combo)
                        .map(|(v, t)| (*v, (**t).clone()))
                        .collect();
                    push(&assignment);
                }
            }
        }
        out
    }
}

impl fmt::Debug for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Interpretation({} atoms, seeded={}, fixpoint={}, pruned={}, {})",
            self.atoms.len(),
            self.seeded,
            self.fixpoint,
            self.pruned,
            self.mode
        )
    }
}

/// The deepest each variable's image may be without pushing some
/// argument past `limit`: a variable sitting under `j` constructors
/// can carry a term of depth at most `limit - j`.
fn var_depth_budgets(args: &[Term], limit: usize) -> BTreeMap<VarId, usize> {
    fn walk(t: &Term, under: usize, limit: usize, out: &mut BTreeMap<VarId, usize>) {
        match t {
            Term::Var(v) => {
                let budget = limit.saturating_sub(under);
                out.entry(*v).and_modify(|b| *b = (*b).min(budget)).or_insert(budget);
            }
            Term::App(_, sub) => {
                for s in sub {
                    walk(s, under + 1, limit, out);
                }
            }
        }
    }
    let mut out = BTreeMap::new();
    for arg in args {
        walk(arg, 0, limit, &mut out);
    }
    out
}

// ---------------------------------------------------------------------
// Term universes
// ---------------------------------------------------------------------

/// Function symbols (name, arity) occurring in the program's clauses.
pub fn program_signature(program: &Program) -> BTreeSet<(Functor, usize)> {
    fn collect(t: &Term, out: &mut BTreeSet<(Functor, usize)>) {
        if let Term::App(f, args) = t {
            out.insert((f.clone(), args.len()));
            for a in args {
                collect(a, out);
            }
        }
    }
    let mut out = BTreeSet::new();
    for clause in &program.clauses {
        for t in &clause.head.args {
            collect(t, &mut out);
        }
        for atom in &clause.body {
            for t in &atom.args {
                collect(t, &mut out);
            }
        }
    }
    out
}

/// Distinct variable identifiers for the enumeration pool, chosen
/// above every variable of the program.
pub fn pool_vars(program: &Program, n: usize) -> Vec<VarId> {
    (0..n as VarId).map(|i| program.next_var + i).collect()
}

/// All terms of depth at most `depth` over the program's function
/// symbols plus the given pool variables, in a deterministic order.
pub fn universe_terms(program: &Program, depth: usize, pool: &[VarId]) -> Vec<Term> {
    let sig = program_signature(program);
    let mut all: BTreeSet<Term> = pool.iter().map(|v| Term::var(*v)).collect();
    for (f, n) in &sig {
        if *n == 0 {
            all.insert(Term::App(f.clone(), Vec::new()));
        }
    }
    for _ in 0..depth {
        let snapshot: Vec<Term> = all.iter().cloned().collect();
        for (f, n) in &sig {
            if *n == 0 {
                continue;
            }
            for combo in (0..*n).map(|_| snapshot.iter()).multi_cartesian_product() {
                all.insert(Term::App(f.clone(), combo.into_iter().cloned().collect()));
            }
        }
    }
    all.into_iter().collect()
}

// ---------------------------------------------------------------------
// The kind-aware matcher
// ---------------------------------------------------------------------

/// Matcher-internal classification of every variable in play.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MKind {
    /// May not be bound: instance variables of a membership probe,
    /// pool variables, and clause variables outside every stage.
    Rigid,
    /// A head input variable — bindable by the head stage.
    HeadFlex,
    /// An output variable of body (or query) atom `i` — bindable by
    /// that stage.
    OutFlex(usize),
    /// A stored Any variable; `Some(g)` ties it to the instantiation
    /// group it came from, `None` marks a created equality witness.
    Any(Option<usize>),
    /// A stored frozen variable of instantiation group `g`.
    Frozen(usize),
}

/// The stored variables introduced by one schema instantiation.
struct GroupInfo {
    any_vars: Vec<VarId>,
    frozen_vars: Vec<VarId>,
}

enum TrailEntry {
    Bound(VarId),
    KindAdded(VarId),
}

struct Snapshot {
    trail: usize,
    groups: usize,
}

/// Unification engine that knows which side of each equation may bend:
/// flexible clause variables bind to whatever stands opposite, stored
/// Any variables absorb structure, frozen and rigid variables only
/// ever alias other variables. Bindings are triangular and undone by
/// trail rollback.
struct Matcher {
    kinds: BTreeMap<VarId, MKind>,
    bindings: BTreeMap<VarId, Term>,
    groups: Vec<GroupInfo>,
    trail: Vec<TrailEntry>,
    gen: VarGen,
}

impl Matcher {
    fn new(gen: VarGen) -> Self {
        Matcher {
            kinds: BTreeMap::new(),
            bindings: BTreeMap::new(),
            groups: Vec::new(),
            trail: Vec::new(),
            gen,
        }
    }

    /// Registers a scope variable's kind for the whole search.
    fn register(&mut self, v: VarId, kind: MKind) {
        self.kinds.insert(v, kind);
    }

    /// Registers a kind that must be undone on rollback.
    fn add_kind(&mut self, v: VarId, kind: MKind) {
        self.kinds.insert(v, kind);
        self.trail.push(TrailEntry::KindAdded(v));
    }

    fn kind(&self, v: VarId) -> MKind {
        *self.kinds.get(&v).expect("every variable in play has a registered kind")
    }

    fn bind(&mut self, v: VarId, t: Term) {
        debug_assert!(!self.bindings.contains_key(&v), "rebinding {v}");
        self.bindings.insert(v, t);
        self.trail.push(TrailEntry::Bound(v));
    }

    fn snapshot(&self) -> Snapshot {
        Snapshot { trail: self.trail.len(), groups: self.groups.len() }
    }

    fn rollback(&mut self, snap: Snapshot) {
        while self.trail.len() > snap.trail {
            match self.trail.pop().expect("trail length checked") {
                TrailEntry::Bound(v) => {
                    self.bindings.remove(&v);
                }
                TrailEntry::KindAdded(v) => {
                    self.kinds.remove(&v);
                }
            }
        }
        self.groups.truncate(snap.groups);
    }

    /// Follows variable bindings to the representative term.
    fn walk(&self, t: &Term) -> Term {
        let mut cur = t.clone();
        loop {
            match cur {
                Term::Var(v) => match self.bindings.get(&v) {
                    Some(next) => cur = next.clone(),
                    None => return Term::Var(v),
                },
                other => return other,
            }
        }
    }

    /// Fully applies the current bindings to a term.
    fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::Var(v) => Term::Var(v),
            Term::App(f, args) => {
                Term::App(f, args.iter().map(|a| self.resolve(a)).collect())
            }
        }
    }

    fn occurs(&self, x: VarId, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(v) => v == x,
            Term::App(_, args) => args.iter().any(|a| self.occurs(x, a)),
        }
    }

    fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a);
        let b = self.walk(b);
        match (a, b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), Term::Var(y)) => self.unify_vars(x, y),
            (Term::Var(x), t) | (t, Term::Var(x)) => self.unify_var_app(x, t),
            (Term::App(f, xs), Term::App(g, ys)) => {
                if f != g || xs.len() != ys.len() {
                    return false;
                }
                for (p, q) in xs.iter().zip(ys.iter()) {
                    if !self.unify(p, q) {
                        return false;
                    }
                }
                true
            }
        }
    }

    fn unify_vars(&mut self, x: VarId, y: VarId) -> bool {
        use MKind::*;
        match (self.kind(x), self.kind(y)) {
            // Two flexible variables: both take the same fresh witness,
            // leaving the staged check to judge where it may be fresh.
            (HeadFlex | OutFlex(_), HeadFlex | OutFlex(_)) => {
                let f = self.gen.fresh();
                self.add_kind(f, Any(None));
                self.bind(x, Term::var(f));
                self.bind(y, Term::var(f));
                true
            }
            // A flexible variable takes whatever stands opposite.
            (HeadFlex | OutFlex(_), _) => {
                self.bind(x, Term::var(y));
                true
            }
            (_, HeadFlex | OutFlex(_)) => {
                self.bind(y, Term::var(x));
                true
            }
            // Rigid variables behave like distinct constants.
            (Rigid, Rigid) => false,
            (Rigid, Any(_) | Frozen(_)) => {
                self.bind(y, Term::var(x));
                true
            }
            (Any(_) | Frozen(_), Rigid) => {
                self.bind(x, Term::var(y));
                true
            }
            (Any(_), Any(_)) => {
                if x < y {
                    self.bind(y, Term::var(x));
                } else {
                    self.bind(x, Term::var(y));
                }
                true
            }
            // A frozen variable covers only variables, so an Any
            // variable meeting it narrows down to it.
            (Any(_), Frozen(_)) => {
                self.bind(x, Term::var(y));
                true
            }
            (Frozen(_), Any(_)) => {
                self.bind(y, Term::var(x));
                true
            }
            // Distinct frozen variables of one atom must stay distinct.
            (Frozen(gx), Frozen(gy)) => {
                if gx == gy {
                    return false;
                }
                if x < y {
                    self.bind(y, Term::var(x));
                } else {
                    self.bind(x, Term::var(y));
                }
                true
            }
        }
    }

    fn unify_var_app(&mut self, x: VarId, t: Term) -> bool {
        match self.kind(x) {
            MKind::Rigid | MKind::Frozen(_) => false,
            MKind::HeadFlex | MKind::OutFlex(_) | MKind::Any(_) => {
                if self.occurs(x, &t) {
                    return false;
                }
                self.bind(x, t);
                true
            }
        }
    }

    /// Renames a stored schema apart, registering its variables under
    /// a new instantiation group. Returns the renamed argument terms
    /// and the fresh identifier chosen for each canonical variable.
    fn instantiate(&mut self, schema: &SchemAtom) -> (Vec<Term>, Vec<VarId>) {
        let group = self.groups.len();
        let mut info = GroupInfo { any_vars: Vec::new(), frozen_vars: Vec::new() };
        let mut fresh_ids = Vec::with_capacity(schema.var_count());
        for kind in &schema.kinds {
            let v = self.gen.fresh();
            fresh_ids.push(v);
            match kind {
                VarKind::Any => {
                    self.add_kind(v, MKind::Any(Some(group)));
                    info.any_vars.push(v);
                }
                VarKind::Frozen => {
                    self.add_kind(v, MKind::Frozen(group));
                    info.frozen_vars.push(v);
                }
            }
        }
        self.groups.push(info);
        let renaming = Subst::from_bindings(
            fresh_ids.iter().enumerate().map(|(i, v)| (i as VarId, Term::var(*v))),
        );
        (renaming.apply_all(&schema.atom.args), fresh_ids)
    }

    /// Checks every instantiation group's frozen constraints under the
    /// current bindings: each frozen variable must still denote a
    /// variable, distinct frozen variables of one group must denote
    /// distinct variables, and none may occur inside the group's Any
    /// images.
    fn group_checks(&self) -> bool {
        for info in &self.groups {
            let mut frozen_ids = BTreeSet::new();
            for f in &info.frozen_vars {
                match self.resolve(&Term::var(*f)) {
                    Term::Var(x) => {
                        if !frozen_ids.insert(x) {
                            return false;
                        }
                    }
                    Term::App(..) => return false,
                }
            }
            if frozen_ids.is_empty() {
                continue;
            }
            for a in &info.any_vars {
                let image_vars = self.resolve(&Term::var(*a)).var_set();
                if !frozen_ids.is_disjoint(&image_vars) {
                    return false;
                }
            }
        }
        true
    }

    /// The current bindings restricted to `scope`, fully resolved.
    fn resolved_theta(&self, scope: &BTreeSet<VarId>) -> Subst {
        Subst::from_bindings(scope.iter().filter_map(|v| {
            let image = self.resolve(&Term::var(*v));
            (image != Term::var(*v)).then_some((*v, image))
        }))
    }

    /// True if the matcher may still bind `v` to patch up a staged
    /// check: an unbound head-input or output variable.
    fn repairable(&self, v: VarId) -> bool {
        !self.bindings.contains_key(&v)
            && matches!(self.kinds.get(&v), Some(MKind::HeadFlex | MKind::OutFlex(_)))
    }

    /// Validates a complete match: the resolved substitution must pass
    /// the staged locality check (unbound flexible offenders are bound
    /// to fresh witnesses and retried) and every instantiation group's
    /// frozen constraints must hold. Returns the substitution over
    /// `scope` on success.
    fn finalize(
        &mut self,
        scope: &BTreeSet<VarId>,
        check: &dyn Fn(&Subst) -> Result<(), SimplyLocalViolation>,
    ) -> Option<Subst> {
        for _ in 0..=scope.len() {
            let theta = self.resolved_theta(scope);
            match check(&theta) {
                Ok(()) => return self.group_checks().then_some(theta),
                Err(SimplyLocalViolation::RangeNotAllowed { var, .. })
                    if self.repairable(var) =>
                {
                    let f = self.gen.fresh();
                    self.add_kind(f, MKind::Any(None));
                    self.bind(var, Term::var(f));
                }
                Err(_) => return None,
            }
        }
        None
    }
}

/// Stored schemas bucketed by predicate key, so the body-matching
/// search can fetch its candidates without rescanning the whole set.
type StoredIndex<'a> = BTreeMap<(Functor, usize), Vec<&'a SchemAtom>>;

fn index_stored(interp: &Interpretation) -> StoredIndex<'_> {
    let mut index: StoredIndex<'_> = BTreeMap::new();
    for s in &interp.atoms {
        index.entry(s.key()).or_default().push(s);
    }
    index
}

/// Depth-first search assigning a stored schema to each of
/// `atoms[..upto]`, calling `sink` on every complete assignment that
/// unifies. Candidates for position `i` come from `domains[i]`, so a
/// caller can restrict individual positions (the fixpoint loop uses
/// this to skip combinations it has already fired). The matcher is
/// restored between alternatives.
fn search_stored(
    m: &mut Matcher,
    domains: &[&StoredIndex<'_>],
    atoms: &[ModedAtom],
    pos: usize,
    upto: usize,
    sink: &mut dyn FnMut(&mut Matcher),
) {
    if pos >= upto {
        sink(m);
        return;
    }
    let candidates: &[&SchemAtom] =
        domains[pos].get(&atoms[pos].key()).map(Vec::as_slice).unwrap_or(&[]);
    for schema in candidates {
        let snap = m.snapshot();
        let (inst, _) = m.instantiate(schema);
        let mut ok = true;
        for (a, b) in atoms[pos].args.iter().zip(inst.iter()) {
            if !m.unify(a, b) {
                ok = false;
                break;
            }
        }
        if ok {
            search_stored(m, domains, atoms, pos + 1, upto, sink);
        }
        m.rollback(snap);
    }
}

/// Registers the matcher kinds for a clause: head input variables are
/// head-flexible, each body atom's output variables belong to that
/// atom's stage, and every other clause variable is rigid.
fn register_clause_kinds(m: &mut Matcher, clause: &Clause) {
    let head_inputs = clause.head.input_vars();
    let mut out_stage: BTreeMap<VarId, usize> = BTreeMap::new();
    for (i, atom) in clause.body.iter().enumerate() {
        for v in atom.output_vars() {
            out_stage.insert(v, i);
        }
    }
    for v in clause.var_set() {
        let kind = if let Some(stage) = out_stage.get(&v) {
            MKind::OutFlex(*stage)
        } else if head_inputs.contains(&v) {
            MKind::HeadFlex
        } else {
            MKind::Rigid
        };
        m.register(v, kind);
    }
}

/// Registers the matcher kinds for a query: each atom's output
/// variables belong to that atom's stage, everything else is rigid.
fn register_query_kinds(m: &mut Matcher, query: &Query) {
    let mut out_stage: BTreeMap<VarId, usize> = BTreeMap::new();
    for (i, atom) in query.atoms.iter().enumerate() {
        for v in atom.output_vars() {
            out_stage.insert(v, i);
        }
    }
    for v in query.var_set() {
        let kind = match out_stage.get(&v) {
            Some(stage) => MKind::OutFlex(*stage),
            None => MKind::Rigid,
        };
        m.register(v, kind);
    }
}

// ---------------------------------------------------------------------
// The consequence step and its fixpoints
// ---------------------------------------------------------------------

/// Seed atoms for a partial model: one atom per declared predicate
/// whose inputs are Any and whose outputs are Frozen — the shape of a
/// call that has been selected but not yet resolved. In ground mode
/// the inputs are enumerated over the term universe instead.
pub fn seed_atoms(program: &Program, bounds: FixpointBounds, mode: AtomMode) -> BTreeSet<SchemAtom> {
    let mut out = BTreeSet::new();
    match mode {
        AtomMode::Symbolic => {
            for ((pred, arity), m) in &program.modes {
                let args: Vec<Term> = (0..*arity).map(|i| Term::var(i as VarId)).collect();
                let kinds: Vec<VarKind> = m
                    .iter()
                    .map(|md| match md {
                        Moding::In => VarKind::Any,
                        Moding::Out => VarKind::Frozen,
                    })
                    .collect();
                out.insert(SchemAtom {
                    atom: ModedAtom::new(pred.clone(), args, Arc::clone(m)),
                    kinds,
                });
            }
        }
        AtomMode::GroundEnumeration => {
            let pool = pool_vars(program, bounds.fresh_pool);
            let universe = universe_terms(program, bounds.term_depth, &pool);
            let mut gen = VarGen::new();
            for t in &universe {
                gen.avoid_term(t);
            }
            for ((pred, arity), m) in &program.modes {
                let in_pos: Vec<usize> = m
                    .iter()
                    .enumerate()
                    .filter(|(_, md)| **md == Moding::In)
                    .map(|(i, _)| i)
                    .collect();
                for combo in tuples(&universe, in_pos.len()) {
                    let mut gen = gen.clone();
                    let mut next_in = combo.into_iter();
                    let args: Vec<Term> = m
                        .iter()
                        .enumerate()
                        .map(|(i, md)| match md {
                            Moding::In => next_in.next().expect("one term per input").clone(),
                            Moding::Out => {
                                let _ = i;
                                Term::var(gen.fresh())
                            }
                        })
                        .collect();
                    out.insert(canonicalize_atom(
                        pred.clone(),
                        args,
                        Arc::clone(m),
                        &mut |_| VarKind::Frozen,
                    ));
                }
                let _ = arity;
            }
        }
    }
    out
}

/// Iterator over all `k`-tuples drawn from `universe`.
fn tuples<'a>(universe: &'a [Term], k: usize) -> Box<dyn Iterator<Item = Vec<&'a Term>> + 'a> {
    if k == 0 {
        Box::new(std::iter::once(Vec::new()))
    } else {
        Box::new((0..k).map(|_| universe.iter()).multi_cartesian_product())
    }
}

/// Fires one clause over the stored atoms, sending every derived head
/// schema through `sink`. `presets` pre-binds head input variables
/// (ground enumeration); symbolic mode passes none.
fn consequences_of_clause(
    clause: &Clause,
    presets: &[(VarId, Term)],
    domains: &[&StoredIndex<'_>],
    mode: AtomMode,
    gen_base: VarId,
    sink: &mut dyn FnMut(SchemAtom),
) {
    let mut m = Matcher::new(VarGen::starting_at(gen_base));
    register_clause_kinds(&mut m, clause);
    for (v, t) in presets {
        for w in t.var_set() {
            if !m.kinds.contains_key(&w) {
                m.register(w, MKind::Rigid);
            }
        }
        m.bind(*v, t.clone());
    }
    let scope = clause.var_set();
    let check = |theta: &Subst| check_simply_local_clause(theta, clause).map(|_| ());
    search_stored(&mut m, domains, &clause.body, 0, clause.body.len(), &mut |m| {
        if m.finalize(&scope, &check).is_some() {
            let args: Vec<Term> = clause.head.args.iter().map(|t| m.resolve(t)).collect();
            let kinds = &m.kinds;
            let schema = canonicalize_atom(
                clause.head.pred.clone(),
                args,
                Arc::clone(&clause.head.mode),
                &mut |v| harvest_kind(kinds, v, mode),
            );
            sink(schema);
        }
    });
}

/// Classifies a variable surviving into a derived head. Stored kinds
/// pass through; a rigid clause variable really is a single free
/// variable of the derived atom, so it freezes; anything still
/// unconstrained ranges over arbitrary terms. Ground enumeration
/// stores plain atoms, where every variable freezes.
fn harvest_kind(kinds: &BTreeMap<VarId, MKind>, v: VarId, mode: AtomMode) -> VarKind {
    if mode == AtomMode::GroundEnumeration {
        return VarKind::Frozen;
    }
    match kinds.get(&v) {
        Some(MKind::Frozen(_)) | Some(MKind::Rigid) => VarKind::Frozen,
        _ => VarKind::Any,
    }
}

/// One application of the simply-local consequence step: every head
/// schema derivable from `interp` by firing a clause whose body atoms
/// all match stored schemas under a staged-local substitution.
/// Returns the derived schemas within the depth bound, plus a flag
/// reporting whether any were pruned away.
pub fn consequence_step(
    program: &Program,
    interp: &Interpretation,
) -> Result<(BTreeSet<SchemAtom>, bool), ContractError> {
    step_over(program, interp, None)
}

/// The consequence step, optionally restricted to clause firings that
/// use at least one atom from `delta`. A firing whose body atoms all
/// predate `delta` produced its head when those atoms were new, so the
/// fixpoint loop passes the previous round's additions here and skips
/// the rest of the join. `None` fires everything.
fn step_over(
    program: &Program,
    interp: &Interpretation,
    delta: Option<&BTreeSet<SchemAtom>>,
) -> Result<(BTreeSet<SchemAtom>, bool), ContractError> {
    ensure_program_simply_moded(&program.clauses)?;
    let bounds = interp.bounds;
    let pool = match interp.mode {
        AtomMode::Symbolic => Vec::new(),
        AtomMode::GroundEnumeration => pool_vars(program, bounds.fresh_pool),
    };
    let universe = match interp.mode {
        AtomMode::Symbolic => Vec::new(),
        AtomMode::GroundEnumeration => universe_terms(program, bounds.term_depth, &pool),
    };
    let mut gen = VarGen::starting_at(program.next_var);
    gen.avoid_all(pool.iter().copied());
    for s in &interp.atoms {
        gen.avoid(s.var_count() as VarId);
    }
    let gen_base = gen.peek();

    let mut derived = BTreeSet::new();
    let mut pruned = false;
    let mut sink = |schema: SchemAtom| {
        if schema.arg_depth() <= bounds.term_depth {
            derived.insert(schema);
        } else {
            pruned = true;
        }
    };
    let all = index_stored(interp);
    let split = delta.map(|d| {
        let mut old: StoredIndex<'_> = BTreeMap::new();
        let mut new: StoredIndex<'_> = BTreeMap::new();
        for s in &interp.atoms {
            let bucket = if d.contains(s) { &mut new } else { &mut old };
            bucket.entry(s.key()).or_default().push(s);
        }
        (old, new)
    });
    for clause in &program.clauses {
        // Each pass pins the first delta-drawn body position to j, so
        // every mixed combination is visited exactly once; without a
        // delta there is a single pass over the full join.
        let passes = match &split {
            None => vec![vec![&all; clause.body.len()]],
            Some((old, new)) => (0..clause.body.len())
                .map(|j| {
                    (0..clause.body.len())
                        .map(|i| match i.cmp(&j) {
                            std::cmp::Ordering::Less => old,
                            std::cmp::Ordering::Equal => new,
                            std::cmp::Ordering::Greater => &all,
                        })
                        .collect()
                })
                .collect(),
        };
        for domains in &passes {
            match interp.mode {
                AtomMode::Symbolic => {
                    consequences_of_clause(clause, &[], domains, interp.mode, gen_base, &mut sink);
                }
                AtomMode::GroundEnumeration => {
                    let head_inputs: Vec<VarId> = clause.head.input_vars().into_iter().collect();
                    for combo in tuples(&universe, head_inputs.len()) {
                        let presets: Vec<(VarId, Term)> = head_inputs
                            .iter()
                            .zip(combo)
                            .map(|(v, t)| (*v, t.clone()))
                            .collect();
                        consequences_of_clause(
                            clause,
                            &presets,
                            domains,
                            interp.mode,
                            gen_base,
                            &mut sink,
                        );
                    }
                }
            }
        }
    }
    Ok((derived, pruned))
}

fn compute(
    program: &Program,
    bounds: FixpointBounds,
    mode: AtomMode,
    seeded: bool,
) -> Result<Interpretation, ContractError> {
    ensure_program_simply_moded(&program.clauses)?;
    let atoms = if seeded { seed_atoms(program, bounds, mode) } else { BTreeSet::new() };
    let mut interp =
        Interpretation { atoms, seeded, bounds, mode, fixpoint: false, pruned: false };
    let mut delta: Option<BTreeSet<SchemAtom>> = None;
    for _ in 0..bounds.max_iterations {
        let (derived, pruned) = step_over(program, &interp, delta.as_ref())?;
        interp.pruned |= pruned;
        let fresh: BTreeSet<SchemAtom> =
            derived.into_iter().filter(|a| !interp.atoms.contains(a)).collect();
        if fresh.is_empty() {
            interp.fixpoint = true;
            break;
        }
        interp.atoms.extend(fresh.iter().cloned());
        delta = Some(fresh);
    }
    Ok(interp)
}

/// The least set of atom schemas closed under the consequence step,
/// grown from the empty set: the success semantics of the program,
/// within the given bounds. The result's `fixpoint` flag reports
/// whether the iteration converged before the bound ran out.
pub fn compute_model(
    program: &Program,
    bounds: FixpointBounds,
    mode: AtomMode,
) -> Result<Interpretation, ContractError> {
    compute(program, bounds, mode, false)
}

/// Like [`compute_model`], but seeded with an unresolved-call atom per
/// declared predicate, so the closure also covers partial computations
/// whose pending calls never resolve.
pub fn compute_partial_model(
    program: &Program,
    bounds: FixpointBounds,
    mode: AtomMode,
) -> Result<Interpretation, ContractError> {
    compute(program, bounds, mode, true)
}

// ---------------------------------------------------------------------
// Query witnesses
// ---------------------------------------------------------------------

/// Answers read off an interpretation for a whole query.
#[derive(Debug, Clone)]
pub struct WitnessSet {
    /// One substitution over the query's variables per answer class,
    /// deduplicated up to renaming of the instantiated query.
    pub witnesses: Vec<Subst>,
    /// True if the interpretation had reached its fixpoint, so the
    /// witnesses are complete within the bounds rather than a sample.
    pub certified: bool,
}

/// Matches every atom of `query` against the stored schemas and
/// validates the combined substitution as simply local for the query.
/// Against a success model the witnesses mirror successful
/// derivations; against a partial model they also cover derivations
/// that stop with calls pending — the seeds absorb unresolved calls,
/// which is how the empty answer shows up for a query that can only
/// deadlock.
///
/// # Examples
///
/// ```
/// use icp_core::frontend::{parse_program, parse_query};
/// use icp_core::semantics::{compute_model, query_witnesses, AtomMode, FixpointBounds};
///
/// let p = parse_program(
///     ":- mode append(in,in,out).\nappend([],Ys,Ys).\nappend([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).",
///     "append",
/// )
/// .unwrap();
/// let m = compute_model(&p, FixpointBounds::new(5, 3, 0), AtomMode::Symbolic).unwrap();
/// let q = parse_query("append([a],[b],Z)", &p).unwrap();
/// let ws = query_witnesses(&q.query, &m).unwrap();
/// assert_eq!(ws.witnesses.len(), 1);
/// assert!(ws.certified);
/// ```
pub fn query_witnesses(
    query: &Query,
    interp: &Interpretation,
) -> Result<WitnessSet, ContractError> {
    ensure_query_simply_moded(query)?;
    let mut gen = VarGen::new();
    gen.avoid_all(query.var_set());
    for s in &interp.atoms {
        gen.avoid(s.var_count() as VarId);
    }
    let mut m = Matcher::new(gen);
    register_query_kinds(&mut m, query);
    let scope = query.var_set();
    let check = |theta: &Subst| check_simply_local_query(theta, query).map(|_| ());

    let mut seen = BTreeSet::new();
    let mut witnesses = Vec::new();
    let index = index_stored(interp);
    let domains = vec![&index; query.atoms.len()];
    search_stored(&mut m, &domains, &query.atoms, 0, query.atoms.len(), &mut |m| {
        if let Some(theta) = m.finalize(&scope, &check) {
            if seen.insert(query.instance_key(&theta)) {
                witnesses.push(theta);
            }
        }
    });
    Ok(WitnessSet { witnesses, certified: interp.fixpoint })
}

/// Substitutions that bind the clause's head inputs as `head_inputs`
/// does, resolve the first `upto` body atoms inside `interp`, leave
/// the remaining stages untouched, and pass the staged locality check.
/// `head_inputs` may bind only head input variables.
pub fn clause_prefix_substitutions(
    clause: &Clause,
    head_inputs: &Subst,
    upto: usize,
    interp: &Interpretation,
) -> Result<Vec<Subst>, ContractError> {
    clause.check_simply_moded().map_err(ContractError::ClauseNotSimplyModed)?;
    let allowed = clause.head.input_vars();
    if let Some(v) = head_inputs.domain().iter().find(|v| !allowed.contains(v)) {
        return Err(ContractError::Invalid(format!(
            "preset binds {}, which is not a head input variable",
            Term::var(*v)
        )));
    }
    let mut gen = VarGen::new();
    gen.avoid_all(clause.var_set());
    gen.avoid_all(head_inputs.range_vars());
    for s in &interp.atoms {
        gen.avoid(s.var_count() as VarId);
    }
    let mut m = Matcher::new(VarGen::starting_at(gen.peek()));
    register_clause_kinds(&mut m, clause);
    for (v, t) in head_inputs.iter() {
        for w in t.var_set() {
            if !m.kinds.contains_key(&w) {
                m.register(w, MKind::Rigid);
            }
        }
        m.bind(v, t.clone());
    }
    let scope = clause.var_set();
    let check = |theta: &Subst| check_simply_local_clause(theta, clause).map(|_| ());

    let upto = upto.min(clause.body.len());
    let mut out = BTreeSet::new();
    let index = index_stored(interp);
    let domains = vec![&index; upto];
    search_stored(&mut m, &domains, &clause.body, 0, upto, &mut |m| {
        if let Some(theta) = m.finalize(&scope, &check) {
            out.insert(theta);
        }
    });
    Ok(out.into_iter().collect())
}

// ---------------------------------------------------------------------
// Validation and serialization
// ---------------------------------------------------------------------

/// Outcome of checking an interpretation against a program.
#[derive(Debug, Clone)]
pub struct ModelValidation {
    /// For seeded interpretations: every seed atom is covered.
    pub seed_contained: bool,
    /// One more consequence step derives nothing uncovered (within
    /// the depth bound).
    pub closed: bool,
    /// Description of the first uncovered atom, if any.
    pub witness: Option<String>,
}

impl ModelValidation {
    /// True if both checks passed.
    pub fn holds(&self) -> bool {
        self.seed_contained && self.closed
    }
}

/// Checks that `interp` behaves as a (partial) model of the program:
/// seeds are covered (when seeded) and one consequence step stays
/// inside the stored set. Derived schemas are probed with their
/// variables fixed, which is conservative: a sound set can fail the
/// probe if its schemas are spread differently, but a passing set
/// really covers every derived schema's variable shape.
pub fn validate_model(
    program: &Program,
    interp: &Interpretation,
) -> Result<ModelValidation, ContractError> {
    ensure_program_simply_moded(&program.clauses)?;
    let mut report =
        ModelValidation { seed_contained: true, closed: true, witness: None };
    if interp.seeded {
        for seed in seed_atoms(program, interp.bounds, interp.mode) {
            if interp.member(&seed.atom).is_none() {
                report.seed_contained = false;
                report.witness = Some(format!("seed atom {seed} is not covered"));
                return Ok(report);
            }
        }
    }
    let (derived, _) = consequence_step(program, interp)?;
    for schema in derived {
        if interp.member(&schema.atom).is_none() {
            report.closed = false;
            report.witness = Some(format!("derived atom {schema} is not covered"));
            return Ok(report);
        }
    }
    Ok(report)
}

/// Parses the [`Interpretation::dump`] format back: `#` headers for
/// bounds and flags, then one atom per line. A variable whose name
/// starts with `F` loads as frozen; every other variable is Any.
pub fn load_interpretation(text: &str, program: &Program) -> Result<Interpretation, ParseError> {
    let mut bounds = FixpointBounds::new(0, 0, 0);
    let mut mode = AtomMode::Symbolic;
    let mut fixpoint = false;
    let mut seeded = false;
    let mut pruned = false;
    let mut atoms = BTreeSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(vals) = rest.strip_prefix("bounds:") {
                for tok in vals.split_whitespace() {
                    let (key, val) = tok.split_once('=').ok_or_else(|| ParseError {
                        line: lineno,
                        col: 1,
                        message: format!("malformed bounds entry '{tok}'"),
                    })?;
                    let n: usize = val.parse().map_err(|_| ParseError {
                        line: lineno,
                        col: 1,
                        message: format!("bounds entry '{tok}' is not a number"),
                    })?;
                    match key {
                        "iters" => bounds.max_iterations = n,
                        "depth" => bounds.term_depth = n,
                        "pool" => bounds.fresh_pool = n,
                        _ => {
                            return Err(ParseError {
                                line: lineno,
                                col: 1,
                                message: format!("unknown bounds entry '{key}'"),
                            })
                        }
                    }
                }
            } else if let Some(val) = rest.strip_prefix("fixpoint:") {
                fixpoint = parse_flag(val, lineno)?;
            } else if let Some(val) = rest.strip_prefix("seeded:") {
                seeded = parse_flag(val, lineno)?;
            } else if let Some(val) = rest.strip_prefix("pruned:") {
                pruned = parse_flag(val, lineno)?;
            } else if let Some(val) = rest.strip_prefix("mode:") {
                mode = match val.trim() {
                    "symbolic" => AtomMode::Symbolic,
                    "ground" => AtomMode::GroundEnumeration,
                    other => {
                        return Err(ParseError {
                            line: lineno,
                            col: 1,
                            message: format!("unknown mode '{other}'"),
                        })
                    }
                };
            }
            continue;
        }
        let parsed = parse_query(line, program).map_err(|e| ParseError {
            line: lineno,
            col: e.col,
            message: e.message,
        })?;
        if parsed.query.atoms.len() != 1 {
            return Err(ParseError {
                line: lineno,
                col: 1,
                message: "expected exactly one atom per line".into(),
            });
        }
        let atom = parsed.query.atoms.into_iter().next().expect("length checked");
        let names = parsed.var_names;
        let schema = canonicalize_atom(
            atom.pred.clone(),
            atom.args.clone(),
            Arc::clone(&atom.mode),
            &mut |v| match names.get(&v) {
                Some(name) if name.starts_with('F') => VarKind::Frozen,
                _ => VarKind::Any,
            },
        );
        atoms.insert(schema);
    }
    Ok(Interpretation { atoms, seeded, bounds, mode, fixpoint, pruned })
}

fn parse_flag(val: &str, lineno: usize) -> Result<bool, ParseError> {
    match val.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(ParseError {
            line: lineno,
            col: 1,
            message: format!("expected true or false, found '{other}'"),
        }),
    }
}
