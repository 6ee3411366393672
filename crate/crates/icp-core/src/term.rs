//! First-order terms, variables, and fresh-name generation.
//!
//! A [`Term`] is either a variable or an application of a [`Functor`] to
//! argument terms; constants are zero-argument applications. Variables are
//! bare numeric identifiers — human-readable names live in a side table
//! ([`VarNames`]) owned by whoever built the term, so renaming apart never
//! has to invent names.
//!
//! Lists use the conventional encoding: the constant `[]` and the binary
//! functor `.`, and the printer renders them with bracket sugar
//! (`[a,b|Xs]`).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Identifier of a logic variable.
pub type VarId = u64;

/// Map from variable identifiers to their source-level names, used only
/// for display. Variables without an entry print as `_G<id>`.
pub type VarNames = BTreeMap<VarId, String>;

/// Name of the list constructor functor.
pub const CONS: &str = ".";
/// Name of the empty-list constant.
pub const NIL: &str = "[]";

/// An interned function or predicate symbol.
///
/// Equality and ordering compare the underlying name, so two independently
/// constructed functors with the same spelling are interchangeable.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Functor(Arc<str>);

impl Functor {
    /// Creates a functor with the given name.
    pub fn new(name: &str) -> Self {
        Functor(Arc::from(name))
    }

    /// The functor's name.
    pub fn name(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Functor {
    fn from(name: &str) -> Self {
        Functor::new(name)
    }
}

impl fmt::Display for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Functor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A first-order term: a variable or a functor applied to arguments.
///
/// # Examples
///
/// ```
/// use icp_core::term::Term;
///
/// let t = Term::cons(Term::constant("a"), Term::var(0));
/// assert_eq!(t.depth(), 1);
/// assert!(t.contains_var(0));
/// ```
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    /// A logic variable.
    Var(VarId),
    /// An application `f(t1, ..., tn)`; constants have `n = 0`.
    App(Functor, Vec<Term>),
}

impl Term {
    /// A variable term.
    pub fn var(id: VarId) -> Term {
        Term::Var(id)
    }

    /// An application term.
    pub fn app(name: &str, args: Vec<Term>) -> Term {
        Term::App(Functor::new(name), args)
    }

    /// A constant (zero-argument application).
    pub fn constant(name: &str) -> Term {
        Term::App(Functor::new(name), Vec::new())
    }

    /// A non-negative integer constant, spelled in decimal.
    pub fn int(n: i64) -> Term {
        Term::constant(&n.to_string())
    }

    /// The empty list `[]`.
    pub fn nil() -> Term {
        Term::constant(NIL)
    }

    /// A cons cell `[head|tail]`.
    pub fn cons(head: Term, tail: Term) -> Term {
        Term::App(Functor::new(CONS), vec![head, tail])
    }

    /// A proper list of the given elements.
    pub fn list(items: impl IntoIterator<Item = Term>) -> Term {
        Term::list_with_tail(items, Term::nil())
    }

    /// A list of the given elements ending in `tail`.
    pub fn list_with_tail(items: impl IntoIterator<Item = Term>, tail: Term) -> Term {
        let items: Vec<Term> = items.into_iter().collect();
        items
            .into_iter()
            .rev()
            .fold(tail, |acc, item| Term::cons(item, acc))
    }

    /// True if the term is a variable.
    pub fn is_var(&self) -> bool {
        matches!(self, Term::Var(_))
    }

    /// True if the term contains no variables.
    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    /// If the term is a decimal integer constant, its value.
    pub fn as_int(&self) -> Option<i64> {
        match self {
            Term::App(f, args) if args.is_empty() => f.name().parse().ok(),
            _ => None,
        }
    }

    /// Appends every variable occurrence (with repeats) to `out`, in
    /// left-to-right order.
    pub fn collect_vars(&self, out: &mut Vec<VarId>) {
        match self {
            Term::Var(v) => out.push(*v),
            Term::App(_, args) => {
                for a in args {
                    a.collect_vars(out);
                }
            }
        }
    }

    /// The distinct variables of the term in first-occurrence order.
    pub fn vars(&self) -> Vec<VarId> {
        let mut occ = Vec::new();
        self.collect_vars(&mut occ);
        dedup_keep_order(occ)
    }

    /// The set of variables of the term.
    pub fn var_set(&self) -> BTreeSet<VarId> {
        let mut occ = Vec::new();
        self.collect_vars(&mut occ);
        occ.into_iter().collect()
    }

    /// True if `v` occurs in the term.
    pub fn contains_var(&self, v: VarId) -> bool {
        match self {
            Term::Var(u) => *u == v,
            Term::App(_, args) => args.iter().any(|a| a.contains_var(v)),
        }
    }

    /// True if no variable occurs twice in the term.
    pub fn is_linear(&self) -> bool {
        let mut occ = Vec::new();
        self.collect_vars(&mut occ);
        let n = occ.len();
        occ.into_iter().collect::<BTreeSet<_>>().len() == n
    }

    /// True if the term is `f(x1, ..., xn)` for pairwise distinct
    /// variables `x1..xn`. Constants are flat; variables are not.
    pub fn is_flat(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::App(_, args) => {
                let mut seen = BTreeSet::new();
                args.iter().all(|a| match a {
                    Term::Var(v) => seen.insert(*v),
                    Term::App(..) => false,
                })
            }
        }
    }

    /// Nesting depth: variables and constants have depth 0, and an
    /// application has one more than its deepest argument.
    pub fn depth(&self) -> usize {
        match self {
            Term::Var(_) => 0,
            Term::App(_, args) => match args.iter().map(Term::depth).max() {
                None => 0,
                Some(d) => 1 + d,
            },
        }
    }

    /// Renders the term using the given variable names.
    pub fn display<'a>(&'a self, names: &'a VarNames) -> TermDisplay<'a> {
        TermDisplay { term: self, names: Some(names) }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, None)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self, None)
    }
}

/// Display adaptor pairing a term with a variable-name table.
pub struct TermDisplay<'a> {
    term: &'a Term,
    names: Option<&'a VarNames>,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_term(f, self.term, self.names)
    }
}

/// Writes `t`, rendering list cells with bracket sugar.
fn write_term(f: &mut fmt::Formatter<'_>, t: &Term, names: Option<&VarNames>) -> fmt::Result {
    match t {
        Term::Var(v) => write_var(f, *v, names),
        Term::App(fun, args) if fun.name() == CONS && args.len() == 2 => {
            f.write_str("[")?;
            write_term(f, &args[0], names)?;
            let mut tail = &args[1];
            loop {
                match tail {
                    Term::App(g, rest) if g.name() == CONS && rest.len() == 2 => {
                        f.write_str(",")?;
                        write_term(f, &rest[0], names)?;
                        tail = &rest[1];
                    }
                    Term::App(g, rest) if g.name() == NIL && rest.is_empty() => break,
                    other => {
                        f.write_str("|")?;
                        write_term(f, other, names)?;
                        break;
                    }
                }
            }
            f.write_str("]")
        }
        Term::App(fun, args) => {
            write!(f, "{fun}")?;
            if !args.is_empty() {
                f.write_str("(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write_term(f, a, names)?;
                }
                f.write_str(")")?;
            }
            Ok(())
        }
    }
}

fn write_var(f: &mut fmt::Formatter<'_>, v: VarId, names: Option<&VarNames>) -> fmt::Result {
    match names.and_then(|n| n.get(&v)) {
        Some(name) => f.write_str(name),
        None => write!(f, "_G{v}"),
    }
}

/// Keeps the first occurrence of each element, preserving order.
pub(crate) fn dedup_keep_order(items: Vec<VarId>) -> Vec<VarId> {
    let mut seen = BTreeSet::new();
    items.into_iter().filter(|v| seen.insert(*v)).collect()
}

/// True if no variable occurs twice across the whole family of terms.
pub fn family_is_linear<'a>(terms: impl IntoIterator<Item = &'a Term>) -> bool {
    let mut occ = Vec::new();
    for t in terms {
        t.collect_vars(&mut occ);
    }
    let n = occ.len();
    occ.into_iter().collect::<BTreeSet<_>>().len() == n
}

/// Generator of fresh variable identifiers.
///
/// A generator is local to one run (one parse, one derivation, one
/// fixpoint computation). Start it above every variable already in scope
/// so freshly generated identifiers can never collide.
///
/// # Examples
///
/// ```
/// use icp_core::term::{Term, VarGen};
///
/// let t = Term::cons(Term::var(7), Term::var(3));
/// let mut gen = VarGen::above_term(&t);
/// assert_eq!(gen.fresh(), 8);
/// assert_eq!(gen.fresh(), 9);
/// ```
#[derive(Debug, Clone, Default)]
pub struct VarGen {
    next: VarId,
}

impl VarGen {
    /// A generator starting at identifier 0.
    pub fn new() -> Self {
        VarGen { next: 0 }
    }

    /// A generator whose first fresh identifier is `n`.
    pub fn starting_at(n: VarId) -> Self {
        VarGen { next: n }
    }

    /// A generator starting above every variable of `t`.
    pub fn above_term(t: &Term) -> Self {
        let mut g = VarGen::new();
        g.avoid_term(t);
        g
    }

    /// Ensures the generator will never return `v`.
    pub fn avoid(&mut self, v: VarId) {
        if v >= self.next {
            self.next = v + 1;
        }
    }

    /// Ensures the generator avoids every variable of `t`.
    pub fn avoid_term(&mut self, t: &Term) {
        let mut occ = Vec::new();
        t.collect_vars(&mut occ);
        for v in occ {
            self.avoid(v);
        }
    }

    /// Ensures the generator avoids every variable in `vars`.
    pub fn avoid_all(&mut self, vars: impl IntoIterator<Item = VarId>) {
        for v in vars {
            self.avoid(v);
        }
    }

    /// Returns a fresh identifier, never returned before by this
    /// generator and above everything it was told to avoid.
    pub fn fresh(&mut self) -> VarId {
        let v = self.next;
        self.next += 1;
        v
    }

    /// The next identifier that would be returned, without consuming it.
    pub fn peek(&self) -> VarId {
        self.next
    }
}

/// Renames the variables of a sequence of terms to `0, 1, 2, ...` in
/// first-occurrence order, except that variables listed in `fixed` are
/// replaced by a marker constant carrying their identity.
///
/// Two term sequences get equal keys exactly when one can be obtained
/// from the other by consistently renaming the non-fixed variables, so
/// with an empty `fixed` set this is comparison up to variance.
pub fn canonical_key(terms: &[Term], fixed: &BTreeSet<VarId>) -> Vec<Term> {
    let mut map: BTreeMap<VarId, VarId> = BTreeMap::new();
    terms.iter().map(|t| canon_term(t, fixed, &mut map)).collect()
}

fn canon_term(t: &Term, fixed: &BTreeSet<VarId>, map: &mut BTreeMap<VarId, VarId>) -> Term {
    match t {
        Term::Var(v) if fixed.contains(v) => Term::App(Functor::new(&format!("$fixed{v}")), Vec::new()),
        Term::Var(v) => {
            let next = map.len() as VarId;
            Term::Var(*map.entry(*v).or_insert(next))
        }
        Term::App(f, args) => Term::App(
            f.clone(),
            args.iter().map(|a| canon_term(a, fixed, map)).collect(),
        ),
    }
}

/// True if the two terms are equal up to a consistent renaming of
/// variables.
///
/// # Examples
///
/// ```
/// use icp_core::term::{is_variant, Term};
///
/// let a = Term::cons(Term::var(0), Term::var(1));
/// let b = Term::cons(Term::var(5), Term::var(2));
/// let c = Term::cons(Term::var(5), Term::var(5));
/// assert!(is_variant(&a, &b));
/// assert!(!is_variant(&a, &c));
/// ```
pub fn is_variant(a: &Term, b: &Term) -> bool {
    let none = BTreeSet::new();
    canonical_key(std::slice::from_ref(a), &none) == canonical_key(std::slice::from_ref(b), &none)
}
