//! Substitutions, most general unifiers, and one-way matching.
//!
//! A [`Subst`] is a finite map from variables to terms with no identity
//! bindings. Unification always runs the occur check and produces
//! idempotent, relevant unifiers: applying the result twice changes
//! nothing, and every variable it mentions comes from the input terms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::term::{Term, VarId, VarNames};

/// A substitution: a finite map from variables to terms.
///
/// # Examples
///
/// ```
/// use icp_core::{Subst, Term};
///
/// let s = Subst::single(0, Term::constant("a"));
/// let t = Term::cons(Term::var(0), Term::var(1));
/// assert_eq!(s.apply(&t), Term::cons(Term::constant("a"), Term::var(1)));
/// ```
#[derive(Clone, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct Subst {
    map: BTreeMap<VarId, Term>,
}

impl Subst {
    /// The empty substitution.
    pub fn empty() -> Self {
        Subst::default()
    }

    /// The substitution binding exactly `v` to `t`. An identity binding
    /// collapses to the empty substitution.
    pub fn single(v: VarId, t: Term) -> Self {
        let mut s = Subst::empty();
        s.insert(v, t);
        s
    }

    /// Builds a substitution from bindings, dropping identities.
    pub fn from_bindings(bindings: impl IntoIterator<Item = (VarId, Term)>) -> Self {
        let mut s = Subst::empty();
        for (v, t) in bindings {
            s.insert(v, t);
        }
        s
    }

    fn insert(&mut self, v: VarId, t: Term) {
        if t != Term::Var(v) {
            self.map.insert(v, t);
        } else {
            self.map.remove(&v);
        }
    }

    /// True if the substitution binds nothing.
    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Number of bound variables.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// The binding of `v`, if any.
    pub fn get(&self, v: VarId) -> Option<&Term> {
        self.map.get(&v)
    }

    /// Iterates over the bindings in variable order.
    pub fn iter(&self) -> impl Iterator<Item = (VarId, &Term)> {
        self.map.iter().map(|(v, t)| (*v, t))
    }

    /// The set of bound variables.
    pub fn domain(&self) -> BTreeSet<VarId> {
        self.map.keys().copied().collect()
    }

    /// The set of variables occurring in the bound terms.
    pub fn range_vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        for t in self.map.values() {
            out.extend(t.var_set());
        }
        out
    }

    /// Applies the substitution to a term, replacing every bound
    /// variable by its image.
    pub fn apply(&self, t: &Term) -> Term {
        if self.map.is_empty() {
            return t.clone();
        }
        match t {
            Term::Var(v) => match self.map.get(v) {
                Some(img) => img.clone(),
                None => t.clone(),
            },
            Term::App(f, args) => {
                Term::App(f.clone(), args.iter().map(|a| self.apply(a)).collect())
            }
        }
    }

    /// Applies the substitution to each term of a slice.
    pub fn apply_all(&self, ts: &[Term]) -> Vec<Term> {
        ts.iter().map(|t| self.apply(t)).collect()
    }

    /// The composition `self` then `other`: applying the result is the
    /// same as applying `self` first and `other` second.
    pub fn compose(&self, other: &Subst) -> Subst {
        let mut out = Subst::empty();
        for (v, t) in &self.map {
            out.insert(*v, other.apply(t));
        }
        for (v, t) in &other.map {
            if !self.map.contains_key(v) {
                out.insert(*v, t.clone());
            }
        }
        out
    }

    /// Extends the substitution in place with `v -> t`, substituting the
    /// new binding into all existing images. Equivalent to composing with
    /// the singleton `{v -> t}` on the right.
    pub fn compose_binding(&mut self, v: VarId, t: Term) {
        let single = Subst::single(v, t);
        let keys: Vec<VarId> = self.map.keys().copied().collect();
        for k in keys {
            let img = single.apply(&self.map[&k]);
            self.insert(k, img);
        }
        if !self.map.contains_key(&v) {
            if let Some(img) = single.map.get(&v) {
                self.insert(v, img.clone());
            }
        }
    }

    /// The substitution restricted to the given variables.
    pub fn restricted(&self, vars: &BTreeSet<VarId>) -> Subst {
        Subst {
            map: self
                .map
                .iter()
                .filter(|(v, _)| vars.contains(v))
                .map(|(v, t)| (*v, t.clone()))
                .collect(),
        }
    }

    /// True if applying the substitution twice equals applying it once.
    pub fn is_idempotent(&self) -> bool {
        let dom = self.domain();
        self.range_vars().is_disjoint(&dom)
    }

    /// True if every binding maps a variable to a (possibly identical)
    /// variable, i.e. the substitution only renames.
    pub fn is_var_renaming(&self) -> bool {
        self.map.values().all(Term::is_var)
    }

    /// Renders the substitution using the given variable names.
    pub fn display<'a>(&'a self, names: &'a VarNames) -> SubstDisplay<'a> {
        SubstDisplay { subst: self, names: Some(names) }
    }
}

impl fmt::Display for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_subst(f, self, None)
    }
}

impl fmt::Debug for Subst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_subst(f, self, None)
    }
}

/// Display adaptor pairing a substitution with a variable-name table.
pub struct SubstDisplay<'a> {
    subst: &'a Subst,
    names: Option<&'a VarNames>,
}

impl fmt::Display for SubstDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_subst(f, self.subst, self.names)
    }
}

fn write_subst(f: &mut fmt::Formatter<'_>, s: &Subst, names: Option<&VarNames>) -> fmt::Result {
    f.write_str("{")?;
    for (i, (v, t)) in s.map.iter().enumerate() {
        if i > 0 {
            f.write_str(", ")?;
        }
        match names.and_then(|n| n.get(v)) {
            Some(name) => f.write_str(name)?,
            None => write!(f, "_G{v}")?,
        }
        f.write_str("/")?;
        match names {
            Some(n) => write!(f, "{}", t.display(n))?,
            None => write!(f, "{t}")?,
        }
    }
    f.write_str("}")
}

/// Computes a most general unifier of two terms, or `None` if they do
/// not unify. The occur check is always performed, and the result is an
/// idempotent substitution mentioning only variables of the inputs.
///
/// # Examples
///
/// ```
/// use icp_core::{subst::mgu_terms, Term};
///
/// let a = Term::cons(Term::constant("a"), Term::var(0));
/// let b = Term::cons(Term::var(1), Term::nil());
/// let s = mgu_terms(&a, &b).unwrap();
/// assert_eq!(s.apply(&a), s.apply(&b));
///
/// // Occur check: X and f(X) do not unify.
/// assert!(mgu_terms(&Term::var(0), &Term::app("f", vec![Term::var(0)])).is_none());
/// ```
pub fn mgu_terms(a: &Term, b: &Term) -> Option<Subst> {
    mgu_term_seqs(std::slice::from_ref(a), std::slice::from_ref(b))
}

/// Computes a most general unifier of two equal-length term sequences,
/// unifying them pointwise.
pub fn mgu_term_seqs(xs: &[Term], ys: &[Term]) -> Option<Subst> {
    if xs.len() != ys.len() {
        return None;
    }
    let mut s = Subst::empty();
    for (x, y) in xs.iter().zip(ys) {
        unify(&s.apply(x), &s.apply(y), &mut s)?;
    }
    Some(s)
}

/// Resolves one unification problem, extending `s`. Both inputs must
/// already be fully resolved under `s`.
fn unify(a: &Term, b: &Term, s: &mut Subst) -> Option<()> {
    match (a, b) {
        (Term::Var(x), Term::Var(y)) if x == y => Some(()),
        (Term::Var(x), t) | (t, Term::Var(x)) => {
            if t.contains_var(*x) {
                return None;
            }
            s.compose_binding(*x, t.clone());
            Some(())
        }
        (Term::App(f, xs), Term::App(g, ys)) => {
            if f != g || xs.len() != ys.len() {
                return None;
            }
            for (x, y) in xs.iter().zip(ys) {
                unify(&s.apply(x), &s.apply(y), s)?;
            }
            Some(())
        }
    }
}

/// Matches `pattern` onto `target`: finds a substitution over the
/// pattern's variables with `pattern θ = target`. The target is left
/// untouched — its variables are treated as constants.
///
/// # Examples
///
/// ```
/// use icp_core::{subst::match_terms, Term};
///
/// let pat = Term::cons(Term::var(0), Term::var(1));
/// let tgt = Term::list([Term::constant("a")]);
/// let s = match_terms(&pat, &tgt).unwrap();
/// assert_eq!(s.apply(&pat), tgt);
///
/// // Matching is one-way: a compound pattern never matches a variable.
/// assert!(match_terms(&pat, &Term::var(9)).is_none());
/// ```
pub fn match_terms(pattern: &Term, target: &Term) -> Option<Subst> {
    match_term_seqs(std::slice::from_ref(pattern), std::slice::from_ref(target))
}

/// Matches a sequence of patterns pointwise onto a sequence of targets,
/// sharing one consistent binding of the pattern variables.
pub fn match_term_seqs(patterns: &[Term], targets: &[Term]) -> Option<Subst> {
    if patterns.len() != targets.len() {
        return None;
    }
    let mut map = BTreeMap::new();
    for (p, t) in patterns.iter().zip(targets) {
        match_into(p, t, &mut map)?;
    }
    Some(Subst::from_bindings(map))
}

fn match_into(pattern: &Term, target: &Term, map: &mut BTreeMap<VarId, Term>) -> Option<()> {
    match pattern {
        Term::Var(v) => match map.get(v) {
            Some(prev) => (prev == target).then_some(()),
            None => {
                map.insert(*v, target.clone());
                Some(())
            }
        },
        Term::App(f, args) => match target {
            Term::App(g, targs) if f == g && args.len() == targs.len() => {
                for (p, t) in args.iter().zip(targs) {
                    match_into(p, t, map)?;
                }
                Some(())
            }
            _ => None,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: VarId) -> Term {
        Term::var(n)
    }

    #[test]
    fn apply_and_compose_chain() {
        let s1 = Subst::single(0, Term::cons(v(1), v(2)));
        let s2 = Subst::single(1, Term::constant("a"));
        let both = s1.compose(&s2);
        let t = v(0);
        assert_eq!(both.apply(&t), s2.apply(&s1.apply(&t)));
        assert_eq!(both.apply(&t), Term::cons(Term::constant("a"), v(2)));
    }

    #[test]
    fn identity_bindings_never_stored() {
        let s = Subst::from_bindings([(0, v(0)), (1, Term::constant("a"))]);
        assert_eq!(s.len(), 1);
        let s2 = Subst::single(3, v(3));
        assert!(s2.is_empty());
    }

    #[test]
    fn mgu_is_idempotent_and_relevant() {
        // f(X, g(Y)) = f(g(Z), X)
        let a = Term::app("f", vec![v(0), Term::app("g", vec![v(1)])]);
        let b = Term::app("f", vec![Term::app("g", vec![v(2)]), v(0)]);
        let s = mgu_terms(&a, &b).expect("unifies");
        assert_eq!(s.apply(&a), s.apply(&b));
        assert!(s.is_idempotent());
        let input_vars: BTreeSet<VarId> = a.var_set().union(&b.var_set()).copied().collect();
        assert!(s.domain().is_subset(&input_vars));
        assert!(s.range_vars().is_subset(&input_vars));
    }

    #[test]
    fn mgu_occur_check() {
        let a = v(0);
        let b = Term::cons(Term::constant("a"), v(0));
        assert!(mgu_terms(&a, &b).is_none());
        // Indirect cycle: X = f(Y), Y = f(X).
        assert!(mgu_term_seqs(
            &[v(0), v(1)],
            &[Term::app("f", vec![v(1)]), Term::app("f", vec![v(0)])],
        )
        .is_none());
    }

    #[test]
    fn mgu_clash_fails() {
        assert!(mgu_terms(&Term::constant("a"), &Term::constant("b")).is_none());
        assert!(mgu_terms(&Term::app("f", vec![v(0)]), &Term::app("g", vec![v(0)])).is_none());
        assert!(mgu_term_seqs(&[v(0)], &[]).is_none());
    }

    #[test]
    fn mgu_shared_variable_sequences() {
        // p(X, X) = p(a, Y) forces Y = a.
        let s = mgu_term_seqs(&[v(0), v(0)], &[Term::constant("a"), v(1)]).unwrap();
        assert_eq!(s.apply(&v(1)), Term::constant("a"));
        assert_eq!(s.apply(&v(0)), Term::constant("a"));
    }

    #[test]
    fn matching_is_one_way() {
        let pat = Term::cons(v(0), v(1));
        let tgt = Term::cons(Term::constant("a"), v(7));
        let s = match_terms(&pat, &tgt).unwrap();
        assert_eq!(s.apply(&pat), tgt);
        // Target variables stay rigid.
        assert!(match_terms(&Term::constant("a"), &v(7)).is_none());
        // Inconsistent repeated pattern variable.
        assert!(match_term_seqs(&[v(0), v(0)], &[Term::constant("a"), Term::constant("b")]).is_none());
        // Consistent repeated pattern variable.
        assert!(match_term_seqs(&[v(0), v(0)], &[v(7), v(7)]).is_some());
    }

    #[test]
    fn restriction_drops_other_bindings() {
        let s = Subst::from_bindings([(0, Term::constant("a")), (1, Term::constant("b"))]);
        let keep: BTreeSet<VarId> = [1].into_iter().collect();
        let r = s.restricted(&keep);
        assert_eq!(r.len(), 1);
        assert_eq!(r.get(1), Some(&Term::constant("b")));
    }

    #[test]
    fn display_uses_names() {
        let s = Subst::single(0, Term::list([Term::constant("a")]));
        let names: VarNames = [(0, "Xs".to_string())].into_iter().collect();
        assert_eq!(s.display(&names).to_string(), "{Xs/[a]}");
        assert_eq!(s.to_string(), "{_G0/[a]}");
    }
}
