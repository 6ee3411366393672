//! Algebraic properties of terms, substitutions, unification, and
//! matching, checked on randomized inputs.

use std::collections::BTreeSet;

use proptest::prelude::*;

use icp_core::subst::{match_terms, mgu_terms};
use icp_core::term::canonical_key;
use icp_core::{Subst, Term, VarGen};

fn arb_term() -> impl Strategy<Value = Term> {
    let leaf = prop_oneof![
        (0u64..5).prop_map(Term::var),
        Just(Term::constant("a")),
        Just(Term::constant("b")),
        Just(Term::nil()),
    ];
    leaf.prop_recursive(3, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|t| Term::App("f".into(), vec![t])),
            (inner.clone(), inner).prop_map(|(h, t)| Term::cons(h, t)),
        ]
    })
}

fn arb_subst() -> impl Strategy<Value = Subst> {
    proptest::sample::subsequence(vec![0u64, 1, 2, 3, 4], 0..=3).prop_flat_map(|vars| {
        proptest::collection::vec(arb_term(), vars.len()).prop_map(move |imgs| {
            Subst::from_bindings(
                vars.iter().copied().zip(imgs).filter(|(v, t)| Term::var(*v) != *t),
            )
        })
    })
}

/// A grounding of every variable below 20, used to manufacture
/// alternative unifiers.
fn arb_grounding() -> impl Strategy<Value = Subst> {
    proptest::collection::vec(
        prop_oneof![
            Just(Term::constant("a")),
            Just(Term::constant("b")),
            Just(Term::nil()),
            Just(Term::App("f".into(), vec![Term::constant("a")])),
        ],
        20,
    )
    .prop_map(|imgs| Subst::from_bindings((0u64..20).zip(imgs)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // --- unification ---

    #[test]
    fn mgu_unifies(s in arb_term(), t in arb_term()) {
        if let Some(theta) = mgu_terms(&s, &t) {
            prop_assert_eq!(theta.apply(&s), theta.apply(&t));
        }
    }

    #[test]
    fn mgu_is_idempotent(s in arb_term(), t in arb_term()) {
        if let Some(theta) = mgu_terms(&s, &t) {
            prop_assert!(theta.is_idempotent());
            let once = theta.apply(&s);
            prop_assert_eq!(theta.apply(&once), once);
        }
    }

    #[test]
    fn mgu_is_relevant(s in arb_term(), t in arb_term()) {
        if let Some(theta) = mgu_terms(&s, &t) {
            let mut pair_vars = s.var_set();
            pair_vars.extend(t.var_set());
            prop_assert!(theta.domain().is_subset(&pair_vars));
            prop_assert!(theta.range_vars().is_subset(&pair_vars));
        }
    }

    #[test]
    fn mgu_is_most_general(s in arb_term(), t in arb_term(), ground in arb_grounding()) {
        // Any other unifier must be an instance of the mgu. Alternative
        // unifiers are manufactured by grounding the pair outright.
        if ground.apply(&s) == ground.apply(&t) {
            let theta = mgu_terms(&s, &t);
            prop_assert!(theta.is_some(), "a unifier exists but mgu found none");
            let theta = theta.unwrap();
            prop_assert!(
                match_terms(&theta.apply(&s), &ground.apply(&s)).is_some(),
                "mgu instance is not more general than the grounded instance"
            );
        }
    }

    #[test]
    fn unifiable_renamed_copies_always_unify(u in arb_term()) {
        // Two variable-disjoint renamings of one skeleton share that
        // skeleton as a common instance.
        let left = Subst::from_bindings((0u64..5).map(|v| (v, Term::var(10 + v))));
        let right = Subst::from_bindings((0u64..5).map(|v| (v, Term::var(20 + v))));
        let s = left.apply(&u);
        let t = right.apply(&u);
        let theta = mgu_terms(&s, &t);
        prop_assert!(theta.is_some());
        let theta = theta.unwrap();
        prop_assert_eq!(theta.apply(&s), theta.apply(&t));
    }

    #[test]
    fn occur_check_rejects_self_embedding(t in arb_term(), v in 0u64..5) {
        // Unifying a variable with a proper term containing it must fail.
        if t.var_set().contains(&v) && t != Term::var(v) {
            prop_assert!(mgu_terms(&Term::var(v), &t).is_none());
        }
    }

    // --- composition ---

    #[test]
    fn compose_matches_sequential_application(
        t in arb_term(), a in arb_subst(), b in arb_subst()
    ) {
        prop_assert_eq!(a.compose(&b).apply(&t), b.apply(&a.apply(&t)));
    }

    #[test]
    fn compose_is_associative(
        t in arb_term(), a in arb_subst(), b in arb_subst(), c in arb_subst()
    ) {
        let left = a.compose(&b).compose(&c);
        let right = a.compose(&b.compose(&c));
        prop_assert_eq!(left.apply(&t), right.apply(&t));
    }

    #[test]
    fn empty_substitution_is_identity(t in arb_term(), a in arb_subst()) {
        prop_assert_eq!(Subst::empty().apply(&t), t.clone());
        prop_assert_eq!(Subst::empty().compose(&a).apply(&t), a.apply(&t));
        prop_assert_eq!(a.compose(&Subst::empty()).apply(&t), a.apply(&t));
    }

    // --- matching ---

    #[test]
    fn matching_reproduces_the_instance(t in arb_term(), s in arb_subst()) {
        let instance = s.apply(&t);
        let m = match_terms(&t, &instance);
        prop_assert!(m.is_some(), "a pattern must match its own instance");
        prop_assert_eq!(m.unwrap().apply(&t), instance);
    }

    #[test]
    fn matching_binds_only_pattern_variables(p in arb_term(), t in arb_term()) {
        if let Some(m) = match_terms(&p, &t) {
            prop_assert!(m.domain().is_subset(&p.var_set()));
            prop_assert_eq!(m.apply(&p), t.clone());
        }
    }

    // --- canonical keys ---

    #[test]
    fn canonical_key_is_renaming_invariant(t in arb_term()) {
        let renaming = Subst::from_bindings((0u64..5).map(|v| (v, Term::var(14 - v))));
        let key_t = canonical_key(std::slice::from_ref(&t), &BTreeSet::new());
        let key_r = canonical_key(&[renaming.apply(&t)], &BTreeSet::new());
        prop_assert_eq!(key_t, key_r);
    }

    #[test]
    fn equal_canonical_keys_mean_variants(s in arb_term(), t in arb_term()) {
        let none = BTreeSet::new();
        let key_s = canonical_key(std::slice::from_ref(&s), &none);
        let key_t = canonical_key(std::slice::from_ref(&t), &none);
        if key_s == key_t {
            // Variants match each other both ways by variables only.
            let fwd = match_terms(&s, &t);
            let bwd = match_terms(&t, &s);
            prop_assert!(fwd.is_some() && bwd.is_some());
            prop_assert!(fwd.unwrap().is_var_renaming());
            prop_assert!(bwd.unwrap().is_var_renaming());
        }
    }

    #[test]
    fn collapsing_distinct_variables_changes_the_key(t in arb_term()) {
        let vars: Vec<_> = t.var_set().into_iter().collect();
        if vars.len() >= 2 {
            let collapse =
                Subst::from_bindings(vars.iter().map(|&v| (v, Term::var(vars[0]))));
            let none = BTreeSet::new();
            let key_t = canonical_key(std::slice::from_ref(&t), &none);
            let key_c = canonical_key(&[collapse.apply(&t)], &none);
            prop_assert_ne!(key_t, key_c);
        }
    }

    #[test]
    fn fixed_variables_resist_renaming(t in arb_term(), v in 0u64..5) {
        // With v held fixed, moving it to a new name changes the key.
        if t.var_set().contains(&v) {
            let fixed = BTreeSet::from([v]);
            let moved = Subst::single(v, Term::var(30));
            let key_t = canonical_key(std::slice::from_ref(&t), &fixed);
            let key_m = canonical_key(&[moved.apply(&t)], &fixed);
            prop_assert_ne!(key_t, key_m);
        }
    }

    // --- fresh variable generation ---

    #[test]
    fn fresh_variables_avoid_everything_seen(t in arb_term(), s in arb_subst()) {
        let mut gen = VarGen::new();
        gen.avoid_term(&t);
        for (_, img) in s.iter() {
            gen.avoid_term(img);
        }
        let next = gen.peek();
        let fresh = gen.fresh();
        prop_assert_eq!(next, fresh);
        prop_assert!(!t.var_set().contains(&fresh));
        prop_assert!(!s.range_vars().contains(&fresh));
        prop_assert!(gen.fresh() > fresh);
    }
}
