//! Static-analysis verdicts on corpus programs and on small fixtures
//! built to trip each individual condition.

use std::collections::BTreeSet;

use icp_core::analysis::{
    calls_back_into_head, check_input_consistent, check_selection_equivalence,
    check_simple_delays, check_simply_moded, DependencyGraph,
};
use icp_core::frontend::parse_program;
use icp_core::{Functor, Moding};

fn corpus(name: &str) -> icp_core::frontend::Program {
    let path = format!("{}/../../corpus/{name}.icp", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"));
    parse_program(&text, name).unwrap()
}

fn key(name: &str, arity: usize) -> (Functor, usize) {
    (name.into(), arity)
}

// ---------------------------------------------------------------------
// Simply moded
// ---------------------------------------------------------------------

#[test]
fn append_in_both_directions_is_simply_moded() {
    for name in ["append_iio", "append_ooi"] {
        let v = check_simply_moded(&corpus(name));
        assert!(v.holds, "{name}: {:?}", v.witness);
        assert!(v.witness.is_none());
    }
}

#[test]
fn mergesort_backwards_is_not_simply_moded() {
    // mergesort(out,in): the recursive clause feeds split's outputs into
    // atoms that already saw those variables in input positions.
    let v = check_simply_moded(&corpus("mergesort_oi"));
    assert!(!v.holds);
    let w = v.witness.unwrap();
    assert!(w.contains("mergesort") || w.contains("split") || w.contains("merge"), "{w}");
}

#[test]
fn repeated_output_variable_is_flagged() {
    // p(X,Y,Y) with two output positions holding the same variable.
    let p = parse_program(
        ":- mode p(in,out,out).\n:- mode q(in).\np(X,Y,Y) :- q(X).\n",
        "dup",
    )
    .unwrap();
    let v = check_simply_moded(&p);
    // Head output positions are unconstrained; this program is fine.
    assert!(v.holds);

    // The same shape in a body atom is not.
    let p = parse_program(
        ":- mode p(in,out).\n:- mode q(in,out,out).\np(X,Y) :- q(X,Y,Y).\n",
        "dup_body",
    )
    .unwrap();
    let v = check_simply_moded(&p);
    assert!(!v.holds);
    assert!(v.witness.unwrap().contains("q"));
}

#[test]
fn output_seen_earlier_is_flagged() {
    // Y is an input of the first atom and an output of the second.
    let p = parse_program(
        ":- mode p(in,out).\n:- mode q(in).\n:- mode r(in,out).\np(X,Y) :- q(Y), r(X,Y).\n",
        "early",
    )
    .unwrap();
    assert!(!check_simply_moded(&p).holds);
}

// ---------------------------------------------------------------------
// Input consistency
// ---------------------------------------------------------------------

#[test]
fn input_consistency_across_the_corpus_spot_checks() {
    assert!(check_input_consistent(&corpus("append_iio")).holds);
    assert!(check_input_consistent(&corpus("qsort_io")).holds);

    // member(in,in): the element variable repeats across the two inputs.
    let v = check_input_consistent(&corpus("member_ii"));
    assert!(!v.holds);
    assert!(v.witness.unwrap().contains("member"));

    // even(s(s(X))): a nested input term is not flat.
    let v = check_input_consistent(&corpus("even_i"));
    assert!(!v.holds);
    assert!(v.witness.unwrap().contains("even"));
}

#[test]
fn constants_in_input_positions_are_consistent() {
    // Constants are flat; repetition of constants is not variable sharing.
    let p = parse_program(
        ":- mode edge(in,in).\nedge(a,b).\nedge(b,b).\n",
        "edges",
    )
    .unwrap();
    assert!(check_input_consistent(&p).holds);
}

// ---------------------------------------------------------------------
// Delay declarations
// ---------------------------------------------------------------------

#[test]
fn quicksort_delays_guard_first_input_positions() {
    let r = check_simple_delays(&corpus("qsort_io"));
    assert!(r.simple, "{:?}", r.witness);
    assert_eq!(r.controlled.get(&key("quicksort_dl", 3)), Some(&BTreeSet::from([0])));
    assert_eq!(r.controlled.get(&key("partition", 4)), Some(&BTreeSet::from([0])));
    assert_eq!(r.controlled.get(&key("quicksort", 2)), None);
}

#[test]
fn ground_conditions_are_not_simple() {
    let r = check_simple_delays(&corpus("quicksort_ground"));
    assert!(!r.simple);
    assert!(r.witness.unwrap().contains("ground"));
}

#[test]
fn conditions_on_output_positions_are_not_simple() {
    let p = parse_program(
        ":- mode p(in,out).\n:- delay p(_,Y) until nonvar(Y).\np(a,b).\n",
        "outdelay",
    )
    .unwrap();
    let r = check_simple_delays(&p);
    assert!(!r.simple);
    assert!(r.witness.unwrap().contains("output"));
}

// ---------------------------------------------------------------------
// Selection equivalence
// ---------------------------------------------------------------------

#[test]
fn selection_equivalence_verdicts_match_the_table() {
    for name in ["append_iio", "qsort_io", "member_io", "rotate_oi", "in_order"] {
        let r = check_selection_equivalence(&corpus(name));
        assert!(r.holds(), "{name}: {:?}", r.witness);
    }
    // lte(in,in) is simply moded and input consistent, but its heads
    // put non-variables in unguarded input positions.
    let r = check_selection_equivalence(&corpus("lte_ii"));
    assert!(r.applicable);
    assert!(!r.holds());
    assert!(!r.free_positions_hold_variables);
}

#[test]
fn prerequisites_gate_the_position_conditions() {
    let r = check_selection_equivalence(&corpus("member_ii"));
    assert!(!r.applicable);
    assert!(r.witness.unwrap().contains("input consistent"));

    let r = check_selection_equivalence(&corpus("mergesort_oi"));
    assert!(!r.applicable);
    assert!(r.witness.unwrap().contains("simply moded"));

    let r = check_selection_equivalence(&corpus("quicksort_ground"));
    assert!(!r.applicable);
    assert!(r.witness.unwrap().contains("delays"));
}

#[test]
fn guarded_positions_must_commit_to_one_constructor() {
    // A guarded input holding a bare variable gives the scheduler
    // nothing to wait for.
    let p = parse_program(
        ":- mode p(in).\n:- delay p(X) until nonvar(X).\np(X).\n",
        "lazy",
    )
    .unwrap();
    let r = check_selection_equivalence(&p);
    assert!(r.applicable && !r.controlled_positions_hold_flat_terms);

    // A guarded input holding a nested term already fails the input
    // consistency prerequisite, so the verdict is "inapplicable" rather
    // than a position violation.
    let p = parse_program(
        ":- mode p(in).\n:- delay p(X) until nonvar(X).\np([a]).\n",
        "deep",
    )
    .unwrap();
    let r = check_selection_equivalence(&p);
    assert!(!r.applicable);
    assert!(r.witness.unwrap().contains("input consistent"));

    // Flat non-variable terms are exactly right.
    let p = parse_program(
        ":- mode p(in).\n:- delay p(X) until nonvar(X).\np([X|Xs]).\np([]).\n",
        "flat",
    )
    .unwrap();
    assert!(check_selection_equivalence(&p).holds());
}

// ---------------------------------------------------------------------
// Dependency graph
// ---------------------------------------------------------------------

#[test]
fn mergesort_dependencies_are_ordered() {
    let p = corpus("mergesort_io");
    let g = DependencyGraph::build(&p);

    let ms = key("mergesort", 2);
    let split = key("split", 3);
    let merge = key("merge", 3);
    let lte = key("=<", 2);

    assert!(g.is_defined(&ms) && g.is_defined(&split) && g.is_defined(&merge));
    // The comparisons are referenced but have no clauses yet.
    assert!(!g.is_defined(&lte));

    // Direct references from the recursive clause.
    assert!(g.refers_to(&ms, &split) && g.refers_to(&ms, &merge) && g.refers_to(&ms, &ms));
    assert!(!g.refers_to(&split, &ms));

    // Reachability is reflexive and transitive.
    assert!(g.depends_on(&ms, &lte));
    assert!(g.depends_on(&split, &split));
    assert!(!g.depends_on(&merge, &split));

    // Mutual reachability only via self here.
    assert!(g.equivalent(&ms, &ms));
    assert!(!g.equivalent(&ms, &split));

    // mergesort reaches both workers and itself; sinks do not count.
    assert_eq!(g.dependency_count(&ms), 3);
    assert_eq!(g.dependency_count(&lte), 0);
}

#[test]
fn recursion_detection_separates_direct_and_downward_calls() {
    let p = corpus("in_order");
    let g = DependencyGraph::build(&p);
    let io = key("in_order", 2);
    let app = key("append", 3);

    // in_order calls itself: the body atom can call back into the head.
    assert!(calls_back_into_head(&g, &io, &io));
    // append never reaches in_order, so the traversal's append atom is
    // a downward call.
    assert!(!calls_back_into_head(&g, &io, &app));
    assert!(calls_back_into_head(&g, &app, &app));
}

// ---------------------------------------------------------------------
// Moding sanity across the whole corpus
// ---------------------------------------------------------------------

#[test]
fn every_corpus_mode_table_covers_every_clause() {
    let dir = format!("{}/../../corpus", env!("CARGO_MANIFEST_DIR"));
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("icp") {
            continue;
        }
        let name = path.file_stem().unwrap().to_str().unwrap().to_string();
        let text = std::fs::read_to_string(&path).unwrap();
        let p = parse_program(&text, &name).unwrap();
        for c in &p.clauses {
            assert!(p.modes.contains_key(&c.head.key()), "{name}: {}", c.head);
            assert_eq!(c.head.mode.len(), c.head.arity());
            for b in &c.body {
                assert!(b.mode.iter().all(|m| matches!(m, Moding::In | Moding::Out)));
            }
        }
    }
}
