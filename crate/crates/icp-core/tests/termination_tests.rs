//! Level mappings, acceptability certificates, and the runaway probe,
//! exercised on a terminating sort, a structurally terminating append,
//! and a one-line loop.

use icp_core::engine::{derive, Bounds, SelectionRule};
use icp_core::frontend::{parse_program, Program};
use icp_core::mode::ensure_query_simply_moded;
use icp_core::semantics::{compute_partial_model, universe_terms, AtomMode, FixpointBounds};
use icp_core::termination::{
    atom_level, check_simply_acceptable, probe_termination, sample_queries, stratified_tuples,
    LevelMapping, SampleBounds, TerminationError,
};
use icp_core::{ModedAtom, Term};

fn corpus(name: &str) -> Program {
    let path = format!("{}/../../corpus/{name}.icp", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("read {path}: {e}"));
    parse_program(&text, name).unwrap()
}

const LOOP: &str = ":- mode p(out).\np(X) :- p(X).\n";

#[test]
fn declared_levels_accept_the_ground_quicksort() {
    let mut p = corpus("quicksort_ground");
    p.materialize_comparisons(0, 2).unwrap();
    let model =
        compute_partial_model(&p, FixpointBounds::new(6, 3, 1), AtomMode::Symbolic).unwrap();
    let report = check_simply_acceptable(
        &p,
        &LevelMapping::Declared,
        &model,
        SampleBounds::new(2, 1, 64),
    )
    .unwrap();
    assert!(report.accepted, "{:?}", report.counterexample);
    assert!(report.obligations_checked > 50, "{}", report.obligations_checked);
    assert_eq!(report.counterexample, None);
}

#[test]
fn canonical_levels_accept_append() {
    let p = corpus("append_iio");
    let mapping = LevelMapping::canonical_checked(&p, 64, SampleBounds::new(2, 1, 16)).unwrap();
    let model =
        compute_partial_model(&p, FixpointBounds::new(5, 3, 1), AtomMode::Symbolic).unwrap();
    let report =
        check_simply_acceptable(&p, &mapping, &model, SampleBounds::new(2, 1, 32)).unwrap();
    assert!(report.accepted, "{:?}", report.counterexample);
    assert!(report.obligations_checked > 0);
}

#[test]
fn atom_levels_follow_their_definitions() {
    let levelled = parse_program(
        ":- mode append(in,in,out).\n\
         :- level append(Xs,_,_) is len(Xs).\n\
         append([],Ys,Ys).\n\
         append([X|Xs],Ys,[X|Zs]) :- append(Xs,Ys,Zs).\n",
        "levelled",
    )
    .unwrap();
    let q = icp_core::frontend::parse_query("append([a,b],[c],Zs)", &levelled).unwrap();
    let atom = q.query.atoms[0].clone();

    // The declaration measures the length of the first argument.
    assert_eq!(atom_level(&levelled, &LevelMapping::Declared, &atom), Ok(2));

    let p = corpus("append_iio");

    // The canonical mapping counts the nodes of the committed
    // derivation: the root, two recursive steps, and the empty query.
    assert_eq!(atom_level(&p, &LevelMapping::Canonical { tree_depth: 16 }, &atom), Ok(4));

    // Undeclared predicates default to level zero.
    let bare = parse_program(":- mode q(in).\nq(a).\n", "bare").unwrap();
    let atom = ModedAtom::new(
        icp_core::Functor::new("q"),
        vec![Term::constant("a")],
        bare.modes[&(icp_core::Functor::new("q"), 1)].clone(),
    );
    assert_eq!(atom_level(&bare, &LevelMapping::Declared, &atom), Ok(0));
}

#[test]
fn the_one_line_loop_is_rejected_by_every_route() {
    let p = parse_program(LOOP, "loop").unwrap();

    // Declared levels default to zero, so the recursive obligation
    // cannot decrease.
    let model =
        compute_partial_model(&p, FixpointBounds::new(3, 2, 1), AtomMode::Symbolic).unwrap();
    let report = check_simply_acceptable(
        &p,
        &LevelMapping::Declared,
        &model,
        SampleBounds::new(1, 1, 8),
    )
    .unwrap();
    assert!(!report.accepted);
    let c = report.counterexample.expect("a counterexample");
    assert!(c.contains("does not exceed"), "{c}");

    // The canonical constructor refuses: its own probe finds the
    // runaway derivation first.
    match LevelMapping::canonical_checked(&p, 16, SampleBounds::new(1, 1, 8)) {
        Err(TerminationError::Evidence(e)) => {
            assert!(e.contains("depth 16"), "{e}");
        }
        other => panic!("expected evidence, got {other:?}"),
    }

    // Asking for a canonical level anyway reports the unbounded tree.
    let atom = p.clauses[0].head.clone();
    match atom_level(&p, &LevelMapping::Canonical { tree_depth: 8 }, &atom) {
        Err(TerminationError::UnboundedLevel { atom }) => assert!(atom.contains('p')),
        other => panic!("expected an unbounded level, got {other:?}"),
    }

    // The standalone probe reports the same evidence.
    let evidence = probe_termination(&p, SampleBounds::new(1, 1, 8), 16).unwrap();
    assert!(evidence.unwrap().contains("reaches depth 16"));
}

#[test]
fn the_probe_clears_terminating_programs() {
    for name in ["append_iio", "lte_io", "in_order"] {
        let p = corpus(name);
        let evidence = probe_termination(&p, SampleBounds::new(2, 1, 16), 64).unwrap();
        assert_eq!(evidence, None, "{name} flagged");
    }
}

#[test]
fn sampled_queries_are_well_formed_and_runnable() {
    let p = corpus("qsort_io");
    let queries = sample_queries(&p, SampleBounds::new(2, 1, 8));
    assert!(!queries.is_empty());
    for q in &queries {
        ensure_query_simply_moded(q).unwrap();
        let fresh = q.var_set().iter().max().map_or(0, |v| v + 1);
        derive(&p, q, SelectionRule::IcAny, Bounds::depth(12), fresh).unwrap();
    }
}

#[test]
fn stratified_tuples_are_depth_ordered_and_capped() {
    let p = corpus("append_iio");
    let universe = universe_terms(&p, 2, &[]);
    let tuples = stratified_tuples(&universe, 2, 10);
    assert_eq!(tuples.len(), 10);
    let depths: Vec<usize> =
        tuples.iter().map(|t| t.iter().map(|x| x.depth()).sum()).collect();
    assert!(depths.windows(2).all(|w| w[0] <= w[1]), "{depths:?}");

    // Zero positions sample exactly one empty tuple.
    assert_eq!(stratified_tuples(&universe, 0, 10), vec![Vec::<Term>::new()]);
}
