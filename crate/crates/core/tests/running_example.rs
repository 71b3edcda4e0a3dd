use topks_core::engine::{CandidateBounds, SearchState};
use topks_core::fixtures::running_example;
use topks_core::{execute, Dataset, EngineConfig, Keystroke, Query, Session};

fn bounds_of(ds: &Dataset, st: &mut SearchState, item: &str) -> (f64, f64) {
    let id = ds.corpus().item_id(item).unwrap();
    let b: Vec<CandidateBounds> = st.candidate_bounds(ds);
    let b = b.iter().find(|b| b.item == id).expect("candidate");
    (b.min, b.max)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() < 1e-9
}

#[test]
fn bounds_trace_for_style_gl() {
    let ds = running_example();
    let alice = ds.seeker("Alice");
    let cfg = EngineConfig {
        k: 2,
        ..EngineConfig::unbounded()
    };
    let mut st = SearchState::with_query(&ds, alice, &Query::new(["style"], "gl"), cfg);

    st.step(&ds);
    let (lo, hi) = bounds_of(&ds, &mut st, "i6");
    assert!(close(lo, 1.8) && close(hi, 4.23), "after Bob: [{lo}, {hi}]");

    st.step(&ds);
    let (lo, hi) = bounds_of(&ds, &mut st, "i6");
    assert!(close(lo, 1.8) && close(hi, 3.6), "after Danny: [{lo}, {hi}]");

    st.step(&ds);
    let (lo, hi) = bounds_of(&ds, &mut st, "i6");
    assert!(close(lo, 2.4) && close(hi, 2.4), "after Carol: [{lo}, {hi}]");
    let (lo, hi) = bounds_of(&ds, &mut st, "i4");
    assert!(close(lo, 0.6) && close(hi, 1.8), "i4 after Carol: [{lo}, {hi}]");
    assert!(st.wildcard_upper(&ds) <= 0.8 + 1e-9);
    assert_eq!(st.visited_users(), 3);
}

#[test]
fn style_gl_top2() {
    let ds = running_example();
    let cfg = EngineConfig {
        k: 2,
        ..EngineConfig::unbounded()
    };
    let r = execute(&ds, ds.seeker("Alice"), &Query::new(["style"], "gl"), &cfg).unwrap();
    assert!(r.exact);
    let names: Vec<&str> = r.entries.iter().map(|e| ds.corpus().item_name(e.item)).collect();
    assert_eq!(names, ["i6", "i4"]);
    assert!(close(r.entries[0].min, 2.4));
    // i4: style 0.6 + 0.16 + 0.07, glasses 0.3
    assert!(close(r.entries[1].min, 0.83 + 0.3));
}

#[test]
fn typing_matches_batch() {
    let ds = std::sync::Arc::new(running_example());
    let cfg = EngineConfig {
        k: 3,
        ..EngineConfig::unbounded()
    };
    let mut s = Session::new(ds.clone(), ds.seeker("Alice"), cfg.clone()).unwrap();
    let mut typed = String::new();
    for key in Keystroke::typing("style gl") {
        let got = s.keystroke(key);
        typed.push(match key {
            Keystroke::AppendChar(c) => c,
            Keystroke::NewTerm => ' ',
        });
        let want = execute(&ds, ds.seeker("Alice"), &Query::parse(&typed), &cfg).unwrap();
        assert!(got.exact);
        assert_eq!(got.entries, want.entries, "after {typed:?}");
    }
}

#[test]
fn unknown_seeker() {
    let ds = running_example();
    let r = execute(&ds, None, &Query::new(["style"], ""), &EngineConfig::unbounded()).unwrap();
    assert!(r.exact && r.entries.is_empty());
    let cfg = EngineConfig {
        alpha: 1.0,
        ..EngineConfig::unbounded()
    };
    let r = execute(&ds, None, &Query::new(["style"], ""), &cfg).unwrap();
    let names: Vec<&str> = r.entries.iter().map(|e| ds.corpus().item_name(e.item)).collect();
    assert_eq!(names, ["i4", "i2", "i6"]);
}
