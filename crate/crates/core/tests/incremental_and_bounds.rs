use std::collections::HashMap;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use topks_core::engine::SearchState;
use topks_core::{execute, EngineConfig, Keystroke, Query, Session};
use topks_oracle::instances::{random_instance, Limits};
use topks_oracle::scores;

fn random_text(rng: &mut impl Rng, tags: &[String]) -> String {
    let terms = rng.random_range(2..=3);
    let mut words = Vec::new();
    for _ in 0..terms {
        let mut w = tags[rng.random_range(0..tags.len())].clone();
        while w.len() < 3 {
            w.push(['a', 'b', 'c', 'd'][rng.random_range(0..4)]);
        }
        let len = rng.random_range(3..=8).min(w.len() + 1);
        w.truncate(len);
        words.push(w);
    }
    words.join(" ")
}

#[test]
fn sessions_equal_batch_runs() {
    for seed in 0..30u64 {
        let (ds, seeker) = random_instance(
            seed,
            Limits {
                triples: 1500,
                ..Limits::default()
            },
        );
        let ds = Arc::new(ds);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = random_text(&mut rng, ds.corpus().tags().names());
        let alpha = [0.0, 0.5, 1.0][rng.random_range(0..3)];
        let cfg = EngineConfig {
            k: 5,
            alpha,
            ..EngineConfig::unbounded()
        };
        let mut s = Session::new(ds.clone(), ds.seeker(&seeker), cfg.clone()).unwrap();
        let mut typed = String::new();
        for key in Keystroke::typing(&text) {
            typed.push(match key {
                Keystroke::AppendChar(c) => c,
                Keystroke::NewTerm => ' ',
            });
            let got = s.keystroke(key);
            let want = execute(&ds, ds.seeker(&seeker), &Query::parse(&typed), &cfg).unwrap();
            assert_eq!(got.entries, want.entries, "seed {seed} text {typed:?}");
        }
    }
}

#[test]
fn bounds_enclose_oracle_and_narrow() {
    for seed in 100..120u64 {
        let (ds, seeker) = random_instance(seed, Limits::default());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tags = ds.corpus().tags().names();
        let q = Query::new(
            [tags[rng.random_range(0..tags.len())].clone()],
            &tags[rng.random_range(0..tags.len())][..1],
        );
        let alpha = [0.0, 0.3, 1.0][rng.random_range(0..3)];
        let cfg = EngineConfig {
            k: 5,
            alpha,
            ..EngineConfig::unbounded()
        };
        let truth = scores(&ds, ds.seeker(&seeker), &q, &cfg);
        let mut st = SearchState::with_query(&ds, ds.seeker(&seeker), &q, cfg);
        let mut prev: HashMap<_, (f64, f64)> = HashMap::new();
        loop {
            let bounds = st.candidate_bounds(&ds);
            let wild = st.wildcard_upper(&ds);
            for b in &bounds {
                let s = truth.get(&b.item).copied().unwrap_or(0.0);
                assert!(b.min <= s + 1e-9 && s <= b.max + 1e-9, "seed {seed}: {b:?} vs {s}");
                if let Some(&(lo, hi)) = prev.get(&b.item) {
                    assert!(b.min >= lo - 1e-12 && b.max <= hi + 1e-12, "seed {seed}: range widened");
                }
                prev.insert(b.item, (b.min, b.max));
            }
            let known: std::collections::HashSet<_> = bounds.iter().map(|b| b.item).collect();
            for (item, s) in &truth {
                if !known.contains(item) {
                    assert!(*s <= wild + 1e-9, "seed {seed}: unseen item above wildcard");
                }
            }
            if st.termination_met(&ds) || st.step(&ds).is_none() {
                break;
            }
        }
    }
}
