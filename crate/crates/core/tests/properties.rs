use proptest::prelude::*;
use topks_core::corpus::{filter_corpus, CorpusBuilder};
use topks_core::socialgraph::{dice_network, proximity_iterator, DiceSource, ProximityAggregator, SimilarityGraph};
use topks_core::{Corpus, CtIlIndex};
use topks_oracle::{naive_filter, proximity_by_paths, proximity_by_relaxation, virtual_list};

fn corpus_strategy(max: usize) -> impl Strategy<Value = Corpus> {
    prop::collection::vec((0u8..12, 0u8..30, "[abc]{1,4}"), 0..max).prop_map(|rows| {
        let mut b = CorpusBuilder::new();
        for (u, i, t) in rows {
            b.add(&format!("u{u}"), &format!("i{i}"), &t).unwrap();
        }
        b.build()
    })
}

fn graph_strategy() -> impl Strategy<Value = SimilarityGraph> {
    (2usize..=15)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                prop::collection::vec((prop::bool::weighted(0.3), 0.01f64..=1.0, 0usize..5), m),
            )
        })
        .prop_map(|(n, pairs, picks)| {
            let edges: Vec<(String, String, f64)> = pairs
                .iter()
                .zip(picks)
                .filter(|(_, (keep, _, _))| *keep)
                .map(|(&(a, b), (_, w, grid))| {
                    let w = if grid < 4 { [0.25, 0.5, 0.75, 1.0][grid] } else { w };
                    (format!("n{a:02}"), format!("n{b:02}"), w)
                })
                .collect();
            let users: Vec<String> = (0..n).map(|i| format!("n{i:02}")).collect();
            SimilarityGraph::from_edges_and_users(edges, users).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tf_sums_to_triple_count(c in corpus_strategy(200)) {
        let total: u32 = (0..c.tags().len() as u32)
            .flat_map(|t| c.postings(topks_core::TagId(t)).iter().map(|p| p.1))
            .sum();
        prop_assert_eq!(total as usize, c.num_triples());
        for t in c.triples() {
            prop_assert!(c.tf(t.tag, t.item) >= 1);
        }
        for (i, name) in c.users().names().iter().enumerate() {
            prop_assert_eq!(c.user_id(name).map(|u| u.0), Some(i as u32));
        }
    }

    #[test]
    fn filter_matches_naive_and_is_idempotent(c in corpus_strategy(300)) {
        let f = filter_corpus(&c, 2, 2);
        let mut got: Vec<(String, String, String)> =
            f.named_triples().map(|(u, i, t)| (u.into(), i.into(), t.into())).collect();
        got.sort();
        prop_assert_eq!(got, naive_filter(&c, 2, 2));
        prop_assert_eq!(filter_corpus(&f, 2, 2).num_triples(), f.num_triples());
    }

    #[test]
    fn virtual_lists_drain_like_sort_merge(c in corpus_strategy(300), p in "[abc]{1,3}") {
        let idx = CtIlIndex::build(&c);
        let want = virtual_list(&c, &p);
        match idx.open_cursor(&p) {
            Err(_) => prop_assert!(want.is_empty()),
            Ok(mut cur) => {
                prop_assert!(cur.heap_property_holds(&idx));
                let mut got = Vec::new();
                let mut last = u32::MAX;
                while let Some(e) = cur.advance(&idx) {
                    prop_assert!(cur.heap_property_holds(&idx));
                    prop_assert!(e.tf <= last);
                    last = e.tf;
                    got.push((e.item, e.tag, e.tf));
                }
                prop_assert_eq!(got, want);
            }
        }
    }

    #[test]
    fn proximity_matches_path_enumeration(g in graph_strategy(), lambda in 0.1f64..=1.0) {
        let seeker = g.users().names()[0].clone();
        let s = g.user_id(&seeker).unwrap();
        for agg in [ProximityAggregator::MaxProduct, ProximityAggregator::ExpDecay(lambda)] {
            let want = proximity_by_paths(&g, s, agg);
            prop_assert_eq!(&want, &proximity_by_relaxation(&g, s, agg));
            let got: Vec<_> = proximity_iterator(&g, &seeker, agg).collect();
            prop_assert_eq!(got.len(), want.len());
            for w in got.windows(2) {
                prop_assert!(w[0].proximity >= w[1].proximity);
            }
            for e in &got {
                prop_assert_eq!(Some(&e.proximity), want.get(&e.user));
            }
        }
        let a: Vec<_> = proximity_iterator(&g, &seeker, ProximityAggregator::ExpDecay(1.0)).collect();
        let b: Vec<_> = proximity_iterator(&g, &seeker, ProximityAggregator::MaxProduct).collect();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn dice_is_symmetric_and_bounded(c in corpus_strategy(150)) {
        for g in [dice_network(DiceSource::Tags(&c)), dice_network(DiceSource::ItemTagPairs(&c))] {
            for (a, b, w) in g.edges() {
                prop_assert!(w > 0.0 && w <= 1.0);
                prop_assert_eq!(g.weight(b, a), Some(w));
            }
            let n = dice_network(DiceSource::CommonNeighbors(&g));
            for (_, _, w) in n.edges() {
                prop_assert!(w > 0.0 && w <= 1.0);
            }
        }
    }
}
