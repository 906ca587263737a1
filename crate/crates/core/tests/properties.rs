use std::collections::{BTreeMap, BTreeSet, HashMap};

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use v2v_core::geo::{cluster_map_points, layout_categories, map_points, palette, CategoryMembers};
use v2v_core::model::{citation_index, corpus_stats, validate_corpus, Collection, Corpus, OutputId, VoiceId};
use v2v_core::query::{filter_voices, search_voices, select_voices, Page, SortOrder, VoiceFilter};
use v2v_core::store::{Dataset, ImportBundle, ImportMode};
use v2v_core::synth::{random_corpus, CorpusShape};
use v2v_core::Execution;

fn corpus(seed: u64, voices: usize) -> Corpus {
    random_corpus(&mut ChaCha8Rng::seed_from_u64(seed), &CorpusShape { voices, ..CorpusShape::default() })
}

fn reciprocal(c: &Corpus) -> bool {
    let by_id: HashMap<&str, _> = c.outputs.iter().map(|o| (o.id.as_str(), o)).collect();
    c.outputs.iter().all(|o| {
        o.sparked_by.iter().all(|s| by_id.get(s.as_str()).is_some_and(|p| p.next_steps.contains(&o.id)))
            && o.next_steps.iter().all(|n| by_id.get(n.as_str()).is_some_and(|p| p.sparked_by.contains(&o.id)))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn link_edits_keep_reciprocity(seed in any::<u64>(), edits in 1usize..12) {
        let c = corpus(seed, 40);
        let ds = Dataset::in_memory();
        ds.import_bundle(ImportBundle::from_corpus(&c), ImportMode::Replace).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let ids: Vec<OutputId> = c.outputs.iter().map(|o| o.id.clone()).collect();
        for _ in 0..edits {
            let target = ids.choose(&mut rng).unwrap().clone();
            let doc = ds.get_document(Collection::Outputs, target.as_str()).unwrap();
            let mut body = doc.body;
            let pick = |rng: &mut ChaCha8Rng| -> Vec<String> {
                ids.iter().filter(|i| **i != target && rng.gen_bool(0.2)).map(|i| i.0.clone()).collect()
            };
            body["sparked_by"] = json!(pick(&mut rng));
            body["next_steps"] = json!(pick(&mut rng));
            // rejected edits (e.g. a cycle through a self link) must leave the store valid too
            let _ = ds.write_document(Collection::Outputs, target.as_str(), body, doc.revision);
            let snap = ds.snapshot();
            prop_assert!(reciprocal(snap.corpus()));
            prop_assert!(validate_corpus(snap.corpus()).is_valid());
        }
    }

    #[test]
    fn stats_ignore_voice_order(seed in any::<u64>()) {
        let mut c = corpus(seed, 80);
        let before = (corpus_stats(&c), citation_index(&c));
        c.voices.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(before, (corpus_stats(&c), citation_index(&c)));
    }

    #[test]
    fn handshake_identity(seed in any::<u64>(), voices in 0usize..300) {
        let c = corpus(seed, voices);
        let idx = citation_index(&c);
        let lhs: usize = idx.values().map(BTreeSet::len).sum();
        let rhs: usize = c.voices.iter().map(|v| v.output_ids.len()).sum();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn longer_query_narrows_results(seed in any::<u64>(), q in "[a-z]{1,4}", extra in "[a-z]{1,3}") {
        let c = corpus(seed, 120);
        let wide: BTreeSet<&str> = search_voices(&c, &q).iter().map(|v| v.id.as_str()).collect();
        let narrow: BTreeSet<&str> = search_voices(&c, &format!("{q}{extra}")).iter().map(|v| v.id.as_str()).collect();
        prop_assert!(narrow.is_subset(&wide));
    }

    #[test]
    fn pages_partition_the_result(seed in any::<u64>(), limit in 1usize..60) {
        let c = corpus(seed, 150);
        let filter = VoiceFilter { cited: Some(true), ..VoiceFilter::default() };
        let all: Vec<&str> = filter_voices(&c, &filter, SortOrder::CollectedAt, Page::new(0, 200).unwrap())
            .unwrap().voices.iter().map(|v| v.id.as_str()).collect();
        let mut paged = Vec::new();
        let mut offset = 0;
        loop {
            let page = filter_voices(&c, &filter, SortOrder::CollectedAt, Page::new(offset, limit).unwrap()).unwrap();
            prop_assert_eq!(page.total, all.len());
            if page.voices.is_empty() {
                break;
            }
            paged.extend(page.voices.iter().map(|v| v.id.as_str()));
            offset += limit;
        }
        prop_assert_eq!(paged, all);
    }

    #[test]
    fn facets_are_a_conjunction(seed in any::<u64>(), t in 0usize..8, e in 0usize..6, cited in proptest::option::of(any::<bool>())) {
        let c = corpus(seed, 200);
        let topic = c.topics[t].id.clone();
        let event = c.events[e].id.clone();
        let filter = VoiceFilter {
            topic_ids: [topic.clone()].into(),
            event_ids: [event.clone()].into(),
            cited,
            ..VoiceFilter::default()
        };
        let got: BTreeSet<&str> = select_voices(&c, &filter, Execution::Parallel).iter().map(|v| v.id.as_str()).collect();
        let by_topic: BTreeSet<&str> = c.voices.iter().filter(|v| v.topic_ids.contains(&topic)).map(|v| v.id.as_str()).collect();
        let by_event: BTreeSet<&str> = c.voices.iter().filter(|v| v.event_id == event).map(|v| v.id.as_str()).collect();
        let by_cited: BTreeSet<&str> = c.voices.iter().filter(|v| cited.is_none_or(|x| x == !v.output_ids.is_empty())).map(|v| v.id.as_str()).collect();
        let expected: BTreeSet<&str> = by_topic.intersection(&by_event).copied().collect::<BTreeSet<_>>().intersection(&by_cited).copied().collect();
        prop_assert_eq!(got, expected);
    }

    #[test]
    fn clusters_nest_across_zooms(seed in any::<u64>(), zoom in 3u8..18) {
        let c = random_corpus(&mut ChaCha8Rng::seed_from_u64(seed), &CorpusShape { voices: 150, geotagged_share: 1.0, ..CorpusShape::default() });
        let points = map_points(&c.voices);
        let colors = palette(&c);
        let coarse = cluster_map_points(&points, zoom, None, &colors).unwrap();
        let fine = cluster_map_points(&points, zoom + 1, None, &colors).unwrap();
        let parent: BTreeMap<&VoiceId, (u32, u32)> =
            coarse.iter().flat_map(|cl| cl.member_voice_ids.iter().map(move |v| (v, cl.cell))).collect();
        prop_assert_eq!(coarse.iter().map(|c| c.size()).sum::<usize>(), points.len());
        for cl in &fine {
            let parents: BTreeSet<(u32, u32)> = cl.member_voice_ids.iter().map(|v| parent[v]).collect();
            prop_assert_eq!(parents.len(), 1);
            prop_assert_eq!(*parents.iter().next().unwrap(), (cl.cell.0 / 2, cl.cell.1 / 2));
        }
    }

    #[test]
    fn circles_never_overlap(counts in proptest::collection::vec(1usize..120, 1..25)) {
        let cats: Vec<CategoryMembers> = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| CategoryMembers {
                category_id: format!("c{i}"),
                members: (0..n).map(|j| (VoiceId::new(format!("v{i}_{j}")), Some(i as u32))).collect(),
            })
            .collect();
        let circles = layout_categories(cats, Execution::Sequential);
        for (i, a) in circles.iter().enumerate() {
            for m in &a.member_points {
                prop_assert!(((m.x - a.x).powi(2) + (m.y - a.y).powi(2)).sqrt() <= a.radius);
            }
            for b in &circles[i + 1..] {
                let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
                prop_assert!(d >= a.radius + b.radius, "{} and {} overlap", a.category_id, b.category_id);
            }
        }
    }
}
