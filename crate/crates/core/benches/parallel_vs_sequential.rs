use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use v2v_core::analytics::{all_session_metrics, AnalyticsLog};
use v2v_core::geo::{cluster_layout_with, cluster_map_points_with, map_points, palette, LayoutScheme};
use v2v_core::model::validate_corpus_with;
use v2v_core::query::{select_voices, VoiceFilter};
use v2v_core::synth::{random_corpus, usage_log, CorpusShape, UsagePlan};
use v2v_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn corpus(voices: usize) -> v2v_core::model::Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    random_corpus(&mut rng, &CorpusShape { voices, topics: 24, geotagged_share: 0.9, ..CorpusShape::default() })
}

fn bench(c: &mut Criterion) {
    let big = corpus(20_000);
    let points = map_points(&big.voices);
    let colors = palette(&big);
    let filter = VoiceFilter { query_text: Some("park".into()), cited: Some(true), ..VoiceFilter::default() };
    let log = AnalyticsLog::in_memory();
    let mut plan = UsagePlan::reference();
    plan.kept_sessions = 400;
    plan.home_to_voices = 600;
    plan.total_transitions = 3000;
    log.ingest(usage_log(&plan).expect("plan is consistent").0).unwrap();
    let records = log.records();

    let mut g = c.benchmark_group("validate");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| validate_corpus_with(&big, exec)));
    }
    g.finish();

    let mut g = c.benchmark_group("filter");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| select_voices(&big, &filter, exec).len()));
    }
    g.finish();

    let mut g = c.benchmark_group("cluster_z12");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cluster_map_points_with(&points, 12, None, &colors, exec).unwrap())
        });
    }
    g.finish();

    let mut g = c.benchmark_group("layout_topic");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| cluster_layout_with(&big, LayoutScheme::Topic, exec))
        });
    }
    g.finish();

    let mut g = c.benchmark_group("session_metrics");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| all_session_metrics(&records, exec)));
    }
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
