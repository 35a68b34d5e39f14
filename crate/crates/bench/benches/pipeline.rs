use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use tempred_core::diff::diff_with_trace_limit;
use tempred_core::fragment::lex;
use tempred_core::ingest::VecStream;
use tempred_core::synth::{generate_commits, oracle_classify, statement, HistorySpec};
use tempred_core::{analyze_stream, diff, fragment_lines, AnalysisConfig};

fn java_file(lines: usize, offset: usize) -> String {
    (0..lines).map(|i| statement(i * 3 + offset) + "\n").collect()
}

fn bench_diff(c: &mut Criterion) {
    let mut group = c.benchmark_group("diff");
    for lines in [100, 1000, 5000] {
        let before = fragment_lines(&java_file(lines, 0));
        // every fifth line replaced
        let after: Vec<_> = before
            .iter()
            .enumerate()
            .map(|(i, f)| if i % 5 == 0 { fragment_lines(&statement(i * 7 + 1))[0].clone() } else { f.clone() })
            .collect();
        group.throughput(Throughput::Elements(lines as u64));
        group.bench_with_input(BenchmarkId::new("greedy", lines), &lines, |b, _| {
            b.iter(|| diff(black_box(&before), black_box(&after)))
        });
        group.bench_with_input(BenchmarkId::new("linear_space", lines), &lines, |b, _| {
            b.iter(|| diff_with_trace_limit(black_box(&before), black_box(&after), 0))
        });
    }
    group.finish();
}

fn bench_lexer(c: &mut Criterion) {
    let source = java_file(2000, 0);
    let mut group = c.benchmark_group("fragment");
    group.throughput(Throughput::Bytes(source.len() as u64));
    group.bench_function("lex", |b| b.iter(|| lex(black_box(&source))));
    group.bench_function("lines", |b| b.iter(|| fragment_lines(black_box(&source))));
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let spec = HistorySpec {
        seed: 1,
        commit_count: 300,
        file_count: 20,
        fragment_alphabet_size: Some(400),
        ..HistorySpec::default()
    };
    let commits = generate_commits(&spec);
    let config = AnalysisConfig::bundle("bench");
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    group.throughput(Throughput::Elements(commits.len() as u64));
    group.bench_function("incremental", |b| {
        b.iter(|| analyze_stream(VecStream::new(commits.clone()), &config).unwrap())
    });
    group.bench_function("oracle", |b| {
        b.iter(|| oracle_classify(commits.iter().cloned().map(Ok), &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_diff, bench_lexer, bench_pipeline);
criterion_main!(benches);
