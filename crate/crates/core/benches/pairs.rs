use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use soliclone_core::embed::{Embedder, EmbedderSpec};
use soliclone_core::extractor::{FunctionRecord, VersionBucket, Visibility};
use soliclone_core::pairs::{
    generate_pairs, FunctionEmbeddings, PairingPolicy, ScoringEngine, Thresholds,
};
use soliclone_core::Execution;

const NAMES: [&str; 6] = ["transfer", "approve", "mint", "burn", "withdraw", "deposit"];

fn synthetic(n: usize) -> Vec<FunctionRecord> {
    (0..n)
        .map(|i| {
            let name = NAMES[i % NAMES.len()];
            let code = format!(
                "function {name}(address to, uint256 amount) public returns (bool) {{ uint256 v{i} = amount * {}; balances[to] += v{i}; require(v{i} > {}, \"e{}\"); return true; }}",
                i % 7 + 1,
                i % 11,
                i % 5
            );
            FunctionRecord {
                function_id: format!("{i:016x}#00000"),
                file_id: format!("{i:064x}"),
                contract_id: format!("{i:064x}:Token"),
                contract_name: "Token".into(),
                solidity_version: VersionBucket::V0_8,
                contract_variables: vec![],
                function_name: name.into(),
                function_visibility: Visibility::Public,
                token_length: 0,
                char_length: code.len(),
                function_code: code,
                function_comment: Some(format!("Moves {} tokens to the recipient, variant {}", name, i % 4)),
            }
        })
        .collect()
}

fn embeddings(functions: &[FunctionRecord]) -> Vec<FunctionEmbeddings> {
    let code = Embedder::new(EmbedderSpec::code_baseline()).unwrap();
    let comment = Embedder::new(EmbedderSpec::comment_baseline()).unwrap();
    functions
        .iter()
        .map(|f| FunctionEmbeddings {
            function_id: f.function_id.clone(),
            code: code.embed_code(f).unwrap(),
            comment: f
                .function_comment
                .as_deref()
                .map(|c| comment.embed_comment(c).unwrap()),
        })
        .collect()
}

fn scoring(c: &mut Criterion) {
    for n in [200usize, 800] {
        let functions = synthetic(n);
        let emb = embeddings(&functions);
        let engine = ScoringEngine::new(&functions, &emb, Thresholds::default()).unwrap();
        let plan = generate_pairs(&functions, PairingPolicy::AllPairs);

        let mut group = c.benchmark_group(format!("score_all/{n}"));
        group.throughput(Throughput::Elements(plan.pair_count()));
        group.sample_size(10);
        for exec in Execution::available() {
            group.bench_with_input(BenchmarkId::from_parameter(exec), &exec, |b, &exec| {
                b.iter(|| engine.score_all(&plan, exec).unwrap())
            });
        }
        group.finish();

        let mut group = c.benchmark_group(format!("count_stripes/{n}"));
        group.throughput(Throughput::Elements(plan.pair_count()));
        group.sample_size(10);
        for exec in Execution::available() {
            group.bench_with_input(BenchmarkId::from_parameter(exec), &exec, |b, &exec| {
                b.iter(|| engine.count(&plan, exec).unwrap())
            });
        }
        group.finish();
    }
}

fn embedding(c: &mut Criterion) {
    let functions = synthetic(2000);
    let code = Embedder::new(EmbedderSpec::code_baseline()).unwrap();
    let mut group = c.benchmark_group("embed_code/2000");
    group.throughput(Throughput::Elements(functions.len() as u64));
    group.sample_size(10);
    for exec in Execution::available() {
        group.bench_with_input(BenchmarkId::from_parameter(exec), &exec, |b, &exec| {
            b.iter(|| code.embed_code_batch(&functions, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, scoring, embedding);
criterion_main!(benches);
