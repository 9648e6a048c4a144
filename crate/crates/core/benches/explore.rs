use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pipecheck::checker::{explore, Config};
use pipecheck::parallel::parallel_available;
use pipecheck::workflow::{load_system, prepare, VerifyOptions};

const BUNDLES: [&str; 3] = ["netchain/netchain_wide.spec", "atp/atp_ok.spec", "p4xos/p4xos_fixed.spec"];

fn bench_explore(c: &mut Criterion) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models");
    let mut g = c.benchmark_group("explore");
    for rel in BUNDLES {
        let rs = load_system(&root.join(rel)).expect("bundled model loads");
        let (model, _) = prepare(&rs, &VerifyOptions::default()).expect("bundled model builds");
        let modes: &[bool] = if parallel_available() { &[false, true] } else { &[false] };
        for &parallel in modes {
            let name = if parallel { "parallel" } else { "sequential" };
            g.bench_with_input(BenchmarkId::new(name, rel), &model, |b, m| {
                b.iter(|| {
                    let mut m = m.clone();
                    explore(&mut m, Config { parallel, ..Config::default() })
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, bench_explore);
criterion_main!(benches);
