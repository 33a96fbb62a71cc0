// Copyright 2026 The fas Authors
// SPDX-License-Identifier: Apache-2.0

//! Sequential versus data-parallel trial execution. Without the `parallel`
//! feature both rows run the sequential path.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use fas_core::exec::ExecMode;
use fas_core::protocol::CaseStrategy;
use fas_core::simulator::{run_scenario_with, ScenarioConfig};

fn scenario(trials: u64) -> ScenarioConfig {
    let case = CaseStrategy::Case3 {
        pd_holds_share: false,
        r: 5,
    };
    let mut c = ScenarioConfig::new(case, 2, 5, 1, trials);
    c.noise = 0.02;
    c
}

fn bench_modes(c: &mut Criterion) {
    let mut group = c.benchmark_group("simulate_case3");
    group
        .sample_size(10)
        .measurement_time(Duration::from_secs(5));
    for trials in [16u64, 64, 256] {
        let config = scenario(trials);
        group.throughput(Throughput::Elements(trials));
        for (name, mode) in [
            ("sequential", ExecMode::Sequential),
            ("parallel", ExecMode::Parallel),
        ] {
            group.bench_with_input(BenchmarkId::new(name, trials), &config, |b, config| {
                b.iter(|| run_scenario_with(black_box(config), mode).expect("valid scenario"))
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_modes);
criterion_main!(benches);
