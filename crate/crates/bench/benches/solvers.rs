use std::hint::black_box;

use coagfuse::config::RunConfig;
use coagfuse::flow::{flow_particle, FlowStepSpec};
use coagfuse::kernels::FusionKernelParams;
use coagfuse::mc::{run_mc, EngineLimits, McEngine, ProbeSpec, SumTreeIndex};
use coagfuse::sectional::{coag_step, GridState};
use coagfuse::types::Particle;
use coagfuse_bench::mixed_system;
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sumtree(c: &mut Criterion) {
    let mut g = c.benchmark_group("sumtree");
    for n in [1_000usize, 100_000] {
        let idx = SumTreeIndex::new((0..n).map(|i| (1.0 / (1.0 + i as f64).powf(0.25), (1.0 + i as f64).sqrt())));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        g.bench_with_input(BenchmarkId::new("sample_pair", n), &n, |b, _| {
            b.iter(|| black_box((idx.sample_minus(&mut rng), idx.sample_plus(&mut rng))))
        });
        let mut idx = idx.clone();
        g.bench_with_input(BenchmarkId::new("update", n), &n, |b, &n| {
            b.iter(|| {
                let i = rng.gen_range(0..n);
                idx.set(i, (rng.gen(), rng.gen()));
            })
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let p = Particle::from_excess(3.0, 8.0).unwrap();
    let mut g = c.benchmark_group("flow_particle");
    for (name, mu) in [("closed_form", 0.0), ("radau", 1.0)] {
        let fus = FusionKernelParams::new(1.0, mu, 0.0).unwrap();
        let spec = FlowStepSpec::new(1.0, 0.5);
        g.bench_function(name, |b| b.iter(|| flow_particle(black_box(&p), &fus, &spec).unwrap()));
    }
    g.finish();
}

fn sectional(c: &mut Criterion) {
    let cfg = RunConfig::baseline();
    let grid = cfg.grid().unwrap();
    let coag = cfg.coag_kernel().unwrap();
    let state = GridState::from_particles(&grid, &mixed_system(2_000)).unwrap();
    c.bench_function("sectional/coag_step_64x32", |b| b.iter(|| coag_step(&grid, black_box(&state), &coag, 1e-4).unwrap()));
}

fn mc(c: &mut Criterion) {
    let cfg = RunConfig::baseline();
    let coag = cfg.coag_kernel().unwrap();
    let fus = cfg.fusion_kernel().unwrap();
    let mut g = c.benchmark_group("mc");
    g.sample_size(10);
    g.bench_function("proposal_10k", |b| {
        b.iter_batched(
            || McEngine::new(mixed_system(10_000), &coag, &fus, cfg.flow_spec()),
            |mut eng| {
                let mut rng = ChaCha8Rng::seed_from_u64(3);
                for _ in 0..1_000 {
                    black_box(eng.sample_event(0.0, &mut rng).unwrap());
                }
            },
            BatchSize::LargeInput,
        )
    });
    let mut sim = cfg.sim_config().unwrap();
    sim.n_particles = 2_000;
    sim.t_end = 0.5;
    g.bench_function("baseline_run_2k", |b| {
        b.iter(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let sys = cfg.initial_condition().generate(sim.n_particles, sim.v_min, 5, &mut rng).unwrap();
            run_mc(sys, &coag, &fus, cfg.flow_spec(), &sim, &ProbeSpec::default(), &EngineLimits::default(), &mut rng).unwrap()
        })
    });
    g.finish();
}

criterion_group!(benches, sumtree, flow, sectional, mc);
criterion_main!(benches);
