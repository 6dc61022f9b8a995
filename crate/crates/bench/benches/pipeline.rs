use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use instmix_bench::full_catalog;
use instmix_core::packing::pack_few_shot;
use instmix_core::seed;
use instmix_core::synth::{build_catalog, FixtureSpec};
use instmix_core::templates::render_single;
use instmix_core::{compose_plan, execute_plan, MixtureSpec, TemplateLibrary};

fn rendering(c: &mut Criterion) {
    let catalog = build_catalog(&FixtureSpec::uniform(1, 16));
    let library = TemplateLibrary::builtin();
    let variant = &library.variants()[7];
    let mut group = c.benchmark_group("render");
    for task in catalog.tasks() {
        let train = task.train_records();
        let template = library.intended_for(train[0])[0];
        group.bench_function(BenchmarkId::new("zero_shot", task.format.as_str()), |b| {
            let mut rng = seed::stream(0, "bench", "");
            b.iter(|| render_single(train[0], template, variant, &mut rng).unwrap())
        });
        group.bench_function(BenchmarkId::new("five_shot", task.format.as_str()), |b| {
            let mut rng = seed::stream(0, "bench", "");
            b.iter(|| pack_few_shot(train[0], &train, 5, template, variant, &mut rng).unwrap())
        });
    }
    group.finish();
}

fn planning(c: &mut Criterion) {
    let catalog = full_catalog(8);
    let spec = MixtureSpec::equal(100_000, 1);
    c.bench_function("compose_plan/1873_tasks_100k", |b| {
        b.iter(|| compose_plan(&catalog, &spec).unwrap())
    });
}

fn execution(c: &mut Criterion) {
    let catalog = full_catalog(8);
    let library = TemplateLibrary::builtin();
    let mut group = c.benchmark_group("execute_plan");
    group.sample_size(10);
    for total in [10_000usize, 50_000] {
        let spec = MixtureSpec::equal(total, 1);
        let plan = compose_plan(&catalog, &spec).unwrap();
        group.throughput(Throughput::Elements(total as u64));
        group.bench_with_input(BenchmarkId::from_parameter(total), &plan, |b, plan| {
            b.iter(|| execute_plan(plan, &catalog, &spec, &library).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, rendering, planning, execution);
criterion_main!(benches);
