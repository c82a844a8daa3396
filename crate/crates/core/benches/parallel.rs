use boiler_fdd::calibration::calibrate_spec;
use boiler_fdd::dataset::{generate, operating_grid, relabel, fault_grid, GenerateOptions, GridConfig, LabelScheme};
use boiler_fdd::emulator::BoilerSpec;
use boiler_fdd::ml::forest::{ForestParams, RandomForest};
use boiler_fdd::ml::grid::{grid_search, HyperGrid};
use boiler_fdd::ml::tree::{MaxFeatures, TreeParams};
use boiler_fdd::ml::LabeledData;
use boiler_fdd::par::{with_jobs, Jobs};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Jobs); 2] = [("sequential", Jobs::Sequential), ("parallel", Jobs::All)];

fn spec() -> BoilerSpec {
    calibrate_spec(&BoilerSpec::synthetic("bench", 5.6e5, 0.85, 37.0, 24.0)).unwrap().0
}

fn small_grid() -> GridConfig {
    GridConfig {
        firing: vec![0.5, 0.75, 1.0],
        flow_fraction: vec![0.8, 1.0, 1.2],
        t_outdoor: vec![263.0, 283.0],
        t_return: vec![323.0, 343.0],
        ..GridConfig::default()
    }
}

fn data() -> LabeledData {
    let s = spec();
    let ops = operating_grid(&small_grid(), s.nominal_water_flow).unwrap();
    let ds = generate(&s, &ops, &fault_grid(), GenerateOptions::default()).unwrap();
    LabeledData::from_dataset(&relabel(&ds, LabelScheme::MergedExcessAir22).unwrap()).unwrap()
}

fn sweep(c: &mut Criterion) {
    let s = spec();
    let ops = operating_grid(&GridConfig::default(), s.nominal_water_flow).unwrap();
    let faults = fault_grid();
    let mut g = c.benchmark_group("sweep_default_grid");
    g.sample_size(10);
    for (name, jobs) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || generate(&s, &ops, &faults, GenerateOptions::default()).unwrap()))
        });
    }
    g.finish();
}

fn forest(c: &mut Criterion) {
    let d = data();
    let params = ForestParams {
        tree: TreeParams {
            max_depth: Some(15),
            max_features: MaxFeatures::Sqrt,
            ..TreeParams::default()
        },
        n_estimators: 50,
        bootstrap: true,
    };
    let mut g = c.benchmark_group("forest_fit_50");
    g.sample_size(10);
    for (name, jobs) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || RandomForest::fit(&d.x, &d.y, d.n_classes(), &params, 1).unwrap()))
        });
    }
    g.finish();
}

fn search(c: &mut Criterion) {
    let d = data();
    let grid = HyperGrid::Dt {
        max_depth: vec![Some(5), Some(10)],
        min_samples_leaf: vec![1, 5],
        min_samples_split: vec![2, 10],
        criterion: vec![boiler_fdd::ml::tree::Criterion::Gini],
        splitter: vec![boiler_fdd::ml::tree::Splitter::Best],
    };
    let mut g = c.benchmark_group("grid_search_dt");
    g.sample_size(10);
    for (name, jobs) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| with_jobs(jobs, || grid_search(&grid, &d, 5, 3).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, sweep, forest, search);
criterion_main!(benches);
