//! `boiler-fdd` command-line tool.

mod manifest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use boiler_fdd::bas::{self, PointMap, TimeSeries, DEFAULT_MEDIAN_WINDOW};
use boiler_fdd::calibration::{self, RatedPoint, DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use boiler_fdd::dataset::{self, operating_grid, relabel, Dataset, GenerateOptions, GridConfig, LabelScheme};
use boiler_fdd::emulator::{simulate_with_room, BoilerSpec, OperatingPoint, DEFAULT_RELATIVE_HUMIDITY, DEFAULT_ROOM_TEMPERATURE};
use boiler_fdd::experiments::{self, GeneralizationPlan, StudyConfig, MID_RANGE_BOILER};
use boiler_fdd::fault::FaultCondition;
use boiler_fdd::ml::grid::{grid_search, HyperGrid, DEFAULT_FOLDS};
use boiler_fdd::ml::split::stratified_split;
use boiler_fdd::ml::{Algorithm, LabeledData, TrainedClassifier};
use boiler_fdd::par::{self, Jobs};
use chrono::TimeDelta;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "boiler-fdd", version, about = "Boiler emulator, fault datasets and FDD classifiers")]
struct Cli {
    /// Worker threads; 0 uses every core, 1 runs sequentially.
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Root of every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON study configuration (study commands).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the gas-side coefficient to the rated point and write a calibrated spec.
    Calibrate(CalibrateArgs),
    /// Simulate one operating point and print the result as JSON.
    Simulate(SimulateArgs),
    /// Sweep the operating grid over every fault condition into a dataset CSV.
    Sweep(SweepArgs),
    /// Map detailed labels onto the 22- or 4-class scheme.
    Relabel(RelabelArgs),
    /// Grid-search, refit and evaluate one classifier on a dataset.
    Train(TrainArgs),
    /// Score a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Run one of the studies.
    #[command(subcommand)]
    Study(StudyCommand),
    /// Align BAS time series into unlabeled feature rows.
    Ingest(IngestArgs),
    /// Median-filter a `timestamp,value` series.
    Filter(FilterArgs),
}

#[derive(Debug, Args)]
struct CalibrateArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Output spec path; defaults to overwriting the input.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Rated-point JSON overriding the one derived from the spec.
    #[arg(long)]
    rated: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    firing: f64,
    /// Water flow, kg/s; defaults to the nominal flow.
    #[arg(long)]
    flow: Option<f64>,
    /// Return water temperature, K; defaults to the nominal one.
    #[arg(long = "return")]
    t_return: Option<f64>,
    /// Outdoor air temperature, K.
    #[arg(long, default_value_t = 294.0)]
    oat: f64,
    #[arg(long, default_value_t = DEFAULT_RELATIVE_HUMIDITY)]
    rh: f64,
    /// `normal`, `excess_air:Z`, `fouling:R` or `scaling:R`.
    #[arg(long, default_value = "normal", value_parser = parse_fault)]
    fault: FaultCondition,
    /// Room temperature for the flue-loss reference, K.
    #[arg(long, default_value_t = DEFAULT_ROOM_TEMPERATURE)]
    room: f64,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long)]
    spec: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Operating-grid JSON; defaults to the built-in 400-point grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long, default_value = "31")]
    scheme: LabelScheme,
    /// Add the fuel mass flow as an extra feature column.
    #[arg(long)]
    fuel_flow: bool,
}

#[derive(Debug, Args)]
struct RelabelArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    scheme: LabelScheme,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    alg: Algorithm,
    /// Relabel a detailed dataset before training.
    #[arg(long)]
    scheme: Option<LabelScheme>,
    #[arg(long, default_value_t = experiments::SINGLE_TEST_FRACTION)]
    test_fraction: f64,
    #[arg(long, default_value_t = DEFAULT_FOLDS)]
    folds: usize,
    /// Hyperparameter grid JSON replacing the default grid.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Output directory for model.json, report.json and confusion.csv.
    #[arg(long, default_value = "model")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Label scheme of the model; inferred from its classes when omitted.
    #[arg(long)]
    scheme: Option<LabelScheme>,
    /// Directory for report.json and confusion.csv.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StudyArgs {
    /// Calibrated spec files (override the config's list).
    #[arg(long = "spec", num_args = 1..)]
    specs: Vec<PathBuf>,
    #[arg(long)]
    scheme: Option<LabelScheme>,
    /// Comma-separated algorithms.
    #[arg(long, value_delimiter = ',')]
    alg: Vec<Algorithm>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    fuel_flow: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Subcommand)]
enum StudyCommand {
    /// Per-boiler accuracy tables.
    Single(StudyArgs),
    /// Cross-boiler generalization iterations.
    Generalize {
        #[command(flatten)]
        common: StudyArgs,
        /// Training boiler of iteration 1.
        #[arg(long, default_value = MID_RANGE_BOILER)]
        mid: String,
        /// Boilers withheld in iteration 4.
        #[arg(long, value_delimiter = ',')]
        withheld: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4")]
        iterations: Vec<u8>,
    },
    /// Output, efficiency and gas-use impact of each fault at the rated point.
    Impact {
        #[arg(long = "spec", num_args = 1.., required = true)]
        specs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
struct IngestArgs {
    /// One `timestamp,value` CSV per point, named after the point.
    #[arg(long = "series", num_args = 1..)]
    series: Vec<PathBuf>,
    /// Wide CSV with a timestamp column and one column per point.
    #[arg(long)]
    wide: Option<PathBuf>,
    /// JSON object mapping BAS point names to feature names.
    #[arg(long)]
    map: PathBuf,
    /// Resampling interval in seconds.
    #[arg(long, default_value_t = 300)]
    interval: i64,
    /// Median-filter every point first with this odd window (1 disables).
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    window: usize,
    #[arg(long, default_value = "site")]
    boiler_id: String,
    /// Prefix rows with their timestamp.
    #[arg(long)]
    timestamps: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FilterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MEDIAN_WINDOW)]
    window: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_fault(s: &str) -> Result<FaultCondition, String> {
    let (kind, mag) = match s.split_once(':') {
        Some((k, m)) => (k, Some(m.parse::<f64>().map_err(|e| format!("magnitude `{m}`: {e}"))?)),
        None => (s, None),
    };
    let fault = match (kind.to_ascii_lowercase().replace('-', "_").as_str(), mag) {
        ("normal" | "none", None) => FaultCondition::Normal,
        ("excess_air" | "ea", Some(m)) => FaultCondition::ExcessAir(m),
        ("fouling", Some(m)) => FaultCondition::Fouling(m),
        ("scaling", Some(m)) => FaultCondition::Scaling(m),
        _ => return Err(format!("unknown fault `{s}` (normal, excess_air:Z, fouling:R, scaling:R)")),
    };
    fault.validate().map_err(|e| e.to_string())?;
    Ok(fault)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, serde_json::to_string_pretty(value)? + "\n")
        .with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl serde::Serialize) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

/// Loads a dataset and relabels it when a coarser scheme is requested.
fn load_data(path: &Path, scheme: Option<LabelScheme>) -> anyhow::Result<Dataset> {
    let ds = Dataset::load_csv(path)?;
    Ok(match scheme {
        Some(s) if s != ds.scheme => relabel(&ds, s)?,
        _ => ds,
    })
}

fn study_config(cli: &Cli, args: &StudyArgs, default_scheme: LabelScheme) -> anyhow::Result<StudyConfig> {
    let mut cfg = match &cli.config {
        Some(p) => StudyConfig::load(p).with_context(|| format!("reading {}", p.display()))?,
        None => StudyConfig {
            scheme: default_scheme,
            ..StudyConfig::default()
        },
    };
    if !args.specs.is_empty() {
        cfg.specs = args.specs.clone();
    }
    if let Some(s) = args.scheme {
        cfg.scheme = s;
    }
    if !args.alg.is_empty() {
        cfg.algorithms = args.alg.clone();
    }
    if let Some(f) = args.test_fraction {
        cfg.test_fraction = f;
    }
    if let Some(k) = args.folds {
        cfg.folds = k;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.fuel_flow |= args.fuel_flow;
    if cfg.specs.is_empty() {
        bail!(boiler_fdd::Error::Config("no spec files given (--spec or config `specs`)".into()));
    }
    Ok(cfg)
}

fn run(cli: &Cli, m: &mut RunManifest) -> anyhow::Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Calibrate(a) => {
            let spec = BoilerSpec::load(&a.spec)?;
            let rated = match &a.rated {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => RatedPoint::from_spec(&spec),
            };
            let (calibrated, report) = calibration::calibrate_gas_htc(&spec, &rated, a.tol, a.max_iter)?;
            let out = a.out.clone().unwrap_or_else(|| a.spec.clone());
            calibrated.save(&out)?;
            let validation = calibration::validate_spec(&calibrated)?;
            print_json(&json!({ "calibration": report, "validation": validation }))?;
            m.io(&[&a.spec], &[&out]);
            m.snapshot(json!({ "rated": rated, "tol": a.tol, "max_iter": a.max_iter }));
            m.write_beside(&out)?;
        }
        Command::Simulate(a) => {
            let spec = BoilerSpec::load(&a.spec)?;
            let op = OperatingPoint {
                firing_fraction: a.firing,
                water_flow: a.flow.unwrap_or(spec.nominal_water_flow),
                t_return: a.t_return.unwrap_or(spec.nominal_return_temp),
                t_outdoor: a.oat,
                rh: a.rh,
            };
            print_json(&simulate_with_room(&spec, &op, &a.fault, a.room)?)?;
        }
        Command::Sweep(a) => {
            let spec = BoilerSpec::load(&a.spec)?;
            let grid: GridConfig = match &a.grid {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
                None => GridConfig::default(),
            };
            let ops = operating_grid(&grid, spec.nominal_water_flow)?;
            let ds = dataset::generate(&spec, &ops, &dataset::fault_grid(), GenerateOptions { fuel_flow: a.fuel_flow })?;
            let ds = if a.scheme == LabelScheme::Full31 { ds } else { relabel(&ds, a.scheme)? };
            ds.save_csv(&a.out)?;
            eprintln!("{} rows ({} excluded) -> {}", ds.len(), ds.excluded, a.out.display());
            m.io(&[&a.spec], &[&a.out]);
            m.snapshot(json!({ "grid": grid, "scheme": a.scheme, "fuel_flow": a.fuel_flow }));
            m.write_beside(&a.out)?;
        }
        Command::Relabel(a) => {
            let ds = relabel(&Dataset::load_csv(&a.data)?, a.scheme)?;
            ds.save_csv(&a.out)?;
            m.io(&[&a.data], &[&a.out]);
            m.snapshot(json!({ "scheme": a.scheme }));
            m.write_beside(&a.out)?;
        }
        Command::Train(a) => {
            let ds = load_data(&a.data, a.scheme)?;
            let data = LabeledData::from_dataset(&ds)?;
            let grid = match &a.grid {
                Some(p) => serde_json::from_str::<HyperGrid>(&std::fs::read_to_string(p)?)?,
                None => HyperGrid::default_for(a.alg),
            };
            if grid.algorithm() != a.alg {
                bail!(boiler_fdd::Error::Config(format!("grid file describes {}, not {}", grid.algorithm(), a.alg)));
            }
            let (tr, te) = stratified_split(&data.y, data.n_classes(), a.test_fraction, seed)?;
            let result = grid_search(&grid, &data.subset(&tr), a.folds, seed)?;
            let model = result.model.clone().with_feature_names(&ds.feature_names());
            let report = model.evaluate(&data.subset(&te))?;
            std::fs::create_dir_all(&a.out)?;
            model.save(a.out.join("model.json"))?;
            write_json(&a.out.join("report.json"), &report)?;
            write_json(&a.out.join("grid_scores.json"), &result.scores)?;
            std::fs::write(a.out.join("confusion.csv"), report.confusion.to_csv())?;
            print!("{}", report.to_text());
            println!("best parameters {}", result.best.to_value());
            m.io(&[&a.data], &[&a.out]);
            m.snapshot(json!({
                "algorithm": a.alg, "scheme": ds.scheme, "test_fraction": a.test_fraction,
                "folds": a.folds, "grid": grid,
            }));
            m.write_in(&a.out)?;
        }
        Command::Evaluate(a) => {
            let model = TrainedClassifier::load(&a.model)?;
            let scheme = match a.scheme {
                Some(s) => Some(s),
                None => [LabelScheme::Full31, LabelScheme::MergedExcessAir22, LabelScheme::Categorical4]
                    .into_iter()
                    .find(|s| {
                        let classes = s.classes();
                        model.classes.iter().all(|c| classes.contains(c))
                    }),
            };
            let ds = load_data(&a.data, scheme)?;
            let report = model.evaluate(&LabeledData::from_dataset(&ds)?)?;
            print!("{}", report.to_text());
            if let Some(out) = &a.out {
                std::fs::create_dir_all(out)?;
                write_json(&out.join("report.json"), &report)?;
                std::fs::write(out.join("confusion.csv"), report.confusion.to_csv())?;
                m.io(&[&a.model, &a.data], &[out]);
                m.snapshot(json!({ "scheme": ds.scheme }));
                m.write_in(out)?;
            }
        }
        Command::Study(StudyCommand::Single(a)) => {
            let cfg = study_config(cli, a, LabelScheme::MergedExcessAir22)?;
            let specs = cfg.load_specs()?;
            let study = experiments::run_single_boiler_study(&specs, &cfg)?;
            experiments::write_single_study(&study, &a.out)?;
            print!("{}", experiments::single_summary(&study));
            let inputs: Vec<&Path> = cfg.specs.iter().map(PathBuf::as_path).collect();
            m.io(&inputs, &[&a.out]);
            m.snapshot(serde_json::to_value(&cfg)?);
            m.write_in(&a.out)?;
        }
        Command::Study(StudyCommand::Generalize {
            common,
            mid,
            withheld,
            iterations,
        }) => {
            let cfg = study_config(cli, common, LabelScheme::MergedExcessAir22)?;
            let specs = cfg.load_specs()?;
            let ids: Vec<String> = specs.iter().map(|s| s.id.clone()).collect();
            let plans: Vec<GeneralizationPlan> = GeneralizationPlan::standard(&ids, mid, withheld)
                .into_iter()
                .filter(|p| iterations.contains(&p.iteration))
                .collect();
            let reports = plans
                .iter()
                .map(|p| experiments::run_generalization(p, &specs, &cfg.algorithms, &cfg))
                .collect::<boiler_fdd::Result<Vec<_>>>()?;
            experiments::write_generalization(&reports, &common.out)?;
            print!("{}", experiments::generalization_summary(&reports));
            let inputs: Vec<&Path> = cfg.specs.iter().map(PathBuf::as_path).collect();
            m.io(&inputs, &[&common.out]);
            m.snapshot(json!({ "study": cfg, "plans": plans }));
            m.write_in(&common.out)?;
        }
        Command::Study(StudyCommand::Impact { specs, out }) => {
            let reports = specs
                .iter()
                .map(|p| {
                    let spec = BoilerSpec::load(p)?;
                    experiments::fault_impact_report(&spec, &dataset::fault_grid())
                })
                .collect::<boiler_fdd::Result<Vec<_>>>()?;
            experiments::write_impact(&reports, out)?;
            let inputs: Vec<&Path> = specs.iter().map(PathBuf::as_path).collect();
            m.io(&inputs, &[out]);
            m.write_in(out)?;
        }
        Command::Ingest(a) => {
            let mut series = a
                .series
                .iter()
                .map(TimeSeries::load_csv)
                .collect::<boiler_fdd::Result<Vec<_>>>()?;
            if let Some(w) = &a.wide {
                series.extend(bas::load_wide_csv(w)?);
            }
            if a.window > 1 {
                series = series
                    .iter()
                    .map(|s| bas::median_filter(s, a.window))
                    .collect::<boiler_fdd::Result<Vec<_>>>()?;
            }
            let map = PointMap::load(&a.map)?;
            let rows = bas::to_feature_rows(&map, &series, TimeDelta::seconds(a.interval), &a.boiler_id)?;
            rows.write_csv(std::fs::File::create(&a.out)?, a.timestamps)?;
            eprintln!("{} rows -> {}", rows.rows.len(), a.out.display());
            let mut inputs: Vec<&Path> = a.series.iter().map(PathBuf::as_path).collect();
            inputs.extend(a.wide.as_deref());
            inputs.push(&a.map);
            m.io(&inputs, &[&a.out]);
            m.snapshot(json!({ "interval_s": a.interval, "window": a.window, "boiler_id": a.boiler_id }));
            m.write_beside(&a.out)?;
        }
        Command::Filter(a) => {
            let s = bas::median_filter(&TimeSeries::load_csv(&a.input)?, a.window)?;
            s.write_csv(std::fs::File::create(&a.out)?)?;
            m.io(&[&a.input], &[&a.out]);
            m.snapshot(json!({ "window": a.window }));
            m.write_beside(&a.out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut manifest = RunManifest::start(cli.seed.unwrap_or(0), cli.jobs);
    match par::with_jobs(Jobs::from_count(cli.jobs), || run(&cli, &mut manifest)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = match e.downcast_ref::<boiler_fdd::Error>() {
                Some(boiler_fdd::Error::Config(_)) => "configuration",
                Some(boiler_fdd::Error::Io(_)) => "i/o",
                Some(_) => "domain",
                None if e.downcast_ref::<std::io::Error>().is_some() => "i/o",
                None => "input",
            };
            eprintln!("error ({category}): {e:#}");
            ExitCode::from(1)
        }
    }
}
