//! End-to-end studies: per-boiler accuracy tables, cross-boiler
//! generalization and the fault energy-impact report.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{self, operating_grid, relabel, GenerateOptions, GridConfig, LabelScheme};
use crate::emulator::{simulate, BoilerSpec};
use crate::error::{Error, Result};
use crate::fault::{FaultCondition, FaultKind};
use crate::ml::grid::{grid_search, HyperGrid, DEFAULT_FOLDS};
use crate::ml::metrics::EvalReport;
use crate::ml::model::{Algorithm, Params};
use crate::ml::split::stratified_split;
use crate::ml::LabeledData;
use crate::{par, seed};

/// Training boiler of generalization iteration 1.
pub const MID_RANGE_BOILER: &str = "vitorond-560";
/// Held-out share in the single-boiler study (67/33 split).
pub const SINGLE_TEST_FRACTION: f64 = 0.33;
/// Held-out share wherever generalization splits a dataset (80/20).
pub const POOLED_TEST_FRACTION: f64 = 0.2;

const SPLIT_STREAM: u64 = 10;
const SEARCH_STREAM: u64 = 11;
const GENERALIZE_STREAM: u64 = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Calibrated spec files, one per boiler.
    pub specs: Vec<PathBuf>,
    pub scheme: LabelScheme,
    pub algorithms: Vec<Algorithm>,
    pub seed: u64,
    pub test_fraction: f64,
    pub folds: usize,
    pub grid: GridConfig,
    pub fuel_flow: bool,
    /// Per-algorithm replacements for the default hyperparameter grids.
    pub hyper: BTreeMap<Algorithm, HyperGrid>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            specs: Vec::new(),
            scheme: LabelScheme::MergedExcessAir22,
            algorithms: Algorithm::ALL.to_vec(),
            seed: 0,
            test_fraction: SINGLE_TEST_FRACTION,
            folds: DEFAULT_FOLDS,
            grid: GridConfig::default(),
            fuel_flow: false,
            hyper: BTreeMap::new(),
        }
    }
}

impl StudyConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn hyper_grid(&self, algorithm: Algorithm) -> Result<HyperGrid> {
        match self.hyper.get(&algorithm) {
            Some(g) if g.algorithm() != algorithm => Err(Error::config(format!(
                "grid override for {algorithm} describes {}",
                g.algorithm()
            ))),
            Some(g) => Ok(g.clone()),
            None => Ok(HyperGrid::default_for(algorithm)),
        }
    }

    /// Loads every referenced spec, insisting on calibration.
    pub fn load_specs(&self) -> Result<Vec<BoilerSpec>> {
        self.specs
            .iter()
            .map(|p| {
                let spec = BoilerSpec::load(p)?;
                spec.h_outer()?;
                Ok(spec)
            })
            .collect()
    }
}

/// Generates, relabels and converts one boiler's dataset.
pub fn boiler_data(spec: &BoilerSpec, cfg: &StudyConfig) -> Result<LabeledData> {
    let ops = operating_grid(&cfg.grid, spec.nominal_water_flow)?;
    let ds = dataset::generate(spec, &ops, &dataset::fault_grid(), GenerateOptions { fuel_flow: cfg.fuel_flow })?;
    LabeledData::from_dataset(&relabel(&ds, cfg.scheme)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCell {
    pub boiler_id: String,
    pub algorithm: Algorithm,
    pub accuracy: f64,
    pub cv_accuracy: f64,
    pub best_params: Params,
    pub n_train: usize,
    pub n_test: usize,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleStudy {
    pub scheme: LabelScheme,
    pub seed: u64,
    pub boilers: Vec<String>,
    pub algorithms: Vec<Algorithm>,
    /// Boiler-major, algorithm-minor.
    pub cells: Vec<StudyCell>,
}

impl SingleStudy {
    pub fn cell(&self, boiler: &str, algorithm: Algorithm) -> Option<&StudyCell> {
        self.cells
            .iter()
            .find(|c| c.boiler_id == boiler && c.algorithm == algorithm)
    }
}

/// Grid search on the training rows, refit, score on the held-out rows.
fn train_and_score(
    train: &LabeledData,
    test: &LabeledData,
    algorithm: Algorithm,
    cfg: &StudyConfig,
    seed: u64,
) -> Result<(EvalReport, Params, f64)> {
    let result = grid_search(&cfg.hyper_grid(algorithm)?, train, cfg.folds, seed)?;
    let report = result.model.evaluate(test)?;
    let cv = result.scores[result.best_index].mean_accuracy;
    Ok((report, result.best, cv))
}

/// Per-(boiler, algorithm) grid search, refit and held-out evaluation.
pub fn run_single_boiler_study(specs: &[BoilerSpec], cfg: &StudyConfig) -> Result<SingleStudy> {
    let datasets = specs
        .iter()
        .map(|s| boiler_data(s, cfg))
        .collect::<Result<Vec<_>>>()?;
    let splits = datasets
        .iter()
        .enumerate()
        .map(|(b, d)| {
            let (tr, te) = stratified_split(
                &d.y,
                d.n_classes(),
                cfg.test_fraction,
                seed::derive(cfg.seed, &[SPLIT_STREAM, b as u64]),
            )?;
            Ok((d.subset(&tr), d.subset(&te)))
        })
        .collect::<Result<Vec<_>>>()?;

    let n_alg = cfg.algorithms.len();
    let results = par::map_range(specs.len() * n_alg, |i| {
        let (b, a) = (i / n_alg, i % n_alg);
        let algorithm = cfg.algorithms[a];
        let (train, test) = &splits[b];
        let cell_seed = seed::derive(cfg.seed, &[SEARCH_STREAM, b as u64, algorithm as u64]);
        train_and_score(train, test, algorithm, cfg, cell_seed).map(|(report, best_params, cv)| StudyCell {
            boiler_id: specs[b].id.clone(),
            algorithm,
            accuracy: report.accuracy,
            cv_accuracy: cv,
            best_params,
            n_train: train.len(),
            n_test: test.len(),
            report,
        })
    });
    Ok(SingleStudy {
        scheme: cfg.scheme,
        seed: cfg.seed,
        boilers: specs.iter().map(|s| s.id.clone()).collect(),
        algorithms: cfg.algorithms.clone(),
        cells: results.into_iter().collect::<Result<Vec<_>>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneralizationPlan {
    pub iteration: u8,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl GeneralizationPlan {
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.iteration) {
            return Err(Error::config(format!("iteration {} is not 1..=4", self.iteration)));
        }
        if self.train.is_empty() {
            return Err(Error::config("generalization plan has no training boilers"));
        }
        match self.iteration {
            1 | 4 => {
                if self.iteration == 1 && self.train.len() != 1 {
                    return Err(Error::config("iteration 1 trains on exactly one boiler"));
                }
                if self.test.is_empty() {
                    return Err(Error::config(format!("iteration {} has no test boilers", self.iteration)));
                }
                if let Some(b) = self.test.iter().find(|b| self.train.contains(b)) {
                    return Err(Error::config(format!(
                        "iteration {}: boiler {b} is both trained on and tested",
                        self.iteration
                    )));
                }
            }
            2 => {
                if let Some(b) = self.test.iter().find(|b| !self.train.contains(b)) {
                    return Err(Error::config(format!("iteration 2 tests {b}, which is not in the pool")));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// The four iterations over `boilers`: train on `mid` alone, pool all,
    /// pool with an 80/20 split, and pool all but `withheld`.
    pub fn standard(boilers: &[String], mid: &str, withheld: &[String]) -> Vec<GeneralizationPlan> {
        let others = |skip: &dyn Fn(&String) -> bool| boilers.iter().filter(|b| !skip(b)).cloned().collect();
        vec![
            GeneralizationPlan {
                iteration: 1,
                train: vec![mid.to_string()],
                test: others(&|b| b == mid),
            },
            GeneralizationPlan {
                iteration: 2,
                train: boilers.to_vec(),
                test: boilers.to_vec(),
            },
            GeneralizationPlan {
                iteration: 3,
                train: boilers.to_vec(),
                test: Vec::new(),
            },
            GeneralizationPlan {
                iteration: 4,
                train: others(&|b| withheld.contains(b)),
                test: withheld.to_vec(),
            },
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRow {
    pub algorithm: Algorithm,
    /// Boiler id, or `pooled` in iteration 3.
    pub target: String,
    pub accuracy: f64,
    pub n_test: usize,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub plan: GeneralizationPlan,
    pub rows: Vec<GeneralizationRow>,
}

impl GeneralizationReport {
    pub fn accuracy(&self, algorithm: Algorithm, target: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.target == target)
            .map(|r| r.accuracy)
    }
}

fn pool(parts: &[&LabeledData]) -> Result<LabeledData> {
    let first = parts.first().ok_or_else(|| Error::config("nothing to pool"))?;
    let cols = first.x.cols();
    let mut data = Vec::new();
    let mut y = Vec::new();
    for p in parts {
        if p.classes != first.classes || p.x.cols() != cols {
            return Err(Error::data("pooled datasets disagree on classes or columns"));
        }
        data.extend_from_slice(p.x.as_slice());
        y.extend_from_slice(&p.y);
    }
    LabeledData::new(crate::ml::Matrix::new(y.len(), cols, data)?, y, first.classes.clone())
}

/// Runs one generalization iteration. Hyperparameters come from one grid
/// search on the iteration's training input and stay frozen for every target.
pub fn run_generalization(
    plan: &GeneralizationPlan,
    specs: &[BoilerSpec],
    algorithms: &[Algorithm],
    cfg: &StudyConfig,
) -> Result<GeneralizationReport> {
    plan.validate()?;
    if cfg.scheme != LabelScheme::MergedExcessAir22 {
        return Err(Error::config(format!(
            "generalization studies use the 22-class scheme, got {}",
            cfg.scheme
        )));
    }
    let mut ids: Vec<&String> = plan.train.iter().chain(&plan.test).collect();
    ids.sort();
    ids.dedup();
    let mut data = BTreeMap::new();
    for id in ids {
        let spec = specs
            .iter()
            .find(|s| &s.id == id)
            .ok_or_else(|| Error::config(format!("no spec for boiler `{id}`")))?;
        data.insert(id.clone(), boiler_data(spec, cfg)?);
    }

    let split_seed = |key: u64| seed::derive(cfg.seed, &[GENERALIZE_STREAM, plan.iteration as u64, key]);
    // Per-boiler 80/20 splits for iteration 2, a pooled split for 3.
    let mut held_out: Vec<(String, LabeledData)> = Vec::new();
    let train = match plan.iteration {
        1 | 4 => pool(&plan.train.iter().map(|b| &data[b]).collect::<Vec<_>>())?,
        2 => {
            let mut parts = Vec::new();
            for (i, b) in plan.train.iter().enumerate() {
                let d = &data[b];
                let (tr, te) = stratified_split(&d.y, d.n_classes(), POOLED_TEST_FRACTION, split_seed(i as u64))?;
                parts.push(d.subset(&tr));
                if plan.test.contains(b) {
                    held_out.push((b.clone(), d.subset(&te)));
                }
            }
            pool(&parts.iter().collect::<Vec<_>>())?
        }
        _ => {
            let all = pool(&plan.train.iter().map(|b| &data[b]).collect::<Vec<_>>())?;
            let (tr, te) = stratified_split(&all.y, all.n_classes(), POOLED_TEST_FRACTION, split_seed(0))?;
            held_out.push(("pooled".into(), all.subset(&te)));
            all.subset(&tr)
        }
    };
    if matches!(plan.iteration, 1 | 4) {
        held_out = plan.test.iter().map(|b| (b.clone(), data[b].clone())).collect();
    }

    let per_alg = par::map(algorithms, |&algorithm| -> Result<Vec<GeneralizationRow>> {
        let s = seed::derive(cfg.seed, &[GENERALIZE_STREAM, plan.iteration as u64, 100 + algorithm as u64]);
        let result = grid_search(&cfg.hyper_grid(algorithm)?, &train, cfg.folds, s)?;
        held_out
            .iter()
            .map(|(target, test)| {
                let report = result.model.evaluate(test)?;
                Ok(GeneralizationRow {
                    algorithm,
                    target: target.clone(),
                    accuracy: report.accuracy,
                    n_test: test.len(),
                    params: result.best,
                })
            })
            .collect()
    });
    let mut rows = Vec::new();
    for r in per_alg {
        rows.extend(r?);
    }
    Ok(GeneralizationReport {
        plan: plan.clone(),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactRow {
    pub label: String,
    pub kind: FaultKind,
    pub magnitude: f64,
    /// W
    pub q_out: f64,
    /// Fraction of the fault-free output lost.
    pub output_reduction: f64,
    pub eta_thermal: f64,
    /// Percentage points relative to fault-free.
    pub thermal_efficiency_change: f64,
    pub eff_combustion: f64,
    /// Percentage points relative to fault-free.
    pub combustion_efficiency_change: f64,
    /// Extra fuel needed to meet the fault-free demand, r/(1 − r).
    pub consumption_increase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpactReport {
    pub boiler_id: String,
    pub baseline_q_out: f64,
    pub rows: Vec<ImpactRow>,
}

impl ImpactReport {
    pub fn row(&self, fault: &FaultCondition) -> Option<&ImpactRow> {
        let label = fault.label();
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "boiler_id",
            "fault",
            "kind",
            "magnitude",
            "q_out",
            "output_reduction",
            "eta_thermal",
            "thermal_efficiency_change_pp",
            "eff_combustion",
            "combustion_efficiency_change_pp",
            "consumption_increase",
        ])?;
        for r in &self.rows {
            w.write_record([
                self.boiler_id.clone(),
                r.label.clone(),
                r.kind.tag().to_string(),
                r.magnitude.to_string(),
                r.q_out.to_string(),
                r.output_reduction.to_string(),
                r.eta_thermal.to_string(),
                r.thermal_efficiency_change.to_string(),
                r.eff_combustion.to_string(),
                r.combustion_efficiency_change.to_string(),
                r.consumption_increase.to_string(),
            ])?;
        }
        String::from_utf8(w.into_inner().map_err(|e| Error::data(e.to_string()))?)
            .map_err(|e| Error::data(e.to_string()))
    }
}

/// Rated-point simulation at each fault level against the fault-free run.
pub fn fault_impact_report(spec: &BoilerSpec, faults: &[FaultCondition]) -> Result<ImpactReport> {
    let op = spec.rated_operating_point();
    let base = simulate(spec, &op, &FaultCondition::Normal)?;
    let rows = faults
        .iter()
        .map(|f| {
            let r = simulate(spec, &op, f)?;
            let reduction = 1.0 - r.q_out / base.q_out;
            Ok(ImpactRow {
                label: f.label(),
                kind: f.kind(),
                magnitude: f.magnitude().unwrap_or(0.0),
                q_out: r.q_out,
                output_reduction: reduction,
                eta_thermal: r.eta_thermal,
                thermal_efficiency_change: 100.0 * (r.eta_thermal - base.eta_thermal),
                eff_combustion: r.eff_combustion,
                combustion_efficiency_change: r.eff_combustion - base.eff_combustion,
                consumption_increase: reduction / (1.0 - reduction),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ImpactReport {
        boiler_id: spec.id.clone(),
        baseline_q_out: base.q_out,
        rows,
    })
}

fn pct(x: f64) -> String {
    format!("{:.1}%", 100.0 * x)
}

/// Writes `accuracy_table.csv`, one confusion matrix per cell,
/// `best_params.json` and `summary.md`.
pub fn write_single_study(study: &SingleStudy, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("accuracy_table.csv"))?;
    w.write_record(["boiler_id", "algorithm", "scheme", "accuracy", "cv_accuracy", "n_train", "n_test"])?;
    let mut params: BTreeMap<&str, BTreeMap<&str, serde_json::Value>> = BTreeMap::new();
    for c in &study.cells {
        w.write_record([
            c.boiler_id.clone(),
            c.algorithm.name().to_string(),
            study.scheme.to_string(),
            c.accuracy.to_string(),
            c.cv_accuracy.to_string(),
            c.n_train.to_string(),
            c.n_test.to_string(),
        ])?;
        fs::write(
            dir.join(format!("confusion_{}_{}.csv", c.boiler_id, c.algorithm.name())),
            c.report.confusion.to_csv(),
        )?;
        params
            .entry(&c.boiler_id)
            .or_default()
            .insert(c.algorithm.name(), c.best_params.to_value());
    }
    w.flush()?;
    fs::write(dir.join("best_params.json"), serde_json::to_string_pretty(&params)? + "\n")?;
    fs::write(dir.join("summary.md"), single_summary(study))?;
    Ok(())
}

pub fn single_summary(study: &SingleStudy) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# FDD accuracy, {}-class labels\n", study.scheme);
    let _ = writeln!(out, "| Classifier | {} |", study.boilers.join(" | "));
    let _ = writeln!(out, "|---|{}", "---|".repeat(study.boilers.len()));
    for &a in &study.algorithms {
        let cells: Vec<String> = study
            .boilers
            .iter()
            .map(|b| study.cell(b, a).map(|c| pct(c.accuracy)).unwrap_or_default())
            .collect();
        let _ = writeln!(out, "| {a} | {} |", cells.join(" | "));
    }
    out
}

pub fn generalization_summary(reports: &[GeneralizationReport]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Boiler model generalization\n");
    let _ = writeln!(out, "| Iteration | Training | Testing | Classifier | Accuracy |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for r in reports {
        for row in &r.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} |",
                r.plan.iteration,
                r.plan.train.join(", "),
                row.target,
                row.algorithm,
                pct(row.accuracy)
            );
        }
    }
    out
}

/// Writes `generalization.csv`, `best_params.json` and `summary.md`.
pub fn write_generalization(reports: &[GeneralizationReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("generalization.csv"))?;
    w.write_record(["iteration", "algorithm", "train", "target", "accuracy", "n_test"])?;
    let mut params: BTreeMap<String, BTreeMap<&str, serde_json::Value>> = BTreeMap::new();
    for r in reports {
        for row in &r.rows {
            w.write_record([
                r.plan.iteration.to_string(),
                row.algorithm.name().to_string(),
                r.plan.train.join(";"),
                row.target.clone(),
                row.accuracy.to_string(),
                row.n_test.to_string(),
            ])?;
            params
                .entry(format!("iteration-{}", r.plan.iteration))
                .or_default()
                .insert(row.algorithm.name(), row.params.to_value());
        }
    }
    w.flush()?;
    fs::write(dir.join("best_params.json"), serde_json::to_string_pretty(&params)? + "\n")?;
    fs::write(dir.join("summary.md"), generalization_summary(reports))?;
    Ok(())
}

/// Writes `impact_report.csv` and `summary.md`.
pub fn write_impact(reports: &[ImpactReport], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut csv_text = String::new();
    for (i, r) in reports.iter().enumerate() {
        let body = r.to_csv()?;
        // keep a single header
        csv_text.push_str(if i == 0 { &body } else { body.split_once('\n').map_or("", |(_, rest)| rest) });
    }
    fs::write(dir.join("impact_report.csv"), csv_text)?;
    let mut md = String::from("# Fault impact at the rated point\n\n");
    md.push_str("| Boiler | Fault | Output reduction | Thermal eff. change (pp) | Combustion eff. change (pp) | Gas increase |\n");
    md.push_str("|---|---|---|---|---|---|\n");
    for r in reports {
        for row in r.rows.iter().filter(|row| row.kind != FaultKind::Normal) {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {:.2} | {:.2} | {} |",
                r.boiler_id,
                row.label,
                pct(row.output_reduction),
                row.thermal_efficiency_change,
                row.combustion_efficiency_change,
                pct(row.consumption_increase)
            );
        }
    }
    fs::write(dir.join("summary.md"), md)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::calibrate_spec;

    fn small_cfg() -> StudyConfig {
        StudyConfig {
            grid: GridConfig {
                firing: vec![0.6, 1.0],
                flow_fraction: vec![0.8, 1.2],
                t_outdoor: vec![263.0, 283.0],
                t_return: vec![323.0, 343.0],
                ..GridConfig::default()
            },
            folds: 2,
            algorithms: vec![Algorithm::Knn, Algorithm::Dt],
            hyper: BTreeMap::from([
                (Algorithm::Knn, HyperGrid::Knn { k: vec![1, 3] }),
                (
                    Algorithm::Dt,
                    HyperGrid::single(&Params::Dt(crate::ml::tree::TreeParams::default())),
                ),
            ]),
            ..StudyConfig::default()
        }
    }

    fn boiler(id: &str, out: f64, eta: f64) -> BoilerSpec {
        calibrate_spec(&BoilerSpec::synthetic(id, out, eta, out * 6e-5, out * 4e-5)).unwrap().0
    }

    #[test]
    fn empty_algorithm_list_gives_empty_table() {
        let cfg = StudyConfig {
            algorithms: vec![],
            ..small_cfg()
        };
        let s = run_single_boiler_study(&[boiler("a", 5e5, 0.84)], &cfg).unwrap();
        assert!(s.cells.is_empty());
    }

    #[test]
    fn single_study_is_reproducible_and_writes_outputs() {
        let specs = [boiler("a", 5e5, 0.84)];
        let cfg = small_cfg();
        let a = run_single_boiler_study(&specs, &cfg).unwrap();
        let b = par::with_jobs(par::Jobs::Sequential, || run_single_boiler_study(&specs, &cfg).unwrap());
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 2);
        let dir = tempfile::tempdir().unwrap();
        write_single_study(&a, dir.path()).unwrap();
        for f in ["accuracy_table.csv", "best_params.json", "summary.md", "confusion_a_knn.csv", "confusion_a_dt.csv"] {
            assert!(dir.path().join(f).exists(), "{f}");
        }
    }

    #[test]
    fn overlapping_plans_are_rejected() {
        let p = GeneralizationPlan {
            iteration: 1,
            train: vec!["a".into()],
            test: vec!["a".into(), "b".into()],
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        let p = GeneralizationPlan {
            iteration: 4,
            train: vec!["a".into(), "b".into()],
            test: vec!["b".into()],
        };
        assert!(matches!(p.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn standard_plans_are_valid() {
        let ids: Vec<String> = ["a", "b", "c", "d"].map(String::from).to_vec();
        let plans = GeneralizationPlan::standard(&ids, "b", &["c".to_string()]);
        assert_eq!(plans.len(), 4);
        for p in &plans {
            p.validate().unwrap();
        }
        assert_eq!(plans[0].test, ["a", "c", "d"]);
        assert_eq!(plans[3].train, ["a", "b", "d"]);
    }

    #[test]
    fn generalization_runs_each_iteration() {
        let specs = [boiler("a", 5e5, 0.84), boiler("b", 3e5, 0.82)];
        let ids: Vec<String> = specs.iter().map(|s| s.id.clone()).collect();
        let cfg = small_cfg();
        for plan in GeneralizationPlan::standard(&ids, "a", &["b".to_string()]) {
            let r = run_generalization(&plan, &specs, &[Algorithm::Dt], &cfg).unwrap();
            let expected = match plan.iteration {
                3 => 1,
                2 => 2,
                _ => 1,
            };
            assert_eq!(r.rows.len(), expected, "iteration {}", plan.iteration);
            assert!(r.rows.iter().all(|row| (0.0..=1.0).contains(&row.accuracy)));
        }
        let cfg31 = StudyConfig {
            scheme: LabelScheme::Full31,
            ..small_cfg()
        };
        let plan = &GeneralizationPlan::standard(&ids, "a", &[])[2];
        assert!(run_generalization(plan, &specs, &[Algorithm::Dt], &cfg31).is_err());
    }

    #[test]
    fn impact_identity_and_zero_fault() {
        let spec = boiler("a", 5e5, 0.84);
        let r = fault_impact_report(&spec, &dataset::fault_grid()).unwrap();
        let normal = r.row(&FaultCondition::Normal).unwrap();
        assert_eq!(normal.output_reduction, 0.0);
        assert_eq!(normal.consumption_increase, 0.0);
        for row in &r.rows {
            let x = row.output_reduction;
            assert_eq!(row.consumption_increase, x / (1.0 - x));
            assert!((row.consumption_increase - (1.0 / (1.0 - x) - 1.0)).abs() < 1e-12);
        }
        let csv = r.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 32);
    }
}
