use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::data::{LabeledData, Matrix};
use super::forest::{ForestParams, RandomForest};
use super::knn::Knn;
use super::metrics::{ConfusionMatrix, EvalReport};
use super::scale::Standardizer;
use super::svm::{Svm, SvmParams};
use super::tree::{DecisionTree, TreeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Knn,
    Dt,
    Rf,
    Svm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Knn, Algorithm::Dt, Algorithm::Rf, Algorithm::Svm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Knn => "knn",
            Algorithm::Dt => "dt",
            Algorithm::Rf => "rf",
            Algorithm::Svm => "svm",
        }
    }

    /// Distance- and kernel-based models see z-scored features.
    pub fn uses_scaling(self) -> bool {
        matches!(self, Algorithm::Knn | Algorithm::Svm)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name().to_uppercase())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(Algorithm::Knn),
            "dt" | "tree" => Ok(Algorithm::Dt),
            "rf" | "forest" => Ok(Algorithm::Rf),
            "svm" => Ok(Algorithm::Svm),
            other => Err(Error::config(format!("unknown algorithm `{other}` (knn, dt, rf, svm)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "lowercase")]
pub enum Params {
    Knn { k: usize },
    Dt(TreeParams),
    Rf(ForestParams),
    Svm(SvmParams),
}

impl Params {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            Params::Knn { .. } => Algorithm::Knn,
            Params::Dt(_) => Algorithm::Dt,
            Params::Rf(_) => Algorithm::Rf,
            Params::Svm(_) => Algorithm::Svm,
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("parameters serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "model", rename_all = "lowercase")]
pub enum Payload {
    Knn(Knn),
    Dt(DecisionTree),
    Rf(RandomForest),
    Svm(Svm),
}

/// Self-describing fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub algorithm: Algorithm,
    pub params: Params,
    /// Classes seen in training, in reporting order.
    pub classes: Vec<String>,
    #[serde(default)]
    pub feature_names: Vec<String>,
    pub scaled: bool,
    pub scaler: Option<Standardizer>,
    pub seed: u64,
    pub payload: Payload,
}

impl TrainedClassifier {
    pub fn fit(train: &LabeledData, params: &Params, seed: u64) -> Result<Self> {
        let data = train.compacted();
        if data.is_empty() {
            return Err(Error::data("cannot train on an empty dataset"));
        }
        let algorithm = params.algorithm();
        let scaler = algorithm.uses_scaling().then(|| Standardizer::fit(&data.x));
        let x = match &scaler {
            Some(s) => s.transform(&data.x),
            None => data.x.clone(),
        };
        let n = data.n_classes();
        let payload = match params {
            Params::Knn { k } => Payload::Knn(Knn::fit(&x, &data.y, n, *k)?),
            Params::Dt(p) => Payload::Dt(DecisionTree::fit(&x, &data.y, n, p, seed)?),
            Params::Rf(p) => Payload::Rf(RandomForest::fit(&x, &data.y, n, p, seed)?),
            Params::Svm(p) => Payload::Svm(Svm::fit(&x, &data.y, n, p)?),
        };
        Ok(Self {
            algorithm,
            params: *params,
            classes: data.classes,
            feature_names: Vec::new(),
            scaled: scaler.is_some(),
            scaler,
            seed,
            payload,
        })
    }

    pub fn with_feature_names(mut self, names: &[&str]) -> Self {
        self.feature_names = names.iter().map(|s| s.to_string()).collect();
        self
    }

    /// Class indices into `self.classes`.
    pub fn predict_indices(&self, x: &Matrix) -> Vec<usize> {
        let scaled;
        let x = match &self.scaler {
            Some(s) => {
                scaled = s.transform(x);
                &scaled
            }
            None => x,
        };
        match &self.payload {
            Payload::Knn(m) => m.predict(x),
            Payload::Dt(m) => m.predict(x),
            Payload::Rf(m) => m.predict(x),
            Payload::Svm(m) => m.predict(x),
        }
    }

    pub fn predict_labels(&self, x: &Matrix) -> Vec<String> {
        self.predict_indices(x)
            .into_iter()
            .map(|c| self.classes[c].clone())
            .collect()
    }

    /// Confusion matrix over the training classes.
    pub fn evaluate(&self, test: &LabeledData) -> Result<EvalReport> {
        if test.is_empty() {
            return Err(Error::Evaluation("empty test set".into()));
        }
        let counts = test.class_counts();
        let mut remap = vec![usize::MAX; test.n_classes()];
        let mut unseen = Vec::new();
        for (c, name) in test.classes.iter().enumerate() {
            match self.classes.iter().position(|k| k == name) {
                Some(i) => remap[c] = i,
                None if counts[c] > 0 => unseen.push(name.clone()),
                None => {}
            }
        }
        if !unseen.is_empty() {
            return Err(Error::Evaluation(format!(
                "test classes not seen in training: {}",
                unseen.join(", ")
            )));
        }
        let truth: Vec<usize> = test.y.iter().map(|&c| remap[c]).collect();
        let predicted = self.predict_indices(&test.x);
        let confusion = ConfusionMatrix::from_predictions(&self.classes, &truth, &predicted)?;
        let mut report = EvalReport::from_confusion(confusion);
        report.best_params = Some(self.params.to_value());
        Ok(report)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledData {
        let rows: Vec<[f64; 2]> = (0..40).map(|i| [(i % 4) as f64 * 100.0 + i as f64 * 0.1, (i % 2) as f64]).collect();
        let classes: Vec<String> = ["w", "a", "b", "c", "d"].map(String::from).to_vec();
        let labels: Vec<&str> = (0..40).map(|i| ["a", "b", "c", "d"][i % 4]).collect();
        LabeledData::from_labels(Matrix::from_rows(&rows).unwrap(), &labels, &classes).unwrap()
    }

    #[test]
    fn every_algorithm_fits_and_round_trips() {
        let d = toy();
        let all = [
            Params::Knn { k: 3 },
            Params::Dt(TreeParams::default()),
            Params::Rf(ForestParams { tree: TreeParams::default(), n_estimators: 5, bootstrap: true }),
            Params::Svm(SvmParams::new(100.0, 0.1)),
        ];
        for p in all {
            let m = TrainedClassifier::fit(&d, &p, 1).unwrap();
            assert_eq!(m.classes, vec!["a", "b", "c", "d"]);
            assert_eq!(m.scaled, p.algorithm().uses_scaling());
            let r = m.evaluate(&d).unwrap();
            assert_eq!(r.accuracy, 1.0, "{p:?}");
            let back: TrainedClassifier = serde_json::from_str(&m.to_json().unwrap()).unwrap();
            assert_eq!(back.predict_indices(&d.x), m.predict_indices(&d.x));
        }
    }

    #[test]
    fn unseen_test_class_is_rejected() {
        let d = toy();
        let idx: Vec<usize> = (0..40).filter(|i| i % 4 != 3).collect();
        let m = TrainedClassifier::fit(&d.subset(&idx), &Params::Knn { k: 1 }, 0).unwrap();
        match m.evaluate(&d) {
            Err(Error::Evaluation(msg)) => assert!(msg.contains('d')),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn scaling_statistics_come_from_training_rows_only() {
        let d = toy();
        let train: Vec<usize> = (0..20).collect();
        let m = TrainedClassifier::fit(&d.subset(&train), &Params::Knn { k: 1 }, 0).unwrap();
        let s = m.scaler.as_ref().unwrap();
        let expected = Standardizer::fit(&d.subset(&train).x);
        assert_eq!(s, &expected);
    }
}
