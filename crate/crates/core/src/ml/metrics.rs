use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_predictions(classes: &[String], truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::Evaluation(format!(
                "{} true labels but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = Self::new(classes.to_vec());
        for (&t, &p) in truth.iter().zip(predicted) {
            m.counts[t][p] += 1;
        }
        Ok(m)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        self.trace() as f64 / total as f64
    }

    /// Diagonal over column sum; 0 when nothing was predicted as the class.
    pub fn precision(&self, class: usize) -> f64 {
        let col: u64 = self.counts.iter().map(|r| r[class]).sum();
        if col == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / col as f64
        }
    }

    /// Diagonal over row sum; 0 for a class absent from the truth.
    pub fn recall(&self, class: usize) -> f64 {
        let row: u64 = self.counts[class].iter().sum();
        if row == 0 {
            0.0
        } else {
            self.counts[class][class] as f64 / row as f64
        }
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == name)
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(self.classes.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (name, row) in self.classes.iter().zip(&self.counts) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 labels")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub class: String,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub per_class: Vec<ClassScore>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub confusion: ConfusionMatrix,
    #[serde(default)]
    pub best_params: Option<serde_json::Value>,
}

impl EvalReport {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let n = confusion.classes.len();
        let per_class: Vec<ClassScore> = (0..n)
            .map(|c| ClassScore {
                class: confusion.classes[c].clone(),
                support: confusion.counts[c].iter().sum(),
                precision: confusion.precision(c),
                recall: confusion.recall(c),
            })
            .collect();
        let mean = |f: fn(&ClassScore) -> f64| {
            if n == 0 {
                0.0
            } else {
                per_class.iter().map(f).sum::<f64>() / n as f64
            }
        };
        let report = Self {
            accuracy: confusion.accuracy(),
            macro_precision: mean(|s| s.precision),
            macro_recall: mean(|s| s.recall),
            per_class,
            confusion,
            best_params: None,
        };
        debug_assert_eq!(
            report.accuracy,
            report.confusion.trace() as f64 / report.confusion.total().max(1) as f64
        );
        report
    }

    pub fn recall_of(&self, class: &str) -> Option<f64> {
        self.per_class.iter().find(|s| s.class == class).map(|s| s.recall)
    }

    pub fn to_text(&self) -> String {
        let width = self.per_class.iter().map(|s| s.class.len()).max().unwrap_or(5).max(5);
        let mut out = String::new();
        let _ = writeln!(out, "{:width$}  {:>9}  {:>9}  {:>7}", "class", "precision", "recall", "support");
        for s in &self.per_class {
            let _ = writeln!(
                out,
                "{:width$}  {:>9.4}  {:>9.4}  {:>7}",
                s.class, s.precision, s.recall, s.support
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:width$}  {:>9.4}  {:>9.4}", "macro", self.macro_precision, self.macro_recall);
        let _ = writeln!(out, "accuracy {:.4} ({} / {})", self.accuracy, self.confusion.trace(), self.confusion.total());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("c{i}")).collect()
    }

    #[test]
    fn hand_built_matrix() {
        let m = ConfusionMatrix {
            classes: names(3),
            counts: vec![vec![5, 1, 0], vec![0, 4, 0], vec![2, 0, 8]],
        };
        assert_eq!(m.accuracy(), 17.0 / 20.0);
        assert_eq!(m.recall(0), 5.0 / 6.0);
        assert_eq!(m.precision(0), 5.0 / 7.0);
        let r = EvalReport::from_confusion(m);
        assert_eq!(r.per_class[2].support, 10);
        assert!(r.to_text().contains("accuracy 0.8500"));
    }

    #[test]
    fn perfect_and_constant_predictors() {
        let truth: Vec<usize> = (0..40).map(|i| i % 4).collect();
        let m = ConfusionMatrix::from_predictions(&names(4), &truth, &truth).unwrap();
        assert_eq!(m.accuracy(), 1.0);
        assert!((0..4).all(|i| (0..4).all(|j| (i == j) == (m.counts[i][j] > 0))));
        let m = ConfusionMatrix::from_predictions(&names(4), &truth, &[0; 40]).unwrap();
        assert_eq!(m.accuracy(), 0.25);
        assert_eq!(m.precision(1), 0.0);
        assert!(m.to_csv().starts_with("true\\predicted,c0,c1,c2,c3\nc0,10,0,0,0\n"));
    }
}
