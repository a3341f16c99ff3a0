use crate::dataset::Label;
use crate::error::{Error, Result};

/// True- and false-positive rates against the `+1` class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Confusion {
    pub tp_rate: f64,
    pub fp_rate: f64,
}

impl Confusion {
    pub fn from_labels(truth: &[Label], predicted: &[Label]) -> Result<Confusion> {
        if truth.len() != predicted.len() {
            return Err(Error::Shape {
                context: "prediction count",
                expected: truth.len(),
                found: predicted.len(),
            });
        }
        let (mut tp, mut fp, mut pos, mut neg) = (0usize, 0usize, 0usize, 0usize);
        for (t, p) in truth.iter().zip(predicted) {
            match t {
                Label::Positive => {
                    pos += 1;
                    tp += (*p == Label::Positive) as usize;
                }
                Label::Negative => {
                    neg += 1;
                    fp += (*p == Label::Positive) as usize;
                }
            }
        }
        if pos == 0 || neg == 0 {
            return Err(Error::UndefinedMetric("AUC needs both classes in the truth labels"));
        }
        Ok(Confusion {
            tp_rate: tp as f64 / pos as f64,
            fp_rate: fp as f64 / neg as f64,
        })
    }

    /// `(1 + TPR - FPR) / 2`.
    pub fn auc(&self) -> f64 {
        (1.0 + self.tp_rate - self.fp_rate) / 2.0
    }
}

/// Balanced-accuracy AUC over hard labels.
pub fn auc(truth: &[Label], predicted: &[Label]) -> Result<f64> {
    Confusion::from_labels(truth, predicted).map(|c| c.auc())
}

/// Arithmetic mean; `None` for an empty slice.
pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}
