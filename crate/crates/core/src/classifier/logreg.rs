//! Multinomial logistic regression over sparse rows.
//!
//! Objective: mean cross-entropy over the rows plus `l2 / 2 * ||W||^2`.
//! The bias is not penalized.

use serde::{Deserialize, Serialize};

use super::features::SparseRow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxRegression {
    pub n_classes: usize,
    pub n_features: usize,
    /// Row-major `n_classes x n_features`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Numerically stable softmax, in place.
pub fn softmax(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        sum += *s;
    }
    for s in scores.iter_mut() {
        *s /= sum;
    }
}

impl SoftmaxRegression {
    pub fn zeros(n_classes: usize, n_features: usize) -> Self {
        SoftmaxRegression {
            n_classes,
            n_features,
            weights: vec![0.0; n_classes * n_features],
            bias: vec![0.0; n_classes],
        }
    }

    pub fn scores(&self, row: &SparseRow) -> Vec<f64> {
        (0..self.n_classes)
            .map(|c| {
                let w = &self.weights[c * self.n_features..(c + 1) * self.n_features];
                self.bias[c] + row.iter().map(|&(j, x)| w[j as usize] * x).sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, row: &SparseRow) -> Vec<f64> {
        let mut p = self.scores(row);
        softmax(&mut p);
        p
    }

    /// Mean cross-entropy, without the penalty.
    pub fn cross_entropy(&self, rows: &[SparseRow], labels: &[usize]) -> f64 {
        if rows.is_empty() {
            return 0.0;
        }
        let total: f64 = rows
            .iter()
            .zip(labels)
            .map(|(row, &y)| {
                let s = self.scores(row);
                let max = s.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let log_z = max + s.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                log_z - s[y]
            })
            .sum();
        total / rows.len() as f64
    }

    fn penalty(&self, l2: f64) -> f64 {
        0.5 * l2 * self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    pub fn objective(&self, rows: &[SparseRow], labels: &[usize], l2: f64) -> f64 {
        self.cross_entropy(rows, labels) + self.penalty(l2)
    }

    /// Objective value and its gradient with respect to weights and bias.
    pub fn objective_and_gradient(&self, rows: &[SparseRow], labels: &[usize], l2: f64) -> (f64, Gradient) {
        let n = rows.len().max(1) as f64;
        let mut grad = Gradient {
            weights: self.weights.iter().map(|w| l2 * w).collect(),
            bias: vec![0.0; self.n_classes],
        };
        let mut ce = 0.0;
        for (row, &y) in rows.iter().zip(labels) {
            let mut p = self.scores(row);
            let max = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let log_z = max + p.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            ce += log_z - p[y];
            softmax(&mut p);
            p[y] -= 1.0;
            for (c, &residual) in p.iter().enumerate() {
                let r = residual / n;
                grad.bias[c] += r;
                let gw = &mut grad.weights[c * self.n_features..(c + 1) * self.n_features];
                for &(j, x) in row {
                    gw[j as usize] += r * x;
                }
            }
        }
        (ce / n + self.penalty(l2), grad)
    }

    pub fn step(&mut self, grad: &Gradient, learning_rate: f64) {
        for (w, g) in self.weights.iter_mut().zip(&grad.weights) {
            *w -= learning_rate * g;
        }
        for (b, g) in self.bias.iter_mut().zip(&grad.bias) {
            *b -= learning_rate * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_of_zeros_is_uniform() {
        let m = SoftmaxRegression::zeros(4, 3);
        let p = m.predict_proba(&vec![(0, 1.0), (2, 0.5)]);
        assert!(p.iter().all(|&x| (x - 0.25).abs() < 1e-15));
        assert!((m.cross_entropy(&[vec![]], &[1]) - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn softmax_survives_large_scores() {
        let mut s = vec![1000.0, 0.0, -1000.0];
        softmax(&mut s);
        assert!((s[0] - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn gradient_step_reduces_objective() {
        let rows = vec![vec![(0, 1.0)], vec![(1, 1.0)], vec![(0, 0.6), (1, 0.8)]];
        let labels = vec![0, 1, 2];
        let mut m = SoftmaxRegression::zeros(3, 2);
        let (before, g) = m.objective_and_gradient(&rows, &labels, 1e-3);
        m.step(&g, 0.5);
        assert!(m.objective(&rows, &labels, 1e-3) < before);
    }
}
