//! Binary L2-regularized logistic regression fitted by full-batch gradient
//! descent with a backtracking line search. Shared by the reference post
//! scorer (sparse hashed rows) and the user-level classifier (dense rows).

use serde::{Deserialize, Serialize};

use super::hashing::SparseVector;
use crate::error::{Error, Result};

/// Row access needed by the optimizer.
pub trait Design {
    fn rows(&self) -> usize;
    fn dim(&self) -> usize;
    fn dot(&self, row: usize, w: &[f64]) -> f64;
    /// `grad += coef * x_row`
    fn axpy(&self, row: usize, coef: f64, grad: &mut [f64]);
}

/// Dense rows of equal length.
pub struct DenseRows<'a>(pub &'a [Vec<f64>]);

impl Design for DenseRows<'_> {
    fn rows(&self) -> usize {
        self.0.len()
    }
    fn dim(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }
    fn dot(&self, row: usize, w: &[f64]) -> f64 {
        self.0[row].iter().zip(w).map(|(x, w)| x * w).sum()
    }
    fn axpy(&self, row: usize, coef: f64, grad: &mut [f64]) {
        for (g, x) in grad.iter_mut().zip(&self.0[row]) {
            *g += coef * x;
        }
    }
}

/// Sparse rows over a fixed dimension.
pub struct SparseRows<'a> {
    pub rows: &'a [SparseVector],
    pub dim: usize,
}

impl Design for SparseRows<'_> {
    fn rows(&self) -> usize {
        self.rows.len()
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn dot(&self, row: usize, w: &[f64]) -> f64 {
        self.rows[row].dot(w)
    }
    fn axpy(&self, row: usize, coef: f64, grad: &mut [f64]) {
        let r = &self.rows[row];
        for (&i, &v) in r.indices.iter().zip(&r.values) {
            grad[i as usize] += coef * v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    /// Coefficient of `0.5 * ||w||^2`; the bias is not penalized.
    pub l2: f64,
    /// Stop once the gradient norm or the relative loss decrease drops below this.
    pub tol: f64,
    pub max_epochs: usize,
    /// Reweight classes to equal total mass.
    pub balanced: bool,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            tol: 1e-6,
            max_epochs: 200,
            balanced: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value after every accepted step.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_trace: Vec<f64>,
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
            loss_trace: Vec::new(),
        }
    }

    pub fn predict_dense(&self, x: &[f64]) -> f64 {
        sigmoid(self.bias + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }

    pub fn predict_sparse(&self, x: &SparseVector) -> f64 {
        sigmoid(self.bias + x.dot(&self.weights))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Per-row weights: uniform, or inversely proportional to class frequency.
pub fn sample_weights(y: &[f64], balanced: bool) -> Vec<f64> {
    if !balanced {
        return vec![1.0; y.len()];
    }
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v > 0.5).count() as f64;
    let neg = n - pos;
    y.iter()
        .map(|&v| {
            let c = if v > 0.5 { pos } else { neg };
            n / (2.0 * c)
        })
        .collect()
}

/// Weighted mean log-loss plus `0.5 * l2 * ||w||^2`, with its gradient in
/// `w` and in the bias.
pub fn loss_and_gradient<D: Design>(
    x: &D,
    y: &[f64],
    sw: &[f64],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let total: f64 = sw.iter().sum();
    let mut loss = 0.0;
    let mut grad = vec![0.0; w.len()];
    let mut gb = 0.0;
    for r in 0..x.rows() {
        let z = x.dot(r, w) + b;
        loss += sw[r] * if y[r] > 0.5 { softplus(-z) } else { softplus(z) };
        let resid = sw[r] * (sigmoid(z) - y[r]) / total;
        x.axpy(r, resid, &mut grad);
        gb += resid;
    }
    loss /= total;
    loss += 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>();
    for (g, wi) in grad.iter_mut().zip(w) {
        *g += l2 * wi;
    }
    (loss, grad, gb)
}

fn loss_only<D: Design>(x: &D, y: &[f64], sw: &[f64], w: &[f64], b: f64, l2: f64) -> f64 {
    let total: f64 = sw.iter().sum();
    let data: f64 = (0..x.rows())
        .map(|r| {
            let z = x.dot(r, w) + b;
            sw[r] * if y[r] > 0.5 { softplus(-z) } else { softplus(z) }
        })
        .sum();
    data / total + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Fit by gradient descent; labels are 0.0 or 1.0 and both classes must occur.
pub fn fit<D: Design>(x: &D, y: &[f64], params: &LogisticParams) -> Result<LogisticModel> {
    if x.rows() != y.len() {
        return Err(Error::Data("feature rows and labels differ in length".into()));
    }
    let pos = y.iter().filter(|&&v| v > 0.5).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::Data("training labels contain a single class".into()));
    }
    if !(params.l2 >= 0.0 && params.tol > 0.0) {
        return Err(Error::Config("l2 must be >= 0 and tol > 0".into()));
    }
    let sw = sample_weights(y, params.balanced);
    let mut w = vec![0.0; x.dim()];
    let mut b = 0.0;
    let (mut loss, mut grad, mut gb) = loss_and_gradient(x, y, &sw, &w, b, params.l2);
    let mut trace = vec![loss];
    let mut step = 1.0;
    for _ in 0..params.max_epochs {
        let gnorm2 = grad.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gnorm2.sqrt() < params.tol {
            break;
        }
        // Armijo backtracking, starting from twice the last accepted step.
        step *= 2.0;
        let (nw, nb, nloss) = loop {
            let nw: Vec<f64> = w.iter().zip(&grad).map(|(wi, g)| wi - step * g).collect();
            let nb = b - step * gb;
            let nloss = loss_only(x, y, &sw, &nw, nb, params.l2);
            if nloss <= loss - 0.5 * step * gnorm2 || step < 1e-12 {
                break (nw, nb, nloss);
            }
            step *= 0.5;
        };
        let decrease = loss - nloss;
        w = nw;
        b = nb;
        (loss, grad, gb) = loss_and_gradient(x, y, &sw, &w, b, params.l2);
        trace.push(loss);
        if decrease.abs() < params.tol * loss.abs().max(1.0) {
            break;
        }
    }
    Ok(LogisticModel {
        weights: w,
        bias: b,
        loss_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<f64>) {
        let x = vec![
            vec![0.0, 1.0],
            vec![1.0, 0.5],
            vec![2.0, -1.0],
            vec![3.0, 0.0],
            vec![-1.0, 2.0],
            vec![0.5, 0.0],
        ];
        let y = vec![0.0, 0.0, 1.0, 1.0, 0.0, 1.0];
        (x, y)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = toy();
        let d = DenseRows(&x);
        let sw = sample_weights(&y, true);
        let w = vec![0.3, -0.7];
        let b = 0.1;
        let (_, g, gb) = loss_and_gradient(&d, &y, &sw, &w, b, 0.05);
        let h = 1e-6;
        for j in 0..2 {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let fd = (loss_only(&d, &y, &sw, &wp, b, 0.05) - loss_only(&d, &y, &sw, &wm, b, 0.05)) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-7);
        }
        let fd = (loss_only(&d, &y, &sw, &w, b + h, 0.05) - loss_only(&d, &y, &sw, &w, b - h, 0.05)) / (2.0 * h);
        assert!((fd - gb).abs() < 1e-7);
    }

    #[test]
    fn loss_decreases_and_separates() {
        let (x, y) = toy();
        let m = fit(&DenseRows(&x), &y, &LogisticParams::default()).unwrap();
        assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        assert!(m.predict_dense(&[3.0, 0.0]) > 0.5);
        assert!(m.predict_dense(&[-1.0, 2.0]) < 0.5);
    }

    #[test]
    fn single_class_is_rejected() {
        let (x, _) = toy();
        assert!(fit(&DenseRows(&x), &[1.0; 6], &LogisticParams::default()).is_err());
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!(softplus(800.0).is_finite());
    }
}
