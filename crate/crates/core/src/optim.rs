//! Full-batch minimizers with backtracking line search.
//!
//! Only steps that satisfy the Armijo condition are accepted, so the objective
//! sequence recorded in [`Minimum::history`] never increases.

use std::collections::HashMap;

use crate::math::dot;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Steepest descent; the step size adapts between iterations.
    GradientDescent,
    /// Limited-memory BFGS direction with the same line search.
    Lbfgs,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinimizeConfig {
    pub method: Method,
    pub max_iters: usize,
    /// Stop when the relative objective decrease falls below this.
    pub tol: f64,
    /// First trial step for gradient descent.
    pub initial_step: f64,
    pub memory: usize,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            method: Method::Lbfgs,
            max_iters: 200,
            tol: 1e-9,
            initial_step: 1.0,
            memory: 10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective at the start and after every accepted step.
    pub history: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 50;

/// Minimizes `f`, which returns the objective and writes the gradient into its
/// second argument.
pub fn minimize<F>(f: F, x0: Vec<f64>, cfg: &MinimizeConfig) -> Minimum
where
    F: Fn(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut value = f(&x, &mut g);
    let mut history = vec![value];
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut step = cfg.initial_step;
    let mut converged = false;
    let mut iterations = 0;

    let mut trial = vec![0.0; n];
    let mut g_trial = vec![0.0; n];

    while iterations < cfg.max_iters {
        let gnorm = dot(&g, &g).sqrt();
        if gnorm < 1e-12 {
            converged = true;
            break;
        }
        let mut dir = match cfg.method {
            Method::GradientDescent => g.iter().map(|v| -v).collect(),
            Method::Lbfgs => lbfgs_direction(&g, &s_hist, &y_hist),
        };
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
        }
        let mut alpha = match cfg.method {
            Method::GradientDescent => step,
            Method::Lbfgs if s_hist.is_empty() => 1.0 / gnorm,
            Method::Lbfgs => 1.0,
        };
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            for i in 0..n {
                trial[i] = x[i] + alpha * dir[i];
            }
            let v = f(&trial, &mut g_trial);
            if v.is_finite() && v <= value + ARMIJO * alpha * slope {
                accepted = Some(v);
                break;
            }
            alpha *= 0.5;
        }
        let Some(new_value) = accepted else {
            if !s_hist.is_empty() {
                // retry once from steepest descent
                s_hist.clear();
                y_hist.clear();
                continue;
            }
            converged = true;
            break;
        };
        iterations += 1;
        if cfg.method == Method::Lbfgs {
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_trial.iter().zip(&g).map(|(a, b)| a - b).collect();
            if dot(&s, &y) > 1e-12 {
                if s_hist.len() == cfg.memory {
                    s_hist.remove(0);
                    y_hist.remove(0);
                }
                s_hist.push(s);
                y_hist.push(y);
            }
        } else {
            step = alpha * 2.0;
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        let decrease = value - new_value;
        value = new_value;
        history.push(value);
        if decrease <= cfg.tol * value.abs().max(1.0) {
            converged = true;
            break;
        }
    }
    Minimum {
        x,
        value,
        iterations,
        converged,
        history,
    }
}

/// Two-loop recursion.
fn lbfgs_direction(g: &[f64], s_hist: &[Vec<f64>], y_hist: &[Vec<f64>]) -> Vec<f64> {
    let mut q = g.to_vec();
    let m = s_hist.len();
    let mut alphas = vec![0.0; m];
    for i in (0..m).rev() {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        alphas[i] = rho * dot(&s_hist[i], &q);
        q.iter_mut().zip(&y_hist[i]).for_each(|(qv, yv)| *qv -= alphas[i] * yv);
    }
    if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for i in 0..m {
        let rho = 1.0 / dot(&y_hist[i], &s_hist[i]);
        let beta = rho * dot(&y_hist[i], &q);
        q.iter_mut().zip(&s_hist[i]).for_each(|(qv, sv)| *qv += (alphas[i] - beta) * sv);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Destination for gradient contributions, dense or sparse.
pub(crate) trait GradSink {
    fn add(&mut self, index: usize, value: f64);
}

impl GradSink for Vec<f64> {
    fn add(&mut self, index: usize, value: f64) {
        self[index] += value;
    }
}

impl GradSink for HashMap<usize, f64> {
    fn add(&mut self, index: usize, value: f64) {
        *self.entry(index).or_insert(0.0) += value;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64], g: &mut [f64]) -> f64 {
        let (a, b) = (x[0], x[1]);
        g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
        g[1] = 200.0 * (b - a * a);
        (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
    }

    #[test]
    fn lbfgs_solves_rosenbrock() {
        let cfg = MinimizeConfig {
            max_iters: 500,
            tol: 1e-14,
            ..Default::default()
        };
        let m = minimize(rosenbrock, vec![-1.2, 1.0], &cfg);
        assert!((m.x[0] - 1.0).abs() < 1e-4, "{:?}", m.x);
        assert!((m.x[1] - 1.0).abs() < 1e-4);
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gradient_descent_on_quadratic() {
        let quad = |x: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * (x[0] - 3.0);
            g[1] = 8.0 * (x[1] + 1.0);
            (x[0] - 3.0).powi(2) + 4.0 * (x[1] + 1.0).powi(2)
        };
        let cfg = MinimizeConfig {
            method: Method::GradientDescent,
            max_iters: 1000,
            tol: 1e-16,
            initial_step: 0.5,
            ..Default::default()
        };
        let m = minimize(quad, vec![0.0, 0.0], &cfg);
        assert!((m.x[0] - 3.0).abs() < 1e-5);
        assert!((m.x[1] + 1.0).abs() < 1e-5);
        assert!(m.history.windows(2).all(|w| w[1] <= w[0]));
    }
}
