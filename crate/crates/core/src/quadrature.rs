//! Gauss-Legendre quadrature on [0, 1] with node doubling.

use std::sync::{Arc, Mutex, OnceLock};
use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::{KvError, Result};

/// Nodes and weights on [0, 1], computed by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pn1 = if n <= 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = 0.5 * (1.0 - x);
        weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

type Rule = Arc<(Vec<f64>, Vec<f64>)>;

fn cached_rule(n: usize) -> Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard.entry(n).or_insert_with(|| Arc::new(gauss_legendre(n))).clone()
}

pub const START_NODES: usize = 6;
pub const MAX_NODES: usize = 96;

/// Integrates a matrix-valued function over [0, 1]. The rule is doubled
/// until two successive estimates agree to `tol` (absolute, max-norm).
pub fn integrate_matrix<F>(mut f: F, tol: f64) -> Result<DMatrix<f64>>
where
    F: FnMut(f64) -> Result<DMatrix<f64>>,
{
    let mut apply = |n: usize| -> Result<DMatrix<f64>> {
        let rule = cached_rule(n);
        let (x, w) = (&rule.0, &rule.1);
        let mut acc: Option<DMatrix<f64>> = None;
        for (xi, wi) in x.iter().zip(w) {
            let v = f(*xi)? * *wi;
            acc = Some(match acc {
                Some(a) => a + v,
                None => v,
            });
        }
        Ok(acc.expect("at least one node"))
    };
    let mut n = START_NODES;
    let mut prev = apply(n)?;
    loop {
        n *= 2;
        let next = apply(n)?;
        let err = (&next - &prev).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !err.is_finite() {
            return Err(KvError::NonFinite);
        }
        if err <= tol {
            return Ok(next);
        }
        if n >= MAX_NODES {
            let est = next.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            return Err(KvError::Quadrature { estimate: est, error: err });
        }
        prev = next;
    }
}

pub fn integrate_scalar<F>(mut f: F, tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    integrate_matrix(|t| Ok(DMatrix::from_element(1, 1, f(t)?)), tol).map(|m| m[(0, 0)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_one_and_polynomials_exact() {
        for n in [1, 2, 6, 12, 48] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
            let deg = 2 * n - 1;
            let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
            assert!((s - 1.0 / (deg + 1) as f64).abs() < 1e-14, "n={n}");
        }
    }

    #[test]
    fn adaptive_integrals() {
        let v = integrate_scalar(|t| Ok((3.0 * t).exp()), 1e-13).unwrap();
        assert!((v - (3f64.exp() - 1.0) / 3.0).abs() < 1e-13);
        let v = integrate_scalar(|t| Ok(t.sqrt()), 1e-4).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn unconverged_reports_error() {
        let r = integrate_scalar(|t| Ok((200.0 * t).sin()), 1e-14);
        assert!(matches!(r, Err(KvError::Quadrature { .. })));
    }
}
