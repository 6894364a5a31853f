//! Two-point zeroth-order gradient estimators under uniform smoothing.
//!
//! For a direction `u` uniform on the unit sphere the estimate
//! `(d/μ)(f(x + μu; ξ) − f(x; ξ)) u` is unbiased for the gradient of
//! `f_μ(x) = E_{v ~ U(ball)} f(x + μv)`.

use crate::error::{Error, Result};
use crate::problems::{MiniOracle, MinimaxOracle};
use crate::rng::RngStream;
use crate::vector::{self, Vector};

/// Differences below this multiple of `ε_mach · |f(x)|` are flagged.
pub const CANCELLATION_FACTOR: f64 = 1e3;

/// Raw oracle calls made during a run. Never decremented.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct QueryCounter {
    pub function_queries: u64,
    pub gradient_queries: u64,
    /// Two-point differences that fell below the cancellation threshold.
    pub cancellation_warnings: u64,
}

impl QueryCounter {
    pub fn new() -> Self {
        Self::default()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmoothingParams {
    pub mu: f64,
    pub mu1: f64,
    pub mu2: f64,
}

impl SmoothingParams {
    /// Largest values the convergence theorems allow for horizon `T`:
    /// `μ = 1/(d (m+T)^{2/3})`, `μ₁ = 1/(d₁ (m+T)^{2/3})` and
    /// `μ₂ = 1/(√(d₁+d₂) d₂ (m+T)^{2/3})`. For mini problems pass `d2 = d1`;
    /// `mu2` is then unused.
    pub fn theorem_defaults(d1: usize, d2: usize, m: f64, t: usize) -> Self {
        let s = (m + t as f64).powf(2.0 / 3.0);
        let (d1f, d2f) = (d1 as f64, d2 as f64);
        SmoothingParams {
            mu: 1.0 / (d1f * s),
            mu1: 1.0 / (d1f * s),
            mu2: 1.0 / ((d1f + d2f).sqrt() * d2f * s),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("mu", self.mu), ("mu1", self.mu1), ("mu2", self.mu2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::contract(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Normalized standard Gaussian vector; an all-zero draw is redrawn.
pub fn sample_unit_sphere(d: usize, rng: &mut RngStream) -> Vector {
    let mut u = Vector::zeros(d);
    fill_unit_sphere(&mut u, rng);
    u
}

fn fill_unit_sphere(u: &mut [f64], rng: &mut RngStream) {
    assert!(!u.is_empty(), "sphere dimension must be positive");
    loop {
        u.iter_mut().for_each(|v| *v = rng.standard_normal());
        let n = vector::norm(u);
        if n > 0.0 && n.is_finite() {
            u.iter_mut().for_each(|v| *v /= n);
            return;
        }
    }
}

/// Uniform draw from the unit ball: a sphere direction scaled by `U^{1/d}`.
pub fn sample_unit_ball(d: usize, rng: &mut RngStream) -> Vector {
    let mut v = Vector::zeros(d);
    fill_unit_ball(&mut v, rng);
    v
}

fn fill_unit_ball(v: &mut [f64], rng: &mut RngStream) {
    fill_unit_sphere(v, rng);
    let r = rng.uniform().powf(1.0 / v.len() as f64);
    v.iter_mut().for_each(|a| *a *= r);
}

pub fn sample_directions(d: usize, count: usize, rng: &mut RngStream) -> Vec<Vector> {
    (0..count).map(|_| sample_unit_sphere(d, rng)).collect()
}

fn checked(value: f64, point: &[f64]) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation {
            value,
            point: point.to_vec(),
        })
    }
}

fn shifted(x: &[f64], mu: f64, u: &[f64]) -> Vec<f64> {
    x.iter().zip(u).map(|(a, b)| a + mu * b).collect()
}

/// Scale `(d/μ)(f₊ − f₀)`, recording a cancellation warning when the
/// difference is lost in rounding.
fn two_point_scale(d: usize, mu: f64, f_plus: f64, f_base: f64, counter: &mut QueryCounter) -> f64 {
    let diff = f_plus - f_base;
    if diff.abs() < CANCELLATION_FACTOR * f64::EPSILON * f_base.abs() {
        counter.cancellation_warnings += 1;
    }
    d as f64 / mu * diff
}

/// Two-point estimate `(d/μ)(f(x + μu; ξ) − f(x; ξ)) u`. Adds 2 function queries.
pub fn unige_grad<O: MiniOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    sample: usize,
    mu: f64,
    u: &[f64],
    counter: &mut QueryCounter,
) -> Result<Vector> {
    let d = oracle.dim();
    if x.len() != d || u.len() != d {
        return Err(Error::contract("unige_grad: dimension mismatch"));
    }
    let xp = shifted(x, mu, u);
    counter.function_queries += 2;
    let f_plus = checked(oracle.value(&xp, sample), &xp)?;
    let f_base = checked(oracle.value(x, sample), x)?;
    let s = two_point_scale(d, mu, f_plus, f_base, counter);
    Ok(Vector::from(u).scaled(s))
}

fn check_batch(batch: &[usize], dirs: &[Vector], dim: usize) -> Result<()> {
    if batch.is_empty() {
        return Err(Error::contract("estimator: empty batch"));
    }
    if dirs.len() != batch.len() {
        return Err(Error::contract("estimator: need one direction per batch member"));
    }
    if dirs.iter().any(|u| u.dim() != dim) {
        return Err(Error::contract("estimator: direction has the wrong dimension"));
    }
    Ok(())
}

/// Batch mean of `(d₁/μ₁)(f(x + μ₁û_i, y; ξ_i) − f(x, y; ξ_i)) û_i`.
/// Adds `2b` function queries.
pub fn unige_partial_x<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    batch: &[usize],
    mu1: f64,
    dirs: &[Vector],
    counter: &mut QueryCounter,
) -> Result<Vector> {
    let d1 = oracle.dim_x();
    check_batch(batch, dirs, d1)?;
    let mut acc = Vector::zeros(d1);
    for (&i, u) in batch.iter().zip(dirs) {
        let xp = shifted(x, mu1, u);
        counter.function_queries += 2;
        let f_plus = checked(oracle.value(&xp, y, i), &xp)?;
        let f_base = checked(oracle.value(x, y, i), x)?;
        acc.axpy(two_point_scale(d1, mu1, f_plus, f_base, counter), u);
    }
    Ok(acc.scaled(1.0 / batch.len() as f64))
}

/// Batch mean of `(d₂/μ₂)(f(x, y + μ₂ũ_i; ξ_i) − f(x, y; ξ_i)) ũ_i`.
/// Adds `2b` function queries.
pub fn unige_partial_y<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    y: &[f64],
    batch: &[usize],
    mu2: f64,
    dirs: &[Vector],
    counter: &mut QueryCounter,
) -> Result<Vector> {
    let d2 = oracle.dim_y();
    check_batch(batch, dirs, d2)?;
    let mut acc = Vector::zeros(d2);
    for (&i, u) in batch.iter().zip(dirs) {
        let yp = shifted(y, mu2, u);
        counter.function_queries += 2;
        let f_plus = checked(oracle.value(x, &yp, i), &yp)?;
        let f_base = checked(oracle.value(x, y, i), y)?;
        acc.axpy(two_point_scale(d2, mu2, f_plus, f_base, counter), u);
    }
    Ok(acc.scaled(1.0 / batch.len() as f64))
}

/// Monte-Carlo estimate of `f_μ(x)` from `n_samples` unit-ball draws of the
/// population objective.
pub fn smoothed_value_mc<O: MiniOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    mu: f64,
    n_samples: usize,
    rng: &mut RngStream,
) -> f64 {
    assert!(n_samples >= 1);
    let d = oracle.dim();
    let (mut v, mut p) = (vec![0.0; d], vec![0.0; d]);
    let mut sum = 0.0;
    for _ in 0..n_samples {
        fill_unit_ball(&mut v, rng);
        for ((pi, xi), vi) in p.iter_mut().zip(x).zip(&v) {
            *pi = xi + mu * vi;
        }
        sum += oracle.full_value(&p);
    }
    sum / n_samples as f64
}
