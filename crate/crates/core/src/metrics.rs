//! Stationarity measures used in traces and regressions.

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::sample_unit_ball;
use crate::problems::MinimaxOracle;
use crate::rng::RngStream;
use crate::vector::{norm, Vector};

#[derive(Clone, Debug, PartialEq)]
pub struct MetricConfig {
    pub inner_tolerance: f64,
    pub inner_budget: usize,
    pub gap_gamma: f64,
    pub gap_lambda: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        MetricConfig {
            inner_tolerance: 1e-8,
            inner_budget: 100_000,
            gap_gamma: 1.0,
            gap_lambda: 1.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.inner_tolerance > 0.0) || self.inner_budget == 0 {
            return Err(Error::contract("metric config: tolerance must be positive and budget at least 1"));
        }
        if !(self.gap_gamma > 0.0 && self.gap_lambda > 0.0) {
            return Err(Error::contract("metric config: gap steps must be positive"));
        }
        Ok(())
    }
}

/// `(1/γ)‖P(x − γv) − x‖`.
fn step_residual(set: &ConstraintSet, x: &[f64], g: &[f64], gamma: f64) -> f64 {
    let trial: Vec<f64> = x.iter().zip(g).map(|(a, b)| a - gamma * b).collect();
    set.project_unchecked(&trial).distance(x) / gamma
}

/// `(1/γ)‖P(x − γv) − x‖ + ‖∇f(x) − v‖`.
pub fn metric_g(set: &ConstraintSet, x: &[f64], v: &[f64], grad_true: &[f64], gamma: f64) -> f64 {
    step_residual(set, x, v, gamma) + Vector::from(grad_true).distance(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerMax {
    pub y: Vector,
    /// `‖y − P(y + ∇_y f(x, y))‖`, zero when only the analytic maximizer is known.
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

fn ascent_residual(set_y: &ConstraintSet, y: &[f64], g: &[f64]) -> f64 {
    let trial: Vec<f64> = y.iter().zip(g).map(|(a, b)| a + b).collect();
    set_y.project_unchecked(&trial).distance(y)
}

/// Maximizer of `f(x, ·)` over `set_y`. Uses the oracle's analytic `y_star`
/// when present, otherwise projected gradient ascent with backtracking from
/// the projection of the origin. Running out of budget is not an error; the
/// result carries `converged = false`.
pub fn solve_inner_max<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    x: &[f64],
    set_y: &ConstraintSet,
    cfg: &MetricConfig,
) -> Result<InnerMax> {
    if let Some(y) = oracle.y_star(x, set_y) {
        let residual = oracle
            .full_grad_y(x, &y)
            .map_or(0.0, |g| ascent_residual(set_y, &y, &g));
        return Ok(InnerMax {
            y,
            residual,
            converged: true,
            iterations: 0,
        });
    }
    let grad = |y: &[f64]| {
        oracle
            .full_grad_y(x, y)
            .ok_or_else(|| Error::config("inner maximization needs grad_y or an analytic maximizer"))
    };
    let mut y = set_y.project_unchecked(&vec![0.0; set_y.dim()]);
    let mut fy = oracle.full_value(x, &y);
    let mut step = oracle.constants().l_f.map_or(1.0, |l| 1.0 / l);
    let mut g = grad(&y)?;
    for it in 0..cfg.inner_budget {
        let residual = ascent_residual(set_y, &y, &g);
        if residual <= cfg.inner_tolerance {
            return Ok(InnerMax {
                y,
                residual,
                converged: true,
                iterations: it,
            });
        }
        loop {
            let trial: Vec<f64> = y.iter().zip(g.iter()).map(|(a, b)| a + step * b).collect();
            let cand = set_y.project_unchecked(&trial);
            let f_cand = oracle.full_value(x, &cand);
            let moved = cand.distance(&y);
            if f_cand >= fy + moved * moved / (2.0 * step) - 1e-15 * fy.abs().max(1.0) || step < 1e-20 {
                y = cand;
                fy = f_cand;
                break;
            }
            step *= 0.5;
        }
        g = grad(&y)?;
        step *= 1.5;
    }
    let residual = ascent_residual(set_y, &y, &g);
    Ok(InnerMax {
        converged: residual <= cfg.inner_tolerance,
        y,
        residual,
        iterations: cfg.inner_budget,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetricH {
    pub value: f64,
    pub inner_converged: bool,
}

/// `(1/γ)‖P(x − γv) − x‖ + ‖∇_x f(x, y) − v‖ + L_f ‖y − y*(x)‖`.
#[allow(clippy::too_many_arguments)]
pub fn metric_h<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    x: &[f64],
    y: &[f64],
    v: &[f64],
    gamma: f64,
    l_f: f64,
    cfg: &MetricConfig,
) -> Result<MetricH> {
    let gx = oracle
        .full_grad_x(x, y)
        .ok_or_else(|| Error::config("metric_h needs full-batch grad_x"))?;
    let inner = solve_inner_max(oracle, x, set_y, cfg)?;
    let value = step_residual(set_x, x, v, gamma) + gx.distance(v) + l_f * inner.y.distance(y);
    Ok(MetricH {
        value,
        inner_converged: inner.converged,
    })
}

/// `(1/γ̂)‖x − P_X(x − γ̂∇_x f)‖ + (1/λ̂)‖y − P_Y(y + λ̂∇_y f)‖` with
/// full-batch gradients.
pub fn stationary_gap<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    x: &[f64],
    y: &[f64],
    gap_gamma: f64,
    gap_lambda: f64,
) -> Result<f64> {
    let missing = || Error::config("stationary gap needs full-batch gradients");
    let gx = oracle.full_grad_x(x, y).ok_or_else(missing)?;
    let gy = oracle.full_grad_y(x, y).ok_or_else(missing)?;
    let neg_gy = gy.scaled(-1.0);
    Ok(step_residual(set_x, x, &gx, gap_gamma) + step_residual(set_y, y, &neg_gy, gap_lambda))
}

fn probe_point(set: &ConstraintSet, rng: &mut RngStream) -> Vector {
    match *set {
        ConstraintSet::Unconstrained { dim } => Vector::from_fn(dim, |_| 2.0 * rng.uniform() - 1.0),
        ConstraintSet::LinfBall { dim, radius } => Vector::from_fn(dim, |_| radius * (2.0 * rng.uniform() - 1.0)),
        ConstraintSet::L2Ball { dim, radius } => sample_unit_ball(dim, rng).scaled(radius),
    }
}

/// Largest observed `‖Δ∇f‖ / ‖Δ(x, y)‖` over `pairs` random pairs of points
/// in `set_x × set_y` (the unit box for an unconstrained set), using
/// full-batch gradients. A lower bound on the true constant.
pub fn estimate_l_f<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    pairs: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    let missing = || Error::config("L_f estimation needs full-batch gradients");
    let joint = |x: &[f64], y: &[f64]| -> Result<Vec<f64>> {
        let mut g = oracle.full_grad_x(x, y).ok_or_else(missing)?.into_vec();
        g.extend_from_slice(&oracle.full_grad_y(x, y).ok_or_else(missing)?);
        Ok(g)
    };
    let mut best: f64 = 0.0;
    for _ in 0..pairs {
        let (x1, y1) = (probe_point(set_x, rng), probe_point(set_y, rng));
        let (x2, y2) = (probe_point(set_x, rng), probe_point(set_y, rng));
        let dp = (x1.distance(&x2).powi(2) + y1.distance(&y2).powi(2)).sqrt();
        if dp == 0.0 {
            continue;
        }
        let (g1, g2) = (joint(&x1, &y1)?, joint(&x2, &y2)?);
        let dg: Vec<f64> = g1.iter().zip(&g2).map(|(a, b)| a - b).collect();
        best = best.max(norm(&dg) / dp);
    }
    Ok(best)
}
