//! Plain fixed-step methods used as comparison anchors.

use super::{start_point, HyperParams, RunOutput, Snapshot, TraceSink};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::{sample_directions, unige_grad, unige_partial_x, unige_partial_y, QueryCounter};
use crate::problems::{MiniOracle, MinimaxOracle};
use crate::rng::{RngStream, MINIBATCH, OUTPUT_PICK, SPHERE_X, SPHERE_Y};
use crate::vector::Vector;

fn projected_step(set: &ConstraintSet, p: &[f64], g: &[f64], step: f64) -> Vector {
    let trial: Vec<f64> = p.iter().zip(g).map(|(a, b)| a + step * b).collect();
    set.project_unchecked(&trial)
}

/// Zeroth-order projected SGD, `x ← P(x − γ ĝ)`, with `ĝ` the mean of `b`
/// two-point estimates. `2b` function queries per iteration.
pub fn zo_sgd_run<O: MiniOracle + ?Sized>(
    oracle: &O,
    set: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    hp.validate()?;
    if set.dim() != oracle.dim() {
        return Err(Error::contract("zo_sgd: constraint and oracle dimensions differ"));
    }
    let (d, n) = (oracle.dim(), oracle.population_size());
    let mut batches = RngStream::new(seed, MINIBATCH);
    let mut sphere = RngStream::new(seed, SPHERE_X);
    let zeta = 1 + RngStream::new(seed, OUTPUT_PICK).index(hp.t);
    let mut counter = QueryCounter::new();
    let mut x = start_point(set, x1, "zo_sgd")?;
    let mut x_out = None;
    for t in 1..=hp.t {
        if t == zeta {
            x_out = Some(x.clone());
        }
        let mut g = Vector::zeros(d);
        for u in sample_directions(d, hp.b, &mut sphere) {
            let xi = batches.index(n);
            let e = unige_grad(oracle, &x, xi, hp.smoothing.mu, &u, &mut counter).map_err(|e| e.at_iteration(t))?;
            g.axpy(1.0 / hp.b as f64, &e);
        }
        let x_next = projected_step(set, &x, &g, -hp.gamma);
        sink.observe(&Snapshot {
            t,
            x: &x,
            y: None,
            v: &g,
            w: None,
            eta: hp.gamma,
            alpha: 1.0,
            beta: 0.0,
            counter,
        })?;
        x = x_next;
    }
    Ok(RunOutput {
        x_out: x_out.expect("zeta lies in 1..=T"),
        y_out: None,
        x_last: x,
        y_last: None,
        zeta,
        counter,
    })
}

#[allow(clippy::too_many_arguments)]
fn fixed_step_gda<O: MinimaxOracle + ?Sized>(
    first_order: bool,
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    hp.validate()?;
    let name = if first_order { "sgda" } else { "zo_sgda" };
    let (d1, d2) = (oracle.dim_x(), oracle.dim_y());
    if set_x.dim() != d1 || set_y.dim() != d2 {
        return Err(Error::contract(format!("{name}: constraint and oracle dimensions differ")));
    }
    if first_order && !oracle.has_gradients() {
        return Err(Error::config("sgda needs an oracle with stochastic gradients"));
    }
    let n = oracle.population_size();
    let mut batches = RngStream::new(seed, MINIBATCH);
    let mut sphere_x = RngStream::new(seed, SPHERE_X);
    let mut sphere_y = RngStream::new(seed, SPHERE_Y);
    let zeta = 1 + RngStream::new(seed, OUTPUT_PICK).index(hp.t);
    let mut counter = QueryCounter::new();
    let mut x = start_point(set_x, x1, name)?;
    let mut y = start_point(set_y, y1, name)?;
    let mut out = None;
    let scale = 1.0 / hp.b as f64;
    for t in 1..=hp.t {
        if t == zeta {
            out = Some((x.clone(), y.clone()));
        }
        let batch: Vec<usize> = (0..hp.b).map(|_| batches.index(n)).collect();
        let (gx, gy) = if first_order {
            let (mut gx, mut gy) = (Vector::zeros(d1), Vector::zeros(d2));
            for &i in &batch {
                let missing = || Error::config("oracle does not provide gradients");
                gx.axpy(scale, &oracle.grad_x(&x, &y, i).ok_or_else(missing)?);
                gy.axpy(scale, &oracle.grad_y(&x, &y, i).ok_or_else(missing)?);
                counter.gradient_queries += 2;
            }
            (gx, gy)
        } else {
            let ux = sample_directions(d1, hp.b, &mut sphere_x);
            let uy = sample_directions(d2, hp.b, &mut sphere_y);
            let s = &hp.smoothing;
            let gx = unige_partial_x(oracle, &x, &y, &batch, s.mu1, &ux, &mut counter).map_err(|e| e.at_iteration(t))?;
            let gy = unige_partial_y(oracle, &x, &y, &batch, s.mu2, &uy, &mut counter).map_err(|e| e.at_iteration(t))?;
            (gx, gy)
        };
        let x_next = projected_step(set_x, &x, &gx, -hp.gamma);
        let y_next = projected_step(set_y, &y, &gy, hp.lambda);
        sink.observe(&Snapshot {
            t,
            x: &x,
            y: Some(&y),
            v: &gx,
            w: Some(&gy),
            eta: hp.gamma,
            alpha: 1.0,
            beta: 1.0,
            counter,
        })?;
        x = x_next;
        y = y_next;
    }
    let (x_out, y_out) = out.expect("zeta lies in 1..=T");
    Ok(RunOutput {
        x_out,
        y_out: Some(y_out),
        x_last: x,
        y_last: Some(y),
        zeta,
        counter,
    })
}

/// Zeroth-order projected SGDA with fixed steps `γ` and `λ`: both partial
/// estimates at `(x_t, y_t)`, `4b` function queries per iteration.
#[allow(clippy::too_many_arguments)]
pub fn zo_sgda_run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    fixed_step_gda(false, oracle, set_x, set_y, hp, x1, y1, seed, sink)
}

/// First-order projected SGDA with fixed steps `γ` and `λ`.
#[allow(clippy::too_many_arguments)]
pub fn sgda_run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    fixed_step_gda(true, oracle, set_x, set_y, hp, x1, y1, seed, sink)
}
