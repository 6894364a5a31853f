use super::{
    eta_schedule, momentum_coeff, start_point, step_dual, step_primal, storm_combine, HyperParams,
    RunOutput, Snapshot, TraceSink,
};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::{sample_directions, unige_partial_x, unige_partial_y, QueryCounter};
use crate::problems::MinimaxOracle;
use crate::rng::{RngStream, MINIBATCH, OUTPUT_PICK, SPHERE_X, SPHERE_Y};
use crate::vector::Vector;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Access {
    /// Function values for both partial estimates.
    Zeroth,
    /// Function values in `x`, stochastic gradients in `y`.
    Semi,
    /// Stochastic gradients in both variables.
    First,
}

impl Access {
    fn name(self) -> &'static str {
        match self {
            Access::Zeroth => "acc_zomda",
            Access::Semi => "acc_semi_zomda",
            Access::First => "acc_mda",
        }
    }
}

/// Samples and directions shared by the estimates at the new and old points.
struct Draw {
    batch: Vec<usize>,
    ux: Vec<Vector>,
    uy: Vec<Vector>,
}

struct Streams {
    batches: RngStream,
    sphere_x: RngStream,
    sphere_y: RngStream,
}

impl Streams {
    fn draw(&mut self, access: Access, n: usize, b: usize, d1: usize, d2: usize) -> Draw {
        let batch = (0..b).map(|_| self.batches.index(n)).collect();
        let ux = match access {
            Access::First => Vec::new(),
            _ => sample_directions(d1, b, &mut self.sphere_x),
        };
        let uy = match access {
            Access::Zeroth => sample_directions(d2, b, &mut self.sphere_y),
            _ => Vec::new(),
        };
        Draw { batch, ux, uy }
    }
}

fn gradient_mean(
    dim: usize,
    batch: &[usize],
    counter: &mut QueryCounter,
    mut grad: impl FnMut(usize) -> Option<Vector>,
    what: &str,
) -> Result<Vector> {
    let mut acc = Vector::zeros(dim);
    for &i in batch {
        counter.gradient_queries += 1;
        let g = grad(i).ok_or_else(|| Error::config(format!("oracle does not provide {what}")))?;
        if !g.is_finite() {
            return Err(Error::Evaluation {
                value: g.iter().copied().find(|v| !v.is_finite()).unwrap_or(f64::NAN),
                point: Vec::new(),
            });
        }
        acc.axpy(1.0, &g);
    }
    Ok(acc.scaled(1.0 / batch.len() as f64))
}

fn estimate<O: MinimaxOracle + ?Sized>(
    access: Access,
    oracle: &O,
    x: &[f64],
    y: &[f64],
    draw: &Draw,
    hp: &HyperParams,
    counter: &mut QueryCounter,
) -> Result<(Vector, Vector)> {
    let s = &hp.smoothing;
    let v = match access {
        Access::First => gradient_mean(oracle.dim_x(), &draw.batch, counter, |i| oracle.grad_x(x, y, i), "grad_x")?,
        _ => unige_partial_x(oracle, x, y, &draw.batch, s.mu1, &draw.ux, counter)?,
    };
    let w = match access {
        Access::Zeroth => unige_partial_y(oracle, x, y, &draw.batch, s.mu2, &draw.uy, counter)?,
        _ => gradient_mean(oracle.dim_y(), &draw.batch, counter, |i| oracle.grad_y(x, y, i), "grad_y")?,
    };
    Ok((v, w))
}

#[allow(clippy::too_many_arguments)]
fn run<O: MinimaxOracle + ?Sized>(
    access: Access,
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
    let name = access.name();
    let (d1, d2) = (oracle.dim_x(), oracle.dim_y());
    if set_x.dim() != d1 || set_y.dim() != d2 {
        return Err(Error::contract(format!("{name}: constraint and oracle dimensions differ")));
    }
    if access != Access::Zeroth && !oracle.has_gradients() {
        return Err(Error::config(format!("{name} needs an oracle with stochastic gradients")));
    }
    let n = oracle.population_size();
    let b = hp.b;
    let mut streams = Streams {
        batches: RngStream::new(seed, MINIBATCH),
        sphere_x: RngStream::new(seed, SPHERE_X),
        sphere_y: RngStream::new(seed, SPHERE_Y),
    };
    let mut pick = RngStream::new(seed, OUTPUT_PICK);
    let zeta = 1 + pick.index(hp.t);

    let mut counter = QueryCounter::new();
    let mut x = start_point(set_x, x1, name)?;
    let mut y = start_point(set_y, y1, name)?;
    let draw = streams.draw(access, n, b, d1, d2);
    let (mut v, mut w) = estimate(access, oracle, &x, &y, &draw, hp, &mut counter).map_err(|e| e.at_iteration(0))?;
    let mut out = None;

    for t in 1..=hp.t {
        let eta = eta_schedule(t, hp.k, hp.m);
        if t == zeta {
            out = Some((x.clone(), y.clone()));
        }
        let x_next = step_primal(set_x, &x, &v, hp.gamma, eta);
        let y_next = step_dual(set_y, &y, &w, hp.lambda, eta);
        let alpha = momentum_coeff(hp.c1, eta);
        let beta = momentum_coeff(hp.c2, eta);
        let draw = streams.draw(access, n, b, d1, d2);
        let (gx_new, gy_new) =
            estimate(access, oracle, &x_next, &y_next, &draw, hp, &mut counter).map_err(|e| e.at_iteration(t))?;
        let (gx_old, gy_old) = estimate(access, oracle, &x, &y, &draw, hp, &mut counter).map_err(|e| e.at_iteration(t))?;
        let v_next = storm_combine(&gx_new, &gx_old, &v, alpha);
        let w_next = storm_combine(&gy_new, &gy_old, &w, beta);
        sink.observe(&Snapshot {
            t,
            x: &x,
            y: Some(&y),
            v: &v,
            w: Some(&w),
            eta,
            alpha,
            beta,
            counter,
        })?;
        x = x_next;
        y = y_next;
        v = v_next;
        w = w_next;
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

/// Accelerated zeroth-order momentum descent ascent for
/// `min_{x ∈ X} max_{y ∈ Y} E f(x, y; ξ)` with function values only.
///
/// Each iteration draws a batch of `b` samples with fresh `x` and `y`
/// directions per member and evaluates both partial estimates at the new and
/// old points: `8b` function queries per iteration plus `4b` at start.
#[allow(clippy::too_many_arguments)]
pub fn acc_zomda_run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    run(Access::Zeroth, oracle, set_x, set_y, hp, x1, y1, seed, sink)
}

/// As [`acc_zomda_run`] with the `y` estimate replaced by the batch mean of
/// `grad_y(·; ξ_i)`. Costs `4b` function and `2b` gradient queries per
/// iteration, plus `2b` and `b` at start.
#[allow(clippy::too_many_arguments)]
pub fn acc_semi_zomda_run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    run(Access::Semi, oracle, set_x, set_y, hp, x1, y1, seed, sink)
}

/// Accelerated momentum descent ascent with stochastic gradients. The
/// counter records partial-gradient calls: `4b` per iteration and `2b` at start.
#[allow(clippy::too_many_arguments)]
pub fn acc_mda_run<O: MinimaxOracle + ?Sized>(
    oracle: &O,
    set_x: &ConstraintSet,
    set_y: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    y1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    run(Access::First, oracle, set_x, set_y, hp, x1, y1, seed, sink)
}
