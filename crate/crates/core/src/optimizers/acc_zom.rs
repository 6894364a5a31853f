use super::{
    eta_schedule, momentum_coeff, start_point, step_primal, storm_combine, HyperParams, RunOutput,
    Snapshot, TraceSink,
};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::{sample_unit_sphere, unige_grad, QueryCounter};
use crate::problems::MiniOracle;
use crate::rng::{RngStream, MINIBATCH, OUTPUT_PICK, SPHERE_X};

/// Accelerated zeroth-order momentum method for `min_{x ∈ X} E f(x; ξ)`.
///
/// One sample and one sphere direction are drawn per iteration and shared by
/// the two estimates at `x_{t+1}` and `x_t`, so a run costs `2 + 4T` function
/// queries. Uses `hp.gamma`, `k`, `m`, `c`, `t` and `smoothing.mu`.
pub fn acc_zom_run<O: MiniOracle + ?Sized>(
    oracle: &O,
    set: &ConstraintSet,
    hp: &HyperParams,
    x1: &[f64],
    seed: u64,
    sink: &mut dyn TraceSink,
) -> Result<RunOutput> {
    hp.validate()?;
    if set.dim() != oracle.dim() {
        return Err(Error::contract("acc_zom: constraint and oracle dimensions differ"));
    }
    let d = oracle.dim();
    let n = oracle.population_size();
    let mu = hp.smoothing.mu;
    let mut batches = RngStream::new(seed, MINIBATCH);
    let mut sphere = RngStream::new(seed, SPHERE_X);
    let mut pick = RngStream::new(seed, OUTPUT_PICK);
    let zeta = 1 + pick.index(hp.t);

    let mut counter = QueryCounter::new();
    let mut x = start_point(set, x1, "acc_zom")?;
    let xi = batches.index(n);
    let u = sample_unit_sphere(d, &mut sphere);
    let mut v = unige_grad(oracle, &x, xi, mu, &u, &mut counter).map_err(|e| e.at_iteration(0))?;
    let mut x_out = None;

    for t in 1..=hp.t {
        let eta = eta_schedule(t, hp.k, hp.m);
        if t == zeta {
            x_out = Some(x.clone());
        }
        let x_next = step_primal(set, &x, &v, hp.gamma, eta);
        let alpha = momentum_coeff(hp.c, eta);
        let xi = batches.index(n);
        let u = sample_unit_sphere(d, &mut sphere);
        let g_new = unige_grad(oracle, &x_next, xi, mu, &u, &mut counter).map_err(|e| e.at_iteration(t))?;
        let g_old = unige_grad(oracle, &x, xi, mu, &u, &mut counter).map_err(|e| e.at_iteration(t))?;
        let v_next = storm_combine(&g_new, &g_old, &v, alpha);
        sink.observe(&Snapshot {
            t,
            x: &x,
            y: None,
            v: &v,
            w: None,
            eta,
            alpha,
            beta: 0.0,
            counter,
        })?;
        x = x_next;
        v = v_next;
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
