//! Accelerated momentum methods, baselines and the hyperparameter checker.
//!
//! Every run is single-threaded and deterministic in its seed. Randomness is
//! split across labelled streams (`minibatch`, `sphere-x`, `sphere-y`,
//! `output-pick`) so that, for example, the output pick never perturbs the
//! optimization path.

mod acc_zom;
mod baselines;
mod minimax;
mod theory;

use std::time::Instant;

pub use acc_zom::acc_zom_run;
pub use baselines::{sgda_run, zo_sgd_run, zo_sgda_run};
pub use minimax::{acc_mda_run, acc_semi_zomda_run, acc_zomda_run};
pub use theory::{
    check_theory_conditions, Algorithm, ConditionRow, Relation, Status, TheoryConstants,
    TheoryReport,
};

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::{QueryCounter, SmoothingParams};
use crate::trace::TraceRow;
use crate::vector::Vector;

#[derive(Clone, Debug, PartialEq)]
pub struct HyperParams {
    /// Primal step scale `γ`.
    pub gamma: f64,
    /// Dual step scale `λ`. Zero freezes `y`.
    pub lambda: f64,
    pub k: f64,
    pub m: f64,
    /// Momentum constant for mini problems.
    pub c: f64,
    pub c1: f64,
    pub c2: f64,
    /// Batch size.
    pub b: usize,
    /// Number of iterations.
    pub t: usize,
    pub smoothing: SmoothingParams,
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gamma", self.gamma),
            ("k", self.k),
            ("c", self.c),
            ("c1", self.c1),
            ("c2", self.c2),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::contract(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(Error::contract(format!("lambda must be non-negative, got {}", self.lambda)));
        }
        if !(self.m.is_finite() && self.m >= 1.0) {
            return Err(Error::contract(format!("m must be at least 1, got {}", self.m)));
        }
        if self.b == 0 || self.t == 0 {
            return Err(Error::contract("b and T must be at least 1"));
        }
        self.smoothing.validate()
    }
}

/// `η_t = k / (m + t)^{1/3}`.
pub fn eta_schedule(t: usize, k: f64, m: f64) -> f64 {
    k / (m + t as f64).cbrt()
}

/// `min(1, c η²)`.
pub fn momentum_coeff(c: f64, eta: f64) -> f64 {
    (c * eta * eta).min(1.0)
}

/// `g_new + (1 − α)(v − g_old)`.
pub fn storm_combine(g_new: &[f64], g_old: &[f64], v: &[f64], alpha: f64) -> Vector {
    let keep = 1.0 - alpha;
    g_new
        .iter()
        .zip(g_old)
        .zip(v)
        .map(|((gn, go), vi)| gn + keep * (vi - go))
        .collect()
}

/// Primal update: `x − γηv` without constraints, otherwise a step of length
/// `η` towards `P(x − γv)`.
pub(crate) fn step_primal(set: &ConstraintSet, x: &[f64], v: &[f64], gamma: f64, eta: f64) -> Vector {
    if set.is_unconstrained() {
        let s = gamma * eta;
        return x.iter().zip(v).map(|(xi, vi)| xi - s * vi).collect();
    }
    let trial: Vec<f64> = x.iter().zip(v).map(|(xi, vi)| xi - gamma * vi).collect();
    toward(x, &set.project_unchecked(&trial), eta)
}

/// Dual update: a step of length `η` towards `P(y + λw)`.
pub(crate) fn step_dual(set: &ConstraintSet, y: &[f64], w: &[f64], lambda: f64, eta: f64) -> Vector {
    let trial: Vec<f64> = y.iter().zip(w).map(|(yi, wi)| yi + lambda * wi).collect();
    toward(y, &set.project_unchecked(&trial), eta)
}

fn toward(from: &[f64], to: &[f64], eta: f64) -> Vector {
    from.iter().zip(to).map(|(a, b)| a + eta * (b - a)).collect()
}

/// State handed to a [`TraceSink`] once per iteration: the iterate at the
/// start of iteration `t`, the step size used, the momentum coefficients
/// computed in it, and the query totals at its end.
#[derive(Clone, Copy, Debug)]
pub struct Snapshot<'a> {
    pub t: usize,
    pub x: &'a [f64],
    pub y: Option<&'a [f64]>,
    pub v: &'a [f64],
    pub w: Option<&'a [f64]>,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub counter: QueryCounter,
}

pub trait TraceSink {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()>;
}

/// Discards every snapshot.
pub struct NullSink;

impl TraceSink for NullSink {
    fn observe(&mut self, _: &Snapshot<'_>) -> Result<()> {
        Ok(())
    }
}

impl<F: FnMut(&Snapshot<'_>) -> Result<()>> TraceSink for F {
    fn observe(&mut self, snap: &Snapshot<'_>) -> Result<()> {
        self(snap)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterateRecord {
    pub t: usize,
    pub x: Vector,
    pub y: Option<Vector>,
    pub v: Vector,
    pub w: Option<Vector>,
}

type ObjectiveFn<'a> = Box<dyn Fn(&Snapshot<'_>) -> f64 + Sync + 'a>;
type MetricFn<'a> = Box<dyn Fn(&Snapshot<'_>) -> Result<f64> + Sync + 'a>;

/// Builds [`TraceRow`]s from snapshots. The metric is evaluated when
/// `t % metric_every == 0` and on the last iteration.
pub struct Recorder<'a> {
    objective: ObjectiveFn<'a>,
    metric: MetricFn<'a>,
    metric_every: usize,
    horizon: usize,
    keep_iterates: bool,
    clock: Option<Instant>,
    pub rows: Vec<TraceRow>,
    pub iterates: Vec<IterateRecord>,
}

impl<'a> Recorder<'a> {
    pub fn new(
        horizon: usize,
        metric_every: usize,
        objective: impl Fn(&Snapshot<'_>) -> f64 + Sync + 'a,
        metric: impl Fn(&Snapshot<'_>) -> Result<f64> + Sync + 'a,
    ) -> Self {
        Recorder {
            objective: Box::new(objective),
            metric: Box::new(metric),
            metric_every: metric_every.max(1),
            horizon,
            keep_iterates: false,
            clock: None,
            rows: Vec::new(),
            iterates: Vec::new(),
        }
    }

    pub fn keep_iterates(mut self, keep: bool) -> Self {
        self.keep_iterates = keep;
        self
    }

    /// Fill `elapsed_ms` with wall time. Off by default so traces are
    /// reproducible byte for byte.
    pub fn record_timing(mut self, on: bool) -> Self {
        self.clock = on.then(Instant::now);
        self
    }

    pub fn metric_values(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.rows
            .iter()
            .filter_map(|r| r.metric.map(|m| (r.function_queries, m)))
    }
}

impl TraceSink for Recorder<'_> {
    fn observe(&mut self, s: &Snapshot<'_>) -> Result<()> {
        let due = s.t.is_multiple_of(self.metric_every) || s.t == self.horizon;
        let metric = if due { Some((self.metric)(s)?) } else { None };
        self.rows.push(TraceRow {
            iter: s.t,
            function_queries: s.counter.function_queries,
            gradient_queries: s.counter.gradient_queries,
            objective: (self.objective)(s),
            metric,
            eta: s.eta,
            alpha: s.alpha,
            beta: s.beta,
            elapsed_ms: self.clock.map_or(0, |c| c.elapsed().as_millis() as u64),
        });
        if self.keep_iterates {
            self.iterates.push(IterateRecord {
                t: s.t,
                x: s.x.into(),
                y: s.y.map(Vector::from),
                v: s.v.into(),
                w: s.w.map(Vector::from),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// Iterate `x_ζ` picked uniformly from `x_1..x_T`.
    pub x_out: Vector,
    pub y_out: Option<Vector>,
    /// Iterate after the last update, `x_{T+1}`.
    pub x_last: Vector,
    pub y_last: Option<Vector>,
    pub zeta: usize,
    pub counter: QueryCounter,
}

/// Checks and projects a starting point.
pub(crate) fn start_point(set: &ConstraintSet, p: &[f64], what: &str) -> Result<Vector> {
    if p.len() != set.dim() {
        return Err(Error::contract(format!(
            "{what}: start point has dimension {}, expected {}",
            p.len(),
            set.dim()
        )));
    }
    set.project(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eta_examples() {
        assert!((eta_schedule(1, 1.0, 3.0) - 0.629_960_5).abs() < 1e-7);
        assert!((eta_schedule(0, 1.0, 3.0) - 0.693_361_3).abs() < 1e-7);
        for t in 0..100 {
            assert!(eta_schedule(t + 1, 2.0, 8.0) < eta_schedule(t, 2.0, 8.0));
            assert!(eta_schedule(t, 2.0, 8.0) <= 1.0);
        }
    }

    #[test]
    fn momentum_examples() {
        assert_eq!(momentum_coeff(3.0, 0.629_960_5), 1.0);
        assert!((3.0 * 0.629_960_5f64.powi(2) - 1.190_55).abs() < 1e-5);
        assert!((momentum_coeff(3.0, 0.1) - 0.03).abs() < 1e-15);
        // m ≥ (ck)³ keeps cη² below one without the clamp.
        let (c, k) = (3.0_f64, 1.0);
        let m = (c * k).powi(3);
        for t in 0..50 {
            let e = eta_schedule(t, k, m);
            assert!(c * e * e <= 1.0);
        }
    }

    #[test]
    fn storm_examples() {
        assert_eq!(storm_combine(&[2.0], &[1.0], &[3.0], 0.5)[0], 3.0);
        assert_eq!(storm_combine(&[2.0, -1.0], &[5.0, 5.0], &[7.0, 9.0], 1.0).as_slice(), &[2.0, -1.0]);
        assert_eq!(storm_combine(&[2.0, -1.0], &[5.0, 5.0], &[5.0, 5.0], 0.0).as_slice(), &[2.0, -1.0]);
    }

    #[test]
    fn primal_step_stays_feasible() {
        let set = ConstraintSet::linf_ball(2, 1.0).unwrap();
        let x = step_primal(&set, &[0.9, -0.9], &[-10.0, 10.0], 1.0, 0.5);
        assert_eq!(x.as_slice(), &[0.95, -0.95]);
        let free = ConstraintSet::unconstrained(1);
        assert_eq!(step_primal(&free, &[1.0], &[2.0], 0.5, 0.5)[0], 0.5);
    }

    #[test]
    fn validation() {
        let mut hp = HyperParams {
            gamma: 0.1,
            lambda: 0.0,
            k: 1.0,
            m: 27.0,
            c: 3.0,
            c1: 3.0,
            c2: 3.0,
            b: 1,
            t: 10,
            smoothing: SmoothingParams::theorem_defaults(2, 2, 27.0, 10),
        };
        hp.validate().unwrap();
        hp.m = 0.5;
        assert!(hp.validate().is_err());
        hp.m = 27.0;
        hp.b = 0;
        assert!(hp.validate().is_err());
        hp.b = 1;
        hp.lambda = -1.0;
        assert!(hp.validate().is_err());
    }
}
