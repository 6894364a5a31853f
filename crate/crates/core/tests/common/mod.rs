#![allow(dead_code)]

use zomo::estimators::SmoothingParams;
use zomo::optimizers::{HyperParams, TheoryConstants};
use zomo::problems::{
    quadratic_saddle, MiniOracle, MinimaxOracle, ProblemConstants, QuadraticSaddle, SaddleOptions,
};
use zomo::{ConstraintSet, Vector};

/// `f(x) = aᵀx`, one sample.
pub struct Linear(pub Vector);

impl MiniOracle for Linear {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn population_size(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64], _: usize) -> f64 {
        self.0.dot(x)
    }
}

/// Hides the analytic maximizer so metrics fall back to projected ascent.
pub struct NoYStar<'a, O>(pub &'a O);

impl<O: MinimaxOracle> MinimaxOracle for NoYStar<'_, O> {
    fn dim_x(&self) -> usize {
        self.0.dim_x()
    }
    fn dim_y(&self) -> usize {
        self.0.dim_y()
    }
    fn population_size(&self) -> usize {
        self.0.population_size()
    }
    fn value(&self, x: &[f64], y: &[f64], s: usize) -> f64 {
        self.0.value(x, y, s)
    }
    fn full_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.full_value(x, y)
    }
    fn has_gradients(&self) -> bool {
        self.0.has_gradients()
    }
    fn grad_x(&self, x: &[f64], y: &[f64], s: usize) -> Option<Vector> {
        self.0.grad_x(x, y, s)
    }
    fn grad_y(&self, x: &[f64], y: &[f64], s: usize) -> Option<Vector> {
        self.0.grad_y(x, y, s)
    }
    fn full_grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        self.0.full_grad_x(x, y)
    }
    fn full_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        self.0.full_grad_y(x, y)
    }
    fn constants(&self) -> ProblemConstants {
        self.0.constants()
    }
}

/// The saddle used by the convergence regressions.
pub const SADDLE_DIMS: (usize, usize) = (3, 3);
pub const SADDLE_SEED: u64 = 7;
pub const SADDLE_SCALE: f64 = 0.2;

pub fn regression_saddle() -> QuadraticSaddle {
    let opts = SaddleOptions {
        scale: SADDLE_SCALE,
        ..Default::default()
    };
    quadratic_saddle(SADDLE_DIMS.0, SADDLE_DIMS.1, SADDLE_SEED, opts).unwrap()
}

pub fn saddle_config_text(extra: &str) -> String {
    format!(
        "problem.kind = quadratic_saddle\nproblem.dim_x = {}\nproblem.dim_y = {}\nproblem.seed = {SADDLE_SEED}\nproblem.scale = {SADDLE_SCALE}\n{extra}",
        SADDLE_DIMS.0, SADDLE_DIMS.1
    )
}

pub fn saddle_constants(q: &QuadraticSaddle) -> TheoryConstants {
    TheoryConstants {
        l_f: Some(q.l_f()),
        tau: Some(q.tau()),
        d1: q.p().rows(),
        d2: q.q().cols(),
        ..Default::default()
    }
}

/// Smallest hyperparameters meeting every minimax condition: `c1`, `c2` at
/// equality, `m` at its largest lower bound, `λ` and `γ` at their upper
/// bounds. `zeroth` selects the zeroth-order or first-order conditions.
pub fn compliant_saddle_hp(q: &QuadraticSaddle, k: f64, b: usize, t: usize, zeroth: bool) -> HyperParams {
    let (lf, tau) = (q.l_f(), q.tau());
    let kappa = lf / tau;
    let lg = lf + lf * lf / tau;
    let base = 2.0 / (3.0 * k.powi(3));
    let (d1, d2) = (q.p().rows(), q.q().cols());
    let dt = (d1 + d2) as f64;
    let bf = b as f64;
    // Nudge each value off its bound before the dependent bounds are formed,
    // so rounding cannot put it one ulp on the wrong side.
    let (up, down) = (1.0 + 1e-12, 1.0 - 1e-12);
    let c1 = (base + 2.25 * tau * tau) * up;
    let c2 = if zeroth {
        base + 625.0 * dt * lf * lf / (3.0 * bf)
    } else {
        base + 37.5 * lf * lf
    } * up;
    let m = 2f64.max(k.powi(3)).max((c1 * k).powi(3)).max((c2 * k).powi(3)) * up;
    let (lambda, gamma) = if zeroth {
        let l = (1.0 / (6.0 * lf)).min(75.0 * tau / 24.0) * down;
        let g = (l * tau / (2.0 * lf) * ((6.0 * bf / dt) / (36.0 * l * l + 625.0 * kappa * kappa)).sqrt())
            .min(m.cbrt() / (2.0 * lg * k));
        (l, g * down)
    } else {
        let l = (1.0 / (6.0 * lf)).min(27.0 * bf * tau / 16.0) * down;
        let g = (l * tau / (2.0 * lf) * (2.0 * bf / (8.0 * l * l + 75.0 * kappa * kappa * bf)).sqrt())
            .min(m.cbrt() / (2.0 * lg * k));
        (l, g * down)
    };
    HyperParams {
        gamma,
        lambda,
        k,
        m,
        c: 3.0,
        c1,
        c2,
        b,
        t,
        smoothing: SmoothingParams::theorem_defaults(d1, d2, m, t),
    }
}

pub fn feasible(set: &ConstraintSet, p: &[f64]) -> bool {
    set.contains(p, 1e-12)
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
