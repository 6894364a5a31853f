//! Objective oracles and the built-in problems.
//!
//! Oracles expose per-sample access `f(·; ξ)` where `ξ` is an index into a
//! finite sample population. Expectations are plain means over the population,
//! so `full_value` is exact. Oracles never count queries; the estimators and
//! optimizers do.

mod poisoning;
mod quadratic;

pub use poisoning::{
    gen_poisoning_data, poisoning_grads, poisoning_value, BatchLoss, PoisonDataset,
    PoisoningProblem, sigmoid, LOGISTIC_CLAMP,
};
pub use quadratic::{
    quadratic_mini, quadratic_saddle, QuadraticMini, QuadraticSaddle, SaddleOptions,
};

use crate::constraint::ConstraintSet;
use crate::vector::Vector;

/// Smoothness and concavity constants used by the theory checker and metrics.
/// `None` means the constant is not known for this problem.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ProblemConstants {
    /// Lipschitz constant of `∇f(·; ξ)` for mini problems.
    pub l: Option<f64>,
    /// Lipschitz constant of the joint gradient for minimax problems.
    pub l_f: Option<f64>,
    /// Strong-concavity modulus in `y`.
    pub tau: Option<f64>,
    /// Set when `l_f` is a sampled estimate rather than an analytic value.
    pub l_f_estimated: bool,
}

/// Stochastic objective `f(x; ξ)` over `x ∈ R^d`.
pub trait MiniOracle: Sync {
    fn dim(&self) -> usize;

    fn population_size(&self) -> usize;

    fn value(&self, x: &[f64], sample: usize) -> f64;

    fn full_value(&self, x: &[f64]) -> f64 {
        let n = self.population_size();
        (0..n).map(|i| self.value(x, i)).sum::<f64>() / n as f64
    }

    /// Exact `∇f(x)` where known.
    fn true_grad(&self, _x: &[f64]) -> Option<Vector> {
        None
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants::default()
    }
}

/// Stochastic objective `f(x, y; ξ)` minimized over `x`, maximized over `y`.
pub trait MinimaxOracle: Sync {
    fn dim_x(&self) -> usize;

    fn dim_y(&self) -> usize;

    fn population_size(&self) -> usize;

    fn value(&self, x: &[f64], y: &[f64], sample: usize) -> f64;

    fn full_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let n = self.population_size();
        (0..n).map(|i| self.value(x, y, i)).sum::<f64>() / n as f64
    }

    /// Whether the `grad_*` methods return values (white-box access).
    fn has_gradients(&self) -> bool {
        false
    }

    fn grad_x(&self, _x: &[f64], _y: &[f64], _sample: usize) -> Option<Vector> {
        None
    }

    fn grad_y(&self, _x: &[f64], _y: &[f64], _sample: usize) -> Option<Vector> {
        None
    }

    fn full_grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        population_mean(self.population_size(), self.dim_x(), |i| self.grad_x(x, y, i))
    }

    fn full_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        population_mean(self.population_size(), self.dim_y(), |i| self.grad_y(x, y, i))
    }

    /// Analytic maximizer of `f(x, ·)` over `set_y`, where known.
    fn y_star(&self, _x: &[f64], _set_y: &ConstraintSet) -> Option<Vector> {
        None
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants::default()
    }
}

fn population_mean(
    n: usize,
    dim: usize,
    mut f: impl FnMut(usize) -> Option<Vector>,
) -> Option<Vector> {
    let mut acc = Vector::zeros(dim);
    for i in 0..n {
        acc.axpy(1.0, &f(i)?);
    }
    Some(acc.scaled(1.0 / n as f64))
}

/// A minimax oracle viewed as a mini oracle in `x` at a frozen `y`.
pub struct FixedY<'a, O: ?Sized> {
    pub oracle: &'a O,
    pub y: Vector,
}

impl<O: MinimaxOracle + ?Sized> MiniOracle for FixedY<'_, O> {
    fn dim(&self) -> usize {
        self.oracle.dim_x()
    }

    fn population_size(&self) -> usize {
        self.oracle.population_size()
    }

    fn value(&self, x: &[f64], sample: usize) -> f64 {
        self.oracle.value(x, &self.y, sample)
    }

    fn full_value(&self, x: &[f64]) -> f64 {
        self.oracle.full_value(x, &self.y)
    }

    fn true_grad(&self, x: &[f64]) -> Option<Vector> {
        self.oracle.full_grad_x(x, &self.y)
    }
}

/// Adds a constant to every value of a minimax oracle. Gradients are unchanged.
pub struct Shifted<'a, O: ?Sized> {
    pub oracle: &'a O,
    pub shift: f64,
}

impl<O: MinimaxOracle + ?Sized> MinimaxOracle for Shifted<'_, O> {
    fn dim_x(&self) -> usize {
        self.oracle.dim_x()
    }
    fn dim_y(&self) -> usize {
        self.oracle.dim_y()
    }
    fn population_size(&self) -> usize {
        self.oracle.population_size()
    }
    fn value(&self, x: &[f64], y: &[f64], sample: usize) -> f64 {
        self.oracle.value(x, y, sample) + self.shift
    }
    fn full_value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.oracle.full_value(x, y) + self.shift
    }
    fn has_gradients(&self) -> bool {
        self.oracle.has_gradients()
    }
    fn grad_x(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        self.oracle.grad_x(x, y, sample)
    }
    fn grad_y(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        self.oracle.grad_y(x, y, sample)
    }
    fn full_grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        self.oracle.full_grad_x(x, y)
    }
    fn full_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        self.oracle.full_grad_y(x, y)
    }
    fn y_star(&self, x: &[f64], set_y: &ConstraintSet) -> Option<Vector> {
        self.oracle.y_star(x, set_y)
    }
    fn constants(&self) -> ProblemConstants {
        self.oracle.constants()
    }
}
