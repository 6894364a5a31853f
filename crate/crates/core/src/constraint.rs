//! Convex feasible sets with exact Euclidean projections.

use std::fmt;

use crate::error::{Error, Result};
use crate::vector::Vector;

/// A closed convex set centred at the origin.
#[derive(Clone, Debug, PartialEq)]
pub enum ConstraintSet {
    Unconstrained { dim: usize },
    /// `{x : ‖x‖_∞ ≤ radius}`
    LinfBall { dim: usize, radius: f64 },
    /// `{x : ‖x‖₂ ≤ radius}`
    L2Ball { dim: usize, radius: f64 },
}

impl ConstraintSet {
    pub fn unconstrained(dim: usize) -> Self {
        ConstraintSet::Unconstrained { dim }
    }

    pub fn linf_ball(dim: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(ConstraintSet::LinfBall { dim, radius })
    }

    pub fn l2_ball(dim: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(ConstraintSet::L2Ball { dim, radius })
    }

    /// L2 ball given by its squared radius, `{‖y‖² ≤ r2}`.
    pub fn l2_ball_squared(dim: usize, squared_radius: f64) -> Result<Self> {
        Self::l2_ball(dim, squared_radius.sqrt())
    }

    pub fn dim(&self) -> usize {
        match *self {
            ConstraintSet::Unconstrained { dim }
            | ConstraintSet::LinfBall { dim, .. }
            | ConstraintSet::L2Ball { dim, .. } => dim,
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, ConstraintSet::Unconstrained { .. })
    }

    /// Euclidean projection `argmin_{x ∈ set} ½‖x − p‖²`.
    pub fn project(&self, p: &[f64]) -> Result<Vector> {
        if p.len() != self.dim() {
            return Err(Error::contract(format!(
                "project: point has dimension {}, set has {}",
                p.len(),
                self.dim()
            )));
        }
        if !p.iter().all(|v| v.is_finite()) {
            return Err(Error::contract("project: non-finite input"));
        }
        Ok(self.project_unchecked(p))
    }

    pub(crate) fn project_unchecked(&self, p: &[f64]) -> Vector {
        match *self {
            ConstraintSet::Unconstrained { .. } => Vector::from(p),
            ConstraintSet::LinfBall { radius, .. } => {
                p.iter().map(|v| v.clamp(-radius, radius)).collect()
            }
            ConstraintSet::L2Ball { radius, .. } => {
                let n = crate::vector::norm(p);
                if n <= radius {
                    Vector::from(p)
                } else {
                    let s = radius / n;
                    p.iter().map(|v| v * s).collect()
                }
            }
        }
    }

    /// Membership test with an absolute tolerance on the defining norm.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        if p.len() != self.dim() {
            return false;
        }
        match *self {
            ConstraintSet::Unconstrained { .. } => p.iter().all(|v| v.is_finite()),
            ConstraintSet::LinfBall { radius, .. } => p.iter().all(|v| v.abs() <= radius + tol),
            ConstraintSet::L2Ball { radius, .. } => crate::vector::norm(p) <= radius + tol,
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::contract(format!(
            "ball radius must be positive and finite, got {radius}"
        )));
    }
    Ok(())
}

impl fmt::Display for ConstraintSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintSet::Unconstrained { dim } => write!(f, "R^{dim}"),
            ConstraintSet::LinfBall { dim, radius } => write!(f, "{{x in R^{dim} : |x|_inf <= {radius}}}"),
            ConstraintSet::L2Ball { dim, radius } => write!(f, "{{x in R^{dim} : |x|_2 <= {radius}}}"),
        }
    }
}

/// `min_x ⟨q − p, x − q⟩` over the probe points, where `q` is the projection
/// of `p`. Non-negative (up to rounding) for every probe inside the set.
pub fn variational_residual<'a>(
    set: &ConstraintSet,
    p: &[f64],
    q: &[f64],
    probes: impl IntoIterator<Item = &'a [f64]>,
) -> Result<f64> {
    let d = set.dim();
    if p.len() != d || q.len() != d {
        return Err(Error::contract("variational_residual: dimension mismatch"));
    }
    let diff: Vec<f64> = q.iter().zip(p).map(|(a, b)| a - b).collect();
    let mut best = f64::INFINITY;
    for x in probes {
        if x.len() != d {
            return Err(Error::contract("variational_residual: probe dimension mismatch"));
        }
        let v: f64 = diff.iter().zip(x.iter().zip(q)).map(|(g, (xi, qi))| g * (xi - qi)).sum();
        best = best.min(v);
    }
    Ok(best)
}
