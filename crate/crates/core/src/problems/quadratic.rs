//! Analytic quadratic test problems with bounded, exactly-cancelling noise.
//!
//! Samples come in pairs `(2j, 2j+1)` sharing a unit direction `r_j`; the
//! even sample adds `+σ(1 + r_jᵀz)` and the odd one subtracts it, so the
//! population mean is noise-free and every per-sample gradient is off by at
//! most `σ`.

use super::{MiniOracle, MinimaxOracle, ProblemConstants};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::sample_unit_sphere;
use crate::rng::{RngStream, DATA_GEN};
use crate::vector::{self, symmetric_spectral_norm, Matrix, Vector};

const DEFAULT_POPULATION: usize = 64;

fn noise_sign(sample: usize) -> f64 {
    if sample.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn noise_directions(dim: usize, population: usize, rng: &mut RngStream) -> Vec<Vector> {
    (0..population / 2)
        .map(|_| sample_unit_sphere(dim, rng))
        .collect()
}

/// Random orthogonal matrix (Q factor of a Gaussian matrix).
fn random_orthogonal(dim: usize, rng: &mut RngStream) -> Matrix {
    let g = Matrix::from_fn(dim, dim, |_, _| rng.standard_normal());
    let q = g.to_nalgebra().qr().q();
    Matrix::from_nalgebra(&q)
}

/// `R diag(eigs) Rᵀ`
fn rotated_diagonal(r: &Matrix, eigs: &[f64]) -> Matrix {
    let n = eigs.len();
    Matrix::from_fn(n, n, |i, j| (0..n).map(|k| r.get(i, k) * eigs[k] * r.get(j, k)).sum())
}

fn check_population(population: usize) -> Result<()> {
    if population < 2 || !population.is_multiple_of(2) {
        return Err(Error::contract(format!(
            "population size must be even and at least 2, got {population}"
        )));
    }
    Ok(())
}

/// `f(x; ξ) = ½ xᵀA x + bᵀx + s_ξ σ (1 + r_ξᵀx)` with `A` symmetric positive definite.
#[derive(Clone, Debug)]
pub struct QuadraticMini {
    a: Matrix,
    b: Vector,
    sigma: f64,
    directions: Vec<Vector>,
    l: f64,
}

impl QuadraticMini {
    pub fn new(a: Matrix, b: Vector, sigma: f64, population: usize, seed: u64) -> Result<Self> {
        let d = b.dim();
        if a.rows() != d || a.cols() != d {
            return Err(Error::contract("quadratic_mini: A must be d x d"));
        }
        check_population(population)?;
        let mut rng = RngStream::new(seed, DATA_GEN);
        let directions = noise_directions(d, population, &mut rng);
        let l = symmetric_spectral_norm(&a);
        Ok(QuadraticMini {
            a,
            b,
            sigma,
            directions,
            l,
        })
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Largest eigenvalue of `A`.
    pub fn lipschitz(&self) -> f64 {
        self.l
    }

    pub fn minimizer(&self) -> Vector {
        let neg_b = self.b.scaled(-1.0);
        vector::solve(&self.a, &neg_b).expect("A is positive definite")
    }

    /// Per-sample gradient `A x + b + s σ r`.
    pub fn sample_grad(&self, x: &[f64], sample: usize) -> Vector {
        let mut g = &self.a.matvec(x) + &self.b;
        g.axpy(noise_sign(sample) * self.sigma, &self.directions[sample / 2]);
        g
    }
}

impl MiniOracle for QuadraticMini {
    fn dim(&self) -> usize {
        self.b.dim()
    }

    fn population_size(&self) -> usize {
        2 * self.directions.len()
    }

    fn value(&self, x: &[f64], sample: usize) -> f64 {
        let r = &self.directions[sample / 2];
        0.5 * self.a.bilinear(x, x)
            + self.b.dot(x)
            + noise_sign(sample) * self.sigma * (1.0 + r.dot(x))
    }

    fn full_value(&self, x: &[f64]) -> f64 {
        0.5 * self.a.bilinear(x, x) + self.b.dot(x)
    }

    fn true_grad(&self, x: &[f64]) -> Option<Vector> {
        Some(&self.a.matvec(x) + &self.b)
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            l: Some(self.l),
            ..Default::default()
        }
    }
}

/// Random instance: eigenvalues of `A` uniform in `[0.5, 1]`, `b ~ N(0, ¼ I)`,
/// `σ = 0.1`, 64 samples.
pub fn quadratic_mini(dim: usize, seed: u64) -> Result<QuadraticMini> {
    if dim == 0 {
        return Err(Error::contract("quadratic_mini: dim must be at least 1"));
    }
    let mut rng = RngStream::new(seed, "quadratic-mini");
    let r = random_orthogonal(dim, &mut rng);
    let eigs: Vec<f64> = (0..dim).map(|_| 0.5 + 0.5 * rng.uniform()).collect();
    let a = rotated_diagonal(&r, &eigs);
    let b = Vector::from_fn(dim, |_| 0.5 * rng.standard_normal());
    QuadraticMini::new(a, b, 0.1, DEFAULT_POPULATION, seed)
}

/// `f(x, y; ξ) = ½ xᵀP x + xᵀQ y − ½ τ‖y‖² + s_ξ σ (1 + r_ξᵀx + r'_ξᵀy)`.
#[derive(Clone, Debug)]
pub struct QuadraticSaddle {
    p: Matrix,
    q: Matrix,
    tau: f64,
    sigma: f64,
    dirs_x: Vec<Vector>,
    dirs_y: Vec<Vector>,
    l_f: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaddleOptions {
    /// Multiplies `P`, `Q` and `τ`.
    pub scale: f64,
    pub noise: f64,
    pub population: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        SaddleOptions {
            scale: 1.0,
            noise: 0.1,
            population: DEFAULT_POPULATION,
        }
    }
}

impl QuadraticSaddle {
    pub fn new(
        p: Matrix,
        q: Matrix,
        tau: f64,
        sigma: f64,
        population: usize,
        seed: u64,
    ) -> Result<Self> {
        let (dx, dy) = (p.rows(), q.cols());
        if p.cols() != dx || q.rows() != dx {
            return Err(Error::contract("quadratic_saddle: P must be dx x dx and Q dx x dy"));
        }
        if !(tau > 0.0) {
            return Err(Error::contract("quadratic_saddle: tau must be positive"));
        }
        check_population(population)?;
        let mut rng = RngStream::new(seed, DATA_GEN);
        let dirs_x = noise_directions(dx, population, &mut rng);
        let dirs_y = noise_directions(dy, population, &mut rng);
        // Joint Hessian [[P, Q], [Qᵀ, −τI]].
        let n = dx + dy;
        let h = Matrix::from_fn(n, n, |i, j| match (i < dx, j < dx) {
            (true, true) => p.get(i, j),
            (true, false) => q.get(i, j - dx),
            (false, true) => q.get(j, i - dx),
            (false, false) => {
                if i == j {
                    -tau
                } else {
                    0.0
                }
            }
        });
        let l_f = symmetric_spectral_norm(&h);
        Ok(QuadraticSaddle {
            p,
            q,
            tau,
            sigma,
            dirs_x,
            dirs_y,
            l_f,
        })
    }

    pub fn p(&self) -> &Matrix {
        &self.p
    }

    pub fn q(&self) -> &Matrix {
        &self.q
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn l_f(&self) -> f64 {
        self.l_f
    }

    /// Smoothness of `g(x) = max_y f(x, y)`: `L_f + L_f²/τ`.
    pub fn l_g(&self) -> f64 {
        self.l_f + self.l_f * self.l_f / self.tau
    }

    /// Unconstrained maximizer `Qᵀx / τ`.
    pub fn unconstrained_y_star(&self, x: &[f64]) -> Vector {
        self.q.tr_matvec(x).scaled(1.0 / self.tau)
    }

    /// `g(x) = f(x, y*(x))` over `set_y`.
    pub fn g_value(&self, x: &[f64], set_y: &ConstraintSet) -> f64 {
        let y = self.y_star(x, set_y).expect("analytic");
        self.full_value(x, &y)
    }

    /// `∇g(x) = ∇_x f(x, y*(x))` (Danskin).
    pub fn grad_g(&self, x: &[f64], set_y: &ConstraintSet) -> Vector {
        let y = self.y_star(x, set_y).expect("analytic");
        self.full_grad_x(x, &y).expect("analytic")
    }

    /// Stationary point of `g` for unconstrained `y`: x = 0 (no linear terms).
    pub fn saddle_point(&self) -> (Vector, Vector) {
        (Vector::zeros(self.p.rows()), Vector::zeros(self.q.cols()))
    }
}

impl MinimaxOracle for QuadraticSaddle {
    fn dim_x(&self) -> usize {
        self.p.rows()
    }

    fn dim_y(&self) -> usize {
        self.q.cols()
    }

    fn population_size(&self) -> usize {
        2 * self.dirs_x.len()
    }

    fn value(&self, x: &[f64], y: &[f64], sample: usize) -> f64 {
        let j = sample / 2;
        self.full_value(x, y)
            + noise_sign(sample) * self.sigma * (1.0 + self.dirs_x[j].dot(x) + self.dirs_y[j].dot(y))
    }

    fn full_value(&self, x: &[f64], y: &[f64]) -> f64 {
        0.5 * self.p.bilinear(x, x) + self.q.bilinear(x, y) - 0.5 * self.tau * vector::dot(y, y)
    }

    fn has_gradients(&self) -> bool {
        true
    }

    fn grad_x(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        let mut g = &self.p.matvec(x) + &self.q.matvec(y);
        g.axpy(noise_sign(sample) * self.sigma, &self.dirs_x[sample / 2]);
        Some(g)
    }

    fn grad_y(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        let mut g = self.q.tr_matvec(x);
        g.axpy(-self.tau, y);
        g.axpy(noise_sign(sample) * self.sigma, &self.dirs_y[sample / 2]);
        Some(g)
    }

    fn full_grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        Some(&self.p.matvec(x) + &self.q.matvec(y))
    }

    fn full_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        let mut g = self.q.tr_matvec(x);
        g.axpy(-self.tau, y);
        Some(g)
    }

    /// `f(x, ·)` is `−(τ/2)‖y − Qᵀx/τ‖²` plus a constant, so the constrained
    /// maximizer is the projection of the unconstrained one.
    fn y_star(&self, x: &[f64], set_y: &ConstraintSet) -> Option<Vector> {
        Some(set_y.project_unchecked(&self.unconstrained_y_star(x)))
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            l: Some(self.l_f),
            l_f: Some(self.l_f),
            tau: Some(self.tau),
            l_f_estimated: false,
        }
    }
}

/// Random instance with `τ = 1` and all coupling singular values `½`.
///
/// When `dim_y ≥ dim_x` the eigenvalues of `P` are drawn from `[−0.1, 1]`
/// (nonconvex in `x`, yet `g` has curvature at least `0.15`); otherwise
/// from `[0.2, 1]`. `options.scale` multiplies `P`, `Q` and `τ`.
pub fn quadratic_saddle(
    dim_x: usize,
    dim_y: usize,
    seed: u64,
    options: SaddleOptions,
) -> Result<QuadraticSaddle> {
    if dim_x == 0 || dim_y == 0 {
        return Err(Error::contract("quadratic_saddle: dimensions must be at least 1"));
    }
    if !(options.scale > 0.0) {
        return Err(Error::contract("quadratic_saddle: scale must be positive"));
    }
    let mut rng = RngStream::new(seed, "quadratic-saddle");
    let rx = random_orthogonal(dim_x, &mut rng);
    let ry = random_orthogonal(dim_y, &mut rng);
    let lo = if dim_y >= dim_x { -0.1 } else { 0.2 };
    let eigs: Vec<f64> = (0..dim_x).map(|_| lo + (1.0 - lo) * rng.uniform()).collect();
    let p = rotated_diagonal(&rx, &eigs);
    // Q = Rx S Ryᵀ with S = ½ [I 0].
    let s = Matrix::from_fn(dim_x, dim_y, |i, j| if i == j { 0.5 } else { 0.0 });
    let q = rx.matmul(&s).matmul(&ry.transpose());
    let k = options.scale;
    QuadraticSaddle::new(
        p.scaled(k),
        q.scaled(k),
        k,
        options.noise,
        options.population,
        seed,
    )
}
