mod common;

use std::sync::Mutex;

use common::*;
use zomo::estimators::{sample_unit_sphere, SmoothingParams};
use zomo::optimizers::{
    acc_mda_run, acc_semi_zomda_run, acc_zom_run, acc_zomda_run, eta_schedule, sgda_run, zo_sgd_run,
    zo_sgda_run, HyperParams, NullSink, Snapshot,
};
use zomo::problems::{quadratic_mini, quadratic_saddle, FixedY, MiniOracle, MinimaxOracle, QuadraticSaddle, SaddleOptions};
use zomo::rng::{RngStream, MINIBATCH, SPHERE_X, SPHERE_Y};
use zomo::{ConstraintSet, Result, Vector};

fn hp(b: usize, t: usize) -> HyperParams {
    HyperParams {
        gamma: 0.2,
        lambda: 0.1,
        k: 1.0,
        m: 27.0,
        c: 3.0,
        c1: 3.0,
        c2: 3.0,
        b,
        t,
        smoothing: SmoothingParams::theorem_defaults(2, 3, 27.0, t),
    }
}

fn saddle() -> QuadraticSaddle {
    quadratic_saddle(2, 3, 4, SaddleOptions::default()).unwrap()
}

type Path = Vec<(Vec<f64>, Option<Vec<f64>>)>;

fn record(path: &mut Path) -> impl FnMut(&Snapshot<'_>) -> Result<()> + '_ {
    |s: &Snapshot<'_>| {
        path.push((s.x.to_vec(), s.y.map(<[f64]>::to_vec)));
        Ok(())
    }
}

#[test]
fn frozen_dual_reduces_to_mini_method() {
    let q = saddle();
    let (sx, sy) = (ConstraintSet::linf_ball(2, 0.4).unwrap(), ConstraintSet::unconstrained(3));
    let mut h = hp(1, 200);
    h.lambda = 0.0;
    h.c1 = h.c;
    h.smoothing.mu1 = h.smoothing.mu;
    let (x1, y1) = ([1.0, -1.0], [0.3, 0.1, -0.2]);

    let mut a = Path::new();
    let out_a = acc_zomda_run(&q, &sx, &sy, &h, &x1, &y1, 9, &mut record(&mut a)).unwrap();
    let frozen = FixedY { oracle: &q, y: Vector::from(&y1[..]) };
    let mut b = Path::new();
    let out_b = acc_zom_run(&frozen, &sx, &h, &x1, 9, &mut record(&mut b)).unwrap();

    assert_eq!(out_a.x_last, out_b.x_last);
    assert!(a.iter().zip(&b).all(|(p, q)| p.0 == q.0));
    assert!(a.iter().all(|p| p.1.as_deref() == Some(&y1[..])));
}

/// White-box oracle whose `grad_y` is the two-point estimate along its own
/// copy of the `sphere-y` stream. The semi method queries all new-point
/// gradients and then all old-point ones, so every iteration draws `b` fresh
/// directions and replays them.
struct ReplayedY<'a> {
    inner: &'a QuadraticSaddle,
    mu2: f64,
    b: usize,
    state: Mutex<(RngStream, usize, Vec<Vector>)>,
}

impl MinimaxOracle for ReplayedY<'_> {
    fn dim_x(&self) -> usize {
        self.inner.dim_x()
    }
    fn dim_y(&self) -> usize {
        self.inner.dim_y()
    }
    fn population_size(&self) -> usize {
        self.inner.population_size()
    }
    fn value(&self, x: &[f64], y: &[f64], s: usize) -> f64 {
        self.inner.value(x, y, s)
    }
    fn has_gradients(&self) -> bool {
        true
    }
    fn grad_y(&self, x: &[f64], y: &[f64], s: usize) -> Option<Vector> {
        let mut st = self.state.lock().unwrap();
        let (rng, calls, kept) = &mut *st;
        let b = self.b;
        let u = if *calls < b {
            sample_unit_sphere(self.dim_y(), rng)
        } else {
            let r = (*calls - b) % (2 * b);
            if r == 0 {
                kept.clear();
            }
            if r < b {
                let u = sample_unit_sphere(self.dim_y(), rng);
                kept.push(u.clone());
                u
            } else {
                kept[r - b].clone()
            }
        };
        *calls += 1;
        let yp: Vec<f64> = y.iter().zip(u.iter()).map(|(a, d)| a + self.mu2 * d).collect();
        let diff = self.inner.value(x, &yp, s) - self.inner.value(x, y, s);
        Some(u.scaled(self.dim_y() as f64 / self.mu2 * diff))
    }
}

#[test]
fn semi_method_with_estimated_gradients_matches_zeroth_order() {
    let q = saddle();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::l2_ball(3, 0.5).unwrap());
    let h = hp(3, 100);
    let (x1, y1) = ([1.0, 0.5], [0.0; 3]);
    let seed = 21;
    let mut a = Path::new();
    let out_a = acc_zomda_run(&q, &sx, &sy, &h, &x1, &y1, seed, &mut record(&mut a)).unwrap();
    let double = ReplayedY {
        inner: &q,
        mu2: h.smoothing.mu2,
        b: h.b,
        state: Mutex::new((RngStream::new(seed, SPHERE_Y), 0, Vec::new())),
    };
    let mut b = Path::new();
    let out_b = acc_semi_zomda_run(&double, &sx, &sy, &h, &x1, &y1, seed, &mut record(&mut b)).unwrap();
    assert_eq!(a, b);
    assert_eq!(out_a.x_last, out_b.x_last);
    assert_eq!(out_a.y_last, out_b.y_last);
}

#[test]
fn full_momentum_is_plain_stochastic_gda() {
    let q = saddle();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::unconstrained(3));
    let mut h = hp(2, 50);
    h.c1 = 1e12;
    h.c2 = 1e12;
    let (x1, y1) = ([0.7, -0.2], [0.1, 0.0, 0.4]);
    let mut alphas = Vec::new();
    let out = acc_mda_run(&q, &sx, &sy, &h, &x1, &y1, 3, &mut |s: &Snapshot<'_>| {
        alphas.push((s.alpha, s.beta));
        Ok(())
    })
    .unwrap();
    assert!(alphas.iter().all(|&ab| ab == (1.0, 1.0)));

    // Reference: gradients at the current point from the previous draw.
    let n = q.population_size();
    let mut batches = RngStream::new(3, MINIBATCH);
    let mut draw = || (0..h.b).map(|_| batches.index(n)).collect::<Vec<_>>();
    let mean = |f: &dyn Fn(usize) -> Vector, batch: &[usize], d: usize| {
        let mut acc = Vector::zeros(d);
        for &i in batch {
            acc.axpy(1.0, &f(i));
        }
        acc.scaled(1.0 / batch.len() as f64)
    };
    let (mut x, mut y) = (Vector::from(&x1[..]), Vector::from(&y1[..]));
    let batch = draw();
    let mut v = mean(&|i| q.grad_x(&x, &y, i).unwrap(), &batch, 2);
    let mut w = mean(&|i| q.grad_y(&x, &y, i).unwrap(), &batch, 3);
    for t in 1..=h.t {
        let eta = eta_schedule(t, h.k, h.m);
        let s = h.gamma * eta;
        let xn: Vector = x.iter().zip(v.iter()).map(|(a, g)| a - s * g).collect();
        let yn: Vector = y.iter().zip(w.iter()).map(|(a, g)| a + eta * ((a + h.lambda * g) - a)).collect();
        let batch = draw();
        v = mean(&|i| q.grad_x(&xn, &yn, i).unwrap(), &batch, 2);
        w = mean(&|i| q.grad_y(&xn, &yn, i).unwrap(), &batch, 3);
        x = xn;
        y = yn;
    }
    assert_eq!(out.x_last, x);
    assert_eq!(out.y_last.unwrap(), y);
}

#[test]
fn full_momentum_zeroth_order_is_vanilla_sgd() {
    let q = quadratic_mini(3, 2).unwrap();
    let set = ConstraintSet::unconstrained(3);
    let mut h = hp(1, 60);
    h.c = 1e12;
    let x1 = [1.0, 2.0, -1.0];
    let out = acc_zom_run(&q, &set, &h, &x1, 8, &mut NullSink).unwrap();

    let n = q.population_size();
    let mu = h.smoothing.mu;
    let mut batches = RngStream::new(8, MINIBATCH);
    let mut sphere = RngStream::new(8, SPHERE_X);
    let mut est = |x: &[f64]| {
        let i = batches.index(n);
        let u = sample_unit_sphere(3, &mut sphere);
        let xp: Vec<f64> = x.iter().zip(u.iter()).map(|(a, d)| a + mu * d).collect();
        u.scaled(3.0 / mu * (q.value(&xp, i) - q.value(x, i)))
    };
    let mut x = Vector::from(&x1[..]);
    let mut g = est(&x);
    for t in 1..=h.t {
        let s = h.gamma * eta_schedule(t, h.k, h.m);
        let xn: Vector = x.iter().zip(g.iter()).map(|(a, d)| a - s * d).collect();
        g = est(&xn);
        x = xn;
    }
    assert_eq!(out.x_last, x);
}

#[test]
fn query_counts() {
    let q = saddle();
    let mini = quadratic_mini(2, 1).unwrap();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::unconstrained(3));
    let (x1, y1) = ([0.5, 0.5], [0.0; 3]);
    for (b, t) in [(1usize, 1usize), (2, 7), (5, 30)] {
        let h = hp(b, t);
        let (b, t) = (b as u64, t as u64);
        let c = acc_semi_zomda_run(&q, &sx, &sy, &h, &x1, &y1, 1, &mut NullSink).unwrap().counter;
        assert_eq!((c.function_queries, c.gradient_queries), (2 * b + 4 * b * t, b + 2 * b * t));
        let c = acc_mda_run(&q, &sx, &sy, &h, &x1, &y1, 1, &mut NullSink).unwrap().counter;
        assert_eq!((c.function_queries, c.gradient_queries), (0, 2 * b + 4 * b * t));
        let c = zo_sgd_run(&mini, &sx, &h, &x1, 1, &mut NullSink).unwrap().counter;
        assert_eq!((c.function_queries, c.gradient_queries), (2 * b * t, 0));
        let c = zo_sgda_run(&q, &sx, &sy, &h, &x1, &y1, 1, &mut NullSink).unwrap().counter;
        assert_eq!((c.function_queries, c.gradient_queries), (4 * b * t, 0));
        let c = sgda_run(&q, &sx, &sy, &h, &x1, &y1, 1, &mut NullSink).unwrap().counter;
        assert_eq!((c.function_queries, c.gradient_queries), (0, 2 * b * t));
    }
}

#[test]
fn counters_in_snapshots_are_end_of_iteration_totals() {
    let mini = quadratic_mini(2, 1).unwrap();
    let set = ConstraintSet::unconstrained(2);
    let mut seen = Vec::new();
    acc_zom_run(&mini, &set, &hp(1, 5), &[0.0, 0.0], 1, &mut |s: &Snapshot<'_>| {
        seen.push((s.t, s.counter.function_queries));
        Ok(())
    })
    .unwrap();
    assert_eq!(seen, vec![(1, 6), (2, 10), (3, 14), (4, 18), (5, 22)]);
}

#[test]
fn iterates_stay_feasible() {
    let q = saddle();
    let sx = ConstraintSet::linf_ball(2, 0.3).unwrap();
    let sy = ConstraintSet::l2_ball(3, 0.2).unwrap();
    let h = hp(2, 200);
    type Run = fn(&QuadraticSaddle, &ConstraintSet, &ConstraintSet, &HyperParams, &[f64], &[f64], u64, &mut dyn zomo::optimizers::TraceSink) -> Result<zomo::optimizers::RunOutput>;
    let runs: [Run; 5] = [
        |o, a, b, h, x, y, s, k| acc_zomda_run(o, a, b, h, x, y, s, k),
        |o, a, b, h, x, y, s, k| acc_semi_zomda_run(o, a, b, h, x, y, s, k),
        |o, a, b, h, x, y, s, k| acc_mda_run(o, a, b, h, x, y, s, k),
        |o, a, b, h, x, y, s, k| zo_sgda_run(o, a, b, h, x, y, s, k),
        |o, a, b, h, x, y, s, k| sgda_run(o, a, b, h, x, y, s, k),
    ];
    for run in runs {
        let mut ok = true;
        let out = run(&q, &sx, &sy, &h, &[5.0, -5.0], &[3.0, 3.0, 3.0], 4, &mut |s: &Snapshot<'_>| {
            ok &= feasible(&sx, s.x) && feasible(&sy, s.y.unwrap());
            Ok(())
        })
        .unwrap();
        assert!(ok);
        assert!(feasible(&sx, &out.x_last) && feasible(&sy, out.y_last.as_ref().unwrap()));
    }
}

#[test]
fn same_seed_same_run_other_seed_differs() {
    let q = saddle();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::unconstrained(3));
    let h = hp(2, 50);
    let go = |seed| acc_zomda_run(&q, &sx, &sy, &h, &[1.0, 1.0], &[0.0; 3], seed, &mut NullSink).unwrap();
    assert_eq!(go(5), go(5));
    assert_ne!(go(5).x_last, go(6).x_last);
}

#[test]
fn output_iterate_is_one_of_the_visited_points() {
    let mini = quadratic_mini(2, 3).unwrap();
    let set = ConstraintSet::unconstrained(2);
    let mut xs = Vec::new();
    let out = acc_zom_run(&mini, &set, &hp(1, 40), &[1.0, 1.0], 2, &mut |s: &Snapshot<'_>| {
        xs.push(s.x.to_vec());
        Ok(())
    })
    .unwrap();
    assert!((1..=40).contains(&out.zeta));
    assert_eq!(xs[out.zeta - 1], out.x_out.as_slice());
}

#[test]
fn averaged_progress_on_quadratic() {
    // Late iterates are closer to stationarity than early ones on average.
    let mini = quadratic_mini(3, 6).unwrap();
    let set = ConstraintSet::unconstrained(3);
    let mut h = hp(1, 2000);
    h.gamma = 0.1;
    let mut early = 0.0;
    let mut late = 0.0;
    for seed in 0..5 {
        let mut norms = Vec::new();
        acc_zom_run(&mini, &set, &h, &[2.0, -2.0, 2.0], seed, &mut |s: &Snapshot<'_>| {
            norms.push(mini.true_grad(s.x).unwrap().norm());
            Ok(())
        })
        .unwrap();
        early += mean(&norms[..100]);
        late += mean(&norms[1900..]);
    }
    assert!(late < early / 5.0, "early {early}, late {late}");
}

#[test]
fn bad_inputs_are_rejected() {
    let q = saddle();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::unconstrained(3));
    let mut h = hp(1, 10);
    assert!(acc_zomda_run(&q, &sx, &sy, &h, &[1.0], &[0.0; 3], 1, &mut NullSink).is_err());
    assert!(acc_zomda_run(&q, &sy, &sx, &h, &[1.0; 3], &[0.0; 2], 1, &mut NullSink).is_err());
    h.gamma = -1.0;
    assert!(acc_mda_run(&q, &sx, &sy, &h, &[1.0; 2], &[0.0; 3], 1, &mut NullSink).is_err());
    // A black-box oracle cannot drive the gradient-based methods.
    let h = hp(1, 10);
    let black = NoGradients(&q);
    let err = acc_mda_run(&black, &sx, &sy, &h, &[1.0; 2], &[0.0; 3], 1, &mut NullSink).unwrap_err();
    assert!(matches!(err, zomo::Error::Config(_)));
}

struct NoGradients<'a>(&'a QuadraticSaddle);

impl MinimaxOracle for NoGradients<'_> {
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
}

#[test]
fn nan_values_surface_as_evaluation_errors() {
    struct Poisoned;
    impl MiniOracle for Poisoned {
        fn dim(&self) -> usize {
            1
        }
        fn population_size(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64], _: usize) -> f64 {
            if x[0] < 0.0 {
                f64::NAN
            } else {
                x[0] * x[0]
            }
        }
    }
    let set = ConstraintSet::unconstrained(1);
    let mut h = hp(1, 100);
    h.gamma = 50.0;
    let err = acc_zom_run(&Poisoned, &set, &h, &[1.0], 1, &mut NullSink).unwrap_err();
    assert!(err.is_evaluation());
}

fn first_last_tenth(values: &[f64]) -> (f64, f64) {
    let k = values.len() / 10;
    (mean(&values[..k]), mean(&values[values.len() - k..]))
}

#[test]
fn metric_trend_with_compliant_hyperparameters() {
    use zomo::cli::{Experiment, RunConfig};
    use zomo::optimizers::Algorithm;
    let mini = Experiment::new(
        RunConfig::parse(
            "problem.kind = quadratic_mini\nproblem.dim = 3\nalgorithm = acc_zom\nhyper.gamma = 0.1\nhyper.m = 27\nhyper.b = 1\nhyper.T = 2000\nrun.metric_every = 10",
        )
        .unwrap(),
    )
    .unwrap();
    assert!(mini.theory_report(Algorithm::AccZom).all_pass());
    let q = regression_saddle();
    let consts = saddle_constants(&q);
    let saddle = Experiment::new(RunConfig::parse(&saddle_config_text("algorithm = acc_mda\nrun.metric_every = 10")).unwrap()).unwrap();
    let mut cases = vec![(mini.run(Algorithm::AccZom, 1, false).unwrap(), "acc_zom")];
    for (algo, zeroth, b) in [(Algorithm::AccMda, false, 1), (Algorithm::AccZomda, true, 6)] {
        let h = compliant_saddle_hp(&q, 2.0, b, 2000, zeroth);
        assert!(zomo::optimizers::check_theory_conditions(&h, &consts, algo).all_pass());
        cases.push((saddle.run_with(algo, 1, &h, false).unwrap(), algo.name()));
    }
    for (run, name) in cases {
        let metrics: Vec<f64> = run.rows.iter().filter_map(|r| r.metric).collect();
        let (first, last) = first_last_tenth(&metrics);
        assert!(last < first, "{name}: first {first}, last {last}");
    }
}

#[test]
fn zo_sgd_smoke() {
    let q = quadratic_mini(2, 0).unwrap();
    let set = ConstraintSet::unconstrained(2);
    let mut h = hp(4, 3000);
    h.gamma = 0.05;
    h.smoothing.mu = 1e-4;
    let out = zo_sgd_run(&q, &set, &h, &[2.0, -2.0], 1, &mut NullSink).unwrap();
    assert!(q.true_grad(&out.x_last).unwrap().norm() <= 1e-1);
}

#[test]
fn sgda_smoke() {
    let opts = SaddleOptions { noise: 0.0, ..Default::default() };
    let q = quadratic_saddle(2, 3, 4, opts).unwrap();
    let (sx, sy) = (ConstraintSet::unconstrained(2), ConstraintSet::unconstrained(3));
    let mut h = hp(1, 20_000);
    h.gamma = 0.05;
    h.lambda = 0.5;
    let out = sgda_run(&q, &sx, &sy, &h, &[1.0, -1.0], &[0.5; 3], 1, &mut NullSink).unwrap();
    let (xs, ys) = q.saddle_point();
    let dist = (out.x_last.distance(&xs).powi(2) + out.y_last.unwrap().distance(&ys).powi(2)).sqrt();
    assert!(dist <= 1e-2, "distance to saddle {dist}");
}

#[test]
fn poisoning_scenarios_run_end_to_end() {
    use zomo::cli::{Experiment, RunConfig};
    let text = "problem.kind = poisoning\nproblem.n = 200\nproblem.d = 20\nalgorithm = acc_semi_zomda, acc_mda, zo_sgd\nhyper.T = 2000\nrun.seeds = 1, 2, 3\nrun.metric_every = 100";
    let ex = Experiment::new(RunConfig::parse(text).unwrap()).unwrap();
    let runs = ex.run_all().unwrap();
    assert!(runs.iter().all(|r| r.rows.len() == 2000 && r.final_metric().is_some()));
    let final_mean = |name: &str| {
        mean(&runs.iter().filter(|r| r.algorithm.name() == name).map(|r| r.final_metric().unwrap()).collect::<Vec<_>>())
    };
    // White-box momentum ends below the zeroth-order baseline at equal iterations.
    assert!(final_mean("acc_mda") <= final_mean("zo_sgd"));
}
