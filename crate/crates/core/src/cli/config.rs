//! Run configuration: a flat `key = value` text format.
//!
//! ```text
//! # comment
//! problem.kind = poisoning
//! problem.n = 200
//! algorithm = acc_zomda, zo_sgd
//! run.seeds = 1, 2, 3
//! ```
//!
//! Keys are dotted, values are numbers, words or comma-separated lists, and
//! everything after `#` is ignored. Unknown and repeated keys are errors.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::estimators::SmoothingParams;
use crate::metrics::MetricConfig;
use crate::optimizers::{Algorithm, HyperParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProblemKind {
    QuadraticMini,
    QuadraticSaddle,
    Poisoning,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::QuadraticMini => "quadratic_mini",
            ProblemKind::QuadraticSaddle => "quadratic_saddle",
            ProblemKind::Poisoning => "poisoning",
        }
    }

    pub fn is_minimax(self) -> bool {
        self != ProblemKind::QuadraticMini
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quadratic_mini" => Ok(ProblemKind::QuadraticMini),
            "quadratic_saddle" => Ok(ProblemKind::QuadraticSaddle),
            "poisoning" => Ok(ProblemKind::Poisoning),
            _ => Err(Error::config(format!("unknown problem kind {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    None,
    Linf,
    L2,
}

impl ConstraintKind {
    fn name(self) -> &'static str {
        match self {
            ConstraintKind::None => "none",
            ConstraintKind::Linf => "linf",
            ConstraintKind::L2 => "l2",
        }
    }
}

impl FromStr for ConstraintKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(ConstraintKind::None),
            "linf" => Ok(ConstraintKind::Linf),
            "l2" => Ok(ConstraintKind::L2),
            _ => Err(Error::config(format!("unknown constraint kind {s:?} (none, linf, l2)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub kind: ProblemKind,
    /// Poisoning sample count.
    pub n: usize,
    /// Poisoning feature dimension.
    pub d: usize,
    /// Radius of the attacker's box.
    pub epsilon: f64,
    /// Squared radius of the defender's ball.
    pub lambda_reg: f64,
    pub corruption_rate: f64,
    /// Dimension of `quadratic_mini`.
    pub dim: usize,
    pub dim_x: usize,
    pub dim_y: usize,
    /// Seed for the problem instance (data, matrices), separate from run seeds.
    pub seed: u64,
    /// Noise amplitude of the quadratic problems.
    pub noise: f64,
    /// Scale of `quadratic_saddle`'s matrices and `τ`.
    pub scale: f64,
    pub constraint_x: ConstraintKind,
    pub radius_x: f64,
    pub constraint_y: ConstraintKind,
    pub radius_y: f64,
    /// Every coordinate of the starting point `x₁` (projected into `X`).
    pub init: f64,
}

impl ProblemConfig {
    fn defaults(kind: ProblemKind) -> Self {
        let poisoning = kind == ProblemKind::Poisoning;
        ProblemConfig {
            kind,
            n: 1000,
            d: 100,
            epsilon: 2.0,
            lambda_reg: 0.001,
            corruption_rate: 0.15,
            dim: 2,
            dim_x: 2,
            dim_y: 2,
            seed: 0,
            noise: 0.1,
            scale: 1.0,
            constraint_x: if poisoning { ConstraintKind::Linf } else { ConstraintKind::None },
            radius_x: 2.0,
            constraint_y: if poisoning { ConstraintKind::L2 } else { ConstraintKind::None },
            radius_y: 0.001f64.sqrt(),
            init: if poisoning { 0.0 } else { 1.0 },
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self.kind {
            ProblemKind::QuadraticMini => (self.dim, 0),
            ProblemKind::QuadraticSaddle => (self.dim_x, self.dim_y),
            ProblemKind::Poisoning => (self.d, self.d),
        }
    }

    pub fn set_x(&self) -> Result<ConstraintSet> {
        build_set(self.dims().0, self.constraint_x, self.radius_x)
    }

    pub fn set_y(&self) -> Result<ConstraintSet> {
        build_set(self.dims().1, self.constraint_y, self.radius_y)
    }
}

fn build_set(dim: usize, kind: ConstraintKind, radius: f64) -> Result<ConstraintSet> {
    let set = match kind {
        ConstraintKind::None => Ok(ConstraintSet::unconstrained(dim)),
        ConstraintKind::Linf => ConstraintSet::linf_ball(dim, radius),
        ConstraintKind::L2 => ConstraintSet::l2_ball(dim, radius),
    };
    set.map_err(|e| Error::config(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    pub algorithms: Vec<Algorithm>,
    pub hyper: HyperParams,
    pub seeds: Vec<u64>,
    pub metric_every: usize,
    pub output_dir: PathBuf,
    pub record_timing: bool,
    pub metric: MetricConfig,
}

const KEYS: &[&str] = &[
    "problem.kind",
    "problem.n",
    "problem.d",
    "problem.epsilon",
    "problem.lambda_reg",
    "problem.corruption_rate",
    "problem.dim",
    "problem.dim_x",
    "problem.dim_y",
    "problem.seed",
    "problem.noise",
    "problem.scale",
    "problem.constraint_x",
    "problem.radius_x",
    "problem.constraint_y",
    "problem.radius_y",
    "problem.init",
    "algorithm",
    "hyper.gamma",
    "hyper.lambda",
    "hyper.k",
    "hyper.m",
    "hyper.c",
    "hyper.c1",
    "hyper.c2",
    "hyper.b",
    "hyper.T",
    "hyper.mu",
    "hyper.mu1",
    "hyper.mu2",
    "run.seeds",
    "run.metric_every",
    "run.output_dir",
    "run.record_timing",
    "metric.gap_gamma",
    "metric.gap_lambda",
    "metric.inner_tolerance",
    "metric.inner_budget",
];

/// Splits the text into a key map, rejecting malformed lines and unknown or
/// repeated keys.
fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected `key = value`", no + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::config(format!("line {}: unknown key {key:?}", no + 1)));
        }
        if value.is_empty() {
            return Err(Error::config(format!("line {}: empty value for {key}", no + 1)));
        }
        if map.insert(key.to_string(), value.to_string()).is_some() {
            return Err(Error::config(format!("line {}: repeated key {key}", no + 1)));
        }
    }
    Ok(map)
}

struct Values(BTreeMap<String, String>);

impl Values {
    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.0
            .get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| Error::config(format!("{key}: cannot parse {v:?}")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.0
            .get(key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        let item = item.trim();
                        item.parse::<T>()
                            .map_err(|_| Error::config(format!("{key}: cannot parse {item:?}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        RunConfig::parse(text)
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let v = Values(parse_pairs(text)?);
        let kind: ProblemKind = v
            .get("problem.kind")?
            .ok_or_else(|| Error::config("missing problem.kind"))?;
        let dp = ProblemConfig::defaults(kind);
        let epsilon = v.or("problem.epsilon", dp.epsilon)?;
        let lambda_reg = v.or("problem.lambda_reg", dp.lambda_reg)?;
        let poisoning = kind == ProblemKind::Poisoning;
        let problem = ProblemConfig {
            kind,
            n: v.or("problem.n", dp.n)?,
            d: v.or("problem.d", dp.d)?,
            epsilon,
            lambda_reg,
            corruption_rate: v.or("problem.corruption_rate", dp.corruption_rate)?,
            dim: v.or("problem.dim", dp.dim)?,
            dim_x: v.or("problem.dim_x", dp.dim_x)?,
            dim_y: v.or("problem.dim_y", dp.dim_y)?,
            seed: v.or("problem.seed", dp.seed)?,
            noise: v.or("problem.noise", dp.noise)?,
            scale: v.or("problem.scale", dp.scale)?,
            constraint_x: v.or("problem.constraint_x", dp.constraint_x)?,
            radius_x: v.or("problem.radius_x", if poisoning { epsilon } else { dp.radius_x })?,
            constraint_y: v.or("problem.constraint_y", dp.constraint_y)?,
            radius_y: v.or(
                "problem.radius_y",
                if poisoning { lambda_reg.sqrt() } else { dp.radius_y },
            )?,
            init: v.or("problem.init", dp.init)?,
        };
        let algorithms = v
            .list::<Algorithm>("algorithm")?
            .ok_or_else(|| Error::config("missing algorithm"))?;

        let (k, m) = (v.or("hyper.k", 1.0)?, v.or("hyper.m", 3.0)?);
        let t: usize = v.or("hyper.T", 1000)?;
        let (d1, d2) = problem.dims();
        let mu_default = SmoothingParams::theorem_defaults(d1.max(1), d2.max(1), m, t);
        let hyper = HyperParams {
            gamma: v.or("hyper.gamma", 0.2)?,
            lambda: v.or("hyper.lambda", 0.08)?,
            k,
            m,
            c: v.or("hyper.c", 3.0)?,
            c1: v.or("hyper.c1", 3.0)?,
            c2: v.or("hyper.c2", 3.0)?,
            b: v.or("hyper.b", 10)?,
            t,
            smoothing: SmoothingParams {
                mu: v.or("hyper.mu", mu_default.mu)?,
                mu1: v.or("hyper.mu1", mu_default.mu1)?,
                mu2: v.or("hyper.mu2", mu_default.mu2)?,
            },
        };
        let metric = MetricConfig {
            inner_tolerance: v.or("metric.inner_tolerance", 1e-8)?,
            inner_budget: v.or("metric.inner_budget", 100_000)?,
            gap_gamma: v.or("metric.gap_gamma", hyper.gamma)?,
            gap_lambda: v.or(
                "metric.gap_lambda",
                if hyper.lambda > 0.0 { hyper.lambda } else { 1.0 },
            )?,
        };
        let cfg = RunConfig {
            problem,
            algorithms,
            hyper,
            seeds: v.list("run.seeds")?.unwrap_or_else(|| vec![0]),
            metric_every: v.or("run.metric_every", 10)?,
            output_dir: v.or("run.output_dir", PathBuf::from("out"))?,
            record_timing: v.or("run.record_timing", false)?,
            metric,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let as_config = |e: Error| Error::config(e.to_string());
        self.hyper.validate().map_err(as_config)?;
        self.metric.validate().map_err(as_config)?;
        let p = &self.problem;
        let (d1, d2) = p.dims();
        if d1 == 0 || (p.kind.is_minimax() && d2 == 0) {
            return Err(Error::config("problem dimensions must be positive"));
        }
        if p.kind == ProblemKind::Poisoning && p.n < 2 {
            return Err(Error::config("problem.n must be at least 2"));
        }
        if !(p.init.is_finite() && p.noise >= 0.0 && p.scale > 0.0) {
            return Err(Error::config("problem.init must be finite, noise non-negative, scale positive"));
        }
        p.set_x()?;
        if p.kind.is_minimax() {
            p.set_y()?;
        }
        if self.algorithms.is_empty() || self.seeds.is_empty() {
            return Err(Error::config("need at least one algorithm and one seed"));
        }
        if self.metric_every == 0 {
            return Err(Error::config("run.metric_every must be at least 1"));
        }
        for &a in &self.algorithms {
            let ok = match a {
                Algorithm::AccZom => !p.kind.is_minimax(),
                Algorithm::ZoSgd => true,
                Algorithm::AccSemiZomda | Algorithm::AccMda | Algorithm::Sgda => p.kind.is_minimax(),
                Algorithm::AccZomda => p.kind.is_minimax(),
            };
            if !ok {
                return Err(Error::config(format!("{a} does not apply to {}", p.kind.name())));
            }
        }
        Ok(())
    }

    /// Every key with its resolved value, in the input format.
    pub fn resolved_text(&self) -> String {
        let p = &self.problem;
        let h = &self.hyper;
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("problem.kind", p.kind.name().into());
        put("problem.n", p.n.to_string());
        put("problem.d", p.d.to_string());
        put("problem.epsilon", p.epsilon.to_string());
        put("problem.lambda_reg", p.lambda_reg.to_string());
        put("problem.corruption_rate", p.corruption_rate.to_string());
        put("problem.dim", p.dim.to_string());
        put("problem.dim_x", p.dim_x.to_string());
        put("problem.dim_y", p.dim_y.to_string());
        put("problem.seed", p.seed.to_string());
        put("problem.noise", p.noise.to_string());
        put("problem.scale", p.scale.to_string());
        put("problem.constraint_x", p.constraint_x.name().into());
        put("problem.radius_x", p.radius_x.to_string());
        put("problem.constraint_y", p.constraint_y.name().into());
        put("problem.radius_y", p.radius_y.to_string());
        put("problem.init", p.init.to_string());
        put(
            "algorithm",
            self.algorithms.iter().map(|a| a.name()).collect::<Vec<_>>().join(", "),
        );
        put("hyper.gamma", h.gamma.to_string());
        put("hyper.lambda", h.lambda.to_string());
        put("hyper.k", h.k.to_string());
        put("hyper.m", h.m.to_string());
        put("hyper.c", h.c.to_string());
        put("hyper.c1", h.c1.to_string());
        put("hyper.c2", h.c2.to_string());
        put("hyper.b", h.b.to_string());
        put("hyper.T", h.t.to_string());
        put("hyper.mu", h.smoothing.mu.to_string());
        put("hyper.mu1", h.smoothing.mu1.to_string());
        put("hyper.mu2", h.smoothing.mu2.to_string());
        put(
            "run.seeds",
            self.seeds.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(", "),
        );
        put("run.metric_every", self.metric_every.to_string());
        put("run.output_dir", self.output_dir.display().to_string());
        put("run.record_timing", self.record_timing.to_string());
        put("metric.gap_gamma", self.metric.gap_gamma.to_string());
        put("metric.gap_lambda", self.metric.gap_lambda.to_string());
        put("metric.inner_tolerance", self.metric.inner_tolerance.to_string());
        put("metric.inner_budget", self.metric.inner_budget.to_string());
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisoning_defaults() {
        let cfg = RunConfig::parse("problem.kind = poisoning\nalgorithm = acc_zomda\n").unwrap();
        let h = &cfg.hyper;
        assert_eq!((h.gamma, h.lambda, h.k, h.m, h.c1, h.c2, h.b), (0.2, 0.08, 1.0, 3.0, 3.0, 3.0, 10));
        assert_eq!(cfg.problem.epsilon, 2.0);
        assert_eq!(cfg.problem.lambda_reg, 0.001);
        assert_eq!(cfg.problem.corruption_rate, 0.15);
        assert_eq!(cfg.problem.set_x().unwrap(), ConstraintSet::linf_ball(100, 2.0).unwrap());
        assert_eq!(cfg.problem.set_y().unwrap(), ConstraintSet::l2_ball(100, 0.001f64.sqrt()).unwrap());
    }

    #[test]
    fn comments_lists_and_strictness() {
        let text = "# header\nproblem.kind = quadratic_saddle  # trailing\n\nalgorithm = acc_mda, sgda\nrun.seeds = 4,5 , 6\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.algorithms, vec![Algorithm::AccMda, Algorithm::Sgda]);
        assert_eq!(cfg.seeds, vec![4, 5, 6]);
        for bad in [
            "problem.kind = poisoning\nalgorithm = acc_zomda\nhyper.gama = 1\n",
            "problem.kind = poisoning\nalgorithm = acc_zomda\nhyper.b = 1\nhyper.b = 2\n",
            "problem.kind = poisoning\nalgorithm = acc_zomda\nhyper.b = ten\n",
            "problem.kind = poisoning\nalgorithm acc_zomda\n",
            "problem.kind = poisoning\nalgorithm = acc_zom\n",
            "problem.kind = quadratic_mini\nalgorithm = acc_mda\n",
            "algorithm = acc_zom\n",
            "problem.kind = poisoning\nalgorithm = acc_zomda\nhyper.T = 0\n",
        ] {
            assert!(matches!(RunConfig::parse(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn resolved_text_parses_back() {
        let cfg = RunConfig::parse("problem.kind = quadratic_mini\nalgorithm = acc_zom, zo_sgd\nhyper.T = 50\n").unwrap();
        let again = RunConfig::parse(&cfg.resolved_text()).unwrap();
        assert_eq!(cfg, again);
    }
}
