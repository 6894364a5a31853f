//! Wires a [`RunConfig`] into problems, optimizers and metrics, and writes
//! the run artifacts.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{ProblemConfig, ProblemKind, RunConfig};
use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::metrics::{estimate_l_f, metric_g, metric_h, stationary_gap};
use crate::optimizers::{
    acc_mda_run, acc_semi_zomda_run, acc_zom_run, acc_zomda_run, check_theory_conditions, sgda_run,
    zo_sgd_run, zo_sgda_run, Algorithm, HyperParams, IterateRecord, Recorder, RunOutput, Snapshot,
    TheoryConstants, TheoryReport,
};
use crate::problems::{
    gen_poisoning_data, quadratic_mini, quadratic_saddle, MiniOracle, MinimaxOracle, PoisoningProblem,
    QuadraticMini, QuadraticSaddle, SaddleOptions,
};
use crate::rng::{RngStream, DATA_GEN};
use crate::trace::{format_real, write_trace, TraceRow};
use crate::vector::Vector;

/// Probe pairs used to estimate `L_f` for the poisoning problem.
pub const L_F_PROBES: usize = 1000;

pub enum BuiltProblem {
    Mini(QuadraticMini),
    Saddle(QuadraticSaddle),
    Poisoning(PoisoningProblem),
}

impl BuiltProblem {
    pub fn build(p: &ProblemConfig) -> Result<Self> {
        Ok(match p.kind {
            ProblemKind::QuadraticMini => BuiltProblem::Mini(quadratic_mini(p.dim, p.seed)?),
            ProblemKind::QuadraticSaddle => {
                let opts = SaddleOptions {
                    scale: p.scale,
                    noise: p.noise,
                    ..Default::default()
                };
                BuiltProblem::Saddle(quadratic_saddle(p.dim_x, p.dim_y, p.seed, opts)?)
            }
            ProblemKind::Poisoning => {
                let mut rng = RngStream::new(p.seed, DATA_GEN);
                let data = gen_poisoning_data(p.n, p.d, p.corruption_rate, &mut rng)?;
                let problem = PoisoningProblem::new(data)?;
                let mut probe = RngStream::new(p.seed, "lf-probe");
                let l_f = estimate_l_f(&problem, &p.set_x()?, &p.set_y()?, L_F_PROBES, &mut probe)?;
                BuiltProblem::Poisoning(problem.with_l_f_estimate(l_f))
            }
        })
    }

    fn minimax(&self) -> Option<&dyn MinimaxOracle> {
        match self {
            BuiltProblem::Mini(_) => None,
            BuiltProblem::Saddle(q) => Some(q),
            BuiltProblem::Poisoning(p) => Some(p),
        }
    }

    pub fn theory_constants(&self) -> TheoryConstants {
        match self {
            BuiltProblem::Mini(q) => {
                let c = q.constants();
                TheoryConstants {
                    l: c.l,
                    d1: q.dim(),
                    d2: q.dim(),
                    ..Default::default()
                }
            }
            _ => {
                let o = self.minimax().expect("minimax");
                let c = o.constants();
                TheoryConstants {
                    l: c.l,
                    l_f: c.l_f,
                    tau: c.tau,
                    d1: o.dim_x(),
                    d2: o.dim_y(),
                    l_f_estimated: c.l_f_estimated,
                }
            }
        }
    }
}

/// Trace and result of one (algorithm, seed) run.
#[derive(Clone, Debug)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub rows: Vec<TraceRow>,
    pub iterates: Vec<IterateRecord>,
    pub output: RunOutput,
}

impl RunRecord {
    pub fn final_metric(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.metric)
    }

    pub fn best_metric(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.metric).reduce(f64::min)
    }

    pub fn file_name(&self) -> String {
        format!("{}_seed{}.csv", self.algorithm, self.seed)
    }
}

pub struct Experiment {
    pub config: RunConfig,
    pub problem: BuiltProblem,
    pub set_x: ConstraintSet,
    pub set_y: ConstraintSet,
}

impl Experiment {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let problem = BuiltProblem::build(&config.problem)?;
        let set_x = config.problem.set_x()?;
        let set_y = if config.problem.kind.is_minimax() {
            config.problem.set_y()?
        } else {
            ConstraintSet::unconstrained(1)
        };
        Ok(Experiment {
            config,
            problem,
            set_x,
            set_y,
        })
    }

    pub fn start_x(&self) -> Vector {
        let x = Vector::filled(self.set_x.dim(), self.config.problem.init);
        self.set_x.project_unchecked(&x)
    }

    /// `y*(x₁)` when known, otherwise the projection of the origin.
    pub fn start_y(&self, x1: &[f64]) -> Vector {
        let o = self.problem.minimax().expect("minimax problem");
        o.y_star(x1, &self.set_y)
            .unwrap_or_else(|| self.set_y.project_unchecked(&vec![0.0; self.set_y.dim()]))
    }

    pub fn theory_report(&self, algorithm: Algorithm) -> TheoryReport {
        check_theory_conditions(&self.config.hyper, &self.problem.theory_constants(), algorithm)
    }

    /// Runs one algorithm with one seed using the configured hyperparameters.
    pub fn run(&self, algorithm: Algorithm, seed: u64, keep_iterates: bool) -> Result<RunRecord> {
        self.run_with(algorithm, seed, &self.config.hyper, keep_iterates)
    }

    pub fn run_with(
        &self,
        algorithm: Algorithm,
        seed: u64,
        hp: &HyperParams,
        keep_iterates: bool,
    ) -> Result<RunRecord> {
        let cfg = &self.config;
        let (sx, sy) = (&self.set_x, &self.set_y);
        let x1 = self.start_x();
        let every = cfg.metric_every;
        let (output, recorder) = match &self.problem {
            BuiltProblem::Mini(q) => {
                let gamma = hp.gamma;
                let mut rec = Recorder::new(
                    hp.t,
                    every,
                    |s: &Snapshot<'_>| q.full_value(s.x),
                    move |s: &Snapshot<'_>| {
                        let g = q.true_grad(s.x).expect("quadratic gradient");
                        Ok(metric_g(sx, s.x, s.v, &g, gamma))
                    },
                )
                .keep_iterates(keep_iterates)
                .record_timing(cfg.record_timing);
                let out = match algorithm {
                    Algorithm::AccZom => acc_zom_run(q, sx, hp, &x1, seed, &mut rec)?,
                    Algorithm::ZoSgd => zo_sgd_run(q, sx, hp, &x1, seed, &mut rec)?,
                    a => return Err(Error::config(format!("{a} does not apply to quadratic_mini"))),
                };
                (out, rec)
            }
            BuiltProblem::Saddle(q) => {
                let (gamma, l_f, mc) = (hp.gamma, q.l_f(), &cfg.metric);
                let rec = Recorder::new(
                    hp.t,
                    every,
                    |s: &Snapshot<'_>| q.full_value(s.x, s.y.expect("y")),
                    move |s: &Snapshot<'_>| {
                        Ok(metric_h(q, sx, sy, s.x, s.y.expect("y"), s.v, gamma, l_f, mc)?.value)
                    },
                );
                self.run_minimax(q, algorithm, seed, hp, &x1, rec, keep_iterates)?
            }
            BuiltProblem::Poisoning(p) => {
                let (gg, gl) = (cfg.metric.gap_gamma, cfg.metric.gap_lambda);
                let rec = Recorder::new(
                    hp.t,
                    every,
                    |s: &Snapshot<'_>| p.full_value(s.x, s.y.expect("y")),
                    move |s: &Snapshot<'_>| stationary_gap(p, sx, sy, s.x, s.y.expect("y"), gg, gl),
                );
                self.run_minimax(p, algorithm, seed, hp, &x1, rec, keep_iterates)?
            }
        };
        Ok(RunRecord {
            algorithm,
            seed,
            rows: recorder.rows,
            iterates: recorder.iterates,
            output,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn run_minimax<'a, O: MinimaxOracle>(
        &self,
        oracle: &O,
        algorithm: Algorithm,
        seed: u64,
        hp: &HyperParams,
        x1: &[f64],
        rec: Recorder<'a>,
        keep_iterates: bool,
    ) -> Result<(RunOutput, Recorder<'a>)> {
        let mut rec = rec
            .keep_iterates(keep_iterates)
            .record_timing(self.config.record_timing);
        let (sx, sy) = (&self.set_x, &self.set_y);
        let y1 = self.start_y(x1);
        let out = match algorithm {
            Algorithm::AccZomda => acc_zomda_run(oracle, sx, sy, hp, x1, &y1, seed, &mut rec)?,
            Algorithm::AccSemiZomda => acc_semi_zomda_run(oracle, sx, sy, hp, x1, &y1, seed, &mut rec)?,
            Algorithm::AccMda => acc_mda_run(oracle, sx, sy, hp, x1, &y1, seed, &mut rec)?,
            Algorithm::ZoSgd => zo_sgda_run(oracle, sx, sy, hp, x1, &y1, seed, &mut rec)?,
            Algorithm::Sgda => sgda_run(oracle, sx, sy, hp, x1, &y1, seed, &mut rec)?,
            Algorithm::AccZom => return Err(Error::config("acc_zom does not apply to minimax problems")),
        };
        Ok((out, rec))
    }

    /// Every configured (algorithm, seed) pair, run in parallel. Results keep
    /// the configured order.
    pub fn run_all(&self) -> Result<Vec<RunRecord>> {
        let jobs: Vec<(Algorithm, u64)> = self
            .config
            .algorithms
            .iter()
            .flat_map(|&a| self.config.seeds.iter().map(move |&s| (a, s)))
            .collect();
        jobs.par_iter()
            .map(|&(a, s)| {
                log::info!("running {a} seed {s}");
                self.run(a, s, false)
            })
            .collect()
    }

    /// Writes traces, `summary.csv`, `theory_check.txt` and the resolved config.
    pub fn write_outputs(&self, records: &[RunRecord], dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for r in records {
            write_trace(fs::File::create(dir.join(r.file_name()))?, &r.rows)?;
        }
        write_summary(records, &dir.join("summary.csv"))?;
        let mut theory = String::new();
        for &a in &self.config.algorithms {
            theory.push_str(&self.theory_report(a).to_string());
            theory.push('\n');
        }
        fs::write(dir.join("theory_check.txt"), theory)?;
        fs::write(dir.join("config.resolved.txt"), self.config.resolved_text())?;
        Ok(())
    }
}

fn write_summary(records: &[RunRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "algorithm",
        "seed",
        "final_metric",
        "best_metric",
        "function_queries",
        "gradient_queries",
        "cancellation_warnings",
    ])?;
    for r in records {
        let c = r.output.counter;
        w.write_record([
            r.algorithm.name().to_string(),
            r.seed.to_string(),
            r.final_metric().map(format_real).unwrap_or_default(),
            r.best_metric().map(format_real).unwrap_or_default(),
            c.function_queries.to_string(),
            c.gradient_queries.to_string(),
            c.cancellation_warnings.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Environment variable that overrides `run.output_dir`.
pub const OUTPUT_DIR_ENV: &str = "ZOMO_OUTPUT_DIR";

/// Reads a config file and applies the output-directory override.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
        cfg.output_dir = PathBuf::from(dir);
    }
    Ok(cfg)
}

/// Runs every configured (algorithm, seed) pair and writes all artifacts.
pub fn run_experiment(config_path: &Path) -> Result<Vec<RunRecord>> {
    let cfg = load_config(config_path)?;
    let dir = cfg.output_dir.clone();
    let exp = Experiment::new(cfg)?;
    let records = exp.run_all()?;
    exp.write_outputs(&records, &dir)?;
    Ok(records)
}

/// Theory reports for every configured algorithm.
pub fn check_config(config_path: &Path) -> Result<String> {
    let exp = Experiment::new(load_config(config_path)?)?;
    Ok(exp
        .config
        .algorithms
        .iter()
        .map(|&a| exp.theory_report(a).to_string())
        .collect::<Vec<_>>()
        .join("\n"))
}

/// Writes the poisoning dataset to `<output_dir>/dataset.csv`.
pub fn gen_data(config_path: &Path) -> Result<PathBuf> {
    let cfg = load_config(config_path)?;
    let p = &cfg.problem;
    if p.kind != ProblemKind::Poisoning {
        return Err(Error::config("gen-data applies to the poisoning problem only"));
    }
    let mut rng = RngStream::new(p.seed, DATA_GEN);
    let data = gen_poisoning_data(p.n, p.d, p.corruption_rate, &mut rng)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("dataset.csv");
    data.write_csv(&path)?;
    Ok(path)
}
