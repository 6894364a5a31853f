//! Synthetic poisoning attack on logistic regression.
//!
//! The attacker perturbs the corrupted samples by a shared vector `x`; the
//! defender fits logistic-regression weights `y`. With `h(x, y; D)` the mean
//! cross-entropy of `σ((x + a)ᵀy)` over `D`, the attack loss is
//! `h(x, y; D_p) + h(0, y; D_t)`, maximized over `x` and minimized over `y`.
//! [`PoisoningProblem`] exposes its negation so that the minimax solvers
//! (min over `x`, max over `y`) apply unchanged.

use std::path::Path;

use super::{MinimaxOracle, ProblemConstants};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::trace::format_real;
use crate::vector::{dot, Vector};

/// Logistic outputs are clamped to `[c, 1 − c]` before the logarithm.
pub const LOGISTIC_CLAMP: f64 = 1e-12;

/// Standard deviation of the label noise `ν ~ N(0, 10⁻³)` (variance 10⁻³).
const LABEL_NOISE_STD: f64 = 0.031_622_776_601_683_79;

#[derive(Clone, Debug, PartialEq)]
pub struct PoisonDataset {
    features: Vec<Vector>,
    labels: Vec<bool>,
    corrupted: Vec<bool>,
    theta_truth: Vector,
}

impl PoisonDataset {
    pub fn new(features: Vec<Vector>, labels: Vec<bool>, corrupted: Vec<bool>) -> Result<Self> {
        let n = features.len();
        if n == 0 || labels.len() != n || corrupted.len() != n {
            return Err(Error::contract("dataset: features, labels and mask must have equal non-zero length"));
        }
        let d = features[0].dim();
        if d == 0 || features.iter().any(|a| a.dim() != d || !a.is_finite()) {
            return Err(Error::contract("dataset: features must share a positive dimension and be finite"));
        }
        Ok(PoisonDataset {
            features,
            labels,
            corrupted,
            theta_truth: Vector::filled(d, 1.0),
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.theta_truth.dim()
    }

    pub fn features(&self) -> &[Vector] {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn corrupted_mask(&self) -> &[bool] {
        &self.corrupted
    }

    pub fn theta_truth(&self) -> &Vector {
        &self.theta_truth
    }

    pub fn corrupted_count(&self) -> usize {
        self.corrupted.iter().filter(|c| **c).count()
    }

    /// Cross-entropy of one sample; `x` is applied only to corrupted samples.
    fn sample_loss(&self, x: &[f64], y: &[f64], i: usize) -> f64 {
        let z = self.margin(x, y, i);
        let g = sigmoid(z).clamp(LOGISTIC_CLAMP, 1.0 - LOGISTIC_CLAMP);
        if self.labels[i] {
            -g.ln()
        } else {
            -(1.0 - g).ln()
        }
    }

    /// `d loss / d z`, zero where the clamp is active.
    fn sample_loss_slope(&self, x: &[f64], y: &[f64], i: usize) -> f64 {
        let g = sigmoid(self.margin(x, y, i));
        if !(LOGISTIC_CLAMP..=1.0 - LOGISTIC_CLAMP).contains(&g) {
            return 0.0;
        }
        g - if self.labels[i] { 1.0 } else { 0.0 }
    }

    fn margin(&self, x: &[f64], y: &[f64], i: usize) -> f64 {
        let a = &self.features[i];
        if self.corrupted[i] {
            a.iter().zip(x).zip(y).map(|((ai, xi), yi)| (ai + xi) * yi).sum()
        } else {
            dot(a, y)
        }
    }

    fn check_args(&self, x: &[f64], y: &[f64], batch: &[usize]) -> Result<()> {
        let d = self.dim();
        if x.len() != d || y.len() != d {
            return Err(Error::contract(format!(
                "poisoning: x and y must have dimension {d}"
            )));
        }
        if batch.is_empty() {
            return Err(Error::contract("poisoning: empty batch"));
        }
        if let Some(bad) = batch.iter().find(|&&i| i >= self.len()) {
            return Err(Error::contract(format!("poisoning: sample id {bad} out of range")));
        }
        Ok(())
    }

    /// Writes one row per sample: `a0..a{d-1},label,corrupted`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header: Vec<String> = (0..self.dim()).map(|j| format!("a{j}")).collect();
        header.push("label".into());
        header.push("corrupted".into());
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.features[i].iter().map(|v| format_real(*v)).collect();
            row.push(u8::from(self.labels[i]).to_string());
            row.push(u8::from(self.corrupted[i]).to_string());
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.clone();
        let cols = header.len();
        if cols < 3 || &header[cols - 2] != "label" || &header[cols - 1] != "corrupted" {
            return Err(Error::contract("dataset csv: expected a0..,label,corrupted header"));
        }
        let d = cols - 2;
        let (mut features, mut labels, mut corrupted) = (Vec::new(), Vec::new(), Vec::new());
        for rec in r.records() {
            let rec = rec?;
            let a: Vector = (0..d)
                .map(|j| parse_field::<f64>(&rec[j]))
                .collect::<Result<Vec<_>>>()?
                .into();
            features.push(a);
            labels.push(parse_flag(&rec[d])?);
            corrupted.push(parse_flag(&rec[d + 1])?);
        }
        Self::new(features, labels, corrupted)
    }
}

fn parse_field<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::contract(format!("dataset csv: cannot parse {s:?}")))
}

fn parse_flag(s: &str) -> Result<bool> {
    match s.trim() {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::contract(format!("dataset csv: flag must be 0 or 1, got {other:?}"))),
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Draws `n` samples `a_i ~ N(0, I_d)` with labels `b_i = [a_iᵀθ + ν_i > 0]`,
/// `θ = 1`, `ν_i ~ N(0, 10⁻³)`, and marks `round(rate · n)` of them as
/// corrupted, chosen uniformly without replacement.
pub fn gen_poisoning_data(
    n: usize,
    d: usize,
    corruption_rate: f64,
    rng: &mut RngStream,
) -> Result<PoisonDataset> {
    if n < 2 || d < 1 {
        return Err(Error::contract("gen_poisoning_data: need n >= 2 and d >= 1"));
    }
    if !(0.0..1.0).contains(&corruption_rate) || corruption_rate * (n as f64) < 1.0 {
        return Err(Error::contract(format!(
            "gen_poisoning_data: corruption rate {corruption_rate} yields no poisoned sample for n = {n}"
        )));
    }
    let k = (corruption_rate * n as f64).round() as usize;
    if k >= n {
        return Err(Error::contract("gen_poisoning_data: no clean sample left"));
    }
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let a = Vector::from_fn(d, |_| rng.standard_normal());
        let nu = LABEL_NOISE_STD * rng.standard_normal();
        // θ = (1, …, 1), and σ(z) > ½ ⇔ z > 0.
        let z: f64 = a.iter().sum::<f64>() + nu;
        labels.push(sigmoid(z) > 0.5);
        features.push(a);
    }
    let mut corrupted = vec![false; n];
    for i in rand::seq::index::sample(rng, n, k) {
        corrupted[i] = true;
    }
    PoisonDataset::new(features, labels, corrupted)
}

/// Batch estimate of the attack loss together with which subset terms were
/// present in the batch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchLoss {
    pub value: f64,
    pub poisoned_in_batch: usize,
    pub clean_in_batch: usize,
}

impl BatchLoss {
    /// The batch had no corrupted member, so `h(x, y; D_p)` was skipped.
    pub fn poisoned_term_skipped(&self) -> bool {
        self.poisoned_in_batch == 0
    }

    /// The batch had no clean member, so `h(0, y; D_t)` was skipped.
    pub fn clean_term_skipped(&self) -> bool {
        self.clean_in_batch == 0
    }
}

/// Attack loss `h(x, y; B ∩ D_p) + h(0, y; B ∩ D_t)` on a batch. A subset with
/// no batch member contributes nothing and is reported in the result.
pub fn poisoning_value(ds: &PoisonDataset, x: &[f64], y: &[f64], batch: &[usize]) -> Result<BatchLoss> {
    ds.check_args(x, y, batch)?;
    let (mut sp, mut np, mut st, mut nt) = (0.0, 0usize, 0.0, 0usize);
    for &i in batch {
        let l = ds.sample_loss(x, y, i);
        if ds.corrupted[i] {
            sp += l;
            np += 1;
        } else {
            st += l;
            nt += 1;
        }
    }
    let mut value = 0.0;
    if np > 0 {
        value += sp / np as f64;
    }
    if nt > 0 {
        value += st / nt as f64;
    }
    Ok(BatchLoss {
        value,
        poisoned_in_batch: np,
        clean_in_batch: nt,
    })
}

/// Exact partial gradients of [`poisoning_value`] with respect to `x` and `y`.
pub fn poisoning_grads(
    ds: &PoisonDataset,
    x: &[f64],
    y: &[f64],
    batch: &[usize],
) -> Result<(Vector, Vector)> {
    ds.check_args(x, y, batch)?;
    let d = ds.dim();
    let np = batch.iter().filter(|&&i| ds.corrupted[i]).count();
    let nt = batch.len() - np;
    let mut gx = Vector::zeros(d);
    let mut gy = Vector::zeros(d);
    for &i in batch {
        let s = ds.sample_loss_slope(x, y, i);
        let a = &ds.features[i];
        if ds.corrupted[i] {
            let w = s / np as f64;
            gx.axpy(w, y);
            gy.axpy(w, a);
            gy.axpy(w, x);
        } else {
            gy.axpy(s / nt as f64, a);
        }
    }
    Ok((gx, gy))
}

/// Negated attack loss as a minimax oracle over the sample population.
///
/// Per-sample values are importance weighted (`n/|D_p|` for corrupted
/// samples, `n/|D_t|` for clean ones) so that their population mean equals
/// `−(h(x, y; D_p) + h(0, y; D_t))` exactly.
#[derive(Clone, Debug)]
pub struct PoisoningProblem {
    data: PoisonDataset,
    weight_poisoned: f64,
    weight_clean: f64,
    l_f_estimate: Option<f64>,
}

impl PoisoningProblem {
    pub fn new(data: PoisonDataset) -> Result<Self> {
        let n = data.len();
        let np = data.corrupted_count();
        if np == 0 || np == n {
            return Err(Error::contract("poisoning problem needs both corrupted and clean samples"));
        }
        Ok(PoisoningProblem {
            weight_poisoned: n as f64 / np as f64,
            weight_clean: n as f64 / (n - np) as f64,
            data,
            l_f_estimate: None,
        })
    }

    pub fn dataset(&self) -> &PoisonDataset {
        &self.data
    }

    pub fn with_l_f_estimate(mut self, l_f: f64) -> Self {
        self.l_f_estimate = Some(l_f);
        self
    }

    fn weight(&self, i: usize) -> f64 {
        if self.data.corrupted[i] {
            self.weight_poisoned
        } else {
            self.weight_clean
        }
    }

    fn all_indices(&self) -> Vec<usize> {
        (0..self.data.len()).collect()
    }
}

impl MinimaxOracle for PoisoningProblem {
    fn dim_x(&self) -> usize {
        self.data.dim()
    }

    fn dim_y(&self) -> usize {
        self.data.dim()
    }

    fn population_size(&self) -> usize {
        self.data.len()
    }

    fn value(&self, x: &[f64], y: &[f64], sample: usize) -> f64 {
        -self.weight(sample) * self.data.sample_loss(x, y, sample)
    }

    fn full_value(&self, x: &[f64], y: &[f64]) -> f64 {
        let all = self.all_indices();
        -poisoning_value(&self.data, x, y, &all).expect("valid").value
    }

    fn has_gradients(&self) -> bool {
        true
    }

    fn grad_x(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        if !self.data.corrupted[sample] {
            return Some(Vector::zeros(self.data.dim()));
        }
        let s = self.data.sample_loss_slope(x, y, sample);
        Some(Vector::from(y).scaled(-self.weight(sample) * s))
    }

    fn grad_y(&self, x: &[f64], y: &[f64], sample: usize) -> Option<Vector> {
        let s = self.data.sample_loss_slope(x, y, sample);
        let w = -self.weight(sample) * s;
        let mut g = self.data.features[sample].scaled(w);
        if self.data.corrupted[sample] {
            g.axpy(w, x);
        }
        Some(g)
    }

    fn full_grad_x(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        let all = self.all_indices();
        let (gx, _) = poisoning_grads(&self.data, x, y, &all).ok()?;
        Some(gx.scaled(-1.0))
    }

    fn full_grad_y(&self, x: &[f64], y: &[f64]) -> Option<Vector> {
        let all = self.all_indices();
        let (_, gy) = poisoning_grads(&self.data, x, y, &all).ok()?;
        Some(gy.scaled(-1.0))
    }

    fn constants(&self) -> ProblemConstants {
        ProblemConstants {
            l: None,
            l_f: self.l_f_estimate,
            tau: None,
            l_f_estimated: self.l_f_estimate.is_some(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> PoisonDataset {
        // One corrupted and one clean copy of the same sample a = 1, b = 1.
        PoisonDataset::new(
            vec![Vector::from([1.0]), Vector::from([1.0])],
            vec![true, true],
            vec![true, false],
        )
        .unwrap()
    }

    #[test]
    fn zero_point_gives_two_log_two() {
        let mut rng = RngStream::new(3, crate::rng::DATA_GEN);
        let ds = gen_poisoning_data(40, 5, 0.15, &mut rng).unwrap();
        let z = vec![0.0; 5];
        let v = poisoning_value(&ds, &z, &z, &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11]).unwrap();
        // Either both subsets are present (2 log 2) or one was skipped.
        let expected = match (v.poisoned_term_skipped(), v.clean_term_skipped()) {
            (false, false) => 2.0 * std::f64::consts::LN_2,
            _ => std::f64::consts::LN_2,
        };
        assert!((v.value - expected).abs() < 1e-15);
        let all: Vec<usize> = (0..40).collect();
        let v = poisoning_value(&ds, &z, &z, &all).unwrap();
        assert!((v.value - 1.386_294_361_119_890_6).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_logistic_terms() {
        let ds = tiny();
        let v = poisoning_value(&ds, &[1.0], &[1.0], &[0, 1]).unwrap();
        let hp = (1.0 + (-2.0f64).exp()).ln();
        let ht = (1.0 + (-1.0f64).exp()).ln();
        assert!((hp - 0.126_928).abs() < 1e-6);
        assert!((ht - 0.313_262).abs() < 1e-6);
        assert!((v.value - (hp + ht)).abs() < 1e-15);
        assert!((v.value - 0.440_190).abs() < 1e-6);
    }

    #[test]
    fn clamp_bounds_the_separable_limit() {
        let ds = PoisonDataset::new(vec![Vector::from([1.0])], vec![true], vec![false]).unwrap();
        let v = poisoning_value(&ds, &[0.0], &[1e6], &[0]).unwrap();
        assert!(v.value >= 0.0 && v.value <= -(1.0 - LOGISTIC_CLAMP).ln() + 1e-18);
        let v = poisoning_value(&ds, &[0.0], &[-1e6], &[0]).unwrap();
        assert!((v.value - -(LOGISTIC_CLAMP.ln())).abs() < 1e-9);
    }

    #[test]
    fn skipped_terms_are_flagged() {
        let ds = tiny();
        let v = poisoning_value(&ds, &[0.0], &[0.0], &[1, 1]).unwrap();
        assert!(v.poisoned_term_skipped() && !v.clean_term_skipped());
        assert!((v.value - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn bad_arguments() {
        let ds = tiny();
        assert!(poisoning_value(&ds, &[0.0], &[0.0], &[]).is_err());
        assert!(poisoning_value(&ds, &[0.0], &[0.0], &[2]).is_err());
        assert!(poisoning_value(&ds, &[0.0, 1.0], &[0.0], &[0]).is_err());
    }

    #[test]
    fn gradient_in_x_vanishes_at_zero_y() {
        let mut rng = RngStream::new(5, crate::rng::DATA_GEN);
        let ds = gen_poisoning_data(30, 4, 0.2, &mut rng).unwrap();
        let all: Vec<usize> = (0..30).collect();
        let (gx, _) = poisoning_grads(&ds, &[0.3, -1.0, 2.0, 0.1], &[0.0; 4], &all).unwrap();
        assert_eq!(gx.norm(), 0.0);
    }

    #[test]
    fn labels_follow_the_generating_rule() {
        let mut rng = RngStream::new(1, crate::rng::DATA_GEN);
        let ds = gen_poisoning_data(1000, 100, 0.15, &mut rng).unwrap();
        assert_eq!(ds.corrupted_count(), 150);
        // ν has std 0.03, so samples with |aᵀθ| > 0.2 are labelled by its sign.
        for (a, b) in ds.features().iter().zip(ds.labels()) {
            let s: f64 = a.iter().sum();
            if s.abs() > 0.2 {
                assert_eq!(*b, s > 0.0);
            }
        }
    }

    #[test]
    fn generation_errors() {
        let mut rng = RngStream::new(1, crate::rng::DATA_GEN);
        assert!(gen_poisoning_data(5, 2, 0.15, &mut rng).is_err());
        assert!(gen_poisoning_data(1, 2, 0.15, &mut rng).is_err());
        assert!(gen_poisoning_data(10, 0, 0.15, &mut rng).is_err());
    }

    #[test]
    fn oracle_population_mean_matches_full_value() {
        let mut rng = RngStream::new(9, crate::rng::DATA_GEN);
        let p = PoisoningProblem::new(gen_poisoning_data(60, 3, 0.15, &mut rng).unwrap()).unwrap();
        let x = [0.5, -1.0, 1.5];
        let y = [0.01, 0.02, -0.01];
        let n = p.population_size();
        let mean = (0..n).map(|i| p.value(&x, &y, i)).sum::<f64>() / n as f64;
        assert!((mean - p.full_value(&x, &y)).abs() < 1e-12);
        let gmean = (0..n).fold(Vector::zeros(3), |mut acc, i| {
            acc.axpy(1.0 / n as f64, &p.grad_y(&x, &y, i).unwrap());
            acc
        });
        assert!(gmean.distance(&p.full_grad_y(&x, &y).unwrap()) < 1e-12);
    }
}
