//! Seeded Monte Carlo experiments on model-selection frequency.
//!
//! Each replication draws its own random stream from `(seed, p, r, index)`
//! using ChaCha8 keyed on `(seed, p, r)` with the replication index as the
//! stream id. Results therefore do not depend on thread count or on the order
//! in which replications run.
//!
//! Effects are built from a fixed sign pattern `(+1 x floor(p/2), -1 x floor(p/2), 0 if p odd)`
//! scaled so that `sum(alpha) = 0` and `sum(alpha^2) / (p sigma^2) = c_A`.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bayes_factor::{
    choose_model, log_bf_bic_one_way, log_bf_fb_one_way, Choice, Criterion, ModelId,
};
use crate::consistency::EffectSizes;
use crate::data::{OneWayDataset, TwoWayDataset};
use crate::ss::one_way_ss;
use crate::{Error, Result};

const STREAM_DOMAIN: u64 = 0x616e_6f76_612d_6266; // "anova-bf"

/// Data-generating model for simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSpec {
    pub model: ModelId,
    pub effects: EffectSizes,
    pub mu: f64,
    pub sigma2: f64,
}

impl TruthSpec {
    pub fn new(model: ModelId, effects: EffectSizes, mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sigma2 must be positive, got {sigma2}"
            )));
        }
        if !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("mu must be finite, got {mu}")));
        }
        let (has_a, has_b, has_ab) = terms(model);
        for (present, value, name) in [
            (has_a, effects.c_a, "c_a"),
            (has_b, effects.c_b, "c_b"),
            (has_ab, effects.c_ab, "c_ab"),
        ] {
            if !present && value != 0.0 {
                return Err(Error::InvalidConfig(format!(
                    "{name} = {value} but model {model} has no such term"
                )));
            }
        }
        Ok(TruthSpec {
            model,
            effects,
            mu,
            sigma2,
        })
    }

    /// `M_1` with unit variance and zero mean.
    pub fn null() -> Self {
        TruthSpec {
            model: ModelId::Null,
            effects: EffectSizes::default(),
            mu: 0.0,
            sigma2: 1.0,
        }
    }

    /// `M_{A+1}` with unit variance, zero mean and effect size `c_a`.
    pub fn one_way_alternative(c_a: f64) -> Result<Self> {
        Self::new(ModelId::A, EffectSizes::one_way(c_a)?, 0.0, 1.0)
    }

    /// Label used in frequency tables, e.g. `M1` or `MA+1`.
    pub fn label(&self) -> String {
        format!("M{}", self.model)
    }
}

fn terms(model: ModelId) -> (bool, bool, bool) {
    match model {
        ModelId::Null => (false, false, false),
        ModelId::A => (true, false, false),
        ModelId::B => (false, true, false),
        ModelId::AdditiveAB => (true, true, false),
        ModelId::Interaction => (true, true, true),
    }
}

fn sign_pattern(p: usize) -> Vec<f64> {
    let half = p / 2;
    let mut v = vec![1.0; half];
    v.extend(std::iter::repeat_n(-1.0, half));
    if p % 2 == 1 {
        v.push(0.0);
    }
    v
}

/// Zero-sum main effects with `sum(alpha^2) / (p sigma2) = c_a`.
pub fn make_alpha(p: usize, c_a: f64, sigma2: f64) -> Vec<f64> {
    let pattern = sign_pattern(p);
    let norm2: f64 = pattern.iter().map(|v| v * v).sum();
    let delta = (c_a * p as f64 * sigma2 / norm2).sqrt();
    pattern.into_iter().map(|v| v * delta).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoWayEffects {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// `p x q`, row-major.
    pub interaction: Vec<f64>,
}

impl TwoWayEffects {
    pub fn interaction(&self, i: usize, j: usize) -> f64 {
        self.interaction[i * self.beta.len() + j]
    }
}

/// Main effects from [`make_alpha`]; the interaction is a scaled outer
/// product of the two sign patterns, so both of its margins vanish.
pub fn make_two_way_effects(p: usize, q: usize, e: &EffectSizes, sigma2: f64) -> TwoWayEffects {
    let alpha = make_alpha(p, e.c_a, sigma2);
    let beta = make_alpha(q, e.c_b, sigma2);
    let (u, v) = (sign_pattern(p), sign_pattern(q));
    let norm2 = u.iter().map(|x| x * x).sum::<f64>() * v.iter().map(|x| x * x).sum::<f64>();
    let delta = (e.c_ab * (p * q) as f64 * sigma2 / norm2).sqrt();
    let interaction = u
        .iter()
        .flat_map(|&ui| v.iter().map(move |&vj| delta * ui * vj))
        .collect();
    TwoWayEffects {
        alpha,
        beta,
        interaction,
    }
}

/// One-way data `y_ij = mu + alpha_i + sigma z_ij`.
pub fn simulate_one_way<R: Rng + ?Sized>(
    p: usize,
    r: usize,
    truth: &TruthSpec,
    rng: &mut R,
) -> Result<OneWayDataset> {
    let alpha = match truth.model {
        ModelId::Null => vec![0.0; p],
        ModelId::A => make_alpha(p, truth.effects.c_a, truth.sigma2),
        other => {
            return Err(Error::InvalidConfig(format!(
                "model {other} is not a one-way model"
            )))
        }
    };
    let sigma = truth.sigma2.sqrt();
    let rows = alpha
        .iter()
        .map(|a| {
            (0..r)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    truth.mu + a + sigma * z
                })
                .collect()
        })
        .collect();
    OneWayDataset::from_rows(rows)
}

/// Two-way data `y_ijk = mu + alpha_i + beta_j + (alpha beta)_ij + sigma z_ijk`,
/// keeping only the terms present in `truth.model`.
pub fn simulate_two_way<R: Rng + ?Sized>(
    p: usize,
    q: usize,
    r: usize,
    truth: &TruthSpec,
    rng: &mut R,
) -> Result<TwoWayDataset> {
    let effects = make_two_way_effects(p, q, &truth.effects, truth.sigma2);
    let (has_a, has_b, has_ab) = terms(truth.model);
    let sigma = truth.sigma2.sqrt();
    let mut cells = Vec::with_capacity(p);
    for i in 0..p {
        let mut row = Vec::with_capacity(q);
        for j in 0..q {
            let mut mean = truth.mu;
            if has_a {
                mean += effects.alpha[i];
            }
            if has_b {
                mean += effects.beta[j];
            }
            if has_ab {
                mean += effects.interaction(i, j);
            }
            let cell = (0..r)
                .map(|_| {
                    let z: f64 = rng.sample(StandardNormal);
                    mean + sigma * z
                })
                .collect();
            row.push(cell);
        }
        cells.push(row);
    }
    TwoWayDataset::from_cells(cells)
}

/// Independent random stream for replication `rep` of cell `(p, r)`.
pub fn substream(seed: u64, p: usize, r: usize, rep: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(p as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(r as u64).to_le_bytes());
    key[24..].copy_from_slice(&STREAM_DOMAIN.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(rep);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub p_list: Vec<usize>,
    pub r_list: Vec<usize>,
    pub truth: TruthSpec,
    pub replications: usize,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications < 1 {
            return Err(Error::InvalidConfig(
                "replications must be at least 1".into(),
            ));
        }
        if self.p_list.is_empty() || self.r_list.is_empty() || self.criteria.is_empty() {
            return Err(Error::InvalidConfig(
                "p, r and criteria lists must be nonempty".into(),
            ));
        }
        if let Some(p) = self.p_list.iter().find(|&&p| p < 2) {
            return Err(Error::InvalidConfig(format!(
                "p must be at least 2, got {p}"
            )));
        }
        if let Some(r) = self.r_list.iter().find(|&&r| r < 2) {
            return Err(Error::InvalidConfig(format!(
                "r must be at least 2, got {r}"
            )));
        }
        if !matches!(self.truth.model, ModelId::Null | ModelId::A) {
            return Err(Error::InvalidConfig(format!(
                "frequency experiments are one-way; got truth {}",
                self.truth.model
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub criterion: Criterion,
    pub truth: String,
    pub c_a: f64,
    pub p: usize,
    pub r: usize,
    /// Fraction of replications selecting the true model.
    pub frequency: f64,
    #[serde(skip)]
    pub selected: usize,
    pub replications: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub rows: Vec<FrequencyRow>,
    pub replications: usize,
    pub seed: u64,
}

pub const FREQUENCY_CSV_HEADER: [&str; 8] = [
    "criterion",
    "truth",
    "c_a",
    "p",
    "r",
    "frequency",
    "replications",
    "seed",
];

impl FrequencyTable {
    pub fn get(&self, criterion: Criterion, p: usize, r: usize) -> Option<&FrequencyRow> {
        self.rows
            .iter()
            .find(|row| row.criterion == criterion && row.p == p && row.r == r)
    }

    pub fn frequency(&self, criterion: Criterion, p: usize, r: usize) -> Option<f64> {
        self.get(criterion, p, r).map(|row| row.frequency)
    }

    /// Appends another table's rows (e.g. a different effect size).
    pub fn extend(&mut self, other: FrequencyTable) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        write_frequency_csv(&self.rows, true)
    }
}

impl fmt::Display for FrequencyTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_csv())
    }
}

/// CSV with header `criterion,truth,c_a,p,r,frequency,replications,seed`.
pub fn write_frequency_csv(rows: &[FrequencyRow], header: bool) -> String {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    if header {
        w.write_record(FREQUENCY_CSV_HEADER)
            .expect("in-memory write");
    }
    for row in rows {
        w.serialize(row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

fn selects_truth(choice: Choice, truth: ModelId) -> bool {
    match choice {
        Choice::Null => truth == ModelId::Null,
        Choice::Alternative => truth == ModelId::A,
    }
}

fn replicate(cfg: &SimulationConfig, p: usize, r: usize, rep: usize) -> Result<Vec<bool>> {
    let mut rng = substream(cfg.seed, p, r, rep as u64);
    let data = simulate_one_way(p, r, &cfg.truth, &mut rng)?;
    let ss = one_way_ss(&data);
    cfg.criteria
        .iter()
        .map(|&criterion| {
            let lbf = match criterion {
                Criterion::FullyBayes => log_bf_fb_one_way(&ss, p, r),
                Criterion::Bic => log_bf_bic_one_way(&ss, p, r),
            }
            .map_err(|err| {
                Error::DegenerateData(format!(
                    "replication {rep} at p={p}, r={r} (seed {}): {err}",
                    cfg.seed
                ))
            })?;
            Ok(selects_truth(choose_model(lbf), cfg.truth.model))
        })
        .collect()
}

/// Fraction of replications in which each criterion picks the true model,
/// for every `(p, r)` in the grid.
pub fn run_frequency_experiment(cfg: &SimulationConfig) -> Result<FrequencyTable> {
    cfg.validate()?;
    let mut criteria: Vec<Criterion> = Vec::with_capacity(cfg.criteria.len());
    for &c in &cfg.criteria {
        if !criteria.contains(&c) {
            criteria.push(c);
        }
    }
    let cfg = SimulationConfig {
        criteria,
        ..cfg.clone()
    };

    let mut counts = Vec::new();
    for &p in &cfg.p_list {
        for &r in &cfg.r_list {
            let width = cfg.criteria.len();
            let selected = (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    replicate(&cfg, p, r, rep)
                        .map(|hits| hits.into_iter().map(usize::from).collect::<Vec<_>>())
                })
                .try_reduce(
                    || vec![0usize; width],
                    |a, b| Ok(a.iter().zip(&b).map(|(x, y)| x + y).collect()),
                )?;
            counts.push((p, r, selected));
        }
    }

    let c_a = match cfg.truth.model {
        ModelId::A => cfg.truth.effects.c_a,
        _ => 0.0,
    };
    let mut rows = Vec::new();
    for (ci, &criterion) in cfg.criteria.iter().enumerate() {
        for (p, r, selected) in &counts {
            rows.push(FrequencyRow {
                criterion,
                truth: cfg.truth.label(),
                c_a,
                p: *p,
                r: *r,
                frequency: selected[ci] as f64 / cfg.replications as f64,
                selected: selected[ci],
                replications: cfg.replications,
                seed: cfg.seed,
            });
        }
    }
    Ok(FrequencyTable {
        rows,
        replications: cfg.replications,
        seed: cfg.seed,
    })
}
