//! Group-relative policy optimisation on a toy structured-prediction policy.
//!
//! The policy maps an event feature vector to four independent heads: a
//! softmax over event types, a softmax over directions, a Bernoulli strength
//! and a Gaussian car estimate with fixed std. Each training iteration draws
//! a group of samples per event, scores them with [`crate::hgrm`], centres
//! (and optionally std-normalises) the rewards within the group and takes one
//! clipped gradient-ascent step on the score-function objective with a KL
//! penalty to a frozen reference copy.

mod env;

pub use env::{ToyEnvConfig, ToyEnvironment, ToyEvent};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hgrm::{compose_reward, Prediction, RewardBreakdown, RewardConfig, RewardError};
use crate::labeling::{Direction, EventType, Strength};
use crate::Exec;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("group size must be >= 2, got {0}")]
    GroupTooSmall(usize),
    #[error("no rollouts to learn from")]
    NoRollouts,
    #[error("non-finite gradient in the {0} head")]
    NonFiniteGradient(&'static str),
    #[error("feature vector has length {found}, policy expects {expected}")]
    FeatureDim { expected: usize, found: usize },
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid toy environment: {0}")]
    InvalidEnv(String),
    #[error(transparent)]
    Reward(#[from] RewardError),
}

const N_TYPES: usize = EventType::COUNT;
const N_DIRS: usize = 3;
const HEADS: [(&str, usize); 4] = [("event_type", N_TYPES), ("direction", N_DIRS), ("strength", 1), ("car", 1)];

fn direction_index(d: Direction) -> usize {
    Direction::ALL.iter().position(|x| *x == d).expect("closed set")
}

fn softmax<const K: usize>(logits: [f64; K]) -> [f64; K] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out = logits.map(|z| (z - m).exp());
    let s: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= s);
    out
}

fn log_softmax<const K: usize>(logits: [f64; K]) -> [f64; K] {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|z| (z - m).exp()).sum::<f64>().ln();
    logits.map(|z| z - lse)
}

/// `(log sigmoid(u), log(1 - sigmoid(u)))`, stable for large |u|.
fn log_sigmoid_pair(u: f64) -> (f64, f64) {
    let log1p_exp = |x: f64| if x > 0.0 { x + (-x).exp().ln_1p() } else { x.exp().ln_1p() };
    (-log1p_exp(-u), -log1p_exp(u))
}

/// Head outputs of the policy at one feature vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadOutputs {
    pub type_logits: [f64; N_TYPES],
    pub dir_logits: [f64; N_DIRS],
    pub strength_logit: f64,
    pub car_mean: f64,
}

impl HeadOutputs {
    pub fn type_probs(&self) -> [f64; N_TYPES] {
        softmax(self.type_logits)
    }

    pub fn dir_probs(&self) -> [f64; N_DIRS] {
        softmax(self.dir_logits)
    }

    pub fn p_strong(&self) -> f64 {
        1.0 / (1.0 + (-self.strength_logit).exp())
    }
}

/// Linear four-head policy. Parameters live in one flat vector laid out as
/// `[type (10 x dim) | direction (3 x dim) | strength (dim) | car (dim)]`.
/// The car head is linear in units of `car_std`, which keeps its score
/// function on the same scale as the discrete heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyPolicy {
    pub dim: usize,
    pub car_std: f64,
    pub params: Vec<f64>,
    pub reference: Vec<f64>,
}

/// One sampled action.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToyAction {
    pub event_type: EventType,
    pub direction: Direction,
    pub strength: Strength,
    pub car: f64,
}

impl ToyAction {
    pub fn to_prediction(self) -> Prediction {
        Prediction {
            car_hat: Some(self.car),
            direction_hat: Some(self.direction),
            strength_hat: Some(self.strength),
            event_type_hat: Some(self.event_type),
            response_doc: None,
        }
    }
}

impl ToyPolicy {
    pub const CAR_STD: f64 = 0.02;

    pub fn n_params(dim: usize) -> usize {
        HEADS.iter().map(|(_, k)| k).sum::<usize>() * dim
    }

    /// All-zero parameters: uniform heads and a zero car mean.
    pub fn zeros(dim: usize) -> Self {
        let params = vec![0.0; Self::n_params(dim)];
        Self { dim, car_std: Self::CAR_STD, reference: params.clone(), params }
    }

    /// Small Gaussian initialisation; the reference is a copy of it.
    pub fn random(dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..Self::n_params(dim)).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
        Self { dim, car_std: Self::CAR_STD, reference: params.clone(), params }
    }

    /// Freezes the current parameters as the KL reference.
    pub fn snapshot_reference(&mut self) {
        self.reference.clone_from(&self.params);
    }

    fn offsets(&self) -> [usize; 4] {
        let d = self.dim;
        [0, N_TYPES * d, (N_TYPES + N_DIRS) * d, (N_TYPES + N_DIRS + 1) * d]
    }

    fn heads_of(&self, theta: &[f64], x: &[f64]) -> HeadOutputs {
        let d = self.dim;
        let [o_type, o_dir, o_str, o_car] = self.offsets();
        let dot = |off: usize| theta[off..off + d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        HeadOutputs {
            type_logits: std::array::from_fn(|k| dot(o_type + k * d)),
            dir_logits: std::array::from_fn(|k| dot(o_dir + k * d)),
            strength_logit: dot(o_str),
            car_mean: self.car_std * dot(o_car),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), PolicyError> {
        if x.len() != self.dim {
            return Err(PolicyError::FeatureDim { expected: self.dim, found: x.len() });
        }
        Ok(())
    }

    pub fn heads(&self, x: &[f64]) -> HeadOutputs {
        self.heads_of(&self.params, x)
    }

    pub fn reference_heads(&self, x: &[f64]) -> HeadOutputs {
        self.heads_of(&self.reference, x)
    }

    pub fn log_prob(&self, x: &[f64], a: &ToyAction) -> f64 {
        log_prob_of(&self.heads(x), a, self.car_std)
    }

    /// KL(policy || reference) at `x`, summed over the independent heads.
    pub fn kl_to_reference(&self, x: &[f64]) -> f64 {
        kl_heads(&self.heads(x), &self.reference_heads(x), self.car_std)
    }

    pub fn sample(&self, x: &[f64], rng: &mut impl Rng) -> ToyAction {
        let h = self.heads(x);
        let pick = |probs: &[f64], u: f64| {
            let mut acc = 0.0;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return i;
                }
            }
            probs.len() - 1
        };
        let t = pick(&h.type_probs(), rng.random::<f64>());
        let d = pick(&h.dir_probs(), rng.random::<f64>());
        let strong = rng.random::<f64>() < h.p_strong();
        let z: f64 = rng.sample(StandardNormal);
        ToyAction {
            event_type: EventType::ALL[t],
            direction: Direction::ALL[d],
            strength: if strong { Strength::Strong } else { Strength::Weak },
            car: h.car_mean + self.car_std * z,
        }
    }

    /// Mode of every head.
    pub fn greedy(&self, x: &[f64]) -> ToyAction {
        let h = self.heads(x);
        let argmax = |v: &[f64]| {
            v.iter().enumerate().fold(0, |best, (i, z)| if *z > v[best] { i } else { best })
        };
        ToyAction {
            event_type: EventType::ALL[argmax(&h.type_logits)],
            direction: Direction::ALL[argmax(&h.dir_logits)],
            strength: if h.strength_logit > 0.0 { Strength::Strong } else { Strength::Weak },
            car: h.car_mean,
        }
    }
}

fn log_prob_of(h: &HeadOutputs, a: &ToyAction, car_std: f64) -> f64 {
    let lt = log_softmax(h.type_logits)[a.event_type.index()];
    let ld = log_softmax(h.dir_logits)[direction_index(a.direction)];
    let (ls, lw) = log_sigmoid_pair(h.strength_logit);
    let lstr = if a.strength == Strength::Strong { ls } else { lw };
    let z = (a.car - h.car_mean) / car_std;
    let lcar = -0.5 * z * z - car_std.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    lt + ld + lstr + lcar
}

fn kl_categorical<const K: usize>(p_logits: [f64; K], q_logits: [f64; K]) -> f64 {
    let lp = log_softmax(p_logits);
    let lq = log_softmax(q_logits);
    (0..K).map(|k| lp[k].exp() * (lp[k] - lq[k])).sum::<f64>().max(0.0)
}

fn kl_heads(p: &HeadOutputs, q: &HeadOutputs, car_std: f64) -> f64 {
    let kt = kl_categorical(p.type_logits, q.type_logits);
    let kd = kl_categorical(p.dir_logits, q.dir_logits);
    let ks = kl_categorical([p.strength_logit, 0.0], [q.strength_logit, 0.0]);
    let dm = p.car_mean - q.car_mean;
    kt + kd + ks + dm * dm / (2.0 * car_std * car_std)
}

/// Gradient of KL(softmax(p) || softmax(q)) with respect to the logits of p.
fn kl_categorical_grad<const K: usize>(p_logits: [f64; K], q_logits: [f64; K]) -> [f64; K] {
    let lp = log_softmax(p_logits);
    let lq = log_softmax(q_logits);
    let kl: f64 = (0..K).map(|k| lp[k].exp() * (lp[k] - lq[k])).sum();
    std::array::from_fn(|k| lp[k].exp() * (lp[k] - lq[k] - kl))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RolloutSample {
    pub action: ToyAction,
    pub prediction: Prediction,
    pub breakdown: RewardBreakdown,
    pub log_prob: f64,
}

/// `G` samples drawn for one event.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupRollout {
    pub features: Vec<f64>,
    pub samples: Vec<RolloutSample>,
}

impl GroupRollout {
    pub fn rewards(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.breakdown.total).collect()
    }
}

/// Draws `g` independent samples for `event` and scores them.
pub fn sample_group(
    policy: &ToyPolicy,
    event: &ToyEvent,
    g: usize,
    seed: u64,
    reward_cfg: &RewardConfig,
) -> Result<GroupRollout, PolicyError> {
    if g < 2 {
        return Err(PolicyError::GroupTooSmall(g));
    }
    policy.check_dim(&event.features)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..g)
        .map(|_| {
            let action = policy.sample(&event.features, &mut rng);
            let prediction = action.to_prediction();
            let breakdown = compose_reward(&prediction, &event.truth, reward_cfg)?;
            let log_prob = policy.log_prob(&event.features, &action);
            Ok(RolloutSample { action, prediction, breakdown, log_prob })
        })
        .collect::<Result<Vec<_>, PolicyError>>()?;
    Ok(GroupRollout { features: event.features.clone(), samples })
}

/// Centres `rewards` on their mean; with `normalize_by_std` also divides by
/// `max(population std, std_floor)`.
pub fn group_advantages(rewards: &[f64], normalize_by_std: bool, std_floor: f64) -> Vec<f64> {
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let centred: Vec<f64> = rewards.iter().map(|r| r - mean).collect();
    if !normalize_by_std {
        return centred;
    }
    let std = (centred.iter().map(|a| a * a).sum::<f64>() / n).sqrt();
    let scale = std.max(std_floor);
    centred.into_iter().map(|a| a / scale).collect()
}

/// A rollout group together with its advantages.
#[derive(Debug, Clone)]
pub struct ScoredGroup {
    pub rollout: GroupRollout,
    pub advantages: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepConfig {
    pub learning_rate: f64,
    pub kl_coeff: f64,
    pub max_grad_norm: f64,
    /// Importance-ratio clip; only binds once the policy has moved away from
    /// the one that generated the rollouts (repeated epochs on one batch).
    pub clip_range: f64,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self { learning_rate: 0.5, kl_coeff: 0.05, max_grad_norm: 1.0, clip_range: 0.2 }
    }
}

/// Clipped surrogate minus the KL penalty, averaged over samples (and over
/// groups for the KL term). At the behaviour policy it reduces to the mean of
/// `advantage * log_prob` up to a constant.
pub fn surrogate_objective(theta: &[f64], policy: &ToyPolicy, groups: &[ScoredGroup], cfg: &StepConfig) -> f64 {
    let n_samples: usize = groups.iter().map(|g| g.rollout.samples.len()).sum();
    let mut pg = 0.0;
    let mut kl = 0.0;
    for g in groups {
        let x = &g.rollout.features;
        let h = policy.heads_of(theta, x);
        for (s, a) in g.rollout.samples.iter().zip(&g.advantages) {
            let ratio = (log_prob_of(&h, &s.action, policy.car_std) - s.log_prob).exp();
            let clipped = ratio.clamp(1.0 - cfg.clip_range, 1.0 + cfg.clip_range);
            pg += (ratio * a).min(clipped * a);
        }
        kl += kl_heads(&h, &policy.reference_heads(x), policy.car_std);
    }
    pg / n_samples as f64 - cfg.kl_coeff * kl / groups.len() as f64
}

/// Analytic gradient of [`surrogate_objective`] at `policy.params`.
pub fn surrogate_gradient(policy: &ToyPolicy, groups: &[ScoredGroup], cfg: &StepConfig) -> Vec<f64> {
    let d = policy.dim;
    let [o_type, o_dir, o_str, o_car] = policy.offsets();
    let n_samples: usize = groups.iter().map(|g| g.rollout.samples.len()).sum();
    let mut grad = vec![0.0; policy.params.len()];
    let add = |grad: &mut [f64], off: usize, coef: f64, x: &[f64]| {
        if coef != 0.0 {
            grad[off..off + d].iter_mut().zip(x).for_each(|(g, v)| *g += coef * v);
        }
    };
    for g in groups {
        let x = &g.rollout.features;
        let h = policy.heads(x);
        let pt = h.type_probs();
        let pd = h.dir_probs();
        let ps = h.p_strong();
        for (s, adv) in g.rollout.samples.iter().zip(&g.advantages) {
            let ratio = (log_prob_of(&h, &s.action, policy.car_std) - s.log_prob).exp();
            // the min() picks the clipped branch only when it is smaller, and
            // the clipped branch has zero gradient
            let active = if *adv >= 0.0 { ratio <= 1.0 + cfg.clip_range } else { ratio >= 1.0 - cfg.clip_range };
            if !active {
                continue;
            }
            let c = ratio * adv / n_samples as f64;
            let t = s.action.event_type.index();
            for k in 0..N_TYPES {
                add(&mut grad, o_type + k * d, c * ((k == t) as u8 as f64 - pt[k]), x);
            }
            let di = direction_index(s.action.direction);
            for k in 0..N_DIRS {
                add(&mut grad, o_dir + k * d, c * ((k == di) as u8 as f64 - pd[k]), x);
            }
            let ys = (s.action.strength == Strength::Strong) as u8 as f64;
            add(&mut grad, o_str, c * (ys - ps), x);
            add(&mut grad, o_car, c * (s.action.car - h.car_mean) / policy.car_std, x);
        }
        let r = policy.reference_heads(x);
        let c = -cfg.kl_coeff / groups.len() as f64;
        let gt = kl_categorical_grad(h.type_logits, r.type_logits);
        for k in 0..N_TYPES {
            add(&mut grad, o_type + k * d, c * gt[k], x);
        }
        let gd = kl_categorical_grad(h.dir_logits, r.dir_logits);
        for k in 0..N_DIRS {
            add(&mut grad, o_dir + k * d, c * gd[k], x);
        }
        let gs = kl_categorical_grad([h.strength_logit, 0.0], [r.strength_logit, 0.0]);
        add(&mut grad, o_str, c * gs[0], x);
        add(&mut grad, o_car, c * (h.car_mean - r.car_mean) / policy.car_std, x);
    }
    grad
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub objective: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub clipped: bool,
}

/// One ascent step on the surrogate with global-norm gradient clipping.
pub fn policy_gradient_step(
    policy: &mut ToyPolicy,
    groups: &[ScoredGroup],
    cfg: &StepConfig,
) -> Result<StepDiagnostics, PolicyError> {
    if groups.is_empty() || groups.iter().all(|g| g.rollout.samples.is_empty()) {
        return Err(PolicyError::NoRollouts);
    }
    for g in groups {
        policy.check_dim(&g.rollout.features)?;
    }
    let mut grad = surrogate_gradient(policy, groups, cfg);
    let mut off = 0;
    for (name, k) in HEADS {
        let len = k * policy.dim;
        if grad[off..off + len].iter().any(|v| !v.is_finite()) {
            return Err(PolicyError::NonFiniteGradient(name));
        }
        off += len;
    }
    let objective = surrogate_objective(&policy.params, policy, groups, cfg);
    let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    let clipped = grad_norm > cfg.max_grad_norm;
    if clipped {
        let s = cfg.max_grad_norm / grad_norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    for (p, g) in policy.params.iter_mut().zip(&grad) {
        *p += cfg.learning_rate * g;
    }
    Ok(StepDiagnostics { objective, grad_norm, clipped })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSchedule {
    pub iterations: usize,
    pub group_size: usize,
    /// Events drawn per iteration.
    pub batch_events: usize,
    /// Gradient steps per batch; the ratio clip only matters when > 1.
    pub ppo_epochs: usize,
    pub normalize_by_std: bool,
    pub std_floor: f64,
    pub init_scale: f64,
    pub seed: u64,
    pub step: StepConfig,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        Self {
            iterations: 500,
            group_size: 8,
            batch_events: 16,
            ppo_epochs: 1,
            normalize_by_std: true,
            std_floor: 1e-6,
            init_scale: 0.01,
            seed: 11,
            step: StepConfig::default(),
        }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: &str| Err(PolicyError::InvalidSchedule(m.to_string()));
        if self.group_size < 2 {
            return Err(PolicyError::GroupTooSmall(self.group_size));
        }
        if self.batch_events == 0 || self.ppo_epochs == 0 {
            return bad("batch_events and ppo_epochs must be >= 1");
        }
        if !(self.std_floor > 0.0) {
            return bad("std_floor must be > 0");
        }
        let s = &self.step;
        if !(s.learning_rate >= 0.0 && s.kl_coeff >= 0.0 && s.max_grad_norm > 0.0 && s.clip_range > 0.0) {
            return bad("learning_rate, kl_coeff >= 0 and max_grad_norm, clip_range > 0 required");
        }
        Ok(())
    }
}

/// Held-out evaluation after an iteration (row 0 is the initial policy).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    /// Mean reward of the greedy prediction over the held-out events.
    pub mean_reward: f64,
    pub da: f64,
    pub eta: f64,
    /// Mean KL to the reference over the held-out events.
    pub kl: f64,
}

pub fn evaluate(policy: &ToyPolicy, events: &[ToyEvent], reward_cfg: &RewardConfig, iteration: usize) -> Result<TraceRow, PolicyError> {
    let mut reward = 0.0;
    let mut hits_dir = 0usize;
    let mut hits_type = 0usize;
    let mut kl = 0.0;
    for e in events {
        policy.check_dim(&e.features)?;
        let a = policy.greedy(&e.features);
        let b = compose_reward(&a.to_prediction(), &e.truth, reward_cfg)?;
        reward += b.total;
        hits_dir += (b.prediction.direction == b.actual_direction) as usize;
        hits_type += (a.event_type == e.truth.event_type) as usize;
        kl += policy.kl_to_reference(&e.features);
    }
    let n = events.len().max(1) as f64;
    Ok(TraceRow { iteration, mean_reward: reward / n, da: hits_dir as f64 / n, eta: hits_type as f64 / n, kl: kl / n })
}

/// Trains `policy` on `env.train` and evaluates on `env.holdout` after every
/// iteration. Group rollouts run through `exec`; the update is sequential.
pub fn train(
    env: &ToyEnvironment,
    policy: &mut ToyPolicy,
    schedule: &TrainSchedule,
    reward_cfg: &RewardConfig,
    exec: Exec,
) -> Result<Vec<TraceRow>, PolicyError> {
    schedule.validate()?;
    reward_cfg.validate()?;
    if env.train.is_empty() {
        return Err(PolicyError::NoRollouts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(1);
    let mut trace = vec![evaluate(policy, &env.holdout, reward_cfg, 0)?];
    for it in 1..=schedule.iterations {
        let draws: Vec<(usize, u64)> = (0..schedule.batch_events)
            .map(|_| (rng.random_range(0..env.train.len()), rng.random::<u64>()))
            .collect();
        let snapshot: &ToyPolicy = policy;
        let groups = exec
            .map(&draws, |&(i, seed)| {
                let rollout = sample_group(snapshot, &env.train[i], schedule.group_size, seed, reward_cfg)?;
                let advantages = group_advantages(&rollout.rewards(), schedule.normalize_by_std, schedule.std_floor);
                Ok(ScoredGroup { rollout, advantages })
            })
            .into_iter()
            .collect::<Result<Vec<_>, PolicyError>>()?;
        for _ in 0..schedule.ppo_epochs {
            policy_gradient_step(policy, &groups, &schedule.step)?;
        }
        trace.push(evaluate(policy, &env.holdout, reward_cfg, it)?);
        if it % 100 == 0 {
            let r = trace.last().expect("non-empty");
            log::debug!("iteration {it}: reward {:.4} da {:.3} eta {:.3} kl {:.4}", r.mean_reward, r.da, r.eta, r.kl);
        }
    }
    Ok(trace)
}

pub const TRACE_HEADER: [&str; 5] = ["iteration", "mean_reward", "da", "eta", "kl"];

pub fn write_trace<W: std::io::Write>(trace: &[TraceRow], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_HEADER)?;
    for r in trace {
        w.write_record([
            r.iteration.to_string(),
            format!("{:.10}", r.mean_reward),
            format!("{:.6}", r.da),
            format!("{:.6}", r.eta),
            format!("{:.10}", r.kl),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Trailing moving average with window `w` (shorter at the start).
pub fn moving_average(xs: &[f64], w: usize) -> Vec<f64> {
    let w = w.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= w {
            sum -= xs[i - w];
        }
        out.push(sum / (i + 1).min(w) as f64);
    }
    out
}
