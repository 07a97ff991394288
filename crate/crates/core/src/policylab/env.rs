//! Synthetic events for the toy policy.
//!
//! Each event draws a type uniformly; its car is the type's mean effect
//! scaled by `1 + jitter * U(-1, 1)`, so the type fixes the sign. Features
//! are the one-hot type, a noisy unsigned magnitude cue and a bias.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::PolicyError;
use crate::hgrm::Truth;
use crate::labeling::EventType;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToyEnvConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_holdout: usize,
    /// Mean car of each event type, in taxonomy order.
    pub type_means: [f64; EventType::COUNT],
    pub magnitude_jitter: f64,
    /// Std of the noise added to the magnitude cue.
    pub cue_noise: f64,
    /// Magnitude that maps to a cue of 1.
    pub cue_scale: f64,
}

impl Default for ToyEnvConfig {
    fn default() -> Self {
        Self {
            seed: 5,
            n_train: 512,
            n_holdout: 256,
            type_means: [-0.015, 0.02, 0.012, 0.025, -0.05, 0.008, -0.02, -0.035, 0.02, 0.015],
            magnitude_jitter: 0.5,
            cue_noise: 0.1,
            cue_scale: 0.05,
        }
    }
}

impl ToyEnvConfig {
    pub fn validate(&self) -> Result<(), PolicyError> {
        let bad = |m: String| Err(PolicyError::InvalidEnv(m));
        if self.n_train == 0 || self.n_holdout == 0 {
            return bad("n_train and n_holdout must be positive".into());
        }
        if let Some(m) = self.type_means.iter().find(|m| !m.is_finite()) {
            return bad(format!("type_means contains non-finite value {m}"));
        }
        if !(0.0..1.0).contains(&self.magnitude_jitter) {
            return bad(format!("magnitude_jitter must be in [0, 1), got {}", self.magnitude_jitter));
        }
        if !(self.cue_noise >= 0.0 && self.cue_noise.is_finite()) {
            return bad(format!("cue_noise must be >= 0, got {}", self.cue_noise));
        }
        if !(self.cue_scale > 0.0 && self.cue_scale.is_finite()) {
            return bad(format!("cue_scale must be > 0, got {}", self.cue_scale));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEvent {
    pub features: Vec<f64>,
    pub truth: Truth,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyEnvironment {
    pub config: ToyEnvConfig,
    pub train: Vec<ToyEvent>,
    pub holdout: Vec<ToyEvent>,
}

impl ToyEnvironment {
    pub const FEATURE_DIM: usize = EventType::COUNT + 2;

    pub fn generate(config: &ToyEnvConfig) -> ToyEnvironment {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut draw = |n: usize| -> Vec<ToyEvent> { (0..n).map(|_| Self::draw_event(config, &mut rng)).collect() };
        let train = draw(config.n_train);
        let holdout = draw(config.n_holdout);
        ToyEnvironment { config: config.clone(), train, holdout }
    }

    fn draw_event(config: &ToyEnvConfig, rng: &mut ChaCha8Rng) -> ToyEvent {
        let t = rng.random_range(0..EventType::COUNT);
        let u: f64 = rng.random_range(-1.0..=1.0);
        let car = config.type_means[t] * (1.0 + config.magnitude_jitter * u);
        let z: f64 = rng.sample(StandardNormal);
        let mut features = vec![0.0; Self::FEATURE_DIM];
        features[t] = 1.0;
        features[EventType::COUNT] = car.abs() / config.cue_scale + config.cue_noise * z;
        features[EventType::COUNT + 1] = 1.0;
        ToyEvent { features, truth: Truth { car, event_type: EventType::ALL[t] } }
    }
}
