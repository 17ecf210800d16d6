//! Training configuration and its flat `key = value` file format.
//!
//! ```text
//! # comments and blank lines are ignored
//! gamma = 0.95
//! lr = 0.0001
//! seeds = 1,2,3
//! conv_filters = 16
//! ```

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::agent::{AuxConfig, NetConfig};
use crate::error::{LabError, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub gamma: f64,
    pub lr: f64,
    pub alpha: f64,
    pub beta: f64,
    pub aux: AuxConfig,
    pub episodes: usize,
    pub episode_cap: usize,
    pub seeds: Vec<u64>,
    pub eval_episodes: usize,
    /// Steps per on-policy update.
    pub rollout: usize,
    pub checkpoint_every: usize,
    /// Global gradient-norm clip; 0 disables.
    pub max_grad_norm: f64,
    /// Multiplies the modified reward before returns are formed.
    pub reward_scale: f64,
    pub net: NetConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.95,
            lr: 1e-4,
            alpha: 0.5,
            beta: 0.01,
            aux: AuxConfig::default(),
            episodes: 4000,
            episode_cap: 500,
            seeds: vec![1, 2, 3],
            eval_episodes: 500,
            rollout: 30,
            checkpoint_every: 500,
            max_grad_norm: 0.0,
            reward_scale: 1.0,
            net: NetConfig::default(),
        }
    }
}

fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
}

pub fn parse_seeds(v: &str) -> std::result::Result<Vec<u64>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad seed {s:?}")))
        .collect()
}

impl TrainConfig {
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key {
            "gamma" => self.gamma = num(key, v)?,
            "lr" => self.lr = num(key, v)?,
            "alpha" => self.alpha = num(key, v)?,
            "beta" => self.beta = num(key, v)?,
            "eta_sp" => self.aux.eta_sp = num(key, v)?,
            "eta_rp" => self.aux.eta_rp = num(key, v)?,
            "lambda_sp" => self.aux.lambda_sp = num(key, v)?,
            "lambda_rp" => self.aux.lambda_rp = num(key, v)?,
            "lambda_ap" => self.aux.lambda_ap = num(key, v)?,
            "overflow_value" => self.aux.overflow_value = num(key, v)?,
            "pseudo_rewards" => self.aux.pseudo_rewards = num(key, v)?,
            "episodes" => self.episodes = num(key, v)?,
            "episode_cap" => self.episode_cap = num(key, v)?,
            "seeds" => self.seeds = parse_seeds(v)?,
            "eval_episodes" => self.eval_episodes = num(key, v)?,
            "rollout" => self.rollout = num(key, v)?,
            "checkpoint_every" => self.checkpoint_every = num(key, v)?,
            "max_grad_norm" => self.max_grad_norm = num(key, v)?,
            "reward_scale" => self.reward_scale = num(key, v)?,
            _ => {
                if !self.net.set(key, v)? {
                    return Err(format!("unknown key {key:?}"));
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| LabError::Config { line: i + 1, msg };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            cfg.set(k.trim(), v).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text)
    }

    // Negated comparisons also reject NaN.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(LabError::Invalid(msg.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must be in (0, 1]");
        }
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("alpha and beta must be nonnegative");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        let a = &self.aux;
        if !(a.eta_sp > 0.0 && a.eta_rp > 0.0) {
            return bad("eta must be positive");
        }
        if [a.lambda_sp, a.lambda_rp, a.lambda_ap]
            .iter()
            .any(|l| !(0.0..=1.0).contains(l))
        {
            return bad("lambda values must be in [0, 1]");
        }
        if self.episode_cap == 0 || self.rollout == 0 {
            return bad("episode_cap and rollout must be positive");
        }
        if !(self.reward_scale > 0.0) {
            return bad("reward_scale must be positive");
        }
        if !(self.max_grad_norm >= 0.0) {
            return bad("max_grad_norm must be nonnegative");
        }
        self.net.validate().map_err(LabError::Invalid)
    }

    /// Serializes every field; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let a = &self.aux;
        let seeds: Vec<String> = self.seeds.iter().map(u64::to_string).collect();
        let mut out = String::new();
        let pairs: Vec<(&str, String)> = vec![
            ("gamma", format!("{:?}", self.gamma)),
            ("lr", format!("{:?}", self.lr)),
            ("alpha", format!("{:?}", self.alpha)),
            ("beta", format!("{:?}", self.beta)),
            ("eta_sp", format!("{:?}", a.eta_sp)),
            ("eta_rp", format!("{:?}", a.eta_rp)),
            ("lambda_sp", format!("{:?}", a.lambda_sp)),
            ("lambda_rp", format!("{:?}", a.lambda_rp)),
            ("lambda_ap", format!("{:?}", a.lambda_ap)),
            ("overflow_value", format!("{:?}", a.overflow_value)),
            ("pseudo_rewards", a.pseudo_rewards.to_string()),
            ("episodes", self.episodes.to_string()),
            ("episode_cap", self.episode_cap.to_string()),
            ("seeds", seeds.join(",")),
            ("eval_episodes", self.eval_episodes.to_string()),
            ("rollout", self.rollout.to_string()),
            ("checkpoint_every", self.checkpoint_every.to_string()),
            ("max_grad_norm", format!("{:?}", self.max_grad_norm)),
            ("reward_scale", format!("{:?}", self.reward_scale)),
        ];
        for (k, v) in pairs.into_iter().chain(self.net.to_pairs()) {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}
