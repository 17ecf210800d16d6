//! Per-episode metrics and their CSV form.

use std::io::{BufRead, Write};
use std::path::Path;

use crate::agent::Variant;
use crate::error::{LabError, Result};
use crate::gridsim::{DoneCause, WorldId};

pub const CSV_HEADER: &str =
    "episode,variant,world,seed,ext_reward,pseudo_reward,length,done_cause,loss_ac,loss_sp,loss_rp,loss_ap";

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub variant: Variant,
    pub world: WorldId,
    pub seed: u64,
    pub ext_reward: f64,
    pub pseudo_reward: f64,
    pub length: usize,
    pub done_cause: DoneCause,
    /// Mean over the updates made during the episode.
    pub loss_ac: f64,
    pub loss_sp: f64,
    pub loss_rp: f64,
    pub loss_ap: f64,
}

impl EpisodeRecord {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            self.episode,
            self.variant,
            self.world,
            self.seed,
            self.ext_reward,
            self.pseudo_reward,
            self.length,
            self.done_cause,
            self.loss_ac,
            self.loss_sp,
            self.loss_rp,
            self.loss_ap
        )
    }

    pub fn from_csv(line: &str) -> std::result::Result<Self, String> {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(format!("expected 12 fields, found {}", f.len()));
        }
        fn p<T: std::str::FromStr>(s: &str, what: &str) -> std::result::Result<T, String> {
            s.parse().map_err(|_| format!("bad {what} {s:?}"))
        }
        Ok(Self {
            episode: p(f[0], "episode")?,
            variant: f[1].parse()?,
            world: f[2]
                .parse()
                .map_err(|e: crate::gridsim::MapError| e.to_string())?,
            seed: p(f[3], "seed")?,
            ext_reward: p(f[4], "ext_reward")?,
            pseudo_reward: p(f[5], "pseudo_reward")?,
            length: p(f[6], "length")?,
            done_cause: f[7].parse()?,
            loss_ac: p(f[8], "loss_ac")?,
            loss_sp: p(f[9], "loss_sp")?,
            loss_rp: p(f[10], "loss_rp")?,
            loss_ap: p(f[11], "loss_ap")?,
        })
    }
}

/// Append-only episode log of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Metrics {
    pub episodes: Vec<EpisodeRecord>,
    /// Wall-clock seconds spent training; kept out of the CSV so that
    /// reruns produce identical files.
    pub wall_clock_secs: f64,
}

impl Metrics {
    pub fn push(&mut self, rec: EpisodeRecord) {
        self.episodes.push(rec);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    /// Mean external reward over the last `n` episodes.
    pub fn tail_mean_reward(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter().map(|r| r.ext_reward).sum::<f64>() / tail.len() as f64
    }

    /// Fraction of the last `n` episodes that reached the goal.
    pub fn tail_goal_rate(&self, n: usize) -> f64 {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        if tail.is_empty() {
            return 0.0;
        }
        tail.iter()
            .filter(|r| r.done_cause == DoneCause::Goal)
            .count() as f64
            / tail.len() as f64
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.episodes {
            writeln!(out, "{}", r.to_csv())?;
        }
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| LabError::io(path, e))
    }

    pub fn read_csv<R: BufRead>(input: R) -> std::result::Result<Self, String> {
        let mut lines = input.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h.trim() == CSV_HEADER => {}
            _ => return Err("missing metrics header".into()),
        }
        let mut m = Metrics::default();
        for (i, line) in lines {
            let line = line.map_err(|e| e.to_string())?;
            if line.trim().is_empty() {
                continue;
            }
            m.push(
                EpisodeRecord::from_csv(line.trim()).map_err(|e| format!("line {}: {e}", i + 1))?,
            );
        }
        Ok(m)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| LabError::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
            .map_err(|e| LabError::Invalid(format!("{}: {e}", path.display())))
    }
}
