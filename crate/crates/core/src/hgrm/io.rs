//! Line-delimited JSON scoring: one `(prediction, truth)` pair per input
//! line, one breakdown per output line.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{compose_reward, Prediction, RewardBreakdown, RewardConfig, RewardError, Truth};
use crate::Exec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardPair {
    #[serde(default)]
    pub id: Option<String>,
    pub prediction: Prediction,
    pub truth: Truth,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredPair {
    pub id: String,
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
}

/// Parses JSONL pairs; blank lines are skipped. Pairs without an id get
/// `line-N`.
pub fn read_pairs<R: BufRead>(input: R) -> Result<Vec<RewardPair>, RewardError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut pair: RewardPair =
            serde_json::from_str(&line).map_err(|e| RewardError::Parse { line: i + 1, msg: e.to_string() })?;
        pair.id.get_or_insert_with(|| format!("line-{}", i + 1));
        out.push(pair);
    }
    Ok(out)
}

/// Scores all pairs, keeping input order. The first failing pair aborts the
/// batch.
pub fn score_pairs(pairs: &[RewardPair], cfg: &RewardConfig, exec: Exec) -> Result<Vec<ScoredPair>, RewardError> {
    cfg.validate()?;
    exec.map(pairs, |p| {
        compose_reward(&p.prediction, &p.truth, cfg).map(|breakdown| ScoredPair {
            id: p.id.clone().unwrap_or_default(),
            breakdown,
        })
    })
    .into_iter()
    .collect()
}

pub fn write_breakdowns<W: Write>(scored: &[ScoredPair], mut out: W) -> Result<(), RewardError> {
    for s in scored {
        serde_json::to_writer(&mut out, s).map_err(std::io::Error::other)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}
