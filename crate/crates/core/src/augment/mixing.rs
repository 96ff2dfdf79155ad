use std::collections::{BTreeMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rng;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainSample {
    pub sample_id: String,
    /// Path of the real image.
    pub path: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Real,
    Rendered,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingEntry {
    pub sample_id: String,
    pub chosen_path: String,
    pub source: Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingPlan {
    pub epoch: u64,
    pub entries: Vec<MixingEntry>,
}

const STAGE_MIX: &str = "mix";

/// Decides, per epoch and sample, whether the rendered counterpart replaces
/// the real image. Each eligible sample draws once from its own stream keyed
/// by `(seed, sample_id, epoch)`.
pub fn plan_mixing(
    train_samples: &[TrainSample],
    rendered_map: &BTreeMap<String, String>,
    p: f64,
    seed: u64,
    epochs: u64,
) -> Result<Vec<MixingPlan>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation("mixing", format!("p = {p} is not a probability")));
    }
    let mut ids = HashSet::new();
    for s in train_samples {
        if !ids.insert(s.sample_id.as_str()) {
            return Err(Error::validation(
                format!("sample {}", s.sample_id),
                "duplicate sample_id",
            ));
        }
    }
    if let Some(k) = rendered_map.keys().find(|k| !ids.contains(k.as_str())) {
        return Err(Error::validation(
            format!("rendered sample {k}"),
            "not among the training samples",
        ));
    }

    Ok((0..epochs)
        .map(|epoch| MixingPlan {
            epoch,
            entries: train_samples
                .iter()
                .map(|s| match rendered_map.get(&s.sample_id) {
                    Some(path) if rng::stream(seed, &s.sample_id, epoch, STAGE_MIX).random::<f64>() < p => {
                        MixingEntry {
                            sample_id: s.sample_id.clone(),
                            chosen_path: path.clone(),
                            source: Source::Rendered,
                        }
                    }
                    _ => MixingEntry {
                        sample_id: s.sample_id.clone(),
                        chosen_path: s.path.clone(),
                        source: Source::Real,
                    },
                })
                .collect(),
        })
        .collect())
}

#[derive(Serialize)]
struct JsonLine<'a> {
    epoch: u64,
    sample_id: &'a str,
    chosen_path: &'a str,
    source: Source,
}

/// One JSON object per entry and line, epochs in order.
pub fn mixing_plan_jsonl(plans: &[MixingPlan]) -> String {
    let mut out = String::new();
    for plan in plans {
        for e in &plan.entries {
            let line = JsonLine {
                epoch: plan.epoch,
                sample_id: &e.sample_id,
                chosen_path: &e.chosen_path,
                source: e.source,
            };
            out.push_str(&serde_json::to_string(&line).expect("entry serializes"));
            out.push('\n');
        }
    }
    out
}
