//! Instance files and seeded instance generators.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::grid::{PixelGrid, GRID_SIZE};
use super::{check_instance, DrawingInstance, Flow, ReferenceInstance, TabooInstance, WordPool, WordleInstance};
use crate::engine::GameInstance;

pub const INSTANCE_FILE_VERSION: u32 = 1;
const DEFAULT_EXPERIMENT: &str = "default";

pub(crate) fn params_to<T: DeserializeOwned>(params: &BTreeMap<String, Value>) -> Result<T, String> {
    let object: serde_json::Map<String, Value> = params.clone().into_iter().collect();
    serde_json::from_value(Value::Object(object)).map_err(|e| format!("bad instance params: {e}"))
}

fn params_from<T: Serialize>(value: &T) -> BTreeMap<String, Value> {
    match serde_json::to_value(value).expect("instance params serialize") {
        Value::Object(map) => map.into_iter().collect(),
        _ => unreachable!("instance params are structs"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEntry {
    pub instance_id: u64,
    #[serde(flatten)]
    pub params: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub instances: Vec<InstanceEntry>,
}

/// On-disk instance collection for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub game: String,
    pub version: u32,
    pub experiments: Vec<Experiment>,
}

#[derive(Debug, Error)]
pub enum InstanceFileError {
    #[error("cannot read instance file {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed instance file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported instance file version {0}")]
    Version(u32),
    #[error("duplicate instance_id {id} in experiment '{experiment}'")]
    DuplicateId { experiment: String, id: u64 },
    #[error("instance {id} of experiment '{experiment}': {reason}")]
    Invalid {
        experiment: String,
        id: u64,
        reason: String,
    },
}

impl InstanceFile {
    pub fn from_json(text: &str) -> Result<Self, InstanceFileError> {
        let file: InstanceFile = serde_json::from_str(text)?;
        if file.version != INSTANCE_FILE_VERSION {
            return Err(InstanceFileError::Version(file.version));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, InstanceFileError> {
        let text = std::fs::read_to_string(path).map_err(|source| InstanceFileError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance file serializes");
        s.push('\n');
        s
    }

    /// Flattens into engine instances, checking ids and params against `flow`.
    pub fn instances(&self, flow: Flow) -> Result<Vec<GameInstance>, InstanceFileError> {
        let mut out = Vec::new();
        for exp in &self.experiments {
            let mut seen = BTreeSet::new();
            for entry in &exp.instances {
                if !seen.insert(entry.instance_id) {
                    return Err(InstanceFileError::DuplicateId {
                        experiment: exp.name.clone(),
                        id: entry.instance_id,
                    });
                }
                let instance = GameInstance {
                    game_name: self.game.clone(),
                    experiment_name: exp.name.clone(),
                    instance_id: entry.instance_id,
                    params: entry.params.clone(),
                };
                check_instance(flow, &instance).map_err(|reason| InstanceFileError::Invalid {
                    experiment: exp.name.clone(),
                    id: entry.instance_id,
                    reason,
                })?;
                out.push(instance);
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenerateError {
    #[error("requested {requested} instances but the pool has only {available} eligible words")]
    PoolTooSmall { requested: usize, available: usize },
    #[error("{0} instances are drawn from a word pool; none was given")]
    MissingPool(Flow),
}

fn random_target(rng: &mut ChaCha8Rng) -> PixelGrid {
    let cells: Vec<usize> = (0..GRID_SIZE * GRID_SIZE).collect();
    let count = rng.random_range(4..=12);
    let mut grid = PixelGrid::empty();
    for &idx in cells.choose_multiple(rng, count) {
        grid.set(idx / GRID_SIZE, idx % GRID_SIZE, true);
    }
    grid
}

/// Flips 2 to 6 distinct cells of `target`.
fn mutate(target: &PixelGrid, rng: &mut ChaCha8Rng) -> PixelGrid {
    let cells: Vec<usize> = (0..GRID_SIZE * GRID_SIZE).collect();
    let flips = rng.random_range(2..=6);
    let mut grid = *target;
    for &idx in cells.choose_multiple(rng, flips) {
        grid.flip(idx / GRID_SIZE, idx % GRID_SIZE);
    }
    grid
}

fn reference_instance(rng: &mut ChaCha8Rng) -> ReferenceInstance {
    let target = random_target(rng);
    let first = loop {
        let d = mutate(&target, rng);
        if d.filled_count() > 0 {
            break d;
        }
    };
    let second = loop {
        let d = mutate(&target, rng);
        if d.filled_count() > 0 && d.distance(&first) >= 2 {
            break d;
        }
    };
    let mut order = [1u8, 2, 3];
    order.shuffle(rng);
    ReferenceInstance::new([target, first, second], order)
}

/// Generates `n` instances of `flow` as a single-experiment instance file.
///
/// Word games draw `n` distinct eligible entries from `pool`; grid games
/// sample grids. Output is a pure function of the arguments.
pub fn generate_instances(
    flow: Flow,
    n: usize,
    seed: u64,
    pool: Option<&WordPool>,
) -> Result<InstanceFile, GenerateError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<BTreeMap<String, Value>> = if flow.uses_word_pool() {
        let pool = pool.ok_or(GenerateError::MissingPool(flow))?;
        let eligible = pool.eligible(flow);
        if n > eligible.len() {
            return Err(GenerateError::PoolTooSmall {
                requested: n,
                available: eligible.len(),
            });
        }
        eligible
            .choose_multiple(&mut rng, n)
            .map(|entry| match flow {
                Flow::Taboo => params_from(&TabooInstance {
                    target_word: entry.word.clone(),
                    related_words: entry.related_words(),
                }),
                Flow::Wordle => params_from(&WordleInstance {
                    target_word: entry.word.clone(),
                    clue: None,
                }),
                _ => params_from(&WordleInstance {
                    target_word: entry.word.clone(),
                    clue: entry.extra.clone(),
                }),
            })
            .collect()
    } else {
        (0..n)
            .map(|_| match flow {
                Flow::Reference => params_from(&reference_instance(&mut rng)),
                _ => params_from(&DrawingInstance {
                    target_grid: random_target(&mut rng),
                }),
            })
            .collect()
    };
    Ok(InstanceFile {
        game: flow.as_str().to_string(),
        version: INSTANCE_FILE_VERSION,
        experiments: vec![Experiment {
            name: DEFAULT_EXPERIMENT.to_string(),
            instances: params
                .into_iter()
                .enumerate()
                .map(|(i, params)| InstanceEntry {
                    instance_id: i as u64,
                    params,
                })
                .collect(),
        }],
    })
}
