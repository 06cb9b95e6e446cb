use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use super::{EmbeddingConfig, EmbeddingError};
use crate::gcrl::{run_episode, GcrlAgent, GcrlError, TrainConfig};
use crate::gridworld::{state_features, state_features_len, GridState, Layout, StateKey};

/// Where a dataset state came from. `tick` counts steps from the start of its episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    pub episode: u32,
    pub tick: u32,
    pub key: StateKey,
}

/// Rollout states grouped by episode, each with its embedding features.
/// Records of one episode are contiguous and ordered by tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<Record>,
    features: Vec<Vec<f64>>,
    episodes: Vec<Range<usize>>,
    feature_len: usize,
    /// Joint environment steps spent collecting the rollouts.
    pub env_steps: u64,
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    layout_hash: String,
    env_steps: u64,
    episodes: Vec<Vec<StateKey>>,
}

impl Dataset {
    pub fn empty(feature_len: usize) -> Self {
        Self {
            records: Vec::new(),
            features: Vec::new(),
            episodes: Vec::new(),
            feature_len,
            env_steps: 0,
        }
    }

    /// Appends one episode of `(key, features)` pairs in tick order.
    pub fn push_episode(&mut self, states: Vec<(StateKey, Vec<f64>)>) -> Result<(), EmbeddingError> {
        if let Some((_, f)) = states.iter().find(|(_, f)| f.len() != self.feature_len) {
            return Err(EmbeddingError::InputMismatch {
                expected: self.feature_len,
                found: f.len(),
            });
        }
        let episode = self.episodes.len() as u32;
        let start = self.records.len();
        for (tick, (key, f)) in states.into_iter().enumerate() {
            self.records.push(Record {
                episode,
                tick: tick as u32,
                key,
            });
            self.features.push(f);
        }
        self.episodes.push(start..self.records.len());
        Ok(())
    }

    /// One episode per state sequence, featurized with [`state_features`].
    pub fn from_trajectories(layout: &Layout, trajectories: &[Vec<GridState>]) -> Self {
        let mut data = Self::empty(state_features_len(layout));
        for t in trajectories {
            let states = t.iter().map(|s| (s.key(), state_features(layout, s))).collect();
            data.push_episode(states).expect("state_features has a fixed length per layout");
        }
        data
    }

    /// Appends the episodes of `other`, renumbered after this dataset's, and adds its step count.
    pub fn append(&mut self, other: Dataset) -> Result<(), EmbeddingError> {
        let mut features = other.features.into_iter();
        for ep in other.episodes {
            let states = other.records[ep].iter().map(|r| (r.key.clone(), features.next().unwrap_or_default())).collect();
            self.push_episode(states)?;
        }
        self.env_steps += other.env_steps;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn num_episodes(&self) -> usize {
        self.episodes.len()
    }

    /// Record indices of episode `e`.
    pub fn episode(&self, e: usize) -> Range<usize> {
        self.episodes[e].clone()
    }

    pub fn distinct_keys(&self) -> usize {
        self.records.iter().map(|r| &r.key).collect::<std::collections::HashSet<_>>().len()
    }

    /// True when `a` and `b` are in the same episode at most `window` ticks apart.
    pub fn window_mates(&self, a: usize, b: usize, window: u32) -> bool {
        let (ra, rb) = (&self.records[a], &self.records[b]);
        ra.episode == rb.episode && ra.tick.abs_diff(rb.tick) <= window
    }

    /// Hex SHA-256 over the episode structure, keys and step count.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.env_steps.to_le_bytes());
        for ep in &self.episodes {
            h.update((ep.len() as u64).to_le_bytes());
            for r in &self.records[ep.clone()] {
                for x in &r.key.0 {
                    h.update(x.to_le_bytes());
                }
                h.update([0xff, 0xff]);
            }
        }
        hex::encode(h.finalize())
    }

    /// Writes the keys of every episode as JSON; features are rebuilt on load.
    pub fn save(&self, path: &Path, layout: &Layout) -> Result<(), EmbeddingError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = DatasetFile {
            layout_hash: layout.digest(),
            env_steps: self.env_steps,
            episodes: self
                .episodes
                .iter()
                .map(|ep| self.records[ep.clone()].iter().map(|r| r.key.clone()).collect())
                .collect(),
        };
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer(&mut w, &file)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path, layout: &Layout) -> Result<Self, EmbeddingError> {
        let file: DatasetFile = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if file.layout_hash != layout.digest() {
            return Err(EmbeddingError::InvalidConfig(format!(
                "dataset was built on layout {} but {} was given",
                file.layout_hash,
                layout.digest()
            )));
        }
        let mut data = Self::empty(state_features_len(layout));
        data.env_steps = file.env_steps;
        for keys in file.episodes {
            let mut states = Vec::with_capacity(keys.len());
            for (tick, key) in keys.into_iter().enumerate() {
                let s = GridState::from_key(layout, &key, tick as u32)?;
                states.push((key, state_features(layout, &s)));
            }
            data.push_episode(states)?;
        }
        Ok(data)
    }
}

/// Collects `episodes` goal-reaching rollouts of `agent`, each starting from a
/// random expert state with a random-walk goal, and stores every visited state.
pub fn build_dataset(
    agent: &GcrlAgent,
    kitchen: &crate::gridworld::Kitchen,
    expert_states: &[GridState],
    cfg: &TrainConfig,
    episodes: usize,
    seed: u64,
) -> Result<Dataset, EmbeddingError> {
    let layout = &kitchen.layout;
    let mut data = Dataset::empty(state_features_len(layout));
    if episodes == 0 {
        return Ok(data);
    }
    if expert_states.is_empty() {
        return Err(GcrlError::EmptyDemonstration.into());
    }
    agent.check_kitchen(kitchen)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sampler = cfg.sampler();
    for _ in 0..episodes {
        let start = expert_states[rng.gen_range(0..expert_states.len())].clone();
        let goal = sampler.sample(kitchen, &start, &mut rng);
        let ep = run_episode(agent, kitchen, start, Some(goal), cfg.horizon as u64, cfg, &mut rng, None)?;
        data.env_steps += ep.len() as u64;
        let states = ep.states.iter().map(|s| (s.key(), state_features(layout, s))).collect();
        data.push_episode(states)?;
    }
    Ok(data)
}

/// One anchor with its positive and negatives, as dataset record indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContrastiveBatch {
    pub anchor: usize,
    pub positive: usize,
    pub negatives: Vec<usize>,
}

impl ContrastiveBatch {
    /// The candidate set: the positive first, then the negatives.
    pub fn candidates(&self) -> impl Iterator<Item = usize> + '_ {
        std::iter::once(self.positive).chain(self.negatives.iter().copied())
    }
}

/// Draws anchors with probability inversely proportional to the frequency of
/// their state key, so rare and common states are seen equally often.
#[derive(Debug, Clone)]
pub struct BalancedSampler<'a> {
    data: &'a Dataset,
    window: u32,
    batch_size: usize,
    negatives: usize,
    eligible: Vec<usize>,
    weights: WeightedIndex<f64>,
}

impl<'a> BalancedSampler<'a> {
    pub fn new(data: &'a Dataset, cfg: &EmbeddingConfig) -> Result<Self, EmbeddingError> {
        cfg.validate()?;
        let mut counts: HashMap<&StateKey, usize> = HashMap::new();
        for r in &data.records {
            *counts.entry(&r.key).or_default() += 1;
        }
        let eligible: Vec<usize> = data.episodes.iter().filter(|ep| ep.len() >= 2).flat_map(|ep| ep.clone()).collect();
        if eligible.is_empty() {
            return Err(EmbeddingError::DatasetTooSmall("no episode has two or more states".into()));
        }
        let weights = WeightedIndex::new(eligible.iter().map(|&i| 1.0 / counts[&data.records[i].key] as f64))
            .map_err(|e| EmbeddingError::DatasetTooSmall(e.to_string()))?;
        Ok(Self {
            data,
            window: cfg.window,
            batch_size: cfg.batch_size,
            negatives: cfg.negatives,
            eligible,
            weights,
        })
    }

    pub fn anchor<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.eligible[self.weights.sample(rng)]
    }

    /// A state of the anchor's episode at most `window` ticks away, uniformly.
    pub fn positive<R: Rng + ?Sized>(&self, anchor: usize, rng: &mut R) -> usize {
        let ep = &self.data.episodes[self.data.records[anchor].episode as usize];
        let w = self.window as usize;
        let lo = anchor.saturating_sub(w).max(ep.start);
        let hi = (anchor + w).min(ep.end - 1);
        let j = rng.gen_range(lo..hi);
        if j >= anchor {
            j + 1
        } else {
            j
        }
    }

    /// One batch. Negatives of each anchor are drawn without replacement from
    /// the other anchors of the batch that are not its window-mates.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<ContrastiveBatch> {
        let anchors: Vec<usize> = (0..self.batch_size).map(|_| self.anchor(rng)).collect();
        let mut out = Vec::with_capacity(anchors.len());
        for (i, &a) in anchors.iter().enumerate() {
            let positive = self.positive(a, rng);
            let pool: Vec<usize> = anchors
                .iter()
                .enumerate()
                .filter(|&(j, &b)| j != i && !self.data.window_mates(a, b, self.window))
                .map(|(_, &b)| b)
                .collect();
            let m = self.negatives.min(pool.len());
            let negatives = index::sample(rng, pool.len(), m).into_iter().map(|k| pool[k]).collect();
            out.push(ContrastiveBatch {
                anchor: a,
                positive,
                negatives,
            });
        }
        out
    }
}
