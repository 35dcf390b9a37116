//! Malicious proposer and voter behaviors, and how they are assigned to a
//! population.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ParamVector, SCALE};
use crate::node::NodeId;
use crate::seed;
use crate::task::{honest_train, ClientDataset, TaskSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProposerStrategy {
    #[default]
    Honest,
    /// Adds `N(0, sigma^2)` noise to the current global model.
    GaussianNoise { sigma: f64 },
    /// Moves `lambda` times the honest update in the opposite direction.
    SignFlip { lambda: f64 },
    /// Trains honestly on negated targets.
    LabelFlip,
    /// Resubmits the global model from before the last accepted round.
    StaleDuplicate,
    /// Never submits.
    Dropout,
}

impl ProposerStrategy {
    pub fn is_honest(&self) -> bool {
        matches!(self, ProposerStrategy::Honest)
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        match *self {
            ProposerStrategy::GaussianNoise { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::config(format!("{field}.sigma"), "must be finite and > 0"))
            }
            ProposerStrategy::SignFlip { lambda } if !(lambda > 0.0 && lambda.is_finite()) => {
                Err(Error::config(format!("{field}.lambda"), "must be finite and > 0"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VoterStrategy {
    #[default]
    Honest,
    Inverter,
    AlwaysApprove,
    AlwaysReject,
    Abstain,
}

impl VoterStrategy {
    pub fn is_honest(&self) -> bool {
        matches!(self, VoterStrategy::Honest)
    }
}

/// A proposer's contribution for one round; `None` means no submission.
pub fn propose(
    strategy: &ProposerStrategy,
    global: &ParamVector,
    prev_global: &ParamVector,
    data: &ClientDataset,
    task: &TaskSpec,
    rng: &mut ChaCha8Rng,
) -> Result<Option<ParamVector>> {
    let submission = match *strategy {
        ProposerStrategy::Honest => honest_train(global, data, task)?,
        ProposerStrategy::GaussianNoise { sigma } => {
            let normal = Normal::new(0.0, sigma)
                .map_err(|e| Error::config("adversary.proposer_strategy.sigma", e.to_string()))?;
            let noise: Vec<f64> = (0..global.dim()).map(|_| normal.sample(rng)).collect();
            let noise = ParamVector::quantize(&noise)?;
            ParamVector::from_raw(
                global.values().iter().zip(noise.values()).map(|(g, n)| g + n).collect(),
            )
        }
        ProposerStrategy::SignFlip { lambda } => {
            let honest = honest_train(global, data, task)?;
            let flipped = global
                .values()
                .iter()
                .zip(honest.values())
                .enumerate()
                .map(|(index, (&g, &h))| {
                    let step = (lambda * (h - g) as f64 + 0.5).floor();
                    let value = g as f64 - step;
                    if value.abs() >= (1u64 << 62) as f64 {
                        return Err(Error::OutOfRange { index, value: value / SCALE });
                    }
                    Ok(g - step as i64)
                })
                .collect::<Result<Vec<_>>>()?;
            ParamVector::from_raw(flipped)
        }
        ProposerStrategy::LabelFlip => honest_train(global, &data.with_flipped_targets(), task)?,
        ProposerStrategy::StaleDuplicate => prev_global.clone(),
        ProposerStrategy::Dropout => return Ok(None),
    };
    Ok(Some(submission))
}

/// A voter's reported score; `None` means no vote was cast.
///
/// A colluding voter in a round where one of its group's proposers was
/// selected approves with +1 whatever its own strategy says.
pub fn vote(strategy: VoterStrategy, honest_score: f64, colluding_round: bool) -> Option<f64> {
    if colluding_round {
        return Some(1.0);
    }
    match strategy {
        VoterStrategy::Honest => Some(honest_score),
        VoterStrategy::Inverter => Some(-honest_score),
        VoterStrategy::AlwaysApprove => Some(1.0),
        VoterStrategy::AlwaysReject => Some(-1.0),
        VoterStrategy::Abstain => None,
    }
}

/// Explicit strategy for one node, overriding the fraction-based assignment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct NodeOverride {
    #[serde(default)]
    pub proposer: Option<ProposerStrategy>,
    #[serde(default)]
    pub voter: Option<VoterStrategy>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdversarySpec {
    pub l_p: f64,
    pub l_v: f64,
    /// Strategy given to the `floor(l_p * N)` malicious proposers.
    pub proposer_strategy: ProposerStrategy,
    /// Strategy given to the `floor(l_v * N)` malicious voters.
    pub voter_strategy: VoterStrategy,
    pub overrides: BTreeMap<NodeId, NodeOverride>,
    /// Each group is one real-world operator controlling several node ids.
    pub collusion_groups: Vec<Vec<NodeId>>,
    /// Permit `l_p` or `l_v` of 0.5 or more.
    pub allow_dishonest_majority: bool,
}

impl Default for AdversarySpec {
    fn default() -> Self {
        Self {
            l_p: 0.3,
            l_v: 0.3,
            proposer_strategy: ProposerStrategy::SignFlip { lambda: 2.0 },
            voter_strategy: VoterStrategy::Inverter,
            overrides: BTreeMap::new(),
            collusion_groups: Vec::new(),
            allow_dishonest_majority: false,
        }
    }
}

impl AdversarySpec {
    pub fn honest() -> Self {
        Self { l_p: 0.0, l_v: 0.0, ..Self::default() }
    }

    pub fn validate(&self, population: usize) -> Result<()> {
        for (name, value) in [("adversary.l_p", self.l_p), ("adversary.l_v", self.l_v)] {
            if !(0.0..1.0).contains(&value) {
                return Err(Error::config(name, "must lie in [0, 1)"));
            }
            if value >= 0.5 && !self.allow_dishonest_majority {
                return Err(Error::config(
                    name,
                    "must be < 0.5 unless allow_dishonest_majority is set",
                ));
            }
        }
        self.proposer_strategy.validate("adversary.proposer_strategy")?;
        for (id, o) in &self.overrides {
            if id.index() >= population {
                return Err(Error::config(format!("adversary.overrides.{id}"), "no such node"));
            }
            if let Some(p) = &o.proposer {
                p.validate(&format!("adversary.overrides.{id}.proposer"))?;
            }
        }
        let mut seen = BTreeSet::new();
        for (g, group) in self.collusion_groups.iter().enumerate() {
            for id in group {
                if id.index() >= population {
                    return Err(Error::config(format!("adversary.collusion_groups[{g}]"), format!("no such node {id}")));
                }
                if !seen.insert(*id) {
                    return Err(Error::config(
                        format!("adversary.collusion_groups[{g}]"),
                        format!("{id} is in more than one group"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Number of nodes that receive a malicious strategy for a fraction.
    pub fn malicious_count(fraction: f64, population: usize) -> usize {
        // tolerance keeps e.g. 0.29 * 100 from flooring to 28
        ((fraction * population as f64) + 1e-9).floor() as usize
    }

    /// Fixes each node's strategies for the whole run.
    ///
    /// Nodes are shuffled with the population seed; the first `floor(l_p N)`
    /// get the malicious proposer strategy and the first `floor(l_v N)` the
    /// malicious voter strategy, so the two sets overlap as much as possible.
    pub fn assign(&self, population: usize, population_seed: u64) -> Population {
        let mut order: Vec<u32> = (0..population as u32).collect();
        let mut rng = seed::rng(population_seed);
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }
        let n_p = Self::malicious_count(self.l_p, population);
        let n_v = Self::malicious_count(self.l_v, population);

        let mut profiles: Vec<NodeProfile> = (0..population as u32)
            .map(|i| NodeProfile {
                id: NodeId(i),
                proposer: ProposerStrategy::Honest,
                voter: VoterStrategy::Honest,
                group: None,
            })
            .collect();
        for (rank, &node) in order.iter().enumerate() {
            let p = &mut profiles[node as usize];
            if rank < n_p {
                p.proposer = self.proposer_strategy;
            }
            if rank < n_v {
                p.voter = self.voter_strategy;
            }
        }
        for (id, o) in &self.overrides {
            let p = &mut profiles[id.index()];
            if let Some(s) = o.proposer {
                p.proposer = s;
            }
            if let Some(s) = o.voter {
                p.voter = s;
            }
        }
        for (g, group) in self.collusion_groups.iter().enumerate() {
            for id in group {
                profiles[id.index()].group = Some(g);
            }
        }
        Population { profiles }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeProfile {
    pub id: NodeId,
    pub proposer: ProposerStrategy,
    pub voter: VoterStrategy,
    pub group: Option<usize>,
}

impl NodeProfile {
    /// A node is malicious if it deviates in any role or belongs to a collusion group.
    pub fn is_malicious(&self) -> bool {
        !self.proposer.is_honest() || !self.voter.is_honest() || self.group.is_some()
    }

    pub fn is_honest_proposer(&self) -> bool {
        self.proposer.is_honest() && self.group.is_none()
    }

    pub fn is_honest_voter(&self) -> bool {
        self.voter.is_honest() && self.group.is_none()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    profiles: Vec<NodeProfile>,
}

impl Population {
    pub fn profile(&self, id: NodeId) -> &NodeProfile {
        &self.profiles[id.index()]
    }

    pub fn profiles(&self) -> &[NodeProfile] {
        &self.profiles
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn malicious_nodes(&self) -> Vec<NodeId> {
        self.profiles.iter().filter(|p| p.is_malicious()).map(|p| p.id).collect()
    }

    /// Voters whose collusion group has a member among `proposers`.
    pub fn colluding_voters(&self, proposers: &[NodeId]) -> BTreeSet<NodeId> {
        let groups: BTreeSet<usize> = proposers
            .iter()
            .filter_map(|id| self.profile(*id).group)
            .collect();
        self.profiles
            .iter()
            .filter(|p| p.group.is_some_and(|g| groups.contains(&g)))
            .map(|p| p.id)
            .collect()
    }
}
