//! One training phase: sortition, local training, aggregation with the miners'
//! recompute check, committee voting and tally, then reward/slash.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::{self, Population};
use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::model::{fedavg, validity_vote, ParamVector};
use crate::node::NodeId;
use crate::seed;
use crate::task::{evaluate, ClientDataset, TaskSpec};

/// Added to `|m_old|` in the score denominator.
pub const SCORE_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolParams {
    pub alpha: f64,
    pub beta: f64,
    /// Minimum number of approving votes for a round to be accepted.
    #[serde(rename = "T")]
    pub threshold: u32,
    #[serde(rename = "N_p")]
    pub n_proposers: usize,
    #[serde(rename = "N_v")]
    pub n_voters: usize,
    pub min_stake: u64,
    pub kappa_timeout: f64,
    pub rho: f64,
    pub n_miners: u32,
    /// When false every valid aggregation is adopted and no tokens move.
    pub committee_voting: bool,
    /// Voter-specific coefficients; fall back to `alpha` / `beta`.
    pub alpha_voter: Option<f64>,
    pub beta_voter: Option<f64>,
}

impl Default for ProtocolParams {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            beta: 0.10,
            threshold: 11,
            n_proposers: 10,
            n_voters: 20,
            min_stake: 100,
            kappa_timeout: 0.5,
            rho: 0.01,
            n_miners: 3,
            committee_voting: true,
            alpha_voter: None,
            beta_voter: None,
        }
    }
}

impl ProtocolParams {
    pub fn voter_alpha(&self) -> f64 {
        self.alpha_voter.unwrap_or(self.alpha)
    }

    pub fn voter_beta(&self) -> f64 {
        self.beta_voter.unwrap_or(self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = |field: &str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(field, "must be finite and >= 0"))
            }
        };
        non_negative("params.alpha", self.alpha)?;
        non_negative("params.beta", self.beta)?;
        if let Some(a) = self.alpha_voter {
            non_negative("params.alpha_voter", a)?;
        }
        if let Some(b) = self.beta_voter {
            non_negative("params.beta_voter", b)?;
        }
        if self.n_proposers == 0 {
            return Err(Error::config("params.N_p", "must be at least 1"));
        }
        if self.n_voters == 0 {
            return Err(Error::config("params.N_v", "must be at least 1"));
        }
        if self.threshold == 0 || self.threshold as usize > self.n_voters {
            return Err(Error::config(
                "params.T",
                format!("must satisfy 1 <= T <= N_v ({}), got {}", self.n_voters, self.threshold),
            ));
        }
        if !(0.0..=1.0).contains(&self.kappa_timeout) {
            return Err(Error::config("params.kappa_timeout", "must lie in [0, 1]"));
        }
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::config("params.rho", "must be finite and > 0"));
        }
        if self.n_miners == 0 {
            return Err(Error::config("params.n_miners", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vote {
    pub voter_id: NodeId,
    /// `None` when the voter did not respond.
    pub score: Option<f64>,
    pub direction: bool,
}

impl Vote {
    pub fn new(voter_id: NodeId, score: Option<f64>) -> Self {
        Self { voter_id, score, direction: score.is_some_and(|s| s > 0.0) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TallyResult {
    pub approvals: u32,
    pub aggregate_score: f64,
    pub accepted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoundStatus {
    Completed,
    InsufficientEligible,
    NoSubmissions,
    InvalidAggregation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Submission {
    pub id: NodeId,
    pub params: Option<ParamVector>,
}

/// Full audit log of one training phase. One JSON Lines entry per round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Monte Carlo run index within a simulation.
    pub run: u64,
    pub round: u64,
    pub status: RoundStatus,
    pub proposers: Vec<NodeId>,
    pub voters: Vec<NodeId>,
    pub submissions: Vec<Submission>,
    pub published: Option<ParamVector>,
    pub valid: bool,
    pub votes: Vec<Vote>,
    pub tally: Option<TallyResult>,
    /// Applied (post-saturation) token deltas, keyed by every selected node.
    pub deltas: BTreeMap<NodeId, i64>,
    /// Stake of each selected node when the round began.
    pub stakes_before: BTreeMap<NodeId, u64>,
    pub malicious_proposers: Vec<NodeId>,
    pub malicious_voters: Vec<NodeId>,
    /// Global model after the round, new or retained.
    pub global: ParamVector,
    pub adopted: bool,
    pub stakes_after: BTreeMap<NodeId, u64>,
    pub malicious_nodes: Vec<NodeId>,
}

/// Uniform sample without replacement (partial Fisher-Yates): `N_p`
/// proposers, then `N_v` voters from the remainder. Both lists are returned
/// sorted.
pub fn select_participants(
    eligible: &[NodeId],
    params: &ProtocolParams,
    round_seed: u64,
) -> Result<(Vec<NodeId>, Vec<NodeId>)> {
    let needed = params.n_proposers + params.n_voters;
    if eligible.len() < needed {
        return Err(Error::InsufficientEligible { needed, available: eligible.len() });
    }
    let mut pool = eligible.to_vec();
    let mut rng = seed::rng(seed::mix(round_seed, seed::TAG_SELECT));
    for i in 0..needed {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut proposers = pool[..params.n_proposers].to_vec();
    let mut voters = pool[params.n_proposers..needed].to_vec();
    proposers.sort_unstable();
    voters.sort_unstable();
    Ok((proposers, voters))
}

/// Relative metric change scaled by `rho`, clamped to [-1, 1].
/// Metrics are negated MSE, so higher is better.
pub fn score_vote(m_new: f64, m_old: f64, rho: f64) -> Result<f64> {
    if !m_new.is_finite() || !m_old.is_finite() {
        return Err(Error::NonFiniteMetric { new: m_new, old: m_old });
    }
    Ok(((m_new - m_old) / (rho * (m_old.abs() + SCORE_EPS))).clamp(-1.0, 1.0))
}

/// Missing votes count as zero in the mean and never approve.
pub fn tally(votes: &[Vote], params: &ProtocolParams) -> TallyResult {
    let approvals = votes.iter().filter(|v| v.score.is_some_and(|s| s > 0.0)).count() as u32;
    let sum: f64 = votes.iter().filter_map(|v| v.score).sum();
    let aggregate_score = if votes.is_empty() { 0.0 } else { sum / votes.len() as f64 };
    TallyResult { approvals, aggregate_score, accepted: approvals >= params.threshold }
}

fn floor_tokens(coef: f64, stake: u64) -> i64 {
    (coef * stake as f64).floor() as i64
}

fn timeout_slash(params: &ProtocolParams, beta: f64, stake: u64) -> i64 {
    -floor_tokens(beta * params.kappa_timeout, stake)
}

/// Requested token deltas for every selected participant.
///
/// `proposers` pairs each proposer with whether it submitted. Proposers share
/// the round's outcome: reward `alpha * S` on acceptance, slash `beta * -S`
/// on rejection. Voters are paid by how close their score is to `S` when
/// they voted the winning direction and slashed by the distance otherwise.
pub fn settle(
    tally: &TallyResult,
    votes: &[Vote],
    proposers: &[(NodeId, bool)],
    ledger: &Ledger,
    params: &ProtocolParams,
) -> Result<BTreeMap<NodeId, i64>> {
    let stake_of = |id: NodeId| ledger.staked(id).ok_or(Error::UnknownAccount(id));
    let s_agg = tally.aggregate_score;
    let mut deltas = BTreeMap::new();

    for &(id, responsive) in proposers {
        let stake = stake_of(id)?;
        let delta = if !responsive {
            timeout_slash(params, params.beta, stake)
        } else if tally.accepted {
            floor_tokens(params.alpha * s_agg.max(0.0), stake)
        } else {
            -floor_tokens(params.beta * (-s_agg).max(0.0), stake)
        };
        deltas.insert(id, delta);
    }

    let (alpha_v, beta_v) = (params.voter_alpha(), params.voter_beta());
    for vote in votes {
        let stake = stake_of(vote.voter_id)?;
        let delta = match vote.score {
            None => timeout_slash(params, beta_v, stake),
            Some(s) => {
                let distance = (s - s_agg).abs() / 2.0;
                if (s > 0.0) == tally.accepted {
                    floor_tokens(alpha_v * (1.0 - distance), stake)
                } else {
                    -floor_tokens(beta_v * distance, stake)
                }
            }
        };
        deltas.insert(vote.voter_id, delta);
    }
    Ok(deltas)
}

/// Per-run inputs that do not change between rounds.
#[derive(Debug, Clone)]
pub struct Environment {
    pub params: ProtocolParams,
    pub task: TaskSpec,
    pub population: Population,
    pub train: Vec<ClientDataset>,
    pub test: Vec<ClientDataset>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EngineState {
    pub global: ParamVector,
    /// Global model before the most recent adoption.
    pub prev_global: ParamVector,
    pub ledger: Ledger,
}

impl EngineState {
    pub fn new(initial: ParamVector, ledger: Ledger) -> Self {
        Self { prev_global: initial.clone(), global: initial, ledger }
    }
}

/// Executes one training phase and returns its audit record.
pub fn run_round(state: &mut EngineState, env: &Environment, round: u64, round_seed: u64) -> Result<RoundRecord> {
    let params = &env.params;
    state.ledger.begin_round(round);
    let mut record = RoundRecord {
        run: 0,
        round,
        status: RoundStatus::Completed,
        proposers: Vec::new(),
        voters: Vec::new(),
        submissions: Vec::new(),
        published: None,
        valid: false,
        votes: Vec::new(),
        tally: None,
        deltas: BTreeMap::new(),
        stakes_before: BTreeMap::new(),
        malicious_proposers: Vec::new(),
        malicious_voters: Vec::new(),
        global: state.global.clone(),
        adopted: false,
        stakes_after: BTreeMap::new(),
        malicious_nodes: env.population.malicious_nodes(),
    };

    let eligible = state.ledger.eligible_set(params.min_stake);
    let (proposers, voters) = match select_participants(&eligible, params, round_seed) {
        Ok(sel) => sel,
        Err(Error::InsufficientEligible { .. }) => {
            record.status = RoundStatus::InsufficientEligible;
            record.stakes_after = state.ledger.stakes();
            return Ok(record);
        }
        Err(e) => return Err(e),
    };
    let pop = &env.population;
    record.malicious_proposers = proposers.iter().copied().filter(|id| !pop.profile(*id).is_honest_proposer()).collect();
    record.malicious_voters = voters.iter().copied().filter(|id| !pop.profile(*id).is_honest_voter()).collect();
    for id in proposers.iter().chain(&voters) {
        record.stakes_before.insert(*id, state.ledger.staked(*id).ok_or(Error::UnknownAccount(*id))?);
    }

    // Local training.
    let mut responsive = Vec::with_capacity(proposers.len());
    let mut received = Vec::new();
    for &id in &proposers {
        let mut rng = seed::rng(seed::node_seed(round_seed, id.0));
        let submission = adversary::propose(
            &pop.profile(id).proposer,
            &state.global,
            &state.prev_global,
            &env.train[id.index()],
            &env.task,
            &mut rng,
        )?;
        responsive.push((id, submission.is_some()));
        if let Some(p) = &submission {
            received.push(p.clone());
        }
        record.submissions.push(Submission { id, params: submission });
    }

    let mut requested: BTreeMap<NodeId, i64> = proposers.iter().chain(&voters).map(|id| (*id, 0)).collect();
    let mut adopt = false;

    if received.is_empty() {
        record.status = RoundStatus::NoSubmissions;
        for &(id, _) in &responsive {
            let stake = record.stakes_before[&id];
            requested.insert(id, timeout_slash(params, params.beta, stake));
        }
    } else {
        // On-chain aggregation and the other miners' recompute.
        let published = fedavg(&received)?;
        record.valid = validity_vote(&received, &published, params.n_miners);
        if !record.valid {
            record.status = RoundStatus::InvalidAggregation;
        } else if params.committee_voting {
            let colluding = pop.colluding_voters(&proposers);
            for &id in &voters {
                let test = &env.test[id.index()];
                let m_old = -evaluate(&state.global, test)?;
                let m_new = -evaluate(&published, test)?;
                let honest_score = score_vote(m_new, m_old, params.rho)?;
                let score = adversary::vote(pop.profile(id).voter, honest_score, colluding.contains(&id));
                record.votes.push(Vote::new(id, score));
            }
            let result = tally(&record.votes, params);
            requested.extend(settle(&result, &record.votes, &responsive, &state.ledger, params)?);
            adopt = result.accepted;
            record.tally = Some(result);
        } else {
            adopt = true;
        }
        record.published = Some(published);
    }

    let nonzero: BTreeMap<NodeId, i64> = requested.iter().filter(|(_, d)| **d != 0).map(|(k, v)| (*k, *v)).collect();
    let applied = state.ledger.apply_deltas(&nonzero)?;
    record.deltas = requested.keys().map(|id| (*id, applied.get(id).copied().unwrap_or(0))).collect();

    if adopt {
        let published = record.published.clone().expect("adopted rounds have an aggregate");
        state.prev_global = std::mem::replace(&mut state.global, published);
    }
    record.adopted = adopt;
    record.proposers = proposers;
    record.voters = voters;
    record.global = state.global.clone();
    record.stakes_after = state.ledger.stakes();
    Ok(record)
}

/// Brute-force tally used to cross-check [`tally`].
#[cfg(test)]
pub(crate) fn tally_oracle(scores: &[Option<f64>], threshold: u32) -> (u32, f64, bool) {
    let mut approvals = 0;
    let mut total = 0.0;
    for s in scores.iter().flatten() {
        if *s > 0.0 {
            approvals += 1;
        }
        total += *s;
    }
    (approvals, total / scores.len() as f64, approvals >= threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use proptest::prelude::*;

    fn ids(n: u32) -> Vec<NodeId> {
        (0..n).map(NodeId).collect()
    }

    fn params(n_p: usize, n_v: usize, t: u32) -> ProtocolParams {
        ProtocolParams { n_proposers: n_p, n_voters: n_v, threshold: t, ..ProtocolParams::default() }
    }

    fn staked_ledger(stakes: &[(u32, i64)]) -> Ledger {
        let mut l = Ledger::new();
        for &(id, s) in stakes {
            l.stake(NodeId(id), s).unwrap();
        }
        l
    }

    #[test]
    fn selection_is_disjoint_and_replayable() {
        let p = params(1, 1, 1);
        let (props, voters) = select_participants(&ids(5), &p, 99).unwrap();
        assert_eq!(props.len(), 1);
        assert_eq!(voters.len(), 1);
        assert!(!voters.contains(&props[0]));
        assert_eq!(select_participants(&ids(5), &p, 99).unwrap(), (props, voters));

        let p = params(10, 20, 11);
        let (props, voters) = select_participants(&ids(100), &p, 3).unwrap();
        let all: BTreeSet<_> = props.iter().chain(&voters).collect();
        assert_eq!(all.len(), 30);
    }

    #[test]
    fn selection_needs_enough_nodes() {
        assert_eq!(
            select_participants(&ids(4), &params(2, 3, 1), 0),
            Err(Error::InsufficientEligible { needed: 5, available: 4 })
        );
    }

    #[test]
    fn score_examples() {
        assert_eq!(score_vote(-2.0, -2.0, 0.1).unwrap(), 0.0);
        assert_eq!(score_vote(-0.01, -5.0, 0.1).unwrap(), 1.0);
        assert_eq!(score_vote(-50.0, -1.0, 0.1).unwrap(), -1.0);
        let half = score_vote(-0.95, -1.0, 0.1).unwrap();
        assert!((half - 0.05 / (0.1 * (1.0 + SCORE_EPS))).abs() < 1e-15);
        assert!((half - 0.5).abs() < 1e-7);
        assert!(score_vote(f64::NAN, -1.0, 0.1).is_err());
    }

    #[test]
    fn tally_examples() {
        let votes: Vec<Vote> = [0.5, 0.2, -0.1]
            .iter()
            .enumerate()
            .map(|(i, s)| Vote::new(NodeId(i as u32), Some(*s)))
            .collect();
        let t = tally(&votes, &params(1, 3, 2));
        assert_eq!(t.approvals, 2);
        assert!(t.accepted);
        assert!((t.aggregate_score - 0.2).abs() < 1e-12);

        let missing: Vec<Vote> = (0..3).map(|i| Vote::new(NodeId(i), None)).collect();
        let t = tally(&missing, &params(1, 3, 1));
        assert_eq!((t.approvals, t.aggregate_score, t.accepted), (0, 0.0, false));
    }

    #[test]
    fn zero_score_is_not_approval() {
        let votes = vec![Vote::new(NodeId(0), Some(0.0))];
        assert!(!tally(&votes, &params(1, 1, 1)).accepted);
        assert!(!votes[0].direction);
    }

    #[test]
    fn tally_matches_brute_force_over_four_states() {
        let states = [None, Some(0.0), Some(0.4), Some(-0.7)];
        for t in 1..=5u32 {
            for code in 0..4usize.pow(5) {
                let scores: Vec<Option<f64>> = (0..5).map(|i| states[(code / 4usize.pow(i)) % 4]).collect();
                let votes: Vec<Vote> = scores.iter().enumerate().map(|(i, s)| Vote::new(NodeId(i as u32), *s)).collect();
                let got = tally(&votes, &params(1, 5, t));
                let (approvals, mean, accepted) = tally_oracle(&scores, t);
                assert_eq!(got.approvals, approvals);
                assert_eq!(got.accepted, accepted);
                assert!((got.aggregate_score - mean).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn settle_examples() {
        let ledger = staked_ledger(&[(0, 1000), (1, 1000), (2, 1000)]);
        let p = ProtocolParams { alpha: 0.1, beta: 0.2, kappa_timeout: 0.5, ..params(2, 1, 1) };

        let accepted = TallyResult { approvals: 1, aggregate_score: 0.2, accepted: true };
        let d = settle(&accepted, &[], &[(NodeId(0), true)], &ledger, &p).unwrap();
        assert_eq!(d[&NodeId(0)], 20);

        let tally_half = TallyResult { approvals: 1, aggregate_score: 0.5, accepted: true };
        let votes = [Vote::new(NodeId(2), Some(-1.0))];
        let d = settle(&tally_half, &votes, &[], &ledger, &p).unwrap();
        assert_eq!(d[&NodeId(2)], -150);

        let d = settle(&accepted, &[], &[(NodeId(1), false)], &ledger, &p).unwrap();
        assert_eq!(d[&NodeId(1)], -100);

        let missing = [Vote::new(NodeId(2), None)];
        let d = settle(&accepted, &missing, &[], &ledger, &p).unwrap();
        assert_eq!(d[&NodeId(2)], -100);
    }

    #[test]
    fn rejected_round_slashes_proposers_by_negative_score() {
        let ledger = staked_ledger(&[(0, 1000)]);
        let p = ProtocolParams { alpha: 0.1, beta: 0.2, ..params(1, 1, 1) };
        let rejected = TallyResult { approvals: 0, aggregate_score: -0.5, accepted: false };
        assert_eq!(settle(&rejected, &[], &[(NodeId(0), true)], &ledger, &p).unwrap()[&NodeId(0)], -100);
        // rejected with a positive mean score: nothing to slash
        let rejected_pos = TallyResult { approvals: 0, aggregate_score: 0.3, accepted: false };
        assert_eq!(settle(&rejected_pos, &[], &[(NodeId(0), true)], &ledger, &p).unwrap()[&NodeId(0)], 0);
    }

    #[test]
    fn voter_overrides_apply() {
        let ledger = staked_ledger(&[(0, 1000)]);
        let p = ProtocolParams { alpha: 0.1, alpha_voter: Some(0.0), ..params(1, 1, 1) };
        let t = TallyResult { approvals: 1, aggregate_score: 1.0, accepted: true };
        let votes = [Vote::new(NodeId(0), Some(1.0))];
        assert_eq!(settle(&t, &votes, &[], &ledger, &p).unwrap()[&NodeId(0)], 0);
    }

    #[test]
    fn settle_rejects_unknown_ids() {
        let ledger = staked_ledger(&[(0, 1000)]);
        let t = TallyResult { approvals: 0, aggregate_score: 0.0, accepted: false };
        assert_eq!(
            settle(&t, &[], &[(NodeId(5), true)], &ledger, &ProtocolParams::default()),
            Err(Error::UnknownAccount(NodeId(5)))
        );
    }

    #[test]
    fn params_validation_names_fields() {
        let err = ProtocolParams { threshold: 21, ..ProtocolParams::default() }.validate().unwrap_err();
        assert!(matches!(&err, Error::Config { field, .. } if field == "params.T"));
        assert!(ProtocolParams { rho: 0.0, ..ProtocolParams::default() }.validate().is_err());
        assert!(ProtocolParams { kappa_timeout: 1.5, ..ProtocolParams::default() }.validate().is_err());
        assert!(ProtocolParams::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn matched_voter_reward_peaks_at_aggregate(s_agg in 0.01f64..1.0, s in 0.01f64..1.0) {
            let ledger = staked_ledger(&[(0, 1_000_000)]);
            let p = ProtocolParams::default();
            let t = TallyResult { approvals: 1, aggregate_score: s_agg, accepted: true };
            let at = settle(&t, &[Vote::new(NodeId(0), Some(s_agg))], &[], &ledger, &p).unwrap()[&NodeId(0)];
            let off = settle(&t, &[Vote::new(NodeId(0), Some(s))], &[], &ledger, &p).unwrap()[&NodeId(0)];
            prop_assert!(at >= off);
            prop_assert!(off >= 0);
        }

        #[test]
        fn mismatched_slash_grows_with_distance(s_agg in -1.0f64..1.0, a in -1.0f64..=0.0, b in -1.0f64..=0.0) {
            let ledger = staked_ledger(&[(0, 1_000_000)]);
            let p = ProtocolParams::default();
            // accepted round, so non-positive scores are mismatched
            let t = TallyResult { approvals: 1, aggregate_score: s_agg, accepted: true };
            let slash = |s: f64| -settle(&t, &[Vote::new(NodeId(0), Some(s))], &[], &ledger, &p).unwrap()[&NodeId(0)];
            let (near, far) = if (a - s_agg).abs() <= (b - s_agg).abs() { (a, b) } else { (b, a) };
            prop_assert!(slash(near) <= slash(far));
        }

        #[test]
        fn accepted_iff_threshold(scores in prop::collection::vec(prop::option::of(-1.0f64..1.0), 1..8), t in 1u32..8) {
            let votes: Vec<Vote> = scores.iter().enumerate().map(|(i, s)| Vote::new(NodeId(i as u32), *s)).collect();
            let r = tally(&votes, &params(1, votes.len().max(t as usize), t));
            prop_assert_eq!(r.accepted, r.approvals >= t);
            prop_assert!((-1.0..=1.0).contains(&r.aggregate_score));
        }
    }
}
