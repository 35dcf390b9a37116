//! Multi-round, multi-seed Monte Carlo driver and return estimators.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversarySpec;
use crate::error::{Error, Result};
use crate::ledger::Ledger;
use crate::model::ParamVector;
use crate::node::NodeId;
use crate::protocol::{run_round, EngineState, Environment, ProtocolParams, RoundRecord};
use crate::seed;
use crate::task::{evaluate, generate_client_data, generate_dataset, ClientDataset, DatasetRole, TaskSpec};

pub const CONFIG_SCHEMA: &str = "flock-sim.config/1";

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SeedConfig {
    pub count: u64,
    pub base: u64,
}

impl Default for SeedConfig {
    fn default() -> Self {
        Self { count: 20, base: 42 }
    }
}

/// Task parameters; `true_weights` is drawn per run when omitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskConfig {
    pub dim: usize,
    pub true_weights: Option<Vec<f64>>,
    pub noise_sigma: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub lr: f64,
    pub local_steps: u32,
}

impl Default for TaskConfig {
    fn default() -> Self {
        Self {
            dim: 16,
            true_weights: None,
            noise_sigma: 0.1,
            n_train: 256,
            n_test: 128,
            lr: 0.0005,
            local_steps: 10,
        }
    }
}

impl TaskConfig {
    pub fn instantiate(&self, task_seed: u64) -> TaskSpec {
        let mut spec = TaskSpec::with_random_weights(
            self.dim,
            self.noise_sigma,
            self.n_train,
            self.n_test,
            self.lr,
            self.local_steps,
            task_seed,
        );
        if let Some(w) = &self.true_weights {
            spec.true_weights = w.clone();
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub schema_version: String,
    #[serde(rename = "N")]
    pub population: usize,
    pub rounds: u64,
    pub seeds: SeedConfig,
    pub initial_stake: u64,
    /// Size of the held-out set used to report global-model quality.
    pub oracle_test_size: usize,
    pub params: ProtocolParams,
    pub task: TaskConfig,
    pub adversary: AdversarySpec,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA.to_string(),
            population: 100,
            rounds: 200,
            seeds: SeedConfig::default(),
            initial_stake: 1000,
            oracle_test_size: 1024,
            params: ProtocolParams::default(),
            task: TaskConfig::default(),
            adversary: AdversarySpec::default(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA {
            return Err(Error::config(
                "schema_version",
                format!("expected `{CONFIG_SCHEMA}`, found `{}`", self.schema_version),
            ));
        }
        self.params.validate()?;
        let needed = self.params.n_proposers + self.params.n_voters;
        if self.population < needed {
            return Err(Error::config("N", format!("must be >= N_p + N_v = {needed}")));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds", "must be at least 1"));
        }
        if self.seeds.count == 0 {
            return Err(Error::config("seeds.count", "must be at least 1"));
        }
        if self.initial_stake == 0 || self.initial_stake > i64::MAX as u64 {
            return Err(Error::config("initial_stake", "must be in 1..=i64::MAX"));
        }
        if self.oracle_test_size == 0 {
            return Err(Error::config("oracle_test_size", "must be at least 1"));
        }
        if let Some(w) = &self.task.true_weights {
            if w.iter().any(|x| !x.is_finite()) {
                return Err(Error::config("task.true_weights", "must be finite"));
            }
        }
        self.task.instantiate(0).validate()?;
        self.adversary.validate(self.population)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Proposer,
    Voter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Honesty {
    Honest,
    Malicious,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Proposer => "proposer",
            Role::Voter => "voter",
        }
    }
}

impl Honesty {
    pub fn as_str(self) -> &'static str {
        match self {
            Honesty::Honest => "honest",
            Honesty::Malicious => "malicious",
        }
    }
}

/// The four (role, honesty) classes in output order.
pub const CLASSES: [(Role, Honesty); 4] = [
    (Role::Proposer, Honesty::Honest),
    (Role::Proposer, Honesty::Malicious),
    (Role::Voter, Honesty::Honest),
    (Role::Voter, Honesty::Malicious),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnStats {
    pub mean: f64,
    pub std_err: f64,
    pub ci95: f64,
    pub samples: usize,
}

/// Mean per-selection return (token delta / stake at round start) of one
/// class. `stats` is `None` when the class was never selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnEstimate {
    pub role: Role,
    pub honesty: Honesty,
    pub stats: Option<ReturnStats>,
}

impl ReturnEstimate {
    pub fn mean(&self) -> Option<f64> {
        self.stats.map(|s| s.mean)
    }

    /// `mean - k * std_err > 0`
    pub fn positive_by(&self, k: f64) -> bool {
        self.stats.is_some_and(|s| s.mean - k * s.std_err > 0.0)
    }

    /// `mean + k * std_err < 0`
    pub fn negative_by(&self, k: f64) -> bool {
        self.stats.is_some_and(|s| s.mean + k * s.std_err < 0.0)
    }
}

/// One normalized return observation, keyed so reductions are order-free.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
struct Sample {
    run: u64,
    round: u64,
    id: NodeId,
    value: f64,
}

fn class_samples(records: &[RoundRecord], role: Role, honesty: Honesty) -> Vec<Sample> {
    let mut out = Vec::new();
    for rec in records {
        let (selected, malicious) = match role {
            Role::Proposer => (&rec.proposers, &rec.malicious_proposers),
            Role::Voter => (&rec.voters, &rec.malicious_voters),
        };
        for id in selected {
            let is_malicious = malicious.contains(id);
            if is_malicious != (honesty == Honesty::Malicious) {
                continue;
            }
            let stake = rec.stakes_before.get(id).copied().unwrap_or(0);
            // zero stake only happens with min_stake = 0; the return is undefined
            if stake == 0 {
                continue;
            }
            let delta = rec.deltas.get(id).copied().unwrap_or(0);
            out.push(Sample { run: rec.run, round: rec.round, id: *id, value: delta as f64 / stake as f64 });
        }
    }
    out.sort_by_key(|s| (s.run, s.round, s.id));
    out
}

fn summarize(samples: &[Sample]) -> Option<ReturnStats> {
    let n = samples.len();
    if n == 0 {
        return None;
    }
    let mean = samples.iter().map(|s| s.value).sum::<f64>() / n as f64;
    let std_err = if n > 1 {
        let var = samples.iter().map(|s| (s.value - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        (var / n as f64).sqrt()
    } else {
        0.0
    };
    Some(ReturnStats { mean, std_err, ci95: Z95 * std_err, samples: n })
}

/// Empirical expected return of one class over the given records.
///
/// Standard errors treat observations as independent (normal
/// approximation); selections inside a round are correlated, so the interval
/// is optimistic.
pub fn estimate_expected_return(records: &[RoundRecord], role: Role, honesty: Honesty) -> ReturnEstimate {
    ReturnEstimate { role, honesty, stats: summarize(&class_samples(records, role, honesty)) }
}

pub fn estimate_all(records: &[RoundRecord]) -> Vec<ReturnEstimate> {
    CLASSES.iter().map(|&(r, h)| estimate_expected_return(records, r, h)).collect()
}

/// Outcome of one Monte Carlo run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: u64,
    pub records: Vec<RoundRecord>,
    pub ledger: Ledger,
    pub final_global: ParamVector,
    /// Oracle-set MSE of the global model, index 0 before the first round.
    pub oracle_mse: Vec<f64>,
    pub malicious_nodes: Vec<NodeId>,
}

impl RunResult {
    pub fn final_oracle_mse(&self) -> f64 {
        *self.oracle_mse.last().expect("at least the initial entry")
    }
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub runs: Vec<RunResult>,
    pub estimates: Vec<ReturnEstimate>,
}

impl SimOutput {
    pub fn records(&self) -> impl Iterator<Item = &RoundRecord> {
        self.runs.iter().flat_map(|r| r.records.iter())
    }

    pub fn all_records(&self) -> Vec<RoundRecord> {
        self.records().cloned().collect()
    }

    pub fn estimate(&self, role: Role, honesty: Honesty) -> &ReturnEstimate {
        self.estimates
            .iter()
            .find(|e| e.role == role && e.honesty == honesty)
            .expect("all classes estimated")
    }
}

/// Builds run `index`'s environment from the seed tree and executes all rounds.
pub fn run_single(config: &SimConfig, index: u64) -> Result<RunResult> {
    let run = seed::run_seed(config.seeds.base, index);
    let task = config.task.instantiate(seed::mix(run, seed::TAG_TASK));
    let population = config.adversary.assign(config.population, seed::mix(run, seed::TAG_POPULATION));
    let data_root = seed::mix(run, seed::TAG_DATA);
    let node_data = |n: usize, role: DatasetRole| -> ClientDataset {
        let offset = match role {
            DatasetRole::Train => 0,
            DatasetRole::Test => 1,
        };
        generate_client_data(&task, seed::mix(data_root, 2 * n as u64 + offset), role)
    };
    let train = (0..config.population).map(|n| node_data(n, DatasetRole::Train)).collect();
    let test = (0..config.population).map(|n| node_data(n, DatasetRole::Test)).collect();
    let oracle = generate_dataset(&task, seed::mix(run, seed::TAG_ORACLE), DatasetRole::Test, config.oracle_test_size);

    let mut ledger = Ledger::new();
    ledger.begin_round(0);
    for n in 0..config.population {
        ledger.stake(NodeId(n as u32), config.initial_stake as i64)?;
    }
    let malicious_nodes = population.malicious_nodes();
    let env = Environment { params: config.params.clone(), task, population, train, test };
    let mut state = EngineState::new(ParamVector::zeros(env.task.dim), ledger);

    let mut oracle_mse = vec![evaluate(&state.global, &oracle)?];
    let mut records = Vec::with_capacity(config.rounds as usize);
    for round in 1..=config.rounds {
        let mut record = run_round(&mut state, &env, round, seed::round_seed(run, round))?;
        record.run = index;
        oracle_mse.push(evaluate(&state.global, &oracle)?);
        records.push(record);
    }
    Ok(RunResult {
        run: index,
        records,
        final_global: state.global,
        ledger: state.ledger,
        oracle_mse,
        malicious_nodes,
    })
}

/// Runs every seed (in parallel; results are collected in seed order) and
/// pools the return estimates across them.
pub fn run_simulation(config: &SimConfig) -> Result<SimOutput> {
    config.validate()?;
    let runs = (0..config.seeds.count)
        .into_par_iter()
        .map(|i| run_single(config, i))
        .collect::<Result<Vec<_>>>()?;
    let records: Vec<RoundRecord> = runs.iter().flat_map(|r| r.records.iter().cloned()).collect();
    let estimates = estimate_all(&records);
    Ok(SimOutput { runs, estimates })
}

/// Lists of values per swept parameter. Missing lists keep the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default)]
    pub beta: Option<Vec<f64>>,
    #[serde(default, rename = "T")]
    pub threshold: Option<Vec<u32>>,
    #[serde(default)]
    pub l_p: Option<Vec<f64>>,
    #[serde(default)]
    pub l_v: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    #[serde(rename = "T")]
    pub threshold: u32,
    #[serde(rename = "N")]
    pub population: usize,
    #[serde(rename = "N_p")]
    pub n_proposers: usize,
    #[serde(rename = "N_v")]
    pub n_voters: usize,
    pub l_p: f64,
    pub l_v: f64,
}

impl GridPoint {
    pub fn of(config: &SimConfig) -> Self {
        Self {
            alpha: config.params.alpha,
            beta: config.params.beta,
            threshold: config.params.threshold,
            population: config.population,
            n_proposers: config.params.n_proposers,
            n_voters: config.params.n_voters,
            l_p: config.adversary.l_p,
            l_v: config.adversary.l_v,
        }
    }

    pub fn apply(&self, base: &SimConfig) -> SimConfig {
        let mut c = base.clone();
        c.params.alpha = self.alpha;
        c.params.beta = self.beta;
        c.params.threshold = self.threshold;
        c.adversary.l_p = self.l_p;
        c.adversary.l_v = self.l_v;
        c
    }
}

impl SweepGrid {
    /// Cartesian product in the order alpha, beta, T, l_p, l_v (last varies
    /// fastest).
    pub fn points(&self, base: &SimConfig) -> Result<Vec<GridPoint>> {
        let pick_f = |field: &str, v: &Option<Vec<f64>>, default: f64| -> Result<Vec<f64>> {
            match v {
                Some(list) if list.is_empty() => Err(Error::config(format!("grid.{field}"), "empty list")),
                Some(list) => Ok(list.clone()),
                None => Ok(vec![default]),
            }
        };
        let alphas = pick_f("alpha", &self.alpha, base.params.alpha)?;
        let betas = pick_f("beta", &self.beta, base.params.beta)?;
        let lps = pick_f("l_p", &self.l_p, base.adversary.l_p)?;
        let lvs = pick_f("l_v", &self.l_v, base.adversary.l_v)?;
        let ts = match &self.threshold {
            Some(list) if list.is_empty() => return Err(Error::config("grid.T", "empty list")),
            Some(list) => list.clone(),
            None => vec![base.params.threshold],
        };
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &beta in &betas {
                for &threshold in &ts {
                    for &l_p in &lps {
                        for &l_v in &lvs {
                            out.push(GridPoint { alpha, beta, threshold, l_p, l_v, ..GridPoint::of(base) });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn is_empty(&self) -> bool {
        [&self.alpha, &self.beta, &self.l_p, &self.l_v].iter().all(|v| v.as_ref().is_none_or(|l| l.is_empty()))
            && self.threshold.as_ref().is_none_or(|l| l.is_empty())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub point: GridPoint,
    pub estimates: Vec<ReturnEstimate>,
}

/// One simulation per grid point, every point sharing the same base seeds.
/// Runs execute in parallel; rows come back in grid order.
pub fn sweep(base: &SimConfig, grid: &SweepGrid) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::config("grid", "grid has no values"));
    }
    let points = grid.points(base)?;
    let configs: Vec<SimConfig> = points.iter().map(|p| p.apply(base)).collect();
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| (0..base.seeds.count).map(move |s| (p, s)))
        .collect();
    // Estimator inputs only.
    let slim = jobs
        .par_iter()
        .map(|&(p, s)| {
            run_single(&configs[p], s).map(|r| r.records.into_iter().map(slim_record).collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let mut per_point: Vec<Vec<RoundRecord>> = vec![Vec::new(); configs.len()];
    for ((p, _), recs) in jobs.iter().zip(slim) {
        per_point[*p].extend(recs);
    }
    Ok(points
        .into_iter()
        .zip(per_point)
        .map(|(point, records)| SweepRow { point, estimates: estimate_all(&records) })
        .collect())
}

fn slim_record(mut r: RoundRecord) -> RoundRecord {
    r.submissions.clear();
    r.published = None;
    r.votes.clear();
    r.stakes_after.clear();
    r.malicious_nodes.clear();
    r.global = ParamVector::zeros(0);
    r
}

/// Mean stake per honesty class after each round of a single run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvictionCurve {
    pub run: u64,
    pub rounds: Vec<u64>,
    pub honest_mean: Vec<Option<f64>>,
    pub malicious_mean: Vec<Option<f64>>,
    /// First round whose mean malicious stake is below `min_stake`.
    pub first_eviction_round: Option<u64>,
    /// First round each node's stake fell below `min_stake`.
    pub node_evictions: BTreeMap<NodeId, u64>,
}

impl EvictionCurve {
    pub fn final_means(&self) -> (Option<f64>, Option<f64>) {
        (
            self.honest_mean.last().copied().flatten(),
            self.malicious_mean.last().copied().flatten(),
        )
    }
}

/// Builds one curve per run present in `records`, ordered by run.
pub fn eviction_curve(records: &[RoundRecord], min_stake: u64) -> Vec<EvictionCurve> {
    let mut by_run: BTreeMap<u64, Vec<&RoundRecord>> = BTreeMap::new();
    for r in records {
        by_run.entry(r.run).or_default().push(r);
    }
    by_run
        .into_iter()
        .map(|(run, mut recs)| {
            recs.sort_by_key(|r| r.round);
            let mut curve = EvictionCurve {
                run,
                rounds: Vec::new(),
                honest_mean: Vec::new(),
                malicious_mean: Vec::new(),
                first_eviction_round: None,
                node_evictions: BTreeMap::new(),
            };
            for rec in recs {
                let mean = |malicious: bool| {
                    let stakes: Vec<u64> = rec
                        .stakes_after
                        .iter()
                        .filter(|(id, _)| rec.malicious_nodes.contains(id) == malicious)
                        .map(|(_, s)| *s)
                        .collect();
                    (!stakes.is_empty()).then(|| stakes.iter().sum::<u64>() as f64 / stakes.len() as f64)
                };
                let mal = mean(true);
                curve.rounds.push(rec.round);
                curve.honest_mean.push(mean(false));
                curve.malicious_mean.push(mal);
                if curve.first_eviction_round.is_none() && mal.is_some_and(|m| m < min_stake as f64) {
                    curve.first_eviction_round = Some(rec.round);
                }
                for (id, s) in &rec.stakes_after {
                    if *s < min_stake {
                        curve.node_evictions.entry(*id).or_insert(rec.round);
                    }
                }
            }
            curve
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::RoundStatus;

    fn small_config() -> SimConfig {
        SimConfig {
            population: 20,
            rounds: 15,
            seeds: SeedConfig { count: 3, base: 7 },
            oracle_test_size: 128,
            params: ProtocolParams { n_proposers: 3, n_voters: 5, threshold: 3, ..ProtocolParams::default() },
            task: TaskConfig { dim: 4, n_train: 64, n_test: 32, ..TaskConfig::default() },
            ..SimConfig::default()
        }
    }

    fn bare_record(run: u64, round: u64) -> RoundRecord {
        RoundRecord {
            run,
            round,
            status: RoundStatus::Completed,
            proposers: vec![],
            voters: vec![],
            submissions: vec![],
            published: None,
            valid: true,
            votes: vec![],
            tally: None,
            deltas: BTreeMap::new(),
            stakes_before: BTreeMap::new(),
            malicious_proposers: vec![],
            malicious_voters: vec![],
            global: ParamVector::zeros(1),
            adopted: true,
            stakes_after: BTreeMap::new(),
            malicious_nodes: vec![],
        }
    }

    #[test]
    fn single_sample_estimate() {
        let mut rec = bare_record(0, 1);
        rec.proposers = vec![NodeId(1)];
        rec.stakes_before.insert(NodeId(1), 1000);
        rec.deltas.insert(NodeId(1), 20);
        let est = estimate_expected_return(&[rec.clone()], Role::Proposer, Honesty::Honest);
        let stats = est.stats.unwrap();
        assert_eq!(stats.samples, 1);
        assert!((stats.mean - 0.02).abs() < 1e-15);
        assert_eq!(stats.std_err, 0.0);
        assert_eq!(estimate_expected_return(&[rec], Role::Proposer, Honesty::Malicious).stats, None);
    }

    #[test]
    fn estimates_ignore_record_order() {
        let out = run_simulation(&small_config()).unwrap();
        let mut records = out.all_records();
        let forward = estimate_all(&records);
        records.reverse();
        records.swap(0, 7);
        assert_eq!(estimate_all(&records), forward);
        assert_eq!(forward, out.estimates);
    }

    #[test]
    fn deterministic_across_invocations() {
        let a = run_simulation(&small_config()).unwrap();
        let b = run_simulation(&small_config()).unwrap();
        assert_eq!(a.all_records(), b.all_records());
        assert_eq!(a.estimates, b.estimates);
    }

    #[test]
    fn zero_coefficients_give_zero_returns() {
        let mut c = small_config();
        c.params.alpha = 0.0;
        c.params.beta = 0.0;
        let out = run_simulation(&c).unwrap();
        for e in &out.estimates {
            if let Some(s) = e.stats {
                assert_eq!(s.mean, 0.0);
            }
        }
        assert!(out.records().all(|r| r.deltas.values().all(|d| *d == 0)));
    }

    #[test]
    fn single_point_sweep_matches_run() {
        let c = small_config();
        let grid = SweepGrid { alpha: Some(vec![c.params.alpha]), ..SweepGrid::default() };
        let rows = sweep(&c, &grid).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].estimates, run_simulation(&c).unwrap().estimates);
        assert_eq!(rows[0].point, GridPoint::of(&c));
    }

    #[test]
    fn empty_grid_rejected() {
        let c = small_config();
        assert!(sweep(&c, &SweepGrid::default()).is_err());
        let g = SweepGrid { beta: Some(vec![]), ..SweepGrid::default() };
        assert!(sweep(&c, &g).is_err());
    }

    #[test]
    fn grid_order_is_lexicographic() {
        let c = small_config();
        let g = SweepGrid { alpha: Some(vec![0.1, 0.2]), l_v: Some(vec![0.0, 0.1]), ..SweepGrid::default() };
        let pts = g.points(&c).unwrap();
        let pairs: Vec<(f64, f64)> = pts.iter().map(|p| (p.alpha, p.l_v)).collect();
        assert_eq!(pairs, vec![(0.1, 0.0), (0.1, 0.1), (0.2, 0.0), (0.2, 0.1)]);
    }

    #[test]
    fn no_slashing_means_malicious_stake_never_drops() {
        let mut c = small_config();
        c.params.beta = 0.0;
        let out = run_simulation(&c).unwrap();
        for curve in eviction_curve(&out.all_records(), c.params.min_stake) {
            let m: Vec<f64> = curve.malicious_mean.iter().map(|m| m.unwrap()).collect();
            assert!(m.windows(2).all(|w| w[1] >= w[0]));
            assert!(m[0] >= c.initial_stake as f64);
            assert_eq!(curve.first_eviction_round, None);
        }
    }

    #[test]
    fn config_validation_paths() {
        let c = SimConfig { population: 10, ..SimConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "N"));
        let c = SimConfig { schema_version: "other".into(), ..SimConfig::default() };
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "schema_version"));
        assert!(SimConfig::default().validate().is_ok());
    }
}
