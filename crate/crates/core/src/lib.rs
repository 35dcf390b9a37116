//! Deterministic simulator for staked federated learning with committee
//! auditing.
//!
//! Each training phase selects proposers and an auditing committee by stake
//! eligibility, aggregates the proposers' fixed-point weights with FedAvg,
//! has the committee score the result against private test sets, and then
//! rewards or slashes everyone involved. [`sim`] repeats this over many
//! rounds and seeds to estimate each participant class's expected return.

pub mod adversary;
pub mod error;
pub mod io;
pub mod ledger;
pub mod model;
pub mod node;
pub mod protocol;
pub mod seed;
pub mod sim;
pub mod task;

pub use adversary::{AdversarySpec, Population, ProposerStrategy, VoterStrategy};
pub use error::{Error, Result};
pub use ledger::{Ledger, LedgerEvent};
pub use model::{fedavg, validity_vote, ParamVector};
pub use node::NodeId;
pub use protocol::{ProtocolParams, RoundRecord, RoundStatus, TallyResult, Vote};
pub use sim::{
    estimate_expected_return, eviction_curve, run_simulation, sweep, Honesty, ReturnEstimate, Role, SimConfig,
    SweepGrid,
};
pub use task::{ClientDataset, DatasetRole, TaskSpec};
