//! Integer token accounting.
//!
//! Stakes are deposits into the system and raise `initial_supply`. Positive
//! deltas are minted, negative deltas are burned into the treasury, so
//!
//! ```text
//! sum(staked) + treasury == initial_supply + minted_total
//! ```
//!
//! holds exactly after every transition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub id: NodeId,
    pub staked: u64,
}

impl Account {
    pub fn eligible(&self, min_stake: u64) -> bool {
        self.staked >= min_stake
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Stake,
    Delta,
}

/// One line of the ledger event log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEvent {
    pub round: u64,
    pub event: EventKind,
    pub id: NodeId,
    pub amount: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Ledger {
    accounts: BTreeMap<NodeId, Account>,
    treasury: u64,
    minted_total: u64,
    initial_supply: u64,
    round: u64,
    events: Vec<LedgerEvent>,
}

impl Ledger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuild a ledger from its event log.
    pub fn replay<'a>(events: impl IntoIterator<Item = &'a LedgerEvent>) -> Result<Self> {
        let mut ledger = Ledger::new();
        for ev in events {
            ledger.round = ev.round;
            match ev.event {
                EventKind::Stake => ledger.stake(ev.id, ev.amount)?,
                EventKind::Delta => {
                    ledger.apply_deltas(&BTreeMap::from([(ev.id, ev.amount)]))?;
                }
            }
        }
        Ok(ledger)
    }

    /// Stamp subsequent events with `round`.
    pub fn begin_round(&mut self, round: u64) {
        self.round = round;
    }

    pub fn stake(&mut self, id: NodeId, amount: i64) -> Result<()> {
        if amount <= 0 {
            return Err(Error::NonPositiveStake(amount));
        }
        let amount_u = amount as u64;
        let supply = self
            .initial_supply
            .checked_add(amount_u)
            .ok_or(Error::TokenOverflow(id))?;
        let account = self.accounts.entry(id).or_insert(Account { id, staked: 0 });
        account.staked = account
            .staked
            .checked_add(amount_u)
            .ok_or(Error::TokenOverflow(id))?;
        self.initial_supply = supply;
        self.events.push(LedgerEvent {
            round: self.round,
            event: EventKind::Stake,
            id,
            amount,
        });
        Ok(())
    }

    /// Apply signed deltas. Slashes saturate at zero; the amount actually
    /// removed goes to the treasury. Returns the applied (post-saturation)
    /// deltas, which is also what the event log records.
    ///
    /// Fails without touching state if any id is unknown.
    pub fn apply_deltas(&mut self, deltas: &BTreeMap<NodeId, i64>) -> Result<BTreeMap<NodeId, i64>> {
        if let Some(id) = deltas.keys().find(|id| !self.accounts.contains_key(id)) {
            return Err(Error::UnknownAccount(*id));
        }
        // Validate the whole batch against overflow before mutating.
        let mut plan = Vec::with_capacity(deltas.len());
        let mut minted = self.minted_total;
        let mut treasury = self.treasury;
        for (&id, &delta) in deltas {
            let staked = self.accounts[&id].staked;
            let (new_staked, applied) = if delta >= 0 {
                let add = delta as u64;
                minted = minted.checked_add(add).ok_or(Error::TokenOverflow(id))?;
                (staked.checked_add(add).ok_or(Error::TokenOverflow(id))?, delta)
            } else {
                let removed = staked.min(delta.unsigned_abs());
                treasury = treasury
                    .checked_add(removed)
                    .ok_or(Error::TokenOverflow(id))?;
                (staked - removed, -(removed as i64))
            };
            plan.push((id, new_staked, applied));
        }

        let mut applied_map = BTreeMap::new();
        for (id, new_staked, applied) in plan {
            self.accounts.get_mut(&id).expect("checked above").staked = new_staked;
            self.events.push(LedgerEvent {
                round: self.round,
                event: EventKind::Delta,
                id,
                amount: applied,
            });
            applied_map.insert(id, applied);
        }
        self.minted_total = minted;
        self.treasury = treasury;
        Ok(applied_map)
    }

    /// Ids with `staked >= min_stake`, ascending.
    pub fn eligible_set(&self, min_stake: u64) -> Vec<NodeId> {
        self.accounts
            .values()
            .filter(|a| a.eligible(min_stake))
            .map(|a| a.id)
            .collect()
    }

    pub fn conservation_check(&self) -> bool {
        let staked: u128 = self.accounts.values().map(|a| a.staked as u128).sum();
        staked + self.treasury as u128 == self.initial_supply as u128 + self.minted_total as u128
    }

    pub fn staked(&self, id: NodeId) -> Option<u64> {
        self.accounts.get(&id).map(|a| a.staked)
    }

    pub fn accounts(&self) -> impl Iterator<Item = &Account> {
        self.accounts.values()
    }

    pub fn stakes(&self) -> BTreeMap<NodeId, u64> {
        self.accounts.iter().map(|(id, a)| (*id, a.staked)).collect()
    }

    pub fn treasury(&self) -> u64 {
        self.treasury
    }

    pub fn minted_total(&self) -> u64 {
        self.minted_total
    }

    pub fn initial_supply(&self) -> u64 {
        self.initial_supply
    }

    pub fn events(&self) -> &[LedgerEvent] {
        &self.events
    }

    #[cfg(test)]
    pub(crate) fn corrupt_treasury(&mut self, value: u64) {
        self.treasury = value;
    }
}
