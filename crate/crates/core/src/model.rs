//! Fixed-point weight vectors and exact on-chain aggregation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::node::NodeId;

pub const FRAC_BITS: u32 = 16;
pub const SCALE: f64 = (1u64 << FRAC_BITS) as f64;

// |x * SCALE| must stay below this so sums over 2^20 vectors fit in i64.
const MAX_RAW: f64 = (1u64 << 42) as f64;

/// Model weights on the 2^-16 lattice. Serialized as a bare JSON array.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamVector(Vec<i64>);

impl ParamVector {
    pub fn from_raw(values: Vec<i64>) -> Self {
        Self(values)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn quantize(real: &[f64]) -> Result<Self> {
        real.iter()
            .enumerate()
            .map(|(index, &value)| {
                if !value.is_finite() {
                    return Err(Error::NonFinite { index, value });
                }
                let scaled = (value * SCALE + 0.5).floor();
                if scaled.abs() >= MAX_RAW {
                    return Err(Error::OutOfRange { index, value });
                }
                Ok(scaled as i64)
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn dequantize(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64 / SCALE).collect()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[i64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<i64> {
        self.0
    }
}

/// Result of the block producer's aggregation plus the other miners' check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub global: ParamVector,
    pub contributor_ids: Vec<NodeId>,
    pub valid: bool,
}

/// Uniform FedAvg: exact integer sum, then floor division by the count.
pub fn fedavg(updates: &[ParamVector]) -> Result<ParamVector> {
    let first = updates.first().ok_or(Error::EmptyUpdates)?;
    let dim = first.dim();
    let mut sum = vec![0i128; dim];
    for update in updates {
        if update.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: update.dim(),
            });
        }
        for (acc, &v) in sum.iter_mut().zip(&update.0) {
            *acc += v as i128;
        }
    }
    let count = updates.len() as i128;
    Ok(ParamVector(
        sum.into_iter().map(|s| s.div_euclid(count) as i64).collect(),
    ))
}

/// Every simulated miner recomputes the aggregate independently and votes
/// valid iff it matches `published` bit for bit; the aggregation stands only
/// if all of them agree.
pub fn validity_vote(updates: &[ParamVector], published: &ParamVector, n_miners: u32) -> bool {
    (0..n_miners.max(1)).all(|_| matches!(fedavg(updates), Ok(ref g) if g == published))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pv(v: &[i64]) -> ParamVector {
        ParamVector::from_raw(v.to_vec())
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(ParamVector::quantize(&[0.0, 1.0]).unwrap(), pv(&[0, 65536]));
        assert_eq!(ParamVector::quantize(&[-0.5]).unwrap(), pv(&[-32768]));
        // ties round up
        assert_eq!(ParamVector::quantize(&[0.5 / SCALE]).unwrap(), pv(&[1]));
        assert_eq!(ParamVector::quantize(&[-0.5 / SCALE]).unwrap(), pv(&[0]));
    }

    #[test]
    fn quantize_rejects_non_finite() {
        assert!(matches!(
            ParamVector::quantize(&[1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(matches!(
            ParamVector::quantize(&[f64::INFINITY]),
            Err(Error::NonFinite { index: 0, .. })
        ));
        assert!(matches!(
            ParamVector::quantize(&[1e30]),
            Err(Error::OutOfRange { index: 0, .. })
        ));
    }

    #[test]
    fn fedavg_examples() {
        let v = pv(&[5, -7, 123]);
        assert_eq!(fedavg(&[v.clone(), v.clone(), v.clone()]).unwrap(), v);
        assert_eq!(
            fedavg(&[pv(&[2 << 16]), pv(&[4 << 16])]).unwrap(),
            pv(&[3 << 16])
        );
        assert_eq!(fedavg(&[pv(&[1]), pv(&[2])]).unwrap(), pv(&[1]));
        // floor toward negative infinity
        assert_eq!(fedavg(&[pv(&[-1]), pv(&[-2])]).unwrap(), pv(&[-2]));
    }

    #[test]
    fn fedavg_errors() {
        assert_eq!(fedavg(&[]), Err(Error::EmptyUpdates));
        assert_eq!(
            fedavg(&[pv(&[1, 2]), pv(&[1])]),
            Err(Error::DimensionMismatch { expected: 2, actual: 1 })
        );
    }

    #[test]
    fn validity_vote_examples() {
        let updates = vec![pv(&[1, 10]), pv(&[2, 20]), pv(&[4, 31])];
        let published = fedavg(&updates).unwrap();
        assert!(validity_vote(&updates, &published, 3));
        let mut tampered = published.clone().into_values();
        tampered[1] += 1;
        assert!(!validity_vote(&updates, &pv(&tampered), 3));
        assert!(!validity_vote(&[], &published, 1));
    }

    fn update_set() -> impl Strategy<Value = Vec<ParamVector>> {
        (1usize..8).prop_flat_map(|dim| {
            prop::collection::vec(
                prop::collection::vec(-(1i64 << 40)..(1i64 << 40), dim).prop_map(ParamVector),
                1..12,
            )
        })
    }

    proptest! {
        #[test]
        fn lattice_round_trip(raw in prop::collection::vec(-(1i64 << 40)..(1i64 << 40), 1..32)) {
            let v = ParamVector(raw);
            prop_assert_eq!(ParamVector::quantize(&v.dequantize()).unwrap(), v);
        }

        #[test]
        fn fedavg_permutation_invariant_and_enveloped(mut updates in update_set(), rot in 0usize..12) {
            let g = fedavg(&updates).unwrap();
            for i in 0..g.dim() {
                let lo = updates.iter().map(|u| u.0[i]).min().unwrap();
                let hi = updates.iter().map(|u| u.0[i]).max().unwrap();
                prop_assert!(lo <= g.0[i] && g.0[i] <= hi);
            }
            let len = updates.len();
            updates.rotate_left(rot % len);
            updates.reverse();
            prop_assert_eq!(fedavg(&updates).unwrap(), g.clone());
            prop_assert!(validity_vote(&updates, &g, 5));
        }
    }
}
