use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// Opaque participant identifier.
///
/// Rendered as `n` followed by a zero-padded index (`n0007`), which is also the
/// wire form in every JSON file. Ordering is numeric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{:04}", self.0)
    }
}

impl FromStr for NodeId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('n')
            .and_then(|digits| digits.parse::<u32>().ok())
            .map(NodeId)
            .ok_or_else(|| Error::Parse(format!("bad node id `{s}`")))
    }
}

impl Serialize for NodeId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for NodeId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse_agree() {
        let id = NodeId(42);
        assert_eq!(id.to_string(), "n0042");
        assert_eq!("n0042".parse::<NodeId>().unwrap(), id);
        assert_eq!("n123456".parse::<NodeId>().unwrap(), NodeId(123456));
        assert!("x12".parse::<NodeId>().is_err());
        assert!("n".parse::<NodeId>().is_err());
    }

    #[test]
    fn json_form_is_a_string() {
        assert_eq!(serde_json::to_string(&NodeId(3)).unwrap(), "\"n0003\"");
        let back: NodeId = serde_json::from_str("\"n0003\"").unwrap();
        assert_eq!(back, NodeId(3));
    }
}
