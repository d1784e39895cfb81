use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Dense-backend vertex limit (full 2^N basis).
pub const FULL_LIMIT: usize = 10;
/// Vertex limit for the independent-set subspace.
pub const SUBSPACE_LIMIT: usize = 14;
/// Largest basis dimension accepted by either backend.
pub const MAX_DIM: usize = 2048;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    /// All 2^N computational basis states.
    Full,
    /// Independent configurations only. Closed under the on-jumps and the
    /// constrained Hamiltonian, so exact for evolutions started inside it.
    #[default]
    Independent,
}

impl std::str::FromStr for SpaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Self::Full),
            "independent" | "subspace" => Ok(Self::Independent),
            _ => Err(Error::InvalidParameter(format!(
                "unknown space {s:?} (full, independent)"
            ))),
        }
    }
}

/// Ordered computational basis used by density matrices and operators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Space {
    n: usize,
    kind: SpaceKind,
    states: Vec<u64>,
    index: HashMap<u64, usize>,
}

impl Space {
    pub fn new(g: &Graph, kind: SpaceKind) -> Result<Self> {
        let limit = match kind {
            SpaceKind::Full => FULL_LIMIT,
            SpaceKind::Independent => SUBSPACE_LIMIT,
        };
        if g.n() > limit {
            return Err(Error::TooLarge {
                what: match kind {
                    SpaceKind::Full => "quantum simulation (full basis)",
                    SpaceKind::Independent => "quantum simulation (independent subspace)",
                },
                n: g.n(),
                limit,
            });
        }
        let states: Vec<u64> = match kind {
            SpaceKind::Full => (0..1u64 << g.n()).collect(),
            SpaceKind::Independent => (0..1u64 << g.n()).filter(|&s| g.is_independent_index(s)).collect(),
        };
        if states.len() > MAX_DIM {
            return Err(Error::Dimension(format!(
                "basis dimension {} exceeds {MAX_DIM}",
                states.len()
            )));
        }
        let index = states.iter().enumerate().map(|(k, &s)| (s, k)).collect();
        Ok(Self {
            n: g.n(),
            kind,
            states,
            index,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state(&self, k: usize) -> u64 {
        self.states[k]
    }

    pub fn find(&self, s: u64) -> Option<usize> {
        self.index.get(&s).copied()
    }
}
