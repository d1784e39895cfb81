//! Built-in instances.

use crate::error::{Error, Result};
use crate::graph::{gen_open_chain, Graph};
use crate::io::parse_graph;

pub const FOUR_NODE: &str = include_str!("../fixtures/four_node.txt");
pub const HOUSE: &str = include_str!("../fixtures/house.txt");

/// Four vertices, edges 1-2, 2-3, 2-4, 3-4.
pub fn four_node() -> Graph {
    parse_graph(FOUR_NODE).expect("bundled fixture parses")
}

/// Seven-vertex house graph.
pub fn house() -> Graph {
    parse_graph(HOUSE).expect("bundled fixture parses")
}

/// Which built-in a graph is, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Builtin {
    FourNode,
    House,
    Chain(usize),
}

impl Builtin {
    pub fn graph(self) -> Result<Graph> {
        match self {
            Builtin::FourNode => Ok(four_node()),
            Builtin::House => Ok(house()),
            Builtin::Chain(n) => gen_open_chain(n),
        }
    }

    pub fn name(self) -> String {
        match self {
            Builtin::FourNode => "four-node".into(),
            Builtin::House => "house".into(),
            Builtin::Chain(n) => format!("chain:{n}"),
        }
    }

    /// Recognizes a graph equal (same labelling) to a built-in.
    pub fn identify(g: &Graph) -> Option<Self> {
        if *g == four_node() {
            Some(Builtin::FourNode)
        } else if *g == house() {
            Some(Builtin::House)
        } else if gen_open_chain(g.n()).is_ok_and(|c| c == *g) {
            Some(Builtin::Chain(g.n()))
        } else {
            None
        }
    }
}

impl std::str::FromStr for Builtin {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "four-node" | "four_node" | "4node" => Ok(Builtin::FourNode),
            "house" => Ok(Builtin::House),
            _ => {
                let n = s
                    .strip_prefix("chain:")
                    .and_then(|n| n.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| {
                        Error::InvalidParameter(format!(
                            "unknown builtin {s:?} (four-node, house, chain:N)"
                        ))
                    })?;
                Ok(Builtin::Chain(n))
            }
        }
    }
}
