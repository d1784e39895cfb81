//! Probabilistic and quantum cellular automata for the maximum independent
//! set problem, with exact Markov-chain and open-system reference solvers.

pub mod error;
pub mod experiments;
pub mod fit;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod markov;
pub mod pca;
pub mod quantum;
pub mod sparse;

pub use error::{Error, Result};
pub use graph::{Config, Graph, IndependenceClass};
