//! Exact recovery in the two-community stochastic block model.

pub mod error;
pub mod harness;
pub mod ml;
pub mod model;
pub mod sdp;
pub mod seed;
pub mod tail;
pub mod two_phase;

pub use error::{Error, Result};
pub use model::{
    agreement, count_edges_between, cut_size, generate_sbm, parse_graph, write_graph, Graph,
    Labeling, SbmParams,
};
