//! Large neighborhood search for the vehicle routing problem with time windows,
//! with a dynamic partial removal destroy step driven by pluggable policies.

pub mod destroy;
pub mod error;
pub mod hrgcn;
pub mod io;
pub mod model;
pub mod policy;
pub mod repair;
pub mod search;
pub mod trace;

pub use error::{Error, Result};
pub use model::{Instance, Node, Route, Solution, DEPOT};
pub use search::{lns_run, Operator, SearchConfig, SearchResult};
