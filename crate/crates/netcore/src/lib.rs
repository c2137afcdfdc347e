//! Road-network domain model for traffic assignment: nodes, directed links
//! with BPR congestion curves, origin-destination demand matrices, and the
//! TNTP text formats used by the common benchmark instances.
//!
//! Internal node ids are dense and 0-based; the file formats are 1-based and
//! the parsers shift ids at the boundary. Everything numeric is generic over
//! [`Scalar`] (implemented by `f32` and `f64`); the default type parameter
//! keeps `f64` the everyday choice.

mod error;
mod network;
mod scalar;
mod tntp;

pub use error::NetError;
pub use network::{
    beckmann_link_integral, bpr_time, normalize_demand, unit_circle_coords, Link, Network, Node,
    OdMatrix,
};
pub use scalar::Scalar;
pub use tntp::{
    parse_node_coords, parse_tntp_net, parse_tntp_trips, write_node_coords, write_tntp_net,
    write_tntp_trips,
};

/// Single-precision aliases; the unsuffixed types default to `f64`.
pub type Network32 = Network<f32>;
pub type OdMatrix32 = OdMatrix<f32>;
pub type Link32 = Link<f32>;
pub type Node32 = Node<f32>;
