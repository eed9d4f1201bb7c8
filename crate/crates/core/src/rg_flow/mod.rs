//! Graph-by-graph renormalization-group flow of boundary interactions:
//! amplitudes, UV finiteness, scale consistency, the splitting diagram and
//! the boundary anomaly probe.

mod amplitude;
mod checks;
mod fields;
mod graphs;

pub use amplitude::{integrate_ordered_sectors, leg_value, AmplitudeResult, FlowModel, Window};
pub use checks::*;
pub use fields::{FieldPreset, Profile, TestField};
pub use graphs::{enumerate_graphs, GraphCaps, GraphSpec, Valences, VertexKind};
