//! Neural networks on framed quiver moduli.
//!
//! A network is a framed quiver representation; its weights live in the chart `U` of the
//! moduli space, hidden-layer metrics come from the path matrices `ρ`, and activations are
//! moment-map inverses of toric varieties.

pub mod approx;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod network;
pub mod quiver;
pub mod representation;
pub mod scalar;
pub mod toric;
pub mod topology;
pub mod trainer;
