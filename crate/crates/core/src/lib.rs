//! Parallel transport and holonomy of Levi-Civita connections and adapted
//! connections on K-contact manifolds, in a single coordinate chart.
//!
//! Metrics and contact forms are given as symbolic expressions ([`expr`]),
//! connection coefficients are derived symbolically ([`connection`]), and
//! transport is integrated with fixed-step RK4 ([`transport`]). Sampled
//! holonomy groups are analysed for orthogonal invariant splittings
//! ([`holonomy`]) and compared across the quotient map ([`theorem_lab`]).

pub mod catalog;
pub mod config;
pub mod connection;
pub mod error;
pub mod expr;
pub mod holonomy;
pub mod linalg;
pub mod manifold;
pub mod report;
pub mod theorem_lab;
pub mod transport;

pub use error::{Error, Result};
pub use manifold::{KContactSpec, ManifoldSpec, RiemannianSpec};
pub use transport::{Curve, Segment};
