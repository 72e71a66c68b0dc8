//! Minimal neural emulators of chaotic maps.
//!
//! The crate trains single-hidden-layer networks on Lorenz-63 and Hénon
//! data, compares their finite-time Lyapunov exponents with the true maps,
//! decomposes the trained neuron map into rotation, stretch and compression
//! sub-steps, and evaluates neuron-count lower bounds.

pub mod bounds;
pub mod dataset;
pub mod dynamics;
pub mod error;
pub mod ftle;
pub mod geometry;
pub mod network;
pub mod plot;
pub mod rng;
pub mod spatial;
pub mod training;

pub use dynamics::{DifferentiableMap, DiscreteMap, HenonMap, L63Map};
pub use network::{Activation, Mlp};
