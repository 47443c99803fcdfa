//! Classical and entangled values of multiplayer nonlocal games.
//!
//! The crate is organised by the kind of game or bound being computed:
//!
//! - [`game`]: MOD-m games, exact classical values, strategy evaluation,
//!   parallel repetition and the input connection graph.
//! - [`angle`]: angle games, Boyer games, Schmidt-strategy reduction and the
//!   exact analysis of the uniform angle game.
//! - [`quantum`]: explicit finite-dimensional quantum strategies.
//! - [`hypnorm`]: hypergraph norms of free XOR game tensors.
//! - [`gowers`]: Gowers norms, linear-forms games and polynomial strategies.
//! - [`ugsdp`]: the unique-game vector relaxation and its rounding.

pub mod angle;
pub mod error;
pub mod game;
pub mod gowers;
pub mod hypnorm;
pub mod quantum;
pub mod rational;
pub mod rng;
pub mod ugsdp;


pub use error::{Error, Result};
pub use rational::Rational;
