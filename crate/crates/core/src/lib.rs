//! Repeated two-player matrix games: learning players, hedging over players,
//! round-robin tournaments with elimination, and cross-table analysis.

pub mod analysis;
pub mod config;
pub mod error;
pub mod expr;
pub mod game;
pub mod hedging;
pub mod players;
pub mod seed;
pub mod tournament;

pub use error::{Error, Result};
