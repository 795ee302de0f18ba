pub mod analysis;
pub mod commands;
pub mod config;
pub mod error;
pub mod fixtures;
pub mod grid;
pub mod interface;
pub mod ladder;
pub mod matrix;
pub mod ops;
pub mod polynomial;
pub mod report;
pub mod solver;
pub mod suite;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub struct Introduction;
    #[doc = include_str!("../../../book/src/operators.md")]
    pub struct Operators;
    #[doc = include_str!("../../../book/src/grids.md")]
    pub struct Grids;
    #[doc = include_str!("../../../book/src/solving.md")]
    pub struct Solving;
    #[doc = include_str!("../../../book/src/estimators.md")]
    pub struct Estimators;
    #[doc = include_str!("../../../book/src/ladder.md")]
    pub struct Ladder;
    #[doc = include_str!("../../../book/src/cli.md")]
    pub struct Cli;
}
