//! Compiles every Rust snippet in the guide as a doctest.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/data-and-grids.md")]
pub mod data_and_grids {}
#[doc = include_str!("../../../book/src/detectors.md")]
pub mod detectors {}
#[doc = include_str!("../../../book/src/local-explanations.md")]
pub mod local_explanations {}
#[doc = include_str!("../../../book/src/global-explanations.md")]
pub mod global_explanations {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli-and-service.md")]
pub mod cli_and_service {}
