//! Forward incorrectness analysis with backward U-Turn replay.
//!
//! A forward Incorrectness Logic pass derives reachable (error) states and
//! keeps its proof tree; the U-Turn pass walks that tree backward with
//! Sufficient Incorrectness Logic to find inputs guaranteed to reach a chosen
//! subset of those states. Everything runs over a bounded integer universe so
//! each rule can be checked against the exact collecting semantics.

#![allow(clippy::should_implement_trait)]

pub mod assertions;
pub mod axioms;
pub mod error;
pub mod exec;
pub mod gen;
pub mod il;
pub mod json;
pub mod lang;
pub mod proof;
pub mod semantics;
pub mod sil;
pub mod state;
pub mod uturn;

pub use error::{Error, Result};
