//! Synthetic demonstration scenes for the acceptance suite (shared with the core tests).

#[path = "../../core/tests/common/mod.rs"]
pub mod scenes;
