//! Holds the workspace acceptance suite under `tests/acceptance.rs`.
