//! Shared fixtures for the criterion benches live in `benches/`.
