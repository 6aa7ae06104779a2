//! Holds the acceptance suite for `lightcone`; see `tests/acceptance.rs`.
