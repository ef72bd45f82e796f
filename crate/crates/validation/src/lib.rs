//! Holds the workspace acceptance suite in `tests/acceptance.rs`. It runs
//! after the unit and integration tests of the other crates, so a failing
//! criterion never hides their results.
