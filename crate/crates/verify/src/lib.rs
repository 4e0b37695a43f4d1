//! Holds the long-running acceptance suite in `tests/acceptance.rs`. Kept in
//! its own package so it runs after the unit and integration tests.
