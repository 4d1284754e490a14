//! End-to-end acceptance checks for `nvnmr`; see `tests/acceptance.rs`.
