//! Acceptance criteria for `coopalign`; see `tests/acceptance.rs`.
