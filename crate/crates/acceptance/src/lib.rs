//! Holds the acceptance runner in `tests/acceptance.rs`; run it with
//! `cargo test -p debias-acceptance --test acceptance`.
