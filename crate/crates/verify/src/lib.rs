//! Holds the `acceptance` test target; run it with
//! `cargo test -p csit-verify --test acceptance`.
