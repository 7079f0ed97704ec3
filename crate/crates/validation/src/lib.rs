//! Host crate for the `acceptance` test target. It runs after the other
//! workspace packages, so a red criterion does not hide their results.
