//! Many-hypercube quantum error-correcting codes.

pub mod circuit;
pub mod code;
pub mod compiled;
pub mod decoder;
pub mod encoders;
pub mod experiments;
pub mod fault;
pub mod gf2;
pub mod noise;
pub mod pauli;
pub mod sim;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// The book's code listings, compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/encoders.md")]
    mod encoders {}
    #[doc = include_str!("../../../book/src/decoding.md")]
    mod decoding {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
