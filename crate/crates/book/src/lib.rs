//! Guide chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/garden.md")]
pub mod garden {}
#[doc = include_str!("../../../book/src/engine.md")]
pub mod engine {}
#[doc = include_str!("../../../book/src/metrics.md")]
pub mod metrics {}
#[doc = include_str!("../../../book/src/policies.md")]
pub mod policies {}
#[doc = include_str!("../../../book/src/closed_loop.md")]
pub mod closed_loop {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
