//! The guide's chapters, included as rustdoc so every code listing in the
//! book compiles and runs under `cargo test --doc`. mdbook cannot execute
//! listings itself; routing the markdown through rustdoc keeps the book and
//! the library in sync.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod chapter_introduction {}

#[doc = include_str!("../../../book/src/model.md")]
pub mod chapter_model {}

#[doc = include_str!("../../../book/src/gradients.md")]
pub mod chapter_gradients {}

#[doc = include_str!("../../../book/src/training.md")]
pub mod chapter_training {}

#[doc = include_str!("../../../book/src/certificates.md")]
pub mod chapter_certificates {}

#[doc = include_str!("../../../book/src/conditioning.md")]
pub mod chapter_conditioning {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod chapter_experiments {}

#[doc = include_str!("../../../book/src/numerics.md")]
pub mod chapter_numerics {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod chapter_cli {}
