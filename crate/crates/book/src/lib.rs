//! Guide chapters compiled as doc-tests.

#[doc = include_str!("../../../book/src/overview.md")]
pub mod overview {}

#[doc = include_str!("../../../book/src/spectral.md")]
pub mod spectral {}

#[doc = include_str!("../../../book/src/kdv.md")]
pub mod kdv {}

#[doc = include_str!("../../../book/src/hierarchy.md")]
pub mod hierarchy {}

#[doc = include_str!("../../../book/src/profile.md")]
pub mod profile {}

#[doc = include_str!("../../../book/src/fluid.md")]
pub mod fluid {}

#[doc = include_str!("../../../book/src/regime.md")]
pub mod regime {}

#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
