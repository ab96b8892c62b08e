//! Hand landmarks in, robot commands out.
//!
//! Frames are reduced to keyframes ([`keyframe`]), summarized as canonical
//! gesture text ([`encoder`]), interpreted against the fleet's command
//! schemas ([`reasoner`], [`registry`]) and dispatched over HTTP
//! ([`dispatch`]). Successful interactions are remembered ([`memory`]) and
//! shown to the reasoner as examples. [`eval`] measures accuracy against
//! simulated robots.
//!
//! The guide in `book/` walks through each stage with runnable examples.

pub mod encoder;
pub mod frame;
pub mod keyframe;
pub mod eval;
pub mod fleet;
pub mod registry;
pub mod memory;
pub mod reasoner;
pub mod config;
pub mod dispatch;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/keyframes.md")]
    mod keyframes {}
    #[doc = include_str!("../../../book/src/description-grammar.md")]
    mod description_grammar {}
    #[doc = include_str!("../../../book/src/fleet.md")]
    mod fleet {}
    #[doc = include_str!("../../../book/src/reasoning.md")]
    mod reasoning {}
    #[doc = include_str!("../../../book/src/memory.md")]
    mod memory {}
    #[doc = include_str!("../../../book/src/dispatch.md")]
    mod dispatch {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
