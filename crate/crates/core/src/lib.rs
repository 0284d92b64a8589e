pub mod model;
pub mod formats;
pub mod pipeline;
pub mod repository;
pub mod catalogue;
pub mod federation;
pub mod node;

// The guide under book/ is compiled as doctests so its snippets keep working.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/strata.md")]
    mod strata {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/repository.md")]
    mod repository {}
    #[doc = include_str!("../../../book/src/catalogue.md")]
    mod catalogue {}
    #[doc = include_str!("../../../book/src/federation.md")]
    mod federation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
