pub mod config;
pub mod content;
pub mod dedup;
pub mod doc;
pub mod error;
pub mod mixer;
pub mod parallel;
pub mod pipeline;
pub mod stats;
pub mod taggers;
pub mod thai;

pub use error::{Result, SieveError};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/documents.md")]
    mod documents {}
    #[doc = include_str!("../../../book/src/thai-script.md")]
    mod thai_script {}
    #[doc = include_str!("../../../book/src/taggers.md")]
    mod taggers {}
    #[doc = include_str!("../../../book/src/dedup.md")]
    mod dedup {}
    #[doc = include_str!("../../../book/src/content-filters.md")]
    mod content_filters {}
    #[doc = include_str!("../../../book/src/mixer.md")]
    mod mixer {}
    #[doc = include_str!("../../../book/src/stats.md")]
    mod stats {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
