pub mod dataset;
pub mod error;
pub mod harness;
pub mod irls;
pub mod linalg;
pub mod models;
pub mod persist;
pub mod qp;
pub mod symvec;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/surfaces.md")]
    mod surfaces {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/solvers.md")]
    mod solvers {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
