//! Prime ends, Mazurkiewicz boundaries, discrete p-capacity and John-type
//! classification for bounded planar domains on a uniform grid.

pub mod acceptance;
pub mod domain;
pub mod ends;
pub mod error;
pub mod geom;
pub mod io;
pub mod john;
pub mod mazurkiewicz;
pub mod modulus;
pub mod regions;

pub use error::{Error, Result};
