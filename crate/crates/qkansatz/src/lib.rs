#![no_std]
#![doc = include_str!("../README.md")]

extern crate alloc;

pub mod cmap;
pub mod cone;
pub mod cp4d;
pub mod error;
pub mod excalc;
pub mod gh;
pub mod imhp;
pub mod legendre;
pub mod qk;
pub mod quatmath;
pub mod scalar;

pub use error::{Error, Result};
