//! Matter-wave diffraction from transmission gratings with an atom–surface
//! van der Waals wall potential, and the fits that turn measured order
//! intensities into effective slit widths and the `C3` constant.

pub mod error;
pub mod fitting;
pub mod io;
pub mod physics;
pub mod synthetic;
pub mod units;

pub use error::{Error, Result};
pub use physics::*;
