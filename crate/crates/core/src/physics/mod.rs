//! Forward diffraction model.

pub mod amplitude;
pub mod cumulants;
pub mod quadrature;
pub mod transmission;

pub use amplitude::{
    diffraction_angle, full_pattern, grating_factor, intensity_ratio, intensity_ratio_continuous,
    slit_amplitude_cumulant, slit_amplitude_direct, slit_amplitude_direct_with, SlitAmplitude,
};
pub use cumulants::{cumulants, cumulants_with, CumulantSet, EffectiveSlit};
pub use quadrature::{OscillatoryOptions, Phase};
pub use transmission::{transmission_function, vdw_potential, BeamSpec, GratingGeometry, Transmission};
