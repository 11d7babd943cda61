//! Shared fixtures for the criterion benchmarks.

use vdw_core::GratingGeometry;

/// Grating I with a 120 nm bar.
pub fn grating_i() -> GratingGeometry {
    GratingGeometry {
        period_nm: 100.0,
        slit_width_nm: 50.0,
        thickness_nm: 120.0,
        wedge_angle_rad: 7.5f64.to_radians(),
        roughness_variance_nm2: 0.0,
    }
}
