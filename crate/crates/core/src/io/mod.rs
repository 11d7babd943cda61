//! Scan files, peak-area extraction, grating/beam descriptions and results.

pub mod config;
pub mod peaks;
pub mod results;
pub mod scan;

pub use config::{
    beam_preset, beam_preset_at, geometry_preset, load_beam, load_geometry, parse_beam, parse_geometry,
    parse_key_values, GeometryRecord,
};
pub use peaks::{extract_peak_areas, BackgroundModel, ExtractionOptions, PeakEntry, PeakTable, DEFAULT_RESOLUTION_RAD};
pub use results::{load_results, results_from_str, results_to_string, save_results, FitRecord, RESULTS_SCHEMA};
pub use scan::{parse_scan, parse_scan_str, serialize_scan, DiffractionScan, ScanMetadata, ScanSample};
