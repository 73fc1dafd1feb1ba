//! Workloads shared by the benchmarks.

use cube_blowup::corpus::{coordinate_planes, cross};
use cube_blowup::pcs::grid_window;
use cube_blowup::PrecubicalSet;

/// `(name, base, n)` for each blowup benchmark.
pub fn blowup_workloads() -> Vec<(&'static str, PrecubicalSet, usize)> {
    vec![
        ("cross", cross(), 1),
        ("coordinate_planes", coordinate_planes(), 2),
        ("grid_2_2", grid_window(2, 2), 2),
        ("grid_3_1", grid_window(3, 1), 3),
    ]
}
