//! Height regulation: the value and gradient constraints that hold the
//! terrain near its constraint map, and the sea-level reset.

use crate::grid::{Direction, TileGrid};

/// Pulls every tile's land height toward its constraint height, weighted by
/// the tile's value constraint strength.
pub fn apply_value_constraint(grid: &mut TileGrid) {
    for tile in grid.tiles_mut() {
        let v = tile.value_strength;
        tile.land_height += v * (tile.constraint_height - tile.land_height);
    }
}

/// Pulls every tile toward the height its neighbors assert from the
/// constraint map's local relief.
///
/// Each in-bounds neighbor n of tile t asserts h_n + (c_t - c_n); the ideal
/// is the average of those assertions and the tile moves toward it by its
/// gradient constraint strength. All tiles read a land-height snapshot
/// taken at phase start, so the update is simultaneous and independent of
/// iteration order. The ideal is accumulated as c_t plus the mean neighbor
/// residual (h_n - c_n), which is algebraically identical and keeps
/// h = c + const an exact fixed point.
pub fn apply_gradient_constraint(grid: &mut TileGrid) {
    let snapshot: Vec<f64> = grid.tiles().iter().map(|t| t.land_height).collect();
    for idx in 0..grid.len() {
        let g = grid.tile(idx).gradient_strength;
        let c_t = grid.tile(idx).constraint_height;
        let mut residual = 0.0;
        let mut count = 0;
        for dir in Direction::ALL {
            if let Some(n) = grid.neighbor(idx, dir) {
                residual += snapshot[n] - grid.tile(n).constraint_height;
                count += 1;
            }
        }
        let ideal = c_t + residual / count as f64;
        let tile = grid.tile_mut(idx);
        tile.land_height = snapshot[idx] + g * (ideal - snapshot[idx]);
    }
}

/// Sets each tile's water so that submerged land reads exactly sea level:
/// water = max(0, sea_level - land).
pub fn reset_sea_level(grid: &mut TileGrid) {
    let sea = grid.sea_level;
    for tile in grid.tiles_mut() {
        tile.water_height = (sea - tile.land_height).max(0.0);
    }
}
