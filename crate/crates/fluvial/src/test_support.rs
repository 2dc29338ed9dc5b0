//! Deterministic grid builders and brute-force oracles used by the test
//! suites. The oracles recompute drainage quantities from first principles
//! (exhaustive scans, fixed-point iteration) and never call the production
//! code paths they are checking.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::{Direction, Tile, TileGrid};

/// Seeded random grid: land in [0,10), offsets in [0,1)^2, moisture in
/// [0,2), no water, everything above sea level.
pub fn random_grid(width: usize, height: usize, seed: u64) -> TileGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tiles = (0..width * height)
        .map(|_| Tile {
            offset_x: rng.random::<f64>(),
            offset_y: rng.random::<f64>(),
            land_height: rng.random::<f64>() * 10.0,
            moisture: rng.random::<f64>() * 2.0,
            ..Tile::default()
        })
        .collect();
    let mut grid = TileGrid::from_tiles(width, height, tiles);
    grid.sea_level = -1.0;
    grid
}

/// Like [`random_grid`] but with the given sea level and water filled so
/// that submerged tiles read exactly sea level.
pub fn random_grid_with_sea(width: usize, height: usize, seed: u64, sea_level: f64) -> TileGrid {
    let mut grid = random_grid(width, height, seed);
    grid.sea_level = sea_level;
    for i in 0..grid.len() {
        let t = grid.tile_mut(i);
        t.water_height = (sea_level - t.land_height).max(0.0);
    }
    grid
}

/// Exhaustive steepest-descent scan: computes the gradient toward every
/// strictly lower neighbor and returns the first direction (in N, E, S, W
/// order) attaining the maximum.
pub fn drain_direction_oracle(grid: &TileGrid, idx: usize) -> Option<Direction> {
    let own = grid.total_height(idx);
    let mut gradients: Vec<(Direction, f64)> = Vec::new();
    for dir in Direction::ALL {
        if let Some(n) = grid.neighbor(idx, dir) {
            let drop = own - grid.total_height(n);
            if drop > 0.0 {
                let dist = grid.node_distance(idx, n);
                let g = if dist > 0.0 { drop / dist } else { f64::INFINITY };
                gradients.push((dir, g));
            }
        }
    }
    let best = gradients
        .iter()
        .map(|&(_, g)| g)
        .fold(f64::NEG_INFINITY, f64::max);
    gradients.into_iter().find(|&(_, g)| g == best).map(|(d, _)| d)
}

/// Flattened oracle drain targets for every tile.
pub fn drain_targets_oracle(grid: &TileGrid) -> Vec<Option<usize>> {
    (0..grid.len())
        .map(|idx| drain_direction_oracle(grid, idx).map(|d| grid.neighbor(idx, d).unwrap()))
        .collect()
}

/// Fixed-point drainage oracle: iterates D_{i+1}(t) = m(t) + k_d * sum of
/// D_i over tiles draining into t (targets recomputed independently) until
/// the relative change drops below 1e-13.
pub fn fixed_point_drainage_oracle(
    grid: &TileGrid,
    _state: &crate::hydrology::DrainageState,
    k_d: f64,
) -> Vec<f64> {
    let targets = drain_targets_oracle(grid);
    let n = grid.len();
    let mut d: Vec<f64> = (0..n).map(|i| grid.tile(i).moisture).collect();
    loop {
        let mut upstream = vec![0.0; n];
        for (u, tgt) in targets.iter().enumerate() {
            if let Some(t) = tgt {
                upstream[*t] += d[u];
            }
        }
        let next: Vec<f64> = (0..n)
            .map(|t| grid.tile(t).moisture + k_d * upstream[t])
            .collect();
        let max_rel = d
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs() / b.abs().max(1e-30))
            .fold(0.0, f64::max);
        d = next;
        if max_rel < 1e-13 {
            return d;
        }
    }
}

/// Brute-force lowest leaf of minimum `m`: enumerates every tile whose
/// drainage chain terminates at `m`, keeps the ones nothing drains into,
/// and picks the lowest total height with row-major tie-break.
pub fn lowest_leaf_oracle(grid: &TileGrid, m: usize) -> Option<usize> {
    let targets = drain_targets_oracle(grid);
    let mut inbound = vec![0usize; grid.len()];
    for tgt in targets.iter().flatten() {
        inbound[*tgt] += 1;
    }
    let mut best: Option<usize> = None;
    for start in 0..grid.len() {
        if inbound[start] != 0 || start == m {
            continue;
        }
        let mut cur = start;
        while let Some(next) = targets[cur] {
            cur = next;
        }
        if cur != m {
            continue;
        }
        best = match best {
            None => Some(start),
            Some(b) => {
                let (hb, hs) = (grid.total_height(b), grid.total_height(start));
                if hs < hb || (hs == hb && start < b) {
                    Some(start)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}
