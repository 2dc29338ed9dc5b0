//! Per-tick drainage: steepest-descent drain directions, the resulting
//! forest of tributaries rooted at local minima, and decayed total drainage
//! accumulated in a single pass over the forest.

use std::collections::VecDeque;

use crate::grid::{Direction, TileGrid};

/// Sentinel for "drains nowhere" in the flattened target table.
const NO_TARGET: usize = usize::MAX;

/// Transient per-tick drainage forest.
///
/// `drain_target` holds at most one outgoing edge per tile and every edge
/// strictly decreases total height, so the relation is a forest whose roots
/// are the local minima. `tributaries` is the exact inverse relation stored
/// as a 4-bit direction mask per tile. The state owns its buffers and can
/// be rebuilt in place every tick without reallocating.
#[derive(Debug, Clone, Default)]
pub struct DrainageState {
    width: usize,
    drain_target: Vec<Option<Direction>>,
    target_index: Vec<usize>,
    tributaries: Vec<u8>,
    pub(crate) dist_to_target: Vec<f64>,
    pub total_drainage: Vec<f64>,
    /// Tiles that drain nowhere, in row-major order.
    pub minima: Vec<usize>,
    /// Parallel to `minima`: true when the minimum carries water and is
    /// therefore excluded from gorge carving.
    pub minima_has_water: Vec<bool>,
    totals: Vec<f64>,
    moisture: Vec<f64>,
    remaining: Vec<u8>,
    queue: VecDeque<usize>,
}

impl DrainageState {
    pub fn new() -> Self {
        DrainageState::default()
    }

    #[inline]
    pub fn drain_target(&self, idx: usize) -> Option<Direction> {
        self.drain_target[idx]
    }

    /// Tile index the given tile drains to, if any.
    #[inline]
    pub fn target_of(&self, idx: usize) -> Option<usize> {
        let t = self.target_index[idx];
        (t != NO_TARGET).then_some(t)
    }

    /// Inbound directions: `d` is yielded when the neighbor in direction `d`
    /// drains into `idx`.
    pub fn tributaries(&self, idx: usize) -> impl Iterator<Item = Direction> + '_ {
        let mask = self.tributaries[idx];
        Direction::ALL
            .into_iter()
            .filter(move |d| mask & d.bit() != 0)
    }

    #[inline]
    pub fn tributary_count(&self, idx: usize) -> u32 {
        self.tributaries[idx].count_ones()
    }

    #[inline]
    pub fn is_leaf(&self, idx: usize) -> bool {
        self.tributaries[idx] == 0
    }

    /// Index of the tile one step in `dir` from `idx`. Only valid for
    /// directions known to be in bounds (drain targets and tributaries).
    #[inline]
    pub(crate) fn step(&self, idx: usize, dir: Direction) -> usize {
        match dir {
            Direction::North => idx - self.width,
            Direction::East => idx + 1,
            Direction::South => idx + self.width,
            Direction::West => idx - 1,
        }
    }

    /// Rebuilds the forest for the grid's current heights, reusing this
    /// state's buffers. `distances` must be the grid's neighbor-distance
    /// table (see [`TileGrid::neighbor_distances`]); node offsets are fixed
    /// after initialization, so the table stays valid across ticks.
    pub fn rebuild(&mut self, grid: &TileGrid, distances: &[[f64; 4]]) {
        let n = grid.len();
        let width = grid.width();
        let height = grid.height();
        assert_eq!(distances.len(), n, "distance table does not match grid");
        self.width = width;

        self.drain_target.clear();
        self.drain_target.resize(n, None);
        self.target_index.clear();
        self.target_index.resize(n, NO_TARGET);
        self.tributaries.clear();
        self.tributaries.resize(n, 0);
        self.dist_to_target.clear();
        self.dist_to_target.resize(n, f64::NAN);
        self.total_drainage.clear();
        self.total_drainage.resize(n, 0.0);
        self.minima.clear();
        self.minima_has_water.clear();

        self.totals.clear();
        self.moisture.clear();
        for t in grid.tiles() {
            self.totals.push(t.total_height());
            self.moisture.push(t.moisture);
        }
        let totals = &self.totals;

        for row in 0..height {
            for col in 0..width {
                let idx = row * width + col;
                let own = totals[idx];
                let dist = &distances[idx];
                // Steepest-descent candidate; ties keep the earlier
                // direction in N, E, S, W order. A coincident lower node
                // (distance 0) gives an infinite gradient.
                let mut best_dir = None;
                let mut best_gradient = f64::NEG_INFINITY;
                let mut consider = |dir: Direction, n_idx: usize| {
                    let drop = own - totals[n_idx];
                    if drop > 0.0 {
                        let d = dist[dir.index()];
                        let gradient = if d > 0.0 { drop / d } else { f64::INFINITY };
                        if gradient > best_gradient {
                            best_gradient = gradient;
                            best_dir = Some((dir, n_idx));
                        }
                    }
                };
                if row > 0 {
                    consider(Direction::North, idx - width);
                }
                if col + 1 < width {
                    consider(Direction::East, idx + 1);
                }
                if row + 1 < height {
                    consider(Direction::South, idx + width);
                }
                if col > 0 {
                    consider(Direction::West, idx - 1);
                }

                match best_dir {
                    Some((dir, n_idx)) => {
                        self.drain_target[idx] = Some(dir);
                        self.target_index[idx] = n_idx;
                        self.dist_to_target[idx] = dist[dir.index()];
                        self.tributaries[n_idx] |= dir.opposite().bit();
                    }
                    None => {
                        self.minima.push(idx);
                        self.minima_has_water
                            .push(grid.tile(idx).water_height > 0.0);
                    }
                }
            }
        }
    }
}

/// Steepest-descent drain direction for one tile.
///
/// Among neighbors with strictly lower total height, picks the one that
/// maximizes (total height drop) / (node distance). Ties resolve in N, E,
/// S, W order. A coincident lower node (distance 0) counts as an infinite
/// gradient. Returns `None` for a local minimum.
pub fn compute_drain_direction(grid: &TileGrid, idx: usize) -> Option<Direction> {
    let own = grid.total_height(idx);
    let mut best: Option<(Direction, f64)> = None;
    for dir in Direction::ALL {
        let Some(n) = grid.neighbor(idx, dir) else {
            continue;
        };
        let drop = own - grid.total_height(n);
        if drop <= 0.0 {
            continue;
        }
        let dist = grid.node_distance(idx, n);
        let gradient = if dist > 0.0 { drop / dist } else { f64::INFINITY };
        match best {
            Some((_, g)) if gradient <= g => {}
            _ => best = Some((dir, gradient)),
        }
    }
    best.map(|(dir, _)| dir)
}

/// Builds the full drainage forest for the current heights: drain targets,
/// the inverse tributary masks, and the row-major list of local minima with
/// their has-water flags. Total drainage is left zeroed; see
/// [`accumulate_drainage`].
pub fn build_drainage_forest(grid: &TileGrid) -> DrainageState {
    let mut state = DrainageState::new();
    state.rebuild(grid, &grid.neighbor_distances());
    state
}

/// Computes total drainage D(t) = moisture(t) + k_d * sum of D over t's
/// tributaries, visiting each tile exactly once. Moisture is read from the
/// snapshot taken when the forest was built.
///
/// Tiles are processed leaf-inward with a work queue keyed on remaining
/// unprocessed tributaries (no recursion, so depth is unbounded). A tile's
/// tributary sum is always taken in N, E, S, W order, which makes the result
/// independent of queue order. Returns the visit count, which equals the
/// tile count on any forest.
pub fn accumulate_drainage(state: &mut DrainageState, grid: &TileGrid, k_d: f64) -> usize {
    assert!((0.0..=1.0).contains(&k_d), "k_d must be in [0,1]");
    let n = grid.len();
    assert_eq!(state.tributaries.len(), n, "state does not match grid");

    state.remaining.clear();
    state
        .remaining
        .extend(state.tributaries.iter().map(|m| m.count_ones() as u8));
    state.queue.clear();
    for idx in 0..n {
        if state.remaining[idx] == 0 {
            state.queue.push_back(idx);
        }
    }

    let mut visits = 0usize;
    while let Some(idx) = state.queue.pop_front() {
        visits += 1;
        let mask = state.tributaries[idx];
        let mut upstream = 0.0;
        for dir in Direction::ALL {
            if mask & dir.bit() != 0 {
                upstream += state.total_drainage[state.step(idx, dir)];
            }
        }
        state.total_drainage[idx] = state.moisture[idx] + k_d * upstream;
        let parent = state.target_index[idx];
        if parent != NO_TARGET {
            state.remaining[parent] -= 1;
            if state.remaining[parent] == 0 {
                state.queue.push_back(parent);
            }
        }
    }
    visits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Tile;
    use crate::test_support::{drain_direction_oracle, fixed_point_drainage_oracle, random_grid};

    /// 1 x n strip with the given land heights and centered nodes.
    fn strip(heights: &[f64]) -> TileGrid {
        let tiles = heights
            .iter()
            .map(|&h| Tile {
                land_height: h,
                moisture: 1.0,
                ..Tile::default()
            })
            .collect();
        TileGrid::from_tiles(heights.len(), 1, tiles)
    }

    #[test]
    fn flat_grid_has_no_drainage() {
        let g = TileGrid::new(4, 4);
        for idx in 0..g.len() {
            assert_eq!(compute_drain_direction(&g, idx), None);
        }
        let state = build_drainage_forest(&g);
        assert_eq!(state.minima.len(), 16);
    }

    #[test]
    fn single_lower_neighbor_wins() {
        let mut g = TileGrid::new(3, 3);
        for i in 0..9 {
            g.tile_mut(i).land_height = 12.0;
        }
        let center = g.index(1, 1);
        g.tile_mut(center).land_height = 10.0;
        g.tile_mut(g.index(1, 2)).land_height = 5.0;
        assert_eq!(compute_drain_direction(&g, center), Some(Direction::East));
    }

    #[test]
    fn steepest_gradient_beats_larger_drop() {
        // North: drop 2 over node distance 1 (gradient 2.0).
        // East: drop 3 over node distance 2 (gradient 1.5).
        let mut g = TileGrid::new(3, 3);
        for i in 0..9 {
            g.tile_mut(i).land_height = 12.0;
        }
        let center = g.index(1, 1);
        g.tile_mut(center).land_height = 10.0;
        g.tile_mut(center).offset_x = 0.0;
        g.tile_mut(center).offset_y = 0.5;
        let north = g.index(0, 1);
        g.tile_mut(north).land_height = 8.0;
        g.tile_mut(north).offset_x = 0.0;
        g.tile_mut(north).offset_y = 0.5;
        let east = g.index(1, 2);
        g.tile_mut(east).land_height = 7.0;
        g.tile_mut(east).offset_x = 1.0;
        g.tile_mut(east).offset_y = 0.5;
        assert_eq!(g.node_distance(center, north), 1.0);
        assert_eq!(g.node_distance(center, east), 2.0);
        assert_eq!(compute_drain_direction(&g, center), Some(Direction::North));
        assert_eq!(
            compute_drain_direction(&g, center),
            drain_direction_oracle(&g, center)
        );
    }

    #[test]
    fn coincident_lower_node_is_infinite_gradient() {
        // Tiles 0 and 1 share a node position (distance 0); tile 0 is only
        // slightly lower while tile 2 is far lower at finite distance. The
        // infinite gradient toward the coincident node wins.
        let mut g = TileGrid::new(3, 1);
        g.tile_mut(0).land_height = 9.9;
        g.tile_mut(0).offset_x = 1.0;
        g.tile_mut(1).land_height = 10.0;
        g.tile_mut(1).offset_x = 0.0;
        g.tile_mut(2).land_height = 0.0;
        assert_eq!(g.node_distance(0, 1), 0.0);
        assert_eq!(compute_drain_direction(&g, 1), Some(Direction::West));
        let state = build_drainage_forest(&g);
        assert_eq!(state.drain_target(1), Some(Direction::West));
        // An equal-height coincident node is not a drainage candidate.
        g.tile_mut(0).land_height = 10.0;
        assert_eq!(compute_drain_direction(&g, 1), Some(Direction::East));
    }

    #[test]
    fn ramp_drains_east_to_single_minimum() {
        let g = strip(&[3.0, 2.0, 1.0, 0.0]);
        let state = build_drainage_forest(&g);
        for idx in 0..3 {
            assert_eq!(state.drain_target(idx), Some(Direction::East));
            assert_eq!(state.target_of(idx), Some(idx + 1));
        }
        assert_eq!(state.drain_target(3), None);
        assert_eq!(state.minima, vec![3]);
        assert_eq!(state.minima_has_water, vec![false]);
        // Tributaries are the exact inverse relation.
        assert!(state.is_leaf(0));
        for idx in 1..4 {
            let dirs: Vec<_> = state.tributaries(idx).collect();
            assert_eq!(dirs, vec![Direction::West]);
        }
    }

    #[test]
    fn submerged_grid_is_all_water_minima() {
        let mut g = TileGrid::new(3, 3);
        g.sea_level = 0.0;
        for i in 0..9 {
            g.tile_mut(i).land_height = -5.0;
            g.tile_mut(i).water_height = 5.0;
        }
        let state = build_drainage_forest(&g);
        assert_eq!(state.minima.len(), 9);
        assert!(state.minima_has_water.iter().all(|&w| w));
        // Row-major ordering.
        assert_eq!(state.minima, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn forest_matches_exhaustive_oracle_on_random_grids() {
        for seed in 0..20 {
            let g = random_grid(8, 8, seed);
            let state = build_drainage_forest(&g);
            for idx in 0..g.len() {
                assert_eq!(
                    state.drain_target(idx),
                    drain_direction_oracle(&g, idx),
                    "seed {seed} tile {idx}"
                );
                assert_eq!(state.drain_target(idx), compute_drain_direction(&g, idx));
            }
        }
    }

    #[test]
    fn rebuild_reuses_buffers_and_matches_fresh_build() {
        let distances = random_grid(12, 9, 1).neighbor_distances();
        let mut state = DrainageState::new();
        for seed in 1..6 {
            let g = {
                // Same offsets (seed 1 geometry), different heights.
                let mut g = random_grid(12, 9, 1);
                let h = random_grid(12, 9, seed * 7 + 100);
                for i in 0..g.len() {
                    g.tile_mut(i).land_height = h.tile(i).land_height;
                }
                g
            };
            state.rebuild(&g, &distances);
            let fresh = build_drainage_forest(&g);
            for idx in 0..g.len() {
                assert_eq!(state.drain_target(idx), fresh.drain_target(idx));
                assert_eq!(state.target_of(idx), fresh.target_of(idx));
            }
            assert_eq!(state.minima, fresh.minima);
        }
    }

    #[test]
    fn forest_is_acyclic_and_strictly_decreasing() {
        let g = random_grid(16, 16, 7);
        let state = build_drainage_forest(&g);
        for idx in 0..g.len() {
            if let Some(t) = state.target_of(idx) {
                assert!(g.total_height(t) < g.total_height(idx));
            }
            // Following targets must reach a minimum within len() steps.
            let mut cur = idx;
            let mut steps = 0;
            while let Some(next) = state.target_of(cur) {
                cur = next;
                steps += 1;
                assert!(steps <= g.len(), "cycle detected from tile {idx}");
            }
        }
    }

    #[test]
    fn leaf_drainage_is_its_moisture() {
        let mut g = strip(&[3.0, 2.0, 1.0]);
        g.tile_mut(0).moisture = 2.5;
        let mut state = build_drainage_forest(&g);
        accumulate_drainage(&mut state, &g, 0.68);
        assert_eq!(state.total_drainage[0], 2.5);
    }

    #[test]
    fn chain_accumulation_hand_values() {
        // a -> b -> c with moisture 1 and k_d = 0.68:
        // D(a) = 1, D(b) = 1.68, D(c) = 2.1424.
        let g = strip(&[3.0, 2.0, 1.0]);
        let mut state = build_drainage_forest(&g);
        let visits = accumulate_drainage(&mut state, &g, 0.68);
        assert_eq!(visits, 3);
        assert!((state.total_drainage[0] - 1.0).abs() < 1e-15);
        assert!((state.total_drainage[1] - 1.68).abs() < 1e-15);
        assert!((state.total_drainage[2] - 2.1424).abs() < 1e-15);
    }

    #[test]
    fn zero_moisture_gives_zero_drainage() {
        let mut g = random_grid(8, 8, 3);
        for i in 0..g.len() {
            g.tile_mut(i).moisture = 0.0;
        }
        let mut state = build_drainage_forest(&g);
        accumulate_drainage(&mut state, &g, 0.68);
        assert!(state.total_drainage.iter().all(|&d| d == 0.0));
    }

    #[test]
    fn accumulation_matches_fixed_point_oracle() {
        for seed in 0..5 {
            let g = random_grid(32, 32, 100 + seed);
            let mut state = build_drainage_forest(&g);
            let visits = accumulate_drainage(&mut state, &g, 0.68);
            assert_eq!(visits, g.len());
            let oracle = fixed_point_drainage_oracle(&g, &state, 0.68);
            for idx in 0..g.len() {
                let d = state.total_drainage[idx];
                let o = oracle[idx];
                let rel = (d - o).abs() / o.abs().max(1e-30);
                assert!(rel <= 1e-9, "seed {seed} tile {idx}: {d} vs {o}");
            }
        }
    }

    #[test]
    fn unit_decay_counts_subtree_sizes() {
        // With uniform moisture 1 and k_d = 1, D(t) is the subtree size,
        // checked by brute-force chain walking.
        let mut g = random_grid(10, 10, 42);
        for i in 0..g.len() {
            g.tile_mut(i).moisture = 1.0;
        }
        let mut state = build_drainage_forest(&g);
        accumulate_drainage(&mut state, &g, 1.0);
        let mut subtree = vec![0usize; g.len()];
        for start in 0..g.len() {
            let mut cur = start;
            subtree[cur] += 1;
            while let Some(next) = state.target_of(cur) {
                subtree[next] += 1;
                cur = next;
            }
        }
        for idx in 0..g.len() {
            assert!(
                (state.total_drainage[idx] - subtree[idx] as f64).abs() < 1e-9,
                "tile {idx}: {} vs subtree {}",
                state.total_drainage[idx],
                subtree[idx]
            );
        }
    }

    #[test]
    fn drainage_monotone_in_moisture() {
        let g = random_grid(8, 8, 11);
        let mut state = build_drainage_forest(&g);
        accumulate_drainage(&mut state, &g, 0.68);
        let before = state.total_drainage.clone();
        let mut g2 = g.clone();
        g2.tile_mut(17).moisture += 5.0;
        let mut state2 = build_drainage_forest(&g2);
        accumulate_drainage(&mut state2, &g2, 0.68);
        for idx in 0..g.len() {
            assert!(state2.total_drainage[idx] >= before[idx] - 1e-12);
        }
    }
}
