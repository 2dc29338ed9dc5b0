//! Reference uplift/erosion algorithm used for the timing and convergence
//! comparison: per-tick uplift, lowest-neighbor flow routing, undecayed
//! drainage-area accumulation, and erosion k * s * sqrt(A).

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::grid::Direction;
use crate::heightmap::Heightmap;

/// Per-pixel state of the baseline simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineTile {
    pub offset_x: f64,
    pub offset_y: f64,
    pub height: f64,
    /// Height added every tick.
    pub uplift: f64,
    /// Fixed local drainage area.
    pub drainage_area: f64,
}

#[derive(Debug, Clone)]
pub struct BaselineGrid {
    width: usize,
    height: usize,
    tiles: Vec<BaselineTile>,
    /// Total drainage area from the most recent tick.
    pub total_area: Vec<f64>,
    /// Pixels with no strictly lower neighbor in the most recent tick.
    pub last_unrouted: usize,
}

impl BaselineGrid {
    /// Grid with seeded node offsets, zero heights and unit drainage area.
    pub fn new(width: usize, height: usize, uplift: &[f64], seed: u64) -> Self {
        assert_eq!(uplift.len(), width * height);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tiles = uplift
            .iter()
            .map(|&u| BaselineTile {
                offset_x: rng.random::<f64>(),
                offset_y: rng.random::<f64>(),
                height: 0.0,
                uplift: u,
                drainage_area: 1.0,
            })
            .collect();
        BaselineGrid {
            width,
            height,
            tiles,
            total_area: vec![0.0; width * height],
            last_unrouted: 0,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }

    #[inline]
    pub fn tile(&self, idx: usize) -> &BaselineTile {
        &self.tiles[idx]
    }

    #[inline]
    pub fn tile_mut(&mut self, idx: usize) -> &mut BaselineTile {
        &mut self.tiles[idx]
    }

    pub fn heights(&self) -> Vec<f64> {
        self.tiles.iter().map(|t| t.height).collect()
    }

    #[inline]
    fn neighbor(&self, idx: usize, dir: Direction) -> Option<usize> {
        let row = idx / self.width;
        let col = idx % self.width;
        match dir {
            Direction::North => (row > 0).then(|| idx - self.width),
            Direction::East => (col + 1 < self.width).then(|| idx + 1),
            Direction::South => (row + 1 < self.height).then(|| idx + self.width),
            Direction::West => (col > 0).then(|| idx - 1),
        }
    }

    #[inline]
    fn node_position(&self, idx: usize) -> (f64, f64) {
        let row = idx / self.width;
        let col = idx % self.width;
        let t = &self.tiles[idx];
        (col as f64 + t.offset_x, row as f64 + t.offset_y)
    }

    #[inline]
    fn node_distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.node_position(a);
        let (bx, by) = self.node_position(b);
        ((bx - ax) * (bx - ax) + (by - ay) * (by - ay)).sqrt()
    }
}

/// One baseline tick: apply uplift everywhere, route each pixel to its
/// strictly lowest neighbor (pixels with no lower neighbor skip erosion),
/// accumulate total drainage area over the resulting forest, then lower
/// every routed pixel by k * s * sqrt(A) from a post-uplift snapshot.
///
/// The applied erosion is capped at the height difference to the receiving
/// pixel. An uncapped explicit update lets a pixel sink below its receiver
/// whenever k * sqrt(A) exceeds the node distance, and the resulting pair
/// oscillates downward without bound on any grid large enough for sizable
/// drainage areas.
pub fn baseline_tick(grid: &mut BaselineGrid, k: f64) {
    let n = grid.len();
    for t in &mut grid.tiles {
        t.height += t.uplift;
    }

    // Lowest-neighbor routing; ties resolve in N, E, S, W order.
    let mut target = vec![usize::MAX; n];
    let mut inbound = vec![0u8; n];
    let mut unrouted = 0usize;
    for idx in 0..n {
        let own = grid.tiles[idx].height;
        let mut best: Option<(usize, f64)> = None;
        for dir in Direction::ALL {
            if let Some(nb) = grid.neighbor(idx, dir) {
                let h = grid.tiles[nb].height;
                match best {
                    Some((_, bh)) if h >= bh => {}
                    _ => best = Some((nb, h)),
                }
            }
        }
        match best {
            Some((nb, h)) if h < own => {
                target[idx] = nb;
                inbound[nb] += 1;
            }
            _ => unrouted += 1,
        }
    }
    grid.last_unrouted = unrouted;

    // Undecayed drainage-area accumulation, leaf inward.
    let mut remaining = inbound;
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| remaining[i] == 0).collect();
    let area = &mut grid.total_area;
    for (idx, t) in grid.tiles.iter().enumerate() {
        area[idx] = t.drainage_area;
    }
    while let Some(idx) = queue.pop_front() {
        if target[idx] != usize::MAX {
            let parent = target[idx];
            area[parent] += area[idx];
            remaining[parent] -= 1;
            if remaining[parent] == 0 {
                queue.push_back(parent);
            }
        }
    }

    // Simultaneous erosion from the post-uplift snapshot.
    let snapshot: Vec<f64> = grid.tiles.iter().map(|t| t.height).collect();
    for idx in 0..n {
        let tgt = target[idx];
        if tgt == usize::MAX {
            continue;
        }
        let dist = grid.node_distance(idx, tgt);
        let drop = snapshot[idx] - snapshot[tgt];
        let slope = if dist > 0.0 { drop / dist } else { f64::INFINITY };
        let erosion = k * slope * grid.total_area[idx].sqrt();
        if erosion >= drop {
            grid.tiles[idx].height = snapshot[tgt];
        } else {
            grid.tiles[idx].height -= erosion;
        }
    }
}

/// Deterministic fixed-iteration run from zero heights.
pub fn baseline_run(uplift_map: &Heightmap, iterations: usize, seed: u64, k: f64) -> Heightmap {
    let mut grid = BaselineGrid::new(uplift_map.width, uplift_map.height, &uplift_map.samples, seed);
    for _ in 0..iterations {
        baseline_tick(&mut grid, k);
    }
    Heightmap::from_samples(uplift_map.width, uplift_map.height, grid.heights())
}
