//! The two terrain-lowering processes: gorge carving between adjacent local
//! minima, and stream-power fluvial erosion.

use crate::grid::TileGrid;
use crate::hydrology::DrainageState;

/// Constants of the lowering processes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErosionParams {
    /// Erosion constant k_e.
    pub k_e: f64,
    /// Drainage exponent n.
    pub n_exp: f64,
    /// Slope exponent m.
    pub m_exp: f64,
    /// Gorge carve-weight constant k_g.
    pub k_g: f64,
}

impl Default for ErosionParams {
    fn default() -> Self {
        ErosionParams {
            k_e: 0.5,
            n_exp: 1.0,
            m_exp: 2.0,
            k_g: 0.1,
        }
    }
}

/// A carve path from minimum M through its lowest leaf L, across to L's
/// opposite neighbor O, and down O's drainage chain to the adjacent minimum
/// M'. `arc_lengths[i]` is the cumulative node distance from M to node i.
#[derive(Debug, Clone)]
pub struct GorgePath {
    pub nodes: Vec<usize>,
    pub arc_lengths: Vec<f64>,
    pub weight: f64,
}

/// Carve weight w = min(k_g * sqrt(D), 1).
///
/// Zero at D = 0, non-decreasing in D, saturates at 1 for high drainage.
pub fn carve_weight(total_drainage: f64, k_g: f64) -> f64 {
    assert!(total_drainage >= 0.0, "total drainage must be non-negative");
    (k_g * total_drainage.sqrt()).min(1.0)
}

fn lowest_leaf_into(
    state: &DrainageState,
    grid: &TileGrid,
    m: usize,
    stack: &mut Vec<usize>,
) -> Option<usize> {
    debug_assert!(state.drain_target(m).is_none(), "m must be a minimum");
    let mut best: Option<(usize, f64)> = None;
    stack.clear();
    stack.push(m);
    while let Some(idx) = stack.pop() {
        if idx != m && state.is_leaf(idx) {
            let h = grid.total_height(idx);
            best = match best {
                Some((bi, bh)) if bh < h || (bh == h && bi < idx) => Some((bi, bh)),
                _ => Some((idx, h)),
            };
            continue;
        }
        for dir in state.tributaries(idx) {
            stack.push(state.step(idx, dir));
        }
    }
    best.map(|(idx, _)| idx)
}

/// Lowest-total-height leaf in the drainage tree rooted at minimum `m`,
/// ties broken row-major. Returns `None` when the tree has no leaf other
/// than `m` itself (isolated minimum); the caller skips carving then.
pub fn lowest_leaf(state: &DrainageState, grid: &TileGrid, m: usize) -> Option<usize> {
    lowest_leaf_into(state, grid, m, &mut Vec::new())
}

/// Fills `path` for minimum `m`, reusing the provided buffers. False when
/// no valid path exists. `path.weight` is left untouched.
fn fill_gorge_path(
    state: &DrainageState,
    grid: &TileGrid,
    m: usize,
    stack: &mut Vec<usize>,
    path: &mut GorgePath,
) -> bool {
    path.nodes.clear();
    path.arc_lengths.clear();

    let Some(leaf) = lowest_leaf_into(state, grid, m, stack) else {
        return false;
    };
    let leaf_dir = state.drain_target(leaf).expect("non-minimum leaf drains");
    let Some(opposite) = grid.neighbor(leaf, leaf_dir.opposite()) else {
        return false;
    };

    // Terminal minimum of the downslope run from O.
    let mut terminal = opposite;
    while let Some(next) = state.target_of(terminal) {
        terminal = next;
    }
    if terminal == m {
        return false; // O lies in m's own basin
    }
    if grid.tile(terminal).water_height > 0.0 {
        return false; // water-covered minimum, discarded from carving
    }

    // Reverse of the leaf's chain down to m, then the descent from O.
    path.nodes.push(leaf);
    let mut cur = leaf;
    while let Some(next) = state.target_of(cur) {
        path.nodes.push(next);
        cur = next;
    }
    debug_assert_eq!(cur, m);
    path.nodes.reverse();
    path.nodes.push(opposite);
    let mut cur = opposite;
    while let Some(next) = state.target_of(cur) {
        path.nodes.push(next);
        cur = next;
    }

    let mut acc = 0.0;
    path.arc_lengths.push(0.0);
    for i in 1..path.nodes.len() {
        acc += grid.node_distance(path.nodes[i - 1], path.nodes[i]);
        path.arc_lengths.push(acc);
    }
    true
}

/// Derives the gorge path for minimum `m`, or `None` when no valid path
/// exists: the tree has no usable leaf, the leaf's opposite neighbor O is
/// off-grid, O descends back into m's own basin, or O's chain terminates in
/// a water-covered minimum (discarded from carving).
pub fn derive_gorge_path(
    state: &DrainageState,
    grid: &TileGrid,
    m: usize,
    k_g: f64,
) -> Option<GorgePath> {
    let mut path = GorgePath {
        nodes: Vec::new(),
        arc_lengths: Vec::new(),
        weight: carve_weight(state.total_drainage[m], k_g),
    };
    fill_gorge_path(state, grid, m, &mut Vec::new(), &mut path).then_some(path)
}

/// Applies one carve: each interior node is pulled toward the height
/// linearly interpolated between the two endpoint minima (by distance along
/// the path), weighted by the path weight, and only ever downward. The
/// gradient constraint strength of every interior node is weakened by the
/// factor 1 - w so the gorge survives later constraint passes. Endpoints
/// are untouched.
pub fn carve_gorge(grid: &mut TileGrid, path: &GorgePath) {
    let n = path.nodes.len();
    if n < 3 {
        return;
    }
    let total = path.arc_lengths[n - 1];
    if total <= 0.0 {
        return; // fully degenerate node geometry
    }
    let w = path.weight;
    let h_start = grid.total_height(path.nodes[0]);
    let h_end = grid.total_height(path.nodes[n - 1]);
    for i in 1..n - 1 {
        let frac = path.arc_lengths[i] / total;
        let ideal = h_start + frac * (h_end - h_start);
        let tile = grid.tile_mut(path.nodes[i]);
        if tile.land_height > ideal {
            tile.land_height += w * (ideal - tile.land_height);
        }
        tile.gradient_strength *= 1.0 - w;
    }
}

/// Carves gorges for every eligible minimum in row-major order, applying
/// each carve immediately so later paths see earlier edits. Water-covered
/// minima are skipped, as are minima with zero carve weight (the carve
/// would be the identity). Returns the number of paths carved.
pub fn carve_all_gorges(grid: &mut TileGrid, state: &DrainageState, k_g: f64) -> usize {
    let mut carved = 0;
    let mut stack = Vec::new();
    let mut path = GorgePath {
        nodes: Vec::new(),
        arc_lengths: Vec::new(),
        weight: 0.0,
    };
    for (i, &m) in state.minima.iter().enumerate() {
        if state.minima_has_water[i] {
            continue;
        }
        path.weight = carve_weight(state.total_drainage[m], k_g);
        if path.weight == 0.0 {
            continue;
        }
        if fill_gorge_path(state, grid, m, &mut stack, &mut path) {
            carve_gorge(grid, &path);
            carved += 1;
        }
    }
    carved
}

/// x^e with exact fast paths for the common exponents 1 and 2.
#[inline]
fn powx(base: f64, exp: f64) -> f64 {
    if exp == 1.0 {
        base
    } else if exp == 2.0 {
        base * base
    } else {
        base.powf(exp)
    }
}

/// Stream-power erosion over the whole grid.
///
/// Every dry tile with a drain target is lowered by
/// dh = k_e * D^n * s^m, where s is the slope toward the target computed
/// from a totals snapshot taken at phase start (all tiles update
/// simultaneously). dh is capped at the snapshot height difference to the
/// target, so no tile sinks past the tile it drains to. Water tiles and
/// minima are unchanged.
pub fn fluvial_erode(grid: &mut TileGrid, state: &DrainageState, params: &ErosionParams) {
    let totals: Vec<f64> = (0..grid.len()).map(|i| grid.total_height(i)).collect();
    for idx in 0..grid.len() {
        let Some(target) = state.target_of(idx) else {
            continue;
        };
        if grid.tile(idx).water_height > 0.0 {
            continue;
        }
        let gap = totals[idx] - totals[target];
        if gap <= 0.0 {
            // Possible after carving lowered this tile below its step-1
            // target; erosion never raises land.
            continue;
        }
        let dn = powx(state.total_drainage[idx], params.n_exp);
        if dn == 0.0 {
            continue;
        }
        // Node distance to the target, recorded when the forest was built.
        let dist = state.dist_to_target[idx];
        let slope = if dist > 0.0 { gap / dist } else { f64::INFINITY };
        let dh = params.k_e * dn * powx(slope, params.m_exp);
        let tile = grid.tile_mut(idx);
        if dh >= gap {
            // Capped: land drops exactly to the target's snapshot total.
            tile.land_height = totals[target];
        } else {
            tile.land_height -= dh;
        }
    }
}
