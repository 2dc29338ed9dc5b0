//! Tile grid data model: per-tile state, Von Neumann neighborhoods and node geometry.

/// Persistent per-tile state.
///
/// Every tile carries a jittered node position inside its own cell
/// (`offset_x`/`offset_y` in `[0,1]`), the land and water columns, the
/// constraint target with its two strengths, and the local rainfall weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tile {
    pub offset_x: f64,
    pub offset_y: f64,
    pub land_height: f64,
    pub water_height: f64,
    pub constraint_height: f64,
    pub value_strength: f64,
    pub gradient_strength: f64,
    pub moisture: f64,
}

impl Tile {
    /// Land plus water column.
    #[inline]
    pub fn total_height(&self) -> f64 {
        self.land_height + self.water_height
    }
}

impl Default for Tile {
    fn default() -> Self {
        Tile {
            offset_x: 0.5,
            offset_y: 0.5,
            land_height: 0.0,
            water_height: 0.0,
            constraint_height: 0.0,
            value_strength: 0.0,
            gradient_strength: 0.0,
            moisture: 0.0,
        }
    }
}

/// The four Von Neumann directions. The declaration order (N, E, S, W) is
/// also the deterministic tie-break order wherever two neighbors compare
/// equal, so it must not be reordered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::East,
        Direction::South,
        Direction::West,
    ];

    /// (row delta, col delta). North is row 0.
    #[inline]
    pub fn offset(self) -> (isize, isize) {
        match self {
            Direction::North => (-1, 0),
            Direction::East => (0, 1),
            Direction::South => (1, 0),
            Direction::West => (0, -1),
        }
    }

    #[inline]
    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::West => Direction::East,
        }
    }

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    #[inline]
    pub fn bit(self) -> u8 {
        1 << self as u8
    }
}

/// Rectangular field of tiles plus the global simulation geometry.
///
/// Tiles are stored row-major; `width` counts columns, `height` counts rows.
/// Node offsets are set once at initialization and never rewritten, so node
/// positions (and all node distances) are constant for the life of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TileGrid {
    width: usize,
    height: usize,
    tiles: Vec<Tile>,
    pub sea_level: f64,
    pub spacing: f64,
}

impl TileGrid {
    /// Grid of default tiles (centered nodes, everything else zero).
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        TileGrid {
            width,
            height,
            tiles: vec![Tile::default(); width * height],
            sea_level: 0.0,
            spacing: 1.0,
        }
    }

    pub fn from_tiles(width: usize, height: usize, tiles: Vec<Tile>) -> Self {
        assert!(width > 0 && height > 0, "grid dimensions must be positive");
        assert_eq!(tiles.len(), width * height, "tile count must be width*height");
        TileGrid {
            width,
            height,
            tiles,
            sea_level: 0.0,
            spacing: 1.0,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
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
    pub fn index(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.height && col < self.width);
        row * self.width + col
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx / self.width, idx % self.width)
    }

    #[inline]
    pub fn tile(&self, idx: usize) -> &Tile {
        &self.tiles[idx]
    }

    #[inline]
    pub fn tile_mut(&mut self, idx: usize) -> &mut Tile {
        &mut self.tiles[idx]
    }

    #[inline]
    pub fn tiles(&self) -> &[Tile] {
        &self.tiles
    }

    #[inline]
    pub fn tiles_mut(&mut self) -> &mut [Tile] {
        &mut self.tiles
    }

    #[inline]
    pub fn total_height(&self, idx: usize) -> f64 {
        self.tiles[idx].total_height()
    }

    /// Index of the neighbor in `dir`, or `None` at the grid edge.
    #[inline]
    pub fn neighbor(&self, idx: usize, dir: Direction) -> Option<usize> {
        let row = idx / self.width;
        let col = idx % self.width;
        match dir {
            Direction::North => (row > 0).then(|| idx - self.width),
            Direction::East => (col + 1 < self.width).then(|| idx + 1),
            Direction::South => (row + 1 < self.height).then(|| idx + self.width),
            Direction::West => (col > 0).then(|| idx - 1),
        }
    }

    /// In-bounds Von Neumann neighbors of `idx`, in N, E, S, W order.
    /// Off-grid positions simply do not exist and are omitted.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        assert!(idx < self.tiles.len(), "tile index {idx} out of bounds");
        Direction::ALL
            .into_iter()
            .filter_map(move |d| self.neighbor(idx, d))
    }

    /// World position of the tile's node: cell corner plus the node offset,
    /// scaled by the grid spacing.
    #[inline]
    pub fn node_position(&self, idx: usize) -> (f64, f64) {
        let row = idx / self.width;
        let col = idx % self.width;
        let t = &self.tiles[idx];
        (
            (col as f64 + t.offset_x) * self.spacing,
            (row as f64 + t.offset_y) * self.spacing,
        )
    }

    /// Euclidean distance between two tiles' nodes.
    ///
    /// Adjacent tiles at extreme offsets can have coincident nodes; the
    /// returned 0.0 is the degenerate-geometry signal and callers treat the
    /// gradient toward a strictly lower coincident node as infinite.
    #[inline]
    pub fn node_distance(&self, a: usize, b: usize) -> f64 {
        let (ax, ay) = self.node_position(a);
        let (bx, by) = self.node_position(b);
        let dx = bx - ax;
        let dy = by - ay;
        (dx * dx + dy * dy).sqrt()
    }

    /// Node distances to all four neighbors of every tile, indexed by
    /// [`Direction::index`]; NaN marks off-grid neighbors. Node offsets are
    /// fixed after initialization, so this table is a constant of the grid
    /// and callers may compute it once and reuse it across ticks.
    pub fn neighbor_distances(&self) -> Vec<[f64; 4]> {
        let mut positions = Vec::with_capacity(self.tiles.len());
        for row in 0..self.height {
            for col in 0..self.width {
                let t = &self.tiles[row * self.width + col];
                positions.push((
                    (col as f64 + t.offset_x) * self.spacing,
                    (row as f64 + t.offset_y) * self.spacing,
                ));
            }
        }
        let dist = |a: usize, b: usize| -> f64 {
            let (ax, ay) = positions[a];
            let (bx, by) = positions[b];
            ((bx - ax) * (bx - ax) + (by - ay) * (by - ay)).sqrt()
        };
        let mut table = vec![[f64::NAN; 4]; self.tiles.len()];
        for row in 0..self.height {
            for col in 0..self.width {
                let idx = row * self.width + col;
                if row > 0 {
                    table[idx][Direction::North.index()] = dist(idx, idx - self.width);
                }
                if col + 1 < self.width {
                    table[idx][Direction::East.index()] = dist(idx, idx + 1);
                }
                if row + 1 < self.height {
                    table[idx][Direction::South.index()] = dist(idx, idx + self.width);
                }
                if col > 0 {
                    table[idx][Direction::West.index()] = dist(idx, idx - 1);
                }
            }
        }
        table
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid3x3() -> TileGrid {
        TileGrid::new(3, 3)
    }

    #[test]
    fn total_height_is_land_plus_water() {
        let mut t = Tile {
            land_height: 5.0,
            ..Tile::default()
        };
        assert_eq!(t.total_height(), 5.0);
        t.land_height = 3.0;
        t.water_height = 2.0;
        assert_eq!(t.total_height(), 5.0);
        t.land_height = -1.0;
        t.water_height = 1.0;
        assert_eq!(t.total_height(), 0.0);
    }

    #[test]
    fn neighbor_counts_clip_at_edges() {
        let g = grid3x3();
        assert_eq!(g.neighbors(g.index(1, 1)).count(), 4);
        assert_eq!(g.neighbors(g.index(0, 0)).count(), 2);
        assert_eq!(g.neighbors(g.index(0, 1)).count(), 3);
    }

    #[test]
    #[should_panic]
    fn neighbors_out_of_bounds_panics() {
        let g = grid3x3();
        let _ = g.neighbors(9).count();
    }

    #[test]
    fn neighbors_symmetric() {
        let g = TileGrid::new(4, 5);
        for a in 0..g.len() {
            for b in g.neighbors(a) {
                assert!(g.neighbors(b).any(|x| x == a), "asymmetric pair {a},{b}");
            }
        }
    }

    #[test]
    fn node_distance_centered_offsets() {
        let g = grid3x3();
        assert_eq!(g.node_distance(g.index(1, 1), g.index(1, 2)), 1.0);
    }

    #[test]
    fn node_distance_coincident_nodes_is_zero() {
        let mut g = grid3x3();
        // West tile node pushed to its east edge, east tile node at its west
        // edge: the two nodes coincide.
        let w = g.index(1, 0);
        let e = g.index(1, 1);
        g.tile_mut(w).offset_x = 1.0;
        g.tile_mut(w).offset_y = 0.5;
        g.tile_mut(e).offset_x = 0.0;
        g.tile_mut(e).offset_y = 0.5;
        assert_eq!(g.node_distance(w, e), 0.0);
    }

    #[test]
    fn node_distance_hand_value() {
        // Horizontal neighbors with offsets (0.25,0.25) and (0.75,0.75):
        // dx = 1.5, dy = 0.5, distance = sqrt(2.5).
        let mut g = grid3x3();
        let a = g.index(1, 0);
        let b = g.index(1, 1);
        g.tile_mut(a).offset_x = 0.25;
        g.tile_mut(a).offset_y = 0.25;
        g.tile_mut(b).offset_x = 0.75;
        g.tile_mut(b).offset_y = 0.75;
        let d = g.node_distance(a, b);
        assert!((d - 2.5f64.sqrt()).abs() < 1e-15);
        assert!((d - 1.5811388300841898).abs() < 1e-12);
    }

    #[test]
    fn node_distance_symmetric_and_triangle() {
        // Deterministic ad-hoc offsets; checks metric properties over all
        // node triples of a small grid.
        let mut g = TileGrid::new(3, 2);
        for i in 0..g.len() {
            let t = g.tile_mut(i);
            t.offset_x = (i as f64 * 0.37).fract();
            t.offset_y = (i as f64 * 0.61 + 0.13).fract();
        }
        for a in 0..g.len() {
            for b in 0..g.len() {
                assert_eq!(g.node_distance(a, b), g.node_distance(b, a));
                for c in 0..g.len() {
                    let lhs = g.node_distance(a, c);
                    let rhs = g.node_distance(a, b) + g.node_distance(b, c);
                    assert!(lhs <= rhs + 1e-12);
                }
            }
        }
    }

    #[test]
    fn neighbor_distance_table_matches_node_distance() {
        let mut g = TileGrid::new(4, 3);
        for i in 0..g.len() {
            let t = g.tile_mut(i);
            t.offset_x = (i as f64 * 0.41).fract();
            t.offset_y = (i as f64 * 0.73 + 0.2).fract();
        }
        let table = g.neighbor_distances();
        for idx in 0..g.len() {
            for dir in Direction::ALL {
                match g.neighbor(idx, dir) {
                    Some(n) => assert_eq!(table[idx][dir.index()], g.node_distance(idx, n)),
                    None => assert!(table[idx][dir.index()].is_nan()),
                }
            }
        }
    }

    #[test]
    fn spacing_scales_node_positions() {
        let mut g = grid3x3();
        g.spacing = 2.0;
        let (x, y) = g.node_position(g.index(1, 2));
        assert_eq!((x, y), (5.0, 3.0));
        assert_eq!(g.node_distance(g.index(1, 1), g.index(1, 2)), 2.0);
    }
}
