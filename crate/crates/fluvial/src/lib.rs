//! Graph-based fluvial erosion terrain generator.
//!
//! Terrain evolves on a tile grid under six phases per tick: steepest-
//! descent drainage routing, decayed drainage accumulation, gorge carving
//! between adjacent local minima, stream-power erosion, value and gradient
//! height constraints, and a sea-level reset. A classic uplift/erosion
//! baseline is included for benchmarking, along with heightmap file formats
//! and a seeded fractal noise source for self-contained inputs.
//!
//! Runs are deterministic: all randomness is drawn once at initialization
//! from a seeded counter-based generator, and every phase updates tiles
//! from phase-start snapshots in a fixed order.

pub mod baseline;
pub mod geomorph;
pub mod grid;
pub mod heightmap;
pub mod hydrology;
pub mod noise;
pub mod regulation;
pub mod simulation;
pub mod test_support;

pub use grid::{Direction, Tile, TileGrid};
pub use heightmap::{read_heightmap, write_heightmap, Heightmap, HeightmapError, HeightmapFormat};
pub use hydrology::{accumulate_drainage, build_drainage_forest, compute_drain_direction, DrainageState};
pub use simulation::{initialize, run, tick, InitSpec, SimError, SimParams, TickReport};
