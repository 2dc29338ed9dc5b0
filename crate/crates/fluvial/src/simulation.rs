//! Initialization and the six-phase simulation tick.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geomorph::{carve_all_gorges, fluvial_erode, ErosionParams};
use crate::grid::{Tile, TileGrid};
use crate::heightmap::Heightmap;
use crate::hydrology::{accumulate_drainage, DrainageState};

/// Simulation constants. The defaults are the recommended values; only the
/// iteration count and seed have no natural default and are set per run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    /// Tributary decay factor, in `[0,1]`.
    pub k_d: f64,
    /// Erosion constant.
    pub k_e: f64,
    /// Drainage exponent of the stream equation.
    pub n_exp: f64,
    /// Slope exponent of the stream equation.
    pub m_exp: f64,
    /// Gorge carve-weight constant.
    pub k_g: f64,
    /// Global sea level in world units.
    pub sea_level: f64,
    /// Half-width of the uniform noise added to the constraint map at
    /// initialization. `None` selects 0.5% of the constraint map's range.
    pub constraint_noise_amplitude: Option<f64>,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            k_d: 0.68,
            k_e: 0.5,
            n_exp: 1.0,
            m_exp: 2.0,
            k_g: 0.1,
            sea_level: 0.0,
            constraint_noise_amplitude: None,
            iterations: 100,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn erosion(&self) -> ErosionParams {
        ErosionParams {
            k_e: self.k_e,
            n_exp: self.n_exp,
            m_exp: self.m_exp,
            k_g: self.k_g,
        }
    }
}

/// A per-tile field given either as a map or as a uniform scalar.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldSpec {
    Uniform(f64),
    Map(Heightmap),
}

impl FieldSpec {
    fn value_at(&self, idx: usize) -> f64 {
        match self {
            FieldSpec::Uniform(v) => *v,
            FieldSpec::Map(m) => m.samples[idx],
        }
    }
}

/// Value constraint strength: a uniform scalar, or the constraint map
/// itself re-mapped onto `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ValueStrengthSpec {
    Uniform(f64),
    Remap,
}

/// Input maps for initialization. Map dimensions must match the constraint
/// map, which defines the grid size.
#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub constraint: Heightmap,
    pub moisture: FieldSpec,
    pub gradient_strength: FieldSpec,
    pub value_strength: ValueStrengthSpec,
}

impl InitSpec {
    /// Defaults: uniform moisture 1, uniform gradient strength 0.8 (suited
    /// to detailed constraint maps; use 0.02 for coarse ones), uniform
    /// value strength 0.02.
    pub fn new(constraint: Heightmap) -> Self {
        InitSpec {
            constraint,
            moisture: FieldSpec::Uniform(1.0),
            gradient_strength: FieldSpec::Uniform(0.8),
            value_strength: ValueStrengthSpec::Uniform(0.02),
        }
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{field} map is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        field: &'static str,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("{field} must be {requirement}, got {value} at tile {index}")]
    InvalidField {
        field: &'static str,
        requirement: &'static str,
        value: f64,
        index: usize,
    },
}

/// Per-tick metrics: land-height movement, minima and carve counts, and
/// wall time. Everything except `millis` is deterministic for a given
/// (spec, params).
#[derive(Debug, Clone, PartialEq)]
pub struct TickReport {
    pub mean_abs_dh: f64,
    pub max_abs_dh: f64,
    pub minima_count: usize,
    pub gorges_carved: usize,
    pub millis: f64,
}

fn check_dims(field: &'static str, map: &Heightmap, w: usize, h: usize) -> Result<(), SimError> {
    if map.width != w || map.height != h {
        return Err(SimError::DimensionMismatch {
            field,
            got_w: map.width,
            got_h: map.height,
            want_w: w,
            want_h: h,
        });
    }
    Ok(())
}

/// Builds the initial grid: seeded node offsets, constraint heights with a
/// small uniform perturbation (land starts equal to the constraint),
/// per-tile strengths and moisture from the spec, and water filled so that
/// submerged tiles read sea level.
pub fn initialize(spec: &InitSpec, params: &SimParams) -> Result<TileGrid, SimError> {
    let w = spec.constraint.width;
    let h = spec.constraint.height;
    if let FieldSpec::Map(m) = &spec.moisture {
        check_dims("moisture", m, w, h)?;
    }
    if let FieldSpec::Map(m) = &spec.gradient_strength {
        check_dims("gradient strength", m, w, h)?;
    }

    let (c_lo, c_hi) = spec.constraint.value_range;
    let amplitude = params
        .constraint_noise_amplitude
        .unwrap_or(0.005 * (c_hi - c_lo));
    let c_span = c_hi - c_lo;

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut tiles = Vec::with_capacity(w * h);
    for idx in 0..w * h {
        let offset_x = rng.random::<f64>();
        let offset_y = rng.random::<f64>();
        let noise = (rng.random::<f64>() * 2.0 - 1.0) * amplitude;
        let constraint_height = spec.constraint.samples[idx] + noise;

        let value_strength = match spec.value_strength {
            ValueStrengthSpec::Uniform(v) => v,
            ValueStrengthSpec::Remap => {
                if c_span > 0.0 {
                    ((spec.constraint.samples[idx] - c_lo) / c_span).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        };
        let gradient_strength = spec.gradient_strength.value_at(idx);
        let moisture = spec.moisture.value_at(idx);

        for (field, value, ok) in [
            ("value strength", value_strength, (0.0..=1.0).contains(&value_strength)),
            (
                "gradient strength",
                gradient_strength,
                (0.0..=1.0).contains(&gradient_strength),
            ),
            ("moisture", moisture, moisture >= 0.0),
        ] {
            if !ok {
                return Err(SimError::InvalidField {
                    field,
                    requirement: if field == "moisture" {
                        "non-negative"
                    } else {
                        "in [0,1]"
                    },
                    value,
                    index: idx,
                });
            }
        }

        tiles.push(Tile {
            offset_x,
            offset_y,
            land_height: constraint_height,
            water_height: (params.sea_level - constraint_height).max(0.0),
            constraint_height,
            value_strength,
            gradient_strength,
            moisture,
        });
    }

    let mut grid = TileGrid::from_tiles(w, h, tiles);
    grid.sea_level = params.sea_level;
    Ok(grid)
}

/// Reusable per-tick buffers plus the grid's neighbor-distance table.
/// Node offsets and spacing are fixed after initialization, so one scratch
/// serves a whole run.
#[derive(Debug, Clone)]
pub struct TickScratch {
    distances: Vec<[f64; 4]>,
    state: DrainageState,
    land_before: Vec<f64>,
    post_value: Vec<f64>,
}

impl TickScratch {
    pub fn new(grid: &TileGrid) -> Self {
        TickScratch {
            distances: grid.neighbor_distances(),
            state: DrainageState::new(),
            land_before: Vec::new(),
            post_value: Vec::new(),
        }
    }
}

/// Runs one simulation tick: build the drainage forest, accumulate decayed
/// drainage, carve gorges between adjacent minima, apply stream-power
/// erosion, apply the value then gradient constraints, and reset the sea
/// level. The phases are strictly sequenced; each reads only state written
/// by earlier phases.
pub fn tick(grid: &mut TileGrid, params: &SimParams) -> TickReport {
    tick_with(grid, params, &mut TickScratch::new(grid))
}

/// [`tick`] with caller-owned scratch, for allocation-free tick loops.
pub fn tick_with(grid: &mut TileGrid, params: &SimParams, scratch: &mut TickScratch) -> TickReport {
    let start = Instant::now();
    scratch.land_before.clear();
    scratch
        .land_before
        .extend(grid.tiles().iter().map(|t| t.land_height));

    scratch.state.rebuild(grid, &scratch.distances);
    accumulate_drainage(&mut scratch.state, grid, params.k_d);
    let gorges_carved = carve_all_gorges(grid, &scratch.state, params.k_g);
    fluvial_erode(grid, &scratch.state, &params.erosion());

    // Value constraint, then gradient constraint from the post-value
    // snapshot, then the sea reset, fused into two passes. Identical to
    // running the three regulation ops in sequence; the per-tile delta
    // statistics ride along on the final write.
    scratch.post_value.clear();
    scratch.post_value.extend(
        grid.tiles()
            .iter()
            .map(|t| t.land_height + t.value_strength * (t.constraint_height - t.land_height)),
    );
    let snapshot = &scratch.post_value;
    let width = grid.width();
    let height = grid.height();
    let sea = grid.sea_level;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for row in 0..height {
        for col in 0..width {
            let idx = row * width + col;
            let mut residual = 0.0;
            let mut count = 0;
            let mut consider = |n_idx: usize, grid: &TileGrid| {
                residual += snapshot[n_idx] - grid.tile(n_idx).constraint_height;
                count += 1;
            };
            if row > 0 {
                consider(idx - width, grid);
            }
            if col + 1 < width {
                consider(idx + 1, grid);
            }
            if row + 1 < height {
                consider(idx + width, grid);
            }
            if col > 0 {
                consider(idx - 1, grid);
            }
            let tile = grid.tile_mut(idx);
            let ideal = tile.constraint_height + residual / count as f64;
            let g = tile.gradient_strength;
            let land = snapshot[idx] + g * (ideal - snapshot[idx]);
            tile.land_height = land;
            tile.water_height = (sea - land).max(0.0);
            let dh = (land - scratch.land_before[idx]).abs();
            sum += dh;
            max = max.max(dh);
        }
    }

    TickReport {
        mean_abs_dh: sum / grid.len() as f64,
        max_abs_dh: max,
        minima_count: scratch.state.minima.len(),
        gorges_carved,
        millis: start.elapsed().as_secs_f64() * 1e3,
    }
}

/// Initializes and ticks `params.iterations` times. The result is a pure
/// function of (spec, params).
pub fn run(spec: &InitSpec, params: &SimParams) -> Result<(TileGrid, Vec<TickReport>), SimError> {
    let mut grid = initialize(spec, params)?;
    let mut scratch = TickScratch::new(&grid);
    let mut reports = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        reports.push(tick_with(&mut grid, params, &mut scratch));
    }
    Ok((grid, reports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::fractal_noise;

    fn reports_equal_ignoring_time(a: &[TickReport], b: &[TickReport]) -> bool {
        a.len() == b.len()
            && a.iter().zip(b).all(|(x, y)| {
                x.mean_abs_dh == y.mean_abs_dh
                    && x.max_abs_dh == y.max_abs_dh
                    && x.minima_count == y.minima_count
                    && x.gorges_carved == y.gorges_carved
            })
    }

    #[test]
    fn init_uniform_constraint_above_sea() {
        let spec = InitSpec::new(Heightmap::uniform(8, 8, 10.0));
        let params = SimParams {
            constraint_noise_amplitude: Some(0.05),
            ..SimParams::default()
        };
        let grid = initialize(&spec, &params).unwrap();
        for i in 0..grid.len() {
            let t = grid.tile(i);
            assert!((t.land_height - 10.0).abs() <= 0.05);
            assert_eq!(t.land_height, t.constraint_height);
            assert_eq!(t.water_height, 0.0);
            assert!((0.0..=1.0).contains(&t.offset_x));
            assert!((0.0..=1.0).contains(&t.offset_y));
            assert_eq!(t.moisture, 1.0);
            assert_eq!(t.gradient_strength, 0.8);
            assert_eq!(t.value_strength, 0.02);
        }
    }

    #[test]
    fn init_below_sea_fills_to_sea_level() {
        let spec = InitSpec::new(Heightmap::uniform(4, 4, -5.0));
        let grid = initialize(&spec, &SimParams::default()).unwrap();
        for i in 0..grid.len() {
            assert!(grid.tile(i).water_height > 0.0);
            assert_eq!(grid.total_height(i), 0.0);
        }
    }

    #[test]
    fn init_is_deterministic() {
        let spec = InitSpec::new(fractal_noise(16, 16, 3, 5));
        let params = SimParams::default();
        let a = initialize(&spec, &params).unwrap();
        let b = initialize(&spec, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn init_rejects_dimension_mismatch() {
        let mut spec = InitSpec::new(Heightmap::uniform(4, 4, 1.0));
        spec.moisture = FieldSpec::Map(Heightmap::uniform(3, 4, 1.0));
        assert!(matches!(
            initialize(&spec, &SimParams::default()),
            Err(SimError::DimensionMismatch { field: "moisture", .. })
        ));
    }

    #[test]
    fn init_remap_value_strength() {
        let constraint = Heightmap::from_samples(3, 1, vec![0.0, 5.0, 10.0]);
        let mut spec = InitSpec::new(constraint);
        spec.value_strength = ValueStrengthSpec::Remap;
        let params = SimParams {
            constraint_noise_amplitude: Some(0.0),
            ..SimParams::default()
        };
        let grid = initialize(&spec, &params).unwrap();
        assert_eq!(grid.tile(0).value_strength, 0.0);
        assert_eq!(grid.tile(1).value_strength, 0.5);
        assert_eq!(grid.tile(2).value_strength, 1.0);
    }

    #[test]
    fn init_rejects_out_of_range_strength() {
        let mut spec = InitSpec::new(Heightmap::uniform(2, 2, 1.0));
        spec.gradient_strength = FieldSpec::Uniform(1.5);
        assert!(matches!(
            initialize(&spec, &SimParams::default()),
            Err(SimError::InvalidField { .. })
        ));
    }

    #[test]
    fn zero_moisture_tick_is_identity_on_land() {
        let mut spec = InitSpec::new(fractal_noise(16, 16, 3, 11));
        spec.moisture = FieldSpec::Uniform(0.0);
        let params = SimParams {
            sea_level: -1.0, // everything above sea
            ..SimParams::default()
        };
        let mut grid = initialize(&spec, &params).unwrap();
        let before: Vec<f64> = grid.tiles().iter().map(|t| t.land_height).collect();
        let report = tick(&mut grid, &params);
        let after: Vec<f64> = grid.tiles().iter().map(|t| t.land_height).collect();
        assert_eq!(before, after, "tick must be the identity bit for bit");
        assert_eq!(report.mean_abs_dh, 0.0);
        assert_eq!(report.gorges_carved, 0);
    }

    #[test]
    fn flat_constraint_stays_in_noise_band() {
        let spec = InitSpec::new(Heightmap::uniform(16, 16, 10.0));
        let amplitude = 0.02;
        let params = SimParams {
            constraint_noise_amplitude: Some(amplitude),
            sea_level: 0.0,
            ..SimParams::default()
        };
        let mut grid = initialize(&spec, &params).unwrap();
        for _ in 0..5 {
            tick(&mut grid, &params);
        }
        // Erosion only lowers toward local minima of the noise band and the
        // constraints pull back inside it; allow the band plus slack for
        // the constraint pull.
        for i in 0..grid.len() {
            let h = grid.tile(i).land_height;
            assert!(h <= 10.0 + amplitude + 1e-9);
            assert!(h >= 10.0 - amplitude - 0.05, "h = {h}");
        }
    }

    #[test]
    fn run_zero_iterations_returns_initial_grid() {
        let spec = InitSpec::new(fractal_noise(8, 8, 3, 3));
        let params = SimParams {
            iterations: 0,
            ..SimParams::default()
        };
        let (grid, reports) = run(&spec, &params).unwrap();
        assert!(reports.is_empty());
        assert_eq!(grid, initialize(&spec, &params).unwrap());
    }

    #[test]
    fn run_is_deterministic() {
        let mut constraint = fractal_noise(24, 24, 3, 21);
        constraint.remap_to((0.0, 40.0));
        let spec = InitSpec::new(constraint);
        let params = SimParams {
            iterations: 10,
            sea_level: 5.0,
            seed: 9,
            ..SimParams::default()
        };
        let (ga, ra) = run(&spec, &params).unwrap();
        let (gb, rb) = run(&spec, &params).unwrap();
        assert_eq!(ga, gb);
        assert!(reports_equal_ignoring_time(&ra, &rb));
    }

    #[test]
    fn fused_regulation_matches_sequential_ops_bitwise() {
        use crate::regulation::{
            apply_gradient_constraint, apply_value_constraint, reset_sea_level,
        };
        let mut constraint = fractal_noise(20, 14, 3, 55);
        constraint.remap_to((-3.0, 25.0));
        let spec = InitSpec::new(constraint);
        let params = SimParams {
            sea_level: 2.0,
            ..SimParams::default()
        };
        // Fused path: one full tick.
        let mut fused = initialize(&spec, &params).unwrap();
        tick(&mut fused, &params);
        // Reference path: the same phases as separate operations.
        let mut reference = initialize(&spec, &params).unwrap();
        let mut state = crate::hydrology::build_drainage_forest(&reference);
        accumulate_drainage(&mut state, &reference, params.k_d);
        carve_all_gorges(&mut reference, &state, params.k_g);
        fluvial_erode(&mut reference, &state, &params.erosion());
        apply_value_constraint(&mut reference);
        apply_gradient_constraint(&mut reference);
        reset_sea_level(&mut reference);
        assert_eq!(fused, reference);
    }

    #[test]
    fn offsets_never_change_after_initialization() {
        let spec = InitSpec::new(fractal_noise(16, 16, 3, 2));
        let params = SimParams::default();
        let mut grid = initialize(&spec, &params).unwrap();
        let offsets: Vec<(f64, f64)> = grid.tiles().iter().map(|t| (t.offset_x, t.offset_y)).collect();
        for _ in 0..5 {
            tick(&mut grid, &params);
        }
        let after: Vec<(f64, f64)> = grid.tiles().iter().map(|t| (t.offset_x, t.offset_y)).collect();
        assert_eq!(offsets, after);
    }

    #[test]
    fn dry_run_converges_to_constraint_geometrically() {
        // With zero moisture and zero gradient strength, the value
        // constraint is the only active process: the land-constraint gap
        // shrinks by exactly (1 - v) per tick.
        let mut spec = InitSpec::new(Heightmap::uniform(8, 8, 10.0));
        spec.moisture = FieldSpec::Uniform(0.0);
        spec.gradient_strength = FieldSpec::Uniform(0.0);
        spec.value_strength = ValueStrengthSpec::Uniform(0.25);
        let params = SimParams {
            sea_level: -5.0,
            constraint_noise_amplitude: Some(0.0),
            ..SimParams::default()
        };
        let mut grid = initialize(&spec, &params).unwrap();
        for i in 0..grid.len() {
            grid.tile_mut(i).land_height += 1.0 + (i % 5) as f64;
        }
        let gap = |g: &TileGrid| -> Vec<f64> {
            g.tiles()
                .iter()
                .map(|t| t.land_height - t.constraint_height)
                .collect()
        };
        for _ in 0..4 {
            let before = gap(&grid);
            tick(&mut grid, &params);
            let after = gap(&grid);
            for (b, a) in before.iter().zip(&after) {
                assert!((a - 0.75 * b).abs() < 1e-12, "{a} vs 0.75*{b}");
            }
        }
    }

    #[test]
    fn golden_digest_is_stable() {
        // FNV-1a over the final land-height bit patterns of a small run.
        // Pins the exact numeric behavior; update deliberately if the
        // simulation arithmetic is intentionally changed.
        let mut constraint = fractal_noise(32, 32, 3, 77);
        constraint.remap_to((0.0, 25.0));
        let spec = InitSpec::new(constraint);
        let params = SimParams {
            iterations: 20,
            seed: 77,
            sea_level: 3.0,
            ..SimParams::default()
        };
        let (grid, _) = run(&spec, &params).unwrap();
        let mut digest: u64 = 0xcbf29ce484222325;
        for tile in grid.tiles() {
            for byte in tile.land_height.to_le_bytes() {
                digest ^= byte as u64;
                digest = digest.wrapping_mul(0x100000001b3);
            }
        }
        assert_eq!(digest, 0x5b7c5c1da4afd887, "digest {digest:#x}");
    }

    #[test]
    fn water_matches_sea_rule_after_every_tick() {
        let mut constraint = fractal_noise(16, 16, 3, 33);
        constraint.remap_to((-5.0, 20.0));
        let spec = InitSpec::new(constraint);
        let params = SimParams {
            sea_level: 0.0,
            ..SimParams::default()
        };
        let mut grid = initialize(&spec, &params).unwrap();
        for _ in 0..10 {
            tick(&mut grid, &params);
            for i in 0..grid.len() {
                let t = grid.tile(i);
                assert_eq!(t.water_height, (0.0f64 - t.land_height).max(0.0));
            }
        }
    }
}
