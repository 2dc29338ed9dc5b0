//! Seeded fractal gradient noise for built-in constraint and moisture maps.
//!
//! Classic permutation-table Perlin noise summed over octaves with
//! per-octave frequency doubling and amplitude halving, then renormalized
//! to `[0,1]`. Gradients come from a fixed 8-vector table (no trig), so the
//! output is a pure function of (dimensions, octaves, seed).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::heightmap::Heightmap;

/// Base lattice frequency: periods of the coarsest octave across the
/// longest map dimension.
const BASE_PERIODS: f64 = 4.0;

const GRADIENTS: [(f64, f64); 8] = [
    (1.0, 0.0),
    (-1.0, 0.0),
    (0.0, 1.0),
    (0.0, -1.0),
    (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2),
    (std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
    (-std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2),
];

struct Perlin {
    perm: [u8; 512],
}

impl Perlin {
    fn new(rng: &mut ChaCha8Rng) -> Self {
        let mut table: [u8; 256] = std::array::from_fn(|i| i as u8);
        for i in (1..256).rev() {
            let j = rng.random_range(0..=i);
            table.swap(i, j);
        }
        let mut perm = [0u8; 512];
        perm[..256].copy_from_slice(&table);
        perm[256..].copy_from_slice(&table);
        Perlin { perm }
    }

    #[inline]
    fn gradient(&self, xi: i64, yi: i64) -> (f64, f64) {
        let h = self.perm[(self.perm[(xi & 255) as usize] as usize) + (yi & 255) as usize];
        GRADIENTS[(h & 7) as usize]
    }

    fn sample(&self, x: f64, y: f64) -> f64 {
        let xi = x.floor();
        let yi = y.floor();
        let xf = x - xi;
        let yf = y - yi;
        let (xi, yi) = (xi as i64, yi as i64);

        let fade = |t: f64| t * t * t * (t * (t * 6.0 - 15.0) + 10.0);
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        let dot = |g: (f64, f64), dx: f64, dy: f64| g.0 * dx + g.1 * dy;

        let n00 = dot(self.gradient(xi, yi), xf, yf);
        let n10 = dot(self.gradient(xi + 1, yi), xf - 1.0, yf);
        let n01 = dot(self.gradient(xi, yi + 1), xf, yf - 1.0);
        let n11 = dot(self.gradient(xi + 1, yi + 1), xf - 1.0, yf - 1.0);

        let u = fade(xf);
        let v = fade(yf);
        lerp(lerp(n00, n10, u), lerp(n01, n11, u), v)
    }
}

/// Fractal sum of `octaves` gradient-noise layers, renormalized so the
/// output spans exactly `[0,1]`. Deterministic in (width, height, octaves,
/// seed).
pub fn fractal_noise(width: usize, height: usize, octaves: u32, seed: u64) -> Heightmap {
    assert!(width > 0 && height > 0, "noise dimensions must be positive");
    assert!(octaves >= 1, "octave count must be positive");

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perlin = Perlin::new(&mut rng);
    // Per-octave lattice offsets keep higher octaves off the shared lattice
    // points, where gradient noise is identically zero.
    let offsets: Vec<(f64, f64)> = (0..octaves)
        .map(|_| (rng.random::<f64>() * 256.0, rng.random::<f64>() * 256.0))
        .collect();

    let max_dim = width.max(height) as f64;
    let mut samples = vec![0.0f64; width * height];
    for row in 0..height {
        for col in 0..width {
            let u = (col as f64 + 0.5) / max_dim * BASE_PERIODS;
            let v = (row as f64 + 0.5) / max_dim * BASE_PERIODS;
            let mut total = 0.0;
            let mut frequency = 1.0;
            let mut amplitude = 1.0;
            for &(ox, oy) in &offsets {
                total += amplitude * perlin.sample(u * frequency + ox, v * frequency + oy);
                frequency *= 2.0;
                amplitude *= 0.5;
            }
            samples[row * width + col] = total;
        }
    }

    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &s in &samples {
        min = min.min(s);
        max = max.max(s);
    }
    let span = max - min;
    for s in &mut samples {
        *s = if span > 0.0 { (*s - min) / span } else { 0.5 };
    }

    let mut map = Heightmap::from_samples(width, height, samples);
    map.value_range = (0.0, 1.0);
    map
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_abs_laplacian(map: &Heightmap) -> f64 {
        let (w, h) = (map.width, map.height);
        let mut sum = 0.0;
        let mut count = 0usize;
        for r in 1..h - 1 {
            for c in 1..w - 1 {
                let lap = map.get(r - 1, c) + map.get(r + 1, c) + map.get(r, c - 1)
                    + map.get(r, c + 1)
                    - 4.0 * map.get(r, c);
                sum += lap.abs();
                count += 1;
            }
        }
        sum / count as f64
    }

    #[test]
    fn deterministic_for_same_inputs() {
        let a = fractal_noise(64, 48, 3, 1234);
        let b = fractal_noise(64, 48, 3, 1234);
        assert_eq!(a.samples, b.samples);
        let c = fractal_noise(64, 48, 3, 1235);
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn renormalized_range_spans_unit_interval() {
        let map = fractal_noise(256, 256, 3, 7);
        let min = map.samples.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = map.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(min >= 0.0 && max <= 1.0);
        assert!(max - min > 0.5, "spread {}", max - min);
        assert_eq!(min, 0.0);
        assert_eq!(max, 1.0);
    }

    #[test]
    fn more_octaves_add_high_frequency_detail() {
        let low = fractal_noise(128, 128, 1, 99);
        let high = fractal_noise(128, 128, 8, 99);
        assert!(mean_abs_laplacian(&high) > mean_abs_laplacian(&low));
    }

    #[test]
    #[should_panic]
    fn zero_dimensions_panic() {
        fractal_noise(0, 10, 3, 1);
    }
}
