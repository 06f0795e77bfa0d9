//! Low-discrepancy sampling for the box audits.
//!
//! A classic Sobol sequence (Gray-code construction, Bratley–Fox initial direction
//! numbers) covers dimensions up to 8, which is enough for every state/input box in
//! this crate. Requests beyond that fall back to seeded uniform draws so the audits
//! still run; either way the point set is a pure function of `(dim, count, seed)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const MAX_SOBOL_DIM: usize = 8;
const BITS: usize = 30;

/// Primitive polynomial degrees, encoded coefficient masks (without the leading
/// term), and initial direction numbers for dimensions 2..=8; dimension 1 is the
/// van der Corput sequence.
const POLY_DEGREE: [usize; 7] = [1, 2, 3, 3, 4, 4, 5];
const POLY_MASK: [u64; 7] = [0, 1, 1, 2, 1, 4, 2];
const INIT_DIRECTIONS: [&[u64]; 7] = [
    &[1],
    &[1, 3],
    &[1, 3, 1],
    &[1, 1, 1],
    &[1, 1, 3, 3],
    &[1, 3, 5, 13],
    &[1, 1, 5, 5, 17],
];

fn direction_numbers(dim_index: usize) -> [u64; BITS] {
    let mut v = [0u64; BITS];
    if dim_index == 0 {
        for (i, vi) in v.iter_mut().enumerate() {
            *vi = 1 << (BITS - 1 - i);
        }
        return v;
    }
    let s = POLY_DEGREE[dim_index - 1];
    let a = POLY_MASK[dim_index - 1];
    let m_init = INIT_DIRECTIONS[dim_index - 1];
    let mut m = vec![0u64; BITS];
    m[..s].copy_from_slice(&m_init[..s]);
    for i in s..BITS {
        let mut val = m[i - s] ^ (m[i - s] << s);
        for k in 1..s {
            if (a >> (s - 1 - k)) & 1 == 1 {
                val ^= m[i - k] << k;
            }
        }
        m[i] = val;
    }
    for i in 0..BITS {
        v[i] = m[i] << (BITS - 1 - i);
    }
    v
}

/// `count` points in the unit cube `[0,1)^dim`.
///
/// Sobol (skipping the initial all-zeros point) for `dim <= 8`; uniform ChaCha draws
/// otherwise. The result depends only on the arguments.
pub fn unit_points(dim: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    assert!(dim > 0, "dimension must be positive");
    if dim > MAX_SOBOL_DIM {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        return (0..count)
            .map(|_| (0..dim).map(|_| rng.random::<f64>()).collect())
            .collect();
    }
    let dirs: Vec<[u64; BITS]> = (0..dim).map(direction_numbers).collect();
    let scale = 1.0 / (1u64 << BITS) as f64;
    let mut state = vec![0u64; dim];
    let mut out = Vec::with_capacity(count);
    // Gray-code order: point k flips the bit at the index of the lowest zero bit of k.
    for k in 0..count as u64 {
        let c = (!k).trailing_zeros() as usize;
        for (d, s) in state.iter_mut().enumerate() {
            *s ^= dirs[d][c.min(BITS - 1)];
        }
        out.push(state.iter().map(|&s| s as f64 * scale).collect());
    }
    out
}

/// `count` points in the box `[lo, hi]^dim`.
pub fn sample_box(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    assert!(hi > lo, "box bounds must be ordered");
    unit_points(dim, count, seed)
        .into_iter()
        .map(|p| p.into_iter().map(|u| lo + (hi - lo) * u).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_deterministic() {
        assert_eq!(unit_points(3, 100, 42), unit_points(3, 100, 42));
        assert_eq!(sample_box(9, 50, -2.0, 2.0, 7), sample_box(9, 50, -2.0, 2.0, 7));
    }

    #[test]
    fn points_stay_in_box() {
        for p in sample_box(4, 1000, -2.0, 2.0, 42) {
            for x in p {
                assert!((-2.0..=2.0).contains(&x));
            }
        }
    }

    #[test]
    fn one_dimensional_prefix_is_van_der_corput() {
        let pts = unit_points(1, 7, 0);
        let expect = [0.5, 0.75, 0.25, 0.375, 0.875, 0.625, 0.125];
        for (p, e) in pts.iter().zip(expect) {
            assert!((p[0] - e).abs() < 1e-12, "{} vs {}", p[0], e);
        }
    }

    #[test]
    fn low_discrepancy_beats_worst_case_spread() {
        // crude equidistribution check: each half of each axis holds ~half the points
        let pts = unit_points(5, 2048, 0);
        for d in 0..5 {
            let below = pts.iter().filter(|p| p[d] < 0.5).count();
            assert!(
                (below as i64 - 1024).abs() <= 8,
                "axis {d}: {below} of 2048 points below midpoint"
            );
        }
    }
}
