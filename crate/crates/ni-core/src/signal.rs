//! Input signals for trajectory experiments.
//!
//! A small closed enum rather than bare closures so that signals can be cloned into
//! batch runs, logged, and rebuilt deterministically from a seed. `Custom` escapes
//! the enum for tests that need something exotic.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

#[derive(Clone)]
pub enum Signal {
    /// Identically zero on `m` channels.
    Zero { channels: usize },
    /// Constant vector.
    Constant(Vec<f64>),
    /// `amplitude_k * sin(omega t + phase)` per channel.
    Sine { amplitude: Vec<f64>, omega: f64, phase: f64 },
    /// Sum of sine components, each `(amplitudes, omega, phase)`.
    Multisine(Vec<(Vec<f64>, f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>),
}

impl Signal {
    pub fn eval(&self, t: f64) -> Vec<f64> {
        match self {
            Signal::Zero { channels } => vec![0.0; *channels],
            Signal::Constant(c) => c.clone(),
            Signal::Sine { amplitude, omega, phase } => {
                let s = (omega * t + phase).sin();
                amplitude.iter().map(|a| a * s).collect()
            }
            Signal::Multisine(parts) => {
                let channels = parts.first().map_or(0, |(a, _, _)| a.len());
                let mut out = vec![0.0; channels];
                for (amp, omega, phase) in parts {
                    let s = (omega * t + phase).sin();
                    for (o, a) in out.iter_mut().zip(amp) {
                        *o += a * s;
                    }
                }
                out
            }
            Signal::Custom(f) => f(t),
        }
    }

    pub fn channels(&self) -> usize {
        match self {
            Signal::Zero { channels } => *channels,
            Signal::Constant(c) => c.len(),
            Signal::Sine { amplitude, .. } => amplitude.len(),
            Signal::Multisine(parts) => parts.first().map_or(0, |(a, _, _)| a.len()),
            Signal::Custom(f) => f(0.0).len(),
        }
    }

    /// Random multisine with `components` terms, frequencies log-uniform in
    /// `[0.1, 5]` rad/s, and amplitudes normalised so the signal never exceeds
    /// `bound` per channel. Fully determined by the rng state.
    pub fn random_bounded(rng: &mut ChaCha8Rng, channels: usize, bound: f64) -> Signal {
        let components = 5;
        let mut parts = Vec::with_capacity(components);
        let mut raw: Vec<Vec<f64>> = Vec::new();
        for _ in 0..components {
            let omega = 10f64.powf(rng.random_range(-1.0..0.7));
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let amp: Vec<f64> = (0..channels).map(|_| rng.random_range(-1.0..1.0)).collect();
            raw.push(amp.clone());
            parts.push((amp, omega, phase));
        }
        // Worst-case per-channel amplitude is the sum of |a_k|; scale it to `bound`.
        for ch in 0..channels {
            let total: f64 = raw.iter().map(|a| a[ch].abs()).sum();
            if total > 0.0 {
                for part in parts.iter_mut() {
                    part.0[ch] *= bound / total;
                }
            }
        }
        Signal::Multisine(parts)
    }

    /// Convenience: a batch of [`Signal::random_bounded`] signals from one seed.
    pub fn random_batch(seed: u64, count: usize, channels: usize, bound: f64) -> Vec<Signal> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count).map(|_| Signal::random_bounded(&mut rng, channels, bound)).collect()
    }
}

/// Deterministic generator for [`Signal::random_bounded`]; spares downstream
/// crates a direct dependency on the rng implementation.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

impl std::fmt::Debug for Signal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Signal::Zero { channels } => write!(f, "Zero({channels})"),
            Signal::Constant(c) => write!(f, "Constant({c:?})"),
            Signal::Sine { amplitude, omega, phase } => {
                write!(f, "Sine(amp={amplitude:?}, omega={omega}, phase={phase})")
            }
            Signal::Multisine(parts) => write!(f, "Multisine({} components)", parts.len()),
            Signal::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_multisine_respects_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let sig = Signal::random_bounded(&mut rng, 2, 1.0);
        for k in 0..2000 {
            let t = k as f64 * 0.01;
            for v in sig.eval(t) {
                assert!(v.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn batches_from_equal_seeds_agree() {
        let a = Signal::random_batch(7, 3, 1, 2.0);
        let b = Signal::random_batch(7, 3, 1, 2.0);
        for (x, y) in a.iter().zip(&b) {
            for k in 0..10 {
                assert_eq!(x.eval(k as f64), y.eval(k as f64));
            }
        }
    }
}
