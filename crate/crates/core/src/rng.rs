//! Seedable counter-based random number generator.
//!
//! Every random draw in this crate flows through [`Rng`], a SplitMix64
//! generator: the 64-bit state advances by the golden-ratio increment
//! `0x9E3779B97F4A7C15` and each output is the mix
//!
//! ```text
//! z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//! z ^= z >> 27; z *= 0x94D049BB133111EB;
//! z ^= z >> 31;
//! ```
//!
//! Gaussian variates come from the Box-Muller transform; the cosine and sine
//! branch of each pair are handed out in order, so a fixed seed yields a
//! bit-identical stream of draws.

use crate::matrix::Matrix;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[derive(Debug, Clone)]
pub struct Rng {
    state: u64,
    spare_gaussian: Option<f64>,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self { state: seed, spare_gaussian: None }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        if let Some(z) = self.spare_gaussian.take() {
            return z;
        }
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.next_f64();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_gaussian = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Matrix with i.i.d. `N(0, sigma^2)` entries, filled row-major.
    pub fn gaussian_matrix(&mut self, rows: usize, cols: usize, sigma: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| sigma * self.next_gaussian())
    }

    /// Child generator with an independent-looking stream, for deriving
    /// data/init streams from one experiment seed.
    pub fn fork(&self, stream: u64) -> Rng {
        let mut probe = Rng::new(self.state ^ stream.wrapping_mul(GOLDEN_GAMMA) ^ 0x5851_F42D_4C95_7F2D);
        probe.next_u64();
        Rng::new(probe.state)
    }
}
