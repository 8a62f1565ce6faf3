use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

/// Seeded counter-based random stream. Identical `(seed, stream_id)` pairs
/// replay identical sequences regardless of which thread draws them.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }
    /// Words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Independent child stream, e.g. one per trajectory.
    pub fn derive(&self, index: u64) -> Self {
        // mix so that (seed, stream, index) never collides with a plain (seed, stream)
        let mixed = self
            .stream_id
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .rotate_left(17)
            ^ index.wrapping_add(0xD1B5_4A32_D192_ED03);
        Self::new(self.seed, mixed)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform on (0, 1], safe for logarithms.
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.rng.gen::<f64>()
    }

    pub fn gaussian(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn exponential(&mut self, mean: f64) -> f64 {
        Exp::new(1.0 / mean).expect("positive mean").sample(&mut self.rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DrawKind {
    Uniform01,
    StandardGaussian,
    Exponential { mean: f64 },
}

pub fn draw(stream: &mut RngStream, kind: DrawKind) -> f64 {
    match kind {
        DrawKind::Uniform01 => stream.uniform(),
        DrawKind::StandardGaussian => stream.gaussian(),
        DrawKind::Exponential { mean } => stream.exponential(mean),
    }
}
