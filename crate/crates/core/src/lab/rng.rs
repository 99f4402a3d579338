use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams used by one simulation block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 1,
    TrainingNoise = 2,
    FeedbackNoise = 3,
    Quantizer = 4,
    MessageError = 5,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// ChaCha8 keyed by `seed + purpose·φ64` (wrapping) with the block index
/// as stream id. The mapping is fixed: the same `(seed, purpose, block)`
/// always yields the same sequence.
pub fn stream_rng(seed: u64, purpose: Purpose, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add((purpose as u64).wrapping_mul(GOLDEN)));
    rng.set_stream(block);
    rng
}
