use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator used for every stochastic step: initialisation, shuffling,
/// clause selection and patch selection.
pub type TmRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> TmRng {
    ChaCha8Rng::seed_from_u64(seed)
}
