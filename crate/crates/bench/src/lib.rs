//! Shared fixtures for the criterion benchmarks.

use hdrfunque::frameio::{ChromaSubsampling, PlanarFrame};
use hdrfunque::plane::Plane;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Deterministic random plane in `[0, 1]`.
pub fn random_plane(width: usize, height: usize, seed: u64) -> Plane {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    Plane::from_vec(
        (0..width * height).map(|_| rng.gen::<f64>()).collect(),
        width,
        height,
    )
}

/// Deterministic random 4:2:0 frame.
pub fn random_frame(width: usize, height: usize, seed: u64) -> PlanarFrame {
    let (cw, ch) = ChromaSubsampling::C420.chroma_dims(width, height);
    PlanarFrame::new(
        random_plane(width, height, seed),
        random_plane(cw, ch, seed ^ 0x1111),
        random_plane(cw, ch, seed ^ 0x2222),
        ChromaSubsampling::C420,
        10,
        0,
    )
    .expect("geometry is consistent")
}
