//! Initial phase fields.

use larche_core::grid_fem::Mesh;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Phases separated along `y = 1/2`: `tanh((1/2 - y) / (sqrt(2) ell))`, so the
/// lower half is near `+1`. With `sharp` the profile is a jump (zero on the midline).
pub fn init_midsplit(mesh: &Mesh, ell: f64, sharp: bool) -> Vec<f64> {
    mesh.coords()
        .iter()
        .map(|p| {
            let d = 0.5 - p[1];
            if sharp {
                if d.abs() < 1e-12 {
                    0.0
                } else {
                    d.signum()
                }
            } else {
                (d / (std::f64::consts::SQRT_2 * ell)).tanh()
            }
        })
        .collect()
}

/// Independent uniform values in `[-amplitude, amplitude]` drawn from ChaCha8 seeded with `seed`.
pub fn init_random(mesh: &Mesh, seed: u64, amplitude: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..mesh.n_nodes()).map(|_| rng.random_range(-amplitude..=amplitude)).collect()
}
