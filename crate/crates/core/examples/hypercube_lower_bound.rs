//! Regret on the hypercube worlds stays of order n^{-1/(p-1)}: n·regret is
//! flat in n for p = 2.

use aol::domain::split_threeway;
use aol::estimators::{aol_fit, global_erm_fit, AolConfig, EpsilonRegime, DEFAULT_MEMBER_BUDGET};
use aol::worlds::{hypercube_dimension, make_hypercube_world, sample_world, HypercubeVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let p = 2.0;
    let reps = 50;
    for n in [16, 32, 64, 128] {
        let d = hypercube_dimension(n, p, HypercubeVariant::Regret)?;
        let (mut aol, mut erm) = (0.0, 0.0);
        for rep in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 * n as u64 + rep);
            let world = make_hypercube_world(n, p, HypercubeVariant::Regret, None, &mut rng)?;
            let data = sample_world(&world, 3 * n, &mut rng)?;
            let fit = aol_fit(world.class(), &data, &AolConfig::new(EpsilonRegime::Poly { p }))?;
            aol += world.excess_risk(&fit.predictor)?;
            let s_prime = split_threeway(&data)?.s_prime;
            let step = Some(0.5 * (n as f64).powf(-0.25));
            let e = global_erm_fit(world.class(), &s_prime, DEFAULT_MEMBER_BUDGET, step)?;
            erm += world.excess_risk(&e.predictor)?;
        }
        let scale = (n as f64).powf(1.0 / (p - 1.0));
        println!(
            "n={n:4} d={d:6}  regret: aol {:.3e}  erm {:.3e}  rescaled by n^(1/(p-1)): {:.4} {:.4}",
            aol / reps as f64,
            erm / reps as f64,
            aol / reps as f64 * scale,
            erm / reps as f64 * scale
        );
    }
    Ok(())
}
