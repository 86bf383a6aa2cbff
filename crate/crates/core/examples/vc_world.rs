//! Indicator worlds: packing, world size and the estimators' excess risk.

use aol::estimators::{aol_fit, AolConfig, EpsilonRegime};
use aol::worlds::{d_selection_pack, make_vc_world, sample_world, vc_world_size};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let d = 2;
    let (alpha, k) = vc_world_size(100, d)?;
    println!("n=100, d={d}: alpha={alpha:.7}, k={k}");
    let code = d_selection_pack(k, d, &mut ChaCha8Rng::seed_from_u64(1))?;
    println!(
        "packing: {} vectors, cardinality bound met: {}",
        code.sequences.len(),
        code.meets_cardinality_bound
    );
    // the raw indicator class is enumerated member by member, so keep it small
    for (n, shifted) in [(100, true), (20, false)] {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let world = make_vc_world(n, d, None, shifted, &mut rng)?;
        let data = sample_world(&world, 3 * n, &mut rng)?;
        let fit = aol_fit(world.class(), &data, &AolConfig::new(EpsilonRegime::Vc))?;
        println!(
            "n={n} shifted={shifted}: cells {}, excess {:.3e}, misspecification {:.3}",
            fit.n_cells,
            world.excess_risk(&fit.predictor)?,
            world.misspecification()?
        );
    }
    Ok(())
}
