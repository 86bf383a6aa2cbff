//! Sparse convex aggregation of a random dictionary against the s-sparse rate.

use aol::aggregate::AggregatorSpec;
use aol::bounds::psi_nms;
use aol::domain::FunctionSpec;
use aol::estimators::{sparse_convex_fit, DEFAULT_FW_TOL, DEFAULT_MEMBER_BUDGET};
use aol::worlds::{make_dictionary_world, sample_world};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let (m, s) = (20, 2);
    let world = make_dictionary_world(m, 64, s, 0.15, &mut ChaCha8Rng::seed_from_u64(4))?;
    let FunctionSpec::DictionaryHull(hull) = world.class() else {
        unreachable!()
    };
    println!("misspecification {:.3}", world.misspecification()?);
    for n in [128, 512, 2048] {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let data = sample_world(&world, 3 * n, &mut rng)?;
        let fit = sparse_convex_fit(hull, &data, &AggregatorSpec::star(), DEFAULT_FW_TOL, DEFAULT_MEMBER_BUDGET)?;
        print!("n={n:5}  excess {:.3e}  psi {:.3e}", world.excess_risk(&fit.predictor)?, psi_nms(n, m, s)?);
        for stage in &fit.stages {
            print!("  {} {:.3e}", stage.name, world.excess_risk(&stage.predictor)?);
        }
        println!();
    }
    Ok(())
}
