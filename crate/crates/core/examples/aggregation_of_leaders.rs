//! Fit aggregation of leaders on a finite class and compare with global ERM.

use aol::domain::split_threeway;
use aol::estimators::{aol_fit, global_erm_fit, AolConfig, EpsilonRegime, DEFAULT_MEMBER_BUDGET};
use aol::worlds::{make_random_constants_world, sample_world};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let world = make_random_constants_world(16, 8, 0.2, &mut rng)?;
    let n = 500;
    let data = sample_world(&world, 3 * n, &mut rng)?;

    let fit = aol_fit(world.class(), &data, &AolConfig::new(EpsilonRegime::Vc))?;
    let s_prime = split_threeway(&data)?.s_prime;
    let erm = global_erm_fit(world.class(), &s_prime, DEFAULT_MEMBER_BUDGET, None)?;

    println!("epsilon        {:.4}", fit.epsilon);
    println!("cells          {}", fit.n_cells);
    println!("leader risks   {:?}", fit.cell_risks.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>());
    println!("excess (aol)   {:.3e}", world.excess_risk(&fit.predictor)?);
    println!("excess (erm)   {:.3e}", world.excess_risk(&erm.predictor)?);
    Ok(())
}
