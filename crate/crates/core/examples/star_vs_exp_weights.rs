//! Star aggregate versus exponential weights on the same candidates.

use aol::aggregate::{ew_aggregate, ew_weights, star_aggregate};
use aol::domain::Predictor;
use aol::empirical::QuadraticRisk;
use aol::worlds::{make_random_constants_world, sample_world};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let world = make_random_constants_world(8, 4, 0.2, &mut rng)?;
    let aol::domain::FunctionSpec::FiniteList(list) = world.class() else {
        unreachable!()
    };
    let candidates = list
        .members
        .iter()
        .map(|m| Predictor::member(m.clone()))
        .collect::<aol::Result<Vec<_>>>()?;

    for n in [50, 200, 800, 3200] {
        let (mut star, mut ew) = (0.0, 0.0);
        let reps = 200;
        for _ in 0..reps {
            let d = sample_world(&world, n, &mut rng)?;
            star += world.excess_risk(&star_aggregate(&candidates, &d)?)?;
            ew += world.excess_risk(&ew_aggregate(&candidates, &d, 4.0)?)?;
        }
        println!(
            "n={n:5}  star {:.3e}  exp-weights {:.3e}",
            star / reps as f64,
            ew / reps as f64
        );
    }

    let d = sample_world(&world, 100, &mut rng)?;
    let q = QuadraticRisk::from_dataset(&d);
    let risks = candidates
        .iter()
        .map(|c| q.risk_of(c))
        .collect::<aol::Result<Vec<_>>>()?;
    println!("weights at n=100: {:?}", ew_weights(&risks, 100, 4.0).iter().map(|w| format!("{w:.3}")).collect::<Vec<_>>());
    Ok(())
}
