//! Greedy epsilon-nets and Voronoi cells under the empirical metric.

use aol::domain::{Dataset, Predictor};
use aol::empirical::{emp_metric, EmpiricalMetricContext};
use aol::netpart::{build_partition, cell_members};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> aol::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let members = (0..200)
        .map(|_| Predictor::member((0..5).map(|_| rng.gen::<f64>()).collect()))
        .collect::<aol::Result<Vec<_>>>()?;
    let sample: Vec<(usize, f64)> = (0..40).map(|_| (rng.gen_range(0..5), 0.5)).collect();
    let ctx = EmpiricalMetricContext::new(&Dataset::from_slots(&sample)?);

    for eps in [0.5, 0.3, 0.2, 0.1] {
        let part = build_partition(&members, eps, &ctx)?;
        let largest = (0..part.n_cells())
            .map(|c| cell_members(&part, c).map(|m| m.len()))
            .collect::<aol::Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        let radius = part
            .assignment
            .iter()
            .enumerate()
            .map(|(m, &c)| emp_metric(&members[m], &members[part.net.center_ids[c]], &ctx))
            .collect::<aol::Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        println!(
            "eps={eps:.2}  cells={:3}  largest cell={largest:3}  max distance to center={radius:.3}",
            part.n_cells()
        );
    }
    Ok(())
}
