//! Random epsilon-net on an explicit member list and its Voronoi partition.

use crate::domain::Predictor;
use crate::empirical::{farthest_point_cover, EmpiricalMetricContext};
use crate::error::{Error, Result};

/// Proper epsilon-net: `center_ids` index into the member list it was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonNet {
    pub epsilon: f64,
    pub center_ids: Vec<usize>,
    /// Size of the sample whose pseudo-metric defined the net.
    pub sample_size: usize,
}

impl EpsilonNet {
    pub fn len(&self) -> usize {
        self.center_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_ids.is_empty()
    }
}

/// Voronoi cells of the members around the net centers. Cells are numbered
/// `0..N` in the order the centers were added.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub net: EpsilonNet,
    pub assignment: Vec<usize>,
}

impl Partition {
    pub fn n_cells(&self) -> usize {
        self.net.len()
    }
}

/// Greedy net on the sample `S`, then nearest-center assignment (ties go to
/// the lower center index).
pub fn build_partition(
    members: &[Predictor],
    epsilon: f64,
    ctx_s: &EmpiricalMetricContext,
) -> Result<Partition> {
    let run = farthest_point_cover(members, epsilon, ctx_s)?;
    Ok(Partition {
        net: EpsilonNet {
            epsilon,
            center_ids: run.centers,
            sample_size: ctx_s.sample_size(),
        },
        assignment: run.assignment,
    })
}

/// Member indices of cell `i` (0-based), in member order.
pub fn cell_members(p: &Partition, i: usize) -> Result<Vec<usize>> {
    if i >= p.n_cells() {
        return Err(Error::CellOutOfRange {
            index: i,
            cells: p.n_cells(),
        });
    }
    Ok(p.assignment
        .iter()
        .enumerate()
        .filter(|(_, &c)| c == i)
        .map(|(m, _)| m)
        .collect())
}
