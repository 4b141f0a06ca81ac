//! Initial placement of program qubits onto trap slots.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::arch::{ArchError, PosId, PositionGraph, QubitMapping, Topology};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MappingStrategy {
    /// Fill traps in id order, interior slots before the junction-facing ends.
    #[default]
    Packed,
    /// Seeded shuffle of interior slots, then of end slots.
    Random,
}

fn split_slots(topo: &Topology) -> (Vec<PosId>, Vec<PosId>) {
    let l = topo.trap_capacity();
    let mut interior = Vec::new();
    let mut ends = Vec::new();
    for t in 0..topo.num_traps() {
        for i in 0..l {
            let p = topo.pos_at(t, i);
            if l > 2 && i > 0 && i + 1 < l {
                interior.push(p);
            } else {
                ends.push(p);
            }
        }
    }
    (interior, ends)
}

/// Place `n` qubits. Fails when the grid has fewer than `n` slots.
pub fn initial_mapping(
    n: usize,
    topo: Arc<Topology>,
    strategy: MappingStrategy,
    seed: u64,
) -> Result<PositionGraph, ArchError> {
    if n > topo.num_positions() {
        return Err(ArchError::InvalidSpec(format!(
            "{n} qubits do not fit in {} slots",
            topo.num_positions()
        )));
    }
    let (mut interior, mut ends) = split_slots(&topo);
    if strategy == MappingStrategy::Random {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        interior.shuffle(&mut rng);
        ends.shuffle(&mut rng);
    }
    let mut m = QubitMapping::new(topo.num_positions(), n);
    for (q, p) in interior.into_iter().chain(ends).take(n).enumerate() {
        m.place(q, p)?;
    }
    Ok(PositionGraph::with_mapping(topo, m))
}
