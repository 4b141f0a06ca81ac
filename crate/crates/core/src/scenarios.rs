//! Small hand-built instances used by regression tests, the acceptance suite and the CLI.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::arch::{ArchError, HardwareSpec, PosId, PositionGraph, QubitMapping, Topology, TrapId};
use crate::circuit::{Circuit, Op};

/// Hardware, program and an explicit initial placement (`placement[q]` is qubit `q`'s slot).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub spec: HardwareSpec,
    pub circuit: Circuit,
    pub placement: Vec<PosId>,
}

impl Scenario {
    pub fn graph(&self) -> Result<PositionGraph, ArchError> {
        let topo = Arc::new(Topology::build(&self.spec)?);
        placed_graph(topo, &self.placement)
    }
}

/// Layout with `placement[q]` as the slot of qubit `q`.
pub fn placed_graph(topo: Arc<Topology>, placement: &[PosId]) -> Result<PositionGraph, ArchError> {
    let mut m = QubitMapping::new(topo.num_positions(), placement.len());
    for (q, &p) in placement.iter().enumerate() {
        if p >= topo.num_positions() {
            return Err(ArchError::NoSuchPosition(p));
        }
        m.place(q, p)?;
    }
    Ok(PositionGraph::with_mapping(topo, m))
}

fn slots(spec: &HardwareSpec, at: &[(TrapId, usize)]) -> Vec<PosId> {
    at.iter().map(|&(t, i)| t * spec.trap_capacity + i).collect()
}

/// Two pairs waiting on the same junction direction.
///
/// 2x2 grid, four slots per trap, one gate zone at index 2. Qubit 0 sits two steps north of
/// junction (0,0); qubits 1 and 2 share the trap east of it; qubit 3 waits at the north leg
/// end of junction (0,1) and qubit 4 in the trap east of that junction. Program:
/// `cx 1,2; cx 3,4; cx 0,2`. Deferring the junction transfer lets one down-right shift carry
/// qubits 0 and 3 together.
pub fn grouped_transfer() -> Scenario {
    let spec = HardwareSpec::new(2, 4, 1);
    let mut c = Circuit::new(5);
    c.push(Op::new("cx", &[1, 2]));
    c.push(Op::new("cx", &[3, 4]));
    c.push(Op::new("cx", &[0, 2]));
    // traps: 1 = h(0,1), 2 = h(0,2), 6 = v(0,0), 9 = v(1,0)
    let placement = slots(&spec, &[(6, 1), (1, 1), (1, 2), (9, 3), (2, 1)]);
    Scenario { spec, circuit: c, placement }
}

/// A swap long enough to hide a gate behind it.
///
/// Single junction, seven slots per trap, gate zones at indices 2 and 3; all five qubits in
/// trap 0 at indices 0, 1, 4, 2, 6. Program: `h 3; cx 2,3; cx 0,2; cx 2,4`. The swap of
/// qubits 0 and 1 runs for 200 us while the 1Q gate and the following shift finish early.
pub fn overlapped_swap() -> Scenario {
    let spec = HardwareSpec::new(1, 7, 2).with_gate_zone_layout(vec![2, 3]);
    let mut c = Circuit::new(5);
    c.push(Op::new("h", &[3]));
    c.push(Op::new("cx", &[2, 3]));
    c.push(Op::new("cx", &[0, 2]));
    c.push(Op::new("cx", &[2, 4]));
    let placement = slots(&spec, &[(0, 0), (0, 1), (0, 4), (0, 2), (0, 6)]);
    Scenario { spec, circuit: c, placement }
}

/// Two runs competing for one vacancy.
///
/// Single junction, eight slots per trap, one gate zone at index 3 which is empty. Qubits 0..3
/// fill indices 0..2 and qubits 3, 4 fill indices 4, 5; every qubit has one pending 1Q gate.
pub fn contended_vacancy() -> Scenario {
    let spec = HardwareSpec::new(1, 8, 1).with_gate_zone_layout(vec![3]);
    let mut c = Circuit::new(5);
    for q in 0..5 {
        c.push(Op::new("h", &[q]));
    }
    let placement = slots(&spec, &[(0, 0), (0, 1), (0, 2), (0, 4), (0, 5)]);
    Scenario { spec, circuit: c, placement }
}
