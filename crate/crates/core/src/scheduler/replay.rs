//! Independent replay of a schedule against the hardware rules.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::arch::{PosId, PositionGraph, Qubit};
use crate::circuit::Circuit;
use crate::isa::{self, Instruction};

use super::schedule::{Event, Schedule};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ScheduleViolation {
    pub t: u64,
    /// Index into `Schedule::events`, when the violation belongs to one event.
    pub event: Option<usize>,
    pub message: String,
}

impl fmt::Display for ScheduleViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.event {
            Some(i) => write!(f, "t={}us event #{}: {}", self.t, i, self.message),
            None => write!(f, "t={}us: {}", self.t, self.message),
        }
    }
}

/// Replay `schedule` from `initial`, applying each event's effect at its start time.
///
/// Checks ISA legality and latency on the pre-state, exclusive use of slots and qubits,
/// that intra-trap and junction transport never overlap, that every circuit op runs once
/// in per-qubit program order, and that the makespan is the last end time.
pub fn validate_schedule(
    schedule: &Schedule,
    circuit: &Circuit,
    initial: &PositionGraph,
) -> Result<(), Vec<ScheduleViolation>> {
    let topo = initial.topology_arc();
    let table = *topo.op_table();
    let mut graph = initial.clone();
    let mut errs = Vec::new();
    let mut order: Vec<usize> = (0..schedule.events.len()).collect();
    order.sort_by_key(|&i| schedule.events[i].t);

    let mut pos_busy: BTreeMap<PosId, u64> = BTreeMap::new();
    let mut qubit_busy: BTreeMap<Qubit, u64> = BTreeMap::new();
    let (mut intra_until, mut inter_until) = (0u64, 0u64);

    let mut per_qubit: Vec<Vec<usize>> = vec![Vec::new(); circuit.n];
    for (k, op) in circuit.ops.iter().enumerate() {
        for &q in &op.qubits {
            per_qubit[q].push(k);
        }
    }
    let mut cursor = vec![0usize; circuit.n];
    let mut done = vec![false; circuit.ops.len()];

    for &i in &order {
        let e = &schedule.events[i];
        let mut bad = |msg: String| errs.push(ScheduleViolation { t: e.t, event: Some(i), message: msg });
        if e.dur == 0 {
            bad("zero duration".into());
        }
        let Some(instr) = e.instruction(&topo) else {
            bad(format!("cannot decode {:?} event", e.kind));
            continue;
        };
        if let Err(v) = isa::validate(&instr, &graph) {
            let rules: Vec<&str> = v.iter().map(|x| x.rule()).collect();
            bad(format!("illegal {:?}: {}", e.kind, rules.join(", ")));
            continue;
        }
        match isa::instruction_latency(&instr, &graph, &table) {
            Ok(d) if d == e.dur => {}
            Ok(d) => bad(format!("duration {} but the layout implies {}", e.dur, d)),
            Err(err) => bad(err.to_string()),
        }
        let positions = isa::touched_positions(&instr, &graph);
        let qubits = isa::involved_qubits(&instr, &graph);
        let mut listed = e.qubits.clone();
        listed.sort_unstable();
        listed.dedup();
        if listed != qubits {
            bad(format!("lists qubits {:?} but touches {:?}", e.qubits, qubits));
        }
        for &p in &positions {
            if pos_busy.get(&p).is_some_and(|&u| u > e.t) {
                bad(format!("slot {p} already in use"));
            }
            pos_busy.insert(p, e.end());
        }
        for &q in &qubits {
            if qubit_busy.get(&q).is_some_and(|&u| u > e.t) {
                bad(format!("qubit {q} already in use"));
            }
            qubit_busy.insert(q, e.end());
        }
        if e.kind.is_intra_transport() {
            if inter_until > e.t {
                bad("mode exclusivity: intra-trap transport during a junction transfer".into());
            }
            intra_until = intra_until.max(e.end());
        } else if e.kind.is_inter_transport() {
            if intra_until > e.t {
                bad("mode exclusivity: junction transfer during intra-trap transport".into());
            }
            if inter_until > e.t {
                bad("mode exclusivity: overlapping junction transfers".into());
            }
            inter_until = inter_until.max(e.end());
        }
        if e.kind.is_gate() {
            match_gate(e, &instr, circuit, &per_qubit, &mut cursor, &mut done, &mut bad);
        }
        if isa::apply(&instr, &mut graph).is_err() {
            bad("state update failed".into());
        }
    }
    for (k, d) in done.iter().enumerate() {
        if !d {
            errs.push(ScheduleViolation { t: schedule.total_time_us, event: None, message: format!("gate coverage: op {k} never runs") });
        }
    }
    let end = schedule.events.iter().map(Event::end).max().unwrap_or(0);
    if end != schedule.total_time_us {
        errs.push(ScheduleViolation {
            t: schedule.total_time_us,
            event: None,
            message: format!("total time {} but the last event ends at {}", schedule.total_time_us, end),
        });
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// Map a gate event to the next unexecuted op on each of its qubits; they must agree.
fn match_gate(
    e: &Event,
    instr: &Instruction,
    circuit: &Circuit,
    per_qubit: &[Vec<usize>],
    cursor: &mut [usize],
    done: &mut [bool],
    bad: &mut impl FnMut(String),
) {
    if e.qubits.iter().any(|&q| q >= circuit.n) {
        bad(format!("qubit outside the circuit in {:?}", e.qubits));
        return;
    }
    let next: Vec<Option<usize>> = e.qubits.iter().map(|&q| per_qubit[q].get(cursor[q]).copied()).collect();
    let Some(Some(k)) = next.first().copied() else {
        bad("gate coverage: gate event beyond the end of the program".into());
        return;
    };
    if next.iter().any(|&n| n != Some(k)) {
        bad(format!("gate coverage: out of program order on qubits {:?}", e.qubits));
        return;
    }
    let op = &circuit.ops[k];
    let kind_ok = match instr {
        Instruction::Measure { .. } => op.kind == "measure",
        Instruction::Gate1Q { name, .. } | Instruction::Gate2Q { name, .. } => *name == op.kind,
        _ => false,
    };
    if !kind_ok || op.qubits != e.qubits {
        bad(format!("gate coverage: does not match op {k} ({} {:?})", op.kind, op.qubits));
        return;
    }
    for &q in &e.qubits {
        cursor[q] += 1;
    }
    done[k] = true;
}
