//! Simulation-driven compile loop, baseline policies, initial placement and schedule replay.

mod mapping;
mod replay;
mod schedule;

use std::collections::BTreeSet;

use log::{debug, trace};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use mapping::{initial_mapping, MappingStrategy};
pub use replay::{validate_schedule, ScheduleViolation};
pub use schedule::{Event, EventKind, Schedule};

use crate::aggregation::{aggregate_jt, aggregate_s3, PlanInput};
use crate::arch::{GraphMode, PosId, PositionGraph, Qubit};
use crate::circuit::{Circuit, DependencyDag, OpClass};
use crate::heuristic::{HeuristicConfig, PlanningModel, ZoneAssignment};
use crate::isa::{self, Instruction, JTClass, Move};
use crate::metrics::{compute_metrics, Metrics};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Switches to junction transport only when its gain beats `inter_gain_factor` times the
    /// intra gain; advances by the shortest remaining time otherwise.
    #[serde(rename = "fluxtrap")]
    FluxTrap,
    /// Issues junction transport as soon as it is cheaper than the intra plan.
    EagerJt,
    /// Same selection as `FluxTrap`, but every cycle waits for all in-flight work.
    DepthSync,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::FluxTrap, Policy::EagerJt, Policy::DepthSync];

    pub fn name(self) -> &'static str {
        match self {
            Policy::FluxTrap => "fluxtrap",
            Policy::EagerJt => "eager-jt",
            Policy::DepthSync => "depth-sync",
        }
    }

    pub fn parse(s: &str) -> Option<Policy> {
        Policy::ALL.into_iter().find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct SchedulerConfig<T> {
    pub heuristic: HeuristicConfig<T>,
    /// Junction transport must beat this multiple of the intra-trap gain.
    pub inter_gain_factor: T,
    /// Hard stop for the cycle loop.
    pub max_cycles: u64,
}

impl<T: Scalar> Default for SchedulerConfig<T> {
    fn default() -> Self {
        SchedulerConfig { heuristic: HeuristicConfig::default(), inter_gain_factor: T::of_f64(2.0), max_cycles: 1_000_000 }
    }
}

#[derive(Debug, Error)]
pub enum CompileError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("deadlock at t={time_us}us after {cycles} cycles: {detail}")]
    Deadlock { time_us: u64, cycles: u64, detail: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CompileStats {
    pub cycles: u64,
    pub jt_events: u64,
    pub s3_events: u64,
    pub forced_moves: u64,
    pub branches: u64,
    pub contended_slots: u64,
}

#[derive(Debug, Clone)]
pub struct CompileOutput<T> {
    pub schedule: Schedule,
    pub metrics: Metrics<T>,
    pub stats: CompileStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Lane {
    Gate,
    Intra,
    Inter,
}

#[derive(Debug, Clone)]
struct Active {
    end: u64,
    lane: Lane,
    qubits: Vec<Qubit>,
    positions: Vec<PosId>,
    gate: Option<usize>,
}

struct Engine<'a, T> {
    circuit: &'a Circuit,
    graph: PositionGraph,
    dag: DependencyDag,
    zones: ZoneAssignment,
    cfg: &'a SchedulerConfig<T>,
    policy: Policy,
    now: u64,
    cycle: u64,
    active: Vec<Active>,
    events: Vec<Event>,
    engaged: Vec<bool>,
    reserved: Vec<bool>,
    in_flight: BTreeSet<usize>,
    forced: Option<usize>,
    last_gate_cycle: u64,
    stats: CompileStats,
}

/// Compile `circuit` on the layout held by `graph` under `policy`.
///
/// The loop is deterministic; `seed` is accepted for interface symmetry with placement and
/// does not influence scheduling.
pub fn compile<T: Scalar>(
    circuit: &Circuit,
    graph: &PositionGraph,
    policy: Policy,
    cfg: &SchedulerConfig<T>,
    _seed: u64,
) -> Result<CompileOutput<T>, CompileError> {
    circuit.validate().map_err(|e| CompileError::Input(e.to_string()))?;
    let topo = graph.topology();
    if graph.mapping.num_qubits() < circuit.n {
        return Err(CompileError::Input("layout has fewer qubits than the circuit".into()));
    }
    if let Some(q) = (0..circuit.n).find(|&q| graph.mapping.position_of(q).is_none()) {
        return Err(CompileError::Input(format!("qubit {q} is not placed")));
    }
    if !graph.mapping.is_consistent() {
        return Err(CompileError::Input("inconsistent initial layout".into()));
    }
    if circuit.count(OpClass::TwoQubit) > 0 && topo.trap_capacity() < 2 {
        return Err(CompileError::Input("two-qubit gates need traps with at least two slots".into()));
    }
    let mut g = graph.clone();
    g.set_mode(GraphMode::IntraMode);
    let mut e = Engine {
        circuit,
        dag: DependencyDag::build(circuit),
        zones: ZoneAssignment::new(),
        engaged: vec![false; g.mapping.num_qubits()],
        reserved: vec![false; topo.num_positions()],
        graph: g,
        cfg,
        policy,
        now: 0,
        cycle: 0,
        active: Vec::new(),
        events: Vec::new(),
        in_flight: BTreeSet::new(),
        forced: None,
        last_gate_cycle: 0,
        stats: CompileStats::default(),
    };
    e.run()?;
    let total = e.events.iter().map(Event::end).max().unwrap_or(0);
    let schedule = Schedule { total_time_us: total, events: e.events };
    let metrics = compute_metrics(&schedule, circuit.n, graph.topology().op_table(), graph.topology().spec().coherence_time_s);
    Ok(CompileOutput { schedule, metrics, stats: e.stats })
}

impl<T: Scalar> Engine<'_, T> {
    fn run(&mut self) -> Result<(), CompileError> {
        for &g in self.dag.front() {
            self.zones.note_front(g, 0);
        }
        while self.dag.remaining() > 0 || !self.active.is_empty() {
            self.cycle += 1;
            self.stats.cycles = self.cycle;
            if self.cycle > self.cfg.max_cycles {
                return Err(self.deadlock("cycle limit reached"));
            }
            let started = self.start_gates(&[]);
            if self.pending_gates() == 0 {
                self.advance_step();
                continue;
            }
            if self.forced.is_none()
                && self.cycle.saturating_sub(self.last_gate_cycle) > self.cfg.heuristic.congestion_patience
            {
                self.forced = self.oldest_pending();
                debug!("t={} no gate for {} cycles, forcing gate {:?}", self.now, self.cycle - self.last_gate_cycle, self.forced);
            }
            if let Some(fg) = self.forced {
                self.forced_cycle(fg)?;
                continue;
            }
            if !self.plan_cycle() {
                if self.active.is_empty() && started == 0 {
                    self.forced = self.oldest_pending();
                    if self.forced.is_none() {
                        return Err(self.deadlock("no pending gate can be routed"));
                    }
                    debug!("t={} stuck, forcing gate {:?}", self.now, self.forced);
                } else {
                    self.advance_step();
                }
            }
        }
        Ok(())
    }

    fn deadlock(&self, why: &str) -> CompileError {
        let front: Vec<String> = self
            .dag
            .front()
            .iter()
            .map(|&g| {
                let op = &self.circuit.ops[g];
                let ps: Vec<String> =
                    op.qubits.iter().map(|&q| format!("q{q}@{:?}", self.graph.mapping.position_of(q))).collect();
                format!("{}#{g}[{}]", op.kind, ps.join(","))
            })
            .collect();
        CompileError::Deadlock {
            time_us: self.now,
            cycles: self.cycle,
            detail: format!("{why}; active={} front={}", self.active.len(), front.join(" ")),
        }
    }

    fn pending_gates(&self) -> usize {
        self.dag.front().iter().filter(|g| !self.in_flight.contains(g)).count()
    }

    /// Longest-waiting front gate that has not started, ties to the lowest index.
    fn oldest_pending(&self) -> Option<usize> {
        self.dag
            .front()
            .iter()
            .copied()
            .filter(|g| !self.in_flight.contains(g))
            .max_by_key(|&g| (self.zones.wait(g, self.cycle), std::cmp::Reverse(g)))
    }

    fn has_lane(&self, lane: Lane) -> bool {
        self.active.iter().any(|a| a.lane == lane)
    }

    /// One planning cycle. Returns false when nothing was issued.
    fn plan_cycle(&mut self) -> bool {
        let engaged: BTreeSet<Qubit> = (0..self.engaged.len()).filter(|&q| self.engaged[q]).collect();
        let model = PlanningModel::build(
            &self.graph,
            self.circuit,
            &self.dag,
            &engaged,
            &self.in_flight,
            &mut self.zones,
            &self.cfg.heuristic,
            self.cycle,
        );
        if model.terms.is_empty() {
            return false;
        }
        let inp = PlanInput { graph: &self.graph, model: &model, reserved: &self.reserved, engaged: &self.engaged };
        let intra = if self.has_lane(Lane::Inter) { None } else { Some(aggregate_s3(&inp)) };
        let inter = aggregate_jt(&inp);
        let topo = self.graph.topology();
        let gain_intra = match &intra {
            Some(p) => {
                self.stats.branches += p.branches as u64;
                self.stats.contended_slots += p.contended_slots as u64;
                model.gain(topo, &self.graph.mapping, &p.mapping)
            }
            None => T::zero(),
        };
        let gain_inter = model.gain(topo, &self.graph.mapping, &inter.mapping);
        let intra_instrs = intra.map(|p| p.instructions).unwrap_or_default();
        let best = inter.best_candidate().map(|cand| cand.instruction());
        let switch = best.is_some()
            && match self.policy {
                Policy::FluxTrap | Policy::DepthSync => gain_inter > self.cfg.inter_gain_factor * gain_intra,
                Policy::EagerJt => gain_inter > gain_intra,
            };
        trace!(
            "t={} cycle={} gain intra={} inter={} switch={}",
            self.now,
            self.cycle,
            gain_intra.as_f64(),
            gain_inter.as_f64(),
            switch
        );
        if switch {
            self.run_junction_transfer(best.expect("candidate present"));
            true
        } else if !intra_instrs.is_empty() {
            for instr in intra_instrs {
                self.start_transport(instr, Lane::Intra);
            }
            self.advance_step();
            true
        } else {
            false
        }
    }

    /// Drain intra transport, issue the transfer, and run until it completes.
    fn run_junction_transfer(&mut self, instr: Instruction) {
        let mut hold = vec![false; self.engaged.len()];
        for q in isa::involved_qubits(&instr, &self.graph) {
            hold[q] = true;
        }
        let drain_all = self.policy == Policy::DepthSync;
        while self.has_lane(Lane::Intra) || (drain_all && !self.active.is_empty()) {
            let t = self.next_completion().expect("active op");
            self.complete_until(t);
            if !drain_all {
                self.start_gates(&hold);
            }
        }
        self.start_transport(instr, Lane::Inter);
        while self.has_lane(Lane::Inter) || (drain_all && !self.active.is_empty()) {
            let t = if drain_all { self.last_completion() } else { self.next_completion() }.expect("active op");
            self.complete_until(t);
            if !drain_all {
                self.start_gates(&[]);
            }
        }
    }

    /// Move one qubit of `g` one step closer to an executable placement.
    fn forced_cycle(&mut self, g: usize) -> Result<(), CompileError> {
        if self.in_flight.contains(&g) || self.dag.is_done(g) {
            self.forced = None;
            return Ok(());
        }
        match forced_move(&self.graph, self.circuit, g) {
            Some(instr) => {
                let qs = isa::involved_qubits(&instr, &self.graph);
                let ps = isa::touched_positions(&instr, &self.graph);
                let inter = matches!(instr, Instruction::JtSimd { .. });
                let blocked = qs.iter().any(|&q| self.engaged[q])
                    || ps.iter().any(|&p| self.reserved[p])
                    || self.has_lane(if inter { Lane::Intra } else { Lane::Inter });
                if blocked {
                    if self.active.is_empty() {
                        return Err(self.deadlock("forced move blocked with nothing in flight"));
                    }
                    self.advance_step();
                    return Ok(());
                }
                self.stats.forced_moves += 1;
                if inter {
                    self.run_junction_transfer(instr);
                } else {
                    self.start_transport(instr, Lane::Intra);
                    self.advance_step();
                }
                Ok(())
            }
            None => {
                // Already executable; waiting on in-flight work.
                if self.active.is_empty() {
                    return Err(self.deadlock("forced gate executable but not started"));
                }
                self.advance_step();
                Ok(())
            }
        }
    }

    fn next_completion(&self) -> Option<u64> {
        self.active.iter().map(|a| a.end).min()
    }

    fn last_completion(&self) -> Option<u64> {
        self.active.iter().map(|a| a.end).max()
    }

    /// SRT for the time-sliced policies, LRT for depth synchronization.
    fn advance_step(&mut self) {
        let t = if self.policy == Policy::DepthSync { self.last_completion() } else { self.next_completion() };
        if let Some(t) = t {
            self.complete_until(t);
        }
    }

    fn complete_until(&mut self, t: u64) {
        debug_assert!(t >= self.now);
        self.now = t;
        let (done, rest): (Vec<Active>, Vec<Active>) = self.active.drain(..).partition(|a| a.end <= t);
        self.active = rest;
        for a in done {
            for &q in &a.qubits {
                self.engaged[q] = false;
            }
            for &p in &a.positions {
                self.reserved[p] = false;
            }
            if let Some(g) = a.gate {
                self.in_flight.remove(&g);
                self.zones.release(g);
                self.dag.complete_gate(g).expect("completed gate was in the front layer");
                for &s in self.dag.succs(g) {
                    if self.dag.front().contains(&s) {
                        self.zones.note_front(s, self.cycle);
                    }
                }
            }
        }
        if self.active.iter().all(|a| a.lane == Lane::Gate) {
            self.graph.set_mode(GraphMode::IntraMode);
        }
    }

    /// Start every front gate whose qubits are idle and placed executably.
    fn start_gates(&mut self, hold: &[bool]) -> usize {
        let table = *self.graph.topology().op_table();
        let front: Vec<usize> = self.dag.front().iter().copied().filter(|g| !self.in_flight.contains(g)).collect();
        let mut n = 0;
        for g in front {
            let op = &self.circuit.ops[g];
            if op.qubits.iter().any(|&q| self.engaged[q] || hold.get(q).copied().unwrap_or(false)) {
                continue;
            }
            let instr = match op.class().expect("validated circuit") {
                OpClass::OneQubit => Instruction::Gate1Q { qubit: op.qubits[0], name: op.kind.clone() },
                OpClass::Measure => Instruction::Measure { qubit: op.qubits[0] },
                OpClass::TwoQubit => Instruction::Gate2Q { q1: op.qubits[0], q2: op.qubits[1], name: op.kind.clone() },
            };
            if isa::validate(&instr, &self.graph).is_err() {
                continue;
            }
            let dur = isa::instruction_latency(&instr, &self.graph, &table).expect("validated gate");
            let positions: Vec<PosId> =
                op.qubits.iter().map(|&q| self.graph.mapping.position_of(q).expect("placed")).collect();
            let kind = match instr {
                Instruction::Gate1Q { .. } => EventKind::Gate1q,
                Instruction::Measure { .. } => EventKind::Measure,
                _ => EventKind::Gate2q,
            };
            let name = (kind != EventKind::Measure).then(|| op.kind.clone());
            self.events.push(Event {
                t: self.now,
                dur,
                kind,
                qubits: op.qubits.clone(),
                positions: positions.clone(),
                jt_class: None,
                trap: None,
                dir: None,
                name,
            });
            for &q in &op.qubits {
                self.engaged[q] = true;
            }
            for &p in &positions {
                self.reserved[p] = true;
            }
            self.active.push(Active { end: self.now + dur, lane: Lane::Gate, qubits: op.qubits.clone(), positions, gate: Some(g) });
            self.in_flight.insert(g);
            self.last_gate_cycle = self.cycle;
            if self.forced == Some(g) {
                self.forced = None;
            }
            n += 1;
        }
        n
    }

    fn start_transport(&mut self, instr: Instruction, lane: Lane) {
        let topo = self.graph.topology_arc();
        let table = *topo.op_table();
        debug_assert!(isa::validate(&instr, &self.graph).is_ok(), "{instr:?}");
        let dur = isa::instruction_latency(&instr, &self.graph, &table).expect("transport latency");
        let mv = isa::moves(&instr, &topo).expect("structurally valid");
        let mut qubits = Vec::new();
        let mut positions = Vec::new();
        for m in &mv {
            match *m {
                Move::Shift { from, to } => {
                    qubits.push(self.graph.mapping.occupant(from).expect("source occupied"));
                    positions.extend([from, to]);
                }
                Move::Swap { a, b } => {
                    qubits.extend([a, b].map(|p| self.graph.mapping.occupant(p).expect("swap ion")));
                    positions.extend([a, b]);
                }
            }
        }
        let (kind, event_positions, trap, dir, class): (EventKind, Vec<PosId>, _, _, Option<JTClass>) = match &instr {
            Instruction::IntraShift { trap, .. } => (EventKind::IntraShift, positions.clone(), Some(*trap), None, None),
            Instruction::IntraSwap { trap, .. } => (EventKind::IntraSwap, positions.clone(), Some(*trap), None, None),
            Instruction::S3 { trap, dir, indices } => {
                let src: Vec<PosId> = indices.iter().map(|&i| topo.pos_at(*trap, i)).collect();
                (EventKind::S3, src, Some(*trap), Some(*dir), None)
            }
            Instruction::JtSimd { class, .. } => {
                let k = if class.is_shift() { EventKind::JtShift } else { EventKind::JtSwap };
                (k, positions.clone(), None, None, Some(*class))
            }
            _ => unreachable!("gates are started by start_gates"),
        };
        let event_qubits: Vec<Qubit> = if kind == EventKind::S3 {
            event_positions.iter().map(|&p| self.graph.mapping.occupant(p).expect("run occupied")).collect()
        } else {
            qubits.clone()
        };
        self.events.push(Event {
            t: self.now,
            dur,
            kind,
            qubits: event_qubits,
            positions: event_positions,
            jt_class: class,
            trap,
            dir,
            name: None,
        });
        match kind {
            EventKind::S3 => self.stats.s3_events += 1,
            EventKind::JtShift | EventKind::JtSwap => self.stats.jt_events += 1,
            _ => {}
        }
        isa::apply(&instr, &mut self.graph).expect("validated transport");
        for &q in &qubits {
            self.engaged[q] = true;
        }
        positions.sort_unstable();
        positions.dedup();
        for &p in &positions {
            self.reserved[p] = true;
        }
        self.active.push(Active { end: self.now + dur, lane, qubits, positions, gate: None });
    }
}

/// Next hop from `from` toward `to` on the union graph, lowest position id first.
fn next_hop(graph: &PositionGraph, from: PosId, to: PosId) -> PosId {
    let topo = graph.topology();
    let d = topo.distance(from, to);
    topo.union_neighbors(from)
        .into_iter()
        .find(|&n| topo.distance(n, to) + 1 == d)
        .expect("a neighbor lies on a shortest path")
}

/// Scalar instruction moving the ion at `from` to the neighboring slot `to`, displacing
/// any occupant.
fn step_instruction(graph: &PositionGraph, from: PosId, to: PosId) -> Instruction {
    let topo = graph.topology();
    let (a, b) = (topo.position(from), topo.position(to));
    let vacant = graph.mapping.is_vacant(to);
    if a.trap == b.trap && a.index.abs_diff(b.index) == 1 {
        return if vacant {
            Instruction::IntraShift { trap: a.trap, src: a.index, dst: b.index }
        } else {
            Instruction::IntraSwap { trap: a.trap, index: a.index.min(b.index) }
        };
    }
    for &(j, la) in topo.attachments(from) {
        for &(j2, lb) in topo.attachments(to) {
            if j == j2 && la != lb {
                let class = if vacant { JTClass::Shift { from: la, to: lb } } else { JTClass::swap(la, lb) };
                return Instruction::JtSimd { class, junctions: vec![j] };
            }
        }
    }
    unreachable!("positions {from} and {to} are not adjacent")
}

/// One step that strictly lowers the distance of gate `g` from an executable placement.
/// `None` when it is already executable.
fn forced_move(graph: &PositionGraph, circuit: &Circuit, g: usize) -> Option<Instruction> {
    let topo = graph.topology();
    let m = &graph.mapping;
    let op = &circuit.ops[g];
    if !op.is_two_qubit() {
        let p = m.position_of(op.qubits[0])?;
        if topo.is_gate_zone(p) {
            return None;
        }
        let z = *topo.gate_zones().iter().min_by_key(|&&z| (topo.distance(p, z), z))?;
        return Some(step_instruction(graph, p, next_hop(graph, p, z)));
    }
    let (p1, p2) = (m.position_of(op.qubits[0])?, m.position_of(op.qubits[1])?);
    // Best (zone, partner slot) pair and which qubit goes to the zone.
    let mut best: Option<(u32, PosId, PosId, bool)> = None;
    for &a in topo.gate_zones() {
        for b in topo.intra_neighbors(a) {
            for flip in [false, true] {
                let (x, y) = if flip { (p2, p1) } else { (p1, p2) };
                let phi = topo.distance(x, a) + topo.distance(y, b);
                if best.is_none_or(|bb| phi < bb.0) {
                    best = Some((phi, a, b, flip));
                }
            }
        }
    }
    let (phi, a, b, flip) = best?;
    if phi == 0 {
        return None;
    }
    let (px, py) = if flip { (p2, p1) } else { (p1, p2) };
    let instr = if px != a {
        let n = next_hop(graph, px, a);
        if n != py {
            step_instruction(graph, px, n)
        } else if py != b {
            let k = next_hop(graph, py, b);
            if k != px {
                step_instruction(graph, py, k)
            } else {
                step_instruction(graph, px, py)
            }
        } else {
            step_instruction(graph, py, a)
        }
    } else {
        let k = next_hop(graph, py, b);
        if k != a {
            step_instruction(graph, py, k)
        } else {
            step_instruction(graph, px, b)
        }
    };
    Some(instr)
}
