//! Gate-zone-aware routing cost, target-zone assignment and congestion handling.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::arch::{PosId, PositionGraph, Qubit, QubitMapping, Topology, ZoneLoad, ZONE_LOAD_BETA};
use crate::circuit::{Circuit, DependencyDag, Op};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct HeuristicConfig<T> {
    pub alpha: T,
    pub lookahead_gates: usize,
    pub congestion_patience: u64,
    pub zone_load_beta: u32,
    /// Weight of the second DAG level in planning scores.
    pub lookahead_weight: T,
}

impl<T: Scalar> Default for HeuristicConfig<T> {
    fn default() -> Self {
        HeuristicConfig {
            alpha: T::of_f64(0.3),
            lookahead_gates: 20,
            congestion_patience: 50,
            zone_load_beta: ZONE_LOAD_BETA,
            lookahead_weight: T::of_f64(0.5),
        }
    }
}

/// Cached target zones, per-zone load and per-gate ages.
#[derive(Debug, Clone, Default)]
pub struct ZoneAssignment {
    target: BTreeMap<usize, PosId>,
    assigned_at: BTreeMap<usize, u64>,
    entered_front: BTreeMap<usize, u64>,
    load: ZoneLoad,
}

impl ZoneAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn target(&self, g: usize) -> Option<PosId> {
        self.target.get(&g).copied()
    }

    pub fn load(&self) -> &ZoneLoad {
        &self.load
    }

    /// Cycles since the zone of `g` was (re)assigned.
    pub fn age(&self, g: usize, cycle: u64) -> u64 {
        self.assigned_at.get(&g).map_or(0, |&c| cycle.saturating_sub(c))
    }

    /// Cycles `g` has spent in the front layer.
    pub fn wait(&self, g: usize, cycle: u64) -> u64 {
        self.entered_front.get(&g).map_or(0, |&c| cycle.saturating_sub(c))
    }

    pub fn note_front(&mut self, g: usize, cycle: u64) {
        self.entered_front.entry(g).or_insert(cycle);
    }

    /// Pin a zone, replacing any previous choice.
    pub fn set_target(&mut self, g: usize, zone: PosId, cycle: u64) {
        self.drop_load(g);
        self.target.insert(g, zone);
        self.assigned_at.insert(g, cycle);
        *self.load.entry(zone).or_insert(0) += 1;
    }

    fn drop_load(&mut self, g: usize) {
        if let Some(z) = self.target.remove(&g) {
            if let Some(c) = self.load.get_mut(&z) {
                *c -= 1;
                if *c == 0 {
                    self.load.remove(&z);
                }
            }
        }
    }

    /// Forget a completed gate.
    pub fn release(&mut self, g: usize) {
        self.drop_load(g);
        self.assigned_at.remove(&g);
        self.entered_front.remove(&g);
    }

    /// Cached zone, picked once and re-picked only after `congestion_patience` cycles.
    pub fn assign_target_zone<T: Scalar>(
        &mut self,
        g: usize,
        op: &Op,
        graph: &PositionGraph,
        cfg: &HeuristicConfig<T>,
        cycle: u64,
    ) -> Option<PosId> {
        if let Some(z) = self.target(g) {
            if self.age(g, cycle) <= cfg.congestion_patience {
                return Some(z);
            }
        }
        self.drop_load(g);
        let z = pick_zone(graph.topology(), &graph.mapping, op, &self.load, cfg.zone_load_beta)?;
        self.set_target(g, z, cycle);
        Some(z)
    }
}

/// Zone minimizing summed qubit distance plus `beta * load`, ties to the lowest id.
/// Two-qubit gates only consider zones with an in-trap neighbor slot.
pub fn pick_zone(topo: &Topology, m: &QubitMapping, op: &Op, load: &ZoneLoad, beta: u32) -> Option<PosId> {
    let ps: Vec<PosId> = op.qubits.iter().map(|&q| m.position_of(q)).collect::<Option<_>>()?;
    let two = op.is_two_qubit();
    let mut best: Option<(u64, PosId)> = None;
    for &gz in topo.gate_zones() {
        if two && topo.trap_capacity() < 2 {
            continue;
        }
        let d: u64 = ps.iter().map(|&p| topo.distance(p, gz) as u64).sum();
        let score = d + beta as u64 * *load.get(&gz).unwrap_or(&0) as u64;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, gz));
        }
    }
    best.map(|b| b.1)
}

/// Integer parts of a cost; `value` combines them with the real weights.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostParts {
    pub gz: i64,
    pub inter: i64,
    pub gz_next: i64,
    pub inter_next: i64,
}

impl CostParts {
    pub fn value<T: Scalar>(&self, alpha: T, next_weight: T) -> T {
        let f = |v: i64| T::of_f64(v as f64);
        f(self.gz) + alpha * f(self.inter) + next_weight * (f(self.gz_next) + alpha * f(self.inter_next))
    }

    pub fn add(&mut self, o: CostParts) {
        self.gz += o.gz;
        self.inter += o.inter;
        self.gz_next += o.gz_next;
        self.inter_next += o.inter_next;
    }

    pub fn sub(&mut self, o: CostParts) {
        self.gz -= o.gz;
        self.inter -= o.inter;
        self.gz_next -= o.gz_next;
        self.inter_next -= o.inter_next;
    }
}

/// One gate's contribution.
#[derive(Debug, Clone)]
pub struct Term {
    pub gate: usize,
    pub qubits: Vec<Qubit>,
    pub zone: PosId,
    pub two_qubit: bool,
    /// Second DAG level, weighted by `lookahead_weight`.
    pub next: bool,
}

impl Term {
    fn parts(&self, topo: &Topology, pos: &dyn Fn(Qubit) -> PosId) -> CostParts {
        let gz: i64 = self.qubits.iter().map(|&q| topo.distance(pos(q), self.zone) as i64).sum();
        let inter = if self.two_qubit { topo.distance(pos(self.qubits[0]), pos(self.qubits[1])) as i64 } else { 0 };
        if self.next {
            CostParts { gz_next: gz, inter_next: inter, ..Default::default() }
        } else {
            CostParts { gz, inter, ..Default::default() }
        }
    }
}

/// Routing cost over the front layer: sum of `d_gz + alpha * [2Q] * d_inter` for gates with no engaged
/// qubit. Under persistent congestion only the longest-waiting gates count.
pub fn cost<T: Scalar>(
    graph: &PositionGraph,
    circuit: &Circuit,
    dag: &DependencyDag,
    engaged: &BTreeSet<Qubit>,
    assignment: &ZoneAssignment,
    cfg: &HeuristicConfig<T>,
    cycle: u64,
) -> T {
    let topo = graph.topology();
    let m = &graph.mapping;
    let eligible: Vec<usize> = dag
        .front()
        .iter()
        .copied()
        .filter(|&g| circuit.ops[g].qubits.iter().all(|q| !engaged.contains(q) && m.position_of(*q).is_some()))
        .collect();
    let floor = congestion_floor(&eligible, assignment, cfg, cycle);
    let mut parts = CostParts::default();
    for g in eligible {
        if assignment.wait(g, cycle) < floor {
            continue;
        }
        let op = &circuit.ops[g];
        let zone = match assignment.target(g) {
            Some(z) => z,
            None => match pick_zone(topo, m, op, assignment.load(), cfg.zone_load_beta) {
                Some(z) => z,
                None => continue,
            },
        };
        let t = Term { gate: g, qubits: op.qubits.clone(), zone, two_qubit: op.is_two_qubit(), next: false };
        parts.add(t.parts(topo, &|q| m.position_of(q).expect("placed")));
    }
    parts.value(cfg.alpha, cfg.lookahead_weight)
}

/// Minimum front-layer wait still counted: the oldest blocked gate's wait once it exceeds
/// the patience, else zero.
fn congestion_floor<T>(front: &[usize], a: &ZoneAssignment, cfg: &HeuristicConfig<T>, cycle: u64) -> u64 {
    let oldest = front.iter().map(|&g| a.wait(g, cycle)).max().unwrap_or(0);
    if oldest > cfg.congestion_patience {
        oldest
    } else {
        0
    }
}

/// Per-cycle snapshot of the terms used to score candidate layouts.
#[derive(Debug, Clone)]
pub struct PlanningModel<T> {
    pub terms: Vec<Term>,
    by_qubit: Vec<Vec<usize>>,
    alpha: T,
    next_weight: T,
}

impl<T: Scalar> PlanningModel<T> {
    /// Gather front-layer and next-level gates from the lookahead window, assigning zones.
    /// `in_flight` gates and front gates touching `engaged` qubits contribute nothing; next-level
    /// gates keep their terms, with engaged qubits held in place by the planner.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        graph: &PositionGraph,
        circuit: &Circuit,
        dag: &DependencyDag,
        engaged: &BTreeSet<Qubit>,
        in_flight: &BTreeSet<usize>,
        assignment: &mut ZoneAssignment,
        cfg: &HeuristicConfig<T>,
        cycle: u64,
    ) -> Self {
        let mut window: Vec<(usize, usize)> =
            dag.levels().into_iter().filter(|(g, l)| *l <= 1 && !in_flight.contains(g)).collect();
        window.sort_by_key(|&(g, l)| (l, g));
        window.truncate(cfg.lookahead_gates);
        let m = &graph.mapping;
        let eligible: Vec<(usize, usize)> = window
            .into_iter()
            .filter(|&(g, l)| {
                circuit.ops[g].qubits.iter().all(|q| (l > 0 || !engaged.contains(q)) && m.position_of(*q).is_some())
            })
            .collect();
        let front: Vec<usize> = eligible.iter().filter(|e| e.1 == 0).map(|e| e.0).collect();
        let floor = congestion_floor(&front, assignment, cfg, cycle);
        let mut terms = Vec::new();
        for (g, l) in eligible {
            if assignment.wait(g, cycle) < floor {
                continue;
            }
            let op = &circuit.ops[g];
            if let Some(zone) = assignment.assign_target_zone(g, op, graph, cfg, cycle) {
                terms.push(Term { gate: g, qubits: op.qubits.clone(), zone, two_qubit: op.is_two_qubit(), next: l == 1 });
            }
        }
        Self::from_terms(terms, m.num_qubits(), cfg.alpha, cfg.lookahead_weight)
    }

    pub fn from_terms(terms: Vec<Term>, num_qubits: usize, alpha: T, next_weight: T) -> Self {
        let mut by_qubit = vec![Vec::new(); num_qubits];
        for (i, t) in terms.iter().enumerate() {
            for &q in &t.qubits {
                by_qubit[q].push(i);
            }
        }
        PlanningModel { terms, by_qubit, alpha, next_weight }
    }

    /// Qubits with at least one term; only these are moved by the planner.
    pub fn is_mover(&self, q: Qubit) -> bool {
        !self.by_qubit[q].is_empty()
    }

    /// Qubits of a two-qubit gate in the window; only these cross junctions.
    pub fn is_two_qubit_mover(&self, q: Qubit) -> bool {
        self.by_qubit[q].iter().any(|&i| self.terms[i].two_qubit)
    }

    pub fn movers(&self) -> Vec<Qubit> {
        (0..self.by_qubit.len()).filter(|&q| self.is_mover(q)).collect()
    }

    pub fn parts(&self, topo: &Topology, m: &QubitMapping) -> CostParts {
        let mut p = CostParts::default();
        for t in &self.terms {
            p.add(t.parts(topo, &|q| m.position_of(q).expect("placed")));
        }
        p
    }

    pub fn score(&self, topo: &Topology, m: &QubitMapping) -> T {
        self.parts(topo, m).value(self.alpha, self.next_weight)
    }

    /// Score of `before` minus score of `after`, formed from the integer part differences so
    /// that equal improvements compare equal.
    pub fn gain(&self, topo: &Topology, before: &QubitMapping, after: &QubitMapping) -> T {
        let mut d = self.parts(topo, before);
        d.sub(self.parts(topo, after));
        d.value(self.alpha, self.next_weight)
    }

    /// Improvement (before minus after) from relocating the given qubits, others fixed.
    pub fn delta(&self, topo: &Topology, m: &QubitMapping, moves: &[(Qubit, PosId)]) -> T {
        let mut idx: Vec<usize> = moves.iter().flat_map(|&(q, _)| self.by_qubit[q].iter().copied()).collect();
        idx.sort_unstable();
        idx.dedup();
        let before = |q: Qubit| m.position_of(q).expect("placed");
        let after = |q: Qubit| moves.iter().find(|mv| mv.0 == q).map_or_else(|| before(q), |mv| mv.1);
        let mut d = CostParts::default();
        for i in idx {
            d.add(self.terms[i].parts(topo, &before));
            d.sub(self.terms[i].parts(topo, &after));
        }
        d.value(self.alpha, self.next_weight)
    }
}
