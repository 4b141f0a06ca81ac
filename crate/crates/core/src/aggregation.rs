//! Candidate formation: grouped intra-trap shifts with position reuse, and junction transfers.

use crate::arch::{JunctionId, PosId, PositionGraph, Qubit, QubitMapping, Topology};
use crate::heuristic::PlanningModel;
use crate::isa::{enumerate_jt_classes, moves, Instruction, JTClass, Move, ShiftDir};
use crate::scalar::Scalar;

/// What the planner may touch this cycle.
pub struct PlanInput<'a, T> {
    pub graph: &'a PositionGraph,
    pub model: &'a PlanningModel<T>,
    /// Positions bound to in-flight operations, indexed by position id.
    pub reserved: &'a [bool],
    /// Qubits bound to in-flight operations, indexed by qubit.
    pub engaged: &'a [bool],
}

impl<T: Scalar> PlanInput<'_, T> {
    fn movable(&self, p: PosId) -> Option<Qubit> {
        let q = self.graph.mapping.occupant(p)?;
        (!self.engaged[q] && !self.reserved[p]).then_some(q)
    }

    fn free(&self, p: PosId) -> bool {
        self.graph.mapping.is_vacant(p) && !self.reserved[p]
    }
}

/// Apply an instruction's moves to a bare mapping.
pub fn apply_to_mapping(instr: &Instruction, topo: &Topology, m: &mut QubitMapping) {
    for mv in moves(instr, topo).expect("structurally valid instruction") {
        match mv {
            Move::Shift { from, to } => m.shift(from, to),
            Move::Swap { a, b } => m.exchange(a, b),
        }
    }
}

#[derive(Debug, Clone)]
pub struct S3Plan<T> {
    pub instructions: Vec<Instruction>,
    /// Layout after every selected instruction.
    pub mapping: QubitMapping,
    pub cost_before: T,
    pub cost_after: T,
    pub branches: usize,
    pub contended_slots: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Group {
    trap: usize,
    dir: ShiftDir,
    start: usize,
    len: usize,
}

impl Group {
    fn instruction(&self) -> Instruction {
        Instruction::S3 { trap: self.trap, dir: self.dir, indices: (self.start..self.start + self.len).collect() }
    }

    fn covers(&self, i: usize) -> bool {
        (self.start..self.start + self.len).contains(&i)
    }
}

struct TrapScan<T> {
    label: Vec<Option<ShiftDir>>,
    delta: Vec<[Option<T>; 2]>,
}

fn dir_slot(d: ShiftDir) -> usize {
    match d {
        ShiftDir::Left => 0,
        ShiftDir::Right => 1,
    }
}

fn scan_trap<T: Scalar>(inp: &PlanInput<T>, trap: usize) -> TrapScan<T> {
    let topo = inp.graph.topology();
    let l = topo.trap_capacity();
    let mut label = vec![None; l];
    let mut delta = vec![[None, None]; l];
    for i in 0..l {
        let Some(q) = inp.movable(topo.pos_at(trap, i)) else { continue };
        for d in [ShiftDir::Left, ShiftDir::Right] {
            if let Some(j) = d.step(i).filter(|&j| j < l) {
                let v = if inp.model.is_mover(q) {
                    inp.model.delta(topo, &inp.graph.mapping, &[(q, topo.pos_at(trap, j))])
                } else {
                    T::zero()
                };
                delta[i][dir_slot(d)] = Some(v);
            }
        }
        let [dl, dr] = delta[i];
        let zero = T::zero();
        label[i] = match (dl.filter(|&v| v > zero), dr.filter(|&v| v > zero)) {
            (Some(a), Some(b)) => Some(if a >= b { ShiftDir::Left } else { ShiftDir::Right }),
            (Some(_), None) => Some(ShiftDir::Left),
            (None, Some(_)) => Some(ShiftDir::Right),
            (None, None) => None,
        };
    }
    TrapScan { label, delta }
}

/// Longest run ending next to vacancy `v`, moving in `dir`, whose far end strictly improves.
fn grow<T: Scalar>(inp: &PlanInput<T>, scan: &TrapScan<T>, trap: usize, v: usize, dir: ShiftDir) -> Option<Group> {
    let topo = inp.graph.topology();
    let l = topo.trap_capacity();
    let back = dir.opposite();
    let mut best = None;
    let mut i = v;
    let mut len = 0;
    while let Some(j) = back.step(i).filter(|&j| j < l) {
        let ok = inp.movable(topo.pos_at(trap, j)).is_some()
            && scan.delta[j][dir_slot(dir)].is_some_and(|d| d >= T::zero())
            && scan.label[j] != Some(back);
        if !ok {
            break;
        }
        len += 1;
        if scan.label[j] == Some(dir) {
            best = Some(len);
        }
        i = j;
    }
    best.map(|len| {
        let start = if dir == ShiftDir::Right { v - len } else { v + 1 };
        Group { trap, dir, start, len }
    })
}

/// Grouped intra-trap shifts for one cycle, plus swaps where no vacancy can be reached.
pub fn aggregate_s3<T: Scalar>(inp: &PlanInput<T>) -> S3Plan<T> {
    let topo = inp.graph.topology();
    let m0 = &inp.graph.mapping;
    let l = topo.trap_capacity();
    let model = inp.model;
    let cost_before = model.score(topo, m0);

    let mut scans = Vec::with_capacity(topo.num_traps());
    let mut free_groups = Vec::new();
    let mut contested = Vec::new();
    for trap in 0..topo.num_traps() {
        let scan = scan_trap(inp, trap);
        for v in 0..l {
            if !inp.free(topo.pos_at(trap, v)) {
                continue;
            }
            match (grow(inp, &scan, trap, v, ShiftDir::Right), grow(inp, &scan, trap, v, ShiftDir::Left)) {
                (Some(a), Some(b)) => contested.push((a, b)),
                (Some(a), None) | (None, Some(a)) => free_groups.push(a),
                (None, None) => {}
            }
        }
        scans.push(scan);
    }

    let mut work = m0.clone();
    let mut chosen = free_groups;
    for g in &chosen {
        apply_to_mapping(&g.instruction(), topo, &mut work);
    }
    let mut branches = 0;
    for &(a, b) in &contested {
        // Two exclusive plans; keep the cheaper, then the longer group, then the lower start.
        branches += 2;
        let score = |g: &Group| {
            let mut m = work.clone();
            apply_to_mapping(&g.instruction(), topo, &mut m);
            model.score(topo, &m)
        };
        let (sa, sb) = (score(&a), score(&b));
        let pick_a = sa < sb || (sa == sb && (a.len > b.len || (a.len == b.len && a.start <= b.start)));
        let g = if pick_a { a } else { b };
        apply_to_mapping(&g.instruction(), topo, &mut work);
        chosen.push(g);
    }
    chosen.sort_by_key(|g| (g.trap, g.start));

    let mut instructions: Vec<Instruction> = chosen.iter().map(Group::instruction).collect();
    for (trap, scan) in scans.iter().enumerate() {
        let mut used = vec![false; l];
        for i in 0..l {
            let Some(dir) = scan.label[i] else { continue };
            let Some(n) = dir.step(i).filter(|&n| n < l) else { continue };
            let in_group = |k: usize| chosen.iter().any(|g| g.trap == trap && (g.covers(k) || g.covers(i)));
            if used[i] || used[n] || in_group(n) {
                continue;
            }
            let (pi, pn) = (topo.pos_at(trap, i), topo.pos_at(trap, n));
            let (Some(q), Some(r)) = (inp.movable(pi), inp.movable(pn)) else { continue };
            if model.delta(topo, &work, &[(q, pn), (r, pi)]) > T::zero() {
                let instr = Instruction::IntraSwap { trap, index: i.min(n) };
                apply_to_mapping(&instr, topo, &mut work);
                instructions.push(instr);
                used[i] = true;
                used[n] = true;
            }
        }
    }

    // Keep an instruction only if it lowers the running cost; guards against coupled terms.
    let mut mapping = m0.clone();
    let mut cost_after = cost_before;
    instructions.retain(|instr| {
        let mut m = mapping.clone();
        apply_to_mapping(instr, topo, &mut m);
        let s = model.score(topo, &m);
        if s < cost_after {
            mapping = m;
            cost_after = s;
            true
        } else {
            false
        }
    });
    S3Plan { instructions, mapping, cost_before, cost_after, branches, contended_slots: contested.len() }
}

#[derive(Debug, Clone)]
pub struct JtCandidate<T> {
    pub class: JTClass,
    pub junctions: Vec<JunctionId>,
    pub cost: T,
    /// Cost before minus cost after.
    pub delta: T,
}

impl<T> JtCandidate<T> {
    pub fn instruction(&self) -> Instruction {
        Instruction::JtSimd { class: self.class, junctions: self.junctions.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct JtPlan<T> {
    /// One per class, in enumeration order.
    pub candidates: Vec<JtCandidate<T>>,
    /// Index of the cheapest non-empty improving candidate.
    pub best: Option<usize>,
    /// Layout after the best candidate (unchanged when there is none).
    pub mapping: QubitMapping,
    pub cost_before: T,
    pub cost_after: T,
}

impl<T: Scalar> JtPlan<T> {
    pub fn best_candidate(&self) -> Option<&JtCandidate<T>> {
        self.best.map(|i| &self.candidates[i])
    }
}

/// Score all 18 junction-transfer classes with per-junction move-or-stay decisions.
pub fn aggregate_jt<T: Scalar>(inp: &PlanInput<T>) -> JtPlan<T> {
    let topo = inp.graph.topology();
    let m0 = &inp.graph.mapping;
    let model = inp.model;
    let cost_before = model.score(topo, m0);
    let mut candidates = Vec::with_capacity(18);
    let mut best: Option<(T, usize, QubitMapping)> = None;
    for class in enumerate_jt_classes() {
        let mut junctions = Vec::new();
        let mut used: Vec<PosId> = Vec::new();
        for j in topo.junctions() {
            let (Some(src), Some(dst)) = (topo.leg_position(j.id, class.source_leg()), topo.leg_position(j.id, class.target_leg()))
            else {
                continue;
            };
            if used.contains(&src) || used.contains(&dst) {
                continue;
            }
            let Some(q) = inp.movable(src) else { continue };
            let take = if class.is_shift() {
                model.is_two_qubit_mover(q) && inp.free(dst) && model.delta(topo, m0, &[(q, dst)]) > T::zero()
            } else {
                match inp.movable(dst) {
                    Some(r) => {
                        (model.is_two_qubit_mover(q) || model.is_two_qubit_mover(r))
                            && model.delta(topo, m0, &[(q, dst), (r, src)]) > T::zero()
                    }
                    None => false,
                }
            };
            if take {
                junctions.push(j.id);
                used.extend([src, dst]);
            }
        }
        let cand_instr = Instruction::JtSimd { class, junctions: junctions.clone() };
        let (cost, mapping) = if junctions.is_empty() {
            (cost_before, None)
        } else {
            let mut m = m0.clone();
            apply_to_mapping(&cand_instr, topo, &mut m);
            (model.score(topo, &m), Some(m))
        };
        if let Some(m) = mapping {
            if cost < cost_before && best.as_ref().is_none_or(|(c, _, _)| cost < *c) {
                best = Some((cost, candidates.len(), m));
            }
        }
        candidates.push(JtCandidate { class, junctions, cost, delta: cost_before - cost });
    }
    match best {
        Some((cost_after, i, mapping)) => JtPlan { candidates, best: Some(i), mapping, cost_before, cost_after },
        None => JtPlan { candidates, best: None, mapping: m0.clone(), cost_before, cost_after: cost_before },
    }
}
