//! Instruction set: gates, scalar transports, grouped shifts and junction transfers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::{JunctionId, Leg, PositionGraph, PosId, Qubit, Topology, TrapId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpCost {
    pub latency_us: u64,
    pub fidelity: f64,
}

const fn cost(latency_us: u64, fidelity: f64) -> OpCost {
    OpCost { latency_us, fidelity }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpTable {
    pub gate1q: OpCost,
    pub gate2q: OpCost,
    pub measure: OpCost,
    pub intra_shift: OpCost,
    pub intra_swap: OpCost,
    pub inter_shift: OpCost,
    pub inter_swap: OpCost,
}

impl Default for OpTable {
    fn default() -> Self {
        OpTable {
            gate1q: cost(5, 0.999975),
            gate2q: cost(25, 0.9982),
            measure: cost(120, 0.9984),
            intra_shift: cost(58, 0.99978),
            intra_swap: cost(200, 0.99978),
            inter_shift: cost(250, 0.99956),
            inter_swap: cost(500, 0.99912),
        }
    }
}

impl OpTable {
    pub fn entries(&self) -> [(&'static str, OpCost); 7] {
        [
            ("gate1q", self.gate1q),
            ("gate2q", self.gate2q),
            ("measure", self.measure),
            ("intra_shift", self.intra_shift),
            ("intra_swap", self.intra_swap),
            ("inter_shift", self.inter_shift),
            ("inter_swap", self.inter_swap),
        ]
    }

    pub fn validate(&self) -> Result<(), IsaError> {
        for (name, c) in self.entries() {
            if c.latency_us == 0 {
                return Err(IsaError::BadTable(format!("{name} latency must be positive")));
            }
            if !(c.fidelity > 0.0 && c.fidelity <= 1.0) {
                return Err(IsaError::BadTable(format!("{name} fidelity must lie in (0, 1]")));
            }
        }
        Ok(())
    }

    /// Latency of a 2Q gate between adjacent ions: shift in, gate, shift out.
    pub fn gate2q_adjacent_latency(&self) -> u64 {
        2 * self.intra_shift.latency_us + self.gate2q.latency_us
    }
}

/// Partial table used by hardware files; absent rows keep their defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OpTableOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate1q: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate2q: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_shift: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intra_swap: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_shift: Option<OpCost>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inter_swap: Option<OpCost>,
}

impl OpTableOverride {
    pub fn apply(&self, base: OpTable) -> OpTable {
        OpTable {
            gate1q: self.gate1q.unwrap_or(base.gate1q),
            gate2q: self.gate2q.unwrap_or(base.gate2q),
            measure: self.measure.unwrap_or(base.measure),
            intra_shift: self.intra_shift.unwrap_or(base.intra_shift),
            intra_swap: self.intra_swap.unwrap_or(base.intra_swap),
            inter_shift: self.inter_shift.unwrap_or(base.inter_shift),
            inter_swap: self.inter_swap.unwrap_or(base.inter_swap),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IsaError {
    #[error("op table: {0}")]
    BadTable(String),
    #[error("unknown jt class {0:?}")]
    UnknownClass(String),
    #[error("illegal instruction: {0:?}")]
    Illegal(Vec<Violation>),
}

/// Global junction transfer class: one transport type along one leg pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum JTClass {
    Shift { from: Leg, to: Leg },
    /// Unordered pair stored with `a < b`.
    Swap { a: Leg, b: Leg },
}

impl JTClass {
    pub fn swap(x: Leg, y: Leg) -> JTClass {
        JTClass::Swap { a: x.min(y), b: x.max(y) }
    }

    pub fn is_shift(self) -> bool {
        matches!(self, JTClass::Shift { .. })
    }

    /// Leg pairs along which ions move under this class.
    pub fn directed_pairs(self) -> Vec<(Leg, Leg)> {
        match self {
            JTClass::Shift { from, to } => vec![(from, to)],
            JTClass::Swap { a, b } => vec![(a, b), (b, a)],
        }
    }

    pub fn source_leg(self) -> Leg {
        match self {
            JTClass::Shift { from, .. } => from,
            JTClass::Swap { a, .. } => a,
        }
    }

    pub fn target_leg(self) -> Leg {
        match self {
            JTClass::Shift { to, .. } => to,
            JTClass::Swap { b, .. } => b,
        }
    }

    pub fn label(self) -> String {
        match self {
            JTClass::Shift { from, to } => format!("shift:{}>{}", from.letter(), to.letter()),
            JTClass::Swap { a, b } => format!("swap:{}-{}", a.letter(), b.letter()),
        }
    }

    pub fn parse(s: &str) -> Result<JTClass, IsaError> {
        let bad = || IsaError::UnknownClass(s.to_string());
        let (kind, legs) = s.split_once(':').ok_or_else(bad)?;
        let chars: Vec<char> = legs.chars().collect();
        if chars.len() != 3 {
            return Err(bad());
        }
        let x = Leg::from_letter(chars[0]).ok_or_else(bad)?;
        let y = Leg::from_letter(chars[2]).ok_or_else(bad)?;
        if x == y {
            return Err(bad());
        }
        match (kind, chars[1]) {
            ("shift", '>') => Ok(JTClass::Shift { from: x, to: y }),
            ("swap", '-') if x < y => Ok(JTClass::Swap { a: x, b: y }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for JTClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl From<JTClass> for String {
    fn from(c: JTClass) -> String {
        c.label()
    }
}

impl TryFrom<String> for JTClass {
    type Error = IsaError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        JTClass::parse(&s)
    }
}

/// The 12 shift classes ordered by (from, to), then the 6 swap classes.
pub fn enumerate_jt_classes() -> Vec<JTClass> {
    let mut out = Vec::with_capacity(18);
    for from in Leg::ALL {
        for to in Leg::ALL {
            if from != to {
                out.push(JTClass::Shift { from, to });
            }
        }
    }
    for (i, &a) in Leg::ALL.iter().enumerate() {
        for &b in &Leg::ALL[i + 1..] {
            out.push(JTClass::Swap { a, b });
        }
    }
    out
}

/// Direction of an intra-trap shift; `Left` moves toward index 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftDir {
    Left,
    Right,
}

impl ShiftDir {
    pub fn step(self, index: usize) -> Option<usize> {
        match self {
            ShiftDir::Left => index.checked_sub(1),
            ShiftDir::Right => Some(index + 1),
        }
    }

    pub fn opposite(self) -> ShiftDir {
        match self {
            ShiftDir::Left => ShiftDir::Right,
            ShiftDir::Right => ShiftDir::Left,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Gate1Q { qubit: Qubit, name: String },
    Gate2Q { q1: Qubit, q2: Qubit, name: String },
    Measure { qubit: Qubit },
    IntraShift { trap: TrapId, src: usize, dst: usize },
    /// Exchanges the ions at `index` and `index + 1`.
    IntraSwap { trap: TrapId, index: usize },
    /// Contiguous run of trap indices, ascending, all shifted one step.
    S3 { trap: TrapId, dir: ShiftDir, indices: Vec<usize> },
    /// Participating junctions, ascending.
    JtSimd { class: JTClass, junctions: Vec<JunctionId> },
}

/// How a 2Q gate is realized on its current placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gate2QForm {
    /// Both ions sit in adjacent gate-zone slots.
    CoLocated,
    /// One ion is in a gate zone and its partner is shifted in and back out.
    Adjacent,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("destination occupied")]
    DestinationOccupied(PosId),
    #[error("source empty")]
    SourceEmpty(PosId),
    #[error("not contiguous")]
    NotContiguous,
    #[error("outside trap")]
    OutsideTrap,
    #[error("swap ion missing")]
    SwapIonMissing(PosId),
    #[error("not in gate zone")]
    NotInGateZone(Qubit),
    #[error("qubits not adjacent in one trap")]
    NotAdjacent,
    #[error("qubit not placed")]
    Unplaced(Qubit),
    #[error("same qubit twice")]
    RepeatedQubit,
    #[error("empty instruction")]
    Empty,
    #[error("participant not at source leg end")]
    NotAtSourceLeg(JunctionId),
    #[error("junction leg missing")]
    MissingLeg(JunctionId),
    #[error("duplicate participant")]
    DuplicateParticipant(JunctionId),
    #[error("no such trap or junction")]
    UnknownLocation,
    #[error("participants share a position")]
    OverlappingParticipants,
}

impl Violation {
    /// Stable rule identifier.
    pub fn rule(&self) -> &'static str {
        match self {
            Violation::DestinationOccupied(_) => "destination occupied",
            Violation::SourceEmpty(_) => "source empty",
            Violation::NotContiguous => "not contiguous",
            Violation::OutsideTrap => "outside trap",
            Violation::SwapIonMissing(_) => "swap ion missing",
            Violation::NotInGateZone(_) => "not in gate zone",
            Violation::NotAdjacent => "not adjacent",
            Violation::Unplaced(_) => "qubit not placed",
            Violation::RepeatedQubit => "repeated qubit",
            Violation::Empty => "empty instruction",
            Violation::NotAtSourceLeg(_) => "not at source leg",
            Violation::MissingLeg(_) => "missing leg",
            Violation::DuplicateParticipant(_) => "duplicate participant",
            Violation::UnknownLocation => "unknown location",
            Violation::OverlappingParticipants => "overlapping participants",
        }
    }
}

/// Form a 2Q gate would take on the current layout, if it is executable at all.
pub fn gate2q_form(graph: &PositionGraph, q1: Qubit, q2: Qubit) -> Option<Gate2QForm> {
    let topo = graph.topology();
    let p1 = graph.mapping.position_of(q1)?;
    let p2 = graph.mapping.position_of(q2)?;
    let (a, b) = (topo.position(p1), topo.position(p2));
    if q1 == q2 || a.trap != b.trap || a.index.abs_diff(b.index) != 1 {
        return None;
    }
    match (topo.is_gate_zone(p1), topo.is_gate_zone(p2)) {
        (true, true) => Some(Gate2QForm::CoLocated),
        (true, false) | (false, true) => Some(Gate2QForm::Adjacent),
        (false, false) => None,
    }
}

/// Per-move transport primitive an instruction decomposes into.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Shift { from: PosId, to: PosId },
    Swap { a: PosId, b: PosId },
}

fn trap_pos(topo: &Topology, trap: TrapId, index: usize) -> Option<PosId> {
    (trap < topo.num_traps() && index < topo.trap_capacity()).then(|| topo.pos_at(trap, index))
}

/// Elementary moves in execution order (S3 head first). Structural errors only.
pub fn moves(instr: &Instruction, topo: &Topology) -> Result<Vec<Move>, Vec<Violation>> {
    match instr {
        Instruction::Gate1Q { .. } | Instruction::Gate2Q { .. } | Instruction::Measure { .. } => Ok(vec![]),
        Instruction::IntraShift { trap, src, dst } => {
            if src.abs_diff(*dst) != 1 {
                return Err(vec![Violation::NotContiguous]);
            }
            match (trap_pos(topo, *trap, *src), trap_pos(topo, *trap, *dst)) {
                (Some(from), Some(to)) => Ok(vec![Move::Shift { from, to }]),
                _ => Err(vec![Violation::OutsideTrap]),
            }
        }
        Instruction::IntraSwap { trap, index } => {
            match (trap_pos(topo, *trap, *index), trap_pos(topo, *trap, index + 1)) {
                (Some(a), Some(b)) => Ok(vec![Move::Swap { a, b }]),
                _ => Err(vec![Violation::OutsideTrap]),
            }
        }
        Instruction::S3 { trap, dir, indices } => {
            if indices.is_empty() {
                return Err(vec![Violation::Empty]);
            }
            if indices.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(vec![Violation::NotContiguous]);
            }
            let mut order = indices.clone();
            if *dir == ShiftDir::Right {
                order.reverse();
            }
            let mut out = Vec::with_capacity(order.len());
            for i in order {
                let from = trap_pos(topo, *trap, i);
                let to = dir.step(i).and_then(|j| trap_pos(topo, *trap, j));
                match (from, to) {
                    (Some(from), Some(to)) => out.push(Move::Shift { from, to }),
                    _ => return Err(vec![Violation::OutsideTrap]),
                }
            }
            Ok(out)
        }
        Instruction::JtSimd { class, junctions } => {
            if junctions.is_empty() {
                return Err(vec![Violation::Empty]);
            }
            let mut errs = Vec::new();
            let mut out = Vec::with_capacity(junctions.len());
            for (k, &j) in junctions.iter().enumerate() {
                if j >= topo.junctions().len() {
                    errs.push(Violation::UnknownLocation);
                    continue;
                }
                if junctions[..k].contains(&j) {
                    errs.push(Violation::DuplicateParticipant(j));
                    continue;
                }
                let src = topo.leg_position(j, class.source_leg());
                let dst = topo.leg_position(j, class.target_leg());
                match (src, dst) {
                    (Some(a), Some(b)) if class.is_shift() => out.push(Move::Shift { from: a, to: b }),
                    (Some(a), Some(b)) => out.push(Move::Swap { a, b }),
                    _ => errs.push(Violation::MissingLeg(j)),
                }
            }
            let mut seen: Vec<PosId> = Vec::new();
            for mo in &out {
                let (x, y) = match *mo {
                    Move::Shift { from, to } => (from, to),
                    Move::Swap { a, b } => (a, b),
                };
                if seen.contains(&x) || seen.contains(&y) {
                    errs.push(Violation::OverlappingParticipants);
                    break;
                }
                seen.extend([x, y]);
            }
            if errs.is_empty() {
                Ok(out)
            } else {
                Err(errs)
            }
        }
    }
}

/// Check legality against the current layout without mutating it.
pub fn validate(instr: &Instruction, graph: &PositionGraph) -> Result<(), Vec<Violation>> {
    let topo = graph.topology();
    let m = &graph.mapping;
    let mut errs = Vec::new();
    let placed = |q: Qubit, errs: &mut Vec<Violation>| {
        let p = m.position_of(q);
        if p.is_none() {
            errs.push(Violation::Unplaced(q));
        }
        p
    };
    match instr {
        Instruction::Gate1Q { qubit, .. } | Instruction::Measure { qubit } => {
            if let Some(p) = placed(*qubit, &mut errs) {
                if !topo.is_gate_zone(p) {
                    errs.push(Violation::NotInGateZone(*qubit));
                }
            }
        }
        Instruction::Gate2Q { q1, q2, .. } => {
            if q1 == q2 {
                errs.push(Violation::RepeatedQubit);
            } else {
                let p1 = placed(*q1, &mut errs);
                let p2 = placed(*q2, &mut errs);
                if let (Some(p1), Some(p2)) = (p1, p2) {
                    let (a, b) = (topo.position(p1), topo.position(p2));
                    if a.trap != b.trap || a.index.abs_diff(b.index) != 1 {
                        errs.push(Violation::NotAdjacent);
                    } else if !topo.is_gate_zone(p1) && !topo.is_gate_zone(p2) {
                        errs.push(Violation::NotInGateZone(*q1));
                    }
                }
            }
        }
        _ => {
            let mv = moves(instr, topo)?;
            let jt = matches!(instr, Instruction::JtSimd { .. });
            // Slots freed earlier in the same instruction may be reused (position reuse).
            let mut sim = m.clone();
            for (k, mo) in mv.iter().enumerate() {
                match *mo {
                    Move::Shift { from, to } => {
                        if sim.is_vacant(from) {
                            errs.push(if jt {
                                Violation::NotAtSourceLeg(participant(instr, k))
                            } else {
                                Violation::SourceEmpty(from)
                            });
                        } else if !sim.is_vacant(to) || (jt && !m.is_vacant(to)) {
                            errs.push(Violation::DestinationOccupied(to));
                        } else {
                            sim.shift(from, to);
                        }
                    }
                    Move::Swap { a, b } => {
                        for p in [a, b] {
                            if sim.is_vacant(p) {
                                errs.push(Violation::SwapIonMissing(p));
                            }
                        }
                        sim.exchange(a, b);
                    }
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

fn participant(instr: &Instruction, k: usize) -> JunctionId {
    match instr {
        Instruction::JtSimd { junctions, .. } => junctions[k],
        _ => unreachable!(),
    }
}

/// Validate and then update occupancy. Gates leave the layout unchanged.
pub fn apply(instr: &Instruction, graph: &mut PositionGraph) -> Result<(), IsaError> {
    validate(instr, graph).map_err(IsaError::Illegal)?;
    let mv = moves(instr, graph.topology()).map_err(IsaError::Illegal)?;
    for mo in mv {
        match mo {
            Move::Shift { from, to } => graph.mapping.shift(from, to),
            Move::Swap { a, b } => graph.mapping.exchange(a, b),
        }
    }
    match instr {
        Instruction::JtSimd { class, .. } => graph.set_mode(crate::arch::GraphMode::InterMode(*class)),
        Instruction::IntraShift { .. } | Instruction::IntraSwap { .. } | Instruction::S3 { .. } => {
            graph.set_mode(crate::arch::GraphMode::IntraMode)
        }
        _ => {}
    }
    Ok(())
}

/// Duration on the current layout.
pub fn instruction_latency(instr: &Instruction, graph: &PositionGraph, table: &OpTable) -> Result<u64, IsaError> {
    Ok(match instr {
        Instruction::Gate1Q { .. } => table.gate1q.latency_us,
        Instruction::Measure { .. } => table.measure.latency_us,
        Instruction::Gate2Q { q1, q2, .. } => match gate2q_form(graph, *q1, *q2) {
            Some(Gate2QForm::CoLocated) => table.gate2q.latency_us,
            Some(Gate2QForm::Adjacent) => table.gate2q_adjacent_latency(),
            None => return Err(IsaError::Illegal(vec![Violation::NotAdjacent])),
        },
        Instruction::IntraShift { .. } | Instruction::S3 { .. } => table.intra_shift.latency_us,
        Instruction::IntraSwap { .. } => table.intra_swap.latency_us,
        Instruction::JtSimd { class, .. } => {
            if class.is_shift() {
                table.inter_shift.latency_us
            } else {
                table.inter_swap.latency_us
            }
        }
    })
}

/// Positions an instruction reads or writes on the current layout.
pub fn touched_positions(instr: &Instruction, graph: &PositionGraph) -> Vec<PosId> {
    let m = &graph.mapping;
    let mut out: Vec<PosId> = match instr {
        Instruction::Gate1Q { qubit, .. } | Instruction::Measure { qubit } => m.position_of(*qubit).into_iter().collect(),
        Instruction::Gate2Q { q1, q2, .. } => [*q1, *q2].iter().filter_map(|&q| m.position_of(q)).collect(),
        _ => moves(instr, graph.topology())
            .unwrap_or_default()
            .into_iter()
            .flat_map(|mo| match mo {
                Move::Shift { from, to } => [from, to],
                Move::Swap { a, b } => [a, b],
            })
            .collect(),
    };
    out.sort_unstable();
    out.dedup();
    out
}

/// Qubits bound to the instruction on the current layout, ascending.
pub fn involved_qubits(instr: &Instruction, graph: &PositionGraph) -> Vec<Qubit> {
    let mut out: Vec<Qubit> = match instr {
        Instruction::Gate1Q { qubit, .. } | Instruction::Measure { qubit } => vec![*qubit],
        Instruction::Gate2Q { q1, q2, .. } => vec![*q1, *q2],
        _ => touched_positions(instr, graph).into_iter().filter_map(|p| graph.mapping.occupant(p)).collect(),
    };
    out.sort_unstable();
    out.dedup();
    out
}
