//! Timed events and their JSON form.

use serde::{Deserialize, Serialize};

use crate::arch::{PosId, Qubit, Topology, TrapId};
use crate::isa::{Instruction, JTClass, ShiftDir};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Gate1q,
    Gate2q,
    Measure,
    IntraShift,
    IntraSwap,
    S3,
    JtShift,
    JtSwap,
}

impl EventKind {
    pub fn is_gate(self) -> bool {
        matches!(self, EventKind::Gate1q | EventKind::Gate2q | EventKind::Measure)
    }

    pub fn is_intra_transport(self) -> bool {
        matches!(self, EventKind::IntraShift | EventKind::IntraSwap | EventKind::S3)
    }

    pub fn is_inter_transport(self) -> bool {
        matches!(self, EventKind::JtShift | EventKind::JtSwap)
    }
}

/// One timed instruction.
///
/// `positions` holds the gate qubits' slots in qubit order for gates, the source slots
/// (ascending) for S3, `[src, dst]` for a scalar shift, the two slots for a swap, and
/// `(source, target)` leg-end pairs per participating junction for junction transfers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub dur: u64,
    pub kind: EventKind,
    pub qubits: Vec<Qubit>,
    pub positions: Vec<PosId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jt_class: Option<JTClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trap: Option<TrapId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<ShiftDir>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

impl Event {
    pub fn end(&self) -> u64 {
        self.t + self.dur
    }

    /// Rebuild the instruction this event encodes. `None` when the encoding is inconsistent.
    pub fn instruction(&self, topo: &Topology) -> Option<Instruction> {
        let idx = |p: PosId| (p < topo.num_positions()).then(|| topo.position(p).index);
        let in_trap = |t: TrapId| self.positions.iter().all(|&p| p < topo.num_positions() && topo.position(p).trap == t);
        Some(match self.kind {
            EventKind::Gate1q => Instruction::Gate1Q { qubit: *self.qubits.first()?, name: self.name.clone()? },
            EventKind::Measure => Instruction::Measure { qubit: *self.qubits.first()? },
            EventKind::Gate2q => {
                if self.qubits.len() != 2 {
                    return None;
                }
                Instruction::Gate2Q { q1: self.qubits[0], q2: self.qubits[1], name: self.name.clone()? }
            }
            EventKind::IntraShift => {
                let trap = self.trap?;
                if self.positions.len() != 2 || !in_trap(trap) {
                    return None;
                }
                Instruction::IntraShift { trap, src: idx(self.positions[0])?, dst: idx(self.positions[1])? }
            }
            EventKind::IntraSwap => {
                let trap = self.trap?;
                if self.positions.len() != 2 || !in_trap(trap) {
                    return None;
                }
                let (a, b) = (idx(self.positions[0])?, idx(self.positions[1])?);
                if a.abs_diff(b) != 1 {
                    return None;
                }
                Instruction::IntraSwap { trap, index: a.min(b) }
            }
            EventKind::S3 => {
                let trap = self.trap?;
                if !in_trap(trap) {
                    return None;
                }
                let indices = self.positions.iter().map(|&p| idx(p)).collect::<Option<Vec<_>>>()?;
                Instruction::S3 { trap, dir: self.dir?, indices }
            }
            EventKind::JtShift | EventKind::JtSwap => {
                let class = self.jt_class?;
                if class.is_shift() != (self.kind == EventKind::JtShift) || !self.positions.len().is_multiple_of(2) {
                    return None;
                }
                let mut junctions = Vec::new();
                for pair in self.positions.chunks(2) {
                    if pair[0] >= topo.num_positions() {
                        return None;
                    }
                    let j = topo
                        .attachments(pair[0])
                        .iter()
                        .find(|(j, leg)| *leg == class.source_leg() && topo.leg_position(*j, class.target_leg()) == Some(pair[1]))?
                        .0;
                    junctions.push(j);
                }
                Instruction::JtSimd { class, junctions }
            }
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub total_time_us: u64,
    pub events: Vec<Event>,
}

impl Schedule {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Text Gantt chart: one row per trap and one for the junction network.
    pub fn gantt(&self, topo: &Topology, width: usize) -> String {
        let width = width.max(10);
        let total = self.total_time_us.max(1);
        let col = |t: u64| ((t as u128 * width as u128) / total as u128) as usize;
        let mut rows: Vec<(String, Vec<char>)> =
            (0..topo.num_traps()).map(|t| (format!("trap {t:>3}"), vec!['.'; width])).collect();
        rows.push(("junctions".to_string(), vec!['.'; width]));
        let jt_row = rows.len() - 1;
        for e in &self.events {
            let glyph = match e.kind {
                EventKind::Gate1q => '1',
                EventKind::Gate2q => '2',
                EventKind::Measure => 'M',
                EventKind::IntraShift | EventKind::S3 => 's',
                EventKind::IntraSwap => 'w',
                EventKind::JtShift => 'J',
                EventKind::JtSwap => 'X',
            };
            let (a, b) = (col(e.t), col(e.end()).max(col(e.t) + 1).min(width));
            let mut targets: Vec<usize> = if e.kind.is_inter_transport() {
                vec![jt_row]
            } else {
                e.positions.iter().filter(|&&p| p < topo.num_positions()).map(|&p| topo.position(p).trap).collect()
            };
            targets.dedup();
            for r in targets {
                for c in &mut rows[r].1[a.min(width - 1)..b] {
                    *c = glyph;
                }
            }
        }
        let mut out = format!("time 0..{} us, {} columns\n", self.total_time_us, width);
        for (label, cells) in rows {
            out.push_str(&label);
            out.push_str(" |");
            out.extend(cells);
            out.push_str("|\n");
        }
        out
    }
}
