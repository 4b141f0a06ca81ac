//! Position graph of a D x D junction grid with 1D traps on every junction leg.
//!
//! Traps are numbered horizontal first (row-major, `D + 1` per row), then
//! vertical (column-major, `D + 1` per column). Index 0 of a horizontal trap
//! is its west end, index 0 of a vertical trap its north end.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isa::{JTClass, OpTable, OpTableOverride};

pub type PosId = usize;
pub type TrapId = usize;
pub type JunctionId = usize;
pub type Qubit = usize;

/// Outstanding-assignment count per gate zone.
pub type ZoneLoad = BTreeMap<PosId, u32>;

/// Steps of distance charged per outstanding assignment on a zone.
pub const ZONE_LOAD_BETA: u32 = 2;

pub const DEFAULT_COHERENCE_S: f64 = 600.0;

#[derive(Debug, Error)]
pub enum ArchError {
    #[error("invalid hardware spec: {0}")]
    InvalidSpec(String),
    #[error("hardware json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("qubit {0} is already placed")]
    AlreadyPlaced(Qubit),
    #[error("position {0} is occupied")]
    Occupied(PosId),
    #[error("position {0} does not exist")]
    NoSuchPosition(PosId),
    #[error("qubit {0} is out of range")]
    NoSuchQubit(Qubit),
}

fn default_coherence() -> f64 {
    DEFAULT_COHERENCE_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub grid_dim: usize,
    pub trap_capacity: usize,
    pub gate_zones_per_trap: usize,
    /// Explicit gate-zone indices, applied to every trap. Evenly spaced when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate_zone_layout: Option<Vec<usize>>,
    #[serde(default = "default_coherence")]
    pub coherence_time_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub op_table: Option<OpTableOverride>,
}

impl HardwareSpec {
    pub fn new(grid_dim: usize, trap_capacity: usize, gate_zones_per_trap: usize) -> Self {
        HardwareSpec {
            grid_dim,
            trap_capacity,
            gate_zones_per_trap,
            gate_zone_layout: None,
            coherence_time_s: DEFAULT_COHERENCE_S,
            op_table: None,
        }
    }

    pub fn with_gate_zone_layout(mut self, indices: Vec<usize>) -> Self {
        self.gate_zones_per_trap = indices.len();
        self.gate_zone_layout = Some(indices);
        self
    }

    pub fn validate(&self) -> Result<(), ArchError> {
        if self.grid_dim < 1 {
            return Err(ArchError::InvalidSpec("grid_dim must be at least 1".into()));
        }
        if self.trap_capacity < 1 {
            return Err(ArchError::InvalidSpec("trap_capacity must be at least 1".into()));
        }
        if self.gate_zones_per_trap < 1 {
            return Err(ArchError::InvalidSpec("gate_zones_per_trap must be at least 1".into()));
        }
        if self.gate_zones_per_trap > self.trap_capacity {
            return Err(ArchError::InvalidSpec(format!(
                "gate_zones_per_trap {} exceeds trap_capacity {}",
                self.gate_zones_per_trap, self.trap_capacity
            )));
        }
        if self.coherence_time_s.is_nan() || self.coherence_time_s <= 0.0 {
            return Err(ArchError::InvalidSpec("coherence_time_s must be positive".into()));
        }
        if let Some(layout) = &self.gate_zone_layout {
            if layout.len() != self.gate_zones_per_trap {
                return Err(ArchError::InvalidSpec(
                    "gate_zone_layout length differs from gate_zones_per_trap".into(),
                ));
            }
            let mut seen = vec![false; self.trap_capacity];
            for &i in layout {
                if i >= self.trap_capacity || seen[i] {
                    return Err(ArchError::InvalidSpec(format!("bad gate zone index {i}")));
                }
                seen[i] = true;
            }
        }
        if let Some(ov) = &self.op_table {
            ov.apply(OpTable::default())
                .validate()
                .map_err(|e| ArchError::InvalidSpec(e.to_string()))?;
        }
        Ok(())
    }

    pub fn trap_count(&self) -> usize {
        2 * self.grid_dim * (self.grid_dim + 1)
    }

    pub fn op_table(&self) -> OpTable {
        match &self.op_table {
            Some(ov) => ov.apply(OpTable::default()),
            None => OpTable::default(),
        }
    }

    /// Gate-zone indices within one trap, ascending.
    pub fn gate_zone_indices(&self) -> Vec<usize> {
        match &self.gate_zone_layout {
            Some(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v
            }
            None => {
                let (l, n) = (self.trap_capacity, self.gate_zones_per_trap);
                // Centre of the k-th of N equal segments of [0, L-1], rounded half up.
                (0..n).map(|k| ((2 * k + 1) * (l - 1) + n) / (2 * n)).collect()
            }
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ArchError> {
        let spec: HardwareSpec = serde_json::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Leg {
    North,
    East,
    South,
    West,
}

impl Leg {
    pub const ALL: [Leg; 4] = [Leg::North, Leg::East, Leg::South, Leg::West];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn letter(self) -> char {
        match self {
            Leg::North => 'N',
            Leg::East => 'E',
            Leg::South => 'S',
            Leg::West => 'W',
        }
    }

    pub fn from_letter(c: char) -> Option<Leg> {
        Leg::ALL.into_iter().find(|l| l.letter() == c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZoneKind {
    GateZone,
    Auxiliary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Horizontal,
    Vertical,
}

/// Which end of a trap a junction leg attaches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrapEnd {
    Low,
    High,
}

#[derive(Debug, Clone)]
pub struct PositionInfo {
    pub id: PosId,
    pub trap: TrapId,
    pub index: usize,
    pub kind: ZoneKind,
}

#[derive(Debug, Clone)]
pub struct Trap {
    pub id: TrapId,
    pub orientation: Orientation,
    pub positions: Vec<PosId>,
    /// Junction attached at the low (index 0) and high (index L-1) end.
    pub ends: [Option<(JunctionId, Leg)>; 2],
}

#[derive(Debug, Clone)]
pub struct Junction {
    pub id: JunctionId,
    pub row: usize,
    pub col: usize,
    /// Indexed by `Leg::index`.
    pub legs: [Option<(TrapId, TrapEnd)>; 4],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphMode {
    IntraMode,
    InterMode(JTClass),
}

/// Static machine description shared by every layout on it.
#[derive(Debug)]
pub struct Topology {
    spec: HardwareSpec,
    table: OpTable,
    positions: Vec<PositionInfo>,
    traps: Vec<Trap>,
    junctions: Vec<Junction>,
    gate_zones: Vec<PosId>,
    attachments: Vec<Vec<(JunctionId, Leg)>>,
    /// Per trap: terminal slots (index into `terminals`) at its junction-attached ends.
    trap_terminals: Vec<Vec<usize>>,
    terminals: Vec<PosId>,
    terminal_dist: Vec<Vec<u32>>,
}

impl Topology {
    pub fn build(spec: &HardwareSpec) -> Result<Self, ArchError> {
        spec.validate()?;
        let d = spec.grid_dim;
        let l = spec.trap_capacity;
        let zones = spec.gate_zone_indices();
        let n_traps = spec.trap_count();

        let mut traps = Vec::with_capacity(n_traps);
        let mut positions = Vec::with_capacity(n_traps * l);
        for t in 0..n_traps {
            let orientation = if t < d * (d + 1) { Orientation::Horizontal } else { Orientation::Vertical };
            let mut ps = Vec::with_capacity(l);
            for i in 0..l {
                let id = t * l + i;
                let kind = if zones.binary_search(&i).is_ok() { ZoneKind::GateZone } else { ZoneKind::Auxiliary };
                positions.push(PositionInfo { id, trap: t, index: i, kind });
                ps.push(id);
            }
            traps.push(Trap { id: t, orientation, positions: ps, ends: [None, None] });
        }

        let h_trap = |r: usize, c: usize| r * (d + 1) + c;
        let v_trap = |c: usize, r: usize| d * (d + 1) + c * (d + 1) + r;
        let mut junctions = Vec::with_capacity(d * d);
        for r in 0..d {
            for c in 0..d {
                let id = r * d + c;
                let mut legs = [None; 4];
                legs[Leg::North.index()] = Some((v_trap(c, r), TrapEnd::High));
                legs[Leg::East.index()] = Some((h_trap(r, c + 1), TrapEnd::Low));
                legs[Leg::South.index()] = Some((v_trap(c, r + 1), TrapEnd::Low));
                legs[Leg::West.index()] = Some((h_trap(r, c), TrapEnd::High));
                for leg in Leg::ALL {
                    let (t, end) = legs[leg.index()].expect("leg populated");
                    traps[t].ends[end as usize] = Some((id, leg));
                }
                junctions.push(Junction { id, row: r, col: c, legs });
            }
        }

        let mut attachments = vec![Vec::new(); positions.len()];
        for j in &junctions {
            for leg in Leg::ALL {
                if let Some((t, end)) = j.legs[leg.index()] {
                    let p = end_position(&traps[t], end);
                    attachments[p].push((j.id, leg));
                }
            }
        }
        let gate_zones = positions.iter().filter(|p| p.kind == ZoneKind::GateZone).map(|p| p.id).collect();

        let mut topo = Topology {
            spec: spec.clone(),
            table: spec.op_table(),
            positions,
            traps,
            junctions,
            gate_zones,
            attachments,
            trap_terminals: Vec::new(),
            terminals: Vec::new(),
            terminal_dist: Vec::new(),
        };
        topo.build_terminal_table();
        Ok(topo)
    }

    fn build_terminal_table(&mut self) {
        let mut slot_of = vec![usize::MAX; self.positions.len()];
        let mut terminals = Vec::new();
        for (p, att) in self.attachments.iter().enumerate() {
            if !att.is_empty() {
                slot_of[p] = terminals.len();
                terminals.push(p);
            }
        }
        let mut trap_terminals = vec![Vec::new(); self.traps.len()];
        for (s, &p) in terminals.iter().enumerate() {
            trap_terminals[self.positions[p].trap].push(s);
        }
        // Weighted terminal graph: trap interiors collapse to one edge, junction legs are unit edges.
        let mut adj: Vec<Vec<(usize, u32)>> = vec![Vec::new(); terminals.len()];
        for ts in &trap_terminals {
            for &a in ts {
                for &b in ts {
                    if a != b {
                        let ia = self.positions[terminals[a]].index;
                        let ib = self.positions[terminals[b]].index;
                        adj[a].push((b, ia.abs_diff(ib) as u32));
                    }
                }
            }
        }
        for j in &self.junctions {
            let ends: Vec<usize> = Leg::ALL
                .iter()
                .filter_map(|&leg| self.leg_position(j.id, leg))
                .map(|p| slot_of[p])
                .collect();
            for &a in &ends {
                for &b in &ends {
                    if a != b {
                        adj[a].push((b, 1));
                    }
                }
            }
        }
        let n = terminals.len();
        let mut dist = vec![vec![u32::MAX; n]; n];
        for s in 0..n {
            let row = &mut dist[s];
            let mut heap = BinaryHeap::new();
            row[s] = 0;
            heap.push(Reverse((0u32, s)));
            while let Some(Reverse((du, u))) = heap.pop() {
                if du > row[u] {
                    continue;
                }
                for &(v, w) in &adj[u] {
                    let nd = du + w;
                    if nd < row[v] {
                        row[v] = nd;
                        heap.push(Reverse((nd, v)));
                    }
                }
            }
        }
        self.terminals = terminals;
        self.trap_terminals = trap_terminals;
        self.terminal_dist = dist;
    }

    pub fn spec(&self) -> &HardwareSpec {
        &self.spec
    }

    pub fn op_table(&self) -> &OpTable {
        &self.table
    }

    pub fn trap_capacity(&self) -> usize {
        self.spec.trap_capacity
    }

    pub fn num_positions(&self) -> usize {
        self.positions.len()
    }

    pub fn num_traps(&self) -> usize {
        self.traps.len()
    }

    pub fn positions(&self) -> &[PositionInfo] {
        &self.positions
    }

    pub fn position(&self, p: PosId) -> &PositionInfo {
        &self.positions[p]
    }

    pub fn traps(&self) -> &[Trap] {
        &self.traps
    }

    pub fn trap(&self, t: TrapId) -> &Trap {
        &self.traps[t]
    }

    pub fn junctions(&self) -> &[Junction] {
        &self.junctions
    }

    pub fn gate_zones(&self) -> &[PosId] {
        &self.gate_zones
    }

    pub fn is_gate_zone(&self, p: PosId) -> bool {
        self.positions[p].kind == ZoneKind::GateZone
    }

    pub fn pos_at(&self, trap: TrapId, index: usize) -> PosId {
        self.traps[trap].positions[index]
    }

    /// Trap-end position attached to `leg` of junction `j`.
    pub fn leg_position(&self, j: JunctionId, leg: Leg) -> Option<PosId> {
        self.junctions[j].legs[leg.index()].map(|(t, end)| end_position(&self.traps[t], end))
    }

    /// Junction legs attached to a position (empty for interior slots).
    pub fn attachments(&self, p: PosId) -> &[(JunctionId, Leg)] {
        &self.attachments[p]
    }

    /// Shortest path length on the union of intra-trap and junction edges.
    pub fn distance(&self, a: PosId, b: PosId) -> u32 {
        let pa = &self.positions[a];
        let pb = &self.positions[b];
        let mut best = if pa.trap == pb.trap { pa.index.abs_diff(pb.index) as u32 } else { u32::MAX };
        for &sa in &self.trap_terminals[pa.trap] {
            let ia = self.positions[self.terminals[sa]].index;
            let da = pa.index.abs_diff(ia) as u32;
            for &sb in &self.trap_terminals[pb.trap] {
                let mid = self.terminal_dist[sa][sb];
                if mid == u32::MAX {
                    continue;
                }
                let ib = self.positions[self.terminals[sb]].index;
                let total = da + mid + pb.index.abs_diff(ib) as u32;
                best = best.min(total);
            }
        }
        best
    }

    /// Neighbors on the static union graph, ascending.
    pub fn union_neighbors(&self, p: PosId) -> Vec<PosId> {
        let mut out = self.intra_neighbors(p);
        for &(j, leg) in &self.attachments[p] {
            for other in Leg::ALL {
                if other != leg {
                    if let Some(q) = self.leg_position(j, other) {
                        if q != p {
                            out.push(q);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn intra_neighbors(&self, p: PosId) -> Vec<PosId> {
        let info = &self.positions[p];
        let mut out = Vec::with_capacity(2);
        if info.index > 0 {
            out.push(p - 1);
        }
        if info.index + 1 < self.spec.trap_capacity {
            out.push(p + 1);
        }
        out
    }

    /// Positions reachable from `p` in one step under `mode`.
    pub fn neighbors(&self, p: PosId, mode: GraphMode) -> Vec<PosId> {
        match mode {
            GraphMode::IntraMode => self.intra_neighbors(p),
            GraphMode::InterMode(class) => {
                let mut out = Vec::new();
                for &(j, leg) in &self.attachments[p] {
                    for (from, to) in class.directed_pairs() {
                        if from == leg {
                            if let Some(q) = self.leg_position(j, to) {
                                out.push(q);
                            }
                        }
                    }
                }
                out.sort_unstable();
                out.dedup();
                out
            }
        }
    }

    /// Gate zone minimizing `distance + beta * load`, ties to the lowest id.
    pub fn nearest_gate_zone(&self, pos: PosId, load: &ZoneLoad, beta: u32) -> PosId {
        let mut best = None;
        for &gz in &self.gate_zones {
            let score = self.distance(pos, gz) as u64 + beta as u64 * *load.get(&gz).unwrap_or(&0) as u64;
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, gz));
            }
        }
        best.expect("at least one gate zone").1
    }
}

fn end_position(trap: &Trap, end: TrapEnd) -> PosId {
    match end {
        TrapEnd::Low => trap.positions[0],
        TrapEnd::High => *trap.positions.last().expect("non-empty trap"),
    }
}

/// Partial bijection between logical qubits and positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitMapping {
    occupant: Vec<Option<Qubit>>,
    location: Vec<Option<PosId>>,
}

impl QubitMapping {
    pub fn new(num_positions: usize, num_qubits: usize) -> Self {
        QubitMapping { occupant: vec![None; num_positions], location: vec![None; num_qubits] }
    }

    pub fn num_qubits(&self) -> usize {
        self.location.len()
    }

    pub fn num_positions(&self) -> usize {
        self.occupant.len()
    }

    pub fn place(&mut self, q: Qubit, p: PosId) -> Result<(), ArchError> {
        if q >= self.location.len() {
            return Err(ArchError::NoSuchQubit(q));
        }
        if p >= self.occupant.len() {
            return Err(ArchError::NoSuchPosition(p));
        }
        if self.location[q].is_some() {
            return Err(ArchError::AlreadyPlaced(q));
        }
        if self.occupant[p].is_some() {
            return Err(ArchError::Occupied(p));
        }
        self.occupant[p] = Some(q);
        self.location[q] = Some(p);
        Ok(())
    }

    pub fn occupant(&self, p: PosId) -> Option<Qubit> {
        self.occupant[p]
    }

    pub fn position_of(&self, q: Qubit) -> Option<PosId> {
        self.location.get(q).copied().flatten()
    }

    pub fn is_vacant(&self, p: PosId) -> bool {
        self.occupant[p].is_none()
    }

    /// Move the occupant of `from` into the vacant `to`.
    pub fn shift(&mut self, from: PosId, to: PosId) {
        let q = self.occupant[from].take().expect("shift source occupied");
        debug_assert!(self.occupant[to].is_none());
        self.occupant[to] = Some(q);
        self.location[q] = Some(to);
    }

    /// Exchange the contents of two positions (either may be vacant).
    pub fn exchange(&mut self, a: PosId, b: PosId) {
        self.occupant.swap(a, b);
        for p in [a, b] {
            if let Some(q) = self.occupant[p] {
                self.location[q] = Some(p);
            }
        }
    }

    pub fn placed(&self) -> impl Iterator<Item = (Qubit, PosId)> + '_ {
        self.location.iter().enumerate().filter_map(|(q, p)| p.map(|p| (q, p)))
    }

    pub fn vacant(&self) -> impl Iterator<Item = PosId> + '_ {
        self.occupant.iter().enumerate().filter(|(_, o)| o.is_none()).map(|(p, _)| p)
    }

    /// True when occupant and location tables agree and no qubit appears twice.
    pub fn is_consistent(&self) -> bool {
        let mut seen = vec![false; self.location.len()];
        for (p, o) in self.occupant.iter().enumerate() {
            if let Some(q) = *o {
                if q >= seen.len() || seen[q] || self.location[q] != Some(p) {
                    return false;
                }
                seen[q] = true;
            }
        }
        self.location.iter().enumerate().all(|(q, p)| p.map_or(!seen[q], |_| seen[q]))
    }
}

/// Topology plus the current layout and connectivity mode.
#[derive(Debug, Clone)]
pub struct PositionGraph {
    topo: Arc<Topology>,
    pub mapping: QubitMapping,
    mode: GraphMode,
}

impl PositionGraph {
    pub fn new(topo: Arc<Topology>, num_qubits: usize) -> Self {
        let mapping = QubitMapping::new(topo.num_positions(), num_qubits);
        PositionGraph { topo, mapping, mode: GraphMode::IntraMode }
    }

    pub fn with_mapping(topo: Arc<Topology>, mapping: QubitMapping) -> Self {
        assert_eq!(mapping.num_positions(), topo.num_positions());
        PositionGraph { topo, mapping, mode: GraphMode::IntraMode }
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn topology_arc(&self) -> Arc<Topology> {
        Arc::clone(&self.topo)
    }

    pub fn mode(&self) -> GraphMode {
        self.mode
    }

    pub fn set_mode(&mut self, mode: GraphMode) {
        self.mode = mode;
    }

    /// Enabled edges from `p` under the current mode.
    pub fn adjacent(&self, p: PosId) -> Vec<PosId> {
        self.topo.neighbors(p, self.mode)
    }

    pub fn distance(&self, a: PosId, b: PosId) -> u32 {
        self.topo.distance(a, b)
    }
}

/// Build the grid and wrap it in an empty layout.
pub fn build_grid(spec: &HardwareSpec, num_qubits: usize) -> Result<PositionGraph, ArchError> {
    let topo = Arc::new(Topology::build(spec)?);
    Ok(PositionGraph::new(topo, num_qubits))
}
