//! Operation counts, busy-time breakdown and the multiplicative fidelity model.

use serde::{Deserialize, Serialize};

use crate::isa::OpTable;
use crate::scalar::Scalar;
use crate::scheduler::{EventKind, Schedule};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub n_1q: u64,
    pub n_2q: u64,
    pub n_meas: u64,
    /// One per moved ion.
    pub n_intra_shift: u64,
    pub n_intra_swap: u64,
    /// One per participating junction.
    pub n_inter_shift: u64,
    pub n_inter_swap: u64,
}

/// Busy time per category: length of the union of that category's event intervals.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeBreakdown {
    pub gate_us: u64,
    pub intra_transport_us: u64,
    pub inter_transport_us: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Fidelity<T> {
    pub f_1q: T,
    pub f_2q: T,
    pub f_meas: T,
    pub f_transport: T,
    pub f_decoh: T,
    pub f_total: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar + Serialize + serde::de::DeserializeOwned")]
pub struct Metrics<T> {
    pub t_exe_us: u64,
    pub n_qubits: usize,
    pub counts: Counts,
    pub breakdown: TimeBreakdown,
    pub fidelity: Fidelity<T>,
}

fn pow<T: Scalar>(f: f64, n: u64) -> T {
    if n == 0 {
        return T::one();
    }
    (T::of_f64(f).ln() * T::of_u64(n)).exp()
}

/// Each component is the op fidelity raised to its count; decoherence is
/// `exp(-n * T_exe / T_coh)`.
pub fn fidelity<T: Scalar>(counts: &Counts, t_exe_us: u64, n_qubits: usize, table: &OpTable, coherence_s: f64) -> Fidelity<T> {
    let f_1q = pow::<T>(table.gate1q.fidelity, counts.n_1q);
    let f_2q = pow::<T>(table.gate2q.fidelity, counts.n_2q);
    let f_meas = pow::<T>(table.measure.fidelity, counts.n_meas);
    let f_transport = pow::<T>(table.intra_shift.fidelity, counts.n_intra_shift)
        * pow::<T>(table.intra_swap.fidelity, counts.n_intra_swap)
        * pow::<T>(table.inter_shift.fidelity, counts.n_inter_shift)
        * pow::<T>(table.inter_swap.fidelity, counts.n_inter_swap);
    let t_s = T::of_u64(t_exe_us) / T::of_f64(1e6);
    let f_decoh = (-(T::of_u64(n_qubits as u64) * t_s / T::of_f64(coherence_s))).exp();
    Fidelity { f_1q, f_2q, f_meas, f_transport, f_decoh, f_total: f_1q * f_2q * f_meas * f_transport * f_decoh }
}

fn union_len(mut iv: Vec<(u64, u64)>) -> u64 {
    iv.sort_unstable();
    let mut total = 0;
    let mut cur: Option<(u64, u64)> = None;
    for (a, b) in iv {
        match cur {
            Some((s, e)) if a <= e => cur = Some((s, e.max(b))),
            Some((s, e)) => {
                total += e - s;
                cur = Some((a, b));
            }
            None => cur = Some((a, b)),
        }
    }
    total + cur.map_or(0, |(s, e)| e - s)
}

/// Count operations and busy time. A 2Q event longer than the co-located gate latency is
/// the adjacent form and also charges its shift-in and shift-out.
pub fn count_schedule(schedule: &Schedule, table: &OpTable) -> (Counts, TimeBreakdown) {
    let mut c = Counts::default();
    let (mut gate, mut intra, mut inter) = (Vec::new(), Vec::new(), Vec::new());
    for e in &schedule.events {
        let span = (e.t, e.end());
        match e.kind {
            EventKind::Gate1q => c.n_1q += 1,
            EventKind::Measure => c.n_meas += 1,
            EventKind::Gate2q => {
                c.n_2q += 1;
                if e.dur != table.gate2q.latency_us {
                    c.n_intra_shift += 2;
                }
            }
            EventKind::IntraShift => c.n_intra_shift += 1,
            EventKind::S3 => c.n_intra_shift += e.positions.len() as u64,
            EventKind::IntraSwap => c.n_intra_swap += 1,
            EventKind::JtShift => c.n_inter_shift += (e.positions.len() / 2) as u64,
            EventKind::JtSwap => c.n_inter_swap += (e.positions.len() / 2) as u64,
        }
        if e.kind.is_gate() {
            gate.push(span);
        } else if e.kind.is_intra_transport() {
            intra.push(span);
        } else {
            inter.push(span);
        }
    }
    let b = TimeBreakdown { gate_us: union_len(gate), intra_transport_us: union_len(intra), inter_transport_us: union_len(inter) };
    (c, b)
}

pub fn compute_metrics<T: Scalar>(schedule: &Schedule, n_qubits: usize, table: &OpTable, coherence_s: f64) -> Metrics<T> {
    let (counts, breakdown) = count_schedule(schedule, table);
    Metrics {
        t_exe_us: schedule.total_time_us,
        n_qubits,
        counts,
        breakdown,
        fidelity: fidelity(&counts, schedule.total_time_us, n_qubits, table, coherence_s),
    }
}

impl<T: Scalar> Metrics<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }

    pub const CSV_COLUMNS: [&'static str; 19] = [
        "t_exe_us",
        "n_qubits",
        "n_1q",
        "n_2q",
        "n_meas",
        "n_intra_shift",
        "n_intra_swap",
        "n_inter_shift",
        "n_inter_swap",
        "gate_us",
        "intra_transport_us",
        "inter_transport_us",
        "f_1q",
        "f_2q",
        "f_meas",
        "f_transport",
        "f_decoh",
        "f_total",
        "log10_f_total",
    ];

    /// Values in `CSV_COLUMNS` order.
    pub fn csv_row(&self) -> Vec<String> {
        let c = &self.counts;
        let b = &self.breakdown;
        let f = &self.fidelity;
        let mut row: Vec<String> = [
            self.t_exe_us,
            self.n_qubits as u64,
            c.n_1q,
            c.n_2q,
            c.n_meas,
            c.n_intra_shift,
            c.n_intra_swap,
            c.n_inter_shift,
            c.n_inter_swap,
            b.gate_us,
            b.intra_transport_us,
            b.inter_transport_us,
        ]
        .iter()
        .map(u64::to_string)
        .collect();
        for v in [f.f_1q, f.f_2q, f.f_meas, f.f_transport, f.f_decoh, f.f_total, f.f_total.log10()] {
            row.push(format!("{:e}", v.as_f64()));
        }
        row
    }
}
