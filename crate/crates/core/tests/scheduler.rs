use std::sync::Arc;

use fluxtrap_core::arch::{HardwareSpec, Leg, Topology};
use fluxtrap_core::circuit::{gen_qaoa, Circuit, Op};
use fluxtrap_core::isa::{instruction_latency, Instruction, JTClass};
use fluxtrap_core::scenarios::{grouped_transfer, overlapped_swap, placed_graph};
use fluxtrap_core::scheduler::{
    compile, initial_mapping, validate_schedule, CompileError, Event, EventKind, MappingStrategy, Policy, Schedule,
    SchedulerConfig,
};

fn cfg() -> SchedulerConfig<f64> {
    SchedulerConfig::default()
}

fn event(t: u64, dur: u64, kind: EventKind, qubits: Vec<usize>, positions: Vec<usize>) -> Event {
    Event { t, dur, kind, qubits, positions, jt_class: None, trap: None, dir: None, name: None }
}

#[test]
fn empty_circuit_compiles_to_nothing() {
    let topo = Arc::new(Topology::build(&HardwareSpec::new(1, 4, 1)).unwrap());
    let g = initial_mapping(0, topo, MappingStrategy::Packed, 0).unwrap();
    for p in Policy::ALL {
        let out = compile(&Circuit::new(0), &g, p, &cfg(), 0).unwrap();
        assert_eq!(out.schedule, Schedule::default());
        assert_eq!(out.metrics.t_exe_us, 0);
    }
}

#[test]
fn grouped_transfer_saves_one_junction_shift() {
    let sc = grouped_transfer();
    let g = sc.graph().unwrap();
    let flux = compile(&sc.circuit, &g, Policy::FluxTrap, &cfg(), 0).unwrap();
    let eager = compile(&sc.circuit, &g, Policy::EagerJt, &cfg(), 0).unwrap();
    for out in [&flux, &eager] {
        validate_schedule(&out.schedule, &sc.circuit, &g).unwrap();
    }
    let shift = g.topology().op_table().inter_shift.latency_us;
    assert_eq!(eager.schedule.total_time_us - flux.schedule.total_time_us, shift);
    let jts: Vec<&Event> = flux.schedule.events.iter().filter(|e| e.kind.is_inter_transport()).collect();
    assert_eq!(jts.len(), 1);
    let jt = jts[0];
    assert_eq!(jt.kind, EventKind::JtShift);
    assert_eq!(jt.jt_class, Some(JTClass::Shift { from: Leg::North, to: Leg::East }));
    let mut carried = jt.qubits.clone();
    carried.sort();
    assert_eq!(carried, vec![0, 3]);
    assert!(eager.schedule.events.iter().filter(|e| e.kind.is_inter_transport()).count() > 1);
}

#[test]
fn overlapped_swap_hides_a_gate() {
    let sc = overlapped_swap();
    let g = sc.graph().unwrap();
    let flux = compile(&sc.circuit, &g, Policy::FluxTrap, &cfg(), 0).unwrap();
    let sync = compile(&sc.circuit, &g, Policy::DepthSync, &cfg(), 0).unwrap();
    for out in [&flux, &sync] {
        validate_schedule(&out.schedule, &sc.circuit, &g).unwrap();
    }
    assert!(flux.schedule.total_time_us < sync.schedule.total_time_us);
    let swap_of = |s: &Schedule| {
        s.events
            .iter()
            .find(|e| e.kind == EventKind::IntraSwap && {
                let mut q = e.qubits.clone();
                q.sort();
                q == [0, 1]
            })
            .cloned()
            .expect("qubits 0 and 1 swap")
    };
    let gate_23 = |s: &Schedule| {
        s.events.iter().find(|e| e.kind == EventKind::Gate2q && e.qubits.contains(&2) && e.qubits.contains(&3)).cloned().unwrap()
    };
    let (sw, cx) = (swap_of(&flux.schedule), gate_23(&flux.schedule));
    assert!(sw.t < cx.t && cx.t < sw.end(), "gate at {} not inside swap {}..{}", cx.t, sw.t, sw.end());
    let (sw, cx) = (swap_of(&sync.schedule), gate_23(&sync.schedule));
    assert!(cx.t >= sw.end());
}

#[test]
fn compile_is_deterministic() {
    let c = gen_qaoa(12, 4).unwrap();
    let topo = Arc::new(Topology::build(&HardwareSpec::new(2, 6, 2)).unwrap());
    let g = initial_mapping(12, topo, MappingStrategy::Random, 9).unwrap();
    for p in Policy::ALL {
        let a = compile(&c, &g, p, &cfg(), 1).unwrap();
        let b = compile(&c, &g, p, &cfg(), 1).unwrap();
        assert_eq!(a.schedule.to_json(), b.schedule.to_json());
        assert_eq!(a.metrics.to_json(), b.metrics.to_json());
    }
}

#[test]
fn unplaced_or_oversized_inputs_are_rejected() {
    let topo = Arc::new(Topology::build(&HardwareSpec::new(1, 2, 1)).unwrap());
    assert!(initial_mapping(topo.num_positions() + 1, topo.clone(), MappingStrategy::Packed, 0).is_err());
    let g = initial_mapping(2, topo, MappingStrategy::Packed, 0).unwrap();
    let mut c = Circuit::new(3);
    c.push(Op::new("h", &[2]));
    assert!(matches!(compile(&c, &g, Policy::FluxTrap, &cfg(), 0), Err(CompileError::Input(_))));
}

#[test]
fn packed_mapping_leaves_trap_ends_empty() {
    let topo = Arc::new(Topology::build(&HardwareSpec::new(1, 5, 1)).unwrap());
    let interior = topo.num_traps() * 3;
    let g = initial_mapping(interior, topo.clone(), MappingStrategy::Packed, 0).unwrap();
    for (_, p) in g.mapping.placed() {
        let i = topo.position(p).index;
        assert!(i > 0 && i < 4, "slot {p} is a trap end");
    }
    let full = initial_mapping(interior + 1, topo.clone(), MappingStrategy::Packed, 0).unwrap();
    assert_eq!(full.mapping.placed().count(), interior + 1);
    let a = initial_mapping(7, topo.clone(), MappingStrategy::Random, 3).unwrap();
    let b = initial_mapping(7, topo, MappingStrategy::Random, 3).unwrap();
    assert_eq!(a.mapping, b.mapping);
}

#[test]
fn intra_shift_during_junction_transfer_breaks_mode_exclusivity() {
    let topo = Arc::new(Topology::build(&HardwareSpec::new(1, 3, 1)).unwrap());
    let north = topo.leg_position(0, Leg::North).unwrap();
    let east = topo.leg_position(0, Leg::East).unwrap();
    let g = placed_graph(topo.clone(), &[topo.pos_at(0, 0), north]).unwrap();
    let table = topo.op_table();
    let shift = Instruction::IntraShift { trap: 0, src: 0, dst: 1 };
    let class = JTClass::Shift { from: Leg::North, to: Leg::East };
    let jt = Instruction::JtSimd { class, junctions: vec![0] };
    let mut a = event(0, instruction_latency(&shift, &g, table).unwrap(), EventKind::IntraShift, vec![0], vec![topo.pos_at(0, 0), topo.pos_at(0, 1)]);
    a.trap = Some(0);
    let mut b = event(0, instruction_latency(&jt, &g, table).unwrap(), EventKind::JtShift, vec![1], vec![north, east]);
    b.jt_class = Some(class);
    let total = a.end().max(b.end());
    let c = Circuit::new(2);
    // Each on its own is legal.
    for e in [&a, &b] {
        validate_schedule(&Schedule { total_time_us: e.end(), events: vec![e.clone()] }, &c, &g).unwrap();
    }
    let errs = validate_schedule(&Schedule { total_time_us: total, events: vec![a, b] }, &c, &g).unwrap_err();
    assert!(errs.iter().any(|v| v.message.starts_with("mode exclusivity")), "{errs:?}");
}

#[test]
fn dropping_a_gate_breaks_coverage() {
    let sc = grouped_transfer();
    let g = sc.graph().unwrap();
    let mut s = compile(&sc.circuit, &g, Policy::FluxTrap, &cfg(), 0).unwrap().schedule;
    let last = s.events.iter().rposition(|e| e.kind.is_gate()).unwrap();
    s.events.remove(last);
    s.total_time_us = s.events.iter().map(Event::end).max().unwrap_or(0);
    let errs = validate_schedule(&s, &sc.circuit, &g).unwrap_err();
    assert!(errs.iter().any(|v| v.message.starts_with("gate coverage")), "{errs:?}");
}

#[test]
fn tampered_duration_is_caught() {
    let sc = overlapped_swap();
    let g = sc.graph().unwrap();
    let mut s = compile(&sc.circuit, &g, Policy::FluxTrap, &cfg(), 0).unwrap().schedule;
    s.events[0].dur += 1;
    s.total_time_us = s.events.iter().map(Event::end).max().unwrap();
    assert!(validate_schedule(&s, &sc.circuit, &g).is_err());
}
