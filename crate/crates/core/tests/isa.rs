use std::sync::Arc;

use fluxtrap_core::arch::{HardwareSpec, Leg, PositionGraph, QubitMapping, Topology};
use fluxtrap_core::isa::{
    self, enumerate_jt_classes, gate2q_form, instruction_latency, Gate2QForm, Instruction, JTClass, OpTable, ShiftDir,
};
use proptest::prelude::*;

fn layout(spec: HardwareSpec, at: &[usize]) -> PositionGraph {
    let topo = Arc::new(Topology::build(&spec).unwrap());
    let mut m = QubitMapping::new(topo.num_positions(), at.len());
    for (q, &p) in at.iter().enumerate() {
        m.place(q, p).unwrap();
    }
    PositionGraph::with_mapping(topo, m)
}

fn rules(instr: &Instruction, g: &PositionGraph) -> Vec<&'static str> {
    isa::validate(instr, g).err().unwrap_or_default().iter().map(|v| v.rule()).collect()
}

#[test]
fn eighteen_classes_twelve_shifts_six_swaps() {
    let all = enumerate_jt_classes();
    assert_eq!(all.len(), 18);
    assert_eq!(all.iter().filter(|c| c.is_shift()).count(), 12);
    assert_eq!(all.iter().filter(|c| !c.is_shift()).count(), 6);
    let mut dedup = all.clone();
    dedup.sort();
    dedup.dedup();
    assert_eq!(dedup.len(), 18);
    for c in all {
        assert_eq!(JTClass::parse(&c.label()).unwrap(), c);
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(serde_json::from_str::<JTClass>(&json).unwrap(), c);
    }
    assert!(JTClass::parse("shift:N>N").is_err());
    assert!(JTClass::parse("swap:E-N").is_err());
}

#[test]
fn latencies_by_form() {
    let t = OpTable::default();
    // trap 0 of a single junction grid, zones at 2 and 5 for L=8
    let g = layout(HardwareSpec::new(1, 8, 2), &[2, 3, 5, 6, 0]);
    let lat = |i: &Instruction| instruction_latency(i, &g, &t).unwrap();
    assert_eq!(lat(&Instruction::Gate1Q { qubit: 0, name: "h".into() }), 5);
    assert_eq!(lat(&Instruction::Measure { qubit: 0 }), 120);
    assert_eq!(gate2q_form(&g, 0, 1), Some(Gate2QForm::Adjacent));
    assert_eq!(lat(&Instruction::Gate2Q { q1: 0, q2: 1, name: "cx".into() }), 141);
    assert_eq!(lat(&Instruction::S3 { trap: 0, dir: ShiftDir::Right, indices: vec![2, 3] }), 58);
    assert_eq!(lat(&Instruction::IntraSwap { trap: 0, index: 2 }), 200);
    let both = layout(HardwareSpec::new(1, 8, 2).with_gate_zone_layout(vec![3, 4]), &[3, 4]);
    assert_eq!(gate2q_form(&both, 0, 1), Some(Gate2QForm::CoLocated));
    assert_eq!(instruction_latency(&Instruction::Gate2Q { q1: 1, q2: 0, name: "cz".into() }, &both, &t).unwrap(), 25);
    let jt = |c| Instruction::JtSimd { class: c, junctions: vec![0] };
    assert_eq!(lat(&jt(JTClass::Shift { from: Leg::West, to: Leg::North })), 250);
    assert_eq!(lat(&jt(JTClass::swap(Leg::West, Leg::North))), 500);
    assert_eq!(t.gate2q_adjacent_latency(), 141);
}

#[test]
fn named_violations() {
    let g = layout(HardwareSpec::new(1, 8, 2), &[2, 3, 0, 7]);
    assert_eq!(rules(&Instruction::IntraShift { trap: 0, src: 2, dst: 3 }, &g), vec!["destination occupied"]);
    assert_eq!(rules(&Instruction::Gate1Q { qubit: 2, name: "x".into() }, &g), vec!["not in gate zone"]);
    assert_eq!(rules(&Instruction::IntraShift { trap: 0, src: 4, dst: 5 }, &g), vec!["source empty"]);
    assert_eq!(rules(&Instruction::IntraShift { trap: 0, src: 4, dst: 6 }, &g), vec!["not contiguous"]);
    assert_eq!(rules(&Instruction::IntraSwap { trap: 0, index: 4 }, &g), vec!["swap ion missing", "swap ion missing"]);
    assert_eq!(rules(&Instruction::Gate2Q { q1: 0, q2: 2, name: "cx".into() }, &g), vec!["not adjacent"]);
    assert_eq!(rules(&Instruction::S3 { trap: 0, dir: ShiftDir::Left, indices: vec![0] }, &g), vec!["outside trap"]);
    assert_eq!(rules(&Instruction::S3 { trap: 0, dir: ShiftDir::Right, indices: vec![] }, &g), vec!["empty instruction"]);
    // ion 3 at the east end (index 7) of trap 0 = west leg of junction 0
    let west_to_north = Instruction::JtSimd { class: JTClass::Shift { from: Leg::West, to: Leg::North }, junctions: vec![0] };
    assert!(isa::validate(&west_to_north, &g).is_ok());
    let from_north = Instruction::JtSimd { class: JTClass::Shift { from: Leg::North, to: Leg::West }, junctions: vec![0] };
    assert_eq!(rules(&from_north, &g), vec!["not at source leg"]);
    let dup = Instruction::JtSimd { class: JTClass::Shift { from: Leg::West, to: Leg::North }, junctions: vec![0, 0] };
    assert_eq!(rules(&dup, &g), vec!["duplicate participant"]);
}

#[test]
fn s3_reuses_vacated_slots() {
    let mut g = layout(HardwareSpec::new(1, 6, 1), &[1, 2, 3]);
    let s3 = Instruction::S3 { trap: 0, dir: ShiftDir::Left, indices: vec![1, 2, 3] };
    isa::apply(&s3, &mut g).unwrap();
    assert_eq!((0..3).map(|q| g.mapping.position_of(q).unwrap()).collect::<Vec<_>>(), vec![0, 1, 2]);
    let blocked = Instruction::S3 { trap: 0, dir: ShiftDir::Left, indices: vec![0, 1] };
    assert_eq!(rules(&blocked, &g), vec!["outside trap"]);
}

#[test]
fn jt_shift_needs_vacant_target_before_the_transfer() {
    // junction 0 of a 1x1 grid: W = trap 0 high end, N = trap 2 high end (L=3 -> slots 2 and 8)
    let topo = Topology::build(&HardwareSpec::new(1, 3, 1)).unwrap();
    let w = topo.leg_position(0, Leg::West).unwrap();
    let n = topo.leg_position(0, Leg::North).unwrap();
    let e = topo.leg_position(0, Leg::East).unwrap();
    let g = layout(HardwareSpec::new(1, 3, 1), &[w, n]);
    let chain = Instruction::JtSimd { class: JTClass::Shift { from: Leg::West, to: Leg::North }, junctions: vec![0] };
    assert_eq!(rules(&chain, &g), vec!["destination occupied"]);
    let swap = Instruction::JtSimd { class: JTClass::swap(Leg::West, Leg::North), junctions: vec![0] };
    let mut g2 = g.clone();
    isa::apply(&swap, &mut g2).unwrap();
    assert_eq!(g2.mapping.position_of(0), Some(n));
    assert_eq!(g2.mapping.position_of(1), Some(w));
    let to_east = Instruction::JtSimd { class: JTClass::Shift { from: Leg::North, to: Leg::East }, junctions: vec![0] };
    isa::apply(&to_east, &mut g2).unwrap();
    assert_eq!(g2.mapping.position_of(0), Some(e));
}

proptest! {
    // A width-k S3 equals k scalar shifts applied head first.
    #[test]
    fn s3_equals_composed_shifts(l in 3usize..9, start in 0usize..8, len in 1usize..8, right in any::<bool>(), extra in prop::collection::vec(0usize..9, 0..4)) {
        prop_assume!(start + len <= l);
        let dir = if right { ShiftDir::Right } else { ShiftDir::Left };
        let mut occupied: Vec<usize> = (start..start + len).collect();
        for e in extra { if e < l && !occupied.contains(&e) { occupied.push(e); } }
        let g = layout(HardwareSpec::new(1, l, 1), &occupied);
        let s3 = Instruction::S3 { trap: 0, dir, indices: (start..start + len).collect() };
        let mut grouped = g.clone();
        let res = isa::apply(&s3, &mut grouped);
        let mut scalar = g.clone();
        let mut order: Vec<usize> = (start..start + len).collect();
        if right { order.reverse(); }
        let mut ok = true;
        for i in order {
            let Some(j) = dir.step(i).filter(|&j| j < l) else { ok = false; break };
            if isa::apply(&Instruction::IntraShift { trap: 0, src: i, dst: j }, &mut scalar).is_err() { ok = false; break; }
        }
        prop_assert_eq!(res.is_ok(), ok);
        if ok {
            prop_assert_eq!(grouped.mapping, scalar.mapping);
        }
    }

    // Applying any legal transport keeps the mapping a bijection with the same qubit count.
    #[test]
    fn apply_preserves_occupancy(seed in any::<u64>(), k in 0usize..40) {
        use rand::{Rng, SeedableRng, seq::SliceRandom};
        let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let topo = Arc::new(Topology::build(&HardwareSpec::new(2, 3, 1)).unwrap());
        let mut slots: Vec<usize> = (0..topo.num_positions()).collect();
        slots.shuffle(&mut r);
        let n = r.gen_range(1..topo.num_positions());
        let mut m = QubitMapping::new(topo.num_positions(), n);
        for q in 0..n { m.place(q, slots[q]).unwrap(); }
        let mut g = PositionGraph::with_mapping(topo.clone(), m);
        for _ in 0..k {
            let instr = match r.gen_range(0..3) {
                0 => { let i = r.gen_range(0..2); Instruction::IntraSwap { trap: r.gen_range(0..topo.num_traps()), index: i } }
                1 => { let i = r.gen_range(0..3); let dir = if r.gen_bool(0.5) { ShiftDir::Left } else { ShiftDir::Right };
                       Instruction::S3 { trap: r.gen_range(0..topo.num_traps()), dir, indices: vec![i] } }
                _ => { let classes = enumerate_jt_classes(); Instruction::JtSimd { class: classes[r.gen_range(0..18)], junctions: vec![r.gen_range(0..4)] } }
            };
            let before = g.mapping.clone();
            match isa::apply(&instr, &mut g) {
                Ok(()) => {
                    prop_assert!(g.mapping.is_consistent());
                    prop_assert_eq!(g.mapping.placed().count(), n);
                }
                Err(_) => prop_assert_eq!(&g.mapping, &before),
            }
        }
    }
}
