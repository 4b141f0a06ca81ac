use std::collections::BTreeSet;
use std::sync::Arc;

use fluxtrap_core::aggregation::{aggregate_jt, aggregate_s3, PlanInput};
use fluxtrap_core::arch::{HardwareSpec, PositionGraph, QubitMapping, Topology};
use fluxtrap_core::circuit::{gen_random, DependencyDag};
use fluxtrap_core::heuristic::{HeuristicConfig, PlanningModel, Term, ZoneAssignment};
use fluxtrap_core::isa::{self, moves, Instruction, Move, ShiftDir};
use fluxtrap_core::scenarios::contended_vacancy;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn touched(instr: &Instruction, topo: &Topology) -> Vec<usize> {
    moves(instr, topo)
        .unwrap()
        .into_iter()
        .flat_map(|m| match m {
            Move::Shift { from, to } => [from, to],
            Move::Swap { a, b } => [a, b],
        })
        .collect()
}

struct Instance {
    graph: PositionGraph,
    model: PlanningModel<f64>,
    reserved: Vec<bool>,
    engaged: Vec<bool>,
}

fn random_instance(seed: u64) -> Instance {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let d = r.gen_range(1..=2);
    let l = r.gen_range(2..=8);
    let nz = r.gen_range(1..=l.min(2));
    let topo = Arc::new(Topology::build(&HardwareSpec::new(d, l, nz)).unwrap());
    let n = r.gen_range(1..=topo.num_positions().min(14));
    let mut slots: Vec<usize> = (0..topo.num_positions()).collect();
    slots.shuffle(&mut r);
    let mut m = QubitMapping::new(topo.num_positions(), n);
    for q in 0..n {
        m.place(q, slots[q]).unwrap();
    }
    let graph = PositionGraph::with_mapping(topo.clone(), m);
    let circuit = gen_random(n, r.gen_range(1..30), seed);
    let dag = DependencyDag::build(&circuit);
    let engaged_set: BTreeSet<usize> = (0..n).filter(|_| r.gen_bool(0.15)).collect();
    let mut asg = ZoneAssignment::new();
    let model = PlanningModel::build(&graph, &circuit, &dag, &engaged_set, &BTreeSet::new(), &mut asg, &HeuristicConfig::default(), 0);
    let mut reserved = vec![false; topo.num_positions()];
    let mut engaged = vec![false; n];
    for &q in &engaged_set {
        engaged[q] = true;
        reserved[graph.mapping.position_of(q).unwrap()] = true;
    }
    Instance { graph, model, reserved, engaged }
}

#[test]
fn contended_vacancy_keeps_the_cheaper_branch() {
    let sc = contended_vacancy();
    let g = sc.graph().unwrap();
    let topo = g.topology();
    let zone = topo.pos_at(0, 3);
    // Every gate targets the same empty zone so zone loads play no part.
    let terms = (0..5).map(|q| Term { gate: q, qubits: vec![q], zone, two_qubit: false, next: false }).collect();
    let model = PlanningModel::from_terms(terms, 5, 0.3, 0.5);
    let reserved = vec![false; topo.num_positions()];
    let engaged = vec![false; 5];
    let plan = aggregate_s3(&PlanInput { graph: &g, model: &model, reserved: &reserved, engaged: &engaged });
    assert_eq!(plan.contended_slots, 1);
    assert_eq!(plan.branches, 2);
    assert_eq!(plan.instructions, vec![Instruction::S3 { trap: 0, dir: ShiftDir::Right, indices: vec![0, 1, 2] }]);
    assert_eq!(plan.cost_before - plan.cost_after, 3.0);
    // The losing branch {3, 4} would only gain 2.
    let mut alt = g.mapping.clone();
    alt.shift(topo.pos_at(0, 4), topo.pos_at(0, 3));
    alt.shift(topo.pos_at(0, 5), topo.pos_at(0, 4));
    assert_eq!(model.gain(topo, &g.mapping, &alt), 2.0);
}

#[test]
fn s3_plans_are_legal_disjoint_and_never_worse() {
    let mut contended = 0;
    for seed in 0..200 {
        let inst = random_instance(seed);
        let inp = PlanInput { graph: &inst.graph, model: &inst.model, reserved: &inst.reserved, engaged: &inst.engaged };
        let plan = aggregate_s3(&inp);
        let topo = inst.graph.topology();
        assert!(plan.branches <= 2 * plan.contended_slots, "seed {seed}");
        contended += plan.contended_slots;
        assert!(plan.cost_after <= plan.cost_before, "seed {seed}");
        let mut g = inst.graph.clone();
        let mut seen = BTreeSet::new();
        for instr in &plan.instructions {
            assert!(matches!(instr, Instruction::S3 { .. } | Instruction::IntraSwap { .. }), "seed {seed}: {instr:?}");
            isa::validate(instr, &g).unwrap_or_else(|v| panic!("seed {seed}: {instr:?} {v:?}"));
            let mine: BTreeSet<usize> = touched(instr, topo).into_iter().collect();
            for &p in &mine {
                assert!(!inst.reserved[p], "seed {seed}: reserved slot {p} touched");
                assert!(seen.insert(p), "seed {seed}: slot {p} used by two instructions");
            }
            isa::apply(instr, &mut g).unwrap();
        }
        assert_eq!(g.mapping, plan.mapping, "seed {seed}");
        assert_eq!(inst.model.score(topo, &plan.mapping), plan.cost_after, "seed {seed}");
        for q in (0..inst.engaged.len()).filter(|&q| inst.engaged[q]) {
            assert_eq!(g.mapping.position_of(q), inst.graph.mapping.position_of(q));
        }
    }
    assert!(contended > 0, "no contended vacancy exercised");
}

#[test]
fn jt_candidates_cover_all_classes() {
    for seed in 0..200 {
        let inst = random_instance(seed);
        let inp = PlanInput { graph: &inst.graph, model: &inst.model, reserved: &inst.reserved, engaged: &inst.engaged };
        let plan = aggregate_jt(&inp);
        let topo = inst.graph.topology();
        assert_eq!(plan.candidates.len(), 18);
        for c in &plan.candidates {
            if c.junctions.is_empty() {
                continue;
            }
            let instr = c.instruction();
            isa::validate(&instr, &inst.graph).unwrap_or_else(|v| panic!("seed {seed}: {instr:?} {v:?}"));
            assert!(touched(&instr, topo).iter().all(|&p| !inst.reserved[p]));
        }
        match plan.best_candidate() {
            Some(b) => {
                assert!(plan.cost_after < plan.cost_before);
                assert!(plan.candidates.iter().all(|c| c.junctions.is_empty() || c.cost >= b.cost));
                let mut g = inst.graph.clone();
                isa::apply(&b.instruction(), &mut g).unwrap();
                assert_eq!(g.mapping, plan.mapping);
            }
            None => assert_eq!(plan.cost_after, plan.cost_before),
        }
    }
}
