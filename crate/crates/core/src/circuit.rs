//! Circuits, the dependency DAG and benchmark generators.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arch::Qubit;

pub const ONE_QUBIT_GATES: [&str; 11] = ["h", "x", "y", "z", "rx", "ry", "rz", "t", "tdg", "s", "sdg"];
pub const TWO_QUBIT_GATES: [&str; 3] = ["cx", "cz", "rzz"];
const PARAM_GATES: [&str; 4] = ["rx", "ry", "rz", "rzz"];

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown gate {name:?}")]
    UnknownGate { line: usize, name: String },
    #[error("circuit json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("gate {0} is not in the front layer")]
    NotInFront(usize),
    #[error("infeasible benchmark: {0}")]
    Infeasible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpClass {
    OneQubit,
    TwoQubit,
    Measure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Op {
    pub kind: String,
    #[serde(rename = "q")]
    pub qubits: Vec<Qubit>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<f64>,
}

impl Op {
    pub fn new(kind: &str, qubits: &[Qubit]) -> Self {
        Op { kind: kind.to_string(), qubits: qubits.to_vec(), param: None }
    }

    pub fn with_param(kind: &str, qubits: &[Qubit], param: f64) -> Self {
        Op { kind: kind.to_string(), qubits: qubits.to_vec(), param: Some(param) }
    }

    pub fn class(&self) -> Option<OpClass> {
        let k = self.kind.as_str();
        if k == "measure" {
            Some(OpClass::Measure)
        } else if ONE_QUBIT_GATES.contains(&k) {
            Some(OpClass::OneQubit)
        } else if TWO_QUBIT_GATES.contains(&k) {
            Some(OpClass::TwoQubit)
        } else {
            None
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        self.class() == Some(OpClass::TwoQubit)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n: usize,
    pub ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n: usize) -> Self {
        Circuit { n, ops: Vec::new() }
    }

    pub fn push(&mut self, op: Op) {
        self.ops.push(op);
    }

    pub fn validate(&self) -> Result<(), CircuitError> {
        for (i, op) in self.ops.iter().enumerate() {
            let class = op
                .class()
                .ok_or_else(|| CircuitError::Invalid(format!("op {i}: unknown gate {:?}", op.kind)))?;
            let arity = if class == OpClass::TwoQubit { 2 } else { 1 };
            if op.qubits.len() != arity {
                return Err(CircuitError::Invalid(format!("op {i}: {} takes {arity} qubit(s)", op.kind)));
            }
            if op.qubits.iter().any(|&q| q >= self.n) {
                return Err(CircuitError::Invalid(format!("op {i}: qubit out of range")));
            }
            if arity == 2 && op.qubits[0] == op.qubits[1] {
                return Err(CircuitError::Invalid(format!("op {i}: repeated qubit")));
            }
        }
        Ok(())
    }

    pub fn count(&self, class: OpClass) -> usize {
        self.ops.iter().filter(|o| o.class() == Some(class)).count()
    }

    pub fn from_json(text: &str) -> Result<Self, CircuitError> {
        let c: Circuit = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    QasmSubset,
}

pub fn parse_circuit(text: &str, format: Format) -> Result<Circuit, CircuitError> {
    match format {
        Format::Json => Circuit::from_json(text),
        Format::QasmSubset => parse_qasm(text),
    }
}

fn syntax(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Syntax { line, msg: msg.into() }
}

/// OpenQASM 2 subset: qreg/creg declarations, the supported gate names and measure.
pub fn parse_qasm(text: &str) -> Result<Circuit, CircuitError> {
    // Split into statements, remembering the line each starts on.
    let mut stmts: Vec<(usize, String)> = Vec::new();
    let mut cur = String::new();
    let mut start = 1;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split("//").next().unwrap_or("");
        for ch in line.chars() {
            if cur.trim().is_empty() {
                start = ln + 1;
            }
            if ch == ';' {
                stmts.push((start, cur.trim().to_string()));
                cur.clear();
            } else {
                cur.push(ch);
            }
        }
        cur.push(' ');
    }
    if !cur.trim().is_empty() {
        return Err(syntax(start, "missing ';'"));
    }

    let mut regs: Vec<(String, usize, usize)> = Vec::new();
    let mut n = 0;
    let mut ops = Vec::new();
    for (line, s) in stmts {
        if s.is_empty() {
            continue;
        }
        let (head, rest) = match s.find(|c: char| c.is_whitespace() || c == '(') {
            Some(i) => (&s[..i], s[i..].trim()),
            None => (s.as_str(), ""),
        };
        match head {
            "OPENQASM" | "include" | "creg" => continue,
            "qreg" => {
                let (name, size) = parse_ref(rest, line)?;
                regs.push((name, n, size));
                n += size;
                continue;
            }
            "measure" => {
                let target = rest.split("->").next().unwrap_or("").trim();
                for q in parse_operand(target, &regs, line)? {
                    ops.push(Op::new("measure", &[q]));
                }
                continue;
            }
            _ => {}
        }
        let (param, args) = if rest.starts_with('(') {
            let close = rest.find(')').ok_or_else(|| syntax(line, "unclosed parameter list"))?;
            let v = eval_expr(&rest[1..close]).ok_or_else(|| syntax(line, "bad parameter"))?;
            (Some(v), rest[close + 1..].trim())
        } else {
            (None, rest)
        };
        let class = Op::new(head, &[]).class();
        let arity = match class {
            Some(OpClass::OneQubit) => 1,
            Some(OpClass::TwoQubit) => 2,
            _ => return Err(CircuitError::UnknownGate { line, name: head.to_string() }),
        };
        if PARAM_GATES.contains(&head) != param.is_some() {
            return Err(syntax(line, format!("parameter mismatch for {head}")));
        }
        if arity == 1 && !args.contains('[') {
            // Whole-register application of a one-qubit gate.
            for q in parse_operand(args, &regs, line)? {
                ops.push(Op { kind: head.to_string(), qubits: vec![q], param });
            }
            continue;
        }
        let qs = parse_args(args, &regs, line)?;
        if qs.len() != arity {
            return Err(syntax(line, format!("{head} takes {arity} qubit(s)")));
        }
        ops.push(Op { kind: head.to_string(), qubits: qs, param });
    }
    let c = Circuit { n, ops };
    c.validate()?;
    Ok(c)
}

fn parse_ref(s: &str, line: usize) -> Result<(String, usize), CircuitError> {
    let open = s.find('[').ok_or_else(|| syntax(line, "expected '['"))?;
    let close = s.find(']').ok_or_else(|| syntax(line, "expected ']'"))?;
    let name = s[..open].trim().to_string();
    let idx = s[open + 1..close].trim().parse().map_err(|_| syntax(line, "bad index"))?;
    if name.is_empty() || !s[close + 1..].trim().is_empty() {
        return Err(syntax(line, format!("bad register reference {s:?}")));
    }
    Ok((name, idx))
}

/// A single `name[i]` or a bare register name, expanded to all its qubits.
fn parse_operand(s: &str, regs: &[(String, usize, usize)], line: usize) -> Result<Vec<Qubit>, CircuitError> {
    if s.contains('[') || s.contains(',') {
        return parse_args(s, regs, line);
    }
    let (_, base, size) = regs
        .iter()
        .find(|r| r.0 == s)
        .ok_or_else(|| syntax(line, format!("unknown register {s:?}")))?;
    Ok((*base..base + size).collect())
}

fn parse_args(s: &str, regs: &[(String, usize, usize)], line: usize) -> Result<Vec<Qubit>, CircuitError> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let (name, idx) = parse_ref(part.trim(), line)?;
        let (_, base, size) = regs
            .iter()
            .find(|r| r.0 == name)
            .ok_or_else(|| syntax(line, format!("unknown register {name:?}")))?;
        if idx >= *size {
            return Err(syntax(line, format!("index {idx} out of range for {name}")));
        }
        out.push(base + idx);
    }
    Ok(out)
}

/// Arithmetic over numbers and `pi` with + - * / and parentheses.
fn eval_expr(s: &str) -> Option<f64> {
    let toks: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0;
    let v = expr(&toks, &mut pos)?;
    (pos == toks.len()).then_some(v)
}

fn expr(t: &[char], p: &mut usize) -> Option<f64> {
    let mut v = term(t, p)?;
    while *p < t.len() && (t[*p] == '+' || t[*p] == '-') {
        let op = t[*p];
        *p += 1;
        let r = term(t, p)?;
        v = if op == '+' { v + r } else { v - r };
    }
    Some(v)
}

fn term(t: &[char], p: &mut usize) -> Option<f64> {
    let mut v = factor(t, p)?;
    while *p < t.len() && (t[*p] == '*' || t[*p] == '/') {
        let op = t[*p];
        *p += 1;
        let r = factor(t, p)?;
        v = if op == '*' { v * r } else { v / r };
    }
    Some(v)
}

fn factor(t: &[char], p: &mut usize) -> Option<f64> {
    match t.get(*p)? {
        '-' => {
            *p += 1;
            factor(t, p).map(|v| -v)
        }
        '(' => {
            *p += 1;
            let v = expr(t, p)?;
            (t.get(*p) == Some(&')')).then(|| *p += 1)?;
            Some(v)
        }
        'p' => {
            (t.get(*p + 1) == Some(&'i')).then_some(())?;
            *p += 2;
            Some(std::f64::consts::PI)
        }
        _ => {
            let start = *p;
            while *p < t.len() && (t[*p].is_ascii_digit() || t[*p] == '.' || t[*p] == 'e') {
                *p += 1;
            }
            t[start..*p].iter().collect::<String>().parse().ok()
        }
    }
}

/// Strict per-qubit program-order dependencies with a maintained front layer.
#[derive(Debug, Clone)]
pub struct DependencyDag {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
    pending: Vec<usize>,
    done: Vec<bool>,
    front: BTreeSet<usize>,
    remaining: usize,
}

impl DependencyDag {
    pub fn build(c: &Circuit) -> Self {
        let n = c.ops.len();
        let mut last: Vec<Option<usize>> = vec![None; c.n];
        let mut preds = vec![Vec::new(); n];
        let mut succs = vec![Vec::new(); n];
        for (i, op) in c.ops.iter().enumerate() {
            for &q in &op.qubits {
                if let Some(p) = last[q] {
                    if !preds[i].contains(&p) {
                        preds[i].push(p);
                        succs[p].push(i);
                    }
                }
                last[q] = Some(i);
            }
        }
        let pending: Vec<usize> = preds.iter().map(Vec::len).collect();
        let front = (0..n).filter(|&i| pending[i] == 0).collect();
        DependencyDag { preds, succs, pending, done: vec![false; n], front, remaining: n }
    }

    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn front(&self) -> &BTreeSet<usize> {
        &self.front
    }

    pub fn preds(&self, g: usize) -> &[usize] {
        &self.preds[g]
    }

    pub fn succs(&self, g: usize) -> &[usize] {
        &self.succs[g]
    }

    pub fn edge_count(&self) -> usize {
        self.preds.iter().map(Vec::len).sum()
    }

    pub fn is_done(&self, g: usize) -> bool {
        self.done[g]
    }

    pub fn remaining(&self) -> usize {
        self.remaining
    }

    pub fn complete_gate(&mut self, g: usize) -> Result<(), CircuitError> {
        if !self.front.remove(&g) {
            return Err(CircuitError::NotInFront(g));
        }
        self.done[g] = true;
        self.remaining -= 1;
        for &s in &self.succs[g] {
            self.pending[s] -= 1;
            if self.pending[s] == 0 {
                self.front.insert(s);
            }
        }
        Ok(())
    }

    /// Unfinished gates with their depth below the front layer (front = 0), in program order.
    pub fn levels(&self) -> Vec<(usize, usize)> {
        let mut level = vec![0usize; self.len()];
        let mut out = Vec::with_capacity(self.remaining);
        for g in 0..self.len() {
            if self.done[g] {
                continue;
            }
            let l = self.preds[g].iter().filter(|&&p| !self.done[p]).map(|&p| level[p] + 1).max().unwrap_or(0);
            level[g] = l;
            out.push((g, l));
        }
        out
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn angle(r: &mut ChaCha8Rng) -> f64 {
    // Rounded so JSON round-trips are exact and easy to read.
    (r.gen_range(0.0..std::f64::consts::TAU) * 1e6).round() / 1e6
}

/// Random 3-regular graph by the configuration model with rejection.
pub fn random_3_regular(n: usize, seed: u64) -> Result<Vec<(usize, usize)>, CircuitError> {
    if n < 4 || n % 2 == 1 {
        return Err(CircuitError::Infeasible(format!("3-regular graph needs even n >= 4, got {n}")));
    }
    let mut r = rng(seed);
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(&mut r);
        let mut edges: Vec<(usize, usize)> =
            stubs.chunks(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        if edges.iter().any(|&(a, b)| a == b) {
            continue;
        }
        edges.sort_unstable();
        if edges.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        return Ok(edges);
    }
}

/// Single-layer QAOA on a random 3-regular graph.
pub fn gen_qaoa(n: usize, seed: u64) -> Result<Circuit, CircuitError> {
    let edges = random_3_regular(n, seed)?;
    let mut r = rng(seed ^ 0x9e37_79b9);
    let gamma = angle(&mut r);
    let beta = angle(&mut r);
    let mut c = Circuit::new(n);
    for q in 0..n {
        c.push(Op::new("h", &[q]));
    }
    for (a, b) in edges {
        c.push(Op::with_param("rzz", &[a, b], gamma));
    }
    for q in 0..n {
        c.push(Op::with_param("rx", &[q], beta));
    }
    for q in 0..n {
        c.push(Op::new("measure", &[q]));
    }
    Ok(c)
}

/// Bernstein-Vazirani with a balanced random secret on `n - 1` data qubits; the last qubit is the ancilla.
pub fn gen_bv(n: usize, seed: u64) -> Result<Circuit, CircuitError> {
    if n < 2 {
        return Err(CircuitError::Infeasible(format!("bv needs n >= 2, got {n}")));
    }
    let data = n - 1;
    let mut secret = vec![false; data];
    let ones = data.div_ceil(2);
    secret[..ones].iter_mut().for_each(|b| *b = true);
    secret.shuffle(&mut rng(seed));
    let anc = n - 1;
    let mut c = Circuit::new(n);
    c.push(Op::new("x", &[anc]));
    for q in 0..n {
        c.push(Op::new("h", &[q]));
    }
    for (q, &bit) in secret.iter().enumerate() {
        if bit {
            c.push(Op::new("cx", &[q, anc]));
        }
    }
    for q in 0..data {
        c.push(Op::new("h", &[q]));
    }
    for q in 0..data {
        c.push(Op::new("measure", &[q]));
    }
    Ok(c)
}

fn ccx(c: &mut Circuit, a: usize, b: usize, t: usize) {
    c.push(Op::new("h", &[t]));
    c.push(Op::new("cx", &[b, t]));
    c.push(Op::new("tdg", &[t]));
    c.push(Op::new("cx", &[a, t]));
    c.push(Op::new("t", &[t]));
    c.push(Op::new("cx", &[b, t]));
    c.push(Op::new("tdg", &[t]));
    c.push(Op::new("cx", &[a, t]));
    c.push(Op::new("t", &[b]));
    c.push(Op::new("t", &[t]));
    c.push(Op::new("h", &[t]));
    c.push(Op::new("cx", &[a, b]));
    c.push(Op::new("t", &[a]));
    c.push(Op::new("tdg", &[b]));
    c.push(Op::new("cx", &[a, b]));
}

/// Cuccaro ripple-carry adder on two floor((n-2)/2)-bit registers.
///
/// Qubit 0 is the carry-in, `b_i = 2i + 1`, `a_i = 2i + 2`, the carry-out follows `a_{bits-1}`.
pub fn gen_rca(n: usize) -> Result<Circuit, CircuitError> {
    if n < 4 {
        return Err(CircuitError::Infeasible(format!("rca needs n >= 4, got {n}")));
    }
    let bits = (n - 2) / 2;
    let b = |i: usize| 2 * i + 1;
    let a = |i: usize| 2 * i + 2;
    let z = 2 * bits + 1;
    let mut c = Circuit::new(n);
    let carry = |i: usize| if i == 0 { 0 } else { a(i - 1) };
    for i in 0..bits {
        // MAJ(c, b, a)
        c.push(Op::new("cx", &[a(i), b(i)]));
        c.push(Op::new("cx", &[a(i), carry(i)]));
        ccx(&mut c, carry(i), b(i), a(i));
    }
    c.push(Op::new("cx", &[a(bits - 1), z]));
    for i in (0..bits).rev() {
        // UMA(c, b, a)
        ccx(&mut c, carry(i), b(i), a(i));
        c.push(Op::new("cx", &[a(i), carry(i)]));
        c.push(Op::new("cx", &[carry(i), b(i)]));
    }
    for i in 0..bits {
        c.push(Op::new("measure", &[b(i)]));
    }
    c.push(Op::new("measure", &[z]));
    Ok(c)
}

/// Hardware-agnostic full-entanglement ansatz: RY/RZ layer then CX on every pair i < j.
pub fn gen_vqe(n: usize, layers: usize, seed: u64) -> Result<Circuit, CircuitError> {
    if n < 2 || layers < 1 {
        return Err(CircuitError::Infeasible(format!("vqe needs n >= 2 and layers >= 1, got {n}/{layers}")));
    }
    let mut r = rng(seed);
    let mut c = Circuit::new(n);
    for _ in 0..layers {
        for q in 0..n {
            c.push(Op::with_param("ry", &[q], angle(&mut r)));
            c.push(Op::with_param("rz", &[q], angle(&mut r)));
        }
        for i in 0..n {
            for j in i + 1..n {
                c.push(Op::new("cx", &[i, j]));
            }
        }
    }
    for q in 0..n {
        c.push(Op::new("measure", &[q]));
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchKind {
    Qaoa,
    Rca,
    Bv,
    Vqe,
}

impl BenchKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchKind::Qaoa => "qaoa",
            BenchKind::Rca => "rca",
            BenchKind::Bv => "bv",
            BenchKind::Vqe => "vqe",
        }
    }
}

/// Generator dispatch with default depth: QAOA p=1, VQE one layer.
pub fn generate(kind: BenchKind, n: usize, seed: u64) -> Result<Circuit, CircuitError> {
    match kind {
        BenchKind::Qaoa => gen_qaoa(n, seed),
        BenchKind::Rca => gen_rca(n),
        BenchKind::Bv => gen_bv(n, seed),
        BenchKind::Vqe => gen_vqe(n, 1, seed),
    }
}

/// Random circuit over the supported gate set, for property tests and fuzzing.
pub fn gen_random(n: usize, gates: usize, seed: u64) -> Circuit {
    let mut r = rng(seed);
    let mut c = Circuit::new(n);
    for _ in 0..gates {
        let roll = r.gen_range(0..10);
        if n >= 2 && roll < 5 {
            let a = r.gen_range(0..n);
            let mut b = r.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            c.push(Op::new(TWO_QUBIT_GATES[r.gen_range(0..2)], &[a, b]));
        } else if roll < 9 {
            c.push(Op::new(ONE_QUBIT_GATES[r.gen_range(0..ONE_QUBIT_GATES.len())], &[r.gen_range(0..n)]));
        } else {
            c.push(Op::new("measure", &[r.gen_range(0..n)]));
        }
    }
    c
}
