//! Kripke semantics for intuitionistic propositional logic.
//!
//! Models are finite posets with persistent valuations. The accessibility
//! order is stored via immediate-successor lists ("above" the node); forcing
//! is computed column-wise over a subformula closure, one bit per world.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::BitVec;
use crate::budget::{BudgetExhausted, StepMeter};
use crate::formula::{closure, Closure, FormulaId, Node, Store};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("node {node}: successor {succ} out of range")]
    BadSuccessor { node: usize, succ: usize },
    #[error("accessibility relation has a cycle through node {node}")]
    Cycle { node: usize },
    #[error("persistence fails: node {node} forces an atom its successor {succ} does not")]
    NotPersistent { node: usize, succ: usize },
    #[error("node {node}: atom x{atom} out of range for n={n}")]
    AtomOutOfRange { node: usize, atom: u16, n: u16 },
    #[error("formula mentions atom x{atom} but the model only interprets n={n}")]
    FormulaAtomOutOfRange { atom: u16, n: u16 },
    #[error("model has no nodes")]
    Empty,
}

/// One world: the atoms it forces and the worlds immediately above it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelNode {
    pub val: Vec<u16>,
    pub succ: Vec<usize>,
}

/// A finite intuitionistic Kripke model over atoms `x1..xn`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KripkeModel {
    pub n: u16,
    pub nodes: Vec<ModelNode>,
}

impl KripkeModel {
    /// Build and validate. Valuations are sorted and deduplicated.
    pub fn new(n: u16, nodes: Vec<ModelNode>) -> Result<Self, ModelError> {
        let mut model = KripkeModel { n, nodes };
        for node in &mut model.nodes {
            node.val.sort_unstable();
            node.val.dedup();
            node.succ.sort_unstable();
            node.succ.dedup();
        }
        model.validate()?;
        Ok(model)
    }

    pub fn world_count(&self) -> usize {
        self.nodes.len()
    }

    fn val_mask(&self, w: usize) -> u64 {
        self.nodes[w]
            .val
            .iter()
            .fold(0u64, |m, &a| m | 1 << (a - 1))
    }

    /// Check well-formedness and return the reflexive-transitive up-set of
    /// every world as a bit mask over worlds.
    pub fn validate(&self) -> Result<Vec<BitVec>, ModelError> {
        let count = self.nodes.len();
        if count == 0 {
            return Err(ModelError::Empty);
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for &s in &node.succ {
                if s >= count {
                    return Err(ModelError::BadSuccessor { node: i, succ: s });
                }
                if s == i {
                    return Err(ModelError::Cycle { node: i });
                }
            }
            for &a in &node.val {
                if a == 0 || a > self.n {
                    return Err(ModelError::AtomOutOfRange {
                        node: i,
                        atom: a,
                        n: self.n,
                    });
                }
            }
        }
        // Iterative DFS; colors: 0 fresh, 1 on stack, 2 finished.
        let mut color = vec![0u8; count];
        let mut up: Vec<BitVec> = vec![BitVec::zeros(count); count];
        for start in 0..count {
            if color[start] != 0 {
                continue;
            }
            let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
            color[start] = 1;
            while let Some(&mut (w, ref mut next)) = stack.last_mut() {
                if *next < self.nodes[w].succ.len() {
                    let s = self.nodes[w].succ[*next];
                    *next += 1;
                    match color[s] {
                        0 => {
                            color[s] = 1;
                            stack.push((s, 0));
                        }
                        1 => return Err(ModelError::Cycle { node: s }),
                        _ => {}
                    }
                } else {
                    let mut mask = BitVec::zeros(count);
                    mask.set(w, true);
                    for &s in &self.nodes[w].succ {
                        mask.or_assign(&up[s]);
                    }
                    up[w] = mask;
                    color[w] = 2;
                    stack.pop();
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let vm = self.val_mask(i);
            for &s in &node.succ {
                if vm & !self.val_mask(s) != 0 {
                    return Err(ModelError::NotPersistent { node: i, succ: s });
                }
            }
        }
        Ok(up)
    }

    /// GraphViz rendering; edges point from a world to its covers.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph model {\n  rankdir=BT;\n  node [shape=box];\n");
        for (i, node) in self.nodes.iter().enumerate() {
            let atoms = if node.val.is_empty() {
                "{}".to_string()
            } else {
                node.val
                    .iter()
                    .map(|a| format!("x{a}"))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            out.push_str(&format!("  w{i} [label=\"w{i}: {atoms}\"];\n"));
        }
        for (i, node) in self.nodes.iter().enumerate() {
            for &s in &node.succ {
                out.push_str(&format!("  w{i} -> w{s};\n"));
            }
        }
        out.push_str("}\n");
        out
    }
}

/// Forcing of every closure member at every world, column per member.
pub struct ForcingTable {
    pub closure: Closure,
    pub worlds: usize,
    columns: Vec<BitVec>,
}

impl ForcingTable {
    pub fn build(store: &Store, model: &KripkeModel, root: FormulaId) -> Result<Self, ModelError> {
        let up = model.validate()?;
        let c = closure(store, root);
        for &(_, a) in &c.atoms {
            if a > model.n {
                return Err(ModelError::FormulaAtomOutOfRange { atom: a, n: model.n });
            }
        }
        let worlds = model.world_count();
        let mut columns: Vec<BitVec> = Vec::with_capacity(c.width());
        for &m in &c.members {
            let col = match store.node(m) {
                Node::Bottom => BitVec::zeros(worlds),
                Node::Top => BitVec::ones(worlds),
                Node::Atom(a) => {
                    let mut col = BitVec::zeros(worlds);
                    for (w, node) in model.nodes.iter().enumerate() {
                        if node.val.contains(&a) {
                            col.set(w, true);
                        }
                    }
                    col
                }
                Node::And(a, b) => {
                    columns[c.pos(a).unwrap()].and(&columns[c.pos(b).unwrap()])
                }
                Node::Or(a, b) => columns[c.pos(a).unwrap()].or(&columns[c.pos(b).unwrap()]),
                Node::Implies(a, b) => {
                    let ca = &columns[c.pos(a).unwrap()];
                    let cb = &columns[c.pos(b).unwrap()];
                    let mut col = BitVec::zeros(worlds);
                    for w in 0..worlds {
                        if ca.masked_subset(&up[w], cb) {
                            col.set(w, true);
                        }
                    }
                    col
                }
            };
            columns.push(col);
        }
        Ok(ForcingTable {
            closure: c,
            worlds,
            columns,
        })
    }

    /// Worlds forcing `f`, if `f` belongs to the closure.
    pub fn column(&self, f: FormulaId) -> Option<&BitVec> {
        self.closure.pos(f).map(|p| &self.columns[p])
    }

    pub fn forces(&self, world: usize, f: FormulaId) -> Option<bool> {
        self.column(f).map(|col| col.get(world))
    }

    /// Closure members forced at `world`, one bit per closure position.
    pub fn type_of(&self, world: usize) -> BitVec {
        let mut t = BitVec::zeros(self.closure.width());
        for (p, col) in self.columns.iter().enumerate() {
            if col.get(world) {
                t.set(p, true);
            }
        }
        t
    }
}

/// A model together with a distinguished world refuting an entailment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Countermodel {
    pub model: KripkeModel,
    pub world: usize,
}

impl Countermodel {
    /// Confirm by direct forcing that `world` forces `phi` but not `psi`.
    pub fn verify(&self, store: &Store, phi: FormulaId, psi: FormulaId) -> Result<bool, ModelError> {
        let root = store.implies(phi, psi);
        let table = ForcingTable::build(store, &self.model, root)?;
        Ok(table.forces(self.world, phi).unwrap() && !table.forces(self.world, psi).unwrap())
    }
}

/// One labelled poset: strictly-above masks per point plus its up-sets.
#[derive(Clone, Debug)]
pub struct PosetShape {
    pub size: usize,
    pub above: Vec<u32>,
    pub upsets: Vec<u32>,
}

/// All labelled posets on 1..=max points, enumerated deterministically.
pub struct ModelBank {
    pub max_size: usize,
    pub by_size: Vec<Vec<PosetShape>>,
}

/// Enumeration is exhaustive over relation candidates, so sizes beyond this
/// are rejected rather than attempted.
pub const MAX_BANK_SIZE: usize = 5;

impl ModelBank {
    pub fn up_to(max_size: usize) -> ModelBank {
        assert!(
            (1..=MAX_BANK_SIZE).contains(&max_size),
            "model bank supports 1..={MAX_BANK_SIZE} points"
        );
        let mut by_size = Vec::with_capacity(max_size);
        for k in 1..=max_size {
            by_size.push(posets_of_size(k));
        }
        ModelBank {
            max_size,
            by_size,
        }
    }
}

fn posets_of_size(k: usize) -> Vec<PosetShape> {
    // Ordered pairs (i, j), i != j, in a fixed order; one candidate relation
    // per bit pattern. A candidate is kept iff strictly-above masks are
    // transitively closed, which also rules out antisymmetry violations.
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    let mut shapes = Vec::new();
    for pattern in 0u64..(1u64 << pairs.len()) {
        let mut above = vec![0u32; k];
        for (bit, &(i, j)) in pairs.iter().enumerate() {
            if pattern >> bit & 1 == 1 {
                above[i] |= 1 << j;
            }
        }
        let transitive = (0..k).all(|i| {
            let mut reach = above[i];
            let mut rest = above[i];
            while rest != 0 {
                let j = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                reach |= above[j];
            }
            reach == above[i]
        });
        if !transitive {
            continue;
        }
        let mut upsets = Vec::new();
        'subsets: for s in 0u32..(1 << k) {
            for i in 0..k {
                if s >> i & 1 == 1 && above[i] & !s != 0 {
                    continue 'subsets;
                }
            }
            upsets.push(s);
        }
        shapes.push(PosetShape {
            size: k,
            above,
            upsets,
        });
    }
    shapes
}

fn covers_of(above: &[u32], i: usize) -> Vec<usize> {
    let mut covers = Vec::new();
    let mut rest = above[i];
    while rest != 0 {
        let j = rest.trailing_zeros() as usize;
        rest &= rest - 1;
        let mut intermediate = above[i];
        let mut is_cover = true;
        while intermediate != 0 {
            let m = intermediate.trailing_zeros() as usize;
            intermediate &= intermediate - 1;
            if m != j && above[m] >> j & 1 == 1 {
                is_cover = false;
                break;
            }
        }
        if is_cover {
            covers.push(j);
        }
    }
    covers
}

/// Exhaustive countermodel search for `phi |- psi` over all models with at
/// most `max_nodes` worlds and all persistent valuations of the atoms that
/// occur in the formulas. Returns the first refuting world in enumeration
/// order, or `None` if every such model validates the entailment.
pub fn brute_countermodel(
    store: &Store,
    phi: FormulaId,
    psi: FormulaId,
    bank: &ModelBank,
    max_nodes: usize,
    meter: &mut StepMeter,
) -> Result<Option<Countermodel>, BudgetExhausted> {
    assert!(max_nodes <= bank.max_size, "bank too small for request");
    let root = store.implies(phi, psi);
    let c = closure(store, root);
    let phi_pos = c.pos(phi).unwrap();
    let psi_pos = c.pos(psi).unwrap();
    let atom_count = c.atoms.len();

    for shapes in bank.by_size[..max_nodes].iter() {
        for shape in shapes {
            let choices = shape.upsets.len();
            let mut pick = vec![0usize; atom_count];
            loop {
                if !meter.tick(1) {
                    return Err(BudgetExhausted {
                        phase: "brute countermodel search",
                        used: meter.used(),
                    });
                }
                let cols = force_small(store, &c, shape, |slot| shape.upsets[pick[slot]]);
                let refuting = cols[phi_pos] & !cols[psi_pos];
                if refuting != 0 {
                    let world = refuting.trailing_zeros() as usize;
                    let model = materialize(store, &c, shape, &pick);
                    let cm = Countermodel { model, world };
                    debug_assert!(cm.verify(store, phi, psi).unwrap());
                    return Ok(Some(cm));
                }
                // Advance the per-atom odometer, last slot fastest.
                let mut slot = atom_count;
                loop {
                    if slot == 0 {
                        break;
                    }
                    slot -= 1;
                    pick[slot] += 1;
                    if pick[slot] < choices {
                        break;
                    }
                    pick[slot] = 0;
                }
                if pick.iter().all(|&p| p == 0) {
                    break;
                }
                if atom_count == 0 {
                    break;
                }
            }
        }
    }
    Ok(None)
}

/// Forcing columns as world masks, for bank-sized models.
fn force_small(
    store: &Store,
    c: &Closure,
    shape: &PosetShape,
    atom_upset: impl Fn(usize) -> u32,
) -> Vec<u32> {
    let full: u32 = if shape.size == 32 {
        u32::MAX
    } else {
        (1 << shape.size) - 1
    };
    let slot_of = |atom: u16| c.atoms.iter().position(|&(_, a)| a == atom).unwrap();
    let mut cols = vec![0u32; c.width()];
    for (p, &m) in c.members.iter().enumerate() {
        cols[p] = match store.node(m) {
            Node::Bottom => 0,
            Node::Top => full,
            Node::Atom(a) => atom_upset(slot_of(a)),
            Node::And(a, b) => cols[c.pos(a).unwrap()] & cols[c.pos(b).unwrap()],
            Node::Or(a, b) => cols[c.pos(a).unwrap()] | cols[c.pos(b).unwrap()],
            Node::Implies(a, b) => {
                let ca = cols[c.pos(a).unwrap()];
                let cb = cols[c.pos(b).unwrap()];
                let mut col = 0u32;
                for w in 0..shape.size {
                    let up = shape.above[w] | 1 << w;
                    if up & ca & !cb == 0 {
                        col |= 1 << w;
                    }
                }
                col
            }
        };
    }
    cols
}

fn materialize(store: &Store, c: &Closure, shape: &PosetShape, pick: &[usize]) -> KripkeModel {
    let n = store.max_atom(c.root).max(1);
    let nodes = (0..shape.size)
        .map(|w| {
            let val = c
                .atoms
                .iter()
                .enumerate()
                .filter(|&(slot, _)| shape.upsets[pick[slot]] >> w & 1 == 1)
                .map(|(_, &(_, a))| a)
                .collect();
            ModelNode {
                val,
                succ: covers_of(&shape.above, w),
            }
        })
        .collect();
    KripkeModel::new(n, nodes).expect("bank shapes are valid posets")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::budget::Budgets;
    use crate::formula::parse;

    fn chain2(store: &Store) -> KripkeModel {
        // w0 below w1; x1 holds only at the top.
        let _ = store;
        KripkeModel::new(
            1,
            vec![
                ModelNode {
                    val: vec![],
                    succ: vec![1],
                },
                ModelNode {
                    val: vec![1],
                    succ: vec![],
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn forcing_on_a_two_chain() {
        let store = Store::new();
        let model = chain2(&store);
        let f = parse(&store, "~~x1 -> x1", 1).unwrap();
        let table = ForcingTable::build(&store, &model, f).unwrap();
        let x1 = store.atom(1);
        let nn = store.neg(store.neg(x1));
        assert!(!table.forces(0, x1).unwrap());
        assert!(table.forces(1, x1).unwrap());
        assert!(table.forces(0, nn).unwrap());
        assert!(!table.forces(0, f).unwrap());
        assert!(table.forces(1, f).unwrap());
    }

    #[test]
    fn validation_rejects_bad_models() {
        let mk = |nodes| KripkeModel::new(1, nodes);
        assert_eq!(mk(vec![]).unwrap_err(), ModelError::Empty);
        assert_eq!(
            mk(vec![ModelNode {
                val: vec![],
                succ: vec![3]
            }])
            .unwrap_err(),
            ModelError::BadSuccessor { node: 0, succ: 3 }
        );
        let cyclic = mk(vec![
            ModelNode {
                val: vec![],
                succ: vec![1],
            },
            ModelNode {
                val: vec![],
                succ: vec![0],
            },
        ]);
        assert!(matches!(cyclic.unwrap_err(), ModelError::Cycle { .. }));
        let leaky = mk(vec![
            ModelNode {
                val: vec![1],
                succ: vec![1],
            },
            ModelNode {
                val: vec![],
                succ: vec![],
            },
        ]);
        assert_eq!(
            leaky.unwrap_err(),
            ModelError::NotPersistent { node: 0, succ: 1 }
        );
    }

    #[test]
    fn poset_bank_has_known_sizes() {
        let bank = ModelBank::up_to(5);
        let counts: Vec<usize> = bank.by_size.iter().map(|s| s.len()).collect();
        assert_eq!(counts, [1, 3, 19, 219, 4231]);
    }

    #[test]
    fn brute_search_separates_classical_from_intuitionistic() {
        let store = Store::new();
        let bank = ModelBank::up_to(3);
        let budgets = Budgets::default();
        let top = store.top();

        // Double negation elimination fails on a two-chain.
        let dne = parse(&store, "~~x1 -> x1", 1).unwrap();
        let mut meter = budgets.meter();
        let cm = brute_countermodel(&store, top, dne, &bank, 3, &mut meter)
            .unwrap()
            .expect("countermodel expected");
        assert!(cm.verify(&store, top, dne).unwrap());
        assert_eq!(cm.model.world_count(), 2);

        // Peirce's law also fails.
        let peirce = parse(&store, "((x1 -> x2) -> x1) -> x1", 2).unwrap();
        let mut meter = budgets.meter();
        assert!(brute_countermodel(&store, top, peirce, &bank, 3, &mut meter)
            .unwrap()
            .is_some());

        // A genuine intuitionistic validity has no countermodel at all.
        let valid = parse(&store, "x1 -> x2 -> x1", 2).unwrap();
        let mut meter = budgets.meter();
        assert!(brute_countermodel(&store, top, valid, &bank, 3, &mut meter)
            .unwrap()
            .is_none());
    }

    #[test]
    fn type_of_reads_columns_by_world() {
        let store = Store::new();
        let model = chain2(&store);
        let f = parse(&store, "x1 | ~x1", 1).unwrap();
        let table = ForcingTable::build(&store, &model, f).unwrap();
        let t0 = table.type_of(0);
        let t1 = table.type_of(1);
        let x1_pos = table.closure.pos(store.atom(1)).unwrap();
        assert!(!t0.get(x1_pos));
        assert!(t1.get(x1_pos));
    }

    #[test]
    fn dot_export_is_stable() {
        let store = Store::new();
        let model = chain2(&store);
        let dot = model.to_dot();
        assert!(dot.contains("w0 [label=\"w0: {}\"]"));
        assert!(dot.contains("w1 [label=\"w1: x1\"]"));
        assert!(dot.contains("w0 -> w1;"));
    }
}
