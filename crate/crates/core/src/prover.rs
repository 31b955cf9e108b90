//! Entailment, equivalence, and join-irreducible decomposition.
//!
//! Everything here works on realized types: a type is the set of closure
//! members forced at some node of the universal model. Types are generated
//! by saturation. The seed types are those of the maximal nodes, one per
//! valuation. A deeper node sees its strict up-set only through the bitwise
//! AND of the types up there, and of that meet only the implication bits
//! (which gate inheritance) and the atom bits (which bound the node's own
//! valuation) matter. The saturation therefore tracks meets projected to
//! those positions; projection commutes with AND, so closing the projected
//! meets under pairwise AND covers every antichain of nodes exactly.
//!
//! Entailment `phi |- psi` holds iff every realized type containing `phi`
//! contains `psi`; the search is restricted to such types, which is complete
//! because everything above a `phi`-forcing node forces `phi` as well. A
//! failing type is rebuilt into an explicit countermodel from the recipe
//! that created it and re-checked by direct forcing before being returned.

use std::collections::{HashMap, VecDeque};

use thiserror::Error;

use crate::bits::BitVec;
use crate::budget::{BudgetExhausted, Budgets};
use crate::formula::{closure, Closure, FormulaId, Node, Store};
use crate::semantics::{Countermodel, KripkeModel, ModelNode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ProverError {
    #[error("subformula closure width {width} exceeds the cap of {cap}")]
    WidthCap { width: usize, cap: usize },
    #[error("type budget of {max} realized types reached")]
    TypeBudget { max: usize },
    #[error("meet budget of {max} meets reached")]
    MeetBudget { max: usize },
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

#[derive(Clone, Copy, Debug)]
enum Op {
    Bottom,
    Top,
    Atom(u16),
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
}

/// Compiled evaluator for one subformula closure.
pub struct ClosureOps {
    pub width: usize,
    ops: Vec<Op>,
    /// Implication and atom positions; the only meet bits ever read.
    proj: BitVec,
    /// Atoms occurring in the closure, as an n-bit mask.
    pub atom_mask: u16,
}

impl ClosureOps {
    pub fn new(store: &Store, c: &Closure) -> ClosureOps {
        let width = c.width();
        let mut ops = Vec::with_capacity(width);
        let mut proj = BitVec::zeros(width);
        for (p, &m) in c.members.iter().enumerate() {
            let op = match store.node(m) {
                Node::Bottom => Op::Bottom,
                Node::Top => Op::Top,
                Node::Atom(a) => {
                    proj.set(p, true);
                    Op::Atom(a)
                }
                Node::And(a, b) => Op::And(c.pos(a).unwrap(), c.pos(b).unwrap()),
                Node::Or(a, b) => Op::Or(c.pos(a).unwrap(), c.pos(b).unwrap()),
                Node::Implies(a, b) => {
                    proj.set(p, true);
                    Op::Imp(c.pos(a).unwrap(), c.pos(b).unwrap())
                }
            };
            ops.push(op);
        }
        ClosureOps {
            width,
            ops,
            proj,
            atom_mask: c.atom_mask(),
        }
    }

    /// Meet to use for a node with an empty strict up-set.
    pub fn top_meet(&self) -> BitVec {
        BitVec::ones(self.width)
    }

    /// Type of a node with valuation `u` whose strict up-set meets to
    /// `meet`: atoms come from `u`, conjunction and disjunction are local,
    /// and an implication holds iff it holds everywhere above and its local
    /// reading is satisfied.
    pub fn eval(&self, meet: &BitVec, u: u16) -> BitVec {
        let mut t = BitVec::zeros(self.width);
        for (p, op) in self.ops.iter().enumerate() {
            let bit = match *op {
                Op::Bottom => false,
                Op::Top => true,
                Op::Atom(a) => u >> (a - 1) & 1 == 1,
                Op::And(x, y) => t.get(x) && t.get(y),
                Op::Or(x, y) => t.get(x) || t.get(y),
                Op::Imp(x, y) => meet.get(p) && (!t.get(x) || t.get(y)),
            };
            if bit {
                t.set(p, true);
            }
        }
        t
    }

    pub fn leaf_type(&self, val: u16) -> BitVec {
        self.eval(&self.top_meet(), val)
    }

    /// Restrict a type to the positions meets are compared on.
    pub fn project(&self, t: &BitVec) -> BitVec {
        t.and(&self.proj)
    }

    /// Atom bits of a projected meet, as an n-bit mask.
    pub fn meet_atoms(&self, c: &Closure, meet: &BitVec) -> u16 {
        c.atoms
            .iter()
            .filter(|&&(p, _)| meet.get(p))
            .fold(0, |m, &(_, a)| m | 1 << (a - 1))
    }
}

/// Ascending enumeration of the submasks of `mask`.
fn submasks(mask: u16) -> Vec<u16> {
    let mut out = Vec::with_capacity(1 << mask.count_ones());
    let mut s: u16 = 0;
    loop {
        out.push(s);
        if s == mask {
            return out;
        }
        s = (s.wrapping_sub(mask)) & mask;
    }
}

/// How a realized type was first produced, enough to rebuild a model for it.
#[derive(Clone, Debug)]
pub enum Recipe {
    /// Maximal node with the given valuation mask.
    Leaf(u16),
    /// Node with valuation `val` whose strict up-set realizes the witness
    /// types of meet `meet`.
    Composite { meet: u32, val: u16 },
}

struct MeetEntry {
    proj: BitVec,
    /// Type indices whose up-set meets AND to `proj`.
    witness: Vec<u32>,
}

/// All realized types over one closure, with provenance.
pub struct TypeTable {
    pub n: u16,
    pub closure: Closure,
    pub ops: ClosureOps,
    /// When set, only types containing this member were kept.
    pub restricted_to: Option<FormulaId>,
    types: Vec<BitVec>,
    gproj: Vec<BitVec>,
    recipes: Vec<Recipe>,
    index: HashMap<BitVec, u32>,
    meets: Vec<MeetEntry>,
}

impl TypeTable {
    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn meet_count(&self) -> usize {
        self.meets.len()
    }

    pub fn type_bits(&self, idx: u32) -> &BitVec {
        &self.types[idx as usize]
    }

    pub fn recipe(&self, idx: u32) -> &Recipe {
        &self.recipes[idx as usize]
    }

    /// Type indices whose up-set meet backs composite recipes using `meet`.
    pub fn meet_witnesses(&self, meet: u32) -> &[u32] {
        &self.meets[meet as usize].witness
    }

    pub fn lookup(&self, t: &BitVec) -> Option<u32> {
        self.index.get(t).copied()
    }

    /// Does the type at `idx` contain formula `f` (which must be a member)?
    pub fn type_contains(&self, idx: u32, f: FormulaId) -> bool {
        let p = self.closure.pos(f).expect("formula outside closure");
        self.types[idx as usize].get(p)
    }

    /// Indices of subset-minimal types, ascending.
    pub fn minimal_types(&self) -> Vec<u32> {
        let mut minimal = Vec::new();
        'outer: for (i, t) in self.types.iter().enumerate() {
            for (j, s) in self.types.iter().enumerate() {
                if i != j && s.is_subset(t) && s != t {
                    continue 'outer;
                }
            }
            minimal.push(i as u32);
        }
        minimal
    }

    /// The conjunction of the members of type `idx`, in closure order.
    pub fn conjunction_of(&self, store: &Store, idx: u32) -> FormulaId {
        let t = &self.types[idx as usize];
        let parts: Vec<FormulaId> = self
            .closure
            .members
            .iter()
            .enumerate()
            .filter(|&(p, _)| t.get(p))
            .map(|(_, &f)| f)
            .collect();
        store.conj(&parts)
    }

    /// Build a model realizing the type at `target`: one world per type the
    /// recipe graph reaches, successors pointing at witness worlds.
    pub fn materialize(&self, target: u32) -> (KripkeModel, usize) {
        let mut needed = vec![false; self.types.len()];
        let mut stack = vec![target];
        while let Some(idx) = stack.pop() {
            if needed[idx as usize] {
                continue;
            }
            needed[idx as usize] = true;
            if let Recipe::Composite { meet, .. } = self.recipes[idx as usize] {
                for &w in &self.meets[meet as usize].witness {
                    stack.push(w);
                }
            }
        }
        // Witness members always predate the types built on them, so
        // ascending index order lists successors before dependents.
        let mut world_of = vec![usize::MAX; self.types.len()];
        let mut nodes = Vec::new();
        for idx in 0..self.types.len() {
            if !needed[idx] {
                continue;
            }
            let (val_mask, succ) = match self.recipes[idx] {
                Recipe::Leaf(mask) => (mask, Vec::new()),
                Recipe::Composite { meet, val } => (
                    val,
                    self.meets[meet as usize]
                        .witness
                        .iter()
                        .map(|&w| world_of[w as usize])
                        .collect(),
                ),
            };
            world_of[idx] = nodes.len();
            nodes.push(ModelNode {
                val: (0..self.n)
                    .filter(|i| val_mask >> i & 1 == 1)
                    .map(|i| i + 1)
                    .collect(),
                succ,
            });
        }
        let model = KripkeModel::new(self.n, nodes).expect("recipe graphs are valid models");
        (model, world_of[target as usize])
    }

    /// Check that applying the node rule to every subset of up to three
    /// types stays inside the table. Quadratic in table size; intended for
    /// cross-checks on small closures.
    pub fn audit_small_meets(&self) -> bool {
        let k = self.types.len();
        let mut subsets: Vec<Vec<usize>> = Vec::new();
        for i in 0..k {
            subsets.push(vec![i]);
            for j in i + 1..k {
                subsets.push(vec![i, j]);
                for l in j + 1..k {
                    subsets.push(vec![i, j, l]);
                }
            }
        }
        for subset in subsets {
            let mut meet = self.gproj[subset[0]].clone();
            for &i in &subset[1..] {
                meet.and_assign(&self.gproj[i]);
            }
            let atoms = self.ops.meet_atoms(&self.closure, &meet);
            for u in submasks(atoms) {
                let t = self.ops.eval(&meet, u);
                if self.passes_restriction(&t) && !self.index.contains_key(&t) {
                    return false;
                }
            }
        }
        true
    }

    fn passes_restriction(&self, t: &BitVec) -> bool {
        match self.restricted_to {
            None => true,
            Some(f) => t.get(self.closure.pos(f).expect("restriction outside closure")),
        }
    }
}

struct Saturator<'a> {
    store: &'a Store,
    budgets: &'a Budgets,
    table: TypeTable,
    meet_index: HashMap<BitVec, u32>,
    queue: VecDeque<u32>,
    /// Set when saturation should stop at the first type missing this member.
    stop_without: Option<usize>,
    found_bad: Option<u32>,
}

impl<'a> Saturator<'a> {
    fn push_type(&mut self, t: BitVec, gproj: BitVec, recipe: Recipe) -> Result<(), ProverError> {
        if self.table.index.contains_key(&t) {
            return Ok(());
        }
        if self.table.types.len() >= self.budgets.max_types {
            return Err(ProverError::TypeBudget {
                max: self.budgets.max_types,
            });
        }
        let idx = self.table.types.len() as u32;
        self.table.index.insert(t.clone(), idx);
        self.table.types.push(t);
        self.table.gproj.push(gproj.clone());
        self.table.recipes.push(recipe);
        if let Some(p) = self.stop_without {
            if self.found_bad.is_none() && !self.table.types[idx as usize].get(p) {
                self.found_bad = Some(idx);
            }
        }
        self.push_meet(gproj, vec![idx])?;
        Ok(())
    }

    fn push_meet(&mut self, proj: BitVec, witness: Vec<u32>) -> Result<(), ProverError> {
        if self.meet_index.contains_key(&proj) {
            return Ok(());
        }
        if self.table.meets.len() >= self.budgets.max_meets {
            return Err(ProverError::MeetBudget {
                max: self.budgets.max_meets,
            });
        }
        let idx = self.table.meets.len() as u32;
        self.meet_index.insert(proj.clone(), idx);
        self.table.meets.push(MeetEntry { proj, witness });
        self.queue.push_back(idx);
        Ok(())
    }

    fn run(&mut self, meter_cap: u64) -> Result<(), ProverError> {
        let mut steps: u64 = 0;
        while let Some(mi) = self.queue.pop_front() {
            if self.found_bad.is_some() {
                return Ok(());
            }
            // New node types below this meet.
            let meet = self.table.meets[mi as usize].proj.clone();
            let atoms = self.table.ops.meet_atoms(&self.table.closure, &meet);
            for u in submasks(atoms) {
                steps += 1;
                let t = self.table.ops.eval(&meet, u);
                if !self.table.passes_restriction(&t) {
                    continue;
                }
                let gproj = self.table.ops.project(&t).and(&meet);
                self.push_type(t, gproj, Recipe::Composite { meet: mi, val: u })?;
                if self.found_bad.is_some() {
                    return Ok(());
                }
            }
            // Pairwise meet closure against everything already present.
            for other in 0..self.table.meets.len() as u32 {
                steps += 1;
                if steps > meter_cap {
                    return Err(ProverError::Budget(BudgetExhausted {
                        phase: "type saturation",
                        used: steps,
                    }));
                }
                let combined = self.table.meets[mi as usize]
                    .proj
                    .and(&self.table.meets[other as usize].proj);
                if self.meet_index.contains_key(&combined) {
                    continue;
                }
                let mut witness = self.table.meets[mi as usize].witness.clone();
                witness.extend_from_slice(&self.table.meets[other as usize].witness);
                witness.sort_unstable();
                witness.dedup();
                self.push_meet(combined, witness)?;
            }
        }
        Ok(())
    }
}

fn saturate(
    store: &Store,
    root: FormulaId,
    n: u16,
    budgets: &Budgets,
    restricted_to: Option<FormulaId>,
    stop_without: Option<FormulaId>,
) -> Result<(TypeTable, Option<u32>), ProverError> {
    let c = closure(store, root);
    if c.width() > budgets.width_cap {
        return Err(ProverError::WidthCap {
            width: c.width(),
            cap: budgets.width_cap,
        });
    }
    let ops = ClosureOps::new(store, &c);
    let stop_pos = stop_without.map(|f| c.pos(f).expect("stop formula outside closure"));
    let table = TypeTable {
        n,
        closure: c,
        ops,
        restricted_to,
        types: Vec::new(),
        gproj: Vec::new(),
        recipes: Vec::new(),
        index: HashMap::new(),
        meets: Vec::new(),
    };
    let mut sat = Saturator {
        store,
        budgets,
        table,
        meet_index: HashMap::new(),
        queue: VecDeque::new(),
        stop_without: stop_pos,
        found_bad: None,
    };
    let _ = sat.store;
    for mask in 0..1u32 << n {
        let t = sat.table.ops.leaf_type(mask as u16);
        if !sat.table.passes_restriction(&t) {
            continue;
        }
        let gproj = sat.table.ops.project(&t);
        sat.push_type(t, gproj, Recipe::Leaf(mask as u16))?;
        if sat.found_bad.is_some() {
            break;
        }
    }
    if sat.found_bad.is_none() {
        sat.run(budgets.max_steps)?;
    }
    let bad = sat.found_bad;
    Ok((sat.table, bad))
}

/// Every type realized in the universal model over the closure of `root`.
pub fn realize(
    store: &Store,
    root: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<TypeTable, ProverError> {
    saturate(store, root, n, budgets, None, None).map(|(t, _)| t)
}

/// The types containing `phi`, over the closure of `root`. Complete because
/// persistence keeps everything above a `phi`-node inside the same set.
pub fn realize_above(
    store: &Store,
    root: FormulaId,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<TypeTable, ProverError> {
    saturate(store, root, n, budgets, Some(phi), None).map(|(t, _)| t)
}

#[derive(Debug)]
pub enum Entailment {
    Valid,
    Invalid(Countermodel),
}

impl Entailment {
    pub fn is_valid(&self) -> bool {
        matches!(self, Entailment::Valid)
    }
}

/// Decide `phi |- psi`. An invalid entailment comes with a model whose
/// distinguished world forces `phi` but not `psi`, re-verified by direct
/// forcing before being returned.
pub fn entails(
    store: &Store,
    phi: FormulaId,
    psi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<Entailment, ProverError> {
    let root = store.implies(phi, psi);
    let (table, bad) = saturate(store, root, n, budgets, Some(phi), Some(psi))?;
    match bad {
        None => Ok(Entailment::Valid),
        Some(idx) => {
            let (model, world) = table.materialize(idx);
            let cm = Countermodel { model, world };
            assert!(
                cm.verify(store, phi, psi).expect("materialized model is valid"),
                "countermodel failed re-verification"
            );
            Ok(Entailment::Invalid(cm))
        }
    }
}

#[derive(Debug)]
pub enum Equivalence {
    Equal,
    LeftNotRight(Countermodel),
    RightNotLeft(Countermodel),
}

impl Equivalence {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }
}

pub fn equiv(
    store: &Store,
    a: FormulaId,
    b: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<Equivalence, ProverError> {
    if let Entailment::Invalid(cm) = entails(store, a, b, n, budgets)? {
        return Ok(Equivalence::LeftNotRight(cm));
    }
    if let Entailment::Invalid(cm) = entails(store, b, a, n, budgets)? {
        return Ok(Equivalence::RightNotLeft(cm));
    }
    Ok(Equivalence::Equal)
}

#[derive(Debug)]
pub enum JoinIrreducibility {
    /// Equivalent to `F`: forced nowhere.
    Bottom,
    Irreducible,
    Reducible { components: Vec<FormulaId> },
}

/// A formula is join-irreducible iff the types containing it have a unique
/// subset-minimal element.
pub fn is_join_irreducible(
    store: &Store,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<JoinIrreducibility, ProverError> {
    let table = realize_above(store, phi, phi, n, budgets)?;
    if table.is_empty() {
        return Ok(JoinIrreducibility::Bottom);
    }
    let minimal = table.minimal_types();
    if minimal.len() == 1 {
        Ok(JoinIrreducibility::Irreducible)
    } else {
        Ok(JoinIrreducibility::Reducible {
            components: minimal
                .iter()
                .map(|&i| table.conjunction_of(store, i))
                .collect(),
        })
    }
}

#[derive(Debug)]
pub struct Decomposition {
    /// Pairwise non-entailing join-irreducible components whose disjunction
    /// is equivalent to the input. Empty exactly for `F`.
    pub components: Vec<FormulaId>,
}

/// Split `phi` into the maximal join-irreducibles below it: one component
/// per subset-minimal type containing `phi`, namely the conjunction of that
/// type's members.
pub fn decompose(
    store: &Store,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<Decomposition, ProverError> {
    let table = realize_above(store, phi, phi, n, budgets)?;
    let minimal = table.minimal_types();
    // Distinct minimal types are subset-incomparable, and each is realized,
    // so the components neither entail one another nor collapse.
    let components = minimal
        .iter()
        .map(|&i| table.conjunction_of(store, i))
        .collect();
    Ok(Decomposition { components })
}

/// Maximal join-irreducible lower bounds of the pair: the decomposition of
/// the conjunction.
pub fn maximal_lower_bounds(
    store: &Store,
    a: FormulaId,
    b: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<Vec<FormulaId>, ProverError> {
    Ok(decompose(store, store.and(a, b), n, budgets)?.components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{parse, print};
    use crate::semantics::ForcingTable;

    fn prove(text_phi: &str, text_psi: &str, n: u16) -> Entailment {
        let store = Store::new();
        let phi = parse(&store, text_phi, n).unwrap();
        let psi = parse(&store, text_psi, n).unwrap();
        entails(&store, phi, psi, n, &Budgets::default()).unwrap()
    }

    #[test]
    fn intuitionistic_validities_hold() {
        assert!(prove("x1", "x2 -> x1", 2).is_valid());
        assert!(prove("x1 & x2", "x1", 2).is_valid());
        assert!(prove("x1", "x1 | x2", 2).is_valid());
        assert!(prove("F", "x1", 1).is_valid());
        assert!(prove("T", "~~(x1 | ~x1)", 1).is_valid());
        assert!(prove("T", "~~(((x1 -> x2) -> x1) -> x1)", 2).is_valid());
        assert!(prove("x1 -> x2 -> x1", "T", 2).is_valid());
        assert!(prove("x1 | x2 & x1", "x1", 2).is_valid());
        // Triple negation collapses to single.
        assert!(prove("~~~x1", "~x1", 1).is_valid());
        assert!(prove("~x1", "~~~x1", 1).is_valid());
    }

    #[test]
    fn classical_principles_fail_with_verified_countermodels() {
        let store = Store::new();
        let n = 2;
        let budgets = Budgets::default();
        let top = store.top();
        for text in [
            "x1 | ~x1",
            "~~x1 -> x1",
            "((x1 -> x2) -> x1) -> x1",
            "(x1 -> x2) | (x2 -> x1)",
            "~x1 | ~~x1",
        ] {
            let f = parse(&store, text, n).unwrap();
            match entails(&store, top, f, n, &budgets).unwrap() {
                Entailment::Invalid(cm) => {
                    assert!(cm.verify(&store, top, f).unwrap(), "{text}");
                }
                Entailment::Valid => panic!("{text} should not be provable"),
            }
        }
    }

    #[test]
    fn entailment_is_not_symmetric_here() {
        assert!(prove("x1", "x1 | x2", 2).is_valid());
        match prove("x1 | x2", "x1", 2) {
            Entailment::Invalid(cm) => assert!(cm.model.world_count() >= 1),
            Entailment::Valid => panic!("disjunction should not entail its disjunct"),
        }
    }

    #[test]
    fn equivalences() {
        let store = Store::new();
        let budgets = Budgets::default();
        let a = parse(&store, "~~~x1", 1).unwrap();
        let b = parse(&store, "~x1", 1).unwrap();
        assert!(equiv(&store, a, b, 1, &budgets).unwrap().is_equal());
        let c = parse(&store, "x1 | ~x1", 1).unwrap();
        let top = store.top();
        assert!(!equiv(&store, c, top, 1, &budgets).unwrap().is_equal());
        // Distributivity.
        let d = parse(&store, "x1 & (x2 | x1)", 2).unwrap();
        let e = parse(&store, "x1 & x2 | x1 & x1", 2).unwrap();
        assert!(equiv(&store, d, e, 2, &budgets).unwrap().is_equal());
    }

    #[test]
    fn irreducibility_of_small_formulas() {
        let store = Store::new();
        let budgets = Budgets::default();
        let cases: &[(&str, bool)] = &[
            ("x1", true),
            ("~x1", true),
            ("x1 & x2", true),
            ("T", true),
            ("~~x1", true),
            ("x1 | x2", false),
            ("x1 | ~x1", false),
        ];
        for &(text, irr) in cases {
            let f = parse(&store, text, 2).unwrap();
            let verdict = is_join_irreducible(&store, f, 2, &budgets).unwrap();
            match verdict {
                JoinIrreducibility::Irreducible => assert!(irr, "{text}"),
                JoinIrreducibility::Reducible { .. } => assert!(!irr, "{text}"),
                JoinIrreducibility::Bottom => panic!("{text} is satisfiable"),
            }
        }
        let bot = store.bottom();
        assert!(matches!(
            is_join_irreducible(&store, bot, 2, &budgets).unwrap(),
            JoinIrreducibility::Bottom
        ));
        let contradiction = parse(&store, "x1 & ~x1", 1).unwrap();
        assert!(matches!(
            is_join_irreducible(&store, contradiction, 1, &budgets).unwrap(),
            JoinIrreducibility::Bottom
        ));
    }

    #[test]
    fn decomposition_covers_and_splits() {
        let store = Store::new();
        let budgets = Budgets::default();
        let f = parse(&store, "x1 | x2", 2).unwrap();
        let d = decompose(&store, f, 2, &budgets).unwrap();
        assert_eq!(d.components.len(), 2);
        // The disjunction of the components is equivalent to the input.
        let joined = store.disj(&d.components);
        assert!(equiv(&store, f, joined, 2, &budgets).unwrap().is_equal());
        // Each component is join-irreducible and below the input.
        for &comp in &d.components {
            assert!(matches!(
                is_join_irreducible(&store, comp, 2, &budgets).unwrap(),
                JoinIrreducibility::Irreducible
            ));
            assert!(entails(&store, comp, f, 2, &budgets).unwrap().is_valid());
        }
        // Components do not entail each other.
        assert!(!entails(&store, d.components[0], d.components[1], 2, &budgets)
            .unwrap()
            .is_valid());
        // Bottom decomposes into nothing.
        let bot = store.bottom();
        assert!(decompose(&store, bot, 2, &budgets).unwrap().components.is_empty());
        // An irreducible formula decomposes into one component.
        let x1 = store.atom(1);
        let d1 = decompose(&store, x1, 2, &budgets).unwrap();
        assert_eq!(d1.components.len(), 1);
    }

    #[test]
    fn weak_excluded_middle_decomposition() {
        let store = Store::new();
        let budgets = Budgets::default();
        let f = parse(&store, "~x1 | ~~x1", 1).unwrap();
        let d = decompose(&store, f, 1, &budgets).unwrap();
        assert_eq!(d.components.len(), 2);
        for &comp in &d.components {
            let s = print(&store, comp);
            assert!(
                entails(&store, comp, f, 1, &budgets).unwrap().is_valid(),
                "{s}"
            );
        }
    }

    #[test]
    fn small_meet_audit_passes_on_ladder_formulas() {
        let store = Store::new();
        let budgets = Budgets::default();
        for text in ["~x1 -> x1", "(~x1 -> x1) | ~x1", "~x1 | x1", "x1 & x2 | ~x2"] {
            let f = parse(&store, text, 2).unwrap();
            let table = realize(&store, f, 2, &budgets).unwrap();
            assert!(table.audit_small_meets(), "{text}");
        }
    }

    #[test]
    fn realized_types_match_direct_forcing_on_fragments() {
        use crate::universal::Fragment;
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(1);
        for _ in 0..5 {
            frag.enumerate_level(&budgets).unwrap();
        }
        let model = frag.to_kripke();
        for text in ["~x1 -> x1", "~x1 | x1", "x1"] {
            let f = parse(&store, text, 1).unwrap();
            let table = realize(&store, f, 1, &budgets).unwrap();
            let ft = ForcingTable::build(&store, &model, f).unwrap();
            for w in 0..model.world_count() {
                let t = ft.type_of(w);
                assert!(
                    table.lookup(&t).is_some(),
                    "world {w} type missing for {text}"
                );
            }
        }
    }

    #[test]
    fn budget_errors_are_reported() {
        let store = Store::new();
        let mut budgets = Budgets::default();
        budgets.width_cap = 3;
        let f = parse(&store, "x1 & x2 & (x1 | x2)", 2).unwrap();
        assert!(matches!(
            realize(&store, f, 2, &budgets),
            Err(ProverError::WidthCap { .. })
        ));
        let mut tiny = Budgets::default();
        tiny.max_types = 2;
        let g = parse(&store, "~x1 | ~~x1", 2).unwrap();
        assert!(matches!(
            realize(&store, g, 2, &tiny),
            Err(ProverError::TypeBudget { max: 2 })
        ));
    }
}
