//! Finite fragments of the universal Kripke model over `n` variables.
//!
//! The model is built level by level. Level 1 holds one maximal node per
//! valuation. A deeper node is determined by the antichain `S` of minimal
//! elements of its strict up-set together with its own valuation `U`, where
//! `U` must sit inside the intersection of the valuations of `S` and, when
//! `S` is a single node, strictly inside that node's valuation. Every such
//! pair yields exactly one node, so fragments are canonical: rebuilding the
//! same levels always produces the same ids.
//!
//! Successor lists point upward (toward maximal nodes), matching
//! [`crate::semantics::KripkeModel`].

use std::collections::HashMap;

use thiserror::Error;

use crate::bits::BitVec;
use crate::budget::{BudgetExhausted, Budgets, StepMeter};
use crate::semantics::{KripkeModel, ModelNode};

/// Index of a node within a [`Fragment`]. Leaves occupy `0..2^n` in
/// valuation-mask order; later ids follow creation order.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl std::fmt::Debug for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "u{}", self.0)
    }
}

#[derive(Clone, Debug)]
pub struct UNode {
    pub level: u32,
    /// Valuation as an atom mask, bit `i-1` for `xi`.
    pub val: u16,
    /// Immediate successors: the antichain this node was created from.
    pub succ: Vec<NodeId>,
    /// Reflexive-transitive up-set; covers ids `0..=`own id.
    up: BitVec,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FragmentError {
    #[error("node set must be nonempty")]
    EmptySet,
    #[error("nodes {0:?} and {1:?} are comparable, not an antichain")]
    NotAntichain(NodeId, NodeId),
    #[error("valuation {val:#b} is not allowed below this antichain")]
    InvalidValuation { val: u16 },
    #[error("node budget of {max} reached")]
    NodeBudget { max: usize },
    #[error("level budget of {max} reached")]
    LevelBudget { max: u32 },
    #[error("node id {0:?} out of range")]
    UnknownNode(NodeId),
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

pub struct Fragment {
    pub n: u16,
    nodes: Vec<UNode>,
    /// `levels[l - 1]` lists the nodes of level `l`, creation order.
    levels: Vec<Vec<NodeId>>,
    /// Levels `1..=complete` are fully enumerated.
    complete: u32,
    index: HashMap<(Vec<NodeId>, u16), NodeId>,
}

impl Fragment {
    /// Fresh fragment holding only the `2^n` maximal nodes.
    pub fn new(n: u16) -> Fragment {
        assert!((1..=10).contains(&n), "supported variable counts are 1..=10");
        let leaf_count = 1u32 << n;
        let mut nodes = Vec::with_capacity(leaf_count as usize);
        let mut level1 = Vec::with_capacity(leaf_count as usize);
        for mask in 0..leaf_count {
            let id = NodeId(mask);
            let mut up = BitVec::zeros(mask as usize + 1);
            up.set(mask as usize, true);
            nodes.push(UNode {
                level: 1,
                val: mask as u16,
                succ: Vec::new(),
                up,
            });
            level1.push(id);
        }
        Fragment {
            n,
            nodes,
            levels: vec![level1],
            complete: 1,
            index: HashMap::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> &UNode {
        &self.nodes[id.0 as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len() as u32).map(NodeId)
    }

    /// The maximal node carrying exactly the given valuation mask.
    pub fn leaf(&self, mask: u16) -> NodeId {
        assert!(u32::from(mask) < (1 << self.n));
        NodeId(mask.into())
    }

    /// Deepest fully enumerated level.
    pub fn complete_levels(&self) -> u32 {
        self.complete
    }

    /// Nodes known at `level` (complete only for `level <= complete_levels`).
    pub fn level_members(&self, level: u32) -> &[NodeId] {
        self.levels
            .get(level as usize - 1)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// `a <= b` in the model order: `b` lies on or above `a`.
    pub fn leq(&self, a: NodeId, b: NodeId) -> bool {
        // Everything above a node was created before it, so ids above never
        // exceed the node's own id.
        a == b || (b.0 < a.0 && self.node(a).up.get(b.0 as usize))
    }

    pub fn comparable(&self, a: NodeId, b: NodeId) -> bool {
        self.leq(a, b) || self.leq(b, a)
    }

    pub fn is_antichain(&self, s: &[NodeId]) -> bool {
        for (i, &a) in s.iter().enumerate() {
            for &b in &s[i + 1..] {
                if self.comparable(a, b) {
                    return false;
                }
            }
        }
        true
    }

    /// Nodes on or above `id`, ascending by id.
    pub fn up_set(&self, id: NodeId) -> Vec<NodeId> {
        self.node(id)
            .up
            .iter_ones(id.0 as usize + 1)
            .map(|i| NodeId(i as u32))
            .collect()
    }

    /// Intersection of the valuations of `s`.
    pub fn meet_val(&self, s: &[NodeId]) -> u16 {
        s.iter()
            .fold(u16::MAX, |m, &id| m & self.node(id).val)
            & ((1u16 << self.n) - 1)
    }

    fn canonical_key(&self, s: &[NodeId], u: u16) -> (Vec<NodeId>, u16) {
        let mut key: Vec<NodeId> = s.to_vec();
        key.sort_unstable();
        key.dedup();
        (key, u)
    }

    /// Strict constructor: `s` must already be a nonempty antichain and `u`
    /// admissible for it. Existing nodes are returned rather than duplicated.
    pub fn mk_node(
        &mut self,
        s: &[NodeId],
        u: u16,
        budgets: &Budgets,
    ) -> Result<NodeId, FragmentError> {
        let (key, u) = self.canonical_key(s, u);
        if key.is_empty() {
            return Err(FragmentError::EmptySet);
        }
        for &id in &key {
            if id.0 as usize >= self.nodes.len() {
                return Err(FragmentError::UnknownNode(id));
            }
        }
        for (i, &a) in key.iter().enumerate() {
            for &b in &key[i + 1..] {
                if self.comparable(a, b) {
                    return Err(FragmentError::NotAntichain(a, b));
                }
            }
        }
        let meet = self.meet_val(&key);
        if u & !meet != 0 || (key.len() == 1 && u == meet) {
            return Err(FragmentError::InvalidValuation { val: u });
        }
        if let Some(&id) = self.index.get(&(key.clone(), u)) {
            return Ok(id);
        }
        let level = 1 + key.iter().map(|&id| self.node(id).level).max().unwrap();
        if level > budgets.max_levels {
            return Err(FragmentError::LevelBudget {
                max: budgets.max_levels,
            });
        }
        if self.nodes.len() >= budgets.max_nodes {
            return Err(FragmentError::NodeBudget {
                max: budgets.max_nodes,
            });
        }
        let id = NodeId(self.nodes.len() as u32);
        let mut up = BitVec::zeros(id.0 as usize + 1);
        up.set(id.0 as usize, true);
        for &m in &key {
            up.or_assign_shorter(&self.node(m).up);
        }
        self.nodes.push(UNode {
            level,
            val: u,
            succ: key.clone(),
            up,
        });
        while self.levels.len() < level as usize {
            self.levels.push(Vec::new());
        }
        self.levels[level as usize - 1].push(id);
        self.index.insert((key, u), id);
        Ok(id)
    }

    /// Convention constructor: reduce `s` to its minimal members, take the
    /// full valuation intersection, and for a single minimal member return
    /// that member itself.
    pub fn node_of(&mut self, s: &[NodeId], budgets: &Budgets) -> Result<NodeId, FragmentError> {
        let (mut key, _) = self.canonical_key(s, 0);
        if key.is_empty() {
            return Err(FragmentError::EmptySet);
        }
        for &id in &key {
            if id.0 as usize >= self.nodes.len() {
                return Err(FragmentError::UnknownNode(id));
            }
        }
        let snapshot = key.clone();
        key.retain(|&a| !snapshot.iter().any(|&b| a != b && self.leq(b, a)));
        if key.len() == 1 {
            return Ok(key[0]);
        }
        let u = self.meet_val(&key);
        self.mk_node(&key, u, budgets)
    }

    /// Visit every nonempty antichain over `universe`, ascending-id vectors
    /// in lexicographic order. The callback returns `false` to stop early;
    /// the result says whether the visit ran to completion.
    pub fn visit_antichains(
        &self,
        universe: &[NodeId],
        meter: &mut StepMeter,
        f: &mut dyn FnMut(&[NodeId]) -> bool,
    ) -> Result<bool, BudgetExhausted> {
        let mut chosen: Vec<NodeId> = Vec::new();
        // Frames of (next candidate index, chosen length when entered).
        let mut stack: Vec<usize> = vec![0];
        while let Some(next) = stack.last_mut() {
            let mut advanced = false;
            while *next < universe.len() {
                let cand = universe[*next];
                *next += 1;
                if chosen.iter().any(|&c| self.comparable(c, cand)) {
                    continue;
                }
                if !meter.tick(1) {
                    return Err(BudgetExhausted {
                        phase: "antichain enumeration",
                        used: meter.used(),
                    });
                }
                chosen.push(cand);
                if !f(&chosen) {
                    return Ok(false);
                }
                let resume = *next;
                stack.push(resume);
                advanced = true;
                break;
            }
            if !advanced {
                stack.pop();
                chosen.pop();
            }
        }
        Ok(true)
    }

    fn admissible_val_count(&self, s: &[NodeId]) -> u64 {
        let meet = self.meet_val(s);
        let all = 1u64 << meet.count_ones();
        if s.len() == 1 {
            all - 1
        } else {
            all
        }
    }

    fn subsets_of_mask(mask: u16) -> Vec<u16> {
        // Ascending enumeration of submasks.
        let mut out = Vec::with_capacity(1 << mask.count_ones());
        for v in 0..=u32::from(mask) {
            let v = v as u16;
            if v & !mask == 0 {
                out.push(v);
            }
        }
        out
    }

    /// Fully enumerate the next level. Returns its complete member list.
    pub fn enumerate_level(&mut self, budgets: &Budgets) -> Result<Vec<NodeId>, FragmentError> {
        let target = self.complete + 1;
        if target > budgets.max_levels {
            return Err(FragmentError::LevelBudget {
                max: budgets.max_levels,
            });
        }
        let universe: Vec<NodeId> = self
            .ids()
            .filter(|&id| self.node(id).level <= self.complete)
            .collect();
        let top_level = self.complete;
        let mut staged: Vec<(Vec<NodeId>, u16)> = Vec::new();
        let mut meter = budgets.meter();
        let mut budget_hit = None;
        self.visit_antichains(&universe, &mut meter, &mut |s| {
            if !s.iter().any(|&id| self.node(id).level == top_level) {
                return true;
            }
            let meet = self.meet_val(s);
            for u in Self::subsets_of_mask(meet) {
                if s.len() == 1 && u == meet {
                    continue;
                }
                if !self.index.contains_key(&(s.to_vec(), u)) {
                    staged.push((s.to_vec(), u));
                }
            }
            if self.nodes.len() + staged.len() > budgets.max_nodes {
                budget_hit = Some(FragmentError::NodeBudget {
                    max: budgets.max_nodes,
                });
                return false;
            }
            true
        })?;
        if let Some(err) = budget_hit {
            return Err(err);
        }
        for (s, u) in staged {
            self.mk_node(&s, u, budgets)?;
        }
        self.complete = target;
        Ok(self.level_members(target).to_vec())
    }

    /// Count the nodes the next level would contain, without building them.
    pub fn count_next_level(&self, budgets: &Budgets) -> Result<u64, FragmentError> {
        let universe: Vec<NodeId> = self
            .ids()
            .filter(|&id| self.node(id).level <= self.complete)
            .collect();
        let top_level = self.complete;
        let mut total: u64 = 0;
        let mut meter = budgets.meter();
        self.visit_antichains(&universe, &mut meter, &mut |s| {
            if s.iter().any(|&id| self.node(id).level == top_level) {
                total += self.admissible_val_count(s);
            }
            true
        })?;
        Ok(total)
    }

    /// View the fragment as an explicit Kripke model, node ids preserved.
    pub fn to_kripke(&self) -> KripkeModel {
        let nodes = self
            .nodes
            .iter()
            .map(|node| ModelNode {
                val: (0..self.n)
                    .filter(|i| node.val >> i & 1 == 1)
                    .map(|i| i + 1)
                    .collect(),
                succ: node.succ.iter().map(|s| s.0 as usize).collect(),
            })
            .collect();
        KripkeModel::new(self.n, nodes).expect("fragments are valid models by construction")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn budgets() -> Budgets {
        Budgets::default()
    }

    #[test]
    fn leaves_cover_all_valuations() {
        let frag = Fragment::new(2);
        assert_eq!(frag.node_count(), 4);
        for mask in 0u16..4 {
            let id = frag.leaf(mask);
            assert_eq!(frag.node(id).val, mask);
            assert_eq!(frag.node(id).level, 1);
            assert!(frag.node(id).succ.is_empty());
        }
        assert!(!frag.comparable(frag.leaf(0), frag.leaf(3)));
    }

    #[test]
    fn second_level_of_two_variables_has_eighteen_nodes() {
        let mut frag = Fragment::new(2);
        let level2 = frag.enumerate_level(&budgets()).unwrap();
        assert_eq!(level2.len(), 18);
        let mut by_arity = [0usize; 5];
        for &id in &level2 {
            by_arity[frag.node(id).succ.len()] += 1;
        }
        assert_eq!(by_arity, [0, 5, 8, 4, 1]);
    }

    #[test]
    fn one_variable_ladder_has_width_two_per_level() {
        let mut frag = Fragment::new(1);
        for level in 2..=6 {
            let members = frag.enumerate_level(&budgets()).unwrap();
            assert_eq!(members.len(), 2, "level {level}");
        }
        // Spot-check level 3 structure: one node sits below both level-2
        // nodes, the other below one level-2 node and the empty leaf.
        let l2 = frag.level_members(2).to_vec();
        let l3 = frag.level_members(3).to_vec();
        let succ_sets: Vec<Vec<NodeId>> =
            l3.iter().map(|&id| frag.node(id).succ.clone()).collect();
        assert!(succ_sets.contains(&vec![l2[0], l2[1]]));
        let v0 = frag.leaf(0);
        assert!(succ_sets.iter().any(|s| s.contains(&v0)));
    }

    #[test]
    fn mk_node_rejects_malformed_requests() {
        let mut frag = Fragment::new(2);
        let b = budgets();
        assert_eq!(frag.mk_node(&[], 0, &b), Err(FragmentError::EmptySet));
        // A node below the full leaf, then something comparable to it.
        let full = frag.leaf(3);
        let below = frag.mk_node(&[full], 1, &b).unwrap();
        assert!(matches!(
            frag.mk_node(&[below, full], 0, &b),
            Err(FragmentError::NotAntichain(_, _))
        ));
        // Valuation escaping the intersection.
        let e = frag.mk_node(&[frag.leaf(1), frag.leaf(2)], 1, &b);
        assert_eq!(e, Err(FragmentError::InvalidValuation { val: 1 }));
        // Singleton with its full valuation is the node itself, not a child.
        let e = frag.mk_node(&[full], 3, &b);
        assert_eq!(e, Err(FragmentError::InvalidValuation { val: 3 }));
        // Idempotence.
        let again = frag.mk_node(&[full], 1, &b).unwrap();
        assert_eq!(again, below);
    }

    #[test]
    fn node_of_reduces_to_minimal_members() {
        let mut frag = Fragment::new(2);
        let b = budgets();
        let full = frag.leaf(3);
        let below = frag.mk_node(&[full], 1, &b).unwrap();
        // full is above below, so it drops out and the singleton convention
        // returns the remaining node unchanged.
        assert_eq!(frag.node_of(&[below, full], &b).unwrap(), below);
        // Two incomparable nodes produce their meet-valuation child.
        let id = frag.node_of(&[frag.leaf(1), frag.leaf(2)], &b).unwrap();
        assert_eq!(frag.node(id).val, 0);
        assert_eq!(frag.node(id).level, 2);
    }

    #[test]
    fn order_and_upsets_follow_construction() {
        let mut frag = Fragment::new(1);
        frag.enumerate_level(&budgets()).unwrap();
        frag.enumerate_level(&budgets()).unwrap();
        let v0 = frag.leaf(0);
        let v1 = frag.leaf(1);
        let l2 = frag.level_members(2).to_vec();
        // The doubleton-successor node sits below both leaves.
        let b2 = *l2
            .iter()
            .find(|&&id| frag.node(id).succ.len() == 2)
            .unwrap();
        assert!(frag.leq(b2, v0) && frag.leq(b2, v1));
        let a2 = *l2
            .iter()
            .find(|&&id| frag.node(id).succ == vec![v1])
            .unwrap();
        assert!(frag.leq(a2, v1) && !frag.leq(a2, v0));
        assert_eq!(frag.up_set(a2), vec![v1, a2]);
    }

    #[test]
    fn counting_matches_enumeration() {
        let mut frag = Fragment::new(2);
        let counted = frag.count_next_level(&budgets()).unwrap();
        let built = frag.enumerate_level(&budgets()).unwrap();
        assert_eq!(counted, built.len() as u64);
    }

    #[test]
    fn fragment_exports_as_valid_model() {
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets()).unwrap();
        let model = frag.to_kripke();
        assert_eq!(model.world_count(), 22);
        assert!(model.validate().is_ok());
    }

    #[test]
    fn budgets_cut_off_growth() {
        let mut frag = Fragment::new(2);
        let mut tight = budgets();
        tight.max_nodes = 10;
        assert!(matches!(
            frag.enumerate_level(&tight),
            Err(FragmentError::NodeBudget { max: 10 })
        ));
        let mut shallow = budgets();
        shallow.max_levels = 1;
        let mut frag2 = Fragment::new(2);
        assert!(matches!(
            frag2.enumerate_level(&shallow),
            Err(FragmentError::LevelBudget { max: 1 })
        ));
    }
}
