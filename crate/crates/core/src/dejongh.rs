//! Defining formulas for individual nodes of a fragment.
//!
//! For a stored node `a` the pair (`pos`, `neg`) satisfies: the forcers of
//! `pos` are exactly the nodes on or above `a`, and the forcers of `neg` are
//! exactly the nodes not below-or-equal `a`. The synthesis is a mutual
//! recursion over the up-set; it is treated as a candidate construction and
//! certified per node by [`verify_node_formulas`], which checks the k-set
//! contract semantically rather than trusting the recursion.

use std::collections::HashMap;

use thiserror::Error;

use crate::budget::Budgets;
use crate::formula::{FormulaId, Store};
use crate::prover::{entails, is_join_irreducible, JoinIrreducibility, ProverError};
use crate::semantics::ForcingTable;
use crate::structure::{enumerate_k, KStatus, StructureError};
use crate::universal::{Fragment, NodeId};

#[derive(Clone, Copy, Debug)]
pub struct NodeFormulaPair {
    pub node: NodeId,
    /// Forced exactly on the up-set of the node.
    pub pos: FormulaId,
    /// Forced exactly off the down-set of the node.
    pub neg: FormulaId,
}

#[derive(Debug, Error)]
pub enum DejonghError {
    #[error("verification failed at node {node:?}: {check}: {detail}")]
    VerificationFailed {
        node: NodeId,
        check: &'static str,
        detail: String,
    },
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// Insert-only memo of node formula pairs, keyed by node id.
#[derive(Default)]
pub struct DejonghCache {
    pairs: HashMap<NodeId, (FormulaId, FormulaId)>,
}

impl DejonghCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Formulas for `alpha`, built bottom-up over its up-set. Subterms are
    /// interned, so siblings share structure across calls.
    pub fn node_formulas(
        &mut self,
        store: &Store,
        frag: &Fragment,
        alpha: NodeId,
    ) -> NodeFormulaPair {
        // Ascending id order lists successors before the nodes using them.
        for id in frag.up_set(alpha) {
            if self.pairs.contains_key(&id) {
                continue;
            }
            let node = frag.node(id);
            let pair = if node.succ.is_empty() {
                let mut parts = Vec::new();
                for i in 0..frag.n {
                    if node.val >> i & 1 == 1 {
                        parts.push(store.atom(i + 1));
                    }
                }
                for i in 0..frag.n {
                    if node.val >> i & 1 == 0 {
                        parts.push(store.neg(store.atom(i + 1)));
                    }
                }
                let pos = store.conj(&parts);
                (pos, store.neg(pos))
            } else {
                let succ_pairs: Vec<(FormulaId, FormulaId)> = node
                    .succ
                    .iter()
                    .map(|s| self.pairs[s])
                    .collect();
                let pos_disj =
                    store.disj(&succ_pairs.iter().map(|p| p.0).collect::<Vec<_>>());
                // Escape hatch: any atom the node lacks, or any way of
                // leaving a successor's down-set, must lead back into the
                // successors' up-sets.
                let mut escapes: Vec<FormulaId> = (0..frag.n)
                    .filter(|i| node.val >> i & 1 == 0)
                    .map(|i| store.atom(i + 1))
                    .collect();
                escapes.extend(succ_pairs.iter().map(|p| p.1));
                let guard = store.implies(store.disj(&escapes), pos_disj);
                let mut parts: Vec<FormulaId> = (0..frag.n)
                    .filter(|i| node.val >> i & 1 == 1)
                    .map(|i| store.atom(i + 1))
                    .collect();
                parts.push(guard);
                let pos = store.conj(&parts);
                (pos, store.implies(pos, pos_disj))
            };
            self.pairs.insert(id, pair);
        }
        let (pos, neg) = self.pairs[&alpha];
        NodeFormulaPair {
            node: alpha,
            pos,
            neg,
        }
    }
}

/// Convenience wrapper for one-off calls.
pub fn node_formulas(store: &Store, frag: &Fragment, alpha: NodeId) -> NodeFormulaPair {
    DejonghCache::new().node_formulas(store, frag, alpha)
}

/// Semantic certificate for a node formula pair:
/// 1. the k-enumeration of `pos` closes and matches the up-set of the node,
///    both in total count and in the fragment's own forcing relation;
/// 2. `pos` is join-irreducible (with finite k-set by check 1);
/// 3. every stored node forces `neg` exactly when it is not below-or-equal
///    the node;
/// 4. `pos` does not entail `neg`, while the positive formulas of sampled
///    incomparable-or-higher nodes do.
pub fn verify_node_formulas(
    store: &Store,
    frag: &Fragment,
    cache: &mut DejonghCache,
    pair: NodeFormulaPair,
    budgets: &Budgets,
) -> Result<(), DejonghError> {
    let alpha = pair.node;
    let fail = |check: &'static str, detail: String| DejonghError::VerificationFailed {
        node: alpha,
        check,
        detail,
    };
    let upset = frag.up_set(alpha);

    // Check 1: global k-enumeration closes with the up-set's cardinality and
    // per-level profile, and inside this fragment the forcers of pos are
    // exactly the up-set. Forcing only reads up-sets, which fragments store
    // completely, so fragment forcing agrees with the full model.
    let (_kfrag, ken) = enumerate_k(store, pair.pos, frag.n, budgets)?;
    match ken.status {
        KStatus::Closed => {}
        KStatus::Open { next_level } => {
            return Err(fail(
                "k-enumeration closes",
                format!("still open entering level {next_level}"),
            ));
        }
    }
    let total: usize = ken.level_widths().iter().sum();
    if total != upset.len() {
        return Err(fail(
            "k-set size",
            format!("enumerated {total} forcers, up-set has {}", upset.len()),
        ));
    }
    let mut upset_widths: Vec<usize> = Vec::new();
    for &id in &upset {
        let lvl = frag.node(id).level as usize;
        if upset_widths.len() < lvl {
            upset_widths.resize(lvl, 0);
        }
        upset_widths[lvl - 1] += 1;
    }
    if ken.level_widths() != upset_widths.as_slice() {
        return Err(fail(
            "k-set level profile",
            format!("{:?} vs up-set {:?}", ken.level_widths(), upset_widths),
        ));
    }
    let model = frag.to_kripke();
    let root = store.and(pair.pos, pair.neg);
    let table = ForcingTable::build(store, &model, root).expect("fragment model is valid");
    for id in frag.ids() {
        let forces = table.forces(id.0 as usize, pair.pos).unwrap();
        let in_upset = frag.leq(alpha, id);
        if forces != in_upset {
            return Err(fail(
                "pos forcing matches up-set",
                format!("node {id:?}: forces={forces}, in up-set={in_upset}"),
            ));
        }
    }

    // Check 2: join-irreducibility (finite k-set came from check 1).
    match is_join_irreducible(store, pair.pos, frag.n, budgets)? {
        JoinIrreducibility::Irreducible => {}
        other => {
            return Err(fail(
                "pos join-irreducible",
                format!("verdict {other:?}"),
            ));
        }
    }

    // Check 3: neg forced exactly off the down-set, on every stored node.
    for id in frag.ids() {
        let forces = table.forces(id.0 as usize, pair.neg).unwrap();
        let below = frag.leq(id, alpha);
        if forces == below {
            return Err(fail(
                "neg forcing matches down-set complement",
                format!("node {id:?}: forces={forces}, below={below}"),
            ));
        }
    }

    // Check 4: entailment probes.
    if entails(store, pair.pos, pair.neg, frag.n, budgets)?.is_valid() {
        return Err(fail(
            "pos does not entail neg",
            "entailment unexpectedly valid".into(),
        ));
    }
    let mut sampled = 0;
    for id in frag.ids() {
        if sampled >= 5 {
            break;
        }
        if frag.leq(id, alpha) {
            continue;
        }
        let other = cache.node_formulas(store, frag, id);
        if !entails(store, other.pos, pair.neg, frag.n, budgets)?.is_valid() {
            return Err(fail(
                "incomparable-node formulas entail neg",
                format!("probe node {id:?}"),
            ));
        }
        sampled += 1;
    }
    Ok(())
}

/// The up-set map reverses order: `a <= b` in the fragment iff the positive
/// formula of `b` entails that of `a`.
pub fn order_reversal_holds(
    store: &Store,
    frag: &Fragment,
    cache: &mut DejonghCache,
    a: NodeId,
    b: NodeId,
    budgets: &Budgets,
) -> Result<bool, ProverError> {
    let pa = cache.node_formulas(store, frag, a);
    let pb = cache.node_formulas(store, frag, b);
    let fwd = entails(store, pb.pos, pa.pos, frag.n, budgets)?.is_valid();
    Ok(fwd == frag.leq(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{closure, print};

    #[test]
    fn leaf_formulas_are_valuation_descriptions() {
        let store = Store::new();
        let frag = Fragment::new(2);
        let pair = node_formulas(&store, &frag, frag.leaf(3));
        assert_eq!(print(&store, pair.pos), "x1 & x2");
        let pair = node_formulas(&store, &frag, frag.leaf(1));
        assert_eq!(print(&store, pair.pos), "x1 & ~x2");
        assert_eq!(print(&store, pair.neg), "~(x1 & ~x2)");
    }

    #[test]
    fn internal_node_formula_shape_in_one_variable() {
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(1);
        frag.enumerate_level(&budgets).unwrap();
        let l2 = frag.level_members(2).to_vec();
        let a2 = *l2
            .iter()
            .find(|&&id| frag.node(id).succ == vec![frag.leaf(1)])
            .unwrap();
        let pair = node_formulas(&store, &frag, a2);
        // Successor v1 has pos = x1, neg = ~x1; the node lacks x1.
        assert_eq!(print(&store, pair.pos), "x1 | ~x1 -> x1");
        assert_eq!(print(&store, pair.neg), "(x1 | ~x1 -> x1) -> x1");
    }

    #[test]
    fn positive_formula_forced_exactly_on_upset() {
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(1);
        for _ in 0..4 {
            frag.enumerate_level(&budgets).unwrap();
        }
        let model = frag.to_kripke();
        let mut cache = DejonghCache::new();
        for id in frag.ids() {
            let pair = cache.node_formulas(&store, &frag, id);
            let table = ForcingTable::build(&store, &model, pair.pos).unwrap();
            for other in frag.ids() {
                assert_eq!(
                    table.forces(other.0 as usize, pair.pos).unwrap(),
                    frag.leq(id, other),
                    "pos of {id:?} at {other:?}"
                );
            }
        }
    }

    #[test]
    fn negative_formula_forced_exactly_off_downset() {
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets).unwrap();
        let model = frag.to_kripke();
        let mut cache = DejonghCache::new();
        for id in frag.ids() {
            let pair = cache.node_formulas(&store, &frag, id);
            let table = ForcingTable::build(&store, &model, pair.neg).unwrap();
            for other in frag.ids() {
                assert_eq!(
                    table.forces(other.0 as usize, pair.neg).unwrap(),
                    !frag.leq(other, id),
                    "neg of {id:?} at {other:?}"
                );
            }
        }
    }

    #[test]
    fn order_reversal_on_small_ladder() {
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(1);
        for _ in 0..3 {
            frag.enumerate_level(&budgets).unwrap();
        }
        let mut cache = DejonghCache::new();
        let ids: Vec<NodeId> = frag.ids().collect();
        for &a in &ids {
            for &b in &ids {
                assert!(
                    order_reversal_holds(&store, &frag, &mut cache, a, b, &budgets).unwrap(),
                    "{a:?} vs {b:?}"
                );
            }
        }
    }

    #[test]
    fn formula_dags_stay_small() {
        let store = Store::new();
        let budgets = Budgets::default();
        let mut frag = Fragment::new(1);
        for _ in 0..5 {
            frag.enumerate_level(&budgets).unwrap();
        }
        let mut cache = DejonghCache::new();
        for id in frag.ids() {
            let pair = cache.node_formulas(&store, &frag, id);
            let width = closure(&store, pair.pos).width();
            let upset = frag.up_set(id).len();
            assert!(
                width <= 8 * upset + 4,
                "node {id:?}: dag width {width} vs up-set {upset}"
            );
        }
    }
}
