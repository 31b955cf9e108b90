//! Order-theoretic structure of the join-irreducibles: k-set enumeration,
//! stratification, antichain witnesses and finite poset embeddings.
//!
//! The central engine enumerates the forcers of a formula level by level
//! inside a fragment. Level 1 forcers are read off leaf types; a node at
//! level m+1 forces the formula iff its type, computed from the projected
//! meet of its successors' types, contains it. Persistence makes the sweep
//! complete: every successor of a forcer is itself a forcer, so antichains
//! over stored forcers reach every deeper forcer.

use std::collections::HashMap;

use thiserror::Error;

use crate::bits::BitVec;
use crate::budget::{BudgetExhausted, Budgets};
use crate::dejongh::DejonghCache;
use crate::formula::{closure, FormulaId, Store};
use crate::prover::{
    entails, maximal_lower_bounds, realize_above, ClosureOps, Entailment, ProverError,
};
use crate::semantics::KripkeModel;
use crate::universal::{Fragment, FragmentError, NodeId};

#[derive(Debug, Error)]
pub enum StructureError {
    #[error("witness search failed: {0}")]
    WitnessSearchFailed(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("not a bounded quasi-semilattice: {0}")]
    NotABqsl(String),
    #[error(transparent)]
    Prover(#[from] ProverError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Budget(#[from] BudgetExhausted),
}

/// Terminal state of a forcer enumeration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KStatus {
    /// Some level came up empty, so the stored forcers are the whole k-set.
    Closed,
    /// Stopped by a budget or an observer before closing.
    Open { next_level: u32 },
}

/// Level-by-level enumeration of the forcers of one formula.
pub struct KEnumeration {
    pub phi: FormulaId,
    pub status: KStatus,
    forcers: Vec<Vec<NodeId>>,
    widths: Vec<usize>,
    types: HashMap<NodeId, BitVec>,
}

impl KEnumeration {
    pub fn closed(&self) -> bool {
        self.status == KStatus::Closed
    }

    /// Number of fully enumerated levels.
    pub fn levels_built(&self) -> u32 {
        self.forcers.len() as u32
    }

    pub fn forcers(&self, level: u32) -> &[NodeId] {
        self.forcers
            .get(level as usize - 1)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn all_forcers(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.forcers.iter().flatten().copied()
    }

    pub fn level_widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn total(&self) -> usize {
        self.widths.iter().sum()
    }

    pub fn is_forcer(&self, id: NodeId) -> bool {
        self.types.contains_key(&id)
    }

    /// Forcing pattern of a stored forcer over the formula's closure.
    pub fn type_of(&self, id: NodeId) -> Option<&BitVec> {
        self.types.get(&id)
    }
}

/// Type of every stored node over one closure, computed bottom-up: the
/// projected meet over a node's strict up-set equals the AND of its
/// successors' projected types, because atom and implication bits of a type
/// already aggregate everything above the node.
pub fn node_types(frag: &Fragment, ops: &ClosureOps) -> Vec<BitVec> {
    let mut out: Vec<BitVec> = Vec::with_capacity(frag.node_count());
    for id in frag.ids() {
        let node = frag.node(id);
        let t = if node.succ.is_empty() {
            ops.leaf_type(node.val)
        } else {
            let mut meet = ops.project(&out[node.succ[0].0 as usize]);
            for &s in &node.succ[1..] {
                meet.and_assign(&ops.project(&out[s.0 as usize]));
            }
            ops.eval(&meet, node.val)
        };
        out.push(t);
    }
    out
}

fn submasks16(mask: u16) -> Vec<u16> {
    let mut out = Vec::with_capacity(1 << mask.count_ones());
    for v in 0..=u32::from(mask) {
        let v = v as u16;
        if v & !mask == 0 {
            out.push(v);
        }
    }
    out
}

/// Observer invoked after each completed level; returning `false` stops the
/// enumeration with an `Open` status.
type LevelHook<'h> =
    &'h mut dyn FnMut(&Fragment, u32, &[Vec<NodeId>], &HashMap<NodeId, BitVec>) -> bool;

fn drive(
    store: &Store,
    frag: &mut Fragment,
    phi: FormulaId,
    budgets: &Budgets,
    hook: LevelHook,
) -> Result<KEnumeration, StructureError> {
    let c = closure(store, phi);
    if c.width() > budgets.width_cap {
        return Err(ProverError::WidthCap {
            width: c.width(),
            cap: budgets.width_cap,
        }
        .into());
    }
    let ops = ClosureOps::new(store, &c);
    let phi_pos = c.pos(phi).expect("root is a closure member");

    let mut forcers: Vec<Vec<NodeId>> = Vec::new();
    let mut types: HashMap<NodeId, BitVec> = HashMap::new();
    let mut lvl: Vec<NodeId> = Vec::new();
    for mask in 0..(1u16 << frag.n) {
        let t = ops.leaf_type(mask);
        if t.get(phi_pos) {
            let id = frag.leaf(mask);
            types.insert(id, t);
            lvl.push(id);
        }
    }

    let mut level = 1u32;
    let status = loop {
        if lvl.is_empty() {
            break KStatus::Closed;
        }
        // A level of width 1 must be followed by an empty level within two
        // steps; anything else means the enumeration is unsound.
        assert!(
            forcers.len() < 2 || forcers[forcers.len() - 2].len() != 1,
            "forcers persist two levels past a width-1 level of k({})",
            crate::formula::print(store, phi),
        );
        forcers.push(std::mem::take(&mut lvl));
        if !hook(frag, level, &forcers, &types) {
            break KStatus::Open {
                next_level: level + 1,
            };
        }
        if level + 1 > budgets.max_levels {
            break KStatus::Open {
                next_level: level + 1,
            };
        }
        let target = level + 1;
        let mut universe: Vec<NodeId> = forcers.iter().flatten().copied().collect();
        universe.sort_unstable();
        let mut staged: Vec<(Vec<NodeId>, u16, BitVec)> = Vec::new();
        let mut meter = budgets.meter();
        let mut node_budget_hit = false;
        let swept = frag.visit_antichains(&universe, &mut meter, &mut |s| {
            if !s.iter().any(|&id| frag.node(id).level == level) {
                return true;
            }
            let mut meet = ops.project(&types[&s[0]]);
            for &m in &s[1..] {
                meet.and_assign(&ops.project(&types[&m]));
            }
            let vmeet = frag.meet_val(s);
            for u in submasks16(vmeet) {
                if s.len() == 1 && u == vmeet {
                    continue;
                }
                let t = ops.eval(&meet, u);
                if t.get(phi_pos) {
                    staged.push((s.to_vec(), u, t));
                }
            }
            if frag.node_count() + staged.len() > budgets.max_nodes {
                node_budget_hit = true;
                return false;
            }
            true
        });
        match swept {
            Err(_) | Ok(false) => {
                debug_assert!(swept.is_err() || node_budget_hit);
                break KStatus::Open { next_level: target };
            }
            Ok(true) => {}
        }
        for (s, u, t) in staged {
            let id = frag.mk_node(&s, u, budgets)?;
            types.insert(id, t);
            lvl.push(id);
        }
        level = target;
    };

    let widths = forcers.iter().map(Vec::len).collect();
    Ok(KEnumeration {
        phi,
        status,
        forcers,
        widths,
        types,
    })
}

/// Enumerate the forcers of `phi` in a fresh fragment.
pub fn enumerate_k(
    store: &Store,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<(Fragment, KEnumeration), StructureError> {
    let mut frag = Fragment::new(n);
    let ken = enumerate_k_in(store, &mut frag, phi, budgets)?;
    Ok((frag, ken))
}

/// Enumerate the forcers of `phi` inside an existing fragment, creating the
/// forcer nodes there. Already-stored nodes are reused, never duplicated.
pub fn enumerate_k_in(
    store: &Store,
    frag: &mut Fragment,
    phi: FormulaId,
    budgets: &Budgets,
) -> Result<KEnumeration, StructureError> {
    drive(store, frag, phi, budgets, &mut |_, _, _, _| true)
}

/// Nodes `alpha`, `beta` on one level and `gamma` one level deeper with the
/// same valuation, where `gamma` lies below `beta` but not below `alpha`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triplet {
    pub alpha: NodeId,
    pub beta: NodeId,
    pub gamma: NodeId,
}

impl Triplet {
    pub fn base_level(&self, frag: &Fragment) -> u32 {
        frag.node(self.alpha).level
    }
}

fn triplet_at(
    frag: &Fragment,
    types: &HashMap<NodeId, BitVec>,
    mintype: Option<&BitVec>,
    a: NodeId,
    b: NodeId,
    g: NodeId,
) -> bool {
    if a == b || !frag.leq(g, b) || g == b || frag.leq(g, a) {
        return false;
    }
    if frag.node(a).val != frag.node(b).val || frag.node(a).val != frag.node(g).val {
        return false;
    }
    match mintype {
        None => true,
        Some(m) => [a, b, g].iter().all(|id| types[id] == *m),
    }
}

/// All triplets among the stored forcers, ordered by level and then by the
/// id triple. `mintype` restricts all three members to that exact type.
pub fn find_triplets(
    frag: &Fragment,
    ken: &KEnumeration,
    mintype: Option<&BitVec>,
) -> Vec<Triplet> {
    let mut out = Vec::new();
    for level in 1..ken.levels_built() {
        let shallow = ken.forcers(level);
        let deep = ken.forcers(level + 1);
        for &a in shallow {
            for &b in shallow {
                for &g in deep {
                    if triplet_at(frag, &ken.types, mintype, a, b, g) {
                        out.push(Triplet {
                            alpha: a,
                            beta: b,
                            gamma: g,
                        });
                    }
                }
            }
        }
    }
    out
}

/// First `want` triplets whose deep member sits at level 3, in canonical
/// candidate order (antichain-lexicographic successor sets, then ascending
/// valuations), without materializing the full third level. Only the deep
/// members of returned triplets are created. Requires two complete levels.
pub fn smallest_triplets(
    frag: &mut Fragment,
    budgets: &Budgets,
    want: usize,
) -> Result<Vec<Triplet>, StructureError> {
    if frag.complete_levels() < 2 {
        return Err(StructureError::PreconditionViolated(
            "triplet search needs the first two levels fully enumerated".into(),
        ));
    }
    let universe: Vec<NodeId> = frag
        .ids()
        .filter(|&id| frag.node(id).level <= 2)
        .collect();
    let lvl2: Vec<NodeId> = frag.level_members(2).to_vec();
    let mut staged: Vec<(Vec<NodeId>, u16, NodeId, NodeId)> = Vec::new();
    let mut meter = budgets.meter();
    frag.visit_antichains(&universe, &mut meter, &mut |s| {
        if !s.iter().any(|&id| frag.node(id).level == 2) {
            return true;
        }
        let meet = frag.meet_val(s);
        for u in submasks16(meet) {
            if s.len() == 1 && u == meet {
                continue;
            }
            // gamma = node(s, u) lies below exactly the level-2 members of s,
            // so beta must come from s and alpha from outside it.
            let beta = s
                .iter()
                .copied()
                .find(|&b| frag.node(b).level == 2 && frag.node(b).val == u);
            let Some(beta) = beta else { continue };
            let alpha = lvl2
                .iter()
                .copied()
                .find(|&a| frag.node(a).val == u && !s.contains(&a));
            let Some(alpha) = alpha else { continue };
            staged.push((s.to_vec(), u, alpha, beta));
            if staged.len() == want {
                return false;
            }
        }
        true
    })?;
    let mut out = Vec::new();
    for (s, u, alpha, beta) in staged {
        let gamma = frag.mk_node(&s, u, budgets)?;
        debug_assert!(triplet_at(frag, &HashMap::new(), None, alpha, beta, gamma));
        out.push(Triplet { alpha, beta, gamma });
    }
    Ok(out)
}

/// Stratum of a formula within the join-irreducible order.
#[derive(Debug)]
pub enum Stratum {
    /// Equivalent to `F`.
    Bottom,
    /// A proper join of at least two smaller elements.
    Reducible { components: Vec<FormulaId> },
    /// Join-irreducible with a finite k-set.
    J1 { k_size: usize },
    /// Join-irreducible, infinite k-set of eventual width two.
    J2 { triplet: Triplet },
    /// Join-irreducible with three incomparable minimal-type forcers.
    J3 { witnesses: [NodeId; 3] },
    /// Budget ran out before any criterion fired.
    Unknown { levels_built: u32 },
}

impl Stratum {
    pub fn name(&self) -> &'static str {
        match self {
            Stratum::Bottom => "bottom",
            Stratum::Reducible { .. } => "reducible",
            Stratum::J1 { .. } => "J1",
            Stratum::J2 { .. } => "J2",
            Stratum::J3 { .. } => "J3",
            Stratum::Unknown { .. } => "unknown",
        }
    }
}

pub struct Classification {
    pub stratum: Stratum,
    /// Unique minimal type over the formula's closure, when join-irreducible.
    pub mintype: Option<BitVec>,
    /// Fragment grown by the enumeration, when one ran.
    pub frag: Option<Fragment>,
    pub ken: Option<KEnumeration>,
}

/// Decide where `phi` sits: bottom, reducible, or the J1/J2/J3 stratum of
/// the join-irreducibles. Three pairwise-incomparable minimal-type forcers
/// certify J3 and win over any triplet; a closed enumeration certifies J1; a
/// minimal-type triplet with no J3 witness by the budget certifies J2.
pub fn classify(
    store: &Store,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<Classification, StructureError> {
    let table = realize_above(store, phi, phi, n, budgets)?;
    if table.is_empty() {
        return Ok(Classification {
            stratum: Stratum::Bottom,
            mintype: None,
            frag: None,
            ken: None,
        });
    }
    let minimal = table.minimal_types();
    if minimal.len() > 1 {
        let components = minimal
            .iter()
            .map(|&i| table.conjunction_of(store, i))
            .collect();
        return Ok(Classification {
            stratum: Stratum::Reducible { components },
            mintype: None,
            frag: None,
            ken: None,
        });
    }
    let mintype = table.type_bits(minimal[0]).clone();

    let mut frag = Fragment::new(n);
    let mut mins: Vec<NodeId> = Vec::new();
    let mut j3: Option<[NodeId; 3]> = None;
    let mut j2: Option<Triplet> = None;
    let ken = drive(store, &mut frag, phi, budgets, &mut |fr, lvl, forcers, types| {
        for &id in &forcers[lvl as usize - 1] {
            if types[&id] == mintype {
                mins.push(id);
            }
        }
        for i in 0..mins.len() {
            for j in i + 1..mins.len() {
                if fr.comparable(mins[i], mins[j]) {
                    continue;
                }
                for k in j + 1..mins.len() {
                    if !fr.comparable(mins[i], mins[k]) && !fr.comparable(mins[j], mins[k]) {
                        j3 = Some([mins[i], mins[j], mins[k]]);
                        return false;
                    }
                }
            }
        }
        if j2.is_none() && lvl >= 2 {
            let shallow = &forcers[lvl as usize - 2];
            let deep = &forcers[lvl as usize - 1];
            'scan: for &a in shallow {
                for &b in shallow {
                    for &g in deep {
                        if triplet_at(fr, types, Some(&mintype), a, b, g) {
                            j2 = Some(Triplet {
                                alpha: a,
                                beta: b,
                                gamma: g,
                            });
                            break 'scan;
                        }
                    }
                }
            }
        }
        true
    })?;

    let stratum = if let Some(witnesses) = j3 {
        Stratum::J3 { witnesses }
    } else if ken.closed() {
        assert!(
            j2.is_none(),
            "a closed enumeration cannot carry a minimal-type triplet"
        );
        Stratum::J1 { k_size: ken.total() }
    } else if let Some(triplet) = j2 {
        Stratum::J2 { triplet }
    } else {
        Stratum::Unknown {
            levels_built: ken.levels_built(),
        }
    };
    Ok(Classification {
        stratum,
        mintype: Some(mintype),
        frag: Some(frag),
        ken: Some(ken),
    })
}

/// The up-closed witness area of a triplet: both up-sets plus the two
/// recursively built chains that keep exactly two members per deeper level.
pub struct ASet {
    pub triplet: Triplet,
    pub base_level: u32,
    pub depth: u32,
    /// `chi0[i]` sits at level `base_level + i`; starts at `alpha`.
    pub chi0: Vec<NodeId>,
    /// `chi1[i]` sits at level `base_level + i`; starts at `beta`, `gamma`.
    pub chi1: Vec<NodeId>,
    /// Sorted union of the up-sets and both chains.
    pub members: Vec<NodeId>,
}

impl ASet {
    pub fn contains(&self, id: NodeId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// Build the witness area of a well-positioned triplet down to `depth`.
pub fn build_aset(
    frag: &mut Fragment,
    triplet: Triplet,
    depth: u32,
    budgets: &Budgets,
) -> Result<ASet, StructureError> {
    let Triplet { alpha, beta, gamma } = triplet;
    let l = frag.node(alpha).level;
    let val = frag.node(alpha).val;
    let positioned = frag.node(beta).level == l
        && frag.node(gamma).level == l + 1
        && frag.leq(gamma, beta)
        && !frag.leq(gamma, alpha)
        && alpha != beta
        && frag.node(beta).val == val
        && frag.node(gamma).val == val;
    if !positioned {
        return Err(StructureError::PreconditionViolated(
            "nodes do not form a well-positioned triplet".into(),
        ));
    }
    if depth < l + 1 {
        return Err(StructureError::PreconditionViolated(
            "depth must reach past the triplet".into(),
        ));
    }

    let mut chi0 = vec![alpha];
    let mut chi1 = vec![beta, gamma];
    while l + (chi0.len() as u32) <= depth {
        let i = chi0.len() - 1;
        let a = frag.node_of(&[chi0[i], chi1[i]], budgets)?;
        assert_eq!(
            frag.node(a).level,
            l + chi0.len() as u32,
            "chain members must be incomparable"
        );
        chi0.push(a);
        if l + (chi1.len() as u32) <= depth {
            let j = chi1.len();
            let b = frag.node_of(&[chi0[j - 2], chi1[j - 1]], budgets)?;
            assert_eq!(
                frag.node(b).level,
                l + j as u32,
                "chain members must be incomparable"
            );
            chi1.push(b);
        }
    }
    for (i, &id) in chi0.iter().enumerate() {
        assert_eq!(frag.node(id).val, val, "chain valuation drifted at 0/{i}");
    }
    for (i, &id) in chi1.iter().enumerate() {
        assert_eq!(frag.node(id).val, val, "chain valuation drifted at 1/{i}");
    }

    let mut members = frag.up_set(alpha);
    members.extend(frag.up_set(gamma));
    members.extend(chi0.iter().copied());
    members.extend(chi1.iter().copied());
    members.sort_unstable();
    members.dedup();

    // Exactly two members per level strictly past the triplet.
    for m in l + 2..=depth {
        let count = members.iter().filter(|&&id| frag.node(id).level == m).count();
        assert_eq!(count, 2, "witness area must have width two at level {m}");
    }
    Ok(ASet {
        triplet,
        base_level: l,
        depth,
        chi0,
        chi1,
        members,
    })
}

/// Maximal nodes outside an up-closed set `dset`, among levels up to
/// `max_level`. Because `dset` is up-closed, a node outside it is maximal
/// outside it exactly when all its immediate successors lie inside; those
/// nodes are reachable as antichains over `dset` members, so the full levels
/// never need to be built. Their conjunction of node formulas has the same
/// forcers as the conjunction over the whole complement, since the
/// complement is the down-closure of its maximal elements.
fn max_complement(
    frag: &mut Fragment,
    dset: &[NodeId],
    max_level: u32,
    budgets: &Budgets,
) -> Result<Vec<NodeId>, StructureError> {
    debug_assert!(dset.windows(2).all(|w| w[0] < w[1]), "dset must be sorted");
    debug_assert!(
        dset.iter().all(|&id| frag
            .node(id)
            .succ
            .iter()
            .all(|s| dset.binary_search(s).is_ok())),
        "dset must be up-closed"
    );
    let in_d = |id: NodeId, d: &[NodeId]| d.binary_search(&id).is_ok();
    let mut out: Vec<NodeId> = Vec::new();
    for mask in 0..(1u16 << frag.n) {
        let leaf = frag.leaf(mask);
        if !in_d(leaf, dset) {
            out.push(leaf);
        }
    }
    let universe: Vec<NodeId> = dset
        .iter()
        .copied()
        .filter(|&id| frag.node(id).level < max_level)
        .collect();
    let mut staged: Vec<(Vec<NodeId>, u16)> = Vec::new();
    let mut meter = budgets.meter();
    frag.visit_antichains(&universe, &mut meter, &mut |s| {
        let lvl = 1 + s.iter().map(|&id| frag.node(id).level).max().unwrap();
        if lvl > max_level {
            return true;
        }
        let meet = frag.meet_val(s);
        for u in submasks16(meet) {
            if s.len() == 1 && u == meet {
                continue;
            }
            staged.push((s.to_vec(), u));
        }
        true
    })?;
    for (s, u) in staged {
        let id = frag.mk_node(&s, u, budgets)?;
        if !in_d(id, dset) {
            out.push(id);
        }
    }
    out.sort_unstable();
    debug_assert!(frag.is_antichain(&out));
    Ok(out)
}

/// A formula whose forcers are exactly a triplet's witness area.
pub struct J2Witness {
    pub formula: FormulaId,
    pub aset: ASet,
    /// Maximal nodes excluded by the leading conjunction.
    pub excluded: Vec<NodeId>,
}

/// Synthesize the defining formula of a well-positioned triplet: shut out
/// everything outside the witness area up to two levels past the triplet,
/// force revisiting the two chains, pin the valuation, and route missing
/// atoms back into the chains.
pub fn build_j2_formula(
    store: &Store,
    frag: &mut Fragment,
    cache: &mut DejonghCache,
    triplet: Triplet,
    budgets: &Budgets,
) -> Result<J2Witness, StructureError> {
    let l = frag.node(triplet.alpha).level;
    let depth = l + 2;
    let aset = build_aset(frag, triplet, depth, budgets)?;
    let excluded = max_complement(frag, &aset.members, depth, budgets)?;
    let c0 = *aset.chi0.last().unwrap();
    let c1 = *aset.chi1.last().unwrap();
    debug_assert_eq!(frag.node(c0).level, depth);
    debug_assert_eq!(frag.node(c1).level, depth);
    let chain_disj = store.disj(&[
        cache.node_formulas(store, frag, c0).pos,
        cache.node_formulas(store, frag, c1).pos,
    ]);
    let mut parts: Vec<FormulaId> = Vec::new();
    for &b in &excluded {
        parts.push(cache.node_formulas(store, frag, b).neg);
    }
    parts.push(store.neg(store.neg(chain_disj)));
    let val = frag.node(triplet.alpha).val;
    for i in 0..frag.n {
        if val >> i & 1 == 1 {
            parts.push(store.atom(i + 1));
        }
    }
    for i in 0..frag.n {
        if val >> i & 1 == 0 {
            parts.push(store.implies(store.atom(i + 1), chain_disj));
        }
    }
    Ok(J2Witness {
        formula: store.conj(&parts),
        aset,
        excluded,
    })
}

/// Map every world of a finite model to a fragment node with the same
/// valuation and successor structure. The image of a world realizes the
/// world's forcing pattern over any closure: types aggregate bottom-up
/// through projected meets, and both sides aggregate the same successor
/// types, so the correspondence is preserved by induction.
pub fn embed_model(
    frag: &mut Fragment,
    model: &KripkeModel,
    budgets: &Budgets,
) -> Result<Vec<NodeId>, StructureError> {
    model
        .validate()
        .map_err(|e| StructureError::PreconditionViolated(format!("invalid model: {e}")))?;
    let mut image: Vec<Option<NodeId>> = vec![None; model.nodes.len()];
    let mut stack: Vec<(usize, bool)> = (0..model.nodes.len()).rev().map(|w| (w, false)).collect();
    while let Some((w, expanded)) = stack.pop() {
        if image[w].is_some() {
            continue;
        }
        if !expanded {
            stack.push((w, true));
            for &s in &model.nodes[w].succ {
                if image[s].is_none() {
                    stack.push((s, false));
                }
            }
            continue;
        }
        let mask = model.nodes[w]
            .val
            .iter()
            .fold(0u16, |m, &a| m | 1 << (a - 1));
        let mut succ: Vec<NodeId> = model.nodes[w]
            .succ
            .iter()
            .map(|&s| image[s].unwrap())
            .collect();
        succ.sort_unstable();
        succ.dedup();
        let snapshot = succ.clone();
        succ.retain(|&a| !snapshot.iter().any(|&b| a != b && frag.leq(b, a)));
        let id = if succ.is_empty() {
            frag.leaf(mask)
        } else if succ.len() == 1 && frag.node(succ[0]).val == mask {
            succ[0]
        } else {
            frag.mk_node(&succ, mask, budgets)?
        };
        image[w] = Some(id);
    }
    Ok(image.into_iter().map(Option::unwrap).collect())
}

/// Check one fragment node's forcing of `phi` by a bottom-up type pass.
fn forces_in(store: &Store, frag: &Fragment, id: NodeId, phi: FormulaId) -> bool {
    let c = closure(store, phi);
    let ops = ClosureOps::new(store, &c);
    let pos = c.pos(phi).expect("root is a closure member");
    node_types(frag, &ops)[id.0 as usize].get(pos)
}

/// Search deepening forcer levels of `base` for `want` same-level forcers of
/// the exact minimal type, incomparable with every node in `apart`, forcing
/// none of `avoid`. Returns the level and the first such nodes.
fn find_minimal_forcers(
    store: &Store,
    frag: &mut Fragment,
    base: FormulaId,
    mintype: &BitVec,
    want: usize,
    apart: &[NodeId],
    avoid: &[FormulaId],
    min_level: u32,
    budgets: &Budgets,
) -> Result<Option<(u32, Vec<NodeId>)>, StructureError> {
    let avoid_ops: Vec<(ClosureOps, usize)> = avoid
        .iter()
        .map(|&f| {
            let c = closure(store, f);
            let pos = c.pos(f).expect("root is a closure member");
            (ClosureOps::new(store, &c), pos)
        })
        .collect();
    let mut hit: Option<(u32, Vec<NodeId>)> = None;
    drive(store, frag, base, budgets, &mut |fr, lvl, forcers, types| {
        if lvl < min_level {
            return true;
        }
        let avoid_types: Vec<Vec<BitVec>> = avoid_ops
            .iter()
            .map(|(ops, _)| node_types(fr, ops))
            .collect();
        let mut picked: Vec<NodeId> = Vec::new();
        for &id in &forcers[lvl as usize - 1] {
            if types[&id] != *mintype {
                continue;
            }
            if apart.iter().any(|&a| fr.comparable(a, id)) {
                continue;
            }
            if avoid_ops
                .iter()
                .zip(&avoid_types)
                .any(|(&(_, pos), ts)| ts[id.0 as usize].get(pos))
            {
                continue;
            }
            picked.push(id);
            if picked.len() == want {
                break;
            }
        }
        if picked.len() == want {
            hit = Some((lvl, picked));
            return false;
        }
        true
    })?;
    Ok(hit)
}

/// Minimal-type classification data shared by the witness builders.
fn irreducible_mintype(
    store: &Store,
    phi: FormulaId,
    n: u16,
    budgets: &Budgets,
) -> Result<BitVec, StructureError> {
    let table = realize_above(store, phi, phi, n, budgets)?;
    let minimal = table.minimal_types();
    if table.is_empty() || minimal.len() != 1 {
        return Err(StructureError::PreconditionViolated(format!(
            "formula {} is not join-irreducible",
            crate::formula::print(store, phi)
        )));
    }
    Ok(table.type_bits(minimal[0]).clone())
}

/// Embed the countermodel of a failed entailment `base |/- psi` and return
/// the image of its distinguished world: a node forcing `base` but not
/// `psi`, re-verified inside the fragment.
fn embed_separating_node(
    store: &Store,
    frag: &mut Fragment,
    base: FormulaId,
    psi: FormulaId,
    budgets: &Budgets,
) -> Result<NodeId, StructureError> {
    match entails(store, base, psi, frag.n, budgets)? {
        Entailment::Valid => Err(StructureError::PreconditionViolated(format!(
            "{} entails {}, no separating node exists",
            crate::formula::print(store, base),
            crate::formula::print(store, psi)
        ))),
        Entailment::Invalid(cm) => {
            let image = embed_model(frag, &cm.model, budgets)?;
            let node = image[cm.world];
            assert!(
                forces_in(store, frag, node, base) && !forces_in(store, frag, node, psi),
                "embedded separating node lost its forcing pattern"
            );
            Ok(node)
        }
    }
}

/// A formula strictly below `base` that meets every listed formula in a
/// finite k-set, with the nodes that shape it.
pub struct IncompWitness {
    pub formula: FormulaId,
    /// Three incomparable deep anchors keeping the k-set infinite.
    pub anchors: [NodeId; 3],
    /// Maximal nodes excluded by the trailing conjunction.
    pub excluded: Vec<NodeId>,
}

/// Build a strict lower neighbour direction for `base` that is independent
/// of every formula in `avoid`: below `base`, not equivalent to it, and
/// sharing only a finite k-set with each avoided formula. `base` must sit in
/// the top stratum and must not entail any avoided formula.
pub fn incomp_witness(
    store: &Store,
    frag: &mut Fragment,
    cache: &mut DejonghCache,
    base: FormulaId,
    avoid: &[FormulaId],
    budgets: &Budgets,
) -> Result<IncompWitness, StructureError> {
    let n = frag.n;
    let cls = classify(store, base, n, budgets)?;
    if !matches!(cls.stratum, Stratum::J3 { .. }) {
        return Err(StructureError::PreconditionViolated(format!(
            "base formula must classify as J3, found {}",
            cls.stratum.name()
        )));
    }
    let mintype = cls.mintype.expect("join-irreducible classification");

    let mut alphas = Vec::with_capacity(avoid.len());
    for &psi in avoid {
        alphas.push(embed_separating_node(store, frag, base, psi, budgets)?);
    }

    let ops_base = {
        let c = closure(store, base);
        ClosureOps::new(store, &c)
    };
    let mut min_level = 1;
    let mut last_failure = String::from("no candidate level reached");
    for _attempt in 0..4 {
        let Some((lvl, gammas)) =
            find_minimal_forcers(store, frag, base, &mintype, 3, &alphas, &[], min_level, budgets)?
        else {
            return Err(StructureError::WitnessSearchFailed(format!(
                "no level offers three incomparable minimal-type forcers ({last_failure})"
            )));
        };
        min_level = lvl + 1;

        let mut anchors = Vec::with_capacity(3);
        for &g in &gammas {
            let mut members = alphas.clone();
            members.push(g);
            anchors.push(frag.node_of(&members, budgets)?);
        }
        if anchors[0] == anchors[1] || anchors[0] == anchors[2] || anchors[1] == anchors[2] {
            last_failure = format!("anchors collapsed at level {lvl}");
            continue;
        }
        let tys = node_types(frag, &ops_base);
        if anchors.iter().any(|&d| tys[d.0 as usize] != mintype) {
            last_failure = format!("anchor type drifted from the minimal type at level {lvl}");
            continue;
        }

        let mut dset: Vec<NodeId> = Vec::new();
        for &d in &anchors {
            dset.extend(frag.up_set(d));
        }
        dset.sort_unstable();
        dset.dedup();
        let ddepth = anchors.iter().map(|&d| frag.node(d).level).max().unwrap();
        let excluded = max_complement(frag, &dset, ddepth, budgets)?;

        let anchor_disj = store.disj(&[
            cache.node_formulas(store, frag, anchors[0]).pos,
            cache.node_formulas(store, frag, anchors[1]).pos,
            cache.node_formulas(store, frag, anchors[2]).pos,
        ]);
        let mut parts = vec![store.neg(store.neg(anchor_disj))];
        for &b in &excluded {
            parts.push(cache.node_formulas(store, frag, b).neg);
        }
        let rho = store.conj(&parts);

        if !entails(store, rho, base, n, budgets)?.is_valid() {
            last_failure = format!("candidate at level {lvl} is not below the base");
            continue;
        }
        if entails(store, base, rho, n, budgets)?.is_valid() {
            last_failure = format!("candidate at level {lvl} collapsed onto the base");
            continue;
        }
        let mut shared_finite = true;
        for &psi in avoid {
            let (_, ken) = enumerate_k(store, store.and(rho, psi), n, budgets)?;
            if !ken.closed() {
                shared_finite = false;
                last_failure = format!(
                    "candidate at level {lvl} shares an unbounded k-set with {}",
                    crate::formula::print(store, psi)
                );
                break;
            }
        }
        if !shared_finite {
            continue;
        }
        return Ok(IncompWitness {
            formula: rho,
            anchors: [anchors[0], anchors[1], anchors[2]],
            excluded,
        });
    }
    Err(StructureError::WitnessSearchFailed(last_failure))
}

/// Finite bounded quasi-semilattice: a partial order with a unique minimum
/// where maximal lower bounds cover every common lower bound.
#[derive(Clone)]
pub struct Bqsl {
    size: usize,
    rel: Vec<bool>,
    bottom: usize,
}

impl Bqsl {
    pub fn from_leq(size: usize, leq: impl Fn(usize, usize) -> bool) -> Result<Bqsl, StructureError> {
        let mut rel = vec![false; size * size];
        for a in 0..size {
            for b in 0..size {
                rel[a * size + b] = leq(a, b);
            }
        }
        let bottom = Self::check(size, &rel)?;
        Ok(Bqsl { size, rel, bottom })
    }

    fn check(size: usize, rel: &[bool]) -> Result<usize, StructureError> {
        if size == 0 {
            return Err(StructureError::NotABqsl("empty carrier".into()));
        }
        let leq = |a: usize, b: usize| rel[a * size + b];
        for a in 0..size {
            if !leq(a, a) {
                return Err(StructureError::NotABqsl(format!("{a} not reflexive")));
            }
            for b in 0..size {
                if a != b && leq(a, b) && leq(b, a) {
                    return Err(StructureError::NotABqsl(format!("{a} and {b} collapse")));
                }
                for c in 0..size {
                    if leq(a, b) && leq(b, c) && !leq(a, c) {
                        return Err(StructureError::NotABqsl(format!(
                            "{a} <= {b} <= {c} is not transitive"
                        )));
                    }
                }
            }
        }
        let bottoms: Vec<usize> = (0..size)
            .filter(|&a| (0..size).all(|b| leq(a, b)))
            .collect();
        if bottoms.len() != 1 {
            return Err(StructureError::NotABqsl(format!(
                "{} minimum elements",
                bottoms.len()
            )));
        }
        // Finite posets with a bottom always cover common lower bounds by
        // maximal ones; assert rather than trust.
        for a in 0..size {
            for b in 0..size {
                let mlb = Self::mlb_of(size, rel, a, b);
                for c in 0..size {
                    if leq(c, a) && leq(c, b) {
                        assert!(
                            mlb.iter().any(|&m| leq(c, m)),
                            "maximal lower bounds must cover {c}"
                        );
                    }
                }
            }
        }
        Ok(bottoms[0])
    }

    fn mlb_of(size: usize, rel: &[bool], a: usize, b: usize) -> Vec<usize> {
        let leq = |x: usize, y: usize| rel[x * size + y];
        let lower: Vec<usize> = (0..size).filter(|&c| leq(c, a) && leq(c, b)).collect();
        lower
            .iter()
            .copied()
            .filter(|&c| !lower.iter().any(|&d| d != c && leq(c, d)))
            .collect()
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn bottom(&self) -> usize {
        self.bottom
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.rel[a * self.size + b]
    }

    /// Maximal lower bounds of a pair, ascending.
    pub fn mlb(&self, a: usize, b: usize) -> Vec<usize> {
        Self::mlb_of(self.size, &self.rel, a, b)
    }

    pub fn maximal_in(&self, set: &[usize]) -> Vec<usize> {
        set.iter()
            .copied()
            .filter(|&a| !set.iter().any(|&b| b != a && self.leq(a, b)))
            .collect()
    }

    pub fn minimum_in(&self, set: &[usize]) -> Option<usize> {
        set.iter()
            .copied()
            .find(|&a| set.iter().all(|&b| self.leq(a, b)))
    }

    /// Substructure induced on `carrier` (ascending original indices).
    pub fn induced(&self, carrier: &[usize]) -> Result<Bqsl, StructureError> {
        Bqsl::from_leq(carrier.len(), |a, b| self.leq(carrier[a], carrier[b]))
    }
}

/// Does the inclusion of `small` into `large` (both carriers of `big`,
/// ascending) preserve maximal lower bounds exactly?
fn inclusion_preserves_mlb(big: &Bqsl, small: &[usize], large: &[usize]) -> bool {
    let mlb_in = |carrier: &[usize], a: usize, b: usize| -> Vec<usize> {
        let lower: Vec<usize> = carrier
            .iter()
            .copied()
            .filter(|&c| big.leq(c, a) && big.leq(c, b))
            .collect();
        lower
            .iter()
            .copied()
            .filter(|&c| !lower.iter().any(|&d| d != c && big.leq(c, d)))
            .collect()
    };
    for (i, &a) in small.iter().enumerate() {
        for &b in &small[i..] {
            if mlb_in(small, a, b) != mlb_in(large, a, b) {
                return false;
            }
        }
    }
    true
}

/// Grow `start` to the whole of `big` one element at a time, each step
/// adding a minimal element of the remaining difference and verifying that
/// the inclusion is an embedding of bounded quasi-semilattices. Returns the
/// chain of carriers, starting at `start` and ending at the full carrier.
pub fn one_point_chain(big: &Bqsl, start: &[usize]) -> Result<Vec<Vec<usize>>, StructureError> {
    let mut current: Vec<usize> = start.to_vec();
    current.sort_unstable();
    current.dedup();
    if current.iter().any(|&a| a >= big.size()) {
        return Err(StructureError::PreconditionViolated(
            "carrier out of range".into(),
        ));
    }
    if !current.contains(&big.bottom()) {
        return Err(StructureError::PreconditionViolated(
            "starting carrier must contain the bottom".into(),
        ));
    }
    big.induced(&current)?;
    let mut chain = vec![current.clone()];
    while current.len() < big.size() {
        let diff: Vec<usize> = (0..big.size()).filter(|a| !current.contains(a)).collect();
        let minimal: Vec<usize> = diff
            .iter()
            .copied()
            .filter(|&d| !diff.iter().any(|&e| e != d && big.leq(e, d)))
            .collect();
        let mut step = None;
        for d in minimal {
            let mut next = current.clone();
            next.push(d);
            next.sort_unstable();
            if big.induced(&next).is_ok() && inclusion_preserves_mlb(big, &current, &next) {
                step = Some(next);
                break;
            }
        }
        let Some(next) = step else {
            return Err(StructureError::WitnessSearchFailed(
                "no one-point extension preserves the structure".into(),
            ));
        };
        current = next;
        chain.push(current.clone());
    }
    Ok(chain)
}

/// How the extension formula was produced.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionRoute {
    /// Several maximal strict lower images: join them under a fresh anchor.
    DirectJoin,
    /// One maximal strict lower image: widen first with a fresh independent
    /// direction, then join.
    AugmentedJoin,
    /// Only the bottom below: a fresh independent direction alone.
    FreshAntichain,
}

/// Result of realizing one new poset element as a formula.
pub struct Extension {
    pub formula: FormulaId,
    pub route: ExtensionRoute,
    /// The independent direction added on the augmented route.
    pub augmented_with: Option<FormulaId>,
    /// The fresh anchor node, on the joining routes.
    pub anchor: Option<NodeId>,
}

fn joined_extension(
    store: &Store,
    frag: &mut Fragment,
    cache: &mut DejonghCache,
    u_star: FormulaId,
    k_imgs: &[FormulaId],
    l_disj: &[FormulaId],
    avoid: &[FormulaId],
    budgets: &Budgets,
) -> Result<(FormulaId, NodeId), StructureError> {
    let n = frag.n;
    let mintype = irreducible_mintype(store, u_star, n, budgets)?;
    let mut alphas = Vec::with_capacity(k_imgs.len());
    for &psi in k_imgs {
        alphas.push(embed_separating_node(store, frag, u_star, psi, budgets)?);
    }
    let ops_base = {
        let c = closure(store, u_star);
        ClosureOps::new(store, &c)
    };
    let mut min_level = 1;
    for _attempt in 0..4 {
        let Some((lvl, cands)) = find_minimal_forcers(
            store, frag, u_star, &mintype, 2, &alphas, avoid, min_level, budgets,
        )?
        else {
            return Err(StructureError::WitnessSearchFailed(
                "no level offers an anchor pair clear of the lower and incomparable images".into(),
            ));
        };
        min_level = lvl + 1;
        for &cand in &cands {
            let mut members = alphas.clone();
            members.push(cand);
            let anchor = frag.node_of(&members, budgets)?;
            let tys = node_types(frag, &ops_base);
            if tys[anchor.0 as usize] != mintype {
                continue;
            }
            let pair = cache.node_formulas(store, frag, anchor);
            let mut disj = l_disj.to_vec();
            disj.push(pair.pos);
            return Ok((store.implies(pair.neg, store.disj(&disj)), anchor));
        }
    }
    Err(StructureError::WitnessSearchFailed(
        "every candidate anchor drifted from the minimal type".into(),
    ))
}

/// Realize a one-point extension of an embedded poset: given a bounded
/// quasi-semilattice whose old elements are already realized order-faithfully
/// by formulas (bottom as `F`, the rest in the top stratum), produce a
/// formula for the new element `q_new` that sits strictly below the least
/// upper image, strictly above every lower image, incomparable with the
/// rest, and shares only finitely many forcers with each incomparable image
/// beyond what the lower images explain. All four conditions are checked on
/// the result before it is returned.
pub fn fraisse_extend(
    store: &Store,
    frag: &mut Fragment,
    cache: &mut DejonghCache,
    q2: &Bqsl,
    images: &[Option<FormulaId>],
    q_new: usize,
    budgets: &Budgets,
) -> Result<Extension, StructureError> {
    let n = frag.n;
    if images.len() != q2.size() || q_new >= q2.size() {
        return Err(StructureError::PreconditionViolated(
            "image map must match the poset carrier".into(),
        ));
    }
    if images[q_new].is_some()
        || images
            .iter()
            .enumerate()
            .any(|(i, v)| i != q_new && v.is_none())
    {
        return Err(StructureError::PreconditionViolated(
            "exactly the new element must lack an image".into(),
        ));
    }
    let bottom = q2.bottom();
    if q_new == bottom {
        return Err(StructureError::PreconditionViolated(
            "the new element cannot be the bottom".into(),
        ));
    }
    if images[bottom] != Some(store.bottom()) {
        return Err(StructureError::PreconditionViolated(
            "the bottom must be realized as F".into(),
        ));
    }
    let img = |i: usize| images[i].unwrap();
    for i in 0..q2.size() {
        for j in 0..q2.size() {
            if i == j || i == q_new || j == q_new {
                continue;
            }
            let holds = entails(store, img(i), img(j), n, budgets)?.is_valid();
            if holds != q2.leq(i, j) {
                return Err(StructureError::PreconditionViolated(format!(
                    "images are not order-faithful at ({i}, {j})"
                )));
            }
        }
    }
    for i in 0..q2.size() {
        if i == q_new || i == bottom {
            continue;
        }
        let cls = classify(store, img(i), n, budgets)?;
        if !matches!(cls.stratum, Stratum::J3 { .. }) {
            return Err(StructureError::PreconditionViolated(format!(
                "image of element {i} must classify as J3, found {}",
                cls.stratum.name()
            )));
        }
    }

    let ups: Vec<usize> = (0..q2.size())
        .filter(|&i| i != q_new && q2.leq(q_new, i))
        .collect();
    let lows: Vec<usize> = (0..q2.size())
        .filter(|&i| i != q_new && q2.leq(i, q_new))
        .collect();
    let incs: Vec<usize> = (0..q2.size())
        .filter(|&i| i != q_new && !q2.leq(q_new, i) && !q2.leq(i, q_new))
        .collect();
    let u_star = if ups.is_empty() {
        store.top()
    } else {
        let m = q2.minimum_in(&ups).ok_or_else(|| {
            StructureError::PreconditionViolated("the upper set has no minimum".into())
        })?;
        img(m)
    };
    let k_imgs: Vec<FormulaId> = incs.iter().map(|&i| img(i)).collect();
    let low_nonbottom: Vec<FormulaId> = lows
        .iter()
        .filter(|&&i| i != bottom)
        .map(|&i| img(i))
        .collect();

    let (formula, route, augmented_with, anchor) = if low_nonbottom.is_empty() {
        let w = incomp_witness(store, frag, cache, u_star, &k_imgs, budgets)?;
        (w.formula, ExtensionRoute::FreshAntichain, None, None)
    } else {
        let maximal = q2.maximal_in(&lows);
        let (route, l_disj, chi) = if maximal.len() == 1 {
            let mut widen_past: Vec<FormulaId> = k_imgs.clone();
            widen_past.extend(low_nonbottom.iter().copied());
            let chi = incomp_witness(store, frag, cache, u_star, &widen_past, budgets)?.formula;
            let mut l_disj = low_nonbottom.clone();
            l_disj.push(chi);
            (ExtensionRoute::AugmentedJoin, l_disj, Some(chi))
        } else {
            (ExtensionRoute::DirectJoin, low_nonbottom.clone(), None)
        };
        let mut avoid = k_imgs.clone();
        avoid.extend(l_disj.iter().copied());
        let (formula, anchor) = joined_extension(
            store, frag, cache, u_star, &k_imgs, &l_disj, &avoid, budgets,
        )?;
        (formula, route, chi, Some(anchor))
    };

    // Postcondition 1: strictly below the least upper image.
    if !entails(store, formula, u_star, n, budgets)?.is_valid() {
        return Err(StructureError::WitnessSearchFailed(
            "extension is not below the least upper image".into(),
        ));
    }
    if entails(store, u_star, formula, n, budgets)?.is_valid() {
        return Err(StructureError::WitnessSearchFailed(
            "extension collapsed onto the least upper image".into(),
        ));
    }
    // Postcondition 2: strictly above every lower image.
    for &i in &lows {
        if !entails(store, img(i), formula, n, budgets)?.is_valid() {
            return Err(StructureError::WitnessSearchFailed(format!(
                "extension is not above the image of element {i}"
            )));
        }
        if entails(store, formula, img(i), n, budgets)?.is_valid() {
            return Err(StructureError::WitnessSearchFailed(format!(
                "extension collapsed onto the image of element {i}"
            )));
        }
    }
    // Postcondition 3: incomparable with every remaining image.
    for &psi in &k_imgs {
        if entails(store, formula, psi, n, budgets)?.is_valid()
            || entails(store, psi, formula, n, budgets)?.is_valid()
        {
            return Err(StructureError::WitnessSearchFailed(
                "extension is comparable with an incomparable image".into(),
            ));
        }
    }
    // Postcondition 4: common lower bounds stay explained. Each maximal
    // join-irreducible below the extension and an incomparable image must
    // lie below a lower image, or have a finite k-set and therefore sit
    // outside the top stratum the embedding lives in.
    for &psi in &k_imgs {
        for comp in maximal_lower_bounds(store, formula, psi, n, budgets)? {
            let below_low = {
                let mut found = false;
                for &low in &low_nonbottom {
                    if entails(store, comp, low, n, budgets)?.is_valid() {
                        found = true;
                        break;
                    }
                }
                found
            };
            if below_low {
                continue;
            }
            let (_, ken) = enumerate_k(store, comp, n, budgets)?;
            if !ken.closed() {
                return Err(StructureError::WitnessSearchFailed(
                    "a common lower bound escapes the lower images with an unbounded k-set".into(),
                ));
            }
        }
    }
    Ok(Extension {
        formula,
        route,
        augmented_with,
        anchor,
    })
}
