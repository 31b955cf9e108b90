//! Release gates. Each test checks one gate end to end and prints a summary
//! line with its runtime; the suite is expected to pass wholesale under the
//! desk budget profile on a single core.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use heyting_core::bits::BitVec;
use heyting_core::budget::Budgets;
use heyting_core::dejongh::{order_reversal_holds, verify_node_formulas, DejonghCache};
use heyting_core::formula::{closure, print, rn_ladder, FormulaId, Store};
use heyting_core::prover::{
    decompose, entails, equiv, is_join_irreducible, ClosureOps, Entailment, JoinIrreducibility,
};
use heyting_core::semantics::{brute_countermodel, ForcingTable, ModelBank};
use heyting_core::structure::{
    build_aset, build_j2_formula, classify, enumerate_k, enumerate_k_in, find_triplets,
    fraisse_extend, node_types, smallest_triplets, Bqsl, ExtensionRoute, Stratum,
};
use heyting_core::universal::{Fragment, NodeId};

/// All formulas over `F`, `T`, `x1..xn` with exactly `k` binary connectives
/// (negation is sugar for implication into `F`), grouped by `k`.
fn formulas_by_size(store: &Store, n: u16, max_size: usize) -> Vec<Vec<FormulaId>> {
    let mut leaves = vec![store.bottom(), store.top()];
    for i in 1..=n {
        leaves.push(store.atom(i));
    }
    let mut sizes = vec![leaves];
    for k in 1..=max_size {
        let mut level = Vec::new();
        for i in 0..k {
            let j = k - 1 - i;
            for ai in 0..sizes[i].len() {
                for bi in 0..sizes[j].len() {
                    let (a, b) = (sizes[i][ai], sizes[j][bi]);
                    level.push(store.and(a, b));
                    level.push(store.or(a, b));
                    level.push(store.implies(a, b));
                }
            }
        }
        sizes.push(level);
    }
    sizes
}

#[test]
fn a1_one_variable_ladder_covers_small_formulas() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();

    let base = rn_ladder(&store, 8);
    assert_eq!(base.len(), 18);
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            assert!(
                !equiv(&store, base[i].1, base[j].1, 1, &budgets)
                    .unwrap()
                    .is_equal(),
                "{} and {} coincide",
                base[i].0,
                base[j].0
            );
        }
    }

    // Forcing masks over a deep one-variable fragment. Masks compose
    // pointwise under the connectives on a fixed model, so the set of masks
    // reachable with at most five connectives is computed exactly by a
    // class-level sweep, with one witness formula kept per mask.
    let mut frag = Fragment::new(1);
    let frag_budget = Budgets {
        max_levels: 14,
        ..budgets.clone()
    };
    while frag.complete_levels() < 12 {
        frag.enumerate_level(&frag_budget).unwrap();
    }
    let count = frag.node_count();
    assert!(count <= 32, "one-variable fragment stays narrow");
    let upmask: Vec<u32> = frag
        .ids()
        .map(|id| {
            frag.up_set(id)
                .into_iter()
                .fold(0u32, |m, v| m | 1 << v.0)
        })
        .collect();
    let full: u32 = (1u64 << count).wrapping_sub(1) as u32;
    let atom_mask: u32 = frag
        .ids()
        .filter(|&id| frag.node(id).val & 1 == 1)
        .fold(0, |m, id| m | 1 << id.0);
    let implies_mask = |a: u32, b: u32| -> u32 {
        let bad = a & !b;
        (0..count)
            .filter(|&w| upmask[w] & bad == 0)
            .fold(0, |m, w| m | 1 << w)
    };

    let mut seen: HashMap<u32, FormulaId> = HashMap::new();
    let mut by_size: Vec<Vec<(u32, FormulaId)>> = Vec::new();
    let mut first = Vec::new();
    for (mask, f) in [
        (0u32, store.bottom()),
        (full, store.top()),
        (atom_mask, store.atom(1)),
    ] {
        seen.insert(mask, f);
        first.push((mask, f));
    }
    by_size.push(first);
    for k in 1..=5usize {
        let mut fresh = Vec::new();
        for i in 0..k {
            let j = k - 1 - i;
            for ai in 0..by_size[i].len() {
                for bi in 0..by_size[j].len() {
                    let (ma, fa) = by_size[i][ai];
                    let (mb, fb) = by_size[j][bi];
                    for (mask, f) in [
                        (ma & mb, store.and(fa, fb)),
                        (ma | mb, store.or(fa, fb)),
                        (implies_mask(ma, mb), store.implies(fa, fb)),
                    ] {
                        if !seen.contains_key(&mask) {
                            seen.insert(mask, f);
                            fresh.push((mask, f));
                        }
                    }
                }
            }
        }
        by_size.push(fresh);
    }

    // Every reachable class matches exactly one ladder rung, extending the
    // ladder if a class lands past depth 8. Rung masks must stay pairwise
    // distinct on this fragment, so mask equality pins class membership for
    // every formula behind its witness.
    let mut depth = 8;
    let mut ladder = base;
    loop {
        let rung_masks: Vec<u32> = ladder
            .iter()
            .map(|&(_, f)| formula_mask(&store, f, &upmask, atom_mask, full, count))
            .collect();
        for i in 0..rung_masks.len() {
            for j in i + 1..rung_masks.len() {
                assert_ne!(
                    rung_masks[i], rung_masks[j],
                    "rungs {} and {} share a mask",
                    ladder[i].0, ladder[j].0
                );
            }
        }
        let mut all_matched = true;
        for (&mask, &rep) in &seen {
            let matches: Vec<usize> = (0..ladder.len())
                .filter(|&i| {
                    equiv(&store, rep, ladder[i].1, 1, &budgets)
                        .unwrap()
                        .is_equal()
                })
                .collect();
            match matches.len() {
                0 => {
                    all_matched = false;
                    break;
                }
                1 => assert_eq!(
                    rung_masks[matches[0]], mask,
                    "class witness {} disagrees with its rung on the fragment",
                    print(&store, rep)
                ),
                _ => panic!("class witness {} matches several rungs", print(&store, rep)),
            }
        }
        if all_matched {
            break;
        }
        depth += 2;
        assert!(depth <= 14, "ladder depth ran away");
        ladder = rn_ladder(&store, depth);
    }
    println!(
        "a1: {} semantic classes with <= 5 connectives, ladder depth {}, {:.1?}",
        seen.len(),
        depth,
        t0.elapsed()
    );
}

fn formula_mask(
    store: &Store,
    f: FormulaId,
    upmask: &[u32],
    atom_mask: u32,
    full: u32,
    count: usize,
) -> u32 {
    use heyting_core::formula::Node;
    match store.node(f) {
        Node::Bottom => 0,
        Node::Top => full,
        Node::Atom(1) => atom_mask,
        Node::Atom(_) => unreachable!("one-variable fragment"),
        Node::And(a, b) => {
            formula_mask(store, a, upmask, atom_mask, full, count)
                & formula_mask(store, b, upmask, atom_mask, full, count)
        }
        Node::Or(a, b) => {
            formula_mask(store, a, upmask, atom_mask, full, count)
                | formula_mask(store, b, upmask, atom_mask, full, count)
        }
        Node::Implies(a, b) => {
            let bad = formula_mask(store, a, upmask, atom_mask, full, count)
                & !formula_mask(store, b, upmask, atom_mask, full, count);
            (0..count)
                .filter(|&w| upmask[w] & bad == 0)
                .fold(0, |m, w| m | 1 << w)
        }
    }
}

#[test]
fn a2_entailment_agrees_with_brute_force() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();
    let bank = ModelBank::up_to(4);
    let sizes = formulas_by_size(&store, 2, 3);
    let mut valid = 0u64;
    let mut invalid = 0u64;
    for i in 0..sizes.len() {
        for j in 0..sizes.len() - i {
            for &phi in &sizes[i] {
                for &psi in &sizes[j] {
                    match entails(&store, phi, psi, 2, &budgets).unwrap() {
                        Entailment::Valid => {
                            let mut meter = budgets.meter();
                            let refuted =
                                brute_countermodel(&store, phi, psi, &bank, 4, &mut meter)
                                    .unwrap();
                            assert!(
                                refuted.is_none(),
                                "claimed {} |- {} but found a countermodel",
                                print(&store, phi),
                                print(&store, psi)
                            );
                            valid += 1;
                        }
                        Entailment::Invalid(cm) => {
                            assert!(
                                cm.verify(&store, phi, psi).unwrap(),
                                "countermodel for {} |- {} does not check out",
                                print(&store, phi),
                                print(&store, psi)
                            );
                            invalid += 1;
                        }
                    }
                }
            }
        }
    }
    println!(
        "a2: {valid} entailments survived brute force, {invalid} countermodels verified, {:.1?}",
        t0.elapsed()
    );
}

fn decomposition_checks(store: &Store, phi: FormulaId, budgets: &Budgets) {
    let d = decompose(store, phi, 2, budgets).unwrap();
    let join = store.disj(&d.components);
    assert!(
        equiv(store, join, phi, 2, budgets).unwrap().is_equal(),
        "join of components differs from {}",
        print(store, phi)
    );
    for &c in &d.components {
        assert!(
            matches!(
                is_join_irreducible(store, c, 2, budgets).unwrap(),
                JoinIrreducibility::Irreducible
            ),
            "component {} of {} is not irreducible",
            print(store, c),
            print(store, phi)
        );
    }
    if d.components.len() >= 2 {
        for &c in &d.components {
            assert!(entails(store, c, phi, 2, budgets).unwrap().is_valid());
            assert!(
                !entails(store, phi, c, 2, budgets).unwrap().is_valid(),
                "component {} is not strictly below {}",
                print(store, c),
                print(store, phi)
            );
        }
    }
}

#[test]
fn a3_decomposition_round_trips_across_the_corpus() {
    let t0 = Instant::now();
    let budgets = Budgets::desk();
    let mut checked = 0u64;

    // Sizes zero through three in one arena.
    {
        let store = Store::new();
        let sizes = formulas_by_size(&store, 2, 3);
        for level in &sizes {
            for &phi in level {
                decomposition_checks(&store, phi, &budgets);
                checked += 1;
            }
        }
    }

    // Size four in windows, each with a fresh arena so the intermediate
    // formulas created by a million decompositions never pile up.
    let split_lens = [4usize, 48, 1152, 34560];
    for i in 0..4 {
        let j = 3 - i;
        let window = (120_000 / (3 * split_lens[j])).max(1);
        let mut start = 0;
        while start < split_lens[i] {
            let end = (start + window).min(split_lens[i]);
            let store = Store::new();
            let sizes = formulas_by_size(&store, 2, 3);
            for ai in start..end {
                for bi in 0..split_lens[j] {
                    let (a, b) = (sizes[i][ai], sizes[j][bi]);
                    for phi in [store.and(a, b), store.or(a, b), store.implies(a, b)] {
                        decomposition_checks(&store, phi, &budgets);
                        checked += 1;
                    }
                }
            }
            start = end;
        }
    }
    assert_eq!(checked, 1_196_980);
    println!("a3: {checked} formulas decomposed and re-joined, {:.1?}", t0.elapsed());
}

#[test]
fn a4_fragment_statistics_and_ladder_order() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();

    // Level counts, the second confirmed by an independent route in the
    // counting suite.
    let mut frag2 = Fragment::new(2);
    frag2.enumerate_level(&budgets).unwrap();
    let l1 = frag2.level_members(1).len();
    let l2 = frag2.level_members(2).len();
    assert_eq!(l1, 4);
    assert_eq!(l2, 18);
    assert!(l2 > l1);

    // One-variable enumeration: eight levels of width two.
    let deep = Budgets {
        max_levels: 8,
        ..budgets.clone()
    };
    let top = store.top();
    let (mut frag, ktop) = enumerate_k(&store, top, 1, &deep).unwrap();
    assert_eq!(ktop.level_widths(), &[2usize; 8]);

    // The ladder order is the forcer-set inclusion order on the fragment.
    let ladder = rn_ladder(&store, 8);
    let mut ksets: Vec<Option<Vec<NodeId>>> = Vec::new();
    for &(ref name, f) in &ladder {
        if f == top {
            ksets.push(None);
            continue;
        }
        let ken = enumerate_k_in(&store, &mut frag, f, &deep).unwrap();
        assert!(ken.closed(), "{name} has an unbounded forcer set");
        let mut all: Vec<NodeId> = ken.all_forcers().collect();
        all.sort_unstable();
        ksets.push(Some(all));
    }
    for i in 0..ladder.len() {
        for j in 0..ladder.len() {
            let by_prover = entails(&store, ladder[i].1, ladder[j].1, 1, &budgets)
                .unwrap()
                .is_valid();
            let by_forcers = match (&ksets[i], &ksets[j]) {
                (_, None) => true,
                (None, Some(_)) => false,
                (Some(a), Some(b)) => a.iter().all(|id| b.binary_search(id).is_ok()),
            };
            assert_eq!(
                by_prover, by_forcers,
                "order disagreement between {} and {}",
                ladder[i].0, ladder[j].0
            );
        }
    }
    println!("a4: level counts 4/18 confirmed, ladder order reproduced, {:.1?}", t0.elapsed());
}

#[test]
fn a5_node_formula_certificates() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();
    let mut verified = 0;
    let mut pairs = 0;
    for (n, levels) in [(2u16, 2u32), (1, 6)] {
        let mut frag = Fragment::new(n);
        while frag.complete_levels() < levels {
            frag.enumerate_level(&budgets).unwrap();
        }
        let mut cache = DejonghCache::new();
        let ids: Vec<NodeId> = frag.ids().collect();
        for &id in &ids {
            let pair = cache.node_formulas(&store, &frag, id);
            verify_node_formulas(&store, &frag, &mut cache, pair, &budgets).unwrap();
            verified += 1;
        }
        for &a in &ids {
            for &b in &ids {
                assert!(
                    order_reversal_holds(&store, &frag, &mut cache, a, b, &budgets).unwrap(),
                    "order reversal broke at {a:?}, {b:?} in the {n}-variable fragment"
                );
                pairs += 1;
            }
        }
    }
    assert_eq!(verified, 22 + 12);
    println!("a5: {verified} node certificates, {pairs} order pairs, {:.1?}", t0.elapsed());
}

#[test]
fn a6_triplet_witness_formula() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();
    let mut frag = Fragment::new(2);
    frag.enumerate_level(&budgets).unwrap();

    let candidates = smallest_triplets(&mut frag, &budgets, 4096).unwrap();
    let smallest = candidates[0];
    assert_eq!(frag.node(smallest.alpha).level, 2);
    assert_eq!(frag.node(smallest.gamma).level, 3);

    let mut cache = DejonghCache::new();
    let witness = build_j2_formula(&store, &mut frag, &mut cache, smallest, &budgets).unwrap();
    assert!(matches!(
        is_join_irreducible(&store, witness.formula, 2, &budgets).unwrap(),
        JoinIrreducibility::Irreducible
    ));

    // The forcers of the witness reproduce the triplet's area exactly, six
    // levels past the triplet, settling to width two past its base.
    let area = build_aset(&mut frag, smallest, 8, &budgets).unwrap();
    let deep = Budgets {
        max_levels: 8,
        ..budgets.clone()
    };
    let ken = enumerate_k_in(&store, &mut frag, witness.formula, &deep).unwrap();
    for level in 1..=8u32 {
        let mut got: Vec<NodeId> = ken.forcers(level).to_vec();
        got.sort_unstable();
        let want: Vec<NodeId> = area
            .members
            .iter()
            .copied()
            .filter(|&id| frag.node(id).level == level)
            .collect();
        assert_eq!(got, want, "forcers at level {level}");
        if level >= 4 {
            assert_eq!(got.len(), 2, "width at level {level}");
        }
    }

    // A second triplet sharing no node with the first gives a witness
    // incomparable with the first one.
    let other = candidates
        .iter()
        .copied()
        .find(|t| {
            let a = [t.alpha, t.beta, t.gamma];
            let b = [smallest.alpha, smallest.beta, smallest.gamma];
            a.iter().all(|x| !b.contains(x))
        })
        .expect("a disjoint triplet within the first candidates");
    let second = build_j2_formula(&store, &mut frag, &mut cache, other, &budgets).unwrap();
    assert!(!entails(&store, witness.formula, second.formula, 2, &budgets)
        .unwrap()
        .is_valid());
    assert!(!entails(&store, second.formula, witness.formula, 2, &budgets)
        .unwrap()
        .is_valid());
    println!("a6: witness checked through level 8, disjoint pair incomparable, {:.1?}", t0.elapsed());
}

#[test]
fn a7_classification_corpus() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();
    let parse = |s: &str| heyting_core::formula::parse(&store, s, 2).unwrap();

    let mut corpus: Vec<(String, FormulaId, &'static str)> = vec![
        ("F".into(), parse("F"), "bottom"),
        ("x1 | x2".into(), parse("x1 | x2"), "reducible"),
        ("x1 & ~x2".into(), parse("x1 & ~x2"), "J1"),
        ("x1".into(), parse("x1"), "J2"),
        ("T".into(), parse("T"), "J3"),
    ];
    let mut frag = Fragment::new(2);
    frag.enumerate_level(&budgets).unwrap();
    let triplet = smallest_triplets(&mut frag, &budgets, 1).unwrap()[0];
    let mut cache = DejonghCache::new();
    let witness = build_j2_formula(&store, &mut frag, &mut cache, triplet, &budgets).unwrap();
    corpus.push(("triplet witness".into(), witness.formula, "J2"));

    let rank = |name: &str| match name {
        "bottom" => Some(0),
        "J1" => Some(1),
        "J2" => Some(2),
        "J3" => Some(3),
        _ => None,
    };
    let mut outcomes = Vec::new();
    for (name, phi, expected) in &corpus {
        let cls = classify(&store, *phi, 2, &budgets).unwrap();
        assert!(
            !matches!(cls.stratum, Stratum::Unknown { .. }),
            "{name} failed to classify under desk budgets"
        );
        assert_eq!(cls.stratum.name(), *expected, "classify({name})");
        outcomes.push(cls.stratum.name());
    }
    // Strata grow along entailment among bottom and the irreducibles.
    for i in 0..corpus.len() {
        for j in 0..corpus.len() {
            let (Some(ri), Some(rj)) = (rank(outcomes[i]), rank(outcomes[j])) else {
                continue;
            };
            if entails(&store, corpus[i].1, corpus[j].1, 2, &budgets)
                .unwrap()
                .is_valid()
            {
                assert!(
                    ri <= rj,
                    "{} sits above {} but in a higher stratum",
                    corpus[i].0,
                    corpus[j].0
                );
            }
        }
    }
    println!("a7: six formulas classified, monotone strata, {:.1?}", t0.elapsed());
}

#[test]
fn a8_one_point_extension_scenarios() {
    let t0 = Instant::now();
    let store = Store::new();
    let budgets = Budgets::desk();
    let nnx = heyting_core::formula::parse(&store, "~~x1", 2).unwrap();

    // A chain bottom < b < a, with the new point slotted between b and a:
    // the single maximal lower image forces the widening route.
    {
        let q2 = Bqsl::from_leq(4, |x, y| {
            x == y || x == 0 || (x == 1 && (y == 2 || y == 3)) || (x == 3 && y == 2)
        })
        .unwrap();
        let images = vec![Some(store.bottom()), Some(nnx), Some(store.top()), None];
        let mut frag = Fragment::new(2);
        let mut cache = DejonghCache::new();
        let ext = fraisse_extend(&store, &mut frag, &mut cache, &q2, &images, 3, &budgets)
            .unwrap();
        assert_eq!(ext.route, ExtensionRoute::AugmentedJoin);
        assert!(ext.augmented_with.is_some());
        assert!(entails(&store, nnx, ext.formula, 2, &budgets).unwrap().is_valid());
        assert!(!entails(&store, ext.formula, nnx, 2, &budgets).unwrap().is_valid());
        assert!(entails(&store, ext.formula, store.top(), 2, &budgets).unwrap().is_valid());
        assert!(!entails(&store, store.top(), ext.formula, 2, &budgets).unwrap().is_valid());
    }

    // Only the bottom below the new point, one incomparable image: the
    // fresh-antichain route.
    {
        let q2 = Bqsl::from_leq(3, |x, y| x == y || x == 0).unwrap();
        let images = vec![Some(store.bottom()), Some(nnx), None];
        let mut frag = Fragment::new(2);
        let mut cache = DejonghCache::new();
        let ext = fraisse_extend(&store, &mut frag, &mut cache, &q2, &images, 2, &budgets)
            .unwrap();
        assert_eq!(ext.route, ExtensionRoute::FreshAntichain);
        assert!(!entails(&store, ext.formula, nnx, 2, &budgets).unwrap().is_valid());
        assert!(!entails(&store, nnx, ext.formula, 2, &budgets).unwrap().is_valid());
    }
    println!("a8: both extension scenarios verified, {:.1?}", t0.elapsed());
}

fn random_formula(rng: &mut ChaCha8Rng, store: &Store, n: u16, budget: &mut u32) -> FormulaId {
    if *budget == 0 || rng.gen_range(0..4) == 0 {
        return match rng.gen_range(0..2 + n as u32) {
            0 => store.bottom(),
            1 => store.top(),
            k => store.atom(k as u16 - 1),
        };
    }
    *budget -= 1;
    let a = random_formula(rng, store, n, budget);
    match rng.gen_range(0..4) {
        0 => store.and(a, random_formula(rng, store, n, budget)),
        1 => store.or(a, random_formula(rng, store, n, budget)),
        2 => store.implies(a, random_formula(rng, store, n, budget)),
        _ => store.neg(a),
    }
}

#[test]
fn a9_seeded_property_suites() {
    let t0 = Instant::now();
    let budgets = Budgets::desk();
    let mut total = 0u64;

    // Forcing persists upward through every successor edge.
    {
        let store = Store::new();
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        for _ in 0..3000 {
            let mut fuel = 8;
            let phi = random_formula(&mut rng, &store, 2, &mut fuel);
            let c = closure(&store, phi);
            let ops = ClosureOps::new(&store, &c);
            let types = node_types(&frag, &ops);
            for id in frag.ids() {
                for &s in &frag.node(id).succ {
                    assert!(types[id.0 as usize].is_subset(&types[s.0 as usize]));
                }
            }
            total += 1;
        }
    }

    // The bottom-up type pass agrees with the forcing table on the same
    // worlds, for every closure member at once.
    {
        let store = Store::new();
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets).unwrap();
        let model = frag.to_kripke();
        let mut rng = ChaCha8Rng::seed_from_u64(202);
        for _ in 0..3000 {
            let mut fuel = 8;
            let phi = random_formula(&mut rng, &store, 2, &mut fuel);
            let c = closure(&store, phi);
            let ops = ClosureOps::new(&store, &c);
            let types = node_types(&frag, &ops);
            let table = ForcingTable::build(&store, &model, phi).unwrap();
            for w in 0..model.world_count() {
                assert_eq!(table.type_of(w), types[w].clone());
            }
            total += 1;
        }
    }

    // Decomposition joins back to the original with irreducible components.
    {
        let store = Store::new();
        let mut rng = ChaCha8Rng::seed_from_u64(303);
        for _ in 0..2500 {
            let mut fuel = 7;
            let phi = random_formula(&mut rng, &store, 2, &mut fuel);
            decomposition_checks(&store, phi, &budgets);
            total += 1;
        }
    }

    // Lattice terms over the generators and the unit collapse onto the five
    // known classes: each random term is equivalent to exactly one.
    {
        let store = Store::new();
        let x1 = store.atom(1);
        let x2 = store.atom(2);
        let reps = [x1, x2, store.and(x1, x2), store.or(x1, x2), store.top()];
        let mut rng = ChaCha8Rng::seed_from_u64(404);
        for _ in 0..1500 {
            let mut term = match rng.gen_range(0..3) {
                0 => x1,
                1 => x2,
                _ => store.top(),
            };
            for _ in 0..rng.gen_range(1..10) {
                let leaf = match rng.gen_range(0..3) {
                    0 => x1,
                    1 => x2,
                    _ => store.top(),
                };
                term = if rng.gen_bool(0.5) {
                    store.and(term, leaf)
                } else {
                    store.or(term, leaf)
                };
            }
            let matches = reps
                .iter()
                .filter(|&&r| equiv(&store, term, r, 2, &budgets).unwrap().is_equal())
                .count();
            assert_eq!(matches, 1, "term {}", print(&store, term));
            total += 1;
        }
    }

    assert!(total >= 10_000);
    println!("a9: {total} randomized cases across four suites, {:.1?}", t0.elapsed());
}

// The classification of an atom carries its minimal type and the fragment
// it drove, enough to re-locate the witnessing triplet.
#[test]
fn classification_exposes_the_minimal_type() {
    let store = Store::new();
    let budgets = Budgets::desk();
    let phi = heyting_core::formula::parse(&store, "x1", 2).unwrap();
    let cls = classify(&store, phi, 2, &budgets).unwrap();
    let mintype: &BitVec = cls.mintype.as_ref().unwrap();
    let c = closure(&store, phi);
    assert!(mintype.get(c.pos(phi).unwrap()));
    let frag = cls.frag.as_ref().unwrap();
    let ken = cls.ken.as_ref().unwrap();
    assert!(ken.total() > 0);
    assert!(!find_triplets(frag, ken, Some(mintype)).is_empty());
}
