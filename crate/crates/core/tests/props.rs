//! Generative invariants over random formulas.

use proptest::prelude::*;

use heyting_core::budget::Budgets;
use heyting_core::formula::{closure, parse, print, FormulaId, Store};
use heyting_core::prover::{
    decompose, entails, equiv, is_join_irreducible, ClosureOps, Entailment, JoinIrreducibility,
};
use heyting_core::semantics::{brute_countermodel, ForcingTable, ModelBank};
use heyting_core::structure::{embed_model, node_types};
use heyting_core::universal::Fragment;

#[derive(Debug, Clone)]
enum Ast {
    Bottom,
    Top,
    Atom(u16),
    And(Box<Ast>, Box<Ast>),
    Or(Box<Ast>, Box<Ast>),
    Implies(Box<Ast>, Box<Ast>),
}

fn arb_ast(n: u16) -> impl Strategy<Value = Ast> {
    let leaf = prop_oneof![
        Just(Ast::Bottom),
        Just(Ast::Top),
        (1..=n).prop_map(Ast::Atom),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::And(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Or(a.into(), b.into())),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Ast::Implies(a.into(), b.into())),
            inner.prop_map(|a| Ast::Implies(a.into(), Box::new(Ast::Bottom))),
        ]
    })
}

fn build(store: &Store, ast: &Ast) -> FormulaId {
    match ast {
        Ast::Bottom => store.bottom(),
        Ast::Top => store.top(),
        Ast::Atom(i) => store.atom(*i),
        Ast::And(a, b) => store.and(build(store, a), build(store, b)),
        Ast::Or(a, b) => store.or(build(store, a), build(store, b)),
        Ast::Implies(a, b) => store.implies(build(store, a), build(store, b)),
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn printing_then_parsing_is_identity(ast in arb_ast(3)) {
        let store = Store::new();
        let f = build(&store, &ast);
        let text = print(&store, f);
        let back = parse(&store, &text, 3).unwrap();
        prop_assert_eq!(back, f, "text: {}", text);
    }

    #[test]
    fn countermodels_verify_and_valid_claims_survive_brute_force(
        a in arb_ast(2),
        b in arb_ast(2),
    ) {
        let store = Store::new();
        let budgets = Budgets::desk();
        let phi = build(&store, &a);
        let psi = build(&store, &b);
        let bank = ModelBank::up_to(3);
        match entails(&store, phi, psi, 2, &budgets).unwrap() {
            Entailment::Valid => {
                let mut meter = budgets.meter();
                let cm = brute_countermodel(&store, phi, psi, &bank, 3, &mut meter).unwrap();
                prop_assert!(cm.is_none(), "brute force refuted a claimed entailment");
            }
            Entailment::Invalid(cm) => {
                prop_assert!(cm.verify(&store, phi, psi).unwrap());
            }
        }
    }

    #[test]
    fn decomposition_joins_back_and_components_are_irreducible(ast in arb_ast(2)) {
        let store = Store::new();
        let budgets = Budgets::desk();
        let phi = build(&store, &ast);
        let d = decompose(&store, phi, 2, &budgets).unwrap();
        let join = store.disj(&d.components);
        prop_assert!(equiv(&store, join, phi, 2, &budgets).unwrap().is_equal());
        for &c in &d.components {
            prop_assert!(matches!(
                is_join_irreducible(&store, c, 2, &budgets).unwrap(),
                JoinIrreducibility::Irreducible
            ));
        }
        if d.components.len() >= 2 {
            for &c in &d.components {
                prop_assert!(entails(&store, c, phi, 2, &budgets).unwrap().is_valid());
                prop_assert!(!entails(&store, phi, c, 2, &budgets).unwrap().is_valid());
            }
        }
    }

    #[test]
    fn fragment_types_match_the_forcing_table(ast in arb_ast(2)) {
        let store = Store::new();
        let budgets = Budgets::desk();
        let phi = build(&store, &ast);
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets).unwrap();
        let c = closure(&store, phi);
        let ops = ClosureOps::new(&store, &c);
        let by_types = node_types(&frag, &ops);
        let model = frag.to_kripke();
        let table = ForcingTable::build(&store, &model, phi).unwrap();
        for w in 0..model.world_count() {
            prop_assert_eq!(table.type_of(w), by_types[w].clone(), "world {}", w);
        }
    }

    #[test]
    fn forcing_persists_upward(ast in arb_ast(2)) {
        let store = Store::new();
        let budgets = Budgets::desk();
        let phi = build(&store, &ast);
        let mut frag = Fragment::new(2);
        frag.enumerate_level(&budgets).unwrap();
        let c = closure(&store, phi);
        let ops = ClosureOps::new(&store, &c);
        let types = node_types(&frag, &ops);
        for id in frag.ids() {
            for &s in &frag.node(id).succ {
                prop_assert!(
                    types[id.0 as usize].is_subset(&types[s.0 as usize]),
                    "forcing lost between {:?} and {:?}",
                    id,
                    s
                );
            }
        }
    }

    #[test]
    fn countermodel_worlds_embed_with_their_forcing(
        a in arb_ast(2),
        b in arb_ast(2),
    ) {
        let store = Store::new();
        let budgets = Budgets::desk();
        let phi = build(&store, &a);
        let psi = build(&store, &b);
        if let Entailment::Invalid(cm) = entails(&store, phi, psi, 2, &budgets).unwrap() {
            let mut frag = Fragment::new(2);
            let image = embed_model(&mut frag, &cm.model, &budgets).unwrap();
            let root = store.implies(phi, psi);
            let c = closure(&store, root);
            let ops = ClosureOps::new(&store, &c);
            let types = node_types(&frag, &ops);
            let table = ForcingTable::build(&store, &cm.model, root).unwrap();
            for (w, &node) in image.iter().enumerate() {
                prop_assert_eq!(
                    table.type_of(w),
                    types[node.0 as usize].clone(),
                    "world {}",
                    w
                );
            }
        }
    }
}
