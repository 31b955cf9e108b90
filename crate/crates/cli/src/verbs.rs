//! One handler per verb. Each returns the rendered output and its exit
//! code; errors bubble up and exit 2.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde_json::{json, Value};

use heyting_core::dejongh::{verify_node_formulas, DejonghCache};
use heyting_core::formula::{parse, print, rn_ladder, FormulaId, Store};
use heyting_core::prover::{
    decompose as decompose_formula, entails, equiv, is_join_irreducible, realize_above,
    Entailment, Equivalence, JoinIrreducibility,
};
use heyting_core::semantics::{brute_countermodel, Countermodel, ModelBank};
use heyting_core::structure::{
    build_j2_formula, classify as classify_formula, enumerate_k, fraisse_extend,
    smallest_triplets, Bqsl, ExtensionRoute, KStatus, Stratum, Triplet,
};
use heyting_core::universal::{Fragment, NodeId};

use crate::config::resolve;
use crate::render::{
    countermodel_json, countermodel_text, envelope, finish_json, fragment_dot, fragment_json,
    node_ids, Run,
};
use crate::{Common, Format};

fn run(common: &Common, output: String, code: u8) -> Run {
    Run {
        output,
        code,
        out_file: common.out.clone(),
    }
}

fn parse_formula(store: &Store, text: &str, n: u16) -> Result<FormulaId> {
    parse(store, text, n).map_err(|e| anyhow!("cannot parse {text:?}: {e}"))
}

fn no_dot(verb: &str) -> anyhow::Error {
    anyhow!("dot output is not available for {verb}; use text or json")
}

fn dot_of_countermodel(cm: Option<&Countermodel>, verb: &str) -> Result<String> {
    match cm {
        Some(cm) => Ok(cm.model.to_dot()),
        None => Err(anyhow!("no countermodel to draw for this {verb} result")),
    }
}

pub fn prove(formula: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let phi = parse_formula(&store, formula, cfg.n)?;
    let verdict = entails(&store, store.top(), phi, cfg.n, &cfg.budgets)?;
    let (name, cm, code) = match &verdict {
        Entailment::Valid => ("valid", None, 0),
        Entailment::Invalid(cm) => ("invalid", Some(cm), 1),
    };
    let output = match common.format {
        Format::Text => match cm {
            None => "valid\n".to_string(),
            Some(cm) => format!("invalid\n{}", countermodel_text(cm)),
        },
        Format::Json => {
            let mut report = envelope("prove", &cfg);
            report.insert("formula".into(), json!(print(&store, phi)));
            report.insert("verdict".into(), json!(name));
            if let Some(cm) = cm {
                report.insert("countermodel".into(), countermodel_json(cm));
            }
            finish_json(report)
        }
        Format::Dot => dot_of_countermodel(cm, "prove")?,
    };
    Ok(run(common, output, code))
}

pub fn equivalent(left: &str, right: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let a = parse_formula(&store, left, cfg.n)?;
    let b = parse_formula(&store, right, cfg.n)?;
    let verdict = equiv(&store, a, b, cfg.n, &cfg.budgets)?;
    let (name, cm, code) = match &verdict {
        Equivalence::Equal => ("equal", None, 0),
        Equivalence::LeftNotRight(cm) => ("left-not-right", Some(cm), 1),
        Equivalence::RightNotLeft(cm) => ("right-not-left", Some(cm), 1),
    };
    let output = match common.format {
        Format::Text => match cm {
            None => "equal\n".to_string(),
            Some(cm) => format!("{name}\n{}", countermodel_text(cm)),
        },
        Format::Json => {
            let mut report = envelope("equiv", &cfg);
            report.insert("left".into(), json!(print(&store, a)));
            report.insert("right".into(), json!(print(&store, b)));
            report.insert("verdict".into(), json!(name));
            if let Some(cm) = cm {
                report.insert("countermodel".into(), countermodel_json(cm));
            }
            finish_json(report)
        }
        Format::Dot => dot_of_countermodel(cm, "equiv")?,
    };
    Ok(run(common, output, code))
}

pub fn decompose(formula: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let phi = parse_formula(&store, formula, cfg.n)?;
    let d = decompose_formula(&store, phi, cfg.n, &cfg.budgets)?;
    let parts: Vec<String> = d.components.iter().map(|&c| print(&store, c)).collect();
    let output = match common.format {
        Format::Text => {
            if parts.is_empty() {
                "no components (equivalent to F)\n".to_string()
            } else {
                let mut s = String::new();
                for p in &parts {
                    s.push_str(p);
                    s.push('\n');
                }
                s
            }
        }
        Format::Json => {
            let mut report = envelope("decompose", &cfg);
            report.insert("formula".into(), json!(print(&store, phi)));
            report.insert("components".into(), json!(parts));
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("decompose")),
    };
    Ok(run(common, output, 0))
}

pub fn mintype(formula: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let phi = parse_formula(&store, formula, cfg.n)?;
    let table = realize_above(&store, phi, phi, cfg.n, &cfg.budgets)?;
    let mut types = Vec::new();
    for idx in table.minimal_types() {
        let bits = table.type_bits(idx);
        let members: Vec<String> = table
            .closure
            .members
            .iter()
            .enumerate()
            .filter(|&(p, _)| bits.get(p))
            .map(|(_, &f)| print(&store, f))
            .collect();
        let conjunction = print(&store, table.conjunction_of(&store, idx));
        types.push((members, conjunction));
    }
    let output = match common.format {
        Format::Text => {
            if types.is_empty() {
                "no realizable types (formula is equivalent to F)\n".to_string()
            } else {
                let mut s = String::new();
                for (members, conjunction) in &types {
                    s.push_str(&format!("{{{}}} -> {conjunction}\n", members.join(", ")));
                }
                s
            }
        }
        Format::Json => {
            let mut report = envelope("mintype", &cfg);
            report.insert("formula".into(), json!(print(&store, phi)));
            report.insert(
                "minimal_types".into(),
                Value::Array(
                    types
                        .iter()
                        .map(|(members, conjunction)| {
                            json!({ "members": members, "conjunction": conjunction })
                        })
                        .collect(),
                ),
            );
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("mintype")),
    };
    Ok(run(common, output, 0))
}

fn triplet_json(t: &Triplet, frag: &Fragment) -> Value {
    json!({
        "alpha": t.alpha.0,
        "beta": t.beta.0,
        "gamma": t.gamma.0,
        "level": t.base_level(frag),
    })
}

pub fn classify(formula: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let phi = parse_formula(&store, formula, cfg.n)?;
    let cls = classify_formula(&store, phi, cfg.n, &cfg.budgets)?;
    let code = if matches!(cls.stratum, Stratum::Unknown { .. }) {
        2
    } else {
        0
    };
    let output = match common.format {
        Format::Text => {
            let mut s = format!("class: {}\n", cls.stratum.name());
            match &cls.stratum {
                Stratum::Reducible { components } => {
                    for &c in components {
                        s.push_str(&format!("component: {}\n", print(&store, c)));
                    }
                }
                Stratum::J1 { k_size } => {
                    s.push_str(&format!("forcing set size: {k_size}\n"));
                }
                Stratum::J2 { triplet } => {
                    let frag = cls.frag.as_ref().expect("fragment accompanies J2");
                    s.push_str(&format!(
                        "triplet: alpha={} beta={} gamma={} level={}\n",
                        triplet.alpha.0,
                        triplet.beta.0,
                        triplet.gamma.0,
                        triplet.base_level(frag)
                    ));
                }
                Stratum::J3 { witnesses } => {
                    s.push_str(&format!(
                        "incomparable witnesses: {} {} {}\n",
                        witnesses[0].0, witnesses[1].0, witnesses[2].0
                    ));
                }
                Stratum::Unknown { levels_built } => {
                    s.push_str(&format!("levels explored: {levels_built}\n"));
                }
                Stratum::Bottom => {}
            }
            s
        }
        Format::Json => {
            let mut report = envelope("classify", &cfg);
            report.insert("formula".into(), json!(print(&store, phi)));
            report.insert("class".into(), json!(cls.stratum.name()));
            match &cls.stratum {
                Stratum::Reducible { components } => {
                    let parts: Vec<String> =
                        components.iter().map(|&c| print(&store, c)).collect();
                    report.insert("components".into(), json!(parts));
                }
                Stratum::J1 { k_size } => {
                    report.insert("k_size".into(), json!(k_size));
                }
                Stratum::J2 { triplet } => {
                    let frag = cls.frag.as_ref().expect("fragment accompanies J2");
                    report.insert("triplet".into(), triplet_json(triplet, frag));
                }
                Stratum::J3 { witnesses } => {
                    report.insert(
                        "witnesses".into(),
                        json!(witnesses.iter().map(|w| w.0).collect::<Vec<u32>>()),
                    );
                }
                Stratum::Unknown { levels_built } => {
                    report.insert("levels_built".into(), json!(levels_built));
                }
                Stratum::Bottom => {}
            }
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("classify")),
    };
    Ok(run(common, output, code))
}

pub fn kenum(formula: &str, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let phi = parse_formula(&store, formula, cfg.n)?;
    let (frag, ken) = enumerate_k(&store, phi, cfg.n, &cfg.budgets)?;
    let levels: Vec<(u32, Vec<NodeId>)> = (1..=ken.levels_built())
        .map(|l| (l, ken.forcers(l).to_vec()))
        .collect();
    let output = match common.format {
        Format::Text => {
            let mut s = match ken.status {
                KStatus::Closed => "status: closed\n".to_string(),
                KStatus::Open { next_level } => {
                    format!("status: open (next level {next_level})\n")
                }
            };
            for (l, nodes) in &levels {
                s.push_str(&format!(
                    "level {l}: {} nodes [{}]\n",
                    nodes.len(),
                    nodes.iter().map(|v| v.0.to_string()).collect::<Vec<_>>().join(", ")
                ));
            }
            s.push_str(&format!("total: {}\n", ken.total()));
            s
        }
        Format::Json => {
            let mut report = envelope("kenum", &cfg);
            report.insert("formula".into(), json!(print(&store, phi)));
            match ken.status {
                KStatus::Closed => {
                    report.insert("status".into(), json!("closed"));
                }
                KStatus::Open { next_level } => {
                    report.insert("status".into(), json!("open"));
                    report.insert("next_level".into(), json!(next_level));
                }
            }
            report.insert(
                "levels".into(),
                Value::Array(
                    levels
                        .iter()
                        .map(|(l, nodes)| {
                            json!({ "level": l, "count": nodes.len(), "nodes": node_ids(nodes) })
                        })
                        .collect(),
                ),
            );
            report.insert("total".into(), json!(ken.total()));
            finish_json(report)
        }
        Format::Dot => {
            let all: Vec<NodeId> = ken.all_forcers().collect();
            fragment_dot(&frag, Some(&all))
        }
    };
    Ok(run(common, output, 0))
}

pub fn model(levels: u32, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let mut frag = Fragment::new(cfg.n);
    while frag.complete_levels() < levels {
        frag.enumerate_level(&cfg.budgets)?;
    }
    let counts: Vec<usize> = (1..=frag.complete_levels())
        .map(|l| frag.level_members(l).len())
        .collect();
    let output = match common.format {
        Format::Text => {
            let mut s = format!(
                "n={} complete_levels={} nodes={}\n",
                cfg.n,
                frag.complete_levels(),
                frag.node_count()
            );
            for (i, c) in counts.iter().enumerate() {
                s.push_str(&format!("level {}: {c}\n", i + 1));
            }
            s
        }
        Format::Json => {
            let mut report = envelope("model", &cfg);
            report.insert("level_counts".into(), json!(counts));
            report.insert("model".into(), fragment_json(&frag));
            finish_json(report)
        }
        Format::Dot => fragment_dot(&frag, None),
    };
    Ok(run(common, output, 0))
}

pub fn dejongh(levels: u32, node: Option<u32>, verify: bool, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let mut frag = Fragment::new(cfg.n);
    while frag.complete_levels() < levels {
        frag.enumerate_level(&cfg.budgets)?;
    }
    let ids: Vec<NodeId> = match node {
        Some(raw) => {
            let id = NodeId(raw);
            if raw as usize >= frag.node_count() {
                bail!("node {raw} does not exist; the fragment has {} nodes", frag.node_count());
            }
            vec![id]
        }
        None => frag.ids().collect(),
    };
    let mut cache = DejonghCache::new();
    let mut rows = Vec::new();
    for &id in &ids {
        let pair = cache.node_formulas(&store, &frag, id);
        if verify {
            verify_node_formulas(&store, &frag, &mut cache, pair, &cfg.budgets)?;
        }
        rows.push((id, frag.node(id).level, print(&store, pair.pos), print(&store, pair.neg)));
    }
    let output = match common.format {
        Format::Text => {
            let mut s = String::new();
            for (id, level, pos, neg) in &rows {
                s.push_str(&format!("node {} (level {level}): pos = {pos}  neg = {neg}\n", id.0));
            }
            if verify {
                s.push_str(&format!("verified: {} nodes\n", rows.len()));
            }
            s
        }
        Format::Json => {
            let mut report = envelope("dejongh", &cfg);
            report.insert(
                "nodes".into(),
                Value::Array(
                    rows.iter()
                        .map(|(id, level, pos, neg)| {
                            json!({ "node": id.0, "level": level, "pos": pos, "neg": neg })
                        })
                        .collect(),
                ),
            );
            report.insert("verified".into(), json!(verify));
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("dejongh")),
    };
    Ok(run(common, output, 0))
}

pub fn triplets(count: usize, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let mut frag = Fragment::new(cfg.n);
    while frag.complete_levels() < 2 {
        frag.enumerate_level(&cfg.budgets)?;
    }
    let found = smallest_triplets(&mut frag, &cfg.budgets, count)?;
    let output = match common.format {
        Format::Text => {
            let mut s = String::new();
            for t in &found {
                s.push_str(&format!(
                    "alpha={} beta={} gamma={} level={}\n",
                    t.alpha.0,
                    t.beta.0,
                    t.gamma.0,
                    t.base_level(&frag)
                ));
            }
            s
        }
        Format::Json => {
            let mut report = envelope("triplets", &cfg);
            report.insert(
                "triplets".into(),
                Value::Array(found.iter().map(|t| triplet_json(t, &frag)).collect()),
            );
            finish_json(report)
        }
        Format::Dot => {
            let mut subset: Vec<NodeId> = Vec::new();
            for t in &found {
                for id in [t.alpha, t.beta, t.gamma] {
                    if !subset.contains(&id) {
                        subset.push(id);
                    }
                }
            }
            subset.sort_unstable();
            fragment_dot(&frag, Some(&subset))
        }
    };
    Ok(run(common, output, 0))
}

pub fn j2build(index: usize, check: bool, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let mut frag = Fragment::new(cfg.n);
    while frag.complete_levels() < 2 {
        frag.enumerate_level(&cfg.budgets)?;
    }
    let found = smallest_triplets(&mut frag, &cfg.budgets, index + 1)?;
    let triplet = *found
        .get(index)
        .ok_or_else(|| anyhow!("only {} triplets exist at this depth", found.len()))?;
    let mut cache = DejonghCache::new();
    let witness = build_j2_formula(&store, &mut frag, &mut cache, triplet, &cfg.budgets)?;
    let irreducible = if check {
        Some(matches!(
            is_join_irreducible(&store, witness.formula, cfg.n, &cfg.budgets)?,
            JoinIrreducibility::Irreducible
        ))
    } else {
        None
    };
    if irreducible == Some(false) {
        bail!("witness formula failed the irreducibility re-check");
    }
    let area = &witness.aset;
    let output = match common.format {
        Format::Text => {
            let mut s = format!("formula: {}\n", print(&store, witness.formula));
            s.push_str(&format!(
                "triplet: alpha={} beta={} gamma={} level={}\n",
                triplet.alpha.0,
                triplet.beta.0,
                triplet.gamma.0,
                area.base_level
            ));
            s.push_str(&format!(
                "area: depth={} members={}\n",
                area.depth,
                area.members.len()
            ));
            s.push_str(&format!("excluded: {} nodes\n", witness.excluded.len()));
            if irreducible == Some(true) {
                s.push_str("irreducible: checked\n");
            }
            s
        }
        Format::Json => {
            let mut report = envelope("j2build", &cfg);
            report.insert("formula".into(), json!(print(&store, witness.formula)));
            report.insert("triplet".into(), triplet_json(&triplet, &frag));
            report.insert(
                "area".into(),
                json!({
                    "base_level": area.base_level,
                    "depth": area.depth,
                    "chi0": node_ids(&area.chi0),
                    "chi1": node_ids(&area.chi1),
                    "members": node_ids(&area.members),
                }),
            );
            report.insert("excluded".into(), json!(node_ids(&witness.excluded)));
            if let Some(flag) = irreducible {
                report.insert("irreducible".into(), json!(flag));
            }
            finish_json(report)
        }
        Format::Dot => fragment_dot(&frag, Some(&area.members)),
    };
    Ok(run(common, output, 0))
}

/// Input for `extend`: a finite bounded order, formula images for all but
/// one point, and the point to realize.
fn read_extend_input(store: &Store, n: u16, path: &Path) -> Result<(Bqsl, Vec<Option<FormulaId>>, usize)> {
    let raw = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let spec: Value = serde_json::from_str(&raw).context("input is not JSON")?;
    let size = spec["size"]
        .as_u64()
        .ok_or_else(|| anyhow!("missing integer field \"size\""))? as usize;
    let pairs = spec["leq"]
        .as_array()
        .ok_or_else(|| anyhow!("missing array field \"leq\""))?;
    let mut rel = vec![false; size * size];
    for i in 0..size {
        rel[i * size + i] = true;
    }
    for pair in pairs {
        let (Some(a), Some(b)) = (pair[0].as_u64(), pair[1].as_u64()) else {
            bail!("leq entries must be [a, b] index pairs");
        };
        let (a, b) = (a as usize, b as usize);
        if a >= size || b >= size {
            bail!("leq pair [{a}, {b}] is out of range");
        }
        rel[a * size + b] = true;
    }
    // Transitive closure so the input may list covers only.
    for k in 0..size {
        for i in 0..size {
            if rel[i * size + k] {
                for j in 0..size {
                    if rel[k * size + j] {
                        rel[i * size + j] = true;
                    }
                }
            }
        }
    }
    let q2 = Bqsl::from_leq(size, |a, b| rel[a * size + b])
        .map_err(|e| anyhow!("leq does not describe a valid order: {e}"))?;
    let image_specs = spec["images"]
        .as_array()
        .ok_or_else(|| anyhow!("missing array field \"images\""))?;
    if image_specs.len() != size {
        bail!("images must list one entry per point");
    }
    let mut images = Vec::new();
    for entry in image_specs {
        match entry {
            Value::Null => images.push(None),
            Value::String(text) => images.push(Some(parse_formula(store, text, n)?)),
            _ => bail!("images entries must be formula strings or null"),
        }
    }
    let q_new = spec["new"]
        .as_u64()
        .ok_or_else(|| anyhow!("missing integer field \"new\""))? as usize;
    Ok((q2, images, q_new))
}

fn route_name(route: &ExtensionRoute) -> &'static str {
    match route {
        ExtensionRoute::DirectJoin => "direct-join",
        ExtensionRoute::AugmentedJoin => "augmented-join",
        ExtensionRoute::FreshAntichain => "fresh-antichain",
    }
}

pub fn extend(input: &Path, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let (q2, images, q_new) = read_extend_input(&store, cfg.n, input)?;
    let mut frag = Fragment::new(cfg.n);
    let mut cache = DejonghCache::new();
    let ext = fraisse_extend(&store, &mut frag, &mut cache, &q2, &images, q_new, &cfg.budgets)?;
    let output = match common.format {
        Format::Text => {
            let mut s = format!("route: {}\n", route_name(&ext.route));
            s.push_str(&format!("formula: {}\n", print(&store, ext.formula)));
            if let Some(chi) = ext.augmented_with {
                s.push_str(&format!("augmented with: {}\n", print(&store, chi)));
            }
            if let Some(anchor) = ext.anchor {
                s.push_str(&format!("anchor node: {}\n", anchor.0));
            }
            s.push_str("postconditions: checked\n");
            s
        }
        Format::Json => {
            let mut report = envelope("extend", &cfg);
            report.insert("route".into(), json!(route_name(&ext.route)));
            report.insert("formula".into(), json!(print(&store, ext.formula)));
            report.insert(
                "augmented_with".into(),
                match ext.augmented_with {
                    Some(chi) => json!(print(&store, chi)),
                    None => Value::Null,
                },
            );
            report.insert(
                "anchor".into(),
                match ext.anchor {
                    Some(id) => json!(id.0),
                    None => Value::Null,
                },
            );
            report.insert("postconditions".into(), json!("checked"));
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("extend")),
    };
    Ok(run(common, output, 0))
}

pub fn rn(depth: u32, table: bool, common: &Common) -> Result<Run> {
    let mut cfg = resolve(common)?;
    cfg.n = 1;
    let store = Store::new();
    let ladder = rn_ladder(&store, depth as usize);
    let entries: Vec<(String, String)> = ladder
        .iter()
        .map(|(name, f)| (name.clone(), print(&store, *f)))
        .collect();
    let order: Option<Vec<Vec<bool>>> = if table {
        let mut m = Vec::new();
        for &(_, a) in &ladder {
            let mut row = Vec::new();
            for &(_, b) in &ladder {
                row.push(entails(&store, a, b, 1, &cfg.budgets)?.is_valid());
            }
            m.push(row);
        }
        Some(m)
    } else {
        None
    };
    let output = match common.format {
        Format::Text => {
            let width = entries.iter().map(|(name, _)| name.len()).max().unwrap_or(0);
            let mut s = String::new();
            for (name, text) in &entries {
                s.push_str(&format!("{name:width$} = {text}\n"));
            }
            if let Some(order) = &order {
                s.push_str("order (row entails column):\n");
                for (i, row) in order.iter().enumerate() {
                    let marks: String = row.iter().map(|&v| if v { '1' } else { '.' }).collect();
                    s.push_str(&format!("{:width$} {marks}\n", entries[i].0));
                }
            }
            s
        }
        Format::Json => {
            let mut report = envelope("rn", &cfg);
            report.insert("depth".into(), json!(depth));
            report.insert(
                "ladder".into(),
                Value::Array(
                    entries
                        .iter()
                        .map(|(name, text)| json!({ "name": name, "formula": text }))
                        .collect(),
                ),
            );
            if let Some(order) = &order {
                report.insert("order".into(), json!(order));
            }
            finish_json(report)
        }
        Format::Dot => return Err(no_dot("rn")),
    };
    Ok(run(common, output, 0))
}

pub fn oracle(formula: &str, right: Option<&str>, max_size: usize, common: &Common) -> Result<Run> {
    let cfg = resolve(common)?;
    let store = Store::new();
    let (phi, psi) = match right {
        Some(text) => (
            parse_formula(&store, formula, cfg.n)?,
            parse_formula(&store, text, cfg.n)?,
        ),
        None => (store.top(), parse_formula(&store, formula, cfg.n)?),
    };
    let bank = ModelBank::up_to(max_size);
    let mut meter = cfg.budgets.meter();
    let found = brute_countermodel(&store, phi, psi, &bank, max_size, &mut meter)?;
    let (code, cm) = match &found {
        Some(cm) => (1u8, Some(cm)),
        None => (0, None),
    };
    let output = match common.format {
        Format::Text => match cm {
            Some(cm) => format!("countermodel found\n{}", countermodel_text(cm)),
            None => format!("no countermodel within {max_size} worlds\n"),
        },
        Format::Json => {
            let mut report = envelope("oracle", &cfg);
            report.insert("antecedent".into(), json!(print(&store, phi)));
            report.insert("consequent".into(), json!(print(&store, psi)));
            report.insert("max_worlds".into(), json!(max_size));
            report.insert(
                "verdict".into(),
                json!(if cm.is_some() { "found" } else { "not-found" }),
            );
            if let Some(cm) = cm {
                report.insert("countermodel".into(), countermodel_json(cm));
            }
            finish_json(report)
        }
        Format::Dot => dot_of_countermodel(cm, "oracle")?,
    };
    Ok(run(common, output, code))
}
