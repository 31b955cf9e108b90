//! Report assembly: the JSON envelope, the published model format and the
//! DOT renderings. Everything here is deterministic for a fixed input.

use std::io::Write;

use anyhow::{Context, Result};
use serde_json::{json, Map, Value};

use heyting_core::semantics::{Countermodel, KripkeModel};
use heyting_core::universal::{Fragment, NodeId};

use crate::config::RunConfig;

/// A rendered report plus the exit code it should carry.
pub struct Run {
    pub output: String,
    pub code: u8,
    pub out_file: Option<std::path::PathBuf>,
}

impl Run {
    pub fn deliver(&self) -> Result<()> {
        match &self.out_file {
            Some(path) => {
                let mut f = std::fs::File::create(path)
                    .with_context(|| format!("cannot create {}", path.display()))?;
                f.write_all(self.output.as_bytes())?;
            }
            None => print!("{}", self.output),
        }
        Ok(())
    }
}

/// Envelope keys common to every JSON report.
pub fn envelope(verb: &str, cfg: &RunConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("tool".into(), json!("heyting"));
    m.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    m.insert("verb".into(), json!(verb));
    m.insert("n".into(), json!(cfg.n));
    m.insert("profile".into(), json!(cfg.profile));
    if let Some(seed) = cfg.seed {
        m.insert("seed".into(), json!(seed));
    }
    m
}

pub fn finish_json(map: Map<String, Value>) -> String {
    let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serializable report");
    s.push('\n');
    s
}

/// The published wire format: worlds carry an explicit id, their atom list
/// and their immediate successors.
pub fn model_json(model: &KripkeModel) -> Value {
    let nodes: Vec<Value> = model
        .nodes
        .iter()
        .enumerate()
        .map(|(i, node)| {
            json!({
                "id": i,
                "atoms": node.val,
                "succ": node.succ,
            })
        })
        .collect();
    json!({ "n": model.n, "nodes": nodes })
}

pub fn countermodel_json(cm: &Countermodel) -> Value {
    json!({ "model": model_json(&cm.model), "world": cm.world })
}

pub fn countermodel_text(cm: &Countermodel) -> String {
    format!(
        "world {} of:\n{}\n",
        cm.world,
        serde_json::to_string(&model_json(&cm.model)).expect("serializable model")
    )
}

fn atom_list(val: u16, n: u16) -> Vec<u16> {
    (1..=n).filter(|i| val & (1 << (i - 1)) != 0).collect()
}

/// Fragment in the wire format, with per-node levels and the number of
/// completely enumerated levels on top.
pub fn fragment_json(frag: &Fragment) -> Value {
    let nodes: Vec<Value> = frag
        .ids()
        .map(|id| {
            let node = frag.node(id);
            json!({
                "id": id.0,
                "level": node.level,
                "atoms": atom_list(node.val, frag.n),
                "succ": node.succ.iter().map(|s| s.0).collect::<Vec<u32>>(),
            })
        })
        .collect();
    json!({
        "n": frag.n,
        "complete_levels": frag.complete_levels(),
        "nodes": nodes,
    })
}

fn fragment_label(frag: &Fragment, id: NodeId) -> String {
    let node = frag.node(id);
    let atoms = atom_list(node.val, frag.n)
        .iter()
        .map(|a| format!("x{a}"))
        .collect::<Vec<_>>()
        .join(" ");
    format!("{}:{}:{{{atoms}}}", id.0, node.level)
}

/// DOT rendering of a fragment, restricted to `subset` when given. Nodes are
/// labeled `id:level:{atoms}`; edges point from a node to its successors.
pub fn fragment_dot(frag: &Fragment, subset: Option<&[NodeId]>) -> String {
    let ids: Vec<NodeId> = match subset {
        Some(s) => s.to_vec(),
        None => frag.ids().collect(),
    };
    let mut out = String::from("digraph fragment {\n  rankdir=BT;\n  node [shape=box];\n");
    for &id in &ids {
        out.push_str(&format!("  n{} [label=\"{}\"];\n", id.0, fragment_label(frag, id)));
    }
    for &id in &ids {
        for &s in &frag.node(id).succ {
            if ids.contains(&s) {
                out.push_str(&format!("  n{} -> n{};\n", id.0, s.0));
            }
        }
    }
    out.push_str("}\n");
    out
}

pub fn node_ids(ids: &[NodeId]) -> Vec<u32> {
    ids.iter().map(|id| id.0).collect()
}
