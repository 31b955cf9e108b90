//! Interned propositional formulas over variables `x1..xn`.
//!
//! Formulas are hash-consed into an append-only store, so structurally equal
//! subterms share one id and recursive constructions (ladders, node formulas)
//! stay linear-sized as DAGs. Negation is sugar: `~p` is stored as `p -> F`
//! and re-sugared by the printer.

use std::collections::HashMap;
use std::sync::RwLock;

use thiserror::Error;

/// Reference to an interned formula. Ids are only meaningful per [`Store`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaId(pub u32);

impl std::fmt::Debug for FormulaId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// One node of the formula DAG. Atom indices are 1-based.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Node {
    Bottom,
    Top,
    Atom(u16),
    And(FormulaId, FormulaId),
    Or(FormulaId, FormulaId),
    Implies(FormulaId, FormulaId),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("atom x{atom} out of range for n={n}")]
    AtomOutOfRange { atom: u16, n: u16 },
}

#[derive(Default)]
struct StoreInner {
    nodes: Vec<Node>,
    index: HashMap<Node, u32>,
}

/// Append-only interning store. Publishing a node is atomic behind the lock;
/// concurrent interners of equal structure converge on one id.
#[derive(Default)]
pub struct Store {
    inner: RwLock<StoreInner>,
}

impl Store {
    pub fn new() -> Self {
        Store::default()
    }

    pub fn intern(&self, node: Node) -> FormulaId {
        if let Some(&id) = self.inner.read().unwrap().index.get(&node) {
            return FormulaId(id);
        }
        let mut inner = self.inner.write().unwrap();
        if let Some(&id) = inner.index.get(&node) {
            return FormulaId(id);
        }
        let id = inner.nodes.len() as u32;
        inner.nodes.push(node);
        inner.index.insert(node, id);
        FormulaId(id)
    }

    pub fn node(&self, id: FormulaId) -> Node {
        self.inner.read().unwrap().nodes[id.0 as usize]
    }

    pub fn len(&self) -> usize {
        self.inner.read().unwrap().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bottom(&self) -> FormulaId {
        self.intern(Node::Bottom)
    }

    pub fn top(&self) -> FormulaId {
        self.intern(Node::Top)
    }

    pub fn atom(&self, i: u16) -> FormulaId {
        assert!(i >= 1, "atom indices are 1-based");
        self.intern(Node::Atom(i))
    }

    pub fn and(&self, a: FormulaId, b: FormulaId) -> FormulaId {
        self.intern(Node::And(a, b))
    }

    pub fn or(&self, a: FormulaId, b: FormulaId) -> FormulaId {
        self.intern(Node::Or(a, b))
    }

    pub fn implies(&self, a: FormulaId, b: FormulaId) -> FormulaId {
        self.intern(Node::Implies(a, b))
    }

    pub fn neg(&self, a: FormulaId) -> FormulaId {
        let bot = self.bottom();
        self.implies(a, bot)
    }

    /// Right-folded conjunction; empty input yields `T`.
    pub fn conj(&self, parts: &[FormulaId]) -> FormulaId {
        match parts.split_last() {
            None => self.top(),
            Some((&last, rest)) => rest
                .iter()
                .rev()
                .fold(last, |acc, &p| self.and(p, acc)),
        }
    }

    /// Right-folded disjunction; empty input yields `F`.
    pub fn disj(&self, parts: &[FormulaId]) -> FormulaId {
        match parts.split_last() {
            None => self.bottom(),
            Some((&last, rest)) => rest.iter().rev().fold(last, |acc, &p| self.or(p, acc)),
        }
    }

    /// Largest atom index occurring in `f` (0 when none).
    pub fn max_atom(&self, f: FormulaId) -> u16 {
        let mut seen = std::collections::HashSet::new();
        let mut stack = vec![f];
        let mut max = 0;
        while let Some(id) = stack.pop() {
            if !seen.insert(id) {
                continue;
            }
            match self.node(id) {
                Node::Atom(i) => max = max.max(i),
                Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                _ => {}
            }
        }
        max
    }
}

/// Subformula closure of a root formula: every distinct subterm, listed with
/// children before parents so types can be evaluated in one pass.
#[derive(Clone, Debug)]
pub struct Closure {
    pub root: FormulaId,
    pub members: Vec<FormulaId>,
    pub position: HashMap<FormulaId, usize>,
    /// `(position, atom index)` for every atom member, ascending by atom.
    pub atoms: Vec<(usize, u16)>,
}

impl Closure {
    pub fn width(&self) -> usize {
        self.members.len()
    }

    pub fn pos(&self, f: FormulaId) -> Option<usize> {
        self.position.get(&f).copied()
    }

    /// Bitmask (over atom indices, bit `i-1` for `xi`) of the closure's atoms.
    pub fn atom_mask(&self) -> u16 {
        self.atoms.iter().fold(0, |m, &(_, a)| m | 1 << (a - 1))
    }
}

/// Deterministic children-first traversal of the formula DAG.
pub fn closure(store: &Store, root: FormulaId) -> Closure {
    let mut members = Vec::new();
    let mut position = HashMap::new();
    // Explicit post-order DFS; (id, expanded) frames.
    let mut stack = vec![(root, false)];
    while let Some((id, expanded)) = stack.pop() {
        if position.contains_key(&id) {
            continue;
        }
        if expanded {
            if !position.contains_key(&id) {
                position.insert(id, members.len());
                members.push(id);
            }
            continue;
        }
        stack.push((id, true));
        match store.node(id) {
            Node::And(a, b) | Node::Or(a, b) | Node::Implies(a, b) => {
                stack.push((b, false));
                stack.push((a, false));
            }
            _ => {}
        }
    }
    let mut atoms: Vec<(usize, u16)> = members
        .iter()
        .enumerate()
        .filter_map(|(i, &f)| match store.node(f) {
            Node::Atom(a) => Some((i, a)),
            _ => None,
        })
        .collect();
    atoms.sort_by_key(|&(_, a)| a);
    Closure {
        root,
        members,
        position,
        atoms,
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    n: u16,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, FormulaError> {
        Err(FormulaError::Parse {
            position: self.pos,
            message: message.into(),
        })
    }

    fn formula(&mut self, store: &Store) -> Result<FormulaId, FormulaError> {
        let lhs = self.or_level(store)?;
        if self.peek() == Some(b'-') {
            if self.bytes.get(self.pos + 1) != Some(&b'>') {
                return self.err("expected '->'");
            }
            self.pos += 2;
            // Right associative: recurse at the full-formula level.
            let rhs = self.formula(store)?;
            return Ok(store.implies(lhs, rhs));
        }
        Ok(lhs)
    }

    fn or_level(&mut self, store: &Store) -> Result<FormulaId, FormulaError> {
        let mut acc = self.and_level(store)?;
        while self.peek() == Some(b'|') {
            self.pos += 1;
            let rhs = self.and_level(store)?;
            acc = store.or(acc, rhs);
        }
        Ok(acc)
    }

    fn and_level(&mut self, store: &Store) -> Result<FormulaId, FormulaError> {
        let mut acc = self.unary(store)?;
        while self.peek() == Some(b'&') {
            self.pos += 1;
            let rhs = self.unary(store)?;
            acc = store.and(acc, rhs);
        }
        Ok(acc)
    }

    fn unary(&mut self, store: &Store) -> Result<FormulaId, FormulaError> {
        match self.peek() {
            Some(b'~') => {
                self.pos += 1;
                let inner = self.unary(store)?;
                Ok(store.neg(inner))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.formula(store)?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(b'F') => {
                self.pos += 1;
                Ok(store.bottom())
            }
            Some(b'T') => {
                self.pos += 1;
                Ok(store.top())
            }
            Some(b'x') => {
                self.pos += 1;
                let start = self.pos;
                while self
                    .bytes
                    .get(self.pos)
                    .is_some_and(|b| b.is_ascii_digit())
                {
                    self.pos += 1;
                }
                if start == self.pos {
                    return self.err("expected atom index after 'x'");
                }
                let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
                if digits.starts_with('0') {
                    self.pos = start;
                    return self.err("atom index must not start with 0");
                }
                let atom: u16 = digits
                    .parse()
                    .map_err(|_| FormulaError::Parse {
                        position: start,
                        message: "atom index too large".into(),
                    })?;
                if atom == 0 || atom > self.n {
                    return Err(FormulaError::AtomOutOfRange { atom, n: self.n });
                }
                Ok(store.atom(atom))
            }
            Some(c) => self.err(format!("unexpected character '{}'", c as char)),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse the concrete syntax (`->` right associative, `|` and `&` left
/// associative, `~` tightest, atoms `x1..xn`, constants `F`/`T`).
pub fn parse(store: &Store, text: &str, n: u16) -> Result<FormulaId, FormulaError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        n,
    };
    let f = p.formula(store)?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

const PREC_IMPLIES: u8 = 0;
const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_UNARY: u8 = 3;

fn print_into(store: &Store, f: FormulaId, min_prec: u8, out: &mut String) {
    let node = store.node(f);
    // Negation sugar first so `p -> F` renders as `~p`.
    if let Node::Implies(a, b) = node {
        if store.node(b) == Node::Bottom {
            out.push('~');
            print_into(store, a, PREC_UNARY, out);
            return;
        }
    }
    match node {
        Node::Bottom => out.push('F'),
        Node::Top => out.push('T'),
        Node::Atom(i) => {
            out.push('x');
            out.push_str(&i.to_string());
        }
        Node::And(a, b) => {
            let parens = min_prec > PREC_AND;
            if parens {
                out.push('(');
            }
            print_into(store, a, PREC_AND, out);
            out.push_str(" & ");
            // The parser folds `&` to the left, so a right child at the same
            // precedence needs parentheses to reparse to the same DAG.
            print_into(store, b, PREC_AND + 1, out);
            if parens {
                out.push(')');
            }
        }
        Node::Or(a, b) => {
            let parens = min_prec > PREC_OR;
            if parens {
                out.push('(');
            }
            print_into(store, a, PREC_OR, out);
            out.push_str(" | ");
            print_into(store, b, PREC_OR + 1, out);
            if parens {
                out.push(')');
            }
        }
        Node::Implies(a, b) => {
            let parens = min_prec > PREC_IMPLIES;
            if parens {
                out.push('(');
            }
            print_into(store, a, PREC_IMPLIES + 1, out);
            out.push_str(" -> ");
            print_into(store, b, PREC_IMPLIES, out);
            if parens {
                out.push(')');
            }
        }
    }
}

/// Render with minimal parentheses; `parse(print(f)) == f` exactly.
pub fn print(store: &Store, f: FormulaId) -> String {
    let mut out = String::new();
    print_into(store, f, 0, &mut out);
    out
}

// ---------------------------------------------------------------------------
// Rieger-Nishimura ladder
// ---------------------------------------------------------------------------

/// The one-variable ladder: `F`, `T`, then alternating `phi_i`/`psi_i` pairs
/// with `phi_1 = ~x1`, `psi_1 = x1`, `phi_{i+1} = phi_i -> psi_i`,
/// `psi_{i+1} = phi_i | psi_i`.
pub fn rn_ladder(store: &Store, depth: usize) -> Vec<(String, FormulaId)> {
    let mut out = vec![
        ("F".to_string(), store.bottom()),
        ("T".to_string(), store.top()),
    ];
    if depth == 0 {
        return out;
    }
    let x1 = store.atom(1);
    let mut phi = store.neg(x1);
    let mut psi = x1;
    out.push(("phi1".to_string(), phi));
    out.push(("psi1".to_string(), psi));
    for i in 2..=depth {
        let next_phi = store.implies(phi, psi);
        let next_psi = store.or(phi, psi);
        out.push((format!("phi{i}"), next_phi));
        out.push((format!("psi{i}"), next_psi));
        phi = next_phi;
        psi = next_psi;
    }
    out
}
