//! Leveled binary decision diagrams whose edges carry parameterized
//! amplitudes.
//!
//! A [`VddGraph`] stores one [`Node`] per (qubit level, branch context). Every
//! node has two outward edges: the left edge selects `|0⟩` and carries
//! amplitude `r·e^{iω}`, the right edge selects `|1⟩` and carries
//! `√(1−r²)·e^{iφ}`. A single root edge with unit-modulus amplitude
//! `e^{i·global_phase}` enters the level-1 node. The amplitude of a basis
//! state `|b₁…bₙ⟩` is the product of the edge amplitudes along the path that
//! starts at the level-1 node and takes edge `b_ℓ` at level `ℓ`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{Result, VddError};

/// Node identifier. Identifiers start at 1 and are assigned level by level,
/// left to right.
pub type NodeId = usize;

/// The three real parameters attached to a node's pair of outward edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamTriple {
    pub r: f64,
    pub omega: f64,
    pub phi: f64,
}

impl ParamTriple {
    pub fn new(r: f64, omega: f64, phi: f64) -> Result<Self> {
        let p = ParamTriple { r, omega, phi };
        p.check()?;
        Ok(p)
    }

    /// Deterministic left edge: `r = 1`, zero phases.
    pub fn left() -> Self {
        ParamTriple {
            r: 1.0,
            omega: 0.0,
            phi: 0.0,
        }
    }

    /// Deterministic right edge: `r = 0`, zero phases.
    pub fn right() -> Self {
        ParamTriple {
            r: 0.0,
            omega: 0.0,
            phi: 0.0,
        }
    }

    /// Equal split between both edges with zero phases.
    pub fn balanced() -> Self {
        ParamTriple {
            r: std::f64::consts::FRAC_1_SQRT_2,
            omega: 0.0,
            phi: 0.0,
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.r.is_finite() && self.omega.is_finite() && self.phi.is_finite()) {
            return Err(VddError::domain("non-finite edge parameter"));
        }
        if !(0.0..=1.0).contains(&self.r) {
            return Err(VddError::domain(format!("r = {} outside [0, 1]", self.r)));
        }
        Ok(())
    }

    /// Amplitudes of the left (`|0⟩`) and right (`|1⟩`) edges.
    pub fn edge_amplitudes(&self) -> Result<(Complex64, Complex64)> {
        self.check()?;
        Ok(self.amplitudes_unchecked())
    }

    #[inline]
    pub(crate) fn amplitudes_unchecked(&self) -> (Complex64, Complex64) {
        let right_mag = (1.0 - self.r * self.r).max(0.0).sqrt();
        (
            Complex64::from_polar(self.r, self.omega),
            Complex64::from_polar(right_mag, self.phi),
        )
    }
}

/// Free-function form of [`ParamTriple::edge_amplitudes`].
pub fn edge_amplitudes(params: &ParamTriple) -> Result<(Complex64, Complex64)> {
    params.edge_amplitudes()
}

/// Target of an outward edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Child {
    Node(NodeId),
    Terminal,
}

impl Child {
    pub fn node(self) -> Option<NodeId> {
        match self {
            Child::Node(id) => Some(id),
            Child::Terminal => None,
        }
    }
}

impl fmt::Display for Child {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Child::Node(id) => write!(f, "{id}"),
            Child::Terminal => f.write_str("terminal"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Qubit index in `1..=n`.
    pub level: usize,
    pub params: ParamTriple,
    pub child0: Child,
    pub child1: Child,
}

impl Node {
    pub fn child(&self, bit: u8) -> Child {
        if bit == 0 {
            self.child0
        } else {
            self.child1
        }
    }
}

/// A measurement outcome `(b₁, …, bₙ)`; `b₁` belongs to qubit 1.
///
/// Textual form writes `b₁` leftmost. The state-vector index of a bit string
/// is `Σ b_ℓ·2^{n−ℓ}`, so qubit 1 is the most significant bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString(Vec<u8>);

impl BitString {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.iter().any(|&b| b > 1) {
            return Err(VddError::domain("bit values must be 0 or 1"));
        }
        Ok(BitString(bits))
    }

    pub fn from_index(index: usize, num_qubits: usize) -> Self {
        BitString(
            (0..num_qubits)
                .map(|l| ((index >> (num_qubits - 1 - l)) & 1) as u8)
                .collect(),
        )
    }

    pub fn to_index(&self) -> usize {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as usize)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    /// Bit of qubit `level` (1-based).
    pub fn bit(&self, level: usize) -> u8 {
        self.0[level - 1]
    }
}

impl FromStr for BitString {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(VddError::domain(format!("invalid bit character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        if bits.is_empty() {
            return Err(VddError::domain("empty bit string"));
        }
        Ok(BitString(bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// A variational decision diagram over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct VddGraph {
    num_qubits: usize,
    global_phase: f64,
    root_child: NodeId,
    nodes: Vec<Node>,
}

impl VddGraph {
    /// Assembles a graph without checking any invariant. Call
    /// [`VddGraph::validate`] (or use [`VddGraph::try_new`]) before
    /// evaluating amplitudes.
    pub fn from_parts(
        num_qubits: usize,
        global_phase: f64,
        root_child: NodeId,
        mut nodes: Vec<Node>,
    ) -> Self {
        nodes.sort_by_key(|n| n.id);
        VddGraph {
            num_qubits,
            global_phase,
            root_child,
            nodes,
        }
    }

    /// Like [`VddGraph::from_parts`], but rejects graphs with diagnostics.
    pub fn try_new(
        num_qubits: usize,
        global_phase: f64,
        root_child: NodeId,
        nodes: Vec<Node>,
    ) -> Result<Self> {
        let g = Self::from_parts(num_qubits, global_phase, root_child, nodes);
        g.ensure_valid()?;
        Ok(g)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn set_global_phase(&mut self, phase: f64) {
        self.global_phase = phase;
    }

    pub fn root_child(&self) -> NodeId {
        self.root_child
    }

    /// Nodes in ascending id order.
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Number of trainable edge parameters (three per node; the global phase
    /// is not counted).
    pub fn param_count(&self) -> usize {
        3 * self.nodes.len()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        match self.nodes.get(id.wrapping_sub(1)) {
            Some(n) if n.id == id => Some(n),
            _ => self.nodes.iter().find(|n| n.id == id),
        }
    }

    pub fn params(&self, id: NodeId) -> Option<ParamTriple> {
        self.node(id).map(|n| n.params)
    }

    pub fn set_params(&mut self, id: NodeId, params: ParamTriple) -> Result<()> {
        params.check()?;
        let idx = self
            .index_of(id)
            .ok_or_else(|| VddError::domain(format!("no node with id {id}")))?;
        self.nodes[idx].params = params;
        Ok(())
    }

    /// Replaces every node's parameters, in ascending id order.
    pub fn set_all_params(&mut self, params: &[ParamTriple]) -> Result<()> {
        if params.len() != self.nodes.len() {
            return Err(VddError::domain(format!(
                "expected {} parameter triples, got {}",
                self.nodes.len(),
                params.len()
            )));
        }
        for p in params {
            p.check()?;
        }
        for (node, p) in self.nodes.iter_mut().zip(params) {
            node.params = *p;
        }
        Ok(())
    }

    pub fn all_params(&self) -> Vec<ParamTriple> {
        self.nodes.iter().map(|n| n.params).collect()
    }

    /// Node ids at each level; entry `ℓ−1` lists level `ℓ`.
    pub fn levels(&self) -> Vec<Vec<NodeId>> {
        let mut levels = vec![Vec::new(); self.num_qubits];
        for n in &self.nodes {
            if (1..=self.num_qubits).contains(&n.level) {
                levels[n.level - 1].push(n.id);
            }
        }
        levels
    }

    fn index_of(&self, id: NodeId) -> Option<usize> {
        match self.nodes.get(id.wrapping_sub(1)) {
            Some(n) if n.id == id => Some(id - 1),
            _ => self.nodes.iter().position(|n| n.id == id),
        }
    }

    /// The `(node id, bit)` pairs visited by `b`, level 1 first.
    pub fn path(&self, b: &BitString) -> Result<Vec<(NodeId, u8)>> {
        self.check_len(b)?;
        let mut out = Vec::with_capacity(self.num_qubits);
        let mut current = Child::Node(self.root_child);
        for &bit in b.bits() {
            let id = current
                .node()
                .ok_or_else(|| VddError::InvalidGraph("path reached terminal early".into()))?;
            let node = self
                .node(id)
                .ok_or_else(|| VddError::InvalidGraph(format!("dangling child {id}")))?;
            out.push((id, bit));
            current = node.child(bit);
        }
        Ok(out)
    }

    /// `ψ(b)`: the root-edge phase times the product of the selected edge
    /// amplitudes along the path of `b`.
    pub fn amplitude(&self, b: &BitString) -> Result<Complex64> {
        let path = self.path(b)?;
        let mut acc = Complex64::from_polar(1.0, self.global_phase);
        for (id, bit) in path {
            let (left, right) = self
                .node(id)
                .expect("path node")
                .params
                .amplitudes_unchecked();
            acc *= if bit == 0 { left } else { right };
        }
        Ok(acc)
    }

    fn check_len(&self, b: &BitString) -> Result<()> {
        if b.len() != self.num_qubits {
            return Err(VddError::domain(format!(
                "bit string has length {} but the graph has {} qubits",
                b.len(),
                self.num_qubits
            )));
        }
        Ok(())
    }

    /// Checks every structural invariant. An empty list means the graph is
    /// valid.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut diags = Vec::new();
        let n = self.num_qubits;
        if n == 0 {
            diags.push(Diagnostic::graph(Violation::NoQubits));
            return diags;
        }
        if self.nodes.is_empty() {
            diags.push(Diagnostic::graph(Violation::MissingRootChild));
            return diags;
        }
        if !self.global_phase.is_finite() {
            diags.push(Diagnostic::graph(Violation::NonFiniteParameter));
        }

        let mut ids_ok = true;
        for (i, node) in self.nodes.iter().enumerate() {
            if node.id != i + 1 {
                ids_ok = false;
                if i > 0 && self.nodes[i - 1].id == node.id {
                    diags.push(Diagnostic::at(node.id, Violation::DuplicateId));
                } else {
                    diags.push(Diagnostic::at(node.id, Violation::NonContiguousId));
                }
            }
        }

        let mut level_ok = true;
        for node in &self.nodes {
            if !(1..=n).contains(&node.level) {
                level_ok = false;
                diags.push(Diagnostic::at(node.id, Violation::LevelOutOfRange));
            }
            let p = node.params;
            if !(p.r.is_finite() && p.omega.is_finite() && p.phi.is_finite()) {
                diags.push(Diagnostic::at(node.id, Violation::NonFiniteParameter));
            } else if !(0.0..=1.0).contains(&p.r) {
                diags.push(Diagnostic::at(node.id, Violation::ParameterOutOfRange));
            }
        }
        if ids_ok && level_ok {
            for pair in self.nodes.windows(2) {
                if pair[1].level < pair[0].level {
                    diags.push(Diagnostic::at(pair[1].id, Violation::IdOrder));
                }
            }
        }

        match self.node(self.root_child) {
            None => diags.push(Diagnostic::graph(Violation::MissingRootChild)),
            Some(root) if root.level != 1 => {
                diags.push(Diagnostic::at(root.id, Violation::RootChildLevel))
            }
            Some(_) => {}
        }
        let entry_count = self.nodes.iter().filter(|n| n.level == 1).count();
        if entry_count > 1 {
            diags.push(Diagnostic::graph(Violation::RootOutDegree(entry_count)));
        }

        for node in &self.nodes {
            for child in [node.child0, node.child1] {
                match child {
                    Child::Terminal => {
                        if node.level < n {
                            diags.push(Diagnostic::at(node.id, Violation::PrematureTerminal));
                        }
                    }
                    Child::Node(cid) => match self.node(cid) {
                        None => diags.push(Diagnostic::at(node.id, Violation::DanglingChild(cid))),
                        Some(c) => {
                            if node.level == n {
                                diags.push(Diagnostic::at(node.id, Violation::MissingTerminal));
                            } else if c.level != node.level + 1 {
                                diags.push(Diagnostic::at(node.id, Violation::LevelSkip(cid)));
                            }
                        }
                    },
                }
            }
        }

        // Reachability from the root edge.
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = Vec::new();
        if let Some(i) = self.index_of(self.root_child) {
            stack.push(i);
        }
        while let Some(i) = stack.pop() {
            if seen[i] {
                continue;
            }
            seen[i] = true;
            let node = &self.nodes[i];
            for child in [node.child0, node.child1] {
                if let Some(j) = child.node().and_then(|cid| self.index_of(cid)) {
                    // Only follow level-increasing edges so malformed input
                    // cannot loop.
                    if self.nodes[j].level > node.level && !seen[j] {
                        stack.push(j);
                    }
                }
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if !seen[i] {
                diags.push(Diagnostic::at(node.id, Violation::Unreachable));
            }
        }

        diags
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub(crate) fn ensure_valid(&self) -> Result<()> {
        let diags = self.validate();
        if diags.is_empty() {
            Ok(())
        } else {
            Err(VddError::InvalidGraph(join_diagnostics(&diags)))
        }
    }

    /// Renders the graph in the version-1 JSON document format.
    pub fn to_json(&self) -> Result<String> {
        self.ensure_valid()?;
        let doc = DocOut {
            version: FORMAT_VERSION,
            num_qubits: self.num_qubits,
            global_phase: exact_number(self.global_phase),
            root_child: self.root_child,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeOut {
                    id: n.id,
                    level: n.level,
                    r: exact_number(n.params.r),
                    omega: exact_number(n.params.omega),
                    phi: exact_number(n.params.phi),
                    child0: ChildRepr::from(n.child0),
                    child1: ChildRepr::from(n.child1),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| VddError::parse("document", e.to_string()))
    }

    /// Parses and validates a version-1 JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: DocIn =
            serde_json::from_str(text).map_err(|e| VddError::parse("document", e.to_string()))?;
        if doc.version != FORMAT_VERSION {
            return Err(VddError::parse(
                "version",
                format!("unknown version {}", doc.version),
            ));
        }
        if doc.num_qubits == 0 {
            return Err(VddError::parse("num_qubits", "must be at least 1"));
        }
        if !doc.global_phase.is_finite() {
            return Err(VddError::parse("global_phase", "not finite"));
        }
        let ids: std::collections::HashSet<NodeId> = doc.nodes.iter().map(|n| n.id).collect();
        if ids.len() != doc.nodes.len() {
            return Err(VddError::parse("nodes", "duplicate node id"));
        }
        if !ids.contains(&doc.root_child) {
            return Err(VddError::parse("root_child", "dangling child"));
        }
        let mut nodes = Vec::with_capacity(doc.nodes.len());
        for (i, n) in doc.nodes.iter().enumerate() {
            if !(n.r.is_finite() && n.omega.is_finite() && n.phi.is_finite()) {
                return Err(VddError::parse(
                    format!("nodes[{i}]"),
                    "non-finite parameter",
                ));
            }
            if !(0.0..=1.0).contains(&n.r) {
                return Err(VddError::parse(format!("nodes[{i}].r"), "r out of range"));
            }
            let child0 = n.child0.to_child(&ids, format!("nodes[{i}].child0"))?;
            let child1 = n.child1.to_child(&ids, format!("nodes[{i}].child1"))?;
            nodes.push(Node {
                id: n.id,
                level: n.level,
                params: ParamTriple {
                    r: n.r,
                    omega: n.omega,
                    phi: n.phi,
                },
                child0,
                child1,
            });
        }
        let g = VddGraph::from_parts(doc.num_qubits, doc.global_phase, doc.root_child, nodes);
        let diags = g.validate();
        if !diags.is_empty() {
            return Err(VddError::parse("nodes", join_diagnostics(&diags)));
        }
        Ok(g)
    }
}

/// What went wrong with a graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NoQubits,
    MissingRootChild,
    RootChildLevel,
    RootOutDegree(usize),
    DuplicateId,
    NonContiguousId,
    IdOrder,
    LevelOutOfRange,
    NonFiniteParameter,
    ParameterOutOfRange,
    DanglingChild(NodeId),
    LevelSkip(NodeId),
    PrematureTerminal,
    MissingTerminal,
    Unreachable,
}

/// One violated invariant, with the offending node when there is one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub node: Option<NodeId>,
    pub violation: Violation,
}

impl Diagnostic {
    fn at(node: NodeId, violation: Violation) -> Self {
        Diagnostic {
            node: Some(node),
            violation,
        }
    }

    fn graph(violation: Violation) -> Self {
        Diagnostic {
            node: None,
            violation,
        }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.node.unwrap_or(0);
        match &self.violation {
            Violation::NoQubits => write!(f, "graph has no qubits"),
            Violation::MissingRootChild => write!(f, "root edge has no target node"),
            Violation::RootChildLevel => write!(f, "root child {k} is not at level 1"),
            Violation::RootOutDegree(d) => write!(f, "root out-degree {d} (must be 1)"),
            Violation::DuplicateId => write!(f, "duplicate id at node {k}"),
            Violation::NonContiguousId => write!(f, "non-contiguous id at node {k}"),
            Violation::IdOrder => write!(f, "ids not assigned level by level at node {k}"),
            Violation::LevelOutOfRange => write!(f, "level out of range at node {k}"),
            Violation::NonFiniteParameter => match self.node {
                Some(k) => write!(f, "non-finite parameter at node {k}"),
                None => write!(f, "non-finite global phase"),
            },
            Violation::ParameterOutOfRange => write!(f, "r out of range at node {k}"),
            Violation::DanglingChild(c) => write!(f, "dangling child {c} at node {k}"),
            Violation::LevelSkip(c) => write!(f, "level skip at node {k} (child {c})"),
            Violation::PrematureTerminal => write!(f, "premature terminal at node {k}"),
            Violation::MissingTerminal => write!(f, "last-level node {k} must point to terminal"),
            Violation::Unreachable => write!(f, "unreachable node {k}"),
        }
    }
}

fn join_diagnostics(diags: &[Diagnostic]) -> String {
    diags
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

const FORMAT_VERSION: u32 = 1;

/// Writes `x` with 17 significant digits so the value round-trips exactly.
fn exact_number(x: f64) -> Box<RawValue> {
    RawValue::from_string(format!("{x:.16e}")).expect("finite float is valid JSON")
}

#[derive(Serialize, Deserialize, Debug)]
#[serde(untagged)]
enum ChildRepr {
    Id(NodeId),
    Name(String),
}

impl From<Child> for ChildRepr {
    fn from(c: Child) -> Self {
        match c {
            Child::Node(id) => ChildRepr::Id(id),
            Child::Terminal => ChildRepr::Name("terminal".into()),
        }
    }
}

impl ChildRepr {
    fn to_child(&self, ids: &std::collections::HashSet<NodeId>, field: String) -> Result<Child> {
        match self {
            ChildRepr::Name(s) if s == "terminal" => Ok(Child::Terminal),
            ChildRepr::Name(s) => Err(VddError::parse(field, format!("unknown child {s:?}"))),
            ChildRepr::Id(id) if ids.contains(id) => Ok(Child::Node(*id)),
            ChildRepr::Id(_) => Err(VddError::parse(field, "dangling child")),
        }
    }
}

#[derive(Serialize)]
struct DocOut {
    version: u32,
    num_qubits: usize,
    global_phase: Box<RawValue>,
    root_child: NodeId,
    nodes: Vec<NodeOut>,
}

#[derive(Serialize)]
struct NodeOut {
    id: NodeId,
    level: usize,
    r: Box<RawValue>,
    omega: Box<RawValue>,
    phi: Box<RawValue>,
    child0: ChildRepr,
    child1: ChildRepr,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocIn {
    version: u32,
    num_qubits: usize,
    global_phase: f64,
    root_child: NodeId,
    nodes: Vec<NodeIn>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeIn {
    id: NodeId,
    level: usize,
    r: f64,
    omega: f64,
    phi: f64,
    child0: ChildRepr,
    child1: ChildRepr,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn chain(n: usize) -> VddGraph {
        let nodes = (1..=n)
            .map(|l| {
                let next = if l == n {
                    Child::Terminal
                } else {
                    Child::Node(l + 1)
                };
                Node {
                    id: l,
                    level: l,
                    params: ParamTriple::balanced(),
                    child0: next,
                    child1: next,
                }
            })
            .collect();
        VddGraph::from_parts(n, 0.0, 1, nodes)
    }

    #[test]
    fn edge_amplitude_examples() {
        let (l, r) = ParamTriple::new(1.0, 0.0, 0.0)
            .unwrap()
            .edge_amplitudes()
            .unwrap();
        assert_eq!(l, Complex64::new(1.0, 0.0));
        assert_eq!(r, Complex64::new(0.0, 0.0));

        let (l, r) = ParamTriple::balanced().edge_amplitudes().unwrap();
        assert!(close(l, Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(r, Complex64::new(FRAC_1_SQRT_2, 0.0), 1e-15));

        let p = ParamTriple::new(0.6, 0.3, 1.3).unwrap();
        let (l, r) = p.edge_amplitudes().unwrap();
        assert!(close(l, Complex64::from_polar(0.6, 0.3), 1e-15));
        assert!(close(r, Complex64::from_polar(0.8, 1.3), 1e-15));
        assert!((l.norm_sqr() + r.norm_sqr() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn edge_amplitudes_reject_bad_r() {
        let p = ParamTriple {
            r: 1.2,
            omega: 0.0,
            phi: 0.0,
        };
        assert!(matches!(edge_amplitudes(&p), Err(VddError::Domain(_))));
        assert!(ParamTriple::new(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn bitstring_index_convention() {
        let b: BitString = "101".parse().unwrap();
        assert_eq!(b.to_index(), 5);
        assert_eq!(BitString::from_index(5, 3), b);
        assert_eq!(b.to_string(), "101");
        assert!("10a".parse::<BitString>().is_err());
    }

    #[test]
    fn amplitude_length_mismatch() {
        let g = chain(3);
        let b: BitString = "01".parse().unwrap();
        assert!(matches!(g.amplitude(&b), Err(VddError::Domain(_))));
    }

    #[test]
    fn chain_is_valid_and_balanced() {
        let g = chain(4);
        assert!(g.validate().is_empty());
        for idx in 0..16 {
            let a = g.amplitude(&BitString::from_index(idx, 4)).unwrap();
            assert!(close(a, Complex64::new(0.25, 0.0), 1e-15));
        }
    }

    #[test]
    fn level_skip_is_reported() {
        let mut g = chain(3);
        g.nodes[0].child1 = Child::Node(3);
        let diags = g.validate();
        assert!(diags
            .iter()
            .any(|d| d.to_string().starts_with("level skip at node 1")));
    }

    #[test]
    fn two_entry_nodes_violate_root_out_degree() {
        let mut g = chain(2);
        g.nodes.push(Node {
            id: 3,
            level: 1,
            params: ParamTriple::balanced(),
            child0: Child::Node(2),
            child1: Child::Node(2),
        });
        let diags = g.validate();
        assert!(diags
            .iter()
            .any(|d| d.to_string().starts_with("root out-degree")));
    }

    #[test]
    fn terminal_rules() {
        let mut g = chain(3);
        g.nodes[0].child0 = Child::Terminal;
        assert!(g
            .validate()
            .iter()
            .any(|d| d.violation == Violation::PrematureTerminal));

        let mut g = chain(2);
        g.nodes[1].child0 = Child::Node(1);
        assert!(g
            .validate()
            .iter()
            .any(|d| d.violation == Violation::MissingTerminal));
    }

    #[test]
    fn unreachable_node_is_reported() {
        let mut g = chain(2);
        g.nodes.push(Node {
            id: 3,
            level: 2,
            params: ParamTriple::balanced(),
            child0: Child::Terminal,
            child1: Child::Terminal,
        });
        let diags = g.validate();
        assert_eq!(diags, vec![Diagnostic::at(3, Violation::Unreachable)]);
    }

    #[test]
    fn json_round_trip_and_digits() {
        let mut g = chain(3);
        g.set_params(
            2,
            ParamTriple::new(0.12345678901234568, -2.5, 1e-20).unwrap(),
        )
        .unwrap();
        g.set_global_phase(0.1);
        let text = g.to_json().unwrap();
        assert!(text.contains("1.2345678901234568e-1"));
        assert_eq!(VddGraph::from_json(&text).unwrap(), g);
    }

    #[test]
    fn json_errors() {
        let g = chain(2);
        let text = g.to_json().unwrap();

        let bad_r = text.replacen("7.0710678118654757e-1", "1.5", 1);
        match VddGraph::from_json(&bad_r) {
            Err(VddError::Parse { field, message }) => {
                assert_eq!(field, "nodes[0].r");
                assert_eq!(message, "r out of range");
            }
            other => panic!("unexpected {other:?}"),
        }

        let dangling = text.replacen("\"child0\": 2", "\"child0\": 9", 1);
        match VddGraph::from_json(&dangling) {
            Err(VddError::Parse { message, .. }) => assert_eq!(message, "dangling child"),
            other => panic!("unexpected {other:?}"),
        }

        let version = text.replacen("\"version\": 1", "\"version\": 2", 1);
        assert!(matches!(
            VddGraph::from_json(&version),
            Err(VddError::Parse { field, .. }) if field == "version"
        ));

        let unknown = text.replacen("\"version\": 1", "\"version\": 1, \"extra\": 0", 1);
        assert!(VddGraph::from_json(&unknown).is_err());

        let skip = text.replacen("\"level\": 2", "\"level\": 3", 1);
        assert!(VddGraph::from_json(&skip).is_err());
    }
}
