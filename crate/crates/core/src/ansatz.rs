//! Graph topologies and parameter initialization.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Result, VddError};
use crate::exact::StateVector;
use crate::graph::{BitString, Child, Node, NodeId, ParamTriple, VddGraph};
use crate::rng::rng_from_seed;

/// Largest register the universal topology is built for (2ⁿ−1 nodes).
pub const MAX_UNIVERSAL_QUBITS: usize = 20;

/// Largest register accepted by [`encode_state`].
pub const MAX_ENCODE_QUBITS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AnsatzKind {
    /// One node per level.
    Product,
    /// Alternating one- and two-node levels.
    Accordion,
    /// Level `ℓ` holds `2^{ℓ−1}` nodes.
    Universal,
}

impl AnsatzKind {
    pub const ALL: [AnsatzKind; 3] = [
        AnsatzKind::Product,
        AnsatzKind::Accordion,
        AnsatzKind::Universal,
    ];

    pub fn build(self, n: usize) -> Result<VddGraph> {
        match self {
            AnsatzKind::Product => build_product(n),
            AnsatzKind::Accordion => build_accordion(n),
            AnsatzKind::Universal => build_universal(n),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AnsatzKind::Product => "product",
            AnsatzKind::Accordion => "accordion",
            AnsatzKind::Universal => "universal",
        }
    }
}

impl fmt::Display for AnsatzKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AnsatzKind {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(AnsatzKind::Product),
            "accordion" => Ok(AnsatzKind::Accordion),
            "universal" => Ok(AnsatzKind::Universal),
            other => Err(VddError::config(
                "ansatz",
                format!("unknown ansatz {other:?} (expected product, accordion or universal)"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InitScheme {
    /// `r ~ U[0,1)`, `ω, φ ~ U[0,2π)`, independently per node.
    UniformRandom { seed: u64 },
    /// `r = 1/√2`, zero phases.
    Balanced,
    /// `r ∈ {0, 1}` so that `ψ(b) = 1`.
    Basis(BitString),
}

impl InitScheme {
    /// Parses `uniform`, `balanced` or `basis:<bits>`; the seed is only used
    /// by `uniform`.
    pub fn parse(s: &str, seed: u64) -> Result<Self> {
        match s {
            "uniform" => Ok(InitScheme::UniformRandom { seed }),
            "balanced" => Ok(InitScheme::Balanced),
            _ => match s.strip_prefix("basis:") {
                Some(bits) => {
                    Ok(InitScheme::Basis(bits.parse().map_err(|e: VddError| {
                        VddError::config("init", e.to_string())
                    })?))
                }
                None => Err(VddError::config(
                    "init",
                    format!(
                        "unknown init scheme {s:?} (expected uniform, balanced or basis:<bits>)"
                    ),
                )),
            },
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 1 {
        return Err(VddError::domain("a graph needs at least one qubit"));
    }
    Ok(())
}

fn link(id: NodeId, n_nodes: usize) -> Child {
    if id > n_nodes {
        Child::Terminal
    } else {
        Child::Node(id)
    }
}

pub fn build_product(n: usize) -> Result<VddGraph> {
    check_n(n)?;
    let nodes = (1..=n)
        .map(|level| {
            let next = link(level + 1, n);
            Node {
                id: level,
                level,
                params: ParamTriple::balanced(),
                child0: next,
                child1: next,
            }
        })
        .collect();
    VddGraph::try_new(n, 0.0, 1, nodes)
}

/// Number of nodes in the accordion topology, `⌊3n/2⌋`.
pub fn accordion_node_count(n: usize) -> usize {
    3 * n / 2
}

/// Odd levels hold one node whose left/right edges go to the left/right node
/// of the following two-node level; both edges of each two-node-level node
/// go to the next single node. Qubit pairs `(1,2), (3,4), …` therefore form
/// independent two-qubit factors.
pub fn build_accordion(n: usize) -> Result<VddGraph> {
    check_n(n)?;
    let mut nodes = Vec::with_capacity(accordion_node_count(n));
    let mut next_id = 1;
    for level in 1..=n {
        let is_single = level % 2 == 1;
        if is_single {
            let id = next_id;
            let (c0, c1) = if level == n {
                (Child::Terminal, Child::Terminal)
            } else {
                (Child::Node(id + 1), Child::Node(id + 2))
            };
            nodes.push(Node {
                id,
                level,
                params: ParamTriple::balanced(),
                child0: c0,
                child1: c1,
            });
            next_id += 1;
        } else {
            let target = if level == n {
                Child::Terminal
            } else {
                Child::Node(next_id + 2)
            };
            for id in [next_id, next_id + 1] {
                nodes.push(Node {
                    id,
                    level,
                    params: ParamTriple::balanced(),
                    child0: target,
                    child1: target,
                });
            }
            next_id += 2;
        }
    }
    VddGraph::try_new(n, 0.0, 1, nodes)
}

/// Complete binary tree: node `k` branches to nodes `2k` and `2k+1`.
pub fn build_universal(n: usize) -> Result<VddGraph> {
    check_n(n)?;
    if n > MAX_UNIVERSAL_QUBITS {
        return Err(VddError::domain(format!(
            "universal ansatz supports at most {MAX_UNIVERSAL_QUBITS} qubits, got {n}"
        )));
    }
    let count = (1usize << n) - 1;
    let nodes = (1..=count)
        .map(|id| {
            let level = (usize::BITS - id.leading_zeros()) as usize;
            Node {
                id,
                level,
                params: ParamTriple::balanced(),
                child0: link(2 * id, count),
                child1: link(2 * id + 1, count),
            }
        })
        .collect();
    VddGraph::try_new(n, 0.0, 1, nodes)
}

/// Returns a copy of `g` with parameters filled according to `scheme` and the
/// global phase reset to 0.
pub fn init_params(g: &VddGraph, scheme: &InitScheme) -> Result<VddGraph> {
    g.ensure_valid()?;
    let mut out = g.clone();
    out.set_global_phase(0.0);
    let params: Vec<ParamTriple> = match scheme {
        InitScheme::UniformRandom { seed } => {
            let mut rng = rng_from_seed(*seed);
            (0..g.node_count())
                .map(|_| {
                    let r = rng.gen::<f64>();
                    let omega = TAU * rng.gen::<f64>();
                    let phi = TAU * rng.gen::<f64>();
                    ParamTriple { r, omega, phi }
                })
                .collect()
        }
        InitScheme::Balanced => vec![ParamTriple::balanced(); g.node_count()],
        InitScheme::Basis(bits) => {
            let mut params = vec![ParamTriple::left(); g.node_count()];
            for (id, bit) in g.path(bits)? {
                params[id - 1] = if bit == 0 {
                    ParamTriple::left()
                } else {
                    ParamTriple::right()
                };
            }
            params
        }
    };
    out.set_all_params(&params)?;
    Ok(out)
}

/// Writes a normalized state onto the universal topology.
///
/// Each node splits according to the conditional probability of its left
/// subtree; all phases sit on the last level, so the result reproduces `v`
/// exactly (including its global phase). Zero-probability prefixes get
/// `r = 1` and zero phases.
pub fn encode_state(v: &StateVector) -> Result<VddGraph> {
    let n = v.num_qubits();
    check_n(n)?;
    if n > MAX_ENCODE_QUBITS {
        return Err(VddError::Capacity(format!(
            "encode_state supports at most {MAX_ENCODE_QUBITS} qubits, got {n}"
        )));
    }
    let norm = v.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(VddError::domain(format!(
            "state is not normalized (Σ|a|² = {norm})"
        )));
    }
    let amps = v.amps();
    // probs[ℓ][p] is the probability of prefix p of length ℓ.
    let mut probs: Vec<Vec<f64>> = vec![amps.iter().map(|a| a.norm_sqr()).collect()];
    for _ in 0..n {
        let last = probs.last().unwrap();
        let coarser = last.chunks(2).map(|c| c[0] + c[1]).collect();
        probs.push(coarser);
    }
    probs.reverse();

    let g = build_universal(n)?;
    let mut params = Vec::with_capacity(g.node_count());
    for id in 1..=g.node_count() {
        let level = (usize::BITS - id.leading_zeros()) as usize;
        let prefix = id - (1 << (level - 1));
        let total = probs[level - 1][prefix];
        let left = probs[level][2 * prefix];
        let r = if total > 0.0 {
            (left / total).sqrt().min(1.0)
        } else {
            1.0
        };
        let (omega, phi) = if level == n {
            (amps[2 * prefix].arg(), amps[2 * prefix + 1].arg())
        } else {
            (0.0, 0.0)
        };
        params.push(ParamTriple { r, omega, phi });
    }
    let mut g = g;
    g.set_all_params(&params)?;
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::to_state_vector;
    use num_complex::Complex64;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn product_shapes() {
        let g = build_product(1).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.nodes()[0].child0, Child::Terminal);
        assert_eq!(g.nodes()[0].child1, Child::Terminal);
        assert_eq!(build_product(3).unwrap().param_count(), 9);
        assert!(build_product(0).is_err());
    }

    #[test]
    fn product_balanced_is_uniform() {
        let g = init_params(&build_product(4).unwrap(), &InitScheme::Balanced).unwrap();
        let v = to_state_vector(&g).unwrap();
        for a in v.amps() {
            assert!((a - Complex64::new(0.25, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn accordion_counts_and_wiring() {
        let g = build_accordion(2).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.param_count(), 9);
        let g = build_accordion(5).unwrap();
        assert_eq!(g.node_count(), 7);
        assert_eq!(g.param_count(), 21);
        assert_eq!(
            g.levels(),
            vec![vec![1], vec![2, 3], vec![4], vec![5, 6], vec![7]]
        );
        let g = build_accordion(3).unwrap();
        let path = g.path(&"001".parse().unwrap()).unwrap();
        assert_eq!(path, vec![(1, 0), (2, 0), (4, 1)]);
        assert!(build_accordion(0).is_err());
    }

    #[test]
    fn universal_counts() {
        assert_eq!(build_universal(2).unwrap().node_count(), 3);
        assert_eq!(build_universal(3).unwrap().node_count(), 7);
        assert!(build_universal(21).is_err());
    }

    #[test]
    fn balanced_accordion_ten() {
        let g = init_params(&build_accordion(10).unwrap(), &InitScheme::Balanced).unwrap();
        let v = to_state_vector(&g).unwrap();
        for a in v.amps() {
            assert!((a.re - 1.0 / 32.0).abs() < 1e-15 && a.im.abs() < 1e-15);
        }
    }

    #[test]
    fn basis_init() {
        let g = init_params(
            &build_product(3).unwrap(),
            &InitScheme::Basis("101".parse().unwrap()),
        )
        .unwrap();
        let v = to_state_vector(&g).unwrap();
        for (i, a) in v.amps().iter().enumerate() {
            let expect = if i == 5 { 1.0 } else { 0.0 };
            assert_eq!(*a, Complex64::new(expect, 0.0));
        }
    }

    #[test]
    fn uniform_init_is_deterministic() {
        let a = init_params(
            &build_accordion(6).unwrap(),
            &InitScheme::UniformRandom { seed: 42 },
        )
        .unwrap();
        let b = init_params(
            &build_accordion(6).unwrap(),
            &InitScheme::UniformRandom { seed: 42 },
        )
        .unwrap();
        assert_eq!(a, b);
        for p in a.all_params() {
            assert!((0.0..1.0).contains(&p.r));
            assert!((0.0..TAU).contains(&p.omega) && (0.0..TAU).contains(&p.phi));
        }
    }

    #[test]
    fn init_scheme_parsing() {
        assert_eq!(
            InitScheme::parse("uniform", 3).unwrap(),
            InitScheme::UniformRandom { seed: 3 }
        );
        assert_eq!(
            InitScheme::parse("basis:011", 0).unwrap(),
            InitScheme::Basis("011".parse().unwrap())
        );
        assert!(InitScheme::parse("gaussian", 0).is_err());
    }

    #[test]
    fn encode_basis_state() {
        let mut amps = vec![Complex64::new(0.0, 0.0); 8];
        amps[5] = Complex64::new(1.0, 0.0);
        let g = encode_state(&StateVector::new(3, amps).unwrap()).unwrap();
        let path = g.path(&"101".parse().unwrap()).unwrap();
        for (id, bit) in path {
            let r = g.params(id).unwrap().r;
            assert_eq!(r, if bit == 0 { 1.0 } else { 0.0 });
        }
        let v = to_state_vector(&g).unwrap();
        assert!((v.amps()[5] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn encode_uniform_two_qubit() {
        let amps = vec![Complex64::new(0.5, 0.0); 4];
        let g = encode_state(&StateVector::new(2, amps).unwrap()).unwrap();
        for p in g.all_params() {
            assert!((p.r - FRAC_1_SQRT_2).abs() < 1e-15);
            assert_eq!((p.omega, p.phi), (0.0, 0.0));
        }
    }

    #[test]
    fn encode_rejects_unnormalized() {
        let amps = vec![Complex64::new(1.0, 0.0); 4];
        assert!(matches!(
            encode_state(&StateVector::new(2, amps).unwrap()),
            Err(VddError::Domain(_))
        ));
    }
}
