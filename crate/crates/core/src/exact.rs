//! Dense state vectors, exact energies and analytic gradients.
//!
//! Amplitudes are built by level-wise forward propagation: every prefix of a
//! bit string reaches exactly one node, so level `ℓ` holds `2^{ℓ−1}`
//! `(prefix amplitude, node)` pairs. Gradients use the matching backward pass
//! `G(p) = Σ_b conj(a_{node(p)}(b)) · G(p, b)` seeded with `Hψ`, so that
//! `∂⟨H⟩/∂θ = 2 Re Σ_{p: node(p) ∋ θ} conj(F(p)) Σ_b conj(∂_θ a(b)) G(p, b)`.

use num_complex::Complex64;

use crate::error::{Result, VddError};
use crate::graph::{BitString, Child, VddGraph};
use crate::params::{param_label, EdgeJet, ParamMode, ParamVector};
use crate::pauli::PauliHamiltonian;

/// Largest register for which dense state vectors are built.
pub const MAX_STATE_QUBITS: usize = 20;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const TERMINAL: u32 = u32::MAX;

/// Dense amplitudes indexed by `Σ b_ℓ 2^{n−ℓ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn new(num_qubits: usize, amps: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits >= usize::BITS as usize {
            return Err(VddError::domain("qubit count out of range"));
        }
        if amps.len() != 1usize << num_qubits {
            return Err(VddError::domain(format!(
                "expected {} amplitudes for {num_qubits} qubits, got {}",
                1usize << num_qubits,
                amps.len()
            )));
        }
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amplitude(&self, b: &BitString) -> Complex64 {
        self.amps[b.to_index()]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// One entry per trainable parameter, ordered `(r₁, ω₁, φ₁, r₂, …)` (or
/// `u` in place of `r` in trig mode).
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVector {
    pub mode: ParamMode,
    pub entries: Vec<f64>,
    /// Labels of raw `r` entries evaluated at a derivative singularity.
    pub singular: Vec<String>,
}

impl GradientVector {
    pub(crate) fn new(mode: ParamMode, entries: Vec<f64>) -> Self {
        GradientVector {
            mode,
            entries,
            singular: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.entries.len())
            .map(|i| param_label(self.mode, i))
            .collect()
    }

    /// Entry by label (`"r1"`, `"omega3"`, `"phi-1"`, …).
    pub fn get(&self, label: &str) -> Option<f64> {
        crate::params::label_index(label, self.entries.len() / 3).map(|i| self.entries[i])
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Index-based view of a validated graph's wiring.
#[derive(Debug, Clone)]
pub(crate) struct Wiring {
    pub n: usize,
    pub root: u32,
    pub children: Vec<[u32; 2]>,
    pub global_phase: f64,
}

impl Wiring {
    pub fn new(g: &VddGraph) -> Result<Self> {
        g.ensure_valid()?;
        let to_idx = |c: Child| match c {
            Child::Node(id) => (id - 1) as u32,
            Child::Terminal => TERMINAL,
        };
        Ok(Wiring {
            n: g.num_qubits(),
            root: (g.root_child() - 1) as u32,
            children: g
                .nodes()
                .iter()
                .map(|n| [to_idx(n.child0), to_idx(n.child1)])
                .collect(),
            global_phase: g.global_phase(),
        })
    }

    pub fn check_cap(&self) -> Result<()> {
        if self.n > MAX_STATE_QUBITS {
            return Err(VddError::Capacity(format!(
                "dense evaluation supports at most {MAX_STATE_QUBITS} qubits, got {}; use VMC",
                self.n
            )));
        }
        Ok(())
    }

    /// `ψ(b)` for a basis index, walking the path.
    pub fn amplitude_at(&self, jets: &[EdgeJet], index: usize) -> Complex64 {
        let mut acc = Complex64::from_polar(1.0, self.global_phase);
        let mut node = self.root;
        for level in 0..self.n {
            let bit = (index >> (self.n - 1 - level)) & 1;
            acc *= jets[node as usize].amp[bit];
            node = self.children[node as usize][bit];
        }
        acc
    }

    /// Nodes visited by a basis index, level 1 first.
    pub fn path_nodes(&self, index: usize, out: &mut Vec<(u32, u8)>) {
        out.clear();
        let mut node = self.root;
        for level in 0..self.n {
            let bit = ((index >> (self.n - 1 - level)) & 1) as u8;
            out.push((node, bit));
            node = self.children[node as usize][bit as usize];
        }
    }

    /// Full amplitude array.
    pub fn amplitudes(&self, jets: &[EdgeJet]) -> Vec<Complex64> {
        let mut amps = vec![Complex64::from_polar(1.0, self.global_phase)];
        let mut nodes = vec![self.root];
        for _ in 0..self.n {
            let mut next_amps = Vec::with_capacity(2 * amps.len());
            let mut next_nodes = Vec::with_capacity(2 * amps.len());
            for (&a, &nd) in amps.iter().zip(&nodes) {
                let jet = &jets[nd as usize];
                let ch = self.children[nd as usize];
                next_amps.push(a * jet.amp[0]);
                next_amps.push(a * jet.amp[1]);
                next_nodes.push(ch[0]);
                next_nodes.push(ch[1]);
            }
            amps = next_amps;
            nodes = next_nodes;
        }
        amps
    }

    /// Prefix amplitudes and nodes for every level, followed by `ψ`.
    fn forward(&self, jets: &[EdgeJet]) -> (Vec<Vec<Complex64>>, Vec<Vec<u32>>, Vec<Complex64>) {
        let mut f_levels = Vec::with_capacity(self.n);
        let mut node_levels = Vec::with_capacity(self.n);
        let mut amps = vec![Complex64::from_polar(1.0, self.global_phase)];
        let mut nodes = vec![self.root];
        for _ in 0..self.n {
            let mut next_amps = Vec::with_capacity(2 * amps.len());
            let mut next_nodes = Vec::with_capacity(2 * amps.len());
            for (&a, &nd) in amps.iter().zip(&nodes) {
                let jet = &jets[nd as usize];
                let ch = self.children[nd as usize];
                next_amps.push(a * jet.amp[0]);
                next_amps.push(a * jet.amp[1]);
                next_nodes.push(ch[0]);
                next_nodes.push(ch[1]);
            }
            f_levels.push(std::mem::replace(&mut amps, next_amps));
            node_levels.push(std::mem::replace(&mut nodes, next_nodes));
        }
        (f_levels, node_levels, amps)
    }

    /// Backward pass: returns `Σ_b conj(∂_j ψ(b)) · y(b)` for every parameter.
    fn pullback(
        &self,
        jets: &[EdgeJet],
        f_levels: &[Vec<Complex64>],
        node_levels: &[Vec<u32>],
        y: Vec<Complex64>,
    ) -> Vec<Complex64> {
        let mut acc = vec![ZERO; 3 * jets.len()];
        let mut g = y;
        for level in (0..self.n).rev() {
            let f = &f_levels[level];
            let nodes = &node_levels[level];
            let mut g_up = Vec::with_capacity(f.len());
            for (p, (&fp, &nd)) in f.iter().zip(nodes).enumerate() {
                let jet = &jets[nd as usize];
                let (g0, g1) = (g[2 * p], g[2 * p + 1]);
                let fc = fp.conj();
                let base = 3 * nd as usize;
                for k in 0..3 {
                    acc[base + k] += fc * (jet.d[k][0].conj() * g0 + jet.d[k][1].conj() * g1);
                }
                g_up.push(jet.amp[0].conj() * g0 + jet.amp[1].conj() * g1);
            }
            g = g_up;
        }
        acc
    }

    /// `(⟨H⟩, ∂⟨H⟩/∂θ)`.
    pub fn energy_and_gradient(&self, jets: &[EdgeJet], h: &PauliHamiltonian) -> (f64, Vec<f64>) {
        let (f_levels, node_levels, psi) = self.forward(jets);
        let y = h.apply(&psi);
        let energy: f64 = psi.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum();
        let acc = self.pullback(jets, &f_levels, &node_levels, y);
        (energy, acc.iter().map(|z| 2.0 * z.re).collect())
    }

    /// `(ψ, ∂ψ/∂θ_j (b))` for a single basis index via prefix/suffix
    /// products along its path.
    pub fn amplitude_derivatives(
        &self,
        jets: &[EdgeJet],
        index: usize,
    ) -> (Complex64, Vec<(usize, Complex64)>) {
        let mut path = Vec::with_capacity(self.n);
        self.path_nodes(index, &mut path);
        let factors: Vec<Complex64> = path
            .iter()
            .map(|&(nd, bit)| jets[nd as usize].amp[bit as usize])
            .collect();
        let mut prefix = vec![Complex64::from_polar(1.0, self.global_phase)];
        for f in &factors {
            prefix.push(prefix.last().unwrap() * f);
        }
        let mut suffix = vec![Complex64::new(1.0, 0.0); self.n + 1];
        for l in (0..self.n).rev() {
            suffix[l] = suffix[l + 1] * factors[l];
        }
        let mut derivs = Vec::with_capacity(3 * self.n);
        for (l, &(nd, bit)) in path.iter().enumerate() {
            let jet = &jets[nd as usize];
            for k in 0..3 {
                let d = jet.d[k][bit as usize];
                if d != ZERO {
                    derivs.push((3 * nd as usize + k, prefix[l] * d * suffix[l + 1]));
                }
            }
        }
        (prefix[self.n], derivs)
    }
}

pub fn to_state_vector(g: &VddGraph) -> Result<StateVector> {
    let wiring = Wiring::new(g)?;
    wiring.check_cap()?;
    let (jets, _) = ParamVector::from_graph(g, ParamMode::Raw).jets();
    StateVector::new(g.num_qubits(), wiring.amplitudes(&jets))
}

fn check_sizes(g: &VddGraph, h: &PauliHamiltonian) -> Result<()> {
    if g.num_qubits() != h.num_qubits() {
        return Err(VddError::domain(format!(
            "graph has {} qubits, Hamiltonian has {}",
            g.num_qubits(),
            h.num_qubits()
        )));
    }
    Ok(())
}

/// `⟨ψ_θ|H|ψ_θ⟩`.
pub fn exact_energy(g: &VddGraph, h: &PauliHamiltonian) -> Result<f64> {
    check_sizes(g, h)?;
    let v = to_state_vector(g)?;
    Ok(crate::pauli::expectation_unchecked(h, v.amps()))
}

/// Energy and analytic gradient for a parameter vector laid over the wiring
/// of `g` (the parameters stored in `g` itself are ignored).
pub fn energy_and_gradient(
    g: &VddGraph,
    params: &ParamVector,
    h: &PauliHamiltonian,
) -> Result<(f64, GradientVector)> {
    check_sizes(g, h)?;
    if params.len() != g.param_count() {
        return Err(VddError::domain(format!(
            "parameter vector has {} entries, graph needs {}",
            params.len(),
            g.param_count()
        )));
    }
    let wiring = Wiring::new(g)?;
    wiring.check_cap()?;
    let (jets, singular) = params.jets();
    let (energy, entries) = wiring.energy_and_gradient(&jets, h);
    let mut grad = GradientVector::new(params.mode(), entries);
    grad.singular = singular.iter().map(|&i| params.label(i)).collect();
    if !grad.singular.is_empty() {
        log::warn!(
            "singular raw-mode derivative for {}; evaluated at r = 1 - {:e}",
            grad.singular.join(", "),
            crate::params::RAW_MARGIN
        );
    }
    Ok((energy, grad))
}

/// Analytic `∂⟨H⟩/∂θ_j` for every parameter of `g`, in the coordinates of
/// `mode` (trig mode uses `u = arccos r`).
pub fn exact_gradient(
    g: &VddGraph,
    h: &PauliHamiltonian,
    mode: ParamMode,
) -> Result<GradientVector> {
    let params = ParamVector::from_graph(g, mode);
    energy_and_gradient(g, &params, h).map(|(_, grad)| grad)
}

/// Energy of a parameter vector laid over the wiring of `g`.
pub fn energy_of(g: &VddGraph, params: &ParamVector, h: &PauliHamiltonian) -> Result<f64> {
    check_sizes(g, h)?;
    let wiring = Wiring::new(g)?;
    wiring.check_cap()?;
    let (jets, _) = params.jets();
    Ok(crate::pauli::expectation_unchecked(
        h,
        &wiring.amplitudes(&jets),
    ))
}

/// Central finite differences of [`exact_energy`]. Raw `r` probes that would
/// leave `[0, 1]` fall back to one-sided differences.
pub fn finite_difference(
    g: &VddGraph,
    h: &PauliHamiltonian,
    mode: ParamMode,
    step: f64,
) -> Result<GradientVector> {
    if !(1e-8..=1e-3).contains(&step) {
        return Err(VddError::domain(format!(
            "finite-difference step {step:e} outside [1e-8, 1e-3]"
        )));
    }
    check_sizes(g, h)?;
    let wiring = Wiring::new(g)?;
    wiring.check_cap()?;
    let base = ParamVector::from_graph(g, mode);
    let energy = |pv: &ParamVector| {
        let (jets, _) = pv.jets();
        crate::pauli::expectation_unchecked(h, &wiring.amplitudes(&jets))
    };
    let e0 = energy(&base);
    let mut entries = Vec::with_capacity(base.len());
    let mut probe = base.clone();
    for j in 0..base.len() {
        let x = base.values()[j];
        let bounded = mode == ParamMode::Raw && j % 3 == 0;
        let (lo, hi) = if bounded {
            (x - step >= 0.0, x + step <= 1.0)
        } else {
            (true, true)
        };
        let mut eval = |v: f64| {
            probe.values_mut()[j] = v;
            energy(&probe)
        };
        let d = match (lo, hi) {
            (true, true) => (eval(x + step) - eval(x - step)) / (2.0 * step),
            (false, true) => (eval(x + step) - e0) / step,
            (true, false) => (e0 - eval(x - step)) / step,
            (false, false) => 0.0,
        };
        probe.values_mut()[j] = x;
        entries.push(d);
    }
    Ok(GradientVector::new(mode, entries))
}
