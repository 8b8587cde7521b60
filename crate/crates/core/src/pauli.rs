//! Pauli-string Hamiltonians with matrix-free action on basis states.
//!
//! Conventions: qubit 1 is the most significant bit of a state-vector index,
//! and `Y|0⟩ = i|1⟩`, `Y|1⟩ = −i|0⟩`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, VddError};
use crate::exact::StateVector;
use crate::graph::BitString;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `coeff · (P₁ ⊗ P₂ ⊗ … ⊗ Pₙ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    coeff: f64,
    ops: Vec<Pauli>,
    flip_mask: usize,
    sign_mask: usize,
    y_phase: Complex64,
}

impl PauliString {
    pub fn new(coeff: f64, ops: Vec<Pauli>) -> Result<Self> {
        if !coeff.is_finite() {
            return Err(VddError::domain("Pauli coefficient must be finite"));
        }
        if ops.is_empty() || ops.len() > usize::BITS as usize - 1 {
            return Err(VddError::domain("Pauli string length out of range"));
        }
        let n = ops.len();
        let mut flip_mask = 0;
        let mut sign_mask = 0;
        let mut n_y = 0;
        for (q, op) in ops.iter().enumerate() {
            let bit = 1usize << (n - 1 - q);
            match op {
                Pauli::I => {}
                Pauli::X => flip_mask |= bit,
                Pauli::Y => {
                    flip_mask |= bit;
                    sign_mask |= bit;
                    n_y += 1;
                }
                Pauli::Z => sign_mask |= bit,
            }
        }
        let y_phase = [Complex64::new(1.0, 0.0), I, Complex64::new(-1.0, 0.0), -I][n_y % 4];
        Ok(PauliString {
            coeff,
            ops,
            flip_mask,
            sign_mask,
            y_phase,
        })
    }

    /// Single-qubit or multi-qubit string from `(qubit, op)` pairs, qubits
    /// 1-based; unspecified qubits carry the identity.
    pub fn from_sparse(n: usize, coeff: f64, ops: &[(usize, Pauli)]) -> Result<Self> {
        let mut dense = vec![Pauli::I; n];
        for &(q, op) in ops {
            if !(1..=n).contains(&q) {
                return Err(VddError::domain(format!("qubit {q} outside 1..={n}")));
            }
            dense[q - 1] = op;
        }
        Self::new(coeff, dense)
    }

    pub fn coeff(&self) -> f64 {
        self.coeff
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn num_qubits(&self) -> usize {
        self.ops.len()
    }

    /// True when the string has no X or Y factor.
    pub fn is_diagonal(&self) -> bool {
        self.flip_mask == 0
    }

    /// True when the matrix of the string is real (even number of Y factors).
    pub fn is_real(&self) -> bool {
        self.y_phase.im == 0.0
    }

    /// For basis index `x`, returns `(y, phase)` with `P|x⟩ = phase·|y⟩`
    /// (coefficient excluded).
    #[inline]
    pub fn act_on_index(&self, x: usize) -> (usize, Complex64) {
        let parity = (x & self.sign_mask).count_ones() & 1;
        let phase = if parity == 1 {
            -self.y_phase
        } else {
            self.y_phase
        };
        (x ^ self.flip_mask, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.coeff)?;
        for op in &self.ops {
            write!(f, "{}", op.symbol())?;
        }
        Ok(())
    }
}

/// Action of a Pauli string on a basis state: the unique connected state `b'`
/// and the phase with `⟨b'|s|b⟩ = coeff·phase`.
pub fn apply_string(s: &PauliString, b: &BitString) -> Result<(BitString, Complex64)> {
    if b.len() != s.num_qubits() {
        return Err(VddError::domain(format!(
            "bit string of length {} for a {}-qubit Pauli string",
            b.len(),
            s.num_qubits()
        )));
    }
    let (y, phase) = s.act_on_index(b.to_index());
    Ok((BitString::from_index(y, b.len()), phase))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PauliHamiltonian {
    num_qubits: usize,
    terms: Vec<PauliString>,
}

impl PauliHamiltonian {
    pub fn new(num_qubits: usize, terms: Vec<PauliString>) -> Result<Self> {
        if num_qubits == 0 {
            return Err(VddError::domain("Hamiltonian needs at least one qubit"));
        }
        if let Some(t) = terms.iter().find(|t| t.num_qubits() != num_qubits) {
            return Err(VddError::domain(format!(
                "term {t} acts on {} qubits, expected {num_qubits}",
                t.num_qubits()
            )));
        }
        Ok(PauliHamiltonian { num_qubits, terms })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.iter().all(PauliString::is_diagonal)
    }

    pub fn is_real(&self) -> bool {
        self.terms.iter().all(PauliString::is_real)
    }

    /// `H·ψ` for a dense amplitude array of length `2ⁿ`.
    pub fn apply(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    pub(crate) fn apply_into(&self, psi: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(psi.len(), 1 << self.num_qubits);
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for t in &self.terms {
            for (x, &a) in psi.iter().enumerate() {
                let (y, phase) = t.act_on_index(x);
                out[y] += phase * a * t.coeff;
            }
        }
    }

    /// Dense `2ⁿ × 2ⁿ` matrix.
    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for t in &self.terms {
            for x in 0..dim {
                let (y, phase) = t.act_on_index(x);
                m[(y, x)] += phase * t.coeff;
            }
        }
        m
    }
}

impl fmt::Display for PauliHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(" + "))
    }
}

/// `⟨v|H|v⟩` for a normalized state.
pub fn expectation(h: &PauliHamiltonian, v: &StateVector) -> Result<f64> {
    if v.num_qubits() != h.num_qubits() {
        return Err(VddError::domain(format!(
            "state has {} qubits, Hamiltonian has {}",
            v.num_qubits(),
            h.num_qubits()
        )));
    }
    let norm = v.norm_sqr();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(VddError::domain(format!(
            "state is not normalized (Σ|a|² = {norm})"
        )));
    }
    Ok(expectation_unchecked(h, v.amps()))
}

pub(crate) fn expectation_unchecked(h: &PauliHamiltonian, psi: &[Complex64]) -> f64 {
    let hpsi = h.apply(psi);
    let e: Complex64 = psi.iter().zip(&hpsi).map(|(a, b)| a.conj() * b).sum();
    if e.im.abs() > 1e-10 * (1.0 + e.re.abs()) {
        log::warn!("expectation has imaginary residue {:e}", e.im);
    }
    e.re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    /// `Z₁Z₂` embedded in `n` qubits.
    Z1Z2,
    /// `Σ_{⟨i,j⟩} Z_iZ_j + g Σ_i X_i`.
    Tfim,
    /// `Σ_{⟨i,j⟩} (jx X_iX_j + jy Y_iY_j + jz Z_iZ_j)`.
    Heisenberg,
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Z1Z2 => "z1z2",
            Model::Tfim => "tfim",
            Model::Heisenberg => "heisenberg",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Model {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "z1z2" => Ok(Model::Z1Z2),
            "tfim" => Ok(Model::Tfim),
            "heisenberg" => Ok(Model::Heisenberg),
            other => Err(VddError::config(
                "model",
                format!("unknown model {other:?} (expected z1z2, tfim or heisenberg)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Boundary {
    #[default]
    Open,
    Periodic,
}

impl FromStr for Boundary {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(Boundary::Open),
            "periodic" => Ok(Boundary::Periodic),
            other => Err(VddError::config(
                "boundary",
                format!("unknown boundary {other:?} (expected open or periodic)"),
            )),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelSpec {
    pub model: Model,
    pub n: usize,
    /// Transverse-field strength (TFIM only).
    pub g: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn z1z2(n: usize) -> Self {
        ModelSpec {
            model: Model::Z1Z2,
            n,
            g: 0.0,
            jx: 1.0,
            jy: 1.0,
            jz: 1.0,
            boundary: Boundary::Open,
        }
    }

    pub fn tfim(n: usize, g: f64) -> Self {
        ModelSpec {
            model: Model::Tfim,
            g,
            ..Self::z1z2(n)
        }
    }

    /// Isotropic Heisenberg chain with coupling `j`.
    pub fn heisenberg(n: usize, j: f64) -> Self {
        ModelSpec {
            model: Model::Heisenberg,
            jx: j,
            jy: j,
            jz: j,
            ..Self::z1z2(n)
        }
    }

    pub fn with_boundary(mut self, boundary: Boundary) -> Self {
        self.boundary = boundary;
        self
    }

    /// The coupling reported in result tables: `g` for the TFIM, `jz` for
    /// the Heisenberg chain, 0 otherwise.
    pub fn coupling(&self) -> f64 {
        match self.model {
            Model::Tfim => self.g,
            Model::Heisenberg => self.jz,
            Model::Z1Z2 => 0.0,
        }
    }

    fn bonds(&self) -> Vec<(usize, usize)> {
        let mut bonds: Vec<(usize, usize)> = (1..self.n).map(|i| (i, i + 1)).collect();
        if self.boundary == Boundary::Periodic {
            bonds.push((self.n, 1));
        }
        bonds
    }

    pub fn build(&self) -> Result<PauliHamiltonian> {
        build_model(self)
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<PauliHamiltonian> {
    let n = spec.n;
    if n < 2 {
        return Err(VddError::domain(format!(
            "{} needs at least 2 qubits, got {n}",
            spec.model
        )));
    }
    for (name, v) in [
        ("g", spec.g),
        ("jx", spec.jx),
        ("jy", spec.jy),
        ("jz", spec.jz),
    ] {
        if !v.is_finite() {
            return Err(VddError::domain(format!("coupling {name} is not finite")));
        }
    }
    let mut terms = Vec::new();
    let mut push = |coeff: f64, ops: &[(usize, Pauli)]| -> Result<()> {
        if coeff != 0.0 {
            terms.push(PauliString::from_sparse(n, coeff, ops)?);
        }
        Ok(())
    };
    match spec.model {
        Model::Z1Z2 => push(1.0, &[(1, Pauli::Z), (2, Pauli::Z)])?,
        Model::Tfim => {
            for (i, j) in spec.bonds() {
                push(1.0, &[(i, Pauli::Z), (j, Pauli::Z)])?;
            }
            for i in 1..=n {
                push(spec.g, &[(i, Pauli::X)])?;
            }
        }
        Model::Heisenberg => {
            for (i, j) in spec.bonds() {
                push(spec.jx, &[(i, Pauli::X), (j, Pauli::X)])?;
                push(spec.jy, &[(i, Pauli::Y), (j, Pauli::Y)])?;
                push(spec.jz, &[(i, Pauli::Z), (j, Pauli::Z)])?;
            }
        }
    }
    PauliHamiltonian::new(n, terms)
}
