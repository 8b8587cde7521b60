//! Variational Monte Carlo on VDDs.
//!
//! Bit strings are drawn exactly from the Born distribution by walking the
//! graph from the level-1 node and taking the left edge with probability
//! `|left|²` at every node, so samples are i.i.d. and no Markov chain is
//! involved. Energies and gradients come from the local estimator
//! `Ã(b) = Σ_{b'} ψ(b')/ψ(b) ⟨b|H|b'⟩` and the log-derivatives
//! `O_j(b) = ∂ log ψ(b)/∂θ_j`, with `∂⟨H⟩/∂θ_j = 2 Re E[O_j* (Ã − E[Ã])]`.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Result, VddError};
use crate::exact::{GradientVector, Wiring};
use crate::graph::{BitString, VddGraph};
use crate::params::{EdgeJet, ParamMode, ParamVector};
use crate::pauli::PauliHamiltonian;
use crate::rng::{derive_seed, rng_from_seed};

/// Samples per independently seeded stream.
const CHUNK: usize = 1024;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Sampled bit strings with their local energies and log-derivatives.
#[derive(Debug, Clone)]
pub struct VmcBatch {
    pub mode: ParamMode,
    pub num_params: usize,
    pub num_qubits: usize,
    /// Basis indices of the samples.
    pub samples: Vec<usize>,
    pub local_values: Vec<Complex64>,
    /// Non-zero `O_j(b)` entries per sample, as `(parameter index, value)`.
    pub log_derivs: Vec<Vec<(usize, Complex64)>>,
    pub energy_mean: f64,
    pub energy_stderr: f64,
}

impl VmcBatch {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn bitstrings(&self) -> Vec<BitString> {
        self.samples
            .iter()
            .map(|&x| BitString::from_index(x, self.num_qubits))
            .collect()
    }

    /// CSV with columns `sample_index,bitstring,local_value_re,local_value_im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "sample_index,bitstring,local_value_re,local_value_im")?;
        for (i, (&x, v)) in self.samples.iter().zip(&self.local_values).enumerate() {
            let b = BitString::from_index(x, self.num_qubits);
            writeln!(w, "{i},{b},{:.17e},{:.17e}", v.re, v.im)?;
        }
        Ok(())
    }
}

fn sample_chunk(wiring: &Wiring, jets: &[EdgeJet], count: usize, seed: u64) -> Vec<usize> {
    let mut rng = rng_from_seed(seed);
    (0..count)
        .map(|_| {
            let mut node = wiring.root;
            let mut index = 0usize;
            for _ in 0..wiring.n {
                let p0 = jets[node as usize].amp[0].norm_sqr();
                let bit = usize::from(rng.gen::<f64>() >= p0);
                index = (index << 1) | bit;
                node = wiring.children[node as usize][bit];
            }
            index
        })
        .collect()
}

pub(crate) fn sample_indices(
    wiring: &Wiring,
    jets: &[EdgeJet],
    count: usize,
    seed: u64,
) -> Vec<usize> {
    let chunks: Vec<(usize, usize)> = (0..count)
        .step_by(CHUNK)
        .enumerate()
        .map(|(c, start)| (c, CHUNK.min(count - start)))
        .collect();
    chunks
        .par_iter()
        .map(|&(c, len)| sample_chunk(wiring, jets, len, derive_seed(seed, &[c as u64])))
        .collect::<Vec<_>>()
        .concat()
}

/// Draws `count` i.i.d. bit strings from `|ψ(b)|²`. Deterministic for a
/// given seed regardless of thread count.
pub fn sample(g: &VddGraph, count: usize, seed: u64) -> Result<Vec<BitString>> {
    if count == 0 {
        return Err(VddError::domain("sample count must be at least 1"));
    }
    let wiring = Wiring::new(g)?;
    let (jets, _) = ParamVector::from_graph(g, ParamMode::Raw).jets();
    Ok(sample_indices(&wiring, &jets, count, seed)
        .into_iter()
        .map(|x| BitString::from_index(x, g.num_qubits()))
        .collect())
}

fn local_value(
    wiring: &Wiring,
    jets: &[EdgeJet],
    h: &PauliHamiltonian,
    x: usize,
) -> Result<Complex64> {
    let psi = wiring.amplitude_at(jets, x);
    if psi == ZERO {
        return Err(VddError::domain(format!(
            "ψ({}) = 0; the local estimator is undefined",
            BitString::from_index(x, wiring.n)
        )));
    }
    let mut acc = ZERO;
    for t in h.terms() {
        let (y, phase) = t.act_on_index(x);
        // ⟨x|P|y⟩ = conj(⟨y|P|x⟩) for Hermitian P.
        let ratio = if y == x {
            Complex64::new(1.0, 0.0)
        } else {
            wiring.amplitude_at(jets, y) / psi
        };
        acc += phase.conj() * ratio * t.coeff();
    }
    Ok(acc)
}

/// `Ã(b)`.
pub fn local_estimator(g: &VddGraph, h: &PauliHamiltonian, b: &BitString) -> Result<Complex64> {
    if b.len() != g.num_qubits() || h.num_qubits() != g.num_qubits() {
        return Err(VddError::domain(
            "size mismatch between graph, Hamiltonian and bit string",
        ));
    }
    let wiring = Wiring::new(g)?;
    let (jets, _) = ParamVector::from_graph(g, ParamMode::Raw).jets();
    local_value(&wiring, &jets, h, b.to_index())
}

/// `O_k` for the edge `bit` of a node with parameters `c = (r|u, ω, φ)`.
fn edge_log_derivative(mode: ParamMode, c: &[f64], bit: u8) -> Option<[Complex64; 3]> {
    let first = match (mode, bit) {
        (ParamMode::Raw, 0) => {
            let r = c[0];
            (r > 0.0).then(|| 1.0 / r)?
        }
        (ParamMode::Raw, _) => {
            let r = c[0];
            (r < 1.0).then(|| -r / (1.0 - r * r))?
        }
        (ParamMode::Trig, 0) => {
            let (s, co) = c[0].sin_cos();
            (co != 0.0).then(|| -s / co)?
        }
        (ParamMode::Trig, _) => {
            let (s, co) = c[0].sin_cos();
            (s != 0.0).then(|| co / s)?
        }
    };
    let first = Complex64::new(first, 0.0);
    Some(if bit == 0 {
        [first, I, ZERO]
    } else {
        [first, ZERO, I]
    })
}

fn sparse_log_derivatives(
    wiring: &Wiring,
    params: &ParamVector,
    x: usize,
    path: &mut Vec<(u32, u8)>,
) -> Result<Vec<(usize, Complex64)>> {
    wiring.path_nodes(x, path);
    let values = params.values();
    let mut out = Vec::with_capacity(2 * path.len());
    for &(nd, bit) in path.iter() {
        let base = 3 * nd as usize;
        let o =
            edge_log_derivative(params.mode(), &values[base..base + 3], bit).ok_or_else(|| {
                VddError::domain(format!(
                    "log-derivative is singular at node {} (edge {bit} has zero amplitude)",
                    nd + 1
                ))
            })?;
        for (k, v) in o.into_iter().enumerate() {
            if v != ZERO {
                out.push((base + k, v));
            }
        }
    }
    Ok(out)
}

/// Dense `O_j(b)` for every parameter of `g` (zero for off-path nodes).
pub fn log_derivatives(g: &VddGraph, b: &BitString, mode: ParamMode) -> Result<Vec<Complex64>> {
    if b.len() != g.num_qubits() {
        return Err(VddError::domain(
            "bit string length does not match the graph",
        ));
    }
    let wiring = Wiring::new(g)?;
    let params = ParamVector::from_graph(g, mode);
    let mut path = Vec::new();
    let sparse = sparse_log_derivatives(&wiring, &params, b.to_index(), &mut path)?;
    let mut dense = vec![ZERO; g.param_count()];
    for (j, v) in sparse {
        dense[j] = v;
    }
    Ok(dense)
}

/// Samples `count` bit strings from the state described by `params` laid
/// over the wiring of `g` and evaluates their estimators.
pub fn build_batch_with(
    g: &VddGraph,
    params: &ParamVector,
    h: &PauliHamiltonian,
    count: usize,
    seed: u64,
) -> Result<VmcBatch> {
    if count == 0 {
        return Err(VddError::domain("batch size must be at least 1"));
    }
    if h.num_qubits() != g.num_qubits() || params.len() != g.param_count() {
        return Err(VddError::domain(
            "size mismatch between graph, parameters and Hamiltonian",
        ));
    }
    let wiring = Wiring::new(g)?;
    let (jets, _) = params.jets();
    let samples = sample_indices(&wiring, &jets, count, seed);
    let evaluated: Vec<(Complex64, Vec<(usize, Complex64)>)> = samples
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut path = Vec::with_capacity(wiring.n);
            chunk
                .iter()
                .map(|&x| {
                    Ok((
                        local_value(&wiring, &jets, h, x)?,
                        sparse_log_derivatives(&wiring, params, x, &mut path)?,
                    ))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .concat();
    let (local_values, log_derivs): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();
    let (energy_mean, energy_stderr) = mean_stderr(local_values.iter().map(|v| v.re));
    Ok(VmcBatch {
        mode: params.mode(),
        num_params: params.len(),
        num_qubits: g.num_qubits(),
        samples,
        local_values,
        log_derivs,
        energy_mean,
        energy_stderr,
    })
}

/// [`build_batch_with`] using the parameters stored in `g`.
pub fn build_batch(
    g: &VddGraph,
    h: &PauliHamiltonian,
    mode: ParamMode,
    count: usize,
    seed: u64,
) -> Result<VmcBatch> {
    build_batch_with(g, &ParamVector::from_graph(g, mode), h, count, seed)
}

fn mean_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values
        .clone()
        .fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean of `Re Ã` and its standard error.
pub fn vmc_energy(batch: &VmcBatch) -> Result<(f64, f64)> {
    if batch.is_empty() {
        return Err(VddError::domain("empty batch"));
    }
    Ok((batch.energy_mean, batch.energy_stderr))
}

/// Stochastic gradient and the per-entry jackknife standard error.
///
/// With `S_OA = Σ O*Ã`, `S_O = Σ O*` and `S_A = Σ Ã`, the estimate is
/// `2 Re(S_OA/N − S_O S_A/N²)` and its leave-one-out values have the same
/// closed form with sample `i` removed from each sum.
pub fn vmc_gradient_with_errors(batch: &VmcBatch) -> Result<(GradientVector, Vec<f64>)> {
    let n = batch.len();
    if n < 2 {
        return Err(VddError::domain(
            "the VMC gradient needs at least two samples",
        ));
    }
    let p = batch.num_params;
    let nf = n as f64;
    let s_a: Complex64 = batch.local_values.iter().sum();
    let mean = s_a / nf;
    let mut entries = vec![0.0; p];
    let mut s_o = vec![ZERO; p];
    let mut s_oa = vec![ZERO; p];
    for (v, o) in batch.local_values.iter().zip(&batch.log_derivs) {
        for &(j, oj) in o {
            entries[j] += 2.0 * (oj.conj() * (v - mean)).re;
            s_o[j] += oj.conj();
            s_oa[j] += oj.conj() * v;
        }
    }
    entries.iter_mut().for_each(|e| *e /= nf);

    let m = nf - 1.0;
    let full: Vec<f64> = (0..p)
        .map(|j| 2.0 * (s_oa[j] / nf - s_o[j] * s_a / (nf * nf)).re)
        .collect();
    let mut dev_sum = vec![0.0; p];
    let mut dev_sq = vec![0.0; p];
    let mut row = vec![ZERO; p];
    for (v, o) in batch.local_values.iter().zip(&batch.log_derivs) {
        for &(j, oj) in o {
            row[j] = oj.conj();
        }
        let rest_a = s_a - v;
        for j in 0..p {
            let loo = 2.0 * ((s_oa[j] - row[j] * v) / m - (s_o[j] - row[j]) * rest_a / (m * m)).re;
            let d = loo - full[j];
            dev_sum[j] += d;
            dev_sq[j] += d * d;
        }
        for &(j, _) in o {
            row[j] = ZERO;
        }
    }
    let errors = (0..p)
        .map(|j| {
            let ss = (dev_sq[j] - dev_sum[j] * dev_sum[j] / nf).max(0.0);
            (m / nf * ss).sqrt()
        })
        .collect();
    Ok((GradientVector::new(batch.mode, entries), errors))
}

/// `2 Re mean(O_j* (Ã − mean Ã))`.
pub fn vmc_gradient(batch: &VmcBatch) -> Result<GradientVector> {
    vmc_gradient_with_errors(batch).map(|(g, _)| g)
}
