//! Reproduction harnesses: gradient-variance scans, training curves and the
//! transverse-field sweep, each with CSV writers.

use std::io::Write;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;

use crate::ansatz::{build_accordion, init_params, InitScheme};
use crate::eigen::{dense_ground_energy, ground_energy};
use crate::error::{Result, VddError};
use crate::exact::{exact_gradient, StateVector};
use crate::optimize::{train, Optimizer, TrainConfig, TrainTrace};
use crate::params::{label_index, ParamMode};
use crate::pauli::{expectation, ModelSpec, Pauli, PauliHamiltonian, PauliString};
use crate::rng::{derive_seed, rng_from_seed};

/// Rows with variance at or below this are left out of the fits.
pub const FIT_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScanConfig {
    /// Model family and couplings; `n` is replaced by each scanned size.
    pub model: ModelSpec,
    pub n_values: Vec<usize>,
    pub num_seeds: usize,
    pub tracked_params: Vec<String>,
    pub base_seed: u64,
    pub param_mode: ParamMode,
}

impl VarianceScanConfig {
    pub fn new(model: ModelSpec) -> Self {
        VarianceScanConfig {
            model,
            n_values: (2..=12).collect(),
            num_seeds: 100,
            tracked_params: ["r1", "r2", "r3", "omega3", "phi-1", "r-1"]
                .map(String::from)
                .to_vec(),
            base_seed: 0,
            param_mode: ParamMode::Raw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() {
            return Err(VddError::config(
                "n_values",
                "at least one size is required",
            ));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(VddError::config(
                "n_values",
                "sizes must be strictly ascending",
            ));
        }
        if self.n_values[0] == 0 || *self.n_values.last().unwrap() > 14 {
            return Err(VddError::config("n_values", "sizes must lie in 1..=14"));
        }
        if self.num_seeds < 2 {
            return Err(VddError::config(
                "num_seeds",
                "at least two seeds are required",
            ));
        }
        if self.tracked_params.is_empty() {
            return Err(VddError::config("tracked_params", "no parameters to track"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub model: String,
    pub coupling: f64,
    pub n: usize,
    pub param: String,
    pub variance: f64,
    pub num_seeds: usize,
}

/// Least-squares line through `(n, log₂ variance)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceFit {
    pub model: String,
    pub coupling: f64,
    pub param: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceScanResult {
    pub rows: Vec<VarianceRow>,
    pub fits: Vec<VarianceFit>,
    /// Skipped (size, label) combinations.
    pub notices: Vec<String>,
}

impl VarianceScanResult {
    pub fn fit(&self, param: &str) -> Option<&VarianceFit> {
        self.fits.iter().find(|f| f.param == param)
    }

    /// CSV with columns `model,g,n,param,variance,num_seeds`.
    pub fn write_rows_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,g,n,param,variance,num_seeds")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{:.17e},{}",
                r.model, r.coupling, r.n, r.param, r.variance, r.num_seeds
            )?;
        }
        Ok(())
    }

    /// CSV with columns `model,g,param,slope,intercept,r2`.
    pub fn write_fits_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "model,g,param,slope,intercept,r2")?;
        for f in &self.fits {
            writeln!(
                w,
                "{},{},{},{:.17e},{:.17e},{:.17e}",
                f.model, f.coupling, f.param, f.slope, f.intercept, f.r_squared
            )?;
        }
        Ok(())
    }
}

/// `(slope, intercept, r²)` of an ordinary least-squares line.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Some((slope, intercept, r_squared))
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

/// Across-seed variance of selected exact gradient entries of the
/// accordion ansatz, per system size, with log₂-linear fits.
pub fn variance_scan(cfg: &VarianceScanConfig) -> Result<VarianceScanResult> {
    cfg.validate()?;
    let model_name = cfg.model.model.to_string();
    let coupling = cfg.model.coupling();
    let mut rows = Vec::new();
    let mut notices = Vec::new();
    for &n in &cfg.n_values {
        let spec = ModelSpec { n, ..cfg.model };
        let h = spec.build()?;
        let template = build_accordion(n)?;
        let node_count = template.node_count();
        let mut tracked = Vec::new();
        for label in &cfg.tracked_params {
            match label_index(label, node_count) {
                Some(idx) => tracked.push((label.clone(), idx)),
                None => {
                    let msg = format!("n = {n}: parameter {label} absent, row skipped");
                    log::warn!("{msg}");
                    notices.push(msg);
                }
            }
        }
        if tracked.is_empty() {
            continue;
        }
        let samples: Vec<Vec<f64>> = (0..cfg.num_seeds)
            .into_par_iter()
            .map(|k| {
                let seed = derive_seed(cfg.base_seed, &[n as u64, k as u64]);
                let g = init_params(&template, &InitScheme::UniformRandom { seed })?;
                let grad = exact_gradient(&g, &h, cfg.param_mode)?;
                Ok(tracked.iter().map(|&(_, idx)| grad.entries[idx]).collect())
            })
            .collect::<Result<_>>()?;
        for (t, (label, _)) in tracked.iter().enumerate() {
            let column: Vec<f64> = samples.iter().map(|s| s[t]).collect();
            rows.push(VarianceRow {
                model: model_name.clone(),
                coupling,
                n,
                param: label.clone(),
                variance: population_variance(&column),
                num_seeds: cfg.num_seeds,
            });
        }
    }
    let mut fits = Vec::new();
    for label in &cfg.tracked_params {
        let (xs, ys): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter(|r| &r.param == label && r.variance > FIT_FLOOR)
            .map(|r| (r.n as f64, r.variance.log2()))
            .unzip();
        if let Some((slope, intercept, r_squared)) = linear_fit(&xs, &ys) {
            fits.push(VarianceFit {
                model: model_name.clone(),
                coupling,
                param: label.clone(),
                slope,
                intercept,
                r_squared,
            });
        }
    }
    Ok(VarianceScanResult {
        rows,
        fits,
        notices,
    })
}

/// The five training-curve panels: Z₁Z₂, Heisenberg J=1 and the TFIM at
/// g ∈ {0, 1, 10}.
pub fn figure_panels(n: usize) -> Vec<ModelSpec> {
    vec![
        ModelSpec::z1z2(n),
        ModelSpec::heisenberg(n, 1.0),
        ModelSpec::tfim(n, 0.0),
        ModelSpec::tfim(n, 1.0),
        ModelSpec::tfim(n, 10.0),
    ]
}

/// Energy-gap training of each model on the accordion ansatz with Adam.
pub fn training_curves(
    models: &[ModelSpec],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<Vec<(ModelSpec, TrainTrace)>> {
    if let Some(m) = models
        .iter()
        .find(|m| m.n > crate::eigen::MAX_ORACLE_QUBITS)
    {
        return Err(VddError::config(
            "n",
            format!(
                "training curves need the ground-energy oracle; n = {} is too large",
                m.n
            ),
        ));
    }
    models
        .par_iter()
        .map(|&model| {
            let mut cfg = TrainConfig::new(model);
            cfg.epochs = epochs;
            cfg.seed = seed;
            cfg.optimizer = Optimizer::adam(lr);
            train(&cfg).map(|trace| (model, trace))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub g: f64,
    pub final_energy: f64,
    pub e0: f64,
    pub relative_error: f64,
    /// Lowest energy found over dimer-product states.
    pub dimer_energy: f64,
    pub dimer_relative_error: f64,
}

/// CSV with columns `g,final_energy,e0,relative_error`, followed by the
/// dimer-product benchmark columns.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "g,final_energy,e0,relative_error,dimer_energy,dimer_relative_error"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.g, r.final_energy, r.e0, r.relative_error, r.dimer_energy, r.dimer_relative_error
        )?;
    }
    Ok(())
}

/// Trains the TFIM at each field strength and records the final relative
/// error next to the dimer-product benchmark.
pub fn g_sweep(g_values: &[f64], n: usize, epochs: usize, seed: u64) -> Result<Vec<SweepRow>> {
    if g_values.is_empty() {
        return Err(VddError::domain("empty list of field strengths"));
    }
    if n > crate::eigen::MAX_ORACLE_QUBITS {
        return Err(VddError::config(
            "n",
            "the sweep needs the ground-energy oracle",
        ));
    }
    g_values
        .par_iter()
        .map(|&g| {
            let spec = ModelSpec::tfim(n, g);
            let mut cfg = TrainConfig::new(spec);
            cfg.epochs = epochs;
            cfg.seed = seed;
            let trace = train(&cfg)?;
            let e0 = trace
                .reference_energy
                .expect("energy-gap training resolves E0");
            let final_energy = trace.last().energy.expect("energy loss");
            let dimer_energy = dimer_product_energy(&spec, seed)?;
            let rel = |e: f64| ((e - e0) / e0).abs();
            Ok(SweepRow {
                g,
                final_energy,
                e0,
                relative_error: rel(final_energy),
                dimer_energy,
                dimer_relative_error: rel(dimer_energy),
            })
        })
        .collect()
}

const DIMER_RESTARTS: usize = 4;
const DIMER_MAX_SWEEPS: usize = 10_000;
const DIMER_TOL: f64 = 1e-14;

fn dimer_blocks(n: usize) -> Vec<(usize, usize)> {
    (0..n).step_by(2).map(|s| (s, (s + 2).min(n))).collect()
}

fn block_expectation(ops: &[Pauli], state: &StateVector) -> Result<f64> {
    if ops.iter().all(|&p| p == Pauli::I) {
        return Ok(1.0);
    }
    let h = PauliHamiltonian::new(ops.len(), vec![PauliString::new(1.0, ops.to_vec())?])?;
    expectation(&h, state)
}

fn product_energy(
    h: &PauliHamiltonian,
    blocks: &[(usize, usize)],
    states: &[StateVector],
) -> Result<f64> {
    let mut e = 0.0;
    for t in h.terms() {
        let mut term = t.coeff();
        for (&(a, b), s) in blocks.iter().zip(states) {
            term *= block_expectation(&t.ops()[a..b], s)?;
        }
        e += term;
    }
    Ok(e)
}

fn random_block_state(width: usize, rng: &mut impl Rng) -> Result<StateVector> {
    let mut amps: Vec<Complex64> = (0..1usize << width)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|z| *z /= norm);
    StateVector::new(width, amps)
}

/// Lowest energy over products of states on the pairs (1,2), (3,4), …
/// (the states the accordion ansatz represents), by block-coordinate
/// descent from a few seeded starts. Each block update is the ground state
/// of the block's mean-field Hamiltonian, so the energy never increases.
pub fn dimer_product_energy(spec: &ModelSpec, seed: u64) -> Result<f64> {
    let h = spec.build()?;
    let blocks = dimer_blocks(spec.n);
    let mut best = f64::INFINITY;
    for restart in 0..DIMER_RESTARTS {
        let mut rng = rng_from_seed(derive_seed(seed, &[restart as u64]));
        let mut states = blocks
            .iter()
            .map(|&(a, b)| random_block_state(b - a, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut energy = product_energy(&h, &blocks, &states)?;
        for _ in 0..DIMER_MAX_SWEEPS {
            for k in 0..blocks.len() {
                let (a, b) = blocks[k];
                let mut terms = Vec::new();
                for t in h.terms() {
                    let local = &t.ops()[a..b];
                    if local.iter().all(|&p| p == Pauli::I) {
                        continue;
                    }
                    let mut coeff = t.coeff();
                    for (j, (&(c, d), s)) in blocks.iter().zip(&states).enumerate() {
                        if j != k {
                            coeff *= block_expectation(&t.ops()[c..d], s)?;
                        }
                    }
                    if coeff != 0.0 {
                        terms.push(PauliString::new(coeff, local.to_vec())?);
                    }
                }
                if !terms.is_empty() {
                    states[k] = dense_ground_energy(&PauliHamiltonian::new(b - a, terms)?)?.1;
                }
            }
            let next = product_energy(&h, &blocks, &states)?;
            let done = (energy - next).abs() <= DIMER_TOL * next.abs().max(1.0);
            energy = next;
            if done {
                break;
            }
        }
        best = best.min(energy);
    }
    Ok(best)
}

/// Ground energy of the model, for callers that want it next to a sweep.
pub fn reference_energy(spec: &ModelSpec) -> Result<f64> {
    ground_energy(&spec.build()?).map(|(e, _)| e)
}
