//! Gradient-descent training of VDD parameters.
//!
//! An epoch is one full gradient step. Gradients come either from the exact
//! engine or from a fresh VMC batch per epoch; the losses are the energy
//! (optionally shifted by the ground energy) and the dataset losses BCE and
//! KL, whose probability derivatives are taken analytically along each
//! sample's path.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::ansatz::{init_params, AnsatzKind, InitScheme};
use crate::eigen::ground_energy;
use crate::error::{Result, VddError};
use crate::exact::{GradientVector, Wiring};
use crate::graph::{BitString, VddGraph};
use crate::params::{ParamMode, ParamVector};
use crate::pauli::{ModelSpec, PauliHamiltonian};
use crate::rng::derive_seed;
use crate::vmc::{build_batch_with, vmc_gradient};

/// Probability clamp for the dataset losses.
pub const PROB_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Optimizer {
    Adam {
        lr: f64,
        beta1: f64,
        beta2: f64,
        eps: f64,
    },
    Sgd {
        lr: f64,
    },
}

impl Optimizer {
    pub fn adam(lr: f64) -> Self {
        Optimizer::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }

    pub fn lr(&self) -> f64 {
        match *self {
            Optimizer::Adam { lr, .. } | Optimizer::Sgd { lr } => lr,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Optimizer::Adam { .. } => "adam",
            Optimizer::Sgd { .. } => "sgd",
        }
    }
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::adam(0.01)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientSource {
    #[default]
    Exact,
    Vmc {
        batch_size: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossKind {
    #[default]
    EnergyGap,
    Energy,
    Bce,
    Kl,
}

impl FromStr for LossKind {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "energy_gap" => Ok(LossKind::EnergyGap),
            "energy" => Ok(LossKind::Energy),
            "bce" => Ok(LossKind::Bce),
            "kl" => Ok(LossKind::Kl),
            other => Err(VddError::config(
                "loss",
                format!("unknown loss {other:?} (expected energy_gap, energy, bce or kl)"),
            )),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LossKind::EnergyGap => "energy_gap",
            LossKind::Energy => "energy",
            LossKind::Bce => "bce",
            LossKind::Kl => "kl",
        })
    }
}

/// Bit strings with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<(BitString, Option<u8>)>,
}

impl LabeledDataset {
    pub fn new(items: Vec<(BitString, Option<u8>)>) -> Result<Self> {
        if let Some((first, _)) = items.first() {
            let n = first.len();
            if items.iter().any(|(b, _)| b.len() != n) {
                return Err(VddError::domain("dataset bit strings differ in length"));
            }
        }
        if items.iter().any(|(_, l)| matches!(l, Some(v) if *v > 1)) {
            return Err(VddError::domain("labels must be 0 or 1"));
        }
        Ok(LabeledDataset { items })
    }

    /// Unlabeled dataset.
    pub fn unlabeled(bits: Vec<BitString>) -> Result<Self> {
        Self::new(bits.into_iter().map(|b| (b, None)).collect())
    }

    pub fn items(&self) -> &[(BitString, Option<u8>)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn num_qubits(&self) -> Option<usize> {
        self.items.first().map(|(b, _)| b.len())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub ansatz: AnsatzKind,
    pub model: ModelSpec,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub seed: u64,
    pub gradient_source: GradientSource,
    pub param_mode: ParamMode,
    pub loss: LossKind,
    /// Ground energy to use instead of the eigensolver.
    pub reference_energy: Option<f64>,
    /// Training data for the BCE and KL losses.
    pub dataset: Option<LabeledDataset>,
}

impl TrainConfig {
    /// Accordion ansatz, Adam at lr 0.01, 10000 epochs, exact gradients in
    /// trig mode, energy-gap loss.
    pub fn new(model: ModelSpec) -> Self {
        TrainConfig {
            ansatz: AnsatzKind::Accordion,
            model,
            optimizer: Optimizer::default(),
            epochs: 10_000,
            seed: 0,
            gradient_source: GradientSource::Exact,
            param_mode: ParamMode::Trig,
            loss: LossKind::EnergyGap,
            reference_energy: None,
            dataset: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let lr = self.optimizer.lr();
        if !(lr.is_finite() && lr > 0.0) {
            return Err(VddError::config(
                "lr",
                format!("learning rate must be positive, got {lr}"),
            ));
        }
        if let Optimizer::Adam {
            beta1, beta2, eps, ..
        } = self.optimizer
        {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) {
                return Err(VddError::config(
                    "beta1",
                    "Adam decay rates must lie in [0, 1)",
                ));
            }
            if eps.is_nan() || eps <= 0.0 {
                return Err(VddError::config("eps", "Adam eps must be positive"));
            }
        }
        if self.epochs == 0 {
            return Err(VddError::config("epochs", "at least one epoch is required"));
        }
        if let GradientSource::Vmc { batch_size } = self.gradient_source {
            if batch_size < 2 {
                return Err(VddError::config(
                    "batch_size",
                    "VMC batches need at least 2 samples",
                ));
            }
            if matches!(self.loss, LossKind::Bce | LossKind::Kl) {
                return Err(VddError::config(
                    "gradient_source",
                    "dataset losses are evaluated exactly; use the exact gradient source",
                ));
            }
        }
        if matches!(self.loss, LossKind::Bce | LossKind::Kl) {
            let data = self.dataset.as_ref().ok_or_else(|| {
                VddError::config("dataset", format!("the {} loss needs a dataset", self.loss))
            })?;
            if data.is_empty() {
                return Err(VddError::config("dataset", "dataset is empty"));
            }
            if data.num_qubits() != Some(self.model.n) {
                return Err(VddError::config(
                    "dataset",
                    format!("dataset bit strings must have length {}", self.model.n),
                ));
            }
            if self.loss == LossKind::Bce && data.items().iter().any(|(_, l)| l.is_none()) {
                return Err(VddError::config(
                    "dataset",
                    "the bce loss needs a label on every item",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    /// `⟨H⟩` (a VMC estimate under the VMC source); absent for dataset losses.
    pub energy: Option<f64>,
    pub relative_error: Option<f64>,
    pub grad_norm: f64,
}

/// One record per epoch, taken before that epoch's update, plus the graph
/// after the last update.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<EpochRecord>,
    pub reference_energy: Option<f64>,
    pub final_graph: VddGraph,
}

fn opt_field(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.17e}")).unwrap_or_default()
}

impl TrainTrace {
    /// CSV with columns `epoch,loss,energy,relative_error,grad_norm`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "epoch,loss,energy,relative_error,grad_norm")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:.17e},{},{},{:.17e}",
                r.epoch,
                r.loss,
                opt_field(r.energy),
                opt_field(r.relative_error),
                r.grad_norm
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> &EpochRecord {
        self.records.last().expect("a trace has at least one epoch")
    }
}

/// Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }
}

fn check_step(params: &ParamVector, grads: &[f64], epoch: usize) -> Result<()> {
    if grads.len() != params.len() {
        return Err(VddError::domain(format!(
            "gradient has {} entries, parameters have {}",
            grads.len(),
            params.len()
        )));
    }
    if let Some(j) = grads.iter().position(|g| !g.is_finite()) {
        return Err(VddError::Training {
            epoch,
            label: params.label(j),
            message: format!("non-finite gradient {}", grads[j]),
        });
    }
    Ok(())
}

/// Bias-corrected Adam update; raw `r` entries are projected afterwards.
#[allow(clippy::too_many_arguments)]
pub fn adam_step(
    params: &mut ParamVector,
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    epoch: usize,
) -> Result<()> {
    check_step(params, grads, epoch)?;
    if state.m.len() != grads.len() {
        return Err(VddError::domain(
            "Adam state does not match the parameter count",
        ));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - beta1.powi(t);
    let c2 = 1.0 - beta2.powi(t);
    for (j, (x, &g)) in params.values_mut().iter_mut().zip(grads).enumerate() {
        let m = &mut state.m[j];
        let v = &mut state.v[j];
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *x -= lr * m_hat / (v_hat.sqrt() + eps);
    }
    params.project();
    Ok(())
}

/// `θ ← θ − η ∇`; raw `r` entries are projected afterwards.
pub fn sgd_step(params: &mut ParamVector, grads: &[f64], lr: f64, epoch: usize) -> Result<()> {
    check_step(params, grads, epoch)?;
    for (x, &g) in params.values_mut().iter_mut().zip(grads) {
        *x -= lr * g;
    }
    params.project();
    Ok(())
}

fn dataset_loss(
    wiring: &Wiring,
    params: &ParamVector,
    data: &LabeledDataset,
    kind: LossKind,
) -> Result<(f64, Vec<f64>)> {
    if data.is_empty() {
        return Err(VddError::domain("dataset is empty"));
    }
    if data.num_qubits() != Some(wiring.n) {
        return Err(VddError::domain(
            "dataset bit strings do not match the graph",
        ));
    }
    let (jets, _) = params.jets();
    let nf = data.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; params.len()];
    for (b, label) in data.items() {
        let (psi, derivs) = wiring.amplitude_derivatives(&jets, b.to_index());
        let p_raw = psi.norm_sqr();
        let p = p_raw.clamp(PROB_EPS, 1.0 - PROB_EPS);
        let clamped = p != p_raw;
        let dl_dp = match kind {
            LossKind::Bce => {
                let l = label.ok_or_else(|| VddError::domain("the bce loss needs labels"))?;
                let l = f64::from(l);
                loss -= (l * p.ln() + (1.0 - l) * (1.0 - p).ln()) / nf;
                -(l / p - (1.0 - l) / (1.0 - p)) / nf
            }
            LossKind::Kl => {
                loss -= p.ln() / nf;
                -1.0 / (p * nf)
            }
            _ => unreachable!("energy losses are not dataset losses"),
        };
        if clamped {
            continue;
        }
        for (j, d) in derivs {
            grad[j] += dl_dp * 2.0 * (psi.conj() * d).re;
        }
    }
    Ok((loss, grad))
}

fn dataset_loss_for(
    g: &VddGraph,
    data: &LabeledDataset,
    mode: ParamMode,
    kind: LossKind,
) -> Result<(f64, GradientVector)> {
    let wiring = Wiring::new(g)?;
    let params = ParamVector::from_graph(g, mode);
    let (loss, grad) = dataset_loss(&wiring, &params, data, kind)?;
    Ok((loss, GradientVector::new(mode, grad)))
}

/// `−(1/N) Σ [ℓ log p + (1−ℓ) log(1−p)]` with `p = |ψ(b)|²` clamped to
/// `[ε, 1−ε]`, and its gradient.
pub fn bce_loss(
    g: &VddGraph,
    data: &LabeledDataset,
    mode: ParamMode,
) -> Result<(f64, GradientVector)> {
    dataset_loss_for(g, data, mode, LossKind::Bce)
}

/// `−(1/N) Σ log p(b_i)` with `p` clamped at `ε`, and its gradient.
pub fn kl_loss(
    g: &VddGraph,
    data: &LabeledDataset,
    mode: ParamMode,
) -> Result<(f64, GradientVector)> {
    dataset_loss_for(g, data, mode, LossKind::Kl)
}

fn relative_error(energy: f64, e0: Option<f64>) -> Option<f64> {
    e0.filter(|&e| e != 0.0).map(|e| ((energy - e) / e).abs())
}

/// Ground energy used by the trace: the supplied reference, or the
/// eigensolver when the loss needs one.
fn resolve_reference(config: &TrainConfig, h: &PauliHamiltonian) -> Result<Option<f64>> {
    if let Some(e0) = config.reference_energy {
        return Ok(Some(e0));
    }
    if config.loss != LossKind::EnergyGap {
        return Ok(None);
    }
    match ground_energy(h) {
        Ok((e0, _)) => Ok(Some(e0)),
        Err(VddError::Capacity(msg)) => Err(VddError::config("reference_energy", msg)),
        Err(e) => Err(e),
    }
}

/// Runs the configured training loop from a seeded uniform-random start.
pub fn train(config: &TrainConfig) -> Result<TrainTrace> {
    config.validate()?;
    let graph = init_params(
        &config.ansatz.build(config.model.n)?,
        &InitScheme::UniformRandom { seed: config.seed },
    )?;
    train_from(config, graph)
}

/// Like [`train`] but starting from the parameters of `graph`.
pub fn train_from(config: &TrainConfig, mut graph: VddGraph) -> Result<TrainTrace> {
    config.validate()?;
    if graph.num_qubits() != config.model.n {
        return Err(VddError::config(
            "n",
            "initial graph size does not match the model",
        ));
    }
    let h = config.model.build()?;
    let e0 = resolve_reference(config, &h)?;
    let wiring = Wiring::new(&graph)?;
    wiring.check_cap()?;
    let mut params = ParamVector::from_graph(&graph, config.param_mode);
    let mut adam = AdamState::new(params.len());
    let mut records = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        let (loss, energy, grad) = match config.loss {
            LossKind::Bce | LossKind::Kl => {
                let data = config.dataset.as_ref().expect("validated");
                let (loss, grad) = dataset_loss(&wiring, &params, data, config.loss)?;
                (loss, None, grad)
            }
            LossKind::EnergyGap | LossKind::Energy => {
                let (energy, grad) = match config.gradient_source {
                    GradientSource::Exact => {
                        let (jets, _) = params.jets();
                        wiring.energy_and_gradient(&jets, &h)
                    }
                    GradientSource::Vmc { batch_size } => {
                        let seed = derive_seed(config.seed, &[epoch as u64]);
                        let batch = build_batch_with(&graph, &params, &h, batch_size, seed)?;
                        (batch.energy_mean, vmc_gradient(&batch)?.entries)
                    }
                };
                let loss = match config.loss {
                    LossKind::EnergyGap => energy - e0.expect("resolved above"),
                    _ => energy,
                };
                (loss, Some(energy), grad)
            }
        };
        if !loss.is_finite() {
            return Err(VddError::Training {
                epoch,
                label: "loss".into(),
                message: format!("non-finite loss {loss}"),
            });
        }
        let grad_norm = grad.iter().map(|x| x * x).sum::<f64>().sqrt();
        records.push(EpochRecord {
            epoch,
            loss,
            energy,
            relative_error: energy.and_then(|e| relative_error(e, e0)),
            grad_norm,
        });
        match config.optimizer {
            Optimizer::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => adam_step(&mut params, &grad, &mut adam, lr, beta1, beta2, eps, epoch)?,
            Optimizer::Sgd { lr } => sgd_step(&mut params, &grad, lr, epoch)?,
        }
    }
    params.apply_to(&mut graph)?;
    Ok(TrainTrace {
        records,
        reference_energy: e0,
        final_graph: graph,
    })
}
