use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use vdd::optimize::LabeledDataset;
use vdd::{
    AnsatzKind, BitString, Boundary, GradientSource, LossKind, Model, ModelSpec, Optimizer,
    ParamMode, TrainConfig, VddGraph,
};

use crate::error::{CliError, Result};

/// Settings shared by every subcommand. Each may come from a flag or from
/// the `--config` file; flags win.
#[derive(Args, Serialize, Deserialize, Debug, Clone, Default, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// JSON file with any of the settings below (keys in snake_case)
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,

    /// Model: z1z2, tfim or heisenberg
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,

    /// Number of qubits
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,

    /// Transverse field (tfim, default 1)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,

    /// Isotropic exchange coupling (heisenberg, default 1)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jx: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jy: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jz: Option<f64>,

    /// open or periodic (default open)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,

    /// product, accordion or universal (default accordion)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ansatz: Option<String>,

    /// uniform, balanced or basis:<bits> (default uniform)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<String>,

    /// Random seed; generated and recorded when absent
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,

    /// trig or raw (default trig; raw for variance-scan)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub param_mode: Option<String>,

    /// adam or sgd (default adam)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<String>,

    /// Learning rate (default 0.01)
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,

    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,

    /// Training epochs (default 10000)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,

    /// exact or vmc (default exact)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gradient_source: Option<String>,

    /// Samples per VMC gradient (default 4096)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,

    /// energy_gap, energy, bce or kl (default energy_gap)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub loss: Option<String>,

    /// Ground energy used instead of the eigensolver
    #[arg(long, allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference_energy: Option<f64>,

    /// CSV with columns bitstring,label for the bce and kl losses
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dataset: Option<PathBuf>,

    /// Comma-separated qubit counts for variance-scan (default 2..12)
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,

    /// Random initializations per size (default 100)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub num_seeds: Option<usize>,

    /// Comma-separated parameter labels, e.g. r1,omega3,phi-1
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tracked_params: Option<Vec<String>>,

    /// Seed of the variance scan (defaults to --seed)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,

    /// Comma-separated field strengths for g-sweep (default 10,20,40)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_values: Option<Vec<f64>>,

    /// Number of samples (default 1000)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,

    /// VDD document to read
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vdd: Option<PathBuf>,

    /// Bit string, qubit 1 first
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bits: Option<String>,

    /// Directory for outputs (default out)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,

    /// Worker threads (default 1)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,

    /// CSV file to plot
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,

    /// Column for the horizontal axis
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<String>,

    /// Column for the vertical axis
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub y: Option<String>,

    /// Logarithmic vertical axis
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_y: Option<bool>,

    /// SVG file to write (default <output_dir>/<y>.svg)
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

fn required<T: Clone>(value: &Option<T>, key: &str) -> Result<T> {
    value
        .clone()
        .ok_or_else(|| CliError::config(key, format!("missing required setting `{key}`")))
}

fn parse_as<T>(text: &str) -> Result<T>
where
    T: FromStr<Err = vdd::VddError>,
{
    Ok(text.parse()?)
}

fn generated_seed() -> u64 {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    let seed = now.as_secs() ^ u64::from(now.subsec_nanos()).rotate_left(32);
    eprintln!("no seed given; using generated seed {seed}");
    seed
}

impl RunConfig {
    /// Overlays these flags on the `--config` file. Every key of the merged
    /// document is checked on its own so errors name the offending key.
    pub fn resolve(flags: RunConfig) -> Result<RunConfig> {
        let mut merged = match &flags.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::config("config", format!("{}: {e}", path.display())))?;
                match serde_json::from_str(&text) {
                    Ok(Value::Object(map)) => map,
                    Ok(_) => return Err(CliError::config("config", "expected a JSON object")),
                    Err(e) => return Err(CliError::config("config", e.to_string())),
                }
            }
            None => Map::new(),
        };
        if let Value::Object(overlay) =
            serde_json::to_value(&flags).map_err(|e| CliError::config("config", e.to_string()))?
        {
            merged.extend(overlay);
        }
        merged.retain(|_, v| !v.is_null());
        for (key, value) in &merged {
            let single = Value::Object(Map::from_iter([(key.clone(), value.clone())]));
            serde_json::from_value::<RunConfig>(single)
                .map_err(|e| CliError::config(key.as_str(), e.to_string()))?;
        }
        let mut cfg: RunConfig = serde_json::from_value(Value::Object(merged))
            .map_err(|e| CliError::config("config", e.to_string()))?;
        cfg.config = flags.config;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn seed(&mut self) -> u64 {
        *self.seed.get_or_insert_with(generated_seed)
    }

    pub fn output_dir(&mut self) -> PathBuf {
        self.output_dir
            .get_or_insert_with(|| PathBuf::from("out"))
            .clone()
    }

    pub fn threads(&mut self) -> Result<usize> {
        let t = *self.threads.get_or_insert(1);
        if t == 0 {
            return Err(CliError::config(
                "threads",
                "at least one thread is required",
            ));
        }
        Ok(t)
    }

    pub fn param_mode(&mut self, default: &str) -> Result<ParamMode> {
        parse_as(self.param_mode.get_or_insert_with(|| default.into()))
    }

    pub fn ansatz(&mut self) -> Result<AnsatzKind> {
        parse_as(self.ansatz.get_or_insert_with(|| "accordion".into()))
    }

    pub fn bits(&self) -> Result<BitString> {
        required(&self.bits, "bits")?
            .parse()
            .map_err(|e: vdd::VddError| CliError::config("bits", e.to_string()))
    }

    pub fn read_vdd(&self) -> Result<VddGraph> {
        let path = required(&self.vdd, "vdd")?;
        let text = read_input(&path, "vdd")?;
        Ok(VddGraph::from_json(&text)?)
    }

    /// The Hamiltonian family and couplings, on `n` qubits.
    pub fn model_spec_for(&mut self, n: usize) -> Result<ModelSpec> {
        let model: Model = parse_as(&required(&self.model, "model")?)?;
        let boundary: Boundary = parse_as(self.boundary.get_or_insert_with(|| "open".into()))?;
        let mut spec = match model {
            Model::Z1Z2 => ModelSpec::z1z2(n),
            Model::Tfim => ModelSpec::tfim(n, *self.g.get_or_insert(1.0)),
            Model::Heisenberg => {
                let mut spec = ModelSpec::heisenberg(n, *self.j.get_or_insert(1.0));
                spec.jx = self.jx.unwrap_or(spec.jx);
                spec.jy = self.jy.unwrap_or(spec.jy);
                spec.jz = self.jz.unwrap_or(spec.jz);
                spec
            }
        };
        spec.boundary = boundary;
        Ok(spec)
    }

    pub fn model_spec(&mut self) -> Result<ModelSpec> {
        let n = required(&self.n, "n")?;
        self.model_spec_for(n)
    }

    pub fn train_config(&mut self) -> Result<TrainConfig> {
        let mut cfg = TrainConfig::new(self.model_spec()?);
        cfg.ansatz = self.ansatz()?;
        cfg.param_mode = self.param_mode("trig")?;
        let lr = *self.lr.get_or_insert(0.01);
        cfg.optimizer = match self.optimizer.get_or_insert_with(|| "adam".into()).as_str() {
            "adam" => Optimizer::Adam {
                lr,
                beta1: *self.beta1.get_or_insert(0.9),
                beta2: *self.beta2.get_or_insert(0.999),
                eps: *self.eps.get_or_insert(1e-8),
            },
            "sgd" => Optimizer::Sgd { lr },
            other => {
                return Err(CliError::config(
                    "optimizer",
                    format!("unknown optimizer {other:?} (expected adam or sgd)"),
                ))
            }
        };
        cfg.epochs = *self.epochs.get_or_insert(10_000);
        cfg.seed = self.seed();
        cfg.gradient_source = match self
            .gradient_source
            .get_or_insert_with(|| "exact".into())
            .as_str()
        {
            "exact" => GradientSource::Exact,
            "vmc" => GradientSource::Vmc {
                batch_size: *self.batch_size.get_or_insert(4096),
            },
            other => {
                return Err(CliError::config(
                    "gradient_source",
                    format!("unknown gradient source {other:?} (expected exact or vmc)"),
                ))
            }
        };
        cfg.loss = parse_as::<LossKind>(self.loss.get_or_insert_with(|| "energy_gap".into()))?;
        cfg.reference_energy = self.reference_energy;
        if let Some(path) = &self.dataset {
            cfg.dataset = Some(read_dataset(path)?);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Reads an input file named by the setting `key`; a missing file is a
/// configuration error.
pub fn read_input(path: &Path, key: &str) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::config(key, format!("{}: {e}", path.display())))
}

/// Reads a `bitstring,label` CSV; the label column may be empty or absent.
pub fn read_dataset(path: &Path) -> Result<LabeledDataset> {
    let text = read_input(path, "dataset")?;
    let bad = |msg: String| CliError::config("dataset", format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let bits_col = col("bitstring").ok_or_else(|| bad("missing column `bitstring`".into()))?;
    let label_col = col("label");
    let mut items = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let bits: BitString = record
            .get(bits_col)
            .unwrap_or("")
            .parse()
            .map_err(|e: vdd::VddError| bad(format!("row {}: {e}", i + 1)))?;
        let label = match label_col.and_then(|c| record.get(c)).unwrap_or("") {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => return Err(bad(format!("row {}: label {other:?} is not 0 or 1", i + 1))),
        };
        items.push((bits, label));
    }
    LabeledDataset::new(items).map_err(|e| bad(e.to_string()))
}
