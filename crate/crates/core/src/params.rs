//! Flat trainable-parameter vectors and their two coordinate systems.
//!
//! In [`ParamMode::Raw`] each node contributes `(r, ω, φ)` directly. In
//! [`ParamMode::Trig`] the amplitude split is `u` with left magnitude `cos u`
//! and right magnitude `sin u`; `u` is unconstrained and the derivative of the
//! right edge stays finite at the poles. Both map to the same graph: a
//! negative `cos u` (or `sin u`) is folded into `ω` (or `φ`) as a phase of π.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Result, VddError};
use crate::graph::{ParamTriple, VddGraph};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Distance kept from the ends of `[0, 1]` when projecting raw `r` values.
pub const RAW_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum ParamMode {
    Raw,
    #[default]
    Trig,
}

impl FromStr for ParamMode {
    type Err = VddError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ParamMode::Raw),
            "trig" => Ok(ParamMode::Trig),
            other => Err(VddError::config(
                "param_mode",
                format!("unknown parameter mode {other:?} (expected raw or trig)"),
            )),
        }
    }
}

impl fmt::Display for ParamMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamMode::Raw => "raw",
            ParamMode::Trig => "trig",
        })
    }
}

/// Edge amplitudes of one node together with their derivatives with respect
/// to the node's three parameters: `d[k][bit]` is `∂ amp[bit] / ∂θ_k`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeJet {
    pub amp: [Complex64; 2],
    pub d: [[Complex64; 2]; 3],
}

/// Label of parameter `index` (0-based, three per node).
pub fn param_label(mode: ParamMode, index: usize) -> String {
    let id = index / 3 + 1;
    match (index % 3, mode) {
        (0, ParamMode::Raw) => format!("r{id}"),
        (0, ParamMode::Trig) => format!("u{id}"),
        (1, _) => format!("omega{id}"),
        _ => format!("phi{id}"),
    }
}

/// Resolves a label such as `r3`, `omega1` or `phi-1` (negative ids count
/// from the last node) to a parameter index. `r` and `u` address the same
/// slot.
pub fn label_index(label: &str, node_count: usize) -> Option<usize> {
    let (slot, rest) = if let Some(rest) = label.strip_prefix("omega") {
        (1, rest)
    } else if let Some(rest) = label.strip_prefix("phi") {
        (2, rest)
    } else {
        (
            0,
            label
                .strip_prefix('r')
                .or_else(|| label.strip_prefix('u'))?,
        )
    };
    let k: i64 = rest.parse().ok()?;
    let id = if k > 0 {
        k as usize
    } else if k < 0 && (k.unsigned_abs() as usize) <= node_count {
        node_count + 1 - k.unsigned_abs() as usize
    } else {
        return None;
    };
    (id <= node_count).then(|| 3 * (id - 1) + slot)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector {
    mode: ParamMode,
    values: Vec<f64>,
}

impl ParamVector {
    /// Reads the parameters of `g`; in trig mode `u = arccos r ∈ [0, π/2]`.
    pub fn from_graph(g: &VddGraph, mode: ParamMode) -> Self {
        let mut values = Vec::with_capacity(g.param_count());
        for p in g.all_params() {
            let first = match mode {
                ParamMode::Raw => p.r,
                ParamMode::Trig => p.r.clamp(0.0, 1.0).acos(),
            };
            values.extend([first, p.omega, p.phi]);
        }
        ParamVector { mode, values }
    }

    pub fn new(mode: ParamMode, values: Vec<f64>) -> Result<Self> {
        if !values.len().is_multiple_of(3) {
            return Err(VddError::domain(
                "parameter vector length must be a multiple of 3",
            ));
        }
        Ok(ParamVector { mode, values })
    }

    pub fn mode(&self) -> ParamMode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn label(&self, index: usize) -> String {
        param_label(self.mode, index)
    }

    /// Clamps raw `r` entries into `[RAW_MARGIN, 1 − RAW_MARGIN]`; no-op in
    /// trig mode.
    pub fn project(&mut self) {
        if self.mode == ParamMode::Raw {
            for r in self.values.iter_mut().step_by(3) {
                *r = r.clamp(RAW_MARGIN, 1.0 - RAW_MARGIN);
            }
        }
    }

    /// Canonical `(r, ω, φ)` triples describing the same edge amplitudes.
    pub fn triples(&self) -> Vec<ParamTriple> {
        self.values
            .chunks_exact(3)
            .map(|c| match self.mode {
                ParamMode::Raw => ParamTriple {
                    r: c[0].clamp(0.0, 1.0),
                    omega: c[1],
                    phi: c[2],
                },
                ParamMode::Trig => {
                    let (s, co) = c[0].sin_cos();
                    ParamTriple {
                        r: co.abs().min(1.0),
                        omega: if co < 0.0 { c[1] + PI } else { c[1] },
                        phi: if s < 0.0 { c[2] + PI } else { c[2] },
                    }
                }
            })
            .collect()
    }

    /// Writes the canonical triples into `g`.
    pub fn apply_to(&self, g: &mut VddGraph) -> Result<()> {
        g.set_all_params(&self.triples())
    }

    /// Builds jets; also returns the indices of raw `r` entries sitting on a
    /// derivative singularity (`r = 1`), whose derivative is evaluated at
    /// `1 − RAW_MARGIN` instead.
    pub(crate) fn jets(&self) -> (Vec<EdgeJet>, Vec<usize>) {
        let mut singular = Vec::new();
        let jets = self
            .values
            .chunks_exact(3)
            .enumerate()
            .map(|(k, c)| {
                let (omega, phi) = (c[1], c[2]);
                let eo = Complex64::from_polar(1.0, omega);
                let ep = Complex64::from_polar(1.0, phi);
                let (left_mag, right_mag, d_left, d_right) = match self.mode {
                    ParamMode::Raw => {
                        let r = c[0].clamp(0.0, 1.0);
                        let right = (1.0 - r * r).max(0.0).sqrt();
                        let rc = if r >= 1.0 {
                            singular.push(3 * k);
                            1.0 - RAW_MARGIN
                        } else {
                            r
                        };
                        let dright = -rc / (1.0 - rc * rc).sqrt();
                        (r, right, 1.0, dright)
                    }
                    ParamMode::Trig => {
                        let (s, co) = c[0].sin_cos();
                        (co, s, -s, co)
                    }
                };
                let left = eo * left_mag;
                let right = ep * right_mag;
                EdgeJet {
                    amp: [left, right],
                    d: [
                        [eo * d_left, ep * d_right],
                        [I * left, ZERO],
                        [ZERO, I * right],
                    ],
                }
            })
            .collect();
        (jets, singular)
    }
}
