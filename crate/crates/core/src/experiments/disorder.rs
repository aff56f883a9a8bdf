//! Disorder robustness of corner fidelity.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{average_fidelity, evolve, time_grid};
use crate::error::{Error, Result};
use crate::models::NetworkSpec;

/// Node frequency 5.6 GHz over hopping 2π × 4.29 MHz.
pub const OMEGA_OVER_J: f64 = 5.6e9 / (2.0 * PI * 4.29e6);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DisorderKind {
    /// Node frequency offsets, one per node.
    Frequency,
    /// Additive hopping amplitude offsets, one per link.
    HoppingStrength,
    /// Additive hopping phase offsets, one per link.
    HoppingPhase,
}

/// Disorder amplitudes are relative: a fraction of the node frequency, of the
/// hopping strength, or of the π/2 link phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderConfig {
    pub kind: DisorderKind,
    pub samples: usize,
    pub seed: u64,
    /// Node frequency in units of the hopping strength.
    #[serde(default = "default_frequency_reference")]
    pub frequency_reference: f64,
    /// Length of the evolution window.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_frequency_reference() -> f64 {
    OMEGA_OVER_J
}

fn default_window() -> f64 {
    PI
}

fn default_grid() -> usize {
    401
}

impl DisorderConfig {
    pub fn new(kind: DisorderKind, samples: usize, seed: u64) -> Self {
        DisorderConfig {
            kind,
            samples,
            seed,
            frequency_reference: OMEGA_OVER_J,
            window: PI,
            grid: default_grid(),
        }
    }

    /// Absolute half-width, in hopping units or radians, for relative amplitude `r`.
    pub fn absolute(&self, r: f64) -> f64 {
        match self.kind {
            DisorderKind::Frequency => r * self.frequency_reference,
            DisorderKind::HoppingStrength => r,
            DisorderKind::HoppingPhase => r * PI / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisorderPoint {
    pub amplitude: f64,
    pub mean: f64,
    pub std_error: f64,
}

/// Independent random stream for one sample; identical across amplitudes.
fn sample_rng(seed: u64, sample: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample as u64);
    rng
}

/// Draws one disordered copy of `base` with half-width `width`.
pub fn perturb(base: &NetworkSpec, kind: DisorderKind, width: f64, rng: &mut impl Rng) -> Result<NetworkSpec> {
    match kind {
        DisorderKind::Frequency => {
            let mut spec = base.clone();
            for j in 0..base.n_sites() {
                spec.add_onsite(j, width * rng.random_range(-1.0..=1.0), 0.0)?;
            }
            Ok(spec)
        }
        DisorderKind::HoppingStrength => {
            base.map_hoppings(|h| (h.amplitude + width * rng.random_range(-1.0..=1.0), h.phase))
        }
        DisorderKind::HoppingPhase => {
            base.map_hoppings(|h| (h.amplitude, h.phase + width * rng.random_range(-1.0..=1.0)))
        }
    }
}

/// Corner fidelity of one spec, starting on node 1.
pub fn corner_fidelity(spec: &NetworkSpec, window: f64, grid: usize) -> Result<f64> {
    let (basis, h) = spec.hamiltonian(1)?;
    let psi = basis.single_excitation(0)?;
    let traj = evolve(&h, &basis, &psi, &time_grid(window, grid))?;
    average_fidelity(&traj, &spec.ring_nodes())
}

/// Mean corner fidelity and its standard error at each relative amplitude.
pub fn disorder_sweep(base: &NetworkSpec, cfg: &DisorderConfig, amplitudes: &[f64]) -> Result<Vec<DisorderPoint>> {
    if cfg.samples == 0 {
        return Err(Error::InvalidArgument("need at least one sample".into()));
    }
    if amplitudes.iter().any(|a| !(*a >= 0.0)) {
        return Err(Error::InvalidArgument("amplitudes must be >= 0".into()));
    }
    amplitudes
        .iter()
        .map(|&r| {
            let width = cfg.absolute(r);
            let values: Vec<f64> = (0..cfg.samples)
                .into_par_iter()
                .map(|i| {
                    let spec = perturb(base, cfg.kind, width, &mut sample_rng(cfg.seed, i))?;
                    corner_fidelity(&spec, cfg.window, cfg.grid)
                })
                .collect::<Result<_>>()?;
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let var = if values.len() > 1 {
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            Ok(DisorderPoint { amplitude: r, mean, std_error: (var / n).sqrt() })
        })
        .collect()
}
