//! Ladder transfer fidelity and coupling-profile optimisation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{first_revival, Propagator, Revival};
use crate::error::{Error, Result};
use crate::models::{ladder, ladder_corners};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderPoint {
    pub copies: usize,
    pub profile: Vec<f64>,
    pub period: f64,
    pub fidelity: f64,
}

/// Search horizon long enough to contain the first revival.
fn horizon(copies: usize) -> f64 {
    3.0 * (2.5 + 0.7 * copies as f64)
}

/// Revival of the excitation started on corner 1 of the ladder with `profile`.
pub fn ladder_revival(copies: usize, profile: &[f64]) -> Result<Revival> {
    let spec = ladder(copies, profile)?;
    let (basis, h) = spec.hamiltonian(1)?;
    let prop = Propagator::new(&h)?;
    let psi = basis.single_excitation(0)?;
    let t = horizon(copies);
    let last = ladder_corners(copies)[3];
    first_revival(&prop, &basis, &psi, last, t, (t * 300.0) as usize)
}

/// Number of free couplings beyond the fixed corner value.
pub fn free_parameters(copies: usize) -> usize {
    copies.div_ceil(2) - 1
}

/// How each ladder in a curve is coupled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileChoice {
    Uniform(f64),
    Optimized { budget: usize, seed: u64 },
}

/// Fidelity against copy count.
pub fn ladder_fidelity_curve(copies: &[usize], choice: &ProfileChoice) -> Result<Vec<LadderPoint>> {
    copies
        .par_iter()
        .map(|&n| match choice {
            ProfileChoice::Uniform(beta) => {
                let r = ladder_revival(n, &[*beta])?;
                Ok(LadderPoint { copies: n, profile: vec![*beta], period: r.period, fidelity: r.fidelity })
            }
            ProfileChoice::Optimized { budget, seed } => {
                let o = optimize_ladder(n, (*budget).max(50 * free_parameters(n)), *seed)?;
                let r = ladder_revival(n, &o.profile)?;
                Ok(LadderPoint { copies: n, profile: o.profile, period: r.period, fidelity: r.fidelity })
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub profile: Vec<f64>,
    pub fidelity: f64,
    pub iterations: usize,
    pub monotone: bool,
    pub budget_exhausted: bool,
    /// One line per improvement: evaluation count, fidelity, profile.
    pub trace: Vec<String>,
}

/// Corner coupling shared by all optimised profiles.
pub const CORNER_BETA: f64 = 2.0;

/// Maps log-increments to a strictly increasing profile starting at the corner value.
pub fn profile_from_increments(x: &[f64]) -> Vec<f64> {
    let mut p = vec![CORNER_BETA];
    for v in x {
        let last = *p.last().unwrap();
        p.push(last + v.exp());
    }
    p
}

pub fn is_monotone(profile: &[f64]) -> bool {
    profile.first() == Some(&CORNER_BETA) && profile.windows(2).all(|w| w[1] > w[0])
}

const RESTARTS: usize = 5;

/// Maximises the ladder fidelity over increasing profiles.
///
/// Coordinate descent with halving steps on the log-increments, from one fixed
/// start and four random ones, sharing `budget` fidelity evaluations.
pub fn optimize_ladder(copies: usize, budget: usize, seed: u64) -> Result<OptimizationResult> {
    let m = free_parameters(copies);
    if m == 0 {
        let r = ladder_revival(copies, &[CORNER_BETA])?;
        return Ok(OptimizationResult {
            profile: vec![CORNER_BETA],
            fidelity: r.fidelity,
            iterations: 1,
            monotone: true,
            budget_exhausted: false,
            trace: vec![format!("eval=1 fidelity={:.9} profile=[{CORNER_BETA}]", r.fidelity)],
        });
    }
    if budget < 50 * m {
        return Err(Error::InvalidArgument(format!("budget {budget} below {}", 50 * m)));
    }
    let mut evals = 0usize;
    let mut exhausted = false;
    let mut best_x: Vec<f64> = Vec::new();
    let mut best_f = f64::NEG_INFINITY;
    let mut trace = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_restart = budget / RESTARTS;
    for restart in 0..RESTARTS {
        let mut x: Vec<f64> = if restart == 0 {
            vec![(0.2f64).ln(); m]
        } else {
            (0..m).map(|_| rng.random_range((0.02f64).ln()..(1.0f64).ln())).collect()
        };
        let limit = evals + per_restart;
        let eval = |x: &[f64], evals: &mut usize| -> Result<f64> {
            *evals += 1;
            Ok(ladder_revival(copies, &profile_from_increments(x))?.fidelity)
        };
        let mut fx = eval(&x, &mut evals)?;
        let mut step = 1.0;
        while step > 1e-3 {
            let mut improved = false;
            for j in 0..m {
                for dir in [1.0, -1.0] {
                    if evals >= limit {
                        break;
                    }
                    let mut y = x.clone();
                    y[j] += dir * step;
                    let fy = eval(&y, &mut evals)?;
                    if fy > fx {
                        x = y;
                        fx = fy;
                        improved = true;
                        break;
                    }
                }
            }
            if evals >= limit {
                exhausted = step > 1e-3;
                break;
            }
            if !improved {
                step /= 2.0;
            }
        }
        if fx > best_f {
            best_f = fx;
            best_x = x;
            trace.push(format!(
                "eval={evals} fidelity={best_f:.9} profile={:?}",
                profile_from_increments(&best_x)
            ));
        }
    }
    let profile = profile_from_increments(&best_x);
    Ok(OptimizationResult {
        monotone: is_monotone(&profile),
        profile,
        fidelity: best_f,
        iterations: evals,
        budget_exhausted: exhausted,
        trace,
    })
}

/// Least-squares line through `(x, y)`: slope, intercept and R².
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (slope, intercept, 1.0 - ss_res / ss_tot)
}
