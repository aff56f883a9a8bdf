//! Bell-pair transport around a three-spin ring and pairwise concurrence.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::Propagator;
use crate::error::{Error, Result};
use crate::hilbert::{product_index, HermitianMatrix, SubspaceBasis};
use crate::models::NetworkSpec;

/// Initial Bell pair on spins 1 and 2, spin 3 down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BellInitial {
    /// `(|↑↓⟩ + |↓↑⟩)/√2`
    PsiPlus,
    /// `(|↓↓⟩ + |↑↑⟩)/√2`
    PhiPlus,
}

/// Pairs `(1,2)`, `(2,3)`, `(3,1)` as 0-based sites.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (1, 2), (2, 0)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BellTransportResult {
    pub times: Vec<f64>,
    /// `[pair][time]` population of `|Ψ⁺⟩` on the pair.
    pub psi_plus: Vec<Vec<f64>>,
    /// `[pair][time]` population of `|Φ⁺⟩` on the pair.
    pub phi_plus: Vec<Vec<f64>>,
    /// `[pair][time]` concurrence of the pair.
    pub concurrence: Vec<Vec<f64>>,
}

impl BellTransportResult {
    /// Populations of the Bell state the run started in.
    pub fn carried(&self, initial: BellInitial) -> &[Vec<f64>] {
        match initial {
            BellInitial::PsiPlus => &self.psi_plus,
            BellInitial::PhiPlus => &self.phi_plus,
        }
    }
}

/// Pair indices ordered by the first time each series reaches 0.99 of its maximum.
pub fn peak_order(series: &[Vec<f64>]) -> Vec<usize> {
    let mut firsts: Vec<(usize, usize)> = series
        .iter()
        .enumerate()
        .filter_map(|(p, s)| {
            let top = s.iter().copied().fold(0.0f64, f64::max);
            (top > 1e-6).then(|| (s.iter().position(|&v| v >= 0.99 * top).unwrap(), p))
        })
        .collect();
    firsts.sort();
    firsts.into_iter().map(|f| f.1).collect()
}

/// Number-conserving evolution of an arbitrary spin state, one propagator per sector.
pub struct SpinEvolver {
    n: usize,
    sectors: Vec<(SubspaceBasis, Propagator)>,
}

impl SpinEvolver {
    pub fn new(spec: &NetworkSpec) -> Result<Self> {
        if !spec.statistics().is_spin() {
            return Err(Error::NotSpin);
        }
        let n = spec.n_sites();
        let sectors = (0..=n)
            .map(|k| {
                let (b, h) = spec.hamiltonian(k)?;
                Ok((b, Propagator::new(&h)?))
            })
            .collect::<Result<_>>()?;
        Ok(SpinEvolver { n, sectors })
    }

    /// Evolves a product-basis state to time `t`.
    pub fn evolve(&self, state: &[Complex64], t: f64) -> Result<Vec<Complex64>> {
        let dim = 1usize << self.n;
        if state.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: state.len() });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); dim];
        for (basis, prop) in &self.sectors {
            let part: Vec<Complex64> = basis.states().iter().map(|s| state[product_index(s)]).collect();
            if part.iter().all(|z| z.norm_sqr() == 0.0) {
                continue;
            }
            let moved = prop.state(&prop.coefficients(&part)?, t);
            for (s, a) in basis.states().iter().zip(moved) {
                out[product_index(s)] = a;
            }
        }
        Ok(out)
    }
}

/// Product-basis vector for the Bell pair on spins 1, 2 with every other spin down.
pub fn bell_initial_state(n: usize, initial: BellInitial) -> Result<Vec<Complex64>> {
    if n < 2 {
        return Err(Error::BadInitial("need at least two spins".into()));
    }
    let mut v = vec![Complex64::new(0.0, 0.0); 1 << n];
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut put = |a: u32, b: u32| {
        let mut occ = vec![0u32; n];
        occ[0] = a;
        occ[1] = b;
        v[product_index(&occ)] = h;
    };
    match initial {
        BellInitial::PsiPlus => {
            put(1, 0);
            put(0, 1);
        }
        BellInitial::PhiPlus => {
            put(0, 0);
            put(1, 1);
        }
    }
    Ok(v)
}

fn spin_count(state: &[Complex64]) -> Result<usize> {
    let len = state.len();
    if len < 4 || !len.is_power_of_two() {
        return Err(Error::NotSpin);
    }
    Ok(len.trailing_zeros() as usize)
}

/// Two-site reduced density matrix of `pair`, basis `(↑↑, ↑↓, ↓↑, ↓↓)`.
pub fn reduced_pair(state: &[Complex64], pair: (usize, usize)) -> Result<DMatrix<Complex64>> {
    let n = spin_count(state)?;
    let (j, k) = pair;
    if j >= n || k >= n || j == k {
        return Err(Error::InvalidArgument(format!("pair ({j}, {k}) on {n} spins")));
    }
    // bit of site s in a product index (1 = down)
    let bit = |idx: usize, s: usize| (idx >> (n - 1 - s)) & 1;
    let mut rho = DMatrix::<Complex64>::zeros(4, 4);
    for a in 0..state.len() {
        for b in 0..state.len() {
            let same_rest = (0..n).filter(|&s| s != j && s != k).all(|s| bit(a, s) == bit(b, s));
            if !same_rest {
                continue;
            }
            let ra = 2 * bit(a, j) + bit(a, k);
            let rb = 2 * bit(b, j) + bit(b, k);
            rho[(ra, rb)] += state[a] * state[b].conj();
        }
    }
    Ok(rho)
}

fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let sym = (m + m.adjoint()) * Complex64::new(0.5, 0.0);
    let e = crate::dynamics::eigendecompose(&HermitianMatrix::try_from_matrix(sym).expect("symmetrized"))
        .expect("symmetrized");
    (e.values, e.vectors)
}

/// Wootters concurrence of a two-qubit density matrix.
pub fn wootters(rho: &DMatrix<Complex64>) -> f64 {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    // σ_y ⊗ σ_y
    let yy = DMatrix::from_row_slice(4, 4, &[z, z, z, -o, z, z, o, z, z, o, z, z, -o, z, z, z]);
    let tilde = &yy * rho.conjugate() * &yy;
    let (vals, vecs) = hermitian_eigen(rho);
    let sqrt_diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        vals.iter().map(|&v| Complex64::new(v.max(0.0).sqrt(), 0.0)),
    ));
    let root = &vecs * sqrt_diag * vecs.adjoint();
    let (mut lam, _) = hermitian_eigen(&(&root * tilde * &root));
    // rounding noise on vanishing eigenvalues would otherwise survive the square root
    let floor = 1e-14 * lam.iter().fold(0.0f64, |a, l| a.max(l.abs()));
    for l in lam.iter_mut() {
        *l = if *l > floor { l.sqrt() } else { 0.0 };
    }
    lam.sort_by(|a, b| b.total_cmp(a));
    (lam[0] - lam[1] - lam[2] - lam[3]).max(0.0)
}

/// Concurrence of `pair` in a pure product-basis spin state.
pub fn concurrence(state: &[Complex64], pair: (usize, usize)) -> Result<f64> {
    Ok(wootters(&reduced_pair(state, pair)?))
}

/// Bell-state population of `pair`, traced over the other spins.
pub fn bell_population(state: &[Complex64], pair: (usize, usize), bell: BellInitial) -> Result<f64> {
    let rho = reduced_pair(state, pair)?;
    let (a, b) = match bell {
        BellInitial::PsiPlus => (1, 2),
        BellInitial::PhiPlus => (0, 3),
    };
    Ok(0.5 * (rho[(a, a)] + rho[(b, b)] + rho[(a, b)] + rho[(b, a)]).re)
}

/// Evolves the Bell pair around a three-spin model and records pair observables.
pub fn bell_transport(model: &NetworkSpec, initial: BellInitial, times: &[f64]) -> Result<BellTransportResult> {
    if !model.statistics().is_spin() {
        return Err(Error::NotSpin);
    }
    if model.n_sites() != 3 {
        return Err(Error::BadInitial(format!("model has {} spins, expected 3", model.n_sites())));
    }
    let evolver = SpinEvolver::new(model)?;
    let psi0 = bell_initial_state(3, initial)?;
    let mut out = BellTransportResult {
        times: times.to_vec(),
        psi_plus: (0..3).map(|_| Vec::with_capacity(times.len())).collect(),
        phi_plus: (0..3).map(|_| Vec::with_capacity(times.len())).collect(),
        concurrence: (0..3).map(|_| Vec::with_capacity(times.len())).collect(),
    };
    for &t in times {
        let psi = evolver.evolve(&psi0, t)?;
        for (p, &pair) in PAIRS.iter().enumerate() {
            out.psi_plus[p].push(bell_population(&psi, pair, BellInitial::PsiPlus)?);
            out.phi_plus[p].push(bell_population(&psi, pair, BellInitial::PhiPlus)?);
            out.concurrence[p].push(concurrence(&psi, pair)?);
        }
    }
    Ok(out)
}
