//! Fixed-excitation Fock bases and operator matrices on them.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::NetworkSpec;

/// Particle flavour living on each site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistics {
    /// Bosonic modes. `None` caps occupation at the excitation number, which is exact.
    Boson { max_occupation: Option<u32> },
    /// Two-level sites: occupation 1 is spin up.
    Spin,
}

impl Statistics {
    pub fn boson() -> Self {
        Statistics::Boson { max_occupation: None }
    }

    pub fn is_spin(&self) -> bool {
        matches!(self, Statistics::Spin)
    }

    /// Per-site occupation bound in a subspace with `n_excitations` quanta.
    pub fn cap(&self, n_excitations: usize) -> u32 {
        match *self {
            Statistics::Spin => 1,
            Statistics::Boson { max_occupation: Some(c) } => c,
            Statistics::Boson { max_occupation: None } => n_excitations as u32,
        }
    }
}

impl Default for Statistics {
    fn default() -> Self {
        Statistics::boson()
    }
}

pub type Occupation = Vec<u32>;

/// Ordered occupation states with fixed total excitation number.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    n_sites: usize,
    n_excitations: usize,
    statistics: Statistics,
    states: Vec<Occupation>,
    index: HashMap<Occupation, usize>,
}

impl SubspaceBasis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_excitations(&self) -> usize {
        self.n_excitations
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Occupation] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Basis vector for the given occupation.
    pub fn basis_vector(&self, occupation: &[u32]) -> Result<Vec<Complex64>> {
        let i = self.index_of(occupation).ok_or_else(|| {
            Error::BadInitial(format!("occupation {occupation:?} not in basis"))
        })?;
        let mut v = vec![Complex64::new(0.0, 0.0); self.dim()];
        v[i] = Complex64::new(1.0, 0.0);
        Ok(v)
    }

    /// State with one excitation on `site`; requires a single-excitation basis.
    pub fn single_excitation(&self, site: usize) -> Result<Vec<Complex64>> {
        if site >= self.n_sites {
            return Err(Error::BadInitial(format!("site {site} out of range")));
        }
        let mut occ = vec![0; self.n_sites];
        occ[site] = 1;
        self.basis_vector(&occ)
    }

    /// Occupation of every site for every basis state, as a dim × n_sites table.
    pub fn occupation_table(&self) -> Vec<Vec<f64>> {
        self.states
            .iter()
            .map(|s| s.iter().map(|&n| n as f64).collect())
            .collect()
    }
}

/// Enumerates the basis in descending lexicographic order.
pub fn enumerate_basis(
    n_sites: usize,
    n_excitations: usize,
    statistics: Statistics,
) -> Result<SubspaceBasis> {
    if n_sites == 0 {
        return Err(Error::InvalidArgument("basis needs at least one site".into()));
    }
    if statistics.is_spin() && n_excitations > n_sites {
        return Err(Error::SpinOverflow { sites: n_sites, excitations: n_excitations });
    }
    let cap = statistics.cap(n_excitations);
    if cap == 0 && n_excitations > 0 || (cap as usize) * n_sites < n_excitations {
        return Err(Error::CapacityOverflow {
            sites: n_sites,
            excitations: n_excitations,
            cap,
        });
    }
    let mut states = Vec::new();
    let mut current = vec![0u32; n_sites];
    fill(&mut current, 0, n_excitations as u32, cap, &mut states);
    let index = states.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    Ok(SubspaceBasis { n_sites, n_excitations, statistics, states, index })
}

fn fill(current: &mut Vec<u32>, site: usize, remaining: u32, cap: u32, out: &mut Vec<Occupation>) {
    let n = current.len();
    if site == n - 1 {
        if remaining <= cap {
            current[site] = remaining;
            out.push(current.clone());
        }
        return;
    }
    let rest_capacity = cap as u64 * (n - site - 1) as u64;
    for occ in (0..=remaining.min(cap)).rev() {
        if ((remaining - occ) as u64) > rest_capacity {
            break;
        }
        current[site] = occ;
        fill(current, site + 1, remaining - occ, cap, out);
    }
    current[site] = 0;
}

/// Number of states for unbounded bosons or spins, without enumerating.
pub fn dimension(n_sites: usize, n_excitations: usize, statistics: Statistics) -> usize {
    match statistics {
        Statistics::Spin => binomial(n_sites, n_excitations),
        Statistics::Boson { max_occupation: None } => {
            binomial(n_sites + n_excitations - 1, n_excitations)
        }
        Statistics::Boson { max_occupation: Some(c) } => {
            // inclusion-exclusion over sites exceeding the cap
            let c = c as usize;
            let mut total: i128 = 0;
            for i in 0..=n_sites {
                let used = i * (c + 1);
                if used > n_excitations {
                    break;
                }
                let term = binomial(n_sites, i) as i128
                    * binomial(n_sites + n_excitations - used - 1, n_excitations - used) as i128;
                total += if i % 2 == 0 { term } else { -term };
            }
            total as usize
        }
    }
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// A single operator term of a number-conserving Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Term {
    /// `amplitude · a_to† a_from` (the Hermitian partner is a separate term).
    Hop { to: usize, from: usize, amplitude: Complex64 },
    /// `detuning · n + kerr · n²` on one site.
    OnSite { site: usize, detuning: f64, kerr: f64 },
}

/// `⟨bra| term |ket⟩` for the given statistics.
pub fn matrix_element(statistics: Statistics, bra: &[u32], ket: &[u32], term: &Term) -> Complex64 {
    let zero = Complex64::new(0.0, 0.0);
    match *term {
        Term::Hop { to, from, amplitude } => {
            if to == from || ket[from] == 0 {
                return zero;
            }
            if statistics.is_spin() && ket[to] != 0 {
                return zero;
            }
            let connected = bra.iter().zip(ket).enumerate().all(|(i, (&b, &k))| {
                if i == to {
                    b == k + 1
                } else if i == from {
                    b + 1 == k
                } else {
                    b == k
                }
            });
            if !connected {
                return zero;
            }
            let factor = if statistics.is_spin() {
                1.0
            } else {
                ((ket[to] + 1) as f64).sqrt() * (ket[from] as f64).sqrt()
            };
            amplitude * factor
        }
        Term::OnSite { site, detuning, kerr } => {
            if bra != ket {
                return zero;
            }
            let n = ket[site] as f64;
            Complex64::new(detuning * n + kerr * n * n, 0.0)
        }
    }
}

/// Dense complex matrix that is exactly Hermitian.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(DMatrix<Complex64>);

impl HermitianMatrix {
    /// Accepts `m` if its Hermiticity defect is within 1e-12 of its scale, then symmetrizes.
    pub fn try_from_matrix(m: DMatrix<Complex64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch { expected: m.nrows(), got: m.ncols() });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonHermitian(f64::INFINITY));
        }
        let defect = hermiticity_defect(&m);
        let scale = m.iter().fold(1.0f64, |a, z| a.max(z.norm()));
        if defect > 1e-12 * scale {
            return Err(Error::NonHermitian(defect));
        }
        let sym = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Ok(HermitianMatrix(sym))
    }

    pub fn zeros(dim: usize) -> Self {
        HermitianMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.0[(row, col)]
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0f64, |a, z| a.max(z.norm()))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Principal submatrix on `indices`.
    pub fn block(&self, indices: &[usize]) -> HermitianMatrix {
        let k = indices.len();
        HermitianMatrix(DMatrix::from_fn(k, k, |r, c| self.0[(indices[r], indices[c])]))
    }

    /// `‖H v‖`-style product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim();
        (0..n)
            .map(|r| (0..n).map(|c| self.0[(r, c)] * v[c]).sum())
            .collect()
    }

    /// `⟨v|H|v⟩`, real for Hermitian H.
    pub fn expectation(&self, v: &[Complex64]) -> f64 {
        let hv = self.apply(v);
        v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum()
    }
}

/// Largest entry of `|M − M†|`.
pub fn hermiticity_defect(m: &DMatrix<Complex64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[(r, c)] - m[(c, r)].conj()).norm());
        }
    }
    worst
}

/// Builds the Hamiltonian block of `spec` on `basis`.
pub fn build_hamiltonian(spec: &NetworkSpec, basis: &SubspaceBasis) -> Result<HermitianMatrix> {
    let n = spec.n_sites();
    if basis.n_sites() != n {
        return Err(Error::SpecMismatch(format!(
            "spec has {n} sites, basis has {}",
            basis.n_sites()
        )));
    }
    for h in spec.hoppings() {
        if h.to >= n || h.from >= n || h.to == h.from {
            return Err(Error::SpecMismatch(format!("hopping ({}, {}) invalid", h.to, h.from)));
        }
    }
    for o in spec.onsite() {
        if o.site >= n {
            return Err(Error::SpecMismatch(format!("on-site term at {} invalid", o.site)));
        }
    }
    let stats = basis.statistics();
    let dim = basis.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, ket) in basis.states().iter().enumerate() {
        for o in spec.onsite() {
            let term = Term::OnSite { site: o.site, detuning: o.detuning, kerr: o.kerr };
            m[(col, col)] += matrix_element(stats, ket, ket, &term);
        }
        for h in spec.hoppings() {
            let amp = h.complex_amplitude();
            for (to, from, a) in [(h.to, h.from, amp), (h.from, h.to, amp.conj())] {
                if ket[from] == 0 {
                    continue;
                }
                let mut bra = ket.clone();
                bra[from] -= 1;
                bra[to] += 1;
                if let Some(row) = basis.index_of(&bra) {
                    m[(row, col)] += matrix_element(stats, &bra, ket, &Term::Hop { to, from, amplitude: a });
                }
            }
        }
    }
    Ok(HermitianMatrix(m))
}

/// Total occupation operator on the basis, diagonal.
pub fn number_operator(basis: &SubspaceBasis) -> HermitianMatrix {
    let dim = basis.dim();
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for (i, s) in basis.states().iter().enumerate() {
        m[(i, i)] = Complex64::new(s.iter().sum::<u32>() as f64, 0.0);
    }
    HermitianMatrix(m)
}

/// Index of a spin occupation in the full 2^n product basis.
///
/// Site 1 is the most significant factor and each factor is ordered (up, down),
/// so the full basis runs in descending lexicographic occupation order.
pub fn product_index(occupation: &[u32]) -> usize {
    occupation
        .iter()
        .fold(0usize, |acc, &o| (acc << 1) | (1 - o.min(1)) as usize)
}
