//! Exact evolution by eigendecomposition, populations and chirality metrics.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig12;
use crate::hilbert::{hermiticity_defect, HermitianMatrix, SubspaceBasis};
use crate::models::NetworkSpec;

/// Ascending eigenvalues with orthonormal, phase-fixed eigenvector columns.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<Complex64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, i: usize) -> Vec<Complex64> {
        self.vectors.column(i).iter().copied().collect()
    }
}

/// Hermitian eigendecomposition with deterministic ordering and phases.
pub fn eigendecompose(h: &HermitianMatrix) -> Result<EigenSystem> {
    let m = h.matrix();
    let defect = hermiticity_defect(m);
    if defect > 1e-12 * h.max_abs().max(1.0) {
        return Err(Error::NonHermitian(defect));
    }
    let dim = h.dim();
    if dim == 0 {
        return Ok(EigenSystem { values: vec![], vectors: DMatrix::zeros(0, 0) });
    }
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<Complex64>::zeros(dim, dim);
    for (col, &i) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(i);
        let top = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        let pivot = v.iter().find(|z| z.norm() >= top * (1.0 - 1e-9)).copied().unwrap();
        let rot = pivot.conj() / pivot.norm();
        for r in 0..dim {
            vectors[(r, col)] = v[r] * rot;
        }
    }
    Ok(EigenSystem { values, vectors })
}

/// Reusable evolution operator `V e^{−iΛt} V†`.
#[derive(Debug, Clone)]
pub struct Propagator {
    eigen: EigenSystem,
}

impl Propagator {
    pub fn new(h: &HermitianMatrix) -> Result<Self> {
        Ok(Propagator { eigen: eigendecompose(h)? })
    }

    pub fn from_eigen(eigen: EigenSystem) -> Self {
        Propagator { eigen }
    }

    pub fn eigen(&self) -> &EigenSystem {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    /// Eigenbasis coefficients `V†ψ`.
    pub fn coefficients(&self, psi: &[Complex64]) -> Result<Vec<Complex64>> {
        let dim = self.dim();
        if psi.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: psi.len() });
        }
        Ok((0..dim)
            .map(|k| (0..dim).map(|r| self.eigen.vectors[(r, k)].conj() * psi[r]).sum())
            .collect())
    }

    /// State at time `t` from eigenbasis coefficients.
    pub fn state(&self, coefficients: &[Complex64], t: f64) -> Vec<Complex64> {
        let dim = self.dim();
        let phased: Vec<Complex64> = coefficients
            .iter()
            .zip(&self.eigen.values)
            .map(|(c, &e)| c * Complex64::from_polar(1.0, -e * t))
            .collect();
        (0..dim)
            .map(|r| (0..dim).map(|k| self.eigen.vectors[(r, k)] * phased[k]).sum())
            .collect()
    }

    /// Amplitude of basis state `row` at time `t`.
    pub fn component(&self, coefficients: &[Complex64], row: usize, t: f64) -> Complex64 {
        coefficients
            .iter()
            .zip(&self.eigen.values)
            .enumerate()
            .map(|(k, (c, &e))| self.eigen.vectors[(row, k)] * c * Complex64::from_polar(1.0, -e * t))
            .sum()
    }

    /// Return amplitude `⟨ψ(0)|ψ(t)⟩`.
    pub fn return_amplitude(&self, coefficients: &[Complex64], t: f64) -> Complex64 {
        coefficients
            .iter()
            .zip(&self.eigen.values)
            .map(|(c, &e)| c.norm_sqr() * Complex64::from_polar(1.0, -e * t))
            .sum()
    }
}

/// Sampled evolution: amplitudes per basis state and populations per site.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
    pub populations: Vec<Vec<f64>>,
    pub labels: Vec<String>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_sites(&self) -> usize {
        self.labels.len()
    }

    /// Population of `node` along the grid.
    pub fn population(&self, node: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[node]).collect()
    }

    pub fn max_population(&self, node: usize) -> f64 {
        self.populations.iter().fold(0.0f64, |a, p| a.max(p[node]))
    }

    pub fn norm_at(&self, i: usize) -> f64 {
        self.amplitudes[i].iter().map(|z| z.norm_sqr()).sum()
    }

    /// Copy with populations replaced by `1 − ⟨n_j⟩`, the spin-down / hole readout.
    pub fn hole_readout(&self) -> Trajectory {
        let mut out = self.clone();
        for row in &mut out.populations {
            for p in row.iter_mut() {
                *p = 1.0 - *p;
            }
        }
        out
    }

    /// Uses the CSV column names of `spec`.
    pub fn with_labels_of(mut self, spec: &NetworkSpec) -> Self {
        if spec.n_sites() == self.n_sites() {
            self.labels = csv_labels(spec);
        }
        self
    }

    /// Writes `t,<labels>` followed by one row per grid time.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,{}", self.labels.join(","))?;
        for (t, row) in self.times.iter().zip(&self.populations) {
            let cells: Vec<String> = row.iter().map(|&p| sig12(p)).collect();
            writeln!(w, "{},{}", sig12(*t), cells.join(","))?;
        }
        Ok(())
    }
}

/// Column names `node_1…node_n` then `aux_<label>` for auxiliaries.
pub fn csv_labels(spec: &NetworkSpec) -> Vec<String> {
    let labels = spec.labels();
    (0..spec.n_sites())
        .map(|i| {
            if i < spec.n_network() {
                format!("node_{}", labels[i])
            } else {
                format!("aux_{}", labels[i])
            }
        })
        .collect()
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("node_{j}")).collect()
}

/// Evenly spaced grid of `points` times on `[0, t_max]`.
pub fn time_grid(t_max: f64, points: usize) -> Vec<f64> {
    if points < 2 {
        return vec![0.0];
    }
    (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect()
}

/// Grid with 2000 points per fundamental period `2π/ΔE_min`, over `periods` periods.
pub fn default_grid(eigen: &EigenSystem, periods: f64) -> Vec<f64> {
    let tol = 1e-9 * eigen.values.iter().fold(1.0f64, |a, e| a.max(e.abs()));
    let gap = eigen
        .values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&d| d > tol)
        .fold(f64::INFINITY, f64::min);
    let period = if gap.is_finite() { 2.0 * PI / gap } else { 2.0 * PI };
    time_grid(period * periods, (2000.0 * periods).ceil() as usize + 1)
}

/// Evolves `psi0` under `h` and samples it on `times`.
pub fn evolve(
    h: &HermitianMatrix,
    basis: &SubspaceBasis,
    psi0: &[Complex64],
    times: &[f64],
) -> Result<Trajectory> {
    let prop = Propagator::new(h)?;
    evolve_with(&prop, basis, psi0, times)
}

/// Like [`evolve`] with a precomputed propagator.
pub fn evolve_with(
    prop: &Propagator,
    basis: &SubspaceBasis,
    psi0: &[Complex64],
    times: &[f64],
) -> Result<Trajectory> {
    if basis.dim() != prop.dim() {
        return Err(Error::DimensionMismatch { expected: prop.dim(), got: basis.dim() });
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if psi0.len() == prop.dim() && (norm - 1.0).abs() > 1e-10 {
        return Err(Error::BadInitial(format!("norm {norm} is not 1")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be ascending".into()));
    }
    let coeffs = prop.coefficients(psi0)?;
    let occ = basis.occupation_table();
    let n = basis.n_sites();
    let mut amplitudes = Vec::with_capacity(times.len());
    let mut populations = Vec::with_capacity(times.len());
    for &t in times {
        let amp = prop.state(&coeffs, t);
        populations.push(site_populations(&amp, &occ, n));
        amplitudes.push(amp);
    }
    Ok(Trajectory { times: times.to_vec(), amplitudes, populations, labels: default_labels(n) })
}

/// `⟨n_j⟩` for every site.
pub fn site_populations(amp: &[Complex64], occupation: &[Vec<f64>], n_sites: usize) -> Vec<f64> {
    let mut pops = vec![0.0; n_sites];
    for (a, occ) in amp.iter().zip(occupation) {
        let w = a.norm_sqr();
        for (p, &o) in pops.iter_mut().zip(occ) {
            *p += o * w;
        }
    }
    pops
}

/// Squared overlap with the initial state at the grid time nearest `period`.
pub fn transfer_fidelity(traj: &Trajectory, period: f64) -> Result<f64> {
    let i = nearest_index(&traj.times, period)?;
    let overlap: Complex64 = traj.amplitudes[0]
        .iter()
        .zip(&traj.amplitudes[i])
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(overlap.norm_sqr().min(1.0))
}

fn nearest_index(times: &[f64], t: f64) -> Result<usize> {
    let (first, last) = match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => (a, b),
        _ => return Err(Error::EmptyWindow),
    };
    let slack = 1e-9 * last.abs().max(1.0);
    if !t.is_finite() || t < first - slack || t > last + slack {
        return Err(Error::OutOfGrid(t));
    }
    let i = times.partition_point(|&x| x < t);
    Ok(if i == 0 {
        0
    } else if i == times.len() || (t - times[i - 1]) <= (times[i] - t) {
        i - 1
    } else {
        i
    })
}

/// Mean over `corners` of `max_t sqrt(P_j(t))`, the peak amplitude modulus.
pub fn average_fidelity(traj: &Trajectory, corners: &[usize]) -> Result<f64> {
    if traj.is_empty() || corners.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut total = 0.0;
    for &c in corners {
        if c >= traj.n_sites() {
            return Err(Error::DimensionMismatch { expected: traj.n_sites(), got: c });
        }
        total += traj.max_population(c).max(0.0).sqrt();
    }
    Ok(total / corners.len() as f64)
}

/// Circulation sense of a chiral flow relative to the ring order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Along increasing ring index.
    Clockwise,
    CounterClockwise,
    None,
}

impl Direction {
    pub fn reversed(self) -> Direction {
        match self {
            Direction::Clockwise => Direction::CounterClockwise,
            Direction::CounterClockwise => Direction::Clockwise,
            Direction::None => Direction::None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiralityVerdict {
    pub order: Vec<usize>,
    pub direction: Direction,
    pub min_peak: f64,
}

/// Populations below this never count as a visit.
const VISIT_FLOOR: f64 = 1e-6;

/// Orders ring nodes by the first time their population reaches `threshold` times its maximum.
pub fn chirality_order(traj: &Trajectory, ring_nodes: &[usize], threshold: f64) -> Result<ChiralityVerdict> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidArgument(format!("threshold {threshold} outside (0, 1]")));
    }
    if traj.is_empty() || ring_nodes.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut firsts: Vec<(usize, usize, usize)> = Vec::new(); // (grid index, ring position, node)
    let mut min_peak = f64::INFINITY;
    for (pos, &node) in ring_nodes.iter().enumerate() {
        let peak = traj.max_population(node);
        if peak <= VISIT_FLOOR {
            continue;
        }
        let level = threshold * peak;
        if let Some(i) = traj.populations.iter().position(|p| p[node] >= level) {
            firsts.push((i, pos, node));
            min_peak = min_peak.min(peak);
        }
    }
    if firsts.is_empty() {
        return Err(Error::NoPeaks);
    }
    firsts.sort_by_key(|&(i, pos, _)| (i, pos));
    let tie = firsts.windows(2).any(|w| w[0].0 == w[1].0);
    let order = firsts.iter().map(|&(_, _, node)| node).collect();
    let direction = if tie || firsts.len() < 3 {
        Direction::None
    } else {
        let n = ring_nodes.len();
        let start = firsts[0].1;
        let rel: Vec<usize> = firsts.iter().map(|&(_, pos, _)| (pos + n - start) % n).collect();
        if rel.windows(2).all(|w| w[1] > w[0]) {
            Direction::Clockwise
        } else if rel[1..].windows(2).all(|w| w[1] < w[0]) {
            Direction::CounterClockwise
        } else {
            Direction::None
        }
    };
    Ok(ChiralityVerdict { order, direction, min_peak })
}

/// Revival time and return probability of an imperfect cycle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Revival {
    pub period: f64,
    pub fidelity: f64,
}

/// First return of the excitation after it has reached `last_node`.
///
/// The arrival is the first local maximum of `P_last` reaching half its maximum
/// over `[0, horizon]`; the period is the first local maximum of the return
/// probability after that, refined by golden-section search.
pub fn first_revival(
    prop: &Propagator,
    basis: &SubspaceBasis,
    psi0: &[Complex64],
    last_node: usize,
    horizon: f64,
    samples: usize,
) -> Result<Revival> {
    if samples < 3 || !(horizon > 0.0) {
        return Err(Error::EmptyWindow);
    }
    if last_node >= basis.n_sites() {
        return Err(Error::DimensionMismatch { expected: basis.n_sites(), got: last_node });
    }
    let coeffs = prop.coefficients(psi0)?;
    let rows: Vec<(usize, f64)> = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s[last_node] > 0)
        .map(|(i, s)| (i, s[last_node] as f64))
        .collect();
    let times = time_grid(horizon, samples);
    let last: Vec<f64> = times
        .iter()
        .map(|&t| rows.iter().map(|&(r, o)| o * prop.component(&coeffs, r, t).norm_sqr()).sum())
        .collect();
    let ret = |t: f64| prop.return_amplitude(&coeffs, t).norm_sqr();
    let top = last.iter().copied().fold(0.0f64, f64::max);
    if top <= VISIT_FLOOR {
        return Err(Error::NoPeaks);
    }
    let arrival = (1..samples - 1)
        .find(|&i| last[i] >= 0.5 * top && last[i] >= last[i - 1] && last[i] >= last[i + 1])
        .ok_or(Error::NoPeaks)?;
    let r: Vec<f64> = times.iter().map(|&t| ret(t)).collect();
    let k = (arrival + 1..samples - 1)
        .find(|&i| r[i] >= r[i - 1] && r[i] >= r[i + 1])
        .ok_or(Error::NoPeaks)?;
    let (period, fidelity) = golden_max(ret, times[k - 1], times[k + 1]);
    Ok(Revival { period, fidelity: fidelity.min(1.0) })
}

/// Golden-section maximisation of a unimodal `f` on `[a, b]`.
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-14 * b.abs().max(1.0) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = (a + b) / 2.0;
    (t, f(t))
}

/// Largest population of `node` over `times`, refined between the neighbours of the best sample.
pub fn refined_peak(
    prop: &Propagator,
    basis: &SubspaceBasis,
    psi0: &[Complex64],
    node: usize,
    times: &[f64],
) -> Result<(f64, f64)> {
    if times.len() < 3 {
        return Err(Error::EmptyWindow);
    }
    if node >= basis.n_sites() {
        return Err(Error::DimensionMismatch { expected: basis.n_sites(), got: node });
    }
    let coeffs = prop.coefficients(psi0)?;
    let rows: Vec<(usize, f64)> = basis
        .states()
        .iter()
        .enumerate()
        .filter(|(_, s)| s[node] > 0)
        .map(|(i, s)| (i, s[node] as f64))
        .collect();
    let pop = |t: f64| rows.iter().map(|&(r, o)| o * prop.component(&coeffs, r, t).norm_sqr()).sum::<f64>();
    let (k, _) = times
        .iter()
        .map(|&t| pop(t))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, p)| if p > best.1 { (i, p) } else { best });
    let lo = times[k.saturating_sub(1)];
    let hi = times[(k + 1).min(times.len() - 1)];
    Ok(golden_max(pop, lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{enumerate_basis, Statistics};
    use crate::models::{asgf, sgf_ring, GaugeChoice};

    #[test]
    fn three_node_spectrum() {
        let h = sgf_ring(3, 1.5 * PI, GaugeChoice::Symmetric).unwrap().single_particle();
        let e = eigendecompose(&h).unwrap();
        let s3 = 3f64.sqrt();
        for (a, b) in e.values.iter().zip([-s3, 0.0, s3]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn four_node_flux_two_pi_spectrum() {
        let h = sgf_ring(4, 2.0 * PI, GaugeChoice::Symmetric).unwrap().single_particle();
        let e = eigendecompose(&h).unwrap();
        for (a, b) in e.values.iter().zip([-2.0, 0.0, 0.0, 2.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_spectrum() {
        let h = HermitianMatrix::try_from_matrix(DMatrix::identity(4, 4)).unwrap();
        assert!(eigendecompose(&h).unwrap().values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn phase_fixing() {
        let h = asgf(5, 1.3, 0.4).unwrap().single_particle();
        let e = eigendecompose(&h).unwrap();
        for k in 0..e.dim() {
            let v = e.vector(k);
            let top = v.iter().fold(0.0f64, |a, z| a.max(z.norm()));
            let p = v.iter().find(|z| z.norm() >= top * (1.0 - 1e-9)).unwrap();
            assert!(p.im.abs() < 1e-15 && p.re > 0.0);
        }
    }

    #[test]
    fn zero_hamiltonian_is_static() {
        let basis = enumerate_basis(3, 1, Statistics::boson()).unwrap();
        let h = HermitianMatrix::zeros(3);
        let psi = basis.single_excitation(1).unwrap();
        let tr = evolve(&h, &basis, &psi, &time_grid(5.0, 11)).unwrap();
        assert!(tr.amplitudes.iter().all(|a| a == &psi));
        let f = average_fidelity(&tr, &[1, 0, 2]).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn fidelity_grid_errors() {
        let basis = enumerate_basis(2, 1, Statistics::boson()).unwrap();
        let psi = basis.single_excitation(0).unwrap();
        let tr = evolve(&HermitianMatrix::zeros(2), &basis, &psi, &time_grid(1.0, 5)).unwrap();
        assert_eq!(transfer_fidelity(&tr, 0.0).unwrap(), 1.0);
        assert_eq!(transfer_fidelity(&tr, 2.0), Err(Error::OutOfGrid(2.0)));
    }

    #[test]
    fn revival_of_perfect_network() {
        let spec = asgf(4, 2.0, PI / 2.0).unwrap();
        let (basis, h) = spec.hamiltonian(1).unwrap();
        let prop = Propagator::new(&h).unwrap();
        let psi = basis.single_excitation(0).unwrap();
        let r = first_revival(&prop, &basis, &psi, 3, 8.0, 2000).unwrap();
        assert!((r.period - PI).abs() < 1e-6);
        assert!(1.0 - r.fidelity < 1e-12);
    }

    #[test]
    fn csv_header() {
        let spec = asgf(4, 2.0, PI / 2.0).unwrap();
        let (basis, h) = spec.hamiltonian(1).unwrap();
        let psi = basis.single_excitation(0).unwrap();
        let tr = evolve(&h, &basis, &psi, &time_grid(1.0, 3)).unwrap().with_labels_of(&spec);
        let mut out = Vec::new();
        tr.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,node_1,node_2,node_3,node_4,aux_c"));
        assert!(lines.next().unwrap().starts_with("0,"));
        assert_eq!(lines.count(), 2);
    }
}
