//! Closed-form dynamics of the small chiral networks and corner resolvents of ladders.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::dynamics::eigendecompose;
use crate::error::{Error, Result};
use crate::hilbert::HermitianMatrix;
use crate::models::{ladder, ladder_corners, NetworkSpec};

/// Three-node ring with flux π/2 (π/6 per link), excitation starting on node 1.
pub fn three_node_sgf_population(j: usize, t: f64) -> f64 {
    let c = 1.0 / 3.0 + 2.0 / 3.0 * (3f64.sqrt() * t - 2.0 * PI * (j as f64 - 1.0) / 3.0).cos();
    c * c
}

/// Time for one full hop of the three-node flow.
pub fn three_node_transfer_time() -> f64 {
    2.0 * PI / (3.0 * 3f64.sqrt())
}

/// Four-node ring with phase `theta` on every link, excitation on node 1.
pub fn four_node_sgf_populations(theta: f64, t: f64) -> [f64; 4] {
    let a = (2.0 * theta.cos() * t).cos();
    let b = (2.0 * theta.sin() * t).cos();
    let sa = (2.0 * theta.cos() * t).sin();
    let sb = (2.0 * theta.sin() * t).sin();
    let side = 0.25 * (sb * sb + sa * sa);
    [0.25 * (a + b).powi(2), side, 0.25 * (a - b).powi(2), side]
}

/// Amplitude on node `j` (1-based) of the four-node network with auxiliary coupling `beta`.
pub fn four_node_asgf_amplitude(j: usize, beta: f64, t: f64) -> f64 {
    let s = j as f64 - 1.0;
    0.5 * (2.0 * t + s * PI / 2.0).cos() + 0.25 * (2.0 * beta * t).cos() + sign(j) / 4.0
}

/// The same amplitude written as a travelling wave, a π-shift wave and a constant.
pub fn four_node_asgf_amplitude_waves(j: usize, beta: f64, t: f64) -> f64 {
    let s = j as f64 - 1.0;
    sign(j) * (0.5 * (2.0 * t - s * PI / 2.0).cos() + 0.25 * (2.0 * beta * t - s * PI).cos() + 0.25)
}

fn sign(j: usize) -> f64 {
    if (j - 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Six-node ring with π/2 links and auxiliary coupling `beta`, no longer-range hops.
pub fn six_node_asgf_populations(beta: f64, t: f64) -> [f64; 6] {
    let w = (6f64.sqrt() * beta * t).cos();
    let c = (3f64.sqrt() * t).cos();
    let s = 2.0 * 3f64.sqrt() * (3f64.sqrt() * t).sin();
    let sq = |x: f64| x * x / 36.0;
    [
        sq(1.0 + w + 4.0 * c),
        sq(1.0 - w + s),
        sq(1.0 + w - 2.0 * c),
        sq(1.0 - w),
        sq(1.0 + w - 2.0 * c),
        sq(1.0 - w - s),
    ]
}

/// Single-particle energies `−2 sin(2πm/n)` of the ring with π/2 links, ascending.
pub fn n_node_sgf_spectrum(n: usize) -> Vec<f64> {
    let mut e: Vec<f64> = (0..n)
        .map(|m| -2.0 * (2.0 * PI * m as f64 / n as f64).sin())
        .collect();
    e.sort_by(f64::total_cmp);
    e
}

/// Amplitude on node `j` (1-based) of the n-node ring with π/2 links, starting on node 1.
///
/// Counter-propagating plane waves pair into cosines; zero modes give the constant.
pub fn n_node_sgf_amplitude(n: usize, j: usize, t: f64) -> f64 {
    let s = j as f64 - 1.0;
    let nf = n as f64;
    let pairs = if n % 2 == 1 { (n - 1) / 2 } else { n / 2 - 1 };
    let mut c: f64 = (1..=pairs)
        .map(|m| {
            let k = 2.0 * PI * m as f64 / nf;
            let e = -2.0 * k.sin();
            2.0 / nf * (e * t - k * s).cos()
        })
        .sum();
    if n % 2 == 1 {
        c += 1.0 / nf;
    } else if (j - 1) % 2 == 0 {
        c += 2.0 / nf;
    }
    c
}

/// Upper bound on even-site populations of the even-n ring.
pub fn even_site_bound(n: usize) -> f64 {
    (1.0 - 2.0 / n as f64).powi(2)
}

/// `(E₂/E₁, E_aux/E₁)` required for perfect five-node flow.
pub fn five_node_energy_conditions() -> (f64, f64) {
    (2.0, 5.0)
}

/// `(E₁/E₂, E_aux/E₂)` required for perfect six-node flow.
pub fn six_node_energy_conditions() -> (f64, f64) {
    (2.0, 3.0)
}

/// Node-1 return amplitude of the three-copy ladder with uniform coupling 2, as cosines.
pub const LADDER_RETURN_WEIGHTS: [(f64, f64); 5] = [
    (11.0 / 56.0, 0.0),
    (3.0 / 8.0, std::f64::consts::SQRT_2),
    (11.0 / 40.0, 2.0 * std::f64::consts::SQRT_2),
    (1.0 / 8.0, 3.0 * std::f64::consts::SQRT_2),
    (1.0 / 35.0, 5.291502622129181),
];

/// Node-1 population of the three-copy ladder from [`LADDER_RETURN_WEIGHTS`].
pub fn ladder_return_population(t: f64) -> f64 {
    let c: f64 = LADDER_RETURN_WEIGHTS.iter().map(|&(w, f)| w * (f * t).cos()).sum();
    c * c
}

/// Poles of the corner-projected resolvent with their residue matrices.
#[derive(Debug, Clone)]
pub struct PoleSet {
    pub corners: Vec<usize>,
    pub poles: Vec<f64>,
    /// One corner × corner residue matrix per pole.
    pub residues: Vec<DMatrix<Complex64>>,
}

impl PoleSet {
    /// Amplitude on corner index `j` at time `t`, starting from corner index `start`.
    pub fn amplitude(&self, j: usize, start: usize, t: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(&w, r)| r[(j, start)] * Complex64::from_polar(1.0, -w * t))
            .sum()
    }

    /// Same as [`amplitude`](Self::amplitude) with every pole shifted by `offset`.
    pub fn amplitude_shifted(&self, j: usize, start: usize, t: f64, offset: f64) -> Complex64 {
        self.poles
            .iter()
            .zip(&self.residues)
            .map(|(&w, r)| r[(j, start)] * Complex64::from_polar(1.0, -(w + offset) * t))
            .sum()
    }

    /// Sum of all residue matrices; the identity when every pole is found.
    pub fn residue_sum(&self) -> DMatrix<Complex64> {
        let p = self.corners.len();
        self.residues.iter().fold(DMatrix::zeros(p, p), |a, r| a + r)
    }
}

fn validate_corners(spec: &NetworkSpec, corners: &[usize]) -> Result<()> {
    if corners.is_empty() {
        return Err(Error::SingularProjection("no corner nodes".into()));
    }
    for (i, &c) in corners.iter().enumerate() {
        if c >= spec.n_sites() {
            return Err(Error::SingularProjection(format!("corner {c} out of range")));
        }
        if corners[..i].contains(&c) {
            return Err(Error::SingularProjection(format!("corner {c} repeated")));
        }
    }
    Ok(())
}

/// Self-energy of the corner block: `Σ(ω) = Σ_c K_c/(ω − μ_c)` over coupled interior levels.
struct SelfEnergy {
    h_pp: DMatrix<Complex64>,
    levels: Vec<(f64, DMatrix<Complex64>)>,
}

impl SelfEnergy {
    fn denominator(&self, w: f64, skip: Option<usize>) -> DMatrix<Complex64> {
        let p = self.h_pp.nrows();
        let mut m = DMatrix::<Complex64>::identity(p, p) * Complex64::new(w, 0.0) - &self.h_pp;
        for (i, (mu, k)) in self.levels.iter().enumerate() {
            if Some(i) != skip {
                m -= k * Complex64::new(1.0 / (w - mu), 0.0);
            }
        }
        m
    }

    fn derivative(&self, w: f64, skip: Option<usize>) -> DMatrix<Complex64> {
        let p = self.h_pp.nrows();
        let mut m = DMatrix::<Complex64>::identity(p, p);
        for (i, (mu, k)) in self.levels.iter().enumerate() {
            if Some(i) != skip {
                m += k * Complex64::new(1.0 / (w - mu).powi(2), 0.0);
            }
        }
        m
    }
}

fn sorted_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let h = HermitianMatrix::try_from_matrix(m.clone()).expect("Hermitian by construction");
    let e = eigendecompose(&h).expect("Hermitian by construction");
    (e.values, e.vectors)
}

fn sorted_eigenvalues(m: &DMatrix<Complex64>) -> Vec<f64> {
    let mut v: Vec<f64> = m.clone().symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `U (U† D U)⁻¹ U†` for the columns `u` spanning a null space.
fn residue_from_null(u: &DMatrix<Complex64>, d: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    let inner = u.adjoint() * d * u;
    let inv = inner
        .try_inverse()
        .ok_or_else(|| Error::SingularProjection("degenerate residue".into()))?;
    Ok(u * inv * u.adjoint())
}

/// Corner resolvent from the projected denominator `ω − H_PP − Σ(ω)`.
///
/// Poles are roots of the denominator, bracketed per eigenvalue branch between
/// consecutive self-energy levels; residues come from its null space and
/// derivative. Interior levels that are also poles are resolved separately.
pub fn corner_resolvent(spec: &NetworkSpec, corners: &[usize]) -> Result<PoleSet> {
    validate_corners(spec, corners)?;
    let h = spec.single_particle();
    let m = h.matrix();
    let n = h.dim();
    let p = corners.len();
    let interior: Vec<usize> = (0..n).filter(|i| !corners.contains(i)).collect();
    let h_pp = DMatrix::from_fn(p, p, |r, c| m[(corners[r], corners[c])]);
    let scale = h.norm().max(1.0);

    let mut levels: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    if !interior.is_empty() {
        let h_qq = h.block(&interior);
        let eq = eigendecompose(&h_qq)?;
        let h_pq = DMatrix::from_fn(p, interior.len(), |r, c| m[(corners[r], interior[c])]);
        let b = &h_pq * &eq.vectors;
        let tol = 1e-9 * scale;
        let mut a = 0;
        while a < eq.dim() {
            let mut end = a + 1;
            while end < eq.dim() && eq.values[end] - eq.values[a] < tol {
                end += 1;
            }
            let mut k = DMatrix::<Complex64>::zeros(p, p);
            for col in a..end {
                let bc = b.column(col);
                k += &bc * bc.adjoint();
            }
            let mu = eq.values[a..end].iter().sum::<f64>() / (end - a) as f64;
            if k.iter().any(|z| z.norm() > 1e-12 * scale) {
                levels.push((mu, k));
            }
            a = end;
        }
    }
    let se = SelfEnergy { h_pp, levels };

    let bound = scale + 1.0;
    let mut edges = vec![-bound];
    edges.extend(se.levels.iter().map(|l| l.0));
    edges.push(bound);
    let mut roots: Vec<f64> = Vec::new();
    for w in edges.windows(2) {
        let (a, b) = (w[0], w[1]);
        let delta = 1e-10 * (b - a).max(1e-3);
        let lo = if a == -bound { a } else { a + delta };
        let hi = if b == bound { b } else { b - delta };
        let e_lo = sorted_eigenvalues(&se.denominator(lo, None));
        let e_hi = sorted_eigenvalues(&se.denominator(hi, None));
        for k in 0..p {
            if !(e_lo[k] < 0.0 && e_hi[k] > 0.0) {
                continue;
            }
            let (mut x0, mut x1) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (x0 + x1);
                if mid <= x0 || mid >= x1 {
                    break;
                }
                if sorted_eigenvalues(&se.denominator(mid, None))[k] < 0.0 {
                    x0 = mid;
                } else {
                    x1 = mid;
                }
            }
            let x = 0.5 * (x0 + x1);
            let near_level = se.levels.iter().any(|l| (l.0 - x).abs() < 1e-7 * scale);
            if !near_level && !roots.iter().any(|r| (r - x).abs() < 1e-9 * scale) {
                roots.push(x);
            }
        }
    }

    let mut poles: Vec<(f64, DMatrix<Complex64>)> = Vec::new();
    let null_tol = 1e-7 * scale;
    for &x in &roots {
        let (vals, vecs) = sorted_eigen(&se.denominator(x, None));
        let cols: Vec<usize> = (0..p).filter(|&i| vals[i].abs() < null_tol).collect();
        if cols.is_empty() {
            return Err(Error::SingularProjection(format!("lost root at {x}")));
        }
        let u = vecs.select_columns(&cols);
        poles.push((x, residue_from_null(&u, &se.derivative(x, None))?));
    }
    // interior levels that also carry corner weight
    for (i, (mu, k)) in se.levels.iter().enumerate() {
        let (kv, kvec) = sorted_eigen(k);
        let kmax = kv.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let s_cols: Vec<usize> = (0..p).filter(|&c| kv[c] > 1e-10 * kmax).collect();
        let x_cols: Vec<usize> = (0..p).filter(|&c| kv[c] <= 1e-10 * kmax).collect();
        if x_cols.is_empty() {
            continue;
        }
        let r = se.denominator(*mu, Some(i));
        let rp = se.derivative(*mu, Some(i));
        let xb = kvec.select_columns(&x_cols);
        let (rv, rvec) = sorted_eigen(&(xb.adjoint() * &r * &xb));
        let null: Vec<usize> = (0..x_cols.len()).filter(|&c| rv[c].abs() < null_tol).collect();
        if null.is_empty() {
            continue;
        }
        let u = &xb * rvec.select_columns(&null);
        let sb = kvec.select_columns(&s_cols);
        let k_inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            s_cols.len(),
            s_cols.iter().map(|&c| Complex64::new(1.0 / kv[c], 0.0)),
        ));
        let d = &rp + &r * &sb * k_inv * sb.adjoint() * &r;
        poles.push((*mu, residue_from_null(&u, &d)?));
    }
    poles.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(PoleSet {
        corners: corners.to_vec(),
        poles: poles.iter().map(|p| p.0).collect(),
        residues: poles.into_iter().map(|p| p.1).collect(),
    })
}

/// Corner resolvent from the full eigendecomposition, projected onto the corners.
pub fn corner_resolvent_spectral(spec: &NetworkSpec, corners: &[usize]) -> Result<PoleSet> {
    validate_corners(spec, corners)?;
    let h = spec.single_particle();
    let e = eigendecompose(&h)?;
    let p = corners.len();
    let tol = 1e-9 * h.norm().max(1.0);
    let mut poles = Vec::new();
    let mut residues: Vec<DMatrix<Complex64>> = Vec::new();
    let mut a = 0;
    while a < e.dim() {
        let mut end = a + 1;
        while end < e.dim() && e.values[end] - e.values[a] < tol {
            end += 1;
        }
        let mut r = DMatrix::<Complex64>::zeros(p, p);
        for k in a..end {
            let v: Vec<Complex64> = corners.iter().map(|&c| e.vectors[(c, k)]).collect();
            for i in 0..p {
                for j in 0..p {
                    r[(i, j)] += v[i] * v[j].conj();
                }
            }
        }
        if r.iter().any(|z| z.norm() > 1e-12) {
            poles.push(e.values[a..end].iter().sum::<f64>() / (end - a) as f64);
            residues.push(r);
        }
        a = end;
    }
    Ok(PoleSet { corners: corners.to_vec(), poles, residues })
}

/// Corner resolvent of the uniform-coupling ladder with `copies` cells.
pub fn ladder_resolvent(copies: usize) -> Result<PoleSet> {
    let spec = ladder(copies, &[2.0])?;
    corner_resolvent(&spec, &ladder_corners(copies))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_node_anchors() {
        assert!((three_node_sgf_population(1, 0.0) - 1.0).abs() < 1e-15);
        let t = three_node_transfer_time();
        assert!((three_node_sgf_population(2, t) - 1.0).abs() < 1e-14);
        assert!(three_node_sgf_population(1, t).abs() < 1e-14);
    }

    #[test]
    fn four_node_dark_site() {
        for i in 0..50 {
            let t = 0.13 * i as f64;
            assert!(four_node_sgf_populations(PI / 4.0, t)[2].abs() < 1e-15);
        }
        assert_eq!(four_node_sgf_populations(0.3, 0.0), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn asgf_amplitude_forms_agree() {
        for j in 1..=4 {
            for i in 0..40 {
                let t = 0.09 * i as f64;
                let a = four_node_asgf_amplitude(j, 1.7, t);
                let b = four_node_asgf_amplitude_waves(j, 1.7, t);
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!((four_node_asgf_amplitude(2, 2.0, PI / 4.0).abs() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn six_node_start() {
        let p = six_node_asgf_populations(2.0, 0.0);
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1..].iter().all(|x| x.abs() < 1e-15));
    }

    #[test]
    fn ladder_weights_normalised() {
        let s: f64 = LADDER_RETURN_WEIGHTS.iter().map(|w| w.0).sum();
        assert!((s - 1.0).abs() < 1e-15);
        assert!((LADDER_RETURN_WEIGHTS[4].1 - 2.0 * 7f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn invalid_corners() {
        let spec = ladder(2, &[2.0]).unwrap();
        assert!(matches!(corner_resolvent(&spec, &[0, 0]), Err(Error::SingularProjection(_))));
        assert!(matches!(corner_resolvent(&spec, &[99]), Err(Error::SingularProjection(_))));
        assert!(matches!(corner_resolvent(&spec, &[]), Err(Error::SingularProjection(_))));
    }
}
