//! Driven-circuit syntheses of the aSGF model: lab-frame integration of
//! modulated Hamiltonians and their first-order effective couplings.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve, site_populations, Trajectory};
use crate::error::{Error, Result};
use crate::format::sig12;
use crate::hilbert::{build_hamiltonian, enumerate_basis, Statistics, SubspaceBasis};
use crate::models::{asgf, NetworkSpec};

/// First positive zero of `J₀`.
pub const FIRST_BESSEL_ZERO: f64 = 2.404825557695773;

/// Largest `|x|` accepted by [`bessel_j`].
pub const BESSEL_RANGE: f64 = 50.0;

/// Bessel function of the first kind `J_n(x)` by Miller's backward recurrence.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > BESSEL_RANGE {
        return Err(Error::OutOfRange(x));
    }
    if x == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    let ax = x.abs();
    let order = n as usize;
    let scale = order.max(ax.ceil() as usize);
    let mut top = scale + 30 + (60.0 * scale as f64).sqrt() as usize;
    top += top % 2;
    let (mut next, mut cur) = (0.0f64, 1e-30f64);
    let mut even_sum = 0.0;
    let mut wanted = if order == top { cur } else { 0.0 };
    for k in (1..=top).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if (k - 1) % 2 == 0 {
            even_sum += cur;
        }
        if k - 1 == order {
            wanted = cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            even_sum *= 1e-250;
            wanted *= 1e-250;
        }
    }
    // J₀ + 2 Σ J_{2k} = 1
    let norm = 2.0 * even_sum - cur;
    let value = wanted / norm;
    Ok(if x < 0.0 && n % 2 == 1 { -value } else { value })
}

/// `β = Σ_{n≥1} 2 J_n(f)² sin(n Δφ) / n`, truncated once terms fall below 1e-12.
pub fn bus_beta(f: f64, phase_difference: f64) -> Result<f64> {
    let mut beta = 0.0;
    let mut n = 1u32;
    loop {
        let jn = bessel_j(n, f)?;
        let weight = 2.0 * jn * jn / n as f64;
        beta += weight * (n as f64 * phase_difference).sin();
        if weight < 1e-12 && n as f64 > f.abs() {
            return Ok(beta);
        }
        n += 1;
    }
}

/// Effective hopping `g_j g_k β_jk i / ν` between two bus-coupled nodes, `H[j, k]`.
pub fn bus_effective_coupling(g_j: f64, g_k: f64, nu: f64, f: f64, phi_j: f64, phi_k: f64) -> Result<Complex64> {
    if (f - FIRST_BESSEL_ZERO).abs() > 1e-2 {
        log::warn!("bus modulation index {f} is far from the first zero of J0; a static coupling leaks through");
    }
    let beta = bus_beta(f, phi_k - phi_j)?;
    Ok(Complex64::new(0.0, g_j * g_k * beta / nu))
}

/// Coupling `amplitude · cos(ν t + phase)` on one link, `to ← from`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulatedLink {
    pub to: usize,
    pub from: usize,
    /// Half the modulation amplitude.
    pub g: f64,
    pub nu: f64,
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case", deny_unknown_fields)]
pub enum Scheme {
    /// Fixed node frequencies, couplings `2g cos(ν t + φ)` with `ν = ω_to − ω_from`.
    TunableCoupler { frequencies: Vec<f64>, auxiliary_count: usize, links: Vec<ModulatedLink> },
    /// Nodes coupled to one bus mode with frequencies `ω_r + Δ cos(ν t − φ_j)`.
    BusResonator { bus_frequency: f64, amplitude: f64, modulation: f64, phases: Vec<f64>, couplings: Vec<f64> },
}

/// Lab-frame drive. `kerr` adds `−U/2 n(n−1)` on every qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriveSpec {
    pub scheme: Scheme,
    #[serde(default)]
    pub kerr: f64,
    #[serde(default)]
    pub statistics: Statistics,
}

/// One time-dependent piece `amplitude · cos(ν t + phase) · M`.
struct Modulated {
    matrix: DMatrix<Complex64>,
    amplitude: f64,
    nu: f64,
    phase: f64,
}

impl DriveSpec {
    /// Five-qubit coupler circuit whose effective model is `asgf(4, 2, π/2)` with `J₀ = g`.
    ///
    /// Frequencies `(0, 1, 2, 3, −2) · ratio · g`, so the smallest modulation frequency is `ratio · g`.
    pub fn four_node_coupler(g: f64, ratio: f64) -> Result<DriveSpec> {
        if !(g > 0.0) || !(ratio > 0.0) {
            return Err(Error::InvalidArgument(format!("g = {g}, ratio = {ratio}")));
        }
        let frequencies: Vec<f64> = [0.0, 1.0, 2.0, 3.0, -2.0].iter().map(|w| w * ratio * g).collect();
        let mut links = Vec::new();
        for j in 0..4 {
            let k = (j + 1) % 4;
            links.push(ModulatedLink { to: j, from: k, g, nu: frequencies[j] - frequencies[k], phase: -PI / 2.0 });
        }
        for j in 0..4 {
            links.push(ModulatedLink { to: j, from: 4, g: 2.0 * g, nu: frequencies[j] - frequencies[4], phase: 0.0 });
        }
        let drive = DriveSpec {
            scheme: Scheme::TunableCoupler { frequencies, auxiliary_count: 1, links },
            kerr: 0.0,
            statistics: Statistics::boson(),
        };
        drive.validate()?;
        Ok(drive)
    }

    /// Four nodes on a bus with `φ_j = jπ/2`, equal couplings `g` and `Δ = f ν`.
    pub fn four_node_bus(g: f64, modulation: f64, f: f64) -> Result<DriveSpec> {
        let drive = DriveSpec {
            scheme: Scheme::BusResonator {
                bus_frequency: 0.0,
                amplitude: f * modulation,
                modulation,
                phases: (1..=4).map(|j| j as f64 * PI / 2.0).collect(),
                couplings: vec![g; 4],
            },
            kerr: 0.0,
            statistics: Statistics::boson(),
        };
        drive.validate()?;
        Ok(drive)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.kerr.is_finite() {
            return Err(Error::InvalidArgument("non-finite Kerr".into()));
        }
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, auxiliary_count, links } => {
                let n = frequencies.len();
                if n < 2 || *auxiliary_count >= n {
                    return Err(Error::InvalidArgument(format!("{n} qubits with {auxiliary_count} auxiliaries")));
                }
                if frequencies.iter().any(|w| !w.is_finite()) {
                    return Err(Error::InvalidArgument("non-finite frequency".into()));
                }
                for l in links {
                    if l.to >= n || l.from >= n || l.to == l.from {
                        return Err(Error::SpecMismatch(format!("link ({}, {}) on {n} qubits", l.to, l.from)));
                    }
                    if ![l.g, l.nu, l.phase].iter().all(|v| v.is_finite()) {
                        return Err(Error::InvalidArgument("non-finite link parameter".into()));
                    }
                    let detuning = frequencies[l.to] - frequencies[l.from];
                    if (l.nu - detuning).abs() > 1e-9 * detuning.abs().max(1.0) {
                        return Err(Error::SpecMismatch(format!(
                            "link ({}, {}) modulated at {} but detuned by {detuning}",
                            l.to, l.from, l.nu
                        )));
                    }
                }
            }
            Scheme::BusResonator { bus_frequency, amplitude, modulation, phases, couplings } => {
                if phases.len() != couplings.len() || phases.len() < 2 {
                    return Err(Error::DimensionMismatch { expected: phases.len(), got: couplings.len() });
                }
                if !(*modulation > 0.0) || !bus_frequency.is_finite() || !amplitude.is_finite() {
                    return Err(Error::InvalidArgument("bus modulation must be positive and finite".into()));
                }
                let f = amplitude / modulation;
                if (f - FIRST_BESSEL_ZERO).abs() > 1e-2 {
                    return Err(Error::InvalidArgument(format!(
                        "modulation index {f} is not near the first zero of J0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Qubits plus, for the bus scheme, the bus mode last.
    pub fn n_sites(&self) -> usize {
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, .. } => frequencies.len(),
            Scheme::BusResonator { phases, .. } => phases.len() + 1,
        }
    }

    /// Fastest modulation frequency, which sets the step limit.
    pub fn max_frequency(&self) -> f64 {
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, .. } => {
                let hi = frequencies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lo = frequencies.iter().copied().fold(f64::INFINITY, f64::min);
                hi - lo
            }
            Scheme::BusResonator { modulation, .. } => *modulation,
        }
    }

    /// Frequency removed from every qubit before integration and restored as a phase.
    fn reference_frequency(&self) -> f64 {
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, .. } => {
                frequencies.iter().sum::<f64>() / frequencies.len() as f64
            }
            Scheme::BusResonator { bus_frequency, .. } => *bus_frequency,
        }
    }

    fn qubits(&self) -> usize {
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, .. } => frequencies.len(),
            Scheme::BusResonator { phases, .. } => phases.len(),
        }
    }

    fn add_kerr(&self, spec: &mut NetworkSpec) -> Result<()> {
        if self.kerr != 0.0 {
            for j in 0..self.qubits() {
                spec.add_onsite(j, self.kerr / 2.0, -self.kerr / 2.0)?;
            }
        }
        Ok(())
    }

    /// Static part and modulated pieces on `basis`, reference frequency removed.
    fn lab_parts(&self, basis: &SubspaceBasis) -> Result<(DMatrix<Complex64>, Vec<Modulated>)> {
        let n = self.n_sites();
        let blank = || NetworkSpec::empty(n, 0).with_statistics(self.statistics);
        let reference = self.reference_frequency();
        let mut fixed = blank();
        self.add_kerr(&mut fixed)?;
        let mut pieces = Vec::new();
        match &self.scheme {
            Scheme::TunableCoupler { frequencies, links, .. } => {
                for (j, w) in frequencies.iter().enumerate() {
                    fixed.add_onsite(j, w - reference, 0.0)?;
                }
                for l in links {
                    let mut unit = blank();
                    unit.add_hopping(l.to, l.from, 1.0, 0.0)?;
                    pieces.push(Modulated {
                        matrix: build_hamiltonian(&unit, basis)?.into_matrix(),
                        amplitude: 2.0 * l.g,
                        nu: l.nu,
                        phase: l.phase,
                    });
                }
            }
            Scheme::BusResonator { amplitude, modulation, phases, couplings, .. } => {
                let bus = phases.len();
                for (j, g) in couplings.iter().enumerate() {
                    fixed.add_hopping(j, bus, *g, 0.0)?;
                }
                for (j, phi) in phases.iter().enumerate() {
                    let mut unit = blank();
                    unit.add_onsite(j, 1.0, 0.0)?;
                    pieces.push(Modulated {
                        matrix: build_hamiltonian(&unit, basis)?.into_matrix(),
                        amplitude: *amplitude,
                        nu: *modulation,
                        phase: -phi,
                    });
                }
            }
        }
        Ok((build_hamiltonian(&fixed, basis)?.into_matrix(), pieces))
    }

    /// First-order effective model in the frame co-rotating with every qubit.
    pub fn effective_spec(&self) -> Result<NetworkSpec> {
        self.validate()?;
        let mut spec = match &self.scheme {
            Scheme::TunableCoupler { frequencies, auxiliary_count, links } => {
                let mut spec = NetworkSpec::empty(frequencies.len() - auxiliary_count, *auxiliary_count);
                for l in links {
                    spec.add_hopping(l.to, l.from, l.g, -l.phase)?;
                }
                spec
            }
            Scheme::BusResonator { .. } => {
                let m = self.bus_couplings()?;
                let n = m.nrows();
                let mut spec = NetworkSpec::empty(n, 0);
                for j in 0..n {
                    for k in j + 1..n {
                        let c = m[(j, k)];
                        if c.norm() > 1e-14 {
                            spec.add_hopping(j, k, c.norm(), c.arg())?;
                        }
                    }
                }
                spec
            }
        };
        spec = spec.with_statistics(self.statistics);
        self.add_kerr(&mut spec)?;
        Ok(spec)
    }

    /// Node-node effective couplings of the bus scheme, `H[j, k]`.
    pub fn bus_couplings(&self) -> Result<DMatrix<Complex64>> {
        let Scheme::BusResonator { amplitude, modulation, phases, couplings, .. } = &self.scheme else {
            return Err(Error::InvalidArgument("not a bus-resonator drive".into()));
        };
        let n = phases.len();
        let f = amplitude / modulation;
        let mut m = DMatrix::zeros(n, n);
        for j in 0..n {
            for k in 0..n {
                if j != k {
                    m[(j, k)] =
                        bus_effective_coupling(couplings[j], couplings[k], *modulation, f, phases[j], phases[k])?;
                }
            }
        }
        Ok(m)
    }
}

/// Integrates the lab-frame Schrödinger equation with classical RK4.
///
/// `samples` evenly spaced records on `[0, t_max]`; the step is shortened so that
/// records fall on step boundaries.
pub fn integrate_tdse(
    drive: &DriveSpec,
    n_excitations: usize,
    psi0: &[Complex64],
    t_max: f64,
    dt: f64,
    samples: usize,
) -> Result<Trajectory> {
    drive.validate()?;
    let basis = enumerate_basis(drive.n_sites(), n_excitations, drive.statistics)?;
    if psi0.len() != basis.dim() {
        return Err(Error::DimensionMismatch { expected: basis.dim(), got: psi0.len() });
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::BadInitial(format!("norm {norm} is not 1")));
    }
    let nu_max = drive.max_frequency();
    let limit = if nu_max > 0.0 { 2.0 * PI / (200.0 * nu_max) } else { f64::INFINITY };
    if !(dt > 0.0) || !(t_max > 0.0) || samples < 2 {
        return Err(Error::InvalidArgument(format!("dt = {dt}, t_max = {t_max}, samples = {samples}")));
    }
    if dt > limit {
        return Err(Error::StepTooLarge { dt, limit });
    }
    let (fixed, pieces) = drive.lab_parts(&basis)?;
    let intervals = samples - 1;
    let per = (t_max / intervals as f64 / dt).ceil() as usize;
    let h = t_max / (intervals * per) as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    let rhs = |t: f64, y: &DVector<Complex64>| -> DVector<Complex64> {
        let mut out = &fixed * y;
        for p in &pieces {
            let c = p.amplitude * (p.nu * t + p.phase).cos();
            if c != 0.0 {
                out += (&p.matrix * y) * Complex64::new(c, 0.0);
            }
        }
        out * minus_i
    };
    let reference = drive.reference_frequency() * n_excitations as f64;
    let occ = basis.occupation_table();
    let n = basis.n_sites();
    let mut y = DVector::from_column_slice(psi0);
    let mut times = Vec::with_capacity(samples);
    let mut amplitudes = Vec::with_capacity(samples);
    let mut populations = Vec::with_capacity(samples);
    let mut record = |t: f64, y: &DVector<Complex64>| {
        let phase = Complex64::from_polar(1.0, -reference * t);
        let amp: Vec<Complex64> = y.iter().map(|z| z * phase).collect();
        populations.push(site_populations(&amp, &occ, n));
        amplitudes.push(amp);
        times.push(t);
    };
    record(0.0, &y);
    let half = Complex64::new(h / 2.0, 0.0);
    let full = Complex64::new(h, 0.0);
    let sixth = Complex64::new(h / 6.0, 0.0);
    let two = Complex64::new(2.0, 0.0);
    for i in 0..intervals {
        for s in 0..per {
            let t = (i * per + s) as f64 * h;
            let k1 = rhs(t, &y);
            let k2 = rhs(t + h / 2.0, &(&y + &k1 * half));
            let k3 = rhs(t + h / 2.0, &(&y + &k2 * half));
            let k4 = rhs(t + h, &(&y + &k3 * full));
            y += (k1 + k2 * two + k3 * two + k4) * sixth;
        }
        record(t_max * (i + 1) as f64 / intervals as f64, &y);
    }
    let mut labels: Vec<String> = (1..=n).map(|j| format!("node_{j}")).collect();
    if let Scheme::BusResonator { .. } = drive.scheme {
        labels[n - 1] = "bus".into();
    }
    Ok(Trajectory { times, amplitudes, populations, labels })
}

/// Worst population mismatch between lab and effective evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveComparison {
    /// Smallest modulation frequency over the weakest coupling.
    pub ratio: f64,
    pub max_deviation: f64,
    pub worst_time: f64,
    pub worst_site: usize,
}

/// Records per comparison.
const COMPARISON_SAMPLES: usize = 801;

/// Integrates `drive` and `target` from `psi0` over `[0, t_max]` and compares site populations.
///
/// Sites the target lacks (a bus mode) are compared against zero.
pub fn compare_effective(
    drive: &DriveSpec,
    target: &NetworkSpec,
    n_excitations: usize,
    psi0: &[Complex64],
    t_max: f64,
) -> Result<EffectiveComparison> {
    let nu_max = drive.max_frequency();
    let dt = if nu_max > 0.0 { 2.0 * PI / (1000.0 * nu_max) } else { t_max / 1000.0 };
    let lab = integrate_tdse(drive, n_excitations, psi0, t_max, dt, COMPARISON_SAMPLES)?;
    let (basis, h) = target.hamiltonian(n_excitations)?;
    let lab_basis = enumerate_basis(drive.n_sites(), n_excitations, drive.statistics)?;
    // restrict the lab state to the target's sites
    let m = target.n_sites();
    if m > drive.n_sites() {
        return Err(Error::SpecMismatch(format!("target has {m} sites, drive {}", drive.n_sites())));
    }
    let start: Vec<Complex64> = basis
        .states()
        .iter()
        .map(|s| {
            let mut occ = s.clone();
            occ.resize(drive.n_sites(), 0);
            lab_basis.index_of(&occ).map(|i| psi0[i]).unwrap_or_default()
        })
        .collect();
    let eff = evolve(&h, &basis, &start, &lab.times)?;
    let mut out = EffectiveComparison { ratio: 0.0, max_deviation: 0.0, worst_time: 0.0, worst_site: 0 };
    for (i, (pl, pe)) in lab.populations.iter().zip(&eff.populations).enumerate() {
        for (site, p) in pl.iter().enumerate() {
            let d = (p - pe.get(site).copied().unwrap_or(0.0)).abs();
            if d > out.max_deviation {
                out.max_deviation = d;
                out.worst_time = lab.times[i];
                out.worst_site = site;
            }
        }
    }
    out.ratio = match &drive.scheme {
        Scheme::TunableCoupler { links, .. } => {
            let g = links.iter().map(|l| l.g).filter(|g| *g > 0.0).fold(f64::INFINITY, f64::min);
            links.iter().map(|l| l.nu.abs()).fold(f64::INFINITY, f64::min) / g
        }
        Scheme::BusResonator { modulation, couplings, .. } => {
            modulation / couplings.iter().copied().fold(0.0f64, f64::max)
        }
    };
    Ok(out)
}

/// One chiral cycle of `asgf(4, 2, π/2)` with unit hopping.
pub const CHIRAL_CYCLE: f64 = PI;

/// Deviation of the four-node coupler circuit from `asgf(4, 2, π/2)` over one cycle, per ratio.
pub fn coupler_deviation_scan(ratios: &[f64]) -> Result<Vec<EffectiveComparison>> {
    let target = asgf(4, 2.0, PI / 2.0)?;
    ratios
        .par_iter()
        .map(|&r| {
            let drive = DriveSpec::four_node_coupler(1.0, r)?;
            let basis = enumerate_basis(5, 1, drive.statistics)?;
            compare_effective(&drive, &target, 1, &basis.single_excitation(0)?, CHIRAL_CYCLE)
        })
        .collect()
}

/// Writes `ratio,max_deviation,worst_time,worst_site` rows.
pub fn write_scan_csv<W: Write>(rows: &[EffectiveComparison], mut w: W) -> std::io::Result<()> {
    writeln!(w, "ratio,max_deviation,worst_time,worst_site")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", sig12(r.ratio), sig12(r.max_deviation), sig12(r.worst_time), r.worst_site + 1)?;
    }
    Ok(())
}
