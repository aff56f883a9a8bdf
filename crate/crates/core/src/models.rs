//! Network specifications: gauge rings, auxiliary-node networks, ladders and spin models.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{build_hamiltonian, enumerate_basis, HermitianMatrix, Statistics, SubspaceBasis};

/// Wraps an angle into (−π, π].
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// `amplitude · e^{i phase} a_to† a_from + h.c.`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hopping {
    pub to: usize,
    pub from: usize,
    pub amplitude: f64,
    pub phase: f64,
}

impl Hopping {
    pub fn complex_amplitude(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase)
    }
}

/// `detuning · n + kerr · n²` on a site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnSite {
    pub site: usize,
    pub detuning: f64,
    pub kerr: f64,
}

/// Declarative network: ring nodes first, auxiliary nodes appended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecData", into = "SpecData")]
pub struct NetworkSpec {
    n_network: usize,
    auxiliary_count: usize,
    hoppings: Vec<Hopping>,
    onsite: Vec<OnSite>,
    statistics: Statistics,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecData {
    n_network: usize,
    auxiliary_count: usize,
    hoppings: Vec<Hopping>,
    #[serde(default)]
    onsite: Vec<OnSite>,
    #[serde(default)]
    statistics: Statistics,
    #[serde(default)]
    labels: Option<Vec<String>>,
}

impl TryFrom<SpecData> for NetworkSpec {
    type Error = Error;

    fn try_from(d: SpecData) -> Result<Self> {
        let mut spec = NetworkSpec::empty(d.n_network, d.auxiliary_count);
        spec.statistics = d.statistics;
        if let Some(labels) = d.labels {
            if labels.len() != spec.n_sites() {
                return Err(Error::SpecMismatch(format!(
                    "{} labels for {} sites",
                    labels.len(),
                    spec.n_sites()
                )));
            }
            spec.labels = labels;
        }
        for h in d.hoppings {
            spec.add_hopping(h.to, h.from, h.amplitude, h.phase)?;
        }
        for o in d.onsite {
            spec.add_onsite(o.site, o.detuning, o.kerr)?;
        }
        Ok(spec)
    }
}

impl From<NetworkSpec> for SpecData {
    fn from(s: NetworkSpec) -> Self {
        SpecData {
            n_network: s.n_network,
            auxiliary_count: s.auxiliary_count,
            hoppings: s.hoppings,
            onsite: s.onsite,
            statistics: s.statistics,
            labels: Some(s.labels),
        }
    }
}

impl NetworkSpec {
    /// Spec with no terms. Network nodes are labelled `1..n`, auxiliaries `c` or `c1..cN`.
    pub fn empty(n_network: usize, auxiliary_count: usize) -> Self {
        let mut labels: Vec<String> = (1..=n_network).map(|j| j.to_string()).collect();
        if auxiliary_count == 1 {
            labels.push("c".into());
        } else {
            labels.extend((1..=auxiliary_count).map(|i| format!("c{i}")));
        }
        NetworkSpec {
            n_network,
            auxiliary_count,
            hoppings: Vec::new(),
            onsite: Vec::new(),
            statistics: Statistics::boson(),
            labels,
        }
    }

    /// Adds a hopping, storing negative amplitudes as a π phase shift.
    pub fn add_hopping(&mut self, to: usize, from: usize, amplitude: f64, phase: f64) -> Result<()> {
        let n = self.n_sites();
        if to >= n || from >= n || to == from {
            return Err(Error::SpecMismatch(format!("hopping ({to}, {from}) on {n} sites")));
        }
        if !amplitude.is_finite() || !phase.is_finite() {
            return Err(Error::InvalidArgument("non-finite hopping".into()));
        }
        if self.hopping_between(to, from).is_some() {
            return Err(Error::SpecMismatch(format!("pair ({to}, {from}) already coupled")));
        }
        let (amplitude, phase) = if amplitude < 0.0 { (-amplitude, phase + PI) } else { (amplitude, phase) };
        self.hoppings.push(Hopping { to, from, amplitude, phase: wrap_phase(phase) });
        Ok(())
    }

    pub fn add_onsite(&mut self, site: usize, detuning: f64, kerr: f64) -> Result<()> {
        if site >= self.n_sites() {
            return Err(Error::SpecMismatch(format!("on-site term at {site}")));
        }
        if !detuning.is_finite() || !kerr.is_finite() {
            return Err(Error::InvalidArgument("non-finite on-site term".into()));
        }
        if let Some(o) = self.onsite.iter_mut().find(|o| o.site == site) {
            o.detuning += detuning;
            o.kerr += kerr;
        } else {
            self.onsite.push(OnSite { site, detuning, kerr });
        }
        Ok(())
    }

    pub fn n_network(&self) -> usize {
        self.n_network
    }

    pub fn auxiliary_count(&self) -> usize {
        self.auxiliary_count
    }

    pub fn n_sites(&self) -> usize {
        self.n_network + self.auxiliary_count
    }

    pub fn hoppings(&self) -> &[Hopping] {
        &self.hoppings
    }

    pub fn onsite(&self) -> &[OnSite] {
        &self.onsite
    }

    pub fn statistics(&self) -> Statistics {
        self.statistics
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ring_nodes(&self) -> Vec<usize> {
        (0..self.n_network).collect()
    }

    pub fn with_statistics(mut self, statistics: Statistics) -> Self {
        self.statistics = statistics;
        self
    }

    fn hopping_between(&self, a: usize, b: usize) -> Option<&Hopping> {
        self.hoppings
            .iter()
            .find(|h| (h.to == a && h.from == b) || (h.to == b && h.from == a))
    }

    /// Phase of the `a_a† a_b` coefficient, if the pair is coupled.
    pub fn directed_phase(&self, a: usize, b: usize) -> Option<f64> {
        self.hopping_between(a, b)
            .map(|h| if h.to == a { h.phase } else { -h.phase })
    }

    /// Sum of directed phases along the closed loop `nodes[0] → nodes[1] → … → nodes[0]`, wrapped.
    pub fn loop_flux(&self, nodes: &[usize]) -> Result<f64> {
        if nodes.len() < 2 {
            return Err(Error::InvalidArgument("loop needs two nodes".into()));
        }
        let mut total = 0.0;
        for i in 0..nodes.len() {
            let (a, b) = (nodes[i], nodes[(i + 1) % nodes.len()]);
            total += self
                .directed_phase(a, b)
                .ok_or_else(|| Error::SpecMismatch(format!("no link between {a} and {b}")))?;
        }
        Ok(wrap_phase(total))
    }

    /// Flux through the ring `1 → 2 → … → n`.
    pub fn ring_flux(&self) -> Result<f64> {
        self.loop_flux(&self.ring_nodes())
    }

    /// Basis and Hamiltonian block with `n_excitations` quanta.
    pub fn hamiltonian(&self, n_excitations: usize) -> Result<(SubspaceBasis, HermitianMatrix)> {
        let basis = enumerate_basis(self.n_sites(), n_excitations, self.statistics)?;
        let h = build_hamiltonian(self, &basis)?;
        Ok((basis, h))
    }

    /// Single-excitation Hamiltonian, indexed by site.
    pub fn single_particle(&self) -> HermitianMatrix {
        self.hamiltonian(1).expect("single-excitation block always exists").1
    }

    /// New spec with every hopping replaced by `f(hopping) = (amplitude, phase)`.
    pub fn map_hoppings(&self, mut f: impl FnMut(&Hopping) -> (f64, f64)) -> Result<NetworkSpec> {
        let mut out = NetworkSpec { hoppings: Vec::new(), ..self.clone() };
        for h in &self.hoppings {
            let (a, p) = f(h);
            out.add_hopping(h.to, h.from, a, p)?;
        }
        Ok(out)
    }
}

/// How ring phases are distributed for a given total flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaugeChoice {
    Symmetric,
    Landau,
    /// Symmetric gauge followed by a site-phase transformation.
    Custom(Vec<f64>),
}

/// Ring node positions on the unit circle, counter-clockwise with node index.
fn ring_position(j: usize, n: usize) -> (f64, f64) {
    let a = 2.0 * PI * j as f64 / n as f64;
    (a.cos(), a.sin())
}

/// Site phases taking the symmetric gauge (uniform field, per-link phase `link_phase`)
/// to the Landau gauge `A = (−By, 0)` with the nodes on the unit circle.
pub fn landau_site_phases(n: usize, link_phase: f64) -> Vec<f64> {
    let b = landau_field(n, link_phase);
    (0..n)
        .map(|j| {
            let (x, y) = ring_position(j, n);
            -b * x * y / 2.0
        })
        .collect()
}

/// Field strength whose flux through one centre triangle reproduces `link_phase`.
pub fn landau_field(n: usize, link_phase: f64) -> f64 {
    let triangle = (2.0 * PI / n as f64).sin() / 2.0;
    -link_phase / triangle
}

/// Nearest-neighbour ring with unit amplitude and total flux `flux`.
pub fn sgf_ring(n: usize, flux: f64, gauge: GaugeChoice) -> Result<NetworkSpec> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("ring needs n >= 3, got {n}")));
    }
    if !flux.is_finite() {
        return Err(Error::BadGauge("non-finite flux".into()));
    }
    let per_link = flux / n as f64;
    let mut spec = NetworkSpec::empty(n, 0);
    for j in 0..n {
        spec.add_hopping(j, (j + 1) % n, 1.0, per_link)?;
    }
    match gauge {
        GaugeChoice::Symmetric => Ok(spec),
        GaugeChoice::Landau => gauge_transform(&spec, &landau_site_phases(n, per_link)),
        GaugeChoice::Custom(phi) => {
            if phi.len() != n {
                return Err(Error::BadGauge(format!("{} site phases for {n} nodes", phi.len())));
            }
            if phi.iter().any(|p| !p.is_finite()) {
                return Err(Error::BadGauge("non-finite site phase".into()));
            }
            gauge_transform(&spec, &phi)
        }
    }
}

/// Ring with phase `nn_phase` per link plus one auxiliary node coupled with real `beta`.
pub fn asgf(n: usize, beta: f64, nn_phase: f64) -> Result<NetworkSpec> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("ring needs n >= 3, got {n}")));
    }
    if !(beta >= 0.0) {
        return Err(Error::InvalidArgument(format!("auxiliary coupling {beta} must be >= 0")));
    }
    let mut spec = NetworkSpec::empty(n, 1);
    for j in 0..n {
        spec.add_hopping(j, (j + 1) % n, 1.0, nn_phase)?;
    }
    for j in 0..n {
        spec.add_hopping(j, n, beta, 0.0)?;
    }
    Ok(spec)
}

/// Next-nearest-neighbour amplitude of the five-node chiral network.
pub fn five_node_nnn() -> f64 {
    ((3.0 - 5f64.sqrt()) / 2.0).sqrt()
}

/// Auxiliary coupling of the five-node chiral network.
pub fn five_node_aux() -> f64 {
    5.0 * (2.0 / (5.0 + 5f64.sqrt())).sqrt()
}

/// Perfect chiral networks with known couplings, n ∈ {4, 5, 6}.
pub fn chiral_n_node(n: usize) -> Result<NetworkSpec> {
    let (nn, nnn, aux) = match n {
        4 => return asgf(4, 2.0, PI / 2.0),
        5 => ((1.0, -PI / 2.0), (five_node_nnn(), PI / 2.0), (five_node_aux(), PI)),
        6 => ((1.0, PI / 2.0), (1.0 / 3.0, PI / 2.0), (2f64.sqrt(), PI)),
        _ => return Err(Error::NotDerived(n)),
    };
    let mut spec = NetworkSpec::empty(n, 1);
    for j in 0..n {
        spec.add_hopping(j, (j + 1) % n, nn.0, nn.1)?;
    }
    for j in 0..n {
        spec.add_hopping(j, (j + 2) % n, nnn.0, nnn.1)?;
    }
    for j in 0..n {
        spec.add_hopping(j, n, aux.0, aux.1)?;
    }
    Ok(spec)
}

/// Ladder of `copies` four-node cells around a ring of `2·copies + 2` nodes.
///
/// Auxiliary `i` couples to nodes `{i, i+1, 2N+2−i, 2N+3−i}` (1-based). Its
/// coupling is `profile[d]` with `d` the distance to the nearest end copy.
pub fn ladder(copies: usize, profile: &[f64]) -> Result<NetworkSpec> {
    if copies == 0 {
        return Err(Error::InvalidArgument("ladder needs at least one copy".into()));
    }
    let expected = copies.div_ceil(2);
    if profile.len() != expected && profile.len() != 1 {
        return Err(Error::ProfileLength { expected, got: profile.len() });
    }
    if profile.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidArgument("non-finite coupling".into()));
    }
    let ring = 2 * copies + 2;
    let mut spec = NetworkSpec::empty(ring, copies);
    for j in 0..ring {
        spec.add_hopping(j, (j + 1) % ring, 1.0, PI / 2.0)?;
    }
    for i in 1..=copies {
        let d = (i - 1).min(copies - i);
        let beta = if profile.len() == 1 { profile[0] } else { profile[d] };
        let aux = ring + i - 1;
        for node in ladder_copy_nodes(copies, i) {
            spec.add_hopping(node, aux, beta, 0.0)?;
        }
    }
    Ok(spec)
}

/// 0-based ring nodes of copy `i` (1-based).
pub fn ladder_copy_nodes(copies: usize, i: usize) -> [usize; 4] {
    let n = copies;
    [i - 1, i, 2 * n + 1 - i, 2 * n + 2 - i]
}

/// 0-based corner nodes `{1, N+1, N+2, 2N+2}` in chiral order.
pub fn ladder_corners(copies: usize) -> [usize; 4] {
    [0, copies, copies + 1, 2 * copies + 1]
}

/// Applies `θ_jk → θ_jk + φ_j − φ_k` to every hopping.
pub fn gauge_transform(spec: &NetworkSpec, site_phases: &[f64]) -> Result<NetworkSpec> {
    if site_phases.len() != spec.n_sites() {
        return Err(Error::DimensionMismatch { expected: spec.n_sites(), got: site_phases.len() });
    }
    if site_phases.iter().any(|p| !p.is_finite()) {
        return Err(Error::InvalidArgument("non-finite site phase".into()));
    }
    spec.map_hoppings(|h| (h.amplitude, h.phase + site_phases[h.to] - site_phases[h.from]))
}

/// Unitary involution anticommuting with the chiral Hamiltonians.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiralOperator {
    pub matrix: DMatrix<Complex64>,
    pub involutive: bool,
}

/// Chiral operator for an n-node ring, optionally with an appended auxiliary.
///
/// With the auxiliary: node 1 fixed, nodes 2…n reversed, −1 on the auxiliary.
/// Without: alternating signs for even n, the anti-diagonal for odd n.
pub fn chiral_operator(n: usize, with_auxiliary: bool) -> Result<ChiralOperator> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("ring needs n >= 3, got {n}")));
    }
    let one = Complex64::new(1.0, 0.0);
    let dim = n + with_auxiliary as usize;
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    if with_auxiliary {
        m[(0, 0)] = one;
        for j in 1..n {
            m[(j, n - j)] = one;
        }
        m[(n, n)] = -one;
    } else if n % 2 == 0 {
        for j in 0..n {
            m[(j, j)] = if j % 2 == 0 { one } else { -one };
        }
    } else {
        for j in 0..n {
            m[(j, n - 1 - j)] = one;
        }
    }
    let sq = &m * &m;
    let involutive = (&sq - DMatrix::<Complex64>::identity(dim, dim))
        .iter()
        .all(|z| z.norm() < 1e-15);
    Ok(ChiralOperator { matrix: m, involutive })
}

/// Ring reflection fixing node 1 (the network block of the auxiliary form).
///
/// It anticommutes with a ring Hamiltonian only when every link phase is ±π/2.
pub fn reflection_operator(n: usize) -> Result<ChiralOperator> {
    let full = chiral_operator(n, true)?;
    let matrix = full.matrix.view((0, 0), (n, n)).into_owned();
    Ok(ChiralOperator { matrix, involutive: full.involutive })
}

/// Three-spin chiral interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeBodyKind {
    /// `κ C_z S_z`
    Asi,
    /// `κ C_z`
    Sci,
}

fn pauli() -> [DMatrix<Complex64>; 3] {
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    [
        DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        DMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    ]
}

/// Operator acting as `ops[k]` on spin `k` of a three-spin product space (up first).
fn kron3(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, c: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    a.kronecker(b).kronecker(c)
}

/// Scalar spin chirality `σ₁·(σ₂×σ₃)` on the 8-dim product space.
pub fn scalar_chirality() -> DMatrix<Complex64> {
    let s = pauli();
    let mut out = DMatrix::<Complex64>::zeros(8, 8);
    for (a, b, c, sign) in [
        (0, 1, 2, 1.0),
        (1, 2, 0, 1.0),
        (2, 0, 1, 1.0),
        (0, 2, 1, -1.0),
        (2, 1, 0, -1.0),
        (1, 0, 2, -1.0),
    ] {
        out += kron3(&s[a], &s[b], &s[c]) * Complex64::new(sign, 0.0);
    }
    out
}

/// Total `S_z = Σ σ_z / 2` on three spins.
pub fn total_sz() -> DMatrix<Complex64> {
    let s = pauli();
    let id = DMatrix::<Complex64>::identity(2, 2);
    (kron3(&s[2], &id, &id) + kron3(&id, &s[2], &id) + kron3(&id, &id, &s[2])) * Complex64::new(0.5, 0.0)
}

/// Full 8×8 three-spin Hamiltonian in the product basis ordered as [`crate::hilbert::product_index`].
pub fn three_body_spin(kind: ThreeBodyKind, kappa: f64) -> HermitianMatrix {
    let c = scalar_chirality();
    let m = match kind {
        ThreeBodyKind::Sci => c,
        ThreeBodyKind::Asi => &c * total_sz(),
    } * Complex64::new(kappa, 0.0);
    HermitianMatrix::try_from_matrix(m).expect("Pauli products are Hermitian")
}
