//! Pure states, density operators, tensor products, partial traces and
//! outcome branching over a small labeled Hilbert space.
//!
//! The single-photon basis has three sigma modes (`A`, `B` and the alternate
//! port `A2`) and three pi modes (`A`, `B`, `B2`). A composite basis label is
//! an ordered tuple of optional tensor factors: sigma mode, pi mode and two
//! detector registers. All states are immutable after construction and every
//! operation is a pure function, so values can be shared freely across
//! concurrent sweep workers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::{Error, Result};

/// Branches below this probability carry no normalized state and are flagged
/// degenerate instead.
pub const PROB_EPSILON: f64 = 1e-12;

/// Tolerance for normalization, hermiticity and trace checks.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Tolerance below which negative density-operator eigenvalues are treated as
/// round-off.
pub const EIGEN_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Particle {
    Sigma,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Port {
    Primary,
    Alternate,
}

/// A single-photon mode. The alternate port exists only for the sigma photon
/// at site A and the pi photon at site B, the two ports split off by the
/// beamsplitters of the which-way measurement devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ModeLabel {
    pub particle: Particle,
    pub site: Site,
    pub port: Port,
}

impl ModeLabel {
    pub fn new(particle: Particle, site: Site, port: Port) -> Result<Self> {
        if port == Port::Alternate
            && !matches!(
                (particle, site),
                (Particle::Sigma, Site::A) | (Particle::Pi, Site::B)
            )
        {
            return Err(Error::InvalidAlternatePort);
        }
        Ok(ModeLabel {
            particle,
            site,
            port,
        })
    }

    pub fn sigma(site: Site) -> Self {
        ModeLabel {
            particle: Particle::Sigma,
            site,
            port: Port::Primary,
        }
    }

    pub fn pi(site: Site) -> Self {
        ModeLabel {
            particle: Particle::Pi,
            site,
            port: Port::Primary,
        }
    }

    pub fn sigma_alternate() -> Self {
        ModeLabel {
            particle: Particle::Sigma,
            site: Site::A,
            port: Port::Alternate,
        }
    }

    pub fn pi_alternate() -> Self {
        ModeLabel {
            particle: Particle::Pi,
            site: Site::B,
            port: Port::Alternate,
        }
    }

    /// The designated alternate port for this primary mode, if one exists.
    pub fn alternate(&self) -> Result<ModeLabel> {
        ModeLabel::new(self.particle, self.site, Port::Alternate)
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.particle {
            Particle::Sigma => "sigma",
            Particle::Pi => "pi",
        };
        let s = match self.site {
            Site::A => "A",
            Site::B => "B",
        };
        let alt = match self.port {
            Port::Primary => "",
            Port::Alternate => "2",
        };
        write!(f, "{p}_{s}{alt}")
    }
}

/// Sigma-photon path modes in the fixed global ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SigmaMode {
    A,
    B,
    A2,
}

/// Pi-photon path modes in the fixed global ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PiMode {
    A,
    B,
    B2,
}

impl SigmaMode {
    pub fn name(&self) -> &'static str {
        match self {
            SigmaMode::A => "sigma_A",
            SigmaMode::B => "sigma_B",
            SigmaMode::A2 => "sigma_A2",
        }
    }
}

impl PiMode {
    pub fn name(&self) -> &'static str {
        match self {
            PiMode::A => "pi_A",
            PiMode::B => "pi_B",
            PiMode::B2 => "pi_B2",
        }
    }
}

impl TryFrom<ModeLabel> for SigmaMode {
    type Error = Error;
    fn try_from(m: ModeLabel) -> Result<SigmaMode> {
        match (m.particle, m.site, m.port) {
            (Particle::Sigma, Site::A, Port::Primary) => Ok(SigmaMode::A),
            (Particle::Sigma, Site::B, Port::Primary) => Ok(SigmaMode::B),
            (Particle::Sigma, Site::A, Port::Alternate) => Ok(SigmaMode::A2),
            _ => Err(Error::MalformedSelector),
        }
    }
}

impl TryFrom<ModeLabel> for PiMode {
    type Error = Error;
    fn try_from(m: ModeLabel) -> Result<PiMode> {
        match (m.particle, m.site, m.port) {
            (Particle::Pi, Site::A, Port::Primary) => Ok(PiMode::A),
            (Particle::Pi, Site::B, Port::Primary) => Ok(PiMode::B),
            (Particle::Pi, Site::B, Port::Alternate) => Ok(PiMode::B2),
            _ => Err(Error::MalformedSelector),
        }
    }
}

/// Which-way measurement devices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeviceId {
    M1,
    M2,
}

impl DeviceId {
    pub fn name(&self) -> &'static str {
        match self {
            DeviceId::M1 => "M1",
            DeviceId::M2 => "M2",
        }
    }
}

/// Classical register value of a measurement device. `NoClick` is the
/// device ground state |0>, `Click` the fired state |1>, and `AbsorbedLoss`
/// tags weight dumped by a lossy element rather than a detector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RegisterValue {
    NoClick,
    Click,
    AbsorbedLoss,
}

impl RegisterValue {
    pub fn name(&self) -> &'static str {
        match self {
            RegisterValue::NoClick => "no_click",
            RegisterValue::Click => "click",
            RegisterValue::AbsorbedLoss => "absorbed_loss",
        }
    }
}

/// Composite basis label. Factors that are not part of a given state are
/// `None`; all labels within one state must carry the same set of factors.
/// The derived ordering (sigma, then pi, then registers) is the fixed global
/// basis ordering used for serialized reports.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub sigma: Option<SigmaMode>,
    pub pi: Option<PiMode>,
    pub m1: Option<RegisterValue>,
    pub m2: Option<RegisterValue>,
}

impl Label {
    pub fn biphoton(sigma: SigmaMode, pi: PiMode) -> Self {
        Label {
            sigma: Some(sigma),
            pi: Some(pi),
            m1: None,
            m2: None,
        }
    }

    pub fn sigma_only(sigma: SigmaMode) -> Self {
        Label {
            sigma: Some(sigma),
            pi: None,
            m1: None,
            m2: None,
        }
    }

    pub fn pi_only(pi: PiMode) -> Self {
        Label {
            sigma: None,
            pi: Some(pi),
            m1: None,
            m2: None,
        }
    }

    pub fn register_only(device: DeviceId, value: RegisterValue) -> Self {
        let mut l = Label {
            sigma: None,
            pi: None,
            m1: None,
            m2: None,
        };
        l.set_register(device, value);
        l
    }

    pub fn register(&self, device: DeviceId) -> Option<RegisterValue> {
        match device {
            DeviceId::M1 => self.m1,
            DeviceId::M2 => self.m2,
        }
    }

    pub fn set_register(&mut self, device: DeviceId, value: RegisterValue) {
        match device {
            DeviceId::M1 => self.m1 = Some(value),
            DeviceId::M2 => self.m2 = Some(value),
        }
    }

    fn signature(&self) -> u8 {
        (self.sigma.is_some() as u8)
            | (self.pi.is_some() as u8) << 1
            | (self.m1.is_some() as u8) << 2
            | (self.m2.is_some() as u8) << 3
    }

    fn disjoint(&self, other: &Label) -> bool {
        self.signature() & other.signature() == 0
    }

    fn merge(&self, other: &Label) -> Label {
        Label {
            sigma: self.sigma.or(other.sigma),
            pi: self.pi.or(other.pi),
            m1: self.m1.or(other.m1),
            m2: self.m2.or(other.m2),
        }
    }

    /// Whether this label occupies the given single-photon mode.
    pub fn occupies(&self, mode: ModeLabel) -> bool {
        match mode.particle {
            Particle::Sigma => SigmaMode::try_from(mode)
                .map(|m| self.sigma == Some(m))
                .unwrap_or(false),
            Particle::Pi => PiMode::try_from(mode)
                .map(|m| self.pi == Some(m))
                .unwrap_or(false),
        }
    }

    fn with_sigma(&self, sigma: SigmaMode) -> Label {
        Label {
            sigma: Some(sigma),
            ..*self
        }
    }

    fn with_pi(&self, pi: PiMode) -> Label {
        Label {
            pi: Some(pi),
            ..*self
        }
    }

    /// Replace the occupied `from` mode with `to` (same particle).
    pub fn reroute(&self, from: ModeLabel, to: ModeLabel) -> Label {
        debug_assert!(self.occupies(from));
        match from.particle {
            Particle::Sigma => self.with_sigma(SigmaMode::try_from(to).unwrap()),
            Particle::Pi => self.with_pi(PiMode::try_from(to).unwrap()),
        }
    }

    fn project(&self, keep: &[Factor]) -> Label {
        Label {
            sigma: if keep.contains(&Factor::Sigma) {
                self.sigma
            } else {
                None
            },
            pi: if keep.contains(&Factor::Pi) {
                self.pi
            } else {
                None
            },
            m1: if keep.contains(&Factor::M1) {
                self.m1
            } else {
                None
            },
            m2: if keep.contains(&Factor::M2) {
                self.m2
            } else {
                None
            },
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if let Some(s) = self.sigma {
            parts.push(s.name().to_string());
        }
        if let Some(p) = self.pi {
            parts.push(p.name().to_string());
        }
        if let Some(r) = self.m1 {
            parts.push(format!("M1:{}", r.name()));
        }
        if let Some(r) = self.m2 {
            parts.push(format!("M2:{}", r.name()));
        }
        write!(f, "{}", parts.join("|"))
    }
}

/// Tensor-factor selector for partial traces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    Sigma,
    Pi,
    M1,
    M2,
}

impl Factor {
    fn present_in(&self, sig: u8) -> bool {
        let bit = match self {
            Factor::Sigma => 1,
            Factor::Pi => 2,
            Factor::M1 => 4,
            Factor::M2 => 8,
        };
        sig & bit != 0
    }
}

// ---------------------------------------------------------------------------
// Pure states
// ---------------------------------------------------------------------------

/// A normalized pure state as a sparse complex amplitude map. Zero
/// amplitudes are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: BTreeMap<Label, Complex64>,
}

impl PureState {
    /// Build a normalized state from amplitude entries. Duplicate labels
    /// accumulate. Input order is irrelevant.
    pub fn from_amplitudes(
        entries: impl IntoIterator<Item = (Label, Complex64)>,
    ) -> Result<PureState> {
        let mut amps: BTreeMap<Label, Complex64> = BTreeMap::new();
        for (label, amp) in entries {
            *amps.entry(label).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        amps.retain(|_, a| a.norm_sqr() > 0.0);
        let mut sig = None;
        for label in amps.keys() {
            match sig {
                None => sig = Some(label.signature()),
                Some(s) if s != label.signature() => return Err(Error::SignatureMismatch),
                _ => {}
            }
        }
        let state = PureState { amps };
        state.normalized()
    }

    pub fn basis_ket(label: Label) -> PureState {
        let mut amps = BTreeMap::new();
        amps.insert(label, Complex64::new(1.0, 0.0));
        PureState { amps }
    }

    pub fn norm(&self) -> f64 {
        self.amps
            .values()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn normalized(&self) -> Result<PureState> {
        let n = self.norm();
        if n <= PROB_EPSILON {
            return Err(Error::NullState);
        }
        let inv = Complex64::new(1.0 / n, 0.0);
        Ok(PureState {
            amps: self.amps.iter().map(|(l, a)| (*l, a * inv)).collect(),
        })
    }

    pub fn amplitude(&self, label: &Label) -> Complex64 {
        self.amps
            .get(label)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn amplitudes(&self) -> impl Iterator<Item = (&Label, &Complex64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub(crate) fn from_map_unchecked(amps: BTreeMap<Label, Complex64>) -> PureState {
        PureState { amps }
    }

    pub fn signature(&self) -> u8 {
        self.amps.keys().next().map(|l| l.signature()).unwrap_or(0)
    }

    /// Tensor product. Factor sets must be disjoint.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let (sa, sb) = (self.signature(), other.signature());
        if sa & sb != 0 {
            return Err(Error::OverlappingFactors);
        }
        let mut amps = BTreeMap::new();
        for (la, aa) in &self.amps {
            for (lb, ab) in &other.amps {
                debug_assert!(la.disjoint(lb));
                amps.insert(la.merge(lb), aa * ab);
            }
        }
        Ok(PureState { amps })
    }

    /// Total occupation probability of a single-photon mode.
    pub fn mode_population(&self, mode: ModeLabel) -> f64 {
        self.amps
            .iter()
            .filter(|(l, _)| l.occupies(mode))
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }
}

// ---------------------------------------------------------------------------
// Density operators
// ---------------------------------------------------------------------------

/// A density operator as a dense Hermitian matrix over an explicit ordered
/// basis of composite labels. The basis is always sorted in the fixed global
/// ordering.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityOperator {
    basis: Vec<Label>,
    matrix: CMatrix,
}

impl DensityOperator {
    pub fn from_pure(psi: &PureState) -> DensityOperator {
        let basis: Vec<Label> = psi.amps.keys().copied().collect();
        let amps: Vec<Complex64> = psi.amps.values().copied().collect();
        let matrix = CMatrix::from_fn(basis.len(), |i, j| amps[i] * amps[j].conj());
        DensityOperator { basis, matrix }
    }

    pub fn from_parts(basis: Vec<Label>, matrix: CMatrix) -> Result<DensityOperator> {
        if basis.len() != matrix.dim() {
            return Err(Error::DimensionMismatch);
        }
        let mut sig = None;
        for label in &basis {
            match sig {
                None => sig = Some(label.signature()),
                Some(s) if s != label.signature() => return Err(Error::SignatureMismatch),
                _ => {}
            }
        }
        if basis.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("basis not sorted or not unique".into()));
        }
        Ok(DensityOperator { basis, matrix })
    }

    pub fn basis(&self) -> &[Label] {
        &self.basis
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn signature(&self) -> u8 {
        self.basis.first().map(|l| l.signature()).unwrap_or(0)
    }

    pub fn entry(&self, row: &Label, col: &Label) -> Complex64 {
        match (self.index_of(row), self.index_of(col)) {
            (Some(i), Some(j)) => self.matrix.get(i, j),
            _ => Complex64::new(0.0, 0.0),
        }
    }

    pub fn index_of(&self, label: &Label) -> Option<usize> {
        self.basis.binary_search(label).ok()
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Check the representation invariants: Hermitian within 1e-12, unit
    /// trace within 1e-12, eigenvalues above -1e-10.
    pub fn validate(&self) -> Result<()> {
        if !self.matrix.is_hermitian(NORM_TOLERANCE) {
            return Err(Error::NotHermitian);
        }
        let tr = self.matrix.trace();
        if (tr.re - 1.0).abs() > NORM_TOLERANCE || tr.im.abs() > NORM_TOLERANCE {
            return Err(Error::Config(format!("trace {} is not 1", tr.re)));
        }
        let (values, _) = self.matrix.hermitian_eigen()?;
        if let Some(&min) = values.first() {
            if min < -EIGEN_TOLERANCE {
                return Err(Error::NegativeEigenvalue(min));
            }
        }
        Ok(())
    }

    /// Embed into a larger basis (union of the current one and `extra`).
    pub fn embed(&self, extra: &[Label]) -> DensityOperator {
        let mut set: BTreeSet<Label> = self.basis.iter().copied().collect();
        set.extend(extra.iter().copied());
        let basis: Vec<Label> = set.into_iter().collect();
        let mut matrix = CMatrix::zeros(basis.len());
        let index: BTreeMap<Label, usize> =
            basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        for (i, li) in self.basis.iter().enumerate() {
            for (j, lj) in self.basis.iter().enumerate() {
                matrix.set(index[li], index[lj], self.matrix.get(i, j));
            }
        }
        DensityOperator { basis, matrix }
    }

    /// Convex combination of density operators. Weights must be nonnegative
    /// and sum to 1 within 1e-9; the factor signatures must agree.
    pub fn mix(components: &[(f64, DensityOperator)]) -> Result<DensityOperator> {
        if components.is_empty() {
            return Err(Error::NullState);
        }
        let wsum: f64 = components.iter().map(|(w, _)| *w).sum();
        if components.iter().any(|(w, _)| *w < 0.0) || (wsum - 1.0).abs() > 1e-9 {
            return Err(Error::WeightSum(wsum));
        }
        let sig = components[0].1.signature();
        if components.iter().any(|(_, rho)| rho.signature() != sig) {
            return Err(Error::SignatureMismatch);
        }
        let mut set: BTreeSet<Label> = BTreeSet::new();
        for (_, rho) in components {
            set.extend(rho.basis.iter().copied());
        }
        let basis: Vec<Label> = set.into_iter().collect();
        let mut out = CMatrix::zeros(basis.len());
        for (w, rho) in components {
            let embedded = rho.embed(&basis);
            debug_assert_eq!(embedded.basis, basis);
            for i in 0..basis.len() {
                for j in 0..basis.len() {
                    out.add_to(i, j, embedded.matrix.get(i, j) * Complex64::new(*w, 0.0));
                }
            }
        }
        Ok(DensityOperator { basis, matrix: out })
    }

    /// Partial trace keeping the selected tensor factors.
    pub fn partial_trace(&self, keep: &[Factor]) -> Result<DensityOperator> {
        let sig = self.signature();
        if keep.is_empty() || keep.iter().any(|f| !f.present_in(sig)) {
            return Err(Error::MalformedSelector);
        }
        let traced: Vec<Factor> = [Factor::Sigma, Factor::Pi, Factor::M1, Factor::M2]
            .into_iter()
            .filter(|f| f.present_in(sig) && !keep.contains(f))
            .collect();
        let kept_labels: BTreeSet<Label> =
            self.basis.iter().map(|l| l.project(keep)).collect();
        let basis: Vec<Label> = kept_labels.into_iter().collect();
        let index: BTreeMap<Label, usize> =
            basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut matrix = CMatrix::zeros(basis.len());
        for (i, li) in self.basis.iter().enumerate() {
            for (j, lj) in self.basis.iter().enumerate() {
                if li.project(&traced) == lj.project(&traced) {
                    matrix.add_to(
                        index[&li.project(keep)],
                        index[&lj.project(keep)],
                        self.matrix.get(i, j),
                    );
                }
            }
        }
        Ok(DensityOperator { basis, matrix })
    }

    /// Tensor product of density operators on disjoint factor sets.
    pub fn tensor(&self, other: &DensityOperator) -> Result<DensityOperator> {
        if self.signature() & other.signature() != 0 {
            return Err(Error::OverlappingFactors);
        }
        let mut basis: Vec<Label> = Vec::with_capacity(self.dim() * other.dim());
        for la in &self.basis {
            for lb in &other.basis {
                basis.push(la.merge(lb));
            }
        }
        let pairs: Vec<(usize, usize)> = (0..self.dim())
            .flat_map(|i| (0..other.dim()).map(move |k| (i, k)))
            .collect();
        let matrix = CMatrix::from_fn(basis.len(), |r, c| {
            let (i, k) = pairs[r];
            let (j, l) = pairs[c];
            self.matrix.get(i, j) * other.matrix.get(k, l)
        });
        // Re-sort into the global ordering.
        let mut order: Vec<usize> = (0..basis.len()).collect();
        order.sort_by_key(|&i| basis[i]);
        let sorted_basis: Vec<Label> = order.iter().map(|&i| basis[i]).collect();
        let sorted = CMatrix::from_fn(basis.len(), |r, c| matrix.get(order[r], order[c]));
        Ok(DensityOperator {
            basis: sorted_basis,
            matrix: sorted,
        })
    }

    /// Total population of a single-photon mode.
    pub fn mode_population(&self, mode: ModeLabel) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|(_, l)| l.occupies(mode))
            .map(|(i, _)| self.matrix.get(i, i).re)
            .sum()
    }

    /// Serialize as `{basis: [labels], re: [[..]], im: [[..]]}` in the fixed
    /// global basis ordering.
    pub fn to_json(&self) -> String {
        let labels: Vec<String> = self.basis.iter().map(|l| format!("\"{l}\"")).collect();
        let fmt_row = |part: fn(Complex64) -> f64, i: usize| -> String {
            let row: Vec<String> = (0..self.dim())
                .map(|j| crate::report::fmt_f64(part(self.matrix.get(i, j))))
                .collect();
            format!("[{}]", row.join(","))
        };
        let re: Vec<String> = (0..self.dim()).map(|i| fmt_row(|z| z.re, i)).collect();
        let im: Vec<String> = (0..self.dim()).map(|i| fmt_row(|z| z.im, i)).collect();
        format!(
            "{{\"basis\":[{}],\"re\":[{}],\"im\":[{}]}}",
            labels.join(","),
            re.join(","),
            im.join(",")
        )
    }
}

// ---------------------------------------------------------------------------
// Branches and channels
// ---------------------------------------------------------------------------

/// Measurement or channel outcome attached to a branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    /// Photon passed a lossy element.
    Pass,
    /// Photon absorbed by a lossy element.
    AbsorbedLoss,
    /// Detector register stayed in the ground state.
    NoClick(DeviceId),
    /// Detector fired.
    Click(DeviceId),
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Pass => write!(f, "pass"),
            Outcome::AbsorbedLoss => write!(f, "absorbed_loss"),
            Outcome::NoClick(d) => write!(f, "{}:no_click", d.name()),
            Outcome::Click(d) => write!(f, "{}:click", d.name()),
        }
    }
}

/// One outcome branch of a channel application: the outcome label, its
/// probability and the normalized conditional state. Branches with
/// probability below [`PROB_EPSILON`] carry no state and are flagged
/// degenerate.
#[derive(Clone, Debug)]
pub struct Branch {
    pub outcome: Outcome,
    pub probability: f64,
    pub state: Option<DensityOperator>,
    pub degenerate: bool,
}

/// Pure-state counterpart of [`Branch`].
#[derive(Clone, Debug)]
pub struct PureBranch {
    pub outcome: Outcome,
    pub probability: f64,
    pub state: Option<PureState>,
    pub degenerate: bool,
}

/// A finite Kraus decomposition over a fixed basis.
pub struct Channel {
    basis: Vec<Label>,
    kraus: Vec<(Outcome, CMatrix)>,
}

impl Channel {
    pub fn new(basis: Vec<Label>, kraus: Vec<(Outcome, CMatrix)>) -> Result<Channel> {
        let n = basis.len();
        if kraus.iter().any(|(_, k)| k.dim() != n) {
            return Err(Error::DimensionMismatch);
        }
        Ok(Channel { basis, kraus })
    }

    /// Completeness defect `max |sum K^dagger K - I|`.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.basis.len();
        let mut sum = CMatrix::zeros(n);
        for (_, k) in &self.kraus {
            sum = sum.add(&k.dagger().mul(k));
        }
        sum.max_abs_diff(&CMatrix::identity(n))
    }

    /// Apply to a density operator, producing one branch per Kraus operator.
    pub fn apply(&self, rho: &DensityOperator) -> Result<Vec<Branch>> {
        if rho.basis != self.basis {
            return Err(Error::DimensionMismatch);
        }
        let mut branches = Vec::with_capacity(self.kraus.len());
        for (outcome, k) in &self.kraus {
            let mapped = k.mul(&rho.matrix).mul(&k.dagger());
            let p = mapped.trace().re;
            if p < PROB_EPSILON {
                branches.push(Branch {
                    outcome: *outcome,
                    probability: p.max(0.0),
                    state: None,
                    degenerate: true,
                });
            } else {
                let normalized = mapped.scale(Complex64::new(1.0 / p, 0.0));
                branches.push(Branch {
                    outcome: *outcome,
                    probability: p,
                    state: Some(DensityOperator {
                        basis: self.basis.clone(),
                        matrix: normalized,
                    }),
                    degenerate: false,
                });
            }
        }
        Ok(branches)
    }
}
