//! Optical elements and state preparation: the lossy filter, the
//! beamsplitter, projective detectors on alternate ports, the atomic
//! biphoton generation sequence and the dephasing channel that produces the
//! coherence factor.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::qstate::{
    Branch, Channel, DensityOperator, DeviceId, Label, ModeLabel, Outcome, PiMode,
    Port, PureBranch, PureState, RegisterValue, SigmaMode, PROB_EPSILON,
};
use crate::{Error, Result};

fn check_unit(name: &'static str, value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::OutOfRange { name, value });
    }
    Ok(value)
}

/// A lossy optical filter on one mode.
#[derive(Clone, Copy, Debug)]
pub struct FilterSpec {
    pub target_mode: ModeLabel,
    pub transmittance: f64,
}

impl FilterSpec {
    pub fn new(target_mode: ModeLabel, transmittance: f64) -> Result<FilterSpec> {
        check_unit("t", transmittance)?;
        Ok(FilterSpec {
            target_mode,
            transmittance,
        })
    }
}

/// A beamsplitter routing one primary mode into its alternate port.
#[derive(Clone, Copy, Debug)]
pub struct BeamsplitterSpec {
    pub input_mode: ModeLabel,
    pub alternate_mode: ModeLabel,
    pub transmittance: f64,
}

impl BeamsplitterSpec {
    pub fn new(input_mode: ModeLabel, transmittance: f64) -> Result<BeamsplitterSpec> {
        check_unit("t_BS", transmittance)?;
        if input_mode.port != Port::Primary {
            return Err(Error::InvalidAlternatePort);
        }
        let alternate_mode = input_mode.alternate()?;
        Ok(BeamsplitterSpec {
            input_mode,
            alternate_mode,
            transmittance,
        })
    }
}

/// Off-diagonal damping factor of the biphoton state: 1 is pure, 0 fully
/// mixed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoherenceFactor(f64);

impl CoherenceFactor {
    pub fn new(m: f64) -> Result<CoherenceFactor> {
        check_unit("M", m)?;
        Ok(CoherenceFactor(m))
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// The filtered biphoton density operator: populations `(t, 1)/(1+t)` on
/// (sigma_A pi_A, sigma_B pi_B) and off-diagonal coherence `M sqrt(t)/(1+t)`.
pub fn prepare_biphoton(t: f64, m: CoherenceFactor) -> Result<DensityOperator> {
    check_unit("t", t)?;
    let basis = vec![
        Label::biphoton(SigmaMode::A, PiMode::A),
        Label::biphoton(SigmaMode::A, PiMode::B),
        Label::biphoton(SigmaMode::B, PiMode::A),
        Label::biphoton(SigmaMode::B, PiMode::B),
    ];
    let norm = 1.0 + t;
    let coh = m.value() * t.sqrt() / norm;
    let mut matrix = CMatrix::zeros(4);
    matrix.set(0, 0, Complex64::new(t / norm, 0.0)); // sigma_A pi_A
    matrix.set(3, 3, Complex64::new(1.0 / norm, 0.0)); // sigma_B pi_B
    matrix.set(0, 3, Complex64::new(coh, 0.0));
    matrix.set(3, 0, Complex64::new(coh, 0.0));
    DensityOperator::from_parts(basis, matrix)
}

// ---------------------------------------------------------------------------
// Atomic generation sequence
// ---------------------------------------------------------------------------

/// Internal atomic levels of the four-level atoms. `G1`/`G2` are the two
/// ground states, `E3`/`E4` the excited states. The 1-3 and 2-4 transitions
/// emit pi-polarized light, 1-4 and 2-3 sigma-polarized light.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum AtomLevel {
    G1,
    G2,
    E3,
    E4,
}

/// Transient joint state of the two atoms plus any photons emitted so far.
/// Only used inside the generation sequence; the atomic factor is dropped
/// after emission, when it has returned to a fixed product state.
#[derive(Clone, Debug)]
pub struct AtomPhotonState {
    amps: BTreeMap<(AtomLevel, AtomLevel, Option<SigmaMode>, Option<PiMode>), Complex64>,
}

impl AtomPhotonState {
    fn new(
        entries: impl IntoIterator<
            Item = ((AtomLevel, AtomLevel, Option<SigmaMode>, Option<PiMode>), f64),
        >,
    ) -> AtomPhotonState {
        let mut amps = BTreeMap::new();
        for (key, amp) in entries {
            amps.insert(key, Complex64::new(amp, 0.0));
        }
        let norm: f64 = amps
            .values()
            .map(|a: &Complex64| a.norm_sqr())
            .sum::<f64>()
            .sqrt();
        for a in amps.values_mut() {
            *a /= norm;
        }
        AtomPhotonState { amps }
    }

    pub fn amplitude(
        &self,
        atom_a: AtomLevel,
        atom_b: AtomLevel,
        sigma: Option<SigmaMode>,
        pi: Option<PiMode>,
    ) -> Complex64 {
        self.amps
            .get(&(atom_a, atom_b, sigma, pi))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Reduced sigma-photon state, tracing over the atoms and any pi photon.
    pub fn sigma_reduced(&self) -> Result<DensityOperator> {
        let mut entries: BTreeMap<(SigmaMode, SigmaMode), Complex64> = BTreeMap::new();
        for ((a1, b1, s1, p1), amp1) in &self.amps {
            let Some(s1) = s1 else {
                return Err(Error::MalformedSelector);
            };
            for ((a2, b2, s2, p2), amp2) in &self.amps {
                let Some(s2) = s2 else {
                    return Err(Error::MalformedSelector);
                };
                if a1 == a2 && b1 == b2 && p1 == p2 {
                    *entries
                        .entry((*s1, *s2))
                        .or_insert(Complex64::new(0.0, 0.0)) += amp1 * amp2.conj();
                }
            }
        }
        let modes: Vec<SigmaMode> = {
            let mut set: Vec<SigmaMode> = entries.keys().map(|(s, _)| *s).collect();
            set.sort();
            set.dedup();
            set
        };
        let basis: Vec<Label> = modes.iter().map(|s| Label::sigma_only(*s)).collect();
        let matrix = CMatrix::from_fn(basis.len(), |i, j| {
            entries
                .get(&(modes[i], modes[j]))
                .copied()
                .unwrap_or(Complex64::new(0.0, 0.0))
        });
        DensityOperator::from_parts(basis, matrix)
    }

    /// Drop the atomic factor. Valid only when the atoms are in the same
    /// product state in every term.
    pub fn photons(&self) -> Result<PureState> {
        let first = self.amps.keys().next().ok_or(Error::NullState)?;
        let atomic = (first.0, first.1);
        let mut entries: Vec<(Label, Complex64)> = Vec::new();
        for ((a, b, s, p), amp) in &self.amps {
            if (*a, *b) != atomic {
                return Err(Error::Config(
                    "atomic factor is still entangled with the photons".into(),
                ));
            }
            let label = Label {
                sigma: *s,
                pi: *p,
                m1: None,
                m2: None,
            };
            entries.push((label, *amp));
        }
        PureState::from_amplitudes(entries)
    }
}

/// The full generation sequence with its intermediate states exposed: both
/// atoms start in ground state 1, a weak pi pulse shares one excitation, the
/// sigma-polarized decay is collected, a second sigma-polarized pulse
/// re-excites, and the pi-polarized decay completes the biphoton.
#[derive(Clone, Debug)]
pub struct GenerationSequence {
    pub initial: AtomPhotonState,
    pub after_pi_pulse: AtomPhotonState,
    pub after_sigma_decay: AtomPhotonState,
    pub after_sigma_pulse: AtomPhotonState,
    pub after_pi_decay: AtomPhotonState,
}

impl GenerationSequence {
    /// The emitted biphoton with the atomic factor traced out.
    pub fn biphoton(&self) -> PureState {
        self.after_pi_decay
            .photons()
            .expect("atoms return to a product state after the second decay")
    }
}

pub fn atomic_generation_sequence() -> GenerationSequence {
    use AtomLevel::*;
    let initial = AtomPhotonState::new([((G1, G1, None, None), 1.0)]);
    let after_pi_pulse = AtomPhotonState::new([
        ((G1, E3, None, None), 1.0),
        ((E3, G1, None, None), 1.0),
    ]);
    // The screen-side detector ignores pi photons from this decay, so only
    // the sigma-polarized 3 -> 2 branch is kept.
    let after_sigma_decay = AtomPhotonState::new([
        ((G1, G2, Some(SigmaMode::B), None), 1.0),
        ((G2, G1, Some(SigmaMode::A), None), 1.0),
    ]);
    let after_sigma_pulse = AtomPhotonState::new([
        ((G1, E3, Some(SigmaMode::B), None), 1.0),
        ((E3, G1, Some(SigmaMode::A), None), 1.0),
    ]);
    let after_pi_decay = AtomPhotonState::new([
        ((G1, G1, Some(SigmaMode::B), Some(PiMode::B)), 1.0),
        ((G1, G1, Some(SigmaMode::A), Some(PiMode::A)), 1.0),
    ]);
    GenerationSequence {
        initial,
        after_pi_pulse,
        after_sigma_decay,
        after_sigma_pulse,
        after_pi_decay,
    }
}

// ---------------------------------------------------------------------------
// Filter
// ---------------------------------------------------------------------------

/// Build the two-Kraus loss channel of a filter on the given basis.
pub fn filter_channel(basis: &[Label], spec: &FilterSpec) -> Result<Channel> {
    let n = basis.len();
    let root_t = spec.transmittance.sqrt();
    let root_loss = (1.0 - spec.transmittance).sqrt();
    let mut pass = CMatrix::zeros(n);
    let mut loss = CMatrix::zeros(n);
    for (i, label) in basis.iter().enumerate() {
        if label.occupies(spec.target_mode) {
            pass.set(i, i, Complex64::new(root_t, 0.0));
            loss.set(i, i, Complex64::new(root_loss, 0.0));
        } else {
            pass.set(i, i, Complex64::new(1.0, 0.0));
        }
    }
    Channel::new(
        basis.to_vec(),
        vec![(Outcome::Pass, pass), (Outcome::AbsorbedLoss, loss)],
    )
}

/// Apply a filter as a loss channel: the pass branch scales the target-mode
/// amplitudes by sqrt(t), the loss branch collects the absorbed weight.
pub fn apply_filter(rho: &DensityOperator, spec: &FilterSpec) -> Result<Vec<Branch>> {
    let channel = filter_channel(rho.basis(), spec)?;
    debug_assert!(channel.completeness_defect() < 1e-12);
    channel.apply(rho)
}

/// Pure-state version of [`apply_filter`].
pub fn apply_filter_pure(psi: &PureState, spec: &FilterSpec) -> Result<Vec<PureBranch>> {
    let root_t = spec.transmittance.sqrt();
    let mut pass: Vec<(Label, Complex64)> = Vec::new();
    let mut lost: Vec<(Label, Complex64)> = Vec::new();
    let mut p_pass = 0.0;
    let mut p_loss = 0.0;
    for (label, amp) in psi.amplitudes() {
        if label.occupies(spec.target_mode) {
            pass.push((*label, amp * root_t));
            lost.push((*label, *amp));
            p_pass += amp.norm_sqr() * spec.transmittance;
            p_loss += amp.norm_sqr() * (1.0 - spec.transmittance);
        } else {
            pass.push((*label, *amp));
            p_pass += amp.norm_sqr();
        }
    }
    let make = |outcome, probability: f64, entries: Vec<(Label, Complex64)>| {
        if probability < PROB_EPSILON {
            PureBranch {
                outcome,
                probability: probability.max(0.0),
                state: None,
                degenerate: true,
            }
        } else {
            PureBranch {
                outcome,
                probability,
                state: Some(PureState::from_amplitudes(entries).expect("nonzero branch")),
                degenerate: false,
            }
        }
    };
    Ok(vec![
        make(Outcome::Pass, p_pass, pass),
        make(Outcome::AbsorbedLoss, p_loss, lost),
    ])
}

// ---------------------------------------------------------------------------
// Beamsplitter
// ---------------------------------------------------------------------------

fn occupied_alternate_error(spec: &BeamsplitterSpec) -> Error {
    Error::OccupiedAlternate(spec.alternate_mode.to_string())
}

/// Unitary beamsplitter action on a density operator. The amplitude on the
/// input mode maps to `sqrt(t_BS) input + sqrt(1 - t_BS) alternate`; the
/// alternate port must be unoccupied.
pub fn apply_beamsplitter(
    rho: &DensityOperator,
    spec: &BeamsplitterSpec,
) -> Result<DensityOperator> {
    if rho.mode_population(spec.alternate_mode) > PROB_EPSILON {
        return Err(occupied_alternate_error(spec));
    }
    let extra: Vec<Label> = rho
        .basis()
        .iter()
        .filter(|l| l.occupies(spec.input_mode))
        .map(|l| l.reroute(spec.input_mode, spec.alternate_mode))
        .collect();
    let extended = rho.embed(&extra);
    let basis = extended.basis().to_vec();
    let n = basis.len();
    let c = spec.transmittance.sqrt();
    let s = (1.0 - spec.transmittance).sqrt();
    let mut u = CMatrix::identity(n);
    for (i, label) in basis.iter().enumerate() {
        if label.occupies(spec.input_mode) {
            let partner = label.reroute(spec.input_mode, spec.alternate_mode);
            let j = extended.index_of(&partner).expect("partner embedded");
            u.set(i, i, Complex64::new(c, 0.0));
            u.set(j, i, Complex64::new(s, 0.0));
            u.set(i, j, Complex64::new(-s, 0.0));
            u.set(j, j, Complex64::new(c, 0.0));
        }
    }
    let mapped = u.mul(extended.matrix()).mul(&u.dagger());
    DensityOperator::from_parts(basis, mapped)
}

/// Pure-state version of [`apply_beamsplitter`]. Preserves the norm exactly.
pub fn apply_beamsplitter_pure(
    psi: &PureState,
    spec: &BeamsplitterSpec,
) -> Result<PureState> {
    if psi.mode_population(spec.alternate_mode) > PROB_EPSILON {
        return Err(occupied_alternate_error(spec));
    }
    let c = Complex64::new(spec.transmittance.sqrt(), 0.0);
    let s = Complex64::new((1.0 - spec.transmittance).sqrt(), 0.0);
    let mut entries: BTreeMap<Label, Complex64> = BTreeMap::new();
    for (label, amp) in psi.amplitudes() {
        if label.occupies(spec.input_mode) {
            *entries.entry(*label).or_insert(Complex64::new(0.0, 0.0)) += amp * c;
            let rerouted = label.reroute(spec.input_mode, spec.alternate_mode);
            *entries.entry(rerouted).or_insert(Complex64::new(0.0, 0.0)) += amp * s;
        } else {
            *entries.entry(*label).or_insert(Complex64::new(0.0, 0.0)) += *amp;
        }
    }
    entries.retain(|_, a| a.norm_sqr() > 0.0);
    Ok(PureState::from_map_unchecked(entries))
}

// ---------------------------------------------------------------------------
// Projective detector on an alternate port
// ---------------------------------------------------------------------------

/// Projective click/no-click measurement of a detector watching an alternate
/// port. The click branch projects onto the watched mode occupied, the
/// no-click branch onto its complement.
pub fn measure_detector(
    rho: &DensityOperator,
    device: DeviceId,
    watched_mode: ModeLabel,
) -> Result<Vec<Branch>> {
    if watched_mode.port != Port::Alternate {
        return Err(Error::NotAnAlternatePort);
    }
    let basis = rho.basis().to_vec();
    let n = basis.len();
    let mut click = CMatrix::zeros(n);
    let mut no_click = CMatrix::zeros(n);
    for (i, label) in basis.iter().enumerate() {
        if label.occupies(watched_mode) {
            click.set(i, i, Complex64::new(1.0, 0.0));
        } else {
            no_click.set(i, i, Complex64::new(1.0, 0.0));
        }
    }
    let channel = Channel::new(
        basis,
        vec![
            (Outcome::NoClick(device), no_click),
            (Outcome::Click(device), click),
        ],
    )?;
    debug_assert!(channel.completeness_defect() < 1e-12);
    channel.apply(rho)
}

/// Pure-state version of [`measure_detector`]. If the state carries the
/// device's register factor, the branch states have it set to the measured
/// value, so no coherence between register values survives.
pub fn measure_detector_pure(
    psi: &PureState,
    device: DeviceId,
    watched_mode: ModeLabel,
) -> Result<Vec<PureBranch>> {
    if watched_mode.port != Port::Alternate {
        return Err(Error::NotAnAlternatePort);
    }
    let has_register = psi
        .amplitudes()
        .next()
        .map(|(l, _)| l.register(device).is_some())
        .unwrap_or(false);
    let mut click_entries: Vec<(Label, Complex64)> = Vec::new();
    let mut no_click_entries: Vec<(Label, Complex64)> = Vec::new();
    let mut p_click = 0.0;
    let mut p_no_click = 0.0;
    for (label, amp) in psi.amplitudes() {
        let hit = label.occupies(watched_mode);
        let mut out = *label;
        if has_register {
            out.set_register(
                device,
                if hit {
                    RegisterValue::Click
                } else {
                    RegisterValue::NoClick
                },
            );
        }
        if hit {
            click_entries.push((out, *amp));
            p_click += amp.norm_sqr();
        } else {
            no_click_entries.push((out, *amp));
            p_no_click += amp.norm_sqr();
        }
    }
    let make = |outcome, probability: f64, entries: Vec<(Label, Complex64)>| {
        if probability < PROB_EPSILON {
            PureBranch {
                outcome,
                probability: probability.max(0.0),
                state: None,
                degenerate: true,
            }
        } else {
            PureBranch {
                outcome,
                probability,
                state: Some(PureState::from_amplitudes(entries).expect("nonzero branch")),
                degenerate: false,
            }
        }
    };
    Ok(vec![
        make(Outcome::NoClick(device), p_no_click, no_click_entries),
        make(Outcome::Click(device), p_click, click_entries),
    ])
}

// ---------------------------------------------------------------------------
// Dephasing
// ---------------------------------------------------------------------------

/// Damp every coherence between distinct biphoton path labels by M, leaving
/// the diagonal unchanged.
pub fn decohere(rho: &DensityOperator, m: CoherenceFactor) -> Result<DensityOperator> {
    let basis = rho.basis().to_vec();
    let factor = Complex64::new(m.value(), 0.0);
    let matrix = CMatrix::from_fn(basis.len(), |i, j| {
        let same_paths =
            basis[i].sigma == basis[j].sigma && basis[i].pi == basis[j].pi;
        if same_paths {
            rho.matrix().get(i, j)
        } else {
            rho.matrix().get(i, j) * factor
        }
    });
    DensityOperator::from_parts(basis, matrix)
}

/// Biphoton of the generation sequence filtered on sigma_A with
/// transmittance t, conditioned on the photon passing.
pub fn filtered_biphoton(t: f64) -> Result<PureState> {
    let biphoton = atomic_generation_sequence().biphoton();
    let spec = FilterSpec::new(ModeLabel::sigma(crate::qstate::Site::A), t)?;
    let branches = apply_filter_pure(&biphoton, &spec)?;
    branches
        .into_iter()
        .find(|b| b.outcome == Outcome::Pass)
        .and_then(|b| b.state)
        .ok_or(Error::NullState)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::Site;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bell() -> PureState {
        PureState::from_amplitudes([
            (Label::biphoton(SigmaMode::A, PiMode::A), c(1.0)),
            (Label::biphoton(SigmaMode::B, PiMode::B), c(1.0)),
        ])
        .unwrap()
    }

    #[test]
    fn prepare_biphoton_bell_and_mixture() {
        let pure = prepare_biphoton(1.0, CoherenceFactor::new(1.0).unwrap()).unwrap();
        let a = Label::biphoton(SigmaMode::A, PiMode::A);
        let b = Label::biphoton(SigmaMode::B, PiMode::B);
        assert!((pure.entry(&a, &a).re - 0.5).abs() < 1e-14);
        assert!((pure.entry(&a, &b).re - 0.5).abs() < 1e-14);
        pure.validate().unwrap();

        let mixed = prepare_biphoton(1.0, CoherenceFactor::new(0.0).unwrap()).unwrap();
        assert!((mixed.entry(&a, &a).re - 0.5).abs() < 1e-14);
        assert!(mixed.entry(&a, &b).norm() < 1e-14);
        mixed.validate().unwrap();
    }

    #[test]
    fn prepare_biphoton_quarter() {
        let rho = prepare_biphoton(0.25, CoherenceFactor::new(1.0).unwrap()).unwrap();
        let a = Label::biphoton(SigmaMode::A, PiMode::A);
        let b = Label::biphoton(SigmaMode::B, PiMode::B);
        assert!((rho.entry(&a, &a).re - 0.2).abs() < 1e-14);
        assert!((rho.entry(&b, &b).re - 0.8).abs() < 1e-14);
        assert!((rho.entry(&a, &b).re - 0.4).abs() < 1e-14);
    }

    #[test]
    fn prepare_biphoton_rejects_bad_parameters() {
        assert!(prepare_biphoton(1.5, CoherenceFactor::new(1.0).unwrap()).is_err());
        assert!(CoherenceFactor::new(-0.1).is_err());
    }

    #[test]
    fn generation_sequence_intermediates() {
        use AtomLevel::*;
        let seq = atomic_generation_sequence();
        let r = 1.0 / 2f64.sqrt();
        // Shared single excitation after the first pi pulse.
        assert!(
            (seq.after_pi_pulse.amplitude(G1, E3, None, None).re - r).abs() < 1e-14
        );
        assert!(
            (seq.after_pi_pulse.amplitude(E3, G1, None, None).re - r).abs() < 1e-14
        );
        // Sigma photon entangled with which atom decayed.
        assert!(
            (seq.after_sigma_decay
                .amplitude(G1, G2, Some(SigmaMode::B), None)
                .re
                - r)
                .abs()
                < 1e-14
        );
        // No sigma coherence survives the atomic marks.
        let reduced = seq.after_sigma_decay.sigma_reduced().unwrap();
        let la = Label::sigma_only(SigmaMode::A);
        let lb = Label::sigma_only(SigmaMode::B);
        assert!((reduced.entry(&la, &la).re - 0.5).abs() < 1e-14);
        assert!((reduced.entry(&lb, &lb).re - 0.5).abs() < 1e-14);
        assert!(reduced.entry(&la, &lb).norm() < 1e-14);
    }

    #[test]
    fn generation_sequence_final_biphoton() {
        let psi = atomic_generation_sequence().biphoton();
        assert_eq!(psi.len(), 2);
        let r = 1.0 / 2f64.sqrt();
        assert!(
            (psi.amplitude(&Label::biphoton(SigmaMode::A, PiMode::A)).re - r).abs() < 1e-14
        );
        assert!(
            (psi.amplitude(&Label::biphoton(SigmaMode::B, PiMode::B)).re - r).abs() < 1e-14
        );
    }

    #[test]
    fn transparent_filter_is_identity() {
        let rho = DensityOperator::from_pure(&bell());
        let spec = FilterSpec::new(ModeLabel::sigma(Site::A), 1.0).unwrap();
        let branches = apply_filter(&rho, &spec).unwrap();
        let pass = &branches[0];
        assert!((pass.probability - 1.0).abs() < 1e-12);
        assert!(pass
            .state
            .as_ref()
            .unwrap()
            .matrix()
            .max_abs_diff(rho.matrix())
            < 1e-12);
        assert!(branches[1].degenerate);
    }

    #[test]
    fn opaque_filter_blocks_path() {
        let spec = FilterSpec::new(ModeLabel::sigma(Site::A), 0.0).unwrap();
        let branches = apply_filter_pure(&bell(), &spec).unwrap();
        assert!((branches[0].probability - 0.5).abs() < 1e-12);
        assert!((branches[1].probability - 0.5).abs() < 1e-12);
        let pass = branches[0].state.as_ref().unwrap();
        assert_eq!(pass.len(), 1);
        assert!(
            (pass.amplitude(&Label::biphoton(SigmaMode::B, PiMode::B)).norm() - 1.0).abs()
                < 1e-12
        );
    }

    #[test]
    fn partial_filter_matches_rescaled_state() {
        let t: f64 = 0.25;
        let spec = FilterSpec::new(ModeLabel::sigma(Site::A), t).unwrap();
        let branches = apply_filter_pure(&bell(), &spec).unwrap();
        let pass = &branches[0];
        assert!((pass.probability - (1.0 + t) / 2.0).abs() < 1e-12);
        let state = pass.state.as_ref().unwrap();
        let expected = PureState::from_amplitudes([
            (Label::biphoton(SigmaMode::A, PiMode::A), c(t.sqrt())),
            (Label::biphoton(SigmaMode::B, PiMode::B), c(1.0)),
        ])
        .unwrap();
        for (label, amp) in expected.amplitudes() {
            assert!((state.amplitude(label) - amp).norm() < 1e-12);
        }
    }

    #[test]
    fn beamsplitter_identity_and_full_routing() {
        let pi_b = ModeLabel::pi(Site::B);
        let psi = bell();
        let id = apply_beamsplitter_pure(&psi, &BeamsplitterSpec::new(pi_b, 1.0).unwrap())
            .unwrap();
        assert_eq!(id, psi);
        let routed =
            apply_beamsplitter_pure(&psi, &BeamsplitterSpec::new(pi_b, 0.0).unwrap()).unwrap();
        assert!(routed.mode_population(ModeLabel::pi(Site::B)) < 1e-15);
        assert!(
            (routed.mode_population(ModeLabel::pi_alternate()) - 0.5).abs() < 1e-12
        );
    }

    #[test]
    fn beamsplitter_split_amplitudes() {
        // (pi_A + pi_B)/sqrt(2) with t_BS = 1/4 on pi_B.
        let psi = PureState::from_amplitudes([
            (Label::pi_only(PiMode::A), c(1.0)),
            (Label::pi_only(PiMode::B), c(1.0)),
        ])
        .unwrap();
        let spec = BeamsplitterSpec::new(ModeLabel::pi(Site::B), 0.25).unwrap();
        let out = apply_beamsplitter_pure(&psi, &spec).unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!((out.amplitude(&Label::pi_only(PiMode::A)).re - r).abs() < 1e-12);
        assert!((out.amplitude(&Label::pi_only(PiMode::B)).re - 0.5 * r).abs() < 1e-12);
        assert!(
            (out.amplitude(&Label::pi_only(PiMode::B2)).re - (3f64.sqrt() / 2.0) * r).abs()
                < 1e-12
        );
        assert!((out.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn beamsplitter_rejects_occupied_alternate() {
        let psi = PureState::basis_ket(Label::pi_only(PiMode::B2));
        let spec = BeamsplitterSpec::new(ModeLabel::pi(Site::B), 0.5).unwrap();
        assert!(matches!(
            apply_beamsplitter_pure(&psi, &spec),
            Err(Error::OccupiedAlternate(_))
        ));
    }

    #[test]
    fn detector_on_empty_mode_never_clicks() {
        let rho = DensityOperator::from_pure(&bell());
        let branches =
            measure_detector(&rho, DeviceId::M1, ModeLabel::pi_alternate()).unwrap();
        assert!((branches[0].probability - 1.0).abs() < 1e-12);
        assert!(branches[1].degenerate);
    }

    #[test]
    fn beamsplit_then_measure_matches_branch_weights() {
        // Filtered biphoton, t = t_BS = 1/4: no-click weight (t + t_BS)/(1+t),
        // click weight (1 - t_BS)/(1+t).
        let t = 0.25;
        let psi = filtered_biphoton(t).unwrap();
        let spec = BeamsplitterSpec::new(ModeLabel::pi(Site::B), t).unwrap();
        let split = apply_beamsplitter_pure(&psi, &spec).unwrap();
        let branches =
            measure_detector_pure(&split, DeviceId::M1, ModeLabel::pi_alternate()).unwrap();
        assert!((branches[0].probability - 0.4).abs() < 1e-12);
        assert!((branches[1].probability - 0.6).abs() < 1e-12);
        assert!((branches[0].probability + branches[1].probability - 1.0).abs() < 1e-12);
        // The no-click branch recovers the balanced biphoton.
        let state = branches[0].state.as_ref().unwrap();
        let r = 1.0 / 2f64.sqrt();
        assert!(
            (state.amplitude(&Label::biphoton(SigmaMode::A, PiMode::A)).re - r).abs() < 1e-12
        );
        assert!(
            (state.amplitude(&Label::biphoton(SigmaMode::B, PiMode::B)).re - r).abs() < 1e-12
        );
    }

    #[test]
    fn eq_3_7_amplitudes_before_renormalization() {
        // The no-click amplitudes prior to branch renormalization are
        // sqrt(t_BS)/sqrt(1+t) on sigma_B pi_B and sqrt(t)/sqrt(1+t) on
        // sigma_A pi_A.
        let t = 0.4;
        let t_bs = 0.1;
        let psi = filtered_biphoton(t).unwrap();
        let spec = BeamsplitterSpec::new(ModeLabel::pi(Site::B), t_bs).unwrap();
        let split = apply_beamsplitter_pure(&psi, &spec).unwrap();
        let amp_bb = split.amplitude(&Label::biphoton(SigmaMode::B, PiMode::B));
        let amp_aa = split.amplitude(&Label::biphoton(SigmaMode::A, PiMode::A));
        assert!((amp_bb.re - (t_bs / (1.0 + t)).sqrt()).abs() < 1e-12);
        assert!((amp_aa.re - (t / (1.0 + t)).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn decohere_damps_off_diagonals() {
        let bell_density = prepare_biphoton(1.0, CoherenceFactor::new(1.0).unwrap()).unwrap();
        let id = decohere(&bell_density, CoherenceFactor::new(1.0).unwrap()).unwrap();
        assert!(id.matrix().max_abs_diff(bell_density.matrix()) < 1e-15);
        let half = decohere(&bell_density, CoherenceFactor::new(0.5).unwrap()).unwrap();
        let expected = prepare_biphoton(1.0, CoherenceFactor::new(0.5).unwrap()).unwrap();
        assert!(half.matrix().max_abs_diff(expected.matrix()) < 1e-14);
        let dead = decohere(
            &DensityOperator::from_pure(&filtered_biphoton(0.25).unwrap()),
            CoherenceFactor::new(0.0).unwrap(),
        )
        .unwrap();
        let a = Label::biphoton(SigmaMode::A, PiMode::A);
        let b = Label::biphoton(SigmaMode::B, PiMode::B);
        assert!(dead.entry(&a, &b).norm() < 1e-15);
        assert!((dead.entry(&a, &a).re - 0.2).abs() < 1e-12);
    }

    #[test]
    fn filter_then_beamsplitter_commutes_on_disjoint_modes() {
        let rho = DensityOperator::from_pure(&bell());
        let filter = FilterSpec::new(ModeLabel::sigma(Site::A), 0.3).unwrap();
        let bs = BeamsplitterSpec::new(ModeLabel::pi(Site::B), 0.6).unwrap();

        let fb = {
            let pass = apply_filter(&rho, &filter).unwrap().remove(0).state.unwrap();
            apply_beamsplitter(&pass, &bs).unwrap()
        };
        let bf = {
            let split = apply_beamsplitter(&rho, &bs).unwrap();
            apply_filter(&split, &filter).unwrap().remove(0).state.unwrap()
        };
        let fb = fb.embed(bf.basis());
        let bf = bf.embed(fb.basis());
        assert!(fb.matrix().max_abs_diff(bf.matrix()) < 1e-12);
    }

    #[test]
    fn prepare_biphoton_matches_filter_pipeline() {
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let direct = prepare_biphoton(t, CoherenceFactor::new(1.0).unwrap()).unwrap();
            let piped = DensityOperator::from_pure(&filtered_biphoton(t).unwrap());
            let direct = direct.embed(piped.basis());
            let piped = piped.embed(direct.basis());
            assert!(direct.matrix().max_abs_diff(piped.matrix()) < 1e-12, "t={t}");
        }
    }
}
