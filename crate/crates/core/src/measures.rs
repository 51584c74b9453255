//! Complementarity quantities, each computed two ways: closed-form
//! expressions in the interferometer parameters and numerical evaluation
//! from states, so the two routes can be audited against each other.

use num_complex::Complex64;

use crate::cmatrix::CMatrix;
use crate::qstate::{
    DensityOperator, Label, ModeLabel, PiMode, SigmaMode, Site, EIGEN_TOLERANCE, PROB_EPSILON,
};
use crate::report::{fmt_f64, json_number, JsonObject};
use crate::{Error, Result};

/// All complementarity quantities of one configuration. Conditional fields
/// are NaN when the configuration is degenerate (`degenerate` set).
#[derive(Clone, Copy, Debug)]
pub struct MeasureRecord {
    /// Predictability: a-priori which-path information.
    pub p: f64,
    /// A-priori fringe visibility of the interfering photon.
    pub v: f64,
    /// Which-path knowledge actually obtained by the measurement device.
    pub k: f64,
    /// Distinguishability; 1 for the pure entangled family.
    pub d: f64,
    /// Concurrence of the biphoton.
    pub c: f64,
    /// Conventional quantum-eraser visibility.
    pub v_qe: f64,
    /// Success probability of the conditioning measurement.
    pub s: f64,
    /// Predictability of the conditioned subensemble.
    pub p_cond: f64,
    /// Concurrence of the conditioned subensemble.
    pub c_cond: f64,
    /// Quantum-eraser visibility of the conditioned subensemble.
    pub v_qe_cond: f64,
    pub degenerate: bool,
}

impl MeasureRecord {
    pub const JSON_KEYS: [&'static str; 10] = [
        "P", "V", "K", "D", "C", "V_QE", "S", "P_cond", "C_cond", "V_QE_cond",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.p,
            self.v,
            self.k,
            self.d,
            self.c,
            self.v_qe,
            self.s,
            self.p_cond,
            self.c_cond,
            self.v_qe_cond,
        ]
    }

    pub fn to_json(&self) -> String {
        let mut o = JsonObject::new();
        for (key, value) in Self::JSON_KEYS.iter().zip(self.values()) {
            o.raw(*key, json_number(value));
        }
        o.boolean("degenerate", self.degenerate);
        o.finish()
    }

    pub fn csv_fields(&self) -> Vec<String> {
        let mut fields: Vec<String> = self.values().iter().map(|v| fmt_f64(*v)).collect();
        fields.push(self.degenerate.to_string());
        fields
    }
}

fn sigma_path_populations(rho: &DensityOperator) -> Result<(f64, f64, Complex64)> {
    let reduced = if rho.signature() == 0b1 {
        rho.clone()
    } else {
        rho.partial_trace(&[crate::qstate::Factor::Sigma])?
    };
    let p_a = reduced.mode_population(ModeLabel::sigma(Site::A));
    let p_b = reduced.mode_population(ModeLabel::sigma(Site::B));
    let coherence = reduced.entry(
        &Label::sigma_only(SigmaMode::A),
        &Label::sigma_only(SigmaMode::B),
    );
    if p_a + p_b < PROB_EPSILON {
        return Err(Error::NoInterferingAmplitude);
    }
    Ok((p_a, p_b, coherence))
}

/// Predictability |p_A - p_B| / (p_A + p_B) of the interfering photon's
/// reduced state. Accepts either a sigma-only operator or a larger state
/// that is first reduced to its sigma factor.
pub fn predictability(rho: &DensityOperator) -> Result<f64> {
    let (p_a, p_b, _) = sigma_path_populations(rho)?;
    Ok((p_a - p_b).abs() / (p_a + p_b))
}

/// Maximum fringe visibility 2|rho_AB| / (p_A + p_B) available from the path
/// coherence of the reduced state.
pub fn visibility_analytic(rho: &DensityOperator) -> Result<f64> {
    let (p_a, p_b, coherence) = sigma_path_populations(rho)?;
    Ok(2.0 * coherence.norm() / (p_a + p_b))
}

/// Which-path knowledge gained by a partial interaction-free measurement
/// with beamsplitter transmittance t1.
pub fn knowledge_from_partial_measurement(t1: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t1) || t1.is_nan() {
        return Err(Error::OutOfRange {
            name: "t1",
            value: t1,
        });
    }
    Ok((1.0 - t1) / (1.0 + t1))
}

/// The ordered two-qubit basis used for concurrence, with pi as the first
/// qubit (pi_A = 0, pi_B = 1) and sigma as the second (sigma_A = 0,
/// sigma_B = 1).
fn two_qubit_basis() -> [Label; 4] {
    [
        Label::biphoton(SigmaMode::A, PiMode::A), // |00>
        Label::biphoton(SigmaMode::B, PiMode::A), // |01>
        Label::biphoton(SigmaMode::A, PiMode::B), // |10>
        Label::biphoton(SigmaMode::B, PiMode::B), // |11>
    ]
}

/// Wootters concurrence of the biphoton restricted to the primary-path
/// two-qubit sector. The operator may live on a larger basis as long as the
/// weight outside the sector is negligible (residual trace below 1e-9).
pub fn concurrence(rho: &DensityOperator) -> Result<f64> {
    let labels = two_qubit_basis();
    let block = CMatrix::from_fn(4, |i, j| rho.entry(&labels[i], &labels[j]));
    if !block.is_hermitian(1e-10) {
        return Err(Error::NotHermitian);
    }
    let residual = (rho.trace() - block.trace().re).abs();
    if residual > 1e-9 {
        return Err(Error::Config(format!(
            "weight {residual} outside the two-qubit sector"
        )));
    }
    // Spin flip: rho_tilde = (sy x sy) conj(rho) (sy x sy); sy x sy is the
    // real antidiagonal (-1, 1, 1, -1).
    let y2 = {
        let mut m = CMatrix::zeros(4);
        m.set(0, 3, Complex64::new(-1.0, 0.0));
        m.set(1, 2, Complex64::new(1.0, 0.0));
        m.set(2, 1, Complex64::new(1.0, 0.0));
        m.set(3, 0, Complex64::new(-1.0, 0.0));
        m
    };
    let tilde = y2.mul(&block.conjugate()).mul(&y2);
    // rho * rho_tilde is not Hermitian but is isospectral to the Hermitian
    // positive product sqrt(rho) * rho_tilde * sqrt(rho).
    let root = block.hermitian_sqrt(EIGEN_TOLERANCE)?;
    let product = root.mul(&tilde).mul(&root);
    let (values, _) = product.hermitian_eigen()?;
    // The square root amplifies round-off near zero (an eigenvalue that is
    // exactly 0 but computed as 1e-16 would contribute 1e-8), so eigenvalues
    // below 1e-12 are treated as zero. The product's norm is at most 1, so
    // the threshold is absolute.
    let mut lambdas: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v < -EIGEN_TOLERANCE {
                Err(Error::NegativeEigenvalue(v))
            } else if v < 1e-12 {
                Ok(0.0)
            } else {
                Ok(v.sqrt())
            }
        })
        .collect::<Result<_>>()?;
    lambdas.sort_by(|a, b| b.partial_cmp(a).unwrap());
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&value) || value.is_nan() {
        return Err(Error::OutOfRange { name, value });
    }
    Ok(())
}

/// Closed forms of every complementarity quantity for the filtered biphoton
/// with filter transmittance t, eraser-beamsplitter transmittance t_BS and
/// coherence factor M. The conventional eraser is the t_BS = 1 limit. The
/// knowledge field uses the convention K = P for this scheme; the
/// double-partial scheme overrides it.
pub fn closed_form_suite(t: f64, t_bs: f64, m: f64) -> Result<MeasureRecord> {
    check_unit("t", t)?;
    check_unit("t_BS", t_bs)?;
    check_unit("M", m)?;
    let p = (1.0 - t) / (1.0 + t);
    let c = 2.0 * m * t.sqrt() / (1.0 + t);
    let v_qe = c;
    let s = (t + t_bs) / (1.0 + t);
    let degenerate = t + t_bs < PROB_EPSILON;
    let (p_cond, c_cond) = if degenerate {
        (f64::NAN, f64::NAN)
    } else {
        (
            (t - t_bs).abs() / (t + t_bs),
            2.0 * m * (t * t_bs).sqrt() / (t + t_bs),
        )
    };
    Ok(MeasureRecord {
        p,
        v: 0.0,
        k: p,
        d: 1.0,
        c,
        v_qe,
        s,
        p_cond,
        c_cond,
        v_qe_cond: c_cond,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{prepare_biphoton, CoherenceFactor};
    use crate::qstate::PureState;

    fn c64(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn filtered_sigma(t: f64) -> DensityOperator {
        let psi = PureState::from_amplitudes([
            (Label::sigma_only(SigmaMode::A), c64(t.sqrt())),
            (Label::sigma_only(SigmaMode::B), c64(1.0)),
        ])
        .unwrap();
        DensityOperator::from_pure(&psi)
    }

    #[test]
    fn predictability_examples() {
        assert!(predictability(&filtered_sigma(1.0)).unwrap().abs() < 1e-14);
        assert!((predictability(&filtered_sigma(0.0)).unwrap() - 1.0).abs() < 1e-14);
        assert!((predictability(&filtered_sigma(1.0 / 3.0)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn visibility_examples() {
        let t: f64 = 0.25;
        let v = visibility_analytic(&filtered_sigma(t)).unwrap();
        assert!((v - 2.0 * t.sqrt() / (1.0 + t)).abs() < 1e-12);
        assert!((v - 0.8).abs() < 1e-12);
        // Unconditioned biphoton: the pi photon marks the path, so the
        // reduced sigma coherence vanishes for any t.
        for t in [0.0, 0.25, 0.5, 1.0] {
            let rho = prepare_biphoton(t, CoherenceFactor::new(1.0).unwrap()).unwrap();
            assert!(visibility_analytic(&rho).unwrap() < 1e-14, "t={t}");
        }
        assert!((visibility_analytic(&filtered_sigma(1.0)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn knowledge_examples() {
        assert!(knowledge_from_partial_measurement(1.0).unwrap().abs() < 1e-15);
        assert!((knowledge_from_partial_measurement(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(
            (knowledge_from_partial_measurement(1.0 / 3.0).unwrap() - 0.5).abs() < 1e-12
        );
        assert!(knowledge_from_partial_measurement(1.5).is_err());
    }

    #[test]
    fn concurrence_of_bell_and_product() {
        let bell = prepare_biphoton(1.0, CoherenceFactor::new(1.0).unwrap()).unwrap();
        assert!((concurrence(&bell).unwrap() - 1.0).abs() < 1e-10);
        let product = DensityOperator::from_pure(&PureState::basis_ket(Label::biphoton(
            SigmaMode::A,
            PiMode::A,
        )));
        assert!(concurrence(&product).unwrap() < 1e-10);
    }

    #[test]
    fn concurrence_matches_closed_form_at_third() {
        let t = 1.0 / 3.0;
        let m = 0.5;
        let rho = prepare_biphoton(t, CoherenceFactor::new(m).unwrap()).unwrap();
        let numeric = concurrence(&rho).unwrap();
        let closed = 2.0 * m * t.sqrt() / (1.0 + t);
        assert!((closed - 0.4330127018922193).abs() < 1e-12);
        assert!((numeric - closed).abs() < 1e-9);
    }

    #[test]
    fn closed_form_trivial_and_quarter() {
        let r = closed_form_suite(1.0, 1.0, 1.0).unwrap();
        assert!(r.p.abs() < 1e-15);
        assert!((r.c - 1.0).abs() < 1e-15);
        assert!((r.s - 1.0).abs() < 1e-15);
        assert!((r.v_qe_cond - 1.0).abs() < 1e-15);

        let r = closed_form_suite(0.25, 0.25, 1.0).unwrap();
        assert!((r.p - 0.6).abs() < 1e-12);
        assert!((r.c - 0.8).abs() < 1e-12);
        assert!((r.s - 0.4).abs() < 1e-12);
        assert!(r.p_cond.abs() < 1e-12);
        assert!((r.v_qe_cond - 1.0).abs() < 1e-12);

        let r = closed_form_suite(0.25, 1.0, 1.0).unwrap();
        assert!((r.s - 1.0).abs() < 1e-12);
        assert!((r.c_cond - 0.8).abs() < 1e-12);
        assert!((r.p_cond - 0.6).abs() < 1e-12);
    }

    #[test]
    fn closed_form_degenerate_tie() {
        let r = closed_form_suite(0.0, 0.0, 1.0).unwrap();
        assert!(r.degenerate);
        assert!(r.p_cond.is_nan());
        assert!(r.c_cond.is_nan());
        assert!((r.p - 1.0).abs() < 1e-15);
        assert!(closed_form_suite(-0.1, 0.5, 1.0).is_err());
    }

    #[test]
    fn pure_conditioned_identity_and_bound_chain() {
        for i in 0..=20 {
            for j in 0..=20 {
                let t = i as f64 / 20.0;
                let t_bs = j as f64 / 20.0;
                let r = closed_form_suite(t, t_bs, 1.0).unwrap();
                if !r.degenerate {
                    assert!(
                        (r.p_cond * r.p_cond + r.c_cond * r.c_cond - 1.0).abs() < 1e-12,
                        "t={t} t_bs={t_bs}"
                    );
                    assert!(r.s * r.c_cond <= r.c + 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixed_relation_on_grid() {
        for i in 0..=20 {
            for j in 0..=10 {
                let t = i as f64 / 20.0;
                let m = j as f64 / 10.0;
                let r = closed_form_suite(t, 1.0, m).unwrap();
                let lhs = r.c * r.c + r.p * r.p;
                let rhs = r.p * r.p + m * m * (1.0 - r.p * r.p);
                assert!((lhs - rhs).abs() < 1e-12, "t={t} m={m}");
                assert!((r.v_qe - m * (1.0 - r.p * r.p).sqrt()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn record_json_keys() {
        let r = closed_form_suite(0.25, 0.25, 1.0).unwrap();
        let json = r.to_json();
        for key in MeasureRecord::JSON_KEYS {
            assert!(json.contains(&format!("\"{key}\":")), "{key}");
        }
        assert!(json.contains("\"degenerate\":false"));
        let d = closed_form_suite(0.0, 0.0, 1.0).unwrap().to_json();
        assert!(d.contains("\"P_cond\":null"));
    }
}
