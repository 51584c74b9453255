//! First- and second-order intensity correlations, the corrected
//! two-particle correlator, phase-scan visibilities, conditioned fringes and
//! a deterministic Monte Carlo coincidence sampler.
//!
//! Detector geometry enters only through the interference phase at the
//! detector; dipole envelopes are optional multiplicative weights that
//! rescale rates but never visibilities.

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::cmatrix::CMatrix;
use crate::qstate::{DensityOperator, Factor, Label, PiMode, SigmaMode, PROB_EPSILON};
use crate::report::{csv, fmt_f64};
use crate::{Error, Result};

/// Number of grid points per detector phase in scans.
pub const SCAN_GRID: usize = 64;

/// Golden-section refinement stops when the bracket is narrower than this.
const GOLDEN_TOL: f64 = 1e-13;

/// Events per Monte Carlo batch; each batch owns an independent generator
/// stream so results are identical for any worker count.
const BATCH_SIZE: u64 = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    Sigma,
    Pi,
}

/// A detector parametrized by its interference phase, watched polarization
/// and an optional dipole-envelope weight.
#[derive(Clone, Copy, Debug)]
pub struct DetectorPosition {
    pub phase: f64,
    pub polarization: Polarization,
    pub envelope_weight: f64,
}

impl DetectorPosition {
    pub fn new(phase: f64, polarization: Polarization, envelope_weight: f64) -> Result<Self> {
        if !(envelope_weight > 0.0) {
            return Err(Error::OutOfRange {
                name: "envelope_weight",
                value: envelope_weight,
            });
        }
        Ok(DetectorPosition {
            phase,
            polarization,
            envelope_weight,
        })
    }

    pub fn sigma(phase: f64) -> Self {
        DetectorPosition {
            phase,
            polarization: Polarization::Sigma,
            envelope_weight: 1.0,
        }
    }

    pub fn pi(phase: f64) -> Self {
        DetectorPosition {
            phase,
            polarization: Polarization::Pi,
            envelope_weight: 1.0,
        }
    }
}

/// Dipole radiation geometry: polarization axis, observation direction and
/// an overall scale absorbing the radiative prefactor.
#[derive(Clone, Copy, Debug)]
pub struct DipoleParams {
    pub polarization_axis: [f64; 3],
    pub observation_direction: [f64; 3],
    pub overall_scale: f64,
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

impl DipoleParams {
    pub fn new(
        polarization_axis: [f64; 3],
        observation_direction: [f64; 3],
        overall_scale: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("polarization_axis", polarization_axis),
            ("observation_direction", observation_direction),
        ] {
            let n = norm3(v);
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::OutOfRange { name, value: n });
            }
        }
        Ok(DipoleParams {
            polarization_axis,
            observation_direction,
            overall_scale,
        })
    }
}

/// Transverse dipole intensity factor |(e x r) x r|^2 * scale^2, which for
/// unit vectors is sin^2(angle between axis and observation) * scale^2.
pub fn dipole_envelope(p: &DipoleParams) -> f64 {
    let e = p.polarization_axis;
    let r = p.observation_direction;
    let dot = e[0] * r[0] + e[1] * r[1] + e[2] * r[2];
    let transverse_sq = (1.0 - dot * dot).max(0.0);
    transverse_sq * p.overall_scale * p.overall_scale
}

// ---------------------------------------------------------------------------
// Fast evaluators over the primary-path sector
// ---------------------------------------------------------------------------

/// 2x2 reduced path matrix of one polarization on the primary ports:
/// [[p_A, rho_AB], [rho_BA, p_B]].
#[derive(Clone, Copy, Debug)]
struct PathMatrix {
    aa: f64,
    bb: f64,
    ab: Complex64,
}

impl PathMatrix {
    fn intensity(&self, phase: f64, weight: f64) -> f64 {
        weight * (self.aa + self.bb + 2.0 * (self.ab * Complex64::cis(phase)).re)
    }
}

fn reduce_to(rho: &DensityOperator, factor: Factor) -> Result<DensityOperator> {
    let single = match factor {
        Factor::Sigma => 0b1,
        Factor::Pi => 0b10,
        _ => return Err(Error::MalformedSelector),
    };
    if rho.signature() == single {
        Ok(rho.clone())
    } else {
        rho.partial_trace(&[factor])
    }
}

fn path_matrix(rho: &DensityOperator, polarization: Polarization) -> Result<PathMatrix> {
    let (reduced, la, lb) = match polarization {
        Polarization::Sigma => (
            reduce_to(rho, Factor::Sigma)?,
            Label::sigma_only(SigmaMode::A),
            Label::sigma_only(SigmaMode::B),
        ),
        Polarization::Pi => (
            reduce_to(rho, Factor::Pi)?,
            Label::pi_only(PiMode::A),
            Label::pi_only(PiMode::B),
        ),
    };
    Ok(PathMatrix {
        aa: reduced.entry(&la, &la).re,
        bb: reduced.entry(&lb, &lb).re,
        ab: reduced.entry(&la, &lb),
    })
}

/// 4x4 biphoton block over the primary-path labels, indexed by
/// 2 * sigma + pi with A = 0, B = 1.
fn biphoton_block(rho: &DensityOperator) -> CMatrix {
    let labels = [
        Label::biphoton(SigmaMode::A, PiMode::A),
        Label::biphoton(SigmaMode::A, PiMode::B),
        Label::biphoton(SigmaMode::B, PiMode::A),
        Label::biphoton(SigmaMode::B, PiMode::B),
    ];
    CMatrix::from_fn(4, |i, j| rho.entry(&labels[i], &labels[j]))
}

/// Everything needed to evaluate the correlators of one state at any phase
/// pair without touching the density operator again.
struct CorrelatorKernel {
    block: CMatrix,
    sigma: PathMatrix,
    pi: PathMatrix,
}

impl CorrelatorKernel {
    fn new(rho: &DensityOperator) -> Result<CorrelatorKernel> {
        Ok(CorrelatorKernel {
            block: biphoton_block(rho),
            sigma: path_matrix(rho, Polarization::Sigma)?,
            pi: path_matrix(rho, Polarization::Pi)?,
        })
    }

    fn g2(&self, phi_sigma: f64, phi_pi: f64, w_sigma: f64, w_pi: f64) -> f64 {
        let es = Complex64::cis(phi_sigma);
        let ep = Complex64::cis(phi_pi);
        let one = Complex64::new(1.0, 0.0);
        let u = [one, ep, es, es * ep];
        w_sigma * w_pi * self.block.quadratic_form(&u).re
    }

    fn corrected_g2(&self, phi_sigma: f64, phi_pi: f64, w_sigma: f64, w_pi: f64) -> f64 {
        self.g2(phi_sigma, phi_pi, w_sigma, w_pi)
            - self.sigma.intensity(phi_sigma, w_sigma) * self.pi.intensity(phi_pi, w_pi)
            + w_sigma * w_pi
    }
}

/// First-order intensity at a detector: envelope * [p_A + p_B +
/// 2 Re(rho_AB e^{i phi})] on the matching polarization's path sector.
pub fn g1(rho: &DensityOperator, d: &DetectorPosition) -> Result<f64> {
    Ok(path_matrix(rho, d.polarization)?.intensity(d.phase, d.envelope_weight))
}

/// Joint detection rate of a sigma and a pi detector.
pub fn g2(
    rho: &DensityOperator,
    d_sigma: &DetectorPosition,
    d_pi: &DetectorPosition,
) -> Result<f64> {
    debug_assert!(d_sigma.polarization == Polarization::Sigma);
    debug_assert!(d_pi.polarization == Polarization::Pi);
    Ok(CorrelatorKernel::new(rho)?.g2(
        d_sigma.phase,
        d_pi.phase,
        d_sigma.envelope_weight,
        d_pi.envelope_weight,
    ))
}

/// Corrected two-particle correlator g2 - g1*g1 + envelope product, which
/// removes the uncorrelated background and is non-negative everywhere.
pub fn corrected_g2(
    rho: &DensityOperator,
    d_sigma: &DetectorPosition,
    d_pi: &DetectorPosition,
) -> Result<f64> {
    Ok(CorrelatorKernel::new(rho)?.corrected_g2(
        d_sigma.phase,
        d_pi.phase,
        d_sigma.envelope_weight,
        d_pi.envelope_weight,
    ))
}

// ---------------------------------------------------------------------------
// Extremum scans
// ---------------------------------------------------------------------------

/// Golden-section search on [a, b]; returns (x, f(x)) at the extremum.
fn golden(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, maximize: bool) -> (f64, f64) {
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let sign = if maximize { 1.0 } else { -1.0 };
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = sign * f(c);
    let mut fd = sign * f(d);
    while (b - a).abs() > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = sign * f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = sign * f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Grid scan plus golden refinement of a 2-pi-periodic single-harmonic
/// function; returns (max, min).
fn scan_extrema_1d(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let h = std::f64::consts::TAU / SCAN_GRID as f64;
    let mut best_max = (0usize, f64::NEG_INFINITY);
    let mut best_min = (0usize, f64::INFINITY);
    for k in 0..SCAN_GRID {
        let v = f(k as f64 * h);
        if v > best_max.1 {
            best_max = (k, v);
        }
        if v < best_min.1 {
            best_min = (k, v);
        }
    }
    let refine = |k: usize, maximize: bool| {
        let x = k as f64 * h;
        golden(&f, x - h, x + h, maximize).1
    };
    (refine(best_max.0, true), refine(best_min.0, false))
}

/// Grid scan plus coordinate-wise golden refinement over two phases;
/// returns (max, min).
fn scan_extrema_2d(f: impl Fn(f64, f64) -> f64) -> (f64, f64) {
    let h = std::f64::consts::TAU / SCAN_GRID as f64;
    let mut best_max = (0usize, 0usize, f64::NEG_INFINITY);
    let mut best_min = (0usize, 0usize, f64::INFINITY);
    for i in 0..SCAN_GRID {
        let x = i as f64 * h;
        for j in 0..SCAN_GRID {
            let v = f(x, j as f64 * h);
            if v > best_max.2 {
                best_max = (i, j, v);
            }
            if v < best_min.2 {
                best_min = (i, j, v);
            }
        }
    }
    // Alternating 1-D golden passes; the fringe is a single harmonic in the
    // phase sum, so the first pass already lands on the joint extremum and
    // the remaining passes only polish it.
    let refine = |i: usize, j: usize, maximize: bool| -> f64 {
        let mut x = i as f64 * h;
        let mut y = j as f64 * h;
        let mut value = f(x, y);
        for _ in 0..3 {
            let (nx, _) = golden(&|p| f(p, y), x - 2.0 * h, x + 2.0 * h, maximize);
            x = nx;
            let (ny, v) = golden(&|p| f(x, p), y - 2.0 * h, y + 2.0 * h, maximize);
            y = ny;
            value = v;
        }
        value
    };
    (
        refine(best_max.0, best_max.1, true),
        refine(best_min.0, best_min.1, false),
    )
}

/// Two-particle visibility (max - min)/(max + min) of the corrected
/// correlator under joint phase scans.
pub fn two_particle_visibility(rho: &DensityOperator) -> Result<f64> {
    let kernel = CorrelatorKernel::new(rho)?;
    let (max, min) = scan_extrema_2d(|ps, pp| kernel.corrected_g2(ps, pp, 1.0, 1.0));
    if max <= 0.0 {
        return Err(Error::Degenerate(
            "corrected correlator vanishes everywhere".into(),
        ));
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

/// Sigma-fringe visibility conditioned on detecting the pi photon at the
/// given detector (quantum-eraser condition: equidistant placement means
/// phase 0). The visibility is obtained by a numerical phase scan of the
/// conditioned intensity, independent of the closed forms.
pub fn conditioned_fringe(rho: &DensityOperator, pi_detector: &DetectorPosition) -> Result<f64> {
    if pi_detector.polarization != Polarization::Pi {
        return Err(Error::MalformedSelector);
    }
    let block = biphoton_block(rho);
    let ep = Complex64::cis(pi_detector.phase);
    // Conditioned sigma path matrix <s, u_pi| rho |s', u_pi> with
    // u_pi = (|pi_A> + e^{i phi}|pi_B>)/sqrt(2).
    let idx = |s: usize, p: usize| 2 * s + p;
    let mut cond = [[Complex64::new(0.0, 0.0); 2]; 2];
    for s in 0..2 {
        for sp in 0..2 {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..2 {
                for pp in 0..2 {
                    let up = if p == 1 { ep } else { Complex64::new(1.0, 0.0) };
                    let upp = if pp == 1 { ep } else { Complex64::new(1.0, 0.0) };
                    acc += up.conj() * block.get(idx(s, p), idx(sp, pp)) * upp;
                }
            }
            cond[s][sp] = acc * 0.5;
        }
    }
    let prob = (cond[0][0] + cond[1][1]).re;
    if prob < PROB_EPSILON {
        return Err(Error::ZeroConditioningProbability);
    }
    let path = PathMatrix {
        aa: cond[0][0].re / prob,
        bb: cond[1][1].re / prob,
        ab: cond[0][1] / prob,
    };
    let (max, min) = scan_extrema_1d(|phase| path.intensity(phase, 1.0));
    if max <= 0.0 {
        return Err(Error::ZeroConditioningProbability);
    }
    Ok(((max - min) / (max + min)).clamp(0.0, 1.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo coincidence sampling
// ---------------------------------------------------------------------------

/// Binned coincidence histogram over a joint phase grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CoincidenceCounts {
    /// Phase grid shared by both detectors.
    pub phases: Vec<f64>,
    /// Row-major counts indexed by sigma bin * nbins + pi bin.
    pub counts: Vec<u64>,
    pub total: u64,
    pub seed: u64,
}

impl CoincidenceCounts {
    pub fn nbins(&self) -> usize {
        self.phases.len()
    }

    /// CSV export: columns phi_sigma, phi_pi, outcome, count.
    pub fn to_csv(&self) -> String {
        let n = self.nbins();
        let rows = (0..n).flat_map(|i| {
            let phases = &self.phases;
            let counts = &self.counts;
            (0..n).map(move |j| {
                vec![
                    fmt_f64(phases[i]),
                    fmt_f64(phases[j]),
                    "coincidence".to_string(),
                    counts[i * n + j].to_string(),
                ]
            })
        });
        csv(&["phi_sigma", "phi_pi", "outcome", "count"], rows)
    }
}

/// Worker cap: ERASER_SIM_THREADS if set, else available parallelism.
pub fn worker_count() -> usize {
    std::env::var("ERASER_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
}

/// SplitMix64 finalizer used to derive per-batch generator streams.
fn mix_seed(seed: u64, batch: u64) -> u64 {
    let mut z = seed ^ batch.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Draw n coincidence events from the joint detection distribution over the
/// phase grid by inverse-CDF sampling. The generator is ChaCha12 with one
/// stream per 8192-event batch, so the histogram is bit-reproducible for a
/// fixed (state, n, seed, grid) regardless of the worker count.
pub fn sample_events(
    rho: &DensityOperator,
    n: u64,
    seed: u64,
    nbins: usize,
) -> Result<CoincidenceCounts> {
    if n == 0 {
        return Err(Error::NoSamples);
    }
    if nbins < 2 {
        return Err(Error::EmptyGrid);
    }
    let kernel = CorrelatorKernel::new(rho)?;
    let h = std::f64::consts::TAU / nbins as f64;
    let phases: Vec<f64> = (0..nbins).map(|k| k as f64 * h).collect();
    let mut weights = Vec::with_capacity(nbins * nbins);
    for &ps in &phases {
        for &pp in &phases {
            weights.push(kernel.corrected_g2(ps, pp, 1.0, 1.0).max(0.0));
        }
    }
    let total_weight: f64 = weights.iter().sum();
    if total_weight <= 0.0 {
        return Err(Error::Degenerate("no coincidence weight on the grid".into()));
    }
    let mut cdf = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total_weight;
        cdf.push(acc);
    }
    *cdf.last_mut().unwrap() = 1.0;

    let num_batches = n.div_ceil(BATCH_SIZE);
    let sample_batch = |batch: u64| -> Vec<u64> {
        let events = BATCH_SIZE.min(n - batch * BATCH_SIZE);
        let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, batch));
        let mut local = vec![0u64; cdf.len()];
        for _ in 0..events {
            let u: f64 = rng.gen();
            let bin = cdf.partition_point(|&c| c < u).min(cdf.len() - 1);
            local[bin] += 1;
        }
        local
    };

    let workers = worker_count().min(num_batches as usize).max(1);
    let mut counts = vec![0u64; nbins * nbins];
    if workers == 1 {
        for batch in 0..num_batches {
            for (slot, v) in counts.iter_mut().zip(sample_batch(batch)) {
                *slot += v;
            }
        }
    } else {
        // Batches are statically chunked; u64 summation is exact and
        // order-independent, so the merge is deterministic.
        let chunk = num_batches.div_ceil(workers as u64);
        let partials = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers as u64)
                .map(|w| {
                    let sample_batch = &sample_batch;
                    scope.spawn(move || {
                        let mut local = vec![0u64; nbins * nbins];
                        let start = w * chunk;
                        let end = ((w + 1) * chunk).min(num_batches);
                        for batch in start..end {
                            for (slot, v) in local.iter_mut().zip(sample_batch(batch)) {
                                *slot += v;
                            }
                        }
                        local
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("sampler worker panicked"))
                .collect::<Vec<_>>()
        });
        for partial in partials {
            for (slot, v) in counts.iter_mut().zip(partial) {
                *slot += v;
            }
        }
    }
    Ok(CoincidenceCounts {
        phases,
        counts,
        total: n,
        seed,
    })
}

fn solve3(a: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    // Inverse via adjugate; returns None when singular.
    let det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
        - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let cof = |r1: usize, c1: usize, r2: usize, c2: usize| {
        a[r1][c1] * a[r2][c2] - a[r1][c2] * a[r2][c1]
    };
    Some([
        [
            cof(1, 1, 2, 2) * inv_det,
            -cof(0, 1, 2, 2) * inv_det,
            cof(0, 1, 1, 2) * inv_det,
        ],
        [
            -cof(1, 0, 2, 2) * inv_det,
            cof(0, 0, 2, 2) * inv_det,
            -cof(0, 0, 1, 2) * inv_det,
        ],
        [
            cof(1, 0, 2, 1) * inv_det,
            -cof(0, 0, 2, 1) * inv_det,
            cof(0, 0, 1, 1) * inv_det,
        ],
    ])
}

/// Fit a + p cos(phi) + q sin(phi) to the counts collapsed onto the phase
/// sum and return (visibility estimate, standard error). The fringe lives in
/// phi_sigma + phi_pi, which lands back on the shared grid.
pub fn visibility_from_counts(c: &CoincidenceCounts) -> Result<(f64, f64)> {
    if c.total == 0 {
        return Err(Error::DegenerateFit("no events".into()));
    }
    let n = c.nbins();
    let mut y = vec![0.0f64; n];
    for i in 0..n {
        for j in 0..n {
            y[(i + j) % n] += c.counts[i * n + j] as f64;
        }
    }
    if y.iter().filter(|&&v| v > 0.0).count() < 2 {
        return Err(Error::DegenerateFit("fewer than 2 occupied phase bins".into()));
    }
    // Weighted least squares with Poisson weights w = 1/max(y, 1).
    let mut xtwx = [[0.0f64; 3]; 3];
    let mut xtwy = [0.0f64; 3];
    for (k, &yk) in y.iter().enumerate() {
        let phi = c.phases[k];
        let row = [1.0, phi.cos(), phi.sin()];
        let w = 1.0 / yk.max(1.0);
        for r in 0..3 {
            for s in 0..3 {
                xtwx[r][s] += w * row[r] * row[s];
            }
            xtwy[r] += w * row[r] * yk;
        }
    }
    let cov = solve3(xtwx).ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    let beta: Vec<f64> = (0..3)
        .map(|r| (0..3).map(|s| cov[r][s] * xtwy[s]).sum())
        .collect();
    let (a, p, q) = (beta[0], beta[1], beta[2]);
    if a <= 0.0 {
        return Err(Error::DegenerateFit("nonpositive mean rate".into()));
    }
    let amp = (p * p + q * q).sqrt();
    let estimate = amp / a;
    // Delta method on (a, p, q); for a flat fringe fall back to the raw
    // amplitude uncertainty.
    let grad = if amp > 1e-300 {
        [-amp / (a * a), p / (amp * a), q / (amp * a)]
    } else {
        [0.0, 1.0 / a, 1.0 / a]
    };
    let mut var = 0.0;
    for r in 0..3 {
        for s in 0..3 {
            var += grad[r] * cov[r][s] * grad[s];
        }
    }
    Ok((estimate, var.max(0.0).sqrt()))
}
