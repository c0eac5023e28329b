//! Qubit state tomography from time-bin projection counts.
//!
//! Projection order throughout is `[e, l, +, -, L, R]` with
//! `L = (|e> + i|l>)/sqrt(2)`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, invalid, Error, Result};
use crate::qubits::{fidelity_pure, purity, DensityMatrix2, TimeBinQubit};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProjectionCounts {
    pub n0: f64,
    pub n1: f64,
    pub n_plus: f64,
    pub n_minus: f64,
    pub n_left: f64,
    pub n_right: f64,
}

impl ProjectionCounts {
    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            n0: a[0],
            n1: a[1],
            n_plus: a[2],
            n_minus: a[3],
            n_left: a[4],
            n_right: a[5],
        }
    }

    pub fn as_array(&self) -> [f64; 6] {
        [
            self.n0,
            self.n1,
            self.n_plus,
            self.n_minus,
            self.n_left,
            self.n_right,
        ]
    }

    pub fn validate(&self) -> Result<()> {
        for (i, n) in self.as_array().into_iter().enumerate() {
            if !(n.is_finite() && n >= 0.0) {
                return Err(invalid("counts", format!("entry {i} = {n} is not a finite count >= 0")));
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.as_array().iter().sum()
    }

    /// Born-rule means for `per_basis` detections in each of the three bases.
    pub fn expected(rho: &DensityMatrix2, per_basis: f64) -> Self {
        let [x, y, z] = rho.bloch();
        let h = per_basis / 2.0;
        Self {
            n0: (h * (1.0 + z)).max(0.0),
            n1: (h * (1.0 - z)).max(0.0),
            n_plus: (h * (1.0 + x)).max(0.0),
            n_minus: (h * (1.0 - x)).max(0.0),
            n_left: (h * (1.0 + y)).max(0.0),
            n_right: (h * (1.0 - y)).max(0.0),
        }
    }
}

/// Interferometer phase of the final analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PhaseSetting {
    Zero,
    HalfPi,
}

impl PhaseSetting {
    pub const ALL: [PhaseSetting; 2] = [PhaseSetting::Zero, PhaseSetting::HalfPi];

    pub fn radians(self) -> f64 {
        match self {
            PhaseSetting::Zero => 0.0,
            PhaseSetting::HalfPi => FRAC_PI_2,
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Detector {
    One,
    Two,
}

impl Detector {
    pub const ALL: [Detector; 2] = [Detector::One, Detector::Two];

    fn index(self) -> usize {
        self as usize
    }
}

/// Arrival bins after the analyzer: early, middle (interfering) and late-late.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeBin {
    E,
    L,
    LL,
}

impl TimeBin {
    pub const ALL: [TimeBin; 3] = [TimeBin::E, TimeBin::L, TimeBin::LL];

    fn index(self) -> usize {
        self as usize
    }
}

/// State projected on by the middle bin of `detector` at `phase`:
/// `(|e> + s e^{-i phi}|l>)/sqrt(2)` with `s = +1` for detector 2 and `-1`
/// for detector 1. Detector 2 therefore sees `+` at 0 and `R` at pi/2.
pub fn analyzer_state(phase: PhaseSetting, detector: Detector) -> TimeBinQubit {
    let s = match detector {
        Detector::One => -1.0,
        Detector::Two => 1.0,
    };
    let b = Complex64::from_polar(s * FRAC_1_SQRT_2, -phase.radians());
    TimeBinQubit::new(Complex64::new(FRAC_1_SQRT_2, 0.0), b).expect("unit vector")
}

/// Heralded counts indexed by analyzer phase, detector and arrival bin.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RawBinCounts {
    n: [[[f64; 3]; 2]; 2],
}

impl RawBinCounts {
    pub fn get(&self, phase: PhaseSetting, detector: Detector, bin: TimeBin) -> f64 {
        self.n[phase.index()][detector.index()][bin.index()]
    }

    pub fn set(&mut self, phase: PhaseSetting, detector: Detector, bin: TimeBin, value: f64) {
        self.n[phase.index()][detector.index()][bin.index()] = value;
    }

    pub fn add(&mut self, phase: PhaseSetting, detector: Detector, bin: TimeBin, value: f64) {
        self.n[phase.index()][detector.index()][bin.index()] += value;
    }

    pub fn validate(&self) -> Result<()> {
        for p in PhaseSetting::ALL {
            for d in Detector::ALL {
                for b in TimeBin::ALL {
                    let v = self.get(p, d, b);
                    if !(v.is_finite() && v >= 0.0) {
                        return Err(invalid(
                            "bin_counts",
                            format!("{p:?}/{d:?}/{b:?} = {v} is not a finite count >= 0"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.n.iter().flatten().flatten().sum()
    }
}

/// Maps the analyzer bins onto the six projections. Pole counts come from the
/// phase-0 setting only.
pub fn projections_from_bins(raw: &RawBinCounts) -> ProjectionCounts {
    use Detector::*;
    use PhaseSetting::*;
    use TimeBin::*;
    ProjectionCounts {
        n0: raw.get(Zero, One, E) + raw.get(Zero, Two, E),
        n1: raw.get(Zero, One, LL) + raw.get(Zero, Two, LL),
        n_minus: raw.get(Zero, One, L),
        n_plus: raw.get(Zero, Two, L),
        n_left: raw.get(HalfPi, One, L),
        n_right: raw.get(HalfPi, Two, L),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stokes {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl Stokes {
    /// `(s1, s2, s3) / s0`.
    pub fn bloch(&self) -> [f64; 3] {
        [self.s1 / self.s0, self.s2 / self.s0, self.s3 / self.s0]
    }
}

pub fn stokes(counts: &ProjectionCounts) -> Result<Stokes> {
    counts.validate()?;
    let s0 = counts.n0 + counts.n1;
    if s0 <= 0.0 {
        return Err(Error::DegenerateData("no counts in the e/l basis (S0 = 0)".into()));
    }
    Ok(Stokes {
        s0,
        s1: counts.n_plus - counts.n_minus,
        s2: counts.n_left - counts.n_right,
        s3: counts.n0 - counts.n1,
    })
}

/// `(I + sum_k (s_k/s0) sigma_k) / 2`. Hermitian with unit trace, but not
/// necessarily positive; check [`DensityMatrix2::is_physical`].
pub fn rho_linear(s: &Stokes) -> DensityMatrix2 {
    DensityMatrix2::from_bloch(s.bloch())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Relative detection efficiency of each projection, `[e, l, +, -, L, R]`.
    pub weights: [f64; 6],
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            max_iterations: 500,
            gradient_tolerance: 1e-10,
            weights: [1.0; 6],
        }
    }
}

// Bloch axis and sign of each projection: p_j = (1 + sign * r[axis]) / 2.
const PROJ: [(usize, f64); 6] = [(2, 1.0), (2, -1.0), (0, 1.0), (0, -1.0), (1, 1.0), (1, -1.0)];

/// Poisson negative log-likelihood (intensity profiled out, divided by the
/// total count) plus a `(Tr - 1)^2` gauge penalty, over the Cholesky
/// parameters `t = (t1, t2, t3, t4)` of `T = [[t1, 0], [t3 + i t4, t2]]`.
struct Objective {
    n: [f64; 6],
    w: [f64; 6],
    total: f64,
}

impl Objective {
    fn bloch_and_jacobian(t: &[f64; 4]) -> (f64, [f64; 3], [[f64; 4]; 3]) {
        let [_, t2, t3, t4] = *t;
        let s: f64 = t.iter().map(|v| v * v).sum();
        let x = 2.0 * t2 * t3 / s;
        let y = 2.0 * t2 * t4 / s;
        let z = 1.0 - 2.0 * t2 * t2 / s;
        let mut jac = [[0.0; 4]; 3];
        for k in 0..4 {
            let ds = 2.0 * t[k] / s;
            jac[0][k] = -x * ds;
            jac[1][k] = -y * ds;
            jac[2][k] = (1.0 - z) * ds;
        }
        jac[0][1] += 2.0 * t3 / s;
        jac[0][2] += 2.0 * t2 / s;
        jac[1][1] += 2.0 * t4 / s;
        jac[1][3] += 2.0 * t2 / s;
        jac[2][1] -= 4.0 * t2 / s;
        (s, [x, y, z], jac)
    }

    fn eval(&self, t: &[f64; 4]) -> (f64, [f64; 4]) {
        let (s, r, jac) = Self::bloch_and_jacobian(t);
        let mut f = 0.0;
        let mut wp_sum = 0.0;
        let mut dfdp = [0.0; 6];
        let mut p = [0.0; 6];
        for (j, &(axis, sign)) in PROJ.iter().enumerate() {
            p[j] = (0.5 * (1.0 + sign * r[axis])).max(0.0);
            wp_sum += self.w[j] * p[j];
            if self.n[j] > 0.0 {
                f -= self.n[j] * (self.w[j] * p[j]).ln();
                dfdp[j] -= self.n[j] / p[j];
            }
        }
        f += self.total * wp_sum.ln();
        for j in 0..6 {
            dfdp[j] += self.total * self.w[j] / wp_sum;
        }
        let mut grad = [0.0; 4];
        for (j, &(axis, sign)) in PROJ.iter().enumerate() {
            let dp = dfdp[j] * 0.5 * sign / self.total;
            for k in 0..4 {
                grad[k] += dp * jac[axis][k];
            }
        }
        f /= self.total;
        let pen = s - 1.0;
        f += pen * pen;
        for k in 0..4 {
            grad[k] += 4.0 * pen * t[k];
        }
        (f, grad)
    }
}

fn params_from_bloch(r: [f64; 3]) -> [f64; 4] {
    let rho = DensityMatrix2::from_bloch(r);
    let r11 = rho.get(1, 1).re;
    let r01 = rho.get(0, 1);
    let t2 = r11.sqrt();
    let t3 = r01.re / t2;
    let t4 = -r01.im / t2;
    let t1 = (rho.get(0, 0).re - t3 * t3 - t4 * t4).max(0.0).sqrt();
    [t1, t2, t3, t4]
}

fn rho_from_params(t: &[f64; 4]) -> DensityMatrix2 {
    let (_, r, _) = Objective::bloch_and_jacobian(t);
    DensityMatrix2::from_bloch(r)
}

fn dot(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64; 4]) -> f64 {
    dot(a, a).sqrt()
}

fn identity4() -> [[f64; 4]; 4] {
    let mut h = [[0.0; 4]; 4];
    for (i, row) in h.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    h
}

/// Maximum-likelihood physical state with default options.
pub fn mle_rho(counts: &ProjectionCounts) -> Result<DensityMatrix2> {
    mle_rho_with(counts, &MleOptions::default())
}

/// Bloch vector from each basis normalized by its own total; an empty basis
/// contributes zero.
fn basis_bloch(c: &ProjectionCounts) -> [f64; 3] {
    let axis = |a: f64, b: f64| if a + b > 0.0 { (a - b) / (a + b) } else { 0.0 };
    [
        axis(c.n_plus, c.n_minus),
        axis(c.n_left, c.n_right),
        axis(c.n0, c.n1),
    ]
}

const STALL_TOLERANCE: f64 = 1e-12;
const STALL_LIMIT: usize = 8;

/// Quasi-Newton (BFGS, Armijo backtracking) maximization of the Poisson
/// likelihood, started from the linear estimate pulled inside the Bloch ball.
pub fn mle_rho_with(counts: &ProjectionCounts, opts: &MleOptions) -> Result<DensityMatrix2> {
    counts.validate()?;
    if counts.total() <= 0.0 {
        return Err(Error::DegenerateData("no counts in any projection".into()));
    }
    for (j, w) in opts.weights.iter().enumerate() {
        if !(w.is_finite() && *w > 0.0) {
            return Err(invalid("weights", format!("weight {j} = {w} must be positive")));
        }
    }
    let mut r = basis_bloch(counts);
    // The factorization is degenerate at |e>; fit in the relabelled basis
    // when the data sit in the upper hemisphere.
    let flip = r[2] > 0.0;
    let mut n = counts.as_array();
    let mut w = opts.weights;
    if flip {
        for a in [&mut n, &mut w] {
            a.swap(0, 1);
            a.swap(4, 5);
        }
        r = [r[0], -r[1], -r[2]];
    }
    let finish = |t: &[f64; 4]| {
        let rho = rho_from_params(t);
        if flip {
            let m = rho.entries();
            DensityMatrix2::from_entries_unchecked([[m[1][1], m[1][0]], [m[0][1], m[0][0]]])
        } else {
            rho
        }
    };
    let obj = Objective {
        n,
        w,
        total: counts.total(),
    };

    let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    const R_START: f64 = 0.999;
    if len > R_START {
        r = r.map(|v| v * R_START / len);
    }
    let mut t = params_from_bloch(r);
    let (mut f, mut g) = obj.eval(&t);
    let mut h = identity4();
    let mut fresh = true;
    let mut stalled = 0;

    for _ in 0..opts.max_iterations {
        if norm(&g) <= opts.gradient_tolerance {
            return Ok(finish(&t));
        }
        let mut d = [0.0; 4];
        for i in 0..4 {
            d[i] = -(0..4).map(|k| h[i][k] * g[k]).sum::<f64>();
        }
        let mut slope = dot(&g, &d);
        if slope >= 0.0 {
            h = identity4();
            fresh = true;
            d = g.map(|v| -v);
            slope = -dot(&g, &g);
        }

        let mut alpha = 1.0f64;
        let mut accepted = None;
        while alpha > 1e-20 {
            let tn: [f64; 4] = std::array::from_fn(|i| t[i] + alpha * d[i]);
            let (fnew, gnew) = obj.eval(&tn);
            if fnew.is_finite() && fnew <= f + 1e-4 * alpha * slope {
                accepted = Some((tn, fnew, gnew));
                break;
            }
            alpha *= 0.5;
        }
        let Some((tn, fnew, gnew)) = accepted else {
            if fresh {
                // no descent along the gradient at working precision
                return Ok(finish(&t));
            }
            h = identity4();
            fresh = true;
            continue;
        };

        let s: [f64; 4] = std::array::from_fn(|i| tn[i] - t[i]);
        let y: [f64; 4] = std::array::from_fn(|i| gnew[i] - g[i]);
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            let rho = 1.0 / sy;
            let mut hy = [0.0; 4];
            for i in 0..4 {
                hy[i] = (0..4).map(|k| h[i][k] * y[k]).sum();
            }
            let yhy = dot(&y, &hy);
            for i in 0..4 {
                for k in 0..4 {
                    h[i][k] += -rho * (hy[i] * s[k] + s[i] * hy[k])
                        + (rho * rho * yhy + rho) * s[i] * s[k];
                }
            }
            fresh = false;
        }
        // flat directions near pure states stall the gradient test
        if f - fnew <= STALL_TOLERANCE * (1.0 + f.abs()) {
            stalled += 1;
        } else {
            stalled = 0;
        }
        t = tn;
        f = fnew;
        g = gnew;
        if stalled >= STALL_LIMIT {
            return Ok(finish(&t));
        }
    }
    if norm(&g) <= opts.gradient_tolerance {
        return Ok(finish(&t));
    }
    Err(Error::Convergence {
        iterations: opts.max_iterations,
        grad_norm: norm(&g),
        best: Box::new(finish(&t)),
    })
}

/// MLE, falling back to the best iterate when the iteration budget runs out.
pub fn mle_rho_or_best(counts: &ProjectionCounts, opts: &MleOptions) -> Result<DensityMatrix2> {
    match mle_rho_with(counts, opts) {
        Err(Error::Convergence { best, .. }) => Ok(*best),
        other => other,
    }
}

/// Which perturbations [`fidelity_error`] applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSources {
    #[default]
    ShotAndPhase,
    ShotOnly,
    PhaseOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityError {
    pub f_mean: f64,
    pub f_std: f64,
    pub purity_mean: f64,
    pub purity_std: f64,
}

/// Smallest number of trials accepted by [`fidelity_error`].
pub const MIN_TRIALS: usize = 1000;

/// `sqrt(da^2 + di^2 + ds^2)` for independent phase errors.
pub fn joint_phase_error(components: &[f64]) -> f64 {
    components.iter().map(|d| d * d).sum::<f64>().sqrt()
}

/// Phase sensitivity `dN/dtheta` of the superposition projections
/// `[+, -, L, R]`, from `N(theta) = C (1 + x cos(theta) + y sin(theta)) / 2`.
pub fn phase_derivatives(counts: &ProjectionCounts) -> [f64; 4] {
    let cx = counts.n_plus + counts.n_minus;
    let cy = counts.n_left + counts.n_right;
    let x = if cx > 0.0 { (counts.n_plus - counts.n_minus) / cx } else { 0.0 };
    let y = if cy > 0.0 { (counts.n_left - counts.n_right) / cy } else { 0.0 };
    [cx * y / 2.0, -cx * y / 2.0, -cy * x / 2.0, cy * x / 2.0]
}

/// Spread of the reconstructed fidelity under Poisson resampling of each
/// count and Gaussian phase jitter of width `delta_theta` on the
/// superposition projections. Trial `k` draws from its own stream derived
/// from `(seed, k)`, so the result does not depend on the thread count.
pub fn fidelity_error(
    counts: &ProjectionCounts,
    target: &TimeBinQubit,
    delta_theta: f64,
    trials: usize,
    seed: u64,
) -> Result<FidelityError> {
    fidelity_error_with(
        counts,
        target,
        delta_theta,
        trials,
        seed,
        NoiseSources::ShotAndPhase,
        &MleOptions::default(),
    )
}

pub fn fidelity_error_with(
    counts: &ProjectionCounts,
    target: &TimeBinQubit,
    delta_theta: f64,
    trials: usize,
    seed: u64,
    noise: NoiseSources,
    opts: &MleOptions,
) -> Result<FidelityError> {
    counts.validate()?;
    stokes(counts)?;
    check_range("delta_theta", delta_theta, 0.0, f64::MAX)?;
    if trials < MIN_TRIALS {
        return Err(invalid("trials", format!("{trials} < {MIN_TRIALS}")));
    }
    let base = counts.as_array();
    let deriv = phase_derivatives(counts);
    let shot = noise != NoiseSources::PhaseOnly;
    let phase = noise != NoiseSources::ShotOnly;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");

    let samples: Vec<Result<(f64, f64)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut n = base;
            if shot {
                for v in n.iter_mut() {
                    if *v > 0.0 {
                        *v = Poisson::new(*v).expect("positive mean").sample(&mut rng);
                    }
                }
            }
            if phase {
                for (j, d) in deriv.iter().enumerate() {
                    let g: f64 = normal.sample(&mut rng);
                    n[2 + j] = (n[2 + j] + d * delta_theta * g).max(0.0);
                }
            }
            let rho = mle_rho_or_best(&ProjectionCounts::from_array(n), opts)?;
            Ok((fidelity_pure(&rho, target)?, purity(&rho)?))
        })
        .collect();

    let mut f = Vec::with_capacity(trials);
    let mut p = Vec::with_capacity(trials);
    for s in samples {
        let (fi, pi) = s?;
        f.push(fi);
        p.push(pi);
    }
    let (f_mean, f_std) = mean_std(&f);
    let (purity_mean, purity_std) = mean_std(&p);
    Ok(FidelityError {
        f_mean,
        f_std,
        purity_mean,
        purity_std,
    })
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn pc(a: [f64; 6]) -> ProjectionCounts {
        ProjectionCounts::from_array(a)
    }

    #[test]
    fn bin_map() {
        let mut raw = RawBinCounts::default();
        for p in PhaseSetting::ALL {
            for d in Detector::ALL {
                for b in TimeBin::ALL {
                    raw.set(p, d, b, 7.0);
                }
            }
        }
        let c = projections_from_bins(&raw);
        assert_eq!(c.as_array(), [14.0, 14.0, 7.0, 7.0, 7.0, 7.0]);

        let mut raw = RawBinCounts::default();
        raw.set(PhaseSetting::Zero, Detector::One, TimeBin::E, 5.0);
        raw.set(PhaseSetting::Zero, Detector::Two, TimeBin::E, 6.0);
        assert_eq!(projections_from_bins(&raw).as_array(), [11.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn analyzer_states() {
        let a = |p, d| analyzer_state(p, d);
        assert!(a(PhaseSetting::Zero, Detector::Two).same_ray(&TimeBinQubit::plus()));
        assert!(a(PhaseSetting::Zero, Detector::One).same_ray(&TimeBinQubit::minus()));
        assert!(a(PhaseSetting::HalfPi, Detector::One).same_ray(&TimeBinQubit::left()));
        assert!(a(PhaseSetting::HalfPi, Detector::Two).same_ray(&TimeBinQubit::right()));
    }

    #[test]
    fn stokes_examples() {
        let s = stokes(&pc([100.0, 0.0, 50.0, 50.0, 50.0, 50.0])).unwrap();
        assert_eq!((s.s0, s.s1, s.s2, s.s3), (100.0, 0.0, 0.0, 100.0));
        let s = stokes(&pc([50.0, 50.0, 100.0, 0.0, 50.0, 50.0])).unwrap();
        assert_eq!((s.s0, s.s1, s.s2, s.s3), (100.0, 100.0, 0.0, 0.0));
        let s = stokes(&pc([50.0; 6])).unwrap();
        assert_eq!((s.s0, s.s1, s.s2, s.s3), (100.0, 0.0, 0.0, 0.0));
        assert!(matches!(
            stokes(&pc([0.0, 0.0, 1.0, 1.0, 1.0, 1.0])),
            Err(Error::DegenerateData(_))
        ));
    }

    #[test]
    fn linear_inversion() {
        let e = rho_linear(&stokes(&pc([100.0, 0.0, 50.0, 50.0, 50.0, 50.0])).unwrap());
        assert!(e.trace_distance(&TimeBinQubit::early().projector()) < 1e-15);
        let m = rho_linear(&stokes(&pc([50.0; 6])).unwrap());
        assert!(m.trace_distance(&DensityMatrix2::maximally_mixed()) < 1e-15);
        let bad = rho_linear(&Stokes {
            s0: 100.0,
            s1: 80.0,
            s2: 80.0,
            s3: 80.0,
        });
        assert!(!bad.is_physical());
        let (lo, _) = bad.eigenvalues();
        assert!((lo - (1.0 - 1.92f64.sqrt()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn mle_pure_early() {
        let c = ProjectionCounts::expected(&TimeBinQubit::early().projector(), 1e4);
        let rho = mle_rho(&c).unwrap();
        assert!(rho.trace_distance(&TimeBinQubit::early().projector()) < 1e-6);
    }

    #[test]
    fn mle_uniform_counts() {
        let rho = mle_rho(&pc([50.0; 6])).unwrap();
        assert!(rho.trace_distance(&DensityMatrix2::maximally_mixed()) < 1e-6);
    }

    #[test]
    fn mle_unphysical_stokes() {
        // s = (100, 80, 80, 80); the likelihood is symmetric in the three axes
        let rho = mle_rho(&pc([90.0, 10.0, 90.0, 10.0, 90.0, 10.0])).unwrap();
        assert!(rho.is_physical());
        assert!(rho.bloch_norm() <= 1.0 + 1e-12);
        let v = 1.0 / 3f64.sqrt();
        let target = DensityMatrix2::from_bloch([v, v, v]);
        assert!(rho.trace_distance(&target) < 1e-3);
    }

    #[test]
    fn mle_matches_linear_when_physical() {
        let rho = DensityMatrix2::from_bloch([0.3, -0.2, 0.5]);
        let c = ProjectionCounts::expected(&rho, 1000.0);
        let lin = rho_linear(&stokes(&c).unwrap());
        let mle = mle_rho(&c).unwrap();
        assert!(lin.trace_distance(&mle) < 1e-6);
    }

    #[test]
    fn weights_scale_expected_counts() {
        let rho = DensityMatrix2::from_bloch([0.1, 0.4, -0.3]);
        let w = [1.0, 1.0, 0.5, 0.5, 2.0, 2.0];
        let mut a = ProjectionCounts::expected(&rho, 1000.0).as_array();
        for j in 0..6 {
            a[j] *= w[j];
        }
        let opts = MleOptions {
            weights: w,
            ..MleOptions::default()
        };
        let mle = mle_rho_with(&pc(a), &opts).unwrap();
        assert!(mle.trace_distance(&rho) < 1e-6);
    }

    #[test]
    fn convergence_error_carries_best() {
        let opts = MleOptions {
            max_iterations: 1,
            ..MleOptions::default()
        };
        match mle_rho_with(&pc([900.0, 3.0, 10.0, 500.0, 700.0, 1.0]), &opts) {
            Err(Error::Convergence { best, .. }) => assert!(best.is_physical()),
            other => panic!("expected convergence error, got {other:?}"),
        }
    }

    #[test]
    fn fidelity_error_noise_free_limit() {
        let c = ProjectionCounts::expected(&TimeBinQubit::plus().projector(), 1e10);
        let e = fidelity_error(&c, &TimeBinQubit::plus(), 0.0, 1000, 1).unwrap();
        assert!(e.f_std < 1e-4, "{e:?}");
        assert!(e.f_mean > 1.0 - 1e-4);
    }

    #[test]
    fn fidelity_error_deterministic_and_validated() {
        let c = pc([80.0, 4.0, 42.0, 42.0, 42.0, 42.0]);
        let a = fidelity_error(&c, &TimeBinQubit::early(), 0.01, 1000, 9).unwrap();
        let b = fidelity_error(&c, &TimeBinQubit::early(), 0.01, 1000, 9).unwrap();
        assert_eq!(a, b);
        assert!(fidelity_error(&c, &TimeBinQubit::early(), 0.01, 999, 9).is_err());
    }

    #[test]
    fn joint_phase() {
        let d = joint_phase_error(&[1.1e-3 * PI, 1.1e-3 * PI, 2.4e-3 * PI]);
        assert!((d / PI - 2.9e-3).abs() < 0.05e-3);
    }

    #[test]
    fn phase_derivative_signs() {
        // |+>: rotating theta moves counts between L and R, not between + and -
        let c = ProjectionCounts::expected(&TimeBinQubit::plus().projector(), 100.0);
        let d = phase_derivatives(&c);
        assert!(d[0].abs() < 1e-12 && d[1].abs() < 1e-12);
        assert!((d[2] + 50.0).abs() < 1e-12 && (d[3] - 50.0).abs() < 1e-12);
    }

    fn count() -> impl Strategy<Value = f64> {
        prop_oneof![
            Just(0.0),
            0.0f64..10.0,
            0.0f64..1e3,
            (0.0f64..1e9),
        ]
    }

    proptest! {
        #[test]
        fn mle_always_physical(a in proptest::array::uniform6(count())) {
            let c = pc(a);
            prop_assume!(c.n0 + c.n1 > 0.0);
            let rho = mle_rho_or_best(&c, &MleOptions::default()).unwrap();
            prop_assert!(rho.validate().is_ok(), "{:?} -> {:?}", a, rho);
        }

        #[test]
        fn mle_agrees_with_linear(r in proptest::array::uniform3(-1.0f64..1.0), scale in 10.0f64..1e6) {
            let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            prop_assume!(len < 0.98);
            let c = ProjectionCounts::expected(&DensityMatrix2::from_bloch(r), scale);
            let lin = rho_linear(&stokes(&c).unwrap());
            prop_assert!(lin.trace_distance(&mle_rho(&c).unwrap()) < 1e-6);
        }
    }
}
