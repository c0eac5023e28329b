//! Deterministic parallel shot loop and weighted ratio accumulators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Shots per work unit. Blocks are reduced in index order, so results do
/// not depend on how rayon schedules them.
pub(crate) const BLOCK: u64 = 1 << 14;

/// Runs `step` once per shot with a generator keyed by `(seed, shot)` and
/// merges the per-block accumulators left to right.
pub(crate) fn run_blocks<A, I, S, M>(shots: u64, seed: u64, init: I, step: S, merge: M) -> A
where
    A: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, u64, &mut ChaCha8Rng) + Sync,
    M: Fn(&mut A, A),
{
    let base = ChaCha8Rng::seed_from_u64(seed);
    let blocks = shots.div_ceil(BLOCK);
    let partials: Vec<A> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            let end = ((b + 1) * BLOCK).min(shots);
            for shot in b * BLOCK..end {
                let mut rng = shot_rng(&base, shot);
                step(&mut acc, shot, &mut rng);
            }
            acc
        })
        .collect();
    let mut total = init();
    for p in partials {
        merge(&mut total, p);
    }
    total
}

pub(crate) fn shot_rng(base: &ChaCha8Rng, shot: u64) -> ChaCha8Rng {
    let mut rng = base.clone();
    rng.set_stream(shot);
    rng
}

/// Geometric pair-number proposal `Q(n) ~ q^(n - min)` on `min..=max`,
/// reweighted to the thermal target `(1 - eps) eps^(n - min)`. The target
/// is scaled by `eps^-min`, which cancels in every fidelity ratio and keeps
/// `eps = 0` well defined.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PairSampler {
    eps: f64,
    q: f64,
    min: u32,
    span: Option<u32>,
    norm: f64,
}

/// Hard cap on sampled pair numbers when the distribution is untruncated.
const N_CAP: u32 = 10_000;

impl PairSampler {
    pub(crate) fn new(eps: f64, q_floor: f64, min: u32, max: Option<u32>) -> Self {
        let q = eps.max(q_floor);
        let span = max.map(|m| m.saturating_sub(min) + 1);
        let norm = match span {
            Some(k) => 1.0 - q.powi(k as i32),
            None => 1.0,
        };
        Self {
            eps,
            q,
            min,
            span,
            norm,
        }
    }

    pub(crate) fn sample<R: Rng>(&self, rng: &mut R) -> (u32, f64) {
        let u: f64 = rng.random();
        let k = ((1.0 - u * self.norm).ln() / self.q.ln()).floor();
        let cap = self.span.map_or(N_CAP, |s| s - 1);
        let k = if k.is_finite() { (k as u32).min(cap) } else { cap };
        let proposal = (1.0 - self.q) * self.q.powi(k as i32) / self.norm;
        let target = (1.0 - self.eps) * self.eps.powi(k as i32);
        (self.min + k, target / proposal)
    }
}

/// Biased Bernoulli: success is drawn with `max(p, floor)` and the returned
/// likelihood ratio restores the original probability `p`.
pub(crate) fn tilted_bernoulli<R: Rng>(p: f64, floor: f64, rng: &mut R) -> (bool, f64) {
    if p <= 0.0 {
        return (false, 1.0);
    }
    if p >= 1.0 {
        return (true, 1.0);
    }
    let t = p.max(floor);
    if rng.random::<f64>() < t {
        (true, p / t)
    } else {
        (false, (1.0 - p) / (1.0 - t))
    }
}

/// Number of `n` photons surviving a channel of transmission `p`, with
/// per-photon tilting as in [`tilted_bernoulli`].
pub(crate) fn tilted_binomial<R: Rng>(n: u32, p: f64, floor: f64, rng: &mut R) -> (u32, f64) {
    let mut k = 0;
    let mut w = 1.0;
    for _ in 0..n {
        let (hit, lr) = tilted_bernoulli(p, floor, rng);
        k += hit as u32;
        w *= lr;
    }
    (k, w)
}

/// Sums for the weighted ratio estimator `sum(w d) / sum(w h)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct RatioAcc {
    sh: f64,
    shh: f64,
    sd: f64,
    sdd: f64,
    sdh: f64,
}

impl RatioAcc {
    pub(crate) fn push(&mut self, h: f64, d: f64) {
        self.sh += h;
        self.shh += h * h;
        self.sd += d;
        self.sdd += d * d;
        self.sdh += d * h;
    }

    pub(crate) fn merge(&mut self, o: &RatioAcc) {
        self.sh += o.sh;
        self.shh += o.shh;
        self.sd += o.sd;
        self.sdd += o.sdd;
        self.sdh += o.sdh;
    }

    /// Ratio and its delta-method standard error; `None` if nothing heralded.
    pub(crate) fn estimate(&self) -> Option<(f64, f64)> {
        if self.sh <= 0.0 {
            return None;
        }
        let f = self.sd / self.sh;
        let resid = (self.sdd - 2.0 * f * self.sdh + f * f * self.shh).max(0.0);
        Some((f, resid.sqrt() / self.sh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blocks_cover_every_shot_once() {
        let shots = 3 * BLOCK + 17;
        let got = run_blocks(
            shots,
            1,
            Vec::new,
            |v: &mut Vec<u64>, s, _| v.push(s),
            |a, b| a.extend(b),
        );
        assert_eq!(got, (0..shots).collect::<Vec<_>>());
    }

    #[test]
    fn shot_streams_are_keyed() {
        let base = ChaCha8Rng::seed_from_u64(5);
        let a: u64 = shot_rng(&base, 3).random();
        let b: u64 = shot_rng(&base, 3).random();
        let c: u64 = shot_rng(&base, 4).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn pair_sampler_unbiased() {
        // E_Q[w 1{n = j}] = P(j) for the scaled target
        let eps = 0.1;
        let s = PairSampler::new(eps, 0.3, 1, Some(4));
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut acc = [0.0; 5];
        let trials = 400_000;
        for _ in 0..trials {
            let (n, w) = s.sample(&mut rng);
            assert!((1..=4).contains(&n));
            acc[n as usize] += w;
        }
        for j in 1..=4 {
            let expect = (1.0 - eps) * eps.powi(j - 1);
            let got = acc[j as usize] / trials as f64;
            assert!((got - expect).abs() < 0.01 * expect + 1e-4, "n={j}: {got} vs {expect}");
        }
    }

    #[test]
    fn tilted_binomial_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 200_000;
        let mut mean = 0.0;
        for _ in 0..trials {
            let (k, w) = tilted_binomial(3, 0.02, 0.5, &mut rng);
            mean += w * k as f64;
        }
        mean /= trials as f64;
        assert!((mean - 0.06).abs() < 0.003, "{mean}");
    }

    #[test]
    fn ratio_stderr_matches_binomial() {
        let mut acc = RatioAcc::default();
        for i in 0..1000 {
            acc.push(1.0, if i % 4 == 0 { 1.0 } else { 0.0 });
        }
        let (f, se) = acc.estimate().unwrap();
        assert_eq!(f, 0.25);
        assert!((se - (0.25f64 * 0.75 / 1000.0).sqrt()).abs() < 1e-12);
        assert!(RatioAcc::default().estimate().is_none());
    }
}
