//! Composable finite-key engine for BBM92.
//!
//! A sifted block of `m` coincidences is split into a parameter-estimation
//! sample `k = floor(beta m)` and raw key `n = m - k`. The protocol
//! tolerates a block QBER up to `delta` with excess-error margin `nu` and
//! sampling refinement `xi`; the extractable key length is bounded by
//!
//! `l <= log2[4 (10^-s - 2^-t - 2 eps_pe)^2] + n (1 - h2(delta+nu)) - r - t`
//!
//! with error-correction leakage `r = 1.19 n h2(delta)` and correctness
//! term `t = log2 10^(s+2)`. Eliminating the key-rate variable this way
//! reduces the search from four dimensions to the (beta, nu, xi) grid;
//! at the optimum the privacy-amplification budget is saturated, so the
//! bound is tight. The grid is constructed to satisfy
//! `0 < beta <= 1/2`, `0 < xi < nu < 1/2 - delta` and every admissible
//! triplet is scored; the scan over `beta` is parallelised with a
//! deterministic reduction (max key length, ties broken by grid index).
//!
//! Blocks are carved out of a pass by sorting time bins by instantaneous
//! QBER and accumulating while the running weighted QBER stays below a
//! threshold; sweeping the threshold across the observed QBER range and
//! keeping the best key length optimises jointly over block size and
//! protocol parameters.

use rayon::prelude::*;

use crate::counts::CountsProfile;
use crate::error::{Error, Result};
use crate::real::{cast, linear_grid, log_grid, Real};

/// How the tolerated-error threshold entering the security formulas is
/// derived from an accepted block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdModel {
    /// Weighted block average `sum(E_t) / sum(D_t)` (adaptive, default).
    Weighted,
    /// Worst case: the maximum instantaneous QBER over accepted bins.
    Max,
}

/// Security and search configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SecurityConfig<T> {
    /// Security exponent: the composable failure budget is `10^-s`.
    pub s: T,
    /// Error-correction inefficiency prefactor in `r = f_ec n h2(delta)`.
    pub ec_efficiency: T,
    /// Grid points per optimisation axis.
    pub grid_n: usize,
    /// Threshold samples across the observed QBER range.
    pub n_thresholds: usize,
    /// Threshold model for block construction.
    pub threshold_model: ThresholdModel,
}

impl<T: Real> Default for SecurityConfig<T> {
    fn default() -> Self {
        Self {
            s: cast(6.0),
            ec_efficiency: cast(1.19),
            grid_n: 64,
            n_thresholds: 32,
            threshold_model: ThresholdModel::Weighted,
        }
    }
}

impl<T: Real> SecurityConfig<T> {
    /// Composable security budget `10^-s`.
    pub fn eps_qkd(&self) -> T {
        cast::<T>(10.0).powf(-self.s)
    }

    /// Correctness parameter `t = log2 10^(s+2)`.
    pub fn correctness_t(&self) -> T {
        (self.s + cast(2.0)) * cast::<T>(10.0).log2()
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.s >= T::one()) {
            v.push(format!("security_s must be >= 1, got {}", self.s));
        }
        if self.grid_n < 8 {
            v.push(format!("grid_n must be >= 8, got {}", self.grid_n));
        }
        if self.n_thresholds < 1 {
            v.push(format!("n_thresholds must be >= 1, got {}", self.n_thresholds));
        }
        if !(self.ec_efficiency >= T::one()) {
            v.push(format!(
                "ec_efficiency must be >= 1, got {}",
                self.ec_efficiency
            ));
        }
        v
    }
}

/// A sifted block carved from a pass by QBER thresholding.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockStats<T> {
    /// Sifted block size, bits (floored).
    pub m: u64,
    /// Tolerated error rate entering the security formulas (weighted block
    /// QBER, or the worst accepted bin under [`ThresholdModel::Max`]).
    pub qber: T,
    /// Weighted block QBER `sum(E_t)/sum(D_t)` (diagnostic).
    pub weighted_qber: T,
    /// Indices of the accepted bins, ascending.
    pub bins: Vec<usize>,
}

impl<T: Real> BlockStats<T> {
    pub fn empty() -> Self {
        Self {
            m: 0,
            qber: T::zero(),
            weighted_qber: T::zero(),
            bins: Vec::new(),
        }
    }
}

/// Optimised finite-key result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SklResult<T> {
    /// Secret key length, bits.
    pub ell: u64,
    /// Winning parameter-estimation fraction.
    pub beta: T,
    /// Winning excess-error margin.
    pub nu: T,
    /// Winning sampling refinement.
    pub xi: T,
    /// Tolerated error rate used in the formulas.
    pub delta: T,
    /// Parameter-estimation sample size `floor(beta m)`.
    pub k: u64,
    /// Raw-key size `m - k`.
    pub n: u64,
    /// Block size the optimisation ran on.
    pub m: u64,
    /// Weighted block QBER of that block.
    pub qber: T,
    /// Parameter-estimation failure probability at the optimum.
    pub eps_pe: T,
    /// Privacy-amplification failure probability at the optimum.
    pub eps_pa: T,
}

impl<T: Real> SklResult<T> {
    pub fn zero() -> Self {
        Self {
            ell: 0,
            beta: T::zero(),
            nu: T::zero(),
            xi: T::zero(),
            delta: T::zero(),
            k: 0,
            n: 0,
            m: 0,
            qber: T::zero(),
            eps_pe: T::zero(),
            eps_pa: T::zero(),
        }
    }
}

/// Binary entropy `h2(x) = -x log2 x - (1-x) log2 (1-x)`, with
/// `h2(0) = h2(1) = 0` by continuity.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "binary entropy argument {x} outside [0, 1]"
        )));
    }
    Ok(h2(x))
}

#[inline]
fn h2<T: Real>(x: T) -> T {
    if x == T::zero() || x == T::one() {
        return T::zero();
    }
    -(x * x.log2()) - (T::one() - x) * (T::one() - x).log2()
}

/// `Gamma_{x,m} = 1/(x+1) + 1/(m-x+1)` for real `0 <= x <= m`.
pub fn gamma_xm<T: Real>(x: T, m: T) -> T {
    debug_assert!(x >= T::zero() && x <= m);
    T::one() / (x + T::one()) + T::one() / (m - x + T::one())
}

/// Parameter-estimation failure probability:
///
/// `eps_pe^2 = exp[-2 m k xi^2 / (n+1)]
///           + exp[-2 Gamma_{m(delta+xi),m} ((n nu')^2 - 1)]`,  `nu' = nu - xi`.
///
/// Degenerate corners (`xi -> 0`, or `n nu' < 1` where the second exponent
/// turns positive) yield values at or above one and are rejected by the
/// budget check downstream.
pub fn epsilon_pe<T: Real>(m: u64, k: u64, n: u64, delta: T, nu: T, xi: T) -> Result<T> {
    if !(xi > T::zero() && xi < nu) {
        return Err(Error::InvalidInput(format!(
            "need 0 < xi < nu, got xi={xi}, nu={nu}"
        )));
    }
    if k + n != m {
        return Err(Error::InvalidInput(format!(
            "need k + n = m, got {k} + {n} != {m}"
        )));
    }
    if !(delta + xi <= T::one()) {
        return Err(Error::InvalidInput(format!(
            "need delta + xi <= 1, got {}",
            delta + xi
        )));
    }
    Ok(epsilon_pe_unchecked(
        cast(m as f64),
        cast(k as f64),
        cast(n as f64),
        delta,
        nu,
        xi,
    ))
}

#[inline]
fn epsilon_pe_unchecked<T: Real>(m: T, k: T, n: T, delta: T, nu: T, xi: T) -> T {
    let two = cast::<T>(2.0);
    let sample = (-(two * m * k * xi * xi) / (n + T::one())).exp();
    let gamma = gamma_xm(m * (delta + xi), m);
    let nu_prime = nu - xi;
    let tail = (-(two * gamma) * ((n * nu_prime).powi(2) - T::one())).exp();
    (sample + tail).sqrt()
}

/// Outcome of the key-length bound for one parameter triplet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KeyBound<T> {
    /// The epsilon budget cannot be met at any key length.
    Infeasible,
    /// Maximum key length in bits (floored, clamped at zero) and the raw
    /// real-valued bound before flooring.
    Feasible { bits: u64, raw: T },
}

/// Privacy-amplification failure probability for key length `ell`:
/// `eps_pa = 1/2 sqrt(2^(-n(1 - h2(delta+nu)) + r + t + ell))`.
pub fn epsilon_pa<T: Real>(n: u64, delta: T, nu: T, ell: T, sec: &SecurityConfig<T>) -> T {
    let nf: T = cast(n as f64);
    let r = sec.ec_efficiency * nf * h2(delta);
    let exponent = -(nf * (T::one() - h2(delta + nu))) + r + sec.correctness_t() + ell;
    // 1/2 sqrt(2^x) = 2^(x/2 - 1)
    (exponent / cast::<T>(2.0) - T::one()).exp2()
}

/// Upper bound on the key length for a fixed `(n, delta, nu, eps_pe)`:
/// the largest `ell` whose privacy-amplification term still fits in the
/// security budget `10^-s - 2^-t - 2 eps_pe`.
pub fn skl_upper_bound<T: Real>(
    n: u64,
    delta: T,
    nu: T,
    eps_pe: T,
    sec: &SecurityConfig<T>,
) -> KeyBound<T> {
    let budget = sec.eps_qkd() - (-sec.correctness_t()).exp2() - cast::<T>(2.0) * eps_pe;
    if !(budget > T::zero()) {
        return KeyBound::Infeasible;
    }
    let nf: T = cast(n as f64);
    let r = sec.ec_efficiency * nf * h2(delta);
    let raw = (cast::<T>(4.0) * budget * budget).log2() + nf * (T::one() - h2(delta + nu))
        - r
        - sec.correctness_t();
    let mut bits = raw.floor().max(T::zero()).min(nf);
    // Guard the floored value against the original constraint; algebra says
    // floor(raw) always passes, this protects the last-ulp corner.
    while bits > T::zero()
        && epsilon_pa(n, delta, nu, bits, sec) > budget * (T::one() + cast(1e-12))
    {
        bits -= T::one();
    }
    KeyBound::Feasible {
        bits: bits.to_u64().unwrap_or(0),
        raw,
    }
}

/// Smallest beta in the log-spaced parameter-estimation grid.
const BETA_MIN: f64 = 1e-4;

fn beta_grid<T: Real>(grid_n: usize) -> Vec<T> {
    log_grid(cast(BETA_MIN), cast(0.5), grid_n)
}

/// Open-interval fractions `(i+1)/(grid_n+1)` used for the nu and xi axes.
fn open_fractions<T: Real>(grid_n: usize) -> Vec<T> {
    (1..=grid_n)
        .map(|i| cast::<T>(i as f64) / cast::<T>((grid_n + 1) as f64))
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate<T> {
    ell: u64,
    beta_idx: usize,
    nu_idx: usize,
    xi_idx: usize,
    beta: T,
    nu: T,
    xi: T,
    k: u64,
    n: u64,
    eps_pe: T,
}

/// Total order: larger key first, then lexicographic grid position for a
/// deterministic winner regardless of scan order.
fn better<T: Real>(a: Option<Candidate<T>>, b: Option<Candidate<T>>) -> Option<Candidate<T>> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => {
            let xk = (x.beta_idx, x.nu_idx, x.xi_idx);
            let yk = (y.beta_idx, y.nu_idx, y.xi_idx);
            if y.ell > x.ell || (y.ell == x.ell && yk < xk) {
                Some(y)
            } else {
                Some(x)
            }
        }
    }
}

/// Maximise the finite key length over the `(beta, nu, xi)` grid for one
/// block. Deterministic for a fixed `grid_n` regardless of worker count.
pub fn optimise_key_length<T: Real>(block: &BlockStats<T>, sec: &SecurityConfig<T>) -> SklResult<T> {
    let m = block.m;
    let delta = block.qber;
    let mut result = SklResult::zero();
    result.m = m;
    result.delta = delta;
    result.qber = block.weighted_qber;
    if m == 0 {
        return result;
    }
    let half = cast::<T>(0.5);
    if !(delta < half) || !(half - delta > T::zero()) {
        return result;
    }

    let betas = beta_grid::<T>(sec.grid_n);
    let fractions = open_fractions::<T>(sec.grid_n);
    let mf: T = cast(m as f64);
    let nu_span = half - delta;

    let best = betas
        .par_iter()
        .enumerate()
        .map(|(beta_idx, &beta)| {
            let k = (beta * mf).floor().to_u64().unwrap_or(0).min(m);
            let n = m - k;
            let (kf, nf): (T, T) = (cast(k as f64), cast(n as f64));
            let mut local: Option<Candidate<T>> = None;
            for (nu_idx, &f_nu) in fractions.iter().enumerate() {
                let nu = nu_span * f_nu;
                for (xi_idx, &f_xi) in fractions.iter().enumerate() {
                    let xi = nu * f_xi;
                    let eps_pe = epsilon_pe_unchecked(mf, kf, nf, delta, nu, xi);
                    if let KeyBound::Feasible { bits, .. } =
                        skl_upper_bound(n, delta, nu, eps_pe, sec)
                    {
                        if bits > 0 {
                            local = better(
                                local,
                                Some(Candidate {
                                    ell: bits,
                                    beta_idx,
                                    nu_idx,
                                    xi_idx,
                                    beta,
                                    nu,
                                    xi,
                                    k,
                                    n,
                                    eps_pe,
                                }),
                            );
                        }
                    }
                }
            }
            local
        })
        .reduce(|| None, better);

    if let Some(c) = best {
        result.ell = c.ell;
        result.beta = c.beta;
        result.nu = c.nu;
        result.xi = c.xi;
        result.k = c.k;
        result.n = c.n;
        result.eps_pe = c.eps_pe;
        result.eps_pa = epsilon_pa(c.n, delta, c.nu, cast(c.ell as f64), sec);
    }
    result
}

/// Carve a block out of a pass: bins sorted by instantaneous QBER, greedily
/// accumulated while the running weighted QBER stays within `threshold`.
///
/// The sifted size is `m = floor(1/2 sum f_s D_t dt)` over accepted bins;
/// sifting drops data and error coincidences alike, so the block QBER is
/// the plain weighted ratio.
pub fn build_block<T: Real>(
    counts: &CountsProfile<T>,
    threshold: T,
    model: ThresholdModel,
) -> BlockStats<T> {
    let mut order = counts.usable_indices();
    order.sort_by(|&a, &b| {
        counts.qber_t[a]
            .partial_cmp(&counts.qber_t[b])
            .unwrap()
            .then(a.cmp(&b))
    });

    let mut accepted = Vec::new();
    let mut sum_c = T::zero();
    let mut sum_e = T::zero();
    let mut max_qber = T::zero();
    // relative slack keeps round-off in the running ratio from rejecting
    // bins that sit exactly on the threshold
    let slack = T::one() + cast::<T>(1e-12);
    for &i in &order {
        let c = sum_c + counts.coincidence_counts[i];
        let e = sum_e + counts.error_counts[i];
        if e / c > threshold * slack {
            break;
        }
        sum_c = c;
        sum_e = e;
        max_qber = max_qber.max(counts.qber_t[i]);
        accepted.push(i);
    }
    if accepted.is_empty() {
        return BlockStats::empty();
    }
    accepted.sort_unstable();
    let weighted = sum_e / sum_c;
    BlockStats {
        m: (sum_c / cast::<T>(2.0)).floor().to_u64().unwrap_or(0),
        qber: match model {
            ThresholdModel::Weighted => weighted,
            ThresholdModel::Max => max_qber,
        },
        weighted_qber: weighted,
        bins: accepted,
    }
}

/// One sampled point of a threshold sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPoint<T> {
    /// Sampled QBER threshold.
    pub threshold: T,
    /// Optimised result for the block this threshold admits.
    pub result: SklResult<T>,
}

/// Sweep the QBER threshold across the observed range and return the best
/// result together with the full block-size/key-length curve.
pub fn threshold_sweep<T: Real>(
    counts: &CountsProfile<T>,
    sec: &SecurityConfig<T>,
) -> (SklResult<T>, Vec<ThresholdPoint<T>>) {
    let Some((lo, hi)) = counts.qber_range() else {
        return (SklResult::zero(), Vec::new());
    };
    let thresholds = if counts.qber_range().map(|(a, b)| a == b).unwrap_or(false) {
        vec![lo]
    } else {
        linear_grid(lo, hi, sec.n_thresholds.max(1))
    };
    let mut curve = Vec::with_capacity(thresholds.len());
    let mut best = SklResult::zero();
    for &threshold in &thresholds {
        let block = build_block(counts, threshold, sec.threshold_model);
        let result = optimise_key_length(&block, sec);
        if result.ell > best.ell {
            best = result;
        }
        curve.push(ThresholdPoint { threshold, result });
    }
    (best, curve)
}
