//! Classical bounds and the fully deterministic `FD_n` family.
//!
//! Deterministic local strategies assign fixed outcomes `alpha_i` to Alice's
//! settings and `beta_j` to Bob's, giving the rank-one correlators
//! `c_ij = alpha_i beta_j`. These are the vertices of the local polytope.
//! The additive functional is linear, so its classical maximum is a vertex
//! value. The multiplicative one is not, and [`classical_interior_search`]
//! probes convex mixtures of vertices for larger values.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::functionals::{multiplicative_bell, CorrelationMatrix, VMatrix};
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Largest `n` accepted by exhaustive vertex enumeration (`2^(2n-1)`
/// strategies after fixing `alpha_1 = +1`).
pub const MAX_ENUM_N: usize = 12;
/// Largest `n` accepted by the interior search.
pub const MAX_INTERIOR_N: usize = 6;
/// `sqrt(pi / 2e)`, the large-`n` limit of `FD_n / n!`.
pub const FD_RATIO_ASYMPTOTE: f64 = 0.760_173_450_533_140_4;
/// Exact integers are produced by [`fd_value`] up to this `n`.
pub const FD_EXACT_MAX_N: usize = 2048;

/// Fixed `+1/-1` outcomes for each party's settings.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DeterministicStrategy {
    pub alpha: Vec<i8>,
    pub beta: Vec<i8>,
}

impl DeterministicStrategy {
    pub fn n(&self) -> usize {
        self.alpha.len()
    }

    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        CorrelationMatrix::outer(&self.alpha, &self.beta).expect("outcomes are +-1")
    }

    /// Alice's outcomes `alpha_1 = +1` fixed, the remaining `n - 1` read from
    /// the bits of `a`; Bob's from the `n` bits of `b`. Bit set = `-1`.
    fn from_indices(n: usize, a: u64, b: u64) -> Self {
        let sign = |bits: u64, k: usize| if bits >> k & 1 == 1 { -1 } else { 1 };
        let alpha = (0..n).map(|i| if i == 0 { 1 } else { sign(a, i - 1) }).collect();
        let beta = (0..n).map(|j| sign(b, j)).collect();
        DeterministicStrategy { alpha, beta }
    }

    /// Every deterministic strategy with `alpha_1 = +1`. Negating both parties
    /// leaves `c_ij` unchanged, so this covers every vertex matrix.
    pub fn all_vertices(n: usize) -> Vec<DeterministicStrategy> {
        let mut out = Vec::with_capacity(1 << (2 * n - 1));
        for a in 0..1u64 << (n - 1) {
            for b in 0..1u64 << n {
                out.push(Self::from_indices(n, a, b));
            }
        }
        out
    }
}

/// The best deterministic strategy for a functional.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VertexBound {
    pub n: usize,
    pub value: i64,
    pub argmax: DeterministicStrategy,
}

#[derive(Clone, Copy)]
enum Functional {
    Additive,
    Multiplicative,
}

fn check_enum_range(n: usize) -> Result<()> {
    if !(2..=MAX_ENUM_N).contains(&n) {
        return Err(Error::Capacity(format!(
            "vertex enumeration supports 2 <= n <= {MAX_ENUM_N}, got {n}"
        )));
    }
    Ok(())
}

/// Exhaustive search. Parallel over Alice's assignments; ties resolve to the
/// smallest `(a, b)` index so the result does not depend on the thread count.
fn enumerate(n: usize, functional: Functional) -> Result<VertexBound> {
    check_enum_range(n)?;
    let v = VMatrix::new(n)?;
    let (value, a, b) = (0..1u64 << (n - 1))
        .into_par_iter()
        .map(|a| {
            let alpha = DeterministicStrategy::from_indices(n, a, 0).alpha;
            // Column sums v_j . alpha; Bob's outcome only flips their sign.
            let u: Vec<i64> = (0..n)
                .map(|j| (0..n).map(|i| v.get(i, j) * i64::from(alpha[i])).sum())
                .collect();
            let mut best = (i64::MIN, a, 0u64);
            for b in 0..1u64 << n {
                let signed = |j: usize| if b >> j & 1 == 1 { -u[j] } else { u[j] };
                let value = match functional {
                    Functional::Additive => (0..n).map(signed).sum(),
                    Functional::Multiplicative => (0..n).map(signed).product(),
                };
                if value > best.0 {
                    best = (value, a, b);
                }
            }
            best
        })
        .reduce(
            || (i64::MIN, u64::MAX, u64::MAX),
            |x, y| {
                if y.0 > x.0 || (y.0 == x.0 && (y.1, y.2) < (x.1, x.2)) {
                    y
                } else {
                    x
                }
            },
        );
    Ok(VertexBound {
        n,
        value,
        argmax: DeterministicStrategy::from_indices(n, a, b),
    })
}

/// Exact classical maximum of the additive functional `B'_n`.
pub fn classical_bound_additive(n: usize) -> Result<VertexBound> {
    enumerate(n, Functional::Additive)
}

/// Largest `|B_n|` over deterministic strategies. This is a lower bound on
/// the classical maximum, which may sit inside the polytope.
pub fn classical_vertex_bound_multiplicative(n: usize) -> Result<VertexBound> {
    enumerate(n, Functional::Multiplicative)
}

/// `(B'_n bound / n)^n`, an upper bound on every classical `|B_n|`.
pub fn amgm_cap(n: usize) -> Result<f64> {
    let additive = classical_bound_additive(n)?.value as f64;
    Ok((additive / n as f64).powi(n as i32))
}

/// Rigorous classical upper bounds on `|B_n|` where a useful one is known:
/// `1`, `125/27` and `16` for `n = 2, 3, 4`.
pub fn classical_reference_bound(n: usize) -> Option<f64> {
    match n {
        2 => Some(1.0),
        3 => Some(125.0 / 27.0),
        4 => Some(16.0),
        _ => None,
    }
}

#[derive(Clone, Debug)]
pub struct InteriorConfig {
    pub restarts: usize,
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for InteriorConfig {
    fn default() -> Self {
        InteriorConfig {
            restarts: 200,
            tol: 1e-8,
            max_iters: 5000,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct InteriorResult {
    pub n: usize,
    pub best: f64,
    pub vertex_value: f64,
    /// Vertices with nonzero weight in the best mixture.
    pub mixture: Vec<(DeterministicStrategy, f64)>,
}

impl InteriorResult {
    pub fn correlation_matrix(&self) -> CorrelationMatrix {
        let n = self.n;
        let mut c = vec![0.0; n * n];
        for (s, w) in &self.mixture {
            for i in 0..n {
                for j in 0..n {
                    c[i * n + j] += w * f64::from(s.alpha[i]) * f64::from(s.beta[j]);
                }
            }
        }
        CorrelationMatrix::new(n, c.into_iter().map(|x| x.clamp(-1.0, 1.0)).collect())
            .expect("mixtures of vertices stay in range")
    }
}

/// Per-vertex factor vectors `beta_j (v_j . alpha)`.
fn vertex_factors(n: usize, vertices: &[DeterministicStrategy]) -> Vec<Vec<f64>> {
    let v = VMatrix::new(n).expect("n >= 2");
    vertices
        .iter()
        .map(|s| {
            (0..n)
                .map(|j| {
                    let col: i64 = (0..n).map(|i| v.get(i, j) * i64::from(s.alpha[i])).sum();
                    (col * i64::from(s.beta[j])) as f64
                })
                .collect()
        })
        .collect()
}

/// Projection onto the probability simplex (sort-based).
fn project_simplex(w: &mut [f64]) {
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, x) in sorted.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    for x in w.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
}

struct Mixture<'a> {
    factors: &'a [Vec<f64>],
    active: Vec<usize>,
    weights: Vec<f64>,
}

impl Mixture<'_> {
    fn column_factors(&self) -> Vec<f64> {
        let n = self.factors[0].len();
        let mut f = vec![0.0; n];
        for (&k, &w) in self.active.iter().zip(&self.weights) {
            for (fj, vk) in f.iter_mut().zip(&self.factors[k]) {
                *fj += w * vk;
            }
        }
        f
    }

    fn value(&self) -> f64 {
        self.column_factors().iter().product()
    }

    /// `d/dw_k prod_j f_j` for an arbitrary vertex `k`, given partial products.
    fn partials(f: &[f64]) -> Vec<f64> {
        let n = f.len();
        (0..n)
            .map(|j| f.iter().enumerate().filter(|(l, _)| *l != j).map(|(_, x)| x).product())
            .collect()
    }

    fn directional(&self, partials: &[f64], k: usize) -> f64 {
        partials.iter().zip(&self.factors[k]).map(|(p, x)| p * x).sum()
    }
}

fn ascend(mix: &mut Mixture<'_>, cfg: &InteriorConfig) -> f64 {
    let mut value = mix.value();
    let mut step = 0.1;
    let mut iters = 0;
    while iters < cfg.max_iters {
        iters += 1;
        let partials = Mixture::partials(&mix.column_factors());
        let grad: Vec<f64> = mix.active.iter().map(|&k| mix.directional(&partials, k)).collect();
        let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if scale == 0.0 {
            break;
        }
        let mut improved = false;
        while step > 1e-14 {
            let mut trial: Vec<f64> = mix
                .weights
                .iter()
                .zip(&grad)
                .map(|(w, g)| w + step * g / scale)
                .collect();
            project_simplex(&mut trial);
            let old = std::mem::replace(&mut mix.weights, trial);
            let candidate = mix.value();
            if candidate > value {
                let gain = candidate - value;
                value = candidate;
                step *= 1.5;
                improved = gain > cfg.tol * 1e-3;
                break;
            }
            mix.weights = old;
            step *= 0.5;
        }
        if !improved {
            break;
        }
    }
    value
}

/// Projected gradient ascent of `B_n` over convex mixtures of at most
/// `2n + 1` vertex matrices, with random restarts. Between ascent rounds the
/// vertex whose direction most increases `B_n` is swapped in for the
/// lightest active one.
///
/// The result is a certified lower bound on the classical maximum: it is
/// attained by an explicit mixture. It is never claimed tight.
pub fn classical_interior_search(n: usize, cfg: &InteriorConfig) -> Result<InteriorResult> {
    if !(2..=MAX_INTERIOR_N).contains(&n) {
        return Err(Error::Capacity(format!(
            "interior search supports 2 <= n <= {MAX_INTERIOR_N}, got {n}"
        )));
    }
    let restarts = cfg.restarts.max(1);
    let vertex = classical_vertex_bound_multiplicative(n)?;
    let pool = DeterministicStrategy::all_vertices(n);
    let factors = vertex_factors(n, &pool);
    let best_vertex = pool
        .iter()
        .position(|s| *s == vertex.argmax)
        .expect("argmax is in the pool");
    let k = 2 * n + 1;

    let runs: Vec<(f64, Vec<usize>, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng: ChaCha20Rng = stream_rng(cfg.seed, &[0x1A7E, r as u64]);
            let mut active = Vec::with_capacity(k);
            if r == 0 {
                active.push(best_vertex);
            }
            while active.len() < k {
                let cand = rng.random_range(0..pool.len());
                if !active.contains(&cand) {
                    active.push(cand);
                }
            }
            let mut weights: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            if r == 0 {
                weights.iter_mut().for_each(|w| *w *= 0.01);
                weights[0] = 1.0;
            }
            let total: f64 = weights.iter().sum();
            weights.iter_mut().for_each(|w| *w /= total);
            let mut mix = Mixture {
                factors: &factors,
                active,
                weights,
            };
            let mut value = ascend(&mut mix, cfg);
            for _ in 0..50 {
                let partials = Mixture::partials(&mix.column_factors());
                let current: f64 = mix
                    .active
                    .iter()
                    .zip(&mix.weights)
                    .map(|(&a, w)| w * mix.directional(&partials, a))
                    .sum();
                let (entering, score) = (0..pool.len())
                    .filter(|c| !mix.active.contains(c))
                    .map(|c| (c, mix.directional(&partials, c)))
                    .fold((usize::MAX, f64::NEG_INFINITY), |b, x| if x.1 > b.1 { x } else { b });
                if entering == usize::MAX || score <= current + cfg.tol {
                    break;
                }
                let lightest = (0..k)
                    .min_by(|&x, &y| mix.weights[x].partial_cmp(&mix.weights[y]).unwrap())
                    .expect("k > 0");
                let freed = mix.weights[lightest];
                mix.active[lightest] = entering;
                mix.weights[lightest] = 0.0;
                // keep the mass of the removed vertex on the heaviest one
                let heaviest = (0..k)
                    .max_by(|&x, &y| mix.weights[x].partial_cmp(&mix.weights[y]).unwrap())
                    .expect("k > 0");
                mix.weights[heaviest] += freed;
                let next = ascend(&mut mix, cfg);
                if next <= value + cfg.tol {
                    value = value.max(next);
                    break;
                }
                value = next;
            }
            let value = value.max(mix.value());
            (value, mix.active, mix.weights)
        })
        .collect();

    let (best, active, weights) = runs
        .into_iter()
        .fold(None::<(f64, Vec<usize>, Vec<f64>)>, |acc, run| match acc {
            Some(b) if b.0 >= run.0 => Some(b),
            _ => Some(run),
        })
        .expect("at least one restart");
    let mixture = active
        .into_iter()
        .zip(weights)
        .filter(|(_, w)| *w > 1e-12)
        .map(|(k, w)| (pool[k].clone(), w))
        .collect();
    Ok(InteriorResult {
        n,
        best,
        vertex_value: vertex.value as f64,
        mixture,
    })
}

/// A signed real stored as `sign * exp(log_magnitude)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LogValue {
    pub sign: i8,
    pub log_magnitude: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    pub fn positive(log_magnitude: f64) -> Self {
        LogValue { sign: 1, log_magnitude }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_magnitude: x.abs().ln(),
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Overflows to infinity for large magnitudes.
    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }

    /// `self / other` as a plain float.
    pub fn ratio(&self, other: &LogValue) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        f64::from(self.sign * other.sign) * (self.log_magnitude - other.log_magnitude).exp()
    }
}

/// `ln n!`.
pub fn ln_factorial(n: usize) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdValue {
    pub n: usize,
    pub i_c: usize,
    pub log: LogValue,
    /// Exact integer for `n <= FD_EXACT_MAX_N`.
    #[serde(serialize_with = "ser_bigint")]
    pub exact: Option<BigInt>,
}

fn ser_bigint<S: serde::Serializer>(v: &Option<BigInt>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(b) => s.serialize_str(&b.to_string()),
        None => s.serialize_none(),
    }
}

fn fd_log(n: usize, i_c: usize) -> LogValue {
    // 2^ic ((ic/2)!)^2 (n - ic) ic^(n - ic - 1)
    if i_c == n || (i_c == 0 && n > 1) {
        return LogValue::ZERO;
    }
    let power = if i_c == 0 {
        0.0
    } else {
        (n - i_c - 1) as f64 * (i_c as f64).ln()
    };
    LogValue::positive(
        i_c as f64 * std::f64::consts::LN_2 + 2.0 * ln_factorial(i_c / 2) + ((n - i_c) as f64).ln() + power,
    )
}

fn fd_exact(n: usize, i_c: usize) -> BigInt {
    if i_c == n {
        return BigInt::zero();
    }
    let half_fact: BigInt = (1..=i_c / 2).map(BigInt::from).product();
    let power = if i_c == 0 {
        if n - i_c - 1 == 0 {
            BigInt::one()
        } else {
            BigInt::zero()
        }
    } else {
        num_traits::pow(BigInt::from(i_c), n - i_c - 1)
    };
    (BigInt::one() << i_c) * &half_fact * &half_fact * BigInt::from(n - i_c) * power
}

fn check_cutoff(n: usize, i_c: usize) -> Result<()> {
    if n < 1 || i_c > n {
        return Err(Error::domain(format!("cutoff {i_c} outside [0, {n}]")));
    }
    if i_c % 2 == 1 {
        return Err(Error::domain(format!(
            "cutoff {i_c} is odd; only even cutoffs are defined"
        )));
    }
    Ok(())
}

/// Closed-form value of the alternating strategy with cutoff `i_c`.
pub fn fd_value(n: usize, i_c: usize) -> Result<FdValue> {
    check_cutoff(n, i_c)?;
    let exact = (n <= FD_EXACT_MAX_N).then(|| fd_exact(n, i_c));
    Ok(FdValue {
        n,
        i_c,
        log: fd_log(n, i_c),
        exact,
    })
}

/// The alternating strategy itself: Alice answers `(-1)^i` for `i <= i_c`
/// (1-indexed) and `+1` afterwards, Bob always `+1`.
pub fn fd_strategy(n: usize, i_c: usize) -> Result<DeterministicStrategy> {
    check_cutoff(n, i_c)?;
    let alpha = (1..=n).map(|i| if i <= i_c && i % 2 == 1 { -1 } else { 1 }).collect();
    Ok(DeterministicStrategy {
        alpha,
        beta: vec![1; n],
    })
}

/// `B_n` of [`fd_strategy`] evaluated through the functional itself.
pub fn fd_value_direct(n: usize, i_c: usize) -> Result<f64> {
    let s = fd_strategy(n, i_c)?;
    Ok(multiplicative_bell(&s.correlation_matrix())?.value)
}

/// Best cutoff. Ties keep the smaller cutoff.
pub fn fd_max(n: usize) -> Result<FdValue> {
    if n < 2 {
        return Err(Error::domain("FD_n needs n >= 2"));
    }
    let mut best_ic = 0;
    let mut best = fd_log(n, 0);
    for i_c in (2..=n).step_by(2) {
        let v = fd_log(n, i_c);
        if !v.is_zero() && (best.is_zero() || v.log_magnitude > best.log_magnitude) {
            best = v;
            best_ic = i_c;
        }
    }
    // exact comparison settles near-ties that the logarithms cannot
    if n <= 64 {
        let mut exact_best = (fd_exact(n, best_ic), best_ic);
        for i_c in (0..=n).step_by(2) {
            let e = fd_exact(n, i_c);
            if e > exact_best.0 || (e == exact_best.0 && i_c < exact_best.1) {
                exact_best = (e, i_c);
            }
        }
        best_ic = exact_best.1;
    }
    fd_value(n, best_ic)
}

/// `FD_n / n!` in log space; finite for any `n`.
pub fn fd_ratio(n: usize) -> Result<f64> {
    let fd = fd_max(n)?;
    if n <= 170 {
        // both sides are representable, so skip the log round trip
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        return Ok(fd.to_f64() / factorial);
    }
    Ok(fd.log.ratio(&LogValue::positive(ln_factorial(n))))
}

impl FdValue {
    pub fn to_f64(&self) -> f64 {
        match &self.exact {
            Some(e) => e.to_f64().unwrap_or(f64::INFINITY),
            None => self.log.to_f64(),
        }
    }

    pub fn exact_i128(&self) -> Option<i128> {
        self.exact.as_ref().and_then(|e| e.abs().to_i128())
    }
}
