//! Coincidence-count Monte Carlo.
//!
//! Each setting pair `(a_i, b_j)` is simulated independently: the state is
//! depolarized, settings are snapped to the waveplate grid, detection losses
//! are applied per arm, and the surviving pairs are split over the four
//! outcomes `++, +-, -+, --`.

use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{amgm_cap, classical_reference_bound, MAX_ENUM_N};
use crate::functionals::{multiplicative_bell, BellResult, CorrelationMatrix, VMatrix};
use crate::quantum::{BlochVector, Party, TwoQubitState};
use crate::rng::stream_rng;
use crate::strategies::Strategy;
use crate::{Error, Result};

const SIM_TAG: u64 = 0xc0_1c;

/// Coincidences for `++, +-, -+, --`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRecord {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
}

impl CountRecord {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        CountRecord { n_pp, n_pm, n_mp, n_mm }
    }

    pub fn total(&self) -> u64 {
        self.n_pp + self.n_pm + self.n_mp + self.n_mm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UndetectedPolicy {
    /// Keep only pairs detected on both arms.
    Discard,
    /// Record a missing click as outcome `+1`.
    AssignPlusOne,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// Fixed number of emitted pairs per setting.
    Multinomial,
    /// Independent Poisson counts per outcome channel.
    Poisson,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub werner_p: f64,
    /// Waveplate resolution in degrees; `0` means exact settings.
    pub waveplate_step_deg: f64,
    pub eta_det_a: f64,
    pub eta_det_b: f64,
    pub undetected_policy: UndetectedPolicy,
    pub counting: CountingMode,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            werner_p: 1.0,
            waveplate_step_deg: 0.0,
            eta_det_a: 1.0,
            eta_det_b: 1.0,
            undetected_policy: UndetectedPolicy::Discard,
            counting: CountingMode::Multinomial,
        }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.werner_p) {
            return Err(Error::domain(format!("werner_p {} outside [0, 1]", self.werner_p)));
        }
        if !(self.waveplate_step_deg >= 0.0 && self.waveplate_step_deg.is_finite()) {
            return Err(Error::domain(format!(
                "waveplate step {} must be >= 0",
                self.waveplate_step_deg
            )));
        }
        for (name, eta) in [("eta_det_a", self.eta_det_a), ("eta_det_b", self.eta_det_b)] {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::domain(format!("{name} = {eta} outside (0, 1]")));
            }
        }
        Ok(())
    }

    /// Largest correlator shift the waveplate grid can cause: both settings
    /// off by half a grid cell in opposite directions.
    pub fn max_quantization_bias(&self) -> f64 {
        (4.0 * self.waveplate_step_deg)
            .to_radians()
            .min(std::f64::consts::FRAC_PI_2)
            .sin()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Sampled,
    /// Exact outcome probabilities, no counting noise.
    Analytic,
}

/// Outcome probabilities in the order `++, +-, -+, --`.
pub fn joint_probabilities(state: &TwoQubitState, a: &BlochVector, b: &BlochVector) -> [f64; 4] {
    let ma = state.mean(Party::Alice, a);
    let mb = state.mean(Party::Bob, b);
    let c = state.correlator(a, b);
    let mut p = [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .map(|(s, t)| ((1.0 + s * ma + t * mb + s * t * c) / 4.0).max(0.0));
    let total: f64 = p.iter().sum();
    for x in &mut p {
        *x /= total;
    }
    p
}

/// Outcome probabilities of the recorded events after detection losses.
/// Under `Discard` these are conditional on a double click.
fn recorded_probabilities(p: [f64; 4], noise: &NoiseModel) -> [f64; 4] {
    match noise.undetected_policy {
        UndetectedPolicy::Discard => p,
        UndetectedPolicy::AssignPlusOne => {
            let (ea, eb) = (noise.eta_det_a, noise.eta_det_b);
            let alice_plus = p[0] + p[1];
            let bob_plus = p[0] + p[2];
            let mut q = p.map(|x| ea * eb * x);
            // Bob lost: his outcome reads +1
            q[0] += ea * (1.0 - eb) * alice_plus;
            q[2] += ea * (1.0 - eb) * (1.0 - alice_plus);
            // Alice lost
            q[0] += (1.0 - ea) * eb * bob_plus;
            q[1] += (1.0 - ea) * eb * (1.0 - bob_plus);
            q[0] += (1.0 - ea) * (1.0 - eb);
            q
        }
    }
}

fn recorded_fraction(noise: &NoiseModel) -> f64 {
    match noise.undetected_policy {
        UndetectedPolicy::Discard => noise.eta_det_a * noise.eta_det_b,
        UndetectedPolicy::AssignPlusOne => 1.0,
    }
}

/// Snaps a setting to the waveplate grid.
///
/// A waveplate turn of `w` rotates linear polarization by `2w` and the Bloch
/// vector by `4w` about `z`, so the azimuth is rounded to multiples of
/// `4 * step`. The polar angle is untouched.
pub fn quantize_setting(v: &BlochVector, waveplate_step_deg: f64) -> BlochVector {
    if waveplate_step_deg <= 0.0 {
        return *v;
    }
    let grid = (4.0 * waveplate_step_deg).to_radians();
    let phi = v.azimuth();
    let snapped = (phi / grid).round() * grid;
    BlochVector::from_spherical(v.polar(), snapped)
}

fn binomial(rng: &mut ChaCha20Rng, n: u64, p: f64) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

fn poisson(rng: &mut ChaCha20Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).expect("positive rate").sample(rng) as u64
}

/// Multinomial draw by successive conditional binomials.
fn multinomial(rng: &mut ChaCha20Rng, n: u64, p: [f64; 4]) -> [u64; 4] {
    let mut out = [0u64; 4];
    let mut left = n;
    let mut mass = 1.0;
    for k in 0..3 {
        let cond = if mass > 0.0 { (p[k] / mass).clamp(0.0, 1.0) } else { 0.0 };
        out[k] = binomial(rng, left, cond);
        left -= out[k];
        mass -= p[k];
    }
    out[3] = left;
    out
}

fn sample_counts(
    state: &TwoQubitState,
    a: &BlochVector,
    b: &BlochVector,
    n_pairs: u64,
    noise: &NoiseModel,
    rng: &mut ChaCha20Rng,
) -> CountRecord {
    let q = recorded_probabilities(joint_probabilities(state, a, b), noise);
    let frac = recorded_fraction(noise);
    let c = match noise.counting {
        CountingMode::Multinomial => {
            let kept = binomial(rng, n_pairs, frac);
            multinomial(rng, kept, q)
        }
        CountingMode::Poisson => q.map(|x| poisson(rng, n_pairs as f64 * frac * x)),
    };
    CountRecord::new(c[0], c[1], c[2], c[3])
}

/// Counts for one setting pair. The noise model's depolarization and
/// waveplate grid are applied here.
pub fn simulate_counts(
    state: &TwoQubitState,
    a: &BlochVector,
    b: &BlochVector,
    n_pairs: u64,
    noise: &NoiseModel,
    seed: u64,
) -> Result<CountRecord> {
    if n_pairs == 0 {
        return Err(Error::domain("n_pairs must be >= 1"));
    }
    noise.validate()?;
    let state = state.depolarized(noise.werner_p)?;
    let a = quantize_setting(a, noise.waveplate_step_deg);
    let b = quantize_setting(b, noise.waveplate_step_deg);
    let mut rng = stream_rng(seed, &[SIM_TAG]);
    Ok(sample_counts(&state, &a, &b, n_pairs, noise, &mut rng))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// `(N++ - N+- - N-+ + N--) / N` with standard error `sqrt((1 - c^2) / N)`.
pub fn estimate_correlator(counts: &CountRecord) -> Result<CorrelatorEstimate> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::Degenerate("no coincidences recorded".into()));
    }
    let n = total as f64;
    let value = (counts.n_pp as f64 - counts.n_pm as f64 - counts.n_mp as f64 + counts.n_mm as f64) / n;
    let stderr = ((1.0 - value * value).max(0.0) / n).sqrt();
    Ok(CorrelatorEstimate { value, stderr })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SettingRecord {
    pub i: usize,
    pub j: usize,
    /// Settings after quantization.
    pub alice: BlochVector,
    pub bob: BlochVector,
    /// Absent in analytic mode.
    pub counts: Option<CountRecord>,
    pub correlator: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub n_pairs: u64,
    pub mode: SamplingMode,
    pub noise: NoiseModel,
    pub settings: Vec<SettingRecord>,
    pub correlators: CorrelationMatrix,
    pub bell: BellResult,
    /// First-order statistical error of `B_n`.
    pub bell_stderr: f64,
    /// Worst-case waveplate bias per correlator, and its first-order effect
    /// on `B_n`.
    pub correlator_systematic: f64,
    pub bell_systematic: f64,
    /// Best known classical upper bound on `|B_n|`, where available.
    pub classical_bound: Option<f64>,
    pub violated: Option<bool>,
}

/// Classical upper bound used for violation flags: the tight values for
/// `n <= 4`, the AM-GM cap up to the enumeration limit.
pub fn classical_threshold(n: usize) -> Option<f64> {
    classical_reference_bound(n).or_else(|| if n <= MAX_ENUM_N { amgm_cap(n).ok() } else { None })
}

/// `sigma_B^2 = sum_j (prod_{l != j} f_l)^2 sigma_{f_j}^2` with
/// `sigma_{f_j}^2 = sum_i V_ij^2 sigma_ij^2`.
pub fn propagate_error(factors: &[f64], v: &VMatrix, sigma: &[f64]) -> f64 {
    let n = factors.len();
    let mut var = 0.0;
    for j in 0..n {
        let others: f64 = (0..n).filter(|&l| l != j).map(|l| factors[l]).product();
        let var_f: f64 = (0..n).map(|i| (v.get(i, j) as f64 * sigma[i * n + j]).powi(2)).sum();
        var += others * others * var_f;
    }
    var.sqrt()
}

/// Simulates all `n^2` setting pairs a strategy needs and evaluates `B_n`.
pub fn run_experiment(
    strategy: &Strategy,
    state: &TwoQubitState,
    n_pairs: u64,
    noise: &NoiseModel,
    seed: u64,
    mode: SamplingMode,
) -> Result<ExperimentReport> {
    noise.validate()?;
    let n = strategy.n();
    if n < 2 {
        return Err(Error::domain("experiment needs n >= 2"));
    }
    if mode == SamplingMode::Sampled && n_pairs == 0 {
        return Err(Error::domain("n_pairs must be >= 1"));
    }
    let state = state.depolarized(noise.werner_p)?;
    let alice: Vec<_> = strategy
        .alice
        .iter()
        .map(|v| quantize_setting(v, noise.waveplate_step_deg))
        .collect();
    let bob: Vec<_> = strategy
        .bob
        .iter()
        .map(|v| quantize_setting(v, noise.waveplate_step_deg))
        .collect();

    let settings: Vec<SettingRecord> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / n, k % n);
            let (a, b) = (alice[i], bob[j]);
            match mode {
                SamplingMode::Analytic => {
                    let q = recorded_probabilities(joint_probabilities(&state, &a, &b), noise);
                    let c = (q[0] - q[1] - q[2] + q[3]).clamp(-1.0, 1.0);
                    Ok(SettingRecord {
                        i,
                        j,
                        alice: a,
                        bob: b,
                        counts: None,
                        correlator: c,
                        stderr: 0.0,
                    })
                }
                SamplingMode::Sampled => {
                    let mut rng = stream_rng(seed, &[SIM_TAG, i as u64, j as u64]);
                    let counts = sample_counts(&state, &a, &b, n_pairs, noise, &mut rng);
                    let est = estimate_correlator(&counts)?;
                    Ok(SettingRecord {
                        i,
                        j,
                        alice: a,
                        bob: b,
                        counts: Some(counts),
                        correlator: est.value,
                        stderr: est.stderr,
                    })
                }
            }
        })
        .collect::<Result<_>>()?;

    let correlators = CorrelationMatrix::new(n, settings.iter().map(|s| s.correlator).collect())?;
    let bell = multiplicative_bell(&correlators)?;
    let v = VMatrix::new(n)?;
    let sigma: Vec<f64> = settings.iter().map(|s| s.stderr).collect();
    let bell_stderr = propagate_error(&bell.factors, &v, &sigma);
    let correlator_systematic = noise.max_quantization_bias();
    let bell_systematic = propagate_error(&bell.factors, &v, &vec![correlator_systematic; n * n]);
    let classical_bound = classical_threshold(n);
    let violated = classical_bound.map(|c| bell.value > c);
    Ok(ExperimentReport {
        n,
        n_pairs,
        mode,
        noise: *noise,
        settings,
        correlators,
        bell,
        bell_stderr,
        correlator_systematic,
        bell_systematic,
        classical_bound,
        violated,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EfficiencyPoint {
    pub eta: f64,
    pub value: f64,
    pub stderr: f64,
    pub violated: Option<bool>,
}

/// `B_n` with both detectors at efficiency `eta`, for each grid value.
/// Every grid point reuses the same master seed.
pub fn efficiency_scan(
    strategy: &Strategy,
    state: &TwoQubitState,
    eta_grid: &[f64],
    base: &NoiseModel,
    n_pairs: u64,
    seed: u64,
    mode: SamplingMode,
) -> Result<Vec<EfficiencyPoint>> {
    eta_grid
        .iter()
        .map(|&eta| {
            let noise = NoiseModel {
                eta_det_a: eta,
                eta_det_b: eta,
                ..*base
            };
            let r = run_experiment(strategy, state, n_pairs, &noise, seed, mode)?;
            Ok(EfficiencyPoint {
                eta,
                value: r.bell.value,
                stderr: r.bell_stderr,
                violated: r.violated,
            })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasPoint {
    /// Ideal Bloch azimuth of Alice's setting, degrees; Bob sits 90 degrees on.
    pub target_deg: f64,
    pub alice_error_deg: f64,
    pub bob_error_deg: f64,
    pub bias: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BiasScan {
    pub waveplate_step_deg: f64,
    pub points: Vec<BiasPoint>,
    pub max_bias: f64,
    pub mean_bias: f64,
    pub bound: f64,
}

fn wrap_deg(x: f64) -> f64 {
    (x + 180.0).rem_euclid(360.0) - 180.0
}

/// Correlator bias from the waveplate grid on the singlet, for equatorial
/// setting pairs at right angles (where the correlator is most sensitive).
/// Targets are `k * 360 / points + 0.5` degrees, off the rounding ties.
pub fn quantization_bias_scan(waveplate_step_deg: f64, points: usize) -> Result<BiasScan> {
    if points == 0 {
        return Err(Error::domain("bias scan needs at least one point"));
    }
    let noise = NoiseModel {
        waveplate_step_deg,
        ..Default::default()
    };
    noise.validate()?;
    let singlet = TwoQubitState::singlet();
    let pts: Vec<BiasPoint> = (0..points)
        .map(|k| {
            let target = 360.0 * k as f64 / points as f64 + 0.5;
            let a = BlochVector::from_spherical(std::f64::consts::FRAC_PI_2, target.to_radians());
            let b = BlochVector::from_spherical(std::f64::consts::FRAC_PI_2, (target + 90.0).to_radians());
            let qa = quantize_setting(&a, waveplate_step_deg);
            let qb = quantize_setting(&b, waveplate_step_deg);
            BiasPoint {
                target_deg: target,
                alice_error_deg: wrap_deg(qa.azimuth().to_degrees() - target),
                bob_error_deg: wrap_deg(qb.azimuth().to_degrees() - target - 90.0),
                bias: (singlet.correlator(&qa, &qb) - singlet.correlator(&a, &b)).abs(),
            }
        })
        .collect();
    let max_bias = pts.iter().map(|p| p.bias).fold(0.0, f64::max);
    let mean_bias = pts.iter().map(|p| p.bias).sum::<f64>() / points as f64;
    Ok(BiasScan {
        waveplate_step_deg,
        points: pts,
        max_bias,
        mean_bias,
        bound: noise.max_quantization_bias(),
    })
}
