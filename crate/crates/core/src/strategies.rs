//! Measurement strategies: the `n!`-saturating construction and a numerical
//! optimizer over Bloch-sphere settings.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::functionals::{multiplicative_bell, BellResult, CorrelationMatrix, VMatrix};
use crate::quantum::{dot3, norm3, BlochVector, TwoQubitState};
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Unit-norm slack accepted when reading strategy files.
pub const FILE_NORM_TOL: f64 = 1e-6;

/// `n` settings per party.
#[derive(Clone, Debug, PartialEq)]
pub struct Strategy {
    pub alice: Vec<BlochVector>,
    pub bob: Vec<BlochVector>,
    pub label: Option<String>,
}

/// On-disk layout: `{"n": 2, "alice": [[x,y,z], ...], "bob": [[x,y,z], ...]}`.
#[derive(Serialize, Deserialize)]
struct StrategyFile {
    n: usize,
    alice: Vec<[f64; 3]>,
    bob: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        StrategyFile {
            n: self.n(),
            alice: self.alice.iter().map(|v| v.to_array()).collect(),
            bob: self.bob.iter().map(|v| v.to_array()).collect(),
            label: self.label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Strategy {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let f = StrategyFile::deserialize(d)?;
        let load = |vs: Vec<[f64; 3]>| -> Result<Vec<BlochVector>> {
            vs.into_iter()
                .map(|v| BlochVector::with_tolerance(v, FILE_NORM_TOL))
                .collect()
        };
        let alice = load(f.alice).map_err(serde::de::Error::custom)?;
        let bob = load(f.bob).map_err(serde::de::Error::custom)?;
        if alice.len() != f.n || bob.len() != f.n {
            return Err(serde::de::Error::custom(format!(
                "strategy declares n = {} but lists {} Alice and {} Bob vectors",
                f.n,
                alice.len(),
                bob.len()
            )));
        }
        Strategy::new(alice, bob)
            .map(|s| s.with_label(f.label))
            .map_err(serde::de::Error::custom)
    }
}

impl Strategy {
    pub fn new(alice: Vec<BlochVector>, bob: Vec<BlochVector>) -> Result<Self> {
        if alice.len() != bob.len() || alice.is_empty() {
            return Err(Error::domain(format!(
                "strategy needs equal nonzero setting counts (Alice {}, Bob {})",
                alice.len(),
                bob.len()
            )));
        }
        Ok(Strategy {
            alice,
            bob,
            label: None,
        })
    }

    pub fn with_label(mut self, label: Option<String>) -> Self {
        self.label = label;
        self
    }

    pub fn n(&self) -> usize {
        self.alice.len()
    }

    pub fn rotated(&self, r: &[[f64; 3]; 3]) -> Strategy {
        Strategy {
            alice: self.alice.iter().map(|v| v.rotated(r)).collect(),
            bob: self.bob.iter().map(|v| v.rotated(r)).collect(),
            label: self.label.clone(),
        }
    }

    /// `c_ij = correlator(a_i, b_j)`.
    pub fn correlation_matrix(&self, state: &TwoQubitState) -> CorrelationMatrix {
        let (a, b) = (&self.alice, &self.bob);
        CorrelationMatrix::from_fn(self.n(), |i, j| state.correlator(&a[i], &b[j])).expect("correlators are clamped")
    }

    pub fn pearson_matrix(&self, state: &TwoQubitState) -> Result<CorrelationMatrix> {
        state.pearson_matrix(&self.alice, &self.bob)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Multiplicative functional of the correlators a strategy produces.
pub fn evaluate_strategy(strategy: &Strategy, state: &TwoQubitState) -> Result<BellResult> {
    multiplicative_bell(&strategy.correlation_matrix(state))
}

/// Settings reaching `|B_n| = n!` on the singlet.
///
/// Alice: `a_1 = x`, and each `a_{j+1}` is the unit vector orthogonal to the
/// running sum `s_j = a_1 + ... + a_j` obtained by Gram-Schmidt from the
/// first of `y`, `z` not parallel to `s_j`. Then `|s_j|^2 = j`.
///
/// Bob: `b_j = -(s_j - j a_{j+1}) / |s_j - j a_{j+1}|` for `j < n` and
/// `b_n = -s_n / |s_n|`. With `c_ij = -a_i . b_j` the factors are
/// `sqrt(j (j + 1))` and finally `sqrt(n)`, whose product is `n!`.
pub fn saturating_strategy(n: usize) -> Result<Strategy> {
    if n < 2 {
        return Err(Error::domain(format!("saturating strategy needs n >= 2, got {n}")));
    }
    let mut alice = vec![BlochVector::X];
    let mut sum = BlochVector::X.to_array();
    for _ in 1..n {
        let s_hat = BlochVector::from_direction(sum)?;
        let seed = [BlochVector::Y, BlochVector::Z]
            .into_iter()
            .find(|e| e.dot(&s_hat).abs() < 1.0 - 1e-12)
            .expect("y and z cannot both be parallel to one vector");
        let overlap = seed.dot(&s_hat);
        let s = s_hat.to_array();
        let e = seed.to_array();
        let next = BlochVector::from_direction([e[0] - overlap * s[0], e[1] - overlap * s[1], e[2] - overlap * s[2]])?;
        let a = next.to_array();
        sum = [sum[0] + a[0], sum[1] + a[1], sum[2] + a[2]];
        alice.push(next);
    }
    let mut bob = Vec::with_capacity(n);
    let mut running = [0.0; 3];
    for j in 0..n {
        let a = alice[j].to_array();
        running = [running[0] + a[0], running[1] + a[1], running[2] + a[2]];
        let target = if j + 1 < n {
            let next = alice[j + 1].to_array();
            let k = (j + 1) as f64;
            [
                running[0] - k * next[0],
                running[1] - k * next[1],
                running[2] - k * next[2],
            ]
        } else {
            running
        };
        bob.push(BlochVector::from_direction([-target[0], -target[1], -target[2]])?);
    }
    Ok(Strategy::new(alice, bob)?.with_label(Some(format!("saturating n={n}"))))
}

#[derive(Clone, Debug)]
pub struct OptimizeConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once an accepted step raises `B_n` by less than this.
    pub tol: f64,
    pub initial_step: f64,
    pub seed: u64,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            restarts: 50,
            max_iters: 5000,
            tol: 1e-9,
            initial_step: 0.1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct OptimizeOutcome {
    pub strategy: Strategy,
    pub value: f64,
    /// False when the best restart hit `max_iters` first.
    pub converged: bool,
    pub iterations: usize,
}

struct Ascent<'a> {
    tensor: [[f64; 3]; 3],
    v: &'a VMatrix,
}

impl Ascent<'_> {
    /// `w_j = T^T sum_i V_ij a_i`; the factor of column `j` is `w_j . b_j`.
    fn bob_directions(&self, alice: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let n = alice.len();
        let t = &self.tensor;
        (0..n)
            .map(|j| {
                let mut m = [0.0; 3];
                for (i, a) in alice.iter().enumerate() {
                    let coef = self.v.get(i, j) as f64;
                    for k in 0..3 {
                        m[k] += coef * a[k];
                    }
                }
                [0, 1, 2].map(|l| (0..3).map(|k| t[k][l] * m[k]).sum())
            })
            .collect()
    }

    /// `sum_j ln |w_j|`: the log of `|B_n|` once Bob answers optimally.
    fn log_value(&self, alice: &[[f64; 3]]) -> f64 {
        self.bob_directions(alice).iter().map(|w| norm3(*w).ln()).sum()
    }

    fn gradient(&self, alice: &[[f64; 3]]) -> Vec<[f64; 3]> {
        let t = &self.tensor;
        let ws = self.bob_directions(alice);
        let scaled: Vec<[f64; 3]> = ws
            .iter()
            .map(|w| {
                let nn = dot3(*w, *w).max(1e-300);
                [0, 1, 2].map(|k| (0..3).map(|l| t[k][l] * w[l]).sum::<f64>() / nn)
            })
            .collect();
        (0..alice.len())
            .map(|i| {
                let mut g = [0.0; 3];
                for (j, tw) in scaled.iter().enumerate() {
                    let coef = self.v.get(i, j) as f64;
                    for k in 0..3 {
                        g[k] += coef * tw[k];
                    }
                }
                // tangent part at a_i
                let a = alice[i];
                let along = dot3(g, a);
                [g[0] - along * a[0], g[1] - along * a[1], g[2] - along * a[2]]
            })
            .collect()
    }

    /// Bob's closed-form reply: every factor becomes `|w_j| >= 0`.
    fn best_bob(&self, alice: &[[f64; 3]], previous: &[BlochVector]) -> Vec<BlochVector> {
        self.bob_directions(alice)
            .into_iter()
            .zip(previous)
            .map(|(w, prev)| BlochVector::from_direction(w).unwrap_or(*prev))
            .collect()
    }

    fn run(&self, start: &Strategy, cfg: &OptimizeConfig) -> (Strategy, bool, usize) {
        let mut alice: Vec<[f64; 3]> = start.alice.iter().map(|v| v.to_array()).collect();
        let mut value = self.log_value(&alice).exp();
        let mut step = cfg.initial_step;
        let mut converged = false;
        let mut iters = 0;
        while iters < cfg.max_iters {
            iters += 1;
            let grad = self.gradient(&alice);
            let mut accepted = None;
            while step > 1e-14 {
                let trial: Vec<[f64; 3]> = alice
                    .iter()
                    .zip(&grad)
                    .map(|(a, g)| {
                        let moved = [a[0] + step * g[0], a[1] + step * g[1], a[2] + step * g[2]];
                        let n = norm3(moved);
                        [moved[0] / n, moved[1] / n, moved[2] / n]
                    })
                    .collect();
                let candidate = self.log_value(&trial).exp();
                if candidate > value {
                    accepted = Some((trial, candidate));
                    break;
                }
                step *= 0.5;
            }
            match accepted {
                Some((trial, candidate)) => {
                    let gain = candidate - value;
                    alice = trial;
                    value = candidate;
                    step *= 1.5;
                    if gain < cfg.tol {
                        converged = true;
                        break;
                    }
                }
                None => {
                    converged = true;
                    break;
                }
            }
        }
        let alice_vecs: Vec<BlochVector> = alice
            .iter()
            .map(|a| BlochVector::from_direction(*a).expect("unit"))
            .collect();
        let bob = self.best_bob(&alice, &start.bob);
        let strategy = Strategy {
            alice: alice_vecs,
            bob,
            label: start.label.clone(),
        };
        (strategy, converged, iters)
    }
}

fn random_strategy(n: usize, rng: &mut impl Rng) -> Strategy {
    let mut draw = || {
        let v = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        BlochVector::from_direction(v).unwrap_or(BlochVector::Z)
    };
    let alice = (0..n).map(|_| draw()).collect();
    let bob = (0..n).map(|_| draw()).collect();
    Strategy {
        alice,
        bob,
        label: None,
    }
}

fn finish(state: &TwoQubitState, runs: Vec<(Strategy, bool, usize)>) -> Result<OptimizeOutcome> {
    let mut best: Option<OptimizeOutcome> = None;
    for (strategy, converged, iterations) in runs {
        let value = evaluate_strategy(&strategy, state)?.value;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(OptimizeOutcome {
                strategy,
                value,
                converged,
                iterations,
            });
        }
    }
    best.ok_or_else(|| Error::domain("no restarts"))
}

/// Maximizes `B_n` over all `2n` settings from random starting points.
///
/// Each iteration takes a projected gradient step on Alice's vectors (step
/// halved until `B_n` improves) with Bob's vectors at their closed-form
/// optimum. Restarts run in parallel on per-restart seeds; the best result
/// is kept, ties going to the lowest restart index.
pub fn optimize_settings(n: usize, state: &TwoQubitState, cfg: &OptimizeConfig) -> Result<OptimizeOutcome> {
    if n < 2 {
        return Err(Error::domain(format!("optimizer needs n >= 2, got {n}")));
    }
    if cfg.restarts == 0 {
        return Err(Error::domain("optimizer needs at least one restart"));
    }
    let v = VMatrix::new(n)?;
    let ascent = Ascent {
        tensor: state.correlation_tensor(),
        v: &v,
    };
    let runs: Vec<_> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(cfg.seed, &[0x0971, r as u64]);
            ascent.run(&random_strategy(n, &mut rng), cfg)
        })
        .collect();
    finish(state, runs)
}

/// Runs the same ascent from a given strategy.
pub fn optimize_from(start: &Strategy, state: &TwoQubitState, cfg: &OptimizeConfig) -> Result<OptimizeOutcome> {
    if start.n() < 2 {
        return Err(Error::domain("optimizer needs n >= 2"));
    }
    let v = VMatrix::new(start.n())?;
    let ascent = Ascent {
        tensor: state.correlation_tensor(),
        v: &v,
    };
    let initial = Strategy {
        bob: ascent.best_bob(
            &start.alice.iter().map(|a| a.to_array()).collect::<Vec<_>>(),
            &start.bob,
        ),
        ..start.clone()
    };
    let seeded_value = evaluate_strategy(start, state)?.value;
    let mut out = finish(state, vec![ascent.run(&initial, cfg)])?;
    if out.value < seeded_value {
        out = OptimizeOutcome {
            strategy: start.clone(),
            value: seeded_value,
            converged: out.converged,
            iterations: out.iterations,
        };
    }
    Ok(out)
}
