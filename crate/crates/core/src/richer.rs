//! Bounds driven by local correlations.
//!
//! For two standardized observables of one party with local correlation
//! `eta`, the correlation vector `v = (rho_0j, rho_1j)` against any
//! observable of the other party must keep `[[1, eta], [eta*, 1]] - v v^T`
//! positive semidefinite. For real `eta` that region is an ellipse with
//! semi-axes `sqrt(1 + eta)` along `(1, 1)/sqrt(2)` and `sqrt(1 - eta)` along
//! `(1, -1)/sqrt(2)`, which caps CHSH and `B_2`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::functionals::{b2_chsh_indexed, chsh};
use crate::quantum::{norm3, ser_complex, BlochVector, Party, TwoQubitState};
use crate::rng::stream_rng;
use crate::{Error, Result};

/// Default determinant slack in [`ri_psd_check`].
pub const PSD_TOL: f64 = 1e-10;

const SCAN_TAG: u64 = 0xb0b;

fn check_eta(eta: Complex64) -> Result<()> {
    if eta.norm().is_nan() || eta.norm() > 1.0 + 1e-12 {
        return Err(Error::domain(format!("|eta| = {} exceeds 1", eta.norm())));
    }
    Ok(())
}

fn check_real(label: &str, x: f64) -> Result<()> {
    if x.is_nan() || x.abs() > 1.0 + 1e-12 {
        return Err(Error::domain(format!("|{label}| = {} exceeds 1", x.abs())));
    }
    Ok(())
}

fn sqrt0(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// `min(sqrt2 (sqrt(1 + Re eta) + sqrt(1 - Re eta)), 2 sqrt2 sqrt(1 - (Im eta)^2))`.
pub fn chsh_bound(eta: Complex64) -> Result<f64> {
    check_eta(eta)?;
    let s2 = std::f64::consts::SQRT_2;
    let real_part = s2 * (sqrt0(1.0 + eta.re) + sqrt0(1.0 - eta.re));
    let imag_part = 2.0 * s2 * sqrt0(1.0 - eta.im * eta.im);
    Ok(real_part.min(imag_part))
}

/// `1 + sqrt(1 - eta^2)`: any state.
pub fn b2_bound_general(eta: f64) -> Result<f64> {
    check_real("eta", eta)?;
    Ok(1.0 + sqrt0(1.0 - eta * eta))
}

/// `2 sqrt(1 - eta^2)`: maximally entangled states.
pub fn b2_bound_maxent(eta: f64) -> Result<f64> {
    check_real("eta", eta)?;
    Ok(2.0 * sqrt0(1.0 - eta * eta))
}

/// The maxent expression when `maxent` is set, the general one otherwise.
pub fn b2_bound(eta: f64, maxent: bool) -> Result<f64> {
    if maxent {
        b2_bound_maxent(eta)
    } else {
        b2_bound_general(eta)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EtaBoundReport {
    #[serde(serialize_with = "ser_complex")]
    pub eta: Complex64,
    pub chsh_bound: f64,
    /// `B_2` bounds use `Re eta`.
    pub b2_bound_general: f64,
    pub b2_bound_maxent: f64,
    pub b2_bound_combined: f64,
}

pub fn eta_bounds(eta: Complex64) -> Result<EtaBoundReport> {
    let chsh_bound = chsh_bound(eta)?;
    let b2_bound_general = b2_bound_general(eta.re)?;
    let b2_bound_maxent = b2_bound_maxent(eta.re)?;
    Ok(EtaBoundReport {
        eta,
        chsh_bound,
        b2_bound_general,
        b2_bound_maxent,
        b2_bound_combined: b2_bound_general.min(b2_bound_maxent),
    })
}

/// `(sqrt(2(1 + d)), sqrt(2(1 - d)))`: caps on `|rho_00 + rho_01|` and
/// `|rho_00 - rho_01|`.
pub fn pair_bounds(d: f64) -> Result<(f64, f64)> {
    check_real("d", d)?;
    Ok((sqrt0(2.0 * (1.0 + d)), sqrt0(2.0 * (1.0 - d))))
}

/// Whether `[[1, eta], [eta*, 1]] - v v^T` is positive semidefinite, with
/// determinant slack [`PSD_TOL`].
pub fn ri_psd_check(v: [f64; 2], eta: Complex64) -> bool {
    ri_psd_check_tol(v, eta, PSD_TOL)
}

pub fn ri_psd_check_tol(v: [f64; 2], eta: Complex64, tol: f64) -> bool {
    let m00 = 1.0 - v[0] * v[0];
    let m11 = 1.0 - v[1] * v[1];
    let off = eta - v[0] * v[1];
    let det = m00 * m11 - off.norm_sqr();
    m00 + m11 >= -tol && m00 >= -tol && m11 >= -tol && det >= -tol
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EllipseAxes {
    /// `e_j = sqrt((1 +- (-1)^j |eta|) / sqrt2) (1, (-1)^j)`, as published.
    pub paper_axes: [[f64; 2]; 2],
    /// Semi-axes of the PSD region along `directions`.
    pub psd_semi_axes: [f64; 2],
    pub directions: [[f64; 2]; 2],
}

pub fn ellipse_axes(eta: f64) -> Result<EllipseAxes> {
    check_real("eta", eta)?;
    let a = eta.abs();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let k0 = sqrt0((1.0 + a) / std::f64::consts::SQRT_2);
    let k1 = sqrt0((1.0 - a) / std::f64::consts::SQRT_2);
    Ok(EllipseAxes {
        paper_axes: [[k0, k0], [k1, -k1]],
        psd_semi_axes: [sqrt0(1.0 + eta), sqrt0(1.0 - eta)],
        directions: [[r, r], [r, -r]],
    })
}

/// `points` vertices of the PSD ellipse boundary, counterclockwise from the
/// major-axis tip when `eta >= 0`.
pub fn ellipse_boundary(eta: f64, points: usize) -> Result<Vec<[f64; 2]>> {
    let ax = ellipse_axes(eta)?;
    Ok((0..points)
        .map(|k| {
            let t = std::f64::consts::TAU * k as f64 / points as f64;
            let (u, w) = (ax.psd_semi_axes[0] * t.cos(), ax.psd_semi_axes[1] * t.sin());
            let (d0, d1) = (ax.directions[0], ax.directions[1]);
            [u * d0[0] + w * d1[0], u * d0[1] + w * d1[1]]
        })
        .collect())
}

/// Alice settings in the `xy` plane with `a0 . a1 = d`.
pub fn alice_pair_with_overlap(d: f64) -> Result<[BlochVector; 2]> {
    check_real("d", d)?;
    let d = d.clamp(-1.0, 1.0);
    Ok([
        BlochVector::X,
        BlochVector::from_direction([d, sqrt0(1.0 - d * d), 0.0])?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// `(rho_0j, rho_1j)` for Bob's setting `j`.
    Alice,
    /// `(rho_i0, rho_i1)` for Alice's setting `i`.
    Bob,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CorrelationVectorSample {
    pub rho_vec: [f64; 2],
    pub side: Side,
    pub index: usize,
    #[serde(serialize_with = "ser_complex")]
    pub eta: Complex64,
    pub inside_psd: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanTrial {
    pub trial: usize,
    pub bob: [BlochVector; 2],
    pub chsh: f64,
    pub b2: f64,
    #[serde(serialize_with = "ser_complex")]
    pub eta_b: Complex64,
    /// Smaller of the Alice-side and Bob-side CHSH bounds.
    pub chsh_bound_min: f64,
    pub samples: Vec<CorrelationVectorSample>,
}

#[derive(Clone, Debug, Serialize)]
pub struct BobScan {
    #[serde(serialize_with = "ser_complex")]
    pub eta_a: Complex64,
    /// Local marginals are maximally mixed, so the tighter `B_2` bound holds.
    pub maxent: bool,
    pub chsh_bound: f64,
    pub b2_bound: f64,
    pub trials: Vec<ScanTrial>,
    pub max_abs_chsh: f64,
    pub max_abs_b2: f64,
    pub psd_failures: usize,
}

fn uniform_on_sphere(rng: &mut impl Rng) -> BlochVector {
    loop {
        let v = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        if norm3(v) > 1e-12 {
            return BlochVector::from_direction(v).expect("nonzero");
        }
    }
}

/// Fixed Alice pair, uniformly random Bob pairs. Trial `t` draws from its
/// own stream, so results do not depend on scheduling.
pub fn bob_scan(state: &TwoQubitState, alice: [BlochVector; 2], trials: usize, seed: u64) -> Result<BobScan> {
    if trials == 0 {
        return Err(Error::domain("bob_scan needs at least one trial"));
    }
    let eta_a = state.local_stats(&alice[0], &alice[1], Party::Alice)?.eta;
    let maxent = [Party::Alice, Party::Bob]
        .iter()
        .all(|&p| norm3(state.local_bloch(p)) < 1e-9);
    let chsh_bound_a = chsh_bound(eta_a)?;
    let b2_bound = b2_bound(eta_a.re, maxent)?;
    let rows: Vec<ScanTrial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, &[SCAN_TAG, t as u64]);
            let bob = [uniform_on_sphere(&mut rng), uniform_on_sphere(&mut rng)];
            let rho = state.pearson_matrix(&alice, &bob)?;
            let eta_b = state.local_stats(&bob[0], &bob[1], Party::Bob)?.eta;
            let mut samples = Vec::with_capacity(4);
            for j in 0..2 {
                let v = [rho.get(0, j), rho.get(1, j)];
                samples.push(CorrelationVectorSample {
                    rho_vec: v,
                    side: Side::Alice,
                    index: j,
                    eta: eta_a,
                    inside_psd: ri_psd_check(v, eta_a),
                });
            }
            for i in 0..2 {
                let v = [rho.get(i, 0), rho.get(i, 1)];
                samples.push(CorrelationVectorSample {
                    rho_vec: v,
                    side: Side::Bob,
                    index: i,
                    eta: eta_b,
                    inside_psd: ri_psd_check(v, eta_b),
                });
            }
            Ok(ScanTrial {
                trial: t,
                bob,
                chsh: chsh(&rho)?,
                b2: b2_chsh_indexed(&rho)?,
                eta_b,
                chsh_bound_min: chsh_bound_a.min(chsh_bound(eta_b)?),
                samples,
            })
        })
        .collect::<Result<_>>()?;
    let max_abs_chsh = rows.iter().map(|r| r.chsh.abs()).fold(0.0, f64::max);
    let max_abs_b2 = rows.iter().map(|r| r.b2.abs()).fold(0.0, f64::max);
    let psd_failures = rows.iter().flat_map(|r| &r.samples).filter(|s| !s.inside_psd).count();
    Ok(BobScan {
        eta_a,
        maxent,
        chsh_bound: chsh_bound_a,
        b2_bound,
        trials: rows,
        max_abs_chsh,
        max_abs_b2,
        psd_failures,
    })
}
