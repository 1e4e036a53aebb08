//! The `V` matrix and the Bell functionals built from it.
//!
//! For an `n x n` correlation matrix `C` (row `i` = Alice's setting, column
//! `j` = Bob's setting) the factor of column `j` is `v_j . c_j`, where `v_j`
//! is column `j` of `V`. The multiplicative functional is the product of the
//! factors, the additive functional their sum.
//!
//! # Index conventions for `n = 2`
//!
//! The canonical two-setting factors are `(c11 - c21)` and `(c12 + c22)`.
//! CHSH is written on 0-indexed Pearson entries as
//! `rho00 + rho10 + rho01 - rho11`. Swapping Bob's two settings
//! (`rho_i0 = c_{i+1,2}`, `rho_i1 = c_{i+1,1}`) maps one onto the other:
//! `B'_2(C) = CHSH(swap(C))` and
//! `B_2(C) = (rho00 + rho10)(rho01 - rho11)` with `rho = swap(C)`.
//! [`CorrelationMatrix::swap_bob_settings`] performs that relabeling.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Slack allowed on `|c_ij| <= 1`.
pub const ENTRY_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl VMatrix {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("V matrix needs n >= 1"));
        }
        let mut entries = vec![0i64; n * n];
        for j in 0..n {
            if j + 1 < n {
                for i in 0..=j {
                    entries[i * n + j] = 1;
                }
                entries[(j + 1) * n + j] = -(j as i64 + 1);
            } else {
                for i in 0..n {
                    entries[i * n + j] = 1;
                }
            }
        }
        Ok(VMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry at 0-indexed row `i`, column `j`.
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}

/// A square matrix of correlators (or Pearson correlations), row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CorrelationMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::domain(format!(
                "correlation matrix of order {n} needs {} entries, got {}",
                n * n,
                entries.len()
            )));
        }
        if let Some(bad) = entries.iter().find(|c| !c.is_finite() || c.abs() > 1.0 + ENTRY_TOL) {
            return Err(Error::domain(format!("correlator {bad} outside [-1, 1]")));
        }
        Ok(CorrelationMatrix { n, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::domain("correlation matrix must be square"));
        }
        Self::new(n, rows.concat())
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                entries.push(f(i, j));
            }
        }
        Self::new(n, entries)
    }

    /// Rank-one `c_ij = alpha_i beta_j`.
    pub fn outer(alpha: &[i8], beta: &[i8]) -> Result<Self> {
        if alpha.len() != beta.len() {
            return Err(Error::domain("outcome vectors differ in length"));
        }
        Self::from_fn(alpha.len(), |i, j| f64::from(alpha[i]) * f64::from(beta[j]))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.n).map(<[f64]>::to_vec).collect()
    }

    /// Multiplies every entry by `p` (`|p| <= 1` keeps the invariant).
    pub fn scaled(&self, p: f64) -> Result<Self> {
        Self::new(self.n, self.entries.iter().map(|c| c * p).collect())
    }

    /// Exchanges Bob's settings 1 and 2 of a two-setting matrix; see the
    /// module docs.
    pub fn swap_bob_settings(&self) -> Result<Self> {
        if self.n != 2 {
            return Err(Error::domain("setting relabeling is defined for n = 2"));
        }
        Self::from_fn(2, |i, j| self.get(i, 1 - j))
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                entries[j * n + i] = self.get(i, j);
            }
        }
        CorrelationMatrix { n, entries }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BellKind {
    Multiplicative,
    Additive,
    Chsh,
}

/// A functional value together with its per-column factors `v_j . c_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellResult {
    pub n: usize,
    pub value: f64,
    pub factors: Vec<f64>,
    pub kind: BellKind,
}

/// `v_j . c_j` for every column.
pub fn factors(c: &CorrelationMatrix) -> Vec<f64> {
    let n = c.n();
    let v = VMatrix::new(n).expect("n >= 1 by construction");
    (0..n)
        .map(|j| (0..n).map(|i| v.get(i, j) as f64 * c.get(i, j)).sum())
        .collect()
}

fn require_bell_order(c: &CorrelationMatrix) -> Result<()> {
    if c.n() < 2 {
        return Err(Error::domain("Bell functionals need n >= 2"));
    }
    Ok(())
}

/// Signed `prod_j v_j . c_j`.
pub fn multiplicative_bell(c: &CorrelationMatrix) -> Result<BellResult> {
    require_bell_order(c)?;
    let factors = factors(c);
    let value = factors.iter().product();
    Ok(BellResult {
        n: c.n(),
        value,
        factors,
        kind: BellKind::Multiplicative,
    })
}

/// `sum_j v_j . c_j`.
pub fn additive_bell(c: &CorrelationMatrix) -> Result<BellResult> {
    require_bell_order(c)?;
    let factors = factors(c);
    let value = factors.iter().sum();
    Ok(BellResult {
        n: c.n(),
        value,
        factors,
        kind: BellKind::Additive,
    })
}

/// `rho00 + rho10 + rho01 - rho11` on a 0-indexed 2x2 matrix.
pub fn chsh(rho: &CorrelationMatrix) -> Result<f64> {
    if rho.n() != 2 {
        return Err(Error::domain("CHSH needs a 2x2 matrix"));
    }
    Ok(rho.get(0, 0) + rho.get(1, 0) + rho.get(0, 1) - rho.get(1, 1))
}

/// `(rho00 + rho10)(rho01 - rho11)`: the two-setting multiplicative
/// functional in CHSH indexing.
pub fn b2_chsh_indexed(rho: &CorrelationMatrix) -> Result<f64> {
    if rho.n() != 2 {
        return Err(Error::domain("B_2 needs a 2x2 matrix"));
    }
    Ok((rho.get(0, 0) + rho.get(1, 0)) * (rho.get(0, 1) - rho.get(1, 1)))
}

/// Both sides of `|B_n| <= (B'_n / n)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AmGmGap {
    pub lhs: f64,
    pub rhs: f64,
    /// All factors nonnegative, so `lhs <= rhs` is guaranteed.
    pub precondition_met: bool,
}

pub fn amgm_gap(c: &CorrelationMatrix) -> Result<AmGmGap> {
    require_bell_order(c)?;
    let f = factors(c);
    let n = f.len() as f64;
    let lhs = f.iter().product::<f64>().abs();
    let rhs = (f.iter().sum::<f64>() / n).powi(f.len() as i32);
    Ok(AmGmGap {
        lhs,
        rhs,
        precondition_met: f.iter().all(|x| *x >= 0.0),
    })
}
