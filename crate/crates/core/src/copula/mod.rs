//! Bivariate one-parameter copulas: densities, h-functions, inverses,
//! maximum-likelihood fitting and AIC selection.
//!
//! `h(u, v)` is the conditional CDF `F(u | v) = ∂C(u, v)/∂v`; `h_inv` inverts it
//! in the first argument. All evaluations clamp inputs to `[EPS, 1 - EPS]`.
//! Density, `h` and `h_inv` are generic over [`Real`] in the copula arguments
//! so gradients can flow through sampled points.

pub mod families;
pub mod gaussian;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::Real;
use crate::error::{Error, Result};
use crate::numerics::grid_then_brent;

use families as fam;

/// Minimum number of pairs accepted by [`fit`] and [`select`].
pub const MIN_PAIRS: usize = 50;

const GAUSS_BOUND: f64 = 1.0 - 1e-4;
const CLAYTON_MAX: f64 = 28.0;
const GUMBEL_MAX: f64 = 17.0;
const FRANK_MAX: f64 = 35.0;
// lower edge of the Clayton / |Frank| search; the limit θ → 0 is independence
const THETA_MIN: f64 = 1e-4;
const GRID_POINTS: usize = 50;
const THETA_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CopulaFamily {
    Independence,
    Gaussian,
    Clayton,
    Clayton180,
    Gumbel,
    Gumbel180,
    Frank,
}

impl CopulaFamily {
    /// Selection order; ties in AIC go to the earlier entry.
    pub const ALL: [CopulaFamily; 7] = [
        CopulaFamily::Independence,
        CopulaFamily::Gaussian,
        CopulaFamily::Clayton,
        CopulaFamily::Clayton180,
        CopulaFamily::Gumbel,
        CopulaFamily::Gumbel180,
        CopulaFamily::Frank,
    ];

    pub fn n_params(self) -> usize {
        match self {
            CopulaFamily::Independence => 0,
            _ => 1,
        }
    }

    pub fn contains(self, theta: f64) -> bool {
        use CopulaFamily::*;
        theta.is_finite()
            && match self {
                Independence => true,
                Gaussian => theta.abs() < 1.0,
                Clayton | Clayton180 => theta > 0.0 && theta <= CLAYTON_MAX,
                Gumbel | Gumbel180 => (1.0..=GUMBEL_MAX).contains(&theta),
                Frank => theta != 0.0 && theta.abs() <= FRANK_MAX,
            }
    }

    pub fn name(self) -> &'static str {
        use CopulaFamily::*;
        match self {
            Independence => "Independence",
            Gaussian => "Gaussian",
            Clayton => "Clayton",
            Clayton180 => "Clayton180",
            Gumbel => "Gumbel",
            Gumbel180 => "Gumbel180",
            Frank => "Frank",
        }
    }

    // closed intervals searched by the MLE
    fn search_ranges(self) -> Vec<(f64, f64)> {
        use CopulaFamily::*;
        match self {
            Independence => vec![],
            Gaussian => vec![(-GAUSS_BOUND, GAUSS_BOUND)],
            Clayton | Clayton180 => vec![(THETA_MIN, CLAYTON_MAX)],
            Gumbel | Gumbel180 => vec![(1.0, GUMBEL_MAX)],
            Frank => vec![(-FRANK_MAX, -THETA_MIN), (THETA_MIN, FRANK_MAX)],
        }
    }
}

impl fmt::Display for CopulaFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CopulaFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        CopulaFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Input(format!("unknown copula family {s:?}")))
    }
}

/// A copula family with its parameter and, when fitted, the fit statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaModel {
    pub family: CopulaFamily,
    pub theta: f64,
    /// Log-likelihood in nats of the fitted sample (0 if not fitted).
    pub loglik: f64,
    pub aic: f64,
    pub n_fitted: usize,
}

impl CopulaModel {
    /// An unfitted model; fails when `theta` lies outside the family domain.
    pub fn new(family: CopulaFamily, theta: f64) -> Result<Self> {
        if !family.contains(theta) {
            return Err(Error::ParameterDomain {
                family: family.name(),
                value: theta,
            });
        }
        let theta = if family == CopulaFamily::Independence {
            0.0
        } else {
            theta
        };
        Ok(CopulaModel {
            family,
            theta,
            loglik: 0.0,
            aic: 2.0 * family.n_params() as f64,
            n_fitted: 0,
        })
    }

    pub fn independence() -> Self {
        CopulaModel {
            family: CopulaFamily::Independence,
            theta: 0.0,
            loglik: 0.0,
            aic: 0.0,
            n_fitted: 0,
        }
    }

    pub fn log_density<R: Real>(&self, u: R, v: R) -> R {
        use CopulaFamily::*;
        let (u, v) = (u.clamp_unit(), v.clamp_unit());
        let t = self.theta;
        match self.family {
            Independence => u.lift(0.0),
            Gaussian => gaussian::log_density(u, v, u.lift(t)),
            Clayton => fam::clayton_log_density(u, v, t),
            Clayton180 => fam::clayton_log_density(u.rsub(1.0), v.rsub(1.0), t),
            Gumbel => fam::gumbel_log_density(u, v, t),
            Gumbel180 => fam::gumbel_log_density(u.rsub(1.0), v.rsub(1.0), t),
            Frank => fam::frank_log_density(u, v, t),
        }
    }

    pub fn density(&self, u: f64, v: f64) -> f64 {
        self.log_density(u, v).exp()
    }

    /// Conditional CDF F(u | v).
    pub fn h<R: Real>(&self, u: R, v: R) -> R {
        use CopulaFamily::*;
        let (u, v) = (u.clamp_unit(), v.clamp_unit());
        let t = self.theta;
        let out = match self.family {
            Independence => u,
            Gaussian => gaussian::h(u, v, u.lift(t)),
            Clayton => fam::clayton_h(u, v, t),
            Clayton180 => fam::clayton_h(u.rsub(1.0), v.rsub(1.0), t).rsub(1.0),
            Gumbel => fam::gumbel_h(u, v, t),
            Gumbel180 => fam::gumbel_h(u.rsub(1.0), v.rsub(1.0), t).rsub(1.0),
            Frank => fam::frank_h(u, v, t),
        };
        out.clamp_unit()
    }

    /// Inverse of `h(·, v)`: the `u` with F(u | v) = w.
    pub fn h_inv<R: Real>(&self, w: R, v: R) -> R {
        use CopulaFamily::*;
        let (w, v) = (w.clamp_unit(), v.clamp_unit());
        let t = self.theta;
        let out = match self.family {
            Independence => w,
            Gaussian => gaussian::h_inv(w, v, w.lift(t)),
            Clayton => fam::clayton_h_inv(w, v, t),
            Clayton180 => fam::clayton_h_inv(w.rsub(1.0), v.rsub(1.0), t).rsub(1.0),
            Gumbel => fam::gumbel_h_inv(w, v, t),
            Gumbel180 => fam::gumbel_h_inv(w.rsub(1.0), v.rsub(1.0), t).rsub(1.0),
            Frank => fam::frank_h_inv(w, v, t),
        };
        out.clamp_unit()
    }

    /// Kendall's τ implied by the model.
    pub fn kendall_tau(&self) -> f64 {
        use CopulaFamily::*;
        let t = self.theta;
        match self.family {
            Independence => 0.0,
            Gaussian => 2.0 / std::f64::consts::PI * t.asin(),
            Clayton | Clayton180 => t / (t + 2.0),
            Gumbel | Gumbel180 => 1.0 - 1.0 / t,
            Frank => 1.0 - 4.0 / t * (1.0 - fam::debye1(t)),
        }
    }

    /// Σ log c over the pairs.
    pub fn loglik_of(&self, u: &[f64], v: &[f64]) -> f64 {
        u.iter().zip(v).map(|(&a, &b)| self.log_density(a, b)).sum()
    }
}

fn check_pairs(u: &[f64], v: &[f64]) -> Result<()> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    if u.len() < MIN_PAIRS {
        return Err(Error::TooFewSamples {
            needed: MIN_PAIRS,
            got: u.len(),
        });
    }
    if let Some(&bad) = u.iter().chain(v).find(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            context: "copula fit input",
            value: bad,
        });
    }
    if u.iter().all(|&x| x == u[0]) && v.iter().all(|&x| x == v[0]) {
        return Err(Error::Degenerate("all pairs identical".into()));
    }
    Ok(())
}

/// Maximum-likelihood fit of one family: grid scan then Brent refinement.
pub fn fit(family: CopulaFamily, u: &[f64], v: &[f64]) -> Result<CopulaModel> {
    check_pairs(u, v)?;
    let n = u.len();
    if family == CopulaFamily::Independence {
        return Ok(CopulaModel {
            n_fitted: n,
            ..CopulaModel::independence()
        });
    }
    let mut best: Option<(f64, f64)> = None;
    for (lo, hi) in family.search_ranges() {
        let neg = |t: f64| {
            let m = CopulaModel {
                family,
                theta: t,
                ..CopulaModel::independence()
            };
            let ll = m.loglik_of(u, v);
            if ll.is_nan() {
                f64::INFINITY
            } else {
                -ll
            }
        };
        let m = grid_then_brent(neg, lo, hi, GRID_POINTS, THETA_TOL);
        if best.is_none_or(|(_, v)| m.value < v) {
            best = Some((m.x, m.value));
        }
    }
    let (theta, neg_ll) = best.expect("every parametric family has a search range");
    if !neg_ll.is_finite() {
        return Err(Error::Degenerate(format!(
            "{family} log-likelihood not finite at the optimum"
        )));
    }
    let loglik = -neg_ll;
    Ok(CopulaModel {
        family,
        theta,
        loglik,
        aic: 2.0 * family.n_params() as f64 - 2.0 * loglik,
        n_fitted: n,
    })
}

/// Fit every candidate family and return the minimum-AIC model.
pub fn select_from(families: &[CopulaFamily], u: &[f64], v: &[f64]) -> Result<CopulaModel> {
    let mut best: Option<CopulaModel> = None;
    for &f in families {
        let m = fit(f, u, v)?;
        if best.is_none_or(|b| m.aic < b.aic) {
            best = Some(m);
        }
    }
    best.ok_or_else(|| Error::InvalidConfig("empty copula family list".into()))
}

pub fn select(u: &[f64], v: &[f64]) -> Result<CopulaModel> {
    select_from(&CopulaFamily::ALL, u, v)
}
