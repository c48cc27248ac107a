//! The full decomposition: unique information from the bound minimization,
//! mutual informations from copula log-densities, and the remaining terms
//! from the consistency relations
//!
//! ```text
//! I(Y:(X1,X2)) = U1 + U2 + R + S,   I(Y:X1) = U1 + R,   I(Y:X2) = U2 + R.
//! ```

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::copula::{gaussian, select, CopulaFamily, CopulaModel};
use crate::diff::{Dual, Real};
use crate::error::{Error, Result};
use crate::estimator::{train_with_pair, Adam, EstimatorConfig, FittedPair, UniqueFit, MIN_SAMPLES};
use crate::nets::{theta_eval_grad, ThetaNet, THETA_PARAMS};
use crate::numerics::{derive_seed, RngStream};
use crate::pseudoobs::{pseudo_observations, Dataset, PseudoDataset};

// derived-seed slots, so each sub-fit owns an independent stream
const SEED_JOINT: u64 = 1;
const SEED_DIRECT_U2: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Units {
    #[default]
    Nats,
    Bits,
}

impl Units {
    /// Multiplier from nats.
    pub fn scale(self) -> f64 {
        match self {
            Units::Nats => 1.0,
            Units::Bits => 1.0 / std::f64::consts::LN_2,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Nats => "nats",
            Units::Bits => "bits",
        })
    }
}

impl FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nats" => Ok(Units::Nats),
            "bits" => Ok(Units::Bits),
            other => Err(Error::Input(format!("unknown units '{other}' (expected nats or bits)"))),
        }
    }
}

/// The four terms before clamping at zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawTerms {
    pub u1: f64,
    pub u2: f64,
    pub r: f64,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub raw: RawTerms,
    pub family_y1: CopulaFamily,
    pub family_y2: CopulaFamily,
    pub family_12: CopulaFamily,
    /// Mean bound over the averaging window, before clamping.
    pub bound_window_mean: f64,
    pub bound_last: f64,
    pub iterations: usize,
    /// Set when the decomposition was decided in closed form.
    pub shortcut: Option<Shortcut>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PidReport {
    pub u1: f64,
    pub u2: f64,
    pub r: f64,
    pub s: f64,
    pub i_y_x1: f64,
    pub i_y_x2: f64,
    pub i_y_x12: f64,
    /// S - R of the reported terms.
    pub delta: f64,
    pub units: Units,
    pub diagnostics: Diagnostics,
}

impl PidReport {
    /// Builds a report from U1 and the three mutual informations (nats).
    pub fn from_parts(u1: f64, i1: f64, i2: f64, i12: f64, diagnostics: Diagnostics) -> Self {
        let (i1, i2, i12) = (i1.max(0.0), i2.max(0.0), i12.max(0.0));
        let r = i1 - u1;
        let u2 = i2 - r;
        let s = i12 - u1 - u2 - r;
        let raw = RawTerms { u1, u2, r, s };
        let (u1, u2, r, s) = (u1.max(0.0), u2.max(0.0), r.max(0.0), s.max(0.0));
        PidReport {
            u1,
            u2,
            r,
            s,
            i_y_x1: i1,
            i_y_x2: i2,
            i_y_x12: i12,
            delta: s - r,
            units: Units::Nats,
            diagnostics: Diagnostics { raw, ..diagnostics },
        }
    }

    /// The same report in other units. Diagnostics other than the raw
    /// terms stay in nats.
    pub fn in_units(&self, units: Units) -> PidReport {
        let k = units.scale() / self.units.scale();
        let raw = self.diagnostics.raw;
        PidReport {
            u1: self.u1 * k,
            u2: self.u2 * k,
            r: self.r * k,
            s: self.s * k,
            i_y_x1: self.i_y_x1 * k,
            i_y_x2: self.i_y_x2 * k,
            i_y_x12: self.i_y_x12 * k,
            delta: self.delta * k,
            units,
            diagnostics: Diagnostics {
                raw: RawTerms {
                    u1: raw.u1 * k,
                    u2: raw.u2 * k,
                    r: raw.r * k,
                    s: raw.s * k,
                },
                ..self.diagnostics.clone()
            },
        }
    }
}

/// I(U:V) as the sample mean of log c(u, v). Not clamped.
pub fn mi_pair(u: &[f64], v: &[f64], model: &CopulaModel) -> f64 {
    if model.family == CopulaFamily::Independence {
        return 0.0;
    }
    model.loglik_of(u, v) / u.len() as f64
}

/// Result of the joint mutual information fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointFit {
    /// I(Y:(X1,X2)) in nats, not clamped.
    pub value: f64,
    pub c_12: CopulaModel,
    pub theta_net: ThetaNet,
}

/// Mean of log c_G(u_{1|y}, u_{2|y}; θ(u_y)) over the given rows.
fn conditional_loglik(net: &[f64], uy: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = uy
        .iter()
        .zip(a.iter().zip(b))
        .map(|(&y, (&a, &b))| gaussian::log_density(a, b, crate::nets::theta_eval(net, y)))
        .sum();
    s / uy.len() as f64
}

/// Iteration cap for [`fit_conditional_theta`].
pub const JOINT_MAX_ITERATIONS: usize = 6000;
/// The fit stops once the mean log-likelihood gains less than
/// [`JOINT_TOLERANCE`] nats over a block of this many iterations.
pub const JOINT_CHECK_EVERY: usize = 200;
pub const JOINT_TOLERANCE: f64 = 1e-5;

/// Maximum-likelihood θ-net for the conditional Gaussian copula of
/// (u_{1|y}, u_{2|y}) given u_y, trained with ADAM on full-batch gradients
/// until the log-likelihood stalls. Only the learning rate and ADAM
/// constants are taken from `config`.
pub fn fit_conditional_theta(
    uy: &[f64],
    a: &[f64],
    b: &[f64],
    config: &EstimatorConfig,
    seed: u64,
) -> ThetaNet {
    let mut rng = RngStream::new(seed);
    let mut net = ThetaNet::init(&mut rng);
    let mut adam = Adam::new(THETA_PARAMS, config.adam_beta1, config.adam_beta2, config.adam_eps);
    let mut grad = vec![0.0; THETA_PARAMS];
    let mut local = vec![0.0; THETA_PARAMS];
    let m = uy.len();
    let mut checkpoint = f64::NEG_INFINITY;
    for it in 0..JOINT_MAX_ITERATIONS {
        grad.fill(0.0);
        let mut loglik = 0.0;
        for i in 0..m {
            let (t, _) = theta_eval_grad(&net.params, uy[i], &mut local);
            let l = gaussian::log_density(Dual::constant(a[i]), Dual::constant(b[i]), Dual::new(t, 1.0));
            loglik += l.value();
            // minimize the negative mean log-likelihood
            for (g, x) in grad.iter_mut().zip(&local) {
                *g -= l.deriv() * x / m as f64;
            }
        }
        if it % JOINT_CHECK_EVERY == 0 {
            let mean = loglik / m as f64;
            if mean - checkpoint < JOINT_TOLERANCE {
                break;
            }
            checkpoint = mean;
        }
        adam.step(&mut net.params, &grad, config.learning_rate);
    }
    net
}

/// I(Y:(X1,X2)) through the pair-copula construction: c(u_1,u_2) by AIC
/// selection and a freshly fitted θ-net for the conditional copula.
pub fn mi_joint(pseudo: &PseudoDataset, pair: &FittedPair, config: &EstimatorConfig, seed: u64) -> Result<JointFit> {
    let c_12 = select(&pseudo.u1, &pseudo.u2)?;
    let a: Vec<f64> = pseudo.u1.iter().zip(&pseudo.uy).map(|(&u, &y)| pair.c_y1.h(u, y)).collect();
    let b: Vec<f64> = pseudo.u2.iter().zip(&pseudo.uy).map(|(&u, &y)| pair.c_y2.h(u, y)).collect();
    let theta_net = fit_conditional_theta(&pseudo.uy, &a, &b, config, seed);
    let value = mi_pair(&pseudo.uy, &pseudo.u1, &pair.c_y1) + mi_pair(&pseudo.uy, &pseudo.u2, &pair.c_y2)
        + conditional_loglik(&theta_net.params, &pseudo.uy, &a, &b)
        - mi_pair(&pseudo.u1, &pseudo.u2, &c_12);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            context: "joint mutual information",
            value,
        });
    }
    Ok(JointFit { value, c_12, theta_net })
}

/// Everything [`decompose`] computes, with the fitted models.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub report: PidReport,
    pub pair: FittedPair,
    pub unique: Option<UniqueFit>,
    pub joint: Option<JointFit>,
}

fn check_len(data: &Dataset) -> Result<()> {
    if data.len() < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            needed: MIN_SAMPLES,
            got: data.len(),
        });
    }
    Ok(())
}

/// Cases decided without optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shortcut {
    /// X1 and X2 are the same column: U1 = U2 = S = 0, R = I(Y:X1).
    IdenticalSources,
    /// Y is constant and carries no information.
    ConstantTarget,
    /// X1 is constant: U2 = I(Y:X2), everything else 0.
    ConstantX1,
    /// X2 is constant: U1 = I(Y:X1), everything else 0.
    ConstantX2,
}

fn is_constant(c: &[f64]) -> bool {
    c.iter().all(|&v| v == c[0])
}

fn shortcut_report(shortcut: Shortcut, pair: FittedPair, i1: f64, i2: f64) -> PidReport {
    let diagnostics = Diagnostics {
        raw: RawTerms {
            u1: 0.0,
            u2: 0.0,
            r: 0.0,
            s: 0.0,
        },
        family_y1: pair.c_y1.family,
        family_y2: pair.c_y2.family,
        family_12: CopulaFamily::Independence,
        bound_window_mean: 0.0,
        bound_last: 0.0,
        iterations: 0,
        shortcut: Some(shortcut),
    };
    match shortcut {
        Shortcut::IdenticalSources => PidReport::from_parts(0.0, i1, i1, i1, diagnostics),
        Shortcut::ConstantTarget => PidReport::from_parts(0.0, 0.0, 0.0, 0.0, diagnostics),
        Shortcut::ConstantX1 => PidReport::from_parts(0.0, 0.0, i2, i2, diagnostics),
        Shortcut::ConstantX2 => PidReport::from_parts(i1, i1, 0.0, i1, diagnostics),
    }
}

/// Full PID of `data` in nats.
///
/// Degenerate inputs are decided in closed form (see [`Shortcut`]). With
/// identical sources every joint distribution with the prescribed pairs has
/// X1 = X2, so U1 = U2 = S = 0; a constant column carries no information.
pub fn decompose(data: &Dataset, config: &EstimatorConfig) -> Result<Decomposition> {
    check_len(data)?;
    config.validate()?;
    let pseudo = pseudo_observations(data)?;
    let shortcut = if is_constant(&data.y) {
        Some(Shortcut::ConstantTarget)
    } else if is_constant(&data.x1) {
        Some(Shortcut::ConstantX1)
    } else if is_constant(&data.x2) {
        Some(Shortcut::ConstantX2)
    } else if data.x1 == data.x2 {
        Some(Shortcut::IdenticalSources)
    } else {
        None
    };
    let fit_or_indep = |u: &[f64], constant: bool| {
        if constant || is_constant(&data.y) {
            Ok(CopulaModel::independence())
        } else {
            select(&pseudo.uy, u)
        }
    };
    let pair = FittedPair {
        c_y1: fit_or_indep(&pseudo.u1, is_constant(&data.x1))?,
        c_y2: fit_or_indep(&pseudo.u2, is_constant(&data.x2))?,
    };
    let i1 = mi_pair(&pseudo.uy, &pseudo.u1, &pair.c_y1);

    if let Some(sc) = shortcut {
        let i2 = mi_pair(&pseudo.uy, &pseudo.u2, &pair.c_y2);
        return Ok(Decomposition {
            report: shortcut_report(sc, pair, i1, i2),
            pair,
            unique: None,
            joint: None,
        });
    }

    let unique = train_with_pair(&pair, config)?;
    let i2 = mi_pair(&pseudo.uy, &pseudo.u2, &pair.c_y2);
    let joint = mi_joint(&pseudo, &pair, config, derive_seed(config.seed, SEED_JOINT))?;
    let diagnostics = Diagnostics {
        raw: RawTerms {
            u1: 0.0,
            u2: 0.0,
            r: 0.0,
            s: 0.0,
        },
        family_y1: pair.c_y1.family,
        family_y2: pair.c_y2.family,
        family_12: joint.c_12.family,
        bound_window_mean: unique.raw_estimate,
        bound_last: unique.trace.bounds.last().copied().unwrap_or(f64::NAN),
        iterations: unique.trace.bounds.len(),
        shortcut: None,
    };
    let report = PidReport::from_parts(unique.estimate, i1, i2, joint.value, diagnostics);
    Ok(Decomposition {
        report,
        pair,
        unique: Some(unique),
        joint: Some(joint),
    })
}

/// Direct and indirect estimates of U2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// The bound minimized with the sources swapped.
    pub u2_direct: f64,
    /// U2 from the consistency relations.
    pub u2_indirect: f64,
    /// direct - indirect
    pub gap: f64,
    pub report: PidReport,
}

pub fn consistency_check(data: &Dataset, config: &EstimatorConfig) -> Result<ConsistencyReport> {
    let d = decompose(data, config)?;
    let u2_direct = if let Some(sc) = d.report.diagnostics.shortcut {
        // swapping the sources swaps the closed-form case
        match sc {
            Shortcut::ConstantX1 => d.report.u2,
            _ => 0.0,
        }
    } else {
        let swapped = EstimatorConfig {
            seed: derive_seed(config.seed, SEED_DIRECT_U2),
            ..*config
        };
        train_with_pair(&d.pair.swapped(), &swapped)?.estimate
    };
    let u2_indirect = d.report.u2;
    Ok(ConsistencyReport {
        u2_direct,
        u2_indirect,
        gap: u2_direct - u2_indirect,
        report: d.report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::CopulaModel;

    fn fast() -> EstimatorConfig {
        EstimatorConfig {
            iterations: 300,
            window: 50,
            batch_size: 64,
            inner_samples: 20,
            seed: 4,
            ..Default::default()
        }
    }

    fn gaussian_data(r1: f64, r2: f64, r12: f64, n: usize, seed: u64) -> Dataset {
        crate::simgen::gen_gaussian_triple(&crate::simgen::GaussianTriple::new(r1, r2, r12).unwrap(), n, seed).unwrap()
    }

    fn diag() -> Diagnostics {
        Diagnostics {
            raw: RawTerms {
                u1: 0.0,
                u2: 0.0,
                r: 0.0,
                s: 0.0,
            },
            family_y1: CopulaFamily::Gaussian,
            family_y2: CopulaFamily::Gaussian,
            family_12: CopulaFamily::Gaussian,
            bound_window_mean: 0.0,
            bound_last: 0.0,
            iterations: 0,
            shortcut: None,
        }
    }

    #[test]
    fn report_identities_hold_before_clamping() {
        let mut rng = RngStream::new(1);
        for _ in 0..200 {
            let (u1, i1, i2, i12) = (rng.uniform(), rng.uniform(), rng.uniform(), 2.0 * rng.uniform());
            let rep = PidReport::from_parts(u1, i1, i2, i12, diag());
            let raw = rep.diagnostics.raw;
            assert!((raw.u1 + raw.u2 + raw.r + raw.s - rep.i_y_x12).abs() < 1e-15);
            assert_eq!(raw.r, rep.i_y_x1 - raw.u1);
            assert_eq!(raw.u2, rep.i_y_x2 - raw.r);
            for t in [rep.u1, rep.u2, rep.r, rep.s] {
                assert!(t >= 0.0);
            }
            assert_eq!(rep.delta, rep.s - rep.r);
        }
    }

    #[test]
    fn bits_divide_by_ln2() {
        let rep = PidReport::from_parts(0.3, 0.5, 0.2, 0.9, diag());
        let b = rep.in_units(Units::Bits);
        assert_eq!(b.units, Units::Bits);
        for (x, y) in [(rep.u1, b.u1), (rep.r, b.r), (rep.s, b.s), (rep.i_y_x12, b.i_y_x12)] {
            assert!((x / std::f64::consts::LN_2 - y).abs() < 1e-15);
        }
        let back = b.in_units(Units::Nats);
        assert!((back.u1 - rep.u1).abs() < 1e-15);
        assert_eq!("bits".parse::<Units>().unwrap(), Units::Bits);
        assert!("shannons".parse::<Units>().is_err());
    }

    #[test]
    fn independence_model_has_zero_information() {
        let u = vec![0.2, 0.5, 0.7];
        assert_eq!(mi_pair(&u, &u, &CopulaModel::independence()), 0.0);
    }

    #[test]
    fn gaussian_pair_information() {
        // I = -½ log(1 - ρ²) for a Gaussian copula
        let rho: f64 = 0.6;
        let model = CopulaModel::new(CopulaFamily::Gaussian, rho).unwrap();
        let mut rng = RngStream::new(2);
        let n = 100_000;
        let (mut u, mut v) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let a = rng.uniform();
            u.push(a);
            v.push(model.h_inv(rng.uniform(), a));
        }
        let exact = -0.5 * (1.0 - rho * rho).ln();
        assert!((mi_pair(&u, &v, &model) - exact).abs() < 0.01);
    }

    #[test]
    fn pair_information_is_invariant_under_monotone_maps() {
        let d = gaussian_data(0.6, 0.3, 0.2, 2000, 3);
        let g = Dataset::new(
            d.y.iter().map(|x| x.powi(3) + x).collect(),
            d.x1.iter().map(|x| x.exp()).collect(),
            d.x2.clone(),
        )
        .unwrap();
        let (p, q) = (pseudo_observations(&d).unwrap(), pseudo_observations(&g).unwrap());
        let (m1, m2) = (select(&p.uy, &p.u1).unwrap(), select(&q.uy, &q.u1).unwrap());
        assert_eq!(mi_pair(&p.uy, &p.u1, &m1), mi_pair(&q.uy, &q.u1, &m2));
    }

    #[test]
    fn joint_information_matches_gaussian_determinant_formula() {
        let (r1, r2, r12): (f64, f64, f64) = (0.6, 0.6, 0.3);
        let d = gaussian_data(r1, r2, r12, 100_000, 5);
        let p = pseudo_observations(&d).unwrap();
        let pair = FittedPair::fit(&p).unwrap();
        let cfg = EstimatorConfig {
            iterations: 400,
            ..Default::default()
        };
        let got = mi_joint(&p, &pair, &cfg, 6).unwrap().value;
        // ½ log(det Σ_x σ_y² / det Σ)
        let det_x = 1.0 - r12 * r12;
        let det = 1.0 - r1 * r1 - r2 * r2 - r12 * r12 + 2.0 * r1 * r2 * r12;
        let exact = 0.5 * (det_x / det).ln();
        assert!((got - exact).abs() < 0.03, "{got} vs {exact}");
        let (i1, i2) = (mi_pair(&p.uy, &p.u1, &pair.c_y1), mi_pair(&p.uy, &p.u2, &pair.c_y2));
        assert!(got >= i1.max(i2) - 0.02);
    }

    #[test]
    fn independent_data_has_small_joint_information() {
        let d = gaussian_data(0.0, 0.0, 0.0, 3000, 7);
        let p = pseudo_observations(&d).unwrap();
        let pair = FittedPair::fit(&p).unwrap();
        let got = mi_joint(&p, &pair, &fast(), 8).unwrap().value;
        assert!(got <= 0.02, "{got}");
    }

    #[test]
    fn conditional_theta_fit_recovers_constant_correlation() {
        // (a, b) Gaussian-copula pairs with ρ = 0.5 regardless of u_y
        let model = CopulaModel::new(CopulaFamily::Gaussian, 0.5).unwrap();
        let mut rng = RngStream::new(9);
        let n = 5000;
        let (mut uy, mut a, mut b) = (vec![], vec![], vec![]);
        for _ in 0..n {
            uy.push(rng.uniform());
            let x = rng.uniform();
            a.push(x);
            b.push(model.h_inv(rng.uniform(), x));
        }
        let net = fit_conditional_theta(&uy, &a, &b, &EstimatorConfig::default(), 10);
        for y in [0.1, 0.5, 0.9] {
            assert!((net.eval(y) - 0.5).abs() < 0.08, "{}", net.eval(y));
        }
        // a fit never beats the true correlation by much on average
        let base: f64 = a.iter().zip(&b).map(|(&x, &z)| gaussian::log_density(x, z, 0.5)).sum::<f64>() / n as f64;
        assert!(conditional_loglik(&net.params, &uy, &a, &b) >= base - 0.01);
    }

    #[test]
    fn identical_sources_short_circuit() {
        let d = gaussian_data(0.7, 0.0, 0.0, 500, 11);
        let same = Dataset::new(d.y.clone(), d.x1.clone(), d.x1.clone()).unwrap();
        let rep = decompose(&same, &fast()).unwrap().report;
        assert_eq!(rep.diagnostics.shortcut, Some(Shortcut::IdenticalSources));
        assert_eq!((rep.u1, rep.u2, rep.s), (0.0, 0.0, 0.0));
        assert_eq!(rep.r, rep.i_y_x1);
        assert!(rep.r > 0.2);
    }

    #[test]
    fn too_few_rows_rejected() {
        let d = gaussian_data(0.5, 0.5, 0.25, 40, 12);
        assert!(matches!(decompose(&d, &fast()), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn decomposition_of_independent_data_is_small() {
        let d = gaussian_data(0.0, 0.0, 0.0, 1000, 13);
        let c = consistency_check(&d, &fast()).unwrap();
        let r = &c.report;
        for t in [r.u1, r.u2, r.r, r.s, c.u2_direct] {
            assert!(t <= 0.02, "{r:?}");
        }
    }
}
