//! The conditional-copula parameter map θ(u_y) and the inference
//! distribution r_φ(u_y | u_1, u_2).
//!
//! Both networks store their parameters as one flat vector so the optimizer
//! and the gradient tape can treat them uniformly. Evaluation is generic over
//! [`Real`]: pass `&[f64]` for plain values or tape variables for gradients.

use serde::{Deserialize, Serialize};

use crate::diff::Real;
use crate::error::{Error, Result};
use crate::numerics::{softplus_inv, RngStream};

pub const THETA_HIDDEN: usize = 16;
pub const THETA_PARAMS: usize = 3 * THETA_HIDDEN + 1;
pub const INF_HIDDEN: usize = 16;
pub const INF_PARAMS: usize = 2 * INF_HIDDEN + INF_HIDDEN + INF_HIDDEN * INF_HIDDEN + INF_HIDDEN + 2 * INF_HIDDEN + 2;
/// |θ| is capped here: tanh rounds to exactly ±1 for large arguments, where
/// the Gaussian copula is singular.
pub const THETA_MAX: f64 = 1.0 - 1e-9;
/// Floor added to softplus so the slope `a` stays positive.
pub const A_FLOOR: f64 = 1e-4;
const INIT_STD: f64 = 0.1;

/// Flat parameters plus a manifest of named blocks and their shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub manifest: Vec<(String, Vec<usize>)>,
    pub params: Vec<f64>,
}

impl ParamRecord {
    fn check(&self, expected: &[(&str, &[usize])]) -> Result<()> {
        let ok = self.manifest.len() == expected.len()
            && self
                .manifest
                .iter()
                .zip(expected)
                .all(|((n, s), (en, es))| n == en && s.as_slice() == *es);
        let total: usize = expected.iter().map(|(_, s)| s.iter().product::<usize>()).sum();
        if !ok || self.params.len() != total {
            return Err(Error::Input(format!(
                "parameter manifest {:?} with {} values does not match the network layout",
                self.manifest,
                self.params.len()
            )));
        }
        if let Some(&bad) = self.params.iter().find(|p| !p.is_finite()) {
            return Err(Error::NonFinite {
                context: "network parameter",
                value: bad,
            });
        }
        Ok(())
    }

    fn build(layout: &[(&str, &[usize])], params: Vec<f64>) -> Self {
        ParamRecord {
            manifest: layout.iter().map(|(n, s)| (n.to_string(), s.to_vec())).collect(),
            params,
        }
    }
}

fn gaussian_init(rng: &mut RngStream, n: usize) -> Vec<f64> {
    (0..n).map(|_| INIT_STD * rng.normal()).collect()
}

// ---- θ-net ----

const THETA_LAYOUT: [(&str, &[usize]); 4] = [
    ("w1", &[THETA_HIDDEN]),
    ("b1", &[THETA_HIDDEN]),
    ("w2", &[THETA_HIDDEN]),
    ("b2", &[1]),
];

/// θ(u) = tanh(Σᵢ w2ᵢ tanh(w1ᵢ u + b1ᵢ) + b2), one hidden bias per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamRecord", into = "ParamRecord")]
pub struct ThetaNet {
    pub params: Vec<f64>,
}

impl ThetaNet {
    pub fn zeros() -> Self {
        ThetaNet {
            params: vec![0.0; THETA_PARAMS],
        }
    }

    /// Weights ~ N(0, 0.1²), biases 0.
    pub fn init(rng: &mut RngStream) -> Self {
        let h = THETA_HIDDEN;
        let mut p = vec![0.0; THETA_PARAMS];
        p[..h].copy_from_slice(&gaussian_init(rng, h));
        p[2 * h..3 * h].copy_from_slice(&gaussian_init(rng, h));
        ThetaNet { params: p }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        ThetaNet::try_from(ParamRecord::build(&THETA_LAYOUT, params))
    }

    pub fn eval(&self, u: f64) -> f64 {
        theta_eval(&self.params, u)
    }

    /// Σᵢ |w2ᵢ||w1ᵢ|, a Lipschitz constant of θ on the real line.
    pub fn lipschitz_bound(&self) -> f64 {
        let h = THETA_HIDDEN;
        (0..h).map(|i| (self.params[i] * self.params[2 * h + i]).abs()).sum()
    }
}

/// θ-net on an arbitrary parameter slice of length [`THETA_PARAMS`].
#[inline]
pub fn theta_eval<R: Real>(p: &[R], u: R) -> R {
    let h = THETA_HIDDEN;
    let mut acc = p[3 * h];
    for i in 0..h {
        acc = acc + p[2 * h + i] * (p[i] * u + p[h + i]).tanh();
    }
    let t = acc.tanh();
    if t.value().abs() > THETA_MAX {
        t.lift(THETA_MAX.copysign(t.value()))
    } else {
        t
    }
}

/// θ-net value and its derivative in `u`; the derivatives w.r.t. every
/// parameter are written into `grad`.
pub fn theta_eval_grad(p: &[f64], u: f64, grad: &mut [f64]) -> (f64, f64) {
    let h = THETA_HIDDEN;
    let mut hidden = [0.0; THETA_HIDDEN];
    let mut acc = p[3 * h];
    for (i, z) in hidden.iter_mut().enumerate() {
        *z = (p[i] * u + p[h + i]).tanh();
        acc += p[2 * h + i] * *z;
    }
    let t = acc.tanh();
    if t.abs() > THETA_MAX {
        grad.fill(0.0);
        return (THETA_MAX.copysign(t), 0.0);
    }
    let dt = 1.0 - t * t;
    let mut du = 0.0;
    for (i, z) in hidden.iter().enumerate() {
        let dz = dt * p[2 * h + i] * (1.0 - z * z);
        grad[i] = dz * u;
        grad[h + i] = dz;
        grad[2 * h + i] = dt * z;
        du += dz * p[i];
    }
    grad[3 * h] = dt;
    (t, du)
}

impl TryFrom<ParamRecord> for ThetaNet {
    type Error = Error;
    fn try_from(r: ParamRecord) -> Result<Self> {
        r.check(&THETA_LAYOUT)?;
        Ok(ThetaNet { params: r.params })
    }
}

impl From<ThetaNet> for ParamRecord {
    fn from(n: ThetaNet) -> Self {
        ParamRecord::build(&THETA_LAYOUT, n.params)
    }
}

// ---- inference net ----

const INF_LAYOUT: [(&str, &[usize]); 6] = [
    ("w1", &[INF_HIDDEN, 2]),
    ("b1", &[INF_HIDDEN]),
    ("w2", &[INF_HIDDEN, INF_HIDDEN]),
    ("b2", &[INF_HIDDEN]),
    ("w3", &[2, INF_HIDDEN]),
    ("b3", &[2]),
];

const O_B1: usize = 2 * INF_HIDDEN;
const O_W2: usize = O_B1 + INF_HIDDEN;
const O_B2: usize = O_W2 + INF_HIDDEN * INF_HIDDEN;
const O_W3: usize = O_B2 + INF_HIDDEN;
const O_B3: usize = O_W3 + 2 * INF_HIDDEN;

/// Two tanh hidden layers mapping the source pair to the slope `a > 0` and
/// offset `b` of R(u_y) = σ(a·logit(u_y) + b). The inputs are fed to the
/// network as logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ParamRecord", into = "ParamRecord")]
pub struct InferenceNet {
    pub params: Vec<f64>,
}

impl InferenceNet {
    /// All weights zero and output biases giving a = 1, b = 0: the uniform density.
    pub fn uniform() -> Self {
        let mut p = vec![0.0; INF_PARAMS];
        p[O_B3] = softplus_inv(1.0 - A_FLOOR);
        InferenceNet { params: p }
    }

    /// Weights ~ N(0, 0.1²); biases 0 except the slope bias, set so that a = 1.
    pub fn init(rng: &mut RngStream) -> Self {
        let mut net = InferenceNet::uniform();
        let h = INF_HIDDEN;
        let p = &mut net.params;
        p[..O_B1].copy_from_slice(&gaussian_init(rng, 2 * h));
        p[O_W2..O_B2].copy_from_slice(&gaussian_init(rng, h * h));
        p[O_W3..O_B3].copy_from_slice(&gaussian_init(rng, 2 * h));
        net
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        InferenceNet::try_from(ParamRecord::build(&INF_LAYOUT, params))
    }

    /// (a, b) at the given sources.
    pub fn outputs(&self, u1: f64, u2: f64) -> (f64, f64) {
        inference_outputs(&self.params, u1, u2)
    }

    pub fn r_cdf(&self, uy: f64, u1: f64, u2: f64) -> f64 {
        let (a, b) = self.outputs(u1, u2);
        r_cdf(a, b, uy)
    }

    pub fn r_density(&self, uy: f64, u1: f64, u2: f64) -> f64 {
        let (a, b) = self.outputs(u1, u2);
        r_log_density(a, b, uy).exp()
    }

    /// Inverse-CDF draw for a uniform `eps`.
    pub fn r_sample(&self, u1: f64, u2: f64, eps: f64) -> f64 {
        let (a, b) = self.outputs(u1, u2);
        r_sample(a, b, eps)
    }
}

/// Inference network on an arbitrary parameter slice of length [`INF_PARAMS`].
pub fn inference_outputs<R: Real>(p: &[R], u1: R, u2: R) -> (R, R) {
    let h = INF_HIDDEN;
    let (z1, z2) = (u1.logit(), u2.logit());
    let mut l1 = [z1; INF_HIDDEN];
    for (i, out) in l1.iter_mut().enumerate() {
        *out = (p[2 * i] * z1 + p[2 * i + 1] * z2 + p[O_B1 + i]).tanh();
    }
    let mut l2 = [z1; INF_HIDDEN];
    for (i, out) in l2.iter_mut().enumerate() {
        let row = &p[O_W2 + i * h..O_W2 + (i + 1) * h];
        let mut acc = p[O_B2 + i];
        for (w, x) in row.iter().zip(&l1) {
            acc = acc + *w * *x;
        }
        *out = acc.tanh();
    }
    let mut o = [p[O_B3], p[O_B3 + 1]];
    for (k, out) in o.iter_mut().enumerate() {
        let row = &p[O_W3 + k * h..O_W3 + (k + 1) * h];
        for (w, x) in row.iter().zip(&l2) {
            *out = *out + *w * *x;
        }
    }
    (o[0].softplus() + A_FLOOR, o[1])
}

/// R(u) = σ(a·logit(u) + b)
#[inline]
pub fn r_cdf<R: Real>(a: R, b: R, u: R) -> R {
    (a * u.logit() + b).sigmoid()
}

/// log r(u) = log R + log(1 - R) + log a - log u - log(1 - u)
#[inline]
pub fn r_log_density<R: Real>(a: R, b: R, u: R) -> R {
    let u = u.clamp_unit();
    let t = a * u.logit() + b;
    t.log_sigmoid() + (-t).log_sigmoid() + a.ln() - u.ln() - u.rsub(1.0).ln()
}

/// u = σ((logit ε - b)/a)
#[inline]
pub fn r_sample<R: Real>(a: R, b: R, eps: f64) -> R {
    let z = crate::numerics::logit(eps);
    ((b.rsub(z)) / a).sigmoid().clamp_unit()
}

impl TryFrom<ParamRecord> for InferenceNet {
    type Error = Error;
    fn try_from(r: ParamRecord) -> Result<Self> {
        r.check(&INF_LAYOUT)?;
        Ok(InferenceNet { params: r.params })
    }
}

impl From<InferenceNet> for ParamRecord {
    fn from(n: InferenceNet) -> Self {
        ParamRecord::build(&INF_LAYOUT, n.params)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::Tape;
    use crate::numerics::integrate_adaptive;
    use crate::stats::{ks_against, ks_critical};
    use proptest::prelude::*;

    fn random_inference(seed: u64, scale: f64) -> InferenceNet {
        let mut rng = RngStream::new(seed);
        let mut n = InferenceNet::init(&mut rng);
        for p in n.params.iter_mut() {
            *p += scale * rng.normal();
        }
        n
    }

    #[test]
    fn parameter_counts() {
        assert_eq!(THETA_PARAMS, 49);
        assert_eq!(INF_PARAMS, 354);
        assert_eq!(O_B3 + 2, INF_PARAMS);
    }

    #[test]
    fn zero_theta_net_gives_independence() {
        let n = ThetaNet::zeros();
        for u in [0.01, 0.5, 0.99] {
            assert_eq!(n.eval(u), 0.0);
        }
    }

    #[test]
    fn theta_output_stays_in_open_interval() {
        let mut rng = RngStream::new(1);
        for _ in 0..10_000 {
            let mut n = ThetaNet::zeros();
            for p in n.params.iter_mut() {
                *p = 3.0 * rng.normal();
            }
            let t = n.eval(rng.uniform());
            assert!(t.abs() < 1.0);
        }
    }

    #[test]
    fn w2_gradient_at_zero_init_is_tanh_b1() {
        let mut rng = RngStream::new(2);
        let mut p = vec![0.0; THETA_PARAMS];
        for i in 0..THETA_HIDDEN {
            p[THETA_HIDDEN + i] = rng.normal();
        }
        let u = 0.3;
        let tape = Tape::new();
        let vars = tape.vars(&p);
        let g = tape.backward(theta_eval(&vars, tape.constant(u)));
        for i in 0..THETA_HIDDEN {
            let k = 2 * THETA_HIDDEN + i;
            let mut hi = p.clone();
            let mut lo = p.clone();
            hi[k] += 1e-6;
            lo[k] -= 1e-6;
            let fd = (theta_eval(&hi, u) - theta_eval(&lo, u)) / 2e-6;
            let want = p[THETA_HIDDEN + i].tanh();
            assert!((g.wrt(vars[k]) - want).abs() < 1e-12);
            assert!((fd - want).abs() < 1e-6);
        }
    }

    #[test]
    fn closed_form_theta_gradient_matches_tape() {
        let mut rng = RngStream::new(5);
        for scale in [0.1, 0.5, 2.0] {
            let mut p = ThetaNet::init(&mut rng).params;
            p.iter_mut().for_each(|x| *x += scale * rng.normal());
            let u = rng.uniform();
            let mut grad = vec![0.0; THETA_PARAMS];
            let (t, du) = theta_eval_grad(&p, u, &mut grad);
            let tape = Tape::new();
            let (pv, uv) = (tape.vars(&p), tape.var(u));
            let out = theta_eval(&pv, uv);
            let adj = tape.backward(out);
            assert!((t - out.value()).abs() < 1e-15);
            assert!((du - adj.wrt(uv)).abs() < 1e-12);
            for (g, v) in grad.iter().zip(&pv) {
                assert!((g - adj.wrt(*v)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn theta_is_lipschitz_with_weight_bound() {
        let mut rng = RngStream::new(4);
        for _ in 0..200 {
            let mut n = ThetaNet::init(&mut rng);
            for p in n.params.iter_mut() {
                *p += rng.normal();
            }
            let l = n.lipschitz_bound();
            for _ in 0..20 {
                let (a, b) = (rng.uniform(), rng.uniform());
                assert!((n.eval(a) - n.eval(b)).abs() <= l * (a - b).abs() + 1e-15);
            }
        }
    }

    #[test]
    fn uniform_inference_is_identity() {
        let n = InferenceNet::uniform();
        let (a, b) = n.outputs(0.3, 0.8);
        assert!((a - 1.0).abs() < 1e-12 && b == 0.0);
        for u in [0.01, 0.25, 0.5, 0.9] {
            assert!((r_cdf(1.0, 0.0, u) - u).abs() < 1e-15);
            assert!((r_log_density(1.0, 0.0, u)).abs() < 1e-12);
            assert!((r_sample(1.0, 0.0, u) - u).abs() < 1e-15);
            assert!((n.r_sample(0.2, 0.4, u) - u).abs() < 1e-11);
        }
    }

    #[test]
    fn density_normalizes_and_matches_cdf_slope() {
        for seed in 0..10 {
            let n = random_inference(seed, 0.5);
            let (u1, u2) = (0.2 + 0.06 * seed as f64, 0.7);
            let mass = integrate_adaptive(&mut |u| n.r_density(u, u1, u2), 0.0, 1.0, 1e-10);
            assert!((mass - 1.0).abs() < 1e-4, "seed {seed}: {mass}");
            for u in [0.05, 0.3, 0.6, 0.95] {
                let s = 1e-6;
                let fd = (n.r_cdf(u + s, u1, u2) - n.r_cdf(u - s, u1, u2)) / (2.0 * s);
                let d = n.r_density(u, u1, u2);
                assert!(((fd - d) / d).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn samples_follow_cdf() {
        let n = random_inference(7, 0.5);
        let (u1, u2) = (0.35, 0.8);
        let mut rng = RngStream::new(70);
        let xs: Vec<f64> = (0..100_000).map(|_| n.r_sample(u1, u2, rng.uniform())).collect();
        let ks = ks_against(&xs, |u| n.r_cdf(u, u1, u2));
        assert!(ks < ks_critical(xs.len(), 0.01), "{ks}");
    }

    #[test]
    fn slope_is_always_positive() {
        let mut n = InferenceNet::uniform();
        n.params[O_B3] = -800.0;
        assert!(n.outputs(0.5, 0.5).0 >= A_FLOOR);
    }

    #[test]
    fn serialization_round_trip() {
        let n = random_inference(3, 0.1);
        let s = serde_json::to_string(&n).unwrap();
        assert!(s.contains("\"manifest\""));
        let back: InferenceNet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, n);
        let t = ThetaNet::init(&mut RngStream::new(5));
        let back: ThetaNet = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        let wrong = r#"{"manifest":[["w1",[16]]],"params":[0.0]}"#;
        assert!(serde_json::from_str::<ThetaNet>(wrong).is_err());
        assert!(ThetaNet::from_params(vec![0.0; 48]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sample_inverts_cdf(seed in 0u64..500, eps in 0.001f64..0.999, u1 in 0.01f64..0.99, u2 in 0.01f64..0.99) {
            let n = random_inference(seed, 0.3);
            let u = n.r_sample(u1, u2, eps);
            prop_assert!((n.r_cdf(u, u1, u2) - eps).abs() < 1e-10);
        }

        #[test]
        fn cdf_is_increasing(seed in 0u64..500, u in 0.01f64..0.98, u1 in 0.01f64..0.99, u2 in 0.01f64..0.99) {
            let n = random_inference(seed, 1.0);
            prop_assert!(n.r_cdf(u + 0.01, u1, u2) > n.r_cdf(u, u1, u2));
        }
    }
}
