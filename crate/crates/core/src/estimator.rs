//! Unique-information estimation by minimizing an importance-weighted upper
//! bound over a learned conditional copula and an inference distribution.
//!
//! The learned trivariate copula is
//! `c_θ(u_y,u_1,u_2) = c_y1(u_y,u_1) c_y2(u_y,u_2) c_G(u_{1|y}, u_{2|y}; θ(u_y))`
//! with `u_{i|y} = F(u_i | u_y)` and `c_G` a Gaussian copula. The bound is
//! `B1 + B2` with
//!
//! * `B1 = E log[c_y1(u_y,u_1) c_G(u_{1|y}, u_{2|y}; θ(u_y))]`,
//! * `B2 = -E log (1/A) Σ_a c_θ(û_a,u_1,u_2) / r_φ(û_a | u_1,u_2)`,
//!
//! expectations taken over samples of `c_θ`. All quantities are in nats.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::copula::{gaussian, select, CopulaModel};
use crate::diff::{Real, Tape, Var};
use crate::error::{Error, Result};
use crate::nets::{
    inference_outputs, r_log_density, r_sample, theta_eval, theta_eval_grad, InferenceNet, ThetaNet, INF_PARAMS,
    THETA_PARAMS,
};
use crate::numerics::{clamp_unit, RngStream};
use crate::pseudoobs::PseudoDataset;

/// Minimum number of observations accepted by the estimator.
pub const MIN_SAMPLES: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    /// Inner importance samples per outer sample (A).
    pub inner_samples: usize,
    /// Outer samples per iteration (M).
    pub batch_size: usize,
    pub iterations: usize,
    pub learning_rate: f64,
    /// The estimate is the mean bound over this many final iterations.
    pub window: usize,
    pub seed: u64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            inner_samples: 50,
            batch_size: 128,
            iterations: 1200,
            learning_rate: 1e-2,
            window: 100,
            seed: 0,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.inner_samples < 1 {
            return bad("inner sample count A must be at least 1");
        }
        if self.batch_size < 1 {
            return bad("batch size M must be at least 1");
        }
        if self.window < 1 || self.window > self.iterations {
            return bad("averaging window must satisfy 1 <= W <= iterations");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(0.0..1.0).contains(&self.adam_beta1)
            || !(0.0..1.0).contains(&self.adam_beta2)
            || !(self.adam_eps > 0.0)
        {
            return bad("ADAM constants out of range");
        }
        Ok(())
    }
}

/// The two pair copulas the bound is conditioned on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedPair {
    pub c_y1: CopulaModel,
    pub c_y2: CopulaModel,
}

impl FittedPair {
    /// AIC-selected copulas of (u_y, u_1) and (u_y, u_2).
    pub fn fit(p: &PseudoDataset) -> Result<Self> {
        if p.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: MIN_SAMPLES,
                got: p.len(),
            });
        }
        Ok(FittedPair {
            c_y1: select(&p.uy, &p.u1)?,
            c_y2: select(&p.uy, &p.u2)?,
        })
    }

    pub fn independence() -> Self {
        FittedPair {
            c_y1: CopulaModel::independence(),
            c_y2: CopulaModel::independence(),
        }
    }

    /// Exchange the roles of the two sources.
    pub fn swapped(&self) -> Self {
        FittedPair {
            c_y1: self.c_y2,
            c_y2: self.c_y1,
        }
    }
}

/// One draw `(u_1, u_y, u_2)` from the learned trivariate copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CopulaSample {
    pub u1: f64,
    pub uy: f64,
    pub u2: f64,
}

/// Rosenblatt transform of uniforms `v = (v_1, v_y, v_2)`. Only `u_2`
/// depends on θ, so only it is returned in the differentiable type.
pub fn rosenblatt<R: Real>(pair: &FittedPair, theta: &[R], v: [f64; 3]) -> (f64, f64, R) {
    let u1 = clamp_unit(v[0]);
    let uy = pair.c_y1.h_inv(v[1], u1);
    let u1_y = pair.c_y1.h(u1, uy);
    let c = theta[0];
    let th = theta_eval(theta, c.lift(uy));
    let w = gaussian::h_inv(c.lift(v[2]), c.lift(u1_y), th);
    let u2 = pair.c_y2.h_inv(w, c.lift(uy));
    (u1, uy, u2)
}

pub fn rosenblatt_sample(pair: &FittedPair, net: &ThetaNet, v: [f64; 3]) -> CopulaSample {
    let (u1, uy, u2) = rosenblatt(pair, &net.params, v);
    CopulaSample { u1, uy, u2 }
}

/// log c_θ(u_y, u_1, u_2)
#[inline]
pub fn log_c_theta<R: Real>(pair: &FittedPair, theta: &[R], uy: R, u1: R, u2: R) -> R {
    log_c_at(pair, theta_eval(theta, uy), uy, u1, u2)
}

// log c_θ with the conditional parameter θ(u_y) = t supplied
#[inline]
fn log_c_at<R: Real>(pair: &FittedPair, t: R, uy: R, u1: R, u2: R) -> R {
    let u1_y = pair.c_y1.h(u1, uy);
    let u2_y = pair.c_y2.h(u2, uy);
    pair.c_y1.log_density(uy, u1) + pair.c_y2.log_density(uy, u2) + gaussian::log_density(u1_y, u2_y, t)
}

/// Per-sample integrand of B1.
#[inline]
pub fn b1_term<R: Real>(pair: &FittedPair, theta: &[R], uy: R, u1: R, u2: R) -> R {
    let u1_y = pair.c_y1.h(u1, uy);
    let u2_y = pair.c_y2.h(u2, uy);
    pair.c_y1.log_density(uy, u1) + gaussian::log_density(u1_y, u2_y, theta_eval(theta, uy))
}

/// log importance weights `log c_θ(û_a,u_1,u_2) - log r_φ(û_a|u_1,u_2)` for
/// inner draws `û_a = R_φ⁻¹(ε_a)`.
pub fn log_weights<R: Real>(
    pair: &FittedPair,
    theta: &[R],
    phi: &[R],
    u1: R,
    u2: R,
    eps: &[f64],
) -> Vec<R> {
    let (a, b) = inference_outputs(phi, u1, u2);
    eps.iter()
        .map(|&e| {
            let uy = r_sample(a, b, e);
            log_c_theta(pair, theta, uy, u1, u2) - r_log_density(a, b, uy)
        })
        .collect()
}

/// ln((1/n) Σ exp(xᵢ)), shifted by the largest value.
pub fn log_mean_exp<R: Real>(xs: &[R]) -> R {
    let m = xs.iter().map(|x| x.value()).fold(f64::NEG_INFINITY, f64::max);
    let mut s = xs[0].lift(0.0);
    for &x in xs {
        s = s + (x - m).exp();
    }
    s.ln() + (m - (xs.len() as f64).ln())
}

/// Monte Carlo B1 over given samples.
pub fn bound_b1(pair: &FittedPair, net: &ThetaNet, samples: &[CopulaSample]) -> f64 {
    let s: f64 = samples
        .iter()
        .map(|s| b1_term(pair, &net.params, s.uy, s.u1, s.u2))
        .sum();
    s / samples.len() as f64
}

/// Monte Carlo B2 over given samples with `a` inner draws each from `rng`.
pub fn bound_b2(
    pair: &FittedPair,
    net: &ThetaNet,
    inf: &InferenceNet,
    samples: &[CopulaSample],
    a: usize,
    rng: &mut RngStream,
) -> f64 {
    let mut eps = vec![0.0; a];
    let s: f64 = samples
        .iter()
        .map(|s| {
            eps.iter_mut().for_each(|e| *e = rng.uniform());
            log_mean_exp(&log_weights(pair, &net.params, &inf.params, s.u1, s.u2, &eps))
        })
        .sum();
    -s / samples.len() as f64
}

/// Uniform draws for one iteration: `M` Rosenblatt triples and `M × A` inner ε.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub v: Vec<[f64; 3]>,
    pub eps: Vec<f64>,
    pub inner: usize,
}

impl Batch {
    /// Triples first, then all ε, drawn in order from `rng`.
    pub fn draw(rng: &mut RngStream, m: usize, a: usize) -> Self {
        let v = (0..m)
            .map(|_| [rng.uniform(), rng.uniform(), rng.uniform()])
            .collect();
        let eps = (0..m * a).map(|_| rng.uniform()).collect();
        Batch { v, eps, inner: a }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    fn eps(&self, m: usize) -> &[f64] {
        &self.eps[m * self.inner..(m + 1) * self.inner]
    }
}

/// Which estimator to use for the inference-network gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiGradient {
    /// Doubly reparametrized: squared normalized weights, path through û only.
    Dreg,
    /// Plain reparametrized gradient of the Monte Carlo objective.
    Naive,
}

/// Bound value and gradients for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchGradients {
    pub bound: f64,
    pub b1: f64,
    pub b2: f64,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
}

/// B1 + B2 on a batch, evaluated in plain arithmetic.
pub fn objective_value(pair: &FittedPair, theta: &[f64], phi: &[f64], batch: &Batch) -> f64 {
    let mut b1 = 0.0;
    let mut d = 0.0;
    for (m, v) in batch.v.iter().enumerate() {
        let (u1, uy, u2) = rosenblatt(pair, theta, *v);
        b1 += b1_term(pair, theta, uy, u1, u2);
        d += log_mean_exp(&log_weights(pair, theta, phi, u1, u2, batch.eps(m)));
    }
    (b1 - d) / batch.len() as f64
}

/// Tapes reused across calls to [`batch_gradients`].
#[derive(Default)]
pub struct Workspace {
    outer: Tape,
    inner: Tape,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

// D = log (1/A) Σ_a w_a for one outer sample, with its partials w.r.t. the
// θ-net parameters and the upstream scalars a, b, u_2, plus the DReG path
// derivatives Σ_a w̃_a² ∂log w_a/∂û_a · ∂û_a/∂(a, b).
struct InnerBlock {
    d: f64,
    d_theta: Vec<f64>,
    d_a: f64,
    d_b: f64,
    d_u2: f64,
    path_a: f64,
    path_b: f64,
}

fn inner_block(
    pair: &FittedPair,
    theta: &[f64],
    u1: f64,
    (a, b, u2): (f64, f64, f64),
    eps: &[f64],
    dreg: bool,
    tape: &mut Tape,
) -> InnerBlock {
    tape.clear();
    let tape = &*tape;
    let (av, bv, u2v) = (tape.var(a), tape.var(b), tape.var(u2));
    let u1v = tape.constant(u1);
    let (ad, bd) = (av.detach(), bv.detach());
    let mut lws = Vec::with_capacity(eps.len());
    let mut surrogate = Vec::with_capacity(if dreg { eps.len() } else { 0 });
    // θ(û) enters as one node per draw; its parameter gradients are kept aside
    let mut thetas = Vec::with_capacity(eps.len());
    let mut theta_grads = vec![0.0; eps.len() * THETA_PARAMS];
    for (&e, grad) in eps.iter().zip(theta_grads.chunks_exact_mut(THETA_PARAMS)) {
        let u_hat = r_sample(av, bv, e);
        let (t, dt) = theta_eval_grad(theta, u_hat.value(), grad);
        let t = u_hat.custom1(t, dt);
        thetas.push(t);
        let lc = log_c_at(pair, t, u_hat, u1v, u2v);
        lws.push(lc - r_log_density(av, bv, u_hat));
        if dreg {
            // same weight with the density parameters held fixed
            surrogate.push(lc - r_log_density(ad, bd, u_hat));
        }
    }
    let d = log_mean_exp(&lws);
    let adj = tape.backward(d);
    let (mut path_a, mut path_b) = (0.0, 0.0);
    if dreg {
        let mx = lws.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = lws.iter().map(|l| (l.value() - mx).exp()).sum();
        let seeds: Vec<_> = lws
            .iter()
            .zip(&surrogate)
            .map(|(l, &s)| (s, ((l.value() - mx).exp() / z).powi(2)))
            .collect();
        let path = tape.backward_seeded(&seeds);
        path_a = path.wrt(av);
        path_b = path.wrt(bv);
    }
    let mut d_theta = vec![0.0; THETA_PARAMS];
    for (t, grad) in thetas.iter().zip(theta_grads.chunks_exact(THETA_PARAMS)) {
        let g = adj.wrt(*t);
        for (acc, x) in d_theta.iter_mut().zip(grad) {
            *acc += g * x;
        }
    }
    InnerBlock {
        d: d.value(),
        d_theta,
        d_a: adj.wrt(av),
        d_b: adj.wrt(bv),
        d_u2: adj.wrt(u2v),
        path_a,
        path_b,
    }
}

/// Bound value on one batch with the θ-gradient (total pathwise derivative of
/// B1 + B2) and the φ-gradient of B2.
///
/// Each outer sample's inner importance block is differentiated on its own
/// small tape and enters the outer tape as a single node.
pub fn batch_gradients(
    pair: &FittedPair,
    theta: &[f64],
    phi: &[f64],
    batch: &Batch,
    mode: PhiGradient,
    ws: &mut Workspace,
) -> BatchGradients {
    let dreg = mode == PhiGradient::Dreg;
    ws.outer.clear();
    let tape = &ws.outer;
    let th = tape.vars(theta);
    let ph = tape.vars(phi);
    let m_total = batch.len() as f64;

    let mut theta_inner = vec![0.0; theta.len()];
    let mut b1_sum = tape.constant(0.0);
    let mut d_sum = tape.constant(0.0);
    let mut path_seeds: Vec<(Var<'_>, f64)> = Vec::new();

    for (m, v) in batch.v.iter().enumerate() {
        let (u1, uy, u2) = rosenblatt(pair, &th, *v);
        let (u1v, uyv) = (tape.constant(u1), tape.constant(uy));
        b1_sum = b1_sum + b1_term(pair, &th, uyv, u1v, u2);

        let (a, b) = inference_outputs(&ph, u1v, u2);
        let blk = inner_block(
            pair,
            theta,
            u1,
            (a.value(), b.value(), u2.value()),
            batch.eps(m),
            dreg,
            &mut ws.inner,
        );
        for (g, x) in theta_inner.iter_mut().zip(&blk.d_theta) {
            *g -= x / m_total;
        }
        let d_ab = a.custom2(b, blk.d, blk.d_a, blk.d_b);
        d_sum = d_sum + d_ab.custom2(u2, blk.d, 1.0, blk.d_u2);
        if dreg {
            path_seeds.push((a, -blk.path_a / m_total));
            path_seeds.push((b, -blk.path_b / m_total));
        }
    }

    let objective = (b1_sum - d_sum) / m_total;
    let adj = tape.backward(objective);
    let theta_grad = adj.wrt_all(&th).iter().zip(&theta_inner).map(|(x, y)| x + y).collect();
    let phi_grad = match mode {
        PhiGradient::Naive => adj.wrt_all(&ph),
        PhiGradient::Dreg => tape.backward_seeded(&path_seeds).wrt_all(&ph),
    };
    BatchGradients {
        bound: objective.value(),
        b1: b1_sum.value() / m_total,
        b2: -d_sum.value() / m_total,
        theta: theta_grad,
        phi: phi_grad,
    }
}

/// DReG estimate of ∇_φ B2 on one batch.
pub fn dreg_phi_gradient(pair: &FittedPair, net: &ThetaNet, inf: &InferenceNet, batch: &Batch) -> Vec<f64> {
    batch_gradients(pair, &net.params, &inf.params, batch, PhiGradient::Dreg, &mut Workspace::new()).phi
}

/// ADAM with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Adam {
            beta1,
            beta2,
            eps,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// Per-iteration bound values and their two components, in nats.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub bounds: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
}

impl TrainingTrace {
    /// Mean of the last `w` bound values.
    pub fn window_mean(&self, w: usize) -> f64 {
        let w = w.min(self.bounds.len()).max(1);
        let tail = &self.bounds[self.bounds.len() - w..];
        tail.iter().sum::<f64>() / w as f64
    }
}

/// Result of one training run; also the checkpoint format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniqueFit {
    /// max(window mean, 0), nats.
    pub estimate: f64,
    /// Window mean before clamping at zero.
    pub raw_estimate: f64,
    pub config: EstimatorConfig,
    pub pair: FittedPair,
    pub theta_net: ThetaNet,
    pub inference_net: InferenceNet,
    pub trace: TrainingTrace,
    pub seconds: f64,
}

impl UniqueFit {
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Fit the pair copulas on `pseudo` and minimize the bound on U(Y : X1 \ X2).
pub fn train_unique(pseudo: &PseudoDataset, config: &EstimatorConfig) -> Result<UniqueFit> {
    config.validate()?;
    let pair = FittedPair::fit(pseudo)?;
    train_with_pair(&pair, config)
}

/// Minimize the bound for given pair copulas.
pub fn train_with_pair(pair: &FittedPair, config: &EstimatorConfig) -> Result<UniqueFit> {
    config.validate()?;
    let start = Instant::now();
    let mut rng = RngStream::new(config.seed);
    let mut theta_net = ThetaNet::init(&mut rng);
    let mut inference_net = InferenceNet::init(&mut rng);
    let mut adam_t = Adam::new(THETA_PARAMS, config.adam_beta1, config.adam_beta2, config.adam_eps);
    let mut adam_p = Adam::new(INF_PARAMS, config.adam_beta1, config.adam_beta2, config.adam_eps);
    let mut trace = TrainingTrace::default();
    let mut ws = Workspace::new();

    for it in 0..config.iterations {
        let batch = Batch::draw(&mut rng, config.batch_size, config.inner_samples);
        let g = batch_gradients(
            pair,
            &theta_net.params,
            &inference_net.params,
            &batch,
            PhiGradient::Dreg,
            &mut ws,
        );
        let finite = g.bound.is_finite()
            && g.theta.iter().chain(&g.phi).all(|x| x.is_finite());
        if !finite {
            let from = trace.bounds.len().saturating_sub(10);
            let mut recent = trace.bounds[from..].to_vec();
            recent.push(g.bound);
            return Err(Error::NonFiniteBound {
                iteration: it,
                recent,
            });
        }
        trace.bounds.push(g.bound);
        trace.b1.push(g.b1);
        trace.b2.push(g.b2);
        adam_t.step(&mut theta_net.params, &g.theta, config.learning_rate);
        adam_p.step(&mut inference_net.params, &g.phi, config.learning_rate);
    }

    let raw_estimate = trace.window_mean(config.window);
    Ok(UniqueFit {
        estimate: raw_estimate.max(0.0),
        raw_estimate,
        config: *config,
        pair: *pair,
        theta_net,
        inference_net,
        trace,
        seconds: start.elapsed().as_secs_f64(),
    })
}
