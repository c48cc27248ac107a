//! Synthetic data: Gaussian triples, the two three-neuron models, and a
//! chaotic rate network driven by a Rössler oscillator, together with the
//! pairwise transfer-entropy decomposition of its time series.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::numerics::{derive_seed, RngStream};
use crate::pid::{decompose, mi_joint, mi_pair};
use crate::pseudoobs::{pseudo_observations, Dataset};

// ---- Gaussian triples ----

/// Correlations of a standard trivariate Gaussian (Y, X1, X2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianTriple {
    pub rho_y1: f64,
    pub rho_y2: f64,
    pub rho_12: f64,
}

impl GaussianTriple {
    pub fn new(rho_y1: f64, rho_y2: f64, rho_12: f64) -> Result<Self> {
        let t = GaussianTriple { rho_y1, rho_y2, rho_12 };
        t.cholesky()?;
        Ok(t)
    }

    /// X1 and X2 conditionally independent given Y: ρ12 = ρ_y1 ρ_y2.
    pub fn conditionally_independent(rho_y1: f64, rho_y2: f64) -> Result<Self> {
        Self::new(rho_y1, rho_y2, rho_y1 * rho_y2)
    }

    /// Rows and columns ordered (Y, X1, X2).
    pub fn correlation_matrix(&self) -> [[f64; 3]; 3] {
        [
            [1.0, self.rho_y1, self.rho_y2],
            [self.rho_y1, 1.0, self.rho_12],
            [self.rho_y2, self.rho_12, 1.0],
        ]
    }

    /// Lower Cholesky factor of the correlation matrix.
    pub fn cholesky(&self) -> Result<[[f64; 3]; 3]> {
        if [self.rho_y1, self.rho_y2, self.rho_12].iter().any(|r| !(r.abs() < 1.0)) {
            return Err(Error::NotPositiveDefinite);
        }
        cholesky3(&self.correlation_matrix())
    }
}

pub fn cholesky3(m: &[[f64; 3]; 3]) -> Result<[[f64; 3]; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[i][i] - s;
                if !(d > 1e-12) {
                    return Err(Error::NotPositiveDefinite);
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

pub fn gen_gaussian_triple(spec: &GaussianTriple, samples: usize, seed: u64) -> Result<Dataset> {
    let l = spec.cholesky()?;
    let mut rng = RngStream::new(seed);
    let mut cols = [
        Vec::with_capacity(samples),
        Vec::with_capacity(samples),
        Vec::with_capacity(samples),
    ];
    for _ in 0..samples {
        let z = [rng.normal(), rng.normal(), rng.normal()];
        for (i, col) in cols.iter_mut().enumerate() {
            col.push((0..=i).map(|k| l[i][k] * z[k]).sum());
        }
    }
    let [y, x1, x2] = cols;
    Dataset::new(y, x1, x2)
}

// ---- three-neuron models ----

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Y = tanh(w1 X1 + w2 X2)
    M1,
    /// Y = X1² / (0.1 + w1 X1² + w2 X2²)
    M2,
}

impl ModelKind {
    pub fn output(self, w1: f64, w2: f64, x1: f64, x2: f64) -> f64 {
        match self {
            ModelKind::M1 => (w1 * x1 + w2 * x2).tanh(),
            ModelKind::M2 => x1 * x1 / (0.1 + w1 * x1 * x1 + w2 * x2 * x2),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::M1 => "m1",
            ModelKind::M2 => "m2",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(ModelKind::M1),
            "m2" => Ok(ModelKind::M2),
            other => Err(Error::Input(format!("unknown model '{other}' (expected m1 or m2)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub w1: f64,
    pub w2: f64,
    pub rho12: f64,
    pub samples: usize,
    pub seed: u64,
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho12.abs() < 1.0) {
            return Err(Error::InvalidConfig(format!("|rho12| must be below 1, got {}", self.rho12)));
        }
        if self.samples < crate::estimator::MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                needed: crate::estimator::MIN_SAMPLES,
                got: self.samples,
            });
        }
        if !(self.w1.is_finite() && self.w2.is_finite()) {
            return Err(Error::InvalidConfig("weights must be finite".into()));
        }
        Ok(())
    }
}

pub fn gen_model(spec: &ModelSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed);
    let c = (1.0 - spec.rho12 * spec.rho12).sqrt();
    let (mut y, mut x1, mut x2) = (vec![], vec![], vec![]);
    for _ in 0..spec.samples {
        let a = rng.normal();
        let b = spec.rho12 * a + c * rng.normal();
        y.push(spec.kind.output(spec.w1, spec.w2, a, b));
        x1.push(a);
        x2.push(b);
    }
    Dataset::new(y, x1, x2)
}

// ---- chaotic rate network ----

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkSpec {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Size of the downstream population; the first three are recorded.
    pub n_y: usize,
    pub lambda: f64,
    /// Recurrent weights are N(0, (g/√n_y)²).
    pub g: f64,
    /// Every entry of the feed-forward matrix J_YX.
    pub j_yx: f64,
    pub dt: f64,
    pub t_burn: f64,
    /// Number of recorded points.
    pub n_record: usize,
    /// Integration steps between recorded points.
    pub stride: usize,
    pub seed: u64,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec {
            alpha: 0.2,
            beta: 0.2,
            gamma: 5.7,
            n_y: 100,
            lambda: 1.0,
            g: 4.0,
            j_yx: 0.1,
            dt: 0.02,
            t_burn: 500.0,
            n_record: 6000,
            stride: 5,
            seed: 0,
        }
    }
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.n_y < 3 {
            return bad("the downstream population needs at least three neurons");
        }
        if !(self.dt > 0.0 && self.dt <= 0.05) {
            return bad("dt must lie in (0, 0.05]");
        }
        if self.stride < 1 || self.n_record < 2 {
            return bad("stride and record length must be positive");
        }
        if !(self.t_burn >= 0.0 && self.lambda >= 0.0 && self.g >= 0.0) {
            return bad("t_burn, lambda and g must be non-negative");
        }
        Ok(())
    }
}

/// Rössler vector field.
pub fn rossler(x: [f64; 3], alpha: f64, beta: f64, gamma: f64) -> [f64; 3] {
    [-x[1] - x[2], x[0] + alpha * x[1], beta + x[2] * (x[0] - gamma)]
}

/// One classical Runge–Kutta step of `dx/dt = f(x)` in place.
pub fn rk4_step(x: &mut [f64], dt: f64, f: &mut impl FnMut(&[f64], &mut [f64])) {
    let n = x.len();
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut tmp = vec![0.0; n];
    f(x, &mut k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * dt * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = x[i] + dt * k3[i];
    }
    f(&tmp, &mut k4);
    for i in 0..n {
        x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

/// Rössler trajectory from `x0` sampled every step.
pub fn rossler_trajectory(x0: [f64; 3], alpha: f64, beta: f64, gamma: f64, dt: f64, steps: usize) -> Vec<[f64; 3]> {
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0);
    let mut f = |s: &[f64], d: &mut [f64]| d.copy_from_slice(&rossler([s[0], s[1], s[2]], alpha, beta, gamma));
    for _ in 0..steps {
        rk4_step(&mut x, dt, &mut f);
        out.push([x[0], x[1], x[2]]);
    }
    out
}

/// Named, equally long channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub names: Vec<String>,
    pub channels: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.channels.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Reversed in time.
    pub fn reversed(&self) -> TimeSeries {
        TimeSeries {
            names: self.names.clone(),
            channels: self.channels.iter().map(|c| c.iter().rev().copied().collect()).collect(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.names)?;
        for t in 0..self.len() {
            w.write_record(self.channels.iter().map(|c| format!("{:?}", c[t])))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<TimeSeries> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut channels = vec![Vec::new(); names.len()];
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            for (c, field) in channels.iter_mut().zip(rec.iter()) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Input(format!("line {}: cannot parse '{field}' as a number", line + 2)))?;
                c.push(v);
            }
        }
        Ok(TimeSeries { names, channels })
    }
}

fn standardize(x: &mut [f64]) {
    let m = crate::stats::mean(x);
    let s = crate::stats::std_dev(x);
    for v in x.iter_mut() {
        *v = if s > 0.0 { (*v - m) / s } else { *v - m };
    }
}

/// Channels whose recorded range is below this are stored as exact zeros;
/// an undriven neuron decays to the underflow range otherwise.
pub const SIGNAL_FLOOR: f64 = 1e-12;

/// Simulates the network and returns X1..X3, Y1..Y3, each standardized,
/// after discarding the burn-in.
pub fn simulate_network(spec: &NetworkSpec) -> Result<TimeSeries> {
    let raw = simulate_network_raw(spec)?;
    let mut out = raw;
    for c in out.channels.iter_mut() {
        let (lo, hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        if hi - lo < SIGNAL_FLOOR {
            c.iter_mut().for_each(|v| *v = 0.0);
        } else {
            standardize(c);
        }
    }
    Ok(out)
}

/// As [`simulate_network`] without standardization.
pub fn simulate_network_raw(spec: &NetworkSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let n = spec.n_y;
    let mut rng = RngStream::new(spec.seed);
    let sd = spec.g / (n as f64).sqrt();
    let j_yy: Vec<f64> = (0..n * n).map(|_| sd * rng.normal()).collect();
    let mut state = vec![0.0; 3 + n];
    for (i, s) in state.iter_mut().enumerate() {
        *s = if i < 3 { 1.0 + 0.1 * rng.normal() } else { rng.normal() };
    }
    let mut drive = vec![0.0; n];
    let mut f = |s: &[f64], d: &mut [f64]| {
        let (x, y) = s.split_at(3);
        d[..3].copy_from_slice(&rossler([x[0], x[1], x[2]], spec.alpha, spec.beta, spec.gamma));
        let ff = spec.j_yx * (x[0] + x[1] + x[2]);
        for (i, dr) in drive.iter_mut().enumerate() {
            let row = &j_yy[i * n..(i + 1) * n];
            *dr = ff + row.iter().zip(y).map(|(w, v)| w * v).sum::<f64>();
        }
        for i in 0..n {
            d[3 + i] = -spec.lambda * y[i] + 10.0 * drive[i].tanh();
        }
    };

    let burn_steps = (spec.t_burn / spec.dt).round() as usize;
    let mut t = 0.0;
    let mut step = |state: &mut Vec<f64>, t: &mut f64| -> Result<()> {
        rk4_step(state, spec.dt, &mut f);
        *t += spec.dt;
        if state.iter().any(|v| !(v.abs() <= 1e6)) {
            return Err(Error::BlowUp { time: *t });
        }
        Ok(())
    };
    for _ in 0..burn_steps {
        step(&mut state, &mut t)?;
    }
    let mut channels: Vec<Vec<f64>> = (0..6).map(|_| Vec::with_capacity(spec.n_record)).collect();
    for _ in 0..spec.n_record {
        for _ in 0..spec.stride {
            step(&mut state, &mut t)?;
        }
        for (c, ch) in channels.iter_mut().enumerate() {
            ch.push(state[c]);
        }
    }
    let names = ["X1", "X2", "X3", "Y1", "Y2", "Y3"].map(String::from).to_vec();
    Ok(TimeSeries { names, channels })
}

// ---- transfer entropy decomposition ----

/// Minimum usable time points for [`te_matrix`].
pub const MIN_TE_POINTS: usize = 3000;

/// Pairwise matrices indexed `[i][j]` for source channel i and target j.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TEReport {
    pub names: Vec<String>,
    /// modified transfer
    pub s: Vec<Vec<f64>>,
    /// unique transfer
    pub u1: Vec<Vec<f64>>,
    /// redundant storage
    pub r: Vec<Vec<f64>>,
    /// unique storage
    pub u2: Vec<Vec<f64>>,
    pub te: Vec<Vec<f64>>,
    /// TE - (S + U1)
    pub residual: Vec<Vec<f64>>,
}

impl TEReport {
    fn matrices(&self) -> [(&'static str, &Vec<Vec<f64>>); 6] {
        [
            ("S", &self.s),
            ("U1", &self.u1),
            ("R", &self.r),
            ("U2", &self.u2),
            ("TE", &self.te),
            ("residual", &self.residual),
        ]
    }

    /// Long-format CSV: one row per (matrix, source, target).
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["matrix", "source", "target", "value"])?;
        for (name, m) in self.matrices() {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    w.write_record([name, &self.names[i], &self.names[j], &format!("{v:?}")])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// One pair's triplet dataset: target Z_j(t+1), sources Z_i(t), Z_j(t).
pub fn te_triplets(series: &TimeSeries, i: usize, j: usize) -> Result<Dataset> {
    let (zi, zj) = (&series.channels[i], &series.channels[j]);
    let n = zj.len();
    Dataset::new(zj[1..].to_vec(), zi[..n - 1].to_vec(), zj[..n - 1].to_vec())
}

/// PID of every ordered channel pair; `workers` caps the thread count (0 = one per core).
pub fn te_matrix(series: &TimeSeries, config: &EstimatorConfig, workers: usize) -> Result<TEReport> {
    let k = series.channels.len();
    if series.len() < MIN_TE_POINTS + 1 {
        return Err(Error::TooFewSamples {
            needed: MIN_TE_POINTS + 1,
            got: series.len(),
        });
    }
    let jobs: Vec<(usize, usize)> = (0..k).flat_map(|i| (0..k).map(move |j| (i, j))).collect();
    let run = |&(i, j): &(usize, usize)| -> Result<[f64; 6]> {
        let data = te_triplets(series, i, j)?;
        let cfg = EstimatorConfig {
            seed: derive_seed(config.seed, (i * k + j) as u64),
            ..*config
        };
        let rep = decompose(&data, &cfg)?.report;
        // TE = I(Z_j⁺ : (Z_i, Z_j)) - I(Z_j⁺ : Z_j), from a separate joint fit
        // in the closed-form cases TE = S + U1 holds exactly
        let te = if rep.diagnostics.shortcut.is_some() {
            rep.s + rep.u1
        } else {
            let p = pseudo_observations(&data)?;
            let pair = crate::estimator::FittedPair::fit(&p)?;
            let joint = mi_joint(&p, &pair, &cfg, derive_seed(cfg.seed, 2))?.value.max(0.0);
            joint - mi_pair(&p.uy, &p.u2, &pair.c_y2).max(0.0)
        };
        Ok([rep.s, rep.u1, rep.r, rep.u2, te, te - (rep.s + rep.u1)])
    };
    let results = crate::parallel::par_map(&jobs, workers, run)?;
    let mut mats = vec![vec![vec![0.0; k]; k]; 6];
    for (&(i, j), r) in jobs.iter().zip(results) {
        for (m, v) in mats.iter_mut().zip(r) {
            m[i][j] = v;
        }
    }
    let mut it = mats.into_iter();
    let mut next = || it.next().unwrap();
    Ok(TEReport {
        names: series.names.clone(),
        s: next(),
        u1: next(),
        r: next(),
        u2: next(),
        te: next(),
        residual: next(),
    })
}
