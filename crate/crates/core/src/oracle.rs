//! Reference values: the closed-form unique information of Gaussian triples
//! and a convex solver for the discrete decomposition, with the quantization
//! of the three-neuron models into discrete distributions.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{gauss_legendre, norm_pdf};
use crate::pid::Units;
use crate::simgen::ModelKind;

/// ½ log((1 - ρ2²)/(1 - ρ1²)) when ρ2 < ρ1, else 0 (nats).
pub fn gaussian_unique_exact(rho_y1: f64, rho_y2: f64) -> f64 {
    gaussian_unique_exact_with(rho_y1, rho_y2, false)
}

/// As [`gaussian_unique_exact`]; with `compare_abs` the indicator compares
/// |ρ2| < |ρ1|.
pub fn gaussian_unique_exact_with(rho_y1: f64, rho_y2: f64, compare_abs: bool) -> f64 {
    let wins = if compare_abs {
        rho_y2.abs() < rho_y1.abs()
    } else {
        rho_y2 < rho_y1
    };
    if !wins {
        return 0.0;
    }
    // negative only if |ρ2| > |ρ1|, possible for the literal comparison
    (0.5 * ((1.0 - rho_y2 * rho_y2) / (1.0 - rho_y1 * rho_y1)).ln()).max(0.0)
}

// ---- discrete distributions ----

/// Largest alphabet accepted per variable.
pub const MAX_ALPHABET: usize = 16;

/// p(ŷ, x̂1, x̂2) stored with x̂2 fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteJoint {
    pub ny: usize,
    pub n1: usize,
    pub n2: usize,
    pub p: Vec<f64>,
    pub y_labels: Vec<String>,
    pub x1_labels: Vec<String>,
    pub x2_labels: Vec<String>,
}

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

impl DiscreteJoint {
    /// Checks shape, signs and normalization (to 1e-9, then renormalized).
    pub fn new(ny: usize, n1: usize, n2: usize, p: Vec<f64>) -> Result<Self> {
        Self::with_labels(p, labels(ny), labels(n1), labels(n2))
    }

    pub fn with_labels(p: Vec<f64>, y_labels: Vec<String>, x1_labels: Vec<String>, x2_labels: Vec<String>) -> Result<Self> {
        let (ny, n1, n2) = (y_labels.len(), x1_labels.len(), x2_labels.len());
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if [ny, n1, n2].iter().any(|&n| n == 0 || n > MAX_ALPHABET) {
            return bad(format!("alphabet sizes must be in 1..={MAX_ALPHABET}, got {ny}x{n1}x{n2}"));
        }
        if p.len() != ny * n1 * n2 {
            return bad(format!("{} probabilities for a {ny}x{n1}x{n2} table", p.len()));
        }
        if let Some(x) = p.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return bad(format!("probability {x} is negative or not finite"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("probabilities sum to {total}"));
        }
        Ok(DiscreteJoint {
            ny,
            n1,
            n2,
            p: p.iter().map(|x| x / total).collect(),
            y_labels,
            x1_labels,
            x2_labels,
        })
    }

    #[inline]
    pub fn idx(&self, y: usize, a: usize, b: usize) -> usize {
        (y * self.n1 + a) * self.n2 + b
    }

    pub fn get(&self, y: usize, a: usize, b: usize) -> f64 {
        self.p[self.idx(y, a, b)]
    }

    /// Rows of (y, x1, x2, probability); labels are mapped to indices in
    /// sorted order (numerically if every label parses as a number).
    /// Repeated rows are summed.
    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        let headers: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_ascii_lowercase()).collect();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Input(format!("missing column '{name}'")))
        };
        let cols = [col("y")?, col("x1")?, col("x2")?, col("probability")?];
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |c: usize| rec.get(c).map(str::trim).unwrap_or("");
            let prob: f64 = field(cols[3])
                .parse()
                .map_err(|_| Error::Input(format!("line {}: bad probability '{}'", line + 2, field(cols[3]))))?;
            rows.push(([field(cols[0]).to_string(), field(cols[1]).to_string(), field(cols[2]).to_string()], prob));
        }
        let alphabet = |k: usize| -> Vec<String> {
            let mut v: Vec<String> = rows.iter().map(|r| r.0[k].clone()).collect();
            v.sort();
            v.dedup();
            if v.iter().all(|s| s.parse::<f64>().is_ok()) {
                v.sort_by(|a, b| a.parse::<f64>().unwrap().total_cmp(&b.parse::<f64>().unwrap()));
            }
            v
        };
        let (ly, l1, l2) = (alphabet(0), alphabet(1), alphabet(2));
        let index = |l: &[String]| -> BTreeMap<String, usize> { l.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect() };
        let (iy, i1, i2) = (index(&ly), index(&l1), index(&l2));
        let mut p = vec![0.0; ly.len() * l1.len() * l2.len()];
        for (k, prob) in rows {
            p[(iy[&k[0]] * l1.len() + i1[&k[1]]) * l2.len() + i2[&k[2]]] += prob;
        }
        Self::with_labels(p, ly, l1, l2)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_to(std::fs::File::create(path)?)
    }

    pub fn write_to<W: std::io::Write>(&self, sink: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record(["y", "x1", "x2", "probability"])?;
        for y in 0..self.ny {
            for a in 0..self.n1 {
                for b in 0..self.n2 {
                    let v = self.get(y, a, b);
                    if v > 0.0 {
                        w.write_record([&self.y_labels[y], &self.x1_labels[a], &self.x2_labels[b], &format!("{v:?}")])?;
                    }
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn p_ya(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.ny * self.n1];
        for y in 0..self.ny {
            for a in 0..self.n1 {
                m[y * self.n1 + a] = (0..self.n2).map(|b| self.get(y, a, b)).sum();
            }
        }
        m
    }

    pub fn p_yb(&self) -> Vec<f64> {
        yb_marginal(&self.p, self.ny, self.n1, self.n2)
    }
}

fn yb_marginal(q: &[f64], ny: usize, n1: usize, n2: usize) -> Vec<f64> {
    let mut m = vec![0.0; ny * n2];
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                m[y * n2 + b] += q[(y * n1 + a) * n2 + b];
            }
        }
    }
    m
}

fn ya_marginal(q: &[f64], ny: usize, n1: usize, n2: usize) -> Vec<f64> {
    let mut m = vec![0.0; ny * n1];
    for y in 0..ny {
        for a in 0..n1 {
            m[y * n1 + a] = q[(y * n1 + a) * n2..(y * n1 + a + 1) * n2].iter().sum();
        }
    }
    m
}

fn xlogy(x: f64, y: f64) -> f64 {
    if x > 0.0 {
        x * y.ln()
    } else {
        0.0
    }
}

/// I(Y : X1 | X2) of a table laid out like [`DiscreteJoint::p`] (nats).
pub fn conditional_mi(q: &[f64], ny: usize, n1: usize, n2: usize) -> f64 {
    let q_yb = yb_marginal(q, ny, n1, n2);
    let mut q_ab = vec![0.0; n1 * n2];
    let mut q_b = vec![0.0; n2];
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                let v = q[(y * n1 + a) * n2 + b];
                q_ab[a * n2 + b] += v;
                q_b[b] += v;
            }
        }
    }
    let mut s = 0.0;
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                let v = q[(y * n1 + a) * n2 + b];
                if v > 0.0 {
                    s += v * (v * q_b[b] / (q_ab[a * n2 + b] * q_yb[y * n2 + b])).ln();
                }
            }
        }
    }
    s.max(0.0)
}

/// Plug-in I(Y:X1), I(Y:X2), I(Y:(X1,X2)) in nats.
pub fn discrete_mis(p: &DiscreteJoint) -> (f64, f64, f64) {
    let (ny, n1, n2) = (p.ny, p.n1, p.n2);
    let pya = p.p_ya();
    let pyb = p.p_yb();
    let py: Vec<f64> = (0..ny).map(|y| pya[y * n1..(y + 1) * n1].iter().sum()).collect();
    let mut pa = vec![0.0; n1];
    let mut pb = vec![0.0; n2];
    let mut pab = vec![0.0; n1 * n2];
    for y in 0..ny {
        for a in 0..n1 {
            for b in 0..n2 {
                let v = p.get(y, a, b);
                pa[a] += v;
                pb[b] += v;
                pab[a * n2 + b] += v;
            }
        }
    }
    let mut i1 = 0.0;
    let mut i2 = 0.0;
    let mut i12 = 0.0;
    for y in 0..ny {
        for a in 0..n1 {
            i1 += xlogy(pya[y * n1 + a], pya[y * n1 + a] / (py[y] * pa[a]));
        }
        for b in 0..n2 {
            i2 += xlogy(pyb[y * n2 + b], pyb[y * n2 + b] / (py[y] * pb[b]));
        }
        for a in 0..n1 {
            for b in 0..n2 {
                let v = p.get(y, a, b);
                i12 += xlogy(v, v / (py[y] * pab[a * n2 + b]));
            }
        }
    }
    (i1.max(0.0), i2.max(0.0), i12.max(0.0))
}

// ---- solver ----

/// Output of the convex minimization of I_q(Y:X1|X2) over the distributions
/// sharing the (y,x1) and (y,x2) marginals of p.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrojaSolution {
    pub q: Vec<f64>,
    /// Objective Σ q log q(y|x1,x2) after each accepted step, starting at
    /// the initial point.
    pub objective_history: Vec<f64>,
    pub iterations: usize,
    /// Total-variation distance of q's pair marginals from p's, summed.
    pub marginal_tv: f64,
}

/// Solver limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Stop once an accepted step changes the objective by less than this.
    pub tolerance: f64,
    pub dykstra_iterations: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 20_000,
            tolerance: 1e-12,
            dykstra_iterations: 20_000,
        }
    }
}

// Σ q log(q / q(a,b)); 0 log 0 = 0
fn objective(q: &[f64], ny: usize, n1: usize, n2: usize) -> f64 {
    let qab = ab_marginal(q, ny, n1, n2);
    q.iter()
        .enumerate()
        .map(|(i, &v)| xlogy(v, v / qab[i % (n1 * n2)]))
        .sum()
}

fn ab_marginal(q: &[f64], ny: usize, n1: usize, n2: usize) -> Vec<f64> {
    let k = n1 * n2;
    let mut m = vec![0.0; k];
    for y in 0..ny {
        for i in 0..k {
            m[i] += q[y * k + i];
        }
    }
    m
}

/// Euclidean projection of each y-slice onto the matrices with the given
/// row sums `r` (over x2) and column sums `c` (over x1).
fn project_affine(x: &mut [f64], ny: usize, n1: usize, n2: usize, r: &[f64], c: &[f64]) {
    let (m, n) = (n1 as f64, n2 as f64);
    for y in 0..ny {
        let s = &mut x[y * n1 * n2..(y + 1) * n1 * n2];
        let rows: Vec<f64> = (0..n1).map(|a| s[a * n2..(a + 1) * n2].iter().sum()).collect();
        let cols: Vec<f64> = (0..n2).map(|b| (0..n1).map(|a| s[a * n2 + b]).sum()).collect();
        let total: f64 = rows.iter().sum();
        let target: f64 = r[y * n1..(y + 1) * n1].iter().sum();
        for a in 0..n1 {
            for b in 0..n2 {
                s[a * n2 + b] += -(rows[a] - r[y * n1 + a]) / n - (cols[b] - c[y * n2 + b]) / m + (total - target) / (m * n);
            }
        }
    }
}

fn marginal_violation(x: &[f64], ny: usize, n1: usize, n2: usize, r: &[f64], c: &[f64]) -> f64 {
    let ya = ya_marginal(x, ny, n1, n2);
    let yb = yb_marginal(x, ny, n1, n2);
    let d1: f64 = ya.iter().zip(r).map(|(a, b)| (a - b).abs()).sum();
    let d2: f64 = yb.iter().zip(c).map(|(a, b)| (a - b).abs()).sum();
    0.5 * (d1 + d2)
}

/// Dykstra's alternating projections onto the marginal constraints and the
/// non-negative orthant.
fn project_feasible(z: &[f64], dims: (usize, usize, usize), r: &[f64], c: &[f64], iters: usize) -> Vec<f64> {
    let (ny, n1, n2) = dims;
    let mut x = z.to_vec();
    let mut p = vec![0.0; z.len()];
    let mut q = vec![0.0; z.len()];
    let mut y = vec![0.0; z.len()];
    for _ in 0..iters {
        for i in 0..x.len() {
            y[i] = x[i] + p[i];
        }
        project_affine(&mut y, ny, n1, n2, r, c);
        for i in 0..x.len() {
            p[i] += x[i] - y[i];
            let v = y[i] + q[i];
            x[i] = v.max(0.0);
            q[i] = v - x[i];
        }
        if marginal_violation(&x, ny, n1, n2, r, c) < 1e-14 {
            break;
        }
    }
    x
}

pub fn broja_solve(p: &DiscreteJoint, config: &SolverConfig) -> BrojaSolution {
    let (ny, n1, n2) = (p.ny, p.n1, p.n2);
    let dims = (ny, n1, n2);
    let r = p.p_ya();
    let c = p.p_yb();
    let py: Vec<f64> = (0..ny).map(|y| r[y * n1..(y + 1) * n1].iter().sum()).collect();
    // product extension p(y) p(x1|y) p(x2|y), a feasible start
    let mut q = vec![0.0; p.p.len()];
    for y in 0..ny {
        if py[y] > 0.0 {
            for a in 0..n1 {
                for b in 0..n2 {
                    q[p.idx(y, a, b)] = r[y * n1 + a] * c[y * n2 + b] / py[y];
                }
            }
        }
    }
    let support: Vec<bool> = q.iter().map(|&v| v > 0.0).collect();
    let mut f = objective(&q, ny, n1, n2);
    let mut history = vec![f];
    let mut t = 1.0;
    let mut iterations = 0;
    let mut grad = vec![0.0; q.len()];
    while iterations < config.max_iterations {
        iterations += 1;
        let qab = ab_marginal(&q, ny, n1, n2);
        for i in 0..q.len() {
            grad[i] = if support[i] {
                (q[i].max(1e-300) / qab[i % (n1 * n2)].max(1e-300)).ln()
            } else {
                0.0
            };
        }
        // backtracking on the projected step
        let mut accepted = None;
        while t > 1e-18 {
            let z: Vec<f64> = q.iter().zip(&grad).map(|(x, g)| x - t * g).collect();
            let mut cand = project_feasible(&z, dims, &r, &c, config.dykstra_iterations);
            for (v, &s) in cand.iter_mut().zip(&support) {
                if !s {
                    *v = 0.0;
                }
            }
            let fc = objective(&cand, ny, n1, n2);
            let lin: f64 = cand.iter().zip(&q).zip(&grad).map(|((a, b), g)| g * (a - b)).sum();
            let sq: f64 = cand.iter().zip(&q).map(|(a, b)| (a - b).powi(2)).sum();
            if fc <= f + lin + sq / (2.0 * t) && fc <= f {
                accepted = Some((cand, fc));
                break;
            }
            t *= 0.5;
        }
        let Some((cand, fc)) = accepted else { break };
        let change = f - fc;
        q = cand;
        f = fc;
        history.push(f);
        t *= 2.0;
        if change < config.tolerance {
            break;
        }
    }
    let marginal_tv = marginal_violation(&q, ny, n1, n2, &r, &c);
    BrojaSolution {
        q,
        objective_history: history,
        iterations,
        marginal_tv,
    }
}

/// Discrete decomposition; every term in the requested units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePid {
    pub u1: f64,
    pub u2: f64,
    pub r: f64,
    pub s: f64,
    pub i_y_x1: f64,
    pub i_y_x2: f64,
    pub i_y_x12: f64,
    pub delta: f64,
    pub units: Units,
    pub iterations: usize,
    pub marginal_tv: f64,
}

impl DiscretePid {
    /// Terms from U1 and the three informations (nats) by the consistency
    /// relations, clamped at zero.
    pub fn from_parts(u1: f64, (i1, i2, i12): (f64, f64, f64), iterations: usize, marginal_tv: f64) -> Self {
        let r = i1 - u1;
        let u2 = i2 - r;
        let s = i12 - u1 - u2 - r;
        let (u1, u2, r, s) = (u1.max(0.0), u2.max(0.0), r.max(0.0), s.max(0.0));
        DiscretePid {
            u1,
            u2,
            r,
            s,
            i_y_x1: i1,
            i_y_x2: i2,
            i_y_x12: i12,
            delta: s - r,
            units: Units::Nats,
            iterations,
            marginal_tv,
        }
    }

    pub fn in_units(&self, units: Units) -> Self {
        let k = units.scale() / self.units.scale();
        DiscretePid {
            u1: self.u1 * k,
            u2: self.u2 * k,
            r: self.r * k,
            s: self.s * k,
            i_y_x1: self.i_y_x1 * k,
            i_y_x2: self.i_y_x2 * k,
            i_y_x12: self.i_y_x12 * k,
            delta: self.delta * k,
            units,
            ..*self
        }
    }
}

pub fn discrete_broja(p: &DiscreteJoint) -> Result<DiscretePid> {
    discrete_broja_with(p, &SolverConfig::default())
}

pub fn discrete_broja_with(p: &DiscreteJoint, config: &SolverConfig) -> Result<DiscretePid> {
    let sol = broja_solve(p, config);
    if sol.marginal_tv > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "solver left marginal violation {:e}",
            sol.marginal_tv
        )));
    }
    let u1 = conditional_mi(&sol.q, p.ny, p.n1, p.n2);
    Ok(DiscretePid::from_parts(u1, discrete_mis(p), sol.iterations, sol.marginal_tv))
}

/// Unique information of a binary table by exhaustive search over the
/// two-parameter feasible set: for each y the 2×2 slice is fixed by its
/// (0,0) entry. `n` grid points per axis.
pub fn binary_grid_unique(p: &DiscreteJoint, n: usize) -> Result<f64> {
    if (p.ny, p.n1, p.n2) != (2, 2, 2) {
        return Err(Error::InvalidDistribution("grid search needs a 2x2x2 table".into()));
    }
    let r = p.p_ya();
    let c = p.p_yb();
    let range = |y: usize| {
        let (r0, r1, c0) = (r[y * 2], r[y * 2 + 1], c[y * 2]);
        ((c0 - r1).max(0.0), r0.min(c0))
    };
    let slice = |y: usize, t: f64| {
        let (r0, c0, c1) = (r[y * 2], c[y * 2], c[y * 2 + 1]);
        [t, r0 - t, c0 - t, c1 - (r0 - t)]
    };
    let (g0, g1) = (range(0), range(1));
    let at = |lo: f64, hi: f64, k: usize| {
        if n == 1 {
            0.5 * (lo + hi)
        } else {
            lo + (hi - lo) * k as f64 / (n - 1) as f64
        }
    };
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            let (s0, s1) = (slice(0, at(g0.0, g0.1, i)), slice(1, at(g1.0, g1.1, j)));
            let q: Vec<f64> = s0.iter().chain(&s1).map(|v| v.max(0.0)).collect();
            best = best.min(conditional_mi(&q, 2, 2, 2));
        }
    }
    Ok(best)
}

/// Decomposition from the grid oracle, same conventions as
/// [`discrete_broja`].
pub fn binary_grid_pid(p: &DiscreteJoint, n: usize) -> Result<DiscretePid> {
    let u1 = binary_grid_unique(p, n)?;
    Ok(DiscretePid::from_parts(u1, discrete_mis(p), 0, 0.0))
}

// ---- quantization ----

/// Half-width of the quantized source range.
pub const X_RANGE: f64 = 8.0;

/// Probability of each of the `nx × nx` cells of [-8, 8]² under the
/// standard bivariate normal with correlation `rho12`, before
/// renormalization.
pub fn cell_probabilities(nx: usize, rho12: f64) -> Vec<f64> {
    let gl = gauss_legendre(24);
    let w = 2.0 * X_RANGE / nx as f64;
    let c = 1.0 - rho12 * rho12;
    let k = 1.0 / c.sqrt();
    let density = |x: f64, y: f64| norm_pdf(x) * norm_pdf((y - rho12 * x) / c.sqrt()) * k;
    let mut p = vec![0.0; nx * nx];
    for a in 0..nx {
        for b in 0..nx {
            let (x0, y0) = (-X_RANGE + a as f64 * w, -X_RANGE + b as f64 * w);
            p[a * nx + b] = gl.integrate_2d((x0, x0 + w), (y0, y0 + w), density);
        }
    }
    p
}

/// Quantizes a three-neuron model: sources on the cell midpoints of an
/// `nx`-segment grid of [-8, 8], the output split into `ny` bins of equal
/// probability mass. Equal outputs at a bin edge go to the lower bin.
pub fn quantize_model(kind: ModelKind, w1: f64, w2: f64, rho12: f64, nx: usize, ny: usize) -> Result<DiscreteJoint> {
    if nx < 2 || ny < 2 || nx > MAX_ALPHABET || ny > MAX_ALPHABET {
        return Err(Error::InvalidConfig(format!(
            "need 2 <= N_x, N_y <= {MAX_ALPHABET}, got {nx}, {ny}"
        )));
    }
    if !(rho12.abs() < 1.0) {
        return Err(Error::InvalidConfig(format!("|rho12| must be below 1, got {rho12}")));
    }
    let raw = cell_probabilities(nx, rho12);
    let total: f64 = raw.iter().sum();
    let pab: Vec<f64> = raw.iter().map(|v| v / total).collect();
    let w = 2.0 * X_RANGE / nx as f64;
    let mid = |a: usize| -X_RANGE + (a as f64 + 0.5) * w;
    let ys: Vec<f64> = (0..nx * nx).map(|i| kind.output(w1, w2, mid(i / nx), mid(i % nx))).collect();
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &y| (l.min(y), h.max(y)));
    if !(hi > lo) {
        return Err(Error::Degenerate(format!("model output is constant ({lo}) on the grid")));
    }
    // bin edges: the weighted quantiles of Y at k / ny
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&i, &j| ys[i].total_cmp(&ys[j]));
    let mut edges = Vec::with_capacity(ny - 1);
    let mut cum = 0.0;
    let mut k = 1;
    for &i in &order {
        cum += pab[i];
        while k < ny && cum >= k as f64 / ny as f64 - 1e-12 {
            edges.push(ys[i]);
            k += 1;
        }
    }
    let mut p = vec![0.0; ny * nx * nx];
    for (i, &y) in ys.iter().enumerate() {
        let bin = edges.iter().filter(|&&e| y > e).count();
        p[bin * nx * nx + i] += pab[i];
    }
    let xl: Vec<String> = (0..nx).map(|a| format!("{}", mid(a))).collect();
    DiscreteJoint::with_labels(p, labels(ny), xl.clone(), xl)
}
