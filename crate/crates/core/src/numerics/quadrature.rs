/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// ∫_a^b f(x) dx with this rule.
    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Tensor-product rule over the rectangle [a1,b1] × [a2,b2].
    pub fn integrate_2d(
        &self,
        (a1, b1): (f64, f64),
        (a2, b2): (f64, f64),
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> f64 {
        let (h1, m1) = (0.5 * (b1 - a1), 0.5 * (a1 + b1));
        let (h2, m2) = (0.5 * (b2 - a2), 0.5 * (a2 + b2));
        let mut acc = 0.0;
        for (x, wx) in self.nodes.iter().zip(&self.weights) {
            let mut inner = 0.0;
            for (y, wy) in self.nodes.iter().zip(&self.weights) {
                inner += wy * f(m1 + h1 * x, m2 + h2 * y);
            }
            acc += wx * inner;
        }
        acc * h1 * h2
    }
}

/// Nodes and weights of the `n`-point rule, by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> GaussLegendre {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pn1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pn1) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GaussLegendre { nodes, weights }
}

/// Adaptive bisection driven by a 10-point vs two-half comparison.
pub fn integrate_adaptive(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = gauss_legendre(10);
    let whole = rule.integrate(a, b, &mut *f);
    adapt(f, &rule, a, b, whole, tol, 0)
}

fn adapt(
    f: &mut impl FnMut(f64) -> f64,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let mid = 0.5 * (a + b);
    let left = rule.integrate(a, mid, &mut *f);
    let right = rule.integrate(mid, b, &mut *f);
    if (left + right - whole).abs() <= tol || depth >= 40 {
        return left + right;
    }
    adapt(f, rule, a, mid, left, 0.5 * tol, depth + 1)
        + adapt(f, rule, mid, b, right, 0.5 * tol, depth + 1)
}
