//! Quadrature rules on `[0, 1]`: Gauss–Legendre and Gauss rules for the
//! weight `-ln x`.

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights of a rule on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Point counts for the element-pair integrals of the boundary operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Gauss points per direction for well separated element pairs.
    pub gauss_points: usize,
    /// Gauss points per direction for nearby (non-touching) pairs.
    pub near_points: usize,
    /// Points of the log-weighted and regular rules used on touching pairs.
    pub singular_points: usize,
    /// Pairs closer than `near_factor` times the larger element length count as near.
    pub near_factor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            gauss_points: 8,
            near_points: 16,
            singular_points: 10,
            near_factor: 1.5,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = (1..=64).contains(&self.gauss_points)
            && (1..=64).contains(&self.near_points)
            && (2..=40).contains(&self.singular_points)
            && self.near_factor.is_finite()
            && self.near_factor >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "bad quadrature spec {self:?}"
            )))
        }
    }
}

/// `n`-point Gauss–Legendre rule mapped to `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1, "Gauss rule needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    Rule { nodes, weights }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `n`-point Gauss rule for `∫_0^1 f(x) (-ln x) dx`.
///
/// The recurrence coefficients come from the Stieltjes procedure applied to a
/// discrete measure that integrates polynomials of degree `< 2(2n + 2)`
/// exactly against the weight, so the resulting rule is exact to degree
/// `2n - 1`.
pub fn log_gauss(n: usize) -> Rule {
    assert!(n >= 1, "log-Gauss rule needs at least one point");
    // ∫ f(x)(-ln x) dx = ∫∫ f(y s) ds dy on the unit square.
    let g = gauss_legendre(2 * n + 2);
    let mut xs = Vec::with_capacity(g.len() * g.len());
    let mut ws = Vec::with_capacity(g.len() * g.len());
    for (&y, &wy) in g.nodes.iter().zip(&g.weights) {
        for (&s, &wsv) in g.nodes.iter().zip(&g.weights) {
            xs.push(y * s);
            ws.push(wy * wsv);
        }
    }
    let (alpha, beta) = stieltjes(&xs, &ws, n);
    golub_welsch(&alpha, &beta)
}

fn stieltjes(xs: &[f64], ws: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let m = xs.len();
    let mut alpha = vec![0.0; n];
    let mut beta = vec![0.0; n];
    let mut p_prev = vec![0.0; m];
    let mut p = vec![1.0; m];
    for k in 0..n {
        let mut norm = 0.0;
        let mut xnorm = 0.0;
        for i in 0..m {
            let q = ws[i] * p[i] * p[i];
            norm += q;
            xnorm += q * xs[i];
        }
        alpha[k] = xnorm / norm;
        // p_{k-1} was stored with unit norm, so the ratio is just `norm`.
        beta[k] = norm;
        let mut p_next = vec![0.0; m];
        for i in 0..m {
            p_next[i] = (xs[i] - alpha[k]) * p[i] - beta[k] * p_prev[i];
        }
        // Common rescaling of p_k and p_{k+1} leaves the recurrence intact
        // and makes the stored p_k unit norm.
        let s = norm.sqrt().recip();
        for i in 0..m {
            p_prev[i] = p[i] * s;
            p[i] = p_next[i] * s;
        }
    }
    (alpha, beta)
}

fn golub_welsch(alpha: &[f64], beta: &[f64]) -> Rule {
    let n = alpha.len();
    let jac = Mat::<f64>::from_fn(n, n, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[j].sqrt()
        } else if j + 1 == i {
            beta[i].sqrt()
        } else {
            0.0
        }
    });
    let evd = jac
        .self_adjoint_eigen(Side::Lower)
        .expect("symmetric tridiagonal eigenproblem always converges");
    let vals = evd.S().column_vector();
    let vecs = evd.U();
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| (vals[i], beta[0] * vecs[(0, i)] * vecs[(0, i)]))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}
