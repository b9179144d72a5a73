//! Element-pair integrals of the kernel `G` and of its normal derivatives
//! against products of local P1 shape functions `φ0 = 1 - s`, `φ1 = s`.

use num_complex::Complex64;

use crate::mesh::{point_segment_distance, BoundaryMesh, Point};
use crate::quadrature::{gauss_legendre, log_gauss, QuadratureSpec, Rule};
use crate::specialfn::greens_splits;

/// Kernel in split form: `G = a0 ln r + b0`, `G'(r)/r = a1 ln r + b1`.
pub(crate) trait Kernel: Sync {
    fn splits(&self, r: f64) -> (f64, Complex64, f64, Complex64);
}

/// Outgoing Helmholtz fundamental solution with wavenumber `ke`.
pub(crate) struct Helmholtz {
    pub ke: f64,
}

impl Kernel for Helmholtz {
    fn splits(&self, r: f64) -> (f64, Complex64, f64, Complex64) {
        greens_splits(self.ke, r)
    }
}

/// `-(1/2π) ln(r/R)`, positive definite on the boundary when `R` exceeds
/// the diameter.
pub(crate) struct Laplace {
    pub radius: f64,
}

impl Kernel for Laplace {
    fn splits(&self, r: f64) -> (f64, Complex64, f64, Complex64) {
        let c = 1.0 / (2.0 * std::f64::consts::PI);
        (
            -c,
            Complex64::new(c * self.radius.ln(), 0.0),
            0.0,
            Complex64::new(-c / (r * r), 0.0),
        )
    }
}

/// Tables indexed `[test local node][trial local node]` for an ordered
/// element pair (test element A, trial element B).
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct PairTables {
    /// `∫∫ G φa φb`
    pub g: [[Complex64; 2]; 2],
    /// `∫∫ ∂_{n_y} G φa φb`
    pub dy: [[Complex64; 2]; 2],
    /// `∫∫ ∂_{n_x} G φa φb`
    pub dx: [[Complex64; 2]; 2],
}

impl PairTables {
    /// Tables of the reversed pair (test B, trial A).
    pub fn mirrored(&self) -> Self {
        let t = |m: &[[Complex64; 2]; 2]| [[m[0][0], m[1][0]], [m[0][1], m[1][1]]];
        Self {
            g: t(&self.g),
            dy: t(&self.dx),
            dx: t(&self.dy),
        }
    }

    pub fn is_finite(&self) -> bool {
        [self.g, self.dy, self.dx]
            .iter()
            .flatten()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

pub(crate) struct Rules {
    pub far: Rule,
    pub near: Rule,
    pub regular: Rule,
    pub log: Rule,
    pub near_factor: f64,
}

impl Rules {
    pub fn new(spec: &QuadratureSpec) -> Self {
        Self {
            far: gauss_legendre(spec.gauss_points),
            near: gauss_legendre(spec.near_points),
            regular: gauss_legendre(spec.singular_points),
            log: log_gauss(spec.singular_points),
            near_factor: spec.near_factor,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Element {
    pub a: Point,
    pub b: Point,
    pub len: f64,
    pub n: Point,
}

impl Element {
    pub fn of(mesh: &BoundaryMesh, i: usize) -> Self {
        let [p, q] = mesh.segments[i];
        Self {
            a: mesh.nodes[p],
            b: mesh.nodes[q],
            len: mesh.lengths[i],
            n: mesh.outward_normals[i],
        }
    }

    pub fn at(&self, s: f64) -> Point {
        [
            self.a[0] + s * (self.b[0] - self.a[0]),
            self.a[1] + s * (self.b[1] - self.a[1]),
        ]
    }
}

fn shape(s: f64) -> [f64; 2] {
    [1.0 - s, s]
}

fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

/// Tables for the ordered pair `(i, j)` of elements of `mesh`.
pub(crate) fn pair_tables<K: Kernel>(
    kernel: &K,
    mesh: &BoundaryMesh,
    i: usize,
    j: usize,
    rules: &Rules,
    with_d: bool,
) -> PairTables {
    let n = mesh.len();
    let ea = Element::of(mesh, i);
    let eb = Element::of(mesh, j);
    if i == j {
        return identical(kernel, &ea, rules);
    }
    if (i + 1) % n == j {
        // A's end node is B's start node.
        return adjacent(kernel, &ea, &eb, 1, 0, rules, with_d);
    }
    if (j + 1) % n == i {
        return adjacent(kernel, &ea, &eb, 0, 1, rules, with_d);
    }
    let d = point_segment_distance(ea.a, eb.a, eb.b)
        .min(point_segment_distance(ea.b, eb.a, eb.b))
        .min(point_segment_distance(eb.a, ea.a, ea.b))
        .min(point_segment_distance(eb.b, ea.a, ea.b));
    let rule = if d < rules.near_factor * ea.len.max(eb.len) {
        &rules.near
    } else {
        &rules.far
    };
    separated(kernel, &ea, &eb, rule, with_d)
}

fn separated<K: Kernel>(
    kernel: &K,
    ea: &Element,
    eb: &Element,
    rule: &Rule,
    with_d: bool,
) -> PairTables {
    let mut t = PairTables::default();
    let jac = ea.len * eb.len;
    for (&s, &ws) in rule.nodes.iter().zip(&rule.weights) {
        let x = ea.at(s);
        let fs = shape(s);
        for (&u, &wu) in rule.nodes.iter().zip(&rule.weights) {
            let y = eb.at(u);
            let fu = shape(u);
            let d = [y[0] - x[0], y[1] - x[1]];
            let r = d[0].hypot(d[1]);
            let (a0, b0, a1, b1) = kernel.splits(r);
            let lr = r.ln();
            let w = ws * wu * jac;
            let g = (b0 + a0 * lr) * w;
            let (gy, gx) = if with_d {
                let g1 = (b1 + a1 * lr) * w;
                (g1 * dot(d, eb.n), g1 * (-dot(d, ea.n)))
            } else {
                (Complex64::default(), Complex64::default())
            };
            for a in 0..2 {
                for b in 0..2 {
                    let f = fs[a] * fu[b];
                    t.g[a][b] += g * f;
                    t.dy[a][b] += gy * f;
                    t.dx[a][b] += gx * f;
                }
            }
        }
    }
    t
}

/// Self-element integral of `G`; both normal-derivative tables vanish on a
/// straight element.
fn identical<K: Kernel>(kernel: &K, e: &Element, rules: &Rules) -> PairTables {
    // With u = |s - t|: ∫∫ F(s,t) k(L|s-t|) ds dt = ∫ k(L u) H(u) du, where
    // H(u) = (1-u) ∫ [F((1-u)v+u, (1-u)v) + F((1-u)v, (1-u)v+u)] dv.
    let l = e.len;
    let ll = l.ln();
    let h = |u: f64| -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for (&v, &wv) in rules.regular.nodes.iter().zip(&rules.regular.weights) {
            let p = (1.0 - u) * v;
            let f1 = shape(p + u);
            let f0 = shape(p);
            for a in 0..2 {
                for b in 0..2 {
                    m[a][b] += wv * (1.0 - u) * (f1[a] * f0[b] + f0[a] * f1[b]);
                }
            }
        }
        m
    };
    let mut t = PairTables::default();
    for (&u, &w) in rules.regular.nodes.iter().zip(&rules.regular.weights) {
        let (a0, b0, _, _) = kernel.splits(l * u);
        let k = b0 + a0 * ll;
        let hm = h(u);
        for a in 0..2 {
            for b in 0..2 {
                t.g[a][b] += k * (w * hm[a][b] * l * l);
            }
        }
    }
    for (&u, &w) in rules.log.nodes.iter().zip(&rules.log.weights) {
        let (a0, _, _, _) = kernel.splits(l * u);
        let hm = h(u);
        for a in 0..2 {
            for b in 0..2 {
                // ∫ a0 H ln u du = -∫ a0 H (-ln u) du
                t.g[a][b] -= Complex64::new(a0 * w * hm[a][b] * l * l, 0.0);
            }
        }
    }
    t
}

/// Elements sharing one vertex: local node `ia` of A coincides with local
/// node `ib` of B. Duffy coordinates around the shared vertex turn the
/// logarithm into `ln ρ` plus a smooth remainder.
fn adjacent<K: Kernel>(
    kernel: &K,
    ea: &Element,
    eb: &Element,
    ia: usize,
    ib: usize,
    rules: &Rules,
    with_d: bool,
) -> PairTables {
    let c = if ia == 0 { ea.a } else { ea.b };
    let far_a = if ia == 0 { ea.b } else { ea.a };
    let far_b = if ib == 0 { eb.b } else { eb.a };
    let alpha = [(far_a[0] - c[0]) / ea.len, (far_a[1] - c[1]) / ea.len];
    let beta = [(far_b[0] - c[0]) / eb.len, (far_b[1] - c[1]) / eb.len];
    let (la, lb) = (ea.len, eb.len);
    let an = dot(alpha, eb.n);
    let bn = dot(beta, ea.n);
    let local = |p: f64, i0: usize| if i0 == 0 { p } else { 1.0 - p };
    let mut t = PairTables::default();

    for region in 0..2 {
        for (&mu, &wm) in rules.regular.nodes.iter().zip(&rules.regular.weights) {
            // (p, q) = (ρ, ρμ) below the diagonal, (ρμ, ρ) above.
            let (pc, qc) = if region == 0 { (1.0, mu) } else { (mu, 1.0) };
            let rv = [
                la * pc * alpha[0] - lb * qc * beta[0],
                la * pc * alpha[1] - lb * qc * beta[1],
            ];
            let big_r = rv[0].hypot(rv[1]);
            let lr = big_r.ln();
            let mut add = |rho: f64, w: f64, log_weight: bool| {
                let p = rho * pc;
                let q = rho * qc;
                let fs = shape(local(p, ia));
                let fu = shape(local(q, ib));
                let r = rho * big_r;
                let (a0, b0, a1, b1) = kernel.splits(r);
                let jac = w * wm * rho * la * lb;
                // Regular part carries ln R; the log-weighted part is -ln ρ.
                let (g, g1) = if log_weight {
                    (
                        Complex64::new(-a0 * jac, 0.0),
                        Complex64::new(-a1 * jac, 0.0),
                    )
                } else {
                    ((b0 + a0 * lr) * jac, (b1 + a1 * lr) * jac)
                };
                let (gy, gx) = if with_d {
                    // (y-x)·n_B = -L_A p (α·n_B), (x-y)·n_A = -L_B q (β·n_A)
                    (g1 * (-la * p * an), g1 * (-lb * q * bn))
                } else {
                    (Complex64::default(), Complex64::default())
                };
                for a in 0..2 {
                    for b in 0..2 {
                        let f = fs[a] * fu[b];
                        t.g[a][b] += g * f;
                        t.dy[a][b] += gy * f;
                        t.dx[a][b] += gx * f;
                    }
                }
            };
            for (&rho, &w) in rules.regular.nodes.iter().zip(&rules.regular.weights) {
                add(rho, w, false);
            }
            for (&rho, &w) in rules.log.nodes.iter().zip(&rules.log.weights) {
                add(rho, w, true);
            }
        }
    }
    t
}
