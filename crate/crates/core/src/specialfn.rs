//! Bessel and Hankel functions of integer order and real argument, their
//! zeros, and the outgoing fundamental solution of the 2D Helmholtz equation.
//!
//! Small arguments (`x < 4`) use the ascending series. Larger arguments use
//! Miller's backward recurrence normalized by `J0 + 2 Σ J_2k = 1` for the
//! first kind and the Neumann series in even-order `J` for the second kind.

use std::f64::consts::{FRAC_1_PI, FRAC_2_PI, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest order accepted by the public evaluators.
pub const MAX_ORDER: u32 = 20;

const SERIES_LIMIT: f64 = 4.0;

/// Wavenumber `kappa` together with the exterior coefficient `r0`.
///
/// The exterior operator is `-Δ - λ` with `λ = kappa² r0`, so the
/// effective wavenumber in the fundamental solution is `kappa √r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wavenumber {
    pub kappa: f64,
    pub exterior_coefficient: f64,
}

impl Wavenumber {
    pub fn new(kappa: f64, exterior_coefficient: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        if !(exterior_coefficient.is_finite() && exterior_coefficient > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "exterior coefficient must be positive and finite, got {exterior_coefficient}"
            )));
        }
        Ok(Self {
            kappa,
            exterior_coefficient,
        })
    }

    /// Spectral parameter `λ = kappa² r0`.
    pub fn lambda(&self) -> f64 {
        self.kappa * self.kappa * self.exterior_coefficient
    }

    /// Wavenumber of the exterior medium, `kappa √r0`.
    pub fn effective(&self) -> f64 {
        self.kappa * self.exterior_coefficient.sqrt()
    }
}

/// Which function a zero is sought for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZeroKind {
    J,
    Jprime,
}

fn check_order(order: u32) -> Result<()> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!(
            "order {order} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Bessel function of the first kind `J_order(x)`, `x ≥ 0`.
pub fn bessel_j(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !x.is_finite() || x < 0.0 {
        return Err(Error::Domain(format!(
            "bessel_j needs finite x >= 0, got {x}"
        )));
    }
    Ok(j_unchecked(order, x))
}

/// Bessel function of the second kind `Y_order(x)`, `x > 0`.
pub fn bessel_y(order: u32, x: f64) -> Result<f64> {
    check_order(order)?;
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "bessel_y needs finite x > 0, got {x}"
        )));
    }
    Ok(y_unchecked(order, x))
}

/// Hankel function of the first kind `H_order(x) = J + iY`.
pub fn hankel1(order: u32, x: f64) -> Result<Complex64> {
    check_order(order)?;
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::Domain(format!(
            "hankel1 needs finite x > 0, got {x}"
        )));
    }
    Ok(Complex64::new(j_unchecked(order, x), y_unchecked(order, x)))
}

/// Outgoing fundamental solution `G(r) = (i/4) H0(kappa √r0 r)`.
pub fn greens_fn(k: &Wavenumber, r: f64) -> Result<Complex64> {
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!("greens_fn needs r > 0, got {r}")));
    }
    let z = k.effective() * r;
    Ok(Complex64::new(
        -0.25 * y_unchecked(0, z),
        0.25 * j_unchecked(0, z),
    ))
}

/// Gradient of `G(|x - y|)` with respect to `x`.
pub fn greens_fn_grad(k: &Wavenumber, x: [f64; 2], y: [f64; 2]) -> Result<[Complex64; 2]> {
    let d = [x[0] - y[0], x[1] - y[1]];
    let r = d[0].hypot(d[1]);
    if !r.is_finite() || r <= 0.0 {
        return Err(Error::Domain(format!(
            "greens_fn_grad needs x != y, got r = {r}"
        )));
    }
    let ke = k.effective();
    let z = ke * r;
    // G'(r) = -(i ke / 4) H1(ke r)
    let dg = Complex64::new(
        0.25 * ke * y_unchecked(1, z),
        -0.25 * ke * j_unchecked(1, z),
    );
    Ok([dg * (d[0] / r), dg * (d[1] / r)])
}

/// `index`-th positive zero of `J_order` or `J'_order`.
///
/// Indexing starts at 1 and never counts `x = 0`, so the first zero of
/// `J'_0` is `3.8317…`.
pub fn bessel_zero(order: u32, index: u32, kind: ZeroKind) -> Result<f64> {
    check_order(order)?;
    if index == 0 || index > 20 {
        return Err(Error::Domain(format!(
            "zero index must lie in 1..=20, got {index} (the stationary point at 0 is never counted)"
        )));
    }
    let f = |x: f64| match kind {
        ZeroKind::J => j_unchecked(order, x),
        ZeroKind::Jprime => j_derivative(order, x),
    };
    let step = 0.05;
    let mut a = 1e-3;
    let mut fa = f(a);
    let mut found = 0;
    while a < 200.0 {
        let b = a + step;
        let fb = f(b);
        if fb == 0.0 || fa.signum() != fb.signum() {
            found += 1;
            if found == index {
                return Ok(bisect(&f, a, b, fa));
            }
        }
        a = b;
        fa = fb;
    }
    Err(Error::NoConvergence(format!(
        "zero {index} of order {order} not bracketed below 200"
    )))
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa.signum() == fm.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// `J'_n(x)` from the three-term derivative identity.
pub(crate) fn j_derivative(order: u32, x: f64) -> f64 {
    if order == 0 {
        -j_unchecked(1, x)
    } else {
        0.5 * (j_unchecked(order - 1, x) - j_unchecked(order + 1, x))
    }
}

pub(crate) fn j_unchecked(order: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if order == 0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_LIMIT {
        j_series(order, x)
    } else {
        miller(x, order as usize)[order as usize]
    }
}

pub(crate) fn y_unchecked(order: u32, x: f64) -> f64 {
    let lg = FRAC_2_PI * (0.5 * x).ln();
    let y0 = y0_regular(x) + lg * j_unchecked(0, x);
    if order == 0 {
        return y0;
    }
    let y1 = y1_regular(x) + lg * j_unchecked(1, x) - FRAC_2_PI / x;
    let (mut prev, mut cur) = (y0, y1);
    for n in 1..order {
        let next = (2.0 * n as f64 / x) * cur - prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn j_series(order: u32, x: f64) -> f64 {
    let h = 0.5 * x;
    let mut t = 1.0;
    for k in 1..=order {
        t *= h / k as f64;
    }
    let q = -h * h;
    let mut sum = t;
    let n = order as f64;
    for m in 1..200 {
        let mf = m as f64;
        t *= q / (mf * (mf + n));
        sum += t;
        if t.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// Normalized `J_0..=J_m` by backward recurrence; the vector has at least
/// `nmin + 1` entries.
fn miller(x: f64, nmin: usize) -> Vec<f64> {
    let top = (nmin as f64).max(x);
    let mut m = (top + 20.0 + (40.0 * top).sqrt()) as usize;
    m += m % 2;
    let mut v = vec![0.0; m + 2];
    v[m] = 1e-30;
    for k in (1..=m).rev() {
        v[k - 1] = (2.0 * k as f64 / x) * v[k] - v[k + 1];
        if v[k - 1].abs() > 1e200 {
            for e in &mut v[k - 1..] {
                *e *= 1e-200;
            }
        }
    }
    let mut norm = v[0];
    for k in (2..=m).step_by(2) {
        norm += 2.0 * v[k];
    }
    v.truncate(m + 1);
    for e in &mut v {
        *e /= norm;
    }
    v
}

/// Smooth part of `Y0`: `Y0(x) - (2/π) ln(x/2) J0(x)`.
pub(crate) fn y0_regular(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        let q = 0.25 * x * x;
        let mut t = 1.0;
        let mut harmonic = 0.0;
        let mut sum = 0.0;
        for m in 1..200 {
            let mf = m as f64;
            t *= -q / (mf * mf);
            harmonic += 1.0 / mf;
            let term = -t * harmonic;
            sum += term;
            if term.abs() <= 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        FRAC_2_PI * (EULER_GAMMA * j_series(0, x) + sum)
    } else {
        let j = miller(x, 0);
        let mut s = 0.0;
        let mut sign = -1.0;
        let mut k = 1;
        while 2 * k < j.len() {
            s += sign * j[2 * k] / k as f64;
            sign = -sign;
            k += 1;
        }
        FRAC_2_PI * EULER_GAMMA * j[0] - 2.0 * FRAC_2_PI * s
    }
}

/// Smooth part of `Y1`: `Y1(x) - (2/π) ln(x/2) J1(x) + 2/(π x)`.
pub(crate) fn y1_regular(x: f64) -> f64 {
    if x < SERIES_LIMIT {
        let h = 0.5 * x;
        let q = -h * h;
        let mut t = h;
        let mut hm = 0.0;
        let mut hm1 = 1.0;
        let mut sum = t * (hm + hm1 - 2.0 * EULER_GAMMA);
        for m in 1..200 {
            let mf = m as f64;
            t *= q / (mf * (mf + 1.0));
            hm += 1.0 / mf;
            hm1 += 1.0 / (mf + 1.0);
            let term = t * (hm + hm1 - 2.0 * EULER_GAMMA);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
        }
        -FRAC_1_PI * sum
    } else {
        let j = miller(x, 1);
        let mut s = 0.0;
        let mut sign = -1.0;
        let mut k = 1;
        while 2 * k + 1 < j.len() {
            s += sign * (j[2 * k - 1] - j[2 * k + 1]) / k as f64;
            sign = -sign;
            k += 1;
        }
        FRAC_2_PI * (EULER_GAMMA * j[1] + s) + FRAC_2_PI * (1.0 - j[0]) / x
    }
}

/// `(J0, J1, Y0 - (2/π) ln(z/2) J0, Y1 - (2/π) ln(z/2) J1 + 2/(π z))` at `z > 0`,
/// sharing one recurrence for large arguments.
pub(crate) fn bessel01(z: f64) -> (f64, f64, f64, f64) {
    if z < SERIES_LIMIT {
        (j_series(0, z), j_series(1, z), y0_regular(z), y1_regular(z))
    } else {
        let j = miller(z, 1);
        let (mut s0, mut s1) = (0.0, 0.0);
        let mut sign = -1.0;
        let mut k = 1;
        while 2 * k + 1 < j.len() {
            let kf = k as f64;
            s0 += sign * j[2 * k] / kf;
            s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
            sign = -sign;
            k += 1;
        }
        let y0r = FRAC_2_PI * EULER_GAMMA * j[0] - 2.0 * FRAC_2_PI * s0;
        let y1r = FRAC_2_PI * (EULER_GAMMA * j[1] + s1) + FRAC_2_PI * (1.0 - j[0]) / z;
        (j[0], j[1], y0r, y1r)
    }
}

/// Logarithmic splits of the fundamental solution and of `G'(r)/r`:
/// `G = a0 ln r + b0` and `G'/r = a1 ln r + b1`, with `a0 = -J0(ke r)/(2π)`,
/// `a1 = ke J1(ke r)/(2π r)`. The coefficients are smooth in `r` apart from
/// the pole `-1/(2π r²)` carried by `b1`.
pub(crate) fn greens_splits(ke: f64, r: f64) -> (f64, Complex64, f64, Complex64) {
    let z = ke * r;
    let (j0, j1, y0r, y1r) = bessel01(z);
    let lk = (0.5 * ke).ln();
    let a0 = -j0 / (2.0 * PI);
    let b0 = Complex64::new(-0.25 * y0r + a0 * lk, 0.25 * j0);
    let j1r = j1 / r;
    let a1 = ke * j1r / (2.0 * PI);
    let b1 = Complex64::new(
        a1 * lk - 1.0 / (2.0 * PI * r * r) + 0.25 * ke * y1r / r,
        -0.25 * ke * j1r,
    );
    (a0, b0, a1, b1)
}

/// `G'(r)/r` evaluated directly.
pub(crate) fn greens_grad_over_r(ke: f64, r: f64) -> Complex64 {
    let z = ke * r;
    Complex64::new(
        0.25 * ke * y_unchecked(1, z),
        -0.25 * ke * j_unchecked(1, z),
    ) / r
}

/// `G(r)` without argument checks.
pub(crate) fn greens_unchecked(ke: f64, r: f64) -> Complex64 {
    let z = ke * r;
    Complex64::new(-0.25 * y_unchecked(0, z), 0.25 * j_unchecked(0, z))
}
