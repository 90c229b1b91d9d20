//! Modified Bessel functions `K₀`, `K₁` of complex argument and the
//! fundamental solutions of `-Δ + s²`.
//!
//! In two dimensions the fundamental solution `(i/4) H₀⁽¹⁾(is|x|)` equals
//! `K₀(s|x|) / 2π`, so everything below works with `K₀` and `K₁` on the right
//! half-plane.
//!
//! Evaluation regions for `e^z K_ν(z)`:
//!
//! * `|z| ≤ 2`: power series with the logarithmic term split off,
//! * `2 < |z| < 25`: Steed's continued fraction (Thompson-Barnett CF2),
//! * `|z| ≥ 25`: the Hankel asymptotic expansion.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
const ASYMPTOTIC_RADIUS: f64 = 25.0;
/// `e^{-z}` underflows to zero beyond this real part.
const UNDERFLOW_RE: f64 = 705.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Normal,
    /// `e^{-z}` underflowed; the returned values are zero.
    Underflow,
}

/// `K₀(z)` and `K₁(z)` evaluated together.
#[derive(Debug, Clone, Copy)]
pub struct BesselK {
    pub k0: Complex64,
    pub k1: Complex64,
    pub status: Status,
}

fn check_domain(z: Complex64) -> Result<()> {
    if z.re.is_nan() || z.im.is_nan() {
        return Err(Error::Domain(format!("Bessel K at NaN argument {z}")));
    }
    if z == Complex64::new(0.0, 0.0) || !(z.re > 0.0) {
        return Err(Error::Domain(format!(
            "Bessel K needs Re z > 0 and z != 0, got {z}"
        )));
    }
    Ok(())
}

/// Exponentially scaled pair `(e^z K₀(z), e^z K₁(z))`.
pub fn bessel_k01_scaled(z: Complex64) -> Result<(Complex64, Complex64)> {
    check_domain(z)?;
    Ok(k01_scaled_unchecked(z))
}

/// `K₀(z)` and `K₁(z)` with an underflow flag for very large `Re z`.
pub fn bessel_k01(z: Complex64) -> Result<BesselK> {
    check_domain(z)?;
    if z.re > UNDERFLOW_RE {
        return Ok(BesselK {
            k0: Complex64::new(0.0, 0.0),
            k1: Complex64::new(0.0, 0.0),
            status: Status::Underflow,
        });
    }
    let (k0, k1) = k01_unchecked(z);
    Ok(BesselK {
        k0,
        k1,
        status: Status::Normal,
    })
}

pub fn bessel_k0(z: Complex64) -> Result<Complex64> {
    bessel_k01(z).map(|k| k.k0)
}

pub fn bessel_k1(z: Complex64) -> Result<Complex64> {
    bessel_k01(z).map(|k| k.k1)
}

/// `(K₀(z), K₁(z))` without domain checks, for quadrature loops where
/// `Re z > 0` holds by construction.
#[inline]
pub fn k01_unchecked(z: Complex64) -> (Complex64, Complex64) {
    if z.norm_sqr() <= SERIES_RADIUS * SERIES_RADIUS {
        return k01_series(z);
    }
    let (k0s, k1s) = k01_scaled_unchecked(z);
    let e = (-z).exp();
    (k0s * e, k1s * e)
}

#[inline]
pub fn k01_scaled_unchecked(z: Complex64) -> (Complex64, Complex64) {
    let r2 = z.norm_sqr();
    if r2 <= SERIES_RADIUS * SERIES_RADIUS {
        let (k0, k1) = k01_series(z);
        let e = z.exp();
        (k0 * e, k1 * e)
    } else if r2 < ASYMPTOTIC_RADIUS * ASYMPTOTIC_RADIUS {
        k01_continued_fraction(z)
    } else {
        k01_asymptotic(z)
    }
}

fn k01_series(z: Complex64) -> (Complex64, Complex64) {
    let t = z * z * 0.25;
    let log_half = (z * 0.5).ln();
    // k-th terms: t^k / (k!)² and t^k / (k! (k+1)!)
    let mut term0 = Complex64::new(1.0, 0.0);
    let mut term1 = Complex64::new(1.0, 0.0);
    let mut i0 = term0;
    let mut i1_over = term1;
    let mut harmonic = 0.0; // H_k
    let mut s0 = Complex64::new(0.0, 0.0); // Σ H_k t^k/(k!)²
    let mut s1 = term1 * (1.0 - 2.0 * EULER_GAMMA); // Σ (ψ(k+1)+ψ(k+2)) t^k/(k!(k+1)!)
    for k in 1..80 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        harmonic += 1.0 / kf;
        i0 += term0;
        i1_over += term1;
        s0 += term0 * harmonic;
        let psi_sum = 2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA;
        s1 += term1 * psi_sum;
        if term0.norm_sqr() < 1e-34 * i0.norm_sqr() && term1.norm_sqr() < 1e-34 * i1_over.norm_sqr() {
            break;
        }
    }
    let i1 = z * 0.5 * i1_over;
    let k0 = -(log_half + EULER_GAMMA) * i0 + s0;
    let k1 = z.inv() + log_half * i1 - z * 0.25 * s1;
    (k0, k1)
}

fn k01_continued_fraction(z: Complex64) -> (Complex64, Complex64) {
    const MAXIT: usize = 20_000;
    let one = Complex64::new(1.0, 0.0);
    let mut b = (one + z) * 2.0;
    let mut d = b.inv();
    let mut h = d;
    let mut delh = d;
    let mut q1 = Complex64::new(0.0, 0.0);
    let mut q2 = one;
    let a1 = 0.25;
    let mut q = Complex64::new(a1, 0.0);
    let mut c = a1;
    let mut a = -a1;
    let mut s = one + q * delh;
    for i in 1..MAXIT {
        let fi = i as f64;
        a -= 2.0 * fi;
        c = -a * c / (fi + 1.0);
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += qnew * c;
        b += 2.0;
        d = (b + d * a).inv();
        delh = (b * d - 1.0) * delh;
        h += delh;
        let dels = q * delh;
        s += dels;
        if dels.norm_sqr() < 1e-34 * s.norm_sqr() {
            break;
        }
    }
    h *= a1;
    let k0 = (FRAC_PI_2 / z).sqrt() / s;
    let k1 = k0 * (z + 0.5 - h) / z;
    (k0, k1)
}

fn k01_asymptotic(z: Complex64) -> (Complex64, Complex64) {
    let pref = (FRAC_PI_2 / z).sqrt();
    let zinv = z.inv();
    let mut sum0 = Complex64::new(1.0, 0.0);
    let mut sum1 = Complex64::new(1.0, 0.0);
    let mut t0 = Complex64::new(1.0, 0.0);
    let mut t1 = Complex64::new(1.0, 0.0);
    for k in 1..60 {
        let kf = k as f64;
        let odd = (2.0 * kf - 1.0).powi(2);
        let n0 = t0 * zinv * ((0.0 - odd) / (8.0 * kf));
        let n1 = t1 * zinv * ((4.0 - odd) / (8.0 * kf));
        if n0.norm_sqr() > t0.norm_sqr() && k > 2 {
            break;
        }
        t0 = n0;
        t1 = n1;
        sum0 += t0;
        sum1 += t1;
        if t0.norm_sqr() < 1e-34 && t1.norm_sqr() < 1e-34 {
            break;
        }
    }
    (pref * sum0, pref * sum1)
}

/// `I₀(z)` and `I₁(z)` by their power series; accurate for moderate `|z|`
/// (the series loses digits to cancellation once `|z|` exceeds a few tens).
pub fn bessel_i01(z: Complex64) -> (Complex64, Complex64) {
    let t = z * z * 0.25;
    let mut term0 = Complex64::new(1.0, 0.0);
    let mut term1 = Complex64::new(1.0, 0.0);
    let mut i0 = term0;
    let mut i1 = term1;
    for k in 1..400 {
        let kf = k as f64;
        term0 *= t / (kf * kf);
        term1 *= t / (kf * (kf + 1.0));
        i0 += term0;
        i1 += term1;
        if term0.norm() < 1e-18 * i0.norm() && term1.norm() < 1e-18 * i1.norm() {
            break;
        }
    }
    (i0, i1 * z * 0.5)
}

/// Fundamental solution of `-Δ + s²` in dimension `d ∈ {2, 3}` at `x ≠ 0`.
pub fn fundamental_solution(x: &[f64], s: Complex64, d: usize) -> Result<Complex64> {
    if x.len() != d {
        return Err(Error::Contract(format!(
            "point has {} coordinates, dimension is {d}",
            x.len()
        )));
    }
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r == 0.0 {
        return Err(Error::Domain("fundamental solution is singular at x = 0".into()));
    }
    if !(s.re > 0.0) {
        return Err(Error::Domain(format!("fundamental solution needs Re s > 0, got {s}")));
    }
    match d {
        2 => Ok(bessel_k0(s * r)? / (2.0 * PI)),
        3 => Ok((-s * r).exp() / (4.0 * PI * r)),
        _ => Err(Error::NotImplemented(format!("fundamental solution in dimension {d}"))),
    }
}

/// `∂_{ν(y)} Φ(x - y; s)` in two dimensions:
/// `(s / 2π) K₁(s r) ((x - y)·ν(y)) / r` with `r = |x - y|`.
pub fn dlp_kernel_2d(x: [f64; 2], y: [f64; 2], nu_y: [f64; 2], s: Complex64) -> Result<Complex64> {
    let dx = [x[0] - y[0], x[1] - y[1]];
    let r = (dx[0] * dx[0] + dx[1] * dx[1]).sqrt();
    if r == 0.0 {
        return Err(Error::Domain("double-layer kernel is singular at x = y".into()));
    }
    let k1 = bessel_k1(s * r)?;
    let proj = dx[0] * nu_y[0] + dx[1] * nu_y[1];
    Ok(s * k1 * (proj / (2.0 * PI * r)))
}

/// A Laplace-domain frequency with the sector parameters `(σ₀, δ)`.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyPoint {
    pub s: Complex64,
    pub sigma0: f64,
    pub delta: f64,
}

impl FrequencyPoint {
    pub fn new(s: Complex64, sigma0: f64, delta: f64) -> Result<Self> {
        if !(s.re > 0.0) {
            return Err(Error::Domain(format!("frequency needs Re s > 0, got {s}")));
        }
        if !(sigma0 > 0.0) {
            return Err(Error::Domain(format!("sector needs σ₀ > 0, got {sigma0}")));
        }
        if !(delta > 0.0 && delta < FRAC_PI_2) {
            return Err(Error::Domain(format!("sector needs 0 < δ < π/2, got {delta}")));
        }
        Ok(Self { s, sigma0, delta })
    }

    /// Membership in `{Re s > σ₀, |Arg s| < π/2 - δ}`.
    pub fn in_sector(&self) -> bool {
        self.s.re > self.sigma0 && self.s.arg().abs() < FRAC_PI_2 - self.delta
    }
}
