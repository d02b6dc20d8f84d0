//! Dense matrix functions: exponential, principal logarithm and the
//! entire/meromorphic functions of `ad_X` that appear in the KV equations.

use nalgebra::DMatrix;

use crate::{KvError, Result};

pub type Mat = DMatrix<f64>;

fn check_finite(m: &Mat) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(KvError::NonFinite)
    }
}

pub fn norm1(m: &Mat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0, |acc, v| acc.max(v.abs()))
}

fn solve(a: Mat, b: Mat) -> Result<Mat> {
    let lu = a.lu();
    lu.solve(&b)
        .ok_or_else(|| KvError::OutsideV("singular linear system".into()))
}

// Padé coefficients, Higham (2005).
const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152;

fn pade_low(a: &Mat, b: &[f64]) -> Result<Mat> {
    let n = a.nrows();
    let a2 = a * a;
    let mut pow = Mat::identity(n, n);
    let mut u = Mat::zeros(n, n);
    let mut v = Mat::zeros(n, n);
    for k in (0..b.len()).step_by(2) {
        v += &pow * b[k];
        if k + 1 < b.len() {
            u += &pow * b[k + 1];
        }
        pow = &pow * &a2;
    }
    let u = a * u;
    solve(&v - &u, &v + &u)
}

fn pade13(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let id = Mat::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let b = &B13;
    let w1 = &a6 * b[13] + &a4 * b[11] + &a2 * b[9];
    let w = &a6 * &w1 + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = a * w;
    let z1 = &a6 * b[12] + &a4 * b[10] + &a2 * b[8];
    let v = &a6 * &z1 + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];
    solve(&v - &u, &v + &u)
}

/// `e^M` by scaling and squaring with Padé approximants of degree 3 to 13.
pub fn matrix_exp(m: &Mat) -> Result<Mat> {
    check_finite(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let norm = norm1(m);
    for (deg, theta) in THETA {
        if norm <= theta {
            let b: &[f64] = match deg {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            return pade_low(m, b);
        }
    }
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = m * 2f64.powi(-s);
    let mut r = pade13(&scaled)?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(&r)?;
    Ok(r)
}

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm(m: &Mat) -> Result<Mat> {
    let n = m.nrows();
    let mut y = m.clone();
    let mut z = Mat::identity(n, n);
    for _ in 0..100 {
        let yi = y.clone().try_inverse().ok_or_else(|| KvError::OutsideExpDomain("singular matrix".into()))?;
        let zi = z.clone().try_inverse().ok_or_else(|| KvError::OutsideExpDomain("singular matrix".into()))?;
        let yn = (&y + zi) * 0.5;
        let zn = (&z + yi) * 0.5;
        let delta = max_abs(&(&yn - &y));
        y = yn;
        z = zn;
        if delta <= 1e-15 * max_abs(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(KvError::OutsideExpDomain("square root iteration did not converge".into()))
}

/// Principal logarithm by inverse scaling and squaring: square roots until
/// `|M - I| <= 1/4`, then the series `2 atanh((M - I)(M + I)^{-1})`.
pub fn matrix_log(m: &Mat) -> Result<Mat> {
    check_finite(m)?;
    let n = m.nrows();
    let id = Mat::identity(n, n);
    let scale = max_abs(m).max(1.0);
    for ev in m.complex_eigenvalues().iter() {
        if ev.im.abs() <= 1e-12 * scale && ev.re <= 1e-14 * scale {
            return Err(KvError::OutsideExpDomain(format!(
                "eigenvalue {} on the closed negative real axis",
                ev.re
            )));
        }
    }
    let mut r = m.clone();
    let mut k = 0;
    while norm1(&(&r - &id)) > 0.25 {
        r = sqrtm(&r)?;
        k += 1;
        if k > 64 {
            return Err(KvError::OutsideExpDomain("inverse scaling did not reach |M - I| < 1".into()));
        }
    }
    let c = solve((&r + &id).transpose(), (&r - &id).transpose())?.transpose();
    let c2 = &c * &c;
    let mut term = c.clone();
    let mut sum = c.clone();
    let mut j = 1;
    loop {
        term = &term * &c2;
        j += 2;
        let contrib = &term / j as f64;
        sum += &contrib;
        if max_abs(&contrib) <= 1e-18 * max_abs(&sum).max(1e-300) || j > 201 {
            break;
        }
    }
    Ok(sum * (2.0 * 2f64.powi(k)))
}

/// Scalar functions applied to `ad_X`. All have a removable singularity or
/// are entire at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AdFunction {
    /// `e^s`
    Exp,
    /// `e^s - 1`
    ExpMinusOne,
    /// `1 - e^{-s}`
    OneMinusExpNeg,
    /// `(e^s - 1)/s`, the right Maurer-Cartan pullback
    Phi1,
    /// `(1 - e^{-s})/s`, the left Maurer-Cartan pullback
    Phi1Neg,
    /// `s/(e^s - 1)`, poles at `2πik`, `k ≠ 0`
    Todd,
    /// `sinh(s)/s`
    SinhOverId,
}

impl AdFunction {
    /// Taylor coefficients `c_0..c_order`.
    pub fn taylor(self, order: usize) -> Vec<f64> {
        let mut inv_fact = vec![1.0f64; order + 2];
        for k in 1..order + 2 {
            inv_fact[k] = inv_fact[k - 1] / k as f64;
        }
        let sign = |k: usize| if k % 2 == 0 { 1.0 } else { -1.0 };
        match self {
            AdFunction::Exp => inv_fact[..=order].to_vec(),
            AdFunction::ExpMinusOne => (0..=order).map(|k| if k == 0 { 0.0 } else { inv_fact[k] }).collect(),
            AdFunction::OneMinusExpNeg => (0..=order)
                .map(|k| if k == 0 { 0.0 } else { -sign(k) * inv_fact[k] })
                .collect(),
            AdFunction::Phi1 => (0..=order).map(|k| inv_fact[k + 1]).collect(),
            AdFunction::Phi1Neg => (0..=order).map(|k| sign(k) * inv_fact[k + 1]).collect(),
            AdFunction::SinhOverId => (0..=order)
                .map(|k| if k % 2 == 0 { inv_fact[k + 1] } else { 0.0 })
                .collect(),
            AdFunction::Todd => {
                let phi: Vec<f64> = (0..=order).map(|k| inv_fact[k + 1]).collect();
                let mut g = vec![1.0];
                for k in 1..=order {
                    let s: f64 = (1..=k).map(|j| phi[j] * g[k - j]).sum();
                    g.push(-s);
                }
                g
            }
        }
    }

    /// Taylor coefficients up to [`ScaledTaylor::ORDER`], computed once.
    pub fn taylor_table(self) -> &'static [f64] {
        use std::sync::OnceLock;
        static TABLES: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
        let tables = TABLES.get_or_init(|| Self::ALL.iter().map(|f| f.taylor(ScaledTaylor::ORDER)).collect());
        &tables[Self::ALL.iter().position(|f| *f == self).expect("listed in ALL")]
    }

    pub const ALL: [AdFunction; 7] = [
        AdFunction::Exp,
        AdFunction::ExpMinusOne,
        AdFunction::OneMinusExpNeg,
        AdFunction::Phi1,
        AdFunction::Phi1Neg,
        AdFunction::Todd,
        AdFunction::SinhOverId,
    ];

    pub fn eval_scalar(self, s: f64) -> f64 {
        if s.abs() < 1e-4 {
            return self.taylor(12).iter().rev().fold(0.0, |acc, c| acc * s + c);
        }
        match self {
            AdFunction::Exp => s.exp(),
            AdFunction::ExpMinusOne => s.exp_m1(),
            AdFunction::OneMinusExpNeg => -(-s).exp_m1(),
            AdFunction::Phi1 => s.exp_m1() / s,
            AdFunction::Phi1Neg => -(-s).exp_m1() / s,
            AdFunction::Todd => s / s.exp_m1(),
            AdFunction::SinhOverId => s.sinh() / s,
        }
    }
}

/// Norm below which a truncated Taylor series of order 12 is used directly.
pub const REMOVABLE_THRESHOLD: f64 = 1e-4;
pub const REMOVABLE_ORDER: usize = 12;

fn taylor_eval(coeffs: &[f64], a: &Mat) -> Mat {
    let n = a.nrows();
    let mut out = Mat::identity(n, n) * coeffs[coeffs.len() - 1];
    for c in coeffs.iter().rev().skip(1) {
        out = a * out;
        for i in 0..n {
            out[(i, i)] += c;
        }
    }
    out
}

/// `(e^A - I)/A` from the exponential of the block matrix `[[A, I], [0, 0]]`.
pub fn phi1(a: &Mat) -> Result<Mat> {
    let n = a.nrows();
    let mut big = Mat::zeros(2 * n, 2 * n);
    big.view_mut((0, 0), (n, n)).copy_from(a);
    for i in 0..n {
        big[(i, n + i)] = 1.0;
    }
    let e = matrix_exp(&big)?;
    Ok(e.view((0, n), (n, n)).into_owned())
}

/// `f(A)` for a square matrix. Below [`REMOVABLE_THRESHOLD`] the order-12
/// Taylor polynomial is used; otherwise the value is assembled from `e^A`
/// and `(e^A - I)/A`, neither of which needs `A` to be diagonalizable.
pub fn matrix_function(f: AdFunction, a: &Mat) -> Result<Mat> {
    check_finite(a)?;
    let n = a.nrows();
    if norm1(a) < REMOVABLE_THRESHOLD {
        return Ok(taylor_eval(&f.taylor(REMOVABLE_ORDER), a));
    }
    let id = Mat::identity(n, n);
    Ok(match f {
        AdFunction::Exp => matrix_exp(a)?,
        AdFunction::ExpMinusOne => matrix_exp(a)? - id,
        AdFunction::OneMinusExpNeg => id - matrix_exp(&(-a))?,
        AdFunction::Phi1 => phi1(a)?,
        AdFunction::Phi1Neg => phi1(&(-a))?,
        AdFunction::SinhOverId => (phi1(a)? + phi1(&(-a))?) * 0.5,
        AdFunction::Todd => {
            let p = phi1(a)?;
            let svd = p.clone().svd(false, false);
            let smin = svd.singular_values.min();
            let smax = svd.singular_values.max();
            if smin <= 1e-12 * smax.max(1.0) {
                return Err(KvError::OutsideV(
                    "ad_X has an eigenvalue at a pole of s/(e^s - 1)".into(),
                ));
            }
            p.try_inverse()
                .ok_or_else(|| KvError::OutsideV("singular (e^s - 1)/s".into()))?
        }
    })
}

/// Powers of a fixed matrix, for evaluating many entire functions of `tA`
/// cheaply by Taylor series. Only valid when `|A|` is moderate; see
/// [`ScaledTaylor::applicable`].
pub struct ScaledTaylor {
    powers: Vec<Mat>,
}

impl ScaledTaylor {
    pub const ORDER: usize = 30;
    /// Largest 1-norm for which order-30 Taylor sums reach double precision
    /// for every `t` in [0, 1].
    pub const MAX_NORM: f64 = 1.5;

    pub fn applicable(a: &Mat) -> bool {
        norm1(a) <= Self::MAX_NORM
    }

    pub fn new(a: &Mat) -> Self {
        let n = a.nrows();
        // smallest order with |A|^K / K! below 1e-18 relative to the sum
        let norm = norm1(a);
        let mut order = 1;
        let mut bound = norm;
        while order < Self::ORDER && bound > 1e-18 {
            order += 1;
            bound *= norm / order as f64;
        }
        let mut powers = Vec::with_capacity(order + 1);
        powers.push(Mat::identity(n, n));
        for k in 1..=order {
            let next = &powers[k - 1] * a;
            powers.push(next);
        }
        ScaledTaylor { powers }
    }

    /// `Σ c_k t^k A^k` with the given coefficients.
    pub fn eval(&self, coeffs: &[f64], t: f64) -> Mat {
        let n = self.powers[0].nrows();
        let mut out = Mat::zeros(n, n);
        let mut tk = 1.0;
        for (c, p) in coeffs.iter().zip(&self.powers) {
            if *c != 0.0 {
                let w = c * tk;
                out.zip_apply(p, |o, v| *o += w * v);
            }
            tk *= t;
        }
        out
    }
}
