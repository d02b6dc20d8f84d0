//! Poisson geometry on `V ⊂ g × g`: the product Kirillov structure `P₀`, the
//! Cartan 3-form in the exponential chart, its homotopy 2-form `ϖ`, the
//! cocycle `σ_G = σ + Ψ`, the gauged family `P_t`, the Moser 1-form `α_t`,
//! the Moser vector field `v_t` and the extracted pair `(A, B)`.
//!
//! Conventions. Points of `V` are stacked coordinates `(x, y) ∈ R^{2d}`.
//! A bivector is stored by its components `Π^{ij}` and `P♯(a) = P(a, ·)`, so
//! `P♯` acts on covector columns as `Πᵀ`. A 2-form is stored by `S_{ij}` with
//! `σ(u, v) = uᵀ S v` and `σ♭(u) = σ(·, u)`, i.e. `σ♭ = S`; with this pairing
//! `P_t` has moment map `Φ_t` and `κ_t = λ_t`. Forms are
//! alternating multilinear maps; `dβ(v₀..v_k) = Σ (-1)^i ∂_{v_i} β(.. v̂_i ..)`.
//! The generating vector field of `ξ` is `ξ_M = (-[ξ, X], -[ξ, Y])`.

use nalgebra::DVector;

use crate::linalg::{self, AdFunction, Mat};
use crate::matrix_lie::{phi1_differential_with, phi_t, AdCalculus, PointV, QuadraticLieAlgebra, Vector};
use crate::quadrature::integrate_matrix;
use crate::{KvError, Result};

/// Absolute tolerance of every adaptive quadrature in this module.
pub const QUAD_TOL: f64 = 1e-13;
/// Largest admissible condition number of `1 + σ_t♭ P₀♯`.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct BivectorSample {
    pub at: PointV,
    pub matrix: Mat,
}

impl BivectorSample {
    /// `P♯` as a matrix acting on covector columns.
    pub fn sharp(&self) -> Mat {
        self.matrix.transpose()
    }
}

#[derive(Clone, Debug)]
pub struct TwoFormSample {
    pub at: PointV,
    pub matrix: Mat,
    /// Moment part `Ψ` of the equivariant extension.
    pub moment: Vector,
}

impl TwoFormSample {
    pub fn eval(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.matrix * v))
    }
}

#[derive(Clone, Debug)]
pub struct OneFormSample {
    pub at: PointV,
    pub covector: Vector,
}

/// Value of an equivariant form: the differential-form part evaluated on the
/// given vectors and the lower-degree part evaluated on the parameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivariantValue {
    pub form: f64,
    pub moment: f64,
}

fn antisymmetrize(m: &Mat) -> Mat {
    (m - m.transpose()) * 0.5
}

/// `σ♭` for a 2-form matrix.
pub fn flat(s: &Mat) -> Mat {
    s.clone()
}

fn block_diag(a: &Mat, b: &Mat) -> Mat {
    let d = a.nrows();
    let mut out = Mat::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(a);
    out.view_mut((d, d), (d, d)).copy_from(b);
    out
}

/// Kirillov bivector on one factor: `Π^{ab}(μ) = μ · [e^a, e^b]`, indices
/// raised with `Q⁻¹`.
pub fn kirillov_block(alg: &QuadraticLieAlgebra, mu: &Vector) -> Mat {
    let d = alg.dim();
    let qmu = alg.form() * mu;
    let m = Mat::from_fn(d, d, |c, e| {
        (0..d).map(|k| alg.structure_constant(c, e, k) * qmu[k]).sum::<f64>()
    });
    let qi = alg.form_inv();
    antisymmetrize(&(qi * m * qi))
}

pub fn kirillov_p0(alg: &QuadraticLieAlgebra, p: &PointV) -> BivectorSample {
    BivectorSample {
        at: p.clone(),
        matrix: block_diag(&kirillov_block(alg, &p.x), &kirillov_block(alg, &p.y)),
    }
}

/// `exp^*θ^L` at `X`: `(1 - e^{-ad_X})/ad_X`.
pub fn theta_left(alg: &QuadraticLieAlgebra, x: &Vector) -> Result<Mat> {
    alg.analytic_ad(AdFunction::Phi1Neg, x)
}

/// `exp^*θ^R` at `X`: `(e^{ad_X} - 1)/ad_X`.
pub fn theta_right(alg: &QuadraticLieAlgebra, x: &Vector) -> Result<Mat> {
    alg.analytic_ad(AdFunction::Phi1, x)
}

/// 3-form part of `exp^*η_G` at `X`: `½ θa · [θb, θc]` with `θ = exp^*θ^L`.
pub fn cartan_eta3(alg: &QuadraticLieAlgebra, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Result<f64> {
    let l = theta_left(alg, x)?;
    Ok(0.5 * alg.pairing(&(&l * a), &alg.bracket(&(&l * b), &(&l * c))))
}

/// 1-form part of `exp^*η_G(ξ)` at `X` on `v`: `-½ (θ^L + θ^R) v · ξ`.
pub fn cartan_eta1(alg: &QuadraticLieAlgebra, x: &Vector, v: &Vector, xi: &Vector) -> Result<f64> {
    let s = theta_left(alg, x)? + theta_right(alg, x)?;
    Ok(-0.5 * alg.pairing(&(s * v), xi))
}

/// `exp^*η_G(ξ)` at `X`: the 3-form part on `vectors`, the 1-form part on
/// `vectors[0]`.
pub fn cartan_eta(alg: &QuadraticLieAlgebra, x: &Vector, vectors: [&Vector; 3], xi: &Vector) -> Result<EquivariantValue> {
    Ok(EquivariantValue {
        form: cartan_eta3(alg, x, vectors[0], vectors[1], vectors[2])?,
        moment: cartan_eta1(alg, x, vectors[0], xi)?,
    })
}

/// Matrix `W` of the 2-form part of `ϖ` at `Y`, `ϖ_Y(a, b) = aᵀ W b`, from
/// `∫₀¹ t² η³_{tY}(Y, a, b) dt` by adaptive Gauss-Legendre quadrature.
pub fn varpi_matrix(alg: &QuadraticLieAlgebra, y: &Vector) -> Result<Mat> {
    let calc = AdCalculus::new(alg, y);
    varpi_matrix_with(alg, &calc)
}

fn varpi_matrix_with(alg: &QuadraticLieAlgebra, calc: &AdCalculus) -> Result<Mat> {
    // η³_{tY}(Y, a, b) = ½ Q([Y, F a], F b) with F = θ^L_{tY}, using θ^L_{tY} Y = Y
    let left = calc.ad().transpose() * alg.form();
    let w = integrate_matrix(
        |t| {
            let f = calc.eval(AdFunction::Phi1Neg, t)?;
            Ok(f.transpose() * &left * f * (0.5 * t * t))
        },
        QUAD_TOL,
    )?;
    Ok(antisymmetrize(&w))
}

/// `ϖ_G(ξ)` at `Y`: the 2-form part on `(v1, v2)` and the moment part `-Y·ξ`.
pub fn varpi(alg: &QuadraticLieAlgebra, y: &Vector, v1: &Vector, v2: &Vector, xi: &Vector) -> Result<EquivariantValue> {
    let w = varpi_matrix(alg, y)?;
    Ok(EquivariantValue {
        form: v1.dot(&(w * v2)),
        moment: -alg.pairing(y, xi),
    })
}

/// Matrix of the 2-form part of `σ` at `p`; also returns `Φ₁(p)`.
fn sigma_parts(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<(Mat, Vector)> {
    let d = alg.dim();
    let z = phi_t(alg, 1.0, p)?;
    let cx = AdCalculus::new(alg, &p.x);
    let cy = AdCalculus::new(alg, &p.y);
    let cz = AdCalculus::new(alg, &z);
    let dphi = phi1_differential_with(d, &cx, &cy, &cz)?;
    let mut s = dphi.transpose() * varpi_matrix_with(alg, &cz)? * &dphi;
    let wx = varpi_matrix_with(alg, &cx)?;
    let wy = varpi_matrix_with(alg, &cy)?;
    let cross = cx.eval(AdFunction::Phi1Neg, 1.0)?.transpose() * alg.form() * cy.eval(AdFunction::Phi1, 1.0)? * 0.5;
    {
        let mut b = s.view_mut((0, 0), (d, d));
        b -= &wx;
    }
    {
        let mut b = s.view_mut((d, d), (d, d));
        b -= &wy;
    }
    {
        let mut b = s.view_mut((0, d), (d, d));
        b += &cross;
    }
    {
        let mut b = s.view_mut((d, 0), (d, d));
        b -= cross.transpose();
    }
    Ok((antisymmetrize(&s), z))
}

/// `σ_G = Φ₁^*ϖ_G - ϖ_G¹ - ϖ_G² + ½ (exp^*θ^L)¹ · (exp^*θ^R)²` at `p`. The
/// moment part is `Ψ = Φ₀ - Φ₁`.
pub fn sigma(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<TwoFormSample> {
    let (s, z) = sigma_parts(alg, p)?;
    Ok(TwoFormSample { at: p.clone(), matrix: s, moment: &p.x + &p.y - z })
}

/// `σ_t = t⁻¹ m_t^* σ`, i.e. `t σ_{tp}`.
pub fn sigma_t(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<Mat> {
    Ok(sigma_parts(alg, &p.scaled(t))?.0 * t)
}

/// `1 + σ_t♭ ∘ P₀♯`, checked for positive determinant and bounded condition.
pub fn gauge_operator(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<Mat> {
    let s = sigma_t(alg, t, p)?;
    gauge_operator_from(alg, &s, p)
}

fn gauge_operator_from(alg: &QuadraticLieAlgebra, s_t: &Mat, p: &PointV) -> Result<Mat> {
    let n = s_t.nrows();
    let op = Mat::identity(n, n) + flat(s_t) * kirillov_p0(alg, p).sharp();
    let det = op.determinant();
    if !(det > 0.0) {
        return Err(KvError::OutsideV(format!("det(1 + σ♭P♯) = {det:e} is not positive")));
    }
    let sv = op.clone().svd(false, false).singular_values;
    if sv.max() > MAX_CONDITION * sv.min() {
        return Err(KvError::OutsideV("1 + σ♭P♯ is ill-conditioned".into()));
    }
    Ok(op)
}

fn solve(op: &Mat, rhs: &Mat) -> Result<Mat> {
    op.clone()
        .lu()
        .solve(rhs)
        .ok_or_else(|| KvError::OutsideV("1 + σ♭P♯ is singular".into()))
}

/// `P_t♯ = P₀♯ (1 + σ_t♭ P₀♯)⁻¹`; `t = 0` returns `P₀`.
pub fn gauge_p(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<BivectorSample> {
    let p0 = kirillov_p0(alg, p);
    if t == 0.0 {
        return Ok(p0);
    }
    let op = gauge_operator(alg, t, p)?;
    let n = op.nrows();
    let inv = solve(&op, &Mat::identity(n, n))?;
    let sharp = p0.sharp() * inv;
    Ok(BivectorSample { at: p.clone(), matrix: sharp.transpose() })
}

/// `λ_t = det^{1/2}(1 + σ_t♭ ∘ P₀♯)`.
pub fn lambda_det(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    Ok(gauge_operator(alg, t, p)?.determinant().sqrt())
}

/// Moser 1-form `α_t = h(∂σ_t/∂t)`. Integrating the homotopy operator by
/// parts removes the time derivative:
/// `α_t(p) = ι_p σ_{tp} - ∫₀¹ s ι_p σ_{stp} ds`.
pub fn alpha(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<OneFormSample> {
    Ok(alpha_with_sigma(alg, t, p)?.0)
}

/// `α_t(p)` together with `σ_{tp}`, which the gauge operator also needs.
fn alpha_with_sigma(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<(OneFormSample, Mat)> {
    let pv = p.to_vector();
    let n = pv.len();
    let (s_tp, _) = sigma_parts(alg, &p.scaled(t))?;
    let first = s_tp.transpose() * &pv;
    let tail = if t == 0.0 {
        first.clone() * 0.5
    } else {
        integrate_matrix(
            |s| {
                let (m, _) = sigma_parts(alg, &p.scaled(s * t))?;
                let c = m.transpose() * &pv * s;
                Ok(Mat::from_column_slice(c.len(), 1, c.as_slice()))
            },
            QUAD_TOL,
        )?
        .column(0)
        .into_owned()
    };
    debug_assert_eq!(tail.len(), n);
    Ok((OneFormSample { at: p.clone(), covector: first - tail }, s_tp))
}

/// Reference route for `α_t`: central differences of `σ_t` in `t` (one-sided
/// second order at the ends of [0, 1]) followed by the homotopy operator.
pub fn alpha_fd(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, h: f64) -> Result<OneFormSample> {
    let pv = p.to_vector();
    let dsigma = |q: &PointV| -> Result<Mat> {
        let f = |tt: f64| sigma_t(alg, tt, q);
        if t - h < 0.0 {
            Ok((f(t)? * -3.0 + f(t + h)? * 4.0 - f(t + 2.0 * h)?) / (2.0 * h))
        } else if t + h > 1.0 {
            Ok((f(t)? * 3.0 - f(t - h)? * 4.0 + f(t - 2.0 * h)?) / (2.0 * h))
        } else {
            Ok((f(t + h)? - f(t - h)?) / (2.0 * h))
        }
    };
    let cov = integrate_matrix(
        |s| {
            let q = p.scaled(s);
            let c = dsigma(&q)?.transpose() * &pv * s;
            Ok(Mat::from_column_slice(c.len(), 1, c.as_slice()))
        },
        1e-11,
    )?;
    Ok(OneFormSample { at: p.clone(), covector: cov.column(0).into_owned() })
}

/// Moser vector field `v_t = P_t♯ α_t`.
pub fn moser_v(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<Vector> {
    let (a, s_tp) = alpha_with_sigma(alg, t, p)?;
    let p0 = kirillov_p0(alg, p).sharp();
    if t == 0.0 {
        return Ok(p0 * a.covector);
    }
    let op = gauge_operator_from(alg, &(s_tp * t), p)?;
    let c = solve(&op, &Mat::from_column_slice(a.covector.len(), 1, a.covector.as_slice()))?;
    Ok(p0 * c.column(0))
}

/// `(1 + σ₁♭ P₀♯)⁻¹ α₁ = A·dX + B·dY`, with `A, B` obtained by raising the
/// two covector blocks with `Q⁻¹`.
pub fn extract_ab(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<(Vector, Vector)> {
    let d = alg.dim();
    let (a, s_p) = alpha_with_sigma(alg, 1.0, p)?;
    let op = gauge_operator_from(alg, &s_p, p)?;
    let c = solve(&op, &Mat::from_column_slice(2 * d, 1, a.covector.as_slice()))?;
    let c = c.column(0);
    let qi = alg.form_inv();
    Ok((qi * c.rows(0, d), qi * c.rows(d, d)))
}

/// Maximum norm of
/// `log(e^Y e^X) - X - Y - (1 - e^{-ad_X}) A - (e^{ad_Y} - 1) B`.
pub fn eq1_numeric_residual(alg: &QuadraticLieAlgebra, p: &PointV, a: &Vector, b: &Vector) -> Result<f64> {
    let swapped = PointV::new(p.y.clone(), p.x.clone());
    let lhs = phi_t(alg, 1.0, &swapped)? - &p.x - &p.y;
    let rhs = alg.analytic_ad(AdFunction::OneMinusExpNeg, &p.x)? * a
        + alg.analytic_ad(AdFunction::ExpMinusOne, &p.y)? * b;
    Ok(max_abs(&(lhs - rhs)))
}

pub fn max_abs(v: &Vector) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Step for a central difference along a coordinate of size `c`.
pub fn fd_step(base: f64, c: f64) -> f64 {
    base * (1.0 + c.abs())
}

/// Jacobian of a vector-valued map by central differences, with coordinate
/// steps `h·(1 + |z_j|)`.
pub fn jacobian_fd<F>(f: F, z: &Vector, h: f64) -> Result<Mat>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let mut cols = Vec::with_capacity(z.len());
    for j in 0..z.len() {
        let hj = fd_step(h, z[j]);
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += hj;
        zm[j] -= hj;
        cols.push((f(&zp)? - f(&zm)?) / (2.0 * hj));
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(Mat::from_fn(m, z.len(), |i, j| cols[j][i]))
}

/// Left side minus right side of the second KV equation at `p`, with the
/// δ-derivatives of `A, B` taken by central differences of step `h`.
pub fn kv2_numeric_residual_with(alg: &QuadraticLieAlgebra, p: &PointV, h: f64) -> Result<f64> {
    let d = alg.dim();
    let ab = |z: &Vector| -> Result<Vector> {
        let (a, b) = extract_ab(alg, &PointV::from_vector(z))?;
        Ok(Vector::from_iterator(2 * d, a.iter().chain(b.iter()).copied()))
    };
    let mut lhs = 0.0;
    let z = p.to_vector();
    for j in 0..2 * d {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        let col = (ab(&zp)? - ab(&zm)?) / (2.0 * h);
        // column j of δ_X A (j < d) or δ_Y B (j ≥ d), traced against ad
        let (ad, part) = if j < d {
            (alg.ad_matrix(&p.x), col.rows(0, d).into_owned())
        } else {
            (alg.ad_matrix(&p.y), col.rows(d, d).into_owned())
        };
        lhs += ad.row(j % d).dot(&part.transpose());
    }
    let z1 = phi_t(alg, 1.0, p)?;
    let g = |v: &Vector| -> Result<f64> { Ok(alg.analytic_ad(AdFunction::Todd, v)?.trace()) };
    let rhs = -0.5 * (g(&p.x)? + g(&p.y)? - g(&z1)? - d as f64);
    Ok((lhs - rhs).abs())
}

/// Finite-difference step used by [`kv2_numeric_residual`].
pub const KV2_FD_STEP: f64 = 1e-5;

pub fn kv2_numeric_residual(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<f64> {
    kv2_numeric_residual_with(alg, p, KV2_FD_STEP)
}

/// Modular vector field of a bivector field with respect to Lebesgue measure,
/// `w_k = Σ_j ∂_j Π^{kj}`, by central differences.
pub fn modular_field_of<F>(bivector: F, z: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<Mat>,
{
    let n = z.len();
    let mut w = Vector::zeros(n);
    for j in 0..n {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[j] += h;
        zm[j] -= h;
        let dp = (bivector(&zp)? - bivector(&zm)?) / (2.0 * h);
        for k in 0..n {
            w[k] += dp[(k, j)];
        }
    }
    Ok(w)
}

/// Modular vector field of `P₀` for the translation-invariant volume.
pub fn modular_field(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<Vector> {
    modular_field_of(|z| Ok(kirillov_p0(alg, &PointV::from_vector(z)).matrix), &p.to_vector(), 1e-4)
}

/// Largest component of the Schouten bracket `[P, P]^{ijk} = Σ_l Π^{li} ∂_l Π^{jk} + cyclic`.
pub fn schouten_residual<F>(bivector: F, z: &Vector, h: f64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Mat>,
{
    let n = z.len();
    let pi = bivector(z)?;
    let mut grads = Vec::with_capacity(n);
    for l in 0..n {
        let mut zp = z.clone();
        let mut zm = z.clone();
        zp[l] += h;
        zm[l] -= h;
        grads.push((bivector(&zp)? - bivector(&zm)?) / (2.0 * h));
    }
    let term = |i: usize, j: usize, k: usize| (0..n).map(|l| pi[(l, i)] * grads[l][(j, k)]).sum::<f64>();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let v = term(i, j, k) + term(j, k, i) + term(k, i, j);
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Jacobi residual of `P_t` at `p`.
pub fn jacobi_residual(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, h: f64) -> Result<f64> {
    schouten_residual(|z| Ok(gauge_p(alg, t, &PointV::from_vector(z))?.matrix), &p.to_vector(), h)
}

/// Generating vector field `ξ_M(p) = (-[ξ, X], -[ξ, Y])`.
pub fn generating_field(alg: &QuadraticLieAlgebra, xi: &Vector, p: &PointV) -> Vector {
    PointV::new(-alg.bracket(xi, &p.x), -alg.bracket(xi, &p.y)).to_vector()
}

/// `|ξ_M - P_t♯ d⟨Φ_t, ξ⟩|` with the differential of `Φ_t` by central
/// differences.
pub fn moment_map_residual(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, xi: &Vector) -> Result<f64> {
    let dphi = jacobian_fd(|z| phi_t(alg, t, &PointV::from_vector(z)), &p.to_vector(), 1e-5)?;
    let dh = dphi.transpose() * (alg.form() * xi);
    let v = gauge_p(alg, t, p)?.sharp() * dh;
    Ok(max_abs(&(generating_field(alg, xi, p) - v)))
}

/// `dβ(u, v)` for a 1-form field given by its covector, by central differences.
pub fn d_one_form<F>(beta: F, z: &Vector, u: &Vector, v: &Vector, h: f64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let dir = |w: &Vector| -> Result<Vector> { Ok((beta(&(z + w * h))? - beta(&(z - w * h))?) / (2.0 * h)) };
    Ok(dir(u)?.dot(v) - dir(v)?.dot(u))
}

/// `dβ(u, v, w)` for a 2-form field given by its matrix, by central differences.
pub fn d_two_form<F>(beta: F, z: &Vector, u: &Vector, v: &Vector, w: &Vector, h: f64) -> Result<f64>
where
    F: Fn(&Vector) -> Result<Mat>,
{
    let dir = |e: &Vector| -> Result<Mat> { Ok((beta(&(z + e * h))? - beta(&(z - e * h))?) / (2.0 * h)) };
    let q = |m: &Mat, a: &Vector, b: &Vector| a.dot(&(m * b));
    Ok(q(&dir(u)?, v, w) - q(&dir(v)?, u, w) + q(&dir(w)?, u, v))
}

/// Residuals of `d_G ϖ_G = exp^*η_G` at `Y`: the 3-form part
/// `dϖ(a, b, c) - η³(a, b, c)` and the 1-form part
/// `-d(Y·ξ)(a) - ϖ(ξ_M, a) - η¹(ξ)(a)`.
pub fn varpi_homotopy_residual(
    alg: &QuadraticLieAlgebra,
    y: &Vector,
    abc: [&Vector; 3],
    xi: &Vector,
    h: f64,
) -> Result<(f64, f64)> {
    let [a, b, c] = abc;
    let dw = d_two_form(|z| varpi_matrix(alg, z), y, a, b, c, h)?;
    let three = dw - cartan_eta3(alg, y, a, b, c)?;
    let xi_m = -alg.bracket(xi, y);
    let w = varpi_matrix(alg, y)?;
    let one = -alg.pairing(a, xi) - xi_m.dot(&(w * a)) - cartan_eta1(alg, y, a, xi)?;
    Ok((three, one))
}

/// Residuals of `d_G σ_G = 0` at `p` along `u, v, w`: `dσ(u, v, w)` and
/// `d⟨Ψ, ξ⟩(u) - σ(ξ_M, u)`.
pub fn sigma_cocycle_residual(
    alg: &QuadraticLieAlgebra,
    p: &PointV,
    uvw: [&Vector; 3],
    xi: &Vector,
    h: f64,
) -> Result<(f64, f64)> {
    let z = p.to_vector();
    let [u, v, w] = uvw;
    let sig = |q: &Vector| Ok(sigma(alg, &PointV::from_vector(q))?.matrix);
    let ds = d_two_form(sig, &z, u, v, w, h)?;
    let psi = |q: &Vector| -> Result<f64> { Ok(alg.pairing(&sigma(alg, &PointV::from_vector(q))?.moment, xi)) };
    let dpsi = (psi(&(&z + u * h))? - psi(&(&z - u * h))?) / (2.0 * h);
    let s = sigma(alg, p)?;
    let xi_m = generating_field(alg, xi, p);
    Ok((ds, dpsi - s.eval(&xi_m, u)))
}

/// `dα_t(u, v) - ∂σ_t/∂t(u, v)` at `p`.
pub fn alpha_homotopy_residual(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, u: &Vector, v: &Vector, h: f64) -> Result<f64> {
    let da = d_one_form(|z| Ok(alpha(alg, t, &PointV::from_vector(z))?.covector), &p.to_vector(), u, v, h)?;
    let ds = if t - h < 0.0 {
        (sigma_t(alg, t + h, p)? * 4.0 - sigma_t(alg, t + 2.0 * h, p)? - sigma_t(alg, t, p)? * 3.0) / (2.0 * h)
    } else if t + h > 1.0 {
        (sigma_t(alg, t, p)? * 3.0 - sigma_t(alg, t - h, p)? * 4.0 + sigma_t(alg, t - 2.0 * h, p)?) / (2.0 * h)
    } else {
        (sigma_t(alg, t + h, p)? - sigma_t(alg, t - h, p)?) / (2.0 * h)
    };
    Ok(da - u.dot(&(ds * v)))
}

/// `d/dt Φ_t(p(t))` along `p' = v_t`, by a central difference in `t` of step `h`.
pub fn transport_residual(alg: &QuadraticLieAlgebra, t: f64, p: &PointV, h: f64) -> Result<f64> {
    let v = moser_v(alg, t, p)?;
    let z = p.to_vector();
    let fwd = phi_t(alg, t + h, &PointV::from_vector(&(&z + &v * h)))?;
    let bwd = phi_t(alg, t - h, &PointV::from_vector(&(&z - &v * h)))?;
    Ok(max_abs(&((fwd - bwd) / (2.0 * h))))
}

/// `A(Ad_g X, Ad_g Y) - Ad_g A(X, Y)` and the same for `B`, with
/// `Ad_g = e^{ad_W}`. Returns the larger maximum norm.
pub fn equivariance_residual(alg: &QuadraticLieAlgebra, p: &PointV, w: &Vector) -> Result<f64> {
    let g = alg.group_adjoint(w)?;
    let (a, b) = extract_ab(alg, p)?;
    let moved = PointV::new(&g * &p.x, &g * &p.y);
    let (ga, gb) = extract_ab(alg, &moved)?;
    Ok(max_abs(&(ga - &g * a)).max(max_abs(&(gb - &g * b))))
}

/// Rank of a matrix with relative singular-value cutoff.
pub fn numeric_rank(m: &Mat, rel: f64) -> usize {
    let sv = m.clone().svd(false, false).singular_values;
    let top = sv.max();
    sv.iter().filter(|s| **s > rel * top.max(1e-300)).count()
}

/// Distance of the columns of `b` from the column space of `a`.
pub fn column_space_defect(a: &Mat, b: &Mat) -> f64 {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let top = svd.singular_values.max();
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > 1e-10 * top.max(1e-300))
        .collect();
    let basis = Mat::from_fn(u.nrows(), keep.len(), |i, j| u[(i, keep[j])]);
    let proj = &basis * (basis.transpose() * b);
    linalg::max_abs(&(b - proj))
}

/// Convenience constructor from slices.
pub fn point(x: &[f64], y: &[f64]) -> PointV {
    PointV::new(DVector::from_column_slice(x), DVector::from_column_slice(y))
}
