//! Quadratic matrix Lie algebras: structure constants, the invariant form,
//! functions of `ad_X`, the group-level BCH map `Φ_t` and the density `κ_t`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::linalg::{self, AdFunction, Mat, ScaledTaylor};
use crate::{KvError, Result};

pub type Vector = DVector<f64>;

/// Tolerance for every structural identity checked at construction.
pub const STRUCTURE_TOL: f64 = 1e-12;

/// A finite-dimensional Lie algebra given by a basis of square matrices and a
/// nondegenerate invariant symmetric form `Q`.
#[derive(Clone, Debug)]
pub struct QuadraticLieAlgebra {
    name: String,
    basis: Vec<Mat>,
    /// `c[(a * d + b) * d + k]` is the `e_k` coefficient of `[e_a, e_b]`.
    structure: Vec<f64>,
    form: Mat,
    form_inv: Mat,
    domain_radius: f64,
    gram_inv: Mat,
}

/// A point `(X, Y)` of the product `g × g`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointV {
    pub x: Vector,
    pub y: Vector,
}

impl PointV {
    pub fn new(x: Vector, y: Vector) -> Self {
        assert_eq!(x.len(), y.len(), "X and Y must have the same dimension");
        PointV { x, y }
    }

    pub fn zeros(d: usize) -> Self {
        PointV { x: Vector::zeros(d), y: Vector::zeros(d) }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Stacked coordinates `(x, y)` of length `2d`.
    pub fn to_vector(&self) -> Vector {
        let d = self.dim();
        Vector::from_iterator(2 * d, self.x.iter().chain(self.y.iter()).copied())
    }

    pub fn from_vector(v: &Vector) -> Self {
        let d = v.len() / 2;
        PointV { x: v.rows(0, d).into_owned(), y: v.rows(d, d).into_owned() }
    }

    pub fn scaled(&self, t: f64) -> Self {
        PointV { x: &self.x * t, y: &self.y * t }
    }

    pub fn norm(&self) -> f64 {
        self.x.norm().max(self.y.norm())
    }
}

/// JSON description of a custom algebra.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AlgebraDescriptor {
    pub name: String,
    pub basis: Vec<Vec<Vec<f64>>>,
    #[serde(default)]
    pub form: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub domain_radius: Option<f64>,
}

fn max_abs_vec(v: &Vector) -> f64 {
    v.iter().fold(0.0, |a, x| a.max(x.abs()))
}

impl QuadraticLieAlgebra {
    /// Builds the algebra spanned by `basis`. Without an explicit form the
    /// trace form `tr(AB)` is used. Fails if the span is not closed under the
    /// commutator or any of the quadratic-algebra identities is violated.
    pub fn from_basis(name: &str, basis: Vec<Mat>, form: Option<Mat>, domain_radius: f64) -> Result<Self> {
        let d = basis.len();
        if d == 0 {
            return Err(KvError::InvalidAlgebra("empty basis".into()));
        }
        let n = basis[0].nrows();
        if basis.iter().any(|b| b.nrows() != n || b.ncols() != n) {
            return Err(KvError::InvalidAlgebra("basis matrices must be square of equal size".into()));
        }
        if !(domain_radius.is_finite() && domain_radius > 0.0) {
            return Err(KvError::InvalidAlgebra("domain radius must be positive".into()));
        }
        let gram = Mat::from_fn(d, d, |i, j| basis[i].dot(&basis[j]));
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| KvError::InvalidAlgebra("basis matrices are linearly dependent".into()))?;
        let form = form.unwrap_or_else(|| Mat::from_fn(d, d, |i, j| (&basis[i] * &basis[j]).trace()));
        if form.nrows() != d || form.ncols() != d {
            return Err(KvError::InvalidAlgebra("form has the wrong size".into()));
        }
        let form_inv = form
            .clone()
            .try_inverse()
            .ok_or_else(|| KvError::InvalidAlgebra("form is degenerate".into()))?;
        let mut alg = QuadraticLieAlgebra {
            name: name.to_string(),
            basis,
            structure: vec![0.0; d * d * d],
            form,
            form_inv,
            domain_radius,
            gram_inv,
        };
        for a in 0..d {
            for b in 0..d {
                let c = &alg.basis[a] * &alg.basis[b] - &alg.basis[b] * &alg.basis[a];
                let coords = alg.project(&c);
                let resid = &c - alg.embed(&coords);
                let scale = linalg::max_abs(&c).max(1.0);
                if linalg::max_abs(&resid) > STRUCTURE_TOL * scale {
                    return Err(KvError::InvalidAlgebra(format!(
                        "[e{a}, e{b}] leaves the span of the basis"
                    )));
                }
                for k in 0..d {
                    alg.structure[(a * d + b) * d + k] = coords[k];
                }
            }
        }
        alg.validate()?;
        Ok(alg)
    }

    pub fn from_descriptor(desc: &AlgebraDescriptor) -> Result<Self> {
        let basis = desc
            .basis
            .iter()
            .map(|rows| rows_to_matrix(rows))
            .collect::<Result<Vec<_>>>()?;
        let form = desc.form.as_ref().map(|rows| rows_to_matrix(rows)).transpose()?;
        Self::from_basis(&desc.name, basis, form, desc.domain_radius.unwrap_or(0.4))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let desc: AlgebraDescriptor = serde_json::from_str(text)?;
        Self::from_descriptor(&desc)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let q = &self.form;
        let qscale = linalg::max_abs(q).max(1.0);
        if linalg::max_abs(&(q - q.transpose())) > STRUCTURE_TOL * qscale {
            return Err(KvError::InvalidAlgebra("form is not symmetric".into()));
        }
        let e = |i: usize| Vector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 });
        for a in 0..d {
            let ad_a = self.ad_matrix(&e(a));
            if ad_a.trace().abs() > STRUCTURE_TOL * linalg::max_abs(&ad_a).max(1.0) {
                return Err(KvError::InvalidAlgebra("algebra is not unimodular (tr ad ≠ 0)".into()));
            }
            for b in 0..d {
                let ab = self.bracket(&e(a), &e(b));
                let ba = self.bracket(&e(b), &e(a));
                if max_abs_vec(&(&ab + &ba)) > STRUCTURE_TOL {
                    return Err(KvError::InvalidAlgebra("bracket is not antisymmetric".into()));
                }
                for c in 0..d {
                    let inv = self.pairing(&ab, &e(c)) - self.pairing(&e(a), &self.bracket(&e(b), &e(c)));
                    if inv.abs() > STRUCTURE_TOL * qscale {
                        return Err(KvError::InvalidAlgebra("form is not ad-invariant".into()));
                    }
                    let jac = self.bracket(&e(a), &self.bracket(&e(b), &e(c)))
                        + self.bracket(&e(b), &self.bracket(&e(c), &e(a)))
                        + self.bracket(&e(c), &self.bracket(&e(a), &e(b)));
                    if max_abs_vec(&jac) > STRUCTURE_TOL {
                        return Err(KvError::InvalidAlgebra("Jacobi identity fails".into()));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Mat] {
        &self.basis
    }

    pub fn form(&self) -> &Mat {
        &self.form
    }

    pub fn form_inv(&self) -> &Mat {
        &self.form_inv
    }

    pub fn domain_radius(&self) -> f64 {
        self.domain_radius
    }

    pub fn structure_constant(&self, a: usize, b: usize, k: usize) -> f64 {
        let d = self.dim();
        self.structure[(a * d + b) * d + k]
    }

    /// Coordinates of a matrix in the span of the basis (orthogonal projection).
    pub fn project(&self, m: &Mat) -> Vector {
        let rhs = Vector::from_iterator(self.dim(), self.basis.iter().map(|b| b.dot(m)));
        &self.gram_inv * rhs
    }

    pub fn embed(&self, x: &Vector) -> Mat {
        let n = self.basis[0].nrows();
        let mut m = Mat::zeros(n, n);
        for (c, b) in x.iter().zip(&self.basis) {
            m += b * *c;
        }
        m
    }

    pub fn bracket(&self, u: &Vector, v: &Vector) -> Vector {
        let d = self.dim();
        let mut out = Vector::zeros(d);
        for a in 0..d {
            if u[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                let w = u[a] * v[b];
                if w == 0.0 {
                    continue;
                }
                let base = (a * d + b) * d;
                for k in 0..d {
                    out[k] += w * self.structure[base + k];
                }
            }
        }
        out
    }

    pub fn pairing(&self, u: &Vector, v: &Vector) -> f64 {
        u.dot(&(&self.form * v))
    }

    /// Matrix of `ad_X` in the chosen basis: `ad_X v = [X, v]`.
    pub fn ad_matrix(&self, x: &Vector) -> Mat {
        let d = self.dim();
        let mut m = Mat::zeros(d, d);
        for a in 0..d {
            if x[a] == 0.0 {
                continue;
            }
            for b in 0..d {
                for k in 0..d {
                    m[(k, b)] += x[a] * self.structure[(a * d + b) * d + k];
                }
            }
        }
        m
    }

    /// `f(ad_X)` for an analytic function with a removable singularity at 0.
    pub fn analytic_ad(&self, f: AdFunction, x: &Vector) -> Result<Mat> {
        linalg::matrix_function(f, &self.ad_matrix(x))
    }

    /// `Ad_{exp W} = e^{ad_W}`.
    pub fn group_adjoint(&self, w: &Vector) -> Result<Mat> {
        linalg::matrix_exp(&self.ad_matrix(w))
    }

    pub fn exp_group(&self, x: &Vector) -> Result<Mat> {
        linalg::matrix_exp(&self.embed(x))
    }

    /// Whether `(X, Y)` lies in the coordinate domain used for sampling.
    pub fn in_domain(&self, p: &PointV) -> bool {
        p.x.norm() < self.domain_radius && p.y.norm() < self.domain_radius
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<Mat> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(KvError::InvalidAlgebra("matrices must be square".into()));
    }
    Ok(Mat::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn so3() -> QuadraticLieAlgebra {
    let l = |i: usize| {
        Mat::from_fn(3, 3, |j, k| {
            let eps = levi_civita(i, j, k);
            -eps
        })
    };
    QuadraticLieAlgebra::from_basis("so3", vec![l(0), l(1), l(2)], Some(Mat::identity(3, 3)), 0.5)
        .expect("so(3) is a quadratic Lie algebra")
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

pub fn sl2() -> QuadraticLieAlgebra {
    let h = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let e = Mat::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let f = Mat::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    QuadraticLieAlgebra::from_basis("sl2", vec![h, e, f], None, 0.5).expect("sl(2) is a quadratic Lie algebra")
}

pub fn gl2() -> QuadraticLieAlgebra {
    let unit = |i: usize, j: usize| Mat::from_fn(2, 2, |r, c| if r == i && c == j { 1.0 } else { 0.0 });
    QuadraticLieAlgebra::from_basis("gl2", vec![unit(0, 0), unit(0, 1), unit(1, 0), unit(1, 1)], None, 0.4)
        .expect("gl(2) is a quadratic Lie algebra")
}

pub const BUILTIN_NAMES: [&str; 3] = ["so3", "sl2", "gl2"];

pub fn builtin(name: &str) -> Result<QuadraticLieAlgebra> {
    match name {
        "so3" => Ok(so3()),
        "sl2" => Ok(sl2()),
        "gl2" => Ok(gl2()),
        other => Err(KvError::InvalidArgument(format!(
            "unknown algebra '{other}' (expected one of {})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

pub fn builtin_algebras() -> Vec<QuadraticLieAlgebra> {
    vec![so3(), sl2(), gl2()]
}

pub fn ad_matrix(alg: &QuadraticLieAlgebra, x: &Vector) -> Mat {
    alg.ad_matrix(x)
}

pub fn analytic_ad(alg: &QuadraticLieAlgebra, f: AdFunction, x: &Vector) -> Result<Mat> {
    alg.analytic_ad(f, x)
}

/// `J(X) = det((1 - e^{-ad_X})/ad_X)`.
pub fn jacobian_j(alg: &QuadraticLieAlgebra, x: &Vector) -> Result<f64> {
    let j = alg.analytic_ad(AdFunction::Phi1Neg, x)?.determinant();
    if !j.is_finite() {
        return Err(KvError::NonFinite);
    }
    Ok(j)
}

/// `Φ_t(X, Y) = log(e^{tX} e^{tY}) / t`, with `Φ_0 = X + Y`.
pub fn phi_t(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<Vector> {
    if t == 0.0 {
        return Ok(&p.x + &p.y);
    }
    let g = alg.exp_group(&(&p.x * t))? * alg.exp_group(&(&p.y * t))?;
    let log = linalg::matrix_log(&g)?;
    let z = alg.project(&log);
    let resid = linalg::max_abs(&(&log - alg.embed(&z)));
    if resid > 1e-9 * linalg::max_abs(&log).max(1.0) {
        return Err(KvError::Closure { residual: resid });
    }
    Ok(z / t)
}

/// `κ_t = J^{1/2}(tX) J^{1/2}(tY) / J^{1/2}(tΦ_t)`.
pub fn kappa_t(alg: &QuadraticLieAlgebra, t: f64, p: &PointV) -> Result<f64> {
    if t == 0.0 {
        return Ok(1.0);
    }
    let z = phi_t(alg, t, p)?;
    let jx = jacobian_j(alg, &(&p.x * t))?;
    let jy = jacobian_j(alg, &(&p.y * t))?;
    let jz = jacobian_j(alg, &(&z * t))?;
    if jx <= 0.0 || jy <= 0.0 || jz <= 0.0 {
        return Err(KvError::OutsideV("J is not positive".into()));
    }
    Ok((jx * jy / jz).sqrt())
}

/// Evaluates several functions of `ad_X` for one `X`, sharing the powers of
/// `ad_X` when its norm allows a plain Taylor sum.
pub struct AdCalculus<'a> {
    ad: Mat,
    taylor: Option<ScaledTaylor>,
    _alg: std::marker::PhantomData<&'a QuadraticLieAlgebra>,
}

impl<'a> AdCalculus<'a> {
    pub fn new(alg: &'a QuadraticLieAlgebra, x: &Vector) -> Self {
        let ad = alg.ad_matrix(x);
        let taylor = ScaledTaylor::applicable(&ad).then(|| ScaledTaylor::new(&ad));
        AdCalculus { ad, taylor, _alg: std::marker::PhantomData }
    }

    pub fn ad(&self) -> &Mat {
        &self.ad
    }

    /// `f(t ad_X)`.
    pub fn eval(&self, f: AdFunction, t: f64) -> Result<Mat> {
        match (&self.taylor, f) {
            (Some(st), AdFunction::Todd) => st
                .eval(AdFunction::Phi1.taylor_table(), t)
                .try_inverse()
                .ok_or_else(|| KvError::OutsideV("singular (e^s - 1)/s".into())),
            (Some(st), _) => Ok(st.eval(f.taylor_table(), t)),
            (None, _) => linalg::matrix_function(f, &(&self.ad * t)),
        }
    }
}

/// Differential of `Φ_1` at `p` as a `d × 2d` matrix:
/// `dZ = φ(-ad_Z)^{-1} [e^{-ad_Y} φ(-ad_X) dX + φ(-ad_Y) dY]`, `φ(s) = (e^s - 1)/s`.
pub fn phi1_differential(alg: &QuadraticLieAlgebra, p: &PointV) -> Result<Mat> {
    let z = phi_t(alg, 1.0, p)?;
    phi1_differential_at(alg, p, &z)
}

pub fn phi1_differential_at(alg: &QuadraticLieAlgebra, p: &PointV, z: &Vector) -> Result<Mat> {
    let cx = AdCalculus::new(alg, &p.x);
    let cy = AdCalculus::new(alg, &p.y);
    let cz = AdCalculus::new(alg, z);
    phi1_differential_with(alg.dim(), &cx, &cy, &cz)
}

/// [`phi1_differential_at`] from precomputed calculi at `X`, `Y` and `Z = Φ₁`.
pub fn phi1_differential_with(d: usize, cx: &AdCalculus, cy: &AdCalculus, cz: &AdCalculus) -> Result<Mat> {
    let lz = cz.eval(AdFunction::Phi1Neg, 1.0)?;
    let lz_inv = lz
        .try_inverse()
        .ok_or_else(|| KvError::OutsideV("differential of exp is singular at Φ".into()))?;
    let left = &lz_inv * cy.eval(AdFunction::Exp, -1.0)? * cx.eval(AdFunction::Phi1Neg, 1.0)?;
    let right = &lz_inv * cy.eval(AdFunction::Phi1Neg, 1.0)?;
    let mut out = Mat::zeros(d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(&left);
    out.view_mut((0, d), (d, d)).copy_from(&right);
    Ok(out)
}

/// Central finite-difference differential of `Φ_1`; reference for
/// [`phi1_differential`].
pub fn phi1_differential_fd(alg: &QuadraticLieAlgebra, p: &PointV, h: f64) -> Result<Mat> {
    let d = alg.dim();
    let base = p.to_vector();
    let mut out = Mat::zeros(d, 2 * d);
    for j in 0..2 * d {
        let mut plus = base.clone();
        let mut minus = base.clone();
        plus[j] += h;
        minus[j] -= h;
        let zp = phi_t(alg, 1.0, &PointV::from_vector(&plus))?;
        let zm = phi_t(alg, 1.0, &PointV::from_vector(&minus))?;
        out.set_column(j, &((zp - zm) / (2.0 * h)));
    }
    Ok(out)
}
