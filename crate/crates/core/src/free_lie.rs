//! The free Lie algebra on `X`, `Y` in the Lyndon basis, with exact
//! coefficients, and the Campbell-Hausdorff series.
//!
//! A Lyndon word `w` stands for its standard bracketing `P_w`
//! (`P_x = X`, `P_{uv} = [P_u, P_v]` for the standard factorization). Every
//! computation goes through the free associative algebra: `P_w` expands as
//! `w` plus lexicographically larger words of the same length, so an
//! associative Lie polynomial is rewritten in the basis by repeatedly peeling
//! off its smallest word.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::assoc::{exp_coeffs, log1p_coeffs, AssocSeries};
use crate::rational::{self, Rational};
use crate::word::{Word, X, Y};
use crate::{KvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Generator {
    X,
    Y,
}

impl Generator {
    pub fn letter(self) -> u8 {
        match self {
            Generator::X => X,
            Generator::Y => Y,
        }
    }
}

/// Which product the Campbell-Hausdorff series takes the logarithm of.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BchOrder {
    /// `log(e^X e^Y)`
    XY,
    /// `log(e^Y e^X)`
    YX,
}

impl std::str::FromStr for BchOrder {
    type Err = KvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "XY" | "xy" => Ok(BchOrder::XY),
            "YX" | "yx" => Ok(BchOrder::YX),
            _ => Err(KvError::Parse(format!("order must be XY or YX, got {s:?}"))),
        }
    }
}

impl std::fmt::Display for BchOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            BchOrder::XY => "XY",
            BchOrder::YX => "YX",
        })
    }
}

/// One `{word, c}` entry of a serialized series.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoeffEntry {
    pub word: String,
    pub c: String,
}

/// Lie series truncated at `degree`, stored as Lyndon-word coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieSeries {
    degree: usize,
    coeffs: BTreeMap<Word, Rational>,
}

impl LieSeries {
    pub fn zero(degree: usize) -> Self {
        LieSeries {
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn generator(g: Generator, degree: usize) -> Self {
        Self::basis(Word::letter(g.letter()), degree)
    }

    /// The basis element `P_w` of a Lyndon word.
    pub fn basis(w: Word, degree: usize) -> Self {
        debug_assert!(w.is_lyndon(), "{w:?} is not Lyndon");
        let mut s = Self::zero(degree);
        s.add_term(w, Rational::one());
        s
    }

    pub fn from_terms(degree: usize, terms: impl IntoIterator<Item = (Word, Rational)>) -> Result<Self> {
        let mut s = Self::zero(degree);
        for (w, c) in terms {
            if !w.is_lyndon() {
                return Err(KvError::Parse(format!("{w:?} is not a Lyndon word")));
            }
            s.add_term(w, c);
        }
        Ok(s)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, w: &Word) -> Rational {
        self.coeffs.get(w).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.coeffs.iter()
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn add_term(&mut self, w: Word, c: Rational) {
        if w.len() > self.degree || c.is_zero() {
            return;
        }
        let e = self.coeffs.entry(w.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&w);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(self.degree.min(other.degree));
        for (w, c) in &other.coeffs {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.degree);
        }
        LieSeries {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
        }
    }

    pub fn truncate(&self, degree: usize) -> Self {
        LieSeries {
            degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() <= degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of total degree `d`.
    pub fn component(&self, d: usize) -> Self {
        LieSeries {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() == d)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Expansion in the free associative algebra.
    pub fn to_assoc(&self) -> AssocSeries {
        let mut out = AssocSeries::zero(self.degree);
        for (w, c) in &self.coeffs {
            for (u, cu) in lyndon_expansion(w).terms() {
                out.add_term(u.clone(), cu * c);
            }
        }
        out
    }

    /// Rewrites an associative Lie polynomial in the Lyndon basis. Fails if
    /// `p` is not a Lie element.
    pub fn from_assoc(p: &AssocSeries, degree: usize) -> Result<Self> {
        let mut rest = p.truncate(degree);
        let mut out = Self::zero(degree);
        if !rest.constant_term().is_zero() {
            return Err(KvError::InvalidArgument("Lie series cannot have a constant term".into()));
        }
        // the map is graded-lex ordered, so the first key is the smallest word
        // of the lowest degree still present
        loop {
            let first = rest.terms().next().map(|(w, c)| (w.clone(), c.clone()));
            let Some((w, c)) = first else { break };
            if !w.is_lyndon() {
                return Err(KvError::InvalidArgument(format!(
                    "not a Lie element: leading word {w:?} is not Lyndon"
                )));
            }
            for (u, cu) in lyndon_expansion(&w).terms() {
                rest.add_term(u.clone(), -(cu * &c));
            }
            out.add_term(w, c);
        }
        Ok(out)
    }

    /// Lowest degree with a nonzero coefficient.
    pub fn min_degree(&self) -> Option<usize> {
        self.coeffs.keys().next().map(Word::len)
    }

    /// The endomorphism exchanging `X` and `Y`.
    pub fn swap_generators(&self) -> Self {
        let p = self.to_assoc().map_letters(|c| match c {
            X => Y,
            Y => X,
            other => other,
        });
        Self::from_assoc(&p, self.degree).expect("swap preserves Lie elements")
    }

    /// Evaluates the series in a concrete Lie algebra. `gen` gives the value
    /// of each letter, `bracket` the Lie bracket and `axpy(acc, c, v)` adds
    /// `c * v` to `acc`.
    pub fn evaluate_with<E: Clone>(
        &self,
        gen: impl Fn(u8) -> E,
        bracket: impl Fn(&E, &E) -> E,
        zero: E,
        axpy: impl Fn(&mut E, &Rational, &E),
    ) -> E {
        let mut memo: HashMap<Word, E> = HashMap::new();
        fn value<E: Clone>(
            w: &Word,
            memo: &mut HashMap<Word, E>,
            gen: &dyn Fn(u8) -> E,
            bracket: &dyn Fn(&E, &E) -> E,
        ) -> E {
            if let Some(v) = memo.get(w) {
                return v.clone();
            }
            let v = match w.standard_factorization() {
                None => gen(w.letters()[0]),
                Some((u, v)) => {
                    let a = value(&u, memo, gen, bracket);
                    let b = value(&v, memo, gen, bracket);
                    bracket(&a, &b)
                }
            };
            memo.insert(w.clone(), v.clone());
            v
        }
        let mut acc = zero;
        for (w, c) in &self.coeffs {
            let v = value(w, &mut memo, &gen, &bracket);
            axpy(&mut acc, c, &v);
        }
        acc
    }

    pub fn to_coeff_list(&self) -> Vec<CoeffEntry> {
        self.coeffs
            .iter()
            .map(|(w, c)| CoeffEntry {
                word: w.as_str().to_string(),
                c: rational::format(c),
            })
            .collect()
    }

    pub fn from_coeff_list(degree: usize, entries: &[CoeffEntry]) -> Result<Self> {
        let terms = entries
            .iter()
            .map(|e| Ok((Word::parse(&e.word)?, rational::parse(&e.c)?)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_terms(degree, terms)
    }
}

impl std::fmt::Display for LieSeries {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        for (i, (w, c)) in self.coeffs.iter().enumerate() {
            if i > 0 {
                f.write_str(" + ")?;
            }
            write!(f, "({})·{}", rational::format(c), w)?;
        }
        Ok(())
    }
}

fn expansion_cache() -> &'static Mutex<HashMap<Word, Arc<AssocSeries>>> {
    static CACHE: OnceLock<Mutex<HashMap<Word, Arc<AssocSeries>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Associative expansion of the standard bracketing of a Lyndon word.
pub fn lyndon_expansion(w: &Word) -> Arc<AssocSeries> {
    if let Some(p) = expansion_cache().lock().expect("cache poisoned").get(w) {
        return p.clone();
    }
    let p = match w.standard_factorization() {
        None => AssocSeries::monomial(w.len(), w.clone(), Rational::one()),
        Some((u, v)) => {
            let pu = lyndon_expansion(&u);
            let pv = lyndon_expansion(&v);
            let n = w.len();
            let pu = pu.truncate(n);
            let pv = pv.truncate(n);
            pu.commutator(&pv)
        }
    };
    let p = Arc::new(p);
    expansion_cache()
        .lock()
        .expect("cache poisoned")
        .insert(w.clone(), p.clone());
    p
}

/// Lie bracket truncated at degree `n`.
pub fn lie_bracket(s1: &LieSeries, s2: &LieSeries, n: usize) -> LieSeries {
    let a = s1.truncate(n).to_assoc().truncate(n);
    let b = s2.truncate(n).to_assoc().truncate(n);
    LieSeries::from_assoc(&a.commutator(&b), n).expect("bracket of Lie elements is Lie")
}

/// `Σ_k f_k (ad_g)^k target`, truncated at degree `n`.
pub fn ad_series_apply(f: &[Rational], direction: Generator, target: &LieSeries, n: usize) -> LieSeries {
    let g = AssocSeries::letter(n, direction.letter());
    let mut cur = target.truncate(n).to_assoc().truncate(n);
    let mut out = AssocSeries::zero(n);
    for (k, fk) in f.iter().enumerate().take(n + 1) {
        if k > 0 {
            cur = g.commutator(&cur);
        }
        if cur.is_zero() {
            break;
        }
        if !fk.is_zero() {
            out = &out + &cur.scale(fk);
        }
    }
    LieSeries::from_assoc(&out, n).expect("ad-series of a Lie element is Lie")
}

fn bch_cache() -> &'static Mutex<HashMap<(usize, BchOrder), LieSeries>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, BchOrder), LieSeries>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Campbell-Hausdorff series truncated at degree `n`, computed as
/// `log(exp · exp)` in the truncated free associative algebra.
pub fn bch(n: usize, order: BchOrder) -> LieSeries {
    if let Some(s) = bch_cache().lock().expect("cache poisoned").get(&(n, order)) {
        return s.clone();
    }
    let x = AssocSeries::letter(n, X);
    let y = AssocSeries::letter(n, Y);
    let (first, second) = match order {
        BchOrder::XY => (x, y),
        BchOrder::YX => (y, x),
    };
    let e = exp_coeffs(n);
    let prod = first.compose(&e).mul_trunc(&second.compose(&e));
    let w = &prod - &AssocSeries::one(n);
    let log = w.compose(&log1p_coeffs(n));
    let s = LieSeries::from_assoc(&log, n).expect("BCH series is a Lie element");
    bch_cache()
        .lock()
        .expect("cache poisoned")
        .insert((n, order), s.clone());
    s
}

/// `m_t^*` on series: a word of degree `d` picks up `t^d`.
pub fn rescale(s: &LieSeries, t: &Rational) -> LieSeries {
    LieSeries {
        degree: s.degree,
        coeffs: s
            .coeffs
            .iter()
            .map(|(w, c)| (w.clone(), c * rational::pow(t, w.len())))
            .filter(|(_, c)| !c.is_zero())
            .collect(),
    }
}

/// `(1/t) m_t^*`: a word of degree `d` picks up `t^(d-1)`. Well defined at
/// `t = 0`, where only the linear part survives.
pub fn rescale_normalized(s: &LieSeries, t: &Rational) -> LieSeries {
    LieSeries {
        degree: s.degree,
        coeffs: s
            .coeffs
            .iter()
            .map(|(w, c)| (w.clone(), c * rational::pow(t, w.len() - 1)))
            .filter(|(_, c)| !c.is_zero())
            .collect(),
    }
}

/// Taylor coefficients `1 - e^{-s}` up to `s^n`.
pub fn one_minus_exp_neg(n: usize) -> Vec<Rational> {
    (0..=n)
        .map(|k| {
            if k == 0 {
                Rational::zero()
            } else if k % 2 == 1 {
                rational::inv_factorial(k)
            } else {
                -rational::inv_factorial(k)
            }
        })
        .collect()
}

/// Taylor coefficients of `e^s - 1` up to `s^n`.
pub fn exp_minus_one(n: usize) -> Vec<Rational> {
    (0..=n)
        .map(|k| if k == 0 { Rational::zero() } else { rational::inv_factorial(k) })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::word::lyndon_basis;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    fn gx(n: usize) -> LieSeries {
        LieSeries::generator(Generator::X, n)
    }

    fn gy(n: usize) -> LieSeries {
        LieSeries::generator(Generator::Y, n)
    }

    /// Rational n×n matrices for the evaluation oracle.
    type RMat = Vec<Vec<Rational>>;

    fn rmul(a: &RMat, b: &RMat) -> RMat {
        let n = a.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| (0..n).fold(Rational::zero(), |acc, k| acc + &a[i][k] * &b[k][j]))
                    .collect()
            })
            .collect()
    }

    fn rcomm(a: &RMat, b: &RMat) -> RMat {
        let ab = rmul(a, b);
        let ba = rmul(b, a);
        ab.iter()
            .zip(&ba)
            .map(|(r, s)| r.iter().zip(s).map(|(u, v)| u - v).collect())
            .collect()
    }

    fn strict_upper(n: usize, seed: i64) -> RMat {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if j > i {
                            ratio(((seed * 7 + (i * 5 + j * 3) as i64) % 11) - 5, 1 + (i + j) as i64 % 3)
                        } else {
                            Rational::zero()
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn eval(s: &LieSeries, a: &RMat, b: &RMat) -> RMat {
        let n = a.len();
        s.evaluate_with(
            |c| if c == X { a.clone() } else { b.clone() },
            rcomm,
            vec![vec![Rational::zero(); n]; n],
            |acc, c, v| {
                for i in 0..n {
                    for j in 0..n {
                        acc[i][j] += c * &v[i][j];
                    }
                }
            },
        )
    }

    #[test]
    fn bracket_basics() {
        assert!(lie_bracket(&gx(3), &gx(3), 3).is_zero());
        let xy = lie_bracket(&gx(3), &gy(3), 3);
        assert_eq!(xy, LieSeries::basis(w("xy"), 3));
        // [Y,[X,Y]] = -[[X,Y],Y] = -P_xyy
        let yxy = lie_bracket(&gy(3), &xy, 3);
        assert_eq!(yxy, LieSeries::basis(w("xyy"), 3).scale(&int(-1)));
    }

    #[test]
    fn bracket_matches_matrix_oracle() {
        let a = strict_upper(4, 1);
        let b = strict_upper(4, 2);
        let xy = lie_bracket(&gx(3), &gy(3), 3);
        let yxy = lie_bracket(&gy(3), &xy, 3);
        assert_eq!(eval(&yxy, &a, &b), rcomm(&b, &rcomm(&a, &b)));
    }

    #[test]
    fn ad_series_examples() {
        let id = vec![int(0), int(1)];
        assert_eq!(ad_series_apply(&id, Generator::X, &gy(3), 3), LieSeries::basis(w("xy"), 3));
        assert!(ad_series_apply(&one_minus_exp_neg(3), Generator::X, &gx(3), 3).is_zero());
        let r = ad_series_apply(&one_minus_exp_neg(3), Generator::X, &gy(3), 3);
        // [X,Y] - 1/2 [X,[X,Y]] = P_xy - 1/2 P_xxy
        let expect = LieSeries::from_terms(3, [(w("xy"), int(1)), (w("xxy"), ratio(-1, 2))]).unwrap();
        assert_eq!(r, expect);
    }

    #[test]
    fn bch_low_degrees() {
        let b1 = bch(1, BchOrder::XY);
        assert_eq!(b1, gx(1).add(&gy(1)));
        let b2 = bch(2, BchOrder::XY);
        assert_eq!(b2.coeff(&w("xy")), ratio(1, 2));
        let b3 = bch(3, BchOrder::XY);
        assert_eq!(b3.coeff(&w("xxy")), ratio(1, 12));
        assert_eq!(b3.coeff(&w("xyy")), ratio(1, 12));
        let b2yx = bch(2, BchOrder::YX);
        assert_eq!(b2yx.coeff(&w("xy")), ratio(-1, 2));
    }

    #[test]
    fn bch_matches_nilpotent_oracle() {
        // 5x5 strictly upper-triangular: words of degree >= 5 vanish
        let n = 5;
        let a = strict_upper(n, 3);
        let b = strict_upper(n, 4);
        let exp = |m: &RMat| {
            let mut out: RMat = (0..n)
                .map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect())
                .collect();
            let mut p = out.clone();
            for k in 1..n {
                p = rmul(&p, m);
                let f = rational::inv_factorial(k);
                for i in 0..n {
                    for j in 0..n {
                        out[i][j] += &f * &p[i][j];
                    }
                }
            }
            out
        };
        let prod = rmul(&exp(&a), &exp(&b));
        let mut wm = prod.clone();
        for i in 0..n {
            wm[i][i] -= int(1);
        }
        let mut log = vec![vec![int(0); n]; n];
        let mut p: RMat = (0..n)
            .map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect())
            .collect();
        for k in 1..n {
            p = rmul(&p, &wm);
            let c = if k % 2 == 1 { ratio(1, k as i64) } else { ratio(-1, k as i64) };
            for i in 0..n {
                for j in 0..n {
                    log[i][j] += &c * &p[i][j];
                }
            }
        }
        assert_eq!(eval(&bch(n - 1, BchOrder::XY), &a, &b), log);
    }

    #[test]
    fn rescale_examples() {
        let b = bch(4, BchOrder::XY);
        assert_eq!(rescale(&b, &int(1)), b);
        assert_eq!(rescale_normalized(&b, &int(0)), gx(4).add(&gy(4)));
        let half_xy = LieSeries::basis(w("xy"), 2).scale(&ratio(1, 2));
        assert_eq!(rescale(&half_xy, &ratio(1, 2)), LieSeries::basis(w("xy"), 2).scale(&ratio(1, 8)));
    }

    #[test]
    fn bch_symmetries() {
        let n = 7;
        let xy = bch(n, BchOrder::XY);
        let yx = bch(n, BchOrder::YX);
        assert_eq!(xy.swap_generators(), yx);
        // -Z_YX(-X,-Y) = Z_XY(X,Y)
        assert_eq!(rescale(&yx, &int(-1)).scale(&int(-1)), xy);
    }

    #[test]
    fn from_assoc_rejects_non_lie() {
        let p = AssocSeries::monomial(2, w("yx"), int(1));
        assert!(LieSeries::from_assoc(&p, 2).is_err());
    }

    #[test]
    fn jacobi_on_basis_elements() {
        let n = 6;
        let basis: Vec<LieSeries> = (1..=3)
            .flat_map(lyndon_basis)
            .map(|w| LieSeries::basis(w, n))
            .collect();
        for u in &basis {
            for v in &basis {
                for t in &basis {
                    let j = lie_bracket(u, &lie_bracket(v, t, n), n)
                        .add(&lie_bracket(v, &lie_bracket(t, u, n), n))
                        .add(&lie_bracket(t, &lie_bracket(u, v, n), n));
                    assert!(j.is_zero());
                }
            }
        }
    }
}
