//! Formal traces: End(g)-valued derivatives of series as words in the
//! operator letters `x = ad_X`, `y = ad_Y`, and their traces as necklaces.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::assoc::AssocSeries;
use crate::free_lie::{bch, BchOrder, CoeffEntry, Generator, LieSeries};
use crate::rational::{self, Rational};
use crate::word::{Word, AUX, X, Y};
use crate::{KvError, Result};

/// Rational combination of necklaces plus a scalar part standing for
/// `tr(1) = dim g`. Keys are always minimal rotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicWordSeries {
    degree: usize,
    scalar: Rational,
    coeffs: BTreeMap<Word, Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CyclicJson {
    pub degree: usize,
    pub scalar: String,
    pub necklaces: Vec<CoeffEntry>,
}

impl CyclicWordSeries {
    pub fn zero(degree: usize) -> Self {
        CyclicWordSeries {
            degree,
            scalar: Rational::zero(),
            coeffs: BTreeMap::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn scalar(&self) -> &Rational {
        &self.scalar
    }

    pub fn is_zero(&self) -> bool {
        self.scalar.is_zero() && self.coeffs.is_empty()
    }

    pub fn coeff(&self, necklace: &Word) -> Rational {
        self.coeffs
            .get(&necklace.min_rotation())
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &Rational)> {
        self.coeffs.iter()
    }

    fn add_term(&mut self, w: &Word, c: Rational) {
        if c.is_zero() || w.len() > self.degree {
            return;
        }
        if w.is_empty() {
            self.scalar += c;
            return;
        }
        let key = w.min_rotation();
        let e = self.coeffs.entry(key.clone()).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            self.coeffs.remove(&key);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.truncate(self.degree.min(other.degree));
        out.scalar += &other.scalar;
        for (w, c) in &other.coeffs {
            out.add_term(w, c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = Self::zero(self.degree);
        out.scalar = &self.scalar * c;
        for (w, v) in &self.coeffs {
            out.add_term(w, v * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn truncate(&self, degree: usize) -> Self {
        CyclicWordSeries {
            degree,
            scalar: self.scalar.clone(),
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() <= degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn component(&self, d: usize) -> Self {
        let mut out = Self::zero(self.degree);
        if d == 0 {
            out.scalar = self.scalar.clone();
        }
        for (w, c) in self.coeffs.iter().filter(|(w, _)| w.len() == d) {
            out.add_term(w, c.clone());
        }
        out
    }

    /// Image in the quotient by `w ~ (-1)^|w| reverse(w)`, the relation that
    /// traces of ad-words satisfy on every quadratic Lie algebra (ad_X is
    /// skew for the invariant form). Representatives are the smaller of the
    /// two necklaces.
    pub fn modulo_reversal(&self) -> Self {
        let mut out = Self::zero(self.degree);
        out.scalar = self.scalar.clone();
        for (w, c) in &self.coeffs {
            let r = w.reversed().min_rotation();
            let odd = w.len() % 2 == 1;
            if &r == w {
                if !odd {
                    out.add_term(w, c.clone());
                }
                // odd self-reverse necklaces are zero in the quotient
            } else if w < &r {
                out.add_term(w, c.clone());
            } else {
                out.add_term(&r, if odd { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Substitutes matrices for the letters and takes traces; the scalar part
    /// contributes `scalar * dim`.
    pub fn evaluate(&self, letters: &[(u8, &DMatrix<f64>)], dim: usize) -> f64 {
        let mut sum = rational::to_f64(&self.scalar) * dim as f64;
        for (w, c) in &self.coeffs {
            let p = AssocSeries::monomial(w.len(), w.clone(), Rational::one());
            sum += rational::to_f64(c) * p.evaluate(letters, dim).trace();
        }
        sum
    }

    pub fn to_json(&self) -> CyclicJson {
        CyclicJson {
            degree: self.degree,
            scalar: rational::format(&self.scalar),
            necklaces: self
                .coeffs
                .iter()
                .map(|(w, c)| CoeffEntry {
                    word: w.as_str().to_string(),
                    c: rational::format(c),
                })
                .collect(),
        }
    }
}

/// Maps every word to its minimal rotation; the empty word goes to the scalar
/// part.
pub fn cyclic_reduce(p: &AssocSeries) -> CyclicWordSeries {
    let mut out = CyclicWordSeries::zero(p.degree());
    for (w, c) in p.terms() {
        out.add_term(w, c.clone());
    }
    out
}

/// The unique `P(x, y)` with `s = P · a`, for an associative expansion `s`
/// that is linear in the auxiliary letter. In `ad_{w1}…ad_{wk} a` the only
/// word ending in `a` is `w1…wk a`, so `P` is read off those words.
pub fn linear_assoc_to_operator(s: &AssocSeries) -> Result<AssocSeries> {
    let degree = s.degree().saturating_sub(1);
    let mut out = AssocSeries::zero(degree);
    for (w, c) in s.terms() {
        if w.count(AUX) != 1 {
            return Err(KvError::NotLinearInA(format!("word {w:?}")));
        }
        if w.letters().last() == Some(&AUX) {
            out.add_term(Word::new(&w.letters()[..w.len() - 1]), c.clone());
        }
    }
    // reconstruct P·a and compare
    let back = apply_operator(&out, s.degree());
    if &back != s {
        return Err(KvError::NotLinearInA("not of the form P(ad_X, ad_Y)·a".into()));
    }
    Ok(out)
}

/// `linear_assoc_to_operator` for a Lie series in the letters `a, x, y`.
pub fn linear_part_to_assoc(s: &LieSeries) -> Result<AssocSeries> {
    for (w, _) in s.terms() {
        if w.count(AUX) != 1 {
            return Err(KvError::NotLinearInA(format!("Lyndon word {w:?}")));
        }
    }
    linear_assoc_to_operator(&s.to_assoc())
}

/// Associative expansion of `P(ad_X, ad_Y) · a`.
fn apply_operator(p: &AssocSeries, degree: usize) -> AssocSeries {
    let mut out = AssocSeries::zero(degree);
    for (w, c) in p.terms() {
        let mut cur = AssocSeries::letter(degree, AUX);
        for &l in w.letters().iter().rev() {
            cur = AssocSeries::letter(degree, l).commutator(&cur);
        }
        out = &out + &cur.scale(c);
    }
    out
}

/// `δ_slot A`: the operator `a ↦ d/ds A(.. + s a ..)` as a word series in
/// `x = ad_X`, `y = ad_Y`.
pub fn delta_derivative(a: &LieSeries, slot: Generator, n: usize) -> AssocSeries {
    let letter = slot.letter();
    let p = a.truncate(n).to_assoc();
    let mut lin = AssocSeries::zero(n);
    for (w, c) in p.terms() {
        for (i, &l) in w.letters().iter().enumerate() {
            if l == letter {
                let mut v = w.letters().to_vec();
                v[i] = AUX;
                lin.add_term(Word::new(v), c.clone());
            }
        }
    }
    linear_assoc_to_operator(&lin).expect("derivative of a Lie series is P·a")
}

/// Taylor coefficients of `g(s) = s/(e^s - 1)` up to `s^n`, by exact
/// inversion of `(e^s - 1)/s = Σ s^k/(k+1)!`.
pub fn todd_coeffs(n: usize) -> Vec<Rational> {
    let phi: Vec<Rational> = (0..=n).map(|k| rational::inv_factorial(k + 1)).collect();
    let mut g: Vec<Rational> = Vec::with_capacity(n + 1);
    g.push(Rational::one());
    for k in 1..=n {
        let s = (1..=k).fold(Rational::zero(), |acc, j| acc + &phi[j] * &g[k - j]);
        g.push(-s);
    }
    g
}

/// Image of a Lie series under `ad`, as a word series in `x`, `y`.
pub fn ad_image(z: &LieSeries) -> AssocSeries {
    z.to_assoc()
}

/// `-1/2 · tr(g(x) + g(y) - g(z) - 1)` with `z = ad_Z`, `Z = log(e^X e^Y)`.
pub fn kv2_rhs(n: usize) -> CyclicWordSeries {
    let g = todd_coeffs(n);
    let x = AssocSeries::letter(n, X);
    let y = AssocSeries::letter(n, Y);
    let z = ad_image(&bch(n, BchOrder::XY));
    let inner = &(&(&x.compose(&g) + &y.compose(&g)) - &z.compose(&g)) - &AssocSeries::one(n);
    cyclic_reduce(&inner).scale(&rational::ratio(-1, 2))
}

/// `tr(ad_X δ_X A + ad_Y δ_Y B)` as necklaces.
pub fn kv2_lhs(a: &LieSeries, b: &LieSeries, n: usize) -> CyclicWordSeries {
    let da = delta_derivative(a, Generator::X, n).left_letter(X);
    let db = delta_derivative(b, Generator::Y, n).left_letter(Y);
    cyclic_reduce(&(&da + &db).truncate(n))
}

/// LHS − RHS of the trace equation, through degree `n`.
pub fn kv2_residual(a: &LieSeries, b: &LieSeries, n: usize) -> CyclicWordSeries {
    kv2_lhs(a, b, n).sub(&kv2_rhs(n))
}
