//! Truncated free associative algebra with exact rational coefficients.
//!
//! With letters read as operators (`x = ad_X`, `y = ad_Y`) this is the home of
//! the End(g)-valued derivatives of series; with letters read as generators it
//! is the ambient algebra in which Lie series are expanded.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};

use crate::rational::Rational;
use crate::word::Word;

/// Noncommutative polynomial truncated at `degree`. Zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssocSeries {
    degree: usize,
    coeffs: BTreeMap<Word, Rational>,
}

impl AssocSeries {
    pub fn zero(degree: usize) -> Self {
        AssocSeries {
            degree,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one(degree: usize) -> Self {
        Self::monomial(degree, Word::empty(), Rational::one())
    }

    pub fn monomial(degree: usize, w: Word, c: Rational) -> Self {
        let mut s = Self::zero(degree);
        s.add_term(w, c);
        s
    }

    pub fn letter(degree: usize, c: u8) -> Self {
        Self::monomial(degree, Word::letter(c), Rational::one())
    }

    pub fn from_terms(degree: usize, terms: impl IntoIterator<Item = (Word, Rational)>) -> Self {
        let mut s = Self::zero(degree);
        for (w, c) in terms {
            s.add_term(w, c);
        }
        s
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

    /// Adds `c * w`; terms beyond the truncation degree are dropped.
    pub fn add_term(&mut self, w: Word, c: Rational) {
        if w.len() > self.degree || c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.coeffs.entry(w) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.degree);
        }
        AssocSeries {
            degree: self.degree,
            coeffs: self.coeffs.iter().map(|(w, v)| (w.clone(), v * c)).collect(),
        }
    }

    pub fn truncate(&self, degree: usize) -> Self {
        AssocSeries {
            degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() <= degree)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Homogeneous component of the given degree.
    pub fn component(&self, d: usize) -> Self {
        AssocSeries {
            degree: self.degree,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(w, _)| w.len() == d)
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn constant_term(&self) -> Rational {
        self.coeff(&Word::empty())
    }

    /// Product truncated at the smaller of the two degrees.
    pub fn mul_trunc(&self, other: &Self) -> Self {
        let degree = self.degree.min(other.degree);
        let mut out = Self::zero(degree);
        for (u, cu) in &self.coeffs {
            if u.len() > degree {
                continue;
            }
            for (v, cv) in &other.coeffs {
                if u.len() + v.len() > degree {
                    continue;
                }
                out.add_term(u.concat(v), cu * cv);
            }
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &self.mul_trunc(other) - &other.mul_trunc(self)
    }

    /// Left multiplication by a single letter: `c · self`; the product is known through one degree more than `self`.
    pub fn left_letter(&self, c: u8) -> Self {
        let l = Word::letter(c);
        Self::from_terms(
            self.degree + 1,
            self.coeffs.iter().map(|(w, v)| (l.concat(w), v.clone())),
        )
    }

    /// Σ_k f_k · self^k, truncated; `f` are power-series coefficients.
    pub fn compose(&self, f: &[Rational]) -> Self {
        let mut out = Self::zero(self.degree);
        let mut power = Self::one(self.degree);
        for (k, fk) in f.iter().enumerate() {
            if k > 0 {
                power = power.mul_trunc(self);
            }
            if power.is_zero() {
                break;
            }
            if !fk.is_zero() {
                out = &out + &power.scale(fk);
            }
        }
        out
    }

    /// Applies a letter-to-letter substitution.
    pub fn map_letters(&self, f: impl Fn(u8) -> u8) -> Self {
        Self::from_terms(
            self.degree,
            self.coeffs
                .iter()
                .map(|(w, c)| (Word::new(w.letters().iter().map(|&l| f(l)).collect::<Vec<_>>()), c.clone())),
        )
    }

    /// Evaluates by substituting square matrices for letters (letters not in
    /// `letters` evaluate to zero).
    pub fn evaluate(&self, letters: &[(u8, &nalgebra::DMatrix<f64>)], dim: usize) -> nalgebra::DMatrix<f64> {
        let mut out = nalgebra::DMatrix::zeros(dim, dim);
        for (w, c) in &self.coeffs {
            let mut m = nalgebra::DMatrix::identity(dim, dim);
            let mut vanishes = false;
            for l in w.letters() {
                match letters.iter().find(|(c, _)| c == l) {
                    Some((_, mat)) => m = &m * *mat,
                    None => {
                        vanishes = true;
                        break;
                    }
                }
            }
            if !vanishes {
                out += m * crate::rational::to_f64(c);
            }
        }
        out
    }
}

impl Add for &AssocSeries {
    type Output = AssocSeries;
    fn add(self, rhs: &AssocSeries) -> AssocSeries {
        let mut out = self.truncate(self.degree.min(rhs.degree));
        for (w, c) in &rhs.coeffs {
            out.add_term(w.clone(), c.clone());
        }
        out
    }
}

impl Sub for &AssocSeries {
    type Output = AssocSeries;
    fn sub(self, rhs: &AssocSeries) -> AssocSeries {
        let mut out = self.truncate(self.degree.min(rhs.degree));
        for (w, c) in &rhs.coeffs {
            out.add_term(w.clone(), -c.clone());
        }
        out
    }
}

impl Neg for &AssocSeries {
    type Output = AssocSeries;
    fn neg(self) -> AssocSeries {
        self.scale(&-Rational::one())
    }
}

impl Mul for &AssocSeries {
    type Output = AssocSeries;
    fn mul(self, rhs: &AssocSeries) -> AssocSeries {
        self.mul_trunc(rhs)
    }
}

/// Taylor coefficients of `e^s` up to `s^n`.
pub fn exp_coeffs(n: usize) -> Vec<Rational> {
    (0..=n).map(crate::rational::inv_factorial).collect()
}

/// Taylor coefficients of `log(1 + s)` up to `s^n`.
pub fn log1p_coeffs(n: usize) -> Vec<Rational> {
    (0..=n)
        .map(|k| {
            if k == 0 {
                Rational::zero()
            } else {
                let c = crate::rational::ratio(1, k as i64);
                if k % 2 == 0 {
                    -c
                } else {
                    c
                }
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::word::{X, Y};

    #[test]
    fn commutator_of_letters() {
        let x = AssocSeries::letter(3, X);
        let y = AssocSeries::letter(3, Y);
        let c = x.commutator(&y);
        assert_eq!(c.coeff(&Word::parse("xy").unwrap()), int(1));
        assert_eq!(c.coeff(&Word::parse("yx").unwrap()), int(-1));
        assert_eq!(c.len(), 2);
    }

    #[test]
    fn exp_log_roundtrip() {
        let x = AssocSeries::letter(6, X);
        let y = AssocSeries::letter(6, Y);
        let s = &x + &y.scale(&ratio(1, 3));
        let e = s.compose(&exp_coeffs(6));
        let w = &e - &AssocSeries::one(6);
        let back = w.compose(&log1p_coeffs(6));
        assert_eq!(back, s);
    }

    #[test]
    fn truncation_drops_high_terms() {
        let x = AssocSeries::letter(2, X);
        let cube = x.mul_trunc(&x).mul_trunc(&x);
        assert!(cube.is_zero());
    }
}
