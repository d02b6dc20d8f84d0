//! The first KV equation as exact degreewise linear algebra over the Lyndon
//! basis, optionally coupled with the linearized trace equation.

use nalgebra::DVector;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::cyclic::{cyclic_reduce, delta_derivative, kv2_residual, kv2_rhs, CyclicWordSeries};
use crate::free_lie::{
    ad_series_apply, bch, exp_minus_one, lie_bracket, one_minus_exp_neg, BchOrder, CoeffEntry, Generator,
    LieSeries,
};
use crate::matrix_lie::QuadraticLieAlgebra;
use crate::rational::{self, Rational};
use crate::word::{lyndon_basis, Word, X, Y};
use crate::{KvError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "eq1-only")]
    Eq1Only,
    #[serde(rename = "joint-eq1-eq2")]
    Joint,
}

impl Strategy {
    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Eq1Only => "eq1-only",
            Strategy::Joint => "joint-eq1-eq2",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = KvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "eq1-only" | "eq1" => Ok(Strategy::Eq1Only),
            "joint-eq1-eq2" | "joint" => Ok(Strategy::Joint),
            _ => Err(KvError::Parse(format!("unknown strategy {s:?}"))),
        }
    }
}

/// Truncated pair `(A, B)` with `A(0,0) = B(0,0) = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KvPair {
    pub a: LieSeries,
    pub b: LieSeries,
    pub degree: usize,
    pub strategy: String,
}

impl KvPair {
    pub fn zero(degree: usize) -> Self {
        KvPair {
            a: LieSeries::zero(degree),
            b: LieSeries::zero(degree),
            degree,
            strategy: "zero".into(),
        }
    }
}

/// `[log(e^Y e^X) - X - Y] - [(1 - e^{-ad_X}) A + (e^{ad_Y} - 1) B]` through
/// degree `n`.
pub fn kv1_residual(p: &KvPair, n: usize) -> LieSeries {
    let x = LieSeries::generator(Generator::X, n);
    let y = LieSeries::generator(Generator::Y, n);
    let lhs = bch(n, BchOrder::YX).sub(&x).sub(&y);
    let ra = ad_series_apply(&one_minus_exp_neg(n), Generator::X, &p.a, n);
    let rb = ad_series_apply(&exp_minus_one(n), Generator::Y, &p.b, n);
    lhs.sub(&ra).sub(&rb)
}

/// Dense exact linear system `M u = r`.
#[derive(Clone, Debug)]
pub struct ExactSystem {
    pub rows: Vec<Vec<Rational>>,
    pub rhs: Vec<Rational>,
    pub ncols: usize,
}

/// Reduced row echelon form with pivots chosen from the last column
/// backwards, so the earliest columns are the free ones.
#[derive(Clone, Debug)]
pub struct Echelon {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    pivots: Vec<usize>,
    ncols: usize,
}

impl ExactSystem {
    pub fn new(ncols: usize) -> Self {
        ExactSystem {
            rows: Vec::new(),
            rhs: Vec::new(),
            ncols,
        }
    }

    pub fn push(&mut self, row: Vec<Rational>, rhs: Rational) {
        debug_assert_eq!(row.len(), self.ncols);
        self.rows.push(row);
        self.rhs.push(rhs);
    }

    pub fn echelon(&self) -> Echelon {
        let mut rows = self.rows.clone();
        let mut rhs = self.rhs.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in (0..self.ncols).rev() {
            let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
                continue;
            };
            rows.swap(r, p);
            rhs.swap(r, p);
            let inv = Rational::one() / &rows[r][col];
            for v in rows[r].iter_mut() {
                *v *= &inv;
            }
            rhs[r] *= &inv;
            for i in 0..rows.len() {
                if i != r && !rows[i][col].is_zero() {
                    let f = rows[i][col].clone();
                    for j in 0..self.ncols {
                        if !rows[r][j].is_zero() {
                            let t = &f * &rows[r][j];
                            rows[i][j] -= t;
                        }
                    }
                    let t = &f * &rhs[r];
                    rhs[i] -= t;
                }
            }
            pivots.push(col);
            r += 1;
        }
        Echelon {
            rows,
            rhs,
            pivots,
            ncols: self.ncols,
        }
    }
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn augmented_rank(&self) -> usize {
        let inconsistent = self.rhs[self.rank()..].iter().any(|v| !v.is_zero());
        self.rank() + usize::from(inconsistent)
    }

    /// Particular solution with every free variable set to zero.
    pub fn solution(&self) -> Option<Vec<Rational>> {
        if self.augmented_rank() != self.rank() {
            return None;
        }
        let mut u = vec![Rational::zero(); self.ncols];
        for (i, &c) in self.pivots.iter().enumerate() {
            u[c] = self.rhs[i].clone();
        }
        Some(u)
    }

    /// One kernel vector per free column.
    pub fn kernel(&self) -> Vec<Vec<Rational>> {
        (0..self.ncols)
            .filter(|c| !self.pivots.contains(c))
            .map(|f| {
                let mut u = vec![Rational::zero(); self.ncols];
                u[f] = Rational::one();
                for (i, &c) in self.pivots.iter().enumerate() {
                    u[c] = -self.rows[i][f].clone();
                }
                u
            })
            .collect()
    }
}

/// Column layout of the degree-`d` unknowns: A coefficients, then B
/// coefficients, each over the Lyndon words of degree `d` in lex order.
fn unknown_words(d: usize) -> Vec<(Generator, Word)> {
    let basis = lyndon_basis(d);
    basis
        .iter()
        .map(|w| (Generator::X, w.clone()))
        .chain(basis.iter().map(|w| (Generator::Y, w.clone())))
        .collect()
}

/// Linear part of the degree-`(d+1)` component of the first equation in the
/// unknowns `(A_d, B_d)`: `u ↦ [X, A_d] + [Y, B_d]`.
fn eq1_system(d: usize, target: &LieSeries) -> ExactSystem {
    let n = d + 1;
    let cols = unknown_words(d);
    let images: Vec<LieSeries> = cols
        .iter()
        .map(|(g, w)| lie_bracket(&LieSeries::generator(*g, n), &LieSeries::basis(w.clone(), n), n))
        .collect();
    let mut sys = ExactSystem::new(cols.len());
    for row_word in lyndon_basis(n) {
        let row = images.iter().map(|im| im.coeff(&row_word)).collect();
        sys.push(row, target.coeff(&row_word));
    }
    sys
}

/// Degree-`d` component of the trace equation in the unknowns `(A_d, B_d)`.
fn eq2_rows(d: usize, sys: &mut ExactSystem) {
    let cols = unknown_words(d);
    let images: Vec<CyclicWordSeries> = cols
        .iter()
        .map(|(g, w)| {
            let basis = LieSeries::basis(w.clone(), d);
            let letter = g.letter();
            cyclic_reduce(&delta_derivative(&basis, *g, d).left_letter(letter).truncate(d))
        })
        .collect();
    let rhs = kv2_rhs(d).component(d);
    let mut necklaces: Vec<Word> = images
        .iter()
        .flat_map(|c| c.terms().map(|(w, _)| w.clone()).collect::<Vec<_>>())
        .chain(rhs.terms().map(|(w, _)| w.clone()))
        .collect();
    necklaces.sort();
    necklaces.dedup();
    for nk in necklaces {
        let row = images.iter().map(|im| im.coeff(&nk)).collect();
        sys.push(row, rhs.coeff(&nk));
    }
}

fn split_solution(d: usize, n: usize, u: &[Rational]) -> (LieSeries, LieSeries) {
    let cols = unknown_words(d);
    let mut a = LieSeries::zero(n);
    let mut b = LieSeries::zero(n);
    for ((g, w), c) in cols.iter().zip(u) {
        let term = LieSeries::basis(w.clone(), n).scale(c);
        match g {
            Generator::X => a = a.add(&term),
            Generator::Y => b = b.add(&term),
        }
    }
    (a, b)
}

fn degree_system(p: &KvPair, d: usize, strategy: Strategy) -> ExactSystem {
    let target = kv1_residual(&KvPair { degree: d + 1, ..p.clone() }, d + 1).component(d + 1);
    let mut sys = eq1_system(d, &target);
    if strategy == Strategy::Joint {
        eq2_rows(d, &mut sys);
    }
    sys
}

/// Solves degree by degree for `A_1..A_n`, `B_1..B_n`. Lower-degree parts
/// feed into the right-hand side of higher degrees; the free variables of
/// each degree are set to zero.
pub fn solve_kv(n: usize, strategy: Strategy) -> Result<KvPair> {
    if n == 0 {
        return Err(KvError::InvalidArgument("degree must be at least 1".into()));
    }
    let mut pair = KvPair::zero(n);
    pair.strategy = strategy.tag().into();
    for d in 1..=n {
        let sys = degree_system(&pair, d, strategy);
        let ech = sys.echelon();
        let u = ech.solution().ok_or(KvError::Infeasible {
            degree: d,
            rank: ech.rank(),
            augmented_rank: ech.augmented_rank(),
            unknowns: sys.ncols,
            equations: sys.rows.len(),
        })?;
        let (ad, bd) = split_solution(d, n, &u);
        pair.a = pair.a.add(&ad);
        pair.b = pair.b.add(&bd);
    }
    Ok(pair)
}

/// Basis of the solutions of the homogeneous degree-`d` system: pairs
/// `(A_d, B_d)` that can be added to a solution without changing the
/// residual.
pub fn kernel_basis(d: usize, strategy: Strategy, n: usize) -> Vec<(LieSeries, LieSeries)> {
    let mut sys = eq1_system(d, &LieSeries::zero(d + 1));
    if strategy == Strategy::Joint {
        eq2_rows(d, &mut sys);
    }
    sys.echelon()
        .kernel()
        .iter()
        .map(|u| split_solution(d, n, u))
        .collect()
}

/// Evaluates `A` and `B` at a point of a concrete algebra.
pub fn evaluate_pair(p: &KvPair, alg: &QuadraticLieAlgebra, x: &DVector<f64>, y: &DVector<f64>) -> (DVector<f64>, DVector<f64>) {
    (evaluate_series(&p.a, alg, x, y), evaluate_series(&p.b, alg, x, y))
}

pub fn evaluate_series(s: &LieSeries, alg: &QuadraticLieAlgebra, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    s.evaluate_with(
        |c| if c == X { x.clone() } else if c == Y { y.clone() } else { DVector::zeros(alg.dim()) },
        |u, v| alg.bracket(u, v),
        DVector::zeros(alg.dim()),
        |acc, c, v| *acc += v * rational::to_f64(c),
    )
}

/// JSON shape of a solved pair, as printed by `solve-kv`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KvPairJson {
    pub degree: usize,
    pub strategy: String,
    #[serde(rename = "A")]
    pub a: Vec<CoeffEntry>,
    #[serde(rename = "B")]
    pub b: Vec<CoeffEntry>,
}

impl KvPair {
    pub fn to_json(&self) -> KvPairJson {
        KvPairJson {
            degree: self.degree,
            strategy: self.strategy.clone(),
            a: self.a.to_coeff_list(),
            b: self.b.to_coeff_list(),
        }
    }

    pub fn from_json(j: &KvPairJson) -> Result<Self> {
        Ok(KvPair {
            a: LieSeries::from_coeff_list(j.degree, &j.a)?,
            b: LieSeries::from_coeff_list(j.degree, &j.b)?,
            degree: j.degree,
            strategy: j.strategy.clone(),
        })
    }
}

/// Raw and reversal-reduced trace residual of a pair.
pub fn kv2_report(p: &KvPair, n: usize) -> (CyclicWordSeries, CyclicWordSeries) {
    let raw = kv2_residual(&p.a, &p.b, n);
    let reduced = raw.modulo_reversal();
    (raw, reduced)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::word::witt_dimension;

    fn w(s: &str) -> Word {
        Word::parse(s).unwrap()
    }

    #[test]
    fn residual_examples() {
        let zero = KvPair::zero(2);
        let r = kv1_residual(&zero, 2);
        assert_eq!(r, LieSeries::basis(w("xy"), 2).scale(&ratio(-1, 2)));
        // linear part always vanishes
        assert!(r.component(1).is_zero());

        let mut p = KvPair::zero(2);
        p.a = LieSeries::generator(Generator::X, 2).scale(&int(7));
        assert_eq!(kv1_residual(&p, 2), r);
    }

    #[test]
    fn degree_one_solution() {
        let p = solve_kv(1, Strategy::Eq1Only).unwrap();
        assert!(p.a.is_zero());
        assert_eq!(p.b, LieSeries::generator(Generator::X, 1).scale(&ratio(1, 2)));
        let c = p.b.coeff(&w("x"));
        let b = p.a.coeff(&w("y"));
        assert_eq!(c - b, ratio(1, 2));
        assert!(kv1_residual(&p, 2).is_zero());
    }

    #[test]
    fn solution_up_to_degree_five() {
        let p = solve_kv(5, Strategy::Eq1Only).unwrap();
        assert!(kv1_residual(&p, 5).is_zero());
        assert!(kv1_residual(&p, 6).is_zero());
        assert_eq!(p, solve_kv(5, Strategy::Eq1Only).unwrap());
    }

    #[test]
    fn joint_strategy_solves_both_equations() {
        let n = 6;
        let p = solve_kv(n, Strategy::Joint).unwrap();
        assert!(kv1_residual(&p, n + 1).is_zero());
        assert!(kv2_residual(&p.a, &p.b, n).is_zero());
        // degree 1 is still a = d = 0 and c - b = 1/2
        let x = Word::parse("x").unwrap();
        let y = Word::parse("y").unwrap();
        assert_eq!(p.b.coeff(&x) - p.a.coeff(&y), ratio(1, 2));
        assert!(p.a.coeff(&x).is_zero() && p.b.coeff(&y).is_zero());
    }

    #[test]
    fn eq1_only_solution_meets_trace_equation_modulo_reversal() {
        let p = solve_kv(6, Strategy::Eq1Only).unwrap();
        let r = kv2_residual(&p.a, &p.b, 6);
        assert!(r.truncate(4).is_zero());
        assert!(!r.is_zero());
        assert!(r.modulo_reversal().is_zero());
    }

    #[test]
    fn kernel_vectors_keep_residual_zero() {
        let n = 4;
        let p = solve_kv(n, Strategy::Eq1Only).unwrap();
        for d in 1..=n {
            let ker = kernel_basis(d, Strategy::Eq1Only, n);
            // (A, B) -> [X, A] + [Y, B] is onto degree d+1
            assert_eq!(ker.len() as u64, 2 * witt_dimension(2, d as u64) - witt_dimension(2, d as u64 + 1), "degree {d}");
            for (ka, kb) in ker.iter().take(3) {
                let q = KvPair {
                    a: p.a.add(ka),
                    b: p.b.add(kb),
                    ..p.clone()
                };
                // a degree-d kernel vector only leaves the degree d+1 equation intact
                assert!(kv1_residual(&q, d + 1).is_zero());
            }
        }
    }

    #[test]
    fn echelon_prefers_late_pivots() {
        // b - c = -1/2 over columns (a, b, c, d)
        let mut sys = ExactSystem::new(4);
        sys.push(vec![int(0), int(1), int(-1), int(0)], ratio(-1, 2));
        let e = sys.echelon();
        assert_eq!(e.rank(), 1);
        assert_eq!(e.solution().unwrap(), vec![int(0), int(0), ratio(1, 2), int(0)]);
        assert_eq!(e.kernel().len(), 3);
    }

    #[test]
    fn infeasible_system_reports_ranks() {
        let mut sys = ExactSystem::new(1);
        sys.push(vec![int(1)], int(1));
        sys.push(vec![int(2)], int(3));
        let e = sys.echelon();
        assert!(e.solution().is_none());
        assert_eq!((e.rank(), e.augmented_rank()), (1, 2));
    }
}
