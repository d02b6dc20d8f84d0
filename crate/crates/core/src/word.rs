//! Words over a small ordered alphabet, Lyndon words and necklaces.
//!
//! Letters are ASCII bytes: `x` and `y` for the two generators, plus `a` for
//! the auxiliary direction used when differentiating series. Byte order gives
//! `a < x < y`.

use std::cmp::Ordering;
use std::fmt;

pub const X: u8 = b'x';
pub const Y: u8 = b'y';
pub const AUX: u8 = b'a';

/// A finite word. Ordered first by length, then lexicographically, which is
/// the storage order of every series map in this crate.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(letters: impl Into<Vec<u8>>) -> Self {
        Word(letters.into())
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn letter(c: u8) -> Self {
        Word(vec![c])
    }

    pub fn parse(s: &str) -> crate::Result<Self> {
        if s.bytes().all(|c| c == X || c == Y || c == AUX) {
            Ok(Word(s.as_bytes().to_vec()))
        } else {
            Err(crate::KvError::Parse(format!("bad word {s:?}")))
        }
    }

    pub fn letters(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn as_str(&self) -> &str {
        // letters are ASCII by construction
        std::str::from_utf8(&self.0).unwrap_or("?")
    }

    pub fn count(&self, c: u8) -> usize {
        self.0.iter().filter(|&&l| l == c).count()
    }

    pub fn reversed(&self) -> Word {
        Word(self.0.iter().rev().copied().collect())
    }

    /// Strictly smaller than each of its proper rotations.
    pub fn is_lyndon(&self) -> bool {
        let n = self.len();
        if n == 0 {
            return false;
        }
        (1..n).all(|i| {
            let rot = self.0[i..].iter().chain(&self.0[..i]);
            self.0.iter().cmp(rot) == Ordering::Less
        })
    }

    /// Lexicographically minimal rotation: the canonical representative of
    /// the necklace of this word.
    pub fn min_rotation(&self) -> Word {
        let n = self.len();
        let mut best = 0usize;
        for i in 1..n {
            let cand = self.0[i..].iter().chain(&self.0[..i]);
            let cur = self.0[best..].iter().chain(&self.0[..best]);
            if cand.cmp(cur) == Ordering::Less {
                best = i;
            }
        }
        let mut v = self.0[best..].to_vec();
        v.extend_from_slice(&self.0[..best]);
        Word(v)
    }

    /// Standard factorization `w = u v` of a Lyndon word of length at least
    /// two, where `v` is the longest proper suffix that is itself Lyndon.
    pub fn standard_factorization(&self) -> Option<(Word, Word)> {
        if self.len() < 2 {
            return None;
        }
        (1..self.len())
            .map(|i| (Word(self.0[..i].to_vec()), Word(self.0[i..].to_vec())))
            .find(|(_, v)| v.is_lyndon())
    }
}

impl Ord for Word {
    fn cmp(&self, other: &Self) -> Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_str())
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            f.write_str("1")
        } else {
            f.write_str(self.as_str())
        }
    }
}

/// All Lyndon words of exactly `degree` letters over `alphabet` (which must
/// be sorted), in lexicographic order. Duval's generation algorithm.
pub fn lyndon_words_over(alphabet: &[u8], degree: usize) -> Vec<Word> {
    let k = alphabet.len();
    let mut out = Vec::new();
    if degree == 0 || k == 0 {
        return out;
    }
    let mut w: Vec<usize> = vec![0];
    while !w.is_empty() {
        if w.len() == degree {
            out.push(Word(w.iter().map(|&i| alphabet[i]).collect()));
        }
        let m = w.len();
        while w.len() < degree {
            let c = w[w.len() - m];
            w.push(c);
        }
        while let Some(&last) = w.last() {
            if last == k - 1 {
                w.pop();
            } else {
                break;
            }
        }
        if let Some(last) = w.last_mut() {
            *last += 1;
        }
    }
    out
}

/// Lyndon basis of the degree-`degree` part of the free Lie algebra on x, y.
pub fn lyndon_basis(degree: usize) -> Vec<Word> {
    lyndon_words_over(&[X, Y], degree)
}

/// Number of Lyndon words of length `n` on `k` letters (Witt's formula).
pub fn witt_dimension(k: u64, n: u64) -> u64 {
    fn mobius(mut n: u64) -> i64 {
        let mut result = 1i64;
        let mut p = 2;
        while p * p <= n {
            if n % p == 0 {
                n /= p;
                if n % p == 0 {
                    return 0;
                }
                result = -result;
            }
            p += 1;
        }
        if n > 1 {
            result = -result;
        }
        result
    }
    let mut sum = 0i64;
    for d in 1..=n {
        if n % d == 0 {
            sum += mobius(d) * (k.pow((n / d) as u32) as i64);
        }
    }
    (sum / n as i64) as u64
}

/// All words of length `n` over `alphabet`, in lexicographic order.
pub fn all_words(alphabet: &[u8], n: usize) -> Vec<Word> {
    let mut out = vec![Word::empty()];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|w| alphabet.iter().map(move |&c| w.concat(&Word::letter(c))))
            .collect();
    }
    out
}
