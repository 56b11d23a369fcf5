//! Pauli strings and real Pauli-coefficient sums.
//!
//! Letters are bit-packed into an `(x, z)` pair of masks with
//! `P = i^{#Y} X^x Z^z`. Qubit `q` of an `n`-qubit string lives at bit
//! `n - 1 - q`, so qubit 0 is the most significant bit of a basis index and
//! the leftmost letter of the text form. With this layout the masks act on
//! amplitude indices directly: `P|j> = i^{#Y} (-1)^{|j & z|} |j ^ x>`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::dense::DenseOperator;
use super::C64;
use crate::{Error, Result, MAX_QUBITS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }
}

/// `i^k` for `k` taken mod 4.
#[inline]
fn i_pow(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Letters of a Pauli string without qubit count or coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct PauliKey {
    pub x: u64,
    pub z: u64,
}

impl PauliKey {
    pub const IDENTITY: PauliKey = PauliKey { x: 0, z: 0 };

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let n = letters.len();
        let mut key = PauliKey::IDENTITY;
        for (q, p) in letters.iter().enumerate() {
            let bit = 1u64 << (n - 1 - q);
            let (x, z) = p.bits();
            if x {
                key.x |= bit;
            }
            if z {
                key.z |= bit;
            }
        }
        key
    }

    /// Single-qubit letter `p` on qubit `q` of an `n`-qubit register.
    pub fn single(n: usize, q: usize, p: Pauli) -> Self {
        let mut letters = vec![Pauli::I; n];
        letters[q] = p;
        Self::from_letters(&letters)
    }

    pub fn letter(&self, n: usize, q: usize) -> Pauli {
        let bit = 1u64 << (n - 1 - q);
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letters(&self, n: usize) -> Vec<Pauli> {
        (0..n).map(|q| self.letter(n, q)).collect()
    }

    pub fn label(&self, n: usize) -> String {
        (0..n).map(|q| self.letter(n, q).as_char()).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    #[inline]
    fn y_count(&self) -> u32 {
        (self.x & self.z).count_ones()
    }

    #[inline]
    pub fn anticommutes(&self, other: &PauliKey) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 1
    }

    /// Product `self · other = i^k · result`; returns `(k mod 4, result)`.
    #[inline]
    pub fn mul(&self, other: &PauliKey) -> (u32, PauliKey) {
        let out = PauliKey {
            x: self.x ^ other.x,
            z: self.z ^ other.z,
        };
        // i^{y1 + y2 - y3} (-1)^{|z1 & x2|}
        let k = self.y_count() + other.y_count() + 2 * (self.z & other.x).count_ones() + 4
            - out.y_count() % 4;
        (k % 4, out)
    }

    /// Phase of the single nonzero entry in column `j`: `P|j> = phase · |j ^ x>`.
    #[inline]
    pub fn column_phase(&self, j: usize) -> C64 {
        let sign = ((j as u64) & self.z).count_ones();
        i_pow(self.y_count() + 2 * sign)
    }

    /// `dst += scale · P · src`.
    pub fn apply_add(&self, src: &[C64], dst: &mut [C64], scale: C64) {
        let ny = self.y_count();
        let x = self.x as usize;
        for (j, &a) in src.iter().enumerate() {
            if a == C64::new(0.0, 0.0) {
                continue;
            }
            let sign = ((j as u64) & self.z).count_ones();
            dst[j ^ x] += scale * i_pow(ny + 2 * sign) * a;
        }
    }

    fn parse_letters(s: &str) -> Result<Vec<Pauli>> {
        s.chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::Parse(format!("bad Pauli letter `{c}` in `{s}`"))))
            .collect()
    }
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Parse("Pauli string needs at least one qubit".into()));
    }
    if n > MAX_QUBITS {
        return Err(Error::TooManyQubits(n));
    }
    Ok(())
}

/// A single Pauli string with a complex coefficient.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliString {
    n_qubits: usize,
    key: PauliKey,
    coeff: C64,
}

impl PauliString {
    pub fn new(letters: &[Pauli], coeff: C64) -> Result<Self> {
        check_qubits(letters.len())?;
        Ok(Self {
            n_qubits: letters.len(),
            key: PauliKey::from_letters(letters),
            coeff,
        })
    }

    pub fn from_key(n_qubits: usize, key: PauliKey, coeff: C64) -> Self {
        Self { n_qubits, key, coeff }
    }

    /// Unit-coefficient string from its letters, e.g. `"XIZ"`.
    pub fn from_label(label: &str) -> Result<Self> {
        Self::new(&PauliKey::parse_letters(label)?, C64::new(1.0, 0.0))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn key(&self) -> PauliKey {
        self.key
    }

    pub fn coeff(&self) -> C64 {
        self.coeff
    }

    pub fn letters(&self) -> Vec<Pauli> {
        self.key.letters(self.n_qubits)
    }

    pub fn label(&self) -> String {
        self.key.label(self.n_qubits)
    }

    pub fn with_coeff(&self, coeff: C64) -> Self {
        Self { coeff, ..self.clone() }
    }

    /// Exact product with the phase tracked symbolically.
    pub fn product(&self, other: &PauliString) -> Result<PauliString> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::QubitMismatch(self.n_qubits, other.n_qubits));
        }
        let (k, key) = self.key.mul(&other.key);
        Ok(PauliString {
            n_qubits: self.n_qubits,
            key,
            coeff: self.coeff * other.coeff * i_pow(k),
        })
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        !self.key.anticommutes(&other.key)
    }

    pub fn dense(&self) -> DenseOperator {
        let dim = 1usize << self.n_qubits;
        let mut m = DenseOperator::zeros(dim);
        let x = self.key.x as usize;
        for j in 0..dim {
            m[(j ^ x, j)] = self.coeff * self.key.column_phase(j);
        }
        m
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeff.im == 0.0 {
            write!(f, "{:?}*{}", self.coeff.re, self.label())
        } else {
            write!(f, "({:?}{:+?}i)*{}", self.coeff.re, self.coeff.im, self.label())
        }
    }
}

fn parse_complex(s: &str) -> Result<C64> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad coefficient `{s}`"));
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let inner = inner.trim();
        let body = inner.strip_suffix('i').ok_or_else(bad)?;
        // split at the last sign that is not an exponent sign or the leading sign
        let bytes = body.as_bytes();
        let mut split = None;
        for idx in (1..bytes.len()).rev() {
            let c = bytes[idx];
            if (c == b'+' || c == b'-') && !matches!(bytes[idx - 1], b'e' | b'E') {
                split = Some(idx);
                break;
            }
        }
        let idx = split.ok_or_else(bad)?;
        let re: f64 = body[..idx].trim().parse().map_err(|_| bad())?;
        let im: f64 = body[idx..].trim().parse().map_err(|_| bad())?;
        Ok(C64::new(re, im))
    } else {
        let re: f64 = s.parse().map_err(|_| bad())?;
        Ok(C64::new(re, 0.0))
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts `XIZ`, `0.5*XIZ` or `(0.5-1i)*XIZ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.rsplit_once('*') {
            Some((c, letters)) => {
                let coeff = parse_complex(c)?;
                PauliString::new(&PauliKey::parse_letters(letters.trim())?, coeff)
            }
            None => PauliString::from_label(s),
        }
    }
}

/// Real linear combination of Pauli strings: a Hermitian operator.
///
/// Skew-Hermitian Lie algebra elements are represented as `i·h` with `h` a
/// `PauliSum`; see [`PauliSum::lie_bracket`].
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n_qubits: usize,
    terms: BTreeMap<PauliKey, f64>,
}

impl PauliSum {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_key(n_qubits: usize, key: PauliKey, coeff: f64) -> Self {
        let mut s = Self::zero(n_qubits);
        s.add_term(key, coeff);
        s
    }

    pub fn from_label(label: &str, coeff: f64) -> Result<Self> {
        let letters = PauliKey::parse_letters(label)?;
        check_qubits(letters.len())?;
        Ok(Self::from_key(letters.len(), PauliKey::from_letters(&letters), coeff))
    }

    /// Single-qubit term `coeff · p_q`.
    pub fn single(n_qubits: usize, qubit: usize, p: Pauli, coeff: f64) -> Self {
        Self::from_key(n_qubits, PauliKey::single(n_qubits, qubit, p), coeff)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::from_key(n_qubits, PauliKey::IDENTITY, 1.0)
    }

    /// Hermitian part of a Pauli string: fails if the coefficient is not real.
    pub fn from_string(p: &PauliString) -> Result<Self> {
        if p.coeff().im.abs() > 1e-14 * p.coeff().norm().max(1.0) {
            return Err(Error::NotHermitian(p.coeff().im.abs()));
        }
        Ok(Self::from_key(p.n_qubits(), p.key(), p.coeff().re))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliKey, &f64)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, key: &PauliKey) -> f64 {
        self.terms.get(key).copied().unwrap_or(0.0)
    }

    pub fn add_term(&mut self, key: PauliKey, coeff: f64) {
        if coeff == 0.0 {
            return;
        }
        let e = self.terms.entry(key).or_insert(0.0);
        *e += coeff;
        if *e == 0.0 {
            self.terms.remove(&key);
        }
    }

    /// `self += alpha · other`.
    pub fn axpy(&mut self, alpha: f64, other: &PauliSum) {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        for (k, c) in &other.terms {
            self.add_term(*k, alpha * c);
        }
    }

    pub fn scaled(&self, alpha: f64) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        if alpha != 0.0 {
            for (k, c) in &self.terms {
                out.terms.insert(*k, alpha * c);
            }
        }
        out
    }

    /// Drops terms with `|c| <= tol`.
    pub fn pruned(&self, tol: f64) -> PauliSum {
        PauliSum {
            n_qubits: self.n_qubits,
            terms: self.terms.iter().filter(|(_, c)| c.abs() > tol).map(|(k, c)| (*k, *c)).collect(),
        }
    }

    /// Euclidean inner product of coefficient vectors, `Σ a_P b_P`.
    pub fn coeff_dot(&self, other: &PauliSum) -> f64 {
        let (small, large) = if self.terms.len() <= other.terms.len() {
            (self, other)
        } else {
            (other, self)
        };
        small.terms.iter().fold(0.0, |a, (k, c)| a + c * large.coeff(k))
    }

    pub fn coeff_norm(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a + c * c).sqrt()
    }

    /// Hilbert–Schmidt inner product `Tr(A B)` of the Hermitian operators.
    /// It equals `Tr((iA)^dag (iB))` for the skew-Hermitian elements as well.
    pub fn hs_inner(&self, other: &PauliSum) -> f64 {
        self.dim() as f64 * self.coeff_dot(other)
    }

    pub fn hs_norm(&self) -> f64 {
        (self.dim() as f64).sqrt() * self.coeff_norm()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Single term `(key, coeff)` if the sum has exactly one term.
    pub fn as_single(&self) -> Option<(PauliKey, f64)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(k, c)| (*k, *c))
        } else {
            None
        }
    }

    /// Commutator `[A, B] = AB - BA` of the Hermitian operators, returned as
    /// `i·C` with `C` Hermitian; this returns `C`.
    pub fn commutator_over_i(&self, other: &PauliSum) -> PauliSum {
        let mut out = PauliSum::zero(self.n_qubits);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                if ka.anticommutes(kb) {
                    let (k, key) = ka.mul(kb);
                    // PQ = i^k R with k odd; [P,Q] = 2 i^k R = i · (2 i^{k-1}) R
                    let s = if k == 1 { 2.0 } else { -2.0 };
                    out.add_term(key, s * ca * cb);
                }
            }
        }
        out
    }

    /// Lie bracket of skew-Hermitian elements: `[i·a, i·b] = i·c`; returns `c`.
    pub fn lie_bracket(&self, other: &PauliSum) -> PauliSum {
        // [ia, ib] = -[a, b] = -i·commutator_over_i
        self.commutator_over_i(other).scaled(-1.0)
    }

    pub fn commutes_with(&self, other: &PauliSum) -> bool {
        self.commutator_over_i(other).pruned(0.0).is_empty()
    }

    /// `dst += scale · A · src`.
    pub fn apply_add(&self, src: &[C64], dst: &mut [C64], scale: C64) {
        for (k, c) in &self.terms {
            k.apply_add(src, dst, scale * *c);
        }
    }

    pub fn apply(&self, src: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); src.len()];
        self.apply_add(src, &mut out, C64::new(1.0, 0.0));
        out
    }

    pub fn dense(&self) -> DenseOperator {
        let dim = self.dim();
        let mut m = DenseOperator::zeros(dim);
        for (k, c) in &self.terms {
            let x = k.x as usize;
            for j in 0..dim {
                m[(j ^ x, j)] += k.column_phase(j) * *c;
            }
        }
        m
    }

    /// Pauli decomposition of a Hermitian matrix; coefficients with magnitude at
    /// or below `tol` are dropped.
    pub fn from_dense(op: &DenseOperator, tol: f64) -> Result<PauliSum> {
        let dim = op.dim();
        if !dim.is_power_of_two() || dim < 2 {
            return Err(Error::DimensionMismatch(dim, dim.next_power_of_two()));
        }
        let n = dim.trailing_zeros() as usize;
        check_qubits(n)?;
        op.check_hermitian()?;
        let mut out = PauliSum::zero(n);
        for x in 0..dim as u64 {
            for z in 0..dim as u64 {
                let key = PauliKey { x, z };
                // Tr(P^dag M) / d, with P[j^x, j] = phase(j)
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..dim {
                    acc += key.column_phase(j).conj() * op[(j ^ x as usize, j)];
                }
                let c = acc.re / dim as f64;
                if c.abs() > tol {
                    out.terms.insert(key, c);
                }
            }
        }
        Ok(out)
    }

    /// Text form `c1*P1 + c2*P2`; the zero sum prints as `0*I...I`.
    pub fn to_text(&self) -> String {
        if self.terms.is_empty() {
            return format!("0*{}", PauliKey::IDENTITY.label(self.n_qubits));
        }
        self.terms
            .iter()
            .map(|(k, c)| format!("{:?}*{}", c, k.label(self.n_qubits)))
            .collect::<Vec<_>>()
            .join(" + ")
    }

    /// `(label, coeff)` pairs in key order.
    pub fn labelled_terms(&self) -> Vec<(String, f64)> {
        self.terms.iter().map(|(k, c)| (k.label(self.n_qubits), *c)).collect()
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl FromStr for PauliSum {
    type Err = Error;

    /// Accepts `ZZ`, `1.0*ZI + -0.5*XX` and `1.0*ZI - 0.5*XX`.
    fn from_str(s: &str) -> Result<Self> {
        let normalized = s.replace(" - ", " + -");
        let mut n = None;
        let mut out: Option<PauliSum> = None;
        for term in normalized.split(" + ").map(str::trim).filter(|t| !t.is_empty()) {
            let (coeff, letters) = match term.rsplit_once('*') {
                Some((c, l)) => (
                    c.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad coefficient in `{term}`")))?,
                    l.trim(),
                ),
                None => (1.0, term),
            };
            let letters = PauliKey::parse_letters(letters)?;
            check_qubits(letters.len())?;
            match n {
                None => n = Some(letters.len()),
                Some(m) if m != letters.len() => return Err(Error::QubitMismatch(m, letters.len())),
                _ => {}
            }
            out.get_or_insert_with(|| PauliSum::zero(letters.len()))
                .add_term(PauliKey::from_letters(&letters), coeff);
        }
        out.ok_or_else(|| Error::Parse("empty Pauli sum".into()))
    }
}

#[derive(Serialize, Deserialize)]
struct PauliSumRepr {
    n_qubits: usize,
    terms: BTreeMap<String, f64>,
}

impl Serialize for PauliSum {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PauliSumRepr {
            n_qubits: self.n_qubits,
            terms: self.labelled_terms().into_iter().collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PauliSum {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = PauliSumRepr::deserialize(deserializer)?;
        check_qubits(repr.n_qubits).map_err(D::Error::custom)?;
        let mut out = PauliSum::zero(repr.n_qubits);
        for (label, c) in repr.terms {
            let letters = PauliKey::parse_letters(&label).map_err(D::Error::custom)?;
            if letters.len() != repr.n_qubits {
                return Err(D::Error::custom(Error::QubitMismatch(repr.n_qubits, letters.len())));
            }
            out.add_term(PauliKey::from_letters(&letters), c);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn xy_is_iz() {
        let x = PauliString::from_label("X").unwrap();
        let y = PauliString::from_label("Y").unwrap();
        let p = x.product(&y).unwrap();
        assert_eq!(p.label(), "Z");
        assert_eq!(p.coeff(), c(0.0, 1.0));
    }

    #[test]
    fn x_squared_is_identity() {
        let x = PauliString::from_label("X").unwrap();
        let p = x.product(&x).unwrap();
        assert_eq!(p.label(), "I");
        assert_eq!(p.coeff(), c(1.0, 0.0));
    }

    #[test]
    fn disjoint_supports_multiply_letterwise() {
        let a = PauliString::from_label("XI").unwrap();
        let b = PauliString::from_label("IY").unwrap();
        let p = a.product(&b).unwrap();
        assert_eq!(p.label(), "XY");
        assert_eq!(p.coeff(), c(1.0, 0.0));
        assert!(a.commutes_with(&b));
    }

    #[test]
    fn product_rejects_mismatched_qubits() {
        let a = PauliString::from_label("XI").unwrap();
        let b = PauliString::from_label("X").unwrap();
        assert_eq!(a.product(&b), Err(Error::QubitMismatch(2, 1)));
    }

    #[test]
    fn dense_matches_kron_convention() {
        // qubit 0 is the leftmost tensor factor
        let xi = PauliString::from_label("XI").unwrap().dense();
        assert_eq!(xi[(2, 0)], c(1.0, 0.0));
        assert_eq!(xi[(1, 0)], c(0.0, 0.0));
        let y = PauliString::from_label("Y").unwrap().dense();
        assert_eq!(y[(0, 1)], c(0.0, -1.0));
        assert_eq!(y[(1, 0)], c(0.0, 1.0));
    }

    #[test]
    fn text_round_trip() {
        let p: PauliString = "0.5*XIZ".parse().unwrap();
        assert_eq!(p.n_qubits(), 3);
        assert_eq!(p.to_string(), "0.5*XIZ");
        let q: PauliString = "(0.25-1.5i)*YY".parse().unwrap();
        assert_eq!(q.coeff(), c(0.25, -1.5));
        assert_eq!(q.to_string().parse::<PauliString>().unwrap(), q);
        assert!("2*XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn sum_text_and_json() {
        let s: PauliSum = "1.0*ZZ - 0.5*XI + 0.25*ZZ".parse().unwrap();
        assert_eq!(s.coeff(&PauliKey::from_letters(&[Pauli::Z, Pauli::Z])), 1.25);
        let json = serde_json::to_string(&s).unwrap();
        let back: PauliSum = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        assert!("ZZ + X".parse::<PauliSum>().is_err());
    }

    #[test]
    fn commutator_over_i_su2() {
        // [X, Z] = -2i Y
        let x = PauliSum::from_label("X", 1.0).unwrap();
        let z = PauliSum::from_label("Z", 1.0).unwrap();
        let c = x.commutator_over_i(&z);
        assert_eq!(c.to_text(), "-2.0*Y");
        // [iX, iZ] = 2i Y
        assert_eq!(x.lie_bracket(&z).to_text(), "2.0*Y");
    }

    #[test]
    fn from_dense_recovers_terms() {
        let s: PauliSum = "0.3*XY + -1.2*ZI + 0.7*II".parse().unwrap();
        let back = PauliSum::from_dense(&s.dense(), 1e-12).unwrap();
        for (k, c) in s.terms() {
            assert_abs_diff_eq!(back.coeff(k), *c, epsilon = 1e-14);
        }
        assert_eq!(back.len(), 3);
    }

    #[test]
    fn apply_matches_dense() {
        let s: PauliSum = "0.3*XY + -1.2*ZI + 0.5*YZ".parse().unwrap();
        let v = [c(0.1, 0.2), c(-0.3, 0.0), c(0.0, 0.7), c(0.4, -0.1)];
        let got = s.apply(&v);
        let m = s.dense();
        for i in 0..4 {
            let want: C64 = (0..4).map(|j| m[(i, j)] * v[j]).sum();
            assert_abs_diff_eq!(got[i].re, want.re, epsilon = 1e-15);
            assert_abs_diff_eq!(got[i].im, want.im, epsilon = 1e-15);
        }
    }
}
