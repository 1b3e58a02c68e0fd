//! Alphabets, integer windows and finite configurations with a tail convention.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Symbol = i32;

/// Ordered finite set of symbols.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Symbol>", into = "Vec<Symbol>")]
pub struct Alphabet {
    symbols: Vec<Symbol>,
}

impl Alphabet {
    pub fn new(mut symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("alphabet must be non-empty"));
        }
        let n = symbols.len();
        symbols.sort_unstable();
        symbols.dedup();
        if symbols.len() != n {
            return Err(Error::invalid("alphabet symbols must be distinct"));
        }
        Ok(Self { symbols })
    }

    /// `{lo, lo+1, ..., hi}`.
    pub fn range(lo: Symbol, hi: Symbol) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("empty symbol range {lo}..={hi}")));
        }
        Ok(Self {
            symbols: (lo..=hi).collect(),
        })
    }

    pub fn binary() -> Self {
        Self {
            symbols: vec![0, 1],
        }
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn contains(&self, s: Symbol) -> bool {
        self.symbols.binary_search(&s).is_ok()
    }

    pub fn index_of(&self, s: Symbol) -> Option<usize> {
        self.symbols.binary_search(&s).ok()
    }
}

impl TryFrom<Vec<Symbol>> for Alphabet {
    type Error = Error;
    fn try_from(v: Vec<Symbol>) -> Result<Self> {
        Alphabet::new(v)
    }
}

impl From<Alphabet> for Vec<Symbol> {
    fn from(a: Alphabet) -> Self {
        a.symbols
    }
}

/// Inclusive integer interval `[lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "(i64, i64)", into = "(i64, i64)")]
pub struct Window {
    lo: i64,
    hi: i64,
}

impl Window {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo > hi {
            return Err(Error::invalid(format!("window [{lo}, {hi}] is empty")));
        }
        Ok(Self { lo, hi })
    }

    pub fn single(i: i64) -> Self {
        Self { lo: i, hi: i }
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.hi
    }

    pub fn size(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    pub fn contains(&self, i: i64) -> bool {
        self.lo <= i && i <= self.hi
    }

    pub fn contains_window(&self, other: &Window) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Window) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.lo..=self.hi
    }
}

impl TryFrom<(i64, i64)> for Window {
    type Error = Error;
    fn try_from((lo, hi): (i64, i64)) -> Result<Self> {
        Window::new(lo, hi)
    }
}

impl From<Window> for (i64, i64) {
    fn from(w: Window) -> Self {
        (w.lo, w.hi)
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// What a configuration looks like to the right of its window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// Every site past `hi` holds the symbol 0.
    ZeroFill,
    /// Nothing is known past `hi`.
    Unspecified,
}

/// A word over an alphabet placed on an integer window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Configuration {
    alphabet: Alphabet,
    window: Window,
    values: Vec<Symbol>,
    tail: Tail,
}

impl Configuration {
    pub fn new(alphabet: Alphabet, lo: i64, values: Vec<Symbol>, tail: Tail) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("configuration needs at least one site"));
        }
        if let Some(bad) = values.iter().find(|v| !alphabet.contains(**v)) {
            return Err(Error::invalid(format!("symbol {bad} is not in the alphabet")));
        }
        if tail == Tail::ZeroFill && !alphabet.contains(0) {
            return Err(Error::invalid("zero-fill tail requires 0 in the alphabet"));
        }
        let window = Window::new(lo, lo + values.len() as i64 - 1)?;
        Ok(Self {
            alphabet,
            window,
            values,
            tail,
        })
    }

    /// A cylinder word: values on `[lo, lo+len)` with nothing said about the rest.
    pub fn word(alphabet: Alphabet, lo: i64, values: Vec<Symbol>) -> Result<Self> {
        Self::new(alphabet, lo, values, Tail::Unspecified)
    }

    /// Binary configuration `values` starting at `lo`, followed by zeros.
    pub fn binary_zero_tail(lo: i64, values: Vec<Symbol>) -> Result<Self> {
        Self::new(Alphabet::binary(), lo, values, Tail::ZeroFill)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn values(&self) -> &[Symbol] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Symbol at site `i`, honouring the tail convention to the right.
    /// `None` means the site is not determined by this configuration.
    pub fn get(&self, i: i64) -> Option<Symbol> {
        if self.window.contains(i) {
            Some(self.values[(i - self.window.lo) as usize])
        } else if i > self.window.hi && self.tail == Tail::ZeroFill {
            Some(0)
        } else {
            None
        }
    }

    /// Highest site whose value is known, `None` when the tail fixes all of them.
    pub fn known_through(&self) -> Option<i64> {
        match self.tail {
            Tail::ZeroFill => None,
            Tail::Unspecified => Some(self.window.hi),
        }
    }

    /// Cylinder obtained by restricting to `w` (tail sites allowed when zero-filled).
    pub fn restrict(&self, w: Window) -> Result<Configuration> {
        let mut values = Vec::with_capacity(w.size());
        for i in w.indices() {
            match self.get(i) {
                Some(v) => values.push(v),
                None => {
                    return Err(Error::invalid(format!(
                        "site {i} is undefined in configuration on {}",
                        self.window
                    )))
                }
            }
        }
        Ok(Configuration {
            alphabet: self.alphabet.clone(),
            window: w,
            values,
            tail: Tail::Unspecified,
        })
    }

    pub fn with_tail(mut self, tail: Tail) -> Result<Self> {
        if tail == Tail::ZeroFill && !self.alphabet.contains(0) {
            return Err(Error::invalid("zero-fill tail requires 0 in the alphabet"));
        }
        self.tail = tail;
        Ok(self)
    }

    /// Copy of `self` with site `i` set to `v`; `i` must lie in the window.
    pub fn with_site(&self, i: i64, v: Symbol) -> Result<Self> {
        if !self.window.contains(i) {
            return Err(Error::invalid(format!("site {i} outside {}", self.window)));
        }
        if !self.alphabet.contains(v) {
            return Err(Error::invalid(format!("symbol {v} is not in the alphabet")));
        }
        let mut c = self.clone();
        c.values[(i - self.window.lo) as usize] = v;
        Ok(c)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.values.iter().map(|v| v.to_string()).collect();
        write!(f, "{}@{}", body.join(","), self.window.lo)?;
        if self.tail == Tail::ZeroFill {
            f.write_str(",0^inf")?;
        }
        Ok(())
    }
}

/// Right-hand part of a glue: a concrete configuration or a bare tail convention.
#[derive(Clone, Copy, Debug)]
pub enum Outer<'a> {
    Config(&'a Configuration),
    ZeroTail,
}

/// Concatenates `inner`, `middle` and `outer` into one configuration.
///
/// The pieces may be passed in any geometric order; their windows must be
/// pairwise disjoint with a contiguous union. The result carries the tail of
/// the right-most piece, or zero-fill for [`Outer::ZeroTail`].
pub fn glue(
    inner: &Configuration,
    middle: Option<&Configuration>,
    outer: Outer<'_>,
) -> Result<Configuration> {
    let mut pieces: Vec<&Configuration> = vec![inner];
    pieces.extend(middle);
    let mut tail_override = None;
    match outer {
        Outer::Config(c) => pieces.push(c),
        Outer::ZeroTail => tail_override = Some(Tail::ZeroFill),
    }
    glue_pieces(&pieces, tail_override)
}

pub(crate) fn glue_pieces(
    pieces: &[&Configuration],
    tail_override: Option<Tail>,
) -> Result<Configuration> {
    let first = pieces
        .first()
        .ok_or_else(|| Error::invalid("nothing to glue"))?;
    let alphabet = first.alphabet.clone();
    if pieces.iter().any(|p| p.alphabet != alphabet) {
        return Err(Error::invalid("glued configurations use different alphabets"));
    }
    let mut sorted: Vec<&Configuration> = pieces.to_vec();
    sorted.sort_by_key(|p| p.window.lo);
    for pair in sorted.windows(2) {
        let (a, b) = (pair[0].window, pair[1].window);
        if a.overlaps(&b) {
            return Err(Error::invalid(format!("windows {a} and {b} overlap")));
        }
        if a.hi + 1 != b.lo {
            return Err(Error::invalid(format!(
                "windows {a} and {b} leave a gap; union is not contiguous"
            )));
        }
    }
    let lo = sorted[0].window.lo;
    let values: Vec<Symbol> = sorted.iter().flat_map(|p| p.values.iter().copied()).collect();
    let tail = tail_override.unwrap_or(sorted[sorted.len() - 1].tail);
    Configuration::new(alphabet, lo, values, tail)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bin(lo: i64, v: &[Symbol]) -> Configuration {
        Configuration::word(Alphabet::binary(), lo, v.to_vec()).unwrap()
    }

    #[test]
    fn alphabet_invariants() {
        assert!(Alphabet::new(vec![]).is_err());
        assert!(Alphabet::new(vec![1, 1]).is_err());
        let a = Alphabet::new(vec![3, 1, 2]).unwrap();
        assert_eq!(a.symbols(), &[1, 2, 3]);
    }

    #[test]
    fn window_rejects_inverted_bounds() {
        assert!(Window::new(3, 2).is_err());
        assert_eq!(Window::new(-2, 2).unwrap().size(), 5);
    }

    #[test]
    fn zero_fill_needs_zero_symbol() {
        let a = Alphabet::range(2, 3).unwrap();
        assert!(Configuration::new(a, 0, vec![2], Tail::ZeroFill).is_err());
    }

    #[test]
    fn glue_with_zero_tail() {
        let g = glue(&bin(0, &[1]), Some(&bin(1, &[0, 1])), Outer::ZeroTail).unwrap();
        let first: Vec<_> = (0..6).map(|i| g.get(i).unwrap()).collect();
        assert_eq!(first, vec![1, 0, 1, 0, 0, 0]);
    }

    #[test]
    fn glue_with_empty_middle() {
        let omega = Configuration::binary_zero_tail(1, vec![0, 1, 1]).unwrap();
        let g = glue(&bin(0, &[1]), None, Outer::Config(&omega)).unwrap();
        assert_eq!(g.values(), &[1, 0, 1, 1]);
        assert_eq!(g.tail(), Tail::ZeroFill);
        assert_eq!(g.get(10), Some(0));
    }

    #[test]
    fn glue_rejects_overlap_gap_and_alphabet_mismatch() {
        let err = glue(&bin(0, &[1, 0]), None, Outer::Config(&bin(1, &[0, 1]))).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(m) if m.contains("overlap")));
        assert!(glue(&bin(0, &[1]), None, Outer::Config(&bin(2, &[0]))).is_err());
        let other = Configuration::word(Alphabet::range(0, 2).unwrap(), 1, vec![2]).unwrap();
        assert!(glue(&bin(0, &[1]), None, Outer::Config(&other)).is_err());
    }

    #[test]
    fn restrict_reads_zero_tail() {
        let c = Configuration::binary_zero_tail(0, vec![1, 1]).unwrap();
        let r = c.restrict(Window::new(1, 4).unwrap()).unwrap();
        assert_eq!(r.values(), &[1, 0, 0, 0]);
        let open = bin(0, &[1, 1]);
        assert!(open.restrict(Window::new(1, 4).unwrap()).is_err());
    }
}
