//! The four graded lattices families live in.
//!
//! * finite sets: subsets of `{1..n}` ordered by inclusion, `n <= 24`
//! * finite-field subspaces: subspaces of `F_q^n` ordered by inclusion,
//!   stored as reduced row echelon bases so equality is structural
//! * divisors: divisors of `n` ordered by divisibility, stored as prime
//!   exponent vectors
//!
//! The continuous real-subspace order has no finite element type; the
//! `continuous` module works with its dimension types directly.
//!
//! A context carries the ambient parameters and is required for every
//! element operation; elements are plain data and only meaningful relative
//! to their context.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::coefficients::{factorize, gaussian_binomial};
use crate::error::{Error, Result};

/// Largest ground-set size for the finite-set lattice.
pub const MAX_SET_GROUND: u32 = 24;
/// Largest dimension for the finite-field subspace lattice.
pub const MAX_SUBSPACE_DIM: u32 = 6;
/// Cap on `q^n` for the subspace lattice.
pub const MAX_SUBSPACE_POINTS: u64 = 1 << 20;

#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum CtxWire {
    Boolean { n: u32 },
    Subspace { q: u64, n: u32 },
    Divisor { n: u64 },
}

/// Ambient lattice: which of the three finite orders, with its parameters.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(try_from = "CtxWire", into = "CtxWire")]
pub enum LatticeCtx {
    Boolean {
        n: u32,
    },
    Subspace {
        q: u64,
        n: u32,
    },
    Divisor {
        n: u64,
        factors: Vec<(u64, u32)>,
    },
}

impl TryFrom<CtxWire> for LatticeCtx {
    type Error = Error;
    fn try_from(w: CtxWire) -> Result<Self> {
        match w {
            CtxWire::Boolean { n } => LatticeCtx::boolean(n),
            CtxWire::Subspace { q, n } => LatticeCtx::subspace(q, n),
            CtxWire::Divisor { n } => LatticeCtx::divisor(n),
        }
    }
}

impl From<LatticeCtx> for CtxWire {
    fn from(c: LatticeCtx) -> CtxWire {
        match c {
            LatticeCtx::Boolean { n } => CtxWire::Boolean { n },
            LatticeCtx::Subspace { q, n } => CtxWire::Subspace { q, n },
            LatticeCtx::Divisor { n, .. } => CtxWire::Divisor { n },
        }
    }
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut p = 2u64;
    while p * p <= q {
        if q % p == 0 {
            return false;
        }
        p += 1;
    }
    true
}

/// An element of one of the finite lattices. Stored canonically, so derived
/// equality and ordering agree with mathematical equality.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum LatticeElem {
    /// Bitmask over the ground set; bit `i` is member `i + 1`.
    Subset(u32),
    /// Reduced row echelon basis over `F_q`, zero rows dropped. The zero
    /// subspace is the empty matrix.
    Subspace(Vec<Vec<u64>>),
    /// Prime exponents aligned with the context's factor list.
    Divisor(Vec<u32>),
}

impl LatticeCtx {
    pub fn boolean(n: u32) -> Result<Self> {
        if n == 0 || n > MAX_SET_GROUND {
            return Err(Error::InvalidContext(format!(
                "ground set size {n} outside 1..={MAX_SET_GROUND}"
            )));
        }
        Ok(LatticeCtx::Boolean { n })
    }

    pub fn subspace(q: u64, n: u32) -> Result<Self> {
        if !is_prime(q) {
            return Err(Error::InvalidContext(format!("{q} is not prime")));
        }
        if n == 0 || n > MAX_SUBSPACE_DIM {
            return Err(Error::InvalidContext(format!(
                "dimension {n} outside 1..={MAX_SUBSPACE_DIM}"
            )));
        }
        let points = q.checked_pow(n).filter(|&p| p <= MAX_SUBSPACE_POINTS);
        if points.is_none() {
            return Err(Error::InvalidContext(format!(
                "q^n = {q}^{n} exceeds {MAX_SUBSPACE_POINTS}"
            )));
        }
        Ok(LatticeCtx::Subspace { q, n })
    }

    pub fn divisor(n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidContext("divisor lattice of zero".into()));
        }
        Ok(LatticeCtx::Divisor {
            n,
            factors: factorize(n)?,
        })
    }

    pub fn describe(&self) -> String {
        match self {
            LatticeCtx::Boolean { n } => format!("boolean(n={n})"),
            LatticeCtx::Subspace { q, n } => format!("subspace(q={q},n={n})"),
            LatticeCtx::Divisor { n, .. } => format!("divisor(n={n})"),
        }
    }

    /// Rank of the top element.
    pub fn top_rank(&self) -> u32 {
        match self {
            LatticeCtx::Boolean { n } => *n,
            LatticeCtx::Subspace { n, .. } => *n,
            LatticeCtx::Divisor { factors, .. } => factors.iter().map(|&(_, e)| e).sum(),
        }
    }

    pub fn bottom(&self) -> LatticeElem {
        match self {
            LatticeCtx::Boolean { .. } => LatticeElem::Subset(0),
            LatticeCtx::Subspace { .. } => LatticeElem::Subspace(vec![]),
            LatticeCtx::Divisor { factors, .. } => LatticeElem::Divisor(vec![0; factors.len()]),
        }
    }

    pub fn top(&self) -> LatticeElem {
        match self {
            LatticeCtx::Boolean { n } => LatticeElem::Subset(full_mask(*n)),
            LatticeCtx::Subspace { q, n } => {
                let n = *n as usize;
                let mut rows = vec![vec![0u64; n]; n];
                for (i, row) in rows.iter_mut().enumerate() {
                    row[i] = 1;
                }
                let _ = q;
                LatticeElem::Subspace(rows)
            }
            LatticeCtx::Divisor { factors, .. } => {
                LatticeElem::Divisor(factors.iter().map(|&(_, e)| e).collect())
            }
        }
    }

    /// Checks that the element is structurally valid for this context and
    /// in canonical form.
    pub fn validate(&self, elem: &LatticeElem) -> Result<()> {
        let mismatch = || Error::ContextMismatch(self.describe());
        match (self, elem) {
            (LatticeCtx::Boolean { n }, LatticeElem::Subset(mask)) => {
                if *mask & !full_mask(*n) != 0 {
                    return Err(mismatch());
                }
                Ok(())
            }
            (LatticeCtx::Subspace { q, n }, LatticeElem::Subspace(rows)) => {
                if rows.iter().any(|r| r.len() != *n as usize)
                    || rows.iter().flatten().any(|&x| x >= *q)
                {
                    return Err(mismatch());
                }
                let canon = rref(rows.clone(), *q, *n as usize);
                if &canon != rows {
                    return Err(mismatch());
                }
                Ok(())
            }
            (LatticeCtx::Divisor { factors, .. }, LatticeElem::Divisor(exps)) => {
                if exps.len() != factors.len()
                    || exps.iter().zip(factors).any(|(&x, &(_, e))| x > e)
                {
                    return Err(mismatch());
                }
                Ok(())
            }
            _ => Err(mismatch()),
        }
    }

    pub fn rank(&self, elem: &LatticeElem) -> Result<u32> {
        self.validate(elem)?;
        Ok(match elem {
            LatticeElem::Subset(mask) => mask.count_ones(),
            LatticeElem::Subspace(rows) => rows.len() as u32,
            LatticeElem::Divisor(exps) => exps.iter().sum(),
        })
    }

    /// The partial order of the lattice.
    pub fn leq(&self, a: &LatticeElem, b: &LatticeElem) -> Result<bool> {
        self.validate(a)?;
        self.validate(b)?;
        Ok(match (a, b) {
            (LatticeElem::Subset(x), LatticeElem::Subset(y)) => x & !y == 0,
            (LatticeElem::Subspace(x), LatticeElem::Subspace(y)) => {
                let LatticeCtx::Subspace { q, n } = self else {
                    unreachable!()
                };
                rows_contained(x, y, *q, *n as usize)
            }
            (LatticeElem::Divisor(x), LatticeElem::Divisor(y)) => {
                x.iter().zip(y).all(|(&a, &b)| a <= b)
            }
            _ => unreachable!("validate filters mixed variants"),
        })
    }

    /// Builds a subset element from 1-based members.
    pub fn subset(&self, members: &[u32]) -> Result<LatticeElem> {
        let LatticeCtx::Boolean { n } = self else {
            return Err(Error::ContextMismatch(self.describe()));
        };
        let mut mask = 0u32;
        for &m in members {
            if m == 0 || m > *n {
                return Err(Error::Invalid(format!(
                    "member {m} outside ground set 1..={n}"
                )));
            }
            mask |= 1 << (m - 1);
        }
        Ok(LatticeElem::Subset(mask))
    }

    /// Builds a subspace element from spanning rows; the rows are reduced
    /// to echelon form, so any spanning set of the same space is accepted.
    pub fn subspace_from_rows(&self, rows: &[Vec<u64>]) -> Result<LatticeElem> {
        let LatticeCtx::Subspace { q, n } = self else {
            return Err(Error::ContextMismatch(self.describe()));
        };
        for row in rows {
            if row.len() != *n as usize {
                return Err(Error::Invalid(format!(
                    "basis row has {} entries, expected {n}",
                    row.len()
                )));
            }
        }
        let reduced: Vec<Vec<u64>> = rows
            .iter()
            .map(|row| row.iter().map(|&x| x % *q).collect())
            .collect();
        Ok(LatticeElem::Subspace(rref(reduced, *q, *n as usize)))
    }

    /// Builds a divisor element from the divisor's value.
    pub fn divisor_elem(&self, d: u64) -> Result<LatticeElem> {
        let LatticeCtx::Divisor { n, factors } = self else {
            return Err(Error::ContextMismatch(self.describe()));
        };
        if d == 0 || n % d != 0 {
            return Err(Error::Invalid(format!("{d} does not divide {n}")));
        }
        let mut rem = d;
        let mut exps = Vec::with_capacity(factors.len());
        for &(p, _) in factors {
            let mut e = 0;
            while rem % p == 0 {
                rem /= p;
                e += 1;
            }
            exps.push(e);
        }
        debug_assert_eq!(rem, 1);
        Ok(LatticeElem::Divisor(exps))
    }

    /// The divisor's integer value.
    pub fn divisor_value(&self, elem: &LatticeElem) -> Result<u64> {
        self.validate(elem)?;
        let (LatticeCtx::Divisor { factors, .. }, LatticeElem::Divisor(exps)) = (self, elem)
        else {
            return Err(Error::ContextMismatch(self.describe()));
        };
        let mut d = 1u64;
        for (&(p, _), &e) in factors.iter().zip(exps) {
            for _ in 0..e {
                d *= p;
            }
        }
        Ok(d)
    }

    /// Least upper bound. Defined for the set and divisor lattices, where
    /// cumulative joins of decompositions are taken.
    pub fn join(&self, a: &LatticeElem, b: &LatticeElem) -> Result<LatticeElem> {
        self.validate(a)?;
        self.validate(b)?;
        match (a, b) {
            (LatticeElem::Subset(x), LatticeElem::Subset(y)) => Ok(LatticeElem::Subset(x | y)),
            (LatticeElem::Divisor(x), LatticeElem::Divisor(y)) => {
                let LatticeCtx::Divisor { factors, .. } = self else {
                    unreachable!()
                };
                let joined: Vec<u32> = x.iter().zip(y).map(|(&a, &b)| a.max(b)).collect();
                if joined.iter().zip(factors).any(|(&x, &(_, e))| x > e) {
                    return Err(Error::Invalid("join exceeds the ambient element".into()));
                }
                Ok(LatticeElem::Divisor(joined))
            }
            _ => Err(Error::ContextMismatch(format!(
                "join not supported in {}",
                self.describe()
            ))),
        }
    }

    /// Combines disjoint parts: disjoint union of sets, product of
    /// divisors. Errors if the parts overlap (share rank).
    pub fn combine_disjoint(&self, a: &LatticeElem, b: &LatticeElem) -> Result<LatticeElem> {
        self.validate(a)?;
        self.validate(b)?;
        match (a, b) {
            (LatticeElem::Subset(x), LatticeElem::Subset(y)) => {
                if x & y != 0 {
                    return Err(Error::Invalid("parts overlap".into()));
                }
                Ok(LatticeElem::Subset(x | y))
            }
            (LatticeElem::Divisor(x), LatticeElem::Divisor(y)) => {
                let LatticeCtx::Divisor { factors, .. } = self else {
                    unreachable!()
                };
                let combined: Vec<u32> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
                if combined.iter().zip(factors).any(|(&x, &(_, e))| x > e) {
                    return Err(Error::Invalid("product does not divide the top".into()));
                }
                Ok(LatticeElem::Divisor(combined))
            }
            _ => Err(Error::ContextMismatch(format!(
                "disjoint combination not supported in {}",
                self.describe()
            ))),
        }
    }

    /// Removes a lower part from `b`: set difference `b \ a` for
    /// `a <= b` in the set lattice, exact quotient in the divisor lattice.
    pub fn remove_lower(&self, b: &LatticeElem, a: &LatticeElem) -> Result<LatticeElem> {
        if !self.leq(a, b)? {
            return Err(Error::Invalid("cannot remove a part that is not below".into()));
        }
        match (a, b) {
            (LatticeElem::Subset(x), LatticeElem::Subset(y)) => Ok(LatticeElem::Subset(y & !x)),
            (LatticeElem::Divisor(x), LatticeElem::Divisor(y)) => Ok(LatticeElem::Divisor(
                x.iter().zip(y).map(|(&a, &b)| b - a).collect(),
            )),
            _ => Err(Error::ContextMismatch(format!(
                "removal not supported in {}",
                self.describe()
            ))),
        }
    }

    /// Whether the tuple splits the top element: parts pairwise independent
    /// and assembling the whole. Order matters for typing but not for the
    /// predicate.
    pub fn is_decomposition(&self, parts: &[LatticeElem]) -> Result<bool> {
        for p in parts {
            self.validate(p)?;
        }
        match self {
            LatticeCtx::Boolean { n } => {
                let mut seen = 0u32;
                for p in parts {
                    let LatticeElem::Subset(mask) = p else { unreachable!() };
                    if seen & mask != 0 {
                        return Ok(false);
                    }
                    seen |= mask;
                }
                Ok(seen == full_mask(*n))
            }
            LatticeCtx::Subspace { q, n } => {
                let mut dims = 0u64;
                let mut stacked: Vec<Vec<u64>> = Vec::new();
                for p in parts {
                    let LatticeElem::Subspace(rows) = p else { unreachable!() };
                    dims += rows.len() as u64;
                    stacked.extend(rows.iter().cloned());
                }
                if dims != *n as u64 {
                    return Ok(false);
                }
                Ok(rref(stacked, *q, *n as usize).len() == *n as usize)
            }
            LatticeCtx::Divisor { factors, .. } => {
                let mut sums = vec![0u32; factors.len()];
                for p in parts {
                    let LatticeElem::Divisor(exps) = p else { unreachable!() };
                    for (s, &e) in sums.iter_mut().zip(exps) {
                        *s += e;
                    }
                }
                Ok(sums.iter().zip(factors).all(|(&s, &(_, e))| s == e))
            }
        }
    }

    /// Whether the tuple is weakly increasing in the lattice order.
    pub fn is_multichain(&self, parts: &[LatticeElem]) -> Result<bool> {
        for w in parts.windows(2) {
            if !self.leq(&w[0], &w[1])? {
                return Ok(false);
            }
        }
        if let Some(last) = parts.last() {
            self.validate(last)?;
        }
        Ok(true)
    }

    /// Number of complements of the element: elements meeting it at the
    /// bottom and joining it to the top.
    pub fn complement_count(&self, elem: &LatticeElem) -> Result<BigInt> {
        self.validate(elem)?;
        match (self, elem) {
            (LatticeCtx::Boolean { .. }, _) => Ok(BigInt::one()),
            (LatticeCtx::Subspace { q, n }, LatticeElem::Subspace(rows)) => {
                let k = rows.len() as u32;
                Ok(BigInt::from(*q).pow(k * (n - k)))
            }
            (LatticeCtx::Divisor { factors, .. }, LatticeElem::Divisor(exps)) => {
                // A divisor has a complement exactly when it contains each
                // prime either fully or not at all, and then it is unique.
                let ok = exps
                    .iter()
                    .zip(factors)
                    .all(|(&x, &(_, e))| x == 0 || x == e);
                Ok(if ok { BigInt::one() } else { BigInt::zero() })
            }
            _ => unreachable!("validate filters mixed variants"),
        }
    }

    /// Number of elements of the given rank.
    pub fn rank_count(&self, k: u32) -> Result<BigInt> {
        let top = self.top_rank();
        if k > top {
            return Err(Error::RankOutOfRange { rank: k, max: top });
        }
        match self {
            LatticeCtx::Boolean { n } => {
                let mut acc = BigInt::one();
                for i in 0..k as u64 {
                    acc = acc * (*n as u64 - i) / (i + 1);
                }
                Ok(acc)
            }
            LatticeCtx::Subspace { q, n } => gaussian_binomial(*q, *n as u64, k),
            LatticeCtx::Divisor { n, .. } => {
                Ok(crate::coefficients::divisor_rank_counts(*n)?[k as usize].clone())
            }
        }
    }

    pub fn total_count(&self) -> Result<BigInt> {
        let mut acc = BigInt::zero();
        for k in 0..=self.top_rank() {
            acc += self.rank_count(k)?;
        }
        Ok(acc)
    }

    /// Iterates all elements of one rank in a stable canonical order.
    pub fn elements_of_rank(&self, k: u32) -> Result<RankElems> {
        let top = self.top_rank();
        if k > top {
            return Err(Error::RankOutOfRange { rank: k, max: top });
        }
        Ok(match self {
            LatticeCtx::Boolean { n } => RankElems::subsets(*n, k),
            LatticeCtx::Subspace { q, n } => {
                RankElems::list(enumerate_subspaces(*q, *n as usize, k as usize))
            }
            LatticeCtx::Divisor { factors, .. } => {
                let bounds: Vec<u32> = factors.iter().map(|&(_, e)| e).collect();
                let mut out = Vec::new();
                enumerate_bounded_vectors(&bounds, k, &mut out);
                RankElems::list(out.into_iter().map(LatticeElem::Divisor).collect())
            }
        })
    }

    /// Iterates every element, rank by rank.
    pub fn all_elements(&self) -> impl Iterator<Item = LatticeElem> + '_ {
        (0..=self.top_rank()).flat_map(move |k| {
            self.elements_of_rank(k)
                .expect("rank in range")
                .collect::<Vec<_>>()
        })
    }

    /// JSON form of an element, per the interchange format: sorted 1-based
    /// member arrays for sets, echelon basis rows for subspaces, the
    /// divisor's value for divisors.
    pub fn elem_to_json(&self, elem: &LatticeElem) -> Result<Value> {
        self.validate(elem)?;
        Ok(match elem {
            LatticeElem::Subset(mask) => {
                let members: Vec<u32> = (0..32).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect();
                json!(members)
            }
            LatticeElem::Subspace(rows) => json!(rows),
            LatticeElem::Divisor(_) => json!(self.divisor_value(elem)?),
        })
    }

    pub fn elem_from_json(&self, value: &Value) -> Result<LatticeElem> {
        let bad = |what: &str| Error::Invalid(format!("{what} for {}", self.describe()));
        match self {
            LatticeCtx::Boolean { .. } => {
                let arr = value.as_array().ok_or_else(|| bad("expected member array"))?;
                let members = arr
                    .iter()
                    .map(|v| {
                        v.as_u64()
                            .and_then(|x| u32::try_from(x).ok())
                            .ok_or_else(|| bad("expected positive integer member"))
                    })
                    .collect::<Result<Vec<u32>>>()?;
                self.subset(&members)
            }
            LatticeCtx::Subspace { .. } => {
                let arr = value.as_array().ok_or_else(|| bad("expected basis row array"))?;
                let rows = arr
                    .iter()
                    .map(|row| {
                        row.as_array()
                            .ok_or_else(|| bad("expected basis row"))?
                            .iter()
                            .map(|v| v.as_u64().ok_or_else(|| bad("expected field entry")))
                            .collect::<Result<Vec<u64>>>()
                    })
                    .collect::<Result<Vec<Vec<u64>>>>()?;
                self.subspace_from_rows(&rows)
            }
            LatticeCtx::Divisor { .. } => {
                let d = value.as_u64().ok_or_else(|| bad("expected divisor value"))?;
                self.divisor_elem(d)
            }
        }
    }

    /// Short human-readable form of an element.
    pub fn elem_to_string(&self, elem: &LatticeElem) -> String {
        match elem {
            LatticeElem::Subset(mask) => {
                let members: Vec<String> = (0..32)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| (i + 1).to_string())
                    .collect();
                format!("{{{}}}", members.join(","))
            }
            LatticeElem::Subspace(rows) => {
                if rows.is_empty() {
                    "<0>".to_string()
                } else {
                    let rs: Vec<String> = rows
                        .iter()
                        .map(|r| {
                            format!(
                                "[{}]",
                                r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
                            )
                        })
                        .collect();
                    format!("<{}>", rs.join(" "))
                }
            }
            LatticeElem::Divisor(_) => self
                .divisor_value(elem)
                .map(|d| d.to_string())
                .unwrap_or_else(|_| "?".to_string()),
        }
    }
}

fn full_mask(n: u32) -> u32 {
    if n >= 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

/// Iterator over the elements of one rank.
pub struct RankElems {
    inner: RankElemsInner,
}

enum RankElemsInner {
    Gosper { limit: u32, current: Option<u32> },
    List(std::vec::IntoIter<LatticeElem>),
}

impl RankElems {
    fn subsets(n: u32, k: u32) -> Self {
        let start = if k == 0 { 0 } else { (1u32 << k) - 1 };
        RankElems {
            inner: RankElemsInner::Gosper {
                limit: full_mask(n),
                current: Some(start),
            },
        }
    }

    fn list(items: Vec<LatticeElem>) -> Self {
        RankElems {
            inner: RankElemsInner::List(items.into_iter()),
        }
    }
}

impl Iterator for RankElems {
    type Item = LatticeElem;

    fn next(&mut self) -> Option<LatticeElem> {
        match &mut self.inner {
            RankElemsInner::Gosper { limit, current } => {
                let mask = (*current)?;
                if mask > *limit {
                    *current = None;
                    return None;
                }
                // Gosper's hack: next mask with the same popcount.
                *current = if mask == 0 {
                    None
                } else {
                    let low = mask & mask.wrapping_neg();
                    let ripple = mask + low;
                    if ripple == 0 {
                        None
                    } else {
                        Some(ripple | (((mask ^ ripple) >> 2) / low))
                    }
                };
                Some(LatticeElem::Subset(mask))
            }
            RankElemsInner::List(it) => it.next(),
        }
    }
}

/// Reduced row echelon form over `F_q`, zero rows removed. The result is
/// the canonical representative of the row space.
pub(crate) fn rref(mut rows: Vec<Vec<u64>>, q: u64, ncols: usize) -> Vec<Vec<u64>> {
    let mut pivot_row = 0usize;
    for col in 0..ncols {
        let Some(src) = (pivot_row..rows.len()).find(|&r| rows[r][col] != 0) else {
            continue;
        };
        rows.swap(pivot_row, src);
        let inv = mod_inverse(rows[pivot_row][col], q);
        for x in rows[pivot_row].iter_mut() {
            *x = *x * inv % q;
        }
        for r in 0..rows.len() {
            if r != pivot_row && rows[r][col] != 0 {
                let factor = rows[r][col];
                for c in 0..ncols {
                    let sub = factor * rows[pivot_row][c] % q;
                    rows[r][c] = (rows[r][c] + q - sub) % q;
                }
            }
        }
        pivot_row += 1;
        if pivot_row == rows.len() {
            break;
        }
    }
    rows.truncate(pivot_row);
    rows
}

fn mod_inverse(a: u64, q: u64) -> u64 {
    // Fermat inverse; q is prime and a is nonzero mod q.
    mod_pow(a % q, q - 2, q)
}

fn mod_pow(mut base: u64, mut exp: u64, q: u64) -> u64 {
    let mut acc = 1u64;
    base %= q;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * base % q;
        }
        base = base * base % q;
        exp >>= 1;
    }
    acc
}

/// Whether every row of `xs` lies in the row space of the echelon basis
/// `ys`.
fn rows_contained(xs: &[Vec<u64>], ys: &[Vec<u64>], q: u64, ncols: usize) -> bool {
    // Pivot positions of ys, which is already in echelon form.
    let pivots: Vec<usize> = ys
        .iter()
        .map(|row| row.iter().position(|&x| x != 0).expect("no zero rows"))
        .collect();
    for x in xs {
        let mut x = x.clone();
        for (y, &p) in ys.iter().zip(&pivots) {
            let factor = x[p];
            if factor != 0 {
                for c in 0..ncols {
                    let sub = factor * y[c] % q;
                    x[c] = (x[c] + q - sub) % q;
                }
            }
        }
        if x.iter().any(|&v| v != 0) {
            return false;
        }
    }
    true
}

/// All `k`-dimensional subspaces of `F_q^n` as echelon bases, enumerated by
/// pivot-column set and free entries.
fn enumerate_subspaces(q: u64, n: usize, k: usize) -> Vec<LatticeElem> {
    if k == 0 {
        return vec![LatticeElem::Subspace(vec![])];
    }
    if k > n {
        return vec![];
    }
    let mut out = Vec::new();
    // Pivot sets as sorted column indices.
    let mut pivots: Vec<usize> = (0..k).collect();
    loop {
        // Free positions: to the right of each pivot, excluding pivot columns.
        let mut free: Vec<(usize, usize)> = Vec::new();
        for (i, &p) in pivots.iter().enumerate() {
            for c in (p + 1)..n {
                if !pivots.contains(&c) {
                    free.push((i, c));
                }
            }
        }
        let mut digits = vec![0u64; free.len()];
        loop {
            let mut rows = vec![vec![0u64; n]; k];
            for (i, &p) in pivots.iter().enumerate() {
                rows[i][p] = 1;
            }
            for (&(i, c), &d) in free.iter().zip(&digits) {
                rows[i][c] = d;
            }
            out.push(LatticeElem::Subspace(rows));
            // Odometer over F_q digits.
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    break;
                }
                digits[pos] += 1;
                if digits[pos] < q {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == digits.len() {
                break;
            }
        }
        // Next pivot combination in lexicographic order.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if pivots[i] < n - (k - i) {
                pivots[i] += 1;
                for j in (i + 1)..k {
                    pivots[j] = pivots[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// All exponent vectors within `bounds` summing to `k`.
fn enumerate_bounded_vectors(bounds: &[u32], k: u32, out: &mut Vec<Vec<u32>>) {
    fn rec(bounds: &[u32], idx: usize, remaining: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if idx == bounds.len() {
            if remaining == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let tail: u32 = bounds[idx + 1..].iter().sum();
        let lo = remaining.saturating_sub(tail);
        let hi = bounds[idx].min(remaining);
        for v in lo..=hi {
            cur.push(v);
            rec(bounds, idx + 1, remaining - v, cur, out);
            cur.pop();
        }
    }
    let mut cur = Vec::new();
    rec(bounds, 0, k, &mut cur, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn context_guards() {
        assert!(LatticeCtx::boolean(0).is_err());
        assert!(LatticeCtx::boolean(25).is_err());
        assert!(LatticeCtx::boolean(24).is_ok());
        assert!(LatticeCtx::subspace(4, 2).is_err());
        assert!(LatticeCtx::subspace(2, 7).is_err());
        assert!(LatticeCtx::subspace(1021, 2).is_ok());
        assert!(LatticeCtx::subspace(1021, 3).is_err());
        assert!(LatticeCtx::divisor(0).is_err());
        assert!(LatticeCtx::divisor(1).is_ok());
    }

    #[test]
    fn ctx_json_round_trip() {
        for ctx in [
            LatticeCtx::boolean(4).unwrap(),
            LatticeCtx::subspace(3, 2).unwrap(),
            LatticeCtx::divisor(360).unwrap(),
        ] {
            let v = serde_json::to_value(&ctx).unwrap();
            let back: LatticeCtx = serde_json::from_value(v.clone()).unwrap();
            assert_eq!(ctx, back);
        }
        let v = serde_json::json!({"kind": "boolean", "n": 4});
        let ctx: LatticeCtx = serde_json::from_value(v).unwrap();
        assert_eq!(ctx, LatticeCtx::boolean(4).unwrap());
        let bad = serde_json::json!({"kind": "subspace", "q": 4, "n": 2});
        assert!(serde_json::from_value::<LatticeCtx>(bad).is_err());
    }

    #[test]
    fn subset_order_and_rank() {
        let ctx = LatticeCtx::boolean(4).unwrap();
        let a = ctx.subset(&[1, 3]).unwrap();
        let b = ctx.subset(&[1, 2, 3]).unwrap();
        assert!(ctx.leq(&a, &b).unwrap());
        assert!(!ctx.leq(&b, &a).unwrap());
        assert_eq!(ctx.rank(&a).unwrap(), 2);
        assert_eq!(ctx.rank(&ctx.bottom()).unwrap(), 0);
        assert_eq!(ctx.rank(&ctx.top()).unwrap(), 4);
        assert!(ctx.subset(&[5]).is_err());
    }

    #[test]
    fn subset_enumeration_counts() {
        let ctx = LatticeCtx::boolean(6).unwrap();
        let expect = [1u32, 6, 15, 20, 15, 6, 1];
        for (k, &c) in expect.iter().enumerate() {
            let got: Vec<_> = ctx.elements_of_rank(k as u32).unwrap().collect();
            assert_eq!(got.len(), c as usize, "rank {k}");
            assert_eq!(ctx.rank_count(k as u32).unwrap(), BigInt::from(c));
            for e in &got {
                assert_eq!(ctx.rank(e).unwrap(), k as u32);
            }
        }
        assert_eq!(ctx.all_elements().count(), 64);
    }

    #[test]
    fn rref_canonicalizes_spanning_sets() {
        let ctx = LatticeCtx::subspace(2, 3).unwrap();
        // Two spanning sets of the same plane.
        let a = ctx
            .subspace_from_rows(&[vec![1, 1, 0], vec![0, 1, 1]])
            .unwrap();
        let b = ctx
            .subspace_from_rows(&[vec![1, 0, 1], vec![1, 1, 0], vec![0, 1, 1]])
            .unwrap();
        assert_eq!(a, b);
        assert_eq!(ctx.rank(&a).unwrap(), 2);
        // The zero subspace is the empty matrix.
        let z = ctx.subspace_from_rows(&[vec![0, 0, 0]]).unwrap();
        assert_eq!(z, LatticeElem::Subspace(vec![]));
        assert_eq!(ctx.rank(&z).unwrap(), 0);
    }

    #[test]
    fn subspace_enumeration_matches_gaussian_counts() {
        for (q, n) in [(2u64, 2u32), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2)] {
            let ctx = LatticeCtx::subspace(q, n).unwrap();
            for k in 0..=n {
                let elems: Vec<_> = ctx.elements_of_rank(k).unwrap().collect();
                let expect = gaussian_binomial(q, n as u64, k).unwrap();
                assert_eq!(BigInt::from(elems.len()), expect, "q={q} n={n} k={k}");
                // All distinct and all valid.
                let set: std::collections::BTreeSet<_> = elems.iter().cloned().collect();
                assert_eq!(set.len(), elems.len());
                for e in &elems {
                    ctx.validate(e).unwrap();
                }
            }
        }
    }

    #[test]
    fn subspace_order_by_containment() {
        let ctx = LatticeCtx::subspace(2, 3).unwrap();
        let line = ctx.subspace_from_rows(&[vec![1, 1, 0]]).unwrap();
        let plane = ctx
            .subspace_from_rows(&[vec![1, 0, 1], vec![0, 1, 1]])
            .unwrap();
        assert!(ctx.leq(&line, &plane).unwrap());
        let other = ctx.subspace_from_rows(&[vec![1, 0, 0]]).unwrap();
        assert!(!ctx.leq(&other, &plane).unwrap());
        assert!(ctx.leq(&ctx.bottom(), &line).unwrap());
        assert!(ctx.leq(&plane, &ctx.top()).unwrap());
    }

    #[test]
    fn divisor_lattice_small() {
        let ctx = LatticeCtx::divisor(12).unwrap();
        assert_eq!(ctx.top_rank(), 3);
        let six = ctx.divisor_elem(6).unwrap();
        let twelve = ctx.divisor_elem(12).unwrap();
        assert!(ctx.leq(&six, &twelve).unwrap());
        let four = ctx.divisor_elem(4).unwrap();
        assert!(!ctx.leq(&six, &four).unwrap());
        assert_eq!(ctx.rank(&six).unwrap(), 2);
        assert_eq!(ctx.divisor_value(&six).unwrap(), 6);
        assert!(ctx.divisor_elem(5).is_err());
        let ranks: Vec<usize> = (0..=3)
            .map(|k| ctx.elements_of_rank(k).unwrap().count())
            .collect();
        assert_eq!(ranks, vec![1, 2, 2, 1]);
    }

    #[test]
    fn decomposition_predicate() {
        let ctx = LatticeCtx::boolean(4).unwrap();
        let parts = [
            ctx.subset(&[1]).unwrap(),
            ctx.subset(&[3]).unwrap(),
            ctx.subset(&[2, 4]).unwrap(),
        ];
        assert!(ctx.is_decomposition(&parts).unwrap());
        let overlap = [ctx.subset(&[1, 2]).unwrap(), ctx.subset(&[2, 3, 4]).unwrap()];
        assert!(!ctx.is_decomposition(&overlap).unwrap());
        let incomplete = [ctx.subset(&[1]).unwrap(), ctx.subset(&[2]).unwrap()];
        assert!(!ctx.is_decomposition(&incomplete).unwrap());
        // Zero parts are harmless.
        let with_empty = [
            ctx.subset(&[]).unwrap(),
            ctx.subset(&[1, 2]).unwrap(),
            ctx.subset(&[3, 4]).unwrap(),
        ];
        assert!(ctx.is_decomposition(&with_empty).unwrap());

        let dctx = LatticeCtx::divisor(12).unwrap();
        let dparts = [
            dctx.divisor_elem(2).unwrap(),
            dctx.divisor_elem(6).unwrap(),
        ];
        assert!(dctx.is_decomposition(&dparts).unwrap());
        let dbad = [dctx.divisor_elem(2).unwrap(), dctx.divisor_elem(4).unwrap()];
        assert!(!dctx.is_decomposition(&dbad).unwrap());

        let sctx = LatticeCtx::subspace(2, 2).unwrap();
        let l1 = sctx.subspace_from_rows(&[vec![1, 0]]).unwrap();
        let l2 = sctx.subspace_from_rows(&[vec![1, 1]]).unwrap();
        assert!(sctx.is_decomposition(&[l1.clone(), l2]).unwrap());
        assert!(!sctx.is_decomposition(&[l1.clone(), l1]).unwrap());
    }

    #[test]
    fn subspace_complement_counts() {
        let ctx = LatticeCtx::subspace(2, 4).unwrap();
        for k in 0..=4u32 {
            let e = ctx.elements_of_rank(k).unwrap().next().unwrap();
            assert_eq!(
                ctx.complement_count(&e).unwrap(),
                BigInt::from(2u64).pow(k * (4 - k))
            );
        }
        // Cross-check by brute force on a small case: complements of a
        // line in F_2^2 are the other two lines.
        let ctx = LatticeCtx::subspace(2, 2).unwrap();
        let line = ctx.subspace_from_rows(&[vec![1, 0]]).unwrap();
        let mut brute = 0;
        for other in ctx.elements_of_rank(1).unwrap() {
            if ctx.is_decomposition(&[line.clone(), other]).unwrap() {
                brute += 1;
            }
        }
        assert_eq!(BigInt::from(brute), ctx.complement_count(&line).unwrap());
    }

    #[test]
    fn divisor_complement_counts() {
        let ctx = LatticeCtx::divisor(12).unwrap();
        assert_eq!(
            ctx.complement_count(&ctx.divisor_elem(4).unwrap()).unwrap(),
            BigInt::one()
        );
        assert_eq!(
            ctx.complement_count(&ctx.divisor_elem(2).unwrap()).unwrap(),
            BigInt::zero()
        );
        assert_eq!(
            ctx.complement_count(&ctx.divisor_elem(3).unwrap()).unwrap(),
            BigInt::one()
        );
    }

    #[test]
    fn elem_json_round_trip() {
        let ctx = LatticeCtx::boolean(5).unwrap();
        let e = ctx.subset(&[2, 5, 3]).unwrap();
        let v = ctx.elem_to_json(&e).unwrap();
        assert_eq!(v, serde_json::json!([2, 3, 5]));
        assert_eq!(ctx.elem_from_json(&v).unwrap(), e);

        let sctx = LatticeCtx::subspace(2, 3).unwrap();
        let s = sctx
            .subspace_from_rows(&[vec![1, 1, 0], vec![0, 1, 1]])
            .unwrap();
        let v = sctx.elem_to_json(&s).unwrap();
        assert_eq!(sctx.elem_from_json(&v).unwrap(), s);
        // A non-canonical spanning set decodes to the same element.
        let spanning = serde_json::json!([[1, 0, 1], [0, 1, 1], [1, 1, 0]]);
        assert_eq!(sctx.elem_from_json(&spanning).unwrap(), s);

        let dctx = LatticeCtx::divisor(360).unwrap();
        let d = dctx.divisor_elem(45).unwrap();
        let v = dctx.elem_to_json(&d).unwrap();
        assert_eq!(v, serde_json::json!(45));
        assert_eq!(dctx.elem_from_json(&v).unwrap(), d);
        assert!(dctx.elem_from_json(&serde_json::json!(7)).is_err());
    }

    #[test]
    fn validate_rejects_foreign_and_malformed() {
        let b = LatticeCtx::boolean(3).unwrap();
        let d = LatticeCtx::divisor(12).unwrap();
        let e = b.subset(&[1]).unwrap();
        assert!(d.validate(&e).is_err());
        assert!(b.validate(&LatticeElem::Subset(0b1000)).is_err());
        let s = LatticeCtx::subspace(2, 2).unwrap();
        // Not in echelon form.
        assert!(s.validate(&LatticeElem::Subspace(vec![vec![1, 1], vec![1, 0]])).is_err());
    }

    proptest! {
        #[test]
        fn subset_leq_is_containment(xs in prop::bits::u32::masked(0xfff), ys in prop::bits::u32::masked(0xfff)) {
            let ctx = LatticeCtx::boolean(12).unwrap();
            let a = LatticeElem::Subset(xs);
            let b = LatticeElem::Subset(ys);
            let expect = (xs & ys) == xs;
            prop_assert_eq!(ctx.leq(&a, &b).unwrap(), expect);
        }

        #[test]
        fn divisor_leq_is_divisibility(i in 0usize..24, j in 0usize..24) {
            let ctx = LatticeCtx::divisor(360).unwrap();
            let all: Vec<_> = ctx.all_elements().collect();
            prop_assert_eq!(all.len(), 24);
            let a = &all[i];
            let b = &all[j];
            let x = ctx.divisor_value(a).unwrap();
            let y = ctx.divisor_value(b).unwrap();
            prop_assert_eq!(ctx.leq(a, b).unwrap(), y % x == 0);
        }

        #[test]
        fn subspace_membership_brute_force(q in prop::sample::select(vec![2u64, 3]), seed in 0u64..1000) {
            // Compare leq against point-set containment for random pairs.
            let n = 3u32;
            let ctx = LatticeCtx::subspace(q, n).unwrap();
            let all: Vec<_> = ctx.all_elements().collect();
            let a = &all[(seed as usize) % all.len()];
            let b = &all[(seed as usize * 7 + 3) % all.len()];
            let points = |e: &LatticeElem| -> std::collections::BTreeSet<Vec<u64>> {
                let LatticeElem::Subspace(rows) = e else { unreachable!() };
                let mut pts = std::collections::BTreeSet::new();
                let k = rows.len();
                let mut coeffs = vec![0u64; k];
                loop {
                    let mut v = vec![0u64; n as usize];
                    for (c, row) in coeffs.iter().zip(rows) {
                        for (vi, &ri) in v.iter_mut().zip(row) {
                            *vi = (*vi + c * ri) % q;
                        }
                    }
                    pts.insert(v);
                    let mut pos = 0;
                    loop {
                        if pos == k { break; }
                        coeffs[pos] += 1;
                        if coeffs[pos] < q { break; }
                        coeffs[pos] = 0;
                        pos += 1;
                    }
                    if pos == k { break; }
                }
                pts
            };
            let expect = points(a).is_subset(&points(b));
            prop_assert_eq!(ctx.leq(a, b).unwrap(), expect);
        }
    }
}
