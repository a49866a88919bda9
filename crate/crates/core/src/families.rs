//! Families of r-tuples over a lattice: ordered decompositions of the top
//! element, or multichains. Provides validation, projections, rank-type
//! classification, exhaustive enumeration, and the cumulative-join
//! bijection between r-decompositions and (r-1)-multichains.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde_json::{json, Value};

use crate::coefficients::{
    compositions, q_decomposition_count, q_multinomial, Composition,
};
use crate::error::{Error, Result};
use crate::lattices::{LatticeCtx, LatticeElem};

/// Streaming enumeration refuses to visit more tuples than this.
pub const MAX_STREAMED_TUPLES: u64 = 1 << 24;
/// Collecting enumeration refuses to materialize more tuples than this.
pub const MAX_COLLECTED_TUPLES: u64 = 1 << 20;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FamilyMode {
    Decomposition,
    Multichain,
}

impl FamilyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            FamilyMode::Decomposition => "decomposition",
            FamilyMode::Multichain => "multichain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "decomposition" => Ok(FamilyMode::Decomposition),
            "multichain" => Ok(FamilyMode::Multichain),
            other => Err(Error::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// One ordered r-tuple of lattice elements.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct FamilyTuple(Vec<LatticeElem>);

impl FamilyTuple {
    pub fn new(parts: Vec<LatticeElem>) -> Self {
        FamilyTuple(parts)
    }

    pub fn parts(&self) -> &[LatticeElem] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A finite set of r-tuples sharing one lattice, mode, and width.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Family {
    ctx: LatticeCtx,
    mode: FamilyMode,
    r: usize,
    strict: bool,
    tuples: BTreeSet<FamilyTuple>,
}

impl Family {
    pub fn new(ctx: LatticeCtx, mode: FamilyMode, r: usize, strict: bool) -> Result<Self> {
        if r == 0 {
            return Err(Error::Invalid("family width must be at least 1".into()));
        }
        if strict && mode != FamilyMode::Multichain {
            return Err(Error::Invalid(
                "strict applies only to multichain families".into(),
            ));
        }
        Ok(Family {
            ctx,
            mode,
            r,
            strict,
            tuples: BTreeSet::new(),
        })
    }

    pub fn ctx(&self) -> &LatticeCtx {
        &self.ctx
    }

    pub fn mode(&self) -> FamilyMode {
        self.mode
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn strict(&self) -> bool {
        self.strict
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> impl Iterator<Item = &FamilyTuple> {
        self.tuples.iter()
    }

    pub fn contains(&self, tuple: &FamilyTuple) -> bool {
        self.tuples.contains(tuple)
    }

    /// Validates the tuple against mode, width, and lattice, then inserts.
    /// Returns whether it was new.
    pub fn insert(&mut self, parts: Vec<LatticeElem>) -> Result<bool> {
        if parts.len() != self.r {
            return Err(Error::Invalid(format!(
                "tuple has {} components, family has {}",
                parts.len(),
                self.r
            )));
        }
        match self.mode {
            FamilyMode::Decomposition => {
                if !self.ctx.is_decomposition(&parts)? {
                    return Err(Error::Invalid(
                        "tuple is not a decomposition of the top element".into(),
                    ));
                }
            }
            FamilyMode::Multichain => {
                if !self.ctx.is_multichain(&parts)? {
                    return Err(Error::Invalid("tuple is not a multichain".into()));
                }
                if self.strict {
                    for w in parts.windows(2) {
                        if w[0] == w[1] {
                            return Err(Error::Invalid(
                                "strict chain repeats an element".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(self.tuples.insert(FamilyTuple(parts)))
    }

    /// The set of k-th components, 1-based.
    pub fn project(&self, k: usize) -> Result<BTreeSet<LatticeElem>> {
        if k == 0 || k > self.r {
            return Err(Error::IndexOutOfRange {
                index: k,
                count: self.r,
            });
        }
        Ok(self
            .tuples
            .iter()
            .map(|t| t.0[k - 1].clone())
            .collect())
    }

    /// Rank type of one tuple: component ranks for decompositions,
    /// consecutive rank differences for multichains (the implicit final
    /// part is not included in the type).
    pub fn tuple_type(&self, tuple: &FamilyTuple) -> Result<Composition> {
        let ranks = tuple
            .parts()
            .iter()
            .map(|e| self.ctx.rank(e))
            .collect::<Result<Vec<u32>>>()?;
        Ok(match self.mode {
            FamilyMode::Decomposition => Composition::new(ranks),
            FamilyMode::Multichain => {
                let mut diffs = Vec::with_capacity(ranks.len());
                let mut prev = 0;
                for rk in ranks {
                    diffs.push(rk - prev);
                    prev = rk;
                }
                Composition::new(diffs)
            }
        })
    }

    /// Splits the family by rank type.
    pub fn stratify(&self) -> Result<BTreeMap<Composition, Family>> {
        let mut out: BTreeMap<Composition, Family> = BTreeMap::new();
        for t in &self.tuples {
            let ty = self.tuple_type(t)?;
            let slot = out.entry(ty).or_insert_with(|| Family {
                ctx: self.ctx.clone(),
                mode: self.mode,
                r: self.r,
                strict: self.strict,
                tuples: BTreeSet::new(),
            });
            slot.tuples.insert(t.clone());
        }
        Ok(out)
    }

    /// Interchange form: lattice, mode, width, strictness, and the sorted
    /// tuple list with per-lattice element encodings.
    pub fn to_json(&self) -> Result<Value> {
        let tuples = self
            .tuples
            .iter()
            .map(|t| {
                t.parts()
                    .iter()
                    .map(|e| self.ctx.elem_to_json(e))
                    .collect::<Result<Vec<Value>>>()
                    .map(Value::Array)
            })
            .collect::<Result<Vec<Value>>>()?;
        Ok(json!({
            "lattice": serde_json::to_value(&self.ctx).expect("context serializes"),
            "mode": self.mode.as_str(),
            "r": self.r,
            "strict": self.strict,
            "tuples": tuples,
        }))
    }

    pub fn from_json(value: &Value) -> Result<Family> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Invalid("family must be a JSON object".into()))?;
        let field = |name: &str| {
            obj.get(name)
                .ok_or_else(|| Error::Invalid(format!("family is missing field {name:?}")))
        };
        let ctx: LatticeCtx = serde_json::from_value(field("lattice")?.clone())
            .map_err(|e| Error::Invalid(format!("bad lattice field: {e}")))?;
        let mode = FamilyMode::parse(
            field("mode")?
                .as_str()
                .ok_or_else(|| Error::Invalid("mode must be a string".into()))?,
        )?;
        let r = field("r")?
            .as_u64()
            .ok_or_else(|| Error::Invalid("r must be a positive integer".into()))?
            as usize;
        let strict = match obj.get("strict") {
            None => false,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| Error::Invalid("strict must be a boolean".into()))?,
        };
        let mut family = Family::new(ctx, mode, r, strict)?;
        let tuples = field("tuples")?
            .as_array()
            .ok_or_else(|| Error::Invalid("tuples must be an array".into()))?;
        for t in tuples {
            let parts = t
                .as_array()
                .ok_or_else(|| Error::Invalid("each tuple must be an array".into()))?
                .iter()
                .map(|e| family.ctx.elem_from_json(e))
                .collect::<Result<Vec<_>>>()?;
            family.insert(parts)?;
        }
        Ok(family)
    }
}

/// Exact number of tuples `for_each_tuple` would visit (for strict
/// multichains this is the weak count, an upper bound).
pub fn predicted_count(ctx: &LatticeCtx, mode: FamilyMode, r: usize) -> Result<BigInt> {
    if r == 0 {
        return Err(Error::Invalid("width must be at least 1".into()));
    }
    let n = ctx.top_rank();
    match (ctx, mode) {
        (LatticeCtx::Boolean { n }, FamilyMode::Decomposition) => {
            Ok(BigInt::from(r).pow(*n))
        }
        (LatticeCtx::Boolean { n }, FamilyMode::Multichain) => {
            Ok(BigInt::from(r + 1).pow(*n))
        }
        (LatticeCtx::Subspace { q, .. }, FamilyMode::Decomposition) => {
            let mut acc = BigInt::zero();
            for comp in compositions(n, r, 0)? {
                acc += q_decomposition_count(*q, n as u64, &comp)?;
            }
            Ok(acc)
        }
        (LatticeCtx::Subspace { q, .. }, FamilyMode::Multichain) => {
            let mut acc = BigInt::zero();
            for comp in compositions(n, r + 1, 0)? {
                acc += q_multinomial(*q, n as u64, &comp)?;
            }
            Ok(acc)
        }
        (LatticeCtx::Divisor { factors, .. }, FamilyMode::Decomposition) => {
            Ok(count_exponent_splits(factors, r))
        }
        (LatticeCtx::Divisor { factors, .. }, FamilyMode::Multichain) => {
            Ok(count_exponent_splits(factors, r + 1))
        }
    }
}

fn count_exponent_splits(factors: &[(u64, u32)], slots: usize) -> BigInt {
    // Product over primes of binom(e + slots - 1, slots - 1).
    let mut acc = BigInt::one();
    for &(_, e) in factors {
        let mut b = BigInt::one();
        for i in 0..(slots as u64 - 1) {
            b = b * (e as u64 + i + 1) / (i + 1);
        }
        acc *= b;
    }
    acc
}

/// Visits every r-tuple of the given mode in a fixed canonical order.
/// Strict multichains skip repeated consecutive elements. Errs with
/// `TooLarge` before visiting anything if the count exceeds the guard.
pub fn for_each_tuple(
    ctx: &LatticeCtx,
    mode: FamilyMode,
    r: usize,
    strict: bool,
    visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
) -> Result<()> {
    if strict && mode != FamilyMode::Multichain {
        return Err(Error::Invalid(
            "strict applies only to multichain families".into(),
        ));
    }
    let predicted = predicted_count(ctx, mode, r)?;
    if predicted > BigInt::from(MAX_STREAMED_TUPLES) {
        return Err(Error::TooLarge(format!(
            "{} tuples exceed the streaming guard of {}",
            predicted, MAX_STREAMED_TUPLES
        )));
    }
    match mode {
        FamilyMode::Decomposition => match ctx {
            LatticeCtx::Boolean { n } => visit_boolean_decompositions(*n, r, visit),
            LatticeCtx::Divisor { factors, .. } => {
                visit_divisor_decompositions(factors, r, visit)
            }
            LatticeCtx::Subspace { q, n } => {
                visit_subspace_decompositions(ctx, *q, *n as usize, r, visit)
            }
        },
        FamilyMode::Multichain => visit_multichains(ctx, r, strict, visit),
    }
}

/// Collects every tuple; guarded more tightly than streaming.
pub fn enumerate_all(
    ctx: &LatticeCtx,
    mode: FamilyMode,
    r: usize,
    strict: bool,
) -> Result<Vec<FamilyTuple>> {
    let predicted = predicted_count(ctx, mode, r)?;
    if predicted > BigInt::from(MAX_COLLECTED_TUPLES) {
        return Err(Error::TooLarge(format!(
            "{} tuples exceed the collection guard of {}",
            predicted, MAX_COLLECTED_TUPLES
        )));
    }
    let mut out = Vec::new();
    for_each_tuple(ctx, mode, r, strict, &mut |parts| {
        out.push(FamilyTuple::new(parts.to_vec()));
        Ok(())
    })?;
    Ok(out)
}

fn visit_boolean_decompositions(
    n: u32,
    r: usize,
    visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
) -> Result<()> {
    // Odometer over block assignments of each ground element.
    let mut assign = vec![0usize; n as usize];
    loop {
        let mut masks = vec![0u32; r];
        for (i, &b) in assign.iter().enumerate() {
            masks[b] |= 1 << i;
        }
        let parts: Vec<LatticeElem> = masks.into_iter().map(LatticeElem::Subset).collect();
        visit(&parts)?;
        let mut pos = 0;
        loop {
            if pos == assign.len() {
                return Ok(());
            }
            assign[pos] += 1;
            if assign[pos] < r {
                break;
            }
            assign[pos] = 0;
            pos += 1;
        }
    }
}

fn visit_divisor_decompositions(
    factors: &[(u64, u32)],
    r: usize,
    visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
) -> Result<()> {
    // Odometer over per-prime exponent splits.
    let splits: Vec<Vec<Composition>> = factors
        .iter()
        .map(|&(_, e)| compositions(e, r, 0))
        .collect::<Result<_>>()?;
    let mut idx = vec![0usize; factors.len()];
    loop {
        let mut exps = vec![vec![0u32; factors.len()]; r];
        for (j, &i) in idx.iter().enumerate() {
            for (slot, &part) in splits[j][i].parts().iter().enumerate() {
                exps[slot][j] = part;
            }
        }
        let parts: Vec<LatticeElem> = exps.into_iter().map(LatticeElem::Divisor).collect();
        visit(&parts)?;
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return Ok(());
            }
            idx[pos] += 1;
            if idx[pos] < splits[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn visit_subspace_decompositions(
    ctx: &LatticeCtx,
    q: u64,
    n: usize,
    r: usize,
    visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
) -> Result<()> {
    let all: Vec<LatticeElem> = ctx.all_elements().collect();
    // Depth-first over components, keeping the running span in echelon
    // form so independence checks are incremental.
    fn rec(
        ctx: &LatticeCtx,
        q: u64,
        n: usize,
        r: usize,
        all: &[LatticeElem],
        chosen: &mut Vec<LatticeElem>,
        span: &[Vec<u64>],
        used: usize,
        visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
    ) -> Result<()> {
        if chosen.len() == r {
            if used == n {
                visit(chosen)?;
            }
            return Ok(());
        }
        let slots_left = r - chosen.len();
        for cand in all {
            let LatticeElem::Subspace(rows) = cand else { unreachable!() };
            let k = rows.len();
            if used + k > n {
                continue;
            }
            // All remaining slots may be zero, so no lower cutoff except
            // that the last slot must exactly fill.
            if slots_left == 1 && used + k != n {
                continue;
            }
            let mut stacked = span.to_vec();
            stacked.extend(rows.iter().cloned());
            let reduced = crate::lattices::rref(stacked, q, n);
            if reduced.len() != used + k {
                continue;
            }
            chosen.push(cand.clone());
            rec(ctx, q, n, r, all, chosen, &reduced, used + k, visit)?;
            chosen.pop();
        }
        Ok(())
    }
    let mut chosen = Vec::with_capacity(r);
    rec(ctx, q, n, r, &all, &mut chosen, &[], 0, visit)
}

fn visit_multichains(
    ctx: &LatticeCtx,
    r: usize,
    strict: bool,
    visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
) -> Result<()> {
    let all: Vec<LatticeElem> = ctx.all_elements().collect();
    fn rec(
        ctx: &LatticeCtx,
        all: &[LatticeElem],
        r: usize,
        strict: bool,
        chosen: &mut Vec<LatticeElem>,
        visit: &mut dyn FnMut(&[LatticeElem]) -> Result<()>,
    ) -> Result<()> {
        if chosen.len() == r {
            return visit(chosen);
        }
        for cand in all {
            if let Some(prev) = chosen.last() {
                if !ctx.leq(prev, cand)? || (strict && prev == cand) {
                    continue;
                }
            }
            chosen.push(cand.clone());
            rec(ctx, all, r, strict, chosen, visit)?;
            chosen.pop();
        }
        Ok(())
    }
    let mut chosen = Vec::with_capacity(r);
    rec(ctx, &all, r, strict, &mut chosen, visit)
}

/// Cumulative-join image of a decomposition: an r-part decomposition maps
/// to the (r-1)-multichain of its prefix joins. Defined for the set and
/// divisor lattices (union / product).
pub fn decomposition_to_multichain(
    ctx: &LatticeCtx,
    parts: &[LatticeElem],
) -> Result<Vec<LatticeElem>> {
    if parts.len() < 2 {
        return Err(Error::Invalid(
            "cumulative image needs at least 2 parts".into(),
        ));
    }
    if !ctx.is_decomposition(parts)? {
        return Err(Error::Invalid("tuple is not a decomposition".into()));
    }
    let mut out = Vec::with_capacity(parts.len() - 1);
    let mut acc = parts[0].clone();
    out.push(acc.clone());
    for p in &parts[1..parts.len() - 1] {
        acc = ctx.combine_disjoint(&acc, p)?;
        out.push(acc.clone());
    }
    Ok(out)
}

/// Inverse of the cumulative image: an (r-1)-multichain yields the r-part
/// decomposition of consecutive differences, ending at the top element.
pub fn multichain_to_decomposition(
    ctx: &LatticeCtx,
    chain: &[LatticeElem],
) -> Result<Vec<LatticeElem>> {
    if chain.is_empty() {
        return Err(Error::Invalid("empty multichain".into()));
    }
    if !ctx.is_multichain(chain)? {
        return Err(Error::Invalid("tuple is not a multichain".into()));
    }
    let mut out = Vec::with_capacity(chain.len() + 1);
    out.push(chain[0].clone());
    for w in chain.windows(2) {
        out.push(ctx.remove_lower(&w[1], &w[0])?);
    }
    out.push(ctx.remove_lower(&ctx.top(), chain.last().expect("nonempty"))?);
    Ok(out)
}

/// Applies the cumulative-join bijection to a whole decomposition family.
pub fn family_to_multichain(family: &Family) -> Result<Family> {
    if family.mode() != FamilyMode::Decomposition {
        return Err(Error::ModeMismatch {
            expected: "decomposition",
            found: family.mode().as_str(),
        });
    }
    if family.r() < 2 {
        return Err(Error::Invalid("need width at least 2".into()));
    }
    let mut image = Family::new(
        family.ctx().clone(),
        FamilyMode::Multichain,
        family.r() - 1,
        false,
    )?;
    for t in family.tuples() {
        image.insert(decomposition_to_multichain(family.ctx(), t.parts())?)?;
    }
    Ok(image)
}

/// Applies the inverse bijection to a whole multichain family.
pub fn family_to_decomposition(family: &Family) -> Result<Family> {
    if family.mode() != FamilyMode::Multichain {
        return Err(Error::ModeMismatch {
            expected: "multichain",
            found: family.mode().as_str(),
        });
    }
    let mut image = Family::new(
        family.ctx().clone(),
        FamilyMode::Decomposition,
        family.r() + 1,
        false,
    )?;
    for t in family.tuples() {
        image.insert(multichain_to_decomposition(family.ctx(), t.parts())?)?;
    }
    Ok(image)
}
