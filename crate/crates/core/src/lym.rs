//! Exact evaluation of the chain-constrained LYM inequalities.
//!
//! For a family of r-tuples, each rank type contributes
//! `count / coefficient`, where the coefficient is the total number of
//! tuples of that type in the ambient lattice. When every projection of
//! the family avoids chains longer than its limit, the sum is bounded by
//! the product of the limits divided by the largest (decompositions) or
//! the full product (multichains), and the family size is bounded by the
//! sum of that many largest coefficients. Reports here are descriptive:
//! they record both sides and never raise when a premise fails.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde_json::{json, Value};

use crate::chains::is_chain_free;
use crate::coefficients::{
    compositions, divisor_type_counts, multinomial, q_decomposition_count, q_multinomial,
    sum_of_largest, ChainParams, Composition,
};
use crate::error::{Error, Result};
use crate::exact::BigRat;
use crate::families::{Family, FamilyMode};
use crate::lattices::LatticeCtx;

/// Counting coefficient of one full rank type (parts summing to the top
/// rank): the number of tuples of that type in the ambient lattice.
pub fn stratum_coefficient(
    ctx: &LatticeCtx,
    mode: FamilyMode,
    full_type: &Composition,
) -> Result<BigInt> {
    let n = ctx.top_rank() as u64;
    match (ctx, mode) {
        (LatticeCtx::Boolean { .. }, _) => multinomial(n, full_type),
        (LatticeCtx::Subspace { q, .. }, FamilyMode::Decomposition) => {
            q_decomposition_count(*q, n, full_type)
        }
        (LatticeCtx::Subspace { q, .. }, FamilyMode::Multichain) => {
            q_multinomial(*q, n, full_type)
        }
        (LatticeCtx::Divisor { n, .. }, _) => {
            crate::coefficients::divisor_decomposition_count(*n, full_type)
        }
    }
}

/// Extends a multichain stratum key (r rank differences) with the implicit
/// final part so it sums to the top rank.
fn full_type_of(ctx: &LatticeCtx, mode: FamilyMode, key: &Composition) -> Result<Composition> {
    match mode {
        FamilyMode::Decomposition => Ok(key.clone()),
        FamilyMode::Multichain => {
            let total = key.total();
            let top = ctx.top_rank() as u64;
            if total > top {
                return Err(Error::CompositionMismatch {
                    expected: top,
                    got: total,
                });
            }
            let mut parts = key.parts().to_vec();
            parts.push((top - total) as u32);
            Ok(Composition::new(parts))
        }
    }
}

/// The full multiset of counting coefficients for a mode and width: all
/// rank types a tuple could have. Decompositions range over compositions
/// of the top rank into r parts; multichains over r+1 parts (the final
/// part implicit in reports).
pub fn coefficient_table(
    ctx: &LatticeCtx,
    mode: FamilyMode,
    r: usize,
) -> Result<Vec<(Composition, BigInt)>> {
    let slots = match mode {
        FamilyMode::Decomposition => r,
        FamilyMode::Multichain => r + 1,
    };
    let n = ctx.top_rank();
    if let LatticeCtx::Divisor { n, .. } = ctx {
        // One dynamic program covers every type at once.
        return Ok(divisor_type_counts(*n, slots)?.into_iter().collect());
    }
    compositions(n, slots, 0)?
        .into_iter()
        .map(|c| {
            let coef = stratum_coefficient(ctx, mode, &c)?;
            Ok((c, coef))
        })
        .collect()
}

/// One rank type's entry in a report.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumReport {
    pub count: u64,
    pub coefficient: BigInt,
    pub contribution: BigRat,
}

/// Both sides of the inequality, exactly. Bound-related fields are present
/// only when chain limits were supplied.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LymReport {
    pub mode: FamilyMode,
    pub r: usize,
    pub family_size: u64,
    pub strata: BTreeMap<Composition, StratumReport>,
    pub sum: BigRat,
    pub limits: Option<ChainParams>,
    /// Per-component verdicts: projection k is t_k-chain free.
    pub premise_ok: Option<Vec<bool>>,
    /// Product of limits (multichains) or product excluding one largest
    /// (decompositions).
    pub bound: Option<BigInt>,
    pub slack: Option<BigRat>,
    pub sum_within_bound: Option<bool>,
    /// Sum of the `bound` largest coefficients.
    pub cardinality_bound: Option<BigInt>,
    pub size_within_bound: Option<bool>,
}

impl LymReport {
    pub fn premises_all_hold(&self) -> Option<bool> {
        self.premise_ok.as_ref().map(|v| v.iter().all(|&b| b))
    }

    pub fn to_json(&self) -> Value {
        let strata: serde_json::Map<String, Value> = self
            .strata
            .iter()
            .map(|(comp, s)| {
                (
                    comp.key(),
                    json!({
                        "count": s.count,
                        "coefficient": s.coefficient.to_string(),
                        "contribution": s.contribution.to_string(),
                    }),
                )
            })
            .collect();
        let mut out = json!({
            "mode": self.mode.as_str(),
            "r": self.r,
            "family_size": self.family_size,
            "strata": strata,
            "sum": self.sum.to_string(),
        });
        let obj = out.as_object_mut().expect("object");
        if let Some(limits) = &self.limits {
            obj.insert("limits".into(), json!(limits.limits()));
        }
        if let Some(premise) = &self.premise_ok {
            obj.insert("premise_ok".into(), json!(premise));
        }
        if let Some(bound) = &self.bound {
            obj.insert("bound".into(), json!(bound.to_string()));
        }
        if let Some(slack) = &self.slack {
            obj.insert("slack".into(), json!(slack.to_string()));
        }
        if let Some(b) = self.sum_within_bound {
            obj.insert("sum_within_bound".into(), json!(b));
        }
        if let Some(cb) = &self.cardinality_bound {
            obj.insert("cardinality_bound".into(), json!(cb.to_string()));
        }
        if let Some(b) = self.size_within_bound {
            obj.insert("size_within_bound".into(), json!(b));
        }
        out
    }
}

/// Evaluates the LYM sum of a family: strata, coefficients, contributions,
/// and their exact total. No premises are checked.
pub fn lym_sum(family: &Family) -> Result<LymReport> {
    let mut strata = BTreeMap::new();
    let mut sum = BigRat::zero();
    for (key, stratum) in family.stratify()? {
        let full = full_type_of(family.ctx(), family.mode(), &key)?;
        let coefficient = stratum_coefficient(family.ctx(), family.mode(), &full)?;
        let count = stratum.len() as u64;
        let contribution = BigRat::new(BigInt::from(count), coefficient.clone())?;
        sum += &contribution;
        strata.insert(
            key,
            StratumReport {
                count,
                coefficient,
                contribution,
            },
        );
    }
    Ok(LymReport {
        mode: family.mode(),
        r: family.r(),
        family_size: family.len() as u64,
        strata,
        sum,
        limits: None,
        premise_ok: None,
        bound: None,
        slack: None,
        sum_within_bound: None,
        cardinality_bound: None,
        size_within_bound: None,
    })
}

/// Full verification report: premises per component, LYM sum against the
/// limit product, and family size against the sum of largest coefficients.
pub fn verify_family(family: &Family, limits: &ChainParams) -> Result<LymReport> {
    if limits.len() != family.r() {
        return Err(Error::ParamMismatch {
            params: limits.len(),
            family: family.r(),
        });
    }
    let mut report = lym_sum(family)?;
    let mut premise = Vec::with_capacity(family.r());
    for (k, &t) in limits.limits().iter().enumerate() {
        let proj: Vec<_> = family.project(k + 1)?.into_iter().collect();
        premise.push(is_chain_free(family.ctx(), &proj, t)?);
    }
    let bound = match family.mode() {
        FamilyMode::Decomposition => limits.product_excluding_max(),
        FamilyMode::Multichain => limits.product(),
    };
    let bound_rat = BigRat::from_int(bound.clone());
    let slack = &bound_rat - &report.sum;
    let table = coefficient_table(family.ctx(), family.mode(), family.r())?;
    let values: Vec<BigInt> = table.into_iter().map(|(_, c)| c).collect();
    let cardinality_bound = sum_of_largest(&values, &bound);
    report.limits = Some(limits.clone());
    report.premise_ok = Some(premise);
    report.sum_within_bound = Some(!slack.is_negative());
    report.size_within_bound = Some(BigInt::from(report.family_size) <= cardinality_bound);
    report.bound = Some(bound);
    report.slack = Some(slack);
    report.cardinality_bound = Some(cardinality_bound);
    Ok(report)
}

/// The threshold step used to derive the bounds: with caps
/// `c_1 >= ... >= c_n > 0` and values `0 <= x_i <= c_i`, if the values
/// total more than the `t` largest caps, the cap-relative total exceeds
/// `t`. Returns (hypothesis holds, conclusion holds), both exact.
pub fn ratio_threshold_check(
    caps: &[BigRat],
    values: &[BigRat],
    t: u64,
) -> Result<(bool, bool)> {
    if caps.len() != values.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} caps but {} values",
            caps.len(),
            values.len()
        )));
    }
    if caps.is_empty() {
        return Err(Error::ShapeMismatch("empty instance".into()));
    }
    if t == 0 || t as usize > caps.len() {
        return Err(Error::ShapeMismatch(format!(
            "threshold {t} outside 1..={}",
            caps.len()
        )));
    }
    for w in caps.windows(2) {
        if w[0] < w[1] {
            return Err(Error::ShapeMismatch("caps must be non-increasing".into()));
        }
    }
    if !caps[caps.len() - 1].is_positive() {
        return Err(Error::ShapeMismatch("caps must be positive".into()));
    }
    for (x, c) in values.iter().zip(caps) {
        if x.is_negative() || x > c {
            return Err(Error::ShapeMismatch(
                "values must satisfy 0 <= x_i <= c_i".into(),
            ));
        }
    }
    let total: BigRat = values.iter().cloned().sum();
    let cap_total: BigRat = caps.iter().take(t as usize).cloned().sum();
    let hypothesis = total > cap_total;
    let ratio_total: BigRat = values
        .iter()
        .zip(caps)
        .map(|(x, c)| x / c)
        .sum();
    let conclusion = ratio_total > BigRat::from(t);
    Ok((hypothesis, conclusion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::enumerate_all;
    use proptest::prelude::*;

    /// All decomposition tuples of the given rank types: the layered
    /// families used in the worked examples.
    fn family_of_types(ctx: &LatticeCtx, r: usize, types: &[&[u32]]) -> Family {
        let mut fam = Family::new(ctx.clone(), FamilyMode::Decomposition, r, false).unwrap();
        let wanted: Vec<Composition> = types
            .iter()
            .map(|p| Composition::new(p.to_vec()))
            .collect();
        for t in enumerate_all(ctx, FamilyMode::Decomposition, r, false).unwrap() {
            let ranks: Vec<u32> = t
                .parts()
                .iter()
                .map(|e| ctx.rank(e).unwrap())
                .collect();
            if wanted.contains(&Composition::new(ranks)) {
                fam.insert(t.parts().to_vec()).unwrap();
            }
        }
        fam
    }

    #[test]
    fn attained_bound_family() {
        // All type-(1,1,2) and type-(1,2,1) decompositions of a 4-set.
        let ctx = LatticeCtx::boolean(4).unwrap();
        let fam = family_of_types(&ctx, 3, &[&[1, 1, 2], &[1, 2, 1]]);
        assert_eq!(fam.len(), 24);
        let limits = ChainParams::new(vec![1, 2, 2]).unwrap();
        let report = verify_family(&fam, &limits).unwrap();
        assert_eq!(report.premises_all_hold(), Some(true));
        assert_eq!(report.sum, BigRat::from(2i64));
        assert_eq!(report.bound, Some(BigInt::from(2)));
        assert_eq!(report.slack, Some(BigRat::zero()));
        assert_eq!(report.cardinality_bound, Some(BigInt::from(24)));
        assert_eq!(report.size_within_bound, Some(true));
        assert_eq!(report.sum_within_bound, Some(true));
        let strata: Vec<(String, u64)> = report
            .strata
            .iter()
            .map(|(c, s)| (c.key(), s.count))
            .collect();
        assert_eq!(
            strata,
            vec![("1,1,2".to_string(), 12), ("1,2,1".to_string(), 12)]
        );

        // Tighter limits break the second projection: it holds both a
        // singleton and a pair above it.
        let tight = ChainParams::new(vec![1, 1, 1]).unwrap();
        let report = verify_family(&fam, &tight).unwrap();
        assert_eq!(report.premise_ok, Some(vec![true, false, false]));
        assert_eq!(report.premises_all_hold(), Some(false));
    }

    #[test]
    fn all_subspace_splits_sum() {
        // Every 2-decomposition of the plane over F_2: strata with zero
        // parts included, sum = 1/1 + 1/1 + 6/6 = 3.
        let ctx = LatticeCtx::subspace(2, 2).unwrap();
        let mut fam = Family::new(ctx.clone(), FamilyMode::Decomposition, 2, false).unwrap();
        for t in enumerate_all(&ctx, FamilyMode::Decomposition, 2, false).unwrap() {
            fam.insert(t.parts().to_vec()).unwrap();
        }
        let report = lym_sum(&fam).unwrap();
        assert_eq!(report.family_size, 8);
        assert_eq!(report.sum, BigRat::from(3i64));
    }

    #[test]
    fn empty_and_singleton_families() {
        let ctx = LatticeCtx::boolean(3).unwrap();
        let fam = Family::new(ctx.clone(), FamilyMode::Decomposition, 2, false).unwrap();
        let limits = ChainParams::new(vec![1, 1]).unwrap();
        let report = verify_family(&fam, &limits).unwrap();
        assert_eq!(report.sum, BigRat::zero());
        assert_eq!(report.premises_all_hold(), Some(true));

        let mut single = Family::new(ctx.clone(), FamilyMode::Decomposition, 2, false).unwrap();
        single
            .insert(vec![ctx.subset(&[2]).unwrap(), ctx.subset(&[1, 3]).unwrap()])
            .unwrap();
        let report = lym_sum(&single).unwrap();
        // One tuple of type (1,2): contribution 1/multinomial(3;1,2) = 1/3.
        assert_eq!(report.sum, "1/3".parse().unwrap());
    }

    #[test]
    fn multichain_strata_use_implicit_final_part() {
        let ctx = LatticeCtx::boolean(4).unwrap();
        let mut fam = Family::new(ctx.clone(), FamilyMode::Multichain, 2, false).unwrap();
        fam.insert(vec![ctx.subset(&[1]).unwrap(), ctx.subset(&[1, 2]).unwrap()])
            .unwrap();
        let report = lym_sum(&fam).unwrap();
        let (key, stratum) = report.strata.iter().next().unwrap();
        assert_eq!(key.key(), "1,1");
        // Denominator is multinomial(4; 1,1,2) = 12.
        assert_eq!(stratum.coefficient, BigInt::from(12));
        assert_eq!(report.sum, "1/12".parse().unwrap());
    }

    #[test]
    fn param_count_must_match() {
        let ctx = LatticeCtx::boolean(3).unwrap();
        let fam = Family::new(ctx, FamilyMode::Decomposition, 2, false).unwrap();
        let limits = ChainParams::new(vec![1, 1, 1]).unwrap();
        assert!(matches!(
            verify_family(&fam, &limits),
            Err(Error::ParamMismatch { .. })
        ));
    }

    #[test]
    fn bounds_ignore_the_unique_largest_limit() {
        // Reports from limits differing only in their unique maximum agree
        // on every bound field.
        let ctx = LatticeCtx::boolean(4).unwrap();
        let fam = family_of_types(&ctx, 3, &[&[1, 1, 2]]);
        let a = verify_family(&fam, &ChainParams::new(vec![1, 2, 3]).unwrap()).unwrap();
        let b = verify_family(&fam, &ChainParams::new(vec![1, 2, 5]).unwrap()).unwrap();
        assert_eq!(a.bound, b.bound);
        assert_eq!(a.cardinality_bound, b.cardinality_bound);
        assert_eq!(a.slack, b.slack);
    }

    #[test]
    fn sums_are_preserved_by_the_cumulative_bijection() {
        use crate::families::family_to_multichain;
        for ctx in [LatticeCtx::boolean(4).unwrap(), LatticeCtx::divisor(60).unwrap()] {
            for r in 2..=3usize {
                let mut fam =
                    Family::new(ctx.clone(), FamilyMode::Decomposition, r, false).unwrap();
                // Use every third tuple for an irregular subfamily.
                for (i, t) in enumerate_all(&ctx, FamilyMode::Decomposition, r, false)
                    .unwrap()
                    .into_iter()
                    .enumerate()
                {
                    if i % 3 == 0 {
                        fam.insert(t.parts().to_vec()).unwrap();
                    }
                }
                let image = family_to_multichain(&fam).unwrap();
                assert_eq!(image.len(), fam.len());
                let a = lym_sum(&fam).unwrap();
                let b = lym_sum(&image).unwrap();
                assert_eq!(a.sum, b.sum, "{} r={r}", ctx.describe());
            }
        }
    }

    #[test]
    fn threshold_check_examples() {
        let rat = |s: &str| -> BigRat { s.parse().unwrap() };
        let caps = vec![rat("3"), rat("2"), rat("1")];
        assert_eq!(
            ratio_threshold_check(&caps, &[rat("3"), rat("2"), rat("0")], 1).unwrap(),
            (true, true)
        );
        assert_eq!(
            ratio_threshold_check(&caps, &[rat("0"), rat("0"), rat("0")], 1).unwrap(),
            (false, false)
        );
        let unit = vec![rat("1"), rat("1")];
        assert_eq!(
            ratio_threshold_check(&unit, &[rat("1"), rat("1")], 1).unwrap(),
            (true, true)
        );
        // Shape violations.
        assert!(ratio_threshold_check(&caps, &[rat("1")], 1).is_err());
        assert!(ratio_threshold_check(&caps, &[rat("4"), rat("0"), rat("0")], 1).is_err());
        assert!(
            ratio_threshold_check(&[rat("1"), rat("2")], &[rat("0"), rat("0")], 1).is_err()
        );
        assert!(ratio_threshold_check(&caps, &[rat("0"), rat("0"), rat("0")], 4).is_err());
    }

    proptest! {
        #[test]
        fn threshold_hypothesis_implies_conclusion(
            raw in proptest::collection::vec((1u32..30, 1u32..30, 0u32..=100), 1..8),
            t_seed in 0usize..8
        ) {
            // Caps descending positive, values scaled within caps.
            let mut caps: Vec<BigRat> = raw
                .iter()
                .map(|&(p, q, _)| BigRat::new(p.into(), q.into()).unwrap())
                .collect();
            caps.sort();
            caps.reverse();
            let values: Vec<BigRat> = caps
                .iter()
                .zip(&raw)
                .map(|(c, &(_, _, pct))| c * &BigRat::new(pct.into(), 100.into()).unwrap())
                .collect();
            let t = (t_seed % caps.len()) as u64 + 1;
            let (hyp, conc) = ratio_threshold_check(&caps, &values, t).unwrap();
            prop_assert!(!hyp || conc, "hypothesis held but conclusion failed");
        }
    }
}
