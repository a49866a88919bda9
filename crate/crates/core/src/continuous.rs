//! Bounds for families of subspace decompositions and chains in real
//! space, graded by dimension.
//!
//! Families over the reals cannot be enumerated, so only the bound side
//! is computed: the table of flag-measure coefficients for every positive
//! dimension split, and the sum of the largest few as selected by the
//! chain limits. Coefficients are rational multiples of powers of pi and
//! are compared exactly.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::coefficients::{compositions, multiflag_coefficient, ChainParams, Composition};
use crate::error::{Error, Result};
use crate::exact::{ball_volume, PiExpr, SymReal};

/// Which family shape a bound is for: disjoint spanning splits or strict
/// chains of nested subspaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ContinuousMode {
    Decomposition,
    Chain,
}

impl ContinuousMode {
    pub fn as_str(self) -> &'static str {
        match self {
            ContinuousMode::Decomposition => "decomposition",
            ContinuousMode::Chain => "chain",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "decomposition" => Ok(ContinuousMode::Decomposition),
            "chain" => Ok(ContinuousMode::Chain),
            other => Err(Error::Invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// Measure contribution of one dimension step: the k-th factor of the
/// total flag measure.
pub fn dimension_factor(k: u32) -> SymReal {
    assert!(k >= 1, "dimension factor needs k >= 1");
    let ratio = ball_volume(k) / ball_volume(k - 1);
    SymReal::from_rat(crate::exact::BigRat::new(k.into(), 2.into()).unwrap()) * ratio
}

/// Total measure of the full flag space in dimension n: the product of
/// all dimension factors.
pub fn flag_total(n: u32) -> SymReal {
    let mut acc = SymReal::one();
    for k in 1..=n {
        acc = acc * dimension_factor(k);
    }
    acc
}

/// Coefficient table and selected bound for one instance.
#[derive(Clone, Debug)]
pub struct ContinuousBound {
    pub n: u32,
    pub r: usize,
    pub mode: ContinuousMode,
    pub params: ChainParams,
    pub coefficient_table: BTreeMap<Composition, SymReal>,
    /// How many of the largest coefficients the bound sums.
    pub budget: BigInt,
    /// Table keys in selection order: value descending, key ascending on
    /// exact ties.
    pub selected: Vec<Composition>,
    pub bound: PiExpr,
}

impl ContinuousBound {
    pub fn to_json(&self) -> Value {
        let table: serde_json::Map<String, Value> = self
            .coefficient_table
            .iter()
            .map(|(c, v)| (c.key(), serde_json::to_value(v).expect("symreal json")))
            .collect();
        json!({
            "n": self.n,
            "r": self.r,
            "mode": self.mode.as_str(),
            "params": self.params.limits(),
            "budget": self.budget.to_string(),
            "coefficient_table": table,
            "selected": self.selected.iter().map(|c| c.key()).collect::<Vec<_>>(),
            "bound": self.bound,
        })
    }
}

/// Tabulates the flag-measure coefficient of every positive split of n
/// (r parts for decompositions, r+1 for chains) and sums the largest
/// `budget` of them, where the budget is the product of the limits,
/// excluding one largest limit in decomposition mode.
pub fn continuous_bound(
    n: u32,
    r: usize,
    params: &ChainParams,
    mode: ContinuousMode,
) -> Result<ContinuousBound> {
    if params.len() != r {
        return Err(Error::ParamMismatch {
            params: params.len(),
            family: r,
        });
    }
    let slots = match mode {
        ContinuousMode::Decomposition => r,
        ContinuousMode::Chain => r + 1,
    };
    let comps = compositions(n, slots, 1)?;
    if comps.is_empty() {
        return Err(Error::Infeasible);
    }
    let mut table = BTreeMap::new();
    for comp in comps {
        let coef = multiflag_coefficient(n, &comp)?;
        table.insert(comp, coef);
    }
    let budget = match mode {
        ContinuousMode::Decomposition => params.product_excluding_max(),
        ContinuousMode::Chain => params.product(),
    };

    let mut entries: Vec<(&Composition, &SymReal)> = table.iter().collect();
    let mut cmp_err = None;
    entries.sort_by(|a, b| match b.1.try_cmp(a.1) {
        Ok(ord) => ord.then_with(|| a.0.cmp(b.0)),
        Err(e) => {
            cmp_err.get_or_insert(e);
            Ordering::Equal
        }
    });
    if let Some(e) = cmp_err {
        return Err(e);
    }
    let take = budget
        .to_usize()
        .map_or(entries.len(), |b| b.min(entries.len()));
    let mut bound = PiExpr::zero();
    let mut selected = Vec::with_capacity(take);
    for (comp, coef) in entries.into_iter().take(take) {
        bound.add_monomial(coef);
        selected.push(comp.clone());
    }
    Ok(ContinuousBound {
        n,
        r,
        mode,
        params: params.clone(),
        coefficient_table: table,
        budget,
        selected,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::BigRat;

    fn params(t: &[u64]) -> ChainParams {
        ChainParams::new(t.to_vec()).unwrap()
    }

    fn pi_times(r: &str) -> SymReal {
        SymReal::new(r.parse().unwrap(), 1)
    }

    #[test]
    fn plane_split_in_two() {
        let b = continuous_bound(2, 2, &params(&[1, 1]), ContinuousMode::Decomposition).unwrap();
        assert_eq!(b.coefficient_table.len(), 1);
        let only = b.coefficient_table.values().next().unwrap();
        assert_eq!(*only, pi_times("1/2"));
        assert_eq!(b.selected.len(), 1);
        assert_eq!(b.bound, PiExpr::from(pi_times("1/2")));
    }

    #[test]
    fn single_link_chains_in_three_space() {
        // Chains with one link through 3-space: both splits carry the
        // same coefficient, 2.
        let b = continuous_bound(3, 1, &params(&[1]), ContinuousMode::Chain).unwrap();
        assert_eq!(b.coefficient_table.len(), 2);
        for v in b.coefficient_table.values() {
            assert_eq!(*v, SymReal::from_int(2));
        }
        assert_eq!(b.bound, PiExpr::from(SymReal::from_int(2)));
        // A limit of 2 selects both.
        let b = continuous_bound(3, 1, &params(&[2]), ContinuousMode::Chain).unwrap();
        assert_eq!(b.selected.len(), 2);
        assert_eq!(b.bound, PiExpr::from(SymReal::from_int(4)));
    }

    #[test]
    fn mixed_power_bound() {
        // Splits of 4-space into two parts: coefficients 3, (3/4)pi,
        // (3/4)pi. A budget of two picks one of each power.
        let b = continuous_bound(4, 2, &params(&[2, 2]), ContinuousMode::Decomposition).unwrap();
        assert_eq!(b.budget, 2.into());
        assert_eq!(
            b.selected.iter().map(|c| c.key()).collect::<Vec<_>>(),
            vec!["2,2", "1,3"]
        );
        let mut expected = PiExpr::zero();
        expected.add_monomial(&SymReal::from_int(3));
        expected.add_monomial(&pi_times("3/4"));
        assert_eq!(b.bound, expected);
        assert!((b.bound.approx_f64() - (3.0 + 0.75 * std::f64::consts::PI)).abs() < 1e-12);
    }

    #[test]
    fn oversized_budget_takes_everything() {
        let all = continuous_bound(4, 2, &params(&[9, 9]), ContinuousMode::Decomposition).unwrap();
        assert_eq!(all.selected.len(), all.coefficient_table.len());
        let mut total = PiExpr::zero();
        for v in all.coefficient_table.values() {
            total.add_monomial(v);
        }
        assert_eq!(all.bound, total);
    }

    #[test]
    fn infeasible_when_parts_cannot_be_positive() {
        assert!(matches!(
            continuous_bound(2, 3, &params(&[1, 1, 1]), ContinuousMode::Decomposition),
            Err(Error::Infeasible)
        ));
        assert!(matches!(
            continuous_bound(2, 2, &params(&[1, 1]), ContinuousMode::Chain),
            Err(Error::Infeasible)
        ));
    }

    #[test]
    fn param_width_must_match() {
        assert!(matches!(
            continuous_bound(4, 2, &params(&[1, 1, 1]), ContinuousMode::Decomposition),
            Err(Error::ParamMismatch { .. })
        ));
    }

    #[test]
    fn flag_totals_match_closed_form() {
        // Product of dimension factors = n! * (n-ball volume) / 2^n.
        for n in 0..=12u32 {
            let mut fact = BigRat::one();
            for k in 1..=n as i64 {
                fact *= &BigRat::from(k);
            }
            let pow = BigRat::from(2i64).pow(n as i32).unwrap();
            let expected = SymReal::from_rat(&fact / &pow) * ball_volume(n);
            assert_eq!(flag_total(n), expected, "n = {n}");
        }
    }

    #[test]
    fn coefficients_ignore_part_order() {
        let perms: [&[u32]; 6] = [
            &[1, 2, 3],
            &[1, 3, 2],
            &[2, 1, 3],
            &[2, 3, 1],
            &[3, 1, 2],
            &[3, 2, 1],
        ];
        let base = multiflag_coefficient(6, &Composition::new(perms[0].to_vec())).unwrap();
        for p in &perms[1..] {
            let v = multiflag_coefficient(6, &Composition::new(p.to_vec())).unwrap();
            assert_eq!(v, base);
        }
    }

    #[test]
    fn coefficients_telescope() {
        // Splitting off the first part factors the coefficient.
        for n in 2..=10u32 {
            for comp in compositions(n, 3, 1).unwrap() {
                let parts = comp.parts();
                let whole = multiflag_coefficient(n, &comp).unwrap();
                let first =
                    multiflag_coefficient(n, &Composition::new(vec![parts[0], n - parts[0]]))
                        .unwrap();
                let rest = multiflag_coefficient(
                    n - parts[0],
                    &Composition::new(parts[1..].to_vec()),
                )
                .unwrap();
                assert_eq!(whole, first * rest, "n = {n}, split {}", comp.key());
            }
        }
    }

    #[test]
    fn json_shape() {
        let b = continuous_bound(2, 2, &params(&[1, 1]), ContinuousMode::Decomposition).unwrap();
        let v = b.to_json();
        assert_eq!(v["mode"], "decomposition");
        assert_eq!(v["budget"], "1");
        assert_eq!(v["coefficient_table"]["1,1"]["coeff"], "1/2");
        assert_eq!(v["coefficient_table"]["1,1"]["pi_power"], 1);
        assert_eq!(v["selected"][0], "1,1");
    }
}
