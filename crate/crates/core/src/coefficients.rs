//! Counting coefficients for rank-typed families: multinomials, their
//! q-analogues over finite fields, ordered-factorization counts in divisor
//! lattices, and flag-measure coefficients for the real subspace order.
//!
//! All counts are exact `BigInt`s (or `SymReal`s where pi appears) and all
//! functions validate their composition arguments.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{ball_volume, BigRat, SymReal};

/// An ordered tuple of non-negative parts. The rank type of a tuple in a
/// family is a composition of the ambient rank.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Composition(Vec<u32>);

impl Composition {
    pub fn new(parts: Vec<u32>) -> Self {
        Composition(parts)
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&p| p as u64).sum()
    }

    /// Key form used in reports: parts joined by commas, `"1,2,1"`.
    pub fn key(&self) -> String {
        self.0
            .iter()
            .map(|p| p.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn parse_key(key: &str) -> Result<Self> {
        let parts = key
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::Invalid(format!("malformed composition key {key:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if parts.is_empty() {
            return Err(Error::Invalid("empty composition key".into()));
        }
        Ok(Composition(parts))
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.key())
    }
}

impl fmt::Debug for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Composition{}", self)
    }
}

/// All compositions of `total` into exactly `count` parts, each at least
/// `min_part`, in lexicographic order.
pub fn compositions(total: u32, count: usize, min_part: u32) -> Result<Vec<Composition>> {
    if count == 0 {
        return if total == 0 {
            Ok(vec![Composition::new(vec![])])
        } else {
            Ok(vec![])
        };
    }
    if (min_part as u64) * (count as u64) > total as u64 {
        return Ok(vec![]);
    }
    let mut out = Vec::new();
    let mut cur = vec![0u32; count];
    fn rec(
        out: &mut Vec<Composition>,
        cur: &mut Vec<u32>,
        idx: usize,
        remaining: u32,
        min_part: u32,
    ) -> Result<()> {
        let left = cur.len() - idx;
        if left == 1 {
            cur[idx] = remaining;
            out.push(Composition::new(cur.clone()));
            if out.len() > 2_000_000 {
                return Err(Error::TooLarge("composition enumeration".into()));
            }
            return Ok(());
        }
        let reserve = min_part * (left as u32 - 1);
        for v in min_part..=(remaining - reserve) {
            cur[idx] = v;
            rec(out, cur, idx + 1, remaining - v, min_part)?;
        }
        Ok(())
    }
    rec(&mut out, &mut cur, 0, total, min_part)?;
    Ok(out)
}

/// Forbidden chain lengths, one per family component. A component with
/// limit `t` may not contain `t + 1` pairwise comparable elements.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChainParams(Vec<u64>);

impl ChainParams {
    pub fn new(limits: Vec<u64>) -> Result<Self> {
        if limits.is_empty() {
            return Err(Error::Invalid("chain limits must be nonempty".into()));
        }
        if limits.contains(&0) {
            return Err(Error::Invalid("chain limits must be at least 1".into()));
        }
        Ok(ChainParams(limits))
    }

    pub fn limits(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Product of all limits: the sum bound for multichain families.
    pub fn product(&self) -> BigInt {
        self.0.iter().fold(BigInt::one(), |acc, &t| acc * t)
    }

    /// Product of all limits except one largest: the sum bound for
    /// decomposition families.
    pub fn product_excluding_max(&self) -> BigInt {
        let max = *self.0.iter().max().expect("nonempty");
        let mut skipped = false;
        self.0.iter().fold(BigInt::one(), |acc, &t| {
            if t == max && !skipped {
                skipped = true;
                acc
            } else {
                acc * t
            }
        })
    }
}

pub fn factorial(n: u64) -> BigInt {
    let mut acc = BigInt::one();
    for i in 2..=n {
        acc *= i;
    }
    acc
}

fn check_composition(total: u64, parts: &Composition) -> Result<()> {
    if parts.total() != total {
        return Err(Error::CompositionMismatch {
            expected: total,
            got: parts.total(),
        });
    }
    Ok(())
}

/// Number of ways to split a set of `n` labeled items into ordered blocks
/// of the given sizes: `n! / (a_1! ... a_r!)`.
pub fn multinomial(n: u64, parts: &Composition) -> Result<BigInt> {
    check_composition(n, parts)?;
    let mut acc = factorial(n);
    for &a in parts.parts() {
        acc /= factorial(a as u64);
    }
    Ok(acc)
}

/// `(q^1 - 1)(q^2 - 1) ... (q^k - 1)`.
pub fn q_factorial(q: u64, k: u32) -> BigInt {
    let q = BigInt::from(q);
    let mut acc = BigInt::one();
    let mut qi = BigInt::one();
    for _ in 0..k {
        qi *= &q;
        acc *= &qi - 1;
    }
    acc
}

/// Gaussian multinomial: the number of flags of subspaces of `F_q^n` with
/// consecutive dimension jumps given by `parts`.
pub fn q_multinomial(q: u64, n: u64, parts: &Composition) -> Result<BigInt> {
    check_composition(n, parts)?;
    let mut acc = q_factorial(q, n as u32);
    for &a in parts.parts() {
        acc /= q_factorial(q, a);
    }
    Ok(acc)
}

pub fn gaussian_binomial(q: u64, n: u64, k: u32) -> Result<BigInt> {
    if (k as u64) > n {
        return Ok(BigInt::zero());
    }
    q_multinomial(q, n, &Composition::new(vec![k, (n - k as u64) as u32]))
}

/// Number of ordered direct-sum decompositions of `F_q^n` into subspaces
/// of the given dimensions: the Gaussian multinomial times
/// `q^(sum of products of distinct part pairs)`.
pub fn q_decomposition_count(q: u64, n: u64, parts: &Composition) -> Result<BigInt> {
    let base = q_multinomial(q, n, parts)?;
    let mut exp: u64 = 0;
    let p = parts.parts();
    for i in 0..p.len() {
        for j in (i + 1)..p.len() {
            exp += p[i] as u64 * p[j] as u64;
        }
    }
    Ok(base * BigInt::from(q).pow(exp as u32))
}

/// Prime factorization by trial division, smallest prime first.
pub fn factorize(n: u64) -> Result<Vec<(u64, u32)>> {
    if n == 0 {
        return Err(Error::Invalid("cannot factorize zero".into()));
    }
    let mut n = n;
    let mut out = Vec::new();
    let mut p: u64 = 2;
    while p * p <= n {
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push((n, 1));
    }
    Ok(out)
}

/// Total number of prime factors with multiplicity: the rank of `n` in its
/// divisor lattice.
pub fn divisor_rank(n: u64) -> Result<u32> {
    Ok(factorize(n)?.iter().map(|&(_, e)| e).sum())
}

/// Whitney numbers of the divisor lattice of `n`: entry `i` counts the
/// divisors with exactly `i` prime factors (with multiplicity). Computed
/// as the coefficients of `prod_p (1 + x + ... + x^(e_p))`.
pub fn divisor_rank_counts(n: u64) -> Result<Vec<BigInt>> {
    let factors = factorize(n)?;
    let mut coeffs = vec![BigInt::one()];
    for &(_, e) in &factors {
        let mut next = vec![BigInt::zero(); coeffs.len() + e as usize];
        for (i, c) in coeffs.iter().enumerate() {
            for j in 0..=(e as usize) {
                next[i + j] += c;
            }
        }
        coeffs = next;
    }
    Ok(coeffs)
}

/// All rank-type counts of ordered factorizations of `n` into `count`
/// factors at once: maps each composition `a` of the rank of `n` to the
/// number of tuples `(d_1, ..., d_count)` with product `n` and
/// `rank(d_i) = a_i`. Compositions with zero count are included.
pub fn divisor_type_counts(n: u64, count: usize) -> Result<BTreeMap<Composition, BigInt>> {
    if count == 0 {
        return Err(Error::Invalid("factor count must be positive".into()));
    }
    let factors = factorize(n)?;
    // DP over primes; state is the partial rank vector of the factors.
    let mut dp: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
    dp.insert(vec![0; count], BigInt::one());
    for &(_, e) in &factors {
        let splits = compositions(e, count, 0)?;
        let mut next: BTreeMap<Vec<u32>, BigInt> = BTreeMap::new();
        for (state, ways) in &dp {
            for split in &splits {
                let mut s = state.clone();
                for (slot, &add) in s.iter_mut().zip(split.parts()) {
                    *slot += add;
                }
                *next.entry(s).or_insert_with(BigInt::zero) += ways;
            }
        }
        dp = next;
    }
    Ok(dp
        .into_iter()
        .map(|(state, ways)| (Composition::new(state), ways))
        .collect())
}

/// Number of ordered factorizations of `n` into factors with the exact
/// rank profile `parts`; the parts must sum to the rank of `n`.
pub fn divisor_decomposition_count(n: u64, parts: &Composition) -> Result<BigInt> {
    let rank = divisor_rank(n)? as u64;
    check_composition(rank, parts)?;
    let factors = factorize(n)?;
    let r = parts.len();
    // Bounded DP: states clipped to the target profile componentwise.
    let dims: Vec<usize> = parts.parts().iter().map(|&a| a as usize + 1).collect();
    let size: usize = dims.iter().product();
    let mut dp = vec![BigInt::zero(); size];
    dp[0] = BigInt::one();
    let index = |state: &[u32]| -> usize {
        let mut idx = 0;
        for (i, &s) in state.iter().enumerate() {
            idx = idx * dims[i] + s as usize;
        }
        idx
    };
    let mut states: Vec<Vec<u32>> = vec![vec![0; r]];
    for &(_, e) in &factors {
        let splits = compositions(e, r, 0)?;
        let mut next = vec![BigInt::zero(); size];
        let mut next_states: Vec<Vec<u32>> = Vec::new();
        for state in &states {
            let ways = dp[index(state)].clone();
            if ways.is_zero() {
                continue;
            }
            'split: for split in &splits {
                let mut s = state.clone();
                for (i, (slot, &add)) in s.iter_mut().zip(split.parts()).enumerate() {
                    *slot += add;
                    if *slot > parts.parts()[i] {
                        continue 'split;
                    }
                }
                let idx = index(&s);
                if next[idx].is_zero() {
                    next_states.push(s);
                }
                next[idx] += &ways;
            }
        }
        dp = next;
        states = next_states;
    }
    Ok(std::mem::take(&mut dp[size - 1]))
}

/// Flag-count coefficient for the real subspace order: the multinomial
/// rescaled by unit-ball volumes, `multinomial(n, a) * v_n / prod v_(a_i)`.
/// Parts may be zero; a zero part contributes a factor of 1.
pub fn multiflag_coefficient(n: u32, parts: &Composition) -> Result<SymReal> {
    check_composition(n as u64, parts)?;
    let count = SymReal::from_rat(BigRat::from_int(multinomial(n as u64, parts)?));
    let mut value = count * ball_volume(n);
    for &a in parts.parts() {
        value = value / ball_volume(a);
    }
    Ok(value)
}

/// Sum of the `how_many` largest entries of `values` (all of them if
/// `how_many` exceeds the length).
pub fn sum_of_largest(values: &[BigInt], how_many: &BigInt) -> BigInt {
    let take = if *how_many >= BigInt::from(values.len()) {
        values.len()
    } else {
        let mut t = 0usize;
        while BigInt::from(t) < *how_many {
            t += 1;
        }
        t
    };
    let mut sorted: Vec<&BigInt> = values.iter().collect();
    sorted.sort();
    sorted.iter().rev().take(take).cloned().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn comp(parts: &[u32]) -> Composition {
        Composition::new(parts.to_vec())
    }

    /// Independent route: product of binomials over prefix sums.
    fn multinomial_by_binomials(n: u64, parts: &Composition) -> BigInt {
        fn binomial(n: u64, k: u64) -> BigInt {
            let mut acc = BigInt::one();
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        }
        let mut acc = BigInt::one();
        let mut used = 0u64;
        for &a in parts.parts() {
            used += a as u64;
            acc *= binomial(used, a as u64);
        }
        assert_eq!(used, n);
        acc
    }

    #[test]
    fn multinomial_small_values() {
        assert_eq!(multinomial(4, &comp(&[1, 1, 2])).unwrap(), BigInt::from(12));
        assert_eq!(multinomial(4, &comp(&[0, 4])).unwrap(), BigInt::one());
        assert_eq!(multinomial(0, &comp(&[0, 0])).unwrap(), BigInt::one());
        assert!(multinomial(4, &comp(&[1, 1])).is_err());
    }

    #[test]
    fn q_decomposition_small_values() {
        // Ordered splittings of the 2-dimensional space over F_2 into two
        // lines: three lines, ordered pairs of distinct ones.
        assert_eq!(
            q_decomposition_count(2, 2, &comp(&[1, 1])).unwrap(),
            BigInt::from(6)
        );
        // Lines in F_2^3 and F_3^2.
        assert_eq!(gaussian_binomial(2, 3, 1).unwrap(), BigInt::from(7));
        assert_eq!(gaussian_binomial(3, 2, 1).unwrap(), BigInt::from(4));
    }

    #[test]
    fn gaussian_symmetry_and_telescoping() {
        for q in [2u64, 3, 5] {
            for n in 0..=8u64 {
                for k in 0..=(n as u32) {
                    let a = gaussian_binomial(q, n, k).unwrap();
                    let b = gaussian_binomial(q, n, n as u32 - k).unwrap();
                    assert_eq!(a, b);
                }
            }
        }
        // Multinomial as a telescoping product of binomials over suffix sums.
        for q in [2u64, 3] {
            for parts in compositions(6, 3, 0).unwrap() {
                let direct = q_multinomial(q, 6, &parts).unwrap();
                let mut acc = BigInt::one();
                let mut left = 6u64;
                for &a in parts.parts() {
                    acc *= gaussian_binomial(q, left, a).unwrap();
                    left -= a as u64;
                }
                assert_eq!(direct, acc, "q={q} parts={parts}");
            }
        }
    }

    #[test]
    fn chain_params_products() {
        let p = ChainParams::new(vec![1, 2, 2]).unwrap();
        assert_eq!(p.product(), BigInt::from(4));
        assert_eq!(p.product_excluding_max(), BigInt::from(2));
        let p = ChainParams::new(vec![1, 3, 3]).unwrap();
        assert_eq!(p.product(), BigInt::from(9));
        assert_eq!(p.product_excluding_max(), BigInt::from(3));
        let p = ChainParams::new(vec![5]).unwrap();
        assert_eq!(p.product_excluding_max(), BigInt::one());
        assert!(ChainParams::new(vec![]).is_err());
        assert!(ChainParams::new(vec![1, 0]).is_err());
    }

    #[test]
    fn composition_enumeration() {
        assert_eq!(compositions(4, 2, 0).unwrap().len(), 5);
        assert_eq!(compositions(4, 2, 1).unwrap().len(), 3);
        assert_eq!(compositions(0, 3, 0).unwrap().len(), 1);
        assert_eq!(compositions(2, 0, 0).unwrap().len(), 0);
        assert_eq!(compositions(0, 0, 0).unwrap().len(), 1);
        // Count matches the stars-and-bars formula.
        assert_eq!(compositions(10, 4, 0).unwrap().len(), 286);
    }

    #[test]
    fn composition_keys_round_trip() {
        let c = comp(&[1, 0, 3]);
        assert_eq!(c.key(), "1,0,3");
        assert_eq!(Composition::parse_key("1,0,3").unwrap(), c);
        assert!(Composition::parse_key("1,,3").is_err());
        assert!(Composition::parse_key("").is_err());
    }

    #[test]
    fn whitney_numbers_small() {
        // 12 = 2^2 * 3 has divisors 1 | 2,3 | 4,6 | 12 by rank.
        let w = divisor_rank_counts(12).unwrap();
        let expect: Vec<BigInt> = [1, 2, 2, 1].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(w, expect);
        assert_eq!(divisor_rank_counts(1).unwrap(), vec![BigInt::one()]);
    }

    #[test]
    fn divisor_counts_match_enumeration() {
        // Oracle: enumerate ordered factor tuples directly.
        fn enumerate_profiles(n: u64, r: usize) -> BTreeMap<Composition, BigInt> {
            fn divisors(n: u64) -> Vec<u64> {
                let mut d: Vec<u64> = (1..=n).filter(|k| n % k == 0).collect();
                d.sort_unstable();
                d
            }
            let mut out: BTreeMap<Composition, BigInt> = BTreeMap::new();
            let mut stack: Vec<(u64, Vec<u32>)> = vec![(n, vec![])];
            while let Some((rem, profile)) = stack.pop() {
                if profile.len() == r {
                    if rem == 1 {
                        *out.entry(Composition::new(profile))
                            .or_insert_with(BigInt::zero) += 1;
                    }
                    continue;
                }
                for d in divisors(rem) {
                    let mut p = profile.clone();
                    p.push(divisor_rank(d).unwrap());
                    stack.push((rem / d, p));
                }
            }
            out
        }
        for n in [1u64, 2, 12, 30, 72, 360] {
            for r in 1..=3usize {
                let oracle = enumerate_profiles(n, r);
                let table = divisor_type_counts(n, r).unwrap();
                for (profile, ways) in &table {
                    let expect = oracle.get(profile).cloned().unwrap_or_else(BigInt::zero);
                    assert_eq!(*ways, expect, "n={n} r={r} profile={profile}");
                    assert_eq!(
                        divisor_decomposition_count(n, profile).unwrap(),
                        expect,
                        "single-profile route n={n} r={r} profile={profile}"
                    );
                }
                let total: BigInt = oracle.values().sum();
                let table_total: BigInt = table.values().sum();
                assert_eq!(total, table_total);
            }
        }
    }

    #[test]
    fn divisor_count_totals() {
        // Whitney numbers sum to the divisor count; type counts sum to a
        // product of binomials over the prime exponents.
        fn binomial(n: u64, k: u64) -> BigInt {
            let mut acc = BigInt::one();
            for i in 0..k {
                acc = acc * (n - i) / (i + 1);
            }
            acc
        }
        for n in [1u64, 6, 64, 360, 2310, 7560] {
            let d_n: BigInt = factorize(n)
                .unwrap()
                .iter()
                .map(|&(_, e)| BigInt::from(e + 1))
                .product();
            let w_sum: BigInt = divisor_rank_counts(n).unwrap().iter().sum();
            assert_eq!(w_sum, d_n);
            for r in 1..=4usize {
                let expect: BigInt = factorize(n)
                    .unwrap()
                    .iter()
                    .map(|&(_, e)| binomial(e as u64 + r as u64 - 1, r as u64 - 1))
                    .product();
                let total: BigInt = divisor_type_counts(n, r).unwrap().values().sum();
                assert_eq!(total, expect, "n={n} r={r}");
            }
        }
    }

    #[test]
    fn flag_coefficients_small_values() {
        use crate::exact::SymReal;
        let rat = |s: &str| -> BigRat { s.parse().unwrap() };
        assert_eq!(
            multiflag_coefficient(2, &comp(&[1, 1])).unwrap(),
            SymReal::new(rat("1/2"), 1)
        );
        assert_eq!(
            multiflag_coefficient(3, &comp(&[1, 2])).unwrap(),
            SymReal::from_int(2)
        );
        assert_eq!(
            multiflag_coefficient(3, &comp(&[1, 1, 1])).unwrap(),
            SymReal::pi()
        );
        assert_eq!(
            multiflag_coefficient(4, &comp(&[1, 3])).unwrap(),
            SymReal::new(rat("3/4"), 1)
        );
        assert_eq!(
            multiflag_coefficient(4, &comp(&[2, 2])).unwrap(),
            SymReal::from_int(3)
        );
        // Zero parts are inert.
        assert_eq!(
            multiflag_coefficient(4, &comp(&[0, 2, 2])).unwrap(),
            SymReal::from_int(3)
        );
    }

    #[test]
    fn largest_sum_selection() {
        let vals: Vec<BigInt> = [4, 6, 1, 6, 3].iter().map(|&x| BigInt::from(x)).collect();
        assert_eq!(sum_of_largest(&vals, &BigInt::from(2)), BigInt::from(12));
        assert_eq!(sum_of_largest(&vals, &BigInt::from(99)), BigInt::from(20));
        assert_eq!(sum_of_largest(&vals, &BigInt::zero()), BigInt::zero());
    }

    proptest! {
        #[test]
        fn multinomial_matches_binomial_route(
            parts in proptest::collection::vec(0u32..6, 1..5)
        ) {
            let c = Composition::new(parts);
            let n = c.total();
            let direct = multinomial(n, &c).unwrap();
            prop_assert_eq!(direct, multinomial_by_binomials(n, &c));
        }

        #[test]
        fn q_multinomial_is_integral(
            q in prop::sample::select(vec![2u64, 3, 5]),
            parts in proptest::collection::vec(0u32..4, 1..4)
        ) {
            let c = Composition::new(parts);
            let n = c.total();
            // Exact division must hold: reconstruct the q-factorial.
            let m = q_multinomial(q, n, &c).unwrap();
            let mut back = m;
            for &a in c.parts() {
                back *= q_factorial(q, a);
            }
            prop_assert_eq!(back, q_factorial(q, n as u32));
        }

        #[test]
        fn whitney_sums_match_divisor_count(n in 1u64..5000) {
            let w_sum: BigInt = divisor_rank_counts(n).unwrap().iter().sum();
            let d_n = (1..=n).filter(|k| n % k == 0).count();
            prop_assert_eq!(w_sum, BigInt::from(d_n));
        }
    }
}
