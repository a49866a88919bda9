//! Exact maximum-size search for decomposition families under
//! per-component chain limits.
//!
//! Feasibility of a family depends only on its component projections, and
//! enlarging a family to the full preimage of its projections keeps every
//! projection intact. The optimum therefore equals the maximum over
//! r-tuples of chain-free element sets (A_1, ..., A_r) of the number of
//! decomposition tuples with every component in its set. The search
//! branches on in/out decisions per (element, slot) pair in rank order,
//! keeps incremental longest-chain data for feasibility, and prunes with
//! an optimistic live-tuple count plus the fractional relaxation of the
//! sum bound restricted to live tuples per stratum. Seeds from unions of
//! full rank levels give a strong initial lower bound; reaching the
//! theorem bound ends the search early with optimality proved.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde_json::{json, Value};

use crate::coefficients::{sum_of_largest, ChainParams, Composition};
use crate::error::{Error, Result};
use crate::families::{enumerate_all, Family, FamilyMode};
use crate::lattices::{LatticeCtx, LatticeElem};
use crate::lym::{coefficient_table, stratum_coefficient, verify_family};

const MAX_SEARCH_ELEMS: usize = 4096;
const MAX_SEARCH_DECISIONS: usize = 8192;
const TIME_CHECK_MASK: u64 = 0xFFF;

#[derive(Clone, Debug)]
pub struct SearchConfig {
    pub budget: Duration,
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            budget: Duration::from_secs(300),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SearchResult {
    pub max_size: u64,
    pub witness: Family,
    pub theorem_bound: BigInt,
    pub nodes_explored: u64,
    pub proved_optimal: bool,
}

impl SearchResult {
    pub fn to_json(&self) -> Result<Value> {
        Ok(json!({
            "max_size": self.max_size,
            "theorem_bound": self.theorem_bound.to_string(),
            "nodes_explored": self.nodes_explored,
            "proved_optimal": self.proved_optimal,
            "witness": self.witness.to_json()?,
        }))
    }
}

/// True iff every component projection of the family respects its chain
/// limit.
pub fn verify_witness(family: &Family, params: &ChainParams) -> Result<bool> {
    let report = verify_family(family, params)?;
    Ok(report.premises_all_hold() == Some(true))
}

/// Scaled integer greedy for the fractional relaxation of the sum bound.
/// Every tuple of stratum s costs `costs[s]` units out of `budget`, with
/// strata ordered cheapest first.
enum KnapsackNums {
    Small { costs: Vec<u128>, budget: u128 },
    Big { costs: Vec<BigInt>, budget: BigInt },
}

impl KnapsackNums {
    /// True iff no live selection can beat `best`.
    fn prunes(&self, live: &[u64], best: u64) -> bool {
        match self {
            KnapsackNums::Small { costs, budget } => {
                let mut upper = 0u64;
                let mut rem = *budget;
                for (s, &cost) in costs.iter().enumerate() {
                    let u = live[s];
                    if u == 0 {
                        continue;
                    }
                    let full = u as u128 * cost;
                    if full <= rem {
                        rem -= full;
                        upper += u;
                    } else {
                        upper += (rem / cost) as u64;
                        rem = 0;
                    }
                    if upper > best {
                        return false;
                    }
                    if rem == 0 {
                        break;
                    }
                }
                upper <= best
            }
            KnapsackNums::Big { costs, budget } => {
                let mut upper = 0u64;
                let mut rem = budget.clone();
                for (s, cost) in costs.iter().enumerate() {
                    let u = live[s];
                    if u == 0 {
                        continue;
                    }
                    let full = BigInt::from(u) * cost;
                    if full <= rem {
                        rem -= full;
                        upper += u;
                    } else {
                        upper += (&rem / cost).to_u64().unwrap_or(u64::MAX);
                        rem = BigInt::from(0);
                    }
                    if upper > best {
                        return false;
                    }
                    if rem.sign() == num_bigint::Sign::NoSign {
                        break;
                    }
                }
                upper <= best
            }
        }
    }
}

/// Immutable data shared by every worker.
struct SearchSpace {
    r: usize,
    elem_count: usize,
    limits: Vec<u64>,
    /// Strict predecessors of each element, as indices; rank ascending
    /// guarantees predecessors come earlier.
    preds: Vec<Vec<u32>>,
    /// Element ranks, aligned with the canonical element order.
    ranks: Vec<u32>,
    /// Tuples as element indices, canonical enumeration order.
    tuples: Vec<Vec<u32>>,
    /// Stratum id per tuple; ids sorted by coefficient descending.
    tuple_stratum: Vec<u32>,
    stratum_count: usize,
    /// Tuple indices using element e in slot k, at e * r + k.
    slot_tuples: Vec<Vec<u32>>,
    knapsack: KnapsackNums,
}

impl SearchSpace {
    fn decisions(&self) -> usize {
        self.elem_count * self.r
    }
}

struct Shared {
    best: AtomicU64,
    stop: AtomicBool,
    timed_out: AtomicBool,
    /// Best witness so far as (size, tuple indices).
    witness: Mutex<(u64, Vec<u32>)>,
    nodes: AtomicU64,
    next_item: AtomicUsize,
    start: Instant,
    budget: Duration,
    bound_u64: Option<u64>,
}

impl Shared {
    fn record(&self, size: u64, tuple_ids: impl FnOnce() -> Vec<u32>) {
        let mut cur = self.best.load(Ordering::Relaxed);
        while size > cur {
            match self
                .best
                .compare_exchange(cur, size, Ordering::AcqRel, Ordering::Relaxed)
            {
                Ok(_) => {
                    let mut w = self.witness.lock().unwrap();
                    if size > w.0 {
                        *w = (size, tuple_ids());
                    }
                    drop(w);
                    if self.bound_u64 == Some(size) {
                        self.stop.store(true, Ordering::Relaxed);
                    }
                    return;
                }
                Err(seen) => cur = seen,
            }
        }
    }
}

/// Mutable per-worker search state.
struct WorkerState {
    /// Membership per slot, at k * elem_count + e.
    in_set: Vec<bool>,
    /// Longest chain ending at e within slot k's set, same layout.
    chain_end: Vec<u32>,
    /// Excluded-component count per tuple; zero means optimistically live.
    violations: Vec<u16>,
    live: u64,
    live_per_stratum: Vec<u64>,
    nodes: u64,
}

impl WorkerState {
    fn fresh(sp: &SearchSpace) -> Self {
        let lanes = sp.r * sp.elem_count;
        let mut live_per_stratum = vec![0u64; sp.stratum_count];
        for &s in &sp.tuple_stratum {
            live_per_stratum[s as usize] += 1;
        }
        WorkerState {
            in_set: vec![false; lanes],
            chain_end: vec![0; lanes],
            violations: vec![0; sp.tuples.len()],
            live: sp.tuples.len() as u64,
            live_per_stratum,
            nodes: 0,
        }
    }

    /// Longest chain that would end at e if added to slot k, or None when
    /// it exceeds the limit.
    fn chain_extension(&self, sp: &SearchSpace, e: usize, k: usize) -> Option<u32> {
        let base = k * sp.elem_count;
        let mut longest = 0u32;
        for &f in &sp.preds[e] {
            let f = f as usize;
            if self.in_set[base + f] {
                longest = longest.max(self.chain_end[base + f]);
            }
        }
        let ce = longest + 1;
        (u64::from(ce) <= sp.limits[k]).then_some(ce)
    }

    fn exclude(&mut self, sp: &SearchSpace, e: usize, k: usize) {
        for &j in &sp.slot_tuples[e * sp.r + k] {
            let j = j as usize;
            self.violations[j] += 1;
            if self.violations[j] == 1 {
                self.live -= 1;
                self.live_per_stratum[sp.tuple_stratum[j] as usize] -= 1;
            }
        }
    }

    fn readmit(&mut self, sp: &SearchSpace, e: usize, k: usize) {
        for &j in &sp.slot_tuples[e * sp.r + k] {
            let j = j as usize;
            self.violations[j] -= 1;
            if self.violations[j] == 0 {
                self.live += 1;
                self.live_per_stratum[sp.tuple_stratum[j] as usize] += 1;
            }
        }
    }

    fn live_tuple_ids(&self) -> Vec<u32> {
        self.violations
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 0)
            .map(|(j, _)| j as u32)
            .collect()
    }
}

fn dfs(sp: &SearchSpace, st: &mut WorkerState, sh: &Shared, d: usize, live_changed: bool) {
    if sh.stop.load(Ordering::Relaxed) {
        return;
    }
    st.nodes += 1;
    if st.nodes & TIME_CHECK_MASK == 0 && sh.start.elapsed() >= sh.budget {
        sh.timed_out.store(true, Ordering::Relaxed);
        sh.stop.store(true, Ordering::Relaxed);
        return;
    }
    let best = sh.best.load(Ordering::Relaxed);
    if st.live <= best {
        return;
    }
    if d == sp.decisions() {
        sh.record(st.live, || st.live_tuple_ids());
        return;
    }
    // In-branches keep live counts, so the parent's relaxation verdict
    // still stands there.
    if live_changed && sp.knapsack.prunes(&st.live_per_stratum, best) {
        return;
    }
    let e = d / sp.r;
    let k = d % sp.r;
    if let Some(ce) = st.chain_extension(sp, e, k) {
        let lane = k * sp.elem_count + e;
        st.in_set[lane] = true;
        st.chain_end[lane] = ce;
        dfs(sp, st, sh, d + 1, false);
        st.in_set[lane] = false;
    }
    st.exclude(sp, e, k);
    dfs(sp, st, sh, d + 1, true);
    st.readmit(sp, e, k);
}

/// Unions of full rank levels are chain-free up to the number of levels
/// used, so the best product of such unions is a certified lower bound.
/// Returns its size and tuple indices.
fn level_union_seed(sp: &SearchSpace, strata: &[(Composition, BigInt)]) -> (u64, Vec<u32>) {
    let levels = sp.ranks.last().map_or(1, |&top| top + 1);
    let totals: Vec<u64> = {
        let mut t = vec![0u64; sp.stratum_count];
        for &s in &sp.tuple_stratum {
            t[s as usize] += 1;
        }
        t
    };
    let per_slot: Vec<Vec<u64>> = sp
        .limits
        .iter()
        .map(|&t| level_masks(levels, (t.min(u64::from(levels))) as u32))
        .collect();
    let mut best = 0u64;
    let mut best_masks: Vec<u64> = per_slot.iter().map(|m| m[0]).collect();
    let mut idx = vec![0usize; sp.r];
    loop {
        let masks: Vec<u64> = idx
            .iter()
            .zip(&per_slot)
            .map(|(&i, opts)| opts[i])
            .collect();
        let mut size = 0u64;
        for (s, (comp, _)) in strata.iter().enumerate() {
            let fits = comp
                .parts()
                .iter()
                .zip(&masks)
                .all(|(&a, &m)| m >> a & 1 == 1);
            if fits {
                size += totals[s];
            }
        }
        if size > best {
            best = size;
            best_masks = masks;
        }
        let mut pos = 0;
        loop {
            if pos == sp.r {
                let witness: Vec<u32> = (0..sp.tuples.len() as u32)
                    .filter(|&j| {
                        let comp = &strata[sp.tuple_stratum[j as usize] as usize].0;
                        comp.parts()
                            .iter()
                            .zip(&best_masks)
                            .all(|(&a, &m)| m >> a & 1 == 1)
                    })
                    .collect();
                return (best, witness);
            }
            idx[pos] += 1;
            if idx[pos] < per_slot[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// All m-subsets of 0..levels as bitmasks, ascending.
fn level_masks(levels: u32, m: u32) -> Vec<u64> {
    if m == 0 || m > levels {
        return vec![if m == 0 { 0 } else { (1u64 << levels) - 1 }];
    }
    let mut out = Vec::new();
    let mut v: u64 = (1u64 << m) - 1;
    let top = 1u64 << levels;
    while v < top {
        out.push(v);
        let c = v & v.wrapping_neg();
        let r = v + c;
        v = r | (((v ^ r) >> 2) / c);
    }
    out
}

/// Exact maximum family size under the given chain limits, with a
/// certified witness. Leaves `proved_optimal` false when the time budget
/// runs out, returning the best family found so far.
pub fn max_family(
    ctx: &LatticeCtx,
    r: usize,
    params: &ChainParams,
    config: &SearchConfig,
) -> Result<SearchResult> {
    if params.len() != r {
        return Err(Error::ParamMismatch {
            params: params.len(),
            family: r,
        });
    }
    let start = Instant::now();

    let table = coefficient_table(ctx, FamilyMode::Decomposition, r)?;
    let sigma = params.product_excluding_max();
    let coef_values: Vec<BigInt> = table.iter().map(|(_, c)| c.clone()).collect();
    let theorem_bound = sum_of_largest(&coef_values, &sigma);

    let elems: Vec<LatticeElem> = ctx.all_elements().collect();
    if elems.len() > MAX_SEARCH_ELEMS {
        return Err(Error::TooLarge(format!(
            "{} elements exceed the search guard of {}",
            elems.len(),
            MAX_SEARCH_ELEMS
        )));
    }
    if ctx.top_rank() > 62 {
        return Err(Error::TooLarge(
            "lattice has more rank levels than the search supports".into(),
        ));
    }
    if elems.len() * r > MAX_SEARCH_DECISIONS {
        return Err(Error::TooLarge(format!(
            "{} decisions exceed the search guard of {}",
            elems.len() * r,
            MAX_SEARCH_DECISIONS
        )));
    }
    let index: BTreeMap<&LatticeElem, u32> = elems
        .iter()
        .enumerate()
        .map(|(i, e)| (e, i as u32))
        .collect();
    let ranks: Vec<u32> = elems.iter().map(|e| ctx.rank(e)).collect::<Result<_>>()?;
    let mut preds: Vec<Vec<u32>> = vec![Vec::new(); elems.len()];
    for e in 0..elems.len() {
        for f in 0..e {
            if ranks[f] < ranks[e] && ctx.leq(&elems[f], &elems[e])? {
                preds[e].push(f as u32);
            }
        }
    }

    let raw_tuples = enumerate_all(ctx, FamilyMode::Decomposition, r, false)?;
    let mut strata_map: BTreeMap<Composition, BigInt> = BTreeMap::new();
    let mut tuple_comps = Vec::with_capacity(raw_tuples.len());
    for t in &raw_tuples {
        let mut parts = Vec::with_capacity(r);
        for p in t.parts() {
            parts.push(ranks[index[p] as usize]);
        }
        let comp = Composition::new(parts);
        if !strata_map.contains_key(&comp) {
            let coef = stratum_coefficient(ctx, FamilyMode::Decomposition, &comp)?;
            strata_map.insert(comp.clone(), coef);
        }
        tuple_comps.push(comp);
    }
    // Cheapest-first order for the greedy relaxation: coefficient
    // descending, composition ascending on ties.
    let mut strata: Vec<(Composition, BigInt)> = strata_map.into_iter().collect();
    strata.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let stratum_id: BTreeMap<&Composition, u32> = strata
        .iter()
        .enumerate()
        .map(|(i, (c, _))| (c, i as u32))
        .collect();
    let tuple_stratum: Vec<u32> = tuple_comps.iter().map(|c| stratum_id[c]).collect();

    let tuples: Vec<Vec<u32>> = raw_tuples
        .iter()
        .map(|t| t.parts().iter().map(|p| index[p]).collect())
        .collect();
    let mut slot_tuples: Vec<Vec<u32>> = vec![Vec::new(); elems.len() * r];
    for (j, t) in tuples.iter().enumerate() {
        for (k, &e) in t.iter().enumerate() {
            slot_tuples[e as usize * r + k].push(j as u32);
        }
    }

    let scale = strata
        .iter()
        .fold(BigInt::one(), |acc, (_, c)| acc.lcm(c));
    let budget_scaled = &sigma * &scale;
    let knapsack = if scale.bits() <= 80 && budget_scaled.bits() <= 100 {
        KnapsackNums::Small {
            costs: strata
                .iter()
                .map(|(_, c)| (&scale / c).to_u128().expect("fits by bit bound"))
                .collect(),
            budget: budget_scaled.to_u128().expect("fits by bit bound"),
        }
    } else {
        KnapsackNums::Big {
            costs: strata.iter().map(|(_, c)| &scale / c).collect(),
            budget: budget_scaled,
        }
    };

    let sp = SearchSpace {
        r,
        elem_count: elems.len(),
        limits: params.limits().to_vec(),
        preds,
        ranks,
        tuples,
        tuple_stratum,
        stratum_count: strata.len(),
        slot_tuples,
        knapsack,
    };

    let (seed_size, seed_witness) = level_union_seed(&sp, &strata);
    let shared = Shared {
        best: AtomicU64::new(seed_size),
        stop: AtomicBool::new(false),
        timed_out: AtomicBool::new(false),
        witness: Mutex::new((seed_size, seed_witness)),
        nodes: AtomicU64::new(0),
        next_item: AtomicUsize::new(0),
        start,
        budget: config.budget,
        bound_u64: theorem_bound.to_u64(),
    };

    let bound_reached = shared.bound_u64 == Some(seed_size);
    if !bound_reached && !sp.tuples.is_empty() {
        let workers = config.workers.max(1);
        if workers == 1 {
            let mut st = WorkerState::fresh(&sp);
            dfs(&sp, &mut st, &shared, 0, true);
            shared.nodes.fetch_add(st.nodes, Ordering::Relaxed);
        } else {
            // Work items fix the first few decisions of element 0; high
            // bit patterns first to mirror the in-first sequential order.
            let prefix = r.min(12);
            let items: Vec<u32> = (0..1u32 << prefix).rev().collect();
            std::thread::scope(|scope| {
                for _ in 0..workers.min(items.len()) {
                    std::thread::Builder::new()
                        .stack_size(32 << 20)
                        .spawn_scoped(scope, || loop {
                            let i = shared.next_item.fetch_add(1, Ordering::Relaxed);
                            if i >= items.len() || shared.stop.load(Ordering::Relaxed) {
                                return;
                            }
                            let pattern = items[i];
                            let mut st = WorkerState::fresh(&sp);
                            let mut feasible = true;
                            for k in 0..prefix {
                                if pattern >> k & 1 == 1 {
                                    match st.chain_extension(&sp, 0, k) {
                                        Some(ce) => {
                                            let lane = k * sp.elem_count;
                                            st.in_set[lane] = true;
                                            st.chain_end[lane] = ce;
                                        }
                                        None => {
                                            feasible = false;
                                            break;
                                        }
                                    }
                                } else {
                                    st.exclude(&sp, 0, k);
                                }
                            }
                            if feasible {
                                dfs(&sp, &mut st, &shared, prefix, true);
                            }
                            shared.nodes.fetch_add(st.nodes, Ordering::Relaxed);
                        })
                        .expect("spawn search worker");
                }
            });
        }
    }

    let (size, tuple_ids) = {
        let w = shared.witness.lock().unwrap();
        w.clone()
    };
    let max_size = shared.best.load(Ordering::Relaxed);
    debug_assert_eq!(max_size, size);
    let mut witness = Family::new(ctx.clone(), FamilyMode::Decomposition, r, false)?;
    for j in tuple_ids {
        witness.insert(raw_tuples[j as usize].parts().to_vec())?;
    }
    assert!(
        BigInt::from(max_size) <= theorem_bound,
        "search found a family above the proved bound"
    );
    Ok(SearchResult {
        max_size,
        witness,
        theorem_bound,
        nodes_explored: shared.nodes.load(Ordering::Relaxed),
        proved_optimal: !shared.timed_out.load(Ordering::Relaxed),
    })
}
