//! Approximate fractional vertex cover by multiplicative weights, and the
//! kernel it induces.

use crate::HashMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::geometry::ObjectId;
use crate::minpair::{MinPair, MinPairError, PairStore};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("delta must lie in (0, 1/4), got {0}")]
    BadDelta(f64),
    #[error("z must be positive, got {0}")]
    BadBudget(f64),
    #[error("need 0 < delta < gamma < 1/4, got delta={delta}, gamma={gamma}")]
    BadKernelParams { delta: f64, gamma: f64 },
    #[error("cover does not cover the kernel: edge ({0}, {1}) is open")]
    OpenEdge(ObjectId, ObjectId),
    #[error(transparent)]
    Store(#[from] MinPairError),
}

/// Iteration cap for budget `z` on `n` objects.
pub fn iteration_cap(z: f64, n: usize, delta: f64) -> u64 {
    let denom = (1.0 + delta).ln() - delta / (1.0 + delta);
    (z * (n.max(1) as f64).ln() / denom).ceil() as u64
}

/// Sparse MWU output: `x_v = min(z w_v / W, 1)` with `w_v = (1+delta)^c_v`.
/// Weights and `W` are stored divided by `(1+delta)^shift`, and scaled
/// exponents below `floor` are raised to it.
#[derive(Debug, Clone)]
pub struct FractionalCover {
    pub z: f64,
    pub w_total: f64,
    pub delta: f64,
    pub n: usize,
    pub iterations: u64,
    pub shift: u32,
    floor: i32,
    exponents: HashMap<ObjectId, u32>,
}

impl FractionalCover {
    /// The all-zero cover of an edgeless graph.
    pub fn zero(n: usize, delta: f64) -> Self {
        FractionalCover {
            z: 0.0,
            w_total: n.max(1) as f64,
            delta,
            n,
            iterations: 0,
            shift: 0,
            floor: i32::MIN / 2,
            exponents: HashMap::default(),
        }
    }

    /// Scaled weight `(1+delta)^(c_v - shift)`.
    pub fn weight(&self, id: ObjectId) -> f64 {
        self.scaled(self.exponents.get(&id).copied().unwrap_or(0))
    }

    fn scaled(&self, c: u32) -> f64 {
        (1.0 + self.delta).powi((c as i32 - self.shift as i32).max(self.floor))
    }

    pub fn x(&self, id: ObjectId) -> f64 {
        (self.z * self.weight(id) / self.w_total).min(1.0)
    }

    /// Value shared by every object whose weight never moved.
    pub fn base_x(&self) -> f64 {
        (self.z * self.scaled(0) / self.w_total).min(1.0)
    }

    /// Number of objects whose weight moved away from 1.
    pub fn support(&self) -> usize {
        self.exponents.len()
    }

    pub fn size(&self) -> f64 {
        let heavy: f64 = self.exponents.keys().map(|&id| self.x(id)).sum();
        heavy + (self.n - self.exponents.len()) as f64 * self.base_x()
    }

    /// `(id, x_v)` for every live id with `x_v >= threshold`. Touches only the
    /// moved ids unless the base value already clears the threshold.
    pub fn at_least<S: PairStore + ?Sized>(
        &self,
        threshold: f64,
        live: &S,
    ) -> Vec<(ObjectId, f64)> {
        let mut out: Vec<(ObjectId, f64)> = if self.base_x() >= threshold {
            live.live_ids()
                .into_iter()
                .map(|id| (id, self.x(id)))
                .filter(|e| e.1 >= threshold)
                .collect()
        } else {
            self.exponents
                .keys()
                .map(|&id| (id, self.x(id)))
                .filter(|e| e.1 >= threshold)
                .collect()
        };
        out.sort_unstable_by_key(|e| e.0);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attempt {
    pub z: f64,
    pub iterations: u64,
    pub cap: u64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub enum MwuOutcome {
    Feasible(FractionalCover),
    Infeasible { iterations: u64 },
}

/// Natural-log span of weights kept above the common scale; past it all
/// weights are divided by a common power of `1 + delta`. Scaled weights
/// never drop below `exp(-2 WEIGHT_RANGE)`.
const WEIGHT_RANGE: f64 = 300.0;

fn check_delta(delta: f64) -> Result<(), LpError> {
    if delta > 0.0 && delta < 0.25 {
        Ok(())
    } else {
        Err(LpError::BadDelta(delta))
    }
}

/// State of one multiplicative-weights run. The trajectory does not depend
/// on the budget: each step doubles down on the lightest intersecting pair.
struct MwuRun {
    n: usize,
    delta: f64,
    step: f64,
    window: u32,
    floor: i32,
    shift: u32,
    w_total: f64,
    exps: HashMap<ObjectId, u32>,
    max_c: u32,
    t: u64,
    chosen: BTreeSet<(ObjectId, ObjectId)>,
}

impl MwuRun {
    fn new(n: usize, delta: f64, range: f64) -> Self {
        let step = 1.0 + delta;
        MwuRun {
            n,
            delta,
            step,
            window: ((range / step.ln()) as u32).max(2),
            floor: -((2.0 * WEIGHT_RANGE / step.ln()) as i32),
            shift: 0,
            w_total: n as f64,
            exps: HashMap::default(),
            max_c: 0,
            t: 0,
            chosen: BTreeSet::new(),
        }
    }

    fn scaled(&self, c: u32) -> f64 {
        self.step
            .powi((c as i32 - self.shift as i32).max(self.floor))
    }

    /// Fractional matching value `t / max c_v` carried by the choice counts.
    fn count_bound(&self) -> f64 {
        if self.max_c == 0 {
            0.0
        } else {
            self.t as f64 / self.max_c as f64
        }
    }

    /// Raises both endpoints of the chosen pair by a factor `1 + delta`.
    fn advance<S: PairStore + ?Sized>(
        &mut self,
        store: &mut S,
        pair: MinPair,
    ) -> Result<(), LpError> {
        self.t += 1;
        self.chosen.insert((pair.a, pair.b));
        for id in [pair.a, pair.b] {
            let c = self.exps.get(&id).copied().unwrap_or(0);
            let (old, new) = (self.scaled(c), self.scaled(c + 1));
            self.exps.insert(id, c + 1);
            self.max_c = self.max_c.max(c + 1);
            self.w_total += new - old;
            store.set_weight(id, new)?;
        }
        if self.max_c - self.shift > self.window {
            self.shift = self.max_c - self.window / 2;
            let mut all = store.live_ids();
            all.sort_unstable();
            self.w_total = 0.0;
            for id in all {
                let w = self.scaled(self.exps.get(&id).copied().unwrap_or(0));
                self.w_total += w;
                store.set_weight(id, w)?;
            }
        }
        Ok(())
    }

    fn cover(&self, z: f64) -> FractionalCover {
        FractionalCover {
            z,
            w_total: self.w_total,
            delta: self.delta,
            n: self.n,
            iterations: self.t,
            shift: self.shift,
            floor: self.floor,
            exponents: self.exps.clone(),
        }
    }

    /// Restores every weight to 1.
    fn reset<S: PairStore + ?Sized>(&self, store: &mut S) -> Result<(), LpError> {
        let mut touched: Vec<ObjectId> = if self.shift > 0 {
            store.live_ids()
        } else {
            self.exps.keys().copied().collect()
        };
        touched.sort_unstable();
        for id in touched {
            store.set_weight(id, 1.0)?;
        }
        Ok(())
    }
}

/// One MWU run with budget `z`. Store weights are restored to 1 on return.
///
/// The run also stops early once the edges it has chosen certify `LP > z`.
/// Two certificates are used: the choice counts scaled by the largest
/// per-vertex count form a fractional matching of value `t / max c_v`, and
/// at doubling checkpoints the maximum fractional matching of the chosen
/// edge set is computed exactly. Either exceeding `z` means the loop could
/// never stop with a cover of size at most `z`.
pub fn mwu_attempt<S: PairStore + ?Sized>(
    store: &mut S,
    z: f64,
    delta: f64,
) -> Result<(MwuOutcome, Attempt), LpError> {
    mwu_attempt_in_range(store, z, delta, WEIGHT_RANGE)
}

fn mwu_attempt_in_range<S: PairStore + ?Sized>(
    store: &mut S,
    z: f64,
    delta: f64,
    range: f64,
) -> Result<(MwuOutcome, Attempt), LpError> {
    check_delta(delta)?;
    if !(z > 0.0) || !z.is_finite() {
        return Err(LpError::BadBudget(z));
    }
    let cap = iteration_cap(z, store.len(), delta);
    let mut run = MwuRun::new(store.len(), delta, range);
    let mut checkpoint = 16u64;
    let feasible = loop {
        let Some(pair) = store.min_pair() else {
            break true;
        };
        if pair.sum >= run.w_total / z {
            break true;
        }
        if run.t == cap || run.count_bound() > z * (1.0 + 1e-12) {
            break false;
        }
        if run.t == checkpoint {
            checkpoint *= 2;
            if fractional_matching_value(&run.chosen) > z {
                break false;
            }
        }
        run.advance(store, pair)?;
    };
    run.reset(store)?;
    let attempt = Attempt {
        z,
        iterations: run.t,
        cap,
        feasible,
    };
    if feasible {
        Ok((MwuOutcome::Feasible(run.cover(z)), attempt))
    } else {
        Ok((MwuOutcome::Infeasible { iterations: run.t }, attempt))
    }
}

/// Maximum fractional matching value of an edge set: half the maximum
/// matching of its bipartite double cover.
fn fractional_matching_value(edges: &BTreeSet<(ObjectId, ObjectId)>) -> f64 {
    let mut index: HashMap<ObjectId, usize> = HashMap::default();
    let mut adj: Vec<Vec<usize>> = Vec::new();
    let mut slot = |id: ObjectId, adj: &mut Vec<Vec<usize>>| {
        *index.entry(id).or_insert_with(|| {
            adj.push(Vec::new());
            adj.len() - 1
        })
    };
    for &(a, b) in edges {
        let (i, j) = (slot(a, &mut adj), slot(b, &mut adj));
        adj[i].push(j);
        adj[j].push(i);
    }
    let m = adj.len();
    let mut mate_r: Vec<Option<usize>> = vec![None; m];
    fn augment(
        l: usize,
        adj: &[Vec<usize>],
        mate_r: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &r in &adj[l] {
            if !seen[r] {
                seen[r] = true;
                if mate_r[r].is_none_or(|l2| augment(l2, adj, mate_r, seen)) {
                    mate_r[r] = Some(l);
                    return true;
                }
            }
        }
        false
    }
    let mut size = 0usize;
    for l in 0..m {
        let mut seen = vec![false; m];
        if augment(l, &adj, &mut mate_r, &mut seen) {
            size += 1;
        }
    }
    size as f64 / 2.0
}

/// Approximate minimum fractional vertex cover, within `(1+delta)^2` of
/// the optimum.
///
/// The run at budget `z` stops at the first step where `W / (lightest pair
/// sum) <= z`, and its weights evolve identically for every `z`. A single
/// run therefore serves every budget of the search at once: the cover at
/// step `t` is feasible for `z_t = W_t / (lightest pair sum)`. The run keeps
/// the best such cover and stops once it is certified, either by a
/// fractional matching (choice counts or chosen edge set) within a factor
/// `1 + delta`, or by reaching the iteration cap of `z_best / (1+delta)`,
/// which a budget of at least `(1+delta) LP` never exceeds.
pub fn solve_fractional_vc<S: PairStore + ?Sized>(
    store: &mut S,
    delta: f64,
) -> Result<(FractionalCover, Vec<Attempt>), LpError> {
    solve_in_range(store, delta, WEIGHT_RANGE)
}

fn solve_in_range<S: PairStore + ?Sized>(
    store: &mut S,
    delta: f64,
    range: f64,
) -> Result<(FractionalCover, Vec<Attempt>), LpError> {
    check_delta(delta)?;
    let n = store.len();
    if store.min_pair().is_none() {
        return Ok((FractionalCover::zero(n, delta), Vec::new()));
    }
    let mut run = MwuRun::new(n, delta, range);
    let mut best: Option<FractionalCover> = None;
    let mut lower = 0.0f64;
    let mut checkpoint = 16u64;
    let mut checked_edges = 0usize;
    let refine = 1.0 + delta / 4.0;
    while let Some(pair) = store.min_pair() {
        let z_t = run.w_total / pair.sum;
        if best.as_ref().is_none_or(|b| z_t * refine < b.z) {
            best = Some(run.cover(z_t));
        }
        let z_best = best.as_ref().map_or(z_t, |b| b.z);
        lower = lower.max(run.count_bound());
        if run.t >= checkpoint {
            checkpoint += checkpoint / 4;
            if run.chosen.len() > checked_edges {
                checked_edges = run.chosen.len();
                lower = lower.max(fractional_matching_value(&run.chosen));
            }
        }
        if z_best <= (1.0 + delta) * lower
            || run.t >= iteration_cap(z_best / (1.0 + delta), n, delta)
        {
            break;
        }
        run.advance(store, pair)?;
    }
    run.reset(store)?;
    let best = best.expect("a pair exists at the first step");
    let attempt = Attempt {
        z: best.z,
        iterations: run.t,
        cap: iteration_cap(best.z, n, delta),
        feasible: true,
    };
    Ok((best, vec![attempt]))
}

/// Partition of the live objects by LP value. `L` is implicit: every live id
/// outside `K` and `H`.
#[derive(Debug, Clone)]
pub struct Kernel {
    pub k: Vec<ObjectId>,
    pub h: Vec<ObjectId>,
    pub alpha: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Sum of `x_v` over the live objects.
    pub cover_size: f64,
}

impl Kernel {
    /// Ids of the low part, given the full live id set.
    pub fn low<'a>(
        &'a self,
        all: impl IntoIterator<Item = ObjectId> + 'a,
    ) -> impl Iterator<Item = ObjectId> + 'a {
        all.into_iter().filter(move |id| {
            self.k.binary_search(id).is_err() && self.h.binary_search(id).is_err()
        })
    }
}

pub fn build_kernel<S: PairStore + ?Sized>(
    cover: &FractionalCover,
    live: &S,
    gamma: f64,
    delta: f64,
) -> Result<Kernel, LpError> {
    check_kernel_params(gamma, delta)?;
    let lo = 0.5 - gamma - (gamma * delta).sqrt();
    Ok(partition(
        &cover.at_least(lo, live),
        gamma,
        delta,
        cover.size(),
    ))
}

/// Kernel from explicit LP values (every live id with its `x_v`).
pub fn kernel_from_values(
    values: &[(ObjectId, f64)],
    gamma: f64,
    delta: f64,
) -> Result<Kernel, LpError> {
    check_kernel_params(gamma, delta)?;
    let lo = 0.5 - gamma - (gamma * delta).sqrt();
    let mut cands: Vec<(ObjectId, f64)> = values.iter().copied().filter(|e| e.1 >= lo).collect();
    cands.sort_unstable_by_key(|e| e.0);
    Ok(partition(
        &cands,
        gamma,
        delta,
        values.iter().map(|e| e.1).sum(),
    ))
}

fn check_kernel_params(gamma: f64, delta: f64) -> Result<(), LpError> {
    if delta > 0.0 && delta < gamma && gamma < 0.25 {
        Ok(())
    } else {
        Err(LpError::BadKernelParams { delta, gamma })
    }
}

/// `cands` holds every id with `x_v >= 1/2 - gamma - lambda`, sorted by id.
fn partition(cands: &[(ObjectId, f64)], gamma: f64, delta: f64, cover_size: f64) -> Kernel {
    let lambda = (gamma * delta).sqrt();
    let lo = 0.5 - gamma - lambda;
    let mut xs: Vec<f64> = cands.iter().map(|e| e.1).collect();
    xs.sort_unstable_by(f64::total_cmp);
    let count_in = |a: f64, b: f64| xs.partition_point(|&x| x < b) - xs.partition_point(|&x| x < a);
    let tol = 1e-12;
    let m_lo = ((lo - tol) / lambda).ceil().max(1.0) as i64;
    let m_hi = ((0.5 - lambda + tol) / lambda).floor() as i64;
    let mut best: Option<(usize, f64)> = None;
    for m in m_lo..=m_hi {
        let a = m as f64 * lambda;
        let c = count_in(a, a + lambda);
        if best.is_none_or(|(bc, _)| c < bc) {
            best = Some((c, a));
        }
    }
    let alpha = best.map_or(lambda * m_hi.max(1) as f64, |b| b.1);
    let mut k = Vec::new();
    let mut h = Vec::new();
    for &(id, x) in cands {
        if x > 1.0 - alpha {
            h.push(id);
        } else if x >= alpha {
            k.push(id);
        }
    }
    Kernel {
        k,
        h,
        alpha,
        lambda,
        gamma,
        delta,
        cover_size,
    }
}

/// `S_K ∪ H`, sorted.
pub fn lift_cover(kernel: &Kernel, s_k: &[ObjectId]) -> Vec<ObjectId> {
    let mut out: Vec<ObjectId> = s_k.iter().chain(&kernel.h).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Check that `s_k` covers every edge of `G[K]`.
pub fn check_kernel_cover<S: PairStore + ?Sized>(
    kernel: &Kernel,
    live: &S,
    s_k: &[ObjectId],
) -> Result<(), LpError> {
    let mut inc: crate::HashSet<ObjectId> = s_k.iter().copied().collect();
    inc.retain(|id| kernel.k.binary_search(id).is_ok());
    for (i, &u) in kernel.k.iter().enumerate() {
        for &v in &kernel.k[i + 1..] {
            if !inc.contains(&u) && !inc.contains(&v) && live.adjacent(u, v) {
                return Err(LpError::OpenEdge(u, v));
            }
        }
    }
    Ok(())
}
