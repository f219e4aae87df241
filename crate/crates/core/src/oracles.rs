//! Exact reference algorithms on explicitly materialised intersection graphs.
//!
//! Nothing here touches the dynamic stores; every graph is rebuilt from
//! pairwise predicate calls so cross-checks stay independent.

use crate::HashMap;
use std::collections::VecDeque;

use thiserror::Error;

use crate::geometry::{GeomObject, ObjectId, Shape, Side};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("search budget of {0} nodes exhausted")]
    BudgetExhausted(u64),
    #[error("graph is not bipartite under its side tags")]
    NotBipartite,
    #[error("graph has {n} vertices, oracle limit is {max}")]
    TooLarge { n: usize, max: usize },
}

/// Default node budget for the branch-and-bound oracles.
pub const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Debug, Clone)]
pub struct ExplicitGraph {
    ids: Vec<ObjectId>,
    sides: Vec<Side>,
    adj: Vec<Vec<usize>>,
    index: HashMap<ObjectId, usize>,
}

impl ExplicitGraph {
    pub fn from_objects(objs: &[GeomObject]) -> Self {
        let n = objs.len();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in (i + 1)..n {
                if objs[i].shape.intersects(&objs[j].shape) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let ids: Vec<ObjectId> = objs.iter().map(|o| o.id).collect();
        let index = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        ExplicitGraph {
            ids,
            sides: objs.iter().map(|o| o.side).collect(),
            adj,
            index,
        }
    }

    /// Bipartite intersection graph: only objects on different sides are
    /// joined. Untagged objects stay isolated.
    pub fn bipartite_from_objects(objs: &[GeomObject]) -> Self {
        let mut g = Self::from_objects(objs);
        for i in 0..g.n() {
            let si = objs[i].side;
            g.adj[i]
                .retain(|&j| si != Side::None && objs[j].side != Side::None && objs[j].side != si);
        }
        g
    }

    /// Graph on vertices `0..n` (ids equal indices), untagged.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            assert!(u < n && v < n && u != v, "bad edge ({u},{v})");
            if !adj[u].contains(&v) {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        ExplicitGraph {
            ids: (0..n).collect(),
            sides: vec![Side::None; n],
            adj,
            index: (0..n).map(|i| (i, i)).collect(),
        }
    }

    pub fn with_sides(mut self, sides: Vec<Side>) -> Self {
        assert_eq!(sides.len(), self.n());
        self.sides = sides;
        self
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn id(&self, i: usize) -> ObjectId {
        self.ids[i]
    }

    pub fn ids(&self) -> &[ObjectId] {
        &self.ids
    }

    pub fn side(&self, i: usize) -> Side {
        self.sides[i]
    }

    pub fn index_of(&self, id: ObjectId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].contains(&j)
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, nb)| nb.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Induced subgraph on the given vertex indices, keeping ids and sides.
    pub fn induced(&self, keep: &[usize]) -> ExplicitGraph {
        let mut pos = vec![usize::MAX; self.n()];
        for (k, &i) in keep.iter().enumerate() {
            pos[i] = k;
        }
        let adj = keep
            .iter()
            .map(|&i| {
                self.adj[i]
                    .iter()
                    .filter(|&&j| pos[j] != usize::MAX)
                    .map(|&j| pos[j])
                    .collect()
            })
            .collect();
        let ids: Vec<ObjectId> = keep.iter().map(|&i| self.ids[i]).collect();
        let index = ids.iter().enumerate().map(|(k, &id)| (id, k)).collect();
        ExplicitGraph {
            ids,
            sides: keep.iter().map(|&i| self.sides[i]).collect(),
            adj,
            index,
        }
    }

    /// Left/right index lists if every edge joins a Left and a Right vertex.
    pub fn bipartition(&self) -> Result<(Vec<usize>, Vec<usize>), OracleError> {
        let mut left = Vec::new();
        let mut right = Vec::new();
        for i in 0..self.n() {
            match self.sides[i] {
                Side::Left => left.push(i),
                Side::Right => right.push(i),
                Side::None if self.adj[i].is_empty() => left.push(i),
                Side::None => return Err(OracleError::NotBipartite),
            }
        }
        if self.edges().any(|(u, v)| self.sides[u] == self.sides[v]) {
            return Err(OracleError::NotBipartite);
        }
        Ok((left, right))
    }

    /// Two-colouring by BFS, ignoring side tags.
    pub fn two_coloring(&self) -> Option<Vec<Side>> {
        let mut col = vec![Side::None; self.n()];
        for s in 0..self.n() {
            if col[s] != Side::None {
                continue;
            }
            col[s] = Side::Left;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &v in &self.adj[u] {
                    if col[v] == Side::None {
                        col[v] = col[u].opposite();
                        q.push_back(v);
                    } else if col[v] == col[u] {
                        return None;
                    }
                }
            }
        }
        Some(col)
    }
}

pub fn is_vertex_cover(g: &ExplicitGraph, cover: &[usize]) -> bool {
    let mut inc = vec![false; g.n()];
    for &v in cover {
        inc[v] = true;
    }
    g.edges().all(|(u, v)| inc[u] || inc[v])
}

pub fn is_independent(g: &ExplicitGraph, set: &[usize]) -> bool {
    let mut inc = vec![false; g.n()];
    for &v in set {
        inc[v] = true;
    }
    g.edges().all(|(u, v)| !(inc[u] && inc[v]))
}

pub fn is_matching(g: &ExplicitGraph, pairs: &[(usize, usize)]) -> bool {
    let mut used = vec![false; g.n()];
    for &(u, v) in pairs {
        if u == v || used[u] || used[v] || !g.has_edge(u, v) {
            return false;
        }
        used[u] = true;
        used[v] = true;
    }
    true
}

/// Maximum bipartite matching by Hopcroft-Karp. `adj[l]` lists right indices.
pub fn hopcroft_karp(
    nl: usize,
    nr: usize,
    adj: &[Vec<usize>],
) -> (Vec<Option<usize>>, Vec<Option<usize>>) {
    const INF: usize = usize::MAX;
    let mut ml: Vec<Option<usize>> = vec![None; nl];
    let mut mr: Vec<Option<usize>> = vec![None; nr];
    let mut dist = vec![INF; nl];
    loop {
        let mut q = VecDeque::new();
        for l in 0..nl {
            if ml[l].is_none() {
                dist[l] = 0;
                q.push_back(l);
            } else {
                dist[l] = INF;
            }
        }
        let mut found = false;
        while let Some(l) = q.pop_front() {
            for &r in &adj[l] {
                match mr[r] {
                    None => found = true,
                    Some(l2) if dist[l2] == INF => {
                        dist[l2] = dist[l] + 1;
                        q.push_back(l2);
                    }
                    _ => {}
                }
            }
        }
        if !found {
            break;
        }
        let mut it = vec![0usize; nl];
        fn dfs(
            l: usize,
            adj: &[Vec<usize>],
            ml: &mut [Option<usize>],
            mr: &mut [Option<usize>],
            dist: &mut [usize],
            it: &mut [usize],
        ) -> bool {
            while it[l] < adj[l].len() {
                let r = adj[l][it[l]];
                it[l] += 1;
                let ok = match mr[r] {
                    None => true,
                    Some(l2) => dist[l2] == dist[l] + 1 && dfs(l2, adj, ml, mr, dist, it),
                };
                if ok {
                    ml[l] = Some(r);
                    mr[r] = Some(l);
                    return true;
                }
            }
            dist[l] = usize::MAX;
            false
        }
        for l in 0..nl {
            if ml[l].is_none() {
                dfs(l, adj, &mut ml, &mut mr, &mut dist, &mut it);
            }
        }
    }
    (ml, mr)
}

/// Maximum matching of a bipartite graph (pairs of vertex indices, left first).
pub fn exact_bipartite_mcm(g: &ExplicitGraph) -> Result<Vec<(usize, usize)>, OracleError> {
    let (left, right) = g.bipartition()?;
    let mut rpos = vec![usize::MAX; g.n()];
    for (k, &r) in right.iter().enumerate() {
        rpos[r] = k;
    }
    let adj: Vec<Vec<usize>> = left
        .iter()
        .map(|&l| g.neighbors(l).iter().map(|&r| rpos[r]).collect())
        .collect();
    let (ml, _) = hopcroft_karp(left.len(), right.len(), &adj);
    Ok(ml
        .iter()
        .enumerate()
        .filter_map(|(k, m)| m.map(|r| (left[k], right[r])))
        .collect())
}

/// Augment-until-stuck baseline (one DFS per left vertex per round).
pub fn simple_bipartite_mcm(g: &ExplicitGraph) -> Result<usize, OracleError> {
    let (left, _) = g.bipartition()?;
    let mut mate: Vec<Option<usize>> = vec![None; g.n()];
    fn try_kuhn(
        u: usize,
        g: &ExplicitGraph,
        mate: &mut [Option<usize>],
        seen: &mut [bool],
    ) -> bool {
        for &v in g.neighbors(u) {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if mate[v].is_none() || try_kuhn(mate[v].unwrap(), g, mate, seen) {
                mate[v] = Some(u);
                mate[u] = Some(v);
                return true;
            }
        }
        false
    }
    let mut size = 0;
    loop {
        let mut grew = false;
        for &u in &left {
            if mate[u].is_none() {
                let mut seen = vec![false; g.n()];
                if try_kuhn(u, g, &mut mate, &mut seen) {
                    size += 1;
                    grew = true;
                }
            }
        }
        if !grew {
            return Ok(size);
        }
    }
}

/// Minimum fractional vertex cover: value and a half-integral optimum.
pub fn exact_fractional_vc(g: &ExplicitGraph) -> (f64, Vec<f64>) {
    let all: Vec<usize> = (0..g.n()).collect();
    let x = half_integral_lp(&g.adj, &all, &vec![true; g.n()]);
    let twice: u32 = x.iter().map(|&h| h as u32).sum();
    (
        twice as f64 / 2.0,
        x.iter().map(|&h| h as f64 / 2.0).collect(),
    )
}

/// Twice the LP optimum per vertex (0, 1 or 2) on the subgraph induced by
/// `inset`, via the bipartite double cover and Konig's theorem.
fn half_integral_lp(adj: &[Vec<usize>], vs: &[usize], inset: &[bool]) -> Vec<u8> {
    let n = adj.len();
    let mut pos = vec![usize::MAX; n];
    for (k, &v) in vs.iter().enumerate() {
        pos[v] = k;
    }
    let m = vs.len();
    let dadj: Vec<Vec<usize>> = vs
        .iter()
        .map(|&v| {
            adj[v]
                .iter()
                .filter(|&&u| inset[u])
                .map(|&u| pos[u])
                .collect()
        })
        .collect();
    let (ml, mr) = hopcroft_karp(m, m, &dadj);
    let mut zl = vec![false; m];
    let mut zr = vec![false; m];
    let mut q: VecDeque<usize> = (0..m).filter(|&l| ml[l].is_none()).collect();
    for &l in &q {
        zl[l] = true;
    }
    while let Some(l) = q.pop_front() {
        for &r in &dadj[l] {
            if !zr[r] {
                zr[r] = true;
                if let Some(l2) = mr[r] {
                    if !zl[l2] {
                        zl[l2] = true;
                        q.push_back(l2);
                    }
                }
            }
        }
    }
    let mut out = vec![0u8; n];
    for k in 0..m {
        out[vs[k]] = (!zl[k]) as u8 + zr[k] as u8;
    }
    out
}

struct MvcSearch<'a> {
    adj: &'a [Vec<usize>],
    nodes: u64,
    budget: u64,
}

impl MvcSearch<'_> {
    /// Minimum cover of the subgraph induced by `vs`, provided one of size
    /// `< limit` exists.
    fn solve(&mut self, vs: Vec<usize>, limit: usize) -> Result<Option<Vec<usize>>, OracleError> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(OracleError::BudgetExhausted(self.budget));
        }
        let n = self.adj.len();
        let mut inset = vec![false; n];
        for &v in &vs {
            inset[v] = true;
        }
        let mut vs = vs;
        let mut cover = Vec::new();
        self.reduce(&mut inset, &mut vs, &mut cover);
        if cover.len() >= limit {
            return Ok(None);
        }
        if vs.is_empty() {
            return Ok(Some(cover));
        }
        let comps = self.components(&inset, &vs);
        if comps.len() > 1 {
            for comp in comps {
                let cap = comp.len() + 1;
                match self.solve(comp, cap)? {
                    Some(s) => cover.extend(s),
                    None => unreachable!("a component always has a cover no larger than itself"),
                }
                if cover.len() >= limit {
                    return Ok(None);
                }
            }
            return Ok(Some(cover));
        }
        let lp = half_integral_lp(self.adj, &vs, &inset);
        let twice: usize = vs.iter().map(|&v| lp[v] as usize).sum();
        if cover.len() + twice.div_ceil(2) >= limit {
            return Ok(None);
        }
        if vs.iter().any(|&v| lp[v] != 1) {
            cover.extend(vs.iter().copied().filter(|&v| lp[v] == 2));
            let rest: Vec<usize> = vs.iter().copied().filter(|&v| lp[v] == 1).collect();
            return Ok(self.solve(rest, limit - cover.len())?.map(|s| {
                cover.extend(s);
                cover
            }));
        }
        let v = *vs
            .iter()
            .max_by_key(|&&v| {
                (
                    self.adj[v].iter().filter(|&&u| inset[u]).count(),
                    std::cmp::Reverse(v),
                )
            })
            .expect("non-empty");
        let mut lim = limit - cover.len();
        let mut best: Option<Vec<usize>> = None;
        let rest: Vec<usize> = vs.iter().copied().filter(|&u| u != v).collect();
        if let Some(mut s) = self.solve(rest, lim - 1)? {
            s.push(v);
            lim = s.len();
            best = Some(s);
        }
        let nb: Vec<usize> = self.adj[v].iter().copied().filter(|&u| inset[u]).collect();
        if nb.len() < lim {
            let mut drop = vec![false; n];
            drop[v] = true;
            for &u in &nb {
                drop[u] = true;
            }
            let rest: Vec<usize> = vs.iter().copied().filter(|&u| !drop[u]).collect();
            if let Some(mut s) = self.solve(rest, lim - nb.len())? {
                s.extend(nb);
                best = Some(s);
            }
        }
        Ok(best.map(|b| {
            cover.extend(b);
            cover
        }))
    }

    fn reduce(&self, inset: &mut [bool], vs: &mut Vec<usize>, cover: &mut Vec<usize>) {
        loop {
            let mut changed = false;
            for &v in vs.iter() {
                if !inset[v] {
                    continue;
                }
                let mut nb = self.adj[v].iter().filter(|&&u| inset[u]);
                match (nb.next(), nb.next()) {
                    (None, _) => {
                        inset[v] = false;
                        changed = true;
                    }
                    (Some(&u), None) => {
                        inset[u] = false;
                        inset[v] = false;
                        cover.push(u);
                        changed = true;
                    }
                    _ => {}
                }
            }
            vs.retain(|&v| inset[v]);
            if !changed {
                return;
            }
        }
    }

    fn components(&self, inset: &[bool], vs: &[usize]) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.adj.len()];
        let mut out = Vec::new();
        for &s in vs {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                k += 1;
                for &w in &self.adj[u] {
                    if inset[w] && !seen[w] {
                        seen[w] = true;
                        comp.push(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }
}

/// Minimum vertex cover (vertex indices) by branch and bound with degree
/// reductions, LP bounds and LP-based crown reduction.
pub fn exact_mvc(g: &ExplicitGraph, node_budget: u64) -> Result<Vec<usize>, OracleError> {
    let mut search = MvcSearch {
        adj: &g.adj,
        nodes: 0,
        budget: node_budget,
    };
    let mut cover = search
        .solve((0..g.n()).collect(), g.n() + 1)?
        .expect("full vertex set is a cover");
    cover.sort_unstable();
    Ok(cover)
}

/// Maximum independent set as the complement of a minimum vertex cover.
pub fn exact_mis(g: &ExplicitGraph, node_budget: u64) -> Result<Vec<usize>, OracleError> {
    let cover = exact_mvc(g, node_budget)?;
    let mut inc = vec![false; g.n()];
    for v in cover {
        inc[v] = true;
    }
    Ok((0..g.n()).filter(|&v| !inc[v]).collect())
}

pub const SMALL_MCM_LIMIT: usize = 24;

/// Maximum matching by memoised enumeration over live-vertex bitmasks.
pub fn exact_mcm_small(g: &ExplicitGraph) -> Result<Vec<(usize, usize)>, OracleError> {
    let n = g.n();
    if n > SMALL_MCM_LIMIT {
        return Err(OracleError::TooLarge {
            n,
            max: SMALL_MCM_LIMIT,
        });
    }
    let nb: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |m, &u| m | 1 << u))
        .collect();
    fn best(mask: u32, nb: &[u32], memo: &mut HashMap<u32, u8>) -> u8 {
        if mask == 0 {
            return 0;
        }
        if let Some(&r) = memo.get(&mask) {
            return r;
        }
        let v = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << v);
        let mut r = best(rest, nb, memo);
        let mut cand = nb[v] & rest;
        while cand != 0 {
            let u = cand.trailing_zeros();
            cand &= cand - 1;
            r = r.max(1 + best(rest & !(1 << u), nb, memo));
        }
        memo.insert(mask, r);
        r
    }
    let mut memo = HashMap::default();
    let full: u32 = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut mask = full;
    let mut pairs = Vec::new();
    while mask != 0 {
        let target = best(mask, &nb, &mut memo);
        let v = mask.trailing_zeros() as usize;
        let rest = mask & !(1 << v);
        if best(rest, &nb, &mut memo) == target {
            mask = rest;
            continue;
        }
        let mut cand = nb[v] & rest;
        while cand != 0 {
            let u = cand.trailing_zeros() as usize;
            cand &= cand - 1;
            if 1 + best(rest & !(1 << u), &nb, &mut memo) == target {
                pairs.push((v, u));
                mask = rest & !(1 << u);
                break;
            }
        }
    }
    Ok(pairs)
}

pub const BLOSSOM_LIMIT: usize = 2000;

/// Maximum matching in a general graph by Edmonds' blossom algorithm.
pub fn exact_mcm_general(g: &ExplicitGraph) -> Result<Vec<(usize, usize)>, OracleError> {
    let n = g.n();
    if n > BLOSSOM_LIMIT {
        return Err(OracleError::TooLarge {
            n,
            max: BLOSSOM_LIMIT,
        });
    }
    const NONE: usize = usize::MAX;
    let mut mate = vec![NONE; n];
    let mut p = vec![NONE; n];
    let mut base: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    let mut blossom = vec![false; n];

    fn lca(a: usize, b: usize, mate: &[usize], base: &[usize], p: &[usize]) -> usize {
        let n = mate.len();
        let mut seen = vec![false; n];
        let mut a = a;
        loop {
            a = base[a];
            seen[a] = true;
            if mate[a] == usize::MAX {
                break;
            }
            a = p[mate[a]];
        }
        let mut b = b;
        loop {
            b = base[b];
            if seen[b] {
                return b;
            }
            b = p[mate[b]];
        }
    }

    fn mark_path(
        v: usize,
        b: usize,
        child: usize,
        mate: &[usize],
        base: &[usize],
        p: &mut [usize],
        blossom: &mut [bool],
    ) {
        let (mut v, mut child) = (v, child);
        while base[v] != b {
            blossom[base[v]] = true;
            blossom[base[mate[v]]] = true;
            p[v] = child;
            child = mate[v];
            v = p[mate[v]];
        }
    }

    for root in 0..n {
        if mate[root] != NONE {
            continue;
        }
        used.iter_mut().for_each(|u| *u = false);
        p.iter_mut().for_each(|x| *x = NONE);
        for (i, b) in base.iter_mut().enumerate() {
            *b = i;
        }
        used[root] = true;
        let mut q = VecDeque::from([root]);
        let mut end = NONE;
        'bfs: while let Some(v) = q.pop_front() {
            for &to in g.neighbors(v) {
                if base[v] == base[to] || mate[v] == to {
                    continue;
                }
                if to == root || (mate[to] != NONE && p[mate[to]] != NONE) {
                    let cur = lca(v, to, &mate, &base, &p);
                    blossom.iter_mut().for_each(|b| *b = false);
                    mark_path(v, cur, to, &mate, &base, &mut p, &mut blossom);
                    mark_path(to, cur, v, &mate, &base, &mut p, &mut blossom);
                    for i in 0..n {
                        if blossom[base[i]] {
                            base[i] = cur;
                            if !used[i] {
                                used[i] = true;
                                q.push_back(i);
                            }
                        }
                    }
                } else if p[to] == NONE {
                    p[to] = v;
                    if mate[to] == NONE {
                        end = to;
                        break 'bfs;
                    }
                    used[mate[to]] = true;
                    q.push_back(mate[to]);
                }
            }
        }
        let mut v = end;
        while v != NONE {
            let pv = p[v];
            let ppv = mate[pv];
            mate[v] = pv;
            mate[pv] = v;
            v = ppv;
        }
    }
    Ok((0..n)
        .filter(|&v| mate[v] != NONE && v < mate[v])
        .map(|v| (v, mate[v]))
        .collect())
}

/// Is there an augmenting path with at most `max_edges` edges that avoids
/// every vertex flagged in `forbidden`? `mate[v]` is the partner index.
///
/// Exhaustive DFS over simple alternating paths; exact for general graphs.
pub fn has_short_augmenting_path(
    g: &ExplicitGraph,
    mate: &[Option<usize>],
    max_edges: usize,
    forbidden: &[bool],
) -> bool {
    fn extend(
        v: usize,
        edges: usize,
        g: &ExplicitGraph,
        mate: &[Option<usize>],
        max_edges: usize,
        blocked: &mut [bool],
    ) -> bool {
        if edges + 1 > max_edges {
            return false;
        }
        for &u in g.neighbors(v) {
            if blocked[u] || mate[v] == Some(u) {
                continue;
            }
            match mate[u] {
                None => return true,
                Some(w) => {
                    if blocked[w] || edges + 3 > max_edges {
                        continue;
                    }
                    blocked[u] = true;
                    blocked[w] = true;
                    let found = extend(w, edges + 2, g, mate, max_edges, blocked);
                    blocked[u] = false;
                    blocked[w] = false;
                    if found {
                        return true;
                    }
                }
            }
        }
        false
    }
    let mut blocked = forbidden.to_vec();
    for s in 0..g.n() {
        if mate[s].is_some() || forbidden[s] {
            continue;
        }
        blocked[s] = true;
        let found = extend(s, 0, g, mate, max_edges, &mut blocked);
        blocked[s] = false;
        if found {
            return true;
        }
    }
    false
}

/// Length (edges) of a shortest augmenting path in a bipartite graph, by
/// alternating BFS from every exposed left vertex.
pub fn shortest_augmenting_path_bipartite(
    g: &ExplicitGraph,
    mate: &[Option<usize>],
) -> Result<Option<usize>, OracleError> {
    let (left, _) = g.bipartition()?;
    let mut dist = vec![usize::MAX; g.n()];
    let mut q = VecDeque::new();
    for &l in &left {
        if mate[l].is_none() {
            dist[l] = 0;
            q.push_back(l);
        }
    }
    while let Some(l) = q.pop_front() {
        for &r in g.neighbors(l) {
            if mate[l] == Some(r) || dist[r] != usize::MAX {
                continue;
            }
            dist[r] = dist[l] + 1;
            match mate[r] {
                None => return Ok(Some(dist[r])),
                Some(l2) => {
                    if dist[l2] == usize::MAX {
                        dist[l2] = dist[r] + 1;
                        q.push_back(l2);
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Minimum-weight intersecting pair by quadratic scan. Ties on the sum go to
/// the lexicographically smallest `(min id, max id)`.
pub fn min_pair_naive(objs: &[(ObjectId, Shape, f64)]) -> Option<(ObjectId, ObjectId, f64)> {
    let mut best: Option<(ObjectId, ObjectId, f64)> = None;
    for i in 0..objs.len() {
        for j in (i + 1)..objs.len() {
            let (a, sa, wa) = &objs[i];
            let (b, sb, wb) = &objs[j];
            if !sa.intersects(sb) {
                continue;
            }
            let key = (*a.min(b), *a.max(b), wa + wb);
            best = match best {
                None => Some(key),
                Some(cur)
                    if key.2 < cur.2 || (key.2 == cur.2 && (key.0, key.1) < (cur.0, cur.1)) =>
                {
                    Some(key)
                }
                keep => keep,
            };
        }
    }
    best
}
