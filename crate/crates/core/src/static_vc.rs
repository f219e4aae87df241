//! Static approximation algorithms used at every rebuild of the dynamic
//! vertex cover: a separator-based scheme for disks and fat boxes, the
//! triangle-removal pipeline for rectangles, and the trivial bipartite rule.

use thiserror::Error;

use crate::detect::range_tree::{DominanceIndex, Point, MAX_KEYS};
use crate::detect::{Backend, DetectStore};
use crate::geometry::{
    check_compatible, AaBox, GeomError, GeomObject, ObjectId, Shape, ShapeFamily, Side, MAX_DIM,
};
use crate::oracles::ExplicitGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StaticError {
    #[error("separator needs at least 2 objects, got {0}")]
    TooFewObjects(usize),
    #[error("eps must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error("expected planar rectangles")]
    NotRectangles,
    #[error("object {0} carries no side tag")]
    MissingSide(ObjectId),
    #[error("maximum depth {0} exceeds 2")]
    DepthExceeded(usize),
    #[error("rectangle {a} dominates rectangle {b}")]
    DominatingPair { a: ObjectId, b: ObjectId },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Default node budget of the exact search in [`mis_trianglefree`].
pub const DEFAULT_MIS_BUDGET: u64 = 200_000;

/// Node budget of the exact base case of [`mis_fat`].
const BASE_CASE_BUDGET: u64 = 2_000_000;

fn check_eps(eps: f64) -> Result<(), StaticError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(StaticError::BadEps(eps))
    }
}

fn common_family(objects: &[GeomObject]) -> Result<Option<ShapeFamily>, StaticError> {
    let Some(first) = objects.first() else {
        return Ok(None);
    };
    let fam = first.shape.family();
    for o in &objects[1..] {
        check_compatible(fam, o.shape.family())?;
    }
    Ok(Some(fam))
}

fn sorted_ids(mut ids: Vec<ObjectId>) -> Vec<ObjectId> {
    ids.sort_unstable();
    ids
}

// ---------------------------------------------------------------------------
// Exact maximum independent set

struct MisSearch<'a> {
    adj: &'a [Vec<usize>],
    tag: Vec<u32>,
    stamp: u32,
    nodes: u64,
    budget: u64,
}

struct Exhausted;

impl<'a> MisSearch<'a> {
    fn new(adj: &'a [Vec<usize>], budget: u64) -> Self {
        MisSearch {
            adj,
            tag: vec![0; adj.len()],
            stamp: 0,
            nodes: 0,
            budget,
        }
    }

    fn mark(&mut self, s: &[usize]) {
        self.stamp += 1;
        for &v in s {
            self.tag[v] = self.stamp;
        }
    }

    #[inline]
    fn marked(&self, v: usize) -> bool {
        self.tag[v] == self.stamp
    }

    /// `s` minus the closed neighbourhood of `u`.
    fn without_closed(&mut self, s: &[usize], u: usize) -> Vec<usize> {
        self.stamp += 1;
        self.tag[u] = self.stamp;
        for &w in &self.adj[u] {
            self.tag[w] = self.stamp;
        }
        s.iter().copied().filter(|&v| !self.marked(v)).collect()
    }

    /// `|s|` minus a greedy matching of `G[s]`.
    fn upper_bound(&mut self, s: &[usize]) -> usize {
        self.mark(s);
        let live = self.stamp;
        let mut matched = 0;
        for &v in s {
            if self.tag[v] != live {
                continue;
            }
            if let Some(&w) = self.adj[v].iter().find(|&&w| w != v && self.tag[w] == live) {
                self.tag[v] = 0;
                self.tag[w] = 0;
                matched += 1;
            }
        }
        s.len() - matched
    }

    fn components(&mut self, s: &[usize]) -> Vec<Vec<usize>> {
        self.mark(s);
        let live = self.stamp;
        self.stamp += 1;
        let done = self.stamp;
        let mut out = Vec::new();
        for &r in s {
            if self.tag[r] != live {
                continue;
            }
            self.tag[r] = done;
            let mut comp = vec![r];
            let mut k = 0;
            while k < comp.len() {
                let u = comp[k];
                k += 1;
                for &w in &self.adj[u] {
                    if self.tag[w] == live {
                        self.tag[w] = done;
                        comp.push(w);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn solve(&mut self, s: &[usize]) -> Result<Vec<usize>, Exhausted> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Exhausted);
        }
        if s.is_empty() {
            return Ok(Vec::new());
        }
        self.mark(s);
        let (mut v, mut dmin) = (s[0], usize::MAX);
        for &u in s {
            let d = self.adj[u].iter().filter(|&&w| self.marked(w)).count();
            if d < dmin {
                v = u;
                dmin = d;
            }
        }
        if dmin <= 1 {
            let rest = self.without_closed(s, v);
            let mut r = self.solve(&rest)?;
            r.push(v);
            return Ok(r);
        }
        let comps = self.components(s);
        if comps.len() > 1 {
            let mut r = Vec::new();
            for c in comps {
                r.extend(self.solve(&c)?);
            }
            return Ok(r);
        }
        self.mark(s);
        let mut cands = vec![v];
        cands.extend(self.adj[v].iter().copied().filter(|&w| self.marked(w)));
        let mut best: Vec<usize> = Vec::new();
        for u in cands {
            let rest = self.without_closed(s, u);
            if 1 + self.upper_bound(&rest) <= best.len() {
                continue;
            }
            let mut r = self.solve(&rest)?;
            r.push(u);
            if r.len() > best.len() {
                best = r;
            }
        }
        Ok(best)
    }
}

/// Exact MIS of the subgraph induced by `verts`, or `None` once `budget`
/// search nodes are spent.
fn exact_mis_within(adj: &[Vec<usize>], verts: &[usize], budget: u64) -> Option<Vec<usize>> {
    let mut search = MisSearch::new(adj, budget);
    search.solve(verts).ok()
}

/// Repeatedly takes a minimum-degree vertex.
fn greedy_mis(adj: &[Vec<usize>], verts: &[usize]) -> Vec<usize> {
    let mut alive = vec![false; adj.len()];
    for &v in verts {
        alive[v] = true;
    }
    let mut deg: Vec<usize> = (0..adj.len())
        .map(|v| adj[v].iter().filter(|&&w| alive[w]).count())
        .collect();
    let mut out = Vec::new();
    let mut left = verts.len();
    while left > 0 {
        let v = verts
            .iter()
            .copied()
            .filter(|&v| alive[v])
            .min_by_key(|&v| deg[v])
            .expect("alive vertex");
        out.push(v);
        let mut gone = vec![v];
        gone.extend(adj[v].iter().copied().filter(|&w| alive[w]));
        for &g in &gone {
            alive[g] = false;
            left -= 1;
        }
        for &g in &gone {
            for &w in &adj[g] {
                deg[w] = deg[w].saturating_sub(1);
            }
        }
    }
    out
}

fn objects_mis_exact(objects: &[GeomObject]) -> Vec<ObjectId> {
    let g = ExplicitGraph::from_objects(objects);
    let adj: Vec<Vec<usize>> = (0..g.n()).map(|i| g.neighbors(i).to_vec()).collect();
    let all: Vec<usize> = (0..g.n()).collect();
    let set =
        exact_mis_within(&adj, &all, BASE_CASE_BUDGET).unwrap_or_else(|| greedy_mis(&adj, &all));
    set.into_iter().map(|i| g.id(i)).collect()
}

// ---------------------------------------------------------------------------
// Separator

/// Balanced separator of a fat object set by the boundary of a hypercube.
#[derive(Debug, Clone)]
pub struct SeparatorResult {
    /// The separating cube `B_t`.
    pub cube: AaBox,
    /// Objects in the open interior of the cube.
    pub inside: Vec<ObjectId>,
    /// Objects disjoint from the closed cube.
    pub outside: Vec<ObjectId>,
    /// Objects meeting the cube's boundary.
    pub crossing: Vec<ObjectId>,
    /// Both `inside` and `outside` hold at most `(1 - beta) n` objects.
    pub beta: f64,
    /// Side of the smallest cube `B_0` holding enough reference points.
    pub r: f64,
    /// Scale parameter: `B_t` has side `(1 + t) r`.
    pub t: f64,
    pub h: usize,
}

/// Smallest `h` with `h^d >= n`.
fn root_ceil(n: usize, d: usize) -> usize {
    let mut h = (n as f64).powf(1.0 / d as f64).floor().max(1.0) as usize;
    while h.pow(d as u32) < n {
        h += 1;
    }
    while h > 1 && (h - 1).pow(d as u32) >= n {
        h -= 1;
    }
    h
}

/// Lower corner of some cube of side `s` holding at least `m` of `pts`.
fn find_cube(pts: &[[f64; MAX_DIM]], d: usize, s: f64, m: usize) -> Option<[f64; MAX_DIM]> {
    let mut corner = [0.0; MAX_DIM];
    let mut buf = pts.to_vec();
    descend(&mut buf, d, 0, s, m, &mut corner).then_some(corner)
}

/// Fixes axes `k..` in turn: windows of width `s` over the sorted
/// coordinates, descending only into windows that still hold `m` points.
fn descend(
    pts: &mut [[f64; MAX_DIM]],
    d: usize,
    k: usize,
    s: f64,
    m: usize,
    corner: &mut [f64; MAX_DIM],
) -> bool {
    if k == d {
        return pts.len() >= m;
    }
    pts.sort_by(|a, b| a[k].total_cmp(&b[k]));
    let mut j = 0;
    for i in 0..pts.len() {
        if pts.len() - i < m {
            break;
        }
        if i > 0 && pts[i][k] == pts[i - 1][k] {
            continue;
        }
        let lo = pts[i][k];
        j = j.max(i);
        while j < pts.len() && pts[j][k] <= lo + s {
            j += 1;
        }
        if j - i < m {
            continue;
        }
        let mut window = pts[i..j].to_vec();
        if descend(&mut window, d, k + 1, s, m, corner) {
            corner[k] = lo;
            return true;
        }
    }
    false
}

fn classify(objects: &[GeomObject], cube: &AaBox) -> (Vec<ObjectId>, Vec<ObjectId>, Vec<ObjectId>) {
    let (mut inside, mut outside, mut crossing) = (Vec::new(), Vec::new(), Vec::new());
    for o in objects {
        if o.shape.inside_open_box(cube) {
            inside.push(o.id);
        } else if !o.shape.meets_box(cube) {
            outside.push(o.id);
        } else {
            crossing.push(o.id);
        }
    }
    (inside, outside, crossing)
}

/// Cube boundary splitting the objects into a balanced inside and outside.
///
/// `B_0` is a cube holding at least `n / (2^d + 1)` reference points whose
/// side `r` is minimal up to a factor `1 - 1/(4h)`; `B_t` is its concentric
/// scaling by `1 + t`, `t` chosen to minimise crossings by objects of
/// diameter at most `r / h`.
pub fn separator(objects: &[GeomObject]) -> Result<SeparatorResult, StaticError> {
    let n = objects.len();
    if n < 2 {
        return Err(StaticError::TooFewObjects(n));
    }
    common_family(objects)?;
    let d = objects[0].shape.dim();
    let refs: Vec<[f64; MAX_DIM]> = objects.iter().map(|o| o.shape.reference_point()).collect();
    let m = n.div_ceil((1 << d) + 1);
    let h = root_ceil(n, d).max(2);

    let mut hi = (0..d)
        .map(|k| {
            let (lo, hi) = refs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| {
                    (a.min(p[k]), b.max(p[k]))
                });
            hi - lo
        })
        .fold(0.0, f64::max);
    let mut corner = find_cube(&refs, d, hi, m).expect("the bounding cube holds every point");
    if let Some(c) = find_cube(&refs, d, 0.0, m) {
        hi = 0.0;
        corner = c;
    } else {
        let mut lo = 0.0;
        while hi - lo > hi / (4 * h) as f64 {
            let mid = 0.5 * (lo + hi);
            match find_cube(&refs, d, mid, m) {
                Some(c) => {
                    hi = mid;
                    corner = c;
                }
                None => lo = mid,
            }
        }
    }
    let r = hi;
    let center: Vec<f64> = (0..d).map(|k| corner[k] + r / 2.0).collect();

    let small: Vec<&GeomObject> = objects
        .iter()
        .filter(|o| o.shape.diameter() <= r / h as f64)
        .collect();
    let mut best = (usize::MAX, 1.0 / h as f64);
    for j in 1..h {
        let t = j as f64 / h as f64;
        let cube = AaBox::cube(&center, (1.0 + t) * r)?;
        let crossing = small
            .iter()
            .filter(|o| o.shape.meets_box(&cube) && !o.shape.inside_open_box(&cube))
            .count();
        if crossing < best.0 {
            best = (crossing, t);
        }
    }
    let t = best.1;
    let cube = AaBox::cube(&center, (1.0 + t) * r)?;
    let (inside, outside, crossing) = classify(objects, &cube);

    let beta = 1.0 / ((1 << d) + 1) as f64;
    Ok(SeparatorResult {
        cube,
        inside,
        outside,
        crossing,
        beta,
        r,
        t,
        h,
    })
}

// ---------------------------------------------------------------------------
// Disks and fat boxes

/// Independent set of fat objects with additive error `O(n / sqrt(b))`,
/// `b = ceil(1 / eps^2)`: separate, drop the crossing objects, recurse on
/// both sides and solve sets of at most `b` objects exactly.
pub fn mis_fat(objects: &[GeomObject], eps: f64) -> Result<Vec<ObjectId>, StaticError> {
    check_eps(eps)?;
    common_family(objects)?;
    let b = (1.0 / (eps * eps)).ceil() as usize;
    let mut out = Vec::new();
    mis_fat_rec(objects.to_vec(), b.max(1), &mut out)?;
    Ok(sorted_ids(maximalize(objects, out)?))
}

/// Adds every object that meets no chosen object, in input order.
fn maximalize(objects: &[GeomObject], chosen: Vec<ObjectId>) -> Result<Vec<ObjectId>, StaticError> {
    let Some(fam) = common_family(objects)? else {
        return Ok(chosen);
    };
    let picked: crate::HashSet<ObjectId> = chosen.iter().copied().collect();
    let mut store = DetectStore::from_shapes(
        Backend::preferred(fam),
        fam,
        objects
            .iter()
            .filter(|o| picked.contains(&o.id))
            .map(|o| (o.id, o.shape)),
    )
    .expect("distinct ids of one family");
    let mut out = chosen;
    for o in objects {
        if !picked.contains(&o.id) && store.find(&o.shape, &mut |_| true).is_none() {
            store.insert(o.id, &o.shape).expect("fresh id");
            out.push(o.id);
        }
    }
    Ok(out)
}

fn mis_fat_rec(
    objects: Vec<GeomObject>,
    b: usize,
    out: &mut Vec<ObjectId>,
) -> Result<(), StaticError> {
    let n = objects.len();
    if n <= b.max(1) {
        out.extend(objects_mis_exact(&objects));
        return Ok(());
    }
    let sep = separator(&objects)?;
    if sep.inside.len() == n || sep.outside.len() == n {
        out.extend(objects_mis_exact(&objects));
        return Ok(());
    }
    let mut side = vec![0u8; n];
    let pos: crate::HashMap<ObjectId, usize> =
        objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
    for &id in &sep.inside {
        side[pos[&id]] = 1;
    }
    for &id in &sep.outside {
        side[pos[&id]] = 2;
    }
    let (mut a, mut z) = (Vec::new(), Vec::new());
    for (o, s) in objects.into_iter().zip(side) {
        match s {
            1 => a.push(o),
            2 => z.push(o),
            _ => {}
        }
    }
    mis_fat_rec(a, b, out)?;
    mis_fat_rec(z, b, out)
}

/// Vertex cover of fat objects: the complement of [`mis_fat`].
pub fn static_vc_fat(objects: &[GeomObject], eps: f64) -> Result<Vec<ObjectId>, StaticError> {
    let mis = mis_fat(objects, eps)?;
    let keep: crate::HashSet<ObjectId> = mis.into_iter().collect();
    Ok(sorted_ids(
        objects
            .iter()
            .map(|o| o.id)
            .filter(|id| !keep.contains(id))
            .collect(),
    ))
}

// ---------------------------------------------------------------------------
// Rectangles

fn rect_of(o: &GeomObject) -> Result<&AaBox, StaticError> {
    match &o.shape {
        Shape::Box(b) if b.dim() == 2 => Ok(b),
        _ => Err(StaticError::NotRectangles),
    }
}

fn rects_of(objects: &[GeomObject]) -> Result<Vec<AaBox>, StaticError> {
    objects.iter().map(|o| rect_of(o).copied()).collect()
}

/// Range-add / range-max segment tree reporting an argmax position.
struct MaxTree {
    size: usize,
    max: Vec<i32>,
    arg: Vec<usize>,
    add: Vec<i32>,
}

impl MaxTree {
    fn new(n: usize) -> Self {
        let size = n.max(1).next_power_of_two();
        let mut arg = vec![0; 2 * size];
        for i in 0..size {
            arg[size + i] = i;
        }
        for i in (1..size).rev() {
            arg[i] = arg[2 * i];
        }
        MaxTree {
            size,
            max: vec![0; 2 * size],
            arg,
            add: vec![0; 2 * size],
        }
    }

    fn update(&mut self, a: usize, b: usize, v: i32) {
        self.update_at(1, 0, self.size - 1, a, b, v);
    }

    fn update_at(&mut self, node: usize, l: usize, r: usize, a: usize, b: usize, v: i32) {
        if b < l || r < a {
            return;
        }
        if a <= l && r <= b {
            self.max[node] += v;
            self.add[node] += v;
            return;
        }
        let mid = (l + r) / 2;
        self.update_at(2 * node, l, mid, a, b, v);
        self.update_at(2 * node + 1, mid + 1, r, a, b, v);
        let (x, y) = (2 * node, 2 * node + 1);
        let pick = if self.max[x] >= self.max[y] { x } else { y };
        self.max[node] = self.max[pick] + self.add[node];
        self.arg[node] = self.arg[pick];
    }

    fn top(&self) -> (i32, usize) {
        (self.max[1], self.arg[1])
    }
}

/// Vertex-disjoint triangles removed so that the rest has depth at most 2.
#[derive(Debug, Clone, Default)]
pub struct TriangleRemoval {
    pub rest: Vec<ObjectId>,
    pub triangles: Vec<[ObjectId; 3]>,
}

/// Plane sweep over x maintaining the depth of the active y-intervals.
/// With `remove` set, every depth-3 point reached triggers removal of three
/// active rectangles through it; otherwise the maximum depth is reported.
fn sweep(rects: &[AaBox], remove: bool) -> (usize, Vec<[usize; 3]>, Vec<bool>) {
    let n = rects.len();
    let mut ys: Vec<f64> = rects.iter().flat_map(|r| [r.lo()[1], r.hi()[1]]).collect();
    ys.sort_by(f64::total_cmp);
    ys.dedup();
    let span: Vec<(usize, usize)> = rects
        .iter()
        .map(|r| {
            (
                ys.partition_point(|&y| y < r.lo()[1]),
                ys.partition_point(|&y| y < r.hi()[1]),
            )
        })
        .collect();
    let mut events: Vec<(f64, u8, usize)> = Vec::with_capacity(2 * n);
    for (i, r) in rects.iter().enumerate() {
        events.push((r.lo()[0], 0, i));
        events.push((r.hi()[0], 1, i));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut tree = MaxTree::new(ys.len());
    let mut active: Vec<usize> = Vec::new();
    let mut gone = vec![false; n];
    let mut triangles = Vec::new();
    let mut depth = 0usize;
    for (_, kind, i) in events {
        if gone[i] {
            continue;
        }
        if kind == 1 {
            tree.update(span[i].0, span[i].1, -1);
            let at = active
                .iter()
                .position(|&a| a == i)
                .expect("active rectangle");
            active.swap_remove(at);
            continue;
        }
        tree.update(span[i].0, span[i].1, 1);
        active.push(i);
        let (top, at) = tree.top();
        depth = depth.max(top as usize);
        if !remove || top < 3 {
            continue;
        }
        let mut tri = vec![i];
        for &a in &active {
            if tri.len() == 3 {
                break;
            }
            if a != i && span[a].0 <= at && at <= span[a].1 {
                tri.push(a);
            }
        }
        for &a in &tri {
            tree.update(span[a].0, span[a].1, -1);
            gone[a] = true;
        }
        active.retain(|a| !gone[*a]);
        triangles.push([tri[0], tri[1], tri[2]]);
        debug_assert!(tree.top().0 <= 2);
    }
    (depth, triangles, gone)
}

/// Maximum number of rectangles sharing a point.
pub fn max_depth(objects: &[GeomObject]) -> Result<usize, StaticError> {
    let rects = rects_of(objects)?;
    Ok(sweep(&rects, false).0)
}

/// Removes vertex-disjoint triples of pairwise-intersecting rectangles until
/// no point is covered three times.
pub fn remove_triangles(objects: &[GeomObject]) -> Result<TriangleRemoval, StaticError> {
    let rects = rects_of(objects)?;
    let (_, tris, gone) = sweep(&rects, true);
    let rest = objects
        .iter()
        .zip(&gone)
        .filter(|(_, g)| !**g)
        .map(|(o, _)| o.id)
        .collect();
    let mut triangles: Vec<[ObjectId; 3]> = tris
        .into_iter()
        .map(|t| {
            let mut ids = t.map(|i| objects[i].id);
            ids.sort_unstable();
            ids
        })
        .collect();
    triangles.sort_unstable();
    Ok(TriangleRemoval {
        rest: sorted_ids(rest),
        triangles,
    })
}

/// Split of a depth-2 rectangle set into the non-dominated rectangles and the rest.
#[derive(Debug, Clone, Default)]
pub struct DominationSplit {
    pub r1: Vec<ObjectId>,
    pub r2: Vec<ObjectId>,
}

fn prev(t: &mut Point, dims: usize) {
    for x in t.iter_mut().take(dims) {
        *x = x.next_down();
    }
}

fn key(vals: [f64; 4]) -> Point {
    let mut p = [0.0; MAX_KEYS];
    p[..4].copy_from_slice(&vals);
    p
}

/// Points of the rectangles as potential dominators; a dominates b iff
/// `dominator_key(a) < dominated_key(b)` on all four coordinates.
fn dominator_key(a: &AaBox) -> Point {
    key([a.lo()[1], -a.hi()[1], -a.lo()[0], a.hi()[0]])
}

fn dominated_key(b: &AaBox) -> Point {
    let mut t = key([b.lo()[1], -b.hi()[1], -b.lo()[0], b.hi()[0]]);
    prev(&mut t, 4);
    t
}

/// For every rectangle, some rectangle dominating it.
fn dominators(objects: &[GeomObject], rects: &[AaBox]) -> Vec<Option<ObjectId>> {
    let index = DominanceIndex::from_points(
        4,
        objects
            .iter()
            .zip(rects)
            .map(|(o, r)| (o.id, dominator_key(r)))
            .collect(),
    );
    let (mut visits, mut seen) = (0, 0);
    rects
        .iter()
        .map(|r| index.find(&dominated_key(r), &mut |_| true, &mut visits, &mut seen))
        .collect()
}

/// `R1` holds the rectangles no other rectangle dominates.
pub fn split_domination(objects: &[GeomObject]) -> Result<DominationSplit, StaticError> {
    let rects = rects_of(objects)?;
    let depth = sweep(&rects, false).0;
    if depth > 2 {
        return Err(StaticError::DepthExceeded(depth));
    }
    let mut split = DominationSplit::default();
    for (o, dom) in objects.iter().zip(dominators(objects, &rects)) {
        match dom {
            None => split.r1.push(o.id),
            Some(_) => split.r2.push(o.id),
        }
    }
    split.r1.sort_unstable();
    split.r2.sort_unstable();
    Ok(split)
}

/// Drops every rectangle that contains another one; among identical
/// rectangles the smallest id survives.
fn drop_containers(objects: &[GeomObject], rects: &[AaBox]) -> Vec<usize> {
    let key_of = |b: &AaBox| key([-b.lo()[0], -b.lo()[1], b.hi()[0], b.hi()[1]]);
    let pos: crate::HashMap<ObjectId, usize> =
        objects.iter().enumerate().map(|(i, o)| (o.id, i)).collect();
    let index = DominanceIndex::from_points(
        4,
        objects
            .iter()
            .zip(rects)
            .map(|(o, r)| (o.id, key_of(r)))
            .collect(),
    );
    let (mut visits, mut seen) = (0, 0);
    (0..objects.len())
        .filter(|&i| {
            let me = objects[i].id;
            let found = index.find(
                &key_of(&rects[i]),
                &mut |id| id != me && (rects[pos[&id]] != rects[i] || id < me),
                &mut visits,
                &mut seen,
            );
            found.is_none()
        })
        .collect()
}

/// Splits a connected vertex set by deleting a thinnest BFS layer, solving
/// pieces of at most `b` vertices exactly.
fn layered_mis(adj: &[Vec<usize>], verts: &[usize], b: usize, out: &mut Vec<usize>) {
    let mut search = MisSearch::new(adj, 0);
    for comp in search.components(verts) {
        if comp.len() <= b {
            out.extend(
                exact_mis_within(adj, &comp, BASE_CASE_BUDGET)
                    .unwrap_or_else(|| greedy_mis(adj, &comp)),
            );
            continue;
        }
        let mut level: crate::HashMap<usize, usize> = crate::HashMap::default();
        let inset: crate::HashSet<usize> = comp.iter().copied().collect();
        let mut layers: Vec<Vec<usize>> = vec![vec![comp[0]]];
        level.insert(comp[0], 0);
        while let Some(last) = layers.last() {
            let mut next = Vec::new();
            let depth = layers.len();
            for &u in last {
                for &w in &adj[u] {
                    if inset.contains(&w) && !level.contains_key(&w) {
                        level.insert(w, depth);
                        next.push(w);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layers.push(next);
        }
        let cut = if layers.len() == 1 {
            0
        } else {
            (1..layers.len())
                .min_by_key(|&i| (layers[i].len(), i))
                .expect("at least two layers")
        };
        let rest: Vec<usize> = comp.iter().copied().filter(|v| level[v] != cut).collect();
        layered_mis(adj, &rest, b, out);
    }
}

/// Independent set of a depth-2 rectangle family without dominating pairs.
///
/// Containers are removed first. Each connected component is then solved
/// exactly by branching on a minimum-degree vertex; when the search spends
/// `budget` nodes the component is split along thin BFS layers instead.
pub fn mis_trianglefree(
    objects: &[GeomObject],
    eps: f64,
    budget: u64,
) -> Result<Vec<ObjectId>, StaticError> {
    check_eps(eps)?;
    let rects = rects_of(objects)?;
    let depth = sweep(&rects, false).0;
    if depth > 2 {
        return Err(StaticError::DepthExceeded(depth));
    }
    for (o, dom) in objects.iter().zip(dominators(objects, &rects)) {
        if let Some(a) = dom {
            return Err(StaticError::DominatingPair { a, b: o.id });
        }
    }
    let keep = drop_containers(objects, &rects);
    let kept: Vec<GeomObject> = keep.iter().map(|&i| objects[i]).collect();
    let g = ExplicitGraph::from_objects(&kept);
    let adj: Vec<Vec<usize>> = (0..g.n()).map(|i| g.neighbors(i).to_vec()).collect();
    let all: Vec<usize> = (0..g.n()).collect();
    let b = (1.0 / (eps * eps)).ceil() as usize;
    let mut out = Vec::new();
    let mut comps = MisSearch::new(&adj, 0);
    for comp in comps.components(&all) {
        match exact_mis_within(&adj, &comp, budget) {
            Some(s) => out.extend(s),
            None => layered_mis(&adj, &comp, b, &mut out),
        }
    }
    Ok(sorted_ids(out.into_iter().map(|i| g.id(i)).collect()))
}

/// Vertex cover of rectangles within `3/2 + O(eps)` of optimal when
/// `n <= (2 + O(eps)) OPT`.
///
/// Triangles are removed and taken whole; the rest is split by domination
/// into `R1`, `R2`, each solved as a triangle-free instance, and the smaller
/// of `S1 ∪ R2` and `S2 ∪ R1` is returned together with the triangles.
pub fn static_vc_rect(objects: &[GeomObject], eps: f64) -> Result<Vec<ObjectId>, StaticError> {
    check_eps(eps)?;
    rects_of(objects)?;
    let removal = remove_triangles(objects)?;
    let by_id: crate::HashMap<ObjectId, &GeomObject> = objects.iter().map(|o| (o.id, o)).collect();
    let pick = |ids: &[ObjectId]| -> Vec<GeomObject> { ids.iter().map(|id| *by_id[id]).collect() };
    let rest = pick(&removal.rest);
    let split = split_domination(&rest)?;
    let cover_of = |ids: &[ObjectId]| -> Result<Vec<ObjectId>, StaticError> {
        let objs = pick(ids);
        let mis: crate::HashSet<ObjectId> = mis_trianglefree(&objs, eps, DEFAULT_MIS_BUDGET)?
            .into_iter()
            .collect();
        Ok(ids.iter().copied().filter(|id| !mis.contains(id)).collect())
    };
    let s1 = cover_of(&split.r1)?;
    let s2 = cover_of(&split.r2)?;
    let a = s1.len() + split.r2.len();
    let b = s2.len() + split.r1.len();
    assert!(2 * a.min(b) <= s1.len() + s2.len() + split.r1.len() + split.r2.len());
    let mut cover: Vec<ObjectId> = if a <= b {
        s1.into_iter().chain(split.r2.iter().copied()).collect()
    } else {
        s2.into_iter().chain(split.r1.iter().copied()).collect()
    };
    cover.extend(removal.triangles.iter().flatten());
    Ok(sorted_ids(cover))
}

// ---------------------------------------------------------------------------
// Bipartite

/// The smaller side of a two-sided family; ties return the left side.
pub fn static_vc_bipartite(objects: &[GeomObject]) -> Result<Vec<ObjectId>, StaticError> {
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for o in objects {
        match o.side {
            Side::Left => left.push(o.id),
            Side::Right => right.push(o.id),
            Side::None => return Err(StaticError::MissingSide(o.id)),
        }
    }
    Ok(sorted_ids(if left.len() <= right.len() {
        left
    } else {
        right
    }))
}

/// Static cover algorithm used at rebuild time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StaticSolver {
    Fat { eps: f64 },
    Rect { eps: f64 },
    Bipartite,
}

impl StaticSolver {
    pub fn cover(&self, objects: &[GeomObject]) -> Result<Vec<ObjectId>, StaticError> {
        match *self {
            StaticSolver::Fat { eps } => static_vc_fat(objects, eps),
            StaticSolver::Rect { eps } => static_vc_rect(objects, eps),
            StaticSolver::Bipartite => static_vc_bipartite(objects),
        }
    }
}
