//! Dynamic orthogonal dominance index and the box store built on it.
//!
//! A point set in up to [`MAX_KEYS`] coordinates answers "report some live
//! point `p` with `p[k] <= t[k]` for every axis `k`". Static blocks are
//! multi-level range trees (one implicit segment tree per axis, secondary
//! structures per node, small buckets scanned directly). The dynamic index
//! keeps a binary counter of static blocks; deletes deactivate a point in its
//! block and a global rebuild runs once dead points outnumber live ones.
//!
//! Two closed boxes `a`, `q` intersect iff `a.lo <= q.hi` and `-a.hi <= -q.lo`
//! on every axis, so box intersection detection is a `2d`-dimensional
//! dominance query.

use crate::HashMap;
use std::cell::Cell;
use std::cmp::Ordering;

use super::{DetectError, ProbeStats};
use crate::geometry::{ObjectId, Shape, MAX_DIM};

pub const MAX_KEYS: usize = 2 * MAX_DIM;
pub type Point = [f64; MAX_KEYS];

const BUCKET: usize = 12;

/// "Next alive position at or after i" with path compression.
struct NextAlive {
    next: Vec<Cell<u32>>,
}

impl NextAlive {
    fn new(n: usize) -> Self {
        NextAlive {
            next: (0..=n as u32).map(Cell::new).collect(),
        }
    }

    fn find(&self, i: u32) -> u32 {
        let mut r = i;
        while self.next[r as usize].get() != r {
            r = self.next[r as usize].get();
        }
        let mut c = i;
        while c != r {
            let nx = self.next[c as usize].get();
            self.next[c as usize].set(r);
            c = nx;
        }
        r
    }

    fn kill(&mut self, i: u32) {
        self.next[i as usize].set(i + 1);
    }
}

enum Body {
    Last(NextAlive),
    Inner(Vec<Option<Box<Level>>>),
}

struct Level {
    axis: usize,
    keys: Vec<f64>,
    slots: Vec<u32>,
    body: Body,
}

struct Ctx<'a> {
    dims: usize,
    pts: &'a [Point],
    ids: &'a [ObjectId],
    alive: &'a [bool],
}

fn key_order(a: (f64, u32), b: (f64, u32)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl Level {
    fn build(axis: usize, dims: usize, mut slots: Vec<u32>, pts: &[Point]) -> Level {
        slots.sort_unstable_by(|&a, &b| {
            key_order((pts[a as usize][axis], a), (pts[b as usize][axis], b))
        });
        let keys: Vec<f64> = slots.iter().map(|&s| pts[s as usize][axis]).collect();
        let n = slots.len();
        let body = if axis + 1 == dims {
            Body::Last(NextAlive::new(n))
        } else {
            let mut nodes: Vec<Option<Box<Level>>> = Vec::new();
            nodes.resize_with(4 * n.max(1), || None);
            Self::build_node(&mut nodes, 1, 0, n, axis, dims, &slots, pts);
            Body::Inner(nodes)
        };
        Level {
            axis,
            keys,
            slots,
            body,
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn build_node(
        nodes: &mut [Option<Box<Level>>],
        id: usize,
        l: usize,
        r: usize,
        axis: usize,
        dims: usize,
        slots: &[u32],
        pts: &[Point],
    ) {
        if r - l <= BUCKET {
            return;
        }
        nodes[id] = Some(Box::new(Level::build(
            axis + 1,
            dims,
            slots[l..r].to_vec(),
            pts,
        )));
        let mid = (l + r) / 2;
        Self::build_node(nodes, 2 * id, l, mid, axis, dims, slots, pts);
        Self::build_node(nodes, 2 * id + 1, mid, r, axis, dims, slots, pts);
    }

    #[cfg(test)]
    fn position(&self, slot: u32, pts: &[Point]) -> usize {
        let key = pts[slot as usize][self.axis];
        let pos = self
            .slots
            .iter()
            .zip(&self.keys)
            .collect::<Vec<_>>()
            .partition_point(|(&s, &k)| key_order((k, s), (key, slot)) == Ordering::Less);
        debug_assert_eq!(self.slots[pos], slot);
        pos
    }

    fn deactivate(&mut self, slot: u32, pts: &[Point]) {
        let pos = self.position_fast(slot, pts);
        let n = self.slots.len();
        match &mut self.body {
            Body::Last(na) => na.kill(pos as u32),
            Body::Inner(nodes) => {
                let (mut id, mut l, mut r) = (1usize, 0usize, n);
                while r - l > BUCKET {
                    nodes[id]
                        .as_mut()
                        .expect("secondary exists above bucket size")
                        .deactivate(slot, pts);
                    let mid = (l + r) / 2;
                    if pos < mid {
                        id *= 2;
                        r = mid;
                    } else {
                        id = 2 * id + 1;
                        l = mid;
                    }
                }
            }
        }
    }

    fn position_fast(&self, slot: u32, pts: &[Point]) -> usize {
        let key = pts[slot as usize][self.axis];
        let (mut lo, mut hi) = (0usize, self.slots.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            if key_order((self.keys[mid], self.slots[mid]), (key, slot)) == Ordering::Less {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        debug_assert_eq!(self.slots[lo], slot);
        lo
    }

    fn find(
        &self,
        t: &Point,
        ctx: &Ctx<'_>,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        visits: &mut u64,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        *visits += 1;
        let k = self.keys.partition_point(|&x| x <= t[self.axis]);
        if k == 0 {
            return None;
        }
        match &self.body {
            Body::Last(na) => {
                let mut pos = na.find(0) as usize;
                while pos < k {
                    let slot = self.slots[pos] as usize;
                    *seen += 1;
                    if accept(ctx.ids[slot]) {
                        return Some(ctx.ids[slot]);
                    }
                    pos = na.find(pos as u32 + 1) as usize;
                }
                None
            }
            Body::Inner(nodes) => self.find_node(
                nodes,
                1,
                0,
                self.slots.len(),
                k,
                t,
                ctx,
                accept,
                visits,
                seen,
            ),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn find_node(
        &self,
        nodes: &[Option<Box<Level>>],
        id: usize,
        l: usize,
        r: usize,
        k: usize,
        t: &Point,
        ctx: &Ctx<'_>,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        visits: &mut u64,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        if l >= k {
            return None;
        }
        if r - l <= BUCKET {
            *visits += 1;
            return self.scan(l, r.min(k), t, ctx, accept, seen);
        }
        if r <= k {
            return nodes[id]
                .as_ref()
                .expect("secondary exists")
                .find(t, ctx, accept, visits, seen);
        }
        let mid = (l + r) / 2;
        self.find_node(nodes, 2 * id, l, mid, k, t, ctx, accept, visits, seen)
            .or_else(|| self.find_node(nodes, 2 * id + 1, mid, r, k, t, ctx, accept, visits, seen))
    }

    fn scan(
        &self,
        from: usize,
        to: usize,
        t: &Point,
        ctx: &Ctx<'_>,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        for &slot in &self.slots[from..to] {
            let slot = slot as usize;
            if !ctx.alive[slot] {
                continue;
            }
            *seen += 1;
            let p = &ctx.pts[slot];
            if (self.axis + 1..ctx.dims).all(|a| p[a] <= t[a]) && accept(ctx.ids[slot]) {
                return Some(ctx.ids[slot]);
            }
        }
        None
    }
}

struct Block {
    ids: Vec<ObjectId>,
    pts: Vec<Point>,
    alive: Vec<bool>,
    live: usize,
    root: Level,
}

impl Block {
    fn build(dims: usize, items: Vec<(ObjectId, Point)>) -> Block {
        let (ids, pts): (Vec<_>, Vec<_>) = items.into_iter().unzip();
        let n = ids.len();
        let root = Level::build(0, dims, (0..n as u32).collect(), &pts);
        Block {
            ids,
            pts,
            alive: vec![true; n],
            live: n,
            root,
        }
    }

    fn alive_items(&self) -> impl Iterator<Item = (ObjectId, Point)> + '_ {
        (0..self.ids.len())
            .filter(|&i| self.alive[i])
            .map(|i| (self.ids[i], self.pts[i]))
    }
}

/// Dynamic dominance index over points with `dims` coordinates.
pub struct DominanceIndex {
    dims: usize,
    blocks: Vec<Option<Block>>,
    loc: HashMap<ObjectId, (u32, u32)>,
    dead: usize,
}

fn ceil_log2(n: usize) -> usize {
    n.max(1).next_power_of_two().trailing_zeros() as usize
}

impl DominanceIndex {
    pub fn new(dims: usize) -> Self {
        assert!(
            (1..=MAX_KEYS).contains(&dims),
            "unsupported key count {dims}"
        );
        DominanceIndex {
            dims,
            blocks: Vec::new(),
            loc: HashMap::default(),
            dead: 0,
        }
    }

    pub fn from_points(dims: usize, items: Vec<(ObjectId, Point)>) -> Self {
        let mut idx = Self::new(dims);
        idx.place(items);
        idx
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.loc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loc.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.loc.contains_key(&id)
    }

    fn place(&mut self, items: Vec<(ObjectId, Point)>) {
        if items.is_empty() {
            return;
        }
        let at = ceil_log2(items.len());
        while self.blocks.len() <= at {
            self.blocks.push(None);
        }
        debug_assert!(self.blocks[at].is_none());
        let block = Block::build(self.dims, items);
        for (slot, &id) in block.ids.iter().enumerate() {
            self.loc.insert(id, (at as u32, slot as u32));
        }
        self.blocks[at] = Some(block);
    }

    /// Insert a point; ids must be unique.
    pub fn insert(&mut self, id: ObjectId, p: Point) {
        debug_assert!(!self.loc.contains_key(&id));
        let mut items = vec![(id, p)];
        let mut i = 0;
        while i < self.blocks.len() {
            match self.blocks[i].take() {
                Some(b) => {
                    self.dead -= b.ids.len() - b.live;
                    items.extend(b.alive_items());
                    i += 1;
                }
                None => break,
            }
        }
        let at = ceil_log2(items.len()).max(i);
        while self.blocks.len() <= at {
            self.blocks.push(None);
        }
        if self.blocks[at].is_some() {
            self.rebuild_with(items);
            return;
        }
        let block = Block::build(self.dims, items);
        for (slot, &oid) in block.ids.iter().enumerate() {
            self.loc.insert(oid, (at as u32, slot as u32));
        }
        self.blocks[at] = Some(block);
    }

    fn rebuild_with(&mut self, mut items: Vec<(ObjectId, Point)>) {
        for b in self.blocks.drain(..).flatten() {
            items.extend(b.alive_items());
        }
        self.dead = 0;
        self.loc.clear();
        self.place(items);
    }

    pub fn delete(&mut self, id: ObjectId) -> bool {
        let Some((b, s)) = self.loc.remove(&id) else {
            return false;
        };
        let block = self.blocks[b as usize]
            .as_mut()
            .expect("located block exists");
        block.alive[s as usize] = false;
        block.root.deactivate(s, &block.pts);
        block.live -= 1;
        self.dead += 1;
        if block.live == 0 {
            self.dead -= block.ids.len();
            self.blocks[b as usize] = None;
        }
        if self.dead > self.loc.len() + 32 {
            self.rebuild_with(Vec::new());
        }
        true
    }

    /// Some live point dominated by `t` and accepted by the filter.
    pub fn find(
        &self,
        t: &Point,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        visits: &mut u64,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        for block in self.blocks.iter().flatten() {
            let ctx = Ctx {
                dims: self.dims,
                pts: &block.pts,
                ids: &block.ids,
                alive: &block.alive,
            };
            if let Some(id) = block.root.find(t, &ctx, accept, visits, seen) {
                return Some(id);
            }
        }
        None
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.loc.keys().copied().collect()
    }
}

fn box_point(shape: &Shape) -> Point {
    let b = shape.as_box().expect("box store holds boxes only");
    let d = b.dim();
    let mut p = [0.0; MAX_KEYS];
    for k in 0..d {
        p[k] = b.lo()[k];
        p[d + k] = -b.hi()[k];
    }
    p
}

fn box_target(q: &Shape) -> Point {
    let b = q.as_box().expect("box store holds boxes only");
    let d = b.dim();
    let mut t = [0.0; MAX_KEYS];
    for k in 0..d {
        t[k] = b.hi()[k];
        t[d + k] = -b.lo()[k];
    }
    t
}

pub(crate) struct BoxRangeStore {
    index: DominanceIndex,
}

impl BoxRangeStore {
    pub fn new(d: usize) -> Self {
        BoxRangeStore {
            index: DominanceIndex::new(2 * d),
        }
    }

    pub fn bulk_load(&mut self, items: Vec<(ObjectId, Shape)>) -> Result<(), DetectError> {
        let mut seen = crate::HashSet::default();
        for (id, _) in &items {
            if !seen.insert(*id) || self.index.contains(*id) {
                return Err(DetectError::DuplicateId(*id));
            }
        }
        let pts = items.iter().map(|(id, s)| (*id, box_point(s))).collect();
        if self.index.is_empty() {
            self.index = DominanceIndex::from_points(self.index.dims(), pts);
        } else {
            for (id, p) in pts {
                self.index.insert(id, p);
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.index.contains(id)
    }

    pub fn insert(&mut self, id: ObjectId, shape: &Shape) {
        self.index.insert(id, box_point(shape));
    }

    pub fn delete(&mut self, id: ObjectId) -> bool {
        self.index.delete(id)
    }

    pub fn find(
        &self,
        q: &Shape,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        stats: &ProbeStats,
    ) -> Option<ObjectId> {
        let (mut visits, mut seen) = (0, 0);
        let hit = self
            .index
            .find(&box_target(q), accept, &mut visits, &mut seen);
        stats.record_query(visits);
        stats.add_candidates(seen);
        hit
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.index.ids()
    }
}
