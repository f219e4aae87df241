//! Dynamic minimum-weight intersecting pair.
//!
//! Objects live in a search tree ordered by `(weight, id)`. Every node with
//! a large enough subtree carries a [`DetectStore`] over that subtree, so the
//! lightest object intersecting a query is found by walking down the tree
//! and probing left subtrees first. Small subtrees are scanned directly.
//!
//! The global minimum pair comes from a lazy heap of per-object candidate
//! entries. Each insert or weight change pushes a fresh entry for the
//! touched object; popped entries are re-validated against the tree.

use crate::HashMap;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::detect::{Backend, DetectError, DetectStore};
use crate::geometry::{
    check_compatible, GeomError, GeomObject, ObjectId, Shape, ShapeFamily, Side,
};

const NIL: u32 = u32::MAX;
const ALPHA: f64 = 0.7;

/// Subtrees with at most this many live objects are scanned instead of
/// carrying a detection store.
pub const DEFAULT_LEAF_CAP: usize = 128;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MinPairError {
    #[error("object {0} is already live")]
    DuplicateId(ObjectId),
    #[error("object {0} is not live")]
    UnknownId(ObjectId),
    #[error("weight must be positive and finite, got {0}")]
    InvalidWeight(f64),
    #[error("object {0} carries no side tag")]
    MissingSide(ObjectId),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinPair {
    pub a: ObjectId,
    pub b: ObjectId,
    pub sum: f64,
}

#[derive(Debug, Default, Clone)]
pub struct MinPairStats {
    pub store_updates: u64,
    pub scanned: u64,
    pub heap_pops: u64,
    pub rebuilds: u64,
}

struct Node {
    id: ObjectId,
    weight: f64,
    shape: Shape,
    live: bool,
    left: u32,
    right: u32,
    size: u32,
    live_count: u32,
    store: Option<DetectStore>,
}

struct Obj {
    weight: f64,
    shape: Shape,
    version: u64,
    bound: Bound,
}

/// Lightest partner seen by the last scan, stamped with the epoch of that
/// scan. While the epoch is unchanged no object was inserted and no weight
/// went down, so the partner's weight is a lower bound on every partner.
#[derive(Clone, Copy)]
struct Bound {
    partner: Option<(ObjectId, f64)>,
    epoch: u64,
}

impl Bound {
    const NONE: Bound = Bound {
        partner: None,
        epoch: u64::MAX,
    };
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    key: f64,
    id: ObjectId,
    partner: ObjectId,
    version: u64,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, o: &Self) -> Ordering {
        self.key
            .total_cmp(&o.key)
            .then(self.id.cmp(&o.id))
            .then(self.partner.cmp(&o.partner))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn key_cmp(w1: f64, id1: ObjectId, w2: f64, id2: ObjectId) -> Ordering {
    w1.total_cmp(&w2).then(id1.cmp(&id2))
}

pub struct WeightedStore {
    family: ShapeFamily,
    backend: Backend,
    leaf_cap: usize,
    nodes: Vec<Node>,
    free: Vec<u32>,
    root: u32,
    objects: HashMap<ObjectId, Obj>,
    dead: usize,
    heap: BinaryHeap<Reverse<Entry>>,
    clock: u64,
    stats: MinPairStats,
    /// Whether the candidate heap is maintained; off for stores used only
    /// through `min_partner`.
    pairs: bool,
    epoch: u64,
}

impl std::fmt::Debug for WeightedStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WeightedStore")
            .field("family", &self.family)
            .field("len", &self.len())
            .finish()
    }
}

impl WeightedStore {
    pub fn new(family: ShapeFamily, backend: Backend) -> Result<Self, MinPairError> {
        DetectStore::new(backend, family)?;
        Ok(WeightedStore {
            family,
            backend,
            leaf_cap: DEFAULT_LEAF_CAP,
            nodes: Vec::new(),
            free: Vec::new(),
            root: NIL,
            objects: HashMap::default(),
            dead: 0,
            heap: BinaryHeap::new(),
            clock: 0,
            stats: MinPairStats::default(),
            pairs: true,
            epoch: 0,
        })
    }

    fn partners_only(mut self) -> Self {
        self.pairs = false;
        self
    }

    /// Store with the preferred detection backend for `family`.
    pub fn for_family(family: ShapeFamily) -> Self {
        Self::new(family, Backend::preferred(family))
            .expect("preferred backend supports its family")
    }

    pub fn with_leaf_cap(mut self, cap: usize) -> Self {
        assert!(
            self.objects.is_empty(),
            "leaf cap must be set before inserting"
        );
        self.leaf_cap = cap.max(1);
        self
    }

    pub fn family(&self) -> ShapeFamily {
        self.family
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.objects.contains_key(&id)
    }

    pub fn weight(&self, id: ObjectId) -> Option<f64> {
        self.objects.get(&id).map(|o| o.weight)
    }

    pub fn shape(&self, id: ObjectId) -> Option<&Shape> {
        self.objects.get(&id).map(|o| &o.shape)
    }

    pub fn ids(&self) -> impl Iterator<Item = ObjectId> + '_ {
        self.objects.keys().copied()
    }

    pub fn stats(&self) -> &MinPairStats {
        &self.stats
    }

    pub fn insert(&mut self, id: ObjectId, shape: Shape, weight: f64) -> Result<(), MinPairError> {
        check_compatible(self.family, shape.family())?;
        check_weight(weight)?;
        if self.objects.contains_key(&id) {
            return Err(MinPairError::DuplicateId(id));
        }
        self.clock += 1;
        self.epoch += 1;
        let obj = Obj {
            weight,
            shape,
            version: self.clock,
            bound: Bound::NONE,
        };
        self.objects.insert(id, obj);
        self.tree_insert(id, weight, shape);
        self.push_fresh(id);
        Ok(())
    }

    pub fn insert_object(&mut self, obj: &GeomObject, weight: f64) -> Result<(), MinPairError> {
        self.insert(obj.id, obj.shape, weight)
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<Shape, MinPairError> {
        let obj = self
            .objects
            .remove(&id)
            .ok_or(MinPairError::UnknownId(id))?;
        self.tree_delete(id, obj.weight);
        self.maybe_compact_heap();
        Ok(obj.shape)
    }

    pub fn set_weight(&mut self, id: ObjectId, weight: f64) -> Result<(), MinPairError> {
        check_weight(weight)?;
        let (old, shape) = match self.objects.get(&id) {
            Some(o) => (o.weight, o.shape),
            None => return Err(MinPairError::UnknownId(id)),
        };
        self.tree_delete(id, old);
        self.tree_insert(id, weight, shape);
        self.clock += 1;
        let epoch = self.epoch;
        let o = self.objects.get_mut(&id).expect("checked above");
        o.weight = weight;
        o.version = self.clock;
        if weight >= old && o.bound.epoch == epoch {
            if let Some((p, wp)) = o.bound.partner {
                let entry = Entry {
                    key: weight + wp,
                    id,
                    partner: p,
                    version: o.version,
                };
                self.heap.push(Reverse(entry));
            }
        } else {
            if weight < old {
                self.epoch += 1;
            }
            self.push_fresh(id);
        }
        self.maybe_compact_heap();
        Ok(())
    }

    /// Lightest live object intersecting `q.shape`, other than `q.id` itself.
    pub fn min_partner(&self, q: &GeomObject) -> Result<Option<(ObjectId, f64)>, MinPairError> {
        check_compatible(self.family, q.shape.family())?;
        Ok(self.lightest_intersecting(&q.shape, Some(q.id)).0)
    }

    /// Globally lightest intersecting pair, `a < b`.
    pub fn min_pair(&mut self) -> Option<MinPair> {
        while let Some(&Reverse(top)) = self.heap.peek() {
            self.stats.heap_pops += 1;
            let (w, shape, version) = match self.objects.get(&top.id) {
                Some(o) => (o.weight, o.shape, o.version),
                None => {
                    self.heap.pop();
                    continue;
                }
            };
            if version != top.version {
                self.heap.pop();
                continue;
            }
            let (fresh, scanned) = self.lightest_intersecting(&shape, Some(top.id));
            self.stats.scanned += scanned;
            self.heap.pop();
            let epoch = self.epoch;
            if let Some(o) = self.objects.get_mut(&top.id) {
                o.bound = Bound {
                    partner: fresh,
                    epoch,
                };
            }
            let Some((p, wp)) = fresh else {
                continue;
            };
            let key = w + wp;
            self.heap.push(Reverse(Entry {
                key,
                id: top.id,
                partner: p,
                version,
            }));
            if key <= top.key {
                return Some(MinPair {
                    a: top.id.min(p),
                    b: top.id.max(p),
                    sum: key,
                });
            }
        }
        None
    }

    /// Live `(id, weight)` pairs read back from the weight tree, in key order.
    pub fn tree_entries(&self) -> Vec<(ObjectId, f64)> {
        let mut out = Vec::with_capacity(self.len());
        self.inorder(self.root, &mut |n| {
            if n.live {
                out.push((n.id, n.weight));
            }
            false
        });
        out
    }

    /// Exhaustive structural check: ordering, counts and per-node stores.
    pub fn check_invariants(&self) -> Result<(), String> {
        let entries = self.tree_entries();
        if entries.len() != self.len() {
            return Err(format!(
                "tree holds {} live nodes, ledger {}",
                entries.len(),
                self.len()
            ));
        }
        for w in entries.windows(2) {
            if key_cmp(w[0].1, w[0].0, w[1].1, w[1].0) != Ordering::Less {
                return Err("tree out of order".into());
            }
        }
        for (id, w) in &entries {
            if self.objects.get(id).map(|o| o.weight) != Some(*w) {
                return Err(format!("weight of {id} disagrees with ledger"));
            }
        }
        self.check_node(self.root).map(|_| ())
    }

    fn check_node(&self, x: u32) -> Result<(u32, u32, Vec<ObjectId>), String> {
        if x == NIL {
            return Ok((0, 0, Vec::new()));
        }
        let n = &self.nodes[x as usize];
        let (ls, ll, mut ids) = self.check_node(n.left)?;
        let (rs, rl, rids) = self.check_node(n.right)?;
        ids.extend(rids);
        if n.live {
            ids.push(n.id);
        }
        if n.size != ls + rs + 1 || n.live_count != ll + rl + n.live as u32 {
            return Err(format!("bad counts at node of {}", n.id));
        }
        if let Some(s) = &n.store {
            let mut a = s.ids();
            let mut b = ids.clone();
            a.sort_unstable();
            b.sort_unstable();
            if a != b {
                return Err(format!("store at node of {} disagrees with subtree", n.id));
            }
        }
        Ok((n.size, n.live_count, ids))
    }

    fn push_fresh(&mut self, id: ObjectId) {
        if !self.pairs {
            return;
        }
        let o = &self.objects[&id];
        let (w, shape, version) = (o.weight, o.shape, o.version);
        let (found, scanned) = self.lightest_intersecting(&shape, Some(id));
        self.stats.scanned += scanned;
        let epoch = self.epoch;
        self.objects.get_mut(&id).expect("live").bound = Bound {
            partner: found,
            epoch,
        };
        if let Some((p, wp)) = found {
            self.heap.push(Reverse(Entry {
                key: w + wp,
                id,
                partner: p,
                version,
            }));
        }
    }

    fn maybe_compact_heap(&mut self) {
        if self.heap.len() <= 4 * self.objects.len() + 64 {
            return;
        }
        let objects = &self.objects;
        let kept: Vec<Reverse<Entry>> = std::mem::take(&mut self.heap)
            .into_vec()
            .into_iter()
            .filter(|Reverse(e)| objects.get(&e.id).is_some_and(|o| o.version == e.version))
            .collect();
        self.heap = BinaryHeap::from(kept);
    }

    fn lightest_intersecting(
        &self,
        q: &Shape,
        exclude: Option<ObjectId>,
    ) -> (Option<(ObjectId, f64)>, u64) {
        let mut scanned = 0u64;
        let mut cur = self.root;
        while cur != NIL {
            let n = &self.nodes[cur as usize];
            if n.store.is_none() {
                return (self.scan_first(cur, q, exclude, &mut scanned), scanned);
            }
            if n.left != NIL {
                let l = &self.nodes[n.left as usize];
                match &l.store {
                    Some(s) => {
                        scanned += 1;
                        if s.find(q, &mut |id| Some(id) != exclude).is_some() {
                            cur = n.left;
                            continue;
                        }
                    }
                    None => {
                        if let Some(hit) = self.scan_first(n.left, q, exclude, &mut scanned) {
                            return (Some(hit), scanned);
                        }
                    }
                }
            }
            scanned += 1;
            if n.live && Some(n.id) != exclude && n.shape.intersects(q) {
                return (Some((n.id, n.weight)), scanned);
            }
            cur = n.right;
        }
        (None, scanned)
    }

    fn scan_first(
        &self,
        x: u32,
        q: &Shape,
        exclude: Option<ObjectId>,
        scanned: &mut u64,
    ) -> Option<(ObjectId, f64)> {
        let mut hit = None;
        self.inorder(x, &mut |n| {
            *scanned += 1;
            if n.live && Some(n.id) != exclude && n.shape.intersects(q) {
                hit = Some((n.id, n.weight));
                true
            } else {
                false
            }
        });
        hit
    }

    /// In-order walk; `f` returns true to stop.
    fn inorder(&self, x: u32, f: &mut dyn FnMut(&Node) -> bool) -> bool {
        let mut stack = Vec::new();
        let mut cur = x;
        loop {
            while cur != NIL {
                stack.push(cur);
                cur = self.nodes[cur as usize].left;
            }
            let Some(top) = stack.pop() else {
                return false;
            };
            let n = &self.nodes[top as usize];
            if f(n) {
                return true;
            }
            cur = n.right;
        }
    }

    fn subtree_live(&self, x: u32) -> Vec<(ObjectId, Shape)> {
        let mut out = Vec::new();
        self.inorder(x, &mut |n| {
            if n.live {
                out.push((n.id, n.shape));
            }
            false
        });
        out
    }

    fn build_store(&self, x: u32) -> DetectStore {
        DetectStore::from_shapes(self.backend, self.family, self.subtree_live(x))
            .expect("subtree objects are valid for the store")
    }

    fn alloc(&mut self, node: Node) -> u32 {
        match self.free.pop() {
            Some(i) => {
                self.nodes[i as usize] = node;
                i
            }
            None => {
                self.nodes.push(node);
                (self.nodes.len() - 1) as u32
            }
        }
    }

    fn tree_insert(&mut self, id: ObjectId, weight: f64, shape: Shape) {
        let mut path = Vec::new();
        let mut cur = self.root;
        let mut went_left = false;
        while cur != NIL {
            path.push(cur);
            let n = &self.nodes[cur as usize];
            went_left = key_cmp(weight, id, n.weight, n.id) == Ordering::Less;
            cur = if went_left { n.left } else { n.right };
        }
        let x = self.alloc(Node {
            id,
            weight,
            shape,
            live: true,
            left: NIL,
            right: NIL,
            size: 1,
            live_count: 1,
            store: None,
        });
        match path.last() {
            None => self.root = x,
            Some(&p) if went_left => self.nodes[p as usize].left = x,
            Some(&p) => self.nodes[p as usize].right = x,
        }
        for &a in path.iter().rev() {
            let n = &mut self.nodes[a as usize];
            n.size += 1;
            n.live_count += 1;
            if let Some(s) = &mut n.store {
                s.insert(id, &shape).expect("fresh id");
                self.stats.store_updates += 1;
            } else if n.live_count as usize > 2 * self.leaf_cap {
                let s = self.build_store(a);
                self.nodes[a as usize].store = Some(s);
                self.stats.store_updates += 1;
            }
        }
        let total = self.nodes[self.root as usize].size as f64;
        let depth_limit = (total.ln() / (1.0 / ALPHA).ln()).floor() as usize + 1;
        if path.len() > depth_limit {
            let mut child = x;
            for k in (0..path.len()).rev() {
                let a = path[k];
                let cs = self.nodes[child as usize].size as f64;
                if cs > ALPHA * self.nodes[a as usize].size as f64 {
                    self.rebuild_at(&path[..k], a);
                    break;
                }
                child = a;
            }
        }
    }

    fn tree_delete(&mut self, id: ObjectId, weight: f64) {
        let mut cur = self.root;
        while cur != NIL {
            let n = &mut self.nodes[cur as usize];
            n.live_count -= 1;
            if let Some(s) = &mut n.store {
                s.delete(id)
                    .expect("object is stored along its search path");
                self.stats.store_updates += 1;
            }
            match key_cmp(weight, id, n.weight, n.id) {
                Ordering::Equal if n.live => {
                    n.live = false;
                    break;
                }
                Ordering::Less => cur = n.left,
                Ordering::Equal | Ordering::Greater => cur = n.right,
            }
        }
        debug_assert!(cur != NIL, "deleted object must be in the tree");
        self.dead += 1;
        if self.dead > self.objects.len() {
            self.rebuild_at(&[], self.root);
        }
    }

    /// Rebuild the subtree rooted at `x` perfectly balanced, dropping dead
    /// nodes; `ancestors` is the root path down to `x`'s parent.
    fn rebuild_at(&mut self, ancestors: &[u32], x: u32) {
        self.stats.rebuilds += 1;
        let mut order = Vec::new();
        let mut removed = 0u32;
        {
            let mut stack = Vec::new();
            let mut cur = x;
            loop {
                while cur != NIL {
                    stack.push(cur);
                    cur = self.nodes[cur as usize].left;
                }
                let Some(top) = stack.pop() else { break };
                let n = &self.nodes[top as usize];
                cur = n.right;
                if n.live {
                    order.push(top);
                } else {
                    removed += 1;
                    self.free.push(top);
                }
            }
        }
        for &i in &order {
            let n = &mut self.nodes[i as usize];
            n.store = None;
        }
        self.dead -= removed as usize;
        let new_root = self.build_balanced(&order);
        for &a in ancestors {
            self.nodes[a as usize].size -= removed;
        }
        match ancestors.last() {
            None => self.root = new_root,
            Some(&p) => {
                let pn = &mut self.nodes[p as usize];
                if pn.left == x {
                    pn.left = new_root;
                } else {
                    pn.right = new_root;
                }
            }
        }
    }

    fn build_balanced(&mut self, order: &[u32]) -> u32 {
        if order.is_empty() {
            return NIL;
        }
        let mid = order.len() / 2;
        let x = order[mid];
        let l = self.build_balanced(&order[..mid]);
        let r = self.build_balanced(&order[mid + 1..]);
        let count = order.len() as u32;
        let n = &mut self.nodes[x as usize];
        n.left = l;
        n.right = r;
        n.size = count;
        n.live_count = count;
        if count as usize > self.leaf_cap {
            let s = self.build_store(x);
            self.nodes[x as usize].store = Some(s);
        }
        x
    }
}

/// Weighted objects that report their lightest adjacent pair.
pub trait PairStore {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Live ids in unspecified order.
    fn live_ids(&self) -> Vec<ObjectId>;
    fn shape_of(&self, id: ObjectId) -> Option<&Shape>;
    /// Whether two live objects form an edge.
    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool;
    fn insert_object(&mut self, obj: &GeomObject, weight: f64) -> Result<(), MinPairError>;
    fn delete(&mut self, id: ObjectId) -> Result<Shape, MinPairError>;
    fn set_weight(&mut self, id: ObjectId, weight: f64) -> Result<(), MinPairError>;
    fn min_pair(&mut self) -> Option<MinPair>;
    /// Store updates performed so far.
    fn store_updates(&self) -> u64;
}

impl PairStore for WeightedStore {
    fn len(&self) -> usize {
        WeightedStore::len(self)
    }

    fn live_ids(&self) -> Vec<ObjectId> {
        self.ids().collect()
    }

    fn shape_of(&self, id: ObjectId) -> Option<&Shape> {
        self.shape(id)
    }

    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool {
        match (self.shape(a), self.shape(b)) {
            (Some(x), Some(y)) => a != b && x.intersects(y),
            _ => false,
        }
    }

    fn insert_object(&mut self, obj: &GeomObject, weight: f64) -> Result<(), MinPairError> {
        WeightedStore::insert_object(self, obj, weight)
    }

    fn delete(&mut self, id: ObjectId) -> Result<Shape, MinPairError> {
        WeightedStore::delete(self, id)
    }

    fn set_weight(&mut self, id: ObjectId, weight: f64) -> Result<(), MinPairError> {
        WeightedStore::set_weight(self, id, weight)
    }

    fn min_pair(&mut self) -> Option<MinPair> {
        WeightedStore::min_pair(self)
    }

    fn store_updates(&self) -> u64 {
        self.stats.store_updates
    }
}

struct SidedObj {
    side: usize,
    weight: f64,
    shape: Shape,
    version: u64,
    bound: Bound,
}

/// Two-sided weighted objects; only pairs with one object per side count.
pub struct BichromaticStore {
    sides: [WeightedStore; 2],
    objects: HashMap<ObjectId, SidedObj>,
    heap: BinaryHeap<Reverse<Entry>>,
    clock: u64,
    epoch: u64,
}

impl std::fmt::Debug for BichromaticStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BichromaticStore")
            .field("len", &self.objects.len())
            .finish()
    }
}

impl BichromaticStore {
    pub fn new(family: ShapeFamily, backend: Backend) -> Result<Self, MinPairError> {
        Ok(BichromaticStore {
            sides: [
                WeightedStore::new(family, backend)?.partners_only(),
                WeightedStore::new(family, backend)?.partners_only(),
            ],
            objects: HashMap::default(),
            heap: BinaryHeap::new(),
            clock: 0,
            epoch: 0,
        })
    }

    pub fn for_family(family: ShapeFamily) -> Self {
        Self::new(family, Backend::preferred(family))
            .expect("preferred backend supports its family")
    }

    pub fn with_leaf_cap(self, cap: usize) -> Self {
        let [a, b] = self.sides;
        BichromaticStore {
            sides: [a.with_leaf_cap(cap), b.with_leaf_cap(cap)],
            ..self
        }
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.objects.contains_key(&id)
    }

    pub fn weight(&self, id: ObjectId) -> Option<f64> {
        self.objects.get(&id).map(|o| o.weight)
    }

    pub fn side(&self, id: ObjectId) -> Option<Side> {
        self.objects
            .get(&id)
            .map(|o| if o.side == 0 { Side::Left } else { Side::Right })
    }

    /// Store updates summed over both sides.
    pub fn stats(&self) -> MinPairStats {
        let (a, b) = (self.sides[0].stats(), self.sides[1].stats());
        MinPairStats {
            store_updates: a.store_updates + b.store_updates,
            scanned: a.scanned + b.scanned,
            heap_pops: a.heap_pops + b.heap_pops,
            rebuilds: a.rebuilds + b.rebuilds,
        }
    }

    fn lightest_opposite(&self, id: ObjectId) -> Option<(ObjectId, f64)> {
        let o = &self.objects[&id];
        let q = GeomObject::new(id, o.shape);
        self.sides[1 - o.side]
            .min_partner(&q)
            .expect("family checked on insert")
    }

    fn push_fresh(&mut self, id: ObjectId) {
        let (w, version) = (self.objects[&id].weight, self.objects[&id].version);
        let found = self.lightest_opposite(id);
        let epoch = self.epoch;
        if let Some(o) = self.objects.get_mut(&id) {
            o.bound = Bound {
                partner: found,
                epoch,
            };
        }
        if let Some((p, wp)) = found {
            self.heap.push(Reverse(Entry {
                key: w + wp,
                id,
                partner: p,
                version,
            }));
        }
    }

    fn maybe_compact_heap(&mut self) {
        if self.heap.len() <= 4 * self.objects.len() + 64 {
            return;
        }
        let objects = &self.objects;
        let kept: Vec<Reverse<Entry>> = std::mem::take(&mut self.heap)
            .into_vec()
            .into_iter()
            .filter(|Reverse(e)| objects.get(&e.id).is_some_and(|o| o.version == e.version))
            .collect();
        self.heap = BinaryHeap::from(kept);
    }
}

impl PairStore for BichromaticStore {
    fn len(&self) -> usize {
        self.objects.len()
    }

    fn live_ids(&self) -> Vec<ObjectId> {
        self.objects.keys().copied().collect()
    }

    fn shape_of(&self, id: ObjectId) -> Option<&Shape> {
        self.objects.get(&id).map(|o| &o.shape)
    }

    fn adjacent(&self, a: ObjectId, b: ObjectId) -> bool {
        match (self.objects.get(&a), self.objects.get(&b)) {
            (Some(x), Some(y)) => x.side != y.side && x.shape.intersects(&y.shape),
            _ => false,
        }
    }

    fn insert_object(&mut self, obj: &GeomObject, weight: f64) -> Result<(), MinPairError> {
        let side = match obj.side {
            Side::Left => 0,
            Side::Right => 1,
            Side::None => return Err(MinPairError::MissingSide(obj.id)),
        };
        if self.objects.contains_key(&obj.id) {
            return Err(MinPairError::DuplicateId(obj.id));
        }
        self.sides[side].insert(obj.id, obj.shape, weight)?;
        self.clock += 1;
        self.epoch += 1;
        self.objects.insert(
            obj.id,
            SidedObj {
                side,
                weight,
                shape: obj.shape,
                version: self.clock,
                bound: Bound::NONE,
            },
        );
        self.push_fresh(obj.id);
        Ok(())
    }

    fn delete(&mut self, id: ObjectId) -> Result<Shape, MinPairError> {
        let o = self
            .objects
            .remove(&id)
            .ok_or(MinPairError::UnknownId(id))?;
        self.sides[o.side].delete(id)?;
        self.maybe_compact_heap();
        Ok(o.shape)
    }

    fn store_updates(&self) -> u64 {
        self.stats().store_updates
    }

    fn set_weight(&mut self, id: ObjectId, weight: f64) -> Result<(), MinPairError> {
        let side = self
            .objects
            .get(&id)
            .ok_or(MinPairError::UnknownId(id))?
            .side;
        self.sides[side].set_weight(id, weight)?;
        self.clock += 1;
        let epoch = self.epoch;
        let o = self.objects.get_mut(&id).expect("checked above");
        let old = o.weight;
        o.weight = weight;
        o.version = self.clock;
        if weight >= old && o.bound.epoch == epoch {
            if let Some((p, wp)) = o.bound.partner {
                let entry = Entry {
                    key: weight + wp,
                    id,
                    partner: p,
                    version: o.version,
                };
                self.heap.push(Reverse(entry));
            }
        } else {
            if weight < old {
                self.epoch += 1;
            }
            self.push_fresh(id);
        }
        self.maybe_compact_heap();
        Ok(())
    }

    fn min_pair(&mut self) -> Option<MinPair> {
        while let Some(&Reverse(top)) = self.heap.peek() {
            self.heap.pop();
            let Some(o) = self.objects.get(&top.id) else {
                continue;
            };
            if o.version != top.version {
                continue;
            }
            let w = o.weight;
            let found = self.lightest_opposite(top.id);
            let epoch = self.epoch;
            if let Some(o) = self.objects.get_mut(&top.id) {
                o.bound = Bound {
                    partner: found,
                    epoch,
                };
            }
            let Some((p, wp)) = found else {
                continue;
            };
            let key = w + wp;
            self.heap.push(Reverse(Entry {
                key,
                id: top.id,
                partner: p,
                version: top.version,
            }));
            if key <= top.key {
                return Some(MinPair {
                    a: top.id.min(p),
                    b: top.id.max(p),
                    sum: key,
                });
            }
        }
        None
    }
}

fn check_weight(w: f64) -> Result<(), MinPairError> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(MinPairError::InvalidWeight(w))
    }
}
