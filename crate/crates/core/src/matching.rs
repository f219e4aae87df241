//! Approximate maximum matching in bipartite intersection graphs.
//!
//! A maximal matching is kept up to date under insertions and deletions.
//! Phases of layered augmenting-path searches (one layer of detection stores
//! per position along the path) improve it to a `(1 + O(eps))`-approximation,
//! and the dynamic wrapper recomputes that only once per phase of updates.

use crate::HashMap;

use thiserror::Error;

use crate::detect::{Backend, DetectError, DetectStore};
use crate::geometry::{
    check_compatible, GeomError, GeomObject, ObjectId, Shape, ShapeFamily, Side, Update,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MatchingError {
    #[error("object {0} is already live")]
    DuplicateId(ObjectId),
    #[error("object {0} is not live")]
    UnknownId(ObjectId),
    #[error("object {0} carries no side tag")]
    MissingSide(ObjectId),
    #[error("eps must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

/// Symmetric partner map.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Matching {
    mate: HashMap<ObjectId, ObjectId>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of matched pairs.
    pub fn len(&self) -> usize {
        self.mate.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.mate.is_empty()
    }

    pub fn partner(&self, id: ObjectId) -> Option<ObjectId> {
        self.mate.get(&id).copied()
    }

    pub fn is_matched(&self, id: ObjectId) -> bool {
        self.mate.contains_key(&id)
    }

    /// Matched ids, sorted.
    pub fn vertices(&self) -> Vec<ObjectId> {
        let mut v: Vec<ObjectId> = self.mate.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Pairs `(a, b)` with `a < b`, sorted.
    pub fn pairs(&self) -> Vec<(ObjectId, ObjectId)> {
        let mut p: Vec<_> = self
            .mate
            .iter()
            .filter(|(a, b)| a < b)
            .map(|(&a, &b)| (a, b))
            .collect();
        p.sort_unstable();
        p
    }

    pub fn pair(&mut self, a: ObjectId, b: ObjectId) {
        debug_assert!(a != b && !self.is_matched(a) && !self.is_matched(b));
        self.mate.insert(a, b);
        self.mate.insert(b, a);
    }

    /// Unmatches `id`, returning its former partner.
    pub fn remove(&mut self, id: ObjectId) -> Option<ObjectId> {
        let p = self.mate.remove(&id)?;
        self.mate.remove(&p);
        Some(p)
    }

    /// Flips an augmenting path `x0 x1 ... x_{2k+1}` whose odd edges are matched.
    pub fn augment(&mut self, path: &[ObjectId]) {
        debug_assert!(path.len() % 2 == 0);
        for j in (1..path.len() - 1).step_by(2) {
            debug_assert_eq!(self.partner(path[j]), Some(path[j + 1]));
            self.remove(path[j]);
        }
        for j in (0..path.len()).step_by(2) {
            self.pair(path[j], path[j + 1]);
        }
    }
}

pub(crate) fn check_eps(eps: f64) -> Result<(), MatchingError> {
    if eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(MatchingError::BadEps(eps))
    }
}

/// A maximal matching of the live intersection graph, kept up to date
/// online. In bipartite mode only Left-Right pairs are edges.
pub struct MaximalMatching {
    family: ShapeFamily,
    bipartite: bool,
    objects: HashMap<ObjectId, GeomObject>,
    m: Matching,
    /// Unmatched objects, per side in bipartite mode and all in slot 0 otherwise.
    free: [DetectStore; 2],
}

impl MaximalMatching {
    pub fn new(family: ShapeFamily, bipartite: bool) -> Result<Self, MatchingError> {
        let backend = Backend::preferred(family);
        Ok(MaximalMatching {
            family,
            bipartite,
            objects: HashMap::default(),
            m: Matching::new(),
            free: [
                DetectStore::new(backend, family)?,
                DetectStore::new(backend, family)?,
            ],
        })
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn matching(&self) -> &Matching {
        &self.m
    }

    pub fn apply(&mut self, u: Update) -> Result<(), MatchingError> {
        match u {
            Update::Insert(o) => self.insert(o),
            Update::Delete(id) => self.delete(id),
        }
    }

    pub fn insert(&mut self, obj: GeomObject) -> Result<(), MatchingError> {
        check_compatible(self.family, obj.shape.family())?;
        self.class(&obj)?;
        if self.objects.contains_key(&obj.id) {
            return Err(MatchingError::DuplicateId(obj.id));
        }
        self.objects.insert(obj.id, obj);
        self.settle(obj.id);
        Ok(())
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<(), MatchingError> {
        let obj = self
            .objects
            .remove(&id)
            .ok_or(MatchingError::UnknownId(id))?;
        match self.m.remove(id) {
            Some(partner) => self.settle(partner),
            None => self.free[self.class(&obj)?].delete(id)?,
        }
        Ok(())
    }

    fn class(&self, obj: &GeomObject) -> Result<usize, MatchingError> {
        if self.bipartite {
            side_index(obj.side).ok_or(MatchingError::MissingSide(obj.id))
        } else {
            Ok(0)
        }
    }

    fn settle(&mut self, id: ObjectId) {
        let obj = self.objects[&id];
        let c = self.class(&obj).expect("checked on insert");
        let other = if self.bipartite { 1 - c } else { 0 };
        match self.free[other].find(&obj.shape, &mut |_| true) {
            Some(w) => {
                self.free[other].delete(w).expect("free object");
                self.m.pair(id, w);
            }
            None => self.free[c]
                .insert(id, &obj.shape)
                .expect("unmatched object not yet free"),
        }
    }
}

/// Number of augmentation rounds `L = ceil(1/eps)`.
pub fn rounds(eps: f64) -> usize {
    (1.0 / eps).ceil() as usize
}

// ---------------------------------------------------------------------------
// Layered augmenting-path search

/// The exposed set `S` seen by the search, split into two classes.
pub(crate) trait Exposed {
    /// Some member of class `class` intersecting `q`.
    fn find(&self, q: &Shape, class: usize) -> Option<ObjectId>;
    fn remove(&mut self, id: ObjectId);
}

/// Counters of one augmenting-path search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SearchStats {
    pub extend_calls: u64,
    /// Largest number of `extend` calls any vertex received at one layer.
    pub max_candidacy: u32,
    /// Walks rejected because they repeated a vertex.
    pub non_simple: u64,
}

impl SearchStats {
    pub(crate) fn absorb(&mut self, o: &SearchStats) {
        self.extend_calls += o.extend_calls;
        self.max_candidacy = self.max_candidacy.max(o.max_candidacy);
        self.non_simple += o.non_simple;
    }
}

/// A layer vertex with its shape and class.
pub(crate) type Member = (ObjectId, Shape, usize);

/// Layers up to this size are stored as plain lists.
const SMALL_LAYER: usize = 48;

/// One class of one layer of the search.
enum LayerPart {
    List(Vec<(ObjectId, Shape)>),
    Store(DetectStore),
}

impl LayerPart {
    fn contains(&self, id: ObjectId) -> bool {
        match self {
            LayerPart::List(v) => v.iter().any(|&(x, _)| x == id),
            LayerPart::Store(s) => s.contains(id),
        }
    }

    fn remove(&mut self, id: ObjectId) -> bool {
        match self {
            LayerPart::List(v) => match v.iter().position(|&(x, _)| x == id) {
                Some(i) => {
                    v.swap_remove(i);
                    true
                }
                None => false,
            },
            LayerPart::Store(s) => s.delete(id).is_ok(),
        }
    }

    fn insert(&mut self, id: ObjectId, shape: &Shape) {
        match self {
            LayerPart::List(v) => v.push((id, *shape)),
            LayerPart::Store(s) => s
                .insert(id, shape)
                .expect("vertex was removed from this layer"),
        }
    }

    fn find(&self, q: &Shape) -> Option<ObjectId> {
        match self {
            LayerPart::List(v) => v.iter().find(|(_, s)| s.intersects(q)).map(|&(x, _)| x),
            LayerPart::Store(s) => s.find(q, &mut |_| true),
        }
    }
}

/// Maximal set of vertex-disjoint augmenting paths of length `2 ell + 1`
/// in a graph whose edges join vertices of different classes.
///
/// Layer `S_i` holds the candidates for the `i`-th matched vertex `u_i` of a
/// path `v_0 u_1 v_1 ... u_ell v_ell u_{ell+1}`; each is a pair of stores
/// indexed by class.
pub(crate) struct PathSearch<'a> {
    objects: &'a HashMap<ObjectId, GeomObject>,
    mate: &'a Matching,
    class: &'a dyn Fn(ObjectId) -> usize,
    ell: usize,
    layers: Vec<[LayerPart; 2]>,
    candidacy: Vec<HashMap<ObjectId, u32>>,
    pub paths: Vec<Vec<ObjectId>>,
    pub stats: SearchStats,
}

impl<'a> PathSearch<'a> {
    /// `members[i]` lists the vertices initially in layer `S_{i+1}` with
    /// their shapes and classes.
    pub fn new(
        objects: &'a HashMap<ObjectId, GeomObject>,
        mate: &'a Matching,
        class: &'a dyn Fn(ObjectId) -> usize,
        ell: usize,
        family: ShapeFamily,
        members: &[Vec<Member>],
    ) -> Result<Self, DetectError> {
        let mut layers = Vec::with_capacity(ell);
        for members in &members[..ell] {
            let part = |c: usize| -> Result<LayerPart, DetectError> {
                let items = members
                    .iter()
                    .filter(|m| m.2 == c)
                    .map(|&(id, shape, _)| (id, shape));
                Ok(if members.len() <= SMALL_LAYER {
                    LayerPart::List(items.collect())
                } else {
                    LayerPart::Store(DetectStore::from_shapes(
                        Backend::preferred(family),
                        family,
                        items,
                    )?)
                })
            };
            layers.push([part(0)?, part(1)?]);
        }
        Ok(PathSearch {
            objects,
            mate,
            class,
            ell,
            layers,
            candidacy: vec![HashMap::default(); ell],
            paths: Vec::new(),
            stats: SearchStats::default(),
        })
    }

    fn shape(&self, id: ObjectId) -> &Shape {
        &self.objects[&id].shape
    }

    fn in_layer(&self, i: usize, id: ObjectId) -> bool {
        self.layers[i - 1][(self.class)(id)].contains(id)
    }

    fn layer_remove(&mut self, i: usize, id: ObjectId) -> bool {
        let c = (self.class)(id);
        self.layers[i - 1][c].remove(id)
    }

    fn layer_insert(&mut self, i: usize, id: ObjectId) {
        let c = (self.class)(id);
        let shape = self.objects[&id].shape;
        self.layers[i - 1][c].insert(id, &shape);
    }

    /// Tries every `u_1` of layer 1 in the given order.
    pub fn run(&mut self, exposed: &mut dyn Exposed, order: &[ObjectId]) {
        for &u1 in order {
            if !self.in_layer(1, u1) {
                continue;
            }
            let c = 1 - (self.class)(u1);
            match exposed.find(self.shape(u1), c) {
                None => {
                    self.layer_remove(1, u1);
                }
                Some(v0) => {
                    let mut walk = vec![v0, u1];
                    self.extend(exposed, &mut walk, 1);
                }
            }
        }
    }

    /// `walk` is `v_0 u_1 v_1 ... u_i`.
    fn extend(&mut self, exposed: &mut dyn Exposed, walk: &mut Vec<ObjectId>, i: usize) -> bool {
        let ui = *walk.last().expect("nonempty walk");
        self.stats.extend_calls += 1;
        let seen = self.candidacy[i - 1].entry(ui).or_insert(0);
        *seen += 1;
        self.stats.max_candidacy = self.stats.max_candidacy.max(*seen);
        let vi = self.mate.partner(ui).expect("layer vertices are matched");
        let cu = (self.class)(ui);

        if i == self.ell {
            let Some(last) = exposed.find(self.shape(vi), cu) else {
                self.layer_remove(i, ui);
                return false;
            };
            walk.push(vi);
            walk.push(last);
            let mut sorted = walk.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != walk.len() {
                self.stats.non_simple += 1;
                walk.truncate(walk.len() - 2);
                self.layer_remove(i, ui);
                return false;
            }
            exposed.remove(walk[0]);
            exposed.remove(last);
            for &x in &walk[1..walk.len() - 1] {
                for j in 1..=self.ell {
                    self.layer_remove(j, x);
                }
            }
            self.paths.push(walk.clone());
            return true;
        }

        walk.push(vi);
        let had = self.layer_remove(i + 1, ui);
        while let Some(next) = self.layers[i][cu].find(self.shape(vi)) {
            walk.push(next);
            if self.extend(exposed, walk, i + 1) {
                return true;
            }
            walk.pop();
            debug_assert!(!self.in_layer(i + 1, next));
        }
        if had {
            self.layer_insert(i + 1, ui);
        }
        walk.pop();
        self.layer_remove(i, ui);
        false
    }
}

// ---------------------------------------------------------------------------
// Bipartite matcher

fn side_index(side: Side) -> Option<usize> {
    match side {
        Side::Left => Some(0),
        Side::Right => Some(1),
        Side::None => None,
    }
}

/// Exposed set backed by the per-side stores of all live objects.
struct SideExposed<'s> {
    stores: &'s mut [DetectStore; 2],
    objects: &'s HashMap<ObjectId, GeomObject>,
    removed: Vec<ObjectId>,
}

impl SideExposed<'_> {
    fn side(&self, id: ObjectId) -> usize {
        side_index(self.objects[&id].side).expect("sided object")
    }

    fn restore(&mut self) {
        for id in std::mem::take(&mut self.removed) {
            let c = self.side(id);
            self.stores[c]
                .insert(id, &self.objects[&id].shape)
                .expect("restored once");
        }
    }
}

impl Exposed for SideExposed<'_> {
    fn find(&self, q: &Shape, class: usize) -> Option<ObjectId> {
        self.stores[class].find(q, &mut |_| true)
    }

    fn remove(&mut self, id: ObjectId) {
        let c = self.side(id);
        if self.stores[c].delete(id).is_ok() {
            self.removed.push(id);
        }
    }
}

/// Live two-sided objects with a maximal matching maintained online.
pub struct BipartiteMatcher {
    family: ShapeFamily,
    objects: HashMap<ObjectId, GeomObject>,
    m0: Matching,
    /// Per side, the objects unmatched in `m0`.
    free: [DetectStore; 2],
    /// Per side, all live objects.
    all: [DetectStore; 2],
    stats: SearchStats,
}

impl BipartiteMatcher {
    pub fn new(family: ShapeFamily) -> Result<Self, MatchingError> {
        let backend = Backend::preferred(family);
        let mk = || DetectStore::new(backend, family);
        Ok(BipartiteMatcher {
            family,
            objects: HashMap::default(),
            m0: Matching::new(),
            free: [mk()?, mk()?],
            all: [mk()?, mk()?],
            stats: SearchStats::default(),
        })
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

    pub fn objects(&self) -> impl Iterator<Item = &GeomObject> {
        self.objects.values()
    }

    /// The maximal matching `M0`.
    pub fn maximal(&self) -> &Matching {
        &self.m0
    }

    /// Counters accumulated over all searches.
    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    pub fn apply(&mut self, u: Update) -> Result<(), MatchingError> {
        match u {
            Update::Insert(o) => self.insert(o),
            Update::Delete(id) => self.delete(id),
        }
    }

    pub fn insert(&mut self, obj: GeomObject) -> Result<(), MatchingError> {
        check_compatible(self.family, obj.shape.family())?;
        let s = side_index(obj.side).ok_or(MatchingError::MissingSide(obj.id))?;
        if self.objects.contains_key(&obj.id) {
            return Err(MatchingError::DuplicateId(obj.id));
        }
        self.objects.insert(obj.id, obj);
        self.all[s].insert(obj.id, &obj.shape)?;
        self.settle(obj.id);
        Ok(())
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<(), MatchingError> {
        let obj = self
            .objects
            .remove(&id)
            .ok_or(MatchingError::UnknownId(id))?;
        let s = side_index(obj.side).expect("sided object");
        self.all[s].delete(id)?;
        match self.m0.remove(id) {
            Some(partner) => self.settle(partner),
            None => self.free[s].delete(id)?,
        }
        Ok(())
    }

    /// Matches an unmatched object to a free intersecting one, or marks it free.
    fn settle(&mut self, id: ObjectId) {
        let obj = self.objects[&id];
        let s = side_index(obj.side).expect("sided object");
        match self.free[1 - s].find(&obj.shape, &mut |_| true) {
            Some(w) => {
                self.free[1 - s].delete(w).expect("free object");
                self.m0.pair(id, w);
            }
            None => self.free[s]
                .insert(id, &obj.shape)
                .expect("unmatched object not yet free"),
        }
    }

    /// Maximal set of vertex-disjoint augmenting paths of length `2 ell + 1`
    /// with respect to `m`, assuming none shorter exist.
    pub fn maximal_aug_paths(
        &mut self,
        m: &Matching,
        ell: usize,
    ) -> Result<Vec<Vec<ObjectId>>, MatchingError> {
        let members = m.vertices();
        let objects = &self.objects;
        let class = |id: ObjectId| side_index(objects[&id].side).expect("sided object");
        let classified: Vec<Member> = members
            .iter()
            .map(|&id| (id, objects[&id].shape, class(id)))
            .collect();
        let layers = vec![classified; ell];
        let mut search = PathSearch::new(objects, m, &class, ell, self.family, &layers)?;
        let mut exposed = SideExposed {
            stores: &mut self.all,
            objects,
            removed: Vec::new(),
        };
        for &v in &members {
            exposed.remove(v);
        }
        search.run(&mut exposed, &members);
        exposed.restore();
        self.stats.absorb(&search.stats);
        Ok(search.paths)
    }

    /// Starting from `M0`, runs rounds `ell = 1..=ceil(1/eps)` of
    /// augmentation along maximal path sets.
    pub fn approx_mcm(&mut self, eps: f64) -> Result<Matching, MatchingError> {
        self.approx_mcm_traced(eps, |_, _, _| {})
    }

    /// As [`approx_mcm`](Self::approx_mcm), reporting the matching after each round.
    pub fn approx_mcm_traced<F>(
        &mut self,
        eps: f64,
        mut observe: F,
    ) -> Result<Matching, MatchingError>
    where
        F: FnMut(usize, &Matching, &[Vec<ObjectId>]),
    {
        check_eps(eps)?;
        let mut m = self.m0.clone();
        for ell in 1..=rounds(eps) {
            let paths = self.maximal_aug_paths(&m, ell)?;
            for p in &paths {
                m.augment(p);
            }
            observe(ell, &m, &paths);
        }
        Ok(m)
    }
}

/// Dynamic bipartite matching: recomputed once per phase of
/// `ceil(eps |M0|)` updates; deletions inside a phase drop their edge.
pub struct DynMcm {
    matcher: BipartiteMatcher,
    eps: f64,
    matching: Matching,
    phase_len: usize,
    left: usize,
    rebuilds: u64,
}

impl DynMcm {
    pub fn new(family: ShapeFamily, eps: f64) -> Result<Self, MatchingError> {
        check_eps(eps)?;
        Ok(DynMcm {
            matcher: BipartiteMatcher::new(family)?,
            eps,
            matching: Matching::new(),
            phase_len: 1,
            left: 1,
            rebuilds: 0,
        })
    }

    pub fn update(&mut self, u: Update) -> Result<(), MatchingError> {
        self.matcher.apply(u)?;
        if let Update::Delete(id) = u {
            self.matching.remove(id);
        }
        self.left -= 1;
        if self.left == 0 {
            self.matching = self.matcher.approx_mcm(self.eps)?;
            self.phase_len =
                ((self.eps * self.matcher.maximal().len().max(1) as f64).ceil() as usize).max(1);
            self.left = self.phase_len;
            self.rebuilds += 1;
        }
        Ok(())
    }

    pub fn matching(&self) -> &Matching {
        &self.matching
    }

    pub fn matcher(&self) -> &BipartiteMatcher {
        &self.matcher
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }

    pub fn phase_len(&self) -> usize {
        self.phase_len
    }
}
