//! Approximate maximum matching in general (non-bipartite) intersection
//! graphs by color coding.
//!
//! A family of label subsets `Z` separates every small pair of disjoint label
//! sets. For each `Z` the bipartite subgraph `G_Z` (edges between `Z` and its
//! complement) is searched with the layered augmenting-path procedure; after
//! all subsets the collected paths form a maximal set in `G`.

use crate::{HashMap, HashSet};
use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::detect::{Backend, DetectError, DetectStore};
use crate::geometry::{
    check_compatible, GeomError, GeomObject, ObjectId, Shape, ShapeFamily, Update,
};
use crate::matching::{
    check_eps, rounds, Exposed, Matching, MatchingError, Member, PathSearch, SearchStats,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeneralMatchingError {
    #[error("color family needs n >= 1 and ell >= 1, got n = {n}, ell = {ell}")]
    BadFamilyParams { n: usize, ell: usize },
    #[error("no separating family found for n = {n}, ell = {ell} within the retry budget")]
    VerificationFailed { n: usize, ell: usize },
    #[error("object {0} is already live")]
    DuplicateId(ObjectId),
    #[error("object {0} is not live")]
    UnknownId(ObjectId),
    #[error("eps must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Detect(#[from] DetectError),
}

impl From<MatchingError> for GeneralMatchingError {
    fn from(e: MatchingError) -> Self {
        match e {
            MatchingError::DuplicateId(id) => Self::DuplicateId(id),
            MatchingError::UnknownId(id) | MatchingError::MissingSide(id) => Self::UnknownId(id),
            MatchingError::BadEps(e) => Self::BadEps(e),
            MatchingError::Geom(g) => Self::Geom(g),
            MatchingError::Detect(d) => Self::Detect(d),
        }
    }
}

/// Largest universe and parameter for which construction is exhaustively verified.
pub const VERIFY_MAX_N: usize = 16;
pub const VERIFY_MAX_ELL: usize = 4;
const RETRIES: u64 = 16;

/// Subsets `Z ⊆ [n]` such that for all disjoint `A, B` with
/// `|A| + |B| <= ell` some `Z` contains `A` and misses `B`.
#[derive(Debug, Clone)]
pub struct ColorFamily {
    pub n: usize,
    pub ell: usize,
    /// Seed of the accepted draw.
    pub seed: u64,
    /// Set once the exhaustive separation check has passed.
    pub verified: bool,
    words: usize,
    subsets: Vec<u64>,
    /// Transposed membership: for each label, a bitset over subset indices.
    columns: Vec<u64>,
}

/// `ceil(2^ell (ell + 2) ln max(n, 2))`.
pub fn family_size(n: usize, ell: usize) -> usize {
    ((1u64 << ell) as f64 * (ell + 2) as f64 * (n.max(2) as f64).ln()).ceil() as usize
}

impl ColorFamily {
    fn random(n: usize, ell: usize, seed: u64) -> Self {
        let words = n.div_ceil(64);
        let m = family_size(n, ell);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut subsets = vec![0u64; m * words];
        for w in 0..words {
            let bits = (n - 64 * w).min(64);
            let mask = if bits == 64 {
                u64::MAX
            } else {
                (1u64 << bits) - 1
            };
            for z in 0..m {
                subsets[z * words + w] = rng.gen::<u64>() & mask;
            }
        }
        let zwords = m.div_ceil(64);
        let mut columns = vec![0u64; n * zwords];
        for z in 0..m {
            for label in 0..n {
                if subsets[z * words + label / 64] >> (label % 64) & 1 == 1 {
                    columns[label * zwords + z / 64] |= 1 << (z % 64);
                }
            }
        }
        ColorFamily {
            n,
            ell,
            seed,
            verified: false,
            words,
            subsets,
            columns,
        }
    }

    /// Bitset over subset indices of the subsets containing `label`.
    fn column(&self, label: usize) -> &[u64] {
        let zwords = self.len().div_ceil(64);
        &self.columns[label * zwords..(label + 1) * zwords]
    }

    /// Number of subsets.
    pub fn len(&self) -> usize {
        self.subsets.len() / self.words.max(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn contains(&self, z: usize, label: usize) -> bool {
        self.subsets[z * self.words + label / 64] >> (label % 64) & 1 == 1
    }

    /// Does some subset contain `a` and miss `b`?
    pub fn separates(&self, a: &[usize], b: &[usize]) -> bool {
        (0..self.len()).any(|z| {
            a.iter().all(|&x| self.contains(z, x)) && b.iter().all(|&x| !self.contains(z, x))
        })
    }

    /// Exhaustive check over all disjoint pairs: for every label set `T` of
    /// size at most `ell`, the traces `Z ∩ T` must realise all `2^|T|` subsets.
    pub fn check_exhaustive(&self) -> bool {
        assert!(self.n <= 32, "exhaustive check is for small universes");
        let traces: Vec<u32> = (0..self.len())
            .map(|z| self.subsets[z * self.words] as u32)
            .collect();
        let full = if self.n == 32 {
            u32::MAX
        } else {
            (1u32 << self.n) - 1
        };
        let mut t: u32 = 0;
        loop {
            if (t.count_ones() as usize) <= self.ell {
                let k = t.count_ones();
                let mut seen = vec![false; 1 << k];
                for &z in &traces {
                    seen[compress(z & t, t)] = true;
                }
                if seen.iter().any(|s| !s) {
                    return false;
                }
            }
            if t == full {
                return true;
            }
            t += 1;
        }
    }

    /// Checks `samples` random disjoint pairs of total size `ell`.
    pub fn check_sampled(&self, samples: usize, seed: u64) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = self.ell.min(self.n);
        (0..samples).all(|_| {
            let picked = rand::seq::index::sample(&mut rng, self.n, k).into_vec();
            let cut = rng.gen_range(0..=k);
            self.separates(&picked[..cut], &picked[cut..])
        })
    }
}

/// Packs the bits of `x` selected by `mask` into the low bits.
fn compress(x: u32, mask: u32) -> usize {
    let (mut out, mut bit, mut m) = (0usize, 0, mask);
    while m != 0 {
        let low = m & m.wrapping_neg();
        if x & low != 0 {
            out |= 1 << bit;
        }
        bit += 1;
        m ^= low;
    }
    out
}

/// Random family of [`family_size`] subsets; for `n <= 16`, `ell <= 4` the
/// separation property is verified exhaustively and failed draws are redrawn.
pub fn build_color_family(
    n: usize,
    ell: usize,
    seed: u64,
) -> Result<ColorFamily, GeneralMatchingError> {
    if n == 0 || ell == 0 {
        return Err(GeneralMatchingError::BadFamilyParams { n, ell });
    }
    if n > VERIFY_MAX_N || ell > VERIFY_MAX_ELL {
        return Ok(ColorFamily::random(n, ell, seed));
    }
    for attempt in 0..RETRIES {
        let mut f = ColorFamily::random(
            n,
            ell,
            seed.wrapping_add(attempt.wrapping_mul(0x9e37_79b9_7f4a_7c15)),
        );
        if f.check_exhaustive() {
            f.verified = true;
            return Ok(f);
        }
    }
    Err(GeneralMatchingError::VerificationFailed { n, ell })
}

// ---------------------------------------------------------------------------

/// Exposed set: one store, queries filtered by `Z`-membership.
struct FilteredExposed<'s> {
    store: &'s mut DetectStore,
    class: &'s dyn Fn(ObjectId) -> usize,
    removed: &'s mut Vec<ObjectId>,
}

impl Exposed for FilteredExposed<'_> {
    fn find(&self, q: &Shape, class: usize) -> Option<ObjectId> {
        let cls = self.class;
        self.store.find(q, &mut |id| cls(id) == class)
    }

    fn remove(&mut self, id: ObjectId) {
        if self.store.delete(id).is_ok() {
            self.removed.push(id);
        }
    }
}

/// Smallest label universe kept by the relabelling rule.
pub const MIN_LABELS: usize = 8;

/// Live objects with labels in `[n]`, a maximal matching maintained online
/// and the color family for `ell = 2L + 2`, `L = ceil(1/eps)`.
pub struct GeneralMatcher {
    family: ShapeFamily,
    eps: f64,
    seed: u64,
    objects: HashMap<ObjectId, GeomObject>,
    labels: HashMap<ObjectId, usize>,
    free_labels: BTreeSet<usize>,
    colors: ColorFamily,
    m0: Matching,
    free: DetectStore,
    all: DetectStore,
    stats: SearchStats,
    resizes: u64,
    subsets_searched: u64,
}

impl GeneralMatcher {
    pub fn new(family: ShapeFamily, eps: f64, seed: u64) -> Result<Self, GeneralMatchingError> {
        check_eps(eps)?;
        let backend = Backend::preferred(family);
        let ell = 2 * rounds(eps) + 2;
        Ok(GeneralMatcher {
            family,
            eps,
            seed,
            objects: HashMap::default(),
            labels: HashMap::default(),
            free_labels: (0..MIN_LABELS).collect(),
            colors: build_color_family(MIN_LABELS, ell, seed)?,
            m0: Matching::new(),
            free: DetectStore::new(backend, family)?,
            all: DetectStore::new(backend, family)?,
            stats: SearchStats::default(),
            resizes: 0,
            subsets_searched: 0,
        })
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

    pub fn maximal(&self) -> &Matching {
        &self.m0
    }

    pub fn colors(&self) -> &ColorFamily {
        &self.colors
    }

    /// Label universe size `n`.
    pub fn capacity(&self) -> usize {
        self.colors.n
    }

    pub fn label(&self, id: ObjectId) -> Option<usize> {
        self.labels.get(&id).copied()
    }

    /// Number of relabelling rebuilds (doublings and halvings).
    pub fn resizes(&self) -> u64 {
        self.resizes
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    /// Subsets `Z` on which the layered search actually ran.
    pub fn subsets_searched(&self) -> u64 {
        self.subsets_searched
    }

    pub fn apply(&mut self, u: Update) -> Result<(), GeneralMatchingError> {
        match u {
            Update::Insert(o) => self.insert(o),
            Update::Delete(id) => self.delete(id),
        }
    }

    pub fn insert(&mut self, obj: GeomObject) -> Result<(), GeneralMatchingError> {
        check_compatible(self.family, obj.shape.family())?;
        if self.objects.contains_key(&obj.id) {
            return Err(GeneralMatchingError::DuplicateId(obj.id));
        }
        self.objects.insert(obj.id, obj);
        if self.objects.len() > self.capacity() {
            return self.rebuild(2 * self.capacity());
        }
        let label = self
            .free_labels
            .pop_first()
            .expect("a free label below capacity");
        self.labels.insert(obj.id, label);
        self.all.insert(obj.id, &obj.shape)?;
        self.settle(obj.id);
        Ok(())
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<(), GeneralMatchingError> {
        self.objects
            .remove(&id)
            .ok_or(GeneralMatchingError::UnknownId(id))?;
        let label = self.labels.remove(&id).expect("labelled object");
        self.free_labels.insert(label);
        self.all.delete(id)?;
        match self.m0.remove(id) {
            Some(partner) => self.settle(partner),
            None => self.free.delete(id)?,
        }
        if self.capacity() > MIN_LABELS && self.objects.len() < self.capacity() / 4 {
            self.rebuild(self.capacity() / 2)?;
        }
        Ok(())
    }

    fn settle(&mut self, id: ObjectId) {
        let shape = self.objects[&id].shape;
        match self.free.find(&shape, &mut |_| true) {
            Some(w) => {
                self.free.delete(w).expect("free object");
                self.m0.pair(id, w);
            }
            None => self
                .free
                .insert(id, &shape)
                .expect("unmatched object not yet free"),
        }
    }

    /// Relabels all objects into `[cap]` and rebuilds every structure.
    fn rebuild(&mut self, cap: usize) -> Result<(), GeneralMatchingError> {
        self.resizes += 1;
        let mut ids: Vec<ObjectId> = self.objects.keys().copied().collect();
        ids.sort_unstable();
        self.colors = build_color_family(cap, 2 * rounds(self.eps) + 2, self.seed)?;
        self.labels = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        self.free_labels = (ids.len()..cap).collect();
        let backend = Backend::preferred(self.family);
        self.all = DetectStore::from_shapes(
            backend,
            self.family,
            ids.iter().map(|&id| (id, self.objects[&id].shape)),
        )?;
        self.free = DetectStore::new(backend, self.family)?;
        self.m0 = Matching::new();
        for id in ids {
            self.settle(id);
        }
        Ok(())
    }

    /// For each layer `i`, the matched vertices that can be `u_i` on some
    /// augmenting walk of length `2 ell + 1` avoiding `used`, ignoring colors.
    fn walk_layers(
        &self,
        m: &Matching,
        ell: usize,
        exposed: &DetectStore,
        used: &HashSet<ObjectId>,
    ) -> Result<Vec<Vec<ObjectId>>, DetectError> {
        let backend = Backend::preferred(self.family);
        let shape = |id: ObjectId| &self.objects[&id].shape;
        let vm: Vec<ObjectId> = m
            .vertices()
            .into_iter()
            .filter(|v| !used.contains(v))
            .collect();
        let store_of = |ids: &[ObjectId]| {
            DetectStore::from_shapes(backend, self.family, ids.iter().map(|&id| (id, *shape(id))))
        };
        let mut fwd: Vec<Vec<ObjectId>> = Vec::with_capacity(ell);
        fwd.push(
            vm.iter()
                .copied()
                .filter(|&u| exposed.find(shape(u), &mut |_| true).is_some())
                .collect(),
        );
        for i in 1..ell {
            let mut t = store_of(&vm)?;
            let mut next = Vec::new();
            for &u in &fwd[i - 1] {
                let v = m.partner(u).expect("matched");
                while let Some(w) = t.find(shape(v), &mut |id| id != u && id != v) {
                    t.delete(w)?;
                    next.push(w);
                }
            }
            next.sort_unstable();
            fwd.push(next);
        }
        let mut back = vec![Vec::new(); ell];
        back[ell - 1] = fwd[ell - 1]
            .iter()
            .copied()
            .filter(|&u| {
                exposed
                    .find(shape(m.partner(u).expect("matched")), &mut |_| true)
                    .is_some()
            })
            .collect();
        for i in (0..ell - 1).rev() {
            let t = store_of(&back[i + 1])?;
            back[i] = fwd[i]
                .iter()
                .copied()
                .filter(|&u| {
                    let v = m.partner(u).expect("matched");
                    t.find(shape(v), &mut |id| id != u && id != v).is_some()
                })
                .collect();
        }
        Ok(back)
    }

    /// Maximal set of vertex-disjoint augmenting paths of length `2 ell + 1`
    /// in `G`, assuming none shorter exist. Requires `2 ell + 2 <= family.ell`.
    pub fn maximal_aug_paths_general(
        &mut self,
        m: &Matching,
        ell: usize,
    ) -> Result<Vec<Vec<ObjectId>>, GeneralMatchingError> {
        assert!(
            2 * ell + 2 <= self.colors.ell,
            "color family too weak for ell = {ell}"
        );
        let matched = m.vertices();
        let mut removed: Vec<ObjectId> = Vec::new();
        for &v in &matched {
            if self.all.delete(v).is_ok() {
                removed.push(v);
            }
        }
        let mut all = std::mem::replace(
            &mut self.all,
            DetectStore::new(Backend::NaiveScan, self.family)?,
        );
        let result = self.search_subsets(m, ell, &mut all, &mut removed);
        for id in removed {
            all.insert(id, &self.objects[&id].shape)?;
        }
        self.all = all;
        result
    }

    /// Subsets in which every layer holds a matched edge with endpoints of
    /// different classes.
    fn candidates(&self, m: &Matching, layers: &[Vec<ObjectId>]) -> Vec<u64> {
        let zwords = self.colors.len().div_ceil(64);
        let mut all = vec![u64::MAX; zwords];
        for layer in layers {
            let mut any = vec![0u64; zwords];
            for &u in layer {
                let v = m.partner(u).expect("matched");
                let (a, b) = (
                    self.colors.column(self.labels[&u]),
                    self.colors.column(self.labels[&v]),
                );
                for w in 0..zwords {
                    any[w] |= a[w] ^ b[w];
                }
            }
            for w in 0..zwords {
                all[w] &= any[w];
            }
        }
        all
    }

    /// Layer vertices with their shapes and the labels of both endpoints
    /// of their matched edge.
    fn labelled(
        &self,
        m: &Matching,
        layers: &[Vec<ObjectId>],
    ) -> Vec<Vec<(ObjectId, Shape, usize, usize)>> {
        layers
            .iter()
            .map(|l| {
                l.iter()
                    .map(|&u| {
                        let v = m.partner(u).expect("matched");
                        (u, self.objects[&u].shape, self.labels[&u], self.labels[&v])
                    })
                    .collect()
            })
            .collect()
    }

    fn search_subsets(
        &mut self,
        m: &Matching,
        ell: usize,
        exposed: &mut DetectStore,
        removed: &mut Vec<ObjectId>,
    ) -> Result<Vec<Vec<ObjectId>>, GeneralMatchingError> {
        let mut gamma: Vec<Vec<ObjectId>> = Vec::new();
        let mut used: HashSet<ObjectId> = HashSet::default();
        let mut layers = self.walk_layers(m, ell, exposed, &used)?;
        let mut cand = self.candidates(m, &layers);
        let mut labelled = self.labelled(m, &layers);
        let total = self.colors.len();
        let mut z = 0;
        while z < total {
            if layers.iter().any(|l| l.is_empty()) {
                break;
            }
            let word = cand[z / 64] >> (z % 64);
            if word == 0 {
                z = (z / 64 + 1) * 64;
                continue;
            }
            z += word.trailing_zeros() as usize;
            if z >= total {
                break;
            }
            let colors = &self.colors;
            let labels = &self.labels;
            let zi = z;
            let class = move |id: ObjectId| colors.contains(zi, labels[&id]) as usize;
            let crossing: Vec<Vec<Member>> = labelled
                .iter()
                .map(|l| {
                    l.iter()
                        .filter(|e| colors.contains(zi, e.2) != colors.contains(zi, e.3))
                        .map(|&(u, shape, lu, _)| (u, shape, colors.contains(zi, lu) as usize))
                        .collect()
                })
                .collect();
            let order: Vec<ObjectId> = crossing[0].iter().map(|e| e.0).collect();
            self.subsets_searched += 1;
            let mut search =
                PathSearch::new(&self.objects, m, &class, ell, self.family, &crossing)?;
            let mut fx = FilteredExposed {
                store: exposed,
                class: &class,
                removed,
            };
            search.run(&mut fx, &order);
            self.stats.absorb(&search.stats);
            let found = !search.paths.is_empty();
            for p in search.paths {
                used.extend(p.iter().copied());
                gamma.push(p);
            }
            if found {
                layers = self.walk_layers(m, ell, exposed, &used)?;
                cand = self.candidates(m, &layers);
                labelled = self.labelled(m, &layers);
            }
            z += 1;
        }
        Ok(gamma)
    }

    /// Starting from `M0`, rounds `ell = 1..=ceil(1/eps)` of augmentation.
    pub fn approx_mcm_general(&mut self) -> Result<Matching, GeneralMatchingError> {
        self.approx_mcm_traced(|_, _, _| {})
    }

    pub fn approx_mcm_traced<F>(&mut self, mut observe: F) -> Result<Matching, GeneralMatchingError>
    where
        F: FnMut(usize, &Matching, &[Vec<ObjectId>]),
    {
        let mut m = self.m0.clone();
        for ell in 1..=rounds(self.eps) {
            let paths = self.maximal_aug_paths_general(&m, ell)?;
            for p in &paths {
                m.augment(p);
            }
            observe(ell, &m, &paths);
        }
        Ok(m)
    }
}

/// Dynamic general matching with the same phase rule as the bipartite wrapper.
pub struct DynGeneralMcm {
    matcher: GeneralMatcher,
    eps: f64,
    matching: Matching,
    phase_len: usize,
    left: usize,
    rebuilds: u64,
}

impl DynGeneralMcm {
    pub fn new(family: ShapeFamily, eps: f64, seed: u64) -> Result<Self, GeneralMatchingError> {
        Ok(DynGeneralMcm {
            matcher: GeneralMatcher::new(family, eps, seed)?,
            eps,
            matching: Matching::new(),
            phase_len: 1,
            left: 1,
            rebuilds: 0,
        })
    }

    pub fn update(&mut self, u: Update) -> Result<(), GeneralMatchingError> {
        self.matcher.apply(u)?;
        if let Update::Delete(id) = u {
            self.matching.remove(id);
        }
        self.left -= 1;
        if self.left == 0 {
            self.matching = self.matcher.approx_mcm_general()?;
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

    pub fn matcher(&self) -> &GeneralMatcher {
        &self.matcher
    }

    pub fn rebuilds(&self) -> u64 {
        self.rebuilds
    }
}
