//! Dynamic intersection-detection stores.
//!
//! A [`DetectStore`] holds a set of live objects of one shape family and
//! answers "give me some live object that intersects `q`". Three backends
//! share the same contract and are cross-checked against [`Backend::NaiveScan`]
//! in tests.

mod grid;
mod naive;
pub(crate) mod range_tree;

use std::cell::Cell;

use thiserror::Error;

use crate::geometry::{check_compatible, GeomError, GeomObject, ObjectId, Shape, ShapeFamily};

pub use grid::GRID_CELL_BOUND;
pub use range_tree::{DominanceIndex, MAX_KEYS};

use grid::GridStore;
use naive::NaiveStore;
use range_tree::BoxRangeStore;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    NaiveScan,
    BoxRangeTree,
    DiskGridHierarchy,
}

impl Backend {
    /// The sublinear backend for a family.
    pub fn preferred(family: ShapeFamily) -> Backend {
        match family {
            ShapeFamily::Disk => Backend::DiskGridHierarchy,
            ShapeFamily::Box(_) => Backend::BoxRangeTree,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DetectError {
    #[error("object {0} is already live")]
    DuplicateId(ObjectId),
    #[error("object {0} is not live")]
    UnknownId(ObjectId),
    #[error("backend {backend:?} cannot store {family} objects")]
    UnsupportedFamily {
        backend: Backend,
        family: ShapeFamily,
    },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Probe counters. `cells` counts grid cells (grid backend) or visited
/// canonical nodes (range tree); `candidates` counts predicate evaluations.
#[derive(Debug, Default, Clone)]
pub struct ProbeStats {
    pub queries: Cell<u64>,
    pub cells: Cell<u64>,
    pub last_cells: Cell<u64>,
    pub max_cells: Cell<u64>,
    pub candidates: Cell<u64>,
}

impl ProbeStats {
    pub(crate) fn record_query(&self, cells: u64) {
        self.queries.set(self.queries.get() + 1);
        self.cells.set(self.cells.get() + cells);
        self.last_cells.set(cells);
        self.max_cells.set(self.max_cells.get().max(cells));
    }

    pub(crate) fn add_candidates(&self, n: u64) {
        self.candidates.set(self.candidates.get() + n);
    }
}

enum Inner {
    Naive(NaiveStore),
    Range(BoxRangeStore),
    Grid(GridStore),
}

pub struct DetectStore {
    family: ShapeFamily,
    backend: Backend,
    inner: Inner,
    stats: ProbeStats,
}

impl std::fmt::Debug for DetectStore {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DetectStore")
            .field("family", &self.family)
            .field("backend", &self.backend)
            .field("len", &self.len())
            .finish()
    }
}

impl DetectStore {
    pub fn new(backend: Backend, family: ShapeFamily) -> Result<Self, DetectError> {
        let inner = match (backend, family) {
            (Backend::NaiveScan, _) => Inner::Naive(NaiveStore::default()),
            (Backend::BoxRangeTree, ShapeFamily::Box(d)) => Inner::Range(BoxRangeStore::new(d)),
            (Backend::DiskGridHierarchy, ShapeFamily::Disk) => Inner::Grid(GridStore::default()),
            _ => return Err(DetectError::UnsupportedFamily { backend, family }),
        };
        Ok(DetectStore {
            family,
            backend,
            inner,
            stats: ProbeStats::default(),
        })
    }

    /// Bulk construction; cheaper than repeated inserts for the range tree.
    pub fn from_shapes<I>(
        backend: Backend,
        family: ShapeFamily,
        items: I,
    ) -> Result<Self, DetectError>
    where
        I: IntoIterator<Item = (ObjectId, Shape)>,
    {
        let mut store = Self::new(backend, family)?;
        let items: Vec<(ObjectId, Shape)> = items.into_iter().collect();
        for (_, s) in &items {
            check_compatible(family, s.family())?;
        }
        match &mut store.inner {
            Inner::Range(r) => r.bulk_load(items)?,
            _ => {
                for (id, s) in items {
                    store.insert(id, &s)?;
                }
            }
        }
        Ok(store)
    }

    pub fn family(&self) -> ShapeFamily {
        self.family
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn len(&self) -> usize {
        match &self.inner {
            Inner::Naive(s) => s.len(),
            Inner::Range(s) => s.len(),
            Inner::Grid(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        match &self.inner {
            Inner::Naive(s) => s.contains(id),
            Inner::Range(s) => s.contains(id),
            Inner::Grid(s) => s.contains(id),
        }
    }

    pub fn stats(&self) -> &ProbeStats {
        &self.stats
    }

    pub fn insert(&mut self, id: ObjectId, shape: &Shape) -> Result<(), DetectError> {
        check_compatible(self.family, shape.family())?;
        if self.contains(id) {
            return Err(DetectError::DuplicateId(id));
        }
        match &mut self.inner {
            Inner::Naive(s) => s.insert(id, *shape),
            Inner::Range(s) => s.insert(id, shape),
            Inner::Grid(s) => s.insert(id, shape),
        }
        Ok(())
    }

    pub fn insert_object(&mut self, obj: &GeomObject) -> Result<(), DetectError> {
        self.insert(obj.id, &obj.shape)
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<(), DetectError> {
        let found = match &mut self.inner {
            Inner::Naive(s) => s.delete(id),
            Inner::Range(s) => s.delete(id),
            Inner::Grid(s) => s.delete(id),
        };
        if found {
            Ok(())
        } else {
            Err(DetectError::UnknownId(id))
        }
    }

    /// Some live object intersecting `q`, if any.
    pub fn query_witness(&self, q: &Shape) -> Result<Option<ObjectId>, DetectError> {
        self.query_witness_where(q, |_| true)
    }

    /// Some live object intersecting `q` for which `accept` returns true.
    ///
    /// Candidates are offered to `accept` in an unspecified order; a filter
    /// that rejects only a few ids costs only a few extra candidates.
    pub fn query_witness_where<F>(
        &self,
        q: &Shape,
        mut accept: F,
    ) -> Result<Option<ObjectId>, DetectError>
    where
        F: FnMut(ObjectId) -> bool,
    {
        check_compatible(self.family, q.family())?;
        Ok(self.find(q, &mut accept))
    }

    /// Unchecked query: the caller guarantees `q` matches the store family.
    pub(crate) fn find(
        &self,
        q: &Shape,
        accept: &mut dyn FnMut(ObjectId) -> bool,
    ) -> Option<ObjectId> {
        match &self.inner {
            Inner::Naive(s) => s.find(q, accept, &self.stats),
            Inner::Range(s) => s.find(q, accept, &self.stats),
            Inner::Grid(s) => s.find(q, accept, &self.stats),
        }
    }

    /// Ids of all live objects (unordered).
    pub fn ids(&self) -> Vec<ObjectId> {
        match &self.inner {
            Inner::Naive(s) => s.ids(),
            Inner::Range(s) => s.ids(),
            Inner::Grid(s) => s.ids(),
        }
    }

    /// Number of radius classes spanned (grid backend), used to bound probe counts.
    pub fn class_span(&self) -> Option<usize> {
        match &self.inner {
            Inner::Grid(s) => s.class_span(),
            _ => None,
        }
    }
}
