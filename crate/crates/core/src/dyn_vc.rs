//! Dynamic approximate vertex cover.
//!
//! Updates are applied lazily to the current cover (inserted objects join
//! it, deleted ones leave it). Once per phase of `ceil(eps b)` updates the
//! cover is recomputed: fractional cover by multiplicative weights, kernel,
//! static algorithm on the kernel, lift. `b` is a power-of-two guess of the
//! optimum steered by a maximal matching `M0`.

use crate::HashMap;
use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::geometry::{GeomError, GeomObject, ObjectId, ShapeFamily, Update};
use crate::lp_kernel::{
    build_kernel, check_kernel_cover, lift_cover, solve_fractional_vc, LpError,
};
use crate::matching::{MatchingError, MaximalMatching};
use crate::minpair::{BichromaticStore, MinPairError, PairStore, WeightedStore};
use crate::static_vc::{StaticError, StaticSolver};

/// Largest kernel gamma accepted by the presets.
pub const GAMMA_CAP: f64 = 0.225;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynVcError {
    #[error("eps must lie in (0, 1), got {0}")]
    BadEps(f64),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("need 0 < delta < gamma < 1/4, got delta={delta}, gamma={gamma}")]
    BadParams { gamma: f64, delta: f64 },
    #[error(transparent)]
    Store(#[from] MinPairError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Static(#[from] StaticError),
    #[error(transparent)]
    Matching(#[from] MatchingError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Static algorithm run on the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Engine {
    Fat,
    Rect,
    Bipartite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VcParams {
    pub eps: f64,
    pub gamma: f64,
    pub delta: f64,
    pub engine: Engine,
}

impl VcParams {
    /// Disks and fat boxes: `gamma = 0.225`, `delta = eps^2`.
    pub fn disks(eps: f64) -> Result<Self, DynVcError> {
        Self::clamped(eps, GAMMA_CAP, eps * eps, Engine::Fat)
    }

    /// Rectangles: as [`disks`](Self::disks) with the rectangle engine.
    pub fn rect(eps: f64) -> Result<Self, DynVcError> {
        Self::clamped(eps, GAMMA_CAP, eps * eps, Engine::Rect)
    }

    /// Two-sided objects: `gamma = eps`, `delta = eps^3`.
    pub fn bipartite(eps: f64) -> Result<Self, DynVcError> {
        Self::clamped(eps, eps, eps * eps * eps, Engine::Bipartite)
    }

    pub fn preset(name: &str, eps: f64) -> Result<Self, DynVcError> {
        match name {
            "disks" | "fat" => Self::disks(eps),
            "rect" => Self::rect(eps),
            "bipartite" => Self::bipartite(eps),
            _ => Err(DynVcError::UnknownPreset(name.to_string())),
        }
    }

    /// `gamma` capped at [`GAMMA_CAP`], `delta` at `gamma / 2`.
    fn clamped(eps: f64, gamma: f64, delta: f64, engine: Engine) -> Result<Self, DynVcError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(DynVcError::BadEps(eps));
        }
        let gamma = gamma.min(GAMMA_CAP);
        VcParams {
            eps,
            gamma,
            delta: delta.min(gamma / 2.0),
            engine,
        }
        .validated()
    }

    pub fn validated(self) -> Result<Self, DynVcError> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(DynVcError::BadEps(self.eps));
        }
        if !(self.delta > 0.0 && self.delta < self.gamma && self.gamma < 0.25) {
            return Err(DynVcError::BadParams {
                gamma: self.gamma,
                delta: self.delta,
            });
        }
        Ok(self)
    }

    fn solver(&self) -> StaticSolver {
        match self.engine {
            Engine::Fat => StaticSolver::Fat { eps: self.eps },
            Engine::Rect => StaticSolver::Rect { eps: self.eps },
            Engine::Bipartite => StaticSolver::Bipartite,
        }
    }

    /// Approximation ratio targeted by the engine, up to `O(eps)`.
    pub fn engine_ratio(&self) -> f64 {
        match self.engine {
            Engine::Fat | Engine::Bipartite => 1.0,
            Engine::Rect => 1.5,
        }
    }
}

/// Counters exposed for amortization checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynVcStats {
    pub updates: u64,
    pub rebuilds: u64,
    pub guess_switches: u64,
    /// Smallest guess `b` any phase ran with.
    pub b_min: usize,
    pub last_kernel: usize,
    pub last_heavy: usize,
    pub mwu_iterations: u64,
    /// Wall time spent in the fractional solver and in the static engine.
    pub lp_time: Duration,
    pub static_time: Duration,
}

/// Lazily maintained cover with periodic rebuilds.
pub struct DynVc {
    params: VcParams,
    store: Box<dyn PairStore>,
    objects: HashMap<ObjectId, GeomObject>,
    estimator: MaximalMatching,
    cover: BTreeSet<ObjectId>,
    b: usize,
    phase_budget: usize,
    updates_in_phase: usize,
    stats: DynVcStats,
}

impl std::fmt::Debug for DynVc {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DynVc")
            .field("params", &self.params)
            .field("len", &self.objects.len())
            .field("b", &self.b)
            .finish()
    }
}

fn guess_for(m0: usize) -> usize {
    m0.max(1).next_power_of_two()
}

impl DynVc {
    pub fn new(family: ShapeFamily, params: VcParams) -> Result<Self, DynVcError> {
        let params = params.validated()?;
        let bipartite = params.engine == Engine::Bipartite;
        let store: Box<dyn PairStore> = if bipartite {
            Box::new(BichromaticStore::for_family(family))
        } else {
            Box::new(WeightedStore::for_family(family))
        };
        let b = guess_for(0);
        Ok(DynVc {
            params,
            store,
            objects: HashMap::default(),
            estimator: MaximalMatching::new(family, bipartite)?,
            cover: BTreeSet::new(),
            b,
            phase_budget: phase_budget(params.eps, b),
            updates_in_phase: 0,
            stats: DynVcStats {
                b_min: b,
                ..DynVcStats::default()
            },
        })
    }

    pub fn params(&self) -> &VcParams {
        &self.params
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

    /// Current guess of the optimum.
    pub fn guess(&self) -> usize {
        self.b
    }

    pub fn phase_budget(&self) -> usize {
        self.phase_budget
    }

    pub fn estimate(&self) -> usize {
        self.estimator.matching().len()
    }

    pub fn stats(&self) -> &DynVcStats {
        &self.stats
    }

    /// Store updates performed by the weighted store.
    pub fn store_updates(&self) -> u64 {
        self.store.store_updates()
    }

    /// Current cover, sorted.
    pub fn cover(&self) -> Vec<ObjectId> {
        self.cover.iter().copied().collect()
    }

    pub fn cover_len(&self) -> usize {
        self.cover.len()
    }

    /// Applies one update; returns whether a rebuild ran.
    pub fn apply(&mut self, u: Update) -> Result<bool, DynVcError> {
        match u {
            Update::Insert(o) => {
                self.estimator.insert(o)?;
                if let Err(e) = self.store.insert_object(&o, 1.0) {
                    self.estimator.delete(o.id).expect("just inserted");
                    return Err(e.into());
                }
                self.objects.insert(o.id, o);
                self.cover.insert(o.id);
            }
            Update::Delete(id) => {
                self.store.delete(id)?;
                self.estimator
                    .delete(id)
                    .expect("estimator holds every live object");
                self.objects.remove(&id);
                self.cover.remove(&id);
            }
        }
        self.stats.updates += 1;
        self.updates_in_phase += 1;
        let m0 = self.estimate();
        if 2 * m0 < self.b || m0 >= 2 * self.b {
            self.b = guess_for(m0);
            self.stats.guess_switches += 1;
            self.rebuild()?;
            return Ok(true);
        }
        if self.updates_in_phase >= self.phase_budget {
            self.rebuild()?;
            return Ok(true);
        }
        Ok(false)
    }

    pub fn insert(&mut self, obj: GeomObject) -> Result<bool, DynVcError> {
        self.apply(Update::Insert(obj))
    }

    pub fn delete(&mut self, id: ObjectId) -> Result<bool, DynVcError> {
        self.apply(Update::Delete(id))
    }

    /// Recomputes the cover from scratch and starts a new phase.
    pub fn rebuild(&mut self) -> Result<(), DynVcError> {
        let started = Instant::now();
        let (frac, attempts) = solve_fractional_vc(self.store.as_mut(), self.params.delta)?;
        self.stats.lp_time += started.elapsed();
        self.stats.mwu_iterations += attempts.iter().map(|a| a.iterations).sum::<u64>();
        let kernel = build_kernel(
            &frac,
            self.store.as_ref(),
            self.params.gamma,
            self.params.delta,
        )?;
        let k_objects: Vec<GeomObject> = kernel.k.iter().map(|id| self.objects[id]).collect();
        let started = Instant::now();
        let s_k = if k_objects.len() < 2 {
            Vec::new()
        } else {
            self.params.solver().cover(&k_objects)?
        };
        self.stats.static_time += started.elapsed();
        check_kernel_cover(&kernel, self.store.as_ref(), &s_k)?;
        self.cover = lift_cover(&kernel, &s_k).into_iter().collect();
        self.stats.rebuilds += 1;
        self.stats.last_kernel = kernel.k.len();
        self.stats.last_heavy = kernel.h.len();
        self.stats.b_min = self.stats.b_min.min(self.b);
        self.phase_budget = phase_budget(self.params.eps, self.b);
        self.updates_in_phase = 0;
        Ok(())
    }
}

fn phase_budget(eps: f64, b: usize) -> usize {
    ((eps * b as f64).ceil() as usize).max(1)
}
