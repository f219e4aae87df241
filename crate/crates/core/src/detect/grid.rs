//! Hierarchy of uniform grids over disk centres, one level per radius class.
//!
//! A disk of radius `r` has class `c = floor(log2 r)`. The cumulative grid of
//! class `c` holds every disk of class at most `c`; the exact grid of class
//! `c` holds only disks of that class. Grid cells of class `c` have side
//! `2^(c+2)`, so every probe touches a constant number of cells.

use crate::HashMap;
use std::collections::BTreeMap;

use super::ProbeStats;
use crate::geometry::{ObjectId, Shape};

/// Upper bound on cells inspected per radius class by a single query.
pub const GRID_CELL_BOUND: u64 = 16;

#[derive(Clone, Copy)]
struct Rec {
    center: [f64; 2],
    radius: f64,
    class: i32,
}

fn radius_class(r: f64) -> i32 {
    let mut c = r.log2().floor() as i32;
    while 2f64.powi(c) > r {
        c -= 1;
    }
    while 2f64.powi(c + 1) <= r {
        c += 1;
    }
    c
}

struct Grid {
    inv: f64,
    cells: HashMap<(i64, i64), Vec<(ObjectId, [f64; 2], f64)>>,
}

impl Grid {
    fn new(class: i32) -> Self {
        Grid {
            inv: 1.0 / 2f64.powi(class + 2),
            cells: HashMap::default(),
        }
    }

    fn key(&self, p: [f64; 2]) -> (i64, i64) {
        (
            (p[0] * self.inv).floor() as i64,
            (p[1] * self.inv).floor() as i64,
        )
    }

    fn add(&mut self, id: ObjectId, r: &Rec) {
        let k = self.key(r.center);
        self.cells
            .entry(k)
            .or_default()
            .push((id, r.center, r.radius));
    }

    fn remove(&mut self, id: ObjectId, r: &Rec) {
        let k = self.key(r.center);
        if let Some(v) = self.cells.get_mut(&k) {
            if let Some(i) = v.iter().position(|e| e.0 == id) {
                v.swap_remove(i);
            }
            if v.is_empty() {
                self.cells.remove(&k);
            }
        }
    }

    /// Scan disks whose centre lies within `reach` (Chebyshev) of `qc`.
    fn probe(
        &self,
        qc: [f64; 2],
        qr: f64,
        reach: f64,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        cells: &mut u64,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        let reach = reach * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let (x0, y0) = self.key([qc[0] - reach, qc[1] - reach]);
        let (x1, y1) = self.key([qc[0] + reach, qc[1] + reach]);
        let span = ((x1 - x0 + 1) as u128) * ((y1 - y0 + 1) as u128);
        let mut test = |bucket: &Vec<(ObjectId, [f64; 2], f64)>| {
            for &(id, c, r) in bucket {
                *seen += 1;
                let dx = c[0] - qc[0];
                let dy = c[1] - qc[1];
                let rs = r + qr;
                if dx * dx + dy * dy <= rs * rs && accept(id) {
                    return Some(id);
                }
            }
            None
        };
        if span > self.cells.len() as u128 {
            for bucket in self.cells.values() {
                *cells += 1;
                if let Some(id) = test(bucket) {
                    return Some(id);
                }
            }
            return None;
        }
        for x in x0..=x1 {
            for y in y0..=y1 {
                *cells += 1;
                if let Some(bucket) = self.cells.get(&(x, y)) {
                    if let Some(id) = test(bucket) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }
}

#[derive(Default)]
pub(crate) struct GridStore {
    disks: HashMap<ObjectId, Rec>,
    cumulative: BTreeMap<i32, Grid>,
    exact: BTreeMap<i32, Grid>,
}

impl GridStore {
    pub fn len(&self) -> usize {
        self.disks.len()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.disks.contains_key(&id)
    }

    pub fn class_span(&self) -> Option<usize> {
        let lo = *self.cumulative.keys().next()?;
        let hi = *self.cumulative.keys().next_back()?;
        Some((hi - lo + 1) as usize)
    }

    fn ensure_class(&mut self, c: i32) {
        match (
            self.cumulative.keys().next().copied(),
            self.cumulative.keys().next_back().copied(),
        ) {
            (None, _) | (_, None) => {
                self.cumulative.insert(c, Grid::new(c));
            }
            (Some(lo), Some(hi)) => {
                for k in c..lo {
                    self.cumulative.insert(k, Grid::new(k));
                }
                for k in (hi + 1)..=c {
                    let mut g = Grid::new(k);
                    for (id, r) in &self.disks {
                        g.add(*id, r);
                    }
                    self.cumulative.insert(k, g);
                }
            }
        }
        self.exact.entry(c).or_insert_with(|| Grid::new(c));
    }

    pub fn insert(&mut self, id: ObjectId, shape: &Shape) {
        let Shape::Disk { center, radius } = *shape else {
            unreachable!("grid store holds disks only");
        };
        let rec = Rec {
            center,
            radius,
            class: radius_class(radius),
        };
        self.ensure_class(rec.class);
        for (_, g) in self.cumulative.range_mut(rec.class..) {
            g.add(id, &rec);
        }
        self.exact
            .get_mut(&rec.class)
            .expect("exact grid exists")
            .add(id, &rec);
        self.disks.insert(id, rec);
    }

    pub fn delete(&mut self, id: ObjectId) -> bool {
        let Some(rec) = self.disks.remove(&id) else {
            return false;
        };
        for (_, g) in self.cumulative.range_mut(rec.class..) {
            g.remove(id, &rec);
        }
        if let Some(g) = self.exact.get_mut(&rec.class) {
            g.remove(id, &rec);
        }
        if self.disks.is_empty() {
            self.cumulative.clear();
            self.exact.clear();
        }
        true
    }

    pub fn find(
        &self,
        q: &Shape,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        stats: &ProbeStats,
    ) -> Option<ObjectId> {
        let Shape::Disk {
            center: qc,
            radius: qr,
        } = *q
        else {
            unreachable!("grid store holds disks only");
        };
        let mut cells = 0u64;
        let mut seen = 0u64;
        let hit = self.search(qc, qr, accept, &mut cells, &mut seen);
        stats.record_query(cells);
        stats.add_candidates(seen);
        hit
    }

    fn search(
        &self,
        qc: [f64; 2],
        qr: f64,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        cells: &mut u64,
        seen: &mut u64,
    ) -> Option<ObjectId> {
        let (Some(&lo), Some(&hi)) = (
            self.cumulative.keys().next(),
            self.cumulative.keys().next_back(),
        ) else {
            return None;
        };
        let own = radius_class(qr).max(lo);
        let reach_for = |c: i32| qr + 2f64.powi(c + 1);
        if own > hi {
            return self.cumulative[&hi].probe(qc, qr, reach_for(hi), accept, cells, seen);
        }
        if let Some(id) = self.cumulative[&own].probe(qc, qr, reach_for(own), accept, cells, seen) {
            return Some(id);
        }
        for (&c, g) in self.exact.range((own + 1)..) {
            if let Some(id) = g.probe(qc, qr, reach_for(c), accept, cells, seen) {
                return Some(id);
            }
        }
        None
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.disks.keys().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_class_is_floor_log2() {
        assert_eq!(radius_class(1.0), 0);
        assert_eq!(radius_class(1.999), 0);
        assert_eq!(radius_class(2.0), 1);
        assert_eq!(radius_class(0.5), -1);
        assert_eq!(radius_class(0.3), -2);
        assert_eq!(radius_class(1024.0), 10);
    }

    #[test]
    fn large_query_against_small_disks() {
        let mut g = GridStore::default();
        g.insert(1, &Shape::disk(100.0, 0.0, 0.01).unwrap());
        let stats = ProbeStats::default();
        let q = Shape::disk(0.0, 0.0, 100.0).unwrap();
        assert_eq!(g.find(&q, &mut |_| true, &stats), Some(1));
        let q = Shape::disk(0.0, 0.0, 99.98).unwrap();
        assert_eq!(g.find(&q, &mut |_| true, &stats), None);
    }
}
