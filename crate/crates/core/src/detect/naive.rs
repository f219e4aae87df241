use crate::HashMap;

use super::ProbeStats;
use crate::geometry::{ObjectId, Shape};

#[derive(Default)]
pub(crate) struct NaiveStore {
    items: Vec<(ObjectId, Shape)>,
    pos: HashMap<ObjectId, usize>,
}

impl NaiveStore {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn contains(&self, id: ObjectId) -> bool {
        self.pos.contains_key(&id)
    }

    pub fn insert(&mut self, id: ObjectId, shape: Shape) {
        self.pos.insert(id, self.items.len());
        self.items.push((id, shape));
    }

    pub fn delete(&mut self, id: ObjectId) -> bool {
        let Some(i) = self.pos.remove(&id) else {
            return false;
        };
        self.items.swap_remove(i);
        if i < self.items.len() {
            self.pos.insert(self.items[i].0, i);
        }
        true
    }

    pub fn find(
        &self,
        q: &Shape,
        accept: &mut dyn FnMut(ObjectId) -> bool,
        stats: &ProbeStats,
    ) -> Option<ObjectId> {
        let mut seen = 0u64;
        let mut hit = None;
        for (id, s) in &self.items {
            seen += 1;
            if s.intersects(q) && accept(*id) {
                hit = Some(*id);
                break;
            }
        }
        stats.record_query(1);
        stats.add_candidates(seen);
        hit
    }

    pub fn ids(&self) -> Vec<ObjectId> {
        self.items.iter().map(|(id, _)| *id).collect()
    }
}
