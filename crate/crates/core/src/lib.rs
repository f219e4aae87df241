//! Dynamic approximate vertex cover and maximum matching for intersection
//! graphs of disks, rectangles and boxes.

pub mod cli;
pub mod detect;
pub mod dyn_vc;
pub mod general_matching;
pub mod geometry;
pub mod lp_kernel;
pub mod matching;
pub mod minpair;
pub mod oracles;
pub mod static_vc;

use std::collections::hash_map::DefaultHasher;
use std::hash::BuildHasherDefault;

/// Hash containers with a fixed hasher: iteration order, and every tie it
/// breaks, depends only on the sequence of operations.
pub(crate) type HashMap<K, V> = std::collections::HashMap<K, V, BuildHasherDefault<DefaultHasher>>;
pub(crate) type HashSet<K> = std::collections::HashSet<K, BuildHasherDefault<DefaultHasher>>;
