//! Object representations and exact closed-set predicates.
//!
//! Every object is closed: tangent disks and boxes sharing only a boundary
//! point intersect. Disk tests compare squared distances so that integer
//! inputs are decided exactly.

use std::fmt;

use thiserror::Error;

/// Largest supported box dimension.
pub const MAX_DIM: usize = 4;

pub type ObjectId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("shape mismatch: {left} vs {right}")]
    ShapeMismatch {
        left: ShapeFamily,
        right: ShapeFamily,
    },
    #[error("radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("box has lo > hi on axis {axis}")]
    InvertedBox { axis: usize },
    #[error("unsupported dimension {0} (boxes need 1..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("operation requires rectangles (d = 2), got d = {0}")]
    NotPlanar(usize),
}

/// Bipartition tag of an object.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
    None,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::None => Side::None,
        }
    }
}

/// Shape family and dimension; two objects are comparable iff their families match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeFamily {
    Disk,
    Box(usize),
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeFamily::Disk => write!(f, "disk"),
            ShapeFamily::Box(d) => write!(f, "box{d}"),
        }
    }
}

/// Closed axis-aligned box in `dim` dimensions. Coordinates past `dim` are zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaBox {
    dim: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
}

impl AaBox {
    pub fn new(lo: &[f64], hi: &[f64]) -> Result<Self, GeomError> {
        if lo.len() != hi.len() {
            return Err(GeomError::DimensionMismatch {
                left: lo.len(),
                right: hi.len(),
            });
        }
        let dim = lo.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(GeomError::UnsupportedDimension(dim));
        }
        let mut b = AaBox {
            dim,
            lo: [0.0; MAX_DIM],
            hi: [0.0; MAX_DIM],
        };
        for k in 0..dim {
            if !lo[k].is_finite() || !hi[k].is_finite() {
                return Err(GeomError::NonFinite);
            }
            if lo[k] > hi[k] {
                return Err(GeomError::InvertedBox { axis: k });
            }
            b.lo[k] = lo[k];
            b.hi[k] = hi[k];
        }
        Ok(b)
    }

    /// Rectangle `[x0, x1] x [y0, y1]`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeomError> {
        Self::new(&[x0, y0], &[x1, y1])
    }

    /// Hypercube with the given center and side length.
    pub fn cube(center: &[f64], side: f64) -> Result<Self, GeomError> {
        let h = side / 2.0;
        let lo: Vec<f64> = center.iter().map(|c| c - h).collect();
        let hi: Vec<f64> = center.iter().map(|c| c + h).collect();
        Self::new(&lo, &hi)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn lo(&self) -> &[f64] {
        &self.lo[..self.dim]
    }

    #[inline]
    pub fn hi(&self) -> &[f64] {
        &self.hi[..self.dim]
    }

    #[inline]
    pub fn side_len(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    pub fn center(&self) -> [f64; MAX_DIM] {
        let mut c = [0.0; MAX_DIM];
        for k in 0..self.dim {
            c[k] = 0.5 * (self.lo[k] + self.hi[k]);
        }
        c
    }

    pub fn diameter(&self) -> f64 {
        (0..self.dim)
            .map(|k| self.side_len(k).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    #[inline]
    fn overlaps(&self, other: &AaBox) -> bool {
        (0..self.dim).all(|k| self.lo[k] <= other.hi[k] && other.lo[k] <= self.hi[k])
    }

    #[inline]
    fn encloses(&self, other: &AaBox) -> bool {
        (0..self.dim).all(|k| self.lo[k] <= other.lo[k] && other.hi[k] <= self.hi[k])
    }

    /// True iff `p` lies in the open interior.
    pub fn interior_contains_point(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|k| self.lo[k] < p[k] && p[k] < self.hi[k])
    }

    pub fn contains_point(&self, p: &[f64]) -> bool {
        (0..self.dim).all(|k| self.lo[k] <= p[k] && p[k] <= self.hi[k])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    Disk { center: [f64; 2], radius: f64 },
    Box(AaBox),
}

impl Shape {
    pub fn disk(x: f64, y: f64, radius: f64) -> Result<Self, GeomError> {
        if !x.is_finite() || !y.is_finite() {
            return Err(GeomError::NonFinite);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeomError::InvalidRadius(radius));
        }
        Ok(Shape::Disk {
            center: [x, y],
            radius,
        })
    }

    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeomError> {
        AaBox::rect(x0, y0, x1, y1).map(Shape::Box)
    }

    pub fn boxed(lo: &[f64], hi: &[f64]) -> Result<Self, GeomError> {
        AaBox::new(lo, hi).map(Shape::Box)
    }

    pub fn family(&self) -> ShapeFamily {
        match self {
            Shape::Disk { .. } => ShapeFamily::Disk,
            Shape::Box(b) => ShapeFamily::Box(b.dim),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Disk { .. } => 2,
            Shape::Box(b) => b.dim,
        }
    }

    pub fn as_box(&self) -> Option<&AaBox> {
        match self {
            Shape::Box(b) => Some(b),
            Shape::Disk { .. } => None,
        }
    }

    /// A point guaranteed to lie inside the object.
    pub fn reference_point(&self) -> [f64; MAX_DIM] {
        match self {
            Shape::Disk { center, .. } => {
                let mut p = [0.0; MAX_DIM];
                p[0] = center[0];
                p[1] = center[1];
                p
            }
            Shape::Box(b) => b.center(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Shape::Disk { radius, .. } => 2.0 * radius,
            Shape::Box(b) => b.diameter(),
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounds(&self) -> AaBox {
        match self {
            Shape::Disk { center, radius } => AaBox {
                dim: 2,
                lo: [center[0] - radius, center[1] - radius, 0.0, 0.0],
                hi: [center[0] + radius, center[1] + radius, 0.0, 0.0],
            },
            Shape::Box(b) => *b,
        }
    }

    /// Exact closed intersection test.
    ///
    /// Panics when the two shapes belong to different families; use
    /// [`try_intersects`] where the families are not already known to agree.
    #[inline]
    pub fn intersects(&self, other: &Shape) -> bool {
        match (self, other) {
            (
                Shape::Disk {
                    center: a,
                    radius: ra,
                },
                Shape::Disk {
                    center: b,
                    radius: rb,
                },
            ) => {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                let rs = ra + rb;
                dx * dx + dy * dy <= rs * rs
            }
            (Shape::Box(a), Shape::Box(b)) => {
                assert_eq!(a.dim, b.dim, "box dimension mismatch");
                a.overlaps(b)
            }
            _ => panic!(
                "intersects called on {} and {}",
                self.family(),
                other.family()
            ),
        }
    }

    /// Does this closed shape meet the closed box `b`?
    pub fn meets_box(&self, b: &AaBox) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                let mut d2 = 0.0;
                for k in 0..2 {
                    let c = center[k].clamp(b.lo[k], b.hi[k]);
                    d2 += (center[k] - c) * (center[k] - c);
                }
                d2 <= radius * radius
            }
            Shape::Box(a) => a.overlaps(b),
        }
    }

    /// Is this closed shape inside the open interior of `b`?
    pub fn inside_open_box(&self, b: &AaBox) -> bool {
        match self {
            Shape::Disk { center, radius } => {
                (0..2).all(|k| b.lo[k] < center[k] - radius && center[k] + radius < b.hi[k])
            }
            Shape::Box(a) => (0..a.dim).all(|k| b.lo[k] < a.lo[k] && a.hi[k] < b.hi[k]),
        }
    }
}

pub fn try_intersects(a: &Shape, b: &Shape) -> Result<bool, GeomError> {
    check_compatible(a.family(), b.family())?;
    Ok(a.intersects(b))
}

pub(crate) fn check_compatible(a: ShapeFamily, b: ShapeFamily) -> Result<(), GeomError> {
    match (a, b) {
        (ShapeFamily::Box(x), ShapeFamily::Box(y)) if x != y => {
            Err(GeomError::DimensionMismatch { left: x, right: y })
        }
        (x, y) if x != y => Err(GeomError::ShapeMismatch { left: x, right: y }),
        _ => Ok(()),
    }
}

/// `b ⊆ a`, closed and component-wise.
pub fn contains(a: &AaBox, b: &AaBox) -> Result<bool, GeomError> {
    if a.dim != b.dim {
        return Err(GeomError::DimensionMismatch {
            left: a.dim,
            right: b.dim,
        });
    }
    Ok(a.encloses(b))
}

/// Does rectangle `a` dominate rectangle `b`?
///
/// The boundaries cross four times with `a` the taller one: `a`'s y-extent
/// strictly contains `b`'s and `b`'s x-extent strictly contains `a`'s.
/// Coincident edges do not count as a crossing.
pub fn dominates(a: &AaBox, b: &AaBox) -> Result<bool, GeomError> {
    if a.dim != 2 {
        return Err(GeomError::NotPlanar(a.dim));
    }
    if b.dim != 2 {
        return Err(GeomError::NotPlanar(b.dim));
    }
    Ok(a.lo[1] < b.lo[1] && b.hi[1] < a.hi[1] && b.lo[0] < a.lo[0] && a.hi[0] < b.hi[0])
}

/// An object of the intersection graph.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeomObject {
    pub id: ObjectId,
    pub side: Side,
    pub shape: Shape,
}

impl GeomObject {
    pub fn new(id: ObjectId, shape: Shape) -> Self {
        GeomObject {
            id,
            side: Side::None,
            shape,
        }
    }

    pub fn with_side(id: ObjectId, side: Side, shape: Shape) -> Self {
        GeomObject { id, side, shape }
    }

    #[inline]
    pub fn intersects(&self, other: &GeomObject) -> bool {
        self.shape.intersects(&other.shape)
    }
}

/// One step of a dynamic object stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Update {
    Insert(GeomObject),
    Delete(ObjectId),
}

/// Maximum aspect ratio (longest side over shortest side) for a box to count as fat.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FatnessConfig {
    pub phi: f64,
}

impl Default for FatnessConfig {
    fn default() -> Self {
        FatnessConfig { phi: 2.0 }
    }
}

impl FatnessConfig {
    pub fn new(phi: f64) -> Result<Self, GeomError> {
        if !(phi >= 1.0) || !phi.is_finite() {
            return Err(GeomError::InvalidRadius(phi));
        }
        Ok(FatnessConfig { phi })
    }

    /// Disks are always fat. A box with a zero-length side is fat only if it is a point.
    pub fn is_fat(&self, shape: &Shape) -> bool {
        match shape {
            Shape::Disk { .. } => true,
            Shape::Box(b) => {
                let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
                for k in 0..b.dim {
                    let s = b.side_len(k);
                    lo = lo.min(s);
                    hi = hi.max(s);
                }
                if hi == 0.0 {
                    return true;
                }
                lo > 0.0 && hi <= self.phi * lo
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn d(x: f64, y: f64, r: f64) -> Shape {
        Shape::disk(x, y, r).unwrap()
    }

    fn r(x0: f64, y0: f64, x1: f64, y1: f64) -> AaBox {
        AaBox::rect(x0, y0, x1, y1).unwrap()
    }

    #[test]
    fn disk_predicates() {
        assert!(!d(0.0, 0.0, 1.0).intersects(&d(3.0, 0.0, 1.0)));
        assert!(d(0.0, 0.0, 1.0).intersects(&d(2.0, 0.0, 1.0)));
        assert!(d(0.0, 0.0, 1.0).intersects(&d(1.5, 0.0, 1.0)));
    }

    #[test]
    fn box_predicates() {
        let a = Shape::Box(r(0.0, 0.0, 2.0, 1.0));
        let b = Shape::Box(r(1.0, 0.5, 3.0, 2.0));
        assert!(a.intersects(&b));
        let c = Shape::Box(r(2.0, 1.0, 3.0, 3.0));
        assert!(a.intersects(&c), "corner touch counts");
        let e = Shape::Box(r(2.5, 0.0, 3.0, 3.0));
        assert!(!a.intersects(&e));
    }

    #[test]
    fn mismatch_is_an_error() {
        let b3 = Shape::boxed(&[0.0; 3], &[1.0; 3]).unwrap();
        let b2 = Shape::Box(r(0.0, 0.0, 1.0, 1.0));
        assert_eq!(
            try_intersects(&b3, &b2),
            Err(GeomError::DimensionMismatch { left: 3, right: 2 })
        );
        assert!(matches!(
            try_intersects(&d(0.0, 0.0, 1.0), &b2),
            Err(GeomError::ShapeMismatch { .. })
        ));
        assert!(contains(b3.as_box().unwrap(), b2.as_box().unwrap()).is_err());
    }

    #[test]
    fn constructors_validate() {
        assert!(Shape::disk(0.0, 0.0, 0.0).is_err());
        assert!(Shape::disk(0.0, 0.0, -1.0).is_err());
        assert!(AaBox::rect(1.0, 0.0, 0.0, 1.0).is_err());
        assert!(AaBox::new(&[0.0; 5], &[1.0; 5]).is_err());
        // zero-area boxes are allowed
        assert!(AaBox::rect(1.0, 0.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn containment() {
        let big = r(0.0, 0.0, 4.0, 4.0);
        assert!(contains(&big, &r(1.0, 1.0, 2.0, 2.0)).unwrap());
        assert!(contains(&big, &big).unwrap());
        assert!(!contains(&big, &r(3.0, 3.0, 5.0, 5.0)).unwrap());
    }

    #[test]
    fn domination() {
        let tall = r(1.0, -2.0, 2.0, 3.0);
        let wide = r(0.0, 0.0, 4.0, 1.0);
        assert!(dominates(&tall, &wide).unwrap());
        assert!(!dominates(&wide, &tall).unwrap());
        assert!(!dominates(&tall, &tall).unwrap());
        assert!(!dominates(&r(0.0, 0.0, 1.0, 1.0), &r(5.0, 5.0, 6.0, 6.0)).unwrap());
        // shared edge: no strict crossing
        assert!(!dominates(&r(0.0, -2.0, 2.0, 3.0), &r(0.0, 0.0, 4.0, 1.0)).unwrap());
        let cube = AaBox::new(&[0.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(dominates(&cube, &cube), Err(GeomError::NotPlanar(3)));
    }

    #[test]
    fn fatness() {
        let f = FatnessConfig::default();
        assert!(f.is_fat(&Shape::Box(r(0.0, 0.0, 2.0, 1.0))));
        assert!(!f.is_fat(&Shape::Box(r(0.0, 0.0, 3.0, 1.0))));
        assert!(!f.is_fat(&Shape::Box(r(0.0, 0.0, 3.0, 0.0))));
        assert!(f.is_fat(&Shape::Box(r(1.0, 1.0, 1.0, 1.0))));
        assert!(f.is_fat(&d(0.0, 0.0, 5.0)));
        assert!(FatnessConfig::new(0.5).is_err());
    }

    fn arb_rect() -> impl Strategy<Value = AaBox> {
        (-10i32..10, -10i32..10, 0i32..8, 0i32..8)
            .prop_map(|(x, y, w, h)| r(x as f64, y as f64, (x + w) as f64, (y + h) as f64))
    }

    fn arb_disk() -> impl Strategy<Value = Shape> {
        (-10i32..10, -10i32..10, 1i32..6).prop_map(|(x, y, r)| d(x as f64, y as f64, r as f64))
    }

    proptest! {
        #[test]
        fn intersects_is_symmetric(a in arb_rect(), b in arb_rect(), c in arb_disk(), e in arb_disk()) {
            let (a, b) = (Shape::Box(a), Shape::Box(b));
            prop_assert_eq!(a.intersects(&b), b.intersects(&a));
            prop_assert_eq!(c.intersects(&e), e.intersects(&c));
        }

        #[test]
        fn mutual_containment_means_equal(a in arb_rect(), b in arb_rect()) {
            if contains(&a, &b).unwrap() && contains(&b, &a).unwrap() {
                prop_assert_eq!(a, b);
            }
        }

        #[test]
        fn domination_implies_proper_crossing(a in arb_rect(), b in arb_rect()) {
            if dominates(&a, &b).unwrap() {
                prop_assert!(Shape::Box(a).intersects(&Shape::Box(b)));
                prop_assert!(!contains(&a, &b).unwrap());
                prop_assert!(!contains(&b, &a).unwrap());
            }
        }

        #[test]
        fn boxes_have_helly_property(a in arb_rect(), b in arb_rect(), c in arb_rect()) {
            let (sa, sb, sc) = (Shape::Box(a), Shape::Box(b), Shape::Box(c));
            if sa.intersects(&sb) && sb.intersects(&sc) && sa.intersects(&sc) {
                // the max of the lower corners lies in all three
                let p = [a.lo[0].max(b.lo[0]).max(c.lo[0]), a.lo[1].max(b.lo[1]).max(c.lo[1])];
                prop_assert!(a.contains_point(&p) && b.contains_point(&p) && c.contains_point(&p));
            }
        }
    }
}
