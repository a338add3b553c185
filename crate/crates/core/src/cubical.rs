//! Cubical complexes in doubled (Khalimsky) coordinates.
//!
//! A face is a triple of integers. An even coordinate `2i` is the lattice
//! point `i` on that axis; an odd coordinate `2i + 1` is the open unit
//! interval `(i, i + 1)`. The dimension of a face is its number of odd
//! coordinates, so 0-faces are lattice points (voxel samples) and 3-faces
//! are unit cells spanned by eight samples.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Face(pub [u32; 3]);

impl fmt::Debug for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Face({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

impl Face {
    pub const fn new(a: u32, b: u32, c: u32) -> Self {
        Face([a, b, c])
    }

    /// 0-face at a lattice point.
    pub fn vertex(v: [usize; 3]) -> Self {
        Face([2 * v[0] as u32, 2 * v[1] as u32, 2 * v[2] as u32])
    }

    /// 3-face spanned by lattice points `c .. c + 1`.
    pub fn cell(c: [usize; 3]) -> Self {
        Face([
            2 * c[0] as u32 + 1,
            2 * c[1] as u32 + 1,
            2 * c[2] as u32 + 1,
        ])
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.iter().filter(|&&c| c & 1 == 1).count()
    }

    /// Geometric centre in voxel units.
    pub fn center(&self) -> [f64; 3] {
        [
            self.0[0] as f64 / 2.0,
            self.0[1] as f64 / 2.0,
            self.0[2] as f64 / 2.0,
        ]
    }

    /// Lattice point of a 0-face.
    pub fn lattice(&self) -> Option<[usize; 3]> {
        (self.dim() == 0).then(|| {
            [
                (self.0[0] / 2) as usize,
                (self.0[1] / 2) as usize,
                (self.0[2] / 2) as usize,
            ]
        })
    }

    /// Whether `self` is a proper face of `f`.
    pub fn is_proper_face_of(&self, f: &Face) -> bool {
        self != f
            && (0..3).all(|i| {
                self.0[i] == f.0[i] || (f.0[i] & 1 == 1 && self.0[i].abs_diff(f.0[i]) == 1)
            })
    }

    /// All proper faces.
    pub fn sub_faces(&self) -> Vec<Face> {
        let mut out = Vec::with_capacity(26);
        let opts = |c: u32| -> Vec<u32> {
            if c & 1 == 1 {
                vec![c, c - 1, c + 1]
            } else {
                vec![c]
            }
        };
        for &a in &opts(self.0[0]) {
            for &b in &opts(self.0[1]) {
                for &c in &opts(self.0[2]) {
                    let g = Face([a, b, c]);
                    if g != *self {
                        out.push(g);
                    }
                }
            }
        }
        out
    }

    /// Sub-faces of dimension exactly `dim() - 1`.
    pub fn facets(&self) -> Vec<Face> {
        let mut out = Vec::with_capacity(6);
        for axis in 0..3 {
            if self.0[axis] & 1 == 1 {
                for d in [-1i64, 1] {
                    let mut c = self.0;
                    c[axis] = (c[axis] as i64 + d) as u32;
                    out.push(Face(c));
                }
            }
        }
        out
    }

    /// The 0-sub-faces (corners); a 0-face is its own single corner.
    pub fn corners(&self) -> Vec<Face> {
        let mut out = vec![*self];
        for axis in 0..3 {
            if self.0[axis] & 1 == 1 {
                out = out
                    .into_iter()
                    .flat_map(|f| {
                        let mut lo = f.0;
                        let mut hi = f.0;
                        lo[axis] -= 1;
                        hi[axis] += 1;
                        [Face(lo), Face(hi)]
                    })
                    .collect();
            }
        }
        out
    }
}

/// A set of faces inside a fixed box of `extent` unit cells per axis, stored
/// as a dense membership grid over doubled coordinates `0 ..= 2 * extent`.
#[derive(Clone, PartialEq, Eq)]
pub struct CubicalComplex {
    extent: [usize; 3],
    size: [usize; 3],
    present: Vec<bool>,
    counts: [usize; 4],
}

impl fmt::Debug for CubicalComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CubicalComplex")
            .field("extent", &self.extent)
            .field("counts", &self.counts)
            .finish()
    }
}

impl CubicalComplex {
    pub fn new(extent: [usize; 3]) -> Self {
        let size = [2 * extent[0] + 1, 2 * extent[1] + 1, 2 * extent[2] + 1];
        Self {
            extent,
            size,
            present: vec![false; size[0] * size[1] * size[2]],
            counts: [0; 4],
        }
    }

    /// Closure of `faces`.
    pub fn from_faces(extent: [usize; 3], faces: impl IntoIterator<Item = Face>) -> Result<Self> {
        let mut x = Self::new(extent);
        for f in faces {
            x.insert_closed(f)?;
        }
        Ok(x)
    }

    /// Every face of the box: all cells and their sub-faces.
    pub fn full(extent: [usize; 3]) -> Self {
        let mut x = Self::new(extent);
        x.present.iter_mut().for_each(|p| *p = true);
        for idx in 0..x.present.len() {
            let d = x.face_at(idx).dim();
            x.counts[d] += 1;
        }
        x
    }

    pub fn extent(&self) -> [usize; 3] {
        self.extent
    }

    #[inline]
    pub fn in_bounds(&self, f: Face) -> bool {
        (0..3).all(|i| (f.0[i] as usize) < self.size[i])
    }

    #[inline]
    fn idx(&self, f: Face) -> usize {
        f.0[0] as usize + self.size[0] * (f.0[1] as usize + self.size[1] * f.0[2] as usize)
    }

    #[inline]
    fn face_at(&self, idx: usize) -> Face {
        let a = idx % self.size[0];
        let b = (idx / self.size[0]) % self.size[1];
        let c = idx / (self.size[0] * self.size[1]);
        Face([a as u32, b as u32, c as u32])
    }

    #[inline]
    pub fn contains(&self, f: Face) -> bool {
        self.in_bounds(f) && self.present[self.idx(f)]
    }

    pub fn len(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn count(&self, dim: usize) -> usize {
        self.counts[dim]
    }

    /// Faces in storage order (z slowest).
    pub fn faces(&self) -> impl Iterator<Item = Face> + '_ {
        self.present
            .iter()
            .enumerate()
            .filter(|(_, &p)| p)
            .map(|(i, _)| self.face_at(i))
    }

    pub fn faces_of_dim(&self, dim: usize) -> impl Iterator<Item = Face> + '_ {
        self.faces().filter(move |f| f.dim() == dim)
    }

    /// Inserts `f` alone. Used by builders that add faces in closed batches.
    pub(crate) fn insert_raw(&mut self, f: Face) -> Result<bool> {
        if !self.in_bounds(f) {
            return Err(Error::InvalidParam(format!("{f:?} outside complex bounds")));
        }
        let i = self.idx(f);
        if self.present[i] {
            return Ok(false);
        }
        self.present[i] = true;
        self.counts[f.dim()] += 1;
        Ok(true)
    }

    /// Inserts `f` together with all of its sub-faces.
    pub fn insert_closed(&mut self, f: Face) -> Result<()> {
        if self.insert_raw(f)? {
            for g in f.sub_faces() {
                self.insert_raw(g)?;
            }
        }
        Ok(())
    }

    pub(crate) fn remove_raw(&mut self, f: Face) {
        let i = self.idx(f);
        if self.present[i] {
            self.present[i] = false;
            self.counts[f.dim()] -= 1;
        }
    }

    fn coface_candidates(&self, g: Face, mut visit: impl FnMut(Face)) {
        let opts = |c: u32, n: usize| -> ([u32; 3], usize) {
            if c & 1 == 1 {
                ([c, 0, 0], 1)
            } else {
                let mut o = [c, 0, 0];
                let mut k = 1;
                if c >= 1 {
                    o[k] = c - 1;
                    k += 1;
                }
                if (c as usize) + 1 < n {
                    o[k] = c + 1;
                    k += 1;
                }
                (o, k)
            }
        };
        let (xa, na) = opts(g.0[0], self.size[0]);
        let (ya, nb) = opts(g.0[1], self.size[1]);
        let (za, nc) = opts(g.0[2], self.size[2]);
        for &a in &xa[..na] {
            for &b in &ya[..nb] {
                for &c in &za[..nc] {
                    let f = Face([a, b, c]);
                    if f != g {
                        visit(f);
                    }
                }
            }
        }
    }

    /// Number of faces of the complex having `g` as a proper face.
    pub fn coface_count(&self, g: Face) -> usize {
        let mut n = 0;
        self.coface_candidates(g, |f| {
            if self.present[self.idx(f)] {
                n += 1;
            }
        });
        n
    }

    /// Cofaces of `g` in the complex of exactly dimension `dim`.
    pub fn cofaces_of_dim(&self, g: Face, dim: usize) -> Vec<Face> {
        let mut out = Vec::new();
        self.coface_candidates(g, |f| {
            if f.dim() == dim && self.present[self.idx(f)] {
                out.push(f);
            }
        });
        out
    }

    /// All faces of the complex that have `g` as a proper face, any dimension.
    pub fn cofaces_in(&self, g: Face) -> Result<Vec<Face>> {
        if !self.contains(g) {
            return Err(Error::FaceNotInComplex(g));
        }
        let mut out = Vec::new();
        self.coface_candidates(g, |f| {
            if self.present[self.idx(f)] {
                out.push(f);
            }
        });
        out.sort();
        Ok(out)
    }

    /// The unique coface `f` making `(g, f)` a free pair, if any.
    pub fn free_pair(&self, g: Face) -> Result<Option<Face>> {
        let cof = self.cofaces_in(g)?;
        Ok((cof.len() == 1).then(|| cof[0]))
    }

    /// Removes the free pair `(g, f)`.
    pub fn collapse(&mut self, g: Face, f: Face) -> Result<()> {
        match self.free_pair(g)? {
            Some(h) if h == f => {
                self.remove_raw(g);
                self.remove_raw(f);
                Ok(())
            }
            _ => Err(Error::NotFree(g, f)),
        }
    }

    /// Removes `(g, f)`, which the caller has established to be a free pair.
    pub(crate) fn remove_free_pair(&mut self, g: Face, f: Face) {
        debug_assert_eq!(
            self.free_pair(g).ok().flatten(),
            Some(f),
            "({g:?}, {f:?}) is not free"
        );
        self.remove_raw(g);
        self.remove_raw(f);
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.counts[0] as i64 - self.counts[1] as i64 + self.counts[2] as i64
            - self.counts[3] as i64
    }

    /// Checks the closure property; returns the first face with a missing sub-face.
    pub fn check_closed(&self) -> Result<()> {
        for f in self.faces() {
            for g in f.facets() {
                if !self.contains(g) {
                    return Err(Error::NotClosed(format!("{g:?} missing under {f:?}")));
                }
            }
        }
        Ok(())
    }

    /// Number of connected components (faces joined to their corners).
    pub fn connected_components(&self) -> usize {
        let mut parent: Vec<u32> = (0..self.present.len() as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                p[x as usize] = p[p[x as usize] as usize];
                x = p[x as usize];
            }
            x
        }
        for f in self.faces() {
            let fi = self.idx(f) as u32;
            for c in f.corners() {
                let ci = self.idx(c) as u32;
                let (ra, rb) = (find(&mut parent, fi), find(&mut parent, ci));
                if ra != rb {
                    parent[ra as usize] = rb;
                }
            }
        }
        let mut roots: Vec<u32> = self
            .faces()
            .map(|f| find(&mut parent, self.idx(f) as u32))
            .collect();
        roots.sort_unstable();
        roots.dedup();
        roots.len()
    }
}

/// The closed 2-complex of faces separating cells where `inside` holds from
/// cells where it does not. Cells outside the box count as not inside.
pub fn cell_set_boundary(
    extent: [usize; 3],
    inside: impl Fn([usize; 3]) -> bool,
) -> CubicalComplex {
    let mut x = CubicalComplex::new(extent);
    let is_in = |c: [isize; 3]| -> bool {
        (0..3).all(|a| c[a] >= 0 && (c[a] as usize) < extent[a])
            && inside([c[0] as usize, c[1] as usize, c[2] as usize])
    };
    for k in 0..extent[2] {
        for j in 0..extent[1] {
            for i in 0..extent[0] {
                let c = [i, j, k];
                if !inside(c) {
                    continue;
                }
                let cell = Face::cell(c);
                for axis in 0..3 {
                    for d in [-1isize, 1] {
                        let mut n = [i as isize, j as isize, k as isize];
                        n[axis] += d;
                        if !is_in(n) {
                            let mut fc = cell.0;
                            fc[axis] = (fc[axis] as isize + d) as u32;
                            x.insert_closed(Face(fc)).expect("face inside bounds");
                        }
                    }
                }
            }
        }
    }
    x
}
