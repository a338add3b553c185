//! Quad meshes from cubical 2-complexes, with OBJ and JSON serialisation.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cubical::{CubicalComplex, Face};
use crate::error::{Error, Result};

/// Vertices in voxel units, quads as four vertex indices in cyclic order,
/// optionally a closed boundary polyline over the same vertex list.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SurfaceMesh {
    pub vertices: Vec<[f64; 3]>,
    pub quads: Vec<[usize; 4]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Vec<usize>>,
}

/// The corners of a 2-face in cyclic order.
pub fn quad_corners(f: Face) -> [Face; 4] {
    let odd: Vec<usize> = (0..3).filter(|&a| f.0[a] & 1 == 1).collect();
    let (u, v) = (odd[0], odd[1]);
    let at = |du: i32, dv: i32| {
        let mut c = f.0;
        c[u] = (c[u] as i32 + du) as u32;
        c[v] = (c[v] as i32 + dv) as u32;
        Face(c)
    };
    [at(-1, -1), at(1, -1), at(1, 1), at(-1, 1)]
}

/// One quad per 2-face of `x`; vertices are the corners actually used,
/// sorted, at half their doubled coordinates.
pub fn complex_to_mesh(x: &CubicalComplex) -> Result<SurfaceMesh> {
    if x.count(3) > 0 {
        return Err(Error::HasVolume);
    }
    let mut faces: Vec<Face> = x.faces_of_dim(2).collect();
    faces.sort_unstable();
    let mut verts: Vec<Face> = faces.iter().flat_map(|f| quad_corners(*f)).collect();
    verts.sort_unstable();
    verts.dedup();
    let index: HashMap<Face, usize> = verts.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let quads = faces
        .iter()
        .map(|f| quad_corners(*f).map(|c| index[&c]))
        .collect();
    Ok(SurfaceMesh {
        vertices: verts.iter().map(|v| v.center()).collect(),
        quads,
        boundary: None,
    })
}

impl SurfaceMesh {
    pub fn is_empty(&self) -> bool {
        self.quads.is_empty()
    }

    /// Undirected edges with the number of quads using each.
    pub fn edge_use(&self) -> HashMap<[usize; 2], usize> {
        let mut m = HashMap::new();
        for q in &self.quads {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                *m.entry([a.min(b), a.max(b)]).or_insert(0) += 1;
            }
        }
        m
    }

    /// V - E + F over the quads' vertices and edges.
    pub fn euler_characteristic(&self) -> i64 {
        let mut used = vec![false; self.vertices.len()];
        for q in &self.quads {
            for &i in q {
                used[i] = true;
            }
        }
        let v = used.iter().filter(|&&u| u).count() as i64;
        v - self.edge_use().len() as i64 + self.quads.len() as i64
    }

    /// Number of groups of quads joined through shared edges.
    pub fn edge_components(&self) -> usize {
        let n = self.quads.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        let mut first: HashMap<[usize; 2], usize> = HashMap::new();
        for (i, q) in self.quads.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (q[k], q[(k + 1) % 4]);
                let key = [a.min(b), a.max(b)];
                match first.get(&key) {
                    Some(&j) => {
                        let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                        if ra != rb {
                            parent[ra] = rb;
                        }
                    }
                    None => {
                        first.insert(key, i);
                    }
                }
            }
        }
        (0..n).filter(|&i| find(&mut parent, i) == i).count()
    }

    /// Wavefront-style text: `v x y z` lines, `f a b c d` quads and an
    /// optional `l` line for the boundary, all indices 1-based.
    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            writeln!(s, "v {} {} {}", v[0], v[1], v[2]).expect("string write");
        }
        for q in &self.quads {
            writeln!(s, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1)
                .expect("string write");
        }
        if let Some(b) = &self.boundary {
            let idx: Vec<String> = b
                .iter()
                .chain(b.first())
                .map(|i| (i + 1).to_string())
                .collect();
            writeln!(s, "l {}", idx.join(" ")).expect("string write");
        }
        s
    }

    pub fn from_obj(r: impl BufRead) -> Result<Self> {
        let mut m = SurfaceMesh::default();
        for (n, line) in r.lines().enumerate() {
            let line = line?;
            let mut it = line.split_whitespace();
            let bad = || Error::Format(format!("obj line {}: {line:?}", n + 1));
            match it.next() {
                Some("v") => {
                    let c: Vec<f64> = it
                        .map(|t| t.parse::<f64>().map_err(|_| bad()))
                        .collect::<Result<_>>()?;
                    if c.len() != 3 {
                        return Err(bad());
                    }
                    m.vertices.push([c[0], c[1], c[2]]);
                }
                Some("f") => {
                    let c: Vec<usize> = it
                        .map(|t| {
                            t.split('/')
                                .next()
                                .unwrap_or("")
                                .parse::<usize>()
                                .map_err(|_| bad())
                        })
                        .collect::<Result<_>>()?;
                    if c.len() != 4 || c.iter().any(|&i| i == 0 || i > m.vertices.len()) {
                        return Err(bad());
                    }
                    m.quads.push([c[0] - 1, c[1] - 1, c[2] - 1, c[3] - 1]);
                }
                Some("l") => {
                    let mut c: Vec<usize> = it
                        .map(|t| t.parse::<usize>().map_err(|_| bad()))
                        .collect::<Result<_>>()?;
                    if c.iter().any(|&i| i == 0 || i > m.vertices.len()) {
                        return Err(bad());
                    }
                    if c.first() == c.last() && c.len() > 1 {
                        c.pop();
                    }
                    m.boundary = Some(c.into_iter().map(|i| i - 1).collect());
                }
                _ => {}
            }
        }
        Ok(m)
    }

    pub fn save_obj(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_obj().as_bytes())?;
        Ok(())
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        Self::from_obj(std::io::BufReader::new(std::fs::File::open(path)?))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Reads either format, by extension (`.obj` or JSON otherwise).
    pub fn load(path: &Path) -> Result<Self> {
        if path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("obj"))
        {
            Self::load_obj(path)
        } else {
            Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
        }
    }

    /// Attaches a boundary loop given by lattice points, adding any missing
    /// vertices.
    pub fn set_boundary(&mut self, lattice: &[[usize; 3]]) {
        let mut index: HashMap<[i64; 3], usize> = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| (v.map(|c| (c * 2.0).round() as i64), i))
            .collect();
        let mut b = Vec::with_capacity(lattice.len());
        for p in lattice {
            let key = p.map(|c| 2 * c as i64);
            let i = *index.entry(key).or_insert_with(|| {
                self.vertices.push(p.map(|c| c as f64));
                self.vertices.len() - 1
            });
            b.push(i);
        }
        self.boundary = Some(b);
    }

    /// Positions of the boundary loop, if any.
    pub fn boundary_points(&self) -> Option<Vec<[f64; 3]>> {
        self.boundary
            .as_ref()
            .map(|b| b.iter().map(|&i| self.vertices[i]).collect())
    }

    pub fn locator(&self) -> QuadLocator<'_> {
        QuadLocator::new(self)
    }
}

/// Bucketed quads for distance queries.
pub struct QuadLocator<'a> {
    mesh: &'a SurfaceMesh,
    buckets: HashMap<[i64; 3], Vec<usize>>,
}

impl<'a> QuadLocator<'a> {
    fn new(mesh: &'a SurfaceMesh) -> Self {
        let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
        for (i, q) in mesh.quads.iter().enumerate() {
            let c = centroid(mesh, q);
            buckets
                .entry(c.map(|x| x.floor() as i64))
                .or_default()
                .push(i);
        }
        Self { mesh, buckets }
    }

    /// Distance from `p` to the nearest quad if it is at most `tol`.
    pub fn distance_within(&self, p: [f64; 3], tol: f64) -> Option<f64> {
        let r = tol.ceil() as i64 + 1;
        let base = p.map(|x| x.floor() as i64);
        let mut best: Option<f64> = None;
        for dz in -r..=r {
            for dy in -r..=r {
                for dx in -r..=r {
                    let Some(list) = self
                        .buckets
                        .get(&[base[0] + dx, base[1] + dy, base[2] + dz])
                    else {
                        continue;
                    };
                    for &qi in list {
                        let d = quad_distance(self.mesh, &self.mesh.quads[qi], p);
                        if d <= tol && best.is_none_or(|b| d < b) {
                            best = Some(d);
                        }
                    }
                }
            }
        }
        best
    }
}

fn centroid(mesh: &SurfaceMesh, q: &[usize; 4]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for &i in q {
        for k in 0..3 {
            c[k] += mesh.vertices[i][k] / 4.0;
        }
    }
    c
}

/// Distance from `p` to an axis-aligned quad (its bounding box is flat).
fn quad_distance(mesh: &SurfaceMesh, q: &[usize; 4], p: [f64; 3]) -> f64 {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for &i in q {
        for k in 0..3 {
            lo[k] = lo[k].min(mesh.vertices[i][k]);
            hi[k] = hi[k].max(mesh.vertices[i][k]);
        }
    }
    (0..3)
        .map(|k| (p[k] - p[k].clamp(lo[k], hi[k])).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// The closed indexed polyline as compact JSON text.
pub fn polyline_json(vertices: &[[f64; 3]], edges: &[[usize; 2]]) -> Result<String> {
    #[derive(Serialize)]
    struct P<'a> {
        vertices: &'a [[f64; 3]],
        edges: &'a [[usize; 2]],
    }
    Ok(serde_json::to_string(&P { vertices, edges })?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_face_is_one_quad() {
        let x = CubicalComplex::from_faces([3, 3, 3], [Face::new(1, 1, 2)]).unwrap();
        let m = complex_to_mesh(&x).unwrap();
        assert_eq!(m.quads.len(), 1);
        assert_eq!(m.vertices.len(), 4);
        let q = m.quads[0];
        let mut s = q.to_vec();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 4);
    }

    #[test]
    fn two_by_two_patch() {
        let faces = [
            Face::new(1, 1, 2),
            Face::new(3, 1, 2),
            Face::new(1, 3, 2),
            Face::new(3, 3, 2),
        ];
        let x = CubicalComplex::from_faces([3, 3, 3], faces).unwrap();
        let m = complex_to_mesh(&x).unwrap();
        assert_eq!(m.quads.len(), 4);
        assert_eq!(m.vertices.len(), 9);
        assert_eq!(m.euler_characteristic(), x.euler_characteristic());
        assert_eq!(m.edge_components(), 1);
    }

    #[test]
    fn volume_is_rejected() {
        let x = CubicalComplex::full([1, 1, 1]);
        assert!(matches!(complex_to_mesh(&x), Err(Error::HasVolume)));
    }

    #[test]
    fn obj_round_trip() {
        let faces = [Face::new(1, 1, 2), Face::new(3, 1, 2)];
        let x = CubicalComplex::from_faces([3, 3, 3], faces).unwrap();
        let mut m = complex_to_mesh(&x).unwrap();
        m.set_boundary(&[
            [0, 0, 1],
            [1, 0, 1],
            [2, 0, 1],
            [2, 1, 1],
            [1, 1, 1],
            [0, 1, 1],
        ]);
        let text = m.to_obj();
        assert!(text.starts_with("v 0 0 1\n"));
        assert!(text.contains("\nf "));
        assert!(text.contains("\nl "));
        let back = SurfaceMesh::from_obj(text.as_bytes()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn quad_distance_is_clamped() {
        let x = CubicalComplex::from_faces([3, 3, 3], [Face::new(1, 1, 2)]).unwrap();
        let m = complex_to_mesh(&x).unwrap();
        let loc = m.locator();
        assert_eq!(loc.distance_within([0.5, 0.5, 3.0], 5.0), Some(2.0));
        assert_eq!(loc.distance_within([0.5, 0.5, 3.0], 1.5), None);
        assert!((loc.distance_within([2.0, 2.0, 1.0], 5.0).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }
}
