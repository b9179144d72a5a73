//! Boundary meshes of closed curves and conforming interior triangulations.
//!
//! Boundary loops are counterclockwise; the outward normal of a segment is
//! its unit tangent rotated clockwise, `n = (t_y, -t_x)`.
//!
//! # Text format
//!
//! ```text
//! nodes N triangles M segments K
//! x y            (N lines, vertex coordinates)
//! a b c          (M lines, counterclockwise vertex indices)
//! i j            (K lines, boundary segments in loop order)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so reading a
//! written mesh reproduces it bit for bit.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use spade::{ConstrainedDelaunayTriangulation, Point2, Triangulation};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Parametric curve a boundary mesh was sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Curve {
    Circle { radius: f64 },
    Kite,
}

impl Curve {
    /// Point at parameter `t ∈ [0, 2π)`.
    pub fn eval(&self, t: f64) -> Point {
        match *self {
            Curve::Circle { radius } => [radius * t.cos(), radius * t.sin()],
            Curve::Kite => [t.cos() + 0.65 * (2.0 * t).cos() - 0.65, 1.5 * t.sin()],
        }
    }
}

/// Closed polygonal discretization of the boundary curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryMesh {
    pub nodes: Vec<Point>,
    /// Segment `i` joins `nodes[i]` and `nodes[(i + 1) % N]`.
    pub segments: Vec<[usize; 2]>,
    pub outward_normals: Vec<Point>,
    pub tangents: Vec<Point>,
    pub lengths: Vec<f64>,
    /// Source curve and node parameters, when known.
    pub curve: Option<(Curve, Vec<f64>)>,
}

impl BoundaryMesh {
    /// Builds the loop `nodes[0] → nodes[1] → … → nodes[0]`.
    pub fn from_nodes(nodes: Vec<Point>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 {
            return Err(Error::InvalidMesh(format!(
                "a closed loop needs at least 3 nodes, got {n}"
            )));
        }
        if nodes.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidMesh("non-finite node coordinate".into()));
        }
        let segments: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
        let mut tangents = Vec::with_capacity(n);
        let mut normals = Vec::with_capacity(n);
        let mut lengths = Vec::with_capacity(n);
        for s in &segments {
            let a = nodes[s[0]];
            let b = nodes[s[1]];
            let d = [b[0] - a[0], b[1] - a[1]];
            let l = d[0].hypot(d[1]);
            if !(l > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "segment {:?} has zero length",
                    s
                )));
            }
            let t = [d[0] / l, d[1] / l];
            tangents.push(t);
            normals.push([t[1], -t[0]]);
            lengths.push(l);
        }
        let mesh = Self {
            nodes,
            segments,
            outward_normals: normals,
            tangents,
            lengths,
            curve: None,
        };
        if mesh.signed_area() <= 0.0 {
            return Err(Error::InvalidMesh(
                "boundary loop is not counterclockwise".into(),
            ));
        }
        mesh.check_simple()?;
        Ok(mesh)
    }

    fn with_curve(curve: Curve, params: Vec<f64>) -> Result<Self> {
        let nodes = params.iter().map(|&t| curve.eval(t)).collect();
        let mut m = Self::from_nodes(nodes)?;
        m.curve = Some((curve, params));
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Shoelace area; positive for counterclockwise loops.
    pub fn signed_area(&self) -> f64 {
        polygon_area(&self.nodes)
    }

    pub fn perimeter(&self) -> f64 {
        self.lengths.iter().sum()
    }

    /// Largest segment length.
    pub fn mesh_width(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn midpoint(&self, i: usize) -> Point {
        let [a, b] = self.segments[i];
        mid(self.nodes[a], self.nodes[b])
    }

    pub fn centroid(&self) -> Point {
        let n = self.len() as f64;
        let s = self
            .nodes
            .iter()
            .fold([0.0, 0.0], |c, p| [c[0] + p[0], c[1] + p[1]]);
        [s[0] / n, s[1] / n]
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for a in &self.nodes {
            for b in &self.nodes {
                d = d.max(dist(*a, *b));
            }
        }
        d
    }

    /// Whether `p` lies inside the polygon (even–odd rule).
    pub fn contains(&self, p: Point) -> bool {
        point_in_polygon(&self.nodes, p)
    }

    /// Distance from `p` to the polygon.
    pub fn distance(&self, p: Point) -> f64 {
        self.segments
            .iter()
            .map(|s| point_segment_distance(p, self.nodes[s[0]], self.nodes[s[1]]))
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the invariants (unit, orthogonal normals; lengths; orientation).
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if self.segments.len() != n
            || self.outward_normals.len() != n
            || self.tangents.len() != n
            || self.lengths.len() != n
        {
            return Err(Error::InvalidMesh(
                "per-segment arrays have inconsistent lengths".into(),
            ));
        }
        let mut degree = vec![0usize; n];
        for (i, s) in self.segments.iter().enumerate() {
            if s[0] != i || s[1] != (i + 1) % n {
                return Err(Error::InvalidMesh(format!(
                    "segment {i} does not continue the loop"
                )));
            }
            degree[s[0]] += 1;
            degree[s[1]] += 1;
            let t = self.tangents[i];
            let nn = self.outward_normals[i];
            if (t[0] * nn[0] + t[1] * nn[1]).abs() > 1e-12
                || (nn[0].hypot(nn[1]) - 1.0).abs() > 1e-12
            {
                return Err(Error::InvalidMesh(format!("bad frame on segment {i}")));
            }
            if (dist(self.nodes[s[0]], self.nodes[s[1]]) - self.lengths[i]).abs() > 1e-12 {
                return Err(Error::InvalidMesh(format!(
                    "length mismatch on segment {i}"
                )));
            }
        }
        if degree.iter().any(|&d| d != 2) {
            return Err(Error::InvalidMesh("node degree differs from 2".into()));
        }
        if self.signed_area() <= 0.0 {
            return Err(Error::InvalidMesh(
                "boundary loop is not counterclockwise".into(),
            ));
        }
        Ok(())
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.len();
        for i in 0..n {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (self.nodes[i], self.nodes[(i + 1) % n]);
                let (c, d) = (self.nodes[j], self.nodes[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::InvalidMesh(format!(
                        "segments {i} and {j} intersect"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Circle of the given radius centered at the origin, sampled uniformly
/// starting at angle 0.
pub fn circle_boundary(radius: f64, n_segments: usize) -> Result<BoundaryMesh> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "radius must be positive and finite, got {radius}"
        )));
    }
    if n_segments < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 segments, got {n_segments}"
        )));
    }
    let params = (0..n_segments)
        .map(|i| 2.0 * PI * i as f64 / n_segments as f64)
        .collect();
    BoundaryMesh::with_curve(Curve::Circle { radius }, params)
}

/// The kite `(cos t + 0.65 cos 2t − 0.65, 1.5 sin t)` sampled uniformly in `t`.
pub fn kite_boundary(n_segments: usize) -> Result<BoundaryMesh> {
    if n_segments < 8 {
        return Err(Error::InvalidArgument(format!(
            "kite needs at least 8 segments, got {n_segments}"
        )));
    }
    let params = (0..n_segments)
        .map(|i| 2.0 * PI * i as f64 / n_segments as f64)
        .collect();
    BoundaryMesh::with_curve(Curve::Kite, params)
}

/// Conforming triangulation of a domain bounded by one closed loop.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorMesh {
    pub vertices: Vec<Point>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// `boundary_trace_map[k]` is the vertex carrying boundary node `k`.
    pub boundary_trace_map: Vec<usize>,
}

impl InteriorMesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        tri_area(self.vertices[a], self.vertices[b], self.vertices[c])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn max_diameter(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| self.diameter(t))
            .fold(0.0, f64::max)
    }

    pub fn centroid(&self, t: usize) -> Point {
        let [a, b, c] = self.triangles[t].map(|i| self.vertices[i]);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Edges used by exactly one triangle, as sorted pairs.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let mut e: Vec<[usize; 2]> = edge_counts(&self.triangles)
            .into_iter()
            .filter(|&(_, c)| c == 1)
            .map(|(k, _)| k)
            .collect();
        e.sort();
        e
    }

    /// Boundary loop as a [`BoundaryMesh`] (without curve information).
    pub fn boundary_mesh(&self) -> Result<BoundaryMesh> {
        BoundaryMesh::from_nodes(
            self.boundary_trace_map
                .iter()
                .map(|&v| self.vertices[v])
                .collect(),
        )
    }

    /// Whether each vertex is a boundary vertex.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut f = vec![false; self.n_vertices()];
        for &v in &self.boundary_trace_map {
            f[v] = true;
        }
        f
    }

    /// Checks orientation, conformity and agreement with the boundary map.
    pub fn validate(&self) -> Result<()> {
        let nv = self.n_vertices();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references a missing vertex"
                )));
            }
            if self.signed_area(t) <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} is not positively oriented"
                )));
            }
        }
        let counts = edge_counts(&self.triangles);
        if let Some((e, c)) = counts.iter().find(|&(_, &c)| c > 2) {
            return Err(Error::InvalidMesh(format!(
                "edge {e:?} is shared by {c} triangles"
            )));
        }
        let nb = self.boundary_trace_map.len();
        let mut seen = vec![false; nv];
        for &v in &self.boundary_trace_map {
            if v >= nv || seen[v] {
                return Err(Error::InvalidMesh(
                    "boundary trace map is not injective".into(),
                ));
            }
            seen[v] = true;
        }
        let mut expected: Vec<[usize; 2]> = (0..nb)
            .map(|k| {
                sorted(
                    self.boundary_trace_map[k],
                    self.boundary_trace_map[(k + 1) % nb],
                )
            })
            .collect();
        expected.sort();
        if expected != self.boundary_edges() {
            return Err(Error::InvalidMesh(
                "boundary edges of the triangulation differ from the boundary loop".into(),
            ));
        }
        Ok(())
    }

    /// Writes the text format described in the module docs.
    pub fn to_text(&self) -> String {
        let nb = self.boundary_trace_map.len();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nodes {} triangles {} segments {}",
            self.vertices.len(),
            self.triangles.len(),
            nb
        );
        for p in &self.vertices {
            let _ = writeln!(s, "{:?} {:?}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for k in 0..nb {
            let _ = writeln!(
                s,
                "{} {}",
                self.boundary_trace_map[k],
                self.boundary_trace_map[(k + 1) % nb]
            );
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 6 || h[0] != "nodes" || h[2] != "triangles" || h[4] != "segments" {
            return Err(Error::Parse(format!("bad header line `{header}`")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("`{s}`: {e}")))
        };
        let (nv, nt, ns) = (num(h[1])?, num(h[3])?, num(h[5])?);
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| {
                Error::Parse(format!("file ends before the {what} block is complete"))
            })
        };
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let l = next("coordinate")?;
            let f: Vec<f64> = l
                .split_whitespace()
                .map(|x| {
                    x.parse::<f64>()
                        .map_err(|e| Error::Parse(format!("`{x}`: {e}")))
                })
                .collect::<Result<_>>()?;
            if f.len() != 2 {
                return Err(Error::Parse(format!("coordinate line `{l}`")));
            }
            vertices.push([f[0], f[1]]);
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let l = next("triangle")?;
            let v: Vec<usize> = l.split_whitespace().map(num).collect::<Result<_>>()?;
            if v.len() != 3 {
                return Err(Error::Parse(format!("triangle line `{l}`")));
            }
            triangles.push([v[0], v[1], v[2]]);
        }
        let mut segs = Vec::with_capacity(ns);
        for _ in 0..ns {
            let l = next("segment")?;
            let v: Vec<usize> = l.split_whitespace().map(num).collect::<Result<_>>()?;
            if v.len() != 2 {
                return Err(Error::Parse(format!("segment line `{l}`")));
            }
            segs.push([v[0], v[1]]);
        }
        for k in 0..ns {
            if segs[k][1] != segs[(k + 1) % ns][0] {
                return Err(Error::Parse("segments do not form a loop in order".into()));
            }
        }
        let mesh = Self {
            vertices,
            triangles,
            boundary_trace_map: segs.iter().map(|s| s[0]).collect(),
        };
        mesh.validate()?;
        Ok(mesh)
    }
}

/// Constrained Delaunay triangulation of the region bounded by `boundary`,
/// with a hexagonal lattice of spacing `target_h` as interior points.
///
/// The boundary nodes become vertices `0..N` in loop order, so the trace map
/// is the identity on them.
pub fn disk_triangulation(boundary: &BoundaryMesh, target_h: f64) -> Result<InteriorMesh> {
    boundary.validate()?;
    if !(target_h.is_finite() && target_h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target_h must be positive, got {target_h}"
        )));
    }
    let n = boundary.len();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in &boundary.nodes {
        for d in 0..2 {
            lo[d] = lo[d].min(p[d]);
            hi[d] = hi[d].max(p[d]);
        }
    }
    let cells = ((hi[0] - lo[0]) / target_h) * ((hi[1] - lo[1]) / target_h);
    if cells > 4.0e6 {
        return Err(Error::MeshGeneration(format!(
            "target_h {target_h} would create too many vertices"
        )));
    }
    let mut vertices: Vec<Point> = boundary.nodes.clone();
    let dy = target_h * 3f64.sqrt() / 2.0;
    let clearance = 0.6 * target_h;
    let rows = ((hi[1] - lo[1]) / dy).ceil() as i64 + 1;
    let cols = ((hi[0] - lo[0]) / target_h).ceil() as i64 + 2;
    let c = boundary.centroid();
    // Lattice anchored at the centroid so symmetric shapes stay symmetric.
    let j0 = ((c[1] - lo[1]) / dy).round() as i64;
    let i0 = ((c[0] - lo[0]) / target_h).round() as i64;
    for j in -1..=rows {
        let y = c[1] + (j - j0) as f64 * dy;
        let shift = if (j - j0).rem_euclid(2) == 1 {
            0.5 * target_h
        } else {
            0.0
        };
        for i in -1..=cols {
            let x = c[0] + (i - i0) as f64 * target_h + shift;
            let p = [x, y];
            if boundary.contains(p) && boundary.distance(p) >= clearance {
                vertices.push(p);
            }
        }
    }

    let pts: Vec<Point2<f64>> = vertices.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let edges: Vec<[usize; 2]> = boundary.segments.clone();
    let cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(pts, edges)
        .map_err(|e| Error::MeshGeneration(format!("constrained triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != vertices.len() {
        return Err(Error::MeshGeneration(
            "triangulation merged coincident vertices".into(),
        ));
    }
    let index: HashMap<(u64, u64), usize> = vertices
        .iter()
        .enumerate()
        .map(|(i, p)| ((p[0].to_bits(), p[1].to_bits()), i))
        .collect();
    let mut triangles = Vec::new();
    for face in cdt.inner_faces() {
        let vs = face.vertices();
        let mut tri = [0usize; 3];
        for (k, v) in vs.iter().enumerate() {
            let p = v.position();
            tri[k] = *index
                .get(&(p.x.to_bits(), p.y.to_bits()))
                .ok_or_else(|| Error::MeshGeneration("triangulation moved a vertex".into()))?;
        }
        let [a, b, cc] = tri.map(|i| vertices[i]);
        let cen = [(a[0] + b[0] + cc[0]) / 3.0, (a[1] + b[1] + cc[1]) / 3.0];
        if !boundary.contains(cen) {
            continue;
        }
        if tri_area(a, b, cc) < 0.0 {
            tri.swap(1, 2);
        }
        triangles.push(tri);
    }
    triangles.sort();
    let mut mesh = InteriorMesh {
        vertices,
        triangles,
        boundary_trace_map: (0..n).collect(),
    };
    smooth(&mut mesh, 4);
    mesh.validate().map_err(|e| {
        Error::MeshGeneration(format!("could not conform to the boundary loop: {e}"))
    })?;
    let dmax = mesh.max_diameter();
    if dmax > 3.0 * target_h {
        return Err(Error::MeshGeneration(format!(
            "largest triangle diameter {dmax:.4} exceeds 3 * target_h; the boundary is too coarse for h = {target_h}"
        )));
    }
    Ok(mesh)
}

/// Laplacian smoothing of interior vertices; a move is undone when it would
/// invert or nearly flatten an incident triangle.
fn smooth(mesh: &mut InteriorMesh, iterations: usize) {
    let nv = mesh.n_vertices();
    let fixed = mesh.boundary_flags();
    let mut nbrs: Vec<Vec<usize>> = vec![Vec::new(); nv];
    let mut incident: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            nbrs[a].push(b);
            nbrs[b].push(a);
            incident[tri[k]].push(t);
        }
    }
    for l in &mut nbrs {
        l.sort();
        l.dedup();
    }
    for _ in 0..iterations {
        for v in 0..nv {
            if fixed[v] || nbrs[v].is_empty() {
                continue;
            }
            let m = nbrs[v].len() as f64;
            let s = nbrs[v].iter().fold([0.0, 0.0], |c, &u| {
                [c[0] + mesh.vertices[u][0], c[1] + mesh.vertices[u][1]]
            });
            let old = mesh.vertices[v];
            let min_before = incident[v]
                .iter()
                .map(|&t| quality(mesh, t))
                .fold(f64::INFINITY, f64::min);
            mesh.vertices[v] = [s[0] / m, s[1] / m];
            let min_after = incident[v]
                .iter()
                .map(|&t| quality(mesh, t))
                .fold(f64::INFINITY, f64::min);
            if min_after < min_before.min(0.5) {
                mesh.vertices[v] = old;
            }
        }
    }
}

/// Area over squared longest edge, normalized to 1 for equilateral triangles.
fn quality(mesh: &InteriorMesh, t: usize) -> f64 {
    let d = mesh.diameter(t);
    mesh.signed_area(t) / (d * d) * (4.0 / 3f64.sqrt())
}

/// Uniform refinement: every triangle is split into four through its edge
/// midpoints. Area and the straight boundary polygon are preserved.
pub fn refine(mesh: &InteriorMesh) -> InteriorMesh {
    refine_impl(mesh).0
}

/// Uniform refinement that also places the new boundary vertices on the
/// source curve of `boundary` (when known), returning the refined pair.
///
/// Keeping boundary vertices on the curve makes the domain approximation
/// error shrink with the mesh width instead of freezing at the coarse
/// polygon.
pub fn refine_with_boundary(
    mesh: &InteriorMesh,
    boundary: &BoundaryMesh,
) -> Result<(InteriorMesh, BoundaryMesh)> {
    if mesh.boundary_trace_map.len() != boundary.len() {
        return Err(Error::DimensionMismatch(
            "boundary mesh does not belong to this triangulation".into(),
        ));
    }
    let (mut fine, mids) = refine_impl(mesh);
    let nb = boundary.len();
    let new_boundary = match &boundary.curve {
        Some((curve, params)) => {
            let mut new_params = Vec::with_capacity(2 * nb);
            for k in 0..nb {
                let t0 = params[k];
                let mut t1 = params[(k + 1) % nb];
                if k + 1 == nb {
                    t1 += 2.0 * PI;
                }
                let tm = 0.5 * (t0 + t1);
                new_params.push(t0);
                new_params.push(tm);
                fine.vertices[mids[k]] = curve.eval(tm);
            }
            for (k, &v) in fine.boundary_trace_map.iter().enumerate() {
                fine.vertices[v] = curve.eval(new_params[k]);
            }
            BoundaryMesh::with_curve(*curve, new_params)?
        }
        None => fine.boundary_mesh()?,
    };
    fine.validate()?;
    Ok((fine, new_boundary))
}

/// Returns the refined mesh and, per coarse boundary segment, the vertex
/// created at its midpoint.
fn refine_impl(mesh: &InteriorMesh) -> (InteriorMesh, Vec<usize>) {
    let mut vertices = mesh.vertices.clone();
    let mut mid_of: HashMap<[usize; 2], usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<Point>| -> usize {
        *mid_of.entry(sorted(a, b)).or_insert_with(|| {
            vertices.push(mid(vertices[a], vertices[b]));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = midpoint(a, b, &mut vertices);
        let bc = midpoint(b, c, &mut vertices);
        let ca = midpoint(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let nb = mesh.boundary_trace_map.len();
    let mut map = Vec::with_capacity(2 * nb);
    let mut mids = Vec::with_capacity(nb);
    for k in 0..nb {
        let a = mesh.boundary_trace_map[k];
        let b = mesh.boundary_trace_map[(k + 1) % nb];
        let m = midpoint(a, b, &mut vertices);
        map.push(a);
        map.push(m);
        mids.push(m);
    }
    (
        InteriorMesh {
            vertices,
            triangles,
            boundary_trace_map: map,
        },
        mids,
    )
}

fn edge_counts(triangles: &[[usize; 3]]) -> HashMap<[usize; 2], usize> {
    let mut m = HashMap::new();
    for t in triangles {
        for k in 0..3 {
            *m.entry(sorted(t[k], t[(k + 1) % 3])).or_insert(0) += 1;
        }
    }
    m
}

fn sorted(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

pub(crate) fn mid(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

pub(crate) fn tri_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Shoelace area of a closed polygon.
pub fn polygon_area(nodes: &[Point]) -> f64 {
    let n = nodes.len();
    let mut s = 0.0;
    for i in 0..n {
        let a = nodes[i];
        let b = nodes[(i + 1) % n];
        s += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * s
}

fn point_in_polygon(nodes: &[Point], p: Point) -> bool {
    let n = nodes.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (nodes[i], nodes[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

pub(crate) fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0);
    dist(p, [a[0] + t * d[0], a[1] + t * d[1]])
}

fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = tri_area(a, b, c);
    let o2 = tri_area(a, b, d);
    let o3 = tri_area(c, d, a);
    let o4 = tri_area(c, d, b);
    (o1 > 0.0) != (o2 > 0.0) && (o3 > 0.0) != (o4 > 0.0) && o1 != 0.0 && o2 != 0.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_of_four_chords() {
        let m = circle_boundary(1.0, 4).unwrap();
        for l in &m.lengths {
            assert!((l - 2f64.sqrt()).abs() < 1e-12);
        }
        assert!((m.perimeter() - 5.656_854_249_5).abs() < 1e-9);
    }

    #[test]
    fn clockwise_loop_is_rejected() {
        let nodes = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]];
        assert!(BoundaryMesh::from_nodes(nodes).is_err());
    }

    #[test]
    fn refine_splits_reference_triangle() {
        let m = InteriorMesh {
            vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            triangles: vec![[0, 1, 2]],
            boundary_trace_map: vec![0, 1, 2],
        };
        let r = refine(&m);
        assert_eq!(r.triangles.len(), 4);
        for t in 0..4 {
            assert!((r.signed_area(t) - 0.125).abs() < 1e-15);
        }
        assert_eq!(r.boundary_trace_map.len(), 6);
        r.validate().unwrap();
    }
}
