//! Conforming triangular background meshes with facet topology and
//! red-green refinement.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Axis-aligned box `[x0, x1] x [y0, y1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn new(min: Point, max: Point) -> Self {
        Self { min, max }
    }

    pub fn area(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1])
    }

    fn is_degenerate(&self) -> bool {
        !(self.max[0] > self.min[0] && self.max[1] > self.min[1])
            || !self.area().is_finite()
    }
}

/// An edge of the triangulation. `elements.0` has the lower element index;
/// the facet normal points from `elements.0` towards `elements.1`.
#[derive(Clone, Debug, PartialEq)]
pub struct Facet {
    /// Endpoints, sorted ascending.
    pub vertices: [usize; 2],
    pub elements: (usize, Option<usize>),
}

impl Facet {
    pub fn is_interior(&self) -> bool {
        self.elements.1.is_some()
    }
}

/// Record of a green bisection: `parent` was split along its edge
/// `split_edge` (local index, opposite vertex) at `midpoint`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenFamily {
    pub parent: [usize; 3],
    pub split_edge: usize,
    pub midpoint: usize,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    facets: Vec<Facet>,
    element_facets: Vec<[usize; 3]>,
    diameters: Vec<f64>,
    green: Vec<Option<usize>>,
    families: Vec<GreenFamily>,
    bbox: BoundingBox,
}

/// Local edge `i` of a triangle is the one opposite vertex `i`.
pub const fn local_edge(i: usize) -> (usize, usize) {
    ((i + 1) % 3, (i + 2) % 3)
}

fn sorted(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn midpoint(a: Point, b: Point) -> Point {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}

impl Mesh {
    /// Assemble a mesh from raw data, computing facets and diameters.
    fn from_parts(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        green: Vec<Option<usize>>,
        families: Vec<GreenFamily>,
        bbox: BoundingBox,
    ) -> Self {
        let mut facets: Vec<Facet> = Vec::with_capacity(elements.len() * 3 / 2 + 8);
        let mut lookup: HashMap<(usize, usize), usize> = HashMap::with_capacity(elements.len() * 2);
        let mut element_facets = Vec::with_capacity(elements.len());
        for (e, tri) in elements.iter().enumerate() {
            let mut ef = [0usize; 3];
            for (i, slot) in ef.iter_mut().enumerate() {
                let (a, b) = local_edge(i);
                let key = sorted(tri[a], tri[b]);
                let f = *lookup.entry(key).or_insert_with(|| {
                    facets.push(Facet { vertices: [key.0, key.1], elements: (e, None) });
                    facets.len() - 1
                });
                if facets[f].elements.0 != e {
                    debug_assert!(facets[f].elements.1.is_none(), "non-manifold facet");
                    facets[f].elements.1 = Some(e);
                }
                *slot = f;
            }
            element_facets.push(ef);
        }
        let diameters = elements
            .iter()
            .map(|t| {
                let (a, b, c) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
                dist(a, b).max(dist(b, c)).max(dist(c, a))
            })
            .collect();
        Self { vertices, elements, facets, element_facets, diameters, green, families, bbox }
    }

    /// Mesh from explicit vertices and counterclockwise triangles.
    pub fn from_triangles(vertices: Vec<Point>, elements: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.is_empty() || elements.is_empty() {
            return Err(Error::InvalidArgument("mesh needs at least one triangle".into()));
        }
        for (e, t) in elements.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidArgument(format!("element {e} references a missing vertex")));
            }
            if !(signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) > 0.0) {
                return Err(Error::InvalidArgument(format!("element {e} is not counterclockwise with positive area")));
            }
        }
        let mut min = [f64::INFINITY; 2];
        let mut max = [f64::NEG_INFINITY; 2];
        for v in &vertices {
            for d in 0..2 {
                min[d] = min[d].min(v[d]);
                max[d] = max[d].max(v[d]);
            }
        }
        let green = vec![None; elements.len()];
        Ok(Self::from_parts(vertices, elements, green, Vec::new(), BoundingBox::new(min, max)))
    }

    /// Structured mesh of `nx * ny` rectangular cells, each split into four
    /// triangles by both diagonals.
    pub fn criss_cross(nx: usize, ny: usize, bbox: BoundingBox) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("cell counts must be positive, got {nx}x{ny}")));
        }
        if bbox.is_degenerate() {
            return Err(Error::InvalidArgument(format!("degenerate bounding box {bbox:?}")));
        }
        let hx = (bbox.max[0] - bbox.min[0]) / nx as f64;
        let hy = (bbox.max[1] - bbox.min[1]) / ny as f64;
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1) + nx * ny);
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { bbox.max[0] } else { bbox.min[0] + i as f64 * hx };
                let y = if j == ny { bbox.max[1] } else { bbox.min[1] + j as f64 * hy };
                vertices.push([x, y]);
            }
        }
        let corner = |i: usize, j: usize| j * (nx + 1) + i;
        let mut elements = Vec::with_capacity(4 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let (a, b, c, d) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
                let m = vertices.len();
                vertices.push(midpoint(vertices[a], vertices[c]));
                elements.extend_from_slice(&[[a, b, m], [b, c, m], [c, d, m], [d, a, m]]);
            }
        }
        let n = elements.len();
        Ok(Self::from_parts(vertices, elements, vec![None; n], Vec::new(), bbox))
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Facet indices of an element, local edge `i` opposite vertex `i`.
    pub fn element_facets(&self, e: usize) -> [usize; 3] {
        self.element_facets[e]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_facets(&self) -> usize {
        self.facets.len()
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }

    /// Longest edge of element `e`.
    pub fn diameter(&self, e: usize) -> f64 {
        self.diameters[e]
    }

    pub fn max_diameter(&self) -> f64 {
        self.diameters.iter().copied().fold(0.0, f64::max)
    }

    pub fn facet_length(&self, f: usize) -> f64 {
        let [a, b] = self.facets[f].vertices;
        dist(self.vertices[a], self.vertices[b])
    }

    pub fn element_coords(&self, e: usize) -> [Point; 3] {
        let t = self.elements[e];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn area(&self, e: usize) -> f64 {
        let [a, b, c] = self.element_coords(e);
        signed_area(a, b, c)
    }

    /// Edge-neighbours of `e` (through facets of positive length).
    pub fn neighbors(&self, e: usize) -> impl Iterator<Item = usize> + '_ {
        self.element_facets[e].into_iter().filter_map(move |f| {
            let (a, b) = self.facets[f].elements;
            match b {
                Some(b) if a == e => Some(b),
                Some(_) => Some(a),
                None => None,
            }
        })
    }

    /// Whether element `e` stems from a green bisection.
    pub fn is_green(&self, e: usize) -> bool {
        self.green[e].is_some()
    }

    /// Smallest interior angle over all elements, in degrees.
    pub fn min_angle_degrees(&self) -> f64 {
        let mut min = f64::INFINITY;
        for e in 0..self.num_elements() {
            let p = self.element_coords(e);
            for i in 0..3 {
                let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min = min.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
            }
        }
        min
    }

    /// Check orientation, facet multiplicity and conformity.
    ///
    /// A hanging vertex always leaves a single-element facet inside the box,
    /// so conformity is checked by requiring every boundary facet to lie on
    /// the box boundary.
    pub fn check_invariants(&self) -> Result<()> {
        for e in 0..self.num_elements() {
            if self.area(e) <= 0.0 {
                return Err(Error::InvalidGeometry(format!("element {e} is not counterclockwise")));
            }
        }
        let on_side = |p: Point, axis: usize, v: f64| (p[axis] - v).abs() <= 1e-12 * (1.0 + v.abs());
        for (i, f) in self.facets.iter().enumerate() {
            if f.is_interior() {
                continue;
            }
            let (a, b) = (self.vertices[f.vertices[0]], self.vertices[f.vertices[1]]);
            let on_boundary = [(0, self.bbox.min[0]), (0, self.bbox.max[0]), (1, self.bbox.min[1]), (1, self.bbox.max[1])]
                .iter()
                .any(|&(ax, v)| on_side(a, ax, v) && on_side(b, ax, v));
            if !on_boundary {
                return Err(Error::InvalidGeometry(format!(
                    "facet {i} has a single neighbour but is not on the box boundary (hanging vertex)"
                )));
            }
        }
        Ok(())
    }

    /// Red refinement of every element.
    pub fn refine_uniform(&self) -> Mesh {
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        vertices.extend(self.facets.iter().map(|f| midpoint(self.vertices[f.vertices[0]], self.vertices[f.vertices[1]])));
        let mut elements = Vec::with_capacity(4 * self.elements.len());
        for (e, t) in self.elements.iter().enumerate() {
            let ef = self.element_facets[e];
            let m = [nv + ef[0], nv + ef[1], nv + ef[2]];
            elements.extend_from_slice(&red_children(*t, m));
        }
        let n = elements.len();
        Mesh::from_parts(vertices, elements, vec![None; n], Vec::new(), self.bbox)
    }

    /// Red-refine the `marked` elements and close the mesh with green
    /// bisections. Green elements that need further refinement are replaced
    /// by their parent, which is then red-refined.
    pub fn refine_marked(&self, marked: &[usize]) -> Result<Mesh> {
        if let Some(&bad) = marked.iter().find(|&&e| e >= self.num_elements()) {
            return Err(Error::InvalidArgument(format!("marked element {bad} out of range")));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let mut is_marked = vec![false; self.num_elements()];
        marked.iter().for_each(|&e| is_marked[e] = true);
        if is_marked.iter().all(|&m| m) && self.green.iter().all(Option::is_none) {
            return Ok(self.refine_uniform());
        }

        struct Work {
            tri: [usize; 3],
            green: Option<usize>,
            alive: bool,
            marked: bool,
        }
        let mut work: Vec<Work> = self
            .elements
            .iter()
            .zip(&self.green)
            .zip(&is_marked)
            .map(|((&tri, &green), &marked)| Work { tri, green, alive: true, marked })
            .collect();
        let mut members: HashMap<usize, Vec<usize>> = HashMap::new();
        for (e, g) in self.green.iter().enumerate() {
            if let Some(g) = g {
                members.entry(*g).or_default().push(e);
            }
        }
        let mut vertices = self.vertices.clone();
        // every split edge, mapped to its midpoint vertex
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let edge_mid = |a: usize, b: usize, vertices: &mut Vec<Point>, midpoints: &mut HashMap<(usize, usize), usize>| -> usize {
            *midpoints.entry(sorted(a, b)).or_insert_with(|| {
                vertices.push(midpoint(vertices[a], vertices[b]));
                vertices.len() - 1
            })
        };
        // replace a green family by the red children of its parent
        let dissolve = |work: &mut Vec<Work>,
                        vertices: &mut Vec<Point>,
                        midpoints: &mut HashMap<(usize, usize), usize>,
                        fam: usize| {
            for &child in &members[&fam] {
                work[child].alive = false;
            }
            let family = &self.families[fam];
            let t = family.parent;
            let (a, b) = local_edge(family.split_edge);
            midpoints.insert(sorted(t[a], t[b]), family.midpoint);
            let m = [0, 1, 2].map(|i| {
                let (a, b) = local_edge(i);
                edge_mid(t[a], t[b], vertices, midpoints)
            });
            for tri in red_children(t, m) {
                work.push(Work { tri, green: None, alive: true, marked: false });
            }
        };

        loop {
            let mut changed = false;
            let mut to_dissolve: Vec<usize> = work.iter().filter(|w| w.alive && w.marked).filter_map(|w| w.green).collect();
            for w in work.iter().filter(|w| w.alive && w.marked && w.green.is_none()) {
                for i in 0..3 {
                    let (a, b) = local_edge(i);
                    edge_mid(w.tri[a], w.tri[b], &mut vertices, &mut midpoints);
                }
            }
            for w in work.iter_mut().filter(|w| w.alive && !w.marked) {
                let count = (0..3)
                    .filter(|&i| {
                        let (a, b) = local_edge(i);
                        midpoints.contains_key(&sorted(w.tri[a], w.tri[b]))
                    })
                    .count();
                if count == 0 {
                    continue;
                }
                if let Some(g) = w.green {
                    to_dissolve.push(g);
                } else if count >= 2 {
                    w.marked = true;
                    changed = true;
                }
            }
            to_dissolve.sort_unstable();
            to_dissolve.dedup();
            for fam in to_dissolve {
                dissolve(&mut work, &mut vertices, &mut midpoints, fam);
                changed = true;
            }
            if !changed {
                break;
            }
        }

        let mut elements = Vec::new();
        let mut green = Vec::new();
        let mut families = Vec::new();
        let mut family_remap: HashMap<usize, usize> = HashMap::new();
        for w in work.iter().filter(|w| w.alive) {
            let t = w.tri;
            if w.marked {
                let m = [0, 1, 2].map(|i| {
                    let (a, b) = local_edge(i);
                    midpoints[&sorted(t[a], t[b])]
                });
                for child in red_children(t, m) {
                    elements.push(child);
                    green.push(None);
                }
                continue;
            }
            let split_edge = (0..3).find(|&i| {
                let (a, b) = local_edge(i);
                midpoints.contains_key(&sorted(t[a], t[b]))
            });
            match split_edge {
                Some(i) => {
                    debug_assert!(w.green.is_none());
                    let (a, b) = local_edge(i);
                    let m = midpoints[&sorted(t[a], t[b])];
                    let fam = families.len();
                    families.push(GreenFamily { parent: t, split_edge: i, midpoint: m });
                    elements.push([t[i], t[a], m]);
                    elements.push([t[i], m, t[b]]);
                    green.push(Some(fam));
                    green.push(Some(fam));
                }
                None => {
                    elements.push(t);
                    let g = w.green.map(|old| {
                        *family_remap.entry(old).or_insert_with(|| {
                            families.push(self.families[old].clone());
                            families.len() - 1
                        })
                    });
                    green.push(g);
                }
            }
        }
        let mesh = Mesh::from_parts(vertices, elements, green, families, self.bbox);
        mesh.check_invariants().map_err(|e| Error::Internal(format!("refinement broke conformity: {e}")))?;
        Ok(mesh)
    }

    /// Plain-text dump: vertex count, one `x y` line per vertex, element
    /// count, one `a b c` line per element.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(w, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        writeln!(w, "{}", self.elements.len())?;
        for t in &self.elements {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

fn red_children(t: [usize; 3], m: [usize; 3]) -> [[usize; 3]; 4] {
    [[t[0], m[2], m[1]], [m[2], t[1], m[0]], [m[1], m[0], t[2]], [m[0], m[1], m[2]]]
}
