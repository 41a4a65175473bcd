//! Discretized domains and the geometric functionals that enter the bounds:
//! volume, moment of inertia, the ratio volume / inertia, the distance to
//! the boundary and the interior diameter.
//!
//! Domains live on a uniform lattice of spacing `h`. Each lattice node is the
//! center of a cell of side `h`; a node is interior iff it lies strictly
//! inside the domain. Nodes on the boundary are Dirichlet nodes and are
//! eliminated, so the unit interval at `h = 0.25` has the three interior
//! nodes `0.25, 0.5, 0.75`.
//!
//! When the domain is placed around the coordinate origin (needed for the
//! inverse-square potential) the lattice is shifted by `h/2` in every axis so
//! that the origin is a cell corner and never a node.

use std::collections::BinaryHeap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice nodes closer than this fraction of `h` to the boundary are
/// treated as boundary nodes.
const BOUNDARY_SNAP: f64 = 1e-9;

/// Largest lattice (bounding box of the domain, in nodes) we agree to build.
const MAX_LATTICE_NODES: usize = 60_000_000;

/// Above this many (interior point, boundary face) pairs the mask distance
/// field switches from brute force to nearest-face propagation.
const BRUTE_FORCE_WORK: usize = 500_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Interval { length: f64 },
    Rectangle { width: f64, height: f64 },
    Box { lengths: [f64; 3] },
    Disk { radius: f64 },
    Annulus { inner: f64, outer: f64 },
    /// Simple polygon in the plane, even-odd fill rule.
    Polygon { vertices: Vec<[f64; 2]> },
    /// Plain-text raster mask: first line `N h`, then one line of `N`
    /// integers per interior cell. Cell `k` is centered at `(k + 1/2) h`.
    RasterMask { path: PathBuf },
}

impl Shape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Shape::Interval { .. } => "interval",
            Shape::Rectangle { .. } => "rectangle",
            Shape::Box { .. } => "box",
            Shape::Disk { .. } => "disk",
            Shape::Annulus { .. } => "annulus",
            Shape::Polygon { .. } => "polygon",
            Shape::RasterMask { .. } => "raster_mask",
        }
    }

    /// Continuum volume and moment of inertia where a closed form exists
    /// (everything but raster masks).
    pub fn exact_geometry(&self) -> Result<Option<Geometry>> {
        use std::f64::consts::PI;
        let (v, i) = match self {
            Shape::Interval { length: l } => (*l, l.powi(3) / 12.0),
            Shape::Rectangle { width: a, height: b } => (a * b, a * b * (a * a + b * b) / 12.0),
            Shape::Box { lengths: [a, b, c] } => (a * b * c, a * b * c * (a * a + b * b + c * c) / 12.0),
            Shape::Disk { radius: r } => (PI * r * r, PI * r.powi(4) / 2.0),
            Shape::Annulus { inner, outer } => (
                PI * (outer * outer - inner * inner),
                PI * (outer.powi(4) - inner.powi(4)) / 2.0,
            ),
            Shape::Polygon { vertices } => polygon_moments(vertices),
            Shape::RasterMask { .. } => return Ok(None),
        };
        Geometry::new(v, i).map(Some)
    }

    fn box_lengths(&self) -> Option<Vec<f64>> {
        match self {
            Shape::Interval { length } => Some(vec![*length]),
            Shape::Rectangle { width, height } => Some(vec![*width, *height]),
            Shape::Box { lengths } => Some(lengths.to_vec()),
            _ => None,
        }
    }
}

/// Everything needed to build a [`GridDomain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub shape: Shape,
    /// Grid spacing.
    pub h: f64,
    /// Place the domain around the coordinate origin and shift the lattice so
    /// the origin is a cell corner. Required for the inverse-square potential.
    #[serde(default)]
    pub origin_inside: bool,
    /// Rigid translation applied to the placed domain. Empty means none.
    #[serde(default)]
    pub shift: Vec<f64>,
}

impl DomainSpec {
    pub fn new(shape: Shape, h: f64) -> Self {
        DomainSpec {
            shape,
            h,
            origin_inside: false,
            shift: Vec::new(),
        }
    }

    pub fn unit_interval(h: f64) -> Self {
        Self::new(Shape::Interval { length: 1.0 }, h)
    }

    pub fn unit_square(h: f64) -> Self {
        Self::new(
            Shape::Rectangle {
                width: 1.0,
                height: 1.0,
            },
            h,
        )
    }

    pub fn unit_cube(h: f64) -> Self {
        Self::new(
            Shape::Box {
                lengths: [1.0, 1.0, 1.0],
            },
            h,
        )
    }

    /// Disk of diameter one.
    pub fn unit_disk(h: f64) -> Self {
        Self::new(Shape::Disk { radius: 0.5 }, h)
    }

    pub fn centered(mut self) -> Self {
        self.origin_inside = true;
        self
    }

    pub fn shifted(mut self, shift: Vec<f64>) -> Self {
        self.shift = shift;
        self
    }

    pub fn dimension(&self) -> Result<usize> {
        Ok(match &self.shape {
            Shape::Interval { .. } => 1,
            Shape::Rectangle { .. }
            | Shape::Disk { .. }
            | Shape::Annulus { .. }
            | Shape::Polygon { .. } => 2,
            Shape::Box { .. } => 3,
            Shape::RasterMask { path } => read_mask_header(path)?.0,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidDomain(format!(
                "grid spacing must be positive, got {}",
                self.h
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidDomain(format!(
                    "{name} must be positive, got {v}"
                )))
            }
        };
        match &self.shape {
            Shape::Interval { length } => positive("length", *length)?,
            Shape::Rectangle { width, height } => {
                positive("width", *width)?;
                positive("height", *height)?;
            }
            Shape::Box { lengths } => {
                for l in lengths {
                    positive("box length", *l)?;
                }
            }
            Shape::Disk { radius } => positive("radius", *radius)?,
            Shape::Annulus { inner, outer } => {
                positive("inner radius", *inner)?;
                positive("outer radius", *outer)?;
                if inner >= outer {
                    return Err(Error::InvalidDomain(format!(
                        "annulus inner radius {inner} must be below outer radius {outer}"
                    )));
                }
            }
            Shape::Polygon { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::InvalidDomain(
                        "polygon needs at least three vertices".into(),
                    ));
                }
                if vertices.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::InvalidDomain(
                        "polygon vertices must be finite".into(),
                    ));
                }
                if polygon_area(vertices).abs() <= 0.0 {
                    return Err(Error::InvalidDomain("polygon has zero area".into()));
                }
            }
            Shape::RasterMask { .. } => {}
        }
        if !self.shift.is_empty() {
            let n = self.dimension()?;
            if self.shift.len() != n {
                return Err(Error::InvalidDomain(format!(
                    "shift has {} components, domain dimension is {n}",
                    self.shift.len()
                )));
            }
            if self.shift.iter().any(|s| !s.is_finite()) {
                return Err(Error::InvalidDomain("shift must be finite".into()));
            }
        }
        Ok(())
    }
}

/// Analytic region with exact containment and boundary distance.
#[derive(Clone, Debug)]
enum Region {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    Polygon { vertices: Vec<[f64; 2]> },
}

impl Region {
    fn place(spec: &DomainSpec) -> Option<Region> {
        let n = spec.dimension().ok()?;
        let shift = |k: usize| spec.shift.get(k).copied().unwrap_or(0.0);
        if let Some(lengths) = spec.shape.box_lengths() {
            let lo: Vec<f64> = lengths
                .iter()
                .enumerate()
                .map(|(k, l)| if spec.origin_inside { -l / 2.0 } else { 0.0 } + shift(k))
                .collect();
            let hi = lo.iter().zip(&lengths).map(|(a, l)| a + l).collect();
            return Some(Region::Box { lo, hi });
        }
        debug_assert_eq!(n, 2);
        match &spec.shape {
            Shape::Disk { radius } => {
                let c = if spec.origin_inside { 0.0 } else { *radius };
                Some(Region::Disk {
                    center: [c + shift(0), c + shift(1)],
                    radius: *radius,
                })
            }
            Shape::Annulus { inner, outer } => {
                let c = if spec.origin_inside { 0.0 } else { *outer };
                Some(Region::Annulus {
                    center: [c + shift(0), c + shift(1)],
                    inner: *inner,
                    outer: *outer,
                })
            }
            Shape::Polygon { vertices } => Some(Region::Polygon {
                vertices: vertices
                    .iter()
                    .map(|v| [v[0] + shift(0), v[1] + shift(1)])
                    .collect(),
            }),
            _ => None,
        }
    }

    fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Region::Box { lo, hi } => (lo.clone(), hi.clone()),
            Region::Disk { center, radius } => (
                vec![center[0] - radius, center[1] - radius],
                vec![center[0] + radius, center[1] + radius],
            ),
            Region::Annulus { center, outer, .. } => (
                vec![center[0] - outer, center[1] - outer],
                vec![center[0] + outer, center[1] + outer],
            ),
            Region::Polygon { vertices } => {
                let mut lo = vec![f64::INFINITY; 2];
                let mut hi = vec![f64::NEG_INFINITY; 2];
                for v in vertices {
                    for k in 0..2 {
                        lo[k] = lo[k].min(v[k]);
                        hi[k] = hi[k].max(v[k]);
                    }
                }
                (lo, hi)
            }
        }
    }

    /// Signed distance to the boundary: positive inside, non-positive outside.
    fn inner_distance(&self, x: &[f64]) -> f64 {
        match self {
            Region::Box { lo, hi } => x
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&xi, (&a, &b))| (xi - a).min(b - xi))
                .fold(f64::INFINITY, f64::min),
            Region::Disk { center, radius } => radius - (x[0] - center[0]).hypot(x[1] - center[1]),
            Region::Annulus {
                center,
                inner,
                outer,
            } => {
                let rho = (x[0] - center[0]).hypot(x[1] - center[1]);
                (outer - rho).min(rho - inner)
            }
            Region::Polygon { vertices } => {
                let p = [x[0], x[1]];
                let d = polygon_edge_distance(vertices, p);
                if point_in_polygon(vertices, p) {
                    d
                } else {
                    -d
                }
            }
        }
    }
}

/// A discretized bounded open set.
///
/// Immutable after construction; interior points are stored as sorted flat
/// indices into the bounding lattice (last axis fastest).
#[derive(Clone, Debug)]
pub struct GridDomain {
    dim: usize,
    h: f64,
    /// Coordinates of lattice index `(0, .., 0)`.
    lattice_origin: Vec<f64>,
    counts: Vec<usize>,
    strides: Vec<usize>,
    interior: Vec<usize>,
    /// Lattice flat index -> interior position, `u32::MAX` if exterior.
    slot: Vec<u32>,
    distance: Vec<f64>,
    origin_inside: bool,
    spec: DomainSpec,
}

const NO_SLOT: u32 = u32::MAX;

/// Build the grid for a domain specification.
pub fn discretize(spec: &DomainSpec) -> Result<GridDomain> {
    spec.validate()?;
    match &spec.shape {
        Shape::RasterMask { path } => discretize_mask(spec, path),
        _ => discretize_region(spec),
    }
}

fn discretize_region(spec: &DomainSpec) -> Result<GridDomain> {
    let h = spec.h;
    let region = Region::place(spec).expect("analytic shape");
    let (lo, hi) = region.bounds();
    let dim = lo.len();

    if spec.origin_inside && region.inner_distance(&vec![0.0; dim]) <= 0.0 {
        return Err(Error::InvalidDomain(format!(
            "{} does not contain the origin in its interior",
            spec.shape.kind_name()
        )));
    }

    // Candidate lattice: anchor at the lower corner, or at the origin's cell
    // corner when the origin must not be a node.
    let mut first = Vec::with_capacity(dim);
    let mut span = Vec::with_capacity(dim);
    for k in 0..dim {
        let (start, end) = if spec.origin_inside {
            let a = (lo[k] / h).floor() as i64 - 1;
            let b = (hi[k] / h).ceil() as i64 + 1;
            ((a as f64 + 0.5) * h, (b - a + 1) as usize)
        } else {
            (lo[k], ((hi[k] - lo[k]) / h).ceil() as usize + 1)
        };
        first.push(start);
        span.push(span_guard(end)?);
    }
    let total: usize = span.iter().product();
    if total > MAX_LATTICE_NODES {
        return Err(Error::InvalidDomain(format!(
            "grid with {total} candidate nodes exceeds the supported size"
        )));
    }

    let snap = BOUNDARY_SNAP * h;
    let mut kept: Vec<(Vec<usize>, f64)> = Vec::new();
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    for _ in 0..total {
        for k in 0..dim {
            x[k] = first[k] + idx[k] as f64 * h;
        }
        let d = region.inner_distance(&x);
        if d > snap {
            kept.push((idx.clone(), d));
        }
        increment(&mut idx, &span);
    }
    if kept.is_empty() {
        return Err(Error::EmptyInterior { h });
    }

    // Shrink the lattice to the index box of the interior nodes.
    let mut min = vec![usize::MAX; dim];
    let mut max = vec![0usize; dim];
    for (j, _) in &kept {
        for k in 0..dim {
            min[k] = min[k].min(j[k]);
            max[k] = max[k].max(j[k]);
        }
    }
    let counts: Vec<usize> = (0..dim).map(|k| max[k] - min[k] + 1).collect();
    let lattice_origin: Vec<f64> = (0..dim).map(|k| first[k] + min[k] as f64 * h).collect();
    let strides = strides_for(&counts);
    let mut entries: Vec<(usize, f64)> = kept
        .into_iter()
        .map(|(j, d)| {
            let flat = (0..dim).map(|k| (j[k] - min[k]) * strides[k]).sum();
            (flat, d)
        })
        .collect();
    entries.sort_by_key(|e| e.0);
    let (interior, distance): (Vec<usize>, Vec<f64>) = entries.into_iter().unzip();

    Ok(GridDomain::assemble(
        dim,
        h,
        lattice_origin,
        counts,
        interior,
        distance,
        spec.origin_inside,
        spec.clone(),
    ))
}

fn span_guard(n: usize) -> Result<usize> {
    if n > MAX_LATTICE_NODES {
        Err(Error::InvalidDomain(format!(
            "{n} nodes along one axis exceeds the supported size"
        )))
    } else {
        Ok(n)
    }
}

fn strides_for(counts: &[usize]) -> Vec<usize> {
    let mut strides = vec![1; counts.len()];
    for k in (0..counts.len().saturating_sub(1)).rev() {
        strides[k] = strides[k + 1] * counts[k + 1];
    }
    strides
}

fn increment(idx: &mut [usize], span: &[usize]) {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < span[k] {
            return;
        }
        idx[k] = 0;
    }
}

impl GridDomain {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        dim: usize,
        h: f64,
        lattice_origin: Vec<f64>,
        counts: Vec<usize>,
        interior: Vec<usize>,
        distance: Vec<f64>,
        origin_inside: bool,
        spec: DomainSpec,
    ) -> GridDomain {
        let strides = strides_for(&counts);
        let total: usize = counts.iter().product();
        let mut slot = vec![NO_SLOT; total];
        for (pos, &flat) in interior.iter().enumerate() {
            slot[flat] = pos as u32;
        }
        GridDomain {
            dim,
            h,
            lattice_origin,
            counts,
            strides,
            interior,
            slot,
            distance,
            origin_inside,
            spec,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior points.
    pub fn len(&self) -> usize {
        self.interior.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interior.is_empty()
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn origin_inside(&self) -> bool {
        self.origin_inside
    }

    /// Nodes per axis of the bounding lattice.
    pub fn lattice_counts(&self) -> &[usize] {
        &self.counts
    }

    /// Sorted flat lattice indices of the interior points.
    pub fn interior_indices(&self) -> &[usize] {
        &self.interior
    }

    /// True when every node of the bounding lattice is interior, i.e. the
    /// grid is a full tensor product and the discrete Laplacian separates.
    pub fn is_tensor_box(&self) -> bool {
        self.interior.len() == self.slot.len()
    }

    /// Lattice multi-index of interior point `i`.
    pub fn lattice_index(&self, i: usize) -> Vec<usize> {
        let mut flat = self.interior[i];
        let mut out = vec![0; self.dim];
        for k in 0..self.dim {
            out[k] = flat / self.strides[k];
            flat %= self.strides[k];
        }
        out
    }

    /// Interior position of a lattice multi-index, if that node is interior.
    pub fn position(&self, index: &[usize]) -> Option<usize> {
        if index.len() != self.dim || index.iter().zip(&self.counts).any(|(i, n)| i >= n) {
            return None;
        }
        let flat: usize = index.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        match self.slot[flat] {
            NO_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// Interior neighbor of point `i` one step along `axis`, forward or
    /// backward. `None` means the neighbor is a Dirichlet node.
    pub fn neighbor(&self, i: usize, axis: usize, forward: bool) -> Option<usize> {
        let flat = self.interior[i];
        let coord = (flat / self.strides[axis]) % self.counts[axis];
        let next = if forward {
            if coord + 1 >= self.counts[axis] {
                return None;
            }
            flat + self.strides[axis]
        } else {
            if coord == 0 {
                return None;
            }
            flat - self.strides[axis]
        };
        match self.slot[next] {
            NO_SLOT => None,
            s => Some(s as usize),
        }
    }

    /// Coordinates of interior point `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        self.point_into(i, &mut x);
        x
    }

    pub fn point_into(&self, i: usize, x: &mut [f64]) {
        let mut flat = self.interior[i];
        for k in 0..self.dim {
            let j = flat / self.strides[k];
            flat %= self.strides[k];
            x[k] = self.lattice_origin[k] + j as f64 * self.h;
        }
    }

    /// Euclidean norm of each interior point.
    pub fn radii(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        (0..self.len())
            .map(|i| {
                self.point_into(i, &mut x);
                x.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Distance from each interior point to the boundary.
    pub fn distance_field(&self) -> &[f64] {
        &self.distance
    }

    /// Quadrature weight `h^N` of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        volume(self)
    }

    pub fn moment_of_inertia(&self) -> f64 {
        moment_of_inertia(self)
    }

    pub fn ratio(&self) -> Result<f64> {
        ratio(self)
    }

    pub fn interior_diameter(&self) -> f64 {
        interior_diameter(self)
    }

    pub fn geometry(&self) -> Result<Geometry> {
        Ok(Geometry {
            volume: self.volume(),
            inertia: self.moment_of_inertia(),
            ratio: self.ratio()?,
        })
    }
}

/// Volume, moment of inertia and their ratio, as consumed by the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub volume: f64,
    pub inertia: f64,
    pub ratio: f64,
}

impl Geometry {
    /// Geometry given by its volume and moment of inertia.
    pub fn new(volume: f64, inertia: f64) -> Result<Geometry> {
        if !(volume > 0.0 && inertia > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "volume and inertia must be positive (got {volume}, {inertia})"
            )));
        }
        Ok(Geometry {
            volume,
            inertia,
            ratio: volume / inertia,
        })
    }
}

/// Area and polar moment about the centroid of a simple polygon.
fn polygon_moments(v: &[[f64; 2]]) -> (f64, f64) {
    let (mut a, mut cx, mut cy, mut j) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..v.len() {
        let [x0, y0] = v[k];
        let [x1, y1] = v[(k + 1) % v.len()];
        let cross = x0 * y1 - x1 * y0;
        a += cross;
        cx += (x0 + x1) * cross;
        cy += (y0 + y1) * cross;
        j += (x0 * x0 + x0 * x1 + x1 * x1 + y0 * y0 + y0 * y1 + y1 * y1) * cross;
    }
    a /= 2.0;
    cx /= 6.0 * a;
    cy /= 6.0 * a;
    j /= 12.0;
    let area = a.abs();
    (area, j * a.signum() - area * (cx * cx + cy * cy))
}

/// `h^N` times the number of interior points.
pub fn volume(dom: &GridDomain) -> f64 {
    dom.cell_volume() * dom.len() as f64
}

/// Center of mass of the interior points.
pub fn centroid(dom: &GridDomain) -> Vec<f64> {
    let mut c = vec![0.0; dom.dim];
    let mut x = vec![0.0; dom.dim];
    for i in 0..dom.len() {
        dom.point_into(i, &mut x);
        for k in 0..dom.dim {
            c[k] += x[k];
        }
    }
    let n = dom.len() as f64;
    c.iter_mut().for_each(|v| *v /= n);
    c
}

/// `min_a sum_i h^N |x_i - a|^2`. The objective is a strictly convex quadratic
/// in `a`, minimized at the centroid.
pub fn moment_of_inertia(dom: &GridDomain) -> f64 {
    second_moment_about(dom, &centroid(dom))
}

/// `sum_i h^N |x_i - a|^2` for a fixed center `a`.
pub fn second_moment_about(dom: &GridDomain, a: &[f64]) -> f64 {
    let mut x = vec![0.0; dom.dim];
    let mut s = 0.0;
    for i in 0..dom.len() {
        dom.point_into(i, &mut x);
        s += x.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum::<f64>();
    }
    s * dom.cell_volume()
}

/// Volume divided by moment of inertia.
pub fn ratio(dom: &GridDomain) -> Result<f64> {
    let inertia = moment_of_inertia(dom);
    if !(inertia > 0.0) {
        return Err(Error::InvalidDomain(
            "moment of inertia vanishes; the domain is degenerate".into(),
        ));
    }
    Ok(volume(dom) / inertia)
}

pub fn distance_field(dom: &GridDomain) -> &[f64] {
    dom.distance_field()
}

/// Twice the largest distance from an interior point to the boundary.
pub fn interior_diameter(dom: &GridDomain) -> f64 {
    2.0 * dom.distance.iter().copied().fold(0.0, f64::max)
}

// ---------------------------------------------------------------------------
// Polygons

fn polygon_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| {
            let (a, b) = (v[i], v[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        / 2.0
}

fn point_in_polygon(v: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = v.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0];
            if p[0] < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segment_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

fn polygon_edge_distance(v: &[[f64; 2]], p: [f64; 2]) -> f64 {
    let n = v.len();
    (0..n)
        .map(|i| segment_distance(v[i], v[(i + 1) % n], p))
        .fold(f64::INFINITY, f64::min)
}

// ---------------------------------------------------------------------------
// Raster masks

fn read_mask_header(path: &Path) -> Result<(usize, f64)> {
    let text = fs::read_to_string(path).map_err(|source| Error::MaskIo {
        path: path.to_path_buf(),
        source,
    })?;
    parse_mask_header(path, text.lines().next().unwrap_or(""))
}

fn parse_mask_header(path: &Path, line: &str) -> Result<(usize, f64)> {
    let bad = |message: &str| Error::MaskFormat {
        path: path.to_path_buf(),
        line: 1,
        message: message.to_string(),
    };
    let mut parts = line.split_whitespace();
    let n: usize = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("expected `N h` header"))?;
    let h: f64 = parts
        .next()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| bad("expected `N h` header"))?;
    if parts.next().is_some() || n == 0 {
        return Err(bad("expected `N h` header"));
    }
    Ok((n, h))
}

/// Parsed raster mask: dimension, spacing and interior cell indices.
#[derive(Clone, Debug, PartialEq)]
pub struct RasterMask {
    pub dim: usize,
    pub h: f64,
    pub cells: Vec<Vec<i64>>,
}

impl RasterMask {
    pub fn read(path: &Path) -> Result<RasterMask> {
        let text = fs::read_to_string(path).map_err(|source| Error::MaskIo {
            path: path.to_path_buf(),
            source,
        })?;
        let mut lines = text.lines();
        let (dim, h) = parse_mask_header(path, lines.next().unwrap_or(""))?;
        let mut cells = Vec::new();
        for (no, line) in lines.enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let idx: std::result::Result<Vec<i64>, _> =
                line.split_whitespace().map(str::parse).collect();
            match idx {
                Ok(idx) if idx.len() == dim => cells.push(idx),
                _ => {
                    return Err(Error::MaskFormat {
                        path: path.to_path_buf(),
                        line: no + 2,
                        message: format!("expected {dim} integers"),
                    })
                }
            }
        }
        Ok(RasterMask { dim, h, cells })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = format!("{} {}\n", self.dim, self.h);
        for c in &self.cells {
            let row: Vec<String> = c.iter().map(i64::to_string).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Rasterize an analytic domain. Mask cells are centered at `(k + 1/2) h`,
    /// so the domain's lattice must be the origin-corner lattice (a centered
    /// spec, possibly shifted by multiples of `h`).
    pub fn from_spec(spec: &DomainSpec) -> Result<RasterMask> {
        let dom = discretize(spec)?;
        let h = dom.h();
        let mut cells = Vec::with_capacity(dom.len());
        for i in 0..dom.len() {
            let mut cell = Vec::with_capacity(dom.dim());
            for x in dom.point(i) {
                let k = x / h - 0.5;
                if (k - k.round()).abs() > 1e-6 {
                    return Err(Error::InvalidDomain(
                        "raster masks need nodes at (k + 1/2) h; use a centered domain".into(),
                    ));
                }
                cell.push(k.round() as i64);
            }
            cells.push(cell);
        }
        Ok(RasterMask {
            dim: dom.dim(),
            h,
            cells,
        })
    }
}

fn discretize_mask(spec: &DomainSpec, path: &Path) -> Result<GridDomain> {
    let mask = RasterMask::read(path)?;
    if (mask.h - spec.h).abs() > 1e-12 * spec.h.max(mask.h) {
        return Err(Error::InvalidDomain(format!(
            "mask spacing {} differs from requested spacing {}",
            mask.h, spec.h
        )));
    }
    if !(mask.h > 0.0) {
        return Err(Error::InvalidDomain("mask spacing must be positive".into()));
    }
    if mask.cells.is_empty() {
        return Err(Error::EmptyInterior { h: mask.h });
    }
    let dim = mask.dim;
    let h = mask.h;
    let mut min = vec![i64::MAX; dim];
    let mut max = vec![i64::MIN; dim];
    for c in &mask.cells {
        for k in 0..dim {
            min[k] = min[k].min(c[k]);
            max[k] = max[k].max(c[k]);
        }
    }
    let counts: Vec<usize> = (0..dim)
        .map(|k| span_guard((max[k] - min[k] + 1) as usize))
        .collect::<Result<_>>()?;
    if counts.iter().product::<usize>() > MAX_LATTICE_NODES {
        return Err(Error::InvalidDomain("mask lattice too large".into()));
    }
    let strides = strides_for(&counts);
    let mut interior: Vec<usize> = mask
        .cells
        .iter()
        .map(|c| (0..dim).map(|k| (c[k] - min[k]) as usize * strides[k]).sum())
        .collect();
    interior.sort_unstable();
    interior.dedup();
    let shift = |k: usize| spec.shift.get(k).copied().unwrap_or(0.0);
    let lattice_origin: Vec<f64> = (0..dim)
        .map(|k| (min[k] as f64 + 0.5) * h + shift(k))
        .collect();

    let mut dom = GridDomain::assemble(
        dim,
        h,
        lattice_origin,
        counts,
        interior,
        Vec::new(),
        spec.origin_inside,
        spec.clone(),
    );

    if spec.origin_inside {
        // The origin is a cell corner; all 2^N cells around it must be interior.
        for corner in 0..(1usize << dim) {
            let idx: Option<Vec<usize>> = (0..dim)
                .map(|k| {
                    let cell = if corner >> k & 1 == 1 { 0 } else { -1 };
                    let off = cell - min[k];
                    (off >= 0).then_some(off as usize)
                })
                .collect();
            if idx.and_then(|i| dom.position(&i)).is_none() || spec.shift.iter().any(|s| *s != 0.0)
            {
                return Err(Error::InvalidDomain(
                    "raster mask does not contain the origin in its interior".into(),
                ));
            }
        }
    }

    let faces = boundary_faces(&dom);
    dom.distance = if dom.len().saturating_mul(faces.len()) <= BRUTE_FORCE_WORK {
        mask_distance_brute(&dom, &faces)
    } else {
        mask_distance_marching(&dom, &faces)
    };
    Ok(dom)
}

/// A boundary face of a mask: the face of interior cell `cell` normal to
/// `axis` on the `forward` side, whose neighbor is exterior.
#[derive(Clone, Copy, Debug)]
struct Face {
    cell: usize,
    axis: usize,
    forward: bool,
}

fn boundary_faces(dom: &GridDomain) -> Vec<Face> {
    let mut faces = Vec::new();
    for i in 0..dom.len() {
        for axis in 0..dom.dim {
            for forward in [false, true] {
                if dom.neighbor(i, axis, forward).is_none() {
                    faces.push(Face {
                        cell: i,
                        axis,
                        forward,
                    });
                }
            }
        }
    }
    faces
}

fn face_distance(dom: &GridDomain, face: &Face, center: &[f64], p: &[f64]) -> f64 {
    let half = dom.h / 2.0;
    let mut s = 0.0;
    for k in 0..dom.dim {
        let q = if k == face.axis {
            center[k] + if face.forward { half } else { -half }
        } else {
            p[k].clamp(center[k] - half, center[k] + half)
        };
        s += (p[k] - q) * (p[k] - q);
    }
    s.sqrt()
}

fn mask_distance_brute(dom: &GridDomain, faces: &[Face]) -> Vec<f64> {
    let centers: Vec<Vec<f64>> = faces.iter().map(|f| dom.point(f.cell)).collect();
    let mut p = vec![0.0; dom.dim];
    (0..dom.len())
        .map(|i| {
            dom.point_into(i, &mut p);
            faces
                .iter()
                .zip(&centers)
                .map(|(f, c)| face_distance(dom, f, c, &p))
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

#[derive(PartialEq)]
struct Front {
    dist: f64,
    cell: usize,
}

impl Eq for Front {}

impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Front {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.cell.cmp(&self.cell))
    }
}

/// Dijkstra-ordered propagation of nearest boundary faces. Each cell inherits
/// the nearest face among its neighbors' labels; distances are exact to the
/// chosen face, so the error is only in the face choice (O(h)).
fn mask_distance_marching(dom: &GridDomain, faces: &[Face]) -> Vec<f64> {
    let n = dom.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut label = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    let mut p = vec![0.0; dom.dim];
    for (fi, f) in faces.iter().enumerate() {
        let c = dom.point(f.cell);
        let d = face_distance(dom, f, &c, &c);
        if d < dist[f.cell] {
            dist[f.cell] = d;
            label[f.cell] = fi;
            heap.push(Front { dist: d, cell: f.cell });
        }
    }
    let mut done = vec![false; n];
    while let Some(Front { dist: d, cell }) = heap.pop() {
        if done[cell] || d > dist[cell] {
            continue;
        }
        done[cell] = true;
        let f = &faces[label[cell]];
        let c = dom.point(f.cell);
        for axis in 0..dom.dim {
            for forward in [false, true] {
                if let Some(j) = dom.neighbor(cell, axis, forward) {
                    if done[j] {
                        continue;
                    }
                    dom.point_into(j, &mut p);
                    let dj = face_distance(dom, f, &c, &p);
                    if dj < dist[j] {
                        dist[j] = dj;
                        label[j] = label[cell];
                        heap.push(Front { dist: dj, cell: j });
                    }
                }
            }
        }
    }
    dist
}

#[cfg(test)]
pub(crate) fn mask_distance_both(dom: &GridDomain) -> (Vec<f64>, Vec<f64>) {
    let faces = boundary_faces(dom);
    (
        mask_distance_brute(dom, &faces),
        mask_distance_marching(dom, &faces),
    )
}
