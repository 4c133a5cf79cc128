//! Lattice domains, nodal grid functions and the finite-difference
//! primitives shared by every other module.
//!
//! Nodes are stored in lexicographic order: sorted by `(i2, i1)`, so the
//! first lattice coordinate varies fastest. In one dimension `i2 = 0`.
//! Sweeps and serialization rely on this ordering being fixed.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Integer lattice direction. The second component is ignored in 1D.
pub type Direction = [i32; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    Interval,
    Box,
    Ball,
}

impl Shape {
    pub fn name(self) -> &'static str {
        match self {
            Shape::Interval => "interval",
            Shape::Box => "box",
            Shape::Ball => "ball",
        }
    }

    pub fn parse(s: &str) -> Option<Shape> {
        match s.trim().to_ascii_lowercase().as_str() {
            "interval" => Some(Shape::Interval),
            "box" => Some(Shape::Box),
            "ball" => Some(Shape::Ball),
            _ => None,
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainSpec {
    pub shape: Shape,
    pub dim: usize,
    /// Half-width for interval/box, radius for the ball.
    pub extent: f64,
    pub spacing: f64,
    /// Exterior sphere radius used by the barrier construction.
    pub exterior_radius: f64,
    /// Chebyshev reach of the widest stencil direction; boundary layers are
    /// this thick.
    pub reach: usize,
}

impl DomainSpec {
    pub fn interval(extent: f64, spacing: f64) -> Self {
        DomainSpec {
            shape: Shape::Interval,
            dim: 1,
            extent,
            spacing,
            exterior_radius: 1.0,
            reach: 1,
        }
    }

    pub fn square(extent: f64, spacing: f64) -> Self {
        DomainSpec {
            shape: Shape::Box,
            dim: 2,
            extent,
            spacing,
            exterior_radius: 1.0,
            reach: 1,
        }
    }

    pub fn ball(dim: usize, radius: f64, spacing: f64) -> Self {
        DomainSpec {
            shape: Shape::Ball,
            dim,
            extent: radius,
            spacing,
            exterior_radius: 1.0,
            reach: 1,
        }
    }

    pub fn with_reach(mut self, reach: usize) -> Self {
        self.reach = reach;
        self
    }

    pub fn with_exterior_radius(mut self, radius: f64) -> Self {
        self.exterior_radius = radius;
        self
    }

    /// Number of lattice cells in `extent`.
    pub fn cells(&self) -> Result<i32> {
        if !(self.spacing > 0.0) || !self.spacing.is_finite() {
            return Err(Error::config("domain.h", "spacing must be positive"));
        }
        if !(self.extent > 0.0) || !self.extent.is_finite() {
            return Err(Error::config("domain.extent", "extent must be positive"));
        }
        let ratio = self.extent / self.spacing;
        let n = ratio.round();
        if n < 1.0 || (ratio - n).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(
                "domain.h",
                format!(
                    "extent/h = {ratio} is not a positive integer (extent {}, h {})",
                    self.extent, self.spacing
                ),
            ));
        }
        if n > 1.0e6 {
            return Err(Error::config("domain.h", "grid too large"));
        }
        Ok(n as i32)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.shape, self.dim) {
            (Shape::Interval, 1) | (Shape::Box, 2) | (Shape::Ball, 1) | (Shape::Ball, 2) => {}
            (shape, dim) => {
                return Err(Error::config(
                    "domain.dim",
                    format!("shape {shape} does not support dimension {dim}"),
                ))
            }
        }
        if !(self.exterior_radius > 0.0) {
            return Err(Error::config("domain.R", "exterior sphere radius must be positive"));
        }
        if self.reach == 0 {
            return Err(Error::config("domain.reach", "stencil reach must be at least 1"));
        }
        self.cells().map(|_| ())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Interior,
    Boundary,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub index: [i32; 2],
    pub x: [f64; 2],
    pub kind: NodeKind,
}

const NO_NODE: u32 = u32::MAX;

/// A built lattice domain: coordinates, node classification and the dense
/// lattice-to-node lookup table used for stencil queries.
#[derive(Debug)]
pub struct Domain {
    spec: DomainSpec,
    cells: i32,
    half: i32,
    side: usize,
    lookup: Vec<u32>,
    nodes: Vec<Node>,
    interior: Vec<usize>,
    boundary: Vec<usize>,
}

impl Domain {
    pub fn build(spec: DomainSpec) -> Result<Arc<Domain>> {
        spec.validate()?;
        let n = spec.cells()?;
        let reach = spec.reach as i32;
        let half = n + reach;
        let side = (2 * half + 1) as usize;
        let dim = spec.dim;
        let rows = if dim == 1 { 1 } else { side };

        let inside = |i: [i32; 2]| -> bool {
            match spec.shape {
                Shape::Interval | Shape::Box => i[..dim].iter().all(|c| c.abs() < n),
                Shape::Ball => {
                    let r2: i64 = i[..dim].iter().map(|&c| (c as i64) * (c as i64)).sum();
                    r2 < (n as i64) * (n as i64)
                }
            }
        };

        let mut kind_of = vec![None; side * rows];
        let at = |i: [i32; 2]| -> usize {
            let a = (i[0] + half) as usize;
            let b = if dim == 1 { 0 } else { (i[1] + half) as usize };
            b * side + a
        };
        let lattice = |pos: usize| -> [i32; 2] {
            let a = (pos % side) as i32 - half;
            let b = if dim == 1 { 0 } else { (pos / side) as i32 - half };
            [a, b]
        };
        for pos in 0..side * rows {
            if inside(lattice(pos)) {
                kind_of[pos] = Some(NodeKind::Interior);
            }
        }
        for pos in 0..side * rows {
            if kind_of[pos].is_some() {
                continue;
            }
            let i = lattice(pos);
            let touches = neighborhood(dim, reach).any(|e| {
                let j = [i[0] + e[0], i[1] + e[1]];
                j[..dim].iter().all(|c| c.abs() <= half)
                    && matches!(kind_of[at(j)], Some(NodeKind::Interior))
            });
            if touches {
                kind_of[pos] = Some(NodeKind::Boundary);
            }
        }

        let mut lookup = vec![NO_NODE; side * rows];
        let mut nodes = Vec::new();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        for pos in 0..side * rows {
            if let Some(kind) = kind_of[pos] {
                let index = lattice(pos);
                let id = nodes.len();
                lookup[pos] = id as u32;
                let mut x = [0.0; 2];
                for k in 0..dim {
                    x[k] = index[k] as f64 * spec.spacing;
                }
                match kind {
                    NodeKind::Interior => interior.push(id),
                    NodeKind::Boundary => boundary.push(id),
                }
                nodes.push(Node { index, x, kind });
            }
        }

        Ok(Arc::new(Domain {
            spec,
            cells: n,
            half,
            side,
            lookup,
            nodes,
            interior,
            boundary,
        }))
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim
    }

    pub fn h(&self) -> f64 {
        self.spec.spacing
    }

    pub fn cells(&self) -> i32 {
        self.cells
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn coords(&self, id: usize) -> &[f64] {
        &self.nodes[id].x[..self.spec.dim]
    }

    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn boundary(&self) -> &[usize] {
        &self.boundary
    }

    pub fn is_interior(&self, id: usize) -> bool {
        self.nodes[id].kind == NodeKind::Interior
    }

    /// Node at a lattice index, if it belongs to the domain.
    pub fn node_at(&self, index: [i32; 2]) -> Option<usize> {
        let dim = self.spec.dim;
        if index[..dim].iter().any(|c| c.abs() > self.half) {
            return None;
        }
        let a = (index[0] + self.half) as usize;
        let b = if dim == 1 {
            0
        } else {
            (index[1] + self.half) as usize
        };
        match self.lookup[b * self.side + a] {
            NO_NODE => None,
            id => Some(id as usize),
        }
    }

    /// The node at `node + e`, if present.
    pub fn neighbor(&self, node: usize, e: Direction) -> Option<usize> {
        let i = self.nodes[node].index;
        let e1 = if self.spec.dim == 1 { 0 } else { e[1] };
        self.node_at([i[0] + e[0], i[1] + e1])
    }

    /// Nearest node to a point, if the rounded lattice index exists.
    pub fn nearest_node(&self, x: &[f64]) -> Option<usize> {
        let h = self.h();
        let mut idx = [0i32; 2];
        for k in 0..self.spec.dim {
            idx[k] = (x[k] / h).round() as i32;
        }
        self.node_at(idx)
    }

    /// Largest Euclidean norm over all nodes.
    pub fn max_radius(&self) -> f64 {
        self.nodes
            .iter()
            .map(|n| norm(&n.x[..self.spec.dim]))
            .fold(0.0, f64::max)
    }

    /// Upper bound on the diameter of the node set.
    pub fn diameter_bound(&self) -> f64 {
        match self.spec.shape {
            Shape::Ball => 2.0 * self.max_radius(),
            Shape::Interval | Shape::Box => {
                let half = self
                    .nodes
                    .iter()
                    .flat_map(|n| n.x[..self.spec.dim].iter().map(|c| c.abs()))
                    .fold(0.0, f64::max);
                2.0 * half * (self.spec.dim as f64).sqrt()
            }
        }
    }

    /// Lattice width of the bounding box along `x1` and `x2`.
    pub fn lattice_side(&self) -> usize {
        self.side
    }

    pub(crate) fn lattice_half(&self) -> i32 {
        self.half
    }
}

/// All nonzero lattice offsets with Chebyshev norm at most `reach`.
pub fn neighborhood(dim: usize, reach: i32) -> impl Iterator<Item = Direction> {
    let second = if dim == 1 { 0..=0 } else { -reach..=reach };
    second
        .flat_map(move |b| (-reach..=reach).map(move |a| [a, b]))
        .filter(|e| *e != [0, 0])
}

pub fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn direction_norm_sq(e: Direction, dim: usize) -> f64 {
    let e1 = if dim == 1 { 0 } else { e[1] };
    (e[0] * e[0] + e1 * e1) as f64
}

/// Nodal values on a domain.
#[derive(Debug, Clone)]
pub struct GridFunction {
    domain: Arc<Domain>,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: Arc<Domain>, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.node_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} nodes",
                values.len(),
                domain.node_count()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NumericalFailure(format!(
                "non-finite value {} at node {i}",
                values[i]
            )));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn from_fn(domain: Arc<Domain>, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..domain.node_count())
            .map(|i| f(domain.coords(i)))
            .collect();
        GridFunction::new(domain, values)
    }

    pub fn constant(domain: Arc<Domain>, c: f64) -> Self {
        let n = domain.node_count();
        GridFunction {
            domain,
            values: vec![c; n],
        }
    }

    pub fn zeros(domain: Arc<Domain>) -> Self {
        GridFunction::constant(domain, 0.0)
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Whole-array replacement; the only way to mutate values.
    pub fn replace_values(&mut self, values: Vec<f64>) -> Result<()> {
        *self = GridFunction::new(self.domain.clone(), values)?;
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<GridFunction> {
        GridFunction::new(
            self.domain.clone(),
            self.values.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        sup_distance(&self.values, &other.values)
    }

    /// Sup norm over boundary nodes only.
    pub fn boundary_sup_norm(&self) -> f64 {
        self.domain
            .boundary()
            .iter()
            .fold(0.0, |m, &i| m.max(self.values[i].abs()))
    }
}

pub(crate) fn sup_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `(u(x+he) - 2u(x) + u(x-he)) / (h²|e|²)` on raw values.
#[inline]
pub(crate) fn second_difference_raw(
    domain: &Domain,
    values: &[f64],
    node: usize,
    e: Direction,
) -> Option<f64> {
    let fwd = domain.neighbor(node, e)?;
    let bwd = domain.neighbor(node, [-e[0], -e[1]])?;
    let h = domain.h();
    let scale = h * h * direction_norm_sq(e, domain.dim());
    Some((values[fwd] - 2.0 * values[node] + values[bwd]) / scale)
}

pub fn second_difference(u: &GridFunction, node: usize, e: Direction) -> Result<f64> {
    let domain = u.domain();
    if !domain.is_interior(node) {
        return Err(Error::Stencil { node, direction: e });
    }
    second_difference_raw(domain, u.values(), node, e).ok_or(Error::Stencil { node, direction: e })
}

#[inline]
pub(crate) fn gradient_central_raw(domain: &Domain, values: &[f64], node: usize) -> Option<[f64; 2]> {
    let h = domain.h();
    let mut g = [0.0; 2];
    for (k, gk) in g.iter_mut().enumerate().take(domain.dim()) {
        let mut e = [0, 0];
        e[k] = 1;
        let fwd = domain.neighbor(node, e)?;
        let bwd = domain.neighbor(node, [-e[0], -e[1]])?;
        *gk = (values[fwd] - values[bwd]) / (2.0 * h);
    }
    Some(g)
}

/// Per-axis one-sided slope magnitudes. With `rising` the estimate is
/// `max((u(x) - u(x-he))/h, (u(x) - u(x+he))/h, 0)`, nondecreasing in the
/// center value; otherwise `max((u(x+he) - u(x))/h, (u(x-he) - u(x))/h, 0)`,
/// nonincreasing in it.
#[inline]
pub(crate) fn gradient_upwind_raw(domain: &Domain, values: &[f64], node: usize, rising: bool) -> Option<[f64; 2]> {
    let h = domain.h();
    let c = values[node];
    let mut a = [0.0; 2];
    for (k, ak) in a.iter_mut().enumerate().take(domain.dim()) {
        let mut e = [0, 0];
        e[k] = 1;
        let fwd = values[domain.neighbor(node, e)?];
        let bwd = values[domain.neighbor(node, [-e[0], -e[1]])?];
        *ak = if rising {
            (c - bwd).max(c - fwd).max(0.0) / h
        } else {
            (fwd - c).max(bwd - c).max(0.0) / h
        };
    }
    Some(a)
}

/// Monotone one-sided gradient magnitudes per axis; see the `rising` flag of
/// the raw form. Consistent with `|∂_k u|` for smooth `u`.
pub fn gradient_upwind(u: &GridFunction, node: usize, rising: bool) -> Result<[f64; 2]> {
    let domain = u.domain();
    if !domain.is_interior(node) {
        return Err(Error::Stencil {
            node,
            direction: [1, 0],
        });
    }
    gradient_upwind_raw(domain, u.values(), node, rising).ok_or(Error::Stencil {
        node,
        direction: [1, 0],
    })
}

/// Componentwise central differences; the second component is zero in 1D.
pub fn gradient_central(u: &GridFunction, node: usize) -> Result<[f64; 2]> {
    let domain = u.domain();
    if !domain.is_interior(node) {
        return Err(Error::Stencil {
            node,
            direction: [1, 0],
        });
    }
    gradient_central_raw(domain, u.values(), node).ok_or(Error::Stencil {
        node,
        direction: [1, 0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn box_counts() {
        let d = Domain::build(DomainSpec::square(1.0, 0.25)).unwrap();
        assert_eq!(d.node_count(), 81);
        assert_eq!(d.interior().len(), 49);
        assert_eq!(d.boundary().len(), 32);
    }

    #[test]
    fn interval_nodes() {
        let d = Domain::build(DomainSpec::interval(1.0, 0.5)).unwrap();
        let xs: Vec<f64> = (0..d.node_count()).map(|i| d.coords(i)[0]).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let interior: Vec<f64> = d.interior().iter().map(|&i| d.coords(i)[0]).collect();
        assert_eq!(interior, vec![-0.5, 0.0, 0.5]);
    }

    #[test]
    fn ball_interior_matches_enumeration() {
        let d = Domain::build(DomainSpec::ball(2, 1.0, 0.5)).unwrap();
        // Independent enumeration over a generous lattice.
        let mut expected = Vec::new();
        for b in -4..=4 {
            for a in -4..=4 {
                let x = [a as f64 * 0.5, b as f64 * 0.5];
                if x[0] * x[0] + x[1] * x[1] < 1.0 {
                    expected.push(x);
                }
            }
        }
        assert_eq!(expected.len(), 9);
        let got: Vec<[f64; 2]> = d.interior().iter().map(|&i| d.node(i).x).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn ball_stencils_stay_in_node_set() {
        let d = Domain::build(DomainSpec::ball(2, 1.0, 0.125)).unwrap();
        for &i in d.interior() {
            for e in neighborhood(2, 1) {
                assert!(d.neighbor(i, e).is_some());
            }
        }
        for &b in d.boundary() {
            let x = d.node(b).x;
            assert!(x[0] * x[0] + x[1] * x[1] >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn every_node_classified_once() {
        let d = Domain::build(DomainSpec::ball(2, 1.0, 0.25)).unwrap();
        assert_eq!(d.interior().len() + d.boundary().len(), d.node_count());
    }

    #[test]
    fn non_divisible_spacing_rejected() {
        let err = Domain::build(DomainSpec::interval(1.0, 0.3)).unwrap_err();
        assert!(matches!(err, Error::Config { .. }));
    }

    #[test]
    fn lexicographic_order() {
        let d = Domain::build(DomainSpec::square(1.0, 0.5)).unwrap();
        let idx: Vec<[i32; 2]> = d.nodes().iter().map(|n| n.index).collect();
        let mut sorted = idx.clone();
        sorted.sort_by_key(|i| (i[1], i[0]));
        assert_eq!(idx, sorted);
    }

    #[test]
    fn second_difference_examples() {
        let d = Domain::build(DomainSpec::square(1.0, 0.25)).unwrap();
        let u = GridFunction::from_fn(d.clone(), |x| x[0] * x[0]).unwrap();
        let c = GridFunction::constant(d.clone(), 3.0);
        let m = [[0.7, -0.4], [-0.4, 1.3]];
        let q = GridFunction::from_fn(d.clone(), |x| {
            0.5 * (m[0][0] * x[0] * x[0] + 2.0 * m[0][1] * x[0] * x[1] + m[1][1] * x[1] * x[1])
        })
        .unwrap();
        for &i in d.interior() {
            assert_relative_eq!(second_difference(&u, i, [1, 0]).unwrap(), 2.0, epsilon = 1e-12);
            assert_eq!(second_difference(&c, i, [0, 1]).unwrap(), 0.0);
            for e in [[1, 0], [0, 1], [1, 1], [1, -1]] {
                let en = (e[0] * e[0] + e[1] * e[1]) as f64;
                let want = (m[0][0] * (e[0] * e[0]) as f64
                    + 2.0 * m[0][1] * (e[0] * e[1]) as f64
                    + m[1][1] * (e[1] * e[1]) as f64)
                    / en;
                assert_relative_eq!(second_difference(&q, i, e).unwrap(), want, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn stencil_error_off_domain() {
        let d = Domain::build(DomainSpec::interval(1.0, 0.25)).unwrap();
        let u = GridFunction::zeros(d.clone());
        let edge = d.interior()[0];
        assert!(matches!(
            second_difference(&u, edge, [2, 0]),
            Err(Error::Stencil { .. })
        ));
        assert!(second_difference(&u, d.boundary()[0], [1, 0]).is_err());
    }

    #[test]
    fn gradient_examples() {
        let d = Domain::build(DomainSpec::square(1.0, 0.25)).unwrap();
        let b = [0.3, -1.7];
        let u = GridFunction::from_fn(d.clone(), |x| b[0] * x[0] + b[1] * x[1] + 0.5).unwrap();
        for &i in d.interior() {
            let g = gradient_central(&u, i).unwrap();
            assert_relative_eq!(g[0], b[0], epsilon = 1e-12);
            assert_relative_eq!(g[1], b[1], epsilon = 1e-12);
        }
        let line = Domain::build(DomainSpec::interval(1.0, 0.25)).unwrap();
        let p = GridFunction::from_fn(line.clone(), |x| x[0] * x[0]).unwrap();
        let at = line.nearest_node(&[0.5]).unwrap();
        assert_relative_eq!(gradient_central(&p, at).unwrap()[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn gradient_is_second_order() {
        let cubic = |x: &[f64]| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1].powi(3);
        let grad = |x: &[f64]| [3.0 * x[0] * x[0] - 2.0 * x[1] * x[1], -4.0 * x[0] * x[1] + 3.0 * x[1] * x[1]];
        let err = |h: f64| {
            let d = Domain::build(DomainSpec::square(1.0, h)).unwrap();
            let u = GridFunction::from_fn(d.clone(), cubic).unwrap();
            d.interior()
                .iter()
                .map(|&i| {
                    let g = gradient_central(&u, i).unwrap();
                    let want = grad(d.coords(i));
                    (g[0] - want[0]).abs().max((g[1] - want[1]).abs())
                })
                .fold(0.0, f64::max)
        };
        let ratio = err(1.0 / 8.0) / err(1.0 / 16.0);
        assert!(ratio >= 3.5, "ratio {ratio}");
    }

    #[test]
    fn rejects_non_finite() {
        let d = Domain::build(DomainSpec::interval(1.0, 0.5)).unwrap();
        assert!(GridFunction::new(d.clone(), vec![0.0, f64::NAN, 0.0, 0.0, 0.0]).is_err());
        assert!(GridFunction::new(d, vec![0.0; 4]).is_err());
    }
}
