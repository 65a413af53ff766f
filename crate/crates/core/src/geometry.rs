//! Exact rational convex geometry at desk scale.
//!
//! Cells of a complex live each in their own full-dimensional rational chart, so the
//! polytopes here are always full-dimensional in their ambient coordinates. Facet
//! enumeration is brute force over vertex subsets (dimensions stay small), volumes come
//! from a deterministic triangulation, and everything is computed exactly.

use crate::linalg::Matrix;
use crate::scalar::Rat;
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};

/// A rational point or vector.
pub type Vect = Vec<Rat>;

pub fn zero_vect(n: usize) -> Vect {
    vec![Rat::zero(); n]
}

pub fn add(a: &[Rat], b: &[Rat]) -> Vect {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn sub(a: &[Rat], b: &[Rat]) -> Vect {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn scale(a: &[Rat], t: &Rat) -> Vect {
    a.iter().map(|x| x * t).collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).fold(Rat::zero(), |s, v| s + v)
}

/// Concatenates two coordinate vectors.
pub fn concat(a: &[Rat], b: &[Rat]) -> Vect {
    let mut v = a.to_vec();
    v.extend_from_slice(b);
    v
}

/// An affine map `x -> A x + b` between rational coordinate spaces.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineMap {
    pub a: Matrix<Rat>,
    pub b: Vect,
}

impl AffineMap {
    pub fn new(a: Matrix<Rat>, b: Vect) -> Self {
        assert_eq!(a.nrows(), b.len(), "offset length must match row count");
        AffineMap { a, b }
    }

    pub fn identity(n: usize) -> Self {
        AffineMap {
            a: Matrix::identity(n),
            b: zero_vect(n),
        }
    }

    /// The constant map with the given value, from a domain of dimension `dom`.
    pub fn constant(dom: usize, value: Vect) -> Self {
        AffineMap {
            a: Matrix::zeros(value.len(), dom),
            b: value,
        }
    }

    pub fn from_rows(rows: Vec<Vec<Rat>>, b: Vect) -> Self {
        Self::new(Matrix::from_rows(rows), b)
    }

    pub fn dom_dim(&self) -> usize {
        self.a.ncols()
    }

    pub fn cod_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn apply(&self, x: &[Rat]) -> Vect {
        add(&self.a.mul_vec(x), &self.b)
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffineMap) -> AffineMap {
        AffineMap {
            a: self.a.mul(&inner.a),
            b: self.apply(&inner.b),
        }
    }

    /// Block-diagonal sum: acts by `self` on the first block of coordinates and by
    /// `other` on the second.
    pub fn block_sum(&self, other: &AffineMap) -> AffineMap {
        let m = self.cod_dim() + other.cod_dim();
        let n = self.dom_dim() + other.dom_dim();
        let mut a = Matrix::zeros(m, n);
        for i in 0..self.cod_dim() {
            for j in 0..self.dom_dim() {
                a.set(i, j, self.a.at(i, j).clone());
            }
        }
        for i in 0..other.cod_dim() {
            for j in 0..other.dom_dim() {
                a.set(self.cod_dim() + i, self.dom_dim() + j, other.a.at(i, j).clone());
            }
        }
        AffineMap {
            a,
            b: concat(&self.b, &other.b),
        }
    }

    pub fn translated(&self, v: &[Rat]) -> AffineMap {
        AffineMap {
            a: self.a.clone(),
            b: add(&self.b, v),
        }
    }

    pub fn is_injective(&self) -> bool {
        self.a.rank() == self.a.ncols()
    }

    /// The inverse of a bijective square affine map, or `None` when singular.
    pub fn inverse(&self) -> Option<AffineMap> {
        let ainv = self.a.inverse()?;
        let b = scale(&ainv.mul_vec(&self.b), &-Rat::one());
        Some(AffineMap { a: ainv, b })
    }

    /// A left inverse of an injective affine map: composing it after `self` gives the
    /// identity. Off the image of `self` it acts by exact orthogonal projection.
    pub fn left_inverse(&self) -> AffineMap {
        let at = self.a.transpose();
        let gram = at.mul(&self.a);
        let ginv = gram
            .inverse()
            .expect("left_inverse requires an injective map");
        let li = ginv.mul(&at);
        let b = scale(&li.mul_vec(&self.b), &-Rat::one());
        AffineMap { a: li, b }
    }
}

/// The affine map taking one chart (base point plus frame in ambient coordinates)
/// into another chart over the same ambient space.
pub fn chart_to_chart(
    base_from: &[Rat],
    frame_from: &[Vect],
    base_to: &[Rat],
    frame_to: &[Vect],
) -> AffineMap {
    let cols: Vec<Vect> = frame_from
        .iter()
        .map(|f| chart_coords(f, frame_to))
        .collect();
    let a = Matrix::from_cols_with_rows(cols, frame_to.len());
    let b = chart_coords(&sub(base_from, base_to), frame_to);
    AffineMap { a, b }
}

fn cmp_vect(a: &[Rat], b: &[Rat]) -> std::cmp::Ordering {
    a.iter().cmp(b.iter())
}

impl PartialOrd for AffineMap {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for AffineMap {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.a.nrows(), self.a.ncols())
            .cmp(&(other.a.nrows(), other.a.ncols()))
            .then_with(|| self.a.rows().iter().cmp(other.a.rows().iter()))
            .then_with(|| cmp_vect(&self.b, &other.b))
    }
}

impl PartialOrd for Polytope {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Polytope {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dim
            .cmp(&other.dim)
            .then_with(|| self.verts.iter().map(Vec::as_slice).cmp(other.verts.iter().map(Vec::as_slice)))
            .then_with(|| self.hrep.cmp(&other.hrep))
    }
}

/// The closed halfspace `normal · x <= rhs`, with a canonical positive scaling.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Halfspace {
    pub normal: Vect,
    pub rhs: Rat,
}

impl Halfspace {
    pub fn new(normal: Vect, rhs: Rat) -> Self {
        let mut h = Halfspace { normal, rhs };
        h.canonicalize();
        h
    }

    /// Scales by a positive factor so the first nonzero coefficient has absolute value one.
    fn canonicalize(&mut self) {
        if let Some(first) = self.normal.iter().find(|v| !v.is_zero()) {
            let s = first.abs();
            self.normal = self.normal.iter().map(|v| v / &s).collect();
            self.rhs = &self.rhs / &s;
        }
    }

    pub fn eval(&self, x: &[Rat]) -> Rat {
        dot(&self.normal, x) - &self.rhs
    }

    pub fn flipped(&self) -> Halfspace {
        Halfspace::new(
            self.normal.iter().map(|v| -v).collect(),
            -self.rhs.clone(),
        )
    }
}

/// Pulls a halfspace back through an affine map: `x` satisfies the result
/// exactly when `m(x)` satisfies `h`.
pub fn pullback_halfspace(h: &Halfspace, m: &AffineMap) -> Halfspace {
    Halfspace::new(
        m.a.transpose().mul_vec(&h.normal),
        &h.rhs - dot(&h.normal, &m.b),
    )
}

/// Affine dimension of a point set.
pub fn affine_dim(points: &[Vect]) -> usize {
    if points.is_empty() {
        return 0;
    }
    let base = &points[0];
    let rows: Vec<Vec<Rat>> = points[1..].iter().map(|p| sub(p, base)).collect();
    if rows.is_empty() {
        0
    } else {
        Matrix::from_rows(rows).rank()
    }
}

/// Greedily selects, in order, vectors from `candidates` that increase the rank.
pub fn greedy_independent(candidates: &[Vect]) -> Vec<Vect> {
    let mut chosen: Vec<Vect> = Vec::new();
    let mut rank = 0;
    for c in candidates {
        if c.iter().all(|v| v.is_zero()) {
            continue;
        }
        let mut rows = chosen.clone();
        rows.push(c.clone());
        let r = Matrix::from_rows(rows).rank();
        if r > rank {
            rank = r;
            chosen.push(c.clone());
        }
    }
    chosen
}

/// Orthogonal projection of `u` onto the span of `basis` (standard inner product).
pub fn project_onto_span(u: &[Rat], basis: &[Vect]) -> Vect {
    if basis.is_empty() {
        return zero_vect(u.len());
    }
    let b = Matrix::from_cols(basis.to_vec());
    let bt = b.transpose();
    let gram = bt.mul(&b);
    let rhs = bt.mul_vec(u);
    let t = gram.solve(&rhs).expect("independent basis has invertible Gram matrix");
    b.mul_vec(&t)
}

/// A full-dimensional rational convex polytope in its own chart.
///
/// `verts` keeps the construction order (it fixes the designated frame of a cell);
/// `hrep` is canonically normalized, sorted and irredundant.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Polytope {
    dim: usize,
    verts: Vec<Vect>,
    hrep: Vec<Halfspace>,
}

impl Polytope {
    /// Builds a polytope from vertices, enumerating facets by brute force.
    ///
    /// Fails when the points do not affinely span their chart or a listed point is not
    /// an extreme point of the hull.
    pub fn from_vertices(verts: Vec<Vect>) -> Result<Polytope> {
        if verts.is_empty() {
            return Err(Error::invalid("polytope with no vertices"));
        }
        let dim = verts[0].len();
        if verts.iter().any(|v| v.len() != dim) {
            return Err(Error::invalid("polytope vertices of mixed chart dimension"));
        }
        if affine_dim(&verts) != dim {
            return Err(Error::invalid(format!(
                "polytope vertices span dimension {} in a chart of dimension {}",
                affine_dim(&verts),
                dim
            )));
        }
        let hrep = brute_force_hrep(&verts, dim)?;
        let p = Polytope { dim, verts, hrep };
        for (i, v) in p.verts.iter().enumerate() {
            if !p.is_vertex_point(v) {
                return Err(Error::invalid(format!(
                    "listed vertex {i} is not an extreme point of the hull"
                )));
            }
        }
        Ok(p)
    }

    /// Builds a polytope from vertices and an already-known facet description.
    /// The halfspaces are canonicalized; no extremality check is performed.
    pub fn from_vertices_trusted(verts: Vec<Vect>, hrep: Vec<Halfspace>) -> Polytope {
        let dim = verts.first().map_or(0, Vec::len);
        let mut hrep = hrep;
        hrep.sort();
        hrep.dedup();
        Polytope { dim, verts, hrep }
    }

    /// Builds the full-dimensional polytope cut out by the halfspaces, or `None` when
    /// the intersection is empty or not full-dimensional. Redundant halfspaces are
    /// dropped.
    pub fn from_hrep(hs: &[Halfspace]) -> Option<Polytope> {
        let dim = hs.first().map(|h| h.normal.len())?;
        let verts = vertices_from_hrep(hs, dim);
        if verts.is_empty() || affine_dim(&verts) != dim {
            return None;
        }
        let mut facets: Vec<Halfspace> = Vec::new();
        for h in hs {
            let tight: Vec<&Vect> = verts.iter().filter(|v| h.eval(v).is_zero()).collect();
            if tight.len() < dim {
                continue;
            }
            let pts: Vec<Vect> = tight.into_iter().cloned().collect();
            if affine_dim(&pts) == dim.saturating_sub(1) {
                facets.push(h.clone());
            }
        }
        facets.sort();
        facets.dedup();
        Some(Polytope {
            dim,
            verts,
            hrep: facets,
        })
    }

    /// A single point in the zero-dimensional chart.
    pub fn point() -> Polytope {
        Polytope {
            dim: 0,
            verts: vec![vec![]],
            hrep: vec![],
        }
    }

    /// The segment `[lo, hi]` in a one-dimensional chart.
    pub fn segment(lo: Rat, hi: Rat) -> Polytope {
        assert!(lo < hi, "segment needs lo < hi");
        Polytope {
            dim: 1,
            verts: vec![vec![lo.clone()], vec![hi.clone()]],
            hrep: vec![
                Halfspace::new(vec![-Rat::one()], -lo),
                Halfspace::new(vec![Rat::one()], hi),
            ],
        }
    }

    /// Product polytope; vertex order is `self`-major, chart order `self` then `other`.
    pub fn product(&self, other: &Polytope) -> Polytope {
        let mut verts = Vec::with_capacity(self.verts.len() * other.verts.len());
        for a in &self.verts {
            for b in &other.verts {
                verts.push(concat(a, b));
            }
        }
        let mut hrep = Vec::new();
        for h in &self.hrep {
            hrep.push(Halfspace::new(
                concat(&h.normal, &zero_vect(other.dim)),
                h.rhs.clone(),
            ));
        }
        for h in &other.hrep {
            hrep.push(Halfspace::new(
                concat(&zero_vect(self.dim), &h.normal),
                h.rhs.clone(),
            ));
        }
        hrep.sort();
        Polytope {
            dim: self.dim + other.dim,
            verts,
            hrep,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn verts(&self) -> &[Vect] {
        &self.verts
    }

    pub fn hrep(&self) -> &[Halfspace] {
        &self.hrep
    }

    pub fn centroid(&self) -> Vect {
        let n = Rat::from_integer(num_bigint::BigInt::from(self.verts.len() as i64));
        let mut c = zero_vect(self.dim);
        for v in &self.verts {
            c = add(&c, v);
        }
        scale(&c, &(Rat::one() / n))
    }

    pub fn contains(&self, p: &[Rat]) -> bool {
        self.hrep.iter().all(|h| !h.eval(p).is_positive())
    }

    pub fn relint_contains(&self, p: &[Rat]) -> bool {
        self.hrep.iter().all(|h| h.eval(p).is_negative())
    }

    /// Whether the `i`-th listed vertex really is an extreme point of the hull.
    pub fn is_extremal_vertex(&self, i: usize) -> bool {
        self.is_vertex_point(&self.verts[i].clone())
    }

    fn is_vertex_point(&self, v: &[Rat]) -> bool {
        let tight: Vec<Vect> = self
            .hrep
            .iter()
            .filter(|h| h.eval(v).is_zero())
            .map(|h| h.normal.clone())
            .collect();
        if tight.len() < self.dim {
            return false;
        }
        Matrix::from_rows(tight).rank() == self.dim
    }

    /// Vertex index sets of the facets, one per halfspace, each sorted ascending.
    pub fn facet_vertex_sets(&self) -> Vec<Vec<usize>> {
        self.hrep
            .iter()
            .map(|h| {
                (0..self.verts.len())
                    .filter(|&i| h.eval(&self.verts[i]).is_zero())
                    .collect()
            })
            .collect()
    }

    /// The halfspaces tight on every one of the given points.
    pub fn tight_halfspaces(&self, points: &[Vect]) -> Vec<usize> {
        (0..self.hrep.len())
            .filter(|&i| points.iter().all(|p| self.hrep[i].eval(p).is_zero()))
            .collect()
    }

    /// Splits along a hyperplane; returns the full-dimensional closed parts on the
    /// `<=` and `>=` sides (either may be `None` when degenerate).
    pub fn split(&self, h: &Halfspace) -> (Option<Polytope>, Option<Polytope>) {
        let mut lo = self.hrep.clone();
        lo.push(h.clone());
        let mut hi = self.hrep.clone();
        hi.push(h.flipped());
        (Polytope::from_hrep(&lo), Polytope::from_hrep(&hi))
    }

    /// Deterministic triangulation into simplices of vertex indices.
    pub fn triangulate(&self) -> Vec<Vec<usize>> {
        if self.dim == 0 {
            return vec![vec![0]];
        }
        let base = lex_min_index(&self.verts);
        let mut out = Vec::new();
        for facet in self.facet_vertex_sets() {
            if facet.contains(&base) {
                continue;
            }
            let pts: Vec<Vect> = facet.iter().map(|&i| self.verts[i].clone()).collect();
            let (chart_pts, _, _) = to_local_chart(&pts);
            let sub = Polytope::from_vertices(chart_pts)
                .expect("facet points form a full-dimensional polytope in their chart");
            for simplex in sub.triangulate() {
                let mut s: Vec<usize> = simplex.into_iter().map(|i| facet[i]).collect();
                s.push(base);
                out.push(s);
            }
        }
        out
    }

    /// Volume in chart coordinates (dimension-zero polytopes have volume one).
    pub fn volume(&self) -> Rat {
        if self.dim == 0 {
            return Rat::one();
        }
        let mut total = Rat::zero();
        let mut factorial = Rat::one();
        for k in 1..=self.dim {
            factorial = factorial * Rat::from_integer(num_bigint::BigInt::from(k as i64));
        }
        for simplex in self.triangulate() {
            let base = &self.verts[simplex[self.dim]];
            let rows: Vec<Vect> = simplex[..self.dim]
                .iter()
                .map(|&i| sub(&self.verts[i], base))
                .collect();
            total = total + Matrix::from_rows(rows).det().abs();
        }
        total / factorial
    }
}

/// Index of the lexicographically smallest point.
pub fn lex_min_index(points: &[Vect]) -> usize {
    let mut best = 0;
    for i in 1..points.len() {
        if cmp_vect(&points[i], &points[best]) == std::cmp::Ordering::Less {
            best = i;
        }
    }
    best
}

/// Maps a set of points spanning an affine subspace to full-dimensional coordinates in
/// a local chart. Returns the local points, the chart base point, and the frame columns
/// (local coordinates `c` correspond to `base + frame · c`).
pub fn to_local_chart(points: &[Vect]) -> (Vec<Vect>, Vect, Vec<Vect>) {
    let sorted = {
        let mut s = points.to_vec();
        s.sort_by(|a, b| cmp_vect(a, b));
        s
    };
    let base = sorted[0].clone();
    let dirs: Vec<Vect> = sorted[1..].iter().map(|p| sub(p, &base)).collect();
    let frame = greedy_independent(&dirs);
    let local = points
        .iter()
        .map(|p| chart_coords(&sub(p, &base), &frame))
        .collect();
    (local, base, frame)
}

/// Coordinates of `v` in the span of `frame` (must lie in the span).
pub fn chart_coords(v: &[Rat], frame: &[Vect]) -> Vect {
    if frame.is_empty() {
        return vec![];
    }
    Matrix::from_cols(frame.to_vec())
        .solve(v)
        .expect("point lies in the span of the frame")
}

fn brute_force_hrep(verts: &[Vect], dim: usize) -> Result<Vec<Halfspace>> {
    if dim == 0 {
        return Ok(vec![]);
    }
    let n = verts.len();
    let mut out: Vec<Halfspace> = Vec::new();
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        if let Some(h) = supporting_halfspace(verts, &subset) {
            if !out.contains(&h) {
                out.push(h);
            }
        }
        // Next combination of `dim` indices out of `n`.
        let mut i = dim;
        loop {
            if i == 0 {
                out.sort();
                if out.is_empty() {
                    return Err(Error::invalid("degenerate polytope: no facets found"));
                }
                return Ok(out);
            }
            i -= 1;
            if subset[i] != i + n - dim {
                subset[i] += 1;
                for j in (i + 1)..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn supporting_halfspace(verts: &[Vect], subset: &[usize]) -> Option<Halfspace> {
    let dim = verts[0].len();
    let base = &verts[subset[0]];
    let rows: Vec<Vect> = subset[1..].iter().map(|&i| sub(&verts[i], base)).collect();
    if !rows.is_empty() && Matrix::from_rows(rows.clone()).rank() != dim - 1 {
        return None;
    }
    if dim >= 1 && rows.len() < dim - 1 {
        return None;
    }
    // Normal: kernel of the direction matrix.
    let normal = if dim == 1 {
        vec![Rat::one()]
    } else {
        let kern = Matrix::from_rows(rows).kernel_basis();
        if kern.len() != 1 {
            return None;
        }
        kern.into_iter().next().unwrap()
    };
    let rhs = dot(&normal, base);
    let mut side = 0i8;
    for v in verts {
        let val = dot(&normal, v) - &rhs;
        if val.is_zero() {
            continue;
        }
        let s = if val.is_positive() { 1 } else { -1 };
        if side == 0 {
            side = s;
        } else if side != s {
            return None;
        }
    }
    match side {
        0 => None, // all vertices on the hyperplane: not a facet of a full-dim polytope
        1 => Some(Halfspace::new(normal.iter().map(|v| -v).collect(), -rhs)),
        _ => Some(Halfspace::new(normal, rhs)),
    }
}

/// Enumerates the vertices of the (possibly lower-dimensional) region cut out by the
/// halfspaces, sorted lexicographically.
pub fn vertices_from_hrep(hs: &[Halfspace], dim: usize) -> Vec<Vect> {
    if dim == 0 {
        // The chart is a single point; it is a vertex when no halfspace excludes it.
        let origin: Vect = vec![];
        if hs.iter().all(|h| !h.eval(&origin).is_positive()) {
            return vec![origin];
        }
        return vec![];
    }
    let mut verts: Vec<Vect> = Vec::new();
    let n = hs.len();
    if n < dim {
        return vec![];
    }
    let mut subset: Vec<usize> = (0..dim).collect();
    loop {
        let rows: Vec<Vect> = subset.iter().map(|&i| hs[i].normal.clone()).collect();
        let rhs: Vec<Rat> = subset.iter().map(|&i| hs[i].rhs.clone()).collect();
        let m = Matrix::from_rows(rows);
        if m.rank() == dim {
            if let Some(x) = m.solve(&rhs) {
                if hs.iter().all(|h| !h.eval(&x).is_positive()) && !verts.contains(&x) {
                    verts.push(x);
                }
            }
        }
        let mut i = dim;
        let mut done = false;
        loop {
            if i == 0 {
                done = true;
                break;
            }
            i -= 1;
            if subset[i] != i + n - dim {
                subset[i] += 1;
                for j in (i + 1)..dim {
                    subset[j] = subset[j - 1] + 1;
                }
                break;
            }
        }
        if done {
            break;
        }
    }
    verts.sort_by(|a, b| cmp_vect(a, b));
    verts
}
