//! Exact transversality testing and fiber products for piecewise-affine chains
//! into flat targets, with the induced intersection product, trace and pairing.
//!
//! Two chains into the same flat target meet transversally when, at every pair
//! of open faces whose images touch (possibly after an integer translate over a
//! torus), the tangent spans of the corner strata through those faces together
//! fill the ambient space.  The check is a finite exact computation: each face
//! pair contributes one affine system per relevant translate, and the stratum
//! tangents are unions of cell differentials read off the chain maps.
//!
//! For transversal chains the fiber product is assembled cell by cell: nonempty
//! solution polytopes of `c(x) = e(y) + k` give one cell per face pair and
//! translate whose solutions touch both open faces, faces are matched through
//! the source complexes, and top cells are oriented by comparing lifted normal
//! frames with the product orientation.  The intersection product, trace and
//! pairing are thin layers over this construction.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, ToPrimitive, Zero};

use crate::chain::{Chain, ChainGenerator, Target};
use crate::complex::{Attachment, Cell, CellKey, CornerComplex};
use crate::geometry::{affine_dim, dot, sub, zero_vect, AffineMap, Halfspace, Polytope, Vect};
use crate::linalg::Matrix;
use crate::scalar::{rat_floor, rat_int, Rat};
use crate::{Error, Result};

/// One checked pair of open faces: the corner depths and keys on both sides,
/// whether some integer translate of the solution set meets both open faces,
/// and the rank of the combined stratum tangent spans.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct StratumPairRecord {
    pub depth_left: usize,
    pub depth_right: usize,
    pub left: CellKey,
    pub right: CellKey,
    pub meets_open: bool,
    pub rank: usize,
}

/// The aggregated outcome of a transversality check.
///
/// The verdict is positive exactly when every recorded pair whose solution set
/// meets the open faces has combined span rank equal to the ambient dimension.
/// Records produced by the fiber-product constructor may instead carry the rank
/// of a single solution cell's pairwise differential span; the same criterion
/// applies.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TransversalityReport {
    pub ambient_dim: usize,
    pub records: Vec<StratumPairRecord>,
}

impl TransversalityReport {
    pub fn verdict(&self) -> bool {
        self.records
            .iter()
            .all(|r| !r.meets_open || r.rank == self.ambient_dim)
    }

    /// The records that break the verdict.
    pub fn failures(&self) -> Vec<&StratumPairRecord> {
        self.records
            .iter()
            .filter(|r| r.meets_open && r.rank != self.ambient_dim)
            .collect()
    }
}

impl fmt::Display for TransversalityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failures = self.failures();
        if failures.is_empty() {
            return write!(f, "transversal ({} face pairs checked)", self.records.len());
        }
        write!(
            f,
            "not transversal: {} deficient meeting pair(s) of {} checked",
            failures.len(),
            self.records.len()
        )?;
        for r in failures {
            write!(
                f,
                "; {} (depth {}) meets {} (depth {}) with span rank {} < {}",
                r.left, r.depth_left, r.right, r.depth_right, r.rank, self.ambient_dim
            )?;
        }
        Ok(())
    }
}

/// The fiber product of two chain generators over their common target: a corner
/// complex of solution cells together with its map to the target and the two
/// projections back into the source charts.
#[derive(Clone, Debug)]
pub struct FiberProductChain {
    pub complex: CornerComplex,
    /// Piecewise-affine map of the fiber complex into the target (left factor
    /// composed with the left projection; equal to the right composite up to the
    /// recorded integer translate).
    pub maps: BTreeMap<CellKey, AffineMap>,
    /// Per fiber cell, the source cell of the left factor and the projection
    /// into its chart.
    pub left_source: BTreeMap<CellKey, (CellKey, AffineMap)>,
    /// Per fiber cell, the source cell of the right factor and the projection
    /// into its chart.
    pub right_source: BTreeMap<CellKey, (CellKey, AffineMap)>,
}

impl FiberProductChain {
    /// The fiber complex with its target map, as a chain generator.
    pub fn generator(&self) -> ChainGenerator {
        ChainGenerator::new(self.complex.clone(), self.maps.clone())
    }
}

// ---------------------------------------------------------------------------
// Per-generator precomputation: depths, stratum tangent spans, face lookup.
// ---------------------------------------------------------------------------

struct GenData<'a> {
    gen: &'a ChainGenerator,
    depths: BTreeMap<CellKey, usize>,
    /// Ambient direction columns spanning the tangent of the corner stratum
    /// through each cell: the union of the differentials of every same-depth
    /// cell whose closure contains it.
    spans: BTreeMap<CellKey, Vec<Vect>>,
    /// Per ancestor cell, its faces indexed by sorted image vertex set, each
    /// resolved to the face cell and the route map into the ancestor's chart.
    faces: BTreeMap<CellKey, BTreeMap<Vec<Vect>, (CellKey, AffineMap)>>,
}

impl<'a> GenData<'a> {
    fn new(gen: &'a ChainGenerator) -> Result<GenData<'a>> {
        let depths = gen.complex.depths();
        let routes = gen.complex.routes_up();
        let mut spans: BTreeMap<CellKey, Vec<Vect>> = BTreeMap::new();
        let mut faces: BTreeMap<CellKey, BTreeMap<Vec<Vect>, (CellKey, AffineMap)>> =
            BTreeMap::new();
        for key in gen.complex.keys() {
            faces.insert(key.clone(), BTreeMap::new());
        }
        for (key, rts) in &routes {
            let own_depth = depths[key];
            let poly = &gen.complex.cell(key).poly;
            let mut cols: Vec<Vect> = Vec::new();
            for (anc, map) in rts {
                if depths[anc] == own_depth {
                    let a = &gen.maps[anc].a;
                    for j in 0..a.ncols() {
                        cols.push(a.col(j));
                    }
                }
                let mut img: Vec<Vect> = poly.verts().iter().map(|v| map.apply(v)).collect();
                img.sort();
                let table = faces.get_mut(anc).expect("ancestor key present");
                match table.get(&img) {
                    None => {
                        table.insert(img, (key.clone(), map.clone()));
                    }
                    Some((prev, prev_map)) => {
                        if prev != key || prev_map != map {
                            return Err(Error::invalid(format!(
                                "ambiguous face of {anc}: cells {prev} and {key} share an image"
                            )));
                        }
                    }
                }
            }
            spans.insert(key.clone(), cols);
        }
        Ok(GenData {
            gen,
            depths,
            spans,
            faces,
        })
    }

    fn map_of(&self, key: &CellKey) -> &AffineMap {
        &self.gen.maps[key]
    }

    /// Resolves the face of `anc` whose minimal carrier has exactly the given
    /// tight halfspaces, returning the face cell and its route into `anc`.
    fn face_by_tight_set(&self, anc: &CellKey, tight: &[usize]) -> Result<(CellKey, AffineMap)> {
        let poly = &self.gen.complex.cell(anc).poly;
        let mut verts: Vec<Vect> = poly
            .verts()
            .iter()
            .filter(|v| tight.iter().all(|&i| poly.hrep()[i].eval(v).is_zero()))
            .cloned()
            .collect();
        verts.sort();
        self.faces[anc]
            .get(&verts)
            .cloned()
            .ok_or_else(|| Error::invalid(format!("face of {anc} not covered by any route")))
    }
}

fn combined_rank(left: &[Vect], right: &[Vect], dim: usize) -> usize {
    let mut cols: Vec<Vect> = left.to_vec();
    cols.extend(right.iter().cloned());
    Matrix::from_cols_with_rows(cols, dim).rank()
}

// ---------------------------------------------------------------------------
// Solution regions of `c(x) = e(y) + k` over a cell pair.
// ---------------------------------------------------------------------------

/// The exact solution set of one cell pair and translate, parameterized over the
/// kernel of the combined differential.
struct Region {
    /// Particular solution in the product chart (left coordinates first).
    base: Vect,
    /// Kernel basis columns of the combined differential, spanning the solution
    /// directions in the product chart.
    kernel: Vec<Vect>,
    /// Region vertices in kernel coordinates.
    verts: Vec<Vect>,
    /// Pulled-back facet inequalities in kernel coordinates, deduplicated.
    halfspaces: Vec<Halfspace>,
    /// Rank of the combined differential `[A | -B]`.
    rank: usize,
    /// Left-facet indices tight on the whole region.
    tight_left: Vec<usize>,
    /// Right-facet indices tight on the whole region.
    tight_right: Vec<usize>,
}

impl Region {
    fn dim(&self) -> usize {
        affine_dim(&self.verts)
    }

    fn is_native(&self) -> bool {
        self.tight_left.is_empty() && self.tight_right.is_empty()
    }

    fn point_at(&self, t: &[Rat]) -> Vect {
        let mut p = self.base.clone();
        for (j, col) in self.kernel.iter().enumerate() {
            for (i, x) in col.iter().enumerate() {
                p[i] += &t[j] * x;
            }
        }
        p
    }
}

/// Solves `c(x) = e(y) + k` over `pa × pb`; `None` when the solution set misses
/// the closed product cell entirely.
fn solve_region(
    ca: &AffineMap,
    pa: &Polytope,
    cb: &AffineMap,
    pb: &Polytope,
    shift: &[i64],
) -> Option<Region> {
    let na = pa.dim();
    let nb = pb.dim();
    let d = ca.cod_dim();
    let mut cols: Vec<Vect> = Vec::with_capacity(na + nb);
    for j in 0..na {
        cols.push(ca.a.col(j));
    }
    for j in 0..nb {
        cols.push(cb.a.col(j).iter().map(|x| -x).collect());
    }
    let system = Matrix::from_cols_with_rows(cols, d);
    let rhs: Vect = (0..d)
        .map(|i| &cb.b[i] - &ca.b[i] + rat_int(shift[i]))
        .collect();
    let (base, kernel) = system.solve_affine(&rhs)?;
    let s = kernel.len();
    // Pull each chart inequality back to kernel coordinates.
    let mut pulled: BTreeSet<Halfspace> = BTreeSet::new();
    for (poly, offset, len) in [(pa, 0usize, na), (pb, na, nb)] {
        for h in poly.hrep() {
            let normal: Vect = kernel
                .iter()
                .map(|col| dot(&h.normal, &col[offset..offset + len]))
                .collect();
            let slack = &h.rhs - dot(&h.normal, &base[offset..offset + len]);
            if normal.iter().all(Rat::is_zero) {
                if slack.is_negative() {
                    return None;
                }
                continue;
            }
            pulled.insert(Halfspace::new(normal, slack));
        }
    }
    let halfspaces: Vec<Halfspace> = pulled.into_iter().collect();
    let verts = crate::geometry::vertices_from_hrep(&halfspaces, s);
    if verts.is_empty() {
        return None;
    }
    let region = Region {
        base,
        kernel,
        verts,
        halfspaces,
        rank: na + nb - s,
        tight_left: vec![],
        tight_right: vec![],
    };
    let points: Vec<Vect> = region.verts.iter().map(|t| region.point_at(t)).collect();
    let xs: Vec<Vect> = points.iter().map(|p| p[..na].to_vec()).collect();
    let ys: Vec<Vect> = points.iter().map(|p| p[na..].to_vec()).collect();
    Some(Region {
        tight_left: pa.tight_halfspaces(&xs),
        tight_right: pb.tight_halfspaces(&ys),
        ..region
    })
}

/// Integer translates that could make the two cell images meet: over a torus,
/// the product of the per-coordinate ranges of `c − e` on the cells' vertices;
/// over Euclidean space, only the zero translate.
fn shift_box(
    target: Target,
    ca: &AffineMap,
    pa: &Polytope,
    cb: &AffineMap,
    pb: &Polytope,
) -> Vec<Vec<i64>> {
    let d = target.ambient_dim();
    if !target.is_torus() {
        return vec![vec![0; d]];
    }
    let values = |m: &AffineMap, p: &Polytope| -> Vec<Vect> {
        p.verts().iter().map(|v| m.apply(v)).collect()
    };
    let va = values(ca, pa);
    let vb = values(cb, pb);
    let mut ranges: Vec<(i64, i64)> = Vec::with_capacity(d);
    for i in 0..d {
        let amin = va.iter().map(|v| v[i].clone()).min().expect("vertices");
        let amax = va.iter().map(|v| v[i].clone()).max().expect("vertices");
        let bmin = vb.iter().map(|v| v[i].clone()).min().expect("vertices");
        let bmax = vb.iter().map(|v| v[i].clone()).max().expect("vertices");
        let lo = -rat_floor(&(bmax - &amin));
        let hi = rat_floor(&(amax - bmin));
        let (lo, hi) = (
            lo.to_i64().expect("translate range fits in i64"),
            hi.to_i64().expect("translate range fits in i64"),
        );
        if lo > hi {
            return vec![];
        }
        ranges.push((lo, hi));
    }
    let mut out: Vec<Vec<i64>> = vec![vec![]];
    for (lo, hi) in ranges {
        let mut next = Vec::new();
        for prefix in &out {
            for k in lo..=hi {
                let mut v = prefix.clone();
                v.push(k);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

fn common_target(a: &Chain, b: &Chain) -> Result<Target> {
    if a.target() != b.target() {
        return Err(Error::invalid(format!(
            "chains target different spaces: {:?} and {:?}",
            a.target(),
            b.target()
        )));
    }
    Ok(a.target())
}

// ---------------------------------------------------------------------------
// The transversality check.
// ---------------------------------------------------------------------------

/// Checks every pair of open faces of the two chains' generators: whether some
/// integer translate of the solution set of `c(x) = e(y) + k` meets both open
/// faces, and whether the combined stratum tangent spans fill the ambient
/// space.  Purely diagnostic; see [`fiber_product`] for the constructive test.
pub fn is_transversal(a: &Chain, b: &Chain) -> Result<TransversalityReport> {
    let target = common_target(a, b)?;
    let d = target.ambient_dim();
    let mut records = Vec::new();
    for (_, ga) in a.terms() {
        for (_, gb) in b.terms() {
            let da = GenData::new(ga)?;
            let db = GenData::new(gb)?;
            for ca in ga.complex.cells() {
                for cb in gb.complex.cells() {
                    let ma = da.map_of(&ca.key);
                    let mb = db.map_of(&cb.key);
                    let mut meets = false;
                    for shift in shift_box(target, ma, &ca.poly, mb, &cb.poly) {
                        if let Some(region) = solve_region(ma, &ca.poly, mb, &cb.poly, &shift) {
                            if region.is_native() {
                                meets = true;
                                break;
                            }
                        }
                    }
                    records.push(StratumPairRecord {
                        depth_left: da.depths[&ca.key],
                        depth_right: db.depths[&cb.key],
                        left: ca.key.clone(),
                        right: cb.key.clone(),
                        meets_open: meets,
                        rank: combined_rank(&da.spans[&ca.key], &db.spans[&cb.key], d),
                    });
                }
            }
        }
    }
    Ok(TransversalityReport {
        ambient_dim: d,
        records,
    })
}

// ---------------------------------------------------------------------------
// Fiber products.
// ---------------------------------------------------------------------------

struct NativeCell {
    left: CellKey,
    right: CellKey,
    shift: Vec<i64>,
    region: Region,
    dim: usize,
}

/// The fiber product of two generators over the target.
///
/// Errors with [`Error::NotTransversal`] when a meeting face pair has deficient
/// stratum spans, or when a solution cell of maximal dimension has a deficient
/// pairwise differential span (a corner-to-interior contact whose exact sign
/// would need germ data; translating one factor resolves it).
pub fn fiber_product(
    target: Target,
    a: &ChainGenerator,
    b: &ChainGenerator,
) -> Result<FiberProductChain> {
    let d = target.ambient_dim();
    if a.complex.is_empty() || b.complex.is_empty() {
        return Ok(FiberProductChain {
            complex: CornerComplex::new(),
            maps: BTreeMap::new(),
            left_source: BTreeMap::new(),
            right_source: BTreeMap::new(),
        });
    }
    let da = GenData::new(a)?;
    let db = GenData::new(b)?;
    let top = a.dim().unwrap_or(0) as i64 + b.dim().unwrap_or(0) as i64 - d as i64;

    // Pass 1: all native solution regions, with the transversality verdicts.
    let mut natives: BTreeMap<CellKey, NativeCell> = BTreeMap::new();
    let mut defects: Vec<StratumPairRecord> = Vec::new();
    for ca in a.complex.cells() {
        for cb in b.complex.cells() {
            let ma = da.map_of(&ca.key);
            let mb = db.map_of(&cb.key);
            let mut meets = false;
            let mut contact_rank: Option<usize> = None;
            for shift in shift_box(target, ma, &ca.poly, mb, &cb.poly) {
                let Some(region) = solve_region(ma, &ca.poly, mb, &cb.poly, &shift) else {
                    continue;
                };
                if !region.is_native() {
                    continue;
                }
                meets = true;
                let dim = region.dim();
                if dim as i64 >= top && region.rank < d {
                    contact_rank = Some(region.rank);
                }
                let key = CellKey::fiber(&ca.key, &cb.key, shift.clone());
                natives.insert(
                    key,
                    NativeCell {
                        left: ca.key.clone(),
                        right: cb.key.clone(),
                        shift,
                        region,
                        dim,
                    },
                );
            }
            let span_rank = combined_rank(&da.spans[&ca.key], &db.spans[&cb.key], d);
            let deficient = meets && span_rank != d;
            if deficient || contact_rank.is_some() {
                defects.push(StratumPairRecord {
                    depth_left: da.depths[&ca.key],
                    depth_right: db.depths[&cb.key],
                    left: ca.key.clone(),
                    right: cb.key.clone(),
                    meets_open: true,
                    rank: if deficient {
                        span_rank
                    } else {
                        contact_rank.expect("contact rank recorded")
                    },
                });
            }
        }
    }
    if !defects.is_empty() {
        return Err(Error::NotTransversal(Box::new(TransversalityReport {
            ambient_dim: d,
            records: defects,
        })));
    }

    // Pass 2: cells.
    let mut cell_map: BTreeMap<CellKey, Cell> = BTreeMap::new();
    for (key, native) in &natives {
        let s = native.region.kernel.len();
        let poly = if s == 0 {
            Polytope::point()
        } else {
            Polytope::from_hrep(&native.region.halfspaces).ok_or_else(|| {
                Error::invalid(format!("solution cell {key} is not full-dimensional"))
            })?
        };
        let left = a.complex.cell(&native.left);
        let right = b.complex.cell(&native.right);
        let sign = if native.dim as i64 == top && native.region.rank == d {
            oriented_fiber_sign(
                left,
                right,
                da.map_of(&native.left),
                db.map_of(&native.right),
                &native.region,
                d,
            )
        } else {
            1
        };
        let base = poly.verts()[0].clone();
        let frame: Vec<Vect> = (0..s)
            .map(|j| {
                let mut e = zero_vect(s);
                e[j] = rat_int(1);
                e
            })
            .collect();
        cell_map.insert(key.clone(), Cell::with_frame(key.clone(), poly, sign, base, frame));
    }

    // Pass 3: attachments, one per facet of each solution cell.
    let mut attachments: Vec<Attachment> = Vec::new();
    for (key, native) in &natives {
        let s = native.region.kernel.len();
        if s == 0 {
            continue;
        }
        let cell = &cell_map[key];
        let pa = &a.complex.cell(&native.left).poly;
        let pb = &b.complex.cell(&native.right).poly;
        let na = pa.dim();
        for facet in cell.poly.facet_vertex_sets() {
            let points: Vec<Vect> = facet
                .iter()
                .map(|&i| native.region.point_at(&cell.poly.verts()[i]))
                .collect();
            let xs: Vec<Vect> = points.iter().map(|p| p[..na].to_vec()).collect();
            let ys: Vec<Vect> = points.iter().map(|p| p[na..].to_vec()).collect();
            let (left_face, left_route) =
                da.face_by_tight_set(&native.left, &pa.tight_halfspaces(&xs))?;
            let (right_face, right_route) =
                db.face_by_tight_set(&native.right, &pb.tight_halfspaces(&ys))?;
            let child_shift = adjusted_shift(
                &native.shift,
                &lift_offset(da.map_of(&left_face), &da.map_of(&native.left).compose(&left_route))?,
                &lift_offset(db.map_of(&right_face), &db.map_of(&native.right).compose(&right_route))?,
            );
            let child_key = CellKey::fiber(&left_face, &right_face, child_shift);
            let child = natives.get(&child_key).ok_or_else(|| {
                Error::invalid(format!("missing solution cell {child_key} under {key}"))
            })?;
            let embed = left_route.block_sum(&right_route);
            attachments.push(Attachment {
                parent: key.clone(),
                child: child_key,
                map: region_chart_map(&child.region, &native.region, &embed)?,
            });
        }
    }

    // Assemble, then derive the target map and projections per cell.
    let complex = CornerComplex::from_parts(cell_map.into_values().collect(), attachments);
    complex
        .validate()
        .map_err(|e| Error::invalid(format!("fiber product assembly: {e}")))?;
    let mut maps = BTreeMap::new();
    let mut left_source = BTreeMap::new();
    let mut right_source = BTreeMap::new();
    for (key, native) in &natives {
        let na = a.complex.cell(&native.left).poly.dim();
        let nb = b.complex.cell(&native.right).poly.dim();
        let proj_left = chart_projection(&native.region, 0, na);
        let proj_right = chart_projection(&native.region, na, nb);
        maps.insert(key.clone(), da.map_of(&native.left).compose(&proj_left));
        left_source.insert(key.clone(), (native.left.clone(), proj_left));
        right_source.insert(key.clone(), (native.right.clone(), proj_right));
    }
    Ok(FiberProductChain {
        complex,
        maps,
        left_source,
        right_source,
    })
}

/// Orientation of a top solution cell: the product orientation of the source
/// cells must match (lifted normals, then solution directions) read in the
/// product frame.
fn oriented_fiber_sign(
    left: &Cell,
    right: &Cell,
    ma: &AffineMap,
    mb: &AffineMap,
    region: &Region,
    d: usize,
) -> i8 {
    let na = left.dim();
    let nb = right.dim();
    let n = na + nb;
    let mut system_cols: Vec<Vect> = Vec::with_capacity(n);
    for j in 0..na {
        system_cols.push(ma.a.col(j));
    }
    for j in 0..nb {
        system_cols.push(mb.a.col(j).iter().map(|x| -x).collect());
    }
    let system = Matrix::from_cols_with_rows(system_cols, d);
    let mut cols: Vec<Vect> = Vec::with_capacity(n);
    for j in 0..d {
        let mut e = zero_vect(d);
        e[j] = rat_int(1);
        cols.push(system.solve(&e).expect("spanning differentials"));
    }
    cols.extend(region.kernel.iter().cloned());
    let eta = Matrix::from_cols_with_rows(cols, n).det_sign();
    left.sign * right.sign * eta * left.frame_det_sign() * right.frame_det_sign()
}

/// The integer vector by which two lifts of the same face map differ.
fn lift_offset(direct: &AffineMap, via_parent: &AffineMap) -> Result<Vec<i64>> {
    let diff: Vect = direct
        .b
        .iter()
        .zip(via_parent.b.iter())
        .map(|(x, y)| x - y)
        .collect();
    crate::complex::shift_from_rats(&diff)
}

fn adjusted_shift(shift: &[i64], p: &[i64], q: &[i64]) -> Vec<i64> {
    shift
        .iter()
        .zip(p.iter().zip(q.iter()))
        .map(|(k, (p, q))| k + p - q)
        .collect()
}

/// Affine map from the child region's kernel coordinates into the parent's,
/// through the block embedding of the source charts.
fn region_chart_map(child: &Region, parent: &Region, embed: &AffineMap) -> Result<AffineMap> {
    let w = Matrix::from_cols_with_rows(parent.kernel.clone(), parent.base.len());
    let express = |v: &[Rat]| -> Result<Vect> {
        w.solve(v)
            .ok_or_else(|| Error::invalid("child region leaves the parent's solution space".to_string()))
    };
    let offset = express(&sub(&embed.apply(&child.base), &parent.base))?;
    let mut cols = Vec::with_capacity(child.kernel.len());
    for col in &child.kernel {
        cols.push(express(&embed.a.mul_vec(col))?);
    }
    Ok(AffineMap::new(
        Matrix::from_cols_with_rows(cols, parent.kernel.len()),
        offset,
    ))
}

/// Projection of a region's kernel coordinates onto one source chart.
fn chart_projection(region: &Region, offset: usize, len: usize) -> AffineMap {
    let rows: Vec<Vec<Rat>> = (offset..offset + len)
        .map(|i| region.kernel.iter().map(|col| col[i].clone()).collect())
        .collect();
    AffineMap::new(
        Matrix::from_rows_with_cols(rows, region.kernel.len()),
        region.base[offset..offset + len].to_vec(),
    )
}

// ---------------------------------------------------------------------------
// Intersection product, trace, pairing.
// ---------------------------------------------------------------------------

/// The intersection product of two transversal cycles: the fiber product of
/// every generator pair, mapped to the target by either projection, with
/// multiplied coefficients.
///
/// On an odd-dimensional target the bare fiber-product orientation makes the
/// fundamental class a left unit but only a right unit up to a degree sign, so
/// the product normalizes each term by `(-1)^{d·n·(m+1)}` for factor degrees
/// `m`, `n`.  The factor is `+1` whenever the target dimension `d` is even, and
/// in odd dimensions it is the unique minimal correction that restores the
/// two-sided unit law together with the graded commutation rule
/// `a ∩ b = (-1)^{(m-d)(n-d)} b ∩ a`.
pub fn intersection_product(a: &Chain, b: &Chain) -> Result<Chain> {
    let target = common_target(a, b)?;
    let d = target.ambient_dim();
    let top = a.degree() as i64 + b.degree() as i64 - d as i64;
    let degree = top.max(0) as usize;
    let unit_sign: i64 = if d % 2 == 1 && b.degree() % 2 == 1 && a.degree() % 2 == 0 {
        -1
    } else {
        1
    };
    let mut raw = Vec::new();
    for (ca, ga) in a.terms() {
        for (cb, gb) in b.terms() {
            let fib = fiber_product(target, ga, gb)?;
            if fib.complex.is_empty() {
                continue;
            }
            raw.push((ca * cb * unit_sign, fib.generator()));
        }
    }
    Ok(Chain::new(target, degree, raw))
}

/// The trace functional: the signed point count in degree zero (shifted degree
/// minus the target dimension), zero in every other degree.
pub fn trace(c: &Chain) -> Rat {
    if c.degree() == 0 {
        rat_int(c.signed_point_count())
    } else {
        rat_int(0)
    }
}

/// The intersection pairing `trace(a ∩ b)`.  For degrees that do not sum to the
/// target dimension the product lands in nonzero degree, where the trace
/// vanishes identically, so no product is computed.
pub fn pairing(a: &Chain, b: &Chain) -> Result<Rat> {
    let target = common_target(a, b)?;
    if a.degree() + b.degree() != target.ambient_dim() {
        return Ok(rat_int(0));
    }
    Ok(trace(&intersection_product(a, b)?))
}

/// Whether every generator pair admits the constructive fiber product.
fn strictly_transversal(a: &Chain, b: &Chain) -> Result<bool> {
    let target = common_target(a, b)?;
    for (_, ga) in a.terms() {
        for (_, gb) in b.terms() {
            match fiber_product(target, ga, gb) {
                Ok(_) => {}
                Err(Error::NotTransversal(_)) => return Ok(false),
                Err(e) => return Err(e),
            }
        }
    }
    Ok(true)
}

/// Primes scanned by [`perturb_representative`].
const PERTURBATION_PRIMES: [i64; 8] = [7, 11, 13, 17, 19, 23, 29, 31];

/// Returns `b` unchanged when `(a, b)` is already transversal; otherwise
/// translates `b` by `(1/N, 1/N², …)` for `N = 7, 11, 13, …` until the pair
/// becomes transversal.  Torus translates are homotopic to the identity, so the
/// result represents the same class.  Gives up with a diagnostic after the
/// fixed prime budget.
pub fn perturb_representative(a: &Chain, b: &Chain) -> Result<Chain> {
    if strictly_transversal(a, b)? {
        return Ok(b.clone());
    }
    if !b.target().is_torus() {
        return Err(Error::unsupported(
            "perturbation is only available over torus targets",
        ));
    }
    let d = b.target().ambient_dim();
    for n in PERTURBATION_PRIMES {
        let v: Vect = (1..=d as u32)
            .map(|i| Rat::new(1.into(), num_bigint::BigInt::from(n).pow(i)))
            .collect();
        let moved = b.translated(&v);
        if strictly_transversal(a, &moved)? {
            return Ok(moved);
        }
    }
    Err(Error::invalid(format!(
        "perturbation budget exhausted: translates 1/N, 1/N², … for N in {:?} all fail",
        PERTURBATION_PRIMES
    )))
}

// ---------------------------------------------------------------------------
// Frobenius structure.
// ---------------------------------------------------------------------------

/// The Frobenius package over a closed oriented flat target: shifted grading,
/// unit class, traces of a homology basis, and its intersection Gram matrix.
#[derive(Clone, Debug)]
pub struct FrobeniusData {
    pub ambient_dim: usize,
    /// Degree of each basis class, shifted by the target dimension.
    pub shifted_degrees: Vec<i64>,
    /// The identity chain class, the unit of the product.
    pub unit: Chain,
    /// Trace of each basis class.
    pub traces: Vec<Rat>,
    /// Pairing matrix `⟨bᵢ, bⱼ⟩`, computed on deterministically perturbed
    /// representatives where a pair is not transversal as given.
    pub pairing: Matrix<Rat>,
}

/// Computes the Frobenius data of a basis of cycles.  Entries pair classes of
/// complementary degree; all other entries vanish by the graded trace.
pub fn frobenius_data(unit: Chain, basis: &[Chain]) -> Result<FrobeniusData> {
    let target = unit.target();
    let d = target.ambient_dim();
    for b in basis {
        if b.target() != target {
            return Err(Error::invalid("basis classes target different spaces"));
        }
    }
    let n = basis.len();
    let mut gram = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if basis[i].degree() + basis[j].degree() != d {
                continue;
            }
            let bj = perturb_representative(&basis[i], &basis[j])?;
            gram.set(i, j, pairing(&basis[i], &bj)?);
        }
    }
    Ok(FrobeniusData {
        ambient_dim: d,
        shifted_degrees: basis.iter().map(|b| b.degree() as i64 - d as i64).collect(),
        unit,
        traces: basis.iter().map(trace).collect(),
        pairing: gram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::torus_fundamental_chain;
    use crate::complex::{circle, cube, point as point_complex, segment};
    use crate::homology::winding_class;
    use crate::scalar::rat;

    /// A loop once around coordinate `axis` of `T^d`, held at `base` in the other
    /// coordinates, with its two domain vertices at parameters `start` and
    /// `start + 1/2` (so their images can be kept away from other chains' cells).
    fn torus_loop(d: usize, axis: usize, base: &[Rat], start: Rat) -> Chain {
        let complex = circle("c");
        let col: Vect = (0..d)
            .map(|i| if i == axis { rat_int(1) } else { rat_int(0) })
            .collect();
        let mut offset = base.to_vec();
        offset[axis] = &offset[axis] + &start;
        let map = AffineMap::new(Matrix::from_cols_with_rows(vec![col], d), offset);
        let mut tops = BTreeMap::new();
        tops.insert(CellKey::atom("c.e0"), map.clone());
        tops.insert(CellKey::atom("c.e1"), map);
        let gen = ChainGenerator::from_top_maps(complex, tops, Target::Torus(d)).unwrap();
        Chain::from_generator(Target::Torus(d), gen)
    }

    fn point_chain(d: usize, at: &[Rat]) -> Chain {
        let complex = point_complex("p");
        let mut maps = BTreeMap::new();
        maps.insert(CellKey::atom("p"), AffineMap::constant(0, at.to_vec()));
        Chain::from_generator(Target::Torus(d), ChainGenerator::new(complex, maps))
    }

    /// The meridian `t ↦ (1/2, t)`.
    fn mu() -> Chain {
        torus_loop(2, 1, &[rat(1, 2), rat_int(0)], rat_int(0))
    }

    /// The longitude `t ↦ (t, 1/4)`, with its domain vertices moved to
    /// parameters 1/4 and 3/4 so the crossing with `mu` is interior on both
    /// sides.
    fn lambda() -> Chain {
        torus_loop(2, 0, &[rat_int(0), rat(1, 4)], rat(1, 4))
    }

    /// Re-embeds a chain through an affine lattice map of flat targets.
    fn scattered(chain: &Chain, target: Target, embed: &AffineMap) -> Chain {
        let raw = chain
            .terms()
            .iter()
            .map(|(c, g)| {
                let maps = g
                    .maps
                    .iter()
                    .map(|(k, m)| (k.clone(), embed.compose(m)))
                    .collect();
                (*c, ChainGenerator::new(g.complex.clone(), maps))
            })
            .collect();
        Chain::new(target, chain.degree(), raw)
    }

    /// The 2-torus sitting in `T³` spanning `axes`, at `offset`.
    fn torus_slice(axes: [usize; 2], offset: &[Rat]) -> Chain {
        let mut rows = vec![vec![rat_int(0); 2]; 3];
        rows[axes[0]][0] = rat_int(1);
        rows[axes[1]][1] = rat_int(1);
        let embed = AffineMap::from_rows(rows, offset.to_vec());
        scattered(&torus_fundamental_chain(2), Target::Torus(3), &embed)
    }

    /// A square patch `[0,1/2]² + shift` of the 2-torus, as a chain with boundary.
    fn square_patch(shift: &[Rat]) -> Chain {
        let complex = cube(2);
        let top = complex.top_cells()[0].key.clone();
        let map = AffineMap::from_rows(
            vec![vec![rat(1, 2), rat_int(0)], vec![rat_int(0), rat(1, 2)]],
            shift.to_vec(),
        );
        let mut tops = BTreeMap::new();
        tops.insert(top, map);
        let gen = ChainGenerator::from_top_maps(complex, tops, Target::Torus(2)).unwrap();
        Chain::from_generator(Target::Torus(2), gen)
    }

    /// A straight path in `T²` from `from` along `dir`, parameterized over [0,1].
    fn path_chain(from: &[Rat], dir: &[Rat]) -> Chain {
        let complex = segment("i", rat_int(0), rat_int(1));
        let map = AffineMap::new(
            Matrix::from_cols_with_rows(vec![dir.to_vec()], from.len()),
            from.to_vec(),
        );
        let mut tops = BTreeMap::new();
        tops.insert(CellKey::atom("i"), map);
        let gen = ChainGenerator::from_top_maps(complex, tops, Target::Torus(2)).unwrap();
        Chain::from_generator(Target::Torus(2), gen)
    }

    #[test]
    fn meridian_and_longitude_are_transversal() {
        let report = is_transversal(&mu(), &lambda()).unwrap();
        assert!(report.verdict(), "{report}");
        assert!(
            report.records.iter().any(|r| r.meets_open),
            "the loops do cross"
        );
        for r in &report.records {
            if r.meets_open {
                assert_eq!(r.rank, 2, "{} vs {}", r.left, r.right);
            }
        }
    }

    #[test]
    fn identical_loops_are_not_transversal() {
        let report = is_transversal(&mu(), &mu()).unwrap();
        assert!(!report.verdict());
        assert!(!report.failures().is_empty());
    }

    #[test]
    fn disjoint_parallel_loops_are_vacuously_transversal() {
        let a = torus_loop(2, 0, &[rat_int(0), rat_int(0)], rat_int(0));
        let b = torus_loop(2, 0, &[rat_int(0), rat(1, 2)], rat_int(0));
        let report = is_transversal(&a, &b).unwrap();
        assert!(report.verdict());
        assert!(report.records.iter().all(|r| !r.meets_open));
        assert!(intersection_product(&a, &b).unwrap().is_zero());
    }

    #[test]
    fn meridian_cap_longitude_is_one_positive_point() {
        let p = intersection_product(&mu(), &lambda()).unwrap();
        assert_eq!(p.degree(), 0);
        assert_eq!(p.terms().len(), 1);
        let (coeff, gen) = &p.terms()[0];
        assert_eq!(gen.complex.cell_count(), 1);
        let key = gen.complex.keys().next().unwrap();
        let value = gen.maps[key].b.clone();
        assert_eq!(value, vec![rat(1, 2), rat(1, 4)], "crossing point");
        assert_eq!(coeff * i64::from(gen.complex.cell(key).sign), 1);
        assert_eq!(p.signed_point_count(), 1);
    }

    #[test]
    fn intersection_is_graded_antisymmetric_on_loops() {
        assert_eq!(
            intersection_product(&lambda(), &mu())
                .unwrap()
                .signed_point_count(),
            -1
        );
        assert_eq!(pairing(&mu(), &lambda()).unwrap(), rat_int(1));
        assert_eq!(pairing(&lambda(), &mu()).unwrap(), rat_int(-1));
    }

    #[test]
    fn fundamental_class_is_a_two_sided_unit() {
        let unit = torus_fundamental_chain(2);
        let loop_x = torus_loop(2, 1, &[rat(1, 3), rat_int(0)], rat_int(0));
        let wl = winding_class(&loop_x).unwrap();
        let left = intersection_product(&unit, &loop_x).unwrap();
        let right = intersection_product(&loop_x, &unit).unwrap();
        assert_eq!(winding_class(&left).unwrap(), wl);
        assert_eq!(winding_class(&right).unwrap(), wl);

        let pt = point_chain(2, &[rat(1, 7), rat(1, 11)]);
        assert_eq!(
            intersection_product(&unit, &pt).unwrap().signed_point_count(),
            1
        );
        assert_eq!(
            intersection_product(&pt, &unit).unwrap().signed_point_count(),
            1
        );

        let square = intersection_product(&unit, &unit).unwrap();
        assert_eq!(winding_class(&square).unwrap(), winding_class(&unit).unwrap());
    }

    #[test]
    fn fiber_with_the_identity_is_isomorphic_to_the_source() {
        let unit = torus_fundamental_chain(2);
        let loop_x = torus_loop(2, 1, &[rat(1, 3), rat_int(0)], rat_int(0));
        let (_, gen) = &loop_x.terms()[0];
        let (_, ugen) = &unit.terms()[0];
        let fib = fiber_product(Target::Torus(2), gen, ugen).unwrap();
        assert_eq!(fib.complex.dim(), Some(1));
        assert_eq!(fib.complex.cell_count(), gen.complex.cell_count());
        assert_eq!(fib.complex.cells_of_dim(1).count(), 2);
        assert_eq!(fib.complex.cells_of_dim(0).count(), 2);
    }

    #[test]
    fn path_against_full_circle_gives_its_graph() {
        // A path through half of T¹ against the full circle: the graph interval.
        let complex = segment("i", rat_int(0), rat_int(1));
        let map = AffineMap::new(
            Matrix::from_cols_with_rows(vec![vec![rat(1, 2)]], 1),
            vec![rat(1, 5)],
        );
        let mut tops = BTreeMap::new();
        tops.insert(CellKey::atom("i"), map);
        let path = Chain::from_generator(
            Target::Torus(1),
            ChainGenerator::from_top_maps(complex, tops, Target::Torus(1)).unwrap(),
        );
        let circle = torus_fundamental_chain(1);
        let (_, pg) = &path.terms()[0];
        let (_, cg) = &circle.terms()[0];
        let fib = fiber_product(Target::Torus(1), pg, cg).unwrap();
        assert_eq!(fib.complex.dim(), Some(1));
        // Interval split at the circle's marked vertex 1/2 (hit at parameter 3/5):
        // two edges and three vertices.
        assert_eq!(fib.complex.cells_of_dim(1).count(), 2);
        assert_eq!(fib.complex.cells_of_dim(0).count(), 3);
        for (key, (_, proj)) in &fib.left_source {
            let m = &fib.maps[key];
            let cell_dim = fib.complex.cell(key).dim();
            assert_eq!(proj.dom_dim(), cell_dim);
            assert_eq!(m.cod_dim(), 1);
        }
    }

    #[test]
    fn fiber_leibniz_identity_for_a_patch_against_a_loop() {
        // K a square patch (dimension 2, with boundary), L a vertical loop
        // crossing it; check ∂(K ∩ L) = (∂K) ∩ L + (−1)² K ∩ (∂L) exactly.
        let patch = square_patch(&[rat_int(0), rat_int(0)]);
        let line = torus_loop(2, 1, &[rat(1, 4), rat_int(0)], rat(1, 4));
        let lhs = intersection_product(&patch, &line).unwrap().boundary();
        let rhs = intersection_product(&patch.boundary(), &line).unwrap();
        assert!(intersection_product(&patch, &line.boundary()).unwrap().is_zero());
        assert!(lhs.sub(&rhs).unwrap().is_zero(), "leibniz for an even factor");
    }

    #[test]
    fn fiber_leibniz_identity_with_an_odd_factor() {
        // K an open path (dimension 1), L a square patch: the cross term enters
        // with sign (−1)^{dim K} = −1.
        let path = path_chain(&[rat(2, 5), rat_int(0)], &[rat_int(0), rat(1, 2)]);
        let patch = square_patch(&[rat(1, 5), rat(1, 5)]);
        let lhs = intersection_product(&path, &patch).unwrap().boundary();
        let rhs_a = intersection_product(&path.boundary(), &patch).unwrap();
        let rhs_b = intersection_product(&path, &patch.boundary()).unwrap();
        let rhs = rhs_a.sub(&rhs_b).unwrap();
        assert!(!rhs_b.is_zero(), "the path does cross the patch boundary");
        assert!(lhs.sub(&rhs).unwrap().is_zero(), "leibniz for an odd factor");
    }

    #[test]
    fn product_class_is_translation_invariant() {
        let small = [rat(1, 7), rat(1, 49)];
        let moved = lambda().translated(&small);
        let a = intersection_product(&mu(), &lambda()).unwrap();
        let b = intersection_product(&mu(), &moved).unwrap();
        assert_eq!(a.signed_point_count(), b.signed_point_count());
    }

    #[test]
    fn perturbation_leaves_transversal_pairs_alone() {
        let l = lambda();
        let back = perturb_representative(&mu(), &l).unwrap();
        assert_eq!(back, l);
    }

    #[test]
    fn perturbation_resolves_self_intersections() {
        let m = mu();
        let moved = perturb_representative(&m, &m).unwrap();
        assert_ne!(moved, m);
        assert!(strictly_transversal(&m, &moved).unwrap());
        assert!(intersection_product(&m, &moved).unwrap().is_zero());
        assert_eq!(pairing(&m, &moved).unwrap(), rat_int(0));
    }

    #[test]
    fn perturbation_separates_coincident_points() {
        let p = point_chain(2, &[rat(1, 3), rat(1, 3)]);
        let moved = perturb_representative(&p, &p).unwrap();
        assert_ne!(moved, p);
        assert!(intersection_product(&p, &moved).unwrap().is_zero());
    }

    #[test]
    fn trace_reads_the_point_coefficient_in_degree_zero() {
        let pt = point_chain(2, &[rat(1, 7), rat(1, 11)]);
        assert_eq!(trace(&pt.scaled(3)), rat_int(3));
        assert_eq!(trace(&torus_fundamental_chain(2)), rat_int(0));
        assert_eq!(trace(&mu()), rat_int(0));
        assert_eq!(
            pairing(&pt, &torus_fundamental_chain(2)).unwrap(),
            rat_int(1)
        );
    }

    /// A generic-position basis of the homology of T².
    fn t2_basis() -> Vec<Chain> {
        vec![
            point_chain(2, &[rat(1, 7), rat(1, 11)]),
            torus_loop(2, 0, &[rat_int(0), rat(2, 7)], rat(1, 5)),
            torus_loop(2, 1, &[rat(1, 3), rat_int(0)], rat_int(0)),
            torus_fundamental_chain(2),
        ]
    }

    #[test]
    fn frobenius_pairing_on_t2_is_nondegenerate() {
        let data = frobenius_data(torus_fundamental_chain(2), &t2_basis()).unwrap();
        assert_eq!(data.ambient_dim, 2);
        assert_eq!(data.shifted_degrees, vec![-2, -1, -1, 0]);
        assert_eq!(
            data.traces,
            vec![rat_int(1), rat_int(0), rat_int(0), rat_int(0)]
        );
        assert_eq!(data.pairing.rank(), 4, "nondegenerate pairing");
        // Odd classes pair antisymmetrically, even ones symmetrically.
        assert_eq!(data.pairing.at(1, 2), &-data.pairing.at(2, 1).clone());
        assert_eq!(data.pairing.at(0, 3), data.pairing.at(3, 0));
        assert_eq!(data.pairing.at(1, 1), &rat_int(0));
        assert_eq!(data.pairing.at(2, 2), &rat_int(0));
    }

    #[test]
    fn frobenius_associativity_on_t2_triples() {
        let unit = torus_fundamental_chain(2);
        let a = torus_loop(2, 0, &[rat_int(0), rat(2, 7)], rat(1, 5));
        let b = torus_loop(2, 1, &[rat(1, 3), rat_int(0)], rat_int(0));
        // ⟨unit ∩ a, b⟩ = ⟨unit, a ∩ b⟩
        let lhs = pairing(&intersection_product(&unit, &a).unwrap(), &b).unwrap();
        let rhs = pairing(&unit, &intersection_product(&a, &b).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        // ⟨a ∩ b, unit⟩ = ⟨a, b ∩ unit⟩
        let lhs = pairing(&intersection_product(&a, &b).unwrap(), &unit).unwrap();
        let rhs = pairing(&a, &intersection_product(&b, &unit).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn graded_commutativity_on_the_full_t2_basis() {
        let basis = t2_basis();
        let d = 2i64;
        for x in &basis {
            for y in &basis {
                let sx = x.degree() as i64 - d;
                let sy = y.degree() as i64 - d;
                let sign = if (sx * sy) % 2 == 0 { 1 } else { -1 };
                let yy = perturb_representative(x, y).unwrap();
                let xy = intersection_product(x, &yy).unwrap();
                let xx = perturb_representative(y, x).unwrap();
                let yx = intersection_product(y, &xx).unwrap();
                assert_eq!(
                    winding_class(&xy).unwrap(),
                    winding_class(&yx.scaled(sign)).unwrap(),
                    "commutativity for degrees {} and {}",
                    x.degree(),
                    y.degree()
                );
            }
        }
    }

    /// A generic-position basis of the homology of T³.
    fn t3_basis() -> Vec<Chain> {
        vec![
            point_chain(3, &[rat(1, 7), rat(1, 11), rat(1, 13)]),
            torus_loop(3, 0, &[rat_int(0), rat(1, 5), rat(1, 23)], rat(1, 3)),
            torus_loop(3, 1, &[rat(2, 5), rat_int(0), rat(3, 23)], rat(1, 3)),
            torus_loop(3, 2, &[rat(1, 19), rat(2, 19), rat_int(0)], rat(1, 3)),
            torus_slice([1, 2], &[rat(3, 7), rat_int(0), rat_int(0)]),
            torus_slice([0, 2], &[rat_int(0), rat(2, 11), rat_int(0)]),
            torus_slice([0, 1], &[rat_int(0), rat_int(0), rat(2, 5)]),
            torus_fundamental_chain(3),
        ]
    }

    #[test]
    fn pairing_of_a_slice_and_a_crossing_line_in_t3() {
        let slice = torus_slice([0, 1], &[rat_int(0), rat_int(0), rat(2, 5)]);
        let line = torus_loop(3, 2, &[rat(1, 7), rat(2, 7), rat_int(0)], rat(1, 5));
        let p = pairing(&slice, &line).unwrap();
        assert_eq!(p.clone() * p.clone(), rat_int(1), "±1 crossing");
        // Even shifted degrees commute on the nose.
        assert_eq!(pairing(&line, &slice).unwrap(), p);
        // The fundamental class is still the unit in T³.
        let unit = torus_fundamental_chain(3);
        let prod = intersection_product(&unit, &line).unwrap();
        assert_eq!(winding_class(&prod).unwrap(), winding_class(&line).unwrap());
    }

    #[test]
    fn associativity_on_t3_triples() {
        let basis = t3_basis();
        // Degree patterns (2,2,2), (3,2,1), (1,2,3), (0,3,3) exercise every
        // branch of the odd-dimensional unit normalization.
        let triples = [(4, 5, 6), (7, 5, 1), (1, 5, 7), (0, 7, 7)];
        for (i, j, k) in triples {
            let (x, y, z) = (&basis[i], &basis[j], &basis[k]);
            let left = intersection_product(&intersection_product(x, y).unwrap(), z).unwrap();
            let right = intersection_product(x, &intersection_product(y, z).unwrap()).unwrap();
            assert_eq!(
                winding_class(&left).unwrap(),
                winding_class(&right).unwrap(),
                "associativity for degrees {} {} {}",
                x.degree(),
                y.degree(),
                z.degree()
            );
        }
        // Adjointness of the pairing: ⟨x ∩ y, z⟩ = ⟨x, y ∩ z⟩.
        let (x, y, z) = (&basis[4], &basis[5], &basis[6]);
        let lhs = pairing(&intersection_product(x, y).unwrap(), z).unwrap();
        let rhs = pairing(x, &intersection_product(y, z).unwrap()).unwrap();
        assert_eq!(lhs, rhs);
        assert_eq!(lhs.clone() * lhs.clone(), rat_int(1));
    }

    #[test]
    fn graded_commutativity_on_the_full_t3_basis() {
        let basis = t3_basis();
        let d = 3i64;
        for x in &basis {
            for y in &basis {
                let sx = x.degree() as i64 - d;
                let sy = y.degree() as i64 - d;
                let sign = if (sx * sy) % 2 == 0 { 1 } else { -1 };
                let yy = perturb_representative(x, y).unwrap();
                let xy = intersection_product(x, &yy).unwrap();
                let xx = perturb_representative(y, x).unwrap();
                let yx = intersection_product(y, &xx).unwrap();
                assert_eq!(
                    winding_class(&xy).unwrap(),
                    winding_class(&yx.scaled(sign)).unwrap(),
                    "commutativity for degrees {} and {}",
                    x.degree(),
                    y.degree()
                );
            }
        }
    }

    #[test]
    fn mixed_targets_are_rejected() {
        let a = mu();
        let b = point_chain(3, &[rat_int(0), rat_int(0), rat_int(0)]);
        assert!(is_transversal(&a, &b).is_err());
        assert!(intersection_product(&a, &b).is_err());
    }
}
