//! Families of sphere maps and the operations induced by little discs.
//!
//! A `d`-sphere is modelled as the cube `[-1,1]^d` with its entire boundary
//! collapsed to a point.  A *sphere family* over a corner complex stores, for
//! every cell, a piecewise-affine map on the joint chart `(x, y)` — `x` ranging
//! over the cell chart and `y` over the cube — that is constant in `y` near the
//! cube boundary (the *collar*).  The collar makes the boundary collapse well
//! defined and lets evaluation at the basepoint be read off affinely.
//!
//! A configuration of little discs acts on a tuple of such families: wherever
//! all the basepoint evaluations meet, the sphere maps are rescaled into the
//! disc boxes and the surrounding region is filled with the common basepoint
//! value.  Specialising the configuration gives the loop product and the
//! degree-two bracket.

use crate::chain::{Chain, ChainGenerator, Target};
use crate::complex::{Attachment, Cell, CellKey, CornerComplex};
use crate::discs::{DiscConfiguration, LittleDisc};
use crate::geometry::{
    add, concat, dot, pullback_halfspace, sub, zero_vect, AffineMap, Halfspace,
    Polytope, Vect,
};
use crate::homology::{winding_class, WindingClass};
use crate::linalg::Matrix;
use crate::scalar::{is_integral, rat, rat_int, Rat};
use crate::transversal::fiber_product;
use crate::{Error, Result};
use itertools::Itertools;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeMap;

/// The cube `[-1,1]^d` as a polytope.
fn cube_poly(d: usize) -> Polytope {
    let mut p = Polytope::point();
    for _ in 0..d {
        p = p.product(&Polytope::segment(rat_int(-1), rat_int(1)));
    }
    p
}

/// The inclusion `x -> (x, s, ..., s)` of a cell chart at a cube corner.
fn corner_inclusion(b: usize, d: usize, s: i64) -> AffineMap {
    let mut rows = Vec::with_capacity(b + d);
    for i in 0..b {
        let mut row = vec![Rat::zero(); b];
        row[i] = Rat::one();
        rows.push(row);
    }
    for _ in 0..d {
        rows.push(vec![Rat::zero(); b]);
    }
    let mut off = vec![Rat::zero(); b];
    off.extend((0..d).map(|_| rat_int(s)));
    AffineMap::new(Matrix::from_rows_with_cols(rows, b), off)
}

/// Extends a map to extra ignored coordinates: `(u, x, v) -> m(x)`.
fn pad_cols(m: &AffineMap, before: usize, after: usize) -> AffineMap {
    let rows = m
        .a
        .rows()
        .iter()
        .map(|r| {
            let mut row = vec![Rat::zero(); before];
            row.extend(r.iter().cloned());
            row.extend((0..after).map(|_| Rat::zero()));
            row
        })
        .collect();
    AffineMap::new(
        Matrix::from_rows_with_cols(rows, before + m.dom_dim() + after),
        m.b.clone(),
    )
}

/// Per-coordinate vertex bounds of a polytope.
fn bounding_box(p: &Polytope) -> (Vect, Vect) {
    let mut lo = p.verts()[0].clone();
    let mut hi = p.verts()[0].clone();
    for v in &p.verts()[1..] {
        for (k, x) in v.iter().enumerate() {
            if x < &lo[k] {
                lo[k] = x.clone();
            }
            if x > &hi[k] {
                hi[k] = x.clone();
            }
        }
    }
    (lo, hi)
}

/// True when the bounding boxes have no common point.
fn boxes_apart(a: &(Vect, Vect), b: &(Vect, Vect)) -> bool {
    a.1.iter().zip(&b.0).any(|(hi, lo)| hi < lo) || b.1.iter().zip(&a.0).any(|(hi, lo)| hi < lo)
}

/// True when some facet halfspace of `a` has all of `b` weakly outside, which
/// certifies that the interiors of `a` and `b` are disjoint.
fn facet_separates(a: &Polytope, b: &Polytope) -> bool {
    a.hrep()
        .iter()
        .any(|h| b.verts().iter().all(|v| h.eval(v) >= Rat::zero()))
}

/// Reads an integer vector out of a rational one.
pub(crate) fn int_vec(v: &[Rat]) -> Option<Vec<i64>> {
    v.iter()
        .map(|x| {
            if is_integral(x) {
                x.to_integer().to_i64()
            } else {
                None
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Sphere chains
// ---------------------------------------------------------------------------

/// One affine piece of a sphere family over a single cell: a full-dimensional
/// region in the joint chart `(x, y)` together with an affine lift into the
/// universal cover of the target.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SpherePiece {
    pub region: Polytope,
    pub map: AffineMap,
}

/// A sphere family carried by one corner complex: a list of pieces over every
/// cell, jointly tiling `chart x [-1,1]^d`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SphereGenerator {
    pub base: CornerComplex,
    pub pieces: BTreeMap<CellKey, Vec<SpherePiece>>,
}

impl SphereGenerator {
    /// The affine basepoint-evaluation lift on one cell, read at the cube
    /// corner `(s, ..., s)`.
    pub(crate) fn eval_lift(&self, d: usize, key: &CellKey, s: i64) -> Result<AffineMap> {
        let cell = self.base.cell(key);
        let b = cell.poly.dim();
        let corner: Vect = (0..d).map(|_| rat_int(s)).collect();
        let pieces = self
            .pieces
            .get(key)
            .ok_or_else(|| Error::invalid(format!("no sphere pieces over cell {key}")))?;
        'pieces: for p in pieces {
            for v in cell.poly.verts() {
                if !p.region.contains(&concat(v, &corner)) {
                    continue 'pieces;
                }
            }
            return Ok(p.map.compose(&corner_inclusion(b, d, s)));
        }
        Err(Error::invalid(format!(
            "no piece over cell {key} covers the cube corner"
        )))
    }

    /// Checks the full set of structural invariants of the family.
    fn validate(&self, target: Target, d: usize, margin: &Rat, degree: usize) -> Result<()> {
        self.validate_family(target, d, margin, degree, true)
    }

    /// The shared invariant battery: tiling, collar constancy, junction
    /// continuity and attachment compatibility; `closed` additionally requires
    /// one-dimensional fibers to close up in the target.  Families with open
    /// interval fibers (path chains between branes) skip the closure check.
    pub(crate) fn validate_family(
        &self,
        target: Target,
        d: usize,
        margin: &Rat,
        degree: usize,
        closed: bool,
    ) -> Result<()> {
        let Some(top) = self.base.dim() else {
            return Ok(());
        };
        if top != degree {
            return Err(Error::invalid(format!(
                "sphere family of degree {degree} carried by a complex of dimension {top}"
            )));
        }
        let dt = target.ambient_dim();
        let core = Rat::one() - margin;
        for cell in self.base.cells() {
            let b = cell.poly.dim();
            let joint = b + d;
            let pieces = self
                .pieces
                .get(&cell.key)
                .ok_or_else(|| Error::invalid(format!("no sphere pieces over cell {}", cell.key)))?;
            if pieces.is_empty() {
                return Err(Error::invalid(format!(
                    "empty piece list over cell {}",
                    cell.key
                )));
            }
            let mut vol = Rat::zero();
            for (i, p) in pieces.iter().enumerate() {
                if p.region.dim() != joint {
                    return Err(Error::invalid(format!(
                        "piece {i} over cell {} lives in dimension {} instead of {joint}",
                        cell.key,
                        p.region.dim()
                    )));
                }
                if p.map.dom_dim() != joint || p.map.cod_dim() != dt {
                    return Err(Error::invalid(format!(
                        "piece {i} over cell {} has a map of the wrong shape",
                        cell.key
                    )));
                }
                let y_constant = (b..joint).all(|j| p.map.a.col(j).iter().all(Zero::is_zero));
                for v in p.region.verts() {
                    let (x, y) = v.split_at(b);
                    if !cell.poly.contains(x) {
                        return Err(Error::invalid(format!(
                            "piece {i} over cell {} leaves the cell chart",
                            cell.key
                        )));
                    }
                    if y.iter().any(|c| c.abs() > Rat::one()) {
                        return Err(Error::invalid(format!(
                            "piece {i} over cell {} leaves the cube",
                            cell.key
                        )));
                    }
                    if !y_constant && y.iter().any(|c| c.abs() > core) {
                        return Err(Error::invalid(format!(
                            "piece {i} over cell {} varies inside the collar",
                            cell.key
                        )));
                    }
                }
                vol += p.region.volume();
            }
            let expect = cell.poly.volume() * rat_int(1 << d);
            if vol != expect {
                return Err(Error::invalid(format!(
                    "pieces over cell {} do not tile the cube: total volume {} instead of {}",
                    cell.key,
                    crate::scalar::fmt_rat(&vol),
                    crate::scalar::fmt_rat(&expect)
                )));
            }
            let boxes: Vec<(Vect, Vect)> =
                pieces.iter().map(|p| bounding_box(&p.region)).collect();
            for i in 0..pieces.len() {
                for j in i + 1..pieces.len() {
                    if boxes_apart(&boxes[i], &boxes[j]) {
                        continue;
                    }
                    // Interiors can only meet if the bounding boxes overlap in
                    // an open set; touching boxes certify interior-disjointness
                    // for free.
                    let open_overlap = (0..joint).all(|k| {
                        let lo = boxes[i].0[k].clone().max(boxes[j].0[k].clone());
                        let hi = boxes[i].1[k].clone().min(boxes[j].1[k].clone());
                        hi > lo
                    });
                    let (ri, rj) = (&pieces[i].region, &pieces[j].region);
                    if open_overlap && !facet_separates(ri, rj) && !facet_separates(rj, ri) {
                        return Err(Error::invalid(format!(
                            "pieces {i} and {j} over cell {} overlap",
                            cell.key
                        )));
                    }
                    // A full junction lies inside a facet plane shared with
                    // opposite orientations.  Affine maps agreeing on a set of
                    // affine dimension `joint - 1` agree on its whole plane,
                    // so checking the facet's own vertices is exact.
                    for h in ri.hrep() {
                        let hf = h.flipped();
                        if !rj.hrep().contains(&hf) {
                            continue;
                        }
                        let on_i: Vec<Vect> = ri
                            .verts()
                            .iter()
                            .filter(|v| h.eval(v).is_zero())
                            .cloned()
                            .collect();
                        let on_j: Vec<Vect> = rj
                            .verts()
                            .iter()
                            .filter(|v| h.eval(v).is_zero())
                            .cloned()
                            .collect();
                        if on_i.is_empty() || on_j.is_empty() {
                            continue;
                        }
                        // Maps agreeing at every on-plane vertex of both sides
                        // agree on the span of those vertices, which contains
                        // the whole contact region; such pairs are continuous
                        // no matter what shape the contact has.
                        if on_i
                            .iter()
                            .chain(on_j.iter())
                            .all(|v| pieces[i].map.apply(v) == pieces[j].map.apply(v))
                        {
                            continue;
                        }
                        let full_contact = if joint == 1 {
                            true
                        } else {
                            let axis = h
                                .normal
                                .iter()
                                .position(|c| !c.is_zero())
                                .expect("facet normal is nonzero");
                            let chart = |v: &Vect| -> Vect {
                                v.iter()
                                    .enumerate()
                                    .filter(|(k, _)| *k != axis)
                                    .map(|(_, x)| x.clone())
                                    .collect()
                            };
                            // The contact is conv(on_i) with conv(on_j); it can
                            // only be full-dimensional in the plane when the
                            // chart bounding boxes overlap openly.
                            let ci: Vec<Vect> = on_i.iter().map(&chart).collect();
                            let cj: Vec<Vect> = on_j.iter().map(&chart).collect();
                            let open_chart = (0..joint - 1).all(|k| {
                                let lo_i = ci.iter().map(|v| &v[k]).min().unwrap();
                                let hi_i = ci.iter().map(|v| &v[k]).max().unwrap();
                                let lo_j = cj.iter().map(|v| &v[k]).min().unwrap();
                                let hi_j = cj.iter().map(|v| &v[k]).max().unwrap();
                                hi_i.min(hi_j) > lo_i.max(lo_j)
                            });
                            open_chart
                                && match (
                                    Polytope::from_vertices(ci),
                                    Polytope::from_vertices(cj),
                                ) {
                                    (Ok(pa), Ok(pb)) => {
                                        let mut hs = pa.hrep().to_vec();
                                        hs.extend(pb.hrep().iter().cloned());
                                        Polytope::from_hrep(&hs).is_some()
                                    }
                                    _ => false,
                                }
                        };
                        if full_contact {
                            return Err(Error::invalid(format!(
                                "pieces {i} and {j} over cell {} disagree on their junction",
                                cell.key
                            )));
                        }
                    }
                }
            }
            if d == 1 && closed {
                let plus = self.eval_lift(d, &cell.key, 1)?;
                let minus = self.eval_lift(d, &cell.key, -1)?;
                if plus.a != minus.a {
                    return Err(Error::invalid(format!(
                        "loop winding varies over cell {}",
                        cell.key
                    )));
                }
                let diff = sub(&plus.b, &minus.b);
                let closed = match target {
                    Target::Torus(_) => diff.iter().all(is_integral),
                    Target::Euclid(_) => diff.iter().all(Zero::is_zero),
                };
                if !closed {
                    return Err(Error::invalid(format!(
                        "loop ends over cell {} do not close up in the target",
                        cell.key
                    )));
                }
            }
        }
        for att in self.base.attachments() {
            let child = &self.pieces[&att.child];
            let parent = &self.pieces[&att.parent];
            let ext = att.map.block_sum(&AffineMap::identity(d));
            let pboxes: Vec<(Vect, Vect)> =
                parent.iter().map(|p| bounding_box(&p.region)).collect();
            for (ci, cp) in child.iter().enumerate() {
                let imgs: Vec<Vect> = cp.region.verts().iter().map(|v| ext.apply(v)).collect();
                let mut ibox = (imgs[0].clone(), imgs[0].clone());
                for w in &imgs[1..] {
                    for (k, x) in w.iter().enumerate() {
                        if x < &ibox.0[k] {
                            ibox.0[k] = x.clone();
                        }
                        if x > &ibox.1[k] {
                            ibox.1[k] = x.clone();
                        }
                    }
                }
                for (pi, pp) in parent.iter().enumerate() {
                    if boxes_apart(&ibox, &pboxes[pi]) {
                        continue;
                    }
                    if pp
                        .region
                        .hrep()
                        .iter()
                        .any(|h| imgs.iter().all(|w| h.eval(w) >= Rat::zero()))
                    {
                        continue;
                    }
                    let mut hs = cp.region.hrep().to_vec();
                    hs.extend(pp.region.hrep().iter().map(|h| pullback_halfspace(h, &ext)));
                    let Some(ov) = Polytope::from_hrep(&hs) else {
                        continue;
                    };
                    let mut delta: Option<Vect> = None;
                    for v in ov.verts() {
                        let dv = sub(&pp.map.apply(&ext.apply(v)), &cp.map.apply(v));
                        match &delta {
                            None => {
                                let ok = match target {
                                    Target::Torus(_) => dv.iter().all(is_integral),
                                    Target::Euclid(_) => dv.iter().all(Zero::is_zero),
                                };
                                if !ok {
                                    return Err(Error::invalid(format!(
                                        "pieces {ci}/{pi} across {} -> {} differ by a non-lattice shift",
                                        att.child, att.parent
                                    )));
                                }
                                delta = Some(dv);
                            }
                            Some(d0) => {
                                if *d0 != dv {
                                    return Err(Error::invalid(format!(
                                        "pieces {ci}/{pi} across {} -> {} are incompatible",
                                        att.child, att.parent
                                    )));
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// A formal sum of sphere families of one degree into a fixed target.
///
/// The `margin` certifies a common collar width: every family is constant in
/// `y` outside the core box `[-(1-margin), 1-margin]^d`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SphereChain {
    target: Target,
    sphere_dim: usize,
    margin: Rat,
    degree: usize,
    terms: Vec<(i64, SphereGenerator)>,
}

impl SphereChain {
    /// Builds a chain and certifies every invariant of every term: tiling,
    /// collar constancy, junction continuity, and attachment compatibility.
    pub fn new(
        target: Target,
        sphere_dim: usize,
        margin: Rat,
        degree: usize,
        terms: Vec<(i64, SphereGenerator)>,
    ) -> Result<SphereChain> {
        if margin <= Rat::zero() || margin >= Rat::one() {
            return Err(Error::invalid("collar margin must lie strictly between 0 and 1"));
        }
        let terms: Vec<(i64, SphereGenerator)> = terms
            .into_iter()
            .filter(|(c, g)| *c != 0 && !g.base.is_empty())
            .collect();
        for (_, g) in &terms {
            g.validate(target, sphere_dim, &margin, degree)?;
        }
        Ok(SphereChain {
            target,
            sphere_dim,
            margin,
            degree,
            terms,
        })
    }

    /// The zero chain of the given degree.
    pub fn zero(target: Target, sphere_dim: usize, degree: usize) -> SphereChain {
        SphereChain {
            target,
            sphere_dim,
            margin: rat(1, 2),
            degree,
            terms: Vec::new(),
        }
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn sphere_dim(&self) -> usize {
        self.sphere_dim
    }

    pub fn margin(&self) -> &Rat {
        &self.margin
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(i64, SphereGenerator)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The chain of basepoint values, over the same complexes.
    pub fn evaluation(&self) -> Result<Chain> {
        let mut raw = Vec::new();
        for (coeff, gen) in &self.terms {
            let mut maps = BTreeMap::new();
            for key in gen.base.keys() {
                maps.insert(key.clone(), gen.eval_lift(self.sphere_dim, key, 1)?);
            }
            raw.push((*coeff, ChainGenerator::new(gen.base.clone(), maps)));
        }
        Ok(Chain::new(self.target, self.degree, raw))
    }

    /// The boundary family: the same pieces restricted to the boundary strata
    /// of each carrying complex.
    pub fn boundary(&self) -> SphereChain {
        let mut raw = Vec::new();
        for (coeff, gen) in &self.terms {
            for comp in gen.base.boundary_components() {
                let pieces = comp
                    .complex
                    .keys()
                    .map(|k| (k.clone(), gen.pieces[k].clone()))
                    .collect();
                raw.push((
                    *coeff,
                    SphereGenerator {
                        base: comp.complex,
                        pieces,
                    },
                ));
            }
        }
        SphereChain {
            target: self.target,
            sphere_dim: self.sphere_dim,
            margin: self.margin.clone(),
            degree: self.degree.saturating_sub(1),
            terms: raw,
        }
    }

    /// Translates every family by a vector in the target.
    pub fn translated(&self, v: &[Rat]) -> SphereChain {
        let terms = self
            .terms
            .iter()
            .map(|(c, g)| {
                let pieces = g
                    .pieces
                    .iter()
                    .map(|(k, ps)| {
                        (
                            k.clone(),
                            ps.iter()
                                .map(|p| SpherePiece {
                                    region: p.region.clone(),
                                    map: p.map.translated(v),
                                })
                                .collect(),
                        )
                    })
                    .collect();
                (
                    *c,
                    SphereGenerator {
                        base: g.base.clone(),
                        pieces,
                    },
                )
            })
            .collect();
        SphereChain {
            target: self.target,
            sphere_dim: self.sphere_dim,
            margin: self.margin.clone(),
            degree: self.degree,
            terms,
        }
    }

    /// Multiplies every coefficient.
    pub fn scaled(&self, k: i64) -> SphereChain {
        let mut out = self.clone();
        if k == 0 {
            out.terms.clear();
        } else {
            for (c, _) in &mut out.terms {
                *c *= k;
            }
        }
        out
    }

    /// The formal sum of two chains of matching shape.
    pub fn add(&self, other: &SphereChain) -> Result<SphereChain> {
        if self.target != other.target || self.sphere_dim != other.sphere_dim {
            return Err(Error::invalid("cannot add sphere chains of different shapes"));
        }
        if !self.is_zero() && !other.is_zero() && self.degree != other.degree {
            return Err(Error::invalid("cannot add sphere chains of different degrees"));
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Ok(SphereChain {
            target: self.target,
            sphere_dim: self.sphere_dim,
            margin: self.margin.clone().min(other.margin.clone()),
            degree: if self.is_zero() { other.degree } else { self.degree },
            terms,
        })
    }
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

/// The single constant family at a point of the target.
pub fn constant_sphere(target: Target, sphere_dim: usize, point: Vect) -> Result<SphereChain> {
    if point.len() != target.ambient_dim() {
        return Err(Error::invalid("basepoint dimension does not match the target"));
    }
    let base = crate::complex::point("k");
    let key = CellKey::atom("k");
    let piece = SpherePiece {
        region: cube_poly(sphere_dim),
        map: AffineMap::constant(sphere_dim, point),
    };
    let mut pieces = BTreeMap::new();
    pieces.insert(key, vec![piece]);
    SphereChain::new(target, sphere_dim, rat(1, 2), 0, vec![(1, SphereGenerator { base, pieces })])
}

/// The family of constant spheres over the cells of a chain: every fiber is the
/// constant sphere at the chain's value.
pub fn constant_family(sphere_dim: usize, c: &Chain) -> Result<SphereChain> {
    let mut terms = Vec::new();
    for (coeff, gen) in c.terms() {
        let mut pieces = BTreeMap::new();
        for cell in gen.complex.cells() {
            let m = gen.map_of(&cell.key);
            pieces.insert(
                cell.key.clone(),
                vec![SpherePiece {
                    region: cell.poly.product(&cube_poly(sphere_dim)),
                    map: pad_cols(m, 0, sphere_dim),
                }],
            );
        }
        terms.push((
            *coeff,
            SphereGenerator {
                base: gen.complex.clone(),
                pieces,
            },
        ));
    }
    SphereChain::new(c.target(), sphere_dim, rat(1, 2), c.degree(), terms)
}

/// The family of loops based along a chain, each winding by the lattice vector
/// `w`: constant on the collars, winding linearly across the core interval.
pub fn winding_family(c: &Chain, w: &[i64]) -> Result<SphereChain> {
    let dt = c.target().ambient_dim();
    if w.len() != dt {
        return Err(Error::invalid("winding vector dimension does not match the target"));
    }
    if w.iter().any(|&k| k != 0) && !c.target().is_torus() {
        return Err(Error::invalid("nonzero windings need a torus target"));
    }
    let wvec: Vect = w.iter().map(|&k| rat_int(k)).collect();
    let half_w: Vect = wvec.iter().map(|x| x / rat_int(2)).collect();
    let mut terms = Vec::new();
    for (coeff, gen) in c.terms() {
        let mut pieces = BTreeMap::new();
        for cell in gen.complex.cells() {
            let b = cell.poly.dim();
            let m = gen.map_of(&cell.key);
            let lo = cell.poly.product(&Polytope::segment(rat_int(-1), rat(-1, 2)));
            let mid = cell.poly.product(&Polytope::segment(rat(-1, 2), rat(1, 2)));
            let hi = cell.poly.product(&Polytope::segment(rat(1, 2), rat_int(1)));
            let flat = pad_cols(m, 0, 1);
            let mut rows = Vec::with_capacity(dt);
            for (j, row) in m.a.rows().iter().enumerate() {
                let mut r = row.clone();
                r.push(wvec[j].clone());
                rows.push(r);
            }
            let ramp = AffineMap::new(
                Matrix::from_rows_with_cols(rows, b + 1),
                add(&m.b, &half_w),
            );
            let shifted = flat.translated(&wvec);
            pieces.insert(
                cell.key.clone(),
                vec![
                    SpherePiece { region: lo, map: flat },
                    SpherePiece { region: mid, map: ramp },
                    SpherePiece { region: hi, map: shifted },
                ],
            );
        }
        terms.push((
            *coeff,
            SphereGenerator {
                base: gen.complex.clone(),
                pieces,
            },
        ));
    }
    SphereChain::new(c.target(), 1, rat(1, 2), c.degree(), terms)
}

/// A single based loop with the given basepoint and winding vector.
pub fn winding_loop(target: Target, basepoint: Vect, w: &[i64]) -> Result<SphereChain> {
    if basepoint.len() != target.ambient_dim() {
        return Err(Error::invalid("basepoint dimension does not match the target"));
    }
    let base = crate::complex::point("k");
    let key = CellKey::atom("k");
    let m = AffineMap::constant(0, basepoint);
    let mut maps = BTreeMap::new();
    maps.insert(key, m);
    let c = Chain::new(target, 0, vec![(1, ChainGenerator::new(base, maps))]);
    winding_family(&c, w)
}

// ---------------------------------------------------------------------------
// Classes
// ---------------------------------------------------------------------------

/// The complete invariant of a sphere chain over a torus: for each lattice
/// winding label of the fiber loops, the winding class of the basepoint
/// evaluation of the matching components.  Spheres of dimension at least two
/// carry the empty label, since every such fiber is contractible over a torus.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SphereClass {
    pub sphere_dim: usize,
    pub degree: usize,
    pub labels: BTreeMap<Vec<i64>, WindingClass>,
}

impl SphereClass {
    pub fn is_zero(&self) -> bool {
        self.labels.is_empty()
    }
}

impl std::fmt::Display for SphereClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.labels.is_empty() {
            return write!(f, "zero");
        }
        let mut first = true;
        for (label, wc) in &self.labels {
            if !first {
                writeln!(f)?;
            }
            first = false;
            let names: Vec<String> = label.iter().map(|k| k.to_string()).collect();
            write!(f, "fiber [{}] : {}", names.join(","), wc)?;
        }
        Ok(())
    }
}

/// Computes the class of a sphere chain over a torus target.
pub fn sphere_class(s: &SphereChain) -> Result<SphereClass> {
    if !s.target().is_torus() {
        return Err(Error::invalid("sphere classes need a torus target"));
    }
    let mut buckets: BTreeMap<Vec<i64>, Vec<(i64, ChainGenerator)>> = BTreeMap::new();
    for (coeff, gen) in s.terms() {
        for comp in gen.base.connected_components() {
            let subcx = gen.base.subcomplex(&comp);
            let sgen = SphereGenerator {
                base: subcx,
                pieces: comp
                    .iter()
                    .map(|k| (k.clone(), gen.pieces[k].clone()))
                    .collect(),
            };
            let label = if s.sphere_dim() == 1 {
                let vkey = sgen
                    .base
                    .cells_of_dim(0)
                    .next()
                    .ok_or_else(|| Error::invalid("sphere family component without a vertex"))?
                    .key
                    .clone();
                let plus = sgen.eval_lift(1, &vkey, 1)?;
                let minus = sgen.eval_lift(1, &vkey, -1)?;
                int_vec(&sub(&plus.b, &minus.b))
                    .ok_or_else(|| Error::invalid("loop winding is not a lattice vector"))?
            } else {
                Vec::new()
            };
            let mut maps = BTreeMap::new();
            for key in sgen.base.keys() {
                maps.insert(key.clone(), sgen.eval_lift(s.sphere_dim(), key, 1)?);
            }
            buckets
                .entry(label)
                .or_default()
                .push((*coeff, ChainGenerator::new(sgen.base.clone(), maps)));
        }
    }
    let mut labels = BTreeMap::new();
    for (label, raw) in buckets {
        let wc = winding_class(&Chain::new(s.target(), s.degree(), raw))?;
        if !wc.is_zero() {
            labels.insert(label, wc);
        }
    }
    Ok(SphereClass {
        sphere_dim: s.sphere_dim(),
        degree: s.degree(),
        labels,
    })
}

// ---------------------------------------------------------------------------
// Configuration families
// ---------------------------------------------------------------------------

/// A family of disc configurations over a corner complex of dimension at most
/// one, interpolating affinely between the configurations pinned at vertices.
/// Validity along every edge is certified by exact quadratic minimisation of
/// the pairwise gaps and the boundary clearances.
#[derive(Clone, Debug)]
pub struct ConfigurationChain {
    dimension: usize,
    size: usize,
    base: CornerComplex,
    configs: BTreeMap<CellKey, DiscConfiguration>,
}

/// Interpolated disc data over one cell: affine center and radius maps.
struct DiscData {
    center: AffineMap,
    radius: AffineMap,
}

/// A quadratic `a t^2 + b t + c` with exact rational coefficients.
struct Quad {
    a: Rat,
    b: Rat,
    c: Rat,
}

impl Quad {
    fn eval(&self, t: &Rat) -> Rat {
        (&self.a * t + &self.b) * t + &self.c
    }

    /// Exact minimum over the closed interval `[t0, t1]`.
    fn min_on(&self, t0: &Rat, t1: &Rat) -> Rat {
        let mut m = self.eval(t0).min(self.eval(t1));
        if self.a > Rat::zero() {
            let tstar = -&self.b / (rat_int(2) * &self.a);
            if &tstar > t0 && &tstar < t1 {
                m = m.min(self.eval(&tstar));
            }
        }
        m
    }

    fn sub(&self, other: &Quad) -> Quad {
        Quad {
            a: &self.a - &other.a,
            b: &self.b - &other.b,
            c: &self.c - &other.c,
        }
    }
}

/// `|u + t v|^2` as a quadratic in `t`.
fn norm2_quad(u: &[Rat], v: &[Rat]) -> Quad {
    Quad {
        a: dot(v, v),
        b: rat_int(2) * dot(u, v),
        c: dot(u, u),
    }
}

/// `(c0 + c1 t)^2` as a quadratic in `t`.
fn square_affine(c0: &Rat, c1: &Rat) -> Quad {
    Quad {
        a: c1 * c1,
        b: rat_int(2) * c0 * c1,
        c: c0 * c0,
    }
}

impl ConfigurationChain {
    /// A constant configuration over a point.
    pub fn constant(cfg: &DiscConfiguration) -> Result<ConfigurationChain> {
        cfg.validate()?;
        let base = crate::complex::point("cfg");
        let mut configs = BTreeMap::new();
        configs.insert(CellKey::atom("cfg"), cfg.clone());
        Ok(ConfigurationChain {
            dimension: cfg.dimension(),
            size: cfg.len(),
            base,
            configs,
        })
    }

    /// A path of configurations: segment `m` interpolates affinely between the
    /// configurations at its endpoints.
    pub fn path(configs: &[DiscConfiguration]) -> Result<ConfigurationChain> {
        if configs.len() < 2 {
            return Err(Error::invalid("a configuration path needs at least two stops"));
        }
        let dimension = configs[0].dimension();
        let size = configs[0].len();
        for cfg in configs {
            cfg.validate()?;
            if cfg.dimension() != dimension || cfg.len() != size {
                return Err(Error::invalid("configuration stops have mismatched shapes"));
            }
        }
        let mut cx = CornerComplex::new();
        let mut pinned = BTreeMap::new();
        for (m, cfg) in configs.iter().enumerate() {
            let v = CellKey::atom(format!("t{m}"));
            cx.add_cell(Cell::new(v.clone(), Polytope::point(), 1));
            pinned.insert(v, cfg.clone());
        }
        for m in 0..configs.len() - 1 {
            let e = CellKey::atom(format!("e{m}"));
            cx.add_cell(Cell::new(
                e.clone(),
                Polytope::segment(rat_int(m as i64), rat_int(m as i64 + 1)),
                1,
            ));
            cx.add_attachment(Attachment {
                parent: e.clone(),
                child: CellKey::atom(format!("t{m}")),
                map: AffineMap::constant(0, vec![rat_int(m as i64)]),
            });
            cx.add_attachment(Attachment {
                parent: e,
                child: CellKey::atom(format!("t{}", m + 1)),
                map: AffineMap::constant(0, vec![rat_int(m as i64 + 1)]),
            });
        }
        let out = ConfigurationChain {
            dimension,
            size,
            base: cx,
            configs: pinned,
        };
        out.validate()?;
        Ok(out)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn base(&self) -> &CornerComplex {
        &self.base
    }

    pub fn degree(&self) -> usize {
        self.base.dim().unwrap_or(0)
    }

    /// Affine center and radius maps for every disc over one cell.
    fn disc_data(&self, key: &CellKey) -> Result<Vec<DiscData>> {
        let cell = self.base.cell(key);
        match cell.poly.dim() {
            0 => {
                let cfg = self
                    .configs
                    .get(key)
                    .ok_or_else(|| Error::invalid(format!("no configuration at vertex {key}")))?;
                Ok(cfg
                    .discs()
                    .iter()
                    .map(|disc| DiscData {
                        center: AffineMap::constant(0, disc.center().to_vec()),
                        radius: AffineMap::constant(0, vec![disc.radius().clone()]),
                    })
                    .collect())
            }
            1 => {
                let mut stops: Vec<(Rat, &DiscConfiguration)> = Vec::new();
                for att in self.base.attachments_of_parent(key) {
                    let cfg = self.configs.get(&att.child).ok_or_else(|| {
                        Error::invalid(format!("no configuration at vertex {}", att.child))
                    })?;
                    stops.push((att.map.b[0].clone(), cfg));
                }
                stops.sort_by(|a, b| a.0.cmp(&b.0));
                if stops.len() != 2 || stops[0].0 == stops[1].0 {
                    return Err(Error::invalid(format!(
                        "edge {key} does not have two distinct pinned endpoints"
                    )));
                }
                let (t0, c0) = (&stops[0].0, stops[0].1);
                let (t1, c1) = (&stops[1].0, stops[1].1);
                let span = t1 - t0;
                let mut out = Vec::new();
                for i in 0..self.size {
                    let d0 = &c0.discs()[i];
                    let d1 = &c1.discs()[i];
                    let rows: Vec<Vec<Rat>> = d0
                        .center()
                        .iter()
                        .zip(d1.center())
                        .map(|(a, b)| vec![(b - a) / &span])
                        .collect();
                    let off: Vect = d0
                        .center()
                        .iter()
                        .zip(rows.iter())
                        .map(|(a, row)| a - &row[0] * t0)
                        .collect();
                    let rslope = (d1.radius() - d0.radius()) / &span;
                    let roff = d0.radius() - &rslope * t0;
                    out.push(DiscData {
                        center: AffineMap::new(
                            Matrix::from_rows_with_cols(rows, 1),
                            off,
                        ),
                        radius: AffineMap::new(
                            Matrix::from_rows_with_cols(vec![vec![rslope]], 1),
                            vec![roff],
                        ),
                    });
                }
                Ok(out)
            }
            _ => Err(Error::unsupported(
                "configuration families over cells of dimension two or more",
            )),
        }
    }

    /// Certifies validity of every interpolated configuration: radii in `(0,1)`,
    /// closed discs inside the unit disc, and pairwise disjoint closed discs,
    /// all by exact quadratic minimisation along each edge.
    pub fn validate(&self) -> Result<()> {
        if self.base.dim().unwrap_or(0) > 1 {
            return Err(Error::unsupported(
                "configuration families over complexes of dimension two or more",
            ));
        }
        for cell in self.base.cells() {
            if cell.poly.dim() == 0 {
                let cfg = self
                    .configs
                    .get(&cell.key)
                    .ok_or_else(|| Error::invalid(format!("no configuration at vertex {}", cell.key)))?;
                if cfg.dimension() != self.dimension || cfg.len() != self.size {
                    return Err(Error::invalid(format!(
                        "configuration at vertex {} has the wrong shape",
                        cell.key
                    )));
                }
                cfg.validate()?;
                continue;
            }
            let dd = self.disc_data(&cell.key)?;
            let t0 = cell.poly.verts()[0][0].clone();
            let t1 = cell.poly.verts()[1][0].clone();
            let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
            for (i, disc) in dd.iter().enumerate() {
                let rs = &disc.radius.a.row(0)[0];
                let ro = &disc.radius.b[0];
                let r_at0 = ro + rs * &t0;
                let r_at1 = ro + rs * &t1;
                if r_at0 <= Rat::zero()
                    || r_at1 <= Rat::zero()
                    || r_at0 >= Rat::one()
                    || r_at1 >= Rat::one()
                {
                    return Err(Error::invalid(format!(
                        "disc {i} radius leaves (0,1) along edge {}",
                        cell.key
                    )));
                }
                let u: Vect = disc.center.b.clone();
                let v: Vect = disc.center.a.col(0);
                let clearance = square_affine(&(Rat::one() - ro), &-rs).sub(&norm2_quad(&u, &v));
                if clearance.min_on(&t0, &t1) < Rat::zero() {
                    return Err(Error::invalid(format!(
                        "disc {i} leaves the unit disc along edge {}",
                        cell.key
                    )));
                }
            }
            for i in 0..dd.len() {
                for j in i + 1..dd.len() {
                    let du = sub(&dd[i].center.b, &dd[j].center.b);
                    let dv = sub(&dd[i].center.a.col(0), &dd[j].center.a.col(0));
                    let so = &dd[i].radius.b[0] + &dd[j].radius.b[0];
                    let ss = &dd[i].radius.a.row(0)[0] + &dd[j].radius.a.row(0)[0];
                    let gap = norm2_quad(&du, &dv).sub(&square_affine(&so, &ss));
                    if gap.min_on(&t0, &t1) <= Rat::zero() {
                        return Err(Error::invalid(format!(
                            "discs {i} and {j} meet along edge {}",
                            cell.key
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// The action
// ---------------------------------------------------------------------------

/// The locus where all basepoint evaluations agree, with chart projections to
/// every input and the common evaluation lift.
struct Locus {
    complex: CornerComplex,
    evmaps: BTreeMap<CellKey, AffineMap>,
    factors: Vec<BTreeMap<CellKey, (CellKey, AffineMap)>>,
}

fn locus_fold(target: Target, d: usize, gens: &[&SphereGenerator]) -> Result<Locus> {
    let first = gens[0];
    let mut evmaps = BTreeMap::new();
    let mut fac0 = BTreeMap::new();
    for cell in first.base.cells() {
        evmaps.insert(cell.key.clone(), first.eval_lift(d, &cell.key, 1)?);
        fac0.insert(
            cell.key.clone(),
            (cell.key.clone(), AffineMap::identity(cell.poly.dim())),
        );
    }
    let mut locus = Locus {
        complex: first.base.clone(),
        evmaps,
        factors: vec![fac0],
    };
    for g in &gens[1..] {
        if locus.complex.is_empty() {
            locus.factors.push(BTreeMap::new());
            continue;
        }
        let mut right = BTreeMap::new();
        for cell in g.base.cells() {
            right.insert(cell.key.clone(), g.eval_lift(d, &cell.key, 1)?);
        }
        let ga = ChainGenerator::new(locus.complex.clone(), locus.evmaps.clone());
        let gb = ChainGenerator::new(g.base.clone(), right);
        let fib = fiber_product(target, &ga, &gb)?;
        let mut next: Vec<BTreeMap<CellKey, (CellKey, AffineMap)>> =
            vec![BTreeMap::new(); locus.factors.len() + 1];
        for (k, (lk, lmap)) in &fib.left_source {
            for (fi, fmap) in locus.factors.iter().enumerate() {
                let (src, smap) = &fmap[lk];
                next[fi].insert(k.clone(), (src.clone(), smap.compose(lmap)));
            }
        }
        let last = locus.factors.len();
        for (k, rs) in &fib.right_source {
            next[last].insert(k.clone(), rs.clone());
        }
        locus = Locus {
            complex: fib.complex,
            evmaps: fib.maps,
            factors: next,
        };
    }
    Ok(locus)
}

fn split_all(chunks: Vec<Polytope>, h: &Halfspace) -> Vec<Polytope> {
    let mut out = Vec::new();
    for c in chunks {
        let mut strict_pos = false;
        let mut strict_neg = false;
        for v in c.verts() {
            let e = h.eval(v);
            if e > Rat::zero() {
                strict_pos = true;
            } else if e < Rat::zero() {
                strict_neg = true;
            }
        }
        if !(strict_pos && strict_neg) {
            out.push(c);
            continue;
        }
        let (lo, hi) = c.split(h);
        if let Some(p) = lo {
            out.push(p);
        }
        if let Some(p) = hi {
            out.push(p);
        }
    }
    out
}

/// Applies a configuration family to a tuple of sphere chains.
///
/// Over each product cell the sphere maps of the inputs are rescaled into the
/// moving disc boxes wherever the basepoint evaluations agree, and the
/// complement of the boxes carries the common basepoint value.  The output
/// degree is `deg(cfg) + sum of input degrees - (n-1) * dim target`.
pub fn theta(cfg: &ConfigurationChain, inputs: &[SphereChain]) -> Result<SphereChain> {
    let n = inputs.len();
    if n == 0 {
        return Err(Error::unsupported("the disc action needs at least one sphere input"));
    }
    if n != cfg.size() {
        return Err(Error::invalid(format!(
            "configuration of {} discs applied to {} sphere inputs",
            cfg.size(),
            n
        )));
    }
    let d = cfg.dimension();
    let target = inputs[0].target();
    for s in inputs {
        if s.target() != target {
            return Err(Error::invalid("sphere inputs have mismatched targets"));
        }
        if s.sphere_dim() != d {
            return Err(Error::invalid("sphere inputs do not match the disc dimension"));
        }
    }
    cfg.validate()?;
    let dt = target.ambient_dim();
    let eff_shrink: Vec<Rat> = inputs
        .iter()
        .map(|s| Rat::one() - s.margin())
        .collect();

    // Box certificates and the output collar margin, from exact endpoint data.
    let mut reach = Rat::zero();
    let mut disc_cache: BTreeMap<CellKey, Vec<DiscData>> = BTreeMap::new();
    for cell in cfg.base().cells() {
        let dd = cfg.disc_data(&cell.key)?;
        for v in cell.poly.verts() {
            for (i, disc) in dd.iter().enumerate() {
                let r = disc.radius.apply(v)[0].clone();
                let reff = &r * &eff_shrink[i];
                for p in disc.center.apply(v) {
                    let t = p.abs() + &reff;
                    if t > reach {
                        reach = t;
                    }
                }
            }
        }
        for i in 0..dd.len() {
            for j in i + 1..dd.len() {
                let mut separated = false;
                'coords: for axis in 0..d {
                    for sign in [1i64, -1] {
                        let ok = cell.poly.verts().iter().all(|v| {
                            let pi = disc_axis(&dd[i], axis, v);
                            let pj = disc_axis(&dd[j], axis, v);
                            let ri = dd[i].radius.apply(v)[0].clone() * &eff_shrink[i];
                            let rj = dd[j].radius.apply(v)[0].clone() * &eff_shrink[j];
                            rat_int(sign) * (pi - pj) > ri + rj
                        });
                        if ok {
                            separated = true;
                            break 'coords;
                        }
                    }
                }
                if !separated {
                    return Err(Error::unsupported(format!(
                        "no coordinate separates the boxes of discs {i} and {j} over cell {}",
                        cell.key
                    )));
                }
            }
        }
        disc_cache.insert(cell.key.clone(), dd);
    }
    if reach >= Rat::one() {
        return Err(Error::unsupported(
            "disc boxes reach the boundary of the cube",
        ));
    }
    let w_out = Rat::one() - reach;

    let formula =
        cfg.degree() as i64 + inputs.iter().map(|s| s.degree() as i64).sum::<i64>()
            - (n as i64 - 1) * dt as i64;
    let degree_out = formula.max(0) as usize;

    let mut out_terms: Vec<(i64, SphereGenerator)> = Vec::new();
    for combo in inputs
        .iter()
        .map(|s| s.terms().iter())
        .multi_cartesian_product()
    {
        let coeff: i64 = combo.iter().map(|(c, _)| *c).product();
        let gens: Vec<&SphereGenerator> = combo.iter().map(|(_, g)| g).collect();
        let locus = locus_fold(target, d, &gens)?;
        if locus.complex.is_empty() {
            continue;
        }
        let base = cfg.base().product(&locus.complex);
        let mut pieces: BTreeMap<CellKey, Vec<SpherePiece>> = BTreeMap::new();
        for ccell in cfg.base().cells() {
            let bc = ccell.poly.dim();
            let dd = &disc_cache[&ccell.key];
            for lcell in locus.complex.cells() {
                let bl = lcell.poly.dim();
                let joint = bc + bl + d;
                let key = CellKey::pair(&ccell.key, &lcell.key);
                let evm = &locus.evmaps[&lcell.key];
                let outside = pad_cols(evm, bc, d);
                let centroid_l = lcell.poly.centroid();

                struct DiscLocal<'a> {
                    subst: AffineMap,
                    delta: Vect,
                    facets: Vec<Halfspace>,
                    source: &'a Vec<SpherePiece>,
                    center: AffineMap,
                    wind: Vect,
                }
                let mut locals: Vec<DiscLocal> = Vec::new();
                for (i, disc) in dd.iter().enumerate() {
                    if bc > 0 && !disc.radius.a.col(0).iter().all(Zero::is_zero) {
                        return Err(Error::unsupported(
                            "varying disc radii over a positive-dimensional configuration cell",
                        ));
                    }
                    let r = disc.radius.b[0].clone();
                    let reff = &r * &eff_shrink[i];
                    let (lam, proj) = &locus.factors[i][&lcell.key];
                    let source = &gens[i].pieces[lam];
                    // Substitution (x_c, x_l, y) -> (proj(x_l), (y - p(x_c)) / r).
                    let xpart = pad_cols(proj, bc, d);
                    let mut rows = xpart.a.rows().to_vec();
                    let mut off = xpart.b.clone();
                    for j in 0..d {
                        let mut row = vec![Rat::zero(); joint];
                        for (col, a) in disc.center.a.row(j).iter().enumerate() {
                            row[col] = -a / &r;
                        }
                        row[bc + bl + j] = Rat::one() / &r;
                        rows.push(row);
                        off.push(-&disc.center.b[j] / &r);
                    }
                    let subst = AffineMap::new(Matrix::from_rows_with_cols(rows, joint), off);
                    let ehat = gens[i].eval_lift(d, lam, 1)?;
                    let delta = sub(
                        &evm.apply(&centroid_l),
                        &ehat.apply(&proj.apply(&centroid_l)),
                    );
                    let lattice = match target {
                        Target::Torus(_) => delta.iter().all(is_integral),
                        Target::Euclid(_) => delta.iter().all(Zero::is_zero),
                    };
                    if !lattice {
                        return Err(Error::invalid(
                            "basepoint lifts differ by a non-lattice shift on the locus",
                        ));
                    }
                    // Effective box facets: |y_j - p_j(x_c)| <= r_eff, oriented inward.
                    let mut facets = Vec::with_capacity(2 * d);
                    for j in 0..d {
                        let mut hi = vec![Rat::zero(); joint];
                        let mut lo = vec![Rat::zero(); joint];
                        for (col, a) in disc.center.a.row(j).iter().enumerate() {
                            hi[col] = -a.clone();
                            lo[col] = a.clone();
                        }
                        hi[bc + bl + j] = Rat::one();
                        lo[bc + bl + j] = -Rat::one();
                        facets.push(Halfspace::new(hi, &reff + &disc.center.b[j]));
                        facets.push(Halfspace::new(lo, &reff - &disc.center.b[j]));
                    }
                    let plus = gens[i].eval_lift(d, lam, 1)?;
                    let minus = gens[i].eval_lift(d, lam, -1)?;
                    locals.push(DiscLocal {
                        subst,
                        delta,
                        facets,
                        source,
                        center: disc.center.clone(),
                        wind: sub(&plus.b, &minus.b),
                    });
                }

                // Crossing a disc box along the loop coordinate shifts the
                // affine lift by that input's winding vector.  Anchor the
                // region right of every box at the common evaluation lift and
                // accumulate the shifts of the boxes further right; for
                // spheres of dimension at least two every winding is zero and
                // nothing moves.
                let any_wind = locals.iter().any(|dl| dl.wind.iter().any(|x| !x.is_zero()));
                if any_wind {
                    let positions: Vec<Rat> = locals
                        .iter()
                        .map(|dl| dl.center.apply(&ccell.poly.centroid())[0].clone())
                        .collect();
                    let winds: Vec<Vect> = locals.iter().map(|dl| dl.wind.clone()).collect();
                    for (i, dl) in locals.iter_mut().enumerate() {
                        let mut cum = zero_vect(dt);
                        for (j, w) in winds.iter().enumerate() {
                            if j != i && positions[j] > positions[i] {
                                cum = add(&cum, w);
                            }
                        }
                        dl.delta = sub(&dl.delta, &cum);
                    }
                }

                let full = ccell.poly.product(&lcell.poly).product(&cube_poly(d));
                let mut chunks = vec![full];
                for dl in &locals {
                    for h in &dl.facets {
                        chunks = split_all(chunks, h);
                    }
                }
                let mut cell_pieces = Vec::new();
                for chunk in chunks {
                    let cen = chunk.centroid();
                    let inside = locals
                        .iter()
                        .position(|dl| dl.facets.iter().all(|h| h.eval(&cen) < Rat::zero()));
                    match inside {
                        None => {
                            let mut map = outside.clone();
                            if any_wind {
                                let mut shift = zero_vect(dt);
                                for dl in &locals {
                                    let p = dl.center.apply(&cen[..bc])[0].clone();
                                    if p > cen[bc + bl] {
                                        shift = add(&shift, &dl.wind);
                                    }
                                }
                                let neg: Vect = shift.iter().map(|x| -x).collect();
                                map = map.translated(&neg);
                            }
                            cell_pieces.push(SpherePiece { region: chunk, map });
                        }
                        Some(i) => {
                            let dl = &locals[i];
                            let mut subchunks = vec![chunk];
                            for piece in dl.source {
                                for h in piece.region.hrep() {
                                    let pb = pullback_halfspace(h, &dl.subst);
                                    if pb.normal.iter().all(Zero::is_zero) {
                                        continue;
                                    }
                                    subchunks = split_all(subchunks, &pb);
                                }
                            }
                            for sc in subchunks {
                                let z = dl.subst.apply(&sc.centroid());
                                let piece = dl
                                    .source
                                    .iter()
                                    .find(|p| p.region.contains(&z))
                                    .ok_or_else(|| {
                                        Error::invalid(
                                            "rescaled point escapes the input sphere pieces",
                                        )
                                    })?;
                                cell_pieces.push(SpherePiece {
                                    region: sc,
                                    map: piece.map.compose(&dl.subst).translated(&dl.delta),
                                });
                            }
                        }
                    }
                }
                pieces.insert(key, cell_pieces);
            }
        }
        out_terms.push((coeff, SphereGenerator { base, pieces }));
    }
    if out_terms.is_empty() {
        return Ok(SphereChain::zero(target, d, degree_out));
    }
    let out = SphereChain::new(target, d, w_out, degree_out, out_terms);
    out
}

fn disc_axis(disc: &DiscData, axis: usize, v: &[Rat]) -> Rat {
    disc.center.apply(v)[axis].clone()
}

// ---------------------------------------------------------------------------
// Loop product and bracket
// ---------------------------------------------------------------------------

const PERTURBATION_PRIMES: [i64; 8] = [7, 11, 13, 17, 19, 23, 29, 31];

/// The loop product: the two-disc action at the fixed configuration with
/// centers `-1/2` and `1/2` and radii `1/4`.  When the basepoint evaluations
/// fail to meet transversally, the second factor is translated by a small
/// deterministic rational vector, which does not change its class.
///
/// On an odd-dimensional target the bare construction makes the family of
/// constant loops a left unit but only a right unit up to a degree sign, so
/// each product is normalized by `(-1)^{D n (m+1)}` for factor degrees `m`,
/// `n` and target dimension `D` — the same minimal correction as for the
/// intersection product, restoring the two-sided unit law.
pub fn loop_product(a: &SphereChain, b: &SphereChain) -> Result<SphereChain> {
    if a.sphere_dim() != 1 || b.sphere_dim() != 1 {
        return Err(Error::invalid("the loop product acts on circle families"));
    }
    let dt = a.target().ambient_dim();
    let unit_sign: i64 = if dt % 2 == 1 && b.degree() % 2 == 1 && a.degree() % 2 == 0 {
        -1
    } else {
        1
    };
    let cfg = DiscConfiguration::new(
        1,
        vec![
            LittleDisc::new(vec![rat(-1, 2)], rat(1, 4)),
            LittleDisc::new(vec![rat(1, 2)], rat(1, 4)),
        ],
    );
    let cc = ConfigurationChain::constant(&cfg)?;
    match theta(&cc, &[a.clone(), b.clone()]) {
        Err(Error::NotTransversal(_)) => {
            for p in PERTURBATION_PRIMES {
                let mut shift = Vec::with_capacity(dt);
                let mut denom = Rat::one();
                for _ in 0..dt {
                    denom = denom * rat_int(p);
                    shift.push(Rat::one() / denom.clone());
                }
                match theta(&cc, &[a.clone(), b.translated(&shift)]) {
                    Err(Error::NotTransversal(_)) => continue,
                    other => return other.map(|s| s.scaled(unit_sign)),
                }
            }
            Err(Error::unsupported(
                "no deterministic perturbation made the loop evaluations transversal",
            ))
        }
        other => other.map(|s| s.scaled(unit_sign)),
    }
}

/// The degree-two bracket: the two discs make a half turn around each other
/// along a three-edge polygonal path, and the two halves (with the inputs in
/// both orders) close up into a cycle of configurations acting on the pair.
pub fn bracket_d2(a: &SphereChain, b: &SphereChain) -> Result<SphereChain> {
    if a.sphere_dim() != 2 || b.sphere_dim() != 2 {
        return Err(Error::invalid("the bracket acts on two-sphere families"));
    }
    let stops: [(Rat, Rat); 4] = [
        (rat_int(1), rat_int(0)),
        (rat(3, 5), rat(4, 5)),
        (rat(-3, 5), rat(4, 5)),
        (rat_int(-1), rat_int(0)),
    ];
    let radius = rat(1, 8);
    let scale = rat(1, 4);
    let configs: Vec<DiscConfiguration> = stops
        .iter()
        .map(|(x, y)| {
            let c = vec![x * &scale, y * &scale];
            let m = vec![-&c[0], -&c[1]];
            DiscConfiguration::new(
                2,
                vec![
                    LittleDisc::new(c, radius.clone()),
                    LittleDisc::new(m, radius.clone()),
                ],
            )
        })
        .collect();
    let path = ConfigurationChain::path(&configs)?;
    let half_ab = theta(&path, &[a.clone(), b.clone()])?;
    let half_ba = theta(&path, &[b.clone(), a.clone()])?;
    half_ab.add(&half_ba)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::torus_fundamental_chain;

    #[test]
    fn constant_sphere_class_is_a_point() {
        let s = constant_sphere(Target::Torus(1), 1, vec![rat(1, 3)]).unwrap();
        let class = sphere_class(&s).unwrap();
        assert_eq!(class.labels.len(), 1);
        let wc = &class.labels[&vec![0]];
        assert_eq!(wc.coords[&Vec::new()], Rat::one());
    }

    #[test]
    fn winding_loop_carries_its_label() {
        let s = winding_loop(Target::Torus(2), vec![rat(1, 7), rat(2, 7)], &[3, -1]).unwrap();
        let class = sphere_class(&s).unwrap();
        assert_eq!(class.labels.len(), 1);
        assert!(class.labels.contains_key(&vec![3, -1]));
    }

    #[test]
    fn winding_family_evaluates_to_its_chain() {
        let c = torus_fundamental_chain(1);
        let s = winding_family(&c, &[2]).unwrap();
        let ev = s.evaluation().unwrap();
        assert!(ev.add(&c.scaled(-1)).unwrap().is_zero());
    }

    fn beta(w: i64) -> SphereChain {
        winding_family(&torus_fundamental_chain(1), &[w]).unwrap()
    }

    fn alpha(w: i64, num: i64, den: i64) -> SphereChain {
        winding_loop(Target::Torus(1), vec![rat(num, den)], &[w]).unwrap()
    }

    #[test]
    fn reparameterization_preserves_the_class() {
        let cfg = ConfigurationChain::constant(&DiscConfiguration::new(
            1,
            vec![LittleDisc::new(vec![rat(0, 1)], rat(1, 2))],
        ))
        .unwrap();
        let a = alpha(2, 1, 7);
        let out = theta(&cfg, &[a.clone()]).unwrap();
        assert_eq!(out.degree(), 0);
        assert_eq!(sphere_class(&out).unwrap(), sphere_class(&a).unwrap());
    }

    #[test]
    fn loop_product_adds_windings() {
        for (wa, wb) in [(0i64, 0i64), (0, 1), (1, 0), (1, 2), (-1, 2)] {
            let prod = loop_product(&beta(wa), &beta(wb)).unwrap();
            assert_eq!(prod.degree(), 1, "beta({wa}) * beta({wb})");
            assert_eq!(
                sphere_class(&prod).unwrap(),
                sphere_class(&beta(wa + wb)).unwrap(),
                "beta({wa}) * beta({wb})"
            );
        }
    }

    #[test]
    fn loop_product_translates_point_classes() {
        for (wa, wb) in [(0i64, 1i64), (1, 2)] {
            let expected = sphere_class(&alpha(wa + wb, 1, 7)).unwrap();
            let left = loop_product(&alpha(wa, 1, 7), &beta(wb)).unwrap();
            let right = loop_product(&beta(wb), &alpha(wa, 1, 7)).unwrap();
            assert_eq!(left.degree(), 0);
            assert_eq!(sphere_class(&left).unwrap(), expected);
            assert_eq!(sphere_class(&right).unwrap(), expected);
        }
    }

    #[test]
    fn loop_product_unit_is_two_sided() {
        for w in [-2i64, 0, 3] {
            let a = alpha(w, 1, 7);
            let cls = sphere_class(&a).unwrap();
            let left = loop_product(&beta(0), &a).unwrap();
            let right = loop_product(&a, &beta(0)).unwrap();
            assert_eq!(sphere_class(&left).unwrap(), cls);
            assert_eq!(sphere_class(&right).unwrap(), cls);
            let b = beta(w);
            let cls = sphere_class(&b).unwrap();
            let left = loop_product(&beta(0), &b).unwrap();
            let right = loop_product(&b, &beta(0)).unwrap();
            assert_eq!(sphere_class(&left).unwrap(), cls);
            assert_eq!(sphere_class(&right).unwrap(), cls);
        }
    }

    #[test]
    fn loop_product_is_associative_on_a_sample() {
        let l = loop_product(&loop_product(&beta(1), &beta(2)).unwrap(), &beta(-1)).unwrap();
        let r = loop_product(&beta(1), &loop_product(&beta(2), &beta(-1)).unwrap()).unwrap();
        let cls = sphere_class(&beta(2)).unwrap();
        assert_eq!(sphere_class(&l).unwrap(), cls);
        assert_eq!(sphere_class(&r).unwrap(), cls);
    }

    #[test]
    fn parallel_point_loops_multiply_to_zero() {
        // Same basepoint: the two evaluations agree identically, and only the
        // deterministic perturbation resolves them -- into disjoint points.
        let p = loop_product(&alpha(1, 1, 7), &alpha(2, 1, 7)).unwrap();
        assert!(p.is_zero());
        // Distinct basepoints: the agreement locus is empty outright.
        let q = loop_product(&alpha(1, 1, 7), &alpha(2, 2, 7)).unwrap();
        assert!(q.is_zero());
    }

    #[test]
    fn evaluation_commutes_with_the_boundary() {
        // A non-closed path in the circle: the interval [0, 1/3] mapped in by
        // the identity chart.
        let cx = crate::complex::segment("e", rat(0, 1), rat(1, 3));
        let mut maps = BTreeMap::new();
        maps.insert(CellKey::atom("e"), AffineMap::identity(1));
        maps.insert(CellKey::atom("e.0"), AffineMap::constant(0, vec![rat(0, 1)]));
        maps.insert(CellKey::atom("e.1"), AffineMap::constant(0, vec![rat(1, 3)]));
        let c = Chain::new(
            Target::Torus(1),
            1,
            vec![(1, ChainGenerator::new(cx, maps))],
        );
        assert!(!c.boundary().is_zero());
        let s = winding_family(&c, &[1]).unwrap();
        let lhs = s.boundary().evaluation().unwrap();
        let rhs = c.boundary();
        assert!(lhs.add(&rhs.scaled(-1)).unwrap().is_zero());
    }

    #[test]
    fn bracket_of_torus_classes_vanishes() {
        let t2 = Target::Torus(2);
        let a = constant_sphere(t2, 2, vec![rat(1, 7), rat(2, 7)]).unwrap();
        let b = constant_sphere(t2, 2, vec![rat(3, 7), rat(5, 7)]).unwrap();
        // Distinct constant spheres never co-evaluate: the bracket collapses
        // to the zero chain outright.
        let ab = bracket_d2(&a, &b).unwrap();
        assert!(ab.is_zero());

        // Against the fundamental family the locus is everything, and the
        // bracket is a nonzero chain in the trivial class.
        let f = constant_family(2, &torus_fundamental_chain(2)).unwrap();
        let af = bracket_d2(&a, &f).unwrap();
        assert_eq!(af.degree(), 1);
        assert!(!af.terms().is_empty());
        assert!(sphere_class(&af).unwrap().is_zero());
        let fa = bracket_d2(&f, &a).unwrap();
        assert!(sphere_class(&fa).unwrap().is_zero());
        let bd = af.boundary();
        assert_eq!(bd.degree(), 0);
        assert!(sphere_class(&bd).unwrap().is_zero());
    }

    fn point_generator(pieces: Vec<SpherePiece>) -> SphereGenerator {
        let mut map = BTreeMap::new();
        map.insert(CellKey::atom("k"), pieces);
        SphereGenerator {
            base: crate::complex::point("k"),
            pieces: map,
        }
    }

    fn expect_invalid(r: Result<SphereChain>, needle: &str) {
        match r {
            Err(Error::Invalid(msg)) => {
                assert!(msg.contains(needle), "message {msg:?} missing {needle:?}")
            }
            other => panic!("expected an invalid-{needle} error, got {other:?}"),
        }
    }

    #[test]
    fn bad_tilings_are_rejected() {
        let t1 = Target::Torus(1);
        let seg = |lo: Rat, hi: Rat| Polytope::segment(lo, hi);
        let flat = |v: Rat| AffineMap::constant(1, vec![v]);

        // Volume deficit.
        let g = point_generator(vec![SpherePiece {
            region: seg(rat(-1, 1), rat(1, 2)),
            map: flat(rat(0, 1)),
        }]);
        expect_invalid(
            SphereChain::new(t1, 1, rat(1, 4), 0, vec![(1, g)]),
            "do not tile",
        );

        // Correct total volume but overlapping interiors.
        let g = point_generator(vec![
            SpherePiece {
                region: seg(rat(-1, 1), rat(0, 1)),
                map: flat(rat(0, 1)),
            },
            SpherePiece {
                region: seg(rat(-1, 2), rat(1, 2)),
                map: flat(rat(0, 1)),
            },
        ]);
        expect_invalid(
            SphereChain::new(t1, 1, rat(1, 4), 0, vec![(1, g)]),
            "overlap",
        );

        // A jump at an interior junction.
        let g = point_generator(vec![
            SpherePiece {
                region: seg(rat(-1, 1), rat(0, 1)),
                map: flat(rat(0, 1)),
            },
            SpherePiece {
                region: seg(rat(0, 1), rat(1, 1)),
                map: flat(rat(1, 3)),
            },
        ]);
        expect_invalid(
            SphereChain::new(t1, 1, rat(1, 4), 0, vec![(1, g)]),
            "junction",
        );

        // A map varying across the collar at the boundary of the cube.
        let g = point_generator(vec![SpherePiece {
            region: seg(rat(-1, 1), rat(1, 1)),
            map: AffineMap::identity(1),
        }]);
        expect_invalid(
            SphereChain::new(t1, 1, rat(1, 4), 0, vec![(1, g)]),
            "collar",
        );

        // A loop that fails to close up over a Euclidean target.
        let ramp = AffineMap {
            a: crate::linalg::Matrix::from_rows(vec![vec![rat(1, 1)]]),
            b: vec![rat(1, 2)],
        };
        let g = point_generator(vec![
            SpherePiece {
                region: seg(rat(-1, 1), rat(-1, 2)),
                map: flat(rat(0, 1)),
            },
            SpherePiece {
                region: seg(rat(-1, 2), rat(1, 2)),
                map: ramp,
            },
            SpherePiece {
                region: seg(rat(1, 2), rat(1, 1)),
                map: flat(rat(1, 1)),
            },
        ]);
        expect_invalid(
            SphereChain::new(Target::Euclid(1), 1, rat(1, 4), 0, vec![(1, g)]),
            "close up",
        );
        // The same pieces close up fine in the circle.
        let g = point_generator(vec![
            SpherePiece {
                region: seg(rat(-1, 1), rat(-1, 2)),
                map: flat(rat(0, 1)),
            },
            SpherePiece {
                region: seg(rat(-1, 2), rat(1, 2)),
                map: AffineMap {
                    a: crate::linalg::Matrix::from_rows(vec![vec![rat(1, 1)]]),
                    b: vec![rat(1, 2)],
                },
            },
            SpherePiece {
                region: seg(rat(1, 2), rat(1, 1)),
                map: flat(rat(1, 1)),
            },
        ]);
        assert!(SphereChain::new(t1, 1, rat(1, 4), 0, vec![(1, g)]).is_ok());
    }

    #[test]
    fn nonzero_windings_need_a_torus() {
        match winding_loop(Target::Euclid(1), vec![rat(0, 1)], &[1]) {
            Err(Error::Invalid(msg)) => assert!(msg.contains("torus")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn colliding_configuration_paths_are_rejected() {
        // Two discs swapping places along the x-axis meet in the middle even
        // though both endpoint configurations are valid.
        let stop = |x: Rat| {
            DiscConfiguration::new(
                2,
                vec![
                    LittleDisc::new(vec![x.clone(), rat(0, 1)], rat(1, 4)),
                    LittleDisc::new(vec![-x, rat(0, 1)], rat(1, 4)),
                ],
            )
        };
        match ConfigurationChain::path(&[stop(rat(-1, 2)), stop(rat(1, 2))]) {
            Err(Error::Invalid(msg)) => assert!(msg.contains("meet"), "{msg}"),
            other => panic!("expected a collision error, got {other:?}"),
        }
    }
}
