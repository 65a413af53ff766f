//! Oriented polytopal cell complexes with corner structure.
//!
//! A complex is a set of cells, each a full-dimensional rational polytope in its own
//! chart with a designated frame and an orientation sign, glued by explicit affine
//! facet attachments. The same child cell may attach to a parent along several
//! different maps (self-gluing), which is what makes quotient models like tori
//! expressible. Corner depth, strata and boundary sheets are derived from the
//! attachment combinatorics; products, reversal and quotients preserve the exact
//! structure cell by cell.

mod boundary;
mod build;
mod routes;
#[cfg(test)]
mod tests;
mod validate;

pub use boundary::BoundaryComponent;
pub use build::{
    boundary_of_top, circle, circle_n, cube, delta_torus, point, quotient, segment, simplex,
    torus, Identification,
};
pub use routes::CornerData;
pub use validate::ValidationReport;

use crate::geometry::{concat, AffineMap, Polytope, Vect};
use crate::scalar::Rat;
use crate::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

/// Structured cell identity.
///
/// Derived constructions (products, fiber cells, refinement pieces) build their keys
/// from the keys of the inputs, so independently computed constructions that must agree
/// cell-for-cell produce literally equal complexes.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum CellKey {
    /// A named cell of a hand-built or parsed complex.
    Atom(String),
    /// A product cell.
    Pair(Arc<CellKey>, Arc<CellKey>),
    /// A cell of a fiber construction: a pair of source cells and an integer translate.
    Fiber(Arc<CellKey>, Arc<CellKey>, Vec<i64>),
    /// A refinement piece of another cell.
    Piece(Arc<CellKey>, u32),
}

impl CellKey {
    pub fn atom(name: impl Into<String>) -> Self {
        CellKey::Atom(name.into())
    }

    pub fn pair(a: &CellKey, b: &CellKey) -> Self {
        CellKey::Pair(Arc::new(a.clone()), Arc::new(b.clone()))
    }

    pub fn fiber(a: &CellKey, b: &CellKey, shift: Vec<i64>) -> Self {
        CellKey::Fiber(Arc::new(a.clone()), Arc::new(b.clone()), shift)
    }

    pub fn piece(a: &CellKey, idx: u32) -> Self {
        CellKey::Piece(Arc::new(a.clone()), idx)
    }
}

impl fmt::Display for CellKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellKey::Atom(s) => write!(f, "{s}"),
            CellKey::Pair(a, b) => write!(f, "({a}*{b})"),
            CellKey::Fiber(a, b, shift) => {
                write!(f, "({a}&{b}@")?;
                for (i, s) in shift.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
            CellKey::Piece(a, i) => write!(f, "{a}#{i}"),
        }
    }
}

/// An oriented cell: a full-dimensional polytope in its own chart, a designated frame
/// (ordered basis of the chart with a base point), and an orientation sign relative to
/// that frame.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Cell {
    pub key: CellKey,
    pub poly: Polytope,
    pub sign: i8,
    pub frame: Vec<Vect>,
    pub base: Vect,
}

impl Cell {
    /// Builds a cell whose frame is derived greedily from the listed vertex order.
    pub fn new(key: CellKey, poly: Polytope, sign: i8) -> Self {
        assert!(sign == 1 || sign == -1, "orientation sign must be ±1");
        let base = poly.verts()[0].clone();
        let dirs: Vec<Vect> = poly.verts()[1..]
            .iter()
            .map(|v| crate::geometry::sub(v, &base))
            .collect();
        let frame = crate::geometry::greedy_independent(&dirs);
        assert_eq!(frame.len(), poly.dim(), "vertices must span the chart");
        Cell {
            key,
            poly,
            sign,
            frame,
            base,
        }
    }

    /// Builds a cell with an explicitly designated frame.
    pub fn with_frame(key: CellKey, poly: Polytope, sign: i8, base: Vect, frame: Vec<Vect>) -> Self {
        assert_eq!(frame.len(), poly.dim());
        Cell {
            key,
            poly,
            sign,
            frame,
            base,
        }
    }

    pub fn dim(&self) -> usize {
        self.poly.dim()
    }

    /// The vertex list sorted lexicographically (used for canonical comparisons).
    pub fn sorted_verts(&self) -> Vec<Vect> {
        let mut v = self.poly.verts().to_vec();
        v.sort_by(|a, b| a.iter().cmp(b.iter()));
        v
    }

    /// Sign of the determinant of the frame as a basis of the chart.
    pub fn frame_det_sign(&self) -> i8 {
        if self.dim() == 0 {
            1
        } else {
            crate::linalg::Matrix::from_cols(self.frame.clone()).det_sign()
        }
    }
}

impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Cell {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key
            .cmp(&other.key)
            .then_with(|| self.poly.cmp(&other.poly))
            .then_with(|| self.sign.cmp(&other.sign))
            .then_with(|| {
                self.frame
                    .iter()
                    .map(Vec::as_slice)
                    .cmp(other.frame.iter().map(Vec::as_slice))
            })
            .then_with(|| self.base.iter().cmp(other.base.iter()))
    }
}

/// A facet attachment: `map` embeds the child's chart into the parent's chart, carrying
/// the child's polytope onto one facet of the parent's polytope.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Attachment {
    pub parent: CellKey,
    pub child: CellKey,
    pub map: AffineMap,
}

/// An oriented polytopal cell complex with corner structure.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct CornerComplex {
    cells: BTreeMap<CellKey, Cell>,
    attachments: BTreeSet<Attachment>,
}

impl CornerComplex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_parts(cells: Vec<Cell>, attachments: Vec<Attachment>) -> Self {
        let mut cx = Self::new();
        for c in cells {
            cx.add_cell(c);
        }
        for a in attachments {
            cx.add_attachment(a);
        }
        cx
    }

    pub fn add_cell(&mut self, cell: Cell) {
        let prev = self.cells.insert(cell.key.clone(), cell);
        assert!(prev.is_none(), "duplicate cell key");
    }

    pub fn add_attachment(&mut self, att: Attachment) {
        self.attachments.insert(att);
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Top dimension; `None` for the empty complex (which is valid in any dimension).
    pub fn dim(&self) -> Option<usize> {
        self.cells.values().map(Cell::dim).max()
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn cell(&self, key: &CellKey) -> &Cell {
        self.cells.get(key).expect("unknown cell key")
    }

    pub fn get_cell(&self, key: &CellKey) -> Option<&Cell> {
        self.cells.get(key)
    }

    pub fn cell_mut(&mut self, key: &CellKey) -> &mut Cell {
        self.cells.get_mut(key).expect("unknown cell key")
    }

    pub fn keys(&self) -> impl Iterator<Item = &CellKey> {
        self.cells.keys()
    }

    pub fn attachments(&self) -> impl Iterator<Item = &Attachment> {
        self.attachments.iter()
    }

    pub fn cells_of_dim(&self, d: usize) -> impl Iterator<Item = &Cell> {
        self.cells.values().filter(move |c| c.dim() == d)
    }

    pub fn top_cells(&self) -> Vec<&Cell> {
        match self.dim() {
            None => vec![],
            Some(n) => self.cells_of_dim(n).collect(),
        }
    }

    pub fn attachments_of_parent<'a>(
        &'a self,
        parent: &'a CellKey,
    ) -> impl Iterator<Item = &'a Attachment> {
        self.attachments.iter().filter(move |a| &a.parent == parent)
    }

    pub fn attachments_of_child<'a>(
        &'a self,
        child: &'a CellKey,
    ) -> impl Iterator<Item = &'a Attachment> {
        self.attachments.iter().filter(move |a| &a.child == child)
    }

    /// The keys of all cells reachable from `seeds` by descending attachments,
    /// including the seeds.
    pub fn closure_of(&self, seeds: &BTreeSet<CellKey>) -> BTreeSet<CellKey> {
        let mut out = seeds.clone();
        let mut frontier: Vec<CellKey> = seeds.iter().cloned().collect();
        while let Some(k) = frontier.pop() {
            for att in self.attachments_of_parent(&k) {
                if out.insert(att.child.clone()) {
                    frontier.push(att.child.clone());
                }
            }
        }
        out
    }

    /// The induced subcomplex on a downward-closed key set.
    pub fn subcomplex(&self, keys: &BTreeSet<CellKey>) -> CornerComplex {
        let cells = keys
            .iter()
            .map(|k| (k.clone(), self.cell(k).clone()))
            .collect();
        let attachments = self
            .attachments
            .iter()
            .filter(|a| keys.contains(&a.parent) && keys.contains(&a.child))
            .cloned()
            .collect();
        CornerComplex {
            cells,
            attachments,
        }
    }

    /// Connected components as key sets, sorted by their smallest key.
    pub fn connected_components(&self) -> Vec<BTreeSet<CellKey>> {
        let keys: Vec<&CellKey> = self.cells.keys().collect();
        let index: BTreeMap<&CellKey, usize> =
            keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut uf = UnionFind::new(keys.len());
        for att in &self.attachments {
            uf.union(index[&att.parent], index[&att.child]);
        }
        let mut groups: BTreeMap<usize, BTreeSet<CellKey>> = BTreeMap::new();
        for (i, k) in keys.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().insert((*k).clone());
        }
        let mut out: Vec<BTreeSet<CellKey>> = groups.into_values().collect();
        out.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        out
    }

    /// The same complex with all top-cell orientation signs negated.
    pub fn reverse(&self) -> CornerComplex {
        let Some(n) = self.dim() else {
            return self.clone();
        };
        let mut out = self.clone();
        for cell in out.cells.values_mut() {
            if cell.dim() == n {
                cell.sign = -cell.sign;
            }
        }
        out
    }

    /// Product complex. Cell keys are [`CellKey::Pair`]s, charts concatenate (`self`
    /// block first), frames are the block frames, signs multiply.
    pub fn product(&self, other: &CornerComplex) -> CornerComplex {
        let mut out = CornerComplex::new();
        for a in self.cells.values() {
            for b in other.cells.values() {
                let key = CellKey::pair(&a.key, &b.key);
                let poly = a.poly.product(&b.poly);
                let base = concat(&a.base, &b.base);
                let mut frame: Vec<Vect> = a
                    .frame
                    .iter()
                    .map(|v| concat(v, &crate::geometry::zero_vect(b.dim())))
                    .collect();
                frame.extend(
                    b.frame
                        .iter()
                        .map(|v| concat(&crate::geometry::zero_vect(a.dim()), v)),
                );
                out.add_cell(Cell::with_frame(key, poly, a.sign * b.sign, base, frame));
            }
        }
        for att in &self.attachments {
            for b in other.cells.values() {
                out.add_attachment(Attachment {
                    parent: CellKey::pair(&att.parent, &b.key),
                    child: CellKey::pair(&att.child, &b.key),
                    map: att.map.block_sum(&AffineMap::identity(b.dim())),
                });
            }
        }
        for att in &other.attachments {
            for a in self.cells.values() {
                out.add_attachment(Attachment {
                    parent: CellKey::pair(&a.key, &att.parent),
                    child: CellKey::pair(&a.key, &att.child),
                    map: AffineMap::identity(a.dim()).block_sum(&att.map),
                });
            }
        }
        out
    }

    /// The lexicographically smallest top cell: ordered by sorted vertex coordinate
    /// lists, ties broken by key. `None` for the empty complex.
    pub fn lex_min_top_cell(&self) -> Option<&Cell> {
        let mut tops = self.top_cells();
        tops.sort_by(|a, b| {
            a.sorted_verts()
                .cmp(&b.sorted_verts())
                .then_with(|| a.key.cmp(&b.key))
        });
        tops.into_iter().next()
    }

    /// Incidence coefficient of a single facet attachment: the sign comparing
    /// (outward normal, mapped child frame) against the parent's oriented frame,
    /// multiplied by both orientation signs.
    pub fn incidence_sign(&self, att: &Attachment) -> i8 {
        let parent = self.cell(&att.parent);
        let child = self.cell(&att.child);
        incidence_sign_for(parent, child, &att.map)
    }

    /// Renames every cell by the given injective key map.
    pub fn relabeled(&self, rename: &BTreeMap<CellKey, CellKey>) -> CornerComplex {
        let cells = self
            .cells
            .values()
            .map(|c| {
                let mut c2 = c.clone();
                c2.key = rename[&c.key].clone();
                (c2.key.clone(), c2)
            })
            .collect();
        let attachments = self
            .attachments
            .iter()
            .map(|a| Attachment {
                parent: rename[&a.parent].clone(),
                child: rename[&a.child].clone(),
                map: a.map.clone(),
            })
            .collect();
        CornerComplex {
            cells,
            attachments,
        }
    }

    /// Checks two complexes agree in everything except possibly the orientation
    /// signs of non-top cells (which are gauge: no observable quantity depends on
    /// them).
    pub fn gauge_equivalent(&self, other: &CornerComplex) -> bool {
        if self.attachments != other.attachments || self.cells.len() != other.cells.len() {
            return false;
        }
        let n = self.dim();
        self.cells.iter().all(|(k, c)| {
            other.cells.get(k).is_some_and(|o| {
                c.poly == o.poly
                    && c.frame == o.frame
                    && c.base == o.base
                    && (Some(c.dim()) != n || c.sign == o.sign)
            })
        })
    }

    /// Checks two complexes are equal up to top-cell sign flips per connected
    /// component; returns the relative sign when they are (+1 equal, -1 fully
    /// reversed), `None` otherwise. Used by chain normalization.
    pub fn same_up_to_orientation(&self, other: &CornerComplex) -> Option<i8> {
        if self.cells.len() != other.cells.len() || self.attachments != other.attachments {
            return None;
        }
        let mut rel: Option<i8> = None;
        for (k, c) in &self.cells {
            let o = other.cells.get(k)?;
            if c.poly != o.poly || c.frame != o.frame || c.base != o.base {
                return None;
            }
            let n = self.dim();
            if Some(c.dim()) == n {
                let r = c.sign * o.sign;
                match rel {
                    None => rel = Some(r),
                    Some(prev) if prev != r => return None,
                    _ => {}
                }
            } else if c.sign != o.sign {
                return None;
            }
        }
        rel.or(Some(1))
    }
}

/// Incidence sign of a facet embedding, independent of any complex bookkeeping.
pub fn incidence_sign_for(parent: &Cell, child: &Cell, map: &AffineMap) -> i8 {
    use crate::geometry::{project_onto_span, sub};
    let mapped_frame: Vec<Vect> = child.frame.iter().map(|v| map.a.mul_vec(v)).collect();
    let child_centroid = map.apply(&child.poly.centroid());
    let inward = sub(&parent.poly.centroid(), &child_centroid);
    let proj = project_onto_span(&inward, &mapped_frame);
    let outward = sub(&proj, &inward);
    let mut cols = vec![outward];
    cols.extend(mapped_frame);
    let det = crate::linalg::Matrix::from_cols(cols).det_sign();
    let parent_frame = crate::linalg::Matrix::from_cols(parent.frame.clone()).det_sign();
    parent.sign * child.sign * det * parent_frame
}

impl PartialOrd for CornerComplex {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for CornerComplex {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.cells
            .iter()
            .cmp(other.cells.iter())
            .then_with(|| self.attachments.iter().cmp(other.attachments.iter()))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Convenience: an error listing validation diagnostics.
pub(crate) fn invalid_from(diags: &[String]) -> Error {
    Error::invalid(diags.join("; "))
}

/// Parses the `i64` entries of a lattice shift out of exact rationals; fails when any
/// entry is not an integer in range.
pub(crate) fn shift_from_rats(v: &[Rat]) -> Result<Vec<i64>> {
    v.iter()
        .map(|x| {
            if !crate::scalar::is_integral(x) {
                return Err(Error::invalid("non-integer lattice shift"));
            }
            let n = x.numer();
            n.try_into()
                .map_err(|_| Error::invalid("lattice shift out of range"))
        })
        .collect()
}
