//! Builders for standard complexes and the quotient (gluing) construction.

use super::{Attachment, Cell, CellKey, CornerComplex};
use crate::geometry::{chart_to_chart, to_local_chart, AffineMap, Polytope};
use crate::scalar::{rat_int, Rat};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// A single 0-cell.
pub fn point(name: &str) -> CornerComplex {
    let mut cx = CornerComplex::new();
    cx.add_cell(Cell::new(CellKey::atom(name), Polytope::point(), 1));
    cx
}

/// A closed interval `[lo, hi]` with its two endpoint cells `{name}.0`, `{name}.1`.
pub fn segment(name: &str, lo: Rat, hi: Rat) -> CornerComplex {
    let mut cx = CornerComplex::new();
    let e = CellKey::atom(name);
    let v0 = CellKey::atom(format!("{name}.0"));
    let v1 = CellKey::atom(format!("{name}.1"));
    cx.add_cell(Cell::new(e.clone(), Polytope::segment(lo.clone(), hi.clone()), 1));
    cx.add_cell(Cell::new(v0.clone(), Polytope::point(), 1));
    cx.add_cell(Cell::new(v1.clone(), Polytope::point(), 1));
    cx.add_attachment(Attachment {
        parent: e.clone(),
        child: v0,
        map: AffineMap::constant(0, vec![lo]),
    });
    cx.add_attachment(Attachment {
        parent: e,
        child: v1,
        map: AffineMap::constant(0, vec![hi]),
    });
    cx
}

/// The unit `d`-cube as a product of unit segments (a single point for `d = 0`).
pub fn cube(d: usize) -> CornerComplex {
    if d == 0 {
        return point("c");
    }
    let mut cx = segment("x1", rat_int(0), rat_int(1));
    for i in 2..=d {
        cx = cx.product(&segment(&format!("x{i}"), rat_int(0), rat_int(1)));
    }
    cx
}

/// The standard `d`-simplex with all its faces as cells.
///
/// Vertices are `v0 = 0` and `vi = ei`; the face on a vertex subset `S` is the cell
/// `s{S}` in its own chart.
pub fn simplex(d: usize) -> CornerComplex {
    let mut verts: Vec<Vec<Rat>> = vec![crate::geometry::zero_vect(d)];
    for i in 0..d {
        let mut v = crate::geometry::zero_vect(d);
        v[i] = rat_int(1);
        verts.push(v);
    }
    let mut cx = CornerComplex::new();
    // Chart data per subset, for attachment maps.
    let mut charts: BTreeMap<Vec<usize>, (Vec<Rat>, Vec<Vec<Rat>>)> = BTreeMap::new();
    let subsets = nonempty_subsets(d + 1);
    for s in &subsets {
        let pts: Vec<Vec<Rat>> = s.iter().map(|&i| verts[i].clone()).collect();
        let (local, base, frame) = to_local_chart(&pts);
        let poly = Polytope::from_vertices(local).expect("simplex face");
        cx.add_cell(Cell::new(face_key(s), poly, 1));
        charts.insert(s.clone(), (base, frame));
    }
    for s in &subsets {
        if s.len() < 2 {
            continue;
        }
        let (pb, pf) = &charts[s];
        for omit in 0..s.len() {
            let t: Vec<usize> = s
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != omit)
                .map(|(_, &i)| i)
                .collect();
            let (cb, cf) = &charts[&t];
            cx.add_attachment(Attachment {
                parent: face_key(s),
                child: face_key(&t),
                map: chart_to_chart(cb, cf, pb, pf),
            });
        }
    }
    cx
}

fn face_key(s: &[usize]) -> CellKey {
    let names: Vec<String> = s.iter().map(|i| i.to_string()).collect();
    CellKey::atom(format!("s{}", names.join(",")))
}

fn nonempty_subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 1u32..(1 << n) {
        out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
    }
    out.sort_by_key(|s: &Vec<usize>| (s.len(), s.clone()));
    out
}

/// A circle modeled on `n >= 2` arcs: `{name}.e{i} = [i/n, (i+1)/n]`, glued at the
/// vertices `{name}.v{i}` sitting at parameter `i/n` (with `1 ≡ 0`).
pub fn circle_n(name: &str, n: usize) -> CornerComplex {
    assert!(n >= 2, "a circle needs at least two arcs");
    let mut cx = CornerComplex::new();
    let at = |i: usize| Rat::new((i as i64).into(), (n as i64).into());
    for i in 0..n {
        cx.add_cell(Cell::new(
            CellKey::atom(format!("{name}.e{i}")),
            Polytope::segment(at(i), at(i + 1)),
            1,
        ));
        cx.add_cell(Cell::new(
            CellKey::atom(format!("{name}.v{i}")),
            Polytope::point(),
            1,
        ));
    }
    for i in 0..n {
        let e = CellKey::atom(format!("{name}.e{i}"));
        let lo = CellKey::atom(format!("{name}.v{i}"));
        let hi = CellKey::atom(format!("{name}.v{}", (i + 1) % n));
        cx.add_attachment(Attachment {
            parent: e.clone(),
            child: lo,
            map: AffineMap::constant(0, vec![at(i)]),
        });
        cx.add_attachment(Attachment {
            parent: e,
            child: hi,
            map: AffineMap::constant(0, vec![at(i + 1)]),
        });
    }
    cx
}

/// The two-arc circle (see [`circle_n`]).
pub fn circle(name: &str) -> CornerComplex {
    circle_n(name, 2)
}

/// The `d`-torus as a product of circles `c1, ..., cd` (a point for `d = 0`).
pub fn torus(d: usize) -> CornerComplex {
    if d == 0 {
        return point("c");
    }
    let mut cx = circle("c1");
    for i in 2..=d {
        cx = cx.product(&circle(&format!("c{i}")));
    }
    cx
}

/// The two-triangle diagonal model of the torus: one vertex `v`, edges `a`, `b`, `c`,
/// and triangles `U` (below the diagonal) and `L` (above), both counterclockwise.
pub fn delta_torus() -> CornerComplex {
    let mut cx = CornerComplex::new();
    let v = CellKey::atom("v");
    let (a, b, c) = (CellKey::atom("a"), CellKey::atom("b"), CellKey::atom("c"));
    let (u_key, l_key) = (CellKey::atom("U"), CellKey::atom("L"));
    let unit = || Polytope::segment(rat_int(0), rat_int(1));
    cx.add_cell(Cell::new(v.clone(), Polytope::point(), 1));
    cx.add_cell(Cell::new(a.clone(), unit(), 1));
    cx.add_cell(Cell::new(b.clone(), unit(), 1));
    cx.add_cell(Cell::new(c.clone(), unit(), 1));
    let tri = |pts: [[i64; 2]; 3]| {
        Polytope::from_vertices(
            pts.iter()
                .map(|p| vec![rat_int(p[0]), rat_int(p[1])])
                .collect(),
        )
        .expect("triangle")
    };
    cx.add_cell(Cell::new(u_key.clone(), tri([[0, 0], [1, 0], [1, 1]]), 1));
    cx.add_cell(Cell::new(l_key.clone(), tri([[0, 0], [1, 1], [0, 1]]), 1));

    let emb = |parent: &CellKey, child: &CellKey, rows: [[i64; 1]; 2], off: [i64; 2]| Attachment {
        parent: parent.clone(),
        child: child.clone(),
        map: AffineMap::from_rows(
            vec![vec![rat_int(rows[0][0])], vec![rat_int(rows[1][0])]],
            vec![rat_int(off[0]), rat_int(off[1])],
        ),
    };
    // U: bottom edge a (t, 0), right edge b (1, t), diagonal c (t, t).
    cx.add_attachment(emb(&u_key, &a, [[1], [0]], [0, 0]));
    cx.add_attachment(emb(&u_key, &b, [[0], [1]], [1, 0]));
    cx.add_attachment(emb(&u_key, &c, [[1], [1]], [0, 0]));
    // L: top edge a (t, 1), left edge b (0, t), diagonal c (t, t).
    cx.add_attachment(emb(&l_key, &a, [[1], [0]], [0, 1]));
    cx.add_attachment(emb(&l_key, &b, [[0], [1]], [0, 0]));
    cx.add_attachment(emb(&l_key, &c, [[1], [1]], [0, 0]));
    // All three edges run from v to v.
    for (e, ends) in [(&a, [0, 1]), (&b, [0, 1]), (&c, [0, 1])] {
        for t in ends {
            cx.add_attachment(Attachment {
                parent: (*e).clone(),
                child: v.clone(),
                map: AffineMap::constant(0, vec![rat_int(t)]),
            });
        }
    }
    cx
}

/// The boundary of a complex with a single top cell, as a standalone closed complex
/// with the induced orientation on its facets.
pub fn boundary_of_top(cx: &CornerComplex) -> Result<CornerComplex> {
    let n = cx
        .dim()
        .ok_or_else(|| Error::invalid("empty complex has no boundary"))?;
    let tops = cx.top_cells();
    if tops.len() != 1 {
        return Err(Error::invalid("boundary_of_top needs exactly one top cell"));
    }
    if n == 0 {
        return Ok(CornerComplex::new());
    }
    let top_key = tops[0].key.clone();
    let keys: std::collections::BTreeSet<CellKey> = cx
        .keys()
        .filter(|k| **k != top_key)
        .cloned()
        .collect();
    let mut out = cx.subcomplex(&keys);
    for facet in cx.cells_of_dim(n - 1) {
        let att = cx.facet_top_attachment(&facet.key);
        let eps = cx.incidence_sign(att);
        out.cell_mut(&facet.key).sign *= eps;
    }
    Ok(out)
}

/// An identification used by [`quotient`]: `map` carries the chart of `drop`
/// bijectively onto the chart of `keep`, matching the polytopes.
#[derive(Clone, Debug)]
pub struct Identification {
    pub keep: CellKey,
    pub drop: CellKey,
    pub map: AffineMap,
}

/// Glues cells of a complex along the given identifications, propagating them to
/// faces by congruence closure.
pub fn quotient(cx: &CornerComplex, idents: Vec<Identification>) -> Result<CornerComplex> {
    let mut gluer = Gluer {
        cx,
        rep: BTreeMap::new(),
    };
    let mut queue: Vec<Identification> = idents;
    while let Some(id) = queue.pop() {
        gluer.merge(&id, &mut queue)?;
    }
    gluer.rebuild()
}

struct Gluer<'a> {
    cx: &'a CornerComplex,
    /// Current representative pointer: key -> (next key, map into its chart).
    rep: BTreeMap<CellKey, (CellKey, AffineMap)>,
}

impl<'a> Gluer<'a> {
    /// Follows representative pointers, composing maps.
    fn find(&self, k: &CellKey) -> (CellKey, AffineMap) {
        let mut cur = k.clone();
        let mut map = AffineMap::identity(self.cx.cell(k).dim());
        while let Some((next, step)) = self.rep.get(&cur) {
            map = step.compose(&map);
            cur = next.clone();
        }
        (cur, map)
    }

    fn merge(&mut self, id: &Identification, queue: &mut Vec<Identification>) -> Result<()> {
        let (keep_cell, drop_cell) = match (self.cx.get_cell(&id.keep), self.cx.get_cell(&id.drop))
        {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(Error::invalid("identification names a missing cell")),
        };
        if keep_cell.dim() != drop_cell.dim() {
            return Err(Error::invalid("identification of cells of different dimension"));
        }
        let image: std::collections::BTreeSet<Vec<Rat>> = drop_cell
            .poly
            .verts()
            .iter()
            .map(|v| id.map.apply(v))
            .collect();
        let target: std::collections::BTreeSet<Vec<Rat>> =
            keep_cell.poly.verts().iter().cloned().collect();
        if image != target {
            return Err(Error::invalid(format!(
                "identification map does not carry {} onto {}",
                id.drop, id.keep
            )));
        }

        let (ra, psi_a) = self.find(&id.keep);
        let (rb, psi_b) = self.find(&id.drop);
        let to_ra = psi_a.compose(&id.map); // drop -> ra
        if ra == rb {
            if to_ra != psi_b {
                return Err(Error::invalid(format!(
                    "inconsistent gluing at {} ~ {}",
                    id.keep, id.drop
                )));
            }
            return Ok(());
        }
        if ra <= rb {
            let step = to_ra.compose(&psi_b.inverse().ok_or_else(degenerate)?);
            self.rep.insert(rb.clone(), (ra.clone(), step));
        } else {
            let step = psi_b
                .compose(&to_ra.inverse().ok_or_else(degenerate)?);
            self.rep.insert(ra.clone(), (rb.clone(), step));
        }

        // Propagate: each face of `drop` is identified with the matching face of
        // `keep` (matching via image vertex sets under the gluing map).
        for att_d in self.cx.attachments_of_parent(&id.drop) {
            let child = self.cx.cell(&att_d.child);
            let img: std::collections::BTreeSet<Vec<Rat>> = child
                .poly
                .verts()
                .iter()
                .map(|v| id.map.apply(&att_d.map.apply(v)))
                .collect();
            let mut matched = false;
            for att_k in self.cx.attachments_of_parent(&id.keep) {
                let kchild = self.cx.cell(&att_k.child);
                let kimg: std::collections::BTreeSet<Vec<Rat>> = kchild
                    .poly
                    .verts()
                    .iter()
                    .map(|v| att_k.map.apply(v))
                    .collect();
                if kimg == img {
                    let chi = att_k
                        .map
                        .left_inverse()
                        .compose(&id.map)
                        .compose(&att_d.map);
                    queue.push(Identification {
                        keep: att_k.child.clone(),
                        drop: att_d.child.clone(),
                        map: chi,
                    });
                    matched = true;
                    break;
                }
            }
            if !matched {
                return Err(Error::invalid(format!(
                    "gluing of {} onto {} does not respect faces",
                    id.drop, id.keep
                )));
            }
        }
        Ok(())
    }

    fn rebuild(&self) -> Result<CornerComplex> {
        let mut out = CornerComplex::new();
        for cell in self.cx.cells() {
            let (r, _) = self.find(&cell.key);
            if r == cell.key {
                out.add_cell(cell.clone());
            }
        }
        for att in self.cx.attachments() {
            let (rp, psi_p) = self.find(&att.parent);
            let (rc, psi_c) = self.find(&att.child);
            let map = psi_p
                .compose(&att.map)
                .compose(&psi_c.inverse().ok_or_else(degenerate)?);
            out.add_attachment(Attachment {
                parent: rp,
                child: rc,
                map,
            });
        }
        Ok(out)
    }
}

fn degenerate() -> Error {
    Error::invalid("degenerate identification map")
}
