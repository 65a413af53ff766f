//! Structural validation of a complex.
//!
//! Validation is diagnostic-first: every violated rule produces a human-readable
//! message naming the offending cells, and `validate` fails with the full list.

use super::{CellKey, CornerComplex};
use crate::linalg::Matrix;
use crate::Result;
use num_traits::Zero;
use std::collections::{BTreeMap, BTreeSet};

/// The outcome of validating a complex.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub diagnostics: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

impl CornerComplex {
    /// Runs all structural checks and returns the collected diagnostics.
    pub fn validation_report(&self) -> ValidationReport {
        let mut d = Vec::new();
        self.check_cells(&mut d);
        self.check_attachments(&mut d);
        if d.is_empty() {
            // Deeper checks assume the incidence structure is well-formed.
            self.check_coverage(&mut d);
            self.check_coherence(&mut d);
            self.check_purity_and_walls(&mut d);
        }
        ValidationReport { diagnostics: d }
    }

    /// Fails with all diagnostics when the complex is not valid.
    pub fn validate(&self) -> Result<()> {
        let report = self.validation_report();
        if report.is_ok() {
            Ok(())
        } else {
            Err(super::invalid_from(&report.diagnostics))
        }
    }

    fn check_cells(&self, d: &mut Vec<String>) {
        for cell in self.cells() {
            let k = &cell.key;
            if cell.sign != 1 && cell.sign != -1 {
                d.push(format!("cell {k}: orientation sign must be ±1"));
            }
            if cell.frame.len() != cell.dim() || cell.base.len() != cell.dim() {
                d.push(format!("cell {k}: frame does not match chart dimension"));
                continue;
            }
            if cell.dim() > 0 && Matrix::from_cols(cell.frame.clone()).det_sign() == 0 {
                d.push(format!("cell {k}: degenerate frame"));
            }
            for (i, v) in cell.poly.verts().iter().enumerate() {
                if !cell.poly.is_extremal_vertex(i) {
                    d.push(format!("cell {k}: vertex {i:?} {v:?} is not extremal"));
                }
            }
        }
    }

    fn check_attachments(&self, d: &mut Vec<String>) {
        for att in self.attachments() {
            let label = format!("attachment {} -> {}", att.child, att.parent);
            let (Some(parent), Some(child)) =
                (self.get_cell(&att.parent), self.get_cell(&att.child))
            else {
                d.push(format!("{label}: endpoint cell missing"));
                continue;
            };
            if child.dim() + 1 != parent.dim() {
                d.push(format!("{label}: child must have codimension 1"));
                continue;
            }
            if att.map.dom_dim() != child.dim() || att.map.cod_dim() != parent.dim() {
                d.push(format!("{label}: map dimensions do not match charts"));
                continue;
            }
            if !att.map.is_injective() {
                d.push(format!("{label}: map is not injective"));
                continue;
            }
            let image: BTreeSet<Vec<crate::scalar::Rat>> = child
                .poly
                .verts()
                .iter()
                .map(|v| att.map.apply(v))
                .collect();
            let mut is_facet = false;
            for fs in parent.poly.facet_vertex_sets() {
                let facet: BTreeSet<_> = fs
                    .iter()
                    .map(|&i| parent.poly.verts()[i].clone())
                    .collect();
                if facet == image {
                    is_facet = true;
                    break;
                }
            }
            if !is_facet {
                d.push(format!(
                    "{label}: image is not a facet of the parent polytope"
                ));
            }
        }
    }

    /// Every polytope facet of every cell must be covered by exactly one attachment.
    fn check_coverage(&self, d: &mut Vec<String>) {
        for cell in self.cells() {
            if cell.dim() == 0 {
                continue;
            }
            let facet_sets: Vec<BTreeSet<Vec<crate::scalar::Rat>>> = cell
                .poly
                .facet_vertex_sets()
                .into_iter()
                .map(|fs| {
                    fs.into_iter()
                        .map(|i| cell.poly.verts()[i].clone())
                        .collect()
                })
                .collect();
            let mut covered = vec![0usize; facet_sets.len()];
            for att in self.attachments_of_parent(&cell.key) {
                let child = self.cell(&att.child);
                let image: BTreeSet<_> = child
                    .poly
                    .verts()
                    .iter()
                    .map(|v| att.map.apply(v))
                    .collect();
                if let Some(i) = facet_sets.iter().position(|f| *f == image) {
                    covered[i] += 1;
                }
            }
            for (i, c) in covered.iter().enumerate() {
                if *c != 1 {
                    d.push(format!(
                        "cell {}: facet {i} covered by {c} attachments (expected 1)",
                        cell.key
                    ));
                }
            }
        }
    }

    /// Two-step routes landing on the same face must agree as maps (so corners are
    /// genuine diamonds and route deduplication is meaningful).
    fn check_coherence(&self, d: &mut Vec<String>) {
        for g in self.cells() {
            // (grandparent, image vertex set) -> set of composite maps.
            let mut groups: BTreeMap<
                (CellKey, BTreeSet<Vec<crate::scalar::Rat>>),
                BTreeSet<crate::geometry::AffineMap>,
            > = BTreeMap::new();
            for a1 in self.attachments_of_child(&g.key) {
                for a2 in self.attachments_of_child(&a1.parent) {
                    let comp = a2.map.compose(&a1.map);
                    let image: BTreeSet<_> =
                        g.poly.verts().iter().map(|v| comp.apply(v)).collect();
                    groups
                        .entry((a2.parent.clone(), image))
                        .or_default()
                        .insert(comp);
                }
            }
            for ((p, _), maps) in groups {
                if maps.len() > 1 {
                    d.push(format!(
                        "cell {}: {} incompatible corner routes into {p}",
                        g.key,
                        maps.len()
                    ));
                }
            }
        }
    }

    fn check_purity_and_walls(&self, d: &mut Vec<String>) {
        let Some(n) = self.dim() else { return };
        let data = self.corner_data();
        for cell in self.cells() {
            let reaches_top = data.routes[&cell.key]
                .iter()
                .any(|(anc, _)| self.cell(anc).dim() == n);
            if !reaches_top {
                d.push(format!(
                    "cell {}: not in the closure of any top cell",
                    cell.key
                ));
            }
        }
        if n == 0 {
            return;
        }
        for facet in self.cells_of_dim(n - 1) {
            let top_atts: Vec<_> = self
                .attachments_of_child(&facet.key)
                .filter(|a| self.cell(&a.parent).dim() == n)
                .collect();
            match top_atts.len() {
                0 => d.push(format!("facet {}: attached to no top cell", facet.key)),
                1 => {}
                2 => {
                    let s: i32 = top_atts
                        .iter()
                        .map(|a| self.incidence_sign(a) as i32)
                        .sum();
                    if !s.is_zero() {
                        d.push(format!(
                            "facet {}: inconsistent orientations across the wall",
                            facet.key
                        ));
                    }
                }
                k => d.push(format!(
                    "facet {}: {k} top attachments (expected at most 2)",
                    facet.key
                )),
            }
        }
        for defect in &data.ring_defects {
            d.push(defect.clone());
        }
        for (k, depth) in &data.depth {
            let codim = n - self.cell(k).dim();
            if *depth > codim {
                d.push(format!("cell {k}: depth {depth} exceeds codimension {codim}"));
            }
        }
    }
}
