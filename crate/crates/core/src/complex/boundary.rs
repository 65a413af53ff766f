//! Boundary sheets.
//!
//! The codimension-1 boundary of a complex decomposes into sheets: free facets glued
//! along the codimension-2 cells that continue one wall into another. Each sheet's
//! closure is a standalone complex whose top orientations are induced by the
//! outward-normal-first rule.

use super::{CellKey, CornerComplex, UnionFind};
use std::collections::{BTreeMap, BTreeSet};

/// One boundary sheet: the closure complex (with induced top orientations) and the
/// set of facets forming the sheet interior.
#[derive(Clone, Debug)]
pub struct BoundaryComponent {
    pub complex: CornerComplex,
    pub facets: BTreeSet<CellKey>,
}

impl CornerComplex {
    /// The unique attachment of a free facet into a top cell.
    pub fn facet_top_attachment<'a>(&'a self, facet: &'a CellKey) -> &'a super::Attachment {
        let n = self.dim().expect("empty complex has no facets");
        let mut found = None;
        for att in self.attachments_of_child(facet) {
            if self.cell(&att.parent).dim() == n {
                assert!(found.is_none(), "facet is not free");
                found = Some(att);
            }
        }
        found.expect("facet has no top attachment")
    }

    /// Decomposes the codimension-1 boundary into sheets, sorted by smallest facet
    /// key. Closed complexes (and the empty complex) have none.
    pub fn boundary_components(&self) -> Vec<BoundaryComponent> {
        let data = self.corner_data();
        let facets: Vec<&CellKey> = data.free_facets.iter().collect();
        if facets.is_empty() {
            return vec![];
        }
        let index: BTreeMap<&CellKey, usize> =
            facets.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut uf = UnionFind::new(facets.len());
        for pairs in data.continuations.values() {
            for ((fa, _), (fb, _)) in pairs {
                uf.union(index[fa], index[fb]);
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<CellKey>> = BTreeMap::new();
        for (i, k) in facets.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().insert((*k).clone());
        }
        let mut sheets: Vec<BTreeSet<CellKey>> = groups.into_values().collect();
        sheets.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));

        sheets
            .into_iter()
            .map(|sheet| {
                let keys = self.closure_of(&sheet);
                let mut complex = self.subcomplex(&keys);
                for f in &sheet {
                    let att = self.facet_top_attachment(f);
                    // `incidence_sign` compares against the facet's stored
                    // orientation, so the induced orientation is that sign times
                    // the stored one.
                    let eps = self.incidence_sign(att);
                    let cell = complex.cell_mut(f);
                    cell.sign *= eps;
                }
                BoundaryComponent {
                    complex,
                    facets: sheet,
                }
            })
            .collect()
    }
}
