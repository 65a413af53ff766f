//! Route enumeration and corner depth.
//!
//! A *route* from a cell to an ancestor is a composite of attachment maps; routes are
//! deduplicated by (ancestor, composite map), so the two length-2 factorizations of a
//! codimension-2 corner count once. The corner depth of a cell counts germs of
//! boundary walls: routes to free facets, merged when a codimension-2 cell links them
//! as the two ends of an arc of sectors around it.

use super::{CellKey, CornerComplex, UnionFind};
use crate::geometry::AffineMap;
use std::collections::{BTreeMap, BTreeSet};

/// A route from a cell into an ancestor: the ancestor key and the composite chart map.
pub type Route = (CellKey, AffineMap);

/// Derived corner data for a complex: routes, free facets, depths, and the
/// wall-continuation pairing used by both depth and boundary-sheet computations.
pub struct CornerData {
    /// For every cell, all deduplicated routes to every ancestor (including the
    /// identity route to itself).
    pub routes: BTreeMap<CellKey, BTreeSet<Route>>,
    /// Facets with exactly one route into a top cell.
    pub free_facets: BTreeSet<CellKey>,
    /// Corner depth of every cell.
    pub depth: BTreeMap<CellKey, usize>,
    /// For each codimension-2 cell, the pairs of facet routes identified as the two
    /// ends of an arc of sectors around it (both ends free).
    pub continuations: BTreeMap<CellKey, Vec<(Route, Route)>>,
    /// Ring diagnostics for validation: irregular ring components (not an arc or a
    /// cycle, or with self-looping sector composites).
    pub ring_defects: Vec<String>,
}

impl CornerComplex {
    /// Enumerates all deduplicated routes; see [`CornerData::routes`].
    pub fn routes_up(&self) -> BTreeMap<CellKey, BTreeSet<Route>> {
        let mut routes: BTreeMap<CellKey, BTreeSet<Route>> = BTreeMap::new();
        let mut order: Vec<&CellKey> = self.keys().collect();
        order.sort_by_key(|k| std::cmp::Reverse(self.cell(k).dim()));
        for key in order {
            let dim = self.cell(key).dim();
            let mut set: BTreeSet<Route> = BTreeSet::new();
            set.insert(((*key).clone(), AffineMap::identity(dim)));
            for att in self.attachments_of_child(key) {
                let parent_routes = routes.get(&att.parent).cloned().unwrap_or_default();
                for (anc, up) in parent_routes {
                    set.insert((anc, up.compose(&att.map)));
                }
            }
            routes.insert((*key).clone(), set);
        }
        routes
    }

    /// Computes depths, free facets, and wall continuations.
    pub fn corner_data(&self) -> CornerData {
        let routes = self.routes_up();
        let Some(n) = self.dim() else {
            return CornerData {
                routes,
                free_facets: BTreeSet::new(),
                depth: BTreeMap::new(),
                continuations: BTreeMap::new(),
                ring_defects: vec![],
            };
        };

        // Free facets: exactly one route into a top cell.
        let mut free_facets = BTreeSet::new();
        for cell in self.cells_of_dim(n.saturating_sub(1)) {
            if n == 0 {
                break;
            }
            let top_routes = routes[&cell.key]
                .iter()
                .filter(|(anc, _)| self.cell(anc).dim() == n)
                .count();
            if top_routes == 1 {
                free_facets.insert(cell.key.clone());
            }
        }

        // Ring analysis around each codimension-2 cell.
        let mut continuations: BTreeMap<CellKey, Vec<(Route, Route)>> = BTreeMap::new();
        let mut ring_defects = Vec::new();
        if n >= 2 {
            for h in self.cells_of_dim(n - 2) {
                let (pairs, defects) = self.ring_continuations(&h.key, n, &free_facets);
                if !pairs.is_empty() {
                    continuations.insert(h.key.clone(), pairs);
                }
                ring_defects.extend(defects);
            }
        }

        // Depth: free-facet routes modulo continuation-induced merges.
        let mut depth = BTreeMap::new();
        for key in self.keys() {
            let free_routes: Vec<&Route> = routes[key]
                .iter()
                .filter(|(anc, _)| free_facets.contains(anc))
                .collect();
            let index: BTreeMap<&Route, usize> = free_routes
                .iter()
                .enumerate()
                .map(|(i, r)| (*r, i))
                .collect();
            let mut uf = UnionFind::new(free_routes.len());
            for (h, pairs) in &continuations {
                for (hk, tau) in &routes[key] {
                    if hk != h {
                        continue;
                    }
                    for ((fa, ma), (fb, mb)) in pairs {
                        let ra = (fa.clone(), ma.compose(tau));
                        let rb = (fb.clone(), mb.compose(tau));
                        if let (Some(&ia), Some(&ib)) = (index.get(&ra), index.get(&rb)) {
                            uf.union(ia, ib);
                        }
                    }
                }
            }
            let classes: BTreeSet<usize> =
                (0..free_routes.len()).map(|i| uf.find(i)).collect();
            depth.insert(key.clone(), classes.len());
        }

        CornerData {
            routes,
            free_facets,
            depth,
            continuations,
            ring_defects,
        }
    }

    /// Builds the ring graph around one codimension-2 cell and extracts arc-end
    /// continuation pairs.
    ///
    /// Nodes are deduplicated 1-step routes into facets; each deduplicated 2-step
    /// composite into a top cell is an edge joining its (exactly two) factorizations.
    fn ring_continuations(
        &self,
        h: &CellKey,
        n: usize,
        free_facets: &BTreeSet<CellKey>,
    ) -> (Vec<(Route, Route)>, Vec<String>) {
        let mut defects = Vec::new();
        // 1-step routes h -> facet.
        let mut nodes: BTreeSet<Route> = BTreeSet::new();
        for att in self.attachments_of_child(h) {
            if self.cell(&att.parent).dim() == n - 1 {
                nodes.insert((att.parent.clone(), att.map.clone()));
            }
        }
        let node_list: Vec<Route> = nodes.into_iter().collect();
        let node_index: BTreeMap<&Route, usize> = node_list
            .iter()
            .enumerate()
            .map(|(i, r)| (r, i))
            .collect();

        // 2-step composites h -> facet -> top, grouped by (top, composite map).
        let mut sectors: BTreeMap<Route, BTreeSet<usize>> = BTreeMap::new();
        for att in self.attachments_of_child(h) {
            if self.cell(&att.parent).dim() != n - 1 {
                continue;
            }
            let prefix = (att.parent.clone(), att.map.clone());
            let pi = node_index[&prefix];
            for up in self.attachments_of_child(&att.parent) {
                if self.cell(&up.parent).dim() != n {
                    continue;
                }
                let composite = (up.parent.clone(), up.map.compose(&att.map));
                sectors.entry(composite).or_default().insert(pi);
            }
        }

        // Ring graph: nodes joined by sector edges.
        let mut degree = vec![0usize; node_list.len()];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); node_list.len()];
        let mut uf = UnionFind::new(node_list.len());
        let mut self_loops = false;
        for (composite, prefixes) in &sectors {
            match prefixes.len() {
                2 => {
                    let v: Vec<usize> = prefixes.iter().copied().collect();
                    degree[v[0]] += 1;
                    degree[v[1]] += 1;
                    adj[v[0]].push(v[1]);
                    adj[v[1]].push(v[0]);
                    uf.union(v[0], v[1]);
                }
                1 => {
                    // A sector whose two wall factorizations coincide (facet glued to
                    // itself around this corner): makes the component irregular.
                    self_loops = true;
                    let v = *prefixes.iter().next().unwrap();
                    degree[v] += 2;
                    defects.push(format!(
                        "self-folded sector at {h} via {}",
                        composite.0
                    ));
                }
                k => {
                    defects.push(format!(
                        "sector at {h} with {k} wall factorizations (expected 2)"
                    ));
                    self_loops = true;
                }
            }
        }

        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for i in 0..node_list.len() {
            components.entry(uf.find(i)).or_default().push(i);
        }

        let mut pairs = Vec::new();
        for (_, comp) in components {
            let edges: usize = comp.iter().map(|&i| adj[i].len()).sum::<usize>() / 2;
            let ends: Vec<usize> = comp.iter().copied().filter(|&i| degree[i] == 1).collect();
            let over = comp.iter().any(|&i| degree[i] > 2);
            if over || self_loops {
                if over {
                    defects.push(format!("over-crowded wall ring at {h}"));
                }
                continue;
            }
            if ends.is_empty() {
                // A full cycle of sectors: an interior codimension-2 cell.
                continue;
            }
            if ends.len() != 2 {
                defects.push(format!("broken wall ring at {h}"));
                continue;
            }
            if edges < 2 {
                // A single sector: the two walls meet at a genuine corner, no merge.
                continue;
            }
            let a = node_list[ends[0]].clone();
            let b = node_list[ends[1]].clone();
            if free_facets.contains(&a.0) && free_facets.contains(&b.0) {
                pairs.push((a, b));
            }
        }
        (pairs, defects)
    }

    /// The depth of every cell (see [`CornerData`]).
    pub fn depths(&self) -> BTreeMap<CellKey, usize> {
        self.corner_data().depth
    }

    /// The depth-`l` stratum: its faces, and the closures of its connected components
    /// as standalone complexes (components sorted by smallest face key).
    pub fn stratum(&self, l: usize) -> Vec<CornerComplex> {
        let data = self.corner_data();
        let faces: Vec<&CellKey> = data
            .depth
            .iter()
            .filter(|(_, d)| **d == l)
            .map(|(k, _)| k)
            .collect();
        let index: BTreeMap<&CellKey, usize> =
            faces.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let mut uf = UnionFind::new(faces.len());
        for (i, k) in faces.iter().enumerate() {
            for (anc, _) in &data.routes[*k] {
                if let Some(&j) = index.get(anc) {
                    uf.union(i, j);
                }
            }
        }
        let mut groups: BTreeMap<usize, BTreeSet<CellKey>> = BTreeMap::new();
        for (i, k) in faces.iter().enumerate() {
            groups.entry(uf.find(i)).or_default().insert((*k).clone());
        }
        let mut comps: Vec<BTreeSet<CellKey>> = groups.into_values().collect();
        comps.sort_by(|a, b| a.iter().next().cmp(&b.iter().next()));
        comps
            .into_iter()
            .map(|seeds| self.subcomplex(&self.closure_of(&seeds)))
            .collect()
    }
}
