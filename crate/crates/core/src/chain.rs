//! Chains of parameterized complexes.
//!
//! A generator is a compact oriented complex together with a piecewise-affine map
//! into a target space (a Euclidean space or a torus), one affine map per cell,
//! compatible along attachments — exactly over Euclidean targets, up to integer
//! translation over tori. Chains are integer combinations of generators, normalized
//! to a canonical form: connected generators, canonical torus lifts, canonical
//! orientation, equal generators merged, terms sorted.
//!
//! The boundary operator sends a generator to the sum of its boundary sheets with
//! induced orientations and restricted maps; it squares to zero on the nose because
//! a sheet of a sheet appears once from each side of a wall, with opposite induced
//! orientations.

use crate::complex::{CellKey, CornerComplex};
use crate::geometry::AffineMap;
use crate::scalar::{rat_floor, Rat};
use crate::{Error, Result};
use std::collections::BTreeMap;

/// The target space of a chain.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Target {
    /// Euclidean space of the given dimension; maps must match exactly along
    /// attachments.
    Euclid(usize),
    /// The torus obtained from Euclidean space by integer translations; maps are
    /// stored as lifts and must match up to integer vectors along attachments.
    Torus(usize),
}

impl Target {
    pub fn ambient_dim(&self) -> usize {
        match self {
            Target::Euclid(d) | Target::Torus(d) => *d,
        }
    }

    /// The product target; both factors must be of the same kind.
    pub fn product(&self, other: &Target) -> Result<Target> {
        match (self, other) {
            (Target::Euclid(a), Target::Euclid(b)) => Ok(Target::Euclid(a + b)),
            (Target::Torus(a), Target::Torus(b)) => Ok(Target::Torus(a + b)),
            _ => Err(Error::invalid("cannot mix Euclidean and torus targets")),
        }
    }

    pub fn is_torus(&self) -> bool {
        matches!(self, Target::Torus(_))
    }
}

/// One generator: an oriented complex with a piecewise-affine map into the target.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ChainGenerator {
    pub complex: CornerComplex,
    pub maps: BTreeMap<CellKey, AffineMap>,
}

impl PartialOrd for ChainGenerator {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ChainGenerator {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.complex
            .cmp(&other.complex)
            .then_with(|| self.maps.iter().cmp(other.maps.iter()))
    }
}

impl ChainGenerator {
    pub fn new(complex: CornerComplex, maps: BTreeMap<CellKey, AffineMap>) -> Self {
        ChainGenerator { complex, maps }
    }

    /// Builds a generator from maps on the top cells only, deriving every lower
    /// cell's map through its first attachment route and checking the rest for
    /// compatibility.
    pub fn from_top_maps(
        complex: CornerComplex,
        top_maps: BTreeMap<CellKey, AffineMap>,
        target: Target,
    ) -> Result<Self> {
        let Some(n) = complex.dim() else {
            return Ok(ChainGenerator::new(complex, BTreeMap::new()));
        };
        let mut maps: BTreeMap<CellKey, AffineMap> = BTreeMap::new();
        for cell in complex.cells_of_dim(n) {
            let m = top_maps
                .get(&cell.key)
                .ok_or_else(|| Error::invalid(format!("no map for top cell {}", cell.key)))?;
            if m.dom_dim() != n || m.cod_dim() != target.ambient_dim() {
                return Err(Error::invalid(format!(
                    "map for {} has wrong dimensions",
                    cell.key
                )));
            }
            maps.insert(cell.key.clone(), m.clone());
        }
        // Descend dimension by dimension; the first (smallest) attachment fixes the
        // map, the remaining ones are checked by `validate`.
        for d in (0..n).rev() {
            for cell in complex.cells_of_dim(d) {
                let att = complex
                    .attachments_of_child(&cell.key)
                    .next()
                    .ok_or_else(|| {
                        Error::invalid(format!("cell {} has no attachment", cell.key))
                    })?;
                let parent_map = maps
                    .get(&att.parent)
                    .ok_or_else(|| Error::invalid(format!("cell {} out of order", cell.key)))?
                    .clone();
                maps.insert(cell.key.clone(), parent_map.compose(&att.map));
            }
        }
        let gen = ChainGenerator::new(complex, maps);
        gen.validate(target)?;
        Ok(gen)
    }

    pub fn dim(&self) -> Option<usize> {
        self.complex.dim()
    }

    pub fn map_of(&self, key: &CellKey) -> &AffineMap {
        &self.maps[key]
    }

    /// Checks every cell has a map of matching dimensions and that maps agree along
    /// attachments (exactly, or up to integer vectors over a torus).
    pub fn validate(&self, target: Target) -> Result<()> {
        for cell in self.complex.cells() {
            let m = self.maps.get(&cell.key).ok_or_else(|| {
                Error::invalid(format!("cell {} has no map into the target", cell.key))
            })?;
            if m.dom_dim() != cell.dim() || m.cod_dim() != target.ambient_dim() {
                return Err(Error::invalid(format!(
                    "map for {} has wrong dimensions",
                    cell.key
                )));
            }
        }
        for att in self.complex.attachments() {
            let via_parent = self.maps[&att.parent].compose(&att.map);
            let direct = &self.maps[&att.child];
            let ok = match target {
                Target::Euclid(_) => via_parent == *direct,
                Target::Torus(_) => {
                    via_parent.a == direct.a
                        && via_parent
                            .b
                            .iter()
                            .zip(direct.b.iter())
                            .all(|(x, y)| crate::scalar::is_integral(&(x - y)))
                }
            };
            if !ok {
                return Err(Error::invalid(format!(
                    "maps disagree along attachment {} -> {}",
                    att.child, att.parent
                )));
            }
        }
        Ok(())
    }

    /// Splits into connected components with restricted maps.
    pub fn components(&self) -> Vec<ChainGenerator> {
        self.complex
            .connected_components()
            .into_iter()
            .map(|keys| {
                let complex = self.complex.subcomplex(&keys);
                let maps = keys
                    .iter()
                    .map(|k| (k.clone(), self.maps[k].clone()))
                    .collect();
                ChainGenerator::new(complex, maps)
            })
            .collect()
    }

    /// Over a torus, replaces each cell's lift by the canonical one: the value at
    /// the cell's first listed vertex is shifted into `[0,1)` in every coordinate.
    fn canonicalize_lifts(&mut self, target: Target) {
        if !target.is_torus() {
            return;
        }
        for (key, map) in self.maps.iter_mut() {
            let cell = self.complex.cell(key);
            let v0 = &cell.poly.verts()[0];
            let value = map.apply(v0);
            for (i, x) in value.iter().enumerate() {
                map.b[i] -= Rat::from_integer(rat_floor(x));
            }
        }
    }

    /// Flips to the canonical orientation (lexicographically smallest top cell
    /// positive); returns the sign picked up by the coefficient.
    fn canonical_oriented(mut self) -> (Self, i64) {
        let flip = match self.complex.lex_min_top_cell() {
            Some(cell) => cell.sign < 0,
            None => false,
        };
        if flip {
            self.complex = self.complex.reverse();
            (self, -1)
        } else {
            (self, 1)
        }
    }

    /// The product generator over the product target.
    pub fn product(&self, other: &ChainGenerator) -> ChainGenerator {
        let complex = self.complex.product(&other.complex);
        let mut maps = BTreeMap::new();
        for (ka, ma) in &self.maps {
            for (kb, mb) in &other.maps {
                maps.insert(CellKey::pair(ka, kb), ma.block_sum(mb));
            }
        }
        ChainGenerator::new(complex, maps)
    }

    /// The same generator with reversed orientation.
    pub fn reverse(&self) -> ChainGenerator {
        ChainGenerator::new(self.complex.reverse(), self.maps.clone())
    }
}

/// An integer combination of generators of a fixed degree into a fixed target,
/// kept in canonical normal form.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Chain {
    target: Target,
    degree: usize,
    terms: Vec<(i64, ChainGenerator)>,
}

impl Chain {
    pub fn zero(target: Target, degree: usize) -> Chain {
        Chain {
            target,
            degree,
            terms: vec![],
        }
    }

    /// Builds and normalizes a chain from raw terms.
    pub fn new(target: Target, degree: usize, raw: Vec<(i64, ChainGenerator)>) -> Chain {
        let mut split: Vec<(i64, ChainGenerator)> = Vec::new();
        for (coeff, gen) in raw {
            if coeff == 0 || gen.complex.is_empty() {
                continue;
            }
            for mut comp in gen.components() {
                comp.canonicalize_lifts(target);
                let (comp, sign) = comp.canonical_oriented();
                split.push((coeff * sign, comp));
            }
        }
        split.sort_by(|a, b| a.1.cmp(&b.1));
        let mut terms: Vec<(i64, ChainGenerator)> = Vec::new();
        for (coeff, gen) in split {
            match terms.last_mut() {
                Some((c, g)) if *g == gen => *c += coeff,
                _ => terms.push((coeff, gen)),
            }
        }
        terms.retain(|(c, _)| *c != 0);
        Chain {
            target,
            degree,
            terms,
        }
    }

    /// A chain with a single generator of coefficient one.
    pub fn from_generator(target: Target, gen: ChainGenerator) -> Chain {
        let degree = gen.dim().unwrap_or(0);
        Chain::new(target, degree, vec![(1, gen)])
    }

    pub fn target(&self) -> Target {
        self.target
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn terms(&self) -> &[(i64, ChainGenerator)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Structural and map validity of every generator, plus degree homogeneity.
    pub fn validate(&self) -> Result<()> {
        for (_, gen) in &self.terms {
            gen.complex.validate()?;
            gen.validate(self.target)?;
            if gen.dim() != Some(self.degree) {
                return Err(Error::invalid(format!(
                    "generator of dimension {:?} in a chain of degree {}",
                    gen.dim(),
                    self.degree
                )));
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Chain) -> Result<Chain> {
        if self.target != other.target {
            return Err(Error::invalid("cannot add chains into different targets"));
        }
        if !self.is_zero() && !other.is_zero() && self.degree != other.degree {
            return Err(Error::invalid("cannot add chains of different degrees"));
        }
        let degree = if self.is_zero() { other.degree } else { self.degree };
        let mut raw = self.terms.clone();
        raw.extend(other.terms.iter().cloned());
        Ok(Chain::new(self.target, degree, raw))
    }

    pub fn neg(&self) -> Chain {
        self.scaled(-1)
    }

    pub fn scaled(&self, k: i64) -> Chain {
        let raw = self
            .terms
            .iter()
            .map(|(c, g)| (c * k, g.clone()))
            .collect();
        Chain::new(self.target, self.degree, raw)
    }

    pub fn sub(&self, other: &Chain) -> Result<Chain> {
        self.add(&other.neg())
    }

    /// The boundary: each generator contributes its boundary sheets with induced
    /// orientations and restricted maps.
    pub fn boundary(&self) -> Chain {
        let mut raw = Vec::new();
        for (coeff, gen) in &self.terms {
            for comp in gen.complex.boundary_components() {
                let maps = comp
                    .complex
                    .keys()
                    .map(|k| (k.clone(), gen.maps[k].clone()))
                    .collect();
                raw.push((*coeff, ChainGenerator::new(comp.complex, maps)));
            }
        }
        Chain::new(self.target, self.degree.saturating_sub(1), raw)
    }

    /// The chain with every generator map translated by `v` in the target.
    /// Over a torus this produces a homologous representative of the same class.
    pub fn translated(&self, v: &[Rat]) -> Chain {
        let raw = self
            .terms
            .iter()
            .map(|(c, g)| {
                let maps = g
                    .maps
                    .iter()
                    .map(|(k, m)| (k.clone(), m.translated(v)))
                    .collect();
                (*c, ChainGenerator::new(g.complex.clone(), maps))
            })
            .collect();
        Chain::new(self.target, self.degree, raw)
    }

    /// The cross product of chains, into the product target.
    pub fn cross(&self, other: &Chain) -> Result<Chain> {
        let target = self.target.product(&other.target)?;
        let mut raw = Vec::new();
        for (ca, ga) in &self.terms {
            for (cb, gb) in &other.terms {
                raw.push((ca * cb, ga.product(gb)));
            }
        }
        Ok(Chain::new(target, self.degree + other.degree, raw))
    }

    /// The signed number of points of a degree-0 chain (coefficient times
    /// orientation sign, summed over all point cells).
    pub fn signed_point_count(&self) -> i64 {
        let mut total = 0i64;
        for (coeff, gen) in &self.terms {
            for cell in gen.complex.cells_of_dim(0) {
                if gen.complex.dim() == Some(0) {
                    total += coeff * i64::from(cell.sign);
                }
            }
        }
        total
    }
}

/// The fundamental chain of the `d`-torus built from products of two-arc circles,
/// mapped by the identity (each circle runs once around its own coordinate).
pub fn torus_fundamental_chain(d: usize) -> Chain {
    let complex = crate::complex::torus(d);
    let maps = complex
        .cells()
        .map(|cell| (cell.key.clone(), torus_cell_map(&cell.key, d)))
        .collect();
    Chain::from_generator(
        Target::Torus(d),
        ChainGenerator::new(complex, maps),
    )
}

/// The canonical chart-to-torus map of a cell of [`crate::complex::torus`]: each
/// circle factor's arcs already use the target coordinate, so the map is the
/// identity on edge coordinates and the constant vertex position elsewhere.
fn torus_cell_map(key: &CellKey, d: usize) -> AffineMap {
    // Collect the circle-factor keys left to right.
    fn factors<'a>(key: &'a CellKey, out: &mut Vec<&'a CellKey>) {
        match key {
            CellKey::Pair(a, b) => {
                factors(a, out);
                factors(b, out);
            }
            other => out.push(other),
        }
    }
    let mut leaves = Vec::new();
    factors(key, &mut leaves);
    assert_eq!(leaves.len(), d, "not a cell of the {d}-torus");
    let mut blocks = Vec::new();
    for leaf in leaves {
        let CellKey::Atom(name) = leaf else {
            panic!("unexpected torus cell key")
        };
        let block = match name.rsplit('.').next() {
            Some("e0") | Some("e1") => AffineMap::identity(1),
            Some("v0") => AffineMap::constant(0, vec![crate::scalar::rat_int(0)]),
            Some("v1") => AffineMap::constant(0, vec![crate::scalar::rat(1, 2)]),
            _ => panic!("unexpected torus cell name {name}"),
        };
        blocks.push(block);
    }
    let mut map = AffineMap::identity(0);
    for b in blocks {
        map = map.block_sum(&b);
    }
    map
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{boundary_of_top, circle, cube, delta_torus, segment, CellKey};
    use crate::geometry::AffineMap;
    use crate::scalar::{rat, rat_int};

    /// The solid cube in Euclidean space, mapped by the chart identity.
    fn cube_chain(d: usize) -> Chain {
        let complex = cube(d);
        let maps = complex
            .cells()
            .map(|cell| {
                let m = identity_into(cell, d);
                (cell.key.clone(), m)
            })
            .collect();
        Chain::from_generator(Target::Euclid(d), ChainGenerator::new(complex, maps))
    }

    /// The natural inclusion of a cube-complex face into ambient `R^d`: identity on
    /// surviving axes, the fixed endpoint on collapsed ones (read off the cell key).
    fn identity_into(cell: &crate::complex::Cell, d: usize) -> AffineMap {
        fn leaf_names(key: &CellKey, out: &mut Vec<String>) {
            match key {
                CellKey::Pair(a, b) => {
                    leaf_names(a, out);
                    leaf_names(b, out);
                }
                CellKey::Atom(s) => out.push(s.clone()),
                _ => panic!("unexpected key"),
            }
        }
        let mut names = Vec::new();
        leaf_names(&cell.key, &mut names);
        assert_eq!(names.len(), d);
        let mut map = AffineMap::identity(0);
        for n in &names {
            let block = if n.contains('.') {
                let fixed = if n.ends_with(".0") { 0 } else { 1 };
                AffineMap::constant(0, vec![rat_int(fixed)])
            } else {
                AffineMap::identity(1)
            };
            map = map.block_sum(&block);
        }
        map
    }

    #[test]
    fn torus_fundamental_chain_is_valid_and_closed() {
        for d in 1..=3 {
            let c = torus_fundamental_chain(d);
            c.validate().unwrap();
            assert_eq!(c.degree(), d);
            assert_eq!(c.terms().len(), 1);
            assert!(c.boundary().is_zero(), "d = {d}");
        }
    }

    #[test]
    fn delta_torus_chain_is_closed() {
        let complex = delta_torus();
        let mut tops = BTreeMap::new();
        tops.insert(CellKey::atom("U"), AffineMap::identity(2));
        tops.insert(CellKey::atom("L"), AffineMap::identity(2));
        let gen =
            ChainGenerator::from_top_maps(complex, tops, Target::Torus(2)).unwrap();
        let chain = Chain::from_generator(Target::Torus(2), gen);
        chain.validate().unwrap();
        assert!(chain.boundary().is_zero());
    }

    #[test]
    fn boundary_squares_to_zero_on_solid_bodies() {
        for d in 1..=3 {
            let c = cube_chain(d);
            c.validate().unwrap();
            let dc = c.boundary();
            dc.validate().unwrap();
            assert_eq!(dc.degree(), d - 1);
            assert!(!dc.is_zero());
            assert!(dc.boundary().is_zero(), "d = {d}");
        }
    }

    #[test]
    fn boundary_of_interval_is_signed_endpoints() {
        let complex = segment("t", rat_int(0), rat_int(1));
        let mut tops = BTreeMap::new();
        tops.insert(CellKey::atom("t"), AffineMap::identity(1));
        let gen = ChainGenerator::from_top_maps(complex, tops, Target::Euclid(1)).unwrap();
        let chain = Chain::from_generator(Target::Euclid(1), gen);
        let b = chain.boundary();
        assert_eq!(b.terms().len(), 2);
        assert_eq!(b.signed_point_count(), 0);
        // One endpoint negative (at 0), one positive (at 1).
        let values: Vec<(i64, i8, crate::scalar::Rat)> = b
            .terms()
            .iter()
            .map(|(c, g)| {
                let cell = g.complex.top_cells()[0];
                (*c, cell.sign, g.map_of(&cell.key).b[0].clone())
            })
            .collect();
        // Normalization pushes orientation signs into coefficients.
        assert!(values
            .iter()
            .any(|(c, s, v)| *c == -1 && *s == 1 && *v == rat_int(0)));
        assert!(values
            .iter()
            .any(|(c, s, v)| *c == 1 && *s == 1 && *v == rat_int(1)));
    }

    #[test]
    fn opposite_orientation_cancels() {
        let c = cube_chain(2);
        let (_, gen) = &c.terms()[0];
        let reversed = Chain::from_generator(Target::Euclid(2), gen.reverse());
        let sum = c.add(&reversed).unwrap();
        assert!(sum.is_zero());
        // And the reversed generator normalizes to coefficient -1 on the original.
        assert_eq!(reversed, c.neg());
    }

    #[test]
    fn leibniz_rule_is_exact() {
        let a = cube_chain(2);
        let b = torus_fundamental_chain(1);
        // Mixed targets cannot cross.
        assert!(a.cross(&b).is_err());

        let t1 = torus_fundamental_chain(1);
        let t2 = torus_fundamental_chain(2);
        let prod = t1.cross(&t2).unwrap();
        assert!(prod.boundary().is_zero());

        // A case with nonzero boundary on both sides: interval x interval.
        let i1 = cube_chain(1);
        let i2 = cube_chain(2);
        let prod = i1.cross(&i2).unwrap();
        let lhs = prod.boundary();
        let rhs = i1
            .boundary()
            .cross(&i2)
            .unwrap()
            .add(&i1.cross(&i2.boundary()).unwrap().scaled(-1))
            .unwrap();
        // dim(i1) = 1, so the second term carries (-1)^1.
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn torus_lifts_are_canonicalized_per_cell() {
        let complex = crate::complex::torus(1);
        let mut maps = BTreeMap::new();
        for cell in complex.cells() {
            let mut m = torus_cell_map(&cell.key, 1);
            // Perturb the lift by an integer; normalization must undo it.
            m.b[0] += rat_int(7);
            maps.insert(cell.key.clone(), m);
        }
        let shifted = Chain::from_generator(
            Target::Torus(1),
            ChainGenerator::new(complex, maps),
        );
        assert_eq!(shifted, torus_fundamental_chain(1));
    }

    #[test]
    fn sphere_chain_from_cube_boundary_is_closed() {
        let sphere = boundary_of_top(&cube(3)).unwrap();
        let maps = sphere
            .cells()
            .map(|cell| (cell.key.clone(), identity_into(cell, 3)))
            .collect();
        let gen = ChainGenerator::new(sphere, maps);
        let chain = Chain::from_generator(Target::Euclid(3), gen);
        chain.validate().unwrap();
        assert!(chain.boundary().is_zero());
    }

    #[test]
    fn winding_two_circle_chain() {
        // One circle mapped at double speed: t -> 2t on each arc.
        let complex = circle("c");
        let mut tops = BTreeMap::new();
        let double = AffineMap::from_rows(vec![vec![rat_int(2)]], vec![rat_int(0)]);
        tops.insert(CellKey::atom("c.e0"), double.clone());
        tops.insert(CellKey::atom("c.e1"), double);
        let gen = ChainGenerator::from_top_maps(complex, tops, Target::Torus(1)).unwrap();
        let chain = Chain::from_generator(Target::Torus(1), gen);
        chain.validate().unwrap();
        assert!(chain.boundary().is_zero());
        // It is a genuinely different chain from the winding-one circle.
        assert_ne!(chain, torus_fundamental_chain(1));
        let _ = rat(1, 2);
    }
}
