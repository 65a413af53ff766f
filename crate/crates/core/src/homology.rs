//! Exact homology of complexes and homology classes of chains.
//!
//! Cellular boundary matrices are assembled from attachment incidence signs; Betti
//! numbers come from exact rational ranks. A [`HomologyBasis`] fixes representative
//! cycles on a parameterized complex so arbitrary cycles supported on its cells can
//! be expressed in coordinates. For torus targets, [`winding_class`] classifies any
//! chain by its exact winding numbers around coordinate subtori — a complete
//! homology invariant there, with no support condition.

use crate::chain::{Chain, ChainGenerator, Target};
use crate::complex::{CellKey, CornerComplex};
use crate::linalg::Matrix;
use crate::scalar::Rat;
use crate::{Error, Result};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;

/// The matrix of the cellular boundary operator from degree `degree` to
/// `degree - 1`, with row/column keys recorded.
#[derive(Clone, Debug)]
pub struct BoundaryMatrix {
    pub degree: usize,
    pub rows: Vec<CellKey>,
    pub cols: Vec<CellKey>,
    pub matrix: Matrix<Rat>,
}

/// The cellular boundary matrices `D_1, ..., D_n` of a valid complex.
pub fn boundary_matrices(cx: &CornerComplex) -> Result<Vec<BoundaryMatrix>> {
    cx.validate()?;
    let Some(n) = cx.dim() else { return Ok(vec![]) };
    let mut out = Vec::new();
    for degree in 1..=n {
        let rows: Vec<CellKey> = cx
            .cells_of_dim(degree - 1)
            .map(|c| c.key.clone())
            .collect();
        let cols: Vec<CellKey> = cx.cells_of_dim(degree).map(|c| c.key.clone()).collect();
        let row_index: BTreeMap<&CellKey, usize> =
            rows.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let col_index: BTreeMap<&CellKey, usize> =
            cols.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut m: Matrix<Rat> = Matrix::zeros(rows.len(), cols.len());
        for att in cx.attachments() {
            let (Some(&i), Some(&j)) = (row_index.get(&att.child), col_index.get(&att.parent))
            else {
                continue;
            };
            let eps = cx.incidence_sign(att);
            let cur = m.at(i, j).clone();
            m.set(i, j, cur + Rat::from_integer(eps.into()));
        }
        out.push(BoundaryMatrix {
            degree,
            rows,
            cols,
            matrix: m,
        });
    }
    Ok(out)
}

/// Betti numbers `b_0, ..., b_n` over the rationals.
pub fn betti(cx: &CornerComplex) -> Result<Vec<usize>> {
    let mats = boundary_matrices(cx)?;
    let Some(n) = cx.dim() else { return Ok(vec![]) };
    let rank: Vec<usize> = mats.iter().map(|bm| bm.matrix.rank()).collect();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let cells = cx.cells_of_dim(i).count();
        let rank_di = if i == 0 { 0 } else { rank[i - 1] };
        let rank_next = if i == n { 0 } else { rank[i] };
        out.push(cells - rank_di - rank_next);
    }
    Ok(out)
}

/// True iff the two complexes have equal Betti sequences (ignoring trailing zeros,
/// so models of different top dimension can still agree).
pub fn compare_models(a: &CornerComplex, b: &CornerComplex) -> Result<bool> {
    let mut ba = betti(a)?;
    let mut bb = betti(b)?;
    while ba.last() == Some(&0) {
        ba.pop();
    }
    while bb.last() == Some(&0) {
        bb.pop();
    }
    Ok(ba == bb)
}

/// Per-degree homology data of a parameterized complex: Betti numbers,
/// integer representative cycles, and the solver used to express classes in
/// coordinates.
pub struct HomologyBasis {
    target: Target,
    gen: ChainGenerator,
    degrees: Vec<DegreeData>,
}

struct DegreeData {
    cells: Vec<CellKey>,
    betti: usize,
    /// Integer representative cycle vectors over `cells`.
    reps: Vec<Vec<Rat>>,
    /// Columns: a basis of the boundary space, then the representatives.
    express: Matrix<Rat>,
    n_image: usize,
    /// The boundary matrix out of this degree (empty for degree 0).
    boundary_out: Matrix<Rat>,
}

impl HomologyBasis {
    /// Builds the basis from a parameterized complex (a generator whose maps are
    /// used when emitting representatives as chains).
    pub fn new(gen: ChainGenerator, target: Target) -> Result<HomologyBasis> {
        gen.complex.validate()?;
        gen.validate(target)?;
        let mats = boundary_matrices(&gen.complex)?;
        let Some(n) = gen.complex.dim() else {
            return Ok(HomologyBasis {
                target,
                gen,
                degrees: vec![],
            });
        };
        let mut degrees = Vec::new();
        for i in 0..=n {
            let cells: Vec<CellKey> = gen
                .complex
                .cells_of_dim(i)
                .map(|c| c.key.clone())
                .collect();
            let boundary_out = if i == 0 {
                Matrix::zeros(0, cells.len())
            } else {
                mats[i - 1].matrix.clone()
            };
            // Cycles: kernel of the outgoing boundary.
            let kernel = boundary_out.kernel_basis();
            // Boundaries: image of the incoming boundary.
            let image_cols: Vec<Vec<Rat>> = if i < n {
                let m = &mats[i].matrix;
                (0..m.ncols()).map(|j| m.col(j)).collect()
            } else {
                vec![]
            };
            // Select a spanning subset of the image, then extend by kernel vectors.
            let mut chosen: Vec<Vec<Rat>> = Vec::new();
            let mut n_image = 0;
            let mut rank = 0;
            for v in &image_cols {
                chosen.push(v.clone());
                let r = Matrix::from_cols_with_rows(chosen.clone(), cells.len()).rank();
                if r > rank {
                    rank = r;
                    n_image += 1;
                } else {
                    chosen.pop();
                }
            }
            let mut reps = Vec::new();
            for v in &kernel {
                chosen.push(v.clone());
                let r = Matrix::from_cols_with_rows(chosen.clone(), cells.len()).rank();
                if r > rank {
                    rank = r;
                    reps.push(integerize(v));
                    let last = chosen.len() - 1;
                    chosen[last] = reps.last().unwrap().clone();
                } else {
                    chosen.pop();
                }
            }
            let betti = reps.len();
            let express = Matrix::from_cols_with_rows(chosen, cells.len());
            degrees.push(DegreeData {
                cells,
                betti,
                reps,
                express,
                n_image,
                boundary_out,
            });
        }
        Ok(HomologyBasis {
            target,
            gen,
            degrees,
        })
    }

    pub fn betti(&self) -> Vec<usize> {
        self.degrees.iter().map(|d| d.betti).collect()
    }

    pub fn target(&self) -> Target {
        self.target
    }

    /// The `j`-th representative cycle in the given degree, as a chain.
    pub fn representative(&self, degree: usize, j: usize) -> Result<Chain> {
        let data = self
            .degrees
            .get(degree)
            .ok_or_else(|| Error::invalid("degree out of range"))?;
        let rep = data
            .reps
            .get(j)
            .ok_or_else(|| Error::invalid("representative index out of range"))?;
        self.chain_from_cell_vector(degree, rep)
    }

    /// Assembles a chain from an integer cell-coefficient vector: each cell
    /// contributes its closure with the inherited maps.
    pub fn chain_from_cell_vector(&self, degree: usize, v: &[Rat]) -> Result<Chain> {
        let data = &self.degrees[degree];
        let mut raw = Vec::new();
        for (coeff, key) in v.iter().zip(&data.cells) {
            if coeff.is_zero() {
                continue;
            }
            if !crate::scalar::is_integral(coeff) {
                return Err(Error::invalid(
                    "cell vector with non-integer coefficients cannot become a chain",
                ));
            }
            let c: i64 = coeff
                .numer()
                .try_into()
                .map_err(|_| Error::invalid("coefficient out of range"))?;
            let keys = self.gen.complex.closure_of(&std::iter::once(key.clone()).collect());
            let complex = self.gen.complex.subcomplex(&keys);
            let maps = keys
                .iter()
                .map(|k| (k.clone(), self.gen.maps[k].clone()))
                .collect();
            raw.push((c, ChainGenerator::new(complex, maps)));
        }
        Ok(Chain::new(self.target, degree, raw))
    }

    /// Coordinates of the class of a cycle supported on this complex's cells,
    /// relative to the representatives of its degree.
    pub fn class_of(&self, z: &Chain) -> Result<Vec<Rat>> {
        if z.target() != self.target {
            return Err(Error::invalid("cycle lives in a different target"));
        }
        let degree = z.degree();
        let data = self
            .degrees
            .get(degree)
            .ok_or_else(|| Error::invalid("degree out of range"))?;
        let v = self.cell_vector(z, degree)?;
        let bv = data.boundary_out.mul_vec(&v);
        if !bv.iter().all(Zero::is_zero) {
            return Err(Error::invalid("class_of needs a cycle (boundary is nonzero)"));
        }
        if data.express.ncols() == 0 {
            if v.iter().all(Zero::is_zero) {
                return Ok(vec![Rat::zero(); data.betti]);
            }
            return Err(Error::invalid("cycle not in the span of the basis"));
        }
        let x = data
            .express
            .solve(&v)
            .ok_or_else(|| Error::invalid("cycle not in the span of the basis"))?;
        Ok(x[data.n_image..].to_vec())
    }

    /// Expresses a chain supported on this complex's cells as a coefficient vector
    /// over the stored orientations of its degree-`degree` cells.
    fn cell_vector(&self, z: &Chain, degree: usize) -> Result<Vec<Rat>> {
        let data = &self.degrees[degree];
        let index: BTreeMap<&CellKey, usize> =
            data.cells.iter().enumerate().map(|(i, k)| (k, i)).collect();
        let mut v = vec![Rat::zero(); data.cells.len()];
        for (coeff, gen) in z.terms() {
            for cell in gen.complex.top_cells() {
                let &i = index.get(&cell.key).ok_or_else(|| {
                    Error::invalid(format!(
                        "cycle cell {} is not a cell of the basis complex",
                        cell.key
                    ))
                })?;
                let home = self.gen.complex.cell(&cell.key);
                if home.poly != cell.poly {
                    return Err(Error::invalid(format!(
                        "cycle cell {} disagrees with the basis complex",
                        cell.key
                    )));
                }
                let rel = i64::from(cell.sign * home.sign);
                v[i] += Rat::from_integer((*coeff * rel).into());
            }
        }
        Ok(v)
    }
}

/// Scales a rational vector to integer entries with content 1, preserving direction.
fn integerize(v: &[Rat]) -> Vec<Rat> {
    let mut lcm = num_bigint::BigInt::one();
    for x in v {
        lcm = num_integer::lcm(lcm, x.denom().clone());
    }
    let scaled: Vec<num_bigint::BigInt> = v
        .iter()
        .map(|x| (x * Rat::from_integer(lcm.clone())).to_integer())
        .collect();
    let mut gcd = num_bigint::BigInt::zero();
    for x in &scaled {
        gcd = num_integer::gcd(gcd, x.abs());
    }
    if gcd.is_zero() {
        gcd = num_bigint::BigInt::one();
    }
    scaled
        .into_iter()
        .map(|x| Rat::from_integer(x / gcd.clone()))
        .collect()
}

/// The exact winding numbers of a torus-target chain: for every coordinate subset
/// `S` of size `degree`, the integral of the pulled-back volume form of the
/// corresponding subtorus.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct WindingClass {
    pub degree: usize,
    pub coords: BTreeMap<Vec<usize>, Rat>,
}

impl WindingClass {
    pub fn is_zero(&self) -> bool {
        self.coords.values().all(Zero::is_zero)
    }
}

impl std::fmt::Display for WindingClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let mut first = true;
        for (s, x) in &self.coords {
            if !first {
                write!(f, " ")?;
            }
            first = false;
            let names: Vec<String> = s.iter().map(|i| i.to_string()).collect();
            write!(f, "w[{}]={}", names.join(","), crate::scalar::fmt_rat(x))?;
        }
        if first {
            write!(f, "trivial")?;
        }
        Ok(())
    }
}

/// Classifies a torus-target chain by winding numbers. For cycles this is a
/// complete homology invariant of the torus.
pub fn winding_class(z: &Chain) -> Result<WindingClass> {
    let Target::Torus(d) = z.target() else {
        return Err(Error::invalid("winding classes need a torus target"));
    };
    let k = z.degree();
    let mut coords: BTreeMap<Vec<usize>, Rat> = BTreeMap::new();
    for s in subsets(d, k) {
        coords.insert(s, Rat::zero());
    }
    for (coeff, gen) in z.terms() {
        for cell in gen.complex.top_cells() {
            let map = gen.map_of(&cell.key);
            let orient = Rat::from_integer((cell.sign * cell.frame_det_sign()).into());
            let vol = cell.poly.volume();
            for (s, acc) in coords.iter_mut() {
                let sub = select_rows(&map.a, s);
                let det = sub.det();
                *acc += Rat::from_integer((*coeff).into()) * &orient * &det * &vol;
            }
        }
    }
    Ok(WindingClass { degree: k, coords })
}

fn select_rows(m: &Matrix<Rat>, rows: &[usize]) -> Matrix<Rat> {
    let picked: Vec<Vec<Rat>> = rows.iter().map(|&i| m.row(i).to_vec()).collect();
    Matrix::from_rows_with_cols(picked, m.ncols())
}

/// All sorted `k`-subsets of `0..d`.
pub fn subsets(d: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, d: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..d {
            cur.push(i);
            rec(i + 1, d, k, cur, out);
            cur.pop();
        }
    }
    rec(0, d, k, &mut cur, &mut out);
    out
}
