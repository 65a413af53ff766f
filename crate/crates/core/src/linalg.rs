//! Exact dense linear algebra over a generic [`Scalar`].
//!
//! Sizes here are small (cell counts of desk-scale complexes), so the implementation
//! favors exactness and determinism over asymptotics: rank and determinants use
//! fraction-free (Bareiss-style) elimination with a fixed pivot rule — the pivot is the
//! first nonzero entry scanning rows by ascending index, then columns by ascending
//! index — and reduced echelon form drives kernels and solving.

use crate::scalar::Scalar;

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Matrix<S> {
    rows: Vec<Vec<S>>,
    ncols: usize,
}

impl<S: Scalar> Matrix<S> {
    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Matrix { rows, ncols }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Matrix {
            rows: vec![vec![S::zero(); ncols]; nrows],
            ncols,
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.rows[i][i] = S::one();
        }
        m
    }

    pub fn from_cols(cols: Vec<Vec<S>>) -> Self {
        let nrows = cols.first().map_or(0, Vec::len);
        assert!(cols.iter().all(|c| c.len() == nrows), "ragged columns");
        let mut m = Self::zeros(nrows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.rows[i][j] = v.clone();
            }
        }
        m
    }

    /// Like [`Matrix::from_rows`], but with an explicit column count so an empty row
    /// list still carries its dimension.
    pub fn from_rows_with_cols(rows: Vec<Vec<S>>, ncols: usize) -> Self {
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged rows");
        Matrix { rows, ncols }
    }

    /// Like [`Matrix::from_cols`], but with an explicit row count so an empty column
    /// list still carries its dimension.
    pub fn from_cols_with_rows(cols: Vec<Vec<S>>, nrows: usize) -> Self {
        assert!(cols.iter().all(|c| c.len() == nrows), "ragged columns");
        let mut m = Self::zeros(nrows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for (i, v) in col.iter().enumerate() {
                m.rows[i][j] = v.clone();
            }
        }
        m
    }

    /// The inverse of a square matrix, or `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.nrows(), self.ncols(), "inverse needs a square matrix");
        let n = self.nrows();
        let (r, pivots) = self.hstack(&Self::identity(n)).rref();
        if pivots.len() != n || pivots.iter().enumerate().any(|(i, &p)| p != i) {
            return None;
        }
        let mut inv = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv.rows[i][j] = r.rows[i][n + j].clone();
            }
        }
        Some(inv)
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn at(&self, i: usize, j: usize) -> &S {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.rows[i][j] = v;
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> Vec<S> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.ncols, self.nrows());
        for (i, row) in self.rows.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                t.rows[j][i] = v.clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows(), "dimension mismatch in mul");
        let mut out = Self::zeros(self.nrows(), other.ncols());
        for i in 0..self.nrows() {
            for k in 0..self.ncols {
                let a = &self.rows[i][k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.ncols {
                    let add = a.clone() * other.rows[k][j].clone();
                    out.rows[i][j] = out.rows[i][j].clone() + add;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.ncols, v.len(), "dimension mismatch in mul_vec");
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (a, b)| acc + a.clone() * b.clone())
            })
            .collect()
    }

    /// Stacks `other` below `self`.
    pub fn vstack(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.ncols);
        let mut rows = self.rows.clone();
        rows.extend(other.rows.clone());
        Matrix {
            rows,
            ncols: self.ncols,
        }
    }

    /// Places `other` to the right of `self`.
    pub fn hstack(&self, other: &Self) -> Self {
        assert_eq!(self.nrows(), other.nrows());
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let mut r = a.clone();
                r.extend(b.iter().cloned());
                r
            })
            .collect();
        Matrix {
            rows,
            ncols: self.ncols + other.ncols,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|v| v.is_zero()))
    }

    /// Rank by fraction-free elimination with the deterministic pivot rule:
    /// among the remaining rows the one with the smallest index that contains a nonzero
    /// entry in an unused column, then the smallest such column within it.
    pub fn rank(&self) -> usize {
        let mut m = self.rows.clone();
        let nrows = m.len();
        let ncols = self.ncols;
        let mut col_used = vec![false; ncols];
        let mut prev = S::one();
        let mut r = 0;
        while r < nrows {
            let mut pivot: Option<(usize, usize)> = None;
            'search: for i in r..nrows {
                for j in 0..ncols {
                    if !col_used[j] && !m[i][j].is_zero() {
                        pivot = Some((i, j));
                        break 'search;
                    }
                }
            }
            let Some((pi, pj)) = pivot else { break };
            m.swap(r, pi);
            let piv = m[r][pj].clone();
            for i in (r + 1)..nrows {
                let factor = m[i][pj].clone();
                for j in 0..ncols {
                    if j == pj {
                        continue;
                    }
                    let num = piv.clone() * m[i][j].clone() - factor.clone() * m[r][j].clone();
                    m[i][j] = num / prev.clone();
                }
                m[i][pj] = S::zero();
            }
            col_used[pj] = true;
            prev = piv;
            r += 1;
        }
        r
    }

    /// Determinant of a square matrix by fraction-free elimination.
    pub fn det(&self) -> S {
        assert_eq!(self.nrows(), self.ncols, "det of a non-square matrix");
        let n = self.nrows();
        if n == 0 {
            return S::one();
        }
        let mut m = self.rows.clone();
        let mut prev = S::one();
        let mut sign_flip = false;
        for k in 0..n {
            let pivot_row = (k..n).find(|&i| !m[i][k].is_zero());
            let Some(pi) = pivot_row else {
                return S::zero();
            };
            if pi != k {
                m.swap(k, pi);
                sign_flip = !sign_flip;
            }
            let piv = m[k][k].clone();
            for i in (k + 1)..n {
                let factor = m[i][k].clone();
                for j in (k + 1)..n {
                    let num = piv.clone() * m[i][j].clone() - factor.clone() * m[k][j].clone();
                    m[i][j] = num / prev.clone();
                }
                m[i][k] = S::zero();
            }
            prev = piv;
        }
        let d = m[n - 1][n - 1].clone();
        if sign_flip {
            -d
        } else {
            d
        }
    }

    /// Sign of the determinant: `-1`, `0` or `1`.
    pub fn det_sign(&self) -> i8 {
        let d = self.det();
        if d.is_zero() {
            0
        } else if d.is_positive() {
            1
        } else {
            -1
        }
    }

    /// Reduced row echelon form; returns the reduced matrix together with the pivot
    /// column of each pivot row, in order.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.rows.clone();
        let nrows = m.len();
        let ncols = self.ncols;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..ncols {
            if r == nrows {
                break;
            }
            let Some(pi) = (r..nrows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, pi);
            let piv = m[r][c].clone();
            for v in m[r].iter_mut() {
                *v = v.clone() / piv.clone();
            }
            for i in 0..nrows {
                if i == r || m[i][c].is_zero() {
                    continue;
                }
                let factor = m[i][c].clone();
                for j in 0..ncols {
                    let sub = factor.clone() * m[r][j].clone();
                    m[i][j] = m[i][j].clone() - sub;
                }
            }
            pivots.push(c);
            r += 1;
        }
        (
            Matrix {
                rows: m,
                ncols: self.ncols,
            },
            pivots,
        )
    }

    /// Basis of the right kernel, one vector per free column, ordered by column index.
    pub fn kernel_basis(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let ncols = self.ncols;
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; ncols];
            for &c in &pivots {
                v[c] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for j in 0..ncols {
            if is_pivot[j] {
                continue;
            }
            let mut vec = vec![S::zero(); ncols];
            vec[j] = S::one();
            for (row, &pc) in pivots.iter().enumerate() {
                vec[pc] = -r.rows[row][j].clone();
            }
            basis.push(vec);
        }
        basis
    }

    /// A particular solution of `self * x = b`, with free variables set to zero.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        assert_eq!(self.nrows(), b.len(), "dimension mismatch in solve");
        let aug = self.hstack(&Matrix::from_cols(vec![b.to_vec()]));
        let (r, pivots) = aug.rref();
        // A pivot in the augmented column means inconsistency.
        if pivots.last() == Some(&self.ncols) {
            return None;
        }
        let mut x = vec![S::zero(); self.ncols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r.rows[row][self.ncols].clone();
        }
        Some(x)
    }

    /// Particular solution plus kernel basis: the full affine solution set of
    /// `self * x = b`, or `None` when inconsistent.
    pub fn solve_affine(&self, b: &[S]) -> Option<(Vec<S>, Vec<Vec<S>>)> {
        let part = self.solve(b)?;
        Some((part, self.kernel_basis()))
    }
}

// ---------------------------------------------------------------------------
// Integer lattices
// ---------------------------------------------------------------------------

/// A Smith decomposition `left * a * right = diag(divisors)` of an integer
/// matrix, with `left` and `right` unimodular.  Divisors are nonnegative and
/// listed in divisibility order; `rank` counts the nonzero ones.
///
/// The factors make the two lattice questions of this crate mechanical: the
/// column lattice of `a` is saturated (primitive) exactly when every divisor
/// is `1`, and for such `a` a rational `z` lies in `col-span(a) + Z^m` exactly
/// when the tail entries `(left * z)[rank..]` are integers, in which case
/// `y = right * (left * z)[..rank]` solves `a * y = z (mod Z^m)`.
#[derive(Clone, Debug)]
pub struct Smith {
    pub rank: usize,
    pub divisors: Vec<num_bigint::BigInt>,
    pub left: Matrix<crate::scalar::Rat>,
    pub right: Matrix<crate::scalar::Rat>,
}

/// Smith normal form of an integer matrix given as rational rows (entries must
/// be integers; `ncols` disambiguates the empty-row case).
pub fn smith(a: &Matrix<crate::scalar::Rat>) -> Smith {
    use num_bigint::BigInt;
    use num_traits::{Signed, Zero as _};
    let (m, n) = (a.nrows(), a.ncols());
    let big = |r: &crate::scalar::Rat| -> BigInt {
        assert!(r.is_integer(), "smith needs integer entries");
        r.to_integer()
    };
    let mut w: Vec<Vec<BigInt>> = a.rows().iter().map(|r| r.iter().map(big).collect()).collect();
    let ident = |k: usize| -> Vec<Vec<BigInt>> {
        (0..k)
            .map(|i| (0..k).map(|j| BigInt::from((i == j) as i64)).collect())
            .collect()
    };
    let mut left = ident(m);
    let mut right = ident(n);
    let mut t = 0;
    while t < m.min(n) {
        // Pick the smallest nonzero entry of the remaining block as pivot.
        let mut pivot: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if !w[i][j].is_zero()
                    && pivot
                        .map(|(pi, pj)| w[i][j].abs() < w[pi][pj].abs())
                        .unwrap_or(true)
                {
                    pivot = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = pivot else { break };
        w.swap(t, pi);
        left.swap(t, pi);
        for row in w.iter_mut() {
            row.swap(t, pj);
        }
        for row in right.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..m {
                if !w[i][t].is_zero() {
                    let q = num_integer::Integer::div_floor(&w[i][t], &w[t][t]);
                    if !q.is_zero() {
                        for j in 0..n {
                            let s = &q * &w[t][j];
                            w[i][j] -= s;
                        }
                        for j in 0..m {
                            let s = &q * &left[t][j];
                            left[i][j] -= s;
                        }
                    }
                    if !w[i][t].is_zero() {
                        w.swap(t, i);
                        left.swap(t, i);
                        dirty = true;
                    }
                }
            }
            for j in t + 1..n {
                if !w[t][j].is_zero() {
                    let q = num_integer::Integer::div_floor(&w[t][j], &w[t][t]);
                    if !q.is_zero() {
                        for row in w.iter_mut() {
                            let s = &q * &row[t];
                            row[j] -= s;
                        }
                        for row in right.iter_mut() {
                            let s = &q * &row[t];
                            row[j] -= s;
                        }
                    }
                    if !w[t][j].is_zero() {
                        for row in w.iter_mut() {
                            row.swap(t, j);
                        }
                        for row in right.iter_mut() {
                            row.swap(t, j);
                        }
                        dirty = true;
                    }
                }
            }
            if !dirty {
                break;
            }
        }
        t += 1;
    }
    // Positive divisors.
    for i in 0..m.min(n) {
        if w[i][i].is_negative() {
            for j in 0..n {
                w[i][j] = -w[i][j].clone();
            }
            for j in 0..m {
                left[i][j] = -left[i][j].clone();
            }
        }
    }
    // Divisibility chain: fold each bad pair back through a reduction round.
    loop {
        let mut fixed = true;
        for i in 0..m.min(n).saturating_sub(1) {
            if !w[i][i].is_zero()
                && !w[i + 1][i + 1].is_zero()
                && !(&w[i + 1][i + 1] % &w[i][i]).is_zero()
            {
                // Merge column i+1 into column i and re-diagonalize the pair.
                for row in w.iter_mut() {
                    let s = row[i + 1].clone();
                    row[i] += s;
                }
                for row in right.iter_mut() {
                    let s = row[i + 1].clone();
                    row[i] += s;
                }
                let a = w[i][i].clone();
                let b = w[i + 1][i].clone();
                let g = num_integer::Integer::extended_gcd(&a, &b);
                // g.gcd = g.x * a + g.y * b; rewrite rows i and i+1.
                let (x, y) = (g.x, g.y);
                let (u, v) = (&a / &g.gcd, &b / &g.gcd);
                let (wi, wi1) = (w[i].clone(), w[i + 1].clone());
                let (li, li1) = (left[i].clone(), left[i + 1].clone());
                for j in 0..n {
                    w[i][j] = &x * &wi[j] + &y * &wi1[j];
                    w[i + 1][j] = -&v * &wi[j] + &u * &wi1[j];
                }
                for j in 0..m {
                    left[i][j] = &x * &li[j] + &y * &li1[j];
                    left[i + 1][j] = -&v * &li[j] + &u * &li1[j];
                }
                // Clear the leftover entry in column i+1 of row i.
                let q = crate::scalar::Rat::new(w[i][i + 1].clone(), w[i][i].clone());
                assert!(q.is_integer());
                let q = q.to_integer();
                if !q.is_zero() {
                    for row in w.iter_mut() {
                        let s = &q * &row[i];
                        row[i + 1] -= s;
                    }
                    for row in right.iter_mut() {
                        let s = &q * &row[i];
                        row[i + 1] -= s;
                    }
                }
                fixed = false;
            }
        }
        if fixed {
            break;
        }
    }
    let rank = (0..m.min(n)).take_while(|&i| !w[i][i].is_zero()).count();
    let divisors: Vec<BigInt> = (0..m.min(n)).map(|i| w[i][i].clone()).collect();
    let to_rat = |rows: Vec<Vec<BigInt>>| -> Matrix<crate::scalar::Rat> {
        let k = rows.len();
        Matrix::from_rows_with_cols(
            rows.into_iter()
                .map(|r| r.into_iter().map(crate::scalar::Rat::from_integer).collect())
                .collect(),
            k,
        )
    };
    Smith {
        rank,
        divisors,
        left: to_rat(left),
        right: to_rat(right),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{rat, rat_int, Rat};
    use num_traits::{Signed, Zero};

    fn m(rows: &[&[i64]]) -> Matrix<Rat> {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat_int(v)).collect())
                .collect(),
        )
    }

    #[test]
    fn rank_of_known_matrices() {
        assert_eq!(m(&[&[1, 2], &[2, 4]]).rank(), 1);
        assert_eq!(m(&[&[1, 2], &[3, 4]]).rank(), 2);
        assert_eq!(m(&[&[0, 0], &[0, 0]]).rank(), 0);
        assert_eq!(m(&[&[1, 2, 3], &[4, 5, 6], &[7, 8, 9]]).rank(), 2);
        assert_eq!(Matrix::<Rat>::identity(5).rank(), 5);
    }

    #[test]
    fn det_matches_cofactor_values() {
        assert_eq!(m(&[&[1, 2], &[3, 4]]).det(), rat_int(-2));
        assert_eq!(m(&[&[2, 0, 0], &[0, 3, 0], &[0, 0, 5]]).det(), rat_int(30));
        assert_eq!(m(&[&[1, 2], &[2, 4]]).det(), rat_int(0));
        assert_eq!(
            m(&[&[0, 1, 0], &[1, 0, 0], &[0, 0, 1]]).det(),
            rat_int(-1),
            "row swap flips the sign"
        );
    }

    #[test]
    fn rank_is_generic_over_floats() {
        let f = Matrix::<f64>::from_rows(vec![vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert_eq!(f.rank(), 1);
    }

    #[test]
    fn kernel_and_solve() {
        let a = m(&[&[1, 2, 3], &[4, 5, 6]]);
        let k = a.kernel_basis();
        assert_eq!(k.len(), 1);
        for v in &k {
            assert!(a.mul_vec(v).iter().all(|x| x.is_zero()));
        }
        let b = vec![rat_int(6), rat_int(15)];
        let x = a.solve(&b).unwrap();
        assert_eq!(a.mul_vec(&x), b);
        // Inconsistent system.
        let a2 = m(&[&[1, 1], &[1, 1]]);
        assert!(a2.solve(&[rat_int(0), rat_int(1)]).is_none());
    }

    #[test]
    fn solve_affine_parameterizes_all_solutions() {
        let a = m(&[&[1, 0, -1]]);
        let (part, kern) = a.solve_affine(&[rat(1, 2)]).unwrap();
        assert_eq!(a.mul_vec(&part), vec![rat(1, 2)]);
        assert_eq!(kern.len(), 2);
        for v in &kern {
            assert!(a.mul_vec(v)[0].is_zero());
        }
    }

    fn check_smith(a: &Matrix<Rat>) {
        let s = smith(a);
        assert_eq!(s.left.det().abs(), rat_int(1), "left not unimodular");
        assert_eq!(s.right.det().abs(), rat_int(1), "right not unimodular");
        let d = s.left.mul(a).mul(&s.right);
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if i == j && i < s.divisors.len() {
                    assert_eq!(d.at(i, j), &Rat::from_integer(s.divisors[i].clone()));
                } else {
                    assert!(d.at(i, j).is_zero(), "off-diagonal at ({i},{j})");
                }
            }
        }
        for i in 0..s.rank.saturating_sub(1) {
            assert!(
                (&s.divisors[i + 1] % &s.divisors[i]).is_zero(),
                "divisor chain broken"
            );
        }
        for i in s.rank..s.divisors.len() {
            assert!(s.divisors[i].is_zero());
        }
        assert_eq!(s.rank, a.rank());
    }

    #[test]
    fn smith_on_known_matrices() {
        check_smith(&m(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]));
        check_smith(&m(&[&[1, 0], &[0, 1]]));
        check_smith(&m(&[&[2, 0], &[0, 3]]));
        check_smith(&m(&[&[0, 0], &[0, 0]]));
        check_smith(&m(&[&[1, 2, 3], &[4, 5, 6]]));
        check_smith(&m(&[&[1], &[1], &[1]]));
        check_smith(&m(&[&[6, 10, 15]]));
        let s = smith(&m(&[&[2, 4, 4], &[-6, 6, 12], &[10, 4, 16]]));
        use num_bigint::BigInt;
        assert_eq!(
            s.divisors,
            vec![BigInt::from(2), BigInt::from(2), BigInt::from(156)]
        );
    }

    #[test]
    fn smith_on_random_matrices() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let rows = rng.gen_range(1..5);
            let cols = rng.gen_range(1..5);
            let a = Matrix::from_rows_with_cols(
                (0..rows)
                    .map(|_| (0..cols).map(|_| rat_int(rng.gen_range(-9..10))).collect())
                    .collect(),
                cols,
            );
            check_smith(&a);
        }
    }
}
