//! Exact integer matrices and the two lattice normal forms used by the
//! stabilizer and torsion computations: row Hermite normal form and the
//! Smith invariant-factor diagonal.
//!
//! Conventions (these are part of the public contract):
//! * `hnf` preserves the row lattice exactly, keeps the matrix dimensions,
//!   moves zero rows to the bottom, makes every pivot positive and reduces
//!   entries above a pivot into `[0, pivot)`.
//! * `snf` returns the full diagonal of length `min(rows, cols)` as a
//!   divisibility chain `d_1 | d_2 | ...` of non-negative integers, with
//!   zeros (rank deficiency) at the end. Leading 1s are kept here; callers
//!   that want invariant factors of a finite group strip them.

use num::bigint::Sign;
use num::{BigInt, Integer, Signed, Zero};

/// Dense matrix over the integers, arbitrary precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        IntMatrix {
            rows,
            cols,
            data: vec![BigInt::zero(); rows * cols],
        }
    }

    /// Builds a matrix from row slices. Panics if the rows are ragged.
    pub fn from_rows(rows: &[Vec<BigInt>]) -> Self {
        let ncols = rows.first().map_or(0, Vec::len);
        assert!(
            rows.iter().all(|r| r.len() == ncols),
            "ragged row lengths in matrix constructor"
        );
        IntMatrix {
            rows: rows.len(),
            cols: ncols,
            data: rows.iter().flatten().cloned().collect(),
        }
    }

    /// Convenience constructor from machine integers, mostly for tests.
    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let big: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Self::from_rows(&big)
    }

    pub fn diagonal(entries: &[BigInt]) -> Self {
        let n = entries.len();
        let mut m = Self::zero(n, n);
        for (i, e) in entries.iter().enumerate() {
            m[(i, i)] = e.clone();
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[BigInt] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    /// row_i -= q * row_j
    fn sub_scaled_row(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for c in 0..self.cols {
            let delta = q * &self[(j, c)];
            self[(i, c)] -= delta;
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.cols {
            let v = -&self[(i, c)];
            self[(i, c)] = v;
        }
    }

    fn is_zero_row(&self, i: usize) -> bool {
        self.row(i).iter().all(Zero::is_zero)
    }

    /// Row Hermite normal form of the lattice spanned by the rows.
    pub fn hnf(&self) -> IntMatrix {
        let mut m = self.clone();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row >= m.rows {
                break;
            }
            // Euclid on the column below pivot_row until one nonzero remains.
            loop {
                let mut best: Option<usize> = None;
                for r in pivot_row..m.rows {
                    if !m[(r, col)].is_zero() {
                        match best {
                            None => best = Some(r),
                            Some(b) => {
                                if m[(r, col)].abs() < m[(b, col)].abs() {
                                    best = Some(r);
                                }
                            }
                        }
                    }
                }
                let Some(b) = best else { break };
                m.swap_rows(pivot_row, b);
                let mut reduced_any = false;
                for r in pivot_row + 1..m.rows {
                    if !m[(r, col)].is_zero() {
                        let q = div_floor_big(&m[(r, col)], &m[(pivot_row, col)]);
                        m.sub_scaled_row(r, pivot_row, &q);
                        reduced_any = true;
                    }
                }
                if !reduced_any {
                    break;
                }
            }
            if m[(pivot_row, col)].is_zero() {
                continue;
            }
            if m[(pivot_row, col)].sign() == Sign::Minus {
                m.negate_row(pivot_row);
            }
            // Reduce the entries above the pivot into [0, pivot).
            for r in 0..pivot_row {
                let q = div_floor_big(&m[(r, col)], &m[(pivot_row, col)]);
                m.sub_scaled_row(r, pivot_row, &q);
            }
            pivot_row += 1;
        }
        // Zero rows sink to the bottom, nonzero rows keep their pivot order.
        let mut nonzero: Vec<Vec<BigInt>> = Vec::new();
        let mut zero_count = 0;
        for i in 0..m.rows {
            if m.is_zero_row(i) {
                zero_count += 1;
            } else {
                nonzero.push(m.row(i).to_vec());
            }
        }
        for _ in 0..zero_count {
            nonzero.push(vec![BigInt::zero(); m.cols]);
        }
        IntMatrix::from_rows(&nonzero)
    }

    /// The nonzero rows of the Hermite form: a basis of the row lattice.
    pub fn hnf_basis(&self) -> Vec<Vec<BigInt>> {
        let h = self.hnf();
        (0..h.rows)
            .filter(|&i| !h.is_zero_row(i))
            .map(|i| h.row(i).to_vec())
            .collect()
    }

    /// Smith normal form diagonal, full length `min(rows, cols)`.
    pub fn snf(&self) -> Vec<BigInt> {
        let mut m = self.clone();
        let n = m.rows.min(m.cols);
        let mut k = 0;
        while k < n {
            let Some((pr, pc)) = m.smallest_nonzero_from(k) else {
                break;
            };
            m.swap_rows(k, pr);
            m.swap_cols(k, pc);
            // Clear row and column k; restart whenever the pivot shrank.
            let mut dirty = true;
            while dirty {
                dirty = false;
                for r in k + 1..m.rows {
                    if !m[(r, k)].is_zero() {
                        let q = div_floor_big(&m[(r, k)], &m[(k, k)]);
                        m.sub_scaled_row(r, k, &q);
                        if !m[(r, k)].is_zero() {
                            m.swap_rows(k, r);
                            dirty = true;
                        }
                    }
                }
                for c in k + 1..m.cols {
                    if !m[(k, c)].is_zero() {
                        let q = div_floor_big(&m[(k, c)], &m[(k, k)]);
                        m.sub_scaled_col(c, k, &q);
                        if !m[(k, c)].is_zero() {
                            m.swap_cols(k, c);
                            dirty = true;
                        }
                    }
                }
            }
            k += 1;
        }
        let mut diag: Vec<BigInt> = (0..n).map(|i| m[(i, i)].abs()).collect();
        // Pairwise gcd/lcm passes enforce the divisibility chain; this is
        // exact for a diagonal matrix, and gcd/lcm with zero pushes zeros
        // to the end on its own.
        loop {
            let mut changed = false;
            for i in 0..diag.len().saturating_sub(1) {
                let (a, b) = (diag[i].clone(), diag[i + 1].clone());
                if divides(&a, &b) {
                    continue;
                }
                let g = a.gcd(&b);
                let l = if g.is_zero() {
                    BigInt::zero()
                } else {
                    (&a * &b) / &g
                };
                diag[i] = g;
                diag[i + 1] = l;
                changed = true;
            }
            if !changed {
                break;
            }
        }
        diag
    }

    fn smallest_nonzero_from(&self, k: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for r in k..self.rows {
            for c in k..self.cols {
                if !self[(r, c)].is_zero() {
                    match best {
                        None => best = Some((r, c)),
                        Some(b) => {
                            if self[(r, c)].abs() < self[b].abs() {
                                best = Some((r, c));
                            }
                        }
                    }
                }
            }
        }
        best
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }

    /// col_i -= q * col_j
    fn sub_scaled_col(&mut self, i: usize, j: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for r in 0..self.rows {
            let delta = q * &self[(r, j)];
            self[(r, i)] -= delta;
        }
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols, "determinant of non-square matrix");
        let n = self.rows;
        if n == 0 {
            return BigInt::from(1);
        }
        let mut m = self.clone();
        let mut prev = BigInt::from(1);
        let mut sign = BigInt::from(1);
        for k in 0..n - 1 {
            if m[(k, k)].is_zero() {
                let Some(r) = (k + 1..n).find(|&r| !m[(r, k)].is_zero()) else {
                    return BigInt::zero();
                };
                m.swap_rows(k, r);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &m[(i, j)] * &m[(k, k)] - &m[(i, k)] * &m[(k, j)];
                    m[(i, j)] = num / &prev;
                }
                m[(i, k)] = BigInt::zero();
            }
            prev = m[(k, k)].clone();
        }
        sign * m[(n - 1, n - 1)].clone()
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (r, c): (usize, usize)) -> &BigInt {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut BigInt {
        &mut self.data[r * self.cols + c]
    }
}

fn divides(a: &BigInt, b: &BigInt) -> bool {
    if a.is_zero() {
        return b.is_zero();
    }
    (b % a).is_zero()
}

/// Floor division on BigInt (`BigInt::div` truncates toward zero).
fn div_floor_big(a: &BigInt, b: &BigInt) -> BigInt {
    Integer::div_floor(a, b)
}

/// Does `v` lie in the lattice spanned by `basis` (rows in HNF order)?
/// Back-substitution against the pivot staircase.
pub fn in_row_lattice(basis: &[Vec<BigInt>], v: &[BigInt]) -> bool {
    let mut rem: Vec<BigInt> = v.to_vec();
    for row in basis {
        let Some(pivot_col) = row.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if rem[pivot_col].is_zero() {
            continue;
        }
        let (q, r) = rem[pivot_col].div_rem(&row[pivot_col]);
        if !r.is_zero() {
            return false;
        }
        for (c, entry) in row.iter().enumerate() {
            let delta = &q * entry;
            rem[c] -= delta;
        }
    }
    rem.iter().all(Zero::is_zero)
}

/// Integer coordinates of `v` in the given HNF basis, if any.
pub fn coords_in_basis(basis: &[Vec<BigInt>], v: &[BigInt]) -> Option<Vec<BigInt>> {
    let mut rem: Vec<BigInt> = v.to_vec();
    let mut coords = vec![BigInt::zero(); basis.len()];
    for (i, row) in basis.iter().enumerate() {
        let Some(pivot_col) = row.iter().position(|x| !x.is_zero()) else {
            continue;
        };
        if rem[pivot_col].is_zero() {
            continue;
        }
        let (q, r) = rem[pivot_col].div_rem(&row[pivot_col]);
        if !r.is_zero() {
            return None;
        }
        for (c, entry) in row.iter().enumerate() {
            let delta = &q * entry;
            rem[c] -= delta;
        }
        coords[i] = q;
    }
    if rem.iter().all(Zero::is_zero) {
        Some(coords)
    } else {
        None
    }
}
