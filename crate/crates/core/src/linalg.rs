//! Block-tridiagonal systems: every discrete operator here couples radial
//! row `i` only to rows `i - 1` and `i + 1`, with dense angular blocks.

use nalgebra::{DMatrix, DVector};

use crate::error::{McfError, Result};

#[derive(Debug, Clone)]
pub(crate) struct BlockTridiagonal {
    bs: usize,
    lower: Vec<DMatrix<f64>>,
    diag: Vec<DMatrix<f64>>,
    upper: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn zeros(blocks: usize, bs: usize) -> Self {
        let z = || DMatrix::zeros(bs, bs);
        BlockTridiagonal {
            bs,
            lower: (0..blocks).map(|_| z()).collect(),
            diag: (0..blocks).map(|_| z()).collect(),
            upper: (0..blocks).map(|_| z()).collect(),
        }
    }

    /// Adds `v` at `(row, col)` of the assembled matrix.
    pub fn add(&mut self, row: usize, col: usize, v: f64) {
        let (bi, ri) = (row / self.bs, row % self.bs);
        let (bj, cj) = (col / self.bs, col % self.bs);
        match bj as isize - bi as isize {
            0 => self.diag[bi][(ri, cj)] += v,
            1 => self.upper[bi][(ri, cj)] += v,
            -1 => self.lower[bi][(ri, cj)] += v,
            _ => panic!("entry ({row}, {col}) outside the block band"),
        }
    }

    pub fn add_diagonal(&mut self, v: f64) {
        for d in &mut self.diag {
            for k in 0..self.bs {
                d[(k, k)] += v;
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        for m in self.lower.iter_mut().chain(&mut self.diag).chain(&mut self.upper) {
            *m *= s;
        }
    }

    #[cfg(test)]
    pub fn dim(&self) -> usize {
        self.diag.len() * self.bs
    }

    #[cfg(test)]
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let bs = self.bs;
        for b in 0..self.diag.len() {
            m.view_mut((b * bs, b * bs), (bs, bs)).copy_from(&self.diag[b]);
            if b + 1 < self.diag.len() {
                m.view_mut((b * bs, (b + 1) * bs), (bs, bs)).copy_from(&self.upper[b]);
                m.view_mut(((b + 1) * bs, b * bs), (bs, bs)).copy_from(&self.lower[b + 1]);
            }
        }
        m
    }

    /// Solves `A x = rhs` by block LU (block Thomas algorithm).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if self.bs == 1 {
            return self.solve_scalar(rhs);
        }
        let nb = self.diag.len();
        let bs = self.bs;
        let mut xs: Vec<DMatrix<f64>> = Vec::with_capacity(nb);
        let mut ys: Vec<DVector<f64>> = Vec::with_capacity(nb);
        for b in 0..nb {
            let mut d = self.diag[b].clone();
            let mut r = DVector::from_column_slice(&rhs[b * bs..(b + 1) * bs]);
            if b > 0 {
                d -= &self.lower[b] * &xs[b - 1];
                r -= &self.lower[b] * &ys[b - 1];
            }
            let lu = d.lu();
            if !lu.is_invertible() {
                return Err(McfError::SingularSystem(b));
            }
            if b + 1 < nb {
                xs.push(lu.solve(&self.upper[b]).ok_or(McfError::SingularSystem(b))?);
            }
            ys.push(lu.solve(&r).ok_or(McfError::SingularSystem(b))?);
        }
        let mut x = vec![0.0; rhs.len()];
        let mut next = ys[nb - 1].clone();
        x[(nb - 1) * bs..].copy_from_slice(next.as_slice());
        for b in (0..nb - 1).rev() {
            let cur = &ys[b] - &xs[b] * &next;
            x[b * bs..(b + 1) * bs].copy_from_slice(cur.as_slice());
            next = cur;
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(McfError::SingularSystem(0));
        }
        Ok(x)
    }

    fn solve_scalar(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.diag.len();
        let mut c = vec![0.0; n];
        let mut y = vec![0.0; n];
        for i in 0..n {
            let a = if i > 0 { self.lower[i][(0, 0)] } else { 0.0 };
            let mut d = self.diag[i][(0, 0)];
            let mut r = rhs[i];
            if i > 0 {
                d -= a * c[i - 1];
                r -= a * y[i - 1];
            }
            if d == 0.0 || !d.is_finite() {
                return Err(McfError::SingularSystem(i));
            }
            c[i] = if i + 1 < n { self.upper[i][(0, 0)] / d } else { 0.0 };
            y[i] = r / d;
        }
        for i in (0..n - 1).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(McfError::SingularSystem(0));
        }
        Ok(y)
    }
}
