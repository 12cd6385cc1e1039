//! Sparse symmetric LDL^T factorization without pivoting, ordered by nested
//! dissection on the lattice. Used both as a direct solver and for inertia
//! (Sylvester) counts of shifted operators.

use crate::error::{Error, Result};

/// Symmetric matrix stored as full compressed columns (both triangles).
#[derive(Clone, Debug)]
pub struct SymCsc {
    pub(crate) n: usize,
    pub(crate) col_ptr: Vec<usize>,
    pub(crate) row_idx: Vec<u32>,
    pub(crate) values: Vec<f64>,
}

impl SymCsc {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for (j, yj) in y.iter_mut().enumerate().take(self.n) {
            let mut s = 0.0;
            for p in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[p] * x[self.row_idx[p] as usize];
            }
            *yj = s;
        }
    }
}

/// Elimination ordering and column structure of `L`, reusable across numeric
/// factorizations that share a sparsity pattern.
#[derive(Debug)]
pub struct LdlSymbolic {
    n: usize,
    perm: Vec<u32>,
    pinv: Vec<u32>,
    parent: Vec<i64>,
    lp: Vec<usize>,
}

#[derive(Debug)]
pub struct LdlFactor {
    symbolic: std::sync::Arc<LdlSymbolic>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

/// Signs of the pivots of an LDL^T factorization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Inertia {
    pub negative: usize,
    pub zero: usize,
    pub positive: usize,
}

const LEAF_SIZE: usize = 64;

/// Nested dissection on lattice coordinates: recursively split along the longer
/// bounding-box axis by a single lattice line, ordering the separator last.
pub fn nested_dissection(coords: &[[u32; 2]]) -> Vec<u32> {
    let mut order = Vec::with_capacity(coords.len());
    let ids: Vec<u32> = (0..coords.len() as u32).collect();
    dissect(ids, coords, &mut order);
    order
}

fn dissect(ids: Vec<u32>, coords: &[[u32; 2]], order: &mut Vec<u32>) {
    if ids.len() <= LEAF_SIZE {
        order.extend(ids);
        return;
    }
    let mut lo = [u32::MAX; 2];
    let mut hi = [0u32; 2];
    for &k in &ids {
        for a in 0..2 {
            lo[a] = lo[a].min(coords[k as usize][a]);
            hi[a] = hi[a].max(coords[k as usize][a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    if hi[axis] - lo[axis] < 2 {
        order.extend(ids);
        return;
    }
    let mut vals: Vec<u32> = ids.iter().map(|&k| coords[k as usize][axis]).collect();
    let mid = vals.len() / 2;
    let (_, &mut median, _) = vals.select_nth_unstable(mid);
    let cut = median.clamp(lo[axis] + 1, hi[axis] - 1);
    let (mut left, mut right, mut sep) = (Vec::new(), Vec::new(), Vec::new());
    for k in ids {
        let c = coords[k as usize][axis];
        match c.cmp(&cut) {
            std::cmp::Ordering::Less => left.push(k),
            std::cmp::Ordering::Greater => right.push(k),
            std::cmp::Ordering::Equal => sep.push(k),
        }
    }
    dissect(left, coords, order);
    dissect(right, coords, order);
    order.extend(sep);
}

impl LdlSymbolic {
    pub fn analyze(a: &SymCsc, perm: Vec<u32>) -> Result<Self> {
        let n = a.n;
        if perm.len() != n {
            return Err(Error::invalid("permutation length mismatch"));
        }
        let mut pinv = vec![u32::MAX; n];
        for (k, &p) in perm.iter().enumerate() {
            if p as usize >= n || pinv[p as usize] != u32::MAX {
                return Err(Error::invalid("ordering is not a permutation"));
            }
            pinv[p as usize] = k as u32;
        }
        let mut parent = vec![-1i64; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            let kk = perm[k] as usize;
            for p in a.col_ptr[kk]..a.col_ptr[kk + 1] {
                let mut i = pinv[a.row_idx[p] as usize] as usize;
                if i < k {
                    while flag[i] != k {
                        if parent[i] == -1 {
                            parent[i] = k as i64;
                        }
                        lnz[i] += 1;
                        flag[i] = k;
                        i = parent[i] as usize;
                    }
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        Ok(LdlSymbolic { n, perm, pinv, parent, lp })
    }

    pub fn nnz(&self) -> usize {
        self.lp[self.n]
    }
}

impl LdlFactor {
    pub fn factorize(a: &SymCsc, symbolic: std::sync::Arc<LdlSymbolic>) -> Result<Self> {
        let s = &*symbolic;
        let n = s.n;
        if a.n != n {
            return Err(Error::invalid("matrix does not match symbolic analysis"));
        }
        let nnz = s.nnz();
        let mut li = vec![0u32; nnz];
        let mut lx = vec![0.0f64; nnz];
        let mut d = vec![0.0f64; n];
        let mut y = vec![0.0f64; n];
        let mut pattern = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut lnz = vec![0usize; n];

        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            let kk = s.perm[k] as usize;
            for p in a.col_ptr[kk]..a.col_ptr[kk + 1] {
                let mut i = s.pinv[a.row_idx[p] as usize] as usize;
                if i <= k {
                    y[i] += a.values[p];
                    let mut len = 0;
                    while flag[i] != k {
                        pattern[len] = i;
                        len += 1;
                        flag[i] = k;
                        i = s.parent[i] as usize;
                    }
                    while len > 0 {
                        top -= 1;
                        len -= 1;
                        pattern[top] = pattern[len];
                    }
                }
            }
            d[k] = y[k];
            y[k] = 0.0;
            while top < n {
                let i = pattern[top];
                top += 1;
                let yi = y[i];
                y[i] = 0.0;
                let start = s.lp[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[li[p] as usize] -= lx[p] * yi;
                }
                let l_ki = yi / d[i];
                d[k] -= l_ki * yi;
                li[end] = k as u32;
                lx[end] = l_ki;
                lnz[i] += 1;
            }
            if d[k] == 0.0 || !d[k].is_finite() {
                return Err(Error::ZeroPivot(k));
            }
        }
        Ok(LdlFactor { symbolic, li, lx, d })
    }

    /// Analyze with nested dissection on `coords` and factorize.
    pub fn new(a: &SymCsc, coords: &[[u32; 2]]) -> Result<Self> {
        let symbolic = LdlSymbolic::analyze(a, nested_dissection(coords))?;
        Self::factorize(a, std::sync::Arc::new(symbolic))
    }

    pub fn symbolic(&self) -> &std::sync::Arc<LdlSymbolic> {
        &self.symbolic
    }

    pub fn dim(&self) -> usize {
        self.symbolic.n
    }

    pub fn inertia(&self) -> Inertia {
        let mut out = Inertia { negative: 0, zero: 0, positive: 0 };
        for &v in &self.d {
            if v < 0.0 {
                out.negative += 1;
            } else if v > 0.0 {
                out.positive += 1;
            } else {
                out.zero += 1;
            }
        }
        out
    }

    pub fn is_positive_definite(&self) -> bool {
        self.d.iter().all(|&v| v > 0.0)
    }

    /// Solve `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let s = &*self.symbolic;
        let n = s.n;
        let mut y: Vec<f64> = s.perm.iter().map(|&p| b[p as usize]).collect();
        for j in 0..n {
            let yj = y[j];
            if yj != 0.0 {
                for p in s.lp[j]..s.lp[j + 1] {
                    y[self.li[p] as usize] -= self.lx[p] * yj;
                }
            }
        }
        for (yj, dj) in y.iter_mut().zip(&self.d) {
            *yj /= dj;
        }
        for j in (0..n).rev() {
            let mut acc = y[j];
            for p in s.lp[j]..s.lp[j + 1] {
                acc -= self.lx[p] * y[self.li[p] as usize];
            }
            y[j] = acc;
        }
        for (k, &p) in s.perm.iter().enumerate() {
            b[p as usize] = y[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
