//! Sparse symmetric matrices assembled from overlapping window blocks, plus
//! the two iterative probes the rest of the crate needs: a Jacobi-preconditioned
//! conjugate gradient solver and a smallest-eigenvalue estimate.
//!
//! Assembly is canonicalized so that permuting the input block list yields a
//! bit-identical matrix: contributions are sorted by (row, col, value bits)
//! before accumulation.

use std::io::Write;

use crate::error::{Error, Result};

/// Dense symmetric contribution of one window: an index set plus an
/// `indices.len() x indices.len()` row-major value block.
#[derive(Debug, Clone)]
pub struct WindowBlock {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl WindowBlock {
    pub fn new(indices: Vec<usize>, values: Vec<f64>) -> Self {
        assert_eq!(
            values.len(),
            indices.len() * indices.len(),
            "block must be square over its index set"
        );
        Self { indices, values }
    }

    fn order(&self) -> usize {
        self.indices.len()
    }

    fn max_asymmetry(&self) -> f64 {
        let m = self.order();
        let mut worst = 0.0f64;
        for p in 0..m {
            for q in (p + 1)..m {
                worst = worst.max((self.values[p * m + q] - self.values[q * m + p]).abs());
            }
        }
        worst
    }

    fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }
}

/// Symmetric sparse matrix in CSR form. Both triangles are stored; column
/// indices are strictly increasing within each row and duplicate-free.
#[derive(Debug, Clone)]
pub struct SparseSymMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymMatrix {
    /// Accumulates overlapping window blocks into one matrix.
    ///
    /// The result does not depend on block order: all contributions are merged
    /// through one canonical sort.
    pub fn assemble_from_window_blocks(dim: usize, blocks: &[WindowBlock]) -> Result<Self> {
        let mut triplets: Vec<(usize, usize, f64)> = Vec::new();
        for block in blocks {
            for &i in &block.indices {
                if i >= dim {
                    return Err(Error::BlockIndexOutOfRange { index: i, dim });
                }
            }
            let asym = block.max_asymmetry();
            if asym > 1e-12 * (1.0 + block.max_abs()) {
                return Err(Error::AsymmetricBlock { max_deviation: asym });
            }
            let m = block.order();
            for p in 0..m {
                for q in 0..m {
                    let v = block.values[p * m + q];
                    if v != 0.0 {
                        triplets.push((block.indices[p], block.indices[q], v));
                    }
                }
            }
        }
        triplets.sort_unstable_by(|a, b| {
            (a.0, a.1)
                .cmp(&(b.0, b.1))
                .then_with(|| a.2.total_cmp(&b.2))
        });

        let mut row_ptr = vec![0usize; dim + 1];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut k = 0;
        while k < triplets.len() {
            let (i, j, _) = triplets[k];
            let mut sum = 0.0;
            while k < triplets.len() && triplets[k].0 == i && triplets[k].1 == j {
                sum += triplets[k].2;
                k += 1;
            }
            row_ptr[i + 1] += 1;
            col_idx.push(j);
            values.push(sum);
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self {
            dim,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let lo = self.row_ptr[i];
        let hi = self.row_ptr[i + 1];
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(pos) => self.values[lo + pos],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.entry(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        for i in 0..self.dim {
            let mut acc = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = acc;
        }
    }

    /// Largest |A[i][j] - A[j][i]| over the stored pattern.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                worst = worst.max((self.values[k] - self.entry(j, i)).abs());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut dense = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                dense[i][self.col_idx[k]] = self.values[k];
            }
        }
        dense
    }

    /// Coordinate-format text dump, one `row col value` line per stored entry.
    pub fn write_coo_text<W: Write>(&self, w: &mut W) -> std::io::Result<()> {
        for i in 0..self.dim {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                writeln!(w, "{} {} {:e}", i, self.col_idx[k], self.values[k])?;
            }
        }
        Ok(())
    }

    /// Gershgorin upper bound on the largest eigenvalue.
    fn gershgorin_upper(&self) -> f64 {
        let mut bound = f64::NEG_INFINITY;
        for i in 0..self.dim {
            let mut radius = 0.0;
            let mut diag = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    diag = self.values[k];
                } else {
                    radius += self.values[k].abs();
                }
            }
            bound = bound.max(diag + radius);
        }
        if bound.is_finite() {
            bound
        } else {
            0.0
        }
    }
}

/// Nonnegative diagonal matrix used as an additive shift in solves.
#[derive(Debug, Clone)]
pub struct DiagMatrix {
    entries: Vec<f64>,
}

impl DiagMatrix {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        for (index, &v) in entries.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite { index });
            }
            if v < 0.0 {
                return Err(Error::InvalidParameter {
                    name: "diag entry",
                    value: v,
                    constraint: "must be nonnegative",
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            entries: vec![0.0; dim],
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scaled(&self, s: f64) -> Result<DiagMatrix> {
        DiagMatrix::new(self.entries.iter().map(|v| v * s).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `(A + diag(shift)) x = b` by conjugate gradient with a Jacobi
/// preconditioner. Convergence is `|r| / |b| <= tol`; a zero right-hand side
/// returns the zero vector immediately.
pub fn cg_solve(
    a: &SparseSymMatrix,
    shift: Option<&DiagMatrix>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = a.dim();
    assert_eq!(b.len(), n);
    if let Some(s) = shift {
        assert_eq!(s.len(), n);
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(vec![0.0; n]);
    }

    let mut precond = a.diagonal();
    if let Some(s) = shift {
        for (m, e) in precond.iter_mut().zip(s.entries()) {
            *m += e;
        }
    }
    for &m in &precond {
        if m <= 0.0 {
            return Err(Error::NotPositiveDefinite { curvature: m });
        }
    }

    let apply = |x: &[f64], y: &mut [f64]| {
        a.matvec(x, y);
        if let Some(s) = shift {
            for i in 0..n {
                y[i] += s.entries()[i] * x[i];
            }
        }
    };

    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&precond).map(|(ri, m)| ri / m).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];

    for _ in 0..max_iter {
        apply(&p, &mut ap);
        let p_ap = dot(&p, &ap);
        if p_ap <= 0.0 {
            return Err(Error::NotPositiveDefinite { curvature: p_ap });
        }
        let alpha = rz / p_ap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm(&r) / b_norm <= tol {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / precond[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::CgDidNotConverge {
        iterations: max_iter,
        residual: norm(&r) / b_norm,
    })
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E3779B97F4A7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Estimates the smallest eigenvalue of a symmetric matrix.
///
/// Runs power iteration on `s*I - A` where `s` is a Gershgorin upper bound
/// on the spectrum, then maps the dominant Rayleigh quotient back. The
/// estimate approaches the true minimum from above as `iters` grows.
pub fn min_eigenvalue_estimate(a: &SparseSymMatrix, iters: usize) -> f64 {
    let n = a.dim();
    if n == 0 {
        return 0.0;
    }
    let s = a.gershgorin_upper();

    // Deterministic generic-position start vector.
    let mut rng_state = 0x51F0_B7A6_D1E2_C3B4u64;
    let mut v: Vec<f64> = (0..n)
        .map(|_| (splitmix64(&mut rng_state) as f64 / u64::MAX as f64) - 0.5)
        .collect();
    let nv = norm(&v);
    for vi in &mut v {
        *vi /= nv;
    }

    let mut av = vec![0.0; n];
    let shifted = |v: &[f64], out: &mut Vec<f64>, av: &mut Vec<f64>| {
        a.matvec(v, av);
        for i in 0..n {
            out[i] = s * v[i] - av[i];
        }
    };

    let mut w = vec![0.0; n];
    for _ in 0..iters {
        shifted(&v, &mut w, &mut av);
        let nw = norm(&w);
        if nw <= f64::EPSILON * s.abs().max(1.0) {
            // s*I - A annihilates v; v already sits at the bottom of the spectrum.
            break;
        }
        for i in 0..n {
            v[i] = w[i] / nw;
        }
    }
    shifted(&v, &mut w, &mut av);
    let rayleigh = dot(&v, &w) / dot(&v, &v);
    s - rayleigh
}
