//! Small dense helpers: unitary exponentials of Hermitian generators and
//! the inverse map from a unitary mode matrix back to its generator.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// `exp(−iH)` for Hermitian `H`, via its spectral decomposition.
pub fn exp_minus_i(h: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    if n == 1 {
        return DMatrix::from_element(1, 1, C64::new(0.0, -h[(0, 0)].re).exp());
    }
    let eig = SymmetricEigen::new(h.clone());
    let phases = DVector::from_iterator(n, eig.eigenvalues.iter().map(|&l| C64::new(0.0, -l).exp()));
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// `exp(−iH)` exploiting any block structure in the sparsity pattern of `H`.
///
/// Indices are grouped into connected components of the graph `H_ij ≠ 0`;
/// each component is exponentiated on its own.
pub fn exp_minus_i_blockwise(h: &DMatrix<C64>) -> DMatrix<C64> {
    let n = h.nrows();
    let mut component = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let id = groups.len();
        let mut members = vec![start];
        component[start] = id;
        let mut cursor = 0;
        while cursor < members.len() {
            let i = members[cursor];
            cursor += 1;
            for j in 0..n {
                if component[j] == usize::MAX && (h[(i, j)].norm() > 0.0 || h[(j, i)].norm() > 0.0) {
                    component[j] = id;
                    members.push(j);
                }
            }
        }
        members.sort_unstable();
        groups.push(members);
    }
    let mut out = DMatrix::zeros(n, n);
    for g in &groups {
        let sub = DMatrix::from_fn(g.len(), g.len(), |a, b| h[(g[a], g[b])]);
        let u = exp_minus_i(&sub);
        for (a, &i) in g.iter().enumerate() {
            for (b, &j) in g.iter().enumerate() {
                out[(i, j)] = u[(a, b)];
            }
        }
    }
    out
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    max_abs(&(u.adjoint() * u - DMatrix::<C64>::identity(n, n)))
}

/// Hermitian `h` with `exp(−ih) = u`, for a unitary `u`.
pub fn unitary_generator(u: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    if !u.is_square() {
        return Err(Error::InvalidParameter("mode matrix must be square".into()));
    }
    let defect = unitarity_defect(u);
    if defect > 1e-10 {
        return Err(Error::InvalidParameter(format!("mode matrix is not unitary (defect {defect:.3e})")));
    }
    let (q, t) = Schur::new(u.clone()).unpack();
    let n = u.nrows();
    let angles = DVector::from_iterator(n, (0..n).map(|k| C64::new(-t[(k, k)].arg(), 0.0)));
    let h = &q * DMatrix::from_diagonal(&angles) * q.adjoint();
    // symmetrize away rounding
    Ok((&h + h.adjoint()).scale(0.5))
}
