//! Thin bridge to faer for the O(n³) kernels. Every call runs sequentially
//! so results do not depend on the thread count.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, MatMut, MatRef, Par};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

fn view(m: &DMatrix<f64>) -> MatRef<'_, f64> {
    MatRef::from_column_major_slice(m.as_slice(), m.nrows(), m.ncols())
}

/// `op(a)·op(b)` where `op` optionally transposes.
pub(crate) fn gemm(a: &DMatrix<f64>, ta: bool, b: &DMatrix<f64>, tb: bool) -> DMatrix<f64> {
    let (av, bv) = (view(a), view(b));
    let av = if ta { av.transpose() } else { av };
    let bv = if tb { bv.transpose() } else { bv };
    let mut out = DMatrix::zeros(av.nrows(), bv.ncols());
    let (r, c) = out.shape();
    let dst = MatMut::from_column_major_slice_mut(out.as_mut_slice(), r, c);
    matmul(dst, Accum::Replace, av, bv, 1.0, Par::Seq);
    out
}

/// Eigenvalues in ascending order and the matching orthonormal columns.
pub(crate) fn symmetric_eigen(h: &DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    let mut u = DMatrix::<f64>::zeros(n, n);
    let mut s = Diag::<f64>::zeros(n);
    let par = Par::Seq;
    let mut mem = MemBuffer::new(evd::self_adjoint_evd_scratch::<f64>(
        n,
        ComputeEigenvectors::Yes,
        par,
        Default::default(),
    ));
    evd::self_adjoint_evd(
        view(h),
        s.as_mut(),
        Some(MatMut::from_column_major_slice_mut(u.as_mut_slice(), n, n)),
        par,
        MemStack::new(&mut mem),
        Default::default(),
    )
    .map_err(|e| Error::Numerical(format!("eigensolver did not converge: {e:?}")))?;
    let values = s.column_vector().iter().copied().collect();
    Ok((values, u))
}
