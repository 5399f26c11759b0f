//! Small dense linear algebra helpers on top of LAPACK.

use ndarray::{Array1, Array2, ArrayView2};
use ndarray_linalg::c64;

use crate::error::{MbError, Result};

/// Hermitian eigendecomposition (ascending eigenvalues) using the
/// divide-and-conquer driver. Only the lower triangle of `a` is read.
pub fn eigh_into(mut a: Array2<c64>) -> Result<(Array1<f64>, Array2<c64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(MbError::Invalid("eigh: matrix not square".into()));
    }
    if n == 0 {
        return Err(MbError::Invalid("eigh: empty matrix".into()));
    }
    // LAPACK is column-major; a Hermitian matrix read from the lower triangle
    // in column-major order equals the upper triangle of the row-major view,
    // which is fine since we always pass a full Hermitian matrix.
    let mut w = vec![0.0f64; n];
    let lda = n as i32;
    let nn = n as i32;
    let mut info = 0i32;
    // Workspace query.
    let mut wkopt = [lapack_sys::__BindgenComplex::<f64> { re: 0.0, im: 0.0 }];
    let mut rwkopt = [0.0f64];
    let mut iwkopt = [0i32];
    let lwork_q = -1i32;
    unsafe {
        lapack_sys::zheevd_(
            b"V".as_ptr() as *const _,
            b"L".as_ptr() as *const _,
            &nn,
            a.as_mut_ptr() as *mut _,
            &lda,
            w.as_mut_ptr(),
            wkopt.as_mut_ptr(),
            &lwork_q,
            rwkopt.as_mut_ptr(),
            &lwork_q,
            iwkopt.as_mut_ptr(),
            &lwork_q,
            &mut info,
        );
    }
    if info != 0 {
        return Err(MbError::Numerical(format!("zheevd workspace query failed: info={info}")));
    }
    let lwork = wkopt[0].re as i32;
    let lrwork = rwkopt[0] as i32;
    let liwork = iwkopt[0];
    let mut work = vec![lapack_sys::__BindgenComplex::<f64> { re: 0.0, im: 0.0 }; lwork as usize];
    let mut rwork = vec![0.0f64; lrwork as usize];
    let mut iwork = vec![0i32; liwork as usize];
    unsafe {
        lapack_sys::zheevd_(
            b"V".as_ptr() as *const _,
            b"L".as_ptr() as *const _,
            &nn,
            a.as_mut_ptr() as *mut _,
            &lda,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(MbError::Numerical(format!("zheevd failed: info={info}")));
    }
    // The buffer is seen by LAPACK as column-major, i.e., as the transpose of
    // the row-major array; undo that so column j of the result is the j-th
    // eigenvector of the Hermitian input.
    let v = adjoint(&a.view());
    Ok((Array1::from_vec(w), v))
}

/// Eigenvalues of a general complex square matrix (no eigenvectors).
///
/// Small-matrix workhorse for shift-invariance rotations whose eigenvalues
/// cluster tightly on the unit circle; the QR algorithm keeps full backward
/// stability there, unlike characteristic-polynomial root finding.
pub fn eigvals_into(mut a: Array2<c64>) -> Result<Array1<c64>> {
    let n = a.nrows();
    if n != a.ncols() || n == 0 {
        return Err(MbError::Invalid("eigvals: matrix not square or empty".into()));
    }
    // the row-major buffer reads column-major as A^T, which has the same
    // eigenvalues
    let nn = n as i32;
    let mut w = vec![lapack_sys::__BindgenComplex::<f64> { re: 0.0, im: 0.0 }; n];
    let mut rwork = vec![0.0f64; 2 * n];
    let mut info = 0i32;
    let mut wkopt = [lapack_sys::__BindgenComplex::<f64> { re: 0.0, im: 0.0 }];
    let lwork_q = -1i32;
    let one = 1i32;
    unsafe {
        lapack_sys::zgeev_(
            b"N".as_ptr() as *const _,
            b"N".as_ptr() as *const _,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            std::ptr::null_mut(),
            &one,
            wkopt.as_mut_ptr(),
            &lwork_q,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(MbError::Numerical(format!("zgeev workspace query failed: info={info}")));
    }
    let lwork = wkopt[0].re as i32;
    let mut work = vec![lapack_sys::__BindgenComplex::<f64> { re: 0.0, im: 0.0 }; lwork as usize];
    unsafe {
        lapack_sys::zgeev_(
            b"N".as_ptr() as *const _,
            b"N".as_ptr() as *const _,
            &nn,
            a.as_mut_ptr() as *mut _,
            &nn,
            w.as_mut_ptr(),
            std::ptr::null_mut(),
            &one,
            std::ptr::null_mut(),
            &one,
            work.as_mut_ptr(),
            &lwork,
            rwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(MbError::Numerical(format!("zgeev failed: info={info}")));
    }
    Ok(w.iter().map(|z| c64::new(z.re, z.im)).collect())
}

/// Singular values (descending) and left singular vectors of a wide matrix,
/// computed without forming the Gram matrix: a QR of the adjoint reduces the
/// columns to a small triangle whose SVD is cheap, so the small singular
/// values keep full relative accuracy.
pub fn left_svd(a: &ArrayView2<'_, c64>) -> Result<(Array1<f64>, Array2<c64>)> {
    let rows = a.nrows();
    if rows == 0 || a.ncols() == 0 {
        return Err(MbError::Invalid("left_svd: empty matrix".into()));
    }
    if a.ncols() < rows {
        // already tall: direct SVD
        let (u, s, _) = ndarray_linalg::SVD::svd(a, true, false)
            .map_err(|e| MbError::Numerical(format!("svd failed: {e}")))?;
        return Ok((s, u.expect("left singular vectors requested")));
    }
    let ah = adjoint(a);
    let (_, r) = ndarray_linalg::QR::qr(&ah)
        .map_err(|e| MbError::Numerical(format!("qr failed: {e}")))?;
    // a = r^H q^H, so the left singular pairs of a are those of r^H
    let rh = adjoint(&r.view());
    let (u, s, _) = ndarray_linalg::SVD::svd(&rh, true, false)
        .map_err(|e| MbError::Numerical(format!("svd failed: {e}")))?;
    Ok((s, u.expect("left singular vectors requested")))
}

/// All singular values (descending) without vectors, via the same QR column
/// reduction as [`left_svd`].
pub fn singular_values(a: &ArrayView2<'_, c64>) -> Result<Array1<f64>> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(MbError::Invalid("singular_values: empty matrix".into()));
    }
    let work = if a.ncols() >= a.nrows() {
        let ah = adjoint(a);
        let (_, r) = ndarray_linalg::QR::qr(&ah)
            .map_err(|e| MbError::Numerical(format!("qr failed: {e}")))?;
        r
    } else {
        a.to_owned()
    };
    let (_, s, _) = ndarray_linalg::SVD::svd(&work, false, false)
        .map_err(|e| MbError::Numerical(format!("svd failed: {e}")))?;
    Ok(s)
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<'_, c64>) -> Array2<c64> {
    a.t().mapv(|z| z.conj())
}

/// `a * a^H` Gram matrix.
pub fn gram(a: &ArrayView2<'_, c64>) -> Array2<c64> {
    a.dot(&adjoint(a))
}
