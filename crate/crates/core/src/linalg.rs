//! Dense helpers shared by the solvers: norms, spectra, numerical rank and
//! thin wrappers over the LAPACK Schur drivers that `ndarray-linalg` does not
//! expose.

use std::os::raw::c_int;

use lapack_sys::__BindgenComplex;
use ndarray::{s, Array1, Array2, ArrayBase, Data, Ix2, ShapeBuilder};
use ndarray_linalg::{EigVals, Factorize, ReciprocalConditionNum, Scalar, Solve, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn fro_norm<S: Data<Elem = f64>>(m: &ArrayBase<S, Ix2>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn symmetrize(m: &Array2<f64>) -> Array2<f64> {
    (m + &m.t()) * 0.5
}

pub fn eigenvalues(m: &Array2<f64>) -> Result<Array1<Complex64>> {
    if m.nrows() == 0 {
        return Ok(Array1::zeros(0));
    }
    m.eigvals().map_err(|e| Error::linalg("geev", e))
}

pub fn complexify(m: &Array2<f64>) -> Array2<Complex64> {
    m.mapv(|x| Complex64::new(x, 0.0))
}

/// Singular values, descending.
pub fn singular_values<A: Scalar + ndarray_linalg::Lapack>(
    m: &Array2<A>,
) -> Result<Array1<A::Real>> {
    let (_, sv, _) = m.svd(false, false).map_err(|e| Error::linalg("gesvd", e))?;
    Ok(sv)
}

/// True when `m` (rows ≤ cols) has full row rank, judging singular values
/// below `rel_tol · σ_max` as zero.
pub fn has_full_row_rank(m: &Array2<Complex64>, rel_tol: f64) -> Result<bool> {
    let rows = m.nrows();
    if rows == 0 {
        return Ok(true);
    }
    if m.ncols() < rows {
        return Ok(false);
    }
    let sv = singular_values(m)?;
    let smax = sv[0];
    if smax == 0.0 {
        return Ok(false);
    }
    Ok(sv[rows - 1] > rel_tol * smax)
}

pub fn ensure_finite(name: &str, m: &Array2<f64>) -> Result<()> {
    for ((row, col), v) in m.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                matrix: name.to_string(),
                row,
                col,
            });
        }
    }
    Ok(())
}

/// Solves `A X = B` for a square `A`, returning `X` and the reciprocal
/// condition number of `A` (1-norm). An exactly singular `A` yields
/// `rcond = 0` and a NaN solution.
pub fn solve_with_rcond(a: &Array2<f64>, b: &Array2<f64>) -> Result<(Array2<f64>, f64)> {
    let Ok(lu) = a.factorize() else {
        return Ok((Array2::from_elem(b.dim(), f64::NAN), 0.0));
    };
    let rcond = lu.rcond().map_err(|e| Error::linalg("gecon", e))?;
    let mut x = Array2::zeros(b.dim());
    for (j, col) in b.columns().into_iter().enumerate() {
        let sol = lu
            .solve(&col.to_owned())
            .map_err(|e| Error::linalg("getrs", e))?;
        x.column_mut(j).assign(&sol);
    }
    Ok((x, rcond))
}

fn to_col_major<A: Copy>(m: &Array2<A>) -> Vec<A> {
    m.t().iter().copied().collect()
}

fn from_col_major<A>(rows: usize, cols: usize, data: Vec<A>) -> Array2<A> {
    Array2::from_shape_vec((rows, cols).f(), data).expect("buffer length matches shape")
}

/// Real Schur factorization `A = Z T Zᵀ` with the eigenvalues in the open
/// left half-plane ordered to the leading block of `T`.
pub struct OrderedRealSchur {
    pub t: Array2<f64>,
    pub z: Array2<f64>,
    /// Number of eigenvalues in the leading (stable) block.
    pub stable_dim: usize,
}

unsafe extern "C" fn select_open_lhp(wr: *const f64, _wi: *const f64) -> c_int {
    (*wr < 0.0) as c_int
}

pub fn real_schur_stable_first(a: &Array2<f64>) -> Result<OrderedRealSchur> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "Schur factorization needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok(OrderedRealSchur {
            t: Array2::zeros((0, 0)),
            z: Array2::zeros((0, 0)),
            stable_dim: 0,
        });
    }
    let mut buf = to_col_major(a);
    let ni = n as c_int;
    let mut sdim: c_int = 0;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];
    let mut vs = vec![0.0; n * n];
    let mut bwork = vec![0 as c_int; n];
    let mut info: c_int = 0;
    let jobvs = b'V' as std::os::raw::c_char;
    let sort = b'S' as std::os::raw::c_char;

    let mut lwork: c_int = -1;
    let mut query = [0.0f64];
    unsafe {
        lapack_sys::dgees_(
            &jobvs,
            &sort,
            Some(select_open_lhp),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            vs.as_mut_ptr(),
            &ni,
            query.as_mut_ptr(),
            &lwork,
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::linalg(
            "dgees",
            format!("workspace query info = {info}"),
        ));
    }
    lwork = (query[0] as c_int).max(3 * ni);
    let mut work = vec![0.0; lwork as usize];
    unsafe {
        lapack_sys::dgees_(
            &jobvs,
            &sort,
            Some(select_open_lhp),
            &ni,
            buf.as_mut_ptr(),
            &ni,
            &mut sdim,
            wr.as_mut_ptr(),
            wi.as_mut_ptr(),
            vs.as_mut_ptr(),
            &ni,
            work.as_mut_ptr(),
            &lwork,
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    // info = n+2 means roundoff changed the selection after reordering; the
    // caller validates `stable_dim` anyway.
    if info != 0 && info != ni + 2 {
        return Err(Error::linalg("dgees", format!("info = {info}")));
    }
    Ok(OrderedRealSchur {
        t: from_col_major(n, n, buf),
        z: from_col_major(n, n, vs),
        stable_dim: sdim as usize,
    })
}

/// Complex Schur factorization `A = U T Uᴴ` with `T` upper triangular.
pub fn complex_schur(a: &Array2<Complex64>) -> Result<(Array2<Complex64>, Array2<Complex64>)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Dimension(format!(
            "Schur factorization needs a square matrix, got {}x{}",
            n,
            a.ncols()
        )));
    }
    if n == 0 {
        return Ok((Array2::zeros((0, 0)), Array2::zeros((0, 0))));
    }
    // num_complex::Complex<f64> is repr(C) { re, im }, identical to the
    // bindgen complex type.
    let mut buf = to_col_major(a);
    let ni = n as c_int;
    let mut sdim: c_int = 0;
    let mut w = vec![Complex64::new(0.0, 0.0); n];
    let mut vs = vec![Complex64::new(0.0, 0.0); n * n];
    let mut rwork = vec![0.0f64; n];
    let mut bwork = vec![0 as c_int; n];
    let mut info: c_int = 0;
    let jobvs = b'V' as std::os::raw::c_char;
    let sort = b'N' as std::os::raw::c_char;
    let cast = |p: *mut Complex64| p as *mut __BindgenComplex<f64>;

    let mut lwork: c_int = -1;
    let mut query = [Complex64::new(0.0, 0.0)];
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &ni,
            cast(buf.as_mut_ptr()),
            &ni,
            &mut sdim,
            cast(w.as_mut_ptr()),
            cast(vs.as_mut_ptr()),
            &ni,
            cast(query.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::linalg(
            "zgees",
            format!("workspace query info = {info}"),
        ));
    }
    lwork = (query[0].re as c_int).max(2 * ni);
    let mut work = vec![Complex64::new(0.0, 0.0); lwork as usize];
    unsafe {
        lapack_sys::zgees_(
            &jobvs,
            &sort,
            None,
            &ni,
            cast(buf.as_mut_ptr()),
            &ni,
            &mut sdim,
            cast(w.as_mut_ptr()),
            cast(vs.as_mut_ptr()),
            &ni,
            cast(work.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            bwork.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::linalg("zgees", format!("info = {info}")));
    }
    let mut t = from_col_major(n, n, buf);
    // zgees leaves the strictly lower triangle zero, but be explicit.
    for i in 1..n {
        t.slice_mut(s![i, ..i]).fill(Complex64::new(0.0, 0.0));
    }
    Ok((t, from_col_major(n, n, vs)))
}
