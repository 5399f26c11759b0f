//! Signal-subspace estimation: truncated SVD, MDL model-order selection, and
//! the singular-value-based weighting matrix.

use ndarray::{Array1, Array2};

use crate::error::{MbError, Result};
use crate::linalg;
use crate::model::C64;
use crate::stacking::{NrFactors, StackedData};

/// Estimated signal subspace of a stacked data matrix.
#[derive(Debug, Clone)]
pub struct SubspaceEstimate {
    /// `LP x K` orthonormal basis of the dominant left singular subspace.
    pub basis: Array2<C64>,
    /// All `min(rows, cols)` singular values, descending.
    pub singular_values: Array1<f64>,
    pub k_order: usize,
    /// Mean of the discarded squared singular values, scaled by 1/columns so
    /// it is comparable to the per-entry noise variance.
    pub noise_power: f64,
    /// Column count of the decomposed matrix (the normalizer `C`).
    pub n_cols: usize,
}

impl SubspaceEstimate {
    /// Signal-power estimates: the `K` largest squared singular values over `C`.
    pub fn signal_powers(&self) -> Array1<f64> {
        let c = self.n_cols as f64;
        self.singular_values
            .iter()
            .take(self.k_order)
            .map(|s| s * s / c)
            .collect()
    }
}

/// Dominant left singular subspace of the stacked data.
///
/// The decomposition goes through a QR column reduction rather than the Gram
/// matrix, so small singular values keep full relative accuracy (the Gram
/// route squares the condition number and can lose weak signal directions
/// entirely in near-noiseless data).
pub fn truncated_svd(data: &StackedData, k_order: usize) -> Result<SubspaceEstimate> {
    let rows = data.n_rows();
    let cols = data.n_cols();
    let d = rows.min(cols);
    if k_order < 1 || k_order > d {
        return Err(MbError::Invalid(format!(
            "k_order {k_order} out of range 1..={d}"
        )));
    }
    let (svals, u) = linalg::left_svd(&data.matrix.view())?;
    let basis = u.slice(ndarray::s![.., ..k_order]).to_owned();
    let c = cols as f64;
    let noise_power = if k_order == d {
        0.0
    } else {
        svals.iter().skip(k_order).map(|s| s * s / c).sum::<f64>() / (d - k_order) as f64
    };
    Ok(SubspaceEstimate {
        basis,
        singular_values: svals,
        k_order,
        noise_power,
        n_cols: cols,
    })
}

/// Signal subspace from a factored noise-reduction projection.
///
/// The projected stack is `(I_L kron U) C` with `U` orthonormal, so its
/// nonzero singular values are those of `C` and its left singular vectors are
/// `(I_L kron U)` applied to those of `C`. Decomposing the small `LK x cols`
/// coefficient matrix instead of the full `LP x cols` stack gives the same
/// subspace, singular values (the remaining ones are exact zeros), noise
/// power, and weights at a fraction of the cost.
pub fn truncated_svd_factored(f: &NrFactors, k_order: usize) -> Result<SubspaceEstimate> {
    let p = f.p_rows;
    let l = f.n_bands;
    let cols = f.coeffs.ncols();
    let d = (l * p).min(cols);
    if k_order < 1 || k_order > d {
        return Err(MbError::Invalid(format!(
            "k_order {k_order} out of range 1..={d}"
        )));
    }
    let (sc, uc) = linalg::left_svd(&f.coeffs.view())?;
    if k_order > uc.ncols() {
        return Err(MbError::Invalid(format!(
            "k_order {k_order} exceeds projection rank bound {}",
            uc.ncols()
        )));
    }
    let kb = f.common_basis.ncols();
    let mut basis = Array2::zeros((l * p, k_order));
    for i in 0..l {
        let rows = uc.slice(ndarray::s![i * kb..(i + 1) * kb, ..k_order]);
        basis
            .slice_mut(ndarray::s![i * p..(i + 1) * p, ..])
            .assign(&f.common_basis.dot(&rows));
    }
    let mut svals = Array1::zeros(d);
    for (j, &s) in sc.iter().enumerate().take(d) {
        svals[j] = s;
    }
    // Noise lives only inside the rank-LK projected span; averaging the
    // discarded values over the exact-zero directions outside it would
    // underestimate sigma^2 and make the weighting over-trust noise-dominated
    // columns.
    let rank_bound = (l * kb).min(d);
    let c = cols as f64;
    let noise_power = if k_order >= rank_bound {
        0.0
    } else {
        svals
            .iter()
            .take(rank_bound)
            .skip(k_order)
            .map(|s| s * s / c)
            .sum::<f64>()
            / (rank_bound - k_order) as f64
    };
    Ok(SubspaceEstimate {
        basis,
        singular_values: svals,
        k_order,
        noise_power,
        n_cols: cols,
    })
}

/// MDL model-order selection from singular values.
///
/// `q_cols` sets the candidate range: with `D = q_cols - 1`, the criterion
/// `MDL(k) = -(D-k) D log(gm/am of lambda_{k+1..D}) + k(2D-k) log(D)/4 + k`
/// is minimized over `k in 0..D-1`, where `lambda_j` are the squared singular
/// values.
pub fn estimate_model_order_mdl(singular_values: &[f64], q_cols: usize) -> Result<usize> {
    if q_cols < 3 {
        return Err(MbError::Invalid("q_cols must be at least 3 (D >= 2)".into()));
    }
    let d = q_cols - 1;
    if singular_values.len() < d {
        return Err(MbError::Invalid(format!(
            "need at least {d} singular values, got {}",
            singular_values.len()
        )));
    }
    let lam: Vec<f64> = singular_values[..d]
        .iter()
        .map(|s| (s * s).max(f64::MIN_POSITIVE))
        .collect();
    let df = d as f64;
    let mut best_k = 0usize;
    let mut best = f64::INFINITY;
    for k in 0..d {
        let tail = &lam[k..];
        let m = tail.len() as f64;
        let am = tail.iter().sum::<f64>() / m;
        let lgm = tail.iter().map(|x| x.ln()).sum::<f64>() / m;
        let fit = -((d - k) as f64) * df * (lgm - am.ln());
        let pen = (k * (2 * d - k)) as f64 * df.ln() / 4.0 + k as f64;
        let v = fit + pen;
        if v < best {
            best = v;
            best_k = k;
        }
    }
    Ok(best_k)
}

/// WSF weighting: `W = Lambda_s - sigma^2 I`, clamped at a positive floor so
/// the matrix stays positive definite at low SNR.
pub fn weighting_matrix(est: &SubspaceEstimate) -> Array1<f64> {
    let lam = est.signal_powers();
    let lmax = lam.iter().cloned().fold(0.0f64, f64::max);
    let floor = (1e-3 * lmax).max(f64::MIN_POSITIVE);
    lam.mapv(|l| (l - est.noise_power).max(floor))
}

/// Column scales for the WSF cost, derived from [`weighting_matrix`].
///
/// The fitting residual scales each subspace column once, so the quadratic
/// form carries the square of these scales. Using `(Lambda_s - sigma^2 I)^2
/// Lambda_s^{-1}` there — the statistically efficient subspace-fitting
/// weighting of the MODE/WSF literature — means the column scales are
/// `W / sqrt(Lambda_s)`. (Scaling columns by `W` directly over-weights the
/// dominant singular vectors and costs a measurable fraction of the CRB.)
pub fn wsf_column_scales(est: &SubspaceEstimate) -> Array1<f64> {
    let w = weighting_matrix(est);
    let lam = est.signal_powers();
    Array1::from_iter(
        w.iter()
            .zip(lam.iter())
            .map(|(&wi, &li)| wi / li.max(f64::MIN_POSITIVE).sqrt()),
    )
}
