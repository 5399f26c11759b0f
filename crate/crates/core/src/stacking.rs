//! Hankel stacking of multiband CSI and the data-extension transforms.
//!
//! Each band's length-`N` CSI vector is folded into a `P x Q` Hankel matrix
//! (`Q = N - P + 1`), the band matrices are stacked vertically, snapshots are
//! concatenated horizontally, and the result can be extended by
//! forward-backward averaging and denoised by projecting each band block onto
//! a cross-band estimate of the common column span.

use ndarray::{s, Array2, ArrayView1, Axis};

use crate::error::{MbError, Result};
use crate::linalg;
use crate::model::{BandPlan, CsiSnapshot, MultibandCsi, C64};

/// Stacking design parameters.
#[derive(Debug, Clone, Copy)]
pub struct StackConfig {
    /// Hankel rows per band (the design parameter `P`).
    pub p_rows: usize,
    /// Apply forward-backward averaging across the full stack.
    pub use_fb: bool,
    /// Apply the cross-band noise-reduction projection.
    pub use_nr: bool,
}

impl StackConfig {
    pub fn new(p_rows: usize) -> Self {
        Self { p_rows, use_fb: false, use_nr: false }
    }

    /// Columns of one Hankel block for a band plan with `N` subcarriers.
    pub fn q_cols(&self, n_subcarriers: usize) -> usize {
        n_subcarriers - self.p_rows + 1
    }

    /// Check the rank conditions for recovering a rank-`k` signal subspace.
    pub fn check_rank(&self, plan: &BandPlan, m_snapshots: usize, k_order: usize) -> Result<()> {
        let n = plan.n_subcarriers;
        if self.p_rows < 1 || self.p_rows > n {
            return Err(MbError::Invalid(format!(
                "p_rows {} out of range 1..={}",
                self.p_rows, n
            )));
        }
        let q = self.q_cols(n);
        let lp = plan.n_bands() * self.p_rows;
        let cols = q * m_snapshots * if self.use_fb { 2 } else { 1 };
        if lp < k_order || cols < k_order {
            return Err(MbError::Invalid(format!(
                "rank condition unsatisfiable: LP={lp}, columns={cols}, K={k_order}"
            )));
        }
        Ok(())
    }
}

/// Default Hankel rows: 2N/3 rounded up, backed off until the column count
/// supports the requested model order.
pub fn default_p_rows(n_subcarriers: usize, m_snapshots: usize, k_order: usize, use_fb: bool) -> usize {
    let mut p = (2 * n_subcarriers).div_ceil(3).max(1);
    let fb = if use_fb { 2 } else { 1 };
    while p > 1 && (n_subcarriers - p + 1) * m_snapshots * fb < k_order {
        p -= 1;
    }
    p
}

/// Which extensions produced a stacked matrix.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Provenance {
    pub multi_snapshot: bool,
    pub fb: bool,
    pub nr: bool,
}

/// A block-Hankel data matrix of `L` band blocks with `P` rows each.
#[derive(Debug, Clone)]
pub struct StackedData {
    /// `LP x C` matrix; `C` depends on the applied extensions.
    pub matrix: Array2<C64>,
    pub n_bands: usize,
    pub p_rows: usize,
    pub provenance: Provenance,
}

impl StackedData {
    pub fn n_cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `P x Q` Hankel matrix with `H[p, q] = h[p + q]`.
pub fn hankel(h: &ArrayView1<'_, C64>, p_rows: usize) -> Result<Array2<C64>> {
    let n = h.len();
    if p_rows < 1 || p_rows > n {
        return Err(MbError::Invalid(format!("p_rows {p_rows} out of range 1..={n}")));
    }
    let q = n - p_rows + 1;
    Ok(Array2::from_shape_fn((p_rows, q), |(p, c)| h[p + c]))
}

/// Vertical stack of the per-band Hankel matrices of one snapshot (`LP x Q`).
pub fn stack_bands(snapshot: &CsiSnapshot, cfg: &StackConfig) -> Result<StackedData> {
    let l = snapshot.per_band.len();
    if l == 0 {
        return Err(MbError::Invalid("snapshot has no bands".into()));
    }
    let n = snapshot.per_band[0].len();
    let p = cfg.p_rows;
    if p < 1 || p > n {
        return Err(MbError::Invalid(format!("p_rows {p} out of range 1..={n}")));
    }
    let q = n - p + 1;
    let mut out = Array2::zeros((l * p, q));
    for (i, band) in snapshot.per_band.iter().enumerate() {
        let h = hankel(&band.view(), p)?;
        out.slice_mut(s![i * p..(i + 1) * p, ..]).assign(&h);
    }
    Ok(StackedData {
        matrix: out,
        n_bands: l,
        p_rows: p,
        provenance: Provenance::default(),
    })
}

/// Horizontal concatenation of the per-snapshot stacks (`LP x QM`).
pub fn stack_snapshots(csi: &MultibandCsi, cfg: &StackConfig) -> Result<StackedData> {
    csi.validate()?;
    let m = csi.n_snapshots();
    let l = csi.band_plan.n_bands();
    let p = cfg.p_rows;
    let q = cfg.q_cols(csi.band_plan.n_subcarriers);
    let mut out = Array2::zeros((l * p, q * m));
    for (mi, snap) in csi.snapshots.iter().enumerate() {
        let one = stack_bands(snap, cfg)?;
        out.slice_mut(s![.., mi * q..(mi + 1) * q]).assign(&one.matrix);
    }
    Ok(StackedData {
        matrix: out,
        n_bands: l,
        p_rows: p,
        provenance: Provenance { multi_snapshot: m > 1, ..Default::default() },
    })
}

/// True iff the multiset of used subcarrier indices is invariant under
/// reflection about its center.
pub fn is_centro_symmetric(plan: &BandPlan) -> bool {
    let n = plan.n_subcarriers as i64;
    let mut used: Vec<i64> = plan
        .band_offsets
        .iter()
        .flat_map(|&off| (0..n).map(move |i| off + i))
        .collect();
    used.sort_unstable();
    let lo = used[0];
    let hi = used[used.len() - 1];
    let sum = lo + hi;
    used.iter().zip(used.iter().rev()).all(|(a, b)| a + b == sum)
}

/// Forward-backward extension `[H  PiH*]`; the exchange matrix is applied as
/// a row-reversal view.
pub fn fb_extend(stacked: &StackedData, plan: &BandPlan) -> Result<StackedData> {
    if !is_centro_symmetric(plan) {
        return Err(MbError::Invalid(
            "forward-backward averaging requires a centro-symmetric band plan; \
             the used subcarrier indices are not mirror-symmetric about their center"
                .into(),
        ));
    }
    let m = &stacked.matrix;
    let reversed = m.slice(s![..;-1, ..]).mapv(|z| z.conj());
    let out = ndarray::concatenate(Axis(1), &[m.view(), reversed.view()])
        .expect("row counts match");
    Ok(StackedData {
        matrix: out,
        n_bands: stacked.n_bands,
        p_rows: stacked.p_rows,
        provenance: Provenance { fb: true, ..stacked.provenance },
    })
}

/// Per-band horizontal snapshot stack `[H_i^(1) ... H_i^(M)]` with its own
/// forward-backward extension (always applicable within a band).
pub fn per_band_fb_stack(
    csi: &MultibandCsi,
    cfg: &StackConfig,
    band: usize,
) -> Result<Array2<C64>> {
    let p = cfg.p_rows;
    let q = cfg.q_cols(csi.band_plan.n_subcarriers);
    let m = csi.n_snapshots();
    let mut fwd = Array2::zeros((p, q * m));
    for (mi, snap) in csi.snapshots.iter().enumerate() {
        let h = hankel(&snap.per_band[band].view(), p)?;
        fwd.slice_mut(s![.., mi * q..(mi + 1) * q]).assign(&h);
    }
    let bwd = fwd.slice(s![..;-1, ..]).mapv(|z| z.conj());
    Ok(ndarray::concatenate(Axis(1), &[fwd.view(), bwd.view()]).expect("row counts match"))
}

/// Noise-reduction projection.
///
/// Builds the row-combined matrix from per-band FB-extended snapshot stacks,
/// estimates its `k_order` dominant left singular vectors, and projects every
/// band block of the (optionally FB-extended) stacked data onto that span.
pub fn noise_reduce(csi: &MultibandCsi, cfg: &StackConfig, k_order: usize) -> Result<StackedData> {
    let base = stack_snapshots(csi, cfg)?;
    let extended = if cfg.use_fb { fb_extend(&base, &csi.band_plan)? } else { base };
    project_onto_common_span(csi, cfg, k_order, extended)
}

/// Apply the cross-band projection to an already-stacked matrix.
pub fn project_onto_common_span(
    csi: &MultibandCsi,
    cfg: &StackConfig,
    k_order: usize,
    stacked: StackedData,
) -> Result<StackedData> {
    Ok(nr_factors(csi, cfg, k_order, &stacked)?.materialize())
}

/// Factored form of the noise-reduction projection.
///
/// The projected stack equals `(I_L kron U) C`, where `U` is the `P x K`
/// common column basis and `C` stacks the per-band coefficient blocks
/// `U^H B_i` into an `LK x cols` matrix. Keeping the factors lets the
/// downstream SVD run on `C` instead of the full `LP x cols` matrix.
#[derive(Debug, Clone)]
pub struct NrFactors {
    /// `P x K` orthonormal common column basis.
    pub common_basis: Array2<C64>,
    /// `LK x cols` stacked coefficient blocks, band-major.
    pub coeffs: Array2<C64>,
    pub n_bands: usize,
    pub p_rows: usize,
    pub provenance: Provenance,
}

impl NrFactors {
    /// Expand the factors back into the full projected `LP x cols` matrix.
    pub fn materialize(&self) -> StackedData {
        let p = self.p_rows;
        let k = self.common_basis.ncols();
        let mut out = Array2::zeros((self.n_bands * p, self.coeffs.ncols()));
        for i in 0..self.n_bands {
            let block = self.coeffs.slice(s![i * k..(i + 1) * k, ..]);
            out.slice_mut(s![i * p..(i + 1) * p, ..])
                .assign(&self.common_basis.dot(&block));
        }
        StackedData {
            matrix: out,
            n_bands: self.n_bands,
            p_rows: p,
            provenance: self.provenance,
        }
    }
}

/// Compute the cross-band projection in factored form.
pub fn nr_factors(
    csi: &MultibandCsi,
    cfg: &StackConfig,
    k_order: usize,
    stacked: &StackedData,
) -> Result<NrFactors> {
    if k_order < 1 {
        return Err(MbError::Invalid("k_order must be at least 1".into()));
    }
    let l = csi.band_plan.n_bands();
    let p = cfg.p_rows;
    let q = cfg.q_cols(csi.band_plan.n_subcarriers);
    let row_cols = 2 * q * csi.n_snapshots() * l;
    if k_order > p.min(row_cols) {
        return Err(MbError::Invalid(format!(
            "k_order {k_order} exceeds row-combined matrix dimensions {}x{row_cols}",
            p
        )));
    }
    let mut row_combined = Array2::zeros((p, row_cols));
    let w = 2 * q * csi.n_snapshots();
    for i in 0..l {
        let block = per_band_fb_stack(csi, cfg, i)?;
        row_combined.slice_mut(s![.., i * w..(i + 1) * w]).assign(&block);
    }
    let (_, u) = linalg::left_svd(&row_combined.view())?;
    let basis = u.slice(s![.., ..k_order]).to_owned();
    let basis_h = linalg::adjoint(&basis.view());

    let mut coeffs = Array2::zeros((l * k_order, stacked.matrix.ncols()));
    for i in 0..l {
        let block = stacked.matrix.slice(s![i * p..(i + 1) * p, ..]);
        coeffs
            .slice_mut(s![i * k_order..(i + 1) * k_order, ..])
            .assign(&basis_h.dot(&block));
    }
    Ok(NrFactors {
        common_basis: basis,
        coeffs,
        n_bands: stacked.n_bands,
        p_rows: stacked.p_rows,
        provenance: Provenance { nr: true, ..stacked.provenance },
    })
}

/// Scale each band block by `1/sigma_i` to equalize unequal per-band noise.
pub fn prewhiten(stacked: &mut StackedData, band_noise_std: &[f64]) -> Result<()> {
    if band_noise_std.len() != stacked.n_bands {
        return Err(MbError::Invalid("one noise level per band required".into()));
    }
    if band_noise_std.iter().any(|&x| x <= 0.0) {
        return Err(MbError::Invalid("noise levels must be positive".into()));
    }
    let p = stacked.p_rows;
    for (i, &sd) in band_noise_std.iter().enumerate() {
        let inv = C64::new(1.0 / sd, 0.0);
        stacked
            .matrix
            .slice_mut(s![i * p..(i + 1) * p, ..])
            .mapv_inplace(|z| z * inv);
    }
    Ok(())
}
