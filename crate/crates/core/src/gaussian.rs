//! Zero-mean Gaussian-state algebra in the vacuum-variance-one convention.
//!
//! Quadratures are ordered `(q1, p1, q2, p2, ...)` and the symplectic form is
//! block diagonal with blocks `[[0, 1], [-1, 0]]`. The vacuum state has the
//! identity as its covariance matrix, so a symplectic eigenvalue of one marks
//! a pure mode and the partially transposed eigenvalue `ν̃` reads directly as
//! the entanglement witness (`ν̃ < 1` ⇔ entangled for two modes).

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, Matrix2};

use crate::error::{invalid, Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const SYMPLECTIC_TOL: f64 = 1e-12;
const PHYSICAL_TOL: f64 = 1e-9;
const PAIRING_TOL: f64 = 1e-9;

/// Real symmetric `2N × 2N` second-moment matrix of a zero-mean state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Builds a covariance matrix, checking symmetry and positive definiteness.
    ///
    /// The matrix is not required to satisfy the uncertainty relation here
    /// because partial transposes share this representation; use
    /// [`CovarianceMatrix::new_physical`] or [`CovarianceMatrix::validate_physical`]
    /// where a genuine state is required.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || entries.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: 2 * (dim / 2).max(1),
                got: entries.ncols(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(invalid("covariance entries must be finite"));
        }
        let scale = entries.amax().max(1.0);
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::NotSymmetric(asym / scale));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        if Cholesky::new(entries.clone()).is_none() {
            return Err(Error::NotPositiveDefinite);
        }
        Ok(Self {
            n_modes: dim / 2,
            entries,
        })
    }

    pub fn new_physical(entries: DMatrix<f64>) -> Result<Self> {
        let v = Self::new(entries)?;
        v.validate_physical()?;
        Ok(v)
    }

    pub fn from_row_slice(n_modes: usize, data: &[f64]) -> Result<Self> {
        let dim = 2 * n_modes;
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: data.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(dim, dim, data))
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self {
            n_modes,
            entries: DMatrix::identity(2 * n_modes, 2 * n_modes),
        }
    }

    /// Single-mode thermal state with mean occupation `n_photons`.
    pub fn thermal(n_photons: f64) -> Result<Self> {
        if !(n_photons >= 0.0) || !n_photons.is_finite() {
            return Err(invalid(format!("thermal occupation must be >= 0, got {n_photons}")));
        }
        Ok(Self {
            n_modes: 1,
            entries: DMatrix::identity(2, 2) * (1.0 + 2.0 * n_photons),
        })
    }

    /// Block-diagonal product state `self ⊕ other`.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let (a, b) = (self.dim(), other.dim());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.entries);
        m.view_mut((a, a), (b, b)).copy_from(&other.entries);
        CovarianceMatrix {
            n_modes: self.n_modes + other.n_modes,
            entries: m,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn dim(&self) -> usize {
        2 * self.n_modes
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.entries.determinant()
    }

    /// 2×2 block coupling mode `i` (rows) to mode `j` (columns).
    pub fn block(&self, i: usize, j: usize) -> Matrix2<f64> {
        let v = &self.entries;
        Matrix2::new(
            v[(2 * i, 2 * j)],
            v[(2 * i, 2 * j + 1)],
            v[(2 * i + 1, 2 * j)],
            v[(2 * i + 1, 2 * j + 1)],
        )
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .flat_map(|i| (0..d).map(move |j| (i, j)))
            .map(|(i, j)| self.entries[(i, j)])
            .collect()
    }

    /// Reduced state of a single mode.
    pub fn mode(&self, index: usize) -> Result<CovarianceMatrix> {
        self.check_mode(index)?;
        let b = self.block(index, index);
        Ok(CovarianceMatrix {
            n_modes: 1,
            entries: DMatrix::from_iterator(2, 2, b.iter().copied()),
        })
    }

    pub fn is_physical(&self) -> bool {
        self.validate_physical().is_ok()
    }

    pub fn validate_physical(&self) -> Result<()> {
        let nu = symplectic_eigenvalues(self)?;
        match nu.first() {
            Some(&min) if min < 1.0 - PHYSICAL_TOL => Err(Error::Unphysical(min)),
            _ => Ok(()),
        }
    }

    fn check_mode(&self, index: usize) -> Result<()> {
        if index >= self.n_modes {
            return Err(Error::ModeOutOfRange {
                index,
                n_modes: self.n_modes,
            });
        }
        Ok(())
    }
}

/// Block-diagonal symplectic form on `n_modes` modes.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        j[(2 * k, 2 * k + 1)] = 1.0;
        j[(2 * k + 1, 2 * k)] = -1.0;
    }
    j
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransform {
    matrix: DMatrix<f64>,
    label: String,
}

impl SymplecticTransform {
    pub fn new(matrix: DMatrix<f64>, label: impl Into<String>) -> Result<Self> {
        let dim = matrix.nrows();
        if dim == 0 || !dim.is_multiple_of(2) || matrix.ncols() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: matrix.ncols(),
            });
        }
        let j = symplectic_form(dim / 2);
        let defect = (&matrix * &j * matrix.transpose() - &j).amax();
        let scale = matrix.amax().powi(2).max(1.0);
        if defect > SYMPLECTIC_TOL * scale {
            return Err(invalid(format!("matrix is not symplectic (defect {defect:e})")));
        }
        Ok(Self {
            matrix,
            label: label.into(),
        })
    }

    pub fn identity(n_modes: usize) -> Self {
        Self {
            matrix: DMatrix::identity(2 * n_modes, 2 * n_modes),
            label: "identity".into(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn n_modes(&self) -> usize {
        self.matrix.nrows() / 2
    }

    /// `self` applied after `first`.
    pub fn compose(&self, first: &SymplecticTransform) -> Result<SymplecticTransform> {
        if self.matrix.nrows() != first.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: first.matrix.nrows(),
            });
        }
        Ok(SymplecticTransform {
            matrix: &self.matrix * &first.matrix,
            label: format!("{}∘{}", self.label, first.label),
        })
    }

    /// Independent action of `self` and `other` on disjoint mode sets.
    pub fn direct_sum(&self, other: &SymplecticTransform) -> SymplecticTransform {
        let (a, b) = (self.matrix.nrows(), other.matrix.nrows());
        let mut m = DMatrix::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.matrix);
        m.view_mut((a, a), (b, b)).copy_from(&other.matrix);
        SymplecticTransform {
            matrix: m,
            label: format!("{}⊕{}", self.label, other.label),
        }
    }
}

fn rotation_matrix(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Phase-space rotation of one mode by `theta` radians.
pub fn rotation(theta: f64) -> SymplecticTransform {
    SymplecticTransform {
        matrix: rotation_matrix(theta),
        label: "rotation".into(),
    }
}

/// Single-mode squeezer for `ξ = r e^{iφ}`: the squeezed axis sits at `φ/2`.
///
/// Acting on vacuum it gives variance `e^{-2r}` along the squeezed axis and
/// `e^{2r}` along the orthogonal one.
pub fn squeezer_transform(r: f64, phi: f64) -> Result<SymplecticTransform> {
    if !r.is_finite() || !phi.is_finite() {
        return Err(invalid("squeezing parameters must be finite"));
    }
    if r < 0.0 {
        return Err(invalid(format!(
            "squeezing factor must be >= 0 (orientation is carried by phi), got {r}"
        )));
    }
    let rot = rotation_matrix(phi / 2.0);
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![(-r).exp(), r.exp()]));
    Ok(SymplecticTransform {
        matrix: &rot * diag * rot.transpose(),
        label: "squeezer".into(),
    })
}

/// Balanced two-port mixer `(1/√2)·[[I, I], [-I, I]]` on `(q1, p1, q2, p2)`.
pub fn beam_splitter_50_50() -> SymplecticTransform {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
         h, 0.0,   h, 0.0,
        0.0,  h, 0.0,   h,
        -h, 0.0,   h, 0.0,
        0.0, -h, 0.0,   h,
    ]);
    SymplecticTransform {
        matrix: m,
        label: "beam-splitter".into(),
    }
}

/// Congruence `S·V·Sᵀ`.
pub fn apply(transform: &SymplecticTransform, state: &CovarianceMatrix) -> Result<CovarianceMatrix> {
    if transform.matrix.nrows() != state.dim() {
        return Err(Error::DimensionMismatch {
            expected: state.dim(),
            got: transform.matrix.nrows(),
        });
    }
    let s = &transform.matrix;
    CovarianceMatrix::new(s * &state.entries * s.transpose())
}

/// Symplectic spectrum of a positive-definite covariance, ascending.
///
/// The eigenvalues of `J·V` come in pairs `±iν`; their moduli are paired
/// after sorting and each pair is reduced to one value.
pub fn symplectic_eigenvalues(state: &CovarianceMatrix) -> Result<Vec<f64>> {
    if Cholesky::new(state.entries.clone()).is_none() {
        return Err(Error::NotPositiveDefinite);
    }
    let jv = symplectic_form(state.n_modes) * &state.entries;
    let mut moduli: Vec<f64> = jv.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    moduli
        .chunks_exact(2)
        .map(|pair| {
            let gap = (pair[1] - pair[0]).abs() / pair[1].max(1.0);
            if gap > PAIRING_TOL {
                Err(Error::EigenPairing(gap))
            } else {
                Ok(0.5 * (pair[0] + pair[1]))
            }
        })
        .collect()
}

/// Flips the sign of the momentum quadrature of `mode_index`.
pub fn partial_transpose(state: &CovarianceMatrix, mode_index: usize) -> Result<CovarianceMatrix> {
    if state.n_modes < 2 {
        return Err(invalid("partial transposition needs at least two modes"));
    }
    state.check_mode(mode_index)?;
    let p = 2 * mode_index + 1;
    let mut m = state.entries.clone();
    for k in 0..m.nrows() {
        if k != p {
            m[(p, k)] = -m[(p, k)];
            m[(k, p)] = -m[(k, p)];
        }
    }
    Ok(CovarianceMatrix {
        n_modes: state.n_modes,
        entries: m,
    })
}

/// Smallest symplectic eigenvalue of the partial transpose of a two-mode state.
pub fn smallest_pt_eigenvalue(state: &CovarianceMatrix) -> Result<f64> {
    if state.n_modes != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.n_modes,
        });
    }
    let pt = partial_transpose(state, 1)?;
    Ok(symplectic_eigenvalues(&pt)?[0])
}

/// Negativity kernel `(1 − ν̃)/(2ν̃)`; the negativity is `max(0, kernel)`.
pub fn negativity_kernel_from_cov(state: &CovarianceMatrix) -> Result<f64> {
    let nu = smallest_pt_eigenvalue(state)?;
    Ok(nk_from_nu(nu))
}

pub fn nk_from_nu(nu: f64) -> f64 {
    -0.5 + 0.5 / nu
}

pub fn negativity(state: &CovarianceMatrix) -> Result<f64> {
    Ok(negativity_kernel_from_cov(state)?.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuadratureKind {
    Q,
    P,
}

/// One phase-space axis: a quadrature of a given mode (zero-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Quadrature {
    pub mode: usize,
    pub kind: QuadratureKind,
}

impl Quadrature {
    pub fn q(mode: usize) -> Self {
        Self {
            mode,
            kind: QuadratureKind::Q,
        }
    }

    pub fn p(mode: usize) -> Self {
        Self {
            mode,
            kind: QuadratureKind::P,
        }
    }

    pub fn index(&self) -> usize {
        2 * self.mode
            + match self.kind {
                QuadratureKind::Q => 0,
                QuadratureKind::P => 1,
            }
    }
}

impl fmt::Display for Quadrature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.kind {
            QuadratureKind::Q => 'q',
            QuadratureKind::P => 'p',
        };
        write!(f, "{c}{}", self.mode + 1)
    }
}

/// Parses one-based labels such as `q1` or `p2`.
impl FromStr for Quadrature {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let kind = match s.chars().next() {
            Some('q') | Some('Q') => QuadratureKind::Q,
            Some('p') | Some('P') => QuadratureKind::P,
            _ => return Err(invalid(format!("unknown quadrature label {s:?}"))),
        };
        let mode: usize = s[1..]
            .parse()
            .map_err(|_| invalid(format!("unknown quadrature label {s:?}")))?;
        if mode == 0 {
            return Err(invalid(format!("quadrature labels are one-based, got {s:?}")));
        }
        Ok(Self { mode: mode - 1, kind })
    }
}

/// Schur-complement state of the unmeasured mode after ideal homodyne
/// detection of one quadrature of `measured_mode`.
pub fn conditional_covariance_homodyne(
    state: &CovarianceMatrix,
    measured_mode: usize,
    measured_quadrature: QuadratureKind,
) -> Result<CovarianceMatrix> {
    if state.n_modes != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.n_modes,
        });
    }
    state.check_mode(measured_mode)?;
    let other = 1 - measured_mode;
    let a = state.block(measured_mode, measured_mode);
    let b = state.block(other, other);
    let c = state.block(measured_mode, other);
    let k = match measured_quadrature {
        QuadratureKind::Q => 0,
        QuadratureKind::P => 1,
    };
    let var = a[(k, k)];
    if !(var > 1e-300) {
        return Err(Error::Degenerate(format!(
            "measured quadrature variance {var} is not positive"
        )));
    }
    let row = c.row(k).transpose();
    let rem = b - row * row.transpose() / var;
    CovarianceMatrix::new(DMatrix::from_iterator(2, 2, rem.iter().copied()))
}

/// Fidelity of two zero-mean single-mode Gaussian states.
pub fn gaussian_fidelity_single_mode(v1: &CovarianceMatrix, v2: &CovarianceMatrix) -> Result<f64> {
    for v in [v1, v2] {
        if v.n_modes != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: v.n_modes,
            });
        }
        v.validate_physical()?;
    }
    let sum = (&v1.entries + &v2.entries).determinant();
    // rounding on a pure state's determinant would otherwise enter as √δ
    let excess = |v: &CovarianceMatrix| {
        let e = v.determinant() - 1.0;
        if e < 1e-12 {
            0.0
        } else {
            e
        }
    };
    let delta = excess(v1) * excess(v2);
    let f = 2.0 / ((sum + delta).sqrt() - delta.sqrt());
    Ok(f.clamp(0.0, 1.0))
}

/// Inclusive uniform grid `min, min + step, ..., max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl GridSpec {
    pub fn symmetric(half_range: f64, step: f64) -> Self {
        Self {
            min: -half_range,
            max: half_range,
            step,
        }
    }

    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(invalid("grid needs finite min < max and step > 0"));
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1;
        Ok((0..n).map(|i| self.min + i as f64 * self.step).collect())
    }
}

/// Bivariate marginal of the Wigner function sampled on a square grid.
/// `values[row][col]` is the density at `(x = axis[col], y = axis[row])`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalGrid {
    pub x_axis: Quadrature,
    pub y_axis: Quadrature,
    pub coords: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl MarginalGrid {
    /// Riemann sum of the density over the grid.
    pub fn integral(&self, step: f64) -> f64 {
        self.values.iter().flatten().sum::<f64>() * step * step
    }
}

pub fn wigner_marginal_grid(
    state: &CovarianceMatrix,
    axes: (Quadrature, Quadrature),
    grid: GridSpec,
) -> Result<MarginalGrid> {
    let (ix, iy) = (axes.0.index(), axes.1.index());
    if ix >= state.dim() || iy >= state.dim() {
        return Err(Error::ModeOutOfRange {
            index: ix.max(iy) / 2,
            n_modes: state.n_modes,
        });
    }
    if ix == iy {
        return Err(invalid("marginal axes must be distinct"));
    }
    let sub = Matrix2::new(
        state.get(ix, ix),
        state.get(ix, iy),
        state.get(iy, ix),
        state.get(iy, iy),
    );
    let det = sub.determinant();
    if !(det > 0.0) {
        return Err(Error::Degenerate(format!("sub-covariance determinant {det}")));
    }
    let inv = sub.try_inverse().ok_or(Error::NotPositiveDefinite)?;
    let norm = 1.0 / (2.0 * PI * det.sqrt());
    let coords = grid.points()?;
    let values = coords
        .iter()
        .map(|&y| {
            coords
                .iter()
                .map(|&x| {
                    let quad = inv[(0, 0)] * x * x + 2.0 * inv[(0, 1)] * x * y + inv[(1, 1)] * y * y;
                    norm * (-0.5 * quad).exp()
                })
                .collect()
        })
        .collect();
    Ok(MarginalGrid {
        x_axis: axes.0,
        y_axis: axes.1,
        coords,
        values,
    })
}
