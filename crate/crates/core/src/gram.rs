//! Gram tensors of ternary quartics in the basis `X = (x², y², z², xy, xz, yz)`.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector, SMatrix};

use crate::error::{Error, Result};
use crate::forms::{self, TernaryForm};
use crate::linalg::{self, C64, ONE, ZERO};

pub type Mat6 = SMatrix<C64, 6, 6>;

/// Imaginary parts at or below this magnitude count as real.
pub const REAL_TOL: f64 = 1e-10;
/// Relative eigenvalue floor for the psd predicate.
pub const PSD_TOL: f64 = 1e-9;
/// Default relative singular-value cutoff for ranks and images.
pub const DEFAULT_RANK_TOL: f64 = 1e-7;
/// Relative singular-value cutoff used when spanning `U²`.
pub const SQUARE_RANK_TOL: f64 = 1e-9;

/// Symmetric 6×6 tensor over ℂ.
#[derive(Debug, Clone, PartialEq)]
pub struct GramTensor {
    entries: Mat6,
    real: bool,
}

impl GramTensor {
    /// Symmetrizes the input exactly and records whether it is real.
    pub fn new(entries: Mat6) -> Self {
        let sym = (entries + entries.transpose()) * C64::new(0.5, 0.0);
        let real = sym.iter().all(|c| c.im.abs() <= REAL_TOL);
        Self { entries: sym, real }
    }

    pub fn from_real(rows: &[[f64; 6]; 6]) -> Self {
        Self::new(Mat6::from_fn(|i, j| C64::new(rows[i][j], 0.0)))
    }

    pub fn from_real_matrix(m: &DMatrix<f64>) -> Self {
        assert_eq!(m.shape(), (6, 6));
        Self::new(Mat6::from_fn(|i, j| C64::new(m[(i, j)], 0.0)))
    }

    pub fn zero() -> Self {
        Self::new(Mat6::zeros())
    }

    pub fn entries(&self) -> &Mat6 {
        &self.entries
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn max_imag(&self) -> f64 {
        self.entries.iter().fold(0.0, |a, c| a.max(c.im.abs()))
    }

    pub fn real_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(6, 6, |i, j| self.entries[(i, j)].re)
    }

    pub fn complex_matrix(&self) -> DMatrix<C64> {
        DMatrix::from_fn(6, 6, |i, j| self.entries[(i, j)])
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.entries + other.entries)
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::new(self.entries - other.entries)
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.entries * C64::new(s, 0.0))
    }

    pub fn conj(&self) -> Self {
        Self::new(self.entries.map(|c| c.conj()))
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Eigenvalues of the real part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigenvalues(&self.real_matrix())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Real tensor whose smallest eigenvalue is at least `-PSD_TOL` times the
    /// spectral norm.
    pub fn is_psd(&self) -> bool {
        if !self.real {
            return false;
        }
        let ev = self.eigenvalues();
        let scale = ev.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        ev[0] >= -PSD_TOL * scale
    }

    pub fn singular_values(&self) -> Vec<f64> {
        linalg::singular_values(&self.complex_matrix())
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        linalg::numerical_rank(&self.singular_values(), rel_tol)
    }
}

/// For each pair `i <= j` of quadratic monomials, the index of `X_i X_j`
/// among the quartic monomials.
fn product_table() -> &'static [[usize; 6]; 6] {
    static TABLE: OnceLock<[[usize; 6]; 6]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let quad = forms::exponents(2);
        let mut t = [[0; 6]; 6];
        for i in 0..6 {
            for j in 0..6 {
                let e = [quad[i][0] + quad[j][0], quad[i][1] + quad[j][1], quad[i][2] + quad[j][2]];
                t[i][j] = forms::monomial_index(e);
            }
        }
        t
    })
}

/// The Gram map `θ ↦ X θ Xᵀ`.
pub fn gram_map(theta: &GramTensor) -> TernaryForm {
    let table = product_table();
    let mut coeffs = vec![ZERO; 15];
    for i in 0..6 {
        for j in 0..6 {
            coeffs[table[i][j]] += theta.entries[(i, j)];
        }
    }
    TernaryForm::new(4, coeffs).expect("15 quartic coefficients")
}

/// Relative residual `‖μ(θ) − f‖ / ‖f‖`.
pub fn gram_residual(theta: &GramTensor, f: &TernaryForm) -> f64 {
    let n = f.norm().max(f64::MIN_POSITIVE);
    gram_map(theta).sub(f).norm() / n
}

/// Subspace of quadratic (or quartic) forms with a Hermitian-orthonormal
/// basis stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: DMatrix<C64>,
}

impl Subspace {
    /// Orthonormal basis of the span of the given columns, rank decided at
    /// `rel_tol`.
    pub fn span(columns: &DMatrix<C64>, rel_tol: f64) -> Self {
        if columns.ncols() == 0 {
            return Self { basis: DMatrix::zeros(columns.nrows(), 0) };
        }
        let (u, singular) = linalg::full_left_basis(columns);
        let rank = linalg::numerical_rank(&singular, rel_tol);
        Self { basis: u.columns(0, rank).into_owned() }
    }

    pub fn from_forms(forms: &[TernaryForm], rel_tol: f64) -> Self {
        let rows = forms.first().map_or(6, |f| f.coeffs().len());
        let m = DMatrix::from_fn(rows, forms.len(), |i, j| forms[j].coeffs()[i]);
        Self::span(&m, rel_tol)
    }

    pub fn whole(ambient: usize) -> Self {
        Self { basis: DMatrix::from_fn(ambient, ambient, |i, j| if i == j { ONE } else { ZERO }) }
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.basis.nrows()
    }

    /// Basis vectors as forms (degree 2 for 6-dim ambient, 4 for 15).
    pub fn forms(&self) -> Vec<TernaryForm> {
        let degree = if self.ambient() == 6 { 2 } else { 4 };
        (0..self.dim())
            .map(|k| TernaryForm::new(degree, self.basis.column(k).iter().copied().collect()).unwrap())
            .collect()
    }

    /// Distance of `v` from the subspace, relative to `‖v‖`.
    pub fn relative_distance(&self, v: &[C64]) -> f64 {
        let v = DVector::from_column_slice(v);
        let n = v.norm();
        if n == 0.0 {
            return 0.0;
        }
        let proj = &self.basis * (self.basis.adjoint() * &v);
        (v - proj).norm() / n
    }

    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        (0..other.dim()).all(|k| {
            let col: Vec<C64> = other.basis.column(k).iter().copied().collect();
            self.relative_distance(&col) <= tol
        })
    }

    /// Whether complex conjugation maps the subspace to itself.
    pub fn is_conjugation_stable(&self, tol: f64) -> bool {
        (0..self.dim()).all(|k| {
            let col: Vec<C64> = self.basis.column(k).iter().map(|c| c.conj()).collect();
            self.relative_distance(&col) <= tol
        })
    }

    /// Real orthonormal basis of a conjugation-stable subspace.
    pub fn real_form(&self) -> Self {
        let n = self.ambient();
        let k = self.dim();
        let mut m = DMatrix::<C64>::zeros(n, 2 * k);
        for j in 0..k {
            for i in 0..n {
                m[(i, j)] = C64::new(self.basis[(i, j)].re, 0.0);
                m[(i, k + j)] = C64::new(self.basis[(i, j)].im, 0.0);
            }
        }
        let (u, _) = linalg::full_left_basis(&m);
        let cols = u.columns(0, k).into_owned();
        // Left singular vectors of a real matrix may carry a complex phase.
        let mut basis = DMatrix::<C64>::zeros(n, k);
        for j in 0..k {
            let col = cols.column(j);
            let pivot = (0..n).max_by(|&a, &b| col[a].norm().total_cmp(&col[b].norm())).unwrap();
            let phase = col[pivot].conj() / col[pivot].norm();
            for i in 0..n {
                basis[(i, j)] = C64::new((col[i] * phase).re, 0.0);
            }
        }
        Self::span(&basis, 1e-12)
    }

    pub fn sum(&self, other: &Self, rel_tol: f64) -> Self {
        let mut m = DMatrix::<C64>::zeros(self.ambient(), self.dim() + other.dim());
        m.view_mut((0, 0), (self.ambient(), self.dim())).copy_from(&self.basis);
        m.view_mut((0, self.dim()), (self.ambient(), other.dim())).copy_from(&other.basis);
        Self::span(&m, rel_tol)
    }
}

/// The affine family `G0 + Σ λᵢ Bᵢ` of all Gram matrices of a real quartic.
#[derive(Debug, Clone, PartialEq)]
pub struct GramPencil {
    pub base: GramTensor,
    pub directions: [GramTensor; 6],
}

/// Index pairs `(i, j)` carrying `+λ` and the pair carrying the compensating
/// entry, for each of the six pencil directions.
const PENCIL_PATTERN: [((usize, usize), (usize, usize), f64); 6] = [
    ((0, 1), (3, 3), -2.0),
    ((0, 2), (4, 4), -2.0),
    ((1, 2), (5, 5), -2.0),
    ((0, 5), (3, 4), -1.0),
    ((1, 4), (3, 5), -1.0),
    ((2, 3), (4, 5), -1.0),
];

impl GramPencil {
    pub fn at(&self, lambda: &[f64; 6]) -> GramTensor {
        let mut m = *self.base.entries();
        for (l, b) in lambda.iter().zip(&self.directions) {
            m += b.entries() * C64::new(*l, 0.0);
        }
        GramTensor::new(m)
    }

    /// Pencil coordinates of a Gram tensor of the same form.
    pub fn coordinates(&self, theta: &GramTensor) -> [f64; 6] {
        let mut out = [0.0; 6];
        for (k, ((i, j), _, _)) in PENCIL_PATTERN.iter().enumerate() {
            out[k] = theta.entries()[(*i, *j)].re - self.base.entries()[(*i, *j)].re;
        }
        out
    }
}

/// The Gram pencil of a real quartic.
pub fn gram_pencil(f: &TernaryForm) -> GramPencil {
    assert_eq!(f.degree(), 4, "gram pencil needs a quartic");
    let c = |e: [usize; 3]| f.coeff(e).re;
    let mut g = [[0.0; 6]; 6];
    let mut put = |i: usize, j: usize, v: f64| {
        g[i][j] = v;
        g[j][i] = v;
    };
    put(0, 0, c([4, 0, 0]));
    put(1, 1, c([0, 4, 0]));
    put(2, 2, c([0, 0, 4]));
    put(0, 3, 0.5 * c([3, 1, 0]));
    put(0, 4, 0.5 * c([3, 0, 1]));
    put(1, 3, 0.5 * c([1, 3, 0]));
    put(1, 5, 0.5 * c([0, 3, 1]));
    put(2, 4, 0.5 * c([1, 0, 3]));
    put(2, 5, 0.5 * c([0, 1, 3]));
    put(3, 3, c([2, 2, 0]));
    put(3, 4, 0.5 * c([2, 1, 1]));
    put(3, 5, 0.5 * c([1, 2, 1]));
    put(4, 4, c([2, 0, 2]));
    put(4, 5, 0.5 * c([1, 1, 2]));
    put(5, 5, c([0, 2, 2]));
    let base = GramTensor::from_real(&g);
    let directions = PENCIL_PATTERN.map(|((i, j), (k, l), v)| {
        let mut b = [[0.0; 6]; 6];
        b[i][j] = 1.0;
        b[j][i] = 1.0;
        b[k][l] = v;
        b[l][k] = v;
        GramTensor::from_real(&b)
    });
    GramPencil { base, directions }
}

/// Image of `θ` as a subspace of quadratics.
pub fn image(theta: &GramTensor, rank_tol: f64) -> Subspace {
    if theta.is_real() {
        let (values, vectors) = linalg::sym_eigen(&theta.real_matrix());
        let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let keep: Vec<usize> = (0..6).filter(|&k| scale > 0.0 && values[k].abs() > rank_tol * scale).collect();
        let basis = DMatrix::from_fn(6, keep.len(), |i, j| C64::new(vectors[(i, keep[j])], 0.0));
        Subspace { basis }
    } else {
        let s = linalg::svd(&theta.complex_matrix());
        let rank = linalg::numerical_rank(&s.singular, rank_tol);
        Subspace { basis: s.u.columns(0, rank).into_owned() }
    }
}

/// Span of all pairwise products of a space of quadratics.
pub fn square_space(u: &Subspace) -> Subspace {
    let forms = u.forms();
    let mut products = Vec::new();
    for i in 0..forms.len() {
        for j in i..forms.len() {
            products.push(forms[i].product(&forms[j]));
        }
    }
    if products.is_empty() {
        return Subspace { basis: DMatrix::zeros(15, 0) };
    }
    Subspace::from_forms(&products, SQUARE_RANK_TOL)
}

/// `dim Sym²U − dim U²`.
pub fn face_dimension(u: &Subspace) -> usize {
    let k = u.dim();
    let sym = linalg::binomial(k + 1, 2);
    sym.saturating_sub(square_space(u).dim())
}

/// Rank, face dimension and image of a tensor's supporting face.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceDescriptor {
    pub rank: usize,
    pub face_dim: usize,
    pub image: Subspace,
}

impl FaceDescriptor {
    pub fn of_image(image: Subspace) -> Self {
        Self { rank: image.dim(), face_dim: face_dimension(&image), image }
    }
}

/// Result of reconstructing a tensor from its image.
#[derive(Debug, Clone)]
pub struct ImageSolve {
    pub tensor: GramTensor,
    /// `sigma_min / sigma_max` of the linear system.
    pub condition: f64,
    pub residual: f64,
}

/// Matrix whose columns are `μ` of the symmetric basis tensors of `Sym²U`,
/// ordered `(0,0), (0,1), …, (1,1), …`.
fn sym_square_matrix(u: &Subspace) -> (DMatrix<C64>, Vec<(usize, usize)>) {
    let forms = u.forms();
    let k = forms.len();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i..k {
            pairs.push((i, j));
        }
    }
    let mut m = DMatrix::<C64>::zeros(15, pairs.len());
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let p = forms[i].product(&forms[j]);
        let factor = if i == j { 1.0 } else { 2.0 };
        for r in 0..15 {
            m[(r, col)] = p.coeffs()[r] * factor;
        }
    }
    (m, pairs)
}

fn assemble(u: &Subspace, pairs: &[(usize, usize)], coords: &DVector<C64>) -> GramTensor {
    let k = u.dim();
    let mut s = DMatrix::<C64>::zeros(k, k);
    for (&(i, j), v) in pairs.iter().zip(coords.iter()) {
        s[(i, j)] = *v;
        s[(j, i)] = *v;
    }
    let b = u.basis();
    let full = b * s * b.transpose();
    GramTensor::new(Mat6::from_fn(|i, j| full[(i, j)]))
}

/// The unique Gram tensor of `f` whose image lies in `U`, with diagnostics.
pub fn gram_from_image_with_diagnostics(f: &TernaryForm, u: &Subspace) -> Result<ImageSolve> {
    let (m, pairs) = sym_square_matrix(u);
    if pairs.len() > 15 {
        return Err(Error::SingularSystem { condition: 0.0 });
    }
    let rhs = DVector::from_column_slice(f.coeffs());
    let (coords, condition) = linalg::lstsq(&m, &rhs);
    if condition < 1e-10 {
        return Err(Error::SingularSystem { condition });
    }
    let tensor = assemble(u, &pairs, &coords);
    let residual = gram_residual(&tensor, f);
    if residual > 1e-9 {
        return Err(Error::NoSolution { residual });
    }
    Ok(ImageSolve { tensor, condition, residual })
}

pub fn gram_from_image(f: &TernaryForm, u: &Subspace) -> Result<GramTensor> {
    gram_from_image_with_diagnostics(f, u).map(|s| s.tensor)
}

/// A strictly sos quartic `μ(AᵀA/6 + I/10)` with `A` a seeded standard
/// Gaussian 6×6 matrix.
pub fn random_sos_quartic(seed: u64) -> TernaryForm {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::<f64>::from_fn(6, 6, |_, _| rng.sample(rand_distr::StandardNormal));
    let theta = a.transpose() * a / 6.0 + DMatrix::<f64>::identity(6, 6) * 0.1;
    gram_map(&GramTensor::from_real_matrix(&theta))
}

/// Affine parametrization of the Gram tensors with image inside `U` that share
/// `μ` with `particular`:
/// a particular solution plus a basis of the kernel of `μ` on `Sym²U`, both
/// expressed as `dim U × dim U` symmetric coordinate matrices.
pub fn face_parametrization(u: &Subspace, particular: &GramTensor) -> (DMatrix<C64>, Vec<DMatrix<C64>>) {
    let (m, pairs) = sym_square_matrix(u);
    let k = u.dim();
    let kernel = linalg::null_space(&m, SQUARE_RANK_TOL);
    let to_sym = |v: &[C64]| {
        let mut s = DMatrix::<C64>::zeros(k, k);
        for (&(i, j), x) in pairs.iter().zip(v) {
            s[(i, j)] = *x;
            s[(j, i)] = *x;
        }
        s
    };
    let dirs = (0..kernel.ncols())
        .map(|c| to_sym(&kernel.column(c).iter().copied().collect::<Vec<_>>()))
        .collect();
    let b = u.basis();
    let p = particular.complex_matrix();
    let s0 = b.adjoint() * p * b.map(|c| c.conj());
    (s0, dirs)
}

/// Lower-triangular `a` with `f = Σᵢ (Σ_{j≤i} a_ij p_j)²` for a real psd `θ`
/// and a basis `p` of its image.
pub fn triangular_sos(theta: &GramTensor, basis: &[TernaryForm]) -> Result<Vec<Vec<f64>>> {
    let r = basis.len();
    let rank = theta.rank(DEFAULT_RANK_TOL);
    if rank != r || !theta.is_real() {
        return Err(Error::RankMismatch { expected: r, found: rank });
    }
    let p = DMatrix::from_fn(6, r, |i, j| basis[j].coeffs()[i].re);
    let pinv = p
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|_| Error::RankMismatch { expected: r, found: 0 })?;
    let theta_m = theta.real_matrix();
    let s = &pinv * &theta_m * pinv.transpose();
    // θ must live in span(p) ⊗ span(p)
    let back = &p * &s * p.transpose();
    if (&back - &theta_m).norm() > 1e-9 * theta_m.norm().max(1.0) {
        return Err(Error::RankMismatch { expected: r, found: rank });
    }
    // S = Lᵀ L with L lower triangular: Cholesky of the reversed matrix.
    let rev = DMatrix::from_fn(r, r, |i, j| s[(r - 1 - i, r - 1 - j)]);
    let chol = nalgebra::Cholesky::new((&rev + rev.transpose()) * 0.5)
        .ok_or(Error::RankMismatch { expected: r, found: rank })?;
    let m = chol.l();
    // J M J is upper triangular U' with S = U' U'ᵀ, so L = U'ᵀ.
    let upper = DMatrix::from_fn(r, r, |i, j| m[(r - 1 - i, r - 1 - j)]);
    let lower = upper.transpose();
    Ok((0..r).map(|i| (0..=i).map(|j| lower[(i, j)]).collect()).collect())
}
