//! Small dense linear-algebra helpers shared by the geometric modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Thin singular value decomposition `m = u · diag(singular) · v_adj`, with
/// singular values descending and `k = min(rows, cols)` of them.
pub struct Svd {
    pub u: DMatrix<C64>,
    pub singular: Vec<f64>,
    pub v_adj: DMatrix<C64>,
}

impl Svd {
    /// Least-squares solution `V Σ⁺ Uᴴ rhs`, dropping singular values at or
    /// below `cutoff`.
    pub fn solve(&self, rhs: &DVector<C64>, cutoff: f64) -> DVector<C64> {
        let mut coeffs = self.u.adjoint() * rhs;
        for (k, c) in coeffs.iter_mut().enumerate() {
            let s = self.singular[k];
            *c = if s > cutoff { *c / s } else { ZERO };
        }
        self.v_adj.adjoint() * coeffs
    }
}

// nalgebra's complex SVD returns inaccurate factors for some rank-deficient
// inputs (reconstruction errors of order 1e-1 were observed), so complex SVDs
// go through a one-sided Jacobi iteration instead.
pub fn svd(m: &DMatrix<C64>) -> Svd {
    if m.nrows() >= m.ncols() {
        let (u, singular, v) = jacobi_svd(m);
        Svd { u, singular, v_adj: v.adjoint() }
    } else {
        // m = (mᴴ)ᴴ = (U Σ Vᴴ)ᴴ = V Σ Uᴴ
        let (u, singular, v) = jacobi_svd(&m.adjoint());
        Svd { u: v, singular, v_adj: u.adjoint() }
    }
}

/// One-sided (Hestenes) Jacobi for `rows >= cols`: returns `u` (rows×cols,
/// orthonormal columns), singular values, and the unitary `v` (cols×cols).
fn jacobi_svd(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>, DMatrix<C64>) {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut v = DMatrix::<C64>::identity(cols, cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha: f64 = a.column(p).iter().map(|c| c.norm_sqr()).sum();
                let beta: f64 = a.column(q).iter().map(|c| c.norm_sqr()).sum();
                let gamma: C64 = a.column(p).iter().zip(a.column(q).iter()).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let ph = phase.conj();
                for mat in [&mut a, &mut v] {
                    for i in 0..mat.nrows() {
                        let xp = mat[(i, p)];
                        let xq = mat[(i, q)] * ph;
                        mat[(i, p)] = xp * c - xq * s;
                        mat[(i, q)] = xp * s + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|k| a.column(k).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let top = norms.iter().fold(0.0_f64, |acc, &x| acc.max(x));
    let mut u = DMatrix::<C64>::zeros(rows, cols);
    let mut v_sorted = DMatrix::<C64>::zeros(cols, cols);
    let mut singular = Vec::with_capacity(cols);
    for (k, &j) in order.iter().enumerate() {
        singular.push(norms[j]);
        v_sorted.set_column(k, &v.column(j));
        if norms[j] > 0.0 && norms[j] > 1e-300 {
            u.set_column(k, &(a.column(j) / C64::new(norms[j], 0.0)));
        }
    }
    orthonormal_completion(&mut u, &singular, top);
    (u, singular, v_sorted)
}

/// Re-orthonormalizes the columns of `u` in order, replacing columns that
/// belong to negligible singular values (or lose their length) with unit
/// vectors orthogonal to the previous ones.
fn orthonormal_completion(u: &mut DMatrix<C64>, singular: &[f64], top: f64) {
    let rows = u.nrows();
    let mut next_unit = 0;
    for k in 0..u.ncols() {
        let keep = top > 0.0 && singular[k] > 1e-13 * top;
        let mut col: DVector<C64> = if keep { u.column(k).into_owned() } else { DVector::zeros(rows) };
        let mut ok = keep && project_out(u, k, &mut col) > 0.5;
        while !ok && next_unit < rows {
            col = DVector::zeros(rows);
            col[next_unit] = ONE;
            next_unit += 1;
            ok = project_out(u, k, &mut col) > 1e-3;
        }
        let n = col.norm();
        u.set_column(k, &(col / C64::new(n, 0.0)));
    }
}

/// Removes the components along the first `k` columns (twice, for
/// stability) and returns the remaining norm.
fn project_out(u: &DMatrix<C64>, k: usize, col: &mut DVector<C64>) -> f64 {
    for _ in 0..2 {
        for j in 0..k {
            let uj = u.column(j);
            let d: C64 = uj.iter().zip(col.iter()).map(|(x, y)| x.conj() * y).sum();
            for i in 0..col.len() {
                col[i] -= uj[i] * d;
            }
        }
    }
    col.norm()
}

pub fn singular_values(m: &DMatrix<C64>) -> Vec<f64> {
    svd(m).singular
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(singular: &[f64], rel_tol: f64) -> usize {
    let top = singular.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > rel_tol * top).count()
}

/// Full SVD padded so that `u` is square; nalgebra returns thin factors.
pub fn full_left_basis(m: &DMatrix<C64>) -> (DMatrix<C64>, Vec<f64>) {
    let rows = m.nrows();
    let cols = m.ncols();
    if cols >= rows {
        let s = svd(m);
        return (s.u, s.singular);
    }
    let mut padded = DMatrix::<C64>::zeros(rows, rows);
    padded.view_mut((0, 0), (rows, cols)).copy_from(m);
    let s = svd(&padded);
    let mut singular = s.singular;
    singular.truncate(cols);
    (s.u, singular)
}

/// Orthonormal basis (columns) of the null space of `m` (`m x = 0`).
pub fn null_space(m: &DMatrix<C64>, rel_tol: f64) -> DMatrix<C64> {
    let cols = m.ncols();
    let rows = m.nrows();
    let square = if rows >= cols {
        m.clone()
    } else {
        let mut padded = DMatrix::<C64>::zeros(cols, cols);
        padded.view_mut((0, 0), (rows, cols)).copy_from(m);
        padded
    };
    let s = svd(&square);
    let rank = numerical_rank(&s.singular, rel_tol);
    let v = s.v_adj.adjoint();
    v.columns(rank, cols - rank).into_owned()
}

/// Eigen-decomposition of a real symmetric matrix, eigenvalues ascending.
pub fn sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    (values, vectors)
}

pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    sym_eigen(m).0
}

pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m).iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Roots of `sum_k coeffs[k] * u^k` via companion-matrix eigenvalues.
///
/// The leading coefficient must be nonzero; callers strip vanishing leading
/// terms first.
pub fn poly_roots(coeffs: &[C64]) -> Vec<C64> {
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = coeffs[degree];
    if degree == 1 {
        return vec![-coeffs[0] / lead];
    }
    if degree == 2 {
        return quadratic_roots(coeffs[2], coeffs[1], coeffs[0]).to_vec();
    }
    let mut companion = DMatrix::<C64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = ONE;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -coeffs[i] / lead;
    }
    // nalgebra's default Schur iteration is unbounded and can stall on
    // companion matrices with exactly repeated roots.
    let roots: Vec<C64> = nalgebra::Schur::try_new(companion, f64::EPSILON, 2000)
        .and_then(|s| s.eigenvalues())
        .map(|v| v.iter().copied().collect())
        .unwrap_or_else(|| aberth(coeffs));
    // A few Newton steps tighten simple roots; clustered ones are left alone.
    roots
        .into_iter()
        .map(|r| polish_root(coeffs, r))
        .collect()
}

/// Aberth–Ehrlich simultaneous iteration, used when the Schur form fails.
fn aberth(coeffs: &[C64]) -> Vec<C64> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    let radius = coeffs[..degree]
        .iter()
        .map(|c| (c / lead).norm())
        .fold(0.0_f64, f64::max)
        + 1.0;
    let mut z: Vec<C64> = (0..degree)
        .map(|k| C64::from_polar(radius * 0.5, 0.4 + 2.0 * std::f64::consts::PI * k as f64 / degree as f64))
        .collect();
    for _ in 0..500 {
        let mut moved = 0.0_f64;
        for k in 0..degree {
            let (value, deriv) = horner_with_derivative(coeffs, z[k]);
            if value.norm() == 0.0 {
                continue;
            }
            let ratio = value / deriv;
            let repulsion: C64 = (0..degree).filter(|&j| j != k).map(|j| ONE / (z[k] - z[j])).sum();
            let step = ratio / (ONE - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / (1.0 + z[k].norm()));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

fn polish_root(coeffs: &[C64], mut root: C64) -> C64 {
    for _ in 0..3 {
        let (value, deriv) = horner_with_derivative(coeffs, root);
        if deriv.norm() == 0.0 {
            break;
        }
        let step = value / deriv;
        let scale = 1.0 + root.norm();
        if !step.is_finite() || step.norm() > 1e-6 * scale {
            break;
        }
        root -= step;
    }
    root
}

fn horner_with_derivative(coeffs: &[C64], x: C64) -> (C64, C64) {
    let mut value = ZERO;
    let mut deriv = ZERO;
    for &c in coeffs.iter().rev() {
        deriv = deriv * x + value;
        value = value * x + c;
    }
    (value, deriv)
}

/// Numerically stable roots of `a u^2 + b u + c` with `a != 0`.
pub fn quadratic_roots(a: C64, b: C64, c: C64) -> [C64; 2] {
    let disc = (b * b - a * c * 4.0).sqrt();
    let plus = -b + disc;
    let minus = -b - disc;
    let big = if plus.norm() >= minus.norm() { plus } else { minus };
    if big.norm() == 0.0 {
        return [ZERO, ZERO];
    }
    let r1 = big / (a * 2.0);
    let r2 = (c * 2.0) / big;
    [r1, r2]
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Hermitian inner product `<a, b> = sum conj(a_i) b_i`.
pub fn hdot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Chordal distance between the projective points spanned by `a` and `b`.
pub fn chordal(a: &[C64], b: &[C64]) -> f64 {
    let na = vec_norm(a);
    let nb = vec_norm(b);
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    // Lagrange identity; avoids the cancellation in 1 − |⟨a,b⟩|².
    let mut wedge = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            wedge += (a[i] * b[j] - a[j] * b[i]).norm_sqr();
        }
    }
    (wedge.sqrt() / (na * nb)).min(1.0)
}

/// Solve `m x = rhs` in the least-squares sense; returns the solution and the
/// ratio `sigma_min / sigma_max` of `m`.
pub fn lstsq(m: &DMatrix<C64>, rhs: &DVector<C64>) -> (DVector<C64>, f64) {
    let svd = svd(m);
    let top = svd.singular.first().copied().unwrap_or(0.0);
    let bottom = svd.singular.last().copied().unwrap_or(0.0);
    let ratio = if top > 0.0 { bottom / top } else { 0.0 };
    (svd.solve(rhs, top * 1e-14), ratio)
}

pub fn real_part(m: &DMatrix<C64>) -> DMatrix<f64> {
    m.map(|c| c.re)
}

pub fn complexify(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|r| C64::new(r, 0.0))
}

pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}
