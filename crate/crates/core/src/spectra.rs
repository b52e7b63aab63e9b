//! Semidefinite programming over Gram spectrahedra.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::TernaryForm;
use crate::gram::{self, FaceDescriptor, GramPencil, GramTensor, Subspace};
use crate::linalg;
use crate::steiner::{SteinerComplex, SteinerGraph};

/// Relative cutoff for ranks of solver outputs.
pub const SOLVER_RANK_TOL: f64 = 1e-6;
pub const DEFAULT_KKT_TOL: f64 = 1e-9;
pub const MAX_ITERATIONS: usize = 200;

type Mat = DMatrix<f64>;

/// `max bᵀy` subject to `C − Σ yᵢ Aᵢ ⪰ 0`, with the primal
/// `min ⟨C, X⟩` subject to `⟨Aᵢ, X⟩ = bᵢ`, `X ⪰ 0`.
#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub c: Mat,
    pub a: Vec<Mat>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LmiSolution {
    pub y: Vec<f64>,
    pub x: Mat,
    /// `C − Σ yᵢ Aᵢ`, recomputed from `y`.
    pub slack: Mat,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl LmiSolution {
    pub fn kkt(&self) -> f64 {
        self.primal_residual.max(self.dual_residual).max(self.gap)
    }
}

fn inner(a: &Mat, b: &Mat) -> f64 {
    a.component_mul(b).sum()
}

fn sym(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

/// `L` with `m = L Lᵀ` from the eigen-decomposition; robust for nearly
/// singular positive definite `m`.
fn sqrt_factor(m: &Mat) -> Mat {
    let (values, vectors) = linalg::sym_eigen(m);
    let d = Mat::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|v| v.max(1e-300).sqrt()),
    ));
    vectors * d
}

/// Largest step `α ≤ 1/0.99` keeping `Λ + α D ⪰ 0` for diagonal positive `Λ`.
fn max_step(lambda: &[f64], d: &Mat) -> f64 {
    let n = lambda.len();
    let scaled = Mat::from_fn(n, n, |i, j| d[(i, j)] / (lambda[i] * lambda[j]).sqrt());
    let min = linalg::sym_eigenvalues(&sym(&scaled))[0];
    if min >= 0.0 { f64::INFINITY } else { -1.0 / min }
}

/// Infeasible-start primal-dual path following with Nesterov–Todd scaling
/// and Mehrotra predictor-corrector steps.
pub fn solve_lmi(problem: &LmiProblem, tol: f64, max_iter: usize) -> Result<LmiSolution> {
    let n = problem.c.nrows();
    let m = problem.a.len();
    let c = sym(&problem.c);
    let a: Vec<Mat> = problem.a.iter().map(sym).collect();
    let b = &problem.b;
    let norm_b = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let norm_c = c.norm();

    let nf = n as f64;
    let xi = (0..m)
        .map(|i| nf * (1.0 + b[i].abs()) / (1.0 + a[i].norm()))
        .fold(10.0_f64.max(nf.sqrt()), f64::max);
    let eta = a.iter().map(|ai| ai.norm()).fold(10.0_f64.max(nf.sqrt()).max(norm_c), f64::max);
    let mut x = Mat::identity(n, n) * xi;
    let mut s = Mat::identity(n, n) * eta;
    let mut y = vec![0.0; m];

    let slack_of = |y: &[f64]| {
        let mut out = c.clone();
        for (yi, ai) in y.iter().zip(&a) {
            out -= ai * *yi;
        }
        out
    };
    let residuals = |x: &Mat, y: &[f64], s: &Mat| {
        let rp: Vec<f64> = (0..m).map(|i| b[i] - inner(&a[i], x)).collect();
        let rd = slack_of(y) - s;
        (rp, rd)
    };
    let measures = |x: &Mat, y: &[f64], rp: &[f64], rd: &Mat| {
        let pobj = inner(&c, x);
        let dobj: f64 = y.iter().zip(b).map(|(u, v)| u * v).sum();
        let pr = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + norm_b);
        let dr = rd.norm() / (1.0 + norm_c);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        (pr, dr, gap)
    };

    let mut last = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for iter in 0..max_iter {
        let (rp, rd) = residuals(&x, &y, &s);
        let (pr, dr, gap) = measures(&x, &y, &rp, &rd);
        last = (pr, dr, gap);
        if pr <= tol && dr <= tol && gap <= tol {
            let slack = slack_of(&y);
            return Ok(LmiSolution {
                y,
                x,
                slack,
                iterations: iter,
                primal_residual: pr,
                dual_residual: dr,
                gap,
            });
        }
        let mu = inner(&x, &s) / nf;

        // Nesterov–Todd scaling point R with Rᵀ S R = R⁻¹ X R⁻ᵀ = Λ.
        let l1 = sqrt_factor(&x);
        let l2 = sqrt_factor(&s);
        let prod = l2.transpose() * &l1;
        let svd = prod.svd(true, true);
        let lam: Vec<f64> = svd.singular_values.iter().map(|v| v.max(1e-300)).collect();
        let v = svd.v_t.expect("v requested").transpose();
        let r = &l1 * &v * Mat::from_diagonal(&nalgebra::DVector::from_iterator(n, lam.iter().map(|l| 1.0 / l.sqrt())));
        let rt = r.transpose();
        let at: Vec<Mat> = a.iter().map(|ai| &rt * ai * &r).collect();
        let rdt = &rt * &rd * &r;
        let schur = Mat::from_fn(m, m, |i, j| inner(&at[i], &at[j]));
        let lu = schur.clone().full_piv_lu();

        let direction = |rc: &Mat| -> (Vec<f64>, Mat, Mat) {
            let e = Mat::from_fn(n, n, |i, j| rc[(i, j)] / (lam[i] + lam[j]));
            let rhs = nalgebra::DVector::from_iterator(m, (0..m).map(|i| rp[i] - inner(&at[i], &(&e - &rdt))));
            let dy = lu.solve(&rhs).unwrap_or_else(|| nalgebra::DVector::zeros(m));
            let mut dst = rdt.clone();
            for (k, atk) in at.iter().enumerate() {
                dst -= atk * dy[k];
            }
            let dxt = &e - &dst;
            (dy.iter().copied().collect(), dxt, dst)
        };

        let lam_mat = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&lam));
        let lam_sq = &lam_mat * &lam_mat;
        // Predictor
        let (_, dxa, dsa) = direction(&(-&lam_sq * 2.0));
        let ap = (0.99 * max_step(&lam, &dxa)).min(1.0);
        let ad = (0.99 * max_step(&lam, &dsa)).min(1.0);
        let mu_aff = inner(&(&lam_mat + &dxa * ap), &(&lam_mat + &dsa * ad)) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // Corrector
        let cross = &dxa * &dsa;
        let rc = Mat::identity(n, n) * (2.0 * sigma * mu) - &lam_sq * 2.0 - (&cross + cross.transpose());
        let (dy, dxt, dst) = direction(&rc);
        let ap = (0.99 * max_step(&lam, &dxt)).min(1.0);
        let ad = (0.99 * max_step(&lam, &dst)).min(1.0);

        let r_inv_t = r.clone().try_inverse().ok_or(Error::NumericalFailure { iterations: iter, residual: pr.max(dr) })?.transpose();
        let dx = &r * &dxt * &rt;
        let ds = &r_inv_t * &dst * r_inv_t.transpose();
        x = sym(&(&x + dx * ap));
        s = sym(&(&s + ds * ad));
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        if !x.iter().chain(s.iter()).all(|v| v.is_finite()) {
            break;
        }
    }
    Err(Error::NumericalFailure { iterations: max_iter, residual: last.0.max(last.1).max(last.2) })
}

/// Linear objective over the Gram spectrahedron of the pencil's form.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    pub pencil: GramPencil,
    pub objective: Mat,
}

#[derive(Debug, Clone)]
pub struct ExtremeSample {
    pub lambda: [f64; 6],
    pub tensor: GramTensor,
    pub face: FaceDescriptor,
    pub objective: f64,
    pub kkt: f64,
    pub iterations: usize,
}

fn pencil_lmi(pencil: &GramPencil, objective: &Mat) -> LmiProblem {
    let dirs: Vec<Mat> = pencil.directions.iter().map(|d| d.real_matrix()).collect();
    LmiProblem {
        c: pencil.base.real_matrix(),
        b: dirs.iter().map(|d| -inner(objective, d)).collect(),
        a: dirs.iter().map(|d| -d).collect(),
    }
}

/// Face of the spectrahedron whose relative interior contains `θ`.
pub fn supporting_face(f: &TernaryForm, theta: &GramTensor, rank_tol: f64) -> Result<FaceDescriptor> {
    let residual = gram::gram_residual(theta, f);
    if residual > 1e-8 {
        return Err(Error::NotFeasible { residual });
    }
    Ok(FaceDescriptor::of_image(gram::image(theta, rank_tol)))
}

/// Minimizes `⟨C, G(λ)⟩` over the spectrahedron.
pub fn sdp_minimize(f: &TernaryForm, problem: &SdpProblem, tol: f64) -> Result<ExtremeSample> {
    sdp_minimize_with(f, problem, tol, SOLVER_RANK_TOL)
}

pub fn sdp_minimize_with(f: &TernaryForm, problem: &SdpProblem, tol: f64, rank_tol: f64) -> Result<ExtremeSample> {
    let lmi = pencil_lmi(&problem.pencil, &problem.objective);
    let sol = solve_lmi(&lmi, tol, MAX_ITERATIONS)?;
    let lambda: [f64; 6] = sol.y.clone().try_into().expect("six parameters");
    let tensor = problem.pencil.at(&lambda);
    let face = supporting_face(f, &tensor, rank_tol)?;
    Ok(ExtremeSample {
        lambda,
        objective: inner(&problem.objective, &tensor.real_matrix()),
        tensor,
        face,
        kkt: sol.kkt(),
        iterations: sol.iterations,
    })
}

/// Parameters of a point deep inside the spectrahedron: maximizes `t` with
/// `G(λ) − t I ⪰ 0`.
pub fn interior_point(pencil: &GramPencil) -> Result<[f64; 6]> {
    let mut lmi = pencil_lmi(pencil, &Mat::zeros(6, 6));
    lmi.a.push(Mat::identity(6, 6));
    lmi.b.push(1.0);
    let sol = solve_lmi(&lmi, DEFAULT_KKT_TOL, MAX_ITERATIONS)?;
    let lambda: [f64; 6] = sol.y[..6].try_into().expect("six parameters");
    let g = pencil.at(&lambda);
    let ev = g.eigenvalues();
    let scale = ev.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    if ev[0] < 1e-6 * scale || scale == 0.0 {
        return Err(Error::Infeasible { margin: sol.y[6] });
    }
    Ok(lambda)
}

/// Symmetric matrix from the Gaussian orthogonal ensemble.
pub fn goe(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = rng.sample::<f64, _>(StandardNormal);
        for j in i + 1..n {
            let v = rng.sample::<f64, _>(StandardNormal) * std::f64::consts::FRAC_1_SQRT_2;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Objective of sample `index`: a GOE matrix seeded by `seed + index`.
pub fn sample_objective(seed: u64, index: usize) -> Mat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    goe(&mut rng, 6)
}

/// Outcome of one sampling run; failures are kept rather than aborting.
#[derive(Debug, Clone)]
pub struct SampleRun {
    pub samples: Vec<ExtremeSample>,
    pub failures: Vec<(usize, Error)>,
}

impl SampleRun {
    /// Counts per `(rank, face_dim)`, sorted.
    pub fn histogram(&self) -> Vec<((usize, usize), usize)> {
        let mut h = std::collections::BTreeMap::new();
        for s in &self.samples {
            *h.entry((s.face.rank, s.face.face_dim)).or_insert(0) += 1;
        }
        h.into_iter().collect()
    }
}

/// `n` minimizations of random linear functionals over the spectrahedron.
pub fn sample_extreme_points(f: &TernaryForm, n: usize, seed: u64) -> SampleRun {
    sample_extreme_points_with(f, n, seed, SOLVER_RANK_TOL)
}

pub fn sample_extreme_points_with(f: &TernaryForm, n: usize, seed: u64, rank_tol: f64) -> SampleRun {
    let pencil = gram::gram_pencil(f);
    let results: Vec<Result<ExtremeSample>> = (0..n)
        .into_par_iter()
        .map(|k| {
            let problem = SdpProblem { pencil: pencil.clone(), objective: sample_objective(seed, k) };
            sdp_minimize_with(f, &problem, DEFAULT_KKT_TOL, rank_tol)
        })
        .collect();
    let mut run = SampleRun { samples: Vec::new(), failures: Vec::new() };
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(s) => run.samples.push(s),
            Err(e) => run.failures.push((k, e)),
        }
    }
    run
}

/// Real orthonormal basis (6×k) of the image of a real psd tensor.
fn real_image_basis(theta: &GramTensor, rank_tol: f64) -> Mat {
    let (values, vectors) = linalg::sym_eigen(&theta.real_matrix());
    let scale = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let keep: Vec<usize> = (0..6).filter(|&k| values[k] > rank_tol * scale).collect();
    Mat::from_fn(6, keep.len(), |i, j| vectors[(i, keep[j])])
}

/// Real basis of the symmetric `k×k` matrices `D` with `μ(B D Bᵀ) = 0`.
/// The basis is re-orthonormalized and returned alongside.
fn face_directions(basis: &Mat) -> (Mat, Vec<Mat>) {
    let u = Subspace::span(&linalg::complexify(basis), 1e-12);
    let (_, dirs) = gram::face_parametrization(&u, &GramTensor::zero());
    (linalg::real_part(u.basis()), dirs.iter().map(linalg::real_part).collect())
}

/// Minimizes `⟨C, θ⟩` over the face of the spectrahedron spanned by the
/// segment `θi θj` of a Steiner-graph edge.
pub fn face_extreme(
    f: &TernaryForm,
    theta_i: &GramTensor,
    theta_j: &GramTensor,
    direction: &Mat,
    tol: f64,
) -> Result<ExtremeSample> {
    let pencil = gram::gram_pencil(f);
    let mid = theta_i.add(theta_j).scale(0.5);
    let (basis, dirs) = face_directions(&real_image_basis(&mid, gram::DEFAULT_RANK_TOL));
    let finish = |tensor: GramTensor, kkt: f64, iterations: usize| -> Result<ExtremeSample> {
        let face = supporting_face(f, &tensor, SOLVER_RANK_TOL)?;
        Ok(ExtremeSample {
            lambda: pencil.coordinates(&tensor),
            objective: inner(direction, &tensor.real_matrix()),
            tensor,
            face,
            kkt,
            iterations,
        })
    };
    if dirs.len() <= 1 {
        // the face is the segment itself; pick the better endpoint
        let vi = inner(direction, &theta_i.real_matrix());
        let vj = inner(direction, &theta_j.real_matrix());
        let best = if vi <= vj { theta_i } else { theta_j };
        return finish(best.clone(), 0.0, 0);
    }
    let s0 = basis.transpose() * mid.real_matrix() * &basis;
    let reduced = basis.transpose() * direction * &basis;
    let lmi = LmiProblem {
        c: s0,
        b: dirs.iter().map(|d| -inner(&reduced, d)).collect(),
        a: dirs.iter().map(|d| -d).collect(),
    };
    let sol = solve_lmi(&lmi, tol, MAX_ITERATIONS)?;
    let full = &basis * &sol.slack * basis.transpose();
    finish(GramTensor::from_real_matrix(&sym(&full)), sol.kkt(), sol.iterations)
}

/// Projector onto the orthogonal complement of `im θ`; minimizing it over a
/// face containing `θ` as a vertex returns `θ`.
pub fn vertex_objective(theta: &GramTensor) -> Mat {
    let b = real_image_basis(theta, gram::DEFAULT_RANK_TOL);
    Mat::identity(6, 6) - &b * b.transpose()
}

/// A one-dimensional face of the spectrahedron: a rank-4 Steiner-graph edge
/// and the concurrent bitangents witnessing it.
#[derive(Debug, Clone, PartialEq)]
pub struct OneDimFace {
    pub edge: (usize, usize),
    pub complexes: (usize, usize),
    pub quadruple: [usize; 4],
    pub face_dim: usize,
}

/// Matches rank-4 edges with concurrent quadruples of shared bitangents and
/// checks that both detectors agree on every edge.
pub fn one_dim_face_report(
    complexes: &[SteinerComplex],
    graph: &SteinerGraph,
    quadruples: &[[usize; 4]],
) -> Result<Vec<OneDimFace>> {
    let mut out = Vec::new();
    for e in &graph.edges {
        let (ci, cj) = (graph.vertices[e.a], graph.vertices[e.b]);
        let shared: Vec<usize> =
            complexes[ci].bitangents().intersection(&complexes[cj].bitangents()).copied().collect();
        let concurrent = shared.len() == 4 && quadruples.iter().any(|q| q[..] == shared[..]);
        if (e.rank == 4) != concurrent {
            return Err(Error::DetectorDisagreement(format!(
                "edge ({}, {}) has rank {} but shared bitangents {:?} are {}concurrent",
                e.a,
                e.b,
                e.rank,
                shared,
                if concurrent { "" } else { "not " }
            )));
        }
        if e.rank == 4 {
            out.push(OneDimFace {
                edge: (e.a, e.b),
                complexes: (ci, cj),
                quadruple: [shared[0], shared[1], shared[2], shared[3]],
                face_dim: e.face_dim,
            });
        }
    }
    if out.len() > 6 {
        return Err(Error::DetectorDisagreement(format!("{} one-dimensional faces", out.len())));
    }
    Ok(out)
}

/// Axis-aligned box for the slice parameters `(λ1, λ2, λ3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SliceBox {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Default for SliceBox {
    fn default() -> Self {
        Self { lo: [0.0; 3], hi: [1.0; 3] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SliceRow {
    pub lambda: [f64; 3],
    pub det: f64,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Clone)]
pub struct PencilSlice {
    pub rows: Vec<SliceRow>,
    /// Coefficients of `det G` in the scaled coordinates `u = (λ − lo)/(hi − lo)`,
    /// one per exponent of [`slice_exponents`].
    pub polynomial: Vec<f64>,
    /// Largest interpolation error at held-out nodes relative to the largest
    /// sampled `|det|`.
    pub holdout_residual: f64,
}

/// Exponents of the trivariate monomials of degree at most 6 in graded order.
pub fn slice_exponents() -> Vec<[usize; 3]> {
    let mut out = Vec::new();
    for d in 0..=6 {
        for i in (0..=d).rev() {
            for j in (0..=d - i).rev() {
                out.push([i, j, d - i - j]);
            }
        }
    }
    out
}

fn eval_monomials(u: [f64; 3]) -> Vec<f64> {
    slice_exponents().iter().map(|e| u[0].powi(e[0] as i32) * u[1].powi(e[1] as i32) * u[2].powi(e[2] as i32)).collect()
}

/// `G(λ) = θ0 + Σ λk (θk − θ0)`.
pub struct AffineSlice {
    base: Mat,
    dirs: [Mat; 3],
}

impl AffineSlice {
    pub fn new(thetas: &[GramTensor; 4]) -> Result<Self> {
        let base = thetas[0].real_matrix();
        let dirs = [1, 2, 3].map(|k| thetas[k].real_matrix() - &base);
        let m = Mat::from_fn(36, 3, |r, c| dirs[c][(r / 6, r % 6)]);
        let sv = linalg::singular_values(&linalg::complexify(&m));
        if linalg::numerical_rank(&sv, 1e-10) < 3 {
            return Err(Error::AffinelyDependent);
        }
        Ok(Self { base, dirs })
    }

    pub fn at(&self, l: [f64; 3]) -> Mat {
        &self.base + &self.dirs[0] * l[0] + &self.dirs[1] * l[1] + &self.dirs[2] * l[2]
    }

    pub fn row(&self, l: [f64; 3]) -> SliceRow {
        let g = self.at(l);
        SliceRow { lambda: l, det: g.clone().determinant(), min_eigenvalue: linalg::sym_eigenvalues(&g)[0] }
    }
}

/// Grid nodes in row-major order (first coordinate slowest); `grid <= 1`
/// gives the box center.
pub fn grid_nodes(grid: usize, bx: &SliceBox) -> Vec<[f64; 3]> {
    if grid <= 1 {
        return vec![[0, 1, 2].map(|k| 0.5 * (bx.lo[k] + bx.hi[k]))];
    }
    let coord = |k: usize, i: usize| bx.lo[k] + (bx.hi[k] - bx.lo[k]) * i as f64 / (grid - 1) as f64;
    let mut out = Vec::with_capacity(grid * grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            for k in 0..grid {
                out.push([coord(0, i), coord(1, j), coord(2, k)]);
            }
        }
    }
    out
}

/// Samples `det G` and `λmin G` on a grid and recovers `det G` as a degree-6
/// polynomial by interpolation on the principal lattice of the simplex.
pub fn pencil_determinant_slice(thetas: &[GramTensor; 4], grid: usize, bx: &SliceBox) -> Result<PencilSlice> {
    let slice = AffineSlice::new(thetas)?;
    let rows: Vec<SliceRow> = grid_nodes(grid, bx).into_iter().map(|l| slice.row(l)).collect();
    let to_lambda = |u: [f64; 3]| [0, 1, 2].map(|k| bx.lo[k] + (bx.hi[k] - bx.lo[k]) * u[k]);

    let mut nodes = Vec::new();
    for i in 0..=6usize {
        for j in 0..=6 - i {
            for k in 0..=6 - i - j {
                nodes.push([i as f64 / 6.0, j as f64 / 6.0, k as f64 / 6.0]);
            }
        }
    }
    let n = nodes.len();
    let vand = Mat::from_fn(n, n, |r, c| eval_monomials(nodes[r])[c]);
    let values = nalgebra::DVector::from_iterator(n, nodes.iter().map(|u| slice.row(to_lambda(*u)).det));
    let coeffs = vand.full_piv_lu().solve(&values).ok_or(Error::AffinelyDependent)?;

    // held-out nodes: interior points of a shifted lattice
    let mut worst: f64 = 0.0;
    let mut scale: f64 = values.iter().fold(0.0, |a, v| a.max(v.abs()));
    for i in 0..5usize {
        for j in 0..5usize {
            for k in 0..5usize {
                let u = [(2 * i + 1) as f64 / 10.0, (2 * j + 1) as f64 / 10.0, (2 * k + 1) as f64 / 10.0];
                let exact = slice.row(to_lambda(u)).det;
                let approx: f64 = eval_monomials(u).iter().zip(coeffs.iter()).map(|(m, c)| m * c).sum();
                worst = worst.max((exact - approx).abs());
                scale = scale.max(exact.abs());
            }
        }
    }
    Ok(PencilSlice {
        rows,
        polynomial: coeffs.iter().copied().collect(),
        holdout_residual: if scale > 0.0 { worst / scale } else { worst },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{C64, ONE};

    fn fermat() -> TernaryForm {
        TernaryForm::from_terms(4, &[(ONE, [4, 0, 0]), (ONE, [0, 4, 0]), (ONE, [0, 0, 4])])
    }

    #[test]
    fn tiny_lmi() {
        // max y subject to [[1, y], [y, 1]] ⪰ 0 has optimum y = 1
        let problem = LmiProblem {
            c: Mat::identity(2, 2),
            a: vec![Mat::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0])],
            b: vec![1.0],
        };
        let sol = solve_lmi(&problem, 1e-9, 200).unwrap();
        assert!((sol.y[0] - 1.0).abs() < 1e-7, "{:?}", sol.y);
        assert!(sol.kkt() <= 1e-9);
    }

    #[test]
    fn fermat_vertex_by_complement_objective() {
        let f = fermat();
        let pencil = gram::gram_pencil(&f);
        let objective = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(&[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]));
        let sample = sdp_minimize(&f, &SdpProblem { pencil, objective }, 1e-9).unwrap();
        assert_eq!(sample.face.rank, 3);
        assert_eq!(sample.face.face_dim, 0);
        let mut theta0 = Mat::zeros(6, 6);
        for i in 0..3 {
            theta0[(i, i)] = 1.0;
        }
        assert!((sample.tensor.real_matrix() - theta0).norm() < 1e-6);
        assert!(sample.kkt <= 1e-9);
    }

    #[test]
    fn interior_points() {
        let f = fermat();
        let pencil = gram::gram_pencil(&f);
        let l = interior_point(&pencil).unwrap();
        let g = pencil.at(&l);
        assert!(g.min_eigenvalue() > 1e-6 * g.eigenvalues()[5]);
        assert_eq!(supporting_face(&f, &g, SOLVER_RANK_TOL).unwrap().face_dim, 6);

        let neg = f.scale(C64::new(-1.0, 0.0));
        assert!(matches!(interior_point(&gram::gram_pencil(&neg)), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn grid_layout() {
        let bx = SliceBox::default();
        assert_eq!(grid_nodes(0, &bx), vec![[0.5, 0.5, 0.5]]);
        let g = grid_nodes(2, &bx);
        assert_eq!(g.len(), 8);
        assert_eq!(g[1], [0.0, 0.0, 1.0]);
        assert_eq!(g[4], [1.0, 0.0, 0.0]);
        assert_eq!(slice_exponents().len(), 84);
    }
}
