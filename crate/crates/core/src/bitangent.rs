//! The 28 bitangents of a smooth plane quartic.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Matrix5, Vector5};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forms::{self, BinaryForm, ProjPoint, TernaryForm};
use crate::linalg::{self, C64, ONE, ZERO};

pub const BITANGENT_COUNT: usize = 28;
/// Relative residual allowed in the square certificate.
pub const CERT_TOL: f64 = 1e-8;
/// Lines closer than this (chordal) are the same line.
pub const DEDUP_TOL: f64 = 1e-6;
/// Imaginary parts of a normalized real line stay below this.
pub const REAL_LINE_TOL: f64 = 1e-9;
pub const DEFAULT_BUDGET: usize = 20_000;
const BATCH: usize = 256;
const SMOOTH_GRID: usize = 60;
const SMOOTH_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Bitangent {
    /// Linear form, unit norm, first non-negligible coefficient real positive.
    pub line: TernaryForm,
    pub contacts: [ProjPoint; 2],
    pub real: bool,
    pub hyperflex: bool,
    pub index: usize,
    /// Relative residual of the square certificate.
    pub residual: f64,
    /// Unit quadratic `q` with `f` restricted to the line proportional to
    /// `q²`, in the coordinates of [`line_basis`].
    pub contact_form: BinaryForm,
}

impl Bitangent {
    pub fn coords(&self) -> [C64; 3] {
        let c = self.line.coeffs();
        [c[0], c[1], c[2]]
    }
}

/// Search controls for [`compute_bitangents_with`].
#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub budget: usize,
    pub cert_tol: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { budget: DEFAULT_BUDGET, cert_tol: CERT_TOL }
    }
}

/// Minimum of `|f| + ‖∇f‖` over a grid of real points of the unit sphere,
/// for `f` scaled to unit coefficient norm.
pub fn smoothness_margin(f: &TernaryForm) -> f64 {
    let n = f.norm();
    if n == 0.0 {
        return 0.0;
    }
    let f = f.scale(C64::new(1.0 / n, 0.0));
    let grad = f.gradient();
    let mut best = f64::INFINITY;
    let steps = SMOOTH_GRID;
    for i in 0..steps {
        // polar angle over the closed upper hemisphere, azimuth over [0, 2π)
        let theta = std::f64::consts::FRAC_PI_2 * i as f64 / (steps - 1) as f64;
        for j in 0..steps {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / steps as f64;
            let v = [
                C64::new(theta.sin() * phi.cos(), 0.0),
                C64::new(theta.sin() * phi.sin(), 0.0),
                C64::new(theta.cos(), 0.0),
            ];
            let g: f64 = grad.iter().map(|d| d.eval_at(&v).norm_sqr()).sum::<f64>().sqrt();
            best = best.min(f.eval_at(&v).norm() + g);
        }
    }
    best
}

pub fn check_smooth(f: &TernaryForm) -> Result<()> {
    if f.norm() == 0.0 {
        return Err(Error::ZeroForm);
    }
    let margin = smoothness_margin(f);
    if margin < SMOOTH_TOL {
        return Err(Error::NotSmooth { min_value: margin });
    }
    Ok(())
}

/// Orthonormal pair spanning the points of the line `l · x = 0`.
pub fn line_basis(l: &[C64; 3]) -> ([C64; 3], [C64; 3]) {
    let m = DMatrix::from_row_slice(1, 3, l);
    let ns = linalg::null_space(&m, 1e-12);
    let col = |k: usize| [ns[(0, k)], ns[(1, k)], ns[(2, k)]];
    (col(0), col(1))
}

/// Normalizes a line and tells whether it is real.
fn canonical_line(l: [C64; 3]) -> Option<([C64; 3], bool)> {
    let v = forms::normalize_projective(l)?;
    let real = v.iter().all(|c| c.im.abs() <= REAL_LINE_TOL);
    if real {
        let r = v.map(|c| C64::new(c.re, 0.0));
        return forms::normalize_projective(r).map(|r| (r, true));
    }
    Some((v, false))
}

/// Square certificate of a line: relative residual and the contact quadratic.
fn certify(f: &TernaryForm, l: &[C64; 3]) -> Option<(f64, BinaryForm, ([C64; 3], [C64; 3]))> {
    let (p, r) = line_basis(l);
    let g = forms::restrict_unchecked(f, &p, &r);
    if g.norm() <= 1e-13 * f.norm() {
        return None;
    }
    let (res, q) = forms::best_binary_square(&g)?;
    Some((res, q, (p, r)))
}

/// The two points where the bitangent `line` touches the curve `f = 0`.
pub fn contact_points(f: &TernaryForm, line: &TernaryForm) -> Result<(ProjPoint, ProjPoint)> {
    let l = line.coeffs();
    let f = f.normalized()?;
    let (res, q, (p, r)) =
        certify(&f, &[l[0], l[1], l[2]]).ok_or(Error::NotABitangent { residual: f64::INFINITY })?;
    if res > CERT_TOL {
        return Err(Error::NotABitangent { residual: res });
    }
    contacts_from_square(&q, &p, &r)
}

fn contacts_from_square(q: &BinaryForm, p: &[C64; 3], r: &[C64; 3]) -> Result<(ProjPoint, ProjPoint)> {
    let roots = forms::binary_roots(q, 1e-6)?;
    let to_plane = |pt: &forms::P1Point| {
        let [s, t] = *pt.coords();
        ProjPoint::new([s * p[0] + t * r[0], s * p[1] + t * r[1], s * p[2] + t * r[2]])
    };
    match roots.as_slice() {
        [one] => {
            let a = to_plane(&one.point)?;
            Ok((a, a))
        }
        [a, b] => Ok((to_plane(&a.point)?, to_plane(&b.point)?)),
        _ => Err(Error::NotABitangent { residual: f64::INFINITY }),
    }
}

/// Coefficients of `h(s, t, a s + b t)` indexed by the power of `s`.
struct ChartRestriction {
    terms: Vec<([usize; 3], C64)>,
    degree: usize,
}

impl ChartRestriction {
    fn new(h: &TernaryForm) -> Self {
        let terms = forms::exponents(h.degree())
            .iter()
            .zip(h.coeffs())
            .filter(|(_, c)| **c != ZERO)
            .map(|(e, c)| (*e, *c))
            .collect();
        Self { terms, degree: h.degree() }
    }

    fn eval(&self, a: C64, b: C64) -> [C64; 5] {
        // (a s + b t)^k, indexed by the power of s
        let mut pw = [[ZERO; 5]; 5];
        pw[0][0] = ONE;
        for k in 1..=self.degree {
            for m in 0..=k {
                let from_s = if m > 0 { pw[k - 1][m - 1] * a } else { ZERO };
                let from_t = if m < k { pw[k - 1][m] * b } else { ZERO };
                pw[k][m] = from_s + from_t;
            }
        }
        let mut out = [ZERO; 5];
        for (e, c) in &self.terms {
            for m in 0..=e[2] {
                out[e[0] + m] += c * pw[e[2]][m];
            }
        }
        out
    }
}

/// Quartic in one chart together with the restriction of its `z` derivative.
struct ChartSystem {
    f: ChartRestriction,
    fz: ChartRestriction,
    /// `x = map · x'`.
    map: [[C64; 3]; 3],
}

impl ChartSystem {
    fn new(f: &TernaryForm, map: [[C64; 3]; 3]) -> Self {
        let fc = f.compose_linear(&map);
        Self { f: ChartRestriction::new(&fc), fz: ChartRestriction::new(&fc.derivative(2)), map }
    }

    fn residual(&self, w: &Vector5<C64>) -> Vector5<C64> {
        let [a, b, u, v, c] = [w[0], w[1], w[2], w[3], w[4]];
        let g = self.f.eval(a, b);
        let q = square_coeffs(u, v);
        Vector5::from_fn(|k, _| g[k] - c * q[k])
    }

    fn jacobian(&self, w: &Vector5<C64>) -> Matrix5<C64> {
        let [a, b, u, v, c] = [w[0], w[1], w[2], w[3], w[4]];
        let h = self.fz.eval(a, b);
        let q = square_coeffs(u, v);
        let two = C64::new(2.0, 0.0);
        // d/du and d/dv of (s² + u s t + v t²)², by power of s
        let du = [ZERO, two * v, two * u, two, ZERO];
        let dv = [two * v, two * u, two, ZERO, ZERO];
        Matrix5::from_fn(|k, j| match j {
            0 => if k > 0 { h[k - 1] } else { ZERO },
            1 => if k < 4 { h[k] } else { ZERO },
            2 => -c * du[k],
            3 => -c * dv[k],
            _ => -q[k],
        })
    }

    /// Initial `(u, v, c)` from the coefficient square root at `(a, b)`.
    fn start(&self, a: C64, b: C64) -> Option<Vector5<C64>> {
        let g = self.f.eval(a, b);
        if g[4].norm() < 1e-12 {
            return None;
        }
        let c = g[4];
        let u = g[3] / (c * 2.0);
        let v = (g[2] / c - u * u) * 0.5;
        Some(Vector5::new(a, b, u, v, c))
    }

    fn solve(&self, a: C64, b: C64) -> Option<[C64; 3]> {
        let mut w = self.start(a, b)?;
        let mut r = self.residual(&w);
        let mut rn = r.norm();
        for _ in 0..80 {
            if rn < 1e-14 {
                break;
            }
            let step = self.jacobian(&w).lu().solve(&(-r))?;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1.0 / 1024.0 {
                let trial = w + step * C64::new(alpha, 0.0);
                let tr = self.residual(&trial);
                if tr.norm() < rn || tr.norm() < 1e-14 {
                    w = trial;
                    r = tr;
                    rn = tr.norm();
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || w.iter().any(|x| !x.is_finite() || x.norm() > 1e8) {
                return None;
            }
            if step.norm() * alpha < 1e-15 * (1.0 + w.norm()) {
                break;
            }
        }
        if rn > 1e-10 {
            return None;
        }
        // z' - a x' - b y' = 0 in chart coordinates; pull back with conj(map)
        let lp = [-w[0], -w[1], ONE];
        let m = self.map;
        Some([0, 1, 2].map(|i| (0..3).map(|j| m[i][j].conj() * lp[j]).sum()))
    }
}

/// Coefficients of `(s² + u s t + v t²)²` indexed by the power of `s`.
fn square_coeffs(u: C64, v: C64) -> [C64; 5] {
    [v * v, u * v * 2.0, u * u + v * 2.0, u * 2.0, ONE]
}

fn gaussian_c(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-like random unitary from the QR factor of a complex Gaussian matrix.
fn random_unitary(rng: &mut ChaCha8Rng) -> [[C64; 3]; 3] {
    let m = DMatrix::from_fn(3, 3, |_, _| gaussian_c(rng));
    let q = m.qr().q();
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| q[(i, j)]))
}

const CHART_PERMUTATIONS: [[usize; 3]; 3] = [[0, 1, 2], [2, 0, 1], [1, 2, 0]];

struct Candidate {
    line: [C64; 3],
    real: bool,
    residual: f64,
    q: BinaryForm,
    basis: ([C64; 3], [C64; 3]),
}

fn accept(f: &TernaryForm, found: &mut Vec<Candidate>, line: [C64; 3], tol: f64) {
    let Some((line, real)) = canonical_line(line) else { return };
    if found.iter().any(|c| linalg::chordal(&c.line, &line) <= DEDUP_TOL) {
        return;
    }
    let Some((residual, q, basis)) = certify(f, &line) else { return };
    if residual <= tol {
        found.push(Candidate { line, real, residual, q, basis });
    }
}

/// All 28 bitangents of a smooth quartic, sorted by their normalized
/// coefficients.
pub fn compute_bitangents(f: &TernaryForm, seed: u64) -> Result<Vec<Bitangent>> {
    compute_bitangents_with(f, seed, SearchOptions::default())
}

pub fn compute_bitangents_with(f: &TernaryForm, seed: u64, opts: SearchOptions) -> Result<Vec<Bitangent>> {
    if f.degree() != 4 {
        return Err(Error::UnsupportedDegree(f.degree()));
    }
    check_smooth(f)?;
    let f = f.normalized()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let unitary = random_unitary(&mut rng);
    let charts: Vec<ChartSystem> = CHART_PERMUTATIONS
        .iter()
        .map(|perm| {
            let map = [0, 1, 2].map(|i| [0, 1, 2].map(|j| unitary[i][perm[j]]));
            ChartSystem::new(&f, map)
        })
        .collect();

    let mut found: Vec<Candidate> = Vec::new();
    let mut next = 0usize;
    while found.len() < BITANGENT_COUNT && next < opts.budget {
        let end = (next + BATCH).min(opts.budget);
        let lines: Vec<Option<[C64; 3]>> = (next..end)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64 + 1);
                let a = gaussian_c(&mut rng);
                let b = gaussian_c(&mut rng);
                charts[i % charts.len()].solve(a, b)
            })
            .collect();
        for line in lines.into_iter().flatten() {
            let conj = line.map(|c| c.conj());
            accept(&f, &mut found, line, opts.cert_tol);
            accept(&f, &mut found, conj, opts.cert_tol);
        }
        next = end;
    }
    if found.len() != BITANGENT_COUNT {
        return Err(Error::CountMismatch { found: found.len() });
    }
    found.sort_by_key(|c| line_key(&c.line));
    found
        .into_iter()
        .enumerate()
        .map(|(index, c)| {
            let (a, b) = contacts_from_square(&c.q, &c.basis.0, &c.basis.1)?;
            Ok(Bitangent {
                line: TernaryForm::linear(c.line),
                contacts: [a, b],
                real: c.real,
                hyperflex: a.distance(&b) <= DEDUP_TOL,
                index,
                residual: c.residual,
                contact_form: forms::split_scale(c.q)
                    .map(|(q, _)| q)
                    .ok_or(Error::NotABitangent { residual: c.residual })?,
            })
        })
        .collect()
}

/// Lexicographic sort key on `(re, im)` of the coefficients, quantized so
/// that round-off cannot reorder lines.
pub fn line_key(l: &[C64; 3]) -> [i64; 6] {
    let q = |x: f64| (x * 1e9).round() as i64;
    [q(l[0].re), q(l[0].im), q(l[1].re), q(l[1].im), q(l[2].re), q(l[2].im)]
}

/// Common point of two distinct lines.
fn meet(a: &[C64; 3], b: &[C64; 3]) -> [C64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// All sets of four bitangents through a common point.
pub fn concurrent_quadruples(bits: &[Bitangent], tol: f64) -> Result<Vec<[usize; 4]>> {
    let lines: Vec<[C64; 3]> = bits.iter().map(|b| b.coords()).collect();
    let mut out = BTreeSet::new();
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let p = meet(&lines[i], &lines[j]);
            let pn = linalg::vec_norm(&p);
            if pn == 0.0 {
                continue;
            }
            let through: Vec<usize> = (0..lines.len())
                .filter(|&k| {
                    let dot: C64 = (0..3).map(|c| lines[k][c] * p[c]).sum();
                    dot.norm() <= tol.sqrt() * pn * linalg::vec_norm(&lines[k])
                })
                .collect();
            if through.len() < 4 {
                continue;
            }
            let stacked = DMatrix::from_fn(through.len(), 3, |r, c| lines[through[r]][c]);
            let sv = linalg::singular_values(&stacked);
            if sv[2] > tol * sv[0] {
                continue;
            }
            if through.len() > 4 {
                return Err(Error::FiveConcurrent);
            }
            out.insert([through[0], through[1], through[2], through[3]]);
        }
    }
    Ok(out.into_iter().collect())
}
