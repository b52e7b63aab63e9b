//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

use std::collections::{BTreeMap, BTreeSet};
use std::process::Command;
use std::time::{Duration, Instant};

use gram_spectra::forms::TernaryForm;
use gram_spectra::gram::{self, Subspace};
use gram_spectra::linalg::{self, C64, ONE};
use gram_spectra::pipeline::{self, Analysis, Config};
use gram_spectra::report::QuarticInput;
use gram_spectra::spectra::{self, SliceBox};
use gram_spectra::steiner::{self, Relation};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

const RANDOM_SEEDS: std::ops::Range<u64> = 1..11;

fn fermat() -> TernaryForm {
    TernaryForm::from_terms(4, &[(ONE, [4, 0, 0]), (ONE, [0, 4, 0]), (ONE, [0, 0, 4])])
}

struct Instance {
    name: String,
    form: TernaryForm,
    analysis: Result<Analysis, gram_spectra::Error>,
    elapsed: Duration,
}

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn analysis(inst: &Instance) -> Result<&Analysis, String> {
    inst.analysis.as_ref().map_err(|e| format!("{}: {e}", inst.name))
}

/// Sine of the angle between two lines of C³, from the cross product.
fn chordal(a: &[C64; 3], b: &[C64; 3]) -> f64 {
    let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
    let n = |v: &[C64; 3]| v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    n(&cross) / (n(a) * n(b))
}

/// Closed-form bitangents of x⁴ + y⁴ + z⁴.
fn fermat_oracle() -> Vec<[C64; 3]> {
    let i = C64::new(0.0, 1.0);
    let units = [ONE, i, -ONE, -i];
    let etas: Vec<C64> = (0..4).map(|k| C64::from_polar(1.0, std::f64::consts::PI * (2 * k + 1) as f64 / 4.0)).collect();
    let zero = C64::new(0.0, 0.0);
    let mut out = Vec::new();
    for a in units {
        for b in units {
            out.push([-a, -b, ONE]);
        }
    }
    for &e in &etas {
        out.push([ONE, -e, zero]);
        out.push([zero, ONE, -e]);
        out.push([ONE, zero, -e]);
    }
    out
}

fn criterion_1(fermat: &Instance) -> Outcome {
    let a = analysis(fermat)?;
    let bits = &a.bitangents.bits;
    check(bits.len() == 28, || format!("{} bitangents", bits.len()))?;
    let oracle = fermat_oracle();
    let mut used = BTreeSet::new();
    let mut worst: f64 = 0.0;
    for b in bits {
        let (k, d) = oracle
            .iter()
            .enumerate()
            .map(|(k, o)| (k, chordal(&b.coords(), o)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("oracle is non-empty");
        worst = worst.max(d);
        used.insert(k);
    }
    let real = bits.iter().filter(|b| b.real).count();
    check(used.len() == 28, || format!("only {} oracle lines matched", used.len()))?;
    check(worst <= 1e-8, || format!("chordal error {worst:e}"))?;
    check(real == 4, || format!("{real} real lines"))?;
    let start = Instant::now();
    gram_spectra::bitangent::compute_bitangents(&fermat.form, 0).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    check(t < Duration::from_secs(60), || format!("runtime {t:?}"))?;
    Ok(format!("28 lines, max chordal error {worst:.1e}, 4 real, {:.2?}", t))
}

fn criterion_2(all: &[Instance]) -> Outcome {
    let mut worst: f64 = 0.0;
    for inst in all {
        let a = analysis(inst)?;
        let cx = &a.steiner.complexes;
        check(cx.len() == 63, || format!("{}: {} complexes", inst.name, cx.len()))?;
        let mut seen: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for c in cx {
            for p in &c.pairs {
                *seen.entry((p.i, p.j)).or_insert(0) += 1;
            }
            worst = worst.max(c.certificate);
        }
        check(seen.len() == 378 && seen.values().all(|&n| n == 1), || {
            format!("{}: {} distinct pairs, max multiplicity {:?}", inst.name, seen.len(), seen.values().max())
        })?;
    }
    check(worst <= 1e-8, || format!("certificate {worst:e}"))?;
    Ok(format!("{} instances, 63 complexes each partition 378 pairs, max certificate {worst:.1e}", all.len()))
}

fn criterion_3(all: &[Instance]) -> Outcome {
    let mut worst: f64 = 0.0;
    for inst in all {
        let a = analysis(inst)?;
        let s = &a.steiner;
        check(s.real.len() == 15 && s.psd.len() == 8, || format!("{}: {}/{}", inst.name, s.real.len(), s.psd.len()))?;
        for c in &s.complexes {
            worst = worst.max(gram::gram_residual(&c.tensor, &inst.form));
        }
    }
    check(worst <= 1e-8, || format!("residual {worst:e}"))?;
    Ok(format!("15 real / 8 psd in every instance, max residual {worst:.1e}"))
}

fn criterion_4(all: &[Instance]) -> Outcome {
    for inst in all {
        let a = analysis(inst)?;
        let g = &a.faces.graph;
        let cx = &a.steiner.complexes;
        check(g.edges.len() == 12, || format!("{}: {} edges", inst.name, g.edges.len()))?;
        check(g.components.len() == 2 && g.components.iter().all(|c| c.len() == 4), || {
            format!("{}: components {:?}", inst.name, g.components)
        })?;
        for comp in &g.components {
            for &x in comp {
                for &y in comp {
                    check(x == y || g.edge(x, y).is_some(), || format!("{}: component not complete", inst.name))?;
                }
            }
        }
        for x in 0..8 {
            for y in x + 1..8 {
                let (c1, c2) = (&cx[g.vertices[x]], &cx[g.vertices[y]]);
                let shared = c1.bitangents().intersection(&c2.bitangents()).count();
                let relation = steiner::complex_relation(c1, c2).map_err(|e| e.to_string())?;
                let syzygetic = relation == Relation::Syzygetic;
                check(syzygetic == (shared == 4), || format!("{}: relation vs shared {shared}", inst.name))?;
                check(g.edge(x, y).is_some() == syzygetic, || format!("{}: edge ({x},{y}) vs relation", inst.name))?;
            }
        }
    }
    Ok(format!("{} graphs are K4 + K4, edges exactly the syzygetic pairs", all.len()))
}

fn criterion_5(fermat: &Instance) -> Outcome {
    let a = analysis(fermat)?;
    let g = &a.faces.graph;
    let rank4: Vec<_> = g.edges.iter().filter(|e| e.rank == 4).collect();
    check(rank4.len() == 3, || format!("{} rank-4 edges", rank4.len()))?;
    let comp_of = |v: usize| g.components.iter().position(|c| c.contains(&v));
    let comps: BTreeSet<_> = rank4.iter().flat_map(|e| [comp_of(e.a), comp_of(e.b)]).collect();
    check(comps.len() == 1, || "rank-4 edges in different components".into())?;
    check(rank4.iter().all(|e| e.face_dim == 1), || "face dimension differs from 1".into())?;
    let quads: BTreeSet<[usize; 4]> = a.bitangents.quadruples.iter().copied().collect();
    for e in &rank4 {
        let cx = &a.steiner.complexes;
        let shared: Vec<usize> =
            cx[g.vertices[e.a]].bitangents().intersection(&cx[g.vertices[e.b]].bitangents()).copied().collect();
        let q: [usize; 4] = shared.clone().try_into().map_err(|_| format!("{} shared bitangents", shared.len()))?;
        check(quads.contains(&q), || format!("shared {q:?} not concurrent"))?;
    }
    check(a.faces.one_dim.len() == 3, || format!("{} one-dim faces reported", a.faces.one_dim.len()))?;
    Ok("3 rank-4 edges in one component, face dimension 1, each matched to a concurrent quadruple".into())
}

fn criterion_6(random: &[Instance]) -> Outcome {
    for inst in random {
        let a = analysis(inst)?;
        let rank4 = a.faces.graph.edges.iter().filter(|e| e.rank == 4).count();
        let quads = a.bitangents.quadruples.len();
        check(rank4 == 0 && quads == 0, || format!("{}: {rank4} rank-4 edges, {quads} quadruples", inst.name))?;
    }
    Ok(format!("{} random instances: no rank-4 edges, no concurrent quadruples", random.len()))
}

fn quadrics_vanishing_at(p: [f64; 3]) -> DMatrix<C64> {
    // q(p) = Σ c_k m_k(p) in the Gram order x², y², z², xy, xz, yz
    let row = DMatrix::from_row_slice(
        1,
        6,
        &[p[0] * p[0], p[1] * p[1], p[2] * p[2], p[0] * p[1], p[0] * p[2], p[1] * p[2]].map(|v| C64::new(v, 0.0)),
    );
    linalg::null_space(&row, 1e-12)
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut generic = BTreeMap::new();
    for _ in 0..1000 {
        let b = DMatrix::from_fn(6, 5, |_, _| C64::new(rng.sample(StandardNormal), 0.0));
        let u = Subspace::span(&b, 1e-9);
        *generic.entry(15 - gram::square_space(&u).dim()).or_insert(0) += 1;
    }
    let mut point = BTreeMap::new();
    for _ in 0..1000 {
        let p = [0, 1, 2].map(|_| rng.sample::<f64, _>(StandardNormal));
        let u = Subspace::span(&quadrics_vanishing_at(p), 1e-9);
        check(u.dim() == 5, || format!("space of quadrics through a point has dim {}", u.dim()))?;
        *point.entry(15 - gram::square_space(&u).dim()).or_insert(0) += 1;
    }
    check(generic.keys().all(|k| *k == 0 || *k == 2), || format!("generic codims {generic:?}"))?;
    check(point.keys().all(|k| *k == 3), || format!("point codims {point:?}"))?;
    Ok(format!("codim histogram generic {generic:?}, through a point {point:?}"))
}

fn criterion_8(all: &[Instance], suite_start: Instant) -> Outcome {
    let mut worst_kkt: f64 = 0.0;
    let mut hist: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for inst in all {
        let a = analysis(inst)?;
        let run = &a.sampling;
        check(run.failures.is_empty(), || format!("{}: solver failures {:?}", inst.name, run.failures))?;
        check(run.samples.len() == 50, || format!("{}: {} samples", inst.name, run.samples.len()))?;
        for s in &run.samples {
            worst_kkt = worst_kkt.max(s.kkt);
            *hist.entry((s.face.rank, s.face.face_dim)).or_insert(0) += 1;
            check((3..=5).contains(&s.face.rank), || format!("{}: rank {}", inst.name, s.face.rank))?;
            check(s.face.rank != 5 || matches!(s.face.face_dim, 0 | 2), || {
                format!("{}: rank-5 sample with face dim {}", inst.name, s.face.face_dim)
            })?;
        }
        let g = &a.faces.graph;
        check(g.edges.iter().any(|e| e.rank == 5 && e.face_dim == 2), || format!("{}: no 2-dim rank-5 face", inst.name))?;
        let cx = &a.steiner.complexes;
        let mut found = false;
        'edges: for e in g.edges.iter().filter(|e| e.rank == 5) {
            let (ti, tj) = (&cx[g.vertices[e.a]].tensor, &cx[g.vertices[e.b]].tensor);
            for k in 0..4 {
                let s = spectra::face_extreme(&inst.form, ti, tj, &spectra::sample_objective(1000, k), 1e-9)
                    .map_err(|err| format!("{}: {err}", inst.name))?;
                worst_kkt = worst_kkt.max(s.kkt);
                if s.face.rank == 4 {
                    found = true;
                    break 'edges;
                }
            }
        }
        check(found, || format!("{}: face_extreme found no rank-4 point", inst.name))?;
    }
    check(worst_kkt <= 1e-9, || format!("KKT residual {worst_kkt:e}"))?;
    let t = suite_start.elapsed();
    check(t < Duration::from_secs(600), || format!("suite time {t:?}"))?;
    Ok(format!("(rank, face dim) histogram {hist:?}, max KKT {worst_kkt:.1e}, rank-4 face points found, {:.1?}", t))
}

fn criterion_9(fermat: &Instance) -> Outcome {
    let a = analysis(fermat)?;
    let thetas = pipeline::slice_tensors(&a.steiner, &a.faces.graph);
    let slice = spectra::pencil_determinant_slice(&thetas, 2, &SliceBox::default()).map_err(|e| e.to_string())?;
    let origin = &slice.rows[0];
    check(origin.lambda == [0.0; 3] && origin.det.abs() <= 1e-10, || format!("det at origin {:e}", origin.det))?;
    let center = spectra::AffineSlice::new(&thetas).map_err(|e| e.to_string())?.row([0.25; 3]);
    check(center.det > 0.0 && center.min_eigenvalue > 0.0, || format!("{center:?}"))?;
    check(slice.holdout_residual <= 1e-8, || format!("held-out residual {:e}", slice.holdout_residual))?;
    Ok(format!(
        "det(0) = {:.1e}, det(1/4) = {:.3e}, lambda_min(1/4) = {:.3e}, held-out residual {:.1e}",
        origin.det, center.det, center.min_eigenvalue, slice.holdout_residual
    ))
}

fn criterion_10(fermat: &Instance, random: &Instance) -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut sizes = Vec::new();
    for inst in [fermat, random] {
        let mut input = QuarticInput::from_form(&inst.form).map_err(|e| e.to_string())?;
        input.seed = Some(5);
        let path = dir.path().join(format!("{}.toml", inst.name));
        std::fs::write(&path, input.to_toml()).map_err(|e| e.to_string())?;
        let run = || {
            Command::new(env!("CARGO_BIN_EXE_gram-spectra"))
                .arg("analyze")
                .arg(&path)
                .output()
                .map_err(|e| e.to_string())
        };
        let (first, second) = (run()?, run()?);
        check(first.status.success(), || format!("{}: exit {:?}", inst.name, first.status.code()))?;
        check(first.stdout == second.stdout, || format!("{}: reports differ", inst.name))?;
        sizes.push(first.stdout.len());
    }
    Ok(format!("byte-identical analyze reports ({} and {} bytes)", sizes[0], sizes[1]))
}

fn main() {
    let start = Instant::now();
    let mut instances: Vec<(String, TernaryForm)> = vec![("fermat".into(), fermat())];
    instances.extend(RANDOM_SEEDS.map(|s| (format!("random-{s}"), gram::random_sos_quartic(s))));
    let instances: Vec<Instance> = instances
        .into_par_iter()
        .map(|(name, form)| {
            let t = Instant::now();
            let analysis = pipeline::analyze(&form, &Config::default());
            Instance { name, form, analysis, elapsed: t.elapsed() }
        })
        .collect();
    for inst in &instances {
        println!("  {} analyzed in {:.2?}", inst.name, inst.elapsed);
    }
    let (fermat, random) = instances.split_first().expect("fermat instance");

    let results: Vec<(usize, Outcome)> = vec![
        (1, criterion_1(fermat)),
        (2, criterion_2(&instances)),
        (3, criterion_3(&instances)),
        (4, criterion_4(&instances)),
        (5, criterion_5(fermat)),
        (6, criterion_6(random)),
        (7, criterion_7()),
        (8, criterion_8(&instances, start)),
        (9, criterion_9(fermat)),
        (10, criterion_10(fermat, &random[0])),
    ];
    let mut failed = 0;
    for (k, r) in &results {
        match r {
            Ok(msg) => println!("criterion {k:>2}: PASS  {msg}"),
            Err(msg) => {
                failed += 1;
                println!("criterion {k:>2}: FAIL  {msg}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed, {:.1?}", results.len() - failed, start.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
}
