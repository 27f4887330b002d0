// SPDX-License-Identifier: Apache-2.0

//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use bergman_core::automorphisms::{
    jacobian_base_slice, jacobian_fd, make_ch_map, make_fbh_map, make_thullen_map, mobius_jacobian_det,
    transform_residual, AutomorphismSpec, MapKind,
};
use bergman_core::domain::{generic_norm, generic_norm_pow, genus, norm_sqr, DomainSpec};
use bergman_core::hartogs::{
    frc_eval, frc_restriction_check, sample_pairs, ClosedFormFamily, FrcReport, GramFamily, HartogsDomain,
    KernelFamily, MAX_TERMS,
};
use bergman_core::json::to_canonical_string;
use bergman_core::kernels::{kernel_eval, kernel_for_weight, kernel_from_gram};
use bergman_core::linalg::CMatrix;
use bergman_core::moments::{gram_exact, gram_quadrature};
use bergman_core::quadrature::QuadratureScheme;
use bergman_core::uniqueness::{
    boundary_inequality_check, characterize_ch, characterize_fbh, family_condition_check, moment_mismatch,
    recover_weight, sample_points, BoundaryVerdict, CheckOptions, MomentTable, RecoveryBasis, Verdict,
};
use bergman_core::weight::Weight;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// 9×9 lattice in the square inscribed in the disk of radius `r`.
fn lattice(r: f64) -> Vec<Vec<C>> {
    let a = r / 2f64.sqrt();
    let x = |i: usize| -a + 2.0 * a * i as f64 / 8.0;
    (0..9).flat_map(|i| (0..9).map(move |j| vec![c(x(i), x(j))])).collect()
}

fn max_rel(pts: &[Vec<C>], f: impl Fn(&[C], &[C]) -> (C, C)) -> f64 {
    let mut worst: f64 = 0.0;
    for z in pts {
        for w in pts {
            let (got, want) = f(z, w);
            worst = worst.max((got - want).norm() / want.norm());
        }
    }
    worst
}

fn within(elapsed: Duration, limit: f64) -> bool {
    elapsed.as_secs_f64() < limit
}

fn a1() -> Outcome {
    let start = Instant::now();
    let w = Weight::gaussian(1, 1.0).unwrap();
    let k = kernel_from_gram(&gram_exact(&w.base, &w, 25).unwrap()).unwrap();
    // raw-dV kernel of e^{−|z|²} is e^{z w̄}/π
    let err = max_rel(&lattice(1.5), |z, w| {
        (kernel_eval(&k, z, w).unwrap(), (z[0] * w[0].conj()).exp() / PI)
    });
    let t = start.elapsed();
    outcome(
        err <= 1e-8 && within(t, 1.0),
        format!("max rel err {err:.2e} (≤ 1e-8), {:.3} s (< 1 s)", t.as_secs_f64()),
    )
}

fn a2() -> Outcome {
    let start = Instant::now();
    let mut errs = Vec::new();
    for s in [1.0, 2.0, 3.0] {
        let w = Weight::generic_norm_power(DomainSpec::UnitDisk, s).unwrap();
        let k = kernel_from_gram(&gram_exact(&w.base, &w, 30).unwrap()).unwrap();
        let origin = [c(0.0, 0.0)];
        let c0 = kernel_eval(&k, &origin, &origin).unwrap().re;
        let err = max_rel(&lattice(0.7), |z, w| {
            let reference = (c(1.0, 0.0) - z[0] * w[0].conj()).powf(-2.0 - s) * c0;
            (kernel_eval(&k, z, w).unwrap(), reference)
        });
        errs.push(err);
    }
    let t = start.elapsed();
    let worst = errs.iter().copied().fold(0.0, f64::max);
    outcome(
        worst <= 1e-8 && within(t, 2.0),
        format!(
            "max rel err s=1: {:.2e}, s=2: {:.2e}, s=3: {:.2e} (≤ 1e-8), {:.3} s (< 2 s)",
            errs[0],
            errs[1],
            errs[2],
            t.as_secs_f64()
        ),
    )
}

fn a3() -> Outcome {
    let mut worst: f64 = 0.0;
    let weights = [
        Weight::generic_norm_power(DomainSpec::UnitDisk, 1.0).unwrap(),
        Weight::generic_norm_power(DomainSpec::UnitDisk, 2.0).unwrap(),
        Weight::gaussian(1, 1.0).unwrap(),
        Weight::gaussian(1, 2.0).unwrap(),
    ];
    for w in &weights {
        for d in [2, 6, 10] {
            let exact = gram_exact(&w.base, w, d).unwrap().entries;
            let quad = gram_quadrature(&w.base, w, d, &QuadratureScheme::default()).unwrap().entries;
            for i in 0..exact.nrows() {
                for j in 0..exact.ncols() {
                    let scale = (exact[(i, i)].re * exact[(j, j)].re).sqrt();
                    worst = worst.max((exact[(i, j)] - quad[(i, j)]).norm() / scale);
                }
            }
        }
    }
    outcome(
        worst <= 1e-12,
        format!("max entrywise err {worst:.2e} relative to √(G_aa G_bb) (≤ 1e-12)"),
    )
}

fn ball2_kernel(z: &[C], w: &[C]) -> C {
    generic_norm_pow(&DomainSpec::UnitBall { n: 2 }, z, w, -3.0).unwrap() * (2.0 / (PI * PI))
}

fn frc_a4_reports(seed: u64) -> Vec<FrcReport> {
    let h = HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, 1, 1.0).unwrap();
    let f = ClosedFormFamily::new(h.weight.clone()).unwrap();
    sample_pairs(&h, 100, 0.5, 0.9, seed)
        .unwrap()
        .iter()
        .map(|(p, q)| frc_eval(&h, p, q, &f, MAX_TERMS, 1e-14).unwrap())
        .collect()
}

fn a4() -> Outcome {
    let start = Instant::now();
    let h = HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, 1, 1.0).unwrap();
    let f = ClosedFormFamily::new(h.weight.clone()).unwrap();
    let pairs = sample_pairs(&h, 100, 0.5, 0.9, 11).unwrap();
    let mut worst: f64 = 0.0;
    let mut converged = true;
    for (p, q) in &pairs {
        let r = frc_eval(&h, p, q, &f, MAX_TERMS, 1e-14).unwrap();
        let want = ball2_kernel(p, q);
        worst = worst.max((r.value - want).norm() / want.norm());
        converged &= r.converged;
    }
    let t = start.elapsed();
    outcome(
        worst <= 1e-8 && converged && within(t, 10.0),
        format!(
            "100 pairs, max rel err {worst:.2e} (≤ 1e-8), all converged: {converged}, {:.3} s (< 10 s)",
            t.as_secs_f64()
        ),
    )
}

fn a5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for m in 1..=3usize {
        let mut domains = Vec::new();
        for s in [1.0, 2.0, 3.0] {
            domains.push(HartogsDomain::cartan_hartogs(DomainSpec::UnitDisk, m, s).unwrap());
        }
        domains.push(HartogsDomain::fbh(1, m, 1.0).unwrap());
        for h in domains {
            let closed = ClosedFormFamily::new(h.weight.clone()).unwrap();
            // the reference K_{D,p^m} comes from the quadrature Gram series
            let series = GramFamily::new(h.weight.clone(), 30, Some(QuadratureScheme::default()));
            let reference = series.kernel(m as u32).unwrap();
            let omega = |a: &[C], b: &[C]| Ok(frc_eval(&h, a, b, &closed, MAX_TERMS, 1e-14)?.value);
            let radius = if h.base.is_bounded() { 0.5 } else { 1.0 };
            for _ in 0..50 {
                let mut point = || [C::from_polar(radius * rng.gen::<f64>(), 2.0 * PI * rng.gen::<f64>())];
                let (z, w) = (point(), point());
                let r = frc_restriction_check(&h, &z, &w, &omega, &reference).unwrap();
                worst = worst.max(r.residual);
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("disk (1−|z|²)^s, s ∈ {{1,2,3}}, and ℂ¹ Gaussian, m ≤ 3, 50 pairs each: max residual {worst:.2e} (≤ 1e-8)"),
    )
}

fn a6() -> Outcome {
    let fbh = HartogsDomain::fbh(1, 1, 1.0).unwrap();
    let t = make_fbh_map(
        MapKind::FockTranslation {
            v: vec![c(0.4, 0.3)],
            mu: 1.0,
        },
        &fbh,
    )
    .unwrap();
    let r1 = transform_residual(&t, &kernel_for_weight(&fbh.weight).unwrap(), &sample_points(1, 1.0, 20, 6)).unwrap();
    let th = HartogsDomain::thullen(1.0).unwrap();
    let phi = make_thullen_map(c(0.3, 0.0), &th).unwrap();
    let r2 = transform_residual(&phi, &kernel_for_weight(&th.weight).unwrap(), &sample_points(1, 0.5, 20, 6)).unwrap();
    outcome(
        r1 <= 1e-9 && r2 <= 1e-9,
        format!("FBH translation {r1:.2e}, Thullen φ_0.3 {r2:.2e} (≤ 1e-9)"),
    )
}

fn unitary(theta: f64, phase: f64) -> CMatrix {
    let (s, co) = theta.sin_cos();
    let e = C::from_polar(1.0, phase);
    CMatrix::from_row_slice(2, 2, &[e * co, -e * s, c(s, 0.0), c(co, 0.0)])
}

fn a7() -> Outcome {
    let fbh = HartogsDomain::fbh(2, 2, 1.0).unwrap();
    let ch = HartogsDomain::cartan_hartogs(DomainSpec::UnitBall { n: 2 }, 2, 1.5).unwrap();
    let th = HartogsDomain::thullen(1.0).unwrap();
    let translation = MapKind::FockTranslation {
        v: vec![c(0.4, 0.3), c(-0.2, 0.1)],
        mu: 1.0,
    };
    let maps: Vec<(&str, AutomorphismSpec, f64)> = vec![
        ("base unitary", make_fbh_map(MapKind::BaseUnitary { u: unitary(0.4, 0.7) }, &fbh).unwrap(), 1.0),
        ("fiber unitary", make_fbh_map(MapKind::FiberUnitary { u: unitary(1.1, -0.3) }, &fbh).unwrap(), 1.0),
        ("Fock translation", make_fbh_map(translation.clone(), &fbh).unwrap(), 1.0),
        (
            "Cartan-Hartogs",
            make_ch_map(vec![c(0.3, 0.1), c(-0.2, 0.25)], Some(unitary(0.5, 0.2)), &ch).unwrap(),
            0.5,
        ),
        ("Thullen", make_thullen_map(c(0.3, -0.2), &th).unwrap(), 0.5),
        (
            "composite",
            make_fbh_map(
                MapKind::Composite {
                    maps: vec![translation, MapKind::BaseUnitary { u: unitary(0.9, 0.0) }],
                },
                &fbh,
            )
            .unwrap(),
            1.0,
        ),
    ];
    let (mut det_err, mut block): (f64, f64) = (0.0, 0.0);
    for (i, (_, f, radius)) in maps.iter().enumerate() {
        let n = f.target.base.dim();
        let zeros = vec![c(0.0, 0.0); f.target.fiber_dim];
        for z in sample_points(n, *radius, 20, 70 + i as u64).into_iter().skip(1) {
            let full: Vec<C> = z.iter().chain(&zeros).copied().collect();
            let fd = jacobian_fd(f, &full, 1e-5).unwrap();
            let exact = jacobian_base_slice(f, &z).unwrap();
            det_err = det_err.max((fd.determinant - exact).norm() / exact.norm());
            for r in 0..n {
                for col in n..full.len() {
                    block = block.max(fd.matrix[(r, col)].norm());
                }
            }
        }
    }
    let names: Vec<&str> = maps.iter().map(|m| m.0).collect();
    outcome(
        det_err <= 1e-6 && block <= 1e-8,
        format!(
            "{} at 20 points each: max det err {det_err:.2e} (≤ 1e-6), max off-block {block:.2e} (≤ 1e-8)",
            names.join(", ")
        ),
    )
}

fn a8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst: f64 = 0.0;
    for base in [DomainSpec::UnitDisk, DomainSpec::UnitBall { n: 2 }] {
        let g = f64::from(genus(&base).unwrap());
        for _ in 0..50 {
            let mut a: Vec<C> = (0..base.dim())
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let scale = 0.95 * rng.gen::<f64>() / norm_sqr(&a).sqrt();
            a.iter_mut().for_each(|v| *v *= scale);
            let d = mobius_jacobian_det(&base, &a, &a).unwrap();
            let naa = generic_norm(&base, &a, &a).unwrap().re;
            worst = worst.max((d.norm_sqr() * naa.powf(g) - 1.0).abs());
        }
    }
    outcome(worst <= 1e-12, format!("disk and ball n=2, 50 a each: max defect {worst:.2e} (≤ 1e-12)"))
}

fn a9() -> Outcome {
    let w1 = Weight::generic_norm_power(DomainSpec::UnitDisk, 1.0).unwrap();
    let w2 = Weight::generic_norm_power(DomainSpec::UnitDisk, 2.0).unwrap();
    let diff = moment_mismatch(&w1, &w2, 8, true).unwrap();
    let same = moment_mismatch(&w1, &w1, 8, true).unwrap();
    outcome(
        diff.frobenius > 0.1 && same.max_abs <= 1e-12,
        format!(
            "distinct: Frobenius {:.4} (> 0.1; max-abs {:.4}), identical: {:.1e} (≤ 1e-12)",
            diff.frobenius, diff.max_abs, same.max_abs
        ),
    )
}

fn a10() -> Outcome {
    let w = Weight::polynomial(DomainSpec::UnitDisk, vec![1.0, -2.0, 1.0]).unwrap();
    let r = recover_weight(&MomentTable::new(&w, 6).unwrap(), RecoveryBasis::ShiftedLegendre, 6, 0.0).unwrap();
    let want = [1.0, -2.0, 1.0, 0.0, 0.0, 0.0, 0.0];
    let err = r
        .monomial_coefficients
        .iter()
        .zip(want)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(err <= 1e-8, format!("max coefficient err {err:.2e} (≤ 1e-8)"))
}

fn fbh_a11_reports(seed: u64) -> (String, String) {
    let opts = CheckOptions {
        seed,
        ..Default::default()
    };
    let g = Weight::gaussian(1, 1.0).unwrap();
    let pert = g.times(&Weight::polynomial(g.base, vec![1.0, 0.1]).unwrap()).unwrap();
    let a = characterize_fbh(&g, 1, 1.0, 20, &opts).unwrap();
    let b = characterize_fbh(&pert, 1, 1.0, 20, &opts).unwrap();
    (to_canonical_string(&a).unwrap(), to_canonical_string(&b).unwrap())
}

fn a11() -> Outcome {
    let start = Instant::now();
    let opts = CheckOptions::default();
    let g = Weight::gaussian(1, 1.0).unwrap();
    let pert = g.times(&Weight::polynomial(g.base, vec![1.0, 0.1]).unwrap()).unwrap();
    let a = characterize_fbh(&g, 1, 1.0, 20, &opts).unwrap();
    let b = characterize_fbh(&pert, 1, 1.0, 20, &opts).unwrap();
    let t = start.elapsed();
    let c_err = (a.c - 1.0 / PI).abs();
    outcome(
        a.verdict == Verdict::Match && c_err <= 1e-9 && b.verdict == Verdict::Mismatch && b.deviation > 1e-3 && within(t, 5.0),
        format!(
            "Gaussian: {:?}, |c − μ/π| = {c_err:.1e} (≤ 1e-9); perturbed: {:?}, deviation {:.3e} (> 1e-3); {:.3} s (< 5 s)",
            a.verdict,
            b.verdict,
            b.deviation,
            t.as_secs_f64()
        ),
    )
}

fn a12() -> Outcome {
    let opts = CheckOptions::default();
    let q = Weight::generic_norm_power(DomainSpec::UnitDisk, 1.0).unwrap();
    let pert = q.times(&Weight::polynomial(DomainSpec::UnitDisk, vec![1.0, 0.2]).unwrap()).unwrap();
    let a = characterize_ch(&q, 1, 1.0, 30, &opts).unwrap();
    let b = characterize_ch(&pert, 1, 1.0, 30, &opts).unwrap();
    outcome(
        a.verdict == Verdict::Match && b.verdict == Verdict::Mismatch,
        format!(
            "(1−|z|²): {:?} (deviation {:.1e}); (1−|z|²)(1+0.2|z|²): {:?} (deviation {:.3e})",
            a.verdict, a.deviation, b.verdict, b.deviation
        ),
    )
}

fn a13() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut equal = true;
    let mut violated = true;
    for (n, mu) in [(1usize, 1.0), (2, 0.7), (3, 2.0)] {
        let samples = sample_points(n, 2.0, 200, 13);
        let p = Weight::gaussian(n, mu).unwrap();
        let r = boundary_inequality_check(&p, mu, &samples, 1e-12).unwrap();
        equal &= r.verdict == BoundaryVerdict::Equality;
        worst = worst.max(r.max_deviation);
        let bumped = p.times(&Weight::polynomial(p.base, vec![1.0, 1.0]).unwrap()).unwrap();
        let r = boundary_inequality_check(&bumped, mu, &samples, 1e-12).unwrap();
        violated &= r.verdict == BoundaryVerdict::Violated;
    }
    outcome(
        equal && worst <= 1e-12 && violated,
        format!("Gaussian: equality, residual {worst:.1e} (≤ 1e-12): {equal}; p(1+‖z‖²) violated: {violated}"),
    )
}

fn a14() -> Outcome {
    let fbh = HartogsDomain::fbh(2, 2, 1.0).unwrap();
    let fbh_maps = vec![
        make_fbh_map(MapKind::BaseUnitary { u: unitary(0.4, 0.7) }, &fbh).unwrap(),
        make_fbh_map(MapKind::FiberUnitary { u: unitary(1.1, -0.3) }, &fbh).unwrap(),
        make_fbh_map(
            MapKind::FockTranslation {
                v: vec![c(0.4, 0.3), c(-0.2, 0.1)],
                mu: 1.0,
            },
            &fbh,
        )
        .unwrap(),
    ];
    let r1 = family_condition_check(&fbh, &fbh_maps, 24, 1e-9, &CheckOptions::default()).unwrap();
    let th = HartogsDomain::thullen(1.0).unwrap();
    let th_maps: Vec<AutomorphismSpec> = [c(0.3, 0.0), c(-0.1, 0.4), c(0.2, -0.2)]
        .into_iter()
        .map(|a| make_thullen_map(a, &th).unwrap())
        .collect();
    let opts = CheckOptions {
        grid_radius: Some(0.4),
        ..Default::default()
    };
    let r2 = family_condition_check(&th, &th_maps, 60, 1e-9, &opts).unwrap();
    let dev = |r: &bergman_core::uniqueness::FamilyReport| {
        r.maps
            .iter()
            .map(|e| e.slice_law_deviation.max(e.constant_deviation))
            .fold(0.0, f64::max)
    };
    outcome(
        r1.all_pass && r2.all_pass,
        format!(
            "FBH generators: max deviation {:.1e}; Thullen φ_a: {:.1e} (≤ 1e-9)",
            dev(&r1),
            dev(&r2)
        ),
    )
}

fn a15() -> Outcome {
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let frc = to_canonical_string(&frc_a4_reports(15)).unwrap();
            let (a, b) = fbh_a11_reports(15);
            (frc, a, b)
        })
    };
    let baseline = run(1);
    let mut identical = true;
    for threads in [1, 2, 4, 8] {
        identical &= run(threads) == baseline;
    }
    outcome(
        identical,
        format!(
            "A4 and A11 reports over 1, 1, 2, 4, 8 threads byte-identical: {identical} ({} bytes)",
            baseline.0.len() + baseline.1.len() + baseline.2.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 15] = [
        ("A1", "Fock kernel reconstruction", a1),
        ("A2", "weighted disk kernel", a2),
        ("A3", "quadrature fidelity", a3),
        ("A4", "Forelli-Rudin identity", a4),
        ("A5", "restriction identity", a5),
        ("A6", "transformation law", a6),
        ("A7", "Jacobian of generators", a7),
        ("A8", "Möbius-genus relation", a8),
        ("A9", "moment discrimination", a9),
        ("A10", "weight recovery", a10),
        ("A11", "FBH characterization", a11),
        ("A12", "Cartan-Hartogs characterization", a12),
        ("A13", "boundary inequality", a13),
        ("A14", "family condition", a14),
        ("A15", "determinism", a15),
    ];
    let mut failed = Vec::new();
    for (id, title, run) in criteria {
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        println!("{id:<4} {status}  {title}: {}", o.detail);
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 15 criteria passed");
    } else {
        println!("acceptance: {} of 15 failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}
