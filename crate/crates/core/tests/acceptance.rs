//! Acceptance suite. Runs every criterion at its stated tolerance and prints one
//! PASS/FAIL line each.
//!
//! Two criteria do not hold for the exact finite-N values (see README,
//! "Known failures"): the negative-moment law (6) and the K = 2 positive-moment
//! coefficient (7). They are reported as FAIL. The process exits non-zero if any
//! other criterion fails, or if either of those starts passing, so the record
//! cannot drift from the observed results.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use charpoly::asymptotics::{
    convergence_study, two_point_resolvent, two_point_resolvent_finite, two_point_resolvent_numeric, ArgScaling,
    BulkData, ScalingPoint, StudyTarget,
};
use charpoly::correlators::{
    corr_ratios, finite_density, moment_negative, moment_positive, upsilon_plus, CorrelatorKind, CorrelatorSpec,
};
use charpoly::ensemble::{EnsembleConfig, Potential, QuadratureSpec};
use charpoly::equilibrium::EquilibriumMeasure;
use charpoly::identities::{run_suite, Suite};
use charpoly::kernels::{kernel_w1, kernel_w1_cd};
use charpoly::montecarlo::{estimate_correlator, SamplerSpec};
use charpoly::orthopoly::{build_recurrence, RecurrenceTable};
use charpoly::{Complex64, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Criteria recorded as unattainable.
const KNOWN_FAILURES: [usize; 2] = [6, 7];

type Criterion = fn() -> Result<Outcome>;

struct Outcome {
    passed: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn q() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn table(v: &Potential, n: usize, extra: usize) -> Result<(EnsembleConfig, RecurrenceTable)> {
    let cfg = EnsembleConfig::new(v.clone(), n)?;
    let t = build_recurrence(&cfg, n + extra, &q())?;
    Ok((cfg, t))
}

/// Random point with `|Im| >= 0.1`.
fn off_axis(rng: &mut ChaCha8Rng) -> Complex64 {
    let im = rng.random_range(0.1..1.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    c(rng.random_range(-1.0..1.0), im)
}

fn criterion_1() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for v in [Potential::gaussian(), Potential::monomial(2, 1.0)?] {
        for n in [8, 20, 50] {
            let (cfg, t) = table(&v, n, 4)?;
            for _ in 0..100 {
                let z = off_axis(&mut rng);
                let r = corr_ratios(&t, &cfg, &[z], &[z], &q())?.to_complex();
                worst = worst.max((r - 1.0).norm());
            }
        }
    }
    Ok(Outcome {
        passed: worst < 1e-8,
        detail: format!("max |F - 1| = {worst:.2e} (< 1e-8)"),
    })
}

fn criterion_2() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let v = Potential::gaussian();
    let tables: Vec<(EnsembleConfig, RecurrenceTable)> =
        [6, 12, 20].iter().map(|&n| table(&v, n, 10)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    let pts = |rng: &mut ChaCha8Rng, k: usize| -> Vec<Complex64> { (0..k).map(|_| off_axis(rng)).collect() };
    for kind in [CorrelatorKind::F1, CorrelatorKind::F2, CorrelatorKind::F3, CorrelatorKind::F4, CorrelatorKind::F5] {
        for i in 0..20 {
            let (cfg, t) = &tables[i % tables.len()];
            let k = 1 + i % 3;
            let spec = match kind {
                CorrelatorKind::F1 => CorrelatorSpec::products(pts(&mut rng, k), pts(&mut rng, k)),
                CorrelatorKind::F2 => CorrelatorSpec::ratios(pts(&mut rng, k), pts(&mut rng, k)),
                CorrelatorKind::F3 => CorrelatorSpec::inverse(pts(&mut rng, k), pts(&mut rng, k)),
                // K > M and M > K with K + M even and both at most 3
                CorrelatorKind::F4 => CorrelatorSpec::mixed(kind, pts(&mut rng, 1), pts(&mut rng, 3)),
                _ => CorrelatorSpec::mixed(kind, pts(&mut rng, 3), pts(&mut rng, 1)),
            };
            let a = spec.evaluate(t, cfg, &q())?;
            let b = spec.evaluate_general(t, cfg, &q())?;
            worst = worst.max(a.rel_diff(&b));
            count += 1;
        }
    }
    Ok(Outcome {
        passed: worst < 1e-8,
        detail: format!("{count} sets, max relative difference {worst:.2e} (< 1e-8)"),
    })
}

fn criterion_3() -> Result<Outcome> {
    let (cfg, t) = table(&Potential::gaussian(), 6, 8)?;
    let lam = c(0.4, 0.0);
    let mu = c(0.1, 0.3);
    let eps = c(0.2, 0.5);
    let om = c(-0.3, -0.4);
    let cases = [
        ("<Z>", CorrelatorSpec::mixed(CorrelatorKind::General, vec![], vec![lam])),
        ("<Z^2>", CorrelatorSpec::products(vec![lam], vec![lam])),
        ("<1/Z>", CorrelatorSpec::mixed(CorrelatorKind::General, vec![eps], vec![])),
        ("<Z(mu)/Z(eps)>", CorrelatorSpec::ratios(vec![eps], vec![mu])),
        ("<1/(Z(eps)Z(om))>", CorrelatorSpec::inverse(vec![eps], vec![om])),
    ];
    let mut passed = true;
    let mut parts = Vec::new();
    for (i, (name, spec)) in cases.iter().enumerate() {
        let exact = spec.evaluate(&t, &cfg, &q())?.to_complex();
        let est = estimate_correlator(&cfg, &SamplerSpec::direct(300 + i as u64), spec, 100_000)?;
        let z = (est.mean - exact).norm() / est.stderr;
        passed &= z < 3.0;
        parts.push(format!("{name} {z:.2}σ"));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (< 3σ)", parts.join(", ")),
    })
}

fn criterion_4() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let (_, t) = table(&Potential::gaussian(), 60, 2)?;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.random_range(1..=60);
        let l = c(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0));
        let m = c(rng.random_range(-1.5..1.5), rng.random_range(-1.0..1.0));
        let a = kernel_w1(&t, n, l, m)?;
        let b = kernel_w1_cd(&t, n, l, m)?;
        worst = worst.max(a.rel_diff(&b));
    }
    Ok(Outcome {
        passed: worst < 1e-10,
        detail: format!("max relative difference {worst:.2e} (< 1e-10)"),
    })
}

fn criterion_5() -> Result<Outcome> {
    let ns = [20, 40, 80, 160];
    let pt = ScalingPoint::new(0.0, vec![c(0.3, 0.0)], vec![c(-0.2, 0.0)], ns[0]);
    let st = convergence_study(&Potential::gaussian(), StudyTarget::KernelW1, &pt, &ns, ArgScaling::FiniteN, &q())?;
    let errs: Vec<f64> = st.rows.iter().map(|r| r.rel_err).collect();
    let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
    let last = errs[errs.len() - 1];
    Ok(Outcome {
        passed: decreasing && st.fitted_order >= 0.7 && last < 1e-2,
        detail: format!(
            "errors {:?}, order {:.3} (>= 0.7), final {last:.2e} (< 1e-2)",
            errs.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
            st.fitted_order
        ),
    })
}

fn criterion_6() -> Result<Outcome> {
    let (cfg, t) = table(&Potential::gaussian(), 100, 6)?;
    let deltas: Vec<f64> = (0..10).map(|i| 0.2 * 10f64.powf(i as f64 / 9.0)).collect();
    let mut passed = true;
    let mut parts = Vec::new();
    for k in [1usize, 2] {
        let mut logs = Vec::new();
        let mut worst_ratio: f64 = 0.0;
        for &d in &deltas {
            let m = moment_negative(&t, &cfg, 0.0, d, k, &q())?;
            logs.push(m.exact.log_mag);
            worst_ratio = worst_ratio.max(((m.exact / m.asymptotic).to_complex() - 1.0).norm());
        }
        let slope = slope(&deltas.iter().map(|d| d.ln()).collect::<Vec<_>>(), &logs);
        let target = -((k * k) as f64);
        let slope_ok = ((slope - target) / target).abs() <= 0.07;
        passed &= slope_ok && worst_ratio <= 0.1;
        parts.push(format!("K={k}: slope {slope:.2} (target {target}), max |ratio-1| {worst_ratio:.2}"));
    }
    Ok(Outcome {
        passed,
        detail: parts.join("; "),
    })
}

fn criterion_7() -> Result<Outcome> {
    let (cfg, t) = table(&Potential::gaussian(), 100, 6)?;
    let mut passed = true;
    let mut parts = Vec::new();
    for k in [1usize, 2] {
        let m = moment_positive(&t, &cfg, 0.0, k)?;
        let target = upsilon_plus(k);
        let dev = (m.universal_ratio / target - 1.0).abs();
        passed &= dev <= 0.05;
        parts.push(format!("K={k}: {:.4} vs {target:.4}", m.universal_ratio));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (5%)", parts.join("; ")),
    })
}

fn criterion_8() -> Result<Outcome> {
    let mut passed = true;
    let mut parts = Vec::new();
    for m in 1..=3usize {
        let v = Potential::monomial(m, 1.0)?;
        let meas = EquilibriumMeasure::from_potential(&v)?;
        let mass_err = (meas.total_mass() - 1.0).abs();
        let grid: Vec<f64> = (0..41).map(|i| 0.8 * meas.a * (-1.0 + i as f64 / 20.0)).collect();
        let mut hres: f64 = 0.0;
        let mut dres: f64 = 0.0;
        let (cfg, t) = table(&v, 80, 2)?;
        for &x in &grid {
            hres = hres.max((meas.hilbert(x)? - v.eval(x).1 / (2.0 * PI)).abs());
            dres = dres.max((finite_density(&t, &cfg, x)? - meas.psi(x)).abs());
        }
        passed &= mass_err < 1e-10 && hres < 1e-6 && dres < 5.0 / 80.0;
        parts.push(format!("m={m}: mass {mass_err:.1e}, Hilbert {hres:.1e}, density {dres:.1e}"));
    }
    Ok(Outcome {
        passed,
        detail: format!("{} (1e-10, 1e-6, 5/N)", parts.join("; ")),
    })
}

fn criterion_9() -> Result<Outcome> {
    let mut n = 0;
    let mut failed = Vec::new();
    for seed in 1..=3 {
        for r in run_suite(Suite::All, seed)? {
            n += 1;
            if !r.passed() {
                failed.push(format!("{} (seed {seed}): {:.2e}", r.name, r.residual));
            }
        }
    }
    Ok(Outcome {
        passed: failed.is_empty(),
        detail: if failed.is_empty() {
            format!("{n} checks within 1e-10 x terms x max term")
        } else {
            format!("failed: {}", failed.join(", "))
        },
    })
}

fn criterion_10() -> Result<Outcome> {
    // the closed form needs α(x) = 0, i.e. the centre for even potentials
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    let eta = |rng: &mut ChaCha8Rng| {
        (
            c(rng.random_range(-0.5..0.5), rng.random_range(0.2..1.0)),
            c(rng.random_range(-0.5..0.5), -rng.random_range(0.2..1.0)),
        )
    };
    let mut worst: f64 = 0.0;
    for v in &[Potential::gaussian(), Potential::monomial(2, 1.0)?] {
        let (_, t40) = table(v, 40, 6)?;
        let rho = BulkData::new(v, 40, 0.0)?.rho;
        for _ in 0..25 {
            let (e1, e2) = eta(&mut rng);
            let a = two_point_resolvent(rho, e1, e2)?;
            let b = two_point_resolvent_numeric(&t40, 0.0, e1, e2, 1e-2)?;
            worst = worst.max((a - b).norm() / a.norm());
        }
    }
    let n = 160;
    let (cfg, t) = table(&Potential::gaussian(), n, 6)?;
    let n_rho = n as f64 * finite_density(&t, &cfg, 0.0)?;
    let mut worst_finite: f64 = 0.0;
    for _ in 0..6 {
        let (e1, e2) = eta(&mut rng);
        let f = two_point_resolvent_finite(&t, 0.0, n_rho, e1, e2, &q())?;
        let l = two_point_resolvent(1.0 / PI, e1, e2)?;
        worst_finite = worst_finite.max((f - l).norm() / l.norm());
    }
    Ok(Outcome {
        passed: worst < 1e-6 && worst_finite < 0.1,
        detail: format!("derivative route {worst:.2e} over 50 points (< 1e-6), N=160 {worst_finite:.3} (< 0.1)"),
    })
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 10] = [
        ("unit ratio at coincidence", criterion_1),
        ("specialised vs general formula", criterion_2),
        ("Monte-Carlo oracle", criterion_3),
        ("Christoffel-Darboux equivalence", criterion_4),
        ("sine-kernel convergence", criterion_5),
        ("negative-moment divergence", criterion_6),
        ("positive-moment coefficient", criterion_7),
        ("equilibrium measure", criterion_8),
        ("identity suite", criterion_9),
        ("two-point function", criterion_10),
    ];
    let mut failures = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = i + 1;
        let start = Instant::now();
        let (ok, detail) = match run() {
            Ok(o) => (o.passed, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let secs = start.elapsed().as_secs_f64();
        println!("criterion {id:>2} {name}: {} [{secs:.1}s] {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures.push(id);
        }
    }
    if failures == KNOWN_FAILURES {
        println!("failing criteria {failures:?} match the recorded unattainable set");
        ExitCode::SUCCESS
    } else {
        println!("failing criteria {failures:?} differ from the recorded set {KNOWN_FAILURES:?}");
        ExitCode::FAILURE
    }
}
