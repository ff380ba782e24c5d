//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use jbstar::algebra::{build_direct_sum, build_hermitian_matrix_algebra, build_spin_factor};
use jbstar::calculus::{axioms_check, jordan_spectrum};
use jbstar::linalg::hermitian_eig;
use jbstar::measure::{random_linear_map, sa_function_of_map, verify_linearity_theorem, I2Policy, Mode};
use jbstar::peirce::{kaup_identity_check, peirce_laws_check};
use jbstar::preserver::{
    build_spin_counterexample, check_oc_additive, check_oc_quadratic, classify_factor_dichotomy, identity_map,
    random_conjugation, recover_structure, star_map, transpose_map, verify_counterexample, DichotomyCase,
    RecoveryOptions,
};
use jbstar::sample::{child_rng, random_self_adjoint, random_tripotent, rng_from_seed, OcSampler};
use jbstar::unitary::{
    circle_inequality_check, oc_unitary_equivalences_check, oc_unitary_equivalences_control,
    oc_unitary_product_check, symmetric_difference_check,
};
use jbstar::{AlgebraHandle, CheckReport, Error, MapUnderTest, Tolerance};
use jbstar_cli::{default_central_twist, run, RunConfig, SUITES};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 42;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn h(n: usize) -> AlgebraHandle {
    build_hermitian_matrix_algebra(n, tol()).unwrap()
}

fn spin(n: usize) -> AlgebraHandle {
    build_spin_factor(n, tol()).unwrap()
}

fn h3h3() -> AlgebraHandle {
    build_direct_sum(vec![h(3), h(3)]).unwrap()
}

fn require(rep: &CheckReport) -> Result<(), String> {
    if rep.passed {
        Ok(())
    } else {
        Err(rep.summary_line())
    }
}

fn metric(rep: &CheckReport, key: &str) -> Result<f64, String> {
    rep.metric(key).ok_or_else(|| format!("{}: no metric `{key}`", rep.name))
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn axioms() -> Outcome {
    let models = [h(1), h(2), h(3), h(4), spin(3), spin(4), spin(6)];
    let mut worst = (0.0f64, 0.0f64);
    for alg in &models {
        let reps = axioms_check(alg, 500, SEED);
        for rep in &reps {
            require(rep)?;
        }
        worst.0 = worst.0.max(reps[0].max_residual);
        worst.1 = worst.1.max(reps[1].max_residual);
    }
    Ok(format!("7 models x 500, jordan {:.1e}, norm axiom {:.1e}", worst.0, worst.1))
}

fn oc_equivalences() -> Outcome {
    let mut weakest = f64::INFINITY;
    let mut worst: f64 = 0.0;
    for alg in [h(2), h(3), spin(3), spin(4), h3h3()] {
        let rep = oc_unitary_equivalences_check(&alg, 200, SEED).map_err(e)?;
        require(&rep)?;
        worst = worst.max(rep.max_residual);
        let ctl = oc_unitary_equivalences_control(&alg, 50, SEED ^ 1).map_err(e)?;
        let w = metric(&ctl, "weakest_violation")?;
        if w < 1e-6 {
            return Err(format!("{}: weakest violation {w:.3e} < 1e-6", ctl.name));
        }
        weakest = weakest.min(w);
    }
    Ok(format!("commuting residual {worst:.1e}, weakest non-commuting violation {weakest:.2e}"))
}

fn unitary_products() -> Outcome {
    let mut worst: f64 = 0.0;
    for alg in [h(2), h(3), h(4), spin(3), spin(5), h3h3()] {
        let rep = oc_unitary_product_check(&alg, 200, SEED);
        require(&rep)?;
        worst = worst.max(rep.max_residual);
    }
    Ok(format!("6 models x 200, unitary residual {worst:.1e}"))
}

fn circle() -> Outcome {
    let mut tight: f64 = 0.0;
    for alg in [h(3), spin(4)] {
        let rep = circle_inequality_check(&alg, 500, SEED).map_err(e)?;
        require(&rep)?;
        tight = tight.max(metric(&rep, "tightest_ratio")?);
    }
    Ok(format!("tightest lhs/rhs {tight:.4}"))
}

fn peirce() -> Outcome {
    let models = [h(2), h(3), spin(3), h3h3()];
    let mut laws: f64 = 0.0;
    let mut kaup: f64 = 0.0;
    for (k, alg) in models.iter().enumerate() {
        let rep = peirce_laws_check(alg, 5, SEED + k as u64).map_err(e)?;
        require(&rep)?;
        laws = laws.max(rep.max_residual);
        let mut rng = rng_from_seed(SEED + 100 + k as u64);
        let mut done = 0;
        while done < 5 {
            let mut r = child_rng(&mut rng);
            let t = random_tripotent(alg, &mut r);
            if alg.norm(&t) < 0.5 {
                continue;
            }
            done += 1;
            let rep = kaup_identity_check(alg, &t, 100, SEED + done).map_err(e)?;
            require(&rep)?;
            kaup = kaup.max(rep.max_residual);
        }
    }
    Ok(format!("20 tripotents, projection laws {laws:.1e}, kaup {kaup:.1e}"))
}

fn spectrum_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for alg in [h(3), h(4)] {
        let mut rng = rng_from_seed(SEED);
        for _ in 0..200 {
            let mut r = child_rng(&mut rng);
            let a = random_self_adjoint(&alg, &mut r);
            let jordan = jordan_spectrum(&alg, &a).map_err(e)?;
            let oracle = hermitian_eig(&alg.to_matrix(&a).map_err(e)?, &tol()).map_err(e)?.values;
            let scale = 1.0 + oracle.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if jordan.len() != oracle.len() {
                return Err(format!("{}: {} vs {} eigenvalues", alg.label(), jordan.len(), oracle.len()));
            }
            for (x, y) in jordan.iter().zip(&oracle) {
                let d = (x - y).abs() / scale;
                worst = worst.max(d);
                if d > tol().cluster_eps {
                    return Err(format!("{}: eigenvalue {x} vs oracle {y}", alg.label()));
                }
            }
        }
    }
    Ok(format!("400 elements, worst relative gap {worst:.1e}"))
}

fn structure_recovery() -> Outcome {
    let (a3, a33) = (h(3), h3h3());
    let maps: Vec<MapUnderTest> = vec![
        identity_map(&a33),
        random_conjugation(&a3, 7).map_err(e)?,
        random_conjugation(&a33, 11).map_err(e)?,
        transpose_map(&a3).map_err(e)?,
        default_central_twist(&a33).map_err(e)?,
    ];
    let mut worst: f64 = 0.0;
    for (k, m) in maps.iter().enumerate() {
        let sampler = OcSampler::default_for(&m.source);
        require(&check_oc_additive(m, sampler, 100, SEED + k as u64).map_err(e)?)?;
        require(&check_oc_quadratic(m, sampler, 100, SEED + k as u64).map_err(e)?)?;
        let rec = recover_structure(m, 100, SEED, RecoveryOptions::default()).map_err(e)?;
        if rec.hom_residual > 1e-6 {
            return Err(format!("{}: hom residual {:.3e}", m.label, rec.hom_residual));
        }
        if rec.bijective && !rec.w_central_symmetry {
            return Err(format!("{}: Phi(1) not flagged as a central symmetry", m.label));
        }
        worst = worst.max(rec.hom_residual);
    }
    Ok(format!("5 maps, hom residual {worst:.1e}"))
}

fn counterexample() -> Outcome {
    let cx = build_spin_counterexample(3, 0.3, tol()).map_err(e)?;
    let reps = verify_counterexample(&cx, 500, SEED).map_err(e)?;
    let add = metric(&reps[0], "raw_max")?;
    let quad = metric(&reps[1], "raw_max")?;
    if add > 1e-9 || quad > 1e-8 {
        return Err(format!("oc additivity {add:.3e}, oc quadratic {quad:.3e}"));
    }
    require(&reps[2])?;
    let (ss, sv) = (metric(&reps[2], "spot_scalar")?, metric(&reps[2], "spot_vector")?);
    if (ss - 4.0).abs() > 1e-12 || (sv - 4.0).abs() > 1e-12 {
        return Err(format!("closed-form spot value ({ss}, {sv}) instead of (4, 4)"));
    }
    let gap = metric(&reps[3], "witness_gap")?;
    let lin = metric(&reps[5], "linearity_residual")?;
    if gap < 0.1 || lin < 0.05 {
        return Err(format!("witness gap {gap:.4}, linearity residual {lin:.4}"));
    }
    Ok(format!("additivity {add:.1e}, quadratic {quad:.1e}, witness gap {gap:.4}, linearity residual {lin:.4}"))
}

fn linearity() -> Outcome {
    let a3 = h(3);
    let mut misfit: f64 = 0.0;
    for k in 1..=5 {
        let (f, _) = random_linear_map(&a3, 3, k);
        let rep = verify_linearity_theorem(&a3, f, 100, SEED + k, Mode::TheoremGrade, I2Policy::Refuse).map_err(e)?;
        require(&rep)?;
        let m = metric(&rep, "misfit")?;
        if m > 1e-7 {
            return Err(format!("linear map {k}: misfit {m:.3e}"));
        }
        misfit = misfit.max(m);
    }
    let cx = build_spin_counterexample(3, 0.3, tol()).map_err(e)?;
    let f = sa_function_of_map(&cx.map);
    match verify_linearity_theorem(&cx.algebra, f.clone(), 100, SEED, Mode::TheoremGrade, I2Policy::Refuse) {
        Err(Error::TypeI2Present) => {}
        other => return Err(format!("spin(3) theorem-grade run was not refused: {other:?}")),
    }
    let rep = verify_linearity_theorem(&cx.algebra, f, 100, SEED, Mode::Exploratory, I2Policy::Refuse).map_err(e)?;
    let cm = metric(&rep, "misfit")?;
    if cm < 0.05 {
        return Err(format!("counterexample misfit {cm:.4} < 0.05"));
    }
    Ok(format!("H3 misfit {misfit:.1e}, spin(3) refused, counterexample misfit {cm:.4}"))
}

fn dichotomy() -> Outcome {
    let a = h(3);
    let mut thetas = vec![identity_map(&a)];
    for s in [3, 5, 8] {
        thetas.push(random_conjugation(&a, s).map_err(e)?);
    }
    thetas.push(transpose_map(&a).map_err(e)?);
    let star = star_map(&a);
    let mut n = 0;
    for theta in &thetas {
        let inv = MapUnderTest::compose(theta, &star).map_err(e)?;
        for (m, expected) in [(theta, DichotomyCase::IdentityCase), (&inv, DichotomyCase::InverseCase)] {
            let d = classify_factor_dichotomy(m, theta, 100, SEED).map_err(e)?;
            if d.case != expected {
                return Err(format!("{}: classified {:?}, expected {expected:?}", m.label, d.case));
            }
            n += 1;
        }
    }
    Ok(format!("{n} classifications x 100 unitaries, none wrong"))
}

fn symmetric_difference() -> Outcome {
    let rep = symmetric_difference_check(&h(4), 200, SEED).map_err(e)?;
    require(&rep)?;
    Ok(format!(
        "projection defect {:.1e}, symmetry identity defect {:.1e}",
        metric(&rep, "projection_defect")?,
        metric(&rep, "symmetry_identity_defect")?
    ))
}

fn determinism() -> Outcome {
    for (suite, _) in SUITES {
        let mut cfg = RunConfig::new(suite);
        cfg.trials = 5;
        cfg.seed = 9;
        let a = run(&cfg).map_err(e)?.without_timing().to_json();
        let b = run(&cfg).map_err(e)?.without_timing().to_json();
        if a != b {
            return Err(format!("suite {suite} differs between runs"));
        }
    }
    Ok(format!("{} suites reproduced byte for byte", SUITES.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("JB* axioms", axioms),
        ("operator-commutativity equivalences", oc_equivalences),
        ("products of commuting unitaries", unitary_products),
        ("circle inequality", circle),
        ("Peirce laws and Kaup identity", peirce),
        ("spectrum against eigenvalue oracle", spectrum_oracle),
        ("structure recovery for Jordan *-isomorphisms", structure_recovery),
        ("spin-factor counterexample", counterexample),
        ("linearity theorem", linearity),
        ("factor dichotomy", dichotomy),
        ("symmetric difference", symmetric_difference),
        ("determinism", determinism),
    ];
    let start = Instant::now();
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let ms = t.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({ms} ms)", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({ms} ms)", k + 1);
            }
        }
    }
    println!("acceptance: {}/12 passed in {:.1} s", 12 - failed, start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
