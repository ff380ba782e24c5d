//! Suite dispatch and report documents for the `jbstar` command.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use jbstar::algebra::{build_direct_sum, build_hermitian_matrix_algebra, build_spin_factor};
use jbstar::calculus::axioms_check;
use jbstar::descriptor::{AlgebraSpec, MapSpec};
use jbstar::measure::{random_linear_map, I2Policy, Mode, SaFunction};
use jbstar::peirce::{kaup_identity_check, peirce_laws_check};
use jbstar::preserver::{
    central_symmetry_map, check_central_preservation, check_generator_properties, check_oc_additive,
    check_oc_quadratic, check_piecewise_hom_on_unitaries, classify_factor_dichotomy, eighth_turn_twist, identity_map,
    random_conjugation, recover_structure, spin_counterexample_on, star_map, transpose_map, verify_counterexample,
    DichotomyCase, RecoveryOptions,
};
use jbstar::report::{Tracker, Witness};
use jbstar::sample::{child_rng, random_tripotent, rng_from_seed, OcSampler};
use jbstar::unitary::{
    circle_inequality_check, oc_unitary_equivalences_check, oc_unitary_equivalences_control,
    oc_unitary_product_check, oc_unitary_product_control, symmetric_difference_check,
};
use jbstar::{AlgebraHandle, CheckReport, MapUnderTest, Tolerance};

pub const SCHEMA: u32 = 1;
pub const DEFAULT_TRIALS: usize = 200;
pub const DEFAULT_SEED: u64 = 42;

pub const SUITES: [(&str, &str); 12] = [
    ("axioms", "Jordan identity and the JB* norm axiom on random elements"),
    ("oc-equivalences", "equivalent forms of operator commutativity for exponentials, with a non-commuting control"),
    ("unitary-piecewise", "Jordan products of operator-commuting unitaries, and piecewise homomorphisms on unitaries"),
    ("circle-inequality", "n ||u - 1|| <= (pi/2) ||u^n - 1|| for unitaries near 1"),
    ("peirce", "Peirce projection laws for random tripotents"),
    ("kaup", "triple product of the Peirce-2 algebra against the ambient triple product"),
    ("preserver", "preserver hypotheses for a map: additivity, quadraticity, generators, centre"),
    ("factor-dichotomy", "classify Phi = theta, theta o star and a phase twist on a factor"),
    ("structure-recovery", "recover Phi(1), the Peirce-2 algebra and the Jordan homomorphism"),
    ("counterexample", "the spin-factor map that is additive on commuting pairs but not linear"),
    ("linearity", "linear reconstruction of a homogeneous, commuting-additive function"),
    ("symmetric-difference", "p + q - 2 p o q for commuting projections and its image under symmetries"),
];

pub fn list_suites() -> Vec<(&'static str, &'static str)> {
    SUITES.to_vec()
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown suite `{0}` (run `jbstar list` for the available suites)")]
    UnknownSuite(String),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] jbstar::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub suite: String,
    pub algebra_path: Option<PathBuf>,
    pub map_path: Option<PathBuf>,
    pub trials: usize,
    pub seed: u64,
    pub tol: Tolerance,
    pub out_path: Option<PathBuf>,
    /// Warp parameter of the counterexample suite.
    pub epsilon: f64,
    pub i2_policy: I2Policy,
    pub exploratory: bool,
}

impl RunConfig {
    pub fn new(suite: impl Into<String>) -> Self {
        RunConfig {
            suite: suite.into(),
            algebra_path: None,
            map_path: None,
            trials: DEFAULT_TRIALS,
            seed: DEFAULT_SEED,
            tol: Tolerance::default(),
            out_path: None,
            epsilon: 0.3,
            i2_policy: I2Policy::default(),
            exploratory: false,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !SUITES.iter().any(|(n, _)| *n == self.suite) {
            return Err(CliError::UnknownSuite(self.suite.clone()));
        }
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        self.tol.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        for p in [&self.algebra_path, &self.map_path].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Usage(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema: u32,
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub checks: Vec<CheckReport>,
    pub verdict: Verdict,
    pub duration_ms: u64,
}

impl ReportDocument {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Verdict::Pass => 0,
            Verdict::Fail => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report documents serialize")
    }

    /// The document with timing fields cleared, for reproducibility checks.
    pub fn without_timing(&self) -> ReportDocument {
        ReportDocument { duration_ms: 0, ..self.clone() }
    }

    pub fn summary(&self) -> String {
        let mut out = format!("jbstar {} suite `{}` seed {}\n", self.version, self.config.suite, self.config.seed);
        for c in &self.checks {
            out.push_str(&c.summary_line());
            out.push('\n');
            for n in &c.notes {
                out.push_str(&format!("    note: {n}\n"));
            }
        }
        out.push_str(&format!(
            "verdict: {} ({} checks, {} ms)\n",
            if self.verdict == Verdict::Pass { "PASS" } else { "FAIL" },
            self.checks.len(),
            self.duration_ms
        ));
        out
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn load_algebra(cfg: &RunConfig, default: impl FnOnce(Tolerance) -> jbstar::Result<AlgebraHandle>) -> Result<AlgebraHandle, CliError> {
    match &cfg.algebra_path {
        Some(p) => Ok(AlgebraSpec::from_json(&read(p)?)?.build(cfg.tol)?),
        None => Ok(default(cfg.tol)?),
    }
}

fn load_map_spec(cfg: &RunConfig) -> Result<Option<MapSpec>, CliError> {
    cfg.map_path.as_deref().map(|p| Ok(MapSpec::from_json(&read(p)?)?)).transpose()
}

fn h(n: usize) -> impl FnOnce(Tolerance) -> jbstar::Result<AlgebraHandle> {
    move |tol| build_hermitian_matrix_algebra(n, tol)
}

/// A check that could not run becomes a failed report naming the error.
fn guarded(name: &str, r: jbstar::Result<CheckReport>) -> CheckReport {
    r.unwrap_or_else(|e| {
        let mut t = Tracker::new(name, 0.0);
        t.note(format!("error: {e}"));
        t.finish_with(false)
    })
}

fn dichotomy_report(m: &MapUnderTest, theta: &MapUnderTest, expected: DichotomyCase, trials: usize, seed: u64) -> CheckReport {
    let name = format!("factor dichotomy [{}] expects {:?}", m.label, expected);
    guarded(
        &name,
        classify_factor_dichotomy(m, theta, trials, seed).map(|d| {
            let res = match expected {
                DichotomyCase::IdentityCase => d.identity_residual,
                DichotomyCase::InverseCase => d.inverse_residual,
                DichotomyCase::Neither => d.identity_residual.min(d.inverse_residual),
            };
            let mut t = Tracker::new(name.clone(), 1e-7);
            for _ in 0..d.trials {
                t.trial();
            }
            t.record(res, || d.witness.clone().unwrap_or_else(|| Witness::new("classification residual", res)));
            t.metric("identity_residual", d.identity_residual);
            t.metric("inverse_residual", d.inverse_residual);
            t.note(format!("classified as {:?}", d.case));
            t.finish_with(d.case == expected)
        }),
    )
}

fn run_suite(cfg: &RunConfig) -> Result<Vec<CheckReport>, CliError> {
    let (n, seed) = (cfg.trials, cfg.seed);
    let map_spec = load_map_spec(cfg)?;
    let out = match cfg.suite.as_str() {
        "axioms" => axioms_check(&load_algebra(cfg, h(3))?, n, seed),
        "oc-equivalences" => {
            let alg = load_algebra(cfg, h(3))?;
            vec![
                guarded("oc equivalences", oc_unitary_equivalences_check(&alg, n, seed)),
                guarded("oc equivalences (control)", oc_unitary_equivalences_control(&alg, n.min(50), seed ^ 1)),
            ]
        }
        "unitary-piecewise" => {
            let alg = load_algebra(cfg, h(3))?;
            let mut v = vec![
                oc_unitary_product_check(&alg, n, seed),
                guarded("oc unitary product (control)", oc_unitary_product_control(&alg, n.min(50), seed ^ 1)),
            ];
            let maps = match &map_spec {
                Some(s) => vec![s.build(&alg)?],
                None => vec![identity_map(&alg), star_map(&alg)],
            };
            for m in maps {
                v.push(guarded("piecewise homomorphism", check_piecewise_hom_on_unitaries(&m, n, seed ^ 2)));
            }
            v
        }
        "circle-inequality" => {
            vec![guarded("circle inequality", circle_inequality_check(&load_algebra(cfg, h(3))?, n, seed))]
        }
        "peirce" => vec![guarded("peirce projections", peirce_laws_check(&load_algebra(cfg, h(3))?, n, seed))],
        "kaup" => vec![kaup_suite(&load_algebra(cfg, h(3))?, n, seed)],
        "preserver" => {
            let alg = load_algebra(cfg, h(3))?;
            let m = match &map_spec {
                Some(s) => s.build(&alg)?,
                None => random_conjugation(&alg, seed)?,
            };
            let sampler = OcSampler::default_for(&alg);
            let mut v = vec![
                guarded("oc additivity", check_oc_additive(&m, sampler, n, seed)),
                guarded("oc quadratic", check_oc_quadratic(&m, sampler, n, seed ^ 1)),
                guarded("piecewise homomorphism", check_piecewise_hom_on_unitaries(&m, n, seed ^ 2)),
                guarded("generator map", check_generator_properties(&m, n.min(50), seed ^ 3)),
            ];
            if m.has_inverse() {
                v.push(guarded("central preservation", check_central_preservation(&m, n.min(50), seed ^ 4)));
            }
            v
        }
        "factor-dichotomy" => {
            let alg = load_algebra(cfg, h(3))?;
            let theta = match &map_spec {
                Some(s) => s.build(&alg)?,
                None => transpose_map(&alg)?,
            };
            let inv = MapUnderTest::compose(&theta, &star_map(&alg))?;
            vec![
                dichotomy_report(&theta, &theta, DichotomyCase::IdentityCase, n, seed),
                dichotomy_report(&inv, &theta, DichotomyCase::InverseCase, n, seed ^ 1),
                dichotomy_report(&eighth_turn_twist(&theta), &theta, DichotomyCase::Neither, n, seed ^ 2),
            ]
        }
        "structure-recovery" => {
            let alg = load_algebra(cfg, |tol| {
                build_direct_sum(vec![build_hermitian_matrix_algebra(3, tol)?, build_hermitian_matrix_algebra(3, tol)?])
            })?;
            let m = match &map_spec {
                Some(s) => s.build(&alg)?,
                None => default_central_twist(&alg)?,
            };
            let label = m.label.clone();
            vec![guarded(
                &format!("structure recovery [{label}]"),
                recover_structure(&m, n, seed, RecoveryOptions::default()).map(|r| r.report(&label, 1e-6)),
            )]
        }
        "counterexample" => {
            let alg = load_algebra(cfg, |tol| build_spin_factor(3, tol))?;
            let cx = spin_counterexample_on(&alg, cfg.epsilon)?;
            match verify_counterexample(&cx, n, seed) {
                Ok(v) => v,
                Err(e) => vec![guarded("counterexample", Err(e))],
            }
        }
        "linearity" => {
            let alg = load_algebra(cfg, h(3))?;
            let f: SaFunction = match &map_spec {
                Some(s) => s.build_function(&alg)?,
                None => random_linear_map(&alg, 3, seed).0,
            };
            let mode = if cfg.exploratory { Mode::Exploratory } else { Mode::TheoremGrade };
            vec![guarded(
                &format!("linearity theorem [{}]", alg.label()),
                jbstar::measure::verify_linearity_theorem(&alg, f, n, seed, mode, cfg.i2_policy),
            )]
        }
        "symmetric-difference" => {
            vec![guarded("symmetric difference", symmetric_difference_check(&load_algebra(cfg, h(4))?, n, seed))]
        }
        other => return Err(CliError::UnknownSuite(other.to_string())),
    };
    Ok(out)
}

/// `a -> a o (1 (+) -1 (+) ...)`: the identity twisted by the central
/// symmetry that flips every summand after the first.
pub fn default_central_twist(alg: &AlgebraHandle) -> jbstar::Result<MapUnderTest> {
    let parts = alg.parts();
    let s = if parts.len() > 1 {
        let comps: Vec<_> = parts.iter().enumerate().map(|(k, p)| if k == 0 { p.unit() } else { -&p.unit() }).collect();
        alg.from_components(&comps)?
    } else {
        alg.unit()
    };
    central_symmetry_map(&identity_map(alg), &s)
}

/// Kaup identity on twenty random non-zero tripotents.
fn kaup_suite(alg: &AlgebraHandle, trials: usize, seed: u64) -> CheckReport {
    let mut rng = rng_from_seed(seed);
    let mut t = Tracker::new(format!("kaup identity [{}]", alg.label()), 1e-7);
    let mut done = 0;
    while done < 20 {
        let mut r = child_rng(&mut rng);
        let e = random_tripotent(alg, &mut r);
        if alg.norm(&e) < 0.5 {
            continue;
        }
        done += 1;
        match kaup_identity_check(alg, &e, trials.min(100), seed.wrapping_add(done as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)) {
            Ok(rep) => {
                for _ in 0..rep.trials {
                    t.trial();
                }
                t.metric_max("range_leak", rep.metric("range_leak").unwrap_or(0.0));
                let w = rep.witness.clone();
                t.record(rep.max_residual, || w.unwrap_or_else(|| Witness::new("kaup identity", 0.0)));
            }
            Err(err) => {
                t.note(format!("error: {err}"));
                t.record(f64::INFINITY, || Witness::new("kaup identity could not run", f64::INFINITY).with("e", &e));
            }
        }
    }
    t.metric("tripotents", done as f64);
    t.finish()
}

/// Runs a validated configuration; the process exit status is
/// [`ReportDocument::exit_code`].
pub fn run(cfg: &RunConfig) -> Result<ReportDocument, CliError> {
    cfg.validate()?;
    let start = Instant::now();
    let checks = run_suite(cfg)?;
    let pass = checks.iter().all(|c| c.expected_fail || c.passed);
    let doc = ReportDocument {
        schema: SCHEMA,
        tool: "jbstar".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        checks,
        verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        duration_ms: start.elapsed().as_millis() as u64,
    };
    if let Some(p) = &cfg.out_path {
        std::fs::write(p, doc.to_json() + "\n").map_err(|source| CliError::Io { path: p.clone(), source })?;
    }
    Ok(doc)
}
