//! Command-line front end: configuration, orchestration and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affine::AffineFunction;
use crate::besov::{
    ball_energy, ball_energy_bruteforce, bbm_curve, besov_seminorm, critical_sweep, discrete_profiles, energy_factor,
    equivalence_bands, equivalence_betas, phi_profile, weak_monotonicity_report, Summability, Tail, Trend,
};
use crate::checks::{structure_checks, Lipschitz};
use crate::energy::{energy_limit, energy_of_gradient, gradient_field, discrete_energy};
use crate::energy_measure::{
    chain_rule_check, coincidence_check, gamma_cells, linear_chain_rule, pushforward_profile, word_energy_measure,
    Square,
};
use crate::error::{Error, Result};
use crate::geometry::{Hierarchy, LatticePoint, DEFAULT_CELL_BUDGET};
use crate::hausdorff::{first_balanced_eta_violation, hausdorff_report, Limit, Regime};
use crate::measure::{derived_constants, doubling_sample, mu_cell, scale_table, scaling_law};
use crate::num::{rational, Exponent, Scalar};
use crate::ratios::{RatioRule, RatioSequence, Word};
use crate::resistance::resistance_table;
use crate::rng::{random_weights, seeded_suite};

#[derive(Debug, Parser)]
#[command(name = "vicsek", version, about = "Energies and Besov functionals on scale-irregular Vicsek sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON experiment configuration; built-in defaults are used without one.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "VICSEK_THREADS")]
    pub threads: Option<usize>,
    /// Arithmetic mode (overrides the configuration).
    #[arg(long, global = true, value_enum)]
    pub mode: Option<Mode>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Geometry of every level as JSON, plus invariant checks.
    Build,
    /// Scale table, derived constants and doubling samples.
    Measure,
    /// Dimension and deviation diagnostics for a two-ratio sequence.
    Hausdorff,
    /// Energy reports and structural checks.
    Energy,
    /// Cell energy measures, coincidence, chain rule and push-forward.
    EnergyMeasure,
    /// Ball-functional profiles, equivalence bands, sweeps.
    Besov,
    /// The BBM curve with its brackets.
    Bbm,
    /// Resistance tables with the variational cross-check.
    Resistance,
    /// The full invariant suite.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Build => "build",
            Command::Measure => "measure",
            Command::Hausdorff => "hausdorff",
            Command::Energy => "energy",
            Command::EnergyMeasure => "energy-measure",
            Command::Besov => "besov",
            Command::Bbm => "bbm",
            Command::Resistance => "resistance",
            Command::Selftest => "selftest",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Rational,
    Float,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HausdorffConfig {
    pub a: u32,
    pub b: u32,
    pub theta: f64,
    pub prefix_length: usize,
    pub liminf: Limit,
    pub limsup: Limit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub ratios: RatioRule,
    pub p: f64,
    pub beta_star: f64,
    /// Truncation level `N`.
    pub depth: usize,
    /// Vertex level `m` of the ball sums.
    pub vertex_level: usize,
    /// Grid of the critical sweep; empty means `{0.8, 1, 1.2} * beta*`.
    pub betas: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub tail: Tail,
    pub seed: u64,
    pub suite_size: usize,
    pub mode: Mode,
    pub budget: u64,
    /// Window of the weak-monotonicity ratio; defaults to `[N-2, N]`.
    pub window: Option<(usize, usize)>,
    pub hausdorff: Option<HausdorffConfig>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ratios: RatioRule::Constant(3),
            p: 2.0,
            beta_star: 1.0,
            depth: 4,
            vertex_level: 6,
            betas: Vec::new(),
            epsilons: vec![0.2, 0.1, 0.05, 0.02, 0.01],
            tail: Tail::Plateau,
            seed: 0,
            suite_size: 20,
            mode: Mode::Rational,
            budget: DEFAULT_CELL_BUDGET,
            window: None,
            hausdorff: None,
            out: None,
            threads: None,
        }
    }
}

fn config_error(field: &str, message: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        message: message.into(),
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .map_or_else(|| "<document>".to_string(), str::to_string);
            config_error(&field, msg)
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p.is_finite() && self.p > 1.0) {
            return Err(config_error("p", format!("must be > 1, got {}", self.p)));
        }
        if !(self.beta_star.is_finite() && self.beta_star > 0.0) {
            return Err(config_error("beta_star", "must be > 0"));
        }
        self.sequence().map_err(|e| config_error("ratios", e.to_string()))?;
        if self.vertex_level < self.depth + 2 {
            return Err(config_error(
                "vertex_level",
                format!("must be at least depth + 2 = {}, got {}", self.depth + 2, self.vertex_level),
            ));
        }
        if let Some(&b) = self.betas.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(config_error("betas", format!("every beta must be positive, got {b}")));
        }
        if let Some(&e) = self.epsilons.iter().find(|e| !(**e > 0.0 && **e < self.beta_star)) {
            return Err(config_error("epsilons", format!("every epsilon must lie in (0, beta_star), got {e}")));
        }
        if let Some((lo, hi)) = self.window {
            if lo < 1 || lo > hi || hi > self.depth {
                return Err(config_error("window", format!("[{lo}, {hi}] must lie inside [1, depth]")));
            }
        }
        if let Some(hc) = &self.hausdorff {
            if !(hc.theta.is_finite() && hc.theta >= 0.0) {
                return Err(config_error("hausdorff.theta", "must be finite and >= 0"));
            }
            if hc.prefix_length == 0 {
                return Err(config_error("hausdorff.prefix_length", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn sequence(&self) -> Result<RatioSequence> {
        RatioSequence::new(self.ratios.clone(), Exponent::new(self.p)?, self.beta_star)
    }

    /// SHA-256 of the configuration without the output directory and thread count.
    #[must_use]
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configuration serializes");
        Sha256::digest(&bytes).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    fn exact(&self) -> bool {
        self.mode == Mode::Rational
    }

    fn window(&self) -> (usize, usize) {
        self.window.unwrap_or((self.depth.saturating_sub(2).max(1), self.depth.max(1)))
    }

    fn sweep_betas(&self) -> Vec<f64> {
        if self.betas.is_empty() {
            vec![0.8 * self.beta_star, self.beta_star, 1.2 * self.beta_star]
        } else {
            self.betas.clone()
        }
    }
}

/// Writes CSV and JSON artifacts tagged with the configuration hash.
struct Artifacts {
    dir: PathBuf,
    hash: String,
}

impl Artifacts {
    fn new(dir: &Path, hash: String) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash,
        })
    }

    fn csv(&self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut text = format!("# config_sha256={}\n{}\n", self.hash, header.join(","));
        for r in rows {
            text.push_str(&r.join(","));
            text.push('\n');
        }
        fs::write(self.dir.join(name), text)?;
        Ok(())
    }

    fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        #[derive(Serialize)]
        struct Tagged<'a, T> {
            config_sha256: &'a str,
            data: &'a T,
        }
        let text = serde_json::to_string_pretty(&Tagged {
            config_sha256: &self.hash,
            data: value,
        })?;
        fs::write(self.dir.join(name), text + "\n")?;
        Ok(())
    }
}

/// Results of one command: named checks and whether they passed.
#[derive(Default)]
struct Checks {
    rows: Vec<(String, bool, String)>,
}

impl Checks {
    fn record(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.rows.push((name.into(), passed, detail.into()));
    }

    fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.1)
    }

    fn write(&self, art: &Artifacts, name: &str) -> Result<()> {
        let rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|(n, p, d)| vec![n.clone(), p.to_string(), d.replace(',', ";")])
            .collect();
        art.csv(name, &["check", "passed", "detail"], &rows)
    }
}

/// Parses arguments, runs the command and maps the outcome to an exit code.
#[must_use]
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(true) => 0,
        Ok(false) => {
            eprintln!("vicsek {}: one or more checks failed", cli.command.name());
            1
        }
        Err(e) => {
            eprintln!("vicsek {}: {e}", cli.command.name());
            2
        }
    }
}

/// Runs one command; `Ok(false)` means a check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_json(&fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if let Some(m) = cli.mode {
        cfg.mode = m;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    if let Some(t) = cli.threads.or(cfg.threads) {
        if t == 0 {
            return Err(config_error("threads", "must be at least 1"));
        }
        cfg.threads = Some(t);
    }
    let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let art = Artifacts::new(&out, cfg.hash())?;
    let command = cli.command;
    let work = || execute(command, &cfg, &art);
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::arg(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn execute(command: Command, cfg: &ExperimentConfig, art: &Artifacts) -> Result<bool> {
    let seq = cfg.sequence()?;
    let mut checks = Checks::default();
    match command {
        Command::Build => build(cfg, &seq, art, &mut checks)?,
        Command::Measure => measure(cfg, &seq, art, &mut checks)?,
        Command::Hausdorff => hausdorff(cfg, &seq, art, &mut checks)?,
        Command::Energy => energy(cfg, &hierarchy(cfg, &seq, cfg.depth)?, art, &mut checks)?,
        Command::EnergyMeasure => energy_measure(cfg, &hierarchy(cfg, &seq, cfg.depth)?, art, &mut checks)?,
        Command::Besov => besov(cfg, &hierarchy(cfg, &seq, cfg.vertex_level)?, art, &mut checks)?,
        Command::Bbm => bbm(cfg, &hierarchy(cfg, &seq, cfg.depth)?, art, &mut checks)?,
        Command::Resistance => resistance(cfg, &hierarchy(cfg, &seq, cfg.depth.min(2))?, art, &mut checks)?,
        Command::Selftest => selftest(cfg, &seq, art, &mut checks)?,
    }
    checks.write(art, &format!("{}_checks.csv", command.name()))?;
    Ok(checks.all_passed())
}

fn hierarchy(cfg: &ExperimentConfig, seq: &RatioSequence, depth: usize) -> Result<Hierarchy> {
    Hierarchy::build_with_budget(seq, depth, cfg.budget)
}

fn ramp(cfg: &ExperimentConfig) -> AffineFunction {
    AffineFunction::diagonal_ramp().in_mode(cfg.exact())
}

fn suite(cfg: &ExperimentConfig, h: &Hierarchy) -> Result<Vec<AffineFunction>> {
    let max_base = h.depth().min(3);
    Ok(seeded_suite(h, cfg.seed, cfg.suite_size, max_base)?
        .into_iter()
        .map(|u| u.in_mode(cfg.exact()))
        .collect())
}

fn s<T: ToString>(x: T) -> String {
    x.to_string()
}

fn build(cfg: &ExperimentConfig, seq: &RatioSequence, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let h = hierarchy(cfg, seq, cfg.depth)?;
    let mut rows = Vec::new();
    for n in 0..=cfg.depth {
        let level = h.level(n)?;
        let doc: serde_json::Value = serde_json::from_str(&level.to_json()?)?;
        art.json(&format!("level_{n}.json"), &doc)?;
        let inv = level.check_invariants();
        checks.record(format!("geometry level {n}"), inv.all_hold(), format!("{inv:?}"));
        rows.push(vec![
            s(n),
            s(level.vertex_count()),
            s(level.edge_count()),
            s(level.cell_count()),
            s(inv.connected),
            s(inv.edge_lengths_ok),
            s(inv.orientation_ok),
            s(inv.max_multiplicity),
            s(inv.all_hold()),
        ]);
    }
    art.csv(
        "invariants.csv",
        &["n", "vertices", "edges", "cells", "connected", "edge_lengths_ok", "orientation_ok", "max_multiplicity", "all_hold"],
        &rows,
    )
}

fn measure(cfg: &ExperimentConfig, seq: &RatioSequence, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let table = scale_table(seq, cfg.depth)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                s(r.n),
                s(r.rho.value.clone()),
                s(r.psi.value.clone()),
                s(r.phi.value.clone()),
                s(r.rho.ln),
                s(r.psi.ln),
                s(r.phi.ln),
            ]
        })
        .collect();
    art.csv("scale_table.csv", &["n", "rho", "psi", "phi", "ln_rho", "ln_psi", "ln_phi"], &rows)?;

    #[derive(Serialize)]
    struct Constants {
        derived: crate::measure::DerivedConstants,
        scaling_law: crate::measure::ScalingLaw,
    }
    let law = scaling_law(seq)?;
    art.json(
        "constants.json",
        &Constants {
            derived: derived_constants(seq)?,
            scaling_law: law,
        },
    )?;

    let mut additive = true;
    for k in 0..cfg.depth.min(5) {
        let count = seq.cell_count(k)?;
        let kids = seq.cell_count(k + 1)? / &count;
        let parent = mu_cell(seq, &Word::root())? / BigRational::from_integer(count);
        let child = BigRational::new(BigInt::from(1), seq.cell_count(k + 1)?) * BigRational::from_integer(kids);
        additive &= parent == child;
    }
    checks.record("child masses sum to parent", additive, format!("levels < {}", cfg.depth.min(5)));

    let mut law_rows = Vec::new();
    let mut law_ok = true;
    for i in 1..=10i64 {
        for j in 1..=5i64 {
            let small = rational(1, 3 * i + 1);
            let big = &small * rational(j + 1, 1);
            let ok = law.check(seq, &small, &big)?;
            law_ok &= ok;
            law_rows.push(vec![s(&small), s(&big), s(ok)]);
        }
    }
    art.csv("scaling_law.csv", &["r", "big_r", "holds"], &law_rows)?;
    checks.record("volume scaling law on a 50-point grid", law_ok, "");

    let mut rows = Vec::new();
    let mut doubling_ok = true;
    let centres = [(0i64, 0i64, 0usize), (1, 1, 0), (2, 2, 1), (1, -1, 1)];
    for (x, y, sc) in centres {
        let pt = LatticePoint::new(x, y, sc);
        for r in [rational(1, 1), rational(1, 2), rational(1, 3), rational(1, 5)] {
            let d = doubling_sample(seq, &pt, &r)?;
            doubling_ok &= d.holds();
            rows.push(vec![
                s(x),
                s(y),
                s(sc),
                s(&r),
                s(d.band),
                s(d.ball.lower.clone()),
                s(d.ball.upper.clone()),
                s(d.double_ball.upper.clone()),
                s(d.ratio_bound),
                s(d.theoretical),
                s(d.cover_ratio),
                s(d.holds()),
            ]);
        }
    }
    art.csv(
        "doubling.csv",
        &["x", "y", "scale", "r", "band", "lower", "upper", "double_upper", "ratio_bound", "theoretical", "cover_ratio", "holds"],
        &rows,
    )?;
    checks.record("doubling samples", doubling_ok, "");
    Ok(())
}

fn hausdorff(cfg: &ExperimentConfig, seq: &RatioSequence, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let hc = cfg
        .hausdorff
        .as_ref()
        .ok_or_else(|| config_error("hausdorff", "the hausdorff command needs a `hausdorff` section"))?;
    let prefix = seq.prefix(hc.prefix_length)?;
    let regime = Regime {
        liminf: hc.liminf,
        limsup: hc.limsup,
    };
    let rep = hausdorff_report(hc.a, hc.b, &prefix, hc.theta, regime)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| vec![s(r.n), s(r.ratio), s(r.theta), s(r.eta), s(r.ln_xi), s(r.ln_rho), s(r.ln_psi)])
        .collect();
    art.csv("hausdorff.csv", &["n", "ratio", "theta_n", "eta", "ln_xi", "ln_rho", "ln_psi"], &rows)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        a: u32,
        b: u32,
        theta: f64,
        alpha: f64,
        regime: Regime,
        measure: crate::hausdorff::MeasureClass,
        ahlfors_regular: bool,
        not_self_similar: Option<bool>,
        first_eta_violation: Option<usize>,
        note: &'a str,
    }
    let violation = (hc.theta == 1.0).then(|| first_balanced_eta_violation(&prefix, hc.a)).flatten();
    if hc.theta == 1.0 && matches!(cfg.ratios, RatioRule::ExampleSequence(..)) {
        checks.record(
            "eta_n >= (2/3) sqrt(n) on the prefix",
            violation.is_none(),
            format!("prefix length {}", hc.prefix_length),
        );
    }
    art.json(
        "hausdorff.json",
        &Summary {
            a: rep.a,
            b: rep.b,
            theta: rep.theta,
            alpha: rep.alpha,
            regime: rep.regime,
            measure: rep.measure,
            ahlfors_regular: rep.ahlfors_regular,
            not_self_similar: rep.not_self_similar,
            first_eta_violation: violation,
            note: rep.note,
        },
    )
}

fn energy(cfg: &ExperimentConfig, h: &Hierarchy, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let p = h.ratios().p().clone();
    let n = h.depth();
    let u = ramp(cfg);
    let report = energy_limit(&u, h, &p, n, cfg.exact())?;
    art.json("energy_report.json", &report)?;
    let target = 2f64.powf(1.0 - p.value());
    checks.record(
        "ramp energy equals 2^(1-p) at every level",
        report.energies.iter().all(|e| (e.to_f64() - target).abs() <= 1e-12 * target),
        s(report.limit.clone()),
    );

    let funcs = suite(cfg, h)?;
    let mut rows = Vec::new();
    let (mut monotone, mut plateau) = (true, true);
    for (i, f) in funcs.iter().enumerate() {
        let rep = energy_limit(f, h, &p, n, cfg.exact())?;
        monotone &= rep.monotone;
        plateau &= rep.plateau.is_some_and(|k| k <= f.base_level());
        for (k, e) in rep.energies.iter().enumerate() {
            rows.push(vec![s(i), s(f.base_level()), s(k), s(e.clone())]);
        }
        let g = gradient_field(f, h, n)?;
        let direct = discrete_energy(h.level(n)?, &f.evaluate_all(h, n)?, &p, None)?;
        let via = energy_of_gradient(&g, &p);
        checks.record(
            format!("gradient identity, function {i}"),
            direct == via || (!direct.is_exact() && direct.relative_gap(&via) <= 1e-12),
            "",
        );
    }
    art.csv("energies.csv", &["function", "base_level", "n", "energy"], &rows)?;
    checks.record("energies non-decreasing in n", monotone, "");
    checks.record("plateau from the base level", plateau, "");

    let maps = [Lipschitz::Abs, Lipschitz::PositivePart, Lipschitz::Clamp { lo: [-1, 2], hi: [1, 2] }];
    let mut rows = Vec::new();
    for (i, pair) in funcs.windows(2).enumerate() {
        let rep = structure_checks(h, &pair[0], &pair[1], &p, n, &maps, &Scalar::zero())?;
        checks.record(format!("structure checks, pair {i}"), rep.all_hold(), "");
        rows.push(vec![
            s(i),
            s(rep.product.holds),
            s(rep.contraction.iter().all(|c| c.check.holds)),
            s(rep.locality.separated),
            s(rep.locality.holds),
            s(rep.clarkson.residual),
            s(rep.clarkson.holds),
            s(rep.spectral_gap),
            s(rep.morrey.constant),
            s(rep.poincare),
        ]);
    }
    art.csv(
        "structure.csv",
        &["pair", "product", "contraction", "separated", "locality", "clarkson_residual", "clarkson", "spectral_gap", "morrey", "poincare"],
        &rows,
    )
}

fn energy_measure(cfg: &ExperimentConfig, h: &Hierarchy, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let p = h.ratios().p().clone();
    let u = ramp(cfg);
    let depth = h.depth().min(3);
    for k in 0..=depth {
        let g = gamma_cells(&u, h, &p, k)?;
        let rows = g
            .masses
            .iter()
            .enumerate()
            .map(|(w, m)| Ok(vec![Word::from_index(h.ratios(), k, w)?.to_string(), s(m.clone())]))
            .collect::<Result<Vec<_>>>()?;
        art.csv(&format!("gamma_level_{k}.csv"), &["word", "mass"], &rows)?;
        let word = word_energy_measure(&u, h, &p, k)?;
        checks.record(format!("refinement plateau at level {k}"), word.plateau_verified != Some(false), "");
    }
    let tol = if cfg.exact() { 0.0 } else { 1e-12 };
    let mut rows = Vec::new();
    let mut funcs = vec![u.clone()];
    funcs.extend(suite(cfg, h)?);
    for (i, f) in funcs.iter().enumerate() {
        let gap = coincidence_check(f, h, &p, depth)?;
        let total = gamma_cells(f, h, &p, 0)?.total;
        let e = discrete_energy(h.level(h.depth())?, &f.evaluate_all(h, h.depth().max(f.base_level()))?, &p, None)?;
        let total_ok = total == e || (!cfg.exact() && total.relative_gap(&e) <= 1e-12);
        checks.record(format!("coincidence and total mass, function {i}"), gap <= tol && total_ok, s(gap));
        rows.push(vec![s(i), s(gap), s(total)]);
    }
    art.csv("coincidence.csv", &["function", "max_relative_gap", "total"], &rows)?;

    let hist = pushforward_profile(&u, h, &p, 20)?;
    let rows: Vec<Vec<String>> = hist.bins.iter().map(|b| vec![s(b.left), s(b.right), s(b.mass)]).collect();
    art.csv("pushforward.csv", &["bin_left", "bin_right", "mass"], &rows)?;

    let chain = chain_rule_check(&u, &Square, h, &p, h.depth(), 1.min(h.depth()), 32)?;
    art.json("chain_rule.json", &chain)?;
    let linear = linear_chain_rule(&u, h, &p, &rational(-3, 2), &rational(1, 4), depth)?;
    checks.record("linear chain rule", linear, "");
    Ok(())
}

fn besov(cfg: &ExperimentConfig, h: &Hierarchy, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let seq = h.ratios();
    let (m, n) = (cfg.vertex_level, cfg.depth);
    let u = ramp(cfg);
    let mut band_rows = Vec::new();
    for (i, beta) in equivalence_betas(seq)?.into_iter().enumerate() {
        let prof = phi_profile(&u, h, beta, m, n)?;
        let rows: Vec<Vec<String>> = prof
            .rows
            .iter()
            .map(|r| {
                vec![
                    s(r.n),
                    s(r.vertex_level),
                    s(r.ball_energy),
                    s(r.proxy),
                    s(r.mean),
                    s(r.ball_mass_range.0),
                    s(r.ball_mass_range.1),
                    s(r.energy),
                ]
            })
            .collect();
        art.csv(
            &format!("profile_{i}.csv"),
            &["n", "vertex_level", "ball_energy", "proxy", "mean", "ball_mass_min", "ball_mass_max", "energy"],
            &rows,
        )?;
        let bands = equivalence_bands(&prof);
        band_rows.push(vec![
            s(beta),
            s(bands.proxy_band.0),
            s(bands.proxy_band.1),
            s(bands.energy_band.0),
            s(bands.energy_band.1),
            s(besov_seminorm(&prof, seq, Summability::Finite(prof.p))?),
            s(besov_seminorm(&prof, seq, Summability::Infinity)?),
        ]);
    }
    art.csv(
        "bands.csv",
        &["beta", "proxy_band_min", "proxy_band_max", "energy_band_min", "energy_band_max", "seminorm_q_p", "seminorm_q_inf"],
        &band_rows,
    )?;

    let sweep = critical_sweep(&u, h, &cfg.sweep_betas(), n)?;
    let mut rows = Vec::new();
    for row in &sweep {
        for (k, e) in row.energies.iter().enumerate() {
            rows.push(vec![s(row.beta), s(k), s(e), s(format!("{:?}", row.trend).to_lowercase())]);
        }
        let expected = if row.beta > cfg.beta_star {
            Trend::Divergent
        } else if row.beta < cfg.beta_star {
            Trend::Vanishing
        } else {
            Trend::Plateau
        };
        checks.record(format!("critical trend at beta = {}", row.beta), row.trend == expected, format!("{:?}", row.trend));
    }
    art.csv("sweep.csv", &["beta", "n", "energy", "trend"], &rows)?;

    let window = cfg.window();
    let mut rows = Vec::new();
    let mut funcs = vec![u];
    funcs.extend(suite(cfg, h)?.into_iter().take(5));
    for (i, f) in funcs.iter().enumerate() {
        let w = weak_monotonicity_report(f, h, m, n, window)?;
        rows.push(vec![s(i), s(w.sup), s(w.window_min), w.ratio.map_or_else(|| "degenerate".into(), s)]);
    }
    art.csv("weak_monotonicity.csv", &["function", "sup", "window_min", "ratio"], &rows)
}

fn bbm(cfg: &ExperimentConfig, h: &Hierarchy, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let curve = bbm_curve(&ramp(cfg), h, &cfg.epsilons, h.depth(), cfg.tail)?;
    let rows: Vec<Vec<String>> = curve
        .rows
        .iter()
        .map(|r| {
            vec![
                s(r.epsilon),
                s(r.beta),
                s(r.value),
                s(curve.limit_bracket.0),
                s(curve.limit_bracket.1),
                s(r.finite_bracket.0),
                s(r.finite_bracket.1),
                s(r.inside),
            ]
        })
        .collect();
    art.csv(
        "bbm.csv",
        &["epsilon", "beta", "value", "limit_lower", "limit_upper", "bracket_lower", "bracket_upper", "inside"],
        &rows,
    )?;
    checks.record("curve inside its brackets", curve.rows.iter().all(|r| r.inside), "");
    checks.record("curve monotone in epsilon", curve.monotone, "");
    Ok(())
}

fn resistance(_cfg: &ExperimentConfig, h: &Hierarchy, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let p = h.ratios().p().clone();
    let with_oracle = p.value() <= 8.0;
    for n in 0..=h.depth() {
        let table = resistance_table(h.level(n)?, &p, with_oracle, 2000)?;
        let rows: Vec<Vec<String>> = table
            .rows
            .iter()
            .map(|r| {
                vec![
                    s(r.a),
                    s(r.b),
                    s(r.geodesic.clone()),
                    s(r.euclidean),
                    s(r.resistance.clone()),
                    r.oracle.map_or_else(String::new, s),
                ]
            })
            .collect();
        art.csv(&format!("resistance_{n}.csv"), &["a", "b", "geodesic", "euclidean", "resistance", "oracle"], &rows)?;
        if let Some(gap) = table.oracle_gap {
            checks.record(format!("closed form vs solver at level {n}"), gap <= 1e-6, s(gap));
        }
        checks.record(
            format!("resistance constants at level {n}"),
            table.lower_constant > 0.0,
            format!("c = {}; C = {}", table.lower_constant, table.upper_constant),
        );
    }
    Ok(())
}

fn selftest(cfg: &ExperimentConfig, seq: &RatioSequence, art: &Artifacts, checks: &mut Checks) -> Result<()> {
    let h = hierarchy(cfg, seq, cfg.vertex_level)?;
    for n in 0..=cfg.depth {
        checks.record(format!("geometry level {n}"), h.level(n)?.check_invariants().all_hold(), "");
    }
    let mut sub = Checks::default();
    measure(cfg, seq, art, &mut sub)?;
    energy(cfg, &hierarchy(cfg, seq, cfg.depth)?, art, &mut sub)?;
    energy_measure(cfg, &hierarchy(cfg, seq, cfg.depth)?, art, &mut sub)?;
    resistance(cfg, &hierarchy(cfg, seq, cfg.depth.min(2))?, art, &mut sub)?;
    checks.rows.extend(sub.rows);

    let u = ramp(cfg);
    let mut equal = true;
    for m in 0..=cfg.vertex_level.min(3) {
        let vals = u.evaluate_all(&h, m)?;
        for n in 0..=m {
            equal &= ball_energy(&h, m, n, &vals)? == ball_energy_bruteforce(&h, m, n, &vals)?;
        }
    }
    checks.record("indexed ball sums equal the double loop", equal, "");

    let base = discrete_profiles(&u, &h, cfg.beta_star, cfg.depth, Tail::None)?;
    let mut identity = true;
    for beta in cfg.sweep_betas() {
        let prof = discrete_profiles(&u, &h, beta, cfg.depth, Tail::None)?;
        for (k, e) in prof.energies.iter().enumerate() {
            let ln_phi = crate::measure::scale_values(seq, k)?.phi.ln;
            identity &= *e == energy_factor(ln_phi, beta, cfg.beta_star) * base.energies[k];
        }
    }
    checks.record("scaling identity of E_n^beta", identity, "");
    besov(cfg, &h, art, checks)?;
    let weights = random_weights(cfg.seed, h.level(1)?.cell_count());
    let funcs = suite(cfg, &hierarchy(cfg, seq, cfg.depth)?)?;
    let hd = hierarchy(cfg, seq, cfg.depth)?;
    let mut triangle = true;
    for pair in funcs.windows(2) {
        triangle &= crate::energy_measure::triangle_check(&pair[0], &pair[1], &weights, &hd, seq.p(), 1)?.holds;
    }
    checks.record("weighted triangle inequality", triangle, "");
    if cfg.tail == Tail::Plateau {
        bbm(cfg, &hd, art, checks)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_errors() {
        let cfg = ExperimentConfig::from_json(r#"{"ratios": {"alternating": [3, 5]}, "depth": 2, "vertex_level": 4}"#).unwrap();
        assert_eq!(cfg.ratios, RatioRule::Alternating(3, 5));
        let err = ExperimentConfig::from_json(r#"{"ratio": {"constant": 3}}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "ratio"), "{err}");
        let err = ExperimentConfig::from_json(r#"{"p": 0.5}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "p"));
        let err = ExperimentConfig::from_json(r#"{"depth": 5, "vertex_level": 6}"#).unwrap_err();
        assert!(matches!(err, Error::Config { ref field, .. } if field == "vertex_level"));
    }

    #[test]
    fn hash_ignores_output_and_threads() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = Some("elsewhere".into());
        b.threads = Some(8);
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
    }
}
