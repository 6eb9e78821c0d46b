//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test --test acceptance`. Set `VICSEK_RECORD=1` to print the
//! weak-monotonicity ratios instead of comparing them with the golden table.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;

use vicsek::affine::AffineFunction;
use vicsek::besov::{
    ball_energy, ball_energy_bruteforce, bbm_curve, critical_sweep, discrete_profiles, energy_factor,
    weak_monotonicity_report, Tail, Trend,
};
use vicsek::checks::{morrey_constant, structure_checks, Lipschitz};
use vicsek::energy::{discrete_energy, energy_limit, energy_of_gradient, gradient_field, not_above};
use vicsek::energy_measure::{chain_rule_check, coincidence_check, gamma_cells, linear_chain_rule, Square};
use vicsek::geometry::{Hierarchy, LatticePoint};
use vicsek::hausdorff::{dimension, first_balanced_eta_violation};
use vicsek::measure::{mu_ball_bounds, mu_cell, scale_values, scaling_law};
use vicsek::num::{rational, Exponent, NodeValues, Scalar};
use vicsek::ratios::{RatioRule, RatioSequence, Word};
use vicsek::resistance::{resistance, resistance_table};
use vicsek::rng::seeded_suite;

const FLOAT_RELATIVE: f64 = 1e-12;
const RESISTANCE_AGREEMENT: f64 = 1e-6;
const CHAIN_RULE_DEVIATION: f64 = 0.01;
const BBM_SERIES_VS_CLOSED_FORM: f64 = 1e-9;
const BBM_LIMIT_DISTANCE: f64 = 0.025;
const DIMENSION_TOLERANCE: f64 = 1e-12;
const GOLDEN_TOLERANCE: f64 = 1e-9;
const MORREY_FACTOR: f64 = 2.0;

const SUITE_SEED: u64 = 20_240_601;

/// Weak-monotonicity ratios at m = 7, N = 5, window [3, 5] for the seeded suite
/// on constant(3), p = 2, recorded at the first oracle run.
const WEAK_MONOTONICITY_GOLDEN: &[f64] = &[
    1.0207883016610955,
    5.314252130698733,
    1.061679896146666,
    5.444302508497528,
    1.0521094291313413,
    1.461587238224477,
    5.824317649645322,
    1.1177302273596261,
];
const WEAK_MONOTONICITY_SUITE: usize = 8;

type Outcome = Result<(bool, String), String>;

fn seq(rule: RatioRule, p: f64) -> RatioSequence {
    RatioSequence::new(rule, Exponent::new(p).unwrap(), 1.0).unwrap()
}

fn tested_sequences() -> Vec<(&'static str, RatioRule)> {
    vec![
        ("(3)", RatioRule::Constant(3)),
        ("(5)", RatioRule::Constant(5)),
        ("(3,5,...)", RatioRule::Alternating(3, 5)),
        ("(3,3,5)", RatioRule::List(vec![3, 3, 5])),
    ]
}

fn depth_for(s: &RatioSequence, want: usize) -> usize {
    s.max_depth().map_or(want, |d| d.min(want))
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

fn geometry() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut worst = String::new();
    for (name, rule) in tested_sequences() {
        let s = seq(rule, 2.0);
        let h = Hierarchy::build(&s, depth_for(&s, 5)).map_err(e)?;
        for n in 0..=h.depth() {
            let level = h.level(n).map_err(e)?;
            let words = level.cell_count();
            let inv = level.check_invariants();
            let counts = level.vertex_count() == 4 * words + 1 && level.edge_count() == 4 * words;
            let squared = level.edges().iter().all(|ed| {
                let [ax, ay] = level.coords()[ed.tail as usize];
                let [bx, by] = level.coords()[ed.head as usize];
                (ax - bx).pow(2) + (ay - by).pow(2) == 2
            });
            if !(counts && squared && inv.all_hold()) {
                ok = false;
                worst = format!("{name} level {n}: {inv:?}");
            }
        }
    }
    let t = start.elapsed();
    Ok((ok && t < Duration::from_secs(10), format!("{t:.2?} {worst}")))
}

fn measure() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    for (name, rule) in tested_sequences() {
        let s = seq(rule, 2.0);
        let depth = depth_for(&s, 5);
        let mut frontier = vec![Word::root()];
        for _ in 0..depth.min(4) {
            let mut next = Vec::new();
            for w in &frontier {
                let kids = w.children(&s, w.level() + 1).map_err(e)?;
                let total = kids
                    .iter()
                    .map(|k| mu_cell(&s, k))
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(e)?
                    .into_iter()
                    .fold(BigRational::from_integer(BigInt::from(0)), |a, b| a + b);
                if total != mu_cell(&s, w).map_err(e)? {
                    ok = false;
                    eprintln!("mass additivity fails for {name} at {w}");
                }
                next.extend(kids);
            }
            // Descend along a few words only; the masses depend on the level alone.
            next.truncate(3);
            frontier = next;
        }
        for k in 0..depth {
            let parent = BigRational::new(BigInt::from(1), s.cell_count(k).map_err(e)?);
            let per = s.cell_count(k + 1).map_err(e)? / s.cell_count(k).map_err(e)?;
            let child = BigRational::new(per, s.cell_count(k + 1).map_err(e)?);
            ok &= parent == child;
        }
    }

    let s = seq(RatioRule::Alternating(3, 5), 2.0);
    let law = scaling_law(&s).map_err(e)?;
    let mut grid = 0;
    for i in 1..=10i64 {
        for j in 1..=5i64 {
            let small = rational(1, 3 * i + 1);
            let big = &small * rational(j + 1, 1);
            ok &= law.check(&s, &small, &big).map_err(e)?;
            grid += 1;
        }
    }

    let mut nested = 0;
    for (x, y, sc) in [(0i64, 0i64, 0usize), (1, 1, 0), (2, 0, 1), (3, 1, 1)] {
        let c = LatticePoint::new(x, y, sc);
        for r in [rational(1, 1), rational(2, 5), rational(1, 7)] {
            let mut prev: Option<(Scalar, Scalar)> = None;
            for d in 1..=4 {
                let b = mu_ball_bounds(&s, &c, &r, d).map_err(e)?;
                if let Some((lo, hi)) = &prev {
                    let inside = not_above(lo, &b.lower) && not_above(&b.upper, hi) && not_above(&b.lower, &b.upper);
                    ok &= inside;
                    nested += 1;
                }
                prev = Some((b.lower, b.upper));
            }
        }
    }
    let t = start.elapsed();
    Ok((
        ok && grid == 50 && t < Duration::from_secs(10),
        format!("{t:.2?}, {grid} grid points, {nested} refinements"),
    ))
}

fn hausdorff() -> Outcome {
    let start = Instant::now();
    let s = seq(RatioRule::ExampleSequence(3, 5), 2.0);
    let prefix = s.prefix(1_000_000).map_err(e)?;
    let violation = first_balanced_eta_violation(&prefix, 3);
    let alpha = dimension(3, 5, 1.0);
    let oracle = 45f64.ln() / 15f64.ln();
    let t = start.elapsed();
    Ok((
        violation.is_none() && (alpha - oracle).abs() <= DIMENSION_TOLERANCE && t < Duration::from_secs(5),
        format!("{t:.2?}, first violation {violation:?}, alpha = {alpha}"),
    ))
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let s = seq(RatioRule::Constant(3), 2.0);
    let h = Hierarchy::build(&s, 6).map_err(e)?;
    let suite = seeded_suite(&h, SUITE_SEED, 200, 3).map_err(e)?;
    let mut ok = true;
    let mut checked = 0;
    for (p, exact) in [(1.5, false), (2.0, true), (3.0, true)] {
        let p = Exponent::new(p).map_err(e)?;
        for u in &suite {
            let rep = energy_limit(u, &h, &p, 6, exact).map_err(e)?;
            ok &= rep.exact == exact;
            for w in rep.energies.windows(2) {
                ok &= match (&w[0], &w[1]) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => a <= b,
                    (a, b) => a.to_f64() <= b.to_f64() * (1.0 + FLOAT_RELATIVE),
                };
            }
            let base = &rep.energies[u.base_level()];
            for later in &rep.energies[u.base_level()..] {
                ok &= match (base, later) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => a == b,
                    (a, b) => a.relative_gap(b) <= FLOAT_RELATIVE,
                };
            }
            checked += 1;
        }
    }
    let t = start.elapsed();
    Ok((ok && t < Duration::from_secs(60), format!("{t:.2?}, {checked} reports")))
}

fn ramp_golden() -> Outcome {
    let mut ok = true;
    let mut cases = 0;
    for p in [2.0, 3.0] {
        let pe = Exponent::new(p).map_err(e)?;
        let want = Scalar::Exact(BigRational::new(BigInt::from(1), BigInt::from(2).pow(p as u32 - 1)));
        for (name, rule) in tested_sequences() {
            let s = seq(rule, p);
            let h = Hierarchy::build(&s, depth_for(&s, 6)).map_err(e)?;
            let u = AffineFunction::diagonal_ramp();
            for n in 0..=h.depth() {
                let level = h.level(n).map_err(e)?;
                let direct = discrete_energy(level, &u.evaluate_all(&h, n).map_err(e)?, &pe, None).map_err(e)?;
                let via = energy_of_gradient(&gradient_field(&u, &h, n).map_err(e)?, &pe);
                if direct != want || via != want {
                    ok = false;
                    eprintln!("ramp {name} p={p} level {n}: {direct} / {via}");
                }
                cases += 1;
            }
        }
    }
    // Non-integer p: the sum is evaluated in floating point.
    let pe = Exponent::ratio(3, 2).map_err(e)?;
    let h = Hierarchy::build(&seq(RatioRule::Constant(3), 1.5), 6).map_err(e)?;
    let want = 2f64.powf(-0.5);
    for n in 0..=6 {
        let got = discrete_energy(h.level(n).map_err(e)?, &AffineFunction::diagonal_ramp().evaluate_all(&h, n).map_err(e)?, &pe, None)
            .map_err(e)?
            .to_f64();
        ok &= (got - want).abs() <= FLOAT_RELATIVE * want;
        cases += 1;
    }
    Ok((ok, format!("{cases} level/sequence/p cases")))
}

fn resistance_check() -> Outcome {
    let mut ok = true;
    let mut worst = 0.0f64;
    let s = seq(RatioRule::Constant(3), 2.0);
    let h = Hierarchy::build(&s, 2).map_err(e)?;
    for p in [Exponent::ratio(3, 2).map_err(e)?, Exponent::new(2.0).map_err(e)?, Exponent::new(3.0).map_err(e)?] {
        for n in 0..=2 {
            let table = resistance_table(h.level(n).map_err(e)?, &p, true, 2000).map_err(e)?;
            let gap = table.oracle_gap.unwrap_or(f64::INFINITY);
            worst = worst.max(gap);
            ok &= gap <= RESISTANCE_AGREEMENT;
        }
    }
    let level = h.level(0).map_err(e)?;
    let q1 = level.vertex_id([1, 1]).ok_or("q1 missing")? as usize;
    let q3 = level.vertex_id([-1, -1]).ok_or("q3 missing")? as usize;
    let r = resistance(level, q1, q3, &Exponent::new(2.0).map_err(e)?).map_err(e)?;
    let two = Scalar::Exact(rational(2, 1));
    Ok((ok && r == two, format!("worst relative gap {worst:.2e}, R_2(q1,q3) = {r}")))
}

fn energy_measure() -> Outcome {
    let mut ok = true;
    let p = Exponent::new(2.0).map_err(e)?;
    let s = seq(RatioRule::Constant(3), 2.0);
    let h = Hierarchy::build(&s, 4).map_err(e)?;
    let u = AffineFunction::diagonal_ramp();
    let mut funcs = vec![u.clone()];
    funcs.extend(seeded_suite(&h, SUITE_SEED, 10, 3).map_err(e)?);
    let mut worst = 0.0f64;
    for f in &funcs {
        let fine = gamma_cells(f, &h, &p, 3).map_err(e)?;
        let top = h.depth();
        let energy = discrete_energy(h.level(top).map_err(e)?, &f.evaluate_all(&h, top).map_err(e)?, &p, None).map_err(e)?;
        ok &= fine.total == energy;
        for k in 0..=3 {
            ok &= fine.coarsen(&h, k).map_err(e)? == gamma_cells(f, &h, &p, k).map_err(e)?;
        }
        let gap = coincidence_check(f, &h, &p, 3).map_err(e)?;
        worst = worst.max(gap);
        ok &= gap == 0.0;
    }
    let level1 = gamma_cells(&u, &h, &p, 1).map_err(e)?;
    let mut masses: Vec<BigRational> = level1.masses.iter().map(|m| m.exact().cloned().unwrap()).collect();
    masses.sort();
    masses.reverse();
    let sixth = rational(1, 6);
    let zero = rational(0, 1);
    let want = [sixth.clone(), sixth.clone(), sixth, zero.clone(), zero];
    ok &= masses == want;
    Ok((ok, format!("max coincidence gap {worst}, level-1 masses {}", level1.masses.iter().map(e).collect::<Vec<_>>().join(" "))))
}

fn chain_rule() -> Outcome {
    let p = Exponent::new(2.0).map_err(e)?;
    let h = Hierarchy::build(&seq(RatioRule::Constant(3), 2.0), 6).map_err(e)?;
    let u = AffineFunction::diagonal_ramp();
    let rep = chain_rule_check(&u, &Square, &h, &p, 6, 0, 32).map_err(e)?;
    let mut linear = true;
    for (a, b) in [(rational(-3, 2), rational(1, 4)), (rational(2, 1), rational(0, 1)), (rational(1, 3), rational(-5, 1))] {
        for f in [u.clone(), AffineFunction::corner_indicator()] {
            linear &= linear_chain_rule(&f, &h, &p, &a, &b, 3).map_err(e)?;
        }
    }
    Ok((
        rep.total_deviation <= CHAIN_RULE_DEVIATION && linear,
        format!("total deviation {:.3e}", rep.total_deviation),
    ))
}

fn ball_oracle() -> Outcome {
    let mut ok = true;
    let mut cases = 0;
    for rule in [RatioRule::Constant(3), RatioRule::Alternating(3, 5)] {
        let s = seq(rule, 2.0);
        let h = Hierarchy::build(&s, 3).map_err(e)?;
        let mut funcs = vec![AffineFunction::diagonal_ramp(), AffineFunction::corner_indicator()];
        funcs.extend(seeded_suite(&h, SUITE_SEED, 4, 2).map_err(e)?);
        for u in &funcs {
            for mode in [true, false] {
                let u = u.in_mode(mode);
                for m in u.base_level()..=3 {
                    let vals = u.evaluate_all(&h, m).map_err(e)?;
                    for n in 0..=m {
                        let fast = ball_energy(&h, m, n, &vals).map_err(e)?;
                        let slow = ball_energy_bruteforce(&h, m, n, &vals).map_err(e)?;
                        ok &= fast == slow;
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok((ok, format!("{cases} (m, n) cases")))
}

fn scaling_identity() -> Outcome {
    let s = seq(RatioRule::Alternating(3, 5), 2.0);
    let h = Hierarchy::build(&s, 5).map_err(e)?;
    let u = AffineFunction::diagonal_ramp();
    let base = discrete_profiles(&u, &h, 1.0, 5, Tail::None).map_err(e)?;
    let mut ok = true;
    for beta in [0.5, 0.8, 0.9, 0.99, 1.0, 1.01, 1.2, 1.5] {
        let prof = discrete_profiles(&u, &h, beta, 5, Tail::None).map_err(e)?;
        for (n, got) in prof.energies.iter().enumerate() {
            let ln_phi = scale_values(&s, n).map_err(e)?.phi.ln;
            let want = energy_factor(ln_phi, beta, 1.0) * base.energies[n];
            ok &= got.to_bits() == want.to_bits();
        }
    }
    let sweep = critical_sweep(&u, &h, &[1.2, 1.0, 0.8], 5).map_err(e)?;
    let trends: Vec<Trend> = sweep.iter().map(|r| r.trend).collect();
    ok &= trends == [Trend::Divergent, Trend::Plateau, Trend::Vanishing];
    Ok((ok, format!("trends {trends:?}")))
}

fn bbm() -> Outcome {
    let start = Instant::now();
    let h = Hierarchy::build(&seq(RatioRule::Constant(3), 2.0), 4).map_err(e)?;
    let epsilons = [0.2, 0.1, 0.05, 0.02, 0.01];
    let curve = bbm_curve(&AffineFunction::diagonal_ramp(), &h, &epsilons, 4, Tail::Plateau).map_err(e)?;
    let closed = |eps: f64| eps * 2f64.powf(eps - 1.0) / (1.0 - 15f64.powf(-eps));
    let limit = 0.5 / 15f64.ln();
    let at = curve.rows.iter().find(|r| r.epsilon == 0.01).ok_or("no row at 0.01")?;
    let mut ok = (at.value - closed(0.01)).abs() <= BBM_SERIES_VS_CLOSED_FORM;
    ok &= (at.value - limit).abs() <= BBM_LIMIT_DISTANCE * limit;
    for r in &curve.rows {
        ok &= (r.value - closed(r.epsilon)).abs() <= BBM_SERIES_VS_CLOSED_FORM;
    }
    let values: Vec<f64> = curve.rows.iter().map(|r| r.value).collect();
    ok &= values.windows(2).all(|w| w[1] < w[0]) && values.iter().all(|&v| v > limit);
    let t = start.elapsed();
    Ok((
        ok && t < Duration::from_secs(5),
        format!("{t:.2?}, value at 0.01 = {:.10}, closed form {:.10}, limit {:.6}", at.value, closed(0.01), limit),
    ))
}

fn weak_monotonicity() -> Outcome {
    let h = Hierarchy::build(&seq(RatioRule::Constant(3), 2.0), 7).map_err(e)?;
    let mut funcs = vec![AffineFunction::diagonal_ramp()];
    funcs.extend(seeded_suite(&h, SUITE_SEED, WEAK_MONOTONICITY_SUITE - 1, 3).map_err(e)?);
    let ratios = funcs
        .iter()
        .map(|u| weak_monotonicity_report(u, &h, 7, 5, (3, 5)).map(|w| w.ratio.unwrap_or(f64::NAN)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(e)?;
    if std::env::var_os("VICSEK_RECORD").is_some() {
        println!("weak monotonicity ratios: {ratios:?}");
    }
    let ok = ratios.len() == WEAK_MONOTONICITY_GOLDEN.len()
        && ratios
            .iter()
            .zip(WEAK_MONOTONICITY_GOLDEN)
            .all(|(a, b)| (a - b).abs() <= GOLDEN_TOLERANCE * b.abs().max(1.0));
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    Ok((ok, format!("{} functions, band [{lo:.6}, {hi:.6}]", ratios.len())))
}

fn structure() -> Outcome {
    let h = Hierarchy::build(&seq(RatioRule::Constant(3), 2.0), 6).map_err(e)?;
    let suite = seeded_suite(&h, SUITE_SEED, 12, 3).map_err(e)?;
    let maps = [Lipschitz::Abs, Lipschitz::PositivePart, Lipschitz::Clamp { lo: [-1, 2], hi: [1, 2] }];
    let mut ok = true;
    let mut separated = 0;
    let mut worst_morrey = 1.0f64;
    for p in [Exponent::ratio(3, 2).map_err(e)?, Exponent::new(2.0).map_err(e)?, Exponent::new(3.0).map_err(e)?] {
        for pair in suite.windows(2) {
            let rep = structure_checks(&h, &pair[0], &pair[1], &p, 4, &maps, &Scalar::zero()).map_err(e)?;
            ok &= rep.all_hold();
        }
        // Bumps at opposite corners of the level-1 graph; the second is lifted by 3.
        let a = corner_bump(&h, [3, 3], 0)?;
        let b = corner_bump(&h, [-3, -3], 3)?;
        let rep = structure_checks(&h, &a, &b, &p, 2, &maps, &Scalar::Exact(rational(3, 1))).map_err(e)?;
        if rep.locality.separated {
            separated += 1;
            ok &= rep.locality.additive;
        }
        for u in suite.iter().take(4) {
            let m = |n: usize| -> Result<f64, String> {
                let level = h.level(n).map_err(e)?;
                let vals = u.evaluate_all(&h, n).map_err(e)?.to_f64_vec();
                let energy = discrete_energy(level, &u.evaluate_all(&h, n).map_err(e)?, &p, None).map_err(e)?.to_f64();
                Ok(morrey_constant(level, &vals, p.value(), energy).constant)
            };
            let ratio = m(6)? / m(4)?;
            worst_morrey = worst_morrey.max(ratio.max(1.0 / ratio));
        }
    }
    ok &= worst_morrey <= MORREY_FACTOR;
    Ok((ok && separated > 0, format!("{separated} separated pairs, worst Morrey ratio {worst_morrey:.4}")))
}

fn corner_bump(h: &Hierarchy, corner: [i64; 2], lift: i64) -> Result<AffineFunction, String> {
    let level = h.level(1).map_err(e)?;
    let v = level.vertex_id(corner).ok_or("corner missing")? as usize;
    let mut values = vec![lift; level.vertex_count()];
    values[v] += 1;
    AffineFunction::new(h, 1, NodeValues::from_integers(&values, 1)).map_err(e)
}

fn read_tree(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap());
    }
    out
}

fn determinism() -> Outcome {
    let root = tempfile::tempdir().map_err(e)?;
    let mut trees = Vec::new();
    for threads in [1, 4, 8] {
        let out = root.path().join(format!("t{threads}"));
        let status = Command::new(env!("CARGO_BIN_EXE_vicsek"))
            .args(["selftest", "--threads", &threads.to_string(), "--out"])
            .arg(&out)
            .status()
            .map_err(e)?;
        if !status.success() {
            return Ok((false, format!("selftest exited with {status} on {threads} threads")));
        }
        trees.push(read_tree(&out));
    }
    let same = trees.windows(2).all(|w| w[0] == w[1]);
    Ok((same, format!("{} artifacts", trees[0].len())))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 14] = [
        ("geometry invariants", geometry),
        ("measure additivity, scaling law, nested ball bounds", measure),
        ("deviation bound and dimension of the example sequence", hausdorff),
        ("energy monotonicity and plateau", monotonicity),
        ("diagonal ramp energy and gradient identity", ramp_golden),
        ("resistance closed form against the solver", resistance_check),
        ("energy measure totals, additivity, coincidence", energy_measure),
        ("chain rule", chain_rule),
        ("indexed ball sums against the double loop", ball_oracle),
        ("scaling identity and critical sweep", scaling_identity),
        ("BBM curve", bbm),
        ("weak monotonicity golden band", weak_monotonicity),
        ("structure checks and Morrey stability", structure),
        ("selftest artifacts independent of thread count", determinism),
    ];
    let only: Option<usize> = std::env::var("VICSEK_CRITERION").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let (passed, detail) = match run() {
            Ok(r) => r,
            Err(msg) => (false, format!("error: {msg}")),
        };
        println!("{} {:>2} {name}: {detail}", if passed { "PASS" } else { "FAIL" }, i + 1);
        if !passed {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
