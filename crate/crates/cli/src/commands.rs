use std::fmt::Write as _;
use std::fs::File;
use std::io::BufReader;

use hk_core::chamber::{
    admissible_witnesses_line_case, alpha_critical_values, classify_extension, enumerate_walls, strata_diagram,
    DivisorData,
};
use hk_core::stability::{
    cohomology_to_surjective, convert_params, surjective_to_cohomology, theta_swap_identity, verdict_all_viewpoints,
    theta, AlphaParam, BundleInvariant, BundlePair, Status, Verdict, ViewpointParams, WitnessKind,
};
use hk_core::torus::snapshot::{read_field, write_exponent, write_field};
use hk_core::torus::{dbar, dbar_adj, Complex64, FormType, TorusGrid, TwistedField, Weights};
use hk_core::vortex::{
    assemble_rank2, q_diagnostic, solve as run_flow, stability_certificate, sweep as run_sweep, Outcome, PhiSeed,
    ProblemSpec,
};
use hk_core::{int, rat, Rational};

use crate::config::{Config, Seed};
use crate::error::CliError;
use crate::{Completion, Output};

/// Tolerance for negative slack in the certificates.
const CERTIFICATE_TOLERANCE: f64 = 1e-6;

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn line_pair(cfg: &Config) -> BundlePair {
    BundlePair::lines(cfg.extension.d1 as i128, cfg.extension.d2 as i128)
}

fn divisor(cfg: &Config) -> DivisorData {
    DivisorData::new(cfg.div())
}

fn witness_label(v: &Verdict) -> String {
    v.witness.map_or_else(|| "-".into(), |w| w.to_string())
}

fn theta_label(v: &Verdict) -> String {
    v.max_theta.map_or_else(|| "-".into(), |t| t.to_string())
}

fn csv_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\""))
}

fn problem(cfg: &Config, alpha: Rational) -> Result<ProblemSpec, CliError> {
    let grid = TorusGrid::new(cfg.grid.n)?;
    let seed = match &cfg.seed {
        Seed::CanonicalHarmonic => PhiSeed::CanonicalHarmonic,
        Seed::Zero => PhiSeed::Zero,
        Seed::File { path } => {
            let f = File::open(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
            PhiSeed::Field(read_field(BufReader::new(f))?)
        }
    };
    Ok(ProblemSpec::new(cfg.extension.d1, cfg.extension.d2, alpha, grid).with_seed(seed).with_flow(cfg.flow))
}

pub fn analyze(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let (d1, d2) = (cfg.extension.d1, cfg.extension.d2);
    let alpha = cfg.alpha()?;
    let pair = line_pair(cfg);
    let div = divisor(cfg);
    let witnesses = admissible_witnesses_line_case(d1, d2, &div)?;
    let v = verdict_all_viewpoints(alpha, &pair, &witnesses)?;
    let closed = classify_extension(d1, d2, &div, alpha)?;

    let rows = [
        ("extension", format!("alpha={} tau={}", v.params.alpha.alpha, v.params.alpha.tau), &v.extension),
        ("cohomology", v.params.cohomology.to_string(), &v.cohomology),
        ("surjective", v.params.surjective.to_string(), &v.surjective),
    ];
    println!("input: degrees ({d1}, {d2}), div = {}, alpha = {alpha}", cfg.div());
    println!("{:<12} {:<36} {:<20} {:<28} max theta", "viewpoint", "parameters", "status", "witness");
    let mut csv = String::from("viewpoint,parameters,status,witness,max_theta\n");
    for (name, params, verdict) in rows {
        println!(
            "{name:<12} {params:<36} {:<20} {:<28} {}",
            verdict.status.to_string(),
            witness_label(verdict),
            theta_label(verdict)
        );
        writeln!(
            csv,
            "{name},{},{},{},{}",
            csv_quote(&params),
            verdict.status,
            csv_quote(&witness_label(verdict)),
            theta_label(verdict)
        )
        .unwrap();
    }
    let stratum = closed.stratum.map_or_else(|| "on a critical value or outside".into(), |k| format!("Ext_{k}"));
    println!("closed form: {} ({stratum})", closed.verdict.status);
    if v.extension.status == Status::StrictlySemistable {
        println!("note: alpha is a boundary value; the extension is strictly semistable");
    }
    if v.extension.zero_weight || v.cohomology.zero_weight || v.surjective.zero_weight {
        println!("note: a weight is zero at these parameters");
    }
    out.file("verdicts.csv", &csv)?;
    if !v.agree() {
        return Err(CliError::Check("the three viewpoints disagree".into()));
    }
    if closed.verdict.status != v.extension.status {
        return Err(CliError::Check(format!(
            "closed form says {} but the witness list says {}",
            closed.verdict.status, v.extension.status
        )));
    }
    Ok(Completion::Done)
}

pub fn walls(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let (d1, d2) = (cfg.extension.d1, cfg.extension.d2);
    let w = cfg.walls;
    let arr = enumerate_walls(d1, d2, w.r1, w.r2, w.degree_box)?;
    let pair = BundlePair::new(BundleInvariant::of(w.r1, d1 as i128), BundleInvariant::of(w.r2, d2 as i128));
    let live: Vec<_> = arr.walls.iter().filter(|x| !x.degenerate).collect();
    println!(
        "ranks ({}, {}), degrees ({d1}, {d2}): {} walls within degree box {} ({} degenerate)",
        w.r1,
        w.r2,
        live.len(),
        arr.degree_box,
        arr.walls.len() - live.len()
    );

    let mut csv = format!("# degree_box {}\nwitness,normal,degenerate,alpha_crossing\n", arr.degree_box);
    let mut crossings: Vec<Rational> = Vec::new();
    for wall in &arr.walls {
        let crossing = wall.alpha_crossing(&pair);
        if let (Some(a), false) = (crossing, wall.degenerate) {
            crossings.push(a);
        }
        let n = wall.normal;
        writeln!(
            csv,
            "{},\"{} {} {} {}\",{},{}",
            csv_quote(&wall.witness.to_string()),
            n[0],
            n[1],
            n[2],
            n[3],
            wall.degenerate,
            crossing.map_or_else(String::new, |a| a.to_string())
        )
        .unwrap();
    }
    crossings.sort();
    crossings.dedup();
    out.file("walls.csv", &csv)?;
    let mut dat = String::from("# alpha_crossing wall_count\n");
    for a in &crossings {
        let count = live.iter().filter(|x| x.alpha_crossing(&pair) == Some(*a)).count();
        writeln!(dat, "{} {count}", to_f64(*a)).unwrap();
    }
    out.file("wall_crossings.dat", &dat)?;

    if w.r1 == 1 && w.r2 == 1 && d1 < d2 {
        let crit = alpha_critical_values(d1, d2)?;
        let list: Vec<String> = crit.iter().map(|c| c.to_string()).collect();
        println!("critical alphas: {}", list.join(", "));
        let strata = strata_diagram(d1, d2)?;
        let chain: Vec<String> = strata
            .strata
            .iter()
            .map(|s| if s.nonempty { s.label() } else { format!("{} (empty)", s.label()) })
            .collect();
        println!("strata chain: {}", chain.join(" ⊇ "));
        let mut crit_dat = String::from("# alpha marker\n");
        for c in &crit {
            writeln!(crit_dat, "{} 0", to_f64(*c)).unwrap();
        }
        out.file("critical.dat", &crit_dat)?;
        // max theta over the admissible witnesses, piecewise linear in alpha
        let div = divisor(cfg);
        let (lo, hi) = (int((d1 - d2 - 1) as i128), int((d2 - d1 + 1) as i128));
        let mut prof = String::from("# alpha max_theta\n");
        let mut a = lo;
        while a <= hi {
            let c = classify_extension(d1, d2, &div, a)?;
            writeln!(prof, "{} {}", to_f64(a), to_f64(c.verdict.max_theta.unwrap_or_else(|| int(0)))).unwrap();
            a += rat(1, 8);
        }
        out.file("theta_profile.dat", &prof)?;
    }
    Ok(Completion::Done)
}

pub fn strata(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let (d1, d2) = (cfg.extension.d1, cfg.extension.d2);
    let diag = strata_diagram(d1, d2)?;
    let div = divisor(cfg);
    let crit: Vec<String> = diag.critical_values.iter().map(|c| c.to_string()).collect();
    println!("extension ({d1}, {d2}); critical alphas: {}", crit.join(", "));
    println!("{:<8} {:<12} {:<28} {:<9} div={}", "stratum", "interval", "aliases", "nonempty", cfg.div());
    let mut csv = String::from("stratum,lower,upper,aliases,nonempty,contains_configured\n");
    for s in &diag.strata {
        let aliases: Vec<String> = s.aliases.iter().map(|a| format!("{a:?}")).collect();
        let member = s.contains(d1, d2, &div);
        println!(
            "{:<8} {:<12} {:<28} {:<9} {}",
            s.label(),
            format!("({}, {})", s.interval.0, s.interval.1),
            aliases.join("/"),
            s.nonempty,
            member
        );
        writeln!(csv, "{},{},{},{},{},{member}", s.label(), s.interval.0, s.interval.1, aliases.join("/"), s.nonempty)
            .unwrap();
    }
    let chain: Vec<String> = diag.strata.iter().map(|s| s.label()).collect();
    println!("{}", chain.join(" ⊇ "));
    out.file("strata.csv", &csv)?;
    let mut dot = String::from("digraph strata {\n");
    for (sup, sub) in &diag.containments {
        writeln!(dot, "  \"Ext_{sup}\" -> \"Ext_{sub}\";").unwrap();
    }
    dot.push_str("}\n");
    out.file("strata.dot", &dot)?;
    Ok(Completion::Done)
}

pub fn solve(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let alpha = cfg.alpha()?;
    let spec = problem(cfg, alpha)?;
    let verdict = classify_extension(spec.d1, spec.d2, &divisor(cfg), alpha)?.verdict.status;
    let rep = run_flow(&spec)?;
    println!(
        "extension ({}, {}), alpha = {alpha}, N = {}: {} after {} iterations (verdict {verdict})",
        spec.d1,
        spec.d2,
        cfg.grid.n,
        rep.outcome.label(),
        rep.iterations
    );
    println!(
        "sup residual {:.3e}, L2 residual {:.3e}, max |∫ trace| {:.3e}, max |u1 - u2| {:.3}",
        rep.residual.sup_norm, rep.residual.l2_norm, rep.max_trace_integral, rep.max_log_weight
    );

    let mut csv = String::from("iteration,sup_residual,l2_residual,M,sup_s\n");
    for h in rep.history() {
        writeln!(csv, "{},{:?},{:?},{:?},{:?}", h.iteration, h.sup_residual, h.l2_residual, h.functional, h.sup_s)
            .unwrap();
    }
    out.file("history.csv", &csv)?;
    let st = &rep.state;
    out.file_with("u1.field", |b| Ok(write_exponent(b, &st.u1)?))?;
    out.file_with("u2.field", |b| Ok(write_exponent(b, &st.u2)?))?;
    out.file_with("phi.field", |b| Ok(write_field(b, &st.phi)?))?;

    if rep.outcome == Outcome::Converged {
        let witnesses = admissible_witnesses_line_case(spec.d1, spec.d2, &divisor(cfg))?;
        let certs = stability_certificate(st, &spec, &witnesses, CERTIFICATE_TOLERANCE)?;
        let mut ccsv = String::from("witness,theta,slack,identity_defect,residual_charge\n");
        for c in &certs {
            writeln!(
                ccsv,
                "{},{},{:?},{:?},{:?}",
                csv_quote(&c.witness.to_string()),
                c.theta,
                c.slack,
                c.identity_defect,
                c.residual_charge
            )
            .unwrap();
        }
        out.file("certificates.csv", &ccsv)?;
        let worst = certs.iter().map(|c| c.identity_defect.abs()).fold(0.0, f64::max);
        println!("certificates: {} witnesses, max |theta + slack| = {worst:.3e}", certs.len());
        let r2 = assemble_rank2(st, &spec)?;
        println!(
            "rank-2 metric: diagonal deviation ({:.3e}, {:.3e}), off-diagonal {:.3e}, degree {:.6}",
            r2.diagonal_deviation.0, r2.diagonal_deviation.1, r2.off_diagonal_deviation, r2.total_degree
        );
        out.file("rank2.json", &serde_json::to_string_pretty(&r2).map_err(|e| CliError::Manifest(e.to_string()))?)?;
    }
    Ok(match rep.outcome {
        Outcome::Indeterminate => Completion::Indeterminate,
        _ => Completion::Done,
    })
}

pub fn sweep(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let alphas = cfg.sweep_alphas()?;
    if alphas.is_empty() {
        return Err(CliError::Config("sweep needs [sweep] alphas or --alphas".into()));
    }
    let base = problem(cfg, alphas[0])?;
    let report = run_sweep(&base, &alphas, &divisor(cfg))?;
    println!(
        "{:<8} {:<14} {:<20} {:<6} {:>10} {:>12}",
        "alpha", "outcome", "verdict", "agree", "iterations", "sup_residual"
    );
    let mut csv = String::from(
        "alpha,outcome,verdict,agrees,iterations,sup_residual,max_trace_integral,functional_monotone,max_log_weight\n",
    );
    for r in &report.rows {
        println!(
            "{:<8} {:<14} {:<20} {:<6} {:>10} {:>12.3e}",
            r.alpha.to_string(),
            r.outcome.label(),
            r.verdict.to_string(),
            r.agrees,
            r.iterations,
            r.sup_residual
        );
        writeln!(
            csv,
            "{},{},{},{},{},{:?},{:?},{},{:?}",
            r.alpha,
            r.outcome.label(),
            r.verdict,
            r.agrees,
            r.iterations,
            r.sup_residual,
            r.max_trace_integral,
            r.functional_monotone,
            r.max_log_weight
        )
        .unwrap();
    }
    let agree = report.all_agree();
    let boundary = report.boundary_within_one_step();
    let undecided = report.indeterminate_count();
    let summary = format!(
        "all_agree {agree}\nboundary_within_one_step {boundary}\nindeterminate {undecided}\nmonotone {}\n",
        report.rows.iter().all(|r| r.functional_monotone)
    );
    print!("{summary}");
    out.file("sweep.csv", &csv)?;
    out.file("sweep_summary.txt", &summary)?;
    if !boundary {
        return Err(CliError::Check("flow outcome and verdict disagree away from a boundary".into()));
    }
    Ok(if undecided > 0 { Completion::Indeterminate } else { Completion::Done })
}

struct Suite {
    lines: Vec<String>,
    failures: usize,
}

impl Suite {
    fn check(&mut self, name: &str, ok: bool, detail: String) {
        let line = format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        println!("{line}");
        self.lines.push(line);
        if !ok {
            self.failures += 1;
        }
    }
}

/// Alphas exercised by the suite: critical values, interval midpoints, the
/// configured alpha, and quarter offsets around each critical value.
fn probe_alphas(cfg: &Config, crit: &[Rational]) -> Result<Vec<Rational>, CliError> {
    let mut a = vec![cfg.alpha()?];
    for &c in crit {
        a.extend([c, c - rat(1, 4), c + rat(1, 4), c + int(1)]);
    }
    a.sort();
    a.dedup();
    Ok(a)
}

pub fn verify(cfg: &Config, out: &Output) -> Result<Completion, CliError> {
    let (d1, d2) = (cfg.extension.d1, cfg.extension.d2);
    let pair = line_pair(cfg);
    let div = divisor(cfg);
    let witnesses = admissible_witnesses_line_case(d1, d2, &div)?;
    let crit = alpha_critical_values(d1, d2)?;
    let alphas = probe_alphas(cfg, &crit)?;
    let mut s = Suite { lines: Vec::new(), failures: 0 };

    // three viewpoints and the closed form agree
    let mut disagree = Vec::new();
    for &a in &alphas {
        let v = verdict_all_viewpoints(a, &pair, &witnesses)?;
        let c = classify_extension(d1, d2, &div, a)?;
        if !v.agree() || c.verdict.status != v.extension.status {
            disagree.push(a.to_string());
        }
    }
    s.check(
        "three-viewpoint agreement",
        disagree.is_empty(),
        format!("{} alphas, disagreements at [{}]", alphas.len(), disagree.join(", ")),
    );

    // parameter conversions are exact inverses and respect the constraint
    let mut bad = 0;
    for &a in &alphas {
        let all = convert_params(ViewpointParams::Extension { alpha: a }, &pair)?;
        let ok = surjective_to_cohomology(&all.surjective) == all.cohomology
            && cohomology_to_surjective(&all.cohomology) == all.surjective
            && all.cohomology.constraint_defect(&pair) == int(0)
            && AlphaParam::from_tuple(&all.cohomology)? == all.alpha;
        bad += usize::from(!ok);
    }
    s.check("conversion round trip", bad == 0, format!("{bad} failures over {} alphas", alphas.len()));

    // the witness swap preserves theta
    let mut bad = 0;
    for &a in &alphas {
        let p = AlphaParam::new(a, &pair).to_tuple();
        for w in &witnesses {
            let (l, r) = theta_swap_identity(&p, w);
            bad += usize::from(l != r);
        }
    }
    s.check("theta swap identity", bad == 0, format!("{bad} mismatches"));

    // every verdict change happens on a wall of the arrangement
    let arr = enumerate_walls(d1, d2, 1, 1, cfg.walls.degree_box.max(d1.abs().max(d2.abs())))?;
    let crossings: Vec<Rational> = arr.walls.iter().filter(|w| !w.degenerate).filter_map(|w| w.alpha_crossing(&pair)).collect();
    let off_wall: Vec<String> = alphas
        .iter()
        .filter(|a| classify_extension(d1, d2, &div, **a).is_ok_and(|c| c.verdict.status == Status::StrictlySemistable))
        .filter(|a| !crossings.contains(a))
        .map(|a| a.to_string())
        .collect();
    s.check("boundaries lie on walls", off_wall.is_empty(), format!("off-wall boundaries [{}]", off_wall.join(", ")));

    // strata form a descending chain whose endpoints are critical values
    let diag = strata_diagram(d1, d2)?;
    let chain_ok = diag.containments.iter().all(|(a, b)| b > a)
        && diag.strata.iter().filter(|st| st.nonempty).all(|st| crit.contains(&st.interval.0) && crit.contains(&st.interval.1));
    s.check("strata chain", chain_ok, format!("{} strata, {} containments", diag.strata.len(), diag.containments.len()));

    // Q is positive on stable parameters for a one-step filtration
    let grid = TorusGrid::new(cfg.grid.n)?;
    let mut q_bad = Vec::new();
    let mut q_checked = 0;
    for &a in &alphas {
        if classify_extension(d1, d2, &div, a)?.verdict.status != Status::Stable {
            continue;
        }
        let spec = ProblemSpec::new(d1, d2, a, grid).with_seed(PhiSeed::Zero);
        for w in witnesses.iter().filter(|w| !w.is_full(&pair)) {
            q_checked += 1;
            let q = q_diagnostic(&spec, std::slice::from_ref(w), &[int(1)], int(1))?;
            if q.q <= int(0) {
                q_bad.push(format!("{a}:{w}"));
            }
        }
    }
    s.check("Q positivity", q_bad.is_empty(), format!("{q_checked} cases, failures [{}]", q_bad.join(", ")));

    // discrete ∂̄ and its adjoint are adjoint
    let twist = d1 - d2;
    let x = TwistedField::from_fn(grid, twist, FormType::Function, |u, v| {
        Complex64::new((7.0 * u + 3.0 * v).sin(), (5.0 * u * v).cos())
    });
    let y = TwistedField::from_fn(grid, twist, FormType::ZeroOneForm, |u, v| {
        Complex64::new((2.0 * v - u).cos(), (11.0 * u).sin() * v)
    });
    let lhs = dbar(&x)?.inner(&y);
    let rhs = x.inner(&dbar_adj(&y, &Weights::flat(grid))?);
    let rel = (lhs - rhs).norm() / lhs.norm().max(1.0);
    s.check("dbar adjointness", rel < 1e-12, format!("relative defect {rel:.2e} at N = {}", cfg.grid.n));

    let full = pair.full(WitnessKind::Subextension);
    let full_theta = theta(&AlphaParam::new(cfg.alpha()?, &pair).to_tuple(), &full);
    s.check("full object on the constraint", full_theta == int(0), format!("theta = {full_theta}"));

    out.file("verify.txt", &(s.lines.join("\n") + "\n"))?;
    if s.failures > 0 {
        return Err(CliError::Check(format!("{} invariant checks failed", s.failures)));
    }
    Ok(Completion::Done)
}
