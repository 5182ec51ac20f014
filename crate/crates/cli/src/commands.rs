//! The four subcommands: analyze, certify, constrained, and the bundled
//! reproduction suite.

use std::path::{Path, PathBuf};
use std::time::Instant;

use qcap_core::capacity::{
    bounds_report, constrained_ea, constrained_holevo, gibbs_state, max_delta, ConstraintSpec,
    OptimizerOptions,
};
use qcap_core::channels::KrausChannel;
use qcap_core::petz::{equality_certificate, EqualityVerdict, Verdict};

use crate::report::{
    BoundsSection, CapacityOut, CapacitySection, ChannelSummary, CheckOut, ConstrainedOut,
    ConstrainedSection, GibbsOut, ReportFile, VerdictSection,
};
use crate::spec::{
    build_channel, build_constraint, load_spec, CatalogSpec, ChannelSpecFile, ConstraintBlock,
};
use crate::{Failure, RunArgs, SuiteArgs};

fn options_from(seed: u64, restarts: Option<usize>, tol: Option<f64>) -> OptimizerOptions {
    let mut opts = OptimizerOptions::with_seed(seed);
    if let Some(r) = restarts {
        opts.restarts = r;
    }
    if let Some(t) = tol {
        opts.obj_tol = t;
    }
    opts
}

/// Write the report to `--out` (announcing the path on stdout) or print it.
fn emit(report: &ReportFile, out: Option<&Path>) -> Result<(), Failure> {
    let text = report.to_json();
    match out {
        Some(path) => {
            std::fs::write(path, &text)
                .map_err(|e| Failure::parse(format!("cannot write {}: {e}", path.display())))?;
            println!(
                "{} report written to {} (converged: {})",
                report.command,
                path.display(),
                report.converged
            );
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn analysis_sections(
    ch: &KrausChannel,
    opts: &OptimizerOptions,
) -> (CapacitySection, BoundsSection, bool) {
    let bounds = bounds_report(ch, opts);
    let noise = max_delta(ch, opts);
    let converged = bounds.holevo.converged
        && bounds.holevo_complement.converged
        && bounds.ea.converged
        && bounds.q1.converged
        && bounds.min_output.converged
        && noise.converged;
    let capacities = CapacitySection {
        holevo: CapacityOut::of(&bounds.holevo),
        holevo_complement: CapacityOut::of(&bounds.holevo_complement),
        ea: CapacityOut::of(&bounds.ea),
        q1: CapacityOut::of(&bounds.q1),
        min_output_entropy: CapacityOut::of(&bounds.min_output),
        max_delta: CapacityOut::of(&noise),
    };
    (capacities, BoundsSection::of(&bounds), converged)
}

fn base_report(
    command: &str,
    spec: ChannelSpecFile,
    ch: &KrausChannel,
    opts: &OptimizerOptions,
) -> ReportFile {
    ReportFile {
        command: command.to_string(),
        input: spec,
        seed: opts.seed,
        restarts: opts.restarts,
        obj_tol: opts.obj_tol,
        channel: ChannelSummary::of(ch),
        converged: true,
        capacities: None,
        bounds: None,
        verdict: None,
        constrained: None,
        checks: None,
        wall_clock_seconds: 0.0,
    }
}

pub fn cmd_analyze(args: &RunArgs) -> Result<u8, Failure> {
    let spec = load_spec(&args.spec)?;
    let ch = build_channel(&spec)?;
    let opts = options_from(args.seed, args.restarts, args.tol);
    let start = Instant::now();
    let (capacities, bounds, converged) = analysis_sections(&ch, &opts);
    let mut report = base_report("analyze", spec, &ch, &opts);
    report.converged = converged;
    report.capacities = Some(capacities);
    report.bounds = Some(bounds);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    emit(&report, args.out.as_deref())?;
    Ok(if converged { 0 } else { 4 })
}

pub fn cmd_certify(args: &RunArgs) -> Result<u8, Failure> {
    let spec = load_spec(&args.spec)?;
    let ch = build_channel(&spec)?;
    let opts = options_from(args.seed, args.restarts, args.tol);
    let start = Instant::now();
    let cert = equality_certificate(&ch, &opts).map_err(Failure::invariant)?;
    let (capacities, bounds, analysis_converged) = analysis_sections(&ch, &opts);
    let converged = analysis_converged
        && cert.holevo.converged
        && cert.assisted.converged
        && cert.essential.converged;
    let mut report = base_report("certify", spec, &ch, &opts);
    report.converged = converged;
    report.capacities = Some(capacities);
    report.bounds = Some(bounds);
    report.verdict = Some(VerdictSection::of(&cert));
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    emit(&report, args.out.as_deref())?;
    Ok(if converged { 0 } else { 4 })
}

fn constrained_section(
    ch: &KrausChannel,
    cons: &ConstraintSpec,
    level: f64,
    opts: &OptimizerOptions,
) -> Result<(ConstrainedSection, bool), Failure> {
    let map_err = |e: qcap_core::Error| match e {
        qcap_core::Error::Infeasible(_) => Failure::infeasible(e),
        other => Failure::invariant(other),
    };
    let holevo = constrained_holevo(ch, cons, opts).map_err(map_err)?;
    let ea = constrained_ea(ch, cons, opts).map_err(map_err)?;
    let gibbs = match gibbs_state(cons) {
        Ok(g) => {
            let expectation = cons.expectation(&g.state);
            Some(GibbsOut::of(&g, expectation))
        }
        Err(qcap_core::Error::DegenerateObservable) => None,
        Err(e) => return Err(Failure::invariant(e)),
    };
    let converged = holevo.capacity.converged && ea.capacity.converged;
    let section = ConstrainedSection {
        level,
        gap: ea.capacity.value - holevo.capacity.value,
        holevo: ConstrainedOut::of(&holevo),
        ea: ConstrainedOut::of(&ea),
        gibbs,
    };
    Ok((section, converged))
}

pub fn cmd_constrained(args: &RunArgs) -> Result<u8, Failure> {
    let spec = load_spec(&args.spec)?;
    let ch = build_channel(&spec)?;
    let block = spec
        .constraint
        .clone()
        .ok_or_else(|| Failure::parse("constrained command requires a constraint block"))?;
    let cons = build_constraint(&block, ch.dim_in())?;
    let opts = options_from(args.seed, args.restarts, args.tol);
    let start = Instant::now();
    let (section, converged) = constrained_section(&ch, &cons, block.h, &opts)?;
    let mut report = base_report("constrained", spec, &ch, &opts);
    report.converged = converged;
    report.constrained = Some(section);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    emit(&report, args.out.as_deref())?;
    Ok(if converged { 0 } else { 4 })
}

// ---------------------------------------------------------------------------
// Reproduction suite
// ---------------------------------------------------------------------------

fn catalog_spec(name: &str, params: &[(&str, serde_json::Value)]) -> ChannelSpecFile {
    let mut map = serde_json::Map::new();
    for (k, v) in params {
        map.insert((*k).to_string(), v.clone());
    }
    ChannelSpecFile {
        version: 1,
        kind: "catalog".to_string(),
        dim_in: None,
        dim_out: None,
        operators: None,
        choi: None,
        catalog: Some(CatalogSpec {
            name: name.to_string(),
            params: map,
        }),
        constraint: None,
    }
}

struct Checks(Vec<CheckOut>);

impl Checks {
    fn new() -> Self {
        Checks(Vec::new())
    }
    fn within(&mut self, label: &str, value: f64, target: f64, tol: f64) {
        self.0.push(CheckOut {
            label: format!("{label}: |{value:.9} - {target:.9}| <= {tol:.0e}"),
            value,
            pass: (value - target).abs() <= tol,
        });
    }
    fn at_least(&mut self, label: &str, value: f64, floor: f64) {
        self.0.push(CheckOut {
            label: format!("{label}: {value:.9} >= {floor}"),
            value,
            pass: value >= floor,
        });
    }
    fn at_most(&mut self, label: &str, value: f64, ceiling: f64) {
        self.0.push(CheckOut {
            label: format!("{label}: {value:.9} <= {ceiling:.0e}"),
            value,
            pass: value <= ceiling,
        });
    }
    fn holds(&mut self, label: &str, ok: bool) {
        self.0.push(CheckOut {
            label: label.to_string(),
            value: if ok { 1.0 } else { 0.0 },
            pass: ok,
        });
    }
}

fn certify_case(
    name: &str,
    spec: ChannelSpecFile,
    opts: &OptimizerOptions,
    judge: impl Fn(&EqualityVerdict, &mut Checks),
) -> Result<(ReportFile, bool), Failure> {
    let ch = build_channel(&spec)?;
    let start = Instant::now();
    let cert = equality_certificate(&ch, opts).map_err(Failure::invariant)?;
    let mut checks = Checks::new();
    judge(&cert, &mut checks);
    let pass = checks.0.iter().all(|c| c.pass);
    let mut report = base_report(&format!("paper-suite {name}"), spec, &ch, opts);
    report.converged = cert.holevo.converged && cert.assisted.converged;
    report.verdict = Some(VerdictSection::of(&cert));
    report.checks = Some(checks.0);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((report, pass))
}

fn constrained_case(
    name: &str,
    observable: &[&[f64]],
    level: f64,
    opts: &OptimizerOptions,
    judge: impl Fn(&ConstrainedSection, &mut Checks),
) -> Result<(ReportFile, bool), Failure> {
    let mut spec = catalog_spec("dephasing", &[("dim", serde_json::json!(2))]);
    spec.constraint = Some(ConstraintBlock {
        observable: observable
            .iter()
            .map(|row| row.iter().map(|&x| [x, 0.0]).collect())
            .collect(),
        h: level,
    });
    let ch = build_channel(&spec)?;
    let block = spec.constraint.clone().expect("constraint block just set");
    let cons = build_constraint(&block, ch.dim_in())?;
    let start = Instant::now();
    let (section, converged) = constrained_section(&ch, &cons, level, opts)?;
    let mut checks = Checks::new();
    judge(&section, &mut checks);
    let pass = checks.0.iter().all(|c| c.pass);
    let mut report = base_report(&format!("paper-suite {name}"), spec, &ch, opts);
    report.converged = converged;
    report.constrained = Some(section);
    report.checks = Some(checks.0);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((report, pass))
}

fn case_superdense(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    let spec = catalog_spec("noiseless", &[("dim", serde_json::json!(2))]);
    let ch = build_channel(&spec)?;
    let start = Instant::now();
    let (capacities, bounds, converged) = analysis_sections(&ch, opts);
    let mut checks = Checks::new();
    checks.within("unassisted capacity", capacities.holevo.value, 1.0, 1e-5);
    checks.within("assisted capacity", capacities.ea.value, 2.0, 1e-4);
    checks.within("noise parameter", capacities.max_delta.value, 1.0, 1e-3);
    let pass = checks.0.iter().all(|c| c.pass);
    let mut report = base_report("paper-suite superdense", spec, &ch, opts);
    report.converged = converged;
    report.capacities = Some(capacities);
    report.bounds = Some(bounds);
    report.checks = Some(checks.0);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((report, pass))
}

fn case_example1(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    certify_case("example1", catalog_spec("trine", &[]), opts, |cert, checks| {
        checks.within("assisted capacity", cert.assisted.value, 1.0, 1e-4);
        checks.holds("verdict is GAP", cert.verdict == Verdict::Gap);
        checks.holds("ensemble inversion fails", !cert.inversion.pass);
    })
}

fn case_example2(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    certify_case(
        "example2",
        catalog_spec("bsst_plus", &[]),
        opts,
        |cert, checks| {
            checks.within("unassisted capacity", cert.holevo.value, 2.0, 1e-3);
            checks.within("assisted capacity", cert.assisted.value, 2.0, 1e-3);
            checks.holds("verdict is EQUAL", cert.verdict == Verdict::Equal);
            checks.holds(
                "essential restriction is classical-quantum",
                cert.cq_structure.is_some(),
            );
            checks.holds(
                "essential subspace is four-dimensional",
                cert.essential.dimension == 4,
            );
        },
    )
}

fn case_example3_diagonal(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    constrained_case(
        "example3_diagonal",
        &[&[0.0, 0.0], &[0.0, 1.0]],
        0.3,
        opts,
        |section, checks| {
            let gibbs = section.gibbs.as_ref().expect("observable is not scalar");
            checks.at_most(
                "Gibbs level deviation",
                (gibbs.expectation - 0.3).abs(),
                1e-10,
            );
            checks.within(
                "constrained capacity vs Gibbs entropy",
                section.holevo.value,
                gibbs.entropy,
                1e-4,
            );
            checks.within(
                "constrained assisted capacity vs Gibbs entropy",
                section.ea.value,
                gibbs.entropy,
                1e-4,
            );
            checks.at_most("assisted gap", section.gap.abs(), 1e-4);
        },
    )
}

fn case_example3_rotated(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    constrained_case(
        "example3_rotated",
        &[&[0.5, -0.5], &[-0.5, 0.5]],
        0.3,
        opts,
        |section, checks| {
            checks.at_least("assisted gap", section.gap, 0.01);
        },
    )
}

fn case_example3_inactive(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    constrained_case(
        "example3_inactive",
        &[&[0.0, 0.0], &[0.0, 1.0]],
        0.6,
        opts,
        |section, checks| {
            checks.holds(
                "constraint marked inactive",
                !section.holevo.constraint_active,
            );
            let gibbs = section.gibbs.as_ref().expect("observable is not scalar");
            checks.holds("Gibbs constraint inactive", !gibbs.constraint_active);
            checks.within(
                "capacity reaches the unconstrained value",
                section.holevo.value,
                1.0,
                1e-4,
            );
        },
    )
}

fn case_dephasing4(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    certify_case(
        "dephasing4",
        catalog_spec("dephasing", &[("dim", serde_json::json!(4))]),
        opts,
        |cert, checks| {
            checks.holds("verdict is EQUAL", cert.verdict == Verdict::Equal);
            checks.within("unassisted capacity", cert.holevo.value, 2.0, 1e-3);
        },
    )
}

fn case_depolarizing_zero(opts: &OptimizerOptions) -> Result<(ReportFile, bool), Failure> {
    let spec = catalog_spec("completely_depolarizing", &[("dim", serde_json::json!(2))]);
    let ch = build_channel(&spec)?;
    let start = Instant::now();
    let noise = max_delta(&ch, opts);
    let mut checks = Checks::new();
    checks.at_most("noise parameter", noise.value, 1e-4);
    let pass = checks.0.iter().all(|c| c.pass);
    let mut report = base_report("paper-suite depolarizing_zero", spec, &ch, opts);
    report.converged = noise.converged;
    report.capacities = None;
    report.checks = Some(checks.0);
    report.wall_clock_seconds = start.elapsed().as_secs_f64();
    Ok((report, pass))
}

type CaseFn = fn(&OptimizerOptions) -> Result<(ReportFile, bool), Failure>;

const CASES: &[(&str, CaseFn)] = &[
    ("superdense", case_superdense),
    ("example1", case_example1),
    ("example2", case_example2),
    ("example3_diagonal", case_example3_diagonal),
    ("example3_rotated", case_example3_rotated),
    ("example3_inactive", case_example3_inactive),
    ("dephasing4", case_dephasing4),
    ("depolarizing_zero", case_depolarizing_zero),
];

pub fn cmd_paper_suite(args: &SuiteArgs) -> Result<u8, Failure> {
    // Tight enough for every tolerance above at a desk-scale runtime.
    let opts = options_from(args.seed, args.restarts.or(Some(8)), args.tol);
    std::fs::create_dir_all(&args.out)
        .map_err(|e| Failure::parse(format!("cannot create {}: {e}", args.out.display())))?;

    let selected: Vec<&(&str, CaseFn)> = match &args.only {
        Some(only) => {
            let hits: Vec<_> = CASES
                .iter()
                .filter(|(name, _)| *name == only || name.starts_with(&format!("{only}_")))
                .collect();
            if hits.is_empty() {
                let names: Vec<&str> = CASES.iter().map(|(n, _)| *n).collect();
                return Err(Failure::parse(format!(
                    "no case named {only:?}; available: {}",
                    names.join(", ")
                )));
            }
            hits
        }
        None => CASES.iter().collect(),
    };

    let mut all_pass = true;
    println!("case                 status  seconds  report");
    for (name, run) in selected {
        let (report, pass) = run(&opts)?;
        let path: PathBuf = args.out.join(format!("{name}.json"));
        std::fs::write(&path, report.to_json())
            .map_err(|e| Failure::parse(format!("cannot write {}: {e}", path.display())))?;
        println!(
            "{name:<20} {}    {:>6.2}  {}",
            if pass { "PASS" } else { "FAIL" },
            report.wall_clock_seconds,
            path.display()
        );
        all_pass &= pass;
    }
    Ok(if all_pass { 0 } else { 1 })
}
