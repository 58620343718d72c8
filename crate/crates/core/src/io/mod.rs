//! Problem files, run manifests and report emission.
//!
//! Every report embeds the [`RunManifest`] that produced it, including the
//! problem itself, so [`rerun`] can regenerate the report from the report
//! alone. JSON reports are `{"manifest": ..., "result": ...}`; CSV curves
//! carry the manifest as a leading comment line.

mod problem;

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use problem::{Problem, ProblemFile, SingleUserBlock, ROW_TOL};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::exponents::{scheme_exponents, ExponentResult, Scheme};
use crate::opt::SolverOptions;
use crate::prob::{InputDist, JointPmf};
use crate::regions::{
    bisect, hull_over_inputs, lapidoth_su_bound, linspace, region_curve, single_user_bound, HullOptions, InputFamily,
    LapidothBound, RegionCurve, RegionKind, RegionOptions, SuBound,
};
use crate::sim::{exact_bin_fail, exact_pe1_sup, exact_pe2_sup, simulate, EnsembleConfig, EnsembleScheme, SimOptions, SimReport, EXACT_CAP};

pub const TOOL: &str = "cogmac";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
/// First-line prefix of CSV outputs.
pub const CSV_PREFIX: &str = "# manifest: ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutFormat {
    Json,
    Csv,
}

/// Where input distributions come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase")]
pub enum DistSpec {
    /// `P` of the problem file, uniform when absent.
    File,
    /// The uniform input and `count - 1` random ones drawn from the seed.
    Sweep { count: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub starts: usize,
    pub max_iters: usize,
    pub tolerance: f64,
    pub bisect_tol: f64,
}

impl SolverSettings {
    /// Defaults of each command.
    pub fn for_command(cmd: &CommandSpec) -> Self {
        let s = SolverOptions::default();
        let r = RegionOptions::default();
        let starts = match cmd {
            CommandSpec::Exponent { .. } => s.starts,
            _ => r.solver.starts,
        };
        Self { starts, max_iters: s.max_iters, tolerance: s.tolerance, bisect_tol: r.bisect_tol }
    }

    pub fn solver(&self, seed: u64, exec: Exec) -> SolverOptions {
        SolverOptions { starts: self.starts, max_iters: self.max_iters, tolerance: self.tolerance, seed, exec }
    }

    pub fn region(&self, seed: u64, exec: Exec) -> RegionOptions {
        RegionOptions { solver: self.solver(seed, exec), bisect_tol: self.bisect_tol }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandSpec {
    Region {
        kind: RegionKind,
        dist: DistSpec,
        /// Number of `R1` samples on `[0, r1_max]`.
        grid: usize,
        r1_max: f64,
        format: OutFormat,
    },
    Exponent {
        r1: f64,
        r2: f64,
        scheme: Scheme,
    },
    Simulate {
        scheme: EnsembleScheme,
        n: u32,
        r1: f64,
        r2: f64,
        trials: u64,
        gamma: Option<f64>,
        exact: bool,
        /// When set, `r1` is replaced by `(1 + margin)` times the largest
        /// `R1` of the scheme's region at `r2`.
        outside: Option<f64>,
    },
    SuBound {
        dist: DistSpec,
        /// `R1` samples of the non-cognitive bound.
        points: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: CommandSpec,
    pub seed: u64,
    pub solver: SolverSettings,
    pub problem: ProblemFile,
    /// Recorded only on request; reruns copy it unchanged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_secs: Option<f64>,
}

impl RunManifest {
    pub fn new(command: CommandSpec, seed: u64, problem: ProblemFile) -> Self {
        let solver = SolverSettings::for_command(&command);
        Self { tool: TOOL.into(), version: VERSION.into(), command, seed, solver, problem, wall_clock_secs: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionReport {
    pub curve: RegionCurve,
    pub max_sum_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub scheme: Scheme,
    pub value: f64,
    /// `inside` when the scheme exponent is positive.
    pub verdict: String,
    pub exponents: ExponentResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactComparison {
    pub err1: Option<f64>,
    pub e2_event: Option<f64>,
    pub encode_fail: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutsideProbe {
    pub kind: RegionKind,
    pub margin: f64,
    /// Largest `R1` of the region at the requested `R2`.
    pub r1_limit: f64,
    pub r1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outside: Option<OutsideProbe>,
    pub report: SimReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact: Option<ExactComparison>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuRow {
    pub input: InputDist,
    pub cognitive: SuBound,
    pub lapidoth: LapidothBound,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuReport {
    pub rows: Vec<SuRow>,
    pub best_cognitive: f64,
    pub best_lapidoth: f64,
}

/// Output of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    /// File contents.
    pub text: String,
    /// Human-readable digest.
    pub summary: String,
    /// Some minimization did not converge.
    pub degraded: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    manifest: &'a RunManifest,
    result: &'a T,
}

#[derive(Deserialize)]
struct ManifestOnly {
    manifest: RunManifest,
}

fn json<T: Serialize>(manifest: &RunManifest, result: &T) -> String {
    let mut s = serde_json::to_string_pretty(&Envelope { manifest, result }).expect("reports serialize");
    s.push('\n');
    s
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.6}")).unwrap_or_else(|| "-".into())
}

fn default_input(p: &Problem) -> InputDist {
    p.input.clone().unwrap_or_else(|| InputDist::uniform(p.channel.dims))
}

/// Largest `R1` with `(R1, r2)` in the region of `kind` at `p`, to within
/// the bisection tolerance.
pub fn r1_limit(kind: RegionKind, p: &JointPmf, q: &[f64], r2: f64, opts: &RegionOptions) -> Result<f64> {
    let extent = region_curve(kind, p, q, &[0.0], opts)?.extent;
    if r2 <= 0.0 {
        return Ok(extent.max(0.0));
    }
    let ok = |r1: f64| -> Result<bool> {
        Ok(region_curve(kind, p, q, &[r1], opts)?.samples[0].max_r2.is_some_and(|m| m >= r2))
    };
    if extent < 0.0 || !ok(0.0)? {
        return Err(Error::InvalidArgument(format!("R2 = {r2} lies outside the region at every R1")));
    }
    bisect(0.0, extent, opts.bisect_tol, ok)
}

/// Runs the command recorded in `manifest`. With `timing`, the elapsed
/// wall-clock time replaces the recorded one.
pub fn execute(manifest: &RunManifest, exec: Exec, timing: bool) -> Result<Outcome> {
    let start = Instant::now();
    let problem = manifest.problem.resolve()?;
    let ch = &problem.channel;
    let seed = manifest.seed;
    let ropts = manifest.solver.region(seed, exec);
    let mut m = manifest.clone();
    let stamp = |m: &mut RunManifest| {
        if timing {
            m.wall_clock_secs = Some(start.elapsed().as_secs_f64());
        }
    };
    let mut summary = String::new();

    match &manifest.command {
        CommandSpec::Region { kind, dist, grid, r1_max, format } => {
            if *grid == 0 {
                return Err(Error::InvalidArgument("the R1 grid needs at least one point".into()));
            }
            if !(*r1_max >= 0.0) || !r1_max.is_finite() {
                return Err(Error::InvalidArgument("r1_max must be finite and nonnegative".into()));
            }
            let g = linspace(*r1_max, *grid);
            let curve = match dist {
                DistSpec::File => {
                    let p = JointPmf::from_input_channel(&default_input(&problem), ch)?;
                    region_curve(*kind, &p, &ch.q, &g, &ropts)?
                }
                DistSpec::Sweep { count } => {
                    let family = InputFamily::Dirichlet { count: *count, seed };
                    let h = HullOptions { region: ropts.clone(), seed, ..HullOptions::default() };
                    hull_over_inputs(*kind, ch, &family, &g, &h)?
                }
            };
            let r = RegionReport { max_sum_rate: curve.max_sum_rate(), curve };
            let _ = writeln!(
                summary,
                "{}: extent {:.5}, max sum rate {:.5}, {} samples{}",
                kind.name(),
                r.curve.extent,
                r.max_sum_rate,
                r.curve.samples.len(),
                if r.curve.degraded { " (degraded)" } else { "" }
            );
            stamp(&mut m);
            let text = match format {
                OutFormat::Json => json(&m, &r),
                OutFormat::Csv => {
                    let mut t = format!("{CSV_PREFIX}{}\nR1,R2max\n", serde_json::to_string(&m).expect("manifests serialize"));
                    for s in &r.curve.samples {
                        let _ = writeln!(t, "{},{}", s.r1, s.max_r2.map(|v| v.to_string()).unwrap_or_default());
                    }
                    t
                }
            };
            Ok(Outcome { text, summary, degraded: r.curve.degraded })
        }

        CommandSpec::Exponent { r1, r2, scheme } => {
            let p = JointPmf::from_input_channel(&default_input(&problem), ch)?;
            let e = scheme_exponents(&p, &ch.q, *r1, *r2, &ropts.solver)?;
            let value = e.scheme_value(*scheme);
            let verdict = if e.inside(*scheme) { "inside" } else { "outside" };
            let _ = writeln!(summary, "E2        {:.6}", e.e2.value);
            let _ = writeln!(summary, "E1(R1,R2) {:.6}", e.e1_r1r2.value);
            let _ = writeln!(summary, "E1(R1)    {:.6}", e.e1_r1.value);
            let _ = writeln!(summary, "E0b       {:.6}", e.e0b.value);
            let _ = writeln!(summary, "E0        {:.6}", e.e0);
            let _ = writeln!(summary, "E_sup     {:.6}", e.e_sup);
            let _ = writeln!(summary, "E_bin     {:.6}", e.e_bin);
            let _ = writeln!(summary, "{scheme:?} exponent {value:.6}: {verdict}{}", if e.degraded { " (degraded)" } else { "" });
            let degraded = e.degraded;
            let r = ExponentReport { scheme: *scheme, value, verdict: verdict.into(), exponents: e };
            stamp(&mut m);
            Ok(Outcome { text: json(&m, &r), summary, degraded })
        }

        CommandSpec::Simulate { scheme, n, r1, r2, trials, gamma, exact, outside } => {
            let input = default_input(&problem);
            let mut degraded = false;
            let probe = match outside {
                None => None,
                Some(margin) => {
                    if !(*margin > 0.0) {
                        return Err(Error::InvalidArgument("the outside margin must be positive".into()));
                    }
                    let kind = match scheme {
                        EnsembleScheme::Superposition => RegionKind::Sup,
                        EnsembleScheme::Binning => RegionKind::Bin,
                    };
                    let p = JointPmf::from_input_channel(&input, ch)?;
                    let lim = r1_limit(kind, &p, &ch.q, *r2, &ropts)?;
                    degraded |= region_curve(kind, &p, &ch.q, &[lim], &ropts)?.degraded;
                    Some(OutsideProbe { kind, margin: *margin, r1_limit: lim, r1: (1.0 + margin) * lim })
                }
            };
            let cfg = EnsembleConfig {
                scheme: *scheme,
                n: *n,
                r1: probe.as_ref().map_or(*r1, |p| p.r1),
                r2: *r2,
                gamma: *gamma,
                input,
                seed,
            };
            let rep = simulate(&cfg, ch, *trials, &SimOptions { exec, ..SimOptions::default() })?;
            let ex = if *exact { Some(exact_comparison(&cfg, ch, &rep)) } else { None };
            let line = |name: &str, est: &crate::sim::Estimate, ex: Option<f64>| {
                format!("{name:<12} mc {:.6} [{:.6}, {:.6}]  exact {}\n", est.rate, est.ci.0, est.ci.1, fmt_opt(ex))
            };
            let get = |f: fn(&ExactComparison) -> Option<f64>| ex.as_ref().and_then(f);
            summary += &line("E1", &rep.err1, get(|e| e.err1));
            summary += &line("E2", &rep.e2_event, get(|e| e.e2_event));
            if *scheme == EnsembleScheme::Binning {
                summary += &line("encode fail", &rep.encode_fail, get(|e| e.encode_fail));
            }
            summary += &format!("{:<12} mc {:.6} [{:.6}, {:.6}]\n", "total", rep.total.rate, rep.total.ci.0, rep.total.ci.1);
            if let Some(note) = ex.as_ref().and_then(|e| e.note.clone()) {
                let _ = writeln!(summary, "exact: {note}");
            }
            if let Some(p) = &probe {
                let _ = writeln!(
                    summary,
                    "R1 = {:.6} is {:.0}% beyond the {} region limit {:.6}; error frequency {:.4} \
                     (the ensemble error probability tends to one outside the region)",
                    p.r1,
                    100.0 * p.margin,
                    p.kind.name(),
                    p.r1_limit,
                    rep.total.rate
                );
            }
            let r = SimulateReport { outside: probe, report: rep, exact: ex };
            stamp(&mut m);
            Ok(Outcome { text: json(&m, &r), summary, degraded })
        }

        CommandSpec::SuBound { dist, points } => {
            let (su, phi) = problem
                .single_user
                .as_ref()
                .ok_or_else(|| Error::Schema("su-bound needs a single_user block".into()))?;
            let inputs = match dist {
                DistSpec::File => vec![default_input(&problem)],
                DistSpec::Sweep { count } => InputFamily::Dirichlet { count: *count, seed }.inputs(ch.dims, false)?,
            };
            let mut inner = ropts.clone();
            inner.solver.exec = Exec::Sequential;
            let rows: Vec<SuRow> = exec
                .map_slice(&inputs, |input| -> Result<SuRow> {
                    let cognitive = single_user_bound(su, phi, input, &inner.solver)?;
                    let lapidoth = lapidoth_su_bound(su, phi, &input.p1(), &input.p2(), *points, &inner)?;
                    Ok(SuRow { input: input.clone(), gap: cognitive.value - lapidoth.value, cognitive, lapidoth })
                })
                .into_iter()
                .collect::<Result<_>>()?;
            let best = |f: fn(&SuRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
            let r = SuReport { best_cognitive: best(|r| r.cognitive.value), best_lapidoth: best(|r| r.lapidoth.value), rows };
            let degraded = r.rows.iter().any(|x| x.cognitive.degraded || x.lapidoth.degraded);
            for (i, row) in r.rows.iter().enumerate() {
                let _ = writeln!(
                    summary,
                    "input {i}: cognitive {:.6}  non-cognitive {:.6}  gap {:+.6}",
                    row.cognitive.value, row.lapidoth.value, row.gap
                );
            }
            let _ = writeln!(summary, "best: cognitive {:.6}  non-cognitive {:.6}", r.best_cognitive, r.best_lapidoth);
            stamp(&mut m);
            Ok(Outcome { text: json(&m, &r), summary, degraded })
        }
    }
}

fn exact_comparison(cfg: &EnsembleConfig, ch: &crate::prob::ChannelSpec, rep: &SimReport) -> ExactComparison {
    let c = &rep.type_counts;
    let mut out = ExactComparison { err1: None, e2_event: None, encode_fail: None, note: None };
    let mut notes = Vec::new();
    match cfg.scheme {
        EnsembleScheme::Superposition => {
            match exact_pe1_sup(ch, c, rep.m1, rep.m2, EXACT_CAP) {
                Ok(v) => out.err1 = Some(v),
                Err(e) => notes.push(e.to_string()),
            }
            match exact_pe2_sup(ch, c, rep.m2, EXACT_CAP) {
                Ok(v) => out.e2_event = Some(v),
                Err(e) => notes.push(e.to_string()),
            }
        }
        EnsembleScheme::Binning => match cfg.gamma_value().and_then(|g| exact_bin_fail(&ch.dims, c, g)) {
            Ok(v) => {
                out.encode_fail = Some(v);
                notes.push("decoding events have no exact oracle under binning".into());
            }
            Err(e) => notes.push(e.to_string()),
        },
    }
    notes.dedup();
    if !notes.is_empty() {
        out.note = Some(notes.join("; "));
    }
    out
}

/// Extracts the manifest from a JSON report or a CSV curve.
pub fn manifest_from_output(text: &str) -> Result<RunManifest> {
    if let Some(rest) = text.strip_prefix(CSV_PREFIX) {
        let line = rest.lines().next().unwrap_or_default();
        return serde_json::from_str(line).map_err(|e| Error::Schema(format!("manifest line: {e}")));
    }
    serde_json::from_str::<ManifestOnly>(text)
        .map(|m| m.manifest)
        .map_err(|e| Error::Schema(format!("report: {e}")))
}

/// Regenerates a report from the manifest it embeds.
pub fn rerun(text: &str, exec: Exec) -> Result<Outcome> {
    execute(&manifest_from_output(text)?, exec, false)
}
