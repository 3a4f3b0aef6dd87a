use std::fs;
use std::io::Read;
use std::path::Path;

use kronmle::closedform::{classify_2x2, TwoByTwoCase};
use kronmle::flipflop::{TheorySource, TheoryVerdict};
use kronmle::io::SampleFile;
use kronmle::minrank::{self, SValue, SValueReport};
use kronmle::montecarlo::{self, SimulationReport};
use kronmle::pencil::{self, DEFAULT_CANONICAL_TOL};
use kronmle::spd::matrix_rows;
use kronmle::thresholds::{self, Threshold, ThresholdReport};
use kronmle::{fit, DataSample64, FitReport64, FitStatus, FlipFlopConfig64, Init, KronError};
use serde_json::{json, Value};

use crate::args::{
    FitArgs, Format, InputArgs, McArgs, McThresholdArgs, MinrankArgs, S2Args, SampleArgs,
    ThresholdArgs,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_NO_MLE: u8 = 2;
pub const EXIT_MAX_ITER: u8 = 3;

/// What a command prints on stdout and how the process exits.
pub struct Output {
    pub stdout: String,
    pub code: u8,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output {
            stdout,
            code: EXIT_OK,
        }
    }

    fn json(value: &Value, code: u8) -> Self {
        Output {
            stdout: format!("{value}\n"),
            code,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn input(kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INPUT,
            kind,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message}).to_string()
    }
}

impl From<KronError> for CliError {
    fn from(e: KronError) -> Self {
        let kind = match &e {
            KronError::DimensionMismatch(_) => "DimensionMismatch",
            KronError::NotSpd(_) => "NotSpd",
            KronError::InvalidSample(_) => "InvalidSample",
            KronError::DegenerateSample => "DegenerateSample",
            KronError::SingularTransform(_) => "SingularTransform",
            KronError::StepIllDefined(_) => "StepIllDefined",
            KronError::NonGenericPencil(_) => "NonGenericPencil",
            KronError::RepeatedEigenvalues { .. } => "RepeatedEigenvalues",
            KronError::OutOfRegime(_) => "OutOfRegime",
            KronError::InvalidArgument(_) => "InvalidArgument",
            _ => "Internal",
        };
        // An ill-defined step means the sample is too small for the likelihood to be bounded.
        let code = if kind == "StepIllDefined" {
            EXIT_NO_MLE
        } else {
            EXIT_INPUT
        };
        CliError {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

type CmdResult = Result<Output, CliError>;

fn read_sample(path: &Path) -> Result<DataSample64, CliError> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin()
            .read_to_string(&mut s)
            .map_err(|e| CliError::input("Io", format!("stdin: {e}")))?;
        s
    } else {
        fs::read_to_string(path)
            .map_err(|e| CliError::input("Io", format!("{}: {e}", path.display())))?
    };
    Ok(SampleFile::from_json(&text)?.to_sample()?)
}

fn two_samples(sample: &DataSample64) -> Result<(), CliError> {
    if sample.n() != 2 {
        return Err(CliError::input(
            "InvalidSample",
            format!("expected n = 2 observations, got {}", sample.n()),
        ));
    }
    Ok(())
}

fn threshold_json(t: Threshold) -> Value {
    match t {
        Threshold::Exact(v) => json!(v),
        Threshold::Bounds { lo, hi } => json!({"lo": lo, "hi": hi}),
    }
}

fn threshold_report_json(r: &ThresholdReport) -> Value {
    json!({
        "m1": r.m1,
        "m2": r.m2,
        "n_u": threshold_json(r.n_u),
        "n_e": threshold_json(r.n_e),
        "n_b": threshold_json(r.n_b),
        "source": r.source.name(),
        "mean_adjusted": r.mean_adjusted,
    })
}

fn svalue_json(v: &SValue) -> Value {
    match v {
        SValue::Exact(v) => json!(v),
        SValue::ConditionalOnEigenvalues {
            real_case,
            complex_case,
        } => {
            json!({"real_case": real_case, "complex_case": complex_case})
        }
    }
}

fn svalue_report_json(r: &SValueReport) -> Value {
    json!({
        "m1": r.m1,
        "m2": r.m2,
        "n": r.n,
        "value": svalue_json(&r.value),
        "minimizing_k": r.minimizing_k,
        "verdict": r.verdict.label(),
        "complex_verdict": r.complex_verdict.map(|v| v.label()),
    })
}

fn theory_json(t: &TheoryVerdict) -> Value {
    let source = match &t.source {
        TheorySource::TwoSamples(r) => {
            json!({"kind": "TwoSamples", "report": svalue_report_json(r)})
        }
        TheorySource::ColumnsTwo(r) => {
            json!({"kind": "ColumnsTwo", "report": svalue_report_json(r)})
        }
        TheorySource::Thresholds(r) => {
            json!({"kind": "Thresholds", "report": threshold_report_json(r)})
        }
    };
    json!({"bounded": t.bounded, "unique": t.unique, "source": source})
}

fn fit_report_json(sample: &DataSample64, r: &FitReport64) -> Value {
    json!({
        "m1": sample.m1(),
        "m2": sample.m2(),
        "n": sample.n(),
        "status": r.status.name(),
        "iterations": r.iterations,
        "g": r.g_trace.last(),
        "psi1": r.estimate.psi1.to_rows(),
        "psi2": r.estimate.psi2.to_rows(),
        "dispersion": r.dispersion,
        "terminated_by_step_failure": r.terminated_by_step_failure,
        "theory": r.theory.as_ref().map(theory_json),
    })
}

fn trace_csv(r: &FitReport64) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| CliError::input("Io", e.to_string());
    w.write_record(["iteration", "g", "delta"]).map_err(io)?;
    for (i, g) in r.g_trace.iter().enumerate() {
        let delta = if i == 0 {
            String::new()
        } else {
            r.delta_trace[i - 1].to_string()
        };
        w.write_record([i.to_string(), g.to_string(), delta])
            .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::input("Io", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of numbers is UTF-8"))
}

pub fn fit_cmd(args: &FitArgs) -> CmdResult {
    let sample = read_sample(&args.input.input)?;
    let config = FlipFlopConfig64 {
        max_iterations: args.max_iter,
        rel_tol: args.tol,
        param_tol: args.tol,
        restarts: args.restarts,
        init: args.seed.map_or(Init::Identity, Init::RandomSpd),
        ..Default::default()
    };
    let report = fit(&sample, &config)?;
    let trace = trace_csv(&report)?;
    if let Some(path) = &args.trace {
        fs::write(path, &trace)
            .map_err(|e| CliError::input("Io", format!("{}: {e}", path.display())))?;
    }
    let code = match report.status {
        FitStatus::UniqueMax | FitStatus::NonUniqueMax => EXIT_OK,
        FitStatus::Diverged => EXIT_NO_MLE,
        FitStatus::MaxIterations => EXIT_MAX_ITER,
    };
    match args.format {
        Format::Json => Ok(Output::json(&fit_report_json(&sample, &report), code)),
        Format::Csv => Ok(Output {
            stdout: trace,
            code,
        }),
    }
}

pub fn threshold_cmd(args: &ThresholdArgs) -> CmdResult {
    if let Some(n) = args.table {
        if n == 0 {
            return Err(CliError::input(
                "InvalidArgument",
                "--table must be positive",
            ));
        }
        return Ok(Output::ok(thresholds::table1_csv(n, args.mean_unknown)?));
    }
    let (m1, m2) = (args.m1.unwrap_or(0), args.m2.unwrap_or(0));
    let report = thresholds::thresholds(m1, m2, args.mean_unknown)?;
    Ok(Output::json(&threshold_report_json(&report), EXIT_OK))
}

pub fn s2_cmd(args: &S2Args) -> CmdResult {
    if let Some(n) = args.table {
        return Ok(Output::ok(minrank::table2_csv(n)?));
    }
    let report = minrank::s2(args.m1.unwrap_or(0), args.m2.unwrap_or(0))?;
    Ok(Output::json(&svalue_report_json(&report), EXIT_OK))
}

pub fn minrank_cmd(args: &MinrankArgs) -> CmdResult {
    let cert = minrank::r2(args.m1, args.m2, args.k)?;
    let mut out = json!({
        "m1": cert.m1,
        "m2": cert.m2,
        "k": cert.k,
        "r": cert.r,
        "a1": cert.a1,
        "b1": cert.b1,
        "a": cert.a,
        "b": cert.b,
        "witness": cert.witness,
        "verified_rank": cert.verified_rank,
    });
    if let Some(path) = &args.input {
        let sample = read_sample(path)?;
        two_samples(&sample)?;
        if (sample.m1(), sample.m2()) != (args.m1, args.m2) {
            return Err(CliError::input(
                "DimensionMismatch",
                format!(
                    "sample is {}x{}, flags give {}x{}",
                    sample.m1(),
                    sample.m2(),
                    args.m1,
                    args.m2
                ),
            ));
        }
        let found = minrank::numeric_min_rank_search(&sample, args.k, args.restarts, args.seed)?;
        out["numeric_rank"] = json!(found);
    }
    Ok(Output::json(&out, EXIT_OK))
}

pub fn canonical_cmd(args: &InputArgs) -> CmdResult {
    let sample = read_sample(&args.input)?;
    two_samples(&sample)?;
    let ys = sample.matrices();
    let c = pencil::canonicalize_pair(&ys[0], &ys[1], DEFAULT_CANONICAL_TOL)?;
    Ok(Output::json(
        &json!({
            "m1": sample.m1(),
            "m2": sample.m2(),
            "l": c.indices.l,
            "n_a": c.indices.n_a,
            "n_b": c.indices.n_b,
            "a": matrix_rows(&c.a),
            "b": matrix_rows(&c.b),
            "residual": c.residual,
        }),
        EXIT_OK,
    ))
}

pub fn classify2x2_cmd(args: &InputArgs) -> CmdResult {
    let sample = read_sample(&args.input)?;
    two_samples(&sample)?;
    if (sample.m1(), sample.m2()) != (2, 2) {
        return Err(CliError::input(
            "DimensionMismatch",
            "expected 2x2 observations",
        ));
    }
    let c = classify_2x2(&sample.matrices()[0], &sample.matrices()[1])?;
    let (case, code) = match c.case {
        TwoByTwoCase::RealDiagonalizable => ("RealDiagonalizable", EXIT_OK),
        TwoByTwoCase::RealDefective => ("RealDefective", EXIT_NO_MLE),
        TwoByTwoCase::Complex => ("Complex", EXIT_OK),
    };
    Ok(Output::json(
        &json!({
            "case": case,
            "w": matrix_rows(&c.w),
            "mle_psi2": c.mle_psi2.as_ref().map(|p| p.to_rows()),
            "infimum_g": c.infimum_g,
        }),
        code,
    ))
}

fn simulation_json(r: &SimulationReport) -> Value {
    json!({
        "trials": r.trials,
        "seed": r.seed,
        "counts": r.counts,
        "estimate": r.estimate,
        "stderr": r.stderr,
        "redraws": r.redraws,
    })
}

fn with_jobs<R: Send>(jobs: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::input(
            "InvalidArgument",
            "--jobs must be positive",
        )),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::input("InvalidArgument", e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

pub fn eig2x2_cmd(args: &McArgs) -> CmdResult {
    let report = with_jobs(args.jobs, || {
        montecarlo::prob_real_eigs_2x2(args.trials, args.seed)
    })??;
    Ok(Output::json(&simulation_json(&report), EXIT_OK))
}

pub fn mc_threshold_cmd(args: &McThresholdArgs) -> CmdResult {
    let config = FlipFlopConfig64 {
        max_iterations: args.max_iter,
        ..Default::default()
    };
    let report = with_jobs(args.jobs, || {
        montecarlo::empirical_threshold(args.m1, args.m2, args.n, args.trials, args.seed, &config)
    })??;
    let mut out = simulation_json(&report);
    out["m1"] = json!(args.m1);
    out["m2"] = json!(args.m2);
    out["n"] = json!(args.n);
    Ok(Output::json(&out, EXIT_OK))
}

pub fn sample_cmd(args: &SampleArgs) -> CmdResult {
    let sample: DataSample64 = if args.canonical {
        if args.n != 2 || args.m1 < args.m2 || args.m2 == 0 {
            return Err(CliError::input(
                "InvalidArgument",
                "--canonical needs n = 2 and m1 >= m2 >= 1",
            ));
        }
        let (y1, y2) = pencil::canonical_pair(args.m1, args.m2);
        DataSample64::with_dims(args.m1, args.m2, vec![y1, y2])?
    } else {
        let mut rng = montecarlo::trial_rng(args.seed, 0);
        montecarlo::standard_sample(args.m1, args.m2, args.n, &mut rng)?
    };
    Ok(Output::ok(format!(
        "{}\n",
        SampleFile::from_sample(&sample).to_json()
    )))
}
