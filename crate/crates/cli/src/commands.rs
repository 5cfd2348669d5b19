use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::path::Path;

use paradis::linalg::kron_all;
use paradis::salpha::{
    build_reduced_system, conjectured_threshold, counterexample_check, solve_reduced,
    threshold_alpha, verify_closed_form, MAX_SCAN_N,
};
use paradis::{
    apply_parallel, channels_from_subspace, density_in_complement, discrimination_input, eigh,
    field_angle, hermitian_space_decision, hs_inner, onedim_witness, parallel_check,
    tensor_power_generators, CMat, CopyCount, FeasibilityOptions, FeasibilityOutcome,
    KrausChannel, OperatorSubspace, OutcomeKind,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::io::{generators, write_json, CliResult, Failure, Inputs, MatrixFile};
use crate::{Cli, Command, Format, Salpha};

/// Output overlaps at or below this count as orthogonal.
const ORTHOGONAL_TOL: f64 = 1e-8;
/// Half-width of the band around the conjectured threshold in which an
/// infeasible verdict is not trusted.
const BOUNDARY_BAND: f64 = 1e-6;
const MANIFEST: &str = "pair.json";

pub struct Output {
    pub outcome: Value,
    pub residuals: Value,
    pub indeterminate: bool,
    pub csv: Option<String>,
    pub digest: String,
}

impl Output {
    fn decided(inputs: Inputs, outcome: Value, residuals: Value) -> Self {
        Self {
            outcome,
            residuals,
            indeterminate: false,
            csv: None,
            digest: inputs.digest(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    dim_in: usize,
    dim_out: usize,
    e: Vec<String>,
    f: Vec<String>,
}

pub fn dispatch(cli: &Cli, seed: u64) -> CliResult<Output> {
    let opts = FeasibilityOptions {
        seed,
        ..FeasibilityOptions::default()
    };
    let angle = |a: f64| if cli.pi_units { a * PI } else { a };
    let mut inputs = Inputs::default();
    match &cli.command {
        Command::FieldAngle { matrix, tol } => {
            let a = inputs.matrix(matrix)?;
            let report = field_angle(&a, *tol)?;
            let mut outcome = serde_json::to_value(&report).expect("serializable");
            outcome["separating_arc"] = json!(report.separating_arc.map(|(lo, hi)| [lo, hi]));
            Ok(Output::decided(inputs, outcome, Value::Null))
        }
        Command::Onedim { matrix, copies } => {
            let a = inputs.matrix(matrix)?;
            onedim(inputs, &a, *copies)
        }
        Command::Hermitian(g) => {
            let (gens, d) = generators(&mut inputs, &g.generators)?;
            let s = OperatorSubspace::from_generators(&gens, d)?;
            let out = hermitian_space_decision(&s, &opts)?;
            let indeterminate = out.kind == OutcomeKind::Indeterminate;
            let (outcome, residuals) = feasibility_json(&out);
            let mut output = Output::decided(inputs, outcome, residuals);
            output.indeterminate = indeterminate;
            Ok(output)
        }
        Command::Check {
            generators: g,
            max_copies,
            witness_out,
        } => {
            if *max_copies == 0 {
                return Err(Failure::Usage("--max-copies must be at least 1".into()));
            }
            let (gens, d) = generators(&mut inputs, &g.generators)?;
            let s = OperatorSubspace::from_generators(&gens, d)?;
            let rows = parallel_check(&s, *max_copies, &opts)?;
            let found = rows.iter().find(|(_, o)| o.kind == OutcomeKind::Witness);
            if let (Some(path), Some((_, o))) = (witness_out, found) {
                let rho = o.witness.as_ref().expect("witness outcome carries a witness");
                write_json(path, &MatrixFile::from_cmat(rho))?;
            }
            let table: Vec<Value> = rows
                .iter()
                .map(|(n, o)| {
                    let (mut row, res) = feasibility_json(o);
                    if let Some(obj) = row.as_object_mut() {
                        obj.remove("witness");
                        obj.insert("copies".into(), json!(n));
                        obj.insert("residuals".into(), res);
                    }
                    row
                })
                .collect();
            let indeterminate =
                found.is_none() && rows.iter().any(|(_, o)| o.kind == OutcomeKind::Indeterminate);
            let outcome = json!({
                "dimension": d,
                "subspace_dim": s.dim(),
                "distinguishable_at": found.map(|(n, _)| *n),
                "rows": table,
            });
            let mut output = Output::decided(inputs, outcome, Value::Null);
            output.indeterminate = indeterminate;
            Ok(output)
        }
        Command::Synthesize { generators: g, out } => {
            let (gens, d) = generators(&mut inputs, &g.generators)?;
            let s = OperatorSubspace::from_generators(&gens, d)?;
            synthesize(inputs, &s, out)
        }
        Command::Simulate {
            pair,
            copies,
            witness,
        } => simulate(inputs, pair, *copies, witness.as_deref(), &opts),
        Command::Salpha(sub) => salpha(inputs, sub, &angle, &opts),
    }
}

fn witness_residuals(rho: &CMat) -> Value {
    let lambda_min = eigh(rho).map(|e| e.min()).unwrap_or(f64::NAN);
    json!({
        "lambda_min": lambda_min,
        "trace_error": (rho.trace().re - 1.0).abs(),
    })
}

fn onedim(inputs: Inputs, a: &CMat, copies: Option<usize>) -> CliResult<Output> {
    let report = field_angle(a, 1e-9)?;
    let optimal = match report.optimal_n {
        CopyCount::Never => {
            let outcome = json!({
                "optimal_n": report.optimal_n,
                "copies": copies,
                "witness": null,
            });
            return Ok(Output::decided(inputs, outcome, Value::Null));
        }
        CopyCount::Finite(k) => k,
    };
    let n = copies.unwrap_or(optimal);
    if n == 0 {
        return Err(Failure::Usage("--copies must be at least 1".into()));
    }
    if n < optimal {
        let outcome = json!({ "optimal_n": optimal, "copies": n, "witness": null });
        return Ok(Output::decided(inputs, outcome, Value::Null));
    }
    let rho = onedim_witness(a, n)?;
    let power = kron_all(std::iter::repeat(a).take(n)).expect("n ≥ 1");
    let mut residuals = witness_residuals(&rho);
    residuals["overlap"] = json!(hs_inner(&power, &rho)?.norm());
    let outcome = json!({
        "optimal_n": optimal,
        "copies": n,
        "theta": report.theta,
        "witness": MatrixFile::from_cmat(&rho),
    });
    Ok(Output::decided(inputs, outcome, residuals))
}

fn feasibility_json(out: &FeasibilityOutcome) -> (Value, Value) {
    let mut outcome = json!({ "kind": out.kind.as_str() });
    let mut residuals = Value::Null;
    if let (Some(rho), Some(res)) = (&out.witness, &out.residuals) {
        outcome["witness"] = json!(MatrixFile::from_cmat(rho));
        residuals = json!({
            "max_constraint": res.max_constraint,
            "lambda_min": res.lambda_min,
            "trace_error": res.trace_error,
        });
    }
    if let Some(c) = &out.certificate {
        outcome["certificate"] = json!({
            "coefficients": c.coefficients,
            "lambda_min": c.lambda_min,
            "combination": MatrixFile::from_cmat(&c.combination()),
        });
    }
    if let Some(g) = &out.gap {
        outcome["gap"] = json!({
            "projection_residual": g.projection_residual,
            "dual_best": g.dual_best,
            "iterations": g.iterations,
            "boundary": g.is_boundary(),
        });
    }
    (outcome, residuals)
}

fn synthesize(inputs: Inputs, s: &OperatorSubspace, dir: &Path) -> CliResult<Output> {
    let pair = channels_from_subspace(s)?;
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))?;
    let write = |prefix: &str, ch: &KrausChannel| -> CliResult<Vec<String>> {
        ch.kraus()
            .iter()
            .enumerate()
            .map(|(k, m)| {
                let name = format!("{prefix}_{k}.json");
                write_json(&dir.join(&name), &MatrixFile::from_cmat(m))?;
                Ok(name)
            })
            .collect()
    };
    let manifest = Manifest {
        dim_in: pair.e.dim_in(),
        dim_out: pair.e.dim_out(),
        e: write("E", &pair.e)?,
        f: write("F", &pair.f)?,
    };
    write_json(&dir.join(MANIFEST), &manifest)?;
    let back = OperatorSubspace::from_channel_pair(&pair.e, &pair.f)?;
    let outcome = json!({
        "dir": dir.display().to_string(),
        "manifest": MANIFEST,
        "dim_in": manifest.dim_in,
        "dim_out": manifest.dim_out,
        "kraus_count": manifest.e.len(),
        "scale_factors": pair.scale_factors,
    });
    let residuals = json!({
        "subspace_distance": back.distance(s),
        "completeness_e": pair.e.completeness_defect(),
        "completeness_f": pair.f.completeness_defect(),
    });
    Ok(Output::decided(inputs, outcome, residuals))
}

fn load_channel(inputs: &mut Inputs, dir: &Path, names: &[String]) -> CliResult<KrausChannel> {
    let kraus = names
        .iter()
        .map(|name| inputs.matrix(&dir.join(name)))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(KrausChannel::new(kraus)?)
}

fn simulate(
    mut inputs: Inputs,
    dir: &Path,
    n: usize,
    witness: Option<&Path>,
    opts: &FeasibilityOptions,
) -> CliResult<Output> {
    if n == 0 {
        return Err(Failure::Usage("--copies must be at least 1".into()));
    }
    let manifest_path = dir.join(MANIFEST);
    let manifest: Manifest = serde_json::from_value(inputs.json(&manifest_path)?)
        .map_err(|e| Failure::Input(format!("{}: {e}", manifest_path.display())))?;
    let e = load_channel(&mut inputs, dir, &manifest.e)?;
    let f = load_channel(&mut inputs, dir, &manifest.f)?;
    let s = OperatorSubspace::from_channel_pair(&e, &f)?;
    let d = s.dim_space();

    let (rho, source) = match witness {
        Some(path) => (inputs.matrix(path)?, "file"),
        None => {
            let found = if s.dim() == 1 {
                match onedim_witness(&s.basis()[0], n) {
                    Ok(rho) => Ok(rho),
                    Err(paradis::Error::NotDistinguishable | paradis::Error::InsufficientCopies { .. }) => {
                        Err(OutcomeKind::Certificate)
                    }
                    Err(other) => return Err(other.into()),
                }
            } else {
                let gens = tensor_power_generators(&s, n, paradis::subspace::DEFAULT_GENERATOR_CAP)?;
                let out = density_in_complement(&gens, opts)?;
                out.witness.ok_or(out.kind)
            };
            match found {
                Ok(rho) => (rho, "computed"),
                Err(kind) => {
                    let outcome = json!({ "copies": n, "witness": null, "kind": kind.as_str() });
                    let mut output = Output::decided(inputs, outcome, Value::Null);
                    output.indeterminate = kind == OutcomeKind::Indeterminate;
                    return Ok(output);
                }
            }
        }
    };
    let gens = tensor_power_generators(&s, n, paradis::subspace::DEFAULT_GENERATOR_CAP)?;
    let mut constraint = 0.0f64;
    for g in &gens {
        constraint = constraint.max(hs_inner(g, &rho)?.norm());
    }
    let phi = discrimination_input(&rho, d, n)?;
    let out_e = apply_parallel(&e, n, &phi)?;
    let out_f = apply_parallel(&f, n, &phi)?;
    let overlap = hs_inner(&out_e, &out_f)?.re;
    let outcome = json!({
        "copies": n,
        "witness_source": source,
        "overlap": overlap,
        "orthogonal": overlap.abs() <= ORTHOGONAL_TOL,
    });
    let mut residuals = witness_residuals(&rho);
    residuals["max_constraint"] = json!(constraint);
    Ok(Output::decided(inputs, outcome, residuals))
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if !(FRAC_PI_2 - 1e-12..=PI + 1e-12).contains(&alpha) {
        return Err(Failure::Usage(format!("alpha {alpha} outside [pi/2, pi]")));
    }
    Ok(())
}

fn check_n(n: usize) -> CliResult<()> {
    if n == 0 {
        return Err(Failure::Usage("--n must be at least 1".into()));
    }
    if n > MAX_SCAN_N {
        return Err(Failure::Cap(format!("--n {n} exceeds the cap of {MAX_SCAN_N}")));
    }
    Ok(())
}

fn salpha(
    inputs: Inputs,
    sub: &Salpha,
    angle: &dyn Fn(f64) -> f64,
    opts: &FeasibilityOptions,
) -> CliResult<Output> {
    match sub {
        Salpha::Solve { n, alpha } => {
            check_n(*n)?;
            let alpha = angle(*alpha);
            check_alpha(alpha)?;
            let sys = build_reduced_system(*n, alpha);
            let lp = solve_reduced(&sys);
            let boundary = (alpha - conjectured_threshold(*n)).abs() <= BOUNDARY_BAND;
            let residuals = match &lp.solution {
                Some(p) => json!({ "equation_residual": sys.residual(p) }),
                None => Value::Null,
            };
            let outcome = json!({
                "n": n,
                "alpha": alpha,
                "feasible": lp.feasible,
                "phase1_objective": lp.objective,
                "boundary": boundary,
                "vars": sys.vars,
                "p": lp.solution,
            });
            let mut output = Output::decided(inputs, outcome, residuals);
            // a returned p is checked directly; only "infeasible" can be roundoff
            output.indeterminate = boundary && !lp.feasible;
            Ok(output)
        }
        Salpha::Scan {
            n,
            grid,
            refine_tol,
            format,
        } => {
            check_n(*n)?;
            let grid = angle(*grid);
            let report = threshold_alpha(*n, grid, *refine_tol)?;
            let indeterminate = !report.monotone;
            match format {
                Format::Json => {
                    let outcome = serde_json::to_value(&report).expect("serializable");
                    let mut output = Output::decided(inputs, outcome, Value::Null);
                    output.indeterminate = indeterminate;
                    Ok(output)
                }
                Format::Csv => {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    let io_err = |e: csv::Error| Failure::Input(e.to_string());
                    w.write_record(["n", "alpha", "feasible", "phase1_objective", "alpha_star_refined"])
                        .map_err(io_err)?;
                    let star = report.alpha_star.map(|a| a.to_string()).unwrap_or_default();
                    for p in &report.profile {
                        w.write_record([
                            n.to_string(),
                            p.alpha.to_string(),
                            u8::from(p.feasible).to_string(),
                            p.objective.to_string(),
                            star.clone(),
                        ])
                        .map_err(io_err)?;
                    }
                    let bytes = w.into_inner().map_err(|e| Failure::Input(e.to_string()))?;
                    let mut output = Output::decided(inputs, Value::Null, Value::Null);
                    output.csv = Some(String::from_utf8(bytes).expect("csv output is UTF-8"));
                    output.indeterminate = indeterminate;
                    Ok(output)
                }
            }
        }
        Salpha::Verify { n, alpha } => {
            let alpha = angle(*alpha);
            check_alpha(alpha)?;
            let check = verify_closed_form(*n as usize, alpha)?;
            let nonnegative = check.min_entry >= -1e-12;
            let mut outcome = serde_json::to_value(&check).expect("serializable");
            outcome["nonnegative"] = json!(nonnegative);
            let residuals = json!({ "equation_residual": check.residual });
            Ok(Output::decided(inputs, outcome, residuals))
        }
        Salpha::Counterexample { max_n } => {
            if *max_n == 0 {
                return Err(Failure::Usage("--max-n must be at least 1".into()));
            }
            let report = counterexample_check(*max_n, opts)?;
            let outcome = serde_json::to_value(&report).expect("serializable");
            Ok(Output::decided(inputs, outcome, Value::Null))
        }
    }
}
