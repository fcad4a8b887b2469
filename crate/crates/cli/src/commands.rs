use std::fs::File;
use std::io::{self, BufWriter, Write};

use multicopy_core::circuits::{copies_readout, photon_difference_distribution, run_circuit, sample_outcomes, CircuitSpec};
use multicopy_core::distribution::{EntropyUnit, OutcomeDistribution};
use multicopy_core::gaussian::{apply_unitary, GaussianUnitarySpec};
use multicopy_core::phase_space::{
    covariance_of, e_function, gaussian_entropy_closed_forms, mean_photon_curve, nu_curve, sr_check, thermal_lz_entropy,
    vacuum_one_mixture_entropy, write_csv,
};
use multicopy_core::states::{make_state, make_state_gated, Prepared, StateSpec, TailGate};
use multicopy_core::three_copy::{outcome_distribution_m, THREE_COPY_PRUNE_TOL};
use multicopy_core::two_copy::{outcome_distribution_lz, DEFAULT_PRUNE_TOL};
use multicopy_core::verify::{run_suite, CheckStatus, Mutation, VerifyConfig};
use multicopy_core::{Error, State, C64};
use serde::Serialize;

use crate::report::{entries, CircuitReport, EntropyReport, SampleCount, SweepRow};
use crate::{
    CircuitArgs, CliError, Command, CurveArgs, CurveKind, Family, Format, MutationArg, Observable, OutputArgs,
    StateArgs, SweepArgs, VerifyArgs,
};

type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn dispatch(command: Command) -> CliResult<()> {
    match command {
        Command::Entropy(a) => entropy(a.observable, a.displace, &a.state),
        Command::LzEntropy(s) => entropy(Observable::Lz, None, &s),
        Command::MEntropy(a) => entropy(Observable::M, a.displace, &a.state),
        Command::CircuitRun(a) => circuit_run(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Verify(a) => verify(&a),
        Command::Curves(a) => curves(&a),
    }
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn load_spec(arg: &str) -> CliResult<StateSpec> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| Error::Spec { path: arg.to_string(), message: e.to_string() })?
    };
    Ok(StateSpec::from_json(&text)?)
}

fn prepare(spec: &StateSpec, cutoff: usize, tail_max: f64) -> CliResult<Prepared> {
    let gate = TailGate { max_tail: tail_max, strict: true };
    Ok(make_state_gated(spec, cutoff, gate)?.0)
}

fn sink(output: &OutputArgs) -> CliResult<Box<dyn Write>> {
    Ok(match &output.out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit_json<T: Serialize>(value: &T, output: &OutputArgs) -> CliResult<()> {
    let mut w = sink(output)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.into()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn emit_csv<T: Serialize>(rows: &[T], output: &OutputArgs) -> CliResult<()> {
    let mut w = sink(output)?;
    write_csv(rows, &mut w)?;
    w.flush()?;
    Ok(())
}

fn bits(output: &OutputArgs, h: f64) -> Option<f64> {
    output.bits.then(|| EntropyUnit::Bits.from_nats(h))
}

fn distribution_of(observable: Observable, state: &State) -> multicopy_core::Result<OutcomeDistribution> {
    match observable {
        Observable::Lz => outcome_distribution_lz(state),
        Observable::M => outcome_distribution_m(state),
    }
}

fn entropy(observable: Observable, displace: Option<C64>, args: &StateArgs) -> CliResult<()> {
    let spec = load_spec(&args.state)?;
    let cutoff = args.cutoff as usize;
    let prepared = prepare(&spec, cutoff, args.tail_max)?;
    let mut tail = prepared.truncation_error();
    let mut state = prepared.state;
    if let Some(alpha) = displace {
        let moved = apply_unitary(&GaussianUnitarySpec::displace(0, alpha), &state)?;
        tail = tail.max(moved.dropped).max(moved.tail.tail_mass);
        TailGate { max_tail: args.tail_max, strict: true }.check(tail)?;
        state = moved.state.renormalize()?;
    }
    let dist = distribution_of(observable, &state)?;
    let cov = covariance_of(&state)?;
    let sr = sr_check(&cov, 1e-9);
    let h = dist.entropy();
    let report = EntropyReport {
        observable: match observable {
            Observable::Lz => "Lz".into(),
            Observable::M => "M".into(),
        },
        cutoff,
        distribution: entries(&dist),
        h_nats: h,
        h_bits: bits(&args.output, h),
        variance: dist.second_moment(),
        det_gamma: sr.det_gamma,
        sr_satisfied: sr.satisfied,
        tail_mass: tail,
        truncation_loss: dist.truncation_loss(),
        displacement: displace.map(|a| [a.re, a.im]),
    };
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&report, &args.output),
        Format::Csv => emit_csv(&report.distribution, &args.output),
    }
}

fn circuit_run(args: &CircuitArgs) -> CliResult<()> {
    let circuit = CircuitSpec::resolve(&args.circuit)?;
    let k = circuit.modes();
    let pair = match (args.readout, &circuit) {
        (Some(p), _) => p,
        (None, CircuitSpec::Preset(p)) => p.readout_pair(),
        (None, _) => [0, 1],
    };
    if pair[0] == pair[1] || pair.iter().any(|&m| m >= k) {
        return Err(Error::InvalidModeSet(format!("readout modes {},{} on a {k}-mode circuit", pair[0] + 1, pair[1] + 1)).into());
    }
    let spec = load_spec(&args.state.state)?;
    let cutoff = args.state.cutoff as usize;
    let prepared = prepare(&spec, cutoff, args.state.tail_max)?;
    let elements = circuit.elements();
    let (dist, loss) = if elements.iter().all(GaussianUnitarySpec::is_passive) {
        let tol = if k >= 3 { THREE_COPY_PRUNE_TOL } else { DEFAULT_PRUNE_TOL };
        let d = copies_readout(&prepared.state, k, &elements, pair, tol)?;
        let loss = d.truncation_loss();
        (d, loss)
    } else {
        let evolved = run_circuit(&circuit, &prepared.state.copies(k)?)?;
        (photon_difference_distribution(&evolved.state, pair)?.distribution, evolved.dropped)
    };
    let samples = if args.shots > 0 {
        let mut counts = std::collections::BTreeMap::new();
        for m in sample_outcomes(&dist, args.shots, args.seed)? {
            *counts.entry(m.twice()).or_insert(0) += 1;
        }
        counts.into_iter().map(|(twice_m, count)| SampleCount { twice_m, count }).collect()
    } else {
        Vec::new()
    };
    let h = dist.entropy();
    let report = CircuitReport {
        circuit: match &circuit {
            CircuitSpec::Preset(p) => p.name().into(),
            CircuitSpec::Elements { .. } => args.circuit.clone(),
        },
        modes: k,
        cutoff,
        readout: [pair[0] + 1, pair[1] + 1],
        distribution: entries(&dist),
        h_nats: h,
        h_bits: bits(&args.state.output, h),
        tail_mass: prepared.truncation_error(),
        truncation_loss: loss,
        seed: (args.shots > 0).then_some(args.seed),
        samples,
    };
    match args.state.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&report, &args.state.output),
        Format::Csv => emit_csv(&report.distribution, &args.state.output),
    }
}

fn family_spec(family: Family, parameter: f64) -> StateSpec {
    match family {
        Family::Thermal => StateSpec::Thermal { mean_n: parameter },
        Family::Squeezed => StateSpec::Squeezed { r: parameter, phi: 0.0 },
        Family::Mixture => StateSpec::mixture([(parameter, StateSpec::Vacuum), (1.0 - parameter, StateSpec::Fock { n: 1 })]),
    }
}

fn default_grid(family: Family) -> Vec<f64> {
    match family {
        Family::Thermal => vec![0.0, 0.25, 0.5, 1.0, 2.0],
        Family::Squeezed => vec![0.0, 0.1, 0.25, 0.5],
        Family::Mixture => (0..=10).map(|k| k as f64 / 10.0).collect(),
    }
}

/// Smallest even cutoff whose truncation error stays below `tail_max`.
fn auto_prepare(spec: &StateSpec, tail_max: f64, max_cutoff: usize) -> multicopy_core::Result<Option<Prepared>> {
    let mut cutoff = 4;
    while cutoff <= max_cutoff {
        let p = make_state(spec, cutoff)?;
        if p.truncation_error() <= tail_max {
            return Ok(Some(p));
        }
        cutoff += 2;
    }
    Ok(None)
}

fn sweep_point(args: &SweepArgs, parameter: f64) -> SweepRow {
    let spec = family_spec(args.family, parameter);
    let mut row = SweepRow {
        parameter,
        h_circuit: None,
        h_closed_form: None,
        abs_diff: None,
        e: None,
        h_xp: None,
        cutoff: None,
        status: "ok".into(),
    };
    if let Err(e) = spec.validate() {
        row.status = format!("invalid: {e}");
        return row;
    }
    if let Some(nu) = spec.gaussian_nu() {
        row.h_closed_form = gaussian_entropy_closed_forms(nu).ok().map(|g| g.h_lz);
        row.h_xp = gaussian_entropy_closed_forms(nu).ok().map(|g| g.h_xp);
    }
    match args.family {
        Family::Thermal => {
            row.e = e_function(parameter).ok();
            row.h_closed_form = thermal_lz_entropy(parameter).ok();
        }
        Family::Mixture if args.observable == Observable::Lz => row.h_closed_form = Some(vacuum_one_mixture_entropy(parameter)),
        _ => {}
    }
    let prepared = match args.cutoff {
        Some(c) => match make_state(&spec, c) {
            Ok(p) if p.truncation_error() <= args.tail_max => Ok(Some(p)),
            Ok(_) => Ok(None),
            Err(e) => Err(e),
        },
        None => auto_prepare(&spec, args.tail_max, if args.observable == Observable::M { 60 } else { 300 }),
    };
    let prepared = match prepared {
        Ok(Some(p)) => p,
        Ok(None) => {
            row.status = "tail".into();
            return row;
        }
        Err(e) => {
            row.status = format!("infeasible: {e}");
            return row;
        }
    };
    row.cutoff = Some(prepared.state.truncation().cutoff());
    let dist = match args.observable {
        Observable::Lz => multicopy_core::circuits::lz_circuit_distribution(&prepared.state),
        Observable::M => outcome_distribution_m(&prepared.state),
    };
    match dist {
        Ok(d) => {
            let h = d.entropy();
            row.h_circuit = Some(h);
            row.abs_diff = row.h_closed_form.map(|c| (h - c).abs());
        }
        Err(e) => row.status = format!("infeasible: {e}"),
    }
    row
}

fn sweep(args: &SweepArgs) -> CliResult<()> {
    let grid = args.grid.clone().map(|g| g.0).unwrap_or_else(|| default_grid(args.family));
    let rows: Vec<SweepRow> = grid.iter().map(|&p| sweep_point(args, p)).collect();
    match args.output.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_csv(&rows, &args.output),
        Format::Json => emit_json(&rows, &args.output),
    }
}

#[derive(Serialize)]
struct CheckRow<'a> {
    name: &'a str,
    status: CheckStatus,
    residual: f64,
    tolerance: f64,
    detail: &'a str,
}

fn verify(args: &VerifyArgs) -> CliResult<()> {
    let states = args.state.iter().map(|s| load_spec(s)).collect::<CliResult<Vec<_>>>()?;
    let cfg = VerifyConfig {
        operator_cutoff: args.operator_cutoff.max(4),
        state_cutoff: args.cutoff.max(1),
        operator_tol: args.tol,
        distribution_tol: args.distribution_tol,
        tail_max: args.tail_max,
        states,
        mutation: args.mutate.map(|MutationArg::BsSign| Mutation::BsSign),
    };
    let report = run_suite(&cfg)?;
    match args.output.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(&report, &args.output)?,
        Format::Csv => {
            let rows: Vec<CheckRow> = report
                .checks
                .iter()
                .map(|c| CheckRow {
                    name: &c.name,
                    status: c.status,
                    residual: c.residual,
                    tolerance: c.tolerance,
                    detail: c.detail.as_deref().unwrap_or(""),
                })
                .collect();
            emit_csv(&rows, &args.output)?;
        }
    }
    let (pass, fail, open) =
        (report.count(CheckStatus::Pass), report.count(CheckStatus::Fail), report.count(CheckStatus::Inconclusive));
    eprintln!("{pass} passed, {fail} failed, {open} inconclusive");
    if fail > 0 {
        Err(CliError::Invariant(format!("{fail} check(s) failed")))
    } else if open > 0 {
        Err(CliError::Gate(format!("{open} check(s) inconclusive: probe state not resolved at this cutoff")))
    } else {
        Ok(())
    }
}

fn curves(args: &CurveArgs) -> CliResult<()> {
    let format = args.output.format.unwrap_or(Format::Csv);
    match args.kind {
        CurveKind::Nu => {
            let grid = args.grid.clone().map(|g| g.0).unwrap_or_else(|| (0..=90).map(|k| 0.5 + 0.05 * k as f64).collect());
            let rows = nu_curve(&grid)?;
            match format {
                Format::Csv => emit_csv(&rows, &args.output),
                Format::Json => emit_json(&rows, &args.output),
            }
        }
        CurveKind::MeanPhoton => {
            let grid = args.grid.clone().map(|g| g.0).unwrap_or_else(|| (0..=100).map(|k| 0.05 * k as f64).collect());
            let rows = mean_photon_curve(&grid)?;
            match format {
                Format::Csv => emit_csv(&rows, &args.output),
                Format::Json => emit_json(&rows, &args.output),
            }
        }
    }
}
