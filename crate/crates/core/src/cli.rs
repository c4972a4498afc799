//! Command-line front end: subcommand dispatch, CSV and snapshot emission,
//! and the exit-code contract.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration, 3 blow-up
//! detected (`run`), 4 property failure (`verify`), 5 step-size underflow
//! (`run`).

use crate::config::Config;
use crate::exponents::{
    local_wellposedness_admissible, parse_rational, sorption_growth_admissible,
    sorption_trace_admissible, ExponentQuery,
};
use crate::fv::dump_field;
use crate::harness;
use crate::model::{check_quasi_positivity, check_sorption_structure, check_triangular, SamplePlan};
use crate::stepper::{run, RunResult, Termination};
use clap::{Parser, Subcommand};
use std::io::Write;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_BAD_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;
pub const EXIT_PROPERTY_FAILURE: i32 = 4;
pub const EXIT_DT_UNDERFLOW: i32 = 5;

#[derive(Parser, Debug)]
#[command(
    name = "bulksurf",
    about = "Finite-volume simulator and verification toolkit for coupled \
             bulk-surface reaction-advection-diffusion-sorption systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate a configured scenario and emit CSV rows (and snapshots).
    Run {
        /// Path to an INI-style configuration file.
        config: PathBuf,
    },
    /// Evaluate the structural model checks for a configuration.
    CheckModel {
        /// Path to an INI-style configuration file.
        config: PathBuf,
    },
    /// Evaluate the exponent admissibility predicates.
    Exponents {
        /// Spatial dimension.
        #[arg(long)]
        d: u32,
        /// Integrability exponent (decimal or fraction, compared exactly).
        #[arg(long)]
        p: String,
        /// Polynomial degree in the bulk-trace variable.
        #[arg(long, default_value_t = 1)]
        komega: u32,
        /// Polynomial degree in the surface variable.
        #[arg(long, default_value_t = 1)]
        ksigma: u32,
        /// Optional growth exponent of the bulk reaction rates.
        #[arg(long)]
        gamma_omega: Option<String>,
        /// Optional growth exponent of the surface reaction rates.
        #[arg(long)]
        gamma_sigma: Option<String>,
    },
    /// Run the property-check suite and print one line per property.
    Verify {
        /// Only run properties whose id contains this substring.
        #[arg(long)]
        only: Option<String>,
    },
}

/// Renders the sampled norms of a run as CSV with a stable schema; floats
/// carry 17 significant digits so re-parsing round-trips exactly.
pub fn csv_text(species_names: &[String], result: &RunResult) -> String {
    let mut out = String::from(
        "t,species,l1_bulk,l2_bulk,linf_bulk,l1_surf,l2_surf,linf_surf,total_mass\n",
    );
    for (t, row) in result.times.iter().zip(result.norms.iter()) {
        for (name, n) in species_names.iter().zip(row.iter()) {
            out.push_str(&format!(
                "{t:.16e},{name},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                n.l1_bulk, n.l2_bulk, n.linf_bulk, n.l1_surf, n.l2_surf, n.linf_surf, n.total_mass
            ));
        }
    }
    out
}

fn write_snapshots(
    config: &Config,
    result: &RunResult,
    err: &mut impl Write,
) -> std::io::Result<()> {
    let dir = match &config.output.snapshot_dir {
        Some(d) => d,
        None => return Ok(()),
    };
    let snaps = match &result.snapshots {
        Some(s) => s,
        None => return Ok(()),
    };
    std::fs::create_dir_all(dir)?;
    let grid = config
        .scenario
        .grid()
        .expect("grid validated during parsing");
    let names = config.scenario.species.names();
    let every = config.output.snapshot_every.max(1);
    let mut written = 0usize;
    for (k, rec) in snaps.iter().enumerate().step_by(every) {
        for (i, name) in names.iter().enumerate() {
            let bulk = dump_field(&grid, &rec.state.c[i], rec.t, name, false);
            std::fs::write(format!("{dir}/snap_{k:06}_{name}_bulk.txt"), bulk)?;
            let surf = dump_field(&grid, &rec.state.c_surf[i], rec.t, name, true);
            std::fs::write(format!("{dir}/snap_{k:06}_{name}_surf.txt"), surf)?;
        }
        written += 1;
    }
    writeln!(err, "wrote {written} snapshot sets to {dir}")?;
    Ok(())
}

fn command_run(path: &PathBuf, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "cannot read {}: {e}", path.display());
            return EXIT_BAD_CONFIG;
        }
    };
    let mut config = match Config::from_text(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "invalid configuration: {e}");
            return EXIT_BAD_CONFIG;
        }
    };
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        config.scenario.name = stem.to_string();
    }
    if config.output.snapshot_dir.is_some() {
        config.scenario.config.record_snapshots = true;
    }
    if let Some(p_str) = &config.lwp_gate_p {
        // optional admissibility gate: all built-in sorption laws have
        // polynomial degrees (1, 1)
        let gate = parse_rational(p_str)
            .map_err(|e| e.to_string())
            .and_then(|p| {
                ExponentQuery::new(config.scenario.dim as u32, p, 1, 1).map_err(|e| e.to_string())
            })
            .map(|q| local_wellposedness_admissible(&q));
        match gate {
            Ok(report) if report.admissible => {}
            Ok(report) => {
                let _ = writeln!(err, "local well-posedness gate rejected the run:\n{report}");
                return EXIT_BAD_CONFIG;
            }
            Err(e) => {
                let _ = writeln!(err, "invalid lwp_p value: {e}");
                return EXIT_BAD_CONFIG;
            }
        }
    }
    let (system, initial) = match config.scenario.build() {
        Ok(pair) => pair,
        Err(e) => {
            let _ = writeln!(err, "invalid configuration: {e}");
            return EXIT_BAD_CONFIG;
        }
    };
    let result = match run(
        &system,
        initial,
        config.scenario.t_end,
        &config.scenario.config,
    ) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "run failed: {e}");
            return EXIT_BAD_CONFIG;
        }
    };

    let csv = csv_text(config.scenario.species.names(), &result);
    if let Some(csv_path) = &config.output.csv {
        if let Err(e) = std::fs::write(csv_path, &csv) {
            let _ = writeln!(err, "cannot write {csv_path}: {e}");
            return EXIT_BAD_CONFIG;
        }
        let _ = writeln!(err, "wrote {csv_path}");
    } else {
        let _ = write!(out, "{csv}");
    }
    if let Err(e) = write_snapshots(&config, &result, err) {
        let _ = writeln!(err, "cannot write snapshots: {e}");
        return EXIT_BAD_CONFIG;
    }

    let _ = writeln!(
        err,
        "scenario {}: {} accepted steps, {} rejected, final t = {:.6}",
        config.scenario.name,
        result.accepted_steps,
        result.rejected_steps,
        result.final_state.t
    );
    match result.termination {
        Termination::ReachedEnd => EXIT_OK,
        Termination::Blowup {
            trigger_time,
            estimate,
        } => {
            match estimate {
                Some(t_est) => {
                    let _ = writeln!(
                        out,
                        "# blow-up detected at t = {trigger_time:.6}, estimated T_blow = {t_est:.6}"
                    );
                }
                None => {
                    let _ = writeln!(out, "# blow-up detected at t = {trigger_time:.6}");
                }
            }
            EXIT_BLOWUP
        }
        Termination::DtUnderflow => {
            let _ = writeln!(err, "step size underflow before t_end; partial result written");
            EXIT_DT_UNDERFLOW
        }
    }
}

fn command_check_model(path: &PathBuf, out: &mut impl Write, err: &mut impl Write) -> i32 {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "cannot read {}: {e}", path.display());
            return EXIT_BAD_CONFIG;
        }
    };
    let config = match Config::from_text(&text) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "invalid configuration: {e}");
            return EXIT_BAD_CONFIG;
        }
    };
    let scenario = &config.scenario;
    let n = scenario.species.n_species();
    let plan = SamplePlan::new(5.0);

    // velocity: discrete incompressibility and the no-flux wall, both exact
    // by construction
    {
        let grid = scenario.grid().expect("grid validated during parsing");
        let (div, fluxes) = match (
            scenario.velocity.cell_divergence(&grid),
            scenario.velocity.face_fluxes(&grid),
        ) {
            (Ok(d), Ok(f)) => (d, f),
            (Err(e), _) | (_, Err(e)) => {
                let _ = writeln!(err, "invalid velocity field: {e}");
                return EXIT_BAD_CONFIG;
            }
        };
        let worst_div = div.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut worst_wall: f64 = 0.0;
        for j in 0..grid.ny {
            worst_wall = worst_wall
                .max(fluxes.x_flux[0][j].abs())
                .max(fluxes.x_flux[grid.nx][j].abs());
        }
        for i in 0..grid.nx {
            worst_wall = worst_wall
                .max(fluxes.y_flux[i][0].abs())
                .max(fluxes.y_flux[i][grid.ny].abs());
        }
        let verdict = if worst_div == 0.0 && worst_wall == 0.0 {
            "pass"
        } else {
            "fail"
        };
        let _ = writeln!(
            out,
            "[velocity] CHECK incompressibility_no_flux {verdict} max_divergence={worst_div:.3e} max_wall_flux={worst_wall:.3e}"
        );
    }

    for (label, net) in [
        ("bulk", &scenario.bulk_network),
        ("surface", &scenario.surface_network),
    ] {
        let report = check_quasi_positivity(|c| net.rates(c).unwrap_or_default(), n, &plan);
        let _ = writeln!(out, "[{label} network] {report}");
        let (gamma, m) = net.growth_exponent();
        let _ = writeln!(
            out,
            "[{label} network] growth exponent gamma = {gamma}, derivative constant M = {m:.6e}"
        );
    }
    match &scenario.sorption {
        Some(model) => {
            let report = check_sorption_structure(model, &plan);
            let _ = writeln!(out, "[sorption {}] {report}", model.variant().label());
        }
        None => {
            let _ = writeln!(out, "[sorption] none configured");
        }
    }
    for (label, tri, net) in [
        ("bulk", &scenario.tri_bulk, &scenario.bulk_network),
        ("surface", &scenario.tri_surf, &scenario.surface_network),
    ] {
        if let Some(tri) = tri {
            match check_triangular(net, tri, &plan) {
                Ok(report) => {
                    let _ = writeln!(out, "[{label} triangular] {report}");
                }
                Err(e) => {
                    let _ = writeln!(err, "invalid triangular structure: {e}");
                    return EXIT_BAD_CONFIG;
                }
            }
        }
    }
    EXIT_OK
}

fn command_exponents(
    d: u32,
    p: &str,
    komega: u32,
    ksigma: u32,
    gamma_omega: Option<&str>,
    gamma_sigma: Option<&str>,
    out: &mut impl Write,
    err: &mut impl Write,
) -> i32 {
    let p = match parse_rational(p) {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_USAGE;
        }
    };
    let mut query = match ExponentQuery::new(d, p, komega, ksigma) {
        Ok(q) => q,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            return EXIT_USAGE;
        }
    };
    for (slot, value) in [
        (&mut query.gamma_omega, gamma_omega),
        (&mut query.gamma_sigma, gamma_sigma),
    ] {
        if let Some(v) = value {
            match parse_rational(v) {
                Ok(g) => *slot = Some(g),
                Err(e) => {
                    let _ = writeln!(err, "{e}");
                    return EXIT_USAGE;
                }
            }
        }
    }
    let reports = [
        sorption_growth_admissible(&query),
        sorption_trace_admissible(&query),
        local_wellposedness_admissible(&query),
    ];
    for report in &reports {
        let _ = write!(out, "{report}");
    }
    for report in &reports {
        for line in report.key_value_lines() {
            let _ = writeln!(out, "{line}");
        }
    }
    EXIT_OK
}

fn command_verify(only: Option<&str>, out: &mut impl Write, err: &mut impl Write) -> i32 {
    match harness::verify(only) {
        Ok(reports) => {
            let mut failed = false;
            for r in &reports {
                let _ = writeln!(out, "{}", r.line());
                failed |= r.verdict == harness::PropertyVerdict::Fail;
            }
            if failed {
                EXIT_PROPERTY_FAILURE
            } else {
                EXIT_OK
            }
        }
        Err(harness::HarnessError::UnknownProperty(id)) => {
            let _ = writeln!(err, "no property matches `{id}`");
            EXIT_USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "verification failed to run: {e}");
            EXIT_BAD_CONFIG
        }
    }
}

/// Parses `argv` and dispatches; returns the process exit code. All output
/// goes through the two writers so tests can capture it.
pub fn main_with_args<I, S>(argv: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // clap renders its own help/usage text
            let rendered = e.render().to_string();
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            if is_help {
                let _ = write!(out, "{rendered}");
                return EXIT_OK;
            }
            let _ = write!(err, "{rendered}");
            return EXIT_USAGE;
        }
    };
    match cli.command {
        Command::Run { config } => command_run(&config, out, err),
        Command::CheckModel { config } => command_check_model(&config, out, err),
        Command::Exponents {
            d,
            p,
            komega,
            ksigma,
            gamma_omega,
            gamma_sigma,
        } => command_exponents(
            d,
            &p,
            komega,
            ksigma,
            gamma_omega.as_deref(),
            gamma_sigma.as_deref(),
            out,
            err,
        ),
        Command::Verify { only } => command_verify(only.as_deref(), out, err),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::find_scenario;

    #[test]
    fn exponents_subcommand_prints_reports() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            ["bulksurf", "exponents", "--d", "3", "--p", "2.5"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_OK);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("sorption_growth: admissible"), "{text}");
        assert!(text.contains("sorption_trace: admissible"), "{text}");
        assert!(text.contains("local_wellposedness: admissible"), "{text}");
        assert!(text.contains("admissible=true"), "{text}");
    }

    #[test]
    fn exponents_rejects_bad_input() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(
            ["bulksurf", "exponents", "--d", "3", "--p", "zebra"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn usage_error_for_unknown_subcommand() {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = main_with_args(["bulksurf", "frobnicate"], &mut out, &mut err);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn csv_schema_is_stable() {
        let scenario = find_scenario("heat_16").unwrap();
        let (system, initial) = scenario.build().unwrap();
        let result = run(&system, initial, 0.01, &scenario.config).unwrap();
        let csv = csv_text(scenario.species.names(), &result);
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,species,l1_bulk,l2_bulk,linf_bulk,l1_surf,l2_surf,linf_surf,total_mass"
        );
        let first = lines.next().unwrap();
        assert!(first.contains(",U,"), "{first}");
        assert_eq!(first.split(',').count(), 9);
        // 17 significant digits: mantissa with 16 fractional digits
        let field = first.split(',').nth(2).unwrap();
        let mantissa = field.split('e').next().unwrap();
        assert_eq!(mantissa.split('.').nth(1).unwrap().len(), 16, "{field}");
    }
}
