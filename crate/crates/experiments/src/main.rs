use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use odefilter::config::{ConfigArgs, RunConfig};
use odefilter::runs::{self, fit_series, WpdRow, STEADY_HEADER, WPD_HEADER};
use odefilter::svg::{LogLogChart, Series};
use odefilter::{presets, write_csv, HarnessError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// One trajectory, one row per step.
    Solve,
    /// Work-precision sweep over an h-grid.
    Wpd,
    /// Steady states and order bounds of the q = 1 covariance recursion.
    Steady,
    /// Final state misalignment over an h-grid.
    Misalign,
}

/// Gaussian ODE filter experiments.
#[derive(Debug, Parser)]
#[command(name = "odefilter", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Built-in series: fig1, fig2, fig3 or figC.
    #[arg(long)]
    preset: Option<String>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[command(flatten)]
    args: ConfigArgs,
}

fn resolve(cli: Cli) -> Result<(Command, Vec<RunConfig>), HarnessError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                HarnessError::config(format!("cannot read {}: {e}", path.display()))
            })?;
            ConfigArgs::from_toml(&text)?
        }
        None => ConfigArgs::default(),
    };
    let args = file.merge(cli.args);
    let configs = match &cli.preset {
        Some(name) => presets::preset(name)?
            .into_iter()
            .map(|c| args.clone().apply(c))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![args.apply(RunConfig::default())?],
    };
    Ok((cli.command, configs))
}

fn emit_csv(
    path: Option<&Path>,
    header: &[impl AsRef<str>],
    rows: &[Vec<String>],
) -> Result<(), HarnessError> {
    match path {
        Some(p) => write_csv(fs::File::create(p)?, header, rows),
        None => write_csv(io::stdout().lock(), header, rows),
    }
}

fn sweep_chart(
    rows: &[WpdRow],
    title: &str,
    y_label: &str,
    value: fn(&WpdRow) -> f64,
    with_std: bool,
) -> LogLogChart {
    let fits = fit_series(rows);
    let mut series = Vec::new();
    let mut start = 0;
    for fit in &fits {
        let group = &rows[start..start + fit.points];
        start += fit.points;
        series.push(Series {
            label: fit.label(),
            points: group.iter().map(|r| (r.n_evals as f64, value(r))).collect(),
            dashed: false,
        });
        if with_std && fit.q == 1 {
            series.push(Series {
                label: format!("{} std", fit.label()),
                points: group
                    .iter()
                    .map(|r| (r.n_evals as f64, r.max_std))
                    .collect(),
                dashed: true,
            });
        }
    }
    LogLogChart {
        title: title.into(),
        x_label: "evaluations of f".into(),
        y_label: y_label.into(),
        series,
        guide_orders: vec![1, 2, 3, 4, 5],
    }
}

fn report_fits(rows: &[WpdRow]) {
    let mut err = io::stderr().lock();
    for fit in fit_series(rows) {
        let s = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.3}"));
        let _ = writeln!(
            err,
            "{}: error slope {}, std slope {}, delta slope {}",
            fit.label(),
            s(fit.error_slope),
            s(fit.std_slope),
            s(fit.delta_slope)
        );
    }
}

fn run(command: Command, configs: &[RunConfig]) -> Result<(), HarnessError> {
    let out = configs[0].out.as_deref();
    let svg = configs[0].svg.as_deref();
    match command {
        Command::Solve => {
            let [cfg] = configs else {
                return Err(HarnessError::config(
                    "solve takes a single configuration, not a preset",
                ));
            };
            let (_, traj) = runs::run_solve(cfg)?;
            let (header, rows) = runs::trajectory_table(&traj);
            emit_csv(out, &header, &rows)?;
            if traj.diverged {
                let t = traj.records.last().map_or(0.0, |r| r.t);
                return Err(HarnessError::Diverged { t });
            }
        }
        Command::Wpd | Command::Misalign => {
            let rows = runs::run_sweep(configs, 4)?;
            let records: Vec<Vec<String>> = rows.iter().map(WpdRow::record).collect();
            emit_csv(out, &WPD_HEADER, &records)?;
            report_fits(&rows);
            if let Some(path) = svg {
                let chart = if command == Command::Wpd {
                    sweep_chart(
                        &rows,
                        "final global error",
                        "error at T",
                        |r| r.final_error,
                        true,
                    )
                } else {
                    sweep_chart(
                        &rows,
                        "final state misalignment",
                        "delta1 at T",
                        |r| r.delta1_final,
                        false,
                    )
                };
                fs::write(path, chart.render())?;
            }
        }
        Command::Steady => {
            let [cfg] = configs else {
                return Err(HarnessError::config(
                    "steady takes a single configuration, not a preset",
                ));
            };
            let rows = runs::run_steady(cfg)?;
            let records: Vec<Vec<String>> = rows.iter().map(|r| r.record()).collect();
            emit_csv(out, &STEADY_HEADER, &records)?;
            if svg.is_some() {
                eprintln!("note: steady writes no chart; --svg ignored");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = resolve(cli).and_then(|(command, configs)| run(command, &configs));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
