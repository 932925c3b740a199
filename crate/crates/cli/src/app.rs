use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::config::Settings;
use crate::output::{csv_table, fmt_num, write_artifacts, Cell};
use crate::scenario::{run_scenario, Artifact, Report, RunError};
use holeburn::analysis::extract_oscillation_frequency;

#[derive(Debug, Parser)]
#[command(name = "holeburn", version, about = "Hole-burning slow light and its optical switching")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a configuration file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Also write SVG plots.
        #[arg(long)]
        plots: bool,
    },
    /// Re-run a scenario for several values of one configuration key.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Configuration key to vary, e.g. `intensity.A_Wcm2`.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<String>,
        #[arg(long, default_value = "sweep")]
        out: PathBuf,
        #[arg(long)]
        plots: bool,
    },
    /// Estimate the oscillation frequency in a column of a trace CSV.
    Analyze {
        #[arg(long)]
        trace: PathBuf,
        /// Analysis window `t0,t1` in μs.
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        /// Column name, or `a-b` for the difference of two columns.
        #[arg(long, default_value = "I_out")]
        column: String,
    },
}

/// Reads and validates a configuration file.
pub fn load_config(path: &Path) -> Result<Settings, RunError> {
    let text = fs::read_to_string(path).map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?;
    Ok(Settings::parse(&text)?)
}

fn with_summary(report: &Report) -> Vec<Artifact> {
    let mut files = report.artifacts.clone();
    files.push(Artifact {
        path: "summary.txt".into(),
        contents: report.summary_text().into_bytes(),
    });
    files
}

fn io_err(out: &Path) -> impl Fn(std::io::Error) -> RunError + '_ {
    move |e| RunError::Io(format!("{}: {e}", out.display()))
}

pub fn simulate(config: &Path, out: &Path, plots: bool) -> Result<Report, RunError> {
    let mut settings = load_config(config)?;
    settings.plots |= plots;
    let report = run_scenario(&settings)?;
    write_artifacts(out, &with_summary(&report)).map_err(io_err(out))?;
    Ok(report)
}

fn opt(x: Option<f64>) -> Cell {
    Cell::Num(x.unwrap_or(f64::NAN))
}

fn sanitize(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

/// Runs every value concurrently; each point writes into its own
/// subdirectory and `sweep.csv` collects the headline numbers.
pub fn sweep(config: &Path, param: &str, values: &[String], out: &Path, plots: bool) -> Result<Vec<Report>, RunError> {
    let mut base = load_config(config)?;
    base.plots |= plots;
    if values.is_empty() {
        return Err(RunError::Stage {
            stage: "sweep",
            message: "no values given".into(),
            validation: true,
        });
    }
    let mut points = Vec::with_capacity(values.len());
    for v in values {
        let mut s = base.clone();
        match s.set(param, v) {
            Ok(true) => {}
            Ok(false) => {
                return Err(crate::config::ConfigError::Invalid {
                    key: param.into(),
                    message: "unknown key".into(),
                }
                .into())
            }
            Err(message) => return Err(crate::config::ConfigError::Invalid { key: param.into(), message }.into()),
        }
        s.validate()?;
        points.push(s);
    }
    let reports: Vec<Report> = points.par_iter().map(run_scenario).collect::<Result<_, _>>()?;

    let mut files = Vec::new();
    for (k, (v, r)) in values.iter().zip(&reports).enumerate() {
        let dir = PathBuf::from(format!("{k:02}_{}", sanitize(v)));
        for a in with_summary(r) {
            files.push(Artifact {
                path: dir.join(&a.path),
                contents: a.contents,
            });
        }
    }
    let rows = values.iter().zip(&reports).map(|(v, r)| {
        let h = &r.headline;
        vec![
            Cell::Text(v.clone()),
            opt(h.delay_us),
            opt(h.f_osc_khz),
            opt(h.contrast),
            opt(h.fit_slope),
            opt(h.fit_r_squared),
        ]
    });
    files.push(Artifact {
        path: "sweep.csv".into(),
        contents: csv_table(
            &[param, "delay_us", "f_osc_kHz", "contrast", "fit_slope", "fit_r_squared"],
            rows,
        ),
    });
    write_artifacts(out, &files).map_err(io_err(out))?;
    Ok(reports)
}

fn parse_window(w: &str) -> Result<(f64, f64), RunError> {
    let bad = || RunError::Stage {
        stage: "arguments",
        message: format!("--window expects `t0,t1`, got `{w}`"),
        validation: true,
    };
    let (a, b) = w.split_once(',').ok_or_else(bad)?;
    let t0: f64 = a.trim().parse().map_err(|_| bad())?;
    let t1: f64 = b.trim().parse().map_err(|_| bad())?;
    if t1 > t0 {
        Ok((t0, t1))
    } else {
        Err(bad())
    }
}

/// Oscillation analysis of one column of a trace CSV; returns report lines.
pub fn analyze(trace: &Path, window: &str, column: &str) -> Result<Vec<(String, String)>, RunError> {
    let window = parse_window(window)?;
    let mut reader = csv::Reader::from_path(trace).map_err(|e| RunError::Io(format!("{}: {e}", trace.display())))?;
    let header = reader
        .headers()
        .map_err(|e| RunError::Io(format!("{}: {e}", trace.display())))?
        .clone();
    let find = |name: &str| {
        header.iter().position(|h| h == name).ok_or_else(|| RunError::Stage {
            stage: "arguments",
            message: format!("column `{name}` not in {}", trace.display()),
            validation: true,
        })
    };
    let t_col = find("t_us")?;
    let (plus, minus) = match find(column) {
        Ok(c) => (c, None),
        Err(e) => match column.split_once('-') {
            Some((a, b)) => (find(a.trim())?, Some(find(b.trim())?)),
            None => return Err(e),
        },
    };
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| RunError::Io(format!("{}: {e}", trace.display())))?;
        let num = |c: usize| -> Result<f64, RunError> {
            rec.get(c).unwrap_or("").parse().map_err(|_| RunError::Stage {
                stage: "trace",
                message: format!("row {}: column {} is not a number", line + 2, header.get(c).unwrap_or("?")),
                validation: true,
            })
        };
        times.push(num(t_col)?);
        values.push(num(plus)? - minus.map(num).transpose()?.unwrap_or(0.0));
    }
    let est = extract_oscillation_frequency(&times, &values, window).map_err(|e| RunError::Stage {
        stage: "analysis",
        message: e.to_string(),
        validation: false,
    })?;
    let mut lines = vec![
        ("column".to_string(), column.to_string()),
        ("window_us".to_string(), format!("{}, {}", fmt_num(window.0), fmt_num(window.1))),
        ("method".to_string(), est.method.tag().to_string()),
        ("frequency_kHz".to_string(), fmt_num(est.frequency_khz)),
        ("natural_frequency_kHz".to_string(), fmt_num(est.natural_frequency_khz())),
        ("amplitude".to_string(), fmt_num(est.amplitude)),
        ("damping_per_us".to_string(), est.damping_rate.map_or("none".into(), fmt_num)),
        ("extrema_frequency_kHz".to_string(), est.extrema_frequency_khz.map_or("none".into(), fmt_num)),
        ("extrema_count".to_string(), est.extrema_count.to_string()),
    ];
    if !est.note.is_empty() {
        lines.push(("note".to_string(), est.note));
    }
    Ok(lines)
}

fn print_lines(lines: &[(String, String)]) {
    for (k, v) in lines {
        println!("{k} = {v}");
    }
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Simulate { config, out, plots } => simulate(config, out, *plots).map(|r| {
            print_lines(&r.summary);
            println!("output = {}", out.display());
        }),
        Command::Sweep {
            config,
            param,
            values,
            out,
            plots,
        } => sweep(config, param, values, out, *plots).map(|reports| {
            println!("points = {}", reports.len());
            println!("output = {}", out.display());
        }),
        Command::Analyze { trace, window, column } => analyze(trace, window, column).map(|l| print_lines(&l)),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
