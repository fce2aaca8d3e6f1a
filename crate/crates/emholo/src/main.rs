use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use emholo::config::{Settings, CONFIG_ENV};
use emholo::ctf::write_ctf_plot;
use emholo::job::{run_job, JobMode, JobReport};
use emholo::simulate::{simulate, write_simulation, DEFAULT_SIM_DEFOCUS};
use emholo::{Error, Result};

/// Autofocus and exit-wave reconstruction for in-line electron holograms.
#[derive(Parser)]
#[command(name = "emholo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep de-focus on each ROI and report the merit peak.
    Focus(Common),
    /// Reconstruct each ROI at the pinned de-focus.
    Retrieve(Common),
    /// Write a synthetic hologram with its ground truth.
    Simulate(Common),
    /// Tabulate and plot the CTF for the configured optics.
    CtfPlot(Common),
    /// Sweep (unless de-focus is pinned) and reconstruct each ROI.
    Run(Common),
}

#[derive(Args, Default)]
struct Common {
    /// Config file; defaults to $EMHOLO_CONFIG when set.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<String>,
    /// ROI as x,y[,size] in pixels; repeatable, replaces ROIs from the config.
    #[arg(long = "roi")]
    rois: Vec<String>,
    /// E.g. 2.2A.
    #[arg(long)]
    pixel_pitch: Option<String>,
    /// E.g. 120kV.
    #[arg(long)]
    voltage: Option<String>,
    /// E.g. 2mm.
    #[arg(long)]
    cs: Option<String>,
    /// Pins the de-focus (e.g. 3.1um) and skips the sweep.
    #[arg(long)]
    defocus: Option<String>,
    /// zmin:zmax:step, e.g. 2um:4um:5nm.
    #[arg(long)]
    sweep: Option<String>,
    #[arg(long)]
    tau: Option<String>,
    /// Stopping angle in degrees.
    #[arg(long)]
    theta_stop: Option<String>,
    #[arg(long)]
    max_iters: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// none or mean-one.
    #[arg(long)]
    normalize: Option<String>,
    #[arg(long)]
    out_dir: Option<String>,
    /// Worker threads; 0 means one per logical core.
    #[arg(long)]
    workers: Option<String>,
    /// Negate all de-focus values (opposite sign convention).
    #[arg(long)]
    flip_defocus_sign: bool,
    /// Any other config key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

impl Common {
    fn settings(&self) -> Result<Settings> {
        let path = self.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
        let mut settings = match path {
            Some(p) => Settings::load(&p)?,
            None => Settings::default(),
        };
        for kv in &self.sets {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Value(format!("--set {kv:?}: expected key=value")))?;
            settings.apply(k, v)?;
        }
        let flags = [
            ("input", &self.input),
            ("pixel-pitch", &self.pixel_pitch),
            ("voltage", &self.voltage),
            ("cs", &self.cs),
            ("defocus", &self.defocus),
            ("sweep", &self.sweep),
            ("tau", &self.tau),
            ("theta-stop", &self.theta_stop),
            ("max-iters", &self.max_iters),
            ("seed", &self.seed),
            ("normalize", &self.normalize),
            ("out-dir", &self.out_dir),
            ("workers", &self.workers),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                settings.apply(key, v)?;
            }
        }
        if self.flip_defocus_sign {
            settings.apply("flip-defocus-sign", "true")?;
        }
        if !self.rois.is_empty() {
            settings.job.rois.clear();
            for r in &self.rois {
                settings.apply("roi", r)?;
            }
        }
        Ok(settings)
    }
}

fn print_report(report: &JobReport) {
    for r in &report.rois {
        let mut line = format!("roi {} ({},{})", r.index, r.center_x, r.center_y);
        if let Some(z) = r.defocus_m {
            line.push_str(&format!(" defocus {:.4} um", z * 1e6));
        }
        if let Some(e) = r.relative_error {
            line.push_str(&format!(" E {:.4}%", e * 100.0));
        }
        if let Some(n) = r.iterations {
            line.push_str(&format!(" iters {n}"));
        }
        if let Some(c) = r.converged {
            line.push_str(if c { " converged" } else { " not-converged" });
        }
        if let Some(e) = &r.error {
            line.push_str(&format!(" FAILED: {e}"));
        }
        println!("{line}");
    }
    println!("report: {}", report.report_path.display());
}

fn job(common: &Common, mode: JobMode) -> Result<bool> {
    let settings = common.settings()?;
    let report = run_job(&settings.job, mode)?;
    print_report(&report);
    Ok(report.all_ok())
}

fn execute(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Focus(c) => job(&c, JobMode::Focus),
        Command::Retrieve(c) => job(&c, JobMode::Retrieve),
        Command::Run(c) => job(&c, JobMode::Full),
        Command::Simulate(c) => {
            let settings = c.settings()?;
            let sim = simulate(&settings)?;
            write_simulation(&sim, &settings, &settings.job.out_dir)?;
            println!(
                "wrote {}x{} hologram at defocus {:.4} um to {}",
                sim.hologram.height(),
                sim.hologram.width(),
                sim.params.defocus() * 1e6,
                settings.job.out_dir.display()
            );
            Ok(true)
        }
        Command::CtfPlot(c) => {
            let settings = c.settings()?;
            let job = &settings.job;
            let mut params = job.optics(job.pixel_pitch.unwrap_or(1e-10))?;
            if job.defocus.is_none() {
                params = params.with_defocus(job.signed(DEFAULT_SIM_DEFOCUS))?;
            }
            let files = write_ctf_plot(&params, settings.ctf.rho_max, settings.ctf.samples, &job.out_dir)?;
            match files.first_zero {
                Some(z) => println!("first zero at {:.6} /nm", z * 1e-9),
                None => println!("no zero below {:.4} /nm", settings.ctf.rho_max * 1e-9),
            }
            println!("wrote {} and {}", files.table.display(), files.preview.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
