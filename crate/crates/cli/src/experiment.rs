//! `type1`, `power` and `simulate` subcommands.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use drt_core::harness::{
    run_power, run_type1, write_results, CellResult, GridFile, ResultFormat,
    DEFAULT_POWER_REPLICATES,
};
use drt_core::simgen::{generate_dataset, CoeffDist, MeanFn, NoiseModel, SimConfig};

use crate::{parse_preprocess, CliError, Preprocess};

/// One sample-size scheme, written `10:10` or `10:10:10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scheme(pub Vec<usize>);

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.split(':')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad group size '{p}' in scheme '{s}'"))
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Scheme)
}

/// Grid options shared by `type1` and `power`. Flags override keys in the
/// config file; keys missing from both take the library defaults.
#[derive(Debug, Args)]
pub struct GridArgs {
    /// TOML grid description (keys: seed, replicates, alpha, basis_size, noise,
    /// s_values, n_schemes, coeff_dists, mean_fns, xi_values, summaries,
    /// preprocess, threads)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (required here or in the config file)
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo replicates per cell
    #[arg(long)]
    replicates: Option<usize>,
    /// Nominal level; a replicate rejects when p ≤ alpha
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of Karhunen-Loève terms
    #[arg(long)]
    basis_size: Option<usize>,
    /// none | white | ar1 | ar1:<rho>
    #[arg(long)]
    noise: Option<String>,
    /// Grid lengths S, comma separated
    #[arg(long, value_delimiter = ',')]
    s_values: Option<Vec<usize>>,
    /// Sample-size schemes, e.g. 10:10,25:25 (three or more groups run KW)
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme)]
    n_schemes: Option<Vec<Scheme>>,
    /// gaussian | t2, comma separated
    #[arg(long, value_delimiter = ',')]
    coeff_dists: Option<Vec<String>>,
    /// suff | avg, comma separated
    #[arg(long, value_delimiter = ',')]
    summaries: Option<Vec<String>>,
    /// none | pve=<p>: FPCA smoothing of every replicate
    #[arg(long, value_parser = parse_preprocess)]
    preprocess: Option<Preprocess>,
    /// Worker threads (results do not depend on this)
    #[arg(long, env = "DRT_THREADS")]
    threads: Option<usize>,
    /// Write the result table here
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result table format; default from the --out extension (.jsonl → jsonl)
    #[arg(long, value_enum)]
    out_format: Option<OutFormat>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[command(flatten)]
    grid: GridArgs,
    /// mu1 | mu2 | mu3, comma separated
    #[arg(long, value_delimiter = ',')]
    mean_fns: Option<Vec<String>>,
    /// Shift sizes ξ, comma separated
    #[arg(long, value_delimiter = ',')]
    xi_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutFormat {
    Csv,
    Jsonl,
}

impl GridArgs {
    fn into_file(self) -> Result<(GridFile, Option<PathBuf>, Option<OutFormat>), CliError> {
        let mut file = match &self.config {
            Some(path) => GridFile::from_toml_file(path)?,
            None => GridFile::default(),
        };
        macro_rules! overlay {
            ($($field:ident),*) => {$(
                if self.$field.is_some() {
                    file.$field = self.$field;
                }
            )*};
        }
        overlay!(
            seed,
            replicates,
            alpha,
            basis_size,
            noise,
            s_values,
            coeff_dists,
            summaries,
            threads
        );
        if let Some(schemes) = self.n_schemes {
            file.n_schemes = Some(schemes.into_iter().map(|s| s.0).collect());
        }
        if let Some(pre) = self.preprocess {
            file.preprocess = pre.0;
        }
        if file.seed.is_none() {
            return Err(CliError::Input(
                "a seed is required: pass --seed or set `seed` in the config file".into(),
            ));
        }
        Ok((file, self.out, self.out_format))
    }
}

pub fn cmd_type1(args: GridArgs) -> Result<(), CliError> {
    let (file, out, format) = args.into_file()?;
    let grid = file.into_grid()?;
    let results = run_type1(&grid)?;
    finish(&results, out.as_deref(), format)
}

pub fn cmd_power(args: PowerArgs) -> Result<(), CliError> {
    let (mut file, out, format) = args.grid.into_file()?;
    if args.mean_fns.is_some() {
        file.mean_fns = args.mean_fns;
    }
    if args.xi_values.is_some() {
        file.xi_values = args.xi_values;
    }
    file.replicates.get_or_insert(DEFAULT_POWER_REPLICATES);
    let grid = file.into_grid()?;
    let results = run_power(&grid)?;
    finish(&results, out.as_deref(), format)
}

fn finish(
    results: &[CellResult],
    out: Option<&Path>,
    format: Option<OutFormat>,
) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    for r in results {
        let c = &r.cell;
        let sizes: Vec<String> = c.n_per_group.iter().map(usize::to_string).collect();
        writeln!(
            stdout,
            "{} {} {} n={} S={} xi={:.2} {}: rejection rate {:.4} (se {:.4}, {} reps)",
            c.test_name(),
            c.coeff_dist.label(),
            c.mean_fn.label(),
            sizes.join(":"),
            c.grid_size,
            c.xi,
            c.summary,
            r.rejection_rate,
            r.mc_stderr,
            r.replicates_used
        )
        .map_err(|e| CliError::Internal(format!("writing to stdout: {e}")))?;
    }
    if let Some(path) = out {
        let format = match format {
            Some(OutFormat::Jsonl) => ResultFormat::Jsonl,
            Some(OutFormat::Csv) => ResultFormat::Csv,
            None if path.extension().is_some_and(|e| e == "jsonl") => ResultFormat::Jsonl,
            None => ResultFormat::Csv,
        };
        write_results(results, path, format).map_err(|e| CliError::Internal(e.to_string()))?;
        eprintln!("wrote {} rows to {}", results.len(), path.display());
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimLayout {
    Wide,
    Long,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Master seed
    #[arg(long)]
    seed: u64,
    /// Group sizes, e.g. 10:10 or 10:10:10
    #[arg(long, value_parser = parse_scheme, default_value = "10:10")]
    n_per_group: Scheme,
    /// Grid length S (occasions s_k = k/S)
    #[arg(long, default_value_t = 40)]
    grid_size: usize,
    /// Number of Karhunen-Loève terms
    #[arg(long, default_value_t = drt_core::simgen::DEFAULT_BASIS_SIZE)]
    basis_size: usize,
    /// gaussian | t2
    #[arg(long, default_value = "gaussian")]
    coeff_dist: CoeffDist,
    /// mu1 | mu2 | mu3 | none: shape of the group mean shift
    #[arg(long, default_value = "mu1")]
    mean_fn: MeanFn,
    /// Shift size ξ (0 gives the null)
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    /// none | white | ar1 | ar1:<rho>
    #[arg(long, default_value = "ar1")]
    noise: NoiseModel,
    #[arg(long, value_enum, default_value_t = SimLayout::Wide)]
    layout: SimLayout,
    /// Output CSV path (stdout when omitted)
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = SimConfig {
        n_per_group: args.n_per_group.0,
        grid_size: args.grid_size,
        basis_size: args.basis_size,
        coeff_dist: args.coeff_dist,
        mean_fn: args.mean_fn,
        xi: args.xi,
        noise: args.noise,
        seed: args.seed,
    };
    let data = generate_dataset(&config)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(
            std::fs::File::create(path)
                .map_err(|e| CliError::Internal(format!("creating {}: {e}", path.display())))?,
        ),
        None => Box::new(std::io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| CliError::Internal(format!("writing CSV: {e}"));
    let values = data.values();
    match args.layout {
        SimLayout::Wide => {
            let mut header = vec!["id".to_string(), "group".to_string()];
            header.extend(data.grid().iter().map(|s| s.to_string()));
            w.write_record(&header).map_err(io)?;
            for i in 0..data.n() {
                let mut row = vec![(i + 1).to_string(), data.groups()[i].to_string()];
                row.extend(values.row(i).iter().map(|v| v.to_string()));
                w.write_record(&row).map_err(io)?;
            }
        }
        SimLayout::Long => {
            w.write_record(["id", "group", "s", "value"]).map_err(io)?;
            for i in 0..data.n() {
                for (j, s) in data.grid().iter().enumerate() {
                    w.write_record([
                        (i + 1).to_string(),
                        data.groups()[i].to_string(),
                        s.to_string(),
                        values[(i, j)].to_string(),
                    ])
                    .map_err(io)?;
                }
            }
        }
    }
    w.flush()
        .map_err(|e| CliError::Internal(format!("writing CSV: {e}")))?;
    Ok(())
}
