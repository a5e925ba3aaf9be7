use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use airyproc::dist::Route;

pub const MIN_NODES: usize = 8;
pub const MAX_NODES: usize = 512;
pub const MAX_SWEEP_POINTS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "airyproc",
    version,
    about = "Joint distribution functions of the Airy process"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint CDF at a single point.
    Joint(PointArgs),
    /// Joint CDF and log-gradient over a threshold lattice.
    Sweep(PointArgs),
    /// Run the invariant suite and report each check.
    Validate(CommonArgs),
    /// One-point distribution over a threshold lattice (m = 1, τ = 0).
    F2(F2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RouteArg {
    Fredholm,
    Ode,
    Both,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Self {
        match r {
            RouteArg::Fredholm => Route::Fredholm,
            RouteArg::Ode => Route::Ode,
            RouteArg::Both => Route::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Gauss–Legendre nodes per block.
    #[arg(long, default_value_t = 80, value_parser = parse_nodes)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub output: Format,
    /// Write to this file instead of standard output.
    #[arg(long = "out")]
    pub out_path: Option<PathBuf>,
    /// Replace `--out` if it already exists.
    #[arg(long)]
    pub overwrite: bool,
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Comma-separated, strictly increasing times.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_times)]
    pub tau: Times,
    /// One entry per time: a value or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_lattice)]
    pub xi: Lattice,
    #[arg(long, value_enum, default_value_t = RouteArg::Fredholm)]
    pub route: RouteArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct F2Args {
    /// A value or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_lattice)]
    pub xi: Lattice,
    #[arg(long, value_enum, default_value_t = RouteArg::Fredholm)]
    pub route: RouteArg,
    #[command(flatten)]
    pub common: CommonArgs,
}

fn parse_nodes(s: &str) -> Result<usize, String> {
    let n: usize = s.parse().map_err(|e| format!("{e}"))?;
    if !(MIN_NODES..=MAX_NODES).contains(&n) {
        return Err(format!("must be in [{MIN_NODES}, {MAX_NODES}]"));
    }
    Ok(n)
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

/// Comma-separated times, kept as one value so clap does not split it.
#[derive(Debug, Clone, PartialEq)]
pub struct Times(pub Vec<f64>);

pub fn parse_times(s: &str) -> Result<Times, String> {
    s.split(',')
        .map(parse_number)
        .collect::<Result<_, _>>()
        .map(Times)
}

/// Values taken by one threshold coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Axis {
    Fixed(f64),
    Range { start: f64, stop: f64, step: f64 },
}

impl Axis {
    pub fn len(&self) -> usize {
        match *self {
            Axis::Fixed(_) => 1,
            Axis::Range { start, stop, step } => {
                ((stop - start) / step + 1e-9).floor() as usize + 1
            }
        }
    }

    /// The k-th value; computed by multiplication so values do not drift.
    pub fn value(&self, k: usize) -> f64 {
        match *self {
            Axis::Fixed(v) => v,
            Axis::Range { start, step, .. } => start + k as f64 * step,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub axes: Vec<Axis>,
}

impl Lattice {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    /// Number of points, saturating on overflow.
    pub fn size(&self) -> usize {
        self.axes
            .iter()
            .fold(1usize, |acc, a| acc.saturating_mul(a.len()))
    }

    /// Points in lexicographic order of lattice indices, first axis slowest.
    pub fn points(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.size());
        let mut idx = vec![0usize; self.dim()];
        loop {
            out.push(
                idx.iter()
                    .zip(&self.axes)
                    .map(|(&k, a)| a.value(k))
                    .collect(),
            );
            let mut d = self.dim();
            loop {
                if d == 0 {
                    return out;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    pub fn single(&self) -> Option<Vec<f64>> {
        (self.size() == 1).then(|| self.points().remove(0))
    }
}

pub fn parse_lattice(s: &str) -> Result<Lattice, String> {
    let axes = s
        .split(',')
        .map(|part| {
            let fields: Vec<&str> = part.split(':').collect();
            match fields.as_slice() {
                [v] => Ok(Axis::Fixed(parse_number(v)?)),
                [a, b, c] => {
                    let (start, stop, step) =
                        (parse_number(a)?, parse_number(b)?, parse_number(c)?);
                    if step <= 0.0 {
                        return Err(format!("step in '{part}' must be positive"));
                    }
                    if stop < start {
                        return Err(format!("'{part}' has stop below start"));
                    }
                    Ok(Axis::Range { start, stop, step })
                }
                _ => Err(format!("'{part}' is neither a value nor start:stop:step")),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Lattice { axes })
}
