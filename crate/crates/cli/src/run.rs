use std::io::Write;
use std::path::Path;

use abcp::ab_kernel::{ct_simulate, poisson_simulate, AbKernel, CtChainConfig, DEFAULT_TREE_CAP};
use abcp::analysis::{property_report, stationary, Suite};
use abcp::combinatorics::{enumerate_partitions, enumerate_trees};
use abcp::cp_kernel::{cp_matrix, CpKernel, DEFAULT_PARTITION_CAP};
use abcp::io::to_newick;
use abcp::mass_frag::{mass_ct_simulate, mass_step, MassFragmentation};
use abcp::paintbox::{MixtureMeasure, RankedMassPartition};
use abcp::streams::seeded;
use abcp::weighted_trees::{weighted_sample, RateForm, WeightedTree};
use abcp::{FragmentationTree, GroundSet};
use anyhow::{anyhow, bail, Context};
use serde::Serialize;
use serde_json::json;

use crate::args::{Cli, Clock, Command, Format, Level, Model, RateFormArg, Start};

pub enum Outcome {
    Done,
    SuiteFailed,
}

pub enum Failure {
    /// Bad flags or inputs, detected before any output.
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

type Run<T> = Result<T, Failure>;

trait ConfigContext<T> {
    fn config(self) -> Run<T>;
}

impl<T, E: Into<anyhow::Error>> ConfigContext<T> for Result<T, E> {
    fn config(self) -> Run<T> {
        self.map_err(|e| Failure::Config(e.into()))
    }
}

trait RuntimeContext<T> {
    fn runtime(self) -> Run<T>;
}

impl<T, E: Into<anyhow::Error>> RuntimeContext<T> for Result<T, E> {
    fn runtime(self) -> Run<T> {
        self.map_err(|e| Failure::Runtime(e.into()))
    }
}

fn emit(out: &mut dyn Write, record: &impl Serialize) -> Run<()> {
    let mut line = serde_json::to_string(record).runtime()?;
    line.push('\n');
    out.write_all(line.as_bytes()).runtime()
}

/// A JSON file, or one of the built-in names.
fn load_nu(spec: Option<&str>, k: usize) -> anyhow::Result<MixtureMeasure> {
    Ok(match spec {
        None => MixtureMeasure::point(RankedMassPartition::uniform(k)),
        Some(s) if Path::new(s).is_file() => {
            let text = std::fs::read_to_string(s).with_context(|| format!("reading {s}"))?;
            MixtureMeasure::from_json(&text).with_context(|| format!("parsing {s}"))?
        }
        Some("uniform-half") => MixtureMeasure::point(RankedMassPartition::uniform(2)),
        Some("mixture") => MixtureMeasure::finite(vec![
            (RankedMassPartition::unit(), 0.5),
            (RankedMassPartition::uniform(2), 0.5),
        ])?,
        Some("dirichlet") => MixtureMeasure::dirichlet(k, 1.0)?,
        Some(s) => bail!("--nu {s:?} is neither a file nor a built-in measure"),
    })
}

fn check_model(m: &Model) -> anyhow::Result<MixtureMeasure> {
    if m.n == 0 {
        bail!("--n must be at least 1");
    }
    if m.k == 0 {
        bail!("--k must be at least 1");
    }
    let nu = load_nu(m.nu.as_deref(), m.k)?;
    if nu.dim() > m.k {
        bail!("the measure has {} masses but k = {}", nu.dim(), m.k);
    }
    Ok(nu)
}

fn tree_kernel(m: &Model) -> anyhow::Result<(MixtureMeasure, AbKernel<CpKernel>)> {
    let nu = check_model(m)?;
    if nu.is_degenerate() && m.n >= 2 {
        bail!("the measure never splits, so tree chains cannot move");
    }
    let ab = AbKernel::cp(nu.clone(), m.k)?;
    Ok((nu, ab))
}

fn start_tree(start: &Start, m: &Model) -> anyhow::Result<FragmentationTree> {
    let t = match &start.start {
        Some(text) => serde_json::from_str::<FragmentationTree>(text).context("parsing --start")?,
        None => FragmentationTree::caterpillar(&GroundSet::range(m.n)),
    };
    if t.ground() != GroundSet::range(m.n).as_slice() {
        bail!("--start must be a tree on 1..={}", m.n);
    }
    if t.degree() > m.k {
        bail!("start tree has a vertex with {} children but k = {}", t.degree(), m.k);
    }
    Ok(t)
}

fn clock(c: &Clock) -> anyhow::Result<CtChainConfig> {
    Ok(CtChainConfig::new(c.lambda, c.horizon)?)
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Run<Outcome> {
    let mut rng = seeded(cli.seed);
    match &cli.command {
        Command::Enumerate { object, n, k } => {
            if *n == 0 || *k == Some(0) {
                return Err(Failure::Config(anyhow!("--n and --k must be at least 1")));
            }
            match object {
                Level::Partition => enumerate_partitions(*n, *k).iter().try_for_each(|p| emit(out, p))?,
                Level::Tree => enumerate_trees(*n, *k).iter().try_for_each(|t| emit(out, t))?,
            }
        }
        Command::Kernel { level, model } => match level {
            Level::Partition => {
                let nu = check_model(model).config()?;
                emit(out, &cp_matrix(model.n, model.k, &nu, DEFAULT_PARTITION_CAP).config()?)?;
            }
            Level::Tree => {
                let (_, ab) = tree_kernel(model).config()?;
                emit(out, &ab.matrix(model.n, DEFAULT_TREE_CAP).config()?)?;
            }
        },
        Command::Chain { model, steps, start } => {
            let (_, ab) = tree_kernel(model).config()?;
            let mut t = start_tree(start, model).config()?;
            emit(out, &json!({ "step": 0, "tree": t }))?;
            for step in 1..=*steps {
                t = ab.sample(&t, &mut rng).runtime()?;
                emit(out, &json!({ "step": step, "tree": t }))?;
            }
        }
        Command::CtChain { model, clock: c, start } => {
            let (_, ab) = tree_kernel(model).config()?;
            let t0 = start_tree(start, model).config()?;
            let cfg = clock(c).config()?;
            for (time, t) in ct_simulate(&t0, &ab, &cfg, &mut rng).runtime()? {
                emit(out, &json!({ "time": time, "tree": t }))?;
            }
        }
        Command::PoissonChain { model, clock: c, start } => {
            let (nu, _) = tree_kernel(model).config()?;
            let t0 = start_tree(start, model).config()?;
            let cfg = clock(c).config()?;
            let path = poisson_simulate(&t0, &nu, model.k, &cfg, &mut rng).runtime()?;
            emit(out, &json!({ "time": 0.0, "tree": t0, "changed": false }))?;
            let mut jumps = path.path.iter().skip(1).peekable();
            let mut state = &t0;
            for &time in &path.atom_times {
                let changed = jumps.peek().is_some_and(|(t, _)| *t == time);
                if changed {
                    state = &jumps.next().expect("peeked").1;
                }
                emit(out, &json!({ "time": time, "tree": state, "changed": changed }))?;
            }
        }
        Command::MassChain {
            k,
            nu,
            depth,
            steps,
            horizon,
            lambda,
        } => {
            if *k == 0 || *depth == 0 {
                return Err(Failure::Config(anyhow!("--k and --depth must be at least 1")));
            }
            let nu = load_nu(nu.as_deref(), *k).config()?;
            if nu.dim() > *k {
                return Err(Failure::Config(anyhow!(
                    "the measure has {} masses but k = {k}",
                    nu.dim()
                )));
            }
            let m0 = MassFragmentation::trivial();
            match (steps, horizon) {
                (Some(steps), None) => {
                    let mut m = m0;
                    emit(out, &json!({ "step": 0, "state": m }))?;
                    for step in 1..=*steps {
                        m = mass_step(&m, &nu, *k, *depth, &mut rng).runtime()?;
                        emit(out, &json!({ "step": step, "state": m }))?;
                    }
                }
                (None, Some(h)) => {
                    let cfg = CtChainConfig::new(*lambda, *h).config()?;
                    let path = mass_ct_simulate(&m0, &nu, *k, &cfg, *depth, &mut rng).runtime()?;
                    for (time, m) in path.path {
                        emit(out, &json!({ "time": time, "state": m }))?;
                    }
                }
                _ => return Err(Failure::Config(anyhow!("give exactly one of --steps and --horizon"))),
            }
        }
        Command::WeightedChain {
            model,
            steps,
            theta,
            format,
            rate_form,
            start,
        } => {
            let (nu, _) = tree_kernel(model).config()?;
            if !(theta.is_finite() && *theta > 0.0) {
                return Err(Failure::Config(anyhow!("--theta must be positive")));
            }
            let form = match rate_form {
                RateFormArg::PreviousTree => RateForm::PreviousTree,
                RateFormArg::NextTree => RateForm::NextTree,
            };
            let mut w = WeightedTree::unweighted(start_tree(start, model).config()?);
            let mut write = |step: usize, w: &WeightedTree| match format {
                Format::Json => emit(out, &json!({ "step": step, "tree": w })),
                Format::Newick => writeln!(out, "{}", to_newick(w)).runtime(),
                Format::Text => writeln!(out, "{step}\t{}", to_newick(w)).runtime(),
            };
            write(0, &w)?;
            for step in 1..=*steps {
                w = weighted_sample(&w, &nu, model.k, *theta, form, &mut rng).runtime()?;
                write(step, &w)?;
            }
        }
        Command::Check { suite, model } => {
            let suite: Suite = suite.parse().config()?;
            let nu = check_model(model).config()?;
            let report = property_report(suite, model.n, model.k, &nu).runtime()?;
            emit(out, &report)?;
            if !report.passed {
                eprint!("{report}");
                return Ok(Outcome::SuiteFailed);
            }
        }
        Command::Stationary { level, model } => match level {
            Level::Partition => {
                let nu = check_model(model).config()?;
                let m = cp_matrix(model.n, model.k, &nu, DEFAULT_PARTITION_CAP).config()?;
                let rho = stationary(&m).runtime()?;
                emit(out, &json!({ "states": m.states(), "distribution": rho }))?;
            }
            Level::Tree => {
                let (_, ab) = tree_kernel(model).config()?;
                let m = ab.matrix(model.n, DEFAULT_TREE_CAP).config()?;
                let rho = stationary(&m).runtime()?;
                emit(out, &json!({ "states": m.states(), "distribution": rho }))?;
            }
        },
    }
    Ok(Outcome::Done)
}
