use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use coherence_core::closed_forms::{
    cycle_nc_optimal_label, cycle_nc_optimal_value, cycle_nc_two_coherence, cycle_nf_coherence,
    cycle_nf_optimal, path_nf_coherence, path_nf_optimal, tree_omega,
    tree_optimal_two_with_fallback, GapVector, NcCycleRoute, TreeGeometry,
};
use coherence_core::electrical::{resistance, ResistanceOracle};
use coherence_core::io::GraphSpec;
use coherence_core::selection::{brute_force_select, SearchOptions, DEFAULT_BUDGET};
use coherence_core::sim::{simulate_nc, simulate_nf, SimConfig};
use coherence_core::sweep::{rows_to_csv, run_sweep, Family, SweepRequest};
use coherence_core::treegrow::growth_trajectory;
use coherence_core::{
    coherence_nc, coherence_nf, leader_free_coherence, perfect_tree, Dynamics, Error, LeaderSet,
    Method, NodeId, RealGraph, RealReport, StubbornnessMap,
};
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "coherence-lab",
    version,
    about = "Coherence of leader-follower consensus networks"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Node ids on the command line and in the output start at 1.
    #[arg(long, global = true)]
    one_based: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum DynamicsArg {
    Nf,
    Nc,
    Free,
}

impl From<DynamicsArg> for Dynamics {
    fn from(d: DynamicsArg) -> Self {
        match d {
            DynamicsArg::Nf => Dynamics::NoiseFree,
            DynamicsArg::Nc => Dynamics::NoiseCorrupted,
            DynamicsArg::Free => Dynamics::LeaderFree,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Trace,
    Resistance,
    ClosedForm,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Coherence of a graph for a given leader set.
    Coherence {
        #[arg(long)]
        graph: String,
        /// Comma-separated leader ids (not needed for --dynamics free).
        #[arg(long)]
        leaders: Option<String>,
        /// One stubbornness value for every leader, or one per leader.
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Nf)]
        dynamics: DynamicsArg,
        #[arg(long, value_enum, default_value_t = MethodArg::Trace)]
        method: MethodArg,
    },
    /// Effective resistance between two nodes, or from a node to a leader set.
    Resistance {
        #[arg(long)]
        graph: String,
        /// `u,v` for a two-point resistance.
        #[arg(long, conflicts_with_all = ["node", "leaders"])]
        nodes: Option<String>,
        #[arg(long, requires = "leaders")]
        node: Option<usize>,
        #[arg(long, requires = "node")]
        leaders: Option<String>,
    },
    /// Exhaustive search for the best k leaders.
    Select {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Nf)]
        dynamics: DynamicsArg,
        /// Uniform stubbornness for noise-corrupted leaders.
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
    /// Closed-form values and optimal placements.
    ClosedForm {
        #[command(subcommand)]
        which: ClosedFormCommand,
    },
    /// Grow a perfect binary tree one leaf at a time and track every
    /// shallow leader pair.
    GrowTree {
        #[arg(long, default_value_t = 5)]
        h0: u32,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        /// Also report the global two-leader optimum per step.
        #[arg(long)]
        global: bool,
    },
    /// Stochastic simulation of the dynamics.
    Simulate {
        #[arg(long)]
        graph: String,
        #[arg(long)]
        leaders: String,
        #[arg(long)]
        kappa: Option<String>,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Nf)]
        dynamics: DynamicsArg,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        #[arg(long, default_value_t = 0.25)]
        burn_in: f64,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Optimal coherence over a range of sizes.
    Sweep {
        /// cycle, path, or tree:M
        #[arg(long)]
        family: String,
        /// Comma-separated sizes (heights for trees).
        #[arg(long)]
        sizes: String,
        #[arg(long, default_value_t = 2)]
        k: usize,
        #[arg(long, value_enum, default_value_t = DynamicsArg::Nf)]
        dynamics: DynamicsArg,
        #[arg(long, default_value_t = 1.0)]
        kappa: f64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u128,
    },
}

#[derive(Subcommand, Debug)]
enum ClosedFormCommand {
    /// Noise-free cycle: value of --gaps, or the optimum for --n and --k.
    CycleNf {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        gaps: Option<String>,
    },
    /// Noise-free path: value of --gaps, or the optimum for --n and --k.
    PathNf {
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        k: Option<u64>,
        #[arg(long)]
        gaps: Option<String>,
    },
    /// Two noise-free leaders in a perfect tree.
    Tree {
        #[arg(long)]
        arity: u32,
        #[arg(long)]
        height: u32,
        #[arg(long, requires = "d_xy")]
        d_xr: Option<u32>,
        #[arg(long, requires = "d_xr")]
        d_xy: Option<u32>,
    },
    /// Two unit-stubbornness noise-corrupted leaders on a cycle, at labels
    /// 1 and --i; without --i, the optimum.
    CycleNc {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        i: Option<u64>,
        #[arg(long, value_enum, default_value_t = RouteArg::Trace)]
        route: RouteArg,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RouteArg {
    Trace,
    Polynomial,
}

/// What a command produced: a JSON document plus, where a table makes
/// sense, its CSV rendering.
struct Output {
    json: Value,
    csv: Option<String>,
}

impl Output {
    fn json(json: Value) -> Self {
        Output { json, csv: None }
    }
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>, Error> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| Error::BadParameter(format!("bad entry `{t}` in --{what}")))
        })
        .collect()
}

struct Ctx {
    one_based: bool,
}

impl Ctx {
    fn node(&self, id: usize) -> Result<usize, Error> {
        if self.one_based {
            id.checked_sub(1)
                .ok_or_else(|| Error::BadParameter("node ids start at 1 with --one-based".into()))
        } else {
            Ok(id)
        }
    }

    fn leaders(&self, s: &str) -> Result<LeaderSet, Error> {
        let ids = parse_list::<usize>("leaders", s)?
            .into_iter()
            .map(|v| self.node(v))
            .collect::<Result<Vec<_>, _>>()?;
        LeaderSet::new(ids)
    }

    fn shown(&self, v: NodeId) -> usize {
        v.0 + self.one_based as usize
    }

    fn shown_set(&self, s: &LeaderSet) -> Vec<usize> {
        s.iter().map(|v| self.shown(v)).collect()
    }
}

fn kappa_map(leaders: &LeaderSet, kappa: Option<&str>) -> Result<StubbornnessMap<f64>, Error> {
    let Some(text) = kappa else {
        return Ok(StubbornnessMap::default());
    };
    let values = parse_list::<f64>("kappa", text)?;
    match values.as_slice() {
        [single] => StubbornnessMap::uniform(*single),
        _ => StubbornnessMap::per_leader(leaders, &values),
    }
}

fn load(graph: &str) -> Result<RealGraph, Error> {
    GraphSpec::parse(graph)?.build()
}

fn report_json(ctx: &Ctx, r: &RealReport) -> Value {
    let mut v = serde_json::to_value(r).expect("reports serialize");
    v["leaders"] = json!(r.leaders.iter().map(|&l| ctx.shown(l)).collect::<Vec<_>>());
    v
}

fn report_csv(ctx: &Ctx, r: &RealReport) -> String {
    let join = |xs: Vec<String>| xs.join(";");
    format!(
        "value,dynamics,method,graph,leaders,kappa\n{},{},{},{},{},{}\n",
        r.value,
        r.dynamics,
        r.method,
        r.graph.clone().unwrap_or_default(),
        join(
            r.leaders
                .iter()
                .map(|&l| ctx.shown(l).to_string())
                .collect()
        ),
        join(r.kappa.iter().flatten().map(|k| k.to_string()).collect()),
    )
}

fn cmd_coherence(
    ctx: &Ctx,
    graph: &str,
    leaders: Option<&str>,
    kappa: Option<&str>,
    dynamics: Dynamics,
    method: MethodArg,
) -> Result<Output, Error> {
    let spec = GraphSpec::parse(graph)?;
    let g: RealGraph = spec.build()?;
    let report = if dynamics == Dynamics::LeaderFree {
        if method != MethodArg::Trace {
            return Err(Error::BadParameter(
                "leader-free coherence uses the trace method".into(),
            ));
        }
        leader_free_coherence(&g)?
    } else {
        let s = ctx
            .leaders(leaders.ok_or_else(|| Error::BadParameter("--leaders is required".into()))?)?;
        let k = kappa_map(&s, kappa)?;
        match (method, dynamics) {
            (MethodArg::ClosedForm, Dynamics::NoiseFree) => {
                s.validate_for(&g)?;
                let n = g.node_count() as u64;
                let value = match spec {
                    GraphSpec::Cycle(_) => {
                        cycle_nf_coherence(&GapVector::from_cycle_leaders(n, &s)?)?
                    }
                    GraphSpec::Path(_) => path_nf_coherence(&GapVector::from_path_leaders(n, &s)?)?,
                    _ => {
                        return Err(Error::BadParameter(
                            "closed-form coherence needs a cycle or path graph".into(),
                        ))
                    }
                };
                RealReport::new(value, dynamics, Method::ClosedForm, s.as_slice())
            }
            (MethodArg::ClosedForm, _) => {
                return Err(Error::BadParameter(
                    "closed-form coherence is available for noise-free leaders only".into(),
                ))
            }
            (m, Dynamics::NoiseFree) => coherence_nf(&g, &s, core_method(m))?,
            (m, _) => coherence_nc(&g, &s, &k, core_method(m))?,
        }
    }
    .with_graph(graph);
    Ok(Output {
        json: report_json(ctx, &report),
        csv: Some(report_csv(ctx, &report)),
    })
}

fn core_method(m: MethodArg) -> Method {
    match m {
        MethodArg::Trace => Method::Trace,
        MethodArg::Resistance => Method::Resistance,
        MethodArg::ClosedForm => Method::ClosedForm,
    }
}

fn cmd_resistance(
    ctx: &Ctx,
    graph: &str,
    nodes: Option<&str>,
    node: Option<usize>,
    leaders: Option<&str>,
) -> Result<Output, Error> {
    let g = load(graph)?;
    let (json, value) = match (nodes, node, leaders) {
        (Some(pair), _, _) => {
            let ids = parse_list::<usize>("nodes", pair)?;
            let [a, b] = ids.as_slice() else {
                return Err(Error::BadParameter("--nodes takes exactly two ids".into()));
            };
            let (a, b) = (NodeId(ctx.node(*a)?), NodeId(ctx.node(*b)?));
            let r = resistance(&g, a, b)?;
            (
                json!({"graph": graph, "nodes": [ctx.shown(a), ctx.shown(b)], "value": r}),
                r,
            )
        }
        (None, Some(u), Some(set)) => {
            let u = NodeId(ctx.node(u)?);
            let s = ctx.leaders(set)?;
            g.check_node(u)?;
            let oracle = ResistanceOracle::new(&g)?;
            let r = oracle.set_resistances(&s)?[u.0];
            (
                json!({"graph": graph, "node": ctx.shown(u), "leaders": ctx.shown_set(&s), "value": r}),
                r,
            )
        }
        _ => {
            return Err(Error::BadParameter(
                "give --nodes u,v or --node u --leaders S".into(),
            ))
        }
    };
    Ok(Output {
        json,
        csv: Some(format!("value\n{value}\n")),
    })
}

fn cmd_select(
    ctx: &Ctx,
    graph: &str,
    k: usize,
    dynamics: Dynamics,
    kappa: Option<f64>,
    budget: u128,
) -> Result<Output, Error> {
    let spec = GraphSpec::parse(graph)?;
    let g: RealGraph = spec.build()?;
    let kappa = match kappa {
        Some(v) => StubbornnessMap::uniform(v)?,
        None => StubbornnessMap::default(),
    };
    let options = SearchOptions {
        budget,
        ..SearchOptions::default()
    };
    let found = brute_force_select(&g, k, dynamics, &kappa, &options)?;
    let mut json = serde_json::to_value(&found).expect("results serialize");
    json["graph"] = json!(graph);
    json["optimal_sets"] = json!(found
        .optimal_sets
        .iter()
        .map(|s| ctx.shown_set(s))
        .collect::<Vec<_>>());
    if let (GraphSpec::Tree { arity, height }, 2) = (&spec, k) {
        let tree = perfect_tree::<f64>(*arity, *height)?;
        let geometries: Vec<Value> = found
            .optimal_sets
            .iter()
            .map(|s| {
                let (a, b) = (s.as_slice()[0], s.as_slice()[1]);
                let (la, lb) = (tree.level[a.0], tree.level[b.0]);
                json!({"d_xr": la.min(lb), "d_yr": la.max(lb), "d_xy": tree.hops(a, b)})
            })
            .collect();
        json["geometries"] = json!(geometries);
    }
    let mut csv = String::from("rank,leaders,value\n");
    for (i, s) in found.optimal_sets.iter().enumerate() {
        let ids: Vec<String> = ctx.shown_set(s).iter().map(|v| v.to_string()).collect();
        csv.push_str(&format!("{},{},{}\n", i, ids.join(";"), found.value));
    }
    Ok(Output {
        json,
        csv: Some(csv),
    })
}

fn gaps_of(s: &str) -> Result<Vec<u64>, Error> {
    parse_list::<u64>("gaps", s)
}

fn need<T>(v: Option<T>, flag: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::BadParameter(format!("--{flag} is required")))
}

fn cmd_closed_form(ctx: &Ctx, which: &ClosedFormCommand) -> Result<Output, Error> {
    let json = match which {
        ClosedFormCommand::CycleNf { n, k, gaps } => match gaps {
            Some(g) => {
                let c = GapVector::cycle(gaps_of(g)?)?;
                json!({"gaps": c.gaps(), "n": c.node_count(), "value": cycle_nf_coherence::<f64>(&c)?})
            }
            None => {
                let o = cycle_nf_optimal::<f64>(need(*n, "n")?, need(*k, "k")?)?;
                let leaders = GapVector::cycle(o.gaps.clone())?.leaders();
                json!({
                    "n": o.n, "k": o.k, "gaps": o.gaps, "value": o.value,
                    "leaders": ctx.shown_set(&leaders),
                })
            }
        },
        ClosedFormCommand::PathNf { n, k, gaps } => match gaps {
            Some(g) => {
                let c = GapVector::path(gaps_of(g)?)?;
                json!({"gaps": c.gaps(), "n": c.node_count(), "value": path_nf_coherence::<f64>(&c)?})
            }
            None => {
                let o = path_nf_optimal::<f64>(need(*n, "n")?, need(*k, "k")?)?;
                let leaders: Vec<usize> = o.leaders.iter().map(|&v| ctx.shown(NodeId(v))).collect();
                json!({
                    "n": n, "k": k, "gaps": o.gaps, "value": o.value, "leaders": leaders,
                    "rounded": o.rounded, "rounded_is_optimal": o.rounded_is_optimal,
                })
            }
        },
        ClosedFormCommand::Tree {
            arity,
            height,
            d_xr,
            d_xy,
        } => {
            match (d_xr, d_xy) {
                (Some(a), Some(d)) => {
                    let geom = TreeGeometry::new(*arity, *height, *a, *d)?;
                    let omega = tree_omega::<f64>(&geom)?;
                    json!({"geometry": geom, "omega": omega, "value": omega / 2.0})
                }
                _ => {
                    let o = tree_optimal_two_with_fallback::<f64>(*arity, *height)?;
                    if o.exhaustive_fallback {
                        eprintln!("warning: height {height} is below 4; placement found by exhaustive search");
                    }
                    json!({"geometry": o.geometry, "value": o.value, "exhaustive_fallback": o.exhaustive_fallback})
                }
            }
        }
        ClosedFormCommand::CycleNc { n, i, route } => {
            let route = match route {
                RouteArg::Trace => NcCycleRoute::Trace,
                RouteArg::Polynomial => NcCycleRoute::Polynomial,
            };
            match i {
                Some(i) => {
                    json!({"n": n, "i": i, "value": cycle_nc_two_coherence::<f64>(*n, *i, route)?})
                }
                None => json!({
                    "i_opt": cycle_nc_optimal_label(*n)?,
                    "value": cycle_nc_optimal_value::<f64>(*n)?,
                }),
            }
        }
    };
    Ok(Output::json(json))
}

fn cmd_simulate(
    ctx: &Ctx,
    graph: &str,
    leaders: &str,
    kappa: Option<&str>,
    dynamics: Dynamics,
    cfg: SimConfig,
) -> Result<Output, Error> {
    let g = load(graph)?;
    let s = ctx.leaders(leaders)?;
    let (estimate, analytic) = match dynamics {
        Dynamics::NoiseFree => (
            simulate_nf(&g, &s, &cfg)?,
            coherence_nf(&g, &s, Method::Trace)?.value,
        ),
        Dynamics::NoiseCorrupted => {
            let k = kappa_map(&s, kappa)?;
            (
                simulate_nc(&g, &s, &k, &cfg)?,
                coherence_nc(&g, &s, &k, Method::Trace)?.value,
            )
        }
        Dynamics::LeaderFree => {
            return Err(Error::BadParameter(
                "simulation needs noise-free or noise-corrupted leaders".into(),
            ))
        }
    };
    let json = json!({
        "graph": graph,
        "leaders": ctx.shown_set(&s),
        "dynamics": dynamics,
        "value": estimate.value,
        "stderr": estimate.stderr,
        "trials": estimate.trials,
        "analytic": analytic,
        "seed": cfg.seed,
    });
    let csv = format!(
        "value,stderr,trials,analytic\n{},{},{},{}\n",
        estimate.value, estimate.stderr, estimate.trials, analytic
    );
    Ok(Output {
        json,
        csv: Some(csv),
    })
}

fn cmd_sweep(
    family: &str,
    sizes: &str,
    k: usize,
    dynamics: Dynamics,
    kappa: f64,
    budget: u128,
) -> Result<Output, Error> {
    let family = match family.split_once(':') {
        None if family == "cycle" => Family::Cycle,
        None if family == "path" => Family::Path,
        Some(("tree", m)) => Family::Tree {
            arity: m
                .parse()
                .map_err(|_| Error::BadParameter(format!("bad tree arity `{m}`")))?,
        },
        _ => return Err(Error::BadParameter(format!("unknown family `{family}`"))),
    };
    let req = SweepRequest {
        family,
        sizes: parse_list("sizes", sizes)?,
        k,
        dynamics,
        kappa,
        options: SearchOptions {
            budget,
            ..SearchOptions::default()
        },
    };
    let rows = run_sweep(&req)?;
    Ok(Output {
        json: json!({ "rows": rows }),
        csv: Some(rows_to_csv(&rows)),
    })
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let ctx = Ctx {
        one_based: cli.common.one_based,
    };
    match &cli.command {
        Command::Coherence {
            graph,
            leaders,
            kappa,
            dynamics,
            method,
        } => cmd_coherence(
            &ctx,
            graph,
            leaders.as_deref(),
            kappa.as_deref(),
            (*dynamics).into(),
            *method,
        ),
        Command::Resistance {
            graph,
            nodes,
            node,
            leaders,
        } => cmd_resistance(&ctx, graph, nodes.as_deref(), *node, leaders.as_deref()),
        Command::Select {
            graph,
            k,
            dynamics,
            kappa,
            budget,
        } => cmd_select(&ctx, graph, *k, (*dynamics).into(), *kappa, *budget),
        Command::ClosedForm { which } => cmd_closed_form(&ctx, which),
        Command::GrowTree { h0, steps, global } => {
            let traj = growth_trajectory::<f64>(*h0, *steps, *global)?;
            let csv = traj.to_csv();
            Ok(Output {
                json: serde_json::to_value(&traj).expect("trajectories serialize"),
                csv: Some(csv),
            })
        }
        Command::Simulate {
            graph,
            leaders,
            kappa,
            dynamics,
            dt,
            horizon,
            burn_in,
            trials,
            seed,
        } => {
            let cfg = SimConfig {
                dt: *dt,
                horizon: *horizon,
                burn_in: *burn_in,
                trials: *trials,
                seed: *seed,
            };
            cmd_simulate(
                &ctx,
                graph,
                leaders,
                kappa.as_deref(),
                (*dynamics).into(),
                cfg,
            )
        }
        Command::Sweep {
            family,
            sizes,
            k,
            dynamics,
            kappa,
            budget,
        } => cmd_sweep(family, sizes, *k, (*dynamics).into(), *kappa, *budget),
    }
}

fn configure_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("COHERENCE_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw.trim().parse().ok().filter(|&t| t > 0).ok_or_else(|| {
        Error::BadParameter(format!(
            "COHERENCE_LAB_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::BadParameter(e.to_string()))
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
    if e.is_validation() {
        ExitCode::from(2)
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        return fail(&e);
    }
    match run(&cli) {
        Ok(out) => {
            match (cli.common.format, out.csv) {
                (Format::Csv, Some(csv)) => print!("{csv}"),
                (Format::Csv, None) => {
                    return fail(&Error::BadParameter("this command has no CSV form".into()));
                }
                (Format::Json, _) => println!("{}", out.json),
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}
