use std::sync::Arc;

use densgrad::chart::{self, uniform_nodes, ChartJet, OdeSurfaceChart, TrajectoryChart};
use densgrad::density::{self, density_curve, density_general};
use densgrad::diagnostics;
use densgrad::dynsys::{self, DynSystem, VanDerPolScenario};
use densgrad::pushforward::{evolve_curve, Rk2Flow};
use densgrad::quad::{
    build_sample_curve, convergence_study, estimator_registry, fit_loglog_slope, log_spaced_counts,
    reference_value, tail_slope, variance_ratio, IntegrationExperiment, OscillatoryF, SamplingMode,
};
use serde_json::{json, Value};

use crate::config::{Cli, Command, Params, RunConfig};
use crate::fd;
use crate::output::{num, Cell, Table, Writer};
use crate::CliError;

const LORENZ_DT: f64 = 0.002;
const LORENZ_C: (f64, f64) = (-5.0, 5.0);
const LORENZ_T_MAX: f64 = 0.4;
const LORENZ_GRID: usize = 401;
const N_BASE: usize = 100_000;
const N_REFERENCE: usize = 10_000_000;
const SLOPE_WINDOW: (f64, f64) = (1e2, 5e5);

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match cli.command {
        Command::VdpLine => vdp_line(cli),
        Command::VdpLoop => vdp_loop(cli),
        Command::McConvergence { random } => mc_convergence(cli, random),
        Command::LorenzSurface => lorenz_surface(cli),
        Command::LorenzRecursion => lorenz_recursion(cli),
        Command::Selftest => selftest(),
        Command::List => {
            list();
            Ok(())
        }
    }
}

fn config(cli: &Cli, params: Params) -> RunConfig {
    RunConfig {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        format: cli.format,
        params,
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!("--{name} must be positive, got {v}")))
    }
}

fn at_least(name: &str, v: usize, min: usize) -> Result<usize, CliError> {
    if v >= min {
        Ok(v)
    } else {
        Err(CliError::Config(format!("--{name} must be at least {min}, got {v}")))
    }
}

fn scenario(cli: &Cli) -> Result<VanDerPolScenario, CliError> {
    let mut scn = VanDerPolScenario::default();
    if let Some(dt) = cli.dt {
        scn.dt = positive("dt", dt)?;
    }
    Ok(scn)
}

fn vdp_line(cli: &Cli) -> Result<(), CliError> {
    let scn = scenario(cli)?;
    let n = at_least("n", cli.n.unwrap_or(N_BASE), 2)?;
    let cfg = config(
        cli,
        Params::VdpLine {
            a: scn.a,
            mu: scn.system.mu,
            dt: scn.dt,
            n,
        },
    );
    let writer = Writer::new(&cli.out, &cfg)?;
    let curve = build_sample_curve(&scn, n)?;
    let mut table = Table::new(&["xi", "x", "rho", "g", "undefined"]);
    for i in 0..curve.len() {
        table.push(vec![
            Cell::F(curve.xi[i]),
            Cell::F(curve.x[i]),
            Cell::F(curve.rho[i]),
            Cell::F(curve.g[i]),
            Cell::B(curve.undefined[i]),
        ]);
    }
    let path = writer.table("vdp_line", &table)?;
    println!("T_half = {:.6}", curve.t_half);
    // g changes sign where x(ξ) inflects
    let idx: Vec<usize> = curve.defined().collect();
    if let Some(w) = idx.windows(2).find(|w| (curve.g[w[0]] < 0.0) != (curve.g[w[1]] < 0.0)) {
        let (i, j) = (w[0], w[1]);
        let t = curve.g[i] / (curve.g[i] - curve.g[j]);
        println!("g = 0 at xi = {:.6}, x = {:.6}", curve.xi[i] + t * (curve.xi[j] - curve.xi[i]), curve.x[i] + t * (curve.x[j] - curve.x[i]));
    }
    println!("wrote {}", path.display());
    Ok(())
}

fn vdp_loop(cli: &Cli) -> Result<(), CliError> {
    let scn = scenario(cli)?;
    let chart = TrajectoryChart::vdp_loop(&scn)?;
    let n = at_least("n", cli.n.unwrap_or((chart.span() / scn.dt).round() as usize + 1), 5)?;
    let cfg = config(
        cli,
        Params::VdpLoop {
            a: scn.a,
            mu: scn.system.mu,
            dt: scn.dt,
            n,
            fd_stencil: 1,
        },
    );
    let writer = Writer::new(&cli.out, &cfg)?;
    let samples = chart.sample_uniform(n)?;
    let points: Vec<Vec<f64>> = samples.jets.iter().map(|j| j.x().to_vec()).collect();
    let arclen = fd::arclength(&points);
    let g_fd = fd::curve_g(&points, 1.0 / (n - 1) as f64);
    let mut table = Table::new(&["xi", "arclen", "rho", "g_direct", "g_fd"]);
    for (i, jet) in samples.jets.iter().enumerate() {
        let d = density_curve(jet)?;
        table.push(vec![
            Cell::F(samples.xi[i]),
            Cell::F(arclen[i]),
            Cell::F(d.rho),
            Cell::F(d.g[0]),
            Cell::F(g_fd[i]),
        ]);
    }
    let path = writer.table("vdp_loop", &table)?;
    println!("T = {:.6}, loop length = {:.6}", chart.span(), arclen[n - 1]);
    println!("wrote {}", path.display());
    Ok(())
}

fn mc_convergence(cli: &Cli, random: bool) -> Result<(), CliError> {
    let scn = scenario(cli)?;
    let n_base = at_least("n", cli.n.unwrap_or(N_BASE), 3)?;
    let ks = cli.k.clone().unwrap_or_else(|| vec![10.0, 1e5]);
    for &k in &ks {
        positive("k", k)?;
    }
    let sampling = match (random, cli.seed) {
        (_, Some(seed)) => SamplingMode::Random { seed },
        (true, None) => SamplingMode::Random { seed: 0 },
        (false, None) => SamplingMode::Equispaced,
    };
    let counts = log_spaced_counts(10, 500_000, 8);
    let cfg = config(
        cli,
        Params::Mc {
            a: scn.a,
            mu: scn.system.mu,
            dt: scn.dt,
            n_base,
            k: ks.clone(),
            counts: counts.clone(),
            n_reference: N_REFERENCE,
            slope_window: SLOPE_WINDOW,
            sampling: match sampling {
                SamplingMode::Equispaced => "equispaced",
                SamplingMode::Random { .. } => "random",
            },
            seed: match sampling {
                SamplingMode::Random { seed } => Some(seed),
                SamplingMode::Equispaced => None,
            },
        },
    );
    let writer = Writer::new(&cli.out, &cfg)?;
    let curve = build_sample_curve(&scn, n_base)?;
    let reg = estimator_registry();
    let methods = ["mc-direct", "mc-by-parts", "trapezoid"];
    let estimators = methods.iter().map(|m| reg.create(m)).collect::<Result<Vec<_>, _>>()?;
    let g_defined: Vec<f64> = curve.defined().map(|i| curve.g[i]).collect();
    let g_tail = tail_slope(&g_defined)?;

    let mut runs = Vec::new();
    for &k in &ks {
        let f = OscillatoryF::new(scn.a, k)?;
        let exp = IntegrationExperiment::new(&curve, f, sampling)?;
        let reference = reference_value(&exp, N_REFERENCE)?;
        let rows = convergence_study(&exp, &counts, reference.value, &estimators)?;
        let mut table = Table::new(&["N", "err_mc_direct", "err_mc_g", "err_trap"]);
        for chunk in rows.chunks(methods.len()) {
            let mut row = vec![Cell::I(chunk[0].n)];
            row.extend(chunk.iter().map(|r| Cell::F(r.rel_error)));
            table.push(row);
        }
        let stem = format!("mc_convergence_k{k}");
        let path = writer.table(&stem, &table)?;
        let floor = 10.0 * reference.rel_diff;
        let mut slopes = serde_json::Map::new();
        for m in methods {
            let pts: Vec<(usize, f64)> = rows.iter().filter(|r| r.method == m).map(|r| (r.n, r.rel_error)).collect();
            let s = fit_loglog_slope(&pts, SLOPE_WINDOW, floor);
            println!("K = {k}: {m} slope {}", s.map_or("n/a".into(), |s| format!("{s:.3}")));
            slopes.insert(m.to_string(), s.map_or(Value::Null, num));
        }
        let ratio = variance_ratio(&curve, &f)?;
        println!("K = {k}: variance ratio {ratio:.3e}; wrote {}", path.display());
        runs.push(json!({
            "k": k,
            "table": path.file_name().map(|p| p.to_string_lossy().into_owned()),
            "reference": num(reference.value),
            "reference_check": num(reference.check),
            "reference_rel_diff": num(reference.rel_diff),
            "slopes": slopes,
            "variance_ratio": num(ratio),
        }));
    }
    let summary = json!({
        "g_tail_slope": num(g_tail.slope),
        "g_tail_integrable": g_tail.integrable,
        "runs": runs,
    });
    let path = writer.json("mc_convergence_summary", &summary)?;
    println!("g tail slope {:.3}; wrote {}", g_tail.slope, path.display());
    Ok(())
}

fn lorenz_grid(cli: &Cli) -> Result<(f64, Vec<f64>), CliError> {
    let dt = positive("dt", cli.dt.unwrap_or(LORENZ_DT))?;
    let grid = at_least("grid", cli.grid.unwrap_or(LORENZ_GRID), 5)?;
    Ok((dt, uniform_nodes(LORENZ_C.0, LORENZ_C.1, grid)))
}

fn nearest(values: &[f64], target: f64) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if (v - target).abs() < (values[best] - target).abs() {
            best = i;
        }
    }
    best
}

fn lorenz_surface(cli: &Cli) -> Result<(), CliError> {
    let (dt, c) = lorenz_grid(cli)?;
    let chart = OdeSurfaceChart::lorenz(dt)?;
    let ic0 = nearest(&c, -2.5);
    let t_nodes: Vec<f64> = (0..=chart.time_steps()).map(|k| k as f64 * dt).collect();
    let it0 = nearest(&t_nodes, 0.2);
    let cfg = config(
        cli,
        Params::LorenzSurface {
            dt,
            c_range: LORENZ_C,
            t_range: (0.0, LORENZ_T_MAX),
            grid: c.len(),
            extract_c: c[ic0],
            extract_t: t_nodes[it0],
        },
    );
    let writer = Writer::new(&cli.out, &cfg)?;
    let grid = chart.sample_grid(&c)?;
    let (nc, nt) = (c.len(), grid.t.len());
    let x: Vec<Vec<Vec<f64>>> = grid.jets.iter().map(|row| row.iter().map(|j| j.x().to_vec()).collect()).collect();
    let dens: Vec<Vec<density::DensityEval>> = grid
        .jets
        .iter()
        .map(|row| row.iter().map(density_general).collect::<Result<Vec<_>, _>>())
        .collect::<Result<_, _>>()?;

    let mut table = Table::new(&["c", "t", "x1", "x2", "x3", "rho", "g_c", "g_t"]);
    for ic in 0..nc {
        for it in 0..nt {
            let (p, d) = (&x[ic][it], &dens[ic][it]);
            table.push(vec![
                Cell::F(c[ic]),
                Cell::F(grid.t[it]),
                Cell::F(p[0]),
                Cell::F(p[1]),
                Cell::F(p[2]),
                Cell::F(d.rho),
                Cell::F(d.g[0]),
                Cell::F(d.g[1]),
            ]);
        }
    }
    let path = writer.table("lorenz_surface", &table)?;
    println!("wrote {}", path.display());

    let fd_at = |ic: usize, it: usize| {
        if ic >= 2 && ic + 2 < nc && it >= 2 && it + 2 < nt {
            fd::surface_g(&x, ic, it, c[1] - c[0], dt)
        } else {
            (f64::NAN, f64::NAN)
        }
    };
    let columns = ["g_c", "g_t", "g_c_fd", "g_t_fd"];
    let mut along_c = Table::new(&["c", columns[0], columns[1], columns[2], columns[3]]);
    for ic in 0..nc {
        let (gc, gt) = fd_at(ic, it0);
        let g = &dens[ic][it0].g;
        along_c.push(vec![Cell::F(c[ic]), Cell::F(g[0]), Cell::F(g[1]), Cell::F(gc), Cell::F(gt)]);
    }
    let mut along_t = Table::new(&["t", columns[0], columns[1], columns[2], columns[3]]);
    for it in 0..nt {
        let (gc, gt) = fd_at(ic0, it);
        let g = &dens[ic0][it].g;
        along_t.push(vec![Cell::F(grid.t[it]), Cell::F(g[0]), Cell::F(g[1]), Cell::F(gc), Cell::F(gt)]);
    }
    println!("wrote {}", writer.table("lorenz_extract_t", &along_c)?.display());
    println!("wrote {}", writer.table("lorenz_extract_c", &along_t)?.display());
    Ok(())
}

fn lorenz_recursion(cli: &Cli) -> Result<(), CliError> {
    let (dt, c) = lorenz_grid(cli)?;
    let steps = cli.steps.unwrap_or(200);
    let mut record = cli.record.clone().unwrap_or_else(|| vec![50, 100, 200]);
    record.retain(|&k| k <= steps);
    record.sort_unstable();
    record.dedup();
    if record.is_empty() {
        return Err(CliError::Config(format!("no --record step is within --steps {steps}")));
    }
    let cfg = config(
        cli,
        Params::LorenzRecursion {
            dt,
            c_range: LORENZ_C,
            grid: c.len(),
            steps,
            record: record.clone(),
        },
    );
    let writer = Writer::new(&cli.out, &cfg)?;
    let sys: Arc<dyn DynSystem> = Arc::new(dynsys::lorenz63());
    let flow = Rk2Flow::new(sys, dt)?;
    let seed = chart::SurfaceSeed::lorenz();
    let jets: Vec<ChartJet> = c
        .iter()
        .map(|&c| {
            let x = seed.origin.iter().zip(&seed.direction).map(|(o, d)| o + c * d).collect();
            ChartJet::curve(x, seed.direction.clone(), vec![0.0; 3])
        })
        .collect::<Result<_, _>>()?;
    let snaps = evolve_curve(&flow, &jets, steps, &record)?;
    let mut table = Table::new(&["k", "c", "g_recursive", "g_fd"]);
    for snap in &snaps {
        let g_fd = fd::curve_g(&snap.x, c[1] - c[0]);
        for (j, &cj) in c.iter().enumerate() {
            table.push(vec![Cell::I(snap.k), Cell::F(cj), Cell::F(snap.g[j]), Cell::F(g_fd[j])]);
        }
    }
    println!("wrote {}", writer.table("lorenz_recursion", &table)?.display());
    Ok(())
}

fn selftest() -> Result<(), CliError> {
    let outcomes = diagnostics::run_all();
    let width = outcomes.iter().map(|o| o.name.len()).max().unwrap_or(0);
    for o in &outcomes {
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("{:width$}  {verdict}  {}", o.name, o.detail);
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::SelfTest { failed })
    }
}

fn list() {
    let sections: [(&str, Vec<(&str, &str)>); 4] = [
        ("charts", chart::registry().describe()),
        ("systems", dynsys::registry().describe()),
        ("formulas", density::registry().describe()),
        ("estimators", estimator_registry().describe()),
    ];
    for (title, entries) in sections {
        println!("{title}:");
        for (name, summary) in entries {
            println!("  {name:16} {summary}");
        }
    }
}
