use std::f64::consts::LN_2;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use lis_core::capacity::{
    capacity_1d_mf, capacity_1d_optimal, capacity_2d, dims_1d, dims_2d, folded_psd,
    highsnr_slope, interference_power, mf_per_user_capacity, sum_capacity_logdet, sweep_1d,
    sweep_2d, write_rows_csv, LineConfig, LinePower,
};
use lis_core::experiments::{
    equispaced_line, figure_preset, run_experiment, write_sweep_csv, DensitySweep,
    ExperimentConfig, Geometry, PowerMode, Preset, Receiver,
};
use lis_core::fields::{Extent, NoiseModel, SurfaceSpec, Terminal, Wavelength};
use lis_core::gram::{build_gram, effective_rank, GramMode, DEFAULT_RANK_THRESHOLD};
use lis_core::quadrature::approximation_audit;
use lis_core::{Error, Result};
use serde::Serialize;
use serde_json::json;

use crate::args::*;
use crate::config::{pick, require, FileConfig};

pub struct Context {
    pub file: FileConfig,
    pub out_dir: PathBuf,
    pub bits: bool,
}

impl Context {
    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        std::fs::create_dir_all(&self.out_dir)?;
        Ok(BufWriter::new(File::create(self.path(name))?))
    }

    fn write_json(&self, name: &str, value: &serde_json::Value) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn write_csv<T: Serialize>(&self, name: &str, rows: &[T]) -> Result<()> {
        let mut w = self.create(name)?;
        write_rows_csv(rows, &mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Capacity in the display unit chosen on the command line.
    fn cap(&self, nats: f64) -> String {
        if self.bits {
            format!("{:.6}", nats / LN_2)
        } else {
            format!("{nats:.6}")
        }
    }

    fn unit(&self) -> &'static str {
        if self.bits {
            "bits/s/Hz"
        } else {
            "nats/s/Hz"
        }
    }
}

fn wavelength(v: f64) -> Result<Wavelength> {
    Wavelength::new(v)
}

fn logspace(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || n < 1 {
        return Err(Error::InvalidInput(
            "log grid needs 0 < min <= max and at least one point".into(),
        ));
    }
    if n == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + (b - a) * i as f64 / (n - 1) as f64).exp(),
        })
        .collect())
}

pub fn sinc_audit(ctx: &Context, a: &SincAuditArgs) -> Result<()> {
    let f = &ctx.file;
    let z = pick(a.z, f.z, 2.0);
    let lambda = pick(a.lambda, f.lambda, 0.4);
    let dx_max = pick(a.dx_max, f.dx_max, 2.0);
    let points = pick(a.points, f.points, 801);
    let quad = f.quadrature(&a.quad)?;
    if points < 1 || !(dx_max >= 0.0) {
        return Err(Error::InvalidInput("need points >= 1 and dx_max >= 0".into()));
    }
    let grid: Vec<f64> = if points == 1 {
        vec![0.0]
    } else {
        (0..points)
            .map(|i| dx_max * i as f64 / (points - 1) as f64)
            .collect()
    };
    let rep = approximation_audit(z, wavelength(lambda)?, &grid, &quad)?;
    let mut w = ctx.create("sinc_audit.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    ctx.write_json(
        "sinc_audit.json",
        &json!({
            "command": "sinc-audit",
            "config": {"z": z, "lambda": lambda, "dx_max": dx_max, "points": points, "quadrature": quad},
            "results": {
                "peak": rep.peak,
                "numeric_at_zero": rep.rows[0].numeric_value,
                "max_deviation": rep.max_deviation,
                "rms_deviation": rep.rms_deviation,
                "nulls": rep.nulls,
            }
        }),
    )?;
    let first = rep
        .nulls
        .first()
        .map(|n| format!("{:.3e} m", n.offset))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "sinc-audit: {} points, max deviation {:.3e} of peak, rms {:.3e}, first null offset {} -> {}",
        points,
        rep.max_deviation,
        rep.rms_deviation,
        first,
        ctx.path("sinc_audit.csv").display()
    );
    Ok(())
}

fn read_terminals(path: &Path) -> Result<Vec<Terminal>> {
    #[derive(serde::Deserialize)]
    struct Row {
        x: f64,
        y: f64,
        z: f64,
        power: f64,
    }
    let mut rd = csv::Reader::from_path(path).map_err(Error::from)?;
    rd.deserialize::<Row>()
        .map(|r| {
            let r = r?;
            Terminal::new(r.x, r.y, r.z, r.power)
        })
        .collect()
}

pub fn gram(ctx: &Context, a: &GramArgs) -> Result<()> {
    let f = &ctx.file;
    let lambda = require(a.lambda, f.lambda, "lambda")?;
    let quad = f.quadrature(&a.quad)?;
    let mode = pick(a.mode, f.mode, GramMode::Numeric);
    let surface = SurfaceSpec::new(
        pick(a.surface_a, f.surface_a, Extent::Infinite),
        pick(a.surface_b, f.surface_b, Extent::Infinite),
    )?;
    let rank_threshold = pick(a.rank_threshold, f.rank_threshold, DEFAULT_RANK_THRESHOLD);
    let source;
    let terminals = match (a.terminals.clone().or(f.terminals.clone()), a.line_k.or(f.line_k)) {
        (Some(path), None) => {
            source = json!({"terminals": path});
            read_terminals(&path)?
        }
        (None, Some(k)) => {
            let spacing = require(a.spacing, f.spacing, "spacing")?;
            let z0 = require(a.z0, f.z0, "z0")?;
            let power = pick(a.power, f.power, 1.0);
            source = json!({"line_k": k, "spacing": spacing, "z0": z0, "power": power});
            equispaced_line(k, spacing, z0, power)?
        }
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of 'terminals' or 'line_k'".into(),
            ))
        }
    };
    let g = build_gram(&terminals, &surface, wavelength(lambda)?, &quad, mode)?;
    let mut w = ctx.create("gram.txt")?;
    g.write_text(&mut w)?;
    w.flush()?;
    let rank = effective_rank(&g, rank_threshold, None)?;
    let ev = g.eigenvalues();
    let mut results = json!({
        "K": g.len(),
        "min_eigenvalue": ev[0],
        "max_eigenvalue": ev[ev.len() - 1],
        "effective_rank": rank.effective_rank,
        "est_error": g.est_error(),
    });
    let n0 = a.n0.or(f.n0);
    let mut extra = String::new();
    if let Some(n0) = n0 {
        let noise = NoiseModel::new(n0)?;
        let opt = sum_capacity_logdet(&g, noise, None);
        let mf = mf_per_user_capacity(&g, noise)?;
        let mf_mean = mf.iter().sum::<f64>() / mf.len() as f64;
        results["logdet_total"] = json!(opt.total);
        results["logdet_per_user"] = json!(opt.per_user);
        results["mf_per_user"] = json!(mf);
        extra = format!(
            ", per-user C_opt {} C_mf {} {}",
            ctx.cap(opt.per_user),
            ctx.cap(mf_mean),
            ctx.unit()
        );
    }
    ctx.write_json(
        "gram.json",
        &json!({
            "command": "gram",
            "config": {
                "lambda": lambda, "mode": mode, "surface": surface, "source": source,
                "n0": n0, "rank_threshold": rank_threshold, "quadrature": quad,
            },
            "results": results,
        }),
    )?;
    println!(
        "gram: K={} mode={} effective rank {}{} -> {}",
        g.len(),
        mode,
        rank.effective_rank,
        extra,
        ctx.path("gram.txt").display()
    );
    Ok(())
}

pub fn capacity_1d(ctx: &Context, a: &Capacity1dArgs) -> Result<()> {
    let f = &ctx.file;
    let lambda = wavelength(require(a.lambda, f.lambda, "lambda")?)?;
    let nu = require(a.nu, f.nu, "nu")?;
    let n0 = require(a.n0, f.n0, "n0")?;
    let power = match (a.pbar.or(f.pbar), a.power.or(f.power)) {
        (Some(p), None) => LinePower::PerMeter(p),
        (None, Some(p)) => LinePower::PerTerminal(p),
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of 'pbar' or 'power'".into(),
            ))
        }
    };
    let sweep = match (a.theta_min.or(f.theta_min), a.theta_max.or(f.theta_max)) {
        (Some(lo), Some(hi)) => Some(logspace(lo, hi, pick(a.points, f.points, 200))?),
        (None, None) => None,
        _ => {
            return Err(Error::InvalidInput(
                "theta_min and theta_max go together".into(),
            ))
        }
    };
    let config_echo = json!({
        "lambda": lambda, "nu": nu, "n0": n0, "power": power,
    });
    if let Some(thetas) = sweep {
        let configs = thetas
            .iter()
            .map(|&t| LineConfig::from_theta(t, lambda, nu, n0, power))
            .collect::<Result<Vec<_>>>()?;
        let rows = sweep_1d(&configs);
        ctx.write_csv("capacity_1d.csv", &rows)?;
        let mut echo = config_echo;
        echo["theta_min"] = json!(thetas[0]);
        echo["theta_max"] = json!(thetas[thetas.len() - 1]);
        echo["points"] = json!(thetas.len());
        ctx.write_json(
            "capacity_1d.json",
            &json!({"command": "capacity-1d", "config": echo, "results": {"rows": rows.len()}}),
        )?;
        println!(
            "capacity-1d: {} theta points -> {}",
            rows.len(),
            ctx.path("capacity_1d.csv").display()
        );
        return Ok(());
    }
    let cfg = match (a.delta_x.or(f.delta_x), a.theta.or(f.theta)) {
        (Some(dx), None) => LineConfig::new(dx, lambda, nu, n0, power)?,
        (None, Some(t)) => LineConfig::from_theta(t, lambda, nu, n0, power)?,
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of 'delta_x' or 'theta'".into(),
            ))
        }
    };
    let opt = capacity_1d_optimal(&cfg);
    let mf = capacity_1d_mf(&cfg);
    let rows = sweep_1d(&[cfg]);
    ctx.write_csv("capacity_1d.csv", &rows)?;
    let mut echo = config_echo;
    echo["delta_x"] = json!(cfg.delta_x);
    echo["theta"] = json!(cfg.theta());
    ctx.write_json(
        "capacity_1d.json",
        &json!({
            "command": "capacity-1d",
            "config": echo,
            "results": {
                "optimal": opt, "mf": mf,
                "interference_power": interference_power(&cfg),
                "folded_psd": folded_psd(&cfg),
                "units": {"c": "nats/s/Hz", "c_bar": "nats/s/Hz/m"},
            }
        }),
    )?;
    println!(
        "capacity-1d: theta={:.6} C_opt={} C_mf={} {u}; C_bar_opt={} C_bar_mf={} {u}/m",
        cfg.theta(),
        ctx.cap(opt.c),
        ctx.cap(mf.c),
        ctx.cap(opt.c_bar),
        ctx.cap(mf.c_bar),
        u = ctx.unit()
    );
    Ok(())
}

pub fn capacity_2d_cmd(ctx: &Context, a: &Capacity2dArgs) -> Result<()> {
    let f = &ctx.file;
    let lambdas: Vec<f64> = if !a.lambdas.is_empty() {
        a.lambdas.clone()
    } else if let Some(l) = f.lambdas.clone() {
        l
    } else if let Some(l) = f.lambda {
        vec![l]
    } else {
        return Err(Error::InvalidInput("missing required parameter 'lambda'".into()));
    };
    let snrs = if !a.pbar_over_n0.is_empty() {
        a.pbar_over_n0.clone()
    } else if let Some(s) = f.pbar_over_n0.clone() {
        s
    } else {
        logspace(
            pick(a.snr_min, f.snr_min, 1.0),
            pick(a.snr_max, f.snr_max, 1e8),
            pick(a.points, f.points, 81),
        )?
    };
    let wls = lambdas
        .iter()
        .map(|&l| wavelength(l))
        .collect::<Result<Vec<_>>>()?;
    let rows = sweep_2d(&wls, &snrs)?;
    ctx.write_csv("capacity_2d.csv", &rows)?;
    let mut grid = snrs.clone();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let top = grid.last().copied().unwrap_or(0.0);
    let mut fits = Vec::new();
    // The slope fit needs at least two points within the top decade.
    if top >= 1e6 && grid.iter().filter(|&&s| s >= top / 10.0).count() >= 2 {
        for &l in &wls {
            let slope = highsnr_slope(|s| capacity_2d(l, s, 1.0), &grid)?;
            fits.push(json!({"lambda": l, "slope": slope, "dims_2d": dims_2d(l)}));
        }
    }
    ctx.write_json(
        "capacity_2d.json",
        &json!({
            "command": "capacity-2d",
            "config": {"lambda": lambdas, "pbar_over_n0": snrs},
            "results": {"rows": rows.len(), "highsnr_fits": fits, "units": "nats/s/Hz/m^2"},
        }),
    )?;
    let last = rows.last().expect("at least one row");
    println!(
        "capacity-2d: {} rows; lambda={} pbar/n0={:e} C_bar={} {}/m^2 -> {}",
        rows.len(),
        last.lambda,
        last.p_bar_over_n0,
        ctx.cap(last.c_bar_2d),
        ctx.unit(),
        ctx.path("capacity_2d.csv").display()
    );
    Ok(())
}

pub fn dims(ctx: &Context, a: &DimsArgs) -> Result<()> {
    let f = &ctx.file;
    let lambda = wavelength(require(a.lambda, f.lambda, "lambda")?)?;
    let geometry = match a.geometry {
        Some(g) => g,
        None => require(None, f.geometry.clone(), "geometry")?.parse()?,
    };
    let theta = pick(a.theta, f.theta, 1.0);
    let (value, unit) = match geometry {
        GeometryKind::Line => (dims_1d(lambda, theta)?, "per m"),
        GeometryKind::Plane => (dims_2d(lambda), "per m^2"),
        GeometryKind::Cube => (dims_2d(lambda), "per m^2 of deployed surface"),
    };
    let geom = format!("{geometry:?}").to_lowercase();
    ctx.write_json(
        "dims.json",
        &json!({
            "command": "dims",
            "config": {"lambda": lambda, "geometry": geom, "theta": theta},
            "results": {"dims": value, "unit": unit},
        }),
    )?;
    println!("dims: {value:.3} {unit}");
    Ok(())
}

fn geometry_from(
    kind: GeometryKind,
    d: &DeploymentArgs,
    f: &FileConfig,
    fallback: Option<Geometry>,
) -> Result<Geometry> {
    let get = |flag: Option<f64>, file: Option<f64>, key: &str, fb: Option<f64>| {
        flag.or(file).or(fb).ok_or_else(|| {
            Error::InvalidInput(format!("missing required parameter '{key}'"))
        })
    };
    Ok(match (kind, fallback) {
        (GeometryKind::Line, fb) => {
            let l = match fb {
                Some(Geometry::Line { length }) => Some(length),
                _ => None,
            };
            Geometry::Line {
                length: get(d.length, f.length, "length", l)?,
            }
        }
        (GeometryKind::Plane, fb) => {
            let (w, h) = match fb {
                Some(Geometry::Plane { width, height }) => (Some(width), Some(height)),
                _ => (None, None),
            };
            Geometry::Plane {
                width: get(d.width, f.width, "width", w)?,
                height: get(d.height, f.height, "height", h)?,
            }
        }
        (GeometryKind::Cube, fb) => {
            let (w, h, dd) = match fb {
                Some(Geometry::Cube {
                    width,
                    height,
                    depth,
                }) => (Some(width), Some(height), Some(depth)),
                _ => (None, None, None),
            };
            Geometry::Cube {
                width: get(d.width, f.width, "width", w)?,
                height: get(d.height, f.height, "height", h)?,
                depth: get(d.depth, f.depth, "depth", dd)?,
            }
        }
    })
}

fn apply_deployment(cfg: &mut ExperimentConfig, d: &DeploymentArgs, f: &FileConfig) {
    cfg.trials = pick(d.trials, f.trials, cfg.trials);
    cfg.base_seed = pick(d.seed, f.seed, cfg.base_seed);
    cfg.z0 = d.z0.or(f.z0).or(cfg.z0);
    cfg.gram_mode = d.mode.or(f.mode).or(cfg.gram_mode);
    cfg.rank_threshold = pick(d.rank_threshold, f.rank_threshold, cfg.rank_threshold);
}

fn receiver_from(arg: Option<ReceiverArg>, file: Option<&String>) -> Result<Receiver> {
    Ok(match arg {
        Some(ReceiverArg::Optimal) => Receiver::Optimal,
        Some(ReceiverArg::Mf) => Receiver::Mf,
        None => match file.map(|s| s.as_str()) {
            None | Some("optimal") => Receiver::Optimal,
            Some("mf") => Receiver::Mf,
            Some(other) => {
                return Err(Error::InvalidInput(format!("unknown receiver '{other}'")))
            }
        },
    })
}

pub fn simulate(ctx: &Context, a: &SimulateArgs) -> Result<()> {
    let f = &ctx.file;
    let kind = match a.geometry {
        Some(g) => g,
        None => require(None, f.geometry.clone(), "geometry")?.parse()?,
    };
    let geometry = geometry_from(kind, &a.deployment, f, None)?;
    let power_mode = match (a.power.or(f.power), a.pbar.or(f.pbar)) {
        (Some(p), None) => PowerMode::PerTerminal(p),
        (None, Some(p)) => PowerMode::PerVolume(p),
        _ => {
            return Err(Error::InvalidInput(
                "give exactly one of 'power' or 'pbar'".into(),
            ))
        }
    };
    let surface = SurfaceSpec::new(
        pick(a.surface_a, f.surface_a, Extent::Infinite),
        pick(a.surface_b, f.surface_b, Extent::Infinite),
    )?;
    let mut cfg = ExperimentConfig::new(
        geometry,
        require(a.density, f.density, "density")?,
        surface,
        wavelength(require(a.lambda, f.lambda, "lambda")?)?,
        require(a.n0, f.n0, "n0")?,
        power_mode,
    )?;
    cfg.receiver = receiver_from(a.receiver, f.receiver.as_ref())?;
    cfg.quadrature = f.quadrature(&a.quad)?;
    apply_deployment(&mut cfg, &a.deployment, f);
    cfg.validate()?;
    let res = run_experiment(&cfg)?;
    let mut w = ctx.create("trials.csv")?;
    res.write_trials_csv(&mut w)?;
    w.flush()?;
    ctx.write_json(
        "simulate.json",
        &json!({"command": "simulate", "config": cfg, "results": res}),
    )?;
    let head = res.headline();
    println!(
        "simulate: {} trials, mean K {:.1}, C_bar {} +/- {} {}/m^{} ({:?}) -> {}",
        cfg.trials,
        res.summary.k.mean,
        ctx.cap(head.mean),
        ctx.cap(head.std),
        ctx.unit(),
        geometry.dimension(),
        cfg.receiver,
        ctx.path("trials.csv").display()
    );
    Ok(())
}

pub fn preset(ctx: &Context, a: &PresetArgs) -> Result<()> {
    let f = &ctx.file;
    let name = a.name.as_str();
    match figure_preset(name)? {
        Preset::LineSweep(spec) => {
            let rows = sweep_1d(&spec.configs);
            let csv_name = format!("{name}_sweep.csv");
            ctx.write_csv(&csv_name, &rows)?;
            ctx.write_json(
                &format!("{name}.json"),
                &json!({"command": "preset", "preset": name, "config": spec, "results": {"rows": rows.len()}}),
            )?;
            println!(
                "preset {name}: {} closed-form rows -> {}",
                rows.len(),
                ctx.path(&csv_name).display()
            );
        }
        Preset::MonteCarlo(mut sweep) => {
            let base = &mut sweep.base;
            let kind = match base.geometry {
                Geometry::Line { .. } => GeometryKind::Line,
                Geometry::Plane { .. } => GeometryKind::Plane,
                Geometry::Cube { .. } => GeometryKind::Cube,
            };
            base.geometry = geometry_from(kind, &a.deployment, f, Some(base.geometry))?;
            apply_deployment(base, &a.deployment, f);
            base.quadrature = f.quadrature(&a.quad)?;
            match (a.pbar, a.power) {
                (Some(p), None) => base.power_mode = PowerMode::PerVolume(p),
                (None, Some(p)) => base.power_mode = PowerMode::PerTerminal(p),
                _ => {}
            }
            if !a.densities.is_empty() {
                sweep.densities = a.densities.clone();
            } else if let Some(d) = f.densities.clone() {
                sweep.densities = d;
            }
            run_sweep(ctx, name, &sweep)?;
        }
    }
    Ok(())
}

fn run_sweep(ctx: &Context, name: &str, sweep: &DensitySweep) -> Result<()> {
    sweep.base.validate()?;
    let results = sweep.run()?;
    let rows = sweep.rows(&results)?;
    let csv_name = format!("{name}_sweep.csv");
    let mut w = ctx.create(&csv_name)?;
    write_sweep_csv(&rows, &mut w)?;
    w.flush()?;
    for (i, r) in results.iter().enumerate() {
        let mut w = ctx.create(&format!("{name}_trials_{i}.csv"))?;
        r.write_trials_csv(&mut w)?;
        w.flush()?;
    }
    ctx.write_json(
        &format!("{name}.json"),
        &json!({"command": "preset", "preset": name, "config": sweep, "results": results}),
    )?;
    let best = rows
        .iter()
        .map(|r| r.c_bar_opt_mean)
        .fold(f64::NEG_INFINITY, f64::max);
    println!(
        "preset {name}: {} densities x {} trials, max mean C_bar_opt {} {} -> {}",
        rows.len(),
        sweep.base.trials,
        ctx.cap(best),
        ctx.unit(),
        ctx.path(&csv_name).display()
    );
    Ok(())
}
