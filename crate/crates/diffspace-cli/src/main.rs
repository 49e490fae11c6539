//! Command-line front end: runs the verification suites, the orbit-space
//! scaling demonstration, flow experiments, and cover cohomology over the
//! bundled fixtures or user-supplied TOML configs, writing deterministic
//! CSV and JSON reports.
//!
//! Exit status: 0 on pass, 1 on numeric failure, 2 on configuration or parse
//! errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use diffspace::config::{load_toml, CoverConfig, FlowConfig, OrbitConfig, VerifyConfig};
use diffspace::error::Error;
use diffspace::flow::{integrate_curve, uniform_epsilon_probe, VectorFieldModel};
use diffspace::orbit::scaling_experiment;
use diffspace::parse::parse_map;
use diffspace::suites::run_verification;

mod render;

#[derive(Parser)]
#[command(
    name = "diffspace",
    about = "numerical exterior calculus on singular spaces: verification suites, flows, covers, and the orbit-space scaling demo",
    version
)]
struct Cli {
    /// TOML configuration file; each subcommand has built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed fixing all sampling (reports are byte-identical per seed).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Gauss-Legendre order per box axis.
    #[arg(long, global = true)]
    quad_order: Option<usize>,

    /// Override every suite tolerance with one value.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Output directory for CSV and JSON reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Worker threads for suite execution.
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the structural-identity suites (coboundary and boundary squares,
    /// duality, chain rule, homotopy identities, antiderivatives).
    Verify,
    /// Reproduce the orbit-space scaling table with slope fits.
    OrbitDemo,
    /// Integrate flow experiments and emit trajectory CSVs.
    Flow,
    /// Validate covers and compute cohomology dimensions.
    Cohomology,
    /// Render previously written JSON reports as tables.
    Report,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("numeric failure: at least one check exceeded its tolerance");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_class() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn read_config<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    load_toml(&text)
}

fn ensure_out(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

fn write_out(dir: &Path, name: &str, contents: &str) -> Result<(), Error> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn dispatch(cli: &Cli) -> Result<bool, Error> {
    ensure_out(&cli.out)?;
    match cli.command {
        Command::Verify => cmd_verify(cli),
        Command::OrbitDemo => cmd_orbit_demo(cli),
        Command::Flow => cmd_flow(cli),
        Command::Cohomology => cmd_cohomology(cli),
        Command::Report => cmd_report(cli),
    }
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

fn cmd_verify(cli: &Cli) -> Result<bool, Error> {
    let mut cfg: VerifyConfig = match &cli.config {
        Some(p) => read_config(p)?,
        None => VerifyConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(q) = cli.quad_order {
        cfg.quad_order = q;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(t) = cli.tol {
        cfg.tolerances = diffspace::suites::SuiteTolerances {
            d_squared: t,
            boundary_squared: t,
            stokes: t,
            chain_rule: t,
            homotopy_chain: t,
            homotopy_cochain: t,
            poincare: t,
        };
    }
    let results = run_verification(cfg.seed, cfg.quad_order, &cfg.tolerances, cfg.workers)?;
    let mut pass = results.iter().all(|r| r.pass);

    println!("{}", render::suite_table(&results));
    write_out(&cli.out, "verify_report.json", &render::to_json(&results)?)?;
    write_out(&cli.out, "verify_report.csv", &render::suite_csv(&results))?;

    if let Some(pairings) = &cfg.pairings {
        let rows = pairings.run(cfg.quad_order)?;
        pass &= rows
            .iter()
            .all(|r| r.residual_class != "defect" && !r.flagged);
        println!("{}", render::pairing_table(&rows));
        write_out(&cli.out, "pairings.json", &render::to_json(&rows)?)?;
        write_out(&cli.out, "pairings.csv", &render::pairing_csv(&rows))?;
    }
    Ok(pass)
}

// ---------------------------------------------------------------------------
// orbit-demo
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct OrbitReport {
    rows: Vec<diffspace::orbit::ScalingRow>,
    fits: Vec<diffspace::orbit::SlopeFit>,
    checks: Vec<render::CheckLine>,
    pass: bool,
}

fn cmd_orbit_demo(cli: &Cli) -> Result<bool, Error> {
    let cfg: OrbitConfig = match &cli.config {
        Some(p) => read_config(p)?,
        None => load_toml("")?,
    };
    let mut exp = cfg.experiment.clone();
    if let Some(q) = cli.quad_order {
        exp.quad_order = q;
    }
    // optional user action/invariants are validated before the experiment
    if let Some(action_cfg) = &cfg.action {
        let action = action_cfg.build()?;
        if let Some(hilbert_cfg) = &cfg.hilbert {
            let hilbert = hilbert_cfg.build(action.ambient_dim)?;
            let mut rng = diffspace::seeded_rng(cli.seed.unwrap_or(cfg.seed));
            hilbert.validate(&action, &mut rng, 60)?;
        }
    }

    let report = scaling_experiment(&exp.radii, exp.quad_order)?;
    let mut checks = Vec::new();
    let value = |form: &str, r: f64| {
        report
            .rows
            .iter()
            .find(|row| row.form == form && row.radius == r)
            .map(|row| row.value)
    };
    // closed-form targets: 2πR² for the angular form, (π/2)R⁴ for the
    // quartic pairing
    let mut pass = true;
    for &r in &exp.radii {
        if let Some(v) = value("x_dy_minus_y_dx", r) {
            let expect = std::f64::consts::TAU * r * r;
            let ok = ((v - expect) / expect).abs() <= exp.value_rel_tol;
            pass &= ok;
            checks.push(render::CheckLine::new(
                format!("angular form at R={r}: {v:.12e} vs 2*pi*R^2"),
                ok,
            ));
        }
        if let Some(v) = value("x2_d(xy)", r) {
            let expect = std::f64::consts::FRAC_PI_2 * r.powi(4);
            let ok = ((v - expect) / expect).abs() <= exp.value_rel_tol;
            pass &= ok;
            checks.push(render::CheckLine::new(
                format!("quartic pairing at R={r}: {v:.12e} vs (pi/2)*R^4"),
                ok,
            ));
        }
    }
    for row in &report.rows {
        let vanishing = matches!(
            row.form.as_str(),
            "x_dx" | "d(xy)" | "y_dy" | "x3_dx" | "x2y_dy" | "xy_d(xy)" | "y2_dx" | "y3_dy"
        );
        if vanishing {
            let ok = row.value.abs() <= exp.vanishing_abs_tol;
            pass &= ok;
            if !ok {
                checks.push(render::CheckLine::new(
                    format!(
                        "{} at R={} should vanish, got {:.3e}",
                        row.form, row.radius, row.value
                    ),
                    false,
                ));
            }
        }
        pass &= !row.flagged;
    }
    if exp.radii.len() >= 2 {
        for (form, target, window) in [
            ("x_dy_minus_y_dx", 2.0, exp.quadratic_slope_window),
            ("x2_d(xy)", 4.0, exp.quartic_slope_window),
        ] {
            if let Some(fit) = report.fits.iter().find(|f| f.form == form) {
                let ok = (fit.slope - target).abs() <= window;
                pass &= ok;
                checks.push(render::CheckLine::new(
                    format!("log-log slope of {form}: {:.4} vs {target}", fit.slope),
                    ok,
                ));
            }
        }
    } else {
        checks.push(render::CheckLine::new(
            "single radius: slope fits skipped".to_string(),
            true,
        ));
    }

    println!("{}", render::scaling_table(&report, &checks));
    let full = OrbitReport {
        rows: report.rows,
        fits: report.fits,
        checks,
        pass,
    };
    write_out(&cli.out, "orbit_report.json", &render::to_json(&full)?)?;
    write_out(
        &cli.out,
        "orbit_scaling.csv",
        &render::scaling_csv(&full.rows, &full.fits),
    )?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// flow
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct FlowSummaryEntry {
    label: String,
    start: Vec<f64>,
    domain: (f64, f64),
    exit_reason: diffspace::flow::ExitReason,
    max_defining_residual: f64,
    samples: usize,
}

#[derive(serde::Serialize)]
struct FlowReport {
    /// Max sampled |grad H . field| over the declared defining equations.
    tangency_residual: Option<f64>,
    trajectories: Vec<FlowSummaryEntry>,
    probe: Vec<diffspace::flow::ProbeRow>,
    pass: bool,
}

fn default_flow_config() -> FlowConfig {
    load_toml(
        r#"
        [space]
        fixture = "flat-variety"
        [field]
        components = ["x1^3", "2*x2"]
        certificates = ["x2^2 - bump(x1)*x2"]
        [[start]]
        point = [1.0, 0.36787944117144233]
        span = [-10.0, 0.0]
        label = "regular-branch"
        [[start]]
        point = [0.0, 0.0]
        span = [-1.0, 1.0]
        label = "singular-point"
    "#,
    )
    .expect("built-in flow config parses")
}

fn cmd_flow(cli: &Cli) -> Result<bool, Error> {
    let cfg: FlowConfig = match &cli.config {
        Some(p) => read_config(p)?,
        None => default_flow_config(),
    };
    let space = cfg.space.build()?;
    let field = parse_map(&cfg.field.components, space.ambient_dim)?;
    let certificates = cfg
        .field
        .certificates
        .iter()
        .map(|e| diffspace::parse::parse_scalar_map(e, space.ambient_dim))
        .collect::<Result<Vec<_>, _>>()?;
    let model = VectorFieldModel::new(space, field, certificates)?;
    let ctrl = cfg.control.to_control();

    let mut entries = Vec::new();
    let mut pass = true;

    // the declared defining equations must be annihilated along the field
    let tangency_residual = if cfg.field.certificates.is_empty() {
        None
    } else {
        let mut rng = diffspace::seeded_rng(cli.seed.unwrap_or(cfg.seed));
        let r = model.tangency_residual(&mut rng, 60)?;
        pass &= r <= ctrl.membership_tol;
        Some(r)
    };
    for (i, start) in cfg.start.iter().enumerate() {
        let label = start.label.clone().unwrap_or_else(|| format!("start{i}"));
        let res = integrate_curve(&model, &start.point, start.span, &ctrl)?;
        let max_res = res.residuals.iter().cloned().fold(0.0, f64::max);
        pass &= max_res <= ctrl.membership_tol;
        let mut csv = String::from("t");
        for k in 0..start.point.len() {
            csv.push_str(&format!(",x{}", k + 1));
        }
        csv.push_str(",residual\n");
        for ((t, p), r) in res.times.iter().zip(&res.points).zip(&res.residuals) {
            csv.push_str(&format!("{t}"));
            for v in p {
                csv.push_str(&format!(",{v}"));
            }
            csv.push_str(&format!(",{r}\n"));
        }
        write_out(&cli.out, &format!("flow_{label}.csv"), &csv)?;
        entries.push(FlowSummaryEntry {
            label,
            start: start.point.clone(),
            domain: res.domain,
            exit_reason: res.exit_reason,
            max_defining_residual: max_res,
            samples: res.times.len(),
        });
    }

    let probe_rows = if let Some(p) = &cfg.probe {
        uniform_epsilon_probe(
            &model,
            &p.center,
            &p.radii,
            p.samples,
            p.span_cap,
            &ctrl,
            cli.seed.unwrap_or(cfg.seed),
        )?
    } else {
        Vec::new()
    };

    println!("{}", render::flow_table(&entries, &probe_rows));
    let report = FlowReport {
        tangency_residual,
        trajectories: entries,
        probe: probe_rows,
        pass,
    };
    write_out(&cli.out, "flow_summary.json", &render::to_json(&report)?)?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// cohomology
// ---------------------------------------------------------------------------

#[derive(serde::Serialize)]
struct CohomologyEntry {
    name: String,
    dims: Vec<usize>,
    coboundary_squared_zero: bool,
}

#[derive(serde::Serialize)]
struct CohomologyReport {
    covers: Vec<CohomologyEntry>,
    spotchecks: Vec<diffspace::spotcheck::SpotcheckReport>,
    pass: bool,
}

fn cmd_cohomology(cli: &Cli) -> Result<bool, Error> {
    let seed = cli.seed.unwrap_or(42);
    let mut covers = Vec::new();
    let mut spotchecks = Vec::new();
    let mut pass = true;

    if let Some(path) = &cli.config {
        let cfg: CoverConfig = read_config(path)?;
        let cover = cfg.build()?;
        let mut rng = diffspace::seeded_rng(cli.seed.unwrap_or(cfg.seed));
        cover.validate(&mut rng, 500, cfg.link_eps)?;
        let cx = diffspace::cech::build_complex(&cover, cfg.max_degree)?;
        let dd = diffspace::cech::coboundary_squared_is_zero(&cx);
        pass &= dd;
        covers.push(CohomologyEntry {
            name: cover.space.name.clone(),
            dims: diffspace::cech::cohomology_dims(&cx),
            coboundary_squared_zero: dd,
        });
    } else {
        for fixture in ["interval", "circle", "plane", "cone"] {
            let rep = diffspace::spotcheck::de_rham_spotcheck(fixture, seed)?;
            pass &= rep.consistent;
            for (i, dims) in rep.dims_per_cover.iter().enumerate() {
                covers.push(CohomologyEntry {
                    name: format!("{fixture}/cover{i}"),
                    dims: dims.clone(),
                    coboundary_squared_zero: rep.coboundary_squared_zero,
                });
            }
            spotchecks.push(rep);
        }
    }

    println!("{}", render::cohomology_table(&covers, &spotchecks));
    let report = CohomologyReport {
        covers,
        spotchecks,
        pass,
    };
    write_out(
        &cli.out,
        "cohomology_report.json",
        &render::to_json(&report)?,
    )?;
    let mut csv = String::from("cover,dims\n");
    for c in &report.covers {
        csv.push_str(&format!(
            "{},{}\n",
            c.name,
            c.dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        ));
    }
    write_out(&cli.out, "cohomology_dims.csv", &csv)?;
    Ok(pass)
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

fn cmd_report(cli: &Cli) -> Result<bool, Error> {
    let mut shown = 0usize;
    let mut pass = true;
    for name in [
        "verify_report.json",
        "orbit_report.json",
        "flow_summary.json",
        "cohomology_report.json",
    ] {
        let path = cli.out.join(name);
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad JSON in {}: {e}", path.display())))?;
        println!("== {name}");
        println!("{}", render::json_table(&value));
        if let Some(p) = value.get("pass").and_then(|v| v.as_bool()) {
            pass &= p;
        }
        if let Some(items) = value.as_array() {
            for item in items {
                if let Some(p) = item.get("pass").and_then(|v| v.as_bool()) {
                    pass &= p;
                }
            }
        }
        shown += 1;
    }
    if shown == 0 {
        return Err(Error::Config(format!(
            "no reports found under {}",
            cli.out.display()
        )));
    }
    Ok(pass)
}
