//! Table and CSV rendering for the report files. Output is deterministic for
//! a fixed configuration: no timestamps, stable field order, shortest
//! round-trip float formatting.

use diffspace::error::Error;
use diffspace::flow::ProbeRow;
use diffspace::orbit::{ScalingRow, SlopeFit};
use diffspace::suites::SuiteResult;

#[derive(serde::Serialize)]
pub struct CheckLine {
    pub what: String,
    pub pass: bool,
}

impl CheckLine {
    pub fn new(what: String, pass: bool) -> Self {
        CheckLine { what, pass }
    }
}

pub fn to_json<T: serde::Serialize>(value: &T) -> Result<String, Error> {
    serde_json::to_string_pretty(value).map_err(|e| Error::Config(e.to_string()))
}

fn pass_str(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn suite_table(results: &[SuiteResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>14} {:>10}  {}\n",
        "suite", "max residual", "tolerance", "status"
    ));
    for r in results {
        out.push_str(&format!(
            "{:<18} {:>14.3e} {:>10.1e}  {}  ({})\n",
            r.id,
            r.max_residual,
            r.tolerance,
            pass_str(r.pass),
            r.detail
        ));
    }
    out
}

pub fn suite_csv(results: &[SuiteResult]) -> String {
    let mut out = String::from("suite,max_residual,tolerance,pass\n");
    for r in results {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.id, r.max_residual, r.tolerance, r.pass
        ));
    }
    out
}

pub fn pairing_table(rows: &[diffspace::config::PairingRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<14} {:<14} {:<16} {:>22} {:>6} {}\n",
        "form", "cube", "kind", "value", "order", "class"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<14} {:<14} {:<16} {:>22.15e} {:>6} {}\n",
            r.form, r.cube, r.kind, r.value, r.quad_order, r.residual_class
        ));
    }
    out
}

pub fn pairing_csv(rows: &[diffspace::config::PairingRow]) -> String {
    let mut out = String::from("form,cube,kind,value,quad_order,flagged,residual_class\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.form, r.cube, r.kind, r.value, r.quad_order, r.flagged, r.residual_class
        ));
    }
    out
}

pub fn scaling_table(report: &diffspace::orbit::ScalingReport, checks: &[CheckLine]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<18} {:>6} {:>22} {:>6} {:>8}\n",
        "form", "R", "integral", "order", "flagged"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<18} {:>6} {:>22.15e} {:>6} {:>8}\n",
            row.form, row.radius, row.value, row.quad_order, row.flagged
        ));
    }
    out.push('\n');
    for fit in &report.fits {
        out.push_str(&format!(
            "slope({}) = {:.4}   r^2 = {:.6}\n",
            fit.form, fit.slope, fit.r_squared
        ));
    }
    out.push('\n');
    for c in checks {
        out.push_str(&format!("[{}] {}\n", pass_str(c.pass), c.what));
    }
    out
}

pub fn scaling_csv(rows: &[ScalingRow], fits: &[SlopeFit]) -> String {
    let mut out = String::from("form,R,value,slope_fit,r_squared\n");
    for row in rows {
        let fit = fits.iter().find(|f| f.form == row.form);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            row.form,
            row.radius,
            row.value,
            fit.map(|f| f.slope.to_string()).unwrap_or_default(),
            fit.map(|f| f.r_squared.to_string()).unwrap_or_default(),
        ));
    }
    out
}

pub fn flow_table(entries: &[impl serde::Serialize], probe: &[ProbeRow]) -> String {
    let mut out = String::new();
    for e in entries {
        let v = serde_json::to_value(e).unwrap_or_default();
        out.push_str(&format!(
            "{:<16} domain [{}, {}]  exit {:<18} max residual {}\n",
            v.get("label").and_then(|x| x.as_str()).unwrap_or("?"),
            v.get("domain")
                .and_then(|d| d.get(0))
                .map(render_num)
                .unwrap_or_default(),
            v.get("domain")
                .and_then(|d| d.get(1))
                .map(render_num)
                .unwrap_or_default(),
            v.get("exit_reason")
                .map(|x| x.to_string())
                .unwrap_or_default(),
            v.get("max_defining_residual")
                .map(render_num)
                .unwrap_or_default(),
        ));
    }
    if !probe.is_empty() {
        out.push_str("\nprobe (radius -> min two-sided domain length):\n");
        for row in probe {
            out.push_str(&format!(
                "  r = {:<10} min length = {:<14.6e} all domains open: {}\n",
                row.radius, row.min_domain_length, row.all_domains_open
            ));
        }
    }
    out
}

fn render_num(v: &serde_json::Value) -> String {
    v.as_f64().map(|f| format!("{f:.6}")).unwrap_or_default()
}

pub fn cohomology_table(
    covers: &[impl serde::Serialize],
    spotchecks: &[diffspace::spotcheck::SpotcheckReport],
) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<22} dims\n", "cover"));
    for c in covers {
        let v = serde_json::to_value(c).unwrap_or_default();
        out.push_str(&format!(
            "{:<22} {}\n",
            v.get("name").and_then(|x| x.as_str()).unwrap_or("?"),
            v.get("dims").map(|d| d.to_string()).unwrap_or_default()
        ));
    }
    for s in spotchecks {
        out.push_str(&format!(
            "\nspot-check `{}`: consistent = {}\n",
            s.fixture, s.consistent
        ));
        for b in &s.battery {
            out.push_str(&format!(
                "  {:<24} {:>14.6e} [{}]\n",
                b.form,
                b.value,
                pass_str(b.pass)
            ));
        }
    }
    out
}

/// A small generic renderer for the `report` subcommand.
pub fn json_table(value: &serde_json::Value) -> String {
    let mut out = String::new();
    render_json(value, 0, &mut out);
    out
}

fn render_json(value: &serde_json::Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match value {
        serde_json::Value::Array(items) => {
            for item in items {
                render_json(item, indent, out);
            }
        }
        serde_json::Value::Object(map) => {
            let mut scalars = Vec::new();
            let mut nested = Vec::new();
            for (k, v) in map {
                if v.is_array() || v.is_object() {
                    nested.push((k, v));
                } else {
                    scalars.push(format!("{k}={v}"));
                }
            }
            if !scalars.is_empty() {
                out.push_str(&format!("{pad}{}\n", scalars.join("  ")));
            }
            for (k, v) in nested {
                out.push_str(&format!("{pad}{k}:\n"));
                render_json(v, indent + 1, out);
            }
        }
        other => out.push_str(&format!("{pad}{other}\n")),
    }
}
