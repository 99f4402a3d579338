//! Registered figure experiments. Each produces one or more CSV tables.

use std::f64::consts::LN_2;

use csit_core::doppler::{delayed_pareto, rate_vs_speed, DopplerModel};
use csit_core::lab::{best_users_for_tfb, config_hash, pareto_with_users, w_of_tfb_users_scheme, McSummary, RzfCache, RzfKey};
use csit_core::model::{FeedbackScheme, SchemeKind, SystemConfig};
use csit_core::optimizer::optimize;
use csit_core::tradeoff::{pareto_boundary, ParetoSample};

use crate::spec::{ExperimentSpec, Sweep, SweepVar};
use crate::CliError;

/// A CSV table: header plus numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    fn new(file: impl Into<String>, header: Vec<String>) -> Self {
        Self { file: file.into(), header, rows: Vec::new() }
    }
}

#[derive(Debug, Default)]
pub struct FigureOutput {
    pub tables: Vec<Table>,
    pub mc: Vec<McSummary>,
}

pub struct FigureInfo {
    pub name: &'static str,
    pub title: &'static str,
    pub monte_carlo: bool,
    pub defaults: fn() -> ExperimentSpec,
    pub run: fn(&ExperimentSpec, &RzfCache) -> Result<FigureOutput, CliError>,
}

static REGISTRY: [FigureInfo; 10] = [
    FigureInfo { name: "fig2", title: "optimal training/feedback length vs block length", monte_carlo: false, defaults: d_fig2, run: fig2 },
    FigureInfo { name: "fig3", title: "net sum spectral efficiency vs block length", monte_carlo: false, defaults: d_fig2, run: fig3 },
    FigureInfo { name: "fig4", title: "downlink vs uplink rate boundary (separate bands)", monte_carlo: false, defaults: d_fig4, run: fig4 },
    FigureInfo { name: "fig5", title: "feedback length vs lambda", monte_carlo: false, defaults: d_fig4, run: fig5 },
    FigureInfo { name: "fig6", title: "rate boundary under delayed feedback per speed", monte_carlo: false, defaults: d_fig6, run: fig6 },
    FigureInfo { name: "fig7", title: "feedback length vs lambda under delayed feedback", monte_carlo: false, defaults: d_fig7, run: fig7 },
    FigureInfo { name: "fig8", title: "downlink sum rate vs mobile speed", monte_carlo: false, defaults: d_fig8, run: fig8 },
    FigureInfo { name: "fig9", title: "spectral efficiency vs feedback symbols, K = 4..8", monte_carlo: true, defaults: d_fig9, run: fig9 },
    FigureInfo { name: "fig10", title: "spectral efficiency vs feedback symbols, K = 4..31", monte_carlo: true, defaults: d_fig10, run: fig10 },
    FigureInfo { name: "fig11", title: "downlink vs uplink rate with user selection", monte_carlo: true, defaults: d_fig11, run: fig11 },
];

pub fn registry() -> &'static [FigureInfo] {
    &REGISTRY
}

pub fn figure(name: &str) -> Option<&'static FigureInfo> {
    REGISTRY.iter().find(|f| f.name == name)
}

fn schemes(n_tx: usize, kinds: &[SchemeKind]) -> Vec<FeedbackScheme> {
    kinds
        .iter()
        .map(|&k| if k == SchemeKind::DigitalQam { FeedbackScheme::qam(n_tx, 4) } else { FeedbackScheme::new(k, n_tx) })
        .collect()
}

/// Defaults shared by all figures; the registry fills in the name.
fn base(kinds: &[SchemeKind], sweep: Sweep) -> ExperimentSpec {
    let config = SystemConfig::default();
    ExperimentSpec {
        name: String::new(),
        schemes: schemes(config.n_tx, kinds),
        config,
        sweep,
        seed: 1,
        output: "out".into(),
        blocks: 100_000,
        speeds_kmh: vec![6.0, 50.0, 80.0],
        users: (4..=8).collect(),
        t_fb: 30.0,
    }
}

fn lambda_grid() -> Sweep {
    Sweep::range(SweepVar::Lambda, 0.01, 0.99, 0.01)
}

const FEEDBACK: [SchemeKind; 3] = [SchemeKind::Analog, SchemeKind::DigitalErrorFree, SchemeKind::DigitalQam];

fn d_fig2() -> ExperimentSpec {
    base(&SchemeKind::ALL, Sweep::range(SweepVar::BlockLen, 50.0, 2000.0, 50.0))
}

fn d_fig4() -> ExperimentSpec {
    base(&FEEDBACK, lambda_grid())
}

fn d_fig6() -> ExperimentSpec {
    base(&[SchemeKind::DigitalErrorFree], lambda_grid())
}

fn d_fig7() -> ExperimentSpec {
    ExperimentSpec { speeds_kmh: vec![6.0, 80.0], ..base(&[SchemeKind::DigitalErrorFree], lambda_grid()) }
}

fn d_fig8() -> ExperimentSpec {
    base(&FEEDBACK, Sweep::range(SweepVar::SpeedKmh, 0.0, 150.0, 5.0))
}

fn d_fig9() -> ExperimentSpec {
    let mut s = base(&[SchemeKind::DigitalErrorFree], Sweep::range(SweepVar::FeedbackLen, 0.0, 120.0, 1.0));
    s.config = s.config.with_block_len(500.0);
    s
}

fn d_fig10() -> ExperimentSpec {
    let mut s = base(
        &[SchemeKind::DigitalErrorFree, SchemeKind::DigitalQam],
        Sweep::range(SweepVar::FeedbackLen, 0.0, 200.0, 2.0),
    );
    s.config = s.config.with_block_len(500.0);
    s.users = (4..=31).collect();
    s
}

fn d_fig11() -> ExperimentSpec {
    let mut s = base(&[SchemeKind::DigitalErrorFree], lambda_grid());
    s.users = (4..=31).collect();
    s
}

fn kbps(bps: f64) -> f64 {
    bps / 1e3
}

fn core(e: csit_core::Error) -> CliError {
    CliError::Run(e)
}

fn fig2(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut header = vec!["T".to_string()];
    header.extend(spec.schemes.iter().map(|s| format!("t_tr_{}", s.kind.label())));
    header.extend(spec.schemes.iter().map(|s| format!("t_fb_{}", s.kind.label())));
    let mut t = Table::new(format!("{}.csv", spec.name), header);
    for &big_t in &spec.sweep.grid {
        let cfg = spec.config.with_block_len(big_t);
        let res: Vec<_> = spec.schemes.iter().map(|s| optimize(&cfg, s)).collect::<Result<_, _>>().map_err(core)?;
        let mut row = vec![big_t];
        row.extend(res.iter().map(|r| r.split.t_tr));
        row.extend(res.iter().map(|r| r.split.t_fb));
        t.rows.push(row);
    }
    Ok(FigureOutput { tables: vec![t], mc: vec![] })
}

fn fig3(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut header = vec!["T".to_string(), "perfect".to_string()];
    header.extend(spec.schemes.iter().map(|s| s.kind.label().to_string()));
    let mut t = Table::new(format!("{}.csv", spec.name), header);
    let to_sum = |r: f64| spec.config.n_tx as f64 * r / LN_2;
    for &big_t in &spec.sweep.grid {
        let cfg = spec.config.with_block_len(big_t);
        let mut row = vec![big_t, to_sum(cfg.r_zf())];
        for s in &spec.schemes {
            row.push(to_sum(optimize(&cfg, s).map_err(core)?.net_rate));
        }
        t.rows.push(row);
    }
    Ok(FigureOutput { tables: vec![t], mc: vec![] })
}

fn boundary_header() -> Vec<String> {
    ["lambda", "t_fb", "t_tr", "r_down_kbps", "r_up_kbps", "t_fb_closed", "r_down_closed_kbps", "r_up_closed_kbps"]
        .iter()
        .map(|s| s.to_string())
        .collect()
}

fn boundary_rows(points: &[ParetoSample]) -> Vec<Vec<f64>> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.numeric.lambda.total_cmp(&b.numeric.lambda));
    pts.iter()
        .map(|p| {
            let (n, c) = (&p.numeric, &p.closed_form);
            vec![n.lambda, n.t_fb, n.t_tr, kbps(n.r_down_bps), kbps(n.r_up_bps), c.t_fb, kbps(c.r_down_bps), kbps(c.r_up_bps)]
        })
        .collect()
}

fn fig4(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut out = FigureOutput::default();
    for s in &spec.schemes {
        let pts = pareto_boundary(&spec.config, s, &spec.sweep.grid).map_err(core)?;
        let mut t = Table::new(format!("{}_{}.csv", spec.name, s.kind.label()), boundary_header());
        t.rows = boundary_rows(&pts);
        out.tables.push(t);
    }
    Ok(out)
}

fn lambda_columns(file: String, series: Vec<(String, Vec<ParetoSample>)>, grid: &[f64]) -> Table {
    let mut header = vec!["lambda".to_string()];
    for (name, _) in &series {
        header.push(format!("{name}_closed"));
        header.push(format!("{name}_numeric"));
    }
    let mut t = Table::new(file, header);
    for (i, &l) in grid.iter().enumerate() {
        let mut row = vec![l];
        for (_, pts) in &series {
            let mut sorted = pts.clone();
            sorted.sort_by(|a, b| a.numeric.lambda.total_cmp(&b.numeric.lambda));
            row.push(sorted[i].closed_form.t_fb);
            row.push(sorted[i].numeric.t_fb);
        }
        t.rows.push(row);
    }
    t
}

fn fig5(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let series = spec
        .schemes
        .iter()
        .map(|s| Ok((s.kind.label().to_string(), pareto_boundary(&spec.config, s, &spec.sweep.grid).map_err(core)?)))
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(FigureOutput { tables: vec![lambda_columns(format!("{}.csv", spec.name), series, &spec.sweep.grid)], mc: vec![] })
}

fn speed_model(spec: &ExperimentSpec, kmh: f64) -> Result<DopplerModel, CliError> {
    DopplerModel::prediction_kmh(kmh, spec.config.block_time).map_err(core)
}

fn fig6(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut out = FigureOutput::default();
    for s in &spec.schemes {
        for &v in &spec.speeds_kmh {
            let pts = delayed_pareto(&spec.config, &speed_model(spec, v)?, s, &spec.sweep.grid).map_err(core)?;
            let mut t = Table::new(format!("{}_{}_v{}.csv", spec.name, s.kind.label(), v), boundary_header());
            t.rows = boundary_rows(&pts);
            out.tables.push(t);
        }
    }
    Ok(out)
}

fn fig7(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut out = FigureOutput::default();
    for s in &spec.schemes {
        let series = spec
            .speeds_kmh
            .iter()
            .map(|&v| {
                let pts = delayed_pareto(&spec.config, &speed_model(spec, v)?, s, &spec.sweep.grid).map_err(core)?;
                Ok((format!("v{v}"), pts))
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let file = if spec.schemes.len() == 1 {
            format!("{}.csv", spec.name)
        } else {
            format!("{}_{}.csv", spec.name, s.kind.label())
        };
        out.tables.push(lambda_columns(file, series, &spec.sweep.grid));
    }
    Ok(out)
}

fn fig8(spec: &ExperimentSpec, _: &RzfCache) -> Result<FigureOutput, CliError> {
    let mut header = vec!["speed_kmh".to_string()];
    header.extend(spec.schemes.iter().map(|s| format!("{}_kbps", s.kind.label())));
    header.extend(spec.schemes.iter().map(|s| format!("t_tr_{}", s.kind.label())));
    let speeds: Vec<f64> = spec.sweep.grid.iter().map(|v| v / 3.6).collect();
    let cols = spec
        .schemes
        .iter()
        .map(|s| rate_vs_speed(&spec.config, s, spec.t_fb, &speeds).map_err(core))
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut t = Table::new(format!("{}.csv", spec.name), header);
    for (i, &v) in spec.sweep.grid.iter().enumerate() {
        let mut row = vec![v];
        row.extend(cols.iter().map(|c| kbps(c[i].sum_rate_bps)));
        row.extend(cols.iter().map(|c| c[i].t_tr));
        t.rows.push(row);
    }
    Ok(FigureOutput { tables: vec![t], mc: vec![] })
}

/// Per-beam `R_zf,K` for every configured user count, with one JSON-lines
/// summary each.
fn rzf_table(spec: &ExperimentSpec, cache: &RzfCache) -> Result<(Vec<(usize, f64)>, Vec<McSummary>), CliError> {
    let (n, rho) = (spec.config.n_tx, spec.config.snr);
    let mut table = Vec::new();
    let mut mc = Vec::new();
    for &k in &spec.users {
        let key = RzfKey::new(n, rho, k, spec.blocks, spec.seed);
        let est = cache.get_or_compute(key).map_err(core)?;
        table.push((k, est.mean));
        mc.push(McSummary {
            experiment: format!("{}:rzf_k{k}", spec.name),
            config_hash: config_hash(&key).map_err(core)?,
            seed: spec.seed,
            blocks: est.blocks,
            estimate: est.mean,
            stderr: est.stderr,
        });
    }
    Ok((table, mc))
}

fn users_curves(spec: &ExperimentSpec, scheme: &FeedbackScheme, rzf: &[(usize, f64)], file: String) -> Result<Table, CliError> {
    let mut header = vec!["t_fb".to_string()];
    header.extend(rzf.iter().map(|(k, _)| format!("k{k}")));
    header.push("best_k".into());
    let mut t = Table::new(file, header);
    let to_bits = |sum: f64| sum / LN_2;
    for &t_fb in &spec.sweep.grid {
        let mut row = vec![t_fb];
        for &(k, r) in rzf {
            row.push(to_bits(w_of_tfb_users_scheme(&spec.config, scheme, t_fb, k, r).map_err(core)?.sum_rate));
        }
        row.push(best_users_for_tfb(&spec.config, scheme, t_fb, rzf).map_err(core)?.k as f64);
        t.rows.push(row);
    }
    Ok(t)
}

fn fig9(spec: &ExperimentSpec, cache: &RzfCache) -> Result<FigureOutput, CliError> {
    let (rzf, mc) = rzf_table(spec, cache)?;
    let mut out = FigureOutput { tables: vec![], mc };
    for s in &spec.schemes {
        let file = if spec.schemes.len() == 1 {
            format!("{}.csv", spec.name)
        } else {
            format!("{}_{}.csv", spec.name, s.kind.label())
        };
        out.tables.push(users_curves(spec, s, &rzf, file)?);
    }
    Ok(out)
}

fn fig10(spec: &ExperimentSpec, cache: &RzfCache) -> Result<FigureOutput, CliError> {
    fig9(spec, cache)
}

fn fig11(spec: &ExperimentSpec, cache: &RzfCache) -> Result<FigureOutput, CliError> {
    let (rzf, mc) = rzf_table(spec, cache)?;
    let header: Vec<String> = ["lambda", "k", "t_fb", "t_tr", "r_down_kbps", "r_up_kbps", "uplink_spend"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let fixed: Vec<(usize, f64)> = rzf.iter().copied().filter(|(k, _)| *k == spec.config.n_tx).collect();
    let mut out = FigureOutput { tables: vec![], mc };
    for s in &spec.schemes {
        let suffix = if spec.schemes.len() == 1 { String::new() } else { format!("_{}", s.kind.label()) };
        let mut sel = Table::new(format!("{}{suffix}.csv", spec.name), header.clone());
        let mut fix = Table::new(format!("{}{suffix}_fixed_k.csv", spec.name), header.clone());
        for &l in &spec.sweep.grid {
            let p = pareto_with_users(&spec.config, s, l, &rzf).map_err(core)?;
            sel.rows.push(vec![l, p.k as f64, p.t_fb, p.t_tr, kbps(p.r_down_bps), kbps(p.r_up_bps), p.uplink_spend]);
            if !fixed.is_empty() {
                let p = pareto_with_users(&spec.config, s, l, &fixed).map_err(core)?;
                fix.rows.push(vec![l, p.k as f64, p.t_fb, p.t_tr, kbps(p.r_down_bps), kbps(p.r_up_bps), p.uplink_spend]);
            }
        }
        out.tables.push(sel);
        if !fixed.is_empty() {
            out.tables.push(fix);
        }
    }
    Ok(out)
}
