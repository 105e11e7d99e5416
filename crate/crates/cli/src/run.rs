//! Subcommand execution.

use cascade_epr::conditional::conditional_steady_state;
use cascade_epr::optimize::{
    heatmap_cs_cm, optimize_point, sweep_cs, Constraint, Context, SweepRow,
};
use cascade_epr::physmap::{map_cavity, CavityParams};
use cascade_epr::sensing::{
    enhancement_ratio, matched_filter_sensitivity, noise_hybrid, noise_mech, sql_benchmark,
    SensingParams, Sensor,
};
use cascade_epr::unconditional::{covariance_analytic, epr_variance_min_g};
use rayon::prelude::*;

use crate::config::{Command, ConfigError, RunConfig, Value};
use crate::table::{format_number, Cell, Table};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] cascade_epr::Error),
}

/// Main table plus any companion tables, keyed by a file-name suffix.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub main: Table,
    pub extra: Vec<(&'static str, Table)>,
}

impl Report {
    fn single(main: Table) -> Self {
        Self {
            main,
            extra: Vec::new(),
        }
    }
}

fn context(cfg: &RunConfig) -> Result<Context, ConfigError> {
    Ok(Context {
        gamma_s0: cfg.number("gamma_s0_hz")?,
        n_bar_s: cfg.number("n_bar_s")?,
        gamma_m0: cfg.number("gamma_m0_hz")?,
        n_bar_m: cfg.number("n_bar_m")?,
        epsilon: cfg.number("epsilon")?,
    })
}

fn echo_config(cfg: &RunConfig, command: Command, table: &mut Table) {
    table.meta("command", command.name());
    for (key, entry) in &cfg.params {
        if key == "command" || key == "output" {
            continue;
        }
        let resolved = match &entry.value {
            Value::Number(v) if key.ends_with("_hz") => format!(" ({} rad/s)", format_number(*v)),
            _ => String::new(),
        };
        table.meta(key.as_str(), format!("{}{resolved}", entry.raw));
    }
}

fn echo_context(ctx: &Context, table: &mut Table) {
    table.meta("gamma_tilde_s0", format_number(ctx.spin_decoherence()));
    table.meta("gamma_tilde_m0", format_number(ctx.mech_decoherence()));
    table.meta("r", format_number(ctx.r()));
}

const SWEEP_COLUMNS: [&str; 9] = [
    "C_S",
    "mode",
    "theta_S",
    "theta_M",
    "C_M",
    "xi_g",
    "R_over_gammaM",
    "conditional_xi_g",
    "rel_improvement",
];

fn sweep_row(row: &SweepRow) -> Vec<Cell> {
    let r = &row.result;
    vec![
        r.c_s.into(),
        r.constraint.name().into(),
        r.theta_s.into(),
        r.theta_m.into(),
        r.c_m.into(),
        r.xi_g.into(),
        r.r_over_gamma_m.into(),
        row.conditional_xi_g.into(),
        row.rel_improvement.into(),
    ]
}

fn steady(cfg: &RunConfig, ctx: &Context) -> Result<Table, RunError> {
    let h = ctx.params(
        cfg.number("c_s")?,
        cfg.number("theta_s_rad")?,
        cfg.number("theta_m_rad")?,
        cfg.number("c_m")?,
    )?;
    let u = covariance_analytic(&h)?;
    let c = conditional_steady_state(&h)?;
    let w = epr_variance_min_g(&u.sigma);
    let mut t = Table::new(&[
        "C_S",
        "C_M",
        "theta_S",
        "theta_M",
        "g",
        "var_XS",
        "var_XM",
        "cross_XSXM",
        "xi_g",
        "g_opt",
        "xi_min_g",
        "conditional_xi_g",
    ]);
    t.push(vec![
        h.spin.cooperativity().into(),
        h.mech.cooperativity().into(),
        h.spin.theta.into(),
        h.mech.theta.into(),
        u.g.into(),
        u.var_xs().into(),
        u.var_xm().into(),
        u.cross_xsxm().into(),
        u.xi_g.into(),
        w.g.into(),
        w.xi.into(),
        c.xi_g.into(),
    ]);
    Ok(t)
}

fn sweep(cfg: &RunConfig, ctx: &Context, grid: &[f64]) -> Result<Table, RunError> {
    let rows = sweep_cs(grid, ctx, &cfg.constraints(), cfg.mode());
    let mut t = Table::new(&SWEEP_COLUMNS);
    t.meta("objective", cfg.mode().name());
    for row in &rows {
        t.push(sweep_row(row));
    }
    Ok(t)
}

fn heatmap(cfg: &RunConfig, ctx: &Context) -> Result<Report, RunError> {
    let map = heatmap_cs_cm(cfg.grid("cs_grid")?, cfg.grid("cm_grid")?, ctx);
    let mut t = Table::new(&[
        "C_S",
        "C_M",
        "xi_free",
        "theta_S_free",
        "theta_M_free",
        "xi_symmetric",
        "theta_symmetric",
    ]);
    for c in &map.cells {
        t.push(vec![
            c.c_s.into(),
            c.c_m.into(),
            c.free.xi_g.into(),
            c.free.theta_s.into(),
            c.free.theta_m.into(),
            c.symmetric.xi_g.into(),
            c.symmetric.theta_s.into(),
        ]);
    }
    let mut ridge = Table::new(&["C_S", "theta_S", "theta_M", "C_M", "xi_g"]);
    for r in &map.ridge {
        ridge.push(vec![
            r.c_s.into(),
            r.theta_s.into(),
            r.theta_m.into(),
            r.c_m.into(),
            r.xi_g.into(),
        ]);
    }
    Ok(Report {
        main: t,
        extra: vec![("ridge", ridge)],
    })
}

fn spectrum(cfg: &RunConfig, ctx: &Context) -> Result<Table, RunError> {
    let h = ctx.params(
        cfg.number("c_s")?,
        cfg.number("theta_s_rad")?,
        cfg.number("theta_m_rad")?,
        cfg.number("c_m")?,
    )?;
    h.check_stable()?;
    let omega_m = cfg.number("omega_m_hz")?;
    let omegas = cfg.grid("omega_grid_hz")?;
    let mut t = Table::new(&["omega", "N_M", "N_H"]);
    for &w in omegas {
        t.push(vec![
            w.into(),
            noise_mech(&h.mech, omega_m, w).into(),
            noise_hybrid(&h, omega_m, w)?.into(),
        ]);
    }
    Ok(t)
}

fn sense(cfg: &RunConfig, ctx: &Context) -> Result<Table, RunError> {
    let omega_m = cfg.number("omega_m_hz")?;
    let gamma_sig = cfg.number("gamma_sig_hz")?;
    let grid = cfg.grid("cs_grid")?;
    let sql = sql_benchmark(ctx.gamma_m0, ctx.n_bar_m, gamma_sig, omega_m)?;
    let rows = sweep_cs(grid, ctx, &[Constraint::Free], cfg.mode());
    let evaluated: Vec<Result<(SweepRow, SensingParams, f64, f64), RunError>> = rows
        .par_iter()
        .map(|row| {
            let r = &row.result;
            let h = ctx.params(r.c_s, r.theta_s, r.theta_m, r.c_m)?;
            let p = SensingParams::new(h, omega_m, gamma_sig)?;
            let v_h = matched_filter_sensitivity(&p, Sensor::Hybrid)?;
            Ok((*row, p, v_h, enhancement_ratio(&p, &sql)?))
        })
        .collect();
    let mut t = Table::new(&[
        "C_S", "theta_S", "theta_M", "C_M", "xi_g", "V_H", "V_M", "ratio",
    ]);
    t.meta("sql_C_M", format_number(sql.c_m_opt));
    t.meta("sql_theta_M", format_number(sql.theta_m_opt));
    t.meta("sql_V_M", format_number(sql.v_m));
    for item in evaluated {
        let (row, p, v_h, ratio) = item?;
        let r = row.result;
        if let Some(w) = p.band_warning() {
            t.meta("warning", format!("C_S = {}: {w}", format_number(r.c_s)));
        }
        t.push(vec![
            r.c_s.into(),
            r.theta_s.into(),
            r.theta_m.into(),
            r.c_m.into(),
            r.xi_g.into(),
            v_h.into(),
            sql.v_m.into(),
            ratio.into(),
        ]);
    }
    Ok(t)
}

fn physmap(cfg: &RunConfig) -> Result<Table, RunError> {
    let c = CavityParams::new(
        cfg.number("kappa_hz")?,
        cfg.number_or("delta_hz", 0.0)?,
        cfg.number("g_om_hz")?,
        cfg.number("omega_m_bare_hz")?,
    )?;
    let m = map_cavity(&c, cfg.number("gamma_m0_hz")?)?;
    let mut t = Table::new(&[
        "Omega_M",
        "Gamma_MB",
        "Gamma_MP",
        "theta_plus",
        "theta_minus",
        "theta_M",
        "gamma_M",
        "phi",
    ]);
    for w in &m.warnings {
        t.meta("warning", w.as_str());
    }
    t.push(vec![
        m.omega_m.into(),
        m.rates.gamma_mb.into(),
        m.rates.gamma_mp.into(),
        m.rates.theta_plus.into(),
        m.rates.theta_minus.into(),
        m.rates.theta_m.into(),
        m.gamma_m.into(),
        m.phi.into(),
    ]);
    Ok(t)
}

/// Executes the configured command. Output depends only on the
/// configuration, not on the thread count.
pub fn run(cfg: &RunConfig) -> Result<Report, RunError> {
    let command = cfg.command()?;
    let mut report = if command == Command::Physmap {
        Report::single(physmap(cfg)?)
    } else {
        let ctx = context(cfg)?;
        let mut report = match command {
            Command::Steady => Report::single(steady(cfg, &ctx)?),
            Command::Sweep => Report::single(sweep(cfg, &ctx, cfg.grid("cs_grid")?)?),
            Command::Optimize => {
                let c_s = cfg.number("c_s")?;
                let mut t = Table::new(&SWEEP_COLUMNS);
                t.meta("objective", cfg.mode().name());
                for constraint in cfg.constraints() {
                    let result = optimize_point(c_s, &ctx, constraint, cfg.mode());
                    let conditional_xi_g = if result.feasible {
                        conditional_steady_state(&ctx.params(
                            c_s,
                            result.theta_s,
                            result.theta_m,
                            result.c_m,
                        )?)?
                        .xi_g
                    } else {
                        f64::NAN
                    };
                    t.push(sweep_row(&SweepRow {
                        result,
                        conditional_xi_g,
                        rel_improvement: (result.xi_g - conditional_xi_g) / result.xi_g,
                    }));
                }
                Report::single(t)
            }
            Command::Heatmap => heatmap(cfg, &ctx)?,
            Command::Spectrum => Report::single(spectrum(cfg, &ctx)?),
            Command::Sense => Report::single(sense(cfg, &ctx)?),
            Command::Physmap => unreachable!(),
        };
        let mut head = Table::default();
        echo_context(&ctx, &mut head);
        for (k, v) in head.metadata {
            report.main.meta(k, v);
        }
        report
    };
    let mut head = Table::default();
    echo_config(cfg, command, &mut head);
    let own = std::mem::take(&mut report.main.metadata);
    report.main.metadata = head.metadata.iter().cloned().chain(own).collect();
    for (_, t) in &mut report.extra {
        let own = std::mem::take(&mut t.metadata);
        t.metadata = head.metadata.iter().cloned().chain(own).collect();
    }
    Ok(report)
}
