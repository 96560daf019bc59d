use clap::Subcommand;
use rydmol::classical::seed_grid;
use rydmol::dynamics::{estimate_revival, revival_times, time_grid, wavepacket_window};
use rydmol::husimi::{full_lambda_amplitudes, molecular_frame_amplitudes, HusimiGrid};
use rydmol::mqdt::{entropy_statistics, find_eigenstates, label_nu, EigenSearch};
use rydmol::{ChannelSet, ClassicalParams, EnergyWindow, Eigenstate, ReactionMatrix, WavepacketSpec, WavepacketState};
use serde_json::{json, Map, Value};

use crate::config::{Extreme, RunConfig, StateSelector};
use crate::error::{numerical, CliError};
use crate::output::{num, Staging, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Channel thresholds, quantum defects, frame transformation and K matrix.
    Channels,
    /// Classical surface of section.
    Sos,
    /// Eigenstates in the `eigens` window.
    Eigens,
    /// Mean and rms eigenstate entropy over `stats.k_values` x `stats.cases`.
    EntropyStats,
    /// Linear entropy of the wavepacket.
    Evolve,
    /// Partial autocorrelation in channel `evolve.corr_channel`.
    Correlation,
    /// Husimi maps of selected eigenstates.
    Husimi,
    /// Long-time entropy and correlation with revival estimates.
    Revival,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Channels => "channels",
            Command::Sos => "sos",
            Command::Eigens => "eigens",
            Command::EntropyStats => "entropy-stats",
            Command::Evolve => "evolve",
            Command::Correlation => "correlation",
            Command::Husimi => "husimi",
            Command::Revival => "revival",
        }
    }
}

/// Command-specific manifest entries and collected warnings.
#[derive(Debug, Default)]
pub struct Report {
    pub details: Map<String, Value>,
    pub warnings: Vec<String>,
}

pub struct Context<'a> {
    pub cfg: &'a RunConfig,
    pub strict: bool,
    pub report: Report,
}

impl Context<'_> {
    fn warn(&mut self, search: &EigenSearch) -> Result<(), CliError> {
        if self.strict {
            if let Some(w) = search.warnings.first() {
                return Err(CliError::Numerical(format!("{w} (--strict)")));
            }
        }
        self.report.warnings.extend(search.warnings.iter().cloned());
        Ok(())
    }

    fn detail(&mut self, key: &str, value: Value) {
        self.report.details.insert(key.into(), value);
    }

    fn search(&mut self, set: &ChannelSet, rm: &ReactionMatrix, window: &EnergyWindow) -> Result<EigenSearch, CliError> {
        let search = find_eigenstates(set, rm, window).map_err(numerical)?;
        self.warn(&search)?;
        Ok(search)
    }

    fn wavepacket(&mut self) -> Result<WavepacketState, CliError> {
        let cfg = self.cfg;
        let (set, rm) = cfg.model(cfg.physics.k)?;
        let w = &cfg.wavepacket;
        let mut spec = match w.n0 {
            Some(n0) => WavepacketSpec::new(w.n0_channel, n0, w.dn),
            None => WavepacketSpec::at_energy(&set, w.n0_channel, cfg.e_total_for(None)?, w.dn).map_err(numerical)?,
        };
        spec.weight_cutoff = w.weight_cutoff;
        spec.max_discarded = w.max_discarded;
        let window = wavepacket_window(&set, &spec).map_err(numerical)?;
        let search = self.search(&set, &rm, &window)?;
        let wp = WavepacketState::from_eigenstates(&set, &spec, search.states).map_err(numerical)?;
        self.detail("n0", json!(spec.n0));
        self.detail("wavepacket_T_e", json!(wp.time_unit()));
        self.detail("wavepacket_eigenstates", json!(wp.n_states()));
        self.detail("captured_weight", json!(wp.captured_weight()));
        self.detail("window", window_json(&window));
        Ok(wp)
    }

    fn times(&self) -> Vec<f64> {
        time_grid(self.cfg.evolve.t_max, self.cfg.evolve.dt)
    }
}

fn window_json(w: &EnergyWindow) -> Value {
    json!({"nu_min": w.nu_min, "nu_max": w.nu_max, "E_min": w.e_min, "E_max": w.e_max})
}

pub fn run(command: Command, ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    match command {
        Command::Channels => channels(ctx, out),
        Command::Sos => sos(ctx, out),
        Command::Eigens => eigens(ctx, out),
        Command::EntropyStats => entropy_stats(ctx, out),
        Command::Evolve => evolve(ctx, out),
        Command::Correlation => correlation(ctx, out),
        Command::Husimi => husimi(ctx, out),
        Command::Revival => revival(ctx, out),
    }
}

fn channels(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let (set, rm) = ctx.cfg.model(ctx.cfg.physics.k)?;
    let e_total = ctx.cfg.e_total_for(None)?;
    let nus = set.channel_nus(e_total).map_err(numerical)?;
    let mut t = Table::new(&["N", "threshold", "nu"]);
    for (&n, nu) in set.n_list().iter().zip(&nus) {
        t.row(&[n.to_string(), num(set.rotational_energy(n)), num(*nu)]);
    }
    out.write_table("channels.csv", &t)?;

    let mut t = Table::new(&["Lambda", "mu"]);
    for (&l, mu) in rm.lambdas().iter().zip(rm.defects()) {
        t.row(&[l.to_string(), num(*mu)]);
    }
    out.write_table("defects.csv", &t)?;

    let header: Vec<String> = ["N".to_string()].into_iter().chain(rm.lambdas().iter().map(|l| format!("U_{l}"))).collect();
    let mut t = Table::new(&header);
    for (r, &n) in set.n_list().iter().enumerate() {
        let row: Vec<String> = [n.to_string()].into_iter().chain((0..rm.dim()).map(|c| num(rm.u()[(r, c)]))).collect();
        t.row(&row);
    }
    out.write_table("frame_transformation.csv", &t)?;

    let header: Vec<String> = ["N".to_string()].into_iter().chain(set.n_list().iter().map(|n| format!("K_{n}"))).collect();
    let mut t = Table::new(&header);
    for (r, &n) in set.n_list().iter().enumerate() {
        let row: Vec<String> = [n.to_string()].into_iter().chain((0..rm.dim()).map(|c| num(rm.k()[(r, c)]))).collect();
        t.row(&row);
    }
    out.write_table("reaction_matrix.csv", &t)?;
    ctx.detail("channel_count", json!(set.len()));
    Ok(())
}

fn sos(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let p = &cfg.physics;
    let params = ClassicalParams::new(p.j as f64, p.l as f64, p.k, cfg.b_rot(), cfg.e_total_for(None)?)
        .map_err(|e| CliError::Config(e.to_string()))?
        .with_mirror(cfg.sos.mirror);
    let seeds = seed_grid(cfg.sos.seed_grid);
    let points = params.iterate_sos(&seeds, cfg.sos.n_kicks).map_err(numerical)?;
    let mut t = Table::new(&["seed_id", "kick", "u_x", "u_y", "u_z", "N"]);
    for pt in points.iter() {
        t.row(&[pt.seed_id.to_string(), pt.kick_index.to_string(), num(pt.u[0]), num(pt.u[1]), num(pt.u[2]), num(pt.n)]);
    }
    out.write_table("sos.csv", &t)?;
    ctx.detail("seeds", json!(seeds.len()));
    ctx.detail("precession_angle_at_J", json!(params.precession_angle(p.j as f64).map_err(numerical)?));
    Ok(())
}

fn eigen_search(ctx: &mut Context) -> Result<(ChannelSet, ReactionMatrix, EigenSearch), CliError> {
    let (set, rm) = ctx.cfg.model(ctx.cfg.physics.k)?;
    let (lo, hi) = ctx.cfg.eigen_window()?;
    let window = EnergyWindow::from_nu(&set, lo, hi).map_err(|e| CliError::Config(format!("eigens: {e}")))?;
    let search = ctx.search(&set, &rm, &window)?;
    ctx.detail("window", window_json(&window));
    ctx.detail("eigenstate_count", json!(search.states.len()));
    ctx.detail("grid_points", json!(search.grid_points));
    Ok((set, rm, search))
}

fn eigens(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let (set, _, search) = eigen_search(ctx)?;
    let header: Vec<String> = ["E", "label_nu", "S2"]
        .into_iter()
        .map(String::from)
        .chain(set.n_list().iter().map(|n| format!("p_{n}")))
        .chain(set.n_list().iter().map(|n| format!("B_{n}")))
        .collect();
    let mut t = Table::new(&header);
    for s in &search.states {
        let row: Vec<String> = [num(s.energy), num(s.label_nu), num(s.s2)]
            .into_iter()
            .chain(s.populations.iter().map(|&p| num(p)))
            .chain(s.b.iter().map(|&b| num(b)))
            .collect();
        t.row(&row);
    }
    out.write_table("eigens.csv", &t)?;
    Ok(())
}

fn entropy_stats(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let cfg = ctx.cfg;
    let mut t = Table::new(&["k", "case", "count", "mean_S2", "rms_S2"]);
    let mut windows = Vec::new();
    for &k in &cfg.stats.k_values {
        let (set, rm) = cfg.model(k)?;
        for &case in &cfg.stats.cases {
            let centre = label_nu(&set, cfg.e_total_for(Some(case))?);
            let window = EnergyWindow::centred(&set, centre, cfg.stats.half_width)
                .map_err(|e| CliError::Config(format!("stats: {e}")))?;
            let search = ctx.search(&set, &rm, &window)?;
            let st = entropy_statistics(&search.states, &window).map_err(numerical)?;
            t.row(&[num(k), case.name().to_string(), st.count.to_string(), num(st.mean_s2), num(st.rms_s2)]);
            windows.push(json!({"k": k, "case": case.name(), "window": window_json(&window)}));
        }
    }
    out.write_table("entropy_stats.csv", &t)?;
    ctx.detail("windows", Value::Array(windows));
    Ok(())
}

fn entropy_table(wp: &WavepacketState, times: &[f64]) -> (Table, f64) {
    let series = wp.purity_series(times);
    let mut t = Table::new(&["t_over_Te", "S2"]);
    for (time, s2) in series.times.iter().zip(&series.s2) {
        t.row(&[num(*time), num(*s2)]);
    }
    (t, series.max_norm_deviation())
}

fn correlation_table(ctx: &Context, wp: &WavepacketState, times: &[f64]) -> Result<(Table, Vec<f64>), CliError> {
    let c = wp.channel_correlation(ctx.cfg.evolve.corr_channel, ctx.cfg.evolve.t_ref, times).map_err(numerical)?;
    let mut t = Table::new(&["t_over_Te", "re_C", "im_C", "abs_C"]);
    for (time, z) in times.iter().zip(&c) {
        t.row(&[num(*time), num(z.re), num(z.im), num(z.norm())]);
    }
    Ok((t, c.iter().map(|z| z.norm()).collect()))
}

fn evolve(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let wp = ctx.wavepacket()?;
    let (t, dev) = entropy_table(&wp, &ctx.times());
    out.write_table("evol.csv", &t)?;
    ctx.detail("max_norm_deviation", json!(dev));
    Ok(())
}

fn correlation(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let wp = ctx.wavepacket()?;
    let (t, _) = correlation_table(ctx, &wp, &ctx.times())?;
    out.write_table("corr.csv", &t)?;
    Ok(())
}

fn revival(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let wp = ctx.wavepacket()?;
    let times = ctx.times();
    let series = wp.purity_series(&times);
    let (corr, abs_c) = correlation_table(ctx, &wp, &times)?;
    let mut evol = Table::new(&["t_over_Te", "S2"]);
    for (time, s2) in series.times.iter().zip(&series.s2) {
        evol.row(&[num(*time), num(*s2)]);
    }
    let r = &ctx.cfg.revival;
    let range = (r.first_range[0], r.first_range[1]);
    let mut t = Table::new(&["series", "first_Te", "second_Te", "period_Te"]);
    for (name, values) in [("abs_C", &abs_c), ("S2", &series.s2)] {
        let est = estimate_revival(&times, values, range, r.min_gap).ok_or_else(|| {
            CliError::Numerical(format!("no {name} burst pair found; extend evolve.t_max_Te or revival.first_range"))
        })?;
        t.row(&[name.to_string(), num(est.first), num(est.second), num(est.period())]);
    }
    out.write_table("evol.csv", &evol)?;
    out.write_table("corr.csv", &corr)?;
    out.write_table("revival.csv", &t)?;
    let (te_rev, tc_rev) = revival_times(wp.spec().n0, ctx.cfg.b_rot());
    ctx.detail("T_e_rev_over_Te", json!(te_rev / wp.time_unit()));
    ctx.detail("T_c_rev_over_Te", json!(tc_rev / wp.time_unit()));
    Ok(())
}

fn select<'s>(states: &'s [Eigenstate], sel: &StateSelector) -> Option<&'s Eigenstate> {
    let by = |f: fn(&Eigenstate) -> f64| states.iter().min_by(|a, b| f(a).total_cmp(&f(b)));
    match *sel {
        StateSelector::Extreme(Extreme::MinS2) => by(|s| s.s2),
        StateSelector::Extreme(Extreme::MaxS2) => by(|s| -s.s2),
        StateSelector::LabelNu { label_nu } => states.iter().min_by(|a, b| {
            (a.label_nu - label_nu).abs().total_cmp(&(b.label_nu - label_nu).abs())
        }),
    }
}

fn husimi(ctx: &mut Context, out: &mut Staging) -> Result<(), CliError> {
    let (set, rm, search) = eigen_search(ctx)?;
    let h = &ctx.cfg.husimi;
    let single = h.states.len() == 1;
    let mut index = Table::new(&["file", "E", "label_nu", "S2"]);
    for (i, sel) in h.states.iter().enumerate() {
        let state = select(&search.states, sel).ok_or(CliError::Numerical("no eigenstates in the eigens window".into()))?;
        let a = molecular_frame_amplitudes(&state.amplitudes(), rm.u());
        let full = full_lambda_amplitudes(&a, set.parity(), set.l());
        let grid = HusimiGrid::compute(&full, set.l(), h.n_theta, h.n_phi);
        let mut t = Table::new(&["theta", "phi", "h"]);
        for (it, theta) in grid.theta.iter().enumerate() {
            for (ip, phi) in grid.phi.iter().enumerate() {
                t.row(&[num(*theta), num(*phi), num(grid.value(it, ip))]);
            }
        }
        let name = if single { "husimi.csv".to_string() } else { format!("husimi_{}.csv", i + 1) };
        out.write_table(&name, &t)?;
        index.row(&[name, num(state.energy), num(state.label_nu), num(state.s2)]);
    }
    out.write_table("husimi_states.csv", &index)?;
    Ok(())
}
