//! Experiment drivers. Each fills the bundle with its tables; a numerical
//! failure returns after writing whatever was already computed.

use dampgap::analysis::{default_t_grid, fit_decay_slope, gn_ratio, gn_theta, integral_inequality_ratio, xt_norm};
use dampgap::blowup::{
    blowup_criterion, compute_functionals, eta_check, j2_scaled, manufactured_separable, scaling_identity_check,
    weak_identity_terms, CutoffSpec, TestFunctionSpec, WeakIdentityTerms,
};
use dampgap::exec::map_slice;
use dampgap::exponents::{exact, exponent_table, format_exact, nbar, to_f64, ExponentQuery};
use dampgap::models::{classify_regime, solution_multiplier};
use dampgap::propagator::{decay_weights, displacement_multiplier, majorant_norm_decay, radial_multiplier_norm};
use dampgap::quadrature::geomspace;
use dampgap::{run_simulation, DampingOrders, Grid, PhysicalField, SimConfig, Trajectory, Verdict};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{model_spec, CutoffKind, ExperimentConfig, ExperimentKind};
use crate::error::{CliError, CliResult};
use crate::plot::{line_plot, Scale, Series};
use crate::report::{Bundle, Cell, Table};

pub fn run(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    match cfg.experiment {
        ExperimentKind::LinearDecay => linear_decay(cfg, seed, bundle),
        ExperimentKind::NonlinearRun => nonlinear_run(cfg, seed, bundle),
        ExperimentKind::ExponentTable => exponent_tables(cfg, seed, bundle),
        ExperimentKind::InequalitySuite => inequality_suite(cfg, bundle),
        ExperimentKind::BlowupFunctionalSweep => functional_sweep(cfg, seed, bundle),
        ExperimentKind::RegimeClassify => regime_classify(cfg, bundle),
    }
}

fn missing(section: &str) -> CliError {
    CliError::invalid(section, "section required")
}

fn build_grid(cfg: &ExperimentConfig) -> CliResult<Grid> {
    Ok(cfg.grid().ok_or_else(|| missing("grid"))??)
}

fn initial_velocity(cfg: &ExperimentConfig, grid: &Grid, seed: u64) -> CliResult<PhysicalField> {
    let data = cfg.data.as_ref().ok_or_else(|| missing("data"))?;
    let desc = data.build(seed).map_err(|e| CliError::invalid("data", e))?;
    let mut u1 = desc.sample(grid)?;
    if data.zero_mean {
        u1.remove_mean();
    }
    Ok(u1)
}

fn simulation(cfg: &ExperimentConfig, grid: Grid) -> CliResult<SimConfig> {
    cfg.sim_config(grid).ok_or_else(|| missing("sim"))
}

fn fail_on_numerical(traj: &Trajectory) -> CliResult<()> {
    match traj.verdict {
        Verdict::NumericalFailure(t) => Err(CliError::Numerical(format!(
            "time stepping failed at t = {t}; the tables written so far are kept"
        ))),
        _ => Ok(()),
    }
}

fn norms_table(traj: &Trajectory, lq: &[f64]) -> Table {
    let mut t = Table::new(
        "norms",
        &[
            ("t", "run_simulation: record time"),
            ("l2", "record_norms: ||u||_2"),
            ("hdot_delta", "record_norms: ||(-Delta)^delta u||_2"),
            ("hdot_sigma_half", "record_norms: ||(-Delta)^(sigma/2) u||_2"),
            ("velocity_l2", "record_norms: ||u_t||_2"),
            ("linf", "record_norms: ||u||_inf"),
        ],
    );
    for q in lq {
        t.add_column(format!("l{q}"), format!("record_norms: ||u||_{q}"));
    }
    for (&time, rec) in traj.times.iter().zip(&traj.norms) {
        let mut row: Vec<Cell> = vec![
            time.into(),
            rec.l2.into(),
            rec.hdot_delta.into(),
            rec.hdot_sigma_half.into(),
            rec.velocity_l2.into(),
            rec.linf.into(),
        ];
        row.extend(rec.lq.iter().map(|&(_, v)| Cell::from(v)));
        t.push(row);
    }
    t
}

fn norms_plot(bundle: &mut Bundle, traj: &Trajectory, title: &str) -> CliResult<()> {
    let series = |label, f: fn(&dampgap::NormRecord) -> f64| Series {
        label,
        points: traj.times.iter().zip(&traj.norms).map(|(&t, r)| (1.0 + t, f(r))).collect(),
    };
    let svg = line_plot(
        title,
        "1 + t",
        "norm",
        (Scale::Log, Scale::Log),
        &[
            series("||u||_2", |r| r.l2),
            series("||(-Delta)^delta u||_2", |r| r.hdot_delta),
            series("||(-Delta)^(sigma/2) u||_2", |r| r.hdot_sigma_half),
            series("||u_t||_2", |r| r.velocity_l2),
        ],
    );
    bundle.add_plot("norms", &svg)
}

fn linear_decay(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    let (sigma, delta) = (cfg.model.sigma, cfg.model.delta);
    if cfg.sim.is_some() {
        let grid = build_grid(cfg)?;
        let u1 = initial_velocity(cfg, &grid, seed)?;
        let sim = simulation(cfg, grid)?;
        let traj = run_simulation(&sim, &u1)?;
        bundle.add_table(&norms_table(&traj, &sim.lq_exponents))?;
        norms_plot(bundle, &traj, "linear run")?;
        bundle.note(format!(
            "linear run: {} records up to t = {}, verdict {}",
            traj.times.len(),
            traj.times.last().copied().unwrap_or(0.0),
            traj.verdict.label()
        ));
        fail_on_numerical(&traj)?;
    }
    if let Some(dec) = &cfg.decay {
        let weights = decay_weights(dec.n, sigma, delta)?;
        let b = 2.0 * delta;
        let cases = [
            ("solution", -sigma, -weights.w_u),
            ("energy", 0.0, -weights.w_energy),
            ("delta", -sigma + 2.0 * delta, -weights.w_delta),
        ];
        let times = geomspace(dec.t_range[0], dec.t_range[1], dec.samples - 1);
        let columns: Vec<Vec<f64>> = cases
            .iter()
            .map(|&(_, a, _)| {
                map_slice(&times, |&t| majorant_norm_decay(a, b, dec.n, t))
                    .into_iter()
                    .collect::<dampgap::Result<Vec<f64>>>()
            })
            .collect::<dampgap::Result<_>>()?;
        let mut table = Table::new(
            "majorant",
            &[
                ("t", "geomspace(t_range)"),
                ("q_solution", "majorant_norm_decay(a = -sigma, b = 2 delta, n)"),
                ("q_energy", "majorant_norm_decay(a = 0, b = 2 delta, n)"),
                ("q_delta", "majorant_norm_decay(a = -sigma + 2 delta, b = 2 delta, n)"),
            ],
        );
        for (i, &t) in times.iter().enumerate() {
            table.push(vec![t.into(), columns[0][i].into(), columns[1][i].into(), columns[2][i].into()]);
        }
        bundle.add_table(&table)?;
        let svg = line_plot(
            "radial majorants",
            "t",
            "Q(t)",
            (Scale::Log, Scale::Log),
            &cases
                .iter()
                .zip(&columns)
                .map(|(&(label, _, _), ys)| Series {
                    label,
                    points: times.iter().copied().zip(ys.iter().copied()).collect(),
                })
                .collect::<Vec<_>>(),
        );
        bundle.add_plot("majorant", &svg)?;

        let mut slopes = Table::new(
            "slopes",
            &[
                ("quantity", "label"),
                ("a", "majorant exponent a"),
                ("b", "majorant exponent b = 2 delta"),
                ("fitted_slope", "fit_decay_slope(majorant, fit_window)"),
                ("expected_slope", "decay_weights(n, sigma, delta)"),
                ("abs_diff", "|fitted_slope - expected_slope|"),
            ],
        );
        let window = (dec.fit_window[0], dec.fit_window[1]);
        for (&(label, a, expect), ys) in cases.iter().zip(&columns) {
            let samples: Vec<(f64, f64)> = times.iter().copied().zip(ys.iter().copied()).collect();
            let fit = fit_decay_slope(&samples, window)?;
            slopes.push(vec![
                label.into(),
                a.into(),
                b.into(),
                fit.slope.into(),
                expect.into(),
                (fit.slope - expect).abs().into(),
            ]);
            bundle.note(format!("majorant slope ({label}): {:.4} against {expect}", fit.slope));
        }
        bundle.add_table(&slopes)?;

        let orders = DampingOrders::new(sigma, delta)?;
        let range = dec.domination_range.unwrap_or([1e-2, 1e4]);
        let times = geomspace(range[0], range[1], dec.domination_samples.max(2) - 1);
        let rows: Vec<dampgap::Result<(f64, f64)>> = map_slice(&times, |&t| {
            Ok((
                radial_multiplier_norm(orders, dec.n, t)?,
                majorant_norm_decay(-sigma, b, dec.n, t)?,
            ))
        });
        let mut dom = Table::new(
            "domination",
            &[
                ("t", "geomspace(domination_range)"),
                ("multiplier_norm", "radial_multiplier_norm(orders, n, t)"),
                ("majorant", "majorant_norm_decay(a = -sigma, b = 2 delta, n)"),
                ("ratio", "multiplier_norm / majorant"),
            ],
        );
        let mut worst: f64 = 0.0;
        for (&t, row) in times.iter().zip(rows) {
            let (m, q) = row?;
            worst = worst.max(m / q);
            dom.push(vec![t.into(), m.into(), q.into(), (m / q).into()]);
        }
        bundle.add_table(&dom)?;
        bundle.note(format!("multiplier norm over majorant: max ratio {worst:.4}"));

        if dec.sup_samples > 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut sup = Table::new(
                "sup_bound",
                &[
                    ("t", "seeded log-uniform sample on [1e-3, 1e4]"),
                    ("r", "seeded log-uniform sample on [1e-4, 10]"),
                    ("abs_multiplier", "|displacement_multiplier(sigma, delta, t, r)|"),
                    ("holds", "abs_multiplier <= t"),
                ],
            );
            let mut violations = 0;
            for _ in 0..dec.sup_samples {
                let t = 10f64.powf(rng.random_range(-3.0..4.0));
                let r = 10f64.powf(rng.random_range(-4.0..1.0));
                let m = displacement_multiplier(sigma, delta, t, r).abs();
                violations += usize::from(m > t);
                sup.push(vec![t.into(), r.into(), m.into(), (m <= t).into()]);
            }
            bundle.add_table(&sup)?;
            bundle.note(format!("sup bound |m| <= t: {violations} violations in {}", dec.sup_samples));
        }
    }
    if cfg.modes.is_some() {
        mode_oracle(cfg, seed, bundle)?;
    }
    Ok(())
}

/// `exp(A t)` by scaling and squaring a truncated Taylor series.
fn expm2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let norm = a.iter().map(|row| row[0].abs() + row[1].abs()).fold(0.0, f64::max) * t;
    let squarings = if norm > 0.25 { (norm / 0.25).log2().ceil() as u32 } else { 0 };
    let h = t / 2f64.powi(squarings as i32);
    let mul = |x: [[f64; 2]; 2], y: [[f64; 2]; 2]| {
        let mut z = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                z[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
            }
        }
        z
    };
    let ah = [[a[0][0] * h, a[0][1] * h], [a[1][0] * h, a[1][1] * h]];
    let mut term = [[1.0, 0.0], [0.0, 1.0]];
    let mut sum = term;
    for k in 1..=20 {
        term = mul(term, ah);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= k as f64;
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(sum, sum);
    }
    sum
}

fn mode_oracle(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    let m = cfg.modes.as_ref().ok_or_else(|| missing("modes"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = Table::new(
        "modes",
        &[
            ("r", "seeded uniform sample on r_range"),
            ("sigma", "seeded uniform sample on sigma_range"),
            ("delta", "seeded uniform sample, 0 < 2 delta < sigma"),
            ("t", "modes.times"),
            ("u0", "seeded uniform sample on [-1, 1]"),
            ("v0", "seeded uniform sample on [-1, 1]"),
            ("u", "DampingOrders::transfer(r, t) applied to (u0, v0)"),
            ("v", "DampingOrders::transfer(r, t) applied to (u0, v0)"),
            ("u_ref", "companion matrix exponential (scaling and squaring)"),
            ("v_ref", "companion matrix exponential (scaling and squaring)"),
            ("rel_err", "|(u, v) - (u_ref, v_ref)| / |(u_ref, v_ref)|"),
        ],
    );
    let mut worst: f64 = 0.0;
    for _ in 0..m.samples {
        let r = rng.random_range(m.r_range[0]..m.r_range[1]);
        let sigma = rng.random_range(m.sigma_range[0]..m.sigma_range[1]);
        let delta = 0.5 * sigma * rng.random_range(0.05..0.95);
        let y0 = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let orders = DampingOrders::new(sigma, delta)?;
        let (beta, omega) = orders.rates(r);
        let companion = [[0.0, 1.0], [-(beta * beta + omega * omega), -2.0 * beta]];
        for &t in &m.times {
            let p = orders.transfer(r, t);
            let e = expm2(companion, t);
            let got = [p[0][0] * y0[0] + p[0][1] * y0[1], p[1][0] * y0[0] + p[1][1] * y0[1]];
            let want = [e[0][0] * y0[0] + e[0][1] * y0[1], e[1][0] * y0[0] + e[1][1] * y0[1]];
            let err = (got[0] - want[0]).hypot(got[1] - want[1]) / want[0].hypot(want[1]);
            worst = worst.max(err);
            table.push(vec![
                r.into(),
                sigma.into(),
                delta.into(),
                t.into(),
                y0[0].into(),
                y0[1].into(),
                got[0].into(),
                got[1].into(),
                want[0].into(),
                want[1].into(),
                err.into(),
            ]);
        }
    }
    bundle.add_table(&table)?;
    bundle.note(format!("mode oracle: max relative error {worst:.3e}"));
    Ok(())
}

fn nonlinear_run(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    let grid = build_grid(cfg)?;
    let u1 = initial_velocity(cfg, &grid, seed)?;
    let mut sim = simulation(cfg, grid)?;
    let section = cfg.sim.as_ref().ok_or_else(|| missing("sim"))?;
    let (factor, retries) = section.escalation.map_or((1.0, 0), |e| (e.factor, e.retries));

    let mut attempts = Table::new(
        "attempts",
        &[
            ("attempt", "escalation counter"),
            ("amplitude", "sim.amplitude * factor^attempt"),
            ("verdict", "run_simulation: detect_blowup"),
            ("verdict_time", "run_simulation: detect_blowup"),
            ("records", "run_simulation: recorded times"),
            ("t_last", "run_simulation: last recorded time"),
        ],
    );
    let mut traj = None;
    for attempt in 0..=retries {
        let run = run_simulation(&sim, &u1)?;
        attempts.push(vec![
            attempt.into(),
            sim.amplitude.into(),
            run.verdict.label().into(),
            run.verdict.time().into(),
            run.times.len().into(),
            run.times.last().copied().into(),
        ]);
        bundle.note(format!(
            "attempt {attempt}: amplitude {}, verdict {}{}",
            sim.amplitude,
            run.verdict.label(),
            run.verdict.time().map_or(String::new(), |t| format!(" at t = {t}"))
        ));
        let done = matches!(run.verdict, Verdict::BlowupDetected(_) | Verdict::NumericalFailure(_));
        traj = Some(run);
        if done || attempt == retries {
            break;
        }
        sim.amplitude *= factor;
    }
    let traj = traj.expect("at least one attempt");
    bundle.add_table(&attempts)?;
    bundle.add_table(&norms_table(&traj, &sim.lq_exponents))?;
    norms_plot(bundle, &traj, "nonlinear run")?;
    fail_on_numerical(&traj)?;

    let n = grid.dim() as u32;
    let weights = decay_weights(n, sim.sigma, sim.delta)?;
    let x = xt_norm(&traj, weights)?;
    let mut summary = Table::new(
        "summary",
        &[
            ("verdict", "run_simulation: detect_blowup"),
            ("verdict_time", "run_simulation: detect_blowup"),
            ("t_end", "sim.t_end"),
            ("amplitude", "final attempt amplitude"),
            ("xt_norm", "xt_norm(trajectory, decay_weights(n, sigma, delta))"),
            ("sup_l2", "xt_norm: weighted sup of ||u||_2"),
            ("sup_energy", "xt_norm: weighted sup of ||(-Delta)^(sigma/2) u||_2"),
            ("sup_velocity", "xt_norm: weighted sup of ||u_t||_2"),
            ("xt_norm_doubled", "xt_norm over 2 t_end"),
            ("relative_change", "|xt_norm_doubled - xt_norm| / xt_norm"),
        ],
    );
    let mut doubled = None;
    if section.doubling_check {
        let mut long = sim.clone();
        long.t_end *= 2.0;
        let run = run_simulation(&long, &u1)?;
        bundle.note(format!("doubled horizon t_end = {}: verdict {}", long.t_end, run.verdict.label()));
        fail_on_numerical(&run)?;
        let y = xt_norm(&run, weights)?.value;
        doubled = Some((y, (y - x.value).abs() / x.value));
    }
    summary.push(vec![
        traj.verdict.label().into(),
        traj.verdict.time().into(),
        sim.t_end.into(),
        sim.amplitude.into(),
        x.value.into(),
        x.sup_l2.into(),
        x.sup_energy.into(),
        x.sup_velocity.into(),
        doubled.map(|d| d.0).into(),
        doubled.map(|d| d.1).into(),
    ]);
    bundle.add_table(&summary)?;
    bundle.note(format!(
        "verdict {}, X(T) norm {:.6}{}",
        traj.verdict.label(),
        x.value,
        doubled.map_or(String::new(), |(y, c)| format!(", {y:.6} over 2 t_end (relative change {c:.2e})"))
    ));
    Ok(())
}

fn exponent_tables(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    let e = cfg.exponents.as_ref().ok_or_else(|| missing("exponents"))?;
    let (sigma, delta) = (cfg.model.sigma, cfg.model.delta);
    let rows = exponent_table(&e.dims, sigma, delta)?;
    let ops = [
        ("n", "exponents.dims"),
        ("p_blowup", "blowup_upper_bound: 1 + 4 delta/(n - 2 delta)"),
        ("p_global", "global_lower_bound: 1 + (sigma + 2 delta)/(n - sigma)"),
        ("gap_width", "gap: p_global - p_blowup"),
    ];
    let mut decimal = Table::new("exponents", &ops);
    let mut exact_tab = Table::new("exponents_exact", &ops);
    for row in &rows {
        decimal.push(row.iter().map(|v| Cell::from(to_f64(v))).collect());
        exact_tab.push(row.iter().map(|v| Cell::from(format_exact(v))).collect());
        bundle.note(format!(
            "n = {}: blow-up below {}, global existence above {}",
            format_exact(&row[0]),
            format_exact(&row[1]),
            format_exact(&row[2])
        ));
    }
    bundle.add_table(&decimal)?;
    bundle.add_table(&exact_tab)?;

    if !e.nbar_sigmas.is_empty() {
        let mut t = Table::new(
            "nbar",
            &[
                ("sigma", "exponents.nbar_sigmas"),
                ("nbar", "nbar(sigma)"),
                ("bracket_lo", "nbar: 3 sigma - 2"),
                ("bracket_hi", "nbar: 3 sigma - 1"),
                ("inside", "nbar: bracket membership"),
                ("sigma_above_one", "nbar: sigma > 1"),
            ],
        );
        for &s in &e.nbar_sigmas {
            let r = nbar(s)?;
            t.push(vec![
                s.into(),
                r.value.into(),
                r.bracket.0.into(),
                r.bracket.1.into(),
                r.inside.into(),
                r.in_context.into(),
            ]);
        }
        bundle.add_table(&t)?;
    }

    if e.criterion_samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut t = Table::new(
            "criterion",
            &[
                ("n", "seeded uniform sample on 1..=8"),
                ("delta", "seeded sample on the 1e-4 lattice in (0, n/2)"),
                ("p", "seeded sample on the 1e-4 lattice in (1, 5)"),
                ("dominant", "blowup_criterion: -4 delta p' + n + 2 delta, exact"),
                ("criterion_met", "blowup_criterion: dominant < 0"),
                ("below_bound", "exact(p) < blowup_upper_bound(n, delta)"),
                ("agree", "criterion_met == below_bound"),
            ],
        );
        let mut disagreements = 0;
        for _ in 0..e.criterion_samples {
            let n: u32 = rng.random_range(1..=8);
            let half = 5_000 * n as i64;
            let delta = rng.random_range(1..half) as f64 / 1e4;
            let p = rng.random_range(10_001..50_000) as f64 / 1e4;
            let ledger = blowup_criterion(n, 2.0 * delta + 1.0, delta, p)?;
            let bound = dampgap::exponents::blowup_upper_bound(&ExponentQuery::new(n, 2.0 * delta + 1.0, delta))?;
            let below = exact("p", p)? < bound;
            disagreements += usize::from(below != ledger.blowup_condition_met);
            t.push(vec![
                n.into(),
                delta.into(),
                p.into(),
                format_exact(&ledger.dominant).into(),
                ledger.blowup_condition_met.into(),
                below.into(),
                (below == ledger.blowup_condition_met).into(),
            ]);
        }
        bundle.add_table(&t)?;
        bundle.note(format!(
            "blow-up criterion against the exponent bound: {disagreements} disagreements in {}",
            e.criterion_samples
        ));
    }
    Ok(())
}

fn inequality_suite(cfg: &ExperimentConfig, bundle: &mut Bundle) -> CliResult<()> {
    let iq = cfg.inequality.as_ref().ok_or_else(|| missing("inequality"))?;
    if !iq.gn.is_empty() {
        let results: Vec<dampgap::Result<Vec<f64>>> = map_slice(&iq.gn, |c| {
            let grid = Grid::new(c.dim, c.points, c.half_width)?;
            c.lambdas
                .iter()
                .map(|&lam| {
                    let g = grid.sample(|x| (-x.iter().map(|v| (lam * v).powi(2)).sum::<f64>()).exp());
                    Ok(gn_ratio(&g, c.q, c.s)?.ratio)
                })
                .collect()
        });
        let mut t = Table::new(
            "gn",
            &[
                ("dim", "inequality.gn.dim"),
                ("s", "inequality.gn.s"),
                ("q", "inequality.gn.q"),
                ("lambda", "dilation g(lambda x), g = exp(-|x|^2)"),
                ("theta", "gn_theta(n, q, s)"),
                ("ratio", "gn_ratio(g(lambda .), q, s)"),
                ("rel_spread", "|ratio - ratio(first lambda)| / ratio(first lambda)"),
            ],
        );
        for (c, ratios) in iq.gn.iter().zip(results) {
            let ratios = ratios?;
            let base = ratios[0];
            let mut worst: f64 = 0.0;
            for (&lam, &r) in c.lambdas.iter().zip(&ratios) {
                let spread = (r - base).abs() / base;
                worst = worst.max(spread);
                t.push(vec![
                    c.dim.into(),
                    c.s.into(),
                    c.q.into(),
                    lam.into(),
                    gn_theta(c.dim, c.q, c.s).into(),
                    r.into(),
                    spread.into(),
                ]);
            }
            bundle.note(format!(
                "GN ratio (n={}, s={}, q={}): max relative spread {worst:.2e}",
                c.dim, c.s, c.q
            ));
        }
        bundle.add_table(&t)?;
    }
    if !iq.integral.is_empty() {
        let grid = match (iq.t_range, iq.t_samples) {
            (Some(r), n) => geomspace(r[0], r[1], n.unwrap_or(40)),
            (None, _) => default_t_grid(),
        };
        let checks: Vec<dampgap::Result<_>> = map_slice(&iq.integral, |&[a, b]| integral_inequality_ratio(a, b, &grid));
        let mut curves = Table::new(
            "integral",
            &[
                ("a", "inequality.integral"),
                ("b", "inequality.integral"),
                ("t", "t grid"),
                ("ratio", "integral_inequality_ratio(a, b, t)"),
            ],
        );
        let mut summary = Table::new(
            "integral_summary",
            &[
                ("a", "inequality.integral"),
                ("b", "inequality.integral"),
                ("tail_variation", "IntegralIneqCheck::tail_variation"),
                ("bounded", "IntegralIneqCheck::is_bounded"),
                ("closed_form_error", "max |ratio - (1 - (1+t)^-1)| for a = 2, b = 0"),
            ],
        );
        let mut series = Vec::new();
        for check in checks {
            let c = check?;
            for &(t, r) in &c.ratio_curve {
                curves.push(vec![c.a.into(), c.b.into(), t.into(), r.into()]);
            }
            let closed = (c.a == 2.0 && c.b == 0.0).then(|| {
                c.ratio_curve
                    .iter()
                    .map(|&(t, r)| (r - (1.0 - 1.0 / (1.0 + t))).abs())
                    .fold(0.0, f64::max)
            });
            summary.push(vec![
                c.a.into(),
                c.b.into(),
                c.tail_variation().into(),
                c.is_bounded().into(),
                closed.into(),
            ]);
            bundle.note(format!(
                "integral inequality (a={}, b={}): last-decade variation {}",
                c.a,
                c.b,
                c.tail_variation().map_or("-".into(), |v| format!("{v:.3}"))
            ));
            series.push((format!("a={}, b={}", c.a, c.b), c.ratio_curve));
        }
        bundle.add_table(&curves)?;
        bundle.add_table(&summary)?;
        let svg = line_plot(
            "integral inequality ratio",
            "t",
            "ratio",
            (Scale::Log, Scale::Linear),
            &series
                .iter()
                .map(|(label, pts)| Series {
                    label,
                    points: pts.clone(),
                })
                .collect::<Vec<_>>(),
        );
        bundle.add_plot("integral", &svg)?;
    }
    Ok(())
}

fn cutoff_for(kind: CutoffKind, p: f64) -> dampgap::Result<CutoffSpec> {
    match kind {
        CutoffKind::Smoothstep => CutoffSpec::smoothstep(p),
        CutoffKind::Linear => CutoffSpec::linear(p),
    }
}

fn functional_sweep(cfg: &ExperimentConfig, seed: u64, bundle: &mut Bundle) -> CliResult<()> {
    let (sigma, delta) = (cfg.model.sigma, cfg.model.delta);
    let orders = DampingOrders::new(sigma, delta)?;
    if let Some(w) = &cfg.sweep {
        let grid = build_grid(cfg)?;
        let u1 = initial_velocity(cfg, &grid, seed)?;
        let mut sim = simulation(cfg, grid)?;
        sim.p = w.p;
        let traj = run_simulation(&sim, &u1)?;
        bundle.add_table(&norms_table(&traj, &sim.lq_exponents))?;
        fail_on_numerical(&traj)?;
        let cutoff = cutoff_for(w.cutoff, w.p)?;
        let eta = eta_check(&cutoff)?;
        bundle.note(format!(
            "cutoff condition: sup {:.4e}, {}",
            eta.max,
            if eta.bounded { "bounded" } else { "unbounded" }
        ));
        let reports = map_slice(&w.radii, |&r| {
            let spec = TestFunctionSpec::new(grid.dim(), delta, r)?;
            Ok::<_, dampgap::Error>((spec, compute_functionals(&traj, orders, &spec, &cutoff)?))
        });
        let mut t = Table::new(
            "functionals",
            &[
                ("R", "sweep.radii"),
                ("time_support", "TestFunctionSpec::time_scale: R^(2 delta)"),
                ("i_r", "compute_functionals: I_R"),
                ("i_rt", "compute_functionals: I_(R,t)"),
                ("j1", "compute_functionals: J_1"),
                ("j2", "compute_functionals: J_2"),
                ("j3", "compute_functionals: J_3"),
                ("j4", "compute_functionals: J_4"),
                ("data_term", "compute_functionals: int u1 phi_R"),
                ("residual", "compute_functionals: weak-form residual"),
                ("j2_scaled", "j2_scaled: |J_2| I_R^(-1/p) R^(2 sigma - (n + alpha)/p')"),
            ],
        );
        let mut scaled = Vec::new();
        for (&r, rep) in w.radii.iter().zip(reports) {
            let (spec, rep) = rep?;
            let s = j2_scaled(&rep, &spec, sigma, w.p);
            scaled.push(s);
            t.push(vec![
                r.into(),
                spec.time_scale().into(),
                rep.i_r.into(),
                rep.i_rt.into(),
                rep.j1.into(),
                rep.j2.into(),
                rep.j3.into(),
                rep.j4.into(),
                rep.data_term.into(),
                rep.residual.into(),
                s.into(),
            ]);
        }
        bundle.add_table(&t)?;
        let hi = scaled.iter().copied().fold(0.0, f64::max);
        let lo = scaled.iter().copied().fold(f64::INFINITY, f64::min);
        bundle.note(format!("scaled J_2 over the radii: max/min {:.3}", hi / lo));

        let n = w.ledger_dim.unwrap_or(grid.dim() as u32);
        let ledger = blowup_criterion(n, sigma, delta, w.p)?;
        let mut t = Table::new(
            "ledger",
            &[
                ("term", "label"),
                ("exponent", "blowup_criterion: R-exponent, exact"),
                ("exponent_f64", "blowup_criterion: R-exponent"),
            ],
        );
        for (k, e) in ledger.exponents.iter().enumerate() {
            t.push(vec![format!("J{}", k + 1).into(), format_exact(e).into(), to_f64(e).into()]);
        }
        t.push(vec![
            "dominant".into(),
            format_exact(&ledger.dominant).into(),
            ledger.dominant_f64().into(),
        ]);
        t.push(vec![
            "alpha".into(),
            format_exact(&ledger.alpha_choice).into(),
            to_f64(&ledger.alpha_choice).into(),
        ]);
        bundle.add_table(&t)?;
        let e = &ledger.exponents;
        bundle.note(format!(
            "ledger (n = {n}): J1/J3/J4 exponents equal: {}, blow-up condition met: {}",
            e[0] == e[2] && e[2] == e[3],
            ledger.blowup_condition_met
        ));
    }
    if let Some(sc) = &cfg.scaling {
        let grid = build_grid(cfg)?;
        let w = sc.probe_width;
        let checks = map_slice(&sc.cases, |&[rho, r]| {
            let spec = TestFunctionSpec::new(grid.dim(), delta, r)?;
            scaling_identity_check(rho, &spec, &grid, |x| (-x.iter().map(|v| v * v).sum::<f64>() / (w * w)).exp())
        });
        let mut t = Table::new(
            "scaling",
            &[
                ("rho", "scaling.cases"),
                ("R", "scaling.cases"),
                ("error", "scaling_identity_check: max |LHS - RHS| / max |LHS|"),
                ("compared_points", "scaling_identity_check"),
                ("boundary_ratio", "scaling_identity_check"),
            ],
        );
        for (&[rho, r], c) in sc.cases.iter().zip(checks) {
            let c = c?;
            t.push(vec![
                rho.into(),
                r.into(),
                c.error.into(),
                c.compared_points.into(),
                c.boundary_ratio.into(),
            ]);
            bundle.note(format!("scaling identity rho = {rho}, R = {r}: relative error {:.2e}", c.error));
        }
        bundle.add_table(&t)?;
    }
    if let Some(wi) = &cfg.weak_identity {
        let grid = build_grid(cfg)?;
        let spec = TestFunctionSpec::new(grid.dim(), delta, wi.radius)?;
        let cutoff = CutoffSpec::smoothstep(wi.p)?;
        let end = spec.time_scale();
        let times: Vec<f64> = (0..=wi.steps).map(|i| end * i as f64 / wi.steps as f64).collect();
        let width = wi.profile_width;
        let profile = grid.sample(|x| (-x.iter().map(|v| v * v).sum::<f64>() / (width * width)).exp());
        let a = |t: f64| {
            let e = (-t).exp();
            [t * e, (1.0 - t) * e, (t - 2.0) * e]
        };
        let (u, src, u1) = manufactured_separable(&profile, a, &times, orders)?;
        let terms = weak_identity_terms(&u, &src, &u1, orders, &spec, &cutoff)?;
        let clean = terms.residual();
        let mut t = Table::new(
            "weak_identity",
            &[
                ("term", "label"),
                ("value", "weak_identity_terms on t e^(-t) G(x)"),
                ("residual", "WeakIdentityTerms::residual"),
            ],
        );
        let named = [
            ("source", terms.source),
            ("j1", terms.j1),
            ("j2", terms.j2),
            ("j3", terms.j3),
            ("j4", terms.j4),
            ("data", terms.data),
        ];
        for (name, v) in named {
            t.push(vec![name.into(), v.into(), Cell::Empty]);
        }
        t.push(vec!["identity".into(), Cell::Empty, clean.into()]);
        type Flip = fn(&mut WeakIdentityTerms);
        let flips: [(&str, Flip); 6] = [
            ("flip source", |t| t.source = -t.source),
            ("flip j1", |t| t.j1 = -t.j1),
            ("flip j2", |t| t.j2 = -t.j2),
            ("flip j3", |t| t.j3 = -t.j3),
            ("flip j4", |t| t.j4 = -t.j4),
            ("flip data", |t| t.data = -t.data),
        ];
        let mut smallest = f64::INFINITY;
        for (name, flip) in flips {
            let mut c = terms;
            flip(&mut c);
            smallest = smallest.min(c.residual());
            t.push(vec![name.into(), Cell::Empty, c.residual().into()]);
        }
        bundle.add_table(&t)?;
        bundle.note(format!(
            "weak identity residual {clean:.2e}; smallest sign-corrupted residual {smallest:.2e} (margin {:.1e})",
            smallest / clean.max(f64::MIN_POSITIVE)
        ));
    }
    Ok(())
}

fn regime_classify(cfg: &ExperimentConfig, bundle: &mut Bundle) -> CliResult<()> {
    let r = cfg.regime.as_ref().ok_or_else(|| missing("regime"))?;
    let mut regimes = Table::new(
        "regimes",
        &[
            ("variant", "regime.cases"),
            ("sigma", "regime.cases"),
            ("delta", "regime.cases"),
            ("mu", "regime.cases"),
            ("kind", "classify_regime"),
            ("a_exponent", "classify_regime: diffusive exponent"),
            ("b_exponent", "classify_regime: oscillatory exponent"),
            ("validity_radius", "ModelSpec::validity"),
        ],
    );
    let mut mult = Table::new(
        "multipliers",
        &[
            ("variant", "regime.cases"),
            ("t", "regime.times"),
            ("r", "regime.radii"),
            ("re", "solution_multiplier(model, t, r)"),
            ("im", "solution_multiplier(model, t, r)"),
        ],
    );
    for c in &r.cases {
        let spec = model_spec(&c.variant, c.sigma, c.delta, c.mu, None)?;
        let class = classify_regime(&spec)?;
        let radius = spec.validity().radius;
        regimes.push(vec![
            spec.variant.name().into(),
            spec.sigma.into(),
            spec.delta.into(),
            c.mu.into(),
            format!("{:?}", class.kind).into(),
            class.a_exponent.into(),
            class.b_exponent.into(),
            radius.into(),
        ]);
        for &t in &r.times {
            for &rad in &r.radii {
                let m = solution_multiplier(&spec, t, rad).ok();
                mult.push(vec![
                    spec.variant.name().into(),
                    t.into(),
                    rad.into(),
                    m.map(|z| z.re).into(),
                    m.map(|z| z.im).into(),
                ]);
            }
        }
        bundle.note(format!("{}: {:?}", spec.variant.name(), class.kind));
    }
    bundle.add_table(&regimes)?;
    if !mult.rows.is_empty() {
        bundle.add_table(&mult)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_exponential_of_rotation_and_decay() {
        let e = expm2([[0.0, 1.0], [-1.0, 0.0]], 10.0);
        assert!((e[0][0] - 10f64.cos()).abs() < 1e-12 && (e[0][1] - 10f64.sin()).abs() < 1e-12);
        let d = expm2([[-3.0, 0.0], [0.0, -0.5]], 4.0);
        assert!((d[0][0] / (-12f64).exp() - 1.0).abs() < 1e-12 && (d[1][1] - (-2f64).exp()).abs() < 1e-14);
    }
}
