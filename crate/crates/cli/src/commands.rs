use spatperm::fourier::{
    build_lattice, cycle_density_expectation, macroscopic_scan, mode_marginals, n0_law_and_mgf, partition_dp,
    typicality_probs, DPTables, LatticeSpec, TypicalityMethod,
};
use spatperm::nonspatial::{h_crosscheck, h_series, theorem21_scan};
use spatperm::spatial::{
    cross_validate, run_chain_with, uniform_positions, CrossValidationCase, PeriodicXi, SpatialState,
};
use spatperm::thermo::{duality_and_shift_check, Quantity, ThermoModel};
use spatperm::{Dispersion, WeightSequence};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{f, u, Check, RunOutput, Table};

pub const COMMANDS: &[&str] = &[
    "h-series",
    "h-crosscheck",
    "cycle-scan",
    "rho-c",
    "pressure",
    "free-energy",
    "duality-check",
    "fourier-exact",
    "fourier-scan",
    "n0-mgf",
    "typicality",
    "spatial-mc",
    "cross-validate",
];

const TOL: f64 = 1e-10;

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn gaussian3() -> Dispersion {
    Dispersion::gaussian(3, 1.0).expect("valid")
}

fn quantity_cells(q: &Quantity) -> [String; 3] {
    [f(q.value()), f(q.error()), q.is_finite().to_string()]
}

pub fn run(command: &str, cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    match command {
        "h-series" => h_series_cmd(cfg),
        "h-crosscheck" => h_crosscheck_cmd(cfg),
        "cycle-scan" => cycle_scan(cfg),
        "rho-c" => rho_c(cfg),
        "pressure" => pressure(cfg),
        "free-energy" => free_energy(cfg),
        "duality-check" => duality(cfg),
        "fourier-exact" => fourier_exact(cfg),
        "fourier-scan" => fourier_scan(cfg),
        "n0-mgf" => n0_mgf(cfg),
        "typicality" => typicality(cfg),
        "spatial-mc" => spatial_mc(cfg),
        "cross-validate" => cross_validate_cmd(cfg),
        other => Err(CliError::validation(format!("unknown command `{other}`"))),
    }
}

fn h_series_cmd(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let w = cfg.weights(WeightSequence::zero());
    let n_max = cfg.n_max(10);
    let h = h_series(&w, n_max)?;
    let mut t = Table::new("data", &["n", "h", "log_h"]);
    for n in 0..=n_max {
        t.push(vec![u(n), f(h.value(n)), f(h.log_value(n))]);
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![],
    })
}

fn h_crosscheck_cmd(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let w = cfg.weights(WeightSequence::zero());
    let n_max = cfg.n_max(30);
    let gamma = cfg.gamma(0.5);
    let tol = cfg.tol(TOL);
    let c = h_crosscheck(&w, n_max, gamma)?;
    let mut t = Table::new("data", &["n", "recursion", "explicit", "increments"]);
    for n in 0..=n_max {
        t.push(vec![u(n), f(c.recursion[n]), f(c.explicit[n]), f(c.increments[n])]);
    }
    let checks = vec![
        Check::within("explicit_max_rel", c.explicit_max_rel, 0.0, tol),
        Check::within("increments_max_rel", c.increments_max_rel, 0.0, tol),
        Check::within("laplace_rel", c.laplace.rel_discrepancy, 0.0, tol),
        Check::within("bound_violation", c.bounds.max_violation(), 0.0, tol),
    ];
    Ok(RunOutput {
        tables: vec![t],
        checks,
    })
}

fn cycle_scan(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let w = cfg.weights(WeightSequence::power(1.0, 2.0));
    let n = cfg.n(1000);
    let s_grid = cfg.s_grid(vec![0.25, 0.5, 0.75]);
    let scan = theorem21_scan(&w, n, &s_grid)?;
    let mut t = Table::new("data", &["n", "s", "value", "gap", "within_hypothesis"]);
    for p in &scan.points {
        t.push(vec![
            u(n),
            f(p.s),
            f(p.value),
            f((p.value - p.s).abs()),
            scan.within_hypothesis.to_string(),
        ]);
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![],
    })
}

fn model(cfg: &mut ExperimentConfig, default_weights: WeightSequence) -> Result<ThermoModel, CliError> {
    let disp = cfg.dispersion(gaussian3());
    let w = cfg.weights(default_weights);
    let tol = cfg.tol(TOL);
    Ok(ThermoModel::new(&disp, &w, tol)?)
}

fn rho_c(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = model(cfg, WeightSequence::zero())?;
    let q = m.critical_density()?;
    let mut t = Table::new("data", &["rho_c", "error", "finite"]);
    t.push(quantity_cells(&q).to_vec());
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![],
    })
}

fn pressure(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = model(cfg, WeightSequence::zero())?;
    let grid = cfg.mu_grid(linspace(-3.0, -0.05, 60));
    let mut t = Table::new(
        "data",
        &[
            "mu",
            "pressure",
            "pressure_error",
            "pressure_finite",
            "density",
            "density_error",
            "density_finite",
        ],
    );
    for &mu in &grid {
        let p = m.pressure(mu)?;
        let r = m.density(mu)?;
        let mut row = vec![f(mu)];
        row.extend(quantity_cells(&p));
        row.extend(quantity_cells(&r));
        t.push(row);
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![],
    })
}

fn free_energy(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = model(cfg, WeightSequence::zero())?;
    let grid = match cfg.rho_grid.clone() {
        Some(g) => g,
        None => {
            let rc = m.critical_density()?;
            let top = if rc.is_finite() { 1.5 * rc.value() } else { 1.0 };
            cfg.rho_grid(linspace(0.0, top, 61))
        }
    };
    let mut t = Table::new("data", &["rho", "q", "error", "mu_star", "saturated"]);
    for &rho in &grid {
        let q = m.free_energy(rho)?;
        t.push(vec![f(rho), f(q.value), f(q.error), f(q.mu), q.saturated.to_string()]);
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![],
    })
}

/// Declared tolerances of the duality check.
const DOUBLE_TRANSFORM_TOL: f64 = 1e-4;
const FLAT_SLOPE_TOL: f64 = 1e-3;
const SHIFT_TOL: f64 = 1e-8;

fn duality(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let m = model(cfg, WeightSequence::zero())?;
    let mu_grid = cfg.mu_grid(linspace(-3.0, -0.05, 60));
    let rho_grid = match cfg.rho_grid.clone() {
        Some(g) => g,
        None => {
            let rc = m.critical_density()?;
            if !rc.is_finite() {
                return Err(CliError::validation("rho_grid required when rho_c is infinite"));
            }
            cfg.rho_grid(linspace(0.0, 1.5 * rc.value(), 301))
        }
    };
    let c = cfg.shift_c(0.7);
    let r = duality_and_shift_check(&m, &mu_grid, &rho_grid, c)?;
    let mut t = Table::new("data", &["metric", "value"]);
    let flat = r.flat_slope_max.unwrap_or(0.0);
    for (k, v) in [
        ("rho_c", r.rho_c.value()),
        ("legendre_residual", r.legendre_residual),
        ("grid_bound", r.grid_bound),
        ("double_transform_residual", r.double_transform_residual),
        ("flat_slope_max", flat),
        ("convexity_violation", r.convexity_violation),
        ("shift_pressure_residual", r.shift_pressure_residual),
        ("shift_free_energy_residual", r.shift_free_energy_residual),
    ] {
        t.push(vec![k.to_string(), f(v)]);
    }
    let checks = vec![
        Check::within(
            "legendre_residual_over_grid_bound",
            (r.legendre_residual - r.grid_bound).max(0.0),
            0.0,
            DOUBLE_TRANSFORM_TOL,
        ),
        Check::within(
            "double_transform_residual",
            r.double_transform_residual,
            0.0,
            DOUBLE_TRANSFORM_TOL,
        ),
        Check::within("flat_slope_max", flat, 0.0, FLAT_SLOPE_TOL),
        Check::within("shift_pressure_residual", r.shift_pressure_residual, 0.0, SHIFT_TOL),
        Check::within(
            "shift_free_energy_residual",
            r.shift_free_energy_residual,
            0.0,
            SHIFT_TOL,
        ),
    ];
    Ok(RunOutput {
        tables: vec![t],
        checks,
    })
}

struct BoxSetup {
    disp: Dispersion,
    weights: WeightSequence,
    spec: LatticeSpec,
    rho: f64,
    rho_c: Quantity,
}

fn box_setup(cfg: &mut ExperimentConfig) -> Result<BoxSetup, CliError> {
    let disp = cfg.dispersion(gaussian3());
    let weights = cfg.weights(WeightSequence::zero());
    let tol = cfg.tol(TOL);
    let spec = LatticeSpec {
        eps_cut: cfg.eps_cut(30.0),
        delta_trunc: cfg.delta_trunc(1e-8),
    };
    let rho_c = ThermoModel::new(&disp, &weights, tol)?.critical_density()?;
    let rho = match cfg.rho {
        Some(r) => r,
        None => {
            let k = cfg.rho_over_rho_c(2.0);
            if !rho_c.is_finite() {
                return Err(CliError::validation("rho required when rho_c is infinite"));
            }
            k * rho_c.value()
        }
    };
    Ok(BoxSetup {
        disp,
        weights,
        spec,
        rho,
        rho_c,
    })
}

fn particles(cfg: &ExperimentConfig, rho: f64, v: f64) -> usize {
    cfg.n.unwrap_or_else(|| {
        let x = rho * v;
        let r = x.round();
        // integer products that floating point lands just below
        if (x - r).abs() < 1e-9 * x.max(1.0) {
            r as usize
        } else {
            x.floor() as usize
        }
    })
}

fn tables_for(b: &BoxSetup, cfg: &ExperimentConfig, l: f64) -> Result<DPTables, CliError> {
    let lat = build_lattice(l, b.disp.d, &b.disp, b.spec.eps_cut, b.spec.delta_trunc)?;
    let n = particles(cfg, b.rho, lat.volume());
    Ok(partition_dp(&lat, &b.weights, n)?)
}

fn fourier_exact(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let b = box_setup(cfg)?;
    let l = cfg.l(4.0);
    let lat = build_lattice(l, b.disp.d, &b.disp, b.spec.eps_cut, b.spec.delta_trunc)?;
    let n = particles(cfg, b.rho, lat.volume());
    let t = partition_dp(&lat, &b.weights, n)?;
    let v = t.volume();
    let marg = mode_marginals(&t);
    let mut modes = Table::new("modes", &["index", "m", "eps", "mean_occupation", "p_empty"]);
    for (k, (mode, law)) in lat.modes.iter().zip(&marg).enumerate() {
        let mean: f64 = law.iter().enumerate().map(|(m, p)| m as f64 * p).sum();
        let m: Vec<String> = mode.m.iter().map(|x| x.to_string()).collect();
        modes.push(vec![u(k), m.join(" "), f(mode.eps), f(mean), f(law[0])]);
    }
    let mut cycles = Table::new("data", &["length", "rho_ll"]);
    let mut total = 0.0;
    for len in 1..=n {
        let r = cycle_density_expectation(&t, len, len)?;
        total += r;
        cycles.push(vec![u(len), f(r)]);
    }
    let checks = vec![
        Check::info("N", n as f64),
        Check::info("volume", v),
        Check::info("log_Y", t.log_y()),
        Check::info("truncation_bound", t.truncation_bound()),
        Check::within("sum_rho_ll", total, n as f64 / v, 1e-8 * (n as f64 / v).max(1e-300)),
    ];
    Ok(RunOutput {
        tables: vec![cycles, modes],
        checks,
    })
}

fn fourier_scan(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let b = box_setup(cfg)?;
    let l_list = cfg.l_list(vec![4.0, 6.0, 8.0]);
    let eta = cfg.eta_exponent(0.5);
    let s_grid = cfg.s_grid(vec![b.rho]);
    let tol = cfg.tol(TOL);
    let scan = macroscopic_scan(&b.disp, &b.weights, b.rho, &l_list, eta, &s_grid, b.spec, tol)?;
    let mut t = Table::new("data", &["L", "V", "N", "kind", "a", "b", "value", "target"]);
    for r in &scan.rows {
        t.push(vec![
            f(r.l),
            f(r.v),
            u(r.n),
            r.kind.clone(),
            f(r.a),
            f(r.b),
            f(r.value),
            f(r.target),
        ]);
    }
    let mut checks = vec![Check::info("rho_c", scan.rho_c.value())];
    for (l, (res, bound)) in l_list
        .iter()
        .zip(scan.sum_residuals.iter().zip(&scan.truncation_bounds))
    {
        checks.push(Check::within(format!("row_sum_residual_L{l}"), *res, 0.0, 1e-8));
        checks.push(Check::info(format!("truncation_bound_L{l}"), *bound));
    }
    Ok(RunOutput {
        tables: vec![t],
        checks,
    })
}

fn n0_mgf(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let b = box_setup(cfg)?;
    let l_list = cfg.l_list(vec![4.0, 6.0, 8.0]);
    let lambdas = cfg.lambdas(vec![1.0]);
    let rc = b.rho_c.value();
    let excess = if rc.is_finite() { (b.rho - rc).max(0.0) } else { 0.0 };
    let mut t = Table::new("data", &["L", "V", "N", "lambda", "mgf", "limit", "window_probability"]);
    for &l in &l_list {
        let tables = tables_for(&b, cfg, l)?;
        let v = tables.volume();
        let z = n0_law_and_mgf(&tables, &lambdas);
        let window = z.window_probability(v, excess, 0.25 * excess);
        for (lam, m) in lambdas.iter().zip(&z.mgf) {
            t.push(vec![
                f(l),
                f(v),
                u(tables.n()),
                f(*lam),
                f(*m),
                f((lam * excess).exp()),
                f(window),
            ]);
        }
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![Check::info("rho_c", rc), Check::info("rho", b.rho)],
    })
}

fn typicality(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let b = box_setup(cfg)?;
    let l = cfg.l(4.0);
    let eps = cfg.eps(0.02);
    let delta = cfg.delta(0.3);
    let m_cut = cfg.m_cut(2);
    let draws = cfg.draws(0);
    let seed = cfg.seed(1);
    let tables = tables_for(&b, cfg, l)?;
    let method = if draws == 0 {
        TypicalityMethod::Exact
    } else {
        TypicalityMethod::Sampled { draws, seed }
    };
    let r = typicality_probs(&tables, b.rho_c, eps, delta, m_cut, method)?;
    let mut t = Table::new("data", &["event", "p", "lo", "hi", "exact"]);
    for (name, p) in [("A", r.a), ("B", r.b), ("C", r.c)] {
        t.push(vec![name.to_string(), f(p.p), f(p.lo), f(p.hi), p.exact.to_string()]);
    }
    Ok(RunOutput {
        tables: vec![t],
        checks: vec![
            Check::info("rho0", r.rho0),
            Check::info("N", tables.n() as f64),
            Check::info("rho_c_infinite", r.rho_c_infinite as u8 as f64),
        ],
    })
}

fn gaussian_beta(d: &Dispersion) -> Result<f64, CliError> {
    d.beta()
        .ok_or_else(|| CliError::validation("the spatial model needs a gaussian dispersion"))
}

fn spatial_mc(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let disp = cfg.dispersion(Dispersion::gaussian(1, 1.0)?);
    let beta = gaussian_beta(&disp)?;
    let w = cfg.weights(WeightSequence::zero());
    let l = cfg.l(4.0);
    let n = cfg.n(2);
    let seed = cfg.seed(1);
    let pairs = cfg.pairs((1..=n.min(2)).map(|k| (k, k)).collect());
    let mut params = cfg.mc(Default::default());
    params.seed = seed;
    cfg.mc = Some(params.clone());
    let xi = PeriodicXi::for_box(disp.d, beta, l)?;
    let init = SpatialState::identity(&xi, &w, uniform_positions(n, disp.d, l, seed))?;
    let mut header = vec!["step".to_string(), "energy".to_string()];
    header.extend(pairs.iter().map(|(a, b)| format!("N_{a}_{b}")));
    header.push("cycles".to_string());
    let mut t = Table {
        name: "data".to_string(),
        header,
        rows: Vec::with_capacity(params.samples),
    };
    let (s, _) = run_chain_with(init, &xi, &w, &params, &pairs, |r| {
        let mut row = vec![r.step.to_string(), f(r.energy)];
        row.extend(r.n_ab.iter().map(|&c| u(c)));
        row.push(u(r.cycles));
        t.rows.push(row);
    })?;
    let mut checks = vec![
        Check::info("energy_mean", s.energy.mean),
        Check::info("energy_std_error", s.energy.std_error),
        Check::info("energy_tau_int", s.energy.tau_int),
        Check::info("cycles_mean", s.cycles.mean),
        Check::info("cycles_std_error", s.cycles.std_error),
        Check::info("sigma_x", s.sigma_x),
        Check::info("displacement_acceptance", s.displacement_acceptance),
        Check::info("transposition_acceptance", s.transposition_acceptance),
    ];
    for ((a, b), r) in pairs.iter().zip(&s.rho_ab) {
        checks.push(Check::info(format!("rho_{a}_{b}_mean"), r.mean));
        checks.push(Check::info(format!("rho_{a}_{b}_std_error"), r.std_error));
        checks.push(Check::info(format!("rho_{a}_{b}_tau_int"), r.tau_int));
    }
    Ok(RunOutput {
        tables: vec![t],
        checks,
    })
}

fn cross_validate_cmd(cfg: &mut ExperimentConfig) -> Result<RunOutput, CliError> {
    let disp = cfg.dispersion(Dispersion::gaussian(1, 1.0)?);
    if disp.d != 1 {
        return Err(CliError::validation("cross-validate supports d = 1"));
    }
    let beta = gaussian_beta(&disp)?;
    let seed = cfg.seed(1);
    let mc = cfg.mc.clone().map(|mut p| {
        p.seed = seed;
        p
    });
    cfg.mc = mc.clone();
    let case = CrossValidationCase {
        n: cfg.n(2),
        l: cfg.l(4.0),
        beta,
        weights: cfg.weights(WeightSequence::zero()),
        eps_cut: cfg.eps_cut(200.0),
        delta_trunc: cfg.delta_trunc(1e-12),
        quad_tol: cfg.quad_tol(1e-13),
        pairs: cfg.pairs(vec![(2, 2)]),
        mc,
    };
    let r = cross_validate(&case)?;
    let mut t = Table::new(
        "data",
        &[
            "perm",
            "cycle_lengths",
            "integral",
            "lattice_sum",
            "difference",
            "bound",
            "agrees",
        ],
    );
    let join = |v: &[usize]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
    let mut checks = Vec::new();
    for c in &r.permutations {
        t.push(vec![
            join(&c.perm),
            join(&c.cycle_lengths),
            f(c.integral),
            f(c.lattice_sum),
            f(c.difference),
            f(c.bound),
            c.agrees.to_string(),
        ]);
        checks.push(Check::within(
            format!("perm_{}", join(&c.perm).replace(' ', "_")),
            c.integral,
            c.lattice_sum,
            c.bound,
        ));
    }
    for m in &r.monte_carlo {
        checks.push(Check::within(
            format!("mc_rho_{}_{}", m.a, m.b),
            m.estimate,
            m.exact,
            3.0 * m.std_error,
        ));
    }
    Ok(RunOutput {
        tables: vec![t],
        checks,
    })
}
