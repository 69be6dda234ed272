//! The four subcommands: solve, greens, converge, sinclair.
//!
//! Each resolves its configuration, runs the corresponding analysis from the
//! core crate, writes reports into the output directory, and prints a one
//! line summary per artifact. Heavy lifting stays in the core crate; this
//! module only orchestrates and serializes.

use std::thread;

use antiplane::analysis::{
    calibrate_c2, convergence_study, corrector_decay, default_window, force_decay, residual_decay,
    sinclair_experiment,
};
use antiplane::greens::{c2_coefficient, g_hat0, gbar1_diagnostic, mu_cutoff, CrackGreensContext};
use antiplane::rng::SplitMix64;
use antiplane::solver::minimize;
use antiplane::{
    ConvergenceReport, EnergyAssembly, Error, PredictorSpec, SolveSettings, Site,
};

use crate::config::{C2Choice, Resolved};
use crate::direct::FaerBackend;
use crate::report::{
    write_convergence, write_decay, write_greens, write_sinclair, write_snapshot, write_solve,
    ConvergenceDoc, DecayDoc, Gbar1Doc, GreensDoc, Meta, SinclairDoc, SolveDoc, SymmetryDoc,
};
use crate::CliError;

fn settings(cfg: &Resolved) -> SolveSettings {
    SolveSettings {
        tol: cfg.tol,
        seed: cfg.seed,
        ..SolveSettings::default()
    }
}

/// Predictor spec matching the configured potential's anharmonicity.
fn spec_for(cfg: &Resolved, order: u8, c2: f64) -> PredictorSpec {
    let mut spec = PredictorSpec::new(cfg.k, order).with_c2(c2);
    spec.phi4_at_0 = cfg.potential.phi4_at_0();
    spec
}

fn ensure_out(cfg: &Resolved) -> Result<(), CliError> {
    std::fs::create_dir_all(&cfg.out)
        .map_err(|e| CliError::Io(format!("create {}: {e}", cfg.out.display())))
}

/// The order-2 coefficient actually used: `None` below order 2, the fixed
/// value, or the calibrated one.
fn resolve_c2(cfg: &Resolved, radius: f64) -> Result<Option<f64>, CliError> {
    if cfg.order < 2 {
        return Ok(None);
    }
    match cfg.c2 {
        C2Choice::Fixed(v) => Ok(Some(v)),
        C2Choice::Auto => {
            eprintln!("antiplane: calibrating c2 at radius {radius}");
            let c2 = calibrate_c2(radius, cfg.k, cfg.potential, &settings(cfg))?;
            eprintln!("antiplane: calibrated c2 = {c2:.12}");
            Ok(Some(c2))
        }
    }
}

pub fn cmd_solve(cfg: &Resolved) -> Result<(), CliError> {
    ensure_out(cfg)?;
    let s = settings(cfg);
    let c2 = resolve_c2(cfg, cfg.radius)?;
    let spec = spec_for(cfg, cfg.order, c2.unwrap_or(0.0));
    let asm = EnergyAssembly::new(cfg.radius, cfg.potential, |x| spec.eval(x))?;
    let (u, rep) = minimize(&asm, &s, None);

    let meta = Meta::new(cfg, c2);
    let snap = cfg.out.join("corrector.txt");
    write_snapshot(&snap, (0..asm.n_free()).map(|i| (asm.free_site(i), u[i])))?;
    println!("wrote {}", snap.display());

    let doc = SolveDoc {
        meta: meta.clone(),
        converged: rep.converged,
        iterations: rep.iterations,
        evaluations: rep.evaluations,
        grad_inf: rep.grad_inf,
        energy: rep.energy,
    };
    let path = write_solve(&cfg.out, "solve", cfg.format, &doc)?;
    println!("wrote {}", path.display());

    let window = cfg.window.unwrap_or_else(|| default_window(cfg.radius));
    let zeros = vec![0.0; asm.n_free()];
    let reports = [
        ("decay_gradient", corrector_decay(&asm, &u, window)?),
        ("decay_forces", force_decay(&asm, &zeros, window)?),
        ("decay_residual", residual_decay(&asm, &u, window)?),
    ];
    for (stem, report) in &reports {
        let doc = DecayDoc::new(meta.clone(), report);
        let path = write_decay(&cfg.out, stem, cfg.format, &doc)?;
        println!(
            "wrote {} ({}: slope {:.3})",
            path.display(),
            report.label,
            report.slope
        );
    }

    if !rep.converged {
        return Err(CliError::Run(Error::NoConvergence {
            iterations: rep.iterations,
            grad_inf: rep.grad_inf,
        }));
    }
    Ok(())
}

/// Deterministic pseudo-random interior probe for the symmetry spot check,
/// away from the source and not too close to the tip.
fn pick_probe(ctx: &CrackGreensContext, source: Site, seed: u64) -> Site {
    let sites = ctx.operator().domain().sites();
    let mut rng = SplitMix64::new(seed);
    for _ in 0..128 {
        let m = sites[(rng.next_u64() % sites.len() as u64) as usize];
        let far_from_source = (m.a - source.a).abs() + (m.b - source.b).abs() > 2;
        if m.r() >= 2.0 && far_from_source {
            return m;
        }
    }
    Site::new(-3, 2)
}

pub fn cmd_greens(cfg: &Resolved, source: Site, mu_on: bool) -> Result<(), CliError> {
    ensure_out(cfg)?;
    let mut backend = FaerBackend::new();
    let ctx = CrackGreensContext::new(cfg.radius, &mut backend)?;
    let dom = ctx.operator().domain();
    if dom.index(source).is_none() {
        return Err(CliError::Config(format!(
            "source ({}, {}) lies outside the radius {} domain",
            source.a, source.b, cfg.radius
        )));
    }

    let col = ctx.column(&mut backend, source)?;
    let rhs = ctx.column_rhs(source)?;
    let residual_inf = ctx.operator().residual_inf(&col.values, &rhs);

    let snap = cfg.out.join("greens_column.txt");
    write_snapshot(&snap, dom.sites().iter().zip(&col.values).map(|(m, v)| (*m, *v)))?;
    println!("wrote {}", snap.display());

    // Remainder after peeling the continuum kernel (and, with the cutoff on,
    // the separable field-side correction).
    let xs = source.x();
    let g1m = ctx.g1m();
    let c2s = c2_coefficient(xs);
    let remainder = dom.sites().iter().enumerate().map(|(i, m)| {
        let x = m.x();
        let mut v = col.values[i] - g_hat0(x, xs);
        if mu_on {
            v -= mu_cutoff(x, xs) * c2s * g1m[i];
        }
        (*m, v)
    });
    let snap = cfg.out.join("greens_remainder.txt");
    write_snapshot(&snap, remainder)?;
    println!("wrote {}", snap.display());

    let probe = pick_probe(&ctx, source, cfg.seed);
    let col_probe = ctx.column(&mut backend, probe)?;
    let i_probe = dom.index(probe).expect("probe drawn from the domain");
    let i_source = dom.index(source).expect("source checked above");
    let difference = (col.values[i_probe] - col_probe.values[i_source]).abs();

    let gbar1 = match gbar1_diagnostic(&ctx, &mut backend, source, mu_on) {
        Ok(report) => Gbar1Doc::done(&report),
        Err(Error::ProbeBallTooSmall { source_norm }) => Gbar1Doc::skipped(&format!(
            "source norm {source_norm:.1} gives a probe ball under 8 sites; move the source out to |x| >= 128"
        )),
        Err(e) => return Err(CliError::Run(e)),
    };

    let doc = GreensDoc {
        meta: Meta::new(cfg, None),
        source: [source.a, source.b],
        mu: if mu_on { "on" } else { "off" }.to_string(),
        residual_inf,
        amplitude: ctx.amplitude(),
        c2_source: c2s,
        symmetry: SymmetryDoc {
            probe: [probe.a, probe.b],
            difference,
        },
        gbar1,
    };
    let path = write_greens(&cfg.out, "greens", cfg.format, &doc)?;
    println!(
        "wrote {} (residual {:.3e}, symmetry difference {:.3e}, gbar1 {})",
        path.display(),
        residual_inf,
        difference,
        doc.gbar1.status
    );
    Ok(())
}

pub fn cmd_converge(cfg: &Resolved, radii: &[f64], orders: &[u8]) -> Result<(), CliError> {
    ensure_out(cfg)?;
    if radii.len() < 3 {
        return Err(CliError::Config(format!(
            "a convergence study needs at least three radii (the largest is the reference), got {}",
            radii.len()
        )));
    }
    for pair in radii.windows(2) {
        if pair[1] <= pair[0] {
            return Err(CliError::Config(format!(
                "radii must be strictly increasing, got {} after {}",
                pair[1], pair[0]
            )));
        }
    }
    if orders.is_empty() {
        return Err(CliError::Config("no predictor orders requested".to_string()));
    }
    for &order in orders {
        if order > 2 {
            return Err(CliError::Config(format!(
                "order must be 0, 1, or 2, got {order}"
            )));
        }
    }

    let reference = *radii.last().expect("len checked above");
    let c2 = if orders.contains(&2) {
        let cfg2 = Resolved { order: 2, ..cfg.clone() };
        resolve_c2(&cfg2, reference)?
    } else {
        None
    };

    let s = settings(cfg);
    let mut results: Vec<Option<Result<ConvergenceReport, Error>>> =
        orders.iter().map(|_| None).collect();
    let indices: Vec<usize> = (0..orders.len()).collect();
    for wave in indices.chunks(cfg.threads.max(1)) {
        thread::scope(|scope| {
            let mut handles = Vec::new();
            for &i in wave {
                let order = orders[i];
                let spec = spec_for(cfg, order, c2.unwrap_or(0.0));
                let s = &s;
                handles.push((
                    i,
                    scope.spawn(move || convergence_study(radii, &spec, cfg.potential, s)),
                ));
            }
            for (i, handle) in handles {
                results[i] = Some(handle.join().expect("study worker panicked"));
            }
        });
    }

    for (i, result) in results.into_iter().enumerate() {
        let order = orders[i];
        let report = result.expect("every order ran")?;
        let meta = Meta {
            radius: reference,
            order,
            c2: if order == 2 { c2 } else { None },
            ..Meta::new(cfg, None)
        };
        let doc = ConvergenceDoc::new(meta, &report);
        let path = write_convergence(&cfg.out, &format!("convergence_order{order}"), cfg.format, &doc)?;
        println!(
            "wrote {} (order {}: fitted order {:.3})",
            path.display(),
            order,
            report.fitted_order
        );
    }
    Ok(())
}

pub fn cmd_sinclair(cfg: &Resolved) -> Result<(), CliError> {
    ensure_out(cfg)?;
    let report = sinclair_experiment(cfg.radius, cfg.k, cfg.potential, &settings(cfg))?;
    let doc = SinclairDoc::new(Meta::new(cfg, None), &report);
    let path = write_sinclair(&cfg.out, "sinclair", cfg.format, &doc)?;
    println!(
        "wrote {} (c1* = {:.4}, improvement {:.3})",
        path.display(),
        report.c1_star,
        report.improvement
    );
    Ok(())
}
