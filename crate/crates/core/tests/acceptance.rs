//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::TAU;
use std::process::ExitCode;
use std::time::Instant;

use bbm_lab::diagnostics::{relative_drift, run_tracked, CurrentId};
use bbm_lab::evolution::{linear_exact, picard_iterate, simulate, SimConfig};
use bbm_lab::experiments::{
    segment_identity_check, solitary_residual, solitary_wave, ucp_leakage, vanish_slice_check, vanishing_cutoff,
    BumpShape, BumpSpec, InitialData, VanishingWindow,
};
use bbm_lab::fields::{h1_norm, Domain, Field};
use bbm_lab::kernel::{self, identity_residuals, kernel_mass, KernelMethod, KernelSpec};
use bbm_lab::nonlinearity::NonlinearitySpec;
use bbm_lab::par::Execution;
use bbm_lab::symbolic::{self, parse, verify_characteristic, DiffPoly};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn nl(name: &str) -> NonlinearitySpec {
    NonlinearitySpec::builtin(name).unwrap()
}

fn max_diff(a: &Field, b: &Field) -> f64 {
    a.zip_with(b, |x, y| x - y).unwrap().max_abs()
}

/// `max_t |q(t) - q(0)| / |q(0)|`.
fn strict_relative_drift(values: &[f64]) -> f64 {
    let q0 = values[0];
    values.iter().map(|v| (v - q0).abs()).fold(0.0, f64::max) / q0.abs()
}

fn operator_identities() -> Outcome {
    let domains = [Domain::circle(256).unwrap(), Domain::line(40.0, 1024).unwrap()];
    let mut worst = (0.0f64, 0.0f64);
    for d in domains {
        let spec = KernelSpec::spectral(d);
        for seed in 0..10 {
            let phi = InitialData::Random { seed, modes: 24, amplitude: 1.0 }.field(d).unwrap();
            let (r1, r2) = identity_residuals(&phi, &spec).unwrap();
            let s = phi.max_abs();
            worst = (worst.0.max(r1 / s), worst.1.max(r2 / s));
        }
    }
    outcome(
        worst.0 < 1e-10 && worst.1 < 1e-10,
        format!("max relative residuals {:.2e}, {:.2e} (< 1e-10)", worst.0, worst.1),
    )
}

/// Sum of seeded Gaussians inside `[-20, 20]`: smooth and negligible at the
/// ends of the truncated line.
fn gaussian_mix(d: Domain, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-20.0..20.0), rng.gen_range(1.0..4.0)))
        .collect();
    Field::from_fn(d, |x| bumps.iter().map(|(a, c, w)| a * (-((x - c) / w).powi(2)).exp()).sum())
}

fn kernel_cross_validation() -> Outcome {
    let line = Domain::line(40.0, 1024).unwrap();
    let circle = Domain::circle(256).unwrap();
    let rel = |a: &Field, b: &Field| max_diff(a, b) / a.max_abs();
    let (mut filter, mut direct_line, mut direct_circle) = (0.0f64, 0.0f64, 0.0f64);
    let spectral = KernelSpec::spectral(line);
    let exp = KernelSpec::new(line, KernelMethod::ExpFilter).unwrap();
    let dir = KernelSpec::new(line, KernelMethod::DirectConvolution).unwrap();
    let dir_c = KernelSpec::new(circle, KernelMethod::DirectConvolution).unwrap();
    for seed in 0..5 {
        let phi = gaussian_mix(line, seed);
        let s = kernel::lambda_inv2(&phi, &spectral).unwrap();
        filter = filter.max(rel(&s, &kernel::lambda_inv2(&phi, &exp).unwrap()));
        direct_line = direct_line.max(rel(&s, &kernel::lambda_inv2(&phi, &dir).unwrap()));
        let psi = InitialData::Random { seed, modes: 12, amplitude: 1.0 }.field(circle).unwrap();
        let s = kernel::lambda_inv2(&psi, &KernelSpec::spectral(circle)).unwrap();
        direct_circle = direct_circle.max(rel(&s, &kernel::lambda_inv2(&psi, &dir_c).unwrap()));
    }
    let mass = [kernel_mass(&circle), kernel_mass(&line)];
    let mass_ok = mass.iter().all(|m| (m - 1.0).abs() < 1e-10);
    outcome(
        filter < 1e-8 && direct_line < 1e-6 && direct_circle < 1e-6 && mass_ok,
        format!(
            "exp-filter {filter:.2e} (< 1e-8), direct line {direct_line:.2e} / circle {direct_circle:.2e} (< 1e-6), \
             ∫g - 1 = {:.1e}, {:.1e}",
            mass[0] - 1.0,
            mass[1] - 1.0
        ),
    )
}

fn symbolic_certification() -> Outcome {
    let start = Instant::now();
    let p = |s: &str| parse(s).unwrap();
    let exact = |q: &DiffPoly| verify_characteristic(q).unwrap().is_exact_zero();
    let mut ok = ["1", "u", "f(u) - u_tx"].iter().all(|q| exact(&p(q)));
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut r = || BigRational::new(BigInt::from(rng.gen_range(-50..=50)), BigInt::from(rng.gen_range(1..=9)));
    for _ in 0..5 {
        let q = DiffPoly::constant(r()) + DiffPoly::constant(r()) * p("u") + DiffPoly::constant(r()) * p("f(u) - u_tx");
        ok &= exact(&q);
    }
    let plus_rejected = !exact(&p("f(u) + u_tx"));
    let ux_rejected = !exact(&p("u_x"));
    let currents = symbolic::standard_currents().iter().all(|c| c.defect().is_zero());
    let elapsed = start.elapsed().as_secs_f64();
    outcome(
        ok && plus_rejected && ux_rejected && currents && elapsed < 1.0,
        format!(
            "span certified: {ok}, f+u_tx rejected: {plus_rejected}, u_x rejected: {ux_rejected}, \
             currents exact: {currents}, {elapsed:.3} s (< 1 s)"
        ),
    )
}

fn h1_conservation() -> Outcome {
    let d = Domain::circle(256).unwrap();
    let u0 = InitialData::Sine { amplitude: 0.1, mode: 1 }.field(d).unwrap();
    let runs = Execution::default().map(&[1e-3, 5e-4], |&dt| {
        let cfg = SimConfig::new(KernelSpec::spectral(d), nl("bbm"), dt, 10.0).with_stride(10);
        run_tracked(u0.clone(), &cfg).unwrap()
    });
    let energy: Vec<f64> = runs.iter().map(|r| strict_relative_drift(r.series.values(CurrentId::Energy))).collect();
    let mass = relative_drift(runs[0].series.values(CurrentId::Mass));
    let ratio = energy[0] / energy[1];
    let drift_ok = energy[0] < 1e-8 && mass < 1e-12;
    let ratio_ok = (8.0..=32.0).contains(&ratio);
    outcome(
        drift_ok && ratio_ok,
        format!(
            "energy drift {:.2e} (< 1e-8), mass drift {mass:.2e} (< 1e-12): {}; \
             drift ratio dt/(dt/2) = {ratio:.2} (in [8, 32]): {}",
            energy[0],
            if drift_ok { "ok" } else { "FAIL" },
            if ratio_ok { "ok" } else { "FAIL" },
        ),
    )
}

fn solitary_regression() -> Outcome {
    let (c, x0, t_end) = (1.5, -7.5, 10.0);
    let residual = solitary_residual(c, x0, 0.0, (-40.0, 40.0), 801, 1e-2)
        .max(solitary_residual(c, x0, t_end, (-40.0, 40.0), 801, 1e-2));
    if residual >= 1e-6 {
        return outcome(false, format!("closed form residual {residual:.2e} (>= 1e-6)"));
    }
    let d = Domain::line(40.0, 1024).unwrap();
    let u0 = Field::from_fn(d, |x| solitary_wave(x, 0.0, c, x0));
    let cfg = SimConfig::new(KernelSpec::spectral(d), nl("bbm"), 1e-3, t_end).with_stride(1000);
    let end = simulate(u0, &cfg, |_| {}).unwrap();
    let exact = Field::from_fn(d, |x| solitary_wave(x, t_end, c, x0));
    let err = max_diff(&end.u, &exact);
    outcome(
        err < 1e-4,
        format!("residual {residual:.2e} (< 1e-6), L∞ error at t = 10: {err:.2e} (< 1e-4)"),
    )
}

fn compact_support_leakage() -> Outcome {
    let bump = BumpSpec {
        center: 0.0,
        radius: 5.0,
        amplitude: 0.5,
        shape: BumpShape::CutoffExp,
    };
    let cfg = SimConfig::new(KernelSpec::spectral(Domain::line(40.0, 1024).unwrap()), nl("quadratic"), 1e-3, 0.1);
    let s = ucp_leakage(&bump, &cfg).unwrap();
    let start_zero = s.tails[0] == 0.0;
    let one_step = s.tails[1] > 1e-14 * s.initial_l1;
    let monotone = s.nondecreasing_over(101);
    outcome(
        start_zero && one_step && monotone,
        format!(
            "tail(0) = {:e}, tail(dt) = {:.2e} vs 1e-14·‖u0‖₁ = {:.2e}, nondecreasing over 100 steps: {monotone}",
            s.tails[0],
            s.tails[1],
            1e-14 * s.initial_l1
        ),
    )
}

fn segment_vanishing() -> Outcome {
    let d = Domain::circle(512).unwrap();
    let cut = vanishing_cutoff(d, 0.4, 0.6, 0.1);
    let u = cut.zip_with(&Field::from_fn(d, |x| (TAU * x).sin()), |a, b| a * b).unwrap();
    let w = VanishingWindow { t0: 0.0, a: 0.4, b: 0.6 };
    let r = segment_identity_check(&u, &w, &nl("quadratic"), &KernelSpec::spectral(d)).unwrap();
    outcome(
        r.r1_relative < 1e-10 && r.r2 < 1e-8 && r.s_domain > 0.0,
        format!(
            "r1 {:.2e} (< 1e-10), r2 {:.2e} (< 1e-8), min Λ⁻²f(u) = {:.3e} (> 0)",
            r.r1_relative, r.r2, r.s_domain
        ),
    )
}

fn vanish_slice() -> Outcome {
    let d = Domain::circle(128).unwrap();
    let cfg = SimConfig::new(KernelSpec::spectral(d), nl("bbm"), 2e-3, 5.0).with_stride(25);
    let zero = run_tracked(Field::zeros(d), &cfg).unwrap();
    let s = &zero.series;
    let zero_ok = [&s.mass, &s.energy, &s.potential, &s.h1_norm]
        .iter()
        .all(|v| v.iter().all(|&q| q == 0.0))
        && zero.final_state.u.max_abs() == 0.0;
    let seeds: Vec<u64> = (0..20).collect();
    let ratios = Execution::default().map(&seeds, |&seed| {
        let u0 = InitialData::Random { seed, modes: 6, amplitude: 0.2 }.field(d).unwrap();
        let h0 = h1_norm(&u0);
        let r = vanish_slice_check(u0, &cfg, 1e-12).unwrap();
        r.min_h1 / h0
    });
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        zero_ok && worst > 0.9,
        format!("zero data stays exactly zero: {zero_ok}; 20 seeds, worst min‖u‖_H¹/‖u0‖_H¹ = {worst:.6} (> 0.9)"),
    )
}

fn picard_contraction() -> Outcome {
    let d = Domain::circle(256).unwrap();
    let u0 = InitialData::Sine { amplitude: 0.1, mode: 1 }.field(d).unwrap();
    let cfg = SimConfig::new(KernelSpec::spectral(d), nl("bbm"), 1e-3, 0.1);
    let rep = picard_iterate(&u0, 0.1, 8, &cfg).unwrap();
    let decreasing = rep.distances.windows(2).all(|w| w[1] < w[0]);

    let lin = SimConfig::new(KernelSpec::spectral(d), nl("linear"), 1e-3, 0.1);
    let rep_lin = picard_iterate(&u0, 0.1, 8, &lin).unwrap();
    let err = max_diff(&rep_lin.final_iterate, &linear_exact(&u0, 0.1));
    let shown: Vec<String> = rep.distances.iter().map(|v| format!("{v:.1e}")).collect();
    outcome(
        decreasing && err < 1e-8,
        format!(
            "distances [{}] strictly decreasing: {decreasing}; linear iterate vs exact {err:.2e} (< 1e-8)",
            shown.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    // `cargo test` passes harness flags; listing and filtering are not supported
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 9] = [
        ("1", "operator identities", operator_identities),
        ("2", "kernel cross-validation", kernel_cross_validation),
        ("3", "symbolic certification", symbolic_certification),
        ("4", "H¹ conservation", h1_conservation),
        ("5", "solitary-wave regression", solitary_regression),
        ("6", "compact-support leakage", compact_support_leakage),
        ("7", "segment-vanishing identity", segment_vanishing),
        ("8", "vanish-slice propagation", vanish_slice),
        ("9", "Picard contraction", picard_contraction),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        let start = Instant::now();
        let o = run();
        println!(
            "[{}] {id} {name}: {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
        if !o.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
