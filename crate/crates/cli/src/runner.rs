//! Command implementations: run checks and scans, export chains, verify the
//! exact-algebra identities, and write all artifacts atomically.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use serde_json::json;
use sha2::{Digest, Sha256};

use dunkl_lab::dunkl_calc::polynomial::random_polynomial;
use dunkl_lab::dunkl_calc::{
    apply_t_poly, dunkl_laplacian, dunkl_laplacian_formula_poly, dunkl_laplacian_poly,
    leibniz_rhs_poly, LaplacianMethod, Polynomial, ScalarField, TestFunction,
};
use dunkl_lab::inequality_lab::catalog::{
    fitted_tight_constant, list_checks, run_check, CheckContext,
};
use dunkl_lab::inequality_lab::fitting::{
    estimate_best_constant_rayleigh, family_rows, fit_tight_constant, fit_two_constants,
    TwoTermFamily,
};
use dunkl_lab::inequality_lab::scans::{concentration_profile, exp_integrability_scan};
use dunkl_lab::inequality_lab::{
    GradientKind, InequalityReport, MeasureEstimator, RhsTerm, ValueWithError,
};
use dunkl_lab::quadrature::{ibp_residual, GridParams, MeasureSpec, QuadratureGrid};
use dunkl_lab::sampler::{diagnostics, sample_chains_parallel, SampleChain};

use crate::config::ExperimentConfig;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_COMPUTATION: i32 = 3;

pub struct RunArgs {
    pub config_path: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub jobs: usize,
}

fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

fn write_manifest(
    out_dir: &Path,
    config_bytes: &[u8],
    seed: u64,
    command: &str,
    started: Instant,
) -> std::io::Result<()> {
    let mut hasher = Sha256::new();
    hasher.update(config_bytes);
    let hash = format!("{:x}", hasher.finalize());
    let manifest = json!({
        "config_hash": hash,
        "seed": seed,
        "command": command,
        "versions": {
            "dunkl-lab-cli": env!("CARGO_PKG_VERSION"),
            "dunkl-lab": dunkl_lab_version(),
        },
        "wall_time_seconds": started.elapsed().as_secs_f64(),
        "timestamp_unix": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    atomic_write(
        &out_dir.join("manifest.json"),
        serde_json::to_string_pretty(&manifest).expect("manifest json").as_bytes(),
    )
}

fn dunkl_lab_version() -> &'static str {
    // the library crate shares the workspace version
    env!("CARGO_PKG_VERSION")
}

fn write_reports(out_dir: &Path, name: &str, reports: &[InequalityReport]) -> std::io::Result<()> {
    let path = out_dir.join("reports").join(format!("{name}.json"));
    let body = serde_json::to_string_pretty(reports).expect("report json");
    atomic_write(&path, body.as_bytes())
}

fn summary_csv(reports: &[InequalityReport]) -> String {
    let mut out = String::from("name,lhs,rhs,margin,violated\n");
    for r in reports {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{:.17e},{}\n",
            r.name,
            r.lhs.value,
            r.rhs_total(),
            r.margin,
            r.violated
        ));
    }
    out
}

fn finish(
    out_dir: &Path,
    config_bytes: &[u8],
    seed: u64,
    command: &str,
    started: Instant,
    reports: &[InequalityReport],
) -> i32 {
    let violations = reports.iter().filter(|r| r.violated).count();
    let invalid = reports.iter().filter(|r| r.is_invalid()).count();
    if let Err(e) = atomic_write(&out_dir.join("summary.csv"), summary_csv(reports).as_bytes()) {
        eprintln!("error: cannot write summary: {e}");
        return EXIT_COMPUTATION;
    }
    if let Err(e) = write_manifest(out_dir, config_bytes, seed, command, started) {
        eprintln!("error: cannot write manifest: {e}");
        return EXIT_COMPUTATION;
    }
    println!(
        "{command}: {} report(s), {violations} violation(s), {invalid} invalid",
        reports.len()
    );
    if invalid > 0 {
        return EXIT_COMPUTATION;
    }
    if violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, Vec<u8>, PathBuf), i32> {
    let (config, bytes) = match ExperimentConfig::load(&args.config_path) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return Err(EXIT_CONFIG);
        }
    };
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from(&config.output_dir));
    Ok((config, bytes, out_dir))
}

/// `check`: run one named check from the catalogue.
pub fn cmd_check(args: &RunArgs, check_override: Option<&str>) -> i32 {
    let started = Instant::now();
    let (config, bytes, out_dir) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let name = match check_override.or(config.check.as_deref()) {
        Some(n) => n.to_string(),
        None => {
            eprintln!("error: no check named (set `check` in the config or pass --check)");
            return EXIT_CONFIG;
        }
    };
    if !list_checks().iter().any(|c| c.name.eq_ignore_ascii_case(&name)) {
        eprintln!("error: unknown check '{name}' (see `dunkl-lab list-checks`)");
        return EXIT_CONFIG;
    }
    let ctx = match config.check_context(args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let reports = match run_check(&name, &ctx) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error running {name}: {e}");
            return EXIT_COMPUTATION;
        }
    };
    if let Err(e) = write_reports(&out_dir, &name, &reports) {
        eprintln!("error: cannot write reports: {e}");
        return EXIT_COMPUTATION;
    }
    for r in &reports {
        let status = if r.violated { "VIOLATED" } else { "ok" };
        println!("  [{status}] {} ({}): margin {:.3e}", r.name, r.test_function, r.margin);
    }
    finish(&out_dir, &bytes, ctx.seed, &format!("check {name}"), started, &reports)
}

/// `list-checks`: one line per catalogue entry.
pub fn cmd_list_checks() -> i32 {
    for check in list_checks() {
        println!("{:<26} {:<22} {}", check.name, check.estimator, check.anchor);
    }
    EXIT_OK
}

fn exact_report(name: &str, residual: f64, threshold: f64, description: &str) -> InequalityReport {
    InequalityReport::build(
        name,
        ValueWithError { value: residual, err: 0.0 },
        vec![RhsTerm { label: "threshold".into(), coefficient: 1.0, value: threshold, err: 0.0 }],
        BTreeMap::new(),
        description,
    )
}

/// `verify-identities`: the exact-algebra suite (generalised Leibniz rule,
/// two-way Laplacian agreement, operator commutativity — all in rational
/// arithmetic) plus the numeric closed-form Laplacian of `|x|` and the
/// integration-by-parts residuals.
pub fn cmd_verify_identities(args: &RunArgs) -> i32 {
    let started = Instant::now();
    let (config, bytes, out_dir) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let rs = match config.build_root_system() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.unwrap_or(config.seed);
    let mut reports = Vec::new();
    let dim = rs.dim();
    let mut poly_counter = 0u64;
    let mut random_poly = |deg: u32| {
        poly_counter += 1;
        random_polynomial(dim, deg, 6, seed.wrapping_add(poly_counter))
    };
    // Leibniz identity, exactly zero in rational arithmetic.
    let mut leibniz_ok = true;
    for _ in 0..50 {
        let f = random_poly(3);
        let g = random_poly(3);
        for i in 0..dim {
            let lhs = match apply_t_poly(&rs, i, &f.mul(&g)) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: exact mode unavailable: {e}");
                    return EXIT_COMPUTATION;
                }
            };
            let rhs = match leibniz_rhs_poly(&rs, i, &f, &g) {
                Ok(v) => v,
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_COMPUTATION;
                }
            };
            if !lhs.sub(&rhs).is_zero() {
                leibniz_ok = false;
            }
        }
    }
    reports.push(exact_report(
        "leibniz-identity",
        if leibniz_ok { 0.0 } else { 1.0 },
        0.5,
        "50 random pairs, exact rational arithmetic",
    ));
    // Laplacian: difference form versus iterated T_i^2, exactly zero.
    let mut laplacian_ok = true;
    for _ in 0..50 {
        let f = random_poly(4);
        let via_squares = dunkl_laplacian_poly(&rs, &f);
        let via_formula = dunkl_laplacian_formula_poly(&rs, &f);
        match (via_squares, via_formula) {
            (Ok(a), Ok(b)) => {
                if !a.sub(&b).is_zero() {
                    laplacian_ok = false;
                }
            }
            _ => {
                eprintln!("error: exact Laplacian unavailable");
                return EXIT_COMPUTATION;
            }
        }
    }
    reports.push(exact_report(
        "laplacian-two-way",
        if laplacian_ok { 0.0 } else { 1.0 },
        0.5,
        "difference form vs iterated operator, exact rational arithmetic",
    ));
    // Commutativity of T_i and T_j.
    let mut commute_ok = true;
    for _ in 0..20 {
        let f = random_poly(4);
        for i in 0..dim {
            for j in (i + 1)..dim {
                let a = apply_t_poly(&rs, i, &apply_t_poly(&rs, j, &f).expect("exact"))
                    .expect("exact");
                let b = apply_t_poly(&rs, j, &apply_t_poly(&rs, i, &f).expect("exact"))
                    .expect("exact");
                if !a.sub(&b).is_zero() {
                    commute_ok = false;
                }
            }
        }
    }
    reports.push(exact_report(
        "operator-commutativity",
        if commute_ok { 0.0 } else { 1.0 },
        0.5,
        "T_i T_j = T_j T_i on random polynomials",
    ));
    // Laplacian of |x| against the closed form (N + 2 gamma - 1)/|x|.
    let norm_field = TestFunction::Field(ScalarField::norm_field(dim));
    let expected_scale = dim as f64 + 2.0 * rs.gamma() - 1.0;
    let mut max_rel = 0.0f64;
    let mut tested = 0;
    let mut lcg = seed | 1;
    let mut uniform = move || {
        lcg = lcg.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((lcg >> 11) as f64 / (1u64 << 53) as f64) * 4.0 - 2.0
    };
    while tested < 100 {
        let x: Vec<f64> = (0..dim).map(|_| uniform()).collect();
        if !rs.off_all_walls(&x) || vec_norm(&x) < 0.2 {
            continue;
        }
        tested += 1;
        let expected = expected_scale / vec_norm(&x);
        match dunkl_laplacian(&rs, &norm_field, &x, LaplacianMethod::Formula) {
            Ok(got) => max_rel = max_rel.max(((got - expected) / expected).abs()),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        }
    }
    reports.push(exact_report(
        "laplacian-of-norm",
        max_rel,
        1e-8,
        "formula mode vs (N + 2 gamma - 1)/|x| at 100 random points",
    ));
    // Integration by parts, polynomial-times-Gaussian pairs.
    let ms = MeasureSpec::mu_k(rs.clone());
    let grid = match QuadratureGrid::build(
        &ms,
        &GridParams {
            resolution: if dim >= 3 { 10 } else { 20 },
            box_half_width: Some(7.0),
            ..Default::default()
        },
    ) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_COMPUTATION;
        }
    };
    let mut max_residual = 0.0f64;
    for pair in 0..20u64 {
        let f = random_poly(3);
        let g = random_poly(3);
        let i = (pair as usize) % dim;
        match ibp_residual(&rs, i, &f, &g, &grid) {
            Ok(r) => {
                // scale-relative: compare against the magnitude of one side
                let scale = grid
                    .integrate_fn(|x| {
                        f.eval_f64(x).abs() * g.eval_f64(x).abs() * (-norm_sq_of(x)).exp()
                    })
                    .map(|(v, _)| v.abs())
                    .unwrap_or(1.0)
                    .max(1e-9);
                max_residual = max_residual.max(r / scale.max(1.0));
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        }
    }
    reports.push(exact_report(
        "integration-by-parts",
        max_residual,
        1e-6,
        "20 polynomial-times-Gaussian pairs",
    ));
    // exact_report encodes pass as residual <= threshold; mark violations.
    let reports: Vec<InequalityReport> = reports
        .into_iter()
        .map(|r| {
            let mut r = r;
            if r.lhs.value > r.rhs_terms[0].value {
                r.violated = true;
                r.margin = r.rhs_terms[0].value - r.lhs.value;
            }
            r
        })
        .collect();
    if let Err(e) = write_reports(&out_dir, "verify-identities", &reports) {
        eprintln!("error: cannot write reports: {e}");
        return EXIT_COMPUTATION;
    }
    for r in &reports {
        println!(
            "  [{}] {}: residual {:.3e} (threshold {:.1e})",
            if r.violated { "FAIL" } else { "pass" },
            r.name,
            r.lhs.value,
            r.rhs_terms[0].value
        );
    }
    finish(&out_dir, &bytes, seed, "verify-identities", started, &reports)
}

fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum::<f64>().sqrt()
}

fn norm_sq_of(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

/// `sample`: run chains, export CSVs with JSON sidecars, and diagnostics.
pub fn cmd_sample(args: &RunArgs) -> i32 {
    let started = Instant::now();
    let (config, bytes, out_dir) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let rs = match config.build_root_system() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let seed = args.seed.unwrap_or(config.seed);
    let ms = if config.measure.chamber {
        MeasureSpec::mu_u_fundamental_chamber(rs.clone(), config.measure.p)
    } else {
        MeasureSpec::mu_u(rs.clone(), config.measure.p)
    };
    let ms = match ms {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let chains = match sample_chains_parallel(
        &ms,
        config.estimator.n,
        config.algo(),
        seed,
        config.estimator.chains,
        args.jobs,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_COMPUTATION;
        }
    };
    if let Err(code) = export_chains(&out_dir, &chains) {
        return code;
    }
    let functionals = vec![
        ScalarField::new(rs.dim(), |x| x[0]),
        ScalarField::new(rs.dim(), |x| vec_norm(x)),
    ];
    let diag = match diagnostics::diagnose(&chains, &functionals) {
        Ok(d) => Some(d),
        Err(_) => None, // single chain: skip R-hat
    };
    let diag_json = match &diag {
        Some(d) => json!({
            "ess": d.ess,
            "rhat": d.rhat,
            "functionals": ["x_1", "|x|"],
            "functional_means": d.functional_means,
            "mc_se": d.mc_se,
        }),
        None => json!({"note": "diagnostics need at least 2 chains"}),
    };
    if let Err(e) = atomic_write(
        &out_dir.join("diagnostics.json"),
        serde_json::to_string_pretty(&diag_json).expect("json").as_bytes(),
    ) {
        eprintln!("error: {e}");
        return EXIT_COMPUTATION;
    }
    println!(
        "sampled {} chain(s) x {} draws (acceptance {:.2}..{:.2})",
        chains.len(),
        chains[0].len(),
        chains.iter().map(|c| c.acceptance_rate).fold(f64::MAX, f64::min),
        chains.iter().map(|c| c.acceptance_rate).fold(f64::MIN, f64::max),
    );
    finish(&out_dir, &bytes, seed, "sample", started, &[])
}

fn export_chains(out_dir: &Path, chains: &[SampleChain]) -> Result<(), i32> {
    for (i, chain) in chains.iter().enumerate() {
        let mut csv = Vec::new();
        if let Err(e) = chain.write_csv(&mut csv) {
            eprintln!("error: {e}");
            return Err(EXIT_COMPUTATION);
        }
        let path = out_dir.join("chains").join(format!("chain_{i}.csv"));
        if let Err(e) = atomic_write(&path, &csv) {
            eprintln!("error: {e}");
            return Err(EXIT_COMPUTATION);
        }
        let sidecar = out_dir.join("chains").join(format!("chain_{i}.json"));
        let body = serde_json::to_string_pretty(&chain.sidecar_json()).expect("sidecar json");
        if let Err(e) = atomic_write(&sidecar, body.as_bytes()) {
            eprintln!("error: {e}");
            return Err(EXIT_COMPUTATION);
        }
    }
    Ok(())
}

/// `estimate-constants`: Rayleigh Poincare bound, tight and two-constant
/// log-Sobolev fits, written to constants.json.
pub fn cmd_estimate_constants(args: &RunArgs) -> i32 {
    let started = Instant::now();
    let (config, bytes, out_dir) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let ctx = match config.check_context(args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let result = estimate_constants_impl(&ctx);
    let (constants, reports) = match result {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_COMPUTATION;
        }
    };
    if let Err(e) = atomic_write(
        &out_dir.join("constants.json"),
        serde_json::to_string_pretty(&constants).expect("json").as_bytes(),
    ) {
        eprintln!("error: {e}");
        return EXIT_COMPUTATION;
    }
    if let Err(e) = write_reports(&out_dir, "estimate-constants", &reports) {
        eprintln!("error: {e}");
        return EXIT_COMPUTATION;
    }
    for (k, v) in constants.as_object().into_iter().flatten() {
        println!("  {k} = {v}");
    }
    finish(&out_dir, &bytes, ctx.seed, "estimate-constants", started, &reports)
}

fn estimate_constants_impl(
    ctx: &CheckContext,
) -> Result<(serde_json::Value, Vec<InequalityReport>), Box<dyn std::error::Error>> {
    use dunkl_lab::inequality_lab::basis::FunctionBasis;
    let ms = if ctx.chamber {
        MeasureSpec::mu_u_fundamental_chamber(ctx.rs.clone(), ctx.p)?
    } else {
        MeasureSpec::mu_u(ctx.rs.clone(), ctx.p)?
    };
    let resolution = if ctx.rs.dim() >= 3 { 8 } else { 16 };
    let grid = QuadratureGrid::build(&ms, &GridParams::with_resolution(resolution))?;
    let me = MeasureEstimator::from_grid(Arc::new(grid));
    let basis: Vec<Polynomial> = FunctionBasis::hermite_tensor(ctx.rs.dim(), ctx.suite_degree())
        .polynomial_members()
        .into_iter()
        .cloned()
        .collect();
    let (lambda, _) = estimate_best_constant_rayleigh(&ctx.rs, &me, &basis, GradientKind::Dunkl)?;
    let suite = ctx.standard_suite();
    let rows = family_rows(&TwoTermFamily::log_sobolev(), &ctx.rs, &me, &suite)?;
    let (tight_c, tight_label) = fit_tight_constant(&rows)?;
    let (c1, c2, fit_report) = fit_two_constants("log-sobolev", &rows)?;
    let tight_from_catalog = fitted_tight_constant(ctx)?;
    let constants = json!({
        "poincare_lambda_max": lambda,
        "tight_log_sobolev_C": tight_c,
        "tight_log_sobolev_worst_member": tight_label,
        "log_sobolev_C1": c1,
        "log_sobolev_C2": c2,
        "tight_log_sobolev_C_catalog": tight_from_catalog,
    });
    Ok((constants, vec![fit_report]))
}

/// `scan`: exponential-integrability profile and, for p >= 2, the
/// concentration profile; both exported as plot-data CSVs.
pub fn cmd_scan(args: &RunArgs) -> i32 {
    let started = Instant::now();
    let (config, bytes, out_dir) = match load(args) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let ctx = match config.check_context(args.seed) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let mut reports = Vec::new();
    let f = ScalarField::norm_field(ctx.rs.dim());
    let ms = match MeasureSpec::mu_u(ctx.rs.clone(), ctx.p) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    // Integrability scan; radii depend on which side of p = 2 we are on.
    let (b, radii): (f64, Vec<f64>) = if ctx.p >= 2.0 {
        let c = match fitted_tight_constant(&ctx) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        };
        (0.7 * (2.0 / c).sqrt(), (1..=8).map(|i| i as f64).collect())
    } else {
        (0.5, vec![8.0, 16.0, 32.0, 48.0, 64.0, 96.0, 128.0])
    };
    let resolution = if ctx.rs.dim() >= 3 { 6 } else { 10 };
    match exp_integrability_scan(&ms, resolution, &f, b, &radii) {
        Ok((rows, verdict)) => {
            let mut csv = String::from("radius,truncated_integral\n");
            for r in &rows {
                csv.push_str(&format!("{},{:.17e}\n", r.radius, r.truncated_integral));
            }
            if let Err(e) = atomic_write(&out_dir.join("scans").join("integrability.csv"), csv.as_bytes()) {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
            println!("  integrability scan: {verdict:?} (b = {b:.4})");
            reports.push(exact_report(
                "integrability-scan",
                0.0,
                1.0,
                &format!("b={b}, verdict {verdict:?}"),
            ));
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_COMPUTATION;
        }
    }
    if ctx.p >= 2.0 {
        let tight_c = match fitted_tight_constant(&ctx) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        };
        let chains = match sample_chains_parallel(
            &ms,
            config.estimator.n,
            config.algo(),
            ctx.seed,
            config.estimator.chains,
            args.jobs,
        ) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        };
        match concentration_profile(&ctx.rs, &chains, &f, tight_c, &[0.5, 1.0, 1.5, 2.0]) {
            Ok(rows) => {
                let mut csv = String::from("r,empirical_tail,bound,ci_low,ci_high\n");
                for row in &rows {
                    csv.push_str(&format!(
                        "{},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                        row.r, row.empirical_tail, row.bound, row.ci_low, row.ci_high
                    ));
                    reports.push(exact_report(
                        "concentration-profile",
                        if row.satisfied { 0.0 } else { 1.0 },
                        0.5,
                        &format!("r={}", row.r),
                    ));
                }
                if let Err(e) =
                    atomic_write(&out_dir.join("scans").join("concentration.csv"), csv.as_bytes())
                {
                    eprintln!("error: {e}");
                    return EXIT_COMPUTATION;
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_COMPUTATION;
            }
        }
    }
    let reports: Vec<InequalityReport> = reports
        .into_iter()
        .map(|mut r| {
            if r.lhs.value > r.rhs_terms[0].value {
                r.violated = true;
            }
            r
        })
        .collect();
    if let Err(e) = write_reports(&out_dir, "scan", &reports) {
        eprintln!("error: {e}");
        return EXIT_COMPUTATION;
    }
    finish(&out_dir, &bytes, ctx.seed, "scan", started, &reports)
}
