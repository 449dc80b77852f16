use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sigmak_core::bubbles::{
    bubble_field, c_constant, harnack_sweep as sweep, verify_solution, BubbleSpec, SweepOptions,
};
use sigmak_core::conformal::{transform_field, FieldRef, MobiusAtom, MobiusMap};
use sigmak_core::continuation::{continue_path, BvpSpec, ResidualForm};
use sigmak_core::io;
use sigmak_core::radial::{liouville_report, shoot, StepControl, TailEvidence};
use sigmak_core::sampling::{halton_box, halton_log_radial};
use sigmak_core::{Error, ExecPolicy};

use crate::grid::parse_grid;
use crate::{Common, Failure, Format, HomotopyArgs, RadialArgs, SweepArgs, VerifyArgs};

fn config(msg: impl Into<String>) -> Failure {
    Failure::Config(msg.into())
}

fn check_nk(c: &Common) -> Result<(), Failure> {
    if c.n < 3 {
        return Err(config(format!("n must be at least 3, got {}", c.n)));
    }
    if c.k == 0 || c.k > c.n {
        return Err(config(format!("k must lie in 1..={}, got {}", c.n, c.k)));
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(config(format!(
            "--{name} must be positive and finite, got {v}"
        )))
    }
}

fn open(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                config(format!("cannot create {}: {e}", p.display()))
            })?))
        }
        None => Box::new(std::io::stdout().lock()),
    })
}

fn emit<T: Serialize>(c: &Common, rows: &[T]) -> Result<(), Failure> {
    let out = open(c.out.as_deref())?;
    match c.format {
        Format::Csv => io::write_csv(out, rows)?,
        Format::Json => io::write_json(out, rows)?,
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyRow {
    field: String,
    samples: usize,
    max_residual: f64,
    min_margin: f64,
    cone_violations: usize,
    passed: bool,
}

/// Whether every inversion in the word sees the point away from its pole.
fn clear_of_poles(psi: &MobiusMap, x: &DVector<f64>) -> bool {
    let Ok(orbit) = psi.orbit(x) else {
        return false;
    };
    psi.word()
        .iter()
        .zip(&orbit)
        .all(|(atom, p)| !matches!(atom, MobiusAtom::Invert) || p.norm() > 0.05)
}

pub fn verify_bubble(args: &VerifyArgs) -> Result<(), Failure> {
    let c = &args.common;
    check_nk(c)?;
    positive("a", args.a)?;
    positive("tol", args.tol)?;
    if args.samples == 0 {
        return Err(config("--samples must be positive"));
    }
    let center = match &args.center {
        None => DVector::zeros(c.n),
        Some(s) => {
            let coords = parse_grid(s).map_err(config)?;
            if coords.len() != c.n {
                return Err(config(format!(
                    "--center needs {} coordinates, got {}",
                    c.n,
                    coords.len()
                )));
            }
            DVector::from_vec(coords)
        }
    };
    let spec = BubbleSpec::new(c.n, c.k, args.a, center.clone())?;
    let base: FieldRef = Arc::new(bubble_field(&spec));
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);

    let mut rows = Vec::new();
    let mut push = |field: String, rep: sigmak_core::bubbles::VerifyReport| {
        rows.push(VerifyRow {
            field,
            samples: rep.samples,
            max_residual: rep.max_residual,
            min_margin: rep.min_margin,
            cone_violations: rep.cone_violations,
            passed: rep.passes(args.tol),
        })
    };
    let pts = halton_log_radial(&center, 1e-3, 1e3, args.samples);
    push(
        "bubble".into(),
        verify_solution(base.as_ref(), c.n, c.k, &pts, ExecPolicy::Parallel)?,
    );
    for i in 0..args.images {
        let psi = MobiusMap::random(c.n, 4, &mut rng);
        let image = transform_field(Arc::clone(&base), &psi)?;
        let pts: Vec<_> = halton_box(&DVector::zeros(c.n), 2.0, 4 * args.samples)
            .into_iter()
            .filter(|x| clear_of_poles(&psi, x))
            .take(args.samples)
            .collect();
        push(
            format!("image{}", i + 1),
            verify_solution(&image, c.n, c.k, &pts, ExecPolicy::Parallel)?,
        );
    }
    emit(c, &rows)?;

    let worst = rows.iter().map(|r| r.max_residual).fold(0.0, f64::max);
    let margin = rows
        .iter()
        .map(|r| r.min_margin)
        .fold(f64::INFINITY, f64::min);
    eprintln!(
        "max residual {worst:.3e}, min cone margin {margin:.3e}, tolerance {:.1e}",
        args.tol
    );
    if rows.iter().all(|r| r.passed) {
        Ok(())
    } else {
        let failed = rows.iter().filter(|r| !r.passed).count();
        Err(Failure::Numeric(format!(
            "{failed} of {} fields exceed the tolerance",
            rows.len()
        )))
    }
}

pub fn solve_radial(args: &RadialArgs) -> Result<(), Failure> {
    let c = &args.common;
    check_nk(c)?;
    positive("u0", args.u0)?;
    positive("rmax", args.rmax)?;
    let control = match args.step {
        Some(h) => {
            positive("step", h)?;
            StepControl::Fixed { h }
        }
        None => {
            positive("rtol", args.rtol)?;
            StepControl::Adaptive {
                rtol: args.rtol,
                atol: 0.0,
            }
        }
    };
    let profile = shoot(args.u0, c.n, c.k, args.rmax, control)?;
    let out = open(c.out.as_deref())?;
    match c.format {
        Format::Csv => io::write_profile_csv(out, &profile, 1.0)?,
        Format::Json => io::write_profile_json(out, &profile, 1.0)?,
    }
    let rep = liouville_report(&profile)?;
    eprintln!(
        "fitted a {:.12}, peak-law a {:.12}",
        rep.fitted_a, rep.law_a
    );
    eprintln!(
        "max relative deviation from the bubble {:.3e} at r = {:.4}",
        rep.max_rel_deviation, rep.worst_r
    );
    match rep.tail {
        TailEvidence::InsufficientTail { a_times_rmax } => {
            eprintln!("tail probe: insufficient tail (a·rmax = {a_times_rmax:.3})")
        }
        TailEvidence::Probe(p) => {
            let inner = p.samples.last().map_or(f64::NAN, |s| s.relative_measure);
            eprintln!(
                "tail probe: plausibly regular = {} (Kelvin image in [{:.3e}, {:.3e}], innermost |y||∇v|/v = {inner:.3e})",
                p.plausibly_regular, p.v_inf, p.v_sup
            )
        }
    }
    Ok(())
}

pub fn homotopy(args: &HomotopyArgs) -> Result<(), Failure> {
    let c = &args.common;
    check_nk(c)?;
    positive("rb", args.rb)?;
    positive("a", args.a)?;
    positive("tol", args.tol)?;
    if args.steps == 0 {
        return Err(config("--steps must be at least 1"));
    }
    let mut spec = BvpSpec::from_bubble(c.n, c.k, args.a, args.rb, args.m, args.steps)?;
    spec.tolerances.residual = args.tol;
    if args.root {
        spec.form = ResidualForm::KthRoot;
    }
    let (profile, trace) = match continue_path(&spec) {
        Ok(done) => done,
        Err(Error::PathFailure { last_good_t }) => {
            let t = last_good_t.map_or("none".to_string(), |t| format!("{t}"));
            return Err(Failure::Numeric(format!(
                "continuation failed; last good t = {t}"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(path) = &args.trace {
        io::write_trace_json(open(Some(path))?, &trace)?;
    }
    let out = open(c.out.as_deref())?;
    match c.format {
        Format::Csv => io::write_profile_csv(out, &profile, spec.rhs)?,
        Format::Json => io::write_profile_json(out, &profile, spec.rhs)?,
    }
    let bubble = BubbleSpec::centered(c.n, c.k, args.a)?;
    let dev = profile
        .mesh
        .iter()
        .zip(&profile.values)
        .map(|(&r, &u)| (u - bubble.profile(r)).abs())
        .fold(0.0, f64::max);
    let iters: usize = trace.records.iter().map(|r| r.iters).sum();
    eprintln!(
        "reached t = 1 in {} solves ({iters} Newton iterations, {} bisections); max deviation from the bubble {dev:.3e}",
        trace.records.len(),
        trace.total_bisections()
    );
    Ok(())
}

pub fn harnack_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let c = &args.common;
    check_nk(c)?;
    let a_grid = parse_grid(&args.a).map_err(config)?;
    let r_grid = parse_grid(&args.r).map_err(config)?;
    if a_grid.is_empty() || r_grid.is_empty() {
        return Err(config("grids must not be empty"));
    }
    let opts = SweepOptions {
        images: args.images,
        seed: c.seed,
        ..SweepOptions::default()
    };
    let table = sweep(c.n, c.k, &a_grid, &r_grid, &opts)?;
    let out = open(c.out.as_deref())?;
    match c.format {
        Format::Csv => io::write_harnack_csv(out, &table.rows)?,
        Format::Json => io::write_harnack_json(out, &table.rows)?,
    }
    let cnk = c_constant(c.n, c.k)?;
    let limit = cnk * cnk * 2f64.powi(2 - c.n as i32);
    if let Some(sup) = table.sup_centered {
        eprintln!("sup product_scaled (centered) {sup:.9}; a→∞ limit c²·2^(2−n) = {limit:.9}");
    }
    if args.images > 0 {
        if let Some(sup) = table.sup_all {
            eprintln!("sup product_scaled (with images) {sup:.9}");
        }
    }
    Ok(())
}
