use std::fs::{self, File};
use std::path::Path;

use sandflow_core::geometry::{compile_source, Source, SourceSpec};
use sandflow_core::grid::{read_csv, ScalarField};
use sandflow_core::transport::{build_slices, minimal_profile, transport_fields};
use sandflow_core::verify::{
    minimizer_check, stability_check, uniqueness_predicate, verify_solution, InvariantOutcome, Report, SolutionPair,
};
use sandflow_core::Error;

use crate::examples::run_example;
use crate::pipeline::{self, fields_csv, load_scene, write_out, Solved};
use crate::{Args, Failure, EXIT_FAIL, EXIT_HYPOTHESIS, EXIT_INTERNAL, EXIT_OK};

type Outcome = Result<i32, Failure>;

fn hypotheses(s: &Solved) -> Report {
    Report { h5: Some(s.h5.clone()), h6: Some(s.h6.clone()), ..Report::default() }
}

fn h5_message(s: &Solved) -> String {
    format!("visibility fails: {} violating pairs, largest discrepancy {:.3e}", s.h5.violations, s.h5.max_discrepancy)
}

fn slice_invariants(s: &Solved, cert: &sandflow_core::verify::H5Certificate) -> Vec<InvariantOutcome> {
    let scene = &s.scene;
    let tol = scene.tol.c * scene.h;
    let slices = build_slices(scene, &s.rays, cert);
    let coverage = slices.coverage(scene);
    let area = (slices.area(scene) / scene.area() - 1.0).abs();
    let crossings = slices.crossing_pairs(scene).len() as f64;
    vec![
        InvariantOutcome {
            name: "slice_coverage".into(),
            pass: coverage >= 1.0 - tol,
            value: coverage,
            bound: 1.0 - tol,
        },
        InvariantOutcome { name: "slice_area_error".into(), pass: area <= tol, value: area, bound: tol },
        InvariantOutcome { name: "ray_crossings".into(), pass: crossings == 0.0, value: crossings, bound: 0.0 },
    ]
}

pub fn solve(args: &Args) -> Outcome {
    let s = pipeline::solve(load_scene(args)?)?;
    let scene = &s.scene;
    let mut report = hypotheses(&s);
    let u = s.u_phi();
    let Some(cert) = &s.cert else {
        write_out(&args.out, "fields.csv", &fields_csv(&s, &u, None, None))?;
        write_out(&args.out, "report.json", &report.to_json())?;
        eprintln!("sandflow: {}", h5_message(&s));
        return Ok(EXIT_HYPOTHESIS);
    };
    let tf = transport_fields(scene, &s.rays, cert);
    let minimal = minimal_profile(scene, &u, &scene.source);
    let uniq = uniqueness_predicate(scene, &s.rays, &scene.source);
    let pair = SolutionPair::new(scene, u.clone(), tf.v.clone())?;
    let sol = verify_solution(scene, &pair, &s.sets, scene.tol.n_tests, args.seed);
    if let Some(uf) = minimal.field() {
        report.minimizer = Some(minimizer_check(scene, uf, &u, &scene.source, &s.sets));
    }
    report.invariants = slice_invariants(&s, cert);
    write_out(&args.out, "fields.csv", &fields_csv(&s, &u, minimal.field(), Some(&tf)))?;
    let verdict = if uniq.unique { "unique" } else { "non_unique" };
    let verified = sol.pass;
    report.weak = sol.weak.clone();
    report.solution = Some(sol);
    report.uniqueness = Some(uniq);
    write_out(&args.out, "report.json", &report.to_json())?;
    println!(
        "uniqueness: {verdict}; visibility: pass; separation: {}; solution check: {}",
        if s.h6.pass { "pass" } else { "fail" },
        if verified { "pass" } else { "fail" },
    );
    Ok(if !s.h6.pass {
        EXIT_HYPOTHESIS
    } else if !verified {
        EXIT_INTERNAL
    } else {
        EXIT_OK
    })
}

pub fn check(args: &Args) -> Outcome {
    let s = pipeline::solve(load_scene(args)?)?;
    write_out(&args.out, "report.json", &hypotheses(&s).to_json())?;
    println!("visibility: {}; separation: {}", pass_word(s.h5.pass), pass_word(s.h6.pass));
    Ok(if s.h5.pass && s.h6.pass { EXIT_OK } else { EXIT_HYPOTHESIS })
}

fn pass_word(p: bool) -> &'static str {
    if p {
        "pass"
    } else {
        "fail"
    }
}

fn read_field(path: &Path, names: &[&str]) -> Result<ScalarField, Failure> {
    let table = read_csv(File::open(path).map_err(|e| Failure::config(format!("{}: {e}", path.display())))?)?;
    for n in names {
        if let Ok(f) = table.column(n) {
            return Ok(f);
        }
    }
    Ok(table.first_column()?)
}

pub fn verify(args: &Args) -> Outcome {
    let (Some(up), Some(vp)) = (&args.u, &args.v) else {
        return Err(Failure::config("verify needs --u and --v"));
    };
    let scene = load_scene(args)?;
    let u = read_field(up, &["u", "u_phi"])?;
    let v = read_field(vp, &["v", "v_f"])?;
    let pair = SolutionPair::new(&scene, u, v)?;
    let s = pipeline::solve(scene)?;
    let sol = verify_solution(&s.scene, &pair, &s.sets, s.scene.tol.n_tests, args.seed);
    let failed: Vec<&str> = sol.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect();
    let weak_failed = sol.weak.iter().filter(|w| !w.pass).count();
    let pass = sol.pass;
    let report = Report { weak: sol.weak.clone(), solution: Some(sol), ..Report::default() };
    write_out(&args.out, "report.json", &report.to_json())?;
    if pass {
        println!("solution check: pass");
        Ok(EXIT_OK)
    } else {
        println!("solution check: fail; failed checks {failed:?}; weak residual failures {weak_failed}");
        Ok(EXIT_FAIL)
    }
}

fn second_source(arg: &str) -> Result<Source, Failure> {
    let text = if Path::new(arg).is_file() { fs::read_to_string(arg)? } else { arg.to_string() };
    let spec: SourceSpec = serde_json::from_str(&text).map_err(|e| Failure::config(format!("--f2: {e}")))?;
    let base = Path::new(arg).parent().filter(|_| Path::new(arg).is_file());
    Ok(compile_source(&spec, base)?)
}

pub fn compare(args: &Args) -> Outcome {
    let Some(f2) = &args.f2 else {
        return Err(Failure::config("compare needs --f2"));
    };
    let f2 = second_source(f2)?;
    let s = pipeline::solve(load_scene(args)?)?;
    let Some(cert) = &s.cert else {
        write_out(&args.out, "report.json", &hypotheses(&s).to_json())?;
        eprintln!("sandflow: {}", h5_message(&s));
        return Ok(EXIT_HYPOTHESIS);
    };
    let st = stability_check(&s.scene, &s.rays, &s.scene.source, &f2, cert);
    println!("stability: {} (lhs {:.6e}, rhs {:.6e})", pass_word(st.pass), st.lhs, st.rhs);
    let pass = st.pass;
    let report = Report { stability: Some(st), ..hypotheses(&s) };
    write_out(&args.out, "report.json", &report.to_json())?;
    Ok(if pass { EXIT_OK } else { EXIT_FAIL })
}

pub fn example(args: &Args) -> Outcome {
    let Some(id) = args.fixture.as_deref().or(args.target.as_deref()) else {
        return Err(Failure::config("example needs a fixture id"));
    };
    let h = args.h.unwrap_or(1.0 / 128.0);
    let run = run_example(id, h, args.seed)?;
    write_out(&args.out, "scene.json", &run.scene_json)?;
    write_out(&args.out, "oracle.csv", &run.oracle_csv)?;
    let report = Report { invariants: run.checks.clone(), ..hypotheses(&run.solved) };
    write_out(&args.out, "report.json", &report.to_json())?;
    for c in &run.checks {
        println!("{} {} (value {:.6e}, bound {:.6e})", pass_word(c.pass), c.name, c.value, c.bound);
    }
    Ok(if run.checks.iter().all(|c| c.pass) { EXIT_OK } else { EXIT_FAIL })
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Failure {
        Failure::from(Error::from(e))
    }
}
