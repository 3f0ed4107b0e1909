//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails. Runs without the test harness so the
//! lines are always shown.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use simtri_core::algstruct::{generate_algebra, jacobson_radical};
use simtri_core::certify::{
    burnside_reducibility_oracle, generate_distinct_diagonal_pair, generate_instance, generate_nested_commutator_pair,
    instance_predicate, verify_algebra, verify_certificate, CertifiedObject, GeneratedInstance, InstanceKind,
    InstanceRecipe,
};
use simtri_core::commalg::check_conditions;
use simtri_core::matcore::{commutator, nilpotency_index};
use simtri_core::trieng::{
    analyze_normal_pair, scalar_diagonal_decomposition, triangularize_l_nilpotent, triangularize_left_annihilated,
    triangularize_shemesh, TriangularizationCertificate,
};
use simtri_core::{ComplexMatrix, ToleranceContext};
use tempfile::TempDir;

const REL: f64 = 1e-8;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:?}, limit {limit:?}"))?;
    Ok(t)
}

fn simtri(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_simtri")).args(args).output().unwrap()
}

fn golden_example() -> Outcome {
    let start = Instant::now();
    let a = ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]).unwrap();
    let b = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[1.0, 0.0]]).unwrap();
    let tol = ToleranceContext::for_dim(2);
    let c = commutator(&a, &b).unwrap();
    let expected = ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[-1.0, 0.0]]).unwrap();
    ensure(c == expected, || format!("[A,B] = {:?}", c.to_pairs()))?;
    let report = check_conditions(&a, &b, &tol).unwrap();
    let r = report.residual_norms.a_times_commutator;
    ensure(r <= 1e-12, || format!("A[A,B] residual {r:e}"))?;
    ensure(report.shemesh_left_right, || "Shemesh condition not detected".into())?;
    let square = &c * &c;
    ensure(square == ComplexMatrix::zeros(2), || "[A,B]^2 is not exactly zero".into())?;

    let family = simtri_core::commalg::OperatorFamily::pair(a.clone(), b.clone()).unwrap();
    let cert = triangularize_shemesh(&a, &b, &tol).map_err(|e| e.to_string())?;
    let dims = cert.chain.dims();
    let v = verify_certificate(&CertifiedObject::Triangularization(cert), &family, &tol);
    ensure(v.overall, || format!("certificate failed: {:?}", v.failures()))?;
    ensure(dims == vec![1], || format!("chain dims {dims:?}"))?;

    // the same through the command-line front end
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("pair.json");
    let file = json!({"dim": 2, "matrices": [
        {"name": "A", "entries": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]]},
        {"name": "B", "entries": [[[0, 0], [0, 0]], [[1, 0], [0, 0]]]}]});
    std::fs::write(&path, file.to_string()).unwrap();
    let o = simtri(&["triangularize", path.to_str().unwrap(), "--mode", "shemesh"]);
    ensure(o.status.code() == Some(0), || String::from_utf8_lossy(&o.stderr).into_owned())?;
    let t = within(Duration::from_secs(1), start)?;
    Ok(format!("[A,B] exact, A[A,B] residual {r:e}, chain (1), {t:?}"))
}

fn l_nilpotent_instances() -> Vec<GeneratedInstance> {
    (0..200u64)
        .map(|seed| {
            let n = 2 + seed as usize % 7;
            generate_instance(&InstanceRecipe::new(InstanceKind::LNilpotent, n, seed)).unwrap()
        })
        .collect()
}

fn max_diag(m: &ComplexMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn l_nilpotent_suite(instances: &[GeneratedInstance]) -> Outcome {
    let start = Instant::now();
    let mut worst_below = 0.0f64;
    let mut worst_diag = 0.0f64;
    for g in instances {
        let tol = ToleranceContext::for_dim(g.family.dim());
        let blocks = g.block_scalars.as_ref().map_or(0, |b| b.len());
        ensure((2..=4).contains(&blocks), || format!("seed {}: {blocks} blocks", g.recipe.seed))?;
        let cert = triangularize_l_nilpotent(&g.family, &tol).map_err(|e| format!("seed {}: {e}", g.recipe.seed))?;
        let norms: Vec<f64> = g.family.members().iter().map(|m| m.norm()).collect();
        for (t, s) in cert.triangular_forms.iter().zip(&norms) {
            worst_below = worst_below.max(t.below_diagonal_max() / s);
        }
        for i in 0..norms.len() {
            for j in i + 1..norms.len() {
                let c = commutator(&cert.triangular_forms[i], &cert.triangular_forms[j]).unwrap();
                worst_diag = worst_diag.max(max_diag(&c) / (norms[i] * norms[j]));
            }
        }
        let v = verify_certificate(&CertifiedObject::Triangularization(cert), &g.family, &tol);
        ensure(v.overall, || format!("seed {}: {:?}", g.recipe.seed, v.failures()))?;
    }
    ensure(worst_below <= REL, || format!("below-diagonal residual {worst_below:e}"))?;
    ensure(worst_diag <= REL, || format!("commutator diagonal {worst_diag:e}"))?;
    let t = within(Duration::from_secs(30), start)?;
    Ok(format!(
        "{} instances, below-diagonal {worst_below:.1e}, commutator diagonal {worst_diag:.1e}, {t:?}",
        instances.len()
    ))
}

fn scalar_diagonal_suite(instances: &[GeneratedInstance]) -> Outcome {
    let mut worst_block = 0.0f64;
    let mut worst_nil = 0.0f64;
    for g in instances {
        let tol = ToleranceContext::for_dim(g.family.dim());
        let sdf = scalar_diagonal_decomposition(&g.family, &tol).map_err(|e| format!("seed {}: {e}", g.recipe.seed))?;
        worst_block = worst_block.max(sdf.block_residual);
        let k = sdf.block_count();
        for (nj, m) in sdf.nilpotent_parts.iter().zip(g.family.members()) {
            worst_nil = worst_nil.max(nj.pow(k).norm() / m.norm().powi(k as i32));
        }
        let v = verify_certificate(&CertifiedObject::ScalarDiagonal(sdf), &g.family, &tol);
        ensure(v.overall, || format!("seed {}: {:?}", g.recipe.seed, v.failures()))?;
    }
    ensure(worst_block <= REL, || format!("block residual {worst_block:e}"))?;
    ensure(worst_nil <= REL, || format!("N^blocks residual {worst_nil:e}"))?;
    Ok(format!("block residual {worst_block:.1e}, N^blocks {worst_nil:.1e}"))
}

fn algebra_suite(instances: &[GeneratedInstance]) -> Outcome {
    let mut worst = [0.0f64; 3];
    for g in instances {
        let seed = g.recipe.seed;
        let tol = ToleranceContext::for_dim(g.family.dim());
        let alg = jacobson_radical(&generate_algebra(&g.family, &tol), &tol).map_err(|e| format!("seed {seed}: {e}"))?;
        let closure = alg.closure_residual();
        let power = alg.radical_power_residual.unwrap_or(f64::NAN);
        let comm = alg.commutator_radical_residual();
        for (w, r) in worst.iter_mut().zip([closure, power, comm]) {
            *w = w.max(r);
        }
        ensure(closure <= REL && power <= REL && comm <= REL, || {
            format!("seed {seed}: closure {closure:e}, radical power {power:e}, commutators {comm:e}")
        })?;
        ensure(alg.quotient_dim == g.expected_quotient_dim(), || {
            format!("seed {seed}: quotient {:?}, expected {:?}", alg.quotient_dim, g.expected_quotient_dim())
        })?;
        let v = verify_algebra(&alg, &g.family, &tol);
        ensure(v.overall, || format!("seed {seed}: {:?}", v.failures()))?;
    }
    Ok(format!(
        "closure {:.1e}, radical power {:.1e}, commutators {:.1e}, quotient dims exact",
        worst[0], worst[1], worst[2]
    ))
}

fn shemesh_suites() -> Outcome {
    let mut disagreements = 0;
    let mut worst = 0.0f64;
    for kind in [InstanceKind::ShemeshLr, InstanceKind::ShemeshLl] {
        for seed in 0..200u64 {
            let n = 2 + seed as usize % 5;
            let g = generate_instance(&InstanceRecipe::new(kind, n, seed)).unwrap();
            let tol = ToleranceContext::for_dim(n);
            let [a, b] = g.family.members() else { unreachable!() };
            let cert: TriangularizationCertificate = if kind == InstanceKind::ShemeshLr {
                triangularize_shemesh(a, b, &tol)
            } else {
                triangularize_left_annihilated(a, b, &tol)
            }
            .map_err(|e| format!("{kind} seed {seed}: {e}"))?;
            worst = worst.max(cert.residual);
            let v = verify_certificate(&CertifiedObject::Triangularization(cert), &g.family, &tol);
            ensure(v.overall, || format!("{kind} seed {seed}: {:?}", v.failures()))?;
            let oracle = burnside_reducibility_oracle(&g.family, &tol).map_err(|e| e.to_string())?;
            if !oracle.reducible {
                disagreements += 1;
            }
        }
    }
    ensure(disagreements == 0, || format!("{disagreements} oracle disagreements"))?;
    Ok(format!("400 instances verified, residual {worst:.1e}, 0 oracle disagreements"))
}

fn normal_suites() -> Outcome {
    let mut w = [0.0f64; 5];
    for seed in 0..100u64 {
        let n = 2 + seed as usize % 5;
        let tol = ToleranceContext::for_dim(n);
        let g = generate_instance(&InstanceRecipe::new(InstanceKind::NormalLeftAnnihilate, n, seed)).unwrap();
        let [a, b] = g.family.members() else { unreachable!() };
        let r = analyze_normal_pair(a, b, &tol).map_err(|e| format!("seed {seed}: {e}"))?;
        w[0] = w[0].max(r.b21_residual);
        w[1] = w[1].max(r.a22_b22_residual);
        w[2] = w[2].max(r.commutator_square_residual);

        let g = generate_instance(&InstanceRecipe::new(InstanceKind::NormalPair, n, seed)).unwrap();
        let [a, b] = g.family.members() else { unreachable!() };
        let r = analyze_normal_pair(a, b, &tol).map_err(|e| format!("normal pair seed {seed}: {e}"))?;
        let d = r.diagonalization.as_ref().ok_or(format!("normal pair seed {seed}: not diagonalized"))?;
        w[3] = w[3].max(d.off_diagonal_residual);
        w[4] = w[4].max(d.commutator_residual);
        let v = verify_certificate(&CertifiedObject::NormalPair(r), &g.family, &tol);
        ensure(v.overall, || format!("normal pair seed {seed}: {:?}", v.failures()))?;
    }
    ensure(w.iter().all(|&x| x <= REL), || format!("residuals {w:?}"))?;
    Ok(format!(
        "B21 {:.1e}, [A22,B22] {:.1e}, [A,B]^2 {:.1e}, off-diagonal {:.1e}, commutator {:.1e}",
        w[0], w[1], w[2], w[3], w[4]
    ))
}

fn background_identities() -> Outcome {
    let mut max_index = 0;
    for seed in 0..100u64 {
        let n = 2 + seed as usize % 5;
        let tol = ToleranceContext::for_dim(n);
        let f = generate_nested_commutator_pair(n, seed).map_err(|e| e.to_string())?;
        let [a, b] = f.members() else { unreachable!() };
        let c = commutator(a, b).unwrap();
        let k = nilpotency_index(&c, &tol).ok_or(format!("seed {seed}: [A,B] not nilpotent"))?;
        ensure(k <= n, || format!("seed {seed}: index {k} > {n}"))?;
        max_index = max_index.max(k);
    }
    let mut worst = 0.0f64;
    for seed in 0..100u64 {
        let n = 2 + seed as usize % 5;
        let f = generate_distinct_diagonal_pair(n, seed).map_err(|e| e.to_string())?;
        let [a, b] = f.members() else { unreachable!() };
        worst = worst.max(commutator(a, b).unwrap().norm() / (a.norm() * b.norm()));
    }
    ensure(worst <= REL, || format!("‖[A,B]‖ relative {worst:e}"))?;
    Ok(format!("nilpotent commutators (max index {max_index}), distinct-spectrum ‖[A,B]‖ {worst:.1e}"))
}

fn tamper(report: &mut Value, case: usize) {
    let objects = report["result"]["objects"].as_array_mut().unwrap();
    let obj = if case % 3 == 2 && objects.len() > 1 {
        &mut objects[1]
    } else {
        &mut objects[0]
    };
    let cert = if obj["kind"] == "normal_pair" { &mut obj["certificate"] } else { obj };
    let n = cert["basis_change"].as_array().map_or(0, |r| r.len());
    let (i, j) = (case % n.max(1), (case / 3) % n.max(1));
    let target = if cert["kind"] == "scalar_diagonal" {
        &mut cert["diagonal_scalars"][0][0][0]
    } else if case % 3 == 1 {
        &mut cert["basis_change"][i][j][0]
    } else {
        &mut cert["triangular_forms"][case % 2][i][j][0]
    };
    *target = json!(target.as_f64().unwrap() + 1.0);
}

fn negative_controls() -> Outcome {
    let mut per_kind = Vec::new();
    for kind in InstanceKind::ALL {
        let mut rejected = 0;
        for seed in 0..100u64 {
            let n = 2 + seed as usize % 5;
            let tol = ToleranceContext::for_dim(n);
            if let Ok(g) = generate_instance(&InstanceRecipe::new(kind, n, seed).violated()) {
                if !instance_predicate(kind, &g.family, &tol).map_err(|e| e.to_string())?.holds {
                    rejected += 1;
                }
            }
        }
        ensure(rejected >= 99, || format!("{kind}: {rejected}/100 violated instances rejected"))?;
        per_kind.push(format!("{kind} {rejected}"));
    }

    let dir = TempDir::new().unwrap();
    let kinds = [
        InstanceKind::LNilpotent,
        InstanceKind::ShemeshLr,
        InstanceKind::ShemeshLl,
        InstanceKind::NormalPair,
        InstanceKind::Commuting,
    ];
    let mut missed = Vec::new();
    for case in 0..100usize {
        let kind = kinds[case % kinds.len()];
        let n = 2 + case % 4;
        let fam = dir.path().join(format!("f{case}.json"));
        let rep = dir.path().join(format!("r{case}.json"));
        let p = |x: &Path| x.to_str().unwrap().to_string();
        let args = ["generate", "--kind", kind.name(), "--dim", &n.to_string(), "--seed", &case.to_string()];
        ensure(simtri(&[&args[..], &["--out", &p(&fam)]].concat()).status.success(), || {
            format!("generate {kind} case {case}")
        })?;
        let o = simtri(&["triangularize", &p(&fam), "--out", &p(&rep)]);
        ensure(o.status.success(), || format!("case {case}: {}", String::from_utf8_lossy(&o.stderr)))?;
        let mut report: Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
        tamper(&mut report, case);
        std::fs::write(&rep, report.to_string()).unwrap();
        if simtri(&["verify", &p(&rep)]).status.code() != Some(1) {
            missed.push(format!("{kind} case {case}"));
        }
    }
    ensure(missed.is_empty(), || {
        format!("{}/100 tampered reports rejected, missed {missed:?}", 100 - missed.len())
    })?;
    Ok(format!("violations rejected ({}), tampered reports rejected 100/100", per_kind.join(", ")))
}

fn main() {
    let instances = l_nilpotent_instances();
    let results = [
        ("1 golden example", golden_example()),
        ("2 L-nilpotent triangularization", l_nilpotent_suite(&instances)),
        ("3 scalar-diagonal decomposition", scalar_diagonal_suite(&instances)),
        ("4 generated algebra and radical", algebra_suite(&instances)),
        ("5 Shemesh conditions and oracle", shemesh_suites()),
        ("6 normal pairs", normal_suites()),
        ("7 background identities", background_identities()),
        ("8 negative controls", negative_controls()),
    ];
    let mut failed = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(detail) => println!("PASS criterion {name}: {detail}"),
            Err(why) => {
                println!("FAIL criterion {name}: {why}");
                failed.push(*name);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
