use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use simtri_core::algstruct::{generate_algebra, jacobson_radical, verify_quotient_commutative};
use simtri_core::certify::{
    generate_instance, instance_predicate, verify_algebra, verify_certificate, CertifiedObject, InstanceKind,
    InstanceRecipe, VerificationReport,
};
use simtri_core::commalg::{check_conditions, default_max_depth, l_nilpotency_length, OperatorFamily};
use simtri_core::matcore::ToleranceOverrides;
use simtri_core::trieng::{
    analyze_normal_pair, analyze_normal_pair_dual, scalar_diagonal_decomposition, triangularize_commuting,
    triangularize_l_nilpotent, triangularize_left_annihilated, triangularize_shemesh,
};
use simtri_core::ToleranceContext;

use crate::error::CliError;
use crate::family::{sha256_hex, FamilyFile};
use crate::report::{FamilyConditions, RunReport, RunResult, Timings};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Mode {
    Auto,
    LNilpotent,
    Shemesh,
    LeftAnnihilated,
    Normal,
}

/// Tolerance and depth settings shared by the analysis commands.
#[derive(Clone, Debug, Default)]
pub struct Settings {
    pub overrides: ToleranceOverrides,
    pub max_depth: Option<usize>,
}

pub struct Loaded {
    pub file: FamilyFile,
    pub family: OperatorFamily,
    pub input_digest: String,
}

pub fn load_family(path: &Path) -> Result<Loaded, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let text =
        String::from_utf8(bytes.clone()).map_err(|_| CliError::Input(format!("{}: not UTF-8", path.display())))?;
    let file = FamilyFile::parse(&text).map_err(|e| match e {
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        other => other,
    })?;
    let family = file.family()?;
    Ok(Loaded {
        file,
        family,
        input_digest: sha256_hex(&bytes),
    })
}

fn tolerances(file: &FamilyFile, settings: &Settings) -> Result<ToleranceContext, CliError> {
    let mut tol = ToleranceContext::for_dim(file.dim);
    if let Some(o) = &file.tolerances {
        tol = tol.with_overrides(o);
    }
    tol = tol.with_overrides(&settings.overrides);
    tol.validate()?;
    Ok(tol)
}

fn conditions(family: &OperatorFamily, max_depth: usize, tol: &ToleranceContext) -> Result<FamilyConditions, CliError> {
    let length = l_nilpotency_length(family, max_depth, tol)?;
    let pair = match family.members() {
        [a, b] => Some(check_conditions(a, b, tol)?),
        _ => None,
    };
    Ok(FamilyConditions {
        l_nilpotent_length: length,
        commuting: length.is_some_and(|k| k <= 1),
        pair,
    })
}

fn new_report(command: &str, loaded: &Loaded, settings: &Settings) -> Result<RunReport, CliError> {
    let tol = tolerances(&loaded.file, settings)?;
    let max_depth = settings.max_depth.unwrap_or_else(|| default_max_depth(loaded.family.dim()));
    if max_depth == 0 {
        return Err(CliError::Input("--max-depth must be at least 1".into()));
    }
    let conditions = conditions(&loaded.family, max_depth, &tol)?;
    Ok(RunReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: command.to_string(),
        input_digest: loaded.input_digest.clone(),
        family_digest: loaded.file.digest(),
        family: loaded.file.clone(),
        tolerances: tol,
        max_depth,
        conditions,
        result: None,
        verification: Vec::new(),
        timings: Timings::default(),
    })
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

pub fn cmd_check(path: &Path, settings: &Settings) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let loaded = load_family(path)?;
    let mut report = new_report("check", &loaded, settings)?;
    report.timings.analysis_ms = ms(start);
    Ok(report)
}

fn pair_of(family: &OperatorFamily, mode: &str) -> Result<(simtri_core::ComplexMatrix, simtri_core::ComplexMatrix), CliError> {
    match family.members() {
        [a, b] => Ok((a.clone(), b.clone())),
        m => Err(CliError::Failure(format!(
            "mode {mode} needs a pair of matrices, the family has {}",
            m.len()
        ))),
    }
}

/// Residual of every predicate, for the diagnostic when none holds.
fn predicate_summary(family: &OperatorFamily, tol: &ToleranceContext) -> String {
    let l = instance_predicate(InstanceKind::LNilpotent, family, tol)
        .map(|p| format!("{:.3e}", p.residual))
        .unwrap_or_else(|e| e.to_string());
    let mut parts = vec![format!("L-nilpotency {l}")];
    if let [a, b] = family.members() {
        if let Ok(c) = check_conditions(a, b, tol) {
            let r = c.residual_norms;
            parts.push(format!(
                "A[A,B] = [A,B]B = 0 {:.3e}",
                r.a_times_commutator.max(r.commutator_times_b)
            ));
            parts.push(format!(
                "A[A,B] = B[A,B] = 0 {:.3e}",
                r.a_times_commutator.max(r.b_times_commutator)
            ));
            let left = r.normality_a.max(r.a_times_commutator);
            let right = r.normality_b.max(r.commutator_times_b);
            parts.push(format!("normal pair {:.3e}", left.min(right)));
        }
    }
    format!("{} (threshold {:.1e})", parts.join(", "), tol.zero_tol)
}

fn run_l_nilpotent(family: &OperatorFamily, c: &FamilyConditions, max_depth: usize, tol: &ToleranceContext) -> Result<(String, Vec<CertifiedObject>), CliError> {
    if c.l_nilpotent_length.is_none() {
        return Err(CliError::Failure(format!(
            "family is not L-nilpotent within depth {max_depth}: {}",
            predicate_summary(family, tol)
        )));
    }
    let (mode, cert) = if c.commuting {
        ("commuting", triangularize_commuting(family, tol)?)
    } else {
        ("l_nilpotent", triangularize_l_nilpotent(family, tol)?)
    };
    let sdf = scalar_diagonal_decomposition(family, tol)?;
    Ok((
        mode.to_string(),
        vec![CertifiedObject::Triangularization(cert), CertifiedObject::ScalarDiagonal(sdf)],
    ))
}

fn run_mode(
    mode: Mode,
    family: &OperatorFamily,
    c: &FamilyConditions,
    max_depth: usize,
    tol: &ToleranceContext,
) -> Result<(String, Vec<CertifiedObject>), CliError> {
    match mode {
        Mode::LNilpotent => run_l_nilpotent(family, c, max_depth, tol),
        Mode::Shemesh => {
            let (a, b) = pair_of(family, "shemesh")?;
            let cert = triangularize_shemesh(&a, &b, tol)?;
            Ok(("shemesh".into(), vec![CertifiedObject::Triangularization(cert)]))
        }
        Mode::LeftAnnihilated => {
            let (a, b) = pair_of(family, "left_annihilated")?;
            let cert = triangularize_left_annihilated(&a, &b, tol)?;
            Ok(("left_annihilated".into(), vec![CertifiedObject::Triangularization(cert)]))
        }
        Mode::Normal => {
            let (a, b) = pair_of(family, "normal")?;
            let report = c.pair.as_ref().expect("pairs carry a condition report");
            let analysis = if report.normal_left_annihilated() {
                analyze_normal_pair(&a, &b, tol)?
            } else if report.normal_right_annihilated() {
                analyze_normal_pair_dual(&a, &b, tol)?
            } else {
                let r = &report.residual_norms;
                return Err(CliError::Failure(format!(
                    "neither A normal with A[A,B] = 0 (residuals {:.3e}, {:.3e}) nor B normal with [A,B]B = 0 (residuals {:.3e}, {:.3e})",
                    r.normality_a, r.a_times_commutator, r.normality_b, r.commutator_times_b
                )));
            };
            Ok(("normal".into(), vec![CertifiedObject::NormalPair(analysis)]))
        }
        Mode::Auto => {
            if c.l_nilpotent_length.is_some() {
                return run_l_nilpotent(family, c, max_depth, tol);
            }
            if let Some(p) = &c.pair {
                let next = if p.shemesh_left_right {
                    Some(Mode::Shemesh)
                } else if p.shemesh_left_left {
                    Some(Mode::LeftAnnihilated)
                } else if p.normal_left_annihilated() || p.normal_right_annihilated() {
                    Some(Mode::Normal)
                } else {
                    None
                };
                if let Some(m) = next {
                    return run_mode(m, family, c, max_depth, tol);
                }
            }
            Err(CliError::Failure(format!(
                "no supported predicate holds: {}",
                predicate_summary(family, tol)
            )))
        }
    }
}

fn verify_objects(objects: &[CertifiedObject], family: &OperatorFamily, tol: &ToleranceContext) -> Vec<VerificationReport> {
    objects.iter().map(|o| verify_certificate(o, family, tol)).collect()
}

pub fn cmd_triangularize(path: &Path, mode: Mode, settings: &Settings) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let loaded = load_family(path)?;
    let mut report = new_report("triangularize", &loaded, settings)?;
    let tol = report.tolerances;
    let (mode, objects) = run_mode(mode, &loaded.family, &report.conditions, report.max_depth, &tol)?;
    report.timings.analysis_ms = ms(start);
    let vstart = Instant::now();
    report.verification = verify_objects(&objects, &loaded.family, &tol);
    report.timings.verification_ms = ms(vstart);
    report.result = Some(RunResult::Certified { mode, objects });
    Ok(report)
}

pub fn cmd_algebra(path: &Path, settings: &Settings) -> Result<RunReport, CliError> {
    let start = Instant::now();
    let loaded = load_family(path)?;
    let mut report = new_report("algebra", &loaded, settings)?;
    let tol = report.tolerances;
    let structure = jacobson_radical(&generate_algebra(&loaded.family, &tol), &tol)?;
    let quotient_commutativity = verify_quotient_commutative(&structure, &tol)?;
    report.timings.analysis_ms = ms(start);
    let vstart = Instant::now();
    report.verification = vec![verify_algebra(&structure, &loaded.family, &tol)];
    report.timings.verification_ms = ms(vstart);
    report.result = Some(RunResult::Algebra {
        radical_dim: structure.radical_basis.as_ref().map_or(0, |r| r.len()),
        structure,
        quotient_commutativity,
    });
    Ok(report)
}

/// Outcome of re-verifying a stored report.
pub struct Reverification {
    pub report_tolerances: ToleranceContext,
    pub tolerances: ToleranceContext,
    pub reports: Vec<VerificationReport>,
}

impl Reverification {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.overall)
    }
}

pub fn load_report(path: &Path) -> Result<RunReport, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| {
        CliError::Input(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })
}

/// Re-runs verification of a report's result against its embedded family.
pub fn cmd_verify(paths: &[PathBuf], overrides: &ToleranceOverrides) -> Result<Vec<Reverification>, CliError> {
    let mut seen: Vec<(String, String)> = Vec::new();
    let mut out = Vec::new();
    for path in paths {
        let report = load_report(path)?;
        let digest = report.family.digest();
        if digest != report.family_digest {
            return Err(CliError::Input(format!(
                "{}: embedded family does not match its recorded digest",
                path.display()
            )));
        }
        let key = (report.family_digest.clone(), report.command.clone());
        if seen.contains(&key) {
            return Err(CliError::Input(format!(
                "{}: a report for the same family and command was already given",
                path.display()
            )));
        }
        seen.push(key);
        let family = report.family.family()?;
        let tol = report.tolerances.with_overrides(overrides);
        tol.validate()?;
        let reports = match &report.result {
            Some(RunResult::Certified { objects, .. }) => verify_objects(objects, &family, &tol),
            Some(RunResult::Algebra { structure, .. }) => vec![verify_algebra(structure, &family, &tol)],
            None => vec![recheck_conditions(&report, &family, &tol)?],
        };
        out.push(Reverification {
            report_tolerances: report.tolerances,
            tolerances: tol,
            reports,
        });
    }
    Ok(out)
}

/// A `check` report verifies when its predicate verdicts are reproduced.
fn recheck_conditions(
    report: &RunReport,
    family: &OperatorFamily,
    tol: &ToleranceContext,
) -> Result<VerificationReport, CliError> {
    let fresh = conditions(family, report.max_depth, tol)?;
    let old = &report.conditions;
    let mut agree = vec![
        ("l_nilpotent_length", fresh.l_nilpotent_length == old.l_nilpotent_length),
        ("commuting", fresh.commuting == old.commuting),
    ];
    if let (Some(f), Some(o)) = (&fresh.pair, &old.pair) {
        agree.push(("shemesh_left_right", f.shemesh_left_right == o.shemesh_left_right));
        agree.push(("shemesh_left_left", f.shemesh_left_left == o.shemesh_left_left));
        agree.push(("normal_flags", f.normal_flags == o.normal_flags));
    } else {
        agree.push(("pair_report", fresh.pair.is_none() && old.pair.is_none()));
    }
    Ok(VerificationReport::from_flags("condition report", &agree))
}

pub fn cmd_generate(kind: InstanceKind, dim: usize, seed: u64, violate: bool) -> Result<FamilyFile, CliError> {
    let mut recipe = InstanceRecipe::new(kind, dim, seed);
    recipe.violate = violate;
    let g = generate_instance(&recipe).map_err(|e| match e {
        simtri_core::Error::Precondition(m) => CliError::Input(m),
        other => CliError::Failure(other.to_string()),
    })?;
    let mut file = FamilyFile::from_family(&g.family);
    file.recipe = Some(g.recipe);
    Ok(file)
}
