use std::fmt::Write as _;
use std::path::Path;

use krein_core::dynamo::{c_sweep, AlphaProfile, DynamoBc, DynamoParams};
use krein_core::herbst::{
    b_sweep, branch_asymptote, crossing_estimate, crossing_exact, lowest_real_mode_bound_ka,
    squire_spectrum, vertical_ray_asymptote, HerbstCrossing, SquireParams, YSegment,
};
use krein_core::interp::{
    coalescence_point, critical_level_kc, exceptional_point_b, exceptional_point_nu, nu_sweep,
    supremum_bound_ks, InterpParams,
};
use krein_core::numerics::branches::TrackOptions;
use krein_core::numerics::roots::ExceptionalPoint;
use krein_core::sweep::{EigenvalueKind, EnergyView};
use krein_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{
    Axis, BcArg, BoundsArgs, DynamoArgs, EpLocateArgs, Format, HerbstArgs, InterpSweepArgs, Model,
    SquireArgs,
};
use crate::error::{CliError, CliResult};
use crate::output::{emit_sweep, linspace, positive_count, write_text};

const FIG1_PROFILE: &str = include_str!("../profiles/fig1.txt");
const CROSSING_TOL: f64 = 1e-8;

pub fn interp_sweep(a: InterpSweepArgs) -> CliResult<()> {
    let grid = linspace("nu", a.nu_min, a.nu_max, a.nu_steps)?;
    let levels = positive_count("levels", a.levels)?;
    let result = nu_sweep(a.b, a.g, &grid, levels, &TrackOptions::default())?;
    emit_sweep(&result, &a.output, false)
}

pub fn herbst(a: HerbstArgs) -> CliResult<()> {
    let grid = linspace("b", a.b_min, a.b_max, a.b_steps)?;
    let levels = positive_count("levels", a.levels)?;
    let mut result = b_sweep(&grid, levels, &TrackOptions::default())?;
    let view = if a.rescaled {
        EnergyView::Rescaled
    } else if a.mu {
        EnergyView::Mu
    } else {
        EnergyView::Energy
    };
    result.eigenvalue_kind = EigenvalueKind::BoxMu { view };

    let (lo, hi) = (
        grid[0].min(grid[grid.len() - 1]),
        grid[0].max(grid[grid.len() - 1]),
    );
    let mut ns = Vec::new();
    for n in 1.. {
        let est = crossing_estimate(n)?;
        if est.b > hi {
            break;
        }
        if est.b >= lo {
            ns.push(n);
        }
    }
    let crossings: Vec<_> = ns
        .par_iter()
        .map(|&n| (n, crossing_exact(n, CROSSING_TOL)))
        .collect();
    result
        .metadata
        .insert("crossing_tol".into(), format!("{CROSSING_TOL:e}"));
    for (n, c) in crossings {
        let est = crossing_estimate(n)?;
        let mut record = format!("estimate_b={:?} estimate_E={:?}", est.b, est.e);
        match c {
            Ok(c) => write!(
                record,
                " exact_b={:?} exact_re_E={:?} exact_im_E={:?} residual_f={:e} residual_df={:e} sign={:?}",
                c.point.parameter, c.point.eigenvalue.re, c.point.eigenvalue.im, c.point.residual_f, c.point.residual_df, c.sign
            )
            .expect("writing to a String"),
            Err(e) => {
                record.push_str(" exact=unavailable");
                result.diagnostics.push(format!("crossing {n}: {e}"));
            }
        }
        result.metadata.insert(format!("crossing_{n:02}"), record);
    }
    emit_sweep(&result, &a.output, false)
}

#[derive(Debug, Serialize)]
struct SquireRecord {
    mode: usize,
    lambda: Complex64,
    segment: YSegment,
    distance: f64,
    vertical_ray_prediction: Complex64,
    branch_index: usize,
    branch_prediction: Complex64,
}

#[derive(Debug, Serialize)]
struct SquireReport {
    model: &'static str,
    epsilon: f64,
    box_size: f64,
    modes: Vec<SquireRecord>,
    version: &'static str,
}

pub fn squire(a: SquireArgs) -> CliResult<()> {
    let params = match (a.epsilon, a.alpha_tilde, a.reynolds) {
        (Some(eps), None, None) => SquireParams::from_epsilon(eps)?,
        (None, Some(at), Some(re)) => SquireParams::from_flow(at, re)?,
        _ => {
            return Err(CliError::Usage(
                "give --epsilon or both --alpha-tilde and --reynolds".into(),
            ))
        }
    };
    let levels = positive_count("levels", a.levels)?;
    let modes = squire_spectrum(&params, levels)?;
    let mut per_side = [0usize; 2];
    let mut records = Vec::with_capacity(modes.len());
    for (k, m) in modes.iter().enumerate() {
        let plus = m.lambda.re >= 0.0;
        let side = &mut per_side[usize::from(!plus)];
        *side += 1;
        records.push(SquireRecord {
            mode: k + 1,
            lambda: m.lambda,
            segment: m.classification.segment,
            distance: m.classification.distance,
            vertical_ray_prediction: vertical_ray_asymptote(k + 1, params.epsilon),
            branch_index: *side,
            branch_prediction: branch_asymptote(*side, params.epsilon, plus)?,
        });
    }
    let report = SquireReport {
        model: "squire",
        epsilon: params.epsilon,
        box_size: params.box_size(),
        modes: records,
        version: env!("CARGO_PKG_VERSION"),
    };
    let text = match a.output.format {
        Format::Json => {
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Solver(serialization(e)))?
                + "\n"
        }
        Format::Csv => squire_csv(&report)?,
    };
    write_text(a.output.out.as_deref(), &text)
}

fn serialization(e: impl std::fmt::Display) -> krein_core::SpectralError {
    krein_core::SpectralError::Serialization(e.to_string())
}

fn squire_csv(report: &SquireReport) -> CliResult<String> {
    let mut text = String::new();
    text.push_str("# krein-spectra squire csv schema 1\n");
    writeln!(
        text,
        "# epsilon={:?} box_size={:?}",
        report.epsilon, report.box_size
    )
    .expect("writing to a String");
    writeln!(text, "# meta version={}", report.version).expect("writing to a String");
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Solver(serialization(e));
    w.write_record([
        "mode",
        "re_lambda",
        "im_lambda",
        "segment",
        "distance",
        "re_ray",
        "im_ray",
        "branch_index",
        "re_branch",
        "im_branch",
    ])
    .map_err(err)?;
    for r in &report.modes {
        w.write_record([
            r.mode.to_string(),
            format!("{:?}", r.lambda.re),
            format!("{:?}", r.lambda.im),
            format!("{:?}", r.segment),
            format!("{:?}", r.distance),
            format!("{:?}", r.vertical_ray_prediction.re),
            format!("{:?}", r.vertical_ray_prediction.im),
            r.branch_index.to_string(),
            format!("{:?}", r.branch_prediction.re),
            format!("{:?}", r.branch_prediction.im),
        ])
        .map_err(err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Solver(serialization(e)))?;
    text.push_str(&String::from_utf8(bytes).map_err(|e| CliError::Solver(serialization(e)))?);
    Ok(text)
}

/// `fig1`, `constant:<alpha0>`, or a coefficient file.
fn parse_profile(spec: &str) -> CliResult<AlphaProfile> {
    if spec == "fig1" {
        return Ok(AlphaProfile::from_coefficient_text(FIG1_PROFILE, 1.0)?);
    }
    if let Some(v) = spec.strip_prefix("constant:") {
        let a0: f64 = v
            .parse()
            .map_err(|e| CliError::Usage(format!("bad constant profile {v:?}: {e}")))?;
        return Ok(AlphaProfile::new(vec![a0], 1.0)?);
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read profile {}: {e}", path.display())))?;
    Ok(AlphaProfile::from_coefficient_text(&text, 1.0)?)
}

pub fn dynamo(a: DynamoArgs) -> CliResult<()> {
    let grid = linspace("c", a.c_min, a.c_max, a.c_steps)?;
    let levels = positive_count("levels", a.levels)?;
    let bc = match a.bc {
        BcArg::Idealized => DynamoBc::Idealized,
        BcArg::Realistic => DynamoBc::Realistic,
    };
    let params = DynamoParams::new(a.l, parse_profile(&a.profile)?, bc)?;
    let mut result = c_sweep(&params, &grid, levels, &TrackOptions::default())?;
    result.metadata.insert("profile".into(), a.profile.clone());
    emit_sweep(&result, &a.output, !a.full_pairs)
}

fn require<T>(value: Option<T>, flag: &str, model: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("--{flag} is required for --model {model}")))
}

pub fn bounds(a: BoundsArgs) -> CliResult<()> {
    let nu = match a.model {
        Model::Interp => require(a.nu, "nu", "interp")?,
        Model::Herbst => match a.nu {
            None => -1.0,
            Some(nu) if nu == -1.0 => nu,
            Some(_) => return Err(CliError::Usage("the Herbst model fixes nu = -1".into())),
        },
    };
    let params = InterpParams::new(nu, a.b, a.g)?;
    let mut text = String::new();
    let model = match a.model {
        Model::Interp => "interp",
        Model::Herbst => "herbst",
    };
    writeln!(text, "model {model}").expect("writing to a String");
    writeln!(text, "b {:?}", a.b).expect("writing to a String");
    writeln!(text, "nu {nu:?}").expect("writing to a String");
    writeln!(text, "g {:?}", a.g).expect("writing to a String");
    writeln!(text, "k_s {:.6}", supremum_bound_ks(a.b, nu, a.g)).expect("writing to a String");
    writeln!(text, "k_c {}", critical_level_kc(&params)?).expect("writing to a String");
    if a.model == Model::Herbst {
        positive_count("n-max", a.n_max)?;
        writeln!(text, "k_a {:.6}", lowest_real_mode_bound_ka(a.b)).expect("writing to a String");
        let rows: Vec<CliResult<(usize, f64, f64, HerbstCrossing)>> = (1..=a.n_max)
            .into_par_iter()
            .map(|n| {
                let est = crossing_estimate(n)?;
                let exact = crossing_exact(n, CROSSING_TOL).map_err(CliError::from_refinement)?;
                Ok((n, est.b, est.e, exact))
            })
            .collect();
        writeln!(
            text,
            "n,b_estimate,E_estimate,b_exact,re_E_exact,im_E_exact"
        )
        .expect("writing to a String");
        for row in rows {
            let (n, b, e, c) = row?;
            writeln!(
                text,
                "{n},{b:.4},{e:.4},{:.4},{:.4},{:.1e}",
                c.point.parameter, c.point.eigenvalue.re, c.point.eigenvalue.im
            )
            .expect("writing to a String");
        }
    }
    write_text(None, &text)
}

#[derive(Debug, Serialize)]
struct InterpEpRecord {
    model: &'static str,
    search: &'static str,
    g: f64,
    nu: f64,
    b: f64,
    mu: Complex64,
    energy: Complex64,
    residual_f: f64,
    residual_df: f64,
}

pub fn ep_locate(a: EpLocateArgs) -> CliResult<()> {
    if !(a.tol > 0.0 && a.tol.is_finite()) {
        return Err(CliError::Usage("--tol must be positive".into()));
    }
    let json = match a.model {
        Model::Herbst => {
            let n = require(a.n, "n", "herbst")?;
            positive_count("n", n)?;
            let c = crossing_exact(n, a.tol).map_err(CliError::from_refinement)?;
            serde_json::to_string(&HerbstEpRecord {
                model: "herbst",
                crossing: c,
            })
        }
        Model::Interp => {
            let nu = require(a.nu, "nu", "interp")?;
            let b = require(a.b, "b", "interp")?;
            let mu = Complex64::new(require(a.mu, "mu", "interp")?, a.mu_im);
            let params = InterpParams::new(nu, b, a.g)?;
            let (search, ep): (&str, ExceptionalPoint) = if a.two_parameter {
                let ep =
                    coalescence_point(a.g, mu, nu, b, a.tol).map_err(CliError::from_refinement)?;
                ("coalescence", ep)
            } else {
                match a.vary {
                    Axis::B => (
                        "b",
                        exceptional_point_b(&params, mu, a.tol)
                            .map_err(CliError::from_refinement)?,
                    ),
                    Axis::Nu => (
                        "nu",
                        exceptional_point_nu(&params, mu, a.tol)
                            .map_err(CliError::from_refinement)?,
                    ),
                }
            };
            let (nu, b) = match search {
                "coalescence" => (ep.parameter, ep.secondary_parameter.unwrap_or(b)),
                "b" => (nu, ep.parameter),
                _ => (ep.parameter, b),
            };
            serde_json::to_string(&InterpEpRecord {
                model: "interp",
                search,
                g: a.g,
                nu,
                b,
                mu: ep.eigenvalue,
                energy: ep.eigenvalue / (b * b),
                residual_f: ep.residual_f,
                residual_df: ep.residual_df,
            })
        }
    }
    .map_err(|e| CliError::Solver(serialization(e)))?
        + "\n";
    write_text(None, &json)?;
    if let Some(path) = a.out.as_deref() {
        write_text(Some(path), &json)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct HerbstEpRecord {
    model: &'static str,
    #[serde(flatten)]
    crossing: HerbstCrossing,
}
