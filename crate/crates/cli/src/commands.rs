//! Pieces of the `qcqp` subcommands that do not touch the terminal.

use qcqp::generators::{brute_force, BruteMode, BruteResult, Family};
use qcqp::improve::{AdmmOptions, CcpOptions, CdOptions, ImproveMethod, Rounder};
use qcqp::QcqpProblem;
use serde::{Deserialize, Serialize};

/// Parses a comma-separated improve list such as `sign,cd`.
pub fn parse_improve_list(s: &str) -> Result<Vec<ImproveMethod>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            Ok(match t {
                "cd" => ImproveMethod::CoordinateDescent(CdOptions::default()),
                "admm" => ImproveMethod::Admm(AdmmOptions::default()),
                "ccp" => ImproveMethod::Ccp(CcpOptions::default()),
                "convex" => ImproveMethod::Convex(qcqp::improve::convex_defaults()),
                "sign" => ImproveMethod::Round { rounder: Rounder::Sign },
                "balanced-sign" => ImproveMethod::Round {
                    rounder: Rounder::BalancedSign,
                },
                "scale" => ImproveMethod::Round {
                    rounder: Rounder::ScaleToCover,
                },
                "clique" => ImproveMethod::Round {
                    rounder: Rounder::GreedyClique,
                },
                other => {
                    return Err(format!(
                        "unknown improve method {other:?}; expected cd, admm, ccp, convex, sign, balanced-sign, scale or clique"
                    ))
                }
            })
        })
        .collect()
}

/// Parses a family name as used on the command line, e.g. `boolean-ls`.
pub fn parse_family(s: &str) -> Result<Family, String> {
    let alias = match s {
        "maxcut" => "max-cut",
        "maxbisection" => "max-bisection",
        "maxclique" => "max-clique",
        "3sat" => "three-sat",
        other => other,
    };
    serde_json::from_value(serde_json::Value::String(alias.into())).map_err(|_| {
        format!("unknown family {s:?}; expected boolean-ls, partitioning, max-cut, max-bisection, max-clique, 3sat or beamforming")
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BruteReport {
    pub x: Vec<f64>,
    pub objective: f64,
    pub violation: f64,
    pub points: u64,
}

impl From<BruteResult> for BruteReport {
    fn from(r: BruteResult) -> Self {
        BruteReport {
            x: r.x,
            objective: r.assessment.objective,
            violation: r.assessment.violation,
            points: r.points,
        }
    }
}

pub fn brute(problem: &QcqpProblem, grid: Option<(f64, f64, usize)>) -> Result<BruteReport, String> {
    let mode = match grid {
        Some((lo, hi, steps)) => BruteMode::Grid { lo, hi, steps },
        None => BruteMode::Boolean,
    };
    brute_force(problem, mode).map(Into::into).map_err(|e| e.to_string())
}
