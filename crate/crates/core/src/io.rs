//! CSV and JSON report writers. Numbers use the shortest round-trip
//! representation so identical results give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::dynsim::{GainSweep, Trajectory};
use crate::netmodel::{BusType, PowerFlowSolution, SystemCase};
use crate::tas::Ranking;
use crate::{Error, Result};

/// Shortest round-trip decimal, switching to exponent form for very small
/// or very large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// `t,delta_1..delta_p,domega_1..domega_p,Ek`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let p = traj.n_gen;
    let mut out = String::from("t");
    for i in 1..=p {
        write!(out, ",delta_{i}").unwrap();
    }
    for i in 1..=p {
        write!(out, ",domega_{i}").unwrap();
    }
    out.push_str(",Ek\n");
    for ((t, x), ek) in traj.times.iter().zip(&traj.states).zip(&traj.kinetic_energy) {
        write!(out, "{}", num(*t)).unwrap();
        for v in x {
            write!(out, ",{}", num(*v)).unwrap();
        }
        writeln!(out, ",{}", num(*ek)).unwrap();
    }
    out
}

/// `gain,re_1,im_1,...` with one row per gain.
pub fn loci_csv(sweep: &GainSweep) -> String {
    let n = sweep.eigenvalues.first().map_or(0, Vec::len);
    let mut out = String::from("gain");
    for i in 1..=n {
        write!(out, ",re_{i},im_{i}").unwrap();
    }
    out.push('\n');
    for (g, vals) in sweep.gains.iter().zip(&sweep.eigenvalues) {
        write!(out, "{}", num(*g)).unwrap();
        for v in vals {
            write!(out, ",{},{}", num(v.re), num(v.im)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Damping ratio `−Re λ/|λ|` (0 for a zero eigenvalue).
pub fn damping_ratio(l: Complex64) -> f64 {
    let m = l.norm();
    if m == 0.0 {
        0.0
    } else {
        -l.re / m
    }
}

/// `idx,re,im,freq_rad_s,damping_ratio`.
pub fn eigen_csv(values: &[Complex64]) -> String {
    let mut out = String::from("idx,re,im,freq_rad_s,damping_ratio\n");
    for (i, l) in values.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{}",
            i + 1,
            num(l.re),
            num(l.im),
            num(l.im.abs()),
            num(damping_ratio(*l))
        )
        .unwrap();
    }
    out
}

/// `rank,bus,feedback_gen,alpha,beta_term,total`; generators are 1-based.
pub fn ranking_csv(r: &Ranking) -> String {
    let mut out = String::from("rank,bus,feedback_gen,alpha,beta_term,total\n");
    for (k, e) in r.entries.iter().enumerate() {
        let b = &e.breakdown;
        writeln!(
            out,
            "{},{},{},{},{},{}",
            k + 1,
            e.bus,
            e.feedback_gen + 1,
            num(b.alpha),
            num(b.beta_term),
            num(b.total)
        )
        .unwrap();
    }
    out
}

/// β-only order: `rank,bus,beta_term`.
pub fn ranking_beta_only_csv(r: &Ranking) -> String {
    let mut out = String::from("rank,bus,beta_term\n");
    for (k, e) in r.beta_only_entries().into_iter().enumerate() {
        writeln!(out, "{},{},{}", k + 1, e.bus, num(e.breakdown.beta_term)).unwrap();
    }
    out
}

#[derive(Serialize)]
struct JsonEntry<'a> {
    rank: usize,
    bus: usize,
    feedback_gen: usize,
    alpha: f64,
    beta_term: f64,
    total: f64,
    modes: &'a [usize],
    beta: &'a [Complex64],
    dlambda: &'a [Complex64],
}

#[derive(Serialize)]
struct JsonRanking<'a> {
    total_action: f64,
    dx0: &'a [f64],
    eigenvalues: &'a [Complex64],
    candidates: Vec<JsonEntry<'a>>,
    beta_only: &'a [usize],
}

/// Ranking with per-mode `β` and `∂λ/∂θ` (complex numbers as `[re, im]`).
pub fn ranking_json(r: &Ranking) -> String {
    let doc = JsonRanking {
        total_action: r.total_action,
        dx0: &r.dx0,
        eigenvalues: &r.eigenvalues,
        candidates: r
            .entries
            .iter()
            .enumerate()
            .map(|(k, e)| JsonEntry {
                rank: k + 1,
                bus: e.bus,
                feedback_gen: e.feedback_gen + 1,
                alpha: e.breakdown.alpha,
                beta_term: e.breakdown.beta_term,
                total: e.breakdown.total,
                modes: &e.breakdown.modes,
                beta: &e.breakdown.beta,
                dlambda: &e.breakdown.dlambda,
            })
            .collect(),
        beta_only: &r.beta_only,
    };
    to_json(&doc)
}

/// `bus,type,vm,va_deg,p,q` with net injections in pu.
pub fn power_flow_csv(case: &SystemCase, pf: &PowerFlowSolution) -> String {
    let mut out = String::from("bus,type,vm,va_deg,p,q\n");
    for (i, b) in case.buses.iter().enumerate() {
        let kind = match b.kind {
            BusType::Slack => "slack",
            BusType::Pv => "pv",
            BusType::Pq => "pq",
        };
        writeln!(
            out,
            "{},{},{},{},{},{}",
            b.id,
            kind,
            num(pf.vm[i]),
            num(pf.va[i].to_degrees()),
            num(pf.p[i]),
            num(pf.q[i])
        )
        .unwrap();
    }
    out
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

pub fn write_file(path: impl AsRef<Path>, contents: &str) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
