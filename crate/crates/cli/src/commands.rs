use std::fmt;

use serde::Serialize;
use tas_core::dynsim::{build_linear_model, gain_sweep, DEFAULT_DT};
use tas_core::io;
use tas_core::linalg::inf_norm;
use tas_core::modal::{eig_decompose, eigen_pairs, modal_sensitivity};
use tas_core::netmodel::{solve_power_flow, PowerFlowOptions, SystemCase};
use tas_core::tas::{
    modal_energy, total_action, total_action_fd, total_action_lyapunov, total_action_sensitivity,
    Disturbance, Study,
};
use tas_core::{cases, Complex64, Error};

use crate::args::{self, Command, Common, Format};

pub enum Failure {
    Usage(String),
    Core(Error),
    Validation(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Validation(_) => 3,
            Failure::Core(e) => match e {
                Error::Io { .. }
                | Error::Parse { .. }
                | Error::Semantic(_)
                | Error::InvalidInput(_)
                | Error::UnknownBus(_)
                | Error::Unreachable(_)
                | Error::DegenerateDisturbance => 1,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Validation(m) => f.write_str(m),
            Failure::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type Outcome = Result<(), Failure>;

pub fn run(command: Command) -> Outcome {
    match command {
        Command::Pf(a) => pf(a),
        Command::Eigs(a) => eigs(a),
        Command::Sweep(a) => sweep(a),
        Command::Tas(a) => tas(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => validate(a),
    }
}

fn load(common: &Common) -> Result<SystemCase, Failure> {
    let name = common
        .case_name()
        .ok_or_else(|| Failure::Usage("a case file or bundled case name is required".into()))?;
    Ok(cases::resolve(name)?)
}

/// Writes `files` into the output directory, or prints them to stdout.
struct Sink<'a> {
    common: &'a Common,
    printed: usize,
}

impl<'a> Sink<'a> {
    fn new(common: &'a Common) -> Result<Self, Failure> {
        if let Some(dir) = &common.out {
            std::fs::create_dir_all(dir).map_err(|source| {
                Failure::Core(Error::Io {
                    path: dir.clone(),
                    source,
                })
            })?;
        }
        Ok(Self { common, printed: 0 })
    }

    fn emit(&mut self, stem: &str, csv: impl FnOnce() -> String, json: impl FnOnce() -> String) -> Outcome {
        let (ext, body) = match self.common.format {
            Format::Csv => ("csv", csv()),
            Format::Json => ("json", json()),
        };
        self.put(&format!("{stem}.{ext}"), &body)
    }

    fn put(&mut self, name: &str, body: &str) -> Outcome {
        match &self.common.out {
            Some(dir) => io::write_file(dir.join(name), body)?,
            None => {
                if self.printed > 0 {
                    println!();
                }
                println!("# {name}");
                print!("{body}");
                self.printed += 1;
            }
        }
        Ok(())
    }

    fn metadata<T: Serialize>(&mut self, meta: &T) -> Outcome {
        if let Some(dir) = &self.common.out {
            io::write_file(dir.join("run.json"), &io::to_json(meta))?;
        }
        Ok(())
    }

    fn has_dir(&self) -> bool {
        self.common.out.is_some()
    }
}

#[derive(Serialize)]
struct Meta<'a, T: Serialize> {
    command: &'a str,
    case: &'a str,
    format: Format,
    version: &'a str,
    parameters: T,
}

fn meta<'a, T: Serialize>(command: &'a str, common: &'a Common, parameters: T) -> Meta<'a, T> {
    Meta {
        command,
        case: common.case_name().unwrap_or_default(),
        format: common.format,
        version: env!("CARGO_PKG_VERSION"),
        parameters,
    }
}

fn parse_gain(spec: &str) -> Result<(usize, f64), Failure> {
    let bad = || Failure::Usage(format!("expected BUS=THETA, got '{spec}'"));
    let (bus, theta) = spec.split_once('=').ok_or_else(bad)?;
    let bus = bus.trim().parse().map_err(|_| bad())?;
    let theta: f64 = theta.trim().parse().map_err(|_| bad())?;
    if !(theta >= 0.0) || !theta.is_finite() {
        return Err(Failure::Usage(format!("gain must be finite and non-negative in '{spec}'")));
    }
    Ok((bus, theta))
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum DisturbanceMeta {
    SpeedDeviation { domega: Vec<f64> },
    Fault { bus: usize, duration: f64, dt: f64 },
}

fn parse_disturbance(
    d: &args::Disturbance,
    dt: f64,
    required: bool,
) -> Result<Option<(Disturbance, DisturbanceMeta)>, Failure> {
    match (&d.domega, &d.fault) {
        (Some(w), None) => Ok(Some((
            Disturbance::SpeedDeviation(w.clone()),
            DisturbanceMeta::SpeedDeviation { domega: w.clone() },
        ))),
        (None, Some(spec)) => {
            let bad = || Failure::Usage(format!("expected --fault BUS:SECONDS, got '{spec}'"));
            let (bus, secs) = spec.split_once(':').ok_or_else(bad)?;
            let bus: usize = bus.trim().parse().map_err(|_| bad())?;
            let duration: f64 = secs.trim().parse().map_err(|_| bad())?;
            if !(duration >= 0.0) || !duration.is_finite() {
                return Err(bad());
            }
            if !(dt > 0.0) {
                return Err(Failure::Usage("--dt must be positive".into()));
            }
            Ok(Some((
                Disturbance::Fault { bus, duration, dt },
                DisturbanceMeta::Fault { bus, duration, dt },
            )))
        }
        (None, None) if !required => Ok(None),
        (None, None) => Err(Failure::Usage("one of --domega or --fault is required".into())),
        (Some(_), Some(_)) => Err(Failure::Usage("--domega and --fault are exclusive".into())),
    }
}

fn candidates_or_gens(case: &SystemCase, candidates: &Option<Vec<usize>>) -> Result<Vec<usize>, Failure> {
    let list = candidates.clone().unwrap_or_else(|| case.generator_buses());
    if list.is_empty() {
        return Err(Failure::Usage("candidate list is empty".into()));
    }
    for &b in &list {
        case.bus_index(b)?;
    }
    Ok(list)
}

fn pf(a: args::PfArgs) -> Outcome {
    let case = load(&a.common)?;
    let sol = solve_power_flow(&case, PowerFlowOptions::default())?;
    let mut sink = Sink::new(&a.common)?;
    sink.emit("power_flow", || io::power_flow_csv(&case, &sol), || {
        #[derive(Serialize)]
        struct Row {
            bus: usize,
            vm: f64,
            va_deg: f64,
            p: f64,
            q: f64,
        }
        let rows: Vec<Row> = case
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| Row {
                bus: b.id,
                vm: sol.vm[i],
                va_deg: sol.va[i].to_degrees(),
                p: sol.p[i],
                q: sol.q[i],
            })
            .collect();
        io::to_json(&rows)
    })?;
    sink.metadata(&meta("pf", &a.common, PowerFlowOptions::default()))
}

#[derive(Serialize)]
struct EigRow {
    idx: usize,
    re: f64,
    im: f64,
    freq_rad_s: f64,
    damping_ratio: f64,
}

fn eig_rows(values: &[Complex64]) -> Vec<EigRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, l)| EigRow {
            idx: i + 1,
            re: l.re,
            im: l.im,
            freq_rad_s: l.im.abs(),
            damping_ratio: io::damping_ratio(*l),
        })
        .collect()
}

fn eigs(a: args::EigsArgs) -> Outcome {
    let case = load(&a.common)?;
    let study = Study::new(case)?;
    let gain = a.gain.as_deref().map(parse_gain).transpose()?;
    let values = match gain {
        Some((bus, theta)) => {
            let (eq, act) = study.actuator_at(bus, 0.0)?;
            gain_sweep(&eq, &act, &[theta])?.eigenvalues.remove(0)
        }
        None => eigen_pairs(&study.lin.a0)?.values,
    };
    let mut sink = Sink::new(&a.common)?;
    sink.emit("eigenvalues", || io::eigen_csv(&values), || io::to_json(&eig_rows(&values)))?;
    #[derive(Serialize)]
    struct P {
        actuator_bus: Option<usize>,
        gain: Option<f64>,
    }
    sink.metadata(&meta(
        "eigs",
        &a.common,
        P {
            actuator_bus: gain.map(|g| g.0),
            gain: gain.map(|g| g.1),
        },
    ))
}

fn gain_grid(from: f64, to: f64, step: f64) -> Result<Vec<f64>, Failure> {
    if !(from.is_finite() && to.is_finite() && step.is_finite()) || !(step > 0.0) || from > to {
        return Err(Failure::Usage(format!("empty gain grid {from}:{step}:{to}")));
    }
    if from < 0.0 {
        return Err(Failure::Usage("gains must be non-negative".into()));
    }
    let n = ((to - from) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| from + k as f64 * step).collect())
}

fn sweep(a: args::SweepArgs) -> Outcome {
    let gains = gain_grid(a.from, a.to, a.step)?;
    let case = load(&a.common)?;
    let buses = candidates_or_gens(&case, &a.candidates)?;
    let study = Study::new(case)?;
    let mut sink = Sink::new(&a.common)?;
    for &bus in &buses {
        let (eq, act) = study.actuator_at(bus, 0.0)?;
        let sweep = gain_sweep(&eq, &act, &gains)?;
        for (g, m) in &sweep.ambiguous {
            log::warn!("bus {bus}: ambiguous tracking of mode {} at gain {}", m + 1, gains[*g]);
        }
        sink.emit(&format!("loci_bus{bus}"), || io::loci_csv(&sweep), || io::to_json(&sweep))?;
    }
    #[derive(Serialize)]
    struct P<'a> {
        candidates: &'a [usize],
        from: f64,
        to: f64,
        step: f64,
    }
    sink.metadata(&meta(
        "sweep",
        &a.common,
        P {
            candidates: &buses,
            from: a.from,
            to: a.to,
            step: a.step,
        },
    ))
}

fn tas(a: args::TasArgs) -> Outcome {
    let (dist, dist_meta) = parse_disturbance(&a.disturbance, a.dt, true)?.expect("required");
    let case = load(&a.common)?;
    let buses = candidates_or_gens(&case, &a.candidates)?;
    let study = Study::new(case)?;
    let ranking = study.rank(&buses, &dist)?;
    let mut sink = Sink::new(&a.common)?;
    if sink.has_dir() {
        sink.emit("ranking", || io::ranking_csv(&ranking), || io::ranking_json(&ranking))?;
        if a.common.format == Format::Csv {
            sink.put("ranking_beta_only.csv", &io::ranking_beta_only_csv(&ranking))?;
        }
    } else if a.common.format == Format::Json {
        print!("{}", io::ranking_json(&ranking));
    } else {
        // full and β-only orderings side by side
        println!("rank,bus,total,bus_beta_only,beta_term");
        for (k, (e, b)) in ranking.entries.iter().zip(ranking.beta_only_entries()).enumerate() {
            println!(
                "{},{},{},{},{}",
                k + 1,
                e.bus,
                io::num(e.breakdown.total),
                b.bus,
                io::num(b.breakdown.beta_term)
            );
        }
    }
    #[derive(Serialize)]
    struct P<'a> {
        candidates: &'a [usize],
        disturbance: DisturbanceMeta,
        evaluation_gain: f64,
    }
    sink.metadata(&meta(
        "tas",
        &a.common,
        P {
            candidates: &buses,
            disturbance: dist_meta,
            evaluation_gain: 0.0,
        },
    ))
}

fn simulate(a: args::SimulateArgs) -> Outcome {
    if !(a.t_end > 0.0) || !(a.dt > 0.0) {
        return Err(Failure::Usage("--T and --dt must be positive".into()));
    }
    let parsed = parse_disturbance(&a.disturbance, a.dt, false)?;
    let runs = a.gain.iter().map(|g| parse_gain(g)).collect::<Result<Vec<_>, _>>()?;
    let case = load(&a.common)?;
    let study = Study::new(case)?;
    let p = study.eq.n_gen();
    let (dist, dist_meta) = match parsed {
        Some((d, m)) => (d, Some(m)),
        None => (Disturbance::State(vec![0.0; 2 * p]), None),
    };
    let mut sink = Sink::new(&a.common)?;
    let mut summary = String::from("run,bus,gain,integrated_Ek,final_Ek\n");
    let mut all = vec![(None, "baseline".to_string())];
    all.extend(runs.iter().map(|&(b, g)| (Some((b, g)), format!("bus{b}_gain{g}"))));
    for (act, label) in &all {
        let traj = study.simulate(*act, &dist, a.t_end, a.dt)?;
        summary.push_str(&format!(
            "{label},{},{},{},{}\n",
            act.map_or(String::new(), |x| x.0.to_string()),
            io::num(act.map_or(0.0, |x| x.1)),
            io::num(traj.integrated_energy()),
            io::num(traj.kinetic_energy.last().copied().unwrap_or(0.0))
        ));
        if sink.has_dir() {
            sink.emit(&format!("trajectory_{label}"), || io::trajectory_csv(&traj), || io::to_json(&traj))?;
        }
    }
    sink.put("energy_summary.csv", &summary)?;
    #[derive(Serialize)]
    struct P {
        disturbance: Option<DisturbanceMeta>,
        runs: Vec<(usize, f64)>,
        t_end: f64,
        dt: f64,
        integrator: &'static str,
        actuator_activation: &'static str,
    }
    sink.metadata(&meta(
        "simulate",
        &a.common,
        P {
            disturbance: dist_meta,
            runs,
            t_end: a.t_end,
            dt: a.dt,
            integrator: "rk4",
            actuator_activation: "at fault clearing (t = 0 of the post-fault run)",
        },
    ))
}

#[derive(Serialize)]
struct Check {
    check: String,
    residual: f64,
    tolerance: f64,
    pass: bool,
}

impl Check {
    fn new(check: impl Into<String>, residual: f64, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

fn validate(a: args::ValidateArgs) -> Outcome {
    let parsed = parse_disturbance(&a.disturbance, a.dt, false)?;
    let case = load(&a.common)?;
    let buses = candidates_or_gens(&case, &a.candidates)?;
    let study = Study::new(case)?;
    let p = study.eq.n_gen();
    let dist = match parsed {
        Some((d, _)) => d,
        None => {
            let mut w = vec![0.0; p];
            w[0] = 0.01;
            w[p - 1] -= 0.01;
            Disturbance::SpeedDeviation(w)
        }
    };
    let dx0 = study.initial_state(&dist)?;
    let mut checks = Vec::new();

    let energy = modal_energy(&study.basis, &study.lin.j, &dx0, None)?;
    let s_modal = total_action(&energy, &study.basis.eigenvalues)?;
    let s_lyap = total_action_lyapunov(&study.lin.a0, &study.lin.j, &dx0)?;
    checks.push(Check::new(
        "total_action_vs_lyapunov",
        (s_modal - s_lyap).abs() / (1.0 + s_modal.abs()),
        1e-8,
    ));

    for &bus in &buses {
        let (eq, act) = study.actuator_at(bus, 0.0)?;
        let lin = build_linear_model(&eq, Some(&act))?;
        let affinity = inf_norm(&(lin.a(10.0) - &lin.a0 - &lin.b * 10.0)) / inf_norm(&lin.a0);
        checks.push(Check::new(format!("affinity_bus{bus}"), affinity, 1e-9));

        let basis = eig_decompose(&lin.a0)?;
        let b = &lin.b * (1.0 + a.perturb_b);
        let sens = modal_sensitivity(&lin.a0, &basis, &b)?;
        let breakdown = total_action_sensitivity(&lin, &basis, &sens, &dx0)?;
        let fd = total_action_fd(&lin, 0.0, &dx0, breakdown.fd_step(&basis))?;
        checks.push(Check::new(format!("tas_fd_bus{bus}"), relative(breakdown.total, fd), 1e-4));
        checks.push(Check::new(
            format!("tas_identity_bus{bus}"),
            relative(breakdown.total, breakdown.direct),
            1e-10,
        ));
        checks.push(Check::new(
            format!("tas_reality_bus{bus}"),
            breakdown.imag_residue.abs() / (1.0 + breakdown.direct.abs()),
            1e-9,
        ));
    }

    let mut sink = Sink::new(&a.common)?;
    sink.emit(
        "validation",
        || {
            let mut s = String::from("check,residual,tolerance,pass\n");
            for c in &checks {
                s.push_str(&format!(
                    "{},{},{},{}\n",
                    c.check,
                    io::num(c.residual),
                    io::num(c.tolerance),
                    c.pass
                ));
            }
            s
        },
        || io::to_json(&checks),
    )?;
    #[derive(Serialize)]
    struct P<'a> {
        candidates: &'a [usize],
        dx0: &'a [f64],
        perturb_b: f64,
        fault_dt: f64,
    }
    sink.metadata(&meta(
        "validate",
        &a.common,
        P {
            candidates: &buses,
            dx0: &dx0,
            perturb_b: a.perturb_b,
            fault_dt: if a.dt > 0.0 { a.dt } else { DEFAULT_DT },
        },
    ))?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.check.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(format!("failed checks: {}", failed.join(", "))))
    }
}
