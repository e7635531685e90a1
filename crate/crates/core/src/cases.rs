//! Bundled test systems.

use crate::netmodel::SystemCase;
use crate::Result;

const IEEE9: &str = include_str!("../cases/ieee9.json");
const IEEE39: &str = include_str!("../cases/ieee39.json");

/// Names accepted by [`by_name`].
pub const NAMES: [&str; 2] = ["ieee9", "ieee39"];

/// WSCC 3-machine, 9-bus system.
pub fn ieee9() -> SystemCase {
    SystemCase::from_json(IEEE9).expect("bundled case parses")
}

/// New England 10-machine, 39-bus system (classical approximation).
pub fn ieee39() -> SystemCase {
    SystemCase::from_json(IEEE39).expect("bundled case parses")
}

pub fn by_name(name: &str) -> Option<SystemCase> {
    match name {
        "ieee9" => Some(ieee9()),
        "ieee39" => Some(ieee39()),
        _ => None,
    }
}

/// Raw JSON of a bundled case.
pub fn source(name: &str) -> Option<&'static str> {
    match name {
        "ieee9" => Some(IEEE9),
        "ieee39" => Some(IEEE39),
        _ => None,
    }
}

/// Loads a bundled case by name or a case file by path.
pub fn resolve(name_or_path: &str) -> Result<SystemCase> {
    match by_name(name_or_path) {
        Some(c) => Ok(c),
        None => crate::netmodel::load_case(name_or_path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{solve_power_flow, PowerFlowOptions};

    #[test]
    fn bundled_cases_solve() {
        let c9 = ieee9();
        assert_eq!((c9.buses.len(), c9.branches.len(), c9.n_gen()), (9, 9, 3));
        let pf = solve_power_flow(&c9, PowerFlowOptions::default()).unwrap();
        // slack output of the classic WSCC dispatch
        let slack = c9.slack_index();
        assert!((pf.p[slack] - 0.716).abs() < 2e-3, "{}", pf.p[slack]);
        let c39 = ieee39();
        assert_eq!((c39.buses.len(), c39.branches.len(), c39.n_gen()), (39, 46, 10));
        let pf = solve_power_flow(&c39, PowerFlowOptions::default()).unwrap();
        assert!(pf.vm.iter().all(|&v| v > 0.9 && v < 1.1));
    }

    #[test]
    fn resolve_falls_back_to_path() {
        assert!(resolve("ieee9").is_ok());
        assert!(matches!(resolve("/no/such/case.json"), Err(crate::Error::Io { .. })));
    }
}
