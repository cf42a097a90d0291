use crate::bits::{FaultState, Syndrome};
use crate::error::{Error, Result};
use crate::graph::DiagnosticGraph;

/// Most reliable first.
pub const DEFAULT_RELIABILITY_RANKING: [&str; 4] = [
    "radar_detector",
    "sensor_fusion",
    "lidar_detector",
    "camera_detector",
];

/// Module id without a `t<k>/` slice prefix.
pub fn base_module_id(id: &str) -> &str {
    match id.split_once('/') {
        Some((head, rest))
            if head.len() > 1 && head.starts_with('t') && head[1..].bytes().all(|b| b.is_ascii_digit()) =>
        {
            rest
        }
        _ => id,
    }
}

/// Sets module failure modes active when any output they produce has an
/// active failure mode.
fn lift_modules(graph: &DiagnosticGraph, f: &mut FaultState) {
    for m in 0..graph.system().modules.len() {
        if graph.modes_of_module_outputs(m).iter().any(|&i| f.get(i)) {
            for i in graph.modes_of_module(m) {
                f.set(i, true);
            }
        }
    }
}

/// Every failure mode in the scope of a failed test is active.
pub fn baseline_all_active(graph: &DiagnosticGraph, syndrome: &Syndrome) -> Result<FaultState> {
    syndrome.check_len(graph.n_tests())?;
    let mut f = FaultState::zeros(graph.n_modes());
    for j in syndrome.failed() {
        for &i in &graph.tests()[j].scope {
            f.set(i, true);
        }
    }
    lift_modules(graph, &mut f);
    Ok(f)
}

/// For each failed test, blames only the scope modes of the least reliable
/// module involved. `ranking` lists module ids, most reliable first; slice
/// prefixes of temporal graphs are ignored when matching.
pub fn baseline_reliability(graph: &DiagnosticGraph, syndrome: &Syndrome, ranking: &[&str]) -> Result<FaultState> {
    syndrome.check_len(graph.n_tests())?;
    let rank: Vec<usize> = graph
        .system()
        .modules
        .iter()
        .map(|m| {
            ranking
                .iter()
                .position(|r| *r == m.id || *r == base_module_id(&m.id))
                .ok_or_else(|| Error::IncompleteRanking(m.id.clone()))
        })
        .collect::<Result<_>>()?;
    let mut f = FaultState::zeros(graph.n_modes());
    for j in syndrome.failed() {
        let scope = &graph.tests()[j].scope;
        let Some(worst) = scope
            .iter()
            .map(|&i| graph.responsible_module(i))
            .max_by_key(|&m| (rank[m], std::cmp::Reverse(m)))
        else {
            continue;
        };
        for &i in scope {
            if graph.responsible_module(i) == worst {
                f.set(i, true);
            }
        }
        for i in graph.modes_of_module(worst) {
            f.set(i, true);
        }
    }
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{apollo_obstacle, TestSemantics};
    use proptest::prelude::*;

    fn apollo() -> DiagnosticGraph {
        apollo_obstacle(&TestSemantics::WeakerOr).unwrap()
    }

    fn fail_only(g: &DiagnosticGraph, test: &str) -> Syndrome {
        let mut bits = vec![false; g.n_tests()];
        bits[g.test_index(test).unwrap()] = true;
        Syndrome::from_bits(&bits)
    }

    fn ids(g: &DiagnosticGraph, f: &FaultState) -> Vec<String> {
        f.active().map(|i| g.failure_modes()[i].id.clone()).collect()
    }

    #[test]
    fn all_active_examples() {
        let g = apollo();
        assert_eq!(baseline_all_active(&g, &Syndrome::all_pass(18)).unwrap(), FaultState::zeros(16));
        let f = baseline_all_active(&g, &fail_only(&g, "lidar_camera.misdetection")).unwrap();
        assert_eq!(
            ids(&g, &f),
            [
                "lidar_detector.ood",
                "camera_detector.ood",
                "lidar_obstacles.misdetection",
                "camera_obstacles.misdetection"
            ]
        );
        let all = baseline_all_active(&g, &Syndrome::from_bits(&[true; 18])).unwrap();
        assert!((4..16).all(|i| all.get(i)));
    }

    #[test]
    fn reliability_examples() {
        let g = apollo();
        let r = DEFAULT_RELIABILITY_RANKING;
        let f = baseline_reliability(&g, &fail_only(&g, "lidar_camera.misdetection"), &r).unwrap();
        assert_eq!(ids(&g, &f), ["camera_detector.ood", "camera_obstacles.misdetection"]);
        assert_eq!(baseline_reliability(&g, &Syndrome::all_pass(18), &r).unwrap(), FaultState::zeros(16));
        let f = baseline_reliability(&g, &fail_only(&g, "radar_fused.misposition"), &r).unwrap();
        assert_eq!(ids(&g, &f), ["sensor_fusion.misassociation", "fused_obstacles.misposition"]);
        assert!(matches!(
            baseline_reliability(&g, &Syndrome::all_pass(18), &r[..3]),
            Err(Error::IncompleteRanking(_))
        ));
    }

    #[test]
    fn slice_prefix_is_ignored() {
        assert_eq!(base_module_id("t1/radar_detector"), "radar_detector");
        assert_eq!(base_module_id("radar_detector"), "radar_detector");
        assert_eq!(base_module_id("top/x"), "top/x");
    }

    proptest! {
        #[test]
        fn all_active_dominates_reliability(mask in 0u64..(1 << 18)) {
            let g = apollo();
            let s = Syndrome::from_mask(18, mask);
            let all = baseline_all_active(&g, &s).unwrap();
            let rel = baseline_reliability(&g, &s, &DEFAULT_RELIABILITY_RANKING).unwrap();
            prop_assert!(rel.active().all(|i| all.get(i)));
        }
    }
}
