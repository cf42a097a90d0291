//! Published example topologies.

use std::str::FromStr;

use super::doc::{
    AprioriDoc, FailureModeDoc, GraphDoc, ModuleDoc, OutputDoc, PredicateDoc, SystemDoc,
    SystemEdgeDoc, TestDoc,
};
use super::temporal::{stack_temporal, SliceRef, TemporalDiagnosticGraph, TemporalTestDef, TemporalTransitionDef};
use super::{build_graph, DiagnosticGraph, FailureKind, TestSemantics, GRAPH_DOC_VERSION};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinGraph {
    Fig2Example,
    LidarEgomotionExample,
    ApolloObstacle,
}

impl BuiltinGraph {
    pub const ALL: [BuiltinGraph; 3] = [
        BuiltinGraph::Fig2Example,
        BuiltinGraph::LidarEgomotionExample,
        BuiltinGraph::ApolloObstacle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BuiltinGraph::Fig2Example => "fig2-example",
            BuiltinGraph::LidarEgomotionExample => "lidar-egomotion-example",
            BuiltinGraph::ApolloObstacle => "apollo-obstacle",
        }
    }
}

impl FromStr for BuiltinGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BuiltinGraph::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::UnknownBuiltin(s.to_string()))
    }
}

pub fn builtin_graph(name: &str) -> Result<DiagnosticGraph> {
    match name.parse::<BuiltinGraph>()? {
        BuiltinGraph::Fig2Example => fig2_example(&Fig2Options::default()),
        BuiltinGraph::LidarEgomotionExample => lidar_egomotion_example(),
        BuiltinGraph::ApolloObstacle => apollo_obstacle(&TestSemantics::WeakerOr),
    }
}

struct DocBuilder {
    doc: GraphDoc,
}

impl DocBuilder {
    fn new() -> Self {
        DocBuilder {
            doc: GraphDoc {
                version: GRAPH_DOC_VERSION,
                system: SystemDoc::default(),
                failure_modes: Vec::new(),
                tests: Vec::new(),
                apriori: Vec::new(),
            },
        }
    }

    fn module(&mut self, id: &str, name: &str) -> &mut Self {
        self.doc.system.modules.push(ModuleDoc {
            id: id.into(),
            name: name.into(),
        });
        self
    }

    fn output(&mut self, id: &str, name: &str, producer: &str) -> &mut Self {
        self.doc.system.outputs.push(OutputDoc {
            id: id.into(),
            name: name.into(),
            producer: producer.into(),
        });
        self.edge(producer, id)
    }

    fn edge(&mut self, from: &str, to: &str) -> &mut Self {
        self.doc.system.edges.push(SystemEdgeDoc {
            from: from.into(),
            to: to.into(),
        });
        self
    }

    fn mode(&mut self, id: &str, host: &str, kind: FailureKind) -> &mut Self {
        self.doc.failure_modes.push(FailureModeDoc {
            id: id.into(),
            host: host.into(),
            kind,
        });
        self
    }

    fn test(&mut self, id: &str, scope: &[&str], semantics: &TestSemantics) -> &mut Self {
        let (p_detect, p_false_alarm) = match semantics {
            TestSemantics::NoisyOr(p) => {
                let d = p.p_detect.first().copied().unwrap_or(1.0);
                let a = p.p_false_alarm.first().copied().unwrap_or(0.0);
                (Some(vec![d; scope.len()]), Some(vec![a; scope.len()]))
            }
            _ => (None, None),
        };
        self.doc.tests.push(TestDoc {
            id: id.into(),
            scope: scope.iter().map(|s| s.to_string()).collect(),
            semantics: semantics.tag().into(),
            p_detect,
            p_false_alarm,
            temporal_span: 1,
        });
        self
    }

    fn relation(&mut self, id: &str, predicate: PredicateDoc) -> &mut Self {
        self.doc.apriori.push(AprioriDoc {
            id: id.into(),
            predicate,
        });
        self
    }

    fn build(&self) -> Result<DiagnosticGraph> {
        build_graph(&self.doc)
    }
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// Knobs of the three-module LiDAR/camera/fusion example.
#[derive(Debug, Clone)]
pub struct Fig2Options {
    pub test_semantics: TestSemantics,
    /// Couple each output to its producing module in both directions.
    pub iff_coupling: bool,
    /// Fusion-input relation over (fusion module, LiDAR obstacles, camera
    /// obstacles); `None` removes it.
    pub fusion_relation: Option<FusionRelation>,
}

/// How the relation between the fusion module and its input outputs is
/// encoded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FusionRelation {
    /// Failing inputs force the fusion module to fail.
    InputsImplyFusion,
    /// At most one of the three is active.
    MutualExclusion,
}

impl Default for Fig2Options {
    fn default() -> Self {
        Fig2Options {
            test_semantics: TestSemantics::DeterministicOr,
            iff_coupling: false,
            fusion_relation: Some(FusionRelation::InputsImplyFusion),
        }
    }
}

/// Modes `f1..f3` are the LiDAR detector, camera detector and fusion
/// modules; `f4..f6` their obstacle outputs. Tests compare LiDAR vs camera
/// obstacles (`f4`,`f5`) and camera vs fused obstacles (`f5`,`f6`).
/// Relations `r1..r3` couple modules to outputs, `r4` ties fused obstacles
/// to the fusion module or its inputs, `r5` is the fusion-input relation.
pub fn fig2_example(opts: &Fig2Options) -> Result<DiagnosticGraph> {
    let mut b = DocBuilder::new();
    b.module("lidar_detector", "LiDAR-based obstacle detection")
        .module("camera_detector", "Camera-based obstacle detection")
        .module("sensor_fusion", "Sensor fusion")
        .output("lidar_obstacles", "LiDAR obstacles", "lidar_detector")
        .output("camera_obstacles", "Camera obstacles", "camera_detector")
        .output("fused_obstacles", "Fused obstacles", "sensor_fusion")
        .edge("lidar_obstacles", "sensor_fusion")
        .edge("camera_obstacles", "sensor_fusion")
        .mode("f1", "lidar_detector", FailureKind::OutOfDistribution)
        .mode("f2", "camera_detector", FailureKind::OutOfDistribution)
        .mode("f3", "sensor_fusion", FailureKind::Misassociation)
        .mode("f4", "lidar_obstacles", FailureKind::Misdetection)
        .mode("f5", "camera_obstacles", FailureKind::Misdetection)
        .mode("f6", "fused_obstacles", FailureKind::Misdetection)
        .test("t1", &["f4", "f5"], &opts.test_semantics)
        .test("t2", &["f5", "f6"], &opts.test_semantics);
    for (id, m, o) in [("r1", "f1", "f4"), ("r2", "f2", "f5"), ("r3", "f3", "f6")] {
        b.relation(
            id,
            PredicateDoc::ModuleOutputImplication {
                module: strings(&[m]),
                outputs: strings(&[o]),
                iff: opts.iff_coupling,
            },
        );
    }
    b.relation(
        "r4",
        PredicateDoc::Implication {
            premise: strings(&["f6"]),
            conclusion: strings(&["f3", "f4", "f5"]),
        },
    );
    match opts.fusion_relation {
        Some(FusionRelation::InputsImplyFusion) => {
            b.relation(
                "r5",
                PredicateDoc::Implication {
                    premise: strings(&["f4", "f5"]),
                    conclusion: strings(&["f3"]),
                },
            );
        }
        Some(FusionRelation::MutualExclusion) => {
            b.relation(
                "r5",
                PredicateDoc::MutualExclusion {
                    scope: strings(&["f3", "f4", "f5"]),
                },
            );
        }
        None => {}
    }
    b.build()
}

/// Deterministic-OR tests, outputs failing iff their module fails, and the
/// fusion-input relation removed.
pub fn fig2_example4() -> Result<DiagnosticGraph> {
    fig2_example(&Fig2Options {
        test_semantics: TestSemantics::DeterministicOr,
        iff_coupling: true,
        fusion_relation: None,
    })
}

/// Feature extraction + point-cloud registration odometry pipeline.
pub fn lidar_egomotion_example() -> Result<DiagnosticGraph> {
    let or = TestSemantics::DeterministicOr;
    DocBuilder::new()
        .module("feature_extraction", "Feature extraction")
        .module("registration", "Point-cloud registration")
        .output("features", "3D features", "feature_extraction")
        .output("relative_pose", "Relative pose", "registration")
        .edge("features", "registration")
        .mode("f1", "feature_extraction", FailureKind::OutOfDistribution)
        .mode("f2", "registration", FailureKind::SuboptimalSolution)
        .mode("f3", "features", FailureKind::TooManyOutliers)
        .mode("f4", "features", FailureKind::FewFeatures)
        .mode("f5", "relative_pose", FailureKind::WrongRelativePose)
        .test("feature_count", &["f4"], &or)
        .test("certificate", &["f2"], &or)
        .test("pose_bound", &["f5"], &or)
        .test("alignment_inliers", &["f3", "f5"], &or)
        .relation(
            "features_io",
            PredicateDoc::ModuleOutputImplication {
                module: strings(&["f1"]),
                outputs: strings(&["f3", "f4"]),
                iff: false,
            },
        )
        .relation(
            "registration_io",
            PredicateDoc::ModuleOutputImplication {
                module: strings(&["f2"]),
                outputs: strings(&["f5"]),
                iff: false,
            },
        )
        .relation(
            "ood_affects_features",
            PredicateDoc::Implication {
                premise: strings(&["f1"]),
                conclusion: strings(&["f3", "f4"]),
            },
        )
        .relation(
            "outliers_exclusive",
            PredicateDoc::MutualExclusion {
                scope: strings(&["f3", "f4"]),
            },
        )
        .build()
}

/// Detector modules of the obstacle-detection system, with their output
/// and the kind of their single module failure mode.
pub const APOLLO_MODULES: [(&str, &str, FailureKind); 4] = [
    ("lidar_detector", "lidar_obstacles", FailureKind::OutOfDistribution),
    ("camera_detector", "camera_obstacles", FailureKind::OutOfDistribution),
    ("radar_detector", "radar_obstacles", FailureKind::Misdetection),
    ("sensor_fusion", "fused_obstacles", FailureKind::Misassociation),
];

pub const APOLLO_OUTPUTS: [&str; 4] = [
    "lidar_obstacles",
    "camera_obstacles",
    "radar_obstacles",
    "fused_obstacles",
];

pub const OUTPUT_FAILURE_KINDS: [FailureKind; 3] = [
    FailureKind::Misdetection,
    FailureKind::Misposition,
    FailureKind::Misclassification,
];

/// Compared output pairs, as indices into [`APOLLO_OUTPUTS`].
pub const APOLLO_PAIRS: [(usize, usize); 6] = [(0, 1), (2, 1), (0, 3), (2, 3), (0, 2), (1, 3)];

fn kind_name(kind: FailureKind) -> &'static str {
    match kind {
        FailureKind::Misdetection => "misdetection",
        FailureKind::Misposition => "misposition",
        FailureKind::Misclassification => "misclassification",
        FailureKind::OutOfDistribution => "ood",
        FailureKind::Misassociation => "misassociation",
        _ => "unknown",
    }
}

fn short(output: &str) -> &str {
    output.trim_end_matches("_obstacles")
}

pub(crate) fn apollo_output_mode(output: &str, kind: FailureKind) -> String {
    format!("{output}.{}", kind_name(kind))
}

/// Four modules with one failure mode each (indices 0..4), then four
/// outputs with misdetection/misposition/misclassification (indices
/// 4..16, output-major). Eighteen pairwise tests, pair-major, and one
/// module-output implication per module.
pub fn apollo_obstacle(semantics: &TestSemantics) -> Result<DiagnosticGraph> {
    let mut b = DocBuilder::new();
    for (module, output, _) in APOLLO_MODULES {
        b.module(module, module).output(output, output, module);
    }
    for output in &APOLLO_OUTPUTS[..3] {
        b.edge(output, "sensor_fusion");
    }
    for (module, _, kind) in APOLLO_MODULES {
        b.mode(&format!("{module}.{}", kind_name(kind)), module, kind);
    }
    for output in APOLLO_OUTPUTS {
        for kind in OUTPUT_FAILURE_KINDS {
            b.mode(&apollo_output_mode(output, kind), output, kind);
        }
    }
    for (a, c) in APOLLO_PAIRS {
        let (a, c) = (APOLLO_OUTPUTS[a], APOLLO_OUTPUTS[c]);
        for kind in OUTPUT_FAILURE_KINDS {
            b.test(
                &format!("{}_{}.{}", short(a), short(c), kind_name(kind)),
                &[&apollo_output_mode(a, kind), &apollo_output_mode(c, kind)],
                semantics,
            );
        }
    }
    for (module, output, kind) in APOLLO_MODULES {
        b.relation(
            &format!("{module}.io"),
            PredicateDoc::ModuleOutputImplication {
                module: vec![format!("{module}.{}", kind_name(kind))],
                outputs: OUTPUT_FAILURE_KINDS
                    .iter()
                    .map(|&k| apollo_output_mode(output, k))
                    .collect(),
                iff: false,
            },
        );
    }
    b.build()
}

/// Two stacked obstacle-detection slices, eighteen cross-time tests
/// comparing output `a` at the first slice with output `b` at the second,
/// and (optionally) a transition relation per module failure mode.
pub fn apollo_temporal(semantics: &TestSemantics, with_transitions: bool) -> Result<TemporalDiagnosticGraph> {
    let slice = apollo_obstacle(semantics)?;
    let mut tests = Vec::new();
    for (a, c) in APOLLO_PAIRS {
        let (a, c) = (APOLLO_OUTPUTS[a], APOLLO_OUTPUTS[c]);
        for kind in OUTPUT_FAILURE_KINDS {
            tests.push(TemporalTestDef {
                id: format!("x/{}_{}.{}", short(a), short(c), kind_name(kind)),
                scope: vec![
                    SliceRef::new(0, apollo_output_mode(a, kind)),
                    SliceRef::new(1, apollo_output_mode(c, kind)),
                ],
                semantics: match semantics {
                    TestSemantics::NoisyOr(p) => TestSemantics::NoisyOr(super::NoisyOrParams::uniform(
                        2,
                        p.p_detect.first().copied().unwrap_or(1.0),
                        p.p_false_alarm.first().copied().unwrap_or(0.0),
                    )),
                    s => s.clone(),
                },
            });
        }
    }
    let transitions = if with_transitions {
        APOLLO_MODULES
            .iter()
            .map(|(module, _, kind)| {
                let mode = format!("{module}.{}", kind_name(*kind));
                TemporalTransitionDef {
                    id: format!("x/{module}.transition"),
                    from: SliceRef::new(0, mode.clone()),
                    to: SliceRef::new(1, mode),
                    p_activate: 0.05,
                    p_persist: 0.8,
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    stack_temporal(vec![slice.clone(), slice], tests, transitions)
}
