use std::collections::BTreeMap;

use proptest::prelude::*;

use jointsmith_core::geometry::procedural::{HingeParams, PanelParams, ProceduralGeometry, ProceduralSpec, TubeParams, WheelParams};
use jointsmith_core::geometry::{mesh_for_geometry, watertight_check};
use jointsmith_core::harness::compaction::compact_history;
use jointsmith_core::harness::patch::{apply_patch, replace_exact};
use jointsmith_core::harness::{dispatch_tool, open_workspace, CompactionPolicy, SessionConfig, ToolCall, TurnRecord};
use jointsmith_core::validation::signals::SummaryCounts;
use jointsmith_core::validation::{compile_source, parse_summary_line, Status, ValidationOptions};
use jointsmith_core::{sha256_hex, Geometry, Vec3};
use serde_json::json;

fn lines(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("line {i} = {};", i * 7 % 11)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn patch_matches_direct_edit(n in 3usize..30, at in 0usize..30, insert in "[a-z ]{0,12}", delete in any::<bool>()) {
        let at = at % n;
        let src = lines(n);
        let text = src.join("\n") + "\n";
        let mut patch = String::from("@@\n");
        let lo = at.saturating_sub(1);
        for l in &src[lo..at] {
            patch += &format!(" {l}\n");
        }
        if delete {
            patch += &format!("-{}\n", src[at]);
        } else {
            patch += &format!(" {}\n", src[at]);
        }
        patch += &format!("+{insert}\n");
        let mut want = src.clone();
        if delete {
            want[at] = insert.clone();
        } else {
            want.insert(at + 1, insert.clone());
        }
        prop_assert_eq!(apply_patch(&text, &patch).unwrap(), want.join("\n") + "\n");
    }

    #[test]
    fn replace_is_all_or_nothing(hay in "[ab]{0,20}", needle in "[ab]{1,3}", expected in 0usize..6) {
        let count = hay.matches(needle.as_str()).count();
        match replace_exact(&hay, &needle, "X", expected) {
            Ok(out) => {
                prop_assert_eq!(count, expected);
                prop_assert_eq!(out, hay.replace(needle.as_str(), "X"));
            }
            Err(e) => {
                prop_assert!(count != expected);
                prop_assert_eq!(e.code, "replace_count_mismatch");
            }
        }
    }

    #[test]
    fn failed_edits_never_touch_the_workspace(n in 2usize..12, bogus in "[a-z]{3,8}") {
        let text = lines(n).join("\n") + "\n";
        let (mut ws, mut state) = open_workspace("x", Some(&text), &SessionConfig::default()).unwrap();
        let before = sha256_hex(ws.model().as_bytes());
        for call in [
            ToolCall::new("apply_patch", json!({"patch": format!("@@\n-{bogus}!\n+y\n")})),
            ToolCall::new("replace", json!({"old": format!("{bogus}!"), "new": "y"})),
            ToolCall::new("write_file", json!({"path": format!("{bogus}.apl"), "content": "y"})),
        ] {
            prop_assert!(!dispatch_tool(&mut ws, &mut state, &call).ok);
            prop_assert_eq!(sha256_hex(ws.model().as_bytes()), before.clone());
        }
        prop_assert_eq!(ws.model_writes(), 0);
    }

    #[test]
    fn summary_line_round_trips(failures in 0usize..50, warnings in 0usize..50, notes in 0usize..50) {
        let s = SummaryCounts {
            status: if failures == 0 { Status::Success } else { Status::Failure },
            failures,
            warnings,
            notes,
        };
        let block = format!("<compile_signals>\n<summary>\n{s}\n</summary>\n</compile_signals>");
        prop_assert_eq!(parse_summary_line(&block), Some(s));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn compaction_preserves_prefix_and_tail(n in 10usize..30) {
        let (mut ws, mut state) = open_workspace("x", None, &SessionConfig::default()).unwrap();
        for i in 0..n {
            state.turn += 1;
            let call = ToolCall::new("read_file", json!({}));
            let result = dispatch_tool(&mut ws, &mut state, &call);
            state.history.push(TurnRecord::Turn {
                turn: state.turn,
                assistant: format!("step {i}"),
                call: Some(call),
                result: Some(result),
                usage: Default::default(),
            });
        }
        let policy = CompactionPolicy::default();
        let prefix = serde_json::to_string(&state.prefix).unwrap();
        let tail = serde_json::to_string(&state.history[n - policy.tail..]).unwrap();
        let (replaced, _) = compact_history(&mut state, &policy, None).unwrap();
        prop_assert_eq!(replaced, n - policy.tail);
        prop_assert_eq!(state.history.len(), policy.tail + 1);
        prop_assert_eq!(serde_json::to_string(&state.prefix).unwrap(), prefix);
        prop_assert_eq!(serde_json::to_string(&state.history[1..]).unwrap(), tail);
    }

    #[test]
    fn posed_frames_stay_rigid(
        axes in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0), 3),
        angles in prop::collection::vec(-3.0f64..3.0, 3),
        rpy in prop::collection::vec((-3.0f64..3.0, -1.5f64..1.5, -3.0f64..3.0), 3),
    ) {
        let mut src = String::from("build {\n part(\"p0\");\n visual(\"p0\", sphere(0.05));\n");
        for k in 0..3 {
            let (ax, ay, az) = axes[k];
            let (r, p, y) = rpy[k];
            src += &format!(
                " part(\"p{}\");\n visual(\"p{}\", sphere(0.05));\n joint(\"j{k}\", \"revolute\", \"p{k}\", \"p{}\", origin=origin([0, 0, 0.1], [{r}, {p}, {y}]), axis=[{ax}, {ay}, {az}], lower=-3.2, upper=3.2);\n",
                k + 1, k + 1, k + 1
            );
        }
        src += "}\n";
        let out = compile_source(&src, &ValidationOptions::default());
        let tree = out.tree.expect("chain builds");
        let pose: BTreeMap<String, f64> = (0..3).map(|k| (format!("j{k}"), angles[k])).collect();
        let frames = tree.forward_kinematics(&pose).unwrap();
        for f in frames.frames.values() {
            let r = f.rotation;
            prop_assert!((r.transpose() * r - jointsmith_core::Mat3::identity()).amax() < 1e-12);
            prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn primitive_meshes_are_closed(
        a in 0.01f64..0.5, b in 0.01f64..0.5, c in 0.01f64..0.5, segments in 8usize..65,
    ) {
        for g in [
            Geometry::Box { size: Vec3::new(a, b, c) },
            Geometry::Cylinder { radius: a, length: b },
            Geometry::Sphere { radius: a },
            Geometry::Cone { r_bottom: a, r_top: c * 0.5, length: b },
            Geometry::Capsule { radius: a, length: b },
        ] {
            let w = watertight_check(&mesh_for_geometry(&g, segments).unwrap());
            prop_assert!(w.closed && w.inconsistent_edges == 0, "{} {:?}", g.kind(), w);
            prop_assert_eq!(w.euler_characteristic, 2);
        }
    }

    #[test]
    fn procedural_meshes_are_closed(
        radius in 0.05f64..0.4, width in 0.01f64..0.1, spokes in 3u32..9, holes in 1u32..5, t in 0.2f64..0.8,
    ) {
        let specs = [
            ProceduralSpec::Wheel(WheelParams::new(radius, width, spokes, 0.1 * radius)),
            ProceduralSpec::BarrelHinge {
                params: HingeParams { length: radius, barrel_radius: 0.1 * width + 0.002, leaf_width: 0.3 * radius, leaf_thickness: 0.002 },
                piece: None,
            },
            ProceduralSpec::PerforatedPanel(PanelParams {
                size: Vec3::new(radius, 0.8 * radius, 0.01),
                holes_x: holes,
                holes_y: holes + 1,
                hole_radius: 0.2 * radius / (holes + 1) as f64,
            }),
            ProceduralSpec::SweptTube(TubeParams {
                points: vec![Vec3::zeros(), Vec3::new(0.0, 0.0, radius), Vec3::new(t * radius, 0.0, radius * (1.0 + t))],
                radius: 0.05 * width + 0.002,
            }),
        ];
        for spec in specs {
            let kind = spec.kind();
            let g = ProceduralGeometry::new(spec).unwrap();
            let w = watertight_check(&g.mesh(24).unwrap());
            prop_assert!(w.closed && w.inconsistent_edges == 0, "{kind} {:?}", w);
        }
    }
}
