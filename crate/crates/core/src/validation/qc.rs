//! Compiler-owned checks: floating parts, unintended interpenetration,
//! scattered part geometry and naming.

use serde_json::{json, Value as Json};

use crate::geometry::penetration::{penetration_between, SolidClassifier};
use crate::geometry::{GeometryError, TriMesh};
use crate::kinematics::KinematicTree;
use crate::lang::{Allowance, AllowanceKind, TestPlan};
use crate::model::ArticulatedObject;

use super::scene::{body_distance, Scene};
use super::{Finding, ValidationOptions};

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, i: usize) -> usize {
        let mut r = i;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut i = i;
        while self.0[i] != r {
            let next = self.0[i];
            self.0[i] = r;
            i = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.0[hi] = lo;
        }
    }

    /// Groups in order of their smallest member.
    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.0.len();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; n];
        for i in 0..n {
            let r = self.find(i);
            if slot[r] == usize::MAX {
                slot[r] = out.len();
                out.push(Vec::new());
            }
            out[slot[r]].push(i);
        }
        out
    }
}

/// QC findings plus one note per allowance, in plan order.
pub struct QcOutcome {
    pub findings: Vec<Finding>,
    pub allowance_notes: Vec<Finding>,
}

pub fn run_qc(
    obj: &ArticulatedObject,
    tree: &KinematicTree,
    scene: &Scene,
    plan: &TestPlan,
    options: &ValidationOptions,
) -> Result<QcOutcome, GeometryError> {
    let allowances: Vec<&Allowance> = plan.allowances().collect();
    let mut suppressed: Vec<Vec<Json>> = vec![Vec::new(); allowances.len()];
    let mut findings = Vec::new();

    for (component, f) in isolated_parts(tree, scene, options)? {
        let covering = allowances.iter().position(|a| {
            a.kind == AllowanceKind::IsolatedPart
                && component.iter().any(|p| *p == a.targets[0].part)
        });
        match covering {
            Some(i) => suppressed[i].push(f.payload),
            None => findings.push(f),
        }
    }

    for f in overlaps(tree, scene, &allowances, &mut suppressed, options)? {
        findings.push(f);
    }
    findings.extend(scattered_geometry(scene, options)?);
    findings.extend(naming_lint(obj));

    let allowance_notes = allowances
        .iter()
        .zip(suppressed)
        .map(|(a, s)| allowance_note(a, s))
        .collect();
    Ok(QcOutcome {
        findings,
        allowance_notes,
    })
}

fn allowance_note(a: &Allowance, suppressed: Vec<Json>) -> Finding {
    let (code, head) = match a.kind {
        AllowanceKind::Overlap => {
            let (ta, tb) = (&a.targets[0], &a.targets[1]);
            let mut head = format!("allow_overlap('{}','{}')", ta.part, tb.part);
            if let Some(e) = &ta.element {
                head.push_str(&format!(", elem_a='{e}'"));
            }
            if let Some(e) = &tb.element {
                head.push_str(&format!(", elem_b='{e}'"));
            }
            ("allowed_overlap", head)
        }
        AllowanceKind::IsolatedPart => (
            "allowed_isolated_part",
            format!("allow_isolated_part('{}')", a.targets[0].part),
        ),
    };
    let targets: Vec<Json> = a
        .targets
        .iter()
        .map(|t| json!({"part": t.part, "element": t.element}))
        .collect();
    let matched = suppressed.len();
    Finding::note(
        code,
        format!("{head}: {}", a.reason),
        json!({
            "reason": a.reason,
            "targets": targets,
            "matched": matched,
            "suppressed": suppressed,
            "line": a.span.line,
        }),
    )
}

/// Distance between two parts with an AABB shortcut: returns `None` when
/// the boxes alone prove the parts are farther apart than `cutoff`.
fn part_distance(scene: &Scene, a: usize, b: usize, cutoff: f64) -> Result<Option<f64>, GeometryError> {
    let (pa, pb) = (&scene.parts[a], &scene.parts[b]);
    let (Some(ba), Some(bb)) = (pa.aabb, pb.aabb) else {
        return Ok(None);
    };
    if ba.distance(&bb) > cutoff {
        return Ok(None);
    }
    body_distance(&pa.mesh, &pb.mesh).map(Some)
}

/// One finding per connected component that does not reach the root,
/// together with the names of the component's parts.
fn isolated_parts(
    tree: &KinematicTree,
    scene: &Scene,
    options: &ValidationOptions,
) -> Result<Vec<(Vec<String>, Finding)>, GeometryError> {
    let n = scene.parts.len();
    let idx = |name: &str| scene.parts.iter().position(|p| p.name == name).expect("scene covers every part");
    let mut uf = UnionFind::new(n);
    for j in tree.joints() {
        uf.union(idx(&j.parent), idx(&j.child));
    }
    for a in 0..n {
        for b in a + 1..n {
            if uf.find(a) == uf.find(b) {
                continue;
            }
            if let Some(d) = part_distance(scene, a, b, options.contact_tolerance)? {
                if d <= options.contact_tolerance {
                    uf.union(a, b);
                }
            }
        }
    }
    let root = idx(tree.root());
    let root_set = uf.find(root);
    let grounded: Vec<usize> = (0..n).filter(|&i| uf.find(i) == root_set).collect();
    let mut out = Vec::new();
    for group in uf.groups() {
        if uf.find(group[0]) == root_set {
            continue;
        }
        // nearest (floating part, grounded part) pair
        let mut best: Option<(f64, usize, usize)> = None;
        for &p in &group {
            for &g in &grounded {
                let cutoff = best.map_or(f64::INFINITY, |b| b.0);
                if let Some(d) = part_distance(scene, p, g, cutoff)? {
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, p, g));
                    }
                }
            }
        }
        let names: Vec<String> = group.iter().map(|&i| scene.parts[i].name.clone()).collect();
        let rep = best.map_or(group[0], |b| b.1);
        let part = &scene.parts[rep].name;
        let mut message = format!(
            "Floating disconnected component(s) detected.\npart '{part}' is disconnected from the grounded body rooted at '{}';",
            tree.root()
        );
        match best {
            Some((d, _, g)) => message.push_str(&format!(
                "\nnearest_grounded_part='{}'; approx_gap={d:.3}m.",
                scene.parts[g].name
            )),
            None => message.push_str("\nno grounded geometry to measure against."),
        }
        if names.len() > 1 {
            message.push_str(&format!("\ncomponent_parts={}", names.join(",")));
        }
        let payload = json!({
            "part": part,
            "component": names,
            "root": tree.root(),
            "nearest_grounded_part": best.map(|b| scene.parts[b.2].name.clone()),
            "approx_gap": best.map(|b| b.0),
        });
        out.push((names, Finding::failure("isolated_part", message, payload)));
    }
    Ok(out)
}

fn allowance_matches(a: &Allowance, pa: &str, ea: &str, pb: &str, eb: &str) -> bool {
    if a.kind != AllowanceKind::Overlap {
        return false;
    }
    let (ta, tb) = (&a.targets[0], &a.targets[1]);
    let side = |t: &crate::lang::Target, p: &str, e: &str| t.part == p && t.element.as_deref().is_none_or(|x| x == e);
    (side(ta, pa, ea) && side(tb, pb, eb)) || (side(ta, pb, eb) && side(tb, pa, ea))
}

fn overlaps(
    tree: &KinematicTree,
    scene: &Scene,
    allowances: &[&Allowance],
    suppressed: &mut [Vec<Json>],
    options: &ValidationOptions,
) -> Result<Vec<Finding>, GeometryError> {
    let mut classifiers: Vec<Vec<Option<SolidClassifier>>> = scene
        .parts
        .iter()
        .map(|p| p.elements.iter().map(|_| None).collect())
        .collect();
    let mut findings = Vec::new();
    let n = scene.parts.len();
    for a in 0..n {
        for b in a + 1..n {
            let (pa, pb) = (&scene.parts[a], &scene.parts[b]);
            if tree.adjacent(&pa.name, &pb.name) {
                continue;
            }
            let (Some(ba), Some(bb)) = (pa.aabb, pb.aabb) else {
                continue;
            };
            if ba.intersection(&bb).is_none() {
                continue;
            }
            let mut uncovered = Vec::new();
            for (i, ea) in pa.elements.iter().enumerate() {
                for (k, eb) in pb.elements.iter().enumerate() {
                    if ea.aabb.intersection(&eb.aabb).is_none() {
                        continue;
                    }
                    if classifiers[a][i].is_none() {
                        classifiers[a][i] = Some(SolidClassifier::new(&ea.mesh));
                    }
                    if classifiers[b][k].is_none() {
                        classifiers[b][k] = Some(SolidClassifier::new(&eb.mesh));
                    }
                    let m = penetration_between(
                        classifiers[a][i].as_ref().expect("built"),
                        classifiers[b][k].as_ref().expect("built"),
                        &options.penetration,
                    );
                    if !(m.depth > options.overlap_depth || m.volume > options.overlap_volume) {
                        continue;
                    }
                    let pair = json!({
                        "part_a": pa.name,
                        "part_b": pb.name,
                        "elem_a": ea.name,
                        "elem_b": eb.name,
                        "depth": m.depth,
                        "volume": m.volume,
                    });
                    match allowances
                        .iter()
                        .position(|al| allowance_matches(al, &pa.name, &ea.name, &pb.name, &eb.name))
                    {
                        Some(i) => suppressed[i].push(pair),
                        None => uncovered.push(pair),
                    }
                }
            }
            if uncovered.is_empty() {
                continue;
            }
            let deepest = uncovered
                .iter()
                .max_by(|x, y| x["depth"].as_f64().unwrap_or(0.0).total_cmp(&y["depth"].as_f64().unwrap_or(0.0)))
                .expect("non-empty")
                .clone();
            let mut message = format!(
                "parts '{}' and '{}' interpenetrate: elem_a='{}', elem_b='{}', depth={:.4}m, volume={:.3e}m^3",
                pa.name,
                pb.name,
                deepest["elem_a"].as_str().unwrap_or(""),
                deepest["elem_b"].as_str().unwrap_or(""),
                deepest["depth"].as_f64().unwrap_or(0.0),
                deepest["volume"].as_f64().unwrap_or(0.0),
            );
            if uncovered.len() > 1 {
                message.push_str(&format!(" ({} element pairs)", uncovered.len()));
            }
            findings.push(Finding::failure(
                "overlap",
                message,
                json!({"part_a": pa.name, "part_b": pb.name, "pairs": uncovered}),
            ));
        }
    }
    Ok(findings)
}

/// Warns about parts whose visuals form more than one touching cluster.
fn scattered_geometry(scene: &Scene, options: &ValidationOptions) -> Result<Vec<Finding>, GeometryError> {
    let mut out = Vec::new();
    for p in &scene.parts {
        let n = p.elements.len();
        if n < 2 {
            continue;
        }
        let mut uf = UnionFind::new(n);
        for i in 0..n {
            for k in i + 1..n {
                if uf.find(i) == uf.find(k) {
                    continue;
                }
                let (ei, ek) = (&p.elements[i], &p.elements[k]);
                if ei.aabb.distance(&ek.aabb) > options.contact_tolerance {
                    continue;
                }
                if body_distance(&ei.mesh, &ek.mesh)? <= options.contact_tolerance {
                    uf.union(i, k);
                }
            }
        }
        let groups = uf.groups();
        if groups.len() < 2 {
            continue;
        }
        let names: Vec<Vec<String>> = groups
            .iter()
            .map(|g| g.iter().map(|&i| p.elements[i].name.clone()).collect())
            .collect();
        let listed = names.iter().map(|g| g.join(", ")).collect::<Vec<_>>().join(" | ");
        out.push(Finding::warning(
            "disconnected_geometry",
            format!("part '{}' has {} disconnected visual clusters: {listed}", p.name, groups.len()),
            json!({"part": p.name, "clusters": names}),
        ));
    }
    Ok(out)
}

const STATE_WORDS: [&str; 7] = ["open", "closed", "extended", "pulled_out", "ajar", "tilted", "rotated"];
const MAX_NAME_WORDS: usize = 5;

fn lint_name(kind: &str, name: &str) -> Vec<Finding> {
    let mut out = Vec::new();
    let words: Vec<&str> = name.split('_').collect();
    let payload = |issue: &str| json!({"kind": kind, "name": name, "issue": issue});
    if words.len() > MAX_NAME_WORDS {
        out.push(Finding::warning(
            "naming_lint",
            format!("{kind} name '{name}' has {} words; keep names to at most {MAX_NAME_WORDS}", words.len()),
            payload("too_long"),
        ));
    }
    if name.chars().any(|c| c.is_uppercase()) {
        out.push(Finding::warning(
            "naming_lint",
            format!("{kind} name '{name}' contains uppercase letters; use lowercase snake_case"),
            payload("uppercase"),
        ));
    }
    let lower = name.to_lowercase();
    let lw: Vec<&str> = lower.split('_').collect();
    for state in STATE_WORDS {
        let sw: Vec<&str> = state.split('_').collect();
        if lw.windows(sw.len()).any(|w| w == sw.as_slice()) {
            out.push(Finding::warning(
                "naming_lint",
                format!("{kind} name '{name}' encodes an articulation state ('{state}'); name the part, not its pose"),
                payload("state_word"),
            ));
            break;
        }
    }
    out
}

pub fn naming_lint(obj: &ArticulatedObject) -> Vec<Finding> {
    let mut out = Vec::new();
    for p in obj.parts() {
        out.extend(lint_name("part", &p.name));
    }
    for j in obj.joints() {
        out.extend(lint_name("joint", &j.name));
    }
    out
}

/// Whether any two meshes overlap by more than the thresholds.
pub fn significant_overlap(a: &TriMesh, b: &TriMesh, options: &ValidationOptions) -> bool {
    let (ca, cb) = (SolidClassifier::new(a), SolidClassifier::new(b));
    let m = penetration_between(&ca, &cb, &options.penetration);
    m.depth > options.overlap_depth || m.volume > options.overlap_volume
}
