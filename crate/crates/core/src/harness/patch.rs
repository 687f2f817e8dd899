//! Context-hunk patches and literal replacement over the model text.

use super::HarnessError;

#[derive(Debug, Clone, PartialEq, Eq)]
struct Hunk {
    old: Vec<String>,
    new: Vec<String>,
}

fn parse_hunks(patch: &str) -> Result<Vec<Hunk>, HarnessError> {
    let mut hunks: Vec<Hunk> = Vec::new();
    let mut current: Option<Hunk> = None;
    for line in patch.lines() {
        if line.starts_with("@@") {
            hunks.extend(current.take());
            current = Some(Hunk {
                old: Vec::new(),
                new: Vec::new(),
            });
            continue;
        }
        // envelope lines such as "*** Begin Patch"
        if line.starts_with("***") {
            continue;
        }
        let Some(h) = current.as_mut() else {
            if line.trim().is_empty() {
                continue;
            }
            return Err(HarnessError::new("patch_invalid", format!("text before the first @@ line: {line:?}")));
        };
        match line.chars().next() {
            Some(' ') => {
                h.old.push(line[1..].to_string());
                h.new.push(line[1..].to_string());
            }
            Some('-') => h.old.push(line[1..].to_string()),
            Some('+') => h.new.push(line[1..].to_string()),
            None => {
                h.old.push(String::new());
                h.new.push(String::new());
            }
            Some(_) => {
                return Err(HarnessError::new(
                    "patch_invalid",
                    format!("hunk lines must start with ' ', '-' or '+': {line:?}"),
                ))
            }
        }
    }
    hunks.extend(current);
    if hunks.is_empty() {
        return Err(HarnessError::new("patch_invalid", "patch has no @@ hunks"));
    }
    if let Some(h) = hunks.iter().find(|h| h.old.is_empty()) {
        return Err(HarnessError::new(
            "patch_invalid",
            format!("hunk inserting {} line(s) has no context to anchor it", h.new.len()),
        ));
    }
    Ok(hunks)
}

fn occurrences(lines: &[String], needle: &[String]) -> Vec<usize> {
    if needle.len() > lines.len() {
        return Vec::new();
    }
    (0..=lines.len() - needle.len())
        .filter(|&i| lines[i..i + needle.len()] == *needle)
        .collect()
}

/// Applies every hunk or none. Each hunk's context plus deleted lines must
/// occur exactly once in the text as it stands when the hunk is applied.
pub fn apply_patch(text: &str, patch: &str) -> Result<String, HarnessError> {
    let hunks = parse_hunks(patch)?;
    let trailing_newline = text.ends_with('\n');
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    for (i, h) in hunks.iter().enumerate() {
        let hits = occurrences(&lines, &h.old);
        match hits.as_slice() {
            [] => {
                return Err(HarnessError::new(
                    "patch_context_not_found",
                    format!("hunk {} context was not found in model.apl:\n{}", i + 1, h.old.join("\n")),
                ))
            }
            [at] => {
                lines.splice(*at..*at + h.old.len(), h.new.iter().cloned());
            }
            many => {
                return Err(HarnessError::new(
                    "patch_ambiguous",
                    format!(
                        "hunk {} context matches {} places (lines {}); add more context",
                        i + 1,
                        many.len(),
                        many.iter().map(|l| (l + 1).to_string()).collect::<Vec<_>>().join(", ")
                    ),
                ))
            }
        }
    }
    let mut out = lines.join("\n");
    if trailing_newline || text.is_empty() {
        out.push('\n');
    }
    Ok(out)
}

/// Literal replacement that fails unless `old` occurs exactly `expected` times.
pub fn replace_exact(text: &str, old: &str, new: &str, expected: usize) -> Result<String, HarnessError> {
    if old.is_empty() {
        return Err(HarnessError::new("replace_count_mismatch", "old text is empty"));
    }
    let found = text.matches(old).count();
    if found != expected {
        return Err(HarnessError::new(
            "replace_count_mismatch",
            format!("expected {expected} occurrence(s) of the old text, found {found}"),
        ));
    }
    Ok(text.replace(old, new))
}
