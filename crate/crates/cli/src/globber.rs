//! Minimal glob matching for sweep-file discovery: `*` and `?` inside a
//! path component; components split on `/`. Results are sorted for
//! deterministic processing order.

use std::path::PathBuf;

pub fn expand(pattern: &str) -> std::io::Result<Vec<PathBuf>> {
    let (root, components): (PathBuf, Vec<&str>) = if let Some(rest) = pattern.strip_prefix('/') {
        (PathBuf::from("/"), rest.split('/').collect())
    } else {
        (PathBuf::from("."), pattern.split('/').collect())
    };
    let mut current = vec![root];
    for (i, comp) in components.iter().enumerate() {
        if comp.is_empty() {
            continue;
        }
        let last = i == components.len() - 1;
        let mut next = Vec::new();
        for dir in &current {
            if comp.contains('*') || comp.contains('?') {
                let entries = match std::fs::read_dir(dir) {
                    Ok(e) => e,
                    Err(_) => continue,
                };
                for entry in entries.flatten() {
                    let name = entry.file_name();
                    let name = name.to_string_lossy();
                    if matches_component(comp, &name) {
                        let path = dir.join(name.as_ref());
                        if last || path.is_dir() {
                            next.push(path);
                        }
                    }
                }
            } else {
                let path = dir.join(comp);
                if path.exists() {
                    next.push(path);
                }
            }
        }
        current = next;
    }
    let mut files: Vec<PathBuf> = current
        .into_iter()
        .filter(|p| p.is_file())
        .map(strip_leading_dot)
        .collect();
    files.sort();
    files.dedup();
    Ok(files)
}

fn strip_leading_dot(p: PathBuf) -> PathBuf {
    match p.strip_prefix("./") {
        Ok(stripped) => stripped.to_path_buf(),
        Err(_) => p,
    }
}

/// `*` matches any run of characters, `?` any single character; neither
/// crosses a path separator because matching is per component.
fn matches_component(pattern: &str, name: &str) -> bool {
    let p: Vec<char> = pattern.chars().collect();
    let n: Vec<char> = name.chars().collect();
    // iterative wildcard matching with backtracking over the last '*'
    let (mut pi, mut ni) = (0usize, 0usize);
    let mut star: Option<(usize, usize)> = None;
    while ni < n.len() {
        if pi < p.len() && (p[pi] == '?' || p[pi] == n[ni]) {
            pi += 1;
            ni += 1;
        } else if pi < p.len() && p[pi] == '*' {
            star = Some((pi, ni));
            pi += 1;
        } else if let Some((sp, sn)) = star {
            pi = sp + 1;
            ni = sn + 1;
            star = Some((sp, sn + 1));
        } else {
            return false;
        }
    }
    while pi < p.len() && p[pi] == '*' {
        pi += 1;
    }
    pi == p.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_matching() {
        assert!(matches_component("hvn_*.csv", "hvn_gm_0.1.csv"));
        assert!(matches_component("*", "anything"));
        assert!(matches_component("a?c", "abc"));
        assert!(!matches_component("a?c", "ac"));
        assert!(!matches_component("hvn_*.csv", "ratio_n.csv"));
        assert!(matches_component("*_n.csv", "ratio_n.csv"));
    }
}
