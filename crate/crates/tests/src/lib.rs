//! Helpers for the workspace acceptance checks: locating the example
//! programs and a structural validator for generated gnuplot scripts.

use std::collections::BTreeMap;
use std::path::PathBuf;

/// Directory holding the `.lince` example programs.
pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../hybridsim/corpus")
}

pub fn corpus(name: &str) -> String {
    let path = corpus_dir().join(format!("{name}.lince"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ScriptSummary {
    /// Rows per inline data block.
    pub blocks: BTreeMap<String, usize>,
    pub plot_items: usize,
    pub splot_items: usize,
}

/// Checks the subset of gnuplot used by the exporter: inline data blocks
/// with numeric or `?` cells, `set`/`unset` lines, and `plot`/`splot`
/// commands whose items refer to defined blocks and existing columns.
pub fn validate_gnuplot(script: &str) -> Result<ScriptSummary, String> {
    let mut summary = ScriptSummary::default();
    let mut widths: BTreeMap<String, usize> = BTreeMap::new();
    let mut lines = script.lines().enumerate();
    let mut multiplot = 0i32;
    while let Some((n, line)) = lines.next() {
        let n = n + 1;
        let mut line = line.to_string();
        while line.ends_with('\\') {
            line.pop();
            let (_, next) = lines.next().ok_or(format!("line {n}: continuation at end of script"))?;
            line.push_str(next);
        }
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('$') {
            let (name, tail) = rest.split_once(' ').ok_or(format!("line {n}: bad data block header"))?;
            if tail.trim() != "<< EOD" {
                return Err(format!("line {n}: data block must be introduced by '<< EOD'"));
            }
            let mut rows = 0;
            let mut width = None;
            loop {
                let (m, row) = lines
                    .next()
                    .ok_or(format!("line {n}: data block ${name} is not closed"))?;
                if row == "EOD" {
                    break;
                }
                let cells: Vec<&str> = row.split_whitespace().collect();
                if let Some(bad) = cells.iter().find(|c| **c != "?" && c.parse::<f64>().is_err()) {
                    return Err(format!("line {}: '{bad}' is not a number", m + 1));
                }
                if *width.get_or_insert(cells.len()) != cells.len() {
                    return Err(format!("line {}: ragged data block ${name}", m + 1));
                }
                rows += 1;
            }
            summary.blocks.insert(name.to_string(), rows);
            widths.insert(name.to_string(), width.unwrap_or(0));
            continue;
        }
        if quotes_unbalanced(trimmed) {
            return Err(format!("line {n}: unbalanced quotes"));
        }
        let (command, rest) = trimmed.split_once(' ').unwrap_or((trimmed, ""));
        match command {
            "set" if rest.starts_with("multiplot") => multiplot += 1,
            "unset" if rest.starts_with("multiplot") => multiplot -= 1,
            "set" | "unset" => {}
            "plot" | "splot" => {
                let dims = if command == "plot" { 2 } else { 3 };
                for item in split_top_level(rest) {
                    let item = item.trim();
                    let block = item
                        .strip_prefix('$')
                        .and_then(|r| r.split_whitespace().next())
                        .ok_or(format!("line {n}: plot item does not use a data block: {item}"))?;
                    let width = *widths
                        .get(block)
                        .ok_or(format!("line {n}: undefined data block ${block}"))?;
                    let using = item
                        .split_whitespace()
                        .skip_while(|w| *w != "using")
                        .nth(1)
                        .ok_or(format!("line {n}: plot item without 'using'"))?;
                    let cols: Vec<usize> = using
                        .split(':')
                        .map(|c| c.parse().map_err(|_| format!("line {n}: bad column '{c}'")))
                        .collect::<Result<_, _>>()?;
                    if cols.len() != dims {
                        return Err(format!("line {n}: {command} needs {dims} columns, got '{using}'"));
                    }
                    if summary.blocks[block] > 0 && cols.iter().any(|&c| c == 0 || c > width) {
                        return Err(format!("line {n}: column out of range in '{using}'"));
                    }
                    if command == "plot" {
                        summary.plot_items += 1;
                    } else {
                        summary.splot_items += 1;
                    }
                }
            }
            other => return Err(format!("line {n}: unexpected command '{other}'")),
        }
        if !(0..=1).contains(&multiplot) {
            return Err(format!("line {n}: unmatched multiplot"));
        }
    }
    if multiplot != 0 {
        return Err("multiplot is not closed".into());
    }
    Ok(summary)
}

fn quotes_unbalanced(line: &str) -> bool {
    line.chars().filter(|&c| c == '\'').count() % 2 == 1
}

/// Splits on commas outside single quotes.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut quoted = false;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '\'' => quoted = !quoted,
            ',' if !quoted => {
                out.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_a_small_script() {
        let s = "$d0 << EOD\n0 1 ?\n1 2 3\nEOD\nset multiplot layout 1,1\nset title 'a, b'\nplot $d0 using 1:2 with points title 'x=0, y=1', \\\n    $d0 every ::0::0 using 1:3 notitle\nunset multiplot\n";
        let summary = validate_gnuplot(s).unwrap();
        assert_eq!(summary.blocks["d0"], 2);
        assert_eq!(summary.plot_items, 2);
    }

    #[test]
    fn rejects_broken_scripts() {
        for bad in [
            "$d0 << EOD\n0 1\n",
            "$d0 << EOD\n0 x\nEOD\n",
            "$d0 << EOD\n0 1\n0\nEOD\n",
            "plot $d1 using 1:2\n",
            "$d0 << EOD\n0 1\nEOD\nplot $d0 using 1:3\n",
            "$d0 << EOD\n0 1\nEOD\nsplot $d0 using 1:2\n",
            "set title 'x\n",
            "set multiplot\n",
            "frobnicate\n",
        ] {
            assert!(validate_gnuplot(bad).is_err(), "{bad:?}");
        }
    }
}
