//! Axis groups and graph types for plot output.

use std::fmt;

use hybridsim_core::semantics::Limits;

/// One graph: a variable over time, or variables against each other.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AxisGroup {
    Time(String),
    Pair(String, String),
    Triple(String, String, String),
}

impl AxisGroup {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            AxisGroup::Time(x) => vec![x],
            AxisGroup::Pair(x, y) => vec![x, y],
            AxisGroup::Triple(x, y, z) => vec![x, y, z],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AxisGroup::Time(_) => "time",
            AxisGroup::Pair(..) => "pair",
            AxisGroup::Triple(..) => "triple",
        }
    }

    fn fits(&self, graph: GraphType) -> bool {
        matches!(
            (self, graph),
            (AxisGroup::Triple(..), GraphType::Scatter3d)
                | (AxisGroup::Time(_) | AxisGroup::Pair(..), GraphType::Scatter)
        )
    }
}

impl fmt::Display for AxisGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxisGroup::Time(x) => write!(f, "{x}"),
            _ => write!(f, "({})", self.vars().join(",")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum GraphType {
    #[default]
    Scatter,
    Scatter3d,
}

impl GraphType {
    pub fn name(self) -> &'static str {
        match self {
            GraphType::Scatter => "scatter",
            GraphType::Scatter3d => "scatter3d",
        }
    }
}

impl fmt::Display for GraphType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum AxisError {
    #[error("malformed axes '{text}': {reason}")]
    Syntax { text: String, reason: String },
    #[error("the variable '{0}' in the axes does not occur in the program")]
    UnknownVariable(String),
    #[error("the axis group {group} cannot be drawn in a {graph} graph")]
    GraphMismatch { group: String, graph: GraphType },
    #[error("a scatter3d graph needs explicit axes or at least three variables")]
    NoDefault,
}

/// Parses `[x,y,v]`, `[(x,y),(x1,y1)]` or `[(x,y,z)]`. Whitespace around
/// names is ignored.
pub fn parse_axes(text: &str) -> Result<Vec<AxisGroup>, AxisError> {
    let fail = |reason: &str| AxisError::Syntax {
        text: text.into(),
        reason: reason.into(),
    };
    let inner = text
        .trim()
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| fail("expected a list in square brackets"))?;
    if inner.trim().is_empty() {
        return Err(fail("no axis groups"));
    }

    let mut items = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, c) in inner.char_indices() {
        match c {
            '(' if depth == 0 => depth = 1,
            '(' => return Err(fail("nested parentheses")),
            ')' if depth == 1 => depth = 0,
            ')' => return Err(fail("unbalanced ')'")),
            ',' if depth == 0 => {
                items.push(&inner[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err(fail("unclosed '('"));
    }
    items.push(&inner[start..]);

    items
        .into_iter()
        .map(|item| {
            let item = item.trim();
            if let Some(tuple) = item.strip_prefix('(') {
                let tuple = tuple.strip_suffix(')').ok_or_else(|| fail("text after ')'"))?;
                let names: Vec<&str> = tuple.split(',').map(str::trim).collect();
                if let Some(bad) = names.iter().find(|n| !is_ident(n)) {
                    return Err(fail(&format!("'{bad}' is not a variable name")));
                }
                match names[..] {
                    [x, y] => Ok(AxisGroup::Pair(x.into(), y.into())),
                    [x, y, z] => Ok(AxisGroup::Triple(x.into(), y.into(), z.into())),
                    _ => Err(fail("a group in parentheses takes two or three variables")),
                }
            } else if is_ident(item) {
                Ok(AxisGroup::Time(item.into()))
            } else {
                Err(fail(&format!("'{item}' is not a variable name")))
            }
        })
        .collect()
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// What to draw and under which limits the data was produced.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSpec {
    pub axes: Vec<AxisGroup>,
    pub graph: GraphType,
    pub limits: Limits,
}

impl PlotSpec {
    /// Checks that every group fits `graph` and mentions only `variables`.
    pub fn new(
        axes: Vec<AxisGroup>,
        graph: GraphType,
        limits: Limits,
        variables: &[String],
    ) -> Result<Self, AxisError> {
        for group in &axes {
            if let Some(v) = group.vars().into_iter().find(|v| !variables.iter().any(|w| w == v)) {
                return Err(AxisError::UnknownVariable(v.into()));
            }
            if !group.fits(graph) {
                return Err(AxisError::GraphMismatch {
                    group: group.to_string(),
                    graph,
                });
            }
        }
        Ok(PlotSpec { axes, graph, limits })
    }

    /// Every variable over time, or the first three variables in 3D.
    pub fn default_for(graph: GraphType, limits: Limits, variables: &[String]) -> Result<Self, AxisError> {
        let axes = match graph {
            GraphType::Scatter => variables.iter().map(|v| AxisGroup::Time(v.clone())).collect(),
            GraphType::Scatter3d => match variables {
                [x, y, z, ..] => vec![AxisGroup::Triple(x.clone(), y.clone(), z.clone())],
                _ => return Err(AxisError::NoDefault),
            },
        };
        Ok(PlotSpec { axes, graph, limits })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn three_time_groups() {
        assert_eq!(
            parse_axes(" [x, y , v] ").unwrap(),
            vec![
                AxisGroup::Time("x".into()),
                AxisGroup::Time("y".into()),
                AxisGroup::Time("v".into())
            ]
        );
    }

    #[test]
    fn pairs_and_triples() {
        assert_eq!(
            parse_axes("[(x,y), ( x1 ,y1)]").unwrap(),
            vec![
                AxisGroup::Pair("x".into(), "y".into()),
                AxisGroup::Pair("x1".into(), "y1".into())
            ]
        );
        assert_eq!(
            parse_axes("[(x,y,z)]").unwrap(),
            vec![AxisGroup::Triple("x".into(), "y".into(), "z".into())]
        );
    }

    #[test]
    fn malformed_axes() {
        for bad in [
            "x,y",
            "[]",
            "[(x)]",
            "[(x,y,z,w)]",
            "[((x,y))]",
            "[(x,y]",
            "[x y]",
            "[1x]",
            "[(x,y)z]",
        ] {
            assert!(matches!(parse_axes(bad), Err(AxisError::Syntax { .. })), "{bad}");
        }
    }

    #[test]
    fn triple_needs_scatter3d() {
        let axes = parse_axes("[(x,y,z)]").unwrap();
        let err = PlotSpec::new(
            axes.clone(),
            GraphType::Scatter,
            Limits::default(),
            &vars(&["x", "y", "z"]),
        );
        assert!(matches!(err, Err(AxisError::GraphMismatch { .. })));
        assert!(PlotSpec::new(axes, GraphType::Scatter3d, Limits::default(), &vars(&["x", "y", "z"])).is_ok());
        let time = parse_axes("[x]").unwrap();
        assert!(PlotSpec::new(time, GraphType::Scatter3d, Limits::default(), &vars(&["x"])).is_err());
    }

    #[test]
    fn unknown_variable() {
        let err = PlotSpec::new(
            parse_axes("[(x,q)]").unwrap(),
            GraphType::Scatter,
            Limits::default(),
            &vars(&["x"]),
        );
        assert_eq!(err, Err(AxisError::UnknownVariable("q".into())));
    }

    #[test]
    fn defaults() {
        let spec = PlotSpec::default_for(GraphType::Scatter, Limits::default(), &vars(&["p", "v"])).unwrap();
        assert_eq!(spec.axes.len(), 2);
        assert_eq!(
            PlotSpec::default_for(GraphType::Scatter3d, Limits::default(), &vars(&["p", "v"])),
            Err(AxisError::NoDefault)
        );
    }
}
