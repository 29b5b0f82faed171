//! Explicit lookup-table set functions and their text format.
//!
//! One line per subset: comma-separated per-agent entries, whitespace, then
//! the value. An entry is an action index, `-` when the agent contributes
//! nothing, or `a+b` when the agent contributes several actions. `#` starts a
//! comment.
//!
//! ```text
//! # two agents, two actions each
//! -,-   0
//! 0,-   1
//! 1,-   2
//! -,0   1
//! -,1   0.5
//! 0,0   2
//! 0,1   1.5
//! 1,0   2.5
//! 1,1   2.25
//! ```
//!
//! Without `+` entries the domain is every partial assignment (at most one
//! action per agent); with them it is every subset of the ground set. Every
//! subset of the domain must appear exactly once.

use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::submodular::{canonical, display_set, GroundElement, SetFunction};

/// Largest ground set a full-powerset table may declare.
pub const MAX_TABLE_GROUND: usize = 20;

/// Exact lookup set function over a small ground set.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularInstance {
    ground: Vec<GroundElement>,
    action_counts: Vec<usize>,
    powerset: bool,
    values: HashMap<u64, f64>,
}

fn action_counts_of(ground: &[GroundElement]) -> Vec<usize> {
    let agents = ground.iter().map(|e| e.agent + 1).max().unwrap_or(0);
    let mut counts = vec![0; agents];
    for e in ground {
        counts[e.agent] = counts[e.agent].max(e.action + 1);
    }
    counts
}

impl TabularInstance {
    /// `powerset` selects the domain: all subsets of `ground`, or only those
    /// with at most one element per agent.
    pub fn new(
        ground: Vec<GroundElement>,
        entries: impl IntoIterator<Item = (Vec<GroundElement>, f64)>,
        powerset: bool,
    ) -> Result<Self> {
        let ground = canonical(ground);
        if ground.len() > 64 || (powerset && ground.len() > MAX_TABLE_GROUND) {
            return Err(Error::CapExceeded {
                size: ground.len() as u128,
                cap: if powerset { MAX_TABLE_GROUND as u128 } else { 64 },
            });
        }
        let action_counts = action_counts_of(&ground);
        let mut table = Self {
            ground,
            action_counts,
            powerset,
            values: HashMap::new(),
        };
        for (subset, value) in entries {
            let mask = table.mask_of(&canonical(subset.clone()))?;
            if !table.in_domain(mask) {
                return Err(Error::InvalidArgument(format!(
                    "subset {} gives one agent several actions; such rows need a `+` table",
                    display_set(&subset)
                )));
            }
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "value {value} of subset {} is not a finite non-negative number",
                    display_set(&subset)
                )));
            }
            if table.values.insert(mask, value).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "subset {} listed twice",
                    display_set(&subset)
                )));
            }
        }
        match table.values.get(&0) {
            Some(&v) if v != 0.0 => return Err(Error::NotNormalized(v)),
            _ => {}
        }
        table.check_complete()?;
        Ok(table)
    }

    /// Tabulates `f` over the whole domain.
    pub fn from_fn(
        ground: Vec<GroundElement>,
        powerset: bool,
        mut f: impl FnMut(&[GroundElement]) -> f64,
    ) -> Result<Self> {
        let ground = canonical(ground);
        let n = ground.len();
        if n > 64 || (powerset && n > MAX_TABLE_GROUND) {
            return Self::new(ground, [], powerset);
        }
        let mut entries = Vec::new();
        let probe = Self {
            action_counts: action_counts_of(&ground),
            ground: ground.clone(),
            powerset,
            values: HashMap::new(),
        };
        for mask in probe.domain_masks() {
            let subset: Vec<_> = (0..n).filter(|k| mask & (1 << k) != 0).map(|k| ground[k]).collect();
            let v = f(&subset);
            entries.push((subset, v));
        }
        Self::new(ground, entries, powerset)
    }

    /// Parses the text format described in the module docs.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut agents = None;
        let mut powerset = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse { line: line_no, message };
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() < 2 {
                return Err(parse_err("expected `<entries> <value>`".into()));
            }
            let value_text = tokens[tokens.len() - 1];
            let value: f64 = value_text
                .parse()
                .map_err(|_| parse_err(format!("`{value_text}` is not a number")))?;
            let assignment = tokens[..tokens.len() - 1].concat();
            let fields: Vec<&str> = assignment.split(',').collect();
            match agents {
                None => agents = Some(fields.len()),
                Some(n) if n != fields.len() => {
                    return Err(parse_err(format!("{} entries, earlier lines have {n}", fields.len())));
                }
                _ => {}
            }
            let mut subset = Vec::new();
            for (agent, field) in fields.iter().enumerate() {
                if *field == "-" {
                    continue;
                }
                if field.contains('+') {
                    powerset = true;
                }
                for part in field.split('+') {
                    let action: usize = part
                        .parse()
                        .map_err(|_| parse_err(format!("`{field}` is not an action entry")))?;
                    subset.push(GroundElement::new(agent, action));
                }
            }
            let sorted = canonical(subset.clone());
            if sorted.len() != subset.len() {
                return Err(parse_err(format!("`{assignment}` repeats an action")));
            }
            rows.push((line_no, sorted, value));
        }
        let agents = agents.ok_or(Error::Parse {
            line: 0,
            message: "table has no rows".into(),
        })?;
        let mut counts = vec![0usize; agents];
        for (_, subset, _) in &rows {
            for e in subset {
                counts[e.agent] = counts[e.agent].max(e.action + 1);
            }
        }
        let ground: Vec<GroundElement> = counts
            .iter()
            .enumerate()
            .flat_map(|(i, &n)| (0..n).map(move |a| GroundElement::new(i, a)))
            .collect();
        if let Some(i) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Parse {
                line: 0,
                message: format!("agent {i} never takes an action"),
            });
        }
        Self::new(ground, rows.into_iter().map(|(_, s, v)| (s, v)), powerset)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Writes the table in the text format, one row per subset in mask order.
    pub fn to_text(&self) -> String {
        let mut masks: Vec<u64> = self.values.keys().copied().collect();
        masks.sort_unstable();
        let mut out = String::new();
        for mask in masks {
            let fields: Vec<String> = (0..self.agent_count())
                .map(|i| {
                    let acts: Vec<String> = self
                        .ground
                        .iter()
                        .enumerate()
                        .filter(|(k, e)| e.agent == i && mask & (1 << k) != 0)
                        .map(|(_, e)| e.action.to_string())
                        .collect();
                    if acts.is_empty() {
                        "-".to_string()
                    } else {
                        acts.join("+")
                    }
                })
                .collect();
            out.push_str(&format!("{} {}\n", fields.join(","), self.values[&mask]));
        }
        out
    }

    pub fn ground(&self) -> &[GroundElement] {
        &self.ground
    }

    pub fn agent_count(&self) -> usize {
        self.action_counts.len()
    }

    pub fn action_counts(&self) -> &[usize] {
        &self.action_counts
    }

    /// Whether subsets with several actions per agent are tabulated.
    pub fn is_powerset(&self) -> bool {
        self.powerset
    }

    fn mask_of(&self, subset: &[GroundElement]) -> Result<u64> {
        let mut mask = 0u64;
        for e in subset {
            let k = self.ground.binary_search(e).map_err(|_| Error::OutOfRange {
                agent: e.agent,
                action: e.action,
            })?;
            mask |= 1 << k;
        }
        Ok(mask)
    }

    fn in_domain(&self, mask: u64) -> bool {
        if self.powerset {
            return true;
        }
        let mut seen = vec![false; self.agent_count()];
        for (k, e) in self.ground.iter().enumerate() {
            if mask & (1 << k) != 0 {
                if seen[e.agent] {
                    return false;
                }
                seen[e.agent] = true;
            }
        }
        true
    }

    fn domain_masks(&self) -> Vec<u64> {
        if self.powerset {
            return (0..1u64 << self.ground.len()).collect();
        }
        let mut masks = vec![0u64];
        for agent in 0..self.agent_count() {
            let bits: Vec<u64> = self
                .ground
                .iter()
                .enumerate()
                .filter(|(_, e)| e.agent == agent)
                .map(|(k, _)| 1u64 << k)
                .collect();
            masks = masks
                .iter()
                .flat_map(|&m| std::iter::once(m).chain(bits.iter().map(move |b| m | b)))
                .collect();
        }
        masks.sort_unstable();
        masks
    }

    fn check_complete(&self) -> Result<()> {
        let expected: u128 = if self.powerset {
            1u128 << self.ground.len()
        } else {
            self.action_counts.iter().map(|&n| n as u128 + 1).product()
        };
        if self.values.len() as u128 == expected {
            return Ok(());
        }
        let missing = self
            .domain_masks()
            .into_iter()
            .find(|m| !self.values.contains_key(m))
            .expect("fewer rows than domain size");
        let subset: Vec<_> = (0..self.ground.len())
            .filter(|k| missing & (1 << k) != 0)
            .map(|k| self.ground[k])
            .collect();
        Err(Error::MissingSubset(display_set(&subset)))
    }
}

impl SetFunction for TabularInstance {
    fn value(&self, elements: &[GroundElement]) -> Result<f64> {
        let mask = self.mask_of(elements)?;
        self.values
            .get(&mask)
            .copied()
            .ok_or_else(|| Error::MissingSubset(display_set(elements)))
    }

    fn upper_bound(&self) -> f64 {
        self.values.values().copied().fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::{brute_force_optimum, Assignment, DEFAULT_ENUMERATION_CAP};

    const TWO_BY_TWO: &str = "\
# two agents, two actions each
-,-   0
0,-   1
1,-   2
-,0   1
-,1   0.5
0,0   2
0,1   1.5
1,0   2.5
1,1   2.25
";

    #[test]
    fn parses_partial_assignment_table() {
        let t = TabularInstance::parse(TWO_BY_TWO).unwrap();
        assert_eq!(t.action_counts(), &[2, 2]);
        assert!(!t.is_powerset());
        let a = Assignment::from_actions(&[1, 0]);
        assert_eq!(t.value(a.elements()).unwrap(), 2.5);
        assert_eq!(t.value(&[GroundElement::new(1, 1)]).unwrap(), 0.5);
        assert!(matches!(
            t.value(&[GroundElement::new(0, 0), GroundElement::new(0, 1)]),
            Err(Error::MissingSubset(_))
        ));
        assert_eq!(TabularInstance::parse(&t.to_text()).unwrap(), t);
    }

    #[test]
    fn singleton_ground_with_zero_empty_set() {
        let t = TabularInstance::parse("- 0\n0 0\n").unwrap();
        assert_eq!(t.value(&[]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_unnormalized_table() {
        assert!(matches!(TabularInstance::parse("- 1\n0 2\n"), Err(Error::NotNormalized(v)) if v == 1.0));
    }

    #[test]
    fn rejects_incomplete_and_malformed_tables() {
        let missing = TWO_BY_TWO.replace("1,1   2.25\n", "");
        assert!(matches!(TabularInstance::parse(&missing), Err(Error::MissingSubset(s)) if s.contains("0:1") && s.contains("1:1")));
        assert!(matches!(TabularInstance::parse("-,- 0\n0 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(TabularInstance::parse("- 0\nx 1\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(TabularInstance::parse("- 0\n0 one\n"), Err(Error::Parse { line: 2, .. })));
        assert!(TabularInstance::parse("- 0\n0 1\n0 1\n").is_err());
        assert!(TabularInstance::parse("- 0\n0 -1\n").is_err());
    }

    #[test]
    fn powerset_tables_use_plus_entries() {
        let t = TabularInstance::parse("- 0\n0 1\n1 1\n0+1 1.5\n").unwrap();
        assert!(t.is_powerset());
        assert_eq!(
            t.value(&[GroundElement::new(0, 0), GroundElement::new(0, 1)]).unwrap(),
            1.5
        );
    }

    #[test]
    fn three_element_optimum_by_hand() {
        // f over three agents with one action each; 8 subsets
        let text = "\
-,-,- 0
0,-,- 3
-,0,- 2
-,-,0 2
0,0,- 4
0,-,0 5
-,0,0 3
0,0,0 5.5
";
        let t = TabularInstance::parse(text).unwrap();
        let (best, v) = brute_force_optimum(&t, t.action_counts(), DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(v, 5.5);
        assert_eq!(best, Assignment::from_actions(&[0, 0, 0]));
    }

    #[test]
    fn from_fn_tabulates_the_domain() {
        let ground: Vec<_> = (0..2).flat_map(|i| (0..2).map(move |a| GroundElement::new(i, a))).collect();
        let t = TabularInstance::from_fn(ground.clone(), false, |s| s.len() as f64).unwrap();
        assert_eq!(t.values.len(), 9);
        let p = TabularInstance::from_fn(ground, true, |s| s.len() as f64).unwrap();
        assert_eq!(p.values.len(), 16);
    }
}
