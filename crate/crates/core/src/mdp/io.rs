use std::fmt::Write as _;
use std::path::Path;

use std::sync::Arc;

use super::{LatentMdp, LatentMdpBuilder, Policy, Reward, Rule, TabularRule};
use crate::error::{Error, Result};
use crate::textfmt::{fmt_f64, parse_f64, parse_usize};

const MAGIC: &str = "# latent-mdp v1";
const POLICY_MAGIC: &str = "# tabular-policy v1";

/// Render `mdp` in the plain-text schema.
///
/// ```text
/// # latent-mdp v1
/// horizon L
/// states S_0 ... S_{L-1}
/// actions A
/// reward_range lo hi
/// initial p_0 ... p_{S_0 - 1}
/// transition h s a k next_1 p_1 ... next_k p_k     (row-major over h, s, a)
/// reward h s a value prob                          (row-major over h, s, a)
/// ```
pub fn write_mdp(mdp: &LatentMdp) -> String {
    let mut out = String::new();
    let a_count = mdp.num_actions();
    writeln!(out, "{MAGIC}").unwrap();
    writeln!(out, "horizon {}", mdp.horizon()).unwrap();
    let states: Vec<String> = mdp.state_counts().iter().map(|s| s.to_string()).collect();
    writeln!(out, "states {}", states.join(" ")).unwrap();
    writeln!(out, "actions {a_count}").unwrap();
    let (lo, hi) = mdp.reward_range();
    writeln!(out, "reward_range {} {}", fmt_f64(lo), fmt_f64(hi)).unwrap();
    let init: Vec<String> = mdp.initial().iter().map(|&p| fmt_f64(p)).collect();
    writeln!(out, "initial {}", init.join(" ")).unwrap();
    for h in 0..mdp.horizon().saturating_sub(1) {
        for s in 0..mdp.num_states(h) {
            for a in 0..a_count {
                let row = mdp.transition(h, s, a);
                write!(out, "transition {h} {s} {a} {}", row.len()).unwrap();
                for &(n, p) in row {
                    write!(out, " {n} {}", fmt_f64(p)).unwrap();
                }
                out.push('\n');
            }
        }
    }
    for h in 0..mdp.horizon() {
        for s in 0..mdp.num_states(h) {
            for a in 0..a_count {
                let r = mdp.reward(h, s, a);
                writeln!(out, "reward {h} {s} {a} {} {}", fmt_f64(r.value), fmt_f64(r.prob)).unwrap();
            }
        }
    }
    out
}

fn expect_key<'a>(line: Option<&'a str>, key: &str) -> Result<Vec<&'a str>> {
    let line = line.ok_or_else(|| Error::Parse(format!("missing {key} line")))?;
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some(key) {
        return Err(Error::Parse(format!("expected {key} line, found {line:?}")));
    }
    Ok(tokens.collect())
}

pub fn parse_mdp(text: &str) -> Result<LatentMdp> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(MAGIC) {
        return Err(Error::Parse("missing latent-mdp header".into()));
    }
    let horizon = parse_usize(expect_key(lines.next(), "horizon")?.first().copied().unwrap_or(""))?;
    let states = expect_key(lines.next(), "states")?
        .into_iter()
        .map(parse_usize)
        .collect::<Result<Vec<_>>>()?;
    if states.len() != horizon {
        return Err(Error::Parse(format!("{} state counts for horizon {horizon}", states.len())));
    }
    let actions = parse_usize(expect_key(lines.next(), "actions")?.first().copied().unwrap_or(""))?;
    let range = expect_key(lines.next(), "reward_range")?;
    if range.len() != 2 {
        return Err(Error::Parse("reward_range needs two numbers".into()));
    }
    let initial = expect_key(lines.next(), "initial")?
        .into_iter()
        .map(parse_f64)
        .collect::<Result<Vec<_>>>()?;
    let mut b = LatentMdpBuilder::new(states.clone(), actions)
        .initial(initial)
        .reward_range(parse_f64(range[0])?, parse_f64(range[1])?);
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let idx = |i: usize| -> Result<usize> { parse_usize(tokens.get(i).copied().unwrap_or("")) };
        let (h, s, a) = (idx(1)?, idx(2)?, idx(3)?);
        if h >= horizon || s >= states[h] || a >= actions {
            return Err(Error::Parse(format!("index out of range: {line:?}")));
        }
        match tokens[0] {
            "transition" => {
                if h + 1 >= horizon {
                    return Err(Error::Parse(format!("transition at last level: {line:?}")));
                }
                let k = idx(4)?;
                if tokens.len() != 5 + 2 * k {
                    return Err(Error::Parse(format!("transition row length: {line:?}")));
                }
                let row = (0..k)
                    .map(|j| Ok((parse_usize(tokens[5 + 2 * j])?, parse_f64(tokens[6 + 2 * j])?)))
                    .collect::<Result<Vec<_>>>()?;
                b.transition(h, s, a, row);
            }
            "reward" => {
                if tokens.len() != 6 {
                    return Err(Error::Parse(format!("reward row length: {line:?}")));
                }
                b.reward(h, s, a, Reward {
                    value: parse_f64(tokens[4])?,
                    prob: parse_f64(tokens[5])?,
                });
            }
            other => return Err(Error::Parse(format!("unknown record {other:?}"))),
        }
    }
    b.build()
}

pub fn save_mdp(mdp: &LatentMdp, path: &Path) -> Result<()> {
    std::fs::write(path, write_mdp(mdp))?;
    Ok(())
}

pub fn load_mdp(path: &Path) -> Result<LatentMdp> {
    parse_mdp(&std::fs::read_to_string(path)?)
}

/// Tabulate a per-level policy over latent states `0..states[h]`.
///
/// ```text
/// # tabular-policy v1
/// start h0
/// actions A
/// level h S
/// p_0 ... p_{A-1}        (one row per state)
/// ```
pub fn write_policy(policy: &Policy<usize>, states: &[usize]) -> Result<String> {
    let rules = policy
        .rules()
        .ok_or_else(|| Error::Unsupported("only per-level policies can be tabulated".into()))?;
    let start = policy.start();
    if start + rules.len() > states.len() {
        return Err(Error::PolicyDomain(start + rules.len() - 1));
    }
    let actions = rules.first().map(|r| r.num_actions()).unwrap_or(0);
    let mut out = String::new();
    writeln!(out, "{POLICY_MAGIC}").unwrap();
    writeln!(out, "start {start}").unwrap();
    writeln!(out, "actions {actions}").unwrap();
    for (i, rule) in rules.iter().enumerate() {
        let h = start + i;
        let table = TabularRule::tabulate(rule.as_ref(), states[h]);
        writeln!(out, "level {h} {}", states[h]).unwrap();
        for row in table.table() {
            let cells: Vec<String> = row.iter().map(|&p| fmt_f64(p)).collect();
            writeln!(out, "{}", cells.join(" ")).unwrap();
        }
    }
    Ok(out)
}

pub fn parse_policy(text: &str) -> Result<Policy<usize>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some(POLICY_MAGIC) {
        return Err(Error::Parse("missing tabular-policy header".into()));
    }
    let start = parse_usize(expect_key(lines.next(), "start")?.first().copied().unwrap_or(""))?;
    let actions = parse_usize(expect_key(lines.next(), "actions")?.first().copied().unwrap_or(""))?;
    let mut rules: Vec<Rule<usize>> = vec![];
    while let Some(line) = lines.next() {
        let head = expect_key(Some(line), "level")?;
        if head.len() != 2 || parse_usize(head[0])? != start + rules.len() {
            return Err(Error::Parse(format!("unexpected level line {line:?}")));
        }
        let count = parse_usize(head[1])?;
        let rows = (0..count)
            .map(|_| {
                let row = lines.next().ok_or_else(|| Error::Parse("truncated policy table".into()))?;
                row.split_whitespace().map(parse_f64).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        rules.push(Arc::new(TabularRule::new(actions, rows)?));
    }
    Ok(Policy::new(start, rules))
}

pub fn save_policy(policy: &Policy<usize>, states: &[usize], path: &Path) -> Result<()> {
    std::fs::write(path, write_policy(policy, states)?)?;
    Ok(())
}

pub fn load_policy(path: &Path) -> Result<Policy<usize>> {
    parse_policy(&std::fs::read_to_string(path)?)
}
