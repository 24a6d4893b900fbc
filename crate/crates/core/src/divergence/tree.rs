//! Ordered labeled trees in bracketed notation and the Zhang–Shasha edit distance.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParseTree {
    pub label: String,
    pub children: Vec<ParseTree>,
}

#[derive(Debug, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

fn lex(input: &str) -> Vec<Tok<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in input.char_indices() {
        if c == '(' || c == ')' || c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok::Atom(&input[s..i]));
            }
            match c {
                '(' => out.push(Tok::Open),
                ')' => out.push(Tok::Close),
                _ => {}
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok::Atom(&input[s..]));
    }
    out
}

impl ParseTree {
    pub fn leaf(label: impl Into<String>) -> Self {
        ParseTree {
            label: label.into(),
            children: Vec::new(),
        }
    }

    pub fn node(label: impl Into<String>, children: Vec<ParseTree>) -> Self {
        ParseTree {
            label: label.into(),
            children,
        }
    }

    /// Parses `tree := "(" label tree* ")" | label`, requiring a single root.
    pub fn parse(input: &str) -> Result<ParseTree> {
        let toks = lex(input);
        let mut stack: Vec<ParseTree> = Vec::new();
        let mut root: Option<ParseTree> = None;
        let mut i = 0;
        while i < toks.len() {
            if root.is_some() {
                return Err(Error::TreeParse("content after the root tree".into()));
            }
            match toks[i] {
                Tok::Open => match toks.get(i + 1) {
                    Some(Tok::Atom(label)) => {
                        stack.push(ParseTree::leaf(*label));
                        i += 1;
                    }
                    _ => return Err(Error::TreeParse("expected a label after '('".into())),
                },
                Tok::Close => {
                    let done = stack
                        .pop()
                        .ok_or_else(|| Error::TreeParse("unbalanced ')'".into()))?;
                    match stack.last_mut() {
                        Some(parent) => parent.children.push(done),
                        None => root = Some(done),
                    }
                }
                Tok::Atom(label) => match stack.last_mut() {
                    Some(parent) => parent.children.push(ParseTree::leaf(label)),
                    None => root = Some(ParseTree::leaf(label)),
                },
            }
            i += 1;
        }
        if !stack.is_empty() {
            return Err(Error::TreeParse("unclosed '('".into()));
        }
        root.ok_or_else(|| Error::TreeParse("empty tree".into()))
    }

    pub fn node_count(&self) -> usize {
        1 + self.children.iter().map(ParseTree::node_count).sum::<usize>()
    }

    /// Number of levels; a single node has depth 1.
    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(ParseTree::depth).max().unwrap_or(0)
    }

    /// Keeps only nodes at levels `1..=max_level` (the root is level 1).
    pub fn truncate(&self, max_level: usize) -> ParseTree {
        assert!(max_level >= 1, "max_level must be at least 1");
        ParseTree {
            label: self.label.clone(),
            children: if max_level == 1 {
                Vec::new()
            } else {
                self.children
                    .iter()
                    .map(|c| c.truncate(max_level - 1))
                    .collect()
            },
        }
    }
}

impl fmt::Display for ParseTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.children.is_empty() {
            return write!(f, "({})", self.label);
        }
        write!(f, "({}", self.label)?;
        for c in &self.children {
            write!(f, " {c}")?;
        }
        write!(f, ")")
    }
}

impl std::str::FromStr for ParseTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ParseTree::parse(s)
    }
}

pub fn truncate_tree(tree: &ParseTree, max_level: usize) -> Result<ParseTree> {
    if max_level == 0 {
        return Err(Error::InvalidArgument("max_level must be at least 1".into()));
    }
    Ok(tree.truncate(max_level))
}

/// Postorder view: labels, leftmost-leaf indices and keyroots.
struct Postorder<'a> {
    labels: Vec<&'a str>,
    lmd: Vec<usize>,
    keyroots: Vec<usize>,
}

impl<'a> Postorder<'a> {
    fn new(tree: &'a ParseTree) -> Self {
        let mut labels = Vec::new();
        let mut lmd = Vec::new();
        // (node, next child to visit, leftmost leaf of first child once known)
        let mut stack: Vec<(&ParseTree, usize, Option<usize>)> = vec![(tree, 0, None)];
        while let Some(top) = stack.last_mut() {
            let (node, next, _) = *top;
            if next < node.children.len() {
                top.1 += 1;
                stack.push((&node.children[next], 0, None));
                continue;
            }
            let (node, _, first_leaf) = stack.pop().expect("non-empty");
            let idx = labels.len();
            let leftmost = first_leaf.unwrap_or(idx);
            labels.push(node.label.as_str());
            lmd.push(leftmost);
            if let Some(parent) = stack.last_mut() {
                if parent.2.is_none() {
                    parent.2 = Some(leftmost);
                }
            }
        }
        let n = labels.len();
        let mut keyroots = Vec::new();
        let mut seen = vec![false; n];
        for i in (0..n).rev() {
            if !seen[lmd[i]] {
                seen[lmd[i]] = true;
                keyroots.push(i);
            }
        }
        keyroots.reverse();
        Postorder {
            labels,
            lmd,
            keyroots,
        }
    }
}

/// Unit-cost ordered tree edit distance (insert, delete, relabel).
pub fn tree_edit_distance(a: &ParseTree, b: &ParseTree) -> usize {
    let pa = Postorder::new(a);
    let pb = Postorder::new(b);
    let (na, nb) = (pa.labels.len(), pb.labels.len());
    let mut treedist = vec![vec![0usize; nb]; na];
    let mut forest = vec![vec![0usize; nb + 1]; na + 1];

    for &i in &pa.keyroots {
        for &j in &pb.keyroots {
            let (li, lj) = (pa.lmd[i], pb.lmd[j]);
            let (rows, cols) = (i - li + 1, j - lj + 1);
            forest[0][0] = 0;
            for x in 1..=rows {
                forest[x][0] = forest[x - 1][0] + 1;
            }
            for y in 1..=cols {
                forest[0][y] = forest[0][y - 1] + 1;
            }
            for x in 1..=rows {
                let i1 = li + x - 1;
                for y in 1..=cols {
                    let j1 = lj + y - 1;
                    let delete = forest[x - 1][y] + 1;
                    let insert = forest[x][y - 1] + 1;
                    if pa.lmd[i1] == li && pb.lmd[j1] == lj {
                        let relabel = usize::from(pa.labels[i1] != pb.labels[j1]);
                        let v = delete.min(insert).min(forest[x - 1][y - 1] + relabel);
                        forest[x][y] = v;
                        treedist[i1][j1] = v;
                    } else {
                        let (p, q) = (pa.lmd[i1] - li, pb.lmd[j1] - lj);
                        forest[x][y] = delete.min(insert).min(forest[p][q] + treedist[i1][j1]);
                    }
                }
            }
        }
    }
    treedist[na - 1][nb - 1]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> ParseTree {
        ParseTree::parse(s).unwrap()
    }

    #[test]
    fn parses_bracketed_trees() {
        let tree = t("(ROOT (S (NP (DT the) (NN cat)) (VP (VBD sat))))");
        assert_eq!(tree.label, "ROOT");
        assert_eq!(tree.node_count(), 10);
        assert_eq!(tree.depth(), 5);
        assert_eq!(t("  word "), ParseTree::leaf("word"));
        assert_eq!(t("(S (NP) (VP))").to_string(), "(S (NP) (VP))");
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "(", "(S (NP)", "(S))", "( (S))", "(A) (B)", "a b"] {
            assert!(ParseTree::parse(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn truncation() {
        let shallow = t("(S (NP) (VP))");
        assert_eq!(shallow.truncate(3), shallow);
        assert_eq!(t("(a (b (c (d))))").truncate(3), t("(a (b (c)))"));
        assert_eq!(t("(a (b (c (d))))").truncate(1), t("a"));
    }

    #[test]
    fn ted_basics() {
        assert_eq!(tree_edit_distance(&t("(S (NP) (VP))"), &t("(S (NP) (VP))")), 0);
        assert_eq!(tree_edit_distance(&t("a"), &t("b")), 1);
        assert_eq!(tree_edit_distance(&t("(S (NP) (VP))"), &t("(S (VP))")), 1);
        assert_eq!(tree_edit_distance(&t("a"), &t("(a (b) (c))")), 2);
    }

    #[test]
    fn ted_classic_example() {
        // Zhang & Shasha's running example: distance 2.
        let a = t("(f (d (a) (c (b))) (e))");
        let b = t("(f (c (d (a) (b))) (e))");
        assert_eq!(tree_edit_distance(&a, &b), 2);
    }
}
