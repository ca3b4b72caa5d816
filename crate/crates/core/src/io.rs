//! Newick text for trees and weighted trees.
//!
//! Leaves are written as their label and children in order of least
//! element, e.g. `((1:0.5,2:0.25):1,3:0):2;`. Lengths carry 12 significant
//! digits.

use crate::combinatorics::{FragmentationTree, Label};
use crate::error::{Error, Result};
use crate::weighted_trees::WeightedTree;

fn fmt_length(x: f64) -> String {
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

fn write_node(t: &FragmentationTree, i: usize, lengths: Option<&[f64]>, out: &mut String) {
    let kids = t.children_of(i);
    if kids.is_empty() {
        out.push_str(&t.vertex(i)[0].to_string());
    } else {
        out.push('(');
        for (j, &c) in kids.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            write_node(t, c, lengths, out);
        }
        out.push(')');
    }
    if let Some(ls) = lengths {
        out.push(':');
        out.push_str(&fmt_length(ls[i]));
    }
}

/// Shape only.
pub fn tree_to_newick(t: &FragmentationTree) -> String {
    let mut out = String::new();
    write_node(t, 0, None, &mut out);
    out.push(';');
    out
}

/// Shape with a length on every vertex, the root included.
pub fn to_newick(w: &WeightedTree) -> String {
    let mut out = String::new();
    write_node(w.tree(), 0, Some(w.lengths()), &mut out);
    out.push(';');
    out
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    vertices: Vec<(Vec<Label>, f64)>,
}

impl Parser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Newick(format!("{msg} at byte {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &str {
        let start = self.pos;
        while self.pos < self.s.len() && f(self.s[self.pos]) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos]).expect("ascii slice")
    }

    fn length(&mut self) -> Result<f64> {
        if self.peek() != Some(b':') {
            return Ok(0.0);
        }
        self.pos += 1;
        self.skip_ws();
        let text = self.take_while(|c| c.is_ascii_digit() || matches!(c, b'.' | b'e' | b'E' | b'+' | b'-'));
        text.parse::<f64>()
            .map_err(|_| Error::Newick(format!("bad length {text:?}")))
    }

    /// Parses one subtree and returns its labels.
    fn node(&mut self) -> Result<Vec<Label>> {
        let labels = if self.peek() == Some(b'(') {
            self.pos += 1;
            let mut labels = Vec::new();
            let mut count = 0;
            loop {
                labels.extend(self.node()?);
                count += 1;
                match self.peek() {
                    Some(b',') => self.pos += 1,
                    Some(b')') => {
                        self.pos += 1;
                        break;
                    }
                    _ => return Err(self.err("expected ',' or ')'")),
                }
            }
            if count < 2 {
                return Err(self.err("internal vertex with a single child"));
            }
            labels
        } else {
            self.skip_ws();
            let text = self.take_while(|c| c.is_ascii_digit());
            if text.is_empty() {
                return Err(self.err("expected a leaf label"));
            }
            let x: Label = text
                .parse()
                .map_err(|_| Error::Newick(format!("label {text:?} out of range")))?;
            vec![x]
        };
        let len = self.length()?;
        self.vertices.push((labels.clone(), len));
        Ok(labels)
    }
}

/// Parses Newick text; absent lengths are read as 0.
pub fn parse_newick(text: &str) -> Result<WeightedTree> {
    let mut p = Parser {
        s: text.as_bytes(),
        pos: 0,
        vertices: Vec::new(),
    };
    p.node()?;
    if p.peek() != Some(b';') {
        return Err(p.err("expected ';'"));
    }
    p.pos += 1;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    let mut vs: Vec<Vec<Label>> = p.vertices.iter().map(|(v, _)| v.clone()).collect();
    for v in &mut vs {
        v.sort_unstable();
    }
    let count = vs.len();
    let tree = FragmentationTree::new(vs.clone()).map_err(|e| Error::Newick(e.to_string()))?;
    if tree.vertices().len() != count {
        return Err(Error::Newick("repeated leaf label".into()));
    }
    let map = vs.into_iter().zip(p.vertices.iter().map(|(_, l)| *l)).collect();
    WeightedTree::from_map(tree, &map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::GroundSet;

    #[test]
    fn writes_shapes() {
        let cat = FragmentationTree::caterpillar(&GroundSet::range(3));
        assert_eq!(tree_to_newick(&cat), "((1,2),3);");
        let star = FragmentationTree::star(&GroundSet::range(3));
        assert_eq!(tree_to_newick(&star), "(1,2,3);");
    }

    #[test]
    fn round_trip() {
        let cat = FragmentationTree::caterpillar(&GroundSet::range(3));
        let w = WeightedTree::new(cat, vec![2.0, 1.0, 0.5, 0.25, 0.0]).unwrap();
        let text = to_newick(&w);
        assert_eq!(text, "((1:0.5,2:0.25):1,3:0):2;");
        assert_eq!(parse_newick(&text).unwrap(), w);
    }

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_length(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_length(0.3), "0.3");
        assert_eq!(fmt_length(123456.7890123456), "123456.789012");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_newick("((1,2),3)").is_err());
        assert!(parse_newick("((1),2);").is_err());
        assert!(parse_newick("(1,1);").is_err());
        assert!(parse_newick("(1,x);").is_err());
        assert!(parse_newick("(1,2);;").is_err());
    }

    #[test]
    fn tolerates_whitespace_and_missing_lengths() {
        let w = parse_newick(" ( 1 , (2,3) :0.5 ) ; ").unwrap();
        assert_eq!(w.length_of(&[2, 3]), 0.5);
        assert_eq!(w.root_length(), 0.0);
    }
}
