//! Text form of relations, e.g.
//! `c5[i=1,j=2]: z1* z2 - q z2 z1* - (1-q^2) eps1 eps2 q^(rho1+rho2) z4 z3* = 0`.

use super::{Coeff, Family, Letter, NCPoly, Relation, RelationError};

fn fmt_qpow(c: &Coeff) -> Option<String> {
    if c.rho.is_empty() {
        return match c.qexp {
            0 => None,
            1 => Some("q".into()),
            e if e > 0 => Some(format!("q^{e}")),
            e => Some(format!("q^({e})")),
        };
    }
    let mut parts = Vec::new();
    if c.qexp != 0 {
        parts.push(c.qexp.to_string());
    }
    let mut i = 0;
    while i < c.rho.len() {
        let r = c.rho[i];
        let mult = c.rho[i..].iter().take_while(|&&x| x == r).count();
        parts.push(if mult == 1 { format!("rho{r}") } else { format!("{mult}rho{r}") });
        i += mult;
    }
    Some(format!("q^({})", parts.join("+")))
}

fn fmt_body(c: &Coeff, word: &[Letter]) -> String {
    let mut parts = Vec::new();
    if c.num.abs() != 1 {
        parts.push(c.num.abs().to_string());
    }
    match c.one_minus_q2 {
        0 => {}
        1 => parts.push("(1-q^2)".into()),
        m => parts.push(format!("(1-q^2)^{m}")),
    }
    parts.extend(c.eps.iter().map(|e| format!("eps{e}")));
    parts.extend(fmt_qpow(c));
    parts.extend(word.iter().map(|l| format!("z{}{}", l.index, if l.star { "*" } else { "" })));
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

pub fn format_poly(p: &NCPoly) -> String {
    if p.terms.is_empty() {
        return "0".into();
    }
    let mut out = String::new();
    for (k, (c, w)) in p.terms.iter().enumerate() {
        let neg = c.num < 0;
        match (k, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(&fmt_body(c, w));
    }
    out
}

/// `family[i=..,j=..]: poly = 0`.
pub fn format_relation(r: &Relation) -> String {
    let names = r.family.index_names();
    let head = if r.indices.is_empty() {
        r.family.to_string()
    } else {
        let parts: Vec<String> = r
            .indices
            .iter()
            .enumerate()
            .map(|(k, i)| format!("{}={i}", names.get(k).copied().unwrap_or("k")))
            .collect();
        format!("{}[{}]", r.family, parts.join(","))
    };
    format!("{head}: {} = 0", format_poly(&r.poly))
}

fn perr(msg: impl Into<String>) -> RelationError {
    RelationError::Parse(msg.into())
}

fn parse_index(s: &str, prefix: &str) -> Option<usize> {
    s.strip_prefix(prefix)?.parse().ok().filter(|&i| i > 0)
}

fn parse_exponent(s: &str, c: &mut Coeff) -> Result<(), RelationError> {
    let inner = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).unwrap_or(s);
    let inner = inner.replace('-', "+-");
    for part in inner.split('+').filter(|p| !p.is_empty()) {
        if let Some(pos) = part.find("rho") {
            let mult: usize = match &part[..pos] {
                "" => 1,
                m => m.parse().map_err(|_| perr(format!("bad multiplicity in `{s}`")))?,
            };
            let r = parse_index(&part[pos..], "rho").ok_or_else(|| perr(format!("bad rho in `{s}`")))?;
            c.rho.extend(std::iter::repeat_n(r, mult));
        } else {
            c.qexp += part.parse::<i32>().map_err(|_| perr(format!("bad exponent `{s}`")))?;
        }
    }
    c.rho.sort_unstable();
    Ok(())
}

fn parse_body(s: &str, negative: bool) -> Result<(Coeff, Vec<Letter>), RelationError> {
    let mut c = Coeff::int(1);
    let mut word = Vec::new();
    for tok in s.split_whitespace() {
        if let Some(m) = tok.strip_prefix("(1-q^2)") {
            c.one_minus_q2 += match m {
                "" => 1,
                _ => m
                    .strip_prefix('^')
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| perr(format!("bad token `{tok}`")))?,
            };
        } else if let Some(e) = parse_index(tok, "eps") {
            c.eps.push(e);
        } else if tok == "q" {
            c.qexp += 1;
        } else if let Some(e) = tok.strip_prefix("q^") {
            parse_exponent(e, &mut c)?;
        } else if let Some(z) = tok.strip_prefix('z') {
            let (idx, star) = match z.strip_suffix('*') {
                Some(x) => (x, true),
                None => (z, false),
            };
            let index =
                idx.parse().ok().filter(|&i: &usize| i > 0).ok_or_else(|| perr(format!("bad letter `{tok}`")))?;
            word.push(Letter { index, star });
        } else if let Ok(k) = tok.parse::<i64>() {
            c.num *= k;
        } else {
            return Err(perr(format!("unrecognized token `{tok}`")));
        }
    }
    c.eps.sort_unstable();
    if negative {
        c.num = -c.num;
    }
    Ok((c, word))
}

fn parse_poly(s: &str) -> Result<NCPoly, RelationError> {
    let s = s.trim();
    let mut poly = NCPoly::default();
    if s == "0" {
        return Ok(poly);
    }
    let (mut rest, mut negative) = match s.strip_prefix('-') {
        Some(r) => (r, true),
        None => (s, false),
    };
    loop {
        let plus = rest.find(" + ");
        let minus = rest.find(" - ");
        let cut = match (plus, minus) {
            (Some(a), Some(b)) => Some((a.min(b), a < b)),
            (Some(a), None) => Some((a, true)),
            (None, Some(b)) => Some((b, false)),
            (None, None) => None,
        };
        match cut {
            Some((pos, is_plus)) => {
                let (c, w) = parse_body(&rest[..pos], negative)?;
                poly.push(c, &w);
                negative = !is_plus;
                rest = &rest[pos + 3..];
            }
            None => {
                let (c, w) = parse_body(rest, negative)?;
                poly.push(c, &w);
                return Ok(poly);
            }
        }
    }
}

/// Parses the text produced by [`format_relation`].
pub fn parse_relation(s: &str) -> Result<Relation, RelationError> {
    let (head, body) = s.split_once(':').ok_or_else(|| perr("missing `:`"))?;
    let body = body.trim();
    let poly_text = body.strip_suffix("= 0").ok_or_else(|| perr("relation must end with `= 0`"))?;
    let head = head.trim();
    let (fam, idx) = match head.split_once('[') {
        Some((f, rest)) => (f, Some(rest.strip_suffix(']').ok_or_else(|| perr("unclosed `[`"))?)),
        None => (head, None),
    };
    let family: Family = fam.parse()?;
    let mut indices = Vec::new();
    if let Some(idx) = idx {
        for part in idx.split(',') {
            let (_, v) = part.split_once('=').ok_or_else(|| perr(format!("bad index `{part}`")))?;
            indices.push(v.trim().parse().map_err(|_| perr(format!("bad index `{part}`")))?);
        }
    }
    Ok(Relation { family, indices, poly: parse_poly(poly_text)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relations::build_presentation;

    #[test]
    fn c5_text() {
        let rels = build_presentation(2);
        let r = rels.iter().find(|r| r.family == Family::C5 && r.indices == [1, 2]).unwrap();
        let s = format_relation(r);
        assert_eq!(s, "c5[i=1,j=2]: z1* z2 - q z2 z1* - (1-q^2) eps1 eps2 q^(rho1+rho2) z4 z3* = 0");
        assert_eq!(&parse_relation(&s).unwrap(), r);
    }

    #[test]
    fn c8_and_c7_text() {
        let rels = build_presentation(2);
        let c8 = rels.iter().find(|r| r.family == Family::C8).unwrap();
        assert_eq!(format_relation(c8), "c8: z1 z1* + z2 z2* + z3 z3* + z4 z4* - 1 = 0");
        let c7 = rels.iter().find(|r| r.family == Family::C7 && r.indices == [1]).unwrap();
        assert_eq!(
            format_relation(c7),
            "c7[i=1]: z1* z1 - z1 z1* - (1-q^2) q^(2rho1) z4 z4* - (1-q^2) z2 z2* - (1-q^2) z3 z3* - (1-q^2) z4 z4* = 0"
        );
    }

    #[test]
    fn every_relation_round_trips() {
        for n in 1..=3 {
            for r in build_presentation(n) {
                let s = format_relation(&r);
                assert_eq!(parse_relation(&s).unwrap(), r, "{s}");
            }
        }
    }

    #[test]
    fn negative_exponents() {
        let r = parse_relation("c2[i=3]: z3 z2 - q^2 z2 z3 + (1-q^2) q^(-1) z4 z1 = 0").unwrap();
        assert_eq!(r.poly.terms[2].0.qexp, -1);
        assert!(parse_relation("c9: z1 = 0").is_err());
        assert!(parse_relation("c1[i=2,j=1]: z2 w1 = 0").is_err());
    }
}
