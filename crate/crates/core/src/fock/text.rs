//! Canonical text form of expressions.
//!
//! A term prints as ` * `-joined parts: the coefficient (omitted when it is
//! exactly 1 and something else follows), scalar factors `q^{e}` and
//! `sqrt(1-q^{c})`, then per-factor primitives tagged with a 1-based factor
//! index, e.g. `-2 * q^{3} * q^{2N+2}@1 * S*@2`. Terms are joined by ` + `;
//! the zero expression prints as `0`.

use num_complex::Complex64 as C64;

use super::expr::{make_scalar, DiagFn, OperatorExpr, Primitive, TermKey, Word};
use super::space::Mode;
use super::FockError;

fn fmt_linear(a: i32, b: i32) -> String {
    let mut s = match a {
        0 => return b.to_string(),
        1 => "N".to_string(),
        -1 => "-N".to_string(),
        _ => format!("{a}N"),
    };
    if b != 0 {
        s.push_str(&format!("{b:+}"));
    }
    s
}

fn fmt_coeff(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else {
        format!("({}{:+}i)", c.re, c.im)
    }
}

fn fmt_word(w: &Word, f: usize, out: &mut Vec<String>) {
    let d = w.diag();
    if let Some((a, b)) = d.qpow() {
        out.push(format!("q^{{{}}}@{f}", fmt_linear(a, b)));
    }
    for (a, b) in d.roots() {
        out.push(format!("sqrt(1-q^{{{}}})@{f}", fmt_linear(a, b)));
    }
    if let Some(i) = d.proj() {
        out.push(format!("p_{i}@{f}"));
    }
    // [N >= a] = S*^a S^a
    match d.lower() {
        Some(1) => out.extend([format!("S*@{f}"), format!("S@{f}")]),
        Some(a) if a > 1 => out.extend([format!("S*^{a}@{f}"), format!("S^{a}@{f}")]),
        _ => {}
    }
    let s = w.shift();
    let base = if s > 0 { "S*" } else { "S" };
    match s.unsigned_abs() {
        0 => {}
        1 => out.push(format!("{base}@{f}")),
        k => out.push(format!("{base}^{k}@{f}")),
    }
}

fn fmt_term(key: &TermKey, c: C64) -> String {
    let mut parts = Vec::new();
    if key.scalar.qexp() != 0 {
        parts.push(format!("q^{{{}}}", key.scalar.qexp()));
    }
    for r in key.scalar.roots() {
        parts.push(format!("sqrt(1-q^{{{r}}})"));
    }
    for (f, w) in key.words.iter().enumerate() {
        fmt_word(w, f + 1, &mut parts);
    }
    if parts.is_empty() || c != C64::new(1.0, 0.0) {
        parts.insert(0, fmt_coeff(c));
    }
    parts.join(" * ")
}

/// Canonical text of an expression.
pub fn format_expr(e: &OperatorExpr) -> String {
    if e.is_zero() {
        return "0".to_string();
    }
    e.terms().map(|(k, &c)| fmt_term(k, c)).collect::<Vec<_>>().join(" + ")
}

fn perr(msg: impl Into<String>) -> FockError {
    FockError::Parse(msg.into())
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T, FockError> {
    s.parse().map_err(|_| perr(format!("bad integer `{s}`")))
}

fn parse_linear(s: &str) -> Result<(i32, i32), FockError> {
    match s.find('N') {
        None => Ok((0, parse_int(s)?)),
        Some(pos) => {
            let a = match &s[..pos] {
                "" => 1,
                "-" => -1,
                x => parse_int(x)?,
            };
            let rest = &s[pos + 1..];
            let b = if rest.is_empty() { 0 } else { parse_int(rest.trim_start_matches('+'))? };
            Ok((a, b))
        }
    }
}

fn parse_coeff(s: &str) -> Option<C64> {
    if let Some(inner) = s.strip_prefix('(').and_then(|x| x.strip_suffix("i)")) {
        // split at the sign of the imaginary part (not an exponent sign)
        let bytes = inner.as_bytes();
        let split = (1..bytes.len()).rev().find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && bytes[i - 1] != b'e')?;
        let re = inner[..split].parse().ok()?;
        let im = inner[split..].parse().ok()?;
        return Some(C64::new(re, im));
    }
    s.parse::<f64>().ok().map(|x| C64::new(x, 0.0))
}

fn braced<'a>(s: &'a str, prefix: &str, suffix: &str) -> Option<&'a str> {
    s.strip_prefix(prefix)?.strip_suffix(suffix)
}

fn parse_primitive(s: &str) -> Result<Vec<Primitive>, FockError> {
    if let Some(x) = braced(s, "q^{", "}") {
        let (slope, offset) = parse_linear(x)?;
        return Ok(vec![Primitive::Diag(DiagFn::QPow { slope, offset })]);
    }
    if let Some(x) = braced(s, "sqrt(1-q^{", "})") {
        let (slope, offset) = parse_linear(x)?;
        return Ok(vec![Primitive::Diag(DiagFn::Sq1m { slope, offset })]);
    }
    if let Some(x) = s.strip_prefix("p_") {
        return Ok(vec![Primitive::Proj(parse_int(x)?)]);
    }
    let (base, rest) = if let Some(r) = s.strip_prefix("S*") {
        (Primitive::CoShift, r)
    } else if let Some(r) = s.strip_prefix('S') {
        (Primitive::Shift, r)
    } else if s == "1" {
        return Ok(vec![Primitive::Id]);
    } else {
        return Err(perr(format!("unknown primitive `{s}`")));
    };
    let k: usize = if rest.is_empty() {
        1
    } else {
        parse_int(rest.strip_prefix('^').ok_or_else(|| perr(format!("bad shift `{s}`")))?)?
    };
    Ok(vec![base; k])
}

fn parse_term(s: &str, modes: &[Mode]) -> Result<OperatorExpr, FockError> {
    let mut coeff = C64::new(1.0, 0.0);
    let mut qexp = 0i32;
    let mut roots = Vec::new();
    let mut words: Vec<Vec<Primitive>> = vec![Vec::new(); modes.len()];
    for (idx, tok) in s.split(" * ").enumerate() {
        let tok = tok.trim();
        if let Some((prim, f)) = tok.rsplit_once('@') {
            let f: usize = parse_int(f)?;
            if f == 0 || f > modes.len() {
                return Err(perr(format!("factor index {f} out of range in `{tok}`")));
            }
            words[f - 1].extend(parse_primitive(prim)?);
        } else if let Some(x) = braced(tok, "q^{", "}") {
            qexp += parse_int::<i32>(x)?;
        } else if let Some(x) = braced(tok, "sqrt(1-q^{", "})") {
            roots.push(parse_int::<i32>(x)?);
        } else if let (0, Some(c)) = (idx, parse_coeff(tok)) {
            coeff = c;
        } else {
            return Err(perr(format!("unrecognized token `{tok}`")));
        }
    }
    let mut scalar = OperatorExpr::zero(modes);
    for (sign, sc) in make_scalar(qexp, &roots) {
        scalar.add_term(TermKey { scalar: sc, words: vec![Word::identity(); modes.len()] }, C64::new(sign, 0.0));
    }
    let body = modes
        .iter()
        .zip(&words)
        .fold(OperatorExpr::scalar(coeff), |acc, (&m, w)| acc.tensor(&OperatorExpr::word(m, w)));
    scalar.compose(&body)
}

/// Parses the canonical text form on factors of the given modes.
pub fn parse_expr(s: &str, modes: &[Mode]) -> Result<OperatorExpr, FockError> {
    let s = s.trim();
    let mut out = OperatorExpr::zero(modes);
    if s == "0" {
        return Ok(out);
    }
    for term in s.split(" + ") {
        out = out.add(&parse_term(term, modes)?)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_mixed_term() {
        let e = OperatorExpr::tensor_word(&[
            (Mode::Int, &[Primitive::CoShift]),
            (Mode::Nat, &[Primitive::Diag(DiagFn::Sq1m { slope: 2, offset: 2 }), Primitive::Shift]),
        ])
        .scale(C64::new(-1.0, 0.0))
        .scale_qpow(2);
        assert_eq!(format_expr(&e), "-1 * q^{2} * S*@1 * sqrt(1-q^{2N+2})@2 * S@2");
        assert_eq!(parse_expr(&format_expr(&e), e.modes()).unwrap(), e);
    }

    #[test]
    fn zero_and_identity() {
        let z = OperatorExpr::zero(&[Mode::Nat]);
        assert_eq!(format_expr(&z), "0");
        assert_eq!(format_expr(&OperatorExpr::identity(&[Mode::Nat])), "1");
        assert_eq!(parse_expr("1", &[Mode::Nat]).unwrap(), OperatorExpr::identity(&[Mode::Nat]));
    }

    #[test]
    fn complex_coefficient_round_trip() {
        let e = OperatorExpr::word(Mode::Nat, &[Primitive::Proj(2)]).scale(C64::new(0.5, -1.25e-3));
        let s = format_expr(&e);
        assert_eq!(parse_expr(&s, &[Mode::Nat]).unwrap(), e);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_expr("S@3", &[Mode::Nat]).is_err());
        assert!(parse_expr("T@1", &[Mode::Nat]).is_err());
    }
}
