//! Number formatting and grid parsing for CSV output.

/// `x` rounded to `digits` significant figures, plain decimal where the
/// magnitude allows it.
pub fn sig(x: f64, digits: usize) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let exp: i32 = sci.rsplit('e').next().unwrap().parse().unwrap();
    if !(-5..=17).contains(&exp) {
        return sci;
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

/// Geometric grid `lo:hi:factor`: start at `lo`, multiply by `factor`
/// (rounding, always advancing by at least 1) while not above `hi`.
pub fn parse_range(text: &str) -> Result<Vec<u64>, String> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("--n-range expects lo:hi:step, got {text:?}"));
    }
    let lo = crate::parse_u64(parts[0])?;
    let hi = crate::parse_u64(parts[1])?;
    let step: f64 = parts[2]
        .parse()
        .map_err(|e| format!("bad step {:?}: {e}", parts[2]))?;
    if !(step >= 1.0) {
        return Err(format!("step must be >= 1, got {step}"));
    }
    let mut out = Vec::new();
    let mut n = lo.max(1);
    while n <= hi {
        out.push(n);
        let next = (n as f64 * step).round() as u64;
        n = next.max(n + 1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(sig(2.0306390622295662, 4), "2.031");
        assert_eq!(sig(277534.2, 4), "277534");
        assert_eq!(sig(0.7213475, 6), "0.721348");
        assert_eq!(sig(9.99996, 4), "10.00");
        assert_eq!(sig(9.313e-8, 4), "9.313e-8");
        assert_eq!(sig(0.0, 6), "0");
        assert_eq!(sig(-1.5e-3, 2), "-0.0015");
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:10:2").unwrap(), vec![1, 2, 4, 8]);
        assert_eq!(parse_range("5:8:1").unwrap(), vec![5, 6, 7, 8]);
        assert!(parse_range("10:5:2").unwrap().is_empty());
        assert!(parse_range("1:5").is_err());
        assert!(parse_range("1:5:0.5").is_err());
    }
}
