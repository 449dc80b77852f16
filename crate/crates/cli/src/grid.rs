//! Grid syntax: comma-separated items, each a value `v`, a linear range
//! `lo:hi:N` or a log range `lo:hi:Nlog`. An empty string is an empty grid.

pub fn parse_grid(spec: &str) -> Result<Vec<f64>, String> {
    let mut out = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.extend(parse_item(item)?);
    }
    Ok(out)
}

fn number(s: &str, item: &str) -> Result<f64, String> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| format!("bad number '{s}' in grid item '{item}'"))
}

fn parse_item(item: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = item.split(':').collect();
    match parts.as_slice() {
        [v] => Ok(vec![number(v, item)?]),
        [lo, hi, count] => {
            let (lo, hi) = (number(lo, item)?, number(hi, item)?);
            let (count, log) = match count.trim().strip_suffix("log") {
                Some(c) => (c, true),
                None => (count.trim(), false),
            };
            let count: usize = count
                .parse()
                .map_err(|_| format!("bad point count in grid item '{item}'"))?;
            if log && !(lo > 0.0 && hi > 0.0) {
                return Err(format!("log grid '{item}' needs positive bounds"));
            }
            let at = |i: usize| {
                let s = if count == 1 {
                    0.0
                } else {
                    i as f64 / (count - 1) as f64
                };
                if log {
                    10f64.powf(lo.log10() + s * (hi.log10() - lo.log10()))
                } else {
                    lo + s * (hi - lo)
                }
            };
            Ok((0..count).map(at).collect())
        }
        _ => Err(format!(
            "grid item '{item}' is not v, lo:hi:N or lo:hi:Nlog"
        )),
    }
}
