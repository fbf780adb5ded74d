//! Value parsers for the command-line flags. They take untrusted text and
//! never panic.

use std::fmt;

fn number(s: &str) -> Result<f64, String> {
    let t = s.trim();
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{t}` is not a finite number")),
    }
}

/// Comma-separated finite numbers, at least one.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    if s.trim().is_empty() {
        return Err("empty list".into());
    }
    s.split(',').map(number).collect()
}

/// A comma-separated list given as one flag value.
#[derive(Debug, Clone, PartialEq)]
pub struct List(pub Vec<f64>);

pub fn parse_list_arg(s: &str) -> Result<List, String> {
    parse_list(s).map(List)
}

/// Exactly three comma-separated numbers.
pub fn parse_point(s: &str) -> Result<[f64; 3], String> {
    let v = parse_list(s)?;
    <[f64; 3]>::try_from(v.as_slice())
        .map_err(|_| format!("expected three coordinates `x1,x2,x3`, got {}", v.len()))
}

/// Exactly two comma-separated positive numbers.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    match parse_list(s)?.as_slice() {
        &[a, b] if a > 0.0 && b > 0.0 => Ok((a, b)),
        &[_, _] => Err("both values must be positive".into()),
        v => Err(format!("expected two values `eps,eta`, got {}", v.len())),
    }
}

/// `name=value`.
pub fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected `name=value`, got `{s}`"))?;
    let name = name.trim();
    let ok = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if !ok {
        return Err(format!("invalid parameter name `{name}`"));
    }
    Ok((name.to_string(), number(value)?))
}

/// Largest number of samples accepted on one grid axis.
pub const MAX_AXIS: usize = 100_000;

/// Largest number of grid points.
pub const MAX_GRID: usize = 1_000_000;

/// `start:end:n` with `n` evenly spaced samples, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub end: f64,
    pub n: usize,
}

impl Axis {
    pub fn value(&self, i: usize) -> f64 {
        if self.n == 1 {
            self.start
        } else {
            self.start + (self.end - self.start) * i as f64 / (self.n - 1) as f64
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.n)
    }
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, n] = parts[..] else {
        return Err(format!("axis `{s}` must look like start:end:n"));
    };
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| format!("sample count `{}` is not a positive integer", n.trim()))?;
    if n == 0 || n > MAX_AXIS {
        return Err(format!("sample count must be between 1 and {MAX_AXIS}, got {n}"));
    }
    Ok(Axis { start: number(a)?, end: number(b)?, n })
}

/// `a0:a1:n,b0:b1:m` over `(α, β)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub alpha: Axis,
    pub beta: Axis,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.alpha.n * self.beta.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major: `α` varies slowest.
    pub fn point(&self, index: usize) -> (f64, f64) {
        (self.alpha.value(index / self.beta.n), self.beta.value(index % self.beta.n))
    }
}

pub fn parse_grid(s: &str) -> Result<Grid, String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "grid must look like a0:a1:n,b0:b1:m".to_string())?;
    let grid = Grid { alpha: parse_axis(a)?, beta: parse_axis(b)? };
    if grid.len() > MAX_GRID {
        return Err(format!("grid has {} points, more than {MAX_GRID}", grid.len()));
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_points() {
        assert_eq!(parse_list("0.1, 0.05,1e-2").unwrap(), vec![0.1, 0.05, 0.01]);
        assert_eq!(parse_point("0.5,0.5,0").unwrap(), [0.5, 0.5, 0.0]);
        assert!(parse_point("1,2").is_err());
        assert!(parse_list("").is_err());
        assert!(parse_list("1,,2").is_err());
        assert!(parse_list("nan").is_err());
        assert!(parse_pair("0.1,0").is_err());
        assert_eq!(parse_pair("0.1,0.2").unwrap(), (0.1, 0.2));
    }

    #[test]
    fn params() {
        assert_eq!(parse_param("alpha=-0.06").unwrap(), ("alpha".into(), -0.06));
        assert!(parse_param("alpha").is_err());
        assert!(parse_param("1a=2").is_err());
        assert!(parse_param("a=x").is_err());
    }

    #[test]
    fn grids() {
        let g = parse_grid("-0.06:-0.06:1,0.04:0.04:1").unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.point(0), (-0.06, 0.04));
        let g = parse_grid("0:1:3,-1:1:5").unwrap();
        assert_eq!(g.len(), 15);
        assert_eq!(g.point(0), (0.0, -1.0));
        assert_eq!(g.point(7), (0.5, 0.0));
        assert_eq!(g.point(14), (1.0, 1.0));
        for bad in ["0:1:3", "0:1:0,0:1:1", "0:1,0:1:2", "a:1:2,0:1:2", "0:1:2:3,0:1:1", "0:1:1000000,0:1:1", "0:1:2000,0:1:2000"] {
            assert!(parse_grid(bad).is_err(), "{bad}");
        }
    }
}
