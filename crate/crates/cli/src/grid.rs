use std::str::FromStr;

/// Evenly spaced samples along one coordinate: `start:stop:n` or one value.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis(pub Vec<f64>);

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("`{t}` is not a finite number"))
        };
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [v] => Ok(Axis(vec![num(v)?])),
            [a, b, n] => {
                let (a, b) = (num(a)?, num(b)?);
                let n: usize = n.trim().parse().map_err(|_| format!("`{n}` is not a count"))?;
                match n {
                    0 => Err("sample count must be at least 1".into()),
                    1 => Ok(Axis(vec![a])),
                    _ => Ok(Axis(
                        (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
                    )),
                }
            }
            _ => Err(format!("expected `start:stop:n` or a value, got `{s}`")),
        }
    }
}

/// Comma-separated list of exactly `N` numbers.
pub fn parse_list<const N: usize>(s: &str, what: &str) -> anyhow::Result<[f64; N]> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("{what}: {e}"))?;
    vals.try_into()
        .map_err(|v: Vec<f64>| anyhow::anyhow!("{what}: expected {N} values, got {}", v.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_forms() {
        assert_eq!("0.5".parse::<Axis>().unwrap().0, vec![0.5]);
        assert_eq!("0:1:3".parse::<Axis>().unwrap().0, vec![0.0, 0.5, 1.0]);
        assert_eq!("-1e-3:1e-3:1".parse::<Axis>().unwrap().0, vec![-1e-3]);
        assert!("0:1".parse::<Axis>().is_err());
        assert!("0:1:0".parse::<Axis>().is_err());
        assert!("a:1:2".parse::<Axis>().is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list::<3>("1, 0,-2", "v").unwrap(), [1.0, 0.0, -2.0]);
        assert!(parse_list::<3>("1,2", "v").is_err());
        assert!(parse_list::<4>("1,2,x,4", "v").is_err());
    }
}
