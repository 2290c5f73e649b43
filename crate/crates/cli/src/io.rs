//! Snapshot files, initial-data specs and CSV output.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use fracflow_core::verify::random_field;
use fracflow_core::{GridSpec, PeriodicField};

/// Snapshot text: one header line `# n=<dim> m=<points> alpha=<α> t=<time>`
/// followed by the nodal values, one per line, in flat index order (axis 0
/// fastest).
pub fn snapshot_text(f: &PeriodicField, alpha: f64, t: f64) -> String {
    let g = f.grid();
    let mut s = format!("# n={} m={} alpha={} t={}\n", g.dim(), g.points_per_axis(), alpha, t);
    for v in f.values() {
        let _ = writeln!(s, "{v:.17e}");
    }
    s
}

pub struct Snapshot {
    pub field: PeriodicField,
    pub alpha: f64,
    pub t: f64,
}

pub fn parse_snapshot(text: &str) -> Result<Snapshot> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty snapshot"))?;
    let header = header.strip_prefix('#').ok_or_else(|| anyhow!("snapshot header must start with `#`"))?;
    let (mut n, mut m, mut alpha, mut t) = (None, None, None, None);
    for tok in header.split_whitespace() {
        let (k, v) = tok.split_once('=').ok_or_else(|| anyhow!("bad header token `{tok}`"))?;
        match k {
            "n" => n = Some(v.parse::<usize>()?),
            "m" => m = Some(v.parse::<usize>()?),
            "alpha" => alpha = Some(v.parse::<f64>()?),
            "t" => t = Some(v.parse::<f64>()?),
            _ => bail!("unknown header key `{k}`"),
        }
    }
    let grid = GridSpec::new(n.ok_or_else(|| anyhow!("header lacks n"))?, m.ok_or_else(|| anyhow!("header lacks m"))?)
        .map_err(|e| anyhow!("{e}"))?;
    let values = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| anyhow!("bad value `{l}`")))
        .collect::<Result<Vec<_>>>()?;
    let field = PeriodicField::new(grid, values).map_err(|e| anyhow!("{e}"))?;
    Ok(Snapshot { field, alpha: alpha.unwrap_or(f64::NAN), t: t.unwrap_or(0.0) })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_snapshot(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Initial data from either a snapshot path or a `;`-separated term list:
/// `c@<value>` (constant), `<k1>[,<k2>]@<amp>[@<phase>]` (cosine mode) or
/// `random@<amp>` (seeded band-limited field).
pub fn initial_field(spec: &str, grid: GridSpec, seed: u64) -> Result<PeriodicField> {
    let path = Path::new(spec);
    if path.is_file() {
        let s = read_snapshot(path)?;
        if s.field.grid() != grid {
            bail!("snapshot grid does not match the configured grid");
        }
        eprintln!("initial data: snapshot at t = {} (written with alpha = {})", s.t, s.alpha);
        return Ok(s.field);
    }
    let mut modes = Vec::new();
    let mut constant = 0.0;
    let mut extra: Option<PeriodicField> = None;
    for term in spec.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let parts: Vec<&str> = term.split('@').collect();
        let num = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("bad number `{s}` in `{term}`"));
        match parts.as_slice() {
            ["c", v] => constant += num(v)?,
            ["random", a] => {
                let r = random_field(grid, seed, num(a)?);
                extra = Some(match extra {
                    Some(e) => e.zip_with(&r, |x, y| x + y).map_err(|e| anyhow!("{e}"))?,
                    None => r,
                });
            }
            [k, rest @ ..] if !rest.is_empty() && rest.len() <= 2 => {
                let ks: Vec<i64> = k.split(',').map(|x| x.trim().parse::<i64>()).collect::<Result<_, _>>().map_err(|_| anyhow!("bad wave vector in `{term}`"))?;
                if ks.len() != grid.dim() {
                    bail!("wave vector `{k}` does not match dimension {}", grid.dim());
                }
                let kv = [ks[0], if grid.dim() == 2 { ks[1] } else { 0 }];
                let phase = if rest.len() == 2 { num(rest[1])? } else { 0.0 };
                modes.push((kv, num(rest[0])?, phase));
            }
            _ => bail!("cannot parse initial-data term `{term}`"),
        }
    }
    let mut f = PeriodicField::from_modes(grid, &modes).map(|x| x + constant);
    if let Some(e) = extra {
        f = f.zip_with(&e, |x, y| x + y).map_err(|e| anyhow!("{e}"))?;
    }
    Ok(f)
}

/// Formats a CSV row; numbers use Rust's locale-independent formatting.
pub fn csv_row(cells: &[f64]) -> String {
    let mut s = cells.iter().map(|v| format!("{v:.17e}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip() {
        let g = GridSpec::new(2, 8).unwrap();
        let f = PeriodicField::from_modes(g, &[([1, 2], 0.3, 0.1)]);
        let s = parse_snapshot(&snapshot_text(&f, 0.5, 0.25)).unwrap();
        assert_eq!(s.field, f);
        assert_eq!((s.alpha, s.t), (0.5, 0.25));
        assert!(parse_snapshot("# n=1 m=8\n1\n2\n").is_err());
    }

    #[test]
    fn mode_specs() {
        let g = GridSpec::new(1, 16).unwrap();
        let f = initial_field("c@0.5; 3@0.01", g, 1).unwrap();
        let want = PeriodicField::from_modes(g, &[([3, 0], 0.01, 0.0)]).map(|x| x + 0.5);
        assert_eq!(f, want);
        assert!(initial_field("3,1@0.1", g, 1).is_err());
        assert!(initial_field("nonsense", g, 1).is_err());
        let r = initial_field("random@0.2", g, 4).unwrap();
        assert_eq!(r, initial_field("random@0.2", g, 4).unwrap());
    }
}
