//! Report files. Each CSV may start with a `# generated` timestamp line;
//! everything after it depends only on the configuration and seed.

use std::fs;
use std::io;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::run::{CheckRow, Outcome};

#[derive(Clone, Copy, Debug)]
pub struct Header {
    pub timestamp: bool,
}

impl Header {
    fn prefix(&self) -> Vec<u8> {
        if !self.timestamp {
            return Vec::new();
        }
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        format!("# generated unix {secs}\n").into_bytes()
    }

    fn write(&self, path: &Path, body: &[u8]) -> io::Result<()> {
        let mut bytes = self.prefix();
        bytes.extend_from_slice(body);
        fs::write(path, bytes)
    }
}

/// Writes `<out>/<scenario>/<file>` for each outcome and `<out>/summary.csv`.
pub fn write_outcomes(out: &Path, outcomes: &[Outcome], header: Header) -> io::Result<()> {
    fs::create_dir_all(out)?;
    let mut summary = b"scenario,check,pass,fail,max_gap\n".to_vec();
    for o in outcomes {
        let dir = out.join(&o.scenario);
        fs::create_dir_all(&dir)?;
        for (name, body) in &o.files {
            let mut bytes = format!("# scenario {} kind {} seed {}\n", o.scenario, o.kind.name(), o.seed).into_bytes();
            bytes.extend_from_slice(body);
            header.write(&dir.join(name), &bytes)?;
        }
        for c in &o.checks {
            summary.extend(format!("{},{},{},{},{:e}\n", o.scenario, c.check, c.pass, c.fail, c.max_gap).bytes());
        }
    }
    header.write(&out.join("summary.csv"), &summary)
}

/// Terminal lines for one outcome.
pub fn describe(o: &Outcome) -> Vec<String> {
    let failed = o.failed();
    let mut lines = vec![format!(
        "{} {} ({}): {} checks, {} failing comparisons",
        if failed == 0 { "PASS" } else { "FAIL" },
        o.scenario,
        o.kind.name(),
        o.checks.len(),
        failed
    )];
    for c in &o.checks {
        let mark = if c.fail == 0 { "ok  " } else { "FAIL" };
        lines.push(format!("  {mark} {:<36} pass {:>5} fail {:>5} max_gap {:.3e}", c.check, c.pass, c.fail, c.max_gap));
    }
    lines.extend(o.notes.iter().map(|n| format!("  {n}")));
    lines
}

/// One rung of a convergence ladder.
#[derive(Clone, Debug)]
pub struct Rung {
    pub n: usize,
    pub checks: Vec<CheckRow>,
}

/// Gaps at or below this are rounding noise.
const FLOOR: f64 = 1e-12;

fn regime(prev: f64, gap: f64, rate: f64) -> &'static str {
    if gap <= FLOOR && prev <= FLOOR {
        "floor"
    } else if gap <= FLOOR {
        "converged"
    } else if rate.abs() <= 0.05 {
        "plateau"
    } else if rate > 0.0 {
        "converging"
    } else {
        "growing"
    }
}

/// `check,n,max_gap,rate,regime`, with `rate` in decimal digits gained per
/// added node.
pub fn ladder_csv(rungs: &[Rung]) -> Vec<u8> {
    let mut body = b"check,n,max_gap,rate,regime\n".to_vec();
    let Some(first) = rungs.first() else {
        return body;
    };
    for c in &first.checks {
        let mut prev: Option<(usize, f64)> = None;
        for r in rungs {
            let Some(gap) = r.checks.iter().find(|x| x.check == c.check).map(|x| x.max_gap) else {
                continue;
            };
            let (rate, label) = match prev {
                None => (String::new(), "-"),
                Some((n0, g0)) => {
                    let rate = (g0.max(f64::MIN_POSITIVE) / gap.max(f64::MIN_POSITIVE)).log10() / (r.n - n0) as f64;
                    (format!("{rate:.4}"), regime(g0, gap, rate))
                }
            };
            body.extend(format!("{},{},{:e},{rate},{label}\n", c.check, r.n, gap).bytes());
            prev = Some((r.n, gap));
        }
    }
    body
}

pub fn write_ladder(out: &Path, name: &str, body: &[u8], header: Header) -> io::Result<()> {
    let dir = out.join(name);
    fs::create_dir_all(&dir)?;
    header.write(&dir.join("ladder.csv"), body)
}
