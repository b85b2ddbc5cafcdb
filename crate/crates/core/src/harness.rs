//! Sweeps over `N`, power-law fits and flat-file output.
//!
//! Everything here is fixed to `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{predict_gamma, predict_gamma_custom};
use crate::dynamics::{threshold_bisect, SimConfig};
use crate::error::{domain, Error, Result};
use crate::locking::{locking_threshold_exact, FrequencyRule, FrequencySpec};
use crate::specfun::qrs_constants;

pub const CSV_HEADER: [&str; 6] = [
    "n",
    "rule",
    "gamma_exact",
    "gamma_predicted",
    "gamma_simulated",
    "residual",
];

/// Smallest `|y|` a power-law fit will take a logarithm of.
pub const FIT_FLOOR: f64 = 1e-14;

/// One `(N, rule)` entry of a sweep. A row whose computation failed has NaN
/// values and the failure message in `error`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub rule: String,
    #[serde(with = "nan_as_null")]
    pub gamma_exact: f64,
    #[serde(with = "nan_as_null")]
    pub gamma_predicted: f64,
    pub gamma_simulated: Option<f64>,
    /// `gamma_predicted - gamma_exact`.
    #[serde(with = "nan_as_null")]
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_nan() {
            s.serialize_none()
        } else {
            s.serialize_f64(*x)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

/// Least-squares line through `(ln n, ln |y|)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub used: usize,
    /// Pairs dropped for `|y| < FIT_FLOOR` or a non-finite value.
    pub excluded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Text form of a rule as used in the `rule` column.
pub fn rule_label(rule: &FrequencyRule<f64>) -> String {
    match rule {
        FrequencyRule::SigmaBeta { sigma, beta } => format!("sigma-beta:{sigma}:{beta}"),
        other => other.name().to_string(),
    }
}

/// Inverse of [`rule_label`]; also accepts `sigma-beta` with parameters
/// supplied separately.
pub fn parse_rule(label: &str, sigma_beta: Option<(f64, f64)>) -> Result<FrequencyRule<f64>> {
    let rule = match label {
        "midpoint" => FrequencyRule::Midpoint,
        "endpoint" => FrequencyRule::Endpoint,
        "zeta-corrected" => FrequencyRule::ZetaCorrected,
        "sigma-beta" => match sigma_beta {
            Some((sigma, beta)) => FrequencyRule::SigmaBeta { sigma, beta },
            None => return domain("sigma-beta rule needs sigma and beta"),
        },
        _ => {
            let parts: Vec<&str> = label.split(':').collect();
            match parts.as_slice() {
                ["sigma-beta", s, b] => {
                    let num = |v: &str| {
                        v.parse::<f64>()
                            .map_err(|_| Error::Domain(format!("bad number {v:?} in rule {label:?}")))
                    };
                    FrequencyRule::SigmaBeta {
                        sigma: num(s)?,
                        beta: num(b)?,
                    }
                }
                _ => return domain(format!("unknown rule {label:?}")),
            }
        }
    };
    rule.validate()?;
    Ok(rule)
}

/// `min:max:factor` into `min, min·f, min·f², … ≤ max`.
pub fn parse_geometric_ladder(text: &str) -> Result<Vec<usize>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [lo, hi, f] = parts.as_slice() else {
        return domain(format!("expected min:max:factor, got {text:?}"));
    };
    let int = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| Error::Domain(format!("bad integer {v:?} in {text:?}")))
    };
    let (lo, hi) = (int(lo)?, int(hi)?);
    let factor: f64 = f
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("bad factor {f:?} in {text:?}")))?;
    if lo < 2 || hi < lo {
        return domain(format!("need 2 <= min <= max, got {text:?}"));
    }
    if !(factor > 1.0) || !factor.is_finite() {
        return domain(format!("factor must exceed 1, got {factor}"));
    }
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let v = (lo as f64 * factor.powi(k)).round();
        if v > hi as f64 {
            break;
        }
        let v = v as usize;
        if out.last() != Some(&v) {
            out.push(v);
        }
        k += 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    pub simulate: bool,
    /// Rows with larger `n` skip simulation even when it is requested.
    pub max_sim_n: usize,
    pub sim: SimConfig<f64>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            simulate: false,
            max_sim_n: 256,
            sim: SimConfig::default(),
        }
    }
}

/// Asymptotic estimate of `γ_L` for any rule.
pub fn predicted_gamma(rule: FrequencyRule<f64>, n: usize) -> Result<f64> {
    match rule {
        FrequencyRule::SigmaBeta { sigma, beta } => predict_gamma_custom(sigma, beta, n),
        _ => Ok(predict_gamma(rule, n)?.gamma_l),
    }
}

fn sweep_row(rule: FrequencyRule<f64>, n: usize, opts: &SweepOptions) -> SweepRow {
    let compute = || -> Result<(f64, f64, Option<f64>)> {
        let exact = locking_threshold_exact(&FrequencySpec::new(rule, n, 1.0)?)?.gamma_l;
        let predicted = predicted_gamma(rule, n)?;
        let simulated = if opts.simulate && n <= opts.max_sim_n {
            Some(threshold_bisect(rule, n, &opts.sim)?.gamma_l)
        } else {
            None
        };
        Ok((exact, predicted, simulated))
    };
    let label = rule_label(&rule);
    match compute() {
        Ok((gamma_exact, gamma_predicted, gamma_simulated)) => SweepRow {
            n,
            rule: label,
            gamma_exact,
            gamma_predicted,
            gamma_simulated,
            residual: gamma_predicted - gamma_exact,
            error: None,
        },
        Err(e) => SweepRow {
            n,
            rule: label,
            gamma_exact: f64::NAN,
            gamma_predicted: f64::NAN,
            gamma_simulated: None,
            residual: f64::NAN,
            error: Some(e.to_string()),
        },
    }
}

/// Worker pool honouring `LOCKLAB_THREADS`.
fn pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var("LOCKLAB_THREADS") {
        match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => builder = builder.num_threads(k),
            _ => return domain(format!("LOCKLAB_THREADS must be a positive integer, got {v:?}")),
        }
    }
    builder.build().map_err(|e| Error::Domain(format!("thread pool: {e}")))
}

/// Exact, predicted and optionally simulated thresholds for every
/// `(n, rule)`. Rows come back sorted by `n`, then in the order of `rules`;
/// duplicate `n` values are dropped.
pub fn sweep(rules: &[FrequencyRule<f64>], n_values: &[usize], opts: &SweepOptions) -> Result<Vec<SweepRow>> {
    if n_values.is_empty() || rules.is_empty() {
        return domain("sweep needs at least one n and one rule");
    }
    if let Some(bad) = n_values.iter().find(|&&n| n < 2) {
        return domain(format!("need N >= 2, got {bad}"));
    }
    for rule in rules {
        rule.validate()?;
    }
    if opts.simulate {
        opts.sim.validate()?;
    }
    let mut ns = n_values.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let jobs: Vec<(usize, FrequencyRule<f64>)> = ns.iter().flat_map(|&n| rules.iter().map(move |&r| (n, r))).collect();
    let rows = pool()?.install(|| jobs.par_iter().map(|&(n, r)| sweep_row(r, n, opts)).collect());
    Ok(rows)
}

/// Ordinary least squares on `(ln n, ln |y|)`.
///
/// Logs are taken of `|y| / |y_0|` for the first usable `y_0`, so scaling
/// every `y` by a power of two leaves the exponent bit-identical.
pub fn fit_power_law(pairs: &[(usize, f64)]) -> Result<ScalingFit> {
    let usable: Vec<(usize, f64)> = pairs
        .iter()
        .copied()
        .filter(|&(n, y)| n > 0 && y.is_finite() && y.abs() >= FIT_FLOOR)
        .collect();
    let excluded = pairs.len() - usable.len();
    if usable.len() < 3 {
        return domain(format!(
            "power-law fit needs at least 3 usable pairs, got {} ({excluded} excluded)",
            usable.len()
        ));
    }
    let y0 = usable[0].1.abs();
    let xs: Vec<f64> = usable.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = usable.iter().map(|&(_, y)| (y.abs() / y0).ln()).collect();
    let k = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / k;
    let ym = ys.iter().sum::<f64>() / k;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        let (dx, dy) = (x - xm, y - ym);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return domain("power-law fit needs at least two distinct n");
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(ScalingFit {
        exponent: slope,
        log_prefactor: ym - slope * xm + y0.ln(),
        r_squared,
        n_min: usable.iter().map(|p| p.0).min().unwrap_or(0),
        n_max: usable.iter().map(|p| p.0).max().unwrap_or(0),
        used: usable.len(),
        excluded,
    })
}

/// `(γ_exact - leading terms)·n^{3/2}` for each `n`; tends to
/// `4ζ(-1/2, C₁/2)`. Leading terms are `π/4` (midpoint) and `π/4 - (π/4)/n`
/// (endpoint).
pub fn prefactor_extract(rule: FrequencyRule<f64>, n_values: &[usize]) -> Result<Vec<(usize, f64)>> {
    let q = std::f64::consts::FRAC_PI_4;
    n_values
        .iter()
        .map(|&n| {
            let leading = match rule {
                FrequencyRule::Midpoint => q,
                FrequencyRule::Endpoint => q - q / n as f64,
                _ => {
                    return domain(format!(
                        "prefactor extraction is defined for midpoint and endpoint, not {}",
                        rule.name()
                    ))
                }
            };
            let g = locking_threshold_exact(&FrequencySpec::new(rule, n, 1.0)?)?.gamma_l;
            Ok((n, (g - leading) * (n as f64).powf(1.5)))
        })
        .collect()
}

/// The limit [`prefactor_extract`] converges to.
pub fn prefactor_limit() -> f64 {
    qrs_constants().prefactor()
}

/// `x` with 17 significant digits; round-trips through `str::parse`.
pub fn format_sig17(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.0000000000000000".to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..16).contains(&exp) {
        // re-derive the exponent after rounding, e.g. 9.99…95 -> 10.0…
        let s = format!("{:.16e}", x);
        let e: i32 = s[s.find('e').map_or(s.len(), |i| i + 1)..].parse().unwrap_or(exp);
        format!("{:.*}", (16 - e).max(0) as usize, x)
    } else {
        format!("{:.16e}", x)
    }
}

fn parse_float(field: &str, what: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Domain(format!("bad {what} value {field:?}")))
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut out = CSV_HEADER.join(",");
    out.push('\n');
    for r in rows {
        let sim = r.gamma_simulated.map(format_sig17).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.n,
            r.rule,
            format_sig17(r.gamma_exact),
            format_sig17(r.gamma_predicted),
            sim,
            format_sig17(r.residual)
        );
    }
    Ok(out)
}

pub fn rows_from_csv(text: &str, origin: &Path) -> Result<Vec<SweepRow>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let csv_err = |source| Error::Csv {
        path: origin.to_path_buf(),
        source,
    };
    let header = reader.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CSV_HEADER.iter().copied()) {
        return domain(format!(
            "{}: unexpected header {:?}",
            origin.display(),
            header.iter().collect::<Vec<_>>()
        ));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let rec = record.map_err(csv_err)?;
        let sim = rec[4].trim();
        rows.push(SweepRow {
            n: rec[0]
                .trim()
                .parse()
                .map_err(|_| Error::Domain(format!("bad n value {:?}", &rec[0])))?,
            rule: rec[1].to_string(),
            gamma_exact: parse_float(&rec[2], "gamma_exact")?,
            gamma_predicted: parse_float(&rec[3], "gamma_predicted")?,
            gamma_simulated: if sim.is_empty() {
                None
            } else {
                Some(parse_float(sim, "gamma_simulated")?)
            },
            residual: parse_float(&rec[5], "residual")?,
            error: None,
        });
    }
    Ok(rows)
}

pub fn rows_to_json(rows: &[SweepRow]) -> Result<String> {
    serde_json::to_string_pretty(rows).map_err(|source| Error::Json {
        path: "<memory>".into(),
        source,
    })
}

pub fn rows_from_json(text: &str, origin: &Path) -> Result<Vec<SweepRow>> {
    serde_json::from_str(text).map_err(|source| Error::Json {
        path: origin.to_path_buf(),
        source,
    })
}

pub fn render_rows(rows: &[SweepRow], format: Format) -> Result<String> {
    match format {
        Format::Csv => rows_to_csv(rows),
        Format::Json => rows_to_json(rows),
    }
}

/// Writes rows to `path` in the given format.
pub fn emit_rows(rows: &[SweepRow], format: Format, path: &Path) -> Result<()> {
    write_text(path, &render_rows(rows, format)?)
}

/// Writes a fit to `path` as JSON.
pub fn emit_fit(fit: &ScalingFit, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(fit).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    write_text(path, &(text + "\n"))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads rows from a file, choosing the format from its extension
/// (`.json`, otherwise CSV).
pub fn read_rows(path: &Path) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        rows_from_json(&text, path)
    } else {
        rows_from_csv(&text, path)
    }
}

/// `(n, value)` pairs from a named column, optionally restricted to one rule
/// label and shifted by `subtract`.
pub fn column_pairs(rows: &[SweepRow], column: &str, rule: Option<&str>, subtract: f64) -> Result<Vec<(usize, f64)>> {
    let pick: fn(&SweepRow) -> Option<f64> = match column {
        "gamma_exact" => |r| Some(r.gamma_exact),
        "gamma_predicted" => |r| Some(r.gamma_predicted),
        "gamma_simulated" => |r| r.gamma_simulated,
        "residual" => |r| Some(r.residual),
        _ => return domain(format!("unknown column {column:?}")),
    };
    Ok(rows
        .iter()
        .filter(|r| rule.is_none_or(|l| r.rule == l))
        .filter_map(|r| pick(r).map(|v| (r.n, v - subtract)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn row(n: usize, rule: &str, exact: f64, pred: f64, sim: Option<f64>) -> SweepRow {
        SweepRow {
            n,
            rule: rule.into(),
            gamma_exact: exact,
            gamma_predicted: pred,
            gamma_simulated: sim,
            residual: pred - exact,
            error: None,
        }
    }

    #[test]
    fn two_oscillator_midpoint_row() {
        let rows = sweep(&[FrequencyRule::Midpoint], &[2], &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert!((r.gamma_exact - 1.0).abs() < 1e-13);
        let want = FRAC_PI_4 + prefactor_limit() * 2f64.powf(-1.5);
        assert!((r.gamma_predicted - want).abs() < 1e-15);
        assert_eq!(r.residual, r.gamma_predicted - r.gamma_exact);
        // the solver lands within a few ulp of 1; the format contract uses 1 itself
        let csv = rows_to_csv(&[SweepRow {
            gamma_exact: 1.0,
            ..r.clone()
        }])
        .unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next(),
            Some("n,rule,gamma_exact,gamma_predicted,gamma_simulated,residual")
        );
        let line = lines.next().unwrap();
        assert!(line.starts_with("2,midpoint,1.0000000000000000,"), "{line}");
        assert_eq!(line.split(',').nth(4), Some(""));
    }

    #[test]
    fn large_n_residual_is_tiny() {
        let rows = sweep(&[FrequencyRule::Midpoint], &[10_000], &SweepOptions::default()).unwrap();
        assert!(rows[0].residual.abs() <= 1e-7);
    }

    #[test]
    fn endpoint_rows_are_rescaled_midpoint_rows() {
        let ns = [2, 3, 7, 16, 100, 1000];
        let rows = sweep(
            &[FrequencyRule::Midpoint, FrequencyRule::Endpoint],
            &ns,
            &SweepOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 2 * ns.len());
        for pair in rows.chunks(2) {
            assert_eq!(pair[0].rule, "midpoint");
            assert_eq!(pair[1].rule, "endpoint");
            let n = pair[0].n as f64;
            let want = (1.0 - 1.0 / n) * pair[0].gamma_exact;
            assert!((pair[1].gamma_exact - want).abs() <= 1e-13 * want);
        }
    }

    #[test]
    fn rows_sorted_and_deduplicated() {
        let rows = sweep(&[FrequencyRule::Midpoint], &[64, 4, 16, 4], &SweepOptions::default()).unwrap();
        let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
        assert_eq!(ns, vec![4, 16, 64]);
    }

    #[test]
    fn sweep_rejects_bad_input() {
        assert!(sweep(&[FrequencyRule::Midpoint], &[], &SweepOptions::default()).is_err());
        assert!(sweep(&[FrequencyRule::Midpoint], &[1], &SweepOptions::default()).is_err());
    }

    #[test]
    fn sweep_is_deterministic() {
        let rules = [FrequencyRule::Midpoint, FrequencyRule::ZetaCorrected];
        let ns = parse_geometric_ladder("16:4096:2").unwrap();
        let a = rows_to_csv(&sweep(&rules, &ns, &SweepOptions::default()).unwrap()).unwrap();
        let b = rows_to_csv(&sweep(&rules, &ns, &SweepOptions::default()).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn simulation_column_is_capped() {
        let opts = SweepOptions {
            simulate: true,
            max_sim_n: 2,
            ..SweepOptions::default()
        };
        let rows = sweep(&[FrequencyRule::Endpoint], &[2, 3], &opts).unwrap();
        let sim = rows[0].gamma_simulated.unwrap();
        assert!((sim - 0.5).abs() <= 2e-4, "{sim}");
        assert_eq!(rows[1].gamma_simulated, None);
    }

    #[test]
    fn csv_round_trip() {
        let rows = vec![
            row(2, "midpoint", 1.0, 0.9174435, None),
            row(3, "sigma-beta:1:0.5", 0.1 + 0.2, 1.0 / 3.0, Some(0.12345678901234568)),
            row(1 << 20, "endpoint", 1e-300, 6.02e23, Some(-0.0)),
        ];
        let text = rows_to_csv(&rows).unwrap();
        assert_eq!(rows_from_csv(&text, Path::new("mem.csv")).unwrap(), rows);
        let json = rows_to_json(&rows).unwrap();
        assert_eq!(rows_from_json(&json, Path::new("mem.json")).unwrap(), rows);
    }

    #[test]
    fn file_round_trip_and_io_errors() {
        let dir = tempfile::tempdir().unwrap();
        let rows = sweep(&[FrequencyRule::Midpoint], &[2, 5, 9], &SweepOptions::default()).unwrap();
        for (name, fmt) in [("a.csv", Format::Csv), ("a.json", Format::Json)] {
            let p = dir.path().join(name);
            emit_rows(&rows, fmt, &p).unwrap();
            assert_eq!(read_rows(&p).unwrap(), rows);
        }
        let missing = dir.path().join("nope/a.csv");
        let err = emit_rows(&rows, Format::Csv, &missing).unwrap_err();
        assert!(err.to_string().contains("nope"), "{err}");
        assert!(read_rows(&dir.path().join("absent.csv")).is_err());
    }

    #[test]
    fn empty_outputs() {
        assert_eq!(
            rows_to_csv(&[]).unwrap(),
            "n,rule,gamma_exact,gamma_predicted,gamma_simulated,residual\n"
        );
        let json = rows_to_json(&[]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v, serde_json::json!([]));
    }

    #[test]
    fn failed_rows_carry_a_marker() {
        let failed = SweepRow {
            gamma_exact: f64::NAN,
            gamma_predicted: f64::NAN,
            residual: f64::NAN,
            error: Some("boom".into()),
            ..row(4, "midpoint", 0.0, 0.0, None)
        };
        let json = rows_to_json(std::slice::from_ref(&failed)).unwrap();
        assert!(json.contains("\"error\": \"boom\""));
        let back = rows_from_json(&json, Path::new("m")).unwrap();
        assert!(back[0].gamma_exact.is_nan());
        assert!(rows_to_csv(&[failed]).unwrap().contains("4,midpoint,NaN,NaN,,NaN"));
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_sig17(1.0), "1.0000000000000000");
        assert_eq!(format_sig17(FRAC_PI_4), "0.78539816339744828");
        assert_eq!(format_sig17(-12.5), "-12.500000000000000");
        assert_eq!(format_sig17(1e-9), "1.0000000000000001e-9");
        for x in [0.1, 1.0 / 3.0, 9.999999999999999e5, 123456.789, -7.25e-300, f64::MAX] {
            assert_eq!(format_sig17(x).parse::<f64>().unwrap(), x, "{x}");
        }
    }

    #[test]
    fn ladder_parsing() {
        let ns = parse_geometric_ladder("16:16384:2").unwrap();
        assert_eq!(ns.len(), 11);
        assert_eq!(ns, (0..11).map(|k| 16usize << k).collect::<Vec<_>>());
        assert_eq!(
            parse_geometric_ladder("100:100000:10").unwrap(),
            vec![100, 1000, 10_000, 100_000]
        );
        for bad in ["16:8:2", "1:10:2", "4:64:1", "4:64", "a:b:c"] {
            assert!(parse_geometric_ladder(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rule_labels_round_trip() {
        for rule in [
            FrequencyRule::Midpoint,
            FrequencyRule::Endpoint,
            FrequencyRule::ZetaCorrected,
            FrequencyRule::SigmaBeta {
                sigma: 1.0,
                beta: -0.25,
            },
        ] {
            assert_eq!(parse_rule(&rule_label(&rule), None).unwrap(), rule);
        }
        assert!(parse_rule("sigma-beta", None).is_err());
        assert!(parse_rule("sigma-beta:2:1", None).is_err());
        assert!(parse_rule("trapezoid", None).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let pairs: Vec<(usize, f64)> = (1..=12)
            .map(|k| (1usize << k, 7.0 * ((1usize << k) as f64).powf(-1.5)))
            .collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.exponent + 1.5).abs() < 1e-12);
        assert!((fit.log_prefactor - 7f64.ln()).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert_eq!((fit.n_min, fit.n_max, fit.used, fit.excluded), (2, 4096, 12, 0));
    }

    #[test]
    fn fit_scaling_invariance() {
        let pairs: Vec<(usize, f64)> = (4..=14)
            .map(|k| {
                let n = 1usize << k;
                (n, 0.37 * (n as f64).powf(-1.5) * (1.0 + 0.3 / (n as f64).sqrt()))
            })
            .collect();
        let base = fit_power_law(&pairs).unwrap();
        for c in [8.0, 0.25, 1024.0] {
            let scaled: Vec<(usize, f64)> = pairs.iter().map(|&(n, y)| (n, c * y)).collect();
            let fit = fit_power_law(&scaled).unwrap();
            assert_eq!(fit.exponent.to_bits(), base.exponent.to_bits());
            assert!((fit.log_prefactor - base.log_prefactor - f64::ln(c)).abs() < 1e-12);
        }
        let scaled: Vec<(usize, f64)> = pairs.iter().map(|&(n, y)| (n, 7.0 * y)).collect();
        assert!((fit_power_law(&scaled).unwrap().exponent - base.exponent).abs() < 1e-14);
    }

    #[test]
    fn fit_exclusions() {
        let pairs = [(2, 1.0), (4, 0.0), (8, 1e-15), (16, f64::NAN), (32, 0.25), (64, 0.125)];
        let fit = fit_power_law(&pairs).unwrap();
        assert_eq!((fit.used, fit.excluded), (3, 3));
        assert!(fit_power_law(&pairs[..4]).is_err());
        assert!(fit_power_law(&[(4, 1.0), (4, 2.0), (4, 3.0)]).is_err());
    }

    #[test]
    fn fit_of_negative_values_uses_magnitudes() {
        let pairs: Vec<(usize, f64)> = (1..=6).map(|k| (10usize.pow(k), -3.0 / 10f64.powi(k as i32))).collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.exponent + 1.0).abs() < 1e-12);
    }

    #[test]
    fn prefactor_converges() {
        let limit = prefactor_limit();
        assert!((limit - 0.3735).abs() < 5e-5);
        for rule in [FrequencyRule::Midpoint, FrequencyRule::Endpoint] {
            let v = prefactor_extract(rule, &[100, 10_000]).unwrap();
            assert!((v[0].1 / limit - 1.0).abs() < 0.15, "{rule:?} {v:?}");
            assert!((v[1].1 / limit - 1.0).abs() < 0.02, "{rule:?} {v:?}");
        }
        assert!(prefactor_extract(FrequencyRule::ZetaCorrected, &[10]).is_err());
    }

    #[test]
    fn column_selection() {
        let rows = vec![
            row(2, "midpoint", 1.0, 0.9, Some(1.0)),
            row(2, "endpoint", 0.5, 0.4, None),
            row(4, "midpoint", 0.9, 0.85, None),
        ];
        assert_eq!(
            column_pairs(&rows, "gamma_exact", Some("midpoint"), 0.5).unwrap(),
            vec![(2, 0.5), (4, 0.4)]
        );
        assert_eq!(
            column_pairs(&rows, "gamma_simulated", None, 0.0).unwrap(),
            vec![(2, 1.0)]
        );
        assert!(column_pairs(&rows, "nope", None, 0.0).is_err());
    }
}
