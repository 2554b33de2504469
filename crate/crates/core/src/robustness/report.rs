//! Flat CSV renderings of the experiment reports.

use std::io::Write;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{
    check_qualitative, check_quantitative, consistency_curve, solution_stability, stability_curve,
    RobustnessReport, Verdict,
};
use crate::error::Result;

pub const REPORT_HEADER: [&str; 3] = ["experiment", "param", "value"];
pub const CURVES_HEADER: [&str; 7] = ["N", "t", "median", "p90", "bound", "measured", "verdict"];

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:?}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_float).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub kind: ExperimentKind,
    pub params: Vec<(String, String)>,
    pub curves: Vec<[String; 7]>,
    pub verdict: Verdict,
}

impl ExperimentOutput {
    fn new(kind: ExperimentKind, cfg: &ExperimentConfig) -> Self {
        let mut out = ExperimentOutput {
            kind,
            params: Vec::new(),
            curves: Vec::new(),
            verdict: Verdict::Pass,
        };
        out.push("name", cfg.name.clone());
        out.push("seed", cfg.seed.to_string());
        out.push("kernel", cfg.erm.kernel.family.name().to_string());
        out.push("loss", cfg.erm.loss.family.name().to_string());
        out.push_f("beta", cfg.erm.beta);
        out
    }

    fn push(&mut self, key: &str, value: String) {
        self.params.push((key.to_string(), value));
    }

    fn push_f(&mut self, key: &str, value: f64) {
        self.push(key, format_float(value));
    }

    pub fn write_report<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(REPORT_HEADER)?;
        for (k, v) in &self.params {
            w.write_record([self.kind.name(), k, v])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_curves<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CURVES_HEADER)?;
        for row in &self.curves {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn robustness_output(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
    r: &RobustnessReport,
) -> ExperimentOutput {
    let mut out = ExperimentOutput::new(kind, cfg);
    out.push("n", r.n.to_string());
    out.push_f("lambda", r.lambda);
    out.push("replications", r.replications.to_string());
    out.push("failures", r.failures.to_string());
    if let Some(p) = r.order {
        out.push_f("order", p);
    }
    if let Some(c) = r.constant {
        out.push_f("constant", c);
    }
    if let Some(z) = r.zeta {
        out.push("zeta_exact", opt(z.exact));
        out.push_f("zeta_upper_ot", z.upper_ot);
        out.push_f("zeta_upper_product", z.upper_product);
        out.push_f("zeta_lower_testfn", z.lower_testfn);
    }
    if let Some(d) = r.input_distance {
        out.push_f("d_phi", d);
    }
    if let Some(d) = r.delta {
        out.push_f("delta", d);
    }
    if let Some(e) = r.epsilon {
        out.push_f("epsilon", e);
    }
    if let Some(s) = r.side_condition {
        out.push("side_condition_holds", s.to_string());
    }
    out.push_f("measured", r.measured);
    out.push_f("standard_error", r.standard_error);
    out.push_f("lower_bound", r.lower_bound);
    out.push_f("upper_bound", r.upper_bound);
    out.push("bound_channel", r.bound_channel.clone());
    out.push("verdict", r.verdict.name().into());
    out.curves.push([
        r.n.to_string(),
        String::new(),
        String::new(),
        String::new(),
        format_float(r.upper_bound),
        format_float(r.measured),
        r.verdict.name().into(),
    ]);
    out.verdict = r.verdict;
    out
}

/// Runs one experiment of the config and renders its report and curve rows.
pub fn run_experiment(cfg: &ExperimentConfig, kind: ExperimentKind) -> Result<ExperimentOutput> {
    match kind {
        ExperimentKind::Quantitative => Ok(robustness_output(kind, cfg, &check_quantitative(cfg)?)),
        ExperimentKind::Qualitative => Ok(robustness_output(
            kind,
            cfg,
            &check_qualitative(cfg, cfg.delta, cfg.epsilon)?,
        )),
        ExperimentKind::Stability => {
            let p = cfg.ground_truth()?;
            let h = cfg.stability_target()?;
            let r = stability_curve(&p, &h, &cfg.t_grid, cfg)?;
            let mut out = ExperimentOutput::new(kind, cfg);
            out.push_f("theta_p", r.theta_p);
            for row in &r.rows {
                let t = format_float(row.t);
                out.push(&format!("theta[t={t}]"), format_float(row.theta));
                out.push(&format!("d_phi[t={t}]"), format_float(row.d_phi));
                out.push(&format!("deviation[t={t}]"), format_float(row.deviation));
                let ok = row.deviation <= row.bound + 1e-12 * (1.0 + r.theta_p.abs());
                out.curves.push([
                    String::new(),
                    t,
                    String::new(),
                    String::new(),
                    format_float(row.bound),
                    format_float(row.deviation),
                    if ok { "pass" } else { "fail" }.into(),
                ]);
            }
            out.push("verdict", r.verdict.name().into());
            out.verdict = r.verdict;
            Ok(out)
        }
        ExperimentKind::Consistency => {
            let p = cfg.ground_truth()?;
            let r = consistency_curve(&p, cfg)?;
            let mut out = ExperimentOutput::new(kind, cfg);
            out.push_f("theta_p", r.theta_p);
            out.push_f("deviation_delta", r.delta);
            out.push("replications", r.replications.to_string());
            out.push("rate", opt(r.rate));
            out.push("prefactor", opt(r.prefactor));
            out.push("residual", opt(r.residual));
            out.push("inversions", r.inversions.to_string());
            for row in &r.rows {
                out.push(&format!("lambda[N={}]", row.n), format_float(row.lambda));
                out.push(
                    &format!("exceed_freq[N={}]", row.n),
                    format_float(row.exceed_freq),
                );
                if let Some(w) = row.worst_median {
                    out.push(&format!("worst_median[N={}]", row.n), format_float(w));
                }
                out.curves.push([
                    row.n.to_string(),
                    String::new(),
                    format_float(row.median),
                    format_float(row.p90),
                    opt(row.worst_median),
                    format_float(row.exceed_freq),
                    String::new(),
                ]);
            }
            out.push("verdict", r.verdict.name().into());
            out.verdict = r.verdict;
            Ok(out)
        }
        ExperimentKind::SolutionStability => {
            let p = cfg.ground_truth()?;
            let q = cfg.perceived()?;
            let r = solution_stability(&p, &q, cfg)?;
            let mut out = ExperimentOutput::new(kind, cfg);
            out.push("n", r.n.to_string());
            out.push_f("lambda", r.lambda);
            out.push("replications", r.replications.to_string());
            out.push("failures", r.failures.to_string());
            out.push_f("fraction_satisfied", r.fraction_satisfied);
            out.push_f("max_distance", r.max_distance);
            out.push_f("mean_distance", r.mean_distance);
            out.push_f("min_bound", r.min_bound);
            out.push_f("mean_bound", r.mean_bound);
            out.push("verdict", r.verdict.name().into());
            out.curves.push([
                r.n.to_string(),
                String::new(),
                String::new(),
                String::new(),
                format_float(r.min_bound),
                format_float(r.max_distance),
                r.verdict.name().into(),
            ]);
            out.verdict = r.verdict;
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.5, 1e-300, -7.25e12, 0.0] {
            assert_eq!(format_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_float(2.5), "2.5");
        assert_eq!(format_float(f64::NAN), "NaN");
    }
}
