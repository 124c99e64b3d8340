use std::fmt::Write as _;

use serde::Serialize;

use super::{class_f_beta, class_fdr, class_iou, f_beta, fdr, miou, ConfusionTallies, MetricsError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: usize,
    pub name: String,
    pub evaluated: bool,
    pub iou: f64,
    pub f_beta: f64,
    pub fdr: f64,
}

/// A ratio that had a zero denominator and was reported as 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Degenerate {
    pub class: usize,
    pub quantity: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub per_class: Vec<ClassMetrics>,
    pub miou: f64,
    pub f_beta: f64,
    pub fdr: f64,
    pub ppv: f64,
    /// `(mIoU + F_β) / 2`; a convenience aggregate, not the contour-based
    /// video-segmentation score.
    pub j_and_f: f64,
    pub beta_squared: f64,
    pub degenerate: Vec<Degenerate>,
}

/// Builds the full report. `names[c]` labels class `c` when present.
pub fn evaluate(t: &ConfusionTallies, beta2: f64, names: &[String]) -> Result<MetricsReport, MetricsError> {
    let miou = miou(t)?;
    let mut degenerate = Vec::new();
    let per_class = t
        .classes()
        .iter()
        .enumerate()
        .map(|(c, tally)| {
            let evaluated = tally.is_evaluated();
            let mut value = |v: Option<f64>, quantity: &'static str, fg_only: bool| match v {
                Some(x) => x,
                None => {
                    if evaluated && (!fg_only || c > 0) {
                        degenerate.push(Degenerate { class: c, quantity });
                    }
                    0.0
                }
            };
            ClassMetrics {
                class: c,
                name: names.get(c).cloned().unwrap_or_else(|| c.to_string()),
                evaluated,
                iou: value(class_iou(tally), "iou", false),
                f_beta: value(class_f_beta(tally, beta2), "f_beta", true),
                fdr: value(class_fdr(tally), "fdr", true),
            }
        })
        .collect();
    let f = f_beta(t, beta2);
    let fdr = fdr(t);
    Ok(MetricsReport {
        per_class,
        miou,
        f_beta: f,
        fdr,
        ppv: 1.0 - fdr,
        j_and_f: (miou + f) / 2.0,
        beta_squared: beta2,
        degenerate,
    })
}

impl MetricsReport {
    /// Human-readable `key value` lines.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "miou {:.6}", self.miou);
        let _ = writeln!(out, "f_beta {:.6}", self.f_beta);
        let _ = writeln!(out, "fdr {:.6}", self.fdr);
        let _ = writeln!(out, "ppv {:.6}", self.ppv);
        let _ = writeln!(out, "j_and_f {:.6}", self.j_and_f);
        let _ = writeln!(out, "beta_squared {}", self.beta_squared);
        for d in &self.degenerate {
            let _ = writeln!(out, "degenerate class={} quantity={}", d.class, d.quantity);
        }
        out
    }

    /// Tab-separated `class, name, iou, f_beta, fdr` rows of evaluated classes.
    pub fn to_table(&self) -> String {
        let mut out = String::from("class\tname\tiou\tf_beta\tfdr\n");
        for c in self.per_class.iter().filter(|c| c.evaluated) {
            let _ = writeln!(out, "{}\t{}\t{:.6}\t{:.6}\t{:.6}", c.class, c.name, c.iou, c.f_beta, c.fdr);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::BETA_SQUARED;
    use super::*;

    #[test]
    fn report_flags_degenerate_ratios() {
        let mut t = ConfusionTallies::new(3);
        // class 2 only missed: precision undefined
        t.add(&[0, 1, 0, 0], &[0, 1, 2, 0]).unwrap();
        let r = evaluate(&t, BETA_SQUARED, &["bg".into(), "dog".into(), "cat".into()]).unwrap();
        assert_eq!(r.per_class[1].iou, 1.0);
        assert!(r.degenerate.contains(&Degenerate { class: 2, quantity: "f_beta" }));
        assert!(r.degenerate.contains(&Degenerate { class: 2, quantity: "fdr" }));
        assert_eq!(r.ppv + r.fdr, 1.0);
        assert!(r.to_table().contains("1\tdog\t1.000000"));
        assert!(r.to_lines().starts_with("miou "));
    }
}
