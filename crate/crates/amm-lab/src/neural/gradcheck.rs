//! Central finite-difference verification of analytic gradients.

use std::fmt;

/// Central differences of `f` at `params`, one probe pair per coordinate.
pub fn finite_diff_grad<F: FnMut(&[f64]) -> f64>(f: &mut F, params: &[f64], step: f64) -> Vec<f64> {
    let mut probe = params.to_vec();
    let mut grad = vec![0.0; params.len()];
    for i in 0..params.len() {
        let original = probe[i];
        probe[i] = original + step;
        let plus = f(&probe);
        probe[i] = original - step;
        let minus = f(&probe);
        probe[i] = original;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockReport {
    pub name: String,
    pub max_rel_err: f64,
}

/// Per-parameter-block agreement between analytic and numeric gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockReport>,
    pub max_rel_err: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err < self.tolerance
    }
}

impl fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "gradient check: max rel err {:.3e} (tolerance {:.0e}) -> {}",
            self.max_rel_err,
            self.tolerance,
            if self.passed() { "pass" } else { "FAIL" }
        )?;
        for block in &self.blocks {
            writeln!(f, "  {:<16} {:.3e}", block.name, block.max_rel_err)?;
        }
        Ok(())
    }
}

/// Compare flattened gradients block by block. The relative error uses
/// `|a - n| / max(|a| + |n|, 1e-6)` so that genuinely zero gradients do not
/// produce spurious failures.
pub fn grad_check(
    blocks: &[(String, Vec<usize>)],
    analytic: &[f64],
    numeric: &[f64],
    tolerance: f64,
) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let total: usize = blocks
        .iter()
        .map(|(_, shape)| shape.iter().product::<usize>())
        .sum();
    assert_eq!(
        total,
        analytic.len(),
        "block table does not cover the gradient vector"
    );

    let mut reports = Vec::with_capacity(blocks.len());
    let mut offset = 0;
    let mut worst: f64 = 0.0;
    for (name, shape) in blocks {
        let len: usize = shape.iter().product();
        let mut block_worst: f64 = 0.0;
        for i in offset..offset + len {
            let denom = (analytic[i].abs() + numeric[i].abs()).max(1e-6);
            block_worst = block_worst.max((analytic[i] - numeric[i]).abs() / denom);
        }
        worst = worst.max(block_worst);
        reports.push(BlockReport {
            name: name.clone(),
            max_rel_err: block_worst,
        });
        offset += len;
    }
    GradCheckReport {
        blocks: reports,
        max_rel_err: worst,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient_is_exact() {
        // f(p) = sum(p_i^2) has gradient 2p.
        let params = vec![0.3, -1.2, 2.0];
        let numeric = finite_diff_grad(
            &mut |p: &[f64]| p.iter().map(|v| v * v).sum(),
            &params,
            1e-5,
        );
        let analytic: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
        let report = grad_check(&[("p".to_string(), vec![3])], &analytic, &numeric, 1e-6);
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn corrupted_gradient_fails_the_check() {
        let params = vec![0.3, -1.2, 2.0];
        let numeric = finite_diff_grad(
            &mut |p: &[f64]| p.iter().map(|v| v * v).sum(),
            &params,
            1e-5,
        );
        let mut corrupted: Vec<f64> = params.iter().map(|p| 2.0 * p).collect();
        corrupted[1] *= 1.5;
        let report = grad_check(&[("p".to_string(), vec![3])], &corrupted, &numeric, 1e-4);
        assert!(!report.passed());
    }
}
