//! Central finite-difference verification of reverse-mode gradients.

use crate::error::Result;
use crate::numcore::tensor::Tensor;

/// Step size for central differences.
pub const FD_STEP: f64 = 1e-5;

/// Default acceptance threshold on the relative error.
pub const FD_TOLERANCE: f64 = 1e-4;

/// Worst disagreement between analytic and numeric gradients.
#[derive(Debug, Clone)]
pub struct FiniteDiffReport {
    pub max_rel_error: f64,
    /// (parameter index, element index, analytic, numeric) at the maximum.
    pub worst: Option<(usize, usize, f64, f64)>,
    pub checked: usize,
    pub pass: bool,
}

/// Compares analytic gradients against central differences of `f`.
///
/// `f` maps the full parameter set to a scalar loss; `analytic[i]` must have
/// the same element count as `params[i]`. The relative error is
/// `|a - n| / max(|a|, |n|, 1)`, so tiny gradients are compared absolutely.
pub fn finite_diff_check(
    mut f: impl FnMut(&[Tensor]) -> Result<f64>,
    params: &[Tensor],
    analytic: &[Tensor],
    tol: f64,
) -> Result<FiniteDiffReport> {
    let mut work: Vec<Tensor> = params.to_vec();
    let mut max_rel = 0.0_f64;
    let mut worst = None;
    let mut checked = 0;

    for pi in 0..params.len() {
        for ei in 0..params[pi].numel() {
            let orig = work[pi].data()[ei];

            work[pi].data_mut()[ei] = orig + FD_STEP;
            let plus = f(&work)?;
            work[pi].data_mut()[ei] = orig - FD_STEP;
            let minus = f(&work)?;
            work[pi].data_mut()[ei] = orig;

            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let a = analytic[pi].data()[ei];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1.0);
            if rel > max_rel {
                max_rel = rel;
                worst = Some((pi, ei, a, numeric));
            }
            checked += 1;
        }
    }

    Ok(FiniteDiffReport {
        max_rel_error: max_rel,
        worst,
        checked,
        pass: max_rel <= tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::tape::Tape;

    #[test]
    fn correct_gradient_passes() {
        // loss = mean((w*x)^2) elementwise: dL/dw = 2*w*x^2 / n
        let w = Tensor::new(vec![2], vec![0.7, -1.3]).unwrap();
        let x = [2.0, 3.0];
        let analytic = Tensor::new(
            vec![2],
            vec![
                2.0 * 0.7 * x[0] * x[0] / 2.0,
                2.0 * -1.3 * x[1] * x[1] / 2.0,
            ],
        )
        .unwrap();
        let report = finite_diff_check(
            |p| {
                let loss = p[0]
                    .data()
                    .iter()
                    .zip(&x)
                    .map(|(w, x)| (w * x) * (w * x))
                    .sum::<f64>()
                    / 2.0;
                Ok(loss)
            },
            &[w],
            &[analytic],
            FD_TOLERANCE,
        )
        .unwrap();
        assert!(report.pass, "max rel error {}", report.max_rel_error);
        assert_eq!(report.checked, 2);
    }

    #[test]
    fn corrupted_gradient_fails() {
        // d(w^2)/dw at 0.5 is 1.0; claim 3.0 instead.
        let w = Tensor::scalar(0.5);
        let wrong = Tensor::scalar(3.0);
        let report = finite_diff_check(
            |p| Ok(p[0].data()[0] * p[0].data()[0]),
            &[w],
            &[wrong],
            FD_TOLERANCE,
        )
        .unwrap();
        assert!(!report.pass);
        let (_, _, a, n) = report.worst.unwrap();
        assert_eq!(a, 3.0);
        assert!((n - 1.0).abs() < 1e-6);
    }

    #[test]
    fn tape_backward_matches_differences_through_all_primitives() {
        // A small composite touching matmul, add (broadcast bias), mul, relu,
        // sigmoid, tanh, softmax, mean_rows, concat, slice, and mse.
        let w1 = Tensor::new(vec![3, 4], (1..=12).map(|v| v as f64 * 0.11 - 0.7).collect())
            .unwrap();
        let b1 = Tensor::new(vec![1, 4], vec![0.05, -0.2, 0.3, 0.01]).unwrap();
        let w2 = Tensor::new(vec![2, 2], vec![0.4, -0.3, 0.25, 0.6]).unwrap();
        let params = vec![w1, b1, w2];

        let run = |p: &[Tensor]| -> Result<(f64, Option<Vec<Tensor>>)> {
            let mut tape = Tape::new();
            let x = tape.constant(Tensor::from_rows(&[
                vec![0.3, -0.8, 1.2],
                vec![-0.5, 0.9, 0.4],
            ]));
            let vw1 = tape.param(p[0].clone());
            let vb1 = tape.param(p[1].clone());
            let vw2 = tape.param(p[2].clone());
            let h = tape.matmul(x, vw1)?; // [2,4]
            let h = tape.add(h, vb1)?; // broadcast bias
            let r = tape.relu(h);
            let s = tape.sigmoid(h);
            let mixed = tape.mul(r, s)?; // [2,4]
            let left = tape.slice(mixed, 1, 0, 2)?; // [2,2]
            let right = tape.slice(mixed, 1, 2, 4)?; // [2,2]
            let lt = tape.tanh(left);
            let proj = tape.matmul(lt, vw2)?; // [2,2]
            let att = tape.softmax(proj)?; // [2,2]
            let cat = tape.concat(1, &[att, right])?; // [2,4]
            let pooled = tape.mean_rows(cat)?; // [1,4]
            let target = tape.constant(Tensor::new(vec![1, 4], vec![0.2, 0.1, -0.1, 0.4]).unwrap());
            let loss = tape.mse(pooled, target)?;
            let lv = tape.value(loss).data()[0];
            let grads = tape.backward(loss)?;
            let g = vec![
                grads.get(vw1).unwrap().clone(),
                grads.get(vb1).unwrap().clone(),
                grads.get(vw2).unwrap().clone(),
            ];
            Ok((lv, Some(g)))
        };

        let (_, analytic) = run(&params).unwrap();
        let analytic = analytic.unwrap();
        let report = finite_diff_check(
            |p| run(p).map(|(l, _)| l),
            &params,
            &analytic,
            FD_TOLERANCE,
        )
        .unwrap();
        assert!(
            report.pass,
            "max rel error {} at {:?}",
            report.max_rel_error, report.worst
        );
        assert_eq!(report.checked, 12 + 4 + 4);
    }
}
