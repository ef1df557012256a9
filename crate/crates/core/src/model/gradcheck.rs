//! Central finite-difference check of the hand-written backward pass.

use super::StudentModel;
use crate::error::Result;
use crate::inventory::PronunciationSequence;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_relative_error: f64,
    /// Tensor name and flat index of the worst element.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Rescale parameters to a well-conditioned regime for [`grad_check`]:
/// unit-scale embeddings and positions, fan-in scaled weight matrices,
/// small nonzero biases and gains near 1. At the default init scale most
/// gradients are so small that finite differences only measure roundoff.
pub fn spread(model: &mut StudentModel) {
    // W and the input projection share the embedding scale evenly.
    let split = if model.params.input_proj.is_some() { (model.params.token.cols as f64).powf(-0.25) } else { 1.0 };
    let names: Vec<String> = model.params.named().into_iter().map(|(n, _)| n).collect();
    for (name, t) in names.iter().zip(model.params.tensors_mut()) {
        let target = match name.as_str() {
            "token.weight" | "input_proj.weight" => split,
            "pos.weight" => 1.0,
            _ => 0.3 / (t.rows as f64).sqrt(),
        };
        let factor = target / crate::embedding::INIT_STD;
        let gain = name.ends_with("gamma");
        for (i, x) in t.data.iter_mut().enumerate() {
            let pattern = ((i * 7 % 11) as f64 - 5.0) / 5.0;
            let v = if gain {
                1.0 + 0.1 * pattern
            } else if t.rows == 1 {
                0.1 * pattern
            } else {
                *x * factor
            };
            *x = f64::from(v as f32);
        }
    }
}

/// Compare the analytic batch-MSE gradient against central differences on
/// every trainable parameter. Relative error is
/// `|a - n| / (|a| + |n| + 1e-12)`.
pub fn grad_check(
    model: &StudentModel,
    batch: &[PronunciationSequence],
    targets: &[Vec<f64>],
    eps: f64,
) -> Result<GradCheck> {
    let (_, analytic) = model.loss_and_gradient(batch, targets)?;
    let analytic: Vec<(String, Vec<f64>)> = analytic.named().into_iter().map(|(n, m)| (n, m.data.clone())).collect();
    let mut probe = model.clone();
    let mut report = GradCheck { max_relative_error: 0.0, worst: None, checked: 0 };
    for (t, (name, grad)) in analytic.iter().enumerate() {
        if !model.is_trainable(name) {
            continue;
        }
        for (i, &a) in grad.iter().enumerate() {
            let original = probe.params.tensors_mut()[t].data[i];
            probe.params.tensors_mut()[t].data[i] = original + eps;
            let plus = probe.loss(batch, targets)?;
            probe.params.tensors_mut()[t].data[i] = original - eps;
            let minus = probe.loss(batch, targets)?;
            probe.params.tensors_mut()[t].data[i] = original;
            let n = (plus - minus) / (2.0 * eps);
            let rel = (a - n).abs() / (a.abs() + n.abs() + 1e-12);
            report.checked += 1;
            if rel > report.max_relative_error {
                report.max_relative_error = rel;
                report.worst = Some((name.clone(), i));
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Mode, StudentConfig};
    use crate::AttributeTable;

    fn check(mode: Mode, layers: usize) -> GradCheck {
        let table = AttributeTable::english();
        let mut cfg = StudentConfig::new(mode, 8, layers, 2, 3);
        cfg.max_len = 6;
        cfg.ffn_mult = 2;
        cfg.seed = 21;
        let mut model = StudentModel::new(cfg, &table).unwrap();
        spread(&mut model);
        assert!(model.params.parameter_count() <= 10_000);
        let batch: Vec<_> = ["kæt", "ʃu", "ˈwi"].iter().map(|s| table.parse(s).unwrap()).collect();
        let targets = vec![vec![0.3, -0.2, 0.5], vec![-0.4, 0.1, 0.0], vec![0.2, 0.2, -0.3]];
        grad_check(&model, &batch, &targets, 1e-3).unwrap()
    }

    #[test]
    fn zero_layer_gradient_is_exact() {
        for mode in [Mode::IpaTrainable, Mode::Baseline] {
            let r = check(mode, 0);
            assert!(r.max_relative_error < 1e-7, "{mode:?}: {r:?}");
        }
    }

    #[test]
    fn one_layer_gradient_matches() {
        for mode in [Mode::IpaFrozen, Mode::IpaTrainable, Mode::Baseline] {
            let r = check(mode, 1);
            assert!(r.max_relative_error < 1e-4, "{mode:?}: {r:?}");
        }
    }
}
