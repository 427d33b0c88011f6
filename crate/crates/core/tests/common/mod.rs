#![allow(dead_code)]

use hdc_core::evolve::{dominates, ParetoFront};
use hdc_core::Dataset;
use hdc_core::Split;

/// Pairwise non-domination, row-sum feasibility and unique budgets.
pub fn front_violations(front: &ParetoFront) -> Vec<String> {
    let mut out = Vec::new();
    let ms = &front.members;
    if ms.is_empty() {
        out.push("empty front".to_string());
    }
    for (i, a) in ms.iter().enumerate() {
        if !a.scores.feasible || !a.budget.is_feasible() {
            out.push(format!("member {i} infeasible"));
        }
        let cap = a.budget.dim() as u64 / 2;
        if a.budget.row_sums().iter().any(|&s| s > cap) {
            out.push(format!("member {i} row sum above {cap}"));
        }
        for (j, b) in ms.iter().enumerate() {
            if i != j && dominates(&b.scores, &a.scores) {
                out.push(format!("member {j} dominates member {i}"));
            }
            if i < j && a.budget == b.budget {
                out.push(format!("members {i} and {j} share a budget"));
            }
        }
    }
    out
}

/// One feature in `[0, 1]`, three classes. With `M = 3` and `D = 16` all
/// 81 budgets can be enumerated and the exact front has three members.
pub fn micro_dataset() -> Dataset {
    let rows = [
        (2.0 / 3.0, 0),
        (1.0 / 3.0, 0),
        (1.0 / 6.0, 2),
        (1.0 / 6.0, 0),
        (1.0 / 6.0, 2),
        (1.0 / 3.0, 1),
        (0.0, 0),
        (1.0, 2),
    ];
    Dataset::new(
        rows.iter().map(|r| r.0).collect(),
        1,
        rows.iter().map(|r| r.1).collect(),
        vec!["c0".into(), "c1".into(), "c2".into()],
        None,
        Split::Train,
    )
    .unwrap()
}
