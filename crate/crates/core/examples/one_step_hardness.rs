//! Exact coverage and TV arithmetic of the one-step instance.

use obsrl::hardness::one_step_report;

fn main() -> obsrl::Result<()> {
    let r = one_step_report(0.001)?;
    println!("coverage of the rewarding policy under the data: {}", r.coverage);
    println!("deterministic TV minimizer: action {} with TV {:.4}", r.tv_action, r.tv);
    println!("best mixture: weight {:.3} on action 0, TV {:.4}", r.mixture_weight, r.mixture_tv);
    println!("minimizer covers the rewarding policy: {} (witness {:?})", r.minimizer_covers, r.witness);
    Ok(())
}
