//! Trace-model search cannot match the last-level data of the binary tree,
//! while a reset model recovers the rewarding path with few queries.

use obsrl::envs::make_binary_tree;
use obsrl::hardness::{reset_solver_demo, trace_search_demo, SearchStrategy};

fn main() -> obsrl::Result<()> {
    let (tree, data) = make_binary_tree(12, 0)?;
    for strategy in [SearchStrategy::Random, SearchStrategy::Breadth] {
        let r = trace_search_demo(&tree, &data, 1024, strategy, 0)?;
        println!("{strategy:?} search, {} episodes: best TV {:?}", r.episodes, r.tv);
    }
    let r = reset_solver_demo(&tree, &data)?;
    println!("reset solver: recovered {} with {} queries", r.path_recovered, r.reset_queries);
    println!("path {:?}", r.path);
    Ok(())
}
