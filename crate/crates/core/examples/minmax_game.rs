//! The distribution-matching game on the one-step instance: online tuples from
//! a uniform policy are reweighted until the next-state distribution matches the data.

use obsrl::approx::{Bandwidth, DiscriminatorClass, PolicyClass};
use obsrl::envs::make_one_step_hardness;
use obsrl::forward::{minmax_game, GameConfig, OnlineTuple};
use obsrl::rng::{categorical, stream};

fn main() -> obsrl::Result<()> {
    let hard = make_one_step_hardness()?;
    let mut rng = stream(0, "data", 0);
    let online: Vec<OnlineTuple<usize>> = (0..4000)
        .map(|i| {
            let action = i % 2;
            let row = hard.mdp.transition(0, 0, action);
            let probs: Vec<f64> = row.iter().map(|e| e.1).collect();
            OnlineTuple {
                prev: 0,
                action,
                next: row[categorical(&probs, &mut rng)].0,
            }
        })
        .collect();
    let offline: Vec<usize> = (0..4000).map(|_| categorical(&hard.offline, &mut rng)).collect();
    let config = GameConfig {
        iterations: 500,
        step_size: None,
    };
    let out = minmax_game(
        &PolicyClass::Tabular,
        &DiscriminatorClass::Mmd(Bandwidth::Median),
        &online,
        &offline,
        2,
        &config,
        &mut stream(0, "game", 0),
    )?;
    let mut probs = [0.0; 2];
    out.rule.fill_probs(&0, &mut probs);
    println!("returned iterate {} of {}", out.transcript.best + 1, out.transcript.records.len());
    println!("game value {:.4}", out.transcript.best_value());
    println!("action probabilities {:?} (the TV minimizer is action 0)", probs);
    Ok(())
}
