//! The training loop with periodic evaluation.

use std::time::Instant;

use crate::agents::Agent;
use crate::error::Result;
use crate::mdp::MultiGoalMdp;
use crate::oracle::{bias_estimate, evaluate_policy};
use crate::rng::Rng;

use super::config::ExperimentConfig;
use super::metrics::{write_metrics, MetricsRow, RunMetrics};

/// A finished run: the metrics plus the trained agent and its environment.
pub struct TrainingRun {
    pub metrics: RunMetrics,
    pub agent: Agent,
    pub mdp: MultiGoalMdp,
}

/// Trains per the config and returns the run without touching the disk.
/// `on_row` sees each metrics row as it is produced.
pub fn train(cfg: &ExperimentConfig, on_row: &mut dyn FnMut(&MetricsRow)) -> Result<TrainingRun> {
    cfg.validate()?;
    let mdp = cfg.build_env()?;
    let mut agent = Agent::new(cfg.agent.kind, cfg.agent.learner.clone(), &mdp)?;
    let train = &cfg.train;
    let mut rng = Rng::new(train.seed);
    let mut eval_rng = rng.fork(1);
    let mut metrics = RunMetrics {
        agent: cfg.agent.kind.name().into(),
        env: mdp.name().into(),
        seed: train.seed,
        config_hash: cfg.config_hash()?,
        rows: Vec::new(),
    };
    let started = Instant::now();
    for episode in 1..=train.episodes {
        agent.run_episode(&mdp, &mut rng)?;
        if episode % train.eval_interval == 0 || episode == train.episodes {
            let row = evaluate(&agent, &mdp, train.eval_episodes, episode, &mut eval_rng);
            let row = MetricsRow {
                wallclock_ms: if train.record_wallclock {
                    started.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                },
                ..row
            };
            on_row(&row);
            metrics.rows.push(row);
        }
    }
    Ok(TrainingRun { metrics, agent, mdp })
}

fn evaluate(agent: &Agent, mdp: &MultiGoalMdp, n: usize, episode: u64, rng: &mut Rng) -> MetricsRow {
    let q = agent.q();
    let policy = q.greedy();
    let eval = evaluate_policy(mdp, &policy, n, rng);
    let predict = |s, g| agent.predicted_value(mdp, s, g);
    let bias = bias_estimate(&predict, mdp, &policy, n, rng);
    MetricsRow {
        episode,
        success_rate: eval.success_rate,
        avg_return: eval.mean_return,
        bias_start: bias.bias,
        bias_ci: bias.ci_half_width,
        wallclock_ms: 0.0,
    }
}

/// Trains and writes the metrics CSV to the configured output path.
pub fn run_training(cfg: &ExperimentConfig) -> Result<RunMetrics> {
    let run = train(cfg, &mut |_| {})?;
    write_metrics(&run.metrics, cfg.csv_path())?;
    Ok(run.metrics)
}
