//! Two-level hierarchy on reach: first with scripted policies to show the
//! plumbing, then with both levels learned.
//!
//! cargo run --release --example hac_reach

use goalspace_lab::experiment::{run_trial, run_trial_with_agent, ExperimentConfig, ScriptedAgent};
use goalspace_lab::goalspace::TransformSpec;
use goalspace_lab::hac::scripted::{ScriptedMaster, ScriptedReach};
use goalspace_lab::hac::{run_hierarchy_episode, Algorithm, EpisodeMode, EpisodeRngs};

fn main() -> goalspace_lab::Result<()> {
    let mut cfg = ExperimentConfig::new(Algorithm::Hac);
    cfg.epochs = 40;
    cfg.episodes_per_epoch = 10;
    cfg.hyper.batch_size = 64;
    cfg.hyper.hidden_layers = vec![32, 32];

    let hac = cfg.hac_config();
    let mut rngs = EpisodeRngs::from_seed(1);
    let out = run_hierarchy_episode(
        Some(&ScriptedMaster { offset_bound: hac.master_offset_bound }),
        &ScriptedReach { a_max: cfg.env.a_max },
        &cfg.env,
        &hac,
        &cfg.her,
        EpisodeMode::Train,
        &mut rngs,
    )?;
    println!(
        "scripted episode: success {}, {} master steps, {} subgoal tests ({} failed), {} master / {} sub transitions",
        out.env_success,
        out.master_steps,
        out.subgoal_tests,
        out.failed_subgoal_tests,
        out.master_transitions.len(),
        out.sub_transitions.len()
    );

    let scripted = run_trial_with_agent(&cfg, 0, &mut ScriptedAgent::new(&cfg))?;
    println!("scripted agent per epoch: {:?}", &scripted.success_rates[..5]);

    for (name, spec) in [
        ("baseline", TransformSpec::Identity),
        ("extra factor", TransformSpec::extra_factors(1, 0.0)),
    ] {
        let c = cfg.clone().with_transform(spec);
        let t = run_trial(&c, 0)?;
        println!("learned, {name} ({:.0}s): {:?}", t.wall_time_secs, t.success_rates);
    }
    Ok(())
}
