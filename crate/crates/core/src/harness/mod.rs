//! Seeded multi-run experiments: simulate a behavior policy, feed the
//! transitions to a learner, and record the learner's progress against the
//! optimality equation.

mod config;
mod emit;
mod report;

pub use config::{Algorithm, BehaviorSpec, ExperimentConfig, LearnerConfig, ModelRef, OptionsRef};
pub use emit::{csv_header, emit, write_csv, write_json, OutputFormat};
pub use report::{convergence_report, write_report_csv, ConvergenceRow};

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::reward_rate;
use crate::error::{Error, Result};
use crate::learners::{Ledger, LearnerState, QTable, ReferenceFunction};
use crate::mdp::{StationaryPolicy, StructureClass, TabularMdp};
use crate::options::{execute_option, induce_smdp, InducedSmdp, OptionSpec, DEFAULT_STEP_CAP};
use crate::oracle::bellman_residual;
use crate::sampling::run_rng;

pub const FLAG_CONSTANT_STEP: &str = "constant_step_size";
pub const FLAG_TRANSIENT_BEHAVIOR: &str = "transient_behavior_reconstructed";
pub const FLAG_UNVISITED_CHOICE: &str = "closed_class_choice_without_behavior_mass";
pub const FLAG_NOT_WEAKLY_COMMUNICATING: &str = "not_weakly_communicating";

/// Everything a run needs, resolved once from the config.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub mdp: TabularMdp,
    /// Options of the option learners; the one-step primitive set when the
    /// config names none.
    pub options: Option<Vec<OptionSpec>>,
    /// The decision process whose optimality equation the learner targets.
    pub smdp: InducedSmdp,
    pub behavior: StationaryPolicy,
    pub f: Option<ReferenceFunction>,
    pub start: usize,
    pub class: StructureClass,
    pub flags: Vec<String>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mdp = config.model.load()?;
        let algorithm = config.learner.algorithm;
        let options = if algorithm.uses_options() {
            Some(match &config.options {
                Some(r) => r.load(&mdp)?,
                None => OptionSpec::primitive_set(&mdp),
            })
        } else {
            None
        };
        let smdp = match &options {
            Some(o) => induce_smdp(&mdp, o)?,
            None => InducedSmdp::from_mdp(&mdp),
        };
        let n_choices = smdp.n_options();
        let behavior = match &config.behavior {
            None => StationaryPolicy::uniform_rows(mdp.n_states(), &vec![1.0 / n_choices as f64; n_choices])?,
            Some(BehaviorSpec::Shared(row)) => StationaryPolicy::uniform_rows(mdp.n_states(), row)?,
            Some(BehaviorSpec::PerState(rows)) => StationaryPolicy::new(rows.clone())?,
        };
        if behavior.n_states() != mdp.n_states() || behavior.n_choices() != n_choices {
            return Err(Error::ConfigInvalid(format!(
                "behavior must be {} x {}",
                mdp.n_states(),
                n_choices
            )));
        }
        let f = match &config.learner.f {
            Some(spec) => Some(spec.resolve(smdp.state_names(), smdp.option_names())?),
            None => None,
        };
        let start = mdp.state_index(&config.start_state)?;
        let class = smdp.classify();

        let mut flags = Vec::new();
        let beta_rm = config.learner.beta.is_none_or(|b| b.satisfies_robbins_monro());
        if !config.learner.alpha.satisfies_robbins_monro()
            || (algorithm == Algorithm::InterOption && !beta_rm)
        {
            flags.push(FLAG_CONSTANT_STEP.to_string());
        }
        if !class.tag.is_weakly_communicating() {
            flags.push(FLAG_NOT_WEAKLY_COMMUNICATING.to_string());
        } else if !class.transient.is_empty() {
            flags.push(FLAG_TRANSIENT_BEHAVIOR.to_string());
        }
        let starved = class
            .closed_class
            .iter()
            .any(|&s| behavior.row(s).iter().any(|&p| p <= 0.0));
        if starved {
            flags.push(FLAG_UNVISITED_CHOICE.to_string());
        }
        Ok(Experiment {
            config,
            mdp,
            options,
            smdp,
            behavior,
            f,
            start,
            class,
            flags,
        })
    }

    pub fn choice_names(&self) -> &[String] {
        self.smdp.option_names()
    }

    pub fn state_names(&self) -> &[String] {
        self.smdp.state_names()
    }

    /// States whose pairs enter the residual metric: the closed class on
    /// weakly communicating models, every state otherwise.
    fn scored_states(&self) -> Vec<bool> {
        let n = self.mdp.n_states();
        if self.class.tag.is_weakly_communicating() {
            let mut keep = vec![false; n];
            for &s in &self.class.closed_class {
                keep[s] = true;
            }
            keep
        } else {
            vec![true; n]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetadata {
    pub config_hash: String,
    pub master_seed: u64,
    pub run: usize,
    pub algorithm: Algorithm,
    pub flags: Vec<String>,
}

/// One run, stored column-wise: entry `k` of every vector belongs to the
/// `k`-th recorded step.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunLog {
    pub metadata: RunMetadata,
    pub step: Vec<u64>,
    /// The learner's reward-rate estimate: `r_bar` for the Differential
    /// family, `f(q)` for RVI Q-learning.
    pub r_bar: Vec<f64>,
    pub f_value: Vec<Option<f64>>,
    /// Sup-norm Bellman residual at the rate estimate, over scored pairs.
    pub residual: Vec<f64>,
    pub greedy_rates: Vec<Vec<f64>>,
    pub q: Vec<QTable>,
    /// Largest ledger violation seen after any update (Differential family).
    pub max_ledger_violation: Option<f64>,
    /// Transitions from the closed class to a state outside it.
    pub closed_class_exits: u64,
    /// Behavior decisions per `(state, choice)`, row-major.
    pub choice_counts: Vec<u64>,
    /// Learner updates per `(state, choice)`.
    pub visits: Vec<u64>,
}

impl RunLog {
    pub fn final_q(&self) -> &QTable {
        self.q.last().expect("every run records its final step")
    }

    pub fn final_residual(&self) -> f64 {
        *self.residual.last().expect("every run records its final step")
    }

    pub fn final_rate_estimate(&self) -> f64 {
        *self.r_bar.last().expect("every run records its final step")
    }

    pub fn final_greedy_rates(&self) -> &[f64] {
        self.greedy_rates.last().expect("every run records its final step")
    }
}

/// Runs every configured run in parallel. Run `k` draws from its own stream
/// derived from `(seed, k)`, so the result does not depend on scheduling.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunLog>> {
    let exp = Experiment::new(config.clone())?;
    run_prepared(&exp)
}

pub fn run_prepared(exp: &Experiment) -> Result<Vec<RunLog>> {
    let hash = exp.config.hash();
    (0..exp.config.runs)
        .into_par_iter()
        .map(|run| simulate(exp, run, &hash))
        .collect()
}

struct Recorder<'a> {
    exp: &'a Experiment,
    scored: Vec<bool>,
    log: RunLog,
}

impl Recorder<'_> {
    fn record(&mut self, step: u64, st: &LearnerState) -> Result<()> {
        let exp = self.exp;
        let f_value = exp.f.as_ref().map(|f| f.eval(&st.q));
        let rate = if exp.config.learner.algorithm.is_differential() {
            st.r_bar
        } else {
            f_value.expect("validated: RVI has f")
        };
        let per_pair = bellman_residual(&exp.smdp, &st.q, rate)?.per_pair;
        let residual = (0..exp.smdp.n_states())
            .filter(|&s| self.scored[s])
            .flat_map(|s| per_pair.row(s).iter().copied())
            .fold(0.0_f64, |m, v| m.max(v.abs()));
        let greedy = reward_rate(&exp.smdp, &st.q.greedy_policy())?;
        let log = &mut self.log;
        log.step.push(step);
        log.r_bar.push(rate);
        log.f_value.push(f_value);
        log.residual.push(residual);
        log.greedy_rates.push(greedy);
        log.q.push(st.q.clone());
        Ok(())
    }
}

fn simulate(exp: &Experiment, run: usize, hash: &str) -> Result<RunLog> {
    let cfg = &exp.config;
    let lc = &cfg.learner;
    let algorithm = lc.algorithm;
    let n_states = exp.smdp.n_states();
    let n_choices = exp.smdp.n_options();
    let mut rng = run_rng(cfg.seed, run as u64);
    let mut st = LearnerState::new(n_states, n_choices, lc.q0, lc.r_bar0, lc.eta, lc.alpha);
    if algorithm == Algorithm::InterOption {
        st = st.with_length_estimates(lc.beta.unwrap_or(lc.alpha));
    }
    let ledger = Ledger::start(&st);
    let closed: Vec<bool> = {
        let mut c = vec![false; n_states];
        for &s in &exp.class.closed_class {
            c[s] = true;
        }
        c
    };
    let mut rec = Recorder {
        exp,
        scored: exp.scored_states(),
        log: RunLog {
            metadata: RunMetadata {
                config_hash: hash.to_string(),
                master_seed: cfg.seed,
                run,
                algorithm,
                flags: exp.flags.clone(),
            },
            step: Vec::new(),
            r_bar: Vec::new(),
            f_value: Vec::new(),
            residual: Vec::new(),
            greedy_rates: Vec::new(),
            q: Vec::new(),
            max_ledger_violation: algorithm.is_differential().then_some(0.0),
            closed_class_exits: 0,
            choice_counts: vec![0; n_states * n_choices],
            visits: Vec::new(),
        },
    };
    let options = exp.options.as_deref().unwrap_or(&[]);
    let mut s = exp.start;
    let mut executing: Option<usize> = None;
    for t in 1..=cfg.steps {
        let s_next = match algorithm {
            Algorithm::Differential | Algorithm::Rvi => {
                let a = exp.behavior.sample(s, &mut rng);
                rec.log.choice_counts[s * n_choices + a] += 1;
                let (next, r) = exp.mdp.sample_step(s, a, &mut rng);
                if algorithm == Algorithm::Differential {
                    st.dql_step(s, a, r, next)?;
                } else {
                    st.rviql_step(exp.f.as_ref().expect("validated"), s, a, r, next)?;
                }
                next
            }
            Algorithm::InterOption => {
                let o = exp.behavior.sample(s, &mut rng);
                rec.log.choice_counts[s * n_choices + o] += 1;
                let out = execute_option(&exp.mdp, &options[o], s, &mut rng, DEFAULT_STEP_CAP)?;
                st.inter_option_dql_step(s, o, out.reward, out.length as f64, out.terminal)?;
                out.terminal
            }
            Algorithm::IntraOption => {
                let o = match executing {
                    Some(o) => o,
                    None => {
                        let o = exp.behavior.sample(s, &mut rng);
                        rec.log.choice_counts[s * n_choices + o] += 1;
                        o
                    }
                };
                let a = options[o].sample_action(s, &mut rng);
                let (next, r) = exp.mdp.sample_step(s, a, &mut rng);
                st.intra_option_dql_step(options, s, o, a, r, next)?;
                executing = (!options[o].sample_termination(next, &mut rng)).then_some(o);
                next
            }
        };
        if closed[s] && !closed[s_next] {
            rec.log.closed_class_exits += 1;
        }
        s = s_next;
        if let Some(v) = rec.log.max_ledger_violation.as_mut() {
            *v = v.max(ledger.violation(&st));
        }
        if t % cfg.record_every == 0 || t == cfg.steps {
            rec.record(t, &st)?;
        }
    }
    rec.log.visits = st.visits.clone();
    Ok(rec.log)
}
