//! On-policy actor-critic training with truncated rollouts, auxiliary
//! losses and greedy evaluation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use diffcore::{Adam, Bound, Checkpoint, Result as DiffResult, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::{
    loss_action_prediction, loss_reward_prediction, loss_state_prediction, modified_reward,
    pseudo_reward, total_loss, Agent, RecurrentState, Variant,
};
use crate::config::TrainConfig;
use crate::error::{LabError, Result};
use crate::gridsim::{Action, DoneCause, Env, GridMap, LidarScan, WorldId};
use crate::metrics::{EpisodeRecord, Metrics};

/// One recorded environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub scan: LidarScan,
    pub action: Action,
    pub r_ext: f64,
    pub r_pseudo_sp: f64,
    pub r_pseudo_rp: f64,
    pub phi: Vec<f64>,
    pub phi_next: Vec<f64>,
    pub value_estimate: f64,
    pub log_prob: f64,
    pub done: bool,
    pub done_cause: DoneCause,
}

/// Up to `rollout` transitions plus the bootstrap value of the state that
/// follows them (0 when the episode ended).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub transitions: Vec<Transition>,
    pub bootstrap: f64,
}

impl RolloutBuffer {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn done(&self) -> bool {
        self.transitions.last().is_some_and(|t| t.done)
    }
}

/// `R_t = r_t + γ R_{t+1}` with `R_T = r_T + γ·bootstrap·(1 − done)`.
pub fn discounted_returns(rewards: &[f64], bootstrap: f64, gamma: f64, done: bool) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut next = if done { 0.0 } else { bootstrap };
    for (o, r) in out.iter_mut().zip(rewards).rev() {
        next = r + gamma * next;
        *o = next;
    }
    out
}

/// `R_t − V_t`, used as a constant in the policy term.
pub fn advantage(returns: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if returns.len() != values.len() {
        return Err(LabError::Invalid(format!(
            "advantage: {} returns vs {} values",
            returns.len(),
            values.len()
        )));
    }
    Ok(returns.iter().zip(values).map(|(r, v)| r - v).collect())
}

/// Negated objective `mean[−log π(a_t)·Â_t + α(V_t − R_t)² − β·S_t]`.
/// `log_probs`, `values` and `entropies` are scalar nodes.
#[allow(clippy::too_many_arguments)]
pub fn actor_critic_loss(
    tape: &mut Tape,
    log_probs: &[Var],
    advantages: &[f64],
    values: &[Var],
    returns: &[f64],
    entropies: &[Var],
    alpha: f64,
    beta: f64,
) -> Result<Var> {
    let n = log_probs.len();
    if n == 0
        || [
            advantages.len(),
            values.len(),
            returns.len(),
            entropies.len(),
        ]
        .iter()
        .any(|&m| m != n)
    {
        return Err(LabError::Invalid(
            "actor_critic_loss: length mismatch".into(),
        ));
    }
    let lp = tape.concat(log_probs);
    let adv = tape.leaf(Tensor::vector(advantages.to_vec()));
    let policy = tape.mul(lp, adv)?;
    let policy = tape.scale(policy, -1.0);
    let v = tape.concat(values);
    let diff = tape.affine_vec(v, returns)?;
    let sq = tape.square(diff);
    let critic = tape.scale(sq, alpha);
    let s = tape.concat(entropies);
    let ent = tape.scale(s, -beta);
    let a = tape.add(policy, critic)?;
    let b = tape.add(a, ent)?;
    Ok(tape.mean(b))
}

/// Scalar form of [`actor_critic_loss`].
pub fn actor_critic_loss_value(
    log_probs: &[f64],
    advantages: &[f64],
    values: &[f64],
    returns: &[f64],
    entropies: &[f64],
    alpha: f64,
    beta: f64,
) -> f64 {
    let n = log_probs.len() as f64;
    (0..log_probs.len())
        .map(|i| {
            -log_probs[i] * advantages[i] + alpha * (values[i] - returns[i]).powi(2)
                - beta * entropies[i]
        })
        .sum::<f64>()
        / n
}

trait AffineVec {
    fn affine_vec(&mut self, v: Var, shift: &[f64]) -> DiffResult<Var>;
}

impl AffineVec for Tape {
    /// `v − shift` for a constant vector.
    fn affine_vec(&mut self, v: Var, shift: &[f64]) -> DiffResult<Var> {
        let c = self.leaf(Tensor::vector(shift.to_vec()));
        self.sub(v, c)
    }
}

/// Policy entropy `−Σ p log p`.
fn entropy(tape: &mut Tape, probs: Var, log_probs: Var) -> DiffResult<Var> {
    let plogp = tape.mul(probs, log_probs)?;
    let s = tape.sum(plogp);
    Ok(tape.scale(s, -1.0))
}

/// Samples an index from a probability vector.
pub fn sample_action<R: Rng>(probs: &[f64], rng: &mut R) -> Action {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return Action::from_index(i).expect("three actions");
        }
    }
    Action::from_index(probs.len() - 1).expect("three actions")
}

/// First index of the largest entry.
pub fn greedy_action(probs: &[f64]) -> Action {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    Action::from_index(best).expect("three actions")
}

/// Independent random streams derived from a run seed.
fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Losses reported by one update.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UpdateLosses {
    pub ac: f64,
    pub sp: f64,
    pub rp: f64,
    pub ap: f64,
}

/// Buffer, per-step graph nodes, and the scan/state to resume from.
type Collected = (
    RolloutBuffer,
    Vec<StepNodes>,
    Option<(LidarScan, RecurrentState)>,
);

/// Per-step nodes kept for the update.
struct StepNodes {
    log_prob: Var,
    value: Var,
    entropy: Var,
    aux: Option<(Var, Var, Var)>,
}

/// Single-worker training state for one (variant, world, seed).
pub struct Trainer {
    agent: Agent,
    adam: Adam,
    cfg: TrainConfig,
    env: Env,
    env_rng: ChaCha8Rng,
    policy_rng: ChaCha8Rng,
    seed: u64,
    episode: usize,
    metrics: Metrics,
    progress: Option<EpisodeProgress>,
}

impl Trainer {
    pub fn new(variant: Variant, map: GridMap, cfg: TrainConfig, seed: u64) -> Self {
        let agent = Agent::new(variant, cfg.net, seed);
        let adam = Adam::new(&agent.params, cfg.lr);
        let env = Env::new(map, cfg.episode_cap);
        Self {
            agent,
            adam,
            env,
            env_rng: stream(seed, 1),
            policy_rng: stream(seed, 2),
            seed,
            episode: 0,
            metrics: Metrics::default(),
            progress: None,
            cfg,
        }
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn into_metrics(self) -> Metrics {
        self.metrics
    }

    pub fn episodes_done(&self) -> usize {
        self.episode
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn checkpoint(&self) -> Checkpoint {
        self.agent.checkpoint(&[
            ("episode", self.episode.to_string()),
            ("seed", self.seed.to_string()),
            ("world", self.env.world().to_string()),
        ])
    }

    /// Collects up to `rollout` steps on `tape`, starting from `scan` with
    /// recurrent state `state` (the state before `scan` is consumed).
    /// Returns the buffer, the nodes needed for the loss, and the carry
    /// `(next scan, state before it)` when the episode continues.
    fn collect(
        &mut self,
        tape: &mut Tape,
        p: &Bound,
        scan: LidarScan,
        state: &RecurrentState,
    ) -> Result<Collected> {
        let net = &self.agent.net;
        let variant = net.variant();
        let aux_cfg = self.cfg.aux;
        let rec = state.bind(tape);
        let mut out = net.forward(tape, p, &scan, &rec)?;
        let mut scan = scan;
        let mut buffer = RolloutBuffer::default();
        let mut nodes = Vec::with_capacity(self.cfg.rollout);
        for _ in 0..self.cfg.rollout {
            let action = sample_action(tape.data(out.probs), &mut self.policy_rng);
            let (res, next_scan) = self.env.step(action);
            let next = if res.done {
                None
            } else {
                Some(net.forward(tape, p, &next_scan, &out.state)?)
            };
            let (mut r_sp, mut r_rp) = (0.0, 0.0);
            let mut phi_next = Vec::new();
            let aux = if variant.use_aux() {
                let phi_next_var = match &next {
                    Some(o) => o.phi,
                    None => net.encode_scan(tape, p, &next_scan)?.phi,
                };
                let ax = net.aux(tape, p, out.phi, action, phi_next_var)?;
                let target = tape.detach(phi_next_var);
                let sp = loss_state_prediction(tape, ax.phi_next_pred, target)?;
                let rp = loss_reward_prediction(tape, ax.reward_pred, res.reward)?;
                let ap = loss_action_prediction(tape, ax.action_pred_probs, action.index())?;
                if aux_cfg.pseudo_rewards {
                    r_sp = pseudo_reward(tape.item(sp), aux_cfg.eta_sp, aux_cfg.overflow_value);
                    r_rp = pseudo_reward(tape.item(rp), aux_cfg.eta_rp, aux_cfg.overflow_value);
                }
                phi_next = tape.data(phi_next_var).to_vec();
                Some((sp, rp, ap))
            } else {
                None
            };
            let log_prob = tape.pick(out.log_probs, action.index())?;
            let ent = entropy(tape, out.probs, out.log_probs)?;
            buffer.transitions.push(Transition {
                scan: scan.clone(),
                action,
                r_ext: res.reward,
                r_pseudo_sp: r_sp,
                r_pseudo_rp: r_rp,
                phi: tape.data(out.phi).to_vec(),
                phi_next,
                value_estimate: tape.item(out.value),
                log_prob: tape.item(log_prob),
                done: res.done,
                done_cause: res.done_cause,
            });
            nodes.push(StepNodes {
                log_prob,
                value: out.value,
                entropy: ent,
                aux,
            });
            match next {
                None => return Ok((buffer, nodes, None)),
                Some(o) => {
                    let carry = out.state;
                    out = o;
                    scan = next_scan;
                    if buffer.len() == self.cfg.rollout {
                        buffer.bootstrap = tape.item(out.value);
                        return Ok((buffer, nodes, Some((scan, carry.snapshot(tape)))));
                    }
                }
            }
        }
        unreachable!("rollout length is positive")
    }

    /// Builds the composite loss for a collected rollout, backpropagates and
    /// applies one Adam step.
    fn update(
        &mut self,
        tape: &mut Tape,
        p: &Bound,
        buffer: &RolloutBuffer,
        nodes: &[StepNodes],
    ) -> Result<UpdateLosses> {
        let variant = self.agent.variant();
        let rewards: Vec<f64> = buffer
            .transitions
            .iter()
            .map(|t| {
                self.cfg.reward_scale
                    * modified_reward(t.r_ext, t.r_pseudo_sp, t.r_pseudo_rp, variant)
            })
            .collect();
        let returns = discounted_returns(&rewards, buffer.bootstrap, self.cfg.gamma, buffer.done());
        let values: Vec<f64> = buffer
            .transitions
            .iter()
            .map(|t| t.value_estimate)
            .collect();
        let adv = advantage(&returns, &values)?;
        let lp: Vec<Var> = nodes.iter().map(|n| n.log_prob).collect();
        let vs: Vec<Var> = nodes.iter().map(|n| n.value).collect();
        let es: Vec<Var> = nodes.iter().map(|n| n.entropy).collect();
        let ac = actor_critic_loss(
            tape,
            &lp,
            &adv,
            &vs,
            &returns,
            &es,
            self.cfg.alpha,
            self.cfg.beta,
        )?;
        let mut losses = UpdateLosses {
            ac: tape.item(ac),
            ..Default::default()
        };
        let aux_means = if nodes.iter().all(|n| n.aux.is_some()) && variant.use_aux() {
            let mut mean = |pick: fn(&(Var, Var, Var)) -> Var| {
                let parts: Vec<Var> = nodes
                    .iter()
                    .map(|n| pick(n.aux.as_ref().expect("aux present")))
                    .collect();
                let c = tape.concat(&parts);
                tape.mean(c)
            };
            let sp = mean(|a| a.0);
            let rp = mean(|a| a.1);
            let ap = mean(|a| a.2);
            losses.sp = tape.item(sp);
            losses.rp = tape.item(rp);
            losses.ap = tape.item(ap);
            Some((sp, rp, ap))
        } else {
            None
        };
        let total = total_loss(tape, ac, aux_means, &self.cfg.aux, variant)?;
        let grads = tape.backward(total)?;
        let mut g: Vec<Vec<f64>> = p.vars().iter().map(|&v| grads.wrt(v)).collect();
        if self.cfg.max_grad_norm > 0.0 {
            let norm = g.iter().flatten().map(|x| x * x).sum::<f64>().sqrt();
            if norm > self.cfg.max_grad_norm {
                let s = self.cfg.max_grad_norm / norm;
                g.iter_mut().flatten().for_each(|x| *x *= s);
            }
        }
        self.adam.step(&mut self.agent.params, &g)?;
        Ok(losses)
    }

    /// Collects one rollout of the current episode (starting a new episode
    /// if none is in progress), applies one update, and appends the episode
    /// record once the episode ends.
    pub fn train_rollout(&mut self) -> Result<(RolloutBuffer, UpdateLosses)> {
        let progress = match self.progress.take() {
            Some(p) => p,
            None => EpisodeProgress {
                scan: self.env.reset(&mut self.env_rng),
                state: self.agent.net.initial_state(),
                ext: 0.0,
                pseudo: 0.0,
                length: 0,
                sums: UpdateLosses::default(),
                updates: 0,
            },
        };
        let EpisodeProgress {
            scan,
            state,
            mut ext,
            mut pseudo,
            mut length,
            mut sums,
            mut updates,
        } = progress;
        let mut tape = Tape::new();
        let p = self.agent.params.bind(&mut tape);
        let (buffer, nodes, carry) = self.collect(&mut tape, &p, scan, &state)?;
        for t in &buffer.transitions {
            ext += t.r_ext;
            pseudo += t.r_pseudo_sp + t.r_pseudo_rp;
        }
        length += buffer.len();
        let l = self.update(&mut tape, &p, &buffer, &nodes)?;
        sums.ac += l.ac;
        sums.sp += l.sp;
        sums.rp += l.rp;
        sums.ap += l.ap;
        updates += 1;
        match carry {
            Some((scan, state)) => {
                self.progress = Some(EpisodeProgress {
                    scan,
                    state,
                    ext,
                    pseudo,
                    length,
                    sums,
                    updates,
                });
            }
            None => {
                let n = updates as f64;
                let cause = buffer
                    .transitions
                    .last()
                    .map_or(DoneCause::Running, |t| t.done_cause);
                self.metrics.push(EpisodeRecord {
                    episode: self.episode,
                    variant: self.agent.variant(),
                    world: self.env.world(),
                    seed: self.seed,
                    ext_reward: ext,
                    pseudo_reward: pseudo,
                    length,
                    done_cause: cause,
                    loss_ac: sums.ac / n,
                    loss_sp: sums.sp / n,
                    loss_rp: sums.rp / n,
                    loss_ap: sums.ap / n,
                });
                self.episode += 1;
            }
        }
        Ok((buffer, l))
    }

    /// Trains until the current (or a fresh) episode ends and returns its
    /// record.
    pub fn run_episode(&mut self) -> Result<&EpisodeRecord> {
        while !self.train_rollout()?.0.done() {}
        Ok(self.metrics.episodes.last().expect("episode finished"))
    }
}

/// Accumulators of an episode spanning several rollouts.
struct EpisodeProgress {
    scan: LidarScan,
    state: RecurrentState,
    ext: f64,
    pseudo: f64,
    length: usize,
    sums: UpdateLosses,
    updates: usize,
}

/// Output layout `<out>/<world>/<variant>/<seed>/`.
pub fn run_dir(out: &Path, world: WorldId, variant: Variant, seed: u64) -> PathBuf {
    out.join(world.name())
        .join(variant.tag())
        .join(seed.to_string())
}

/// Runs `cfg.episodes` training episodes. When `out` is given, writes
/// `metrics.csv`, a checkpoint every `checkpoint_every` episodes and
/// `final.ckpt` into the run directory.
pub fn train_run(
    variant: Variant,
    world: WorldId,
    cfg: &TrainConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<Metrics> {
    train_run_on(variant, world.load(), cfg, seed, out)
}

pub fn train_run_on(
    variant: Variant,
    map: GridMap,
    cfg: &TrainConfig,
    seed: u64,
    out: Option<&Path>,
) -> Result<Metrics> {
    cfg.validate()?;
    let start = Instant::now();
    let world = map.world();
    let dir = out.map(|o| run_dir(o, world, variant, seed));
    if let Some(d) = &dir {
        std::fs::create_dir_all(d).map_err(|e| LabError::io(d, e))?;
    }
    let mut trainer = Trainer::new(variant, map, cfg.clone(), seed);
    for _ in 0..cfg.episodes {
        trainer.run_episode()?;
        let done = trainer.episodes_done();
        if let Some(d) = &dir {
            if cfg.checkpoint_every > 0 && done.is_multiple_of(cfg.checkpoint_every) {
                let path = d.join(format!("ckpt_{done:05}.ckpt"));
                trainer.checkpoint().save(&path)?;
            }
        }
    }
    let mut metrics = trainer.metrics().clone();
    metrics.wall_clock_secs = start.elapsed().as_secs_f64();
    if let Some(d) = &dir {
        metrics.save_csv(&d.join("metrics.csv"))?;
        trainer.checkpoint().save(&d.join("final.ckpt"))?;
    }
    Ok(metrics)
}

/// Anything that picks actions from scans.
pub trait Policy {
    fn begin_episode(&mut self);
    fn act(&mut self, scan: &LidarScan) -> Result<Action>;
}

/// Argmax of the agent's policy, first index on ties.
pub struct GreedyPolicy<'a> {
    agent: &'a Agent,
    tape: Tape,
    params: Bound,
    mark: usize,
    state: RecurrentState,
}

impl<'a> GreedyPolicy<'a> {
    pub fn new(agent: &'a Agent) -> Self {
        let mut tape = Tape::new();
        let params = agent.params.bind(&mut tape);
        let mark = tape.len();
        Self {
            agent,
            tape,
            params,
            mark,
            state: agent.net.initial_state(),
        }
    }
}

impl Policy for GreedyPolicy<'_> {
    fn begin_episode(&mut self) {
        self.state = self.agent.net.initial_state();
    }

    fn act(&mut self, scan: &LidarScan) -> Result<Action> {
        self.tape.truncate(self.mark);
        let rec = self.state.bind(&mut self.tape);
        let out = self
            .agent
            .net
            .forward(&mut self.tape, &self.params, scan, &rec)?;
        self.state = out.state.snapshot(&self.tape);
        Ok(greedy_action(self.tape.data(out.probs)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeOutcome {
    pub reward: f64,
    pub length: usize,
    pub cause: DoneCause,
    pub obstacle_present: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mean_reward: f64,
    pub goal_rate: f64,
    pub episodes: Vec<EpisodeOutcome>,
}

pub fn run_policy_episode(
    policy: &mut dyn Policy,
    env: &mut Env,
    first: LidarScan,
) -> Result<EpisodeOutcome> {
    policy.begin_episode();
    let mut scan = first;
    let mut reward = 0.0;
    loop {
        let a = policy.act(&scan)?;
        let (res, next) = env.step(a);
        reward += res.reward;
        if res.done {
            return Ok(EpisodeOutcome {
                reward,
                length: env.step_index(),
                cause: res.done_cause,
                obstacle_present: env.instance().obstacle_present(),
            });
        }
        scan = next;
    }
}

/// Runs `episodes` evaluation episodes; obstacle draws come from `seed`.
pub fn evaluate(
    policy: &mut dyn Policy,
    map: &GridMap,
    episodes: usize,
    seed: u64,
    episode_cap: usize,
) -> Result<EvalReport> {
    let mut env = Env::new(map.clone(), episode_cap);
    let mut rng = stream(seed, 3);
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let first = env.reset(&mut rng);
        out.push(run_policy_episode(policy, &mut env, first)?);
    }
    Ok(report(out))
}

/// Evaluation with the obstacle fixed present or absent.
pub fn evaluate_fixed(
    policy: &mut dyn Policy,
    map: &GridMap,
    episodes: usize,
    present: bool,
    episode_cap: usize,
) -> Result<EvalReport> {
    let mut env = Env::new(map.clone(), episode_cap);
    let mut out = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let first = env.reset_to(present);
        out.push(run_policy_episode(policy, &mut env, first)?);
    }
    Ok(report(out))
}

fn report(episodes: Vec<EpisodeOutcome>) -> EvalReport {
    let n = episodes.len().max(1) as f64;
    EvalReport {
        mean_reward: episodes.iter().map(|e| e.reward).sum::<f64>() / n,
        goal_rate: episodes
            .iter()
            .filter(|e| e.cause == DoneCause::Goal)
            .count() as f64
            / n,
        episodes,
    }
}

/// Loads a checkpoint and evaluates its greedy policy.
pub fn evaluate_checkpoint(
    ckpt: &Checkpoint,
    expected: Option<Variant>,
    world: WorldId,
    episodes: usize,
    seed: u64,
    episode_cap: usize,
) -> Result<EvalReport> {
    let agent = Agent::from_checkpoint(ckpt, expected).map_err(LabError::Invalid)?;
    let mut policy = GreedyPolicy::new(&agent);
    evaluate(&mut policy, &world.load(), episodes, seed, episode_cap)
}

/// Outcome of a two-armed bandit run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BanditResult {
    pub p_best: f64,
    pub entropy: f64,
}

/// Actor-critic on a one-step bandit: two logits and a scalar value
/// baseline, trained with the same loss as the navigation agent.
pub fn bandit_run(
    rewards: [f64; 2],
    updates: usize,
    lr: f64,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<BanditResult> {
    let mut params = diffcore::ParamStore::new();
    let logits = params.insert_zeros("logits", &[2]);
    let value = params.insert_zeros("value", &[1]);
    let mut adam = Adam::new(&params, lr);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..updates {
        let mut tape = Tape::new();
        let p = params.bind(&mut tape);
        let log_probs = tape.log_softmax(p[logits])?;
        let probs = tape.softmax(p[logits])?;
        let arm = if rng.gen::<f64>() < tape.data(probs)[0] {
            0
        } else {
            1
        };
        let r = rewards[arm];
        let lp = tape.pick(log_probs, arm)?;
        let v = tape.pick(p[value], 0)?;
        let ent = entropy(&mut tape, probs, log_probs)?;
        let returns = discounted_returns(&[r], 0.0, 1.0, true);
        let adv = advantage(&returns, &[tape.item(v)])?;
        let loss = actor_critic_loss(&mut tape, &[lp], &adv, &[v], &returns, &[ent], alpha, beta)?;
        let grads = tape.backward(loss)?;
        let g: Vec<Vec<f64>> = p.vars().iter().map(|&v| grads.wrt(v)).collect();
        adam.step(&mut params, &g)?;
    }
    let probs = diffcore::softmax(params.get(logits).data());
    let best = if rewards[0] >= rewards[1] { 0 } else { 1 };
    Ok(BanditResult {
        p_best: probs[best],
        entropy: -probs
            .iter()
            .map(|p| if *p > 0.0 { p * p.ln() } else { 0.0 })
            .sum::<f64>(),
    })
}
