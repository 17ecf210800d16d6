//! The actor-critic network, its memory-augmented variants and the
//! auxiliary prediction heads.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use diffcore::{Activation, Bound, Checkpoint, DiffError, ParamStore, Result, Tape, Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gridsim::{Action, LidarScan};
use crate::layers::{Conv, Dense, LstmCell};
use crate::memory::{Dnc, MemoryConfig, MemoryState, MemoryVars};
use crate::vin::{local_value_summary, vin_forward, VinConfig, SUMMARY_SIDE};

/// Floor inside the log of the action-prediction loss.
pub const LOG_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    Ac,
    AcAr,
    MaAc,
    MaAcAr,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Ac, Variant::AcAr, Variant::MaAc, Variant::MaAcAr];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::Ac => "AC",
            Variant::AcAr => "AC_AR",
            Variant::MaAc => "MA_AC",
            Variant::MaAcAr => "MA_AC_AR",
        }
    }

    pub fn use_memory(self) -> bool {
        matches!(self, Variant::MaAc | Variant::MaAcAr)
    }

    pub fn use_aux(self) -> bool {
        matches!(self, Variant::AcAr | Variant::MaAcAr)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| {
                format!("unknown variant {s:?}, expected one of AC, AC_AR, MA_AC, MA_AC_AR")
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuxConfig {
    pub eta_sp: f64,
    pub eta_rp: f64,
    pub lambda_sp: f64,
    pub lambda_rp: f64,
    pub lambda_ap: f64,
    pub overflow_value: f64,
    /// Add pseudo-rewards to the external reward (aux variants only).
    pub pseudo_rewards: bool,
}

impl Default for AuxConfig {
    fn default() -> Self {
        Self {
            eta_sp: 2.0,
            eta_rp: 2.0,
            lambda_sp: 0.2,
            lambda_rp: 0.1,
            lambda_ap: 0.1,
            overflow_value: 1.5,
            pseudo_rewards: true,
        }
    }
}

impl AuxConfig {
    /// Largest pseudo-reward a single step can produce.
    pub fn pseudo_cap(&self) -> f64 {
        self.eta_sp.max(self.eta_rp).max(self.overflow_value)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NetConfig {
    /// The scan is reshaped to `grid × grid`.
    pub grid: usize,
    pub conv_filters: usize,
    pub phi: usize,
    pub vin: VinConfig,
    pub memory: MemoryConfig,
    pub lstm_hidden: usize,
    pub head_hidden: usize,
    pub aux_hidden: usize,
    /// Ranges are divided by this before encoding.
    pub max_range: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            grid: 10,
            conv_filters: 16,
            phi: 64,
            vin: VinConfig::default(),
            memory: MemoryConfig::default(),
            lstm_hidden: 128,
            head_hidden: 64,
            aux_hidden: 64,
            max_range: 10.0,
        }
    }
}

impl NetConfig {
    pub fn scan_len(&self) -> usize {
        self.grid * self.grid
    }

    /// Key/value view used for checkpoint headers and config files.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("grid", self.grid.to_string()),
            ("conv_filters", self.conv_filters.to_string()),
            ("phi", self.phi.to_string()),
            ("vin_actions", self.vin.actions.to_string()),
            ("vin_kernel", self.vin.kernel.to_string()),
            ("vin_iterations", self.vin.iterations.to_string()),
            ("memory_slots", self.memory.slots.to_string()),
            ("memory_word", self.memory.word.to_string()),
            ("memory_hidden", self.memory.hidden.to_string()),
            ("lstm_hidden", self.lstm_hidden.to_string()),
            ("head_hidden", self.head_hidden.to_string()),
            ("aux_hidden", self.aux_hidden.to_string()),
            ("max_range", format!("{:?}", self.max_range)),
        ]
    }

    /// Applies one key; returns `Ok(false)` if the key is not a network key.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<bool, String> {
        fn num<T: FromStr>(key: &str, v: &str) -> std::result::Result<T, String> {
            v.parse().map_err(|_| format!("bad value {v:?} for {key}"))
        }
        match key {
            "grid" => self.grid = num(key, value)?,
            "conv_filters" => self.conv_filters = num(key, value)?,
            "phi" => self.phi = num(key, value)?,
            "vin_actions" => self.vin.actions = num(key, value)?,
            "vin_kernel" => self.vin.kernel = num(key, value)?,
            "vin_iterations" => self.vin.iterations = num(key, value)?,
            "memory_slots" => self.memory.slots = num(key, value)?,
            "memory_word" => self.memory.word = num(key, value)?,
            "memory_hidden" => self.memory.hidden = num(key, value)?,
            "lstm_hidden" => self.lstm_hidden = num(key, value)?,
            "head_hidden" => self.head_hidden = num(key, value)?,
            "aux_hidden" => self.aux_hidden = num(key, value)?,
            "max_range" => self.max_range = num(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn validate(&self) -> std::result::Result<(), String> {
        let positive = [
            ("grid", self.grid),
            ("conv_filters", self.conv_filters),
            ("phi", self.phi),
            ("vin_actions", self.vin.actions),
            ("memory_slots", self.memory.slots),
            ("memory_word", self.memory.word),
            ("memory_hidden", self.memory.hidden),
            ("lstm_hidden", self.lstm_hidden),
            ("head_hidden", self.head_hidden),
            ("aux_hidden", self.aux_hidden),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(format!("{k} must be positive"));
        }
        if self.vin.kernel.is_multiple_of(2) {
            return Err("vin_kernel must be odd".into());
        }
        let side = self.grid / SUMMARY_SIDE;
        if !self.grid.is_multiple_of(SUMMARY_SIDE) || !side.is_power_of_two() {
            return Err(format!("grid must be 5·2^j, got {}", self.grid));
        }
        if self.max_range <= 0.0 {
            return Err("max_range must be positive".into());
        }
        Ok(())
    }
}

/// Recurrent state carried between steps, detached from any tape.
#[derive(Clone, Debug, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum RecurrentState {
    Lstm {
        h: Tensor,
        c: Tensor,
    },
    Dnc {
        h: Tensor,
        c: Tensor,
        memory: MemoryState,
    },
}

impl RecurrentState {
    pub fn bind(&self, tape: &mut Tape) -> RecurrentVars {
        match self {
            RecurrentState::Lstm { h, c } => RecurrentVars::Lstm {
                h: tape.leaf(h.clone()),
                c: tape.leaf(c.clone()),
            },
            RecurrentState::Dnc { h, c, memory } => RecurrentVars::Dnc {
                h: tape.leaf(h.clone()),
                c: tape.leaf(c.clone()),
                memory: memory.bind(tape),
            },
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub enum RecurrentVars {
    Lstm { h: Var, c: Var },
    Dnc { h: Var, c: Var, memory: MemoryVars },
}

impl RecurrentVars {
    pub fn snapshot(&self, tape: &Tape) -> RecurrentState {
        match self {
            RecurrentVars::Lstm { h, c } => RecurrentState::Lstm {
                h: tape.value(*h).clone(),
                c: tape.value(*c).clone(),
            },
            RecurrentVars::Dnc { h, c, memory } => RecurrentState::Dnc {
                h: tape.value(*h).clone(),
                c: tape.value(*c).clone(),
                memory: memory.snapshot(tape),
            },
        }
    }
}

/// Encoder outputs.
#[derive(Clone, Copy, Debug)]
pub struct Encoding {
    /// Latent `φ`.
    pub phi: Var,
    /// Reward map `R̄`, `[1,grid,grid]`.
    pub reward_map: Option<Var>,
    /// Transition kernel `[A,2,k,k]`.
    pub kernel: Option<Var>,
}

#[derive(Clone, Copy, Debug)]
pub struct StepOutput {
    pub phi: Var,
    pub log_probs: Var,
    pub probs: Var,
    pub value: Var,
    pub state: RecurrentVars,
}

#[derive(Clone, Copy, Debug)]
pub struct AuxOutputs {
    pub phi_next_pred: Var,
    pub reward_pred: Var,
    pub action_pred_probs: Var,
}

#[derive(Clone, Debug)]
enum Core {
    Lstm(LstmCell),
    Dnc(Dnc),
}

#[derive(Clone, Debug)]
struct Head {
    hidden: Dense,
    out: Dense,
}

impl Head {
    fn new(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        outputs: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Self {
            hidden: Dense::new(
                store,
                &format!("{name}.0"),
                inputs,
                hidden,
                Activation::Relu,
                rng,
            ),
            out: Dense::new(
                store,
                &format!("{name}.1"),
                hidden,
                outputs,
                Activation::Identity,
                rng,
            ),
        }
    }

    fn apply(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let h = self.hidden.apply(tape, p, x)?;
        self.out.apply(tape, p, h)
    }
}

/// Network topology. Parameters live in a separate [`ParamStore`].
#[derive(Clone, Debug)]
pub struct Network {
    variant: Variant,
    cfg: NetConfig,
    conv1: Conv,
    conv2: Conv,
    phi: Dense,
    reward_head: Option<Conv>,
    kernel_head: Option<Dense>,
    core: Core,
    head: Dense,
    actor: Dense,
    critic: Dense,
    sp: Head,
    rp: Head,
    ap: Head,
}

impl Network {
    /// Builds the topology and initializes `store`. Auxiliary heads exist
    /// for every variant so that variants differing only in the use of
    /// auxiliary losses start from identical parameters.
    pub fn new(
        variant: Variant,
        cfg: NetConfig,
        store: &mut ParamStore,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let f = cfg.conv_filters;
        let plane = cfg.scan_len();
        let conv1 = Conv::new(store, "enc.conv1", 1, f, 3, true, rng);
        let conv2 = Conv::new(store, "enc.conv2", f, f, 3, true, rng);
        let phi = Dense::new(store, "enc.phi", f * plane, cfg.phi, Activation::Tanh, rng);
        let (reward_head, kernel_head, core, core_out) = if variant.use_memory() {
            let reward = Conv::new(store, "vin.reward", f, 1, 1, false, rng);
            let kernel = Dense::new(
                store,
                "vin.kernel",
                cfg.phi,
                cfg.vin.kernel_len(),
                Activation::Tanh,
                rng,
            );
            let summary = SUMMARY_SIDE * SUMMARY_SIDE;
            let dnc = Dnc::new(store, "dnc", cfg.phi + summary, cfg.memory, rng);
            let out = dnc.output_len();
            (Some(reward), Some(kernel), Core::Dnc(dnc), out)
        } else {
            let lstm = LstmCell::new(store, "lstm", cfg.phi, cfg.lstm_hidden, rng);
            (None, None, Core::Lstm(lstm), cfg.lstm_hidden)
        };
        let head = Dense::new(
            store,
            "head",
            core_out,
            cfg.head_hidden,
            Activation::Relu,
            rng,
        );
        let actor = Dense::new(
            store,
            "actor",
            cfg.head_hidden,
            Action::COUNT,
            Activation::Identity,
            rng,
        );
        let critic = Dense::new(
            store,
            "critic",
            cfg.head_hidden,
            1,
            Activation::Identity,
            rng,
        );
        let a = Action::COUNT;
        let sp = Head::new(store, "aux.sp", cfg.phi + a, cfg.aux_hidden, cfg.phi, rng);
        let rp = Head::new(store, "aux.rp", 2 * cfg.phi + a, cfg.aux_hidden, 1, rng);
        let ap = Head::new(store, "aux.ap", 2 * cfg.phi, cfg.aux_hidden, a, rng);
        Self {
            variant,
            cfg,
            conv1,
            conv2,
            phi,
            reward_head,
            kernel_head,
            core,
            head,
            actor,
            critic,
            sp,
            rp,
            ap,
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> &NetConfig {
        &self.cfg
    }

    pub fn initial_state(&self) -> RecurrentState {
        match &self.core {
            Core::Lstm(cell) => RecurrentState::Lstm {
                h: Tensor::zeros(&[cell.hidden()]),
                c: Tensor::zeros(&[cell.hidden()]),
            },
            Core::Dnc(dnc) => {
                let m = dnc.config();
                RecurrentState::Dnc {
                    h: Tensor::zeros(&[m.hidden]),
                    c: Tensor::zeros(&[m.hidden]),
                    memory: MemoryState::fresh(m),
                }
            }
        }
    }

    /// Normalized scan as a leaf.
    pub fn scan_input(&self, tape: &mut Tape, scan: &LidarScan) -> Result<Var> {
        let n = self.cfg.scan_len();
        if scan.len() != n {
            return Err(DiffError::ShapeMismatch {
                op: "encode",
                expected: vec![n],
                found: vec![scan.len()],
            });
        }
        let g = self.cfg.grid;
        let data = scan.ranges.iter().map(|r| r / self.cfg.max_range).collect();
        Ok(tape.leaf(Tensor::new(&[1, g, g], data)?))
    }

    /// Encoder on a `[1,grid,grid]` input. The reward map and kernel are
    /// produced only for the memory-augmented variants.
    pub fn encode(&self, tape: &mut Tape, p: &Bound, input: Var) -> Result<Encoding> {
        let x = self.conv1.apply(tape, p, input)?;
        let x = self.conv2.apply(tape, p, x)?;
        let flat = tape.reshape(x, &[self.cfg.conv_filters * self.cfg.scan_len()])?;
        let phi = self.phi.apply(tape, p, flat)?;
        let reward_map = match &self.reward_head {
            Some(head) => Some(head.apply(tape, p, x)?),
            None => None,
        };
        let kernel = match &self.kernel_head {
            Some(head) => {
                // tanh/k² keeps every backup non-expansive.
                let k = self.cfg.vin.kernel;
                let raw = head.apply(tape, p, phi)?;
                let scaled = tape.scale(raw, 1.0 / (k * k) as f64);
                Some(tape.reshape(scaled, &self.cfg.vin.kernel_shape())?)
            }
            None => None,
        };
        Ok(Encoding {
            phi,
            reward_map,
            kernel,
        })
    }

    pub fn encode_scan(&self, tape: &mut Tape, p: &Bound, scan: &LidarScan) -> Result<Encoding> {
        let input = self.scan_input(tape, scan)?;
        self.encode(tape, p, input)
    }

    /// One step of the policy and value network.
    pub fn forward(
        &self,
        tape: &mut Tape,
        p: &Bound,
        scan: &LidarScan,
        state: &RecurrentVars,
    ) -> Result<StepOutput> {
        let input = self.scan_input(tape, scan)?;
        self.forward_input(tape, p, input, state)
    }

    pub fn forward_input(
        &self,
        tape: &mut Tape,
        p: &Bound,
        input: Var,
        state: &RecurrentVars,
    ) -> Result<StepOutput> {
        let enc = self.encode(tape, p, input)?;
        let (features, state) = match (&self.core, state) {
            (Core::Lstm(cell), RecurrentVars::Lstm { h, c }) => {
                let (h, c) = cell.step(tape, p, enc.phi, *h, *c)?;
                (h, RecurrentVars::Lstm { h, c })
            }
            (Core::Dnc(dnc), RecurrentVars::Dnc { h, c, memory }) => {
                let (r, k) = (
                    enc.reward_map.expect("memory variant"),
                    enc.kernel.expect("memory variant"),
                );
                let v = vin_forward(tape, r, k, self.cfg.vin.iterations)?;
                let summary = local_value_summary(tape, v)?;
                let x = tape.concat(&[enc.phi, summary]);
                let out = dnc.step(tape, p, *h, *c, x, memory)?;
                (
                    out.output,
                    RecurrentVars::Dnc {
                        h: out.h,
                        c: out.c,
                        memory: out.state,
                    },
                )
            }
            _ => {
                return Err(DiffError::InvalidArgument {
                    op: "forward",
                    msg: format!("recurrent state does not match variant {}", self.variant),
                })
            }
        };
        let hidden = self.head.apply(tape, p, features)?;
        let logits = self.actor.apply(tape, p, hidden)?;
        let log_probs = tape.log_softmax(logits)?;
        let probs = tape.softmax(logits)?;
        let value = self.critic.apply(tape, p, hidden)?;
        Ok(StepOutput {
            phi: enc.phi,
            log_probs,
            probs,
            value,
            state,
        })
    }

    /// Auxiliary predictions for the transition `(φ_t, a_t) → φ_{t+1}`.
    pub fn aux(
        &self,
        tape: &mut Tape,
        p: &Bound,
        phi: Var,
        action: Action,
        phi_next: Var,
    ) -> Result<AuxOutputs> {
        let mut onehot = vec![0.0; Action::COUNT];
        onehot[action.index()] = 1.0;
        let a = tape.leaf(Tensor::vector(onehot));
        let sp_in = tape.concat(&[phi, a]);
        let phi_next_pred = self.sp.apply(tape, p, sp_in)?;
        let rp_in = tape.concat(&[phi, a, phi_next]);
        let reward_pred = self.rp.apply(tape, p, rp_in)?;
        let ap_in = tape.concat(&[phi, phi_next]);
        let logits = self.ap.apply(tape, p, ap_in)?;
        let action_pred_probs = tape.softmax(logits)?;
        Ok(AuxOutputs {
            phi_next_pred,
            reward_pred,
            action_pred_probs,
        })
    }
}

/// `½‖φ̂ − φ‖²`. Callers detach `phi_next` so the target is a constant.
pub fn loss_state_prediction(tape: &mut Tape, phi_next_pred: Var, phi_next: Var) -> Result<Var> {
    let d = tape.sub(phi_next_pred, phi_next)?;
    let sq = tape.square(d);
    let s = tape.sum(sq);
    Ok(tape.scale(s, 0.5))
}

/// `½(r̂ − r)²`.
pub fn loss_reward_prediction(tape: &mut Tape, reward_pred: Var, reward: f64) -> Result<Var> {
    if tape.value(reward_pred).len() != 1 {
        return Err(DiffError::ShapeMismatch {
            op: "loss_reward_prediction",
            expected: vec![1],
            found: tape.shape(reward_pred).to_vec(),
        });
    }
    let d = tape.affine(reward_pred, 1.0, -reward);
    let sq = tape.square(d);
    let s = tape.sum(sq);
    Ok(tape.scale(s, 0.5))
}

/// `−log p(a)` with the probability floored at [`LOG_FLOOR`].
pub fn loss_action_prediction(tape: &mut Tape, probs: Var, action: usize) -> Result<Var> {
    let p = tape.pick(probs, action)?;
    let lp = tape.ln_floor(p, LOG_FLOOR);
    Ok(tape.scale(lp, -1.0))
}

/// The loss itself inside `[−η, η]`, the overflow constant outside.
pub fn pseudo_reward(loss: f64, eta: f64, overflow_value: f64) -> f64 {
    if -eta <= loss && loss <= eta {
        loss
    } else {
        overflow_value
    }
}

/// `L_AC + λ_SP·L_SP + λ_RP·L_RP + λ_AP·L_AP`; auxiliary terms vanish for
/// variants without auxiliary losses.
pub fn total_loss(
    tape: &mut Tape,
    ac: Var,
    aux: Option<(Var, Var, Var)>,
    cfg: &AuxConfig,
    variant: Variant,
) -> Result<Var> {
    match aux {
        Some((sp, rp, ap)) if variant.use_aux() => {
            let sp = tape.scale(sp, cfg.lambda_sp);
            let rp = tape.scale(rp, cfg.lambda_rp);
            let ap = tape.scale(ap, cfg.lambda_ap);
            let a = tape.add(ac, sp)?;
            let b = tape.add(a, rp)?;
            tape.add(b, ap)
        }
        _ => Ok(ac),
    }
}

/// Scalar form of [`total_loss`].
pub fn total_loss_value(
    ac: f64,
    sp: f64,
    rp: f64,
    ap: f64,
    cfg: &AuxConfig,
    variant: Variant,
) -> f64 {
    if variant.use_aux() {
        ac + cfg.lambda_sp * sp + cfg.lambda_rp * rp + cfg.lambda_ap * ap
    } else {
        ac
    }
}

/// External reward plus the state- and reward-prediction pseudo-rewards.
/// Action prediction contributes no pseudo-reward.
pub fn modified_reward(r_ext: f64, r_sp: f64, r_rp: f64, variant: Variant) -> f64 {
    if variant.use_aux() {
        r_ext + r_sp + r_rp
    } else {
        r_ext
    }
}

/// Network plus parameters.
#[derive(Clone, Debug)]
pub struct Agent {
    pub net: Network,
    pub params: ParamStore,
}

impl Agent {
    pub fn new(variant: Variant, cfg: NetConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let net = Network::new(variant, cfg, &mut params, &mut rng);
        Self { net, params }
    }

    pub fn variant(&self) -> Variant {
        self.net.variant()
    }

    pub fn checkpoint(&self, extra: &[(&str, String)]) -> Checkpoint {
        let mut meta = BTreeMap::new();
        meta.insert("variant".to_string(), self.variant().tag().to_string());
        for (k, v) in self.net.config().to_pairs() {
            meta.insert(format!("net.{k}"), v);
        }
        for (k, v) in extra {
            meta.insert(k.to_string(), v.clone());
        }
        Checkpoint {
            meta,
            params: self.params.clone(),
        }
    }

    /// Rebuilds an agent from a checkpoint, checking the variant and every
    /// parameter shape.
    pub fn from_checkpoint(
        ckpt: &Checkpoint,
        expected: Option<Variant>,
    ) -> std::result::Result<Self, String> {
        let variant: Variant = ckpt
            .meta
            .get("variant")
            .ok_or("checkpoint has no variant")?
            .parse()?;
        if let Some(e) = expected {
            if e != variant {
                return Err(format!("checkpoint holds a {variant} agent, expected {e}"));
            }
        }
        let mut cfg = NetConfig::default();
        for (k, v) in &ckpt.meta {
            if let Some(key) = k.strip_prefix("net.") {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        let mut agent = Agent::new(variant, cfg, 0);
        if agent.params.len() != ckpt.params.len() {
            return Err(format!(
                "checkpoint has {} tensors, {variant} needs {}",
                ckpt.params.len(),
                agent.params.len()
            ));
        }
        let ids: Vec<_> = agent.params.ids().collect();
        for id in ids {
            let name = agent.params.name(id).to_string();
            let src = ckpt
                .params
                .find(&name)
                .map(|i| ckpt.params.get(i))
                .ok_or_else(|| format!("checkpoint lacks parameter {name}"))?;
            if src.shape() != agent.params.get(id).shape() {
                return Err(format!("parameter {name} has shape {:?}", src.shape()));
            }
            *agent.params.get_mut(id) = src.clone();
        }
        Ok(agent)
    }
}
