use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentKind, AgentSpec, HeadKind};
use crate::error::{Error, Result};
use crate::nn::{softmax_in_place, Activation, ForwardCache, Matrix, Mlp, MlpSpec, ParamSet};
use crate::scalar::Scalar;

/// Embeddings of one observation: `hˢ` and (for DRON kinds) `hᵒ`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenReps<T> {
    pub state: Vec<T>,
    pub opponent: Vec<T>,
}

/// Mixture weights over the experts; a probability vector of length K.
#[derive(Debug, Clone, PartialEq)]
pub struct GateOutput<T> {
    pub weights: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OpponentPrediction<T> {
    Distribution(Vec<T>),
    Scalar(T),
}

/// Network topology for an [`AgentSpec`]. Parameters live outside, in a
/// [`ParamSet`], so the same agent evaluates live and frozen copies.
#[derive(Debug, Clone)]
pub struct Agent {
    spec: AgentSpec,
    state_tower: Mlp,
    opponent_tower: Option<Mlp>,
    q_head: Option<Mlp>,
    experts: Vec<Mlp>,
    gate: Option<Mlp>,
    opponent_head: Option<Mlp>,
}

/// Everything the backward pass needs from one batched forward pass.
#[derive(Debug, Clone)]
pub struct AgentForward<T> {
    q: Matrix<T>,
    state_cache: ForwardCache<T>,
    opponent_cache: Option<ForwardCache<T>>,
    head_cache: Option<ForwardCache<T>>,
    expert_caches: Vec<ForwardCache<T>>,
    gate_cache: Option<ForwardCache<T>>,
    gate_weights: Option<Matrix<T>>,
    supervision_cache: Option<ForwardCache<T>>,
}

impl<T: Scalar> AgentForward<T> {
    /// Q-values, one row per input and one column per action.
    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn gate_weights(&self) -> Option<&Matrix<T>> {
        self.gate_weights.as_ref()
    }

    /// Per-expert Q-values (DRON-MoE only).
    pub fn expert_q(&self, expert: usize) -> Option<&Matrix<T>> {
        self.expert_caches.get(expert).map(|c| c.output())
    }

    pub fn state_embedding(&self) -> &Matrix<T> {
        self.state_cache.output()
    }

    pub fn opponent_embedding(&self) -> Option<&Matrix<T>> {
        self.opponent_cache.as_ref().map(|c| c.output())
    }

    pub fn supervision(&self) -> Option<&Matrix<T>> {
        self.supervision_cache.as_ref().map(|c| c.output())
    }

    pub fn batch_size(&self) -> usize {
        self.q.rows()
    }

    /// Smallest |pre-activation| feeding any ReLU. Finite differences are
    /// unreliable when this is close to zero.
    pub fn relu_margin(&self) -> T {
        let mut margin = T::infinity();
        let mut scan = |cache: &ForwardCache<T>, layers: usize| {
            for l in 0..layers {
                for &v in cache.pre_activation(l).as_slice() {
                    margin = margin.min(v.abs());
                }
            }
        };
        scan(&self.state_cache, self.state_cache.num_layers());
        if let Some(c) = &self.opponent_cache {
            scan(c, c.num_layers());
        }
        if let Some(c) = &self.head_cache {
            scan(c, c.num_layers() - 1);
        }
        if let Some(c) = &self.gate_cache {
            scan(c, c.num_layers());
        }
        margin
    }
}

impl Agent {
    pub fn new(spec: AgentSpec) -> Result<Self> {
        spec.validate()?;
        let mut state_sizes = vec![spec.state_dim];
        state_sizes.extend(&spec.state_hidden);
        let state_tower = Mlp::new("state_tower", MlpSpec::new(state_sizes, Activation::Relu)?)?;
        let hs = spec.state_embedding();
        let ho = spec.opponent_hidden;

        let opponent_tower = if spec.kind.uses_opponent() {
            Some(Mlp::new(
                "opponent_tower",
                MlpSpec::new(vec![spec.opponent_dim, ho], Activation::Relu)?,
            )?)
        } else {
            None
        };
        let (q_head, experts, gate) = match spec.kind {
            AgentKind::Dqn => (
                Some(Mlp::new(
                    "q_head",
                    MlpSpec::new(vec![hs, spec.actions], Activation::Identity)?,
                )?),
                Vec::new(),
                None,
            ),
            AgentKind::DronConcat => (
                Some(Mlp::new(
                    "q_head",
                    MlpSpec::new(
                        vec![hs + ho, spec.head_hidden, spec.actions],
                        Activation::Identity,
                    )?,
                )?),
                Vec::new(),
                None,
            ),
            AgentKind::DronMoe => {
                let experts = (0..spec.experts)
                    .map(|i| {
                        Mlp::new(
                            &format!("expert.{i}"),
                            MlpSpec::new(vec![hs, spec.actions], Activation::Identity)?,
                        )
                    })
                    .collect::<Result<Vec<_>>>()?;
                // ReLU here; the softmax over experts is applied on top.
                let gate = Mlp::new(
                    "gate",
                    MlpSpec::new(vec![ho, spec.experts], Activation::Relu)?,
                )?;
                (None, experts, Some(gate))
            }
        };
        let opponent_head = match spec.supervision {
            None => None,
            Some(HeadKind::Classes(n)) => Some(Mlp::new(
                "opponent_head",
                MlpSpec::new(vec![ho, n], Activation::Softmax)?,
            )?),
            Some(HeadKind::Scalar) => Some(Mlp::new(
                "opponent_head",
                MlpSpec::new(vec![ho, 1], Activation::Sigmoid)?,
            )?),
        };
        Ok(Self {
            spec,
            state_tower,
            opponent_tower,
            q_head,
            experts,
            gate,
            opponent_head,
        })
    }

    pub fn spec(&self) -> &AgentSpec {
        &self.spec
    }

    fn networks(&self) -> impl Iterator<Item = &Mlp> {
        // Initialization order: the supervision head comes last so adding it
        // leaves every other initial weight unchanged.
        std::iter::once(&self.state_tower)
            .chain(self.q_head.iter())
            .chain(self.experts.iter())
            .chain(self.opponent_tower.iter())
            .chain(self.gate.iter())
            .chain(self.opponent_head.iter())
    }

    /// Fresh parameters, deterministic in `seed`.
    pub fn init_params<T: Scalar>(&self, seed: u64) -> Result<ParamSet<T>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamSet::new();
        for net in self.networks() {
            net.init_into(&mut params, &mut rng)?;
        }
        Ok(params)
    }

    pub fn check_params<T: Scalar>(&self, params: &ParamSet<T>) -> Result<()> {
        let expected: usize = self.networks().map(|n| n.layer_names().len()).sum();
        if params.len() != expected {
            return Err(Error::config(format!(
                "agent expects {expected} parameter entries, got {}",
                params.len()
            )));
        }
        self.networks().try_for_each(|n| n.check_params(params))
    }

    /// Batched forward pass. `opponents` is ignored by the DQN kind.
    pub fn forward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        states: &Matrix<T>,
        opponents: Option<&Matrix<T>>,
    ) -> Result<AgentForward<T>> {
        let (hs, state_cache) = self.state_tower.forward(params, states)?;
        let opponent_cache = match &self.opponent_tower {
            Some(tower) => {
                let opp = opponents.ok_or_else(|| {
                    Error::config(format!("{} needs opponent features", self.spec.kind))
                })?;
                if opp.rows() != states.rows() {
                    return Err(Error::config("state and opponent batches differ in size"));
                }
                Some(tower.forward(params, opp)?.1)
            }
            None => None,
        };
        let ho = opponent_cache.as_ref().map(|c| c.output());

        let mut head_cache = None;
        let mut expert_caches = Vec::new();
        let mut gate_cache = None;
        let mut gate_weights = None;
        let q = match self.spec.kind {
            AgentKind::Dqn => {
                let (q, cache) = self
                    .q_head
                    .as_ref()
                    .expect("dqn head")
                    .forward(params, &hs)?;
                head_cache = Some(cache);
                q
            }
            AgentKind::DronConcat => {
                let joint = Matrix::hstack(&hs, ho.expect("opponent tower"));
                let (q, cache) = self
                    .q_head
                    .as_ref()
                    .expect("concat head")
                    .forward(params, &joint)?;
                head_cache = Some(cache);
                q
            }
            AgentKind::DronMoe => {
                let (mut w, gcache) = self
                    .gate
                    .as_ref()
                    .expect("gate")
                    .forward(params, ho.expect("opponent tower"))?;
                for r in 0..w.rows() {
                    softmax_in_place(w.row_mut(r));
                }
                let mut q = Matrix::zeros(states.rows(), self.spec.actions);
                for (i, expert) in self.experts.iter().enumerate() {
                    let (qi, cache) = expert.forward(params, &hs)?;
                    for r in 0..q.rows() {
                        let wi = w.get(r, i);
                        for (acc, &v) in q.row_mut(r).iter_mut().zip(qi.row(r)) {
                            *acc = *acc + wi * v;
                        }
                    }
                    expert_caches.push(cache);
                }
                gate_cache = Some(gcache);
                gate_weights = Some(w);
                q
            }
        };
        let supervision_cache = match (&self.opponent_head, ho) {
            (Some(head), Some(ho)) => Some(head.forward(params, ho)?.1),
            _ => None,
        };
        Ok(AgentForward {
            q,
            state_cache,
            opponent_cache,
            head_cache,
            expert_caches,
            gate_cache,
            gate_weights,
            supervision_cache,
        })
    }

    /// Parameter gradients given the loss gradient at the Q outputs and,
    /// optionally, at the supervision head output.
    pub fn backward<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        fwd: &AgentForward<T>,
        q_grad: &Matrix<T>,
        supervision_grad: Option<&Matrix<T>>,
    ) -> Result<ParamSet<T>> {
        if q_grad.shape() != fwd.q.shape() {
            return Err(Error::config(
                "Q gradient shape does not match the forward pass",
            ));
        }
        let batch = q_grad.rows();
        let mut grads = params.zeros_like();
        let mut d_hs = Matrix::zeros(batch, self.spec.state_embedding());
        let mut d_ho = self
            .opponent_tower
            .as_ref()
            .map(|_| Matrix::zeros(batch, self.spec.opponent_hidden));

        match self.spec.kind {
            AgentKind::Dqn => {
                let head = self.q_head.as_ref().expect("dqn head");
                d_hs = head.backward(
                    params,
                    fwd.head_cache.as_ref().expect("head cache"),
                    q_grad,
                    &mut grads,
                )?;
            }
            AgentKind::DronConcat => {
                let head = self.q_head.as_ref().expect("concat head");
                let d_joint = head.backward(
                    params,
                    fwd.head_cache.as_ref().expect("head cache"),
                    q_grad,
                    &mut grads,
                )?;
                let hs_width = d_hs.cols();
                d_hs = d_joint.columns(0, hs_width);
                d_ho = Some(d_joint.columns(hs_width, self.spec.opponent_hidden));
            }
            AgentKind::DronMoe => {
                let w = fwd.gate_weights.as_ref().expect("gate weights");
                let k = self.experts.len();
                // dL/dw_i = <dL/dQ, Q_i>, per row
                let mut d_w = Matrix::zeros(batch, k);
                for (i, (expert, cache)) in self.experts.iter().zip(&fwd.expert_caches).enumerate()
                {
                    let qi = cache.output();
                    let mut d_qi = q_grad.clone();
                    for r in 0..batch {
                        let wi = w.get(r, i);
                        let dot: T = q_grad
                            .row(r)
                            .iter()
                            .zip(qi.row(r))
                            .map(|(&a, &b)| a * b)
                            .sum();
                        d_w.set(r, i, dot);
                        d_qi.row_mut(r).iter_mut().for_each(|v| *v = *v * wi);
                    }
                    let d = expert.backward(params, cache, &d_qi, &mut grads)?;
                    add_into(&mut d_hs, &d);
                }
                // softmax Jacobian: dz_i = w_i (dw_i − Σ_j w_j dw_j)
                let mut d_gate = d_w;
                for r in 0..batch {
                    let wr = w.row(r);
                    let dot: T = wr.iter().zip(d_gate.row(r)).map(|(&a, &b)| a * b).sum();
                    for (d, &wi) in d_gate.row_mut(r).iter_mut().zip(wr) {
                        *d = wi * (*d - dot);
                    }
                }
                let gate = self.gate.as_ref().expect("gate");
                let d = gate.backward(
                    params,
                    fwd.gate_cache.as_ref().expect("gate cache"),
                    &d_gate,
                    &mut grads,
                )?;
                add_into(d_ho.as_mut().expect("opponent grad"), &d);
            }
        }

        if let (Some(head), Some(cache), Some(g)) = (
            &self.opponent_head,
            &fwd.supervision_cache,
            supervision_grad,
        ) {
            let d = head.backward(params, cache, g, &mut grads)?;
            add_into(d_ho.as_mut().expect("opponent grad"), &d);
        }

        self.state_tower
            .backward(params, &fwd.state_cache, &d_hs, &mut grads)?;
        if let (Some(tower), Some(cache), Some(d)) =
            (&self.opponent_tower, &fwd.opponent_cache, d_ho.as_ref())
        {
            tower.backward(params, cache, d, &mut grads)?;
        }
        Ok(grads)
    }

    fn single<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        state: &[T],
        opponent: Option<&[T]>,
    ) -> Result<AgentForward<T>> {
        if state.len() != self.spec.state_dim {
            return Err(Error::config(format!(
                "state features have length {}, expected {}",
                state.len(),
                self.spec.state_dim
            )));
        }
        let opp = match (self.spec.kind.uses_opponent(), opponent) {
            (true, Some(o)) if o.len() != self.spec.opponent_dim => {
                return Err(Error::config(format!(
                    "opponent features have length {}, expected {}",
                    o.len(),
                    self.spec.opponent_dim
                )))
            }
            (true, Some(o)) => Some(Matrix::row_vector(o)),
            (true, None) => return Err(Error::config("opponent features required")),
            (false, _) => None,
        };
        self.forward(params, &Matrix::row_vector(state), opp.as_ref())
    }

    /// Q-values for one observation, whatever the kind.
    pub fn q_values<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        state: &[T],
        opponent: &[T],
    ) -> Result<Vec<T>> {
        Ok(self.single(params, state, Some(opponent))?.q.into_vec())
    }

    /// `hˢ` and `hᵒ` for one observation; `hᵒ` is empty for DQN.
    pub fn encode<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        state: &[T],
        opponent: &[T],
    ) -> Result<HiddenReps<T>> {
        let fwd = self.single(params, state, Some(opponent))?;
        Ok(HiddenReps {
            state: fwd.state_embedding().as_slice().to_vec(),
            opponent: fwd
                .opponent_embedding()
                .map(|m| m.as_slice().to_vec())
                .unwrap_or_default(),
        })
    }

    fn expect_kind(&self, kind: AgentKind) -> Result<()> {
        if self.spec.kind == kind {
            Ok(())
        } else {
            Err(Error::usage(format!(
                "{kind} evaluation on a {} agent",
                self.spec.kind
            )))
        }
    }

    pub fn q_dqn<T: Scalar>(&self, params: &ParamSet<T>, state: &[T]) -> Result<Vec<T>> {
        self.expect_kind(AgentKind::Dqn)?;
        Ok(self.single(params, state, None)?.q.into_vec())
    }

    pub fn q_dron_concat<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        state: &[T],
        opponent: &[T],
    ) -> Result<Vec<T>> {
        self.expect_kind(AgentKind::DronConcat)?;
        self.q_values(params, state, opponent)
    }

    pub fn q_dron_moe<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        state: &[T],
        opponent: &[T],
    ) -> Result<(Vec<T>, GateOutput<T>)> {
        self.expect_kind(AgentKind::DronMoe)?;
        let fwd = self.single(params, state, Some(opponent))?;
        let weights = fwd
            .gate_weights
            .as_ref()
            .expect("moe gate")
            .as_slice()
            .to_vec();
        Ok((fwd.q.into_vec(), GateOutput { weights }))
    }

    /// Opponent prediction from an opponent embedding `hᵒ`.
    pub fn predict_opponent<T: Scalar>(
        &self,
        params: &ParamSet<T>,
        opponent_embedding: &[T],
    ) -> Result<OpponentPrediction<T>> {
        let head = self
            .opponent_head
            .as_ref()
            .ok_or_else(|| Error::usage("agent has no multitask head"))?;
        if opponent_embedding.len() != self.spec.opponent_hidden {
            return Err(Error::config("opponent embedding has the wrong length"));
        }
        let (out, _) = head.forward(params, &Matrix::row_vector(opponent_embedding))?;
        Ok(match self.spec.supervision {
            Some(HeadKind::Scalar) => OpponentPrediction::Scalar(out.get(0, 0)),
            _ => OpponentPrediction::Distribution(out.into_vec()),
        })
    }
}

fn add_into<T: Scalar>(acc: &mut Matrix<T>, m: &Matrix<T>) {
    for (a, &b) in acc.as_mut_slice().iter_mut().zip(m.as_slice()) {
        *a = *a + b;
    }
}

/// `q_loss + λ·supervision_loss`.
pub fn combined_loss<T: Scalar>(q_loss: T, supervision_loss: T, lambda: T) -> Result<T> {
    if lambda < T::zero() {
        return Err(Error::usage("multitask weight must be non-negative"));
    }
    Ok(q_loss + lambda * supervision_loss)
}
