use std::fmt::Write as _;
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use super::config::Environment;
use crate::agents::{Agent, AgentKind, AgentSpec, HeadKind, Multitask};
use crate::error::{Error, Result};
use crate::nn::{Dense, Matrix};
use crate::quiz::QuizConfig;
use crate::soccer::SoccerConfig;
use crate::ParamSet;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "dron-checkpoint";

/// Position of a ChaCha8 generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        Self {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

/// Trained agent with enough context to rebuild and resume it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub env: Environment,
    pub spec: AgentSpec,
    pub params: ParamSet,
    /// Environment steps taken during training.
    pub steps: u64,
    /// Exploration generator at the end of training.
    pub rng: RngState,
}

impl Checkpoint {
    pub fn agent(&self) -> Result<Agent> {
        let agent = Agent::new(self.spec.clone())?;
        agent.check_params(&self.params)?;
        Ok(agent)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {CHECKPOINT_VERSION}\n");
        match &self.env {
            Environment::Soccer(s) => {
                let _ = writeln!(
                    out,
                    "env soccer width={} height={} horizon={}",
                    s.width, s.height, s.horizon
                );
            }
            Environment::Quiz(q) => {
                let _ = writeln!(
                    out,
                    "env quizbowl vocab={} min_length={} max_length={} belief_scale={} belief_exponent={} \
                     belief_noise={} correct_reward={} wrong_reward={} opponent_correct_reward={}",
                    q.vocab,
                    q.min_length,
                    q.max_length,
                    q.belief_scale,
                    q.belief_exponent,
                    q.belief_noise,
                    q.correct_reward,
                    q.wrong_reward,
                    q.opponent_correct_reward
                );
            }
        }
        let s = &self.spec;
        let hidden: Vec<String> = s.state_hidden.iter().map(|h| h.to_string()).collect();
        let _ = writeln!(
            out,
            "agent kind={} state_dim={} opponent_dim={} actions={} state_hidden={} opponent_hidden={} \
             head_hidden={} experts={} multitask={} supervision={} lambda={}",
            s.kind,
            s.state_dim,
            s.opponent_dim,
            s.actions,
            hidden.join(","),
            s.opponent_hidden,
            s.head_hidden,
            s.experts,
            s.multitask,
            s.supervision.map(|h| h.to_string()).unwrap_or_else(|| "none".into()),
            s.lambda
        );
        let _ = writeln!(out, "steps {}", self.steps);
        let seed: String = self.rng.seed.iter().map(|b| format!("{b:02x}")).collect();
        let _ = writeln!(out, "rng {seed} {} {}", self.rng.stream, self.rng.word_pos);
        let _ = writeln!(out, "params {}", 2 * self.params.len());
        for (name, layer) in self.params.iter() {
            let (rows, cols) = layer.weight.shape();
            let _ = writeln!(out, "{name}.weight {rows} {cols}");
            for r in 0..rows {
                write_values(&mut out, layer.weight.row(r));
            }
            let _ = writeln!(out, "{name}.bias 1 {}", layer.bias.len());
            write_values(&mut out, &layer.bias);
        }
        out.push_str("end\n");
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut r = Reader::new(text);
        let (line, header) = r.section("header")?;
        let mut parts = header.split_whitespace();
        if parts.next() != Some(MAGIC) {
            return Err(Error::parse(line, "not a checkpoint file"));
        }
        let version: u32 = parse_field(parts.next(), line, "version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::UnsupportedVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }

        let (line, env_line) = r.keyword("env")?;
        let mut words = env_line.split_whitespace();
        let env_name = words.next().unwrap_or("");
        let kv = key_values(words, line)?;
        let env = match env_name {
            "soccer" => Environment::Soccer(SoccerConfig {
                width: kv.get("width", line)?,
                height: kv.get("height", line)?,
                horizon: kv.get("horizon", line)?,
            }),
            "quizbowl" => Environment::Quiz(QuizConfig {
                vocab: kv.get("vocab", line)?,
                min_length: kv.get("min_length", line)?,
                max_length: kv.get("max_length", line)?,
                belief_scale: kv.get("belief_scale", line)?,
                belief_exponent: kv.get("belief_exponent", line)?,
                belief_noise: kv.get("belief_noise", line)?,
                correct_reward: kv.get("correct_reward", line)?,
                wrong_reward: kv.get("wrong_reward", line)?,
                opponent_correct_reward: kv.get("opponent_correct_reward", line)?,
            }),
            other => return Err(Error::parse(line, format!("unknown environment {other:?}"))),
        };

        let (line, agent_line) = r.keyword("agent")?;
        let kv = key_values(agent_line.split_whitespace(), line)?;
        let hidden_raw: String = kv.get("state_hidden", line)?;
        let state_hidden = hidden_raw
            .split(',')
            .map(|h| parse_field(Some(h), line, "state_hidden"))
            .collect::<Result<Vec<usize>>>()?;
        let supervision_raw: String = kv.get("supervision", line)?;
        let supervision = match supervision_raw.as_str() {
            "none" => None,
            s => Some(
                s.parse::<HeadKind>()
                    .map_err(|e| Error::parse(line, e.to_string()))?,
            ),
        };
        let kind: String = kv.get("kind", line)?;
        let multitask: String = kv.get("multitask", line)?;
        let spec = AgentSpec {
            kind: kind
                .parse::<AgentKind>()
                .map_err(|e| Error::parse(line, e.to_string()))?,
            state_dim: kv.get("state_dim", line)?,
            opponent_dim: kv.get("opponent_dim", line)?,
            actions: kv.get("actions", line)?,
            state_hidden,
            opponent_hidden: kv.get("opponent_hidden", line)?,
            head_hidden: kv.get("head_hidden", line)?,
            experts: kv.get("experts", line)?,
            multitask: multitask
                .parse::<Multitask>()
                .map_err(|e| Error::parse(line, e.to_string()))?,
            supervision,
            lambda: kv.get("lambda", line)?,
        };

        let (line, steps) = r.keyword("steps")?;
        let steps = parse_field(Some(steps.trim()), line, "steps")?;

        let (line, rng_line) = r.keyword("rng")?;
        let mut parts = rng_line.split_whitespace();
        let hex = parts.next().unwrap_or("");
        if hex.len() != 64 {
            return Err(Error::parse(line, "rng seed must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                .map_err(|_| Error::parse(line, "rng seed must be 64 hex digits"))?;
        }
        let rng = RngState {
            seed,
            stream: parse_field(parts.next(), line, "rng stream")?,
            word_pos: parse_field(parts.next(), line, "rng word position")?,
        };

        let (line, count) = r.keyword("params")?;
        let blocks: usize = parse_field(Some(count.trim()), line, "params")?;
        if !blocks.is_multiple_of(2) {
            return Err(Error::parse(
                line,
                "parameter blocks come in weight/bias pairs",
            ));
        }
        let mut params = ParamSet::new();
        for _ in 0..blocks / 2 {
            let (name, weight) = r.matrix()?;
            let layer_name = name
                .strip_suffix(".weight")
                .ok_or_else(|| {
                    Error::parse(r.line, format!("expected a weight block, got {name}"))
                })?
                .to_string();
            let (bias_name, bias) = r.matrix()?;
            if bias_name != format!("{layer_name}.bias")
                || bias.rows() != 1
                || bias.cols() != weight.rows()
            {
                return Err(Error::parse(
                    r.line,
                    format!("bias block for {layer_name} missing or misshapen"),
                ));
            }
            params
                .insert(
                    layer_name,
                    Dense {
                        weight,
                        bias: bias.into_vec(),
                    },
                )
                .map_err(|e| Error::parse(r.line, e.to_string()))?;
        }
        let (line, end) = r.section("end")?;
        if end.trim() != "end" {
            return Err(Error::parse(line, format!("expected end, got {end:?}")));
        }

        let ckpt = Self {
            env,
            spec,
            params,
            steps,
            rng,
        };
        ckpt.agent()
            .map_err(|e| Error::parse(line, format!("parameters do not fit the agent: {e}")))?;
        Ok(ckpt)
    }
}

fn write_values(out: &mut String, values: &[f64]) {
    let mut first = true;
    for v in values {
        if !first {
            out.push(' ');
        }
        first = false;
        let _ = write!(out, "{v:.16e}");
    }
    out.push('\n');
}

fn parse_field<T: std::str::FromStr>(raw: Option<&str>, line: usize, what: &str) -> Result<T> {
    let raw = raw.ok_or_else(|| Error::parse(line, format!("missing {what}")))?;
    raw.parse()
        .map_err(|_| Error::parse(line, format!("malformed {what} {raw:?}")))
}

struct KeyValues<'a>(Vec<(&'a str, &'a str)>);

impl KeyValues<'_> {
    fn get<T: std::str::FromStr>(&self, key: &str, line: usize) -> Result<T> {
        let raw = self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| *v);
        parse_field(raw, line, key)
    }
}

fn key_values<'a>(words: impl Iterator<Item = &'a str>, line: usize) -> Result<KeyValues<'a>> {
    words
        .map(|w| {
            w.split_once('=')
                .ok_or_else(|| Error::parse(line, format!("expected key=value, got {w:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(KeyValues)
}

struct Reader<'a> {
    lines: std::str::Lines<'a>,
    line: usize,
}

impl<'a> Reader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines(),
            line: 0,
        }
    }

    fn section(&mut self, name: &str) -> Result<(usize, &'a str)> {
        match self.lines.next() {
            Some(l) => {
                self.line += 1;
                Ok((self.line, l))
            }
            None => Err(Error::parse(
                self.line + 1,
                format!("missing section {name}"),
            )),
        }
    }

    fn keyword(&mut self, name: &str) -> Result<(usize, &'a str)> {
        let (line, text) = self.section(name)?;
        match text.split_once(' ') {
            Some((k, rest)) if k == name => Ok((line, rest)),
            _ => Err(Error::parse(line, format!("expected section {name}"))),
        }
    }

    fn matrix(&mut self) -> Result<(String, Matrix<f64>)> {
        let (line, header) = self.section("parameter block")?;
        let mut parts = header.split_whitespace();
        let name = parts
            .next()
            .ok_or_else(|| Error::parse(line, "empty parameter block header"))?
            .to_string();
        let rows: usize = parse_field(parts.next(), line, "rows")?;
        let cols: usize = parse_field(parts.next(), line, "cols")?;
        let mut data = Vec::with_capacity(rows * cols);
        while data.len() < rows * cols {
            let (vline, text) = self.section(&format!("values of {name}"))?;
            for w in text.split_whitespace() {
                data.push(parse_field(Some(w), vline, "value")?);
            }
        }
        if data.len() != rows * cols {
            return Err(Error::parse(
                self.line,
                format!("{name} has too many values"),
            ));
        }
        let m =
            Matrix::from_vec(rows, cols, data).map_err(|e| Error::parse(line, e.to_string()))?;
        Ok((name, m))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: impl AsRef<Path>) -> Result<()> {
    super::write_file(path.as_ref(), &checkpoint.to_text())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_text(&text)
}
