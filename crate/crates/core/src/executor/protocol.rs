//! Newline-delimited JSON protocol between an environment server and a
//! planning client, in the spirit of a competition simulator loop.
//!
//! Server to client:
//! `{"type":"state","round":r,"step":t,"atoms":["(p a)",...],"goal":bool}`
//! after the round starts and after every accepted action, then
//! `{"type":"end","round":r,"reason":...,"actions":n,"cost":c}` once the
//! round is over: right after a goal state, or in reply to an action past
//! the cap, an invalid action, or an abandon message.
//!
//! Client to server: `{"type":"action","name":"(move a b)"}` or
//! `{"type":"abandon"}`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{round_seed, EnvError, Environment, RoundOutcome, SimEnv};
use crate::model::{self, State};
use crate::problem::{ActionId, GroundedProblem};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    State { round: usize, step: usize, atoms: Vec<String>, goal: bool },
    End { round: usize, reason: EndReason, actions: usize, cost: f64 },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    Goal,
    ActionCap,
    InvalidAction,
    Abandoned,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    Action { name: String },
    Abandon,
}

fn send<W: Write, T: Serialize>(w: &mut W, msg: &T) -> Result<(), EnvError> {
    let line = serde_json::to_string(msg).map_err(|e| EnvError::Protocol(e.to_string()))?;
    writeln!(w, "{line}")?;
    w.flush()?;
    Ok(())
}

fn recv<R: BufRead, T: for<'de> Deserialize<'de>>(r: &mut R) -> Result<Option<T>, EnvError> {
    let mut line = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Ok(None);
        }
        if !line.trim().is_empty() {
            break;
        }
    }
    serde_json::from_str(line.trim()).map(Some).map_err(|e| EnvError::Protocol(format!("{e}: {}", line.trim())))
}

/// Serves `rounds` rounds of `p` over the given streams. Round `i` samples
/// with the same seed the in-process simulator would use. Returns early if
/// the client closes its stream.
pub fn serve<R: BufRead, W: Write>(
    p: &GroundedProblem,
    rounds: usize,
    seed: u64,
    max_actions: usize,
    input: &mut R,
    output: &mut W,
) -> Result<Vec<EndReason>, EnvError> {
    let mut env = SimEnv::new(p);
    let mut ends = Vec::new();
    for round in 0..rounds {
        let mut s = env.reset(round_seed(seed, round))?;
        let mut step = 0;
        let mut cost = 0.0;
        let state_msg = |s: &State, step| ServerMessage::State {
            round,
            step,
            atoms: p.describe_state(s),
            goal: model::is_goal(s, p),
        };
        send(output, &state_msg(&s, step))?;
        let reason = loop {
            if model::is_goal(&s, p) {
                break EndReason::Goal;
            }
            let Some(msg) = recv::<_, ClientMessage>(input)? else { return Ok(ends) };
            match msg {
                ClientMessage::Abandon => break EndReason::Abandoned,
                ClientMessage::Action { .. } if step >= max_actions => break EndReason::ActionCap,
                ClientMessage::Action { name } => {
                    let Some(a) = p.find_action(&name) else { break EndReason::InvalidAction };
                    match env.step(a) {
                        Ok(next) => {
                            s = next;
                            step += 1;
                            cost += p.actions[a].cost_f64;
                            send(output, &state_msg(&s, step))?;
                        }
                        Err(_) => break EndReason::InvalidAction,
                    }
                }
            }
        };
        send(output, &ServerMessage::End { round, reason, actions: step, cost })?;
        ends.push(reason);
    }
    Ok(ends)
}

/// Client side: an [`Environment`] backed by a protocol server.
pub struct StreamEnv<'p, R, W> {
    problem: &'p GroundedProblem,
    input: R,
    output: W,
    ended: bool,
    pending_end: Option<ServerMessage>,
}

impl<'p, R: BufRead, W: Write> StreamEnv<'p, R, W> {
    pub fn new(problem: &'p GroundedProblem, input: R, output: W) -> Self {
        Self { problem, input, output, ended: false, pending_end: None }
    }

    fn parse_state(&self, atoms: &[String]) -> Result<State, EnvError> {
        let mut ids = Vec::with_capacity(atoms.len());
        for a in atoms {
            let atom = parse_atom(a).ok_or_else(|| EnvError::Protocol(format!("bad atom {a}")))?;
            let id = self.problem.atom_id(&atom).ok_or_else(|| EnvError::Protocol(format!("unknown atom {a}")))?;
            ids.push(id);
        }
        Ok(State::from_atoms(self.problem.atom_count(), ids))
    }

    fn next_state(&mut self) -> Result<State, EnvError> {
        match recv::<_, ServerMessage>(&mut self.input)? {
            Some(ServerMessage::State { atoms, .. }) => self.parse_state(&atoms),
            Some(end @ ServerMessage::End { .. }) => {
                let reason = match &end {
                    ServerMessage::End { reason, .. } => *reason,
                    _ => unreachable!(),
                };
                self.ended = true;
                self.pending_end = Some(end);
                match reason {
                    EndReason::InvalidAction => Err(EnvError::InvalidAction("rejected by server".into())),
                    r => Err(EnvError::RoundEnded(format!("{r:?}"))),
                }
            }
            None => Err(EnvError::Protocol("server closed the stream".into())),
        }
    }

    /// The last end-of-round message received, if any.
    pub fn last_end(&self) -> Option<&ServerMessage> {
        self.pending_end.as_ref()
    }
}

fn parse_atom(text: &str) -> Option<crate::ppddl::GroundAtom> {
    let inner = text.trim().strip_prefix('(')?.strip_suffix(')')?;
    let mut parts = inner.split_whitespace();
    let pred = parts.next()?;
    let args: Vec<&str> = parts.collect();
    Some(crate::ppddl::GroundAtom::new(pred, &args))
}

impl<R: BufRead, W: Write> Environment for StreamEnv<'_, R, W> {
    fn reset(&mut self, _seed: u64) -> Result<State, EnvError> {
        self.ended = false;
        self.pending_end = None;
        self.next_state()
    }

    fn step(&mut self, a: ActionId) -> Result<State, EnvError> {
        send(&mut self.output, &ClientMessage::Action { name: self.problem.action_name(a) })?;
        self.next_state()
    }

    fn finish(&mut self, outcome: RoundOutcome) -> Result<(), EnvError> {
        if self.ended {
            return Ok(());
        }
        if outcome != RoundOutcome::Goal {
            send(&mut self.output, &ClientMessage::Abandon)?;
        }
        match recv::<_, ServerMessage>(&mut self.input)? {
            Some(end @ ServerMessage::End { .. }) => {
                self.pending_end = Some(end);
                self.ended = true;
                Ok(())
            }
            other => Err(EnvError::Protocol(format!("expected end of round, got {other:?}"))),
        }
    }
}
