//! The compilation MDP: phases derived from checkable predicates, a fixed
//! masked action catalog, and episodes with a sparse terminal reward.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::device::{default_registry_dir, list_devices, resolve_device, Device, Platform};
use crate::error::{Error, Result};
use crate::features::{extract_features, RewardKind};
use crate::mapping::{route, LayoutMethod, RouteMethod};
use crate::optimize::OptPass;
use crate::synthesis::synthesize;

pub const NUM_PHASES: usize = 5;
pub const OBS_DIM: usize = 7 + NUM_PHASES;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phase {
    Start,
    PlatformChosen,
    DeviceChosen,
    OnlyNativeGates,
    Done,
}

impl Phase {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Action {
    SelectPlatform(Platform),
    SelectDevice(String),
    Synthesize,
    Layout(LayoutMethod),
    Route(RouteMethod),
    Optimize(OptPass),
    Finish,
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::SelectPlatform(p) => write!(f, "select_platform:{p}"),
            Action::SelectDevice(d) => write!(f, "select_device:{d}"),
            Action::Synthesize => f.write_str("synthesize"),
            Action::Layout(m) => write!(f, "layout:{}", m.name()),
            Action::Route(m) => write!(f, "route:{}", m.name()),
            Action::Optimize(p) => write!(f, "opt:{}", p.name()),
            Action::Finish => f.write_str("finish"),
        }
    }
}

/// Catalog order: platforms, devices (as given), synthesis, layouts,
/// routings, optimizations, finish.
pub fn action_catalog(device_names: &[String]) -> Vec<Action> {
    let mut out: Vec<Action> = Platform::ALL
        .into_iter()
        .map(Action::SelectPlatform)
        .collect();
    out.extend(device_names.iter().cloned().map(Action::SelectDevice));
    out.push(Action::Synthesize);
    out.extend(LayoutMethod::ALL.into_iter().map(Action::Layout));
    out.extend(RouteMethod::ALL.into_iter().map(Action::Route));
    out.extend(OptPass::ALL.into_iter().map(Action::Optimize));
    out.push(Action::Finish);
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvConfig {
    pub reward: RewardKind,
    pub fixed_device: Option<String>,
    pub max_steps: usize,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            reward: RewardKind::Fidelity,
            fixed_device: None,
            max_steps: 50,
            seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: EnvConfig = serde_json::from_str(text)?;
        if cfg.max_steps == 0 {
            return Err(Error::InvalidCircuit("max_steps must be positive".into()));
        }
        Ok(cfg)
    }
}

pub fn native_ok(c: &Circuit, p: Platform) -> bool {
    c.gates.iter().all(|g| p.is_native(g.kind))
}

/// Every two-qubit gate sits on a coupled pair. Without a layout the
/// circuit's indices are only physical when no coupling is needed.
pub fn connectivity_ok(c: &Circuit, d: &Device) -> bool {
    if c.num_qubits > d.num_qubits {
        return false;
    }
    if d.is_all_to_all() {
        return true;
    }
    let has_2q = c.gates.iter().any(|g| g.is_two_qubit());
    if has_2q && !c.has_layout() {
        return false;
    }
    c.gates
        .iter()
        .filter(|g| g.is_two_qubit())
        .all(|g| d.is_coupled(g.qubits[0], g.qubits[1]))
}

pub fn derive_phase(c: &Circuit, platform: Option<Platform>, device: Option<&Device>) -> Phase {
    let Some(p) = platform else {
        return Phase::Start;
    };
    let Some(d) = device else {
        return Phase::PlatformChosen;
    };
    if !native_ok(c, p) {
        Phase::DeviceChosen
    } else if !connectivity_ok(c, d) {
        Phase::OnlyNativeGates
    } else {
        Phase::Done
    }
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub circuit: Circuit,
    pub platform: Option<Platform>,
    pub device: Option<Arc<Device>>,
    pub step_count: usize,
    pub phase: Phase,
    pub done: bool,
}

impl EnvState {
    pub fn has_layout(&self) -> bool {
        self.circuit.has_layout()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Environment definition shared by every episode; episodes live in
/// [`EnvState`] values.
#[derive(Debug, Clone)]
pub struct Env {
    pub cfg: EnvConfig,
    actions: Vec<Action>,
    devices: Vec<Arc<Device>>,
    fixed: Option<Arc<Device>>,
}

impl Env {
    /// Uses the shipped device registry.
    pub fn new(cfg: EnvConfig) -> Result<Env> {
        let dir = default_registry_dir();
        let registry = list_devices(&dir)?;
        let fixed = match &cfg.fixed_device {
            Some(name) => Some(match registry.get(name) {
                Some(d) => d.clone(),
                None => resolve_device(name, &dir)?,
            }),
            None => None,
        };
        Env::with_devices(cfg, registry.devices, fixed)
    }

    pub fn with_devices(
        cfg: EnvConfig,
        mut devices: Vec<Device>,
        fixed: Option<Device>,
    ) -> Result<Env> {
        devices.sort_by(|a, b| a.name.cmp(&b.name));
        let names: Vec<String> = devices.iter().map(|d| d.name.clone()).collect();
        Ok(Env {
            cfg,
            actions: action_catalog(&names),
            devices: devices.into_iter().map(Arc::new).collect(),
            fixed: fixed.map(Arc::new),
        })
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn action_names(&self) -> Vec<String> {
        self.actions.iter().map(ToString::to_string).collect()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn fixed_device(&self) -> Option<&Device> {
        self.fixed.as_deref()
    }

    fn device_named(&self, name: &str) -> Option<&Arc<Device>> {
        self.devices.iter().find(|d| d.name == name)
    }

    pub fn observation(&self, s: &EnvState) -> Vec<f64> {
        let mut obs = extract_features(&s.circuit).scaled().to_vec();
        let mut onehot = [0.0; NUM_PHASES];
        onehot[s.phase.index()] = 1.0;
        obs.extend(onehot);
        obs
    }

    pub fn reset(&self, c: &Circuit) -> Result<(EnvState, Vec<f64>)> {
        c.validate()?;
        let width = c.num_qubits;
        let (platform, device) = match &self.fixed {
            Some(d) => {
                if width > d.num_qubits {
                    return Err(Error::CircuitTooLarge {
                        circuit: width,
                        device: d.name.clone(),
                        device_qubits: d.num_qubits,
                    });
                }
                (Some(d.platform), Some(Arc::clone(d)))
            }
            None => {
                if !self.devices.iter().any(|d| d.num_qubits >= width) {
                    let largest = self.devices.iter().max_by_key(|d| d.num_qubits);
                    return Err(Error::CircuitTooLarge {
                        circuit: width,
                        device: largest.map_or_else(String::new, |d| d.name.clone()),
                        device_qubits: largest.map_or(0, |d| d.num_qubits),
                    });
                }
                (None, None)
            }
        };
        let phase = derive_phase(c, platform, device.as_deref());
        let state = EnvState {
            circuit: c.clone(),
            platform,
            device,
            step_count: 0,
            phase,
            done: false,
        };
        let obs = self.observation(&state);
        Ok((state, obs))
    }

    fn fits(&self, d: &Device, s: &EnvState) -> bool {
        d.num_qubits >= s.circuit.num_qubits
    }

    pub fn is_legal(&self, s: &EnvState, a: &Action) -> bool {
        if s.done {
            return false;
        }
        let free = self.fixed.is_none();
        match (s.phase, a) {
            (Phase::Start, Action::SelectPlatform(p)) => {
                free && self
                    .devices
                    .iter()
                    .any(|d| d.platform == *p && self.fits(d, s))
            }
            (Phase::Start, Action::Optimize(pass)) => pass.basis_agnostic(),
            (Phase::PlatformChosen, Action::SelectDevice(name)) => self
                .device_named(name)
                .is_some_and(|d| free && Some(d.platform) == s.platform && self.fits(d, s)),
            (Phase::DeviceChosen, Action::Synthesize | Action::Optimize(_)) => true,
            (Phase::OnlyNativeGates, Action::Layout(_)) => !s.has_layout(),
            (Phase::OnlyNativeGates, Action::Route(_)) => s.has_layout(),
            (Phase::OnlyNativeGates | Phase::Done, Action::Optimize(_)) => true,
            (Phase::Done, Action::Finish) => true,
            _ => false,
        }
    }

    pub fn action_mask(&self, s: &EnvState) -> Vec<bool> {
        self.actions.iter().map(|a| self.is_legal(s, a)).collect()
    }

    fn pass_seed(&self, s: &EnvState) -> u64 {
        self.cfg
            .seed
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add(s.step_count as u64)
    }

    /// Applies action `id`; the phase is re-derived afterwards, so an
    /// optimization may move the state backwards.
    pub fn step(&self, s: &mut EnvState, id: usize) -> Result<StepOutcome> {
        let action = self
            .actions
            .get(id)
            .ok_or_else(|| Error::MaskedAction(format!("action id {id} out of range")))?;
        if !self.is_legal(s, action) {
            return Err(Error::MaskedAction(format!(
                "{action} in phase {:?}",
                s.phase
            )));
        }
        let seed = self.pass_seed(s);
        let mut reward = 0.0;
        let mut finished = false;
        match action {
            Action::SelectPlatform(p) => s.platform = Some(*p),
            Action::SelectDevice(name) => {
                s.device = Some(Arc::clone(self.device_named(name).expect("legal device")));
            }
            Action::Synthesize => {
                s.circuit = synthesize(&s.circuit, s.platform.expect("platform chosen"))?;
            }
            Action::Layout(m) => {
                let d = s.device.as_ref().expect("device chosen");
                s.circuit = m.apply(&s.circuit, d, seed)?;
            }
            Action::Route(m) => {
                let d = s.device.as_ref().expect("device chosen");
                s.circuit = route(&s.circuit, d, *m, seed)?.circuit;
            }
            Action::Optimize(pass) => s.circuit = pass.apply(&s.circuit, s.platform),
            Action::Finish => {
                let d = s.device.as_ref().expect("device chosen");
                reward = self.cfg.reward.evaluate(&s.circuit, d)?;
                finished = true;
            }
        }
        s.step_count += 1;
        s.phase = derive_phase(&s.circuit, s.platform, s.device.as_deref());
        s.done = finished || s.step_count >= self.cfg.max_steps;
        Ok(StepOutcome {
            observation: self.observation(s),
            reward,
            done: s.done,
        })
    }

    /// Runs a fixed list of action names from a fresh reset.
    pub fn run_actions(&self, c: &Circuit, names: &[&str]) -> Result<(EnvState, f64)> {
        let (mut s, _) = self.reset(c)?;
        let mut reward = 0.0;
        for name in names {
            let id = self
                .action_names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::MaskedAction(format!("unknown action `{name}`")))?;
            reward = self.step(&mut s, id)?.reward;
        }
        Ok((s, reward))
    }
}
