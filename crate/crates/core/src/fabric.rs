//! Simulated parallel machine: a pool of processing units running one
//! process each, connected only through port-addressed token queues.
//!
//! Scheduling is round-robin over occupied units; every scheduler step
//! (one instruction, one guard poll, or one retry of a waiting
//! transmission) advances the clock by one tick.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bytecode::{FormatError, Image, Opcode};
use crate::runtime::{ChannelToken, Endpoint, Limits, Process, SendError, Services, StepOutcome, TokenQueue, Trap};
use crate::word::Word;

/// Global identification of the harness port the root process reports to.
pub const HARNESS_PORT: Word = 1;
/// `extra` flag of `new`: start on the unit given in the low 16 bits.
pub const PIN: Word = 1 << 31;
const UNIT_MASK: Word = 0xffff;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FabricConfig {
    pub units: usize,
    /// Tokens per destination queue.
    pub capacity: usize,
    pub seed: u64,
    pub max_steps: u64,
    pub trace: bool,
    pub call_depth: usize,
    /// Largest data memory a single process may be started with.
    pub memory_words: u64,
}

impl Default for FabricConfig {
    fn default() -> Self {
        FabricConfig {
            units: 16,
            capacity: 8,
            seed: 0,
            max_steps: 10_000_000,
            trace: false,
            call_depth: 1024,
            memory_words: 1 << 22,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {0}: expected `key = value`")]
    Syntax(usize),
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`")]
    Value { line: usize, key: String, value: String },
}

impl FabricConfig {
    /// Reads `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut config = FabricConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            config.set(key.trim(), value.trim()).map_err(|e| match e {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: i + 1, key },
                ConfigError::Value { key, value, .. } => ConfigError::Value { line: i + 1, key, value },
                other => other,
            })?;
        }
        Ok(config)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::Value { line: 0, key: key.into(), value: value.into() };
        fn num<T: std::str::FromStr>(v: &str) -> Option<T> {
            v.replace('_', "").parse().ok()
        }
        match key.replace('-', "_").as_str() {
            "units" => self.units = num(value).filter(|&u: &usize| u > 0 && u <= 1 << 16).ok_or_else(bad)?,
            "capacity" => self.capacity = num(value).filter(|&c: &usize| c > 0).ok_or_else(bad)?,
            "seed" => self.seed = num(value).ok_or_else(bad)?,
            "max_steps" => self.max_steps = num(value).ok_or_else(bad)?,
            "trace" => {
                self.trace = match value {
                    "true" | "on" | "1" | "yes" => true,
                    "false" | "off" | "0" | "no" => false,
                    _ => return Err(bad()),
                }
            }
            "call_depth" => self.call_depth = num(value).ok_or_else(bad)?,
            "memory_words" => self.memory_words = num(value).ok_or_else(bad)?,
            _ => return Err(ConfigError::UnknownKey { line: 0, key: key.into() }),
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("{0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("{0}: {1}")]
    Format(PathBuf, FormatError),
}

/// Images available to `new`, by program name.
#[derive(Clone, Debug, Default)]
pub struct ProgramStore {
    programs: BTreeMap<String, Arc<Image>>,
}

impl ProgramStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, image: Image) {
        self.programs.insert(name.into(), Arc::new(image));
    }

    pub fn get(&self, name: &str) -> Option<&Arc<Image>> {
        self.programs.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.programs.keys().map(String::as_str)
    }

    /// Loads every `*.gsx` file of a directory, named by file stem.
    pub fn load_dir(dir: &Path) -> Result<Self, StoreError> {
        let mut store = Self::new();
        let entries = std::fs::read_dir(dir).map_err(|e| StoreError::Io(dir.into(), e))?;
        let mut paths: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "gsx"))
            .collect();
        paths.sort();
        for path in paths {
            let bytes = std::fs::read(&path).map_err(|e| StoreError::Io(path.clone(), e))?;
            let image = Image::decode(&bytes).map_err(|e| StoreError::Format(path.clone(), e))?;
            let stem = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            store.insert(stem, image);
        }
        Ok(store)
    }
}

/// Decodes a program name given as one word per character; trailing zero
/// words are ignored.
pub fn name_from_words(words: &[Word]) -> Option<String> {
    let end = words.iter().rposition(|&w| w != 0).map_or(0, |i| i + 1);
    words[..end].iter().map(|&w| char::from_u32(w)).collect()
}

pub fn name_to_words(name: &str) -> Vec<Word> {
    name.chars().map(|c| c as Word).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum UnitStatus {
    Running,
    Stalled,
    Halted,
    Trapped(Trap),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitReport {
    pub unit: usize,
    pub program: String,
    pub dimension: Word,
    pub control: Word,
    pub status: UnitStatus,
    pub started: u64,
    pub ended: Option<u64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Outcome {
    /// Every process halted or trapped.
    Completed,
    /// Every remaining process waits and nothing can change that.
    Deadlock,
    StepLimit,
    /// The root program could not be started.
    NoRoot,
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Completed => "completed",
            Outcome::Deadlock => "deadlock",
            Outcome::StepLimit => "step limit",
            Outcome::NoRoot => "root program not started",
        })
    }
}

/// Token accounting. Pause tokens are counted separately: they are dropped
/// at the destination and never consumed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub data_sent: u64,
    pub end_sent: u64,
    pub pause_dropped: u64,
    pub data_consumed: u64,
    pub end_consumed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Conservation {
    pub sent: u64,
    pub consumed: u64,
    pub in_flight: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        self.sent == self.consumed + self.in_flight
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RunReport {
    pub outcome: Outcome,
    pub units: Vec<UnitReport>,
    pub steps: u64,
    /// Data words received by the harness, in order.
    pub output: Vec<Word>,
    /// Whether the harness received an end token.
    pub output_ended: bool,
    pub counters: Counters,
    pub conservation: Conservation,
    pub trace: Vec<String>,
}

impl RunReport {
    pub fn traps(&self) -> impl Iterator<Item = (&UnitReport, &Trap)> {
        self.units.iter().filter_map(|u| match &u.status {
            UnitStatus::Trapped(t) => Some((u, t)),
            _ => None,
        })
    }

    /// 0 all halted, 2 root missing, 3 deadlock, 4 any trap, 5 step limit.
    pub fn exit_code(&self) -> i32 {
        if self.traps().next().is_some() {
            return 4;
        }
        match self.outcome {
            Outcome::Completed => 0,
            Outcome::NoRoot => 2,
            Outcome::Deadlock => 3,
            Outcome::StepLimit => 5,
        }
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} after {} steps", self.outcome, self.steps);
        for u in &self.units {
            let status = match &u.status {
                UnitStatus::Trapped(t) => format!("trapped: {t}"),
                other => format!("{other:?}").to_lowercase(),
            };
            s.push_str(&format!("\n  u{} {} (dimension {}): {status}", u.unit, u.program, u.dimension));
        }
        s
    }
}

struct Channel {
    queue: TokenQueue,
    /// Unit slot of the owning process; `None` once the process has ended.
    owner: Option<usize>,
}

struct Slot {
    process: Process,
    record: usize,
    /// Epoch at which the unit last failed to make progress.
    stalled: Option<u64>,
    /// Instructions executed since the unit's last traced event.
    exec: Option<(u64, u64)>,
}

pub struct Fabric {
    config: FabricConfig,
    store: ProgramStore,
    clock: u64,
    rng: ChaCha8Rng,
    slots: Vec<Option<Slot>>,
    channels: BTreeMap<Word, Channel>,
    next_id: Word,
    output: Vec<Word>,
    output_ended: bool,
    counters: Counters,
    trace: Vec<String>,
    records: Vec<UnitReport>,
    cursor: usize,
    /// Bumped whenever something happens that could unblock a waiting unit.
    epoch: u64,
    current: Option<usize>,
    /// Queues read during the current step: id, head token, length.
    touched: Vec<(Word, Option<ChannelToken>, usize)>,
    outcome: Option<Outcome>,
}

impl Fabric {
    pub fn new(store: ProgramStore, config: FabricConfig) -> Self {
        Fabric {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            slots: (0..config.units).map(|_| None).collect(),
            config,
            store,
            clock: 0,
            channels: BTreeMap::new(),
            next_id: HARNESS_PORT + 1,
            output: Vec::new(),
            output_ended: false,
            counters: Counters::default(),
            trace: Vec::new(),
            records: Vec::new(),
            cursor: 0,
            epoch: 0,
            current: None,
            touched: Vec::new(),
            outcome: None,
        }
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn outcome(&self) -> Option<Outcome> {
        self.outcome
    }

    pub fn output(&self) -> &[Word] {
        &self.output
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    pub fn process(&self, unit: usize) -> Option<&Process> {
        self.slots.get(unit)?.as_ref().map(|s| &s.process)
    }

    pub fn is_idle(&self, unit: usize) -> bool {
        self.slots.get(unit).is_some_and(|s| s.is_none()) && self.current != Some(unit)
    }

    pub fn counters(&self) -> Counters {
        self.counters
    }

    pub fn conservation(&self) -> Conservation {
        let c = self.counters;
        Conservation {
            sent: c.data_sent + c.end_sent,
            consumed: c.data_consumed + c.end_consumed,
            in_flight: self.channels.values().map(|ch| ch.queue.len() as u64).sum(),
        }
    }

    fn log(&mut self, step: u64, unit: usize, event: impl fmt::Display) {
        if self.config.trace {
            self.trace.push(format!("{step:08} u{unit} {event}"));
        }
    }

    fn flush_exec(&mut self, unit: usize) {
        let span = self.slots[unit].as_mut().and_then(|s| s.exec.take());
        if let Some((start, n)) = span {
            self.log(start, unit, format_args!("exec {n}"));
        }
    }

    fn fresh_id(&mut self, owner: usize) -> Word {
        let id = self.next_id;
        self.next_id = self.next_id.checked_add(1).expect("port identifications exhausted");
        self.channels.insert(id, Channel { queue: TokenQueue::with_capacity(self.config.capacity), owner: Some(owner) });
        id
    }

    /// Starts the root process; its control port reports to the harness.
    pub fn spawn_root(&mut self, name: &str, dimension: Word) -> Word {
        self.start(&name_to_words(name), dimension, 0, HARNESS_PORT, None)
    }

    fn start(&mut self, name: &[Word], dimension: Word, extra: Word, creator_control: Word, creator: Option<usize>) -> Word {
        let step = self.clock;
        let display = name_from_words(name).unwrap_or_else(|| "?".into());
        let failed = |f: &mut Fabric| {
            if let Some(u) = creator {
                f.log(step, u, format_args!("new {display} failed"));
            }
            0
        };
        let Some(image) = self.store.get(&display).cloned() else { return failed(self) };
        if image.check_entry().is_err() || image.data_size(dimension) > self.config.memory_words {
            return failed(self);
        }
        if extra & !(PIN | UNIT_MASK) != 0 {
            return failed(self);
        }
        let unit = if extra & PIN != 0 {
            let u = (extra & UNIT_MASK) as usize;
            if !self.is_idle(u) {
                return failed(self);
            }
            u
        } else {
            match (0..self.slots.len()).find(|&u| self.is_idle(u)) {
                Some(u) => u,
                None => return failed(self),
            }
        };
        let control = self.fresh_id(unit);
        let limits = Limits { call_depth: self.config.call_depth, ..Limits::default() };
        let process = Process::new(image, dimension, Endpoint { id: control, destination: creator_control }, limits);
        self.records.push(UnitReport {
            unit,
            program: display.clone(),
            dimension,
            control,
            status: UnitStatus::Running,
            started: step,
            ended: None,
        });
        self.slots[unit] = Some(Slot { process, record: self.records.len() - 1, stalled: None, exec: None });
        self.epoch += 1;
        if let Some(u) = creator {
            self.flush_exec(u);
        }
        self.log(step, unit, format_args!("spawn {display} dimension={dimension} control={control}"));
        control
    }

    fn end(&mut self, unit: usize, mut slot: Slot, status: UnitStatus) {
        for p in slot.process.ports() {
            if let Some(ch) = self.channels.get_mut(&p.id) {
                ch.owner = None;
            }
        }
        slot.exec = None;
        let record = &mut self.records[slot.record];
        record.status = status;
        record.ended = Some(self.clock);
        self.epoch += 1;
        let _ = unit;
    }

    fn live(&self) -> impl Iterator<Item = (usize, &Slot)> {
        self.slots.iter().enumerate().filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
    }

    /// Runs one scheduler step; sets the outcome when the run is over.
    pub fn step(&mut self) {
        if self.outcome.is_some() {
            return;
        }
        if self.live().next().is_none() {
            self.outcome = Some(if self.records.is_empty() { Outcome::NoRoot } else { Outcome::Completed });
            return;
        }
        if self.clock >= self.config.max_steps {
            self.finish_trace();
            let step = self.clock;
            if self.config.trace {
                self.trace.push(format!("{step:08} fabric step limit"));
            }
            self.outcome = Some(Outcome::StepLimit);
            return;
        }
        let n = self.slots.len();
        let unit = (0..n).map(|k| (self.cursor + k) % n).find(|&u| self.slots[u].is_some()).expect("a live unit");
        self.cursor = unit + 1;
        let step = self.clock;

        let mut slot = self.slots[unit].take().expect("live");
        self.current = Some(unit);
        self.touched.clear();
        let outcome = slot.process.step(self);
        self.current = None;
        self.slots[unit] = Some(slot);
        self.account_receptions(step, unit);
        self.clock += 1;

        let slot = self.slots[unit].as_mut().expect("live");
        match outcome {
            StepOutcome::Ran => {
                slot.stalled = None;
                if self.config.trace {
                    let span = slot.exec.get_or_insert((step, 0));
                    span.1 += 1;
                }
            }
            StepOutcome::Selected { state, arm } => {
                slot.stalled = None;
                self.flush_exec(unit);
                self.log(step, unit, format_args!("guard state={state} arm={arm}"));
            }
            StepOutcome::Stalled => {
                let first = slot.stalled.is_none();
                slot.stalled = Some(self.epoch);
                if first {
                    self.flush_exec(unit);
                    self.log(step, unit, "stall");
                }
            }
            StepOutcome::Halted | StepOutcome::Trapped(_) => {
                self.flush_exec(unit);
                let status = match outcome {
                    StepOutcome::Trapped(t) => {
                        self.log(step, unit, format_args!("trap {t}"));
                        UnitStatus::Trapped(t)
                    }
                    _ => {
                        self.log(step, unit, "halt");
                        UnitStatus::Halted
                    }
                };
                let slot = self.slots[unit].take().expect("live");
                self.end(unit, slot, status);
            }
        }

        if self.live().next().is_none() {
            self.outcome = Some(Outcome::Completed);
        } else if self.deadlocked() {
            self.finish_trace();
            if self.config.trace {
                self.trace.push(format!("{:08} fabric deadlock", self.clock));
            }
            self.outcome = Some(Outcome::Deadlock);
        }
    }

    /// Every live unit failed to make progress since the last event that
    /// could have changed that, and none is waiting for a timer.
    fn deadlocked(&self) -> bool {
        self.live().all(|(_, s)| {
            let p = &s.process;
            // a deadline not yet reached when the unit last polled lies in the future
            let waits_for_timer =
                p.image().body.get(p.pc()) == Some(&(Opcode::GuardWait as Word)) && p.deadline().is_some();
            s.stalled == Some(self.epoch) && !waits_for_timer
        })
    }

    fn account_receptions(&mut self, step: u64, unit: usize) {
        let touched = std::mem::take(&mut self.touched);
        for &(id, head, before) in &touched {
            let after = self.channels.get(&id).map_or(0, |c| c.queue.len());
            if after < before {
                let token = head.expect("consumed from a nonempty queue");
                match token {
                    ChannelToken::Data(_) => self.counters.data_consumed += 1,
                    _ => self.counters.end_consumed += 1,
                }
                self.epoch += 1;
                self.flush_exec(unit);
                self.log(step, unit, format_args!("recv {id} {token}"));
            }
        }
        self.touched = touched;
    }

    /// Flushes pending instruction spans and puts the trace in step order;
    /// a span is recorded at its first step but only written when it ends.
    fn finish_trace(&mut self) {
        for u in 0..self.slots.len() {
            self.flush_exec(u);
        }
        self.trace.sort_by_key(|line| line.split(' ').next().and_then(|s| s.parse::<u64>().ok()));
    }

    pub fn run_to_end(&mut self) {
        while self.outcome.is_none() {
            self.step();
        }
        self.finish_trace();
    }

    pub fn report(&self) -> RunReport {
        let mut units = self.records.clone();
        for (_, slot) in self.live() {
            units[slot.record].status =
                if slot.stalled.is_some() { UnitStatus::Stalled } else { UnitStatus::Running };
        }
        RunReport {
            outcome: self.outcome.unwrap_or(Outcome::StepLimit),
            units,
            steps: self.clock,
            output: self.output.clone(),
            output_ended: self.output_ended,
            counters: self.counters,
            conservation: self.conservation(),
            trace: self.trace.clone(),
        }
    }
}

impl Services for Fabric {
    fn now(&self) -> u64 {
        self.clock
    }

    fn new_port(&mut self, _local: Word) -> Word {
        let owner = self.current.expect("called during a step");
        self.fresh_id(owner)
    }

    fn send(&mut self, destination: Word, token: ChannelToken) -> Result<(), SendError> {
        let unit = self.current.expect("called during a step");
        if destination == HARNESS_PORT {
            match token {
                ChannelToken::Data(w) => {
                    self.output.push(w);
                    self.counters.data_sent += 1;
                    self.counters.data_consumed += 1;
                }
                ChannelToken::End => {
                    self.output_ended = true;
                    self.counters.end_sent += 1;
                    self.counters.end_consumed += 1;
                }
                ChannelToken::Pause => self.counters.pause_dropped += 1,
            }
            self.flush_exec(unit);
            self.log(self.clock, unit, format_args!("out {token}"));
            return Ok(());
        }
        let channel = match self.channels.get_mut(&destination) {
            Some(c) if c.owner.is_some() => c,
            _ => return Err(SendError::Dangling),
        };
        channel.queue.push(token).map_err(|_| SendError::Full)?;
        match token {
            ChannelToken::Data(_) => self.counters.data_sent += 1,
            ChannelToken::End => self.counters.end_sent += 1,
            ChannelToken::Pause => self.counters.pause_dropped += 1,
        }
        self.epoch += 1;
        self.flush_exec(unit);
        self.log(self.clock, unit, format_args!("send {destination} {token}"));
        Ok(())
    }

    fn ready_to_send(&self, destination: Word) -> bool {
        destination == HARNESS_PORT
            || self.channels.get(&destination).is_some_and(|c| c.owner.is_some() && !c.queue.is_full())
    }

    fn incoming(&mut self, port: Word) -> &mut TokenQueue {
        if !self.touched.iter().any(|t| t.0 == port) {
            let q = self.channels.get(&port).map(|c| (c.queue.head(), c.queue.len()));
            let (head, len) = q.unwrap_or((None, 0));
            self.touched.push((port, head, len));
        }
        let capacity = self.config.capacity;
        &mut self
            .channels
            .entry(port)
            .or_insert_with(|| Channel { queue: TokenQueue::with_capacity(capacity), owner: None })
            .queue
    }

    fn spawn(&mut self, name: &[Word], dimension: Word, extra: Word, creator_control: Word) -> Word {
        let creator = self.current;
        self.start(name, dimension, extra, creator_control, creator)
    }

    fn choose(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }
}

/// Runs `root` to completion.
pub fn run(store: ProgramStore, config: FabricConfig, root: &str, dimension: Word) -> RunReport {
    let mut fabric = Fabric::new(store, config);
    if fabric.spawn_root(root, dimension) == 0 {
        fabric.outcome = Some(Outcome::NoRoot);
    }
    fabric.run_to_end();
    fabric.report()
}
