use std::sync::Arc;

use super::{receive_factor, ChannelToken, ReceiveTarget, SendError, Services, StepOutcome, Trap};
use crate::bytecode::{guard_kind, reference, Image, Opcode};
use crate::word::{self, Word};

/// Resource bounds of one process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub call_depth: usize,
    pub stack_words: usize,
    pub frame_words: usize,
    pub ports: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { call_depth: 1024, stack_words: 1 << 16, frame_words: 1 << 20, ports: 1 << 16 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Endpoint {
    pub id: Word,
    /// Global identification of the destination port, 0 while unset.
    pub destination: Word,
}

#[derive(Clone, Debug)]
pub struct Process {
    image: Arc<Image>,
    dimension: Word,
    limits: Limits,
    pc: usize,
    data: Vec<Word>,
    stack: Vec<Word>,
    slots: Vec<Word>,
    fp: usize,
    calls: Vec<(usize, usize)>,
    state: Option<Word>,
    state_entry: u64,
    deadline: Option<u64>,
    ports: Vec<Endpoint>,
}

impl Process {
    /// The caller is responsible for the data size being reasonable.
    pub fn new(image: Arc<Image>, dimension: Word, control: Endpoint, limits: Limits) -> Self {
        let size = image.data_size(dimension) as usize;
        Process {
            pc: image.entry as usize,
            image,
            dimension,
            limits,
            data: vec![0; size],
            stack: Vec::new(),
            slots: Vec::new(),
            fp: 0,
            calls: Vec::new(),
            state: None,
            state_entry: 0,
            deadline: None,
            ports: vec![control],
        }
    }

    pub fn image(&self) -> &Arc<Image> {
        &self.image
    }

    pub fn dimension(&self) -> Word {
        self.dimension
    }

    pub fn pc(&self) -> usize {
        self.pc
    }

    pub fn data(&self) -> &[Word] {
        &self.data
    }

    pub fn stack(&self) -> &[Word] {
        &self.stack
    }

    pub fn state(&self) -> Option<Word> {
        self.state
    }

    pub fn deadline(&self) -> Option<u64> {
        self.deadline
    }

    pub fn ports(&self) -> &[Endpoint] {
        &self.ports
    }

    pub fn control_id(&self) -> Word {
        self.ports[0].id
    }

    fn pop(&mut self) -> Result<Word, Trap> {
        self.stack.pop().ok_or(Trap::StackUnderflow)
    }

    fn peek(&self, depth: usize) -> Result<Word, Trap> {
        self.stack.len().checked_sub(depth + 1).map(|i| self.stack[i]).ok_or(Trap::StackUnderflow)
    }

    fn push(&mut self, w: Word) -> Result<(), Trap> {
        if self.stack.len() >= self.limits.stack_words {
            return Err(Trap::StackOverflow(self.limits.stack_words));
        }
        self.stack.push(w);
        Ok(())
    }

    fn code(&self, addr: usize) -> Result<Word, Trap> {
        self.image.body.get(addr).copied().ok_or(Trap::BadReference(reference::CODE | addr as Word))
    }

    fn slot(&mut self, s: Word) -> Result<&mut Word, Trap> {
        let i = self.fp + s as usize;
        self.slots.get_mut(i).ok_or(Trap::BadReference(reference::FRAME | i as Word))
    }

    fn port(&mut self, local: Word) -> Result<&mut Endpoint, Trap> {
        self.ports.get_mut(local as usize).ok_or(Trap::NoSuchPort(local))
    }

    fn element(&mut self, r: Word, index: Word) -> Result<&mut Word, Trap> {
        let offset = (r & reference::OFFSET_MASK) as usize + index as usize;
        let cell = match r & !reference::OFFSET_MASK {
            reference::DATA => self.data.get_mut(offset),
            reference::FRAME => self.slots.get_mut(offset),
            reference::CODE => return Err(Trap::WriteToConstant(r)),
            _ => None,
        };
        cell.ok_or(Trap::BadReference(r))
    }

    fn read(&self, r: Word, index: Word) -> Result<Word, Trap> {
        let offset = (r & reference::OFFSET_MASK) as usize + index as usize;
        let cell = match r & !reference::OFFSET_MASK {
            reference::DATA => self.data.get(offset),
            reference::FRAME => self.slots.get(offset),
            reference::CODE => self.image.body.get(offset),
            _ => None,
        };
        cell.copied().ok_or(Trap::BadReference(r))
    }

    /// Executes one instruction, or one round of guard selection.
    pub fn step(&mut self, sv: &mut dyn Services) -> StepOutcome {
        match self.execute(sv) {
            Ok(outcome) => outcome,
            Err(trap) => StepOutcome::Trapped(trap),
        }
    }

    fn execute(&mut self, sv: &mut dyn Services) -> Result<StepOutcome, Trap> {
        let pc = self.pc;
        let w = *self.image.body.get(pc).ok_or(Trap::PcOutOfRange(pc))?;
        let op = Opcode::from_word(w).ok_or(Trap::UnknownOpcode { pc, word: w })?;
        let n = op.immediates();
        if pc + n >= self.image.body.len() {
            return Err(Trap::PcOutOfRange(pc + n));
        }
        let imm = |k: usize| self.image.body[pc + 1 + k];
        let (i0, i1) = (if n > 0 { imm(0) } else { 0 }, if n > 1 { imm(1) } else { 0 });
        let mut next = pc + 1 + n;

        if let Some(bop) = op.as_binary() {
            let b = self.pop()?;
            let a = self.pop()?;
            let r = word::binary(bop, a, b).map_err(|_| Trap::DivideByZero)?;
            self.push(r)?;
            self.pc = next;
            return Ok(StepOutcome::Ran);
        }

        match op {
            Opcode::Halt => return Ok(StepOutcome::Halted),
            Opcode::Trap => return Err(Trap::Explicit),
            Opcode::Push => self.push(i0)?,
            Opcode::Drop => {
                self.pop()?;
            }
            Opcode::Dup => self.push(self.peek(0)?)?,
            Opcode::Swap => {
                let b = self.pop()?;
                let a = self.pop()?;
                self.push(b)?;
                self.push(a)?;
            }
            Opcode::PushDim => self.push(i0.wrapping_mul(self.dimension).wrapping_add(i1))?,
            Opcode::LoadG => {
                let v = *self.data.get(i0 as usize).ok_or(Trap::BadReference(i0))?;
                self.push(v)?;
            }
            Opcode::StoreG => {
                let v = self.pop()?;
                *self.data.get_mut(i0 as usize).ok_or(Trap::BadReference(i0))? = v;
            }
            Opcode::LoadL => {
                let v = *self.slot(i0)?;
                self.push(v)?;
            }
            Opcode::StoreL => {
                let v = self.pop()?;
                *self.slot(i0)? = v;
            }
            Opcode::LocalRef => {
                let i = self.fp as u64 + i0 as u64;
                if i > reference::OFFSET_MASK as u64 {
                    return Err(Trap::BadReference(reference::FRAME));
                }
                self.push(reference::FRAME | i as Word)?;
            }
            Opcode::LoadX => {
                let i = self.pop()?;
                let len = self.pop()?;
                let r = self.pop()?;
                if i >= len {
                    return Err(Trap::OutOfBounds { index: i, len });
                }
                let v = self.read(r, i)?;
                self.push(v)?;
            }
            Opcode::StoreX => {
                let i = self.pop()?;
                let len = self.pop()?;
                let r = self.pop()?;
                let v = self.pop()?;
                if i >= len {
                    return Err(Trap::OutOfBounds { index: i, len });
                }
                *self.element(r, i)? = v;
            }
            Opcode::LoadC => self.push(self.code(i0 as usize)?)?,
            Opcode::Slice => {
                let off = self.pop()?;
                let len = self.pop()?;
                let r = self.pop()?;
                if off > len {
                    return Err(Trap::BadSlice { offset: off, len });
                }
                let moved = (r & reference::OFFSET_MASK) as u64 + off as u64;
                if moved > reference::OFFSET_MASK as u64 {
                    return Err(Trap::BadReference(r));
                }
                self.push((r & !reference::OFFSET_MASK) | moved as Word)?;
                self.push(len - off)?;
            }
            Opcode::Narrow => {
                let len = self.pop()?;
                if len < i0 {
                    return Err(Trap::TooShort { len, required: i0 });
                }
                self.push(i0)?;
            }
            Opcode::Not | Opcode::Neg => {
                let a = self.pop()?;
                let u = if op == Opcode::Not { word::UnaryOp::Not } else { word::UnaryOp::Neg };
                self.push(word::unary(u, a))?;
            }
            Opcode::Jmp => next = i0 as usize,
            Opcode::Jz => {
                if self.pop()? == 0 {
                    next = i0 as usize;
                }
            }
            Opcode::Jnz => {
                if self.pop()? != 0 {
                    next = i0 as usize;
                }
            }
            Opcode::Call => {
                if self.calls.len() >= self.limits.call_depth {
                    return Err(Trap::CallDepth(self.limits.call_depth));
                }
                self.calls.push((next, self.fp));
                next = i0 as usize;
            }
            Opcode::Enter => {
                let (params, locals) = (i0 as usize, i1 as usize);
                if self.stack.len() < params {
                    return Err(Trap::StackUnderflow);
                }
                if self.slots.len() + params + locals > self.limits.frame_words {
                    return Err(Trap::FrameOverflow(self.limits.frame_words));
                }
                self.fp = self.slots.len();
                let args = self.stack.split_off(self.stack.len() - params);
                self.slots.extend(args);
                self.slots.resize(self.slots.len() + locals, 0);
            }
            Opcode::Ret => {
                let (ret, fp) = self.calls.pop().ok_or(Trap::ReturnWithoutCall)?;
                self.slots.truncate(self.fp);
                self.fp = fp;
                next = ret;
            }
            Opcode::PortSet => {
                let p = self.pop()?;
                let v = self.pop()?;
                self.port(p)?.destination = v;
            }
            Opcode::PortRead => {
                let p = self.pop()?;
                let d = self.port(p)?.destination;
                self.push(d)?;
            }
            Opcode::PortId => {
                let p = self.pop()?;
                let id = self.port(p)?.id;
                self.push(id)?;
            }
            Opcode::Send | Opcode::SendEnd | Opcode::SendPause => {
                let p = self.peek(0)?;
                let token = match op {
                    Opcode::Send => ChannelToken::Data(self.peek(1)?),
                    Opcode::SendEnd => ChannelToken::End,
                    _ => ChannelToken::Pause,
                };
                let dest = self.port(p)?.destination;
                if dest == 0 {
                    return Err(Trap::UnsetDestination(p));
                }
                match sv.send(dest, token) {
                    Ok(()) => {
                        self.pop()?;
                        if op == Opcode::Send {
                            self.pop()?;
                        }
                    }
                    Err(SendError::Full) => return Ok(StepOutcome::Stalled),
                    Err(SendError::Dangling) => return Err(Trap::DanglingDestination(dest)),
                }
            }
            Opcode::Recv => {
                let p = self.pop()?;
                let id = self.port(p)?.id;
                let r = receive_factor(sv.incoming(id), ReceiveTarget::Variable);
                self.push(r.data.unwrap_or(0))?;
                self.push(r.value)?;
            }
            Opcode::RecvEnd => {
                let p = self.pop()?;
                let id = self.port(p)?.id;
                let r = receive_factor(sv.incoming(id), ReceiveTarget::End);
                self.push(r.value)?;
            }
            Opcode::Now => self.push(sv.now() as Word)?,
            Opcode::NewProc => {
                let extra = self.pop()?;
                let dim = self.pop()?;
                let len = self.pop()?;
                let r = self.pop()?;
                let name = (0..len).map(|i| self.read(r, i)).collect::<Result<Vec<_>, _>>()?;
                let id = sv.spawn(&name, dim, extra, self.control_id());
                self.push(id)?;
            }
            Opcode::SetState => {
                self.state = Some(i0);
                self.state_entry = sv.now();
                self.deadline = None;
            }
            Opcode::SetDeadline => {
                let t = self.pop()?;
                self.deadline = Some(self.state_entry + t as u64);
            }
            Opcode::GuardWait => return self.select(i0 as usize, sv),
            Opcode::Ports => {
                if i0 as usize > self.limits.ports {
                    return Err(Trap::NoSuchPort(i0));
                }
                for local in self.ports.len() as Word..i0 {
                    let id = sv.new_port(local);
                    self.ports.push(Endpoint { id, destination: 0 });
                }
            }
            _ => unreachable!("binary operators handled above"),
        }
        self.pc = next;
        Ok(StepOutcome::Ran)
    }

    /// Guard selection for the current state. The state table at `table`
    /// holds the number of states followed by one guard table address per
    /// state; a guard table holds its length followed by
    /// `(kind, port, body)` triples.
    fn select(&mut self, table: usize, sv: &mut dyn Services) -> Result<StepOutcome, Trap> {
        let state = self.state.ok_or(Trap::NoState)?;
        if state >= self.code(table)? {
            return Err(Trap::NoSuchState(state));
        }
        let guards = self.code(table + 1 + state as usize)? as usize;
        let count = self.code(guards)? as usize;
        if count == 0 {
            return Ok(StepOutcome::Halted);
        }
        let mut ready = Vec::new();
        for arm in 0..count {
            let at = guards + 1 + 3 * arm;
            let (kind, port) = (self.code(at)?, self.code(at + 1)?);
            let ok = match kind {
                guard_kind::ALWAYS => true,
                guard_kind::TRANSMIT_READY => {
                    let dest = self.port(port)?.destination;
                    dest != 0 && sv.ready_to_send(dest)
                }
                guard_kind::RECEIVE | guard_kind::RECEIVE_END => {
                    let id = self.port(port)?.id;
                    let head = sv.incoming(id).head();
                    match kind {
                        guard_kind::RECEIVE => matches!(head, Some(ChannelToken::Data(_))),
                        _ => head == Some(ChannelToken::End),
                    }
                }
                guard_kind::AFTER => self.deadline.is_some_and(|d| sv.now() >= d),
                _ => return Err(Trap::BadReference(reference::CODE | at as Word)),
            };
            if ok {
                ready.push(arm);
            }
        }
        let arm = match ready.len() {
            0 => return Ok(StepOutcome::Stalled),
            1 => ready[0],
            n => ready[sv.choose(n)],
        };
        let at = guards + 1 + 3 * arm;
        let (kind, port, body) = (self.code(at)?, self.code(at + 1)?, self.code(at + 2)?);
        match kind {
            guard_kind::RECEIVE => {
                let id = self.port(port)?.id;
                match sv.incoming(id).pop() {
                    Some(ChannelToken::Data(w)) => self.push(w)?,
                    other => unreachable!("guard was ready, found {other:?}"),
                }
            }
            guard_kind::RECEIVE_END => {
                let id = self.port(port)?.id;
                sv.incoming(id).pop();
            }
            _ => {}
        }
        self.pc = body as usize;
        Ok(StepOutcome::Selected { state, arm })
    }
}
