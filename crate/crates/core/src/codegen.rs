//! Lowering of checked programs to stack-machine images.
//!
//! Layout of the body: subroutines, the entry code (initialization), one
//! entry stub per state, the guard dispatcher, the guarded-statement
//! bodies, and finally the constant pool (constant arrays, state table and
//! guard tables). Operands are evaluated left to right.

use crate::bytecode::{guard_kind, reference, Image, Opcode};
use crate::sema::{
    Affine, Arg, ArrayRef, AsmItem, CheckedProgram, Expr, Guard, Payload, Place, PortRef, Stmt,
};
use crate::word::Word;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum CodegenError {
    #[error("program needs {0} code words, more than constant references can address")]
    TooLarge(usize),
}

pub fn compile_program(p: &CheckedProgram) -> Result<Image, CodegenError> {
    let mut g = Gen::default();
    let routine_labels: Vec<Label> = p.routines.iter().map(|_| g.label()).collect();
    let const_labels: Vec<Label> = p.const_arrays.iter().map(|_| g.label()).collect();
    let state_labels: Vec<Label> = p.states.iter().map(|_| g.label()).collect();
    let dispatch = g.label();
    let state_table = g.label();
    g.routines = routine_labels.clone();
    g.consts = const_labels.clone();
    g.states = state_labels.clone();
    g.globals = p.globals.iter().map(|v| (v.base, v.size)).collect();

    for (routine, label) in p.routines.iter().zip(&routine_labels) {
        g.place_label(*label);
        g.op(Opcode::Enter);
        g.word(routine.param_slots);
        let enter_locals = g.reserve();
        g.begin_frame(routine.param_slots + routine.local_slots);
        g.stmts(&routine.body);
        if let Some(e) = &routine.result {
            g.expr(e);
        }
        g.op(Opcode::Ret);
        let temps = g.end_frame();
        g.code[enter_locals] = routine.local_slots + temps;
    }

    let entry = g.code.len();
    g.op_imm(Opcode::Ports, p.ports.len() as Word);
    g.op(Opcode::Enter);
    g.word(0);
    let main_temps = g.reserve();
    g.begin_frame(0);
    g.stmts(&p.init);
    if p.states.is_empty() {
        g.op(Opcode::Halt);
    }

    for (s, label) in state_labels.iter().enumerate() {
        g.place_label(*label);
        g.op_imm(Opcode::SetState, s as Word);
        if let Some(e) = &p.deadlines[s] {
            g.expr(e);
            g.op(Opcode::SetDeadline);
        }
        g.jump(Opcode::Jmp, dispatch);
    }
    g.place_label(dispatch);
    g.op(Opcode::GuardWait);
    g.label_word(state_table, 0);

    let mut arms: Vec<Vec<(Word, Word, Label)>> = vec![Vec::new(); p.states.len()];
    for guarded in &p.guarded {
        let body = g.label();
        g.place_label(body);
        let (kind, port) = match &guarded.guard {
            Guard::Always => (guard_kind::ALWAYS, 0),
            Guard::TransmitReady(port) => (guard_kind::TRANSMIT_READY, *port),
            Guard::Receive { port, target } => {
                g.store(target);
                (guard_kind::RECEIVE, *port)
            }
            Guard::ReceiveEnd(port) => (guard_kind::RECEIVE_END, *port),
            Guard::After => (guard_kind::AFTER, 0),
        };
        g.stmts(&guarded.body);
        for &s in &guarded.states {
            arms[s as usize].push((kind, port, body));
        }
    }
    g.code[main_temps] = g.end_frame();

    for (words, label) in p.const_arrays.iter().zip(&const_labels) {
        g.place_label(*label);
        g.code.extend_from_slice(words);
    }
    let guard_tables: Vec<Label> = arms.iter().map(|_| g.label()).collect();
    g.place_label(state_table);
    g.word(p.states.len() as Word);
    for t in &guard_tables {
        g.label_word(*t, 0);
    }
    for (list, t) in arms.iter().zip(&guard_tables) {
        g.place_label(*t);
        g.word(list.len() as Word);
        for &(kind, port, body) in list {
            g.word(kind);
            g.word(port);
            g.label_word(body, 0);
        }
    }

    let body = g.finish()?;
    Ok(Image { d1: p.data_size.a, d0: p.data_size.b, entry: entry as Word, body })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Label(usize);

#[derive(Default)]
struct Gen {
    code: Vec<Word>,
    labels: Vec<Option<usize>>,
    fixups: Vec<(usize, Label, Word)>,
    routines: Vec<Label>,
    consts: Vec<Label>,
    states: Vec<Label>,
    globals: Vec<(Affine, Affine)>,
    /// Next free frame slot for loop counters, and the high-water mark.
    temp_base: Word,
    temp_next: Word,
    temp_max: Word,
}

impl Gen {
    fn label(&mut self) -> Label {
        self.labels.push(None);
        Label(self.labels.len() - 1)
    }

    fn place_label(&mut self, l: Label) {
        self.labels[l.0] = Some(self.code.len());
    }

    fn word(&mut self, w: Word) {
        self.code.push(w);
    }

    fn reserve(&mut self) -> usize {
        self.code.push(0);
        self.code.len() - 1
    }

    fn label_word(&mut self, l: Label, tag: Word) {
        let at = self.reserve();
        self.fixups.push((at, l, tag));
    }

    fn op(&mut self, op: Opcode) {
        self.code.push(op as Word);
    }

    fn op_imm(&mut self, op: Opcode, imm: Word) {
        self.op(op);
        self.word(imm);
    }

    fn jump(&mut self, op: Opcode, target: Label) {
        self.op(op);
        self.label_word(target, 0);
    }

    fn finish(mut self) -> Result<Vec<Word>, CodegenError> {
        if self.code.len() > reference::OFFSET_MASK as usize {
            return Err(CodegenError::TooLarge(self.code.len()));
        }
        for (at, label, tag) in std::mem::take(&mut self.fixups) {
            let target = self.labels[label.0].expect("every label is placed");
            self.code[at] = tag | target as Word;
        }
        Ok(self.code)
    }

    fn begin_frame(&mut self, first_free: Word) {
        self.temp_base = first_free;
        self.temp_next = first_free;
        self.temp_max = first_free;
    }

    /// Number of loop-counter slots the frame needs.
    fn end_frame(&mut self) -> Word {
        self.temp_max - self.temp_base
    }

    fn value(&mut self, v: Affine) {
        match v.as_constant() {
            Some(b) => self.op_imm(Opcode::Push, b),
            None => {
                self.op(Opcode::PushDim);
                self.word(v.a);
                self.word(v.b);
            }
        }
    }

    fn port(&mut self, p: PortRef) {
        match p {
            PortRef::Local(i) => self.op_imm(Opcode::Push, i),
            PortRef::Formal(slot) => self.op_imm(Opcode::LoadL, slot),
        }
    }

    /// Pushes `ref len` for an array.
    fn array(&mut self, a: ArrayRef) {
        match a {
            ArrayRef::Global(v) => {
                let (base, size) = self.globals[v];
                self.value(base);
                self.value(size);
            }
            ArrayRef::Const { id, len } => {
                self.op(Opcode::Push);
                self.label_word(self.consts[id], reference::CODE);
                self.op_imm(Opcode::Push, len);
            }
            ArrayRef::Frame { slot, len } => {
                self.op_imm(Opcode::LocalRef, slot);
                self.op_imm(Opcode::Push, len);
            }
            ArrayRef::Formal { slot } => {
                self.op_imm(Opcode::LoadL, slot);
                self.op_imm(Opcode::LoadL, slot + 1);
            }
        }
    }

    fn scalar_address(&self, v: usize) -> Word {
        self.globals[v].0.as_constant().expect("scalars have constant addresses")
    }

    fn load(&mut self, place: &Place) {
        match place {
            Place::Global(v) => self.op_imm(Opcode::LoadG, self.scalar_address(*v)),
            Place::Slot(s) => self.op_imm(Opcode::LoadL, *s),
            Place::Port(p) => {
                self.port(*p);
                self.op(Opcode::PortRead);
            }
            Place::Element(a, index) => {
                self.array(*a);
                self.expr(index);
                self.op(Opcode::LoadX);
            }
        }
    }

    /// Stores the word on top of the stack.
    fn store(&mut self, place: &Place) {
        match place {
            Place::Global(v) => self.op_imm(Opcode::StoreG, self.scalar_address(*v)),
            Place::Slot(s) => self.op_imm(Opcode::StoreL, *s),
            Place::Port(p) => {
                self.port(*p);
                self.op(Opcode::PortSet);
            }
            Place::Element(a, index) => {
                self.array(*a);
                self.expr(index);
                self.op(Opcode::StoreX);
            }
        }
    }

    fn args(&mut self, args: &[Arg]) {
        for arg in args {
            match arg {
                Arg::Word(e) => self.expr(e),
                Arg::Port(p) => self.port(*p),
                Arg::Array { array, offset, narrow } => {
                    self.array(*array);
                    if let Some(off) = offset {
                        self.expr(off);
                        self.op(Opcode::Slice);
                    }
                    if let Some(n) = narrow {
                        self.op_imm(Opcode::Narrow, *n);
                    }
                }
            }
        }
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Value(v) => self.value(*v),
            Expr::Load(place) => self.load(place),
            Expr::Length(ArrayRef::Formal { slot }) => self.op_imm(Opcode::LoadL, slot + 1),
            Expr::Length(a) => {
                self.array(*a);
                self.op(Opcode::Swap);
                self.op(Opcode::Drop);
            }
            Expr::Now => self.op(Opcode::Now),
            Expr::Receive { port, target: None } => {
                self.port(*port);
                self.op(Opcode::RecvEnd);
            }
            Expr::Receive { port, target: Some(target) } => {
                let (fail, end) = (self.label(), self.label());
                self.port(*port);
                self.op(Opcode::Recv);
                self.jump(Opcode::Jz, fail);
                self.store(target);
                self.op_imm(Opcode::Push, 1);
                self.jump(Opcode::Jmp, end);
                self.place_label(fail);
                self.op(Opcode::Drop);
                self.op_imm(Opcode::Push, 0);
                self.place_label(end);
            }
            Expr::Call { routine, args } => {
                self.args(args);
                self.jump(Opcode::Call, self.routines[*routine]);
            }
            Expr::New(args) => {
                self.args(args);
                self.op(Opcode::NewProc);
            }
            Expr::Unary(op, operand) => {
                self.expr(operand);
                self.op(Opcode::unary(*op));
            }
            Expr::Binary(op, lhs, rhs) => {
                self.expr(lhs);
                self.expr(rhs);
                self.op(Opcode::binary(*op));
            }
        }
    }

    fn asm(&mut self, items: &[AsmItem]) {
        for item in items {
            match item {
                AsmItem::Word(w) => self.word(*w),
                AsmItem::Expr(e) => self.expr(e),
            }
        }
    }

    fn stmts(&mut self, list: &[Stmt]) {
        for s in list {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::If { arms, otherwise } => {
                let end = self.label();
                for (cond, body) in arms {
                    let next = self.label();
                    self.expr(cond);
                    self.jump(Opcode::Jz, next);
                    self.stmts(body);
                    self.jump(Opcode::Jmp, end);
                    self.place_label(next);
                }
                self.stmts(otherwise);
                self.place_label(end);
            }
            Stmt::Repeat { condition, count, body, until } => {
                let counter = self.temp_next;
                self.temp_next += 1;
                self.temp_max = self.temp_max.max(self.temp_next);
                let (top, end) = (self.label(), self.label());
                self.expr(count);
                self.op_imm(Opcode::StoreL, counter);
                self.place_label(top);
                self.op_imm(Opcode::LoadL, counter);
                self.jump(Opcode::Jz, end);
                if let Some(c) = condition {
                    self.expr(c);
                    self.jump(Opcode::Jz, end);
                }
                self.stmts(body);
                self.op_imm(Opcode::LoadL, counter);
                self.op_imm(Opcode::Push, 1);
                self.op(Opcode::Sub);
                self.op_imm(Opcode::StoreL, counter);
                if let Some(u) = until {
                    self.expr(u);
                    self.jump(Opcode::Jnz, end);
                }
                self.jump(Opcode::Jmp, top);
                self.place_label(end);
                self.temp_next -= 1;
            }
            Stmt::Next(state) => self.jump(Opcode::Jmp, self.states[*state as usize]),
            Stmt::Assign { place, value } => {
                self.expr(value);
                self.store(place);
            }
            Stmt::AssignAsm { place, items } => {
                self.asm(items);
                self.store(place);
            }
            Stmt::Send { port, payload } => match payload {
                Payload::Data(e) => {
                    self.expr(e);
                    self.port(*port);
                    self.op(Opcode::Send);
                }
                Payload::End => {
                    self.port(*port);
                    self.op(Opcode::SendEnd);
                }
                Payload::Pause => {
                    self.port(*port);
                    self.op(Opcode::SendPause);
                }
            },
            Stmt::Call { routine, args } => {
                self.args(args);
                self.jump(Opcode::Call, self.routines[*routine]);
            }
            Stmt::Asm(items) => self.asm(items),
        }
    }
}
