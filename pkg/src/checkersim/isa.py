"""Minimal RISC-like instruction set: parsing, architectural state, and the
golden functional interpreter every replay-equivalence test is checked against.

The set is deliberately small (11 commit classes). Branch immediates are
instruction-index relative, memory is a flat byte store, and `csrr` reads a
per-id monotonic counter so CSR reads are non-repeatable across a run.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

MASK64 = (1 << 64) - 1
XLEN_REGS = 32


class InstrClass(IntEnum):
    """Commit-visible instruction categories (drive per-class commit costs)."""

    INT_ALU = 0
    MUL = 1
    DIV = 2
    FP_ALU = 3
    LOAD = 4
    STORE = 5
    BRANCH = 6
    JUMP = 7
    CSR_READ = 8
    TRAP = 9
    NOP = 10


# Semantic opcodes. Several opcodes share one InstrClass.
(
    OP_ADD, OP_ADDI, OP_SUB, OP_XOR, OP_XORI, OP_OR, OP_ORI, OP_AND, OP_ANDI,
    OP_MUL, OP_DIV, OP_FMIX, OP_LD, OP_SD, OP_BEQ, OP_BNE, OP_BLT, OP_JALR,
    OP_CSRR, OP_TRAP, OP_NOP,
) = range(21)

OP_CLASS = {
    OP_ADD: InstrClass.INT_ALU, OP_ADDI: InstrClass.INT_ALU,
    OP_SUB: InstrClass.INT_ALU, OP_XOR: InstrClass.INT_ALU,
    OP_XORI: InstrClass.INT_ALU, OP_OR: InstrClass.INT_ALU,
    OP_ORI: InstrClass.INT_ALU, OP_AND: InstrClass.INT_ALU,
    OP_ANDI: InstrClass.INT_ALU,
    OP_MUL: InstrClass.MUL,
    OP_DIV: InstrClass.DIV,
    OP_FMIX: InstrClass.FP_ALU,
    OP_LD: InstrClass.LOAD,
    OP_SD: InstrClass.STORE,
    OP_BEQ: InstrClass.BRANCH, OP_BNE: InstrClass.BRANCH,
    OP_BLT: InstrClass.BRANCH,
    OP_JALR: InstrClass.JUMP,
    OP_CSRR: InstrClass.CSR_READ,
    OP_TRAP: InstrClass.TRAP,
    OP_NOP: InstrClass.NOP,
}

MNEMONIC_OP = {
    "add": OP_ADD, "addi": OP_ADDI, "sub": OP_SUB, "xor": OP_XOR,
    "xori": OP_XORI, "or": OP_OR, "ori": OP_ORI, "and": OP_AND,
    "andi": OP_ANDI, "mul": OP_MUL, "div": OP_DIV, "fmix": OP_FMIX,
    "ld": OP_LD, "sd": OP_SD, "beq": OP_BEQ, "bne": OP_BNE, "blt": OP_BLT,
    "jalr": OP_JALR, "csrr": OP_CSRR, "trap": OP_TRAP, "nop": OP_NOP,
}
OP_MNEMONIC = {v: k for k, v in MNEMONIC_OP.items()}

_THREE_REG = {OP_ADD, OP_SUB, OP_XOR, OP_OR, OP_AND, OP_MUL, OP_DIV, OP_FMIX}
_TWO_REG_IMM = {OP_ADDI, OP_XORI, OP_ORI, OP_ANDI}
_BRANCHES = {OP_BEQ, OP_BNE, OP_BLT}


class IsaError(Exception):
    """Base for ISA-level failures."""


class ParseError(IsaError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


class MemoryAccessError(IsaError):
    pass


class RunawayError(IsaError):
    """run_functional exceeded its dynamic instruction budget."""


@dataclass(slots=True)
class Instruction:
    op: int
    klass: InstrClass
    dest: int = 0
    src1: int = 0
    src2: int = 0
    imm: int = 0
    csr_id: int = 0

    def text(self) -> str:
        """Render back into parser grammar."""
        m = OP_MNEMONIC[self.op]
        if self.op in _THREE_REG:
            b = "f" if self.op == OP_FMIX else "x"
            return f"{m} {b}{self.dest}, {b}{self.src1}, {b}{self.src2}"
        if self.op in _TWO_REG_IMM:
            return f"{m} x{self.dest}, x{self.src1}, {self.imm}"
        if self.op == OP_LD:
            return f"{m} x{self.dest}, {self.imm}(x{self.src1})"
        if self.op == OP_SD:
            return f"{m} x{self.src2}, {self.imm}(x{self.src1})"
        if self.op in _BRANCHES:
            return f"{m} x{self.src1}, x{self.src2}, {self.imm:+d}"
        if self.op == OP_JALR:
            return f"{m} x{self.dest}, {self.imm}(x{self.src1})"
        if self.op == OP_CSRR:
            return f"{m} x{self.dest}, {hex(self.csr_id)}"
        return m


@dataclass
class ArchRegs:
    """Architectural state: two 32-entry banks, pc, and the CSR counters."""

    int_regs: list[int] = field(default_factory=lambda: [0] * XLEN_REGS)
    fp_regs: list[int] = field(default_factory=lambda: [0] * XLEN_REGS)
    pc: int = 0
    csrs: dict[int, int] = field(default_factory=dict)

    def copy(self) -> "ArchRegs":
        return ArchRegs(list(self.int_regs), list(self.fp_regs), self.pc,
                        dict(self.csrs))

    def __eq__(self, other) -> bool:
        return (self.int_regs == other.int_regs
                and self.fp_regs == other.fp_regs
                and self.pc == other.pc
                and self.csrs == other.csrs)


@dataclass
class Program:
    instructions: list[Instruction]
    labels: dict[str, int] = field(default_factory=dict)
    entry: int = 0

    def __len__(self) -> int:
        return len(self.instructions)

    def to_text(self) -> str:
        index_labels: dict[int, list[str]] = {}
        for name, idx in self.labels.items():
            index_labels.setdefault(idx, []).append(name)
        lines = []
        for i, ins in enumerate(self.instructions):
            for name in sorted(index_labels.get(i, [])):
                lines.append(f"{name}:")
            lines.append(f"    {ins.text()}")
        for name in sorted(index_labels.get(len(self.instructions), [])):
            lines.append(f"{name}:")
        return "\n".join(lines) + "\n"


@dataclass(slots=True)
class ExecEffect:
    """Commit-visible effects of one instruction; pure w.r.t. inputs."""

    writes: tuple  # ((bank, reg, value), ...) bank 0=int 1=fp; x0 omitted
    mem: tuple | None  # (kind: InstrClass.LOAD/STORE, address, data)
    csr: tuple | None  # (csr_id, value read)
    pc_next: int
    trap: bool = False


@dataclass(slots=True)
class TraceEntry:
    seq: int
    idx: int  # instruction index executed
    instr: Instruction
    writes: tuple
    mem: tuple | None
    csr: tuple | None
    pc_next: int
    trap: bool


_REG_RE_CACHE: dict[str, tuple[int, int]] = {}


def _parse_reg(tok: str, line: int, bank: str = "x") -> int:
    tok = tok.strip()
    if len(tok) < 2 or tok[0] != bank or not tok[1:].isdigit():
        raise ParseError(f"expected {bank}-register, got {tok!r}", line)
    n = int(tok[1:])
    if n >= XLEN_REGS:
        raise ParseError(f"register index out of range: {tok!r}", line)
    return n


def _parse_int(tok: str, line: int) -> int:
    try:
        return int(tok.strip(), 0)
    except ValueError:
        raise ParseError(f"expected integer, got {tok.strip()!r}", line) from None


def _parse_mem_operand(tok: str, line: int) -> tuple[int, int]:
    """`imm(xN)` -> (imm, reg)."""
    tok = tok.strip()
    if not tok.endswith(")") or "(" not in tok:
        raise ParseError(f"expected imm(xN), got {tok!r}", line)
    imm_s, reg_s = tok[:-1].split("(", 1)
    return _parse_int(imm_s or "0", line), _parse_reg(reg_s, line)


def parse_program(text: str) -> Program:
    """Parse newline-separated `<label:>? <mnemonic> <operands>` statements.

    `#` starts a comment. Branch targets may be labels or signed
    instruction-index offsets; all label targets must resolve.
    """
    instructions: list[Instruction] = []
    labels: dict[str, int] = {}
    pending: list[tuple[int, int, str]] = []  # (instr idx, line, label) fixups

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stmt = raw.split("#", 1)[0].strip()
        while stmt:
            head = stmt.split(None, 1)[0]
            if head.endswith(":"):
                name = head[:-1]
                if not name or not name.replace("_", "a").replace(".", "a").isalnum():
                    raise ParseError(f"bad label {head!r}", lineno)
                if name in labels:
                    raise ParseError(f"duplicate label {name!r}", lineno)
                labels[name] = len(instructions)
                stmt = stmt[len(head):].strip()
                continue
            break
        if not stmt:
            continue

        parts = stmt.split(None, 1)
        mnem = parts[0].lower()
        ops = [o.strip() for o in parts[1].split(",")] if len(parts) > 1 else []
        if mnem not in MNEMONIC_OP:
            raise ParseError(f"unknown mnemonic {mnem!r}", lineno)
        op = MNEMONIC_OP[mnem]
        idx = len(instructions)

        def need(n: int):
            if len(ops) != n:
                raise ParseError(
                    f"{mnem} expects {n} operands, got {len(ops)}", lineno)

        if op in _THREE_REG:
            need(3)
            bank = "f" if op == OP_FMIX else "x"
            ins = Instruction(op, OP_CLASS[op],
                              dest=_parse_reg(ops[0], lineno, bank),
                              src1=_parse_reg(ops[1], lineno, bank),
                              src2=_parse_reg(ops[2], lineno, bank))
        elif op in _TWO_REG_IMM:
            need(3)
            ins = Instruction(op, OP_CLASS[op],
                              dest=_parse_reg(ops[0], lineno),
                              src1=_parse_reg(ops[1], lineno),
                              imm=_parse_int(ops[2], lineno))
        elif op == OP_LD:
            need(2)
            imm, base = _parse_mem_operand(ops[1], lineno)
            ins = Instruction(op, OP_CLASS[op],
                              dest=_parse_reg(ops[0], lineno),
                              src1=base, imm=imm)
        elif op == OP_SD:
            need(2)
            imm, base = _parse_mem_operand(ops[1], lineno)
            ins = Instruction(op, OP_CLASS[op],
                              src1=base, src2=_parse_reg(ops[0], lineno),
                              imm=imm)
        elif op in _BRANCHES:
            need(3)
            ins = Instruction(op, OP_CLASS[op],
                              src1=_parse_reg(ops[0], lineno),
                              src2=_parse_reg(ops[1], lineno))
            tgt = ops[2]
            if tgt.lstrip("+-").isdigit():
                ins.imm = int(tgt, 10)
            else:
                pending.append((idx, lineno, tgt))
            instructions.append(ins)
            continue
        elif op == OP_JALR:
            need(2)
            imm, base = _parse_mem_operand(ops[1], lineno)
            ins = Instruction(op, OP_CLASS[op],
                              dest=_parse_reg(ops[0], lineno),
                              src1=base, imm=imm)
        elif op == OP_CSRR:
            need(2)
            csr = _parse_int(ops[1], lineno)
            if not 0 <= csr < (1 << 12):
                raise ParseError(f"csr id out of 12-bit range: {csr}", lineno)
            ins = Instruction(op, OP_CLASS[op],
                              dest=_parse_reg(ops[0], lineno), csr_id=csr)
        else:  # trap, nop
            need(0)
            ins = Instruction(op, OP_CLASS[op])
        instructions.append(ins)

    for idx, lineno, name in pending:
        if name not in labels:
            raise ParseError(f"unresolved label {name!r}", lineno)
        instructions[idx].imm = labels[name] - idx

    n = len(instructions)
    for i, ins in enumerate(instructions):
        if ins.op in _BRANCHES and not (0 <= i + ins.imm <= n):
            raise ParseError(f"branch target {i + ins.imm} out of range", 0)
    return Program(instructions, labels)


def _mix64(a: int, b: int) -> int:
    """Fixed FP-payload mixing function: only the latency class matters."""
    x = (a ^ b) & MASK64
    x = ((x << 13) | (x >> 51)) & MASK64
    return (x * 0x9E3779B97F4A7C15 + 0x2545F4914F6CDD1D) & MASK64


def _to_signed(v: int) -> int:
    return v - (1 << 64) if v >> 63 else v


def exec_instr(state: ArchRegs, instr: Instruction, memory: bytearray) -> ExecEffect:
    """Compute the commit effects of `instr` without mutating anything.

    Division by zero yields an all-ones quotient; a csrr read returns the
    current counter for its id (the apply step bumps it).
    """
    r = state.int_regs
    op = instr.op
    pc = state.pc
    writes: tuple = ()
    mem = None
    csr = None
    pc_next = pc + 1
    trap = False

    if op == OP_ADD:
        v = (r[instr.src1] + r[instr.src2]) & MASK64
        writes = ((0, instr.dest, v),)
    elif op == OP_ADDI:
        v = (r[instr.src1] + instr.imm) & MASK64
        writes = ((0, instr.dest, v),)
    elif op == OP_SUB:
        v = (r[instr.src1] - r[instr.src2]) & MASK64
        writes = ((0, instr.dest, v),)
    elif op == OP_XOR:
        writes = ((0, instr.dest, r[instr.src1] ^ r[instr.src2]),)
    elif op == OP_XORI:
        writes = ((0, instr.dest, (r[instr.src1] ^ instr.imm) & MASK64),)
    elif op == OP_OR:
        writes = ((0, instr.dest, r[instr.src1] | r[instr.src2]),)
    elif op == OP_ORI:
        writes = ((0, instr.dest, (r[instr.src1] | instr.imm) & MASK64),)
    elif op == OP_AND:
        writes = ((0, instr.dest, r[instr.src1] & r[instr.src2]),)
    elif op == OP_ANDI:
        writes = ((0, instr.dest, r[instr.src1] & instr.imm & MASK64),)
    elif op == OP_MUL:
        writes = ((0, instr.dest, (r[instr.src1] * r[instr.src2]) & MASK64),)
    elif op == OP_DIV:
        d = r[instr.src2]
        writes = ((0, instr.dest, MASK64 if d == 0 else r[instr.src1] // d),)
    elif op == OP_FMIX:
        f = state.fp_regs
        writes = ((1, instr.dest, _mix64(f[instr.src1], f[instr.src2])),)
    elif op == OP_LD:
        addr = (r[instr.src1] + instr.imm) & MASK64
        if addr + 8 > len(memory):
            raise MemoryAccessError(f"load at {addr:#x} beyond footprint")
        data = int.from_bytes(memory[addr:addr + 8], "little")
        writes = ((0, instr.dest, data),)
        mem = (InstrClass.LOAD, addr, data)
    elif op == OP_SD:
        addr = (r[instr.src1] + instr.imm) & MASK64
        if addr + 8 > len(memory):
            raise MemoryAccessError(f"store at {addr:#x} beyond footprint")
        mem = (InstrClass.STORE, addr, r[instr.src2])
    elif op == OP_BEQ:
        if r[instr.src1] == r[instr.src2]:
            pc_next = pc + instr.imm
    elif op == OP_BNE:
        if r[instr.src1] != r[instr.src2]:
            pc_next = pc + instr.imm
    elif op == OP_BLT:
        if _to_signed(r[instr.src1]) < _to_signed(r[instr.src2]):
            pc_next = pc + instr.imm
    elif op == OP_JALR:
        writes = ((0, instr.dest, pc + 1),)
        pc_next = (r[instr.src1] + instr.imm) & MASK64
    elif op == OP_CSRR:
        v = state.csrs.get(instr.csr_id, 0)
        writes = ((0, instr.dest, v),)
        csr = (instr.csr_id, v)
    elif op == OP_TRAP:
        trap = True
    # OP_NOP falls through

    if writes and writes[0][0] == 0 and writes[0][1] == 0:
        writes = ()  # x0 is hardwired to zero
    return ExecEffect(writes, mem, csr, pc_next, trap)


def apply_effect(state: ArchRegs, memory: bytearray, eff: ExecEffect) -> None:
    """Commit an effect: register writes, store data, csr bump, pc."""
    for bank, reg, val in eff.writes:
        (state.int_regs if bank == 0 else state.fp_regs)[reg] = val
    if eff.mem is not None and eff.mem[0] == InstrClass.STORE:
        _, addr, data = eff.mem
        memory[addr:addr + 8] = data.to_bytes(8, "little")
    if eff.csr is not None:
        cid, val = eff.csr
        state.csrs[cid] = (val + 1) & MASK64
    state.pc = eff.pc_next


def run_functional(program: Program, memory: bytearray,
                   max_instrs: int = 2_000_000) -> list[TraceEntry]:
    """Golden oracle: retire the whole program in order, recording effects.

    Terminates when pc reaches one past the last instruction; raises
    RunawayError if more than `max_instrs` retire first.
    """
    state = ArchRegs()
    state.pc = program.entry
    trace: list[TraceEntry] = []
    instrs = program.instructions
    n = len(instrs)
    seq = 0
    while state.pc != n:
        pc = state.pc
        if not 0 <= pc < n:
            raise IsaError(f"pc {pc} outside program of length {n}")
        if seq >= max_instrs:
            raise RunawayError(f"exceeded {max_instrs} dynamic instructions")
        ins = instrs[pc]
        eff = exec_instr(state, ins, memory)
        trace.append(TraceEntry(seq, pc, ins, eff.writes, eff.mem, eff.csr,
                                eff.pc_next, eff.trap))
        apply_effect(state, memory, eff)
        seq += 1
    return trace
