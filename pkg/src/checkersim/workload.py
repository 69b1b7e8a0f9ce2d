"""Synthetic workload generator: deterministic programs with controlled
per-class instruction fractions, bounded dynamic length, and provably
in-footprint memory accesses.

Layout: a straight-line body wrapped in a counted loop.  x2 is the reserved
loop counter, memory accesses are x0-based with bounded offsets, branches
inside the body only jump forward, and generated jumps resolve to the next
instruction.  Class quotas use largest-remainder rounding, so realized static
fractions match the request to well under the 2% contract.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isa import (
    InstrClass, Instruction, Program,
    OP_ADD, OP_ADDI, OP_SUB, OP_XOR, OP_OR, OP_AND, OP_MUL, OP_DIV, OP_FMIX,
    OP_LD, OP_SD, OP_BEQ, OP_BNE, OP_BLT, OP_JALR, OP_CSRR, OP_TRAP, OP_NOP,
)

# Base of the forwarded CSR id window; generated csrr picks ids inside it.
CSR_ID_BASE = 0xC00

# Registers the generator never writes: x0 (zero), x2 (loop counter).
_RESERVED_DESTS = (0, 2)
_GPR_POOL = [i for i in range(5, 32)]
_SRC_POOL = [i for i in range(32) if i != 2]

_ALU_OPS = (OP_ADD, OP_ADDI, OP_SUB, OP_XOR, OP_OR, OP_AND)
_BR_OPS = (OP_BEQ, OP_BNE, OP_BLT)


class MixError(ValueError):
    """Infeasible or malformed instruction mix."""


@dataclass
class InstrMix:
    """Requested class fractions plus the shape of the generated program."""

    fractions: dict[InstrClass, float]
    body_instructions: int = 10_000
    loop_count: int = 1
    memory_footprint_bytes: int = 1 << 16
    seed: int = 0
    csr_ids: int = 2
    fp_chain: float = 1.0  # probability an fmix reads the previous fmix dest

    def validate(self) -> None:
        total = 0.0
        for klass, frac in self.fractions.items():
            if frac < 0:
                raise MixError(f"negative fraction for {klass.name}")
            total += frac
        if abs(total - 1.0) > 1e-9:
            raise MixError(f"fractions sum to {total}, expected 1.0")
        if self.body_instructions < 1 or self.loop_count < 1:
            raise MixError("body_instructions and loop_count must be >= 1")
        mem_frac = (self.fractions.get(InstrClass.LOAD, 0.0)
                    + self.fractions.get(InstrClass.STORE, 0.0))
        if mem_frac > 0 and self.memory_footprint_bytes < 8:
            raise MixError("memory accesses requested with zero footprint")
        if self.fractions.get(InstrClass.CSR_READ, 0.0) > 0 and self.csr_ids < 1:
            raise MixError("csr reads requested with no csr ids")


def _quotas(fractions: dict[InstrClass, float], n: int) -> dict[InstrClass, int]:
    """Largest-remainder apportionment of n slots to the mix classes."""
    shares = [(k, fractions[k] * n) for k in sorted(fractions, key=int)
              if fractions[k] > 0]
    counts = {k: int(s) for k, s in shares}
    leftover = n - sum(counts.values())
    by_rem = sorted(shares, key=lambda kv: (kv[1] - int(kv[1]), int(kv[0])),
                    reverse=True)
    for k, _ in by_rem[:leftover]:
        counts[k] += 1
    return counts


def gen_workload(mix: InstrMix) -> Program:
    """Emit a Program realizing `mix`; pure function of the mix (incl. seed)."""
    mix.validate()
    rng = np.random.default_rng(mix.seed)
    n = mix.body_instructions

    classes: list[InstrClass] = []
    for klass, count in _quotas(mix.fractions, n).items():
        classes.extend([klass] * count)
    order = rng.permutation(len(classes))
    body_classes = [classes[i] for i in order]

    max_off = mix.memory_footprint_bytes - 8
    n_slots = max_off // 8 + 1 if max_off >= 0 else 0
    body_start = 1  # one setup instruction precedes the loop body
    out: list[Instruction] = [
        Instruction(OP_ADDI, InstrClass.INT_ALU, dest=2, src1=0,
                    imm=mix.loop_count),
    ]
    last_fmix_dest = -1
    for i, klass in enumerate(body_classes):
        idx = body_start + i
        if klass == InstrClass.INT_ALU:
            op = _ALU_OPS[rng.integers(len(_ALU_OPS))]
            dest = _GPR_POOL[rng.integers(len(_GPR_POOL))]
            s1 = _SRC_POOL[rng.integers(len(_SRC_POOL))]
            if op == OP_ADDI:
                ins = Instruction(op, klass, dest=dest, src1=s1,
                                  imm=int(rng.integers(-4096, 4096)))
            else:
                s2 = _SRC_POOL[rng.integers(len(_SRC_POOL))]
                ins = Instruction(op, klass, dest=dest, src1=s1, src2=s2)
        elif klass in (InstrClass.MUL, InstrClass.DIV):
            op = OP_MUL if klass == InstrClass.MUL else OP_DIV
            ins = Instruction(op, klass,
                              dest=_GPR_POOL[rng.integers(len(_GPR_POOL))],
                              src1=_SRC_POOL[rng.integers(len(_SRC_POOL))],
                              src2=_SRC_POOL[rng.integers(len(_SRC_POOL))])
        elif klass == InstrClass.FP_ALU:
            if last_fmix_dest >= 0 and rng.random() < mix.fp_chain:
                s1 = last_fmix_dest
            else:
                s1 = int(rng.integers(32))
            ins = Instruction(OP_FMIX, klass, dest=int(rng.integers(32)),
                              src1=s1, src2=int(rng.integers(32)))
            last_fmix_dest = ins.dest
        elif klass == InstrClass.LOAD:
            ins = Instruction(OP_LD, klass,
                              dest=_GPR_POOL[rng.integers(len(_GPR_POOL))],
                              src1=0, imm=8 * int(rng.integers(n_slots)))
        elif klass == InstrClass.STORE:
            ins = Instruction(OP_SD, klass, src1=0,
                              src2=_SRC_POOL[rng.integers(len(_SRC_POOL))],
                              imm=8 * int(rng.integers(n_slots)))
        elif klass == InstrClass.BRANCH:
            op = _BR_OPS[rng.integers(len(_BR_OPS))]
            remaining = len(body_classes) - i
            skip = int(rng.integers(1, min(6, remaining) + 1))
            ins = Instruction(op, klass,
                              src1=_SRC_POOL[rng.integers(len(_SRC_POOL))],
                              src2=_SRC_POOL[rng.integers(len(_SRC_POOL))],
                              imm=skip)
        elif klass == InstrClass.JUMP:
            # Absolute jump to the next index, x0-based: always terminates.
            ins = Instruction(OP_JALR, klass,
                              dest=_GPR_POOL[rng.integers(len(_GPR_POOL))],
                              src1=0, imm=idx + 1)
        elif klass == InstrClass.CSR_READ:
            ins = Instruction(OP_CSRR, klass,
                              dest=_GPR_POOL[rng.integers(len(_GPR_POOL))],
                              csr_id=CSR_ID_BASE + int(rng.integers(mix.csr_ids)))
        elif klass == InstrClass.TRAP:
            ins = Instruction(OP_TRAP, klass)
        else:
            ins = Instruction(OP_NOP, InstrClass.NOP)
        out.append(ins)

    # Loop epilogue: decrement x2, loop back to the body start while nonzero.
    out.append(Instruction(OP_ADDI, InstrClass.INT_ALU, dest=2, src1=2, imm=-1))
    out.append(Instruction(OP_BNE, InstrClass.BRANCH, src1=2, src2=0,
                           imm=body_start - len(out)))
    labels = {"top": body_start}
    return Program(out, labels)


def class_histogram(program: Program) -> dict[InstrClass, int]:
    counts: dict[InstrClass, int] = {}
    for ins in program.instructions:
        counts[ins.klass] = counts.get(ins.klass, 0) + 1
    return counts


def _mix(loop: int = 1, body: int = 10_000, **fracs: float) -> InstrMix:
    fractions = {InstrClass[k.upper()]: v for k, v in fracs.items()}
    return InstrMix(fractions, body_instructions=body, loop_count=loop)


# The named workload suite. Fractions are tuned so the checker side is the
# bottleneck for every member at six little cores (keeps scaling trends
# strict), with div-heavy the standout once the little divider is slow.
SUITE_NAMES = (
    "alu-uniform", "load-heavy", "store-heavy", "div-heavy",
    "fp-heavy", "branch-heavy", "mixed-a", "mixed-b",
)


def suite_mix(name: str, body: int = 10_000, loop: int = 1,
              seed: int = 0) -> InstrMix:
    if name == "alu-uniform":
        m = _mix(int_alu=0.88, branch=0.10, nop=0.02)
    elif name == "load-heavy":
        m = _mix(load=0.15, int_alu=0.75, branch=0.08, store=0.02)
    elif name == "store-heavy":
        m = _mix(store=0.15, int_alu=0.73, branch=0.08, load=0.04)
    elif name == "div-heavy":
        m = _mix(div=0.30, int_alu=0.55, branch=0.10, load=0.05)
    elif name == "fp-heavy":
        m = _mix(fp_alu=0.30, int_alu=0.60, branch=0.08, load=0.02)
    elif name == "branch-heavy":
        m = _mix(branch=0.35, int_alu=0.60, nop=0.05)
    elif name == "mixed-a":
        m = _mix(int_alu=0.55, load=0.10, store=0.05, mul=0.05, div=0.05,
                 fp_alu=0.05, branch=0.10, csr_read=0.03, jump=0.02)
    elif name == "mixed-b":
        m = _mix(int_alu=0.60, load=0.08, store=0.04, div=0.08, fp_alu=0.08,
                 branch=0.08, mul=0.02, csr_read=0.02)
    else:
        raise MixError(f"unknown suite workload {name!r}")
    m.body_instructions = body
    m.loop_count = loop
    m.seed = seed
    return m
