"""Program representation: memory layout, instructions, validation, generation.

A program is an immutable value: a memory layout, the floating-point memory
image written at episode start, the per-step action function body, and up to
six conditionally-invoked subroutine (cadf) bodies. Mutation and crossover
always build new programs; runtimes never alias program internals.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .ops import (
    ALL_OPCODES,
    Bank,
    BANK_LETTER,
    CALL_IN_BANKS,
    CALL_OPCODE,
    CALL_OUT_BANKS,
    LETTER_BANK,
    OPS_BY_CODE,
    op_name,
)

MAX_CADFS = 6

# Harness register conventions: the observation vector is copied into v1
# before each action step, and scalar-action environments read the action
# from s3 (vector-action environments read v4).
OBS_VECTOR_SLOT = 1
ACTION_SCALAR_SLOT = 3
ACTION_VECTOR_SLOT = 4


class ConfigError(ValueError):
    """Invalid generation or layout configuration."""


@dataclass(frozen=True)
class MemoryLayout:
    n_scalar: int = 16
    n_vector: int = 16
    n_matrix: int = 16
    n_index: int = 16
    vec_dim: int = 4
    mat_dim: int = 4

    def __post_init__(self):
        for name in ("n_scalar", "n_vector", "n_matrix", "n_index"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.vec_dim < 1 or self.mat_dim < 1:
            raise ConfigError("vec_dim and mat_dim must be >= 1")

    def bank_size(self, bank: Bank) -> int:
        return (self.n_scalar, self.n_vector, self.n_matrix, self.n_index)[bank]

    def idx_dim(self, kind: str) -> int:
        return self.vec_dim if kind == "v" else self.mat_dim


@dataclass(frozen=True)
class Address:
    bank: Bank
    slot: int

    def __str__(self) -> str:
        return f"{BANK_LETTER[self.bank]}{self.slot}"

    @staticmethod
    def parse(text: str) -> "Address":
        text = text.strip()
        if not text or text[0] not in LETTER_BANK:
            raise ValueError(f"bad address {text!r}")
        try:
            slot = int(text[1:])
        except ValueError:
            raise ValueError(f"bad address {text!r}") from None
        if slot < 0:
            raise ValueError(f"bad address {text!r}")
        return Address(LETTER_BANK[text[0]], slot)


def saddr(slot: int) -> Address:
    return Address(Bank.SCALAR, slot)


def vaddr(slot: int) -> Address:
    return Address(Bank.VECTOR, slot)


def maddr(slot: int) -> Address:
    return Address(Bank.MATRIX, slot)


def iaddr(slot: int) -> Address:
    return Address(Bank.INDEX, slot)


@dataclass(frozen=True)
class Instruction:
    """One operation with typed operand addresses and embedded literals.

    For the subroutine call pseudo-op, ``callee`` identifies the target body,
    ``inputs`` holds the fixed 8-address argument list and ``outputs`` the
    (scalar, vector, index) destination triple; ``output`` is None.
    """

    op_id: int
    inputs: tuple = ()
    output: Optional[Address] = None
    literal_consts: tuple = ()
    literal_indices: tuple = ()
    callee: Optional[int] = None
    outputs: tuple = ()  # call pseudo-op only

    @property
    def is_call(self) -> bool:
        return self.op_id == CALL_OPCODE

    def render(self) -> str:
        """Canonical single-line text form."""
        if self.is_call:
            outs = ", ".join(str(a) for a in self.outputs)
            ss = ", ".join(str(a) for a in self.inputs[:4])
            vs = ", ".join(str(a) for a in self.inputs[4:6])
            ix = ", ".join(str(a) for a in self.inputs[6:8])
            return f"{outs} = CALL_CADF({self.callee}; {ss}; {vs}; {ix})"
        parts = [", ".join(str(a) for a in self.inputs)]
        if self.literal_consts:
            parts.append("consts=[" + ", ".join(format(c, ".17g") for c in self.literal_consts) + "]")
        if self.literal_indices:
            parts.append("idx=[" + ", ".join(str(i) for i in self.literal_indices) + "]")
        body = "; ".join(p for p in parts if p)
        name = op_name(self.op_id)
        if self.output is None:
            return f"{name}({body})"
        return f"{self.output} = {name}({body})"


@dataclass(frozen=True)
class Program:
    """Evolved artifact: init image plus instruction lists."""

    layout: MemoryLayout
    init_scalars: tuple = ()            # n_scalar floats
    init_vectors: tuple = ()            # n_vector tuples of vec_dim floats
    init_matrices: tuple = ()           # n_matrix tuples of mat_dim tuples
    get_action: tuple = ()              # Instruction tuple
    cadfs: tuple = ()                   # tuple of Instruction tuples

    def __post_init__(self):
        lay = self.layout
        if not self.init_scalars:
            object.__setattr__(self, "init_scalars", (0.0,) * lay.n_scalar)
        if not self.init_vectors:
            object.__setattr__(self, "init_vectors", ((0.0,) * lay.vec_dim,) * lay.n_vector)
        if not self.init_matrices:
            row = (0.0,) * lay.mat_dim
            object.__setattr__(self, "init_matrices", ((row,) * lay.mat_dim,) * lay.n_matrix)

    def init_arrays(self):
        """Init image as float64 numpy arrays (index memory is always zero)."""
        lay = self.layout
        s = np.array(self.init_scalars, dtype=np.float64)
        v = np.array(self.init_vectors, dtype=np.float64).reshape(lay.n_vector, lay.vec_dim)
        m = np.array(self.init_matrices, dtype=np.float64).reshape(lay.n_matrix, lay.mat_dim, lay.mat_dim)
        return s, v, m

    def with_init(self, scalars: np.ndarray, vectors: np.ndarray, matrices: np.ndarray) -> "Program":
        return replace(
            self,
            init_scalars=tuple(float(x) for x in scalars),
            init_vectors=tuple(tuple(float(x) for x in row) for row in vectors),
            init_matrices=tuple(tuple(tuple(float(x) for x in row) for row in mat) for mat in matrices),
        )

    def functions(self):
        """(name, body) pairs for the action function and every cadf."""
        yield "get_action", self.get_action
        for k, body in enumerate(self.cadfs):
            yield f"cadf{k}", body


@dataclass(frozen=True)
class GenConfig:
    """Bounds for random program and instruction generation."""

    min_instructions: int = 1
    max_instructions: int = 10
    max_cadfs: int = 0
    const_range: tuple = (-1.0, 1.0)
    max_body_len: Optional[int] = None   # mutation insert cap; None = unbounded
    allowed_ops: Optional[tuple] = None  # opcode whitelist; None = full table

    def __post_init__(self):
        if self.min_instructions < 0 or self.max_instructions < self.min_instructions:
            raise ConfigError("instruction bounds must satisfy 0 <= min <= max")
        if not 0 <= self.max_cadfs <= MAX_CADFS:
            raise ConfigError(f"max_cadfs must be in [0, {MAX_CADFS}]")
        if not self.const_range[0] <= self.const_range[1]:
            raise ConfigError("const_range must be (lo, hi) with lo <= hi")

    def ops(self) -> tuple:
        return self.allowed_ops if self.allowed_ops is not None else ALL_OPCODES


# ---------------------------------------------------------------------------
# validation


def _check_slot(addr: Address, layout: MemoryLayout) -> bool:
    return 0 <= addr.slot < layout.bank_size(addr.bank)


def _validate_instruction(instr: Instruction, layout: MemoryLayout, where: str,
                          n_cadfs: int, in_cadf: bool) -> list:
    errs = []
    if instr.is_call:
        if in_cadf:
            errs.append(f"{where}: recursive CADF call (CALL_CADF inside a cadf body)")
            return errs
        if instr.callee is None or not 0 <= instr.callee < n_cadfs:
            errs.append(f"{where}: CALL_CADF callee {instr.callee} out of range [0, {n_cadfs})")
        if len(instr.inputs) != 8:
            errs.append(f"{where}: CALL_CADF needs 8 inputs, got {len(instr.inputs)}")
        else:
            for j, (addr, bank) in enumerate(zip(instr.inputs, CALL_IN_BANKS)):
                if addr.bank != bank:
                    errs.append(f"{where}: CALL_CADF input {j} expects {bank.name.lower()}, got {addr}")
                elif not _check_slot(addr, layout):
                    errs.append(f"{where}: CALL_CADF input {j} slot out of range: {addr}")
        if len(instr.outputs) != 3:
            errs.append(f"{where}: CALL_CADF needs 3 outputs, got {len(instr.outputs)}")
        else:
            for j, (addr, bank) in enumerate(zip(instr.outputs, CALL_OUT_BANKS)):
                if addr.bank != bank:
                    errs.append(f"{where}: CALL_CADF output {j} expects {bank.name.lower()}, got {addr}")
                elif not _check_slot(addr, layout):
                    errs.append(f"{where}: CALL_CADF output {j} slot out of range: {addr}")
        return errs

    spec = OPS_BY_CODE.get(instr.op_id)
    if spec is None:
        errs.append(f"{where}: unknown op id {instr.op_id}")
        return errs
    if len(instr.inputs) != len(spec.in_banks):
        errs.append(f"{where}: {spec.name} needs {len(spec.in_banks)} inputs, got {len(instr.inputs)}")
    else:
        for j, (addr, bank) in enumerate(zip(instr.inputs, spec.in_banks)):
            if addr.bank != bank:
                errs.append(f"{where}: {spec.name} input {j} expects {bank.name.lower()}, got {addr}")
            elif not _check_slot(addr, layout):
                errs.append(f"{where}: {spec.name} input {j} slot out of range: {addr}")
    if spec.out_bank is None:
        if instr.output is not None:
            errs.append(f"{where}: {spec.name} takes no output")
    elif instr.output is None:
        errs.append(f"{where}: {spec.name} needs an output address")
    elif instr.output.bank != spec.out_bank:
        errs.append(f"{where}: {spec.name} output expects {spec.out_bank.name.lower()}, got {instr.output}")
    elif not _check_slot(instr.output, layout):
        errs.append(f"{where}: {spec.name} output slot out of range: {instr.output}")
    if len(instr.literal_consts) != spec.n_consts:
        errs.append(f"{where}: {spec.name} needs {spec.n_consts} consts, got {len(instr.literal_consts)}")
    elif any(not np.isfinite(c) for c in instr.literal_consts):
        errs.append(f"{where}: {spec.name} has non-finite literal constant")
    if len(instr.literal_indices) != spec.n_idx:
        errs.append(f"{where}: {spec.name} needs {spec.n_idx} literal indices, got {len(instr.literal_indices)}")
    else:
        for j, (ix, kind) in enumerate(zip(instr.literal_indices, spec.idx_dims)):
            dim = layout.idx_dim(kind)
            if not 0 <= ix < dim:
                errs.append(f"{where}: {spec.name} literal index {j} = {ix} out of [0, {dim})")
    return errs


def validate(program: Program) -> list:
    """Return a list of violation descriptions; empty iff the program is well formed."""
    errs = []
    lay = program.layout
    if len(program.cadfs) > MAX_CADFS:
        errs.append(f"program has {len(program.cadfs)} cadfs, max is {MAX_CADFS}")
    if len(program.init_scalars) != lay.n_scalar:
        errs.append("init scalar image does not match layout")
    if len(program.init_vectors) != lay.n_vector or any(len(v) != lay.vec_dim for v in program.init_vectors):
        errs.append("init vector image does not match layout")
    if len(program.init_matrices) != lay.n_matrix or any(
        len(m) != lay.mat_dim or any(len(r) != lay.mat_dim for r in m) for m in program.init_matrices
    ):
        errs.append("init matrix image does not match layout")
    flat = list(program.init_scalars) + [x for v in program.init_vectors for x in v] + [
        x for m in program.init_matrices for r in m for x in r
    ]
    if any(not np.isfinite(x) for x in flat):
        errs.append("init image contains non-finite values")
    n_cadfs = len(program.cadfs)
    for fname, body in program.functions():
        in_cadf = fname != "get_action"
        for idx, instr in enumerate(body):
            errs.extend(_validate_instruction(instr, lay, f"{fname}[{idx}]", n_cadfs, in_cadf))
    return errs


# ---------------------------------------------------------------------------
# random generation


def random_instruction(layout: MemoryLayout, cfg: GenConfig, rng: np.random.Generator,
                       in_cadf: bool, n_cadfs: int) -> Instruction:
    """Sample one valid instruction uniformly over the allowed op set."""
    ops = [op for op in cfg.ops() if op != CALL_OPCODE]
    if not in_cadf and n_cadfs > 0 and (cfg.allowed_ops is None or CALL_OPCODE in cfg.allowed_ops):
        ops.append(CALL_OPCODE)
    op = int(ops[rng.integers(len(ops))])
    if op == CALL_OPCODE:
        callee = int(rng.integers(n_cadfs))
        ins = tuple(Address(b, int(rng.integers(layout.bank_size(b)))) for b in CALL_IN_BANKS)
        outs = tuple(Address(b, int(rng.integers(layout.bank_size(b)))) for b in CALL_OUT_BANKS)
        return Instruction(CALL_OPCODE, inputs=ins, callee=callee, outputs=outs)
    spec = OPS_BY_CODE[op]
    ins = tuple(Address(b, int(rng.integers(layout.bank_size(b)))) for b in spec.in_banks)
    out = None
    if spec.out_bank is not None:
        out = Address(spec.out_bank, int(rng.integers(layout.bank_size(spec.out_bank))))
    lo, hi = cfg.const_range
    consts = tuple(float(rng.uniform(lo, hi)) for _ in range(spec.n_consts))
    lidx = tuple(int(rng.integers(layout.idx_dim(kind))) for kind in spec.idx_dims)
    return Instruction(op, inputs=ins, output=out, literal_consts=consts, literal_indices=lidx)


def random_program(layout: MemoryLayout, cfg: GenConfig, rng: np.random.Generator) -> Program:
    """Sample a random valid program within the generation bounds."""
    n_cadfs = int(rng.integers(cfg.max_cadfs + 1)) if cfg.max_cadfs else 0
    lo, hi = cfg.const_range

    def body(in_cadf: bool) -> tuple:
        n = int(rng.integers(cfg.min_instructions, cfg.max_instructions + 1))
        return tuple(random_instruction(layout, cfg, rng, in_cadf, n_cadfs) for _ in range(n))

    cadfs = tuple(body(True) for _ in range(n_cadfs))
    main = body(False)
    prog = Program(
        layout=layout,
        init_scalars=tuple(float(x) for x in rng.uniform(lo, hi, layout.n_scalar)),
        init_vectors=tuple(tuple(float(x) for x in row) for row in rng.uniform(lo, hi, (layout.n_vector, layout.vec_dim))),
        init_matrices=tuple(
            tuple(tuple(float(x) for x in row) for row in mat)
            for mat in rng.uniform(lo, hi, (layout.n_matrix, layout.mat_dim, layout.mat_dim))
        ),
        get_action=main,
        cadfs=cadfs,
    )
    return prog
