"""Mutation operator suite and subroutine-swap crossover.

One mutation operator is applied per child, sampled proportional to the
operator weights (delete runs at twice the insert weight, so evolution leans
toward shorter programs). Structural operators target one uniformly chosen
function (the action function or a cadf body); constant mutation perturbs the
episode-start memory image only. Operators that cannot apply to the sampled
target (e.g. delete on an empty body) are resampled.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .ops import CALL_OPCODE, OPS_BY_CODE
from .program import (
    GenConfig,
    Instruction,
    MAX_CADFS,
    Program,
    random_instruction,
)

OPERATORS = (
    "insert",
    "delete",
    "randomize_instruction",
    "randomize_function",
    "randomize_constants",
    "randomize_parameter",
    "randomize_dim_indices",
)


@dataclass(frozen=True)
class MutationWeights:
    insert: float = 0.5
    delete: float = 1.0
    randomize_instruction: float = 1.0
    randomize_function: float = 0.1
    randomize_constants: float = 0.5
    randomize_parameter: float = 0.5
    randomize_dim_indices: float = 0.5
    fraction: float = 0.2         # share of constants / dim indices touched
    const_noise_std: float = 0.05

    def as_vector(self) -> np.ndarray:
        w = np.array([getattr(self, name) for name in OPERATORS])
        if (w < 0).any() or w.sum() <= 0:
            raise ValueError("weights must be non-negative with at least one positive")
        return w


@dataclass(frozen=True)
class MutationInfo:
    operator: str
    target: str          # "get_action", "cadf<k>" or "init"
    resamples: int


def _has_literals(instr: Instruction) -> bool:
    return bool(instr.literal_consts) or bool(instr.literal_indices)


def _set_body(program: Program, target: int, body: tuple) -> Program:
    """target -1 is the action function, k >= 0 the k-th cadf."""
    if target < 0:
        return replace(program, get_action=body)
    cadfs = list(program.cadfs)
    cadfs[target] = body
    return replace(program, cadfs=tuple(cadfs))


def _materialize_cadfs(program: Program, callee: int) -> Program:
    if callee < len(program.cadfs):
        return program
    cadfs = program.cadfs + ((),) * (callee + 1 - len(program.cadfs))
    return replace(program, cadfs=cadfs)


def mutate_with_info(parent: Program, weights: MutationWeights, rng: np.random.Generator,
                     gen_config: Optional[GenConfig] = None) -> tuple:
    """Apply one sampled mutation operator; returns (child, MutationInfo)."""
    cfg = gen_config or GenConfig()
    w = weights.as_vector()
    p = w / w.sum()
    resamples = 0
    while True:
        op = OPERATORS[int(rng.choice(len(OPERATORS), p=p))]

        if op == "randomize_constants":
            child = _randomize_constants(parent, weights, rng)
            return child, MutationInfo(op, "init", resamples)

        # structural operators target one function uniformly
        target = int(rng.integers(len(parent.cadfs) + 1)) - 1
        body = parent.get_action if target < 0 else parent.cadfs[target]
        tname = "get_action" if target < 0 else f"cadf{target}"
        in_cadf = target >= 0
        n_cadfs = cfg.max_cadfs if not in_cadf else len(parent.cadfs)

        if op == "insert":
            if cfg.max_body_len is not None and len(body) >= cfg.max_body_len:
                resamples += 1
                continue
            instr = random_instruction(parent.layout, cfg, rng, in_cadf,
                                       n_cadfs if not in_cadf else len(parent.cadfs))
            pos = int(rng.integers(len(body) + 1))
            child = _set_body(parent, target, body[:pos] + (instr,) + body[pos:])
            if instr.is_call:
                child = _materialize_cadfs(child, instr.callee)
            return child, MutationInfo(op, tname, resamples)

        if op == "delete":
            if not body:
                resamples += 1
                continue
            pos = int(rng.integers(len(body)))
            child = _set_body(parent, target, body[:pos] + body[pos + 1:])
            return child, MutationInfo(op, tname, resamples)

        if op == "randomize_instruction":
            if not body:
                resamples += 1
                continue
            pos = int(rng.integers(len(body)))
            instr = random_instruction(parent.layout, cfg, rng, in_cadf,
                                       n_cadfs if not in_cadf else len(parent.cadfs))
            child = _set_body(parent, target, body[:pos] + (instr,) + body[pos + 1:])
            if instr.is_call:
                child = _materialize_cadfs(child, instr.callee)
            return child, MutationInfo(op, tname, resamples)

        if op == "randomize_function":
            if len(body) < 2:
                resamples += 1
                continue
            perm = rng.permutation(len(body))
            child = _set_body(parent, target, tuple(body[i] for i in perm))
            return child, MutationInfo(op, tname, resamples)

        if op == "randomize_parameter":
            cands = [i for i, ins in enumerate(body) if _has_literals(ins)]
            if not cands:
                resamples += 1
                continue
            pos = cands[int(rng.integers(len(cands)))]
            child = _set_body(parent, target,
                              body[:pos] + (_resample_literal(body[pos], parent, cfg, rng),)
                              + body[pos + 1:])
            return child, MutationInfo(op, tname, resamples)

        if op == "randomize_dim_indices":
            cands = [i for i, ins in enumerate(body) if ins.literal_indices]
            if not cands:
                resamples += 1
                continue
            pos = cands[int(rng.integers(len(cands)))]
            child = _set_body(parent, target,
                              body[:pos] + (_randomize_indices(body[pos], parent, weights, rng),)
                              + body[pos + 1:])
            return child, MutationInfo(op, tname, resamples)


def mutate(parent: Program, weights: MutationWeights, rng: np.random.Generator,
           gen_config: Optional[GenConfig] = None) -> Program:
    child, _ = mutate_with_info(parent, weights, rng, gen_config)
    return child


def _randomize_constants(parent: Program, weights: MutationWeights,
                         rng: np.random.Generator) -> Program:
    s, v, m = parent.init_arrays()
    flat = np.concatenate([s, v.ravel(), m.ravel()])
    n = max(1, round(weights.fraction * flat.size))
    picks = rng.choice(flat.size, size=n, replace=False)
    flat[picks] += rng.normal(0.0, weights.const_noise_std, size=n)
    ns = s.size
    nv = v.size
    return parent.with_init(flat[:ns], flat[ns:ns + nv].reshape(v.shape),
                            flat[ns + nv:].reshape(m.shape))


def _resample_literal(instr: Instruction, program: Program, cfg: GenConfig,
                      rng: np.random.Generator) -> Instruction:
    """Resample one literal (constant or dim index) from its generation range."""
    spec = OPS_BY_CODE[instr.op_id]
    n_lit = len(instr.literal_consts) + len(instr.literal_indices)
    pick = int(rng.integers(n_lit))
    if pick < len(instr.literal_consts):
        consts = list(instr.literal_consts)
        consts[pick] = float(rng.uniform(*cfg.const_range))
        return replace(instr, literal_consts=tuple(consts))
    j = pick - len(instr.literal_consts)
    lidx = list(instr.literal_indices)
    dim = program.layout.idx_dim(spec.idx_dims[j])
    lidx[j] = int(rng.integers(dim))
    return replace(instr, literal_indices=tuple(lidx))


def _randomize_indices(instr: Instruction, program: Program, weights: MutationWeights,
                       rng: np.random.Generator) -> Instruction:
    spec = OPS_BY_CODE[instr.op_id]
    k = len(instr.literal_indices)
    n = max(1, round(weights.fraction * k))
    picks = rng.choice(k, size=min(n, k), replace=False)
    lidx = list(instr.literal_indices)
    for j in picks:
        lidx[j] = int(rng.integers(program.layout.idx_dim(spec.idx_dims[j])))
    return replace(instr, literal_indices=tuple(lidx))


def crossover(parent_a: Program, parent_b: Program, rng: np.random.Generator) -> Program:
    """Swap one uniformly chosen cadf of parent_a for one of parent_b's.

    If either parent has no cadfs, one uniformly selected parent is returned
    unmodified.
    """
    if parent_a.layout != parent_b.layout:
        raise ValueError("crossover parents must share a memory layout")
    if not parent_a.cadfs or not parent_b.cadfs:
        return parent_a if rng.integers(2) == 0 else parent_b
    i = int(rng.integers(len(parent_a.cadfs)))
    j = int(rng.integers(len(parent_b.cadfs)))
    cadfs = list(parent_a.cadfs)
    cadfs[i] = parent_b.cadfs[j]
    return replace(parent_a, cadfs=tuple(cadfs))
