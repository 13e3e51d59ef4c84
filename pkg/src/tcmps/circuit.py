"""Nearest-neighbour QFT schedules and their noisy variants.

The QFT is laid out as a SWAP network: in round ``t`` the qubit holding
target ``t`` sits on site 0, receives a Hadamard, and then travels down the
chain, picking up one controlled phase from each remaining qubit and swapping
past it. Every gate takes one time slot, so an N-qubit schedule has
``N + N(N-1) = N**2`` slots. The travelling qubits end in reversed order,
which is exactly the output bit order of the textbook QFT, so the schedule
maps ``|j>`` to ``M**-0.5 * sum_n exp(2 pi i j n / M) |n>`` with no extra
permutation (site 0 is the most significant bit on both sides).
"""

from __future__ import annotations

import cmath
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .mps import MPS
from .noise import NoiseTrajectory, rz_angle, rz_matrix

GATE_KINDS = ("H", "CRZ", "SWAP", "RZ")

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class GateOp:
    """One gate in a schedule.

    ``CRZ`` is the controlled phase ``diag(1, 1, 1, exp(i angle))``, symmetric
    in its two sites. ``RZ`` is ``exp(-i angle Z / 2)``.
    """

    kind: str
    sites: tuple[int, ...]
    time_slot: int
    angle: float | None = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ScheduleError(f"unknown gate kind {self.kind!r}")
        n = 2 if self.kind in ("CRZ", "SWAP") else 1
        if len(self.sites) != n:
            raise ScheduleError(f"{self.kind} acts on {n} site(s), got {self.sites}")
        if n == 2 and self.sites[1] != self.sites[0] + 1:
            raise ScheduleError(f"two-site gates must act on (i, i+1), got {self.sites}")
        if self.time_slot < 0:
            raise ScheduleError("time_slot must be >= 0")

    def matrix(self) -> np.ndarray:
        if self.kind == "H":
            return _H
        if self.kind == "SWAP":
            return _SWAP
        if self.kind == "RZ":
            return rz_matrix(self.angle)
        return np.diag([1, 1, 1, np.exp(1j * self.angle)]).astype(complex)

    def inverse(self, depth: int) -> "GateOp":
        angle = None if self.angle is None else -self.angle
        return GateOp(self.kind, self.sites, depth - 1 - self.time_slot, angle)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "sites": list(self.sites), "slot": self.time_slot,
                "angle": self.angle}


@dataclass(frozen=True)
class Schedule:
    """Time-ordered gates on ``n_qubits`` sites.

    ``noise_slots`` lists ``(qubit, slot)`` points; a dephasing gate for slot
    ``t`` acts after every gate of slot ``t``.
    """

    n_qubits: int
    gates: tuple[GateOp, ...]
    depth: int
    noise_slots: tuple[tuple[int, int], ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        object.__setattr__(self, "noise_slots", tuple(tuple(s) for s in self.noise_slots))
        for g in self.gates:
            if max(g.sites) >= self.n_qubits:
                raise ScheduleError(f"gate {g} outside {self.n_qubits} sites")
            if g.time_slot >= self.depth:
                raise ScheduleError(f"gate {g} beyond depth {self.depth}")

    @property
    def two_qubit_count(self) -> int:
        return sum(len(g.sites) == 2 for g in self.gates)

    def to_json(self) -> str:
        return json.dumps({"n_qubits": self.n_qubits, "depth": self.depth,
                           "noise_slots": [list(s) for s in self.noise_slots],
                           "gates": [g.to_dict() for g in self.gates]}, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Schedule":
        d = json.loads(text)
        gates = [GateOp(g["kind"], tuple(g["sites"]), g["slot"], g["angle"]) for g in d["gates"]]
        return cls(d["n_qubits"], tuple(gates), d["depth"],
                   tuple(tuple(s) for s in d.get("noise_slots", [])))


def qft_depth(n: int) -> int:
    return n * n


def qft_schedule(n: int) -> Schedule:
    """SWAP-network QFT on ``n`` sites, one gate per time slot."""
    if n < 1:
        raise ScheduleError("QFT needs at least one qubit")
    gates = []
    slot = 0
    for t in range(n):
        gates.append(GateOp("H", (0,), slot))
        slot += 1
        # travelling target sits on site k-1, partner (target + k) on site k
        for k in range(1, n - t):
            gates.append(GateOp("CRZ", (k - 1, k), slot, 2 * math.pi / 2 ** (k + 1)))
            gates.append(GateOp("SWAP", (k - 1, k), slot + 1))
            slot += 2
    assert slot == qft_depth(n)
    return Schedule(n, tuple(gates), slot, meta={"circuit": "qft"})


def inverse_schedule(s: Schedule) -> Schedule:
    """Adjoint: reversed gate order, conjugated gates, mirrored slots."""
    gates = tuple(g.inverse(s.depth) for g in reversed(s.gates))
    slots = tuple(sorted((q, s.depth - 1 - t) for q, t in s.noise_slots))
    return Schedule(s.n_qubits, gates, s.depth, slots, meta=dict(s.meta, inverse=True))


def place_noise_slots(s: Schedule) -> Schedule:
    """One dephasing slot per qubit per time step (busy or idle)."""
    slots = tuple((q, t) for t in range(s.depth) for q in range(s.n_qubits))
    return replace(s, noise_slots=slots)


def bind_noise(s: Schedule, traj: NoiseTrajectory | np.ndarray, angle_convention: str = "half",
               slot_offset: int = 0) -> Schedule:
    """Insert ``RZ`` gates at every noise slot from sampled angles.

    Slot ``t`` on qubit ``q`` uses ``angles[q, t + slot_offset]``.
    """
    angles = traj.angles if isinstance(traj, NoiseTrajectory) else np.asarray(traj, dtype=float)
    if not s.noise_slots:
        s = place_noise_slots(s)
    if angles.ndim != 2 or angles.shape[0] < s.n_qubits or angles.shape[1] < s.depth + slot_offset:
        raise ScheduleError(f"trajectory shape {angles.shape} does not cover "
                            f"{s.n_qubits} qubits x {s.depth + slot_offset} slots")
    by_slot: dict[int, list[int]] = {}
    for q, t in s.noise_slots:
        by_slot.setdefault(t, []).append(q)
    gates = []
    gi = 0
    ordered = sorted(s.gates, key=lambda g: g.time_slot)
    for t in range(s.depth):
        while gi < len(ordered) and ordered[gi].time_slot == t:
            gates.append(ordered[gi])
            gi += 1
        for q in sorted(by_slot.get(t, ())):
            gates.append(GateOp("RZ", (q,), t, rz_angle(float(angles[q, t + slot_offset]), angle_convention)))
    return Schedule(s.n_qubits, tuple(gates), s.depth, (), meta=dict(s.meta, noisy=True))


def compose(first: Schedule, second: Schedule) -> Schedule:
    """Run ``first`` then ``second``; slots of ``second`` are shifted."""
    if first.n_qubits != second.n_qubits:
        raise ScheduleError("qubit count mismatch")
    shifted = tuple(replace(g, time_slot=g.time_slot + first.depth) for g in second.gates)
    slots = first.noise_slots + tuple((q, t + first.depth) for q, t in second.noise_slots)
    return Schedule(first.n_qubits, first.gates + shifted, first.depth + second.depth, slots)


_CODES = {"RZ": kernels.RZ, "H": kernels.H, "CRZ": kernels.CRZ, "SWAP": kernels.SWAP}


def gate_arrays(schedule: Schedule) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Encode gates as ``(codes, left sites, angles)`` arrays for the kernels."""
    codes = np.array([_CODES[g.kind] for g in schedule.gates], dtype=np.int8)
    sites = np.array([g.sites[0] for g in schedule.gates], dtype=np.int32)
    angles = np.array([0.0 if g.angle is None else g.angle for g in schedule.gates])
    return codes, sites, angles


def noisy_gate_arrays(s: Schedule, angles: np.ndarray, angle_convention: str = "half",
                      slot_offset: int = 0) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Array form of ``bind_noise(s, angles)`` with one slot per qubit per step.

    Avoids building gate objects, which dominates the cost for long circuits.
    """
    n, depth = s.n_qubits, s.depth
    angles = np.asarray(angles, dtype=float)
    if angles.ndim != 2 or angles.shape[0] < n or angles.shape[1] < depth + slot_offset:
        raise ScheduleError(f"trajectory shape {angles.shape} does not cover "
                            f"{n} qubits x {depth + slot_offset} slots")
    codes, sites, args = gate_arrays(s)
    slots = np.array([g.time_slot for g in s.gates], dtype=np.int64)
    order = np.argsort(slots, kind="stable")
    codes, sites, args, slots = codes[order], sites[order], args[order], slots[order]
    # gates of slot t come after all gates of earlier slots and their n noise gates
    total = len(codes) + n * depth
    pos = np.arange(len(codes)) + n * slots
    through = np.searchsorted(slots, np.arange(depth), side="right")
    noise_pos = (through + n * np.arange(depth))[None, :] + np.arange(n)[:, None]
    out_c = np.empty(total, dtype=np.int8)
    out_s = np.empty(total, dtype=np.int32)
    out_a = np.empty(total)
    out_c[pos], out_s[pos], out_a[pos] = codes, sites, args
    out_c[noise_pos] = kernels.RZ
    out_s[noise_pos] = np.arange(n, dtype=np.int32)[:, None]
    out_a[noise_pos] = rz_angle(1.0, angle_convention) * angles[:n, slot_offset:slot_offset + depth]
    return out_c, out_s, out_a


def run_arrays(codes, sites, angles, state: MPS) -> MPS:
    """Apply an encoded gate list to ``state`` in place."""
    kinds, bsite, mats, phase = kernels.fuse_gates(
        np.ascontiguousarray(codes, dtype=np.int8), np.ascontiguousarray(sites, dtype=np.int32),
        np.ascontiguousarray(angles, dtype=float), state.n_sites)
    for k, site, m in zip(kinds.tolist(), bsite.tolist(), mats):
        if k == 2:
            state.apply_2q(site, m)
        else:
            state.apply_1q(site, m[:2, :2])
    for site, ph in enumerate(phase.tolist()):
        if ph:
            state.apply_diag_1q(site, cmath.exp(-0.5j * ph), cmath.exp(0.5j * ph))
    return state


def simulate(schedule: Schedule, state: MPS) -> MPS:
    """Apply a schedule to an MPS in place.

    Runs of gates that touch only one adjacent pair are multiplied into a
    single 4x4 before one SVD, and dephasing angles on a site are summed
    until the next gate touches it; both rewrites are exact.
    """
    if state.n_sites != schedule.n_qubits:
        raise ScheduleError(f"state has {state.n_sites} sites, schedule {schedule.n_qubits}")
    return run_arrays(*gate_arrays(schedule), state)


def simulate_noisy(schedule: Schedule, angles: np.ndarray, state: MPS,
                   angle_convention: str = "half", slot_offset: int = 0) -> MPS:
    """Same result as ``simulate(bind_noise(schedule, angles), state)``."""
    if state.n_sites != schedule.n_qubits:
        raise ScheduleError(f"state has {state.n_sites} sites, schedule {schedule.n_qubits}")
    return run_arrays(*noisy_gate_arrays(schedule, angles, angle_convention, slot_offset), state)
