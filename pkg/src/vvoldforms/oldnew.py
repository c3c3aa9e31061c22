"""Old/new splitting on truncated Fourier coefficient tables.

A table holds, for ``m`` basis forms ``F_1, ..., F_m``, the coefficients
``a_{n, gamma}(F_i)`` for ``n = 0..S`` and every element index ``gamma``.
All verdicts hold up to the truncation ``S`` supplied with the table.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence, Union

import numpy as np

from . import linalg
from .errors import ValidationError
from .fqm import FiniteQuadraticModule, Subgroup, from_even_lattice, from_jordan, quotient
from .lifts import LiftSystem, build_lift_system, kernel_down

FLOAT_TOL = 1e-9

Descriptor = Union[str, dict]


def module_from_descriptor(desc: Descriptor) -> FiniteQuadraticModule:
    """A Jordan symbol, ``{"gram": ...}`` for an even lattice, or explicit module data."""
    if isinstance(desc, str):
        return from_jordan(desc)
    if isinstance(desc, dict):
        if "gram" in desc and "orders" not in desc:
            return from_even_lattice(desc["gram"])
        if {"orders", "gram", "qvals"} <= set(desc):
            return FiniteQuadraticModule.from_dict(desc)
    raise ValidationError(f"unrecognized form descriptor {desc!r}")


def same_module(A: FiniteQuadraticModule, B: FiniteQuadraticModule) -> bool:
    return A.orders == B.orders and A.gram == B.gram and A.qvals == B.qvals


def _parse_coeff(x, float_mode: bool):
    if float_mode:
        return float(Fraction(x)) if isinstance(x, str) else float(x)
    if isinstance(x, float):
        raise ValidationError("float coefficient in exact mode")
    return Fraction(x)


@dataclass
class CoeffTable:
    """Coefficients as an array of shape ``(m, |D|, S + 1)``."""

    form: Descriptor
    weight: int
    level: int
    sturm: int
    coeffs: np.ndarray
    float_mode: bool = False
    module: FiniteQuadraticModule = field(default=None, repr=False)

    def __post_init__(self):
        if self.module is None:
            self.module = module_from_descriptor(self.form)
        D = self.module
        if self.level != D.level:
            raise ValidationError(f"table level {self.level} != level(D) = {D.level}")
        if self.sturm < 0:
            raise ValidationError("sturm must be nonnegative")
        if self.coeffs.ndim != 3 or self.coeffs.shape[1:] != (D.size, self.sturm + 1):
            raise ValidationError(
                f"coefficient array has shape {self.coeffs.shape}, expected (m, {D.size}, {self.sturm + 1})"
            )

    @property
    def m(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def from_forms(cls, form: Descriptor, weight: int, sturm: int, forms: Sequence, module=None, float_mode=False):
        """Build from per-form nested lists ``forms[i][gamma][n]``."""
        D = module or module_from_descriptor(form)
        dtype = float if float_mode else object
        arr = np.zeros((len(forms), D.size, sturm + 1), dtype=dtype)
        if not float_mode:
            arr[...] = Fraction(0)
        for i, F in enumerate(forms):
            for g, vec in enumerate(F):
                arr[i, g, :] = [_parse_coeff(x, float_mode) for x in vec]
        return cls(form, weight, D.level, sturm, arr, float_mode, D)

    @classmethod
    def from_json(cls, data: Union[str, dict]) -> "CoeffTable":
        if isinstance(data, str):
            data = json.loads(data)
        for key in ("form", "weight", "level", "sturm", "basis"):
            if key not in data:
                raise ValidationError(f"table JSON is missing {key!r}")
        D = module_from_descriptor(data["form"])
        S = int(data["sturm"])
        basis = data["basis"]
        float_mode = any(
            isinstance(x, float)
            for F in basis
            for vec in F.get("components", {}).values()
            for x in vec
        )
        dtype = float if float_mode else object
        arr = np.zeros((len(basis), D.size, S + 1), dtype=dtype)
        if not float_mode:
            arr[...] = Fraction(0)
        for i, F in enumerate(basis):
            for key, vec in F.get("components", {}).items():
                g = int(key)
                if not 0 <= g < D.size:
                    raise ValidationError(f"element index {g} out of range for |D| = {D.size}")
                if len(vec) != S + 1:
                    raise ValidationError(f"component {g} of form {i} has {len(vec)} coefficients, expected {S + 1}")
                arr[i, g, :] = [_parse_coeff(x, float_mode) for x in vec]
        return cls(data["form"], int(data["weight"]), int(data["level"]), S, arr, float_mode, D)

    @classmethod
    def load(cls, path) -> "CoeffTable":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        basis = []
        for i in range(self.m):
            comps = {}
            for g in range(self.module.size):
                vec = self.coeffs[i, g]
                if any(vec):
                    comps[str(g)] = [float(x) if self.float_mode else str(x) for x in vec]
            basis.append({"components": comps})
        return {"form": self.form, "weight": self.weight, "level": self.level, "sturm": self.sturm, "basis": basis}

    def combination(self, lam: Sequence) -> np.ndarray:
        """Coefficients of ``sum lam_i F_i`` as a ``(|D|, S + 1)`` array."""
        lam = np.array([float(x) if self.float_mode else Fraction(x) for x in lam], dtype=self.coeffs.dtype)
        if len(lam) != self.m:
            raise ValidationError(f"expected {self.m} coefficients, got {len(lam)}")
        return np.tensordot(lam, self.coeffs, axes=([0], [0]))


def _quotient_descriptor(q) -> dict:
    return q.module.to_dict()


def lift_table(G: CoeffTable, D: FiniteQuadraticModule, H: Subgroup) -> CoeffTable:
    """``F_gamma = G_{gamma + H}`` on ``H^perp`` and zero elsewhere."""
    q = quotient(D, H)
    if not same_module(G.module, q.module):
        raise ValidationError("the table's module is not the quotient D_H")
    proj = q.projection
    arr = np.zeros((G.m, D.size, G.sturm + 1), dtype=G.coeffs.dtype)
    if arr.dtype == object:
        arr[...] = Fraction(0)
    mask = proj >= 0
    arr[:, mask, :] = G.coeffs[:, proj[mask], :]
    return CoeffTable(D.to_dict(), G.weight, D.level, G.sturm, arr, G.float_mode, D)


def down_table(F: CoeffTable, H: Subgroup) -> CoeffTable:
    """Classwise sums ``G_beta = sum_{gamma in beta} F_gamma`` over ``D_H``."""
    D = F.module
    q = quotient(D, H)
    arr = np.zeros((F.m, q.module.size, F.sturm + 1), dtype=F.coeffs.dtype)
    if arr.dtype == object:
        arr[...] = Fraction(0)
    for c, members in enumerate(q.class_members()):
        if len(members):
            arr[:, c, :] = F.coeffs[:, members, :].sum(axis=1)
    return CoeffTable(_quotient_descriptor(q), F.weight, q.module.level, F.sturm, arr, F.float_mode, q.module)


# ---------------------------------------------------------------------------
# linear systems


def _nullspace(A: np.ndarray, ncols: int, float_mode: bool) -> list[list]:
    if A.shape[0] == 0:
        return [[Fraction(int(i == j)) if not float_mode else float(i == j) for i in range(ncols)] for j in range(ncols)]
    if float_mode:
        _, s, vt = np.linalg.svd(A.astype(float))
        tol = FLOAT_TOL * max(1.0, s[0] if len(s) else 0.0)
        rank = int(np.sum(s > tol))
        return [list(map(float, v)) for v in vt[rank:]]
    return [[Fraction(x) for x in v] for v in linalg.nullspace(A.tolist(), ncols)]


def _system_for(table: CoeffTable, subgroups: Sequence[Subgroup], include_trivial: bool) -> LiftSystem:
    return build_lift_system(table.module, subgroups, include_trivial=include_trivial)


def old_equations(table: CoeffTable, kernel: Sequence[Sequence]) -> np.ndarray:
    """Rows ``(v, n)`` with entries ``sum_gamma v_gamma a_{n,gamma}(F_i)``."""
    if not kernel:
        return np.zeros((0, table.m), dtype=table.coeffs.dtype)
    K = np.array([[Fraction(x) for x in v] for v in kernel], dtype=object)
    if table.float_mode:
        K = K.astype(float)
    # (k, |D|) x (m, |D|, S+1) -> (k, m, S+1) -> rows (k, S+1) x m
    E = np.einsum("kg,mgs->ksm", K, table.coeffs)
    return E.reshape(-1, table.m)


def new_equations(table: CoeffTable, system: LiftSystem) -> np.ndarray:
    """Rows ``(class, n)`` with entries ``sum_{gamma in class} a_{n,gamma}(F_i)``."""
    if not system.subgroups:
        return np.zeros((0, table.m), dtype=table.coeffs.dtype)
    down = system.down_matrix()
    Dm = down.astype(float) if table.float_mode else down.astype(object)
    E = np.einsum("rg,mgs->rsm", Dm, table.coeffs)
    return E.reshape(-1, table.m)


def _is_zero(x: np.ndarray, float_mode: bool) -> bool:
    if float_mode:
        return bool(np.all(np.abs(x.astype(float)) <= FLOAT_TOL))
    return not np.any(x != 0)


def is_oldform(table: CoeffTable, lam: Sequence, subgroups: Sequence[Subgroup], include_trivial: bool = False) -> bool:
    """``ker(down)`` annihilates the coefficients of ``sum lam_i F_i`` for ``n <= S``."""
    system = _system_for(table, subgroups, include_trivial)
    kernel = kernel_down(system)
    if not kernel:
        return True
    F = table.combination(lam)
    K = np.array(kernel, dtype=object)
    if table.float_mode:
        K = K.astype(float)
    return _is_zero(K @ F, table.float_mode)


def oldspace_basis(table: CoeffTable, subgroups: Sequence[Subgroup], include_trivial: bool = False) -> list[list]:
    system = _system_for(table, subgroups, include_trivial)
    A = old_equations(table, kernel_down(system))
    return _nullspace(A, table.m, table.float_mode)


def newspace_basis(table: CoeffTable, subgroups: Sequence[Subgroup], include_trivial: bool = False) -> list[list]:
    system = _system_for(table, subgroups, include_trivial)
    A = new_equations(table, system)
    return _nullspace(A, table.m, table.float_mode)


def satisfies_matrix_criterion(table: CoeffTable, lam: Sequence, system: LiftSystem) -> bool:
    """``F^T up = 0`` for ``F = sum lam_i F_i``, i.e. ``image(up)`` lies in ``ker(F~)``."""
    F = table.combination(lam)
    up = system.up_matrix()
    up = up.astype(float) if table.float_mode else up.astype(object)
    return _is_zero(F.T @ up, table.float_mode)


def _fmt(v, float_mode: bool) -> list:
    return [float(x) if float_mode else str(Fraction(x)) for x in v]


def split(table: CoeffTable, subgroups: Sequence[Subgroup], include_trivial: bool = False) -> dict[str, Any]:
    """Old and new solution spaces; they are reported independently."""
    system = _system_for(table, subgroups, include_trivial)
    kernel = kernel_down(system)
    old = _nullspace(old_equations(table, kernel), table.m, table.float_mode)
    new = _nullspace(new_equations(table, system), table.m, table.float_mode)
    out = {
        "old_basis": [_fmt(v, table.float_mode) for v in old],
        "new_basis": [_fmt(v, table.float_mode) for v in new],
        "kernel_dim": len(kernel),
        "truncated_at": table.sturm,
    }
    if table.float_mode:
        out["float_mode"] = True
        out["tolerance"] = FLOAT_TOL
    return out
