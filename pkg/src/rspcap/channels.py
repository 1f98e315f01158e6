"""Process matrices for single-qubit operations.

A process chi acts in the operator basis E_0 = I, E_1 = X, E_2 = -iY,
E_3 = Z.  Tomography assembles chi from the six conditional outputs on the
Pauli eigenstates by sandwiching a 2x2-block center matrix between
Lambda = [[I, X], [X, -I]] / 2 on both sides.
"""

from __future__ import annotations

import json

import numpy as np

from .errors import (
    DomainError,
    InconsistentTomographyError,
    UnsupportedComparisonError,
    ValidationError,
)
from .states import (
    DensityMatrix,
    I2,
    SX,
    SY,
    SZ,
    _as_matrix,
    density_to_bloch,
    hermitian_eigen,
    min_eigenvalue,
    pauli_eigenstate,
)

OPERATOR_BASIS = (I2, SX, -1j * SY, SZ)
OPERATOR_BASIS_LABELS = ("I", "X", "-iY", "Z")

LAMBDA_SANDWICH = 0.5 * np.block([[I2, SX], [SX, -I2]])


class UnitaryGate:
    """2x2 unitary, validated to U+ U = I within 1e-12."""

    __slots__ = ("matrix",)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (2, 2):
            raise DomainError("unitary must be 2x2")
        if np.max(np.abs(m.conj().T @ m - I2)) > 1e-12:
            raise ValidationError("matrix is not unitary within 1e-12")
        m.setflags(write=False)
        self.matrix = m

    def apply(self, rho):
        m = _as_matrix(rho)
        return self.matrix @ m @ self.matrix.conj().T

    def __repr__(self):
        return f"UnitaryGate({np.round(self.matrix, 6)!r})"


class ProcessMatrix:
    """4x4 Hermitian PSD chi matrix, normalized when its trace is one."""

    __slots__ = ("chi", "normalized", "pre_projection")

    def __init__(self, chi, tol=1e-9, allow_supernormalized=False, pre_projection=None):
        m = np.array(chi, dtype=complex)
        if m.shape != (4, 4):
            raise DomainError("process matrix must be 4x4")
        if np.max(np.abs(m - m.conj().T)) > 1e-10:
            raise ValidationError("process matrix is not Hermitian within 1e-10")
        m = (m + m.conj().T) / 2.0
        if min_eigenvalue(m) < -max(tol, 1e-9):
            raise ValidationError("process matrix has a negative eigenvalue")
        tr = float(np.trace(m).real)
        if tr > 1.0 + max(tol, 1e-9) and not allow_supernormalized:
            raise ValidationError(f"process matrix trace {tr:.8f} exceeds 1")
        m.setflags(write=False)
        self.chi = m
        self.normalized = bool(abs(tr - 1.0) <= max(tol, 1e-9))
        self.pre_projection = pre_projection

    @property
    def trace(self):
        return float(np.trace(self.chi).real)

    def normalize(self):
        return ProcessMatrix(self.chi / self.trace)

    def __repr__(self):
        return f"ProcessMatrix(trace={self.trace:.6g}, normalized={self.normalized})"


def rotation_unitary(phi):
    """Equatorial rotation R(phi) mapping the poles onto |0> +/- e^{i phi}|1>."""
    if not np.isfinite(phi):
        raise DomainError("rotation angle must be finite")
    e = np.exp(1j * phi)
    m = np.array([[1, 1], [e, -e]], dtype=complex) / np.sqrt(2)
    return UnitaryGate(m)


def _center_from_four(r1, r4, o01, o02):
    """Center block matrix from E(|0>_3), E(|1>_3), E(|0>_1), E(|0>_2)."""
    ei = r1 + r4
    top = o01 + 1j * o02 - (1 + 1j) / 2 * ei
    bot = o01 - 1j * o02 - (1 - 1j) / 2 * ei
    return np.block([[r1, top], [bot, r4]])


def _symmetrized_outputs(outputs):
    """Recombine six conditional outputs so every count contributes.

    The unit-input response E(I) is in principle the same for all three
    measurement bases, but sampled data break the degeneracy; averaging over
    the bases before rebuilding the per-basis outputs keeps the construction
    unbiased.  Self-consistent outputs are returned unchanged.
    """
    ei = sum(outputs[(n, m)] for n in (0, 1) for m in (1, 2, 3)) / 3.0
    rebuilt = {}
    for m in (1, 2, 3):
        diff = outputs[(0, m)] - outputs[(1, m)]
        rebuilt[(0, m)] = (ei + diff) / 2.0
        rebuilt[(1, m)] = (ei - diff) / 2.0
    return rebuilt


def chi_from_basis_outputs(outputs, tol=1e-8):
    """Assemble the chi matrix from the six conditional outputs E(|n>_m <n|).

    ``outputs`` maps (n, m) pairs to 2x2 Hermitian matrices, possibly
    subnormalized.  A slightly indefinite result (from sampled data) is
    clipped onto the PSD cone; the unclipped matrix is retained on the
    returned ProcessMatrix as ``pre_projection``.
    """
    outs = {}
    for m in (1, 2, 3):
        for n in (0, 1):
            if (n, m) not in outputs:
                raise DomainError(f"missing tomography output for input (n={n}, m={m})")
            o = _as_matrix(outputs[(n, m)])
            if o.shape != (2, 2):
                raise DomainError("tomography outputs must be single-qubit matrices")
            outs[(n, m)] = o
    outs = _symmetrized_outputs(outs)
    C = _center_from_four(outs[(0, 3)], outs[(1, 3)], outs[(0, 1)], outs[(0, 2)])
    chi = LAMBDA_SANDWICH @ C @ LAMBDA_SANDWICH
    if np.max(np.abs(chi - chi.conj().T)) > tol:
        raise InconsistentTomographyError(
            "basis outputs produce a non-Hermitian process matrix")
    chi = (chi + chi.conj().T) / 2.0
    w, v = hermitian_eigen(chi)
    if w[-1] < -1e-12:
        clipped = (v * np.clip(w, 0.0, None)) @ v.conj().T
        return ProcessMatrix(clipped, allow_supernormalized=True, pre_projection=chi)
    return ProcessMatrix(chi, allow_supernormalized=True)


def ideal_rsp_chi(U):
    """Rank-1 process matrix of the unitary conjugation rho -> U rho U+."""
    if not isinstance(U, UnitaryGate):
        U = UnitaryGate(U)
    outputs = {(n, m): U.apply(pauli_eigenstate(n, m)) for n in (0, 1) for m in (1, 2, 3)}
    return chi_from_basis_outputs(outputs)


def apply_chi(chi, rho):
    """Apply a process matrix: sum_mm' chi_mm' E_m rho E_m'+."""
    c = chi.chi if isinstance(chi, ProcessMatrix) else np.asarray(chi, dtype=complex)
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise DomainError("apply_chi expects a single-qubit state")
    out = np.zeros((2, 2), dtype=complex)
    for a in range(4):
        Em_rho = OPERATOR_BASIS[a] @ m
        for b in range(4):
            out += c[a, b] * Em_rho @ OPERATOR_BASIS[b].conj().T
    out = (out + out.conj().T) / 2.0
    tw = float(np.trace(out).real)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, trace_weight=tw, tol=1e-8)
    return out


def apply_by_decomposition(outputs, rho):
    """Output state rebuilt directly from the six basis outputs.

    Decomposes ``rho`` into its Bloch components and recombines the measured
    responses: (E(I) + sum_m s_m E(sigma_m)) / 2 with E(I) averaged over the
    three bases.  Agrees exactly with routing through chi_from_basis_outputs.
    """
    outs = {k: _as_matrix(v) for k, v in outputs.items()}
    ei = sum(outs[(n, m)] for n in (0, 1) for m in (1, 2, 3)) / 3.0
    s = density_to_bloch(rho).array
    total = ei.astype(complex)
    for m in (1, 2, 3):
        total = total + s[m - 1] * (outs[(0, m)] - outs[(1, m)])
    out = total / 2.0
    out = (out + out.conj().T) / 2.0
    if isinstance(rho, DensityMatrix):
        return DensityMatrix(out, trace_weight=float(np.trace(out).real), tol=1e-8)
    return out


def compose(chi_second, chi_first):
    """Process matrix of 'apply chi_first, then chi_second'."""
    outputs = {}
    for m in (1, 2, 3):
        for n in (0, 1):
            mid = apply_chi(chi_first, pauli_eigenstate(n, m).matrix)
            outputs[(n, m)] = apply_chi(chi_second, mid)
    return chi_from_basis_outputs(outputs)


def process_fidelity(chi_a, chi_b):
    """tr(chi_a chi_b) between a normalized process and a rank-1 target.

    The overlap formula is a fidelity only when one argument is a pure
    (unitary) process; both-mixed comparisons are rejected.
    """
    a = chi_a.chi if isinstance(chi_a, ProcessMatrix) else np.asarray(chi_a, dtype=complex)
    b = chi_b.chi if isinstance(chi_b, ProcessMatrix) else np.asarray(chi_b, dtype=complex)
    for label, c in (("first", a), ("second", b)):
        if abs(np.trace(c).real - 1.0) > 1e-6:
            raise DomainError(f"{label} argument must be normalized")
    def rank_one(c):
        w, _ = hermitian_eigen(c)
        return w[0] > 1.0 - 1e-6
    if not (rank_one(a) or rank_one(b)):
        raise UnsupportedComparisonError(
            "process_fidelity needs at least one rank-1 (unitary) argument")
    val = np.trace(a @ b)
    if abs(val.imag) > 1e-10:
        raise ValidationError("process overlap has a significant imaginary part")
    return float(val.real)


def avg_state_fidelity_from_process(f_process):
    """Average state fidelity (2 F + 1) / 3 from a process fidelity."""
    if not 0.0 <= f_process <= 1.0 + 1e-12:
        raise DomainError(f"process fidelity {f_process} outside [0, 1]")
    return (2.0 * min(f_process, 1.0) + 1.0) / 3.0


# --- JSON interchange ---------------------------------------------------------

def process_to_json_dict(chi):
    c = chi.chi if isinstance(chi, ProcessMatrix) else np.asarray(chi, dtype=complex)
    normalized = abs(np.trace(c).real - 1.0) <= 1e-9
    return {
        "basis": list(OPERATOR_BASIS_LABELS),
        "re": c.real.tolist(),
        "im": c.imag.tolist(),
        "normalized": bool(normalized),
    }


def save_process_json(chi, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(process_to_json_dict(chi), fh, indent=1)
        fh.write("\n")


def load_process_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read process file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"process file is not valid JSON: {exc}") from exc
    try:
        if list(doc["basis"]) != list(OPERATOR_BASIS_LABELS):
            raise ValidationError(f"unsupported operator basis {doc['basis']}")
        m = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed process document: {exc}") from exc
    return ProcessMatrix(m, tol=1e-6)
