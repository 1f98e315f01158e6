"""Quantum-state carriers and the dense Hermitian linear algebra they need.

Single- and two-qubit density matrices are stored as plain complex ndarrays
wrapped in :class:`DensityMatrix`, which enforces Hermiticity, positivity and
the declared trace on construction.  Two-qubit states use A (x) B ordering with
A as the left (slow) index, so ``|01>`` means A=0, B=1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError, ValidationError

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)

HERMITICITY_TOL = 1e-10
PSD_TOL = 1e-10
SAMPLED_TOL = 1e-6


def _as_matrix(rho):
    """Accept a DensityMatrix or a bare ndarray and return the ndarray."""
    if isinstance(rho, DensityMatrix):
        return rho.matrix
    return np.asarray(rho, dtype=complex)


def is_hermitian(M, tol=HERMITICITY_TOL):
    M = np.asarray(M)
    return bool(np.all(np.isfinite(M.view(float))) and np.max(np.abs(M - M.conj().T)) <= tol)


def hermitian_eigen(M, tol=1e-8):
    """Eigendecomposition of a Hermitian matrix by the cyclic Jacobi method.

    Returns ``(eigenvalues, eigenvectors)`` with eigenvalues sorted in
    descending order and eigenvectors as the corresponding columns, so that
    ``M @ v[:, i] == w[i] * v[:, i]`` within 1e-9.

    Raises
    ------
    DomainError
        If ``M`` is not Hermitian within ``tol``.
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if not is_hermitian(M, tol * scale):
        raise DomainError("matrix is not Hermitian within tolerance")

    d = M.shape[0]
    A = (M + M.conj().T) / 2.0
    V = np.eye(d, dtype=complex)
    if d == 1:
        return np.array([A[0, 0].real]), V

    for _ in range(100):
        off = 0.0
        for p in range(d - 1):
            row = np.abs(A[p, p + 1:])
            if row.size:
                off = max(off, float(row.max()))
        if off <= 1e-14 * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                b = A[p, q]
                ab = abs(b)
                if ab <= 1e-16 * scale:
                    continue
                phase = b / ab
                tau = (A[q, q].real - A[p, p].real) / (2.0 * ab)
                t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0 else 1.0
                c = 1.0 / np.hypot(1.0, t)
                s = t * c
                # unitary acting on the (p, q) plane: columns mix as
                # col_p' = c*col_p - s*conj(phase)*col_q ; col_q' = s*phase*col_p + c*col_q
                for X in (A, V):
                    cp = X[:, p].copy()
                    cq = X[:, q].copy()
                    X[:, p] = c * cp - s * np.conj(phase) * cq
                    X[:, q] = s * phase * cp + c * cq
                rp = A[p, :].copy()
                rq = A[q, :].copy()
                A[p, :] = c * rp - s * phase * rq
                A[q, :] = s * np.conj(phase) * rp + c * rq

    w = np.diag(A).real
    order = np.argsort(w)[::-1]
    return w[order], V[:, order]


def min_eigenvalue(M):
    """Smallest eigenvalue of a Hermitian matrix."""
    w, _ = hermitian_eigen(M)
    return float(w[-1])


@dataclass(frozen=True)
class MeasurementSetting:
    """A Pauli measurement choice: observable index m, outcome index n."""

    n: int
    m: int

    def __post_init__(self):
        if self.n not in (0, 1) or self.m not in (1, 2, 3):
            raise DomainError(f"invalid measurement setting (n={self.n}, m={self.m})")

    @property
    def value(self):
        """Outcome eigenvalue v_nm = (-1)^n."""
        return 1 if self.n == 0 else -1


ALL_SETTINGS = tuple(MeasurementSetting(n, m) for m in (1, 2, 3) for n in (0, 1))


class BlochVector:
    """Real three-vector (s1, s2, s3) of Pauli expectation values, norm <= 1."""

    __slots__ = ("s1", "s2", "s3")

    def __init__(self, s1, s2, s3):
        v = np.array([s1, s2, s3], dtype=float)
        if not np.all(np.isfinite(v)):
            raise ValidationError("Bloch components must be finite")
        if np.linalg.norm(v) > 1.0 + 1e-9:
            raise ValidationError(f"Bloch vector norm {np.linalg.norm(v):.6f} exceeds 1")
        self.s1, self.s2, self.s3 = (float(c) for c in v)

    @property
    def array(self):
        return np.array([self.s1, self.s2, self.s3])

    @property
    def norm(self):
        return float(np.linalg.norm(self.array))

    def __iter__(self):
        return iter((self.s1, self.s2, self.s3))

    def __repr__(self):
        return f"BlochVector({self.s1:.6g}, {self.s2:.6g}, {self.s3:.6g})"


class DensityMatrix:
    """Hermitian PSD matrix with trace equal to its declared trace weight.

    ``trace_weight`` lies in (0, 1]; heralded conditional states carry their
    branch probability here instead of being silently renormalized.
    """

    __slots__ = ("matrix", "trace_weight")

    def __init__(self, matrix, trace_weight=None, tol=HERMITICITY_TOL):
        m = np.array(matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
            raise DomainError(f"density matrix must be 2x2 or 4x4, got {m.shape}")
        if not np.all(np.isfinite(m.view(float))):
            raise ValidationError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > tol:
            raise ValidationError("density matrix is not Hermitian within tolerance")
        m = (m + m.conj().T) / 2.0
        tr = float(np.trace(m).real)
        if trace_weight is None:
            trace_weight = tr
        if abs(tr - trace_weight) > max(tol, 1e-10):
            raise ValidationError(f"trace {tr} does not match declared weight {trace_weight}")
        if not (0.0 < trace_weight <= 1.0 + max(tol, 1e-9)):
            raise ValidationError(f"trace weight {trace_weight} outside (0, 1]")
        if min_eigenvalue(m) < -max(tol, PSD_TOL):
            raise ValidationError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        self.matrix = m
        self.trace_weight = float(trace_weight)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def normalized(self):
        """Unit-trace version of this state."""
        return DensityMatrix(self.matrix / self.trace_weight)

    def __repr__(self):
        return f"DensityMatrix(dim={self.dim}, trace_weight={self.trace_weight:.6g})"


def pauli_eigenvector(n, m):
    """Ket |n>_m, the sigma_m eigenvector with eigenvalue (-1)^n."""
    if n not in (0, 1) or m not in (1, 2, 3):
        raise DomainError(f"invalid Pauli eigenstate indices (n={n}, m={m})")
    v = 1.0 if n == 0 else -1.0
    if m == 1:
        return np.array([1, v], dtype=complex) / np.sqrt(2)
    if m == 2:
        return np.array([1, 1j * v], dtype=complex) / np.sqrt(2)
    return np.array([1, 0], dtype=complex) if n == 0 else np.array([0, 1], dtype=complex)


def pauli_eigenstate(n, m):
    """Rank-1 projector |n>_m <n| as a DensityMatrix."""
    k = pauli_eigenvector(n, m)
    return DensityMatrix(np.outer(k, k.conj()))


def density_to_bloch(rho):
    """Bloch vector s_m = tr(sigma_m rho) of a normalized single-qubit state."""
    m = _as_matrix(rho)
    if m.shape != (2, 2):
        raise DomainError("density_to_bloch expects a single-qubit state")
    return BlochVector(*(float(np.trace(P @ m).real) for P in PAULIS))


def bloch_to_density(b):
    """Inverse of density_to_bloch: rho = (I + s . sigma) / 2."""
    if not isinstance(b, BlochVector):
        b = BlochVector(*b)
    m = (I2 + b.s1 * SX + b.s2 * SY + b.s3 * SZ) / 2.0
    return DensityMatrix(m)


def fidelity_with_pure(rho, psi):
    """Overlap <psi|rho|psi> of a state with a normalized pure-state vector."""
    m = _as_matrix(rho)
    psi = np.asarray(psi, dtype=complex)
    if psi.ndim != 1 or psi.shape[0] != m.shape[0]:
        raise DomainError(f"dimension mismatch: state {m.shape} vs vector {psi.shape}")
    if abs(np.linalg.norm(psi) - 1.0) > 1e-9:
        raise DomainError("pure-state vector must be normalized")
    val = psi.conj() @ m @ psi
    if abs(val.imag) > 1e-12:
        raise ValidationError(f"fidelity has imaginary part {val.imag:.2e}")
    return float(val.real)


def partial_trace(rho, subsystem):
    """Trace subsystem 'A' or 'B' out of a two-qubit state."""
    m = _as_matrix(rho)
    if m.shape != (4, 4):
        raise DomainError("partial_trace expects a 4x4 two-qubit state")
    if subsystem not in ("A", "B"):
        raise DomainError("subsystem must be 'A' or 'B'")
    r = m.reshape(2, 2, 2, 2)
    if subsystem == "A":
        red = r[0, :, 0, :] + r[1, :, 1, :]
    else:
        red = r[:, 0, :, 0] + r[:, 1, :, 1]
    tw = rho.trace_weight if isinstance(rho, DensityMatrix) else float(np.trace(m).real)
    return DensityMatrix(red, trace_weight=tw)


def nearest_density(M, tol=HERMITICITY_TOL):
    """Project an approximately Hermitian matrix onto the unit-trace PSD cone.

    Hermitizes, clips negative eigenvalues to zero and renormalizes the trace
    to one.  The projection is idempotent on valid density matrices.
    """
    m = _as_matrix(M)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError("nearest_density expects a square matrix")
    H = (m + m.conj().T) / 2.0
    w, v = hermitian_eigen(H, tol=max(tol, 1e-6))
    w = np.clip(w, 0.0, None)
    total = float(w.sum())
    if total <= 1e-14:
        raise ValidationError("matrix projects to zero; no density matrix nearby")
    out = (v * (w / total)) @ v.conj().T
    return DensityMatrix(out)


# --- two-qubit constructors -------------------------------------------------

def psi_minus_ket():
    """Singlet ket (|01> - |10>)/sqrt(2)."""
    return np.array([0, 1, -1, 0], dtype=complex) / np.sqrt(2)


def psi_plus_ket():
    return np.array([0, 1, 1, 0], dtype=complex) / np.sqrt(2)


def singlet_state():
    k = psi_minus_ket()
    return DensityMatrix(np.outer(k, k.conj()))


def psi_plus_state():
    k = psi_plus_ket()
    return DensityMatrix(np.outer(k, k.conj()))


def rho_sep_state():
    """Incoherent mixture (|01><01| + |10><10|)/2 of anticorrelated pairs."""
    m = np.zeros((4, 4), dtype=complex)
    m[1, 1] = 0.5
    m[2, 2] = 0.5
    return DensityMatrix(m)


def werner_state(p_noise, base=None):
    """(1 - p) * base + (p/4) * I(x)I, renormalized; base defaults to the singlet."""
    if not 0.0 <= p_noise <= 1.0:
        raise DomainError(f"noise weight {p_noise} outside [0, 1]")
    b = _as_matrix(base) if base is not None else singlet_state().matrix
    if b.shape != (4, 4):
        raise DomainError("werner base must be a two-qubit state")
    mix = (1.0 - p_noise) * b + (p_noise / 4.0) * np.eye(4)
    return nearest_density(mix)


def phi_mixture_state(p_phi, base):
    """p * base + (1 - p) * rho_sep, renormalized."""
    if not 0.0 <= p_phi <= 1.0:
        raise DomainError(f"mixture weight {p_phi} outside [0, 1]")
    b = _as_matrix(base)
    if b.shape != (4, 4):
        raise DomainError("phi_mixture base must be a two-qubit state")
    mix = p_phi * b + (1.0 - p_phi) * rho_sep_state().matrix
    return nearest_density(mix)


def make_two_qubit_state(kind, p=None, base=None, path=None):
    """Named two-qubit state constructor used by the CLI registry."""
    if kind == "singlet":
        return singlet_state()
    if kind == "psi_plus":
        return psi_plus_state()
    if kind == "rho_sep":
        return rho_sep_state()
    if kind == "werner":
        if p is None:
            raise DomainError("werner requires a noise weight")
        return werner_state(p, base=base)
    if kind == "phi_mixture":
        if p is None or base is None:
            raise DomainError("phi_mixture requires a weight and a base state")
        return phi_mixture_state(p, base)
    if kind == "from_matrix":
        if path is None:
            raise DomainError("from_matrix requires a file path")
        return load_density_json(path)
    raise DomainError(f"unknown state constructor '{kind}'")


# --- JSON interchange and bundled data ---------------------------------------

def density_to_json_dict(rho):
    m = _as_matrix(rho)
    return {"dim": m.shape[0], "re": m.real.tolist(), "im": m.imag.tolist()}


def save_density_json(rho, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(density_to_json_dict(rho), fh, indent=1)
        fh.write("\n")


def density_from_json_dict(doc):
    """Validate and project a density matrix from its JSON dictionary form.

    Accepts matrices that are Hermitian within 1e-6, have eigenvalues above
    -1e-6 and trace within 1e-6 of one; the result is cleaned up through
    nearest_density.
    """
    try:
        dim = int(doc["dim"])
        re = np.asarray(doc["re"], dtype=float)
        im = np.asarray(doc["im"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed density-matrix document: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise ValidationError("re/im blocks do not match the declared dimension")
    m = re + 1j * im
    if np.max(np.abs(m - m.conj().T)) > 1e-6:
        raise ValidationError("loaded matrix is not Hermitian within 1e-6")
    if abs(np.trace(m).real - 1.0) > 1e-6:
        raise ValidationError(f"loaded matrix has trace {np.trace(m).real:.8f}, expected 1")
    H = (m + m.conj().T) / 2.0
    if min_eigenvalue(H) < -1e-6:
        raise ValidationError("loaded matrix has an eigenvalue below -1e-6")
    return nearest_density(H)


def load_density_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read state file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"state file is not valid JSON: {exc}") from exc
    return density_from_json_dict(doc)


_BUILTIN_FILES = {"rho-expt": "rho_expt.json", "rho-expt-p40": "rho_expt_p40.json"}


def builtin_state_matrix(name):
    """Bundled experimental matrix exactly as published (Hermitian, unnormalized).

    The 'rho-expt' matrix carries the published rounding, including a trace of
    1.019; use :func:`builtin_state` for a normalized version.
    """
    if name not in _BUILTIN_FILES:
        raise DomainError(f"no bundled matrix named '{name}'")
    payload = resources.files("rspcap").joinpath("data", _BUILTIN_FILES[name]).read_text()
    doc = json.loads(payload)
    m = np.asarray(doc["re"], dtype=float) + 1j * np.asarray(doc["im"], dtype=float)
    if np.max(np.abs(m - m.conj().T)) > 1e-12:
        raise ValidationError(f"bundled matrix '{name}' lost Hermiticity")
    return m


def builtin_state(name):
    """Built-in shared states by registry name: singlet, rho-expt, rho-expt-p40."""
    if name == "singlet":
        return singlet_state()
    return nearest_density(builtin_state_matrix(name))


BUILTIN_STATE_NAMES = ("singlet",) + tuple(_BUILTIN_FILES)
