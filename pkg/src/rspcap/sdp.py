"""Log-barrier interior-point solver for small semidefinite programs.

Problems are stated over named Hermitian matrix variables with a real-linear
objective, real-linear equality constraints and affine PSD constraints.
Internally every Hermitian block is lowered to a real symmetric embedding,
equalities are eliminated by an orthonormal nullspace parametrization, and a
damped-Newton barrier path is followed with the barrier parameter cut by a
factor of ten per outer stage.

Feasibility is bootstrapped by one shared slack variable t that shifts every
cone constraint to ``expr + t I >= 0``; t is penalized in the objective and
must end below 1e-7, otherwise the problem is declared infeasible.  This also
keeps the path well defined for programs whose feasible set has an empty
interior (rank-deficient targets).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, SolverError
from .states import hermitian_eigen

GAP_TOL = 1e-8
FEAS_TOL = 1e-7
NEWTON_CAP = 500


def hermitian_basis(dim):
    """Orthogonal real-parameter basis of the d x d Hermitian matrices."""
    basis = []
    for i in range(dim):
        B = np.zeros((dim, dim), dtype=complex)
        B[i, i] = 1.0
        basis.append(B)
    for i in range(dim):
        for j in range(i + 1, dim):
            B = np.zeros((dim, dim), dtype=complex)
            B[i, j] = 1.0
            B[j, i] = 1.0
            basis.append(B)
            B = np.zeros((dim, dim), dtype=complex)
            B[i, j] = -1j
            B[j, i] = 1j
            basis.append(B)
    return basis


def params_to_hermitian(x, dim):
    out = np.zeros((dim, dim), dtype=complex)
    for val, B in zip(x, hermitian_basis(dim)):
        out += float(val) * B
    return out


def hermitian_to_real_embedding(H, tol=1e-10):
    """Real symmetric [[Re H, -Im H], [Im H, Re H]]; PSD iff H is PSD.

    Every eigenvalue of H appears twice in the embedding.
    """
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DomainError("embedding expects a square matrix")
    scale = max(1.0, float(np.max(np.abs(H))))
    if np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise DomainError("embedding expects a Hermitian matrix")
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


@dataclass
class PsdConstraint:
    """Affine expression ``constant + sum_v map_v(X_v)`` required PSD."""

    dim: int
    constant: np.ndarray
    maps: dict  # var name -> callable Hermitian -> Hermitian (linear)


@dataclass
class SdpSolution:
    status: str                 # optimal | infeasible | numerical-failure
    value: float
    variable_values: dict
    gap: float
    newton_steps: int = 0
    slack_shift: float = 0.0
    message: str = ""

    @property
    def optimal(self):
        return self.status == "optimal"


class SdpProblem:
    """Block-structured cone program over Hermitian matrix variables."""

    def __init__(self):
        self.variables = {}          # name -> dim
        self._offsets = {}
        self.nparams = 0
        self.objective_terms = None  # dict name -> coeff matrix or callable
        self.objective_const = 0.0
        self.sense = "min"
        self.equalities = []         # (terms, target)
        self.psd_constraints = []    # PsdConstraint

    # -- construction ---------------------------------------------------------

    def add_variable(self, name, dim):
        if name in self.variables:
            raise DomainError(f"duplicate variable '{name}'")
        self.variables[name] = int(dim)
        self._offsets[name] = self.nparams
        self.nparams += dim * dim

    def set_objective(self, sense, terms, constant=0.0):
        if sense not in ("min", "max"):
            raise DomainError("sense must be 'min' or 'max'")
        self.sense = sense
        self.objective_terms = dict(terms)
        self.objective_const = float(constant)

    def add_equality(self, terms, target):
        self.equalities.append((dict(terms), float(target)))

    def add_psd_constraint(self, dim, constant, maps):
        const = np.asarray(constant, dtype=complex)
        if const.shape != (dim, dim):
            raise DomainError("constant block has the wrong dimension")
        for name in maps:
            if name not in self.variables:
                raise DomainError(f"PSD constraint references unknown variable '{name}'")
        self.psd_constraints.append(PsdConstraint(dim, const, dict(maps)))

    # -- compiled views ---------------------------------------------------------

    def functional_vector(self, terms):
        """Real-linear functional as a coefficient vector over the parameters."""
        v = np.zeros(self.nparams)
        for name, coeff in terms.items():
            if name not in self.variables:
                raise DomainError(f"functional references unknown variable '{name}'")
            d = self.variables[name]
            off = self._offsets[name]
            for k, B in enumerate(hermitian_basis(d)):
                if callable(coeff):
                    v[off + k] = float(coeff(B))
                else:
                    v[off + k] = float(np.trace(np.asarray(coeff) @ B).real)
        return v

    def compiled_psd(self):
        """Real-embedded (F0, F_k) stacks, one per PSD constraint."""
        blocks = []
        for con in self.psd_constraints:
            D = 2 * con.dim
            F0 = hermitian_to_real_embedding(con.constant)
            Fs = np.zeros((self.nparams, D, D))
            for name, fmap in con.maps.items():
                d = self.variables[name]
                off = self._offsets[name]
                for k, B in enumerate(hermitian_basis(d)):
                    Fs[off + k] = hermitian_to_real_embedding(np.asarray(fmap(B), dtype=complex))
            blocks.append((F0, Fs))
        return blocks

    def constraint_value(self, con, values):
        """Evaluate one PSD constraint expression at given variable values."""
        expr = con.constant.astype(complex).copy()
        for name, fmap in con.maps.items():
            expr += np.asarray(fmap(values[name]), dtype=complex)
        return expr

    def extract(self, x):
        out = {}
        for name, d in self.variables.items():
            off = self._offsets[name]
            out[name] = params_to_hermitian(x[off:off + d * d], d)
        return out

    def to_json_dict(self):
        """Debug dump mirroring the problem structure."""
        doc = {
            "variables": {n: d for n, d in self.variables.items()},
            "sense": self.sense,
            "objective": {
                "constant": self.objective_const,
                "vector": self.functional_vector(self.objective_terms).tolist(),
            },
            "equalities": [
                {"vector": self.functional_vector(t).tolist(), "target": tgt}
                for t, tgt in self.equalities
            ],
            "psd_constraints": [],
        }
        for con in self.psd_constraints:
            doc["psd_constraints"].append({
                "dim": con.dim,
                "constant_re": con.constant.real.tolist(),
                "constant_im": con.constant.imag.tolist(),
                "vars": sorted(con.maps),
            })
        return doc

    def dump_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=1)
            fh.write("\n")


def _gram_schmidt_nullspace(A, tol=1e-12):
    """Orthonormal basis of ker(A) via modified Gram-Schmidt."""
    n = A.shape[1]
    rows = []
    for r in A:
        w = np.asarray(r, dtype=float).copy()
        for q in rows:
            w -= (q @ w) * q
        nw = np.linalg.norm(w)
        if nw > tol * max(1.0, np.linalg.norm(r)):
            rows.append(w / nw)
    cols = []
    for i in range(n):
        w = np.zeros(n)
        w[i] = 1.0
        for q in rows:
            w -= (q @ w) * q
        for q in cols:
            w -= (q @ w) * q
        nw = np.linalg.norm(w)
        if nw > 1e-10:
            cols.append(w / nw)
    if not cols:
        return np.array(rows), np.zeros((n, 0))
    return np.array(rows), np.column_stack(cols)


class _BarrierCore:
    """Damped-Newton minimizer of (c.z + P t)/mu + barrier over (z, t)."""

    def __init__(self, F0s, Fss, c, penalty, step_budget):
        self.F0s = F0s
        self.Fss = Fss
        self.c = c
        self.P = penalty
        self.budget = step_budget
        self.steps = 0
        self.mdim = sum(F.shape[0] for F in F0s) + 1

    def _chol_logdet(self, z, t):
        """(feasible, sum logdet of all shifted slacks). Cholesky doubles as the PSD test."""
        if t <= 0.0:
            return False, 0.0
        total = np.log(t)
        for F0, Fs in zip(self.F0s, self.Fss):
            S = F0 + np.tensordot(z, Fs, axes=(0, 0))
            S[np.diag_indices_from(S)] += t
            try:
                L = np.linalg.cholesky(S)
            except np.linalg.LinAlgError:
                return False, 0.0
            total += 2.0 * float(np.sum(np.log(np.diag(L))))
        return True, total

    def objective(self, z, t, mu):
        ok, logdet = self._chol_logdet(z, t)
        if not ok:
            return np.inf
        return (self.c @ z + self.P * t) / mu - logdet

    def grad_hess(self, z, t, mu):
        nz = len(z)
        g = np.zeros(nz + 1)
        H = np.zeros((nz + 1, nz + 1))
        g[:nz] = self.c / mu
        g[nz] = self.P / mu - 1.0 / t
        H[nz, nz] = 1.0 / t ** 2
        eyes = {}
        for F0, Fs in zip(self.F0s, self.Fss):
            D = F0.shape[0]
            S = F0 + np.tensordot(z, Fs, axes=(0, 0))
            S[np.diag_indices_from(S)] += t
            L = np.linalg.cholesky(S)
            Linv = np.linalg.solve(L, eyes.setdefault(D, np.eye(D)))
            Sinv = Linv.T @ Linv
            Fall = np.concatenate([Fs, eyes[D][None]], axis=0)
            W = np.einsum("ab,kbc->kac", Sinv, Fall)
            tr = np.einsum("kaa->k", W)
            g[:nz] -= tr[:nz]
            g[nz] -= tr[nz]
            H += np.einsum("kab,lba->kl", W, W)
        return g, H

    def minimize(self, z, t, mu, inner_tol):
        for _ in range(self.budget):
            if self.steps >= self.budget:
                break
            g, H = self.grad_hess(z, t, mu)
            jitter = 1e-12 * (np.trace(H) / H.shape[0] + 1.0)
            for _attempt in range(3):
                try:
                    L = np.linalg.cholesky(H + jitter * np.eye(H.shape[0]))
                    break
                except np.linalg.LinAlgError:
                    jitter *= 1e4
            else:
                raise SolverError("Newton system is not positive definite")
            d = -np.linalg.solve(L.T, np.linalg.solve(L, g))
            lam2 = float(-g @ d)
            self.steps += 1
            if lam2 / 2.0 <= inner_tol:
                break
            f0 = self.objective(z, t, mu)
            slope = float(g @ d)
            step = 1.0
            accepted = False
            while step > 1e-14:
                zn = z + step * d[:-1]
                tn = t + step * d[-1]
                fn = self.objective(zn, tn, mu)
                if fn <= f0 + 0.25 * step * slope:
                    z, t = zn, tn
                    accepted = True
                    break
                step *= 0.5
            if not accepted:
                break
        return z, t


def solve(problem, gap_tol=GAP_TOL, feas_tol=FEAS_TOL, newton_cap=NEWTON_CAP):
    """Solve an SdpProblem; maximization is handled by negating the objective."""
    if problem.objective_terms is None:
        raise DomainError("problem has no objective")
    if not problem.psd_constraints:
        raise DomainError("problem has no PSD constraints")
    if problem.nparams > 200:
        raise DomainError(f"{problem.nparams} real parameters exceed the supported scale")

    sign = 1.0 if problem.sense == "min" else -1.0
    cvec = sign * problem.functional_vector(problem.objective_terms)

    if problem.equalities:
        A = np.array([problem.functional_vector(t) for t, _ in problem.equalities])
        b = np.array([tgt for _, tgt in problem.equalities])
        xp, residual, _, _ = np.linalg.lstsq(A, b, rcond=None)
        if np.linalg.norm(A @ xp - b) > 1e-9 * max(1.0, np.linalg.norm(b)):
            return SdpSolution("infeasible", np.nan, {}, np.inf,
                               message="equality constraints are inconsistent")
        _, N = _gram_schmidt_nullspace(A)
    else:
        xp = np.zeros(problem.nparams)
        N = np.eye(problem.nparams)

    blocks = problem.compiled_psd()
    F0s = [F0 + np.tensordot(xp, Fs, axes=(0, 0)) for F0, Fs in blocks]
    Fss = [np.einsum("nab,nk->kab", Fs, N) for _, Fs in blocks]
    cz = N.T @ cvec

    def run(penalty, z0, t0):
        core = _BarrierCore(F0s, Fss, cz, penalty, newton_cap)
        z, t = z0, t0
        mu = 1.0
        final_mu = gap_tol / core.mdim
        while True:
            last = mu / 10.0 <= final_mu
            z, t = core.minimize(z, t, mu, 1e-11 if last else 1e-4)
            if last or core.steps >= newton_cap:
                break
            mu /= 10.0
        return z, t, mu * core.mdim, core

    lam_min = min(float(np.linalg.eigvalsh(F0).min()) for F0 in F0s)
    t0 = max(1e-2, -1.05 * lam_min + 1e-2)
    nz = N.shape[1]
    penalty = 100.0 * (1.0 + float(np.linalg.norm(cz)))

    z, t, gap, core = run(penalty, np.zeros(nz), t0)
    if t > feas_tol:
        # distinguish a genuinely infeasible problem from an undersized penalty
        feas = _BarrierCore(F0s, Fss, np.zeros(nz), 1.0, newton_cap)
        zf, tf = np.zeros(nz), t0
        mu = 1.0
        while mu * feas.mdim > gap_tol and feas.steps < newton_cap:
            zf, tf = feas.minimize(zf, tf, mu, 1e-6)
            if tf < -1e-6:
                break
            mu /= 10.0
        if tf > feas_tol:
            return SdpSolution("infeasible", np.nan, {}, gap, core.steps, t,
                               message=f"minimum cone shift {tf:.2e} exceeds {feas_tol:.0e}")
        z, t, gap, core = run(penalty * 1e3, zf, max(tf + 2e-2, 1e-2))
        if t > feas_tol:
            return SdpSolution("numerical-failure", np.nan, {}, gap, core.steps, t,
                               message="feasible problem but the slack did not converge")

    x = xp + N @ z
    obj = float(cvec @ x)
    if not np.isfinite(obj) or abs(obj) > 1e9 * (1.0 + np.linalg.norm(cz)):
        return SdpSolution("numerical-failure", np.nan, problem.extract(x), gap,
                           core.steps, t, message="objective diverged; problem may be unbounded")
    if core.steps >= newton_cap and gap > 10 * gap_tol:
        return SdpSolution("numerical-failure", np.nan, problem.extract(x), gap,
                           core.steps, t, message="Newton budget exhausted before convergence")
    value = problem.objective_const + sign * obj
    return SdpSolution("optimal", value, problem.extract(x), gap, core.steps, t)


def check_solution(problem, solution, psd_tol=FEAS_TOL, eq_tol=FEAS_TOL):
    """Independent feasibility certificate for a claimed optimal solution.

    Re-evaluates every constraint from the problem definition and the returned
    variable values, without using any solver state.
    """
    if not solution.optimal:
        raise SolverError(f"cannot certify a solution with status '{solution.status}'")
    values = solution.variable_values
    min_eig = np.inf
    for con in problem.psd_constraints:
        expr = problem.constraint_value(con, values)
        w, _ = hermitian_eigen(expr, tol=1e-6)
        min_eig = min(min_eig, float(w[-1]))
    eq_res = 0.0
    for terms, target in problem.equalities:
        vec = problem.functional_vector(terms)
        x = np.concatenate([
            np.array([float(np.trace(np.asarray(values[n]) @ B).real)
                      for B in hermitian_basis(problem.variables[n])])
            for n in problem.variables
        ])
        eq_res = max(eq_res, abs(float(vec @ x) - target))
    ok = min_eig >= -psd_tol and eq_res <= eq_tol and solution.gap <= 1e-7
    return {"psd_min_eig": min_eig, "eq_residual": eq_res, "gap": solution.gap, "ok": ok}
