"""SDE problem definitions and the registry of built-in test problems.

A problem is an autonomous Ito system

    dX(t) = f(X(t)) dt + g(X(t)) dW(t),    X(t) in R^n, W(t) in R^m,

described by drift f: R^n -> R^n, diffusion g: R^n -> R^{n x m} and their
analytic derivatives.  All built-in callbacks broadcast over leading axes,
i.e. they accept arrays of shape (..., n); user-defined problems may be
plain single-state callables (leave ``vectorized`` False).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

PROVENANCE_TAGS = ("user-supplied", "estimated", "paper-preset")


class UnknownProblemError(LookupError):
    """Requested problem name is not in the registry."""


class UnsupportedProblemError(RuntimeError):
    """Problem violates a precondition of the requested operation."""


@dataclass
class ProblemConstants:
    """Stability constants of a problem.

    Attributes:
      L: diffusion growth constant, |g(x) - g(y)|_F^2 <= L |x - y|^2.
      mu: one-sided Lipschitz constant of the drift,
          <x - y, f(x) - f(y)> <= mu |x - y|^2.
      M: bound on the mean squared Frobenius norm of the drift Jacobian
          along solutions.
      M_tilde: second-order noise interaction constant; only needed for
          Milstein analysis, may be None.
      provenance: per-field tag, one of "user-supplied", "estimated",
          "paper-preset".

    The decay rate ``alpha = 2*mu + L`` is recomputed on access so that
    mutating L or mu keeps it consistent.
    """

    L: float
    mu: float
    M: float
    M_tilde: float | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.L < 0.0:
            raise ValueError("L must be nonnegative")
        if self.M < 0.0:
            raise ValueError("M must be nonnegative")
        if self.M_tilde is not None and self.M_tilde < 0.0:
            raise ValueError("M_tilde must be nonnegative")
        tags = dict(self.provenance)
        for name in ("L", "mu", "M", "M_tilde"):
            tags.setdefault(name, "user-supplied")
        for name, tag in tags.items():
            if tag not in PROVENANCE_TAGS:
                raise ValueError(f"unknown provenance tag {tag!r} for {name!r}")
        self.provenance = tags

    @property
    def alpha(self) -> float:
        return 2.0 * self.mu + self.L

    @classmethod
    def paper_preset(cls, L, mu, M, M_tilde=None):
        tags = {k: "paper-preset" for k in ("L", "mu", "M", "M_tilde")}
        return cls(L=L, mu=mu, M=M, M_tilde=M_tilde, provenance=tags)

    @classmethod
    def estimated(cls, L, mu, M, M_tilde=None):
        tags = {k: "estimated" for k in ("L", "mu", "M", "M_tilde")}
        return cls(L=L, mu=mu, M=M, M_tilde=M_tilde, provenance=tags)

    def to_dict(self) -> dict:
        return {
            "L": self.L,
            "mu": self.mu,
            "M": self.M,
            "M_tilde": self.M_tilde,
            "alpha": self.alpha,
            "provenance": dict(self.provenance),
        }


@dataclass(frozen=True)
class SdeProblem:
    """An autonomous Ito SDE with analytic derivative callbacks.

    ``drift_jacobian(x)`` returns the n x n matrix df^i/dx^k.
    ``diffusion_column_derivative(x, j)`` returns the n x n matrix
    dg^{i,j}/dx^k of the j-th diffusion column.
    """

    n: int
    m: int
    drift: object
    diffusion: object
    drift_jacobian: object = None
    diffusion_column_derivative: object = None
    commutative_noise: bool = True
    horizon: float = 10.0
    label: str = "custom"
    vectorized: bool = False
    x0: np.ndarray | None = None
    y0: np.ndarray | None = None
    constants: ProblemConstants | None = None

    def __post_init__(self):
        if self.n < 1 or self.m < 1:
            raise ValueError("state and noise dimensions must be positive")
        if self.horizon <= 0.0:
            raise ValueError("horizon must be positive")
        for name in ("x0", "y0"):
            value = getattr(self, name)
            if value is not None:
                arr = np.asarray(value, dtype=float)
                if arr.shape != (self.n,):
                    raise ValueError(f"{name} must have shape ({self.n},)")
                object.__setattr__(self, name, arr)
        if self.m == 1:
            # single driving noise: cross-interaction terms cannot disagree
            object.__setattr__(self, "commutative_noise", True)
        probe = np.zeros(self.n)
        fx = np.asarray(self.drift(probe))
        if fx.shape != (self.n,):
            raise ValueError(
                f"drift output has shape {fx.shape}, expected ({self.n},)")
        gx = np.asarray(self.diffusion(probe))
        if gx.shape != (self.n, self.m):
            raise ValueError(
                f"diffusion output has shape {gx.shape}, "
                f"expected ({self.n}, {self.m})")


def _loop_rows(fn, x, out_shape_tail):
    flat = x.reshape(-1, x.shape[-1])
    out = np.empty((flat.shape[0],) + out_shape_tail)
    for i in range(flat.shape[0]):
        out[i] = fn(flat[i])
    return out.reshape(x.shape[:-1] + out_shape_tail)


def batched_drift(problem, x):
    """Evaluate the drift on states of shape (..., n)."""
    x = np.asarray(x, dtype=float)
    if problem.vectorized or x.ndim == 1:
        return problem.drift(x)
    return _loop_rows(problem.drift, x, (problem.n,))


def batched_diffusion(problem, x):
    x = np.asarray(x, dtype=float)
    if problem.vectorized or x.ndim == 1:
        return problem.diffusion(x)
    return _loop_rows(problem.diffusion, x, (problem.n, problem.m))


def batched_drift_jacobian(problem, x):
    if problem.drift_jacobian is None:
        raise UnsupportedProblemError(
            f"problem {problem.label!r} has no drift Jacobian; "
            "use with_fd_derivatives() to add a finite-difference fallback")
    x = np.asarray(x, dtype=float)
    if problem.vectorized or x.ndim == 1:
        return problem.drift_jacobian(x)
    return _loop_rows(problem.drift_jacobian, x, (problem.n, problem.n))


def batched_diffusion_column_derivative(problem, x, j):
    if problem.diffusion_column_derivative is None:
        raise UnsupportedProblemError(
            f"problem {problem.label!r} has no diffusion derivatives; "
            "use with_fd_derivatives() to add a finite-difference fallback")
    x = np.asarray(x, dtype=float)
    if problem.vectorized or x.ndim == 1:
        return problem.diffusion_column_derivative(x, j)
    return _loop_rows(lambda s: problem.diffusion_column_derivative(s, j),
                      x, (problem.n, problem.n))


def finite_difference_jacobian(fn, x, step_scale=1e-6):
    """Central-difference Jacobian of a vector field.

    The step is ``step_scale * (1 + |x|)`` per state.  Broadcasts over
    leading axes when ``fn`` does.
    """
    x = np.asarray(x, dtype=float)
    h = step_scale * (1.0 + np.linalg.norm(x, axis=-1, keepdims=True))
    cols = []
    for k in range(x.shape[-1]):
        dx = np.zeros_like(x)
        dx[..., k] = h[..., 0]
        cols.append((np.asarray(fn(x + dx)) - np.asarray(fn(x - dx))) / (2.0 * h))
    return np.stack(cols, axis=-1)


def with_fd_derivatives(problem, step_scale=1e-6):
    """Fill missing derivative callbacks with central finite differences."""
    jac = problem.drift_jacobian
    if jac is None:
        def jac(x, _f=problem.drift):
            return finite_difference_jacobian(_f, x, step_scale)
    col = problem.diffusion_column_derivative
    if col is None:
        def col(x, j, _g=problem.diffusion):
            return finite_difference_jacobian(
                lambda s: np.asarray(_g(s))[..., j], x, step_scale)
    return dataclasses.replace(
        problem, drift_jacobian=jac, diffusion_column_derivative=col)


def _interaction_tensor(problem, x):
    # c[..., j1, j2, :] = sum_k g^{k,j1}(x) * d g^{j2} / d x^k (x)
    x = np.asarray(x, dtype=float)
    gx = np.asarray(batched_diffusion(problem, x))
    out = np.empty(x.shape[:-1] + (problem.m, problem.m, problem.n))
    for j2 in range(problem.m):
        dcol = np.asarray(batched_diffusion_column_derivative(problem, x, j2))
        for j1 in range(problem.m):
            out[..., j1, j2, :] = np.einsum(
                '...ik,...k->...i', dcol, gx[..., :, j1])
    return out


def levy_free_correction(problem, x):
    """Second-order noise interaction terms of the Milstein update.

    Returns an array ``c`` with ``c[..., j1, j2, :]`` the vector
    ``sum_k g^{k,j1}(x) dg^{j2}/dx^k (x)``.  Diagonal entries multiply
    ``dW_j^2 - dt`` in the update, off-diagonal entries the cross products
    ``dW_{j1} dW_{j2}``; commutative noise makes the tensor symmetric in
    (j1, j2), which is what lets the update avoid Levy areas.
    """
    if not problem.commutative_noise:
        raise UnsupportedProblemError(
            f"problem {problem.label!r} does not have commutative noise; "
            "the Levy-area-free Milstein update does not apply")
    return _interaction_tensor(problem, x)


def commutativity_defect(problem, states) -> float:
    """Largest relative asymmetry of the noise interaction tensor.

    Zero (up to rounding) iff the noise is commutative on the sampled
    states.  Bypasses the ``commutative_noise`` gate so the flag itself
    can be audited.
    """
    worst = 0.0
    for x in states:
        c = _interaction_tensor(problem, np.asarray(x, dtype=float))
        asym = np.abs(c - np.swapaxes(c, -3, -2)).max()
        scale = max(1.0, np.abs(c).max())
        worst = max(worst, float(asym / scale))
    return worst


# ---------------------------------------------------------------------------
# built-in problems

def _build_problem1():
    # scalar cubic drift with linear multiplicative noise
    def drift(x):
        return -4.0 * x - x ** 3

    def diffusion(x):
        return x[..., :, None]

    def drift_jacobian(x):
        return (-4.0 - 3.0 * x ** 2)[..., :, None]

    def diffusion_column_derivative(x, j):
        return np.ones(x.shape + (1,))

    return SdeProblem(
        n=1, m=1, drift=drift, diffusion=diffusion,
        drift_jacobian=drift_jacobian,
        diffusion_column_derivative=diffusion_column_derivative,
        commutative_noise=True, horizon=10.0, label="problem1",
        vectorized=True, x0=np.array([1.0]), y0=np.array([0.0]),
        constants=ProblemConstants.paper_preset(L=1.0, mu=-4.0, M=16.0,
                                                M_tilde=1.0))


def _build_problem2():
    # linear drift with bounded sinusoidal noise
    def drift(x):
        return -5.0 * x

    def diffusion(x):
        return np.sin(x)[..., :, None]

    def drift_jacobian(x):
        return np.full(x.shape + (1,), -5.0)

    def diffusion_column_derivative(x, j):
        return np.cos(x)[..., :, None]

    return SdeProblem(
        n=1, m=1, drift=drift, diffusion=diffusion,
        drift_jacobian=drift_jacobian,
        diffusion_column_derivative=diffusion_column_derivative,
        commutative_noise=True, horizon=10.0, label="problem2",
        vectorized=True, x0=np.array([1.0]), y0=np.array([0.0]),
        constants=ProblemConstants.paper_preset(L=1.0, mu=-5.0, M=25.0,
                                                M_tilde=1.0))


_P3_COLUMN_DERIVATIVES = (
    np.array([[1.0, 0.0], [2.5, 0.0]]) / 7.0,
    np.array([[0.0, 1.5], [0.0, -0.5]]) / 7.0,
)


def _build_problem3():
    # two-dimensional sinusoidal drift, two driving noises with linear
    # state-separated columns; the noise is NOT commutative (see
    # commutativity_defect), so only theta-Maruyama applies
    def drift(x):
        return -4.0 * np.sin(x)

    def diffusion(x):
        x1 = x[..., 0]
        x2 = x[..., 1]
        row1 = np.stack([x1, 1.5 * x2], axis=-1)
        row2 = np.stack([2.5 * x1, -0.5 * x2], axis=-1)
        return np.stack([row1, row2], axis=-2) / 7.0

    def drift_jacobian(x):
        out = np.zeros(x.shape + (2,))
        out[..., 0, 0] = -4.0 * np.cos(x[..., 0])
        out[..., 1, 1] = -4.0 * np.cos(x[..., 1])
        return out

    def diffusion_column_derivative(x, j):
        return np.broadcast_to(_P3_COLUMN_DERIVATIVES[j],
                               x.shape[:-1] + (2, 2))

    return SdeProblem(
        n=2, m=2, drift=drift, diffusion=diffusion,
        drift_jacobian=drift_jacobian,
        diffusion_column_derivative=diffusion_column_derivative,
        commutative_noise=False, horizon=10.0, label="problem3",
        vectorized=True, x0=np.array([1.0, 1.0]), y0=np.array([0.0, 0.0]),
        constants=ProblemConstants.paper_preset(L=0.148, mu=-3.56, M=16.0,
                                                M_tilde=None))


def _build_linear(lam=-4.0, mu_diff=1.0):
    # scalar geometric test equation dX = lam X dt + mu_diff X dW
    lam = float(lam)
    mu_diff = float(mu_diff)

    def drift(x):
        return lam * x

    def diffusion(x):
        return mu_diff * x[..., :, None]

    def drift_jacobian(x):
        return np.full(x.shape + (1,), lam)

    def diffusion_column_derivative(x, j):
        return np.full(x.shape + (1,), mu_diff)

    return SdeProblem(
        n=1, m=1, drift=drift, diffusion=diffusion,
        drift_jacobian=drift_jacobian,
        diffusion_column_derivative=diffusion_column_derivative,
        commutative_noise=True, horizon=10.0, label="linear",
        vectorized=True, x0=np.array([1.0]), y0=np.array([0.0]),
        constants=ProblemConstants.paper_preset(
            L=mu_diff ** 2, mu=lam, M=lam ** 2, M_tilde=mu_diff ** 4))


_REGISTRY = {
    "problem1": _build_problem1,
    "problem2": _build_problem2,
    "problem3": _build_problem3,
    "linear": _build_linear,
}

BUILTIN_NAMES = tuple(sorted(_REGISTRY))


def builtin_problem(name, **params):
    """Look up a built-in problem by name.

    Only "linear" accepts parameters (lam, mu_diff).  Raises
    UnknownProblemError listing the valid names otherwise.
    """
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise UnknownProblemError(
            f"unknown problem {name!r}; valid names: "
            + ", ".join(BUILTIN_NAMES)) from None
    return factory(**params)
