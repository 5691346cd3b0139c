"""Virtual covariance recursion and the augmented-measurement state estimator.

The effective channel Ftilde = H F g is complex while the plant state is
real, so the measurement is stacked with its conjugate ("augmented" form)
before the usual Kalman algebra.  The covariance recursion is shared by
sensor and controller; it depends only on Ftilde and the saturation
indicator gamma, never on the realized state.
"""

from dataclasses import dataclass

import numpy as np

from .numerics import InputDomainError

IMAG_RESIDUAL_TOL = 1e-6


class NumericalConsistencyError(RuntimeError):
    """A quantity that must be real came out with a large imaginary part."""


@dataclass
class EstimatorState:
    x_hat: np.ndarray  # (K,) real
    Sigma: np.ndarray  # (K, K) real symmetric PSD


def augment(Ftilde: np.ndarray) -> np.ndarray:
    """Stack Ftilde over its elementwise conjugate: (2 N_c, K)."""
    return np.vstack([Ftilde, Ftilde.conj()])


def gram_2re(Ftilde: np.ndarray) -> np.ndarray:
    """2 Re{Ftilde^H Ftilde}; equals (Ftilde^a)^H Ftilde^a and is real PSD."""
    G = Ftilde.conj().T @ Ftilde
    return 2.0 * np.real(G)


def _check_psd(Sigma: np.ndarray) -> np.ndarray:
    Sigma = np.asarray(Sigma, dtype=float)
    scale = max(1.0, np.abs(Sigma).max())
    if np.abs(Sigma - Sigma.T).max() > 1e-9 * scale:
        raise InputDomainError("sigma_step: Sigma must be symmetric")
    if np.linalg.eigvalsh(Sigma).min() < -1e-9 * scale:
        raise InputDomainError("sigma_step: Sigma must be PSD")
    return Sigma


def sigma_step(Sigma: np.ndarray, Ftilde: np.ndarray | None, gamma: int,
               A: np.ndarray, W: np.ndarray, method: str = "auto") -> np.ndarray:
    """One step of the virtual covariance recursion.

    gamma = 0 (saturated slot) or Ftilde = 0 gives the prediction-only form
    A Sigma A^T + W.  Otherwise the measurement update is computed either on
    the augmented stack (method="augmented", safe for singular Sigma) or via
    the Gram-form identity (2 Re{Ftilde^H Ftilde} + Sigma^{-1})^{-1}
    (method="gram").  method="auto" picks by conditioning.
    """
    Sigma = _check_psd(Sigma)
    A = np.asarray(A, dtype=float)
    W = np.asarray(W, dtype=float)
    if gamma == 0 or Ftilde is None or not np.any(Ftilde):
        out = A @ Sigma @ A.T + W
        return (out + out.T) / 2

    if method == "auto":
        lam = np.linalg.eigvalsh(Sigma)
        near_singular = lam.min() < 1e-12 * max(lam.max(), 1.0)
        method = "augmented" if near_singular else "gram"

    if method == "gram":
        G = gram_2re(Ftilde)
        core = np.linalg.inv(G + np.linalg.inv(Sigma))
    elif method == "augmented":
        Fa = augment(Ftilde)
        FS = Fa @ Sigma  # (2Nc, K)
        innov = FS @ Fa.conj().T + np.eye(Fa.shape[0])
        upd = FS.conj().T @ np.linalg.solve(innov, FS)
        if np.abs(upd.imag).max() > IMAG_RESIDUAL_TOL * max(1.0, np.abs(upd).max()):
            raise NumericalConsistencyError("sigma_step: update has large imaginary part")
        core = Sigma - upd.real
    else:
        raise InputDomainError(f"sigma_step: unknown method {method!r}")

    out = A @ core @ A.T + W
    return (out + out.T) / 2


def kalman_gain(Sigma: np.ndarray, Ftilde: np.ndarray) -> np.ndarray:
    """K = Sigma (F^a)^H (F^a Sigma (F^a)^H + I)^{-1} on the augmented stack."""
    Fa = augment(Ftilde)
    FS = Fa @ Sigma
    innov = FS @ Fa.conj().T + np.eye(Fa.shape[0])
    return np.linalg.solve(innov.conj().T, FS).conj().T  # Sigma Fa^H innov^{-1}


def estimate_step(x_hat: np.ndarray, Sigma: np.ndarray, y: np.ndarray | None,
                  Ftilde: np.ndarray | None, gamma: int, A: np.ndarray,
                  B: np.ndarray, u_prev: np.ndarray) -> np.ndarray:
    """Next-slot estimate A x_hat + B u_prev + gamma A K (y^a - F^a x_hat).

    The known control input enters the prediction; the innovation term is
    gated by the saturation indicator.  The result must be real up to
    round-off (the augmented stack enforces conjugate symmetry).
    """
    x_hat = np.asarray(x_hat, dtype=float)
    pred = A @ x_hat + B @ np.asarray(u_prev, dtype=float)
    if gamma == 0 or Ftilde is None or not np.any(Ftilde):
        return pred
    Fa = augment(Ftilde)
    ya = np.concatenate([y, y.conj()])
    Kg = kalman_gain(Sigma, Ftilde)
    corr = A @ (Kg @ (ya - Fa @ x_hat))
    if np.abs(corr.imag).max() > IMAG_RESIDUAL_TOL * max(1.0, np.abs(corr).max()):
        raise NumericalConsistencyError("estimate_step: update has large imaginary part")
    return pred + corr.real


def mse_sample(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Squared estimation error ||x - x_hat||^2."""
    d = np.asarray(x, dtype=float) - np.asarray(x_hat, dtype=float)
    return float(d @ d)
