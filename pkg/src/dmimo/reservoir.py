"""Echo state network channel predictor.

Fixed sparse random reservoir, leaky-tanh state update, closed-form ridge
readout on [state; input; bias] features. Complex channel coefficients are
fed as stacked (real, imag) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

DEFAULT_SIZE = 64
DEFAULT_SPECTRAL_RADIUS = 0.9
DEFAULT_LEAK_RATE = 0.3
DEFAULT_RIDGE_LAMBDA = 1e-6
DEFAULT_DENSITY = 0.1
DEFAULT_WASHOUT = 20


@dataclass(frozen=True)
class Reservoir:
    input_weights: np.ndarray  # (N, input_dim)
    recurrent_weights: np.ndarray  # (N, N), scaled to spectral_radius
    state: np.ndarray  # (N,)
    leak_rate: float
    spectral_radius: float

    @property
    def size(self) -> int:
        return self.recurrent_weights.shape[0]

    @property
    def input_dim(self) -> int:
        return self.input_weights.shape[1]


@dataclass(frozen=True)
class Readout:
    weights: np.ndarray  # (output_dim, n_features + 1), bias column last
    ridge_lambda: float


def init_reservoir(
    size: int,
    spectral_radius: float,
    input_dim: int,
    leak_rate: float = DEFAULT_LEAK_RATE,
    seed: int | np.random.SeedSequence = 0,
    density: float = DEFAULT_DENSITY,
) -> Reservoir:
    """Sparse random reservoir rescaled to the requested spectral radius."""
    if size < 1:
        raise ValueError("size must be >= 1")
    if not (0.0 < spectral_radius < 1.0):
        raise ValueError("echo state property violated: spectral_radius must be in (0, 1)")
    if not (0.0 < leak_rate <= 1.0):
        raise ValueError("leak_rate must be in (0, 1]")

    rng = np.random.default_rng(seed)
    w = rng.standard_normal((size, size))
    mask = rng.random((size, size)) < density
    w = np.where(mask, w, 0.0)
    top = np.max(np.abs(np.linalg.eigvals(w)))
    if top == 0.0:
        # degenerate draw (tiny reservoirs); fall back to a dense matrix
        w = rng.standard_normal((size, size))
        top = np.max(np.abs(np.linalg.eigvals(w)))
    w *= spectral_radius / top

    w_in = rng.uniform(-1.0, 1.0, size=(size, input_dim))
    return Reservoir(
        input_weights=w_in,
        recurrent_weights=w,
        state=np.zeros(size),
        leak_rate=leak_rate,
        spectral_radius=spectral_radius,
    )


def step(res: Reservoir, input_vec: np.ndarray) -> Reservoir:
    """Leaky-integrator update:
    state' = (1 - leak) * state + leak * tanh(W_rec state + W_in u)."""
    u = np.asarray(input_vec, dtype=float).ravel()
    if u.shape[0] != res.input_dim:
        raise ValueError(
            "input dimension mismatch: got %d, expected %d" % (u.shape[0], res.input_dim)
        )
    pre = res.recurrent_weights @ res.state + res.input_weights @ u
    new_state = (1.0 - res.leak_rate) * res.state + res.leak_rate * np.tanh(pre)
    return replace(res, state=new_state)


def run_states(res: Reservoir, inputs: np.ndarray) -> tuple[Reservoir, np.ndarray]:
    """Drive the reservoir through an input sequence (T, input_dim);
    returns the final reservoir and the state trajectory (T, N)."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    states = np.empty((inputs.shape[0], res.size))
    for t in range(inputs.shape[0]):
        res = step(res, inputs[t])
        states[t] = res.state
    return res, states


def train_readout(
    states: np.ndarray,
    targets: np.ndarray,
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
) -> Readout:
    """Closed-form ridge regression on bias-augmented features.

    states: (T, n_features), targets: (T, output_dim).
    W = Y X^T (X X^T + lambda I)^-1 with X = [features; 1].
    """
    if ridge_lambda <= 0:
        raise ValueError("ridge_lambda must be positive")
    states = np.atleast_2d(np.asarray(states, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if states.shape[0] != targets.shape[0]:
        raise ValueError("states and targets must have the same number of samples")

    x = np.hstack([states, np.ones((states.shape[0], 1))]).T  # (F+1, T)
    y = targets.T  # (out, T)
    gram = x @ x.T + ridge_lambda * np.eye(x.shape[0])
    weights = y @ x.T @ np.linalg.inv(gram)
    return Readout(weights=weights, ridge_lambda=ridge_lambda)


def _complex_to_real(seq: np.ndarray) -> np.ndarray:
    seq = np.asarray(seq, dtype=complex)
    if seq.ndim == 1:
        seq = seq[:, None]
    return np.hstack([seq.real, seq.imag])


def _real_to_complex(vec: np.ndarray) -> np.ndarray:
    n = vec.shape[-1] // 2
    return vec[..., :n] + 1j * vec[..., n:]


def _features(states: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    return np.hstack([states, inputs])


def fit_channel_predictor(
    history: np.ndarray,
    horizon: int = 1,
    size: int = DEFAULT_SIZE,
    spectral_radius: float = DEFAULT_SPECTRAL_RADIUS,
    leak_rate: float = DEFAULT_LEAK_RATE,
    ridge_lambda: float = DEFAULT_RIDGE_LAMBDA,
    seed: int | np.random.SeedSequence = 0,
    washout: int = DEFAULT_WASHOUT,
) -> tuple[Reservoir, Readout]:
    """Train a horizon-step-ahead predictor on a complex coefficient history.

    history: (T,) or (T, n_coeffs) complex. The readout is trained directly
    on horizon-shifted targets, so multi-slot CSI ages need no iteration.
    """
    inputs = _complex_to_real(history)
    if inputs.shape[0] <= horizon + washout + 1:
        raise ValueError("history too short for the requested horizon")
    res = init_reservoir(size, spectral_radius, inputs.shape[1], leak_rate, seed)
    fresh = res
    _, states = run_states(res, inputs)
    feats = _features(states[washout:-horizon], inputs[washout:-horizon])
    targets = inputs[washout + horizon:]
    readout = train_readout(feats, targets, ridge_lambda)
    return fresh, readout


def predict_sequence(
    res: Reservoir,
    readout: Readout,
    history: np.ndarray,
) -> np.ndarray:
    """One pass over a full history; row t predicts history[t + horizon].

    Returns a complex array (T, n_coeffs). Cheaper than calling
    predict_channel per step when scoring a long evaluation window.
    """
    inputs = _complex_to_real(history)
    _, states = run_states(res, inputs)
    feats = np.hstack([_features(states, inputs), np.ones((inputs.shape[0], 1))])
    out = feats @ readout.weights.T
    return _real_to_complex(out)


def predict_channel(
    res: Reservoir,
    readout: Readout | None,
    history: np.ndarray,
) -> np.ndarray | complex:
    """Run the reservoir over the history and predict the next coefficient(s)."""
    if readout is None:
        raise ValueError("readout is untrained")
    inputs = _complex_to_real(history)
    _, states = run_states(res, inputs)
    feat = np.concatenate([states[-1], inputs[-1], [1.0]])
    out = _real_to_complex(readout.weights @ feat)
    return complex(out[0]) if out.shape == (1,) else out
