"""Hybrid quantum-classical model variants, training and evaluation.

Four variants share one ``train`` / ``evaluate`` interface:

``classical_only``
    standardize -> poly_expand -> ridge readout (closed form, no circuit).
``classical_quantum``
    standardize -> fixed linear compressor to ``2**n_qubits`` amplitudes ->
    amplitude_encode -> ansatz -> Z-string expectations -> ridge readout.
``quantum_classical``
    standardize -> amplitude_encode (zero padded) -> ansatz ->
    Z-string expectations -> ridge readout.
``spd_enhanced_hybrid``
    standardize -> poly_expand -> ``Z = z z^T + eps I`` -> sym_log ->
    sqrt(2)-weighted upper triangle -> amplitude_encode -> ansatz ->
    Z-string expectations -> ridge readout.

For regression the readout is re-solved in closed form at every epoch and
the circuit parameters follow the exact gradient of the resulting
ridge objective. Classification trains readout and circuit jointly on the
cross-entropy.
"""

import hashlib
import json
import time
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from . import circuits, spd
from .circuits import adjoint_diag_grad, hardware_efficient, z_string_expectations, z_string_masks
from .exceptions import DimensionError, DivergenceError, InvariantError
from .states import amplitude_encode

KINDS = ("classical_only", "classical_quantum", "quantum_classical", "spd_enhanced_hybrid")
TABLE_LABELS = {
    "classical_only": "Classical (No Quantum)",
    "classical_quantum": "Classical-Quantum Hybrid",
    "quantum_classical": "Quantum-Classical Hybrid",
    "spd_enhanced_hybrid": "SPD-Enhanced Hybrid",
}
MAP_SEED = 20240607
MAX_CONSECUTIVE_INCREASES = 5


# --------------------------------------------------------------------------
# data

@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    targets: np.ndarray
    split: str = "train"
    task: str = "regression"

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.features, dtype=float))
        if self.task == "classification":
            y = np.asarray(self.targets)
            if y.ndim != 1 or not np.issubdtype(y.dtype, np.integer):
                raise InvariantError("classification targets must be a 1-D integer label vector")
        elif self.task == "regression":
            y = np.asarray(self.targets, dtype=float)
            if y.ndim == 1:
                y = y[:, None]
        else:
            raise ValueError(f"unknown task {self.task!r}")
        if self.split not in ("train", "test"):
            raise ValueError(f"split must be 'train' or 'test', got {self.split!r}")
        if X.shape[0] != y.shape[0]:
            raise DimensionError(f"{X.shape[0]} feature rows but {y.shape[0]} target rows")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
            raise InvariantError("dataset contains non-finite entries")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "targets", y)

    def __len__(self):
        return self.features.shape[0]

    @property
    def in_dim(self):
        return self.features.shape[1]

    @property
    def out_dim(self):
        return self.targets.shape[1] if self.task == "regression" else int(self.targets.max()) + 1


def _fem_map(in_dim, out_dim):
    rng = np.random.default_rng([MAP_SEED, in_dim, out_dim])
    Q = rng.normal(size=(out_dim, in_dim, in_dim)) / in_dim
    Q = 0.5 * (Q + np.swapaxes(Q, 1, 2))
    omega = rng.normal(size=(in_dim, in_dim))
    phase = rng.uniform(0, 2 * np.pi, size=in_dim)
    A = rng.normal(size=(out_dim, in_dim)) / np.sqrt(in_dim)
    return Q, omega, phase, A


def fem_response(x, out_dim=32):
    """Noiseless surrogate structural response for inputs ``x`` of shape ``(m, d)``.

    ``y_j = x^T Q_j x + sum_k A_jk sin(omega_k . x + phase_k)`` with
    ``Q_j``, ``omega``, ``phase`` and ``A`` drawn once from a fixed generator
    keyed on ``(MAP_SEED, d, out_dim)``, so the map is the same for every
    sampling seed.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    Q, omega, phase, A = _fem_map(x.shape[1], out_dim)
    quad = np.einsum("mi,jik,mk->mj", x, Q, x)
    return quad + np.sin(x @ omega.T + phase) @ A.T


def synth_fem_dataset(seed, n_samples, in_dim=7, out_dim=32, noise_sigma=0.01, split="train"):
    """Synthetic stand-in for bridge FEM data: inputs uniform in [-1, 1]^in_dim."""
    if in_dim < 1 or out_dim < 1 or n_samples < 1:
        raise ValueError("in_dim, out_dim and n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(n_samples, in_dim))
    Y = fem_response(X, out_dim)
    if noise_sigma > 0:
        Y = Y + noise_sigma * rng.normal(size=Y.shape)
    return Dataset(X, Y, split=split)


def fem_train_test(seed, n_train=400, n_test=100, in_dim=7, out_dim=32, noise_sigma=0.01):
    full = synth_fem_dataset(seed, n_train + n_test, in_dim, out_dim, noise_sigma)
    return (Dataset(full.features[:n_train], full.targets[:n_train], "train"),
            Dataset(full.features[n_train:], full.targets[n_train:], "test"))


def synth_blobs(seed, n_samples=200, in_dim=4, n_classes=2, separation=4.0, split="train"):
    """Unit-variance Gaussian blobs whose centres are pairwise ``separation`` apart.

    Centres form a regular simplex in a random orientation, which needs
    ``n_classes <= in_dim`` except for the two-class case.
    """
    if n_classes < 1 or n_samples < 1 or in_dim < 1:
        raise ValueError("n_samples, in_dim and n_classes must be >= 1")
    rng = np.random.default_rng(seed)
    if n_classes == 2:
        u = rng.normal(size=in_dim)
        u /= np.linalg.norm(u)
        centres = np.array([u, -u]) * (separation / 2)
    elif n_classes <= in_dim:
        Q, _ = np.linalg.qr(rng.normal(size=(in_dim, n_classes)))
        centres = Q.T * (separation / np.sqrt(2))
        centres -= centres.mean(axis=0)
    else:
        raise ValueError(f"{n_classes} classes need in_dim >= {n_classes}")
    labels = np.arange(n_samples) % n_classes
    X = centres[labels] + rng.normal(size=(n_samples, in_dim))
    return Dataset(X, labels.astype(np.int64), split=split, task="classification")


# --------------------------------------------------------------------------
# variants

@dataclass(frozen=True)
class VariantConfig:
    n_qubits: int = 4            # compressor width for classical_quantum
    layers: int = 3
    poly_degree: int = 2
    epsilon: float = 1e-3
    readout_weight: int | None = None  # max Z-string weight fed to the readout; None = all
    ridge_alpha: float = 1e-3


@dataclass(frozen=True)
class ModelVariant:
    kind: str
    config: VariantConfig
    in_dim: int
    out_dim: int
    stages: tuple
    n_qubits: int = 0
    circuit: circuits.ParamCircuit | None = None

    @property
    def num_params(self):
        return 0 if self.circuit is None else self.circuit.num_params

    @property
    def readout_in(self):
        return self.stages[-1][1]


def _readout_weight(cfg, n):
    return n if cfg.readout_weight is None else min(cfg.readout_weight, n)


def _qubits_for(length):
    return max(1, (length - 1).bit_length())


def build_variant(kind, config=None, in_dim=7, out_dim=32):
    """Assemble the stage list ``(name, in_dim, out_dim)`` for a variant and check it chains."""
    if kind not in KINDS:
        raise ValueError(f"unknown variant kind {kind!r}; expected one of {KINDS}")
    cfg = config or VariantConfig()
    stages = [("standardize", in_dim, in_dim)]

    if kind == "classical_only":
        p = spd.poly_length(in_dim, cfg.poly_degree)
        stages.append(("poly_expand", in_dim, p))
        stages.append(("ridge_readout", p, out_dim))
        _check_chain(stages)
        return ModelVariant(kind, cfg, in_dim, out_dim, tuple(stages))

    if kind == "classical_quantum":
        width = 1 << cfg.n_qubits
        stages.append(("linear_compressor", in_dim, width))
        length = width
    elif kind == "quantum_classical":
        length = in_dim
    else:
        p = spd.poly_length(in_dim, cfg.poly_degree)
        length = p * (p + 1) // 2
        stages += [("poly_expand", in_dim, p), ("spd_from_features", p, p * p),
                   ("sym_log", p * p, p * p), ("vectorize_tangent", p * p, length)]
    n = _qubits_for(length)
    if n > circuits.MAX_STATE_QUBITS:
        raise DimensionError(f"{kind} would need {n} qubits (cap {circuits.MAX_STATE_QUBITS})")
    n_feat = len(z_string_masks(n, _readout_weight(cfg, n)))
    stages += [("amplitude_encode", length, 1 << n), ("ansatz", 1 << n, 1 << n),
               ("z_expectations", 1 << n, n_feat), ("ridge_readout", n_feat, out_dim)]
    _check_chain(stages)
    circ = hardware_efficient(n, cfg.layers)
    return ModelVariant(kind, cfg, in_dim, out_dim, tuple(stages), n, circ)


def _check_chain(stages):
    for (a, _, out_a), (b, in_b, _) in zip(stages, stages[1:]):
        if out_a != in_b:
            raise DimensionError(f"stage {a} emits {out_a} values but {b} expects {in_b}")


# --------------------------------------------------------------------------
# training

@dataclass
class TrainedModel:
    variant: ModelVariant
    theta: np.ndarray
    weights: np.ndarray
    bias: np.ndarray
    preprocessing: dict
    losses: list = field(default_factory=list)
    halted: bool = False
    task: str = "regression"


def _walsh_rows(n, masks):
    """Sign patterns (+1/-1 per basis state) of the selected Z-strings."""
    idx = np.arange(1 << n)
    rows = np.empty((len(masks), 1 << n))
    for j, m in enumerate(masks):
        s = sum(1 << (n - 1 - q) for q in m)
        rows[j] = 1.0 - 2.0 * (np.bitwise_count(idx & s) % 2)
    return rows


def _stage_input(variant, X, prep):
    """Map standardized features to the readout input (classical) or encoded states (quantum)."""
    cfg = variant.config
    if variant.kind == "classical_only":
        return spd.poly_expand(X, cfg.poly_degree)
    if variant.kind == "classical_quantum":
        raw = np.hstack([np.ones((X.shape[0], 1)), X]) @ prep["compressor"].T
    elif variant.kind == "quantum_classical":
        raw = X
    else:
        Z = spd.spd_from_features(spd.poly_expand(X, cfg.poly_degree), cfg.epsilon)
        raw = spd.vectorize_tangent(spd.sym_log(Z))
    states = amplitude_encode(raw)
    return np.ascontiguousarray(states)


def _measure(variant, theta, states):
    out = circuits.apply(variant.circuit, theta, states)
    M, _ = z_string_expectations(out, variant.config.readout_weight)
    return M


def _ridge(M, Y, alpha):
    mu_m = M.mean(axis=0)
    mu_y = Y.mean(axis=0)
    Mc = M - mu_m
    Yc = Y - mu_y
    n, f = Mc.shape
    if f <= n:
        W = np.linalg.solve(Mc.T @ Mc + alpha * np.eye(f), Mc.T @ Yc)
    else:
        W = Mc.T @ np.linalg.solve(Mc @ Mc.T + alpha * np.eye(n), Yc)
    return W, mu_y - mu_m @ W


def _ridge_objective(M, Y, W, b, alpha):
    R = M @ W + b - Y
    return (np.sum(R * R) + alpha * np.sum(W * W)) / R.size, R


def _batch_metric(variant, theta, states):
    derivs = circuits.state_derivatives(variant.circuit, theta, states)
    out = circuits.apply(variant.circuit, theta, states)
    G = np.zeros((variant.num_params, variant.num_params))
    for i in range(states.shape[0]):
        jac = derivs[:, i, :]
        inner = jac.conj() @ jac.T
        a = jac.conj() @ out[i]
        G += (inner - np.outer(a, a.conj())).real
    G /= states.shape[0]
    return 0.5 * (G + G.T)


def _circuit_step(variant, theta, grad, states, optimizer, eta, lam_reg, metric_samples):
    if optimizer == "vanilla":
        return theta - eta * grad
    from .infogeom import natural_gradient_step

    metric = _batch_metric(variant, theta, states[:metric_samples])
    return natural_gradient_step(theta, grad, metric, eta, lam_reg)


def _prep_stats(variant, dataset, rng):
    X = dataset.features
    std = X.std(axis=0)
    prep = {"x_mean": X.mean(axis=0), "x_std": np.where(std > 0, std, 1.0),
            "epsilon": variant.config.epsilon}
    if dataset.task == "regression":
        ystd = dataset.targets.std(axis=0)
        prep["y_mean"] = dataset.targets.mean(axis=0)
        prep["y_std"] = np.where(ystd > 0, ystd, 1.0)
    if variant.kind == "classical_quantum":
        width = 1 << variant.config.n_qubits
        prep["compressor"] = rng.normal(size=(width, variant.in_dim + 1)) / np.sqrt(variant.in_dim + 1)
    return prep


def train(variant, dataset, optimizer="vanilla", epochs=20, eta=0.1, seed=0,
          lam_reg=1e-6, metric_samples=8):
    """Fit ``variant`` on ``dataset``; deterministic for a fixed ``seed``.

    Circuit parameters start uniform in [-0.1, 0.1]. ``optimizer`` is
    ``"vanilla"`` or ``"natural_gradient"`` (Fubini-Study preconditioning
    averaged over the first ``metric_samples`` training states). Training
    halts with a warning after 5 consecutive objective increases and keeps
    the best parameters seen; a non-finite objective raises
    :class:`DivergenceError`.
    """
    if optimizer not in ("vanilla", "natural_gradient"):
        raise ValueError(f"unknown optimizer {optimizer!r}")
    if len(dataset) == 0:
        raise ValueError("training set is empty")
    if dataset.in_dim != variant.in_dim:
        raise DimensionError(f"variant expects {variant.in_dim} features, dataset has {dataset.in_dim}")
    rng = np.random.default_rng(seed)
    prep = _prep_stats(variant, dataset, rng)
    theta = rng.uniform(-0.1, 0.1, size=variant.num_params)
    X = (dataset.features - prep["x_mean"]) / prep["x_std"]
    inputs = _stage_input(variant, X, prep)
    if dataset.task == "classification":
        return _train_classifier(variant, dataset, inputs, theta, prep, optimizer,
                                 epochs, eta, lam_reg, metric_samples)

    Y = (dataset.targets - prep["y_mean"]) / prep["y_std"]
    alpha = variant.config.ridge_alpha
    if variant.circuit is None:
        W, b = _ridge(inputs, Y, alpha)
        loss, _ = _ridge_objective(inputs, Y, W, b, alpha)
        return TrainedModel(variant, theta, W, b, prep, [float(loss)])

    n = variant.n_qubits
    masks = z_string_masks(n, _readout_weight(variant.config, n))
    walsh = _walsh_rows(n, masks)
    M = _measure(variant, theta, inputs)
    W, b = _ridge(M, Y, alpha)
    loss, R = _ridge_objective(M, Y, W, b, alpha)
    losses = [float(loss)]
    best = (loss, theta, W, b)
    increases = 0
    halted = False
    for epoch in range(1, epochs + 1):
        weights = (2.0 / R.size) * (R @ W.T) @ walsh
        _, grad = adjoint_diag_grad(variant.circuit, theta, inputs, weights)
        theta = _circuit_step(variant, theta, grad, inputs, optimizer, eta, lam_reg, metric_samples)
        M = _measure(variant, theta, inputs)
        W, b = _ridge(M, Y, alpha)
        loss, R = _ridge_objective(M, Y, W, b, alpha)
        if not np.isfinite(loss):
            raise DivergenceError("training loss is not finite", epoch)
        increases = increases + 1 if loss > losses[-1] else 0
        losses.append(float(loss))
        if loss < best[0]:
            best = (loss, theta, W, b)
        if increases >= MAX_CONSECUTIVE_INCREASES:
            warnings.warn(f"{variant.kind}: loss rose {increases} epochs in a row; "
                          f"halting at epoch {epoch}", RuntimeWarning, stacklevel=2)
            halted = True
            break
    _, theta, W, b = best
    return TrainedModel(variant, theta, W, b, prep, losses, halted)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _train_classifier(variant, dataset, inputs, theta, prep, optimizer, epochs, eta,
                      lam_reg, metric_samples):
    labels = dataset.targets
    n_classes = max(2, int(labels.max()) + 1)
    onehot = np.eye(n_classes)[labels]
    quantum = variant.circuit is not None
    if quantum:
        n = variant.n_qubits
        walsh = _walsh_rows(n, z_string_masks(n, _readout_weight(variant.config, n)))
    feats = _measure(variant, theta, inputs) if quantum else inputs
    W = np.zeros((feats.shape[1], n_classes))
    b = np.zeros(n_classes)
    m = len(labels)

    def objective(F, W, b):
        P = _softmax(F @ W + b)
        return -np.mean(np.log(np.maximum(P[np.arange(m), labels], 1e-300))), P

    loss, P = objective(feats, W, b)
    losses = [float(loss)]
    best = (loss, theta, W, b)
    increases = 0
    halted = False
    for epoch in range(1, epochs + 1):
        dlogits = (P - onehot) / m
        gW = feats.T @ dlogits
        gb = dlogits.sum(axis=0)
        if quantum:
            weights = (dlogits @ W.T) @ walsh
            _, grad = adjoint_diag_grad(variant.circuit, theta, inputs, weights)
            theta = _circuit_step(variant, theta, grad, inputs, optimizer, eta, lam_reg,
                                  metric_samples)
        W = W - eta * gW
        b = b - eta * gb
        if quantum:
            feats = _measure(variant, theta, inputs)
        loss, P = objective(feats, W, b)
        if not np.isfinite(loss):
            raise DivergenceError("training loss is not finite", epoch)
        increases = increases + 1 if loss > losses[-1] else 0
        losses.append(float(loss))
        if loss < best[0]:
            best = (loss, theta, W, b)
        if increases >= MAX_CONSECUTIVE_INCREASES:
            warnings.warn(f"{variant.kind}: loss rose {increases} epochs in a row; "
                          f"halting at epoch {epoch}", RuntimeWarning, stacklevel=3)
            halted = True
            break
    _, theta, W, b = best
    return TrainedModel(variant, theta, W, b, prep, losses, halted, task="classification")


# --------------------------------------------------------------------------
# inference and evaluation

def predict(model, features):
    """Regression outputs in target units, or class logits for classifiers."""
    v = model.variant
    prep = model.preprocessing
    X = (np.atleast_2d(features) - prep["x_mean"]) / prep["x_std"]
    inputs = _stage_input(v, X, prep)
    feats = inputs if v.circuit is None else _measure(v, model.theta, inputs)
    out = feats @ model.weights + model.bias
    if model.task == "regression":
        return out * prep["y_std"] + prep["y_mean"]
    return out


@dataclass
class EvalReport:
    kind: str
    mse: float | None = None
    r2: float | None = None
    r2_per_column: list | None = None
    constant_columns: list = field(default_factory=list)
    accuracy: float | None = None
    degenerate: bool = False
    n_samples: int = 0
    final_train_loss: float | None = None
    epochs_run: int = 0
    halted: bool = False
    seconds: float = 0.0

    def to_dict(self, timing=True):
        d = asdict(self)
        if not timing:
            d.pop("seconds")
        return d


def regression_metrics(Y, P):
    """MSE over all entries and uniform-average R^2 over non-constant columns."""
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    P = np.atleast_2d(np.asarray(P, dtype=float))
    if Y.shape != P.shape:
        raise DimensionError(f"target shape {Y.shape} vs prediction shape {P.shape}")
    mse = float(np.mean((Y - P) ** 2))
    ss_res = np.sum((Y - P) ** 2, axis=0)
    ss_tot = np.sum((Y - Y.mean(axis=0)) ** 2, axis=0)
    constant = [int(j) for j in np.flatnonzero(ss_tot == 0)]
    per_col = [None if ss_tot[j] == 0 else float(1 - ss_res[j] / ss_tot[j]) for j in range(Y.shape[1])]
    valid = [r for r in per_col if r is not None]
    r2 = float(np.mean(valid)) if valid else None
    return mse, r2, per_col, constant


def evaluate(model, dataset):
    if len(dataset) == 0:
        raise ValueError("evaluation set is empty")
    report = EvalReport(model.variant.kind, n_samples=len(dataset),
                        final_train_loss=model.losses[-1] if model.losses else None,
                        epochs_run=max(0, len(model.losses) - 1), halted=model.halted)
    out = predict(model, dataset.features)
    if dataset.task == "classification":
        pred = np.argmax(out, axis=1)
        report.accuracy = float(np.mean(pred == dataset.targets))
        report.degenerate = bool(np.unique(dataset.targets).size < 2)
        return report
    report.mse, report.r2, report.r2_per_column, report.constant_columns = \
        regression_metrics(dataset.targets, out)
    return report


def classify_pipeline(features, labels, kind="spd_enhanced_hybrid", config=None, *,
                      test_fraction=0.25, optimizer="vanilla", epochs=200, eta=0.5, seed=0):
    """Train and score a classifier on precomputed feature vectors.

    ``features`` is an array or a CSV path (one row per sample). The last
    ``test_fraction`` of rows (after a seeded shuffle) forms the test split.
    """
    if isinstance(features, (str, bytes)) or hasattr(features, "__fspath__"):
        features = np.loadtxt(features, delimiter=",", ndmin=2)
    X = np.atleast_2d(np.asarray(features, dtype=float))
    y = np.asarray(labels)
    if X.shape[0] != y.shape[0]:
        raise DimensionError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
    classes, y = np.unique(y, return_inverse=True)
    rng = np.random.default_rng(seed)
    order = rng.permutation(X.shape[0])
    n_test = max(1, int(round(test_fraction * X.shape[0])))
    tr, te = order[n_test:], order[:n_test]
    train_ds = Dataset(X[tr], y[tr].astype(np.int64), "train", "classification")
    test_ds = Dataset(X[te], y[te].astype(np.int64), "test", "classification")
    variant = build_variant(kind, config, X.shape[1], max(2, classes.size))
    start = time.perf_counter()
    model = train(variant, train_ds, optimizer, epochs, eta, seed)
    report = evaluate(model, test_ds)
    report.degenerate = bool(classes.size < 2)
    report.seconds = time.perf_counter() - start
    return report


def config_hash(config):
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]
