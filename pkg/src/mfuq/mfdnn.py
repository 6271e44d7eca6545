"""Two-stage multi-fidelity neural surrogate.

A fully connected low-fidelity network learns the cheap response; a
correction network then consumes ``(x, y_lf_hat(x))`` and predicts the
expensive response.  The low-fidelity network is frozen (bit-identical)
while the correction network trains.  Training is plain ADAM with
analytic backpropagation on numpy arrays; an optional L-BFGS refinement
pass over the full batch can be enabled per stage.

Inputs are mapped to [-1, 1] per dimension and targets standardized
inside each network, so one learning rate works across benchmarks whose
outputs differ by orders of magnitude.  Loss histories record the
normalized-space objective actually being minimized; raw-unit losses are
available through :func:`mse_loss` and :func:`corr_losses`.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8
AUTO_BATCH_LIMIT = 1024

# Named architectures (lf hidden layers, correction hidden layers, learning
# rate) for the four benchmark cases, plus the discrete search ranges used
# by grid_search.
PRESETS = {
    "lin1d": {"lf_hidden": (64, 64, 40), "corr_hidden": (8,), "learning_rate": 1e-3,
              "epochs": 1800, "dtype": "float64"},
    "nonlin1d": {"lf_hidden": (64, 64, 40), "corr_hidden": (64, 56), "learning_rate": 1e-3,
                 "epochs": 1800, "dtype": "float64"},
    "dim32": {"lf_hidden": (512, 256), "corr_hidden": (32,), "learning_rate": 1e-3,
              "epochs": 400, "dtype": "float32"},
    "dim100": {"lf_hidden": (512, 512, 256, 128), "corr_hidden": (64,), "learning_rate": 1e-3,
               "epochs": 60, "dtype": "float32"},
}

GRID_LAYERS = (1, 2, 3, 4)
GRID_WIDTHS = (8, 16, 24, 32, 40, 48, 56, 64)
GRID_LEARNING_RATES = (0.01, 0.001, 0.0001)


@dataclass
class TrainConfig:
    epochs: int = 1800
    learning_rate: float = 1e-3
    batch_size: int | None = None  # None: full batch up to AUTO_BATCH_LIMIT
    lambda_reg: float = 1e-4
    seed: int = 0
    lbfgs_refine: bool = False
    lbfgs_maxiter: int = 200


def relu(z):
    return np.maximum(z, 0.0)


class Network:
    """Affine-ReLU chain with identity output and built-in input/output scaling."""

    def __init__(self, weights, biases, x_lo, x_hi, y_mu=0.0, y_sd=1.0):
        self.weights = list(weights)
        self.biases = list(biases)
        self.x_lo = np.asarray(x_lo, dtype=weights[0].dtype)
        self.x_hi = np.asarray(x_hi, dtype=weights[0].dtype)
        self.y_mu = float(y_mu)
        self.y_sd = float(y_sd)
        for w_in, w_out in zip(self.weights[:-1], self.weights[1:]):
            if w_in.shape[1] != w_out.shape[0]:
                raise ValueError("consecutive layer dimensions do not chain")

    @classmethod
    def init(cls, sizes, x_lo, x_hi, y_mu=0.0, y_sd=1.0, seed=0, dtype=np.float64):
        """He-scaled random initialization; biases zero."""
        rng = np.random.default_rng(seed)
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out))
            weights.append(w.astype(dtype))
            biases.append(np.zeros(fan_out, dtype=dtype))
        return cls(weights, biases, x_lo, x_hi, y_mu, y_sd)

    @property
    def dtype(self):
        return self.weights[0].dtype

    @property
    def sizes(self):
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_hidden(self):
        return len(self.weights) - 1

    def normalize_x(self, X):
        X = np.asarray(X, dtype=self.dtype)
        return 2.0 * (X - self.x_lo) / (self.x_hi - self.x_lo) - 1.0

    def forward_norm(self, Xn):
        """Forward pass on pre-normalized inputs; returns normalized outputs."""
        a = Xn
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            a = relu(a @ w + b)
        return (a @ self.weights[-1] + self.biases[-1]).ravel()

    def forward(self, x):
        """Raw-unit prediction for one point (d,) or a batch (n, d)."""
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        if X.shape[1] != self.weights[0].shape[0]:
            raise ValueError(
                f"input dimension {X.shape[1]} does not match network input {self.weights[0].shape[0]}"
            )
        out = self.forward_norm(self.normalize_x(X)) * self.y_sd + self.y_mu
        out = np.asarray(out, dtype=float)
        return float(out[0]) if single else out

    def checksum(self) -> str:
        h = hashlib.sha256()
        for w, b in zip(self.weights, self.biases):
            h.update(w.tobytes())
            h.update(b.tobytes())
        return h.hexdigest()

    def copy(self) -> "Network":
        return Network([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                       self.x_lo.copy(), self.x_hi.copy(), self.y_mu, self.y_sd)

    def to_dict(self) -> dict:
        return {
            "sizes": self.sizes,
            "dtype": str(self.dtype),
            "weights": [w.astype(np.float64).ravel().tolist() for w in self.weights],
            "biases": [b.astype(np.float64).tolist() for b in self.biases],
            "activation": ["relu"] * self.n_hidden + ["identity"],
            "x_lo": np.asarray(self.x_lo, dtype=np.float64).tolist(),
            "x_hi": np.asarray(self.x_hi, dtype=np.float64).tolist(),
            "y_mu": self.y_mu,
            "y_sd": self.y_sd,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Network":
        dtype = np.dtype(d["dtype"])
        sizes = d["sizes"]
        weights = [np.asarray(flat, dtype=dtype).reshape(fi, fo)
                   for flat, fi, fo in zip(d["weights"], sizes[:-1], sizes[1:])]
        biases = [np.asarray(b, dtype=dtype) for b in d["biases"]]
        return cls(weights, biases, np.asarray(d["x_lo"]), np.asarray(d["x_hi"]),
                   d["y_mu"], d["y_sd"])


def forward(net: Network, x):
    return net.forward(x)


# --------------------------------------------------------------------------
# Backpropagation and ADAM.
# --------------------------------------------------------------------------

def _loss_grad_batch(net: Network, Xn, yn, lam):
    """Normalized-space loss and parameter gradients for one batch."""
    acts = [Xn]
    zs = []
    a = Xn
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        z = a @ w + b
        zs.append(z)
        a = relu(z)
        acts.append(a)
    out = (a @ net.weights[-1] + net.biases[-1]).ravel()
    resid = out - yn
    n = Xn.shape[0]
    loss = float(resid @ resid) / n
    gw = [None] * len(net.weights)
    gb = [None] * len(net.biases)
    delta = (2.0 / n) * resid[:, None].astype(net.dtype)
    gw[-1] = acts[-1].T @ delta
    gb[-1] = delta.sum(axis=0)
    da = delta @ net.weights[-1].T
    for layer in range(len(net.weights) - 2, -1, -1):
        dz = da * (zs[layer] > 0)
        gw[layer] = acts[layer].T @ dz
        gb[layer] = dz.sum(axis=0)
        if layer:
            da = dz @ net.weights[layer].T
    if lam > 0.0:
        loss += lam * sum(float(np.sum(w.astype(np.float64) ** 2)) for w in net.weights)
        for i, w in enumerate(net.weights):
            gw[i] = gw[i] + 2.0 * lam * w
    return loss, gw, gb


def mse_loss(net: Network, X, y) -> float:
    """Raw-unit mean squared error of the network on (X, y)."""
    pred = net.forward(np.atleast_2d(np.asarray(X, dtype=float)))
    y = np.asarray(y, dtype=float).ravel()
    return float(np.mean((pred - y) ** 2))


def regularization_loss(net: Network, lam: float) -> float:
    """lambda * sum of squared weights (biases excluded)."""
    return lam * sum(float(np.sum(w.astype(np.float64) ** 2)) for w in net.weights)


def _adam_train(net: Network, X, y, config: TrainConfig, lam: float):
    """Train in place; returns the normalized-space loss history.

    history[0] is the pre-training loss; one entry per epoch follows
    (epoch-mean batch loss).  With epochs == 0 only the initial loss is
    recorded.
    """
    Xn = net.normalize_x(np.atleast_2d(np.asarray(X, dtype=float)))
    yn = ((np.asarray(y, dtype=float).ravel() - net.y_mu) / net.y_sd).astype(net.dtype)
    n = Xn.shape[0]
    batch = config.batch_size or (n if n <= AUTO_BATCH_LIMIT else AUTO_BATCH_LIMIT)
    batch = min(batch, n)
    rng = np.random.default_rng(config.seed)
    m_w = [np.zeros_like(w) for w in net.weights]
    v_w = [np.zeros_like(w) for w in net.weights]
    m_b = [np.zeros_like(b) for b in net.biases]
    v_b = [np.zeros_like(b) for b in net.biases]
    lr = config.learning_rate
    t = 0
    loss0, _, _ = _loss_grad_batch(net, Xn, yn, lam)
    history = [loss0]
    for _ in range(config.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        epoch_losses = []
        for start in range(0, n, batch):
            idx = order[start:start + batch]
            loss, gw, gb = _loss_grad_batch(net, Xn[idx], yn[idx], lam)
            if not np.isfinite(loss):
                raise RuntimeError(
                    "training loss became non-finite; lower the learning rate "
                    f"(current {lr})"
                )
            epoch_losses.append(loss)
            t += 1
            corr1 = 1.0 - ADAM_BETA1**t
            corr2 = 1.0 - ADAM_BETA2**t
            for i in range(len(net.weights)):
                m_w[i] = ADAM_BETA1 * m_w[i] + (1 - ADAM_BETA1) * gw[i]
                v_w[i] = ADAM_BETA2 * v_w[i] + (1 - ADAM_BETA2) * gw[i] ** 2
                net.weights[i] -= (lr * (m_w[i] / corr1) / (np.sqrt(v_w[i] / corr2) + ADAM_EPS)).astype(net.dtype)
                m_b[i] = ADAM_BETA1 * m_b[i] + (1 - ADAM_BETA1) * gb[i]
                v_b[i] = ADAM_BETA2 * v_b[i] + (1 - ADAM_BETA2) * gb[i] ** 2
                net.biases[i] -= (lr * (m_b[i] / corr1) / (np.sqrt(v_b[i] / corr2) + ADAM_EPS)).astype(net.dtype)
        history.append(float(np.mean(epoch_losses)))
    if config.lbfgs_refine and config.epochs > 0:
        _lbfgs_refine(net, Xn, yn, lam, config.lbfgs_maxiter)
        final, _, _ = _loss_grad_batch(net, Xn, yn, lam)
        history.append(final)
    return history


def flat_params(net: Network) -> np.ndarray:
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.astype(np.float64).ravel())
        parts.append(b.astype(np.float64).ravel())
    return np.concatenate(parts)


def set_flat_params(net: Network, vec: np.ndarray) -> None:
    pos = 0
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        net.weights[i] = vec[pos:pos + w.size].reshape(w.shape).astype(net.dtype)
        pos += w.size
        net.biases[i] = vec[pos:pos + b.size].astype(net.dtype)
        pos += b.size


def loss_and_grad_flat(net: Network, X, y, lam: float):
    """Full-batch normalized loss and flat gradient (for checks and L-BFGS)."""
    Xn = net.normalize_x(np.atleast_2d(np.asarray(X, dtype=float)))
    yn = ((np.asarray(y, dtype=float).ravel() - net.y_mu) / net.y_sd).astype(net.dtype)
    loss, gw, gb = _loss_grad_batch(net, Xn, yn, lam)
    parts = []
    for w, b in zip(gw, gb):
        parts.append(np.asarray(w, dtype=np.float64).ravel())
        parts.append(np.asarray(b, dtype=np.float64).ravel())
    return loss, np.concatenate(parts)


def _lbfgs_refine(net: Network, Xn, yn, lam, maxiter):
    def fun(vec):
        set_flat_params(net, vec)
        loss, gw, gb = _loss_grad_batch(net, Xn, yn, lam)
        parts = []
        for w, b in zip(gw, gb):
            parts.append(np.asarray(w, dtype=np.float64).ravel())
            parts.append(np.asarray(b, dtype=np.float64).ravel())
        return loss, np.concatenate(parts)

    res = minimize(fun, flat_params(net), jac=True, method="L-BFGS-B",
                   options={"maxiter": maxiter})
    set_flat_params(net, res.x)


def train_lf(net: Network, lf_data, config: TrainConfig):
    """Train the low-fidelity network; returns (net, loss_history)."""
    X, y = lf_data
    if np.atleast_2d(np.asarray(X)).shape[0] < 1:
        raise ValueError("low-fidelity training requires at least one sample")
    history = _adam_train(net, X, y, config, lam=0.0)
    if config.epochs > 0 and not history[-1] <= history[0] * (1.0 + 1e-12) + 1e-30:
        raise RuntimeError("low-fidelity training diverged: final loss above initial")
    return net, history


@dataclass
class MfdnnModel:
    """Frozen low-fidelity network plus trained correction network."""

    lf_net: Network
    corr_net: Network
    lambda_reg: float
    meta: dict = field(default_factory=dict)

    def corr_input(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        ylf = self.lf_net.forward(X)
        return np.hstack([X, np.asarray(ylf, dtype=float).reshape(-1, 1)])

    def to_dict(self) -> dict:
        return {
            "kind": "mfdnn",
            "lf_net": self.lf_net.to_dict(),
            "corr_net": self.corr_net.to_dict(),
            "lambda_reg": self.lambda_reg,
            "meta": {k: v for k, v in self.meta.items() if not isinstance(v, np.ndarray)},
        }

    def save(self, path) -> None:
        import json

        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "MfdnnModel":
        return cls(lf_net=Network.from_dict(d["lf_net"]), corr_net=Network.from_dict(d["corr_net"]),
                   lambda_reg=d["lambda_reg"], meta=d.get("meta", {}))

    @classmethod
    def load(cls, path) -> "MfdnnModel":
        import json

        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def train_corr(model: MfdnnModel, hf_data, config: TrainConfig):
    """Train the correction network on (x, y_lf_hat(x)) -> y_hf.

    The low-fidelity network must remain bit-identical throughout; this is
    asserted via a checksum.
    """
    X, y = hf_data
    before = model.lf_net.checksum()
    inp = model.corr_input(X)
    history = _adam_train(model.corr_net, inp, y, config, lam=model.lambda_reg)
    if model.lf_net.checksum() != before:
        raise AssertionError("low-fidelity network changed during correction training")
    model.meta["corr_history"] = history
    return model, history


def corr_losses(model: MfdnnModel, hf_x, hf_y) -> dict:
    """Raw-unit correction losses: total L_c, data term L_h, penalty L_r."""
    l_h = float(np.mean((predict_hf(model, np.atleast_2d(hf_x)) - np.asarray(hf_y).ravel()) ** 2))
    l_r = regularization_loss(model.corr_net, model.lambda_reg)
    return {"L_c": l_h + l_r, "L_h": l_h, "L_r": l_r}


def predict_hf(model: MfdnnModel, x):
    """High-fidelity prediction at one point (d,) or a batch (n, d)."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    out = model.corr_net.forward(model.corr_input(np.atleast_2d(x)))
    out = np.atleast_1d(out)
    return float(out[0]) if single else out


def passthrough_correction(lf_net: Network, dim: int, hf_y_scale=(0.0, 1.0)) -> Network:
    """Correction network initialized to return its y_lf input unchanged.

    Uses a single hidden unit kept in the positive ReLU branch over the
    normalized input range [-1, 1].
    """
    dtype = lf_net.dtype
    w1 = np.zeros((dim + 1, 1), dtype=dtype)
    w1[dim, 0] = 1.0
    b1 = np.array([2.0], dtype=dtype)  # shift keeps the unit active on [-1, 1]
    w2 = np.array([[1.0]], dtype=dtype)
    b2 = np.array([-2.0], dtype=dtype)
    x_lo = np.concatenate([lf_net.x_lo, [-1.0]])
    x_hi = np.concatenate([lf_net.x_hi, [1.0]])
    net = Network([w1, w2], [b1, b2], x_lo, x_hi, y_mu=0.0, y_sd=1.0)
    return net


def _corr_scaling(lf_net: Network, lf_x, hf_y):
    """Input box and output standardization for the correction network."""
    ylf = lf_net.forward(np.atleast_2d(np.asarray(lf_x, dtype=float)))
    y_lo, y_hi = float(np.min(ylf)), float(np.max(ylf))
    if y_hi <= y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    x_lo = np.concatenate([np.asarray(lf_net.x_lo, dtype=float), [y_lo]])
    x_hi = np.concatenate([np.asarray(lf_net.x_hi, dtype=float), [y_hi]])
    hf_y = np.asarray(hf_y, dtype=float)
    y_sd = float(np.std(hf_y))
    return x_lo, x_hi, float(np.mean(hf_y)), y_sd if y_sd > 0 else 1.0


def train_mfdnn(lf_x, lf_y, hf_x, hf_y, *, lf_hidden=(64, 64, 40), corr_hidden=(8,),
                config: TrainConfig | None = None, dtype=np.float64,
                corr_config: TrainConfig | None = None) -> MfdnnModel:
    """End-to-end two-stage training with data-derived scalings."""
    config = config or TrainConfig()
    corr_config = corr_config or replace(config, seed=config.seed + 1)
    lf_x = np.atleast_2d(np.asarray(lf_x, dtype=float))
    lf_y = np.asarray(lf_y, dtype=float).ravel()
    hf_x = np.atleast_2d(np.asarray(hf_x, dtype=float))
    hf_y = np.asarray(hf_y, dtype=float).ravel()
    dim = lf_x.shape[1]
    x_lo, x_hi = lf_x.min(axis=0), lf_x.max(axis=0)
    span = np.where(x_hi > x_lo, x_hi - x_lo, 1.0)
    x_hi = x_lo + span
    y_sd = float(np.std(lf_y))
    lf_net = Network.init([dim, *lf_hidden, 1], x_lo, x_hi, y_mu=float(np.mean(lf_y)),
                          y_sd=y_sd if y_sd > 0 else 1.0, seed=config.seed, dtype=dtype)
    _, lf_history = train_lf(lf_net, (lf_x, lf_y), config)
    cx_lo, cx_hi, cy_mu, cy_sd = _corr_scaling(lf_net, lf_x, hf_y)
    corr_net = Network.init([dim + 1, *corr_hidden, 1], cx_lo, cx_hi, y_mu=cy_mu, y_sd=cy_sd,
                            seed=corr_config.seed, dtype=dtype)
    model = MfdnnModel(lf_net=lf_net, corr_net=corr_net,
                       lambda_reg=corr_config.lambda_reg,
                       meta={"lf_history": lf_history, "seed": config.seed,
                             "epochs": config.epochs, "learning_rate": config.learning_rate})
    train_corr(model, (hf_x, hf_y), corr_config)
    return model


def kfold_validate(model_config: dict, data, K: int, seed: int = 0) -> dict:
    """K-fold cross-validation over the expensive samples.

    ``data`` is a MultiFidelityDataset (raw units) or an
    ``(lf_x, lf_y, hf_x, hf_y)`` tuple.  The low-fidelity network trains
    once; the correction network retrains per fold.
    """
    if hasattr(data, "x_cheap"):
        lf_x, lf_y = data.x_cheap, data.y_cheap
        hf_x, hf_y = data.x_expensive, data.y_expensive
    else:
        lf_x, lf_y, hf_x, hf_y = data
    hf_x = np.atleast_2d(np.asarray(hf_x, dtype=float))
    hf_y = np.asarray(hf_y, dtype=float).ravel()
    P = hf_x.shape[0]
    if K < 2:
        raise ValueError("K must be at least 2")
    if K > P:
        raise ValueError(f"K={K} exceeds the number of expensive samples ({P})")
    cfg = _config_from_dict(model_config, seed)
    dtype = np.dtype(model_config.get("dtype", "float64"))
    lf_x2 = np.atleast_2d(np.asarray(lf_x, dtype=float))
    lf_y2 = np.asarray(lf_y, dtype=float).ravel()
    x_lo, x_hi = lf_x2.min(axis=0), lf_x2.max(axis=0)
    x_hi = x_lo + np.where(x_hi > x_lo, x_hi - x_lo, 1.0)
    ysd = float(np.std(lf_y2))
    lf_net = Network.init([lf_x2.shape[1], *model_config["lf_hidden"], 1], x_lo, x_hi,
                          y_mu=float(np.mean(lf_y2)), y_sd=ysd if ysd > 0 else 1.0,
                          seed=seed, dtype=dtype)
    train_lf(lf_net, (lf_x2, lf_y2), cfg)
    rng = np.random.default_rng(seed)
    order = rng.permutation(P)
    folds = np.array_split(order, K)
    fold_mse = []
    for fi, hold in enumerate(folds):
        keep = np.setdiff1d(order, hold)
        cx_lo, cx_hi, cy_mu, cy_sd = _corr_scaling(lf_net, lf_x2, hf_y[keep])
        corr = Network.init([lf_x2.shape[1] + 1, *model_config["corr_hidden"], 1],
                            cx_lo, cx_hi, y_mu=cy_mu, y_sd=cy_sd, seed=seed + 1 + fi, dtype=dtype)
        model = MfdnnModel(lf_net=lf_net, corr_net=corr,
                           lambda_reg=cfg.lambda_reg)
        train_corr(model, (hf_x[keep], hf_y[keep]), replace(cfg, seed=seed + 1 + fi))
        pred = predict_hf(model, hf_x[hold])
        fold_mse.append(float(np.mean((np.atleast_1d(pred) - hf_y[hold]) ** 2)))
    return {"fold_mse": fold_mse, "mean_mse": float(np.mean(fold_mse)), "folds": [f.tolist() for f in folds]}


def _config_from_dict(d: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=int(d.get("epochs", 1800)),
        learning_rate=float(d.get("learning_rate", 1e-3)),
        batch_size=d.get("batch_size"),
        lambda_reg=float(d.get("lambda_reg", 1e-4)),
        seed=seed,
        lbfgs_refine=bool(d.get("lbfgs_refine", False)),
    )


def grid_search(lf_data, hf_data, ranges: dict | None = None, seed: int = 0, *,
                epochs: int = 200, kfolds: int | None = None) -> dict:
    """Exhaustive sweep over (hidden layers, uniform width, learning rate).

    Each evaluated configuration applies the same hidden-layer count and
    width to both sub-networks and is scored by K-fold validation MSE
    (K capped by the expensive sample count).  Returns the best
    configuration plus the full evaluation table.
    """
    ranges = ranges or {}
    layers = tuple(ranges.get("layers", GRID_LAYERS))
    widths = tuple(ranges.get("widths", GRID_WIDTHS))
    rates = tuple(ranges.get("learning_rates", GRID_LEARNING_RATES))
    if not layers or not widths or not rates:
        raise ValueError("grid_search ranges must be nonempty")
    lf_x, lf_y = lf_data
    hf_x, hf_y = hf_data
    P = np.atleast_2d(np.asarray(hf_x)).shape[0]
    K = kfolds or min(3, P)
    evaluations = []
    best = None
    for h in layers:
        for w in widths:
            for lr in rates:
                cfg = {"lf_hidden": (w,) * h, "corr_hidden": (w,) * h,
                       "learning_rate": lr, "epochs": epochs}
                score = kfold_validate(cfg, (lf_x, lf_y, hf_x, hf_y), K, seed)["mean_mse"]
                entry = {"layers": h, "width": w, "learning_rate": lr, "val_mse": score}
                evaluations.append(entry)
                if best is None or score < best["val_mse"]:
                    best = entry
    return {"best": best, "evaluations": evaluations}
