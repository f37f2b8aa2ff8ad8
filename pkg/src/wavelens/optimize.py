"""First-order lens-parameter optimization for depth discriminability.

The objective scores a PSF stack: a correlation term (mean pairwise cosine
similarity between same-channel depth slices; lower means more
distinguishable) plus a concentration term (mean second moment about the
window center; lower means tighter PSFs) that rules out the degenerate
"spread everything" solution. Gradients flow through the analytic adjoint;
updates use bias-corrected Adam. Parameters are stepped in micrometers of
sag so the standard learning-rate scale applies to O(1) quantities.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .adjoint import _reverse_slice
from .config import AnnularSurface, FreeformSurface, OpticalConfig
from .errors import ConfigError, NumericalError
from .optics import PsfEngine, PSFStack

METERS_PER_STEP_UNIT = 1e-6  # optimizer works in micrometers of sag

INIT_PRESETS = ("defocus", "astigmatism", "annular")
INIT_PERTURBATION = 1e-8  # meters; breaks the symmetric saddle at zero sag


@dataclass(frozen=True)
class Objective:
    """Weights of the two loss terms; at least one must be positive."""

    w_correlation: float = 1.0
    w_concentration: float = 0.1

    def __post_init__(self):
        if self.w_correlation < 0 or self.w_concentration < 0:
            raise ConfigError("objective weights must be >= 0")
        if self.w_correlation == 0 and self.w_concentration == 0:
            raise ConfigError("at least one objective weight must be positive")


def _moment_map(crop_size: int) -> np.ndarray:
    """Squared radius about the window center, normalized to the half-width."""
    idx = np.arange(crop_size) - crop_size // 2
    half = crop_size // 2
    return (idx[None, :] ** 2 + idx[:, None] ** 2) / float(half**2)


def correlation_term(stack: PSFStack) -> float:
    """Mean pairwise cosine similarity over channels and depth pairs."""
    num_depths = stack.num_depths
    if num_depths < 2:
        raise ConfigError("correlation term needs at least 2 depth bins")
    flat = stack.psfs.reshape(num_depths, 3, -1)
    norms = np.linalg.norm(flat, axis=-1)
    total = 0.0
    count = 0
    for c in range(3):
        for j in range(num_depths):
            for jp in range(j + 1, num_depths):
                total += float(flat[j, c] @ flat[jp, c]) / (norms[j, c] * norms[jp, c])
                count += 1
    return total / count


def concentration_term(stack: PSFStack) -> float:
    """Mean normalized second moment of the slices (linear in each PSF)."""
    moment = _moment_map(stack.crop_size)
    return float(np.mean(np.sum(stack.psfs * moment, axis=(-2, -1))))


def discriminability_loss(stack: PSFStack,
                          objective: Objective = Objective()) -> float:
    """Lower is better: distinct and concentrated per-depth PSFs."""
    loss = 0.0
    if objective.w_correlation > 0:
        loss += objective.w_correlation * correlation_term(stack)
    else:
        # still enforce the J >= 2 contract
        if stack.num_depths < 2:
            raise ConfigError("discriminability loss needs at least 2 depth bins")
    if objective.w_concentration > 0:
        loss += objective.w_concentration * concentration_term(stack)
    return loss


def loss_upstreams(stack: PSFStack, objective: Objective) -> np.ndarray:
    """dL/dPSF per (j, c) slice, shaped like stack.psfs."""
    num_depths = stack.num_depths
    if num_depths < 2:
        raise ConfigError("discriminability loss needs at least 2 depth bins")
    flat = stack.psfs.reshape(num_depths, 3, -1)
    norms = np.linalg.norm(flat, axis=-1)
    grads = np.zeros_like(flat)
    if objective.w_correlation > 0:
        pair_count = 3 * (num_depths * (num_depths - 1) // 2)
        w = objective.w_correlation / pair_count
        for c in range(3):
            for j in range(num_depths):
                for jp in range(j + 1, num_depths):
                    p, q = flat[j, c], flat[jp, c]
                    np_, nq = norms[j, c], norms[jp, c]
                    s = float(p @ q)
                    grads[j, c] += w * (q / (np_ * nq) - s * p / (np_**3 * nq))
                    grads[jp, c] += w * (p / (np_ * nq) - s * q / (nq**3 * np_))
    out = grads.reshape(stack.psfs.shape)
    if objective.w_concentration > 0:
        moment = _moment_map(stack.crop_size)
        out = out + (objective.w_concentration / (3 * num_depths)) * moment
    return out


def loss_and_grad(engine: PsfEngine, params: np.ndarray,
                  objective: Objective = Objective()):
    """Loss, d loss / d params (per meter of sag), and the stack, analytically.

    One taped forward pass per slice serves both the loss and the reverse
    sweep; slices accumulate in a fixed order for reproducibility.
    """
    cfg = engine.config
    sag = engine.sag(params)
    crop = cfg.crop_size
    depths = cfg.depth_bins
    psfs = np.empty((len(depths), 3, crop, crop))
    tapes = []
    for j, z in enumerate(depths):
        for c, lam in enumerate(cfg.wavelengths):
            psf_slice, tape = engine.psf_forward(z, lam, sag=sag, keep_tape=True)
            psfs[j, c] = psf_slice
            tapes.append(tape)
    stack = PSFStack(psfs=psfs, depths=depths, wavelengths=cfg.wavelengths,
                     pitch=cfg.grid.pitch)
    loss = discriminability_loss(stack, objective)
    upstreams = loss_upstreams(stack, objective)
    grad = np.zeros(cfg.n_params)
    for idx, tape in enumerate(tapes):
        j, c = divmod(idx, 3)
        grad += _reverse_slice(engine, tape, upstreams[j, c])
    return loss, grad, stack


# ---------------------------------------------------------------------------
# Adam
# ---------------------------------------------------------------------------

@dataclass
class AdamState:
    """Bias-corrected Adam accumulators (units follow the parameters)."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: np.ndarray | None = None
    v: np.ndarray | None = None


def adam_step(state: AdamState, grad: np.ndarray, params: np.ndarray):
    """One standard Adam update; returns (new_params, new_state)."""
    grad = np.asarray(grad, dtype=float)
    params = np.asarray(params, dtype=float)
    if state.m is None:
        state = AdamState(lr=state.lr, beta1=state.beta1, beta2=state.beta2,
                          eps=state.eps, step=state.step,
                          m=np.zeros_like(params), v=np.zeros_like(params))
    if state.m.shape != params.shape or grad.shape != params.shape:
        raise ConfigError("Adam state/gradient shape mismatch")
    t = state.step + 1
    m = state.beta1 * state.m + (1 - state.beta1) * grad
    v = state.beta2 * state.v + (1 - state.beta2) * grad**2
    m_hat = m / (1 - state.beta1**t)
    v_hat = v / (1 - state.beta2**t)
    new_params = params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return new_params, AdamState(lr=state.lr, beta1=state.beta1,
                                 beta2=state.beta2, eps=state.eps, step=t,
                                 m=m, v=v)


# ---------------------------------------------------------------------------
# Optimization loop
# ---------------------------------------------------------------------------

@dataclass
class RunHistory:
    """Per-iteration record of one optimization run."""

    losses: list = field(default_factory=list)
    correlation_terms: list = field(default_factory=list)
    seed: int = 0
    snapshot_interval: int = 0
    snapshots: list = field(default_factory=list)  # (iteration, params list)
    best_loss: float = np.inf
    best_iteration: int = -1
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "losses": [float(x) for x in self.losses],
            "correlation_terms": [float(x) for x in self.correlation_terms],
            "seed": self.seed,
            "snapshot_interval": self.snapshot_interval,
            "snapshots": [
                {"iteration": it, "params": [float(p) for p in ps]}
                for it, ps in self.snapshots
            ],
            "best_loss": float(self.best_loss),
            "best_iteration": self.best_iteration,
            "wall_time": self.wall_time,
        }


def initial_params(config: OpticalConfig, init: str, seed: int) -> np.ndarray:
    """Init preset (meters of sag) plus a small seeded perturbation.

    The perturbation matters: at exactly zero sag the objective is
    symmetric under sign flips of every non-rotationally-symmetric mode,
    so those gradients vanish and plain descent would never leave the
    symmetric subspace.
    """
    if init not in INIT_PRESETS:
        raise ConfigError(f"unknown init preset {init!r}; choose from {INIT_PRESETS}")
    element = config.element
    if element is None:
        raise ConfigError("optimization requires a freeform or annular element")
    params = np.zeros(config.n_params)
    if init == "annular":
        if not isinstance(element, AnnularSurface):
            raise ConfigError("init 'annular' requires an annular element")
    else:
        if not isinstance(element, FreeformSurface):
            raise ConfigError(f"init {init!r} requires a freeform element")
        if init == "astigmatism":
            params[5] = 2.0 * config.lens.dispersion.lambda_design  # Noll 6
    rng = np.random.default_rng(seed)
    params = params + rng.uniform(-INIT_PERTURBATION, INIT_PERTURBATION,
                                  size=params.shape)
    return params


def optimize(config: OpticalConfig, objective: Objective | None = None,
             init: str = "defocus", iters: int = 500, seed: int = 0,
             lr: float = 1e-3, snapshot_interval: int = 0,
             coarse_to_fine: bool = False):
    """Gradient-descend the element parameters against the discriminability loss.

    Returns (best_params_meters, history). The returned parameters are the
    best-loss snapshot, not necessarily the last iterate. `lr` applies to
    parameters expressed in micrometers of sag. With `coarse_to_fine`, the
    first half of the iterations run on every other depth bin.
    """
    if iters < 1:
        raise ConfigError(f"iteration count must be >= 1, got {iters}")
    objective = objective or Objective()
    params_m = initial_params(config, init, seed)

    coarse_iters = iters // 2 if (coarse_to_fine and len(config.depth_bins) >= 4) else 0
    full_engine = PsfEngine(config)
    coarse_engine = None
    if coarse_iters:
        from dataclasses import replace
        coarse_engine = PsfEngine(replace(config,
                                          depth_bins=config.depth_bins[::2]))

    history = RunHistory(seed=seed, snapshot_interval=snapshot_interval)
    state = AdamState(lr=lr)
    params_u = params_m / METERS_PER_STEP_UNIT
    best_params = params_m.copy()
    started = time.perf_counter()
    for t in range(iters):
        engine = coarse_engine if t < coarse_iters else full_engine
        loss, grad_m, stack = loss_and_grad(engine, params_m, objective)
        if not np.isfinite(loss) or not np.all(np.isfinite(grad_m)):
            raise NumericalError(
                f"non-finite loss/gradient at iteration {t}; "
                f"params snapshot: {params_m.tolist()}")
        history.losses.append(loss)
        history.correlation_terms.append(correlation_term(stack))
        if loss < history.best_loss and engine is full_engine:
            history.best_loss = loss
            history.best_iteration = t
            best_params = params_m.copy()
        if snapshot_interval and t % snapshot_interval == 0:
            history.snapshots.append((t, params_m.tolist()))
        params_u, state = adam_step(state, grad_m * METERS_PER_STEP_UNIT, params_u)
        params_m = params_u * METERS_PER_STEP_UNIT
    if not np.isfinite(history.best_loss):
        # coarse phase covered every iteration; fall back to last iterate
        history.best_loss = history.losses[-1]
        history.best_iteration = iters - 1
        best_params = params_m.copy()
    history.wall_time = time.perf_counter() - started
    return best_params, history
