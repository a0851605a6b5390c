"""Block-coordinate training of the sparse attributed-graphlet model.

Objective at a fixed ``lam``::

    0.5 * sum_i max(1 - y_i f_i, 0)^2 + lam * sum_H |beta_H|,
    f_i = sum_H beta_H psi(G_i; H) + beta0

Each epoch activates graphlets whose coefficient would leave zero
(safe pruning over the mining tree), then takes a proximal step on beta,
solves for beta0 exactly and takes a gradient step on the attribute vectors
of graphlets with nonzero coefficients.
"""

from __future__ import annotations

import bisect
import logging
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .agis import EmbeddingTable, find_embeddings
from .graph import mean_attributes_by_label
from .mining import build_roots, create_children, min_dfs_code

logger = logging.getLogger(__name__)

# pruning is applied only when the bound clears lambda by this relative
# margin, so rounding in the bound can never hide an eligible graphlet
PRUNE_MARGIN = 1e-12


@dataclass
class OptimizerConfig:
    maxpat: int = 5
    rho: float = 0.1
    grid_size: int = 100
    lambda_min_ratio: float = 0.01
    patience: int = 5
    max_epoch: int = 100
    eta0: float = 1.0
    alpha0: float = 1.0
    shrink: float = 0.5
    max_halvings: int = 50
    armijo: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        for name in ("maxpat", "grid_size", "patience", "max_epoch", "max_halvings"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        for name in ("rho", "eta0", "alpha0", "armijo"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.lambda_min_ratio < 1:
            raise ValueError("lambda_min_ratio must lie in (0, 1)")
        if not 0 < self.shrink < 1:
            raise ValueError("shrink must lie in (0, 1)")


# ---------------------------------------------------------------- scalar pieces


def loss_and_derivative(y, f):
    """Squared hinge loss ``max(1 - y f, 0)^2`` and its derivative in ``f``."""
    m = max(1.0 - y * f, 0.0)
    return m * m, -2.0 * y * m


def prox(a, t):
    """Soft-thresholding at level ``t``; works elementwise on arrays."""
    a = np.asarray(a, dtype=np.float64)
    out = np.where(a >= t, a - t, np.where(a <= -t, a + t, 0.0))
    return float(out) if out.ndim == 0 else out


def _margins(y, f):
    return 1.0 - y * f


def loss_term(y, f):
    m = np.maximum(_margins(y, f), 0.0)
    return 0.5 * float(np.dot(m, m))


def grad_beta(psi, y, f):
    """Gradient of the loss term with respect to beta_H.

    ``psi`` is the feature column ``(n,)`` or a matrix ``(n, k)`` of columns.
    """
    m = _margins(y, f)
    r = np.where(m > 0, -y * m, 0.0)
    return r @ psi


def pruning_bound(psi, y, f):
    """Upper bound on |g| for every graphlet extending the one with scores ``psi``."""
    m = _margins(y, f)
    act = m > 0
    w = np.where(act, m, 0.0) * psi
    pos = float(np.sum(w[y > 0]))
    neg = float(np.sum(w[y < 0]))
    return max(pos, neg)


# ---------------------------------------------------------------- training state


class Problem:
    """Training/validation graphs stacked for vectorised scoring."""

    def __init__(self, train, val, config):
        if len(train) == 0:
            raise ValueError("training set is empty")
        self.train = train
        self.val = val
        self.config = config
        self.rho = float(config.rho)
        self.maxpat = int(config.maxpat)
        self.y = train.y
        self.y_val = val.y if val is not None else np.zeros(0)
        self.means = mean_attributes_by_label(train)
        self.attrs, self.offsets = _stack(train)
        if val is not None and len(val):
            self.val_attrs, self.val_offsets = _stack(val)
        else:
            self.val_attrs, self.val_offsets = np.zeros((0, train.attribute_dim)), np.zeros(0, dtype=np.int64)

    @property
    def n(self):
        return len(self.y)

    def initial_attributes(self, node_labels):
        return np.array([self.means[lab] for lab in node_labels], dtype=np.float64)

    def table(self, embeddings, width):
        return EmbeddingTable(embeddings, self.offsets, self.n, width)

    def initial_scores(self, candidate):
        z = self.initial_attributes(candidate.node_labels)
        table = self.table(candidate.embeddings, len(candidate.node_labels))
        return table.scores(z, self.attrs, self.rho)[0]


def _stack(dataset):
    sizes = np.array([g.n_nodes for g in dataset.graphs], dtype=np.int64)
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]]).astype(np.int64)
    attrs = np.concatenate([g.attributes for g in dataset.graphs], axis=0)
    return attrs, offsets


@dataclass
class Candidate:
    """A pattern offered for activation, independent of where it came from."""

    key: tuple
    node_labels: tuple
    edges: tuple
    embeddings: dict


def canonical_candidate(node_labels, edges, embeddings):
    """Renumber a pattern's nodes into minimal-DFS-code order.

    Patterns reaching the optimizer from different sources then share one
    node numbering and one lexicographic embedding order, which fixes the
    injection chosen at score ties.
    """
    code, order = min_dfs_code(node_labels, edges)
    inv = {old: new for new, old in enumerate(order)}
    labels = tuple(int(node_labels[old]) for old in order)
    new_edges = tuple(sorted(tuple(sorted((inv[u], inv[v]))) for u, v in edges))
    cols = np.asarray(order, dtype=np.int64)
    emb = {}
    for gi, rows in embeddings.items():
        arr = np.asarray(rows, dtype=np.int64).reshape(-1, len(order))[:, cols]
        emb[gi] = arr[np.lexsort(arr.T[::-1])] if len(arr) > 1 else arr
    return Candidate((labels[0], code), labels, new_edges, emb)


class ActiveGraphlet:
    """Member of the active set: pattern, trainable attributes and score caches."""

    def __init__(self, problem, candidate):
        self.key = candidate.key
        self.node_labels = tuple(candidate.node_labels)
        self.edges = tuple(candidate.edges)
        self.z = problem.initial_attributes(self.node_labels)
        width = len(self.node_labels)
        self.train_table = problem.table(candidate.embeddings, width)
        if problem.val is not None and len(problem.val):
            val_emb = {}
            for j, g in enumerate(problem.val.graphs):
                rows = find_embeddings(self.node_labels, self.edges, g)
                if len(rows):
                    val_emb[j] = rows
            self.val_table = EmbeddingTable(val_emb, problem.val_offsets, len(problem.val), width)
        else:
            self.val_table = None
        self.refresh(problem)

    def refresh(self, problem):
        self.psi, self.best = self.train_table.scores(self.z, problem.attrs, problem.rho)
        if self.val_table is not None:
            self.psi_val = self.val_table.scores(self.z, problem.val_attrs, problem.rho)[0]
        else:
            self.psi_val = np.zeros(0)


class ModelState:
    """beta, beta0 and the active set, with cached training predictions."""

    def __init__(self, problem, beta0=0.0):
        self.problem = problem
        self.active = []
        self.keys = set()
        self.beta = np.zeros(0)
        self.beta0 = float(beta0)
        self.f = np.full(problem.n, self.beta0)

    def psi_matrix(self):
        if not self.active:
            return np.zeros((self.problem.n, 0))
        return np.column_stack([h.psi for h in self.active])

    def predictions(self, beta=None, beta0=None):
        beta = self.beta if beta is None else beta
        beta0 = self.beta0 if beta0 is None else beta0
        return self.psi_matrix() @ beta + beta0

    def refresh_predictions(self):
        self.f = self.predictions()

    def val_predictions(self):
        nv = len(self.problem.y_val)
        if not self.active:
            return np.full(nv, self.beta0)
        return np.column_stack([h.psi_val for h in self.active]) @ self.beta + self.beta0

    def add(self, candidates):
        """Activate candidates (beta = 0, per-label attributes); keeps key order."""
        for c in candidates:
            if c.key in self.keys:
                continue
            h = ActiveGraphlet(self.problem, c)
            pos = bisect.bisect_left([a.key for a in self.active], h.key)
            self.active.insert(pos, h)
            self.beta = np.insert(self.beta, pos, 0.0)
            self.keys.add(h.key)

    def nonzero_count(self):
        return int(np.count_nonzero(self.beta))


def objective(state, lam):
    return loss_term(state.problem.y, state.f) + lam * float(np.sum(np.abs(state.beta)))


# ---------------------------------------------------------------- block updates


def update_beta(state, lam, config):
    """One ISTA step on all active coefficients with backtracking on ``eta``.

    Returns True when a step was accepted.
    """
    if not state.active:
        return True
    y = state.problem.y
    psi = state.psi_matrix()
    g = grad_beta(psi, y, state.f)
    base = loss_term(y, state.f)
    eta = config.eta0
    for _ in range(config.max_halvings + 1):
        new = prox(state.beta - eta * g, eta * lam)
        new = np.atleast_1d(new)
        d = new - state.beta
        f_new = psi @ new + state.beta0
        if loss_term(y, f_new) <= base + float(g @ d) + float(d @ d) / (2.0 * eta):
            state.beta = new
            state.f = f_new
            return True
        eta *= config.shrink
    logger.info("beta step skipped: backtracking exhausted at lambda=%g", lam)
    return False


def optimal_bias(s, y, incumbent=0.0):
    """Exact minimiser of ``sum_i max(1 - y_i (s_i + b), 0)^2`` over ``b``.

    The active set only changes at ``b = y_i - s_i``; on every segment
    between sorted breakpoints the unconstrained minimiser is the mean of
    ``y_i - s_i`` over the active instances, and the feasible one is optimal.
    When the incumbent already has zero loss it is kept.
    """
    s = np.asarray(s, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    t = y - s
    if not np.any(1.0 - y * (s + incumbent) > 0):
        return float(incumbent)
    order = np.argsort(t, kind="stable")
    ts = t[order]
    ys = y[order]
    n = len(ts)
    pos = ys > 0
    # active on segment k (between ts[k-1] and ts[k]): positives with t >= ts[k],
    # negatives with t <= ts[k-1]
    pos_t = np.where(pos, ts, 0.0)
    neg_t = np.where(~pos, ts, 0.0)
    pos_sum_right = np.concatenate([np.cumsum(pos_t[::-1])[::-1], [0.0]])
    pos_cnt_right = np.concatenate([np.cumsum(pos[::-1])[::-1], [0]])
    neg_sum_left = np.concatenate([[0.0], np.cumsum(neg_t)])
    neg_cnt_left = np.concatenate([[0], np.cumsum(~pos)])
    cnt = pos_cnt_right + neg_cnt_left
    lo = np.concatenate([[-np.inf], ts])
    hi = np.concatenate([ts, [np.inf]])

    def value(b):
        m = np.maximum(1.0 - y * (s + b), 0.0)
        return float(np.dot(m, m))

    best_b, best_v = None, None
    fallback = []
    for k in range(n + 1):
        if cnt[k] == 0:
            continue
        b = (pos_sum_right[k] + neg_sum_left[k]) / cnt[k]
        if lo[k] <= b <= hi[k]:
            v = value(b)
            if best_v is None or v < best_v:
                best_b, best_v = b, v
        else:
            fallback.append(min(max(b, lo[k]), hi[k]))
    if best_b is None:
        # rounding put every segment minimiser just outside its segment
        vals = [value(b) for b in fallback]
        best_b = fallback[int(np.argmin(vals))]
    return float(best_b)


def update_beta0(state):
    y = state.problem.y
    s = state.f - state.beta0
    before = loss_term(y, state.f)
    b = optimal_bias(s, y, state.beta0)
    f_new = s + b
    if loss_term(y, f_new) <= before:
        state.beta0 = b
        state.f = state.predictions()


def update_attributes(state, config):
    """One gradient step on the attribute vectors of graphlets with beta != 0.

    Step length by backtracking with the Armijo condition on the loss term.
    Returns True when a step was taken (or nothing needed updating).
    """
    prob = state.problem
    y = prob.y
    touched = [k for k, b in enumerate(state.beta) if b != 0.0]
    if not touched:
        return True
    m = _margins(y, state.f)
    dl_df = np.where(m > 0, -2.0 * y * m, 0.0)
    directions = {}
    sq = 0.0
    for k in touched:
        h = state.active[k]
        d = state.beta[k] * h.train_table.weighted_gradient(
            h.z, prob.attrs, prob.rho, h.psi, h.best, dl_df
        )
        directions[k] = d
        sq += float(np.sum(d * d))
    if sq == 0.0:
        return True
    # the loss term carries a factor 1/2, so its gradient is half the direction
    slope = 0.5 * sq
    base = loss_term(y, state.f)
    saved = {k: (state.active[k].z, state.active[k].psi, state.active[k].best) for k in touched}
    alpha = config.alpha0
    for _ in range(config.max_halvings + 1):
        for k in touched:
            h = state.active[k]
            h.z = saved[k][0] - alpha * directions[k]
            h.psi, h.best = h.train_table.scores(h.z, prob.attrs, prob.rho)
        f_new = state.predictions()
        if loss_term(y, f_new) <= base - config.armijo * alpha * slope:
            state.f = f_new
            for k in touched:
                h = state.active[k]
                if h.val_table is not None:
                    h.psi_val = h.val_table.scores(h.z, prob.val_attrs, prob.rho)[0]
            return True
        alpha *= config.shrink
    for k in touched:
        h = state.active[k]
        h.z, h.psi, h.best = saved[k]
    logger.info("attribute step skipped: backtracking exhausted")
    return False


# ---------------------------------------------------------------- selection


class TreeSelector:
    """Active-set growth by depth-first search of the mining tree with safe pruning."""

    def __init__(self, problem):
        self.problem = problem
        self.roots = build_roots(problem.train)
        self._psi = {}
        self.visited = 0

    def children(self, node):
        return create_children(node, self.problem.train, self.problem.maxpat)

    def initial_scores(self, node):
        psi = self._psi.get(node.key)
        if psi is None:
            psi = self.problem.initial_scores(node)
            self._psi[node.key] = psi
        return psi

    def lambda_max(self, state):
        """max_H |g_H| at the current state via bounded search (branch and bound)."""
        y, f = self.problem.y, state.f
        best = 0.0
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            self.visited += 1
            psi = self.initial_scores(node)
            if pruning_bound(psi, y, f) <= best:
                continue
            g = abs(float(grad_beta(psi, y, f)))
            if g > best:
                best = g
            stack.extend(reversed(self.children(node)))
        return best

    def select(self, state, lam):
        """New active-set members: every inactive H with |g_H| > lam."""
        y, f = self.problem.y, state.f
        added = []
        stack = list(reversed(self.roots))
        while stack:
            node = stack.pop()
            self.visited += 1
            if node.key not in state.keys:
                psi = self.initial_scores(node)
                if pruning_bound(psi, y, f) * (1.0 + PRUNE_MARGIN) <= lam:
                    continue
                if abs(float(grad_beta(psi, y, f))) > lam:
                    added.append(node)
            stack.extend(reversed(self.children(node)))
        return added


def gradient_pruning(selector, state, lam):
    """Grow the active set in place; returns the newly activated graphlets."""
    if lam <= 0:
        raise ValueError("lambda must be positive")
    new = selector.select(state, lam)
    state.add(new)
    return new


def compute_lambda_max(selector, state):
    """Return ``(lambda_max, ybar)``, resetting ``state`` to beta = 0, beta0 = ybar."""
    y = selector.problem.y
    ybar = float(np.sum(y) / len(y))
    if abs(ybar) == 1.0:
        warnings.warn("training set holds a single class; lambda_max is 0", RuntimeWarning)
    state.beta = np.zeros(len(state.active))
    state.beta0 = ybar
    state.refresh_predictions()
    return selector.lambda_max(state), ybar


# ---------------------------------------------------------------- path driver


@dataclass
class PathRecord:
    lam: float
    active_keys: list
    graphlets: list  # (key, node_labels, edges, attributes, beta) for the active set
    beta0: float
    val_loss: float
    val_accuracy: float
    train_loss: float
    train_accuracy: float
    epoch: int
    seconds: float
    visited: int

    @property
    def beta(self):
        return {key: b for key, _l, _e, _z, b in self.graphlets}

    @property
    def support(self):
        return sorted(key for key, _l, _e, _z, b in self.graphlets if b != 0.0)


@dataclass
class PathResult:
    lambda_max: float
    records: list = field(default_factory=list)
    log: list = field(default_factory=list)


LOG_COLUMNS = (
    "lambda_index", "lambda", "epoch", "objective", "train_loss", "val_loss",
    "active", "nonzero", "visited", "seconds",
)


def log_to_csv(rows, timing=False):
    cols = LOG_COLUMNS if timing else LOG_COLUMNS[:-1]
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _mean_sq_hinge(y, f):
    if len(y) == 0:
        return float("nan")
    m = np.maximum(1.0 - y * f, 0.0)
    return float(np.mean(m * m))


def _accuracy(y, f):
    if len(y) == 0:
        return float("nan")
    pred = np.where(f >= 0, 1.0, -1.0)
    return float(np.mean(pred == y))


def _snapshot(state, lam, epoch, started, visited):
    prob = state.problem
    f_val = state.val_predictions()
    return PathRecord(
        lam=float(lam),
        active_keys=[h.key for h in state.active],
        graphlets=[
            (h.key, h.node_labels, h.edges, h.z.copy(), float(b))
            for h, b in zip(state.active, state.beta)
        ],
        beta0=state.beta0,
        val_loss=_mean_sq_hinge(prob.y_val, f_val),
        val_accuracy=_accuracy(prob.y_val, f_val),
        train_loss=_mean_sq_hinge(prob.y, state.f),
        train_accuracy=_accuracy(prob.y, state.f),
        epoch=epoch,
        seconds=time.perf_counter() - started,
        visited=visited,
    )


def lambda_grid(lam_max, grid_size, ratio):
    """Log-uniform grid from ``lam_max`` down to ``ratio * lam_max``."""
    if grid_size == 1:
        return [lam_max]
    r = ratio ** (1.0 / (grid_size - 1))
    grid = [lam_max]
    for _ in range(grid_size - 1):
        grid.append(grid[-1] * r)
    return grid


def regularization_path(train, val, config, selector_factory=TreeSelector, monitor=None):
    """Warm-started path over a decreasing lambda grid.

    ``monitor(stage, lam, state)`` is called after every block update
    (stages ``"select"``, ``"beta"``, ``"beta0"``, ``"attributes"``).
    One record per grid point is kept, taken at the best-validation epoch.
    """
    if val is None or len(val) == 0:
        raise ValueError("validation split is empty")
    started = time.perf_counter()
    problem = Problem(train, val, config)
    selector = selector_factory(problem)
    state = ModelState(problem)
    lam_max, _ = compute_lambda_max(selector, state)
    result = PathResult(lambda_max=lam_max)
    result.records.append(_snapshot(state, lam_max, 0, started, selector.visited))
    if lam_max <= 0.0:
        return result

    grid = lambda_grid(lam_max, config.grid_size, config.lambda_min_ratio)
    notify = monitor or (lambda *_: None)
    for k, lam in enumerate(grid[1:], start=1):
        best_loss = np.inf
        best = None
        since = 0
        for epoch in range(1, config.max_epoch + 1):
            gradient_pruning(selector, state, lam)
            notify("select", lam, state)
            update_beta(state, lam, config)
            notify("beta", lam, state)
            update_beta0(state)
            notify("beta0", lam, state)
            update_attributes(state, config)
            notify("attributes", lam, state)
            snap = _snapshot(state, lam, epoch, started, selector.visited)
            result.log.append({
                "lambda_index": k,
                "lambda": float(lam),
                "epoch": epoch,
                "objective": objective(state, lam),
                "train_loss": snap.train_loss,
                "val_loss": snap.val_loss,
                "active": len(state.active),
                "nonzero": state.nonzero_count(),
                "visited": selector.visited,
                "seconds": snap.seconds,
            })
            if snap.val_loss < best_loss:
                best_loss, best, since = snap.val_loss, snap, 0
            else:
                since += 1
                if since >= config.patience:
                    break
        result.records.append(best)
        logger.debug(
            "lambda %d/%d = %.6g: |W|=%d nonzero=%d val_loss=%.6g",
            k, len(grid) - 1, lam, len(state.active), state.nonzero_count(), best.val_loss,
        )
    return result
