"""Per-class dynamic hierarchical Bayesian word models.

One model per lexicon word.  Each time slice t covers one character block and
carries a hidden root state (the character class), one hidden sub-state per
frame beneath it, and the F x C observed cell symbols.  The slice emission
marginalizes the frame sub-states exactly:

    log b_i(slice) = sum_f log( sum_s frame_cpt[f][i][s] * prod_c emit[s][y_fc] )

so with a single sub-state the model collapses to a plain HMM whose emission
is the product of the cell emissions.  Inference (forward, Viterbi) runs over
the root chain in log space; training is Baum-Welch extended with per-slice
sub-state posteriors.
"""

import copy
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ._textio import format_floats, parse_floats, read_checked, write_checked
from .errors import (
    EmptyLexicon,
    EmptySequence,
    ImpossibleSequence,
    InvalidCounts,
    IoFailure,
    NoSequences,
    SymbolOutOfRange,
    VersionMismatch,
)

MODEL_MAGIC = "DHBN-WM"
MODEL_VERSION = "v1"
TOPOLOGIES = ("ergodic", "left-right")

_STOCHASTIC_TOL = 1e-9


@dataclass
class WordModel:
    """lambda = (pi, trans, frame CPTs, emission CPT) plus its shape counts.

    pi: (N,) initial root-state probabilities.
    trans: (N, N) row-stochastic root transitions.
    frame_cpt: (F, N, S) P(sub-state | root state) per frame position.
    emit: (S, K) P(cell symbol | sub-state), shared by the C cells of a frame.
    """

    pi: np.ndarray
    trans: np.ndarray
    frame_cpt: np.ndarray
    emit: np.ndarray
    n_cells: int
    topology: str = "left-right"

    @property
    def n_root(self) -> int:
        return self.pi.shape[0]

    @property
    def n_sub(self) -> int:
        return self.emit.shape[0]

    @property
    def n_frames(self) -> int:
        return self.frame_cpt.shape[0]

    @property
    def n_symbols(self) -> int:
        return self.emit.shape[1]

    def validate(self) -> None:
        n, s, f = self.n_root, self.n_sub, self.n_frames
        if self.trans.shape != (n, n) or self.frame_cpt.shape != (f, n, s):
            raise InvalidCounts("parameter shapes are inconsistent")
        for name, arr, axis in (
            ("pi", self.pi, 0),
            ("trans", self.trans, 1),
            ("frame_cpt", self.frame_cpt, 2),
            ("emit", self.emit, 1),
        ):
            if (arr < 0).any():
                raise InvalidCounts(f"{name} has negative entries")
            sums = arr.sum(axis=axis)
            if not np.allclose(sums, 1.0, rtol=0.0, atol=_STOCHASTIC_TOL):
                raise InvalidCounts(f"{name} rows do not sum to 1")


@dataclass
class Lexicon:
    """Ordered (class label, WordModel) pairs; labels must be unique."""

    entries: list = field(default_factory=list)

    def __post_init__(self):
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate labels in lexicon")

    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]


def transition_mask(topology: str, n: int) -> np.ndarray:
    """Allowed-successor mask: ergodic = all, left-right = self + next
    (the last state self-loops)."""
    if topology == "ergodic":
        return np.ones((n, n), dtype=bool)
    if topology == "left-right":
        return np.eye(n, dtype=bool) | np.eye(n, k=1, dtype=bool)
    raise ValueError(f"unknown topology {topology!r}")


def init_model(
    n_root: int,
    n_sub: int,
    n_frames: int,
    n_cells: int,
    n_symbols: int,
    topology: str = "left-right",
    seed: int = 0,
) -> WordModel:
    """Fresh model: pi, frame CPTs and emissions are uniform rows plus seeded
    U[0, 0.01] jitter (then renormalized); transitions are uniform over the
    topology's allowed successors with disallowed entries exactly zero.
    """
    counts = (n_root, n_sub, n_frames, n_cells, n_symbols)
    if any(c < 1 for c in counts):
        raise InvalidCounts(f"all counts must be >= 1, got {counts}")
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    rng = np.random.default_rng(seed)

    def jittered_rows(shape: tuple) -> np.ndarray:
        raw = 1.0 / shape[-1] + rng.uniform(0.0, 0.01, size=shape)
        return raw / raw.sum(axis=-1, keepdims=True)

    pi = jittered_rows((n_root,))
    frame_cpt = jittered_rows((n_frames, n_root, n_sub))
    emit = jittered_rows((n_sub, n_symbols))
    mask = transition_mask(topology, n_root)
    trans = mask / mask.sum(axis=1, keepdims=True)
    return WordModel(pi=pi, trans=trans, frame_cpt=frame_cpt, emit=emit,
                     n_cells=n_cells, topology=topology)


def _check_sequence(m: WordModel, seq) -> np.ndarray:
    seq = np.asarray(seq, dtype=int)
    if seq.ndim != 3 or seq.shape[0] == 0:
        raise EmptySequence("sequence must have shape (T, F, C) with T >= 1")
    if seq.shape[1] != m.n_frames or seq.shape[2] != m.n_cells:
        raise SymbolOutOfRange(
            f"slice shape {seq.shape[1:]} != ({m.n_frames}, {m.n_cells})")
    if seq.min() < 0 or seq.max() >= m.n_symbols:
        raise SymbolOutOfRange(f"symbols must lie in [0, {m.n_symbols})")
    return seq


def _emission_terms(m: WordModel, seq: np.ndarray):
    """Slice emission pieces for a (T, F, C) sequence.

    Returns (cell_ll, frame_ll, slice_ll):
      cell_ll[t, f, s]  = sum_c log emit[s, y_tfc]
      frame_ll[t, f, i] = logsumexp_s( log frame_cpt[f, i, s] + cell_ll[t, f, s] )
      slice_ll[t, i]    = sum_f frame_ll[t, f, i]
    """
    with np.errstate(divide="ignore"):
        log_emit = np.log(m.emit)
        log_cpt = np.log(m.frame_cpt)
    cell_ll = np.moveaxis(log_emit[:, seq].sum(axis=3), 0, 2)      # (T, F, S)
    combined = log_cpt[None, :, :, :] + cell_ll[:, :, None, :]     # (T, F, N, S)
    frame_ll = logsumexp(combined, axis=3)                         # (T, F, N)
    return cell_ll, frame_ll, frame_ll.sum(axis=1)


def slice_emission_loglik(m: WordModel, slice_symbols, root_state: int) -> float:
    """log P(one slice's F x C symbols | root state), sub-states marginalized."""
    if not 0 <= root_state < m.n_root:
        raise ValueError(f"root_state {root_state} out of range")
    seq = _check_sequence(m, np.asarray(slice_symbols)[None, :, :])
    _, _, slice_ll = _emission_terms(m, seq)
    return float(slice_ll[0, root_state])


def _forward(m: WordModel, slice_ll: np.ndarray) -> np.ndarray:
    """Log-space forward lattice, shape (T, N)."""
    with np.errstate(divide="ignore"):
        log_pi = np.log(m.pi)
        log_a = np.log(m.trans)
    t_len, n = slice_ll.shape
    alpha = np.empty((t_len, n))
    alpha[0] = log_pi + slice_ll[0]
    for t in range(1, t_len):
        alpha[t] = logsumexp(alpha[t - 1][:, None] + log_a, axis=0) + slice_ll[t]
    return alpha


def _backward(m: WordModel, slice_ll: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        log_a = np.log(m.trans)
    t_len, n = slice_ll.shape
    beta = np.zeros((t_len, n))
    for t in range(t_len - 2, -1, -1):
        beta[t] = logsumexp(log_a + (slice_ll[t + 1] + beta[t + 1])[None, :], axis=1)
    return beta


def forward_loglik(m: WordModel, seq) -> float:
    """log P(sequence | model) by the forward recursion in log space; safe for
    sequences of thousands of slices."""
    seq = _check_sequence(m, seq)
    _, _, slice_ll = _emission_terms(m, seq)
    return float(logsumexp(_forward(m, slice_ll)[-1]))


def viterbi_decode(m: WordModel, seq) -> tuple[np.ndarray, float]:
    """Most probable root-state path and its log probability.

    Ties break toward the lower state index.  Raises ImpossibleSequence when
    every path has probability zero (any returned path would be arbitrary).
    """
    seq = _check_sequence(m, seq)
    _, _, slice_ll = _emission_terms(m, seq)
    with np.errstate(divide="ignore"):
        log_pi = np.log(m.pi)
        log_a = np.log(m.trans)
    t_len, n = slice_ll.shape
    delta = log_pi + slice_ll[0]
    back = np.zeros((t_len, n), dtype=int)
    for t in range(1, t_len):
        scores = delta[:, None] + log_a           # (prev, next)
        back[t] = scores.argmax(axis=0)           # first max = lowest index
        delta = scores[back[t], np.arange(n)] + slice_ll[t]
    best_last = int(delta.argmax())
    best_ll = float(delta[best_last])
    if best_ll == -np.inf:
        raise ImpossibleSequence("all root-state paths have probability zero")
    path = np.empty(t_len, dtype=int)
    path[-1] = best_last
    for t in range(t_len - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, best_ll


def em_train(
    m: WordModel,
    sequences,
    max_iter: int = 100,
    tol: float = 1e-4,
    pseudocount: float = 1e-3,
) -> tuple[WordModel, list[float]]:
    """Baum-Welch generalized to the frame hierarchy.

    The E-step computes root-state posteriors by forward-backward and, inside
    each slice, sub-state posteriors conditioned on the root; the M-step
    re-estimates pi, trans, frame CPTs and emissions with additive smoothing
    `pseudocount` followed by renormalization.  Structural zeros of a
    left-right transition matrix stay exactly zero.  Stops when the relative
    log-likelihood improvement falls below `tol` or after `max_iter`
    iterations.  Returns a new model (the input is not mutated) and the
    per-iteration total log-likelihood history, which is checked to be
    non-decreasing (tolerance 1e-9).
    """
    seqs = [np.asarray(s, dtype=int) for s in sequences]
    if not seqs:
        raise NoSequences("need at least one training sequence")
    seqs = [_check_sequence(m, s) for s in seqs]

    n, s_cnt, f_cnt, k_cnt = m.n_root, m.n_sub, m.n_frames, m.n_symbols
    mask = transition_mask(m.topology, n)
    model = copy.deepcopy(m)
    history: list[float] = []

    for _ in range(max_iter):
        pi_counts = np.zeros(n)
        trans_counts = np.zeros((n, n))
        cpt_counts = np.zeros((f_cnt, n, s_cnt))
        emit_counts = np.zeros((s_cnt, k_cnt))
        total_ll = 0.0
        with np.errstate(divide="ignore"):
            log_a = np.log(model.trans)
            log_cpt = np.log(model.frame_cpt)

        for seq in seqs:
            cell_ll, frame_ll, slice_ll = _emission_terms(model, seq)
            alpha = _forward(model, slice_ll)
            beta = _backward(model, slice_ll)
            seq_ll = float(logsumexp(alpha[-1]))
            if seq_ll == -np.inf:
                raise ImpossibleSequence("a training sequence has zero probability")
            total_ll += seq_ll

            gamma = np.exp(alpha + beta - seq_ll)                      # (T, N)
            for t in range(seq.shape[0] - 1):
                trans_counts += np.exp(
                    alpha[t][:, None] + log_a
                    + (slice_ll[t + 1] + beta[t + 1])[None, :] - seq_ll
                )
            pi_counts += gamma[0]

            # Sub-state posterior given the root: normalized within each frame.
            sub_post = np.exp(
                log_cpt[None, :, :, :] + cell_ll[:, :, None, :]
                - frame_ll[:, :, :, None]
            )                                                          # (T, F, N, S)
            weighted = gamma[:, None, :, None] * sub_post              # (T, F, N, S)
            cpt_counts += weighted.sum(axis=0)
            frame_weight = weighted.sum(axis=2)                        # (T, F, S)
            for c in range(m.n_cells):
                symbols = seq[:, :, c].ravel()
                for s_idx in range(s_cnt):
                    np.add.at(emit_counts[s_idx], symbols, frame_weight[:, :, s_idx].ravel())

        if history:
            assert total_ll >= history[-1] - 1e-9, "EM log-likelihood decreased"
        history.append(total_ll)

        pi = pi_counts + pseudocount
        trans = np.where(mask, trans_counts + pseudocount, 0.0)
        frame_cpt = cpt_counts + pseudocount
        emit = emit_counts + pseudocount
        model = WordModel(
            pi=pi / pi.sum(),
            trans=trans / trans.sum(axis=1, keepdims=True),
            frame_cpt=frame_cpt / frame_cpt.sum(axis=2, keepdims=True),
            emit=emit / emit.sum(axis=1, keepdims=True),
            n_cells=m.n_cells,
            topology=m.topology,
        )
        if len(history) >= 2:
            prev = history[-2]
            rel = (history[-1] - prev) / max(abs(prev), np.finfo(float).tiny)
            if rel < tol:
                break
    return model, history


def classify(lex: Lexicon, seq) -> list[tuple[str, float]]:
    """Rank lexicon entries by forward log-likelihood, descending.

    Ties keep lexicon order; an impossible sequence scores -inf and ranks
    last rather than raising.
    """
    if not lex.entries:
        raise EmptyLexicon("lexicon has no entries")
    scored = [(label, forward_loglik(model, seq)) for label, model in lex.entries]
    return sorted(scored, key=lambda pair: -pair[1])


def write_model(m: WordModel, path) -> None:
    """Versioned text format, lossless for float64."""
    lines = [
        f"{MODEL_MAGIC} {MODEL_VERSION} {m.n_root} {m.n_sub} {m.n_frames} "
        f"{m.n_cells} {m.n_symbols} {m.topology}"
    ]
    lines.append(format_floats(m.pi))
    lines.extend(format_floats(row) for row in m.trans)
    for f in range(m.n_frames):
        lines.extend(format_floats(row) for row in m.frame_cpt[f])
    lines.extend(format_floats(row) for row in m.emit)
    write_checked(path, lines)


def read_model(path) -> WordModel:
    lines = read_checked(path)
    header = lines[0].split()
    if len(header) != 8 or header[0] != MODEL_MAGIC or header[1] != MODEL_VERSION:
        raise VersionMismatch(f"{path}: bad model header {lines[0]!r}")
    n, s, f, c, k = (int(v) for v in header[2:7])
    topology = header[7]
    if topology not in TOPOLOGIES:
        raise VersionMismatch(f"{path}: unknown topology {topology!r}")
    expect = 1 + 1 + n + f * n + s
    if len(lines) != expect:
        raise IoFailure(f"{path}: expected {expect} body lines, found {len(lines)}")
    pos = 1
    pi = parse_floats(lines[pos], n)
    pos += 1
    trans = np.vstack([parse_floats(lines[pos + i], n) for i in range(n)])
    pos += n
    frame_cpt = np.empty((f, n, s))
    for fi in range(f):
        frame_cpt[fi] = np.vstack([parse_floats(lines[pos + i], s) for i in range(n)])
        pos += n
    emit = np.vstack([parse_floats(lines[pos + i], k) for i in range(s)])
    return WordModel(pi=pi, trans=trans, frame_cpt=frame_cpt, emit=emit,
                     n_cells=c, topology=topology)
