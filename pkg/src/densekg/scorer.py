"""Relation scoring over (head, tail) event pairs.

A scorer produces, per pair, a linkability gate in [0, 1] and a
distribution over the six grouped relations; the decision score is
their sum (range (0, 2)), thresholded per relation downstream.

Two interchangeable implementations:

* :class:`BuiltinScorer` — a small bag-of-embeddings model trained here
  (max-pooled sentence embeddings feeding the relation head, a
  mean-pooled pair summary feeding the gate). Gradients are hand-rolled
  numpy, checked against finite differences in the test suite.
* :class:`RemoteScorer` — an HTTP client for a sidecar model service
  speaking the scorer wire protocol (POST /score, GET /health).
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import requests

from .dataset import TrainingExample
from .relations import GROUPED_RELATIONS, K, NOLINK, RELATION_INDEX

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
MODEL_FORMAT = "relation-scorer"
UNK = 0
PROBS_SUM_TOL = 1e-6


class ScorerError(RuntimeError):
    """Raised on scoring failures (unloaded model, bad inputs)."""


class ScorerProtocolError(ScorerError):
    """Wire-protocol violation; carries the failing pair index."""

    def __init__(self, message: str, pair_index: int = 0):
        super().__init__(message)
        self.pair_index = pair_index


@dataclass
class EncoderOutput:
    head_matrix: np.ndarray  # (head tokens, D)
    tail_matrix: np.ndarray  # (tail tokens, D)
    joint_summary: np.ndarray  # (D,) mean over the concatenated pair
    truncated: bool = False


@dataclass(frozen=True)
class ScoreVector:
    gate: float
    probs: Tuple[float, ...]  # length K, GROUPED_RELATIONS order

    def __post_init__(self) -> None:
        object.__setattr__(self, "gate", float(self.gate))
        object.__setattr__(self, "probs", tuple(float(p) for p in self.probs))
        if not 0.0 <= self.gate <= 1.0:
            raise ScorerError(f"gate out of [0, 1]: {self.gate}")
        if len(self.probs) != K:
            raise ScorerError(f"expected {K} probabilities, got {len(self.probs)}")
        if any(p < 0.0 or p > 1.0 for p in self.probs):
            raise ScorerError(f"probability out of [0, 1]: {self.probs}")
        if abs(sum(self.probs) - 1.0) > PROBS_SUM_TOL:
            raise ScorerError(f"probabilities sum to {sum(self.probs)}, not 1")

    @property
    def combined(self) -> Tuple[float, ...]:
        return tuple(self.gate + p for p in self.probs)

    def best(self) -> Tuple[str, float]:
        idx = max(range(K), key=lambda i: self.probs[i])
        return GROUPED_RELATIONS[idx], self.gate + self.probs[idx]

    def as_wire(self) -> dict:
        return {
            "gate": self.gate,
            "probs": {rel: self.probs[i] for i, rel in enumerate(GROUPED_RELATIONS)},
        }

    @classmethod
    def from_wire(cls, obj: dict) -> "ScoreVector":
        if not isinstance(obj, dict) or "gate" not in obj or "probs" not in obj:
            raise ScorerError("score object must carry 'gate' and 'probs'")
        probs = obj["probs"]
        if set(probs) != set(GROUPED_RELATIONS):
            raise ScorerError(f"probs keys {sorted(probs)} != {sorted(GROUPED_RELATIONS)}")
        return cls(float(obj["gate"]), tuple(float(probs[r]) for r in GROUPED_RELATIONS))


class RelationScorer(Protocol):
    """Common surface of the built-in and remote scorers."""

    def identity(self) -> str: ...

    def score_batch(self, pairs: Sequence[Tuple[str, str]]) -> List[ScoreVector]: ...


def predict_relation(
    scorer: "RelationScorer",
    head_text: str,
    tail_text: str,
    thresholds: Dict[str, float],
) -> Optional[Tuple[str, float]]:
    """Single-pair decision: the argmax relation if its combined score
    clears that relation's threshold, else None (NoLink)."""
    return decide(scorer.score_batch([(head_text, tail_text)])[0], thresholds)


def decide(score: ScoreVector, thresholds: Dict[str, float]) -> Optional[Tuple[str, float]]:
    missing = [r for r in GROUPED_RELATIONS if r not in thresholds]
    if missing:
        raise ScorerError(f"thresholds missing relations: {missing}")
    relation, combined = score.best()
    if combined >= thresholds[relation]:
        return relation, combined
    return None


# ----------------------------------------------------------------------
# built-in scorer

def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + np.exp(-z))
    e = np.exp(z)
    return e / (1.0 + e)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


class Vocabulary:
    """Whitespace + lowercase token index; id 0 is the shared UNK."""

    def __init__(self, token_to_id: Dict[str, int]):
        self.token_to_id = token_to_id

    @classmethod
    def build(cls, texts: Iterable[str], min_freq: int = 2) -> "Vocabulary":
        counts: Dict[str, int] = {}
        for text in texts:
            for tok in text.lower().split():
                counts[tok] = counts.get(tok, 0) + 1
        kept = sorted(tok for tok, c in counts.items() if c >= min_freq)
        return cls({tok: i + 1 for i, tok in enumerate(kept)})

    def __len__(self) -> int:
        return len(self.token_to_id) + 1  # + UNK

    def encode(self, text: str, max_tokens: int) -> Tuple[List[int], bool]:
        tokens = text.lower().split()
        if not tokens:
            raise ScorerError("cannot encode empty text")
        truncated = len(tokens) > max_tokens
        return [self.token_to_id.get(t, UNK) for t in tokens[:max_tokens]], truncated


@dataclass
class TrainConfig:
    dim: int = 64
    learning_rate: float = 0.5
    batch_size: int = 64
    epochs: int = 5
    init_scale: float = 0.05
    max_tokens: int = 100  # reference encoder sequence budget
    min_freq: int = 2
    seed: int = 0


class BuiltinScorer:
    """Trainable bag-of-embeddings scorer.

    Parameters: token embedding table ``emb`` ((V, D)), gate weights
    ``w_t`` ((D,)), relation weights ``w_c`` ((K, 2D)).
    """

    def __init__(
        self,
        vocab: Vocabulary,
        emb: np.ndarray,
        w_t: np.ndarray,
        w_c: np.ndarray,
        max_tokens: int = 100,
        name: str = "builtin",
    ):
        if w_c.shape != (K, 2 * emb.shape[1]):
            raise ScorerError(f"relation weights shaped {w_c.shape}, want {(K, 2 * emb.shape[1])}")
        if w_t.shape != (emb.shape[1],):
            raise ScorerError(f"gate weights shaped {w_t.shape}, want {(emb.shape[1],)}")
        self.vocab = vocab
        self.emb = emb
        self.w_t = w_t
        self.w_c = w_c
        self.max_tokens = max_tokens
        self.name = name

    @property
    def dim(self) -> int:
        return self.emb.shape[1]

    def identity(self) -> str:
        return f"{self.name}(D={self.dim}, V={len(self.vocab)})"

    def encode(self, head_text: str, tail_text: str) -> EncoderOutput:
        head_ids, t1 = self.vocab.encode(head_text, self.max_tokens)
        tail_ids, t2 = self.vocab.encode(tail_text, self.max_tokens)
        head_m = self.emb[head_ids]
        tail_m = self.emb[tail_ids]
        joint = self.emb[head_ids + tail_ids].mean(axis=0)
        return EncoderOutput(head_m, tail_m, joint, truncated=t1 or t2)

    def score(self, head_text: str, tail_text: str) -> ScoreVector:
        enc = self.encode(head_text, tail_text)
        e_h = pool(enc.head_matrix)
        e_t = pool(enc.tail_matrix)
        gate = _sigmoid(float(self.w_t @ enc.joint_summary))
        probs = _softmax(self.w_c @ np.concatenate([e_h, e_t]))
        return ScoreVector(gate, tuple(float(p) for p in probs))

    def score_batch(self, pairs: Sequence[Tuple[str, str]]) -> List[ScoreVector]:
        return [self.score(h, t) for h, t in pairs]

    # ------------------------------------------------------------------
    # persistence

    def save(self, path: str) -> None:
        payload = {
            "format": MODEL_FORMAT,
            "version": PROTOCOL_VERSION,
            "name": self.name,
            "dim": self.dim,
            "max_tokens": self.max_tokens,
            "relations": list(GROUPED_RELATIONS),
            "vocab": self.vocab.token_to_id,
            "w_t": self.w_t.tolist(),
            "w_c": self.w_c.tolist(),
            "emb": self.emb.tolist(),
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, ensure_ascii=False, separators=(",", ":"), sort_keys=True)
            f.write("\n")

    @classmethod
    def load(cls, path: str) -> "BuiltinScorer":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        if payload.get("format") != MODEL_FORMAT:
            raise ScorerError(f"{path}: not a scorer model file")
        if payload.get("relations") != list(GROUPED_RELATIONS):
            raise ScorerError(
                f"{path}: model relations {payload.get('relations')} do not match "
                f"{list(GROUPED_RELATIONS)}"
            )
        return cls(
            Vocabulary(payload["vocab"]),
            np.asarray(payload["emb"], dtype=np.float64),
            np.asarray(payload["w_t"], dtype=np.float64),
            np.asarray(payload["w_c"], dtype=np.float64),
            max_tokens=payload.get("max_tokens", 100),
            name=payload.get("name", "builtin"),
        )


def pool(matrix: np.ndarray) -> np.ndarray:
    """Element-wise max over the token axis (sentence embedding)."""
    if matrix.size == 0:
        raise ScorerError("cannot pool an empty matrix")
    return matrix.max(axis=0)


# ----------------------------------------------------------------------
# training

@dataclass
class _Encoded:
    head_ids: List[int]
    tail_ids: List[int]
    linked: float
    label: Optional[int]


def _encode_examples(
    examples: Sequence[TrainingExample], vocab: Vocabulary, max_tokens: int
) -> List[_Encoded]:
    encoded = []
    for ex in examples:
        head_ids, _ = vocab.encode(ex.head, max_tokens)
        tail_ids, _ = vocab.encode(ex.tail, max_tokens)
        label = RELATION_INDEX[ex.label] if ex.label != NOLINK else None
        encoded.append(_Encoded(head_ids, tail_ids, 1.0 if label is not None else 0.0, label))
    return encoded


def batch_loss_and_grads(
    emb: np.ndarray,
    w_t: np.ndarray,
    w_c: np.ndarray,
    batch: Sequence[_Encoded],
    compute_grads: bool = True,
) -> Tuple[float, Optional[Dict[str, np.ndarray]]]:
    """Mean loss over a batch and (optionally) its exact gradients.

    Loss per example: binary cross-entropy of the gate against the
    linked flag, plus cross-entropy of the relation head for positives.
    """
    dim = emb.shape[1]
    total = 0.0
    g_emb = np.zeros_like(emb) if compute_grads else None
    g_wt = np.zeros_like(w_t) if compute_grads else None
    g_wc = np.zeros_like(w_c) if compute_grads else None
    scale = 1.0 / len(batch)

    for ex in batch:
        head_m = emb[ex.head_ids]
        tail_m = emb[ex.tail_ids]
        joint_ids = ex.head_ids + ex.tail_ids
        joint = emb[joint_ids].mean(axis=0)

        h_arg = head_m.argmax(axis=0)
        t_arg = tail_m.argmax(axis=0)
        e_h = head_m[h_arg, np.arange(dim)]
        e_t = tail_m[t_arg, np.arange(dim)]
        x = np.concatenate([e_h, e_t])

        z_gate = float(w_t @ joint)
        gate = _sigmoid(z_gate)
        eps = 1e-12
        total += -(
            ex.linked * np.log(gate + eps) + (1.0 - ex.linked) * np.log(1.0 - gate + eps)
        )

        probs = None
        if ex.label is not None:
            z = w_c @ x
            probs = _softmax(z)
            total += -np.log(probs[ex.label] + eps)

        if not compute_grads:
            continue

        d_gate = (gate - ex.linked) * scale
        g_wt += d_gate * joint
        d_joint = d_gate * w_t
        contribution = d_joint / len(joint_ids)
        np.add.at(g_emb, joint_ids, contribution)

        if ex.label is not None:
            d_z = probs.copy()
            d_z[ex.label] -= 1.0
            d_z *= scale
            g_wc += np.outer(d_z, x)
            d_x = w_c.T @ d_z
            d_eh, d_et = d_x[:dim], d_x[dim:]
            np.add.at(g_emb, (np.asarray(ex.head_ids)[h_arg], np.arange(dim)), d_eh)
            np.add.at(g_emb, (np.asarray(ex.tail_ids)[t_arg], np.arange(dim)), d_et)

    loss = total * scale
    if not compute_grads:
        return loss, None
    return loss, {"emb": g_emb, "w_t": g_wt, "w_c": g_wc}


def train_builtin(
    examples: Sequence[TrainingExample], config: TrainConfig = TrainConfig()
) -> Tuple[BuiltinScorer, List[float]]:
    """Mini-batch gradient descent on the gate + relation objective.

    Returns the trained scorer and the loss history (entry 0 is the
    pre-training loss over the full stream, then one mean loss per
    epoch).
    """
    labels = {ex.label for ex in examples}
    if NOLINK not in labels:
        raise ScorerError("training requires negative (NoLink) examples for the gate")
    if labels == {NOLINK}:
        raise ScorerError("training requires positive examples for the gate")

    vocab = Vocabulary.build(
        (t for ex in examples for t in (ex.head, ex.tail)), min_freq=config.min_freq
    )
    encoded = _encode_examples(examples, vocab, config.max_tokens)

    rng = np.random.RandomState(config.seed)
    emb = rng.uniform(-config.init_scale, config.init_scale, (len(vocab), config.dim))
    w_t = rng.uniform(-config.init_scale, config.init_scale, config.dim)
    w_c = rng.uniform(-config.init_scale, config.init_scale, (K, 2 * config.dim))

    initial_loss, _ = batch_loss_and_grads(emb, w_t, w_c, encoded, compute_grads=False)
    history = [float(initial_loss)]
    order = np.arange(len(encoded))
    for epoch in range(config.epochs):
        rng.shuffle(order)
        epoch_loss = 0.0
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            batch = [encoded[i] for i in order[start : start + config.batch_size]]
            loss, grads = batch_loss_and_grads(emb, w_t, w_c, batch)
            emb -= config.learning_rate * grads["emb"]
            w_t -= config.learning_rate * grads["w_t"]
            w_c -= config.learning_rate * grads["w_c"]
            epoch_loss += loss
            n_batches += 1
        history.append(float(epoch_loss / n_batches))
        logger.info("epoch %d/%d loss %.4f", epoch + 1, config.epochs, history[-1])

    scorer = BuiltinScorer(vocab, emb, w_t, w_c, max_tokens=config.max_tokens)
    return scorer, history


# ----------------------------------------------------------------------
# remote scorer client

class RemoteScorer:
    """Client for the scorer wire protocol.

    Transient transport failures are retried idempotently up to
    ``max_retries``; protocol violations raise immediately with the
    failing pair index.
    """

    def __init__(self, url: str, timeout: float = 30.0, max_retries: int = 3):
        self.url = url.rstrip("/")
        self.timeout = timeout
        self.max_retries = max_retries
        self.session = requests.Session()

    def identity(self) -> str:
        return f"remote({self.url})"

    def health(self) -> dict:
        resp = self.session.get(f"{self.url}/health", timeout=self.timeout)
        resp.raise_for_status()
        return resp.json()

    def score_batch(self, pairs: Sequence[Tuple[str, str]]) -> List[ScoreVector]:
        if not pairs:
            return []
        payload = {
            "v": PROTOCOL_VERSION,
            "pairs": [{"head": h, "tail": t} for h, t in pairs],
        }
        body = self._post_with_retries(payload)
        if body.get("v") != PROTOCOL_VERSION:
            raise ScorerProtocolError(f"protocol version mismatch: {body.get('v')}", 0)
        scores = body.get("scores")
        if not isinstance(scores, list) or len(scores) != len(pairs):
            got = len(scores) if isinstance(scores, list) else "none"
            raise ScorerProtocolError(f"expected {len(pairs)} scores, got {got}", 0)
        result = []
        for i, obj in enumerate(scores):
            try:
                result.append(ScoreVector.from_wire(obj))
            except ScorerError as exc:
                raise ScorerProtocolError(f"score {i}: {exc}", i) from None
        return result

    def _post_with_retries(self, payload: dict) -> dict:
        last_exc: Optional[Exception] = None
        for attempt in range(self.max_retries):
            try:
                resp = self.session.post(
                    f"{self.url}/score", json=payload, timeout=self.timeout
                )
                if resp.status_code >= 500:
                    last_exc = ScorerProtocolError(
                        f"server error {resp.status_code}", 0
                    )
                    time.sleep(0.05 * (attempt + 1))
                    continue
                if resp.status_code != 200:
                    raise ScorerProtocolError(
                        f"unexpected status {resp.status_code}: {resp.text[:200]}", 0
                    )
                return resp.json()
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_exc = exc
                time.sleep(0.05 * (attempt + 1))
            except json.JSONDecodeError as exc:
                raise ScorerProtocolError(f"malformed response body: {exc}", 0) from None
        raise ScorerProtocolError(f"retries exhausted: {last_exc}", 0)
