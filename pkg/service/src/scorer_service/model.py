"""Transformer pair encoder with the two scoring heads.

The input packs both events as <s> head </s> tail </s>. The sentinel
<s> embedding feeds the linkability gate; max-pooled head- and
tail-token states feed the relation head. The combined decision score
downstream is gate + relation probability, matching the scorer wire
contract.
"""

from __future__ import annotations

from typing import Dict, List, Sequence, Tuple

import torch
from torch import nn

from .config import EncoderConfig, ServiceConfig

RELATIONS = ("xIntent", "xNeed", "xAfter", "oAfter", "xPersona", "oPersona")
NOLINK = "NoLink"

PAD, UNK, BOS, SEP = 0, 1, 2, 3
_SPECIALS = 4


class Vocab:
    def __init__(self, token_to_id: Dict[str, int]):
        self.token_to_id = token_to_id

    @classmethod
    def build(cls, texts, min_freq: int = 1) -> "Vocab":
        counts: Dict[str, int] = {}
        for text in texts:
            for tok in text.lower().split():
                counts[tok] = counts.get(tok, 0) + 1
        kept = sorted(t for t, c in counts.items() if c >= min_freq)
        return cls({t: i + _SPECIALS for i, t in enumerate(kept)})

    def __len__(self) -> int:
        return len(self.token_to_id) + _SPECIALS

    def ids(self, text: str) -> List[int]:
        return [self.token_to_id.get(t, UNK) for t in text.lower().split()]


def pack_pair(
    vocab: Vocab, head: str, tail: str, max_seq_len: int
) -> Tuple[List[int], List[int], List[int]]:
    """Token ids plus the positions of head and tail tokens.

    Truncation drops tokens from the longer side first, keeping at
    least one token per side.
    """
    head_ids = vocab.ids(head)
    tail_ids = vocab.ids(tail)
    if not head_ids or not tail_ids:
        raise ValueError("head and tail must be non-empty")
    budget = max_seq_len - 3  # <s> and two separators
    while len(head_ids) + len(tail_ids) > budget:
        if len(head_ids) >= len(tail_ids) and len(head_ids) > 1:
            head_ids.pop()
        elif len(tail_ids) > 1:
            tail_ids.pop()
        else:
            head_ids.pop()
    ids = [BOS] + head_ids + [SEP] + tail_ids + [SEP]
    head_pos = list(range(1, 1 + len(head_ids)))
    tail_pos = list(range(2 + len(head_ids), 2 + len(head_ids) + len(tail_ids)))
    return ids, head_pos, tail_pos


class PairScorerModel(nn.Module):
    def __init__(self, encoder: EncoderConfig, max_seq_len: int):
        super().__init__()
        self.token_emb = nn.Embedding(encoder.vocab_size, encoder.dim, padding_idx=PAD)
        self.pos_emb = nn.Embedding(max_seq_len, encoder.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=encoder.dim,
            nhead=encoder.heads,
            dim_feedforward=encoder.ffn_dim,
            dropout=encoder.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=encoder.layers)
        self.gate_head = nn.Linear(encoder.dim, 1)
        self.relation_head = nn.Linear(2 * encoder.dim, len(RELATIONS))
        self.max_seq_len = max_seq_len

    def forward(
        self,
        ids: torch.Tensor,  # (B, L) padded
        padding_mask: torch.Tensor,  # (B, L) True where padded
        head_mask: torch.Tensor,  # (B, L) True on head tokens
        tail_mask: torch.Tensor,  # (B, L) True on tail tokens
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        positions = torch.arange(ids.shape[1], device=ids.device).unsqueeze(0)
        x = self.token_emb(ids) + self.pos_emb(positions)
        hidden = self.encoder(x, src_key_padding_mask=padding_mask)
        sentinel = hidden[:, 0]
        neg_inf = torch.finfo(hidden.dtype).min
        e_head = hidden.masked_fill(~head_mask.unsqueeze(-1), neg_inf).max(dim=1).values
        e_tail = hidden.masked_fill(~tail_mask.unsqueeze(-1), neg_inf).max(dim=1).values
        gate_logit = self.gate_head(sentinel).squeeze(-1)
        relation_logits = self.relation_head(torch.cat([e_head, e_tail], dim=-1))
        return gate_logit, relation_logits

    def encoder_parameters(self):
        for module in (self.token_emb, self.pos_emb, self.encoder):
            yield from module.parameters()

    def head_parameters(self):
        for module in (self.gate_head, self.relation_head):
            yield from module.parameters()


def collate(
    vocab: Vocab, pairs: Sequence[Tuple[str, str]], max_seq_len: int
) -> Tuple[torch.Tensor, torch.Tensor, torch.Tensor, torch.Tensor]:
    packed = [pack_pair(vocab, h, t, max_seq_len) for h, t in pairs]
    length = max(len(ids) for ids, _, _ in packed)
    batch = torch.full((len(packed), length), PAD, dtype=torch.long)
    padding = torch.ones((len(packed), length), dtype=torch.bool)
    head_mask = torch.zeros((len(packed), length), dtype=torch.bool)
    tail_mask = torch.zeros((len(packed), length), dtype=torch.bool)
    for i, (ids, head_pos, tail_pos) in enumerate(packed):
        batch[i, : len(ids)] = torch.tensor(ids)
        padding[i, : len(ids)] = False
        head_mask[i, head_pos] = True
        tail_mask[i, tail_pos] = True
    return batch, padding, head_mask, tail_mask


@torch.no_grad()
def score_pairs(
    model: PairScorerModel,
    vocab: Vocab,
    pairs: Sequence[Tuple[str, str]],
    batch_size: int,
) -> List[dict]:
    """Wire-format score objects, chunked through the model at the
    configured batch size regardless of request size."""
    model.eval()
    out: List[dict] = []
    for start in range(0, len(pairs), batch_size):
        chunk = pairs[start : start + batch_size]
        ids, padding, head_mask, tail_mask = collate(vocab, chunk, model.max_seq_len)
        gate_logit, relation_logits = model(ids, padding, head_mask, tail_mask)
        gates = torch.sigmoid(gate_logit).double()
        probs = torch.softmax(relation_logits.double(), dim=-1)
        probs = probs / probs.sum(dim=-1, keepdim=True)
        for g, p in zip(gates.tolist(), probs.tolist()):
            drift = 1.0 - sum(p)
            p[p.index(max(p))] += drift  # absorb float residue
            out.append(
                {"gate": min(max(g, 0.0), 1.0), "probs": dict(zip(RELATIONS, p))}
            )
    return out


# ----------------------------------------------------------------------
# checkpoints

def save_checkpoint(
    path: str, model: PairScorerModel, vocab: Vocab, config: ServiceConfig
) -> None:
    torch.save(
        {
            "format": "pair-scorer-checkpoint",
            "config": config.to_dict(),
            "vocab": vocab.token_to_id,
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path: str) -> Tuple[PairScorerModel, Vocab, ServiceConfig]:
    payload = torch.load(path, map_location="cpu", weights_only=False)
    if payload.get("format") != "pair-scorer-checkpoint":
        raise ValueError(f"{path}: not a scorer checkpoint")
    raw = dict(payload["config"])
    config = ServiceConfig(encoder=EncoderConfig(**raw.pop("encoder")), **raw)
    vocab = Vocab(payload["vocab"])
    model = PairScorerModel(config.encoder, config.max_seq_len)
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, vocab, config
