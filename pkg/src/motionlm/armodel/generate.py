"""Grammar-constrained autoregressive generation.

Every sampled id comes from the grammar's allowed set, so finished
sequences always parse. A closing guard watches the remaining budget:
once it only just covers the cheapest way to finish the message, the
candidate set is restricted to moves that shrink that distance, so
generation under a token cap still terminates in a parseable state.
"""
from __future__ import annotations

import numpy as np

from ..vocab import Vocabulary, MessageGrammar, GrammarError
from .net import ArModel


class GenerationError(RuntimeError):
    """Prefix malformed or constraints exhausted."""


def _closing_moves(grammar: MessageGrammar, state, allowed):
    """Special tokens that strictly reduce the distance to completion."""
    here = grammar.min_tokens_to_close(state)
    moves = []
    for tid in allowed.ids:
        nxt = grammar.step(state, tid)
        if grammar.min_tokens_to_close(nxt) < here:
            moves.append(tid)
    return moves


def generate(model: ArModel, prefix_ids, vocab: Vocabulary, seed: int = 0,
             max_new: int = 256, temperature: float = 0.0, top_k: int = 0):
    """Extend a reply-less message prefix until [REPLY_EOS] or the cap.

    temperature 0 is greedy argmax; otherwise softmax sampling at the
    given temperature, optionally over the top_k candidates. Returns the
    full id sequence (prefix + generated reply tokens).
    """
    grammar = MessageGrammar(vocab)
    state = grammar.initial_state()
    prefix_ids = np.asarray(prefix_ids, dtype=np.int64)
    try:
        for tid in prefix_ids:
            state = grammar.step(state, tid)
    except GrammarError as exc:
        raise GenerationError(f"malformed prefix: {exc}") from exc
    if state.done:
        return prefix_ids.copy()
    rng = np.random.default_rng([seed, 808])
    out = list(prefix_ids)
    for step in range(max_new):
        allowed = grammar.allowed(state)
        if not allowed:
            break
        budget_left = max_new - step
        if budget_left <= grammar.min_tokens_to_close(state) + 1:
            moves = _closing_moves(grammar, state, allowed)
            if moves:
                allowed = type(allowed)(ids=frozenset(moves))
        if allowed.count() == 1:
            tid = next(iter(allowed.ids))
        else:
            logits = model.last_logits(np.asarray([out]))[0]
            mask = allowed.mask(vocab.size)
            logits = np.where(mask, logits, -np.inf)
            tid = _sample(logits, rng, temperature, top_k)
        out.append(int(tid))
        state = grammar.step(state, tid)
        if state.done:
            break
    if not state.done:
        raise GenerationError("budget exhausted before the message closed")
    return np.asarray(out, dtype=np.int64)


def _sample(logits: np.ndarray, rng, temperature: float, top_k: int) -> int:
    if temperature <= 0.0:
        return int(np.argmax(logits))
    scaled = logits / temperature
    if top_k:
        kth = np.partition(scaled, -top_k)[-top_k]
        scaled = np.where(scaled >= kth, scaled, -np.inf)
    scaled = scaled - scaled.max()
    probs = np.exp(scaled)
    probs /= probs.sum()
    return int(rng.choice(len(probs), p=probs))
