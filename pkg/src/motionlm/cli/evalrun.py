"""Evaluation pass: tokenizer reconstruction, generation-based metrics,
retrieval/diversity, rhythm metrics, and caption metrics."""
from __future__ import annotations

import numpy as np

from ..data import MotionClip
from ..metrics import (
    GaussianStats, fid, retrieval_metrics, diversity, l1div, recon_metrics,
    extract_motion_beats, bas, beat_f1, text_metrics, CiderScorer,
    OracleEmbedder, RandomProjectionEmbedder, MetricReport,
)
from ..vocab import (Vocabulary, MotionMessage, CaptionPart, MotionPart,
                     AudioPart, TASKS, encode_prefix, parse_message)
from ..armodel import generate, audio_stub_from_beats
from .runconfig import RunConfig


def _embedder(cfg: RunConfig):
    if cfg.eval.embedder == "oracle":
        return OracleEmbedder(dim=cfg.eval.embed_dim)
    if cfg.eval.embedder == "projection":
        return RandomProjectionEmbedder(dim=cfg.eval.embed_dim, seed=cfg.seed)
    raise ValueError(f"unknown embedder {cfg.eval.embedder!r}")


def _mean_metrics(rows):
    keys = rows[0].keys()
    return {k: float(np.mean([r[k] for r in rows])) for k in keys}


def evaluate(cfg: RunConfig, dataset, tokenizer, ar_model, vocab: Vocabulary,
             split: str = "test") -> MetricReport:
    rows = dataset[split] or dataset["val"] or dataset["train"]
    report = MetricReport(seed=cfg.seed)
    emb = _embedder(cfg)

    # ---- tokenizer reconstruction (plain vs flow) --------------------
    plain_rows, flow_rows = [], []
    for clip, entry, _ in rows:
        enc = tokenizer.encode(clip)
        plain = tokenizer.decode_plain(enc.codes, fps=clip.fps,
                                       trim_frames=clip.frames)
        flow = tokenizer.flow_decode(enc.codes, steps=cfg.eval.flow_steps,
                                     seed=cfg.seed, fps=clip.fps,
                                     trim_frames=clip.frames)
        plain_rows.append(recon_metrics(plain, clip))
        flow_rows.append(recon_metrics(flow, clip))
    report.merge("recon_plain", _mean_metrics(plain_rows))
    report.merge("recon_flow", _mean_metrics(flow_rows),
                 flow_steps=cfg.eval.flow_steps)

    # ---- text->motion generation -------------------------------------
    n_gen = min(cfg.eval.generate_samples, len(rows))
    gen_clips, gen_fams = [], []
    for clip, entry, _ in rows[:n_gen]:
        msg = MotionMessage(task="t2m", instruction=TASKS["t2m"].instructions[0],
                            conditions=[CaptionPart(entry.caption)],
                            reply=[MotionPart([[0]])])
        prefix = encode_prefix(msg, vocab)
        out_ids = generate(ar_model, prefix, vocab, seed=cfg.seed,
                           max_new=cfg.eval.max_new,
                           temperature=cfg.eval.temperature)
        reply = parse_message(out_ids, vocab).reply
        codes = reply[0].agents[0] if reply and reply[0].agents else (0,)
        gen = tokenizer.flow_decode(np.asarray([list(codes) or [0]]),
                                    steps=cfg.eval.flow_steps, seed=cfg.seed,
                                    fps=entry.fps)
        gen_clips.append(gen)
        gen_fams.append(entry.family)

    real_feats = np.stack([emb.embed_motion(c) for c, _, _ in rows])
    if len(gen_clips) >= 2:
        gen_feats = np.stack([emb.embed_motion(c) for c in gen_clips])
        if len(real_feats) >= 2:
            report.add("fid_t2m", fid(GaussianStats.fit(real_feats),
                                      GaussianStats.fit(gen_feats)),
                       embedder=cfg.eval.embedder)
        report.add("l1div_generated", l1div(gen_feats))

    # ---- retrieval / diversity on real data --------------------------
    text_feats = np.stack([emb.embed_text(e.caption) for _, e, _ in rows])
    ks = [k for k in cfg.eval.retrieval_ks if k <= len(rows)]
    if ks:
        report.merge("retrieval", retrieval_metrics(real_feats, text_feats, ks=ks),
                     embedder=cfg.eval.embedder, batch=len(rows))
    if len(real_feats) >= 2:
        report.add("diversity_real", diversity(real_feats,
                                               sample_n=cfg.eval.diversity_n,
                                               seed=cfg.seed))
    report.add("l1div_real", l1div(real_feats))

    # ---- rhythm metrics on clips with beat tracks ---------------------
    bas_vals, f1_rows = [], []
    for clip, entry, beats in rows:
        if not beats:
            continue
        found = extract_motion_beats(clip)
        bas_vals.append(bas(found, beats, sigma=cfg.eval.bas_sigma))
        f1_rows.append(beat_f1(beats, found, tolerance=cfg.eval.beat_tolerance))
    if bas_vals:
        report.add("bas", float(np.mean(bas_vals)), sigma=cfg.eval.bas_sigma)
        report.merge("beat", _mean_metrics(f1_rows),
                     tolerance=cfg.eval.beat_tolerance)

    # ---- motion->text captioning --------------------------------------
    refs_by_family = {}
    for _, e, _ in rows:
        refs_by_family.setdefault(e.family, []).append(e.caption)
    cider = CiderScorer(list(refs_by_family.values()))
    text_rows = []
    for clip, entry, _ in rows[:n_gen]:
        enc = tokenizer.encode(clip)
        codes = [list(a) for a in (enc.codes if enc.codes.ndim == 2
                                   else enc.codes[..., 0])]
        msg = MotionMessage(task="m2t", instruction=TASKS["m2t"].instructions[0],
                            conditions=[MotionPart(codes)],
                            reply=[CaptionPart("x")])
        prefix = encode_prefix(msg, vocab)
        out_ids = generate(ar_model, prefix, vocab, seed=cfg.seed,
                           max_new=cfg.eval.max_new,
                           temperature=cfg.eval.temperature)
        reply = parse_message(out_ids, vocab).reply
        caption = reply[0].text if reply else ""
        refs = refs_by_family.get(entry.family, [entry.caption])
        text_rows.append(text_metrics(caption, refs, cider=cider))
    if text_rows:
        report.merge("m2t", _mean_metrics(text_rows))
    return report
