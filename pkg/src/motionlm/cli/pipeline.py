"""Staged end-to-end run with content-hash resumability.

Each stage writes its artifacts plus a stamp recording a hash of the
stage-relevant config, the code version, and the upstream artifact
hashes. A rerun skips stages whose stamps still match; deleting any
artifact (or changing config upstream) re-runs exactly the stages
downstream of the change.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .. import __version__
from ..data import (MotionClip, read_clip, write_clip, synth_generate,
                    ManifestEntry, save_manifest, load_manifest, write_beats,
                    read_beats)
from ..data.synth import _GENRES  # deterministic genre pool
from ..flowvq import FlowVqModel, train_stage1, train_stage2
from ..vocab import Vocabulary, TextTokenizer, TASKS, parse_message
from ..armodel import (ArModel, TrainingStage, train_stage, build_corpus,
                       generate, eval_loss)
from ..armodel.train import encode_corpus
from .runconfig import RunConfig


class StageFailure(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


def _hash_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _hash_tree(root: Path) -> str:
    root = Path(root)
    digest = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file() and p.name != "stamp.json":
            digest.update(p.relative_to(root).as_posix().encode())
            digest.update(_hash_file(p).encode())
    return digest.hexdigest()


def _hash_config(payload: dict) -> str:
    blob = json.dumps(payload, sort_keys=True) + __version__
    return hashlib.sha256(blob.encode()).hexdigest()


class Stage:
    """One resumable pipeline step."""

    def __init__(self, name: str, out_dir: Path, config_payload: dict,
                 upstream: list):
        self.name = name
        self.dir = Path(out_dir)
        self.config_hash = _hash_config(config_payload)
        self.upstream = [Path(u) for u in upstream]

    def _stamp(self) -> dict:
        return {
            "stage": self.name,
            "config": self.config_hash,
            "version": __version__,
            "inputs": {u.name: _hash_tree(u) for u in self.upstream},
        }

    def fresh(self) -> bool:
        stamp_path = self.dir / "stamp.json"
        if not stamp_path.exists():
            return False
        try:
            return json.loads(stamp_path.read_text()) == self._stamp()
        except (json.JSONDecodeError, OSError):
            return False

    def run(self, fn, log=print):
        if self.fresh():
            log(f"[pipeline] {self.name}: up to date, skipping")
            return False
        log(f"[pipeline] {self.name}: running")
        self.dir.mkdir(parents=True, exist_ok=True)
        try:
            fn(self.dir)
        except Exception as exc:
            raise StageFailure(self.name, exc) from exc
        (self.dir / "stamp.json").write_text(
            json.dumps(self._stamp(), indent=1, sort_keys=True), encoding="utf-8")
        return True


# ----------------------------------------------------------------- dataset

def synth_dataset(cfg: RunConfig, out_dir: Path) -> None:
    """Generate clips + captions + beat tracks + manifest."""
    rng = np.random.default_rng([cfg.seed, 1313])
    d = cfg.data
    entries = []
    for i in range(d.clips):
        family = d.families[i % len(d.families)]
        agents = 1
        if d.max_agents > 1 and rng.random() < d.multi_agent_fraction:
            agents = int(rng.integers(2, d.max_agents + 1))
        clip, caption, beats = synth_generate(family, cfg.seed * 100003 + i,
                                              d.frames, agents, d.joints, d.fps)
        name = f"clip{i:05d}"
        write_clip(clip, out_dir / f"{name}.motc")
        beat_file = None
        if beats:
            beat_file = f"{name}.beats.json"
            write_beats(beats, out_dir / beat_file)
        r = rng.random()
        split = "test" if r < d.test_fraction else (
            "val" if r < d.test_fraction + d.val_fraction else "train")
        genre = _GENRES[int(rng.integers(len(_GENRES)))] if beats else None
        entries.append(ManifestEntry(
            clip=f"{name}.motc", fps=d.fps, agents=agents, split=split,
            caption=caption, beats=beat_file, family=family, genre=genre,
            tasks=sorted(TASKS)))
    save_manifest(entries, out_dir / "manifest.json")


def load_dataset(data_dir: Path):
    """Manifest -> dict of split -> list of (clip, entry, beats)."""
    entries = load_manifest(Path(data_dir) / "manifest.json", check_files=False)
    out = {"train": [], "val": [], "test": []}
    for e in entries:
        clip = read_clip(Path(data_dir) / e.clip)
        beats = read_beats(Path(data_dir) / e.beats) if e.beats else []
        out[e.split].append((clip, e, beats))
    return out


# ------------------------------------------------------------------ corpus

def build_vocab(cfg: RunConfig, dataset) -> Vocabulary:
    captions = [e.caption for split in dataset.values() for _, e, _ in split]
    templates = [t for spec in TASKS.values() for t in spec.instructions]
    genres = list(_GENRES)
    tok = TextTokenizer.train(captions + templates + genres,
                              vocab_size=cfg.pipeline.text_vocab)
    return Vocabulary(tok)


def build_messages(cfg: RunConfig, dataset, tokenizer: FlowVqModel, split: str):
    rows = dataset[split]
    if not rows:
        return []
    clips = [r[0] for r in rows]
    captions = [r[1].caption for r in rows]
    families = [r[1].family for r in rows]
    beats = [r[2] for r in rows]
    genres = [r[1].genre for r in rows]
    samples = build_corpus(clips, captions, families, beats, tokenizer,
                           seed=cfg.seed, p_optional=cfg.pipeline.p_optional,
                           genres=genres)
    return [s.message for s in samples]


# ------------------------------------------------------------- eval driver

def run_eval(cfg: RunConfig, dataset, tokenizer: FlowVqModel,
             ar_model: ArModel, vocab: Vocabulary, out_dir: Path) -> None:
    from .evalrun import evaluate
    report = evaluate(cfg, dataset, tokenizer, ar_model, vocab)
    report.save(Path(out_dir) / "report.json")


# ----------------------------------------------------------------- pipeline

def run_pipeline(cfg: RunConfig, log=print) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg.echo(out / "config.json")
    data_dir = out / "data"
    tok_dir = out / "tokenizer"
    corpus_dir = out / "corpus"
    ar_dir = out / "ar"
    eval_dir = out / "eval"
    cfg_d = cfg.to_dict()

    Stage("synth", data_dir, {"seed": cfg.seed, "data": cfg_d["data"]}, []).run(
        lambda d: synth_dataset(cfg, d), log)

    dataset = load_dataset(data_dir)
    train_clips = [c for c, _, _ in dataset["train"]]

    def do_train_vq(d):
        model, losses = train_stage1(train_clips, cfg.tokenizer, seed=cfg.seed)
        model.save(d / "bundle")
        (d / "stage1_losses.json").write_text(json.dumps(losses))

    Stage("train-vq", tok_dir / "stage1",
          {"seed": cfg.seed, "tokenizer": cfg_d["tokenizer"]},
          [data_dir]).run(do_train_vq, log)

    def do_train_flow(d):
        model = FlowVqModel.load(tok_dir / "stage1" / "bundle")
        model, losses = train_stage2(train_clips, model, seed=cfg.seed)
        model.save(d / "bundle")
        (d / "stage2_losses.json").write_text(json.dumps(losses))

    Stage("train-flow", tok_dir / "flow",
          {"seed": cfg.seed, "tokenizer": cfg_d["tokenizer"]},
          [data_dir, tok_dir / "stage1"]).run(do_train_flow, log)

    tokenizer = FlowVqModel.load(tok_dir / "flow" / "bundle")

    def do_corpus(d):
        vocab = build_vocab(cfg, dataset)
        vocab.save(d / "vocab.txt")
        for split in ("train", "val"):
            msgs = build_messages(cfg, dataset, tokenizer, split)
            rendered = [
                {"task": m.task, "ids": [int(t) for t in _msg_ids(m, vocab)]}
                for m in msgs
            ]
            (d / f"{split}.json").write_text(json.dumps(rendered))

    Stage("build-corpus", corpus_dir,
          {"seed": cfg.seed, "pipeline": cfg_d["pipeline"]},
          [data_dir, tok_dir / "flow"]).run(do_corpus, log)

    vocab = Vocabulary.load(corpus_dir / "vocab.txt")
    train_msgs = build_messages(cfg, dataset, tokenizer, "train")
    val_msgs = build_messages(cfg, dataset, tokenizer, "val")

    def do_ar(stage_name, stage, src_dir=None):
        def inner(d):
            base = ArModel.load(src_dir) if src_dir else None
            model, trace = train_stage(train_msgs, stage, vocab, cfg.ar,
                                       seed=cfg.seed, model=base,
                                       val_corpus=val_msgs)
            model.save(d)
            (d / "trace.json").write_text(json.dumps(trace))
        return inner

    Stage("train-ar-pretrain", ar_dir / "generalist_pre",
          {"seed": cfg.seed, "ar": cfg_d["ar"]}, [corpus_dir]).run(
        do_ar("pretrain", TrainingStage("generalist-pretrain")), log)

    Stage("train-ar-gen-sft", ar_dir / "generalist_sft",
          {"seed": cfg.seed, "ar": cfg_d["ar"]},
          [corpus_dir, ar_dir / "generalist_pre"]).run(
        do_ar("gen-sft", TrainingStage("generalist-sft"),
              src_dir=ar_dir / "generalist_pre"), log)

    task = cfg.pipeline.specialist_task
    Stage(f"train-ar-spec-{task}", ar_dir / f"specialist_{task}",
          {"seed": cfg.seed, "ar": cfg_d["ar"], "task": task},
          [corpus_dir, ar_dir / "generalist_sft"]).run(
        do_ar("spec", TrainingStage("specialist-sft", task_filter=(task,)),
              src_dir=ar_dir / "generalist_sft"), log)

    ar_model = ArModel.load(ar_dir / f"specialist_{task}")

    Stage("eval", eval_dir,
          {"seed": cfg.seed, "eval": cfg_d["eval"], "task": task},
          [data_dir, tok_dir / "flow", ar_dir / f"specialist_{task}"]).run(
        lambda d: run_eval(cfg, dataset, tokenizer, ar_model, vocab, d), log)
    return out


def _msg_ids(msg, vocab):
    from ..vocab import encode_message
    ids, _ = encode_message(msg, vocab)
    return ids
