"""Single-device training loop: decoupled-weight-decay Adam, warmup/decay
schedule, gradient accumulation, structured metrics log, exact resume."""
from __future__ import annotations

import json
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np
import torch

from ..errors import ConfigurationError, TrainingDivergedError
from ..losses import DEFAULT_WEIGHTS
from ..model.config import ModelConfig
from ..model.network import AmodalReasoner, build_model, compute_losses, conversation_targets
from ..model.vocab import corpus_vocab
from ..evaluation.runner import evaluate_model
from .checkpoint import load_checkpoint, save_checkpoint
from .schedule import lr_at


@dataclass
class TrainConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    total_steps: int = 5000
    warmup_steps: int = 100
    peak_lr: float = 1e-3
    accumulation_steps: int = 4
    batch_size: int = 1
    seed: int = 0
    weight_decay: float = 0.0
    betas: tuple[float, float] = (0.9, 0.999)
    grad_clip: float = 1.0
    loss_weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    freeze_base: bool = False
    eval_every: int = 0  # 0 disables periodic evaluation
    save_every: int = 0  # 0 saves only the final checkpoint
    out_dir: str | None = None

    def __post_init__(self):
        if self.total_steps < 0:
            raise ConfigurationError("total_steps must be >= 0")
        if self.total_steps > 0 and self.warmup_steps >= self.total_steps:
            raise ConfigurationError("warmup_steps must be < total_steps")
        if self.accumulation_steps < 1:
            raise ConfigurationError("accumulation_steps must be >= 1")
        if self.peak_lr <= 0:
            raise ConfigurationError("peak_lr must be > 0")

    def arch_dict(self) -> dict:
        return self.model.to_dict()


class EpochSampler:
    """Shuffled-epoch index stream with a serializable state for exact resume."""

    def __init__(self, n_items: int, seed: int):
        if n_items < 1:
            raise ConfigurationError("dataset yields no (sample, conversation) items")
        self.n_items = n_items
        self.rng = np.random.default_rng([int(seed), 0x7A17])
        self.perm = self.rng.permutation(n_items)
        self.cursor = 0

    def next_index(self) -> int:
        if self.cursor >= self.n_items:
            self.perm = self.rng.permutation(self.n_items)
            self.cursor = 0
        idx = int(self.perm[self.cursor])
        self.cursor += 1
        return idx

    def state_dict(self) -> dict:
        return {
            "rng": self.rng.bit_generator.state,
            "perm": self.perm.tolist(),
            "cursor": self.cursor,
            "n_items": self.n_items,
        }

    def load_state_dict(self, state: dict) -> None:
        if state["n_items"] != self.n_items:
            raise ConfigurationError(
                f"sampler was built for {state['n_items']} items, dataset has {self.n_items}"
            )
        self.rng.bit_generator.state = state["rng"]
        self.perm = np.asarray(state["perm"], dtype=np.int64)
        self.cursor = int(state["cursor"])


@dataclass
class TrainResult:
    model: AmodalReasoner
    history: list[dict]
    checkpoint_path: Path | None
    final_step: int


def _flatten(dataset) -> list:
    items = []
    for sample in dataset:
        for conv in sample.conversations:
            items.append((sample, conv))
    return items


def _snapshot_rng() -> dict:
    return {"torch": torch.get_rng_state()}


def _restore_rng(state: dict) -> None:
    torch.set_rng_state(state["torch"])


def build_vocab_for(dataset) -> tuple[str, ...]:
    from ..synth.templates import lexicon

    return tuple(corpus_vocab(dataset, extra_tokens=lexicon()).tokens)


def train(config: TrainConfig, dataset, eval_dataset=None, resume_from=None,
          stop_condition=None, halt_at_step: int | None = None) -> TrainResult:
    """Run the optimization loop.

    One parameter update per `accumulation_steps` micro-batches; deterministic
    given (config, dataset) on one device. Periodic eval reports and the loss
    breakdown history go to the returned history and, when out_dir is set, to
    out_dir/metrics.jsonl. A non-finite loss aborts with a diagnostic snapshot.

    halt_at_step interrupts the run after that update (checkpoint saved);
    resuming from it is step-identical to a run that never halted.
    """
    model_config = config.model
    if not model_config.vocab:
        model_config = model_config.with_vocab(build_vocab_for(dataset))

    items = _flatten(dataset)
    sampler = EpochSampler(len(items), config.seed)
    start_step = 0

    if resume_from is not None:
        state = load_checkpoint(resume_from)
        if state["model_config"] != model_config.to_dict():
            raise ConfigurationError("checkpoint model config does not match the requested config")
        model_config = ModelConfig.from_dict(state["model_config"])
        model = AmodalReasoner(model_config)
        model.load_state_dict(state["model_state"])
    else:
        model = build_model(model_config, config.seed)
    if config.freeze_base:
        model.text_model.freeze_base()

    trainable = [p for p in model.parameters() if p.requires_grad]
    optimizer = torch.optim.AdamW(
        trainable, lr=config.peak_lr, betas=config.betas, weight_decay=config.weight_decay
    )
    if resume_from is not None:
        optimizer.load_state_dict(state["optimizer_state"])
        sampler.load_state_dict(state["sampler_state"])
        _restore_rng(state["rng_state"])
        start_step = int(state["step"])

    out_dir = Path(config.out_dir) if config.out_dir else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    log_path = out_dir / "metrics.jsonl" if out_dir else None
    log_mode = "a" if (resume_from is not None and log_path and log_path.exists()) else "w"
    log_fh = log_path.open(log_mode) if log_path else None

    def checkpoint_state(step: int) -> dict:
        return {
            "model_config": model_config.to_dict(),
            "train_config": {k: v for k, v in asdict(config).items() if k != "model"},
            "step": step,
            "model_state": model.state_dict(),
            "optimizer_state": optimizer.state_dict(),
            "sampler_state": sampler.state_dict(),
            "rng_state": _snapshot_rng(),
        }

    history: list[dict] = []
    checkpoint_path = out_dir / "checkpoint.pt" if out_dir else None

    def emit(record: dict) -> None:
        history.append(record)
        if log_fh:
            log_fh.write(json.dumps(record, sort_keys=True) + "\n")
            log_fh.flush()

    def run_eval() -> dict | None:
        if eval_dataset is None:
            return None
        model.eval()
        with torch.no_grad():
            report = evaluate_model(model, eval_dataset)
        model.train()
        return report.to_dict()

    model.train()
    final_step = start_step
    try:
        for step in range(start_step + 1, config.total_steps + 1):
            lr = lr_at(step, config.warmup_steps, config.total_steps, config.peak_lr)
            for group in optimizer.param_groups:
                group["lr"] = lr
            optimizer.zero_grad(set_to_none=True)
            step_losses: dict[str, float] = {}
            for _ in range(config.accumulation_steps):
                micro = [items[sampler.next_index()] for _ in range(config.batch_size)]
                micro_total = None
                for sample, conv in micro:
                    outputs = model([(sample, conv)])[0]
                    breakdown = compute_losses(
                        outputs, conversation_targets(sample, conv),
                        model.vocab.pad_id, config.loss_weights,
                    )
                    if not torch.isfinite(breakdown.total):
                        snapshot = {
                            "step": step,
                            "sample_id": sample.sample_id,
                            "losses": breakdown.to_floats(),
                        }
                        if out_dir:
                            (out_dir / "divergence.json").write_text(
                                json.dumps(snapshot, indent=1)
                            )
                        raise TrainingDivergedError(
                            f"non-finite loss at step {step} on sample {sample.sample_id!r}",
                            snapshot,
                        )
                    for name, value in breakdown.to_floats().items():
                        if value is not None:
                            step_losses[name] = step_losses.get(name, 0.0) + value
                    contribution = breakdown.total / len(micro)
                    micro_total = contribution if micro_total is None else micro_total + contribution
                (micro_total / config.accumulation_steps).backward()
            if config.grad_clip > 0:
                torch.nn.utils.clip_grad_norm_(trainable, config.grad_clip)
            optimizer.step()
            final_step = step

            denom = config.accumulation_steps * config.batch_size
            record = {
                "step": step,
                "lr": lr,
                "loss": {k: v / denom for k, v in step_losses.items()},
            }
            if config.eval_every and step % config.eval_every == 0:
                eval_report = run_eval()
                if eval_report is not None:
                    record["eval"] = eval_report
                    if stop_condition is not None and stop_condition(eval_report):
                        emit(record)
                        break
            emit(record)
            if checkpoint_path and config.save_every and step % config.save_every == 0:
                save_checkpoint(checkpoint_state(step), checkpoint_path)
            if halt_at_step is not None and step >= halt_at_step:
                break
        if checkpoint_path:
            save_checkpoint(checkpoint_state(final_step), checkpoint_path)
    finally:
        if log_fh:
            log_fh.close()
    model.eval()
    return TrainResult(model=model, history=history, checkpoint_path=checkpoint_path,
                       final_step=final_step)


def load_model_from_checkpoint(path) -> tuple[AmodalReasoner, dict]:
    """Rebuild an eval-ready model from a checkpoint; returns (model, state)."""
    state = load_checkpoint(path)
    model = AmodalReasoner(ModelConfig.from_dict(state["model_config"]))
    model.load_state_dict(state["model_state"])
    model.eval()
    return model, state
