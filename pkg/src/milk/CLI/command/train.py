import dataclasses
import logging
from pathlib import Path
from typing import Annotated, Optional

import typer
from rich import print as rprint
from rich.progress import Progress, SpinnerColumn, TextColumn

from ...errors import DivergenceError
from ...evaluation.ablation import variant_config
from ...load_config.load_config import RunConfig, manifestConfig
from ...model.params import save_checkpoint
from ...objective.trainer import train as run_training
from ...objective.trainer import write_history
from ..state import CHECKPOINT_FILE, HISTORY_FILE, handle_errors, load_bundle, save_run_config, state, write_split

logger = logging.getLogger(__name__)


def resolve_train_run(run: RunConfig, variant: Optional[str]) -> RunConfig:
    if variant is None:
        return run
    return dataclasses.replace(run, train=variant_config(run.train, variant))


@handle_errors
def train(
    variant: Annotated[Optional[str], typer.Option("--variant", help="模型变体: full / no_cmam / no_ceim / no_both / env:* / impute:*")] = None,
    beta: Annotated[Optional[float], typer.Option("--beta", help="环境损失方差惩罚系数")] = None,
    lambda_: Annotated[Optional[float], typer.Option("--lambda", help="跨模态对齐损失系数")] = None,
    alpha: Annotated[Optional[float], typer.Option("--alpha", help="Dirichlet 集中参数")] = None,
    gamma_reg: Annotated[Optional[float], typer.Option("--gamma-reg", help="L2 正则系数")] = None,
    lr: Annotated[Optional[float], typer.Option("--lr", help="Adam 学习率")] = None,
    d: Annotated[Optional[int], typer.Option("--d", help="嵌入维度")] = None,
    batch_size: Annotated[Optional[int], typer.Option("--batch-size", help="批大小")] = None,
    max_epochs: Annotated[Optional[int], typer.Option("--epochs", help="最大 epoch 数")] = None,
    patience: Annotated[Optional[int], typer.Option("--patience", help="提前停止的容忍评估次数")] = None,
    eval_every: Annotated[Optional[int], typer.Option("--eval-every", help="每隔多少个 epoch 验证一次")] = None,
    env_variant: Annotated[Optional[str], typer.Option("--env-variant", help="环境构造方式: full / no_e0 / no_cyclic_shift / frozen / single")] = None,
    imputation: Annotated[Optional[str], typer.Option("--imputation", help="缺失模态补全: zero / mean / map")] = None,
    select_k: Annotated[Optional[int], typer.Option("--select-k", help="早停所用的 Recall@K")] = None
):
    run = state.run_config(
        beta=beta,
        lambda_=lambda_,
        alpha=alpha,
        gamma_reg=gamma_reg,
        lr=lr,
        d=d,
        batch_size=batch_size,
        max_epochs=max_epochs,
        patience=patience,
        eval_every=eval_every,
        env_variant=env_variant,
        imputation=imputation,
        select_k=select_k,
    )
    run = resolve_train_run(run, variant)
    out_dir = Path(run.out_dir)

    bundle = load_bundle(run)
    if not manifestConfig(out_dir).config_path.is_file():
        write_split(bundle, out_dir)
    save_run_config(run)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        transient=True
    ) as progress:
        task = progress.add_task(description="训练中...", total=run.train.max_epochs)

        def on_epoch(record):
            metric = record.get(f"val_recall@{run.train.select_k}")
            shown = f", val recall@{run.train.select_k}={metric:.4f}" if metric is not None else ""
            progress.update(task, advance=1, description=f"epoch {record['epoch']}: loss={record['total']:.4f}{shown}")

        try:
            result = run_training(bundle, run.train, on_epoch=on_epoch)
        except DivergenceError as e:
            if e.last_good is not None:
                save_checkpoint(e.last_good, out_dir / "ckpt" / "last_good.ckpt")
                rprint(f"[yellow]最近一次的最优参数已保存到 {out_dir / 'ckpt' / 'last_good.ckpt'}[/yellow]")
            raise

    save_checkpoint(result.params, out_dir / CHECKPOINT_FILE)
    write_history(result.history, out_dir / HISTORY_FILE)

    stopped = "，已提前停止" if result.stopped_early else ""
    rprint(f"[green]训练完成！[/green]最优 epoch {result.best_epoch}{stopped}")
    rprint(f"检查点: {(out_dir / CHECKPOINT_FILE).resolve()}")
