import logging
from pathlib import Path
from typing import Annotated

import typer
from rich import print as rprint
from rich.table import Table

from ...errors import GradientCheckError
from ...load_config.load_config import BaseConfig
from ...objective.gradcheck import finite_diff_check
from ...objective.gradients import backward
from ..state import METRICS_DIR, handle_errors, state

logger = logging.getLogger(__name__)

DEFAULT_TOLERANCE = 1e-4


def corrupted_backward(*args):
    """梯度检验的负对照：给用户嵌入的梯度乘上 1.5"""
    grads = backward(*args)
    grads.user_embeddings *= 1.5
    return grads


@handle_errors
def gradcheck(
    tol: Annotated[float, typer.Option("--tol", help="允许的最大相对误差")] = DEFAULT_TOLERANCE,
    corrupt_gradient: Annotated[bool, typer.Option("--corrupt-gradient", hidden=True)] = False
):
    run = state.run_config()
    gradient_fn = corrupted_backward if corrupt_gradient else backward
    report = finite_diff_check(seed=run.seed, gradient_fn=gradient_fn)

    table = Table(title=f"梯度检验 ({len(report.trials)} 组随机实例)")
    table.add_column("参数组", style="cyan")
    table.add_column("最大相对误差", justify="right")
    for group, err in sorted(report.per_group.items()):
        style = "green" if err <= tol else "red"
        table.add_row(group, f"[{style}]{err:.3e}[/{style}]")
    rprint(table)

    BaseConfig(Path(run.out_dir) / METRICS_DIR / "gradcheck.json").update_config({**report.to_dict(), "tol": tol})
    rprint(f"max_rel_err = {report.max_rel_error:.3e}")
    if not report.passed(tol):
        raise GradientCheckError(f"最大相对误差 {report.max_rel_error:.3e} 超过容差 {tol:.1e}")
    rprint(f"[green]max_rel_err ≤ {tol:.0e}，梯度检验通过！[/green]")
