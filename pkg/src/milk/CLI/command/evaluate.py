import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich import print as rprint
from rich.table import Table

from ...datamodel.imputation import prepare_features
from ...errors import ConfigError, DimensionError
from ...evaluation.evaluator import MetricReport, write_report
from ...evaluation.evaluator import evaluate as run_evaluation
from ...model.params import load_checkpoint
from ..state import CHECKPOINT_FILE, METRICS_DIR, handle_errors, load_bundle, save_run_config, state

logger = logging.getLogger(__name__)


def report_table(report: MetricReport, title: Optional[str] = None) -> Table:
    table = Table(title=title or f"{report.split} 评估 (protocol={report.protocol}, {report.n_users} 用户)")
    table.add_column("分组", style="cyan")
    table.add_column("用户数", justify="right")
    ks = list(report.metrics)
    for k in ks:
        table.add_column(f"Recall@{k}", justify="right")
        table.add_column(f"NDCG@{k}", justify="right")

    def cells(values):
        out = []
        for k in ks:
            metrics = values.get(k)
            out.extend(["-", "-"] if metrics is None else [f"{metrics['recall']:.4f}", f"{metrics['ndcg']:.4f}"])
        return out

    table.add_row("overall", str(report.n_users), *cells(report.metrics))
    for name, payload in report.groups.items():
        table.add_row(name, str(payload["n_users"]), *cells(payload["K"]))
    return table


@handle_errors
def evaluate(
    checkpoint: Annotated[Optional[Path], typer.Option("--checkpoint", help="检查点路径，默认为 <out>/ckpt/best.ckpt")] = None,
    split: Annotated[str, typer.Option("--split", help="评估的划分: val / test")] = "test",
    ks: Annotated[Optional[List[int]], typer.Option("--k", help="截断位置 K，可重复给出")] = None,
    imputation: Annotated[Optional[str], typer.Option("--imputation", help="缺失模态补全: zero / mean / map")] = None,
    groups: Annotated[bool, typer.Option("--groups/--no-groups", help="是否按缺失分组分别报告")] = True
):
    if split not in ("val", "test"):
        raise ConfigError(f"--split 应为 val 或 test，实际为 {split}")
    run = state.replay_run_config(ks=ks or None, imputation=imputation)
    out_dir = Path(run.out_dir)
    checkpoint = checkpoint or out_dir / CHECKPOINT_FILE
    if not checkpoint.is_file():
        raise ConfigError(f"检查点 {checkpoint} 不存在！")

    bundle = load_bundle(run)
    params = load_checkpoint(checkpoint)
    if params.dims != bundle.features.dims or params.n_users != bundle.n_users:
        raise DimensionError(
            f"检查点 ({params.n_users} 用户, 维度 {params.dims}) 与数据 "
            f"({bundle.n_users} 用户, 维度 {bundle.features.dims}) 不匹配"
        )

    _, eval_features = prepare_features(bundle, run.train.imputation)
    report = run_evaluation(bundle, params, eval_features, split, ks=run.ks, group_breakdown=groups)
    path = write_report(report, out_dir / METRICS_DIR, split)
    save_run_config(run)

    rprint(report_table(report))
    rprint(f"[green]评估完成！[/green]报告: {path.resolve()}")
