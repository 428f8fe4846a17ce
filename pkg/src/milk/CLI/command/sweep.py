import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich import print as rprint
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ...evaluation.ablation import SWEEP_GRIDS, run_sweep
from ...evaluation.evaluator import write_report, write_rows
from ..state import METRICS_DIR, handle_errors, load_bundle, save_run_config, state

logger = logging.getLogger(__name__)


@handle_errors
def sweep(
    params: Annotated[Optional[List[str]], typer.Option("--param", help="要扫描的超参数: alpha / beta / lambda，可重复给出")] = None
):
    run = state.run_config()
    params = params or list(SWEEP_GRIDS)
    bundle = load_bundle(run)
    save_run_config(run)

    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        transient=True
    ) as progress:
        task = progress.add_task(description="超参数扫描中...")

        def on_run(parameter, value):
            progress.update(task, description=f"训练 {parameter}={value}...")

        rows, reports = run_sweep(bundle, run.train, params, ks=run.ks, on_run=on_run)

    metrics_dir = Path(run.out_dir) / METRICS_DIR
    for key, report in reports.items():
        write_report(report, metrics_dir / "sweep", key)
    write_rows(rows, metrics_dir / "sweep.csv")

    output = Table(title="超参数扫描")
    for column in rows[0]:
        output.add_column(column, justify="left" if column == "parameter" else "right")
    for row in rows:
        output.add_row(row["parameter"], *[f"{v:g}" if column == "value" else f"{v:.4f}" for column, v in row.items() if column != "parameter"])
    rprint(output)
    rprint(f"[green]扫描完成！[/green]结果: {(metrics_dir / 'sweep.csv').resolve()}")
