import logging
from pathlib import Path
from typing import Annotated, List, Optional

import typer
from rich import print as rprint
from rich.progress import Progress, SpinnerColumn, TextColumn
from rich.table import Table

from ...evaluation.ablation import run_ablation, table_variants
from ...evaluation.evaluator import write_report, write_rows
from ..state import METRICS_DIR, handle_errors, load_bundle, save_run_config, state

logger = logging.getLogger(__name__)


@handle_errors
def ablate(
    table: Annotated[Optional[str], typer.Option("--table", help="消融表: modules / envs / impute / all")] = None,
    variants: Annotated[Optional[List[str]], typer.Option("--variant", help="指定变体，可重复给出，优先于 --table")] = None
):
    run = state.run_config(variants=variants or None)
    if variants:
        names = list(run.variants)
    elif table is not None:
        names = table_variants(table)
    else:
        names = list(run.variants)
    name = f"ablation_{table}" if table and not variants else "ablation"

    bundle = load_bundle(run)
    save_run_config(run)
    with Progress(
        SpinnerColumn(),
        TextColumn("[progress.description]{task.description}"),
        transient=True
    ) as progress:
        task = progress.add_task(description="消融实验中...", total=len(names))

        def on_variant(variant):
            progress.update(task, description=f"训练变体 {variant}...")

        result = run_ablation(bundle, run.train, names, ks=run.ks, on_variant=on_variant)

    metrics_dir = Path(run.out_dir) / METRICS_DIR
    for variant, report in result.reports.items():
        write_report(report, metrics_dir / name, variant.replace(":", "_"))
    rows = result.rows()
    write_rows(rows, metrics_dir / f"{name}.csv")

    output = Table(title=f"消融实验 (protocol={bundle.protocol}, seed={bundle.seed})")
    for column in rows[0]:
        output.add_column(column, style="cyan" if column == "variant" else None, justify="left" if column == "variant" else "right")
    for row in rows:
        output.add_row(*[v if isinstance(v, str) else f"{v:.4f}" for v in row.values()])
    rprint(output)
    rprint(f"[green]消融实验完成！[/green]结果: {(metrics_dir / f'{name}.csv').resolve()}")
